//! Provider client against the scripted loopback server, and scaler
//! train/test isolation.

mod common;

#[test]
fn retry_after_429_takes_two_requests() {
    common::ingest_retry().unwrap();
}

#[test]
fn exhaustion_uses_every_retry() {
    common::ingest_exhaustion().unwrap();
}

#[test]
fn rate_limit_holds_on_the_transcript() {
    common::ingest_rate_limit().unwrap();
}

#[test]
fn scaler_ignores_test_rows() {
    common::scaler_leakage().unwrap();
}
