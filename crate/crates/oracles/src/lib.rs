//! Independent reference implementations used to check the `tradelab`
//! library.
//!
//! Nothing in this crate depends on `tradelab`: every oracle is a literal,
//! slow re-statement of a formula over plain slices, so a bug in the library
//! cannot leak into the value it is checked against.

pub mod factors;
pub mod mock_provider;
pub mod stats;
pub mod synthetic;

pub use factors::{naive_rolling, OhlcvColumns, FAMILIES, KBAR_NAMES};
pub use mock_provider::{MockProvider, MockResponse, RecordedRequest};
pub use stats::{average_ranks, brute_mdd, brute_pearson, brute_spearman};
pub use synthetic::{PathKind, SynthBar, SyntheticPathSpec};
