use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{compute_alpha158, FactorError, FactorMatrix, WindowSet};
use crate::types::AssetSeries;

/// SHA-256 over the exact bit patterns of every bar.
pub fn data_digest(series: &AssetSeries) -> String {
    let mut h = Sha256::new();
    h.update(series.symbol.as_bytes());
    for b in &series.bars {
        let ts = b.timestamp.and_utc();
        h.update(ts.timestamp().to_le_bytes());
        h.update(ts.timestamp_subsec_nanos().to_le_bytes());
        for v in [b.open, b.high, b.low, b.close, b.volume, b.adjusted_close.unwrap_or(f64::NAN)] {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// On-disk cache of factor matrices keyed by (symbol, data digest, windows).
#[derive(Debug, Clone)]
pub struct FactorCache {
    dir: PathBuf,
}

impl FactorCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FactorCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, series: &AssetSeries, windows: &WindowSet) -> PathBuf {
        let digest = data_digest(series);
        let ws: Vec<String> = windows.windows().iter().map(|w| w.to_string()).collect();
        let symbol: String =
            series.symbol.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        self.dir.join(format!("{symbol}-{}-w{}.tlfm", &digest[..16], ws.join("_")))
    }

    /// Loads a cached matrix if present and readable.
    pub fn get(&self, series: &AssetSeries, windows: &WindowSet) -> Option<FactorMatrix> {
        let bytes = fs::read(self.path_for(series, windows)).ok()?;
        FactorMatrix::read_binary(bytes.as_slice()).ok()
    }

    /// Cached matrix, or computes and stores it (temp file + rename).
    pub fn get_or_compute(&self, series: &AssetSeries, windows: &WindowSet) -> Result<FactorMatrix, FactorError> {
        if let Some(hit) = self.get(series, windows) {
            return Ok(hit);
        }
        let fm = compute_alpha158(series, windows)?;
        let path = self.path_for(series, windows);
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(&self.dir)?;
            let mut buf = Vec::new();
            fm.write_binary(&mut buf).map_err(std::io::Error::other)?;
            let tmp = path.with_extension("tlfm.tmp");
            fs::write(&tmp, buf)?;
            fs::rename(tmp, &path)
        };
        if let Err(e) = write() {
            log::warn!("factor cache write failed for {}: {e}", path.display());
        }
        Ok(fm)
    }
}
