//! On-disk cache of `solve` records keyed by a SHA-256 of the problem and tolerances.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use gslab_core::ode_core::ProblemParams;
use gslab_core::shooting::ShootControls;

use crate::record::{Payload, ResultRecord};

pub const VERSION_TAG: &str = concat!("gslab-", env!("CARGO_PKG_VERSION"));

/// Hex digest of (family, N, p, q, ε, every tolerance, version tag).
pub fn cache_key(params: &ProblemParams, ctrl: &ShootControls) -> String {
    let mut h = Sha256::new();
    h.update(VERSION_TAG.as_bytes());
    h.update(params.family().as_str().as_bytes());
    h.update(params.n().to_le_bytes());
    for v in [params.p(), params.q(), params.eps()] {
        h.update(v.to_bits().to_le_bytes());
    }
    let s = &ctrl.step;
    for v in [ctrl.amp_tol, s.atol, s.rtol, s.min_step, s.event_tol, s.underflow] {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update((ctrl.max_iter as u64).to_le_bytes());
    h.update((s.max_steps as u64).to_le_bytes());
    for v in [ctrl.amp_search_range.map(|r| r.0), ctrl.amp_search_range.map(|r| r.1), ctrl.r_max] {
        match v {
            Some(x) => {
                h.update([1]);
                h.update(x.to_bits().to_le_bytes());
            }
            None => h.update([0]),
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Cached solution record for `params`, if present and readable.
    pub fn load(&self, key: &str, params: &ProblemParams) -> Option<ResultRecord> {
        let bytes = fs::read(self.path(key)).ok()?;
        let rec = ResultRecord::parse(&bytes).ok()?;
        match &rec.payload {
            Payload::Solution(s) if s.params == *params => Some(rec),
            _ => None,
        }
    }

    pub fn store(&self, key: &str, rec: &ResultRecord) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{key}.tmp"));
        fs::write(&tmp, rec.to_bytes())?;
        fs::rename(&tmp, self.path(key))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
