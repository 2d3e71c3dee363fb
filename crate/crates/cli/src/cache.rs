//! Content-addressed on-disk cache for series expansions.
//!
//! An entry is keyed by a digest of the exact bit patterns of `(a, m, N, x)`
//! and stores the expansion coefficients, which are expensive to build and
//! reusable across spectral points. The cache is strictly best-effort:
//! a missing directory, an unwritable location, a corrupt or truncated
//! entry, or an entry that fails validation all degrade to recomputation
//! and are never fatal. Writes go to a temporary file in the cache
//! directory followed by a rename, so concurrent readers never observe a
//! partial entry.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cmeig_core::ba::SeriesExpansion;
use cmeig_core::params::WeightVector;

/// Environment variable naming the cache directory; `.cmeig-cache/` under
/// the working directory when unset.
pub const CACHE_DIR_ENV: &str = "CMEIG_CACHE_DIR";

const DEFAULT_DIR: &str = ".cmeig-cache";

/// Serializable mirror of [`SeriesExpansion`]: weights are stored by their
/// labels (the induced weight entries are recomputed on load) and complex
/// numbers as re/im pairs.
#[derive(Serialize, Deserialize)]
struct CachedSeries {
    n: usize,
    p: u32,
    base_point: Vec<(f64, f64)>,
    terms: Vec<(Vec<u32>, f64, f64)>,
}

impl CachedSeries {
    fn from_series(series: &SeriesExpansion) -> CachedSeries {
        CachedSeries {
            n: series.n,
            p: series.p,
            base_point: series.base_point.iter().map(|z| (z.re, z.im)).collect(),
            terms: series
                .terms
                .iter()
                .map(|(w, c)| (w.labels.clone(), c.re, c.im))
                .collect(),
        }
    }

    /// Reconstructs the expansion, validating shape and enumeration order;
    /// any inconsistency means the entry is unusable.
    fn into_series(self, a: f64, m: u32, x: &[Complex64]) -> Option<SeriesExpansion> {
        let n = x.len();
        if self.n != n || m == 0 || self.p != m - 1 || self.base_point.len() != n {
            return None;
        }
        let same_bits =
            self.base_point.iter().zip(x).all(|(&(re, im), z)| {
                re.to_bits() == z.re.to_bits() && im.to_bits() == z.im.to_bits()
            });
        if !same_bits {
            return None;
        }
        let _ = a; // `a` participates through the key digest only.
        let np = n * (n - 1) / 2;
        let expected: Option<usize> = (self.p as usize + 1).checked_pow(np as u32);
        if expected != Some(self.terms.len()) {
            return None;
        }
        // Labels must be the full lexicographic enumeration in order: the
        // contraction does not care, but `leading()` and any indexed use do.
        let mut prev: Option<&[u32]> = None;
        for (labels, re, im) in &self.terms {
            if labels.len() != np
                || labels.iter().any(|&l| l > self.p)
                || !re.is_finite()
                || !im.is_finite()
            {
                return None;
            }
            if let Some(p) = prev {
                if p >= labels.as_slice() {
                    return None;
                }
            }
            prev = Some(labels);
        }
        let terms = self
            .terms
            .into_iter()
            .map(|(labels, re, im)| {
                (
                    WeightVector::from_labels(n, self.p, labels),
                    Complex64::new(re, im),
                )
            })
            .collect();
        Some(SeriesExpansion {
            n,
            p: self.p,
            base_point: x.to_vec(),
            terms,
        })
    }
}

/// Handle on the cache directory. Construction never touches the
/// filesystem; every operation is fallible-silent.
pub struct SeriesCache {
    dir: PathBuf,
}

impl SeriesCache {
    pub fn from_env() -> SeriesCache {
        let dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DIR));
        SeriesCache { dir }
    }

    /// Content address of an expansion request: SHA-256 over the exact bit
    /// patterns of `a`, `m`, `N`, and the base point.
    pub fn key(a: f64, m: u32, x: &[Complex64]) -> String {
        let mut hasher = Sha256::new();
        hasher.update(a.to_bits().to_le_bytes());
        hasher.update(m.to_le_bytes());
        hasher.update((x.len() as u64).to_le_bytes());
        for z in x {
            hasher.update(z.re.to_bits().to_le_bytes());
            hasher.update(z.im.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Loads and validates an entry; `None` on any miss, parse failure, or
    /// mismatch with the request.
    pub fn load(&self, key: &str, a: f64, m: u32, x: &[Complex64]) -> Option<SeriesExpansion> {
        let text = std::fs::read_to_string(self.entry_path(key)).ok()?;
        let cached: CachedSeries = serde_json::from_str(&text).ok()?;
        cached.into_series(a, m, x)
    }

    /// Best-effort store: write to a temporary file in the cache directory,
    /// then rename over the final name. All failures are swallowed.
    pub fn store(&self, key: &str, series: &SeriesExpansion) {
        if std::fs::create_dir_all(&self.dir).is_err() {
            return;
        }
        let Ok(json) = serde_json::to_string(&CachedSeries::from_series(series)) else {
            return;
        };
        let tmp = self.dir.join(format!("{key}.tmp.{}", std::process::id()));
        if std::fs::write(&tmp, json).is_err() {
            let _ = std::fs::remove_file(&tmp);
            return;
        }
        if std::fs::rename(&tmp, self.entry_path(key)).is_err() {
            let _ = std::fs::remove_file(&tmp);
        }
    }
}
