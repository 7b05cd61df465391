//! Configuration loading, validation, and canonical hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charfun::{CharCtx, Datum};
use crate::linalg::FpMat;
use crate::Error;

fn default_enum_budget() -> u128 {
    1 << 24
}
fn default_oracle_pairs() -> usize {
    1000
}
fn default_ladder_samples() -> usize {
    200
}
fn default_ladder_samples_r4() -> usize {
    50
}
fn default_lemma_samples() -> usize {
    1000
}
fn default_chain_samples() -> usize {
    10_000
}
fn default_tau_samples() -> usize {
    1000
}
fn default_extra_bases() -> usize {
    5
}
fn default_transform_samples() -> usize {
    24
}
fn default_compare_samples() -> usize {
    200
}

/// Sample counts and size limits; all have defaults so config files can stay
/// minimal.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Budgets {
    #[serde(default = "default_enum_budget")]
    pub max_enumeration: u128,
    #[serde(default = "default_oracle_pairs")]
    pub oracle_pairs: usize,
    #[serde(default = "default_ladder_samples")]
    pub ladder_samples: usize,
    #[serde(default = "default_ladder_samples_r4")]
    pub ladder_samples_r4: usize,
    #[serde(default = "default_lemma_samples")]
    pub lemma_samples: usize,
    #[serde(default = "default_chain_samples")]
    pub chain_samples: usize,
    #[serde(default = "default_tau_samples")]
    pub tau_samples: usize,
    #[serde(default = "default_extra_bases")]
    pub fourier_extra_bases: usize,
    #[serde(default = "default_transform_samples")]
    pub transform_samples: usize,
    #[serde(default = "default_compare_samples")]
    pub compare_samples: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_enumeration: default_enum_budget(),
            oracle_pairs: default_oracle_pairs(),
            ladder_samples: default_ladder_samples(),
            ladder_samples_r4: default_ladder_samples_r4(),
            lemma_samples: default_lemma_samples(),
            chain_samples: default_chain_samples(),
            tau_samples: default_tau_samples(),
            fourier_extra_bases: default_extra_bases(),
            transform_samples: default_transform_samples(),
            compare_samples: default_compare_samples(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Config {
    pub n: usize,
    pub p: u64,
    pub r: usize,
    /// r-1 diagonal vectors mod p, highest index regular semisimple.
    #[serde(default)]
    pub a: Vec<Vec<i64>>,
    pub lambda0: Vec<i64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub force: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, Error> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(2..=3).contains(&self.n) {
            return Err(Error::Config(format!("n = {} unsupported (need 2 or 3)", self.n)));
        }
        if self.p % 2 == 0 || !crate::fp::is_prime(self.p) {
            return Err(Error::Config(format!("p = {} is not an odd prime", self.p)));
        }
        if !(1..=6).contains(&self.r) {
            return Err(Error::Config(format!("r = {} out of range 1..=6", self.r)));
        }
        if (self.p as usize) < self.r {
            return Err(Error::Config(format!("p >= r violated: p = {}, r = {}", self.p, self.r)));
        }
        if self.r > 4 {
            // only the polynomial tables run beyond r = 4
            return Ok(());
        }
        self.datum()?.validate(self.n, self.p, self.r)
    }

    pub fn datum(&self) -> Result<Datum, Error> {
        let mut a = Vec::with_capacity(self.a.len());
        for (j, v) in self.a.iter().enumerate() {
            if v.len() != self.n {
                return Err(Error::Config(format!(
                    "A_{} has length {}, expected {}",
                    j + 1,
                    v.len(),
                    self.n
                )));
            }
            let entries: Vec<u64> = v.iter().map(|&e| e.rem_euclid(self.p as i64) as u64).collect();
            a.push(FpMat::diag(self.p, &entries));
        }
        Ok(Datum { a, lambda0: self.lambda0.clone() })
    }

    pub fn char_ctx(&self) -> Result<CharCtx, Error> {
        CharCtx::new(self.n, self.p, self.r, self.datum()?)
    }

    /// Canonical serialization: sorted keys, no whitespace.
    pub fn canonical_json(&self) -> String {
        // serde_json maps sort keys, so value round-tripping canonicalizes
        serde_json::to_value(self).expect("config serializes").to_string()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Config {
        Config {
            n: 2,
            p: 3,
            r: 2,
            a: vec![vec![1, 2]],
            lambda0: vec![1, 0],
            seed: 0,
            budgets: Budgets::default(),
            force: false,
        }
    }

    #[test]
    fn accepts_flagship() {
        base().validate().unwrap();
    }

    #[test]
    fn rejects_p_smaller_than_r() {
        let mut cfg = base();
        cfg.r = 4;
        cfg.a = vec![vec![0, 0], vec![0, 0], vec![1, 2]];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("p >= r"), "{err}");
    }

    #[test]
    fn rejects_degenerate_top_datum() {
        let mut cfg = base();
        cfg.a = vec![vec![1, 1]];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("not regular"), "{err}");
    }

    #[test]
    fn canonical_hash_is_stable_and_key_sorted() {
        let cfg = base();
        let js = cfg.canonical_json();
        assert!(!js.contains(' '));
        // keys of the top-level object come out sorted
        let a_pos = js.find("\"a\"").unwrap();
        let n_pos = js.find("\"n\"").unwrap();
        let seed_pos = js.find("\"seed\"").unwrap();
        assert!(a_pos < n_pos && n_pos < seed_pos);
        assert_eq!(cfg.hash(), cfg.hash());
        let mut other = base();
        other.seed = 1;
        assert_ne!(cfg.hash(), other.hash());
    }
}
