//! Exact verification toolkit for character sums on GL_n over truncated
//! polynomial rings F_q[e]/(e^r).
//!
//! Everything is computed in exact arithmetic: F_p for Lie-algebra data,
//! Z[zeta_N] with N = p(p-1) for character values. The crate provides
//!
//! * truncated BCH polynomials and a factored-coordinate group model for
//!   GL_n(F_q[e]/(e^r)), cross-checked against plain matrix arithmetic;
//! * induced characters, their Gerardin-type exponential-sum counterparts,
//!   and the interpolating ladder between them;
//! * fiberwise discrete Fourier transforms with closed-form support and
//!   value predictions for r = 2, 3, 4, plus the identity suites the
//!   predictions rest on.

pub mod bch;
pub mod cache;
pub mod charfun;
pub mod chars;
pub mod config;
pub mod cyc;
pub mod fourier;
pub mod fp;
pub mod grgroup;
pub mod liealg;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod suites;

pub use chars::Scalars;
pub use cyc::{CycCtx, CycValue};
pub use fp::{FieldCtx, SplitMix64};
pub use linalg::FpMat;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("enumeration budget exceeded: would require {required} elements (limit {limit}); pass --force to override")]
    Budget { required: u128, limit: u128 },
    #[error("element is not in the expected subgroup: {0}")]
    NotInSubgroup(String),
    #[error("matrix is not invertible")]
    Singular,
    #[error("element is not regular semisimple over F_p: {0}")]
    NotRegular(String),
    #[error("linear constraint system is inconsistent: {0}")]
    Unsolvable(String),
    #[error("not a Lie element: {0}")]
    NotLie(String),
    #[error("sample violates the stratum conditions: {0}")]
    StratumViolation(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
