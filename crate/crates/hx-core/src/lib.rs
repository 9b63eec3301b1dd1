//! Exact symbolic kernel for bounded hyperseries over the formal variable `w`.
//!
//! The kernel provides ordinal arithmetic in Cantor normal form, well-based
//! series over an ordered monomial group, hyperserial normal forms with the
//! hyperlogarithms `L[g]` and hyperexponentials `E[g]`, coding sequences for
//! nested numbers, path analysis, the ordinal-valued complexity function
//! `zeta`, and canonical right compositions (substitution of an atomic
//! element for `w`).
//!
//! All arithmetic is exact: coefficients live in the rationals extended by
//! formal constants `log p` (p prime) and `e^q` (q rational), compared by
//! interval arithmetic with escalating precision.

pub mod complexity;
pub mod compose;
pub mod constants;
pub mod lhyper;
pub mod nested;
pub mod ordinal;
pub mod paths;
pub mod series;

pub mod hyperseries;

use std::cell::RefCell;

/// Kernel-wide error type. The CLI maps the variants onto stable exit codes.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum Error {
    /// Input outside an operation's domain (log of a non-positive series,
    /// `L[g]` of a non-infinite argument, zeta of an irrational coefficient,
    /// an unsupported presentation, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Exactness failure: a constant left the computable field or a sign
    /// could not be decided within the precision cap.
    #[error("exactness error: {0}")]
    Exactness(String),
    /// A configured depth or work budget was exhausted.
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Tunable limits. Mirrored by CLI flags and `HX_*` environment variables.
#[derive(Debug, Clone)]
pub struct Config {
    /// Materialization order for Taylor/Mercator tails.
    pub taylor_order: usize,
    /// Hard cap for sign-decision interval precision, in bits.
    pub precision_bits: u32,
    /// Maximum number of leading terms examined by series comparison.
    pub cmp_terms: usize,
    /// Recursive depth cap (ordinal nesting, monomial comparison, rewrites).
    pub depth_cap: usize,
    /// Global cap on lazy stream pulls per operation.
    pub stream_budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            taylor_order: 16,
            precision_bits: 4096,
            cmp_terms: 64,
            depth_cap: 32,
            stream_budget: 200_000,
        }
    }
}

thread_local! {
    static CONFIG: RefCell<Config> = RefCell::new(Config::default());
}

/// Read a copy of the active configuration.
pub fn config() -> Config {
    CONFIG.with(|c| c.borrow().clone())
}

/// Replace the active configuration for this thread.
pub fn set_config(cfg: Config) {
    CONFIG.with(|c| *c.borrow_mut() = cfg);
}

/// Run `f` under a modified configuration, restoring the previous one after.
pub fn with_config<T>(cfg: Config, f: impl FnOnce() -> T) -> T {
    let old = config();
    set_config(cfg);
    let out = f();
    set_config(old);
    out
}

pub use constants::Constant;
pub use ordinal::Ordinal;
