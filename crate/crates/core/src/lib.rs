//! Local hidden variable models of Bell-CHSH experiments.
//!
//! * [`lhv`]: models over finite hidden spaces, exact correlations, `S`, the
//!   per-point integrand and factorization diagnostics.
//! * [`pool`]: seeded random model pools, target matching and per-pair
//!   stitching.
//! * [`experiment`]: finite-N simulation and empirical estimates of `S`.
//! * [`optimizer`]: deterministic enumeration, the integrand route to `S`, and
//!   the random hunt for a violation.
//! * [`cli`]: the `chsh-forge` command line.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod lhv;
pub mod optimizer;
pub mod pool;
pub mod rng;

pub use error::{Error, Result};
pub use lhv::{HiddenSpace, LhvModel, ModelDocument, ProductLhvModel, Quartet, QuartetPair, SettingUniverse};
