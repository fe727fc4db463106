//! Empirical verification of the `mu_p`-equidistribution of normalized Hecke
//! eigenvalues on newspaces `S_k^new(N, chi)` with nebentypus.
//!
//! * [`numtheory`]: factorization, `psi`, `beta * psi_f`, `psi_new_f(N)`,
//!   the exceptional-case predicate and the trace main terms.
//! * [`characters`]: Dirichlet characters with exact values, conductors and
//!   the `chi(p)^(-1/2)` branch.
//! * [`chebyshev`]: `X_n(x) = U_n(x/2)`, the measures `mu_p` and `mu_inf`,
//!   quadrature, CDFs and sampling.
//! * [`spectra`]: eigenvalue normalization, Chebyshev power sums and
//!   coefficient-field degree histograms.
//! * [`equidist`]: KS discrepancy, moment tests and family reports.
//! * [`ingest`]: the JSON Lines dataset format, remote fetching with a
//!   local cache, and configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characters;
pub mod chebyshev;
pub mod equidist;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod numtheory;
pub mod output;
pub mod selfcheck;
pub mod spectra;

pub use error::{Error, LineError, Result};
