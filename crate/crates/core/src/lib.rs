//! Numerical kernels and operator certificates for the Poisson semigroup of
//! the Hermite-type operator `L = -Δ + |x|² + m` on ℝ^d.
//!
//! The crate is organized bottom-up:
//!
//! * [`logscalar`] — signed log-domain arithmetic, the scalar type every
//!   kernel evaluation runs on (plain doubles overflow near `e^{|x|²/2}`).
//! * [`quad`] — adaptive Gauss–Kronrod quadrature with endpoint
//!   substitutions, accumulating in log domain.
//! * [`grid`] — tensor grids, sampled fields, and weighted Lᵖ norms.
//! * [`special`] — Γ, the subordination profile `F_ν`, and Hermite functions.
//! * [`heat`] — the Mehler (heat) kernel in its three parametrizations and
//!   the heat operator.
//! * [`poisson`] — the subordinated Poisson kernel/operator, series route,
//!   and PDE residuals.
//! * [`estimates`] — the sharp envelope `φ`, two-sided kernel bounds, and
//!   the logarithm comparison inequality.
//! * [`maximal`] — the local Hardy–Littlewood maximal operator, the Poisson
//!   maximal operator `P*_a`, and the pointwise domination certificate.
//! * [`weights`] — admissible-weight norms, the constructed pair `(v, w)`,
//!   and the Monte-Carlo two-weight certificates.
//! * [`expr`] — the tiny expression grammar used by the CLI and test
//!   families.
//! * [`report`] — machine-readable pass/fail reports (JSON/CSV).
//! * [`suites`] — named verification suites combining all of the above.

pub mod estimates;
pub mod expr;
pub mod grid;
pub mod heat;
pub mod logscalar;
pub mod maximal;
pub mod poisson;
pub mod quad;
pub mod report;
pub mod special;
pub mod suites;
pub mod weights;

pub use grid::{Grid, GridField, ScalarField};
pub use logscalar::LogScalar;
pub use quad::{QuadSpec, Substitution};
pub use special::{MultiIndex, Params};
