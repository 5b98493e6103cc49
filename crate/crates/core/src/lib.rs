//! Bounds for the mean of a convex function under a probability measure on
//! a compact interval — the value at the mean below, the endpoint chord
//! above, and a tighter three-point upper bound with an interior pivot —
//! together with machinery for quantifying and comparing how tight such
//! inequalities are: Karamata functions, dominance tests, and average
//! residuals.
//!
//! Modules
//! - [`measure`]: mixed continuous + atomic probability measures and their
//!   partial moments.
//! - [`quad`]: adaptive quadrature and Lebesgue-Stieltjes integration.
//! - [`convex`]: the convex-function protocol, V-shaped equality families,
//!   and bump-kernel mollification.
//! - [`bounds`]: the three bounds, three-point weights and pivot search.
//! - [`karamata`]: derived second measures and the Karamata function.
//! - [`residual`]: direct and curvature-form residuals, AR / RAR / RR.
//! - [`cli`]: the `hh` command-line front end.

pub mod bounds;
pub mod cli;
pub mod convex;
pub mod error;
pub mod karamata;
pub mod measure;
pub mod quad;
pub mod residual;

pub use bounds::{all_bounds, optimal_pivot, BoundsResult, ThreePointWeights};
pub use convex::{ConvexFn, VeeParams};
pub use error::{Error, Result};
pub use karamata::{Direction, InequalityKind, InequalitySpec, KaramataCurve};
pub use measure::{Atom, HalfOpenSpec, Interval, Measure, MeasureConfig};
pub use quad::{QuadConfig, QuadResult};
pub use residual::{average_residual, direct_residual, ResidualReport};
