//! Numerical toolkit for one-dimensional (and tensor-product multi-dimensional)
//! transport along velocity fields that are merely Osgood-continuous: flows with
//! non-Lipschitz but still unique characteristics, transport solutions built by
//! composition with the flow, p-variation machinery, Riemann-Stieltjes/Young
//! integration, lower box envelopes, and a vanishing-viscosity Monte Carlo lane.
//!
//! The crate is organised around the comparison function `Psi(y0, t)` obtained by
//! inverting the primitive of `1/omega` for a modulus of continuity `omega`: every
//! stability statement (flow separation, L1 stability of transport solutions,
//! pathwise SDE contraction) is a post-check against that single object.
//!
//! Data-parallel kernels (trajectory ensembles, Monte Carlo paths, envelope
//! layer stacks) run on rayon when the `parallel` feature is enabled (default)
//! and fall back to sequential loops otherwise; the heavy kernels come in
//! `_with(.., parallel: bool)` variants so benchmarks can compare both
//! schedules in one build, and their results never depend on the schedule.

pub mod envelope;
pub mod error;
pub mod flow;
pub mod moduli;
mod num;
pub(crate) mod par;
pub mod presets;
pub mod pvar;
pub mod sampled;
pub mod transport;
pub mod viscous;
pub mod young;

pub use error::{Error, Result};
pub use sampled::{Interp, SampledFunction1D};
