//! Catalog of named velocity fields and initial data shared by the
//! command-line tools, the integration suites, and the benchmarks, so a run
//! can be reproduced from a short label instead of inline closures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::flow::VelocityField;
use crate::moduli::{Modulus, Weight};
use crate::sampled::{uniform_grid, Interp, SampledFunction1D};
use crate::transport::bump_profile;

/// Span on which every data preset is sampled.
pub const DATA_SPAN: (f64, f64) = (-2.0, 2.0);

/// Velocity-field presets as (name, description), in catalog order.
pub const FIELD_PRESETS: &[(&str, &str)] = &[
    ("constant", "b = 1: uniform translation"),
    (
        "osgood-xlogx",
        "b(x) = -sign(x) |x| log|x| on [-1, 1], zero outside: Osgood but not Lipschitz at 0",
    ),
    (
        "sqrt-merge",
        "b(x) = -sign(x) sqrt(min(|x|, 1)): strictly decreasing, characteristics merge at 0",
    ),
    (
        "rotation-2d",
        "b(x1, x2) = (-x2, x1): rigid rotation of the plane",
    ),
    (
        "loglip-2d",
        "vortex 0.25 (1 + log+(1/r)) (-x2, x1): log-Lipschitz angular velocity at the core",
    ),
];

/// Initial/terminal data presets as (name, description), in catalog order.
pub const DATA_PRESETS: &[(&str, &str)] = &[
    ("step-einv", "indicator of [1/e, 1), right-continuous steps"),
    ("tent", "max(0, 1 - |x|), piecewise linear"),
    ("bump", "smooth bump exp(1 - 1/(1 - x^2)) on (-1, 1)"),
    (
        "holder-sample",
        "seeded midpoint-displacement path pinned to zero at both ends",
    ),
];

fn unknown(kind: &str, name: &str, catalog: &[(&str, &str)]) -> Error {
    let names: Vec<&str> = catalog.iter().map(|(n, _)| *n).collect();
    Error::validation(format!(
        "unknown {kind} preset '{name}'; available: {}",
        names.join(", ")
    ))
}

/// Builds a catalog velocity field by name.
///
/// The odd x log x field is clamped to zero outside [-1, 1] (both endpoints
/// are stationary, so the unit interval is invariant); crossing pairs spread
/// at up to twice the clipped h|log h| rate, hence the constant weight 2.
/// The vortex conserves the radius, so its speed bound 0.5 holds on the
/// invariant ball r <= 2; its declared weight 2 was sized so the probed
/// increment ratio (max about 1.69 on the unit box) stays inside.
pub fn velocity_field(name: &str) -> Result<VelocityField> {
    match name {
        "constant" => {
            VelocityField::new_1d_two_sided(|_, _| 1.0, 1.0, Modulus::linear(1.0)?, Weight::one())
        }
        "osgood-xlogx" => VelocityField::new_1d_two_sided(
            |x, _| {
                let a = x.abs();
                if a <= 0.0 || a >= 1.0 {
                    0.0
                } else {
                    -x.signum() * a * a.ln()
                }
            },
            crate::moduli::DEFAULT_LOG_CLIP,
            Modulus::log(),
            Weight::constant(2.0)?,
        ),
        "sqrt-merge" => VelocityField::new_1d(
            |x, _| -x.signum() * x.abs().min(1.0).sqrt(),
            1.0,
            Modulus::linear(1.0)?,
            Weight::constant(0.0)?,
        ),
        "rotation-2d" => VelocityField::new_multi(
            2,
            |state, _, out| {
                out[0] = -state[1];
                out[1] = state[0];
            },
            2.0,
            Modulus::linear(1.0)?,
            Weight::one(),
        ),
        "loglip-2d" => VelocityField::new_multi(
            2,
            |state, _, out| {
                let r = state[0].hypot(state[1]);
                let g = if r > 0.0 && r < 1.0 {
                    1.0 - r.ln()
                } else {
                    1.0
                };
                out[0] = -0.25 * g * state[1];
                out[1] = 0.25 * g * state[0];
            },
            0.5,
            Modulus::log_lipschitz(),
            Weight::constant(2.0)?,
        ),
        _ => Err(unknown("field", name, FIELD_PRESETS)),
    }
}

/// Samples a catalog data preset on `n` uniform nodes over [`DATA_SPAN`].
/// Only `holder-sample` consumes the seed.
pub fn initial_data(name: &str, n: usize, seed: u64) -> Result<SampledFunction1D> {
    ensure(n >= 9, "data presets need at least 9 sample nodes")?;
    let grid = uniform_grid(DATA_SPAN.0, DATA_SPAN.1, n);
    match name {
        "step-einv" => {
            let values = grid
                .iter()
                .map(|&x| {
                    if (crate::moduli::DEFAULT_LOG_CLIP..1.0).contains(&x) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            SampledFunction1D::new(grid, values, Interp::PiecewiseConstantRight)
        }
        "tent" => {
            let values = grid.iter().map(|&x| (1.0 - x.abs()).max(0.0)).collect();
            SampledFunction1D::new(grid, values, Interp::PiecewiseLinear)
        }
        "bump" => {
            let values = grid.iter().map(|&x| bump_profile(x)).collect();
            SampledFunction1D::new(grid, values, Interp::PiecewiseLinear)
        }
        "holder-sample" => {
            let rough = midpoint_displacement_path(seed);
            let values = grid.iter().map(|&x| rough.eval(x)).collect();
            SampledFunction1D::new(grid, values, Interp::PiecewiseLinear)
        }
        _ => Err(unknown("data", name, DATA_PRESETS)),
    }
}

/// Brownian-bridge-like sample over [`DATA_SPAN`] by midpoint displacement:
/// level j inserts midpoints jittered by amp 2^(-j/2), giving square-root
/// small-scale increments; the ends stay pinned at zero.
fn midpoint_displacement_path(seed: u64) -> SampledFunction1D {
    const DEPTH: u32 = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0_f64; (1 << DEPTH) + 1];
    for level in 0..DEPTH {
        let stride = 1_usize << (DEPTH - level);
        let amp = 0.7 * 0.5_f64.powf(0.5 * level as f64);
        let mut i = 0;
        while i + stride < values.len() {
            let mid = i + stride / 2;
            values[mid] = 0.5 * (values[i] + values[i + stride]) + amp * rng.gen_range(-1.0..1.0);
            i += stride;
        }
    }
    let grid = uniform_grid(DATA_SPAN.0, DATA_SPAN.1, values.len());
    SampledFunction1D::new(grid, values, Interp::PiecewiseLinear)
        .expect("dyadic grid is strictly increasing")
}
