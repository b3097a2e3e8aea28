//! Monte Carlo lane for the viscous backward problem.
//!
//! The viscous solution at `(x, t)` is the expectation of the terminal data
//! along the diffusion `dX = b(X, s) ds + sqrt(2 eps) dW` started at `x` and
//! run to the terminal time.  Paths are Euler-Maruyama with a fixed step and
//! one counter-based RNG stream per path, so a `(seed, paths, dt)` triple
//! pins the estimate bit for bit regardless of the schedule.  `eps == 0`
//! degenerates to the deterministic flow composition, which is also the
//! reference the vanishing-viscosity sweep compares against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, ensure_finite, Result};
use crate::flow::{solve_flow_1d, StepControl, VelocityField};
use crate::par;

/// Monte Carlo estimate of the viscous solution at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    /// Sample mean of the terminal data over all paths.
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(paths)`; `0.0` when the
    /// run is degenerate (`eps == 0`) or has a single path.
    pub std_error: f64,
    /// Number of simulated paths.
    pub paths: usize,
    /// Time step actually requested (the last step of a path is shortened
    /// to land exactly on the terminal time).
    pub dt: f64,
    /// Viscosity used for the run.
    pub eps: f64,
    /// Base RNG seed; path `i` draws from stream `i` of this seed.
    pub seed: u64,
}

/// One viscosity level of [`vanishing_viscosity_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Viscosity for this row.
    pub eps: f64,
    /// Largest deviation from the deterministic flow composition over the
    /// evaluation grid.
    pub sup_deviation: f64,
    /// Standard error of the Monte Carlo estimate at the grid point that
    /// realizes the sup, for judging whether the deviation is resolved.
    pub std_error: f64,
}

/// Estimates the viscous backward solution at `(x, t)` with terminal data
/// `u_terminal` at `t_final`, choosing the schedule from the path count.
#[allow(clippy::too_many_arguments)]
pub fn viscous_backward_mc(
    field: &VelocityField,
    u_terminal: impl Fn(f64) -> f64 + Sync,
    eps: f64,
    x: f64,
    t: f64,
    t_final: f64,
    paths: usize,
    dt: f64,
    seed: u64,
) -> Result<MCEstimate> {
    let parallel = paths > 512;
    viscous_backward_mc_with(
        field, u_terminal, eps, x, t, t_final, paths, dt, seed, parallel,
    )
}

/// [`viscous_backward_mc`] with an explicit schedule switch.  The reduction
/// over path values is sequential either way, so both schedules return the
/// same bits.
#[allow(clippy::too_many_arguments)]
pub fn viscous_backward_mc_with(
    field: &VelocityField,
    u_terminal: impl Fn(f64) -> f64 + Sync,
    eps: f64,
    x: f64,
    t: f64,
    t_final: f64,
    paths: usize,
    dt: f64,
    seed: u64,
    parallel: bool,
) -> Result<MCEstimate> {
    ensure(
        field.dim() == 1,
        "viscous runs take a one-dimensional field",
    )?;
    ensure_finite(x, "start point")?;
    ensure_finite(t, "start time")?;
    ensure_finite(t_final, "terminal time")?;
    ensure(
        t_final >= t,
        "terminal time must not precede the start time",
    )?;
    ensure(
        eps.is_finite() && eps >= 0.0,
        "viscosity must be finite and non-negative",
    )?;
    ensure(dt.is_finite() && dt > 0.0, "time step must be positive")?;
    ensure(paths >= 1, "need at least one path")?;

    if eps == 0.0 {
        // Degenerate case: no noise, so every path rides the deterministic
        // flow; solve it once with the adaptive integrator instead.
        let terminal_point = if t_final == t {
            x
        } else {
            let ens = solve_flow_1d(field, &[x], t, &[t_final], &StepControl::default())?;
            ens.state_at(t_final)?[0]
        };
        return Ok(MCEstimate {
            mean: u_terminal(terminal_point),
            std_error: 0.0,
            paths,
            dt,
            eps,
            seed,
        });
    }

    let amplitude = (2.0 * eps).sqrt();
    let values: Vec<f64> = par::map_indexed(paths, parallel, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut pos = x;
        let mut s = t;
        loop {
            let h = dt.min(t_final - s);
            if h <= 0.0 {
                break;
            }
            let z: f64 = rng.sample(StandardNormal);
            pos += field.eval_1d(pos, s) * h + amplitude * h.sqrt() * z;
            s += h;
        }
        u_terminal(pos)
    });

    // Sequential reduction in path order: the parallel map preserves index
    // order, so the mean and spread come out bit-identical to a serial run.
    let mean = values.iter().sum::<f64>() / paths as f64;
    let std_error = if paths >= 2 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (paths - 1) as f64;
        (var / paths as f64).sqrt()
    } else {
        0.0
    };
    Ok(MCEstimate {
        mean,
        std_error,
        paths,
        dt,
        eps,
        seed,
    })
}

/// Runs [`viscous_backward_mc`] over a grid of start points for each
/// viscosity in `eps_list` (strictly decreasing, all positive) and reports
/// the sup-distance to the deterministic flow composition per level.  The
/// same seed is reused across points and levels, so consecutive rows differ
/// by the viscosity alone (common random numbers).
#[allow(clippy::too_many_arguments)]
pub fn vanishing_viscosity_sweep(
    field: &VelocityField,
    u_terminal: impl Fn(f64) -> f64 + Sync,
    x_grid: &[f64],
    t: f64,
    t_final: f64,
    eps_list: &[f64],
    paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    ensure(!x_grid.is_empty(), "need at least one evaluation point")?;
    ensure(!eps_list.is_empty(), "need at least one viscosity level")?;
    for &eps in eps_list {
        ensure(
            eps.is_finite() && eps > 0.0,
            "sweep viscosities must be positive",
        )?;
    }
    ensure(
        eps_list.windows(2).all(|w| w[1] < w[0]),
        "sweep viscosities must be strictly decreasing",
    )?;

    let reference: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            viscous_backward_mc(field, &u_terminal, 0.0, x, t, t_final, 1, dt, seed)
                .map(|est| est.mean)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut sup_deviation = 0.0_f64;
        let mut std_error = 0.0_f64;
        for (i, &x) in x_grid.iter().enumerate() {
            let est = viscous_backward_mc(field, &u_terminal, eps, x, t, t_final, paths, dt, seed)?;
            let deviation = (est.mean - reference[i]).abs();
            if deviation >= sup_deviation {
                sup_deviation = deviation;
                std_error = est.std_error;
            }
        }
        rows.push(SweepRow {
            eps,
            sup_deviation,
            std_error,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::{psi, Modulus, Weight};
    use crate::sampled::uniform_grid;
    use crate::transport::bump_profile;

    fn zero_field() -> VelocityField {
        VelocityField::new_1d(
            |_, _| 0.0,
            0.0,
            Modulus::linear(1.0).unwrap(),
            Weight::one(),
        )
        .unwrap()
    }

    fn unit_drift() -> VelocityField {
        VelocityField::new_1d(
            |_, _| 1.0,
            1.0,
            Modulus::linear(1.0).unwrap(),
            Weight::one(),
        )
        .unwrap()
    }

    fn xlogx_field() -> VelocityField {
        VelocityField::new_1d(
            |x, _| if x > 0.0 { -x * x.ln() } else { 0.0 },
            0.4,
            Modulus::log(),
            Weight::one(),
        )
        .unwrap()
    }

    #[test]
    fn zero_drift_is_a_martingale() {
        // Without drift the terminal position is x + sqrt(2 eps) W, so
        // linear terminal data averages back to x.
        let est =
            viscous_backward_mc(&zero_field(), |y| y, 0.05, 0.7, 0.0, 1.0, 4000, 0.01, 42).unwrap();
        assert!(est.std_error > 0.0);
        assert!(
            (est.mean - 0.7).abs() <= 3.0 * est.std_error,
            "martingale mean {} strays from 0.7 by more than 3 se = {}",
            est.mean,
            3.0 * est.std_error
        );
        // se should sit near sqrt(2 eps T / paths) = sqrt(0.1) / sqrt(4000).
        let predicted = (2.0_f64 * 0.05 / 4000.0).sqrt();
        assert!(est.std_error < 3.0 * predicted && est.std_error > predicted / 3.0);
    }

    #[test]
    fn quadratic_data_sees_the_variance() {
        // E[(x + sqrt(2 eps) W_T)^2] = x^2 + 2 eps T, exactly reproduced by
        // Euler-Maruyama for zero drift, so only Monte Carlo error remains.
        let (eps, x, t_final) = (0.05, 0.7, 1.0);
        let est = viscous_backward_mc(
            &zero_field(),
            |y| y * y,
            eps,
            x,
            0.0,
            t_final,
            8000,
            0.01,
            11,
        )
        .unwrap();
        let exact = x * x + 2.0 * eps * t_final;
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.std_error,
            "mean {} vs exact {} exceeds 3 se = {}",
            est.mean,
            exact,
            3.0 * est.std_error
        );
    }

    #[test]
    fn std_error_scales_with_inverse_sqrt_paths() {
        let mut errors = Vec::new();
        for &paths in &[1000_usize, 4000, 16000] {
            let est = viscous_backward_mc(
                &xlogx_field(),
                |y| y.sin(),
                0.02,
                0.5,
                0.0,
                1.0,
                paths,
                0.01,
                9,
            )
            .unwrap();
            errors.push(est.std_error);
        }
        for pair in errors.windows(2) {
            let ratio = pair[1] / pair[0];
            assert!(
                (ratio - 0.5).abs() < 0.1,
                "quadrupling paths gave se ratio {ratio}, expected about 0.5"
            );
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let field = xlogx_field();
        let run = |seed: u64, parallel: bool| {
            viscous_backward_mc_with(
                &field,
                |y| y * y,
                0.03,
                0.4,
                0.0,
                0.7,
                2000,
                0.005,
                seed,
                parallel,
            )
            .unwrap()
        };
        let a = run(123, true);
        let b = run(123, true);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        // Parallel and sequential schedules agree bit for bit because the
        // streams are per-path and the reduction is sequential.
        let c = run(123, false);
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), c.std_error.to_bits());
        let d = run(124, true);
        assert_ne!(a.mean.to_bits(), d.mean.to_bits());
    }

    #[test]
    fn degenerate_run_reproduces_the_flow() {
        let field = xlogx_field();
        let u_terminal = |y: f64| (3.0 * y).sin().abs();
        let (x, t_final) = (1.0_f64.exp().recip(), 1.0);
        let est =
            viscous_backward_mc(&field, u_terminal, 0.0, x, 0.0, t_final, 5, 0.01, 99).unwrap();
        let ens = solve_flow_1d(&field, &[x], 0.0, &[t_final], &StepControl::default()).unwrap();
        let expected = u_terminal(ens.state_at(t_final).unwrap()[0]);
        assert_eq!(est.mean.to_bits(), expected.to_bits());
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn sweep_decreases_toward_flow() {
        // Constant drift keeps the Euler scheme exact, so the sup-deviation
        // is pure heat-kernel smoothing plus Monte Carlo noise and must
        // shrink as the viscosity does.
        let field = unit_drift();
        let x_grid = uniform_grid(-1.0, 1.0, 9);
        let rows = vanishing_viscosity_sweep(
            &field,
            |y| bump_profile(y / 0.6),
            &x_grid,
            0.0,
            0.5,
            &[0.4, 0.1, 0.025],
            4000,
            0.025,
            7,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(
            rows[0].sup_deviation > 0.05,
            "largest eps must smear the bump"
        );
        for pair in rows.windows(2) {
            let slack = 2.0 * (pair[0].std_error + pair[1].std_error);
            assert!(
                pair[1].sup_deviation <= pair[0].sup_deviation + slack,
                "sup deviation rose from {} to {} (slack {})",
                pair[0].sup_deviation,
                pair[1].sup_deviation,
                slack
            );
        }
        assert!(rows[2].sup_deviation < rows[0].sup_deviation);

        // Constant terminal data is invariant under both the flow and the
        // diffusion, so every level deviates by exactly zero.
        let flat = vanishing_viscosity_sweep(
            &field,
            |_| 2.5,
            &x_grid,
            0.0,
            0.5,
            &[0.4, 0.1],
            400,
            0.025,
            7,
        )
        .unwrap();
        for row in &flat {
            assert_eq!(row.sup_deviation, 0.0);
        }
    }

    #[test]
    fn common_noise_pairs_stay_within_the_envelope() {
        // Two paths driven by the same increments satisfy
        //   gap_{k+1} <= gap_k + omega(gap_k) h
        // because the noise cancels and the drift gap is bounded by the
        // modulus.  The envelope of y' = omega(y) is convex in t for a
        // concave omega, so the discrete recursion stays below psi exactly;
        // the tolerance below only covers floating-point slack.
        let field = xlogx_field();
        let modulus = Modulus::log();
        let weight = Weight::one();
        let (eps, dt, t_final): (f64, f64, f64) = (0.01, 1.0e-3, 1.0);
        let steps = (t_final / dt) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let x_lo = rng.gen_range(0.05..0.85);
            let gap0 = rng.gen_range(0.01..0.1);
            let x_hi = x_lo + gap0;
            let amplitude = (2.0 * eps).sqrt();
            let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
            let (mut lo, mut hi) = (x_lo, x_hi);
            for k in 0..steps {
                let s = k as f64 * dt;
                let z: f64 = noise.sample(StandardNormal);
                let kick = amplitude * dt.sqrt() * z;
                lo += field.eval_1d(lo, s) * dt + kick;
                hi += field.eval_1d(hi, s) * dt + kick;
                if (k + 1) % 100 == 0 {
                    let elapsed = (k + 1) as f64 * dt;
                    let gap = hi - lo;
                    assert!(gap > 0.0, "common noise must preserve the order");
                    let bound = psi(&modulus, &weight, gap0, elapsed).unwrap();
                    assert!(
                        gap <= bound.value * (1.0 + 1.0e-9) + 1.0e-12,
                        "gap {} exceeds envelope {} at time {}",
                        gap,
                        bound.value,
                        elapsed
                    );
                }
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let field = zero_field();
        assert!(viscous_backward_mc(&field, |y| y, -0.1, 0.0, 0.0, 1.0, 10, 0.1, 0).is_err());
        assert!(viscous_backward_mc(&field, |y| y, 0.1, 0.0, 1.0, 0.5, 10, 0.1, 0).is_err());
        assert!(viscous_backward_mc(&field, |y| y, 0.1, 0.0, 0.0, 1.0, 0, 0.1, 0).is_err());
        assert!(viscous_backward_mc(&field, |y| y, 0.1, 0.0, 0.0, 1.0, 10, 0.0, 0).is_err());
        assert!(viscous_backward_mc(&field, |y| y, 0.1, f64::NAN, 0.0, 1.0, 10, 0.1, 0).is_err());
        let rotation = VelocityField::new_multi(
            2,
            |state, _, out| {
                out[0] = -state[1];
                out[1] = state[0];
            },
            2.0,
            Modulus::linear(1.0).unwrap(),
            Weight::one(),
        )
        .unwrap();
        assert!(viscous_backward_mc(&rotation, |y| y, 0.1, 0.0, 0.0, 1.0, 10, 0.1, 0).is_err());

        let grid = [0.0, 1.0];
        assert!(
            vanishing_viscosity_sweep(&field, |y| y, &[], 0.0, 1.0, &[0.1], 10, 0.1, 0).is_err()
        );
        assert!(
            vanishing_viscosity_sweep(&field, |y| y, &grid, 0.0, 1.0, &[], 10, 0.1, 0).is_err()
        );
        assert!(
            vanishing_viscosity_sweep(&field, |y| y, &grid, 0.0, 1.0, &[0.1, 0.2], 10, 0.1, 0)
                .is_err()
        );
        assert!(
            vanishing_viscosity_sweep(&field, |y| y, &grid, 0.0, 1.0, &[0.1, 0.0], 10, 0.1, 0)
                .is_err()
        );
    }
}
