//! Characteristic flows for bounded continuous velocity fields whose spatial
//! increments are controlled by a declared modulus.
//!
//! One-dimensional ensembles are integrated forward with a shared adaptive
//! Dormand-Prince 5(4) step; order across seeds is restored by a running-max
//! projection after every accepted step, and seed pairs that come within the
//! merge tolerance are frozen together for the rest of the run. Multi-d
//! flows integrate seed points independently in either time direction, but
//! backward integration demands a two-sided modulus declaration.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, ensure_finite, Error, Result};
use crate::moduli::{eval_modulus, psi, Modulus, Weight};
use crate::par;

type Eval1 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type EvalD = Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;

/// A velocity field together with its declared regularity: a sup bound, a
/// modulus for spatial increments (one-sided unless stated otherwise), and a
/// time weight multiplying the modulus.
#[derive(Clone)]
pub struct VelocityField {
    dim: usize,
    eval1: Option<Eval1>,
    evald: Option<EvalD>,
    bound: f64,
    modulus: Modulus,
    weight: Weight,
    two_sided: bool,
}

impl std::fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityField")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .field("modulus", &self.modulus)
            .field("two_sided", &self.two_sided)
            .finish()
    }
}

impl VelocityField {
    /// Scalar field with a one-sided declaration:
    /// b(x,t) - b(y,t) <= weight(t) * modulus(x - y) for x > y.
    pub fn new_1d(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        bound: f64,
        modulus: Modulus,
        weight: Weight,
    ) -> Result<Self> {
        ensure_finite(bound, "velocity bound")?;
        ensure(bound >= 0.0, "velocity bound must be non-negative")?;
        Ok(VelocityField {
            dim: 1,
            eval1: Some(Arc::new(f)),
            evald: None,
            bound,
            modulus,
            weight,
            two_sided: false,
        })
    }

    /// Scalar field whose modulus bounds |b(x,t) - b(y,t)| in both directions.
    pub fn new_1d_two_sided(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        bound: f64,
        modulus: Modulus,
        weight: Weight,
    ) -> Result<Self> {
        let mut field = Self::new_1d(f, bound, modulus, weight)?;
        field.two_sided = true;
        Ok(field)
    }

    /// Vector field writing its value into `out`; the declared modulus bounds
    /// the radial increment |(b(x)-b(y)) . (x-y)| / |x-y| in both directions.
    pub fn new_multi(
        dim: usize,
        f: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
        bound: f64,
        modulus: Modulus,
        weight: Weight,
    ) -> Result<Self> {
        ensure(dim >= 2, "use new_1d for scalar fields")?;
        ensure_finite(bound, "velocity bound")?;
        ensure(bound >= 0.0, "velocity bound must be non-negative")?;
        Ok(VelocityField {
            dim,
            eval1: None,
            evald: Some(Arc::new(f)),
            bound,
            modulus,
            weight,
            two_sided: true,
        })
    }

    /// Marks a multi-d declaration as holding only in the one-sided sense;
    /// backward integration is then refused.
    pub fn with_one_sided_declaration(mut self) -> Self {
        self.two_sided = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn is_two_sided(&self) -> bool {
        self.two_sided
    }

    pub fn eval_1d(&self, x: f64, t: f64) -> f64 {
        (self.eval1.as_ref().expect("scalar field"))(x, t)
    }

    pub fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self.dim {
            1 => out[0] = self.eval_1d(x[0], t),
            _ => (self.evald.as_ref().expect("vector field"))(x, t, out),
        }
    }
}

/// Result of sampling the declared modulus on random point pairs. Violations
/// are evidence against the declaration, not errors: the probe is a spot
/// check, never a proof.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub probes: usize,
    pub violations: usize,
    /// Largest observed increment minus its allowance; negative when every
    /// probe respected the declaration.
    pub worst_excess: f64,
}

/// Samples random pairs in the box (per-axis ranges) and random times,
/// comparing field increments against weight(t) * modulus(gap) + tol.
pub fn probe_declared_modulus(
    field: &VelocityField,
    domain: &[(f64, f64)],
    t_range: (f64, f64),
    probes: usize,
    seed: u64,
    tol: f64,
) -> Result<ProbeReport> {
    ensure(
        domain.len() == field.dim,
        "probe domain must give one range per dimension",
    )?;
    ensure(probes >= 1, "need at least one probe")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut xv = vec![0.0; field.dim];
    let mut yv = vec![0.0; field.dim];
    let mut bx = vec![0.0; field.dim];
    let mut by = vec![0.0; field.dim];
    for _ in 0..probes {
        let t = if t_range.1 > t_range.0 {
            rng.gen_range(t_range.0..t_range.1)
        } else {
            t_range.0
        };
        for d in 0..field.dim {
            let (lo, hi) = domain[d];
            xv[d] = rng.gen_range(lo..hi);
            yv[d] = rng.gen_range(lo..hi);
        }
        let excess = if field.dim == 1 {
            let (hi, lo) = if xv[0] >= yv[0] {
                (xv[0], yv[0])
            } else {
                (yv[0], xv[0])
            };
            let gap = hi - lo;
            if gap == 0.0 {
                continue;
            }
            let allowance = self_weight(field, t) * eval_modulus(&field.modulus, gap)?;
            let inc = field.eval_1d(hi, t) - field.eval_1d(lo, t);
            let one_sided_excess = inc - allowance;
            if field.two_sided {
                one_sided_excess.max(-inc - allowance)
            } else {
                one_sided_excess
            }
        } else {
            let gap: f64 = xv
                .iter()
                .zip(&yv)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if gap == 0.0 {
                continue;
            }
            field.eval_into(&xv, t, &mut bx);
            field.eval_into(&yv, t, &mut by);
            let radial: f64 = bx
                .iter()
                .zip(&by)
                .zip(xv.iter().zip(&yv))
                .map(|((bi, bj), (xi, yj))| (bi - bj) * (xi - yj))
                .sum::<f64>()
                / gap;
            let allowance = self_weight(field, t) * eval_modulus(&field.modulus, gap)?;
            radial.abs() - allowance
        };
        if excess > worst {
            worst = excess;
        }
        if excess > tol {
            violations += 1;
        }
    }
    Ok(ProbeReport {
        probes,
        violations,
        worst_excess: worst,
    })
}

fn self_weight(field: &VelocityField, t: f64) -> f64 {
    field.weight.eval(t)
}

/// Adaptive step parameters for the 5(4) pair.
#[derive(Debug, Clone)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    /// Steps below this abort with a report of where the controller stalled.
    pub h_min: f64,
    /// Adjacent seeds closer than this are frozen together; defaults to 10x
    /// the absolute step tolerance plus a float-noise floor.
    pub merge_tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        let abs_tol = 1e-12;
        StepControl {
            rel_tol: 1e-9,
            abs_tol,
            h_init: 1e-3,
            h_min: 1e-13,
            merge_tol: 10.0 * (abs_tol + 1e-9),
        }
    }
}

/// Outcome of comparing stored trajectory gaps against the two-parameter
/// stability envelope of the declared modulus.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub pairs_checked: usize,
    pub violations: usize,
    /// max over pairs of (observed gap - envelope value); negative when all
    /// pairs sit inside the envelope.
    pub worst_excess: f64,
    /// Combined solver-plus-envelope tolerance used to count violations.
    pub tolerance: f64,
    /// Pairs skipped because the envelope value saturated a tabulated cap.
    pub skipped_capped: usize,
}

/// Monotone 1-D trajectory bundle: `states[k][i]` is the position of seed i
/// at `times[k]`, non-decreasing in i at every k; `merged[k][i]` says seed i
/// has been frozen to seed i-1 by time k (index 0 is never merged).
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    pub start_time: f64,
    pub seeds: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub merged: Vec<Vec<bool>>,
    pub stability: StabilityReport,
}

impl FlowEnsemble {
    /// Stored state row at time t (exact node match up to float noise).
    pub fn state_at(&self, t: f64) -> Result<&[f64]> {
        let scale = 1e-12 * (1.0 + t.abs());
        self.times
            .iter()
            .position(|&node| (node - t).abs() <= scale)
            .map(|k| self.states[k].as_slice())
            .ok_or_else(|| Error::domain(format!("time {t} is not a stored node")))
    }

    pub fn merged_at(&self, t: f64) -> Result<&[bool]> {
        let scale = 1e-12 * (1.0 + t.abs());
        self.times
            .iter()
            .position(|&node| (node - t).abs() <= scale)
            .map(|k| self.merged[k].as_slice())
            .ok_or_else(|| Error::domain(format!("time {t} is not a stored node")))
    }
}

/// Generalized-inverse query result: the leftmost preimage, with flags for
/// plateau hits (merged characteristics) and out-of-range queries.
#[derive(Debug, Clone, Copy)]
pub struct InverseResult {
    pub x: f64,
    pub plateau: bool,
    pub extrapolated: bool,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct StepOutcome {
    y5: Vec<f64>,
    err_norm: f64,
    worst_index: usize,
}

/// One trial step of the whole flattened state vector; err_norm > 1 means
/// reject. The derivative closure receives (t, flat state).
fn rk45_step<F>(deriv: &F, t: f64, y: &[f64], h: f64, ctl: &StepControl) -> StepOutcome
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = y.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
    ks.push(deriv(t, y));
    let mut stage = vec![0.0; n];
    for s in 0..6 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, k) in ks.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    acc += a * k[i];
                }
            }
            stage[i] = y[i] + h * acc;
        }
        ks.push(deriv(t + C[s + 1] * h, &stage));
    }
    let mut y5 = vec![0.0; n];
    let mut err_norm = 0.0f64;
    let mut worst_index = 0usize;
    for i in 0..n {
        let mut acc5 = 0.0;
        let mut acc4 = 0.0;
        for (j, k) in ks.iter().enumerate() {
            if B5[j] != 0.0 {
                acc5 += B5[j] * k[i];
            }
            if B4[j] != 0.0 {
                acc4 += B4[j] * k[i];
            }
        }
        let yi5 = y[i] + h * acc5;
        let err = (h * (acc5 - acc4)).abs();
        let scale = ctl.abs_tol + ctl.rel_tol * y[i].abs().max(yi5.abs());
        let e = err / scale;
        if e > err_norm {
            err_norm = e;
            worst_index = i;
        }
        y5[i] = yi5;
    }
    StepOutcome {
        y5,
        err_norm,
        worst_index,
    }
}

/// Integrates the flattened state from t0 to t1 (either direction), calling
/// `after_step` on every accepted state. Returns the final state.
fn integrate<F, G>(
    deriv: &F,
    mut y: Vec<f64>,
    t0: f64,
    t1: f64,
    ctl: &StepControl,
    mut after_step: G,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    G: FnMut(&mut Vec<f64>),
{
    if t0 == t1 {
        return Ok(y);
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut h = ctl.h_init.min((t1 - t0).abs()).max(ctl.h_min);
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-14 * (1.0 + t1.abs()) {
            break;
        }
        let h_try = h.min(remaining);
        let out = rk45_step(deriv, t, &y, dir * h_try, ctl);
        if out.err_norm <= 1.0 {
            t += dir * h_try;
            y = out.y5;
            after_step(&mut y);
            let grow = 0.9 * out.err_norm.max(1e-10).powf(-0.2);
            h = h_try * grow.clamp(0.2, 5.0);
        } else {
            let shrink = 0.9 * out.err_norm.powf(-0.2);
            h = h_try * shrink.clamp(0.2, 0.9);
            if h < ctl.h_min {
                return Err(Error::numerical(format!(
                    "step size underflow at t = {t}, state component {} = {}",
                    out.worst_index, y[out.worst_index]
                )));
            }
        }
    }
    Ok(y)
}

/// Forward flow of a sorted 1-D seed family over a time grid. Order across
/// seeds is enforced after every accepted step and pairs within the merge
/// tolerance are frozen together. The stored gaps are then compared against
/// the stability envelope of the declared modulus.
pub fn solve_flow_1d(
    field: &VelocityField,
    seeds: &[f64],
    start: f64,
    t_grid: &[f64],
    ctl: &StepControl,
) -> Result<FlowEnsemble> {
    solve_flow_1d_with(field, seeds, start, t_grid, ctl, seeds.len() > 256)
}

/// [`solve_flow_1d`] with an explicit schedule switch for the velocity
/// evaluation across seeds; the trajectory does not depend on the schedule.
pub fn solve_flow_1d_with(
    field: &VelocityField,
    seeds: &[f64],
    start: f64,
    t_grid: &[f64],
    ctl: &StepControl,
    parallel: bool,
) -> Result<FlowEnsemble> {
    ensure(field.dim == 1, "solve_flow_1d needs a scalar field")?;
    ensure(!seeds.is_empty(), "need at least one seed")?;
    ensure(
        seeds.windows(2).all(|w| w[0] <= w[1]),
        "seeds must be sorted",
    )?;
    for &x in seeds {
        ensure_finite(x, "seed")?;
    }
    ensure_finite(start, "start time")?;
    ensure(!t_grid.is_empty(), "need at least one output time")?;
    ensure(
        t_grid.windows(2).all(|w| w[0] < w[1]),
        "output times must be strictly increasing",
    )?;
    ensure(
        t_grid[0] >= start,
        "output times must not precede the start time",
    )?;

    let n = seeds.len();
    let field_ref = field.clone();
    let deriv = move |t: f64, y: &[f64]| -> Vec<f64> {
        par::map_slice(y, parallel, |&x| field_ref.eval_1d(x, t))
    };

    let mut merged_pairs = vec![false; n];
    let mut states = Vec::with_capacity(t_grid.len());
    let mut merged_rows = Vec::with_capacity(t_grid.len());
    let mut y: Vec<f64> = seeds.to_vec();
    let mut t_cur = start;
    for &node in t_grid {
        let projected = integrate(&deriv, y, t_cur, node, ctl, |state| {
            project_and_merge(state, &mut merged_pairs, ctl.merge_tol);
        })?;
        y = projected;
        // a zero-length leg (node == start) still gets a consistent row
        project_and_merge(&mut y, &mut merged_pairs, ctl.merge_tol);
        t_cur = node;
        states.push(y.clone());
        merged_rows.push(merged_pairs.clone());
    }

    let stability = check_stability_1d(field, seeds, start, t_grid, &states)?;
    Ok(FlowEnsemble {
        start_time: start,
        seeds: seeds.to_vec(),
        times: t_grid.to_vec(),
        states,
        merged: merged_rows,
        stability,
    })
}

/// Running-max projection restoring seed order, then freeze pairs whose gap
/// fell below the merge tolerance. Previously merged pairs are pinned.
fn project_and_merge(state: &mut [f64], merged: &mut [bool], merge_tol: f64) {
    for i in 1..state.len() {
        if merged[i] {
            state[i] = state[i - 1];
            continue;
        }
        if state[i] < state[i - 1] {
            state[i] = state[i - 1];
        }
        if state[i] - state[i - 1] < merge_tol {
            merged[i] = true;
            state[i] = state[i - 1];
        }
    }
}

const STABILITY_TOL: f64 = 1e-6;

fn check_stability_1d(
    field: &VelocityField,
    seeds: &[f64],
    start: f64,
    t_grid: &[f64],
    states: &[Vec<f64>],
) -> Result<StabilityReport> {
    let n = seeds.len();
    let mut report = StabilityReport {
        pairs_checked: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
        tolerance: STABILITY_TOL,
        skipped_capped: 0,
    };
    if n < 2 {
        return Ok(report);
    }
    let lam0 = field.weight.integral(start);
    let unit = Weight::one();
    let mut cache: HashMap<(u64, u64), Option<f64>> = HashMap::new();
    for (k, &node) in t_grid.iter().enumerate() {
        let tau = field.weight.integral(node) - lam0;
        for i in 1..n {
            let gap0 = seeds[i] - seeds[i - 1];
            let key = (gap0.to_bits(), tau.to_bits());
            let bound = match cache.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => *e.get(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    let out = psi(&field.modulus, &unit, gap0, tau)?;
                    let val = if out.capped { None } else { Some(out.value) };
                    *e.insert(val)
                }
            };
            match bound {
                None => report.skipped_capped += 1,
                Some(b) => {
                    report.pairs_checked += 1;
                    let gap = states[k][i] - states[k][i - 1];
                    let excess = gap - b;
                    if excess > report.worst_excess {
                        report.worst_excess = excess;
                    }
                    if excess > STABILITY_TOL * (1.0 + b) {
                        report.violations += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Leftmost preimage of x_query under the monotone map seed -> state at time
/// t, linearly interpolated between bracketing seeds. Queries landing on a
/// merged plateau return its left endpoint; queries outside the image range
/// clamp to the nearest seed and raise the extrapolated flag.
pub fn invert_flow_1d(ens: &FlowEnsemble, t: f64, x_query: f64) -> Result<InverseResult> {
    ensure_finite(x_query, "query point")?;
    let images = ens.state_at(t)?;
    let seeds = &ens.seeds;
    let n = images.len();
    let j = images.partition_point(|&v| v < x_query);
    if j == n {
        return Ok(InverseResult {
            x: seeds[n - 1],
            plateau: false,
            extrapolated: true,
        });
    }
    let plateau = images[j] == x_query && j + 1 < n && images[j + 1] == x_query;
    if j == 0 {
        let extrapolated = x_query < images[0];
        return Ok(InverseResult {
            x: seeds[0],
            plateau,
            extrapolated,
        });
    }
    // first index with image >= query, so the bracket has positive width
    let d = images[j] - images[j - 1];
    let frac = (x_query - images[j - 1]) / d;
    Ok(InverseResult {
        x: seeds[j - 1] + frac * (seeds[j] - seeds[j - 1]),
        plateau,
        extrapolated: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Multi-d flow of independent seed points plus the stability spot check.
#[derive(Debug, Clone)]
pub struct MultiFlowResult {
    pub points: Vec<Vec<f64>>,
    pub stability: StabilityReport,
}

/// Integrates each seed point from time `start` to time `end`. Backward runs
/// (end < start) are refused unless the field declares a two-sided modulus,
/// since one-sided control only prevents forward spreading. The returned
/// report compares up to 64 random seed-pair distances against the stability
/// envelope.
pub fn solve_flow_multi_d(
    field: &VelocityField,
    seeds: &[Vec<f64>],
    start: f64,
    end: f64,
    direction: Direction,
    ctl: &StepControl,
) -> Result<MultiFlowResult> {
    ensure(!seeds.is_empty(), "need at least one seed")?;
    for s in seeds {
        ensure(
            s.len() == field.dim,
            "seed dimension does not match the field",
        )?;
        for &x in s {
            ensure_finite(x, "seed coordinate")?;
        }
    }
    ensure_finite(start, "start time")?;
    ensure_finite(end, "end time")?;
    match direction {
        Direction::Forward => ensure(end >= start, "forward run needs end >= start")?,
        Direction::Backward => {
            ensure(end <= start, "backward run needs end <= start")?;
            ensure(
                field.two_sided,
                "backward integration needs a two-sided modulus declaration",
            )?;
        }
    }

    let dim = field.dim;
    let n = seeds.len();
    let parallel = n * dim > 256;
    let field_ref = field.clone();
    let deriv = move |t: f64, y: &[f64]| -> Vec<f64> {
        let chunks = par::map_indexed(n, parallel, |i| {
            let mut out = vec![0.0; dim];
            field_ref.eval_into(&y[i * dim..(i + 1) * dim], t, &mut out);
            out
        });
        let mut flat = Vec::with_capacity(n * dim);
        for c in chunks {
            flat.extend_from_slice(&c);
        }
        flat
    };

    let flat0: Vec<f64> = seeds.iter().flatten().copied().collect();
    let flat = integrate(&deriv, flat0, start, end, ctl, |_| {})?;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| flat[i * dim..(i + 1) * dim].to_vec())
        .collect();

    let stability = check_stability_multi(field, seeds, &points, start, end)?;
    Ok(MultiFlowResult { points, stability })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_stability_multi(
    field: &VelocityField,
    seeds: &[Vec<f64>],
    points: &[Vec<f64>],
    start: f64,
    end: f64,
) -> Result<StabilityReport> {
    let mut report = StabilityReport {
        pairs_checked: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
        tolerance: STABILITY_TOL,
        skipped_capped: 0,
    };
    let n = seeds.len();
    if n < 2 {
        return Ok(report);
    }
    let tau = (field.weight.integral(end.max(start)) - field.weight.integral(end.min(start))).abs();
    let unit = Weight::one();
    let mut rng = ChaCha8Rng::seed_from_u64(0x05AB1E);
    let pairs = 64.min(n * (n - 1) / 2);
    for _ in 0..pairs {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let gap0 = euclid(&seeds[i], &seeds[j]);
        let out = psi(&field.modulus, &unit, gap0, tau)?;
        if out.capped {
            report.skipped_capped += 1;
            continue;
        }
        report.pairs_checked += 1;
        let gap = euclid(&points[i], &points[j]);
        let excess = gap - out.value;
        if excess > report.worst_excess {
            report.worst_excess = excess;
        }
        if excess > STABILITY_TOL * (1.0 + out.value) {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Midpoint nodes and weights of the normalized bump kernel on (-1, 1).
fn bump_kernel(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut us = Vec::with_capacity(nodes);
    let mut ws = Vec::with_capacity(nodes);
    let mut total = 0.0;
    for j in 0..nodes {
        let u = -1.0 + (2.0 * j as f64 + 1.0) / nodes as f64;
        let w = (-1.0 / (1.0 - u * u)).exp();
        us.push(u);
        ws.push(w);
        total += w;
    }
    for w in &mut ws {
        *w /= total;
    }
    (us, ws)
}

/// Replaces b(., t) by its average against a discrete bump kernel of radius
/// eps. The sup bound, the declared modulus, and the weight all survive the
/// averaging verbatim (each shifted copy obeys the same declaration), while
/// increments at scales coarser than the kernel spacing are Lipschitz with
/// constant of order bound/eps.
pub fn mollify_velocity(field: &VelocityField, eps: f64) -> Result<VelocityField> {
    ensure_finite(eps, "mollification radius")?;
    ensure(eps > 0.0, "mollification radius must be positive")?;
    ensure(
        field.dim == 1,
        "mollification is implemented for scalar fields",
    )?;
    let (us, ws) = bump_kernel(65);
    let inner = field.eval1.as_ref().expect("scalar field").clone();
    let smooth = move |x: f64, t: f64| -> f64 {
        let mut acc = 0.0;
        for (u, w) in us.iter().zip(&ws) {
            acc += w * inner(x - eps * u, t);
        }
        acc
    };
    Ok(VelocityField {
        dim: 1,
        eval1: Some(Arc::new(smooth)),
        evald: None,
        bound: field.bound,
        modulus: field.modulus.clone(),
        weight: field.weight.clone(),
        two_sided: field.two_sided,
    })
}
