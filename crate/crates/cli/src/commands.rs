//! One handler per subcommand. Each run resolves its inputs, calls the
//! library, writes CSV tables plus `manifest.json` into the output
//! directory, and prints a one-line summary. The manifest echoes every
//! grid, seed, and tolerance the run used, and the `scenario` block written
//! by `solve` is what `verify` re-solves later.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use osgood_core::envelope::{bv_transport_bound, monotone_decomposition, pvar_transport_bound};
use osgood_core::flow::{solve_flow_1d, StepControl, VelocityField};
use osgood_core::moduli::Modulus;
use osgood_core::presets;
use osgood_core::pvar::p_variation;
use osgood_core::sampled::uniform_grid;
use osgood_core::transport::{
    bump_profile, l1_stability_report, renormalization_check, solve_backward_1d, solve_duhamel,
    solve_forward_1d, solve_forward_multi_d, time_continuity_modulus, weak_residual, TestFunction,
    TransportSolution,
};
use osgood_core::viscous::vanishing_viscosity_sweep;
use osgood_core::SampledFunction1D;

use crate::report::{int, num, text, write_csv, write_manifest, Field};
use crate::settings::Settings;
use crate::CliError;

pub fn run(cmd: crate::Command, s: &Settings) -> Result<(), CliError> {
    match cmd {
        crate::Command::Flow(a) => flow(a, s),
        crate::Command::Solve(c) => match c {
            SolveCmd::Forward(a) => solve_forward(a, s),
            SolveCmd::Backward(a) => solve_backward(a, s),
            SolveCmd::Multid(a) => solve_multid(a, s),
            SolveCmd::Duhamel(a) => solve_duhamel_cmd(a, s),
        },
        crate::Command::Verify(c) => match c {
            VerifyCmd::WeakResidual(a) => verify_weak_residual(a, s),
            VerifyCmd::Renorm(a) => verify_renorm(a, s),
            VerifyCmd::L1Stability(a) => verify_l1_stability(a, s),
            VerifyCmd::TimeContinuity(a) => verify_time_continuity(a, s),
        },
        crate::Command::Envelope(a) => envelope(a, s),
        crate::Command::Bound(c) => match c {
            BoundCmd::Bv(a) => bound(a, s, BoundKind::Bv),
            BoundCmd::Pvar(a) => bound(a, s, BoundKind::Pvar),
        },
        crate::Command::Young(a) => young(a, s),
        crate::Command::Pvar(a) => pvar_cmd(a, s),
        crate::Command::Viscous(a) => viscous(a, s),
        crate::Command::Presets(PresetsCmd::List) => presets_list(),
    }
}

// -------------------------------------------------------------------------
// Shared parsing and manifest helpers.
// -------------------------------------------------------------------------

fn parse_list(what: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = text
        .split(',')
        .map(|tok| tok.trim().parse::<f64>())
        .collect();
    let vals =
        vals.map_err(|e| CliError::usage(format!("{what} must be comma-separated numbers: {e}")))?;
    if vals.is_empty() {
        return Err(CliError::usage(format!("{what} must not be empty")));
    }
    Ok(vals)
}

/// "lo:hi:n" into a uniform grid with n nodes.
fn parse_grid(what: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "{what} must look like lo:hi:n, got {text}"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| CliError::usage(format!("{what} lo: {e}")))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| CliError::usage(format!("{what} hi: {e}")))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e| CliError::usage(format!("{what} n: {e}")))?;
    if lo >= hi || lo.is_nan() || hi.is_nan() || n < 2 {
        return Err(CliError::usage(format!(
            "{what} needs lo < hi and at least two nodes, got {text}"
        )));
    }
    Ok(uniform_grid(lo, hi, n))
}

fn settings_json(s: &Settings, ctl: &StepControl) -> serde_json::Value {
    json!({
        "seed": s.seed,
        "threads": s.threads,
        "tol": s.tol,
        "refine": s.refine,
        "step_control": {
            "rel_tol": ctl.rel_tol,
            "abs_tol": ctl.abs_tol,
            "h_init": ctl.h_init,
            "h_min": ctl.h_min,
            "merge_tol": ctl.merge_tol,
        },
    })
}

/// What `verify` needs to re-solve a `solve` run from scratch.
#[derive(Debug, Serialize, Deserialize)]
struct Scenario {
    kind: String,
    preset: String,
    u0: String,
    n: usize,
    times: Vec<f64>,
    r: f64,
    p: f64,
    seed: u64,
}

fn load_scenario(dir: &Path) -> Result<Scenario, CliError> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::usage(format!(
            "cannot read scenario manifest {}: {e}",
            path.display()
        ))
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("scenario manifest is not JSON: {e}")))?;
    let scenario = value.get("scenario").ok_or_else(|| {
        CliError::usage(format!(
            "manifest {} has no scenario block; point --scenario at a `solve forward` run",
            path.display()
        ))
    })?;
    serde_json::from_value(scenario.clone())
        .map_err(|e| CliError::usage(format!("scenario block is malformed: {e}")))
}

fn require_forward(sc: &Scenario) -> Result<(), CliError> {
    if sc.kind != "forward" {
        return Err(CliError::usage(format!(
            "this check re-solves forward scenarios only, found kind {}",
            sc.kind
        )));
    }
    Ok(())
}

fn finish(out: &Path, files: &[&str], manifest: serde_json::Value) -> Result<(), CliError> {
    write_manifest(out, manifest)?;
    println!(
        "wrote {} and manifest.json in {}",
        files.join(", "),
        out.display()
    );
    Ok(())
}

// -------------------------------------------------------------------------
// flow
// -------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct FlowArgs {
    /// Velocity-field preset (see `presets list`).
    #[arg(long)]
    preset: String,
    /// Comma-separated, strictly increasing seed positions.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    seeds: String,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    /// Number of output intervals between t0 and t1.
    #[arg(long, default_value_t = 16)]
    steps: usize,
}

fn flow(a: FlowArgs, s: &Settings) -> Result<(), CliError> {
    let field = presets::velocity_field(&a.preset)?;
    let seeds = parse_list("--seeds", &a.seeds)?;
    if !seeds.windows(2).all(|w| w[0] < w[1]) {
        return Err(CliError::usage(
            "--seeds must be strictly increasing; the ensemble preserves seed order".to_string(),
        ));
    }
    if a.t0 >= a.t1 || a.t0.is_nan() || a.t1.is_nan() || a.steps == 0 {
        return Err(CliError::usage(format!(
            "need t0 < t1 and at least one step, got t0={}, t1={}, steps={}",
            a.t0, a.t1, a.steps
        )));
    }
    let t_grid = uniform_grid(a.t0, a.t1, a.steps + 1);
    let ctl = s.step_control();
    let ens = solve_flow_1d(&field, &seeds, a.t0, &t_grid, &ctl)?;

    let mut rows = Vec::new();
    for (k, &t) in ens.times.iter().enumerate() {
        for (i, &seed) in ens.seeds.iter().enumerate() {
            rows.push(vec![
                num(t),
                num(seed),
                num(ens.states[k][i]),
                int(ens.merged[k][i] as i64),
            ]);
        }
    }
    write_csv(
        &s.out,
        "flow.csv",
        &["t", "seed", "position", "merged"],
        &rows,
    )?;
    finish(
        &s.out,
        &["flow.csv"],
        json!({
            "command": "flow",
            "preset": a.preset,
            "seeds": seeds,
            "t_grid": { "t0": a.t0, "t1": a.t1, "nodes": a.steps + 1 },
            "stability_probe": {
                "pairs_checked": ens.stability.pairs_checked,
                "violations": ens.stability.violations,
                "tolerance": ens.stability.tolerance,
            },
            "settings": settings_json(s, &ctl),
            "outputs": ["flow.csv"],
        }),
    )
}

// -------------------------------------------------------------------------
// solve
// -------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum SolveCmd {
    /// Push initial data forward along the flow.
    Forward(ForwardArgs),
    /// Pull terminal data back along the flow.
    Backward(BackwardArgs),
    /// Evaluate a multi-dimensional solution by back-tracing points.
    Multid(MultidArgs),
    /// Inhomogeneous problem with zero initial data (source integral).
    Duhamel(DuhamelArgs),
}

#[derive(Args, Debug)]
pub struct ForwardArgs {
    #[arg(long)]
    preset: String,
    /// Initial-data preset (see `presets list`).
    #[arg(long)]
    u0: String,
    /// Output times, comma separated; time 0 is always included.
    #[arg(long, default_value = "1")]
    t: String,
    /// Sample count for the initial data.
    #[arg(long, default_value_t = 4001)]
    n: usize,
    /// Snapshot window half-width.
    #[arg(long, default_value_t = 1.5)]
    r: f64,
    /// Variation exponent tracked by the solution.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

fn solve_forward(a: ForwardArgs, s: &Settings) -> Result<(), CliError> {
    let field = presets::velocity_field(&a.preset)?;
    let u0 = presets::initial_data(&a.u0, a.n, s.seed)?;
    let user_times = parse_list("--t", &a.t)?;
    let mut times = vec![0.0];
    for &t in &user_times {
        if t < 0.0 {
            return Err(CliError::usage(format!(
                "forward output times must be non-negative, got {t}"
            )));
        }
        if t > 1e-12 {
            times.push(t);
        }
    }
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    times.dedup();
    let ctl = s.step_control();
    let sol = solve_forward_1d(&field, &u0, &times, a.r, a.p, &ctl)?;
    write_solution_csv(&s.out, "solution.csv", &sol)?;

    let snap = &sol.snapshots[0];
    let scenario = Scenario {
        kind: "forward".to_string(),
        preset: a.preset.clone(),
        u0: a.u0.clone(),
        n: a.n,
        times: times.clone(),
        r: a.r,
        p: a.p,
        seed: s.seed,
    };
    finish(
        &s.out,
        &["solution.csv"],
        json!({
            "command": "solve forward",
            "scenario": scenario,
            "grids": {
                "data_span": presets::DATA_SPAN,
                "data_nodes": a.n,
                "snapshot_window": [-a.r, a.r],
                "snapshot_nodes": snap.len(),
                "times": times,
            },
            "settings": settings_json(s, &ctl),
            "outputs": ["solution.csv"],
        }),
    )
}

fn write_solution_csv(out: &Path, name: &str, sol: &TransportSolution) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (k, &t) in sol.times.iter().enumerate() {
        let snap = &sol.snapshots[k];
        for (&x, &u) in snap.grid().iter().zip(snap.values()) {
            rows.push(vec![num(t), num(x), num(u)]);
        }
    }
    write_csv(out, name, &["t", "x", "u"], &rows)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct BackwardArgs {
    #[arg(long)]
    preset: String,
    /// Terminal-data preset, prescribed at the final time.
    #[arg(long)]
    u0: String,
    /// Final time; snapshots cover [0, t].
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 12)]
    steps: usize,
    #[arg(long, default_value_t = 4001)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

fn solve_backward(a: BackwardArgs, s: &Settings) -> Result<(), CliError> {
    let field = presets::velocity_field(&a.preset)?;
    let u_terminal = presets::initial_data(&a.u0, a.n, s.seed)?;
    if !(a.t > 0.0 && a.t.is_finite()) || a.steps == 0 {
        return Err(CliError::usage(format!(
            "need a positive final time and at least one step, got t={}, steps={}",
            a.t, a.steps
        )));
    }
    let times = uniform_grid(0.0, a.t, a.steps + 1);
    let ctl = s.step_control();
    let sol = solve_backward_1d(&field, &u_terminal, &times, a.p, &ctl)?;
    write_solution_csv(&s.out, "solution.csv", &sol)?;
    finish(
        &s.out,
        &["solution.csv"],
        json!({
            "command": "solve backward",
            "scenario": Scenario {
                kind: "backward".to_string(),
                preset: a.preset.clone(),
                u0: a.u0.clone(),
                n: a.n,
                times: times.clone(),
                r: 0.0,
                p: a.p,
                seed: s.seed,
            },
            "grids": {
                "data_span": presets::DATA_SPAN,
                "data_nodes": a.n,
                "times": times,
            },
            "settings": settings_json(s, &ctl),
            "outputs": ["solution.csv"],
        }),
    )
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum MultidData {
    /// u0(x) = x1.
    Linear,
    /// u0(x) = x1 + 0.5 x2^2 - 0.3 x2.
    Quadratic,
    /// u0(x) = max(0, 1 - |x|).
    Radial,
}

impl MultidData {
    fn eval(self, x: &[f64]) -> f64 {
        match self {
            MultidData::Linear => x[0],
            MultidData::Quadratic => x[0] + 0.5 * x[1] * x[1] - 0.3 * x[1],
            MultidData::Radial => (1.0 - x[0].hypot(x[1])).max(0.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            MultidData::Linear => "linear",
            MultidData::Quadratic => "quadratic",
            MultidData::Radial => "radial",
        }
    }
}

#[derive(Args, Debug)]
pub struct MultidArgs {
    /// Two-dimensional velocity-field preset.
    #[arg(long)]
    preset: String,
    #[arg(long, value_enum, default_value_t = MultidData::Quadratic)]
    u0: MultidData,
    #[arg(long, default_value_t = 0.8)]
    t: f64,
    /// Polar evaluation grid as radii:angles.
    #[arg(long, default_value = "10:10")]
    grid: String,
    #[arg(long, default_value_t = 0.15)]
    rmin: f64,
    #[arg(long, default_value_t = 1.35)]
    rmax: f64,
}

fn solve_multid(a: MultidArgs, s: &Settings) -> Result<(), CliError> {
    let field = presets::velocity_field(&a.preset)?;
    let parts: Vec<&str> = a.grid.split(':').collect();
    let bad_grid = || {
        CliError::usage(format!(
            "--grid must look like radii:angles, got {}",
            a.grid
        ))
    };
    if parts.len() != 2 {
        return Err(bad_grid());
    }
    let nr: usize = parts[0].trim().parse().map_err(|_| bad_grid())?;
    let nth: usize = parts[1].trim().parse().map_err(|_| bad_grid())?;
    if nr < 1 || nth < 1 || !(a.rmin > 0.0 && a.rmin < a.rmax) {
        return Err(CliError::usage(format!(
            "need at least a 1x1 grid and 0 < rmin < rmax, got {}:{} over [{}, {}]",
            nr, nth, a.rmin, a.rmax
        )));
    }
    let mut points = Vec::with_capacity(nr * nth);
    for i in 0..nr {
        let frac = if nr == 1 {
            0.0
        } else {
            i as f64 / (nr - 1) as f64
        };
        let r = a.rmin + (a.rmax - a.rmin) * frac;
        for j in 0..nth {
            let th = 2.0 * std::f64::consts::PI * j as f64 / nth as f64;
            points.push(vec![r * th.cos(), r * th.sin()]);
        }
    }
    let ctl = s.step_control();
    let u0 = a.u0;
    let values = solve_forward_multi_d(&field, |x| u0.eval(x), &points, a.t, &ctl)?;
    let rows: Vec<Vec<Field>> = points
        .iter()
        .zip(&values)
        .map(|(pt, &v)| vec![num(pt[0]), num(pt[1]), num(v)])
        .collect();
    write_csv(&s.out, "multid.csv", &["x1", "x2", "u"], &rows)?;
    finish(
        &s.out,
        &["multid.csv"],
        json!({
            "command": "solve multid",
            "preset": a.preset,
            "u0": a.u0.name(),
            "t": a.t,
            "grids": { "polar": { "radii": nr, "angles": nth, "rmin": a.rmin, "rmax": a.rmax } },
            "settings": settings_json(s, &ctl),
            "outputs": ["multid.csv"],
        }),
    )
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum SourceKind {
    /// h(x, t) = bump(x / 0.6).
    Bump,
    /// h(x, t) = bump(x / 0.6) cos(pi t).
    Pulse,
}

impl SourceKind {
    fn eval(self, x: f64, t: f64) -> f64 {
        match self {
            SourceKind::Bump => bump_profile(x / 0.6),
            SourceKind::Pulse => bump_profile(x / 0.6) * (std::f64::consts::PI * t).cos(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SourceKind::Bump => "bump",
            SourceKind::Pulse => "pulse",
        }
    }
}

#[derive(Args, Debug)]
pub struct DuhamelArgs {
    #[arg(long)]
    preset: String,
    #[arg(long, value_enum, default_value_t = SourceKind::Bump)]
    source: SourceKind,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Trapezoid panels for the source integral.
    #[arg(long, default_value_t = 32)]
    panels: usize,
    /// Evaluation grid as lo:hi:n.
    #[arg(long, default_value = "-1:1:201")]
    x_grid: String,
}

fn solve_duhamel_cmd(a: DuhamelArgs, s: &Settings) -> Result<(), CliError> {
    let field = presets::velocity_field(&a.preset)?;
    let x_grid = parse_grid("--x-grid", &a.x_grid)?;
    let ctl = s.step_control();
    let source = a.source;
    let sol = solve_duhamel(
        &field,
        |x, t| source.eval(x, t),
        &x_grid,
        a.t,
        a.panels,
        &ctl,
    )?;
    let rows: Vec<Vec<Field>> = sol
        .grid()
        .iter()
        .zip(sol.values())
        .map(|(&x, &u)| vec![num(x), num(u)])
        .collect();
    write_csv(&s.out, "duhamel.csv", &["x", "u"], &rows)?;
    finish(
        &s.out,
        &["duhamel.csv"],
        json!({
            "command": "solve duhamel",
            "preset": a.preset,
            "source": a.source.name(),
            "t": a.t,
            "panels": a.panels,
            "grids": { "x_nodes": x_grid.len(), "x_span": [x_grid[0], x_grid[x_grid.len() - 1]] },
            "settings": settings_json(s, &ctl),
            "outputs": ["duhamel.csv"],
        }),
    )
}

// -------------------------------------------------------------------------
// verify
// -------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum VerifyCmd {
    /// Weak residual over a joint space-time refinement ladder.
    WeakResidual(ResidualArgs),
    /// Residual of eta(u) for eta = |.| over the same ladder.
    Renorm(ResidualArgs),
    /// L1 distance of a perturbed run against the growth envelope.
    L1Stability(StabilityArgs),
    /// L1 modulus of continuity in time of the stored snapshots.
    TimeContinuity(TimeContinuityArgs),
}

#[derive(Args, Debug)]
pub struct ResidualArgs {
    /// Directory holding the manifest of a `solve forward` run.
    #[arg(long)]
    scenario: PathBuf,
    /// Test-function center and radius in space.
    #[arg(long, default_value_t = 0.55)]
    phi_x: f64,
    #[arg(long, default_value_t = 0.25)]
    phi_rx: f64,
    /// Test-function center and radius in time, as fractions of the final time.
    #[arg(long, default_value_t = 0.5)]
    phi_tc: f64,
    #[arg(long, default_value_t = 0.35)]
    phi_tr: f64,
    /// Dual variation exponent for the pairing.
    #[arg(long, default_value_t = 1.5)]
    q: f64,
}

/// Ladder level: 250 * 2^level + 1 data samples, 12 * 2^level + 1 times.
fn ladder_solution(
    sc: &Scenario,
    field: &VelocityField,
    level: u32,
    ctl: &StepControl,
) -> Result<(SampledFunction1D, TransportSolution, usize, usize), CliError> {
    let n_space = 250 * 2usize.pow(level) + 1;
    let n_time = 12 * 2usize.pow(level) + 1;
    let t_final = *sc.times.last().unwrap();
    let u0 = presets::initial_data(&sc.u0, n_space, sc.seed)?;
    let t_grid = uniform_grid(0.0, t_final, n_time);
    let sol = solve_forward_1d(field, &u0, &t_grid, sc.r, sc.p, ctl)?;
    Ok((u0, sol, n_space, n_time))
}

fn residual_phi(a: &ResidualArgs, t_final: f64) -> Result<TestFunction, CliError> {
    TestFunction::bump(a.phi_x, a.phi_rx, a.phi_tc * t_final, a.phi_tr * t_final)
        .map_err(Into::into)
}

fn verify_weak_residual(a: ResidualArgs, s: &Settings) -> Result<(), CliError> {
    let sc = load_scenario(&a.scenario)?;
    require_forward(&sc)?;
    let field = presets::velocity_field(&sc.preset)?;
    let ctl = s.step_control();
    let t_final = *sc.times.last().unwrap();
    let phi = residual_phi(&a, t_final)?;

    let mut rows = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    for level in 0..=s.refine as u32 {
        let (u0, sol, n_space, n_time) = ladder_solution(&sc, &field, level, &ctl)?;
        let rep = weak_residual(&sol, &field, &u0, &phi, sc.p, a.q)?;
        let res = rep.value.abs();
        let ratio = residuals.last().map(|prev| prev / res.max(1e-300));
        rows.push(vec![
            int(level as i64),
            int(n_space as i64),
            int(n_time as i64),
            num(res),
            match ratio {
                Some(r) => num(r),
                None => text(""),
            },
        ]);
        residuals.push(res);
    }
    let decreasing = residuals.windows(2).all(|w| w[1] <= w[0]);
    write_csv(
        &s.out,
        "verify-weak-residual.csv",
        &["level", "n_space", "n_time", "residual", "ratio"],
        &rows,
    )?;
    println!(
        "weak residual over {} levels: {:?}; monotone decreasing: {decreasing}",
        residuals.len(),
        residuals
    );
    finish(
        &s.out,
        &["verify-weak-residual.csv"],
        json!({
            "command": "verify weak-residual",
            "scenario": sc,
            "ladder": { "space_base": 250, "time_base": 12, "levels": s.refine + 1 },
            "test_function": {
                "x_center": a.phi_x, "x_radius": a.phi_rx,
                "t_center": a.phi_tc * t_final, "t_radius": a.phi_tr * t_final,
            },
            "q": a.q,
            "decreasing": decreasing,
            "settings": settings_json(s, &ctl),
            "outputs": ["verify-weak-residual.csv"],
        }),
    )
}

fn verify_renorm(a: ResidualArgs, s: &Settings) -> Result<(), CliError> {
    let sc = load_scenario(&a.scenario)?;
    require_forward(&sc)?;
    let field = presets::velocity_field(&sc.preset)?;
    let ctl = s.step_control();
    let t_final = *sc.times.last().unwrap();
    let phi = residual_phi(&a, t_final)?;

    let mut rows = Vec::new();
    let mut worst_ratio = 0.0f64;
    for level in 0..=s.refine as u32 {
        let (u0, sol, n_space, n_time) = ladder_solution(&sc, &field, level, &ctl)?;
        let rs = weak_residual(&sol, &field, &u0, &phi, sc.p, a.q)?
            .value
            .abs();
        let re = renormalization_check(&sol, &field, &u0, |v| v.abs(), &phi, sc.p, a.q)?
            .value
            .abs();
        let ratio = re / (rs + 1e-15);
        worst_ratio = worst_ratio.max(ratio);
        rows.push(vec![
            int(level as i64),
            int(n_space as i64),
            int(n_time as i64),
            num(rs),
            num(re),
            num(ratio),
        ]);
    }
    write_csv(
        &s.out,
        "verify-renorm.csv",
        &[
            "level",
            "n_space",
            "n_time",
            "residual",
            "residual_eta",
            "ratio",
        ],
        &rows,
    )?;
    println!("renormalized residual tracks the solution residual; worst ratio {worst_ratio:.3}");
    finish(
        &s.out,
        &["verify-renorm.csv"],
        json!({
            "command": "verify renorm",
            "scenario": sc,
            "eta": "abs",
            "ladder": { "space_base": 250, "time_base": 12, "levels": s.refine + 1 },
            "q": a.q,
            "worst_ratio": worst_ratio,
            "settings": settings_json(s, &ctl),
            "outputs": ["verify-renorm.csv"],
        }),
    )
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Amplitude scale of the seeded perturbation bumps.
    #[arg(long, default_value_t = 0.02)]
    amp: f64,
    #[arg(long, default_value_t = 3)]
    bumps: usize,
}

fn verify_l1_stability(a: StabilityArgs, s: &Settings) -> Result<(), CliError> {
    let sc = load_scenario(&a.scenario)?;
    require_forward(&sc)?;
    let field = presets::velocity_field(&sc.preset)?;
    let ctl = s.step_control();
    let t_final = *sc.times.last().unwrap();

    // The report window must stay inside the snapshot window after it is
    // enlarged by the maximal drift over [0, T].
    let margin = 0.05;
    let r_report = sc.r - field.bound() * t_final - margin;
    if r_report <= 0.0 {
        return Err(CliError::usage(format!(
            "snapshot window r = {} is too small for a stability report over [0, {}]: \
             it must exceed the maximal drift {} plus a margin",
            sc.r,
            t_final,
            field.bound() * t_final
        )));
    }

    let u1 = presets::initial_data(&sc.u0, sc.n, sc.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let bumps: Vec<(f64, f64, f64)> = (0..a.bumps)
        .map(|_| {
            let amp = a.amp * rng.gen_range(0.25..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let center = rng.gen_range(-0.6 * r_report..0.6 * r_report);
            let width = rng.gen_range(0.05..0.3);
            (amp, center, width)
        })
        .collect();
    let perturbed_vals: Vec<f64> = u1
        .grid()
        .iter()
        .zip(u1.values())
        .map(|(&x, &v)| {
            let mut out = v;
            for &(amp, c, w) in &bumps {
                out += amp * bump_profile((x - c) / w);
            }
            out
        })
        .collect();
    let u2 = SampledFunction1D::new(u1.grid().to_vec(), perturbed_vals, u1.interp())?;

    let sol1 = solve_forward_1d(&field, &u1, &sc.times, sc.r, sc.p, &ctl)?;
    let sol2 = solve_forward_1d(&field, &u2, &sc.times, sc.r, sc.p, &ctl)?;

    let mut rows = Vec::new();
    let mut all_pass = true;
    for &t in sc.times.iter().skip(1) {
        let rep = l1_stability_report(&field, &sol1, &sol2, r_report, t, sc.p)?;
        all_pass &= rep.pass;
        rows.push(vec![
            num(t),
            num(rep.lhs),
            num(rep.rhs),
            num(rep.initial_l1),
            num(rep.witness),
            int(rep.pass as i64),
        ]);
    }
    write_csv(
        &s.out,
        "verify-l1-stability.csv",
        &["t", "lhs", "rhs", "initial_l1", "witness", "pass"],
        &rows,
    )?;
    println!("L1 stability against the growth envelope: all pass = {all_pass}");
    finish(
        &s.out,
        &["verify-l1-stability.csv"],
        json!({
            "command": "verify l1-stability",
            "scenario": sc,
            "perturbation": { "bumps": bumps, "amp": a.amp },
            "report_window": r_report,
            "all_pass": all_pass,
            "settings": settings_json(s, &ctl),
            "outputs": ["verify-l1-stability.csv"],
        }),
    )
}

#[derive(Args, Debug)]
pub struct TimeContinuityArgs {
    #[arg(long)]
    scenario: PathBuf,
}

fn verify_time_continuity(a: TimeContinuityArgs, s: &Settings) -> Result<(), CliError> {
    let sc = load_scenario(&a.scenario)?;
    require_forward(&sc)?;
    let field = presets::velocity_field(&sc.preset)?;
    let ctl = s.step_control();
    let t_final = *sc.times.last().unwrap();

    let margin = 0.05;
    let r_report = sc.r - field.bound() * t_final - margin;
    if r_report <= 0.0 {
        return Err(CliError::usage(format!(
            "snapshot window r = {} is too small to measure continuity over [0, {}]",
            sc.r, t_final
        )));
    }

    // Re-solve on a dense time grid so the modulus has taus to compare.
    let n_time = 12 * 2usize.pow(s.refine.min(5) as u32) + 1;
    let u0 = presets::initial_data(&sc.u0, sc.n, sc.seed)?;
    let t_grid = uniform_grid(0.0, t_final, n_time);
    let sol = solve_forward_1d(&field, &u0, &t_grid, sc.r, sc.p, &ctl)?;
    let rep = time_continuity_modulus(&sol, r_report, t_final)?;

    let rows: Vec<Vec<Field>> = rep
        .rows
        .iter()
        .map(|&(tau, modulus)| vec![num(tau), num(modulus)])
        .collect();
    write_csv(
        &s.out,
        "verify-time-continuity.csv",
        &["tau", "l1_modulus"],
        &rows,
    )?;
    println!(
        "time-continuity modulus over {} taus: decays = {}",
        rep.rows.len(),
        rep.pass
    );
    finish(
        &s.out,
        &["verify-time-continuity.csv"],
        json!({
            "command": "verify time-continuity",
            "scenario": sc,
            "time_nodes": n_time,
            "report_window": r_report,
            "pass": rep.pass,
            "settings": settings_json(s, &ctl),
            "outputs": ["verify-time-continuity.csv"],
        }),
    )
}

// -------------------------------------------------------------------------
// envelope / bound / young / pvar
// -------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct EnvelopeArgs {
    /// Initial-data preset used as the profile (must be non-negative).
    #[arg(long)]
    data: String,
    #[arg(long, default_value_t = 801)]
    n: usize,
    /// Base radius of the dyadic cascade.
    #[arg(long, default_value_t = 0.25)]
    r0: f64,
    /// Cascade depth; by default it stops at one grid cell.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Fold the profile through |.| first.
    #[arg(long)]
    abs: bool,
}

fn envelope(a: EnvelopeArgs, s: &Settings) -> Result<(), CliError> {
    let mut gamma = presets::initial_data(&a.data, a.n, s.seed)?;
    if a.abs {
        gamma = gamma.map_values(f64::abs)?;
    }
    let dec = monotone_decomposition(&gamma, a.r0, a.depth)?;
    let bounds = dec.layer_bounds(a.p)?;
    let all_pass = bounds.iter().all(|b| b.pass);
    let rows: Vec<Vec<Field>> = bounds
        .iter()
        .map(|b| {
            vec![
                int(b.k as i64),
                num(b.l1),
                num(b.l1_bound),
                num(b.tv),
                num(b.tv_bound),
                int(b.pass as i64),
            ]
        })
        .collect();
    write_csv(
        &s.out,
        "envelope.csv",
        &["k", "L1", "L1_bound", "TV", "TV_bound", "pass"],
        &rows,
    )?;
    println!(
        "decomposed into {} layers (r0 = {}); all bounds pass = {all_pass}",
        dec.layers.len(),
        a.r0
    );
    finish(
        &s.out,
        &["envelope.csv"],
        json!({
            "command": "envelope",
            "data": a.data,
            "abs": a.abs,
            "grids": { "data_span": presets::DATA_SPAN, "data_nodes": a.n },
            "r0": a.r0,
            "depth": dec.depth(),
            "p": a.p,
            "support_length": dec.support_length,
            "all_pass": all_pass,
            "settings": settings_json(s, &StepControl::default()),
            "outputs": ["envelope.csv"],
        }),
    )
}

enum BoundKind {
    Bv,
    Pvar,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ModulusChoice {
    /// h |ln h|, clipped at 1/e.
    Log,
    /// h |ln h| with the closed-form envelope.
    Loglip,
    /// h |ln h| ln |ln h|, clipped.
    Loglog,
}

impl ModulusChoice {
    fn build(self) -> Modulus {
        match self {
            ModulusChoice::Log => Modulus::log(),
            ModulusChoice::Loglip => Modulus::log_lipschitz(),
            ModulusChoice::Loglog => Modulus::loglog(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModulusChoice::Log => "log",
            ModulusChoice::Loglip => "loglip",
            ModulusChoice::Loglog => "loglog",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum BoundCmd {
    /// Total variation times the modulus at mass / variation.
    Bv(BoundArgs),
    /// p-variation form with the star-transformed modulus.
    Pvar(BoundArgs),
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Initial-data preset used as the profile (must be non-negative).
    #[arg(long)]
    data: String,
    #[arg(long, default_value_t = 801)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ModulusChoice::Log)]
    modulus: ModulusChoice,
    /// Variation exponent (the BV form reports p = 1).
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    abs: bool,
}

fn bound(a: BoundArgs, s: &Settings, kind: BoundKind) -> Result<(), CliError> {
    let mut gamma = presets::initial_data(&a.data, a.n, s.seed)?;
    if a.abs {
        gamma = gamma.map_values(f64::abs)?;
    }
    let omega = a.modulus.build();
    let (span_lo, span_hi) = gamma.span();
    let support_length = span_hi - span_lo;
    let (kind_name, p_used, value, variation) = match kind {
        BoundKind::Bv => {
            let value = bv_transport_bound(&gamma, &omega)?;
            (String::from("bv"), 1.0, value, gamma.total_variation())
        }
        BoundKind::Pvar => {
            let value = pvar_transport_bound(&gamma, &omega, a.p, support_length)?;
            let variation = p_variation(&gamma, a.p, gamma.span())?;
            (String::from("pvar"), a.p, value, variation)
        }
    };
    let rows = vec![vec![
        text(kind_name.clone()),
        num(p_used),
        num(value),
        num(gamma.l1_norm()),
        num(variation),
        num(support_length),
    ]];
    write_csv(
        &s.out,
        "bound.csv",
        &[
            "kind",
            "p",
            "bound",
            "mass_l1",
            "variation",
            "support_length",
        ],
        &rows,
    )?;
    println!("{kind_name} transport bound = {value:.6e}");
    finish(
        &s.out,
        &["bound.csv"],
        json!({
            "command": format!("bound {kind_name}"),
            "data": a.data,
            "abs": a.abs,
            "modulus": a.modulus.name(),
            "p": p_used,
            "grids": { "data_span": presets::DATA_SPAN, "data_nodes": a.n },
            "bound": value,
            "settings": settings_json(s, &StepControl::default()),
            "outputs": ["bound.csv"],
        }),
    )
}

#[derive(Args, Debug)]
pub struct YoungArgs {
    /// Integrand preset.
    #[arg(long)]
    f: String,
    /// Integrator preset.
    #[arg(long)]
    g: String,
    #[arg(long, default_value_t = 2049)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
}

fn young(a: YoungArgs, s: &Settings) -> Result<(), CliError> {
    let f = presets::initial_data(&a.f, a.n, s.seed)?;
    let g = presets::initial_data(&a.g, a.n, s.seed.wrapping_add(1))?;
    let tol = s.scalar_tol();
    let res = osgood_core::young::young_integral(&f, &g, a.p, a.q, tol)?;
    let rows = vec![vec![
        num(res.value),
        num(res.error_bound),
        int(res.refinement_depth as i64),
        int(res.converged as i64),
        num(res.p),
        num(res.q),
        num(res.theta),
    ]];
    write_csv(
        &s.out,
        "young.csv",
        &[
            "value",
            "error_bound",
            "depth",
            "converged",
            "p",
            "q",
            "theta",
        ],
        &rows,
    )?;
    println!(
        "pairing = {:.12e} (certificate {:.3e}, depth {}, converged {})",
        res.value, res.error_bound, res.refinement_depth, res.converged
    );
    finish(
        &s.out,
        &["young.csv"],
        json!({
            "command": "young",
            "f": a.f,
            "g": a.g,
            "grids": { "data_span": presets::DATA_SPAN, "data_nodes": a.n },
            "p": a.p,
            "q": a.q,
            "tol": tol,
            "theta": res.theta,
            "settings": settings_json(s, &StepControl::default()),
            "outputs": ["young.csv"],
        }),
    )
}

#[derive(Args, Debug)]
pub struct PvarArgs {
    #[arg(long)]
    data: String,
    #[arg(long, default_value_t = 2049)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

fn pvar_cmd(a: PvarArgs, s: &Settings) -> Result<(), CliError> {
    let f = presets::initial_data(&a.data, a.n, s.seed)?;
    let (lo, hi) = f.span();
    let value = p_variation(&f, a.p, (lo, hi))?;
    let rows = vec![vec![num(a.p), num(lo), num(hi), num(value)]];
    write_csv(&s.out, "pvar.csv", &["p", "lo", "hi", "value"], &rows)?;
    println!("|{}|_V^{} over [{lo}, {hi}] = {value:.12e}", a.data, a.p);
    finish(
        &s.out,
        &["pvar.csv"],
        json!({
            "command": "pvar",
            "data": a.data,
            "grids": { "data_span": presets::DATA_SPAN, "data_nodes": a.n },
            "p": a.p,
            "value": value,
            "settings": settings_json(s, &StepControl::default()),
            "outputs": ["pvar.csv"],
        }),
    )
}

// -------------------------------------------------------------------------
// viscous
// -------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct ViscousArgs {
    #[arg(long)]
    preset: String,
    /// Terminal-data preset for the backward problem.
    #[arg(long)]
    terminal: String,
    /// Strictly decreasing positive viscosities.
    #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
    eps: String,
    #[arg(long, default_value_t = 2000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    /// Evaluation grid as lo:hi:n.
    #[arg(long, default_value = "0.15:0.85:9")]
    x_grid: String,
    #[arg(long, default_value_t = 2001)]
    n: usize,
}

fn viscous(a: ViscousArgs, s: &Settings) -> Result<(), CliError> {
    let field = presets::velocity_field(&a.preset)?;
    let terminal = presets::initial_data(&a.terminal, a.n, s.seed)?;
    let eps_list = parse_list("--eps", &a.eps)?;
    let x_grid = parse_grid("--x-grid", &a.x_grid)?;
    let u_terminal = move |y: f64| terminal.eval(y);
    let rows = vanishing_viscosity_sweep(
        &field, u_terminal, &x_grid, a.t, a.t_final, &eps_list, a.paths, a.dt, s.seed,
    )?;
    let csv_rows: Vec<Vec<Field>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.eps),
                num(r.sup_deviation),
                num(r.std_error),
                int(a.paths as i64),
            ]
        })
        .collect();
    write_csv(
        &s.out,
        "viscous.csv",
        &["eps", "sup_dev", "std_err", "paths"],
        &csv_rows,
    )?;
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_deviation).collect();
    println!("sup deviation from the transport solution per eps: {sups:?}");
    finish(
        &s.out,
        &["viscous.csv"],
        json!({
            "command": "viscous",
            "preset": a.preset,
            "terminal": a.terminal,
            "eps": eps_list,
            "paths": a.paths,
            "dt": a.dt,
            "t": a.t,
            "t_final": a.t_final,
            "grids": {
                "x_nodes": x_grid.len(),
                "x_span": [x_grid[0], x_grid[x_grid.len() - 1]],
                "data_nodes": a.n,
            },
            "settings": settings_json(s, &StepControl::default()),
            "outputs": ["viscous.csv"],
        }),
    )
}

// -------------------------------------------------------------------------
// presets
// -------------------------------------------------------------------------

#[derive(Subcommand, Debug)]
pub enum PresetsCmd {
    /// Print the stable catalog of field and data presets.
    List,
}

fn presets_list() -> Result<(), CliError> {
    for (name, desc) in presets::FIELD_PRESETS {
        println!("field   {name:<14} {desc}");
    }
    for (name, desc) in presets::DATA_PRESETS {
        println!("data    {name:<14} {desc}");
    }
    println!("multid  linear         u0(x) = x1");
    println!("multid  quadratic      u0(x) = x1 + 0.5 x2^2 - 0.3 x2");
    println!("multid  radial         u0(x) = max(0, 1 - |x|)");
    println!("source  bump           h(x, t) = bump(x / 0.6)");
    println!("source  pulse          h(x, t) = bump(x / 0.6) cos(pi t)");
    Ok(())
}
