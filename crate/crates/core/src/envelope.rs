//! Lower box envelope (a morphological opening), the monotone layer
//! decomposition it generates, and closed-form bounds on pairings
//! `∫ γ dβ` when the integrator admits a concave one-sided modulus.
//!
//! Everything here acts on uniformly sampled non-negative functions. The
//! envelope at radius `r` replaces γ by the tallest function below γ that can
//! be written as a supremum of boxes of width 2r; halving the radius
//! repeatedly splits γ into non-negative layers whose L¹ and TV sizes decay
//! geometrically, which is what the transport bounds exploit.

use std::collections::VecDeque;

use crate::error::{ensure, ensure_finite, Error, Result};
use crate::moduli::{eval_modulus, star_transform, Modulus};
use crate::par;
use crate::pvar::p_variation;
use crate::sampled::SampledFunction1D;

/// Relative slack applied when a measured quantity is compared against its
/// certified bound; absorbs float evaluation noise only.
pub const BOUND_SLACK: f64 = 1e-12;

/// Measured layer sizes next to the bounds they must satisfy.
#[derive(Debug, Clone)]
pub struct LayerBound {
    pub k: usize,
    pub l1: f64,
    pub l1_bound: f64,
    pub tv: f64,
    pub tv_bound: f64,
    pub pass: bool,
}

/// Layers γ₀, γ₁, …, γ_K with Σ_{k≤n} γ_k equal to the envelope of the source
/// at radius r0/2ⁿ, exactly on the grid.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub layers: Vec<SampledFunction1D>,
    pub r0: f64,
    pub source: SampledFunction1D,
    /// Length of the grid interval; the source's support sits inside it.
    pub support_length: f64,
}

/// Largest index offset m with m·step < r, tolerant of noise in r/step.
fn window_half_width(r: f64, step: f64) -> usize {
    let m = (r / step - 1e-9).ceil() - 1.0;
    if m <= 0.0 {
        0
    } else {
        m as usize
    }
}

/// Sliding min (or max) over the index window [i-w, i+w] clamped to the
/// slice, via a monotone deque; O(n) total.
fn sliding_extreme(vals: &[f64], w: usize, take_min: bool) -> Vec<f64> {
    let n = vals.len();
    if w == 0 {
        return vals.to_vec();
    }
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for i in 0..n {
        let hi = (i + w).min(n - 1);
        while next <= hi {
            while let Some(&b) = dq.back() {
                let dominated = if take_min {
                    vals[b] >= vals[next]
                } else {
                    vals[b] <= vals[next]
                };
                if dominated {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(w);
        while *dq.front().expect("window is never empty") < lo {
            dq.pop_front();
        }
        out.push(vals[*dq.front().expect("window is never empty")]);
    }
    out
}

fn opened_values(vals: &[f64], w: usize) -> Vec<f64> {
    let eroded = sliding_extreme(vals, w, true);
    sliding_extreme(&eroded, w, false)
}

fn require_uniform_nonneg(gamma: &SampledFunction1D, what: &str) -> Result<f64> {
    let step = gamma.uniform_step().ok_or_else(|| {
        Error::validation(format!(
            "{what} requires a uniform grid; resample onto sampled::uniform_grid first"
        ))
    })?;
    if let Some(bad) = gamma.values().iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::domain(format!(
            "{what} requires non-negative samples, found {bad}"
        )));
    }
    Ok(step)
}

/// Erosion-then-dilation of γ with the open ball of radius r, realized on the
/// grid as min-then-max over index windows of half-width ceil(r/Δ)-1; windows
/// clamp at the grid ends. Output values are selections of input values.
pub fn lower_box_envelope(gamma: &SampledFunction1D, r: f64) -> Result<SampledFunction1D> {
    ensure_finite(r, "envelope radius")?;
    ensure(r > 0.0, "envelope radius must be positive")?;
    let step = require_uniform_nonneg(gamma, "lower box envelope")?;
    let w = window_half_width(r, step);
    SampledFunction1D::new(
        gamma.grid().to_vec(),
        opened_values(gamma.values(), w),
        gamma.interp(),
    )
}

/// Splits γ into layers γ₀ = γ̄_{r0} and γ_k = γ̄_{r0/2^k} - γ̄_{r0/2^{k-1}}.
/// With `depth: None` the cascade stops once the radius reaches one grid
/// cell, where the envelope equals γ and the layers sum to γ exactly.
pub fn monotone_decomposition(
    gamma: &SampledFunction1D,
    r0: f64,
    depth: Option<usize>,
) -> Result<Decomposition> {
    let parallel = match depth {
        Some(k_last) => gamma.len().saturating_mul(k_last + 1) > (1 << 14),
        None => gamma.len() > (1 << 12),
    };
    monotone_decomposition_with(gamma, r0, depth, parallel)
}

/// [`monotone_decomposition`] with an explicit schedule switch; the output
/// does not depend on the schedule.
pub fn monotone_decomposition_with(
    gamma: &SampledFunction1D,
    r0: f64,
    depth: Option<usize>,
    parallel: bool,
) -> Result<Decomposition> {
    ensure_finite(r0, "base radius")?;
    ensure(r0 > 0.0, "base radius must be positive")?;
    let step = require_uniform_nonneg(gamma, "monotone decomposition")?;
    let k_last = depth.unwrap_or_else(|| default_depth(r0, step));
    let envs: Vec<Vec<f64>> = par::map_indexed(k_last + 1, parallel, |k| {
        let w = window_half_width(r0 * 0.5f64.powi(k as i32), step);
        opened_values(gamma.values(), w)
    });
    let grid = gamma.grid().to_vec();
    let mut layers = Vec::with_capacity(k_last + 1);
    layers.push(SampledFunction1D::new(
        grid.clone(),
        envs[0].clone(),
        gamma.interp(),
    )?);
    for k in 1..=k_last {
        let diff: Vec<f64> = envs[k]
            .iter()
            .zip(&envs[k - 1])
            .map(|(hi, lo)| hi - lo)
            .collect();
        layers.push(SampledFunction1D::new(grid.clone(), diff, gamma.interp())?);
    }
    let (a, b) = gamma.span();
    Ok(Decomposition {
        layers,
        r0,
        source: gamma.clone(),
        support_length: b - a,
    })
}

/// Smallest k with r0/2^k at most one grid cell.
fn default_depth(r0: f64, step: f64) -> usize {
    let k = (r0 / step).log2().ceil();
    if k <= 0.0 {
        0
    } else {
        k as usize
    }
}

impl Decomposition {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Envelope radius of layer k's finer side: r0 / 2^k.
    pub fn radius(&self, k: usize) -> f64 {
        self.r0 * 0.5f64.powi(k as i32)
    }

    /// Pointwise sum of layers 0..=upto, which telescopes to the envelope at
    /// radius r0/2^upto.
    pub fn partial_sum(&self, upto: usize) -> Result<SampledFunction1D> {
        ensure(upto < self.layers.len(), "partial sum index out of range")?;
        let mut acc = self.layers[0].values().to_vec();
        for layer in &self.layers[1..=upto] {
            for (a, v) in acc.iter_mut().zip(layer.values()) {
                *a += v;
            }
        }
        SampledFunction1D::new(self.source.grid().to_vec(), acc, self.source.interp())
    }

    /// Certified per-layer sizes: ‖γ₀‖₁ ≤ ‖γ‖₁, then for k ≥ 1
    /// ‖γ_k‖₁ ≤ r0^{1/p} L^{1-1/p} 2^{-(k-2)/p} |γ|_{V^p}, and for every k
    /// |γ_k|_TV ≤ (2^k L / r0)^{1-1/p} |γ|_{V^p}. The grid must contain the
    /// support, so the end samples of the source must vanish.
    pub fn layer_bounds(&self, p: f64) -> Result<Vec<LayerBound>> {
        ensure_finite(p, "variation exponent")?;
        ensure(p >= 1.0, "variation exponent must be at least 1")?;
        let vals = self.source.values();
        ensure(
            vals[0] == 0.0 && vals[vals.len() - 1] == 0.0,
            "layer bounds need the grid to contain the support: end samples must be zero",
        )?;
        let (a, b) = self.source.span();
        let gvar = p_variation(&self.source, p, (a, b))?;
        let gl1 = self.source.l1_norm();
        let l = self.support_length;
        let mut out = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let l1 = layer.l1_norm();
            let tv = layer.total_variation();
            let l1_bound = if k == 0 {
                gl1
            } else {
                self.r0.powf(1.0 / p)
                    * l.powf(1.0 - 1.0 / p)
                    * 2f64.powf(-((k as f64) - 2.0) / p)
                    * gvar
            };
            let tv_bound = (2f64.powi(k as i32) * l / self.r0).powf(1.0 - 1.0 / p) * gvar;
            let pass = l1 <= l1_bound + BOUND_SLACK * (1.0 + l1_bound)
                && tv <= tv_bound + BOUND_SLACK * (1.0 + tv_bound);
            out.push(LayerBound {
                k,
                l1,
                l1_bound,
                tv,
                tv_bound,
                pass,
            });
        }
        Ok(out)
    }
}

fn require_support_inside(gamma: &SampledFunction1D, what: &str) -> Result<()> {
    let vals = gamma.values();
    ensure(
        vals[0] == 0.0 && vals[vals.len() - 1] == 0.0,
        format!("{what} treats the function as zero off-grid: end samples must be zero"),
    )
}

/// |γ|_TV · ω(‖γ‖₁ / |γ|_TV), the bound on ∫ γ dβ when β has concave
/// one-sided modulus ω with unit constant. Zero variation returns 0.
pub fn bv_transport_bound(gamma: &SampledFunction1D, omega: &Modulus) -> Result<f64> {
    ensure(
        omega.is_concave(),
        "transport bound needs a concave modulus",
    )?;
    if let Some(bad) = gamma.values().iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::domain(format!(
            "transport bound requires non-negative samples, found {bad}"
        )));
    }
    require_support_inside(gamma, "bv transport bound")?;
    let tv = gamma.total_variation();
    if tv == 0.0 {
        return Ok(0.0);
    }
    let l1 = gamma.l1_norm();
    Ok(tv * eval_modulus(omega, l1 / tv)?)
}

/// V · ω*(‖γ‖₁ / V) with V = |γ|_{V^p} L^{1-1/p}, where ω* is the star
/// transform of ω at exponent p. L must cover the sampled support. Zero
/// variation returns 0; p = 1 collapses to the BV bound plus c₁‖γ‖₁.
pub fn pvar_transport_bound(
    gamma: &SampledFunction1D,
    omega: &Modulus,
    p: f64,
    support_length: f64,
) -> Result<f64> {
    ensure_finite(p, "variation exponent")?;
    ensure(p >= 1.0, "variation exponent must be at least 1")?;
    ensure_finite(support_length, "support length")?;
    ensure(support_length > 0.0, "support length must be positive")?;
    ensure(
        omega.is_concave(),
        "transport bound needs a concave modulus",
    )?;
    if let Some(bad) = gamma.values().iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::domain(format!(
            "transport bound requires non-negative samples, found {bad}"
        )));
    }
    require_support_inside(gamma, "p-variation transport bound")?;
    let (lo, hi) = support_extent(gamma);
    ensure(
        hi - lo <= support_length * (1.0 + 1e-12),
        "declared support length is shorter than the sampled support",
    )?;
    let (a, b) = gamma.span();
    let gvar = p_variation(gamma, p, (a, b))?;
    if gvar == 0.0 {
        return Ok(0.0);
    }
    let v = gvar * support_length.powf(1.0 - 1.0 / p);
    let star = star_transform(omega, p)?;
    let l1 = gamma.l1_norm();
    Ok(v * eval_modulus(&star, l1 / v)?)
}

/// Interval spanned by the nonzero samples, widened one cell outward for the
/// interpolation's reach; collapses to a point when γ ≡ 0.
fn support_extent(gamma: &SampledFunction1D) -> (f64, f64) {
    let vals = gamma.values();
    let grid = gamma.grid();
    let n = vals.len();
    let first = vals.iter().position(|v| *v != 0.0);
    let last = vals.iter().rposition(|v| *v != 0.0);
    match (first, last) {
        (Some(i), Some(j)) => (grid[i.saturating_sub(1)], grid[(j + 1).min(n - 1)]),
        _ => (grid[0], grid[0]),
    }
}
