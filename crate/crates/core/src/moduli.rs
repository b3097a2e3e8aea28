//! Moduli of continuity and the Osgood comparison function.
//!
//! A modulus here is a function `omega: [0, inf) -> [0, inf)` with
//! `omega(0) = 0` and `omega > 0` on `(0, inf)`. The built-in family:
//!
//! * `linear`        a*h
//! * `log`           h*|log h| below a clip point, linear beyond
//! * `loglog`        h*|log h|*log|log h| below a clip point, linear beyond
//! * `log-lipschitz` h*|log h| below 1/e, frozen at 1/e beyond
//! * `power`         h^alpha (alpha in (0,1]; not Osgood for alpha < 1)
//! * `tabulated`     linear interpolation through (0,0) and the table
//!
//! plus two derived transforms used by the variation-based integral bounds:
//! the star transform `omega*(h) = h^(2-2p) omega(h^(2p-1)) + c_p h` and the
//! scaled variant `omega~(h) = k * omega*(h/k)`.
//!
//! The comparison function `Psi(y0, t)` is the inverse of the primitive
//! `G_{y0}(y) = int_{y0}^{y} ds/omega(s)` evaluated at the accumulated weight
//! `Lambda(t)`; it upper-bounds any quantity with logistic growth
//! `y' <= lambda(t) omega(y)`. A modulus is Osgood when `G_0` diverges, which
//! is exactly what makes `Psi(0, t) = 0` and flows unique.

use crate::error::{ensure, ensure_finite, Error, Result};
use crate::num::{brent, golden_max, quad_panels};

pub const DEFAULT_LOG_CLIP: f64 = 0.367_879_441_171_442_33; // 1/e
/// Largest clip point keeping h|log h| log|log h| increasing at the junction.
pub const MAX_LOGLOG_CLIP: f64 = 0.1064;
pub const DEFAULT_LOGLOG_CLIP: f64 = 0.105_399_224_561_864_33; // exp(-2.25)

const INV_E: f64 = 0.367_879_441_171_442_33;

#[derive(Debug, Clone)]
pub enum ModulusKind {
    Linear {
        slope: f64,
    },
    Log {
        clip: f64,
    },
    LogLog {
        clip: f64,
    },
    LogLipschitz,
    Power {
        alpha: f64,
    },
    Tabulated {
        h: Vec<f64>,
        w: Vec<f64>,
    },
    Star {
        inner: Box<Modulus>,
        p: f64,
        c_p: f64,
    },
    Scaled {
        inner: Box<Modulus>,
        p: f64,
        k: f64,
        c_p: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Modulus {
    kind: ModulusKind,
    concave: bool,
}

impl Modulus {
    pub fn linear(slope: f64) -> Result<Self> {
        ensure(
            slope > 0.0 && slope.is_finite(),
            "linear modulus needs slope > 0",
        )?;
        Ok(Modulus {
            kind: ModulusKind::Linear { slope },
            concave: true,
        })
    }

    /// h|log h| with linear extension past `clip`; the slope of the extension
    /// is the one-sided derivative |log clip| - 1, non-negative iff clip <= 1/e.
    pub fn log_with_clip(clip: f64) -> Result<Self> {
        ensure(
            clip > 0.0 && clip <= DEFAULT_LOG_CLIP,
            "log modulus clip must lie in (0, 1/e]",
        )?;
        Ok(Modulus {
            kind: ModulusKind::Log { clip },
            concave: true,
        })
    }

    pub fn log() -> Self {
        Self::log_with_clip(DEFAULT_LOG_CLIP).unwrap()
    }

    pub fn loglog_with_clip(clip: f64) -> Result<Self> {
        ensure(
            clip > 0.0 && clip <= MAX_LOGLOG_CLIP,
            "loglog modulus clip must lie in (0, 0.1064] to keep the junction slope non-negative",
        )?;
        Ok(Modulus {
            kind: ModulusKind::LogLog { clip },
            concave: true,
        })
    }

    pub fn loglog() -> Self {
        Self::loglog_with_clip(DEFAULT_LOGLOG_CLIP).unwrap()
    }

    pub fn log_lipschitz() -> Self {
        Modulus {
            kind: ModulusKind::LogLipschitz,
            concave: true,
        }
    }

    pub fn power(alpha: f64) -> Result<Self> {
        ensure(
            alpha > 0.0 && alpha <= 1.0,
            "power modulus needs alpha in (0, 1]",
        )?;
        Ok(Modulus {
            kind: ModulusKind::Power { alpha },
            concave: true,
        })
    }

    /// Tabulated modulus through the nodes, anchored at (0, 0) and constant
    /// past the last node. Flagged concave only when the slope scan passes.
    pub fn tabulated(h: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        ensure(
            h.len() == w.len() && h.len() >= 2,
            "tabulated modulus needs >= 2 nodes",
        )?;
        ensure(h[0] > 0.0, "tabulated modulus nodes must be positive")?;
        for i in 0..h.len() {
            ensure_finite(h[i], "tabulated h")?;
            ensure_finite(w[i], "tabulated w")?;
            ensure(w[i] > 0.0, "tabulated modulus values must be positive")?;
            if i > 0 {
                ensure(
                    h[i] > h[i - 1],
                    "tabulated nodes must be strictly increasing",
                )?;
            }
        }
        let concave = {
            let mut ok = true;
            let mut prev = w[0] / h[0]; // slope of the (0,0) anchor segment
            for i in 1..h.len() {
                let s = (w[i] - w[i - 1]) / (h[i] - h[i - 1]);
                if s > prev + 1e-12 * prev.abs().max(1.0) {
                    ok = false;
                    break;
                }
                prev = s;
            }
            ok
        };
        Ok(Modulus {
            kind: ModulusKind::Tabulated { h, w },
            concave,
        })
    }

    pub fn kind(&self) -> &ModulusKind {
        &self.kind
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    /// Offset coefficient c_p of a star/scaled transform, if this is one.
    pub fn star_offset(&self) -> Option<f64> {
        match &self.kind {
            ModulusKind::Star { c_p, .. } | ModulusKind::Scaled { c_p, .. } => Some(*c_p),
            _ => None,
        }
    }

    /// Whether int_0 dh/omega diverges (the Osgood property), decided
    /// structurally from the kind.
    pub fn diverges_at_zero(&self) -> bool {
        match &self.kind {
            ModulusKind::Linear { .. }
            | ModulusKind::Log { .. }
            | ModulusKind::LogLog { .. }
            | ModulusKind::LogLipschitz
            | ModulusKind::Tabulated { .. } => true,
            ModulusKind::Power { alpha } => *alpha >= 1.0,
            ModulusKind::Star { inner, .. } | ModulusKind::Scaled { inner, .. } => {
                inner.diverges_at_zero()
            }
        }
    }

    /// Upper end of the domain on which the primitive can be inverted
    /// (finite only for tabulated data).
    fn domain_cap(&self) -> f64 {
        match &self.kind {
            ModulusKind::Tabulated { h, .. } => *h.last().unwrap(),
            ModulusKind::Star { inner, p, .. } => {
                let cap = inner.domain_cap();
                if cap.is_finite() {
                    cap.powf(1.0 / (2.0 * p - 1.0))
                } else {
                    f64::INFINITY
                }
            }
            ModulusKind::Scaled { inner, p, k, .. } => {
                let cap = inner.domain_cap();
                if cap.is_finite() {
                    k * cap.powf(1.0 / (2.0 * p - 1.0))
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Kinks of omega, used as mandatory quadrature breakpoints.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ModulusKind::Linear { .. } | ModulusKind::Power { .. } => vec![],
            ModulusKind::Log { clip } | ModulusKind::LogLog { clip } => vec![*clip],
            ModulusKind::LogLipschitz => vec![INV_E],
            ModulusKind::Tabulated { h, .. } => h.clone(),
            ModulusKind::Star { inner, p, .. } => {
                let e = 1.0 / (2.0 * p - 1.0);
                inner.breakpoints().iter().map(|b| b.powf(e)).collect()
            }
            ModulusKind::Scaled { inner, p, k, .. } => {
                let e = 1.0 / (2.0 * p - 1.0);
                inner.breakpoints().iter().map(|b| k * b.powf(e)).collect()
            }
        }
    }

    pub(crate) fn value(&self, h: f64) -> f64 {
        debug_assert!(h >= 0.0);
        if h == 0.0 {
            return 0.0;
        }
        match &self.kind {
            ModulusKind::Linear { slope } => slope * h,
            ModulusKind::Log { clip } => {
                if h <= *clip {
                    h * (-h.ln())
                } else {
                    let wc = clip * (-clip.ln());
                    let s = -clip.ln() - 1.0;
                    wc + s * (h - clip)
                }
            }
            ModulusKind::LogLog { clip } => {
                let f = |x: f64| {
                    let u = -x.ln();
                    x * u * u.ln()
                };
                if h <= *clip {
                    f(h)
                } else {
                    let uc = -clip.ln();
                    let s = (uc - 1.0) * uc.ln() - 1.0;
                    f(*clip) + s * (h - clip)
                }
            }
            ModulusKind::LogLipschitz => {
                if h < INV_E {
                    h * (-h.ln())
                } else {
                    INV_E
                }
            }
            ModulusKind::Power { alpha } => h.powf(*alpha),
            ModulusKind::Tabulated { h: hs, w } => {
                if h >= *hs.last().unwrap() {
                    return *w.last().unwrap();
                }
                // implicit (0, 0) anchor before the first node
                if h <= hs[0] {
                    return w[0] * h / hs[0];
                }
                let i = hs.partition_point(|&x| x <= h) - 1;
                let t = (h - hs[i]) / (hs[i + 1] - hs[i]);
                w[i] + t * (w[i + 1] - w[i])
            }
            ModulusKind::Star { inner, p, c_p } => {
                h.powf(2.0 - 2.0 * p) * inner.value(h.powf(2.0 * p - 1.0)) + c_p * h
            }
            ModulusKind::Scaled { inner, p, k, c_p } => {
                let z = h / k;
                k * (z.powf(2.0 - 2.0 * p) * inner.value(z.powf(2.0 * p - 1.0)) + c_p * z)
            }
        }
    }
}

/// Evaluate omega(h). Errors on negative or non-finite h.
pub fn eval_modulus(m: &Modulus, h: f64) -> Result<f64> {
    ensure_finite(h, "h")?;
    ensure(
        h >= 0.0,
        format!("modulus argument must be non-negative, got {h}"),
    )?;
    Ok(m.value(h))
}

// ---------------------------------------------------------------------------
// time weights

/// Non-negative time weight lambda(t) with accumulated integral Lambda(t).
#[derive(Debug, Clone)]
pub enum Weight {
    Constant(f64),
    /// Piecewise-linear lambda through (t_i, lam_i); constant extension of
    /// lambda beyond the table.
    Tabulated {
        t: Vec<f64>,
        lam: Vec<f64>,
        cum: Vec<f64>,
    },
}

impl Weight {
    pub fn one() -> Self {
        Weight::Constant(1.0)
    }

    pub fn constant(c: f64) -> Result<Self> {
        ensure(c >= 0.0 && c.is_finite(), "weight must be non-negative")?;
        Ok(Weight::Constant(c))
    }

    pub fn tabulated(t: Vec<f64>, lam: Vec<f64>) -> Result<Self> {
        ensure(
            t.len() == lam.len() && t.len() >= 2,
            "weight table needs >= 2 nodes",
        )?;
        ensure(t[0] == 0.0, "weight table must start at t = 0")?;
        for i in 0..t.len() {
            ensure(
                lam[i] >= 0.0 && lam[i].is_finite(),
                "weight values must be non-negative",
            )?;
            if i > 0 {
                ensure(t[i] > t[i - 1], "weight times must be strictly increasing")?;
            }
        }
        let mut cum = vec![0.0];
        for i in 1..t.len() {
            let inc = 0.5 * (lam[i] + lam[i - 1]) * (t[i] - t[i - 1]);
            cum.push(cum[i - 1] + inc);
        }
        Ok(Weight::Tabulated { t, lam, cum })
    }

    /// Tabulate a callable weight on [0, t_max] (trapezoid integral cached).
    pub fn from_fn(f: impl Fn(f64) -> f64, t_max: f64, n: usize) -> Result<Self> {
        ensure(t_max > 0.0 && n >= 2, "need t_max > 0 and n >= 2")?;
        let ts: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let lam: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        Self::tabulated(ts, lam)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Tabulated { t: ts, lam, .. } => {
                if t <= ts[0] {
                    return lam[0];
                }
                if t >= *ts.last().unwrap() {
                    return *lam.last().unwrap();
                }
                let i = ts.partition_point(|&x| x <= t) - 1;
                let a = (t - ts[i]) / (ts[i + 1] - ts[i]);
                lam[i] + a * (lam[i + 1] - lam[i])
            }
        }
    }

    /// Lambda(t) = int_0^t lambda.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            Weight::Constant(c) => c * t,
            Weight::Tabulated { t: ts, lam, cum } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let tl = *ts.last().unwrap();
                if t >= tl {
                    return cum.last().unwrap() + lam.last().unwrap() * (t - tl);
                }
                let i = ts.partition_point(|&x| x <= t) - 1;
                let l = self.eval(t);
                cum[i] + 0.5 * (lam[i] + l) * (t - ts[i])
            }
        }
    }
}

// ---------------------------------------------------------------------------
// primitive G_{y0}(y) = int_{y0}^{y} ds / omega(s)

/// Signed primitive of 1/omega. `y0 = 0` returns +inf for Osgood kinds
/// (divergent integral) and the finite closed-form limit otherwise.
pub fn osgood_primitive(m: &Modulus, y0: f64, y: f64) -> Result<f64> {
    ensure_finite(y, "y")?;
    ensure(
        y0 >= 0.0 && y >= 0.0,
        "primitive endpoints must be non-negative",
    )?;
    if y0 == y {
        return Ok(0.0);
    }
    if y0 == 0.0 {
        if m.diverges_at_zero() {
            return Ok(f64::INFINITY);
        }
        // only the non-Osgood power kind reaches this branch
        if let ModulusKind::Power { alpha } = &m.kind {
            return Ok(y.powf(1.0 - alpha) / (1.0 - alpha));
        }
        return osgood_primitive_numeric(m, f64::MIN_POSITIVE, y);
    }
    if y == 0.0 {
        return osgood_primitive(m, y, y0).map(|v| -v);
    }
    match &m.kind {
        ModulusKind::Linear { slope } => Ok((y / y0).ln() / slope),
        ModulusKind::Power { alpha } => {
            if (*alpha - 1.0).abs() < 1e-14 {
                Ok((y / y0).ln())
            } else {
                Ok((y.powf(1.0 - alpha) - y0.powf(1.0 - alpha)) / (1.0 - alpha))
            }
        }
        ModulusKind::Log { clip } => Ok(split_at(m, y0, y, *clip, &log_core, &|_, a, b| {
            let wc = clip * (-clip.ln());
            let s = -clip.ln() - 1.0;
            linear_segment(wc - s * clip, s, a, b).unwrap_or(f64::INFINITY)
        })),
        ModulusKind::LogLog { clip } => Ok(split_at(m, y0, y, *clip, &loglog_core, &|_, a, b| {
            let uc = -clip.ln();
            let wc = clip * uc * uc.ln();
            let s = (uc - 1.0) * uc.ln() - 1.0;
            linear_segment(wc - s * clip, s, a, b).unwrap_or(f64::INFINITY)
        })),
        ModulusKind::LogLipschitz => Ok(split_at(m, y0, y, INV_E, &log_core, &|_, a, b| {
            (b - a) / INV_E
        })),
        ModulusKind::Tabulated { h, w } => Ok(tabulated_primitive(h, w, y0, y)),
        ModulusKind::Star { .. } | ModulusKind::Scaled { .. } => osgood_primitive_numeric(m, y0, y),
    }
}

/// antiderivative of 1/(s |log s|) on (0, 1): -log(-log s)
fn log_core(a: f64, b: f64) -> f64 {
    ((-a.ln()) / (-b.ln())).ln()
}

/// antiderivative of 1/(s |log s| log|log s|) on (0, 1/e): -log log(-log s)
fn loglog_core(a: f64, b: f64) -> f64 {
    ((-a.ln()).ln() / (-b.ln()).ln()).ln()
}

/// int ds / (A + B s); None when the parametrisation is degenerate.
fn linear_segment(a_coef: f64, b_coef: f64, a: f64, b: f64) -> Option<f64> {
    if b_coef.abs() < 1e-300 {
        if a_coef <= 0.0 {
            return None;
        }
        return Some((b - a) / a_coef);
    }
    let lo = a_coef + b_coef * a;
    let hi = a_coef + b_coef * b;
    if lo <= 0.0 || hi <= 0.0 {
        return None;
    }
    Some((hi / lo).ln() / b_coef)
}

/// Split the integral at a junction point, applying `below` on the pure part
/// and `above` on the extension.
fn split_at(
    m: &Modulus,
    y0: f64,
    y: f64,
    cut: f64,
    below: &dyn Fn(f64, f64) -> f64,
    above: &dyn Fn(&Modulus, f64, f64) -> f64,
) -> f64 {
    if y < y0 {
        return -split_at(m, y, y0, cut, below, above);
    }
    if y <= cut {
        below(y0, y)
    } else if y0 >= cut {
        above(m, y0, y)
    } else {
        below(y0, cut) + above(m, cut, y)
    }
}

fn tabulated_primitive(hs: &[f64], ws: &[f64], y0: f64, y: f64) -> f64 {
    if y < y0 {
        return -tabulated_primitive(hs, ws, y, y0);
    }
    // nodes of the piecewise-linear omega, including the (0,0) anchor segment
    let mut cuts = vec![y0];
    for &h in hs {
        if h > y0 && h < y {
            cuts.push(h);
        }
    }
    cuts.push(y);
    let mut acc = 0.0;
    for wd in cuts.windows(2) {
        let (a, b) = (wd[0], wd[1]);
        let mid = 0.5 * (a + b);
        // reconstruct the local linear parametrisation omega(s) = A + B s
        let (lo_h, lo_w, hi_h, hi_w) = if mid <= hs[0] {
            (0.0, 0.0, hs[0], ws[0])
        } else if mid >= *hs.last().unwrap() {
            let n = hs.len();
            (hs[n - 1], ws[n - 1], hs[n - 1] + 1.0, ws[n - 1])
        } else {
            let i = hs.partition_point(|&x| x <= mid) - 1;
            (hs[i], ws[i], hs[i + 1], ws[i + 1])
        };
        let b_coef = (hi_w - lo_w) / (hi_h - lo_h);
        let a_coef = lo_w - b_coef * lo_h;
        acc += linear_segment(a_coef, b_coef, a, b).unwrap_or(f64::INFINITY);
    }
    acc
}

/// Quadrature route for the primitive (log-substitution Gauss-Legendre
/// panels). Independent of the closed forms above; kept public so tests can
/// cross-validate the two routes.
pub fn osgood_primitive_numeric(m: &Modulus, y0: f64, y: f64) -> Result<f64> {
    ensure(
        y0 > 0.0 && y > 0.0,
        "numeric primitive needs positive endpoints",
    )?;
    let integrand = |v: f64| {
        let s = v.exp();
        s / m.value(s)
    };
    let bps: Vec<f64> = m
        .breakpoints()
        .iter()
        .filter(|&&b| b > 0.0)
        .map(|&b| b.ln())
        .collect();
    Ok(quad_panels(&integrand, y0.ln(), y.ln(), &bps, 0.25))
}

// ---------------------------------------------------------------------------
// the comparison function Psi

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiOutcome {
    pub value: f64,
    /// Set when Lambda(t) exceeded the invertible range of the primitive
    /// (tabulated modulus with a finite table); `value` is then the domain cap.
    pub capped: bool,
}

/// Psi(y0, t): the value y with G_{y0}(y) = Lambda(t). Upper bound for any
/// y(t) with y' <= lambda(t) omega(y), y(0) = y0.
pub fn psi(m: &Modulus, w: &Weight, y0: f64, t: f64) -> Result<PsiOutcome> {
    ensure_finite(y0, "y0")?;
    ensure_finite(t, "t")?;
    ensure(y0 >= 0.0, "psi needs y0 >= 0")?;
    ensure(t >= 0.0, "psi needs t >= 0")?;
    if y0 == 0.0 {
        return Ok(PsiOutcome {
            value: 0.0,
            capped: false,
        });
    }
    let tau = w.integral(t);
    if tau == 0.0 {
        return Ok(PsiOutcome {
            value: y0,
            capped: false,
        });
    }
    if let ModulusKind::LogLipschitz = m.kind() {
        return Ok(PsiOutcome {
            value: log_lipschitz_psi(y0, tau),
            capped: false,
        });
    }
    invert_primitive(m, y0, tau, &|m, a, b| osgood_primitive(m, a, b))
}

/// Fully numeric route for Psi: quadrature primitive plus bracketed root
/// finding, bypassing every closed form. Used to cross-validate `psi`.
pub fn psi_numeric(m: &Modulus, w: &Weight, y0: f64, t: f64) -> Result<PsiOutcome> {
    ensure(y0 >= 0.0, "psi needs y0 >= 0")?;
    ensure(t >= 0.0, "psi needs t >= 0")?;
    if y0 == 0.0 {
        return Ok(PsiOutcome {
            value: 0.0,
            capped: false,
        });
    }
    let tau = w.integral(t);
    if tau == 0.0 {
        return Ok(PsiOutcome {
            value: y0,
            capped: false,
        });
    }
    invert_primitive(m, y0, tau, &|m, a, b| osgood_primitive_numeric(m, a, b))
}

fn invert_primitive(
    m: &Modulus,
    y0: f64,
    tau: f64,
    prim: &dyn Fn(&Modulus, f64, f64) -> Result<f64>,
) -> Result<PsiOutcome> {
    let cap = m.domain_cap();
    let v0 = y0.ln();
    let v_cap = if cap.is_finite() { cap.ln() } else { 700.0 };
    // expand the bracket in log space
    let g = |v: f64| -> Result<f64> { Ok(prim(m, y0, v.exp())? - tau) };
    let mut hi = (v0 + 0.5).min(v_cap);
    let mut ghi = g(hi)?;
    while ghi < 0.0 && hi < v_cap {
        let step = (hi - v0).max(0.5) * 2.0;
        hi = (v0 + step).min(v_cap);
        ghi = g(hi)?;
    }
    if ghi < 0.0 {
        if cap.is_finite() {
            return Ok(PsiOutcome {
                value: cap,
                capped: true,
            });
        }
        return Err(Error::numerical(format!(
            "psi bracket expansion exhausted (y0={y0}, accumulated weight {tau})"
        )));
    }
    let f = |v: f64| prim(m, y0, v.exp()).unwrap_or(f64::INFINITY) - tau;
    let v = brent(&f, v0, hi, 1e-13)?;
    Ok(PsiOutcome {
        value: v.exp(),
        capped: false,
    })
}

/// Closed-form comparison function for the log-Lipschitz modulus with
/// accumulated weight tau: three branches depending on where the trajectory
/// sits relative to 1/e.
pub fn log_lipschitz_psi(z: f64, tau: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z > INV_E {
        return z + tau * INV_E;
    }
    let thr = (-tau.exp()).exp(); // e^{-e^tau}; underflows to 0 for large tau
    if z <= thr {
        z.powf((-tau).exp())
    } else {
        INV_E * (1.0 + tau - (-z.ln()).ln())
    }
}

// ---------------------------------------------------------------------------
// divergence probe

#[derive(Debug, Clone)]
pub struct DivergenceProbe {
    /// partials[k-1] = int_{eps/10^k}^{eps} ds/omega
    pub partials: Vec<f64>,
    pub divergent: bool,
}

/// Estimate whether int_0 ds/omega diverges by watching partial integrals
/// over shrinking lower limits: divergent when the last increment is at
/// least half the previous one (no evident saturation).
pub fn osgood_divergence_probe(m: &Modulus, eps: f64, depth: usize) -> Result<DivergenceProbe> {
    ensure(eps > 0.0 && eps.is_finite(), "probe needs eps > 0")?;
    ensure(depth >= 2, "probe needs depth >= 2")?;
    let mut partials = Vec::with_capacity(depth);
    for k in 1..=depth {
        let lo = eps * 10f64.powi(-(k as i32));
        partials.push(osgood_primitive(m, lo, eps)?);
    }
    let n = partials.len();
    let last = partials[n - 1] - partials[n - 2];
    let prev = if n >= 3 {
        partials[n - 2] - partials[n - 3]
    } else {
        partials[n - 2]
    };
    Ok(DivergenceProbe {
        divergent: last >= 0.5 * prev,
        partials,
    })
}

// ---------------------------------------------------------------------------
// envelope constant and the derived transforms

/// sup over h in (0,1) of omega(h)/h^alpha, with +inf sentinel when the probe
/// keeps growing toward h -> 0 (or past a hard cap). Coarse log-spaced scan
/// followed by golden-section refinement around the bracketed maximiser.
pub fn holder_envelope_constant(m: &Modulus, alpha: f64) -> Result<f64> {
    ensure(
        alpha > 0.0 && alpha <= 1.0,
        "envelope exponent must lie in (0, 1]",
    )?;
    let ratio = |u: f64| {
        let h = u.exp();
        m.value(h) / h.powf(alpha)
    };
    let n = 1200;
    let (u_lo, u_hi) = (-60.0, 0.0);
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    let mut vals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let u = u_lo + (u_hi - u_lo) * i as f64 / n as f64;
        let v = ratio(u);
        vals.push(v);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // strict growth toward h -> 0 means the sup over (0,1) is infinite
    if best_i <= 2 || best > 1e12 {
        let deep = ratio(-120.0);
        if deep > best * (1.0 + 1e-9) {
            return Ok(f64::INFINITY);
        }
    }
    let lo = u_lo + (u_hi - u_lo) * (best_i.saturating_sub(1)) as f64 / n as f64;
    let hi = u_lo + (u_hi - u_lo) * ((best_i + 1).min(n)) as f64 / n as f64;
    let (_, v) = golden_max(&ratio, lo, hi, 90);
    Ok(v.max(best))
}

fn star_offset_coefficient(m: &Modulus, p: f64) -> Result<f64> {
    let alpha = 1.0 - 1.0 / (2.0 * p);
    let c = holder_envelope_constant(m, alpha)?;
    if !c.is_finite() {
        return Err(Error::domain(format!(
            "envelope constant infinite: modulus is not bounded by C h^{alpha} near 0 \
             (growth assumption fails), so the star transform for p = {p} is undefined"
        )));
    }
    let inv_p = 1.0 / p;
    Ok(c * 2f64.powf(inv_p * (2.0 - inv_p)) / (2f64.powf(0.5 * inv_p) - 1.0))
}

/// The transform omega*(h) = h^{2-2p} omega(h^{2p-1}) + c_p h appearing in the
/// p-variation bound for Stieltjes integrals against omega-continuous
/// integrators. Not concave in general.
pub fn star_transform(m: &Modulus, p: f64) -> Result<Modulus> {
    ensure(p >= 1.0 && p.is_finite(), "star transform needs p >= 1")?;
    let c_p = star_offset_coefficient(m, p)?;
    Ok(Modulus {
        kind: ModulusKind::Star {
            inner: Box::new(m.clone()),
            p,
            c_p,
        },
        concave: false,
    })
}

/// Scaled variant omega~(h) = k omega*(h/k), the modulus against which L1
/// distances of two transport solutions contract; k = 1 recovers omega*.
pub fn stability_modulus(m: &Modulus, k: f64, p: f64) -> Result<Modulus> {
    ensure(p >= 1.0 && p.is_finite(), "stability modulus needs p >= 1")?;
    ensure(k > 0.0 && k.is_finite(), "stability modulus needs k > 0")?;
    let c_p = star_offset_coefficient(m, p)?;
    Ok(Modulus {
        kind: ModulusKind::Scaled {
            inner: Box::new(m.clone()),
            p,
            k,
            c_p,
        },
        concave: false,
    })
}
