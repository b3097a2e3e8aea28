//! Grid-sampled scalar functions with an explicit interpretation tag.
//!
//! A `SampledFunction1D` is the pair (grid, values) plus a tag saying how the
//! values extend off the grid: right-continuous piecewise-constant steps or a
//! continuous piecewise-linear interpolant. Evaluation outside the span is
//! clamped to the boundary value.

use crate::error::{ensure, ensure_finite, Error, Result};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    PiecewiseConstantRight,
    PiecewiseLinear,
}

impl Interp {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interp::PiecewiseConstantRight => "piecewise-constant-right",
            Interp::PiecewiseLinear => "piecewise-linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "piecewise-constant-right" | "pcr" => Ok(Interp::PiecewiseConstantRight),
            "piecewise-linear" | "pl" => Ok(Interp::PiecewiseLinear),
            other => Err(Error::validation(format!("unknown interp tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction1D {
    grid: Vec<f64>,
    values: Vec<f64>,
    interp: Interp,
}

impl SampledFunction1D {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        ensure(
            grid.len() >= 2,
            "sampled function needs at least two grid points",
        )?;
        ensure(
            grid.len() == values.len(),
            format!(
                "grid/value length mismatch: {} vs {}",
                grid.len(),
                values.len()
            ),
        )?;
        for w in grid.windows(2) {
            if w[1] <= w[0] || w[1].is_nan() || w[0].is_nan() {
                return Err(Error::domain(format!(
                    "grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, &v) in values.iter().enumerate() {
            ensure_finite(v, &format!("value[{i}]"))?;
        }
        ensure_finite(grid[0], "grid[0]")?;
        ensure_finite(*grid.last().unwrap(), "grid end")?;
        Ok(SampledFunction1D {
            grid,
            values,
            interp,
        })
    }

    pub fn from_fn_uniform(
        a: f64,
        b: f64,
        n: usize,
        interp: Interp,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        ensure(b > a && n >= 2, "need b > a and n >= 2")?;
        let grid = uniform_grid(a, b, n);
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values, interp)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn is_continuous(&self) -> bool {
        self.interp == Interp::PiecewiseLinear
    }

    /// Uniform step if the grid is uniform to relative tolerance 1e-9.
    pub fn uniform_step(&self) -> Option<f64> {
        let n = self.grid.len();
        let h = (self.grid[n - 1] - self.grid[0]) / (n - 1) as f64;
        for w in self.grid.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1e-300) {
                return None;
            }
        }
        Some(h)
    }

    /// Index of the cell [grid[i], grid[i+1]) containing x (clamped to valid cells).
    fn cell_of(&self, x: f64) -> usize {
        let n = self.grid.len();
        if x < self.grid[0] {
            return 0;
        }
        if x >= self.grid[n - 1] {
            return n - 2;
        }
        // partition_point: first index with grid[i] > x, minus one
        let i = self.grid.partition_point(|&g| g <= x);
        i.saturating_sub(1).min(n - 2)
    }

    /// Evaluate the interpolant; constant extension outside the span.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.cell_of(x);
        match self.interp {
            Interp::PiecewiseConstantRight => self.values[i],
            Interp::PiecewiseLinear => {
                let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
                self.values[i] + t * (self.values[i + 1] - self.values[i])
            }
        }
    }

    /// Left limit at x; differs from `eval` only at the jump points of a
    /// piecewise-constant function.
    pub fn eval_left_limit(&self, x: f64) -> f64 {
        match self.interp {
            Interp::PiecewiseLinear => self.eval(x),
            Interp::PiecewiseConstantRight => {
                let n = self.grid.len();
                if x <= self.grid[0] {
                    return self.values[0];
                }
                if x > self.grid[n - 1] {
                    return self.values[n - 1];
                }
                // first index with grid[i] >= x, step one cell left
                let i = self.grid.partition_point(|&g| g < x);
                self.values[i - 1]
            }
        }
    }

    /// Ordered positions/values the interpolant takes on [a, b]: interval
    /// endpoints (interpolated) plus interior grid points. For the
    /// right-continuous step interpretation the returned values are the cell
    /// values in order, which is exactly the value sequence seen on [a, b].
    pub fn sample_sequence(&self, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        ensure(b > a, "interval must satisfy b > a")?;
        let (lo, hi) = self.span();
        let a = a.max(lo);
        let b = b.min(hi);
        ensure(b > a, "interval does not intersect the sample span")?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        xs.push(a);
        vs.push(self.eval(a));
        let first = self.grid.partition_point(|&g| g <= a);
        let last = self.grid.partition_point(|&g| g < b);
        for i in first..last {
            xs.push(self.grid[i]);
            vs.push(match self.interp {
                Interp::PiecewiseLinear => self.values[i],
                Interp::PiecewiseConstantRight => self.values[i.min(self.grid.len() - 1)],
            });
        }
        xs.push(b);
        vs.push(self.eval(b));
        Ok((xs, vs))
    }

    /// Resample onto a new grid by evaluating the interpolant (jump locations
    /// of a step function are preserved only when the new grid contains them).
    pub fn resample(&self, grid: Vec<f64>) -> Result<Self> {
        let values = grid.iter().map(|&x| self.eval(x)).collect();
        Self::new(grid, values, self.interp)
    }

    /// Integral of |f| over the span (exact for the interpolant).
    pub fn l1_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.grid.len() - 1 {
            let dx = self.grid[i + 1] - self.grid[i];
            match self.interp {
                Interp::PiecewiseConstantRight => acc += self.values[i].abs() * dx,
                Interp::PiecewiseLinear => {
                    let (u, v) = (self.values[i], self.values[i + 1]);
                    acc += if u * v >= 0.0 {
                        0.5 * (u.abs() + v.abs()) * dx
                    } else {
                        // sign change inside the cell
                        0.5 * dx * (u * u + v * v) / (u.abs() + v.abs())
                    };
                }
            }
        }
        acc
    }

    /// Signed integral over the span (exact for the interpolant).
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.grid.len() - 1 {
            let dx = self.grid[i + 1] - self.grid[i];
            match self.interp {
                Interp::PiecewiseConstantRight => acc += self.values[i] * dx,
                Interp::PiecewiseLinear => acc += 0.5 * (self.values[i] + self.values[i + 1]) * dx,
            }
        }
        acc
    }

    /// Total variation of the sampled values.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.grid.clone(), values, self.interp)
    }

    /// Two-column CSV with a comment line carrying the interp tag.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# interp: {}", self.interp.as_str())?;
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{:.16e},{:.16e}", x, v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut interp = None;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::validation(format!("csv read: {e}")))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(tag) = rest.trim().strip_prefix("interp:") {
                    interp = Some(Interp::parse(tag)?);
                }
                continue;
            }
            if t.starts_with('x') {
                continue; // column header
            }
            let mut parts = t.split(',');
            let (xs, vs) = (parts.next(), parts.next());
            match (xs, vs) {
                (Some(xs), Some(vs)) => {
                    let x: f64 = xs.trim().parse().map_err(|e| {
                        Error::validation(format!("csv line {}: bad x ({e})", lineno + 1))
                    })?;
                    let v: f64 = vs.trim().parse().map_err(|e| {
                        Error::validation(format!("csv line {}: bad value ({e})", lineno + 1))
                    })?;
                    grid.push(x);
                    values.push(v);
                }
                _ => {
                    return Err(Error::validation(format!(
                        "csv line {}: expected 'x,value'",
                        lineno + 1
                    )))
                }
            }
        }
        let interp =
            interp.ok_or_else(|| Error::validation("csv missing '# interp: ...' header"))?;
        Self::new(grid, values, interp)
    }
}

pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + i as f64 * h })
        .collect()
}
