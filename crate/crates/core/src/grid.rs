//! Tensor grids, sampled fields, and weighted Lᵖ norms.
//!
//! A [`Grid`] is a product of strictly increasing 1-D node lists; a
//! [`GridField`] attaches a log-domain value to every lattice node. Norms
//! use trapezoidal cell measures and accumulate in log domain, so fields of
//! size `e^{|y|²/2}` on wide boxes pose no overflow risk.

use crate::logscalar::LogScalar;
use std::fmt::Write as _;
use std::io::BufRead;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid axes must each hold at least 2 strictly increasing finite nodes")]
    InvalidAxis,
    #[error("dimension mismatch: grid is {expected}-d, got {got}-d input")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field has {values} values for a lattice of {nodes} nodes")]
    ShapeMismatch { values: usize, nodes: usize },
    #[error("lp norm requires p ≥ 1, got {p}")]
    InvalidExponent { p: f64 },
    #[error("weight must be non-negative; found negative value at node {node:?}")]
    NegativeWeight { node: Vec<f64> },
    #[error("point {point:?} is outside the grid box")]
    OutOfRange { point: Vec<f64> },
    #[error("field evaluation produced NaN at {point:?}")]
    NanValue { point: Vec<f64> },
    #[error("malformed grid CSV: {0}")]
    Csv(String),
}

/// Product grid: one sorted node list per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self, GridError> {
        if axes.is_empty() {
            return Err(GridError::InvalidAxis);
        }
        for axis in &axes {
            if axis.len() < 2
                || axis.iter().any(|x| !x.is_finite())
                || axis.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(GridError::InvalidAxis);
            }
        }
        Ok(Grid { axes })
    }

    /// Uniform symmetric box `[-r, r]^d` with `n` nodes per axis.
    pub fn symmetric(d: usize, r: f64, n: usize) -> Result<Self, GridError> {
        if d == 0 || n < 2 || !(r > 0.0) {
            return Err(GridError::InvalidAxis);
        }
        let axis: Vec<f64> =
            (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect();
        Grid::new(vec![axis; d])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Smallest node spacing over all axes.
    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Diameter of the grid box.
    pub fn diameter(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| {
                let w = a.last().unwrap() - a.first().unwrap();
                w * w
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Flat index of a lattice multi-index (row-major, last axis fastest).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dim());
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.axes[k].len() + i;
        }
        flat
    }

    /// Coordinates of the node with the given flat index.
    pub fn node(&self, mut flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].len();
            out[k] = self.axes[k][flat % n];
            flat /= n;
        }
        out
    }

    /// Trapezoidal measure of the cell around node `i` on `axis`.
    pub fn cell_measure(&self, axis: usize, i: usize) -> f64 {
        let a = &self.axes[axis];
        let left = if i == 0 { a[0] } else { 0.5 * (a[i - 1] + a[i]) };
        let right = if i + 1 == a.len() { a[a.len() - 1] } else { 0.5 * (a[i] + a[i + 1]) };
        right - left
    }

    /// Product trapezoidal measure of the cell around a flat node index.
    pub fn node_measure(&self, mut flat: usize) -> f64 {
        let mut m = 1.0;
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].len();
            m *= self.cell_measure(k, flat % n);
            flat /= n;
        }
        m
    }

    /// Grid with midpoints inserted on every axis (roughly doubled density).
    pub fn refined(&self) -> Grid {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let mut out = Vec::with_capacity(2 * a.len() - 1);
                for w in a.windows(2) {
                    out.push(w[0]);
                    out.push(0.5 * (w[0] + w[1]));
                }
                out.push(*a.last().unwrap());
                out
            })
            .collect();
        Grid { axes }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        (0..self.len()).map(move |flat| (flat, self.node(flat)))
    }
}

/// Log-domain samples on a [`Grid`].
#[derive(Clone, Debug)]
pub struct GridField {
    grid: Grid,
    values: Vec<LogScalar>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<LogScalar>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch { values: values.len(), nodes: grid.len() });
        }
        Ok(GridField { grid, values })
    }

    /// Samples an arbitrary field on the grid nodes.
    pub fn sample(grid: &Grid, f: &ScalarField) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(grid.len());
        for (_, y) in grid.nodes() {
            let v = f.eval(&y)?;
            if v.is_nan() {
                return Err(GridError::NanValue { point: y });
            }
            values.push(v);
        }
        GridField::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[LogScalar] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> LogScalar {
        self.values[flat]
    }

    /// Multilinear interpolation, geometric in magnitude (the corner values
    /// are blended after a shared exponent shift, so exponentially scaled
    /// fields interpolate without overflow).
    pub fn eval(&self, point: &[f64]) -> Result<LogScalar, GridError> {
        let d = self.grid.dim();
        if point.len() != d {
            return Err(GridError::DimensionMismatch { expected: d, got: point.len() });
        }
        let mut lo_idx = vec![0usize; d];
        let mut frac = vec![0.0f64; d];
        for k in 0..d {
            let axis = &self.grid.axes[k];
            let x = point[k];
            if x < axis[0] - 1e-12 || x > *axis.last().unwrap() + 1e-12 {
                return Err(GridError::OutOfRange { point: point.to_vec() });
            }
            let j = match axis.binary_search_by(|v| v.total_cmp(&x)) {
                Ok(j) => j.min(axis.len() - 2),
                Err(j) => j.saturating_sub(1).min(axis.len() - 2),
            };
            lo_idx[k] = j;
            frac[k] = ((x - axis[j]) / (axis[j + 1] - axis[j])).clamp(0.0, 1.0);
        }

        let corners = 1usize << d;
        let mut shift = f64::NEG_INFINITY;
        let mut corner_vals = Vec::with_capacity(corners);
        let mut corner_wts = Vec::with_capacity(corners);
        for c in 0..corners {
            let mut idx = lo_idx.clone();
            let mut w = 1.0;
            for k in 0..d {
                if (c >> k) & 1 == 1 {
                    idx[k] += 1;
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            let v = self.values[self.grid.flat_index(&idx)];
            if !v.is_zero() {
                shift = shift.max(v.logmag());
            }
            corner_vals.push(v);
            corner_wts.push(w);
        }
        if shift == f64::NEG_INFINITY {
            return Ok(LogScalar::zero());
        }
        let mut acc = 0.0;
        for (v, w) in corner_vals.iter().zip(&corner_wts) {
            if !v.is_zero() {
                acc += w * v.sign() as f64 * (v.logmag() - shift).exp();
            }
        }
        Ok(if acc == 0.0 {
            LogScalar::zero()
        } else {
            LogScalar::from_sign_log(if acc > 0.0 { 1 } else { -1 }, shift + acc.abs().ln())
        })
    }

    /// Serializes to the harness grid format: a `# d=<d> axes=<counts>`
    /// header, then one row per node holding the coordinates, the value,
    /// and `ln|value|`, all at 17 significant digits. The value column may
    /// underflow to `±0` or overflow to `±inf`; its sign bit and the log
    /// column together still determine the entry exactly.
    pub fn to_csv(&self) -> String {
        let counts: Vec<String> =
            self.grid.axes.iter().map(|a| a.len().to_string()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "# d={} axes={}", self.grid.dim(), counts.join(","));
        for (flat, point) in self.grid.nodes() {
            for c in &point {
                let _ = write!(out, "{:.16e},", c);
            }
            let v = self.values[flat];
            let _ = writeln!(out, "{:.16e},{:.16e}", v.to_real(), v.logmag());
        }
        out
    }

    /// Parses the format written by [`to_csv`](Self::to_csv). The log
    /// column is authoritative for the magnitude; the value column supplies
    /// the sign (its sign bit survives underflow to ±0).
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self, GridError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| GridError::Csv("empty input".into()))?
            .map_err(|e| GridError::Csv(e.to_string()))?;
        let header = header.trim();
        let rest = header
            .strip_prefix("# d=")
            .ok_or_else(|| GridError::Csv("missing `# d=` header".into()))?;
        let (d_str, axes_str) = rest
            .split_once(" axes=")
            .ok_or_else(|| GridError::Csv("missing `axes=` in header".into()))?;
        let d: usize = d_str.parse().map_err(|_| GridError::Csv("bad dimension".into()))?;
        let counts: Vec<usize> = axes_str
            .split(',')
            .map(|c| c.trim().parse().map_err(|_| GridError::Csv("bad axis count".into())))
            .collect::<Result<_, _>>()?;
        if counts.len() != d {
            return Err(GridError::Csv("axis count list does not match dimension".into()));
        }

        let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        for line in lines {
            let line = line.map_err(|e| GridError::Csv(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse().map_err(|_| GridError::Csv(format!("bad number `{c}`"))))
                .collect::<Result<_, _>>()?;
            if cols.len() != d + 2 {
                return Err(GridError::Csv(format!(
                    "expected {} columns, got {}",
                    d + 2,
                    cols.len()
                )));
            }
            rows.push((cols[..d].to_vec(), cols[d], cols[d + 1]));
        }
        let expected: usize = counts.iter().product();
        if rows.len() != expected {
            return Err(GridError::Csv(format!(
                "expected {expected} rows, got {}",
                rows.len()
            )));
        }

        // Axis node lists recovered from the row-major layout.
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(d);
        for k in 0..d {
            let stride: usize = counts[k + 1..].iter().product();
            let axis: Vec<f64> = (0..counts[k]).map(|i| rows[i * stride].0[k]).collect();
            axes.push(axis);
        }
        let grid = Grid::new(axes)?;
        let mut values = Vec::with_capacity(rows.len());
        for (_point, value, log_mag) in rows {
            values.push(if log_mag == f64::NEG_INFINITY {
                LogScalar::zero()
            } else {
                let sign = if value.is_sign_negative() { -1 } else { 1 };
                LogScalar::from_sign_log(sign, log_mag)
            });
        }
        GridField::new(grid, values)
    }
}

/// A scalar function on ℝ^d: an expression, a closure, or grid samples.
#[derive(Clone)]
pub enum ScalarField {
    Expr(crate::expr::Expr),
    Func(Arc<dyn Fn(&[f64]) -> LogScalar + Send + Sync>),
    Samples(Arc<GridField>),
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarField::Expr(e) => write!(f, "ScalarField::Expr({e:?})"),
            ScalarField::Func(_) => write!(f, "ScalarField::Func(..)"),
            ScalarField::Samples(s) => {
                write!(f, "ScalarField::Samples({} nodes)", s.grid().len())
            }
        }
    }
}

impl ScalarField {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> LogScalar + Send + Sync + 'static,
    {
        ScalarField::Func(Arc::new(f))
    }

    /// Plain-double closure convenience; values are lifted to log domain.
    pub fn from_real_fn<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField::Func(Arc::new(move |y| LogScalar::from_real(f(y))))
    }

    pub fn eval(&self, y: &[f64]) -> Result<LogScalar, GridError> {
        match self {
            ScalarField::Expr(e) => e
                .eval_log(y)
                .map_err(|err| GridError::Csv(format!("expression evaluation failed: {err}"))),
            ScalarField::Func(f) => Ok(f(y)),
            ScalarField::Samples(s) => s.eval(y),
        }
    }

    /// Pointwise |f|.
    pub fn abs(&self) -> ScalarField {
        let inner = self.clone();
        ScalarField::from_fn(move |y| inner.eval(y).map(LogScalar::abs).unwrap_or(LogScalar::zero()))
    }

    /// Pointwise product with another field.
    pub fn times(&self, other: &ScalarField) -> ScalarField {
        let a = self.clone();
        let b = other.clone();
        ScalarField::from_fn(move |y| match (a.eval(y), b.eval(y)) {
            (Ok(x), Ok(z)) => x * z,
            _ => LogScalar::from_real(f64::NAN),
        })
    }
}

/// Weighted Lᵖ norm over the grid box:
/// `(Σ |f(x_i)|^p w(x_i) Δx_i)^{1/p}` with trapezoidal cell measures,
/// accumulated in log domain.
pub fn lp_norm(f: &ScalarField, w: &ScalarField, p: f64, domain: &Grid) -> Result<f64, GridError> {
    Ok(lp_norm_log(f, w, p, domain)?.exp())
}

/// Natural log of [`lp_norm`]; useful when the norm itself overflows.
pub fn lp_norm_log(
    f: &ScalarField,
    w: &ScalarField,
    p: f64,
    domain: &Grid,
) -> Result<f64, GridError> {
    if !(p >= 1.0) {
        return Err(GridError::InvalidExponent { p });
    }
    let mut terms = Vec::with_capacity(domain.len());
    for (flat, y) in domain.nodes() {
        let fv = f.eval(&y)?;
        let wv = w.eval(&y)?;
        if fv.is_nan() || wv.is_nan() {
            return Err(GridError::NanValue { point: y });
        }
        if wv.sign() < 0 {
            return Err(GridError::NegativeWeight { node: y });
        }
        let measure = LogScalar::from_real(domain.node_measure(flat));
        terms.push(fv.abs().powf(p) * wv * measure);
    }
    Ok(LogScalar::sum(terms).logmag() / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn symmetric_grid_shape() {
        let g = Grid::symmetric(2, 3.0, 7).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.len(), 49);
        assert_relative_eq!(g.min_spacing(), 1.0, epsilon = 1e-12);
        let total: f64 = (0..g.len()).map(|i| g.node_measure(i)).sum();
        assert_relative_eq!(total, 36.0, epsilon = 1e-10);
    }

    #[test]
    fn flat_index_round_trip() {
        let g = Grid::new(vec![vec![0.0, 1.0, 2.0], vec![-1.0, 1.0]]).unwrap();
        for flat in 0..g.len() {
            let p = g.node(flat);
            let i0 = g.axes()[0].iter().position(|&x| x == p[0]).unwrap();
            let i1 = g.axes()[1].iter().position(|&x| x == p[1]).unwrap();
            assert_eq!(g.flat_index(&[i0, i1]), flat);
        }
    }

    #[test]
    fn gaussian_l2_norm_on_line() {
        let g = Grid::symmetric(1, 12.0, 2401).unwrap();
        let f = ScalarField::from_fn(|y| LogScalar::from_log(-0.5 * y[0] * y[0]));
        let one = ScalarField::from_real_fn(|_| 1.0);
        // ∫ e^{-x²} dx = √π.
        let n = lp_norm(&f, &one, 2.0, &g).unwrap();
        assert_relative_eq!(n, PI.powf(0.25), max_relative = 1e-6);
    }

    #[test]
    fn weighted_norm_handles_huge_fields() {
        let g = Grid::symmetric(1, 30.0, 4001).unwrap();
        // f = e^{y²/2} overflows f64 on this box; w = e^{-y²} tames it:
        // ∫ f² w = ∫ 1 = 60 in linear terms.
        let f = ScalarField::from_fn(|y| LogScalar::from_log(0.5 * y[0] * y[0]));
        let w = ScalarField::from_fn(|y| LogScalar::from_log(-(y[0] * y[0])));
        let n = lp_norm(&f, &w, 2.0, &g).unwrap();
        assert_relative_eq!(n, 60f64.sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn negative_weight_rejected() {
        let g = Grid::symmetric(1, 1.0, 5).unwrap();
        let f = ScalarField::from_real_fn(|_| 1.0);
        let w = ScalarField::from_real_fn(|y| y[0]);
        assert!(matches!(
            lp_norm(&f, &w, 2.0, &g),
            Err(GridError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_monotone_between() {
        let g = Grid::symmetric(1, 2.0, 5).unwrap();
        let f = ScalarField::from_real_fn(|y| 3.0 + y[0]);
        let gf = GridField::sample(&g, &f).unwrap();
        for (flat, p) in g.nodes() {
            assert_relative_eq!(
                gf.eval(&p).unwrap().to_real(),
                gf.value(flat).to_real(),
                max_relative = 1e-14
            );
        }
        let v = gf.eval(&[0.5]).unwrap().to_real();
        assert!(v > 3.0 && v < 4.0);
    }

    #[test]
    fn csv_round_trip_preserves_log_values() {
        let g = Grid::symmetric(2, 8.0, 5).unwrap();
        let f = ScalarField::from_fn(|y| {
            LogScalar::from_sign_log(
                if y[0] >= 0.0 { 1 } else { -1 },
                200.0 * y[1] - y[0] * y[0],
            )
        });
        let gf = GridField::sample(&g, &f).unwrap();
        let csv = gf.to_csv();
        assert!(csv.starts_with("# d=2 axes=5,5\n"));
        let back = GridField::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.grid(), gf.grid());
        for i in 0..gf.values().len() {
            let (a, b) = (gf.value(i), back.value(i));
            assert_eq!(a.sign(), b.sign(), "node {i}");
            if !a.is_zero() {
                assert_relative_eq!(a.logmag(), b.logmag(), epsilon = 1e-12);
            }
        }
    }
}
