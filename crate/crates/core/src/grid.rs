//! Rectilinear 2-D lookup tables with bilinear interpolation.
//!
//! Atmospheric transmissivity and solar radiance datasets are both sampled
//! on a (wavelength, zenith-angle) grid. Queries between nodes interpolate
//! bilinearly; queries on a node return the stored value exactly.

use crate::error::{Error, Result};

/// Absolute slack allowed when a query sits marginally outside the grid,
/// to absorb floating-point rounding at the boundary.
pub const EDGE_TOL: f64 = 1e-9;

/// A dense table over a strictly increasing (rows × cols) grid.
///
/// Rows index wavelength (nm) and columns index zenith angle (degrees)
/// throughout this crate, but the struct itself is unit-agnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2d {
    rows: Vec<f64>,
    cols: Vec<f64>,
    /// Row-major, `rows.len() * cols.len()` values.
    values: Vec<f64>,
}

impl Grid2d {
    pub fn new(rows: Vec<f64>, cols: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if rows.len() < 2 || cols.len() < 2 {
            return Err(Error::parameter("Grid2d::new", "need at least a 2x2 grid"));
        }
        if values.len() != rows.len() * cols.len() {
            return Err(Error::parameter(
                "Grid2d::new",
                format!(
                    "expected {} values, got {}",
                    rows.len() * cols.len(),
                    values.len()
                ),
            ));
        }
        if !strictly_increasing(&rows) {
            return Err(Error::parameter("Grid2d::new", "row grid not strictly increasing"));
        }
        if !strictly_increasing(&cols) {
            return Err(Error::parameter("Grid2d::new", "column grid not strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("Grid2d::new", "non-finite table value"));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn cols(&self) -> &[f64] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, ri: usize, ci: usize) -> f64 {
        self.values[ri * self.cols.len() + ci]
    }

    pub fn row_range(&self) -> (f64, f64) {
        (self.rows[0], *self.rows.last().unwrap())
    }

    pub fn col_range(&self) -> (f64, f64) {
        (self.cols[0], *self.cols.last().unwrap())
    }

    /// Bilinear interpolation at (row coordinate, column coordinate).
    ///
    /// Coordinates within `EDGE_TOL` of the grid edge are clamped onto it;
    /// anything further out is a range error naming the offending axis.
    pub fn bilinear(&self, op: &'static str, r: f64, c: f64) -> Result<f64> {
        let r = clamp_to_range(op, "row", r, self.row_range())?;
        let c = clamp_to_range(op, "column", c, self.col_range())?;
        let (ri, rt) = locate(&self.rows, r);
        let (ci, ct) = locate(&self.cols, c);
        let v00 = self.value_at(ri, ci);
        let v01 = self.value_at(ri, ci + 1);
        let v10 = self.value_at(ri + 1, ci);
        let v11 = self.value_at(ri + 1, ci + 1);
        let lo = v00 + (v01 - v00) * ct;
        let hi = v10 + (v11 - v10) * ct;
        Ok(lo + (hi - lo) * rt)
    }

    /// Linear interpolation along the row axis at a fixed column coordinate,
    /// evaluated on every row node. Used for integrating spectra at a fixed
    /// line-of-sight angle.
    pub fn column_profile(&self, op: &'static str, c: f64) -> Result<Vec<f64>> {
        let c = clamp_to_range(op, "column", c, self.col_range())?;
        let (ci, ct) = locate(&self.cols, c);
        Ok((0..self.rows.len())
            .map(|ri| {
                let v0 = self.value_at(ri, ci);
                let v1 = self.value_at(ri, ci + 1);
                v0 + (v1 - v0) * ct
            })
            .collect())
    }
}

/// Integrate a piecewise-linear function `(xs, ys)` over `[a, b]`.
///
/// The endpoints may fall between nodes; partial cells are handled exactly
/// (the integrand is linear inside a cell). `a` and `b` must lie within the
/// node range, `a <= b`.
pub fn integrate_linear(xs: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(a <= b);
    let value_at = |x: f64| -> f64 {
        let (i, t) = locate(xs, x);
        ys[i] + (ys[i + 1] - ys[i]) * t
    };
    let mut total = 0.0;
    let mut x0 = a;
    let mut y0 = value_at(a);
    for (i, &x) in xs.iter().enumerate() {
        if x <= a {
            continue;
        }
        if x >= b {
            break;
        }
        total += 0.5 * (y0 + ys[i]) * (x - x0);
        x0 = x;
        y0 = ys[i];
    }
    total += 0.5 * (y0 + value_at(b)) * (b - x0);
    total
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite())
}

fn clamp_to_range(op: &'static str, axis: &str, x: f64, (lo, hi): (f64, f64)) -> Result<f64> {
    let tol = EDGE_TOL * (1.0 + lo.abs().max(hi.abs()));
    if x < lo - tol || x > hi + tol {
        return Err(Error::range(
            op,
            format!("{axis} coordinate {x} outside grid [{lo}, {hi}]"),
        ));
    }
    Ok(x.clamp(lo, hi))
}

/// Find the cell index `i` with `xs[i] <= x <= xs[i+1]` and the fractional
/// position of `x` within it. `x` must be inside the node range.
fn locate(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    let i = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    };
    let span = xs[i + 1] - xs[i];
    let t = ((x - xs[i]) / span).clamp(0.0, 1.0);
    (i, t)
}
