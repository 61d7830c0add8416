//! Embedded Cartesian grids, node masks, grid functions and the portable
//! text grid format.
//!
//! Text format: a header line `nx ny h x0 y0`, followed by `ny` rows ordered
//! by increasing `y`. Mask rows are `nx` characters of `0`/`1`; field rows are
//! `nx` whitespace-separated floats (`nan` marks an invalid node).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Upper bound on the node count accepted by the text parsers.
pub const MAX_PARSED_NODES: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: Point,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: Point) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid must have at least one node".into()));
        }
        if !(h > 0.0 && h.is_finite()) || !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid grid spacing/origin (h = {h})")));
        }
        Ok(Grid { nx, ny, h, origin })
    }

    /// Grid aligned to integer multiples of `h` covering `[lo, hi]` plus `pad` nodes.
    pub fn covering(lo: Point, hi: Point, h: f64, pad: usize) -> Result<Self> {
        if !(h > 0.0) || !(hi[0] >= lo[0] && hi[1] >= lo[1]) {
            return Err(Error::InvalidArgument("invalid covering box".into()));
        }
        let i0 = (lo[0] / h).floor() as i64 - pad as i64;
        let j0 = (lo[1] / h).floor() as i64 - pad as i64;
        let i1 = (hi[0] / h).ceil() as i64 + pad as i64;
        let j1 = (hi[1] / h).ceil() as i64 + pad as i64;
        Grid::new(
            (i1 - i0 + 1) as usize,
            (j1 - j0 + 1) as usize,
            h,
            [i0 as f64 * h, j0 as f64 * h],
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn point(&self, k: usize) -> Point {
        let (i, j) = self.coords(k);
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// Neighbor indices in the order east, west, north, south.
    #[inline]
    pub fn neighbors(&self, k: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(k);
        [
            (i + 1 < self.nx).then(|| k + 1),
            (i > 0).then(|| k - 1),
            (j + 1 < self.ny).then(|| k + self.nx),
            (j > 0).then(|| k - self.nx),
        ]
    }

    fn header(&self) -> String {
        format!(
            "{} {} {:.16e} {:.16e} {:.16e}\n",
            self.nx, self.ny, self.h, self.origin[0], self.origin[1]
        )
    }

    fn parse_header(line: Option<&str>) -> Result<Grid> {
        let line = line.ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: 1,
                message: format!("header needs 5 fields, found {}", fields.len()),
            });
        }
        let bad = |m: String| Error::Parse { line: 1, message: m };
        let nx: usize = fields[0].parse().map_err(|e| bad(format!("nx: {e}")))?;
        let ny: usize = fields[1].parse().map_err(|e| bad(format!("ny: {e}")))?;
        let h: f64 = fields[2].parse().map_err(|e| bad(format!("h: {e}")))?;
        let x0: f64 = fields[3].parse().map_err(|e| bad(format!("x0: {e}")))?;
        let y0: f64 = fields[4].parse().map_err(|e| bad(format!("y0: {e}")))?;
        if nx.checked_mul(ny).is_none_or(|n| n > MAX_PARSED_NODES) {
            return Err(bad(format!("grid {nx}x{ny} exceeds the parser limit")));
        }
        Grid::new(nx, ny, h, [x0, y0]).map_err(|e| bad(e.to_string()))
    }

    /// Continuous (fractional) node coordinates of `x`.
    #[inline]
    fn locate(&self, x: Point) -> (f64, f64) {
        (
            (x[0] - self.origin[0]) / self.h,
            (x[1] - self.origin[1]) / self.h,
        )
    }
}

/// Boolean node mask over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: Grid,
    pub inside: Vec<bool>,
}

impl RegionMask {
    pub fn empty(grid: Grid) -> Self {
        RegionMask {
            grid,
            inside: vec![false; grid.len()],
        }
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
    }

    /// Nodes of `self` not in `other` (same grid required).
    pub fn difference(&self, other: &RegionMask) -> Result<RegionMask> {
        self.same_grid(other)?;
        Ok(RegionMask {
            grid: self.grid,
            inside: self
                .inside
                .iter()
                .zip(&other.inside)
                .map(|(&a, &b)| a && !b)
                .collect(),
        })
    }

    pub fn union_with(&mut self, other: &RegionMask) -> Result<()> {
        self.same_grid(other)?;
        for (a, &b) in self.inside.iter_mut().zip(&other.inside) {
            *a |= b;
        }
        Ok(())
    }

    fn same_grid(&self, other: &RegionMask) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("masks live on different grids".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = self.grid.header();
        out.reserve(self.grid.len() + self.grid.ny);
        for row in self.inside.chunks(self.grid.nx) {
            out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<RegionMask> {
        let mut lines = text.lines();
        let grid = Grid::parse_header(lines.next())?;
        let mut inside = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let line_no = j + 2;
            let row = lines.next().ok_or(Error::Parse {
                line: line_no,
                message: "missing mask row".into(),
            })?;
            let row = row.trim_end_matches('\r');
            if row.len() != grid.nx {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} cells, found {}", grid.nx, row.len()),
                });
            }
            for c in row.bytes() {
                inside.push(match c {
                    b'0' => false,
                    b'1' => true,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("invalid mask cell {:?}", other as char),
                        })
                    }
                });
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse {
                line: grid.ny + 2,
                message: "trailing data after mask rows".into(),
            });
        }
        Ok(RegionMask { grid, inside })
    }
}

/// Something that can be evaluated at arbitrary points of the plane.
pub trait ScalarField: Sync {
    fn value(&self, x: Point) -> Option<f64>;

    /// Gradient; the default is a centered difference of [`ScalarField::value`].
    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        let e = 1e-6;
        let dx = (self.value([x[0] + e, x[1]])? - self.value([x[0] - e, x[1]])?) / (2.0 * e);
        let dy = (self.value([x[0], x[1] + e])? - self.value([x[0], x[1] - e])?) / (2.0 * e);
        Some([dx, dy])
    }
}

/// Closure-backed field, with an optional analytic gradient.
pub struct FnField<F, G = fn(Point) -> [f64; 2]> {
    f: F,
    grad: Option<G>,
}

impl<F: Fn(Point) -> f64 + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField { f, grad: None }
    }
}

impl<F: Fn(Point) -> f64 + Sync, G: Fn(Point) -> [f64; 2] + Sync> FnField<F, G> {
    pub fn with_gradient(f: F, grad: G) -> Self {
        FnField { f, grad: Some(grad) }
    }
}

impl<F: Fn(Point) -> f64 + Sync, G: Fn(Point) -> [f64; 2] + Sync> ScalarField for FnField<F, G> {
    fn value(&self, x: Point) -> Option<f64> {
        let v = (self.f)(x);
        v.is_finite().then_some(v)
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        match &self.grad {
            Some(g) => Some(g(x)),
            None => {
                let e = 1e-6;
                let f = &self.f;
                Some([
                    (f([x[0] + e, x[1]]) - f([x[0] - e, x[1]])) / (2.0 * e),
                    (f([x[0], x[1] + e]) - f([x[0], x[1] - e])) / (2.0 * e),
                ])
            }
        }
    }
}

/// Scalar field sampled on a grid.
///
/// `values` covers every node; nodes outside the owning domain hold the
/// Dirichlet value 0, and `NaN` marks nodes that could not be evaluated.
/// `fractions` holds, per node, the fraction of the east/west/north/south arm
/// that lies inside the domain (1 when the neighbor is interior).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub interior: Vec<bool>,
    pub fractions: Vec<[f64; 4]>,
}

/// Interpolation used when a grid function is evaluated off-node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Tensor-product cubic Lagrange on the surrounding 4x4 nodes.
    Bicubic,
}

impl GridFunction {
    pub fn interior_mask(&self) -> RegionMask {
        RegionMask {
            grid: self.grid,
            inside: self.interior.clone(),
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
    }

    /// Maximum over interior nodes that hold a finite value.
    pub fn max_interior(&self) -> Option<(usize, f64)> {
        self.max_over(self.interior_nodes())
    }

    pub fn max_over(&self, nodes: impl Iterator<Item = usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for k in nodes {
            let v = self.values[k];
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best
    }

    pub fn min_interior(&self) -> Option<f64> {
        self.interior_nodes()
            .map(|k| self.values[k])
            .filter(|v| v.is_finite())
            .reduce(f64::min)
    }

    /// Arm lengths (east, west, north, south) of the node's stencil.
    #[inline]
    pub fn arms(&self, k: usize) -> [f64; 4] {
        self.fractions[k].map(|t| t * self.grid.h)
    }

    /// Value of the neighbor in direction `d`, taking the Dirichlet zero when
    /// the arm is cut by the boundary.
    #[inline]
    fn arm_value(&self, k: usize, d: usize) -> f64 {
        if self.fractions[k][d] < 1.0 {
            return 0.0;
        }
        match self.grid.neighbors(k)[d] {
            Some(n) => self.values[n],
            None => 0.0,
        }
    }

    /// Second-order gradient at an interior node, using the shortened arms
    /// and the boundary zero next to the boundary.
    pub fn node_gradient(&self, k: usize) -> [f64; 2] {
        let a = self.arms(k);
        let u = self.values[k];
        let diff = |hp: f64, hm: f64, up: f64, um: f64| {
            (hm * hm * (up - u) + hp * hp * (u - um)) / (hp * hm * (hp + hm))
        };
        [
            diff(a[0], a[1], self.arm_value(k, 0), self.arm_value(k, 1)),
            diff(a[2], a[3], self.arm_value(k, 2), self.arm_value(k, 3)),
        ]
    }

    pub fn interpolate(&self, x: Point, scheme: Interpolation) -> Option<f64> {
        match scheme {
            Interpolation::Bilinear => self.bilinear(x),
            Interpolation::Bicubic => self.bicubic(x),
        }
    }

    fn bilinear(&self, x: Point) -> Option<f64> {
        let g = &self.grid;
        let (fx, fy) = g.locate(x);
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > (g.nx - 1) as f64 + eps || fy > (g.ny - 1) as f64 + eps {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(g.nx.saturating_sub(2));
        let j = (fy.floor().max(0.0) as usize).min(g.ny.saturating_sub(2));
        if g.nx < 2 || g.ny < 2 {
            return None;
        }
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.values[g.index(i, j)];
        let v10 = self.values[g.index(i + 1, j)];
        let v01 = self.values[g.index(i, j + 1)];
        let v11 = self.values[g.index(i + 1, j + 1)];
        let v = (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11);
        v.is_finite().then_some(v)
    }

    fn bicubic(&self, x: Point) -> Option<f64> {
        let g = &self.grid;
        if g.nx < 4 || g.ny < 4 {
            return self.bilinear(x);
        }
        let (fx, fy) = g.locate(x);
        if fx < 0.0 || fy < 0.0 || fx > (g.nx - 1) as f64 || fy > (g.ny - 1) as f64 {
            return None;
        }
        let i0 = (fx.floor() as i64 - 1).clamp(0, g.nx as i64 - 4) as usize;
        let j0 = (fy.floor() as i64 - 1).clamp(0, g.ny as i64 - 4) as usize;
        let wx = lagrange4(fx - i0 as f64);
        let wy = lagrange4(fy - j0 as f64);
        let mut acc = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            let mut row = 0.0;
            for (a, wxa) in wx.iter().enumerate() {
                row += wxa * self.values[g.index(i0 + a, j0 + b)];
            }
            acc += wyb * row;
        }
        acc.is_finite().then_some(acc)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.grid.header();
        for row in self.values.chunks(self.grid.nx) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                if v.is_finite() {
                    let _ = write!(out, "{v:.16e}");
                } else {
                    out.push_str("nan");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the field text format. Interior flags are reconstructed as the
    /// nodes holding finite nonzero values; stencil fractions default to 1.
    pub fn parse(text: &str) -> Result<GridFunction> {
        let mut lines = text.lines();
        let grid = Grid::parse_header(lines.next())?;
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let line_no = j + 2;
            let row = lines.next().ok_or(Error::Parse {
                line: line_no,
                message: "missing field row".into(),
            })?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok.parse().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad value {tok:?}: {e}"),
                })?;
                values.push(v);
                if values.len() - before > grid.nx {
                    break;
                }
            }
            if values.len() - before != grid.nx {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} values", grid.nx),
                });
            }
        }
        let interior = values.iter().map(|v| v.is_finite() && *v != 0.0).collect();
        Ok(GridFunction {
            grid,
            fractions: vec![[1.0; 4]; grid.len()],
            values,
            interior,
        })
    }
}

/// Cubic Lagrange weights for nodes 0..4 at fractional position `t`.
fn lagrange4(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// A grid function evaluated with an explicit interpolation scheme.
#[derive(Debug, Clone, Copy)]
pub struct Interpolated<'a> {
    pub field: &'a GridFunction,
    pub scheme: Interpolation,
}

impl ScalarField for Interpolated<'_> {
    fn value(&self, x: Point) -> Option<f64> {
        self.field.interpolate(x, self.scheme)
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        let e = 0.5 * self.field.grid.h;
        let v = |p: Point| self.field.interpolate(p, self.scheme);
        Some([
            (v([x[0] + e, x[1]])? - v([x[0] - e, x[1]])?) / (2.0 * e),
            (v([x[0], x[1] + e])? - v([x[0], x[1] - e])?) / (2.0 * e),
        ])
    }
}

impl ScalarField for GridFunction {
    fn value(&self, x: Point) -> Option<f64> {
        self.bilinear(x)
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        let e = 0.5 * self.grid.h;
        let dx = (self.bilinear([x[0] + e, x[1]])? - self.bilinear([x[0] - e, x[1]])?) / (2.0 * e);
        let dy = (self.bilinear([x[0], x[1] + e])? - self.bilinear([x[0], x[1] - e])?) / (2.0 * e);
        Some([dx, dy])
    }
}
