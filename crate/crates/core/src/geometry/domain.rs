use std::f64::consts::TAU;

use super::{add, dot, invert_point, norm, scale, sub, Point, Similarity};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, RegionMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetTag {
    Disk,
    Annulus,
    Square,
    GraphBoundary,
    Custom,
}

/// Geometric description of a planar domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
    },
    Annulus {
        center: Point,
        inner: f64,
        outer: f64,
    },
    Rectangle {
        min: Point,
        max: Point,
    },
    /// Closed polygon; vertices in either orientation.
    Polygon {
        vertices: Vec<Point>,
    },
    /// Image `h(S(base))` of a domain under a similarity `S` followed by the
    /// unit inversion.
    Inverted {
        base: Box<Shape>,
        map: Similarity,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub point: Point,
    pub normal: Point,
}

impl Shape {
    /// Signed distance: negative inside, positive outside.
    ///
    /// Exact for every variant except `Inverted`, where the base distance is
    /// rescaled by the local conformal factor of the inversion.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => norm(&sub(x, *center)) - radius,
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = norm(&sub(x, *center));
                (r - 0.5 * (inner + outer)).abs() - 0.5 * (outer - inner)
            }
            Shape::Rectangle { min, max } => {
                let c = scale(add(*min, *max), 0.5);
                let half = scale(sub(*max, *min), 0.5);
                let q = [(x[0] - c[0]).abs() - half[0], (x[1] - c[1]).abs() - half[1]];
                let outside = norm(&[q[0].max(0.0), q[1].max(0.0)]);
                outside + q[0].max(q[1]).min(0.0)
            }
            Shape::Polygon { vertices } => polygon_signed_distance(vertices, x),
            Shape::Inverted { base, map } => {
                let r2 = dot(&x, &x);
                if r2 == 0.0 {
                    return f64::INFINITY;
                }
                let z = [x[0] / r2, x[1] / r2];
                let d = base.signed_distance(map.apply_inverse(z));
                d * map.scale * r2
            }
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) < 0.0
    }

    /// Boundary points roughly `spacing` apart, with outward unit normals.
    pub fn boundary_samples(&self, spacing: f64) -> Vec<BoundarySample> {
        match self {
            Shape::Disk { center, radius } => circle_samples(*center, *radius, spacing, 1.0),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let mut s = circle_samples(*center, *outer, spacing, 1.0);
                s.extend(circle_samples(*center, *inner, spacing, -1.0));
                s
            }
            Shape::Rectangle { min, max } => {
                let v = vec![*min, [max[0], min[1]], *max, [min[0], max[1]]];
                polygon_samples(&v, spacing)
            }
            Shape::Polygon { vertices } => polygon_samples(vertices, spacing),
            Shape::Inverted { base, map } => {
                // finer base sampling keeps image spacing at or below `spacing`
                let base_spacing = spacing / map.scale;
                base.boundary_samples(base_spacing)
                    .into_iter()
                    .filter_map(|b| {
                        let z = map.apply(b.point);
                        let y = invert_point(z).ok()?;
                        let n = map.rotate(b.normal);
                        let zn = norm(&z);
                        let zhat = [z[0] / zn, z[1] / zn];
                        let t = 2.0 * dot(&zhat, &n);
                        let m = [n[0] - t * zhat[0], n[1] - t * zhat[1]];
                        let mn = norm(&m);
                        Some(BoundarySample {
                            point: y,
                            normal: [m[0] / mn, m[1] / mn],
                        })
                    })
                    .collect()
            }
        }
    }

    /// `min x . nu` over the closure, when it has a closed form.
    pub fn min_projection(&self, nu: Point) -> Option<f64> {
        match self {
            Shape::Disk { center, radius } => Some(dot(center, &nu) - radius * norm(&nu)),
            Shape::Annulus { center, outer, .. } => Some(dot(center, &nu) - outer * norm(&nu)),
            Shape::Rectangle { min, max } => {
                let v = [*min, [max[0], min[1]], *max, [min[0], max[1]]];
                Some(v.iter().map(|p| dot(p, &nu)).fold(f64::INFINITY, f64::min))
            }
            Shape::Polygon { vertices } => Some(vertices.iter().map(|p| dot(p, &nu)).fold(f64::INFINITY, f64::min)),
            Shape::Inverted { base, map } => {
                // circles avoiding the origin invert to circles
                let circles: Vec<(Point, f64)> = match base.as_ref() {
                    Shape::Disk { center, radius } => vec![(*center, *radius)],
                    Shape::Annulus { center, inner, outer } => vec![(*center, *inner), (*center, *outer)],
                    _ => return None,
                };
                let mut best = f64::INFINITY;
                for (c, r) in circles {
                    let q = map.apply(c);
                    let rr = r * map.scale;
                    let d = dot(&q, &q) - rr * rr;
                    if d.abs() < 1e-12 {
                        return None;
                    }
                    best = best.min(dot(&q, &nu) / d - rr / d.abs() * norm(&nu));
                }
                Some(best)
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::Annulus { center, outer, .. } => (
                [center[0] - outer, center[1] - outer],
                [center[0] + outer, center[1] + outer],
            ),
            Shape::Rectangle { min, max } => (*min, *max),
            Shape::Polygon { vertices } => bbox_of(vertices.iter().copied()),
            Shape::Inverted { .. } => {
                bbox_of(self.boundary_samples(self.diameter_hint() / 2048.0).iter().map(|b| b.point))
            }
        }
    }

    fn diameter_hint(&self) -> f64 {
        match self {
            // images of bounded domains under the normalized inversion live in the unit ball
            Shape::Inverted { .. } => 2.0,
            _ => {
                let (lo, hi) = self.bounding_box();
                norm(&sub(hi, lo))
            }
        }
    }
}

fn bbox_of(points: impl Iterator<Item = Point>) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

fn circle_samples(center: Point, radius: f64, spacing: f64, orientation: f64) -> Vec<BoundarySample> {
    let n = ((TAU * radius / spacing).ceil() as usize).max(16);
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            let (s, c) = t.sin_cos();
            BoundarySample {
                point: [center[0] + radius * c, center[1] + radius * s],
                normal: [orientation * c, orientation * s],
            }
        })
        .collect()
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn polygon_samples(v: &[Point], spacing: f64) -> Vec<BoundarySample> {
    let n = v.len();
    let ccw = signed_area(v) > 0.0;
    let edge_normal = |i: usize| {
        let a = v[i];
        let b = v[(i + 1) % n];
        let d = sub(b, a);
        let l = norm(&d);
        if ccw {
            [d[1] / l, -d[0] / l]
        } else {
            [-d[1] / l, d[0] / l]
        }
    };
    let mut out = Vec::new();
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let len = norm(&sub(b, a));
        let nrm = edge_normal(i);
        // vertex sample with the bisecting normal
        let prev = edge_normal((i + n - 1) % n);
        let bis = add(prev, nrm);
        let bl = norm(&bis);
        out.push(BoundarySample {
            point: a,
            normal: if bl > 1e-12 { scale(bis, 1.0 / bl) } else { nrm },
        });
        let m = (len / spacing).ceil().max(1.0) as usize;
        for k in 1..m {
            let t = k as f64 / m as f64;
            out.push(BoundarySample {
                point: add(a, scale(sub(b, a), t)),
                normal: nrm,
            });
        }
    }
    out
}

fn polygon_signed_distance(v: &[Point], x: Point) -> f64 {
    let n = v.len();
    let mut best = f64::INFINITY;
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let ab = sub(b, a);
        let ax = sub(x, a);
        let l2 = dot(&ab, &ab);
        let t = if l2 > 0.0 { (dot(&ax, &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
        let d = norm(&sub(ax, scale(ab, t)));
        best = best.min(d);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if x[0] < xc {
                inside = !inside;
            }
        }
    }
    if inside {
        -best
    } else {
        best
    }
}

/// A bounded planar domain with its exterior-sphere radius and grid spacing.
#[derive(Debug, Clone)]
pub struct Domain {
    pub tag: PresetTag,
    pub shape: Shape,
    /// Uniform exterior sphere radius.
    pub rho: f64,
    pub grid_h: f64,
    /// Radius of a ball (about the bounding-box center) containing the domain.
    pub circumbound: f64,
    samples: Vec<BoundarySample>,
}

impl Domain {
    pub fn new(tag: PresetTag, shape: Shape, rho: f64, grid_h: f64) -> Result<Domain> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if !(grid_h > 0.0 && grid_h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid_h must be positive, got {grid_h}")));
        }
        validate_shape(&shape)?;
        // 4x boundary supersampling relative to the grid
        let samples = shape.boundary_samples(grid_h / 4.0);
        if samples.is_empty() {
            return Err(Error::Domain("shape has no boundary samples".into()));
        }
        let (lo, hi) = bbox_of(samples.iter().map(|b| b.point));
        let c = scale(add(lo, hi), 0.5);
        let circumbound = samples
            .iter()
            .map(|b| norm(&sub(b.point, c)))
            .fold(0.0, f64::max);
        Ok(Domain {
            tag,
            shape,
            rho,
            grid_h,
            circumbound,
            samples,
        })
    }

    pub fn disk(center: Point, radius: f64, rho: f64, grid_h: f64) -> Result<Domain> {
        Domain::new(PresetTag::Disk, Shape::Disk { center, radius }, rho, grid_h)
    }

    pub fn annulus(center: Point, inner: f64, outer: f64, rho: f64, grid_h: f64) -> Result<Domain> {
        Domain::new(
            PresetTag::Annulus,
            Shape::Annulus {
                center,
                inner,
                outer,
            },
            rho,
            grid_h,
        )
    }

    pub fn square(min: Point, side: f64, rho: f64, grid_h: f64) -> Result<Domain> {
        Domain::new(
            PresetTag::Square,
            Shape::Rectangle {
                min,
                max: [min[0] + side, min[1] + side],
            },
            rho,
            grid_h,
        )
    }

    /// Same domain with a different grid spacing (resamples the boundary).
    pub fn with_grid_h(&self, grid_h: f64) -> Result<Domain> {
        Domain::new(self.tag, self.shape.clone(), self.rho, grid_h)
    }

    #[inline]
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.shape.signed_distance(x)
    }

    pub fn boundary_samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bbox_of(self.samples.iter().map(|b| b.point))
    }

    /// Aligned grid of spacing `h` covering the domain with two padding nodes.
    pub fn grid(&self, h: f64) -> Result<Grid> {
        let (lo, hi) = self.bounding_box();
        Grid::covering(lo, hi, h, 2)
    }

    pub fn interior_mask(&self, grid: &Grid) -> RegionMask {
        RegionMask {
            grid: *grid,
            inside: (0..grid.len())
                .map(|k| self.signed_distance(grid.point(k)) < 0.0)
                .collect(),
        }
    }

    /// Zero grid function carrying the interior mask and the boundary arm
    /// fractions from linear interpolation of the signed distance.
    pub fn grid_function(&self, h: f64) -> Result<GridFunction> {
        let grid = self.grid(h)?;
        let sd: Vec<f64> = (0..grid.len())
            .map(|k| self.signed_distance(grid.point(k)))
            .collect();
        let interior: Vec<bool> = sd.iter().map(|&d| d < 0.0).collect();
        let fractions = (0..grid.len())
            .map(|k| {
                if !interior[k] {
                    return [1.0; 4];
                }
                grid.neighbors(k).map(|nb| match nb {
                    Some(n) if interior[n] => 1.0,
                    Some(n) => arm_fraction(sd[k], sd[n]),
                    None => 0.5,
                })
            })
            .collect();
        Ok(GridFunction {
            grid,
            values: vec![0.0; grid.len()],
            interior,
            fractions,
        })
    }

    /// Samples `f` at every node; exterior nodes get the Dirichlet zero.
    pub fn sample(&self, h: f64, f: impl Fn(Point) -> f64) -> Result<GridFunction> {
        let mut u = self.grid_function(h)?;
        for k in 0..u.grid.len() {
            if u.interior[k] {
                u.values[k] = f(u.grid.point(k));
            }
        }
        Ok(u)
    }

    /// Largest distance from the boundary over sampled grid nodes.
    pub fn inradius(&self) -> f64 {
        match self.grid(self.grid_h) {
            Ok(g) => (0..g.len())
                .map(|k| -self.signed_distance(g.point(k)))
                .fold(0.0, f64::max),
            Err(_) => 0.0,
        }
    }
}

/// Smallest admissible arm fraction; keeps the stencil weights bounded.
pub(crate) const MIN_ARM_FRACTION: f64 = 1e-3;

/// Fraction of the arm from an interior node (signed distance `din < 0`) to an
/// exterior neighbor (`dout >= 0`) that lies inside the domain.
#[inline]
pub(crate) fn arm_fraction(din: f64, dout: f64) -> f64 {
    let t = din / (din - dout);
    if t.is_finite() {
        t.clamp(MIN_ARM_FRACTION, 1.0)
    } else {
        1.0
    }
}

fn validate_shape(shape: &Shape) -> Result<()> {
    let finite = |p: &Point| p.iter().all(|c| c.is_finite());
    match shape {
        Shape::Disk { center, radius } => {
            if !finite(center) || !(*radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidArgument("disk needs a finite center and positive radius".into()));
            }
        }
        Shape::Annulus {
            center,
            inner,
            outer,
        } => {
            if !finite(center) || !(*inner > 0.0 && inner < outer && outer.is_finite()) {
                return Err(Error::InvalidArgument(
                    "annulus needs 0 < inner < outer and a finite center".into(),
                ));
            }
        }
        Shape::Rectangle { min, max } => {
            if !finite(min) || !finite(max) || !(max[0] > min[0] && max[1] > min[1]) {
                return Err(Error::InvalidArgument("rectangle needs min < max".into()));
            }
        }
        Shape::Polygon { vertices } => {
            if vertices.len() < 3 || !vertices.iter().all(finite) {
                return Err(Error::InvalidArgument("polygon needs at least 3 finite vertices".into()));
            }
            if signed_area(vertices).abs() < 1e-14 {
                return Err(Error::InvalidArgument("polygon has zero area".into()));
            }
        }
        Shape::Inverted { base, map } => {
            if !(map.scale > 0.0 && map.scale.is_finite()) {
                return Err(Error::InvalidArgument("similarity scale must be positive".into()));
            }
            validate_shape(base)?;
        }
    }
    Ok(())
}
