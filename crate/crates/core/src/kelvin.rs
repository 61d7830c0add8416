//! Kelvin frames and transforms.
//!
//! Planar grids stand for meridian sections: for `N >= 3` a field on the
//! plane is read as an `N`-dimensional field that is rotationally symmetric
//! about the first coordinate axis of the frame, and Laplacians are the
//! corresponding axisymmetric operators. Fields that are radial about a
//! point of that axis (balls, annuli) are represented exactly.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ball_penetration, dot, norm, sub, Domain, Point, PresetTag, Shape, Similarity};
use crate::grid::{GridFunction, ScalarField};
use crate::nonlinearity::Nonlinearity;

/// Similarity taking the exterior ball `B_rho(c)` at `base_point` to the unit
/// ball and `base_point` to `e_1`, with `outer_radius = max |frame(x)|` over
/// the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinFrame {
    pub map: Similarity,
    pub base_point: Point,
    pub rho: f64,
    pub outer_radius: f64,
}

#[derive(Serialize)]
struct FrameRecord {
    rotation: [[f64; 2]; 2],
    translation: Point,
    scale: f64,
    #[serde(rename = "R")]
    outer_radius: f64,
    x0: Point,
    rho: f64,
}

impl Serialize for KelvinFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameRecord {
            rotation: self.map.rotation(),
            translation: [-self.map.center[0], -self.map.center[1]],
            scale: self.map.scale,
            outer_radius: self.outer_radius,
            x0: self.base_point,
            rho: self.rho,
        }
        .serialize(s)
    }
}

impl KelvinFrame {
    #[inline]
    pub fn apply(&self, x: Point) -> Point {
        self.map.apply(x)
    }

    #[inline]
    pub fn apply_inverse(&self, z: Point) -> Point {
        self.map.apply_inverse(z)
    }

    pub fn ball_center(&self) -> Point {
        self.map.center
    }

    /// `1/R`: image nodes satisfy `1/R <= |y| <= 1`.
    pub fn inner_radius(&self) -> f64 {
        1.0 / self.outer_radius
    }

    /// Physical point whose frame image inverts to `y`.
    #[inline]
    pub fn pull(&self, y: Point) -> Option<Point> {
        let r2 = dot(&y, &y);
        (r2 > 0.0).then(|| self.apply_inverse([y[0] / r2, y[1] / r2]))
    }
}

/// Normalizes the exterior ball of radius `rho` at the boundary point `x0`.
pub fn build_frame(domain: &Domain, x0: Point, rho: f64) -> Result<KelvinFrame> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let scale_len = 1.0 + domain.circumbound + norm(&x0);
    let sd = domain.signed_distance(x0);
    if !(sd.abs() <= 1e-9 * scale_len) {
        return Err(Error::Domain(format!(
            "base point ({}, {}) is not on the boundary (signed distance {sd:e})",
            x0[0], x0[1]
        )));
    }
    let n = outward_normal(domain, x0, scale_len);
    let c = [x0[0] + rho * n[0], x0[1] + rho * n[1]];
    let grid = domain.grid(domain.grid_h)?;
    let depth = ball_penetration(&domain.interior_mask(&grid), c, rho);
    if depth > 1e-9 * (1.0 + rho) {
        return Err(Error::ExteriorSphere {
            x: x0[0],
            y: x0[1],
            depth,
        });
    }
    let angle = -(-n[1]).atan2(-n[0]);
    let map = Similarity {
        center: c,
        angle,
        scale: 1.0 / rho,
    };
    let sampled = domain
        .boundary_samples()
        .iter()
        .map(|b| norm(&map.apply(b.point)))
        .fold(1.0, f64::max);
    let outer_radius = farthest_distance(&domain.shape, c).map_or(sampled, |d| (d / rho).max(1.0));
    Ok(KelvinFrame {
        map,
        base_point: x0,
        rho,
        outer_radius,
    })
}

/// Largest distance from `c` to the closure of a shape, when it has a closed form.
fn farthest_distance(shape: &Shape, c: Point) -> Option<f64> {
    let corner_max = |pts: &[Point]| pts.iter().map(|p| norm(&sub(*p, c))).fold(0.0, f64::max);
    match shape {
        Shape::Disk { center, radius } => Some(norm(&sub(*center, c)) + radius),
        Shape::Annulus { center, outer, .. } => Some(norm(&sub(*center, c)) + outer),
        Shape::Rectangle { min, max } => Some(corner_max(&[*min, [max[0], min[1]], *max, [min[0], max[1]]])),
        Shape::Polygon { vertices } => Some(corner_max(vertices)),
        Shape::Inverted { .. } => None,
    }
}

/// Outward unit normal at a boundary point: the normal of a coincident
/// boundary sample when there is one, else the signed-distance gradient.
fn outward_normal(domain: &Domain, x0: Point, scale_len: f64) -> Point {
    let nearest = domain
        .boundary_samples()
        .iter()
        .min_by(|a, b| norm(&sub(a.point, x0)).total_cmp(&norm(&sub(b.point, x0))));
    if let Some(b) = nearest {
        if norm(&sub(b.point, x0)) <= 1e-12 * scale_len {
            return b.normal;
        }
    }
    let e = 1e-7 * scale_len;
    let g = [
        domain.signed_distance([x0[0] + e, x0[1]]) - domain.signed_distance([x0[0] - e, x0[1]]),
        domain.signed_distance([x0[0], x0[1] + e]) - domain.signed_distance([x0[0], x0[1] - e]),
    ];
    let gn = norm(&g);
    [g[0] / gn, g[1] / gn]
}

/// The image `h(frame(domain))` as a domain in its own right.
pub fn image_domain(domain: &Domain, frame: &KelvinFrame, grid_h: f64) -> Result<Domain> {
    Domain::new(
        PresetTag::Custom,
        Shape::Inverted {
            base: Box::new(domain.shape.clone()),
            map: frame.map,
        },
        1.0,
        grid_h,
    )
}

/// Image grid spacing keeping the number of nodes across the domain.
pub fn image_spacing(domain: &Domain, frame: &KelvinFrame, h: f64) -> Result<f64> {
    let coarse = image_domain(domain, frame, 4.0 * h.max(1e-3))?;
    let (lo, hi) = coarse.bounding_box();
    let (plo, phi) = domain.bounding_box();
    Ok(h * norm(&sub(hi, lo)) / norm(&sub(phi, plo)))
}

/// A Kelvin transform sampled on the image grid.
#[derive(Debug, Clone)]
pub struct KelvinImage {
    pub v: GridFunction,
    pub domain: Domain,
    /// Interior image nodes where `v` could be evaluated and `1/R <= |y| <= 1`.
    pub valid: Vec<bool>,
    pub dim: u32,
    pub inner_radius: f64,
}

impl KelvinImage {
    pub fn valid_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
    }

    pub fn invalid_count(&self) -> usize {
        self.v.interior_nodes().filter(|&k| !self.valid[k]).count()
    }
}

fn check_dim(dim: u32) -> Result<()> {
    if dim < 3 {
        return Err(Error::InvalidArgument(
            "the Kelvin transform is implemented for N >= 3 only".into(),
        ));
    }
    Ok(())
}

/// `v(y) = |y|^{-(N-2)} u(frame^{-1}(y / |y|^2))` on the image grid.
///
/// `h` is the physical grid spacing; the image grid keeps the same number of
/// nodes across the domain. Image nodes where `u` cannot be evaluated hold
/// `NaN` and are marked invalid.
pub fn kelvin_transform(
    u: &dyn ScalarField,
    domain: &Domain,
    frame: &KelvinFrame,
    dim: u32,
    h: f64,
) -> Result<KelvinImage> {
    check_dim(dim)?;
    let hi = image_spacing(domain, frame, h)?;
    let img = image_domain(domain, frame, hi)?;
    let mut v = img.grid_function(hi)?;
    let r_in = frame.inner_radius();
    let w = dim as f64 - 2.0;
    let grid = v.grid;
    let evaluated: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !v.interior[k] {
                return (0.0, false);
            }
            let y = grid.point(k);
            let r = norm(&y);
            if !(r >= r_in && r <= 1.0) {
                return (f64::NAN, false);
            }
            match frame.pull(y).and_then(|x| u.value(x)) {
                Some(val) => (r.powf(-w) * val, true),
                None => (f64::NAN, false),
            }
        })
        .collect();
    let valid = evaluated.iter().map(|e| e.1).collect();
    v.values = evaluated.into_iter().map(|e| e.0).collect();
    Ok(KelvinImage {
        v,
        domain: img,
        valid,
        dim,
        inner_radius: r_in,
    })
}

/// The transform taken back to the physical grid: `u(x) = |z|^{-(N-2)}
/// v(z / |z|^2)` with `z = frame(x)`. Applied to a Kelvin image it recovers
/// the original field.
pub fn inverse_kelvin_transform(
    v: &dyn ScalarField,
    domain: &Domain,
    frame: &KelvinFrame,
    dim: u32,
    h: f64,
) -> Result<GridFunction> {
    check_dim(dim)?;
    let mut u = domain.grid_function(h)?;
    let grid = u.grid;
    let w = dim as f64 - 2.0;
    u.values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !u.interior[k] {
                return 0.0;
            }
            let z = frame.apply(grid.point(k));
            let r2 = dot(&z, &z);
            v.value([z[0] / r2, z[1] / r2])
                .map_or(f64::NAN, |val| r2.sqrt().powf(-w) * val)
        })
        .collect();
    Ok(u)
}

/// `g(y, s) = factor * |y|^{-(N+2)} f(|y|^{N-2} s)`. The factor is 1 for the
/// bare formula and `rho^2` for a problem rescaled into a Kelvin frame.
#[derive(Debug, Clone, Copy)]
pub struct TransformedNonlinearity<'a> {
    pub f: &'a Nonlinearity,
    pub dim: u32,
    pub factor: f64,
}

pub fn transformed_nonlinearity(f: &Nonlinearity, dim: u32) -> Result<TransformedNonlinearity<'_>> {
    check_dim(dim)?;
    Ok(TransformedNonlinearity { f, dim, factor: 1.0 })
}

impl TransformedNonlinearity<'_> {
    pub fn with_factor(self, factor: f64) -> Self {
        TransformedNonlinearity { factor, ..self }
    }

    pub fn eval(&self, y: Point, s: f64) -> Result<f64> {
        self.eval_radius(norm(&y), s)
    }

    pub fn eval_radius(&self, r: f64, s: f64) -> Result<f64> {
        if r == 0.0 {
            return Err(Error::Domain("g is undefined at y = 0".into()));
        }
        let n = self.dim as f64;
        Ok(self.factor * r.powf(-(n + 2.0)) * self.f.eval(r.powf(n - 2.0) * s))
    }
}

/// Axisymmetric `N`-dimensional Laplacian at an image node whose four
/// neighbors are usable: `v_11 + v_22 + (N-2) v_2 / y_2`, with the limit
/// `v_11 + (N-1) v_22` on the axis.
pub(crate) fn meridian_laplacian(v: &GridFunction, usable: &[bool], k: usize, dim: u32) -> Option<f64> {
    let nb = v.grid.neighbors(k);
    let mut vals = [0.0; 4];
    for d in 0..4 {
        let n = nb[d]?;
        if !usable[n] {
            return None;
        }
        vals[d] = v.values[n];
    }
    let h = v.grid.h;
    let c = v.values[k];
    let vxx = (vals[0] + vals[1] - 2.0 * c) / (h * h);
    let vyy = (vals[2] + vals[3] - 2.0 * c) / (h * h);
    let y2 = v.grid.point(k)[1];
    let extra = dim as f64 - 2.0;
    // the axis row sits on multiples of h; |y2| < h/2 only happens there
    if y2.abs() < 0.5 * h {
        Some(vxx + (1.0 + extra) * vyy)
    } else {
        Some(vxx + vyy + extra * (vals[2] - vals[3]) / (2.0 * h * y2))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KelvinPdeReport {
    pub dim: u32,
    /// Image grid spacing.
    pub h_image: f64,
    pub nodes: usize,
    pub max_residual: f64,
    /// Discrete `L^2` norm over the image domain.
    pub l2_residual: f64,
    pub worst_at: Point,
    /// `max |Δv|` over the same nodes.
    pub scale: f64,
    /// `max_residual / scale`; compared against `tolerance`.
    pub relative_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Minimum number of image nodes for a residual study.
pub const MIN_RESIDUAL_NODES: usize = 100;

/// Residual of `-Δv = g(y, v)` for the Kelvin image of `u`, where `u` solves
/// `-Δu = f(u)` in physical coordinates. Only image nodes whose four
/// neighbors are valid enter the norms. `tol` bounds the residual relative
/// to `max |Δv|`.
pub fn check_kelvin_pde(
    u: &dyn ScalarField,
    domain: &Domain,
    f: &Nonlinearity,
    frame: &KelvinFrame,
    dim: u32,
    h: f64,
    tol: f64,
) -> Result<KelvinPdeReport> {
    let img = kelvin_transform(u, domain, frame, dim, h)?;
    // rescaling into the frame multiplies the nonlinearity by rho^2
    let g = transformed_nonlinearity(f, dim)?.with_factor(frame.rho * frame.rho);
    let grid = img.v.grid;
    let rows: Vec<Option<(f64, f64, usize)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !img.valid[k] {
                return Ok(None);
            }
            let Some(lap) = meridian_laplacian(&img.v, &img.valid, k, dim) else {
                return Ok(None);
            };
            let y = grid.point(k);
            Ok(Some(((lap + g.eval(y, img.v.values[k])?).abs(), lap.abs(), k)))
        })
        .collect::<Result<_>>()?;
    let used: Vec<(f64, f64, usize)> = rows.into_iter().flatten().collect();
    if used.len() < MIN_RESIDUAL_NODES {
        return Err(Error::EmptyRegion(format!(
            "only {} usable image nodes (need {MIN_RESIDUAL_NODES}); refine the grid",
            used.len()
        )));
    }
    let (max_residual, worst) = used
        .iter()
        .fold((0.0, used[0].2), |acc, &(r, _, k)| if r > acc.0 { (r, k) } else { acc });
    let scale = used.iter().fold(0.0_f64, |m, &(_, l, _)| m.max(l));
    let relative_residual = if scale > 0.0 { max_residual / scale } else { max_residual };
    let hi = grid.h;
    let l2_residual = used.iter().map(|(r, ..)| r * r * hi * hi).sum::<f64>().sqrt();
    Ok(KelvinPdeReport {
        dim,
        h_image: hi,
        nodes: used.len(),
        max_residual,
        l2_residual,
        worst_at: grid.point(worst),
        scale,
        relative_residual,
        tolerance: tol,
        pass: relative_residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FnField;
    use crate::solver::{solve_radial, RadialDomain, RadialField};

    fn shifted_disk(h: f64) -> Domain {
        Domain::disk([3.0, 0.0], 1.0, 1.0, h).unwrap()
    }

    fn normalized_disk(h: f64) -> (Domain, KelvinFrame) {
        let d = Domain::disk([2.0, 0.0], 1.0, 1.0, h).unwrap();
        let f = build_frame(&d, [1.0, 0.0], 1.0).unwrap();
        (d, f)
    }

    #[test]
    fn frame_for_a_shifted_disk() {
        let d = shifted_disk(1.0 / 32.0);
        let f = build_frame(&d, [2.0, 0.0], 1.0).unwrap();
        let z = f.apply([2.0, 0.0]);
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12);
        assert!(norm(&f.apply([1.0, 0.0])) < 1e-12);
        // farthest point (4, 0) lands at distance 3
        assert!((f.outer_radius - 3.0).abs() < 1e-9, "{}", f.outer_radius);
    }

    #[test]
    fn normalized_configuration_gives_the_identity() {
        let (_, f) = normalized_disk(1.0 / 32.0);
        for p in [[0.3, -0.7], [2.0, 1.0], [1.0, 0.0]] {
            let z = f.apply(p);
            assert!((z[0] - p[0]).abs() < 1e-15 && (z[1] - p[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn frame_for_the_annulus_hole() {
        let d = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, 1.0 / 32.0).unwrap();
        let f = build_frame(&d, [1.0, 0.0], 0.5).unwrap();
        assert_eq!(f.map.scale, 2.0);
        assert!((f.ball_center()[0] - 0.5).abs() < 1e-12);
        assert!((f.outer_radius - 5.0).abs() < 1e-9, "{}", f.outer_radius);
        let rotated = build_frame(&d, [0.0, -1.0], 0.5).unwrap();
        let z = rotated.apply([0.0, -1.0]);
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12);
        assert!(matches!(build_frame(&d, [1.0, 0.0], 1.5), Err(Error::ExteriorSphere { .. })));
        assert!(matches!(build_frame(&d, [1.2, 0.0], 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn frame_serializes_with_named_fields() {
        let (_, f) = normalized_disk(1.0 / 16.0);
        let v = serde_json::to_value(f).unwrap();
        for key in ["rotation", "translation", "scale", "R", "x0", "rho"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn fundamental_solution_maps_to_one() {
        let h = 1.0 / 32.0;
        let (d, f) = normalized_disk(h);
        let u = FnField::new(|x: Point| 1.0 / norm(&x));
        let img = kelvin_transform(&u, &d, &f, 3, h).unwrap();
        assert!(img.valid_nodes().count() > 100);
        for k in img.valid_nodes() {
            assert!((img.v.values[k] - 1.0).abs() < 1e-12);
        }
        // a sampled field is close away from the boundary, where bilinear
        // interpolation sees only interior nodes
        let sampled = d.sample(h, |x| 1.0 / norm(&x)).unwrap();
        let img = kelvin_transform(&sampled, &d, &f, 3, h).unwrap();
        let deep = img
            .valid_nodes()
            .filter(|&k| {
                let x = f.pull(img.v.grid.point(k)).unwrap();
                d.signed_distance(x) < -2.0 * h
            })
            .map(|k| (img.v.values[k] - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(deep < 0.5 * h * h, "{deep}");
    }

    #[test]
    fn constant_maps_to_the_weight() {
        let h = 1.0 / 32.0;
        let (d, f) = normalized_disk(h);
        let u = FnField::new(|_| 1.0);
        let img = kelvin_transform(&u, &d, &f, 3, h).unwrap();
        for k in img.valid_nodes() {
            let y = img.v.grid.point(k);
            assert!((img.v.values[k] - 1.0 / norm(&y)).abs() < 1e-12);
        }
    }

    #[test]
    fn image_nodes_lie_in_the_shell() {
        let d = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, 1.0 / 32.0).unwrap();
        let f = build_frame(&d, [1.0, 0.0], 0.5).unwrap();
        let img = kelvin_transform(&FnField::new(|_| 1.0), &d, &f, 3, 1.0 / 32.0).unwrap();
        assert!(img.valid_nodes().count() > 100);
        for k in img.valid_nodes() {
            let r = norm(&img.v.grid.point(k));
            assert!(r >= 1.0 / f.outer_radius && r <= 1.0);
        }
    }

    #[test]
    fn harmonic_dipole_has_second_order_residual() {
        let zero = Nonlinearity::constant(0.0, 3);
        let mut res = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let (d, f) = normalized_disk(h);
            let u = FnField::new(|x: Point| x[0]);
            let r = check_kelvin_pde(&u, &d, &zero, &f, 3, h, 1.0).unwrap();
            res.push(r.max_residual);
        }
        let ratio = res[0] / res[1];
        assert!(ratio > 3.2 && ratio < 4.8, "{res:?}");
    }

    #[test]
    fn radial_cubic_residual_refines() {
        let cubic = Nonlinearity::power(3.0, 3).unwrap();
        let sol = solve_radial(3, &cubic, RadialDomain::Ball { radius: 1.0 }, 1e-12).unwrap();
        let field = RadialField {
            profile: &sol,
            center: [3.0, 0.0],
        };
        let mut res = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let d = shifted_disk(h);
            let f = build_frame(&d, [2.0, 0.0], 1.0).unwrap();
            res.push(check_kelvin_pde(&field, &d, &cubic, &f, 3, h, 1.0).unwrap().max_residual);
        }
        let ratio = res[0] / res[1];
        assert!(ratio > 3.2 && ratio < 4.8, "{res:?}");
    }

    #[test]
    fn noise_is_flagged() {
        let h = 1.0 / 32.0;
        let (d, f) = normalized_disk(h);
        let cubic = Nonlinearity::power(3.0, 3).unwrap();
        let noisy = FnField::new(|x: Point| (x[0] * 7919.0).sin() * (x[1] * 104729.0).cos());
        let r = check_kelvin_pde(&noisy, &d, &cubic, &f, 3, h, 0.05).unwrap();
        assert!(!r.pass && r.max_residual > 100.0 && r.relative_residual > 0.5, "{r:?}");
    }

    #[test]
    fn transformed_nonlinearity_examples() {
        let crit = Nonlinearity::power(5.0, 3).unwrap();
        let g = transformed_nonlinearity(&crit, 3).unwrap();
        for (y, s) in [([0.3, 0.1], 2.0), ([0.9, -0.2], 0.5), ([0.05, 0.0], 7.0)] {
            let v = g.eval(y, s).unwrap();
            assert!((v / s.powi(5) - 1.0).abs() < 1e-13);
        }
        let f1 = Nonlinearity::log_critical(3).unwrap();
        let g1 = transformed_nonlinearity(&f1, 3).unwrap();
        let v = g1.eval([0.5, 0.0], 1.0).unwrap();
        assert!((v - 32.0 * 0.5f64.powi(5) / 2.5f64.ln()).abs() < 1e-14);
        let cubic = Nonlinearity::power(3.0, 3).unwrap();
        let gc = transformed_nonlinearity(&cubic, 3).unwrap();
        assert_eq!(gc.eval([0.6, 0.8], 1.7).unwrap(), cubic.eval(1.7));
        assert!(matches!(gc.eval([0.0, 0.0], 1.0), Err(Error::Domain(_))));
        assert!(transformed_nonlinearity(&cubic, 2).is_err());
    }

    #[test]
    fn involution_recovers_the_field() {
        let mut errs = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let (d, f) = normalized_disk(h);
            let u = d.sample(h, |x| (x[0] - 1.0) * (3.0 - x[0]) - x[1] * x[1]).unwrap();
            let img = kelvin_transform(&u, &d, &f, 3, h).unwrap();
            let back = inverse_kelvin_transform(&img.v, &d, &f, 3, h).unwrap();
            let err = back
                .interior_nodes()
                .filter(|&k| d.signed_distance(back.grid.point(k)) < -0.1)
                .map(|k| (back.values[k] - u.values[k]).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 10.0 / 4096.0, "{errs:?}");
        assert!(errs[0] / errs[1] > 2.5, "{errs:?}");
    }
}
