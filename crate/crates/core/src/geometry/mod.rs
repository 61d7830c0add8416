//! Domains and moving-plane objects: reflections, inversions, caps,
//! maximal caps, the optimal cap set and interior offsets.

mod caps;
mod domain;
mod exterior;

pub use caps::{
    compute_lambda_star, direction_set, interior_region, optimal_cap_set, optimal_cap_set_for, CapSpec,
    InteriorRegion, OptimalCapSet,
};
pub use domain::{BoundarySample, Domain, PresetTag, Shape};
pub(crate) use domain::MIN_ARM_FRACTION;
pub use exterior::{ball_penetration, validate_exterior_sphere, ExteriorSphereReport};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

/// Inversion through the unit sphere, `x / |x|^2`.
pub fn invert_point<const D: usize>(x: [f64; D]) -> Result<[f64; D]> {
    let r2 = dot(&x, &x);
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::Domain(
            "inversion is undefined at the inversion center".into(),
        ));
    }
    Ok(x.map(|c| c / r2))
}

/// Reflection of `x` through the plane `{z : z . nu = lambda}`.
pub fn reflect_point<const D: usize>(x: [f64; D], nu: [f64; D], lambda: f64) -> Result<[f64; D]> {
    let n = norm(&nu);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "reflection direction must be a unit vector (|nu| = {n})"
        )));
    }
    Ok(reflect_unchecked(x, nu, lambda))
}

#[inline]
pub(crate) fn reflect_unchecked<const D: usize>(x: [f64; D], nu: [f64; D], lambda: f64) -> [f64; D] {
    let t = 2.0 * (lambda - dot(&x, &nu));
    let mut out = x;
    for (o, n) in out.iter_mut().zip(nu) {
        *o += t * n;
    }
    out
}

/// Orientation-preserving similarity `x -> scale * Q (x - center)`.
///
/// Stored as a rotation angle so that `Q` stays exactly orthogonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub center: Point,
    pub angle: f64,
    pub scale: f64,
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity {
        center: [0.0, 0.0],
        angle: 0.0,
        scale: 1.0,
    };

    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn apply(&self, x: Point) -> Point {
        let d = sub(x, self.center);
        let (s, c) = self.angle.sin_cos();
        [
            self.scale * (c * d[0] - s * d[1]),
            self.scale * (s * d[0] + c * d[1]),
        ]
    }

    pub fn apply_inverse(&self, z: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        let w = [z[0] / self.scale, z[1] / self.scale];
        [
            c * w[0] + s * w[1] + self.center[0],
            -s * w[0] + c * w[1] + self.center[1],
        ]
    }

    /// Rotates a direction (no translation, no scaling).
    pub fn rotate(&self, v: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inversion_examples() {
        assert_eq!(invert_point([1.0, 0.0, 0.0]).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(invert_point([2.0, 0.0, 0.0]).unwrap(), [0.5, 0.0, 0.0]);
        assert_eq!(invert_point([0.5, 0.5, 0.0]).unwrap(), [1.0, 1.0, 0.0]);
        assert!(matches!(invert_point([0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect_point([0.0, 0.0], [1.0, 0.0], 1.0).unwrap(), [2.0, 0.0]);
        assert_eq!(reflect_point([1.0, 2.0], [0.0, 1.0], 0.0).unwrap(), [1.0, -2.0]);
        assert!(matches!(
            reflect_point([1.0, 2.0], [0.0, 2.0], 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn similarity_round_trip() {
        let m = Similarity {
            center: [0.3, -1.0],
            angle: 0.7,
            scale: 2.5,
        };
        let x = [1.25, 4.0];
        let back = m.apply_inverse(m.apply(x));
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn reflection_is_an_involution(
            x in prop::array::uniform3(-10.0f64..10.0),
            theta in 0.0f64..std::f64::consts::TAU,
            phi in 0.0f64..std::f64::consts::PI,
            lambda in -10.0f64..10.0,
        ) {
            let nu = [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()];
            let once = reflect_point(x, nu, lambda).unwrap();
            prop_assert!((dot(&once, &nu) - (2.0 * lambda - dot(&x, &nu))).abs() < 1e-12);
            let twice = reflect_point(once, nu, lambda).unwrap();
            for i in 0..3 {
                prop_assert!((twice[i] - x[i]).abs() < 1e-13 * (1.0 + x[i].abs().max(lambda.abs())));
            }
        }

        #[test]
        fn inversion_is_an_involution(x in prop::array::uniform3(-1e3f64..1e3)) {
            prop_assume!(norm(&x) > 1e-6);
            let twice = invert_point(invert_point(x).unwrap()).unwrap();
            let n = norm(&x);
            for i in 0..3 {
                prop_assert!((twice[i] - x[i]).abs() <= 1e-12 * n);
            }
        }
    }
}
