//! 3-D Cartesian primitives, rotation-angle-to-normal mapping, specular
//! reflection, and ray/plane utilities.
//!
//! The mirror normal is parameterized by a roll angle `omega` and a yaw angle
//! `gamma`, both in `[-pi/2, pi/2)`:
//!
//! ```text
//! N(omega, gamma) = (cos w sin g, cos w cos g, -sin w)
//! ```
//!
//! Directed segments use the convention `lr = normalize(R - L)` (the
//! propagation direction from the source toward the mirror), which keeps both
//! incidence cosines nonnegative in valid geometries.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalize(self) -> Result<UnitVec3> {
        UnitVec3::try_from_vec(self)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// A vector guaranteed unit-length to within [`UNIT_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub fn try_from_vec(v: Vec3) -> Result<UnitVec3> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        Ok(UnitVec3(v.scale(1.0 / n)))
    }

    /// Wraps a vector already known to be unit-length.
    pub fn new_checked(v: Vec3) -> Result<UnitVec3> {
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "vector norm {} is not 1 within tolerance",
                v.norm()
            )));
        }
        Ok(UnitVec3(v.scale(1.0 / v.norm())))
    }

    pub fn as_vec(self) -> Vec3 {
        self.0
    }

    pub fn dot(self, other: UnitVec3) -> f64 {
        self.0.dot(other.0)
    }

    pub fn dot_vec(self, other: Vec3) -> f64 {
        self.0.dot(other)
    }

    pub fn x(self) -> f64 {
        self.0.x
    }
    pub fn y(self) -> f64 {
        self.0.y
    }
    pub fn z(self) -> f64 {
        self.0.z
    }
}

impl Neg for UnitVec3 {
    type Output = UnitVec3;
    fn neg(self) -> UnitVec3 {
        UnitVec3(-self.0)
    }
}

/// Infinite plane: a point on it and its unit normal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3,
    pub normal: UnitVec3,
}

impl Plane {
    pub fn new(point: Vec3, normal: UnitVec3) -> Plane {
        Plane { point, normal }
    }

    /// Intersects the ray `origin + t * dir` (t > 0) with the plane.
    /// Returns the hit point, or `None` if the ray is parallel to the plane
    /// or points away from it.
    pub fn intersect_ray(&self, origin: Vec3, dir: UnitVec3) -> Option<Vec3> {
        let denom = self.normal.dot_vec(dir.as_vec());
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot_vec(self.point - origin) / denom;
        if t <= 1e-12 {
            return None;
        }
        Some(origin + dir.as_vec() * t)
    }
}

/// Right-handed orthonormal triple. The codebook equations use the global
/// world axes.
#[derive(Debug, Clone, Copy)]
pub struct Basis {
    pub e1: UnitVec3,
    pub e2: UnitVec3,
    pub e3: UnitVec3,
}

impl Basis {
    /// World X/Y/Z axes.
    pub fn world() -> Basis {
        Basis {
            e1: UnitVec3(Vec3::X),
            e2: UnitVec3(Vec3::Y),
            e3: UnitVec3(Vec3::Z),
        }
    }
}

/// Half-open codeword angle domain.
pub fn angle_in_domain(a: f64) -> bool {
    (-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2).contains(&a)
}

/// Mirror-element normal for roll `omega` and yaw `gamma`.
///
/// Returns `(cos w sin g, cos w cos g, -sin w)`.
pub fn normal_from_angles(omega: f64, gamma: f64) -> Result<UnitVec3> {
    if !angle_in_domain(omega) || !angle_in_domain(gamma) {
        return Err(Error::Domain(format!(
            "rotation angles (omega={omega}, gamma={gamma}) outside [-pi/2, pi/2)"
        )));
    }
    Ok(UnitVec3(Vec3::new(
        omega.cos() * gamma.sin(),
        omega.cos() * gamma.cos(),
        -omega.sin(),
    )))
}

/// Extracts `(omega, gamma)` such that `normal_from_angles(omega, gamma)`
/// equals the given direction up to sign. The representable hemisphere has a
/// nonnegative y component; an antipodal input describes the same mirror and
/// is folded.
pub fn angles_from_normal(n: UnitVec3) -> (f64, f64) {
    let v = if n.y() >= 0.0 { n.as_vec() } else { -n.as_vec() };
    let omega = -v.z.clamp(-1.0, 1.0).asin();
    let gamma = v.x.atan2(v.y);
    (omega, fold_half_open(gamma))
}

/// Folds an angle into `[-pi/2, pi/2)` modulo pi.
pub fn fold_half_open(a: f64) -> f64 {
    let mut a = a % std::f64::consts::PI;
    if a >= std::f64::consts::FRAC_PI_2 {
        a -= std::f64::consts::PI;
    } else if a < -std::f64::consts::FRAC_PI_2 {
        a += std::f64::consts::PI;
    }
    a
}

/// Specular reflection of the propagation direction `d` at a mirror with
/// normal `n`: `d - 2 (n.d) n`.
pub fn reflect(d: UnitVec3, n: UnitVec3) -> UnitVec3 {
    let nd = n.dot(d);
    UnitVec3(d.as_vec() - n.as_vec() * (2.0 * nd))
}

/// Image point of `P` in the transmission plane: reflects the ray `P -> R` at
/// the mirror point `R` and intersects the transmission plane. `None` when
/// the reflected ray misses the plane (the source-indicator then vanishes).
pub fn source_image_point(
    r: Vec3,
    mirror_normal: UnitVec3,
    p: Vec3,
    transmission_plane: &Plane,
) -> Option<Vec3> {
    let d = (r - p).normalize().ok()?;
    let rd = reflect(d, mirror_normal);
    transmission_plane.intersect_ray(r, rd)
}

/// Cosines of the irradiance angle at the source and the incidence angle at
/// the receiver: `cos theta = N1 . normalize(R-L)`, `cos phi = N2 . normalize(R-U)`.
pub fn incidence_cosines(
    l: Vec3,
    r: Vec3,
    u: Vec3,
    n1: UnitVec3,
    n2: UnitVec3,
) -> Result<(f64, f64)> {
    let lr = (r - l)
        .normalize()
        .map_err(|_| Error::Domain("L and R coincide".into()))?;
    let ur = (r - u)
        .normalize()
        .map_err(|_| Error::Domain("U and R coincide".into()))?;
    let ct = n1.dot(lr).clamp(-1.0, 1.0);
    let cp = n2.dot(ur).clamp(-1.0, 1.0);
    Ok((ct, cp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn vec_approx(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn normal_from_angles_reference_values() {
        let n = normal_from_angles(0.0, 0.0).unwrap();
        assert!(vec_approx(n.as_vec(), Vec3::new(0.0, 1.0, 0.0), 1e-15));

        let n = normal_from_angles(-FRAC_PI_2, 0.0).unwrap();
        assert!(vec_approx(n.as_vec(), Vec3::new(0.0, 0.0, 1.0), 1e-15));

        let n = normal_from_angles(FRAC_PI_4, FRAC_PI_4).unwrap();
        assert!(vec_approx(
            n.as_vec(),
            Vec3::new(0.5, 0.5, -std::f64::consts::FRAC_1_SQRT_2),
            1e-12
        ));
    }

    #[test]
    fn normal_from_angles_rejects_out_of_range() {
        assert!(normal_from_angles(FRAC_PI_2, 0.0).is_err());
        assert!(normal_from_angles(0.0, 2.0).is_err());
    }

    #[test]
    fn reflect_reference_values() {
        let d = Vec3::new(0.0, 0.0, -1.0).normalize().unwrap();
        let n = Vec3::new(0.0, 0.0, 1.0).normalize().unwrap();
        assert!(vec_approx(reflect(d, n).as_vec(), Vec3::new(0.0, 0.0, 1.0), 1e-15));

        let d = Vec3::new(1.0, 0.0, -1.0).normalize().unwrap();
        let r = reflect(d, n);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(vec_approx(r.as_vec(), Vec3::new(s, 0.0, s), 1e-15));
    }

    #[test]
    fn source_image_point_recovers_led_center_in_paper_geometry() {
        // Specular path L-R-U with mirror perpendicular to the wall.
        let l = Vec3::new(2.0, 2.0, 3.0);
        let r = Vec3::new(2.0, 0.0, 1.5);
        let u = Vec3::new(2.0, 2.0, 0.0);
        let n = Vec3::Y.normalize().unwrap();
        let ceiling = Plane::new(l, Vec3::new(0.0, 0.0, -1.0).normalize().unwrap());
        let i = source_image_point(r, n, u, &ceiling).unwrap();
        assert!(vec_approx(i, l, 1e-12));

        // Reflection-law residual: incident I->R reflected equals R->P.
        let inc = (r - i).normalize().unwrap();
        let out = reflect(inc, n);
        let expect = (u - r).normalize().unwrap();
        assert!(vec_approx(out.as_vec(), expect.as_vec(), 1e-9));
    }

    #[test]
    fn source_image_point_parallel_ray_is_none() {
        // Mirror oriented so the reflected ray runs parallel to the ceiling.
        let r = Vec3::new(2.0, 0.0, 1.5);
        let p = Vec3::new(2.0, 2.0, 1.5);
        let n = Vec3::Y.normalize().unwrap();
        let ceiling = Plane::new(Vec3::new(0.0, 0.0, 3.0), Vec3::Z.normalize().unwrap());
        assert!(source_image_point(r, n, p, &ceiling).is_none());
    }

    #[test]
    fn incidence_cosines_aligned_axes() {
        let n1 = Vec3::new(0.0, 0.0, -1.0).normalize().unwrap();
        let n2 = Vec3::Z.normalize().unwrap();
        // R directly below L.
        let (ct, _) = incidence_cosines(
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
            n1,
            n2,
        )
        .unwrap();
        assert!(approx(ct, 1.0, 1e-15));
        // R directly above U.
        let (_, cp) = incidence_cosines(
            Vec3::new(1.0, 0.0, 3.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, 0.0),
            n1,
            n2,
        )
        .unwrap();
        assert!(approx(cp, 1.0, 1e-15));
    }

    #[test]
    fn incidence_cosines_match_explicit_arccos_in_paper_geometry() {
        let l = Vec3::new(2.0, 2.0, 3.0);
        let r = Vec3::new(2.0, 0.0, 1.5);
        let u = Vec3::new(2.0, 2.0, 0.0);
        let n1 = Vec3::new(0.0, 0.0, -1.0).normalize().unwrap();
        let n2 = Vec3::Z.normalize().unwrap();
        let (ct, cp) = incidence_cosines(l, r, u, n1, n2).unwrap();
        // Independent trigonometric evaluation: both paths have a 2 m
        // horizontal and 1.5 m vertical leg.
        let expected = 1.5 / (2.0f64.powi(2) + 1.5f64.powi(2)).sqrt();
        assert!(approx(ct, expected, 1e-12));
        assert!(approx(cp, expected, 1e-12));
        assert!(approx(ct.acos(), expected.acos(), 1e-12));
    }

    #[test]
    fn incidence_cosines_reject_coincident_points() {
        let p = Vec3::new(1.0, 1.0, 1.0);
        let n = Vec3::Z.normalize().unwrap();
        assert!(incidence_cosines(p, p, Vec3::ZERO, n, n).is_err());
    }

    #[test]
    fn incidence_cosines_scale_invariant_about_r() {
        let l = Vec3::new(2.0, 2.0, 3.0);
        let r = Vec3::new(2.0, 0.0, 1.5);
        let u = Vec3::new(2.5, 2.0, 0.0);
        let n1 = Vec3::new(0.0, 0.0, -1.0).normalize().unwrap();
        let n2 = Vec3::Z.normalize().unwrap();
        let (ct, cp) = incidence_cosines(l, r, u, n1, n2).unwrap();
        let scale = 3.7;
        let ls = r + (l - r) * scale;
        let us = r + (u - r) * scale;
        let (ct2, cp2) = incidence_cosines(ls, r, us, n1, n2).unwrap();
        assert!(approx(ct, ct2, 1e-12));
        assert!(approx(cp, cp2, 1e-12));
    }

    fn arb_angle() -> impl Strategy<Value = f64> {
        // Stay clear of the boundary so domain checks do not trip.
        let lim = std::f64::consts::FRAC_PI_2 - 1e-4;
        -lim..lim
    }

    fn arb_unit() -> impl Strategy<Value = UnitVec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter_map("nonzero", |(x, y, z)| {
                Vec3::new(x, y, z).normalize().ok()
            })
    }

    proptest! {
        #[test]
        fn normal_from_angles_is_unit(w in arb_angle(), g in arb_angle()) {
            let n = normal_from_angles(w, g).unwrap();
            prop_assert!((n.as_vec().norm() - 1.0).abs() < UNIT_TOL);
        }

        #[test]
        fn reflect_is_involution(d in arb_unit(), n in arb_unit()) {
            let r = reflect(reflect(d, n), n);
            prop_assert!((r.as_vec() - d.as_vec()).norm() < 1e-12);
        }

        #[test]
        fn reflect_preserves_norm(d in arb_unit(), n in arb_unit()) {
            prop_assert!((reflect(d, n).as_vec().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn angles_roundtrip_through_normal(w in arb_angle(), g in arb_angle()) {
            let n = normal_from_angles(w, g).unwrap();
            let (w2, g2) = angles_from_normal(n);
            let n2 = normal_from_angles(w2, g2).unwrap();
            prop_assert!((n.as_vec() - n2.as_vec()).norm() < 1e-9);
        }
    }

    #[test]
    fn source_image_point_reflection_residual_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let ceiling = Plane::new(
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(0.0, 0.0, -1.0).normalize().unwrap(),
        );
        let mut hits = 0;
        for _ in 0..200 {
            let r = Vec3::new(rng.gen_range(0.5..3.5), 0.0, rng.gen_range(0.5..2.5));
            let p = Vec3::new(rng.gen_range(0.5..3.5), rng.gen_range(0.5..3.5), 0.0);
            let w = rng.gen_range(-0.6..0.6);
            let g = rng.gen_range(-0.6..0.6);
            let n = normal_from_angles(w, g).unwrap();
            if let Some(i) = source_image_point(r, n, p, &ceiling) {
                hits += 1;
                let inc = (r - i).normalize().unwrap();
                let out = reflect(inc, n).as_vec();
                let expect = (p - r).normalize().unwrap().as_vec();
                assert!((out - expect).norm() < 1e-9, "reflection law violated");
            }
        }
        assert!(hits > 20, "expected some geometries to intersect the plane");
    }
}
