//! Closed-form spatial and temporal growth rates of the reflected gain,
//! coherence time and coherence distance.
//!
//! The relative gain change under a shift `dr` of the reflection point is
//! expanded to second order as `xi_s(dr) = w.dr + dr' W dr`, where `w` is the
//! gradient of `ln h` and `W = (hess ln h + w w') / 2`. The temporal change
//! under receiver velocity `v` is `xi_t(dt) = c1 dt + c2 dt^2` with the
//! analogous receiver-side derivatives. Both expansions are validated by
//! finite-difference and grid-search oracles in the test suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{UnitVec3, Vec3};
use crate::linalg::Sym3;

/// Aligned-path geometry L -> R -> U with normals and Lambertian index.
#[derive(Debug, Clone, Copy)]
pub struct CoherenceGeometry {
    pub l: Vec3,
    pub r: Vec3,
    pub u: Vec3,
    pub n1: UnitVec3,
    pub n2: UnitVec3,
    pub m: f64,
}

impl CoherenceGeometry {
    pub fn new(l: Vec3, r: Vec3, u: Vec3, n1: UnitVec3, n2: UnitVec3, m: f64) -> Result<Self> {
        let g = CoherenceGeometry { l, r, u, n1, n2, m };
        let (d1, d2) = (g.d1(), g.d2());
        if d1 <= 0.0 || d2 <= 0.0 {
            return Err(Error::Domain("source/receiver coincide with the mirror point".into()));
        }
        let (ct, cp) = (g.cos_theta(), g.cos_phi());
        if ct <= 0.0 || cp <= 0.0 {
            return Err(Error::Domain(format!(
                "geometry outside the forward half-space (cos theta = {ct}, cos phi = {cp})"
            )));
        }
        Ok(g)
    }

    pub fn d1(&self) -> f64 {
        (self.r - self.l).norm()
    }

    pub fn d2(&self) -> f64 {
        (self.r - self.u).norm()
    }

    fn lr(&self) -> Vec3 {
        (self.r - self.l).scale(1.0 / self.d1())
    }

    fn ur(&self) -> Vec3 {
        (self.r - self.u).scale(1.0 / self.d2())
    }

    pub fn cos_theta(&self) -> f64 {
        self.n1.dot_vec(self.lr())
    }

    pub fn cos_phi(&self) -> f64 {
        self.n2.dot_vec(self.ur())
    }

    /// Unnormalized Lambertian gain of the path L -> r -> u (no FOV gate, no
    /// proportionality constant); the exact quantity whose relative change
    /// the expansions approximate.
    pub fn exact_gain(&self, r: Vec3, u: Vec3) -> Result<f64> {
        let d1 = (r - self.l).norm();
        let d2 = (r - u).norm();
        if d1 <= 0.0 || d2 <= 0.0 {
            return Err(Error::Domain("degenerate shifted geometry".into()));
        }
        let ct = self.n1.dot_vec((r - self.l).scale(1.0 / d1));
        let cp = self.n2.dot_vec((r - u).scale(1.0 / d2));
        if ct <= 0.0 || cp <= 0.0 {
            return Err(Error::Domain("shifted geometry leaves the forward half-space".into()));
        }
        Ok(ct.powf(self.m) * cp / ((d1 + d2) * (d1 + d2)))
    }

    /// Exact relative gain change for a mirror-point shift `dr` and a
    /// receiver shift `du`.
    pub fn exact_ratio(&self, dr: Vec3, du: Vec3) -> Result<f64> {
        let base = self.exact_gain(self.r, self.u)?;
        let shifted = self.exact_gain(self.r + dr, self.u + du)?;
        Ok(shifted / base - 1.0)
    }
}

fn arr(v: Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Second-order spatial expansion xi_s(dr) = w.dr + dr' W dr.
#[derive(Debug, Clone, Copy)]
pub struct GrowthExpansion {
    pub w: Vec3,
    pub w2: Sym3,
}

impl GrowthExpansion {
    pub fn xi(&self, dr: Vec3) -> f64 {
        self.w.dot(dr) + self.w2.quad_form(arr(dr))
    }
}

/// Gradient of `ln h` with respect to the mirror point R.
pub fn log_gain_gradient_r(g: &CoherenceGeometry) -> Vec3 {
    let (d1, d2) = (g.d1(), g.d2());
    let (ct, cp) = (g.cos_theta(), g.cos_phi());
    let s = d1 + d2;
    g.n1.as_vec().scale(g.m / (d1 * ct)) + g.n2.as_vec().scale(1.0 / (d2 * cp))
        - g.lr().scale(g.m / d1 + 2.0 / s)
        - g.ur().scale(1.0 / d2 + 2.0 / s)
}

/// Hessian of `ln h` with respect to the mirror point R.
pub fn log_gain_hessian_r(g: &CoherenceGeometry) -> Sym3 {
    let (d1, d2) = (g.d1(), g.d2());
    let (ct, cp) = (g.cos_theta(), g.cos_phi());
    let s = d1 + d2;
    let lr = arr(g.lr());
    let ur = arr(g.ur());
    let n1 = arr(g.n1.as_vec());
    let n2 = arr(g.n2.as_vec());
    let eye = Sym3::identity();

    // d^2/dR^2 of m ln(N1.(R-L)) - m ln d1.
    let term1 = Sym3::outer(n1)
        .scale(-g.m / (d1 * ct * d1 * ct))
        .add(eye.add(Sym3::outer(lr).scale(-2.0)).scale(-g.m / (d1 * d1)));
    // d^2/dR^2 of ln(N2.(R-U)) - ln d2.
    let term2 = Sym3::outer(n2)
        .scale(-1.0 / (d2 * cp * d2 * cp))
        .add(eye.add(Sym3::outer(ur).scale(-2.0)).scale(-1.0 / (d2 * d2)));
    // d^2/dR^2 of -2 ln(d1 + d2).
    let sum_dir = [lr[0] + ur[0], lr[1] + ur[1], lr[2] + ur[2]];
    let term3 = eye
        .add(Sym3::outer(lr).scale(-1.0))
        .scale(-2.0 / (d1 * s))
        .add(eye.add(Sym3::outer(ur).scale(-1.0)).scale(-2.0 / (d2 * s)))
        .add(Sym3::outer(sum_dir).scale(2.0 / (s * s)));

    term1.add(term2).add(term3)
}

/// Growth-rate coefficients of the relative gain under shifts of R.
pub fn spatial_expansion(g: &CoherenceGeometry) -> GrowthExpansion {
    let w = log_gain_gradient_r(g);
    let hess = log_gain_hessian_r(g);
    let w2 = hess.add(Sym3::outer(arr(w))).scale(0.5);
    GrowthExpansion { w, w2 }
}

/// Gradient of `ln h` with respect to the receiver point U.
pub fn log_gain_gradient_u(g: &CoherenceGeometry) -> Vec3 {
    let (d1, d2) = (g.d1(), g.d2());
    let cp = g.cos_phi();
    let s = d1 + d2;
    -(g.n2.as_vec().scale(1.0 / (d2 * cp)) - g.ur().scale(1.0 / d2 + 2.0 / s))
}

/// Hessian of `ln h` with respect to the receiver point U.
pub fn log_gain_hessian_u(g: &CoherenceGeometry) -> Sym3 {
    let (d1, d2) = (g.d1(), g.d2());
    let cp = g.cos_phi();
    let s = d1 + d2;
    let ur = arr(g.ur());
    let n2 = arr(g.n2.as_vec());
    let eye = Sym3::identity();
    Sym3::outer(n2)
        .scale(-1.0 / (d2 * cp * d2 * cp))
        .add(eye.add(Sym3::outer(ur).scale(-2.0)).scale(-1.0 / (d2 * d2)))
        .add(
            eye.add(Sym3::outer(ur).scale(-1.0))
                .scale(-2.0 / (d2 * s))
                .add(Sym3::outer(ur).scale(2.0 / (s * s))),
        )
}

/// Coefficients (c1, c2) of xi_t(dt) = c1 dt + c2 dt^2 for receiver velocity
/// `v`.
pub fn temporal_expansion(g: &CoherenceGeometry, v: Vec3) -> (f64, f64) {
    let grad = log_gain_gradient_u(g);
    let hess = log_gain_hessian_u(g);
    let c1 = grad.dot(v);
    let c2 = 0.5 * (hess.quad_form(arr(v)) + c1 * c1);
    (c1, c2)
}

/// Which expression produced the coherence interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Quadratic crossing: interval length sqrt(c1^2 + 4 xi_c |c2|) / |c2|.
    Quadratic,
    /// Linear lower bound 2 xi_c / |c1| (quadratic vertex exceeds xi_c).
    LinearBound,
    /// c1 = 0 exactly: pure quadratic interval 2 sqrt(xi_c / |c2|).
    PureQuadratic,
}

/// One-dimensional coherence interval of xi(t) = c1 t + c2 t^2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Interval {
    /// Interval length per the closed-form rule.
    pub length: f64,
    /// Nonzero root of xi, where defined (-c1/c2).
    pub second_root: Option<f64>,
    pub branch: Branch,
    /// Exact first |xi| = xi_c crossings on each side of 0 (+side, -side
    /// magnitude), from the quadratic itself.
    pub plus_side: f64,
    pub minus_side: f64,
}

/// Closed-form coherence interval of the scalar expansion. Returns `None`
/// when c1 = c2 = 0 (the expansion is identically zero: unbounded
/// coherence).
pub fn coherence_interval(c1: f64, c2: f64, xi_c: f64) -> Result<Option<Interval>> {
    if !(0.0..1.0).contains(&xi_c) || xi_c == 0.0 {
        return Err(Error::Domain("coherence threshold must lie in (0, 1)".into()));
    }
    if c1 == 0.0 && c2 == 0.0 {
        return Ok(None);
    }
    let (length, second_root, branch) = if c2 == 0.0 {
        (2.0 * xi_c / c1.abs(), None, Branch::LinearBound)
    } else if c1 == 0.0 {
        let r = (xi_c / c2.abs()).sqrt();
        (2.0 * r, Some(0.0), Branch::PureQuadratic)
    } else {
        let root2 = -c1 / c2;
        // Vertex of the parabola sits at root2 / 2.
        let vertex = c1 * (root2 / 2.0) + c2 * (root2 / 2.0) * (root2 / 2.0);
        if vertex.abs() <= xi_c {
            (
                (c1 * c1 + 4.0 * xi_c * c2.abs()).sqrt() / c2.abs(),
                Some(root2),
                Branch::Quadratic,
            )
        } else {
            (2.0 * xi_c / c1.abs(), Some(root2), Branch::LinearBound)
        }
    };
    let plus_side = first_crossing(c1, c2, xi_c, 1.0);
    let minus_side = first_crossing(c1, c2, xi_c, -1.0);
    Ok(Some(Interval { length, second_root, branch, plus_side, minus_side }))
}

/// Smallest t > 0 with |c1 (s t) + c2 (s t)^2| = xi_c for side sign `s`.
fn first_crossing(c1: f64, c2: f64, xi_c: f64, side: f64) -> f64 {
    let a = c2;
    let b = c1 * side; // xi(side * t) = b t + a t^2 with t > 0.
    let mut best = f64::INFINITY;
    for target in [xi_c, -xi_c] {
        // a t^2 + b t - target = 0.
        if a == 0.0 {
            if b != 0.0 {
                let t = target / b;
                if t > 0.0 {
                    best = best.min(t);
                }
            }
            continue;
        }
        let disc = b * b + 4.0 * a * target;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for t in [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)] {
            if t > 0.0 {
                best = best.min(t);
            }
        }
    }
    best
}

/// Coherence time under receiver velocity `v`.
#[derive(Debug, Clone, Copy)]
pub enum TimeCoherence {
    Bounded { t_c: f64, interval: Interval, c1: f64, c2: f64 },
    /// v = 0 (or both coefficients vanish): the channel never decoheres.
    Unbounded,
}

pub fn coherence_time(g: &CoherenceGeometry, v: Vec3, xi_c: f64) -> Result<TimeCoherence> {
    if v.norm() == 0.0 {
        return Ok(TimeCoherence::Unbounded);
    }
    let (c1, c2) = temporal_expansion(g, v);
    match coherence_interval(c1, c2, xi_c)? {
        None => Ok(TimeCoherence::Unbounded),
        Some(interval) => Ok(TimeCoherence::Bounded { t_c: interval.length, interval, c1, c2 }),
    }
}

/// Per-direction coherence-distance breakdown.
#[derive(Debug, Clone, Copy)]
pub struct DirectionDetail {
    pub direction: Vec3,
    pub c1: f64,
    pub c2: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone)]
pub struct DistanceCoherence {
    /// Minimum closed-form interval length over the probed directions.
    pub d_c: f64,
    pub directions: Vec<DirectionDetail>,
}

/// Coherence distance across the mirror plane: evaluates the expansion along
/// each given in-plane unit direction and takes the minimum interval length.
pub fn coherence_distance_along(
    g: &CoherenceGeometry,
    directions: &[Vec3],
    xi_c: f64,
) -> Result<DistanceCoherence> {
    let exp = spatial_expansion(g);
    let mut details = Vec::with_capacity(directions.len());
    let mut d_c = f64::INFINITY;
    for &dir in directions {
        let u = dir
            .normalize()
            .map_err(|_| Error::Domain("zero direction vector".into()))?
            .as_vec();
        let c1 = exp.w.dot(u);
        let c2 = exp.w2.quad_form(arr(u));
        let interval = coherence_interval(c1, c2, xi_c)?.ok_or_else(|| {
            Error::Degenerate("expansion vanishes along a direction; coherence unbounded".into())
        })?;
        d_c = d_c.min(interval.length);
        details.push(DirectionDetail { direction: u, c1, c2, interval });
    }
    Ok(DistanceCoherence { d_c, directions: details })
}

/// Default in-plane probe directions for a mirror mounted in the XoZ plane.
pub const XOZ_DIRECTIONS: [Vec3; 2] = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)];

pub fn coherence_distance(g: &CoherenceGeometry, xi_c: f64) -> Result<DistanceCoherence> {
    coherence_distance_along(g, &XOZ_DIRECTIONS, xi_c)
}

/// Grid search on the exact relative gain: largest contiguous interval
/// around 0 of shifts `t * step_dir` with |exact ratio| <= xi_c. Returns
/// (plus side, minus side) extents in the parameter t's units.
pub fn grid_search_extent(
    g: &CoherenceGeometry,
    shift: impl Fn(f64) -> (Vec3, Vec3),
    xi_c: f64,
    step: f64,
    max_steps: usize,
) -> (f64, f64) {
    let side = |sign: f64| -> f64 {
        let mut k = 1usize;
        while k <= max_steps {
            let t = sign * step * k as f64;
            let (dr, du) = shift(t);
            match g.exact_ratio(dr, du) {
                Ok(xi) if xi.abs() <= xi_c => k += 1,
                _ => break,
            }
        }
        step * (k - 1) as f64
    };
    (side(1.0), side(-1.0))
}
