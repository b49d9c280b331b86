//! Rotation-angle codebook construction and beam sweeping.
//!
//! Two constructions are provided: a uniform baseline that samples roll and
//! yaw on fixed grids, and a geometric-optics non-uniform codebook whose
//! roll codewords place reflected footprints on the floor with a constant
//! radial increment (the footprint radii form an arithmetic progression) and
//! whose per-ring yaw sets shrink their spacing with the ring index so arc
//! spacing stays roughly constant.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    angle_in_domain, angles_from_normal, fold_half_open, normal_from_angles, reflect, Basis,
    Plane, Vec3,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    Uniform,
    GoNonUniform,
}

/// Roll codewords with a yaw set per roll ("ring").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Codebook {
    pub kind: CodebookKind,
    /// (roll spacing, yaw spacing) used to build the book, radians.
    pub params: (f64, f64),
    pub rolls: Vec<f64>,
    /// yaw_rings[i] goes with rolls[i].
    pub yaw_rings: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.yaw_rings.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All (roll, yaw) codewords in ring order.
    pub fn codewords(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &w) in self.rolls.iter().enumerate() {
            for &g in &self.yaw_rings[i] {
                out.push((w, g));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.rolls.len() != self.yaw_rings.len() {
            return Err(Error::Dimension {
                expected: self.rolls.len(),
                got: self.yaw_rings.len(),
            });
        }
        for w in self.rolls.windows(2) {
            if w[1] == w[0] {
                return Err(Error::Validation("duplicate roll codeword".into()));
            }
        }
        for &w in &self.rolls {
            if !angle_in_domain(w) {
                return Err(Error::Validation(format!("roll {w} outside domain")));
            }
        }
        for ring in &self.yaw_rings {
            for &g in ring {
                if !angle_in_domain(g) {
                    return Err(Error::Validation(format!("yaw {g} outside domain")));
                }
            }
        }
        Ok(())
    }
}

/// Symmetric sample set {0, +- i * step : i * step < pi/2}, sorted. The
/// half-open codeword domain excludes both boundary values (a boundary roll
/// describes a degenerate edge-on mirror).
fn symmetric_samples(step: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut i = 1usize;
    loop {
        let a = step * i as f64;
        if a >= FRAC_PI_2 - 1e-12 {
            break;
        }
        out.push(a);
        out.push(-a);
        i += 1;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Uniform codebook: fixed roll grid, identical yaw set on every ring.
pub fn uniform_codebook(delta_roll: f64, delta_yaw: f64) -> Result<Codebook> {
    if delta_roll <= 0.0 || delta_roll >= FRAC_PI_2 || delta_yaw <= 0.0 || delta_yaw >= FRAC_PI_2 {
        return Err(Error::Domain("uniform spacings must lie in (0, pi/2)".into()));
    }
    let rolls = symmetric_samples(delta_roll);
    let yaws = symmetric_samples(delta_yaw);
    let yaw_rings = vec![yaws; rolls.len()];
    Ok(Codebook {
        kind: CodebookKind::Uniform,
        params: (delta_roll, delta_yaw),
        rolls,
        yaw_rings,
    })
}

/// Yaw angle at which the mirror normal stays coplanar with the incident
/// direction and the vertical: the normal's horizontal component must align
/// with the incident ray's horizontal component, giving
/// `gamma_c = atan2(e1.lr, e2.lr)` folded into the codeword domain.
pub fn gamma_center(l: Vec3, r: Vec3, basis: &Basis) -> Result<f64> {
    let lr = (r - l)
        .normalize()
        .map_err(|_| Error::Degenerate("LED and element coincide".into()))?;
    let h1 = basis.e1.dot(lr);
    let h2 = basis.e2.dot(lr);
    if h1.abs() < 1e-12 && h2.abs() < 1e-12 {
        return Err(Error::Degenerate(
            "incident ray is vertical; yaw center undefined".into(),
        ));
    }
    Ok(fold_half_open(h1.atan2(h2)))
}

/// Angle of the incident ray from the vertical axis.
pub fn incidence_alpha(l: Vec3, r: Vec3, basis: &Basis) -> Result<f64> {
    let lr = (r - l)
        .normalize()
        .map_err(|_| Error::Degenerate("LED and element coincide".into()))?;
    Ok(basis.e3.dot(lr).clamp(-1.0, 1.0).acos())
}

/// Roll that reflects the incident central ray straight down: the mirror
/// normal is the bisector of the incident direction and the vertical,
/// folded onto the representable hemisphere.
pub fn first_roll(l: Vec3, r: Vec3, gamma_c: f64, basis: &Basis) -> Result<f64> {
    let lr = (r - l)
        .normalize()
        .map_err(|_| Error::Degenerate("LED and element coincide".into()))?;
    let bisector = lr.as_vec() + basis.e3.as_vec();
    let n = bisector
        .normalize()
        .map_err(|_| Error::Degenerate("incident ray already points straight up".into()))?;
    let (w, g) = angles_from_normal(n);
    if fold_half_open(g - gamma_c).abs() > 1e-9 {
        return Err(Error::Numeric(format!(
            "bisector yaw {g} inconsistent with yaw center {gamma_c}"
        )));
    }
    if !angle_in_domain(w) {
        return Err(Error::Domain(format!("first roll {w} outside angle domain")));
    }
    Ok(w)
}

/// Signed deflection of the reflected central ray from straight down, for a
/// coplanar (yaw = gamma_c) roll codeword.
pub fn deflection(roll: f64, alpha: f64) -> f64 {
    alpha + 2.0 * roll - PI
}

/// Next roll codeword: the footprint radii `H tan(deflection)` form an
/// arithmetic progression, so the next deflection satisfies
/// `tan psi_next = 2 tan psi_i - tan psi_{i-1}`. The arctangent branch is
/// resolved toward the linear continuation of the roll sequence.
pub fn next_roll(w_i: f64, w_im1: f64, alpha: f64) -> Result<f64> {
    let a_i = alpha + 2.0 * w_i;
    let a_im1 = alpha + 2.0 * w_im1;
    for a in [a_i, a_im1] {
        if a.cos().abs() < 1e-9 {
            return Err(Error::Domain("tangent singularity in roll recursion".into()));
        }
    }
    let t = 2.0 * a_i.tan() - a_im1.tan();
    let psi = t.atan();
    // Candidate solutions of tan(alpha + 2w) = t, one per pi-branch; keep
    // the one continuing the sequence.
    let target = 2.0 * w_i - w_im1;
    let mut best = f64::NAN;
    let mut best_dist = f64::INFINITY;
    for k in -2i32..=2 {
        let w = (psi + f64::from(k) * PI - alpha) / 2.0;
        let dist = (w - target).abs();
        if dist < best_dist {
            best_dist = dist;
            best = w;
        }
    }
    if !angle_in_domain(best) {
        return Err(Error::Domain(format!("next roll {best} leaves the angle domain")));
    }
    Ok(best)
}

/// Yaw ring i: the center plus `gamma_c +- j * delta_yaw / i` while the
/// samples stay strictly inside the angle domain.
pub fn yaw_ring(i: usize, gamma_c: f64, delta_yaw: f64) -> Result<Vec<f64>> {
    if i == 0 {
        return Err(Error::Domain("ring index starts at 1".into()));
    }
    if delta_yaw <= 0.0 {
        return Err(Error::Domain("yaw spacing must be positive".into()));
    }
    let step = delta_yaw / i as f64;
    let mut out = vec![gamma_c];
    let mut j = 1usize;
    loop {
        let plus = gamma_c + step * j as f64;
        let minus = gamma_c - step * j as f64;
        let p_in = plus < FRAC_PI_2 - 1e-12;
        let m_in = minus > -FRAC_PI_2 + 1e-12;
        if !p_in && !m_in {
            break;
        }
        if p_in {
            out.push(plus);
        }
        if m_in {
            out.push(minus);
        }
        j += 1;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Axis-aligned floor rectangle at z = 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FloorRect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl FloorRect {
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn plane(&self) -> Plane {
        Plane::new(Vec3::ZERO, Vec3::Z.normalize().unwrap())
    }
}

/// Intersection of the reflected central ray (LED center via element
/// center) with the floor plane, or `None` when the reflection does not
/// reach the floor.
pub fn footprint_center(l: Vec3, r: Vec3, roll: f64, yaw: f64, floor: &FloorRect) -> Option<Vec3> {
    let lr = (r - l).normalize().ok()?;
    let n = normal_from_angles(roll, yaw).ok()?;
    let rd = reflect(lr, n);
    floor.plane().intersect_ray(r, rd)
}

/// Exact-alignment (roll, yaw) sending the LED's central ray through the
/// element center onto `target`.
pub fn alignment_angles(l: Vec3, r: Vec3, target: Vec3) -> Result<(f64, f64)> {
    let lr = (r - l)
        .normalize()
        .map_err(|_| Error::Degenerate("LED and element coincide".into()))?;
    let out = (target - r)
        .normalize()
        .map_err(|_| Error::Degenerate("target coincides with the element".into()))?;
    let n = (lr.as_vec() - out.as_vec())
        .normalize()
        .map_err(|_| Error::Degenerate("incident and outgoing rays coincide".into()))?;
    let (w, g) = angles_from_normal(n);
    if !angle_in_domain(w) || !angle_in_domain(g) {
        return Err(Error::Domain("alignment normal outside the angle domain".into()));
    }
    Ok((w, g))
}

/// Non-uniform construction parameters.
#[derive(Debug, Clone, Copy)]
pub struct NonUniformParams {
    pub delta_roll: f64,
    pub delta_yaw: f64,
    /// When set, ring 1 carries a full yaw ring instead of just the center.
    pub ring1_full: bool,
}

/// Geometric-optics non-uniform codebook: rolls chosen so footprint radii
/// march outward with a constant increment, yaw rings densified with the
/// ring index. Construction stops when the central footprint leaves the
/// floor rectangle or the roll recursion leaves the angle domain.
pub fn build_nonuniform(
    l: Vec3,
    r: Vec3,
    params: NonUniformParams,
    floor: &FloorRect,
) -> Result<Codebook> {
    if params.delta_roll <= 0.0 || params.delta_yaw <= 0.0 {
        return Err(Error::Domain("spacings must be positive".into()));
    }
    let basis = Basis::world();
    let gamma_c = gamma_center(l, r, &basis)?;
    let alpha = incidence_alpha(l, r, &basis)?;
    let w1 = first_roll(l, r, gamma_c, &basis)?;
    let inside = |w: f64| -> bool {
        footprint_center(l, r, w, gamma_c, floor).is_some_and(|fp| floor.contains(fp))
    };
    if !inside(w1) {
        return Err(Error::Degenerate(
            "vertical-reflection footprint falls outside the floor".into(),
        ));
    }
    // Second roll: step in whichever direction keeps the footprint on the
    // floor, preferring the positive step when both do.
    let w2 = [w1 + params.delta_roll, w1 - params.delta_roll]
        .into_iter()
        .filter(|w| angle_in_domain(*w))
        .find(|w| inside(*w))
        .ok_or_else(|| {
            Error::Degenerate("both second-roll candidates leave the floor".into())
        })?;

    let mut rolls = vec![w1, w2];
    loop {
        if rolls.len() > 4096 {
            return Err(Error::Numeric("roll recursion failed to terminate".into()));
        }
        let n = rolls.len();
        let next = match next_roll(rolls[n - 1], rolls[n - 2], alpha) {
            Ok(w) => w,
            Err(_) => break,
        };
        if deflection(next, alpha).abs() >= FRAC_PI_2 || !inside(next) {
            break;
        }
        rolls.push(next);
    }

    let mut yaw_rings = Vec::with_capacity(rolls.len());
    for i in 1..=rolls.len() {
        if i == 1 && !params.ring1_full {
            yaw_rings.push(vec![gamma_c]);
        } else {
            yaw_rings.push(yaw_ring(i, gamma_c, params.delta_yaw)?);
        }
    }
    Ok(Codebook {
        kind: CodebookKind::GoNonUniform,
        params: (params.delta_roll, params.delta_yaw),
        rolls,
        yaw_rings,
    })
}

/// Codeword list with floor footprints and a bucket index for radius and
/// nearest-neighbor queries.
#[derive(Debug, Clone)]
pub struct FootprintIndex {
    /// (roll, yaw, footprint).
    pub entries: Vec<(f64, f64, Vec3)>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
}

impl FootprintIndex {
    pub fn build(codebook: &Codebook, l: Vec3, r: Vec3, floor: &FloorRect) -> FootprintIndex {
        let mut entries = Vec::new();
        for (w, g) in codebook.codewords() {
            if let Some(fp) = footprint_center(l, r, w, g, floor) {
                if floor.contains(fp) {
                    entries.push((w, g, fp));
                }
            }
        }
        let cell = 0.25;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (idx, (_, _, fp)) in entries.iter().enumerate() {
            buckets
                .entry(((fp.x / cell).floor() as i64, (fp.y / cell).floor() as i64))
                .or_default()
                .push(idx);
        }
        FootprintIndex { entries, buckets, cell }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of codewords with a footprint within `radius` of `p`.
    pub fn within_radius(&self, p: Vec3, radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64 + 1;
        let (cx, cy) = (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
        );
        let mut out = Vec::new();
        for bx in cx - reach..=cx + reach {
            for by in cy - reach..=cy + reach {
                if let Some(list) = self.buckets.get(&(bx, by)) {
                    for &idx in list {
                        let fp = self.entries[idx].2;
                        let dx = fp.x - p.x;
                        let dy = fp.y - p.y;
                        if (dx * dx + dy * dy).sqrt() <= radius {
                            out.push(idx);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Sweep subset of a roll-by-yaw product codebook: every codeword whose
    /// roll ring passes within `radius` of `p`. A product codebook indexes
    /// radial distance through the roll alone (the yaw-to-position mapping
    /// varies with the roll), so the position estimate prunes only the roll
    /// axis and full yaw rows are swept.
    pub fn roll_pruned(&self, p: Vec3, radius: f64) -> Vec<usize> {
        let near = self.within_radius(p, radius);
        let mut rolls: Vec<f64> = near.iter().map(|&i| self.entries[i].0).collect();
        rolls.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rolls.dedup();
        let mut out = Vec::new();
        for (idx, entry) in self.entries.iter().enumerate() {
            // Rolls repeat exactly across yaw rows of a product codebook, so
            // a binary search with exact comparison finds ring membership.
            if rolls
                .binary_search_by(|r| r.partial_cmp(&entry.0).unwrap())
                .is_ok()
            {
                out.push(idx);
            }
        }
        out
    }

    /// Indices of the k codewords with footprints nearest to `p`.
    pub fn nearest(&self, p: Vec3, k: usize) -> Vec<usize> {
        let mut radius = self.cell;
        loop {
            let mut found = self.within_radius(p, radius);
            if found.len() >= k.min(self.entries.len()) || radius > 64.0 {
                found.sort_by(|&a, &b| {
                    let da = (self.entries[a].2 - p).norm();
                    let db = (self.entries[b].2 - p).norm();
                    da.partial_cmp(&db).unwrap()
                });
                found.truncate(k);
                return found;
            }
            radius *= 2.0;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepResult {
    pub roll: f64,
    pub yaw: f64,
    pub swept_count: usize,
    pub achieved_gain: f64,
    /// Set when the radius-r subset was empty and the nearest footprint was
    /// used instead.
    pub fallback: bool,
}

/// Evaluates `gain` over the codewords whose footprint lies within `radius`
/// of the receiver-position estimate and returns the best one.
pub fn beam_sweep(
    index: &FootprintIndex,
    pd_estimate: Vec3,
    radius: f64,
    gain: impl Fn(f64, f64) -> Result<f64>,
) -> Result<SweepResult> {
    if radius <= 0.0 {
        return Err(Error::Domain("sweep radius must be positive".into()));
    }
    if index.is_empty() {
        return Err(Error::Degenerate("codebook has no floor footprints".into()));
    }
    let mut subset = index.within_radius(pd_estimate, radius);
    let mut fallback = false;
    if subset.is_empty() {
        subset = index.nearest(pd_estimate, 1);
        fallback = true;
    }
    let swept_count = subset.len();
    let mut best: Option<(f64, f64, f64)> = None;
    for idx in subset {
        let (w, g, _) = index.entries[idx];
        let value = gain(w, g)?;
        if best.is_none_or(|(_, _, bv)| value > bv) {
            best = Some((w, g, value));
        }
    }
    let (roll, yaw, achieved_gain) = best.unwrap();
    Ok(SweepResult { roll, yaw, swept_count, achieved_gain, fallback })
}

#[derive(Debug, Clone, Copy)]
pub struct ErrorNormReport {
    /// Frobenius norm of the per-grid-point error matrix.
    pub frobenius: f64,
    pub mean_abs_error: f64,
    pub mean_true_gain: f64,
    pub n_points: usize,
}

/// Sweeps a receiver-position grid; at each point compares the best
/// achievable codeword gain (searched among the `k_nearest` footprints)
/// against the continuum-optimal gain.
pub fn codebook_error_norm<Gain, Opt>(
    index: &FootprintIndex,
    grid: &[Vec3],
    gain: &Gain,
    optimal: &Opt,
    k_nearest: usize,
) -> Result<ErrorNormReport>
where
    Gain: Fn(Vec3, f64, f64) -> Result<f64> + Sync,
    Opt: Fn(Vec3) -> Result<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Domain("empty evaluation grid".into()));
    }
    let per_point: Result<Vec<(f64, f64)>> = grid
        .par_iter()
        .map(|&p| {
            let candidates = index.nearest(p, k_nearest);
            let mut best = 0.0f64;
            for idx in candidates {
                let (w, g, _) = index.entries[idx];
                best = best.max(gain(p, w, g)?);
            }
            let opt = optimal(p)?;
            Ok(((best - opt).abs(), opt))
        })
        .collect();
    let per_point = per_point?;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut truth = 0.0;
    for (e, t) in &per_point {
        sq += e * e;
        abs += e;
        truth += t;
    }
    let n = per_point.len();
    Ok(ErrorNormReport {
        frobenius: sq.sqrt(),
        mean_abs_error: abs / n as f64,
        mean_true_gain: truth / n as f64,
        n_points: n,
    })
}
