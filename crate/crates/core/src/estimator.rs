//! Joint space-time sampling estimation pipeline: coherence-driven subarray
//! partition, sequential reflection patterns, ridge-regularized MMSE
//! per-block estimation, cluster collection, and separable interpolation to
//! the full cascaded channel, with NMSE and overhead bookkeeping.

use serde::{Deserialize, Serialize};

use crate::channel::{simulate_received, AlignmentConfig, CascadedChannel};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Coherence-driven subarray partition: the element grid is tiled by s x s
/// subarrays (s = ceil(d_c / b)), edge subarrays truncated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SubarrayPlan {
    pub n_v: usize,
    pub n_h: usize,
    /// Sampling spacing in elements.
    pub s: usize,
    pub q_v: usize,
    pub q_h: usize,
    /// Set when s exceeded the grid and was clamped to a single subarray.
    pub degenerate: bool,
}

impl SubarrayPlan {
    pub fn q(&self) -> usize {
        self.q_v * self.q_h
    }

    /// 1-based flat element index n = (i - 1) * N_h + j.
    pub fn flat(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n_h + j
    }

    /// Subarray (1-based) containing element row/col (1-based).
    pub fn subarray_of(&self, i: usize, j: usize) -> (usize, usize) {
        ((i - 1) / self.s + 1, (j - 1) / self.s + 1)
    }

    /// Element row/col (1-based) at local offsets within a subarray, or
    /// `None` when the edge-truncated subarray does not reach it.
    pub fn element_at(
        &self,
        q_v: usize,
        q_h: usize,
        local_r: usize,
        local_c: usize,
    ) -> Option<(usize, usize)> {
        let i = (q_v - 1) * self.s + local_r;
        let j = (q_h - 1) * self.s + local_c;
        (i <= self.n_v && j <= self.n_h).then_some((i, j))
    }
}

/// Spacing from the coherence distance: s = ceil(d_c / b).
pub fn sampling_spacing(d_c: f64, b: f64) -> Result<usize> {
    if d_c <= 0.0 || b <= 0.0 {
        return Err(Error::Domain("coherence distance and spacing must be positive".into()));
    }
    Ok((d_c / b).ceil() as usize)
}

pub fn partition_subarrays(n_v: usize, n_h: usize, d_c: f64, b: f64) -> Result<SubarrayPlan> {
    partition_with_spacing(n_v, n_h, sampling_spacing(d_c, b)?)
}

pub fn partition_with_spacing(n_v: usize, n_h: usize, s: usize) -> Result<SubarrayPlan> {
    if n_v == 0 || n_h == 0 || s == 0 {
        return Err(Error::Domain("grid dimensions and spacing must be positive".into()));
    }
    let degenerate = s > n_v.min(n_h);
    let s_eff = s.min(n_v.min(n_h));
    Ok(SubarrayPlan {
        n_v,
        n_h,
        s: s_eff,
        q_v: n_v.div_ceil(s_eff),
        q_h: n_h.div_ceil(s_eff),
        degenerate,
    })
}

/// Sequential reflection pattern: which LED/PD pair each element serves, and
/// which subarray (block) it belongs to.
#[derive(Debug, Clone)]
pub struct ReflectionSchedule {
    pub plan: SubarrayPlan,
    pub n_t: usize,
    pub n_r: usize,
    /// Per flat element (0-based): Some((n_t, n_r)) 0-based pair served.
    pub assignments: Vec<Option<(usize, usize)>>,
    /// Base alignment matrices over the whole array.
    pub align: AlignmentConfig,
}

/// Pair served by a subarray-local offset. When the subarray hosts the full
/// pattern (s >= count), local offsets map directly; when s is smaller, one
/// designated element per subarray serves a pair cycling with the subarray
/// index, so every pair is still sampled on a regular (coarser) grid.
fn local_pair(local: usize, q: usize, s: usize, count: usize) -> Option<usize> {
    if s >= count {
        (local <= count).then(|| local - 1)
    } else {
        (local == 1).then(|| (q - 1) % count)
    }
}

pub fn build_schedule(plan: SubarrayPlan, n_t: usize, n_r: usize) -> Result<ReflectionSchedule> {
    if n_t == 0 || n_r == 0 {
        return Err(Error::Domain("LED/PD counts must be positive".into()));
    }
    let n = plan.n_v * plan.n_h;
    let mut assignments: Vec<Option<(usize, usize)>> = vec![None; n];
    for i in 1..=plan.n_v {
        for j in 1..=plan.n_h {
            let (q_v, q_h) = plan.subarray_of(i, j);
            let local_r = i - (q_v - 1) * plan.s;
            let local_c = j - (q_h - 1) * plan.s;
            let pr = local_pair(local_r, q_v, plan.s, n_r);
            let pt = local_pair(local_c, q_h, plan.s, n_t);
            if let (Some(r), Some(t)) = (pr, pt) {
                assignments[plan.flat(i, j) - 1] = Some((t, r));
            }
        }
    }
    let align = AlignmentConfig::from_assignments(n, n_t, n_r, &assignments)?;
    Ok(ReflectionSchedule { plan, n_t, n_r, assignments, align })
}

impl ReflectionSchedule {
    /// Flat 0-based element indices of subarray block q (1-based pair
    /// (q_v, q_h) flattened as (q_v - 1) * Q_h + q_h).
    pub fn block_elements(&self, q: usize) -> Vec<usize> {
        let q_v = (q - 1) / self.plan.q_h + 1;
        let q_h = (q - 1) % self.plan.q_h + 1;
        let mut out = Vec::new();
        for lr in 1..=self.plan.s {
            for lc in 1..=self.plan.s {
                if let Some((i, j)) = self.plan.element_at(q_v, q_h, lr, lc) {
                    out.push(self.plan.flat(i, j) - 1);
                }
            }
        }
        out
    }

    /// Effective per-block MIMO channel: only the block's elements reflect.
    pub fn block_channel(&self, channel: &CascadedChannel, q: usize) -> Result<Mat> {
        let mut h = Mat::zeros(self.n_r, self.n_t);
        for idx in self.block_elements(q) {
            if let Some((t, r)) = self.assignments[idx] {
                h[(r, t)] += channel.entry(idx, t, r);
            }
        }
        Ok(h)
    }
}

/// Nonnegative pilot block: the identity pattern repeated across slots,
/// scaled by a per-slot amplitude.
pub fn build_pilot(n_t: usize, p: usize, amplitude: f64) -> Result<Mat> {
    if p < n_t {
        return Err(Error::Validation(format!(
            "pilot length {p} shorter than the transmitter count {n_t}"
        )));
    }
    if amplitude <= 0.0 {
        return Err(Error::Validation("pilot amplitude must be positive".into()));
    }
    Ok(Mat::from_fn(n_t, p, |i, j| {
        if j % n_t == i {
            amplitude
        } else {
            0.0
        }
    }))
}

/// Ridge-regularized MMSE block estimate: H = Y X^T (X X^T + sigma^2 I)^-1.
pub fn mmse_estimate(y: &Mat, x: &Mat, sigma: f64) -> Result<Mat> {
    if y.cols() != x.cols() {
        return Err(Error::Dimension { expected: x.cols(), got: y.cols() });
    }
    let gram = x.matmul(&x.transpose())?;
    let reg = gram.add(&Mat::identity(x.rows()).scale(sigma * sigma))?;
    // Solve (X X^T + s^2 I) Z = X Y^T, then H = Z^T.
    let rhs = x.matmul(&y.transpose())?;
    let z = reg.solve_spd(&rhs)?;
    Ok(z.transpose())
}

/// Regular sample grid of one LED/PD pair: sampled element rows/cols
/// (1-based, sorted) and the estimated values at their Cartesian product.
#[derive(Debug, Clone)]
pub struct ClusterGrid {
    pub pair: (usize, usize),
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Mat,
}

/// Collects per-block estimates into per-pair sample grids. Block q's
/// estimate entry (r, t) samples the element of subarray q assigned to that
/// pair; the sampled element indices form a Cartesian product of row and
/// column progressions.
pub fn collect_clusters(
    estimates: &[Mat],
    schedule: &ReflectionSchedule,
) -> Result<Vec<ClusterGrid>> {
    let plan = &schedule.plan;
    if estimates.len() != plan.q() {
        return Err(Error::Dimension { expected: plan.q(), got: estimates.len() });
    }
    let mut grids = Vec::new();
    for t in 0..schedule.n_t {
        for r in 0..schedule.n_r {
            // Sampled rows: element rows hosting pair-r in their subarray.
            let mut rows = Vec::new();
            let mut row_qv = Vec::new();
            for q_v in 1..=plan.q_v {
                for lr in 1..=plan.s {
                    if local_pair(lr, q_v, plan.s, schedule.n_r) == Some(r) {
                        let i = (q_v - 1) * plan.s + lr;
                        if i <= plan.n_v {
                            rows.push(i);
                            row_qv.push(q_v);
                        }
                    }
                }
            }
            let mut cols = Vec::new();
            let mut col_qh = Vec::new();
            for q_h in 1..=plan.q_h {
                for lc in 1..=plan.s {
                    if local_pair(lc, q_h, plan.s, schedule.n_t) == Some(t) {
                        let j = (q_h - 1) * plan.s + lc;
                        if j <= plan.n_h {
                            cols.push(j);
                            col_qh.push(q_h);
                        }
                    }
                }
            }
            if rows.is_empty() || cols.is_empty() {
                return Err(Error::Degenerate(format!(
                    "pair ({t}, {r}) is never sampled by the schedule"
                )));
            }
            let mut values = Mat::zeros(rows.len(), cols.len());
            for (ri, &q_v) in row_qv.iter().enumerate() {
                for (ci, &q_h) in col_qh.iter().enumerate() {
                    let q = (q_v - 1) * plan.q_h + q_h;
                    values[(ri, ci)] = estimates[q - 1][(r, t)];
                }
            }
            grids.push(ClusterGrid { pair: (t, r), rows, cols, values });
        }
    }
    Ok(grids)
}

/// Replaces sample values at receiver-blind elements with linear
/// inter/extrapolation from the visible samples of the same pair.
///
/// The field-of-view gate is a deterministic function of the geometry, so the
/// receiver knows a priori which elements it cannot see; measurements taken
/// there are zero plus noise and carry no information about the smooth gain
/// surface the interpolator reconstructs. Inpainting them keeps the stencil
/// of visible neighbors anchored to the surface instead of bleeding zeros
/// into it. Runs a vertical pass per sample column, then a horizontal pass
/// for any column left without visible samples.
pub fn inpaint_blind_samples(grid: &mut ClusterGrid, visible: &dyn Fn(usize, usize) -> bool) {
    let (nr, nc) = (grid.rows.len(), grid.cols.len());
    let mut mask = vec![false; nr * nc];
    for ri in 0..nr {
        for ci in 0..nc {
            mask[ri * nc + ci] = visible(grid.rows[ri], grid.cols[ci]);
        }
    }
    for ci in 0..nc {
        let vis: Vec<usize> = (0..nr).filter(|&ri| mask[ri * nc + ci]).collect();
        if vis.is_empty() {
            continue;
        }
        let xs: Vec<usize> = vis.iter().map(|&ri| grid.rows[ri]).collect();
        for ri in 0..nr {
            if mask[ri * nc + ci] {
                continue;
            }
            let (k0, k1, t) = interp1(&xs, grid.rows[ri] as f64);
            let v0 = grid.values[(vis[k0], ci)];
            let v1 = grid.values[(vis[k1], ci)];
            grid.values[(ri, ci)] = (1.0 - t) * v0 + t * v1;
            mask[ri * nc + ci] = true;
        }
    }
    for ri in 0..nr {
        let vis: Vec<usize> = (0..nc).filter(|&ci| mask[ri * nc + ci]).collect();
        if vis.is_empty() || vis.len() == nc {
            continue;
        }
        let xs: Vec<usize> = vis.iter().map(|&ci| grid.cols[ci]).collect();
        for ci in 0..nc {
            if mask[ri * nc + ci] {
                continue;
            }
            let (k0, k1, t) = interp1(&xs, grid.cols[ci] as f64);
            let v0 = grid.values[(ri, vis[k0])];
            let v1 = grid.values[(ri, vis[k1])];
            grid.values[(ri, ci)] = (1.0 - t) * v0 + t * v1;
        }
    }
}

/// 1-D piecewise-linear interpolation with linear extrapolation outside the
/// sample range. `xs` is strictly increasing.
fn interp1(xs: &[usize], x: f64) -> (usize, usize, f64) {
    let n = xs.len();
    if n == 1 {
        return (0, 0, 0.0);
    }
    // Locate the segment; clamp to the end segments for extrapolation.
    let mut k = 0usize;
    while k + 2 < n && x > xs[k + 1] as f64 {
        k += 1;
    }
    let x0 = xs[k] as f64;
    let x1 = xs[k + 1] as f64;
    let t = (x - x0) / (x1 - x0);
    (k, k + 1, t)
}

/// Per-axis interpolation rule for resampling the cluster grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Two-point piecewise linear; linear extrapolation at the edges.
    Bilinear,
    /// Four-point Lagrange cubic on the segment's neighborhood, falling back
    /// to the available points near the edges. Reproduces constants and
    /// linear fields exactly, like the bilinear rule, but removes the
    /// curvature bias on smooth gain surfaces.
    Bicubic,
}

/// 1-D interpolation weights at `x` over sample positions `xs` (strictly
/// increasing). Returns (sample index, weight) pairs summing to one.
fn interp_weights(xs: &[usize], x: f64, rule: Interpolation) -> Vec<(usize, f64)> {
    let n = xs.len();
    if n == 1 {
        return vec![(0, 1.0)];
    }
    let (k0, _, _) = interp1(xs, x);
    let (lo, hi) = match rule {
        Interpolation::Bilinear => (k0, k0 + 1),
        Interpolation::Bicubic => (k0.saturating_sub(1), (k0 + 2).min(n - 1)),
    };
    // Lagrange basis over the stencil: exact for polynomials of the stencil
    // degree, so both rules preserve constants and linear ramps.
    let mut out = Vec::with_capacity(hi - lo + 1);
    for a in lo..=hi {
        let xa = xs[a] as f64;
        let mut w = 1.0;
        for (b, &xb) in xs.iter().enumerate().take(hi + 1).skip(lo) {
            if b != a {
                w *= (x - xb as f64) / (xa - xb as f64);
            }
        }
        out.push((a, w));
    }
    out
}

/// Separable interpolation of a cluster grid onto the full element grid,
/// extrapolating at the boundary. Negative interpolated values are clamped
/// to zero; the clamp count is returned.
pub fn interpolate_grid(
    grid: &ClusterGrid,
    n_v: usize,
    n_h: usize,
    rule: Interpolation,
) -> Result<(Mat, usize)> {
    let mut out = Mat::zeros(n_v, n_h);
    let mut clamped = 0usize;
    for i in 1..=n_v {
        let wr = interp_weights(&grid.rows, i as f64, rule);
        for j in 1..=n_h {
            let wc = interp_weights(&grid.cols, j as f64, rule);
            let mut v = 0.0;
            for &(ri, a) in &wr {
                for &(ci, b) in &wc {
                    v += a * b * grid.values[(ri, ci)];
                }
            }
            let v = if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            };
            out[(i - 1, j - 1)] = v;
        }
    }
    Ok((out, clamped))
}

/// Assembles interpolated per-pair grids into the cascaded-channel layout.
pub fn assemble_estimate(
    grids: &[ClusterGrid],
    schedule: &ReflectionSchedule,
    rule: Interpolation,
) -> Result<(Mat, usize)> {
    let plan = &schedule.plan;
    let n = plan.n_v * plan.n_h;
    let mut h_est = Mat::zeros(n, schedule.n_t * schedule.n_r);
    let mut clamped = 0usize;
    for grid in grids {
        let (t, r) = grid.pair;
        let (full, c) = interpolate_grid(grid, plan.n_v, plan.n_h, rule)?;
        clamped += c;
        for i in 1..=plan.n_v {
            for j in 1..=plan.n_h {
                h_est[(plan.flat(i, j) - 1, r + t * schedule.n_r)] = full[(i - 1, j - 1)];
            }
        }
    }
    Ok((h_est, clamped))
}

/// Normalized mean square error over all entries.
pub fn nmse(estimate: &Mat, truth: &Mat) -> Result<f64> {
    if estimate.rows() != truth.rows() || estimate.cols() != truth.cols() {
        return Err(Error::Dimension {
            expected: truth.rows() * truth.cols(),
            got: estimate.rows() * estimate.cols(),
        });
    }
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::Domain("zero-norm true channel".into()));
    }
    let mut sq = 0.0;
    for j in 0..truth.cols() {
        for i in 0..truth.rows() {
            let d = estimate[(i, j)] - truth[(i, j)];
            sq += d * d;
        }
    }
    Ok(sq / (denom * denom))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JstsDiagnostics {
    pub nmse: f64,
    pub blocks: usize,
    pub parameters: usize,
    pub clamped: usize,
    pub sigma: f64,
    pub seed: u64,
}

pub struct JstsOutput {
    pub h_est: Mat,
    pub diagnostics: JstsDiagnostics,
}

fn block_seed(seed: u64, q: usize) -> u64 {
    // SplitMix64 step keyed by the block index.
    let mut z = seed ^ (q as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential estimation over all blocks followed by interpolation: the
/// space-sampling half of the JSTS loop for a static receiver (a single
/// coherence-time window, so the time interpolation degenerates to the one
/// block set).
pub fn jsts_run(
    channel: &CascadedChannel,
    schedule: &ReflectionSchedule,
    pilot: &Mat,
    sigma: f64,
    seed: u64,
    rule: Interpolation,
) -> Result<JstsOutput> {
    if channel.n_elements() != schedule.plan.n_v * schedule.plan.n_h {
        return Err(Error::Dimension {
            expected: schedule.plan.n_v * schedule.plan.n_h,
            got: channel.n_elements(),
        });
    }
    let q_total = schedule.plan.q();
    let mut estimates = Vec::with_capacity(q_total);
    for q in 1..=q_total {
        let h_q = schedule.block_channel(channel, q)?;
        let y = simulate_received(&h_q, pilot, sigma, block_seed(seed, q))?;
        estimates.push(mmse_estimate(&y, pilot, sigma)?);
    }
    let mut grids = collect_clusters(&estimates, schedule)?;
    for grid in &mut grids {
        let (t, r) = grid.pair;
        let col = r + t * schedule.n_r;
        let plan = &schedule.plan;
        inpaint_blind_samples(grid, &|i, j| channel.h_c[(plan.flat(i, j) - 1, col)] > 0.0);
    }
    let (mut h_est, clamped) = assemble_estimate(&grids, schedule, rule)?;
    // The FOV gate is part of the known geometry: elements the PD cannot see
    // contribute exactly zero, so the estimate pins them there.
    for c in 0..h_est.cols() {
        for k in 0..h_est.rows() {
            if channel.h_c[(k, c)] == 0.0 {
                h_est[(k, c)] = 0.0;
            }
        }
    }
    let nmse_val = nmse(&h_est, &channel.h_c)?;
    Ok(JstsOutput {
        h_est,
        diagnostics: JstsDiagnostics {
            nmse: nmse_val,
            blocks: q_total,
            parameters: q_total * schedule.n_t * schedule.n_r,
            clamped,
            sigma,
            seed,
        },
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OverheadReport {
    pub parameters: usize,
    pub baseline_parameters: usize,
    /// Parameter reduction factor s^2 relative to per-element estimation.
    pub reduction_factor: usize,
    /// Flop model of the per-block MMSE: P * N_t^2 * (N_t + 2 N_r).
    pub flops_per_block: usize,
    pub total_flops: usize,
}

pub fn overhead_report(plan: &SubarrayPlan, n_t: usize, n_r: usize, p: usize) -> OverheadReport {
    let q = plan.q();
    let per_block = p * n_t * n_t * (n_t + 2 * n_r);
    OverheadReport {
        parameters: q * n_t * n_r,
        baseline_parameters: plan.n_v * plan.n_h * n_t * n_r,
        reduction_factor: plan.s * plan.s,
        flops_per_block: per_block,
        total_flops: q * per_block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_reference_counts() {
        let p = partition_with_spacing(24, 24, 2).unwrap();
        assert_eq!((p.q_v, p.q_h), (12, 12));
        let p = partition_with_spacing(24, 24, 3).unwrap();
        assert_eq!((p.q_v, p.q_h), (8, 8));
        let p = partition_with_spacing(24, 24, 4).unwrap();
        assert_eq!((p.q_v, p.q_h), (6, 6));
        let p = partition_with_spacing(24, 24, 1).unwrap();
        assert_eq!(p.q(), 576);
        // Spacing from coherence distance: ceil(0.4 / 0.1) = 4.
        assert_eq!(sampling_spacing(0.4, 0.1).unwrap(), 4);
        assert_eq!(sampling_spacing(0.15, 0.1).unwrap(), 2);
    }

    #[test]
    fn partition_degenerate_clamps() {
        let p = partition_with_spacing(4, 4, 9).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.q(), 1);
        assert_eq!(p.s, 4);
    }

    #[test]
    fn index_maps_consistent() {
        let p = partition_with_spacing(24, 24, 2).unwrap();
        assert_eq!(p.flat(1, 1), 1);
        assert_eq!(p.flat(2, 1), 25);
        assert_eq!(p.subarray_of(3, 4), (2, 2));
        assert_eq!(p.element_at(2, 2, 1, 2), Some((3, 4)));
        // Truncated edge subarray.
        let p = partition_with_spacing(5, 5, 2).unwrap();
        assert_eq!(p.q(), 9);
        assert_eq!(p.element_at(3, 3, 2, 2), None);
        assert_eq!(p.element_at(3, 3, 1, 1), Some((5, 5)));
    }

    #[test]
    fn schedule_siso_every_subarray_first_element() {
        let plan = partition_with_spacing(4, 4, 2).unwrap();
        let sch = build_schedule(plan, 1, 1).unwrap();
        let assigned: Vec<usize> = sch
            .assignments
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|_| i))
            .collect();
        assert_eq!(assigned.len(), 4);
        // Top-left element of each 2x2 subarray: rows/cols 1 and 3.
        assert_eq!(assigned, vec![0, 2, 8, 10]);
    }

    #[test]
    fn schedule_mimo_covers_all_pairs_per_subarray() {
        let plan = partition_with_spacing(4, 4, 2).unwrap();
        let sch = build_schedule(plan, 2, 2).unwrap();
        for q in 1..=plan.q() {
            let mut pairs: Vec<(usize, usize)> = sch
                .block_elements(q)
                .iter()
                .filter_map(|&i| sch.assignments[i])
                .collect();
            pairs.sort_unstable();
            assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        }
    }

    #[test]
    fn schedule_small_spacing_cycles_pairs() {
        // s = 1 with 2x2 MIMO: one element per subarray, pairs cycling so
        // every pair is sampled on a coarser regular grid.
        let plan = partition_with_spacing(4, 4, 1).unwrap();
        let sch = build_schedule(plan, 2, 2).unwrap();
        for a in &sch.assignments {
            assert!(a.is_some());
        }
        // Element (1,1) -> pair (0,0); element (1,2) -> t cycles to 1.
        assert_eq!(sch.assignments[0], Some((0, 0)));
        assert_eq!(sch.assignments[1], Some((1, 0)));
        assert_eq!(sch.assignments[4], Some((0, 1)));
    }

    #[test]
    fn schedule_rank_equals_pair_count() {
        let plan = partition_with_spacing(6, 6, 2).unwrap();
        let sch = build_schedule(plan, 2, 2).unwrap();
        assert_eq!(sch.align.v.rank(1e-9), 4);
    }

    #[test]
    fn mmse_identity_pilot_recovers_y() {
        let y = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let x = Mat::identity(2);
        let h = mmse_estimate(&y, &x, 0.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - y[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mmse_orthogonal_pilot_exact_recovery() {
        let h_true = Mat::from_rows(&[&[0.3, 0.7], &[0.1, 0.9]]).unwrap();
        let x = build_pilot(2, 100, 1.0).unwrap();
        let y = h_true.matmul(&x).unwrap();
        let h = mmse_estimate(&y, &x, 0.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - h_true[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mmse_beats_least_squares_in_noise() {
        // Monte-Carlo MSE of the ridge estimate vs plain LS; the gap shrinks
        // as sigma drops.
        let h_true = Mat::from_rows(&[&[0.5, 0.2], &[0.3, 0.8]]).unwrap();
        let x = build_pilot(2, 100, 1.0).unwrap();
        let mut gaps = Vec::new();
        for sigma in [0.5, 0.05] {
            let mut mse_ridge = 0.0;
            let mut mse_ls = 0.0;
            for seed in 0..200u64 {
                let y = simulate_received(&h_true, &x, sigma, seed).unwrap();
                let ridge = mmse_estimate(&y, &x, sigma).unwrap();
                let ls = mmse_estimate(&y, &x, 0.0).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        mse_ridge += (ridge[(i, j)] - h_true[(i, j)]).powi(2);
                        mse_ls += (ls[(i, j)] - h_true[(i, j)]).powi(2);
                    }
                }
            }
            assert!(mse_ridge <= mse_ls * 1.001, "ridge worse: {mse_ridge} vs {mse_ls}");
            gaps.push((mse_ls - mse_ridge) / mse_ls.max(1e-30));
        }
        assert!(gaps[1] <= gaps[0], "relative gap should shrink with sigma");
    }

    #[test]
    fn mmse_rejects_singular_gram() {
        let x = Mat::zeros(2, 4);
        let y = Mat::zeros(2, 4);
        assert!(mmse_estimate(&y, &x, 0.0).is_err());
    }

    fn synthetic_channel(n_v: usize, n_h: usize, n_t: usize, n_r: usize) -> CascadedChannel {
        // Smooth positive field over the element grid, distinct per pair.
        let n = n_v * n_h;
        let h_c = Mat::from_fn(n, n_t * n_r, |e, pair| {
            let i = (e / n_h) as f64;
            let j = (e % n_h) as f64;
            1.0 + 0.1 * (pair as f64) + 0.02 * i + 0.03 * j + 0.001 * i * j
        });
        CascadedChannel::new(h_c, n_r).unwrap()
    }

    #[test]
    fn cluster_collection_siso_block_order() {
        let plan = partition_with_spacing(4, 4, 2).unwrap();
        let sch = build_schedule(plan, 1, 1).unwrap();
        let estimates: Vec<Mat> = (0..4)
            .map(|q| Mat::from_rows(&[&[q as f64 + 1.0]]).unwrap())
            .collect();
        let grids = collect_clusters(&estimates, &sch).unwrap();
        assert_eq!(grids.len(), 1);
        let g = &grids[0];
        assert_eq!(g.rows, vec![1, 3]);
        assert_eq!(g.cols, vec![1, 3]);
        assert_eq!(g.values[(0, 0)], 1.0);
        assert_eq!(g.values[(0, 1)], 2.0);
        assert_eq!(g.values[(1, 0)], 3.0);
        assert_eq!(g.values[(1, 1)], 4.0);
    }

    #[test]
    fn cluster_index_sets_are_disjoint_and_cover() {
        let plan = partition_with_spacing(4, 4, 2).unwrap();
        let sch = build_schedule(plan, 2, 2).unwrap();
        let estimates: Vec<Mat> = (0..plan.q()).map(|_| Mat::zeros(2, 2)).collect();
        let grids = collect_clusters(&estimates, &sch).unwrap();
        let mut seen = std::collections::HashSet::new();
        for g in &grids {
            for &i in &g.rows {
                for &j in &g.cols {
                    assert!(seen.insert((i, j, g.pair)), "duplicate sample");
                }
            }
        }
        // Every activated element appears in exactly one pair's grid.
        let activated = sch.assignments.iter().flatten().count();
        assert_eq!(seen.len(), activated);
    }

    #[test]
    fn interpolation_partition_of_unity() {
        let grid = ClusterGrid {
            pair: (0, 0),
            rows: vec![1, 3, 5],
            cols: vec![2, 4],
            values: Mat::from_fn(3, 2, |_, _| 2.5),
        };
        for rule in [Interpolation::Bilinear, Interpolation::Bicubic] {
            let (full, clamped) = interpolate_grid(&grid, 6, 6, rule).unwrap();
            assert_eq!(clamped, 0);
            for i in 0..6 {
                for j in 0..6 {
                    assert!((full[(i, j)] - 2.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn interpolation_linear_precision() {
        // A field linear in (i, j) is reproduced exactly everywhere,
        // including the extrapolated boundary band.
        let rows = vec![2usize, 4, 6];
        let cols = vec![1usize, 3];
        let f = |i: f64, j: f64| 0.4 + 0.2 * i + 0.1 * j;
        let grid = ClusterGrid {
            pair: (0, 0),
            rows: rows.clone(),
            cols: cols.clone(),
            values: Mat::from_fn(3, 2, |r, c| f(rows[r] as f64, cols[c] as f64)),
        };
        for rule in [Interpolation::Bilinear, Interpolation::Bicubic] {
            let (full, _) = interpolate_grid(&grid, 7, 5, rule).unwrap();
            for i in 1..=7 {
                for j in 1..=5 {
                    assert!(
                        (full[(i - 1, j - 1)] - f(i as f64, j as f64)).abs() < 1e-12,
                        "linear field not reproduced at ({i}, {j})"
                    );
                }
            }
        }
    }

    #[test]
    fn nmse_reference_values() {
        let h = Mat::from_fn(3, 2, |i, j| (i + j) as f64 + 1.0);
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        let double = h.scale(2.0);
        assert!((nmse(&double, &h).unwrap() - 1.0).abs() < 1e-15);
        // Perturbation of known norm.
        let mut pert = h.clone();
        pert[(0, 0)] += 0.3;
        let expect = 0.09 / h.frobenius_norm().powi(2);
        assert!((nmse(&pert, &h).unwrap() - expect).abs() < 1e-15);
        assert!(nmse(&Mat::zeros(2, 2), &Mat::zeros(2, 2)).is_err());
    }

    #[test]
    fn jsts_exact_recovery_without_sampling_or_noise() {
        let ch = synthetic_channel(6, 6, 1, 1);
        let plan = partition_with_spacing(6, 6, 1).unwrap();
        let sch = build_schedule(plan, 1, 1).unwrap();
        let pilot = build_pilot(1, 10, 1.0).unwrap();
        let out = jsts_run(&ch, &sch, &pilot, 0.0, 7, Interpolation::Bilinear).unwrap();
        assert!(out.diagnostics.nmse <= 1e-20, "nmse {}", out.diagnostics.nmse);
    }

    #[test]
    fn jsts_estimate_locality() {
        // The estimate at a sampled element depends only on its own block:
        // changing the channel in another subarray leaves it unchanged.
        let ch = synthetic_channel(4, 4, 1, 1);
        let plan = partition_with_spacing(4, 4, 2).unwrap();
        let sch = build_schedule(plan, 1, 1).unwrap();
        let pilot = build_pilot(1, 10, 1.0).unwrap();
        let base = jsts_run(&ch, &sch, &pilot, 0.0, 1, Interpolation::Bilinear).unwrap();
        let mut h2 = ch.h_c.clone();
        // Perturb the element sampled by the last block (row 3, col 3 ->
        // flat index 2*4+2).
        h2[(10, 0)] *= 3.0;
        let ch2 = CascadedChannel::new(h2, 1).unwrap();
        let other = jsts_run(&ch2, &sch, &pilot, 0.0, 1, Interpolation::Bilinear).unwrap();
        // Sample of block 1 (element (1,1), flat 0) unchanged.
        assert_eq!(base.h_est[(0, 0)], other.h_est[(0, 0)]);
        // Sample of the perturbed block moved.
        assert_ne!(base.h_est[(10, 0)], other.h_est[(10, 0)]);
    }

    #[test]
    fn jsts_deterministic_under_seed() {
        let ch = synthetic_channel(6, 6, 2, 2);
        let plan = partition_with_spacing(6, 6, 2).unwrap();
        let sch = build_schedule(plan, 2, 2).unwrap();
        let pilot = build_pilot(2, 20, 1.0).unwrap();
        let a = jsts_run(&ch, &sch, &pilot, 0.1, 99, Interpolation::Bilinear).unwrap();
        let b = jsts_run(&ch, &sch, &pilot, 0.1, 99, Interpolation::Bilinear).unwrap();
        assert_eq!(a.h_est, b.h_est);
        let c = jsts_run(&ch, &sch, &pilot, 0.1, 100, Interpolation::Bilinear).unwrap();
        assert_ne!(a.h_est, c.h_est);
    }

    #[test]
    fn jsts_noise_monotonicity() {
        // Mean NMSE over seeds is nondecreasing in sigma.
        let ch = synthetic_channel(8, 8, 1, 1);
        let plan = partition_with_spacing(8, 8, 2).unwrap();
        let sch = build_schedule(plan, 1, 1).unwrap();
        let pilot = build_pilot(1, 50, 1.0).unwrap();
        let mut last = 0.0;
        for sigma in [0.01, 0.1, 1.0] {
            let mean: f64 = (0..30u64)
                .map(|s| jsts_run(&ch, &sch, &pilot, sigma, s, Interpolation::Bilinear).unwrap().diagnostics.nmse)
                .sum::<f64>()
                / 30.0;
            assert!(mean >= last, "NMSE not monotone in sigma");
            last = mean;
        }
    }

    #[test]
    fn overhead_reference_values() {
        let plan = partition_with_spacing(24, 24, 2).unwrap();
        let rep = overhead_report(&plan, 1, 1, 100);
        assert_eq!(rep.parameters, 144);
        assert_eq!(rep.baseline_parameters, 576);
        assert_eq!(rep.reduction_factor, 4);
        assert_eq!(rep.flops_per_block, 300);

        let plan = partition_with_spacing(24, 24, 1).unwrap();
        assert_eq!(overhead_report(&plan, 1, 1, 100).reduction_factor, 1);

        let plan = partition_with_spacing(24, 24, 4).unwrap();
        let rep = overhead_report(&plan, 2, 2, 100);
        assert_eq!(rep.parameters, 36 * 4);
        assert_eq!(rep.reduction_factor, 16);
    }
}
