//! Named experiment runners: each produces a deterministic CSV body, a
//! manifest describing the run, and a machine-readable summary.

use serde_json::json;

use crate::channel::{patch_gain, point_gain, OirsElement, Pd, QuadratureSpec};
use crate::codebook::{
    alignment_angles, build_nonuniform, codebook_error_norm, uniform_codebook, Codebook,
    CodebookKind, FootprintIndex, NonUniformParams,
};
use crate::coherence::{
    coherence_distance, coherence_time, grid_search_extent, spatial_expansion,
    temporal_expansion, Branch, TimeCoherence,
};
use crate::error::{Error, Result};
use crate::estimator::{
    build_pilot, build_schedule, jsts_run, overhead_report, partition_with_spacing, Interpolation,
};
use crate::geometry::{reflect, Vec3};
use crate::scenario::Scenario;

pub const EXPERIMENTS: [&str; 10] = [
    "angle-selectivity",
    "coherence-space",
    "coherence-time",
    "codebook-omega",
    "codebook-gamma",
    "codebook-compare",
    "codebook-count",
    "nmse-siso",
    "nmse-mimo",
    "overhead",
];

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Restrict the NMSE sweep to a single sub-sampling spacing.
    pub spacing: Option<usize>,
    /// Override the scenario's relative noise grid.
    pub sigma: Option<Vec<f64>>,
    /// Override the positioning-uncertainty radius.
    pub radius: Option<f64>,
    /// Receiver-grid spacing for codebook error norms, meters.
    pub grid_spacing: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub name: String,
    pub csv: String,
    pub manifest: serde_json::Value,
    pub summary: serde_json::Value,
}

pub fn run_experiment(
    name: &str,
    scenario: &Scenario,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<ExperimentOutput> {
    let (csv, summary) = match name {
        "angle-selectivity" => angle_selectivity(scenario)?,
        "coherence-space" => coherence_space(scenario)?,
        "coherence-time" => coherence_time_curve(scenario)?,
        "codebook-omega" => codebook_omega(scenario, opts)?,
        "codebook-gamma" => codebook_gamma(scenario, opts)?,
        "codebook-compare" => codebook_compare(scenario, opts)?,
        "codebook-count" => codebook_count(scenario, opts)?,
        "nmse-siso" | "nmse-mimo" => nmse_curves(scenario, seed, opts)?,
        "overhead" => overhead(scenario)?,
        other => return Err(Error::UnknownExperiment(other.into())),
    };
    let manifest = json!({
        "experiment": name,
        "scenario_hash": scenario.hash(),
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "options": {
            "spacing": opts.spacing,
            "sigma": opts.sigma,
            "radius": opts.radius,
            "grid_spacing": opts.grid_spacing,
        },
        "summary": summary.clone(),
    });
    Ok(ExperimentOutput { name: name.into(), csv, manifest, summary })
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reflected-beam selectivity: gain of a specularly aligned element swept
/// across receiver positions along the floor, versus angle of departure.
fn angle_selectivity(scenario: &Scenario) -> Result<(String, serde_json::Value)> {
    let led = &scenario.leds[0];
    let pd0 = &scenario.pds[0];
    let (roll, yaw) = alignment_angles(led.center, scenario.oirs.center, pd0.center)?;
    let elem = OirsElement {
        center: scenario.oirs.center,
        roll,
        yaw,
        side: scenario.oirs.side,
        reflectivity: scenario.oirs.reflectivity,
    };
    let quad = QuadratureSpec::default();
    let incident = (elem.center - led.center).normalize()?;
    let specular = reflect(incident, elem.normal()?).as_vec();
    let steps = 360usize;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let x = 0.2 + 3.6 * k as f64 / steps as f64;
        let pd = Pd { center: Vec3::new(x, pd0.center.y, pd0.center.z), ..*pd0 };
        let gain = patch_gain(&elem, led, &pd, &quad)?;
        let dir = (pd.center - elem.center).normalize()?.as_vec();
        let aod = (x - pd0.center.x).signum()
            * dir.dot(specular).clamp(-1.0, 1.0).acos();
        samples.push((x, aod, gain));
    }
    let peak = samples.iter().map(|s| s.2).fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::Degenerate("selectivity sweep saw no power".into()));
    }
    let mut lobes = 0usize;
    let mut above = false;
    for (x, aod, gain) in &samples {
        let normalized = gain / peak;
        if normalized >= 0.01 && !above {
            lobes += 1;
        }
        above = normalized >= 0.01;
        rows.push(vec![fmt(*x), fmt(aod.to_degrees()), fmt(*gain), fmt(normalized)]);
    }
    let csv = csv_table(&["x", "aod_deg", "gain", "normalized"], &rows);
    let summary = json!({ "peak_gain": peak, "mainlobes": lobes });
    Ok((csv, summary))
}

/// Spatial coherence: exact relative gain change versus mirror displacement
/// along x, with its linear and quadratic models, plus the coherence
/// distances from the closed form and from a grid search on the exact gain.
fn coherence_space(scenario: &Scenario) -> Result<(String, serde_json::Value)> {
    let g = scenario.coherence_geometry()?;
    let expansion = spatial_expansion(&g);
    let xi_c = scenario.xi_c;
    let mut rows = Vec::new();
    let steps = 240usize;
    for k in 0..=steps {
        let dr = -0.6 + 1.2 * k as f64 / steps as f64;
        let shift = Vec3::X * dr;
        let exact = g.exact_ratio(shift, Vec3::ZERO)?;
        let linear = expansion.w.dot(shift);
        let quadratic = expansion.xi(shift);
        rows.push(vec![fmt(dr), fmt(exact), fmt(linear), fmt(quadratic)]);
    }
    let dist = coherence_distance(&g, xi_c)?;
    let x_detail = &dist.directions[0];
    let (grid_plus, grid_minus) =
        grid_search_extent(&g, |t| (Vec3::X * t, Vec3::ZERO), xi_c, 1e-3, 2000);
    let directions: Vec<serde_json::Value> = dist
        .directions
        .iter()
        .map(|d| {
            json!({
                "direction": [d.direction.x, d.direction.y, d.direction.z],
                "c1": d.c1,
                "c2": d.c2,
                "length": d.interval.length,
                "plus_side": d.interval.plus_side,
                "minus_side": d.interval.minus_side,
            })
        })
        .collect();
    let csv = csv_table(&["dr", "exact", "linear", "quadratic"], &rows);
    let summary = json!({
        "xi_c": xi_c,
        // Coherence distance reported as the one-sided +x extent of the
        // coherent interval, matching how the sampling spacing is used.
        "d_c": x_detail.interval.plus_side,
        "d_c_grid": grid_plus,
        "d_c_grid_minus": grid_minus,
        "d_c_min_length": dist.d_c,
        "directions": directions,
    });
    Ok((csv, summary))
}

/// Temporal coherence under the scenario velocity: exact relative gain
/// change versus time with the linear and quadratic models.
fn coherence_time_curve(scenario: &Scenario) -> Result<(String, serde_json::Value)> {
    let g = scenario.coherence_geometry()?;
    let v = scenario.velocity;
    let xi_c = scenario.xi_c;
    let coh = coherence_time(&g, v, xi_c)?;
    let (c1, c2) = if v.norm() > 0.0 { temporal_expansion(&g, v) } else { (0.0, 0.0) };
    let span = match coh {
        TimeCoherence::Bounded { interval, .. } => {
            1.5 * interval.plus_side.max(interval.minus_side).max(1e-3)
        }
        TimeCoherence::Unbounded => 1.0,
    };
    let steps = 240usize;
    let mut rows = Vec::new();
    for k in 0..=steps {
        let t = -span + 2.0 * span * k as f64 / steps as f64;
        let du = v * t;
        let exact = g.exact_ratio(Vec3::ZERO, du)?;
        let linear = c1 * t;
        let quadratic = c1 * t + c2 * t * t;
        rows.push(vec![fmt(t), fmt(exact), fmt(linear), fmt(quadratic)]);
    }
    let csv = csv_table(&["dt", "exact", "linear", "quadratic"], &rows);
    let summary = match coh {
        TimeCoherence::Bounded { t_c, interval, c1, c2 } => {
            let (grid_plus, grid_minus) =
                grid_search_extent(&g, |t| (Vec3::ZERO, v * t), xi_c, span / 2000.0, 4000);
            json!({
                "xi_c": xi_c,
                "t_c": t_c,
                "plus_side": interval.plus_side,
                "minus_side": interval.minus_side,
                "branch": match interval.branch {
                    Branch::Quadratic => "quadratic",
                    Branch::LinearBound => "linear-bound",
                    Branch::PureQuadratic => "pure-quadratic",
                },
                "c1": c1,
                "c2": c2,
                "t_c_grid": grid_plus + grid_minus,
            })
        }
        TimeCoherence::Unbounded => json!({ "xi_c": xi_c, "t_c": null }),
    };
    Ok((csv, summary))
}

/// Shared context for the codebook experiments. Two gain metrics coexist:
/// the aperture quadrature of the optical model (used for the Frobenius
/// error-norm figures) and the cheaper point-density model (used for the
/// beam-alignment relative error, whose flat beam top tolerates sub-spacing
/// misses).
struct CodebookEval<'a> {
    scenario: &'a Scenario,
    point_quad: QuadratureSpec,
    patch_quad: QuadratureSpec,
}

struct CodebookReport {
    patch: crate::codebook::ErrorNormReport,
    point: crate::codebook::ErrorNormReport,
}

impl<'a> CodebookEval<'a> {
    fn new(scenario: &'a Scenario) -> CodebookEval<'a> {
        CodebookEval {
            scenario,
            point_quad: QuadratureSpec::default(),
            // Reduced rule for the aperture double integral: the error-norm
            // sweep evaluates it tens of thousands of times, and the norm
            // changes by < 1% against the default rule.
            patch_quad: QuadratureSpec { element_nodes: 12, pd_nodes: 4 },
        }
    }

    fn element(&self, roll: f64, yaw: f64) -> OirsElement {
        OirsElement {
            center: self.scenario.oirs.center,
            roll,
            yaw,
            side: self.scenario.oirs.side,
            reflectivity: self.scenario.oirs.reflectivity,
        }
    }

    fn point_gain_at(&self, p: Vec3, roll: f64, yaw: f64) -> Result<f64> {
        let elem = self.element(roll, yaw);
        let pd = Pd { center: p, ..self.scenario.pds[0] };
        point_gain(&elem, &self.scenario.leds[0], &pd, &self.point_quad)
    }

    fn patch_gain_at(&self, p: Vec3, roll: f64, yaw: f64) -> Result<f64> {
        let elem = self.element(roll, yaw);
        let pd = Pd { center: p, ..self.scenario.pds[0] };
        patch_gain(&elem, &self.scenario.leds[0], &pd, &self.patch_quad)
    }

    fn align_at(&self, p: Vec3) -> Result<(f64, f64)> {
        alignment_angles(self.scenario.leds[0].center, self.scenario.oirs.center, p)
    }

    /// Receiver-position grid: the positioning-uncertainty disc around the
    /// PD's nominal location, clipped to the floor. Beam alignment operates
    /// within this disc; outside it neither codebook is swept.
    fn detection_grid(&self, spacing: f64) -> Vec<Vec3> {
        let center = self.scenario.pds[0].center;
        let radius = self.scenario.positioning_radius;
        let floor = self.scenario.floor();
        let n = (radius / spacing).round() as i64;
        let mut grid = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                let p = center + Vec3::new(i as f64 * spacing, j as f64 * spacing, 0.0);
                if (p - center).norm() <= radius + 1e-12 && floor.contains(p) {
                    grid.push(p);
                }
            }
        }
        grid
    }

    fn index_of(&self, codebook: &Codebook) -> FootprintIndex {
        FootprintIndex::build(
            codebook,
            self.scenario.leds[0].center,
            self.scenario.oirs.center,
            &self.scenario.floor(),
        )
    }

    fn evaluate(
        &self,
        codebook: &Codebook,
        spacing: f64,
    ) -> Result<(FootprintIndex, CodebookReport)> {
        let index = self.index_of(codebook);
        let grid = self.detection_grid(spacing);
        let patch = codebook_error_norm(
            &index,
            &grid,
            &|p, w, g| self.patch_gain_at(p, w, g),
            &|p| {
                let (w, g) = self.align_at(p)?;
                self.patch_gain_at(p, w, g)
            },
            12,
        )?;
        let point = codebook_error_norm(
            &index,
            &grid,
            &|p, w, g| self.point_gain_at(p, w, g),
            &|p| {
                let (w, g) = self.align_at(p)?;
                self.point_gain_at(p, w, g)
            },
            12,
        )?;
        Ok((index, CodebookReport { patch, point }))
    }
}

/// Sweep size at positioning radius `r`: the ring-indexed non-uniform
/// codebook prunes both the roll and yaw axes by footprint distance, while
/// the uniform product codebook can only prune its roll rings.
fn swept_count(kind: CodebookKind, index: &FootprintIndex, p: Vec3, radius: f64) -> usize {
    match kind {
        CodebookKind::Uniform => index.roll_pruned(p, radius).len(),
        CodebookKind::GoNonUniform => index.within_radius(p, radius).len(),
    }
}

const DEFAULT_GRID_SPACING: f64 = 0.05;
const UNIFORM_STEP_DEG: f64 = 0.6;
const NONUNIFORM_ROLL_DEG: f64 = 1.5;
const NONUNIFORM_YAW_DEG: f64 = 15.0;

fn nonuniform_params(delta_roll_deg: f64, delta_yaw_deg: f64) -> NonUniformParams {
    NonUniformParams {
        delta_roll: delta_roll_deg.to_radians(),
        delta_yaw: delta_yaw_deg.to_radians(),
        ring1_full: false,
    }
}

fn codebook_sweep(
    scenario: &Scenario,
    opts: &ExperimentOptions,
    values_deg: &[f64],
    vary_roll: bool,
) -> Result<(String, serde_json::Value)> {
    let eval = CodebookEval::new(scenario);
    let spacing = opts.grid_spacing.unwrap_or(DEFAULT_GRID_SPACING);
    let mut rows = Vec::new();
    let mut norms = Vec::new();
    for &v in values_deg {
        let params = if vary_roll {
            nonuniform_params(v, NONUNIFORM_YAW_DEG)
        } else {
            nonuniform_params(NONUNIFORM_ROLL_DEG, v)
        };
        let codebook = build_nonuniform(
            scenario.leds[0].center,
            scenario.oirs.center,
            params,
            &scenario.floor(),
        )?;
        let (_, report) = eval.evaluate(&codebook, spacing)?;
        let mean_rel = report.point.mean_abs_error / report.point.mean_true_gain;
        norms.push(report.patch.frobenius);
        rows.push(vec![
            fmt(v),
            codebook.len().to_string(),
            fmt(report.patch.frobenius),
            fmt(report.point.mean_abs_error),
            fmt(report.point.mean_true_gain),
            fmt(mean_rel),
        ]);
    }
    let header = if vary_roll {
        ["delta_roll_deg", "codewords", "frobenius", "mean_abs_error", "mean_true_gain", "mean_rel_error"]
    } else {
        ["delta_yaw_deg", "codewords", "frobenius", "mean_abs_error", "mean_true_gain", "mean_rel_error"]
    };
    let csv = csv_table(&header, &rows);
    let summary = json!({
        "values_deg": values_deg,
        "frobenius": norms,
        "grid_spacing": spacing,
    });
    Ok((csv, summary))
}

fn codebook_omega(
    scenario: &Scenario,
    opts: &ExperimentOptions,
) -> Result<(String, serde_json::Value)> {
    codebook_sweep(scenario, opts, &[0.75, 1.0, 1.5, 2.0, 3.0], true)
}

fn codebook_gamma(
    scenario: &Scenario,
    opts: &ExperimentOptions,
) -> Result<(String, serde_json::Value)> {
    codebook_sweep(scenario, opts, &[7.5, 10.0, 15.0, 20.0, 30.0], false)
}

/// Uniform versus non-uniform codebook at the reference spacings: error
/// norms over the receiver grid and sweep sizes at the positioning radius.
fn codebook_compare(
    scenario: &Scenario,
    opts: &ExperimentOptions,
) -> Result<(String, serde_json::Value)> {
    let eval = CodebookEval::new(scenario);
    let spacing = opts.grid_spacing.unwrap_or(DEFAULT_GRID_SPACING);
    let radius = opts.radius.unwrap_or(scenario.positioning_radius);
    let pd = scenario.pds[0].center;

    let uniform = uniform_codebook(
        UNIFORM_STEP_DEG.to_radians(),
        UNIFORM_STEP_DEG.to_radians(),
    )?;
    let nonuniform = build_nonuniform(
        scenario.leds[0].center,
        scenario.oirs.center,
        nonuniform_params(NONUNIFORM_ROLL_DEG, NONUNIFORM_YAW_DEG),
        &scenario.floor(),
    )?;

    let mut rows = Vec::new();
    let mut summary_entries = Vec::new();
    for (label, codebook) in [("uniform", &uniform), ("nonuniform", &nonuniform)] {
        let (index, report) = eval.evaluate(codebook, spacing)?;
        let swept = swept_count(codebook.kind, &index, pd, radius);
        let mean_rel = report.point.mean_abs_error / report.point.mean_true_gain;
        rows.push(vec![
            label.to_string(),
            codebook.len().to_string(),
            swept.to_string(),
            fmt(report.patch.frobenius),
            fmt(report.point.mean_abs_error),
            fmt(report.point.mean_true_gain),
            fmt(mean_rel),
        ]);
        summary_entries.push(json!({
            "kind": label,
            "codewords": codebook.len(),
            "swept": swept,
            "frobenius": report.patch.frobenius,
            "point_frobenius": report.point.frobenius,
            "mean_rel_error": mean_rel,
            "mean_true_gain": report.point.mean_true_gain,
        }));
    }
    let csv = csv_table(
        &["kind", "codewords", "swept", "frobenius", "mean_abs_error", "mean_true_gain", "mean_rel_error"],
        &rows,
    );
    let summary = json!({
        "radius": radius,
        "grid_spacing": spacing,
        "entries": summary_entries,
    });
    Ok((csv, summary))
}

/// Sweep sizes of both codebooks as the positioning radius grows.
fn codebook_count(
    scenario: &Scenario,
    opts: &ExperimentOptions,
) -> Result<(String, serde_json::Value)> {
    let eval = CodebookEval::new(scenario);
    let pd = scenario.pds[0].center;
    let r_max = opts.radius.unwrap_or(1.0).max(scenario.positioning_radius);
    let uniform = uniform_codebook(
        UNIFORM_STEP_DEG.to_radians(),
        UNIFORM_STEP_DEG.to_radians(),
    )?;
    let nonuniform = build_nonuniform(
        scenario.leds[0].center,
        scenario.oirs.center,
        nonuniform_params(NONUNIFORM_ROLL_DEG, NONUNIFORM_YAW_DEG),
        &scenario.floor(),
    )?;
    let uniform_index = eval.index_of(&uniform);
    let nonuniform_index = eval.index_of(&nonuniform);
    let steps = 10usize;
    let mut rows = Vec::new();
    let mut ratio_at_half = None;
    for k in 1..=steps {
        let r = r_max * k as f64 / steps as f64;
        let u = swept_count(uniform.kind, &uniform_index, pd, r);
        let n = swept_count(nonuniform.kind, &nonuniform_index, pd, r);
        if (r - 0.5).abs() < 1e-9 && u > 0 {
            ratio_at_half = Some(n as f64 / u as f64);
        }
        rows.push(vec![fmt(r), u.to_string(), n.to_string()]);
    }
    let csv = csv_table(&["radius", "uniform_swept", "nonuniform_swept"], &rows);
    let summary = json!({
        "uniform_codewords": uniform.len(),
        "nonuniform_codewords": nonuniform.len(),
        "ratio_at_half_meter": ratio_at_half,
    });
    Ok((csv, summary))
}

/// SplitMix64 combination of the run seed with sweep coordinates, so every
/// (spacing, noise level, trial) cell draws an independent stream.
fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x = x.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(p);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^= x >> 31;
    }
    x
}

/// NMSE of the block estimator versus noise level and sampling spacing,
/// averaged over Monte-Carlo trials.
fn nmse_curves(
    scenario: &Scenario,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<(String, serde_json::Value)> {
    let channel = scenario.cascaded_channel(1.0)?;
    let n_t = scenario.leds.len();
    let n_r = scenario.pds.len();
    let n = channel.n_elements();
    let rms_gain = channel.h_c.frobenius_norm() / ((n * n_t * n_r) as f64).sqrt();
    let sigma_rel = opts.sigma.clone().unwrap_or_else(|| scenario.sigma_rel.clone());
    let spacings: Vec<usize> = match opts.spacing {
        Some(s) => vec![s],
        None => vec![1, 2, 3, 4],
    };
    let pilot = build_pilot(n_t, scenario.pilot_len, 1.0)?;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &s in &spacings {
        let plan = partition_with_spacing(scenario.oirs.n_v, scenario.oirs.n_h, s)?;
        let schedule = build_schedule(plan, n_t, n_r)?;
        let mut curve = Vec::new();
        for (si, &rel) in sigma_rel.iter().enumerate() {
            let sigma = rel * rms_gain;
            let mut total = 0.0;
            let mut clamped = 0usize;
            for trial in 0..scenario.trials {
                let run_seed = mix_seed(seed, &[s as u64, si as u64, trial as u64]);
                let out = jsts_run(
                    &channel,
                    &schedule,
                    &pilot,
                    sigma,
                    run_seed,
                    Interpolation::Bicubic,
                )?;
                total += out.diagnostics.nmse;
                clamped += out.diagnostics.clamped;
            }
            let mean = total / scenario.trials as f64;
            let db = 10.0 * mean.log10();
            curve.push(mean);
            rows.push(vec![
                s.to_string(),
                fmt(sigma),
                fmt(rel),
                fmt(mean),
                fmt(db),
                fmt(clamped as f64 / scenario.trials as f64),
            ]);
        }
        curves.push(json!({ "spacing": s, "nmse": curve }));
    }
    let csv = csv_table(
        &["spacing", "sigma", "sigma_rel", "nmse_mean", "nmse_db", "clamped_mean"],
        &rows,
    );
    let summary = json!({
        "rms_gain": rms_gain,
        "sigma_rel": sigma_rel,
        "trials": scenario.trials,
        "n_t": n_t,
        "n_r": n_r,
        "curves": curves,
    });
    Ok((csv, summary))
}

/// Pilot-overhead and flop accounting versus sampling spacing.
fn overhead(scenario: &Scenario) -> Result<(String, serde_json::Value)> {
    let n_t = scenario.leds.len();
    let n_r = scenario.pds.len();
    let mut rows = Vec::new();
    let mut reductions = Vec::new();
    for s in 1..=4usize {
        let plan = partition_with_spacing(scenario.oirs.n_v, scenario.oirs.n_h, s)?;
        let report = overhead_report(&plan, n_t, n_r, scenario.pilot_len);
        reductions.push(report.reduction_factor);
        rows.push(vec![
            s.to_string(),
            plan.q().to_string(),
            report.parameters.to_string(),
            report.baseline_parameters.to_string(),
            report.reduction_factor.to_string(),
            report.flops_per_block.to_string(),
            report.total_flops.to_string(),
        ]);
    }
    let csv = csv_table(
        &["spacing", "blocks", "parameters", "baseline_parameters", "reduction_factor", "flops_per_block", "total_flops"],
        &rows,
    );
    let summary = json!({ "reduction_factors": reductions });
    Ok((csv, summary))
}
