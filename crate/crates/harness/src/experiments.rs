//! Typed experiment plans and their runners.

use std::f64::consts::PI;
use std::sync::Arc;

use chaoslab::chaos::{chaos_integral, renormalized_exponential, ChaosParams, TestFunction};
use chaoslab::decomposition::{
    assemble_r, cx_matrix, min_eig_scan, partition_of_unity, AxisBox, EigenScan, GTilde, Smoothstep, SymbolBand, SymbolTable,
    DEFAULT_SMOOTHSTEP_DEGREE,
};
use chaoslab::error::ChaosError;
use chaoslab::field::{seed_covariance_default, CovarianceOracle, GridSpec, LayeredNoiseParams, SeedCovariance, SynthesisSpec};
use chaoslab::malliavin::{log_grid, smallball_samples, MalliavinLab, SmallBallCurve, SmallBallQuantity, SmallBallSignature};
use chaoslab::mc::map_samples;
use chaoslab::moments::{
    circle_power_closed_form, circle_power_integral, fb_moment, negative_moment_samples, second_moment_quadrature, MomentSign,
};
use chaoslab::onsager::{
    min_dist_bound_profile, min_dist_integral_mc, min_dist_two_point_closed_form, onsager_scan, smooth_onsager_scan,
    star_onsager_scan, MinDistOptions, OnsagerReport,
};
use chaoslab::rng::ChainPlan;
use chaoslab::stats::{batch_means_se, mean, MomentResult, DEFAULT_BATCHES};
use num_complex::Complex64;
use serde::Serialize;

use crate::artifact::ArtifactWriter;
use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::error::Result;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

fn field_err(key: &str) -> impl Fn(ChaosError) -> ConfigError + '_ {
    move |e| ConfigError::field(key, e.to_string())
}

fn circle_grid(points: usize) -> std::result::Result<GridSpec, ConfigError> {
    GridSpec::circle(points).map_err(field_err("grid-points"))
}

fn check_betas(betas: &[f64], lo: f64, hi: f64) -> std::result::Result<(), ConfigError> {
    if betas.is_empty() {
        return Err(ConfigError::field("beta", "missing required key"));
    }
    match betas.iter().find(|&&b| !(b > lo && b < hi)) {
        Some(b) => Err(ConfigError::field("beta", format!("{b} outside ({lo}, {hi})"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub enum FieldPath {
    Circle { modes: usize, points: usize },
    Star { grid: GridSpec, params: LayeredNoiseParams },
}

#[derive(Debug, Clone)]
pub enum Plan {
    FieldValidate { path: FieldPath, separations: usize },
    FbMoments { betas: Vec<f64>, modes: usize, points: usize },
    NegativeMoment { betas: Vec<f64>, modes: usize, points: usize },
    Onsager { n_max: usize, star: LayeredNoiseParams, smooth_variance: f64, smooth_length: f64, smooth_modes: usize },
    MinDist { n: usize, betas: Vec<f64>, dim: usize },
    SmallBall { quantity: SmallBallQuantity, beta: f64, modes: usize, points: usize, eps: Vec<f64>, invariants: usize },
    Density { betas: Vec<f64>, modes: usize, points: usize, bins: usize, range: f64, doubling: bool },
    DecompositionScan { alphas: Vec<f64>, grid: GridSpec, gtilde: Vec<GTilde>, symbol_alphas: Vec<f64>, v: AxisBox, w: AxisBox, degree: usize },
}

fn modes_points(cfg: &ExperimentConfig) -> std::result::Result<(usize, usize), ConfigError> {
    let modes = cfg.require("n-modes", cfg.n_modes)?;
    let points = cfg.grid_points.unwrap_or(modes);
    circle_grid(points)?;
    Ok((modes, points))
}

fn eps_grid(cfg: &ExperimentConfig, lo: f64, hi: f64) -> std::result::Result<Vec<f64>, ConfigError> {
    let lo = cfg.extra_or("eps-lo", lo)?;
    let hi = cfg.extra_or("eps-hi", hi)?;
    let per = cfg.extra_or("eps-per-decade", 50usize)?;
    if !(hi - lo >= 4.0) {
        return Err(ConfigError::field("eps-hi", "ε grid must span at least four decades"));
    }
    if per == 0 {
        return Err(ConfigError::field("eps-per-decade", "must be positive"));
    }
    Ok(log_grid(lo, hi, per))
}

fn interval(cfg: &ExperimentConfig, key: &str, default: [f64; 2]) -> std::result::Result<AxisBox, ConfigError> {
    let v = cfg.extra_list_or(key, default.to_vec())?;
    match v.as_slice() {
        [a, b] if a < b => Ok(AxisBox::interval(*a, *b)),
        _ => Err(ConfigError::field(key, "expected `lo, hi` with lo < hi")),
    }
}

fn star_params(cfg: &ExperimentConfig) -> std::result::Result<LayeredNoiseParams, ConfigError> {
    let alpha = match cfg.alpha.as_slice() {
        [a] => *a,
        [] => return Err(ConfigError::field("alpha", "missing required key")),
        _ => return Err(ConfigError::field("alpha", "this kind takes a single α")),
    };
    let delta = cfg.require("delta", cfg.delta)?;
    let lpu = cfg.extra_or("layers-per-unit", chaoslab::field::DEFAULT_LAYERS_PER_UNIT)?;
    LayeredNoiseParams::new(alpha, delta, lpu).map_err(|e| match &e {
        ChaosError::InvalidParameter { name, .. } => ConfigError::field(name, e.to_string()),
        _ => ConfigError::field("alpha", e.to_string()),
    })
}

impl Plan {
    /// Checks every precondition without running anything.
    pub fn from_config(cfg: &ExperimentConfig) -> std::result::Result<Self, ConfigError> {
        let needs_samples = !matches!(cfg.kind, Kind::DecompositionScan);
        if needs_samples {
            cfg.require("mc-samples", cfg.mc_samples)?;
        }
        let d1 = |what: &str| {
            if cfg.dimension != 1 {
                Err(ConfigError::field("dimension", format!("{what} runs in d = 1")))
            } else {
                Ok(())
            }
        };
        Ok(match cfg.kind {
            Kind::FieldValidate => {
                let separations = cfg.extra_or("separations", 20usize)?;
                if separations == 0 {
                    return Err(ConfigError::field("separations", "must be positive"));
                }
                let field = cfg.extra.get("field").map(String::as_str).unwrap_or("circle");
                let path = match field {
                    "circle" => {
                        d1("the circle field")?;
                        let (modes, points) = modes_points(cfg)?;
                        FieldPath::Circle { modes, points }
                    }
                    "star" => {
                        let params = star_params(cfg)?;
                        let points = cfg.require("grid-points", cfg.grid_points)?;
                        let grid = GridSpec::new(cfg.dimension, points, 2.0, 1.0).map_err(field_err("grid-points"))?;
                        FieldPath::Star { grid, params }
                    }
                    other => return Err(ConfigError::field("field", format!("expected circle or star, got `{other}`"))),
                };
                let n = match &path {
                    FieldPath::Circle { points, .. } => *points,
                    FieldPath::Star { grid, .. } => grid.points_per_axis,
                };
                if 2 * separations > n {
                    return Err(ConfigError::field("separations", "needs at most grid-points/2 separations"));
                }
                Plan::FieldValidate { path, separations }
            }
            Kind::FbMoments => {
                d1("the circle moment check")?;
                check_betas(&cfg.beta, 0.0, 1.0)?;
                let (modes, points) = modes_points(cfg)?;
                Plan::FbMoments { betas: cfg.beta.clone(), modes, points }
            }
            Kind::NegativeMoment => {
                d1("the circle moment check")?;
                check_betas(&cfg.beta, 0.0, 1.0)?;
                let (modes, points) = modes_points(cfg)?;
                Plan::NegativeMoment { betas: cfg.beta.clone(), modes, points }
            }
            Kind::Onsager => {
                d1("the Onsager suite")?;
                let n_max = cfg.extra_or("n-max", 6usize)?;
                if n_max == 0 {
                    return Err(ConfigError::field("n-max", "must be at least 1"));
                }
                let smooth_variance = cfg.extra_or("smooth-variance", 1.3)?;
                let smooth_length = cfg.extra_or("smooth-length", 0.2)?;
                if !(smooth_variance > 0.0 && smooth_length > 0.0) {
                    return Err(ConfigError::field("smooth-variance", "variance and length must be positive"));
                }
                Plan::Onsager {
                    n_max,
                    star: star_params(cfg)?,
                    smooth_variance,
                    smooth_length,
                    smooth_modes: cfg.extra_or("smooth-modes", 64usize)?,
                }
            }
            Kind::MinDistIntegral => {
                let n = cfg.extra_or("n-points", 2usize)?;
                if n < 2 {
                    return Err(ConfigError::field("n-points", "needs at least two points"));
                }
                check_betas(&cfg.beta, 0.0, (cfg.dimension as f64).sqrt())?;
                Plan::MinDist { n, betas: cfg.beta.clone(), dim: cfg.dimension }
            }
            Kind::MalliavinSmallball | Kind::SobolevSmallball => {
                d1("the small-ball experiment")?;
                let beta = cfg.single_beta()?;
                check_betas(&[beta], 0.0, 1.0)?;
                let (modes, points) = modes_points(cfg)?;
                let (quantity, eps, invariants) = if cfg.kind == Kind::MalliavinSmallball {
                    (SmallBallQuantity::DetGamma, eps_grid(cfg, -6.0, 2.0)?, cfg.extra_or("invariant-realizations", 1000usize)?)
                } else {
                    let s = cfg.extra_or("s", -0.5)?;
                    if !(s < 0.0) {
                        return Err(ConfigError::field("s", "the small-ball norm needs s < 0"));
                    }
                    (SmallBallQuantity::sobolev(s), eps_grid(cfg, -4.0, 1.0)?, 0)
                };
                Plan::SmallBall { quantity, beta, modes, points, eps, invariants }
            }
            Kind::Density => {
                d1("the density experiment")?;
                check_betas(&cfg.beta, 0.0, 1.0)?;
                let (modes, points) = modes_points(cfg)?;
                let bins = cfg.extra_or("bins", 40usize)?;
                let range = cfg.extra_or("range", 4.0)?;
                if bins < 2 || !(range > 0.0) {
                    return Err(ConfigError::field("bins", "need at least 2 bins and a positive range"));
                }
                Plan::Density {
                    betas: cfg.beta.clone(),
                    modes,
                    points,
                    bins,
                    range,
                    doubling: cfg.extra_or("resolution-doubling", true)?,
                }
            }
            Kind::DecompositionScan => {
                d1("the decomposition scan")?;
                if cfg.alpha.is_empty() || cfg.alpha.iter().any(|&a| !(a > 0.0)) {
                    return Err(ConfigError::field("alpha", "expected a list of positive α"));
                }
                let points = cfg.grid_points.unwrap_or(1024);
                if points > 2048 {
                    return Err(ConfigError::field("grid-points", "dense eigen-solves are capped at 2048 points"));
                }
                let grid = GridSpec::new(1, points, 2.0, 2.0).map_err(field_err("grid-points"))?;
                let v = interval(cfg, "v", [0.8, 1.2])?;
                let w = interval(cfg, "w", [0.6, 1.4])?;
                if !(w.lo[0] < v.lo[0] && v.hi[0] < w.hi[0] && w.lo[0] >= 0.0 && w.hi[0] <= 2.0) {
                    return Err(ConfigError::field("v", "V must lie compactly inside W ⊂ [0, 2]"));
                }
                let center = 0.5 * (v.lo[0] + v.hi[0]);
                let ladder = GTilde::ladder(center);
                let gtilde = match cfg.extra.get("gtilde").map(String::as_str).unwrap_or("ladder") {
                    "ladder" => ladder.to_vec(),
                    "zero" => vec![ladder[0]],
                    "bump" => vec![ladder[1]],
                    "circle-remainder" => vec![ladder[2]],
                    other => return Err(ConfigError::field("gtilde", format!("unknown g̃ `{other}`"))),
                };
                if gtilde.contains(&GTilde::CircleRemainder) && w.hi[0] - w.lo[0] >= 1.0 {
                    return Err(ConfigError::field("w", "the circle remainder needs W of diameter < 1"));
                }
                let degree = cfg.extra_or("smoothstep-degree", DEFAULT_SMOOTHSTEP_DEGREE)?;
                Smoothstep::new(degree).map_err(field_err("smoothstep-degree"))?;
                let symbol_alphas = cfg.extra_list_or("symbol-alphas", vec![0.1, 0.3, 1.0])?;
                if symbol_alphas.iter().any(|&a| !(a >= 0.0)) {
                    return Err(ConfigError::field("symbol-alphas", "must be nonnegative"));
                }
                Plan::DecompositionScan { alphas: cfg.alpha.clone(), grid, gtilde, symbol_alphas, v, w, degree }
            }
        })
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CovarianceRow {
    pub separation: f64,
    pub empirical: f64,
    pub oracle: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MomentRow {
    pub moment: String,
    pub beta: f64,
    pub result: MomentResult,
    /// closed form of the exact field
    pub oracle: f64,
    /// direct 1-D quadrature of the same closed form
    pub quadrature: f64,
    /// double integral with the truncated covariance
    pub truncated_oracle: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NegativeMomentRow {
    pub beta: f64,
    pub result: MomentResult,
    /// |analytic continuation| Γ(1 − β²/2)Γ(1 + β²/2)
    pub continuation: f64,
    /// upper 95% bound below π/2
    pub below_pi_half: bool,
    /// this β minus the next one on the ladder: (mean, se)
    pub drop_to_next: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MinDistRow {
    pub n: usize,
    pub beta: f64,
    pub beta2: f64,
    pub result: MomentResult,
    pub closed_form: Option<f64>,
    pub z: Option<f64>,
    /// estimate ratio to the first rung and its standard error
    pub ratio: f64,
    pub ratio_se: f64,
    /// ratio of the full bound profile (d−β²)^{−⌊N/2⌋}N^{Nβ²/2d}
    pub profile_ratio: f64,
    /// ratio of (d−β²)^{−⌊N/2⌋} alone
    pub bare_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct InvariantSummary {
    pub realizations: usize,
    /// min over realizations of det γ / (Re I₁)²
    pub worst_det_ratio: f64,
    /// max of |Im I₁| / Re I₁
    pub worst_im_ratio: f64,
    pub worst_margin_first: f64,
    pub worst_margin_second: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DensityRow {
    pub beta: f64,
    pub modes: usize,
    pub peak_height: f64,
    pub peak_x: f64,
    pub peak_y: f64,
    pub outside_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DensitySummary {
    pub rows: Vec<DensityRow>,
    pub strictly_decreasing: bool,
    /// max relative peak change under resolution doubling
    pub max_relative_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NamedScan {
    pub gtilde: String,
    pub scan: EigenScan,
    pub nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BandRow {
    pub alpha: f64,
    pub band: SymbolBand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DecompositionSummary {
    pub baseline: NamedScan,
    pub scans: Vec<NamedScan>,
    pub bands: Vec<BandRow>,
    pub c1_drift: f64,
    pub c2_drift: f64,
}

/// Typed results, returned alongside the files written.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Outcome {
    FieldValidate { rows: Vec<CovarianceRow>, max_abs_z: f64 },
    FbMoments { rows: Vec<MomentRow> },
    NegativeMoment { rows: Vec<NegativeMomentRow> },
    Onsager { reports: Vec<OnsagerReport> },
    MinDist { rows: Vec<MinDistRow> },
    SmallBall { curve: SmallBallCurve, signature: SmallBallSignature, invariants: Option<InvariantSummary> },
    Density(DensitySummary),
    DecompositionScan(DecompositionSummary),
}

fn stream(cfg: &ExperimentConfig, offset: u64, samples: usize) -> ChainPlan {
    ChainPlan::new(cfg.master_seed.wrapping_add(offset), cfg.chains, samples)
}

pub fn execute(cfg: &ExperimentConfig, plan: &Plan, out: &mut ArtifactWriter) -> Result<Outcome> {
    let samples = cfg.mc_samples.unwrap_or(0);
    let chains = stream(cfg, 0, samples);
    Ok(match plan {
        Plan::FieldValidate { path, separations } => field_validate(path, *separations, &chains, out)?,
        Plan::FbMoments { betas, modes, points } => fb_moments(betas, *modes, *points, &chains, out)?,
        Plan::NegativeMoment { betas, modes, points } => negative_moment(betas, *modes, *points, &chains, out)?,
        Plan::Onsager { n_max, star, smooth_variance, smooth_length, smooth_modes } => {
            let seed = Arc::new(seed_covariance_default(1)?);
            let circle = onsager_scan(&CovarianceOracle::CircleExact, *n_max, &stream(cfg, 0, samples))?;
            let stars = star_onsager_scan(star, seed, *n_max, &stream(cfg, 1, samples))?;
            let gauss = CovarianceOracle::SmoothGaussian { variance: *smooth_variance, length: *smooth_length };
            let smooth_a = smooth_onsager_scan(&gauss, *n_max, &stream(cfg, 2, samples))?;
            let trunc = CovarianceOracle::CircleTruncated { modes: *smooth_modes };
            let smooth_b = smooth_onsager_scan(&trunc, *n_max, &stream(cfg, 3, samples))?;
            let reports = vec![circle, stars.regularized, stars.tail, smooth_a, smooth_b];
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| vec![r.inequality_id.clone(), r.trials.to_string(), r.violations.to_string(), num(r.fitted_c), num(r.worst_margin)])
                .collect();
            out.csv("onsager.csv", &["inequality-id", "trials", "violations", "fitted-C", "worst-margin"], &rows)?;
            out.json("onsager.json", &reports)?;
            Outcome::Onsager { reports }
        }
        Plan::MinDist { n, betas, dim } => min_dist(*n, betas, *dim, &chains, out)?,
        Plan::SmallBall { quantity, beta, modes, points, eps, invariants } => {
            smallball(cfg, *quantity, *beta, *modes, *points, eps, *invariants, out)?
        }
        Plan::Density { betas, modes, points, bins, range, doubling } => {
            density(betas, *modes, *points, *bins, *range, *doubling, &chains, out)?
        }
        Plan::DecompositionScan { alphas, grid, gtilde, symbol_alphas, v, w, degree } => {
            decomposition(alphas, grid, gtilde, symbol_alphas, v, w, *degree, out)?
        }
    })
}

fn field_validate(path: &FieldPath, separations: usize, plan: &ChainPlan, out: &mut ArtifactWriter) -> Result<Outcome> {
    let spec = match path {
        FieldPath::Circle { modes, points } => SynthesisSpec::Circle { modes: *modes, points: *points },
        FieldPath::Star { grid, params } => SynthesisSpec::Star {
            grid: *grid,
            params: *params,
            seed: Arc::new(seed_covariance_default(grid.dim)?),
        },
    };
    let synth = spec.build()?;
    let oracle = synth.oracle();
    let grid = synth.grid();
    let n = grid.points_per_axis;
    let lags: Vec<usize> = (0..separations).map(|k| k * (n / 2) / separations).collect();
    let len = grid.len();
    let shifted = |j: usize, m: usize| match grid.dim {
        1 => (j + m) % n,
        _ => ((j / n + m) % n) * n + j % n,
    };
    let products = map_samples(&spec, plan, |field| {
        let v = field.values();
        Ok(lags
            .iter()
            .map(|&m| (0..len).map(|j| v[j] * v[shifted(j, m)]).sum::<f64>() / len as f64)
            .collect::<Vec<f64>>())
    })?;
    let h = grid.spacing();
    let mut rows = Vec::new();
    for (k, &m) in lags.iter().enumerate() {
        let col: Vec<f64> = products.iter().map(|p| p[k]).collect();
        let r = MomentResult::from_real_samples(&col);
        let o = oracle.eval_distance(m as f64 * h)?;
        rows.push(CovarianceRow {
            separation: m as f64 * h,
            empirical: r.value.re,
            oracle: o,
            std_error: r.std_error,
            z: r.z_score(Complex64::new(o, 0.0)),
        });
    }
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.separation), num(r.empirical), num(r.oracle), num(r.std_error), num(r.z)])
        .collect();
    out.csv("covariance.csv", &["separation", "empirical", "oracle", "std-error", "z"], &csv)?;
    Ok(Outcome::FieldValidate { rows, max_abs_z })
}

/// μ_β(S¹) for each β from shared circle samples.
fn circle_masses(betas: &[f64], modes: usize, points: usize, plan: &ChainPlan) -> Result<Vec<Vec<Complex64>>> {
    let params: Vec<ChaosParams> = betas.iter().map(|&b| ChaosParams::new(b, 1)).collect::<std::result::Result<_, _>>()?;
    let one = TestFunction::constant(GridSpec::circle(points)?, 1.0)?;
    Ok(map_samples(&SynthesisSpec::Circle { modes, points }, plan, |field| {
        params
            .iter()
            .map(|p| chaos_integral(&renormalized_exponential(field, p)?, &one))
            .collect::<chaoslab::error::Result<Vec<_>>>()
    })?)
}

const MOMENT_COLUMNS: [&str; 13] = [
    "moment", "beta", "value-re", "value-im", "se-re", "se-im", "oracle", "quadrature", "truncated-oracle", "z", "n-samples",
    "a", "b",
];

fn fb_moments(betas: &[f64], modes: usize, points: usize, plan: &ChainPlan, out: &mut ArtifactWriter) -> Result<Outcome> {
    let masses = circle_masses(betas, modes, points, plan)?;
    let one = TestFunction::constant(GridSpec::circle(points)?, 1.0)?;
    let trunc = CovarianceOracle::CircleTruncated { modes };
    let mut rows = Vec::new();
    for (k, &beta) in betas.iter().enumerate() {
        let b2 = beta * beta;
        let sq: Vec<Complex64> = masses.iter().map(|m| m[k] * m[k]).collect();
        let abs: Vec<f64> = masses.iter().map(|m| m[k].norm_sqr()).collect();
        let cases = [
            ("mu^2", MomentResult::from_samples(&sq), fb_moment(Complex64::new(-b2, 0.0), 2.0)?.re, circle_power_integral(b2)?, MomentSign::Minus),
            ("|mu|^2", MomentResult::from_real_samples(&abs), circle_power_closed_form(-b2)?, circle_power_integral(-b2)?, MomentSign::Plus),
        ];
        for (name, result, oracle, quadrature, sign) in cases {
            rows.push(MomentRow {
                moment: name.to_string(),
                beta,
                result,
                oracle,
                quadrature,
                truncated_oracle: second_moment_quadrature(beta, &one, &trunc, sign)?,
                z: result.z_score(Complex64::new(oracle, 0.0)),
            });
        }
    }
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (a, b) = if r.moment == "mu^2" { (2, 0) } else { (1, 1) };
            vec![
                r.moment.clone(),
                num(r.beta),
                num(r.result.value.re),
                num(r.result.value.im),
                num(r.result.std_error_re),
                num(r.result.std_error_im),
                num(r.oracle),
                num(r.quadrature),
                num(r.truncated_oracle),
                num(r.z),
                r.result.n_samples.to_string(),
                a.to_string(),
                b.to_string(),
            ]
        })
        .collect();
    out.csv("moments.csv", &MOMENT_COLUMNS, &csv)?;
    Ok(Outcome::FbMoments { rows })
}

fn negative_moment(betas: &[f64], modes: usize, points: usize, plan: &ChainPlan, out: &mut ArtifactWriter) -> Result<Outcome> {
    let samples = negative_moment_samples(betas, modes, points, plan)?;
    let col = |k: usize| -> Vec<f64> { samples.iter().map(|r| r[k]).collect() };
    let mut rows = Vec::new();
    for (k, &beta) in betas.iter().enumerate() {
        let result = MomentResult::from_real_samples(&col(k));
        let b2 = beta * beta;
        let continuation = fb_moment(Complex64::new(-b2, 0.0), -1.0)?.norm();
        let drop_to_next = (k + 1 < betas.len()).then(|| {
            let diff: Vec<f64> = samples.iter().map(|r| r[k] - r[k + 1]).collect();
            (mean(&diff), batch_means_se(&diff, DEFAULT_BATCHES))
        });
        rows.push(NegativeMomentRow {
            beta,
            below_pi_half: result.value.re + Z95 * result.std_error < 0.5 * PI,
            result,
            continuation,
            drop_to_next,
        });
    }
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.beta),
                num(r.result.value.re),
                num(r.result.std_error),
                num(r.continuation),
                num(0.5 * PI),
                r.below_pi_half.to_string(),
                r.drop_to_next.map_or(String::new(), |d| num(d.0)),
                r.drop_to_next.map_or(String::new(), |d| num(d.1)),
                r.result.n_samples.to_string(),
            ]
        })
        .collect();
    out.csv(
        "negative-moment.csv",
        &["beta", "value", "std-error", "continuation", "pi-half", "below-pi-half", "drop-to-next", "drop-se", "n-samples"],
        &csv,
    )?;
    Ok(Outcome::NegativeMoment { rows })
}

fn min_dist(n: usize, betas: &[f64], dim: usize, plan: &ChainPlan, out: &mut ArtifactWriter) -> Result<Outcome> {
    let d = dim as f64;
    let half = (n / 2) as i32;
    let results: Vec<MomentResult> = betas
        .iter()
        .map(|&b| min_dist_integral_mc(n, b, dim, plan, &MinDistOptions::default()))
        .collect::<std::result::Result<_, _>>()?;
    let (b0, r0) = (betas[0] * betas[0], results[0]);
    let rows: Vec<MinDistRow> = betas
        .iter()
        .zip(&results)
        .map(|(&beta, r)| {
            let b2 = beta * beta;
            let closed_form = (n == 2 && dim == 1).then(|| min_dist_two_point_closed_form(b2));
            let ratio = r.value.re / r0.value.re;
            let rel = if b2 == b0 {
                0.0
            } else {
                ((r.std_error / r.value.re).powi(2) + (r0.std_error / r0.value.re).powi(2)).sqrt()
            };
            MinDistRow {
                n,
                beta,
                beta2: b2,
                result: *r,
                z: closed_form.map(|c| r.z_score(Complex64::new(c, 0.0))),
                closed_form,
                ratio,
                ratio_se: ratio * rel,
                profile_ratio: min_dist_bound_profile(n, b2, dim) / min_dist_bound_profile(n, b0, dim),
                bare_ratio: ((d - b0) / (d - b2)).powi(half),
            }
        })
        .collect();
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.beta),
                num(r.beta2),
                num(r.result.value.re),
                num(r.result.std_error),
                r.closed_form.map_or(String::new(), num),
                r.z.map_or(String::new(), num),
                num(r.ratio),
                num(r.ratio_se),
                num(r.profile_ratio),
                num(r.bare_ratio),
            ]
        })
        .collect();
    out.csv(
        "min-dist.csv",
        &["n", "beta", "beta2", "value", "std-error", "closed-form", "z", "ratio", "ratio-se", "profile-ratio", "bare-ratio"],
        &csv,
    )?;
    Ok(Outcome::MinDist { rows })
}

fn invariants(beta: f64, modes: usize, points: usize, plan: &ChainPlan, out: &mut ArtifactWriter) -> Result<InvariantSummary> {
    let grid = GridSpec::circle(points)?;
    let spec = SynthesisSpec::Circle { modes, points };
    let lab = MalliavinLab::new(grid, &spec.build()?.oracle())?;
    let f = TestFunction::constant(grid, 1.0)?;
    let params = ChaosParams::new(beta, 1)?;
    let rows = map_samples(&spec, plan, |field| {
        let chaos = renormalized_exponential(field, &params)?;
        let st = lab.stats(&chaos, &f)?;
        let mut first = f64::INFINITY;
        let mut second = f64::INFINITY;
        for h in lab.adversarial_directions(&chaos, &f)? {
            let m = lab.projection_margins(&chaos, &f, &h)?;
            first = first.min(m.first);
            second = second.min(m.second);
        }
        Ok([st.det_gamma, st.i1.re, st.i1.im, st.i2.norm(), st.d2_norm_sq, first, second])
    })?;
    let csv: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&v| num(v)).collect()).collect();
    out.csv(
        "malliavin-stats.csv",
        &["det-gamma", "i1-re", "i1-im", "i2-abs", "d2-norm-sq", "margin-first", "margin-second"],
        &csv,
    )?;
    let fold_min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let worst_det_ratio = fold_min(&mut rows.iter().map(|r| r[0] / (r[1] * r[1])));
    let worst_im_ratio = rows.iter().map(|r| r[2].abs() / r[1]).fold(0.0, f64::max);
    let worst_margin_first = fold_min(&mut rows.iter().map(|r| r[5]));
    let worst_margin_second = fold_min(&mut rows.iter().map(|r| r[6]));
    Ok(InvariantSummary {
        realizations: rows.len(),
        passed: worst_det_ratio >= -1e-9 && worst_im_ratio <= 1e-6 && worst_margin_first >= -1e-9 && worst_margin_second >= -1e-9,
        worst_det_ratio,
        worst_im_ratio,
        worst_margin_first,
        worst_margin_second,
    })
}

#[allow(clippy::too_many_arguments)]
fn smallball(
    cfg: &ExperimentConfig,
    quantity: SmallBallQuantity,
    beta: f64,
    modes: usize,
    points: usize,
    eps: &[f64],
    invariant_count: usize,
    out: &mut ArtifactWriter,
) -> Result<Outcome> {
    let grid = GridSpec::circle(points)?;
    let f = TestFunction::constant(grid, 1.0)?;
    let spec = SynthesisSpec::Circle { modes, points };
    let plan = stream(cfg, 0, cfg.mc_samples.unwrap_or(0));
    let values = smallball_samples(quantity, beta, &f, &spec, &plan)?;
    let curve = SmallBallCurve::from_values(quantity.name(), beta, &values, eps)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).map_err(|e| crate::error::HarnessError::output(out.dir(), e))?;
    let (header, rows) = parse_core_csv(&buf);
    let name = match quantity {
        SmallBallQuantity::DetGamma => "smallball-det-gamma.csv",
        SmallBallQuantity::SobolevNorm { .. } => "smallball-sobolev.csv",
    };
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(name, &cols, &rows)?;
    let signature = curve.signature();
    out.json("signature.json", &signature)?;
    let invariants = if invariant_count > 0 {
        let s = invariants(beta, modes, points, &stream(cfg, 1, invariant_count), out)?;
        out.json("invariants.json", &s)?;
        Some(s)
    } else {
        None
    };
    Ok(Outcome::SmallBall { curve, signature, invariants })
}

fn parse_core_csv(buf: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let text = String::from_utf8_lossy(buf);
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[allow(clippy::too_many_arguments)]
fn density(
    betas: &[f64],
    modes: usize,
    points: usize,
    bins: usize,
    range: f64,
    doubling: bool,
    plan: &ChainPlan,
    out: &mut ArtifactWriter,
) -> Result<Outcome> {
    let width = 2.0 * range / bins as f64;
    let mut rows = Vec::new();
    let scales: &[usize] = if doubling { &[1, 2] } else { &[1] };
    for &s in scales {
        let masses = circle_masses(betas, modes * s, points * s, plan)?;
        let n = masses.len() as f64;
        for (k, &beta) in betas.iter().enumerate() {
            let mut counts = vec![0usize; bins * bins];
            let mut outside = 0usize;
            for m in &masses {
                let z = m[k];
                let ix = ((z.re - (1.0 - range)) / width).floor();
                let iy = ((z.im + range) / width).floor();
                if ix >= 0.0 && iy >= 0.0 && (ix as usize) < bins && (iy as usize) < bins {
                    counts[ix as usize * bins + iy as usize] += 1;
                } else {
                    outside += 1;
                }
            }
            let dens = |c: usize| c as f64 / (n * width * width);
            let centre = |i: usize, lo: f64| lo + (i as f64 + 0.5) * width;
            let (imax, &cmax) = counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).unwrap_or((0, &0));
            let hist: Vec<Vec<String>> = (0..bins * bins)
                .map(|i| vec![num(centre(i / bins, 1.0 - range)), num(centre(i % bins, -range)), num(dens(counts[i]))])
                .collect();
            out.csv(&format!("hist-beta-{beta}-modes-{}.csv", modes * s), &["x", "y", "density"], &hist)?;
            rows.push(DensityRow {
                beta,
                modes: modes * s,
                peak_height: dens(cmax),
                peak_x: centre(imax / bins, 1.0 - range),
                peak_y: centre(imax % bins, -range),
                outside_fraction: outside as f64 / n,
            });
        }
    }
    let base: Vec<&DensityRow> = rows.iter().filter(|r| r.modes == modes).collect();
    let strictly_decreasing = base.windows(2).all(|w| w[1].peak_height < w[0].peak_height);
    let max_relative_change = doubling.then(|| {
        base.iter()
            .filter_map(|r| rows.iter().find(|d| d.modes == 2 * modes && d.beta == r.beta).map(|d| (d.peak_height / r.peak_height - 1.0).abs()))
            .fold(0.0, f64::max)
    });
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.beta), r.modes.to_string(), num(r.peak_height), num(r.peak_x), num(r.peak_y), num(r.outside_fraction)])
        .collect();
    out.csv("density.csv", &["beta", "modes", "peak-height", "peak-x", "peak-y", "outside-fraction"], &csv)?;
    Ok(Outcome::Density(DensitySummary { rows, strictly_decreasing, max_relative_change }))
}

fn named_scan(gtilde: String, scan: EigenScan) -> NamedScan {
    NamedScan { nonincreasing: scan.is_nonincreasing(), gtilde, scan }
}

#[allow(clippy::too_many_arguments)]
fn decomposition(
    alphas: &[f64],
    grid: &GridSpec,
    gtilde: &[GTilde],
    symbol_alphas: &[f64],
    v: &AxisBox,
    w: &AxisBox,
    degree: usize,
    out: &mut ArtifactWriter,
) -> Result<Outcome> {
    let seed: SeedCovariance = seed_covariance_default(1)?;
    let xi: Vec<f64> = (0..=120).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0)).collect();
    let mut bands = Vec::new();
    for &a in symbol_alphas {
        let t = SymbolTable::build(&xi, &seed, a)?;
        let mut buf = Vec::new();
        t.write_csv(&mut buf).map_err(|e| crate::error::HarnessError::output(out.dir(), e))?;
        let (header, rows) = parse_core_csv(&buf);
        let cols: Vec<&str> = header.iter().map(String::as_str).collect();
        out.csv(&format!("symbols-alpha-{a}.csv"), &cols, &rows)?;
        bands.push(BandRow { alpha: a, band: t.u_alpha_band() });
    }
    let drift = |f: &dyn Fn(&SymbolBand) -> f64| {
        let v: Vec<f64> = bands.iter().map(|b| f(&b.band)).collect();
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let (c1_drift, c2_drift) = (drift(&|b| b.c1), drift(&|b| b.c2));
    let baseline = named_scan("none".into(), min_eig_scan(alphas, grid, &seed, None)?);
    let pair = partition_of_unity(v, w, grid, &Smoothstep::new(degree)?)?;
    let cx = cx_matrix(grid, &seed)?;
    let mut scans = Vec::new();
    for g in gtilde {
        let r = assemble_r(&pair, &cx, &g.matrix(&pair, &seed)?)?;
        scans.push(named_scan(g.id(), min_eig_scan(alphas, grid, &seed, Some(&r))?));
    }
    let summary = DecompositionSummary { baseline, scans, bands, c1_drift, c2_drift };
    out.json("scan.json", &summary)?;
    Ok(Outcome::DecompositionScan(summary))
}

/// Files and results of one run.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub dir: std::path::PathBuf,
    pub manifest: crate::artifact::Manifest,
    pub data_files: Vec<std::path::PathBuf>,
    pub plot_files: Vec<std::path::PathBuf>,
    pub outcome: Outcome,
}

/// Validates, runs, writes data, plots and manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    let started = std::time::Instant::now();
    let plan = Plan::from_config(cfg)?;
    let mut out = ArtifactWriter::create(cfg)?;
    let outcome = execute(cfg, &plan, &mut out)?;
    let data_files = out.files().to_vec();
    let plot_files = crate::plot::plot(out.dir(), crate::plot::PlotKind::for_experiment(cfg.kind))?;
    let manifest = crate::artifact::Manifest {
        experiment_id: cfg.experiment_id.clone(),
        kind: cfg.kind.as_str().to_string(),
        master_seed: cfg.master_seed,
        chains: cfg.chains,
        threads: rayon::current_num_threads(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: cfg.entries.clone(),
        data_files: crate::artifact::file_names(&data_files),
        plot_files: crate::artifact::file_names(&plot_files),
    };
    manifest.write(out.dir())?;
    Ok(RunArtifact { dir: out.dir().to_path_buf(), manifest, data_files, plot_files, outcome })
}
