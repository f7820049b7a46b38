//! Onsager-type energy inequalities and min-distance integrals, checked on
//! random point configurations.

use std::sync::Arc;

use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::field::{CovarianceOracle, LayeredNoiseParams, SeedCovariance};
use crate::moments::{energy, EnergyConfig};
use crate::rng::ChainPlan;
use crate::stats::MomentResult;

/// Calibration configurations refined by local ascent.
pub const ASCENT_STARTS: usize = 16;
pub const ASCENT_STEPS: usize = 400;
const CALIBRATION_SEED_OFFSET: u64 = 0x6f6e_7361_6765_7200;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OnsagerReport {
    pub inequality_id: String,
    pub trials: usize,
    pub violations: usize,
    #[serde(rename = "fitted-C")]
    pub fitted_c: f64,
    pub worst_margin: f64,
}

impl OnsagerReport {
    fn from_margins(id: String, fitted_c: f64, margins: &[f64]) -> Self {
        Self {
            inequality_id: id,
            trials: margins.len(),
            violations: margins.iter().filter(|&&m| m > 0.0).count(),
            fitted_c,
            worst_margin: margins.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// ½ Σ_j log(1/d_j), d_j the distance from z_j to its nearest neighbour,
/// floored at `floor` when given.
pub fn nearest_neighbour_log_sum(points: &[f64], dist: impl Fn(f64, f64) -> f64, floor: Option<f64>) -> f64 {
    let mut s = 0.0;
    for (j, &zj) in points.iter().enumerate() {
        let mut d = f64::INFINITY;
        for (k, &zk) in points.iter().enumerate() {
            if k != j {
                d = d.min(dist(zj, zk));
            }
        }
        if let Some(e) = floor {
            d = d.max(e);
        }
        s += 0.5 * (1.0 / d).ln();
    }
    s
}

/// Draws N uniform in 1..=n_max and N positions of each charge in the
/// oracle's domain (grid positions for matrix oracles).
fn random_config<R: Rng + ?Sized>(oracle: &CovarianceOracle, n_max: usize, rng: &mut R) -> (usize, Vec<f64>) {
    let n = rng.random_range(1..=n_max);
    let pts = match oracle {
        CovarianceOracle::Dense(m) => {
            let mut idx: Vec<usize> = Vec::with_capacity(2 * n);
            while idx.len() < 2 * n {
                let i = rng.random_range(0..m.n());
                if !idx.contains(&i) {
                    idx.push(i);
                }
            }
            idx.into_iter().map(|i| m.position(i)).collect()
        }
        _ => {
            let (a, b) = oracle.domain();
            (0..2 * n).map(|_| a + (b - a) * rng.random::<f64>()).collect()
        }
    };
    (n, pts)
}

fn split(n: usize, pts: &[f64]) -> Result<EnergyConfig> {
    EnergyConfig::new(pts[..n].to_vec(), pts[n..].to_vec())
}

/// (𝓔 − ½Σ log 1/d_j) / N².
fn excess_per_n2(oracle: &CovarianceOracle, n: usize, pts: &[f64]) -> Result<f64> {
    let e = energy(oracle, &split(n, pts)?)?;
    let l = nearest_neighbour_log_sum(pts, |a, b| oracle.distance(a, b), None);
    Ok((e - l) / (n * n) as f64)
}

fn ascend<R: Rng + ?Sized>(oracle: &CovarianceOracle, n: usize, start: Vec<f64>, rng: &mut R) -> f64 {
    let (a, b) = oracle.domain();
    let wrap = oracle.is_circle();
    let mut best = start;
    let mut value = excess_per_n2(oracle, n, &best).unwrap_or(f64::NEG_INFINITY);
    let mut step = 0.1 * (b - a);
    let mut stalls = 0;
    for _ in 0..ASCENT_STEPS {
        let j = rng.random_range(0..best.len());
        let z: f64 = StandardNormal.sample(rng);
        let mut cand = best.clone();
        let mut v = cand[j] + step * z;
        v = if wrap { a + (v - a).rem_euclid(b - a) } else { v.clamp(a, b) };
        cand[j] = v;
        match excess_per_n2(oracle, n, &cand) {
            Ok(f) if f > value => {
                value = f;
                best = cand;
                stalls = 0;
            }
            _ => {
                stalls += 1;
                if stalls >= 20 {
                    step *= 0.7;
                    stalls = 0;
                }
            }
        }
    }
    value
}

/// Scan of 𝓔 ≤ ½ Σ_j log(1/d_j) + C N²: C is fitted as the largest excess on
/// a calibration batch (refined by local ascent), then violations are counted
/// on a fresh batch of `plan.samples` configurations.
pub fn onsager_scan(oracle: &CovarianceOracle, n_max: usize, plan: &ChainPlan) -> Result<OnsagerReport> {
    if n_max == 0 {
        return Err(invalid("N-max", "must be at least 1"));
    }
    if matches!(oracle, CovarianceOracle::Dense(_)) {
        return Err(invalid("oracle", "the calibrated scan needs a continuous-position oracle"));
    }
    let calib = ChainPlan::new(plan.master_seed.wrapping_add(CALIBRATION_SEED_OFFSET), plan.chains, plan.samples);
    let mut scored = calib.run(|_, rng, count| {
        (0..count)
            .map(|_| {
                let (n, pts) = random_config(oracle, n_max, rng);
                Ok((excess_per_n2(oracle, n, &pts)?, n, pts))
            })
            .collect()
    })?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(ASCENT_STARTS);
    let starts = Arc::new(scored);
    let ascent = ChainPlan::new(calib.master_seed.wrapping_add(1), starts.len(), starts.len());
    let refined = ascent.run(|chain, rng, count| {
        Ok(if count == 0 {
            Vec::new()
        } else {
            let (v, n, pts) = &starts[chain];
            vec![v.max(ascend(oracle, *n, pts.clone(), rng))]
        })
    })?;
    let fitted_c = refined.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let margins = plan.run(|_, rng, count| {
        (0..count)
            .map(|_| {
                let (n, pts) = random_config(oracle, n_max, rng);
                let e = energy(oracle, &split(n, &pts)?)?;
                let l = nearest_neighbour_log_sum(&pts, |a, b| oracle.distance(a, b), None);
                Ok(e - l - fitted_c * (n * n) as f64)
            })
            .collect()
    })?;
    Ok(OnsagerReport::from_margins(
        format!("onsager-log[{}]", oracle.kernel_id()),
        fitted_c,
        &margins,
    ))
}

/// Scan of 𝓔(R) ≤ N·M with M the sup variance of a bounded kernel.
pub fn smooth_onsager_scan(oracle: &CovarianceOracle, n_max: usize, plan: &ChainPlan) -> Result<OnsagerReport> {
    let m = oracle
        .sup_variance()
        .ok_or_else(|| invalid("oracle", format!("{} has no finite sup variance", oracle.kernel_id())))?;
    if n_max == 0 {
        return Err(invalid("N-max", "must be at least 1"));
    }
    let margins = plan.run(|_, rng, count| {
        (0..count)
            .map(|_| {
                let (n, pts) = random_config(oracle, n_max, rng);
                Ok(energy(oracle, &split(n, &pts)?)? - n as f64 * m)
            })
            .collect()
    })?;
    Ok(OnsagerReport::from_margins(
        format!("onsager-smooth[{}]", oracle.kernel_id()),
        m,
        &margins,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct StarOnsagerReports {
    /// 𝓔(Y_δ) ≤ ½ Σ log 1/(d_j ∨ δ)
    pub regularized: OnsagerReport,
    /// 𝓔(Ŷ_δ(δ·)) ≤ ½ Σ log 1/d_j
    pub tail: OnsagerReport,
}

/// Both ⋆-scale inequalities on configurations in [0, 1], constant 0.
pub fn star_onsager_scan(
    params: &LayeredNoiseParams,
    seed: Arc<SeedCovariance>,
    n_max: usize,
    plan: &ChainPlan,
) -> Result<StarOnsagerReports> {
    params.validate()?;
    if n_max == 0 {
        return Err(invalid("N-max", "must be at least 1"));
    }
    if seed.dim() != 1 {
        return Err(invalid("seed", "configurations are drawn on the line"));
    }
    let reg = CovarianceOracle::star_y_delta(*params, seed.clone());
    let tail = CovarianceOracle::StarTailRescaled { params: *params, seed };
    let delta = params.delta;
    let margins = plan.run(|_, rng, count| {
        (0..count)
            .map(|_| {
                let (n, pts) = random_config(&reg, n_max, rng);
                let cfg = split(n, &pts)?;
                let dist = |a: f64, b: f64| (a - b).abs();
                let m_reg = energy(&reg, &cfg)? - nearest_neighbour_log_sum(&pts, dist, Some(delta));
                let m_tail = energy(&tail, &cfg)? - nearest_neighbour_log_sum(&pts, dist, None);
                Ok((m_reg, m_tail))
            })
            .collect()
    })?;
    let (mr, mt): (Vec<f64>, Vec<f64>) = margins.into_iter().unzip();
    Ok(StarOnsagerReports {
        regularized: OnsagerReport::from_margins(format!("onsager-star[{}]", reg.kernel_id()), 0.0, &mr),
        tail: OnsagerReport::from_margins(format!("onsager-star-tail[{}]", tail.kernel_id()), 0.0, &mt),
    })
}

/// Integrand options for [`min_dist_integral_mc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinDistOptions {
    /// Replace each nearest-neighbour distance m by min(m, 1).
    pub cap_at_one: bool,
    /// Extra factor |log m|^p per point (p = 1/2 and 1 for the log variants).
    pub log_power: f64,
    /// Replace m by max(δ, m) (super-critical variant).
    pub floor: Option<f64>,
    /// Exponent s of the pair proposal |v|^{−s}; defaults to min(β², 0.9d).
    pub proposal_exponent: Option<f64>,
    /// Mixture weight of the uniform proposal.
    pub uniform_weight: f64,
}

impl Default for MinDistOptions {
    fn default() -> Self {
        Self {
            cap_at_one: false,
            log_power: 0.0,
            floor: None,
            proposal_exponent: None,
            uniform_weight: 0.25,
        }
    }
}

/// Ball B(0,1) ⊂ ℝ^d, d ∈ {1, 2}, and the pair-offset proposal
/// g(v) = c |v|^{−s} on |v| ≤ 2.
struct BallGeometry {
    dim: usize,
    volume: f64,
    s: f64,
    g_norm: f64,
}

impl BallGeometry {
    fn new(dim: usize, s: f64) -> Self {
        let d = dim as f64;
        let (volume, sphere) = if dim == 1 { (2.0, 2.0) } else { (std::f64::consts::PI, 2.0 * std::f64::consts::PI) };
        // ∫_{|v|≤2} |v|^{−s} dv = sphere · 2^{d−s}/(d−s)
        let g_norm = (d - s) / (sphere * 2f64.powf(d - s));
        Self { dim, volume, s, g_norm }
    }

    fn uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        if self.dim == 1 {
            [2.0 * rng.random::<f64>() - 1.0, 0.0]
        } else {
            let r = rng.random::<f64>().sqrt();
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            [r * t.cos(), r * t.sin()]
        }
    }

    fn offset<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let d = self.dim as f64;
        let r = 2.0 * (1.0 - rng.random::<f64>()).powf(1.0 / (d - self.s));
        if self.dim == 1 {
            [if rng.random::<bool>() { r } else { -r }, 0.0]
        } else {
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            [r * t.cos(), r * t.sin()]
        }
    }

    fn g(&self, r: f64) -> f64 {
        if r > 2.0 {
            0.0
        } else {
            self.g_norm * r.powf(-self.s)
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// All partial matchings of {0..n} with at least one pair, grouped by size.
fn matchings_by_size(n: usize) -> Vec<Vec<Vec<(usize, usize)>>> {
    fn rec(free: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        let first = free[0];
        let rest = &free[1..];
        rec(rest, cur, out);
        for (k, &other) in rest.iter().enumerate() {
            let mut remaining: Vec<usize> = rest.to_vec();
            remaining.remove(k);
            cur.push((first, other));
            rec(&remaining, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    rec(&(0..n).collect::<Vec<_>>(), &mut Vec::new(), &mut all);
    let mut by = vec![Vec::new(); n / 2];
    for m in all {
        by[m.len() - 1].push(m);
    }
    by
}

/// MC estimate of ∫_{B(0,1)^N} Π_i (min_{j≠i}|z_i − z_j|)^{−β²/2} dz by
/// importance sampling from a mixture of the uniform law and pair-matching
/// proposals with offsets drawn from |v|^{−s}.
pub fn min_dist_integral_mc(n: usize, beta: f64, dim: usize, plan: &ChainPlan, opts: &MinDistOptions) -> Result<MomentResult> {
    if n < 2 {
        return Err(invalid("N", format!("needs at least two points, got {n}")));
    }
    if dim != 1 && dim != 2 {
        return Err(invalid("dimension", format!("expected 1 or 2, got {dim}")));
    }
    let d = dim as f64;
    let b2 = beta * beta;
    if !(beta > 0.0) || (opts.floor.is_none() && b2 >= d) {
        return Err(invalid("beta", format!("needs 0 < β² < d, got β² = {b2}")));
    }
    if !(opts.uniform_weight > 0.0 && opts.uniform_weight < 1.0) {
        return Err(invalid("uniform-weight", "must lie in (0, 1)"));
    }
    let s = opts.proposal_exponent.unwrap_or(b2.min(0.9 * d));
    if !(0.0..d).contains(&s) {
        return Err(invalid("proposal-exponent", format!("must lie in [0, d), got {s}")));
    }
    let geo = BallGeometry::new(dim, s);
    let groups = matchings_by_size(n);
    let pair_weight = (1.0 - opts.uniform_weight) / groups.len() as f64;
    let comp_weights: Vec<f64> = groups.iter().map(|g| pair_weight / g.len() as f64).collect();

    let values = plan.run(|_, rng, count| {
        let mut out = Vec::with_capacity(count);
        let mut z = vec![[0.0; 2]; n];
        let mut exact: Vec<(usize, usize, f64)> = Vec::with_capacity(n / 2);
        for _ in 0..count {
            exact.clear();
            if rng.random::<f64>() < opts.uniform_weight {
                for p in z.iter_mut() {
                    *p = geo.uniform(rng);
                }
            } else {
                let size = rng.random_range(0..groups.len());
                let m = &groups[size][rng.random_range(0..groups[size].len())];
                for p in z.iter_mut() {
                    *p = geo.uniform(rng);
                }
                for &(i, j) in m {
                    let v = geo.offset(rng);
                    z[j] = [z[i][0] + v[0], z[i][1] + v[1]];
                    exact.push((i, j, v[0].hypot(v[1])));
                }
            }
            if z.iter().any(|p| p[0] * p[0] + p[1] * p[1] > 1.0) {
                out.push(0.0);
                continue;
            }
            let mut dm = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let r = dist2(z[i], z[j]);
                    dm[i][j] = r;
                    dm[j][i] = r;
                }
            }
            // drawn offsets can be far below the resolution of the positions
            for &(i, j, r) in &exact {
                dm[i][j] = r;
                dm[j][i] = r;
            }
            let mut f = 1.0;
            for i in 0..n {
                let mut m = (0..n).filter(|&j| j != i).map(|j| dm[i][j]).fold(f64::INFINITY, f64::min);
                if opts.cap_at_one {
                    m = m.min(1.0);
                }
                if let Some(fl) = opts.floor {
                    m = m.max(fl);
                }
                f *= m.powf(-0.5 * b2);
                if opts.log_power != 0.0 {
                    f *= m.ln().abs().powf(opts.log_power);
                }
            }
            // q · V^N = w_u + Σ_m w_m Π_{(i,j)∈m} V g(z_j − z_i)
            let mut q = opts.uniform_weight;
            for (gi, group) in groups.iter().enumerate() {
                for m in group {
                    let mut prod = comp_weights[gi];
                    for &(i, j) in m {
                        prod *= geo.volume * geo.g(dm[i][j]);
                    }
                    q += prod;
                }
            }
            out.push(f * geo.volume.powi(n as i32) / q);
        }
        Ok(out)
    })?;
    Ok(MomentResult::from_real_samples(&values))
}

/// β-dependent part of the min-distance bound, (d − β²)^{−⌊N/2⌋} N^{Nβ²/(2d)};
/// the remaining factor C^N does not depend on β.
pub fn min_dist_bound_profile(n: usize, beta2: f64, dim: usize) -> f64 {
    let d = dim as f64;
    (d - beta2).powi(-((n / 2) as i32)) * (n as f64).powf(n as f64 * beta2 / (2.0 * d))
}

/// ∫∫_{[−1,1]²} |x − y|^{−e} dx dy = 2^{3−e}/((1−e)(2−e)).
pub fn min_dist_two_point_closed_form(e: f64) -> f64 {
    2f64.powf(3.0 - e) / ((1.0 - e) * (2.0 - e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::seed_covariance_default;
    use crate::quadrature::tanh_sinh;

    #[test]
    fn pure_log_single_pair_has_zero_margin() {
        let o = CovarianceOracle::PureLog;
        for (x, y) in [(0.1, 0.7), (0.25, 0.2501), (0.9, 0.05)] {
            let cfg = EnergyConfig::new(vec![x], vec![y]).unwrap();
            let e = energy(&o, &cfg).unwrap();
            let l = nearest_neighbour_log_sum(&[x, y], |a, b| (a - b).abs(), None);
            assert!((e - l).abs() < 1e-14);
        }
    }

    #[test]
    fn report_margin_sign_matches_violations() {
        let r = OnsagerReport::from_margins("t".into(), 0.0, &[-1.0, -0.5]);
        assert!(r.passed() && r.worst_margin <= 0.0);
        let r = OnsagerReport::from_margins("t".into(), 0.0, &[-1.0, 0.5, 0.1]);
        assert_eq!(r.violations, 2);
        assert!(r.worst_margin > 0.0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"fitted-C\"") && json.contains("\"worst-margin\"") && json.contains("\"inequality-id\""));
    }

    #[test]
    fn star_energy_vanishes_for_separated_points() {
        let seed = Arc::new(seed_covariance_default(1).unwrap());
        let p = LayeredNoiseParams::new(0.5, 1.0 / 64.0, 16).unwrap();
        let o = CovarianceOracle::star_y_delta(p, seed);
        let cfg = EnergyConfig::new(vec![0.0, 2.5], vec![1.2]).unwrap();
        assert_eq!(energy(&o, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn matchings_are_counted() {
        // partial matchings with ≥ 1 pair: n=4 → 6 + 3, n=5 → 10 + 15
        let m4 = matchings_by_size(4);
        assert_eq!((m4[0].len(), m4[1].len()), (6, 3));
        let m5 = matchings_by_size(5);
        assert_eq!((m5[0].len(), m5[1].len()), (10, 15));
    }

    #[test]
    fn two_point_closed_form_matches_quadrature() {
        for e in [0.25, 0.5, 0.75] {
            // ∫_{−2}^{2} (2 − |t|)|t|^{−e} dt
            let q = 2.0 * tanh_sinh(|t, _, _| (2.0 - t) * t.powf(-e), 0.0, 2.0, 1e-14);
            assert!((q - min_dist_two_point_closed_form(e)).abs() < 1e-10);
        }
        assert!((min_dist_two_point_closed_form(0.5) - 16.0 * 2f64.sqrt() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_beta_gives_volume_power() {
        let plan = ChainPlan::new(3, 4, 20_000);
        let r = min_dist_integral_mc(2, 1e-4, 1, &plan, &MinDistOptions::default()).unwrap();
        assert!(r.within(num_complex::Complex64::new(4.0, 0.0), 3.0), "{r:?}");
    }
}
