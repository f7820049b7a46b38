//! Moment oracles: energy functional, Fyodorov-Bouchaud formula, second-moment
//! quadrature, and Monte Carlo estimators to compare against them.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chaos::{chaos_integral, renormalized_exponential, ChaosParams, TestFunction};
use crate::error::{invalid, ChaosError, Result};
use crate::fft::GridFft;
use crate::field::{CovarianceOracle, SynthesisSpec};
use crate::mc::map_samples;
use crate::quadrature::{tanh_sinh, GaussLegendre};
use crate::rng::ChainPlan;
use crate::special::{check_gamma_pole, ln_gamma};
use crate::stats::{CompensatedSum, MomentResult};

/// Two families of points carrying opposite charges.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl EnergyConfig {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() + ys.len() < 2 {
            return Err(invalid("configuration", "needs at least two points in total"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("configuration", "positions must be finite"));
        }
        Ok(Self { xs, ys })
    }

    pub fn all_points(&self) -> Vec<f64> {
        self.xs.iter().chain(&self.ys).copied().collect()
    }
}

/// 𝓔 = −Σ_{j<k} C(x_j,x_k) − Σ_{j<k} C(y_j,y_k) + Σ_{j,k} C(x_j,y_k).
pub fn energy(oracle: &CovarianceOracle, cfg: &EnergyConfig) -> Result<f64> {
    let mut s = CompensatedSum::new();
    for group in [&cfg.xs, &cfg.ys] {
        for j in 0..group.len() {
            for k in (j + 1)..group.len() {
                s.add(-oracle.eval(group[j], group[k])?);
            }
        }
    }
    for &x in &cfg.xs {
        for &y in &cfg.ys {
            s.add(oracle.eval(x, y)?);
        }
    }
    Ok(s.value())
}

/// Γ(1 − pγ²/2) / Γ(1 − γ²/2)^p; for imaginary chaos pass γ² = −β².
pub fn fb_moment(gamma2: Complex64, p: f64) -> Result<Complex64> {
    if p == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let z1 = 1.0 - 0.5 * p * gamma2;
    let z2 = 1.0 - 0.5 * gamma2;
    check_gamma_pole(z1)?;
    check_gamma_pole(z2)?;
    if p == 1.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok((ln_gamma(z1)? - p * ln_gamma(z2)?).exp())
}

/// ∫_0^1 (2 sin πu)^e du by tanh-sinh quadrature, for e > −1.
pub fn circle_power_integral(e: f64) -> Result<f64> {
    if e <= -1.0 {
        return Err(invalid("exponent", format!("must exceed −1, got {e}")));
    }
    let half = tanh_sinh(|_, da, _| (2.0 * (PI * da).sin()).powf(e), 0.0, 0.5, 1e-15);
    Ok(2.0 * half)
}

/// Γ(1 + e) / Γ(1 + e/2)², the closed form of [`circle_power_integral`].
pub fn circle_power_closed_form(e: f64) -> Result<f64> {
    let v = ln_gamma(Complex64::new(1.0 + e, 0.0))? - 2.0 * ln_gamma(Complex64::new(1.0 + 0.5 * e, 0.0))?;
    Ok(v.exp().re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSign {
    /// ∬ ff e^{+β²C} = E[μ(f) conj(μ(f))]
    Plus,
    /// ∬ ff e^{−β²C} = E[μ(f)²]
    Minus,
}

impl MomentSign {
    fn factor(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// ∬ f(x) f(y) e^{±β²C(x,y)} dx dy on the grid of `f`.
///
/// Circle kernels use exact cell-pair averages of the kernel on every offset;
/// other kernels use point values off the diagonal and the closed-form
/// log-cell average on it.
pub fn second_moment_quadrature(beta: f64, f: &TestFunction, oracle: &CovarianceOracle, sign: MomentSign) -> Result<f64> {
    let grid = f.grid();
    let d = grid.dim as f64;
    if !(beta * beta < d) {
        return Err(invalid("beta", format!("needs β² < d, got β² = {}", beta * beta)));
    }
    if grid.dim != 1 {
        return Err(invalid("dimension", "second-moment quadrature is implemented for d = 1"));
    }
    let b2 = sign.factor() * beta * beta;
    if oracle.is_circle() && oracle.is_stationary() {
        circulant_second_moment(b2, f, oracle)
    } else {
        generic_second_moment(b2, f, oracle)
    }
}

fn circulant_second_moment(b2: f64, f: &TestFunction, oracle: &CovarianceOracle) -> Result<f64> {
    let grid = f.grid();
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let kernel = |r: f64| -> f64 {
        match oracle.eval_distance(r) {
            Ok(c) => (b2 * c).exp(),
            Err(_) => 0.0,
        }
    };
    let weights = cell_pair_weights(n, h, &kernel);
    let auto = circular_autocorrelation(f.values());
    let mut s = CompensatedSum::new();
    for m in 0..n {
        s.add(weights[m] * auto[m]);
    }
    Ok(h * h * s.value())
}

/// W_m = (1/h) ∫_{−h}^{h} K(mh + v)(1 − |v|/h) dv: average of K over a pair
/// of cells m apart.
pub(crate) fn cell_pair_average<K: Fn(f64) -> f64>(m: usize, h: f64, kernel: &K, gl: &GaussLegendre) -> f64 {
    let c = m as f64 * h;
    if m <= 1 {
        // the integrand may be singular at separation 0
        let right = tanh_sinh(|_, dv, _| kernel(c + dv) * (1.0 - dv / h), 0.0, h, 1e-15);
        let left = if m == 0 {
            right
        } else {
            tanh_sinh(|_, _, db| kernel(db) * (1.0 - (h - db) / h), 0.0, h, 1e-15)
        };
        (left + right) / h
    } else {
        let right = gl.integrate(|v| kernel(c + v) * (1.0 - v / h), 0.0, h);
        let left = gl.integrate(|v| kernel(c - v) * (1.0 - v / h), 0.0, h);
        (left + right) / h
    }
}

/// Cell-pair averages for m = 0..n−1 on a periodic grid.
pub(crate) fn cell_pair_weights<K: Fn(f64) -> f64>(n: usize, h: f64, kernel: &K) -> Vec<f64> {
    let gl = GaussLegendre::new(10);
    let mut w = vec![0.0; n];
    for (m, wm) in w.iter_mut().enumerate().take(n / 2 + 1) {
        *wm = cell_pair_average(m, h, kernel, &gl);
    }
    for m in (n / 2 + 1)..n {
        w[m] = w[n - m];
    }
    w
}

/// Cell-pair averages for m = 0..n−1 on a non-periodic grid.
pub(crate) fn cell_pair_toeplitz<K: Fn(f64) -> f64 + Sync>(n: usize, h: f64, kernel: &K) -> Vec<f64> {
    use rayon::prelude::*;
    let gl = GaussLegendre::new(10);
    (0..n).into_par_iter().map(|m| cell_pair_average(m, h, kernel, &gl)).collect()
}

/// R_m = Σ_j f_j f_{j+m mod n}.
pub(crate) fn circular_autocorrelation(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let fft = GridFft::new(n, 1);
    let mut g: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut g);
    for z in &mut g {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    fft.inverse(&mut g);
    g.iter().map(|z| z.re / n as f64).collect()
}

fn generic_second_moment(b2: f64, f: &TestFunction, oracle: &CovarianceOracle) -> Result<f64> {
    let grid = f.grid();
    let h = grid.spacing();
    let xs: Vec<f64> = (0..grid.len()).map(|i| grid.coords(i)[0]).collect();
    let fv = f.values();
    let mut s = CompensatedSum::new();
    for i in 0..xs.len() {
        if fv[i] == 0.0 {
            continue;
        }
        for j in 0..xs.len() {
            if fv[j] == 0.0 {
                continue;
            }
            let k = if i == j {
                diagonal_exp_cell_average(oracle, xs[i], h, b2)?
            } else {
                (b2 * oracle.eval(xs[i], xs[j])?).exp()
            };
            s.add(fv[i] * fv[j] * k);
        }
    }
    Ok(h * h * s.value())
}

/// Cell-pair average of e^{b₂C}: for C = −log r + g₀ this is
/// e^{b₂g₀} · 2h^{−b₂}/((1−b₂)(2−b₂)).
fn diagonal_exp_cell_average(oracle: &CovarianceOracle, x: f64, h: f64, b2: f64) -> Result<f64> {
    if oracle.is_singular() {
        let g0 = oracle.log_remainder_at_zero().ok_or_else(|| {
            ChaosError::SingularEvaluation(format!("no diagonal cell rule for {}", oracle.kernel_id()))
        })?;
        Ok((b2 * g0).exp() * 2.0 * h.powf(-b2) / ((1.0 - b2) * (2.0 - b2)))
    } else {
        Ok((b2 * oracle.eval(x, x)?).exp())
    }
}

/// Brute-force N-point quadrature of E[μ(1)^a conj(μ(1))^b] on the circle,
/// N = a + b ≤ 4: ∫ exp(−β² Σ_{i<j} q_i q_j C(z_i, z_j)) over [0,1)^{N−1}
/// with the first point pinned at 0 by rotation invariance. Each free
/// coordinate uses its own shifted midpoint grid so no two points coincide.
pub fn mixed_moment_quadrature(beta: f64, a: usize, b: usize, oracle: &CovarianceOracle, points: usize) -> Result<f64> {
    let n = a + b;
    if !(1..=4).contains(&n) {
        return Err(invalid("moment order", format!("a + b must lie in 1..=4, got {n}")));
    }
    if !oracle.is_circle() {
        return Err(invalid("oracle", "mixed-moment quadrature needs a circle kernel"));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let charges: Vec<f64> = (0..n).map(|i| if i < a { 1.0 } else { -1.0 }).collect();
    let b2 = beta * beta;
    let free = n - 1;
    let shifts: Vec<f64> = (0..free).map(|k| (k + 1) as f64 / (n + 1) as f64).collect();
    let total = points.pow(free as u32);
    let w = 1.0 / total as f64;
    let mut z = vec![0.0; n];
    let mut s = CompensatedSum::new();
    for idx in 0..total {
        let mut rest = idx;
        for k in 0..free {
            z[k + 1] = ((rest % points) as f64 + shifts[k]) / points as f64;
            rest /= points;
        }
        let mut e = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                e -= charges[i] * charges[j] * oracle.eval(z[i], z[j])?;
            }
        }
        s.add((b2 * e).exp());
    }
    Ok(s.value() * w)
}

/// MC estimate of E[μ(f)^a conj(μ(f))^b].
pub fn mc_moment(
    beta: f64,
    f: &TestFunction,
    spec: &SynthesisSpec,
    (a, b): (u32, u32),
    plan: &ChainPlan,
) -> Result<MomentResult> {
    if a + b > 6 {
        return Err(invalid("moment order", format!("a + b ≤ 6 expected, got {}", a + b)));
    }
    let params = ChaosParams::new(beta, f.grid().dim)?;
    let samples = map_samples(spec, plan, |field| {
        if !field.grid().same_as(f.grid()) {
            return Err(ChaosError::GridMismatch("synthesis grid differs from the test-function grid".into()));
        }
        let m = chaos_integral(&renormalized_exponential(field, &params)?, f)?;
        Ok(m.powu(a) * m.conj().powu(b))
    })?;
    Ok(MomentResult::from_samples(&samples))
}

/// Per-sample |μ_β(S¹)|^{−1} along a ladder of β, one row per field sample.
pub fn negative_moment_samples(betas: &[f64], modes: usize, points: usize, plan: &ChainPlan) -> Result<Vec<Vec<f64>>> {
    let params: Vec<ChaosParams> = betas
        .iter()
        .map(|&b| {
            if !(b > 0.0 && b < 1.0) {
                return Err(invalid("beta", format!("negative moment ladder needs β ∈ (0,1), got {b}")));
            }
            ChaosParams::new(b, 1)
        })
        .collect::<Result<_>>()?;
    let spec = SynthesisSpec::Circle { modes, points };
    let grid = crate::field::GridSpec::circle(points)?;
    let one = TestFunction::constant(grid, 1.0)?;
    map_samples(&spec, plan, |field| {
        params
            .iter()
            .map(|p| Ok(1.0 / chaos_integral(&renormalized_exponential(field, p)?, &one)?.norm()))
            .collect::<Result<Vec<f64>>>()
    })
}

/// MC estimates of E[|μ_β(S¹)|^{−1}] along a ladder of β, sharing field samples.
pub fn mc_negative_moment(betas: &[f64], modes: usize, points: usize, plan: &ChainPlan) -> Result<Vec<MomentResult>> {
    let rows = negative_moment_samples(betas, modes, points, plan)?;
    Ok((0..betas.len())
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            MomentResult::from_real_samples(&col)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use proptest::prelude::*;

    #[test]
    fn energy_trivial_cases() {
        let o = CovarianceOracle::CircleExact;
        let cfg = EnergyConfig::new(vec![0.1], vec![0.35]).unwrap();
        assert_eq!(energy(&o, &cfg).unwrap(), o.eval(0.1, 0.35).unwrap());
        let c = CovarianceOracle::Constant(0.7);
        let cfg = EnergyConfig::new(vec![0.1, 0.2], vec![0.5]).unwrap();
        assert!((energy(&c, &cfg).unwrap() - 0.7).abs() < 1e-15);
        assert!(EnergyConfig::new(vec![0.1], vec![]).is_err());
        let cfg = EnergyConfig::new(vec![0.1, 0.1], vec![]).unwrap();
        assert!(energy(&o, &cfg).is_err());
    }

    fn brute_energy(o: &CovarianceOracle, xs: &[f64], ys: &[f64]) -> f64 {
        // charges +1 for x, −1 for y; 𝓔 = −Σ_{i<j} q_i q_j C
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 1.0)).chain(ys.iter().map(|&y| (y, -1.0))).collect();
        let mut e = 0.0;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i < j {
                    e -= pts[i].1 * pts[j].1 * o.eval(pts[i].0, pts[j].0).unwrap();
                }
            }
        }
        e
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn energy_matches_brute_force(xs in proptest::collection::vec(0.0f64..1.0, 0..5), ys in proptest::collection::vec(0.0f64..1.0, 0..5)) {
            prop_assume!(xs.len() + ys.len() >= 2);
            let mut all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
            all.sort_by(f64::total_cmp);
            prop_assume!(all.windows(2).all(|w| w[1] - w[0] > 1e-9));
            let o = CovarianceOracle::CircleExact;
            let cfg = EnergyConfig::new(xs.clone(), ys.clone()).unwrap();
            let e = energy(&o, &cfg).unwrap();
            let b = brute_energy(&o, &xs, &ys);
            prop_assert!((e - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn fb_moment_trivial_values() {
        for g in [Complex64::new(-0.49, 0.0), Complex64::new(0.3, 0.2)] {
            assert_eq!(fb_moment(g, 0.0).unwrap(), Complex64::new(1.0, 0.0));
            assert_eq!(fb_moment(g, 1.0).unwrap(), Complex64::new(1.0, 0.0));
        }
        // γ² = −1, p = −1: Γ(1/2)Γ(3/2) = π/2
        let v = fb_moment(Complex64::new(-1.0, 0.0), -1.0).unwrap();
        let oracle = PI.sqrt() * (0.5 * PI.sqrt());
        assert!((v.re - oracle).abs() < 1e-13 && v.im.abs() < 1e-13);
        // numerator pole: 1 − pγ²/2 = 0 at γ² = 1, p = 2
        assert!(fb_moment(Complex64::new(1.0, 0.0), 2.0).is_err());
    }

    #[test]
    fn fb_moment_is_continuous_along_pole_free_path() {
        // γ² = t + 0.3i·sin(πt/2) for t ∈ [−1.5, 0.9], p = 2.5
        let m = 2000;
        let mut prev = fb_moment(Complex64::new(-1.5, 0.3 * (PI * -1.5 / 2.0).sin()), 2.5).unwrap();
        for i in 1..=m {
            let t = -1.5 + 2.4 * i as f64 / m as f64;
            let g = Complex64::new(t, 0.3 * (PI * t / 2.0).sin());
            let v = fb_moment(g, 2.5).unwrap();
            assert!((v - prev).norm() < 0.05 * (1.0 + prev.norm()), "jump at t={t}");
            prev = v;
        }
    }

    #[test]
    fn circle_power_integral_matches_closed_form() {
        for &b in &[0.3, 0.5, 0.7, 0.9] {
            let b2: f64 = b * b;
            for e in [b2, -b2] {
                let q = circle_power_integral(e).unwrap();
                let c = circle_power_closed_form(e).unwrap();
                assert!((q - c).abs() < 1e-6, "e={e}: {q} vs {c}");
            }
        }
        // same value reached through fb_moment(−β², 2)
        let b2 = 0.49;
        let v = fb_moment(Complex64::new(-b2, 0.0), 2.0).unwrap();
        assert!((v.re - circle_power_closed_form(b2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn second_moment_quadrature_reproduces_closed_forms_for_constant_f() {
        let grid = GridSpec::circle(1024).unwrap();
        let one = TestFunction::constant(grid, 1.0).unwrap();
        let b = 0.7;
        let minus = second_moment_quadrature(b, &one, &CovarianceOracle::CircleExact, MomentSign::Minus).unwrap();
        let plus = second_moment_quadrature(b, &one, &CovarianceOracle::CircleExact, MomentSign::Plus).unwrap();
        assert!((minus - circle_power_integral(b * b).unwrap()).abs() < 1e-9);
        assert!((plus - circle_power_integral(-b * b).unwrap()).abs() < 1e-9);
        assert!(second_moment_quadrature(1.0, &one, &CovarianceOracle::CircleExact, MomentSign::Plus).is_err());
    }

    #[test]
    fn second_moment_small_beta_limit() {
        let grid = GridSpec::circle(256).unwrap();
        let f = TestFunction::from_fn(grid, |x| 1.0 + (2.0 * PI * x[0]).sin() + 0.3).unwrap();
        let sq = f.integral().powi(2);
        for sign in [MomentSign::Plus, MomentSign::Minus] {
            let v = second_moment_quadrature(1e-6, &f, &CovarianceOracle::CircleExact, sign).unwrap();
            assert!((v - sq).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_route_agrees_with_circulant_route_on_smooth_f() {
        // the generic route is first order; agreement to a few 1e−3 at 512 points
        let grid = GridSpec::circle(512).unwrap();
        let f = TestFunction::from_fn(grid, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
        let o = CovarianceOracle::CircleExact;
        let a = circulant_second_moment(0.36, &f, &o).unwrap();
        let b = generic_second_moment(0.36, &f, &o).unwrap();
        assert!((a - b).abs() / a < 5e-3, "{a} vs {b}");
    }

    #[test]
    fn mixed_quadrature_two_points_matches_closed_form() {
        let o = CovarianceOracle::CircleExact;
        // midpoint rule on an integrable singularity: error ∝ h^{1−β²}
        let c = circle_power_closed_form(0.36).unwrap();
        let coarse = (mixed_moment_quadrature(0.6, 2, 0, &o, 512).unwrap() - c).abs();
        let fine = (mixed_moment_quadrature(0.6, 2, 0, &o, 4096).unwrap() - c).abs();
        assert!(fine < 1e-5, "{fine}");
        assert!(fine < coarse);
    }
}
