use chaoslab::chaos::{renormalized_exponential, ChaosParams, TestFunction};
use chaoslab::field::{CircleSynthesizer, CovarianceOracle, GridSpec, SynthesisSpec};
use chaoslab::malliavin::{
    d2_norm_expectation, delta_dm, invariant_tolerance, log_grid, smallball_curve, smallball_samples, ChargeFunction,
    MalliavinLab, SmallBallQuantity,
};
use chaoslab::mc::map_samples;
use chaoslab::rng::{chain_stream, ChainPlan};
use chaoslab::stats::{polyfit, MomentResult};
use num_complex::Complex64;
use rand::RngExt;

#[test]
fn invariants_hold_on_circle_realizations() {
    let grid = GridSpec::circle(2048).unwrap();
    let synth = CircleSynthesizer::new(2048, grid).unwrap();
    let lab = MalliavinLab::new(grid, synth.oracle()).unwrap();
    let f = TestFunction::constant(grid, 1.0).unwrap();
    let params = ChaosParams::new(0.7, 1).unwrap();
    let tol = invariant_tolerance(&grid);
    let mut rng = chain_stream(77, 0);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let field = synth.sample(&mut rng);
        let chaos = renormalized_exponential(&field, &params).unwrap();
        let st = lab.stats(&chaos, &f).unwrap();
        assert!(st.det_gamma >= -tol * st.i1.re.powi(2));
        assert!(st.i1.im.abs() / st.i1.re <= 1e-6);
        assert!(st.d2_norm_sq >= -tol);
        let (df, dfb) = lab.derivative_charges(&chaos, &f).unwrap();
        let random = ChargeFunction::new(
            grid,
            (0..grid.len()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect(),
        )
        .unwrap();
        for h in [&df, &dfb, &random] {
            let m = lab.projection_margins(&chaos, &f, h).unwrap();
            worst = worst.min(m.first).min(m.second);
            assert!(m.first >= -tol && m.second >= -tol, "{m:?}");
        }
    }
    println!("worst projection margin {worst}");
}

#[test]
fn orthogonal_direction_gives_zero_rhs() {
    let grid = GridSpec::circle(256).unwrap();
    let synth = CircleSynthesizer::new(256, grid).unwrap();
    let lab = MalliavinLab::new(grid, synth.oracle()).unwrap();
    let f = TestFunction::constant(grid, 1.0).unwrap();
    let mut rng = chain_stream(5, 0);
    let chaos = renormalized_exponential(&synth.sample(&mut rng), &ChaosParams::new(0.7, 1).unwrap()).unwrap();
    let (df, dfb) = lab.derivative_charges(&chaos, &f).unwrap();
    // Gram–Schmidt of a random charge against DF and D F̄ in the H inner product
    let mut w = ChargeFunction::new(
        grid,
        (0..grid.len()).map(|_| Complex64::new(rng.random::<f64>(), rng.random::<f64>())).collect(),
    )
    .unwrap();
    let e1 = df.scale(Complex64::new(1.0 / lab.inner(&df, &df).unwrap().re.sqrt(), 0.0));
    let v2 = dfb.add(&e1.scale(-lab.inner(&dfb, &e1).unwrap())).unwrap();
    let e2 = v2.scale(Complex64::new(1.0 / lab.inner(&v2, &v2).unwrap().re.sqrt(), 0.0));
    for e in [&e1, &e2] {
        w = w.add(&e.scale(-lab.inner(&w, e).unwrap())).unwrap();
    }
    assert!(lab.inner(&df, &w).unwrap().norm() < 1e-10);
    assert!(lab.inner(&dfb, &w).unwrap().norm() < 1e-10);
    let m = lab.projection_margins(&chaos, &f, &w).unwrap();
    assert!((m.second - m.det_gamma).abs() < 1e-9 * (1.0 + m.det_gamma));
}

#[test]
fn d2_norm_mean_matches_quadrature() {
    let points = 512;
    let grid = GridSpec::circle(points).unwrap();
    let f = TestFunction::constant(grid, 1.0).unwrap();
    let oracle = CovarianceOracle::CircleTruncated { modes: points };
    let lab = MalliavinLab::new(grid, &oracle).unwrap();
    let params = ChaosParams::new(0.7, 1).unwrap();
    let spec = SynthesisSpec::Circle { modes: points, points };
    let vals = map_samples(&spec, &ChainPlan::new(8, 8, 20_000), |field| {
        Ok(lab.stats(&renormalized_exponential(field, &params)?, &f)?.d2_norm_sq)
    })
    .unwrap();
    let r = MomentResult::from_real_samples(&vals);
    let oracle_value = d2_norm_expectation(0.7, &f, &oracle).unwrap();
    println!("D2: {} ± {} vs {oracle_value}", r.value.re, r.std_error);
    assert!(r.within(Complex64::new(oracle_value, 0.0), 3.0));
}

#[test]
fn delta_dm_second_moment_is_stable_under_grid_doubling() {
    let params = ChaosParams::new(0.7, 1).unwrap();
    let mut means = Vec::new();
    for points in [1024, 2048] {
        let grid = GridSpec::circle(points).unwrap();
        let f = TestFunction::constant(grid, 1.0).unwrap();
        let spec = SynthesisSpec::Circle { modes: 512, points };
        let vals = map_samples(&spec, &ChainPlan::new(9, 8, 10_000), |field| {
            let chaos = renormalized_exponential(field, &params)?;
            Ok(delta_dm(field, &chaos, &f, 0.7)?.norm_sqr())
        })
        .unwrap();
        let r = MomentResult::from_real_samples(&vals);
        println!("points {points}: E|δDM|² = {} ± {}", r.value.re, r.std_error);
        assert!(r.value.re.is_finite());
        means.push(r.value.re);
    }
    assert!((means[1] / means[0] - 1.0).abs() <= 0.05);
}

#[test]
fn delta_dm_rejects_foreign_chaos() {
    let grid = GridSpec::circle(64).unwrap();
    let synth = CircleSynthesizer::new(64, grid).unwrap();
    let mut rng = chain_stream(1, 0);
    let a = synth.sample(&mut rng);
    let b = synth.sample(&mut rng);
    let params = ChaosParams::new(0.5, 1).unwrap();
    let f = TestFunction::constant(grid, 1.0).unwrap();
    let chaos_b = renormalized_exponential(&b, &params).unwrap();
    assert!(delta_dm(&a, &chaos_b, &f, 0.5).is_err());
    let chaos_a = renormalized_exponential(&a, &params).unwrap();
    let tiny = delta_dm(&a, &renormalized_exponential(&a, &ChaosParams::new(1e-8, 1).unwrap()).unwrap(), &f, 1e-8).unwrap();
    assert!(tiny.norm() < 1e-6);
    assert!(delta_dm(&a, &chaos_a, &f, 0.5).unwrap().norm().is_finite());
}

#[test]
fn det_gamma_mean_grows_toward_critical_beta() {
    let points = 1024;
    let grid = GridSpec::circle(points).unwrap();
    let f = TestFunction::constant(grid, 1.0).unwrap();
    let spec = SynthesisSpec::Circle { modes: points, points };
    let plan = ChainPlan::new(10, 8, 4_000);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for b2 in [0.80f64, 0.90, 0.95] {
        let v = smallball_samples(SmallBallQuantity::DetGamma, b2.sqrt(), &f, &spec, &plan).unwrap();
        let m = MomentResult::from_real_samples(&v);
        println!("β²={b2}: E det γ = {} ± {}", m.value.re, m.std_error);
        x.push((1.0 - b2).ln());
        y.push(m.value.re.ln());
    }
    let c = polyfit(&x, &y, 1).unwrap();
    println!("slope {}", c[1]);
    assert!(c[1] < 0.0);
}

#[test]
fn smallball_curve_shape() {
    let points = 512;
    let grid = GridSpec::circle(points).unwrap();
    let f = TestFunction::constant(grid, 1.0).unwrap();
    let spec = SynthesisSpec::Circle { modes: points, points };
    let eps = log_grid(-6.0, 2.0, 40);
    let c = smallball_curve(SmallBallQuantity::DetGamma, 0.7, &f, &spec, &eps, &ChainPlan::new(3, 8, 20_000)).unwrap();
    for i in 0..eps.len() {
        if c.p_hat[i] > 0.0 && c.p_hat[i] < 1.0 { println!("{:e} {} {}", c.eps[i], c.p_hat[i], c.censored[i]); }
    }
    println!("{:?}", c.signature());
    assert!(c.p_hat.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*c.p_hat.last().unwrap(), 1.0);
    let c = smallball_curve(SmallBallQuantity::sobolev(-0.5), 0.7, &f, &spec, &eps, &ChainPlan::new(4, 8, 20_000)).unwrap();
    for i in 0..eps.len() {
        if c.p_hat[i] > 0.0 && c.p_hat[i] < 1.0 { println!("{:e} {} {}", c.eps[i], c.p_hat[i], c.censored[i]); }
    }
    println!("{:?}", c.signature());
}
