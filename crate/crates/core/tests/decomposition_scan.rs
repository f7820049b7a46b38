use chaoslab::decomposition::{
    assemble_r, cx_kernel, cx_kernel_from_symbol, cx_matrix, min_eig_scan, partition_of_unity, symbol_u_alpha, AxisBox, GTilde,
    PartitionPair, Smoothstep, SymbolTable,
};
use chaoslab::field::{seed_covariance_default, GridSpec, SeedCovariance};
use chaoslab::operator::OperatorMatrix;
use proptest::prelude::*;

const ALPHAS: [f64; 8] = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];

fn seed() -> SeedCovariance {
    seed_covariance_default(1).unwrap()
}

fn xi_grid() -> Vec<f64> {
    (0..=120).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0)).collect()
}

fn scan_setup(points: usize) -> (GridSpec, PartitionPair, OperatorMatrix) {
    let grid = GridSpec::new(1, points, 2.0, 2.0).unwrap();
    let pair = partition_of_unity(&AxisBox::interval(0.8, 1.2), &AxisBox::interval(0.6, 1.4), &grid, &Smoothstep::default()).unwrap();
    let cx = cx_matrix(&grid, &seed()).unwrap();
    (grid, pair, cx)
}

#[test]
fn symbol_bands_are_alpha_uniform() {
    let s = seed();
    let xi = xi_grid();
    let mut bands = Vec::new();
    for alpha in [0.1, 0.3, 1.0] {
        let t = SymbolTable::build(&xi, &s, alpha).unwrap();
        assert!(t.k_hat.iter().chain(&t.u_alpha).all(|&v| v > 0.0));
        let kb = t.k_hat_band();
        assert!(kb.c1 > 0.0 && kb.ratio().is_finite());
        let b = t.u_alpha_band();
        println!("alpha={alpha}: c1={:.4e} c2={:.4e}", b.c1, b.c2);
        assert!(b.c1 > 0.0);
        bands.push(b);
    }
    let c1 = bands.iter().map(|b| b.c1);
    let c2 = bands.iter().map(|b| b.c2);
    let drift = |it: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = it.collect();
        v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    assert!(drift(&mut c1.into_iter()) < 4.0);
    assert!(drift(&mut c2.into_iter()) < 4.0);
}

#[test]
fn symbols_nonincreasing_at_large_xi() {
    let s = seed();
    let xi: Vec<f64> = (0..200).map(|i| 20.0 * 1.03f64.powi(i)).collect();
    for alpha in [0.0, 0.3, 1.0] {
        let v = symbol_u_alpha(&xi, &s, alpha).unwrap();
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "alpha={alpha}");
    }
}

#[test]
fn symbol_csv_header() {
    let t = SymbolTable::build(&[0.0, 1.0], &seed(), 0.5).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("xi,K-hat,u-alpha-hat\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn cx_plus_log_is_bounded() {
    let s = seed();
    let vals: Vec<f64> = (1..=200).map(|i| 10f64.powf(-8.0 * (1.0 - i as f64 / 200.0))).map(|r| cx_kernel(r, &s).unwrap() + r.ln()).collect();
    let span = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(span < 2.0, "{span}");
    for r in [0.1, 0.4, 0.75] {
        let a = cx_kernel_from_symbol(r, &s, 200.0).unwrap();
        assert!((a + f64::ln(r) - vals[0]).abs() < 2.0);
    }
}

#[test]
fn zero_remainder_is_positive_for_every_alpha() {
    let (grid, _, _) = scan_setup(1024);
    let scan = min_eig_scan(&ALPHAS, &grid, &seed(), None).unwrap();
    for p in &scan.points {
        println!("R=0 alpha={} min-eig={:.4e}", p.alpha, p.min_eig);
        assert!(p.min_eig > 0.0);
        assert_eq!(p.grid_points, 1024);
    }
    assert!(scan.is_nonincreasing());
    assert_eq!(scan.alpha_star, Some(5.0));
}

#[test]
fn ladder_scans_cross_zero_monotonically() {
    let s = seed();
    let (grid, pair, cx) = scan_setup(1024);
    for g in GTilde::ladder(1.0) {
        let gm = g.matrix(&pair, &s).unwrap();
        let r = assemble_r(&pair, &cx, &gm).unwrap();
        let scan = min_eig_scan(&ALPHAS, &grid, &s, Some(&r)).unwrap();
        for p in &scan.points {
            println!("{} alpha={} min-eig={:.4e}", g.id(), p.alpha, p.min_eig);
        }
        assert!(scan.is_nonincreasing(), "{}", g.id());
        assert!(scan.alpha_star.is_some_and(|a| a > 0.0), "{}", g.id());
        let json = serde_json::to_value(&scan.points[0]).unwrap();
        for key in ["alpha", "min-eig", "grid-points", "kernel-id"] {
            assert!(json.get(key).is_some());
        }
    }
}

#[test]
fn circle_remainder_rejects_wide_support() {
    let grid = GridSpec::new(1, 256, 2.0, 2.0).unwrap();
    let pair = partition_of_unity(&AxisBox::interval(0.5, 1.5), &AxisBox::interval(0.2, 1.8), &grid, &Smoothstep::default()).unwrap();
    assert!(GTilde::CircleRemainder.matrix(&pair, &seed()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn partition_identity_holds(lo in 0.1f64..0.8, len in 0.05f64..0.6, gap_l in 0.01f64..0.2, gap_r in 0.01f64..0.2, deg in 1usize..6) {
        let grid = GridSpec::new(1, 256, 2.0, 2.0).unwrap();
        let v = AxisBox::interval(lo, lo + len);
        let w = AxisBox::interval(lo - gap_l, lo + len + gap_r);
        let step = Smoothstep::new(2 * deg + 1).unwrap();
        let p = partition_of_unity(&v, &w, &grid, &step).unwrap();
        for i in 0..grid.len() {
            prop_assert!((p.a[i] * p.a[i] + p.b[i] * p.b[i] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn assembled_r_is_exactly_symmetric(c in 0.7f64..1.3, amp in -2.0f64..2.0, width in 0.05f64..0.4) {
        let s = seed();
        let grid = GridSpec::new(1, 64, 2.0, 2.0).unwrap();
        let pair = partition_of_unity(&AxisBox::interval(0.8, 1.2), &AxisBox::interval(0.6, 1.4), &grid, &Smoothstep::default()).unwrap();
        let cx = cx_matrix(&grid, &s).unwrap();
        let g = GTilde::SeparableBump { amplitude: amp, center: c, width }.matrix(&pair, &s).unwrap();
        prop_assert!(assemble_r(&pair, &cx, &g).unwrap().is_symmetric());
    }
}
