//! Quadrature rules: Gauss-Legendre, adaptive Gauss-Kronrod and tanh-sinh.

use std::f64::consts::PI;

/// Gauss-Legendre rule of fixed order on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let w = (b - a) / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let lo = a + w * p as f64;
            s += self.integrate(&mut f, lo, lo + w);
        }
        s
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) integration to absolute tolerance `tol`.
/// Returns `(value, error_estimate)`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut err = e;
    let mut iter = 0;
    while err > tol && iter < 2000 {
        iter += 1;
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, it)| if it.3 > acc.1 { (i, it.3) } else { acc });
        let (lo, hi, _, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    let value: f64 = intervals.iter().map(|it| it.2).sum();
    let error: f64 = intervals.iter().map(|it| it.3).sum();
    (value, error)
}

/// Adaptive Gauss-Kronrod over consecutive breakpoints.
pub fn adaptive_gk_breaks<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: f64) -> f64 {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    breaks
        .windows(2)
        .map(|w| adaptive_gk(&mut f, w[0], w[1], tol / pieces).0)
        .sum()
}

/// Tanh-sinh quadrature on [a, b], robust to integrable endpoint singularities.
///
/// The integrand receives `(x, x - a, b - x)` with the endpoint distances
/// computed without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let len = b - a;
    let half_pi = 0.5 * PI;
    let t_max = 4.5;
    let mut eval = |t: f64| -> f64 {
        let s = half_pi * t.sinh();
        let cs = s.cosh();
        let w = half_pi * t.cosh() / (cs * cs);
        // distance to the nearer endpoint, computed as len / (1 + e^{2|s|})
        let near = len / (1.0 + (2.0 * s.abs()).exp());
        if near <= 0.0 {
            return 0.0;
        }
        let (da, db) = if s < 0.0 { (near, len - near) } else { (len - near, near) };
        let x = if s < 0.0 { a + da } else { b - db };
        0.5 * len * w * f(x, da, db)
    };
    let mut h = 0.5;
    let n0 = (t_max / h) as i64;
    let mut sum = eval(0.0);
    for k in 1..=n0 {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
    }
    let mut estimate = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let n = (t_max / h) as i64;
        let mut add = 0.0;
        let mut k = 1;
        while k <= n {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= tol.max(1e-15 * estimate.abs()) {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 polynomial is integrated exactly
        let v = gl.integrate(|x| x.powi(14) + 3.0 * x.powi(15), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let w: f64 = gl.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gk_handles_smooth_and_kinked_integrands() {
        let (v, _) = adaptive_gk(|x: f64| x.sin(), 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        let (v, _) = adaptive_gk(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        // ∫_0^1 log x dx = -1
        let v = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-13);
        assert!((v + 1.0).abs() < 1e-10, "{v}");
    }
}
