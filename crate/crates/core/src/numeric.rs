//! Small numerical building blocks shared by the analysis modules.

use std::sync::OnceLock;

/// Value of the cubic Hermite interpolant on `[0, h]` at local offset `s * h`.
#[inline]
pub fn hermite(v0: f64, d0: f64, v1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1
}

/// Derivative of the cubic Hermite interpolant with respect to time.
#[inline]
pub fn hermite_derivative(v0: f64, d0: f64, v1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let dh00 = 6.0 * s2 - 6.0 * s;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = -6.0 * s2 + 6.0 * s;
    let dh11 = 3.0 * s2 - 2.0 * s;
    (dh00 * v0 + dh01 * v1) / h + dh10 * d0 + dh11 * d1
}

/// Nodes and weights of the Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// 16-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss16_unit() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(16);
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| (0.5 * (xi + 1.0), 0.5 * wi))
            .collect()
    })
}

/// Composite Simpson weights for `m` equal intervals of width `h`.
///
/// Odd `m` closes with the 3/8 rule over the last three intervals.
pub fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    assert!(m >= 2, "Simpson rule needs at least two intervals");
    let mut w = vec![0.0; m + 1];
    let simpson_end = if m.is_multiple_of(2) { m } else { m - 3 };
    let mut k = 0;
    while k + 2 <= simpson_end {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
        k += 2;
    }
    if m % 2 == 1 {
        let k = m - 3;
        let c = 3.0 * h / 8.0;
        w[k] += c;
        w[k + 1] += 3.0 * c;
        w[k + 2] += 3.0 * c;
        w[k + 3] += c;
    }
    w
}

/// Bisection for a sign change of `f` on `[a, b]`, to absolute tolerance `tol`.
///
/// Returns `None` when `f(a)` and `f(b)` have the same strict sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol || mid == a || mid == b {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss16_integrates_degree_31_exactly() {
        let rule = gauss16_unit();
        let total: f64 = rule.iter().map(|&(x, w)| w * x.powi(31)).sum();
        assert!((total - 1.0 / 32.0).abs() < 1e-15);
        let wsum: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((wsum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simpson_odd_and_even() {
        for m in [2usize, 3, 7, 8, 64, 65] {
            let h = 1.0 / m as f64;
            let w = simpson_weights(m, h);
            let integral: f64 = w.iter().enumerate().map(|(k, wk)| wk * (k as f64 * h).powi(3)).sum();
            assert!((integral - 0.25).abs() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let df = |t: f64| -2.0 + 1.5 * t * t;
        let h = 0.3;
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let v = hermite(f(0.0), df(0.0), f(h), df(h), h, s);
            assert!((v - f(s * h)).abs() < 1e-14);
            let d = hermite_derivative(f(0.0), df(0.0), f(h), df(h), h, s);
            assert!((d - df(s * h)).abs() < 1e-13);
        }
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
