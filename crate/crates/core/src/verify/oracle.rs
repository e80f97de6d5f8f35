//! Independent reference computations used to check the solvers: brute-force
//! scans, plain bisection, direct finite differences and textbook test
//! statistics. None of these share code paths with the code under test.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Every root of `g` on `[lo, hi]` from a uniform sign-change scan of `n`
/// intervals followed by plain bisection. Misses roots closer together than
/// the scan spacing, which is the point: it is a different method.
pub fn scan_roots(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut a = lo;
    let mut ga = g(a);
    for k in 1..=n {
        let b = lo + (hi - lo) * k as f64 / n as f64;
        let gb = g(b);
        if ga == 0.0 {
            out.push(a);
        } else if ga * gb < 0.0 {
            let (mut l, mut r, mut gl) = (a, b, ga);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let gm = g(m);
                if gm == 0.0 || r - l < 1e-15 {
                    l = m;
                    r = m;
                    break;
                }
                if gl * gm < 0.0 {
                    r = m;
                } else {
                    l = m;
                    gl = gm;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
        ga = gb;
    }
    if ga == 0.0 {
        out.push(hi);
    }
    out
}

/// Positive root of `x = tanh(a x)` for `a > 1`.
pub fn tanh_root(a: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m - (a * m).tanh() < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of `x^3 - u1 x - u2` from a scan of the Cauchy bound interval.
pub fn cubic_roots_scan(u1: f64, u2: f64) -> Vec<f64> {
    let bound = 1.0 + u1.abs().max(u2.abs());
    let f = |x: f64| x * x * x - u1 * x - u2;
    scan_roots(f, -bound, bound, 20_000)
}

/// Local minima of `|r|` over an `n x n` grid on `[-1, 1]^2`, each refined by
/// a coordinate pattern search. Returns points with
/// `|r| < tol` after refinement, deduplicated at `1e-6`.
pub fn grid_minima_2d(r: impl Fn(f64, f64) -> f64, n: usize, tol: f64) -> Vec<[f64; 2]> {
    let h = 2.0 / (n - 1) as f64;
    let at = |i: usize| -1.0 + h * i as f64;
    let vals: Vec<f64> = (0..n * n).map(|k| r(at(k / n), at(k % n))).collect();
    let v = |i: usize, j: usize| vals[i * n + j];
    let mut out: Vec<[f64; 2]> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = v(i, j);
            let mut is_min = true;
            for (di, dj) in [
                (-1i64, 0i64),
                (1, 0),
                (0, -1),
                (0, 1),
                (-1, -1),
                (1, 1),
                (-1, 1),
                (1, -1),
            ] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0
                    && b >= 0
                    && (a as usize) < n
                    && (b as usize) < n
                    && v(a as usize, b as usize) < c
                {
                    is_min = false;
                    break;
                }
            }
            if !is_min {
                continue;
            }
            let p = pattern_search(&r, [at(i), at(j)], h);
            if r(p[0], p[1]) < tol && !out.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-6) {
                out.push(p);
            }
        }
    }
    out
}

fn pattern_search(r: &impl Fn(f64, f64) -> f64, mut p: [f64; 2], mut step: f64) -> [f64; 2] {
    let mut best = r(p[0], p[1]);
    while step > 1e-14 {
        let mut moved = false;
        for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let q = [
                (p[0] + step * d[0]).clamp(-1.0, 1.0),
                (p[1] + step * d[1]).clamp(-1.0, 1.0),
            ];
            let rq = r(q[0], q[1]);
            if rq < best {
                best = rq;
                p = q;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    p
}

/// Kolmogorov-Smirnov test of `samples` against `N(mean, sd^2)`; returns the
/// statistic and the asymptotic p-value.
pub fn ks_normal(samples: &[f64], mean: f64, sd: f64) -> (f64, f64) {
    let dist = Normal::new(mean, sd).expect("sd > 0");
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0f64, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    (d, kolmogorov_tail(lambda).clamp(0.0, 1.0))
}

/// `P(K > lambda)` for the Kolmogorov distribution. The alternating series
/// converges slowly for small `lambda`, where the theta-function form is used.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=50)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        return 1.0 - cdf;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p
}

/// Ljung-Box portmanteau statistic over `lags` autocorrelations and its
/// chi-squared p-value.
pub fn ljung_box(samples: &[f64], lags: usize) -> (f64, f64) {
    let n = samples.len() as f64;
    let m = samples.iter().sum::<f64>() / n;
    let c0: f64 = samples.iter().map(|x| (x - m).powi(2)).sum();
    let q: f64 = (1..=lags)
        .map(|k| {
            let ck: f64 = samples
                .windows(k + 1)
                .map(|w| (w[0] - m) * (w[k] - m))
                .sum();
            let rho = ck / c0;
            rho * rho / (n - k as f64)
        })
        .sum::<f64>()
        * n
        * (n + 2.0);
    let chi = ChiSquared::new(lags as f64).expect("lags > 0");
    (q, 1.0 - chi.cdf(q))
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_finds_roots() {
        let r = scan_roots(|x| x * x - 0.25, -1.0, 1.0, 1000);
        assert_eq!(r.len(), 2);
        assert!((r[1] - 0.5).abs() < 1e-14);
        assert!((tanh_root(2.0) - 0.957_504_024_077_268_7).abs() < 1e-14);
    }

    #[test]
    fn grid_minima_locate_zeros() {
        let pts = grid_minima_2d(|x, y| (x - 0.3).hypot(y + 0.2), 101, 1e-10);
        assert_eq!(pts.len(), 1);
        assert!((pts[0][0] - 0.3).abs() < 1e-10 && (pts[0][1] + 0.2).abs() < 1e-10);
    }

    #[test]
    fn test_statistics_on_known_inputs() {
        // evenly spaced normal quantiles fit perfectly
        let n = 2000;
        let d = Normal::new(0.0, 1.0).unwrap();
        let q: Vec<f64> = (0..n)
            .map(|i| d.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        let (stat, p) = ks_normal(&q, 0.0, 1.0);
        assert!(stat < 1e-3 && p > 0.99);
        let (_, p) = ks_normal(&q, 1.0, 1.0);
        assert!(p < 1e-6);
        // a strongly autocorrelated sequence fails
        let ar: Vec<f64> = (0..1000).map(|i| ((i / 20) % 2) as f64).collect();
        assert!(ljung_box(&ar, 10).1 < 1e-6);
        // both branches of the tail agree at the switch point
        assert!((kolmogorov_tail(1.18 - 1e-9) - kolmogorov_tail(1.18)).abs() < 1e-9);
        assert!((kolmogorov_tail(1.36) - 0.0494).abs() < 1e-3);
    }
}
