//! `sinc(t) = sin(t)/t` (with `sinc(0) = 1`), its powers, and their
//! derivatives up to fourth order.

/// Below this |t| the derivatives of `sinc` are summed from the Taylor series;
/// above it the closed form has no harmful cancellation.
const SERIES_CUTOFF: f64 = 1.0;
const SERIES_TERMS: usize = 16;

/// d-th derivative of `sinc`, `d <= 4`.
pub fn sinc_deriv(t: f64, d: usize) -> f64 {
    assert!(d <= 4);
    if t.abs() < SERIES_CUTOFF {
        series(t, d)
    } else {
        closed_form(t, d)
    }
}

pub fn sinc(t: f64) -> f64 {
    sinc_deriv(t, 0)
}

fn series(t: f64, d: usize) -> f64 {
    // sinc(t) = sum_k (-1)^k t^{2k} / (2k+1)!
    let t2 = t * t;
    let mut acc = 0.0;
    let mut inv_fact = 1.0; // 1/(2k+1)!
    let mut tpow_even = 1.0; // t^{2k}
    for k in 0..SERIES_TERMS {
        if k > 0 {
            inv_fact /= ((2 * k) * (2 * k + 1)) as f64;
            tpow_even *= t2;
        }
        let p = 2 * k;
        if p < d {
            continue;
        }
        // d/dt^d t^p = p!/(p-d)! t^{p-d}
        let falling: f64 = ((p - d + 1)..=p).map(|q| q as f64).product();
        let tp = if d == 0 { tpow_even } else { t.powi((p - d) as i32) };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * inv_fact * falling * tp;
    }
    acc
}

fn closed_form(t: f64, d: usize) -> f64 {
    // Leibniz on sin(t) * t^{-1}
    let (s, c) = t.sin_cos();
    let sin_deriv = |k: usize| match k % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    };
    let inv = 1.0 / t;
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut inv_pow = inv; // t^{-j-1}
    let mut j_fact = 1.0;
    for j in 0..=d {
        if j > 0 {
            binom = binom * (d + 1 - j) as f64 / j as f64;
            inv_pow *= inv;
            j_fact *= j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += binom * sin_deriv(d - j) * sign * j_fact * inv_pow;
    }
    acc
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| n as f64 - i as f64).product()
}

fn upow(u: f64, n: u32, k: u32) -> f64 {
    // n(n-1)...(n-k+1) * u^{n-k}, zero when k > n
    if k > n {
        0.0
    } else {
        falling(n, k) * u.powi((n - k) as i32)
    }
}

/// d-th derivative of `sinc(t)^n`, `d <= 4`, via Faa di Bruno.
pub fn sinc_pow_deriv(t: f64, n: u32, d: usize) -> f64 {
    assert!(d <= 4);
    let u = sinc(t);
    if d == 0 {
        return u.powi(n as i32);
    }
    let u1 = sinc_deriv(t, 1);
    if d == 1 {
        return upow(u, n, 1) * u1;
    }
    let u2 = sinc_deriv(t, 2);
    if d == 2 {
        return upow(u, n, 2) * u1 * u1 + upow(u, n, 1) * u2;
    }
    let u3 = sinc_deriv(t, 3);
    if d == 3 {
        return upow(u, n, 3) * u1.powi(3) + 3.0 * upow(u, n, 2) * u1 * u2 + upow(u, n, 1) * u3;
    }
    let u4 = sinc_deriv(t, 4);
    upow(u, n, 4) * u1.powi(4)
        + 6.0 * upow(u, n, 3) * u1 * u1 * u2
        + upow(u, n, 2) * (3.0 * u2 * u2 + 4.0 * u1 * u3)
        + upow(u, n, 1) * u4
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_closed_form_agree_near_cutoff() {
        for d in 0..=4 {
            for &t in &[0.9, 0.99, 1.0, 1.01, 1.2] {
                let a = series(t, d);
                let b = closed_form(t, d);
                assert!((a - b).abs() < 1e-13, "d={d} t={t} {a} {b}");
            }
        }
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc_deriv(0.0, 1), 0.0);
        assert!((sinc_deriv(0.0, 2) + 1.0 / 3.0).abs() < 1e-16);
        assert!((sinc_deriv(0.0, 4) - 1.0 / 5.0).abs() < 1e-16);
    }

    #[test]
    fn sinc7_closed_forms() {
        // (sinc^7)'(t) = 7 sin^6 t (t cos t - sin t) / t^8
        for &t in &[0.3, 1.1, 2.5, 4.0, 7.7] {
            let (s, c) = f64::sin_cos(t);
            let first = 7.0 * s.powi(6) * (t * c - s) / t.powi(8);
            assert!((sinc_pow_deriv(t, 7, 1) - first).abs() < 1e-14 * (1.0 + first.abs()));
            let second = -7.0 * s.powi(5) * (s * ((t * t - 2.0) * s + 2.0 * t * c) - 6.0 * (s - t * c).powi(2)) / t.powi(9);
            assert!((sinc_pow_deriv(t, 7, 2) - second).abs() < 1e-13 * (1.0 + second.abs()), "t={t}");
        }
    }

    #[test]
    fn finite_differences() {
        let h = 1e-5;
        for n in [2u32, 6, 7, 8] {
            for d in 0..4 {
                for &t in &[0.0, 0.2, 0.999, 1.5, 3.3] {
                    let fd = (sinc_pow_deriv(t + h, n, d) - sinc_pow_deriv(t - h, n, d)) / (2.0 * h);
                    let exact = sinc_pow_deriv(t, n, d + 1);
                    assert!((fd - exact).abs() < 1e-7 * (1.0 + exact.abs()), "n={n} d={d} t={t}");
                }
            }
        }
    }
}
