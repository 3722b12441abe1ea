//! Exact piecewise-polynomial form of the convolution powers
//! `B_n = (1/2 * 1_[-1,1])^{*n}`.
//!
//! `B_n` is the density of a sum of `n` independent uniforms on [-1, 1]. On the
//! piece `[-n + 2j, -n + 2j + 2]` it is the polynomial
//!
//! ```text
//! 1 / (2^n (n-1)!) * sum_{k=0}^{j} (-1)^k C(n,k) (u + 2(j-k))^{n-1},   u = x + n - 2j,
//! ```
//!
//! whose coefficients in `u` are integers over a common denominator. They are
//! computed exactly in `i128` and rounded once. Evaluation folds onto the left
//! half by symmetry, so the local polynomials are only used where they do not
//! cancel.

/// Largest supported convolution power (keeps the integer numerators in i128).
pub const MAX_ORDER: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CardinalBSpline {
    order: u32,
    /// `derivs[d][j]` holds the coefficients (ascending powers of `u`) of the
    /// d-th derivative on piece `j`.
    derivs: Vec<Vec<Vec<f64>>>,
}

fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

impl CardinalBSpline {
    /// Highest derivative order precomputed.
    pub const MAX_DERIV: usize = 4;

    pub fn new(order: u32) -> Self {
        assert!((1..=MAX_ORDER).contains(&order), "B-spline order must be in 1..={MAX_ORDER}");
        let n = order;
        let deg = n - 1;
        let denom = (1i128 << n) * factorial(n - 1);
        // integer numerators of the undifferentiated polynomials, piece by piece
        let numerators: Vec<Vec<i128>> = (0..n)
            .map(|j| {
                (0..=deg)
                    .map(|p| {
                        (0..=j)
                            .map(|k| {
                                let sign = if k % 2 == 0 { 1 } else { -1 };
                                let base = 2 * (j - k) as i128;
                                let pow = base.pow(deg - p);
                                sign * binomial(n, k) * binomial(deg, p) * pow
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let derivs = (0..=Self::MAX_DERIV)
            .map(|d| {
                numerators
                    .iter()
                    .map(|coeffs| {
                        (0..coeffs.len())
                            .filter(|&p| p + d < coeffs.len())
                            .map(|p| {
                                let falling: i128 = ((p + 1)..=(p + d)).map(|q| q as i128).product();
                                (coeffs[p + d] * falling) as f64 / denom as f64
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { order, derivs }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn support_radius(&self) -> f64 {
        self.order as f64
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// d-th derivative, `d <= 4`. At knots where the derivative jumps the
    /// value of the piece to the left of the folded argument is returned.
    pub fn derivative(&self, x: f64, d: usize) -> f64 {
        assert!(d <= Self::MAX_DERIV);
        let n = self.order as f64;
        if !(x.abs() < n) {
            return 0.0;
        }
        // fold onto [-n, 0]: B^{(d)}(x) = (-1)^d B^{(d)}(-x)
        let (y, sign) = if x > 0.0 { (-x, if d % 2 == 0 { 1.0 } else { -1.0 }) } else { (x, 1.0) };
        let pieces = self.order as usize;
        let j = (((y + n) / 2.0).floor() as usize).min(pieces - 1);
        let u = y + n - 2.0 * j as f64;
        let coeffs = &self.derivs[d][j];
        let v = coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c);
        sign * v
    }
}
