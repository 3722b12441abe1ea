//! Compensated summation.
//!
//! Every geometric side in the crate is accumulated with Neumaier's variant of
//! Kahan summation in a fixed canonical order, so reruns are bit-identical and
//! the rounding error is bounded by a small multiple of `eps * sum |terms|`.

/// Neumaier compensated accumulator that also tracks the absolute mass of the
/// terms it has seen, which is what the error budgets are built from.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
    abs_mass: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        self.accumulate(value);
        self.abs_mass += value.abs();
    }

    #[inline]
    fn accumulate(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merge another accumulator into this one. Used for the ordered reduction
    /// of per-chunk partial sums.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.accumulate(other.sum);
        self.accumulate(other.compensation);
        self.abs_mass += other.abs_mass;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Sum of |term| over everything added so far.
    #[inline]
    pub fn abs_mass(&self) -> f64 {
        self.abs_mass
    }

    /// Conservative bound on the accumulated rounding error.
    pub fn error_bound(&self) -> f64 {
        rounding_budget(self.abs_mass)
    }
}

/// Rounding budget for a compensated sum whose terms have total absolute mass
/// `abs_mass`. The factor covers the product that formed each term as well as
/// the summation itself.
#[inline]
pub fn rounding_budget(abs_mass: f64) -> f64 {
    16.0 * f64::EPSILON * abs_mass
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(terms), 2.0);
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.37).sin() * 10f64.powi(i % 7)).collect();
        let mut all = NeumaierSum::new();
        xs.iter().for_each(|&x| all.add(x));
        let mut a = NeumaierSum::new();
        let mut b = NeumaierSum::new();
        xs[..400].iter().for_each(|&x| a.add(x));
        xs[400..].iter().for_each(|&x| b.add(x));
        a.merge(&b);
        assert!((a.value() - all.value()).abs() <= 4.0 * f64::EPSILON * all.abs_mass());
        assert!((a.abs_mass() - all.abs_mass()).abs() <= 1e-12 * all.abs_mass());
    }
}
