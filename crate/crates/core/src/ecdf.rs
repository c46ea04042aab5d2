//! Empirical distribution functions and uniform confidence bands.

/// Half-width of the two-sided Dvoretzky–Kiefer–Wolfowitz band (Massart
/// constant) for `n` samples at confidence `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Self {
        let mut sorted: Vec<f64> = samples.iter().copied().filter(|x| !x.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// `P(X < x)`.
    pub fn cdf_strict(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s < x) as f64 / self.sorted.len() as f64
    }

    /// Two-sample Kolmogorov–Smirnov statistic `sup |F - G|`.
    pub fn sup_distance(&self, other: &Ecdf) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0usize, 0usize);
        let mut d = 0.0f64;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_steps() {
        let e = Ecdf::new(&[0.0, 0.5, 0.5, 1.0]);
        assert_eq!(e.cdf(0.5), 0.75);
        assert_eq!(e.cdf_strict(0.5), 0.25);
        assert_eq!(e.cdf(-1.0), 0.0);
        assert_eq!(e.cdf(2.0), 1.0);
    }

    #[test]
    fn sup_distance_is_symmetric_and_exact() {
        let a = Ecdf::new(&[1.0, 2.0, 3.0, 4.0]);
        let b = Ecdf::new(&[3.5, 4.5]);
        assert_eq!(a.sup_distance(&b), 0.75);
        assert_eq!(b.sup_distance(&a), 0.75);
        assert_eq!(a.sup_distance(&a), 0.0);
    }

    #[test]
    fn dkw_band_width() {
        let e = dkw_epsilon(100_000, 0.01);
        assert!((e - (200f64.ln() / 200_000.0).sqrt()).abs() < 1e-15);
    }
}
