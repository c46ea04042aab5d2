//! Small statistical helpers shared by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN, n };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanSe { mean, se: 0.0, n };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    MeanSe { mean, se: (var / n as f64).sqrt(), n }
}

/// Mean and standard error from running sums `Σx`, `Σx²` over `n` samples.
pub fn mean_se_from_sums(sum: f64, sum_sq: f64, n: usize) -> MeanSe {
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN, n };
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n == 1 {
        return MeanSe { mean, se: 0.0, n };
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    MeanSe { mean, se: (var / nf).sqrt(), n }
}

/// Quantile of sorted data, linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted(xs), 0.5)
}

/// Standard error of a proportion.
pub fn proportion_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// `slope / slope_se`; `+inf` for an exact fit with positive slope.
    pub t_stat: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len().min(ys.len());
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs[..n]
        .iter()
        .zip(&ys[..n])
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_se = if n > 2 { (rss / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    let scale = ys[..n].iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let t_stat = if slope_se.is_nan() {
        f64::NAN
    } else if slope_se <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        if slope > 0.0 {
            f64::INFINITY
        } else if slope < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        slope / slope_se
    };
    LinearFit { slope, intercept, slope_se, t_stat }
}

/// One-sided Clopper–Pearson upper confidence bound for a binomial
/// proportion with `k` successes in `n` trials at level `1 - alpha`.
pub fn binomial_upper(k: usize, n: usize, alpha: f64) -> f64 {
    if n == 0 || k >= n {
        return 1.0;
    }
    let beta = Beta::new(k as f64 + 1.0, (n - k) as f64).expect("valid beta parameters");
    beta.inverse_cdf(1.0 - alpha).clamp(0.0, 1.0)
}

/// `ln(mean(exp(xs)))` without overflow.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + (s / xs.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (1.25f64 * 4.0 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        let s = mean_se_from_sums(10.0, 30.0, 4);
        assert!((s.se - m.se).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.25), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn exact_linear_fit_has_infinite_t() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert_eq!(f.t_stat, f64::INFINITY);
        let g = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(g.t_stat, 0.0);
    }

    #[test]
    fn clopper_pearson_zero_successes() {
        // k = 0: upper bound solves (1-p)^n = alpha
        let u = binomial_upper(0, 1000, 0.01);
        let exact = 1.0 - 0.01f64.powf(1.0 / 1000.0);
        assert!((u - exact).abs() < 1e-6, "{u} vs {exact}");
        assert!(binomial_upper(10, 1000, 0.01) > 0.01);
        assert_eq!(binomial_upper(5, 5, 0.01), 1.0);
    }

    #[test]
    fn log_mean_exp_handles_large_values() {
        let v = log_mean_exp(&[1000.0, 1000.0]);
        assert!((v - 1000.0).abs() < 1e-12);
        assert!((log_mean_exp(&[0.0, 2f64.ln()]) - 1.5f64.ln()).abs() < 1e-12);
    }
}
