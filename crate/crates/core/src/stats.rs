//! Small distributional helpers used by the location model and the checks.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(p)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`. Ties across
/// the samples are handled by stepping over every copy of a value at once.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
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

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test: statistic and asymptotic p-value with the usual
/// small-sample correction of the effective size.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = ks_statistic(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let root = ne.sqrt();
    (d, kolmogorov_tail((root + 0.12 + 0.11 / root) * d))
}

/// `sup_x |F_emp(x) − F(x)|` for a cdf that may jump. `left(x)` is the left
/// limit `F(x−)`.
pub fn ks_distance_to_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64, left: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let below = i as f64 / n;
        while i < s.len() && s[i] == x {
            i += 1;
        }
        let at = i as f64 / n;
        d = d.max((at - cdf(x)).abs()).max((below - left(x)).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_values() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(1.959963984540054), 0.975, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_quantile(0.975), 1.959963984540054, epsilon = 1e-9);
    }

    #[test]
    fn ks_statistic_by_hand() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_abs_diff_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        // At 1: F_a = 1 while F_b is still 1/4.
        assert_abs_diff_eq!(ks_statistic(&[0.0, 1.0], &[0.0, 2.0, 2.0, 2.0]), 0.75);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Classical critical values of the Kolmogorov distribution.
        assert_abs_diff_eq!(kolmogorov_tail(1.3581), 0.05, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_tail(1.6276), 0.01, epsilon = 1e-4);
    }

    #[test]
    fn distance_to_cdf_with_atom() {
        // Half the mass at 0, half at 1.
        let cdf = |x: f64| if x < 0.0 { 0.0 } else if x < 1.0 { 0.5 } else { 1.0 };
        let left = |x: f64| if x <= 0.0 { 0.0 } else if x <= 1.0 { 0.5 } else { 1.0 };
        assert_eq!(ks_distance_to_cdf(&[0.0, 1.0], cdf, left), 0.0);
        assert_abs_diff_eq!(ks_distance_to_cdf(&[0.0, 0.0, 0.0, 1.0], cdf, left), 0.25);
    }
}
