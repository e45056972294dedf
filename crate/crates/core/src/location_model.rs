//! Location model `y_t = θ + ε_t` on `Θ = [0, ∞)` with a Gaussian parametric
//! bootstrap. Every bootstrap quantity has a closed form here, which makes it
//! the exact reference for the boundary phenomena of the regression setting.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::stats::normal_cdf;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LocSample {
    pub y: Vec<f64>,
    pub n: usize,
    /// Hypothesised true value; statistics are centred here.
    pub theta0: f64,
}

impl LocSample {
    pub fn new(y: Vec<f64>, theta0: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::config("location sample needs at least one observation"));
        }
        if !(theta0 >= 0.0) {
            return Err(Error::config(format!("θ₀ must be non-negative, got {theta0}")));
        }
        Ok(LocSample { n: y.len(), y, theta0 })
    }

    /// `y_t = θ₀ + ε_t`, `ε_t` i.i.d. N(0, 1).
    pub fn simulate<R: Rng + ?Sized>(theta0: f64, n: usize, rng: &mut R) -> Result<Self> {
        let y = (0..n).map(|_| theta0 + rng.sample::<f64, _>(StandardNormal)).collect();
        Self::new(y, theta0)
    }

    fn root_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }
}

/// `max{0, ȳ}`.
pub fn loc_fit(sample: &LocSample) -> f64 {
    let mean = sample.y.iter().sum::<f64>() / sample.n as f64;
    mean.max(0.0)
}

/// `P*(√n(θ̂* − θ̂) ≤ x) = Φ(x) 1{x ≥ −√n θ̂}` for the standard bootstrap.
pub fn loc_bootstrap_cdf(theta_hat: f64, n: usize, x: f64) -> f64 {
    if x >= -(n as f64).sqrt() * theta_hat {
        normal_cdf(x)
    } else {
        0.0
    }
}

/// `√n(g*(θ̂) − θ̂) = −√n θ̂^{1+κ}` for `g*(θ) = θ − |θ|^{1+κ}`.
pub fn loc_corrected_bootstrap_shift(theta_hat: f64, n: usize, kappa: f64) -> f64 {
    -(n as f64).sqrt() * theta_hat.abs().powf(1.0 + kappa)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocScheme {
    Standard,
    PowerCorrected { kappa: f64 },
}

impl LocScheme {
    /// Lower end `L` of the support of `√n(θ̂* − θ̂) = max{L, ξ*}`.
    pub fn lower_bound(&self, theta_hat: f64, n: usize) -> f64 {
        match *self {
            LocScheme::Standard => -(n as f64).sqrt() * theta_hat,
            LocScheme::PowerCorrected { kappa } => loc_corrected_bootstrap_shift(theta_hat, n, kappa),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LocScheme::Standard => "standard".into(),
            LocScheme::PowerCorrected { kappa } => format!("power({kappa})"),
        }
    }
}

/// `τ_n = √n(θ̂ − θ₀)`.
pub fn loc_statistic(sample: &LocSample) -> f64 {
    sample.root_n() * (loc_fit(sample) - sample.theta0)
}

/// Exact `p* = P*(τ* ≤ τ_n)`, `τ* = √n(θ̂* − θ̂) = max{L, ξ*}`.
pub fn loc_one_sided_p(sample: &LocSample, scheme: LocScheme) -> f64 {
    let tau = loc_statistic(sample);
    if tau >= scheme.lower_bound(loc_fit(sample), sample.n) {
        normal_cdf(tau)
    } else {
        0.0
    }
}

/// `p*` estimated from `b` simulated bootstrap statistics, with the
/// `(1 + #)/(b + 1)` count.
pub fn loc_simulated_p<R: Rng + ?Sized>(sample: &LocSample, scheme: LocScheme, b: usize, rng: &mut R) -> f64 {
    let tau = loc_statistic(sample);
    let lower = scheme.lower_bound(loc_fit(sample), sample.n);
    let below = (0..b)
        .filter(|_| lower.max(rng.sample::<f64, _>(StandardNormal)) <= tau)
        .count();
    (1 + below) as f64 / (b + 1) as f64
}

/// Asymptotic rejection probability of `{1 − p* ≤ q}`: `q` in the interior,
/// and `q` below one half (one above) at the boundary, where `τ_n → max{0, ξ}`.
pub fn loc_limit_rejection(theta0: f64, q: f64) -> f64 {
    if theta0 > 0.0 || q < 0.5 {
        q
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocDemoConfig {
    pub n: usize,
    pub reps: usize,
    pub kappa: f64,
    pub theta0: f64,
    /// Bootstrap draws behind each simulated p-value.
    pub bootstrap_draws: usize,
    pub levels: Vec<f64>,
}

impl Default for LocDemoConfig {
    fn default() -> Self {
        LocDemoConfig {
            n: 400,
            reps: 10_000,
            kappa: 0.5,
            theta0: 0.0,
            bootstrap_draws: 999,
            levels: vec![0.01, 0.05, 0.10, 0.25, 0.40, 0.60],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocDemoRow {
    pub scheme: String,
    pub level: f64,
    pub limit: f64,
    /// Rejection frequency with the exact bootstrap p-value.
    pub analytic: Option<f64>,
    /// Rejection frequency with the simulated bootstrap p-value.
    pub simulated: Option<f64>,
    /// Monte Carlo standard error of `analytic`.
    pub mc_se: Option<f64>,
}

/// Rejection frequencies of the one-sided location test, exact against
/// simulated bootstrap p-values. Replication `r` draws its data and bootstrap
/// normals from `stream(r)`.
pub fn loc_demo<R, F>(config: &LocDemoConfig, stream: F) -> Result<Vec<LocDemoRow>>
where
    R: Rng,
    F: Fn(usize) -> R,
{
    if config.n == 0 || !(config.kappa > 0.0) || !(config.theta0 >= 0.0) {
        return Err(Error::config("location demo needs n ≥ 1, κ > 0 and θ₀ ≥ 0"));
    }
    if config.levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::config("levels must lie in (0, 1)"));
    }
    let schemes = [LocScheme::Standard, LocScheme::PowerCorrected { kappa: config.kappa }];
    let mut exact = vec![vec![0usize; config.levels.len()]; schemes.len()];
    let mut sim = exact.clone();
    for r in 0..config.reps {
        let mut rng = stream(r);
        let sample = LocSample::simulate(config.theta0, config.n, &mut rng)?;
        for (s, scheme) in schemes.iter().enumerate() {
            let p = loc_one_sided_p(&sample, *scheme);
            let p_sim = loc_simulated_p(&sample, *scheme, config.bootstrap_draws, &mut rng);
            for (l, q) in config.levels.iter().enumerate() {
                exact[s][l] += usize::from(1.0 - p <= *q);
                sim[s][l] += usize::from(1.0 - p_sim <= *q);
            }
        }
    }
    let reps = config.reps as f64;
    let mut rows = Vec::new();
    for (s, scheme) in schemes.iter().enumerate() {
        for (l, q) in config.levels.iter().enumerate() {
            let (analytic, simulated, mc_se) = if config.reps == 0 {
                (None, None, None)
            } else {
                let f = exact[s][l] as f64 / reps;
                (Some(f), Some(sim[s][l] as f64 / reps), Some((f * (1.0 - f) / reps).sqrt()))
            };
            rows.push(LocDemoRow {
                scheme: scheme.label(),
                level: *q,
                limit: loc_limit_rejection(config.theta0, *q),
                analytic,
                simulated,
                mc_se,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::rng::{Role, StreamKey};
    use crate::stats::ks_distance_to_cdf;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rng(seed: u64) -> crate::rng::StreamRng {
        StreamKey::new(seed, 0, 0, Role::Data).rng()
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(loc_fit(&LocSample::new(vec![-1.0, -2.0, -3.0], 0.0).unwrap()), 0.0);
        assert_eq!(loc_fit(&LocSample::new(vec![1.0, 2.0, 3.0], 0.0).unwrap()), 2.0);
        assert!(LocSample::new(vec![], 0.0).is_err());
        assert!(LocSample::new(vec![1.0], -0.5).is_err());
    }

    proptest! {
        #[test]
        fn estimator_is_permutation_invariant(y in proptest::collection::vec(-5.0f64..5.0, 1..30)) {
            let mut rev = y.clone();
            rev.reverse();
            let a = loc_fit(&LocSample::new(y, 0.0).unwrap());
            let b = loc_fit(&LocSample::new(rev, 0.0).unwrap());
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn cdf_is_monotone_with_single_jump(theta in 0.0f64..2.0, n in 1usize..500, xs in proptest::collection::vec(-30.0f64..30.0, 2..40)) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            let vals: Vec<f64> = xs.iter().map(|x| loc_bootstrap_cdf(theta, n, *x)).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let jump_at = -(n as f64).sqrt() * theta;
            let jump = loc_bootstrap_cdf(theta, n, jump_at) - loc_bootstrap_cdf(theta, n, jump_at - 1e-9);
            prop_assert!((jump - normal_cdf(jump_at)).abs() < 1e-8);
        }
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(loc_bootstrap_cdf(0.0, 100, 0.0), 0.5);
        assert_eq!(loc_bootstrap_cdf(1.0, 100, -10.0001), 0.0);
        assert_eq!(loc_bootstrap_cdf(1.0, 100, 0.0), 0.5);
        assert_abs_diff_eq!(loc_bootstrap_cdf(1.0, 100, 1e9), 1.0);
    }

    #[test]
    fn cdf_matches_simulated_bootstrap() {
        let (theta, n) = (1.0, 100);
        let lower = -(n as f64).sqrt() * theta;
        let mut r = rng(1);
        let draws: Vec<f64> = (0..1_000_000).map(|_| lower.max(r.sample(StandardNormal))).collect();
        let below = draws.iter().filter(|&&d| d <= 0.0).count() as f64 / draws.len() as f64;
        assert!((below - 0.5).abs() < 0.002);
        let d = ks_distance_to_cdf(&draws, |x| loc_bootstrap_cdf(theta, n, x), |x| {
            if x <= lower {
                0.0
            } else {
                normal_cdf(x)
            }
        });
        assert!(d <= 0.002, "sup distance {d}");
    }

    #[test]
    fn corrected_shift_examples() {
        assert_eq!(loc_corrected_bootstrap_shift(0.0, 100, 1.0), 0.0);
        assert_abs_diff_eq!(loc_corrected_bootstrap_shift(0.04, 100, 1.0), -0.016, epsilon = 1e-15);
        assert_abs_diff_eq!(loc_corrected_bootstrap_shift(1.0, 100, 0.5), -10.0, epsilon = 1e-15);
    }

    #[test]
    fn one_sided_p_examples() {
        let s = LocSample::new(vec![-0.3, 0.1, -0.2], 0.0).unwrap();
        assert_eq!(loc_one_sided_p(&s, LocScheme::Standard), 0.5);
        assert_eq!(loc_one_sided_p(&s, LocScheme::PowerCorrected { kappa: 0.5 }), 0.5);
        // τ_n = 1.96 with θ̂ far from the boundary.
        let n = 4;
        let s = LocSample::new(vec![0.98; n], 0.0).unwrap();
        assert_abs_diff_eq!(loc_one_sided_p(&s, LocScheme::Standard), 0.9750021048517795, epsilon = 1e-12);
    }

    #[test]
    fn null_p_values_are_valid_below_one_half() {
        let config = LocDemoConfig {
            n: 400,
            reps: 10_000,
            bootstrap_draws: 0,
            ..LocDemoConfig::default()
        };
        let rows = loc_demo(&config, |r| StreamKey::new(7, 0, r as u64, Role::Data).rng()).unwrap();
        for row in rows {
            let f = row.analytic.unwrap();
            if row.level < 0.5 {
                let se = (row.level * (1.0 - row.level) / config.reps as f64).sqrt();
                assert!((f - row.level).abs() <= 3.0 * se, "{row:?}");
            } else {
                assert!(f >= 0.99, "{row:?}");
            }
        }
    }

    #[test]
    fn asymptotic_p_law_at_the_boundary() {
        // Φ(τ_n) ≤ 1/2 with probability 1/2; above 1/2 it is uniform.
        let reps = 20_000;
        let vals: Vec<f64> = (0..reps)
            .map(|r| {
                let s = LocSample::simulate(0.0, 400, &mut StreamKey::new(8, 0, r, Role::Data).rng()).unwrap();
                normal_cdf(loc_statistic(&s))
            })
            .collect();
        let se = (0.25 / reps as f64).sqrt();
        let at_half = vals.iter().filter(|v| **v <= 0.5).count() as f64 / reps as f64;
        assert!((at_half - 0.5).abs() <= 3.0 * se);
        for u in [0.6, 0.75, 0.9] {
            let f = vals.iter().filter(|v| **v <= u).count() as f64 / reps as f64;
            let se = (u * (1.0 - u) / reps as f64).sqrt();
            assert!((f - u).abs() <= 3.0 * se, "u={u}: {f}");
        }
    }

    #[test]
    fn interior_jump_location_diverges() {
        let mean_jump = |n: usize| {
            (0..200)
                .map(|r| {
                    let s = LocSample::simulate(0.5, n, &mut StreamKey::new(9, n as u64, r, Role::Data).rng()).unwrap();
                    LocScheme::Standard.lower_bound(loc_fit(&s), n)
                })
                .sum::<f64>()
                / 200.0
        };
        assert!(mean_jump(1600) < 3.0 * mean_jump(100));
    }

    #[test]
    fn demo_without_replications_has_only_limits() {
        let config = LocDemoConfig {
            reps: 0,
            ..LocDemoConfig::default()
        };
        let rows = loc_demo(&config, |r| rng(r as u64)).unwrap();
        assert_eq!(rows.len(), 2 * config.levels.len());
        assert!(rows.iter().all(|r| r.analytic.is_none() && r.simulated.is_none()));
        assert_eq!(rows.last().unwrap().limit, 1.0);
    }

    #[test]
    fn demo_rejects_bad_levels() {
        let config = LocDemoConfig {
            levels: vec![1.5],
            ..LocDemoConfig::default()
        };
        assert!(loc_demo(&config, |r| rng(r as u64)).is_err());
    }
}
