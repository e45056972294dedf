//! Fixed-regressor wild bootstrap over data-dependent bootstrap parameter spaces.
//!
//! Bootstrap samples keep the regressor fixed and perturb the constrained
//! residuals, `y*_t = θ̂₁ + θ̂₂ x_{n,t-1} + ê_t w_t`. Re-estimation happens over
//! `Θ* = {θ : g(θ) ≥ g*(θ̂)}` for the threshold schemes, or through the
//! directional transforms for [`Scheme::TransformFS`] and
//! [`Scheme::NumericalHL`].
//!
//! [`BootstrapEngine`] holds everything that depends only on the original
//! sample. Since `x` is fixed, the unconstrained bootstrap estimate is
//! `θ̃* = θ̂ + (X'X)⁻¹X'(ê∘w)`, and every scheme evaluated on the same weights
//! is a cheap projection of that one point.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::constrained_ls::{
    fit_constrained, fit_unconstrained, project_onto_constraint, statistic_at, ConstraintSpec,
    FitResult, HypothesisSpec, Reference, RejectionSide,
};
use crate::dgp::{split_call, TimeSeriesSample};
use crate::geometry::project_halfplane;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum WeightKind {
    #[default]
    Gaussian,
    Rademacher,
}

impl WeightKind {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            WeightKind::Gaussian => rng.sample(StandardNormal),
            WeightKind::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Gaussian => "gaussian",
            WeightKind::Rademacher => "rademacher",
        })
    }
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(WeightKind::Gaussian),
            "rademacher" => Ok(WeightKind::Rademacher),
            other => Err(Error::config(format!("unknown weight kind `{other}`"))),
        }
    }
}

/// Bootstrap parameter-space family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// `g* = 0`: the bootstrap uses `Θ` itself.
    Standard,
    /// `g* = g`.
    Restricted,
    /// `g* = g − |g|^{1+κ}`.
    PowerCorrected { kappa: f64 },
    /// `g* = g − n^{-κ}|g|`.
    RateCorrected { kappa: f64 },
    /// Plug-in directional transform with lower bound `−√n |g(θ̂)|^{1+κ}`.
    TransformFS { kappa: f64 },
    /// Numerical-derivative bootstrap with step `s_n = n^{1/2−γ}`.
    NumericalHL { gamma: f64 },
}

impl Scheme {
    pub const DEFAULT_GAMMA: f64 = 1.0 / 6.0;

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Scheme::Standard | Scheme::Restricted => true,
            Scheme::PowerCorrected { kappa } | Scheme::TransformFS { kappa } => kappa > 0.0 && kappa.is_finite(),
            Scheme::RateCorrected { kappa } => kappa > 0.0 && kappa < 0.5,
            Scheme::NumericalHL { gamma } => gamma > 0.0 && gamma < 0.5,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("tuning constant out of range in `{self}`")))
        }
    }

    /// Family name without the tuning constant.
    pub fn family(&self) -> &'static str {
        match self {
            Scheme::Standard => "standard",
            Scheme::Restricted => "restricted",
            Scheme::PowerCorrected { .. } => "power",
            Scheme::RateCorrected { .. } => "rate",
            Scheme::TransformFS { .. } => "transform",
            Scheme::NumericalHL { .. } => "numerical",
        }
    }

    /// κ (or γ for the numerical bootstrap), if the family has one.
    pub fn tuning(&self) -> Option<f64> {
        match *self {
            Scheme::Standard | Scheme::Restricted => None,
            Scheme::PowerCorrected { kappa }
            | Scheme::RateCorrected { kappa }
            | Scheme::TransformFS { kappa } => Some(kappa),
            Scheme::NumericalHL { gamma } => Some(gamma),
        }
    }

    /// Build a family member from its name and tuning constant.
    pub fn from_family(family: &str, tuning: Option<f64>) -> Result<Self> {
        let need = |t: Option<f64>| t.ok_or_else(|| Error::config(format!("scheme `{family}` needs a tuning constant")));
        let scheme = match family {
            "standard" => Scheme::Standard,
            "restricted" => Scheme::Restricted,
            "power" => Scheme::PowerCorrected { kappa: need(tuning)? },
            "rate" => Scheme::RateCorrected { kappa: need(tuning)? },
            "transform" => Scheme::TransformFS { kappa: need(tuning)? },
            "numerical" => Scheme::NumericalHL {
                gamma: tuning.unwrap_or(Self::DEFAULT_GAMMA),
            },
            other => return Err(Error::config(format!("unknown scheme `{other}`"))),
        };
        if matches!(scheme, Scheme::Standard | Scheme::Restricted) && tuning.is_some() {
            return Err(Error::config(format!("scheme `{family}` takes no tuning constant")));
        }
        scheme.validate()?;
        Ok(scheme)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tuning() {
            Some(t) => write!(f, "{}({t})", self.family()),
            None => f.write_str(self.family()),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        match args.as_slice() {
            [] => Scheme::from_family(name, None),
            [t] => Scheme::from_family(name, Some(*t)),
            _ => Err(Error::config(format!("too many arguments in `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub weights: WeightKind,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme, weights: WeightKind) -> Self {
        SchemeSpec { scheme, weights }
    }
}

impl From<Scheme> for SchemeSpec {
    fn from(scheme: Scheme) -> Self {
        SchemeSpec::new(scheme, WeightKind::Gaussian)
    }
}

/// `g*(θ̂)`, the lower bound of `Θ*`.
///
/// The two transform schemes do not re-estimate over `Θ*`; for them this
/// returns the bound they imply when `g` is affine (`g − |g|^{1+κ}` and
/// `g − n^{-γ} g` respectively).
pub fn bootstrap_threshold(scheme: &Scheme, fit: &FitResult, constraint: &ConstraintSpec, n: usize) -> f64 {
    threshold_at(scheme, constraint.value(&fit.theta_hat), n)
}

fn threshold_at(scheme: &Scheme, g: f64, n: usize) -> f64 {
    let n = n as f64;
    match *scheme {
        Scheme::Standard => 0.0,
        Scheme::Restricted => g,
        Scheme::PowerCorrected { kappa } | Scheme::TransformFS { kappa } => g - g.abs().powf(1.0 + kappa),
        Scheme::RateCorrected { kappa } => g - n.powf(-kappa) * g.abs(),
        Scheme::NumericalHL { gamma } => g - n.powf(-gamma) * g,
    }
}

/// Row-major `B × n` matrix of wild weights shared by every scheme of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn draw<R: Rng + ?Sized>(kind: WeightKind, n: usize, replications: usize, rng: &mut R) -> Self {
        WeightMatrix {
            n,
            data: (0..n * replications).map(|_| kind.draw(rng)).collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::config("weight rows differ in length"));
        }
        Ok(WeightMatrix {
            n,
            data: rows.concat(),
        })
    }

    /// All `2^n` sign vectors; row `k` has `w_t = +1` iff bit `t` of `k` is set.
    pub fn rademacher_exhaustive(n: usize) -> Self {
        assert!(n < 24, "exhaustive enumeration is limited to n < 24");
        let data = (0..1usize << n)
            .flat_map(|k| (0..n).map(move |t| if k >> t & 1 == 1 { 1.0 } else { -1.0 }))
            .collect();
        WeightMatrix { n, data }
    }

    pub fn replications(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.data[b * self.n..(b + 1) * self.n]
    }
}

/// `y*_t = θ̂₁ + θ̂₂ x_{n,t-1} + ê_t w_t` for given weights.
pub fn bootstrap_sample_with_weights(sample: &TimeSeriesSample, fit: &FitResult, weights: &[f64]) -> TimeSeriesSample {
    assert_eq!(weights.len(), sample.n, "one weight per observation");
    let t = fit.theta_hat;
    let y = sample
        .x_lag()
        .iter()
        .zip(&fit.residuals)
        .zip(weights)
        .map(|((x, e), w)| t[0] + t[1] * x + e * w)
        .collect();
    TimeSeriesSample {
        y,
        ..sample.clone()
    }
}

pub fn generate_bootstrap_sample<R: Rng + ?Sized>(
    sample: &TimeSeriesSample,
    fit: &FitResult,
    weights: WeightKind,
    rng: &mut R,
) -> TimeSeriesSample {
    let w: Vec<f64> = (0..sample.n).map(|_| weights.draw(rng)).collect();
    bootstrap_sample_with_weights(sample, fit, &w)
}

fn transform_deviation(
    scheme: &Scheme,
    u: &Vector2<f64>,
    original: &FitResult,
    constraint: &ConstraintSpec,
    n: usize,
) -> Result<Vector2<f64>> {
    let root_n = (n as f64).sqrt();
    match *scheme {
        Scheme::TransformFS { kappa } => {
            let g = constraint.value(&original.theta_hat);
            let g_dot = constraint.gradient(&original.theta_hat);
            project_halfplane(u, &original.m_n, &g_dot, -root_n * g.abs().powf(1.0 + kappa))
        }
        Scheme::NumericalHL { gamma } => {
            let s_n = (n as f64).powf(0.5 - gamma);
            let center = original.theta_hat + u / s_n;
            let sol = project_onto_constraint(&center, &original.m_n, constraint, 0.0)?;
            Ok((sol.theta - original.theta_hat) * s_n)
        }
        _ => unreachable!("threshold schemes are fitted directly"),
    }
}

/// Re-estimate on a bootstrap sample.
///
/// Threshold schemes return the constrained fit over `Θ*` without the `Δx`
/// term. The transform schemes return the unconstrained fit with `θ̂*`
/// replaced by `θ̂ + n^{-1/2} d`, where `d` is the transformed deviation
/// (for the numerical bootstrap `d = s_n(θ̂*_nb − θ̂)`, which plays the role of
/// `√n(θ̂* − θ̂)` in the statistics).
pub fn bootstrap_estimate(
    bsample: &TimeSeriesSample,
    scheme: &Scheme,
    constraint: &ConstraintSpec,
    original_fit: &FitResult,
    n: usize,
) -> Result<FitResult> {
    scheme.validate()?;
    let threshold = bootstrap_threshold(scheme, original_fit, constraint, n);
    match scheme {
        Scheme::TransformFS { .. } | Scheme::NumericalHL { .. } => {
            let mut fit = fit_unconstrained(bsample, false)?;
            let root_n = (n as f64).sqrt();
            let u = (fit.theta_tilde - original_fit.theta_hat) * root_n;
            let d = transform_deviation(scheme, &u, original_fit, constraint, n)?;
            fit.theta_hat = original_fit.theta_hat + d / root_n;
            fit.constraint_active = d != u;
            fit.threshold = threshold;
            fit.residuals = bsample
                .y
                .iter()
                .zip(bsample.x_lag())
                .map(|(y, x)| y - fit.theta_hat[0] - fit.theta_hat[1] * x)
                .collect();
            fit.sigma_e2_hat = fit.rss() / bsample.n as f64;
            Ok(fit)
        }
        _ => fit_constrained(bsample, constraint, threshold, false),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapRun {
    pub tau_star: Vec<f64>,
    pub tau_n: f64,
    /// `(1 + #{τ*_b ≥ τ_n}) / (B + 1)`.
    pub p_upper: f64,
    /// `(1 + #{τ*_b ≤ τ_n}) / (B + 1)`.
    pub p_lower: f64,
    pub scheme: Scheme,
    pub b: usize,
}

impl BootstrapRun {
    pub fn from_statistics(tau_n: f64, tau_star: Vec<f64>, scheme: Scheme) -> Self {
        let b = tau_star.len();
        let above = tau_star.iter().filter(|&&t| t >= tau_n).count();
        let below = tau_star.iter().filter(|&&t| t <= tau_n).count();
        let denom = (b + 1) as f64;
        BootstrapRun {
            p_upper: (1 + above) as f64 / denom,
            p_lower: (1 + below) as f64 / denom,
            tau_star,
            tau_n,
            scheme,
            b,
        }
    }

    /// The quantity compared with the nominal level: `p_upper` for tests
    /// rejecting in the upper tail, `1 − p_lower` for the one-sided boundary test.
    pub fn decision_p(&self, side: RejectionSide) -> f64 {
        decision_p(self.p_upper, self.p_lower, side)
    }

    pub fn rejects(&self, side: RejectionSide, level: f64) -> bool {
        self.decision_p(side) <= level
    }
}

fn decision_p(p_upper: f64, p_lower: f64, side: RejectionSide) -> f64 {
    match side {
        RejectionSide::Upper => p_upper,
        RejectionSide::OneSided => 1.0 - p_lower,
    }
}

/// Original fit and the data-only quantities every bootstrap repetition reuses.
pub struct BootstrapEngine<'a> {
    constraint: &'a ConstraintSpec,
    hyp: &'a HypothesisSpec,
    fit: FitResult,
    n: usize,
    root_n: f64,
    xtx_inv: Matrix2<f64>,
    x_lag: Vec<f64>,
    g_hat: f64,
    g_tilde: f64,
    reference: Reference,
    tau_n: f64,
}

impl<'a> BootstrapEngine<'a> {
    /// Fits the constrained model (with `Δx` when the regressor is persistent)
    /// and computes `τ_n`.
    pub fn new(sample: &TimeSeriesSample, constraint: &'a ConstraintSpec, hyp: &'a HypothesisSpec) -> Result<Self> {
        hyp.validate(constraint)?;
        let fit = fit_constrained(sample, constraint, 0.0, sample.regressor.include_delta())?;
        let n = sample.n;
        let xtx_inv = (fit.m_n * n as f64)
            .try_inverse()
            .ok_or(Error::SingularDesign {
                condition: f64::INFINITY,
            })?;
        let tau_n = statistic_at(&fit.theta_hat, &fit.m_n, hyp, constraint, n, hyp.null_reference());
        Ok(BootstrapEngine {
            constraint,
            hyp,
            n,
            root_n: (n as f64).sqrt(),
            xtx_inv,
            x_lag: sample.x_lag().to_vec(),
            g_hat: constraint.value(&fit.theta_hat),
            g_tilde: constraint.value(&fit.theta_tilde),
            reference: hyp.bootstrap_reference(&fit, constraint),
            tau_n,
            fit,
        })
    }

    pub fn fit(&self) -> &FitResult {
        &self.fit
    }

    pub fn tau_n(&self) -> f64 {
        self.tau_n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `θ̃* = θ̂ + (X'X)⁻¹ X'(ê∘w)`.
    pub fn unconstrained_draw(&self, weights: &[f64]) -> Vector2<f64> {
        let (mut s0, mut s1) = (0.0, 0.0);
        for ((e, x), w) in self.fit.residuals.iter().zip(&self.x_lag).zip(weights) {
            let ew = e * w;
            s0 += ew;
            s1 += x * ew;
        }
        self.fit.theta_hat + self.xtx_inv * Vector2::new(s0, s1)
    }

    fn project(&self, theta_tilde_star: &Vector2<f64>, threshold: f64) -> Result<Vector2<f64>> {
        let sol = project_onto_constraint(theta_tilde_star, &self.fit.m_n, self.constraint, threshold)?;
        Ok((sol.theta - self.fit.theta_hat) * self.root_n)
    }

    /// Normalised bootstrap deviation `√n(θ̂* − θ̂)` (`s_n(θ̂*_nb − θ̂)` for the
    /// numerical bootstrap).
    pub fn deviation(&self, scheme: &Scheme, theta_tilde_star: &Vector2<f64>) -> Result<Vector2<f64>> {
        match scheme {
            Scheme::TransformFS { .. } | Scheme::NumericalHL { .. } => {
                let u = (theta_tilde_star - self.fit.theta_hat) * self.root_n;
                transform_deviation(scheme, &u, &self.fit, self.constraint, self.n)
            }
            _ => self.project(theta_tilde_star, threshold_at(scheme, self.g_hat, self.n)),
        }
    }

    /// `τ*` for a normalised deviation `d`.
    pub fn statistic(&self, d: &Vector2<f64>) -> f64 {
        let theta = self.fit.theta_hat + d / self.root_n;
        statistic_at(&theta, &self.fit.m_n, self.hyp, self.constraint, self.n, self.reference)
    }

    /// One [`BootstrapRun`] per scheme, all on the same weights.
    pub fn run(&self, schemes: &[Scheme], weights: &WeightMatrix) -> Result<Vec<BootstrapRun>> {
        for s in schemes {
            s.validate()?;
        }
        let b = weights.replications();
        let mut tau = vec![Vec::with_capacity(b); schemes.len()];
        for r in 0..b {
            let tilde = self.unconstrained_draw(weights.row(r));
            for (scheme, out) in schemes.iter().zip(tau.iter_mut()) {
                out.push(self.statistic(&self.deviation(scheme, &tilde)?));
            }
        }
        Ok(schemes
            .iter()
            .zip(tau)
            .map(|(s, t)| BootstrapRun::from_statistics(self.tau_n, t, *s))
            .collect())
    }

    /// Grid over `I_n = [−|g(θ̃)|^{1−μ}, g(θ̂)]`; a single point means `g(θ̂)`.
    pub fn sup_grid(&self, mu: f64, grid_points: usize) -> Vec<f64> {
        let hi = self.g_hat;
        if grid_points <= 1 {
            return vec![hi];
        }
        let lo = -self.g_tilde.abs().powf(1.0 - mu);
        let step = (hi - lo) / (grid_points - 1) as f64;
        (0..grid_points)
            .map(|i| if i + 1 == grid_points { hi } else { lo + step * i as f64 })
            .collect()
    }

    /// Decision p-values over the grid of [`Self::sup_grid`], each computed on
    /// `Θ*_s = {g(θ) ≥ s − g(θ̂)^{1+κ}}` with the shared weights.
    pub fn grid_p_values(&self, kappa: f64, mu: f64, grid_points: usize, weights: &WeightMatrix) -> Result<Vec<(f64, f64)>> {
        if !(kappa > 0.0) || !(mu > 0.0 && mu < 1.0) {
            return Err(Error::config("sup-p needs κ > 0 and μ in (0, 1)"));
        }
        let grid = self.sup_grid(mu, grid_points);
        let correction = self.g_hat.powf(1.0 + kappa);
        let b = weights.replications();
        let mut above = vec![0usize; grid.len()];
        let mut below = vec![0usize; grid.len()];
        for r in 0..b {
            let tilde = self.unconstrained_draw(weights.row(r));
            for (i, s) in grid.iter().enumerate() {
                let t = self.statistic(&self.project(&tilde, s - correction)?);
                above[i] += usize::from(t >= self.tau_n);
                below[i] += usize::from(t <= self.tau_n);
            }
        }
        let denom = (b + 1) as f64;
        let side = self.hyp.side();
        Ok(grid
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let p = decision_p((1 + above[i]) as f64 / denom, (1 + below[i]) as f64 / denom, side);
                (*s, p)
            })
            .collect())
    }

    pub fn sup_p(&self, kappa: f64, mu: f64, grid_points: usize, weights: &WeightMatrix) -> Result<f64> {
        Ok(self
            .grid_p_values(kappa, mu, grid_points, weights)?
            .into_iter()
            .map(|(_, p)| p)
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

pub fn run_bootstrap_with_weights(
    sample: &TimeSeriesSample,
    constraint: &ConstraintSpec,
    hyp: &HypothesisSpec,
    scheme: &Scheme,
    weights: &WeightMatrix,
) -> Result<BootstrapRun> {
    let engine = BootstrapEngine::new(sample, constraint, hyp)?;
    Ok(engine.run(std::slice::from_ref(scheme), weights)?.remove(0))
}

pub fn run_bootstrap<R: Rng + ?Sized>(
    sample: &TimeSeriesSample,
    constraint: &ConstraintSpec,
    hyp: &HypothesisSpec,
    scheme: &SchemeSpec,
    b: usize,
    rng: &mut R,
) -> Result<BootstrapRun> {
    if b == 0 {
        return Err(Error::config("B must be at least 1"));
    }
    let weights = WeightMatrix::draw(scheme.weights, sample.n, b, rng);
    run_bootstrap_with_weights(sample, constraint, hyp, &scheme.scheme, &weights)
}

/// Largest bootstrap p-value over the grid of bootstrap boundaries in `I_n`,
/// with Gaussian weights shared across grid points.
#[allow(clippy::too_many_arguments)]
pub fn conservative_sup_p<R: Rng + ?Sized>(
    sample: &TimeSeriesSample,
    constraint: &ConstraintSpec,
    hyp: &HypothesisSpec,
    kappa: f64,
    mu: f64,
    grid_points: usize,
    b: usize,
    rng: &mut R,
) -> Result<f64> {
    if b == 0 || grid_points == 0 {
        return Err(Error::config("sup-p needs B ≥ 1 and at least one grid point"));
    }
    let engine = BootstrapEngine::new(sample, constraint, hyp)?;
    let weights = WeightMatrix::draw(WeightKind::Gaussian, sample.n, b, rng);
    engine.sup_p(kappa, mu, grid_points, &weights)
}
