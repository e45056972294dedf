//! Least squares for the augmented predictive regression
//! `y_t = θ₁ + θ₂ x_{n,t-1} + δ Δx_{n,t} + e_t`, unconstrained and subject to
//! `g(θ) ≥ threshold`.
//!
//! Only `θ` is constrained. After concentrating out `δ` the residual sum of
//! squares is `RSS(θ̃) + n (θ − θ̃)' M_p (θ − θ̃)`, where `θ̃` is the
//! unconstrained estimate and `M_p` the moment matrix of `(1, x_{n,t-1})`
//! with `Δx_{n,t}` partialled out, so every constrained fit is a projection of
//! `θ̃` onto `{g ≥ threshold}` in the `M_p` metric. Affine constraints are
//! solved in closed form, smooth ones by damped Newton iteration on the
//! equality-constrained KKT system.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};

use crate::dgp::TimeSeriesSample;
use crate::geometry::{check_positive_definite, MAX_CONDITION};
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&Vector2<f64>) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&Vector2<f64>) -> Vector2<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&Vector2<f64>) -> Matrix2<f64> + Send + Sync>;

/// `g(θ) = a'θ − b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: Vector2<f64>,
    pub b: f64,
}

/// The smooth function `g` defining `Θ = {θ : g(θ) ≥ 0}`.
#[derive(Clone)]
pub struct ConstraintSpec {
    g: ScalarFn,
    grad: GradientFn,
    hessian: Option<HessianFn>,
    affine: Option<Affine>,
    label: String,
}

impl fmt::Debug for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintSpec")
            .field("label", &self.label)
            .field("affine", &self.affine)
            .finish()
    }
}

impl ConstraintSpec {
    pub fn affine(a: Vector2<f64>, b: f64) -> Self {
        ConstraintSpec {
            g: Arc::new(move |t| a.dot(t) - b),
            grad: Arc::new(move |_| a),
            hessian: Some(Arc::new(|_| Matrix2::zeros())),
            affine: Some(Affine { a, b }),
            label: format!("affine({},{},{})", a[0], a[1], b),
        }
    }

    /// `g(θ) = θ₂`: non-negative slope.
    pub fn nonnegative_slope() -> Self {
        Self::affine(Vector2::new(0.0, 1.0), 0.0)
    }

    /// A general smooth constraint. The Hessian is optional; without it the
    /// Newton solver differentiates the gradient numerically.
    pub fn smooth(
        label: impl Into<String>,
        g: impl Fn(&Vector2<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vector2<f64>) -> Vector2<f64> + Send + Sync + 'static,
        hessian: Option<HessianFn>,
    ) -> Self {
        ConstraintSpec {
            g: Arc::new(g),
            grad: Arc::new(grad),
            hessian,
            affine: None,
            label: label.into(),
        }
    }

    pub fn value(&self, theta: &Vector2<f64>) -> f64 {
        (self.g)(theta)
    }

    pub fn gradient(&self, theta: &Vector2<f64>) -> Vector2<f64> {
        (self.grad)(theta)
    }

    pub fn affine_part(&self) -> Option<Affine> {
        self.affine
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn hessian(&self, theta: &Vector2<f64>) -> Matrix2<f64> {
        if let Some(h) = &self.hessian {
            return h(theta);
        }
        let mut out = Matrix2::zeros();
        for j in 0..2 {
            let step = 1e-6 * theta[j].abs().max(1.0);
            let mut up = *theta;
            let mut down = *theta;
            up[j] += step;
            down[j] -= step;
            let col = (self.gradient(&up) - self.gradient(&down)) / (2.0 * step);
            out.set_column(j, &col);
        }
        (out + out.transpose()) * 0.5
    }

    fn checked_gradient(&self, theta: &Vector2<f64>) -> Result<Vector2<f64>> {
        let g = self.gradient(theta);
        if g[0] == 0.0 && g[1] == 0.0 {
            return Err(Error::ZeroGradient(theta[0], theta[1]));
        }
        Ok(g)
    }
}

/// Null hypothesis configurations.
#[derive(Clone)]
pub enum HypothesisSpec {
    /// `g(θ₀) = 0`, tested one-sided with `√n g(θ̂)`.
    BoundaryNull,
    /// `θ₀ = θ̄` with `g(θ̄) = 0`, tested with `n (θ̂ − θ̄)' M_n (θ̂ − θ̄)`.
    SimpleNull(Vector2<f64>),
    /// `h(θ₀) = 0`, tested with `(√n h(θ̂))²`.
    SmoothNull {
        h: ScalarFn,
        grad: GradientFn,
        label: String,
    },
}

impl fmt::Debug for HypothesisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypothesisSpec::BoundaryNull => write!(f, "BoundaryNull"),
            HypothesisSpec::SimpleNull(t) => write!(f, "SimpleNull({}, {})", t[0], t[1]),
            HypothesisSpec::SmoothNull { label, .. } => write!(f, "SmoothNull({label})"),
        }
    }
}

/// Which tail of the bootstrap distribution a test rejects in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectionSide {
    /// Reject for large statistics: p-value `P*(τ* ≥ τ)`.
    Upper,
    /// One-sided boundary test: reject when `1 − P*(τ* ≤ τ)` is small.
    OneSided,
}

/// Centering of a statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Scalar(f64),
    Point(Vector2<f64>),
}

impl HypothesisSpec {
    /// `h(θ) = r'θ − c`.
    pub fn linear(r: Vector2<f64>, c: f64) -> Self {
        HypothesisSpec::SmoothNull {
            h: Arc::new(move |t| r.dot(t) - c),
            grad: Arc::new(move |_| r),
            label: format!("linear({},{},{})", r[0], r[1], c),
        }
    }

    /// `h(θ) = θ₁ + θ₂`.
    pub fn intercept_plus_slope() -> Self {
        Self::linear(Vector2::new(1.0, 1.0), 0.0)
    }

    pub fn label(&self) -> String {
        match self {
            HypothesisSpec::BoundaryNull => "boundary".into(),
            HypothesisSpec::SimpleNull(t) => format!("simple({},{})", t[0], t[1]),
            HypothesisSpec::SmoothNull { label, .. } => label.clone(),
        }
    }

    pub fn validate(&self, constraint: &ConstraintSpec) -> Result<()> {
        if let HypothesisSpec::SimpleNull(t) = self {
            let g = constraint.value(t);
            if g.abs() > 1e-10 {
                return Err(Error::config(format!(
                    "simple null ({}, {}) is not on the boundary: g = {g}",
                    t[0], t[1]
                )));
            }
        }
        Ok(())
    }

    pub fn side(&self) -> RejectionSide {
        match self {
            HypothesisSpec::BoundaryNull => RejectionSide::OneSided,
            _ => RejectionSide::Upper,
        }
    }

    /// Centering for the original statistic.
    pub fn null_reference(&self) -> Reference {
        match self {
            HypothesisSpec::SimpleNull(t) => Reference::Point(*t),
            _ => Reference::Scalar(0.0),
        }
    }

    /// Centering for bootstrap statistics: the original estimate.
    pub fn bootstrap_reference(&self, fit: &FitResult, constraint: &ConstraintSpec) -> Reference {
        match self {
            HypothesisSpec::BoundaryNull => Reference::Scalar(constraint.value(&fit.theta_hat)),
            HypothesisSpec::SimpleNull(_) => Reference::Point(fit.theta_hat),
            HypothesisSpec::SmoothNull { h, .. } => Reference::Scalar(h(&fit.theta_hat)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: Vector2<f64>,
    pub delta_hat: Option<f64>,
    /// Unconstrained estimate of `θ`.
    pub theta_tilde: Vector2<f64>,
    pub residuals: Vec<f64>,
    /// `n⁻¹ Σ x̃_t x̃_t'`, `x̃_t = (1, x_{n,t-1})'`.
    pub m_n: Matrix2<f64>,
    /// Metric of the concentrated objective (`M_n` with `Δx` partialled out).
    pub metric: Matrix2<f64>,
    /// `n⁻¹ Σ ê_t²`.
    pub sigma_e2_hat: f64,
    pub constraint_active: bool,
    /// KKT multiplier for the objective `n⁻¹ RSS(θ)`.
    pub multiplier: f64,
    pub threshold: f64,
}

impl FitResult {
    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

/// Sums needed for the normal equations.
struct Moments {
    n: f64,
    sx: f64,
    sxx: f64,
    sd: f64,
    sxd: f64,
    sdd: f64,
    sy: f64,
    sxy: f64,
    sdy: f64,
}

impl Moments {
    fn new(sample: &TimeSeriesSample) -> Self {
        let mut m = Moments {
            n: sample.n as f64,
            sx: 0.0,
            sxx: 0.0,
            sd: 0.0,
            sxd: 0.0,
            sdd: 0.0,
            sy: 0.0,
            sxy: 0.0,
            sdy: 0.0,
        };
        for ((x, d), y) in sample.x_lag().iter().zip(sample.dx()).zip(&sample.y) {
            m.sx += x;
            m.sxx += x * x;
            m.sd += d;
            m.sxd += x * d;
            m.sdd += d * d;
            m.sy += y;
            m.sxy += x * y;
            m.sdy += d * y;
        }
        m
    }

    fn m_n(&self) -> Matrix2<f64> {
        Matrix2::new(self.n, self.sx, self.sx, self.sxx) / self.n
    }
}

fn condition3(m: &Matrix3<f64>) -> f64 {
    let eig = SymmetricEigen::new(*m);
    let lo = eig.eigenvalues.min();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        eig.eigenvalues.max() / lo
    }
}

struct Unconstrained {
    theta: Vector2<f64>,
    m_n: Matrix2<f64>,
    metric: Matrix2<f64>,
    moments: Moments,
}

fn solve_unconstrained(sample: &TimeSeriesSample, include_delta: bool) -> Result<Unconstrained> {
    let mo = Moments::new(sample);
    let m_n = mo.m_n();
    check_positive_definite(&m_n)?;
    let (theta, metric) = if include_delta {
        let xtx = Matrix3::new(
            mo.n, mo.sx, mo.sd, //
            mo.sx, mo.sxx, mo.sxd, //
            mo.sd, mo.sxd, mo.sdd,
        );
        let condition = condition3(&xtx);
        if condition > MAX_CONDITION {
            return Err(Error::SingularDesign { condition });
        }
        let beta = xtx
            .cholesky()
            .ok_or(Error::SingularDesign { condition })?
            .solve(&Vector3::new(mo.sy, mo.sxy, mo.sdy));
        let cross = Vector2::new(mo.sd, mo.sxd);
        let metric = (Matrix2::new(mo.n, mo.sx, mo.sx, mo.sxx) - cross * cross.transpose() / mo.sdd) / mo.n;
        check_positive_definite(&metric)?;
        (Vector2::new(beta[0], beta[1]), metric)
    } else {
        let theta = (m_n * mo.n)
            .cholesky()
            .ok_or(Error::SingularDesign {
                condition: f64::INFINITY,
            })?
            .solve(&Vector2::new(mo.sy, mo.sxy));
        (theta, m_n)
    };
    Ok(Unconstrained {
        theta,
        m_n,
        metric,
        moments: mo,
    })
}

fn finish_fit(
    sample: &TimeSeriesSample,
    un: Unconstrained,
    include_delta: bool,
    solution: BoundarySolution,
    threshold: f64,
) -> FitResult {
    let theta = solution.theta;
    let mo = &un.moments;
    let delta_hat = include_delta.then(|| (mo.sdy - theta[0] * mo.sd - theta[1] * mo.sxd) / mo.sdd);
    let d = delta_hat.unwrap_or(0.0);
    let residuals: Vec<f64> = sample
        .y
        .iter()
        .zip(sample.x_lag())
        .zip(sample.dx())
        .map(|((y, x), dx)| y - theta[0] - theta[1] * x - d * dx)
        .collect();
    let sigma_e2_hat = residuals.iter().map(|e| e * e).sum::<f64>() / sample.n as f64;
    FitResult {
        theta_hat: theta,
        delta_hat,
        theta_tilde: un.theta,
        residuals,
        m_n: un.m_n,
        metric: un.metric,
        sigma_e2_hat,
        constraint_active: solution.active,
        multiplier: solution.multiplier,
        threshold,
    }
}

/// OLS of `y_t` on `(1, x_{n,t-1})`, plus `Δx_{n,t}` when `include_delta`.
pub fn fit_unconstrained(sample: &TimeSeriesSample, include_delta: bool) -> Result<FitResult> {
    let un = solve_unconstrained(sample, include_delta)?;
    let solution = BoundarySolution {
        theta: un.theta,
        active: false,
        multiplier: 0.0,
    };
    Ok(finish_fit(sample, un, include_delta, solution, 0.0))
}

/// Least squares over `{θ : g(θ) ≥ threshold}` with `δ` unrestricted.
pub fn fit_constrained(
    sample: &TimeSeriesSample,
    constraint: &ConstraintSpec,
    threshold: f64,
    include_delta: bool,
) -> Result<FitResult> {
    let un = solve_unconstrained(sample, include_delta)?;
    let solution = project_onto_constraint(&un.theta, &un.metric, constraint, threshold)?;
    Ok(finish_fit(sample, un, include_delta, solution, threshold))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySolution {
    pub theta: Vector2<f64>,
    pub active: bool,
    /// Multiplier for the objective `(θ − c)' M (θ − c)`.
    pub multiplier: f64,
}

/// `arg min {(θ − c)' M (θ − c) : g(θ) ≥ threshold}`.
pub fn project_onto_constraint(
    center: &Vector2<f64>,
    metric: &Matrix2<f64>,
    constraint: &ConstraintSpec,
    threshold: f64,
) -> Result<BoundarySolution> {
    if constraint.value(center) >= threshold {
        return Ok(BoundarySolution {
            theta: *center,
            active: false,
            multiplier: 0.0,
        });
    }
    match constraint.affine_part() {
        Some(affine) => affine_projection(center, metric, &affine, threshold),
        None => newton_projection(center, metric, constraint, threshold),
    }
}

/// Lagrange form `θ = c + M⁻¹a (b + t − a'c) / (a'M⁻¹a)` for an infeasible `c`.
fn affine_projection(
    center: &Vector2<f64>,
    metric: &Matrix2<f64>,
    affine: &Affine,
    threshold: f64,
) -> Result<BoundarySolution> {
    if affine.a == Vector2::zeros() {
        return Err(Error::ZeroGradient(center[0], center[1]));
    }
    let m_inv_a = metric
        .cholesky()
        .ok_or(Error::SingularDesign {
            condition: f64::INFINITY,
        })?
        .solve(&affine.a);
    let gap = affine.b + threshold - affine.a.dot(center);
    let curvature = affine.a.dot(&m_inv_a);
    let mut theta = center + m_inv_a * (gap / curvature);
    // Re-solve the dominant coordinate from the constraint so the solution
    // sits on the boundary to rounding (exactly for coordinate constraints),
    // whichever route produced the centre.
    let (i, j) = if affine.a[1].abs() >= affine.a[0].abs() { (1, 0) } else { (0, 1) };
    theta[i] = (affine.b + threshold - affine.a[j] * theta[j]) / affine.a[i];
    Ok(BoundarySolution {
        theta,
        active: true,
        multiplier: 2.0 * gap / curvature,
    })
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;

fn kkt_residual(
    theta: &Vector2<f64>,
    mu: f64,
    center: &Vector2<f64>,
    metric: &Matrix2<f64>,
    constraint: &ConstraintSpec,
    threshold: f64,
) -> Vector3<f64> {
    let stationarity = 2.0 * metric * (theta - center) - mu * constraint.gradient(theta);
    Vector3::new(
        stationarity[0],
        stationarity[1],
        constraint.value(theta) - threshold,
    )
}

fn least_squares_multiplier(
    theta: &Vector2<f64>,
    center: &Vector2<f64>,
    metric: &Matrix2<f64>,
    grad: &Vector2<f64>,
) -> f64 {
    grad.dot(&(2.0 * metric * (theta - center))) / grad.norm_squared()
}

/// Damped Newton on `(θ, μ)` for the boundary stationarity system, from one start.
fn newton_from(
    start: Vector2<f64>,
    center: &Vector2<f64>,
    metric: &Matrix2<f64>,
    constraint: &ConstraintSpec,
    threshold: f64,
) -> std::result::Result<(Vector2<f64>, f64), Vector2<f64>> {
    let mut theta = start;
    let Ok(grad0) = constraint.checked_gradient(&theta) else {
        return Err(theta);
    };
    let mut mu = least_squares_multiplier(&theta, center, metric, &grad0);
    let mut f = kkt_residual(&theta, mu, center, metric, constraint, threshold);
    for _ in 0..NEWTON_MAX_ITER {
        if f.amax() <= NEWTON_TOL {
            return Ok((theta, mu));
        }
        let Ok(grad) = constraint.checked_gradient(&theta) else {
            return Err(theta);
        };
        let top = 2.0 * metric - mu * constraint.hessian(&theta);
        let jac = Matrix3::new(
            top[(0, 0)], top[(0, 1)], -grad[0], //
            top[(1, 0)], top[(1, 1)], -grad[1], //
            grad[0], grad[1], 0.0,
        );
        let Some(step) = jac.lu().solve(&(-f)) else {
            return Err(theta);
        };
        let norm = f.norm();
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = theta + Vector2::new(step[0], step[1]) * scale;
            let cand_mu = mu + step[2] * scale;
            let cand_f = kkt_residual(&cand, cand_mu, center, metric, constraint, threshold);
            if cand_f.norm() < norm || cand_f.amax() <= NEWTON_TOL {
                theta = cand;
                mu = cand_mu;
                f = cand_f;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(theta);
        }
    }
    if f.amax() <= NEWTON_TOL {
        Ok((theta, mu))
    } else {
        Err(theta)
    }
}

/// Boundary solve for a smooth `g`. Newton is started from the centre and from
/// its projection onto the tangent line of `{g = threshold}` at the centre;
/// the converged point with the smaller objective wins.
fn newton_projection(
    center: &Vector2<f64>,
    metric: &Matrix2<f64>,
    constraint: &ConstraintSpec,
    threshold: f64,
) -> Result<BoundarySolution> {
    check_positive_definite(metric)?;
    let grad = constraint.checked_gradient(center)?;
    let tangent = Affine {
        a: grad,
        b: grad.dot(center) - constraint.value(center),
    };
    let tangent_start = affine_projection(center, metric, &tangent, threshold)?.theta;

    let objective = |t: &Vector2<f64>| (t - center).dot(&(metric * (t - center)));
    let mut best: Option<(Vector2<f64>, f64)> = None;
    let mut last = *center;
    for start in [*center, tangent_start] {
        match newton_from(start, center, metric, constraint, threshold) {
            Ok((theta, mu)) => {
                if best.is_none_or(|(b, _)| objective(&theta) < objective(&b)) {
                    best = Some((theta, mu));
                }
            }
            Err(at) => last = at,
        }
    }
    let (theta, mu) = best.ok_or(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        last: [last[0], last[1]],
    })?;
    Ok(BoundarySolution {
        theta,
        active: true,
        multiplier: mu,
    })
}

/// Test statistic at an estimate `theta`.
///
/// * boundary null: `√n (g(θ) − ref)`;
/// * simple null: `n (θ − ref)' M_n (θ − ref)`;
/// * smooth null: `(√n (h(θ) − ref))²`.
pub fn statistic_at(
    theta: &Vector2<f64>,
    m_n: &Matrix2<f64>,
    hyp: &HypothesisSpec,
    constraint: &ConstraintSpec,
    n: usize,
    reference: Reference,
) -> f64 {
    let root = (n as f64).sqrt();
    let scalar = |r: Reference| match r {
        Reference::Scalar(v) => v,
        Reference::Point(_) => panic!("scalar reference expected"),
    };
    match hyp {
        HypothesisSpec::BoundaryNull => root * (constraint.value(theta) - scalar(reference)),
        HypothesisSpec::SimpleNull(_) => {
            let Reference::Point(p) = reference else {
                panic!("point reference expected for a simple null");
            };
            let d = theta - p;
            n as f64 * d.dot(&(m_n * d))
        }
        HypothesisSpec::SmoothNull { h, .. } => (root * (h(theta) - scalar(reference))).powi(2),
    }
}

pub fn statistic_value(
    fit: &FitResult,
    hyp: &HypothesisSpec,
    constraint: &ConstraintSpec,
    n: usize,
    reference: Reference,
) -> f64 {
    statistic_at(&fit.theta_hat, &fit.m_n, hyp, constraint, n, reference)
}
