//! Simulated predictive-regression samples.
//!
//! `y_t = θ₁ + θ₂ x_{n,t-1} + ε_t`, `t = 1..n`, with `x_{n,0..n}` stored in
//! full so that both the lag `x_{n,t-1}` and the difference `Δx_{n,t}` are
//! available. Random draws are consumed in a fixed order: the `n` regressor
//! shocks `ε_{x,1..n}`, then (stationary regressor only) the initial value,
//! then the error shocks.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorKind {
    /// Random walk, emitted as `n^{-1/2} x_t`.
    UnitRoot,
    /// `x_t = e^{-c/n} x_{t-1} + ε_{x,t}`, emitted as `n^{-1/2} x_t`.
    NearUnitRoot { c: f64 },
    /// `x_t = ρ x_{t-1} + ε_{x,t}` started from its stationary law, unscaled.
    Stationary { rho: f64 },
}

impl RegressorKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegressorKind::UnitRoot => Ok(()),
            RegressorKind::NearUnitRoot { c } if c > 0.0 && c.is_finite() => Ok(()),
            RegressorKind::NearUnitRoot { c } => Err(Error::config(format!(
                "near-unit-root rate must be positive, got {c}"
            ))),
            RegressorKind::Stationary { rho } if rho.abs() < 1.0 => Ok(()),
            RegressorKind::Stationary { rho } => Err(Error::config(format!(
                "stationary AR coefficient must lie in (-1, 1), got {rho}"
            ))),
        }
    }

    /// Whether the augmented regression carries the `Δx_{n,t}` term. In the
    /// stationary case `δ` is fixed at zero, since including `Δx_t` would
    /// make the slope inconsistent.
    pub fn include_delta(&self) -> bool {
        !matches!(self, RegressorKind::Stationary { .. })
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegressorKind::UnitRoot => write!(f, "unit_root"),
            RegressorKind::NearUnitRoot { c } => write!(f, "near_unit_root({c})"),
            RegressorKind::Stationary { rho } => write!(f, "stationary({rho})"),
        }
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let kind = match (name, args.as_slice()) {
            ("unit_root", []) => RegressorKind::UnitRoot,
            ("near_unit_root", [c]) => RegressorKind::NearUnitRoot { c: *c },
            ("stationary", []) => RegressorKind::Stationary { rho: 0.5 },
            ("stationary", [rho]) => RegressorKind::Stationary { rho: *rho },
            _ => return Err(Error::config(format!("unknown regressor `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorKind {
    IidNormal,
    /// `ε_t = σ_t ν_t`, `σ_t² = ω + α ε_{t-1}²`.
    Arch1 { omega: f64, alpha: f64 },
    /// `ε_t = √w ε_{x,t} + √(1-w) η_t`.
    CorrelatedWithRegressor { weight: f64 },
}

impl ErrorKind {
    pub const ARCH: ErrorKind = ErrorKind::Arch1 {
        omega: 0.7,
        alpha: 0.3,
    };
    pub const CORRELATED: ErrorKind = ErrorKind::CorrelatedWithRegressor { weight: 0.5 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorKind::IidNormal => Ok(()),
            ErrorKind::Arch1 { omega, alpha } => {
                if omega > 0.0 && (0.0..1.0).contains(&alpha) {
                    Ok(())
                } else {
                    Err(Error::config(format!(
                        "ARCH(1) needs omega > 0 and alpha in [0, 1), got ({omega}, {alpha})"
                    )))
                }
            }
            ErrorKind::CorrelatedWithRegressor { weight } => {
                if (0.0..=1.0).contains(&weight) {
                    Ok(())
                } else {
                    Err(Error::config(format!(
                        "correlation weight must lie in [0, 1], got {weight}"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::IidNormal => write!(f, "iid"),
            ErrorKind::Arch1 { omega, alpha } => write!(f, "arch({omega},{alpha})"),
            ErrorKind::CorrelatedWithRegressor { weight } => write!(f, "correlated({weight})"),
        }
    }
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let kind = match (name, args.as_slice()) {
            ("iid", []) => ErrorKind::IidNormal,
            ("arch", []) => ErrorKind::ARCH,
            ("arch", [omega, alpha]) => ErrorKind::Arch1 {
                omega: *omega,
                alpha: *alpha,
            },
            ("correlated", []) => ErrorKind::CORRELATED,
            ("correlated", [weight]) => ErrorKind::CorrelatedWithRegressor { weight: *weight },
            _ => return Err(Error::config(format!("unknown error process `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// How the true coefficient vector depends on the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrueValue {
    Fixed(Vector2<f64>),
    /// `θ = a₀ n^{-1/2}`.
    LocalDrift(Vector2<f64>),
    /// `θ_n = θ₀ + n^{-1/2} ϑ`.
    LocalToBoundary {
        theta0: Vector2<f64>,
        vartheta: Vector2<f64>,
    },
}

impl TrueValue {
    pub fn resolve(&self, n: usize) -> Vector2<f64> {
        let root = (n as f64).sqrt();
        match self {
            TrueValue::Fixed(theta) => *theta,
            TrueValue::LocalDrift(a0) => a0 / root,
            TrueValue::LocalToBoundary { theta0, vartheta } => theta0 + vartheta / root,
        }
    }
}

impl fmt::Display for TrueValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrueValue::Fixed(t) => write!(f, "fixed({},{})", t[0], t[1]),
            TrueValue::LocalDrift(a) => write!(f, "local_drift({},{})", a[0], a[1]),
            TrueValue::LocalToBoundary { theta0, vartheta } => write!(
                f,
                "local_to_boundary({},{},{},{})",
                theta0[0], theta0[1], vartheta[0], vartheta[1]
            ),
        }
    }
}

impl FromStr for TrueValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        match (name, args.as_slice()) {
            ("fixed", [a, b]) => Ok(TrueValue::Fixed(Vector2::new(*a, *b))),
            ("local_drift", [a, b]) => Ok(TrueValue::LocalDrift(Vector2::new(*a, *b))),
            ("local_to_boundary", [a, b, c, d]) => Ok(TrueValue::LocalToBoundary {
                theta0: Vector2::new(*a, *b),
                vartheta: Vector2::new(*c, *d),
            }),
            _ => Err(Error::config(format!("unknown true value `{s}`"))),
        }
    }
}

/// `name(a, b, ...)` or bare `name`.
pub(crate) fn split_call(s: &str) -> Result<(&str, Vec<f64>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s, Vec::new()));
    };
    let inner = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::config(format!("unbalanced parentheses in `{s}`")))?;
    let args = inner
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("`{a}` is not a number in `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((s[..open].trim(), args))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    /// `y_1..y_n`.
    pub y: Vec<f64>,
    /// `x_{n,0}..x_{n,n}`.
    pub x: Vec<f64>,
    pub n: usize,
    pub resolved_theta: Vector2<f64>,
    pub regressor: RegressorKind,
    pub errors: ErrorKind,
    pub truth: TrueValue,
}

impl TimeSeriesSample {
    /// Build a sample from observed data; `x` must have one more entry than `y`.
    pub fn from_data(y: Vec<f64>, x: Vec<f64>, regressor: RegressorKind) -> Result<Self> {
        if x.len() != y.len() + 1 {
            return Err(Error::config(format!(
                "x must have length n+1 = {}, got {}",
                y.len() + 1,
                x.len()
            )));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::config("sample contains non-finite values"));
        }
        Ok(TimeSeriesSample {
            n: y.len(),
            y,
            x,
            resolved_theta: Vector2::zeros(),
            regressor,
            errors: ErrorKind::IidNormal,
            truth: TrueValue::Fixed(Vector2::zeros()),
        })
    }

    /// `x_{n,0}..x_{n,n-1}`.
    pub fn x_lag(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn dx(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.windows(2).map(|w| w[1] - w[0])
    }

    /// Same sample with every regressor value multiplied by `a`.
    pub fn rescaled(&self, a: f64) -> Self {
        TimeSeriesSample {
            x: self.x.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }
}

fn normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Regression errors `ε_1..ε_n`.
///
/// `regressor_shocks` are the `ε_{x,t}` of the same sample; they are only read
/// by [`ErrorKind::CorrelatedWithRegressor`]. ARCH recursions start from
/// `ε_0 ~ N(0, ω/(1-α))`, which costs one extra draw before the `ν_t`.
pub fn generate_errors<R: Rng + ?Sized>(
    kind: ErrorKind,
    n: usize,
    rng: &mut R,
    regressor_shocks: &[f64],
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::config("number of errors must be positive"));
    }
    kind.validate()?;
    match kind {
        ErrorKind::IidNormal => Ok(normals(rng, n)),
        ErrorKind::Arch1 { omega, alpha } => {
            let z0: f64 = rng.sample(StandardNormal);
            let mut prev = z0 * (omega / (1.0 - alpha)).sqrt();
            Ok((0..n)
                .map(|_| {
                    let nu: f64 = rng.sample(StandardNormal);
                    prev = (omega + alpha * prev * prev).sqrt() * nu;
                    prev
                })
                .collect())
        }
        ErrorKind::CorrelatedWithRegressor { weight } => {
            if regressor_shocks.len() != n {
                return Err(Error::config(format!(
                    "need {n} regressor shocks, got {}",
                    regressor_shocks.len()
                )));
            }
            let (a, b) = (weight.sqrt(), (1.0 - weight).sqrt());
            Ok(regressor_shocks
                .iter()
                .map(|ex| {
                    let eta: f64 = rng.sample(StandardNormal);
                    a * ex + b * eta
                })
                .collect())
        }
    }
}

pub fn generate_sample<R: Rng + ?Sized>(
    regressor: RegressorKind,
    errors: ErrorKind,
    truth: TrueValue,
    n: usize,
    rng: &mut R,
) -> Result<TimeSeriesSample> {
    if n < 10 {
        return Err(Error::config(format!("sample size must be at least 10, got {n}")));
    }
    regressor.validate()?;
    errors.validate()?;

    let shocks = normals(rng, n);
    let mut x = Vec::with_capacity(n + 1);
    match regressor {
        RegressorKind::UnitRoot | RegressorKind::NearUnitRoot { .. } => {
            let phi = match regressor {
                RegressorKind::NearUnitRoot { c } => (-c / n as f64).exp(),
                _ => 1.0,
            };
            let scale = 1.0 / (n as f64).sqrt();
            let mut level = 0.0;
            x.push(0.0);
            for e in &shocks {
                level = phi * level + e;
                x.push(scale * level);
            }
        }
        RegressorKind::Stationary { rho } => {
            let z0: f64 = rng.sample(StandardNormal);
            let mut level = z0 / (1.0 - rho * rho).sqrt();
            x.push(level);
            for e in &shocks {
                level = rho * level + e;
                x.push(level);
            }
        }
    }

    let eps = generate_errors(errors, n, rng, &shocks)?;
    let theta = truth.resolve(n);
    let y = eps
        .iter()
        .zip(&x)
        .map(|(e, x_lag)| theta[0] + theta[1] * x_lag + e)
        .collect();

    Ok(TimeSeriesSample {
        y,
        x,
        n,
        resolved_theta: theta,
        regressor,
        errors,
        truth,
    })
}
