//! Simulated limit laws.
//!
//! A draw first produces `M = ∫X̃X̃'` from a discretised regressor path and an
//! independent `ξ ~ N(0, σ_e² I₂)`, then maps `M^{-1/2}ξ` through the relevant
//! half-plane projection. Bootstrap limits are drawn conditionally on the same
//! `M` with a fresh `ξ*`.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{check_positive_definite, inv_sqrt_spd};
use crate::{Error, Result};

pub use crate::geometry::project_halfplane;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorLimit {
    BrownianMotion,
    /// `dX = −cX ds + dW`, `X(0) = 0`.
    OrnsteinUhlenbeck { c: f64 },
    /// Skip path simulation and use this `M`.
    FixedM(Matrix2<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConfig {
    /// Number of steps of the regressor path on `[0, 1]`.
    pub grid: usize,
    /// Long-run covariance of `(Δx, Δz)`: `[[ω_xx, ω_xz], [ω_xz, ω_zz]]`.
    pub omega: Matrix2<f64>,
    pub g_dot: Vector2<f64>,
    pub g_star_dot: Vector2<f64>,
    pub regressor: RegressorLimit,
}

impl LimitConfig {
    pub const DEFAULT_GRID: usize = 2000;

    /// Unit-root regressor, `Ω = I₂`, `ġ = ġ* = (0, 1)'`.
    pub fn unit_root() -> Self {
        LimitConfig {
            grid: Self::DEFAULT_GRID,
            omega: Matrix2::identity(),
            g_dot: Vector2::new(0.0, 1.0),
            g_star_dot: Vector2::new(0.0, 1.0),
            regressor: RegressorLimit::BrownianMotion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive_definite(&self.omega)
            .map_err(|_| Error::config("Ω must be positive definite"))?;
        if self.omega[(0, 1)] != self.omega[(1, 0)] {
            return Err(Error::config("Ω must be symmetric"));
        }
        if self.g_dot == Vector2::zeros() {
            return Err(Error::ZeroGradient(0.0, 0.0));
        }
        match self.regressor {
            RegressorLimit::FixedM(m) => check_positive_definite(&m)?,
            RegressorLimit::OrnsteinUhlenbeck { c } if !(c > 0.0) => {
                return Err(Error::config(format!("mean-reversion rate must be positive, got {c}")))
            }
            _ if self.grid < 100 => return Err(Error::config("limit grid needs at least 100 steps")),
            _ => {}
        }
        Ok(())
    }

    /// `σ_e² = ω_zz − ω_xz² / ω_xx`.
    pub fn sigma_e2(&self) -> f64 {
        let o = &self.omega;
        o[(1, 1)] - o[(0, 1)] * o[(0, 1)] / o[(0, 0)]
    }

    /// Near-unit-root shift `v_c = (0, c ω_xz / ω_xx)'`; zero otherwise.
    pub fn shift(&self) -> Vector2<f64> {
        match self.regressor {
            RegressorLimit::OrnsteinUhlenbeck { c } => {
                Vector2::new(0.0, c * self.omega[(0, 1)] / self.omega[(0, 0)])
            }
            _ => Vector2::zeros(),
        }
    }
}

/// Left-point Riemann sum of `∫X̃X̃'`, `X̃ = (1, X)'`, with `X` simulated
/// exactly at the grid points.
pub fn simulate_m<R: Rng + ?Sized>(config: &LimitConfig, rng: &mut R) -> Matrix2<f64> {
    let steps = config.grid;
    let dt = 1.0 / steps as f64;
    let omega_xx = config.omega[(0, 0)];
    let (phi, sd) = match config.regressor {
        RegressorLimit::FixedM(m) => return m,
        RegressorLimit::BrownianMotion => (1.0, (omega_xx * dt).sqrt()),
        RegressorLimit::OrnsteinUhlenbeck { c } => {
            let var = -f64::exp_m1(-2.0 * c * dt) / (2.0 * c);
            ((-c * dt).exp(), (omega_xx * var).sqrt())
        }
    };
    let (mut x, mut sx, mut sxx) = (0.0f64, 0.0, 0.0);
    for _ in 0..steps {
        sx += x;
        sxx += x * x;
        let z: f64 = rng.sample(StandardNormal);
        x = phi * x + sd * z;
    }
    Matrix2::new(1.0, sx * dt, sx * dt, sxx * dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDraw {
    pub m: Matrix2<f64>,
    pub xi: Vector2<f64>,
    pub ell: Vector2<f64>,
    pub ell_star: Option<Vector2<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OriginalCase {
    /// `ℓ = M^{-1/2}ξ`.
    Interior,
    /// `ℓ` is the projection of `M^{-1/2}ξ` onto `{ġ'λ ≥ 0}`.
    Boundary,
    /// `ℓ(ϑ, c) = ϑ + ` projection of `M^{-1/2}ξ` onto `{ġ'λ ≥ −c}`.
    Drift { vartheta: Vector2<f64>, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapCase {
    Interior,
    /// Bound `(ġ* − ġ)'ℓ`.
    Boundary,
    /// Standard bootstrap at a boundary point: bound `−ġ'ℓ`.
    StandardAtBoundary,
}

fn draw_xi<R: Rng + ?Sized>(sigma_e2: f64, rng: &mut R) -> Vector2<f64> {
    let s = sigma_e2.sqrt();
    Vector2::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

/// Draw `(M, ξ, ℓ)`. For a near-unit-root regressor the shift `v_c` is added
/// to `M^{-1/2}ξ` before any projection.
pub fn draw_original_limit<R: Rng + ?Sized>(config: &LimitConfig, case: OriginalCase, rng: &mut R) -> Result<LimitDraw> {
    config.validate()?;
    let m = simulate_m(config, rng);
    let xi = draw_xi(config.sigma_e2(), rng);
    let free = inv_sqrt_spd(&m) * xi + config.shift();
    let ell = match case {
        OriginalCase::Interior => free,
        OriginalCase::Boundary => project_halfplane(&free, &m, &config.g_dot, 0.0)?,
        OriginalCase::Drift { vartheta, c } => vartheta + project_halfplane(&free, &m, &config.g_dot, -c)?,
    };
    Ok(LimitDraw {
        m,
        xi,
        ell,
        ell_star: None,
    })
}

/// Draw `ℓ*` given `(M, ℓ)` from an original draw.
pub fn draw_bootstrap_limit<R: Rng + ?Sized>(
    config: &LimitConfig,
    original: &LimitDraw,
    case: BootstrapCase,
    rng: &mut R,
) -> Result<Vector2<f64>> {
    config.validate()?;
    let free = inv_sqrt_spd(&original.m) * draw_xi(config.sigma_e2(), rng);
    let g = &config.g_dot;
    match case {
        BootstrapCase::Interior => Ok(free),
        BootstrapCase::Boundary => {
            project_halfplane(&free, &original.m, g, (config.g_star_dot - g).dot(&original.ell))
        }
        BootstrapCase::StandardAtBoundary => project_halfplane(&free, &original.m, g, -g.dot(&original.ell)),
    }
}

/// Original draw with `ell_star` filled in from the same stream.
pub fn draw_pair<R: Rng + ?Sized>(
    config: &LimitConfig,
    original: OriginalCase,
    bootstrap: BootstrapCase,
    rng: &mut R,
) -> Result<LimitDraw> {
    let mut d = draw_original_limit(config, original, rng)?;
    d.ell_star = Some(draw_bootstrap_limit(config, &d, bootstrap, rng)?);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::geometry::perpendicular;
    use crate::rng::{Role, StreamKey};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rng(seed: u64) -> crate::rng::StreamRng {
        StreamKey::new(seed, 0, 0, Role::Limit).rng()
    }

    /// Golden-section search along `{ġ'λ = rhs}`. Points are compared through
    /// the exact difference of the two quadratic values, which avoids the
    /// cancellation of subtracting two large squared norms.
    fn golden_section(v: &Vector2<f64>, m: &Matrix2<f64>, g: &Vector2<f64>, rhs: f64) -> Vector2<f64> {
        let base = g * (rhs / g.norm_squared());
        let dir = perpendicular(g);
        let a = dir.dot(&(m * dir));
        let b = 2.0 * dir.dot(&(m * (base - v)));
        // f(s) − f(t) for f(t) = a t² + b t + const.
        let less = |s: f64, t: f64| (s - t) * (a * (s + t) + b) < 0.0;
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-1e6, 1e6);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        for _ in 0..300 {
            if less(x1, x2) {
                hi = x2;
                x2 = x1;
                x1 = hi - ratio * (hi - lo);
            } else {
                lo = x1;
                x1 = x2;
                x2 = lo + ratio * (hi - lo);
            }
        }
        base + dir * (0.5 * (lo + hi))
    }

    fn random_spd<R: Rng>(r: &mut R) -> Matrix2<f64> {
        let l = Matrix2::new(r.gen_range(0.2..2.0), 0.0, r.gen_range(-2.0..2.0), r.gen_range(0.2..2.0));
        l * l.transpose()
    }

    #[test]
    fn projection_matches_golden_section() {
        let mut r = rng(1);
        let mut infeasible = 0;
        for _ in 0..1000 {
            let m = random_spd(&mut r);
            let g = Vector2::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
            let rhs = r.gen_range(-1.0..1.0);
            let v = Vector2::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
            let p = project_halfplane(&v, &m, &g, rhs).unwrap();
            if g.dot(&v) >= rhs {
                assert_eq!(p, v);
            } else {
                infeasible += 1;
                assert_abs_diff_eq!(p, golden_section(&v, &m, &g, rhs), epsilon = 1e-8);
            }
        }
        assert!(infeasible > 300);
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(
            l11 in 0.2f64..2.0, l21 in -2.0f64..2.0, l22 in 0.2f64..2.0,
            g1 in -2.0f64..2.0, g2 in 0.1f64..2.0,
            rhs in -1.0f64..1.0, v1 in -5.0f64..5.0, v2 in -5.0f64..5.0,
        ) {
            let l = Matrix2::new(l11, 0.0, l21, l22);
            let m = l * l.transpose();
            let g = Vector2::new(g1, g2);
            let p = project_halfplane(&Vector2::new(v1, v2), &m, &g, rhs).unwrap();
            prop_assert!(g.dot(&p) >= rhs - 1e-10);
            let again = project_halfplane(&p, &m, &g, rhs).unwrap();
            prop_assert!((again - p).amax() <= 1e-10);
        }
    }

    #[test]
    fn fixed_m_is_returned() {
        let cfg = LimitConfig {
            regressor: RegressorLimit::FixedM(Matrix2::identity()),
            ..LimitConfig::unit_root()
        };
        assert_eq!(simulate_m(&cfg, &mut rng(0)), Matrix2::identity());
    }

    #[test]
    fn brownian_second_moment() {
        let cfg = LimitConfig {
            grid: 500,
            ..LimitConfig::unit_root()
        };
        let mut r = rng(2);
        let draws = 10_000;
        let vals: Vec<f64> = (0..draws).map(|_| simulate_m(&cfg, &mut r)[(1, 1)]).collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn ou_approaches_brownian_as_c_vanishes() {
        let bm = LimitConfig::unit_root();
        let ou = LimitConfig {
            regressor: RegressorLimit::OrnsteinUhlenbeck { c: 1e-6 },
            ..bm
        };
        for seed in 0..5 {
            let a = simulate_m(&bm, &mut rng(seed));
            let b = simulate_m(&ou, &mut rng(seed));
            assert!((a - b).amax() < 1e-3);
        }
    }

    #[test]
    fn m_is_positive_definite() {
        let cfg = LimitConfig {
            grid: 200,
            ..LimitConfig::unit_root()
        };
        let mut r = rng(3);
        for _ in 0..2000 {
            let m = simulate_m(&cfg, &mut r);
            assert!(m.symmetric_eigenvalues().min() > 0.0);
        }
    }

    #[test]
    fn interior_is_the_identity_transform() {
        let cfg = LimitConfig {
            grid: 200,
            ..LimitConfig::unit_root()
        };
        let mut r = rng(4);
        for _ in 0..100 {
            let d = draw_original_limit(&cfg, OriginalCase::Interior, &mut r).unwrap();
            assert_abs_diff_eq!(d.ell, inv_sqrt_spd(&d.m) * d.xi, epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_mass_at_zero_and_one_sided_identity() {
        let cfg = LimitConfig {
            grid: 200,
            ..LimitConfig::unit_root()
        };
        let mut r = rng(5);
        let draws = 10_000;
        let mut zeros = 0;
        for _ in 0..draws {
            let d = draw_original_limit(&cfg, OriginalCase::Boundary, &mut r).unwrap();
            let proj = cfg.g_dot.dot(&d.ell);
            let free = cfg.g_dot.dot(&(inv_sqrt_spd(&d.m) * d.xi));
            assert!(proj >= -1e-12);
            assert!((proj - free.max(0.0)).abs() <= 1e-10);
            if proj.abs() < 1e-12 {
                zeros += 1;
            }
        }
        let share = zeros as f64 / draws as f64;
        assert!((share - 0.5).abs() <= 0.02, "share {share}");
    }

    #[test]
    fn drift_with_huge_c_never_binds() {
        let cfg = LimitConfig {
            grid: 200,
            ..LimitConfig::unit_root()
        };
        let vartheta = Vector2::new(0.3, 1.0);
        let mut r = rng(6);
        for _ in 0..1000 {
            let d = draw_original_limit(&cfg, OriginalCase::Drift { vartheta, c: 1e6 }, &mut r).unwrap();
            assert!((d.ell - vartheta - inv_sqrt_spd(&d.m) * d.xi).amax() < 1e-6);
        }
    }

    #[test]
    fn drift_at_origin_is_the_boundary_law() {
        let cfg = LimitConfig {
            grid: 200,
            ..LimitConfig::unit_root()
        };
        for seed in 0..50 {
            let a = draw_original_limit(&cfg, OriginalCase::Boundary, &mut rng(seed)).unwrap();
            let drift = OriginalCase::Drift {
                vartheta: Vector2::zeros(),
                c: 0.0,
            };
            let b = draw_original_limit(&cfg, drift, &mut rng(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bootstrap_cases() {
        let cfg = LimitConfig {
            grid: 200,
            ..LimitConfig::unit_root()
        };
        for seed in 0..50 {
            let mut r = rng(seed);
            let mut d = draw_original_limit(&cfg, OriginalCase::Boundary, &mut r).unwrap();
            let mut r1 = rng(seed + 1000);
            let interior = draw_bootstrap_limit(&cfg, &d, BootstrapCase::Interior, &mut r1).unwrap();
            let mut r2 = rng(seed + 1000);
            let free = inv_sqrt_spd(&d.m) * draw_xi(cfg.sigma_e2(), &mut r2);
            assert_eq!(interior, free);

            d.ell = Vector2::zeros();
            let a = draw_bootstrap_limit(&cfg, &d, BootstrapCase::StandardAtBoundary, &mut rng(seed + 1)).unwrap();
            let b = draw_bootstrap_limit(&cfg, &d, BootstrapCase::Boundary, &mut rng(seed + 1)).unwrap();
            assert_eq!(a, b);
            assert!(cfg.g_dot.dot(&a) >= -1e-12);
        }
    }

    #[test]
    fn near_unit_root_shift() {
        let cfg = LimitConfig {
            omega: Matrix2::new(2.0, 0.5, 0.5, 1.0),
            regressor: RegressorLimit::OrnsteinUhlenbeck { c: 4.0 },
            grid: 200,
            ..LimitConfig::unit_root()
        };
        assert_abs_diff_eq!(cfg.shift(), Vector2::new(0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.sigma_e2(), 1.0 - 0.125, epsilon = 1e-15);
        let d = draw_original_limit(&cfg, OriginalCase::Interior, &mut rng(0)).unwrap();
        assert_abs_diff_eq!(d.ell, inv_sqrt_spd(&d.m) * d.xi + cfg.shift(), epsilon = 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = LimitConfig::unit_root();
        cfg.g_dot = Vector2::zeros();
        assert!(cfg.validate().is_err());
        let mut cfg = LimitConfig::unit_root();
        cfg.omega = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = LimitConfig::unit_root();
        cfg.grid = 10;
        assert!(cfg.validate().is_err());
    }
}
