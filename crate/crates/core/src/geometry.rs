//! Two-dimensional linear algebra shared by the estimators and the limit laws:
//! spectral square roots of 2×2 positive definite matrices and the closed-form
//! projection onto a half-plane in the metric `‖x‖_M = (x'Mx)^{1/2}`.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

use crate::{Error, Result};

/// Largest admissible condition number of a moment matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Ratio of extreme eigenvalues of a symmetric matrix (∞ if not positive definite).
pub fn condition_number(m: &Matrix2<f64>) -> f64 {
    let eig = SymmetricEigen::new(*m);
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    if lo <= 0.0 || !lo.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub(crate) fn check_positive_definite(m: &Matrix2<f64>) -> Result<()> {
    let condition = condition_number(m);
    if condition > MAX_CONDITION {
        return Err(Error::SingularDesign { condition });
    }
    Ok(())
}

fn spectral_power(m: &Matrix2<f64>, power: f64) -> Matrix2<f64> {
    let eig = SymmetricEigen::new(*m);
    let d = Matrix2::from_diagonal(&eig.eigenvalues.map(|l| l.powf(power)));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Symmetric square root `M^{1/2}`.
pub fn sqrt_spd(m: &Matrix2<f64>) -> Matrix2<f64> {
    spectral_power(m, 0.5)
}

/// Symmetric inverse square root `M^{-1/2}`.
pub fn inv_sqrt_spd(m: &Matrix2<f64>) -> Matrix2<f64> {
    spectral_power(m, -0.5)
}

/// `ġ` rotated counterclockwise by 90°; same length as `ġ`.
pub fn perpendicular(g_dot: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-g_dot[1], g_dot[0])
}

/// `arg min { ‖λ − v‖_M : ġ'λ ≥ rhs }`.
///
/// Evaluated as the two-term decomposition
/// `ġ⊥(ġ⊥'Mġ⊥)⁻¹ġ⊥'Mv + M⁻¹ġ(ġ'M⁻¹ġ)⁻¹ max{rhs, ġ'v}`; feasible points are
/// returned untouched.
pub fn project_halfplane(
    v: &Vector2<f64>,
    m: &Matrix2<f64>,
    g_dot: &Vector2<f64>,
    rhs: f64,
) -> Result<Vector2<f64>> {
    if g_dot[0] == 0.0 && g_dot[1] == 0.0 {
        return Err(Error::ZeroGradient(v[0], v[1]));
    }
    if g_dot.dot(v) >= rhs {
        return Ok(*v);
    }
    check_positive_definite(m)?;
    let m_inv = m.try_inverse().ok_or(Error::SingularDesign {
        condition: f64::INFINITY,
    })?;
    Ok(transform_halfplane(v, m, &m_inv, g_dot, rhs))
}

/// The two-term map without the feasibility short cut or checks. Used on hot
/// paths where `M⁻¹` is already known.
pub(crate) fn transform_halfplane(
    v: &Vector2<f64>,
    m: &Matrix2<f64>,
    m_inv: &Matrix2<f64>,
    g_dot: &Vector2<f64>,
    rhs: f64,
) -> Vector2<f64> {
    let perp = perpendicular(g_dot);
    let m_perp = m * perp;
    let along = perp * (m_perp.dot(v) / perp.dot(&m_perp));
    let m_inv_g = m_inv * g_dot;
    let across = m_inv_g * (rhs.max(g_dot.dot(v)) / g_dot.dot(&m_inv_g));
    along + across
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn euclidean_upper_half_plane() {
        let out = project_halfplane(
            &Vector2::new(1.0, -2.0),
            &Matrix2::identity(),
            &Vector2::new(0.0, 1.0),
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(out, Vector2::new(1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn feasible_point_is_fixed() {
        let v = Vector2::new(0.3, 0.7);
        let m = Matrix2::new(2.0, 0.4, 0.4, 1.0);
        let out = project_halfplane(&v, &m, &Vector2::new(1.0, 1.0), 0.5).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn two_term_form_collapses_on_feasible_points() {
        let m = Matrix2::new(1.5, -0.3, -0.3, 0.8);
        let m_inv = m.try_inverse().unwrap();
        let g = Vector2::new(0.4, -1.1);
        let v = Vector2::new(-2.0, -1.0);
        assert!(g.dot(&v) >= 0.0);
        let out = transform_halfplane(&v, &m, &m_inv, &g, 0.0);
        assert_abs_diff_eq!(out, v, epsilon = 1e-12);
    }

    #[test]
    fn square_roots() {
        let m = Matrix2::new(2.0, 0.6, 0.6, 1.0);
        let r = sqrt_spd(&m);
        assert_abs_diff_eq!(r * r, m, epsilon = 1e-12);
        assert_abs_diff_eq!(r, r.transpose(), epsilon = 1e-15);
        let ri = inv_sqrt_spd(&m);
        assert_abs_diff_eq!(ri * m * ri, Matrix2::identity(), epsilon = 1e-12);
    }

    #[test]
    fn singular_metric_rejected() {
        let m = Matrix2::new(1.0, 1.0, 1.0, 1.0);
        let err = project_halfplane(&Vector2::new(0.0, -1.0), &m, &Vector2::new(0.0, 1.0), 0.0);
        assert!(matches!(err, Err(Error::SingularDesign { .. })));
    }

    #[test]
    fn zero_gradient_rejected() {
        let err = project_halfplane(
            &Vector2::new(0.0, -1.0),
            &Matrix2::identity(),
            &Vector2::zeros(),
            0.0,
        );
        assert!(matches!(err, Err(Error::ZeroGradient(..))));
    }
}
