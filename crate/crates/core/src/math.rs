//! Rotation and discretization helpers shared by the controllers and plant.

use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use core::f64::consts::{PI, TAU};

/// Planar rotation matrix mapping body-frame vectors to world frame.
pub fn rot2(psi: f64) -> Matrix2<f64> {
    let (s, c) = psi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Rotation about the world z axis, used for yaw-frozen SRBD models.
pub fn rotz(yaw: f64) -> Matrix3<f64> {
    let (s, c) = yaw.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    // euclidean remainder of (pi - a) keeps the upper boundary closed:
    // pi maps to pi, -pi to pi.
    let d = PI - a;
    let r = d - TAU * (d / TAU).floor();
    PI - r
}

/// z component of the planar cross product a x b.
pub fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Skew-symmetric matrix such that `skew(a) * b = a x b`.
pub fn skew(v: nalgebra::Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Forward-Euler hold of a continuous-time model: `Ad = I + A dt`, `Bd = B dt`.
pub fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    debug_assert!(dt > 0.0);
    let n = a.nrows();
    let ad = DMatrix::identity(n, n) + a * dt;
    let bd = b * dt;
    (ad, bd)
}

/// Map body angular velocity to ZYX Euler-angle rates.
///
/// `rpy` is (roll, pitch, yaw); singular at pitch = +-pi/2, which trotting
/// never approaches.
pub fn euler_rate_matrix(rpy: nalgebra::Vector3<f64>) -> Matrix3<f64> {
    let (sr, cr) = rpy.x.sin_cos();
    let (_, cp) = rpy.y.sin_cos();
    let tp = rpy.y.tan();
    Matrix3::new(
        1.0,
        sr * tp,
        cr * tp,
        0.0,
        cr,
        -sr,
        0.0,
        sr / cp,
        cr / cp,
    )
}

/// Full ZYX (yaw-pitch-roll) rotation matrix from Euler angles.
pub fn rot_rpy(rpy: nalgebra::Vector3<f64>) -> Matrix3<f64> {
    let (sr, cr) = rpy.x.sin_cos();
    let (sp, cp) = rpy.y.sin_cos();
    let (sy, cy) = rpy.z.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn rot2_identity_and_quarter_turn() {
        assert_relative_eq!(rot2(0.0), Matrix2::identity(), epsilon = 1e-15);
        let r = rot2(core::f64::consts::FRAC_PI_2);
        assert_relative_eq!(r.column(0).into_owned(), Vector2::new(0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn wrap_angle_basics() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_relative_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-PI - 0.1), PI - 0.1, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(PI), PI, epsilon = 1e-12);
    }

    #[test]
    fn discretize_examples() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let (ad, bd) = discretize(&a, &b, 0.003);
        assert_relative_eq!(ad, DMatrix::identity(2, 2), epsilon = 1e-15);
        assert_relative_eq!(bd, &b * 0.003, epsilon = 1e-15);

        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let (ad, _) = discretize(&a, &DMatrix::zeros(2, 1), 0.003);
        assert_relative_eq!(
            ad,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.003, 0.0, 1.0]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn euler_rates_reduce_to_identity_at_zero_attitude() {
        assert_relative_eq!(
            euler_rate_matrix(Vector3::zeros()),
            Matrix3::identity(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rot_rpy_matches_rotz_for_pure_yaw() {
        let yaw = 0.73;
        assert_relative_eq!(rot_rpy(Vector3::new(0.0, 0.0, yaw)), rotz(yaw), epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn rot2_is_orthonormal(psi in -100.0f64..100.0) {
            let r = rot2(psi);
            let err = (r.transpose() * r - Matrix2::identity()).norm();
            prop_assert!(err < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rot2_group_property(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let err = (rot2(a) * rot2(b) - rot2(a + b)).norm();
            prop_assert!(err < 1e-12);
        }

        #[test]
        fn wrap_angle_idempotent_and_congruent(a in -1e4f64..1e4) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!((wrap_angle(w) - w).abs() < 1e-12);
            // result is congruent to the input mod 2 pi
            let k = ((a - w) / TAU).round();
            prop_assert!((a - w - k * TAU).abs() < 1e-9);
        }
    }
}
