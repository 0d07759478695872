//! The two limit families that rescaled first-return maps converge to, and
//! the exact conjugacy between them.

use nalgebra::Matrix3;

use super::{Map3, State3};
use crate::error::{Error, Result};

const SMALL_M3: f64 = 0.01;
const ORBIT_BALL: f64 = 100.0;

/// One step of the first limit family,
/// (X1, X2, Y) -> (-M3 X2, Y, M1 + M2 X2 - X1 - Y^2).
///
/// The last coordinate is summed in this exact order so that orbits conjugate
/// to the second family term by term at full precision; see
/// [`case_equivalence_check`].
pub fn limit_map_case1(s: State3, m1: f64, m2: f64, m3: f64) -> State3 {
    State3::new(-m3 * s.y, s.z, m1 + m2 * s.y - s.x - s.z * s.z)
}

pub fn limit_map_case1_jacobian(s: State3, _m1: f64, m2: f64, m3: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, -m3, 0.0, 0.0, 0.0, 1.0, -1.0, m2, -2.0 * s.z)
}

/// One step of the second limit family,
/// (X1, X2, Y) -> (Y, X1, M1 + M2 X1 + M3 X2 - Y^2).
pub fn limit_map_case2(s: State3, m1: f64, m2: f64, m3: f64) -> State3 {
    State3::new(s.z, s.x, m1 + m2 * s.x + m3 * s.y - s.z * s.z)
}

pub fn limit_map_case2_jacobian(s: State3, _m1: f64, m2: f64, m3: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, m2, m3, -2.0 * s.z)
}

/// Coordinate change taking second-family states to first-family states:
/// (V1, V2, V3) -> (-M3 V2, V1, V3). Composing it with the second family
/// equals composing the first family with it, identically in the arithmetic.
pub fn case1_from_case2_coords(s: State3, m3: f64) -> State3 {
    State3::new(-m3 * s.y, s.x, s.z)
}

/// First limit family as a dynamical system.
#[derive(Debug, Clone, Copy)]
pub struct LimitCase1 {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Map3 for LimitCase1 {
    fn step(&self, s: State3) -> State3 {
        limit_map_case1(s, self.m1, self.m2, self.m3)
    }
    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        limit_map_case1_jacobian(s, self.m1, self.m2, self.m3)
    }
}

/// Second limit family as a dynamical system.
#[derive(Debug, Clone, Copy)]
pub struct LimitCase2 {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Map3 for LimitCase2 {
    fn step(&self, s: State3) -> State3 {
        limit_map_case2(s, self.m1, self.m2, self.m3)
    }
    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        limit_map_case2_jacobian(s, self.m1, self.m2, self.m3)
    }
}

/// Runs both families from the origin (the second family directly, the first
/// from the transported origin) and returns the largest max-norm mismatch
/// between the first-family orbit and the transported second-family orbit.
///
/// Errors with `SmallM3` when |M3| < 0.01, where the coordinate change
/// degenerates, and with `Escaped` when either orbit leaves the ball of
/// radius 100 before `orbit_length` steps.
pub fn case_equivalence_check(m1: f64, m2: f64, m3: f64, orbit_length: usize) -> Result<f64> {
    if m3.abs() < SMALL_M3 {
        return Err(Error::SmallM3(m3));
    }
    let mut u = case1_from_case2_coords(State3::zeros(), m3);
    let mut v = State3::zeros();
    let mut max_err = 0.0f64;
    for step in 0..orbit_length {
        u = limit_map_case1(u, m1, m2, m3);
        v = limit_map_case2(v, m1, m2, m3);
        if u.norm() > ORBIT_BALL || v.norm() > ORBIT_BALL {
            return Err(Error::Escaped {
                step,
                radius: ORBIT_BALL,
            });
        }
        max_err = max_err.max((u - case1_from_case2_coords(v, m3)).amax());
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::henon::{henon3d_step, HenonParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    #[test]
    fn substitution_examples() {
        assert_eq!(
            limit_map_case1(State3::zeros(), 0.0, 0.0, 0.0),
            State3::zeros()
        );
        assert_eq!(
            limit_map_case1(State3::new(1.0, 1.0, 1.0), 1.0, 1.0, 1.0),
            State3::new(-1.0, 1.0, 0.0)
        );
        assert_eq!(
            limit_map_case2(State3::zeros(), 0.75, 0.0, 0.0),
            State3::new(0.0, 0.0, 0.75)
        );
        assert_eq!(
            limit_map_case2(State3::new(1.0, 2.0, 3.0), 0.0, 1.0, 1.0),
            State3::new(3.0, 1.0, -6.0)
        );
    }

    #[test]
    fn conjugacy_is_exact_per_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let (m1, m2, m3) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let s = State3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let left = limit_map_case1(case1_from_case2_coords(s, m3), m1, m2, m3);
            let right = case1_from_case2_coords(limit_map_case2(s, m1, m2, m3), m3);
            assert_eq!(left, right);
        }
    }

    #[test]
    fn second_family_is_the_forward_family_up_to_a_swap() {
        // swapping the first two coordinates turns the second family into the
        // forward quadratic family with B = M3
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let (m1, m2, m3) = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let p = HenonParams { m1, m2, b: m3 };
            let s = State3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let swap = |t: State3| State3::new(t.y, t.x, t.z);
            let left = swap(limit_map_case2(s, m1, m2, m3));
            let right = henon3d_step(swap(s), &p);
            assert!((left - right).amax() < 1e-14);
        }
    }

    #[test]
    fn jacobians_have_determinant_m3() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let (m1, m2, m3) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let s = State3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let d1 = limit_map_case1_jacobian(s, m1, m2, m3).determinant();
            let d2 = limit_map_case2_jacobian(s, m1, m2, m3).determinant();
            assert!((d1 - m3).abs() < TOL);
            assert!((d2 - m3).abs() < TOL);
        }
    }

    #[test]
    fn equivalence_check_on_bounded_orbits() {
        let err = case_equivalence_check(0.0, 0.3, 1.0, 100).unwrap();
        assert!(err <= 1e-10, "conjugacy error {err}");
        let err = case_equivalence_check(0.1, -0.2, -0.5, 100).unwrap();
        assert!(err <= 1e-10, "conjugacy error {err}");
    }

    #[test]
    fn equivalence_check_rejects_small_m3() {
        assert!(matches!(
            case_equivalence_check(0.1, 0.1, 0.0, 10),
            Err(Error::SmallM3(_))
        ));
        assert!(matches!(
            case_equivalence_check(0.1, 0.1, 0.009, 10),
            Err(Error::SmallM3(_))
        ));
    }

    #[test]
    fn equivalence_check_reports_escape() {
        assert!(matches!(
            case_equivalence_check(3.0, 0.0, 1.0, 100),
            Err(Error::Escaped { .. })
        ));
    }
}
