//! The explicit quadratic maps of the toolkit: the three-dimensional
//! Henon-family maps, their reversed forms, the Mira projection, and the two
//! quadratic limit maps of the rescaled return-map family.

pub mod cubic;
pub mod henon;
pub mod limit;

use nalgebra::{Matrix3, Vector3};

/// A point in 3-space. Interpreted as (x, y, z) for Henon-family maps and
/// (X1, X2, Y) for limit maps.
pub type State3 = Vector3<f64>;

/// Orbits leaving the ball of this radius are flagged escaped; no map
/// evaluation ever throws on large inputs.
pub const DIVERGENCE_RADIUS: f64 = 1e6;

/// A differentiable map of 3-space with an analytic Jacobian.
pub trait Map3 {
    fn step(&self, s: State3) -> State3;
    fn jacobian(&self, s: State3) -> Matrix3<f64>;
}

impl<M: Map3 + ?Sized> Map3 for &M {
    fn step(&self, s: State3) -> State3 {
        (**self).step(s)
    }
    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        (**self).jacobian(s)
    }
}

/// True once a state should be treated as escaped: non-finite or outside the
/// divergence ball.
pub fn is_escaped(s: &State3) -> bool {
    !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()) || s.norm() > DIVERGENCE_RADIUS
}
