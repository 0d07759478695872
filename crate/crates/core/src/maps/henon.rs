//! The three-dimensional quadratic family (x, y, z) -> (y, z, M1 + Bx + M2y - z^2),
//! its cross-form inverse family, the Mira projection, and diagonal fixed points
//! with their multipliers.

use nalgebra::{Matrix3, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cubic::monic_cubic_roots;
use super::{Map3, State3};
use crate::error::{Error, Result};

/// Parameters of the forward family. B is the constant Jacobian determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonParams {
    pub m1: f64,
    pub m2: f64,
    pub b: f64,
}

/// Parameters of the cross-form inverse family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseHenonParams {
    pub m1_hat: f64,
    pub m2_hat: f64,
    pub b_hat: f64,
}

pub fn henon3d_step(s: State3, p: &HenonParams) -> State3 {
    State3::new(s.y, s.z, p.m1 + p.b * s.x + p.m2 * s.y - s.z * s.z)
}

pub fn henon3d_jacobian(s: State3, p: &HenonParams) -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, p.b, p.m2, -2.0 * s.z)
}

/// Hatted parameters of the inverse family: (M1/B^2, -M2/B, 1/B).
pub fn hatted_params(p: &HenonParams) -> Result<InverseHenonParams> {
    if p.b == 0.0 {
        return Err(Error::ZeroB);
    }
    Ok(InverseHenonParams {
        m1_hat: p.m1 / (p.b * p.b),
        m2_hat: -p.m2 / p.b,
        b_hat: 1.0 / p.b,
    })
}

/// One step of the cross form (x, y, z) -> (y, z, M1h + M2h z + Bh x - y^2).
/// This is the inverse family written in reversed coordinates, not the
/// pointwise inverse of the forward step; see [`henon3d_invert`].
pub fn henon3d_inverse_step(s: State3, ip: &InverseHenonParams) -> State3 {
    State3::new(
        s.y,
        s.z,
        ip.m1_hat + ip.m2_hat * s.z + ip.b_hat * s.x - s.y * s.y,
    )
}

pub fn henon3d_inverse_jacobian(s: State3, ip: &InverseHenonParams) -> Matrix3<f64> {
    Matrix3::new(
        0.0,
        1.0,
        0.0,
        0.0,
        0.0,
        1.0,
        ip.b_hat,
        -2.0 * s.y,
        ip.m2_hat,
    )
}

/// Pointwise inverse of [`henon3d_step`]. The cross form acts in reversed
/// coordinates r(x, y, z) = (-Bz, -By, -Bx), and conjugating it by r gives the
/// inverse of the forward map exactly:
/// invert = r . inverse_step(hatted) . r^{-1}.
pub fn henon3d_invert(s: State3, p: &HenonParams) -> Result<State3> {
    let ip = hatted_params(p)?;
    let pre = State3::new(-s.z / p.b, -s.y / p.b, -s.x / p.b);
    let g = henon3d_inverse_step(pre, &ip);
    Ok(State3::new(-p.b * g.z, -p.b * g.y, -p.b * g.x))
}

/// One step of the planar map (y, z) -> (z, M1h + M2h z - y^2), the last two
/// coordinates of the cross form at Bh = 0.
pub fn mira_step(s: Vector2<f64>, m1_hat: f64, m2_hat: f64) -> Vector2<f64> {
    Vector2::new(s.y, m1_hat + m2_hat * s.y - s.x * s.x)
}

/// A diagonal fixed point together with its multipliers.
///
/// The multipliers are the roots of the characteristic cubic
/// lambda^3 + 2p lambda^2 - M2 lambda - B, stored most-expanding-real first
/// as returned by the cubic solver; `charpoly` holds the monic coefficients
/// [1, 2p, -M2, -B].
#[derive(Debug, Clone)]
pub struct FixedPointAnalysis {
    pub point: State3,
    pub multipliers: [Complex64; 3],
    pub charpoly: [f64; 4],
}

/// Fixed points of the forward family.
///
/// Lemma: every fixed point lies on the diagonal x = y = z, since a fixed
/// point must satisfy x = y (first coordinate) and y = z (second). The
/// diagonal value p then solves p^2 - (B + M2 - 1)p - M1 = 0, giving zero,
/// one, or two points ordered by p ascending.
pub fn fixed_points(p: &HenonParams) -> Vec<FixedPointAnalysis> {
    let s = p.b + p.m2 - 1.0;
    let disc = s * s + 4.0 * p.m1;
    let ps: Vec<f64> = if disc < 0.0 {
        Vec::new()
    } else if disc == 0.0 {
        vec![0.5 * s]
    } else {
        let sq = disc.sqrt();
        let big = 0.5 * (s + s.signum() * sq);
        let small = if big != 0.0 { -p.m1 / big } else { 0.5 * (s - sq) };
        let mut v = vec![big, small];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    ps.into_iter()
        .map(|pt| FixedPointAnalysis {
            point: State3::new(pt, pt, pt),
            multipliers: monic_cubic_roots(2.0 * pt, -p.m2, -p.b),
            charpoly: [1.0, 2.0 * pt, -p.m2, -p.b],
        })
        .collect()
}

/// Forward family as a dynamical system.
#[derive(Debug, Clone, Copy)]
pub struct Henon3d {
    pub params: HenonParams,
}

impl Map3 for Henon3d {
    fn step(&self, s: State3) -> State3 {
        henon3d_step(s, &self.params)
    }
    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        henon3d_jacobian(s, &self.params)
    }
}

/// Cross-form inverse family as a dynamical system.
#[derive(Debug, Clone, Copy)]
pub struct InverseHenon3d {
    pub params: InverseHenonParams,
}

impl Map3 for InverseHenon3d {
    fn step(&self, s: State3) -> State3 {
        henon3d_inverse_step(s, &self.params)
    }
    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        henon3d_inverse_jacobian(s, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    #[test]
    fn jacobian_determinant_is_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = HenonParams {
                m1: rng.gen_range(-2.0..2.0),
                m2: rng.gen_range(-2.0..2.0),
                b: rng.gen_range(-3.0..3.0),
            };
            let s = State3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            assert!((henon3d_jacobian(s, &p).determinant() - p.b).abs() < TOL);
            if let Ok(ip) = hatted_params(&p) {
                assert!(
                    (henon3d_inverse_jacobian(s, &ip).determinant() - ip.b_hat).abs()
                        < TOL * ip.b_hat.abs().max(1.0)
                );
            }
        }
    }

    #[test]
    fn hatted_examples() {
        let ip = hatted_params(&HenonParams {
            m1: 4.0,
            m2: 3.0,
            b: 2.0,
        })
        .unwrap();
        assert_eq!((ip.m1_hat, ip.m2_hat, ip.b_hat), (1.0, -1.5, 0.5));

        let ip = hatted_params(&HenonParams {
            m1: 0.0,
            m2: 0.0,
            b: 1.0,
        })
        .unwrap();
        assert_eq!((ip.m1_hat, ip.m2_hat, ip.b_hat), (0.0, 0.0, 1.0));

        let ip = hatted_params(&HenonParams {
            m1: 1.0,
            m2: -1.0,
            b: -1.0,
        })
        .unwrap();
        assert_eq!((ip.m1_hat, ip.m2_hat, ip.b_hat), (1.0, -1.0, -1.0));

        assert!(matches!(
            hatted_params(&HenonParams {
                m1: 1.0,
                m2: 1.0,
                b: 0.0,
            }),
            Err(Error::ZeroB)
        ));
    }

    #[test]
    fn inverse_step_examples() {
        let ip = InverseHenonParams {
            m1_hat: 2.5,
            m2_hat: 0.0,
            b_hat: 0.0,
        };
        assert_eq!(
            henon3d_inverse_step(State3::zeros(), &ip),
            State3::new(0.0, 0.0, 2.5)
        );

        let ip = InverseHenonParams {
            m1_hat: 0.0,
            m2_hat: 0.0,
            b_hat: 1.0,
        };
        assert_eq!(
            henon3d_inverse_step(State3::new(1.0, 0.0, 0.0), &ip),
            State3::new(0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn invert_round_trips_and_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut b = rng.gen_range(0.1..3.0);
            if rng.gen_bool(0.5) {
                b = -b;
            }
            let p = HenonParams {
                m1: rng.gen_range(-1.0..1.0),
                m2: rng.gen_range(-1.0..1.0),
                b,
            };
            for _ in 0..50 {
                let s = State3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                );
                let fwd = henon3d_step(s, &p);
                let back = henon3d_invert(fwd, &p).unwrap();
                assert!((back - s).amax() < 1e-10, "round trip failed at {s:?}");

                let direct = State3::new(
                    (fwd.z - p.m1 - p.m2 * fwd.x + fwd.y * fwd.y) / p.b,
                    fwd.x,
                    fwd.y,
                );
                assert!((back - direct).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn mira_is_the_planar_projection_of_the_cross_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            mira_step(Vector2::zeros(), 0.7, -0.3),
            Vector2::new(0.0, 0.7)
        );
        assert_eq!(mira_step(Vector2::new(1.0, 1.0), 1.0, 1.0), Vector2::new(1.0, 1.0));
        for _ in 0..100 {
            let m1_hat = rng.gen_range(-2.0..2.0);
            let m2_hat = rng.gen_range(-2.0..2.0);
            let ip = InverseHenonParams {
                m1_hat,
                m2_hat,
                b_hat: 0.0,
            };
            let s = State3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let full = henon3d_inverse_step(s, &ip);
            let planar = mira_step(Vector2::new(s.y, s.z), m1_hat, m2_hat);
            assert_eq!(Vector2::new(full.y, full.z), planar);
        }
    }

    #[test]
    fn degenerate_point_has_multipliers_one_and_double_minus_one() {
        let fps = fixed_points(&HenonParams {
            m1: -0.25,
            m2: 1.0,
            b: 1.0,
        });
        assert_eq!(fps.len(), 1);
        let fp = &fps[0];
        assert!((fp.point.x - 0.5).abs() < 1e-14);
        let mut mods: Vec<f64> = fp.multipliers.iter().map(|m| m.re).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[0] + 1.0).abs() < 1e-10);
        assert!((mods[1] + 1.0).abs() < 1e-10);
        assert!((mods[2] - 1.0).abs() < 1e-10);
        assert!(fp.multipliers.iter().all(|m| m.im == 0.0));
    }

    #[test]
    fn negative_discriminant_yields_no_fixed_points() {
        let fps = fixed_points(&HenonParams {
            m1: -1.0,
            m2: 0.0,
            b: 0.0,
        });
        assert!(fps.is_empty());
    }

    #[test]
    fn multiplier_product_equals_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let p = HenonParams {
                m1: rng.gen_range(-0.5..2.0),
                m2: rng.gen_range(-1.5..1.5),
                b: rng.gen_range(-2.0..2.0),
            };
            for fp in fixed_points(&p) {
                let prod: Complex64 = fp.multipliers.iter().product();
                assert!(
                    (prod.re - p.b).abs() < 1e-10 && prod.im.abs() < 1e-10,
                    "multiplier product should equal B at {p:?}"
                );
                for m in fp.multipliers {
                    let [c3, c2, c1, c0] = fp.charpoly;
                    let res = ((m * c3 + c2) * m + c1) * m + c0;
                    assert!(res.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn fixed_points_stay_on_the_diagonal() {
        // quantitative form of the lemma: the first two coordinates of
        // step(s) - s are y - x and z - y, so any off-diagonal state has
        // residual at least its distance from the diagonal directions
        let p = HenonParams {
            m1: 0.3,
            m2: 0.4,
            b: 0.8,
        };
        let n = 13;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let grid = |t: i32| -2.0 + 4.0 * t as f64 / (n - 1) as f64;
                    let s = State3::new(grid(i), grid(j), grid(k));
                    let res = (henon3d_step(s, &p) - s).amax();
                    let off = (s.y - s.x).abs().max((s.z - s.y).abs());
                    assert!(res >= off - TOL);
                }
            }
        }
    }
}
