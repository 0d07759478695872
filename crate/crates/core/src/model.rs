//! Model diffeomorphism with a homoclinic tangency to a conservative saddle:
//! a linear local map with multipliers (lambda1, lambda2, gamma), a global
//! affine-plus-quadratic map taking a neighborhood of a point on the unstable
//! axis back over the saddle, unfolding parameters, and the first-return
//! compositions T1 . T0^k on their strips of definition.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{Map3, State3, DIVERGENCE_RADIUS};

/// Absolute tolerance for coefficient zero tests.
pub const ZERO_TOL: f64 = 1e-12;

const DEFAULT_RADIUS: f64 = 0.5;
const K_SCAN_LIMIT: usize = 1000;

/// Multipliers of the linear saddle. The saddle is of type (2, 1): two
/// stable directions, one unstable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
}

impl SaddleParams {
    /// Jacobian of the saddle, lambda1 * lambda2 * gamma.
    pub fn j1_saddle(&self) -> f64 {
        self.lambda1 * self.lambda2 * self.gamma
    }

    /// Checks 0 < |lambda2| < |lambda1| < 1 < |gamma| together with
    /// |lambda1 gamma| > 1 and |lambda2 gamma| > 1, which the return-map
    /// scalings require throughout.
    pub fn validate(&self) -> Result<()> {
        let l1 = self.lambda1.abs();
        let l2 = self.lambda2.abs();
        let g = self.gamma.abs();
        let fail = |what: &str| {
            Err(Error::ConditionA(format!(
                "{what} (lambda1 = {}, lambda2 = {}, gamma = {})",
                self.lambda1, self.lambda2, self.gamma
            )))
        };
        if !(l2 > 0.0) {
            return fail("|lambda2| must be positive");
        }
        if !(l2 < l1) {
            return fail("|lambda2| must be below |lambda1|");
        }
        if !(l1 < 1.0) {
            return fail("|lambda1| must be below 1");
        }
        if !(g > 1.0) {
            return fail("|gamma| must exceed 1");
        }
        if !(l1 * g > 1.0) {
            return fail("|lambda1 gamma| must exceed 1");
        }
        if !(l2 * g > 1.0) {
            return fail("|lambda2 gamma| must exceed 1");
        }
        Ok(())
    }
}

/// Default saddle multipliers; gamma is recomputed by the unfolding so that
/// lambda1 lambda2 gamma = 1 - mu3.
pub fn default_saddle() -> SaddleParams {
    SaddleParams {
        lambda1: 0.5,
        lambda2: 0.4,
        gamma: 5.0,
    }
}

/// Coefficients of the global map
///   x1' = x1plus + a11 u1 + a12 u2 + b1 w + ...
///   x2' = x2plus + a21 u1 + a22 u2 + b2 w + ...
///   y'  = yplus  + c1 u1 + c2 u2 + d w^2 + ...
/// where (u1, u2, w) is the offset from the homoclinic point on the unstable
/// axis, (0, 0, yminus).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMapCoefficients {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub d: f64,
    pub x1plus: f64,
    pub x2plus: f64,
    pub yminus: f64,
    pub yplus: f64,
}

impl GlobalMapCoefficients {
    /// Determinant of the derivative of the global map at the homoclinic
    /// point (with the w^2 term contributing nothing):
    /// det [[a11, a12, b1], [a21, a22, b2], [c1, c2, 0]].
    pub fn transversality_determinant(&self) -> f64 {
        self.c1 * (self.a12 * self.b2 - self.b1 * self.a22)
            - self.c2 * (self.a11 * self.b2 - self.b1 * self.a21)
    }

    /// Defaults with b1 = 0: the unstable manifold returns tangent to the
    /// strong-stable leaf. Chosen so the determinant above equals 1, making
    /// the tangency conservative at mu = 0.
    pub fn default_case1() -> Self {
        GlobalMapCoefficients {
            a11: 1.0,
            a12: 1.5,
            a21: 0.3,
            a22: 1.0,
            b1: 0.0,
            b2: 1.0,
            c1: 1.0,
            c2: 0.5,
            d: 1.0,
            x1plus: 0.3,
            x2plus: 0.2,
            yminus: 0.5,
            yplus: 0.0,
        }
    }

    /// Defaults with c1 = 0, again normalized to unit determinant.
    pub fn default_case2() -> Self {
        GlobalMapCoefficients {
            a11: 1.0,
            a12: 0.0,
            a21: 0.0,
            a22: 1.0,
            b1: 1.0,
            b2: 1.0,
            c1: 0.0,
            c2: -1.0,
            d: 1.0,
            x1plus: 0.3,
            x2plus: 0.2,
            yminus: 0.5,
            yplus: 0.0,
        }
    }
}

/// Unfolding parameters: mu1 splits the tangency in y, mu2 rotates the
/// return direction (it replaces b1 in case I, c1 in case II), mu3 detunes
/// the saddle Jacobian via 1 - lambda1 lambda2 gamma = mu3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct UnfoldingParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
}

/// How the homoclinic orbit returns relative to the strong-stable foliation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TangencyCase {
    Simple,
    CaseI,
    CaseII,
    Degenerate,
}

impl TangencyCase {
    pub fn label(&self) -> &'static str {
        match self {
            TangencyCase::Simple => "simple",
            TangencyCase::CaseI => "case-i",
            TangencyCase::CaseII => "case-ii",
            TangencyCase::Degenerate => "degenerate",
        }
    }
}

/// Classifies the coefficient pattern: Simple when b1 and c1 are both
/// nonzero, CaseI when b1 = 0 with c1, b2 nonzero, CaseII when c1 = 0 with
/// b1, c2 nonzero, Degenerate otherwise. Zero means |coefficient| <= 1e-12.
/// Errors when the quadratic coefficient d vanishes.
pub fn classify_tangency(gc: &GlobalMapCoefficients) -> Result<TangencyCase> {
    if gc.d.abs() <= ZERO_TOL {
        return Err(Error::DegenerateTangency);
    }
    let zero = |v: f64| v.abs() <= ZERO_TOL;
    Ok(if !zero(gc.b1) && !zero(gc.c1) {
        TangencyCase::Simple
    } else if zero(gc.b1) && !zero(gc.c1) && !zero(gc.b2) {
        TangencyCase::CaseI
    } else if zero(gc.c1) && !zero(gc.b1) && !zero(gc.c2) {
        TangencyCase::CaseII
    } else {
        TangencyCase::Degenerate
    })
}

/// Optional perturbation tails, all zero by default. `local` holds cubic
/// local-map tails (tau1 x1^2 y, tau2 x2^2 y, tau3 x1 y^2), forms chosen to
/// keep the straightened invariant manifolds {y=0}, {x1=x2=0} and
/// {x1=0, y=0} invariant. Each global row holds remainder coefficients in
/// the monomial order [u1^2, u1 u2, u2^2, u1 w, u2 w, top] with top = w^2
/// for the first two rows and top = w^3 for the third (the w^2 slot of the
/// third row is the tangency coefficient d, not a tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct TailCoefficients {
    #[serde(default)]
    pub local: [f64; 3],
    #[serde(default)]
    pub row1: [f64; 6],
    #[serde(default)]
    pub row2: [f64; 6],
    #[serde(default)]
    pub row3: [f64; 6],
}

impl TailCoefficients {
    pub fn local_is_zero(&self) -> bool {
        self.local == [0.0; 3]
    }

    pub fn is_zero(&self) -> bool {
        self.local_is_zero()
            && self.row1 == [0.0; 6]
            && self.row2 == [0.0; 6]
            && self.row3 == [0.0; 6]
    }
}

fn quad_tail(c: &[f64; 6], u1: f64, u2: f64, w: f64, top: f64) -> f64 {
    c[0] * u1 * u1 + c[1] * u1 * u2 + c[2] * u2 * u2 + c[3] * u1 * w + c[4] * u2 * w + c[5] * top
}

fn quad_tail_grad(c: &[f64; 6], u1: f64, u2: f64, w: f64, dtop_dw: f64) -> [f64; 3] {
    [
        2.0 * c[0] * u1 + c[1] * u2 + c[3] * w,
        c[1] * u1 + 2.0 * c[2] * u2 + c[4] * w,
        c[3] * u1 + c[4] * u2 + c[5] * dtop_dw,
    ]
}

/// One step of the local normal form, (lambda1 x1, lambda2 x2, gamma y).
pub fn local_map_step(s: State3, sp: &SaddleParams) -> State3 {
    State3::new(sp.lambda1 * s.x, sp.lambda2 * s.y, sp.gamma * s.z)
}

/// k-th power of the local normal form, computed through direct powers of
/// the multipliers. Errors when |gamma^k y| exceeds the divergence radius,
/// with the magnitude test done in the log domain so no overflow occurs.
pub fn local_map_power(s: State3, sp: &SaddleParams, k: usize) -> Result<State3> {
    if s.z != 0.0 && (k as f64) * sp.gamma.abs().ln() + s.z.abs().ln() > DIVERGENCE_RADIUS.ln() {
        return Err(Error::Escaped {
            step: k,
            radius: DIVERGENCE_RADIUS,
        });
    }
    Ok(State3::new(
        sp.lambda1.powi(k as i32) * s.x,
        sp.lambda2.powi(k as i32) * s.y,
        sp.gamma.powi(k as i32) * s.z,
    ))
}

/// One step of the global map. Input is the offset from the homoclinic point
/// on the unstable axis, (u1, u2, w) = (x1, x2, y - yminus); output is in
/// saddle-chart coordinates, landing near (x1plus, x2plus, yplus).
pub fn global_map_step(u: State3, gc: &GlobalMapCoefficients, tails: &TailCoefficients) -> State3 {
    let (u1, u2, w) = (u.x, u.y, u.z);
    let w2 = w * w;
    State3::new(
        gc.x1plus + gc.a11 * u1 + gc.a12 * u2 + gc.b1 * w + quad_tail(&tails.row1, u1, u2, w, w2),
        gc.x2plus + gc.a21 * u1 + gc.a22 * u2 + gc.b2 * w + quad_tail(&tails.row2, u1, u2, w, w2),
        gc.yplus + gc.c1 * u1 + gc.c2 * u2 + gc.d * w2 + quad_tail(&tails.row3, u1, u2, w, w2 * w),
    )
}

/// Derivative of [`global_map_step`] with respect to (u1, u2, w).
pub fn global_map_jacobian(
    u: State3,
    gc: &GlobalMapCoefficients,
    tails: &TailCoefficients,
) -> Matrix3<f64> {
    let (u1, u2, w) = (u.x, u.y, u.z);
    let g1 = quad_tail_grad(&tails.row1, u1, u2, w, 2.0 * w);
    let g2 = quad_tail_grad(&tails.row2, u1, u2, w, 2.0 * w);
    let g3 = quad_tail_grad(&tails.row3, u1, u2, w, 3.0 * w * w);
    Matrix3::new(
        gc.a11 + g1[0],
        gc.a12 + g1[1],
        gc.b1 + g1[2],
        gc.a21 + g2[0],
        gc.a22 + g2[1],
        gc.b2 + g2[2],
        gc.c1 + g3[0],
        gc.c2 + g3[1],
        2.0 * gc.d * w + g3[2],
    )
}

/// Installs the unfolding: yplus := mu1, the case's zero coefficient := mu2
/// (b1 in case I, c1 in case II), and gamma := (1 - mu3)/(lambda1 lambda2)
/// with lambda1, lambda2 held fixed. The resulting saddle is re-validated.
pub fn apply_unfolding(
    gc: &GlobalMapCoefficients,
    sp: &SaddleParams,
    mu: &UnfoldingParams,
    case: TangencyCase,
) -> Result<(GlobalMapCoefficients, SaddleParams)> {
    let mut out = *gc;
    out.yplus = mu.mu1;
    match case {
        TangencyCase::CaseI => out.b1 = mu.mu2,
        TangencyCase::CaseII => out.c1 = mu.mu2,
        other => {
            return Err(Error::CaseMismatch {
                expected: "case-i or case-ii",
                actual: other.label(),
            })
        }
    }
    let saddle = SaddleParams {
        lambda1: sp.lambda1,
        lambda2: sp.lambda2,
        gamma: (1.0 - mu.mu3) / (sp.lambda1 * sp.lambda2),
    };
    saddle.validate()?;
    Ok((out, saddle))
}

/// One strip of definition of the k-th return map: the points of the box
/// around (x1plus, x2plus, 0) whose k-th local image lies in the box of
/// radius `pi_minus_radius` around the homoclinic point (0, 0, yminus).
/// Intervals are closed; `k` is the return index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub k: usize,
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub y: [f64; 2],
}

impl Strip {
    pub fn contains(&self, s: &State3) -> bool {
        self.x1[0] <= s.x
            && s.x <= self.x1[1]
            && self.x2[0] <= s.y
            && s.y <= self.x2[1]
            && self.y[0] <= s.z
            && s.z <= self.y[1]
    }

    pub fn center(&self) -> State3 {
        State3::new(
            0.5 * (self.x1[0] + self.x1[1]),
            0.5 * (self.x2[0] + self.x2[1]),
            0.5 * (self.y[0] + self.y[1]),
        )
    }

    pub fn corners(&self) -> [State3; 8] {
        let mut out = [State3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = State3::new(
                self.x1[i & 1],
                self.x2[(i >> 1) & 1],
                self.y[(i >> 2) & 1],
            );
        }
        out
    }

    pub fn y_width(&self) -> f64 {
        self.y[1] - self.y[0]
    }
}

fn intersect(a: [f64; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let lo = a[0].max(b[0]);
    let hi = a[1].min(b[1]);
    if lo <= hi {
        Some([lo, hi])
    } else {
        None
    }
}

/// The model after unfolding: evaluation uses `saddle` and `coeffs`, while
/// the pre-unfolding baseline is kept for reconfiguration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    base_saddle: SaddleParams,
    base_coeffs: GlobalMapCoefficients,
    pub tails: TailCoefficients,
    pub case: TangencyCase,
    pub mu: UnfoldingParams,
    pub pi_plus_radius: f64,
    pub pi_minus_radius: f64,
    pub saddle: SaddleParams,
    pub coeffs: GlobalMapCoefficients,
}

impl Model {
    /// Validates the baseline (tangency case, quadratic coefficient,
    /// transversality determinant, and for case II the derived coefficient
    /// a21 - (b2/b1) a11), then installs the unfolding.
    pub fn new(
        base_saddle: SaddleParams,
        base_coeffs: GlobalMapCoefficients,
        tails: TailCoefficients,
        mu: UnfoldingParams,
        pi_plus_radius: f64,
        pi_minus_radius: f64,
    ) -> Result<Model> {
        let case = classify_tangency(&base_coeffs)?;
        if !matches!(case, TangencyCase::CaseI | TangencyCase::CaseII) {
            return Err(Error::CaseMismatch {
                expected: "case-i or case-ii",
                actual: case.label(),
            });
        }
        if base_coeffs.transversality_determinant().abs() <= ZERO_TOL {
            return Err(Error::DegenerateCoefficient(
                "transversality determinant of the global map vanishes",
            ));
        }
        if case == TangencyCase::CaseII {
            let a21p = base_coeffs.a21 - (base_coeffs.b2 / base_coeffs.b1) * base_coeffs.a11;
            if a21p.abs() <= ZERO_TOL {
                return Err(Error::DegenerateCoefficient(
                    "derived coefficient a21 - (b2/b1) a11 vanishes",
                ));
            }
        }
        if !(pi_plus_radius > 0.0 && pi_minus_radius > 0.0) {
            return Err(Error::Config("box radii must be positive".into()));
        }
        let (coeffs, saddle) = apply_unfolding(&base_coeffs, &base_saddle, &mu, case)?;
        Ok(Model {
            base_saddle,
            base_coeffs,
            tails,
            case,
            mu,
            pi_plus_radius,
            pi_minus_radius,
            saddle,
            coeffs,
        })
    }

    /// Default case I model at the given unfolding parameters.
    pub fn case1(mu: UnfoldingParams) -> Result<Model> {
        Model::new(
            default_saddle(),
            GlobalMapCoefficients::default_case1(),
            TailCoefficients::default(),
            mu,
            DEFAULT_RADIUS,
            DEFAULT_RADIUS,
        )
    }

    /// Default case II model at the given unfolding parameters.
    pub fn case2(mu: UnfoldingParams) -> Result<Model> {
        Model::new(
            default_saddle(),
            GlobalMapCoefficients::default_case2(),
            TailCoefficients::default(),
            mu,
            DEFAULT_RADIUS,
            DEFAULT_RADIUS,
        )
    }

    pub fn with_tails(self, tails: TailCoefficients) -> Model {
        Model { tails, ..self }
    }

    pub fn with_radii(self, pi_plus_radius: f64, pi_minus_radius: f64) -> Model {
        Model {
            pi_plus_radius,
            pi_minus_radius,
            ..self
        }
    }

    /// Same baseline, different unfolding.
    pub fn reunfolded(&self, mu: UnfoldingParams) -> Result<Model> {
        Model::new(
            self.base_saddle,
            self.base_coeffs,
            self.tails,
            mu,
            self.pi_plus_radius,
            self.pi_minus_radius,
        )
    }

    pub fn base_coefficients(&self) -> &GlobalMapCoefficients {
        &self.base_coeffs
    }

    pub fn base_saddle(&self) -> &SaddleParams {
        &self.base_saddle
    }

    /// One local step including any local tails.
    pub fn local_step(&self, s: State3) -> State3 {
        let t = &self.tails.local;
        let base = local_map_step(s, &self.saddle);
        if self.tails.local_is_zero() {
            return base;
        }
        State3::new(
            base.x + t[0] * s.x * s.x * s.z,
            base.y + t[1] * s.y * s.y * s.z,
            base.z + t[2] * s.x * s.z * s.z,
        )
    }

    fn local_step_jacobian(&self, s: State3) -> Matrix3<f64> {
        let sp = &self.saddle;
        let t = &self.tails.local;
        Matrix3::new(
            sp.lambda1 + 2.0 * t[0] * s.x * s.z,
            0.0,
            t[0] * s.x * s.x,
            0.0,
            sp.lambda2 + 2.0 * t[1] * s.y * s.z,
            t[1] * s.y * s.y,
            t[2] * s.z * s.z,
            0.0,
            sp.gamma + 2.0 * t[2] * s.x * s.z,
        )
    }

    /// One step of the global map including tails, on offsets from the
    /// homoclinic point.
    pub fn global_step(&self, u: State3) -> State3 {
        global_map_step(u, &self.coeffs, &self.tails)
    }

    fn strip_intervals(&self, k: usize) -> Result<Option<([f64; 2], [f64; 2], [f64; 2])>> {
        let sp = &self.saddle;
        let gc = &self.coeffs;
        let rp = self.pi_plus_radius;
        let rm = self.pi_minus_radius;
        let gk = sp.gamma.powi(k as i32);
        if !gk.is_finite() {
            return Err(Error::KRangeCap {
                k,
                k_max: (f64::MAX.ln() / sp.gamma.abs().ln()) as usize,
                gamma: sp.gamma,
            });
        }
        let l1k = sp.lambda1.abs().powi(k as i32);
        let l2k = sp.lambda2.abs().powi(k as i32);
        let x1 = intersect([gc.x1plus - rp, gc.x1plus + rp], [-rm / l1k, rm / l1k]);
        let x2 = intersect([gc.x2plus - rp, gc.x2plus + rp], [-rm / l2k, rm / l2k]);
        let e0 = (gc.yminus - rm) / gk;
        let e1 = (gc.yminus + rm) / gk;
        let y = intersect([-rp, rp], [e0.min(e1), e0.max(e1)]);
        Ok(match (x1, x2, y) {
            (Some(x1), Some(x2), Some(y)) => Some((x1, x2, y)),
            _ => None,
        })
    }

    /// Smallest return index with a nonempty strip.
    pub fn k_min(&self) -> Result<usize> {
        for k in 0..=K_SCAN_LIMIT {
            if self.strip_intervals(k)?.is_some() {
                return Ok(k);
            }
        }
        Err(Error::Config(format!(
            "no nonempty strip for any k <= {K_SCAN_LIMIT}"
        )))
    }

    /// Strip of definition of the k-th return map. With local tails active
    /// the box is the linear-part estimate.
    pub fn strip(&self, k: usize) -> Result<Strip> {
        match self.strip_intervals(k)? {
            Some((x1, x2, y)) => Ok(Strip { k, x1, x2, y }),
            None => Err(Error::EmptyStrip {
                k,
                k_min: self.k_min()?,
            }),
        }
    }

    /// The k-th return map T1 . T0^k together with its strip.
    pub fn first_return(&self, k: usize) -> Result<FirstReturnMap> {
        let strip = self.strip(k)?;
        Ok(FirstReturnMap {
            model: *self,
            k,
            strip,
        })
    }

    /// Offset of a chart point from the homoclinic point (0, 0, yminus).
    pub fn offset_from_homoclinic(&self, s: State3) -> State3 {
        State3::new(s.x, s.y, s.z - self.coeffs.yminus)
    }

    pub fn pi_minus_contains(&self, s: State3) -> bool {
        let u = self.offset_from_homoclinic(s);
        u.x.abs() <= self.pi_minus_radius
            && u.y.abs() <= self.pi_minus_radius
            && u.z.abs() <= self.pi_minus_radius
    }
}

/// The return map T1 . T0^k as a dynamical system on saddle-chart
/// coordinates. The strip records where the composition is a genuine first
/// return; evaluation itself is defined on all of the chart and orbits that
/// leave the strip simply escape under further iteration.
#[derive(Debug, Clone, Copy)]
pub struct FirstReturnMap {
    model: Model,
    k: usize,
    strip: Strip,
}

impl FirstReturnMap {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn strip(&self) -> &Strip {
        &self.strip
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn local_power_raw(&self, s: State3) -> State3 {
        let sp = &self.model.saddle;
        if self.model.tails.local_is_zero() {
            State3::new(
                sp.lambda1.powi(self.k as i32) * s.x,
                sp.lambda2.powi(self.k as i32) * s.y,
                sp.gamma.powi(self.k as i32) * s.z,
            )
        } else {
            let mut t = s;
            for _ in 0..self.k {
                t = self.model.local_step(t);
            }
            t
        }
    }
}

impl Map3 for FirstReturnMap {
    fn step(&self, s: State3) -> State3 {
        let t = self.local_power_raw(s);
        self.model.global_step(self.model.offset_from_homoclinic(t))
    }

    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        let sp = &self.model.saddle;
        let (t, dt0k) = if self.model.tails.local_is_zero() {
            let t = self.local_power_raw(s);
            let d = Matrix3::from_diagonal(&State3::new(
                sp.lambda1.powi(self.k as i32),
                sp.lambda2.powi(self.k as i32),
                sp.gamma.powi(self.k as i32),
            ));
            (t, d)
        } else {
            let mut t = s;
            let mut d = Matrix3::identity();
            for _ in 0..self.k {
                d = self.model.local_step_jacobian(t) * d;
                t = self.model.local_step(t);
            }
            (t, d)
        };
        let u = self.model.offset_from_homoclinic(t);
        global_map_jacobian(u, &self.model.coeffs, &self.model.tails) * dt0k
    }
}

/// On-disk model description.
pub const MODEL_SCHEMA: &str = "dlorenz.model.v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub schema: String,
    pub saddle: SaddleParams,
    pub coefficients: GlobalMapCoefficients,
    #[serde(default)]
    pub tails: TailCoefficients,
    #[serde(default)]
    pub mu: UnfoldingParams,
    #[serde(default = "default_radius")]
    pub pi_plus_radius: f64,
    #[serde(default = "default_radius")]
    pub pi_minus_radius: f64,
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS
}

impl Model {
    pub fn from_config(cfg: &ModelConfig) -> Result<Model> {
        if cfg.schema != MODEL_SCHEMA {
            return Err(Error::Config(format!(
                "unknown model schema {:?}, expected {MODEL_SCHEMA:?}",
                cfg.schema
            )));
        }
        Model::new(
            cfg.saddle,
            cfg.coefficients,
            cfg.tails,
            cfg.mu,
            cfg.pi_plus_radius,
            cfg.pi_minus_radius,
        )
    }

    pub fn to_config(&self) -> ModelConfig {
        ModelConfig {
            schema: MODEL_SCHEMA.to_string(),
            saddle: self.base_saddle,
            coefficients: self.base_coeffs,
            tails: self.tails,
            mu: self.mu,
            pi_plus_radius: self.pi_plus_radius,
            pi_minus_radius: self.pi_minus_radius,
        }
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Model::from_config(&cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("model config serializes")
    }
}
