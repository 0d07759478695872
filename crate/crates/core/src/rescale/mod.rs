//! Rescaled first-return maps. The k-th return map of the model is
//! conjugated by an affine chart whose centers and scales are computed in
//! double-double arithmetic, producing an exact cubic polynomial in the
//! rescaled variables. In these variables the return maps converge to one of
//! two quadratic limit families, and the distance to the limit can be
//! measured without the catastrophic cancellation that direct composition
//! suffers at large k.

pub mod poly;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::maps::limit::{
    limit_map_case1, limit_map_case1_jacobian, limit_map_case2, limit_map_case2_jacobian,
};
use crate::maps::{Map3, State3};
use crate::model::{Model, Strip, TangencyCase, UnfoldingParams};
use poly::{
    eval_rows, rows_jacobian, DdAffine, DdPoly, PolyRow, SLOT_CONST, SLOT_X1, SLOT_X2, SLOT_Y,
    SLOT_Y2,
};

const MAX_NEWTON_ITERS: usize = 40;
const MIX_LOOP_LIMIT: usize = 16;
const CENTER_RESIDUAL_TOL: f64 = 1e-24;
const POWER_OVERFLOW_LOG: f64 = 690.0;

/// Parameters of a quadratic limit family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

/// One step of the limit family for the given case.
pub fn limit_step(case: TangencyCase, p: LimitParams, s: State3) -> State3 {
    match case {
        TangencyCase::CaseII => limit_map_case2(s, p.m1, p.m2, p.m3),
        _ => limit_map_case1(s, p.m1, p.m2, p.m3),
    }
}

/// Derivative of the limit family for the given case.
pub fn limit_jacobian(case: TangencyCase, p: LimitParams, s: State3) -> Matrix3<f64> {
    match case {
        TangencyCase::CaseII => limit_map_case2_jacobian(s, p.m1, p.m2, p.m3),
        _ => limit_map_case1_jacobian(s, p.m1, p.m2, p.m3),
    }
}

/// Affine chart conjugating the k-th return map to rescaled variables.
/// Centers and scales are stored in double-double form because the chart
/// condition number grows like gamma^{2k}.
#[derive(Debug, Clone, Copy)]
pub struct RescaleChart {
    pub case: TangencyCase,
    pub k: usize,
    x1c: Dd,
    x2c: Dd,
    y_c: Dd,
    a1: Dd,
    a2: Dd,
    sy: Dd,
    mix: Dd,
    shift: Dd,
}

impl RescaleChart {
    /// Chart scales (first, second, vertical).
    pub fn scales(&self) -> (f64, f64, f64) {
        (self.a1.to_f64(), self.a2.to_f64(), self.sy.to_f64())
    }

    /// Chart center in original coordinates.
    pub fn center(&self) -> State3 {
        State3::new(self.x1c.to_f64(), self.x2c.to_f64(), self.y_c.to_f64())
    }

    /// Relative error amplification of mapping original coordinates into the
    /// chart: roughly the reciprocal of the vertical scale.
    pub fn condition(&self) -> f64 {
        1.0 / self.sy.to_f64().abs()
    }

    /// Maps a rescaled point to original coordinates.
    pub fn to_original(&self, s: State3) -> State3 {
        match self.case {
            TangencyCase::CaseII => {
                let x1 = self.x1c.add(self.a1.mul_f64(s.x));
                let x2 = self
                    .x2c
                    .add(self.mix.mul(self.a1).mul_f64(s.x))
                    .add(self.a2.mul_f64(s.y));
                let y = self.y_c.add(self.sy.mul_f64(s.z));
                State3::new(x1.to_f64(), x2.to_f64(), y.to_f64())
            }
            _ => {
                let x1_slot = self.shift.mul_f64(s.y).add_f64(s.x);
                let x1 = self
                    .x1c
                    .add(self.a1.mul(x1_slot))
                    .sub(self.mix.mul(self.a2).mul_f64(s.y));
                let x2 = self.x2c.add(self.a2.mul_f64(s.y));
                let y = self.y_c.add(self.sy.mul_f64(s.z));
                State3::new(x1.to_f64(), x2.to_f64(), y.to_f64())
            }
        }
    }

    /// Maps an original-coordinate point into the chart. The vertical
    /// component loses roughly `condition() * 1e-16` absolute accuracy.
    pub fn to_rescaled(&self, s: State3) -> State3 {
        let y = Dd::new(s.z).sub(self.y_c).div(self.sy);
        match self.case {
            TangencyCase::CaseII => {
                let x1 = Dd::new(s.x).sub(self.x1c).div(self.a1);
                let s2 = Dd::new(s.y).sub(self.mix.mul_f64(s.x));
                let s2c = self.x2c.sub(self.mix.mul(self.x1c));
                let x2 = s2.sub(s2c).div(self.a2);
                State3::new(x1.to_f64(), x2.to_f64(), y.to_f64())
            }
            _ => {
                let x2 = Dd::new(s.y).sub(self.x2c).div(self.a2);
                let v1 = Dd::new(s.x).add(self.mix.mul_f64(s.y));
                let v1c = self.x1c.add(self.mix.mul(self.x2c));
                let x1_old = v1.sub(v1c).div(self.a1);
                let x1 = x1_old.sub(self.shift.mul(x2));
                State3::new(x1.to_f64(), x2.to_f64(), y.to_f64())
            }
        }
    }
}

/// The k-th return map in rescaled variables: three exact cubic rows, the
/// chart that produced them, the strip they describe, and the limit-family
/// parameters read off the assembled coefficients.
#[derive(Debug, Clone)]
pub struct RescaledReturnMap {
    pub case: TangencyCase,
    pub k: usize,
    pub rows: [PolyRow; 3],
    pub chart: RescaleChart,
    pub strip: Strip,
    pub effective: LimitParams,
}

impl Map3 for RescaledReturnMap {
    fn step(&self, s: State3) -> State3 {
        eval_rows(&self.rows, s)
    }

    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        rows_jacobian(&self.rows, s)
    }
}

impl RescaledReturnMap {
    pub fn limit_step(&self, s: State3) -> State3 {
        limit_step(self.case, self.effective, s)
    }

    pub fn limit_jacobian(&self, s: State3) -> Matrix3<f64> {
        limit_jacobian(self.case, self.effective, s)
    }
}

fn overflow_guard(gamma: f64, k: usize) -> Result<()> {
    let lg = gamma.abs().ln();
    if 2.0 * (k as f64 + 1.0) * lg > POWER_OVERFLOW_LOG {
        return Err(Error::KRangeCap {
            k,
            k_max: (POWER_OVERFLOW_LOG / (2.0 * lg)) as usize - 1,
            gamma,
        });
    }
    Ok(())
}

/// Rows of the outgoing map as polynomials in the offset variables
/// (u1, u2, w), coefficients taken verbatim from the model.
fn outgoing_polys(model: &Model) -> [DdPoly; 3] {
    let gc = &model.coeffs;
    let t = &model.tails;
    let mut rows = [DdPoly::zero(), DdPoly::zero(), DdPoly::zero()];
    let lin = [
        [gc.x1plus, gc.a11, gc.a12, gc.b1],
        [gc.x2plus, gc.a21, gc.a22, gc.b2],
        [gc.yplus, gc.c1, gc.c2, 0.0],
    ];
    for (row, l) in rows.iter_mut().zip(lin.iter()) {
        row.c[SLOT_CONST] = Dd::new(l[0]);
        row.c[SLOT_X1] = Dd::new(l[1]);
        row.c[SLOT_X2] = Dd::new(l[2]);
        row.c[SLOT_Y] = Dd::new(l[3]);
    }
    rows[2].c[SLOT_Y2] = Dd::new(gc.d);
    // tail slots: [u1^2, u1 u2, u2^2, u1 w, u2 w, top]; the top monomial is
    // w^2 for the first two rows and w^3 for the third.
    let quad_slots = [4usize, 5, 7, 6, 8];
    for (row, tail, top) in [
        (0usize, &t.row1, SLOT_Y2),
        (1, &t.row2, SLOT_Y2),
        (2, &t.row3, 19),
    ] {
        for (&slot, &value) in quad_slots.iter().zip(tail.iter()) {
            rows[row].c[slot] = rows[row].c[slot].add(Dd::new(value));
        }
        rows[row].c[top] = rows[row].c[top].add(Dd::new(tail[5]));
    }
    rows
}

struct ChartCore {
    l1k: Dd,
    l2k: Dd,
    gk: Dd,
    x1c: Dd,
    x2c: Dd,
    wc: Dd,
    y_c: Dd,
    mix: Dd,
    a1: Dd,
    a2: Dd,
    sy: Dd,
}

fn solve_centers(
    case: TangencyCase,
    rows: &[DdPoly; 3],
    drow3_dw: &DdPoly,
    l1k: Dd,
    l2k: Dd,
    mix: Dd,
    x1c: &mut Dd,
    x2c: &mut Dd,
    wc: &mut Dd,
) -> Result<()> {
    for _ in 0..MAX_NEWTON_ITERS {
        let u = [l1k.mul(*x1c), l2k.mul(*x2c), *wc];
        let r0 = rows[0].eval(u);
        let r1 = rows[1].eval(u);
        let g0 = rows[0].gradient(u);
        let g1 = rows[1].gradient(u);
        let gd = drow3_dw.gradient(u);
        let f3 = drow3_dw.eval(u);
        let (f1, f2, jac) = match case {
            TangencyCase::CaseII => {
                let f1 = r0.sub(*x1c);
                let f2 = r1.sub(mix.mul(r0)).sub(x2c.sub(mix.mul(*x1c)));
                let jac = Matrix3::new(
                    g0[0].mul(l1k).to_f64() - 1.0,
                    g0[1].mul(l2k).to_f64(),
                    g0[2].to_f64(),
                    g1[0].sub(mix.mul(g0[0])).mul(l1k).to_f64() + mix.to_f64(),
                    g1[1].sub(mix.mul(g0[1])).mul(l2k).to_f64() - 1.0,
                    g1[2].sub(mix.mul(g0[2])).to_f64(),
                    gd[0].mul(l1k).to_f64(),
                    gd[1].mul(l2k).to_f64(),
                    gd[2].to_f64(),
                );
                (f1, f2, jac)
            }
            _ => {
                let f1 = r0.add(mix.mul(r1)).sub(*x1c).sub(mix.mul(*x2c));
                let f2 = r1.sub(*x2c);
                let jac = Matrix3::new(
                    g0[0].add(mix.mul(g1[0])).mul(l1k).to_f64() - 1.0,
                    g0[1].add(mix.mul(g1[1])).mul(l2k).to_f64() - mix.to_f64(),
                    g0[2].add(mix.mul(g1[2])).to_f64(),
                    g1[0].mul(l1k).to_f64(),
                    g1[1].mul(l2k).to_f64() - 1.0,
                    g1[2].to_f64(),
                    gd[0].mul(l1k).to_f64(),
                    gd[1].mul(l2k).to_f64(),
                    gd[2].to_f64(),
                );
                (f1, f2, jac)
            }
        };
        let res = f1
            .to_f64()
            .abs()
            .max(f2.to_f64().abs())
            .max(f3.to_f64().abs());
        if res < CENTER_RESIDUAL_TOL {
            return Ok(());
        }
        let rhs = Vector3::new(f1.to_f64(), f2.to_f64(), f3.to_f64());
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("singular chart center system".into()))?;
        *x1c = x1c.sub(Dd::new(delta.x));
        *x2c = x2c.sub(Dd::new(delta.y));
        *wc = wc.sub(Dd::new(delta.z));
    }
    Err(Error::Solver(
        "chart center iteration did not converge".into(),
    ))
}

fn build_chart_core(model: &Model, k: usize) -> Result<(ChartCore, [DdPoly; 3], DdPoly)> {
    let sp = &model.saddle;
    overflow_guard(sp.gamma, k)?;
    let rows = outgoing_polys(model);
    let drow3_dw = rows[2].derivative(2);
    let l1k = Dd::powi(sp.lambda1, k as i32);
    let l2k = Dd::powi(sp.lambda2, k as i32);
    let gk = Dd::powi(sp.gamma, k as i32);

    let mut x1c = Dd::ZERO;
    let mut x2c = Dd::ZERO;
    let mut wc = Dd::ZERO;
    let mut mix = Dd::ZERO;
    let ratio_k = l2k.div(l1k);
    let mut converged = false;
    for _ in 0..MIX_LOOP_LIMIT {
        solve_centers(
            model.case,
            &rows,
            &drow3_dw,
            l1k,
            l2k,
            mix,
            &mut x1c,
            &mut x2c,
            &mut wc,
        )?;
        let u = [l1k.mul(x1c), l2k.mul(x2c), wc];
        let g0 = rows[0].gradient(u);
        let g1 = rows[1].gradient(u);
        let g2 = rows[2].gradient(u);
        let new_mix = match model.case {
            TangencyCase::CaseII => {
                if g0[2].to_f64().abs() <= f64::MIN_POSITIVE {
                    return Err(Error::DegenerateCoefficient(
                        "vertical derivative of the first outgoing row vanishes",
                    ));
                }
                g1[2].div(g0[2])
            }
            _ => {
                if g2[0].to_f64().abs() <= f64::MIN_POSITIVE {
                    return Err(Error::DegenerateCoefficient(
                        "first stable derivative of the third outgoing row vanishes",
                    ));
                }
                g2[1].div(g2[0]).mul(ratio_k)
            }
        };
        let drift = new_mix.sub(mix).to_f64().abs();
        mix = new_mix;
        if drift < 1e-26 * (1.0 + mix.to_f64().abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Solver(
            "chart mixing iteration did not converge".into(),
        ));
    }
    solve_centers(
        model.case,
        &rows,
        &drow3_dw,
        l1k,
        l2k,
        mix,
        &mut x1c,
        &mut x2c,
        &mut wc,
    )?;

    let u = [l1k.mul(x1c), l2k.mul(x2c), wc];
    let g0 = rows[0].gradient(u);
    let g1 = rows[1].gradient(u);
    let g2 = rows[2].gradient(u);
    let d_eff = drow3_dw.gradient(u)[2].mul_f64(0.5);
    if d_eff.to_f64().abs() <= 1e-300 {
        return Err(Error::DegenerateTangency);
    }
    let sy = gk.mul(gk).mul(d_eff).recip().neg();
    let (a1, a2) = match model.case {
        TangencyCase::CaseII => {
            let b1s = g0[2].mul(gk).mul(sy);
            let inner = g1[0]
                .sub(mix.mul(g0[0]))
                .mul(l1k)
                .add(g1[1].sub(mix.mul(g0[1])).mul(l2k).mul(mix));
            let b2s = b1s.mul(inner);
            if b2s.to_f64().abs() <= 1e-300 {
                return Err(Error::DegenerateCoefficient(
                    "second rescaled direction collapses",
                ));
            }
            (b1s, b2s)
        }
        _ => {
            let a1 = sy.neg().div(g2[0].mul(l1k));
            if g1[2].to_f64().abs() <= f64::MIN_POSITIVE {
                return Err(Error::DegenerateCoefficient(
                    "vertical derivative of the second outgoing row vanishes",
                ));
            }
            let a2 = g1[2].mul(gk).mul(sy);
            (a1, a2)
        }
    };
    let y_c = Dd::new(model.coeffs.yminus).add(wc).div(gk);
    Ok((
        ChartCore {
            l1k,
            l2k,
            gk,
            x1c,
            x2c,
            wc,
            y_c,
            mix,
            a1,
            a2,
            sy,
        },
        rows,
        drow3_dw,
    ))
}

fn assemble(model: &Model, k: usize, snap: Option<(f64, f64)>) -> Result<RescaledReturnMap> {
    if !model.tails.local_is_zero() {
        return Err(Error::UnsupportedTails);
    }
    let strip = model.strip(k)?;
    let (core, t1_rows, _) = build_chart_core(model, k)?;

    let u1c = core.l1k.mul(core.x1c);
    let u2c = core.l2k.mul(core.x2c);
    let (u1_aff, u2_aff) = match model.case {
        TangencyCase::CaseII => {
            let u1 = DdAffine {
                c: u1c,
                x1: core.l1k.mul(core.a1),
                x2: Dd::ZERO,
                y: Dd::ZERO,
            };
            let u2 = DdAffine {
                c: u2c,
                x1: core.l2k.mul(core.mix).mul(core.a1),
                x2: core.l2k.mul(core.a2),
                y: Dd::ZERO,
            };
            (u1, u2)
        }
        _ => {
            let u1 = DdAffine {
                c: u1c,
                x1: core.l1k.mul(core.a1),
                x2: core.l1k.mul(core.mix).mul(core.a2).neg(),
                y: Dd::ZERO,
            };
            let u2 = DdAffine {
                c: u2c,
                x1: Dd::ZERO,
                x2: core.l2k.mul(core.a2),
                y: Dd::ZERO,
            };
            (u1, u2)
        }
    };
    let w_aff = DdAffine {
        c: core.wc,
        x1: Dd::ZERO,
        x2: Dd::ZERO,
        y: core.gk.mul(core.sy),
    };
    let subs = [u1_aff, u2_aff, w_aff];
    let p0 = t1_rows[0].compose(&subs);
    let p1 = t1_rows[1].compose(&subs);
    let p2 = t1_rows[2].compose(&subs);

    let (rows_dd, shift, effective) = match model.case {
        TangencyCase::CaseII => {
            let mut q1 = p0;
            q1.c[SLOT_CONST] = q1.c[SLOT_CONST].sub(core.x1c);
            let q1 = q1.scale(core.a1.recip());
            let s2c = core.x2c.sub(core.mix.mul(core.x1c));
            let mut q2 = p1.add_scaled(&p0, core.mix.neg());
            q2.c[SLOT_CONST] = q2.c[SLOT_CONST].sub(s2c);
            let q2 = q2.scale(core.a2.recip());
            let mut q3 = p2;
            q3.c[SLOT_CONST] = q3.c[SLOT_CONST].sub(core.y_c);
            let q3 = q3.scale(core.sy.recip());

            let mut q1 = q1;
            let mut q2 = q2;
            let mut q3 = q3;
            q1.c[SLOT_CONST] = Dd::ZERO;
            q1.c[SLOT_Y] = Dd::ONE;
            q2.c[SLOT_CONST] = Dd::ZERO;
            q2.c[SLOT_X1] = Dd::ONE;
            q2.c[SLOT_Y] = Dd::ZERO;
            let m1_eff = q3.c[SLOT_CONST].to_f64();
            let m2_eff = q3.c[SLOT_X1].to_f64();
            let m3_eff = q3.c[SLOT_X2].to_f64();
            if let Some((m1t, m2t)) = snap {
                q3.c[SLOT_CONST] = Dd::new(m1t);
                q3.c[SLOT_X1] = Dd::new(m2t);
            } else {
                q3.c[SLOT_CONST] = Dd::new(m1_eff);
                q3.c[SLOT_X1] = Dd::new(m2_eff);
            }
            q3.c[SLOT_Y] = Dd::ZERO;
            q3.c[SLOT_Y2] = Dd::new(-1.0);
            let effective = LimitParams {
                m1: q3.c[SLOT_CONST].to_f64(),
                m2: q3.c[SLOT_X1].to_f64(),
                m3: m3_eff,
            };
            ([q1, q2, q3], Dd::ZERO, effective)
        }
        _ => {
            let v1c = core.x1c.add(core.mix.mul(core.x2c));
            let mut q1 = p0.add_scaled(&p1, core.mix);
            q1.c[SLOT_CONST] = q1.c[SLOT_CONST].sub(v1c);
            let mut q1 = q1.scale(core.a1.recip());
            let mut q2 = p1;
            q2.c[SLOT_CONST] = q2.c[SLOT_CONST].sub(core.x2c);
            let mut q2 = q2.scale(core.a2.recip());
            let mut q3 = p2;
            q3.c[SLOT_CONST] = q3.c[SLOT_CONST].sub(core.y_c);
            let mut q3 = q3.scale(core.sy.recip());

            q1.c[SLOT_CONST] = Dd::ZERO;
            q2.c[SLOT_CONST] = Dd::ZERO;
            q2.c[SLOT_Y] = Dd::ONE;
            let m1_slot = q3.c[SLOT_CONST].to_f64();
            q3.c[SLOT_CONST] = match snap {
                Some((m1t, _)) => Dd::new(m1t),
                None => Dd::new(m1_slot),
            };
            q3.c[SLOT_X1] = Dd::new(-1.0);
            q3.c[SLOT_X2] = Dd::ZERO;
            q3.c[SLOT_Y] = Dd::ZERO;
            q3.c[SLOT_Y2] = Dd::new(-1.0);

            let shift = match snap {
                Some((_, m2t)) => Dd::new(-m2t),
                None => q1.c[SLOT_Y],
            };
            let sub = [
                DdAffine {
                    c: Dd::ZERO,
                    x1: Dd::ONE,
                    x2: shift,
                    y: Dd::ZERO,
                },
                DdAffine {
                    c: Dd::ZERO,
                    x1: Dd::ZERO,
                    x2: Dd::ONE,
                    y: Dd::ZERO,
                },
                DdAffine {
                    c: Dd::ZERO,
                    x1: Dd::ZERO,
                    x2: Dd::ZERO,
                    y: Dd::ONE,
                },
            ];
            let mut r1 = q1.add_scaled(&q2, shift.neg()).compose(&sub);
            let r2 = q2.compose(&sub);
            let r3 = q3.compose(&sub);
            r1.c[SLOT_Y] = Dd::ZERO;
            let effective = LimitParams {
                m1: r3.c[SLOT_CONST].to_f64(),
                m2: r3.c[SLOT_X2].to_f64(),
                m3: -r1.c[SLOT_X2].to_f64(),
            };
            ([r1, r2, r3], shift, effective)
        }
    };

    let chart = RescaleChart {
        case: model.case,
        k,
        x1c: core.x1c,
        x2c: core.x2c,
        y_c: core.y_c,
        a1: core.a1,
        a2: core.a2,
        sy: core.sy,
        mix: core.mix,
        shift,
    };
    Ok(RescaledReturnMap {
        case: model.case,
        k,
        rows: [rows_dd[0].round(), rows_dd[1].round(), rows_dd[2].round()],
        chart,
        strip,
        effective,
    })
}

/// Assembles the k-th rescaled return map for the model as configured. The
/// limit-family parameters are measured from the assembled coefficients.
pub fn rescaled_return_map(model: &Model, k: usize) -> Result<RescaledReturnMap> {
    assemble(model, k, None)
}

/// Finds unfolding parameters (mu1, mu2) that place the k-th rescaled return
/// map at the requested limit-family parameters (M1, M2); mu3 is taken from
/// the model. Works by probing the assembled coefficient slots, which depend
/// exactly affinely on mu1 and mu2.
pub fn params_for_targets(model: &Model, k: usize, m1t: f64, m2t: f64) -> Result<UnfoldingParams> {
    let mu3 = model.mu.mu3;
    let at = |mu1: f64, mu2: f64| -> Result<RescaledReturnMap> {
        let tuned = model.reunfolded(UnfoldingParams { mu1, mu2, mu3 })?;
        assemble(&tuned, k, None)
    };
    let map_a = at(0.0, 0.0)?;
    let sp = &model.saddle;
    let h = (sp.lambda1 * sp.gamma).abs().powi(-(k as i32)).min(1.0);
    let map_b = at(0.0, h)?;
    let slope = (map_b.effective.m2 - map_a.effective.m2) / h;
    if !slope.is_finite() || slope == 0.0 {
        return Err(Error::Solver("second-parameter slot does not respond".into()));
    }
    // The slot responds exactly affinely, but the slope estimate and the slot
    // readings are f64, so one correction pass from a point where the slot is
    // already near the target removes the large-number rounding.
    let mut mu2 = (m2t - map_a.effective.m2) / slope;
    let map_c = at(0.0, mu2)?;
    mu2 += (m2t - map_c.effective.m2) / slope;
    let map_d = at(0.0, mu2)?;
    let sy = map_d.chart.sy;
    let mut mu1 = sy.mul_f64(m1t - map_d.effective.m1).to_f64();
    let map_e = at(mu1, mu2)?;
    mu1 += sy.mul_f64(m1t - map_e.effective.m1).to_f64();
    Ok(UnfoldingParams { mu1, mu2, mu3 })
}

/// Assembles the k-th rescaled return map tuned to the requested
/// limit-family parameters, with the matched coefficient slots set to the
/// targets exactly. Returns the map and the unfolding parameters used.
pub fn rescaled_return_map_for_targets(
    model: &Model,
    k: usize,
    m1t: f64,
    m2t: f64,
) -> Result<(RescaledReturnMap, UnfoldingParams)> {
    let mu = params_for_targets(model, k, m1t, m2t)?;
    let tuned = model.reunfolded(mu)?;
    let map = assemble(&tuned, k, Some((m1t, m2t)))?;
    Ok((map, mu))
}

/// Deliberately flawed parameter inversion that ignores both the homoclinic
/// offset in mu1 and the coupling correction in mu2. Exists so the
/// verification pipeline can demonstrate that it detects a broken inversion.
pub fn naive_params_for_targets(
    model: &Model,
    k: usize,
    m1t: f64,
    m2t: f64,
) -> Result<UnfoldingParams> {
    let mu3 = model.mu.mu3;
    let base = model.reunfolded(UnfoldingParams {
        mu1: 0.0,
        mu2: 0.0,
        mu3,
    })?;
    let sp = &base.saddle;
    let gc = base.base_coefficients();
    let l1g = (sp.lambda1 * sp.gamma).powi(k as i32);
    let g2k = sp.gamma.powi(2 * k as i32);
    if !g2k.is_finite() {
        return Err(Error::KRangeCap {
            k,
            k_max: (POWER_OVERFLOW_LOG / (2.0 * sp.gamma.abs().ln())) as usize - 1,
            gamma: sp.gamma,
        });
    }
    let lead = match model.case {
        TangencyCase::CaseII => gc.b1,
        _ => gc.c1,
    };
    let mu2 = m2t / (lead * l1g);
    let mu1 = -m1t / (gc.d * g2k) - sp.lambda1.powi(k as i32) * lead * gc.x1plus;
    Ok(UnfoldingParams { mu1, mu2, mu3 })
}

/// Sup distances between the assembled map and a limit family over a grid in
/// the cube of the given radius: `c0` for values, `c1` for Jacobian entries.
/// Grid points whose original-coordinate image falls outside the strip are
/// excluded and reported through `coverage`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeviationStats {
    pub c0: f64,
    pub c1: f64,
    pub coverage: f64,
    pub points_total: usize,
    pub points_used: usize,
}

pub fn deviation_from_limit(
    map: &RescaledReturnMap,
    limit: LimitParams,
    grid_n: usize,
    box_radius: f64,
) -> DeviationStats {
    let n = grid_n.max(2);
    let mut c0 = 0.0f64;
    let mut c1 = 0.0f64;
    let mut used = 0usize;
    let total = n * n * n;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let frac = |t: usize| -box_radius + 2.0 * box_radius * t as f64 / (n - 1) as f64;
                let s = State3::new(frac(i), frac(j), frac(l));
                if !map.strip.contains(&map.chart.to_original(s)) {
                    continue;
                }
                used += 1;
                let dv = (map.step(s) - limit_step(map.case, limit, s)).amax();
                c0 = c0.max(dv);
                let dj = map.jacobian(s) - limit_jacobian(map.case, limit, s);
                c1 = c1.max(dj.abs().max());
            }
        }
    }
    DeviationStats {
        c0,
        c1,
        coverage: used as f64 / total as f64,
        points_total: total,
        points_used: used,
    }
}

/// One row of a convergence report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub c0: f64,
    pub c1: f64,
    pub coverage: f64,
    pub jacobian_residual: f64,
    pub effective: LimitParams,
    pub mu: UnfoldingParams,
}

/// Distance-to-limit measurements over a range of return indices, with a
/// fitted geometric rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub case: TangencyCase,
    pub targets: (f64, f64),
    pub mu3: f64,
    pub sabotage: bool,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_rate: f64,
    pub predicted_rate: f64,
    pub c1_first: f64,
    pub c1_last: f64,
}

const FIT_FLOOR: f64 = 1e-13;
const FIT_MIN_POINTS: usize = 4;

/// Runs the rescaling verification: for each k in the range, tunes the
/// unfolding to the targets, assembles the rescaled return map, and measures
/// its distance to the limit family. With `sabotage` the flawed inversion is
/// used instead and the comparison is pinned to the target parameters, so a
/// broken inversion shows up as a non-converging report.
pub fn convergence_report(
    model: &Model,
    targets: (f64, f64),
    k_range: (usize, usize),
    grid_n: usize,
    sabotage: bool,
) -> Result<ConvergenceReport> {
    let (k_lo, k_hi) = k_range;
    if k_lo > k_hi {
        return Err(Error::Config(format!(
            "empty return-index range {k_lo}..{k_hi}"
        )));
    }
    let ks: Vec<usize> = (k_lo..=k_hi).collect();
    let rows: Result<Vec<ConvergenceRow>> = ks
        .par_iter()
        .map(|&k| {
            let (map, mu) = if sabotage {
                let mu = naive_params_for_targets(model, k, targets.0, targets.1)?;
                let tuned = model.reunfolded(mu)?;
                (assemble(&tuned, k, None)?, mu)
            } else {
                rescaled_return_map_for_targets(model, k, targets.0, targets.1)?
            };
            let limit = LimitParams {
                m1: targets.0,
                m2: targets.1,
                m3: map.effective.m3,
            };
            let stats = deviation_from_limit(&map, limit, grid_n, 1.0);
            let det = rows_jacobian(&map.rows, State3::zeros()).determinant();
            let j1 = model.saddle.j1_saddle().abs();
            let jacobian_residual = (det.abs() / j1.powi(k as i32 + 1) - 1.0).abs();
            Ok(ConvergenceRow {
                k,
                c0: stats.c0,
                c1: stats.c1,
                coverage: stats.coverage,
                jacobian_residual,
                effective: map.effective,
                mu,
            })
        })
        .collect();
    let rows = rows?;
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.c0 > FIT_FLOOR && r.c0.is_finite())
        .map(|r| (r.k as f64, r.c0.ln()))
        .collect();
    if usable.len() < FIT_MIN_POINTS {
        return Err(Error::InsufficientRange {
            got: usable.len(),
            needed: FIT_MIN_POINTS,
        });
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let sy: f64 = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - sx) * (p.0 - sx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
    let fitted_rate = (sxy / sxx).exp();
    let predicted_rate = model
        .saddle
        .lambda1
        .abs()
        .max(1.0 / model.saddle.gamma.abs());
    let c1_first = rows.first().map(|r| r.c1).unwrap_or(f64::NAN);
    let c1_last = rows.last().map(|r| r.c1).unwrap_or(f64::NAN);
    Ok(ConvergenceReport {
        case: model.case,
        targets,
        mu3: model.mu.mu3,
        sabotage,
        rows,
        fitted_rate,
        predicted_rate,
        c1_first,
        c1_last,
    })
}

/// Fixed point of the limit family with the given parameters, when one
/// exists: the vertical coordinate solves Y^2 + (1 - M2 - M3) Y - M1 = 0 and
/// the larger root is returned.
pub fn limit_fixed_point(case: TangencyCase, p: LimitParams) -> Result<State3> {
    let b = 1.0 - p.m2 - p.m3;
    let disc = b * b + 4.0 * p.m1;
    if disc < 0.0 {
        return Err(Error::Solver(
            "limit family has no real fixed point at these parameters".into(),
        ));
    }
    let y = 0.5 * (-b + disc.sqrt());
    Ok(match case {
        TangencyCase::CaseII => State3::new(y, y, y),
        _ => State3::new(-p.m3 * y, y, y),
    })
}

/// Newton iteration for a fixed point of a map with an analytic Jacobian.
pub fn newton_fixed_point<M: Map3>(map: &M, guess: State3) -> Result<State3> {
    let mut x = guess;
    for _ in 0..50 {
        let f = map.step(x) - x;
        if f.amax() < 1e-13 * (1.0 + x.amax()) {
            return Ok(x);
        }
        let jac = map.jacobian(x) - Matrix3::identity();
        let delta = jac
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Solver("singular fixed-point system".into()))?;
        x -= delta;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Solver("fixed-point iteration diverged".into()));
        }
    }
    Err(Error::Solver("fixed-point iteration did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TailCoefficients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn case1_model() -> Model {
        Model::case1(UnfoldingParams::default()).unwrap()
    }

    fn case2_model() -> Model {
        Model::case2(UnfoldingParams::default()).unwrap()
    }

    fn small_tails() -> TailCoefficients {
        TailCoefficients {
            local: [0.0; 3],
            row1: [0.02, -0.01, 0.03, 0.01, -0.02, 0.015],
            row2: [-0.01, 0.02, 0.01, -0.03, 0.01, -0.02],
            row3: [0.03, 0.01, -0.02, 0.02, 0.01, 0.025],
        }
    }

    #[test]
    fn small_k_maps_match_direct_composition() {
        for (model, tails) in [
            (case1_model(), false),
            (case2_model(), false),
            (case1_model(), true),
            (case2_model(), true),
        ] {
            let model = if tails {
                model.with_tails(small_tails())
            } else {
                model
            };
            let mu = UnfoldingParams {
                mu1: 1e-7,
                mu2: 1e-4,
                mu3: 0.0,
            };
            let model = model.reunfolded(mu).unwrap();
            for k in 3..=6 {
                let map = rescaled_return_map(&model, k).unwrap();
                let direct = model.first_return(k).unwrap();
                let tol = 1e-10_f64.max(map.chart.condition() * 2e-14);
                for i in -1..=1 {
                    for j in -1..=1 {
                        for l in -1..=1 {
                            let x = State3::new(i as f64, j as f64, l as f64);
                            let s = map.chart.to_original(x);
                            let via_model = map.chart.to_rescaled(direct.step(s));
                            let dv = (map.step(x) - via_model).amax();
                            assert!(
                                dv < tol,
                                "k={k} tails={tails} x={x:?}: polynomial and composed returns differ by {dv:e} (tol {tol:e})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn assembled_rows_have_normal_form_slots() {
        let (map, _) = rescaled_return_map_for_targets(&case1_model(), 15, 1.0, 0.5).unwrap();
        assert_eq!(map.rows[0].c[SLOT_CONST], 0.0, "first row constant");
        assert_eq!(map.rows[0].c[SLOT_Y], 0.0, "first row vertical slot");
        assert_eq!(map.rows[1].c[SLOT_CONST], 0.0, "second row constant");
        assert_eq!(map.rows[1].c[SLOT_Y], 1.0, "second row vertical slot");
        assert_eq!(map.rows[2].c[SLOT_CONST], 1.0, "third row constant");
        assert_eq!(map.rows[2].c[SLOT_X1], -1.0, "third row first slot");
        assert_eq!(map.rows[2].c[SLOT_X2], 0.5, "third row second slot");
        assert_eq!(map.rows[2].c[SLOT_Y], 0.0, "third row vertical slot");
        assert_eq!(map.rows[2].c[SLOT_Y2], -1.0, "third row quadratic slot");
        assert_eq!(map.effective.m1, 1.0, "first effective parameter");
        assert_eq!(map.effective.m2, 0.5, "second effective parameter");
        for row in &map.rows {
            for idx in 10..poly::N_MONOMIALS {
                assert_eq!(row.c[idx], 0.0, "cubic slot {idx} without tails");
            }
        }

        let (map2, _) = rescaled_return_map_for_targets(&case2_model(), 15, 1.0, 0.5).unwrap();
        assert_eq!(map2.rows[0].c[SLOT_CONST], 0.0, "first row constant");
        assert_eq!(map2.rows[0].c[SLOT_Y], 1.0, "first row vertical slot");
        assert_eq!(map2.rows[1].c[SLOT_CONST], 0.0, "second row constant");
        assert_eq!(map2.rows[1].c[SLOT_X1], 1.0, "second row first slot");
        assert_eq!(map2.rows[1].c[SLOT_Y], 0.0, "second row vertical slot");
        assert_eq!(map2.rows[2].c[SLOT_CONST], 1.0, "third row constant");
        assert_eq!(map2.rows[2].c[SLOT_X1], 0.5, "third row first slot");
        assert_eq!(map2.rows[2].c[SLOT_Y], 0.0, "third row vertical slot");
        assert_eq!(map2.rows[2].c[SLOT_Y2], -1.0, "third row quadratic slot");
    }

    #[test]
    fn zero_tail_assembly_matches_closed_forms() {
        let mu = UnfoldingParams {
            mu1: 1e-8,
            mu2: 1e-5,
            mu3: 0.0,
        };
        let model = case1_model().reunfolded(mu).unwrap();
        let k = 10usize;
        let map = rescaled_return_map(&model, k).unwrap();
        let sp = &model.saddle;
        let gc = &model.coeffs;

        let l1g = (sp.lambda1 * sp.gamma).powi(k as i32);
        let l2g = (sp.lambda2 * sp.gamma).powi(k as i32);
        let m2_expected = gc.c1 * mu.mu2 * l1g + gc.c2 * gc.b2 * l2g;
        let rel = ((map.effective.m2 - m2_expected) / m2_expected).abs();
        assert!(
            rel < 1e-10,
            "second parameter slot {:.6e} vs closed form {:.6e} (rel {rel:e})",
            map.effective.m2,
            m2_expected
        );

        let ea_expected = -gc.a21 / (gc.b2 * gc.c1 * sp.gamma.powi(k as i32));
        let ea = map.rows[1].c[SLOT_X1];
        assert!(
            ((ea - ea_expected) / ea_expected).abs() < 1e-10,
            "stable coupling slot {ea:.6e} vs closed form {ea_expected:.6e}"
        );

        let ck = (gc.c2 / gc.c1) * (sp.lambda2 / sp.lambda1).powi(k as i32);
        let e_expected =
            sp.lambda2.powi(k as i32) * (gc.a22 - (gc.c2 / gc.c1) * gc.a21) - ea * map.effective.m2;
        let e_slot = map.rows[1].c[SLOT_X2];
        assert!(
            ((e_slot - e_expected) / e_expected).abs() < 1e-8,
            "second diagonal slot {e_slot:.6e} vs closed form {e_expected:.6e} (ck={ck:e})"
        );

        let det = rows_jacobian(&map.rows, State3::zeros()).determinant();
        let det_expected = (sp.lambda1 * sp.lambda2 * sp.gamma).powi(k as i32)
            * gc.transversality_determinant();
        assert!(
            ((det.abs() - det_expected.abs()) / det_expected.abs()).abs() < 1e-12,
            "origin determinant {det:.15e} vs product formula {det_expected:.15e}"
        );
    }

    #[test]
    fn tuned_slots_track_requested_parameters() {
        // The first unfolding parameter cancels a term of size lambda1^k, so
        // one ulp of it moves the first slot by about
        // lambda1^k * gamma^{2k} * 2^-52; only moderate k leaves headroom.
        for model in [case1_model(), case2_model()] {
            let k = 8usize;
            let mu = params_for_targets(&model, k, 0.7, 0.4).unwrap();
            let tuned = model.reunfolded(mu).unwrap();
            let honest = rescaled_return_map(&tuned, k).unwrap();
            assert!(
                (honest.effective.m1 - 0.7).abs() < 1e-6,
                "first parameter honestly lands at {:.9} for case {:?}",
                honest.effective.m1,
                model.case
            );
            let k = 12usize;
            let mu = params_for_targets(&model, k, 0.7, 0.4).unwrap();
            let tuned = model.reunfolded(mu).unwrap();
            let honest = rescaled_return_map(&tuned, k).unwrap();
            assert!(
                (honest.effective.m2 - 0.4).abs() < 1e-10,
                "second parameter honestly lands at {:.12} for case {:?}",
                honest.effective.m2,
                model.case
            );
        }
    }

    #[test]
    fn deviation_shrinks_at_the_predicted_rate() {
        for model in [case1_model(), case2_model()] {
            let report = convergence_report(&model, (0.0, 0.0), (10, 16), 5, false).unwrap();
            assert!(
                (report.fitted_rate - report.predicted_rate).abs() < 0.1,
                "case {:?}: fitted rate {:.4} vs predicted {:.4}",
                report.case,
                report.fitted_rate,
                report.predicted_rate
            );
            for row in &report.rows {
                assert!(
                    (row.coverage - 1.0).abs() < TOL,
                    "k={}: grid coverage {}",
                    row.k,
                    row.coverage
                );
            }
            assert!(
                report.c1_last < report.c1_first / 4.0,
                "case {:?}: derivative deviation {:.3e} -> {:.3e} did not shrink",
                report.case,
                report.c1_first,
                report.c1_last
            );
        }
    }

    #[test]
    fn tailed_global_map_still_converges() {
        let model = case1_model().with_tails(small_tails());
        let report = convergence_report(&model, (0.0, 0.0), (10, 15), 4, false).unwrap();
        assert!(
            report.fitted_rate > 0.3 && report.fitted_rate < 0.7,
            "fitted rate {:.4} with quadratic tails",
            report.fitted_rate
        );
    }

    #[test]
    fn origin_determinant_tracks_saddle_volume_product() {
        for mu3 in [0.0, 0.05] {
            let model = case1_model()
                .reunfolded(UnfoldingParams {
                    mu1: 0.0,
                    mu2: 0.0,
                    mu3,
                })
                .unwrap();
            let report = convergence_report(&model, (0.0, 0.0), (12, 16), 3, false).unwrap();
            for row in &report.rows {
                assert!(
                    row.jacobian_residual < 0.1,
                    "mu3={mu3} k={}: determinant residual {:.4}",
                    row.k,
                    row.jacobian_residual
                );
            }
        }
    }

    #[test]
    fn pullback_of_limit_fixed_point_closes_an_orbit() {
        let model = case1_model();
        let k = 10usize;
        let (map, _) = rescaled_return_map_for_targets(&model, k, 1.0, 0.5).unwrap();
        let guess = limit_fixed_point(map.case, map.effective).unwrap();
        let fixed = newton_fixed_point(&map, guess).unwrap();
        assert!(
            (map.step(fixed) - fixed).amax() < 1e-12,
            "rescaled fixed point residual"
        );
        let tuned = model
            .reunfolded(params_for_targets(&model, k, 1.0, 0.5).unwrap())
            .unwrap();
        let s = map.chart.to_original(fixed);
        let closed = tuned.first_return(k).unwrap().step(s);
        assert!(
            (closed - s).amax() < 1e-9,
            "orbit closure residual {:.3e}",
            (closed - s).amax()
        );
    }

    #[test]
    fn flawed_inversion_is_detected() {
        let model = case1_model();
        let k = 12usize;
        let mu = naive_params_for_targets(&model, k, 0.5, 0.3).unwrap();
        let tuned = model.reunfolded(mu).unwrap();
        let honest = rescaled_return_map(&tuned, k).unwrap();
        assert!(
            (honest.effective.m1 - 0.5).abs() > 1e3,
            "flawed inversion should miss the first parameter, landed at {:.3e}",
            honest.effective.m1
        );
    }

    #[test]
    fn chart_round_trip_is_stable_at_moderate_depth() {
        // The first chart direction has scale near gamma^{-2k} / lambda1^k,
        // so f64 original coordinates resolve the first rescaled coordinate
        // only to roughly ulp(center) divided by that scale.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (k, tol) in [(6usize, 1e-9), (10, 1e-4)] {
            for model in [case1_model(), case2_model()] {
                let map = rescaled_return_map(&model, k).unwrap();
                for _ in 0..50 {
                    let x = State3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    let back = map.chart.to_rescaled(map.chart.to_original(x));
                    assert!(
                        (back - x).amax() < tol,
                        "k={k} chart round trip moved {x:?} to {back:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn deep_assemblies_hit_the_power_guard() {
        let err = rescaled_return_map(&case1_model(), 250).unwrap_err();
        assert!(
            matches!(err, Error::KRangeCap { .. }),
            "expected the power guard, got {err:?}"
        );
    }

    #[test]
    fn local_tails_are_rejected() {
        let mut tails = TailCoefficients::default();
        tails.local = [1e-3, 0.0, 0.0];
        let model = case1_model().with_tails(tails);
        let err = rescaled_return_map(&model, 8).unwrap_err();
        assert!(
            matches!(err, Error::UnsupportedTails),
            "expected rejection of local tails, got {err:?}"
        );
    }

    #[test]
    fn limit_fixed_points_are_fixed() {
        let p = LimitParams {
            m1: 1.0,
            m2: 0.5,
            m3: 0.7,
        };
        for case in [TangencyCase::CaseI, TangencyCase::CaseII] {
            let fp = limit_fixed_point(case, p).unwrap();
            let moved = (limit_step(case, p, fp) - fp).amax();
            assert!(moved < TOL, "{case:?} fixed point moved by {moved:e}");
        }
        let none = limit_fixed_point(
            TangencyCase::CaseI,
            LimitParams {
                m1: -10.0,
                m2: 0.5,
                m3: 0.5,
            },
        );
        assert!(none.is_err(), "no real fixed point at strongly negative m1");
    }
}
