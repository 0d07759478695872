//! Dense trivariate polynomials of total degree at most three, with
//! double-double coefficients during assembly and plain f64 coefficients for
//! evaluation. Composition with affine substitutions is exact in this space,
//! which is what lets a return map be assembled without catastrophic
//! cancellation.

use nalgebra::Matrix3;

use crate::dd::Dd;
use crate::maps::State3;

/// Number of trivariate monomials of total degree at most three.
pub const N_MONOMIALS: usize = 20;

/// Exponent triples (i, j, l) for X1^i X2^j Y^l, ordered by total degree.
pub const MONOMIAL_EXPONENTS: [[u8; 3]; N_MONOMIALS] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

/// Well-known coefficient slots.
pub const SLOT_CONST: usize = 0;
pub const SLOT_X1: usize = 1;
pub const SLOT_X2: usize = 2;
pub const SLOT_Y: usize = 3;
pub const SLOT_Y2: usize = 9;

pub fn monomial_index(e: [u8; 3]) -> usize {
    MONOMIAL_EXPONENTS
        .iter()
        .position(|m| *m == e)
        .expect("exponent triple within degree three")
}

/// Affine expression c + x1 X1 + x2 X2 + y Y with double-double coefficients.
#[derive(Debug, Clone, Copy)]
pub struct DdAffine {
    pub c: Dd,
    pub x1: Dd,
    pub x2: Dd,
    pub y: Dd,
}

impl DdAffine {
    pub fn constant(c: Dd) -> DdAffine {
        DdAffine {
            c,
            x1: Dd::ZERO,
            x2: Dd::ZERO,
            y: Dd::ZERO,
        }
    }

    pub fn scale(&self, s: Dd) -> DdAffine {
        DdAffine {
            c: self.c.mul(s),
            x1: self.x1.mul(s),
            x2: self.x2.mul(s),
            y: self.y.mul(s),
        }
    }

    pub fn add_const(&self, c: Dd) -> DdAffine {
        DdAffine {
            c: self.c.add(c),
            ..*self
        }
    }
}

/// Polynomial over the monomial basis above, double-double coefficients.
#[derive(Debug, Clone, Copy)]
pub struct DdPoly {
    pub c: [Dd; N_MONOMIALS],
}

impl DdPoly {
    pub fn zero() -> DdPoly {
        DdPoly {
            c: [Dd::ZERO; N_MONOMIALS],
        }
    }

    pub fn from_affine(a: &DdAffine) -> DdPoly {
        let mut p = DdPoly::zero();
        p.c[SLOT_CONST] = a.c;
        p.c[SLOT_X1] = a.x1;
        p.c[SLOT_X2] = a.x2;
        p.c[SLOT_Y] = a.y;
        p
    }

    pub fn add(&self, other: &DdPoly) -> DdPoly {
        let mut out = *self;
        for (a, b) in out.c.iter_mut().zip(other.c.iter()) {
            *a = a.add(*b);
        }
        out
    }

    pub fn sub(&self, other: &DdPoly) -> DdPoly {
        let mut out = *self;
        for (a, b) in out.c.iter_mut().zip(other.c.iter()) {
            *a = a.sub(*b);
        }
        out
    }

    pub fn scale(&self, s: Dd) -> DdPoly {
        let mut out = *self;
        for a in out.c.iter_mut() {
            *a = a.mul(s);
        }
        out
    }

    pub fn add_scaled(&self, other: &DdPoly, s: Dd) -> DdPoly {
        let mut out = *self;
        for (a, b) in out.c.iter_mut().zip(other.c.iter()) {
            *a = a.add(b.mul(s));
        }
        out
    }

    /// Product with an affine factor. Panics if a nonzero coefficient would
    /// land beyond total degree three; callers only multiply polynomials
    /// whose true product stays in the space.
    pub fn mul_affine(&self, a: &DdAffine) -> DdPoly {
        let mut out = DdPoly::zero();
        let terms = [
            (a.c, [0u8, 0, 0]),
            (a.x1, [1, 0, 0]),
            (a.x2, [0, 1, 0]),
            (a.y, [0, 0, 1]),
        ];
        for (idx, coeff) in self.c.iter().enumerate() {
            if coeff.hi == 0.0 && coeff.lo == 0.0 {
                continue;
            }
            let e = MONOMIAL_EXPONENTS[idx];
            for (factor, shift) in &terms {
                if factor.hi == 0.0 && factor.lo == 0.0 {
                    continue;
                }
                let ne = [e[0] + shift[0], e[1] + shift[1], e[2] + shift[2]];
                assert!(
                    (ne[0] + ne[1] + ne[2]) <= 3,
                    "affine product exceeds degree three"
                );
                let ni = monomial_index(ne);
                out.c[ni] = out.c[ni].add(coeff.mul(*factor));
            }
        }
        out
    }

    /// Substitutes X1, X2, Y by the three affine expressions.
    pub fn compose(&self, subs: &[DdAffine; 3]) -> DdPoly {
        let mut powers: [Option<DdPoly>; N_MONOMIALS] = [None; N_MONOMIALS];
        let mut unit = DdPoly::zero();
        unit.c[SLOT_CONST] = Dd::ONE;
        powers[0] = Some(unit);
        for idx in 1..N_MONOMIALS {
            let e = MONOMIAL_EXPONENTS[idx];
            let var = (0..3).find(|&v| e[v] > 0).expect("nonconstant monomial");
            let mut pe = e;
            pe[var] -= 1;
            let parent = powers[monomial_index(pe)].expect("parents precede children");
            powers[idx] = Some(parent.mul_affine(&subs[var]));
        }
        let mut out = DdPoly::zero();
        for (idx, coeff) in self.c.iter().enumerate() {
            if coeff.hi == 0.0 && coeff.lo == 0.0 {
                continue;
            }
            out = out.add_scaled(&powers[idx].unwrap(), *coeff);
        }
        out
    }

    /// Partial derivative with respect to variable `var` (0, 1, 2).
    pub fn derivative(&self, var: usize) -> DdPoly {
        let mut out = DdPoly::zero();
        for (idx, coeff) in self.c.iter().enumerate() {
            let e = MONOMIAL_EXPONENTS[idx];
            if e[var] == 0 {
                continue;
            }
            let mut ne = e;
            ne[var] -= 1;
            let ni = monomial_index(ne);
            out.c[ni] = out.c[ni].add(coeff.mul_f64(e[var] as f64));
        }
        out
    }

    pub fn eval(&self, x: [Dd; 3]) -> Dd {
        let mut pow = [[Dd::ONE; 4]; 3];
        for v in 0..3 {
            for p in 1..4 {
                pow[v][p] = pow[v][p - 1].mul(x[v]);
            }
        }
        let mut acc = Dd::ZERO;
        for (idx, coeff) in self.c.iter().enumerate() {
            if coeff.hi == 0.0 && coeff.lo == 0.0 {
                continue;
            }
            let e = MONOMIAL_EXPONENTS[idx];
            let m = pow[0][e[0] as usize]
                .mul(pow[1][e[1] as usize])
                .mul(pow[2][e[2] as usize]);
            acc = acc.add(coeff.mul(m));
        }
        acc
    }

    pub fn gradient(&self, x: [Dd; 3]) -> [Dd; 3] {
        [
            self.derivative(0).eval(x),
            self.derivative(1).eval(x),
            self.derivative(2).eval(x),
        ]
    }

    pub fn round(&self) -> PolyRow {
        let mut c = [0.0; N_MONOMIALS];
        for (out, dd) in c.iter_mut().zip(self.c.iter()) {
            *out = dd.to_f64();
        }
        PolyRow { c }
    }
}

/// One rounded row of an assembled return map.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolyRow {
    pub c: [f64; N_MONOMIALS],
}

impl PolyRow {
    pub fn eval(&self, s: State3) -> f64 {
        let pow = powers(s);
        let mut acc = 0.0;
        for (idx, coeff) in self.c.iter().enumerate() {
            if *coeff == 0.0 {
                continue;
            }
            let e = MONOMIAL_EXPONENTS[idx];
            acc += coeff * pow[0][e[0] as usize] * pow[1][e[1] as usize] * pow[2][e[2] as usize];
        }
        acc
    }

    pub fn gradient(&self, s: State3) -> [f64; 3] {
        let pow = powers(s);
        let mut g = [0.0; 3];
        for (idx, coeff) in self.c.iter().enumerate() {
            if *coeff == 0.0 {
                continue;
            }
            let e = MONOMIAL_EXPONENTS[idx];
            for (v, gv) in g.iter_mut().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut term = coeff * e[v] as f64;
                for w in 0..3 {
                    let p = if w == v { e[w] - 1 } else { e[w] };
                    term *= pow[w][p as usize];
                }
                *gv += term;
            }
        }
        g
    }
}

fn powers(s: State3) -> [[f64; 4]; 3] {
    let mut pow = [[1.0; 4]; 3];
    for (v, x) in [s.x, s.y, s.z].into_iter().enumerate() {
        for p in 1..4 {
            pow[v][p] = pow[v][p - 1] * x;
        }
    }
    pow
}

/// Evaluates three rows as a map step.
pub fn eval_rows(rows: &[PolyRow; 3], s: State3) -> State3 {
    State3::new(rows[0].eval(s), rows[1].eval(s), rows[2].eval(s))
}

/// Jacobian of three rows.
pub fn rows_jacobian(rows: &[PolyRow; 3], s: State3) -> Matrix3<f64> {
    let g0 = rows[0].gradient(s);
    let g1 = rows[1].gradient(s);
    let g2 = rows[2].gradient(s);
    Matrix3::new(
        g0[0], g0[1], g0[2], g1[0], g1[1], g1[2], g2[0], g2[1], g2[2],
    )
}
