//! Roots of real monic cubics. Multiplier triples near (+1, -1, -1) make the
//! characteristic cubic ill-conditioned for direct formulas, so roots come
//! from the companion-matrix Schur form and are then polished: simple roots by
//! Newton, near-double roots through the critical points of the cubic, where
//! a double root is exact.

use nalgebra::Matrix3;
use num_complex::Complex64;

const IM_ZERO: f64 = 1e-9;

fn eval(a2: f64, a1: f64, a0: f64, x: Complex64) -> Complex64 {
    ((x + a2) * x + a1) * x + a0
}

fn eval_real(a2: f64, a1: f64, a0: f64, x: f64) -> f64 {
    ((x + a2) * x + a1) * x + a0
}

fn newton_real(a2: f64, a1: f64, a0: f64, mut x: f64) -> f64 {
    let mut best = x;
    let mut best_res = eval_real(a2, a1, a0, x).abs();
    for _ in 0..4 {
        let d = (3.0 * x + 2.0 * a2) * x + a1;
        if d.abs() < 1e-300 {
            break;
        }
        x -= eval_real(a2, a1, a0, x) / d;
        let r = eval_real(a2, a1, a0, x).abs();
        if r < best_res {
            best_res = r;
            best = x;
        }
    }
    best
}

fn newton_complex(a2: f64, a1: f64, a0: f64, mut x: Complex64) -> Complex64 {
    let mut best = x;
    let mut best_res = eval(a2, a1, a0, x).norm();
    for _ in 0..4 {
        let d = (x * 3.0 + 2.0 * a2) * x + a1;
        if d.norm() < 1e-300 {
            break;
        }
        x -= eval(a2, a1, a0, x) / d;
        let r = eval(a2, a1, a0, x).norm();
        if r < best_res {
            best_res = r;
            best = x;
        }
    }
    best
}

/// Roots of x^3 + a2 x^2 + a1 x + a0. A real root is returned with zero
/// imaginary part; non-real roots are returned as an exact conjugate pair.
/// Near-multiple roots, which companion eigenvalues split into spurious
/// tiny-imaginary pairs, are pinned to the critical points of the cubic,
/// where a true multiple root sits exactly. Roots closer than about 1e-6
/// collapse onto that critical point; the returned residual stays at
/// rounding level either way. Ordering is by real part descending, then
/// imaginary part descending.
pub fn monic_cubic_roots(a2: f64, a1: f64, a0: f64) -> [Complex64; 3] {
    let companion = Matrix3::new(0.0, 0.0, -a0, 1.0, 0.0, -a1, 0.0, 1.0, -a2);
    let eig = companion.complex_eigenvalues();
    let mut r = [eig[0], eig[1], eig[2]];
    let scale = 1.0 + a2.abs().max(a1.abs()).max(a0.abs());

    // triple root: every eigenvalue clusters at the inflection point
    let c_inf = -a2 / 3.0;
    if eval_real(a2, a1, a0, c_inf).abs() <= 1e-8 * scale
        && r
            .iter()
            .all(|x| (x - c_inf).norm() < 2e-5 * (1.0 + c_inf.abs()))
    {
        return [Complex64::new(c_inf, 0.0); 3];
    }

    // double root: the two eigenvalues nearest a critical point where the
    // cubic vanishes to rounding level are that critical point
    let mut pinned = [false; 3];
    let disc = a2 * a2 - 3.0 * a1;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        for c in [(-a2 + sq) / 3.0, (-a2 - sq) / 3.0] {
            if eval_real(a2, a1, a0, c).abs() > 1e-9 * scale {
                continue;
            }
            let mut idx = [0usize, 1, 2];
            idx.sort_by(|&i, &j| {
                (r[i] - c)
                    .norm()
                    .partial_cmp(&(r[j] - c).norm())
                    .unwrap()
            });
            let window = 1e-6 * (1.0 + c.abs());
            if !pinned[idx[0]]
                && !pinned[idx[1]]
                && (r[idx[0]] - c).norm() < window
                && (r[idx[1]] - c).norm() < window
            {
                r[idx[0]] = Complex64::new(c, 0.0);
                r[idx[1]] = Complex64::new(c, 0.0);
                pinned[idx[0]] = true;
                pinned[idx[1]] = true;
            }
        }
    }

    let free: Vec<usize> = (0..3).filter(|&i| !pinned[i]).collect();
    match free.len() {
        1 => {
            // the remaining root of a real cubic is real
            let i = free[0];
            r[i] = Complex64::new(newton_real(a2, a1, a0, r[i].re), 0.0);
        }
        3 => {
            let mut by_im = [0usize, 1, 2];
            by_im.sort_by(|&i, &j| r[i].im.abs().partial_cmp(&r[j].im.abs()).unwrap());
            if r[by_im[2]].im.abs() <= IM_ZERO * scale {
                for i in 0..3 {
                    r[i] = Complex64::new(newton_real(a2, a1, a0, r[i].re), 0.0);
                }
            } else {
                let real = Complex64::new(newton_real(a2, a1, a0, r[by_im[0]].re), 0.0);
                let mut pair = 0.5 * (r[by_im[1]] + r[by_im[2]].conj());
                pair = newton_complex(a2, a1, a0, pair);
                if pair.im < 0.0 {
                    pair = pair.conj();
                }
                r = [real, pair, pair.conj()];
            }
        }
        _ => {}
    }

    r.sort_by(|u, v| {
        v.re.partial_cmp(&u.re)
            .unwrap()
            .then(v.im.partial_cmp(&u.im).unwrap())
    });
    r
}
