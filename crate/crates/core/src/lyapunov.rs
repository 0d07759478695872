//! Orbit statistics, Lyapunov spectra by tangent-frame reorthonormalization,
//! and attractor classification with a volume-expansion proxy for
//! Lorenz-like chaos.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{is_escaped, Map3, State3, DIVERGENCE_RADIUS};

/// Point samples and bounds of a finite orbit segment.
#[derive(Debug, Clone)]
pub struct OrbitStats {
    pub points: Vec<State3>,
    pub escaped: Option<usize>,
    pub bound: f64,
}

/// Lyapunov exponents in nats per iteration, sorted descending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    pub exponents: [f64; 3],
    pub iterations_used: usize,
    pub transient_discarded: usize,
}

impl LyapunovSpectrum {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

/// Budgets and tolerances for [`classify_attractor`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub transient: usize,
    pub iterations: usize,
    pub tol: f64,
    pub recurrence_eps: f64,
    pub max_period: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            transient: 10_000,
            iterations: 1_000_000,
            tol: 1e-3,
            recurrence_eps: 1e-9,
            max_period: 64,
        }
    }
}

/// Outcome kinds. `FixedPoint` means the orbit sits at a stationary point
/// that is not attracting; a stable fixed point reports `PeriodicSink(1)`.
/// `DiscreteLorenzCandidate` is the Lyapunov proxy for Lorenz-like chaos:
/// a bounded orbit with Lambda1 > 0, Lambda1+Lambda2 > 0 and total
/// contraction, each beyond the configured tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttractorKind {
    Escaped,
    FixedPoint,
    PeriodicSink(usize),
    DiscreteLorenzCandidate,
    OtherChaotic,
    Undetermined,
}

impl AttractorKind {
    pub fn period(&self) -> Option<usize> {
        match self {
            AttractorKind::PeriodicSink(p) => Some(*p),
            _ => None,
        }
    }

    /// Label without the period payload; groups all sinks together.
    pub fn label(&self) -> &'static str {
        match self {
            AttractorKind::Escaped => "escaped",
            AttractorKind::FixedPoint => "fixed-point",
            AttractorKind::PeriodicSink(_) => "periodic-sink",
            AttractorKind::DiscreteLorenzCandidate => "discrete-lorenz-candidate",
            AttractorKind::OtherChaotic => "other-chaotic",
            AttractorKind::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for AttractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classification of one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorClass {
    pub kind: AttractorKind,
    pub spectrum: Option<LyapunovSpectrum>,
    pub orbit_bound: f64,
}

/// Iterates the map `transient + n` times and reports statistics of the
/// post-transient segment: the max Euclidean norm and up to `max_samples`
/// evenly strided points. Escape (leaving the divergence ball or producing
/// non-finite coordinates) at any step, transient included, is recorded with
/// its step index. `n = 0` returns empty statistics without iterating.
pub fn orbit<M: Map3>(
    map: &M,
    s0: State3,
    n: usize,
    transient: usize,
    max_samples: usize,
) -> OrbitStats {
    let mut stats = OrbitStats {
        points: Vec::new(),
        escaped: None,
        bound: 0.0,
    };
    if n == 0 {
        return stats;
    }
    let stride = (n / max_samples.max(1)).max(1);
    let mut s = s0;
    for i in 0..transient {
        if is_escaped(&s) {
            stats.escaped = Some(i);
            return stats;
        }
        s = map.step(s);
    }
    for i in 0..n {
        if is_escaped(&s) {
            stats.escaped = Some(transient + i);
            return stats;
        }
        stats.bound = stats.bound.max(s.norm());
        if i % stride == 0 {
            stats.points.push(s);
        }
        s = map.step(s);
    }
    stats
}

fn orthonormalize(v: Matrix3<f64>) -> (Matrix3<f64>, [f64; 3]) {
    let mut q = v;
    let mut log_norms = [0.0; 3];
    for i in 0..3 {
        let mut col = q.column(i).into_owned();
        for j in 0..i {
            let qj = q.column(j).into_owned();
            col -= qj * qj.dot(&col);
        }
        let norm = col.norm();
        log_norms[i] = norm.max(f64::MIN_POSITIVE).ln();
        if norm > 1e-300 {
            col /= norm;
        } else {
            col = unit_fallback(&q, i);
        }
        q.set_column(i, &col);
    }
    (q, log_norms)
}

fn unit_fallback(q: &Matrix3<f64>, i: usize) -> Vector3<f64> {
    for k in 0..3 {
        let mut c = Vector3::zeros();
        c[k] = 1.0;
        for j in 0..i {
            let qj = q.column(j).into_owned();
            c -= qj * qj.dot(&c);
        }
        let norm = c.norm();
        if norm > 0.5 {
            return c / norm;
        }
    }
    Vector3::x()
}

/// Lyapunov spectrum of the orbit of `s0`, with the tangent frame
/// reorthonormalized every iteration. Errors if the orbit escapes.
pub fn lyapunov_spectrum<M: Map3>(
    map: &M,
    s0: State3,
    transient: usize,
    n: usize,
) -> Result<LyapunovSpectrum> {
    let mut s = s0;
    for step in 0..transient {
        if is_escaped(&s) {
            return Err(Error::Escaped {
                step,
                radius: DIVERGENCE_RADIUS,
            });
        }
        s = map.step(s);
    }
    let mut q = Matrix3::<f64>::identity();
    let mut sums = [0.0f64; 3];
    for step in 0..n {
        if is_escaped(&s) {
            return Err(Error::Escaped {
                step: transient + step,
                radius: DIVERGENCE_RADIUS,
            });
        }
        let (next_q, log_norms) = orthonormalize(map.jacobian(s) * q);
        q = next_q;
        for i in 0..3 {
            sums[i] += log_norms[i];
        }
        s = map.step(s);
    }
    let inv = 1.0 / n.max(1) as f64;
    let mut exponents = [sums[0] * inv, sums[1] * inv, sums[2] * inv];
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(LyapunovSpectrum {
        exponents,
        iterations_used: n,
        transient_discarded: transient,
    })
}

fn cycle_spectrum<M: Map3>(
    map: &M,
    start: State3,
    period: usize,
    transient: usize,
) -> LyapunovSpectrum {
    let mut j = Matrix3::<f64>::identity();
    let mut s = start;
    for _ in 0..period {
        j = map.jacobian(s) * j;
        s = map.step(s);
    }
    let eig = j.complex_eigenvalues();
    let mut exponents = [0.0f64; 3];
    for i in 0..3 {
        exponents[i] = eig[i].norm().max(f64::MIN_POSITIVE).ln() / period as f64;
    }
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    LyapunovSpectrum {
        exponents,
        iterations_used: period,
        transient_discarded: transient,
    }
}

fn scan_recurrence<M: Map3>(map: &M, from: State3, config: &ClassifyConfig) -> Option<usize> {
    let mut t = from;
    for p in 1..=config.max_period {
        if is_escaped(&t) {
            return None;
        }
        t = map.step(t);
        if (t - from).amax() <= config.recurrence_eps {
            return Some(p);
        }
    }
    None
}

fn periodic_class<M: Map3>(
    map: &M,
    start: State3,
    period: usize,
    config: &ClassifyConfig,
    bound: f64,
) -> AttractorClass {
    let spectrum = cycle_spectrum(map, start, period, config.transient);
    let kind = if spectrum.exponents[0] < -config.tol {
        AttractorKind::PeriodicSink(period)
    } else if period == 1 {
        AttractorKind::FixedPoint
    } else {
        AttractorKind::Undetermined
    };
    AttractorClass {
        kind,
        spectrum: Some(spectrum),
        orbit_bound: bound.max(start.norm()),
    }
}

/// Classifies the attractor reached from `s0`.
///
/// Pipeline: transient iteration with escape checks; recurrence scan for a
/// cycle of period up to `max_period` (cycle multipliers then give exact
/// exponents); otherwise a full reorthonormalized spectrum, with a second
/// recurrence scan when the spectrum comes out wholly contracting, since
/// convergence to a sink may be too slow for the first scan. Orbits that
/// contract but close no short cycle stay `Undetermined`.
pub fn classify_attractor<M: Map3>(map: &M, s0: State3, config: &ClassifyConfig) -> AttractorClass {
    let escaped = |bound: f64| AttractorClass {
        kind: AttractorKind::Escaped,
        spectrum: None,
        orbit_bound: bound,
    };

    let mut s = s0;
    let mut bound = 0.0f64;
    for _ in 0..config.transient {
        if is_escaped(&s) {
            return escaped(bound);
        }
        bound = bound.max(s.norm());
        s = map.step(s);
    }
    if is_escaped(&s) {
        return escaped(bound);
    }

    bound = s.norm();
    if let Some(p) = scan_recurrence(map, s, config) {
        return periodic_class(map, s, p, config, bound);
    }

    let mut q = Matrix3::<f64>::identity();
    let mut sums = [0.0f64; 3];
    for _ in 0..config.iterations {
        if is_escaped(&s) {
            return escaped(bound);
        }
        bound = bound.max(s.norm());
        let (next_q, log_norms) = orthonormalize(map.jacobian(s) * q);
        q = next_q;
        for i in 0..3 {
            sums[i] += log_norms[i];
        }
        s = map.step(s);
    }
    let inv = 1.0 / config.iterations.max(1) as f64;
    let mut exponents = [sums[0] * inv, sums[1] * inv, sums[2] * inv];
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let spectrum = LyapunovSpectrum {
        exponents,
        iterations_used: config.iterations,
        transient_discarded: config.transient,
    };

    if exponents[0] < -config.tol {
        if !is_escaped(&s) {
            if let Some(p) = scan_recurrence(map, s, config) {
                return periodic_class(map, s, p, config, bound);
            }
        }
        return AttractorClass {
            kind: AttractorKind::Undetermined,
            spectrum: Some(spectrum),
            orbit_bound: bound,
        };
    }

    let l1 = exponents[0];
    let l12 = exponents[0] + exponents[1];
    let total = l12 + exponents[2];
    let kind = if l1 > config.tol && l12 > config.tol && total < -config.tol {
        AttractorKind::DiscreteLorenzCandidate
    } else if l1 > config.tol && l12 <= config.tol {
        AttractorKind::OtherChaotic
    } else {
        AttractorKind::Undetermined
    };
    AttractorClass {
        kind,
        spectrum: Some(spectrum),
        orbit_bound: bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::henon::{fixed_points, Henon3d, HenonParams};

    const TOL: f64 = 1e-3;

    struct Diagonal([f64; 3]);

    impl Map3 for Diagonal {
        fn step(&self, s: State3) -> State3 {
            State3::new(self.0[0] * s.x, self.0[1] * s.y, self.0[2] * s.z)
        }
        fn jacobian(&self, _s: State3) -> Matrix3<f64> {
            Matrix3::from_diagonal(&Vector3::new(self.0[0], self.0[1], self.0[2]))
        }
    }

    fn henon(m1: f64, m2: f64, b: f64) -> Henon3d {
        Henon3d {
            params: HenonParams { m1, m2, b },
        }
    }

    #[test]
    fn orbit_at_a_fixed_point_reports_its_norm() {
        let map = henon(-0.25, 1.0, 1.0);
        let s = State3::new(0.5, 0.5, 0.5);
        let stats = orbit(&map, s, 100, 10, 100);
        assert!(stats.escaped.is_none());
        assert!((stats.bound - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn orbit_escape_is_detected() {
        let map = henon(100.0, 0.0, 0.0);
        let stats = orbit(&map, State3::zeros(), 50, 0, 50);
        let step = stats.escaped.expect("orbit should escape");
        assert!(step < 50);
    }

    #[test]
    fn orbit_of_length_zero_is_empty() {
        let map = henon(0.1, 0.1, 0.5);
        let stats = orbit(&map, State3::zeros(), 0, 100, 10);
        assert!(stats.points.is_empty());
        assert!(stats.escaped.is_none());
        assert_eq!(stats.bound, 0.0);
    }

    #[test]
    fn orbit_sampling_is_strided() {
        let map = henon(0.0, 0.0, 0.5);
        let stats = orbit(&map, State3::new(0.1, 0.1, 0.1), 1000, 0, 100);
        assert!(stats.points.len() <= 100);
        assert!(stats.points.len() >= 90);
    }

    #[test]
    fn diagonal_linear_map_has_log_moduli_exponents() {
        let map = Diagonal([0.5, 0.4, 5.0]);
        let spec = lyapunov_spectrum(&map, State3::zeros(), 100, 5000).unwrap();
        assert!((spec.exponents[0] - 5.0f64.ln()).abs() < 1e-12);
        assert!((spec.exponents[1] - 0.5f64.ln()).abs() < 1e-12);
        assert!((spec.exponents[2] - 0.4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sink_exponents_match_multipliers() {
        let p = HenonParams {
            m1: 0.0,
            m2: 0.0,
            b: 0.5,
        };
        let fps = fixed_points(&p);
        let sink = fps
            .iter()
            .find(|fp| fp.multipliers.iter().all(|m| m.norm() < 1.0))
            .expect("one fixed point should attract");
        let moduli_log: Vec<f64> = sink.multipliers.iter().map(|m| m.norm().ln()).collect();
        let map = Henon3d { params: p };
        let spec = lyapunov_spectrum(&map, State3::new(0.1, 0.1, 0.1), 10_000, 50_000).unwrap();
        for i in 0..3 {
            assert!(
                (spec.exponents[i] - moduli_log[i]).abs() < TOL,
                "exponent {i}: {} vs {}",
                spec.exponents[i],
                moduli_log[i]
            );
        }
    }

    #[test]
    fn exponent_sum_equals_log_det() {
        let map = henon(0.0, 0.85, 0.7);
        let spec = lyapunov_spectrum(&map, State3::new(0.1, 0.1, 0.1), 10_000, 100_000).unwrap();
        assert!(
            (spec.sum() - 0.7f64.ln()).abs() <= 1e-4,
            "sum law violated: {} vs {}",
            spec.sum(),
            0.7f64.ln()
        );
        assert!(spec.exponents[0] >= spec.exponents[1]);
        assert!(spec.exponents[1] >= spec.exponents[2]);
    }

    #[test]
    fn spectrum_errors_on_escape() {
        let map = henon(100.0, 0.0, 0.0);
        assert!(matches!(
            lyapunov_spectrum(&map, State3::zeros(), 100, 100),
            Err(Error::Escaped { .. })
        ));
    }

    #[test]
    fn stable_fixed_point_classifies_as_period_one_sink() {
        let map = henon(0.0, 0.0, 0.5);
        let config = ClassifyConfig {
            iterations: 20_000,
            ..ClassifyConfig::default()
        };
        let class = classify_attractor(&map, State3::new(0.1, 0.1, 0.1), &config);
        assert_eq!(class.kind, AttractorKind::PeriodicSink(1));
        let spec = class.spectrum.unwrap();
        assert!(spec.exponents[0] < -config.tol);
    }

    #[test]
    fn period_two_sink_is_found() {
        let map = henon(1.0, 0.0, 0.1);
        let class = classify_attractor(&map, State3::zeros(), &ClassifyConfig::default());
        assert_eq!(class.kind, AttractorKind::PeriodicSink(2));
    }

    #[test]
    fn escape_classifies_without_spectrum() {
        let map = henon(100.0, 0.0, 0.0);
        let class = classify_attractor(&map, State3::zeros(), &ClassifyConfig::default());
        assert_eq!(class.kind, AttractorKind::Escaped);
        assert!(class.spectrum.is_none());
    }

    #[test]
    fn lorenz_like_parameters_classify_as_candidate() {
        let map = henon(0.0, 0.85, 0.7);
        let config = ClassifyConfig {
            iterations: 200_000,
            ..ClassifyConfig::default()
        };
        let class = classify_attractor(&map, State3::new(0.1, 0.1, 0.1), &config);
        assert_eq!(class.kind, AttractorKind::DiscreteLorenzCandidate);
        let spec = class.spectrum.unwrap();
        assert!(spec.exponents[0] > config.tol);
        assert!(spec.exponents[0] + spec.exponents[1] > config.tol);
        assert!(spec.sum() < -config.tol);
        assert!(class.orbit_bound <= 10.0);
    }

    #[test]
    fn perturbed_degenerate_point_classifies_without_panic() {
        let map = henon(-0.25 + 0.05, 1.0, 1.0);
        let config = ClassifyConfig {
            iterations: 50_000,
            ..ClassifyConfig::default()
        };
        let _ = classify_attractor(&map, State3::new(0.5, 0.5, 0.5), &config);
    }
}
