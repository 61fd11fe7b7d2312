//! Closed-form periodic orbits of the `(q, p)` system in Jacobi elliptic
//! functions, with classification, admissibility and scaling checks.

use crate::elliptic::{complete_k, jacobi};
use crate::error::{domain, Error, Result};
use crate::reduced::{amplitude_from_invariant, hamiltonian_qp, vector_field_qp, ReducedParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitClass {
    /// Sign-changing orbit above the separatrix (`ζ > 0`).
    Josephson,
    /// Orbit confined to one side of `q = 0` (`ζ > 0`).
    SelfTrapped,
    /// Sign-changing orbit around the origin (`ζ ≤ 0`).
    Beating,
    Separatrix,
    FixedPoint,
}

impl OrbitClass {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitClass::Josephson => "josephson",
            OrbitClass::SelfTrapped => "self-trapped",
            OrbitClass::Beating => "beating",
            OrbitClass::Separatrix => "separatrix",
            OrbitClass::FixedPoint => "fixed-point",
        }
    }
}

/// Relative distance from a class boundary treated as being on it.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Class of the orbit through `(q0, 0)`, `q0 ≥ 0`.
///
/// For `ζ > 0`, starting points inside the right well (`q0 < sqrt(ζ)`) are
/// self-trapped whether they are the outer or the inner turning point.
pub fn classify(q0: f64, zeta: f64) -> OrbitClass {
    let q2 = q0 * q0;
    let near = |x: f64, y: f64| (x - y).abs() <= BOUNDARY_TOL * y.abs();
    if zeta <= 0.0 {
        if q0 == 0.0 {
            OrbitClass::FixedPoint
        } else {
            OrbitClass::Beating
        }
    } else if near(q2, 0.5 * zeta) {
        OrbitClass::FixedPoint
    } else if near(q2, zeta) || q0 == 0.0 {
        OrbitClass::Separatrix
    } else if q2 > zeta {
        OrbitClass::Josephson
    } else {
        OrbitClass::SelfTrapped
    }
}

/// Class of the orbit through an arbitrary phase point, by energy.
pub fn classify_state(q: f64, p: f64, zeta: f64) -> OrbitClass {
    if p == 0.0 {
        return classify(q.abs(), zeta);
    }
    let h = hamiltonian_qp(q, p, zeta);
    let h_sep = zeta * zeta / 8.0;
    if zeta <= 0.0 {
        OrbitClass::Beating
    } else if h > h_sep {
        OrbitClass::Josephson
    } else if h < h_sep {
        OrbitClass::SelfTrapped
    } else {
        OrbitClass::Separatrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOrbit {
    /// Starting point `q(0)`; `p(0) = 0`.
    pub q0: f64,
    pub zeta: f64,
    pub k: f64,
    pub omega: f64,
    pub t_tau: f64,
    pub class: OrbitClass,
    /// `+1` or `-1`: side of a self-trapped orbit, `+1` otherwise.
    pub sign: f64,
    /// Outer turning amplitude used in the closed form.
    pub amplitude: f64,
    /// Time shift so that `q(0) = q0`.
    pub phase: f64,
}

/// Builds the closed-form orbit through `(q0, 0)`. Negative `q0` selects the
/// mirrored orbit.
pub fn build(q0: f64, zeta: f64) -> Result<ExactOrbit> {
    if !q0.is_finite() || !zeta.is_finite() {
        return Err(domain("non-finite orbit data"));
    }
    let class = classify(q0.abs(), zeta);
    let a0 = q0.abs();
    let (amplitude, k2, omega, half) = match class {
        OrbitClass::Josephson | OrbitClass::Beating => {
            let w2 = 2.0 * a0 * a0 - zeta;
            let k2 = (1.0 + zeta - a0 * a0) * a0 * a0 / w2;
            (a0, k2, w2.sqrt(), 2.0)
        }
        OrbitClass::SelfTrapped => {
            let a = if a0 * a0 < 0.5 * zeta { (zeta - a0 * a0).sqrt() } else { a0 };
            let g = a * a * (1.0 + zeta - a * a);
            ((a), (2.0 * a * a - zeta) / g, g.sqrt(), 1.0)
        }
        c => return Err(Error::NonPeriodic(format!("{} at q0 = {q0}, zeta = {zeta}", c.name()))),
    };
    let k2 = if k2 < 0.0 && k2 > -1e-14 { 0.0 } else { k2 };
    if !(0.0..1.0).contains(&k2) || !omega.is_finite() || omega <= 0.0 {
        return Err(Error::InternalConsistency(format!(
            "k^2 = {k2} outside [0, 1) for q0 = {q0}, zeta = {zeta}"
        )));
    }
    let k = k2.sqrt();
    let t_tau = 2.0 * half * complete_k(k)? / omega;
    let (sign, phase) = match class {
        OrbitClass::SelfTrapped => {
            let inner = a0 < amplitude;
            (q0.signum(), if inner { 0.5 * t_tau } else { 0.0 })
        }
        _ => (1.0, if q0 < 0.0 { 0.5 * t_tau } else { 0.0 }),
    };
    Ok(ExactOrbit { q0, zeta, k, omega, t_tau, class, sign, amplitude, phase })
}

impl ExactOrbit {
    /// Period in the physical time `t = τ / Ω₁₀`.
    pub fn period_t(&self, omega10: f64) -> f64 {
        self.t_tau / omega10
    }

    /// `(q, dq/dτ)` at rescaled time `τ`.
    pub fn position_rate(&self, tau: f64) -> (f64, f64) {
        let a = self.amplitude;
        let u = self.omega * (tau + self.phase);
        let (sn, cn, dn) = jacobi(u, self.k).expect("modulus validated at build");
        let opa = 1.0 + a * a;
        match self.class {
            OrbitClass::SelfTrapped => {
                let k2 = self.k * self.k;
                let d = 1.0 + a * a * k2 * sn * sn;
                let q = self.sign * a * dn / d.sqrt();
                let dq = -self.sign * a * k2 * sn * cn * opa / (d * d.sqrt());
                (q, self.omega * dq)
            }
            _ => {
                let d = 1.0 + a * a * sn * sn;
                let q = a * cn / d.sqrt();
                let dq = -a * sn * dn * opa / (d * d.sqrt());
                (q, self.omega * dq)
            }
        }
    }
}

/// `(q, p)` on the orbit at rescaled time `τ`.
pub fn eval(orb: &ExactOrbit, tau: f64) -> (f64, f64) {
    let (q, dq) = orb.position_rate(tau);
    (q, dq / (1.0 + q * q))
}

/// `(q, p, q', p')` with `'` the τ-derivative.
pub fn eval_with_rates(orb: &ExactOrbit, tau: f64) -> [f64; 4] {
    let (q, p) = eval(orb, tau);
    let (dq, dp) = vector_field_qp(q, p, orb.zeta);
    [q, p, dq, dp]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub q0_min: f64,
    pub q0_max: f64,
    /// True when the lower end is `0⁺` rather than attained.
    pub lower_open: bool,
    /// Largest modulus found across the window.
    pub k_max: f64,
}

pub const K_BOUND: f64 = 7.0 / 8.0;

/// Initial amplitudes for which the orbit's modulus stays below `7/8`:
/// `q0 ≥ sqrt(3ζ/2)` for `ζ > 0`, any `q0 > 0` for `ζ ≤ 0`. The upper end is
/// capped at `sqrt(1 + ζ)` where the modulus reaches zero.
pub fn admissible_window(p: &ReducedParams, q0_max: f64) -> Result<Window> {
    let zeta = p.zeta;
    let (q0_min, lower_open) = if zeta > 0.0 { ((1.5 * zeta).sqrt(), false) } else { (0.0, true) };
    let cap = if 1.0 + zeta > 0.0 { (1.0 + zeta).sqrt() } else { 0.0 };
    let hi = q0_max.min(cap);
    if !(hi > q0_min) {
        return Err(Error::Window(format!("q0 range [{q0_min}, {hi}] empty at zeta = {zeta}")));
    }
    let samples = 257;
    let mut k_max: f64 = 0.0;
    for i in 0..samples {
        let s = i as f64 / (samples - 1) as f64;
        let q0 = if lower_open && i == 0 { 1e-6 * hi } else { q0_min + s * (hi - q0_min) };
        let orb = build(q0, zeta).map_err(|e| Error::Window(format!("q0 = {q0}: {e}")))?;
        k_max = k_max.max(orb.k);
    }
    if k_max > K_BOUND + 1e-12 {
        return Err(Error::Window(format!("modulus {k_max} exceeds 7/8 inside the window")));
    }
    Ok(Window { q0_min, q0_max: hi, lower_open, k_max })
}

/// Physical state `(α, β, A)` on the orbit at time `t`.
pub fn chi(orb: &ExactOrbit, p: &ReducedParams, t: f64) -> Result<[f64; 3]> {
    let c = (0.5 * p.omega10).sqrt();
    let (q, pp) = eval(orb, p.omega10 * t);
    let (alpha, beta) = (c * q, c * pp);
    Ok([alpha, beta, amplitude_from_invariant(alpha, beta, p.n)?])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeReport {
    pub max_abs_alpha: f64,
    pub max_abs_beta: f64,
    pub min_a: f64,
    pub max_a: f64,
    /// `max(α² + β²) / |σ|`.
    pub mode_ratio: f64,
    /// `max A² / N`.
    pub condensate_fraction: f64,
}

/// Extremes of `|α|`, `|β|` and `A` over one period, by dense sampling and
/// golden-section refinement.
pub fn amplitude_report(orb: &ExactOrbit, p: &ReducedParams) -> Result<AmplitudeReport> {
    let samples = 2048;
    let period = orb.period_t(p.omega10);
    let f = |t: f64| chi(orb, p, t);
    let mut vals = Vec::with_capacity(samples);
    for i in 0..samples {
        vals.push(f(period * i as f64 / samples as f64)?);
    }
    let dt = period / samples as f64;
    let refine = |comp: usize, sgn: f64, abs: bool| -> Result<f64> {
        let g = |v: &[f64; 3]| {
            let x = if abs { v[comp].abs() } else { v[comp] };
            sgn * x
        };
        let (imax, _) = vals
            .iter()
            .enumerate()
            .map(|(i, v)| (i, g(v)))
            .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
        let t0 = imax as f64 * dt;
        let (mut a, mut b) = (t0 - dt, t0 + dt);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut best = g(&vals[imax]);
        for _ in 0..80 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            let (gc, gd) = (g(&f(c)?), g(&f(d)?));
            if gc > gd {
                b = d;
            } else {
                a = c;
            }
            best = best.max(gc).max(gd);
        }
        Ok(sgn * best)
    };
    let max_abs_alpha = refine(0, 1.0, true)?;
    let max_abs_beta = refine(1, 1.0, true)?;
    let max_a = refine(2, 1.0, false)?;
    let min_a = refine(2, -1.0, false)?;
    let max_mode = vals.iter().map(|v| v[0] * v[0] + v[1] * v[1]).fold(0.0, f64::max);
    Ok(AmplitudeReport {
        max_abs_alpha,
        max_abs_beta,
        min_a,
        max_a,
        mode_ratio: max_mode / p.sigma.abs(),
        condensate_fraction: max_a * max_a / p.n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodCheck {
    pub period_t: f64,
    /// `T_t / |σ|^{-(1+γ)/2}`.
    pub ratio: f64,
    pub bound: f64,
    pub violated: bool,
}

pub fn period_scaling_check(p: &ReducedParams, orb: &ExactOrbit, bound: f64) -> PeriodCheck {
    let period_t = orb.period_t(p.omega10);
    let ratio = period_t / p.sigma.abs().powf(-0.5 * (1.0 + p.gamma));
    PeriodCheck { period_t, ratio, bound, violated: ratio > bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::return_time_qp;
    use std::f64::consts::PI;

    #[test]
    fn classification() {
        assert_eq!(classify(0.8, 0.2), OrbitClass::Josephson);
        assert_eq!(classify(0.4, 0.2), OrbitClass::SelfTrapped);
        assert_eq!(classify(0.2, 0.2), OrbitClass::SelfTrapped);
        assert_eq!(classify(0.1f64.sqrt(), 0.2), OrbitClass::FixedPoint);
        assert_eq!(classify(0.2f64.sqrt(), 0.2), OrbitClass::Separatrix);
        assert_eq!(classify(0.5, -0.3), OrbitClass::Beating);
        assert_eq!(classify(0.5, 0.0), OrbitClass::Beating);
    }

    // Return times measured by direct integration of the (q, p) flow
    // with an independent adaptive integrator.
    #[test]
    fn periods_match_return_times() {
        for (q0, zeta, t) in [(0.8, 0.2, 6.67033), (0.5, -0.3, 7.29346), (0.55, 0.4, 6.83427)] {
            let orb = build(q0, zeta).unwrap();
            assert!((orb.t_tau - t).abs() < 1e-5, "{q0} {zeta} {}", orb.t_tau);
            let ret = return_time_qp(q0, zeta, 1e-13, 100.0).unwrap();
            assert!((orb.t_tau - ret).abs() < 1e-9 * ret);
        }
        // Starts where p rises through zero: inner self-trapped and mirrored.
        for (q0, zeta) in [(0.1, 0.2), (-0.8, 0.2), (-0.4, 0.2), (-0.5, -0.3)] {
            let orb = build(q0, zeta).unwrap();
            let ret = return_time_qp(q0, zeta, 1e-13, 100.0).unwrap();
            assert!((orb.t_tau - ret).abs() < 1e-9 * ret, "{q0} {zeta}: {} vs {ret}", orb.t_tau);
        }
    }

    #[test]
    fn unit_amplitude_critical_orbit() {
        // k = 0 and ω = sqrt(2): the return time is sqrt(2) π.
        let orb = build(1.0, 0.0).unwrap();
        assert_eq!(orb.k, 0.0);
        assert!((orb.t_tau - 2f64.sqrt() * PI).abs() < 1e-14);
    }

    #[test]
    fn closed_form_solves_hamilton_equations() {
        let h = 1e-5;
        for (q0, zeta) in [(0.8, 0.2), (0.5, -0.3), (0.55, 0.4), (-0.55, 0.4), (0.2, 0.4), (-0.9, 0.1)] {
            let orb = build(q0, zeta).unwrap();
            let (q, p) = eval(&orb, 0.0);
            assert!((q - q0).abs() < 1e-14 && p.abs() < 1e-14, "start {q0} {zeta}: {q} {p}");
            for i in 0..50 {
                let tau = orb.t_tau * i as f64 / 37.0;
                let (qp, pp) = eval(&orb, tau + h);
                let (qm, pm) = eval(&orb, tau - h);
                let (q, p) = eval(&orb, tau);
                let (fq, fp) = vector_field_qp(q, p, zeta);
                assert!(((qp - qm) / (2.0 * h) - fq).abs() < 1e-8);
                assert!(((pp - pm) / (2.0 * h) - fp).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn self_trapped_stays_on_its_side() {
        for q0 in [0.2, 0.35, 0.55] {
            for sgn in [1.0, -1.0] {
                let orb = build(sgn * q0, 0.4).unwrap();
                for i in 0..200 {
                    let (q, _) = eval(&orb, orb.t_tau * i as f64 / 200.0);
                    assert!(q * sgn > 0.0);
                }
            }
        }
    }

    #[test]
    fn window_bounds() {
        let p = ReducedParams::from_zeta(1.0, 0.2).unwrap();
        let w = admissible_window(&p, 1.0).unwrap();
        assert!((w.q0_min - 0.3f64.sqrt()).abs() < 1e-15);
        assert!(w.k_max <= K_BOUND);
        let sub = ReducedParams::from_zeta(1.0, -0.5).unwrap();
        assert!(admissible_window(&sub, 1.0).unwrap().lower_open);
        let big = ReducedParams::from_zeta(1.0, 0.8).unwrap();
        assert!(matches!(admissible_window(&big, 1.0), Err(Error::Window(_))));
        assert!(matches!(admissible_window(&sub, 0.0), Err(Error::Window(_))));
    }

    #[test]
    fn separatrix_is_not_periodic() {
        assert!(matches!(build(0.2f64.sqrt(), 0.2), Err(Error::NonPeriodic(_))));
        assert!(matches!(build(0.0, -0.1), Err(Error::NonPeriodic(_))));
    }

    #[test]
    fn modulus_out_of_range_is_reported() {
        assert!(matches!(build(1.2, 0.0), Err(Error::InternalConsistency(_))));
    }
}
