//! Reduced ODE for the two-mode amplitudes `(α, β, A, ϑ)` and its
//! Hamiltonian structure, plus the `(q, p)` rescaling.

use crate::error::{domain, Error, Result};
use crate::integrate::Rkf78;

/// Parameters of the reduced model.
///
/// `sigma = Ω₁₀ - 2N`, `zeta = -sigma / Ω₁₀` and `n_cr = Ω₁₀ / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub omega10: f64,
    pub n: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub n_cr: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    Supercritical,
}

pub const DEFAULT_GAMMA: f64 = 0.8;

impl ReducedParams {
    pub fn new(omega10: f64, n: f64) -> Result<Self> {
        if !(omega10 > 0.0 && omega10.is_finite()) {
            return Err(domain(format!("Omega10 must be positive, got {omega10}")));
        }
        if !(n >= 0.0 && n.is_finite()) {
            return Err(domain(format!("N must be non-negative, got {n}")));
        }
        let sigma = omega10 - 2.0 * n;
        Ok(ReducedParams {
            omega10,
            n,
            sigma,
            zeta: -sigma / omega10,
            n_cr: 0.5 * omega10,
            gamma: DEFAULT_GAMMA,
        })
    }

    /// Parameters with `N = Ω₁₀ (1 + ζ) / 2`.
    pub fn from_zeta(omega10: f64, zeta: f64) -> Result<Self> {
        let mut p = Self::new(omega10, 0.5 * omega10 * (1.0 + zeta))?;
        p.zeta = zeta;
        Ok(p)
    }

    /// The scaling family `N_cr = σ^γ`, `N = N_cr ± σ/2`, which gives
    /// `ζ = ±σ^{1-γ}/2`.
    pub fn from_scaling(sigma: f64, gamma: f64, regime: Regime) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(domain(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        if !(gamma > 7.0 / 9.0 && gamma < 1.0) {
            return Err(domain(format!("gamma must lie in (7/9, 1), got {gamma}")));
        }
        let n_cr = sigma.powf(gamma);
        let n = match regime {
            Regime::Supercritical => n_cr + 0.5 * sigma,
            Regime::Subcritical => n_cr - 0.5 * sigma,
        };
        Self::new(2.0 * n_cr, n).map(|p| p.with_gamma(gamma))
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn regime(&self) -> Regime {
        if self.n > self.n_cr {
            Regime::Supercritical
        } else {
            Regime::Subcritical
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateAba {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateQp {
    pub q: f64,
    pub p: f64,
    pub tau: f64,
}

/// Right-hand side of the full reduced system. `detuning` is `ω - Ω₀`.
pub fn vector_field(s: &StateAba, omega10: f64, detuning: f64) -> StateAba {
    let (a2, b2, aa2) = (s.alpha * s.alpha, s.beta * s.beta, s.a * s.a);
    StateAba {
        alpha: (omega10 + 2.0 * a2) * s.beta,
        beta: -(omega10 + 2.0 * a2 - 2.0 * aa2) * s.alpha,
        a: -2.0 * s.alpha * s.beta * s.a,
        theta: detuning + aa2 + 3.0 * a2 + b2,
    }
}

/// Planar field for `(α, β)` with `A²` eliminated through `N`.
pub fn vector_field_planar(alpha: f64, beta: f64, p: &ReducedParams) -> (f64, f64) {
    let a2 = alpha * alpha;
    let b2 = beta * beta;
    (
        (p.omega10 + 2.0 * a2) * beta,
        -(p.sigma + 4.0 * a2 + 2.0 * b2) * alpha,
    )
}

pub fn invariant_n(s: &StateAba) -> f64 {
    s.a * s.a + s.alpha * s.alpha + s.beta * s.beta
}

/// `H_DW = (Ω₁₀/2) β² + (σ/2) α² + α⁴ + α² β²`.
pub fn hamiltonian_dw(alpha: f64, beta: f64, p: &ReducedParams) -> f64 {
    let a2 = alpha * alpha;
    let b2 = beta * beta;
    0.5 * p.omega10 * b2 + 0.5 * p.sigma * a2 + a2 * a2 + a2 * b2
}

/// The same energy written on the three-dimensional state with the
/// instantaneous `N = A² + α² + β²`; conserved by [`vector_field`].
pub fn hamiltonian_3d(s: &StateAba, omega10: f64) -> f64 {
    let a2 = s.alpha * s.alpha;
    let b2 = s.beta * s.beta;
    let sigma = omega10 - 2.0 * invariant_n(s);
    0.5 * omega10 * b2 + 0.5 * sigma * a2 + a2 * a2 + a2 * b2
}

/// `H_qp = ½ (1 + q²) p² + ½ (q² - ζ/2)²`.
pub fn hamiltonian_qp(q: f64, p: f64, zeta: f64) -> f64 {
    let u = q * q - 0.5 * zeta;
    0.5 * (1.0 + q * q) * p * p + 0.5 * u * u
}

/// Hamilton's equations for `H_qp` in the rescaled time `τ = Ω₁₀ t`.
pub fn vector_field_qp(q: f64, p: f64, zeta: f64) -> (f64, f64) {
    ((1.0 + q * q) * p, -q * p * p - 2.0 * q * (q * q - 0.5 * zeta))
}

/// `α = sqrt(Ω₁₀/2) q`, `β = sqrt(Ω₁₀/2) p`, `τ = Ω₁₀ t`; `A` from `N`.
pub fn rescale(s: &StateAba, t: f64, p: &ReducedParams) -> StateQp {
    let c = (0.5 * p.omega10).sqrt();
    StateQp { q: s.alpha / c, p: s.beta / c, tau: p.omega10 * t }
}

pub fn unrescale(s: &StateQp, p: &ReducedParams) -> Result<(StateAba, f64)> {
    let c = (0.5 * p.omega10).sqrt();
    let (alpha, beta) = (c * s.q, c * s.p);
    let a = amplitude_from_invariant(alpha, beta, p.n)?;
    Ok((StateAba { alpha, beta, a, theta: 0.0 }, s.tau / p.omega10))
}

/// `A = sqrt(N - α² - β²)`, clamping round-off negatives down to `-1e-13`.
pub fn amplitude_from_invariant(alpha: f64, beta: f64, n: f64) -> Result<f64> {
    let a2 = n - alpha * alpha - beta * beta;
    if a2 < -1e-13 {
        return Err(Error::Amplitude(format!("N - alpha^2 - beta^2 = {a2:e} < 0")));
    }
    Ok(a2.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Center,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub q: f64,
    pub p: f64,
    pub kind: FixedPointKind,
}

/// Equilibria of the `(q, p)` system on `p = 0`, tagged by the sign of
/// `λ² = (1 + q²)(ζ - 6q²)`.
pub fn fixed_points(p: &ReducedParams) -> Vec<FixedPoint> {
    let zeta = p.zeta;
    let kind = |q: f64| {
        let l2 = (1.0 + q * q) * (zeta - 6.0 * q * q);
        if l2 > 0.0 {
            FixedPointKind::Saddle
        } else if l2 < 0.0 {
            FixedPointKind::Center
        } else {
            FixedPointKind::Degenerate
        }
    };
    let mut out = vec![FixedPoint { q: 0.0, p: 0.0, kind: kind(0.0) }];
    if zeta > 0.0 {
        let q = (0.5 * zeta).sqrt();
        out.insert(0, FixedPoint { q: -q, p: 0.0, kind: kind(q) });
        out.push(FixedPoint { q, p: 0.0, kind: kind(q) });
    }
    out
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<StateAba>,
    pub max_drift_n: f64,
    pub max_drift_h: f64,
}

/// Integrates the full reduced system with RKF78 at per-step tolerance `tol`
/// (absolute tolerance scaled by `sqrt(N)`), recording every accepted step.
pub fn integrate(
    s0: &StateAba,
    p: &ReducedParams,
    detuning: f64,
    t_final: f64,
    tol: f64,
) -> Result<Trajectory> {
    let scale = invariant_n(s0).sqrt().max(f64::MIN_POSITIVE);
    let rk = Rkf78::new(tol).with_atol(tol * scale);
    let omega10 = p.omega10;
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let d = vector_field(&StateAba { alpha: y[0], beta: y[1], a: y[2], theta: y[3] }, omega10, detuning);
        dy[0] = d.alpha;
        dy[1] = d.beta;
        dy[2] = d.a;
        dy[3] = d.theta;
    };
    let n0 = invariant_n(s0);
    let h0 = hamiltonian_3d(s0, omega10);
    let mut traj = Trajectory { t: vec![], states: vec![], max_drift_n: 0.0, max_drift_h: 0.0 };
    rk.integrate(&f, 0.0, &[s0.alpha, s0.beta, s0.a, s0.theta], t_final, |t, y| {
        let s = StateAba { alpha: y[0], beta: y[1], a: y[2], theta: y[3] };
        traj.max_drift_n = traj.max_drift_n.max((invariant_n(&s) - n0).abs());
        traj.max_drift_h = traj.max_drift_h.max((hamiltonian_3d(&s, omega10) - h0).abs());
        traj.t.push(t);
        traj.states.push(s);
    })?;
    Ok(traj)
}

/// Flow of the `(q, p)` system as a closure usable with [`Rkf78`].
pub fn qp_field(zeta: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |_t, y, dy| {
        let (a, b) = vector_field_qp(y[0], y[1], zeta);
        dy[0] = a;
        dy[1] = b;
    }
}

/// Return time of the `(q, p)` flow started at `(q0, 0)`: the first crossing
/// of `p = 0` after the start in the direction `p` leaves it.
pub fn return_time_qp(q0: f64, zeta: f64, tol: f64, tau_max: f64) -> Result<f64> {
    let rk = Rkf78::new(tol);
    let f = qp_field(zeta);
    let dp0 = vector_field_qp(q0, 0.0, zeta).1;
    if dp0 == 0.0 {
        return Err(Error::NonPeriodic(format!("(q0 = {q0}, zeta = {zeta}) is an equilibrium")));
    }
    let s = -dp0.signum();
    match rk.first_downcrossing(&f, 0.0, &[q0, 0.0], tau_max, |y| s * y[1])? {
        Some((t, _)) => Ok(t),
        None => Err(Error::NonPeriodic(format!("no return of (q0 = {q0}, zeta = {zeta}) before tau = {tau_max}"))),
    }
}
