//! Split-step Fourier integrator for `i u_t = -u_xx + V u + g |u|² u`,
//! projection onto the two-mode basis and the shadowing experiment.

use crate::error::{domain, Error, Result};
use crate::integrate::Rkf78;
use crate::orbits::{chi, ExactOrbit};
use crate::par;
use crate::reduced::ReducedParams;
use crate::spectral::{overlap_integrals, Grid, ModeBasis, Overlaps};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub t: f64,
    pub power: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Field {
    pub u: Vec<Complex64>,
    pub t: f64,
    pub ledger: Vec<LedgerEntry>,
}

impl Field {
    pub fn new(u: Vec<Complex64>) -> Field {
        Field { u, t: 0.0, ledger: Vec::new() }
    }
}

pub fn power(grid: &Grid, u: &[Complex64]) -> f64 {
    grid.dx * u.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

struct Fft2 {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Fft2 {
        let mut planner = FftPlanner::new();
        Fft2 { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }
}

/// Spectral derivative `∂ₓu`.
pub fn derivative(grid: &Grid, u: &[Complex64]) -> Vec<Complex64> {
    let f = Fft2::new(grid.n);
    let mut b = u.to_vec();
    f.fwd.process(&mut b);
    let n = grid.n as f64;
    for (z, k) in b.iter_mut().zip(grid.wavenumbers()) {
        *z *= Complex64::new(0.0, k / n);
    }
    b[grid.n / 2] = Complex64::new(0.0, 0.0);
    f.inv.process(&mut b);
    b
}

/// `∫ |∂ₓu|² + V|u|² + (g/2)|u|⁴ dx`.
pub fn energy(grid: &Grid, v: &[f64], g: f64, u: &[Complex64]) -> f64 {
    let du = derivative(grid, u);
    grid.dx
        * u.iter()
            .zip(&du)
            .zip(v)
            .map(|((z, d), vv)| {
                let a = z.norm_sqr();
                d.norm_sqr() + vv * a + 0.5 * g * a * a
            })
            .sum::<f64>()
}

/// Strang splitting with a fixed step; consecutive nonlinear half-steps are
/// merged when several steps are taken at once.
pub struct Propagator {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub g: f64,
    pub dt: f64,
    fft: Fft2,
    lin: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

pub const MAX_POWER_DRIFT_PER_STEP: f64 = 1e-6;

impl Propagator {
    pub fn new(grid: &Grid, v: &[f64], g: f64, dt: f64) -> Result<Propagator> {
        if v.len() != grid.n {
            return Err(Error::Grid(format!("potential has {} points, grid {}", v.len(), grid.n)));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain("time step must be positive"));
        }
        let fft = Fft2::new(grid.n);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.fwd.get_inplace_scratch_len().max(fft.inv.get_inplace_scratch_len())];
        let inv_n = 1.0 / grid.n as f64;
        let lin = grid.wavenumbers().iter().map(|k| Complex64::from_polar(inv_n, -k * k * dt)).collect();
        Ok(Propagator { grid: grid.clone(), v: v.to_vec(), g, dt, fft, lin, scratch })
    }

    fn phase(&self, u: &mut [Complex64], frac: f64) {
        let c = self.dt * frac;
        for (z, vv) in u.iter_mut().zip(&self.v) {
            let (s, co) = (-(vv + self.g * z.norm_sqr()) * c).sin_cos();
            *z *= Complex64::new(co, s);
        }
    }

    fn linear(&mut self, u: &mut [Complex64]) {
        self.fft.fwd.process_with_scratch(u, &mut self.scratch);
        for (z, m) in u.iter_mut().zip(&self.lin) {
            *z *= m;
        }
        self.fft.inv.process_with_scratch(u, &mut self.scratch);
    }

    fn check_phase_rotation(&self, u: &[Complex64]) -> Result<()> {
        let m = u.iter().zip(&self.v).map(|(z, vv)| (vv + self.g * z.norm_sqr()).abs()).fold(0.0, f64::max);
        if self.dt * m >= 0.5 {
            return Err(domain(format!("dt * max|V + g|u|^2| = {} not below 0.5", self.dt * m)));
        }
        Ok(())
    }

    /// Takes `steps` steps, checking power conservation after each.
    pub fn advance(&mut self, f: &mut Field, steps: usize) -> Result<()> {
        if f.u.len() != self.grid.n {
            return Err(Error::Grid(format!("field has {} points, grid {}", f.u.len(), self.grid.n)));
        }
        if steps == 0 {
            return Ok(());
        }
        self.check_phase_rotation(&f.u)?;
        let mut u = std::mem::take(&mut f.u);
        let mut p_prev = power(&self.grid, &u);
        self.phase(&mut u, 0.5);
        for i in 0..steps {
            self.linear(&mut u);
            let last = i + 1 == steps;
            self.phase(&mut u, if last { 0.5 } else { 1.0 });
            let p = power(&self.grid, &u);
            let drift = (p - p_prev).abs() / p_prev.max(f64::MIN_POSITIVE);
            if drift > MAX_POWER_DRIFT_PER_STEP {
                f.u = u;
                return Err(Error::UnstableStep { drift });
            }
            p_prev = p;
        }
        f.u = u;
        f.t += steps as f64 * self.dt;
        Ok(())
    }

    /// One step of the linear flow alone,
    /// `U = e^{-iV dt/2} e^{-i k² dt} e^{-iV dt/2}`.
    pub fn linear_step(&mut self, u: &mut [Complex64]) {
        let half = |u: &mut [Complex64], v: &[f64], dt: f64| {
            for (z, vv) in u.iter_mut().zip(v) {
                *z *= Complex64::from_polar(1.0, -vv * 0.5 * dt);
            }
        };
        half(u, &self.v, self.dt);
        self.linear(u);
        half(u, &self.v, self.dt);
    }

    /// `-arg <psi, U psi> / dt` for a real mode `psi`.
    pub fn linear_frequency(&mut self, psi: &[f64]) -> f64 {
        let mut u: Vec<Complex64> = psi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.linear_step(&mut u);
        let z: Complex64 = u.iter().zip(psi).map(|(a, b)| a * b).sum();
        -z.arg() / self.dt
    }

    pub fn record(&self, f: &mut Field) {
        f.ledger.push(LedgerEntry {
            t: f.t,
            power: power(&self.grid, &f.u),
            energy: energy(&self.grid, &self.v, self.g, &f.u),
        });
    }
}

/// One Strang step; builds a fresh propagator, so prefer [`Propagator`] for runs.
pub fn step(f: &Field, dt: f64, g: f64, v: &[f64], grid: &Grid) -> Result<Field> {
    let mut p = Propagator::new(grid, v, g, dt)?;
    let mut out = f.clone();
    p.advance(&mut out, 1)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub c0: Complex64,
    pub c1: Complex64,
    pub rho: Vec<Complex64>,
}

pub fn project(u: &[Complex64], basis: &ModeBasis) -> Result<Projection> {
    let g = &basis.grid;
    if u.len() != g.n {
        return Err(Error::Grid(format!("field has {} points, basis grid {}", u.len(), g.n)));
    }
    let (p0, p1) = (basis.psi0(), basis.psi1());
    let dot = |psi: &[f64]| u.iter().zip(psi).map(|(z, w)| z * w).sum::<Complex64>() * g.dx;
    let (c0, c1) = (dot(p0), dot(p1));
    let rho = u.iter().enumerate().map(|(j, z)| z - c0 * p0[j] - c1 * p1[j]).collect();
    Ok(Projection { c0, c1, rho })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

/// `θ = arg c₀`, `A = |c₀|`, `α + iβ = c₁ e^{-iθ}`.
pub fn rotating_frame(c0: Complex64, c1: Complex64) -> Result<FrameState> {
    if c0.norm() == 0.0 {
        return Err(Error::PhaseAmbiguity);
    }
    let theta = c0.arg();
    let w = c1 * Complex64::from_polar(1.0, -theta);
    Ok(FrameState { a: c0.norm(), alpha: w.re, beta: w.im, theta })
}

/// Rotating-frame series with `θ` unwrapped; a vanishing `c₀` reuses the
/// previous phase.
pub fn rotating_frame_series(cs: &[(Complex64, Complex64)]) -> Result<Vec<FrameState>> {
    let mut out: Vec<FrameState> = Vec::with_capacity(cs.len());
    for &(c0, c1) in cs {
        let prev = out.last().map(|s| s.theta);
        let theta = if c0.norm() == 0.0 {
            prev.ok_or(Error::PhaseAmbiguity)?
        } else {
            let raw = c0.arg();
            match prev {
                Some(p) => raw + 2.0 * std::f64::consts::PI * ((p - raw) / (2.0 * std::f64::consts::PI)).round(),
                None => raw,
            }
        };
        let w = c1 * Complex64::from_polar(1.0, -theta);
        out.push(FrameState { a: c0.norm(), alpha: w.re, beta: w.im, theta });
    }
    Ok(out)
}

/// Length of the time average in [`propagator_basis`].
pub const FILTER_WINDOW: f64 = 400.0;

/// Eigenmodes of the discrete linear step near the modes of `basis`. The
/// step operator is symmetric and unitary, so its eigenvectors are real; each
/// one is extracted from `ψⱼ` by a Hann-windowed average of
/// `e^{iωⱼ m dt} U^m ψⱼ` over `window` time units, which suppresses the
/// off-resonant components left by the `O(dt²)` difference of the operators.
pub fn propagator_basis(basis: &ModeBasis, dt: f64, window: f64) -> Result<ModeBasis> {
    let mut prop = Propagator::new(&basis.grid, &basis.potential, 0.0, dt)?;
    let steps = (window / dt).ceil().max(2.0) as usize;
    let mut out = basis.clone();
    for mode in out.modes.iter_mut() {
        let w = prop.linear_frequency(&mode.psi);
        let mut u: Vec<Complex64> = mode.psi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); u.len()];
        for m in 0..=steps {
            let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * m as f64 / steps as f64).cos();
            let rot = Complex64::from_polar(hann, w * m as f64 * dt);
            for (a, z) in acc.iter_mut().zip(&u) {
                *a += rot * z;
            }
            prop.linear_step(&mut u);
        }
        let phi: Vec<f64> = acc.iter().map(|z| z.re).collect();
        let norm = basis.grid.inner(&phi, &phi).sqrt();
        let sign = basis.grid.inner(&phi, &mode.psi).signum();
        mode.psi = phi.iter().map(|x| sign * x / norm).collect();
        mode.omega = prop.linear_frequency(&mode.psi);
    }
    Ok(out)
}

/// Two-mode ODE with overlap-calibrated cubic coefficients, in the frame
/// rotating at `Ω₀` and amplitude units where `|g| I₀₀ = 1`.
#[derive(Debug, Clone, Copy)]
pub struct TwoModeModel {
    pub omega10: f64,
    pub r01: f64,
    pub r11: f64,
    /// Sign of `g`.
    pub sign: f64,
}

impl TwoModeModel {
    pub fn calibrated(basis: &ModeBasis, g: f64) -> TwoModeModel {
        let o = overlap_integrals(basis);
        TwoModeModel { omega10: basis.omega10(), r01: o.i01 / o.i00, r11: o.i11 / o.i00, sign: g.signum() }
    }

    pub fn idealized(omega10: f64) -> TwoModeModel {
        TwoModeModel { omega10, r01: 1.0, r11: 1.0, sign: -1.0 }
    }

    /// `(ċ₀, ċ₁)` for state `[Re c₀, Im c₀, Re c₁, Im c₁]`.
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let c0 = Complex64::new(y[0], y[1]);
        let c1 = Complex64::new(y[2], y[3]);
        let (n0, n1) = (c0.norm_sqr(), c1.norm_sqr());
        let f0 = n0 * c0 + self.r01 * (2.0 * n1 * c0 + c1 * c1 * c0.conj());
        let f1 = self.r11 * n1 * c1 + self.r01 * (2.0 * n0 * c1 + c0 * c0 * c1.conj());
        let i = Complex64::new(0.0, 1.0);
        let d0 = -i * (self.sign * f0);
        let d1 = -i * (self.omega10 * c1 + self.sign * f1);
        dy[0] = d0.re;
        dy[1] = d0.im;
        dy[2] = d1.re;
        dy[3] = d1.im;
    }

    pub fn integrate(&self, c0: Complex64, c1: Complex64, times: &[f64], tol: f64) -> Result<Vec<(Complex64, Complex64)>> {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| self.rhs(y, dy);
        let scale = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        let ys = Rkf78::new(tol).with_atol(tol * scale).integrate_grid(&f, &[c0.re, c0.im, c1.re, c1.im], times)?;
        Ok(ys.iter().map(|y| (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]))).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShadowOptions {
    pub g: f64,
    pub dt: f64,
    pub eps: f64,
    /// Overrides the window length `T σ^{-ε}` with this many periods.
    pub periods: Option<f64>,
    pub samples_per_period: usize,
    pub ode_tol: f64,
    /// Shadow in the eigenmodes of the discrete linear step rather than
    /// those of the eigensolver.
    pub propagator_basis: bool,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions { g: -1.0, dt: 0.1, eps: 0.0, periods: None, samples_per_period: 64, ode_tol: 1e-12, propagator_basis: true }
    }
}

#[derive(Debug, Clone)]
pub struct ShadowReport {
    pub times: Vec<f64>,
    pub orbit_series: Vec<[f64; 3]>,
    pub ode_series: Vec<[f64; 3]>,
    pub pde_series: Vec<[f64; 3]>,
    pub theta_ode: Vec<f64>,
    pub theta_pde: Vec<f64>,
    pub residual_h1: Vec<f64>,
    pub residual_sup: Vec<f64>,
    /// `max |pde - ode|` over the window in `(A, α, β)`.
    pub sup_error: f64,
    /// `max |ode - exact orbit|`.
    pub model_error: f64,
    /// `max sqrt(α² + β²)` along the exact orbit.
    pub amplitude: f64,
    pub ratio: f64,
    pub power_drift: f64,
    pub energy_drift: f64,
    pub growth_exponent: f64,
    pub window: (f64, f64),
    pub period: f64,
    pub scale: f64,
    pub overlaps: Overlaps,
    pub dt: f64,
    pub steps: usize,
    /// Splitting used by the ODE.
    pub model_omega10: f64,
    pub lost: bool,
}

impl ShadowReport {
    pub fn check(&self) -> Result<()> {
        if self.lost {
            Err(Error::ShadowLoss { error: self.sup_error, amplitude: self.amplitude })
        } else {
            Ok(())
        }
    }
}

fn h1_norm(grid: &Grid, r: &[Complex64]) -> f64 {
    let d = derivative(grid, r);
    (grid.dx * r.iter().zip(&d).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum::<f64>()).sqrt()
}

/// Least-squares slope of `log e` against `log t` for the running maximum of
/// the error, using samples after the first tenth of the window.
pub fn growth_exponent(times: &[f64], err: &[f64]) -> f64 {
    let t_end = times.last().copied().unwrap_or(0.0);
    let mut run = 0.0_f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in times.iter().zip(err) {
        run = run.max(e);
        if t >= 0.1 * t_end && run > 0.0 && t > 0.0 {
            xs.push(t.ln());
            ys.push(run.ln());
        }
    }
    if xs.len() < 2 {
        return 0.0;
    }
    crate::spectral::linear_fit(&xs, &ys).0
}

/// Runs the NLS from the two-mode data of `orb` at `t = 0` and compares the
/// projected `(A, α, β)` with the calibrated two-mode ODE and the exact orbit.
pub fn shadow_run(orb: &ExactOrbit, p: &ReducedParams, basis: &ModeBasis, opts: &ShadowOptions) -> Result<ShadowReport> {
    let w10 = basis.omega10();
    if (w10 - p.omega10).abs() > 0.01 * p.omega10 {
        return Err(domain(format!("basis splitting {w10:e} differs from Omega10 {:e} by more than 1%", p.omega10)));
    }
    if !(opts.g < 0.0) {
        return Err(domain("shadowing runs use a focusing nonlinearity g < 0"));
    }
    let period = orb.period_t(p.omega10);
    let t_end = match opts.periods {
        Some(k) => k * period,
        None => period * p.sigma.abs().powf(-opts.eps),
    };
    let samples = ((t_end / period) * opts.samples_per_period as f64).ceil().max(1.0) as usize;
    let steps_per_sample = ((t_end / samples as f64) / opts.dt).round().max(1.0) as usize;
    let dt = t_end / (samples * steps_per_sample) as f64;
    let times: Vec<f64> = (0..=samples).map(|i| (i * steps_per_sample) as f64 * dt).collect();

    let [al0, be0, a0] = chi(orb, p, 0.0)?;
    let c0 = Complex64::new(a0, 0.0);
    let c1 = Complex64::new(al0, be0);
    let filtered;
    let basis = if opts.propagator_basis {
        filtered = propagator_basis(basis, dt, FILTER_WINDOW)?;
        &filtered
    } else {
        basis
    };
    let grid = &basis.grid;
    let overlaps = overlap_integrals(basis);
    let scale = 1.0 / (opts.g.abs() * overlaps.i00).sqrt();
    let model = TwoModeModel::calibrated(basis, opts.g);

    let (pde, ode) = par::join(
        || -> Result<_> {
            let (p0, p1) = (basis.psi0(), basis.psi1());
            let u0 = (0..grid.n).map(|j| (c0 * p0[j] + c1 * p1[j]) * scale).collect();
            let mut field = Field::new(u0);
            let mut prop = Propagator::new(grid, &basis.potential, opts.g, dt)?;
            let mut cs = Vec::with_capacity(times.len());
            let mut h1 = Vec::with_capacity(times.len());
            let mut sup = Vec::with_capacity(times.len());
            for i in 0..times.len() {
                if i > 0 {
                    prop.advance(&mut field, steps_per_sample)?;
                }
                prop.record(&mut field);
                let pr = project(&field.u, basis)?;
                cs.push((pr.c0 / scale, pr.c1 / scale));
                h1.push(h1_norm(grid, &pr.rho) / scale);
                sup.push(pr.rho.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale);
            }
            Ok((cs, h1, sup, field.ledger))
        },
        || model.integrate(c0, c1, &times, opts.ode_tol),
    );
    let (cs, residual_h1, residual_sup, ledger) = pde?;
    let pde_frames = rotating_frame_series(&cs)?;
    let ode_frames = rotating_frame_series(&ode?)?;

    let orbit_series = times.iter().map(|&t| chi(orb, p, t).map(|[al, be, a]| [a, al, be])).collect::<Result<Vec<_>>>()?;
    let trip = |f: &FrameState| [f.a, f.alpha, f.beta];
    let pde_series: Vec<[f64; 3]> = pde_frames.iter().map(trip).collect();
    let ode_series: Vec<[f64; 3]> = ode_frames.iter().map(trip).collect();
    let dist = |a: &[f64; 3], b: &[f64; 3]| (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let errs: Vec<f64> = pde_series.iter().zip(&ode_series).map(|(a, b)| dist(a, b)).collect();
    let sup_error = errs.iter().copied().fold(0.0, f64::max);
    let model_error = ode_series.iter().zip(&orbit_series).map(|(a, b)| dist(a, b)).fold(0.0, f64::max);
    let amplitude = orbit_series.iter().map(|s| (s[1] * s[1] + s[2] * s[2]).sqrt()).fold(0.0, f64::max);
    let p0 = ledger[0].power;
    let e0 = ledger[0].energy;
    let power_drift = ledger.iter().map(|l| (l.power - p0).abs() / p0).fold(0.0, f64::max);
    let energy_drift = ledger.iter().map(|l| (l.energy - e0).abs() / e0.abs()).fold(0.0, f64::max);
    let ratio = sup_error / amplitude;
    Ok(ShadowReport {
        growth_exponent: growth_exponent(&times, &errs),
        theta_ode: ode_frames.iter().map(|f| f.theta).collect(),
        theta_pde: pde_frames.iter().map(|f| f.theta).collect(),
        times,
        orbit_series,
        ode_series,
        pde_series,
        residual_h1,
        residual_sup,
        sup_error,
        model_error,
        amplitude,
        ratio,
        power_drift,
        energy_drift,
        window: (0.0, t_end),
        period,
        scale,
        overlaps,
        dt,
        steps: samples * steps_per_sample,
        model_omega10: model.omega10,
        lost: sup_error > amplitude,
    })
}

#[derive(Debug, Clone)]
pub struct Spacetime {
    pub times: Vec<f64>,
    /// `|c₀ψ₀ + c₁ψ₁|` per time, per grid point.
    pub magnitudes: Vec<Vec<f64>>,
    pub left_power: Vec<f64>,
    pub right_power: Vec<f64>,
}

/// Two-mode field magnitudes from rotating-frame samples `(t, A, α, β, θ)`.
pub fn reconstruct(times: &[f64], series: &[FrameState], basis: &ModeBasis) -> Result<Spacetime> {
    if times.len() != series.len() {
        return Err(Error::Grid(format!("{} times but {} samples", times.len(), series.len())));
    }
    let g = &basis.grid;
    let h = g.n / 2;
    let (p0, p1) = (basis.psi0(), basis.psi1());
    let mut out = Spacetime { times: times.to_vec(), magnitudes: vec![], left_power: vec![], right_power: vec![] };
    for s in series {
        let ph = Complex64::from_polar(1.0, s.theta);
        let (c0, c1) = (ph * s.a, ph * Complex64::new(s.alpha, s.beta));
        let mags: Vec<f64> = (0..g.n).map(|j| (c0 * p0[j] + c1 * p1[j]).norm()).collect();
        out.left_power.push(g.dx * mags[..h].iter().map(|m| m * m).sum::<f64>());
        out.right_power.push(g.dx * mags[h..].iter().map(|m| m * m).sum::<f64>());
        out.magnitudes.push(mags);
    }
    Ok(out)
}
