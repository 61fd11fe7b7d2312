//! Finite-difference eigenpairs of `-∂ₓ² + V` for symmetric single and
//! double wells, with parity folding, plus bimodality and overlap checks.

use crate::error::{domain, Error, Result};
use crate::linalg::{sturm_count, tridiagonal_eigenvalue, BandLu, Banded};
use crate::par;
use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellKind {
    PoschlTeller,
    Gaussian,
    SquareWell,
}

impl WellKind {
    pub fn parse(s: &str) -> Option<WellKind> {
        match s {
            "poschl-teller" | "pt" => Some(WellKind::PoschlTeller),
            "gaussian" => Some(WellKind::Gaussian),
            "square" | "square-well" => Some(WellKind::SquareWell),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WellKind::PoschlTeller => "poschl-teller",
            WellKind::Gaussian => "gaussian",
            WellKind::SquareWell => "square",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub kind: WellKind,
    pub depth: f64,
    pub width: f64,
    /// Half-separation of the two wells.
    pub ell: f64,
    /// Single well centred at the origin when true; `ell` is ignored.
    pub single: bool,
}

impl PotentialSpec {
    /// `V₀ = -2 sech²(x)` wells at `±ell`.
    pub fn poschl_teller(ell: f64) -> Self {
        PotentialSpec { kind: WellKind::PoschlTeller, depth: 2.0, width: 1.0, ell, single: false }
    }

    pub fn single_well(&self) -> Self {
        PotentialSpec { single: true, ell: 0.0, ..*self }
    }

    pub fn with_ell(&self, ell: f64) -> Self {
        PotentialSpec { ell, ..*self }
    }

    pub fn well(&self, x: f64) -> f64 {
        let s = x / self.width;
        match self.kind {
            WellKind::PoschlTeller => {
                let c = s.cosh();
                -self.depth / (c * c)
            }
            WellKind::Gaussian => -self.depth * (-s * s).exp(),
            WellKind::SquareWell => {
                if s.abs() < 1.0 {
                    -self.depth
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.single {
            self.well(x)
        } else {
            self.well(x - self.ell) + self.well(x + self.ell)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.depth > 0.0 && self.width > 0.0) {
            return Err(domain("well depth and width must be positive"));
        }
        if !self.single && !(self.ell > self.width) {
            return Err(domain(format!("ell = {} must exceed the well width {}", self.ell, self.width)));
        }
        Ok(())
    }
}

/// Cell-centred symmetric grid `x_j = -L + (j + ½) dx`, `dx = 2L/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub l: f64,
    pub dx: f64,
    pub x: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Grid> {
        if n < 16 || n % 2 != 0 {
            return Err(domain(format!("grid size {n} must be even and at least 16")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(domain("half-length L must be positive"));
        }
        let dx = 2.0 * l / n as f64;
        let x = (0..n).map(|j| -l + (j as f64 + 0.5) * dx).collect();
        Ok(Grid { n, l, dx, x })
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dx * a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>()
    }

    /// Angular wavenumbers in FFT order for the periodic box of length `2L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let base = std::f64::consts::PI / self.l;
        (0..self.n)
            .map(|j| if j < self.n / 2 { j as f64 } else { j as f64 - self.n as f64 } * base)
            .collect()
    }
}

/// Central second-difference weights `c₀, c₁, …` for orders 2 to 8.
pub fn fd_weights(order: usize) -> Result<&'static [f64]> {
    match order {
        2 => Ok(&[-2.0, 1.0]),
        4 => Ok(&[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
        6 => Ok(&[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
        8 => Ok(&[-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0]),
        _ => Err(domain(format!("finite-difference order {order} not in {{2, 4, 6, 8}}"))),
    }
}

pub const DEFAULT_FD_ORDER: usize = 8;

/// `(-∂ₓ² + V) ψ` with zero Dirichlet data outside the grid.
pub fn apply_hamiltonian(grid: &Grid, v: &[f64], psi: &[f64], order: usize) -> Result<Vec<f64>> {
    let w = fd_weights(order)?;
    let n = grid.n;
    let inv = 1.0 / (grid.dx * grid.dx);
    Ok((0..n)
        .map(|i| {
            let mut lap = w[0] * psi[i];
            for (d, c) in w.iter().enumerate().skip(1) {
                if i >= d {
                    lap += c * psi[i - d];
                }
                if i + d < n {
                    lap += c * psi[i + d];
                }
            }
            -lap * inv + v[i] * psi[i]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub omega: f64,
    pub parity: Parity,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub spec: PotentialSpec,
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub fd_order: usize,
    /// Lowest modes in increasing order of energy.
    pub modes: Vec<Mode>,
}

impl ModeBasis {
    pub fn omega0(&self) -> f64 {
        self.modes[0].omega
    }
    pub fn omega1(&self) -> f64 {
        self.modes[1].omega
    }
    pub fn omega10(&self) -> f64 {
        self.omega1() - self.omega0()
    }
    pub fn psi0(&self) -> &[f64] {
        &self.modes[0].psi
    }
    pub fn psi1(&self) -> &[f64] {
        &self.modes[1].psi
    }

    /// Largest `|ψ(x) ∓ ψ(-x)|` over the first two modes.
    pub fn parity_residual(&self) -> f64 {
        let n = self.grid.n;
        self.modes
            .iter()
            .take(2)
            .map(|m| (0..n).map(|j| (m.psi[j] - m.parity.sign() * m.psi[n - 1 - j]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

// Folded operator on the right half `x > 0` for one parity.
fn folded(v: &[f64], dx: f64, weights: &[f64], parity: Parity) -> Banded {
    let h = v.len() / 2;
    let b = weights.len() - 1;
    let inv = 1.0 / (dx * dx);
    let s = parity.sign();
    let mut a = Banded::zeros(h, b, b);
    for r in 0..h {
        a.add(r, r, -weights[0] * inv + v[h + r]);
        for (d, c) in weights.iter().enumerate().skip(1) {
            if r + d < h {
                a.add(r, r + d, -c * inv);
            }
            if r >= d {
                a.add(r, r - d, -c * inv);
            } else {
                // Neighbour at r - d < 0 mirrors onto index d - r - 1.
                a.add(r, d - r - 1, -s * c * inv);
            }
        }
    }
    a
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Shift-invert refinement of an eigenvalue estimate on a symmetric banded
/// matrix; returns the Rayleigh quotient and unit eigenvector.
fn refine(a: &Banded, guess: f64, seed: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = a.n;
    let mut x = seed.to_vec();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut mu = guess;
    let mut ax = vec![0.0; n];
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(1.0, f64::max);
    for it in 0..60 {
        // Shift updates only once the Rayleigh quotient has settled, so a
        // poor initial guess cannot jump to a neighbouring eigenvalue.
        let lu = BandLu::factor(&a.shifted(mu + 1e-13 * scale * (it as f64 + 1.0)))
            .ok_or_else(|| Error::Convergence("singular shifted matrix".into()))?;
        lu.solve(&mut x);
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        a.matvec(&x, &mut ax);
        let rq: f64 = x.iter().zip(&ax).map(|(u, v)| u * v).sum();
        let res = ax.iter().zip(&x).map(|(u, v)| (u - rq * v).powi(2)).sum::<f64>().sqrt();
        if res <= 1e-12 * scale {
            return Ok((rq, x));
        }
        if it >= 2 && (rq - mu).abs() < 1e-3 {
            mu = rq;
        }
    }
    Err(Error::Convergence(format!("inverse iteration from {guess} did not converge")))
}

fn check_box(spec: &PotentialSpec, l: f64, grid: &Grid) -> Result<()> {
    let reach = if spec.single { 0.0 } else { spec.ell };
    if l < reach + 20.0 * spec.width {
        return Err(domain(format!("L = {l} below ell + 20 width = {}", reach + 20.0 * spec.width)));
    }
    let edge = spec.eval(grid.x[0]).abs().max(spec.eval(grid.x[grid.n - 1]).abs());
    if edge >= 1e-10 {
        return Err(domain(format!("|V(±L)| = {edge:e} not below 1e-10")));
    }
    Ok(())
}

/// Lowest `m` bound states of `-∂ₓ² + V` at finite-difference order
/// [`DEFAULT_FD_ORDER`].
pub fn eigensolve(spec: &PotentialSpec, l: f64, n: usize, m: usize) -> Result<ModeBasis> {
    eigensolve_with_order(spec, l, n, m, DEFAULT_FD_ORDER)
}

pub fn eigensolve_with_order(
    spec: &PotentialSpec,
    l: f64,
    n: usize,
    m: usize,
    order: usize,
) -> Result<ModeBasis> {
    spec.validate()?;
    if n < 256 {
        return Err(domain(format!("grid size {n} below 256")));
    }
    if m == 0 {
        return Err(domain("at least one mode must be requested"));
    }
    let grid = Grid::new(n, l)?;
    check_box(spec, l, &grid)?;
    let weights = fd_weights(order)?;
    let v: Vec<f64> = grid.x.iter().map(|&x| spec.eval(x)).collect();
    let h = n / 2;
    let mut found = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let tri = folded(&v, grid.dx, fd_weights(2)?, parity);
        let d: Vec<f64> = (0..h).map(|i| tri.get(i, i)).collect();
        let e: Vec<f64> = (0..h - 1).map(|i| tri.get(i, i + 1)).collect();
        let bound = sturm_count(&d, &e, 0.0).min(m);
        let a = folded(&v, grid.dx, weights, parity);
        for j in 0..bound {
            let guess = tridiagonal_eigenvalue(&d, &e, j);
            // Seed with a shape that has j interior nodes on the half line.
            let seed: Vec<f64> = (0..h)
                .map(|r| {
                    let x = grid.x[h + r];
                    let env = (-(x - spec.ell).powi(2) / (8.0 * spec.width.powi(2))).exp() + 1e-3;
                    env * (1.0 + 0.1 * ((j + 1) as f64 * x).cos())
                })
                .collect();
            let (omega, half) = refine(&a, guess, &seed)?;
            found.push((omega, parity, half));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let found: Vec<_> = found.into_iter().filter(|f| f.0 < 0.0).collect();
    if found.len() < m {
        return Err(Error::Spectrum { found: found.len(), wanted: m });
    }
    let modes = found
        .into_iter()
        .take(m)
        .map(|(omega, parity, half)| {
            let s = parity.sign();
            let mut psi = vec![0.0; n];
            for r in 0..h {
                psi[h + r] = half[r];
                psi[h - 1 - r] = s * half[r];
            }
            let nrm = grid.inner(&psi, &psi).sqrt();
            let right: f64 = psi[h..].iter().sum();
            let flip = if right < 0.0 { -1.0 } else { 1.0 };
            psi.iter_mut().for_each(|p| *p *= flip / nrm);
            Mode { omega, parity, psi }
        })
        .collect();
    Ok(ModeBasis { spec: *spec, grid, potential: v, fd_order: order, modes })
}

/// Ground state of the single well on a grid of half-length `l`.
pub fn ground_state(spec: &PotentialSpec, l: f64, n: usize) -> Result<Mode> {
    let b = eigensolve(&spec.single_well(), l, n, 1)?;
    Ok(b.modes.into_iter().next().expect("one mode"))
}

#[derive(Debug, Clone)]
pub struct SplittingCurve {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl SplittingCurve {
    /// Decay rate `c₀` in `Ω₁₀ ~ e^{-c₀ ℓ}`.
    pub fn decay_rate(&self) -> f64 {
        -self.slope
    }
}

/// Least squares `y = a + b x`; returns `(b, a, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// `Ω₁₀(ℓ)` over `ells`, each on a box `L = ℓ + pad` at fixed spacing `dx`.
pub fn splitting_curve(spec: &PotentialSpec, ells: &[f64], pad: f64, dx: f64) -> Result<SplittingCurve> {
    if ells.len() < 2 {
        return Err(domain("need at least two separations"));
    }
    let runs = par::map(ells, |&ell| {
        let l = ell + pad;
        let n = (2.0 * l / dx / 2.0).round() as usize * 2;
        eigensolve(&spec.with_ell(ell), l, n.max(256), 2).map(|b| (ell, b.omega10()))
    });
    let points = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(SplittingCurve { points, slope, intercept, r2 })
}

/// Spectral translation `f(x) ↦ f(x - s)` on the periodic box.
pub fn shift(grid: &Grid, f: &[f64], s: f64) -> Vec<f64> {
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (b, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *b *= Complex64::from_polar(1.0 / n as f64, -k * s);
    }
    // The Nyquist mode has no consistent sign under a real shift.
    buf[n / 2] = Complex64::new(0.0, 0.0);
    inv.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Distances `rⱼ = ‖ψⱼ - (φ(x-ℓ) + (-1)ʲ φ(x+ℓ))/√2‖` to the bimodal
/// combinations of the single-well ground state `φ`.
pub fn bimodal_check(basis: &ModeBasis) -> Result<(f64, f64)> {
    let g = &basis.grid;
    let phi = eigensolve_with_order(&basis.spec.single_well(), g.l, g.n, 1, basis.fd_order)?
        .modes
        .remove(0)
        .psi;
    let ell = basis.spec.ell;
    let right = shift(g, &phi, ell);
    let left = shift(g, &phi, -ell);
    let r = |psi: &[f64], s: f64| {
        let d: Vec<f64> = (0..g.n).map(|j| psi[j] - (right[j] + s * left[j]) / 2f64.sqrt()).collect();
        g.inner(&d, &d).sqrt()
    };
    Ok((r(basis.psi0(), 1.0), r(basis.psi1(), -1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlaps {
    pub i00: f64,
    pub i01: f64,
    pub i11: f64,
}

pub fn overlap_integrals(basis: &ModeBasis) -> Overlaps {
    let (a, b) = (basis.psi0(), basis.psi1());
    let dx = basis.grid.dx;
    let sum = |f: &dyn Fn(usize) -> f64| dx * (0..a.len()).map(f).sum::<f64>();
    Overlaps {
        i00: sum(&|j| a[j].powi(4)),
        i01: sum(&|j| a[j] * a[j] * b[j] * b[j]),
        i11: sum(&|j| b[j].powi(4)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poschl_teller_single_well() {
        let spec = PotentialSpec::poschl_teller(0.0).single_well();
        let g = ground_state(&spec, 40.0, 4096).unwrap();
        assert!((g.omega + 1.0).abs() < 1e-6, "{}", g.omega);
        let grid = Grid::new(4096, 40.0).unwrap();
        let exact: Vec<f64> = grid.x.iter().map(|x| 1.0 / x.cosh() / 2f64.sqrt()).collect();
        let err = g.psi.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn double_well_ordering_and_orthogonality() {
        let spec = PotentialSpec::poschl_teller(6.0);
        let b = eigensolve(&spec, 30.0, 1024, 2).unwrap();
        assert!(b.omega0() < -1.0 && -1.0 < b.omega1());
        assert!(b.grid.inner(b.psi0(), b.psi1()).abs() < 1e-10);
        assert!((b.grid.inner(b.psi0(), b.psi0()) - 1.0).abs() < 1e-12);
        assert!(b.parity_residual() < 1e-12);
        // ψ₀(0) > 0 and ψ₁ increasing through the origin.
        let h = b.grid.n / 2;
        assert!(b.psi0()[h] > 0.0 && b.psi1()[h] > b.psi1()[h - 1]);
        // Reference from a large second-order solve: Ω₁₀ ≈ 4.9156e-5.
        assert!((b.omega10() / 4.9156e-5 - 1.0).abs() < 2e-3, "{}", b.omega10());
    }

    #[test]
    fn rayleigh_quotient_and_reflection() {
        let spec = PotentialSpec::poschl_teller(5.0);
        let b = eigensolve(&spec, 30.0, 1024, 2).unwrap();
        for m in &b.modes {
            let hpsi = apply_hamiltonian(&b.grid, &b.potential, &m.psi, b.fd_order).unwrap();
            assert!((b.grid.inner(&m.psi, &hpsi) - m.omega).abs() < 1e-8);
            let rpsi: Vec<f64> = m.psi.iter().rev().copied().collect();
            let hr = apply_hamiltonian(&b.grid, &b.potential, &rpsi, b.fd_order).unwrap();
            let rh: Vec<f64> = hpsi.iter().rev().copied().collect();
            let c = hr.iter().zip(&rh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(c < 1e-10);
        }
    }

    #[test]
    fn richardson_second_order() {
        let spec = PotentialSpec::poschl_teller(4.0);
        let o = |n| eigensolve_with_order(&spec, 24.0, n, 2, 2).unwrap().omega0();
        let (a, b, c) = (o(512), o(1024), o(2048));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn too_few_bound_states() {
        let spec = PotentialSpec::poschl_teller(0.0).single_well();
        assert!(matches!(eigensolve(&spec, 30.0, 512, 2), Err(Error::Spectrum { found: 1, wanted: 2 })));
        assert!(eigensolve(&PotentialSpec::poschl_teller(6.0), 10.0, 512, 2).is_err());
    }

    #[test]
    fn depth_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for depth in [2.0, 1.5, 1.0, 0.5] {
            let spec = PotentialSpec { depth, ..PotentialSpec::poschl_teller(0.0) }.single_well();
            let w = ground_state(&spec, 30.0, 512).unwrap().omega;
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn splitting_is_exponential() {
        let c = splitting_curve(&PotentialSpec::poschl_teller(4.0), &[4.0, 5.0, 6.0, 7.0, 8.0], 22.0, 0.05).unwrap();
        assert!(c.r2 > 0.999 && c.slope < 0.0);
        assert!((c.decay_rate() - 2.0).abs() < 0.05, "{}", c.decay_rate());
    }

    #[test]
    fn bimodal_residuals_shrink() {
        let at = |ell: f64| {
            let b = eigensolve(&PotentialSpec::poschl_teller(ell), ell + 24.0, 2048, 2).unwrap();
            bimodal_check(&b).unwrap()
        };
        let (a0, a1) = at(4.0);
        let (b0, b1) = at(8.0);
        assert!(b0 < a0 && b1 < a1);
        assert!(b0 < 1e-3 && b1 < 1e-3, "{b0:e} {b1:e}");
    }

    #[test]
    fn overlaps_in_bimodal_limit() {
        let b = eigensolve(&PotentialSpec::poschl_teller(8.0), 32.0, 2048, 2).unwrap();
        let o = overlap_integrals(&b);
        assert!(o.i00 > 0.0 && o.i01 > 0.0 && o.i11 > 0.0);
        assert!((o.i00 - o.i11).abs() / o.i00 < 1e-2);
        // A deep single Gaussian well holding an even and an odd bound state.
        let g = PotentialSpec { kind: WellKind::Gaussian, depth: 10.0, width: 1.0, ell: 0.0, single: true };
        let bg = eigensolve(&g, 30.0, 1024, 2).unwrap();
        let og = overlap_integrals(&bg);
        assert!(og.i00 > og.i01);
    }
}
