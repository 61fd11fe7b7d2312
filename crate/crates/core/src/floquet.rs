//! Linearization of the reduced system along an exact orbit: fundamental
//! matrix, monodromy, the family-derivative construction of the same matrix,
//! and the two-time growth bound.

use crate::elliptic::{complete_k, dk_dk};
use crate::error::{domain, Error, Result};
use crate::integrate::Rkf78;
use crate::orbits::{build, chi, eval_with_rates, ExactOrbit};
use crate::par;
use crate::reduced::ReducedParams;
use nalgebra::{Complex, Matrix3, Vector3};

fn check_family(orb: &ExactOrbit, p: &ReducedParams) -> Result<()> {
    if (orb.zeta - p.zeta).abs() > 1e-12 * p.zeta.abs().max(1.0) {
        return Err(domain(format!("orbit zeta {} differs from parameter zeta {}", orb.zeta, p.zeta)));
    }
    Ok(())
}

/// Jacobian of `(α̇, β̇, Ȧ)` at the orbit point `χ*(t)`.
pub fn linearized_b(orb: &ExactOrbit, p: &ReducedParams, t: f64) -> Result<Matrix3<f64>> {
    let [al, be, a] = chi(orb, p, t)?;
    if a <= 0.0 {
        return Err(Error::DegenerateOrbit { t });
    }
    Ok(jacobian(al, be, a, p.omega10))
}

fn jacobian(al: f64, be: f64, a: f64, om: f64) -> Matrix3<f64> {
    let a2 = al * al;
    Matrix3::new(
        4.0 * al * be, om + 2.0 * a2, 0.0,
        -(om + 6.0 * a2 - 2.0 * a * a), 0.0, 4.0 * al * a,
        -2.0 * be * a, -2.0 * al * a, -2.0 * al * be,
    )
}

#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    pub times: Vec<f64>,
    pub mats: Vec<Matrix3<f64>>,
    pub period: f64,
}

impl FundamentalMatrix {
    pub fn last(&self) -> &Matrix3<f64> {
        self.mats.last().expect("non-empty grid")
    }
}

/// Solves `Ṁ = B(t) M`, `M(0) = I` on `t_i = i t_end / grid`, `i = 0..=grid`.
pub fn fundamental_matrix_span(
    orb: &ExactOrbit,
    p: &ReducedParams,
    tol: f64,
    t_end: f64,
    grid: usize,
) -> Result<FundamentalMatrix> {
    check_family(orb, p)?;
    if grid == 0 {
        return Err(domain("grid must have at least one interval"));
    }
    let times: Vec<f64> = (0..=grid).map(|i| t_end * i as f64 / grid as f64).collect();
    // Reject degenerate orbits up front rather than inside the integrator.
    for &t in &times {
        linearized_b(orb, p, t)?;
    }
    let om = p.omega10;
    let c = (0.5 * om).sqrt();
    let n = p.n;
    let f = |t: f64, y: &[f64], dy: &mut [f64]| {
        let [q, pp, _, _] = eval_with_rates(orb, om * t);
        let (al, be) = (c * q, c * pp);
        let a = (n - al * al - be * be).max(0.0).sqrt();
        let b = jacobian(al, be, a, om);
        for col in 0..3 {
            for row in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += b[(row, k)] * y[3 * col + k];
                }
                dy[3 * col + row] = acc;
            }
        }
    };
    let id = Matrix3::<f64>::identity();
    let ys = Rkf78::new(tol).integrate_grid(&f, id.as_slice(), &times)?;
    let mats = ys.iter().map(|y| Matrix3::from_column_slice(y)).collect();
    Ok(FundamentalMatrix { times, mats, period: orb.period_t(om) })
}

pub fn fundamental_matrix(
    orb: &ExactOrbit,
    p: &ReducedParams,
    tol: f64,
    grid: usize,
) -> Result<FundamentalMatrix> {
    fundamental_matrix_span(orb, p, tol, orb.period_t(p.omega10), grid)
}

pub fn spectral_norm(m: &Matrix3<f64>) -> f64 {
    m.singular_values().max()
}

#[derive(Debug, Clone, Copy)]
pub struct FloquetOptions {
    pub tol: f64,
    pub grid: usize,
    /// Constant `C` in the bound `sup ‖M(t)M(s)⁻¹‖ ≤ C |σ|^{(γ-1)/2}`.
    pub bound_c: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        FloquetOptions { tol: 1e-14, grid: 128, bound_c: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct MonodromyReport {
    pub eigenvalues: [Complex<f64>; 3],
    pub max_eig_deviation: f64,
    pub det: f64,
    /// Singular values of `M(T) - I`, descending.
    pub singular_values: [f64; 3],
    pub rank: usize,
    pub geometric_multiplicity: usize,
    /// `‖(M(T) - I)²‖ / ‖M(T) - I‖²`, zero for a Jordan block of size two.
    pub nilpotency: f64,
    /// `∫₀ᵀ α β dt`.
    pub int_alpha_beta: f64,
    /// Largest `‖M(t)‖` on the grid, a measure of secular growth.
    pub growth: f64,
    pub h2: H2Report,
    pub period: f64,
}

pub const ANOMALY_THRESHOLD: f64 = 1e-4;

pub fn monodromy(orb: &ExactOrbit, p: &ReducedParams, opts: &FloquetOptions) -> Result<MonodromyReport> {
    let fm = fundamental_matrix(orb, p, opts.tol, opts.grid)?;
    monodromy_from(&fm, orb, p, opts)
}

pub fn monodromy_from(
    fm: &FundamentalMatrix,
    orb: &ExactOrbit,
    p: &ReducedParams,
    opts: &FloquetOptions,
) -> Result<MonodromyReport> {
    let m = *fm.last();
    let ev = m.complex_eigenvalues();
    let eigenvalues = [ev[0], ev[1], ev[2]];
    let max_eig_deviation = eigenvalues.iter().map(|z| (z - Complex::new(1.0, 0.0)).norm()).fold(0.0, f64::max);
    if max_eig_deviation > ANOMALY_THRESHOLD {
        return Err(Error::FloquetAnomaly { deviation: max_eig_deviation });
    }
    let n = m - Matrix3::identity();
    let sv = n.singular_values();
    let mut singular_values = [sv[0], sv[1], sv[2]];
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let thresh = 1e-6 * spectral_norm(&m);
    let rank = singular_values.iter().filter(|&&s| s > thresh).count();
    let nn = spectral_norm(&n);
    let nilpotency = if nn > 0.0 { spectral_norm(&(n * n)) / (nn * nn) } else { 0.0 };
    let c = (0.5 * p.omega10).sqrt();
    let ab: Vec<f64> = fm
        .times
        .iter()
        .map(|&t| {
            let [q, pp, _, _] = eval_with_rates(orb, p.omega10 * t);
            c * c * q * pp
        })
        .collect();
    let dt = fm.period / (fm.times.len() - 1) as f64;
    let int_alpha_beta = dt * (ab.iter().sum::<f64>() - 0.5 * (ab[0] + ab[ab.len() - 1]));
    let growth = fm.mats.iter().map(spectral_norm).fold(0.0, f64::max);
    Ok(MonodromyReport {
        eigenvalues,
        max_eig_deviation,
        det: m.determinant(),
        singular_values,
        rank,
        geometric_multiplicity: 3 - rank,
        nilpotency,
        int_alpha_beta,
        growth,
        h2: h2_diagnostic(fm, orb, p, opts.bound_c)?,
        period: fm.period,
    })
}

#[derive(Debug, Clone)]
pub struct H2Report {
    pub sup_norm: f64,
    /// `sup_norm / |σ|^{(γ-1)/2}`.
    pub bound_ratio: f64,
    pub bound_c: f64,
    pub within_bound: bool,
    pub arg_sup: (f64, f64),
    /// Magnitudes of the coefficients that drive the growth, by name.
    pub terms: Vec<(String, f64)>,
}

/// `sup_{s,t} ‖M(t) M(s)⁻¹‖` over the grid of `fm`.
pub fn h2_diagnostic(
    fm: &FundamentalMatrix,
    orb: &ExactOrbit,
    p: &ReducedParams,
    bound_c: f64,
) -> Result<H2Report> {
    let inv: Vec<Matrix3<f64>> = fm
        .mats
        .iter()
        .map(|m| m.try_inverse().ok_or_else(|| Error::InternalConsistency("singular fundamental matrix".into())))
        .collect::<Result<_>>()?;
    let idx: Vec<usize> = (0..fm.mats.len()).collect();
    let rows = par::map(&idx, |&i| {
        let mut best = (0.0, 0usize);
        for (j, mi) in inv.iter().enumerate() {
            let v = spectral_norm(&(fm.mats[i] * mi));
            if v > best.0 {
                best = (v, j);
            }
        }
        best
    });
    let (mut sup_norm, mut arg) = (0.0, (0.0, 0.0));
    for (i, &(v, j)) in rows.iter().enumerate() {
        if v > sup_norm {
            sup_norm = v;
            arg = (fm.times[j], fm.times[i]);
        }
    }
    let scale = p.sigma.abs().powf(0.5 * (p.gamma - 1.0));
    let bound_ratio = sup_norm / scale;
    Ok(H2Report {
        sup_norm,
        bound_ratio,
        bound_c,
        within_bound: bound_ratio <= bound_c,
        arg_sup: arg,
        terms: growth_terms(orb, p)?,
    })
}

fn growth_terms(orb: &ExactOrbit, p: &ReducedParams) -> Result<Vec<(String, f64)>> {
    let h = 1e-6;
    let d = |f: &dyn Fn(&ExactOrbit) -> f64, dq: f64, dz: f64| -> Result<f64> {
        let plus = build(orb.q0 + dq, orb.zeta + dz)?;
        let minus = build(orb.q0 - dq, orb.zeta - dz)?;
        Ok((f(&plus) - f(&minus)) / (2.0 * (dq + dz)))
    };
    let k_of = |o: &ExactOrbit| o.k;
    let w_of = |o: &ExactOrbit| o.omega;
    let dk_dq = d(&k_of, h, 0.0)?;
    let dk_dz = d(&k_of, 0.0, h)?;
    let dw_dq = d(&w_of, h, 0.0)?;
    let dw_dz = d(&w_of, 0.0, h)?;
    let kk = complete_k(orb.k)?;
    let dkk = if orb.k > 0.0 { dk_dk(orb.k)? } else { 0.0 };
    let om = p.omega10;
    let s = om.sqrt() * orb.q0.abs();
    let t = orb.period_t(om);
    let kinv = if orb.k > 0.0 { 1.0 / orb.k } else { 0.0 };
    Ok(vec![
        ("sqrt(Omega) q0 / T".into(), s / t),
        ("sqrt(Omega) q0 |dk/dzeta| / k".into(), s * dk_dz.abs() * kinv),
        ("sqrt(Omega) q0 |dK/dk dk/dzeta| / K".into(), s * (dkk * dk_dz).abs() / kk),
        ("sqrt(Omega) q0 |dk/dq0| / k".into(), s * dk_dq.abs() * kinv),
        ("sqrt(Omega) q0 |dK/dk dk/dq0| / K".into(), s * (dkk * dk_dq).abs() / kk),
        ("Omega^(3/2) q0 T |domega/dq0| / K".into(), om * s * t * dw_dq.abs() / kk),
        ("Omega^(3/2) q0 T |domega/dzeta| / K".into(), om * s * t * dw_dz.abs() / kk),
    ])
}

#[derive(Debug, Clone)]
pub struct DerivativeFundamental {
    pub times: Vec<f64>,
    /// Columns `[∂_{q0} χ, ∂_t χ, ∂_ζ χ]`.
    pub columns: Vec<Matrix3<f64>>,
    /// `M̃(t) M̃(0)⁻¹`, which must equal the integrated fundamental matrix.
    pub renormalized: Vec<Matrix3<f64>>,
    pub cond0: f64,
}

pub const RENORM_COND_LIMIT: f64 = 1e12;

fn chi_rate(orb: &ExactOrbit, p: &ReducedParams, t: f64) -> Result<Vector3<f64>> {
    let c = (0.5 * p.omega10).sqrt();
    let [q, pp, dq, dp] = eval_with_rates(orb, p.omega10 * t);
    let (al, be) = (c * q, c * pp);
    let (dal, dbe) = (c * p.omega10 * dq, c * p.omega10 * dp);
    let a = crate::reduced::amplitude_from_invariant(al, be, p.n)?;
    if a <= 0.0 {
        return Err(Error::DegenerateOrbit { t });
    }
    Ok(Vector3::new(dal, dbe, -(al * dal + be * dbe) / a))
}

/// Derivatives of the orbit family with respect to its start `q0`, time and
/// `ζ` (at fixed `Ω₁₀`) on `t_i = i t_end / grid`. `h` is the relative
/// difference step.
pub fn derivative_fundamental(
    orb: &ExactOrbit,
    p: &ReducedParams,
    h: f64,
    t_end: f64,
    grid: usize,
) -> Result<DerivativeFundamental> {
    check_family(orb, p)?;
    let hq = h * orb.q0.abs().max(1e-3);
    let hz = h * orb.zeta.abs().max(1e-3);
    let om = p.omega10;
    let qp = build(orb.q0 + hq, orb.zeta)?;
    let qm = build(orb.q0 - hq, orb.zeta)?;
    let zp = build(orb.q0, orb.zeta + hz)?;
    let zm = build(orb.q0, orb.zeta - hz)?;
    let pzp = ReducedParams::from_zeta(om, orb.zeta + hz)?;
    let pzm = ReducedParams::from_zeta(om, orb.zeta - hz)?;
    let times: Vec<f64> = (0..=grid).map(|i| t_end * i as f64 / grid.max(1) as f64).collect();
    let mut columns = Vec::with_capacity(times.len());
    for &t in &times {
        let v = |o: &ExactOrbit, pp: &ReducedParams| chi(o, pp, t).map(|x| Vector3::from(x));
        let dq = (v(&qp, p)? - v(&qm, p)?) / (2.0 * hq);
        let dz = (v(&zp, &pzp)? - v(&zm, &pzm)?) / (2.0 * hz);
        let dt = chi_rate(orb, p, t)?;
        columns.push(Matrix3::from_columns(&[dq, dt, dz]));
    }
    let m0 = columns[0];
    let sv = m0.singular_values();
    let cond0 = sv.max() / sv.min();
    if !(cond0 < RENORM_COND_LIMIT) {
        return Err(Error::Renormalization(format!("condition number {cond0:e} of the initial derivative matrix")));
    }
    let inv0 = m0.try_inverse().ok_or_else(|| Error::Renormalization("singular initial derivative matrix".into()))?;
    let renormalized = columns.iter().map(|m| m * inv0).collect();
    Ok(DerivativeFundamental { times, columns, renormalized, cond0 })
}

/// `δϑ(t) = ∫₀ᵗ (2A δA + 6α δα + 2β δβ) ds` by the trapezoid rule, with
/// `dchi` the variations `(δα, δβ, δA)` on `times`.
pub fn theta_variation(
    orb: &ExactOrbit,
    p: &ReducedParams,
    times: &[f64],
    dchi: &[[f64; 3]],
) -> Result<Vec<f64>> {
    if times.len() != dchi.len() {
        return Err(Error::Grid(format!("{} times but {} variations", times.len(), dchi.len())));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (&t, d) in times.iter().zip(dchi) {
        let [al, be, a] = chi(orb, p, t)?;
        let g = 2.0 * a * d[2] + 6.0 * al * d[0] + 2.0 * be * d[1];
        if let Some((tp, gp)) = prev {
            acc += 0.5 * (t - tp) * (g + gp);
        }
        out.push(acc);
        prev = Some((t, g));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::Regime;

    fn setup(q0_factor: f64) -> (ExactOrbit, ReducedParams) {
        let p = ReducedParams::from_scaling(1e-3, 0.8, Regime::Supercritical).unwrap();
        let q0 = q0_factor * (1.5 * p.zeta).sqrt();
        (build(q0, p.zeta).unwrap(), p)
    }

    #[test]
    fn jacobian_matches_difference_quotient() {
        let om = 0.3;
        let (al, be, a) = (0.11, -0.07, 0.4);
        let f = |x: [f64; 3]| {
            let s = crate::reduced::StateAba { alpha: x[0], beta: x[1], a: x[2], theta: 0.0 };
            let d = crate::reduced::vector_field(&s, om, 0.0);
            [d.alpha, d.beta, d.a]
        };
        let b = jacobian(al, be, a, om);
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = [al, be, a];
            let mut xm = xp;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (f(xp), f(xm));
            for i in 0..3 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - b[(i, j)]).abs() < 1e-8, "entry ({i},{j})");
            }
        }
        assert!((b.trace() - 2.0 * al * be).abs() < 1e-15);
    }

    #[test]
    fn monodromy_is_unipotent_jordan() {
        let (orb, p) = setup(1.3);
        let r = monodromy(&orb, &p, &FloquetOptions::default()).unwrap();
        assert!(r.max_eig_deviation < 1e-6, "{:e}", r.max_eig_deviation);
        assert!((r.det - 1.0).abs() < 1e-9);
        assert_eq!(r.geometric_multiplicity, 2);
        assert!(r.nilpotency < 1e-6);
        assert!(r.int_alpha_beta.abs() < 1e-12);
    }

    #[test]
    fn family_derivatives_reproduce_fundamental_matrix() {
        let (orb, p) = setup(1.1);
        let t_end = orb.period_t(p.omega10);
        let fm = fundamental_matrix(&orb, &p, 1e-13, 32).unwrap();
        let dm = derivative_fundamental(&orb, &p, 1e-5, t_end, 32).unwrap();
        for (a, b) in fm.mats.iter().zip(&dm.renormalized) {
            assert!((a - b).norm() < 1e-6 * a.norm(), "{}", (a - b).norm());
        }
    }

    #[test]
    fn time_column_is_periodic() {
        let (orb, p) = setup(1.2);
        let t = orb.period_t(p.omega10);
        let dm = derivative_fundamental(&orb, &p, 1e-5, 2.0 * t, 2).unwrap();
        let d0 = dm.columns[0].column(1).into_owned();
        let d2 = dm.columns[2].column(1).into_owned();
        assert!((d0 - d2).norm() < 1e-10 * d0.norm());
        let g0 = dm.columns[0].column(0).norm();
        let g2 = dm.columns[2].column(0).norm();
        assert!(g2 > 2.0 * g0);
    }

    #[test]
    fn theta_variation_checks_lengths() {
        let (orb, p) = setup(1.2);
        assert!(matches!(theta_variation(&orb, &p, &[0.0, 1.0], &[[0.0; 3]]), Err(Error::Grid(_))));
        let v = theta_variation(&orb, &p, &[0.0, 1.0, 2.0], &[[0.0; 3]; 3]).unwrap();
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn mismatched_family_is_rejected() {
        let (orb, _) = setup(1.2);
        let other = ReducedParams::from_zeta(0.1, orb.zeta + 0.1).unwrap();
        assert!(fundamental_matrix(&orb, &other, 1e-12, 8).is_err());
    }
}
