//! Parameter sweeps over `(σ, γ, q₀, ℓ)` with per-row failure capture and
//! log-log scaling fits.

use crate::error::{domain, Result};
use crate::floquet::{monodromy, FloquetOptions};
use crate::orbits::{build, period_scaling_check};
use crate::par;
use crate::pde::{shadow_run, ShadowOptions};
use crate::reduced::{ReducedParams, Regime};
use crate::spectral::{eigensolve, linear_fit, ModeBasis, PotentialSpec};
use std::collections::BTreeMap;

/// One grid point. `q0_factor` multiplies the reference amplitude
/// `sqrt(3|ζ|/2)`, so a fixed factor follows the same orbit family as `σ`
/// shrinks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub gamma: f64,
    pub q0_factor: f64,
    pub ell: f64,
}

impl SweepPoint {
    /// Ordered by ℓ, γ, q₀ factor, then decreasing σ.
    fn cmp_key(&self, o: &SweepPoint) -> std::cmp::Ordering {
        self.ell
            .total_cmp(&o.ell)
            .then(self.gamma.total_cmp(&o.gamma))
            .then(self.q0_factor.total_cmp(&o.q0_factor))
            .then(o.sigma.total_cmp(&self.sigma))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub regime: Regime,
    pub period_bound: f64,
    pub floquet: Option<FloquetOptions>,
    /// Runs the NLS shadowing experiment per point when set.
    pub shadow: Option<ShadowOptions>,
    pub grid_n: usize,
    pub grid_l: f64,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            regime: Regime::Supercritical,
            period_bound: 10.0,
            floquet: Some(FloquetOptions::default()),
            shadow: None,
            grid_n: 512,
            grid_l: 26.0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub zeta: f64,
    pub omega10: f64,
    pub q0: f64,
    pub class: String,
    pub period_t: f64,
    pub period_ratio: f64,
    pub max_eig_deviation: f64,
    pub h2_sup: f64,
    pub bound_ratio: f64,
    pub sup_error: f64,
    pub shadow_ratio: f64,
    /// Failure message; the numeric fields after the failing stage are NaN.
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(point: SweepPoint) -> SweepRow {
        SweepRow {
            point,
            zeta: f64::NAN,
            omega10: f64::NAN,
            q0: f64::NAN,
            class: String::new(),
            period_t: f64::NAN,
            period_ratio: f64::NAN,
            max_eig_deviation: f64::NAN,
            h2_sup: f64::NAN,
            bound_ratio: f64::NAN,
            sup_error: f64::NAN,
            shadow_ratio: f64::NAN,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub gamma: f64,
    pub q0_factor: f64,
    pub ell: f64,
    /// `"period"` or `"h2"`.
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub fits: Vec<ScalingFit>,
}

fn run_point(pt: &SweepPoint, opts: &SweepOptions, bases: &BTreeMap<u64, std::result::Result<ModeBasis, String>>) -> SweepRow {
    let mut row = SweepRow::empty(*pt);
    if let Err(e) = fill_row(&mut row, pt, opts, bases) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_row(
    row: &mut SweepRow,
    pt: &SweepPoint,
    opts: &SweepOptions,
    bases: &BTreeMap<u64, std::result::Result<ModeBasis, String>>,
) -> Result<()> {
    let p = ReducedParams::from_scaling(pt.sigma, pt.gamma, opts.regime)?;
    row.zeta = p.zeta;
    row.omega10 = p.omega10;
    let q0 = pt.q0_factor * (1.5 * p.zeta.abs()).sqrt();
    row.q0 = q0;
    let orb = build(q0, p.zeta)?;
    row.class = orb.class.name().to_string();
    let pc = period_scaling_check(&p, &orb, opts.period_bound);
    row.period_t = pc.period_t;
    row.period_ratio = pc.ratio;
    if let Some(fo) = &opts.floquet {
        let m = monodromy(&orb, &p, fo)?;
        row.max_eig_deviation = m.max_eig_deviation;
        row.h2_sup = m.h2.sup_norm;
        row.bound_ratio = m.h2.bound_ratio;
    }
    if let Some(so) = &opts.shadow {
        let basis = match bases.get(&pt.ell.to_bits()) {
            Some(Ok(b)) => b,
            Some(Err(e)) => return Err(domain(e.clone())),
            None => return Err(domain(format!("no basis for ell = {}", pt.ell))),
        };
        // Same ζ on the basis's own splitting: the orbit in (q, p) is unchanged.
        let ps = ReducedParams::from_zeta(basis.omega10(), p.zeta)?.with_gamma(p.gamma);
        let r = shadow_run(&orb, &ps, basis, so)?;
        row.sup_error = r.sup_error;
        row.shadow_ratio = r.ratio;
        r.check()?;
    }
    Ok(())
}

/// Fits `log y` against `log σ` per `(γ, q₀ factor, ℓ)` group over rows
/// without errors; groups with fewer than two points are skipped.
pub fn scaling_fits(rows: &[SweepRow]) -> Vec<ScalingFit> {
    let mut groups: BTreeMap<(u64, u64, u64), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        groups.entry((r.point.ell.to_bits(), r.point.gamma.to_bits(), r.point.q0_factor.to_bits())).or_default().push(r);
    }
    let mut fits = Vec::new();
    for rs in groups.values() {
        let pt = rs[0].point;
        for (name, get) in [("period", (|r: &SweepRow| r.period_t) as fn(&SweepRow) -> f64), ("h2", |r: &SweepRow| r.h2_sup)] {
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                rs.iter().filter(|r| get(r) > 0.0).map(|r| (r.point.sigma.ln(), get(r).ln())).unzip();
            if xs.len() < 2 {
                continue;
            }
            let (slope, intercept, r2) = linear_fit(&xs, &ys);
            fits.push(ScalingFit {
                gamma: pt.gamma,
                q0_factor: pt.q0_factor,
                ell: pt.ell,
                quantity: name.to_string(),
                slope,
                intercept,
                r2,
                points: xs.len(),
            });
        }
    }
    fits
}

/// Runs every point, concurrently when `opts.parallel` and the `parallel`
/// feature are both on. Rows come back sorted by grid key regardless.
pub fn run(points: &[SweepPoint], opts: &SweepOptions) -> SweepResult {
    let mut bases = BTreeMap::new();
    if opts.shadow.is_some() {
        let mut ells: Vec<f64> = points.iter().map(|p| p.ell).collect();
        ells.sort_by(f64::total_cmp);
        ells.dedup();
        let solve = |&ell: &f64| {
            eigensolve(&PotentialSpec::poschl_teller(ell), opts.grid_l, opts.grid_n, 2).map_err(|e| e.to_string())
        };
        let solved = if opts.parallel { par::map(&ells, solve) } else { par::map_sequential(&ells, solve) };
        bases = ells.iter().map(|e| e.to_bits()).zip(solved).collect();
    }
    let f = |pt: &SweepPoint| run_point(pt, opts, &bases);
    let mut rows = if opts.parallel { par::map(points, f) } else { par::map_sequential(points, f) };
    rows.sort_by(|a, b| a.point.cmp_key(&b.point));
    let fits = scaling_fits(&rows);
    SweepResult { rows, fits }
}

pub const CSV_HEADER: &str = "sigma,gamma,q0_factor,ell,zeta,omega10,q0,class,period_t,period_ratio,max_eig_deviation,h2_sup,bound_ratio,sup_error,shadow_ratio,error";

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepRow {
    pub fn csv(&self) -> String {
        let p = &self.point;
        let nums = [
            p.sigma,
            p.gamma,
            p.q0_factor,
            p.ell,
            self.zeta,
            self.omega10,
            self.q0,
        ];
        let tail = [
            self.period_t,
            self.period_ratio,
            self.max_eig_deviation,
            self.h2_sup,
            self.bound_ratio,
            self.sup_error,
            self.shadow_ratio,
        ];
        let err = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        format!(
            "{},{},{},{}",
            nums.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(","),
            self.class,
            tail.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(","),
            err
        )
    }
}

pub fn to_csv(res: &SweepResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &res.rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

/// Cartesian product in the order given.
pub fn grid(sigmas: &[f64], gammas: &[f64], q0_factors: &[f64], ells: &[f64]) -> Vec<SweepPoint> {
    let mut v = Vec::new();
    for &ell in ells {
        for &gamma in gammas {
            for &q0_factor in q0_factors {
                for &sigma in sigmas {
                    v.push(SweepPoint { sigma, gamma, q0_factor, ell });
                }
            }
        }
    }
    v
}
