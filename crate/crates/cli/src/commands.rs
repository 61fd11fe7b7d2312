//! Subcommands: each maps a resolved [`Config`] to one text artifact.

use crate::config::{CliError, CliResult, Config, KeySpec};
use dwlab::elliptic::{complete_e, complete_k, jacobi};
use dwlab::floquet::{derivative_fundamental, fundamental_matrix, monodromy_from, FloquetOptions, ANOMALY_THRESHOLD, RENORM_COND_LIMIT};
use dwlab::normal_form::{hdw_polynomial, normalize, render};
use dwlab::orbits::{amplitude_report, build, chi, classify, classify_state, eval, ExactOrbit};
use dwlab::pde::{shadow_run, ShadowOptions};
use dwlab::reduced::{fixed_points, hamiltonian_qp, return_time_qp, vector_field_qp, FixedPointKind, ReducedParams, Regime};
use dwlab::spectral::{eigensolve, overlap_integrals, Parity, PotentialSpec, WellKind};
use dwlab::sweep::{self, SweepOptions};
use dwlab::par;
use serde_json::{json, Value};

pub struct Output {
    pub text: String,
    /// Reported after the artifact is written.
    pub failure: Option<CliError>,
}

impl From<String> for Output {
    fn from(text: String) -> Self {
        Output { text, failure: None }
    }
}

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [KeySpec],
    pub run: fn(&Config) -> CliResult<Output>,
}

pub const COMMANDS: &[Command] = &[
    Command { name: "eigs", about: "Lowest eigenpairs of the single or double well", keys: EIGS, run: eigs },
    Command { name: "orbit", about: "Sample one exact periodic orbit", keys: ORBIT, run: orbit },
    Command { name: "orbit-scan", about: "Classify orbits and compare closed-form and integrated periods", keys: SCAN, run: orbit_scan },
    Command { name: "phase-portrait", about: "Energy, vector field and orbit class on a (q, p) grid", keys: PORTRAIT, run: phase_portrait },
    Command { name: "floquet", about: "Monodromy and fundamental-matrix bound along an orbit", keys: FLOQUET, run: floquet },
    Command { name: "pde-shadow", about: "NLS run against the two-mode ODE and the exact orbit", keys: SHADOW, run: pde_shadow },
    Command { name: "normalform", about: "Exact Lie-transform normal form of the double-well Hamiltonian", keys: NORMALFORM, run: normalform },
    Command { name: "elliptic-table", about: "Table of sn, cn, dn at one modulus", keys: ELLIPTIC, run: elliptic_table },
    Command { name: "sweep", about: "Period, bound and shadowing diagnostics over a parameter grid", keys: SWEEP, run: sweep_cmd },
];

const EIGS: &[KeySpec] = &[
    ("well", "poschl-teller", "poschl-teller, gaussian or square"),
    ("depth", "2", "well depth"),
    ("width", "1", "well width"),
    ("ell", "6", "half-separation of the wells"),
    ("single", "false", "single well at the origin"),
    ("l", "26", "box half-width"),
    ("n", "512", "grid points"),
    ("modes", "2", "number of modes"),
    ("format", "json", "json or csv (grid table)"),
];

const ORBIT: &[KeySpec] = &[
    ("zeta", "0.2", "zeta = -sigma / Omega10"),
    ("q0", "0.8", "starting amplitude q(0), p(0) = 0"),
    ("omega10", "1", "linear splitting Omega10"),
    ("samples", "256", "samples per window"),
    ("periods", "1", "window length in periods"),
    ("format", "csv", "csv or json (summary)"),
];

const SCAN: &[KeySpec] = &[
    ("zeta", "0.2", "zeta = -sigma / Omega10"),
    ("q0_min", "0.05", "first q0"),
    ("q0_max", "1.2", "last q0"),
    ("count", "24", "number of q0 values"),
    ("tol", "1e-12", "integrator tolerance for the return time"),
];

const PORTRAIT: &[KeySpec] = &[
    ("zeta", "0.2", "zeta = -sigma / Omega10"),
    ("q_max", "1.5", "grid spans [-q_max, q_max]"),
    ("p_max", "1", "grid spans [-p_max, p_max]"),
    ("nq", "41", "grid points in q"),
    ("np", "41", "grid points in p"),
];

const FLOQUET: &[KeySpec] = &[
    ("sigma", "1e-2", "distance from the bifurcation"),
    ("gamma", "0.8", "scaling exponent, N_cr = sigma^gamma"),
    ("regime", "supercritical", "supercritical or subcritical"),
    ("q0_factor", "1.2", "q0 in units of sqrt(3|zeta|/2)"),
    ("tol", "1e-14", "integrator tolerance"),
    ("grid", "128", "time grid intervals per period"),
    ("bound_c", "10", "constant C of the fundamental-matrix bound"),
    ("cross_check", "true", "compare with the orbit-family derivative matrix"),
    ("h_rel", "1e-5", "relative difference step of the derivative matrix"),
];

const SHADOW: &[KeySpec] = &[
    ("ell", "6", "half-separation of the Poschl-Teller wells"),
    ("sigma", "1e-2", "distance from the bifurcation"),
    ("gamma", "0.8", "scaling exponent"),
    ("regime", "supercritical", "supercritical or subcritical"),
    ("q0_factor", "1.2", "q0 in units of sqrt(3|zeta|/2)"),
    ("n", "512", "grid points"),
    ("l", "26", "box half-width"),
    ("dt", "0.1", "split-step time step"),
    ("periods", "3", "window in orbit periods, or 'auto' for T sigma^-eps"),
    ("eps", "0", "window exponent used when periods = auto"),
    ("g", "-1", "nonlinear coefficient (focusing, negative)"),
    ("samples_per_period", "64", "diagnostic samples per period"),
    ("ode_tol", "1e-12", "two-mode ODE tolerance"),
    ("propagator_basis", "true", "shadow in the eigenmodes of the discrete linear step"),
    ("series", "false", "include the sampled series"),
];

const NORMALFORM: &[KeySpec] = &[("order", "8", "truncation order r <= 12")];

const ELLIPTIC: &[KeySpec] = &[
    ("k", "0.5", "modulus"),
    ("count", "33", "number of z values"),
    ("z_max", "auto", "last z, or auto for 4K(k)"),
];

const SWEEP: &[KeySpec] = &[
    ("sigmas", "1e-2,1e-3,1e-4", "comma-separated sigma values"),
    ("gammas", "0.8", "comma-separated gamma values"),
    ("q0_factors", "1.2", "comma-separated q0 factors"),
    ("ells", "6", "comma-separated well separations (used by shadowing)"),
    ("regime", "supercritical", "supercritical or subcritical"),
    ("period_bound", "10", "bound on T_t sigma^((1+gamma)/2)"),
    ("floquet", "true", "run the monodromy and bound diagnostics"),
    ("tol", "1e-12", "Floquet integrator tolerance"),
    ("grid", "64", "Floquet time grid intervals"),
    ("bound_c", "10", "constant C of the fundamental-matrix bound"),
    ("shadow", "false", "run the NLS shadowing experiment per point"),
    ("dt", "0.1", "split-step time step"),
    ("periods", "3", "shadowing window in periods"),
    ("n", "512", "grid points"),
    ("l", "26", "box half-width"),
    ("parallel", "true", "run points concurrently"),
];

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(xs: &[f64]) -> String {
    xs.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(",")
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn json_text(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn envelope(cfg: &Config, body: Value) -> Value {
    let mut v = json!({ "command": cfg.command, "version": dwlab::VERSION, "config": cfg.json() });
    if let (Value::Object(a), Value::Object(b)) = (&mut v, body) {
        a.extend(b);
    }
    v
}

fn regime(cfg: &Config) -> CliResult<Regime> {
    match cfg.str("regime") {
        "supercritical" => Ok(Regime::Supercritical),
        "subcritical" => Ok(Regime::Subcritical),
        s => Err(usage(format!("regime = '{s}' is not supercritical or subcritical"))),
    }
}

fn format_of<'a>(cfg: &'a Config, allowed: &[&str]) -> CliResult<&'a str> {
    let f = cfg.str("format");
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!("format = '{f}' is not one of {}", allowed.join(", "))))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Scaling-family parameters and the orbit at `q0 = factor sqrt(3|ζ|/2)`.
fn scaled_orbit(cfg: &Config) -> CliResult<(ReducedParams, ExactOrbit)> {
    let p = ReducedParams::from_scaling(cfg.f64("sigma")?, cfg.f64("gamma")?, regime(cfg)?)?;
    let q0 = cfg.f64("q0_factor")? * (1.5 * p.zeta.abs()).sqrt();
    Ok((p, build(q0, p.zeta)?))
}

fn orbit_json(orb: &ExactOrbit, p: &ReducedParams) -> Value {
    json!({
        "class": orb.class.name(),
        "q0": orb.q0,
        "zeta": orb.zeta,
        "k": orb.k,
        "omega": orb.omega,
        "t_tau": orb.t_tau,
        "period_t": orb.period_t(p.omega10),
        "amplitude": orb.amplitude,
        "omega10": p.omega10,
        "n": p.n,
        "sigma": p.sigma,
    })
}

fn eigs(cfg: &Config) -> CliResult<Output> {
    let format = format_of(cfg, &["json", "csv"])?;
    let kind = WellKind::parse(cfg.str("well")).ok_or_else(|| usage(format!("unknown well '{}'", cfg.str("well"))))?;
    let spec = PotentialSpec {
        kind,
        depth: cfg.f64("depth")?,
        width: cfg.f64("width")?,
        ell: cfg.f64("ell")?,
        single: cfg.bool("single")?,
    };
    let spec = if spec.single { spec.single_well() } else { spec };
    let basis = eigensolve(&spec, cfg.f64("l")?, cfg.usize("n")?, cfg.usize("modes")?)?;
    if format == "csv" {
        let mut s = cfg.comment_block();
        let names: Vec<String> = (0..basis.modes.len()).map(|j| format!("psi{j}")).collect();
        s.push_str(&format!("x,V,{}\n", names.join(",")));
        for (j, &x) in basis.grid.x.iter().enumerate() {
            let mut r = vec![x, basis.potential[j]];
            r.extend(basis.modes.iter().map(|m| m.psi[j]));
            s.push_str(&row(&r));
            s.push('\n');
        }
        return Ok(s.into());
    }
    let parity = |p: Parity| match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    };
    let two = basis.modes.len() >= 2;
    let o = two.then(|| overlap_integrals(&basis));
    Ok(json_text(envelope(
        cfg,
        json!({
            "eigenvalues": basis.modes.iter().map(|m| m.omega).collect::<Vec<_>>(),
            "parities": basis.modes.iter().map(|m| parity(m.parity)).collect::<Vec<_>>(),
            "omega10": two.then(|| basis.omega10()),
            "parity_residual": basis.parity_residual(),
            "overlaps": o.map(|o| json!({ "i00": o.i00, "i01": o.i01, "i11": o.i11 })),
            "grid": { "n": basis.grid.n, "l": basis.grid.l, "dx": basis.grid.dx },
            "fd_order": basis.fd_order,
        }),
    ))
    .into())
}

fn orbit(cfg: &Config) -> CliResult<Output> {
    let format = format_of(cfg, &["csv", "json"])?;
    let p = ReducedParams::from_zeta(cfg.f64("omega10")?, cfg.f64("zeta")?)?;
    let orb = build(cfg.f64("q0")?, p.zeta)?;
    if format == "json" {
        let a = amplitude_report(&orb, &p)?;
        let mut v = orbit_json(&orb, &p);
        v["amplitudes"] = json!({
            "max_abs_alpha": a.max_abs_alpha,
            "max_abs_beta": a.max_abs_beta,
            "min_a": a.min_a,
            "max_a": a.max_a,
            "mode_ratio": a.mode_ratio,
            "condensate_fraction": a.condensate_fraction,
        });
        return Ok(json_text(envelope(cfg, json!({ "orbit": v }))).into());
    }
    let samples = cfg.usize("samples")?;
    if samples == 0 {
        return Err(usage("samples must be positive"));
    }
    let t_end = cfg.f64("periods")? * orb.period_t(p.omega10);
    let mut s = cfg.comment_block();
    s.push_str(&format!("# class = {}\n", orb.class.name()));
    s.push_str("tau,t,q,p,alpha,beta,a\n");
    for t in linspace(0.0, t_end, samples + 1) {
        let (q, pp) = eval(&orb, p.omega10 * t);
        let [al, be, a] = chi(&orb, &p, t)?;
        s.push_str(&row(&[p.omega10 * t, t, q, pp, al, be, a]));
        s.push('\n');
    }
    Ok(s.into())
}

fn orbit_scan(cfg: &Config) -> CliResult<Output> {
    let zeta = cfg.f64("zeta")?;
    let tol = cfg.f64("tol")?;
    let q0s = linspace(cfg.f64("q0_min")?, cfg.f64("q0_max")?, cfg.usize("count")?);
    let rows = par::map(&q0s, |&q0| {
        let class = classify(q0, zeta);
        let nan = f64::NAN;
        match build(q0, zeta) {
            Ok(o) => {
                let t_ret = return_time_qp(q0, zeta, tol, 1.5 * o.t_tau).unwrap_or(nan);
                let err = (t_ret - o.t_tau).abs() / o.t_tau;
                format!("{},{},{}\n", sci(q0), class.name(), row(&[o.k, o.omega, o.t_tau, t_ret, err]))
            }
            Err(_) => format!("{},{},{}\n", sci(q0), class.name(), row(&[nan; 5])),
        }
    });
    let mut s = cfg.comment_block();
    s.push_str("q0,class,k,omega,t_tau,t_return,rel_err\n");
    s.extend(rows);
    Ok(s.into())
}

fn phase_portrait(cfg: &Config) -> CliResult<Output> {
    let zeta = cfg.f64("zeta")?;
    let (nq, np) = (cfg.usize("nq")?, cfg.usize("np")?);
    let qs = linspace(-cfg.f64("q_max")?, cfg.f64("q_max")?, nq);
    let ps = linspace(-cfg.f64("p_max")?, cfg.f64("p_max")?, np);
    let mut s = cfg.comment_block();
    let fp = fixed_points(&ReducedParams::from_zeta(1.0, zeta)?);
    for f in fp {
        let kind = match f.kind {
            FixedPointKind::Center => "center",
            FixedPointKind::Saddle => "saddle",
            FixedPointKind::Degenerate => "degenerate",
        };
        s.push_str(&format!("# fixed point {kind} q = {} p = {}\n", sci(f.q), sci(f.p)));
    }
    s.push_str("q,p,h,dq,dp,class\n");
    for &q in &qs {
        for &p in &ps {
            let (dq, dp) = vector_field_qp(q, p, zeta);
            s.push_str(&format!("{},{}\n", row(&[q, p, hamiltonian_qp(q, p, zeta), dq, dp]), classify_state(q, p, zeta).name()));
        }
    }
    Ok(s.into())
}

fn floquet(cfg: &Config) -> CliResult<Output> {
    let (p, orb) = scaled_orbit(cfg)?;
    let opts = FloquetOptions { tol: cfg.f64("tol")?, grid: cfg.usize("grid")?, bound_c: cfg.f64("bound_c")? };
    let fm = fundamental_matrix(&orb, &p, opts.tol, opts.grid)?;
    let r = monodromy_from(&fm, &orb, &p, &opts)?;
    let cross = if cfg.bool("cross_check")? {
        let dm = derivative_fundamental(&orb, &p, cfg.f64("h_rel")?, fm.period, opts.grid)?;
        let sup = fm.mats.iter().zip(&dm.renormalized).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        json!({ "sup_difference": sup, "cond0": dm.cond0 })
    } else {
        Value::Null
    };
    let terms: serde_json::Map<String, Value> = r.h2.terms.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    Ok(json_text(envelope(
        cfg,
        json!({
            "orbit": orbit_json(&orb, &p),
            "tolerances": { "tol": opts.tol, "anomaly_threshold": ANOMALY_THRESHOLD, "renorm_cond_limit": RENORM_COND_LIMIT },
            "eigenvalues": r.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "max_eig_deviation": r.max_eig_deviation,
            "det": r.det,
            "singular_values": r.singular_values,
            "rank": r.rank,
            "geometric_multiplicity": r.geometric_multiplicity,
            "nilpotency": r.nilpotency,
            "int_alpha_beta": r.int_alpha_beta,
            "growth": r.growth,
            "period": r.period,
            "h2": {
                "sup_norm": r.h2.sup_norm,
                "bound_ratio": r.h2.bound_ratio,
                "bound_c": r.h2.bound_c,
                "within_bound": r.h2.within_bound,
                "arg_sup": [r.h2.arg_sup.0, r.h2.arg_sup.1],
                "terms": terms,
            },
            "cross_method": cross,
        }),
    ))
    .into())
}

fn pde_shadow(cfg: &Config) -> CliResult<Output> {
    let (p0, _) = scaled_orbit(cfg)?;
    let n = cfg.usize("n")?;
    let basis = eigensolve(&PotentialSpec::poschl_teller(cfg.f64("ell")?), cfg.f64("l")?, n, 2)?;
    // Same ζ on the well's own splitting; the (q, p) orbit is unchanged.
    let p = ReducedParams::from_zeta(basis.omega10(), p0.zeta)?.with_gamma(p0.gamma);
    let orb = build(cfg.f64("q0_factor")? * (1.5 * p.zeta.abs()).sqrt(), p.zeta)?;
    let periods = match cfg.str("periods") {
        "auto" => None,
        _ => Some(cfg.f64("periods")?),
    };
    let opts = ShadowOptions {
        g: cfg.f64("g")?,
        dt: cfg.f64("dt")?,
        eps: cfg.f64("eps")?,
        periods,
        samples_per_period: cfg.usize("samples_per_period")?,
        ode_tol: cfg.f64("ode_tol")?,
        propagator_basis: cfg.bool("propagator_basis")?,
    };
    let r = shadow_run(&orb, &p, &basis, &opts)?;
    let mut body = json!({
        "orbit": orbit_json(&orb, &p),
        "sigma_scaled": p0.sigma,
        "tolerances": { "ode_tol": opts.ode_tol, "max_power_drift_per_step": dwlab::pde::MAX_POWER_DRIFT_PER_STEP },
        "sup_error": r.sup_error,
        "model_error": r.model_error,
        "amplitude": r.amplitude,
        "ratio": r.ratio,
        "power_drift": r.power_drift,
        "energy_drift": r.energy_drift,
        "growth_exponent": r.growth_exponent,
        "window": [r.window.0, r.window.1],
        "period": r.period,
        "scale": r.scale,
        "overlaps": { "i00": r.overlaps.i00, "i01": r.overlaps.i01, "i11": r.overlaps.i11 },
        "dt": r.dt,
        "steps": r.steps,
        "model_omega10": r.model_omega10,
        "basis_omega10": basis.omega10(),
        "max_residual_h1": r.residual_h1.iter().copied().fold(0.0, f64::max),
        "max_residual_sup": r.residual_sup.iter().copied().fold(0.0, f64::max),
        "lost": r.lost,
    });
    if cfg.bool("series")? {
        body["series"] = json!({
            "t": r.times,
            "orbit": r.orbit_series,
            "ode": r.ode_series,
            "pde": r.pde_series,
            "theta_ode": r.theta_ode,
            "theta_pde": r.theta_pde,
            "residual_h1": r.residual_h1,
        });
    }
    let failure = r.check().err().map(CliError::Run);
    Ok(Output { text: json_text(envelope(cfg, body)), failure })
}

fn normalform(cfg: &Config) -> CliResult<Output> {
    let res = normalize(&hdw_polynomial(), cfg.usize("order")?)?;
    Ok(format!("{}{}", cfg.comment_block(), render(&res)).into())
}

fn elliptic_table(cfg: &Config) -> CliResult<Output> {
    let k = cfg.f64("k")?;
    let kk = complete_k(k)?;
    let z_max = match cfg.str("z_max") {
        "auto" => 4.0 * kk,
        _ => cfg.f64("z_max")?,
    };
    let mut s = cfg.comment_block();
    s.push_str(&format!("# K = {}\n# E = {}\n", sci(kk), sci(complete_e(k)?)));
    s.push_str("z,sn,cn,dn\n");
    for z in linspace(0.0, z_max, cfg.usize("count")?) {
        let (sn, cn, dn) = jacobi(z, k)?;
        s.push_str(&row(&[z, sn, cn, dn]));
        s.push('\n');
    }
    Ok(s.into())
}

fn sweep_cmd(cfg: &Config) -> CliResult<Output> {
    let pts = sweep::grid(&cfg.f64_list("sigmas")?, &cfg.f64_list("gammas")?, &cfg.f64_list("q0_factors")?, &cfg.f64_list("ells")?);
    let floquet = if cfg.bool("floquet")? {
        Some(FloquetOptions { tol: cfg.f64("tol")?, grid: cfg.usize("grid")?, bound_c: cfg.f64("bound_c")? })
    } else {
        None
    };
    let shadow = if cfg.bool("shadow")? {
        Some(ShadowOptions { dt: cfg.f64("dt")?, periods: Some(cfg.f64("periods")?), ..Default::default() })
    } else {
        None
    };
    let opts = SweepOptions {
        regime: regime(cfg)?,
        period_bound: cfg.f64("period_bound")?,
        floquet,
        shadow,
        grid_n: cfg.usize("n")?,
        grid_l: cfg.f64("l")?,
        parallel: cfg.bool("parallel")?,
    };
    let res = sweep::run(&pts, &opts);
    let mut s = cfg.comment_block();
    s.push_str(&sweep::to_csv(&res));
    for f in &res.fits {
        s.push_str(&format!(
            "# fit {} gamma = {} q0_factor = {} ell = {} slope = {} intercept = {} r2 = {} points = {}\n",
            f.quantity,
            sci(f.gamma),
            sci(f.q0_factor),
            sci(f.ell),
            sci(f.slope),
            sci(f.intercept),
            sci(f.r2),
            f.points
        ));
    }
    Ok(s.into())
}
