//! Acceptance checks, one test per criterion. Each prints a single
//! `criterion N ... PASS|FAIL` line; run with `--nocapture` to see them.

use dwlab::elliptic::{complete_k, incomplete_f, jacobi};
use dwlab::floquet::{derivative_fundamental, fundamental_matrix, monodromy_from, FloquetOptions};
use dwlab::orbits::{admissible_window, build, chi, eval_with_rates, ExactOrbit, OrbitClass};
use dwlab::pde::{shadow_run, ShadowOptions};
use dwlab::reduced::{hamiltonian_dw, return_time_qp, ReducedParams, Regime};
use dwlab::spectral::{eigensolve, splitting_curve, PotentialSpec};
use dwlab::sweep::{self, SweepOptions};
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

fn report(n: &str, name: &str, pass: bool, detail: String) {
    println!("criterion {n} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} {name} failed: {detail}");
}

fn max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

#[test]
fn criterion_1_elliptic_kernel() {
    let t0 = Instant::now();
    let k0 = (complete_k(0.0).unwrap() - PI / 2.0).abs();
    let (mut r1, mut r2, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let k = i as f64 / 100.0;
        for j in 0..100 {
            let z = -10.0 + 20.0 * j as f64 / 99.0;
            let (sn, cn, dn) = jacobi(z, k).unwrap();
            r1 = r1.max((sn * sn + cn * cn - 1.0).abs());
            r2 = r2.max((dn * dn + k * k * sn * sn - 1.0).abs());
        }
        for j in 0..25 {
            let phi = -1.5 + 3.0 * j as f64 / 24.0;
            let (sn, _, _) = jacobi(incomplete_f(phi, k).unwrap(), k).unwrap();
            inv = inv.max((sn - phi.sin()).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    report(
        "1",
        "elliptic kernel",
        k0 < 1e-14 && r1 < 1e-12 && r2 < 1e-12 && inv < 1e-10 && secs < 1.0,
        format!("|K(0)-pi/2| {k0:.1e}, sn^2+cn^2-1 {r1:.1e}, dn^2+k^2sn^2-1 {r2:.1e}, inversion {inv:.1e}, {secs:.3} s"),
    );
}

/// Orbits over all three classes: `(q0, ζ)`.
fn orbit_set() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for zeta in [0.05f64, 0.2, 0.6] {
        let (s, j) = ((0.5 * zeta).sqrt(), zeta.sqrt());
        // Josephson beyond the separatrix start, self-trapped on both sides
        // of the center.
        v.extend([(1.1 * j, zeta), (1.5 * j, zeta), (0.9 * (1.0 + zeta).sqrt(), zeta)]);
        v.extend([(0.5 * (s + j), zeta), (0.7 * s, zeta), (-0.5 * (s + j), zeta)]);
    }
    for zeta in [-0.5, -0.1, 0.0] {
        v.extend([(0.3, zeta), (0.7, zeta)]);
    }
    v
}

#[test]
fn criterion_2_exact_orbits_solve_reduced_system() {
    let t0 = Instant::now();
    let set = orbit_set();
    let mut classes = std::collections::BTreeSet::new();
    let (mut res, mut drift) = (0.0f64, 0.0f64);
    for &(q0, zeta) in &set {
        let orb = build(q0, zeta).unwrap();
        classes.insert(orb.class.name());
        // q̇² = (1 + q²)(2H - (q² - ζ/2)²) with H fixed by the start.
        let h = 0.5 * (q0 * q0 - 0.5 * zeta).powi(2);
        let p = ReducedParams::from_zeta(1.0, zeta).unwrap();
        let h_dw0 = {
            let [al, be, _] = chi(&orb, &p, 0.0).unwrap();
            hamiltonian_dw(al, be, &p)
        };
        for i in 0..1000 {
            let tau = orb.t_tau * i as f64 / 999.0;
            let [q, _, dq, _] = eval_with_rates(&orb, tau);
            let rhs = (1.0 + q * q) * (2.0 * h - (q * q - 0.5 * zeta).powi(2));
            res = res.max((dq * dq - rhs).abs());
            let [al, be, _] = chi(&orb, &p, tau).unwrap();
            drift = drift.max((hamiltonian_dw(al, be, &p) - h_dw0).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    report(
        "2",
        "exact orbits solve the reduced system",
        set.len() >= 20 && classes.len() == 3 && res < 1e-8 && drift < 1e-10 && secs < 5.0,
        format!("{} orbits, classes {classes:?}, q'^2 residual {res:.1e}, H_DW drift {drift:.1e}, {secs:.2} s", set.len()),
    );
}

#[test]
fn criterion_3a_period_formula_matches_integration() {
    let t0 = Instant::now();
    let mut set = orbit_set();
    set.push((1.0, 0.0));
    let worst = max(set.iter().map(|&(q0, zeta)| {
        let orb = build(q0, zeta).unwrap();
        let ret = return_time_qp(q0, zeta, 1e-13, 1.5 * orb.t_tau).unwrap();
        (orb.t_tau - ret).abs() / orb.t_tau
    }));
    let secs = t0.elapsed().as_secs_f64();
    report(
        "3a",
        "period formula vs integrated return time",
        set.len() >= 20 && worst <= 1e-6 && secs < 30.0,
        format!("{} orbits including (q0 = 1, zeta = 0), max relative error {worst:.1e}, {secs:.2} s", set.len()),
    );
}

#[test]
fn criterion_3b_closed_case_period_is_two_pi() {
    let orb = build(1.0, 0.0).unwrap();
    let ret = return_time_qp(1.0, 0.0, 1e-13, 20.0).unwrap();
    let err = (orb.t_tau - 2.0 * PI).abs();
    report(
        "3b",
        "closed case T_tau = 2 pi",
        err < 1e-10,
        format!("closed form {:.15}, integrated {ret:.15}, sqrt(2) pi = {:.15}, |T - 2 pi| = {err:.2e}", orb.t_tau, 2f64.sqrt() * PI),
    );
}

const SIGMAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn scaling_sweep() -> sweep::SweepResult {
    let pts = sweep::grid(&SIGMAS, &[0.8], &[1.2], &[6.0]);
    let opts = SweepOptions { floquet: Some(FloquetOptions { tol: 1e-13, grid: 128, bound_c: 10.0 }), ..Default::default() };
    sweep::run(&pts, &opts)
}

#[test]
fn criterion_4_period_scaling() {
    let res = scaling_sweep();
    let fit = res.fits.iter().find(|f| f.quantity == "period").expect("period fit");
    let ok_rows = res.rows.iter().all(|r| r.error.is_none());
    report(
        "4",
        "period scaling T_t ~ sigma^-(1+gamma)/2",
        ok_rows && (fit.slope + 0.9).abs() <= 0.05,
        format!("slope {:.4} (target -0.9 +- 0.05), r2 {:.6}", fit.slope, fit.r2),
    );
}

#[test]
fn criterion_5_monodromy() {
    let opts = FloquetOptions::default();
    let (mut dev, mut det, mut iab) = (0.0f64, 0.0f64, 0.0f64);
    let mut min_mult = 3;
    let mut count = 0;
    for sigma in [1e-2, 1e-3] {
        let p = ReducedParams::from_scaling(sigma, 0.8, Regime::Supercritical).unwrap();
        let w = admissible_window(&p, f64::INFINITY).unwrap();
        for f in [0.02, 0.25, 0.5, 0.75, 0.98] {
            let orb = build(w.q0_min + f * (w.q0_max - w.q0_min), p.zeta).unwrap();
            let fm = fundamental_matrix(&orb, &p, opts.tol, opts.grid).unwrap();
            let r = monodromy_from(&fm, &orb, &p, &opts).unwrap();
            dev = dev.max(r.max_eig_deviation);
            det = det.max((r.det - 1.0).abs());
            iab = iab.max(r.int_alpha_beta.abs());
            min_mult = min_mult.min(r.geometric_multiplicity);
            count += 1;
        }
    }
    report(
        "5",
        "monodromy eigenvalues, determinant, multiplicity",
        count >= 10 && dev < 1e-6 && det < 1e-8 && iab < 1e-9 && min_mult >= 2,
        format!("{count} admissible orbits, max |lambda - 1| {dev:.1e}, max |det - 1| {det:.1e}, max |int alpha beta| {iab:.1e}, min multiplicity {min_mult}"),
    );
}

fn cross_method(orb: &ExactOrbit, p: &ReducedParams) -> f64 {
    let fm = fundamental_matrix(orb, p, 1e-13, 64).unwrap();
    let dm = derivative_fundamental(orb, p, 1e-5, fm.period, 64).unwrap();
    max(fm.mats.iter().zip(&dm.renormalized).map(|(a, b)| (a - b).amax()))
}

#[test]
fn criterion_6_fundamental_matrix_bound() {
    let res = scaling_sweep();
    let fit = res.fits.iter().find(|f| f.quantity == "h2").expect("bound fit");
    let cross = max(SIGMAS.iter().map(|&s| {
        let p = ReducedParams::from_scaling(s, 0.8, Regime::Supercritical).unwrap();
        cross_method(&build(1.2 * (1.5 * p.zeta).sqrt(), p.zeta).unwrap(), &p)
    }));
    let ratios: Vec<String> = res.rows.iter().map(|r| format!("{:.3}", r.bound_ratio)).collect();
    report(
        "6",
        "sup |M(t) M(s)^-1| scaling and cross-method agreement",
        (fit.slope + 0.1).abs() <= 0.1 && cross < 1e-4,
        format!("slope {:.4} (target -0.1 +- 0.1), bound ratios C = [{}], cross-method sup {cross:.1e}", fit.slope, ratios.join(", ")),
    );
}

#[test]
fn criterion_7_spectral() {
    let t0 = Instant::now();
    let pt = PotentialSpec::poschl_teller(6.0);
    let single = eigensolve(&pt.single_well(), 40.0, 4096, 1).unwrap();
    let star = (single.modes[0].omega + 1.0).abs();
    let ells = [4.0, 5.0, 6.0, 7.0, 8.0];
    let curve = splitting_curve(&pt, &ells, 22.0, 0.1).unwrap();
    let parity = max(ells.iter().map(|&ell| eigensolve(&pt.with_ell(ell), ell + 22.0, 2 * ((ell + 22.0) / 0.1).round() as usize, 2).unwrap().parity_residual()));
    let secs = t0.elapsed().as_secs_f64();
    report(
        "7",
        "spectral basis",
        star < 1e-6 && curve.r2 > 0.999 && parity < 1e-8 && secs < 60.0,
        format!("|Omega* + 1| {star:.1e}, log Omega10 vs ell r2 {:.7} slope {:.4}, parity residual {parity:.1e}, {secs:.1} s", curve.r2, curve.slope),
    );
}

#[test]
fn criterion_8_normal_form_series() {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_dwlab")).args(["normalform", "--order", "8"]).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let (a, b) = (run(), run());
    let golden = include_str!("golden/normalform_order8.txt");
    let section = |name: &str| -> Vec<String> {
        a.split(&format!("[{name}]\n")).nth(1).unwrap().lines().take_while(|l| !l.starts_with('[')).map(String::from).collect()
    };
    let (k, q, p) = (section("K"), section("Q"), section("P"));
    let has = |s: &[String], line: &str| s.iter().any(|l| l == line);
    let q_ok = ["1 q", "1/3 q^3 Omega^-1", "1/30 q^5 Omega^-2", "1/630 q^7 Omega^-3"].iter().all(|l| has(&q, l));
    let p_ok = ["1 p", "-1 q^2 p Omega^-1", "5/6 q^4 p Omega^-2", "-61/90 q^6 p Omega^-3"].iter().all(|l| has(&p, l));
    // (4/45)(9 q⁸) = (4/5) q⁸; the σ terms carry the sign of the direct substitution.
    let k_ok = ["1/2 p^2 Omega", "1 q^4", "4/3 q^6 Omega^-1", "4/5 q^8 Omega^-2", "1/2 q^2 sigma", "1/3 q^4 sigma Omega^-1", "4/45 q^6 sigma Omega^-2"]
        .iter()
        .all(|l| has(&k, l));
    let separable = k.iter().all(|l| !l.contains(" p") || l == "1/2 p^2 Omega");
    report(
        "8",
        "normal form series",
        q_ok && p_ok && k_ok && separable && a == b && a == golden,
        format!("Q {q_ok}, P {p_ok}, K {k_ok}, separable {separable}, repeat identical {}, golden identical {}", a == b, a == golden),
    );
}

#[test]
fn criterion_9_pde_shadows_two_mode_dynamics() {
    let t0 = Instant::now();
    let basis = eigensolve(&PotentialSpec::poschl_teller(6.0), 26.0, 512, 2).unwrap();
    let scaled = ReducedParams::from_scaling(1e-2, 0.8, Regime::Supercritical).unwrap();
    // ζ = σ^{1-γ}/2 carried over to the well's own splitting.
    let p = ReducedParams::from_zeta(basis.omega10(), scaled.zeta).unwrap().with_gamma(0.8);
    let orb = build(1.2 * (1.5 * p.zeta).sqrt(), p.zeta).unwrap();
    assert_eq!(orb.class, OrbitClass::Josephson);
    let opts = |dt| ShadowOptions { dt, periods: Some(3.0), ..Default::default() };
    let (a, b) = dwlab::par::join(|| shadow_run(&orb, &p, &basis, &opts(0.1)), || shadow_run(&orb, &p, &basis, &opts(0.05)));
    let (a, b) = (a.unwrap(), b.unwrap());
    let change = (a.sup_error - b.sup_error).abs() / a.sup_error;
    let drift = a.power_drift.max(b.power_drift);
    let secs = t0.elapsed().as_secs_f64();
    report(
        "9",
        "NLS shadows the calibrated two-mode ODE over 3 periods",
        a.ratio < 0.1 && b.ratio < 0.1 && drift < 1e-8 && change < 0.1 && secs < 600.0,
        format!(
            "sup error {:.3e} / amplitude {:.3e} = {:.2e}, dt-halving change {:.1}%, power drift {drift:.1e}, energy drift {:.1e}, growth exponent {:.2}, {:.0} periods of {:.4e}, {secs:.0} s",
            a.sup_error,
            a.amplitude,
            a.ratio,
            100.0 * change,
            a.energy_drift,
            a.growth_exponent,
            a.window.1 / a.period,
            a.period
        ),
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let runs: &[&[&str]] = &[
        &["eigs"],
        &["eigs", "--format", "csv", "--n", "256", "--l", "26"],
        &["orbit", "--samples", "64"],
        &["orbit", "--format", "json"],
        &["orbit-scan", "--count", "8"],
        &["phase-portrait", "--nq", "11", "--np", "11"],
        &["floquet", "--grid", "48", "--tol", "1e-12"],
        &["pde-shadow", "--periods", "0.02", "--n", "256", "--dt", "0.1", "--series", "true"],
        &["normalform", "--order", "6"],
        &["elliptic-table", "--count", "9"],
        &["sweep", "--sigmas", "1e-2,1e-3", "--grid", "32"],
        &["sweep", "--sigmas", ""],
    ];
    let mut bad = Vec::new();
    for args in runs {
        let go = || Command::new(env!("CARGO_BIN_EXE_dwlab")).args(*args).output().unwrap();
        let (x, y) = (go(), go());
        if !(x.status.success() && y.status.success() && x.stdout == y.stdout && !x.stdout.is_empty()) {
            bad.push(args.join(" "));
        }
    }
    report("10", "CLI determinism", bad.is_empty(), format!("{} invocations, differing or failing: {bad:?}", runs.len()));
}
