//! Lie-transform normal form by Deprit's triangle, in exact rationals.

pub mod poly;

use crate::error::{domain, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use poly::{format_rational, poisson, rat, Monomial, PolyQP};

pub use poly::PolyQP as Poly;

pub const MAX_ORDER: usize = 12;

/// `H_DW = (Ω₁₀/2) p² + (σ/2) q² + q⁴ + q² p²` with `q = α`, `p = β`.
pub fn hdw_polynomial() -> PolyQP {
    let mut h = PolyQP::zero();
    h.add_term(Monomial::new(0, 2, 0, -1), rat(1, 2));
    h.add_term(Monomial::new(2, 0, 1, 0), rat(1, 2));
    h.add_term(Monomial::new(4, 0, 0, 0), rat(1, 1));
    h.add_term(Monomial::new(2, 2, 0, 0), rat(1, 1));
    h
}

/// `H₀ = (Ω₁₀/2) p²`.
pub fn h0_polynomial() -> PolyQP {
    PolyQP::term(rat(1, 2), Monomial::new(0, 2, 0, -1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormResult {
    pub order: usize,
    /// Transformed Hamiltonian, `(Ω₁₀/2) p²` plus a function of `q` alone.
    pub k: PolyQP,
    /// Deprit generators `W₁, …, W_r` (series `Σ εⁿ/n! Wₙ₊₁`).
    pub generators: Vec<PolyQP>,
    /// Old coordinates as series in the new ones.
    pub q_series: PolyQP,
    pub p_series: PolyQP,
}

fn factorial(n: usize) -> BigRational {
    BigRational::from_integer((1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k)))
}

fn binomial(n: usize, k: usize) -> BigRational {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// One sweep of the Lie triangle for the function whose expansion is
/// `f[j]` (Deprit-scaled), returning `Σ f⁽ⁿ⁾₀ / n!` for `n ≤ r`.
fn lie_series(f: &[PolyQP], w: &[PolyQP], r: usize) -> PolyQP {
    let mut table: Vec<Vec<PolyQP>> = vec![f.to_vec()];
    let mut out = f[0].clone();
    for n in 1..=r {
        let prev = &table[n - 1];
        let mut row = Vec::with_capacity(r + 1 - n);
        for j in 0..=(r - n) {
            let mut v = prev[j + 1].clone();
            for k in 0..=j {
                v = v.add(&poisson(&prev[j - k], &w[k]).scale(&binomial(j, k)));
            }
            row.push(v);
        }
        out = out.add(&row[0].scale(&(BigRational::one() / factorial(n))));
        table.push(row);
    }
    out
}

/// Normalizes `h` to order `r`: removes every term carrying `p` beyond the
/// quadratic part `c p² Ω^e`, leaving `K = c p² Ω^e + g(q; σ)`.
pub fn normalize(h: &PolyQP, r: usize) -> Result<NormalFormResult> {
    if r > MAX_ORDER {
        return Err(domain(format!("order {r} exceeds {MAX_ORDER}")));
    }
    for (m, _) in h.iter() {
        if m.degree() % 2 == 1 {
            return Err(Error::NormalFormObstruction(format!("{m} has odd degree")));
        }
    }
    let h0 = h.degree_part(2);
    let (c0, m0) = match h0.iter().next() {
        Some((m, c)) if h0.len() == 1 && m.q == 0 && m.p == 2 && m.s == 0 => (c.clone(), *m),
        Some((m, _)) => {
            let bad = h0.iter().find(|(mm, _)| !(mm.q == 0 && mm.p == 2 && mm.s == 0)).map(|x| *x.0).unwrap_or(*m);
            return Err(Error::NormalFormObstruction(format!("{bad} in the quadratic part")));
        }
        None => return Err(Error::NormalFormObstruction("empty quadratic part".into())),
    };
    let constant = h.degree_part(0);
    // Deprit-scaled pieces: hₙ = n! × (degree 2 + 2n part).
    let hs: Vec<PolyQP> = (0..=r)
        .map(|n| if n == 0 { h0.clone() } else { h.degree_part(2 + 2 * n as u32).scale(&factorial(n)) })
        .collect();

    let mut table: Vec<Vec<PolyQP>> = vec![vec![hs[0].clone()]];
    let mut w: Vec<PolyQP> = Vec::new();
    let mut k = h0.add(&constant);
    for n in 1..=r {
        table[0].push(hs[n].clone());
        let zero = PolyQP::zero();
        for i in 1..=n {
            let j = n - i;
            let prev = &table[i - 1];
            let mut v = prev[j + 1].clone();
            for kk in 0..=j {
                let wk = w.get(kk).unwrap_or(&zero);
                v = v.add(&poisson(&prev[j - kk], wk).scale(&binomial(j, kk)));
            }
            if table.len() <= i {
                table.push(Vec::new());
            }
            table[i].push(v);
        }
        // Solve {H₀, Wₙ} = -(terms of Ĥₙ carrying p).
        let hat = &table[n][0];
        let mut wn = PolyQP::zero();
        for (m, c) in hat.iter() {
            if m.p == 0 {
                continue;
            }
            let d = c / (rat(2, 1) * &c0 * BigRational::from_integer((m.q + 1).into()));
            wn.add_term(Monomial { q: m.q + 1, p: m.p - 1, s: m.s, w: m.w - m0.w }, d);
        }
        let corr = poisson(&h0, &wn);
        for i in 1..=n {
            let j = n - i;
            table[i][j] = table[i][j].add(&corr);
        }
        let kn = &table[n][0];
        if let Some((m, _)) = kn.iter().find(|(m, _)| m.p != 0) {
            return Err(Error::NormalFormObstruction(format!("{m} survives the homological step")));
        }
        k = k.add(&kn.scale(&(BigRational::one() / factorial(n))));
        w.push(wn);
    }

    let unit = |f: PolyQP| {
        let mut v = vec![f];
        v.extend((0..r).map(|_| PolyQP::zero()));
        v
    };
    let q_series = lie_series(&unit(PolyQP::q()), &w, r);
    let p_series = lie_series(&unit(PolyQP::p()), &w, r);
    Ok(NormalFormResult { order: r, k, generators: w, q_series, p_series })
}

/// Old coordinates `(Q, P)` at new coordinates `(q, p)`.
pub fn apply_transform(res: &NormalFormResult, q: f64, p: f64, sigma: f64, omega10: f64) -> (f64, f64) {
    (res.q_series.eval(q, p, sigma, omega10), res.p_series.eval(q, p, sigma, omega10))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuffingReport {
    /// Coefficient of `p² Ω₁₀`.
    pub kinetic: BigRational,
    /// Coefficient of `σ q²`.
    pub quadratic: BigRational,
    /// Coefficient of `q⁴`.
    pub quartic: BigRational,
    /// Everything in `K` beyond the three leading terms.
    pub residual: PolyQP,
}

impl DuffingReport {
    /// With `p = sqrt(Ω₁₀) P̃`, `q = Q̃ / sqrt(2)` and `H̃ = 2K`… the leading part
    /// reads `P̃² / 2 + (σ/2) Q̃² / 2 + Q̃⁴ / 4` only when the three
    /// coefficients are `1/2, ±1/2, 1`; this reports whether they are.
    pub fn is_standard(&self) -> bool {
        self.kinetic == rat(1, 2) && (self.quadratic == rat(1, 2) || self.quadratic == rat(-1, 2)) && self.quartic.is_one()
    }
}

pub fn duffing_compare(res: &NormalFormResult) -> Result<DuffingReport> {
    if res.order < 4 {
        return Err(domain(format!("Duffing comparison needs order >= 4, got {}", res.order)));
    }
    let mk = [Monomial::new(0, 2, 0, -1), Monomial::new(2, 0, 1, 0), Monomial::new(4, 0, 0, 0)];
    let c: Vec<BigRational> = mk.iter().map(|m| res.k.coeff(m)).collect();
    let mut residual = res.k.clone();
    for (m, v) in mk.iter().zip(&c) {
        residual.add_term(*m, -v.clone());
    }
    Ok(DuffingReport { kinetic: c[0].clone(), quadratic: c[1].clone(), quartic: c[2].clone(), residual })
}

/// Canonical text rendering: one term per line per series, sorted by degree.
pub fn render(res: &NormalFormResult) -> String {
    let mut out = String::new();
    out.push_str("# normal form of H_DW = (Omega/2) p^2 + (sigma/2) q^2 + q^4 + q^2 p^2\n");
    out.push_str("# each line: coefficient then q^i p^j sigma^s Omega^e; degree counts sigma twice\n");
    let mut section = |name: &str, p: &PolyQP| {
        out.push_str(&format!("[{name}]\n"));
        for (m, c) in p.sorted_terms() {
            out.push_str(&format!("{} {}\n", format_rational(c), m));
        }
    };
    section("K", &res.k);
    section("Q", &res.q_series);
    section("P", &res.p_series);
    for (i, w) in res.generators.iter().enumerate() {
        section(&format!("W{}", i + 1), w);
    }
    out
}

/// Numerical value of a rational coefficient.
pub fn to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::Rkf78;
    use num_traits::Zero;

    fn m(q: u32, p: u32, s: u32, w: i32) -> Monomial {
        Monomial::new(q, p, s, w)
    }

    #[test]
    fn quadratic_only_is_fixed() {
        let r = normalize(&h0_polynomial(), 4).unwrap();
        assert_eq!(r.k, h0_polynomial());
        assert_eq!(r.q_series, PolyQP::q());
        assert_eq!(r.p_series, PolyQP::p());
        let d = duffing_compare(&r).unwrap();
        assert!(d.residual.is_zero() && d.quartic.is_zero());
    }

    #[test]
    fn duffing_leading_terms() {
        let r = normalize(&hdw_polynomial(), 4).unwrap();
        let d = duffing_compare(&r).unwrap();
        assert!(d.is_standard() && d.quartic == rat(1, 1));
        assert_eq!(d.residual.coeff(&m(6, 0, 0, 1)), rat(4, 3));
        assert_eq!(apply_transform(&r, 0.0, 0.0, 0.3, 2.0), (0.0, 0.0));
    }

    #[test]
    fn double_well_series() {
        let r = normalize(&hdw_polynomial(), 3).unwrap();
        assert_eq!(r.generators[0], PolyQP::term(rat(1, 3), m(3, 1, 0, 1)));
        for (mono, c) in [(m(1, 0, 0, 0), rat(1, 1)), (m(3, 0, 0, 1), rat(1, 3)), (m(5, 0, 0, 2), rat(1, 30)), (m(7, 0, 0, 3), rat(1, 630))] {
            assert_eq!(r.q_series.coeff(&mono), c, "Q {mono}");
        }
        for (mono, c) in [(m(0, 1, 0, 0), rat(1, 1)), (m(2, 1, 0, 1), rat(-1, 1)), (m(4, 1, 0, 2), rat(5, 6)), (m(6, 1, 0, 3), rat(-61, 90))] {
            assert_eq!(r.p_series.coeff(&mono), c, "P {mono}");
        }
        for (mono, c) in [
            (m(0, 2, 0, -1), rat(1, 2)),
            (m(2, 0, 1, 0), rat(1, 2)),
            (m(4, 0, 0, 0), rat(1, 1)),
            (m(4, 0, 1, 1), rat(1, 3)),
            (m(6, 0, 0, 1), rat(4, 3)),
            (m(6, 0, 1, 2), rat(4, 45)),
            (m(8, 0, 0, 2), rat(4, 5)),
        ] {
            assert_eq!(r.k.coeff(&mono), c, "K {mono}");
        }
        assert!(r.k.iter().all(|(mm, _)| mm.p == 0 || *mm == m(0, 2, 0, -1)));
        assert!(duffing_compare(&r).is_err());
    }

    // Substitute the coordinate series into H and truncate: must equal K.
    #[test]
    fn substitution_oracle() {
        for r in [2usize, 4, 6] {
            let res = normalize(&hdw_polynomial(), r).unwrap();
            let top = 2 + 2 * r as u32;
            let (q, p) = (&res.q_series, &res.p_series);
            let mut composed = PolyQP::zero();
            for (mono, c) in hdw_polynomial().iter() {
                let mut t = PolyQP::term(c.clone(), Monomial { q: 0, p: 0, ..*mono });
                for _ in 0..mono.q {
                    t = t.mul(q).truncate(top);
                }
                for _ in 0..mono.p {
                    t = t.mul(p).truncate(top);
                }
                composed = composed.add(&t);
            }
            assert_eq!(composed.truncate(top), res.k.truncate(top), "order {r}");
        }
    }

    #[test]
    fn deterministic_rendering() {
        let a = render(&normalize(&hdw_polynomial(), 8).unwrap());
        let b = render(&normalize(&hdw_polynomial(), 8).unwrap());
        assert_eq!(a, b);
        assert!(a.contains("[K]\n1/2 p^2 Omega\n1 q^4\n1/2 q^2 sigma\n"));
    }

    #[test]
    fn obstructions() {
        let mut h = hdw_polynomial();
        h.add_term(m(3, 0, 0, 0), rat(1, 1));
        assert!(matches!(normalize(&h, 2), Err(Error::NormalFormObstruction(s)) if s.contains("q^3")));
        let mut h = hdw_polynomial();
        h.add_term(m(1, 1, 0, 0), rat(1, 1));
        assert!(matches!(normalize(&h, 2), Err(Error::NormalFormObstruction(s)) if s.contains("q p")));
        assert!(normalize(&hdw_polynomial(), 13).is_err());
    }

    #[test]
    fn energy_match_order() {
        // H(Φ(q, p)) - K(q, p) shrinks like |q|^{2r+4} along a ray.
        let r = 3;
        let res = normalize(&hdw_polynomial(), r).unwrap();
        let (sigma, omega) = (0.0, 1.0);
        let err = |s: f64| {
            let (q, p) = (s, 0.7 * s);
            let (qq, pp) = apply_transform(&res, q, p, sigma, omega);
            (hdw_polynomial().eval(qq, pp, sigma, omega) - res.k.eval(q, p, sigma, omega)).abs()
        };
        let slope = (err(0.02) / err(0.04)).ln() / 0.5f64.ln();
        assert!(slope > 2.0 * r as f64 + 3.5, "{slope}");
        let (qq, _) = apply_transform(&res, 0.01, 0.0, 0.0, 1.0);
        assert!(((qq - 0.01) / (1e-6 / 3.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn near_symplectic() {
        let res = normalize(&hdw_polynomial(), 6).unwrap();
        let h = 1e-6;
        let (q, p, s, o) = (0.05, 0.03, 0.01, 1.0);
        let f = |q, p| apply_transform(&res, q, p, s, o);
        let (a, b) = (f(q + h, p), f(q - h, p));
        let (c, d) = (f(q, p + h), f(q, p - h));
        let det = ((a.0 - b.0) * (c.1 - d.1) - (a.1 - b.1) * (c.0 - d.0)) / (4.0 * h * h);
        assert!((det - 1.0).abs() < 1e-8, "{det}");
    }

    #[test]
    fn normal_form_dynamics_shadow_original() {
        // K-flow mapped through Φ against the H-flow, over t = 1/σ.
        let res = normalize(&hdw_polynomial(), 4).unwrap();
        let (sigma, omega) = (0.01, 1.0);
        let ham_flow = |h: PolyQP| {
            let (hq, hp) = (h.dq(), h.dp());
            move |_t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = hp.eval(y[0], y[1], sigma, omega);
                dy[1] = -hq.eval(y[0], y[1], sigma, omega);
            }
        };
        let y0 = [0.1, 0.0];
        let x0 = apply_transform(&res, y0[0], y0[1], sigma, omega);
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 2.0).collect();
        let rk = Rkf78::new(1e-12);
        let ys = rk.integrate_grid(&ham_flow(res.k.clone()), &y0, &times).unwrap();
        let xs = rk.integrate_grid(&ham_flow(hdw_polynomial()), &[x0.0, x0.1], &times).unwrap();
        let worst = ys
            .iter()
            .zip(&xs)
            .map(|(y, x)| {
                let (qq, pp) = apply_transform(&res, y[0], y[1], sigma, omega);
                (qq - x[0]).abs().max((pp - x[1]).abs())
            })
            .fold(0.0, f64::max);
        assert!(worst < sigma * y0[0], "{worst:e}");
    }
}
