//! Sparse polynomials in `(q, p)` with formal parameters `σ` and `Ω₁₀⁻¹`
//! and exact rational coefficients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// `q^q p^p σ^s Ω^{-w}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub q: u32,
    pub p: u32,
    pub s: u32,
    pub w: i32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { q: 0, p: 0, s: 0, w: 0 };

    pub fn new(q: u32, p: u32, s: u32, w: i32) -> Monomial {
        Monomial { q, p, s, w }
    }

    /// Grading degree: `q` and `p` weigh one, `σ` two, `Ω` nothing.
    pub fn degree(&self) -> u32 {
        self.q + self.p + 2 * self.s
    }

    fn times(&self, o: &Monomial) -> Monomial {
        Monomial { q: self.q + o.q, p: self.p + o.p, s: self.s + o.s, w: self.w + o.w }
    }

    fn sort_key(&self) -> (u32, u32, u32, u32, i32) {
        (self.degree(), self.s, self.p, self.q, self.w)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut push = |name: &str, e: i64| {
            if e == 1 {
                parts.push(name.to_string());
            } else if e != 0 {
                parts.push(format!("{name}^{e}"));
            }
        };
        push("q", self.q as i64);
        push("p", self.p as i64);
        push("sigma", self.s as i64);
        push("Omega", -(self.w as i64));
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyQP {
    terms: BTreeMap<Monomial, BigRational>,
}

impl PolyQP {
    pub fn zero() -> PolyQP {
        PolyQP::default()
    }

    pub fn term(c: BigRational, m: Monomial) -> PolyQP {
        let mut p = PolyQP::zero();
        p.add_term(m, c);
        p
    }

    pub fn q() -> PolyQP {
        PolyQP::term(BigRational::one(), Monomial::new(1, 0, 0, 0))
    }

    pub fn p() -> PolyQP {
        PolyQP::term(BigRational::one(), Monomial::new(0, 1, 0, 0))
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// Terms in canonical print order: degree, then powers of σ, p, q, Ω⁻¹.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &BigRational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by_key(|(m, _)| m.sort_key());
        v
    }

    pub fn add(&self, o: &PolyQP) -> PolyQP {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(*m, c.clone());
        }
        r
    }

    pub fn sub(&self, o: &PolyQP) -> PolyQP {
        self.add(&o.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> PolyQP {
        let mut r = PolyQP::zero();
        for (m, v) in &self.terms {
            r.add_term(*m, v * c);
        }
        r
    }

    pub fn mul(&self, o: &PolyQP) -> PolyQP {
        let mut r = PolyQP::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(m1.times(m2), c1 * c2);
            }
        }
        r
    }

    pub fn dq(&self) -> PolyQP {
        let mut r = PolyQP::zero();
        for (m, c) in &self.terms {
            if m.q > 0 {
                r.add_term(Monomial { q: m.q - 1, ..*m }, c * BigRational::from_integer(m.q.into()));
            }
        }
        r
    }

    pub fn dp(&self) -> PolyQP {
        let mut r = PolyQP::zero();
        for (m, c) in &self.terms {
            if m.p > 0 {
                r.add_term(Monomial { p: m.p - 1, ..*m }, c * BigRational::from_integer(m.p.into()));
            }
        }
        r
    }

    /// Homogeneous part of the given grading degree.
    pub fn degree_part(&self, d: u32) -> PolyQP {
        PolyQP { terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (*m, c.clone())).collect() }
    }

    pub fn truncate(&self, max_degree: u32) -> PolyQP {
        PolyQP { terms: self.terms.iter().filter(|(m, _)| m.degree() <= max_degree).map(|(m, c)| (*m, c.clone())).collect() }
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, q: f64, p: f64, sigma: f64, omega: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                c.to_f64().unwrap_or(f64::NAN)
                    * q.powi(m.q as i32)
                    * p.powi(m.p as i32)
                    * sigma.powi(m.s as i32)
                    * omega.powi(-m.w)
            })
            .sum()
    }
}

/// `{f, g} = f_q g_p - f_p g_q`.
pub fn poisson(f: &PolyQP, g: &PolyQP) -> PolyQP {
    f.dq().mul(&g.dp()).sub(&f.dp().mul(&g.dq()))
}

pub fn format_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for PolyQP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let sign = match (i, c.is_negative()) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            let mag = format_rational(&c.abs());
            let sep = "";
            if *m == Monomial::ONE {
                write!(f, "{sep}{sign}{mag}")?;
            } else if c.abs().is_one() {
                write!(f, "{sep}{sign}{m}")?;
            } else {
                write!(f, "{sep}{sign}{mag} {m}")?;
            }
        }
        Ok(())
    }
}
