//! Small dense helpers for symmetric tridiagonal and banded systems.

/// Number of eigenvalues of the symmetric tridiagonal matrix `(d, e)` that are
/// strictly below `x` (Sturm sequence count).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the spectrum of `(d, e)`.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `j`-th smallest eigenvalue (0-based) of `(d, e)` by bisection.
pub fn tridiagonal_eigenvalue(d: &[f64], e: &[f64], j: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(d, e);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    // Row-major storage: row i holds columns i-kl ..= i+ku.
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Banded { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || j >= self.n {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn shifted(&self, mu: f64) -> Banded {
        let mut b = self.clone();
        for i in 0..self.n {
            b.add(i, i, -mu);
        }
        b
    }
}

/// LU factors of a banded matrix with partial pivoting; fill-in widens the
/// upper band to `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    lu: Banded,
    piv: Vec<usize>,
    lower: Vec<Vec<f64>>,
}

impl BandLu {
    pub fn factor(a: &Banded) -> Option<BandLu> {
        let (n, kl) = (a.n, a.kl);
        let ku = a.ku + a.kl;
        let mut lu = Banded::zeros(n, kl, ku);
        for i in 0..n {
            let lo = i.saturating_sub(a.kl);
            let hi = (i + a.ku).min(n - 1);
            for j in lo..=hi {
                lu.add(i, j, a.get(i, j));
            }
        }
        let mut piv = vec![0; n];
        let mut lower = vec![Vec::new(); n];
        let scale = (0..n).map(|i| lu.get(i, i).abs()).fold(0.0, f64::max).max(1.0);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in k + 1..=last {
                let v = lu.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * 1e-6 * scale {
                return None;
            }
            piv[k] = p;
            let cmax = (k + ku).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let (x, y) = (lu.get(k, j), lu.get(p, j));
                    let ik = lu.idx(k, j).unwrap();
                    lu.data[ik] = y;
                    if let Some(ip) = lu.idx(p, j) {
                        lu.data[ip] = x;
                    } else {
                        debug_assert!(x == 0.0);
                    }
                }
            }
            let pivot = lu.get(k, k);
            let mut mult = Vec::with_capacity(last - k);
            for i in k + 1..=last {
                let m = lu.get(i, k) / pivot;
                mult.push(m);
                if m != 0.0 {
                    for j in k + 1..=cmax {
                        let v = lu.get(k, j);
                        if v != 0.0 {
                            lu.add(i, j, -m * v);
                        }
                    }
                }
                let ik = lu.idx(i, k).unwrap();
                lu.data[ik] = 0.0;
            }
            lower[k] = mult;
        }
        Some(BandLu { n, kl, ku, lu, piv, lower })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for (off, m) in self.lower[k].iter().enumerate() {
                b[k + 1 + off] -= m * bk;
            }
        }
        let _ = self.kl;
        for i in (0..n).rev() {
            let hi = (i + self.ku).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=hi {
                acc -= self.lu.get(i, j) * b[j];
            }
            b[i] = acc / self.lu.get(i, i);
        }
    }
}
