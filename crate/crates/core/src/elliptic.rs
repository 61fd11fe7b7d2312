//! Complete and incomplete elliptic integrals of the first and second kind and
//! the Jacobi elliptic functions, parameterized by the modulus `k` (not `m = k²`).

use crate::error::{domain, Result};
use std::f64::consts::{FRAC_PI_2, PI};

const AGM_EPS: f64 = 1e-16;
const AGM_MAX: usize = 64;

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(domain(format!("modulus k = {k} outside [0, 1)")));
    }
    Ok(())
}

/// `k' = sqrt(1 - k²)` without cancellation near `k = 1`.
pub fn complementary(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).sqrt()
}

/// Complete elliptic integral of the first kind `K(k)` by the AGM.
pub fn complete_k(k: f64) -> Result<f64> {
    check_modulus(k)?;
    let (mut a, mut b) = (1.0_f64, complementary(k));
    for _ in 0..AGM_MAX {
        if (a - b).abs() <= AGM_EPS * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// Complete elliptic integral of the second kind `E(k)`, defined on `[0, 1]`.
pub fn complete_e(k: f64) -> Result<f64> {
    if k == 1.0 {
        return Ok(1.0);
    }
    check_modulus(k)?;
    let (mut a, mut b) = (1.0_f64, complementary(k));
    let mut sum = 0.5 * k * k;
    let mut pow = 0.5;
    for _ in 0..AGM_MAX {
        if (a - b).abs() <= AGM_EPS * a {
            break;
        }
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    Ok(PI / (2.0 * a) * (1.0 - sum))
}

/// `dK/dk = (E - k'² K) / (k k'²)` on the open interval `0 < k < 1`.
pub fn dk_dk(k: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(domain(format!("dK/dk needs 0 < k < 1, got {k}")));
    }
    let kp2 = (1.0 - k) * (1.0 + k);
    let kk = complete_k(k)?;
    let ee = complete_e(k)?;
    Ok((ee - kp2 * kk) / (k * kp2))
}

/// Carlson's symmetric integral `R_F(x, y, z)`.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    const ERRTOL: f64 = 8e-4;
    let (mut x, mut y, mut z) = (x, y, z);
    let (mut dx, mut dy, mut dz, mut ave);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        ave = (x + y + z) / 3.0;
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 + (e2 / 24.0 - 0.1 - 3.0 / 44.0 * e3) * e2 + e3 / 14.0) / ave.sqrt()
}

/// Incomplete integral of the first kind `F(φ, k)` for any real `φ`.
///
/// `k = 1` is accepted only for `|φ| < π/2`.
pub fn incomplete_f(phi: f64, k: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(domain("non-finite amplitude"));
    }
    if k == 1.0 {
        if phi.abs() >= FRAC_PI_2 {
            return Err(domain("F(phi, 1) diverges for |phi| >= pi/2"));
        }
        return Ok(phi.sin().atanh());
    }
    check_modulus(k)?;
    let n = (phi / PI).round();
    let r = phi - n * PI;
    let (s, c) = r.sin_cos();
    let part = s * carlson_rf(c * c, (1.0 - k * s) * (1.0 + k * s), 1.0);
    if n == 0.0 {
        Ok(part)
    } else {
        Ok(2.0 * n * complete_k(k)? + part)
    }
}

/// Jacobi elliptic functions `(sn, cn, dn)` by descending Landen/AGM after
/// reducing `z` modulo the real period `4K`.
pub fn jacobi(z: f64, k: f64) -> Result<(f64, f64, f64)> {
    check_modulus(k)?;
    if !z.is_finite() {
        return Err(domain("non-finite argument"));
    }
    if k == 0.0 {
        let (s, c) = z.sin_cos();
        return Ok((s, c, 1.0));
    }
    let period = 4.0 * complete_k(k)?;
    let z = z - period * (z / period).round();

    let mut a = [0.0_f64; AGM_MAX + 1];
    let mut c = [0.0_f64; AGM_MAX + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = complementary(k);
    let mut n = 0;
    while c[n].abs() > AGM_EPS && n < AGM_MAX {
        let an = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
        a[n] = an;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * z;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = ((1.0 - k * sn) * (1.0 + k * sn)).sqrt();
    Ok((sn, cn, dn))
}
