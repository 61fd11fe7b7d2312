//! Adaptive Runge-Kutta-Fehlberg 7(8) for autonomous and non-autonomous
//! systems `y' = f(t, y)` of arbitrary dimension.

use crate::error::{Error, Result};

const C: [f64; 13] = [
    0.0, 2.0 / 27.0, 1.0 / 9.0, 1.0 / 6.0, 5.0 / 12.0, 0.5, 5.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0,
    1.0 / 3.0, 1.0, 0.0, 1.0,
];

const A: [&[f64]; 13] = [
    &[],
    &[2.0 / 27.0],
    &[1.0 / 36.0, 1.0 / 12.0],
    &[1.0 / 24.0, 0.0, 1.0 / 8.0],
    &[5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0],
    &[1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0],
    &[-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0],
    &[31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0],
    &[2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0],
    &[
        -91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0,
        17.0 / 6.0, -1.0 / 12.0,
    ],
    &[
        2383.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -301.0 / 82.0,
        2133.0 / 4100.0, 45.0 / 82.0, 45.0 / 164.0, 18.0 / 41.0,
    ],
    &[
        3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0,
        6.0 / 41.0, 0.0,
    ],
    &[
        -1777.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -289.0 / 82.0,
        2193.0 / 4100.0, 51.0 / 82.0, 33.0 / 164.0, 12.0 / 41.0, 0.0, 1.0,
    ],
];

const B8: [f64; 13] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 34.0 / 105.0, 9.0 / 35.0, 9.0 / 35.0, 9.0 / 280.0, 9.0 / 280.0, 0.0,
    41.0 / 840.0, 41.0 / 840.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Rkf78 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rkf78 {
    fn default() -> Self {
        Rkf78::new(1e-12)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

impl Rkf78 {
    pub fn new(tol: f64) -> Self {
        Rkf78 { rtol: tol, atol: tol, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// One 8th-order step; returns the new state and the scaled error norm.
    pub fn step<F>(&self, f: &F, t: f64, y: &[f64], h: f64) -> (Vec<f64>, f64)
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 13];
        let mut tmp = vec![0.0; n];
        f(t, y, &mut k[0]);
        for s in 1..13 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += a * k[j][i];
                    }
                }
                tmp[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + C[s] * h, &tmp, &mut tail[0]);
        }
        let mut ynew = vec![0.0; n];
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for s in 5..13 {
                acc += B8[s] * k[s][i];
            }
            ynew[i] = y[i] + h * acc;
            let e = 41.0 / 840.0 * (k[0][i] + k[10][i] - k[11][i] - k[12][i]) * h;
            let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
            err = err.max(e.abs() / sc);
        }
        (ynew, err)
    }

    fn initial_step(&self, t0: f64, t1: f64) -> f64 {
        ((t1 - t0).abs() / 100.0).min(self.h_max)
    }

    /// Integrates from `t0` to `t1` landing exactly on `t1`; `observe` sees
    /// every accepted step including the initial point.
    pub fn integrate<F, O>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        t1: f64,
        mut observe: O,
    ) -> Result<(Vec<f64>, Stats)>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        O: FnMut(f64, &[f64]),
    {
        let mut h = self.initial_step(t0, t1);
        let (y, _, stats) = self.run(f, t0, y0, t1, &mut h, &mut observe)?;
        Ok((y, stats))
    }

    fn run<F, O>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        t1: f64,
        h: &mut f64,
        observe: &mut O,
    ) -> Result<(Vec<f64>, f64, Stats)>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        O: FnMut(f64, &[f64]),
    {
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut stats = Stats::default();
        observe(t, &y);
        if t1 == t0 {
            return Ok((y, t, stats));
        }
        let dir = (t1 - t0).signum();
        while (t1 - t) * dir > 0.0 {
            if stats.accepted + stats.rejected > self.max_steps {
                return Err(Error::Stiffness { t, h: *h });
            }
            let remaining = (t1 - t).abs();
            let last = *h >= remaining;
            let hs = if last { remaining } else { *h };
            if hs < self.h_min * t.abs().max(1.0) && !last {
                return Err(Error::Stiffness { t, h: hs });
            }
            let (ynew, err) = self.step(f, t, &y, dir * hs);
            if !err.is_finite() {
                stats.rejected += 1;
                *h = hs * 0.1;
                continue;
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + dir * hs };
                y = ynew;
                stats.accepted += 1;
                observe(t, &y);
                let grow = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / 8.0)).clamp(0.1, 4.0) };
                if !last {
                    *h = (hs * grow).min(self.h_max);
                } else {
                    *h = (*h).max(hs * grow).min(self.h_max);
                }
            } else {
                stats.rejected += 1;
                *h = hs * (0.9 * err.powf(-1.0 / 8.0)).clamp(0.1, 0.9);
            }
        }
        Ok((y, t, stats))
    }

    /// States at each of the increasing `times`; the first time is the
    /// initial time of `y0`. No interpolation is used.
    pub fn integrate_grid<F>(&self, f: &F, y0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let mut out = Vec::with_capacity(times.len());
        let Some(&first) = times.first() else { return Ok(out) };
        out.push(y0.to_vec());
        let mut y = y0.to_vec();
        let mut t = first;
        let mut h = match times.get(1) {
            Some(&t1) => self.initial_step(t, t1),
            None => return Ok(out),
        };
        for &tn in &times[1..] {
            let (yn, _, _) = self.run(f, t, &y, tn, &mut h, &mut |_, _| {})?;
            y = yn;
            t = tn;
            out.push(y.clone());
        }
        Ok(out)
    }

    /// First time after `t0` where `g(y)` crosses from positive to non-positive,
    /// searched up to `t_max`. Returns the time and state at the crossing.
    pub fn first_downcrossing<F, G>(
        &self,
        f: &F,
        t0: f64,
        y0: &[f64],
        t_max: f64,
        g: G,
    ) -> Result<Option<(f64, Vec<f64>)>>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        G: Fn(&[f64]) -> f64,
    {
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut h = self.initial_step(t0, t_max).min(1e-2 * (t_max - t0));
        let mut gprev = g(&y);
        let mut steps = 0usize;
        while t < t_max {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Stiffness { t, h });
            }
            let hs = h.min(t_max - t);
            let (ynew, err) = self.step(f, t, &y, hs);
            if err > 1.0 || !err.is_finite() {
                h = hs * if err.is_finite() { (0.9 * err.powf(-0.125)).clamp(0.1, 0.9) } else { 0.1 };
                if h < self.h_min * t.abs().max(1.0) {
                    return Err(Error::Stiffness { t, h });
                }
                continue;
            }
            let gnew = g(&ynew);
            if gprev > 0.0 && gnew <= 0.0 {
                return Ok(Some(self.refine(f, t, &y, hs, gprev, gnew, &g)));
            }
            t += hs;
            y = ynew;
            gprev = gnew;
            h = (hs * if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.125)).clamp(0.1, 4.0) })
                .min(self.h_max);
        }
        Ok(None)
    }

    // Illinois regula falsi over the step length from a bracketing step.
    #[allow(clippy::too_many_arguments)]
    fn refine<F, G>(
        &self,
        f: &F,
        t: f64,
        y: &[f64],
        h: f64,
        ga: f64,
        gb: f64,
        g: &G,
    ) -> (f64, Vec<f64>)
    where
        F: Fn(f64, &[f64], &mut [f64]),
        G: Fn(&[f64]) -> f64,
    {
        let (mut a, mut b, mut fa, mut fb) = (0.0, h, ga, gb);
        let mut best = (h, self.step(f, t, y, h).0);
        let mut side = 0;
        for _ in 0..100 {
            let c = (a * fb - b * fa) / (fb - fa);
            let yc = self.step(f, t, y, c).0;
            let fc = g(&yc);
            best = (c, yc);
            if fc == 0.0 || (b - a).abs() < 1e-15 * (t + h).abs().max(1.0) {
                break;
            }
            if fc > 0.0 {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            if (b - a).abs() < 4.0 * f64::EPSILON * (t + h).abs().max(1.0) {
                break;
            }
        }
        (t + best.0, best.1)
    }
}
