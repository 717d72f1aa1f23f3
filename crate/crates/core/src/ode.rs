//! Adaptive Dormand–Prince 5(4) integration for complex linear systems.

use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            min_step: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Work {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl Work {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            y_new: z,
        }
    }
}

impl Dopri {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            atol: rtol * 1e-2,
            ..Self::default()
        }
    }

    /// Integrates `dy/dt = f(t, y)` from `t0` to `t1` in place.
    pub fn integrate<F>(&self, f: F, t0: f64, t1: f64, y: &mut [Complex64]) -> Result<Stats>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        self.integrate_to(f, t0, &[t1], y, |_, _| {})
    }

    /// Integrates through the increasing output times `ts`, calling `sample(i, y)`
    /// with the state at `ts[i]`. Steps are clipped to land on every output time.
    pub fn integrate_to<F, S>(
        &self,
        mut f: F,
        t0: f64,
        ts: &[f64],
        y: &mut [Complex64],
        mut sample: S,
    ) -> Result<Stats>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
        S: FnMut(usize, &[Complex64]),
    {
        let n = y.len();
        let mut w = Work::new(n);
        let mut stats = Stats::default();
        let mut t = t0;
        f(t, y, &mut w.k[0]);
        let mut h = self.initial_step(t0, ts.last().copied().unwrap_or(t0), y, &w.k[0]);
        let mut steps = 0usize;

        for (i, &target) in ts.iter().enumerate() {
            while t < target {
                let remaining = target - t;
                let last = h >= remaining * (1.0 - 1e-12);
                let hs = if last { remaining } else { h };
                let err = self.step(&mut f, t, hs, y, &mut w);
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Integrator {
                        t,
                        step: hs,
                        defect: err,
                    });
                }
                if err <= 1.0 {
                    t = if last { target } else { t + hs };
                    y.copy_from_slice(&w.y_new);
                    w.k.swap(0, 6);
                    stats.accepted += 1;
                    stats.last_step = hs;
                    let fac = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !last || fac < 1.0 {
                        h = hs * fac;
                    }
                } else {
                    stats.rejected += 1;
                    h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    if h < self.min_step {
                        return Err(Error::Integrator {
                            t,
                            step: h,
                            defect: err,
                        });
                    }
                }
            }
            sample(i, y);
        }
        Ok(stats)
    }

    fn initial_step(&self, t0: f64, t1: f64, y: &[Complex64], dy: &[Complex64]) -> f64 {
        let span = (t1 - t0).abs().max(1e-300);
        let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let nd = dy.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let guess = if nd > 0.0 {
            0.01 * ny.max(1e-3) / nd
        } else {
            span
        };
        guess.min(span)
    }

    fn step<F>(&self, f: &mut F, t: f64, h: f64, y: &[Complex64], w: &mut Work) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let Work { k, tmp, y_new } = w;
        macro_rules! stage {
            ($dst:expr, $c:expr, $( $a:expr => $src:expr ),+ ) => {{
                for i in 0..n {
                    tmp[i] = y[i] $( + k[$src][i] * (h * $a) )+;
                }
                f(t + $c * h, tmp, &mut k[$dst]);
            }};
        }
        stage!(1, C2, A21 => 0);
        stage!(2, C3, A31 => 0, A32 => 1);
        stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
        stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        for i in 0..n {
            y_new[i] = y[i]
                + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
        }
        f(t + h, y_new, &mut k[6]);
        let mut acc = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * h;
            let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
            acc += e.norm_sqr() / (sc * sc);
        }
        (acc / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase() {
        // dy/dt = -i w y
        let w = 3.7;
        let mut y = vec![Complex64::new(1.0, 0.0)];
        Dopri::default()
            .integrate(
                |_, y, dy| dy[0] = Complex64::new(0.0, -w) * y[0],
                0.0,
                5.0,
                &mut y,
            )
            .unwrap();
        let exact = Complex64::from_polar(1.0, -w * 5.0);
        assert!((y[0] - exact).norm() < 1e-10);
    }

    #[test]
    fn samples_land_on_requested_times() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let mut got = Vec::new();
        let mut y = vec![Complex64::new(1.0, 0.0)];
        Dopri::default()
            .integrate_to(
                |t, _, dy| dy[0] = Complex64::new(t.cos(), 0.0),
                0.0,
                &ts,
                &mut y,
                |i, y| got.push((i, y[0].re)),
            )
            .unwrap();
        for (i, v) in got {
            assert!((v - (1.0 + ts[i].sin())).abs() < 1e-11);
        }
    }

    #[test]
    fn reports_step_exhaustion() {
        let solver = Dopri {
            max_steps: 10,
            ..Dopri::default()
        };
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let err = solver
            .integrate(
                |_, y, dy| dy[0] = Complex64::new(0.0, -100.0) * y[0],
                0.0,
                10.0,
                &mut y,
            )
            .unwrap_err();
        assert!(matches!(err, Error::Integrator { .. }));
    }
}
