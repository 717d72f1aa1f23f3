use std::f64::consts::TAU;

use rustfft::FftPlanner;

use super::{FloquetSolution, FourierHamiltonian, FourierModes, MAX_TRUNCATION};
use crate::linalg::{self, Mat2};
use crate::ode::Dopri;
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyOptions {
    pub rtol: f64,
    /// Number of stroboscopic samples per period (power of two); chosen from
    /// the Hamiltonian when absent.
    pub samples: Option<usize>,
    pub tail_tol: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            samples: None,
            tail_tol: 1e-11,
        }
    }
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Propagators U(t_i, t0) for increasing times `ts`, integrating
/// i dU/dt = H(t) U from the identity at `t0`.
pub fn integrate_propagator<H>(ham: H, t0: f64, ts: &[f64], rtol: f64) -> Result<Vec<Mat2>>
where
    H: Fn(f64) -> Mat2,
{
    let mut y = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let mut out = Vec::with_capacity(ts.len());
    Dopri::with_rtol(rtol).integrate_to(
        |t, y, dy| {
            let h = ham(t);
            // column-major U
            for c in 0..2 {
                let u0 = y[2 * c];
                let u1 = y[2 * c + 1];
                dy[2 * c] = -I * (h[(0, 0)] * u0 + h[(0, 1)] * u1);
                dy[2 * c + 1] = -I * (h[(1, 0)] * u0 + h[(1, 1)] * u1);
            }
        },
        t0,
        ts,
        &mut y,
        |_, y| out.push(Mat2::new(y[0], y[2], y[1], y[3])),
    )?;
    Ok(out)
}

/// One-period propagator U(T, 0).
pub fn monodromy_matrix(h: &FourierHamiltonian, rtol: f64) -> Result<Mat2> {
    h.validate()?;
    let period = TAU / h.omega;
    Ok(integrate_propagator(|t| h.at(t), 0.0, &[period], rtol)?[0])
}

/// Quasi-energies from the eigenphases of U(T), modes from an FFT of
/// U(t)v_j e^{iε_j t} sampled over one period.
pub fn solve_monodromy(h: &FourierHamiltonian, opts: &MonodromyOptions) -> Result<FloquetSolution> {
    h.validate()?;
    let period = TAU / h.omega;
    let mut n = opts
        .samples
        .unwrap_or_else(|| (2 * h.default_truncation() + 2).next_power_of_two().max(32));
    let fixed = opts.samples.is_some();
    let mut prev_tail = f64::INFINITY;
    loop {
        let ts: Vec<f64> = (1..=n).map(|i| period * i as f64 / n as f64).collect();
        let us = integrate_propagator(|t| h.at(t), 0.0, &ts, opts.rtol)?;
        let (lam, vecs) = linalg::eig_unitary2(&us[n - 1]);
        let eps = lam.map(|l| -l.arg() / period);

        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_inverse(n);
        let k_max = n / 2 - 1;
        let modes: Vec<FourierModes> = (0..2)
            .map(|j| {
                let mut comps = [
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); n],
                ];
                for i in 0..n {
                    let (t, w) = if i == 0 {
                        (0.0, vecs[j])
                    } else {
                        (ts[i - 1], us[i - 1] * vecs[j])
                    };
                    let ph = Complex64::from_polar(1.0, eps[j] * t);
                    comps[0][i] = w[0] * ph;
                    comps[1][i] = w[1] * ph;
                }
                for c in comps.iter_mut() {
                    fft.process(c);
                }
                let mut m = FourierModes::zeros(k_max);
                let inv = 1.0 / n as f64;
                for k in -(k_max as i64)..=(k_max as i64) {
                    let idx = k.rem_euclid(n as i64) as usize;
                    m.coeffs[(k + k_max as i64) as usize] =
                        [comps[0][idx] * inv, comps[1][idx] * inv];
                }
                m
            })
            .collect();

        let tail = modes.iter().map(band_tail).fold(0.0, f64::max);
        let floor_reached = tail > 0.1 * prev_tail;
        if fixed || tail < opts.tail_tol || floor_reached {
            let mut it = modes.into_iter();
            let a = it.next().unwrap();
            let b = it.next().unwrap();
            return Ok(FloquetSolution::from_pairs(
                h.omega,
                (eps[0], a),
                (eps[1], b),
                k_max,
            ));
        }
        if n / 2 >= MAX_TRUNCATION {
            return Err(Error::TruncationCap {
                cap: MAX_TRUNCATION,
                tail,
            });
        }
        prev_tail = tail;
        n *= 2;
    }
}

/// Largest coefficient in the upper quarter of the resolved band.
fn band_tail(m: &FourierModes) -> f64 {
    let k = m.k_max as i64;
    let from = 3 * (k + 1) / 4;
    m.ks()
        .filter(|q| q.abs() >= from)
        .flat_map(|q| m.get(q))
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}
