use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::floquet::FloquetSolution;
use crate::linalg::Mat2;
use crate::{Complex64, Error, Result};

/// Fourier coefficients of σ_z in the Floquet basis:
/// g_{k+} = G_10[k], g_{k−} = G_01[k], g_{kφ} = (G_11 − G_00)[k]/2 with
/// G_ab[q] = avg_t e^{iqω t} ⟨w_a(t)|σ_z|w_b(t)⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterWeights {
    pub omega_d: f64,
    pub eps01: f64,
    /// Index range is k = −k_max..=k_max.
    pub k_max: usize,
    pub g_plus: Vec<Complex64>,
    pub g_minus: Vec<Complex64>,
    pub g_phi: Vec<Complex64>,
}

impl FilterWeights {
    /// Weights of an undriven qubit: only k = 0 entries, from the static
    /// matrix elements σ_z^{ge} and σ_z^{ee} − σ_z^{gg}.
    pub fn from_static(omega_ge: f64, sigma_ge: f64, sigma_diff: f64) -> Self {
        let c = Complex64::from;
        Self {
            omega_d: 0.0,
            eps01: omega_ge,
            k_max: 0,
            g_plus: vec![c(sigma_ge)],
            g_minus: vec![c(sigma_ge)],
            g_phi: vec![c(0.5 * sigma_diff)],
        }
    }

    pub fn ks(&self) -> impl Iterator<Item = i64> {
        let k = self.k_max as i64;
        -k..=k
    }

    fn idx(&self, k: i64) -> Option<usize> {
        let i = k + self.k_max as i64;
        (i >= 0 && i < self.g_plus.len() as i64).then_some(i as usize)
    }

    pub fn plus(&self, k: i64) -> Complex64 {
        self.idx(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.g_plus[i])
    }

    pub fn minus(&self, k: i64) -> Complex64 {
        self.idx(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.g_minus[i])
    }

    pub fn phi(&self, k: i64) -> Complex64 {
        self.idx(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.g_phi[i])
    }

    /// ω̄_{k+} = kω_d − ε_01.
    pub fn freq_plus(&self, k: i64) -> f64 {
        k as f64 * self.omega_d - self.eps01
    }

    /// ω̄_{k−} = kω_d + ε_01.
    pub fn freq_minus(&self, k: i64) -> f64 {
        k as f64 * self.omega_d + self.eps01
    }

    /// ω̄_{kφ} = kω_d.
    pub fn freq_phi(&self, k: i64) -> f64 {
        k as f64 * self.omega_d
    }

    pub fn w_plus(&self) -> f64 {
        self.g_plus.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn w_minus(&self) -> f64 {
        self.g_minus.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn w_phi(&self) -> f64 {
        self.g_phi.iter().map(|g| 2.0 * g.norm_sqr()).sum()
    }

    /// W_+ + W_− + W_φ, equal to 2.
    pub fn conservation_sum(&self) -> f64 {
        self.w_plus() + self.w_minus() + self.w_phi()
    }
}

/// Filter weights by convolution of the Fourier modes, evaluated with an FFT
/// on a grid large enough that the product does not alias.
pub fn filter_weights(sol: &FloquetSolution) -> Result<FilterWeights> {
    if sol.is_degenerate() {
        return Err(Error::Degenerate { eps01: sol.eps01 });
    }
    Ok(filter_weights_unchecked(sol))
}

pub(crate) fn filter_weights_unchecked(sol: &FloquetSolution) -> FilterWeights {
    let k_mode = sol.modes[0].k_max.max(sol.modes[1].k_max);
    let k_out = 2 * k_mode;
    let n = (2 * k_out + 2).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    // time samples of each component: w(t_m) = Σ_k u_k e^{−2πi km/n}
    let samples: Vec<[Vec<Complex64>; 2]> = sol
        .modes
        .iter()
        .map(|m| {
            let mut comps = [
                vec![Complex64::new(0.0, 0.0); n],
                vec![Complex64::new(0.0, 0.0); n],
            ];
            for k in m.ks() {
                let idx = k.rem_euclid(n as i64) as usize;
                let c = m.get(k);
                comps[0][idx] = c[0];
                comps[1][idx] = c[1];
            }
            for c in comps.iter_mut() {
                fwd.process(c);
            }
            comps
        })
        .collect();

    let corr = |a: usize, b: usize| -> Vec<Complex64> {
        let mut f: Vec<Complex64> = (0..n)
            .map(|m| {
                samples[a][0][m].conj() * samples[b][0][m]
                    - samples[a][1][m].conj() * samples[b][1][m]
            })
            .collect();
        inv.process(&mut f);
        let scale = 1.0 / n as f64;
        (-(k_out as i64)..=k_out as i64)
            .map(|q| f[q.rem_euclid(n as i64) as usize] * scale)
            .collect()
    };
    let g00 = corr(0, 0);
    let g11 = corr(1, 1);
    let g_plus = corr(1, 0);
    let g_minus = corr(0, 1);
    let g_phi = g11
        .iter()
        .zip(g00.iter())
        .map(|(a, b)| (a - b) * 0.5)
        .collect();
    FilterWeights {
        omega_d: sol.omega_d,
        eps01: sol.eps01,
        k_max: k_out,
        g_plus,
        g_minus,
        g_phi,
    }
}

/// Weights for a general, possibly time-dependent coupling operator
/// σ(t) = Σ_m s_m e^{−imω_d t} (harmonics in the same convention as
/// [`FourierHamiltonian`](crate::floquet::FourierHamiltonian)), by direct
/// convolution. With σ(t) = σ_z this reproduces [`filter_weights`].
pub fn coupling_weights(sol: &FloquetSolution, sigma: &[(i32, Mat2)]) -> FilterWeights {
    let k_mode = sol.modes[0].k_max.max(sol.modes[1].k_max) as i64;
    let order = sigma
        .iter()
        .map(|(m, _)| m.unsigned_abs() as i64)
        .max()
        .unwrap_or(0);
    let k_out = 2 * k_mode + order;
    // G_ab[q] = Σ_{k,m} u_{a,k}† s_m u_{b,k−m+q}
    let corr = |a: usize, b: usize| -> Vec<Complex64> {
        let (ma, mb) = (&sol.modes[a], &sol.modes[b]);
        (-k_out..=k_out)
            .map(|q| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in ma.ks() {
                    let x = ma.get(k);
                    for (m, s) in sigma {
                        let y = mb.get(k - *m as i64 + q);
                        let sy0 = s[(0, 0)] * y[0] + s[(0, 1)] * y[1];
                        let sy1 = s[(1, 0)] * y[0] + s[(1, 1)] * y[1];
                        acc += x[0].conj() * sy0 + x[1].conj() * sy1;
                    }
                }
                acc
            })
            .collect()
    };
    let g00 = corr(0, 0);
    let g11 = corr(1, 1);
    FilterWeights {
        omega_d: sol.omega_d,
        eps01: sol.eps01,
        k_max: k_out as usize,
        g_plus: corr(1, 0),
        g_minus: corr(0, 1),
        g_phi: g11
            .iter()
            .zip(g00.iter())
            .map(|(a, b)| (a - b) * 0.5)
            .collect(),
    }
}
