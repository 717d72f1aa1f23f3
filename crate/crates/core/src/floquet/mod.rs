//! Floquet states of a periodically driven two-level system.
//!
//! Two independent solvers share one result type: [`solve_extended`]
//! diagonalises the Fourier-space (Sambe) Hamiltonian, [`solve_monodromy`]
//! integrates one drive period and reconstructs the modes stroboscopically.
//!
//! Modes follow |w_j(t)⟩ = Σ_k u_{jk} e^{−ikω_d t}, with components in the
//! σ_z eigenbasis (z⁺ first).

mod extended;
mod monodromy;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::circuit::TwoLevelParams;
use crate::linalg::{self, Mat2, Vec2};
use crate::{Complex64, Error, Result};

pub use extended::{extended_matrix, solve_extended, BlockLayout, ExtendedOptions};
pub use monodromy::{integrate_propagator, monodromy_matrix, solve_monodromy, MonodromyOptions};

/// Hard cap on the Fourier truncation.
pub const MAX_TRUNCATION: usize = 4096;
/// Required decay of the mode coefficients at the truncation edge.
pub const TAIL_TOL: f64 = 1e-12;
/// Relative quasi-energy separation (in units of ω_d) below which a solution is
/// flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// H(t) = Σ_m h_m e^{−imω t}; `harmonics` must satisfy h_{−m} = h_m†.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHamiltonian {
    pub omega: f64,
    pub harmonics: Vec<(i32, Mat2)>,
    /// Preferred starting truncation, if the model knows one.
    pub k_default: Option<usize>,
}

impl FourierHamiltonian {
    pub fn new(omega: f64, harmonics: Vec<(i32, Mat2)>) -> Self {
        Self {
            omega,
            harmonics,
            k_default: None,
        }
    }

    /// Δ/2 σ_x + (A cos ω t + B/2) σ_z.
    pub fn two_level(tl: &TwoLevelParams) -> Self {
        let c = Complex64::from;
        let h0 = Matrix2::new(
            c(0.5 * tl.bias),
            c(0.5 * tl.delta),
            c(0.5 * tl.delta),
            c(-0.5 * tl.bias),
        );
        let h1 = linalg::sigma_z() * c(0.5 * tl.amp);
        let mut harmonics = vec![(0, h0)];
        if tl.amp != 0.0 {
            harmonics.push((1, h1));
            harmonics.push((-1, h1));
        }
        let k = ((4.0 * (tl.amp.abs() + tl.bias.abs() + tl.delta.abs()) / tl.omega_d).ceil()
            as usize)
            .saturating_add(10)
            .min(MAX_TRUNCATION);
        Self {
            omega: tl.omega_d,
            harmonics,
            k_default: Some(k),
        }
    }

    pub fn at(&self, t: f64) -> Mat2 {
        let mut h = Mat2::zeros();
        for (m, hm) in &self.harmonics {
            h += hm * Complex64::from_polar(1.0, -(*m as f64) * self.omega * t);
        }
        h
    }

    pub fn harmonic(&self, m: i32) -> Mat2 {
        self.harmonics
            .iter()
            .filter(|(k, _)| *k == m)
            .map(|(_, h)| *h)
            .sum()
    }

    pub fn max_order(&self) -> usize {
        self.harmonics
            .iter()
            .map(|(m, _)| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.harmonics
            .iter()
            .all(|(_, h)| h.iter().all(|c| c.im == 0.0))
    }

    pub fn default_truncation(&self) -> usize {
        self.k_default.unwrap_or_else(|| {
            let norm: f64 = self.harmonics.iter().map(|(_, h)| h.norm()).sum();
            let order = self.max_order().max(1) as f64;
            ((4.0 * 2.0 * norm * order / self.omega).ceil() as usize)
                .saturating_add(10)
                .min(MAX_TRUNCATION)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid(format!(
                "drive frequency must be positive, got {}",
                self.omega
            )));
        }
        for (m, h) in &self.harmonics {
            if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::invalid(format!("harmonic {m} is not finite")));
            }
            let partner = self.harmonic(-m);
            if (partner - self.harmonic(*m).adjoint()).norm() > 1e-12 * (1.0 + h.norm()) {
                return Err(Error::invalid(format!(
                    "harmonics {m} and {} are not adjoint",
                    -m
                )));
            }
        }
        Ok(())
    }
}

/// Fourier coefficients u_k for k = −K..=K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierModes {
    pub k_max: usize,
    pub coeffs: Vec<[Complex64; 2]>,
}

impl FourierModes {
    pub fn zeros(k_max: usize) -> Self {
        Self {
            k_max,
            coeffs: vec![[Complex64::new(0.0, 0.0); 2]; 2 * k_max + 1],
        }
    }

    pub fn get(&self, k: i64) -> [Complex64; 2] {
        let idx = k + self.k_max as i64;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            [Complex64::new(0.0, 0.0); 2]
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn ks(&self) -> impl Iterator<Item = i64> {
        let k = self.k_max as i64;
        -k..=k
    }

    /// |w(t)⟩.
    pub fn at(&self, omega: f64, t: f64) -> Vec2 {
        let mut v = Vec2::zeros();
        for (k, c) in self.ks().zip(self.coeffs.iter()) {
            let ph = Complex64::from_polar(1.0, -(k as f64) * omega * t);
            v[0] += c[0] * ph;
            v[1] += c[1] * ph;
        }
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
            .sum()
    }

    /// Extended-space inner product ⟨self|other⟩.
    pub fn inner(&self, other: &FourierModes) -> Complex64 {
        let kmax = self.k_max.max(other.k_max) as i64;
        (-kmax..=kmax)
            .map(|k| {
                let a = self.get(k);
                let b = other.get(k);
                a[0].conj() * b[0] + a[1].conj() * b[1]
            })
            .sum()
    }

    /// Largest coefficient magnitude among the outermost two shells.
    pub fn tail(&self) -> f64 {
        let k = self.k_max as i64;
        [-k, -k + 1, k - 1, k]
            .iter()
            .flat_map(|&q| self.get(q))
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Brillouin replica: coefficient at k moves to k + n, so the quasi-energy
    /// shifts by −nω.
    pub fn shifted(&self, n: i64) -> FourierModes {
        let k_max = self.k_max + n.unsigned_abs() as usize;
        let mut out = FourierModes::zeros(k_max);
        for k in self.ks() {
            out.coeffs[(k + n + k_max as i64) as usize] = self.get(k);
        }
        out
    }

    /// Drops coefficients beyond |k| = `k_max`.
    pub fn truncated(&self, k_max: usize) -> FourierModes {
        let mut out = FourierModes::zeros(k_max);
        for k in out.ks().collect::<Vec<_>>() {
            out.coeffs[(k + k_max as i64) as usize] = self.get(k);
        }
        out
    }

    /// Period average of ⟨w(t)|σ_z|w(t)⟩.
    pub fn mean_sigma_z(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c[0].norm_sqr() - c[1].norm_sqr())
            .sum()
    }

    fn scale(&mut self, s: Complex64) {
        for c in &mut self.coeffs {
            c[0] *= s;
            c[1] *= s;
        }
    }

    fn fix_gauge(&mut self) {
        let mut flat: Vec<Complex64> = self.coeffs.iter().flat_map(|c| c.iter().copied()).collect();
        linalg::fix_phase(&mut flat);
        for (c, pair) in self.coeffs.iter_mut().zip(flat.chunks(2)) {
            c[0] = pair[0];
            c[1] = pair[1];
        }
    }

    fn combine(a: &FourierModes, ca: Complex64, b: &FourierModes, cb: Complex64) -> FourierModes {
        let k_max = a.k_max.max(b.k_max);
        let mut out = FourierModes::zeros(k_max);
        for k in out.ks().collect::<Vec<_>>() {
            let x = a.get(k);
            let y = b.get(k);
            out.coeffs[(k + k_max as i64) as usize] =
                [x[0] * ca + y[0] * cb, x[1] * ca + y[1] * cb];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMethod {
    /// ε_0 ≤ ε_1 within the first zone.
    ZoneOrder,
    /// Degenerate pair resolved by diagonalising the period-averaged σ_z.
    SigmaZ,
    /// Continued from the undriven eigenstates, w_0 ↔ |g⟩.
    Continuation,
    /// Maximal overlap with a reference solution.
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub method: LabelMethod,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetSolution {
    pub omega_d: f64,
    /// Quasi-energies in (−ω_d/2, ω_d/2].
    pub eps: [f64; 2],
    /// ε_1 − ε_0.
    pub eps01: f64,
    pub modes: [FourierModes; 2],
    pub truncation_k: usize,
    pub labeling: Labeling,
}

pub(crate) fn fold(eps: f64, omega: f64) -> f64 {
    let half = 0.5 * omega;
    let mut e = (eps + half).rem_euclid(omega) - half;
    if e <= -half {
        e += omega;
    }
    e
}

impl FloquetSolution {
    /// Assembles a solution from two raw (quasi-energy, mode) pairs in zone
    /// order, resolving degenerate pairs and fixing gauges.
    pub(crate) fn from_pairs(
        omega: f64,
        a: (f64, FourierModes),
        b: (f64, FourierModes),
        truncation_k: usize,
    ) -> Self {
        let (mut a, mut b) = (a, b);
        a.0 = fold(a.0, omega);
        b.0 = fold(b.0, omega);
        if b.0 < a.0 {
            std::mem::swap(&mut a, &mut b);
        }
        let eps01 = b.0 - a.0;
        let near_zero = eps01 < DEGENERACY_TOL * omega;
        let near_omega = omega - eps01 < DEGENERACY_TOL * omega;
        let mut labeling = Labeling {
            method: LabelMethod::ZoneOrder,
            degenerate: false,
        };
        let (mut m0, mut m1) = (a.1, b.1);
        if near_zero || near_omega {
            // align b onto a's replica, mix, shift back
            let n: i64 = if near_omega { 1 } else { 0 };
            let bb = m1.shifted(n);
            let sz = |x: &FourierModes, y: &FourierModes| -> Complex64 {
                let kmax = x.k_max.max(y.k_max) as i64;
                (-kmax..=kmax)
                    .map(|k| {
                        let p = x.get(k);
                        let q = y.get(k);
                        p[0].conj() * q[0] - p[1].conj() * q[1]
                    })
                    .sum()
            };
            let m = Matrix2::new(sz(&m0, &m0), sz(&m0, &bb), sz(&bb, &m0), sz(&bb, &bb));
            let (_, vecs) = linalg::eigh2(&m);
            let lo = FourierModes::combine(&m0, vecs[0][0], &bb, vecs[0][1]);
            let hi = FourierModes::combine(&m0, vecs[1][0], &bb, vecs[1][1]).shifted(-n);
            m0 = lo.truncated(truncation_k.max(m0.k_max));
            m1 = hi.truncated(truncation_k.max(m1.k_max));
            labeling = Labeling {
                method: LabelMethod::SigmaZ,
                degenerate: true,
            };
        }
        for m in [&mut m0, &mut m1] {
            let n = m.norm_sqr().sqrt();
            m.scale(Complex64::from(1.0 / n));
            m.fix_gauge();
        }
        Self {
            omega_d: omega,
            eps: [a.0, b.0],
            eps01,
            modes: [m0, m1],
            truncation_k,
            labeling,
        }
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega_d
    }

    pub fn is_degenerate(&self) -> bool {
        self.labeling.degenerate
    }

    /// |w_j(t)⟩.
    pub fn mode_at(&self, j: usize, t: f64) -> Vec2 {
        self.modes[j].at(self.omega_d, t)
    }

    /// Exchanges the two labels.
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        out.eps.swap(0, 1);
        out.modes.swap(0, 1);
        out.eps01 = out.eps[1] - out.eps[0];
        out
    }

    /// Relabels so that each mode has maximal overlap with the same-index mode
    /// of `reference`.
    pub fn relabel_like(&self, reference: &FloquetSolution) -> Self {
        let keep = self.overlap(0, reference, 0) + self.overlap(1, reference, 1);
        let swap = self.overlap(0, reference, 1) + self.overlap(1, reference, 0);
        let mut out = if swap > keep {
            self.swapped()
        } else {
            self.clone()
        };
        out.labeling.method = LabelMethod::Overlap;
        out
    }

    /// Period-averaged |⟨w_j(t)|w'_i(t)⟩|², insensitive to Brillouin replicas.
    pub fn overlap(&self, j: usize, other: &FloquetSolution, i: usize) -> f64 {
        const SAMPLES: usize = 16;
        (0..SAMPLES)
            .map(|s| {
                let t = s as f64 / SAMPLES as f64;
                let a = self.mode_at(j, t * self.period());
                let b = other.mode_at(i, t * other.period());
                (a.adjoint() * b)[(0, 0)].norm_sqr()
            })
            .sum::<f64>()
            / SAMPLES as f64
    }

    /// U(t, 0) = Σ_j |w_j(t)⟩⟨w_j(0)| e^{−iε_j t}.
    pub fn propagator(&self, t: f64) -> Mat2 {
        let mut u = Mat2::zeros();
        for j in 0..2 {
            let wt = self.mode_at(j, t);
            let w0 = self.mode_at(j, 0.0);
            u += wt * w0.adjoint() * Complex64::from_polar(1.0, -self.eps[j] * t);
        }
        u
    }

    /// Period average of ⟨w_j|σ_z|w_j⟩.
    pub fn mean_sigma_z(&self, j: usize) -> f64 {
        self.modes[j].mean_sigma_z()
    }
}

/// Extended-space solution of the two-level model with the default options.
pub fn floquet_solve_extended(
    tl: &TwoLevelParams,
    k_hint: Option<usize>,
) -> Result<FloquetSolution> {
    let h = FourierHamiltonian::two_level(tl);
    solve_extended(
        &h,
        &ExtendedOptions {
            k_hint,
            ..ExtendedOptions::default()
        },
    )
}

/// Monodromy solution of the two-level model with the default options.
pub fn floquet_solve_monodromy(tl: &TwoLevelParams) -> Result<FloquetSolution> {
    solve_monodromy(
        &FourierHamiltonian::two_level(tl),
        &MonodromyOptions::default(),
    )
}

/// U_q(t, 0) assembled from the Floquet solution.
pub fn floquet_propagator(tl: &TwoLevelParams, t: f64) -> Result<Mat2> {
    Ok(floquet_solve_monodromy(tl)?.propagator(t))
}

/// Solution labelled by continuation from the undriven eigenstates: the drive
/// amplitude is raised from zero in `steps` increments, tracking overlaps, so
/// that w_0 connects to the static ground state.
pub fn solve_continued(tl: &TwoLevelParams, steps: usize) -> Result<FloquetSolution> {
    let steps = steps.max(1);
    let h_static = FourierHamiltonian::two_level(&tl.with_amp(0.0));
    let (_, vecs) = linalg::eigh2(&h_static.harmonic(0));
    let mut prev = floquet_solve_monodromy(&tl.with_amp(0.0))?;
    let ground = vecs[0];
    let w0 = prev.mode_at(0, 0.0);
    if (w0.adjoint() * ground)[(0, 0)].norm_sqr() < 0.5 {
        prev = prev.swapped();
    }
    for s in 1..=steps {
        let amp = tl.amp * s as f64 / steps as f64;
        let sol = floquet_solve_monodromy(&tl.with_amp(amp))?;
        prev = sol.relabel_like(&prev);
    }
    prev.labeling.method = LabelMethod::Continuation;
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_into_zone() {
        let w = 2.0;
        assert_eq!(fold(1.0, w), 1.0);
        assert_eq!(fold(-1.0, w), 1.0);
        assert!((fold(2.5, w) - 0.5).abs() < 1e-15);
        assert!((fold(-0.3, w) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn two_level_harmonics_are_adjoint() {
        let tl = TwoLevelParams::new(1.0, 0.7, 0.3, 2.0);
        let h = FourierHamiltonian::two_level(&tl);
        h.validate().unwrap();
        assert!(h.is_real());
        let t = 0.37;
        let direct = h.at(t);
        let expected = Matrix2::new(
            Complex64::from(0.7 * (2.0 * t).cos() + 0.15),
            Complex64::from(0.5),
            Complex64::from(0.5),
            Complex64::from(-0.7 * (2.0 * t).cos() - 0.15),
        );
        assert!((direct - expected).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_series() {
        let h = FourierHamiltonian::new(1.0, vec![(1, linalg::sigma_x())]);
        assert!(h.validate().is_err());
        let h = FourierHamiltonian::new(0.0, vec![]);
        assert!(h.validate().is_err());
    }
}
