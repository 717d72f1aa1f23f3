use nalgebra::{DMatrix, SymmetricEigen};

use super::{FloquetSolution, FourierHamiltonian, FourierModes, MAX_TRUNCATION, TAIL_TOL};
use crate::{Complex64, Error, Result};

/// Ordering of the (σ, k) index pairs in the extended matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockLayout {
    /// index = 2(k + K) + σ
    #[default]
    Interleaved,
    /// index = σ(2K + 1) + k + K
    Blocked,
}

impl BlockLayout {
    fn index(self, k: i64, s: usize, k_max: usize) -> usize {
        let kk = (k + k_max as i64) as usize;
        match self {
            BlockLayout::Interleaved => 2 * kk + s,
            BlockLayout::Blocked => s * (2 * k_max + 1) + kk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedOptions {
    pub k_hint: Option<usize>,
    pub layout: BlockLayout,
    pub tail_tol: f64,
}

impl Default for ExtendedOptions {
    fn default() -> Self {
        Self {
            k_hint: None,
            layout: BlockLayout::default(),
            tail_tol: TAIL_TOL,
        }
    }
}

/// Truncated Floquet Hamiltonian H̄ = H̄_q + Λ̄ on |k| ≤ `k_max`, with
/// ⟨σ′,k′|H̄|σ,k⟩ = h_{k′−k}[σ′,σ] − k′ω δ.
pub fn extended_matrix(
    h: &FourierHamiltonian,
    k_max: usize,
    layout: BlockLayout,
) -> DMatrix<Complex64> {
    let n = 2 * (2 * k_max + 1);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let km = k_max as i64;
    for kp in -km..=km {
        for (order, hm) in &h.harmonics {
            let k = kp - *order as i64;
            if k < -km || k > km {
                continue;
            }
            for sp in 0..2 {
                for s in 0..2 {
                    m[(layout.index(kp, sp, k_max), layout.index(k, s, k_max))] += hm[(sp, s)];
                }
            }
        }
        for s in 0..2 {
            let i = layout.index(kp, s, k_max);
            m[(i, i)] -= Complex64::from(kp as f64 * h.omega);
        }
    }
    m
}

/// Diagonalises the extended Hamiltonian, doubling K until the selected modes
/// have decayed at the truncation edge.
pub fn solve_extended(h: &FourierHamiltonian, opts: &ExtendedOptions) -> Result<FloquetSolution> {
    h.validate()?;
    let mut k_max = opts
        .k_hint
        .unwrap_or_else(|| h.default_truncation())
        .max(h.max_order() + 2);
    loop {
        let (pairs, tail) = solve_at(h, k_max, opts.layout)?;
        if tail < opts.tail_tol {
            let [a, b] = pairs;
            return Ok(FloquetSolution::from_pairs(h.omega, a, b, k_max));
        }
        if k_max >= MAX_TRUNCATION {
            return Err(Error::TruncationCap {
                cap: MAX_TRUNCATION,
                tail,
            });
        }
        k_max = (2 * k_max).min(MAX_TRUNCATION);
    }
}

type Pair = (f64, FourierModes);

fn solve_at(h: &FourierHamiltonian, k_max: usize, layout: BlockLayout) -> Result<([Pair; 2], f64)> {
    let m = extended_matrix(h, k_max, layout);
    let (values, vectors): (Vec<f64>, Vec<Vec<Complex64>>) = if h.is_real() {
        let real = m.map(|c| c.re);
        let eig = SymmetricEigen::new(real);
        let vecs = (0..eig.eigenvalues.len())
            .map(|c| {
                eig.eigenvectors
                    .column(c)
                    .iter()
                    .map(|&x| Complex64::from(x))
                    .collect()
            })
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let eig = SymmetricEigen::new(m);
        let vecs = (0..eig.eigenvalues.len())
            .map(|c| eig.eigenvectors.column(c).iter().copied().collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };

    let half = 0.5 * h.omega;
    let slack = 1e-12 * h.omega;
    let km = k_max as i64;
    let mut candidates: Vec<(f64, usize)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > -half - slack && v <= half + slack)
        .map(|(i, _)| {
            let centroid: f64 = (-km..=km)
                .map(|k| {
                    let a = vectors[i][layout.index(k, 0, k_max)].norm_sqr();
                    let b = vectors[i][layout.index(k, 1, k_max)].norm_sqr();
                    k as f64 * (a + b)
                })
                .sum();
            (centroid.abs(), i)
        })
        .collect();
    if candidates.len() < 2 {
        return Err(Error::NoRoot(format!(
            "fewer than two quasi-energies in the zone at K = {k_max}"
        )));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let pick = |i: usize| -> Pair {
        let mut modes = FourierModes::zeros(k_max);
        for k in -km..=km {
            modes.coeffs[(k + km) as usize] = [
                vectors[i][layout.index(k, 0, k_max)],
                vectors[i][layout.index(k, 1, k_max)],
            ];
        }
        (values[i], modes)
    };
    let a = pick(candidates[0].1);
    let b = pick(candidates[1].1);
    let tail = a.1.tail().max(b.1.tail());
    Ok(([a, b], tail))
}
