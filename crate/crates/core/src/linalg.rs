//! Closed-form helpers for 2×2 complex matrices.

use nalgebra::{Matrix2, Vector2};

use crate::Complex64;

pub type Mat2 = Matrix2<Complex64>;
pub type Vec2 = Vector2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, ONE)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Eigen-decomposition of a Hermitian 2×2 matrix, eigenvalues ascending.
pub fn eigh2(m: &Mat2) -> ([f64; 2], [Vec2; 2]) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = half.hypot(b.norm());
    let vals = [mean - r, mean + r];
    if b.norm() == 0.0 {
        let lo = Vec2::new(ZERO, ONE);
        let hi = Vec2::new(ONE, ZERO);
        return if a >= d {
            (vals, [lo, hi])
        } else {
            (vals, [hi, lo])
        };
    }
    let vecs = vals.map(|lam| {
        // rows of (M - λ) give two candidate null vectors
        let v1 = Vec2::new(b, Complex64::from(lam - a));
        let v2 = Vec2::new(Complex64::from(lam - d), b.conj());
        let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
        v / Complex64::from(v.norm())
    });
    (vals, vecs)
}

/// Eigenvalues and eigenvectors of a 2×2 unitary matrix.
///
/// Vectors come from the Hermitian combination whose eigenvalues are
/// ±sin(δ/2), with δ the eigenphase difference, so they stay well separated
/// unless the eigenvalues coincide.
pub fn eig_unitary2(u: &Mat2) -> ([Complex64; 2], [Vec2; 2]) {
    let tr = u[(0, 0)] + u[(1, 1)];
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    let beta = 0.5 * (l1.arg() + l2.arg()) + std::f64::consts::FRAC_PI_2;
    let rot = Complex64::from_polar(1.0, -beta);
    let m = (u * rot + u.adjoint() * rot.conj()) * Complex64::from(0.5);
    let (_, vecs) = eigh2(&m);
    let lam = vecs.map(|v| (v.adjoint() * u * v)[(0, 0)]);
    (lam, vecs)
}

/// Makes the largest-magnitude component of `v` real and positive.
/// Ties within a relative 1e-9 resolve to the lowest index.
pub fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|c| c.norm() >= max * (1.0 - 1e-9))
        .unwrap();
    let ph = v[pivot].conj() / v[pivot].norm();
    for c in v.iter_mut() {
        *c *= ph;
    }
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
}

/// exp(−i H t) for Hermitian 2×2 H.
pub fn expm_herm2(h: &Mat2, t: f64) -> Mat2 {
    let (vals, vecs) = eigh2(h);
    let mut out = Mat2::zeros();
    for (lam, v) in vals.iter().zip(vecs.iter()) {
        out += v * v.adjoint() * Complex64::from_polar(1.0, -lam * t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(a: f64, b: Complex64, d: f64) -> Mat2 {
        Mat2::new(Complex64::from(a), b, b.conj(), Complex64::from(d))
    }

    #[test]
    fn eigh2_reconstructs() {
        let m = herm(0.3, Complex64::new(0.7, -0.2), -1.1);
        let (vals, vecs) = eigh2(&m);
        assert!(vals[0] < vals[1]);
        for (l, v) in vals.iter().zip(vecs.iter()) {
            let r = m * v - v * Complex64::from(*l);
            assert!(r.norm() < 1e-14);
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
        let (vals, _) = eigh2(&herm(2.0, Complex64::new(0.0, 0.0), -1.0));
        assert_eq!(vals, [-1.0, 2.0]);
    }

    #[test]
    fn unitary_eigenpairs() {
        let h = herm(0.4, Complex64::new(0.3, 0.5), -0.2);
        let u = expm_herm2(&h, 1.7);
        let (lam, vecs) = eig_unitary2(&u);
        for (l, v) in lam.iter().zip(vecs.iter()) {
            assert!((u * v - v * *l).norm() < 1e-13);
            assert!((l.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn phase_fix_is_deterministic() {
        let mut a = [Complex64::new(0.0, 0.6), Complex64::new(-0.8, 0.0)];
        fix_phase(&mut a);
        assert_eq!(a[1], Complex64::new(0.8, 0.0));
        assert!((a[0] - Complex64::new(0.0, -0.6)).norm() < 1e-15);
    }
}
