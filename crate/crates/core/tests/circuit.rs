use std::f64::consts::PI;

use floqsweet::circuit::{diagonalize_fluxonium, two_level_reduce, Fluxonium, FluxoniumParams};
use floqsweet::units::TWO_PI;
use nalgebra::{DMatrix, SymmetricEigen};

fn fig1() -> FluxoniumParams {
    FluxoniumParams::new(0.5, 4.0, 1.3)
}

/// Sinc-DVR discretisation of the circuit on a uniform phase grid:
/// kinetic 4E_C n² from the Colbert–Miller formula, potential diagonal.
/// Returns (lowest energies, ⟨0|φ̂|1⟩ magnitude).
fn phase_grid(
    params: &FluxoniumParams,
    phi_dc: f64,
    points: usize,
    half_width: f64,
) -> (Vec<f64>, f64) {
    let dx = 2.0 * half_width / (points - 1) as f64;
    let theta: Vec<f64> = (0..points).map(|i| -half_width + i as f64 * dx).collect();
    let mut h = DMatrix::<f64>::zeros(points, points);
    for i in 0..points {
        for j in 0..points {
            let kin = if i == j {
                PI * PI / 3.0
            } else {
                let d = i as f64 - j as f64;
                2.0 * if (i + j) % 2 == 0 { 1.0 } else { -1.0 } / (d * d)
            };
            h[(i, j)] = 4.0 * params.e_c * kin / (dx * dx);
        }
        h[(i, i)] += 0.5 * params.e_l * theta[i].powi(2) - params.e_j * (theta[i] - phi_dc).cos();
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..points).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().take(4).map(|&i| eig.eigenvalues[i]).collect();
    let v0 = eig.eigenvectors.column(order[0]);
    let v1 = eig.eigenvectors.column(order[1]);
    let phi_01: f64 = (0..points)
        .map(|i| v0[i] * (theta[i] - phi_dc) * v1[i])
        .sum();
    (energies, phi_01.abs())
}

#[test]
fn oscillator_basis_matches_phase_grid() {
    for &phi_dc in &[PI, PI + TWO_PI * 0.02, 2.3] {
        let spec = diagonalize_fluxonium(&fig1(), phi_dc).unwrap();
        let (grid, phi_01) = phase_grid(&fig1(), phi_dc, 481, 18.0);
        for l in 0..4 {
            let rel = (spec.energies[l] - grid[l]).abs() / grid[l].abs().max(1.0);
            assert!(
                rel < 1e-8,
                "level {l} at {phi_dc}: {} vs {}",
                spec.energies[l],
                grid[l]
            );
        }
        assert!((spec.phi_matrix[(0, 1)].abs() - phi_01).abs() < 1e-7);
    }
}

#[test]
fn half_flux_is_an_extremum_of_the_transition() {
    let p = fig1();
    let at = |x: f64| diagonalize_fluxonium(&p, x).unwrap().omega_ge();
    let centre = at(PI);
    for h in [1e-3, 1e-2, 5e-2] {
        let plus = at(PI + h);
        let minus = at(PI - h);
        assert!((plus - minus).abs() < 1e-9 * centre);
        assert!(plus > centre);
    }
}

#[test]
fn large_anharmonicity_at_half_flux() {
    let spec = diagonalize_fluxonium(&fig1(), PI).unwrap();
    let ge = spec.energies[1] - spec.energies[0];
    let ef = spec.energies[2] - spec.energies[1];
    assert!(ef > ge);
    for l in 0..spec.energies.len() {
        assert!(spec.phi_matrix[(l, l)] + PI < 1e-9);
    }
    for w in spec.energies.windows(2) {
        assert!(w[1] > w[0]);
    }
}

#[test]
fn bias_slope_matches_circuit_dispersion() {
    // dΩ/dφ_dc of the circuit vs the two-level prediction (B/Ω) dB/dφ_dc
    let q = Fluxonium::new(fig1()).unwrap();
    let phi_dc = PI + TWO_PI * 0.02;
    let tl = two_level_reduce(&q.spectrum_at_pi, 0.0, phi_dc, 1.0).unwrap();
    let expected_bias = 2.0 * q.e_l() * (TWO_PI * 0.02) * q.phi_ge();
    assert!((tl.bias - expected_bias).abs() < 1e-12 * expected_bias);

    let h = 1e-5;
    let omega = |x: f64| TWO_PI * diagonalize_fluxonium(&fig1(), x).unwrap().omega_ge();
    let circuit_slope = (omega(phi_dc + h) - omega(phi_dc - h)) / (2.0 * h);
    let two_level_slope = tl.bias / tl.omega_ge() * tl.bias_per_flux().unwrap();
    let rel = (circuit_slope - two_level_slope).abs() / circuit_slope.abs();
    assert!(
        rel < 0.1,
        "circuit {circuit_slope} two-level {two_level_slope}"
    );
}

#[test]
fn reference_circuit_values() {
    let q = Fluxonium::new(fig1()).unwrap();
    let delta_ghz = q.delta() / TWO_PI;
    assert!(delta_ghz > 0.1 && delta_ghz < 1.0, "{delta_ghz}");
    assert!(q.phi_ge() > 1.0 && q.phi_ge() < 3.0);
}
