use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use floqsweet::circuit::{Fluxonium, FluxoniumParams, TwoLevelParams};
use floqsweet::dynamics::*;
use floqsweet::floquet::floquet_solve_extended;
use floqsweet::noise::filter_weights;
use floqsweet::{Complex64, Error};
use proptest::prelude::*;

/// m = 2 sweet point of the reference circuit at φ_dc/2π = 0.52.
fn working_point() -> TwoLevelParams {
    static TL: OnceLock<TwoLevelParams> = OnceLock::new();
    *TL.get_or_init(|| {
        let q = Fluxonium::new(FluxoniumParams::new(0.5, 4.0, 1.3)).unwrap();
        let base = q.reduce(0.0, 0.52, 1.0).unwrap();
        let amp = 0.875 * base.omega_ge();
        let w = sweet_omega_near(&base, amp, 0.321 * TAU).unwrap();
        base.with_amp(amp).with_omega(w)
    })
}

fn pair() -> &'static (TwoQubitSystem, TwoQubitGate) {
    static GATE: OnceLock<(TwoQubitSystem, TwoQubitGate)> = OnceLock::new();
    GATE.get_or_init(|| {
        let sys = TwoQubitSystem::reference();
        let (idle, gate, right) = sys.default_points().unwrap();
        let g = TwoQubitGate::new(&sys, idle, gate, right, 1e-6).unwrap();
        (sys, g)
    })
}

fn eps01(tl: &TwoLevelParams) -> f64 {
    floquet_solve_extended(tl, None).unwrap().eps01
}

#[test]
fn holding_the_drive_is_identity_in_floquet_frame() {
    let tl = working_point();
    let periods = 7.0 * TAU / tl.omega_d;
    let ev = phase_gate(&tl, 0.0, periods, 0.0, Gate::Identity).unwrap();
    let u = &ev.result.unitary_floquet_frame;
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((u[(i, j)] - Complex64::from(want)).norm() < 1e-8, "{u}");
        }
    }
    assert!(ev.relative_phase.abs() < 1e-8);
}

#[test]
fn zero_amplitude_tone_is_identity() {
    let tl = working_point();
    let tone = SecondaryTone::new(0.0, eps01(&tl), 0.0);
    let r = rabi_gate(&tl, tone, 13.7, Gate::Identity).unwrap();
    // non-integer duration: only the dynamical phases remain, already removed
    assert!((r.fidelity - 1.0).abs() < 1e-8, "{}", r.fidelity);
}

#[test]
fn calibrated_rabi_gates() {
    let tl = working_point();
    for g in [Gate::X, Gate::SqrtX] {
        let c = calibrate_rabi_gate(&tl, g, 60.0).unwrap();
        assert!(c.result.fidelity >= 0.999, "{g:?} {}", c.result.fidelity);
        assert!(c.result.unitarity_error < 1e-8);
        assert!(
            c.estimate_fidelity > 0.99,
            "rotating-wave estimate {}",
            c.estimate_fidelity
        );
    }
    assert!(calibrate_rabi_gate(&tl, Gate::S, 60.0).is_err());
}

#[test]
fn chevron_peaks_on_resonance() {
    let tl = working_point();
    let sol = floquet_solve_extended(&tl, None).unwrap();
    let c = filter_weights(&sol).unwrap().plus(0);
    let amp = 0.01;
    let t_pi = PI / (c.norm() * amp);
    // ramp_fraction 0.1 removes 10% of the area
    let duration = t_pi / 0.9;
    let det = 0.6 * c.norm() * amp;
    let carriers = [sol.eps01 - det, sol.eps01, sol.eps01 + det];
    let pts = rabi_chevron(&tl, amp, c.arg(), &[duration], &carriers).unwrap();
    assert!(pts[1].p1 > 0.99, "{pts:?}");
    assert!(pts[0].p1 < 0.9 && pts[2].p1 < 0.9, "{pts:?}");
    assert!((pts[0].p1 - pts[2].p1).abs() < 1e-2, "{pts:?}");
}

#[test]
fn phase_gates() {
    let tl = working_point();
    for g in [Gate::S, Gate::T] {
        let c = calibrate_phase_gate(&tl, g, 20.0, 5.0).unwrap();
        assert!(c.result.fidelity >= 0.999, "{g:?} {}", c.result.fidelity);
        assert!((c.simulated_phase - g.phase().unwrap()).abs() < 1e-6);
    }
}

#[test]
fn phase_predictor_tracks_simulation() {
    let tl = working_point();
    for da in [0.01, -0.02, 0.03] {
        let pred = predicted_phase(&tl, da, 15.0, 4.0).unwrap();
        let sim = phase_gate(&tl, da, 15.0, 4.0, Gate::Identity)
            .unwrap()
            .relative_phase;
        assert!((pred - sim).abs() < 1e-3, "δA {da}: {pred} vs {sim}");
    }
    let zero = phase_gate(&tl, 0.0, 15.0, 4.0, Gate::Identity).unwrap();
    assert!(zero.relative_phase.abs() < 1e-8);
    assert!((zero.result.fidelity - 1.0).abs() < 1e-8);
}

#[test]
fn adiabatic_map_fidelity() {
    let tl = working_point();
    let m30 = adiabatic_map(&tl, 30.0).unwrap();
    assert!(m30.mean_fidelity >= 0.99, "{}", m30.mean_fidelity);
    assert_ne!(m30.targets[0], m30.targets[1]);
    let mut last = 0.0;
    for t in [100.0, 150.0, 200.0, 300.0] {
        let f = adiabatic_map(&tl, t).unwrap().mean_fidelity;
        // integration error floor ~1e-9
        assert!(f >= last - 1e-8, "{t}: {f} < {last}");
        last = f;
    }
    assert!(last > 1.0 - 1e-6);
}

#[test]
fn fast_ramp_approaches_sudden_overlap() {
    let tl = working_point();
    let sudden = adiabatic_map(&tl, 0.0).unwrap();
    let fast = adiabatic_map(&tl, 1e-3).unwrap();
    for j in 0..2 {
        for k in 0..2 {
            assert!((fast.populations[j][k] - sudden.sudden_overlap[j][k]).abs() < 1e-3);
            assert_eq!(sudden.populations[j][k], sudden.sudden_overlap[j][k]);
        }
    }
}

#[test]
fn gap_closure_is_reported() {
    let q = Fluxonium::new(FluxoniumParams::new(0.5, 4.0, 1.3)).unwrap();
    let base = q.reduce(0.0, 0.52, 1.0).unwrap();
    let p = sweet_point_at(&base, 0.1 * base.omega_ge()).unwrap();
    match adiabatic_map(&p.apply(&base), 30.0) {
        Err(Error::GapClosure { .. }) => {}
        other => panic!("expected gap closure, got {other:?}"),
    }
}

#[test]
fn static_flip_flop_limit() {
    // equal splittings 0.5, mixing angles swapped
    let l = TwoLevelParams::new(0.3, 0.0, 0.4, 2.0);
    let r = TwoLevelParams::new(0.4, 0.0, 0.3, 2.0);
    let sl = floquet_solve_extended(&l, None).unwrap();
    let sr = floquet_solve_extended(&r, None).unwrap();
    let j = 0.01;
    let c = interaction_picture(&sl, &sr, j, 2, 1e-9).unwrap();
    assert!(c.resonant);
    let want = j * (0.3 / 0.5) * (0.4 / 0.5);
    assert!(
        (c.flip_flop.norm() - want).abs() < 1e-12,
        "{} vs {want}",
        c.flip_flop.norm()
    );
    let zz = j * (0.4 / 0.5) * (0.3 / 0.5);
    assert!((c.zz.norm() - zz).abs() < 1e-12);
    let none = interaction_picture(&sl, &sr, 0.0, 2, 1e-9).unwrap();
    assert!(none.terms.is_empty() && none.flip_flop.norm() == 0.0);
}

#[test]
fn zz_vanishes_on_sweet_manifold() {
    let (sys, g) = pair();
    let j = sys.j_angular();
    assert!(g.coupling_at_gate.zz.norm() < 1e-12 * j);
    assert!(g.coupling_at_idle.zz.norm() < 1e-12 * j);
    assert!(g.coupling_at_gate.resonant);
    assert!(!g.coupling_at_idle.resonant);

    // left qubit off its manifold, right qubit still sweet
    let (_, tl, _, _) = sys.bases().unwrap();
    let off = g.path.gate().apply(&tl).with_bias(tl.bias * 1.01);
    let left = fold_difference(&floquet_solve_extended(&off, None).unwrap());
    let right = fold_difference(&floquet_solve_extended(&g.right, None).unwrap());
    let c = interaction_picture(&left, &right, j, 2, 1e-3).unwrap();
    assert!(c.zz.norm() < 1e-12 * j, "{}", c.zz.norm() / j);
}

#[test]
fn swap_period_matches_rotating_wave_prediction() {
    let (_, g) = pair();
    let s = g.swap_period().unwrap();
    assert!(s.relative_error < 0.02, "{s:?}");
    let t = g.coupling_at_gate.sqrt_iswap_time();
    assert!((t - s.predicted / 4.0).abs() < 1e-12);
}

#[test]
fn sqrt_iswap_fidelity() {
    let (_, g) = pair();
    let r = g.simulate(56.0, 12.0).unwrap();
    assert!(r.fidelity >= 0.999, "{}", r.fidelity);
    assert!(r.unitarity_error < 1e-8);
    assert_eq!(r.target, Gate::SqrtIswap);
}

#[test]
fn path_stays_on_manifold() {
    let (sys, g) = pair();
    assert!(g.path.max_residual <= 1e-6);
    let (_, tl, _, _) = sys.bases().unwrap();
    let mid = 0.5 * (g.path.amps[0] + g.path.amps[g.path.amps.len() - 1]);
    let p = TwoQubitPoint {
        amp: mid,
        omega_d: g.path.omega_at(mid),
    };
    let d = floqsweet::sweetspot::dispersion(&p.apply(&tl)).unwrap();
    assert!(d.d_bias.abs() < 1e-6);
}

#[test]
fn noiseless_open_run_matches_closed() {
    let (sys, g) = pair();
    let opts = OpenSystemOptions {
        samples: 1,
        tan_delta_c: 0.0,
        delta_f: 0.0,
        ..Default::default()
    };
    let r = g.simulate_open(sys, 20.0, 10.0, &opts).unwrap();
    assert!((r.fidelity - r.closed_fidelity).abs() < 1e-6, "{r:?}");
    assert!(!r.method.is_empty());
}

#[test]
fn open_run_is_seeded() {
    let (sys, g) = pair();
    let opts = OpenSystemOptions {
        samples: 2,
        seed: 7,
        ..Default::default()
    };
    let a = g.simulate_open(sys, 20.0, 10.0, &opts).unwrap();
    let b = g.simulate_open(sys, 20.0, 10.0, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.fidelity <= 1.0 && a.fidelity > 0.0);
    assert!(a.sigma_phi_dc.iter().all(|s| *s > 0.0));
}

#[test]
fn invalid_inputs() {
    let mut sys = TwoQubitSystem::reference();
    sys.j_coupling = -1.0;
    assert!(sys.validate().is_err());
    let tl = working_point();
    assert!(adiabatic_map(&tl, -1.0).is_err());
    assert!(calibrate_rabi_gate(&tl, Gate::X, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn closed_runs_stay_unitary(amp in 0.0..0.1f64, detune in -0.05..0.05f64, phase in 0.0..TAU, dur in 5.0..40.0f64) {
        let tl = working_point();
        let tone = SecondaryTone::new(amp, eps01(&tl) + detune, phase);
        let r = rabi_gate(&tl, tone, dur, Gate::X).unwrap();
        prop_assert!(r.unitarity_error < 1e-8);
        prop_assert!((0.0..=1.0).contains(&r.fidelity));
        let last = &r.populations.last().unwrap().1;
        prop_assert!((last[0] + last[1] - 1.0).abs() < 1e-8);
    }
}
