//! End-to-end checks of the library and binary against reference values.
//! Each test prints one PASS/FAIL line; run with `--nocapture` to see them.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;

use floqsweet::circuit::{Fluxonium, FluxoniumParams, TwoLevelParams};
use floqsweet::dynamics::{
    adiabatic_map, calibrate_phase_gate, calibrate_rabi_gate, rabi_chevron, sweet_omega_near, Gate,
    OpenSystemOptions, TwoQubitGate, TwoQubitSystem,
};
use floqsweet::floquet::{floquet_solve_extended, floquet_solve_monodromy, FloquetSolution};
use floqsweet::noise::{filter_weights, static_rates, NoiseModel};
use floqsweet::special::{bessel_j, bessel_j_zero};
use floqsweet::sweetspot::{
    dispersion, fwhm_width, gap_strong, gap_weak, limit_frequency_modulation, limit_spin_locking,
    numeric_fwhm, numeric_gap, spin_locking_floquet, sweet_scan, trace_dc_manifold,
    FrequencyModulation, Regime, Region, SpinLocking, TraceOptions,
};
use floqsweet::units::{angular_to_ghz, TWO_PI};
use floqsweet::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_qubit() -> Fluxonium {
    Fluxonium::new(FluxoniumParams::new(0.5, 4.0, 1.3)).unwrap()
}

struct Check {
    id: u32,
    name: &'static str,
    start: Instant,
    limit_s: f64,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new(id: u32, name: &'static str, limit_s: f64) -> Self {
        Self {
            id,
            name,
            start: Instant::now(),
            limit_s,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn finish(mut self) {
        let secs = self.start.elapsed().as_secs_f64();
        self.expect(
            secs < self.limit_s,
            format!("runtime {secs:.1} s (limit {} s)", self.limit_s),
        );
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        let shown = if self.failures.is_empty() {
            &self.notes
        } else {
            &self.failures
        };
        println!("[{}] {status} {}: {}", self.id, self.name, shown.join("; "));
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {:?}",
            self.id,
            self.failures
        );
    }
}

fn random_point(rng: &mut ChaCha8Rng, max_ratio: f64) -> TwoLevelParams {
    let tl = TwoLevelParams::new(
        rng.random_range(0.5..4.0),
        0.0,
        rng.random_range(-3.0..3.0),
        rng.random_range(0.8..6.0),
    );
    tl.with_amp(rng.random_range(0.0..max_ratio) * tl.omega_ge())
}

/// Distance between two quasi-energy splittings modulo the drive frequency.
fn zone_distance(a: f64, b: f64, omega: f64) -> f64 {
    let r = (a - b).rem_euclid(omega);
    r.min(omega - r)
}

#[test]
fn static_coherence_times() {
    let mut c = Check::new(1, "static rates", 10.0);
    let q = reference_qubit();
    let model = NoiseModel::reference(&q);
    let off = static_rates(&q.reduce(0.0, 0.52, 1.0).unwrap(), &model).unwrap();
    c.expect(
        (off.t1 / 770.0 - 1.0).abs() <= 0.25,
        format!("T1(0.02) = {:.0} us", off.t1),
    );
    c.expect(
        (off.t_phi / 0.88 - 1.0).abs() <= 0.25,
        format!("Tphi(0.02) = {:.3} us", off.t_phi),
    );
    let sweet = static_rates(&q.reduce(0.0, 0.5, 1.0).unwrap(), &model).unwrap();
    c.expect(
        (sweet.t1 / 360.0 - 1.0).abs() <= 0.25,
        format!("T1(0) = {:.0} us", sweet.t1),
    );
    c.expect(
        sweet.gamma_phi_1f == 0.0,
        format!("first-order 1/f term at half flux = {}", sweet.gamma_phi_1f),
    );
    c.finish();
}

#[test]
fn weight_conservation() {
    let mut c = Check::new(2, "weight conservation", 60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut skipped) = (0.0f64, 0);
    for _ in 0..500 {
        let sol = floquet_solve_extended(&random_point(&mut rng, 5.0), None).unwrap();
        if sol.is_degenerate() {
            skipped += 1;
            continue;
        }
        worst = worst.max((filter_weights(&sol).unwrap().conservation_sum() - 2.0).abs());
    }
    c.expect(
        worst < 1e-10,
        format!("max |W+ + W- + Wphi - 2| = {worst:.1e}"),
    );
    c.expect(skipped < 10, format!("{skipped} degenerate points skipped"));
    c.finish();
}

#[test]
fn solver_equivalence() {
    let mut c = Check::new(3, "extended vs monodromy", 120.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let tl = random_point(&mut rng, 5.0);
        let e = floquet_solve_extended(&tl, None).unwrap();
        let m = floquet_solve_monodromy(&tl).unwrap();
        let scale = e.eps01.max(1e-3 * tl.omega_d);
        worst = worst.max(zone_distance(e.eps01, m.eps01, tl.omega_d) / scale);
    }
    c.expect(
        worst < 1e-9,
        format!("max relative eps01 difference {worst:.1e}"),
    );

    let mut exact = 0.0f64;
    for _ in 0..20 {
        let mut tl = random_point(&mut rng, 5.0);
        tl.delta = 0.0;
        for sol in [
            floquet_solve_extended(&tl, None).unwrap(),
            floquet_solve_monodromy(&tl).unwrap(),
        ] {
            exact = exact.max(
                zone_distance(sol.eps01, tl.bias, tl.omega_d)
                    .min(zone_distance(sol.eps01, -tl.bias, tl.omega_d)),
            );
            exact = exact.max(bessel_mismatch(&sol, tl.amp / tl.omega_d));
        }
    }
    c.expect(
        exact < 1e-10,
        format!("max deviation from the Bessel solution {exact:.1e}"),
    );
    c.finish();
}

/// Harmonic amplitudes of the σ_z = +1 mode against |J_k(A/ω)|, up to a zone shift.
fn bessel_mismatch(sol: &FloquetSolution, z: f64) -> f64 {
    let j = if sol.mean_sigma_z(0) > 0.0 { 0 } else { 1 };
    let m = &sol.modes[j];
    (-12i64..=12)
        .map(|shift| {
            (-10i64..=10)
                .map(|k| (m.get(k + shift)[0].norm() - bessel_j(k as i32, z).abs()).abs())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// ε_1 − ε_0 with labels carried over from `reference`, unwrapped by ω_d.
fn eps01_like(tl: &TwoLevelParams, reference: &FloquetSolution) -> f64 {
    let sol = floquet_solve_extended(tl, None)
        .unwrap()
        .relabel_like(reference);
    let d = sol.eps[1] - sol.eps[0];
    let r = reference.eps[1] - reference.eps[0];
    d - tl.omega_d * ((d - r) / tl.omega_d).round()
}

fn fd_slope(
    tl: &TwoLevelParams,
    step: f64,
    shift: impl Fn(&TwoLevelParams, f64) -> TwoLevelParams,
) -> f64 {
    let reference = floquet_solve_extended(tl, None).unwrap();
    let central = |h: f64| {
        (eps01_like(&shift(tl, h), &reference) - eps01_like(&shift(tl, -h), &reference)) / (2.0 * h)
    };
    (4.0 * central(0.5 * step) - central(step)) / 3.0
}

fn rel_err(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(1e-3)
}

#[test]
fn dispersion_identity() {
    let mut c = Check::new(4, "dispersion identity", 60.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_b, mut worst_a, mut taken) = (0.0f64, 0.0f64, 0);
    while taken < 50 {
        let tl = random_point(&mut rng, 5.0);
        let Ok(d) = dispersion(&tl) else { continue };
        if d.gap < 0.05 * tl.omega_d {
            continue;
        }
        taken += 1;
        worst_b = worst_b.max(rel_err(
            d.d_bias,
            fd_slope(&tl, 1e-4, |t, h| t.with_bias(t.bias + h)),
        ));
        worst_a = worst_a.max(rel_err(
            d.d_amp,
            fd_slope(&tl, 1e-4, |t, h| t.with_amp(t.amp + h)),
        ));
    }
    c.expect(worst_b < 1e-6, format!("dc slope rel error {worst_b:.1e}"));
    c.expect(worst_a < 1e-6, format!("ac slope rel error {worst_a:.1e}"));
    c.finish();
}

#[test]
fn sweet_spot_asymptotics() {
    let mut c = Check::new(5, "sweet-spot asymptotics", 900.0);
    let q = reference_qubit();
    let model = NoiseModel::reference(&q);
    let base = q.reduce(0.0, 0.52, 1.0).unwrap();
    let (omega_ge, bias) = (angular_to_ghz(base.omega_ge()), angular_to_ghz(base.bias));
    let window = |n_f, n_ac| Region {
        f_min: 0.15,
        f_max: 0.8,
        n_f,
        ac_min: 0.0005,
        ac_max: 0.2,
        n_ac,
    };

    let region = window(100, 60);
    let opts = TraceOptions {
        noise: Some(model),
        ..TraceOptions::default()
    };
    let trace = trace_dc_manifold(&q, 0.52, &region, &opts).unwrap();
    let nearest = |f: f64, base: f64| {
        (1..=8)
            .map(|m| rel_err(f, base / m as f64))
            .fold(f64::MAX, f64::min)
    };
    let (mut weak, mut strong) = (Vec::new(), Vec::new());
    for curve in &trace.curves {
        for (row, p) in curve.rows.iter().zip(&curve.points) {
            if *row == 0 {
                weak.push(nearest(p.f_d, omega_ge));
            } else if *row == region.n_ac - 1 {
                strong.push(nearest(p.f_d, bias));
            }
        }
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    c.expect(
        !weak.is_empty() && max(&weak) < 1e-3,
        format!(
            "{} weak-drive rows, max error {:.1e}",
            weak.len(),
            max(&weak)
        ),
    );
    c.expect(
        !strong.is_empty() && max(&strong) < 1e-3,
        format!(
            "{} strong-drive rows, max error {:.1e}",
            strong.len(),
            max(&strong)
        ),
    );
    let good = trace
        .curves
        .iter()
        .flat_map(|c| &c.points)
        .filter_map(|p| p.rates.as_ref().map(|r| (p, r)))
        .filter(|(_, r)| r.t_phi > 1000.0 && r.t1 > 300.0)
        .max_by(|a, b| a.1.t_phi.total_cmp(&b.1.t_phi));
    match good {
        Some((p, r)) => c.expect(
            true,
            format!(
                "best point f_d = {:.4} GHz, phi_ac/2pi = {:.4}: Tphi = {:.0} us, T1 = {:.0} us",
                p.f_d,
                p.phi_ac / TWO_PI,
                r.t_phi,
                r.t1
            ),
        ),
        None => c.expect(false, "no traced point with Tphi > 1000 us and T1 > 300 us"),
    }

    let t = Instant::now();
    let scan = sweet_scan(&q, &model, 0.52, &window(200, 200)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let failed = scan.iter().filter(|p| p.is_err()).count();
    c.expect(
        secs < 600.0 && failed == 0,
        format!(
            "200x200 scan {secs:.0} s on {} thread(s), {failed} failed points",
            rayon::current_num_threads()
        ),
    );
    c.finish();
}

#[test]
fn gap_formulas() {
    let mut c = Check::new(6, "gap formulas", 300.0);
    let q = reference_qubit();
    let base = q.reduce(0.0, 0.52, 1.0).unwrap();
    let omega = base.omega_ge();

    let mut weak = 0.0f64;
    for m in 1..=3u32 {
        for ratio in [0.05, 0.1] {
            let tl = base
                .with_amp(ratio * omega)
                .with_omega(omega / f64::from(m));
            let numeric = numeric_gap(m, &tl, Regime::Weak).unwrap();
            let est = gap_weak(m, &tl.with_omega(numeric.omega_d)).unwrap();
            weak = weak.max(rel_err(est.gap, angular_to_ghz(numeric.gap)));
        }
    }
    c.expect(
        weak < 0.05,
        format!("weak-drive gaps within {:.2}%", 100.0 * weak),
    );

    let mut strong = 0.0f64;
    let mut ratio_ok = true;
    for (delta, m) in [(0.09, 1u32), (0.05, 1), (0.04, 2)] {
        let w = 1.0 / f64::from(m);
        let tl = TwoLevelParams::new(delta, 1.5 * w, 1.0, w);
        let numeric = numeric_gap(m, &tl, Regime::Strong).unwrap();
        ratio_ok &= delta / numeric.omega_d <= 0.1;
        let est = gap_strong(m, &tl.with_omega(numeric.omega_d)).unwrap();
        strong = strong.max(rel_err(est.gap, angular_to_ghz(numeric.gap)));
    }
    c.expect(
        strong < 0.05 && ratio_ok,
        format!("strong-drive gaps within {:.2}%", 100.0 * strong),
    );

    let mut fwhm = 0.0f64;
    for (delta, x) in [(0.1, 3.0), (0.08, 2.2), (0.06, 4.0)] {
        let tl = TwoLevelParams::new(delta, 0.5 * x, 1.0, 1.0);
        let r = numeric_fwhm(1, &tl).unwrap() / fwhm_width(1, delta * bessel_j(1, x).abs());
        fwhm = fwhm.max((r - 1.0).abs());
    }
    c.expect(fwhm < 0.2, format!("FWHM within {:.1}%", 100.0 * fwhm));

    let per_ac = q.e_l() * q.phi_ge() * TWO_PI;
    let zero = bessel_j_zero(1, 1);
    let amp_zero = 0.5 * zero * base.bias;
    let f_b = angular_to_ghz(base.bias);
    let region = Region {
        f_min: 0.9 * f_b,
        f_max: 1.1 * f_b,
        n_f: 21,
        ac_min: 0.97 * amp_zero / per_ac,
        ac_max: 1.03 * amp_zero / per_ac,
        n_ac: 13,
    };
    let trace = trace_dc_manifold(&q, 0.52, &region, &TraceOptions::default()).unwrap();
    let row_step = (region.ac_max - region.ac_min) / (region.n_ac - 1) as f64;
    let mut worst_cut = 0.0f64;
    for (_, p) in &trace.cuts {
        let tl = q.reduce(p.phi_ac / TWO_PI, 0.52, p.f_d).unwrap();
        let x = 2.0 * tl.amp / tl.omega_d;
        // one grid cell in each direction
        let resolution = x * (row_step / (p.phi_ac / TWO_PI) + region.f_step() / p.f_d);
        worst_cut = worst_cut.max((x - zero).abs() / resolution);
    }
    c.expect(
        !trace.cuts.is_empty() && worst_cut <= 1.0,
        format!(
            "{} cuts, worst offset {:.2} grid cells from the J_1 zero",
            trace.cuts.len(),
            worst_cut
        ),
    );
    c.finish();
}

#[test]
fn single_qubit_gates() {
    let mut c = Check::new(7, "single-qubit gates", 300.0);
    let q = reference_qubit();
    let base = q.reduce(0.0, 0.52, 1.0).unwrap();
    let amp = 0.875 * base.omega_ge();
    let tl = base
        .with_amp(amp)
        .with_omega(sweet_omega_near(&base, amp, 0.321 * TAU).unwrap());
    c.note(format!(
        "sweet point f_d = {:.4} GHz",
        angular_to_ghz(tl.omega_d)
    ));

    for g in [Gate::X, Gate::SqrtX] {
        let f = calibrate_rabi_gate(&tl, g, 60.0).unwrap().result.fidelity;
        c.expect(f >= 0.999, format!("{g:?} F = {f:.6}"));
    }
    for g in [Gate::S, Gate::T] {
        let f = calibrate_phase_gate(&tl, g, 20.0, 5.0)
            .unwrap()
            .result
            .fidelity;
        c.expect(f >= 0.999, format!("{g:?} F = {f:.6}"));
    }

    let sol = floquet_solve_extended(&tl, None).unwrap();
    let coupling = filter_weights(&sol).unwrap().plus(0);
    let tone = 0.01;
    let duration = PI / (coupling.norm() * tone) / 0.9;
    let det = coupling.norm() * tone;
    let carriers: Vec<f64> = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|k| sol.eps01 + k * det)
        .collect();
    let pts = rabi_chevron(&tl, tone, coupling.arg(), &[duration], &carriers).unwrap();
    let on = pts[3].p1;
    let off = pts
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 3)
        .map(|(_, p)| p.p1)
        .fold(0.0, f64::max);
    c.expect(
        on > 0.99 && off < 0.9,
        format!("chevron P1 {on:.4} on resonance, <= {off:.3} detuned"),
    );

    let m30 = adiabatic_map(&tl, 30.0).unwrap().mean_fidelity;
    c.expect(m30 >= 0.99, format!("adiabatic map F(30 ns) = {m30:.4}"));
    let long: Vec<f64> = [100.0, 150.0, 200.0, 300.0]
        .iter()
        .map(|t| adiabatic_map(&tl, *t).unwrap().mean_fidelity)
        .collect();
    let monotone = long.windows(2).all(|w| w[1] >= w[0] - 1e-8);
    c.expect(
        monotone && long[3] > 1.0 - 1e-6,
        format!(
            "F(100..300 ns) non-decreasing to within 1e-8, 1 - F(300) = {:.1e}",
            1.0 - long[3]
        ),
    );
    c.finish();
}

#[test]
fn two_qubit_gate() {
    let mut c = Check::new(8, "two-qubit gate", 1200.0);
    let sys = TwoQubitSystem::reference();
    let (idle, gate, right) = sys.default_points().unwrap();
    let g = TwoQubitGate::new(&sys, idle, gate, right, 1e-6).unwrap();
    let j = sys.j_angular();
    let zz = g
        .coupling_at_gate
        .zz
        .norm()
        .max(g.coupling_at_idle.zz.norm())
        / j;
    c.expect(zz < 1e-12, format!("|ZZ|/J = {zz:.1e}"));

    let waits: Vec<f64> = (0..=15).map(|i| 2.0 * i as f64).collect();
    let ramps: Vec<f64> = (0..=8).map(|i| 28.0 + 4.0 * i as f64).collect();
    let map = g.fidelity_map(&waits, &ramps).unwrap();
    let (w, r, f) = map.best;
    c.expect(
        f >= 0.999,
        format!("best F = {f:.5} at wait {w} ns, ramp {r} ns"),
    );

    let s = g.swap_period().unwrap();
    c.expect(
        s.relative_error < 0.02,
        format!(
            "swap period {:.2} ns vs predicted {:.2} ns",
            s.simulated, s.predicted
        ),
    );

    let open = g
        .simulate_open(&sys, r, w, &OpenSystemOptions::default())
        .unwrap();
    c.note(format!(
        "open-system F = {:.5} +- {:.1e} over {} samples ({})",
        open.fidelity, open.standard_error, open.samples, open.method
    ));
    c.finish();
}

#[test]
fn analytic_limits() {
    let mut c = Check::new(9, "analytic limits", 30.0);
    let z = Complex64::new;
    let fm = FrequencyModulation {
        omega_d: 3.0,
        splitting: vec![
            (0, z(1.1, 0.0)),
            (1, z(0.8, 0.3)),
            (-1, z(0.8, -0.3)),
            (2, z(0.2, -0.4)),
            (-2, z(0.2, 0.4)),
        ],
        slope: vec![
            (0, z(0.5, 0.0)),
            (1, z(-0.2, 0.1)),
            (-1, z(-0.2, -0.1)),
            (3, z(0.05, 0.0)),
            (-3, z(0.05, 0.0)),
        ],
    };
    let lim = limit_frequency_modulation(&fm).unwrap();
    let eps = zone_distance(lim.eps01_floquet, lim.eps01_analytic, fm.omega_d) / lim.eps01_analytic;
    let g = lim
        .g_phi_analytic
        .iter()
        .zip(&lim.g_phi_floquet)
        .map(|((_, a), (_, b))| (a - b).norm() / a.norm())
        .fold(0.0, f64::max);
    c.expect(
        eps < 1e-8 && g < 1e-8,
        format!("frequency modulation: eps01 {eps:.1e}, g {g:.1e}"),
    );

    let spectrum = |w: f64| 1.0 / (1.0 + (w - 0.3).powi(2));
    let mut worst = 0.0f64;
    for (detuning, drive) in [(0.13, 0.21), (-0.2, 0.07), (0.05, 0.3)] {
        let p = SpinLocking {
            detuning,
            drive,
            slope: 1.7,
        };
        let a = limit_spin_locking(&p, spectrum);
        let n = spin_locking_floquet(&p, 5.0, spectrum).unwrap();
        let e = zone_distance(n.eps01, a.eps01, 5.0).min(zone_distance(n.eps01, -a.eps01, 5.0))
            / a.eps01;
        worst = worst
            .max(e)
            .max(rel_err(n.gamma_phi, a.gamma_phi))
            .max(rel_err(n.gamma_minus, a.gamma_minus))
            .max(rel_err(n.gamma_plus, a.gamma_plus));
    }
    c.expect(
        worst < 1e-8,
        format!("spin locking: max rel error {worst:.1e}"),
    );
    c.finish();
}

#[test]
fn determinism_across_thread_counts() {
    let mut c = Check::new(10, "determinism", 600.0);
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "drive": {"phi_dc_over_2pi": 0.52, "phi_ac_over_2pi": 0.03767, "f_d_ghz": 0.321},
  "scan": {"f_d_ghz": {"min": 0.2, "max": 0.8, "n": 9}, "phi_ac_over_2pi": {"min": 0.001, "max": 0.05, "n": 5}},
  "trace": {"doubly": true},
  "gap": {"orders": [1, 2], "regime": "weak"},
  "gate": {"t_ramp_ns": [30, 100]},
  "two_qubit": {
    "tau_wait_ns": {"min": 10, "max": 14, "n": 3},
    "t_ramp_ns": {"min": 52, "max": 56, "n": 2},
    "open_system": {"samples": 3}
  },
  "seed": 11
}"#,
    )
    .unwrap();
    let commands: [&[&str]; 9] = [
        &["spectrum"],
        &["rates"],
        &["sweet-scan"],
        &["sweet-trace"],
        &["gap-check"],
        &["gate", "--protocol", "x"],
        &["gate", "--protocol", "ramp"],
        &["two-qubit"],
        &["limits"],
    ];
    let run = |args: &[&str], threads: &str, out: &std::path::Path| -> Vec<u8> {
        let status = Command::new(env!("CARGO_BIN_EXE_floqsweet"))
            .args(args)
            .args([
                "--config",
                config.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ])
            .env_remove("SOURCE_DATE_EPOCH")
            .status()
            .unwrap();
        assert!(status.success(), "{args:?}");
        let mut bytes = std::fs::read(out).unwrap();
        let mut envelope = out.as_os_str().to_owned();
        envelope.push(".envelope.json");
        if let Ok(more) = std::fs::read(&envelope) {
            bytes.extend(more);
        }
        bytes
    };
    let mut identical = 0;
    for (i, args) in commands.iter().enumerate() {
        // same file name in two directories so the envelopes can be compared byte for byte
        let (a, b) = (
            dir.path().join(format!("{i}-t1")),
            dir.path().join(format!("{i}-t8")),
        );
        std::fs::create_dir_all(&a).unwrap();
        std::fs::create_dir_all(&b).unwrap();
        let one = run(args, "1", &a.join("out"));
        let eight = run(args, "8", &b.join("out"));
        if one == eight {
            identical += 1;
        } else {
            c.expect(
                false,
                format!("{} differs between 1 and 8 threads", args.join(" ")),
            );
        }
    }
    c.expect(
        identical == commands.len(),
        format!("{identical}/{} runs byte-identical", commands.len()),
    );
    c.finish();
}
