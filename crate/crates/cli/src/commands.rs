use std::f64::consts::PI;

use clap::ValueEnum;
use floqsweet::circuit::{diagonalize_fluxonium, Fluxonium, TwoLevelParams};
use floqsweet::dynamics::{
    adiabatic_map, calibrate_phase_gate, calibrate_rabi_gate, rabi_chevron, sweet_omega_near, Gate,
    GateResult, OpenSystemOptions, QubitSetup, TwoQubitGate, TwoQubitSystem,
};
use floqsweet::floquet::floquet_solve_extended;
use floqsweet::noise::{dynamical_rates, filter_weights, static_rates, Rates};
use floqsweet::sweetspot::{
    find_doubly_sweet, fwhm_width, gap_strong, gap_weak, limit_frequency_modulation,
    limit_spin_locking, numeric_fwhm, numeric_gap, spin_locking_floquet, sweet_scan,
    trace_dc_manifold, FrequencyModulation, Regime, Region, SpinLocking, TraceOptions,
};
use floqsweet::units::{angular_to_ghz, ghz_to_angular, TWO_PI};
use floqsweet::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Grid, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_table, fmt_f64, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Rabi,
    SqrtX,
    X,
    S,
    T,
    Ramp,
}

fn working_point(cfg: &RunConfig, q: &Fluxonium) -> CliResult<TwoLevelParams> {
    let d = cfg.drive();
    Ok(q.reduce(d.phi_ac_over_2pi, d.phi_dc_over_2pi, d.f_d_ghz)?)
}

fn drive_warnings(tl: &TwoLevelParams) -> Vec<String> {
    let mut w = Vec::new();
    if tl.ef_warning {
        w.push("drive frequency lies inside the e-f guard band; the two-level reduction may be inaccurate".into());
    }
    w
}

fn rate_warnings(r: &Rates, w: &mut Vec<String>) {
    if r.flags.one_over_f_limited_t1 {
        w.push(
            "1/f-limited T1: a depolarising filter frequency sits inside the 1/f clamp margin"
                .into(),
        );
    }
    if r.flags.first_order_insensitive {
        w.push("first-order 1/f dephasing term is zero (T_phi first-order-unlimited)".into());
    }
}

fn rates_json(r: &Rates) -> Value {
    let breakdown: Vec<Value> = r
        .breakdown
        .iter()
        .map(|t| {
            json!({
                "k": t.k,
                "channel": t.channel,
                "freq_ghz": angular_to_ghz(t.freq),
                "weight": t.weight,
                "spectrum": t.spectrum,
                "contribution": t.contribution,
            })
        })
        .collect();
    json!({
        "gamma_plus": r.gamma_plus,
        "gamma_minus": r.gamma_minus,
        "gamma_phi": r.gamma_phi,
        "gamma_phi_1f": r.gamma_phi_1f,
        "t1_us": r.t1,
        "t_phi_us": r.t_phi,
        "breakdown": breakdown,
    })
}

fn region(cfg: &RunConfig) -> Region {
    let s = cfg.scan.unwrap_or_default();
    Region {
        f_min: s.f_d_ghz.min,
        f_max: s.f_d_ghz.max,
        n_f: s.f_d_ghz.n,
        ac_min: s.phi_ac_over_2pi.min,
        ac_max: s.phi_ac_over_2pi.max,
        n_ac: s.phi_ac_over_2pi.n,
    }
}

pub fn spectrum(cfg: &RunConfig, strict: bool) -> CliResult<Report> {
    let q = cfg.qubit()?;
    let d = cfg.drive();
    let spec = diagonalize_fluxonium(&q.params, TWO_PI * d.phi_dc_over_2pi)?;
    let tl = working_point(cfg, &q)?;
    let points: Vec<(f64, f64)> = match cfg.scan {
        Some(_) => {
            let r = region(cfg);
            (0..r.n_ac)
                .flat_map(|j| (0..r.n_f).map(move |i| (r.ac_at(j), r.f_at(i))))
                .collect()
        }
        None => vec![(d.phi_ac_over_2pi, d.f_d_ghz)],
    };
    let solved: Vec<floqsweet::Result<[f64; 2]>> = points
        .par_iter()
        .map(|&(ac, f)| {
            let sol = floquet_solve_extended(&q.reduce(ac, d.phi_dc_over_2pi, f)?, None)?;
            Ok(sol.eps)
        })
        .collect();
    let mut rows = Vec::with_capacity(points.len());
    let mut failed = 0usize;
    for (&(ac, f), eps) in points.iter().zip(solved) {
        let eps = match eps {
            Ok(e) => e.map(angular_to_ghz),
            Err(e) if strict => return Err(e.into()),
            Err(_) => {
                failed += 1;
                [f64::NAN; 2]
            }
        };
        rows.push(
            [d.phi_dc_over_2pi, ac, f, eps[0], eps[1], eps[1] - eps[0]]
                .map(fmt_f64)
                .to_vec(),
        );
    }
    let mut warnings = drive_warnings(&tl);
    if failed > 0 {
        warnings.push(format!(
            "{failed} grid points failed and are reported as nan"
        ));
    }
    let csv = csv_table(
        &[
            "phi_dc_over_2pi",
            "phi_ac_over_2pi",
            "f_d_ghz",
            "eps0_ghz",
            "eps1_ghz",
            "eps01_ghz",
        ],
        &rows,
    )?;
    let payload = json!({
        "phi_dc_over_2pi": d.phi_dc_over_2pi,
        "energies_ghz": spec.energies,
        "omega_ge_ghz": spec.omega_ge(),
        "phi_ge": spec.phi_ge(),
        "basis_used": spec.basis_used,
        "two_level": {
            "delta_ghz": angular_to_ghz(tl.delta),
            "bias_ghz": angular_to_ghz(tl.bias),
            "amp_ghz": angular_to_ghz(tl.amp),
            "f_d_ghz": angular_to_ghz(tl.omega_d),
        },
        "rows": rows.len(),
    });
    Ok(Report {
        payload,
        warnings,
        csv: Some(csv),
    })
}

pub fn rates(cfg: &RunConfig) -> CliResult<Report> {
    let q = cfg.qubit()?;
    let model = cfg.noise_model(&q)?;
    let tl = working_point(cfg, &q)?;
    let r = if tl.amp == 0.0 {
        static_rates(&tl, &model)?
    } else {
        dynamical_rates(
            &filter_weights(&floquet_solve_extended(&tl, None)?)?,
            &model,
        )?
    };
    let mut warnings = drive_warnings(&tl);
    rate_warnings(&r, &mut warnings);
    Ok(Report::json(rates_json(&r), warnings))
}

pub fn sweet_scan_cmd(cfg: &RunConfig, strict: bool) -> CliResult<Report> {
    let q = cfg.qubit()?;
    let model = cfg.noise_model(&q)?;
    let region = region(cfg);
    let d = cfg.drive();
    let points = sweet_scan(&q, &model, d.phi_dc_over_2pi, &region)?;
    let mut rows = Vec::with_capacity(points.len());
    let (mut failed, mut limited) = (0usize, 0usize);
    for (idx, p) in points.into_iter().enumerate() {
        let (j, i) = (idx / region.n_f, idx % region.n_f);
        let (f, ac) = (region.f_at(i), region.ac_at(j));
        match p {
            Ok(p) => {
                let status = if p.flags.one_over_f_limited_t1 {
                    limited += 1;
                    "1f_limited_t1"
                } else {
                    "ok"
                };
                rows.push(vec![
                    fmt_f64(f),
                    fmt_f64(ac),
                    fmt_f64(p.t_phi),
                    fmt_f64(p.t1),
                    status.into(),
                ]);
            }
            Err(e) => {
                if strict {
                    return Err(e.into());
                }
                failed += 1;
                let nan = fmt_f64(f64::NAN);
                rows.push(vec![
                    fmt_f64(f),
                    fmt_f64(ac),
                    nan.clone(),
                    nan,
                    format!("error: {e}"),
                ]);
            }
        }
    }
    let mut warnings = Vec::new();
    if failed > 0 {
        warnings.push(format!(
            "{failed} grid points failed and carry an error marker"
        ));
    }
    if limited > 0 {
        warnings.push(format!("{limited} grid points have 1/f-limited T1"));
    }
    let csv = csv_table(
        &["f_d_ghz", "phi_ac_over_2pi", "t_phi_us", "t1_us", "status"],
        &rows,
    )?;
    let payload = json!({
        "phi_dc_over_2pi": d.phi_dc_over_2pi,
        "rows": rows.len(),
        "order": "phi_ac rows, f_d columns",
    });
    Ok(Report {
        payload,
        warnings,
        csv: Some(csv),
    })
}

pub fn sweet_trace(cfg: &RunConfig) -> CliResult<Report> {
    let q = cfg.qubit()?;
    let model = cfg.noise_model(&q)?;
    let t = cfg.trace.unwrap_or_default();
    let mut opts = TraceOptions {
        noise: Some(model),
        ..TraceOptions::default()
    };
    if let Some(tol) = t.tol {
        opts.tol = tol;
    }
    if let Some(j) = t.max_jump_cells {
        opts.max_jump_cells = j;
    }
    let d = cfg.drive();
    let trace = trace_dc_manifold(&q, d.phi_dc_over_2pi, &region(cfg), &opts)?;
    let doubly = if t.doubly {
        find_doubly_sweet(&q, &trace, &opts)?
    } else {
        Vec::new()
    };
    let mut warnings = Vec::new();
    if !trace.cuts.is_empty() {
        warnings.push(format!(
            "{} sweet points fall inside the gap threshold and are reported as cuts",
            trace.cuts.len()
        ));
    }
    let unrefined = doubly.iter().filter(|p| p.unrefined).count();
    if unrefined > 0 {
        warnings.push(format!(
            "{unrefined} doubly-sweet points could not be refined"
        ));
    }
    let limited = trace
        .curves
        .iter()
        .flat_map(|c| &c.points)
        .filter(|p| {
            p.rates
                .as_ref()
                .is_some_and(|r| r.flags.one_over_f_limited_t1)
        })
        .count();
    if limited > 0 {
        warnings.push(format!("{limited} traced points have 1/f-limited T1"));
    }
    let payload = json!({
        "phi_dc_over_2pi": d.phi_dc_over_2pi,
        "curves": trace.curves,
        "cuts": trace.cuts,
        "rejected": trace.rejected,
        "doubly": doubly,
    });
    Ok(Report::json(payload, warnings))
}

pub fn gap_check(cfg: &RunConfig) -> CliResult<Report> {
    let q = cfg.qubit()?;
    let tl = working_point(cfg, &q)?;
    let g = cfg
        .gap
        .clone()
        .ok_or_else(|| CliError::schema("gap", "gap-check needs a `gap` block with the regime"))?;
    let mut warnings = Vec::new();
    let rows = g
        .orders
        .par_iter()
        .map(|&m| {
            let numeric = numeric_gap(m, &tl, g.regime)?;
            let at = tl.with_omega(numeric.omega_d);
            let est = match g.regime {
                Regime::Weak => gap_weak(m, &at)?,
                Regime::Strong => gap_strong(m, &at)?,
            };
            let fwhm_numeric = match g.regime {
                Regime::Strong => Some(angular_to_ghz(numeric_fwhm(m, &tl)?)),
                Regime::Weak => None,
            };
            let numeric_ghz = angular_to_ghz(numeric.gap);
            Ok((
                m,
                est,
                numeric_ghz,
                angular_to_ghz(numeric.omega_d),
                fwhm_numeric,
            ))
        })
        .collect::<floqsweet::Result<Vec<_>>>()?;
    let entries: Vec<Value> = rows
        .into_iter()
        .map(|(m, est, numeric, f_d, fwhm_numeric)| {
            if est.regime_warning {
                warnings.push(format!(
                    "m = {m}: parameters lie outside the {:?} regime of the estimate",
                    est.regime
                ));
            }
            json!({
                "m": m,
                "gap_formula_ghz": est.gap,
                "gap_numeric_ghz": numeric,
                "ratio": if est.gap > 0.0 { numeric / est.gap } else { f64::NAN },
                "f_d_ghz": f_d,
                "theta": est.theta,
                "fwhm_formula_ghz": fwhm_width(m, est.gap),
                "fwhm_numeric_ghz": fwhm_numeric,
                "regime_warning": est.regime_warning,
            })
        })
        .collect();
    Ok(Report::json(
        json!({ "regime": g.regime, "gaps": entries }),
        warnings,
    ))
}

fn matrix_json(m: &nalgebra::DMatrix<Complex64>) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect();
    json!(rows)
}

fn gate_json(r: &GateResult) -> Value {
    json!({
        "target": r.target,
        "fidelity": r.fidelity,
        "unitarity_error": r.unitarity_error,
        "unitary_floquet_frame": matrix_json(&r.unitary_floquet_frame),
    })
}

pub fn gate(cfg: &RunConfig, protocol: Protocol) -> CliResult<Report> {
    let q = cfg.qubit()?;
    let g = cfg.gate.clone().unwrap_or_default();
    let mut tl = working_point(cfg, &q)?;
    if g.locate_sweet {
        if tl.amp == 0.0 {
            return Err(CliError::Validity(
                "locating a sweet point needs a nonzero drive amplitude".into(),
            ));
        }
        tl = tl.with_omega(sweet_omega_near(&tl, tl.amp, tl.omega_d)?);
    }
    let sol = floquet_solve_extended(&tl, None)?;
    let working = json!({
        "f_d_ghz": angular_to_ghz(tl.omega_d),
        "amp_ghz": angular_to_ghz(tl.amp),
        "eps01_ghz": angular_to_ghz(sol.eps01),
    });
    let warnings = drive_warnings(&tl);
    let body = match protocol {
        Protocol::X | Protocol::SqrtX => {
            let target = if protocol == Protocol::X {
                Gate::X
            } else {
                Gate::SqrtX
            };
            let c = calibrate_rabi_gate(&tl, target, g.duration_ns)?;
            json!({
                "duration_ns": c.duration,
                "tone": {
                    "amplitude_ghz": angular_to_ghz(c.tone.amplitude),
                    "carrier_ghz": angular_to_ghz(c.tone.omega),
                    "phase": c.tone.phase,
                    "ramp_fraction": c.tone.ramp_fraction,
                },
                "coupling": [c.coupling.re, c.coupling.im],
                "estimate_fidelity": c.estimate_fidelity,
                "result": gate_json(&c.result),
            })
        }
        Protocol::S | Protocol::T => {
            let target = if protocol == Protocol::S {
                Gate::S
            } else {
                Gate::T
            };
            let c = calibrate_phase_gate(&tl, target, g.plateau_ns, g.ramp_ns)?;
            json!({
                "delta_amp_ghz": angular_to_ghz(c.delta_amp),
                "plateau_ns": c.plateau,
                "ramp_ns": c.ramp,
                "predicted_phase": c.predicted_phase,
                "simulated_phase": c.simulated_phase,
                "result": gate_json(&c.result),
            })
        }
        Protocol::Rabi => {
            let coupling = filter_weights(&sol)?.plus(0);
            let amp = ghz_to_angular(g.tone_amplitude_ghz.unwrap_or(0.002));
            let rate = coupling.norm() * amp;
            if rate == 0.0 {
                return Err(CliError::Validity(
                    "the secondary tone does not couple the Floquet states".into(),
                ));
            }
            let t_pi = PI / rate;
            let durations = g.chevron_durations_ns.unwrap_or(Grid {
                min: 0.0,
                max: 3.0 * t_pi,
                n: 31,
            });
            let detunings = g.chevron_detunings_ghz.unwrap_or(Grid {
                min: -3.0 * angular_to_ghz(rate),
                max: 3.0 * angular_to_ghz(rate),
                n: 21,
            });
            let carriers: Vec<f64> = detunings
                .values()
                .iter()
                .map(|d| sol.eps01 + ghz_to_angular(*d))
                .collect();
            let durs: Vec<f64> = durations
                .values()
                .into_iter()
                .map(|d| d.max(1e-9))
                .collect();
            let pts = rabi_chevron(&tl, amp, coupling.arg(), &durs, &carriers)?;
            let rows: Vec<Value> = pts
                .iter()
                .map(|p| json!([p.duration, angular_to_ghz(p.omega_tone - sol.eps01), p.p1]))
                .collect();
            json!({
                "tone_amplitude_ghz": angular_to_ghz(amp),
                "columns": ["duration_ns", "detuning_ghz", "p1"],
                "points": rows,
            })
        }
        Protocol::Ramp => {
            let maps = g
                .t_ramp_ns
                .par_iter()
                .map(|&t| adiabatic_map(&tl, t))
                .collect::<floqsweet::Result<Vec<_>>>()?;
            json!({ "maps": maps })
        }
    };
    Ok(Report::json(
        json!({ "working_point": working, "gate": body }),
        warnings,
    ))
}

fn system(cfg: &RunConfig) -> TwoQubitSystem {
    let t = cfg.two_qubit.clone().unwrap_or_default();
    let mut sys = TwoQubitSystem::reference();
    if let Some(l) = t.left {
        sys.left = QubitSetup {
            params: l.circuit.params(),
            phi_dc_over_2pi: l.phi_dc_over_2pi,
        };
    }
    if let Some(r) = t.right {
        sys.right = QubitSetup {
            params: r.circuit.params(),
            phi_dc_over_2pi: r.phi_dc_over_2pi,
        };
    }
    if let Some(j) = t.j_ghz {
        sys.j_coupling = j;
    }
    sys
}

pub fn two_qubit(cfg: &RunConfig, seed: u64) -> CliResult<Report> {
    let t = cfg.two_qubit.clone().unwrap_or_default();
    let sys = system(cfg);
    sys.validate()?;
    let (idle, gate_point, right) = sys.points_with(
        t.idle_amp_ratio.unwrap_or(0.8),
        t.right_amp_ratio.unwrap_or(0.1),
    )?;
    let g = TwoQubitGate::new(
        &sys,
        idle,
        gate_point,
        right,
        floqsweet::sweetspot::SWEET_TOL,
    )?;
    let waits = t.tau_wait_ns.values();
    let ramps = t.t_ramp_ns.values();
    if waits.iter().chain(&ramps).any(|x| *x < 0.0) {
        return Err(CliError::schema(
            "two_qubit",
            "wait and ramp times must be non-negative",
        ));
    }
    let map = g.fidelity_map(&waits, &ramps)?;
    let swap = g.swap_period()?;
    let rows: Vec<Vec<String>> = map
        .rows
        .iter()
        .map(|(w, r, f)| vec![fmt_f64(*w), fmt_f64(*r), fmt_f64(*f)])
        .collect();
    let csv = csv_table(&["tau_wait_ns", "t_ramp_ns", "fidelity"], &rows)?;

    let mut warnings = Vec::new();
    if swap.relative_error > 0.02 {
        warnings.push(format!(
            "swap period deviates from the rotating-wave prediction by {:.3}%",
            100.0 * swap.relative_error
        ));
    }
    let open = match t.open_system {
        Some(o) => {
            let (w, r, _) = map.best;
            let opts = OpenSystemOptions {
                samples: o.samples,
                seed,
                ..Default::default()
            };
            warnings.push("open-system fidelity uses quasi-static 1/f sampling; see payload.open_system.method".into());
            Some(
                json!({ "tau_wait_ns": w, "t_ramp_ns": r, "report": g.simulate_open(&sys, r, w, &opts)? }),
            )
        }
        None => None,
    };
    let point = |p: &floqsweet::dynamics::TwoQubitPoint| json!({ "amp_ghz": angular_to_ghz(p.amp), "f_d_ghz": angular_to_ghz(p.omega_d) });
    let c = &g.coupling_at_gate;
    let payload = json!({
        "system": sys,
        "idle": point(&idle),
        "gate_point": point(&gate_point),
        "right": point(&right),
        "path_nodes": g.path.amps.len(),
        "path_max_residual": g.path.max_residual,
        "coupling": {
            "flip_flop_ghz": angular_to_ghz(c.flip_flop.norm()),
            "zz_ghz": angular_to_ghz(c.zz.norm()),
            "detuning_ghz": angular_to_ghz(c.detuning),
            "idle_detuning_ghz": angular_to_ghz(g.coupling_at_idle.detuning),
        },
        "swap_period": swap,
        "sqrt_iswap_wait_ns": c.sqrt_iswap_time(),
        "best": { "tau_wait_ns": map.best.0, "t_ramp_ns": map.best.1, "fidelity": map.best.2 },
        "open_system": open,
    });
    Ok(Report {
        payload,
        warnings,
        csv: Some(csv),
    })
}

/// Lorentzian with a thermal asymmetry, S(ω) = 2/((1 + e^{−ω/τ})(1 + ω²)), τ = 0.3.
fn test_spectrum(w: f64) -> f64 {
    2.0 / ((1.0 + (-w / 0.3).exp()) * (1.0 + w * w))
}

/// Relative error of two quasi-energy splittings, which agree only up to a
/// multiple of the drive frequency and the sign fixed by labeling.
fn zone_rel(a: f64, b: f64, omega: f64) -> f64 {
    let fold = |x: f64| {
        let r = x.rem_euclid(omega);
        r.min(omega - r)
    };
    fold(a - b).min(fold(a + b)) / a.abs().max(f64::MIN_POSITIVE)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn limits(cfg: &RunConfig) -> CliResult<Report> {
    let l = cfg.limits.clone().unwrap_or_default();
    let c = |x: f64| Complex64::from(ghz_to_angular(x));
    let mut splitting = vec![(0, c(l.fm_mean_ghz))];
    for (i, a) in l.fm_harmonics_ghz.iter().enumerate() {
        let k = i as i32 + 1;
        splitting.push((k, c(*a)));
        splitting.push((-k, c(*a)));
    }
    let fm = FrequencyModulation {
        omega_d: ghz_to_angular(l.fm_f_d_ghz),
        slope: splitting.clone(),
        splitting,
    };
    let f = limit_frequency_modulation(&fm)?;
    let g_err = f
        .g_phi_analytic
        .iter()
        .zip(&f.g_phi_floquet)
        .map(|((_, a), (_, b))| (a - b).norm() / a.norm().max(1e-300))
        .fold(0.0, f64::max);

    let p = SpinLocking {
        detuning: ghz_to_angular(l.sl_detuning_ghz),
        drive: ghz_to_angular(l.sl_drive_ghz),
        slope: 1.0,
    };
    let a = limit_spin_locking(&p, test_spectrum);
    let n = spin_locking_floquet(&p, ghz_to_angular(l.sl_f_d_ghz), test_spectrum)?;
    let payload = json!({
        "frequency_modulation": {
            "eps01_analytic_ghz": angular_to_ghz(f.eps01_analytic),
            "eps01_floquet_ghz": angular_to_ghz(f.eps01_floquet),
            "eps01_rel_error": zone_rel(f.eps01_analytic, f.eps01_floquet, fm.omega_d),
            "g_phi_max_rel_error": g_err,
        },
        "spin_locking": {
            "spectrum": "2/((1 + exp(-w/0.3))(1 + w^2)), w in rad/ns",
            "analytic": a,
            "floquet": n,
            "eps01_rel_error": zone_rel(a.eps01, n.eps01, ghz_to_angular(l.sl_f_d_ghz)),
            "gamma_phi_rel_error": rel(a.gamma_phi, n.gamma_phi),
            "gamma_minus_rel_error": rel(a.gamma_minus, n.gamma_minus),
            "gamma_plus_rel_error": rel(a.gamma_plus, n.gamma_plus),
        },
    });
    Ok(Report::json(payload, Vec::new()))
}
