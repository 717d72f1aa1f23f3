use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    average_gate_fidelity, unitarity_error, Gate, GateResult, Protocol, PulseSchedule,
    SecondaryTone, Segment,
};
use crate::circuit::TwoLevelParams;
use crate::floquet::{floquet_solve_extended, integrate_propagator, FloquetSolution};
use crate::linalg::{eigh2, sigma_x, sigma_z, Mat2, Vec2};
use crate::noise::{filter_weights, DEFAULT_MARGIN};
use crate::sweetspot::dispersion_of;
use crate::{Complex64, Error, Result};

const RTOL: f64 = 1e-12;
const TAU: f64 = std::f64::consts::TAU;

fn working_solution(tl: &TwoLevelParams) -> Result<FloquetSolution> {
    let sol = floquet_solve_extended(tl, None)?;
    if sol.is_degenerate() {
        return Err(Error::Degenerate { eps01: sol.eps01 });
    }
    Ok(sol)
}

fn static_part(tl: &TwoLevelParams) -> Mat2 {
    sigma_z() * Complex64::from(0.5 * tl.bias) + sigma_x() * Complex64::from(0.5 * tl.delta)
}

/// Columns |w_0⟩, |w_1⟩ at drive phase θ.
fn floquet_basis(sol: &FloquetSolution, theta: f64) -> Mat2 {
    let t = theta / sol.omega_d;
    let a = sol.mode_at(0, t);
    let b = sol.mode_at(1, t);
    Mat2::new(a[0], b[0], a[1], b[1])
}

fn to_dmatrix(m: &Mat2) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Trajectory of a closed single-qubit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub result: GateResult,
    /// arg(U_11 U_00*) of the Floquet-frame operator.
    pub relative_phase: f64,
}

/// Lab-frame Schrödinger evolution under `schedule` on top of the static part
/// of `tl`, reported in the Floquet basis of the drive at `tl`. `initial`
/// holds the Floquet-basis amplitudes of the tracked state.
pub fn evolve_closed(
    schedule: &PulseSchedule,
    tl: &TwoLevelParams,
    initial: [Complex64; 2],
    target: Gate,
    samples: usize,
) -> Result<Evolution> {
    schedule.validate()?;
    let sol = working_solution(tl)?;
    let h0 = static_part(tl);
    let ham = |t: f64| {
        let d = schedule.sample(t);
        h0 + sigma_z() * Complex64::from(d.amp * d.phase.cos() + d.tone)
    };
    let total = schedule.duration();
    let n = samples.max(1);
    let times: Vec<f64> = (1..=n).map(|i| total * i as f64 / n as f64).collect();
    let us = integrate_propagator(ham, 0.0, &times, RTOL)?;

    let w0 = floquet_basis(&sol, 0.0);
    let psi0 = w0 * Vec2::new(initial[0], initial[1]);
    let norm = psi0.norm();
    let mut populations = vec![(
        0.0,
        initial
            .iter()
            .map(|c| c.norm_sqr() / (norm * norm))
            .collect(),
    )];
    for (t, u) in times.iter().zip(&us) {
        let wt = floquet_basis(&sol, schedule.sample(*t).phase);
        let amps = wt.adjoint() * u * psi0 / Complex64::from(norm);
        populations.push((*t, vec![amps[0].norm_sqr(), amps[1].norm_sqr()]));
    }

    let u_end = us.last().copied().unwrap_or_else(crate::linalg::identity);
    let w_end = floquet_basis(&sol, schedule.sample(total).phase);
    let dyn_phase = Mat2::from_diagonal(&nalgebra::Vector2::new(
        Complex64::from_polar(1.0, sol.eps[0] * total),
        Complex64::from_polar(1.0, sol.eps[1] * total),
    ));
    let frame = to_dmatrix(&(dyn_phase * w_end.adjoint() * u_end * w0));
    let fidelity = average_gate_fidelity(&target.matrix(), &frame);
    let relative_phase = (frame[(1, 1)] * frame[(0, 0)].conj()).arg();
    Ok(Evolution {
        result: GateResult {
            unitarity_error: unitarity_error(&frame),
            unitary_floquet_frame: frame,
            fidelity,
            target,
            populations,
        },
        relative_phase,
    })
}

fn rabi_schedule(tl: &TwoLevelParams, tone: SecondaryTone, duration: f64) -> PulseSchedule {
    let mut seg = Segment::hold(duration, tl.amp, tl.omega_d);
    seg.tone = Some(tone);
    PulseSchedule::new(vec![seg], Protocol::Rabi)
}

/// Secondary-tone pulse of the given duration, started in |w_0⟩.
pub fn rabi_gate(
    tl: &TwoLevelParams,
    tone: SecondaryTone,
    duration: f64,
    target: Gate,
) -> Result<GateResult> {
    let one = Complex64::from(1.0);
    let zero = Complex64::from(0.0);
    Ok(evolve_closed(
        &rabi_schedule(tl, tone, duration),
        tl,
        [one, zero],
        target,
        32,
    )?
    .result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiCalibration {
    pub tone: SecondaryTone,
    pub duration: f64,
    /// g_{0+}, the resonant coupling of the tone.
    pub coupling: Complex64,
    /// Tone parameters from the rotating-wave estimate alone.
    pub estimate: SecondaryTone,
    pub estimate_fidelity: f64,
    pub result: GateResult,
}

struct RabiCost<'a> {
    tl: &'a TwoLevelParams,
    start: SecondaryTone,
    duration: f64,
    target: Gate,
}

impl RabiCost<'_> {
    fn tone(&self, p: &[f64]) -> SecondaryTone {
        SecondaryTone {
            amplitude: self.start.amplitude * (1.0 + p[0]),
            omega: self.start.omega + p[1] / self.duration,
            phase: self.start.phase + p[2],
            ..self.start
        }
    }
}

impl CostFunction for RabiCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(1.0 - rabi_gate(self.tl, self.tone(p), self.duration, self.target)?.fidelity)
    }
}

/// Tone for an X or √X gate: resonant at ε_01, phase aligned with g_{0+} and
/// area from the rotating-wave rate d|g_{0+}|, then refined on the simulated
/// fidelity over amplitude, carrier and phase.
pub fn calibrate_rabi_gate(
    tl: &TwoLevelParams,
    target: Gate,
    duration: f64,
) -> Result<RabiCalibration> {
    let angle = target
        .rabi_angle()
        .ok_or_else(|| Error::invalid("Rabi calibration needs an X or sqrt-X target"))?;
    if !(duration > 0.0) {
        return Err(Error::invalid("pulse duration must be positive"));
    }
    let sol = working_solution(tl)?;
    let coupling = filter_weights(&sol)?.plus(0);
    if coupling.norm() < 1e-9 {
        return Err(Error::invalid(
            "the tone does not couple the Floquet states at this point",
        ));
    }
    let mut estimate = SecondaryTone::new(0.0, sol.eps01, coupling.arg());
    estimate.amplitude = angle / (coupling.norm() * estimate.area(duration));
    let estimate_fidelity = rabi_gate(tl, estimate, duration, target)?.fidelity;

    let cost = RabiCost {
        tl,
        start: estimate,
        duration,
        target,
    };
    let simplex = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.02, 0.0, 0.0],
        vec![0.0, 0.05, 0.0],
        vec![0.0, 0.0, 0.05],
    ];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-9)
        .map_err(|e| Error::NoRoot(e.to_string()))?;
    let run = Executor::new(cost, solver)
        .configure(|s| s.max_iters(120))
        .run()
        .map_err(|e| match e.downcast::<Error>() {
            Ok(inner) => inner,
            Err(other) => Error::NoRoot(other.to_string()),
        })?;
    let best = run
        .state()
        .best_param
        .clone()
        .unwrap_or_else(|| vec![0.0; 3]);
    let helper = RabiCost {
        tl,
        start: estimate,
        duration,
        target,
    };
    let mut tone = helper.tone(&best);
    let mut result = rabi_gate(tl, tone, duration, target)?;
    if result.fidelity < estimate_fidelity {
        tone = estimate;
        result = rabi_gate(tl, tone, duration, target)?;
    }
    Ok(RabiCalibration {
        tone,
        duration,
        coupling,
        estimate,
        estimate_fidelity,
        result,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChevronPoint {
    pub duration: f64,
    pub omega_tone: f64,
    /// Final population of |w_1⟩ starting from |w_0⟩.
    pub p1: f64,
}

/// Rabi chevron over pulse durations and tone carriers at fixed amplitude;
/// rows follow `durations`, columns `carriers`.
pub fn rabi_chevron(
    tl: &TwoLevelParams,
    amplitude: f64,
    phase: f64,
    durations: &[f64],
    carriers: &[f64],
) -> Result<Vec<ChevronPoint>> {
    let grid: Vec<(f64, f64)> = durations
        .iter()
        .flat_map(|&d| carriers.iter().map(move |&w| (d, w)))
        .collect();
    grid.into_par_iter()
        .map(|(duration, omega_tone)| {
            let r = rabi_gate(
                tl,
                SecondaryTone::new(amplitude, omega_tone, phase),
                duration,
                Gate::X,
            )?;
            let p1 = r.populations.last().map_or(0.0, |p| p.1[1]);
            Ok(ChevronPoint {
                duration,
                omega_tone,
                p1,
            })
        })
        .collect()
}

fn phase_schedule(tl: &TwoLevelParams, delta_amp: f64, plateau: f64, ramp: f64) -> PulseSchedule {
    let (a, w) = (tl.amp, tl.omega_d);
    PulseSchedule::new(
        vec![
            Segment::ramp(ramp, (a, a + delta_amp), (w, w)),
            Segment::hold(plateau, a + delta_amp, w),
            Segment::ramp(ramp, (a + delta_amp, a), (w, w)),
        ],
        Protocol::Phase,
    )
}

/// Temporary amplitude step δA with cosine ramps, started in |ψ_−⟩.
pub fn phase_gate(
    tl: &TwoLevelParams,
    delta_amp: f64,
    plateau: f64,
    ramp: f64,
    target: Gate,
) -> Result<Evolution> {
    let h = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    evolve_closed(
        &phase_schedule(tl, delta_amp, plateau, ramp),
        tl,
        [h, -h],
        target,
        64,
    )
}

/// ε_1 − ε_0 at amplitude `amp`, labels following `reference`.
fn eps01_following(tl: &TwoLevelParams, amp: f64, reference: &FloquetSolution) -> Result<f64> {
    let sol = floquet_solve_extended(&tl.with_amp(amp), None)?.relabel_like(reference);
    let d = sol.eps[1] - sol.eps[0];
    let r = reference.eps[1] - reference.eps[0];
    Ok(d - tl.omega_d * ((d - r) / tl.omega_d).round())
}

/// Relative phase −∫[ε_01(A + δA(t)) − ε_01(A)] dt of the phase-gate pulse.
pub fn predicted_phase(
    tl: &TwoLevelParams,
    delta_amp: f64,
    plateau: f64,
    ramp: f64,
) -> Result<f64> {
    let sol = working_solution(tl)?;
    let base = sol.eps[1] - sol.eps[0];
    let shift = |amp: f64| -> Result<f64> { Ok(eps01_following(tl, amp, &sol)? - base) };
    let mut integral = plateau * shift(tl.amp + delta_amp)?;
    if ramp > 0.0 {
        // Gauss–Legendre on each ramp; both ramps contribute equally.
        let (nodes, weights) = gauss_legendre_8();
        let shape = super::RampShape::Cosine;
        let mut ramp_int = 0.0;
        for (x, wgt) in nodes.iter().zip(weights) {
            let s = 0.5 * (x + 1.0);
            ramp_int += 0.5 * wgt * shift(tl.amp + delta_amp * shape.value(s))?;
        }
        integral += 2.0 * ramp * ramp_int;
    }
    Ok(-integral)
}

fn gauss_legendre_8() -> ([f64; 8], [f64; 8]) {
    let x = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    let w = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    (
        [-x[3], -x[2], -x[1], -x[0], x[0], x[1], x[2], x[3]],
        [w[3], w[2], w[1], w[0], w[0], w[1], w[2], w[3]],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    pub delta_amp: f64,
    pub plateau: f64,
    pub ramp: f64,
    pub predicted_phase: f64,
    pub simulated_phase: f64,
    pub result: GateResult,
}

fn wrap(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

/// δA for an S or T gate: root of the quasi-energy-integral predictor, then a
/// secant correction on the simulated phase.
pub fn calibrate_phase_gate(
    tl: &TwoLevelParams,
    target: Gate,
    plateau: f64,
    ramp: f64,
) -> Result<PhaseCalibration> {
    let goal = target
        .phase()
        .ok_or_else(|| Error::invalid("phase calibration needs an S, T or identity target"))?;
    let sol = working_solution(tl)?;
    let slope = dispersion_of(&sol)?.d_amp;
    let window = plateau + ramp;
    if slope.abs() * window < 1e-9 {
        return Err(Error::invalid(
            "quasi-energy does not depend on the drive amplitude here",
        ));
    }
    // the phase of |1⟩ only matters modulo 2π: take the smaller step
    let candidates = [goal, goal - TAU];
    let want = candidates
        .iter()
        .copied()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(goal);
    if want == 0.0 {
        let ev = phase_gate(tl, 0.0, plateau, ramp, target)?;
        return Ok(PhaseCalibration {
            delta_amp: 0.0,
            plateau,
            ramp,
            predicted_phase: 0.0,
            simulated_phase: ev.relative_phase,
            result: ev.result,
        });
    }
    let guess = -want / (slope * window);
    let f = |da: f64| -> Result<f64> { Ok(predicted_phase(tl, da, plateau, ramp)? - want) };
    let mut hi = guess;
    let mut tries = 0;
    while f(hi)?.signum() == f(0.0)?.signum() {
        hi *= 1.5;
        tries += 1;
        if tries > 20 {
            return Err(Error::NoRoot("phase-gate amplitude not bracketed".into()));
        }
    }
    let mut da = crate::sweetspot::brent(f, 0.0, hi, 1e-14 * hi.abs())?;
    let predicted = predicted_phase(tl, da, plateau, ramp)?;

    let sim =
        |x: f64| -> Result<f64> { Ok(phase_gate(tl, x, plateau, ramp, target)?.relative_phase) };
    let mut x0 = da;
    let mut e0 = wrap(sim(x0)? - goal);
    let mut x1 = da * (1.0 - e0 / want).clamp(0.5, 1.5);
    for _ in 0..6 {
        let e1 = wrap(sim(x1)? - goal);
        if e1.abs() < 1e-10 || e1 == e0 {
            x0 = x1;
            break;
        }
        let next = x1 - e1 * (x1 - x0) / (e1 - e0);
        x0 = x1;
        e0 = e1;
        x1 = next;
    }
    da = x0;
    let ev = phase_gate(tl, da, plateau, ramp, target)?;
    Ok(PhaseCalibration {
        delta_amp: da,
        plateau,
        ramp,
        predicted_phase: predicted,
        simulated_phase: ev.relative_phase,
        result: ev.result,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticMap {
    pub t_ramp: f64,
    /// populations[j] = (P_g, P_e) after ramping down from |w_j⟩.
    pub populations: [[f64; 2]; 2],
    /// Static state reached by continuation from each Floquet state (0 = g, 1 = e).
    pub targets: [usize; 2],
    pub fidelity: [f64; 2],
    pub mean_fidelity: f64,
    /// |⟨g|w_j(0)⟩|², |⟨e|w_j(0)⟩|².
    pub sudden_overlap: [[f64; 2]; 2],
    /// Smallest quasi-energy gap along the ramp path, rad/ns.
    pub min_gap: f64,
}

const GAP_STEPS: usize = 200;

/// Ramp-down A(t) = A₀(1 + cos πt/t_ramp)/2 at fixed ω_d from the working point.
pub fn adiabatic_map(tl: &TwoLevelParams, t_ramp: f64) -> Result<AdiabaticMap> {
    if !(t_ramp >= 0.0 && t_ramp.is_finite()) {
        return Err(Error::invalid("ramp time must be non-negative"));
    }
    let sol = working_solution(tl)?;

    let mut prev = sol.clone();
    let mut min_gap = sol.eps01.min(sol.omega_d - sol.eps01);
    for s in 1..=GAP_STEPS {
        let amp = tl.amp * (1.0 - s as f64 / GAP_STEPS as f64);
        let next = floquet_solve_extended(&tl.with_amp(amp), None)?;
        let gap = next.eps01.min(next.omega_d - next.eps01);
        if gap < DEFAULT_MARGIN {
            return Err(Error::GapClosure { amp });
        }
        min_gap = min_gap.min(gap);
        prev = next.relabel_like(&prev);
    }
    let (_, statics) = eigh2(&static_part(tl));
    let overlap = |v: Vec2, s: &Vec2| (s.adjoint() * v)[(0, 0)].norm_sqr();
    let mut targets = [0usize; 2];
    for (j, t) in targets.iter_mut().enumerate() {
        let v = prev.mode_at(j, 0.0);
        *t = if overlap(v, &statics[0]) >= overlap(v, &statics[1]) {
            0
        } else {
            1
        };
    }
    if targets[0] == targets[1] {
        return Err(Error::GapClosure { amp: 0.0 });
    }

    let w0 = floquet_basis(&sol, 0.0);
    let starts = [w0.column(0).into_owned(), w0.column(1).into_owned()];
    let sudden = starts.map(|v| [overlap(v, &statics[0]), overlap(v, &statics[1])]);
    let populations = if t_ramp == 0.0 {
        sudden
    } else {
        let h0 = static_part(tl);
        let (a0, w) = (tl.amp, tl.omega_d);
        let ham = |t: f64| {
            let a = 0.5 * a0 * (1.0 + (std::f64::consts::PI * t / t_ramp).cos());
            h0 + sigma_z() * Complex64::from(a * (w * t).cos())
        };
        let u = integrate_propagator(ham, 0.0, &[t_ramp], RTOL)?[0];
        starts.map(|v| {
            let out = u * v;
            [overlap(out, &statics[0]), overlap(out, &statics[1])]
        })
    };
    let fidelity = [populations[0][targets[0]], populations[1][targets[1]]];
    Ok(AdiabaticMap {
        t_ramp,
        populations,
        targets,
        fidelity,
        mean_fidelity: 0.5 * (fidelity[0] + fidelity[1]),
        sudden_overlap: sudden,
        min_gap,
    })
}
