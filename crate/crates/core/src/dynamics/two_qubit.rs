use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, Matrix4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    average_gate_fidelity, unitarity_error, Gate, GateResult, Protocol, PulseSchedule, RampShape,
    Segment,
};
use crate::circuit::{Fluxonium, FluxoniumParams, TwoLevelParams};
use crate::floquet::{floquet_solve_extended, FloquetSolution};
use crate::linalg::{sigma_x, sigma_z, Mat2};
use crate::noise::{dynamical_rates, filter_weights, Channel, NoiseModel};
use crate::ode::Dopri;
use crate::sweetspot::{brent, dispersion_of};
use crate::units::{ghz_to_angular, TWO_PI};
use crate::{Complex64, Error, Result};

type Mat4 = Matrix4<Complex64>;

/// Rotation angle κt of the flip-flop term that realises √iSWAP.
pub const SQRT_ISWAP_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

const RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSetup {
    pub params: FluxoniumParams,
    pub phi_dc_over_2pi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitSystem {
    pub left: QubitSetup,
    pub right: QubitSetup,
    /// J in GHz; the coupling is J σ_z^L σ_z^R.
    pub j_coupling: f64,
}

impl TwoQubitSystem {
    /// Inductively coupled pair used for the √iSWAP demonstration.
    pub fn reference() -> Self {
        Self {
            left: QubitSetup {
                params: FluxoniumParams::new(1.2, 6.0, 0.95),
                phi_dc_over_2pi: 0.529,
            },
            right: QubitSetup {
                params: FluxoniumParams::new(1.0, 4.1, 0.7),
                phi_dc_over_2pi: 0.520,
            },
            j_coupling: 4.8e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_coupling >= 0.0 && self.j_coupling.is_finite()) {
            return Err(Error::invalid("coupling J must be finite and non-negative"));
        }
        self.left.params.validate()?;
        self.right.params.validate()
    }

    /// Working points used when none are given: the right qubit sits on its
    /// sweet manifold at A = 0.1 Ω_ge, the left qubit idles at A = 0.8 Ω_ge
    /// and meets the right quasi-energy difference at the gate point.
    /// Returns (idle, gate, right).
    pub fn default_points(&self) -> Result<(TwoQubitPoint, TwoQubitPoint, TwoQubitPoint)> {
        self.points_with(0.8, 0.1)
    }

    /// As [`default_points`](Self::default_points) with the idle and right
    /// amplitudes given as fractions of the respective Ω_ge.
    pub fn points_with(
        &self,
        idle_ratio: f64,
        right_ratio: f64,
    ) -> Result<(TwoQubitPoint, TwoQubitPoint, TwoQubitPoint)> {
        if !(idle_ratio > 0.0 && right_ratio > 0.0) {
            return Err(Error::invalid("working amplitudes must be positive"));
        }
        let (_, tl, _, tr) = self.bases()?;
        let right = sweet_point_at(&tr, right_ratio * tr.omega_ge())?;
        let idle = sweet_point_at(&tl, idle_ratio * tl.omega_ge())?;
        let gate = find_resonance(&tl, &right.apply(&tr), idle.amp, 0.05 * tl.omega_ge())?;
        Ok((idle, gate, right))
    }

    /// J in rad/ns.
    pub fn j_angular(&self) -> f64 {
        ghz_to_angular(self.j_coupling)
    }

    /// Undriven two-level models (A = 0) of both qubits.
    pub fn bases(&self) -> Result<(Fluxonium, TwoLevelParams, Fluxonium, TwoLevelParams)> {
        self.validate()?;
        let l = Fluxonium::new(self.left.params)?;
        let r = Fluxonium::new(self.right.params)?;
        let tl = l.reduce(0.0, self.left.phi_dc_over_2pi, 1.0)?;
        let tr = r.reduce(0.0, self.right.phi_dc_over_2pi, 1.0)?;
        Ok((l, tl, r, tr))
    }
}

/// Drive amplitude and frequency of one qubit, rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitPoint {
    pub amp: f64,
    pub omega_d: f64,
}

impl TwoQubitPoint {
    pub fn apply(&self, base: &TwoLevelParams) -> TwoLevelParams {
        base.with_amp(self.amp).with_omega(self.omega_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingTerm {
    pub k_left: i64,
    pub k_right: i64,
    pub channel_left: Channel,
    pub channel_right: Channel,
    /// J g^L_{kμ} g^R_{k′μ′}, rad/ns.
    pub coefficient: Complex64,
    /// ω̄^L_{kμ} + ω̄^R_{k′μ′}, rad/ns.
    pub frequency: f64,
    pub resonant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTerms {
    /// J g^L_{0+} g^R_{0−}.
    pub flip_flop: Complex64,
    /// J g^L_{0φ} g^R_{0φ}.
    pub zz: Complex64,
    /// ε^L_01 − ε^R_01.
    pub detuning: f64,
    pub resonant: bool,
    pub terms: Vec<CouplingTerm>,
}

impl CouplingTerms {
    /// Predicted full swap period π/|κ| in ns.
    pub fn swap_period(&self) -> f64 {
        std::f64::consts::PI / self.flip_flop.norm()
    }

    /// Wait time π/(4|κ|) for √iSWAP.
    pub fn sqrt_iswap_time(&self) -> f64 {
        SQRT_ISWAP_ANGLE / self.flip_flop.norm()
    }
}

fn channel_weight(w: &crate::noise::FilterWeights, k: i64, ch: Channel) -> (Complex64, f64) {
    match ch {
        Channel::Plus => (w.plus(k), w.freq_plus(k)),
        Channel::Minus => (w.minus(k), w.freq_minus(k)),
        Channel::Phi => (w.phi(k), w.freq_phi(k)),
    }
}

/// Expansion of J σ_z^L σ_z^R in the joint Floquet frame, keeping sidebands
/// |k| ≤ `k_window`. Terms rotating slower than `resonance_tol` are flagged.
pub fn interaction_picture(
    left: &FloquetSolution,
    right: &FloquetSolution,
    j: f64,
    k_window: i64,
    resonance_tol: f64,
) -> Result<CouplingTerms> {
    let wl = filter_weights(left)?;
    let wr = filter_weights(right)?;
    let channels = [Channel::Plus, Channel::Minus, Channel::Phi];
    let mut terms = Vec::new();
    for kl in -k_window..=k_window {
        for kr in -k_window..=k_window {
            for &cl in &channels {
                for &cr in &channels {
                    let (gl, fl) = channel_weight(&wl, kl, cl);
                    let (gr, fr) = channel_weight(&wr, kr, cr);
                    let coefficient = gl * gr * j;
                    if coefficient.norm() <= 1e-12 * j {
                        continue;
                    }
                    let frequency = fl + fr;
                    terms.push(CouplingTerm {
                        k_left: kl,
                        k_right: kr,
                        channel_left: cl,
                        channel_right: cr,
                        coefficient,
                        frequency,
                        resonant: frequency.abs() < resonance_tol,
                    });
                }
            }
        }
    }
    let detuning = left.eps01 - right.eps01;
    Ok(CouplingTerms {
        flip_flop: wl.plus(0) * wr.minus(0) * j,
        zz: wl.phi(0) * wr.phi(0) * j,
        detuning,
        resonant: detuning.abs() < resonance_tol,
        terms,
    })
}

fn extended(tl: &TwoLevelParams) -> Result<FloquetSolution> {
    let sol = floquet_solve_extended(tl, None)?;
    if sol.is_degenerate() {
        return Err(Error::Degenerate { eps01: sol.eps01 });
    }
    Ok(sol)
}

/// Shifts w_1 by one Brillouin zone when needed so that ε_01 lies in
/// (−ω_d/2, ω_d/2]; resonance between qubits is defined on this branch.
pub fn fold_difference(sol: &FloquetSolution) -> FloquetSolution {
    let w = sol.omega_d;
    let n = if sol.eps01 > 0.5 * w {
        1
    } else if sol.eps01 <= -0.5 * w {
        -1
    } else {
        return sol.clone();
    };
    let mut out = sol.clone();
    out.modes[1] = sol.modes[1].shifted(n);
    out.eps[1] -= n as f64 * w;
    out.eps01 -= n as f64 * w;
    out
}

fn folded(tl: &TwoLevelParams) -> Result<FloquetSolution> {
    Ok(fold_difference(&extended(tl)?))
}

fn d_bias(tl: &TwoLevelParams) -> Result<f64> {
    Ok(dispersion_of(&extended(tl)?)?.d_bias)
}

/// Sweet-spot drive frequency at fixed amplitude, nearest to `guess`.
pub fn sweet_omega_near(base: &TwoLevelParams, amp: f64, guess: f64) -> Result<f64> {
    let f = |w: f64| d_bias(&base.with_amp(amp).with_omega(w));
    let f0 = f(guess)?;
    if f0 == 0.0 {
        return Ok(guess);
    }
    let mut h = 1e-4 * guess;
    for _ in 0..40 {
        for x in [guess - h, guess + h] {
            if x > 0.0 && f(x)?.signum() != f0.signum() {
                let (a, b) = if x < guess { (x, guess) } else { (guess, x) };
                return brent(f, a, b, 1e-15 * guess);
            }
        }
        h *= 1.5;
        if h > 0.2 * guess {
            break;
        }
    }
    Err(Error::NoRoot(format!(
        "no sweet frequency near {guess} rad/ns at A = {amp}"
    )))
}

/// Sweet point of `base` at drive amplitude `amp`, starting the frequency
/// search from the undriven transition.
pub fn sweet_point_at(base: &TwoLevelParams, amp: f64) -> Result<TwoQubitPoint> {
    Ok(TwoQubitPoint {
        amp,
        omega_d: sweet_omega_near(base, amp, base.omega_ge())?,
    })
}

/// Gate point on the left sweet manifold where ε^L_01 = ε^R_01, searched
/// between amplitudes `amp_lo` and `amp_hi` by continuation from `amp_lo`.
pub fn find_resonance(
    left_base: &TwoLevelParams,
    right: &TwoLevelParams,
    amp_lo: f64,
    amp_hi: f64,
) -> Result<TwoQubitPoint> {
    let target = folded(right)?.eps01;
    let start = sweet_point_at(left_base, amp_lo)?;
    let reference = folded(&start.apply(left_base))?;
    let eval = |amp: f64, guess: f64| -> Result<(f64, f64)> {
        let w = sweet_omega_near(left_base, amp, guess)?;
        let sol = fold_difference(
            &extended(&left_base.with_amp(amp).with_omega(w))?.relabel_like(&reference),
        );
        Ok((sol.eps01 - target, w))
    };
    let n = 40;
    let (mut a0, mut w0) = (amp_lo, start.omega_d);
    let (mut f0, _) = eval(a0, w0)?;
    for i in 1..=n {
        let a1 = amp_lo + (amp_hi - amp_lo) * i as f64 / n as f64;
        let (f1, w1) = eval(a1, w0)?;
        if f1.signum() != f0.signum() {
            let guess = 0.5 * (w0 + w1);
            let amp = brent(
                |a| eval(a, guess).map(|r| r.0),
                a0.min(a1),
                a0.max(a1),
                1e-14 * a1.abs().max(1.0),
            )?;
            return Ok(TwoQubitPoint {
                amp,
                omega_d: sweet_omega_near(left_base, amp, guess)?,
            });
        }
        (a0, w0, f0) = (a1, w1, f1);
    }
    Err(Error::NoRoot(
        "no quasi-energy resonance on the searched manifold segment".into(),
    ))
}

/// Four-point Lagrange interpolation on equally spaced nodes.
fn cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len() - 1;
    let (x0, x1) = (xs[0], xs[n]);
    if x1 == x0 {
        return ys[0];
    }
    let u = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0) * n as f64;
    if n < 3 {
        let i = (u.floor() as usize).min(n - 1);
        let f = u - i as f64;
        return ys[i] * (1.0 - f) + ys[i + 1] * f;
    }
    let i = (u.floor() as usize).clamp(1, n - 2) - 1;
    let t = u - i as f64;
    let mut acc = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != j {
                l *= (t - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += l * ys[i + j];
    }
    acc
}

/// Left-qubit path from the idle to the gate point: amplitude interpolated
/// linearly, drive frequency projected onto the dc sweet manifold at the
/// nodes and interpolated between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivePath {
    pub amps: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Largest |∂ε_01/∂B| found between nodes.
    pub max_residual: f64,
}

impl DrivePath {
    pub fn new(
        base: &TwoLevelParams,
        idle: TwoQubitPoint,
        gate: TwoQubitPoint,
        nodes: usize,
        tol: f64,
    ) -> Result<Self> {
        let mut n = nodes.max(2);
        loop {
            let mut amps = Vec::with_capacity(n + 1);
            let mut omegas = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let s = i as f64 / n as f64;
                let amp = idle.amp + (gate.amp - idle.amp) * s;
                let linear = idle.omega_d + (gate.omega_d - idle.omega_d) * s;
                let guess = match omegas.last() {
                    Some(&prev) => prev + (gate.omega_d - idle.omega_d) / n as f64,
                    None => linear,
                };
                omegas.push(sweet_omega_near(base, amp, guess)?);
                amps.push(amp);
            }
            let mut max_residual: f64 = 0.0;
            for i in 0..n {
                let amp = 0.5 * (amps[i] + amps[i + 1]);
                let w = cubic(&amps, &omegas, amp);
                max_residual = max_residual.max(d_bias(&base.with_amp(amp).with_omega(w))?.abs());
            }
            if max_residual <= tol {
                return Ok(Self {
                    amps,
                    omegas,
                    max_residual,
                });
            }
            if n >= 1024 {
                return Err(Error::OffManifold {
                    residual: max_residual,
                });
            }
            n *= 2;
        }
    }

    pub fn idle(&self) -> TwoQubitPoint {
        TwoQubitPoint {
            amp: self.amps[0],
            omega_d: self.omegas[0],
        }
    }

    pub fn gate(&self) -> TwoQubitPoint {
        let n = self.amps.len() - 1;
        TwoQubitPoint {
            amp: self.amps[n],
            omega_d: self.omegas[n],
        }
    }

    /// Position along the path as a fractional node index.
    fn locate(&self, amp: f64) -> f64 {
        let n = self.amps.len() - 1;
        let (a0, a1) = (self.amps[0], self.amps[n]);
        if a1 == a0 {
            return 0.0;
        }
        ((amp - a0) / (a1 - a0)).clamp(0.0, 1.0) * n as f64
    }

    pub fn omega_at(&self, amp: f64) -> f64 {
        cubic(&self.amps, &self.omegas, amp)
    }

    fn nearest_node(&self, amp: f64) -> usize {
        self.locate(amp).round() as usize
    }
}

/// Fig.-5-type gate: left qubit ramps along its sweet manifold from idle to
/// gate point and back, right qubit is held at a fixed sweet point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitGate {
    pub left_base: TwoLevelParams,
    pub right: TwoLevelParams,
    pub path: DrivePath,
    /// J in rad/ns.
    pub j: f64,
    pub coupling_at_gate: CouplingTerms,
    /// Residual flip-flop coefficient and detuning at the idle point.
    pub coupling_at_idle: CouplingTerms,
    left_idle: FloquetSolution,
    right_sol: FloquetSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapPeriod {
    pub predicted: f64,
    pub simulated: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitMap {
    /// (τ_wait, t_ramp, fidelity) in row-major order over τ_wait then t_ramp.
    pub rows: Vec<(f64, f64, f64)>,
    pub best: (f64, f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenSystemOptions {
    pub samples: usize,
    pub seed: u64,
    pub tan_delta_c: f64,
    pub delta_f: f64,
    pub temperature: f64,
    pub ln_factor: f64,
}

impl Default for OpenSystemOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            seed: 0,
            tan_delta_c: 1.1e-6,
            delta_f: 1.8e-6,
            temperature: 0.015,
            ln_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSystemReport {
    pub fidelity: f64,
    pub standard_error: f64,
    pub closed_fidelity: f64,
    pub samples: usize,
    pub seed: u64,
    /// Standard deviation of the quasi-static dc flux offsets (radians), left and right.
    pub sigma_phi_dc: [f64; 2],
    pub method: String,
}

const OPEN_METHOD: &str = "Lindblad dielectric channels in the instantaneous Floquet basis; 1/f noise as quasi-static Gaussian dc-flux offsets averaged over samples";

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

fn floquet_basis(sol: &FloquetSolution, theta: f64) -> Mat2 {
    let t = theta / sol.omega_d;
    let a = sol.mode_at(0, t);
    let b = sol.mode_at(1, t);
    Mat2::new(a[0], b[0], a[1], b[1])
}

fn static_part(tl: &TwoLevelParams) -> Mat2 {
    sigma_z() * Complex64::from(0.5 * tl.bias) + sigma_x() * Complex64::from(0.5 * tl.delta)
}

fn to_dmatrix(m: &Mat4) -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

/// Local phase corrections diag(1, e^{ia}) applied after (left, right) and
/// before (left) the gate.
fn local_phases(u: &DMatrix<Complex64>, p: &[f64]) -> DMatrix<Complex64> {
    let ph = |a: f64, b: f64, i: usize| {
        let (l, r) = (i / 2, i % 2);
        Complex64::from_polar(1.0, a * l as f64 + b * r as f64)
    };
    DMatrix::from_fn(4, 4, |i, j| {
        ph(p[0], p[1], i) * u[(i, j)] * ph(p[2], 0.0, j)
    })
}

struct PhaseCost<'a> {
    u: &'a DMatrix<Complex64>,
    target: DMatrix<Complex64>,
}

impl CostFunction for PhaseCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(1.0 - average_gate_fidelity(&self.target, &local_phases(self.u, p)))
    }
}

/// Fidelity to √iSWAP maximised over single-qubit Z phases.
fn best_local_phases(u: &DMatrix<Complex64>) -> Result<(f64, Vec<f64>)> {
    let target = Gate::SqrtIswap.matrix();
    let n = 16;
    let mut best = (f64::NEG_INFINITY, vec![0.0; 3]);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let p = [a, b, c].map(|x| TWO_PI * x as f64 / n as f64);
                let f = average_gate_fidelity(&target, &local_phases(u, &p));
                if f > best.0 {
                    best = (f, p.to_vec());
                }
            }
        }
    }
    let h = TWO_PI / n as f64;
    let start = best.1.clone();
    let mut simplex = vec![start.clone()];
    for i in 0..3 {
        let mut v = start.clone();
        v[i] += 0.5 * h;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-14)
        .map_err(|e| Error::NoRoot(e.to_string()))?;
    let run = Executor::new(
        PhaseCost {
            u,
            target: target.clone(),
        },
        solver,
    )
    .configure(|s| s.max_iters(400))
    .run()
    .map_err(|e| Error::NoRoot(e.to_string()))?;
    let p = run.state().best_param.clone().unwrap_or(start);
    let f = average_gate_fidelity(&target, &local_phases(u, &p));
    Ok(if f >= best.0 { (f, p) } else { best })
}

impl TwoQubitGate {
    pub fn new(
        sys: &TwoQubitSystem,
        idle: TwoQubitPoint,
        gate: TwoQubitPoint,
        right: TwoQubitPoint,
        path_tol: f64,
    ) -> Result<Self> {
        let (_, left_base, _, right_base) = sys.bases()?;
        let path = DrivePath::new(&left_base, idle, gate, 16, path_tol)?;
        let right = right.apply(&right_base);
        let right_sol = folded(&right)?;
        let left_idle = folded(&path.idle().apply(&left_base))?;
        let left_gate =
            fold_difference(&extended(&path.gate().apply(&left_base))?.relabel_like(&left_idle));
        let j = sys.j_angular();
        let tol = 10.0 * j;
        Ok(Self {
            coupling_at_gate: interaction_picture(&left_gate, &right_sol, j, 3, tol)?,
            coupling_at_idle: interaction_picture(&left_idle, &right_sol, j, 3, tol)?,
            left_base,
            right,
            path,
            j,
            left_idle,
            right_sol,
        })
    }

    /// Drive schedule of the left qubit for given ramp and wait times.
    pub fn schedule(&self, t_ramp: f64, tau_wait: f64) -> PulseSchedule {
        let (i, g) = (self.path.idle(), self.path.gate());
        let mut s = PulseSchedule::new(
            vec![
                Segment::ramp(t_ramp, (i.amp, g.amp), (i.omega_d, g.omega_d)),
                Segment::hold(tau_wait, g.amp, g.omega_d),
                Segment::ramp(t_ramp, (g.amp, i.amp), (g.omega_d, i.omega_d)),
            ],
            Protocol::TwoQubit,
        );
        s.ramp_shape = RampShape::Cosine;
        s
    }

    fn hamiltonian(
        &self,
        left: &TwoLevelParams,
        right: &TwoLevelParams,
    ) -> impl Fn(f64, f64, f64) -> Mat4 {
        let hl = static_part(left);
        let hr = static_part(right);
        let (ar, wr) = (right.amp, right.omega_d);
        let j = self.j;
        let id = crate::linalg::identity();
        let zz = kron(&sigma_z(), &sigma_z()) * Complex64::from(j);
        move |t: f64, amp_l: f64, theta_l: f64| {
            let l = hl + sigma_z() * Complex64::from(amp_l * theta_l.cos());
            let r = hr + sigma_z() * Complex64::from(ar * (wr * t).cos());
            kron(&l, &id) + kron(&id, &r) + zz
        }
    }

    fn frame(&self, theta_l: f64, t: f64) -> Mat4 {
        kron(
            &floquet_basis(&self.left_idle, theta_l),
            &floquet_basis(&self.right_sol, self.right.omega_d * t),
        )
    }

    /// Closed-system run; returns the Floquet-frame operator and the drive
    /// phase of the left qubit at the end.
    fn propagate(
        &self,
        t_ramp: f64,
        tau_wait: f64,
        left: &TwoLevelParams,
        right: &TwoLevelParams,
    ) -> Result<(Mat4, f64)> {
        let sched = self.schedule(t_ramp, tau_wait);
        sched.validate()?;
        let total = sched.duration();
        let ham = self.hamiltonian(left, right);
        let mut y = vec![Complex64::from(0.0); 17];
        for i in 0..4 {
            y[4 * i + i] = Complex64::from(1.0);
        }
        Dopri::with_rtol(RTOL).integrate(
            |t, y, dy| {
                let amp = sched.sample(t).amp;
                let h = ham(t, amp, y[16].re);
                for c in 0..4 {
                    for r in 0..4 {
                        let mut acc = Complex64::from(0.0);
                        for k in 0..4 {
                            acc += h[(r, k)] * y[4 * c + k];
                        }
                        dy[4 * c + r] = Complex64::new(acc.im, -acc.re);
                    }
                }
                dy[16] = Complex64::from(self.path.omega_at(amp));
            },
            0.0,
            total,
            &mut y,
        )?;
        let u = Mat4::from_fn(|r, c| y[4 * c + r]);
        let theta = y[16].re;
        let frame = self.frame(theta, total).adjoint() * u * self.frame(0.0, 0.0);
        Ok((frame, theta))
    }

    /// Closed-system √iSWAP fidelity, optimised over single-qubit Z phases.
    pub fn simulate(&self, t_ramp: f64, tau_wait: f64) -> Result<GateResult> {
        let (frame, _) = self.propagate(t_ramp, tau_wait, &self.left_base, &self.right)?;
        let u = to_dmatrix(&frame);
        let (fidelity, phases) = best_local_phases(&u)?;
        let corrected = local_phases(&u, &phases);
        Ok(GateResult {
            unitarity_error: unitarity_error(&u),
            unitary_floquet_frame: corrected,
            fidelity,
            target: Gate::SqrtIswap,
            populations: Vec::new(),
        })
    }

    /// Fidelity map over wait and ramp times.
    pub fn fidelity_map(&self, waits: &[f64], ramps: &[f64]) -> Result<TwoQubitMap> {
        let grid: Vec<(f64, f64)> = waits
            .iter()
            .flat_map(|&w| ramps.iter().map(move |&r| (w, r)))
            .collect();
        let rows: Vec<(f64, f64, f64)> = grid
            .into_par_iter()
            .map(|(w, r)| Ok((w, r, self.simulate(r, w)?.fidelity)))
            .collect::<Result<_>>()?;
        let best = rows
            .iter()
            .copied()
            .fold((f64::NAN, f64::NAN, f64::NEG_INFINITY), |b, x| {
                if x.2 > b.2 {
                    x
                } else {
                    b
                }
            });
        Ok(TwoQubitMap { rows, best })
    }

    /// Excitation exchange at the gate point with both drives held fixed,
    /// compared with the rotating-wave period π/|J g^L_{0+} g^R_{0−}|.
    pub fn swap_period(&self) -> Result<SwapPeriod> {
        let predicted = self.coupling_at_gate.swap_period();
        let gate = self.path.gate();
        let left = gate.apply(&self.left_base);
        let left_sol = fold_difference(&extended(&left)?.relabel_like(&self.left_idle));
        let ham = self.hamiltonian(&self.left_base, &self.right);
        let n = 600;
        let span = 0.75 * predicted;
        let times: Vec<f64> = (1..=n).map(|i| span * i as f64 / n as f64).collect();
        let frame0 = kron(
            &floquet_basis(&left_sol, 0.0),
            &floquet_basis(&self.right_sol, 0.0),
        );
        // |1_L 0_R⟩ in the Floquet basis
        let mut y: Vec<Complex64> = (0..4).map(|r| frame0[(r, 2)]).collect();
        let mut transfer = Vec::with_capacity(n);
        Dopri::with_rtol(RTOL).integrate_to(
            |t, y, dy| {
                let h = ham(t, gate.amp, gate.omega_d * t);
                for r in 0..4 {
                    let mut acc = Complex64::from(0.0);
                    for k in 0..4 {
                        acc += h[(r, k)] * y[k];
                    }
                    dy[r] = Complex64::new(acc.im, -acc.re);
                }
            },
            0.0,
            &times,
            &mut y,
            |i, y| {
                let t = times[i];
                let f = kron(
                    &floquet_basis(&left_sol, gate.omega_d * t),
                    &floquet_basis(&self.right_sol, self.right.omega_d * t),
                );
                let amp: Complex64 = (0..4).map(|r| f[(r, 1)].conj() * y[r]).sum();
                transfer.push(amp.norm_sqr());
            },
        )?;
        // first maximum of the transfer probability sits at half a period
        let i = (1..n - 1)
            .find(|&i| {
                transfer[i] >= transfer[i - 1] && transfer[i] > transfer[i + 1] && transfer[i] > 0.5
            })
            .ok_or_else(|| Error::NoRoot("no swap maximum within the window".into()))?;
        let (ym, y0, yp) = (transfer[i - 1], transfer[i], transfer[i + 1]);
        let dt = span / n as f64;
        let shift = 0.5 * (ym - yp) / (ym - 2.0 * y0 + yp);
        let simulated = 2.0 * (times[i] + shift * dt);
        Ok(SwapPeriod {
            predicted,
            simulated,
            relative_error: (simulated - predicted).abs() / predicted,
        })
    }

    /// Open-system fidelity at one (t_ramp, τ_wait): dielectric Lindblad
    /// channels plus quasi-static 1/f dc-flux offsets.
    pub fn simulate_open(
        &self,
        sys: &TwoQubitSystem,
        t_ramp: f64,
        tau_wait: f64,
        opts: &OpenSystemOptions,
    ) -> Result<OpenSystemReport> {
        if opts.samples == 0 {
            return Err(Error::invalid(
                "the quasi-static ensemble needs at least one sample",
            ));
        }
        let (lq, _, rq, _) = sys.bases()?;
        let closed = self.simulate(t_ramp, tau_wait)?;
        let (frame, _) = self.propagate(t_ramp, tau_wait, &self.left_base, &self.right)?;
        let (_, phases) = best_local_phases(&to_dmatrix(&frame))?;

        let dielectric = |q: &Fluxonium| {
            let mut m = NoiseModel::from_loss(q, opts.tan_delta_c, 0.0, opts.temperature);
            m.ln_factor = opts.ln_factor;
            m
        };
        let flux = |q: &Fluxonium| {
            let m = NoiseModel::from_loss(q, 0.0, opts.delta_f, opts.temperature);
            // quasi-static spread matching the first-order 1/f decay time
            let sigma_bias = 2.0 * std::f64::consts::SQRT_2 * m.a_f * opts.ln_factor;
            sigma_bias / (2.0 * q.e_l() * q.phi_ge())
        };
        let sigma = [flux(&lq), flux(&rq)];

        let left_nodes: Vec<(FloquetSolution, [f64; 3])> = {
            let model = dielectric(&lq);
            let mut prev = self.left_idle.clone();
            let mut out = Vec::with_capacity(self.path.amps.len());
            for (a, w) in self.path.amps.iter().zip(&self.path.omegas) {
                let sol = fold_difference(
                    &extended(
                        &TwoQubitPoint {
                            amp: *a,
                            omega_d: *w,
                        }
                        .apply(&self.left_base),
                    )?
                    .relabel_like(&prev),
                );
                let r = dynamical_rates(&filter_weights(&sol)?, &model)?;
                out.push((
                    sol.clone(),
                    [
                        r.gamma_minus * 1e-3,
                        r.gamma_plus * 1e-3,
                        r.gamma_phi * 1e-3,
                    ],
                ));
                prev = sol;
            }
            out
        };
        let right_rates = {
            let r = dynamical_rates(&filter_weights(&self.right_sol)?, &dielectric(&rq))?;
            [
                r.gamma_minus * 1e-3,
                r.gamma_plus * 1e-3,
                r.gamma_phi * 1e-3,
            ]
        };

        let runs: Vec<f64> = (0..opts.samples)
            .into_par_iter()
            .map(|index| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(index as u64);
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                let dl = sigma[0] * normal.sample(&mut rng);
                let dr = sigma[1] * normal.sample(&mut rng);
                let left = self
                    .left_base
                    .with_bias(self.left_base.bias + dl * 2.0 * lq.e_l() * lq.phi_ge());
                let right = self
                    .right
                    .with_bias(self.right.bias + dr * 2.0 * rq.e_l() * rq.phi_ge());
                self.lindblad_fidelity(
                    t_ramp,
                    tau_wait,
                    &left,
                    &right,
                    &left_nodes,
                    right_rates,
                    &phases,
                )
            })
            .collect::<Result<_>>()?;
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / n;
        let var = runs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Ok(OpenSystemReport {
            fidelity: mean,
            standard_error: (var / n).sqrt(),
            closed_fidelity: closed.fidelity,
            samples: opts.samples,
            seed: opts.seed,
            sigma_phi_dc: sigma,
            method: OPEN_METHOD.to_string(),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn lindblad_fidelity(
        &self,
        t_ramp: f64,
        tau_wait: f64,
        left: &TwoLevelParams,
        right: &TwoLevelParams,
        left_nodes: &[(FloquetSolution, [f64; 3])],
        right_rates: [f64; 3],
        phases: &[f64],
    ) -> Result<f64> {
        let sched = self.schedule(t_ramp, tau_wait);
        let total = sched.duration();
        let ham = self.hamiltonian(left, right);
        let id = crate::linalg::identity();
        let jumps = |w: &Mat2, rates: [f64; 3], on_left: bool| -> [Mat4; 3] {
            let w0 = w.column(0).into_owned();
            let w1 = w.column(1).into_owned();
            let lower = w0 * w1.adjoint() * Complex64::from(rates[0].sqrt());
            let raise = w1 * w0.adjoint() * Complex64::from(rates[1].sqrt());
            let phi =
                (w1 * w1.adjoint() - w0 * w0.adjoint()) * Complex64::from((0.5 * rates[2]).sqrt());
            [lower, raise, phi].map(|m| {
                if on_left {
                    kron(&m, &id)
                } else {
                    kron(&id, &m)
                }
            })
        };

        // 16 density-matrix inputs |i⟩⟨j| in the Floquet frame, stacked, plus θ_L
        let v0 = self.frame(0.0, 0.0);
        let mut y = vec![Complex64::from(0.0); 16 * 16 + 1];
        for i in 0..4 {
            for j in 0..4 {
                let rho = v0.column(i) * v0.column(j).adjoint();
                for (k, c) in rho.iter().enumerate() {
                    y[16 * (4 * i + j) + k] = *c;
                }
            }
        }
        Dopri::with_rtol(1e-8).integrate(
            |t, y, dy| {
                let amp = sched.sample(t).amp;
                let theta = y[256].re;
                let h = ham(t, amp, theta);
                let (sol_l, rates_l) = &left_nodes[self.path.nearest_node(amp)];
                let ls = jumps(&floquet_basis(sol_l, theta), *rates_l, true);
                let rs = jumps(
                    &floquet_basis(&self.right_sol, self.right.omega_d * t),
                    right_rates,
                    false,
                );
                let ops: Vec<&Mat4> = ls.iter().chain(rs.iter()).collect();
                let mut eff = h;
                for l in &ops {
                    eff -= (l.adjoint() * *l) * Complex64::new(0.0, 0.5);
                }
                let i_unit = Complex64::new(0.0, 1.0);
                for b in 0..16 {
                    let rho = Mat4::from_column_slice(&y[16 * b..16 * b + 16]);
                    let mut d = -(eff * rho - rho * eff.adjoint()) * i_unit;
                    for l in &ops {
                        d += *l * rho * l.adjoint();
                    }
                    dy[16 * b..16 * b + 16].copy_from_slice(d.as_slice());
                }
                dy[256] = Complex64::from(self.path.omega_at(amp));
            },
            0.0,
            total,
            &mut y,
        )?;
        let theta = y[256].re;
        let vt = self.frame(theta, total);
        // effective target after the same Z corrections as the closed run
        let target = Gate::SqrtIswap.matrix();
        let undo = |m: &DMatrix<Complex64>| {
            let ph = |a: f64, b: f64, i: usize| {
                Complex64::from_polar(1.0, -(a * (i / 2) as f64 + b * (i % 2) as f64))
            };
            DMatrix::from_fn(4, 4, |i, j| {
                ph(phases[0], phases[1], i) * m[(i, j)] * ph(phases[2], 0.0, j)
            })
        };
        let t_eff = undo(&target);
        let mut f_pro = Complex64::from(0.0);
        for i in 0..4 {
            for j in 0..4 {
                let b = 4 * i + j;
                let rho = Mat4::from_column_slice(&y[16 * b..16 * b + 16]);
                let rho_f = vt.adjoint() * rho * vt;
                let rho_f = to_dmatrix(&rho_f);
                let m = t_eff.adjoint() * rho_f * &t_eff;
                f_pro += m[(i, j)];
            }
        }
        let d = 4.0;
        let f_pro = f_pro.re / (d * d);
        Ok(((d * f_pro + 1.0) / (d + 1.0)).clamp(0.0, 1.0))
    }
}
