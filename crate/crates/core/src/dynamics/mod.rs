//! Pulsed evolution of driven qubits: Floquet-frame single-qubit gates,
//! adiabatic readout mapping and the two-qubit √iSWAP protocol.

mod schedule;
mod single;
mod two_qubit;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::Complex64;

pub use schedule::{DriveSample, Protocol, PulseSchedule, RampShape, SecondaryTone, Segment};
pub use single::{
    adiabatic_map, calibrate_phase_gate, calibrate_rabi_gate, evolve_closed, phase_gate,
    predicted_phase, rabi_chevron, rabi_gate, AdiabaticMap, ChevronPoint, Evolution,
    PhaseCalibration, RabiCalibration,
};
pub use two_qubit::{
    find_resonance, fold_difference, interaction_picture, sweet_omega_near, sweet_point_at,
    CouplingTerm, CouplingTerms, DrivePath, OpenSystemOptions, OpenSystemReport, QubitSetup,
    SwapPeriod, TwoQubitGate, TwoQubitMap, TwoQubitPoint, TwoQubitSystem, SQRT_ISWAP_ANGLE,
};

/// Named target operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Identity,
    X,
    SqrtX,
    S,
    T,
    SqrtIswap,
}

impl Gate {
    pub fn dim(self) -> usize {
        match self {
            Gate::SqrtIswap => 4,
            _ => 2,
        }
    }

    pub fn matrix(self) -> DMatrix<Complex64> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Gate::Identity => DMatrix::identity(2, 2),
            Gate::X => {
                DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            }
            Gate::SqrtX => DMatrix::from_row_slice(
                2,
                2,
                &[c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
            ),
            Gate::S => {
                DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
            }
            Gate::T => {
                DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, h)])
            }
            Gate::SqrtIswap => {
                let mut m = DMatrix::identity(4, 4);
                m[(1, 1)] = c(h, 0.0);
                m[(2, 2)] = c(h, 0.0);
                m[(1, 2)] = c(0.0, h);
                m[(2, 1)] = c(0.0, h);
                m
            }
        }
    }

    /// Rotation angle of the Rabi gates.
    pub fn rabi_angle(self) -> Option<f64> {
        match self {
            Gate::X => Some(std::f64::consts::PI),
            Gate::SqrtX => Some(std::f64::consts::FRAC_PI_2),
            _ => None,
        }
    }

    /// Phase of |1⟩ relative to |0⟩ for the phase gates.
    pub fn phase(self) -> Option<f64> {
        match self {
            Gate::S => Some(std::f64::consts::FRAC_PI_2),
            Gate::T => Some(std::f64::consts::FRAC_PI_4),
            Gate::Identity => Some(0.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    /// Evolution operator in the Floquet frame, dynamical phases removed.
    pub unitary_floquet_frame: DMatrix<Complex64>,
    pub fidelity: f64,
    pub target: Gate,
    /// Max |U†U − 1|.
    pub unitarity_error: f64,
    /// Sample times (ns) and Floquet-state populations of the evolved initial state.
    pub populations: Vec<(f64, Vec<f64>)>,
}

/// F = (|Tr(V†U)|² + d)/(d(d + 1)).
pub fn average_gate_fidelity(target: &DMatrix<Complex64>, actual: &DMatrix<Complex64>) -> f64 {
    let d = target.nrows() as f64;
    let tr = (target.adjoint() * actual).trace();
    ((tr.norm_sqr() + d) / (d * (d + 1.0))).clamp(0.0, 1.0)
}

pub(crate) fn unitarity_error(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}
