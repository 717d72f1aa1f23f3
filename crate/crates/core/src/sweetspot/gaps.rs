use argmin::core::{CostFunction, Executor};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use serde::{Deserialize, Serialize};

use super::{brent, dispersion};
use crate::circuit::TwoLevelParams;
use crate::special::bessel_j;
use crate::units::angular_to_ghz;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Weak,
    Strong,
}

/// Leading-order avoided-crossing gap at the m-th resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub m: u32,
    pub regime: Regime,
    /// GHz.
    pub gap: f64,
    /// atan(Δ/B), radians.
    pub theta: f64,
    /// 2Δ_m/(√3 m), GHz.
    pub fwhm: f64,
    /// The parameters lie outside the regime the estimate assumes.
    pub regime_warning: bool,
}

/// Δ_m ≈ A^m |sinθ cos^{m−1}θ| / ((m−1)! ω_d^{m−1}), valid for A ≪ Ω_ge near
/// ω_d = Ω_ge/m.
pub fn gap_weak(m: u32, tl: &TwoLevelParams) -> Result<GapEstimate> {
    check_order(m)?;
    let theta = tl.delta.atan2(tl.bias);
    let factorial: f64 = (1..m).map(f64::from).product();
    let omega = tl.omega_ge();
    let (sin, cos) = (tl.delta / omega, tl.bias / omega);
    let gap = tl.amp.abs().powi(m as i32) * (sin * cos.powi(m as i32 - 1)).abs()
        / (factorial * tl.omega_d.powi(m as i32 - 1));
    let regime_warning =
        tl.amp.abs() > 0.2 * omega || (f64::from(m) * tl.omega_d / omega - 1.0).abs() > 0.1;
    Ok(estimate(m, Regime::Weak, gap, theta, regime_warning))
}

/// Δ_m = Δ |J_m(2A/ω_d)|, valid for A ≳ Ω_ge near ω_d = B/m.
pub fn gap_strong(m: u32, tl: &TwoLevelParams) -> Result<GapEstimate> {
    check_order(m)?;
    let theta = tl.delta.atan2(tl.bias);
    let gap = tl.delta.abs() * bessel_j(m as i32, 2.0 * tl.amp / tl.omega_d).abs();
    let regime_warning = tl.amp.abs() < 0.5 * tl.omega_ge()
        || tl.bias == 0.0
        || (f64::from(m) * tl.omega_d / tl.bias.abs() - 1.0).abs() > 0.1;
    Ok(estimate(m, Regime::Strong, gap, theta, regime_warning))
}

/// Δω_FWHm = 2Δ_{m,0}/(√3 m), in the units of `gap0`.
pub fn fwhm_width(m: u32, gap0: f64) -> f64 {
    2.0 * gap0 / (3f64.sqrt() * f64::from(m))
}

fn estimate(m: u32, regime: Regime, gap: f64, theta: f64, regime_warning: bool) -> GapEstimate {
    let gap = angular_to_ghz(gap);
    GapEstimate {
        m,
        regime,
        gap,
        theta,
        fwhm: fwhm_width(m, gap),
        regime_warning,
    }
}

fn check_order(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("resonance order must be positive"));
    }
    Ok(())
}

/// Numerically located avoided crossing, rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericGap {
    pub omega_d: f64,
    pub gap: f64,
}

/// Relative half-width of the frequency window searched around a resonance.
const WINDOW: f64 = 0.1;
const COARSE: usize = 41;

fn resonance_centre(m: u32, tl: &TwoLevelParams, regime: Regime) -> Result<f64> {
    check_order(m)?;
    let c = match regime {
        Regime::Weak => tl.omega_ge(),
        Regime::Strong => tl.bias.abs(),
    } / f64::from(m);
    if !(c > 0.0) {
        return Err(Error::invalid("resonance frequency vanishes"));
    }
    Ok(c)
}

struct GapCost(TwoLevelParams);

impl CostFunction for GapCost {
    type Param = f64;
    type Output = f64;

    fn cost(&self, w: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(local_gap(&self.0.with_omega(*w))?)
    }
}

/// min(ε_01, ω_d − ε_01), the distance to the nearest crossing of replicas.
fn local_gap(tl: &TwoLevelParams) -> Result<f64> {
    let sol = crate::floquet::floquet_solve_monodromy(tl)?;
    Ok(sol.eps01.min(sol.omega_d - sol.eps01))
}

/// Minimum over ω_d of the local gap near the m-th resonance of the regime,
/// by a coarse scan followed by golden-section refinement.
pub fn numeric_gap(m: u32, tl: &TwoLevelParams, regime: Regime) -> Result<NumericGap> {
    let c = resonance_centre(m, tl, regime)?;
    let ws: Vec<f64> = (0..COARSE)
        .map(|i| c * (1.0 - WINDOW + 2.0 * WINDOW * i as f64 / (COARSE - 1) as f64))
        .collect();
    let gaps = ws
        .iter()
        .map(|&w| local_gap(&tl.with_omega(w)))
        .collect::<Result<Vec<_>>>()?;
    let best = (0..COARSE)
        .min_by(|&a, &b| gaps[a].total_cmp(&gaps[b]))
        .unwrap();
    let lo = ws[best.saturating_sub(1)];
    let hi = ws[(best + 1).min(COARSE - 1)];
    let solver = GoldenSectionSearch::new(lo, hi)
        .and_then(|s| s.with_tolerance(1e-12))
        .map_err(|e| Error::NoRoot(e.to_string()))?;
    let result = Executor::new(GapCost(*tl), solver)
        .configure(|s| s.param(ws[best]).max_iters(400))
        .run()
        .map_err(|e| match e.downcast::<Error>() {
            Ok(inner) => inner,
            Err(other) => Error::NoRoot(other.to_string()),
        })?;
    let state = result.state();
    let omega_d = state.best_param.unwrap_or(ws[best]);
    Ok(NumericGap {
        omega_d,
        gap: local_gap(&tl.with_omega(omega_d))?,
    })
}

/// Full width at half minimum of |∂ε_01/∂B| along ω_d around the m-th
/// strong-drive resonance, rad/ns.
pub fn numeric_fwhm(m: u32, tl: &TwoLevelParams) -> Result<f64> {
    let located = numeric_gap(m, tl, Regime::Strong)?;
    let g = |w: f64| -> Result<f64> { Ok(dispersion(&tl.with_omega(w))?.d_bias) };
    let half = |w: f64| -> Result<f64> { Ok(g(w)?.abs() - 0.5) };
    let scale = located.gap / f64::from(m);

    let mut lo = located.omega_d - 0.3 * scale;
    let mut hi = located.omega_d + 0.3 * scale;
    let centre = if g(lo)?.signum() != g(hi)?.signum() {
        brent(&g, lo, hi, 1e-14 * located.omega_d)?
    } else {
        located.omega_d
    };
    let mut step = 0.1 * scale;
    lo = centre - step;
    while half(lo)? < 0.0 {
        step *= 1.5;
        lo -= step;
        if centre - lo > WINDOW * centre {
            return Err(Error::NoRoot(
                "half-minimum not reached below the resonance".into(),
            ));
        }
    }
    let left = brent(&half, lo, centre, 1e-14 * centre)?;
    step = 0.1 * scale;
    hi = centre + step;
    while half(hi)? < 0.0 {
        step *= 1.5;
        hi += step;
        if hi - centre > WINDOW * centre {
            return Err(Error::NoRoot(
                "half-minimum not reached above the resonance".into(),
            ));
        }
    }
    let right = brent(&half, centre, hi, 1e-14 * centre)?;
    Ok(right - left)
}
