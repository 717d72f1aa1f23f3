use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{brent, dispersion, dispersion_of, Dispersion, SweetKind, SweetPoint, SWEET_TOL};
use crate::circuit::{Fluxonium, TwoLevelParams};
use crate::floquet::floquet_solve_monodromy;
use crate::noise::{dynamical_rates, filter_weights, NoiseModel, RateFlags, DEFAULT_MARGIN};
use crate::units::{angular_to_ghz, ghz_to_angular, TWO_PI};
use crate::{Error, Result};

/// Rectangle in drive frequency (GHz) and ac flux amplitude (φ_ac/2π),
/// sampled on an inclusive uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub f_min: f64,
    pub f_max: f64,
    pub n_f: usize,
    pub ac_min: f64,
    pub ac_max: f64,
    pub n_ac: usize,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if self.n_f < 2 || self.n_ac < 2 {
            return Err(Error::invalid("grids need at least two points"));
        }
        if !(self.f_min < self.f_max && self.ac_min < self.ac_max) {
            return Err(Error::invalid("grid bounds must satisfy min < max"));
        }
        if !(self.f_min > 0.0) {
            return Err(Error::invalid("drive frequencies must be positive"));
        }
        Ok(())
    }

    pub fn f_at(&self, i: usize) -> f64 {
        self.f_min + (self.f_max - self.f_min) * i as f64 / (self.n_f - 1) as f64
    }

    pub fn ac_at(&self, j: usize) -> f64 {
        self.ac_min + (self.ac_max - self.ac_min) * j as f64 / (self.n_ac - 1) as f64
    }

    pub fn f_step(&self) -> f64 {
        (self.f_max - self.f_min) / (self.n_f - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Bound on |∂ε_01/∂B| at an accepted root.
    pub tol: f64,
    /// Largest frequency jump, in grid cells, allowed between linked rows.
    pub max_jump_cells: usize,
    /// Sweet points whose local gap (rad/ns) falls below this are cuts.
    pub gap_threshold: f64,
    /// Attach rates to every point when present.
    pub noise: Option<NoiseModel>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            tol: SWEET_TOL,
            max_jump_cells: 2,
            gap_threshold: DEFAULT_MARGIN,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweetCurve {
    /// Grid row of each point.
    pub rows: Vec<usize>,
    pub points: Vec<SweetPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub curves: Vec<SweetCurve>,
    /// Roots inside the gap threshold, kept out of the curves.
    pub cuts: Vec<(usize, SweetPoint)>,
    /// Sign changes that turned out to be label jumps rather than roots.
    pub rejected: usize,
}

/// One map pixel of a sweet-spot scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub f_d: f64,
    pub phi_ac_over_2pi: f64,
    /// GHz.
    pub eps01: f64,
    pub g0_phi: f64,
    pub t1: f64,
    pub t_phi: f64,
    pub flags: RateFlags,
}

pub fn scan_point(
    qubit: &Fluxonium,
    model: &NoiseModel,
    phi_dc_over_2pi: f64,
    phi_ac_over_2pi: f64,
    f_d: f64,
) -> Result<ScanPoint> {
    let tl = qubit.reduce(phi_ac_over_2pi, phi_dc_over_2pi, f_d)?;
    let sol = floquet_solve_monodromy(&tl)?;
    let d = dispersion_of(&sol)?;
    let rates = dynamical_rates(&filter_weights(&sol)?, model)?;
    Ok(ScanPoint {
        f_d,
        phi_ac_over_2pi,
        eps01: angular_to_ghz(d.eps01),
        g0_phi: d.d_bias,
        t1: rates.t1,
        t_phi: rates.t_phi,
        flags: rates.flags,
    })
}

/// T_φ and T1 over the region in row-major order (ac rows, frequency columns).
pub fn sweet_scan(
    qubit: &Fluxonium,
    model: &NoiseModel,
    phi_dc_over_2pi: f64,
    region: &Region,
) -> Result<Vec<Result<ScanPoint>>> {
    region.validate()?;
    model.validate()?;
    Ok((0..region.n_ac * region.n_f)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / region.n_f, idx % region.n_f);
            scan_point(
                qubit,
                model,
                phi_dc_over_2pi,
                region.ac_at(j),
                region.f_at(i),
            )
        })
        .collect())
}

/// Full sweet-point record at a drive point.
pub fn sweet_point(
    tl: &TwoLevelParams,
    kind: SweetKind,
    opts: &TraceOptions,
) -> Result<SweetPoint> {
    let prov = tl
        .provenance
        .ok_or_else(|| Error::invalid("sweet points need circuit provenance"))?;
    let sol = floquet_solve_monodromy(tl)?;
    let d = dispersion_of(&sol)?;
    let rates = match &opts.noise {
        Some(m) => Some(dynamical_rates(&filter_weights(&sol)?, m)?),
        None => None,
    };
    Ok(SweetPoint {
        phi_dc: prov.phi_dc,
        phi_ac: prov.phi_ac,
        f_d: angular_to_ghz(tl.omega_d),
        eps01: angular_to_ghz(d.eps01),
        kind,
        gap_flag: d.gap < opts.gap_threshold,
        gap: angular_to_ghz(d.gap),
        g0_phi: d.d_bias,
        d_amp: d.d_amp,
        dispersion_dc: d.d_bias * tl.bias_per_flux().unwrap_or(f64::NAN),
        dispersion_ac: d.d_amp * tl.amp_per_flux().unwrap_or(f64::NAN),
        unrefined: false,
        rates,
    })
}

/// Roots of `select(dispersion)` along a sampled line. A sign change whose
/// refined value still exceeds the tolerance is a label jump and is counted
/// in the second return value.
fn roots_along<P, S>(xs: &[f64], point: P, select: S, tol: f64) -> (Vec<f64>, usize)
where
    P: Fn(f64) -> Result<TwoLevelParams> + Sync,
    S: Fn(&Dispersion) -> f64 + Sync,
{
    let eval = |x: f64| -> Result<f64> { Ok(select(&dispersion(&point(x)?)?)) };
    let values: Vec<Option<f64>> = xs.iter().map(|&x| eval(x).ok()).collect();
    let mut roots = Vec::new();
    let mut rejected = 0;
    for i in 0..xs.len() - 1 {
        let (Some(a), Some(b)) = (values[i], values[i + 1]) else {
            continue;
        };
        if a == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if a.signum() == b.signum() || b == 0.0 {
            continue;
        }
        match brent(&eval, xs[i], xs[i + 1], 1e-13 * xs[i].abs().max(1e-3)) {
            Ok(x) if eval(x).map(|v| v.abs() < tol).unwrap_or(false) => roots.push(x),
            _ => rejected += 1,
        }
    }
    if let Some(Some(v)) = values.last() {
        if *v == 0.0 {
            roots.push(*xs.last().unwrap());
        }
    }
    (roots, rejected)
}

/// dc sweet-spot curves over the region at fixed φ_dc: roots of ∂ε_01/∂B along
/// the frequency axis of every ac row, linked across rows by nearest-neighbour
/// continuation.
pub fn trace_dc_manifold(
    qubit: &Fluxonium,
    phi_dc_over_2pi: f64,
    region: &Region,
    opts: &TraceOptions,
) -> Result<Trace> {
    region.validate()?;
    let omegas: Vec<f64> = (0..region.n_f)
        .map(|i| ghz_to_angular(region.f_at(i)))
        .collect();
    let base = qubit.reduce(0.0, phi_dc_over_2pi, 1.0)?;

    type Row = (Vec<(f64, SweetPoint)>, usize);
    let rows: Vec<Result<Row>> = (0..region.n_ac)
        .into_par_iter()
        .map(|j| {
            let amp = qubit.e_l() * TWO_PI * region.ac_at(j) * qubit.phi_ge();
            let at = |w: f64| Ok(with_drive(&base, amp, w));
            let (ws, rejected) = roots_along(&omegas, at, |d| d.d_bias, opts.tol);
            let mut points = Vec::with_capacity(ws.len());
            for w in ws {
                points.push((
                    w,
                    sweet_point(&with_drive(&base, amp, w), SweetKind::Dc, opts)?,
                ));
            }
            Ok((points, rejected))
        })
        .collect();

    let step = ghz_to_angular(region.f_step());
    let max_jump = opts.max_jump_cells as f64 * step * (1.0 + 1e-9);
    let mut curves: Vec<SweetCurve> = Vec::new();
    let mut cuts = Vec::new();
    let mut rejected = 0;
    let mut open: Vec<(usize, f64)> = Vec::new();
    for (j, row) in rows.into_iter().enumerate() {
        let (points, rej) = row?;
        rejected += rej;
        let mut next_open = Vec::new();
        let mut taken = vec![false; open.len()];
        for (w, p) in points {
            if p.gap_flag {
                cuts.push((j, p));
                continue;
            }
            let best = open
                .iter()
                .enumerate()
                .filter(|(c, (_, wl))| !taken[*c] && (w - wl).abs() <= max_jump)
                .min_by(|a, b| (w - a.1 .1).abs().total_cmp(&(w - b.1 .1).abs()))
                .map(|(c, (idx, _))| (c, *idx));
            let idx = match best {
                Some((c, idx)) => {
                    taken[c] = true;
                    idx
                }
                None => {
                    curves.push(SweetCurve {
                        rows: Vec::new(),
                        points: Vec::new(),
                    });
                    curves.len() - 1
                }
            };
            curves[idx].rows.push(j);
            curves[idx].points.push(p);
            next_open.push((idx, w));
        }
        open = next_open;
    }
    Ok(Trace {
        curves,
        cuts,
        rejected,
    })
}

fn with_drive(base: &TwoLevelParams, amp: f64, omega_d: f64) -> TwoLevelParams {
    base.with_amp(amp).with_omega(omega_d)
}

/// ac sweet points along the amplitude axis at fixed drive frequency.
pub fn find_ac_roots(
    qubit: &Fluxonium,
    phi_dc_over_2pi: f64,
    f_d: f64,
    ac_grid: &[f64],
    opts: &TraceOptions,
) -> Result<Vec<SweetPoint>> {
    if ac_grid.len() < 2 {
        return Err(Error::invalid("grids need at least two points"));
    }
    let base = qubit.reduce(0.0, phi_dc_over_2pi, f_d)?;
    let scale = qubit.e_l() * TWO_PI * qubit.phi_ge();
    let amps: Vec<f64> = ac_grid.iter().map(|a| a * scale).collect();
    let (roots, _) = roots_along(&amps, |a| Ok(base.with_amp(a)), |d| d.d_amp, opts.tol);
    roots
        .into_iter()
        .map(|a| sweet_point(&base.with_amp(a), SweetKind::Ac, opts))
        .collect()
}

/// Intersections of traced dc curves with the ac sweet condition, refined by a
/// Newton iteration on (∂ε_01/∂B, ∂ε_01/∂A) over (ω_d, A).
pub fn find_doubly_sweet(
    qubit: &Fluxonium,
    trace: &Trace,
    opts: &TraceOptions,
) -> Result<Vec<SweetPoint>> {
    let mut out = Vec::new();
    for curve in &trace.curves {
        for pair in curve.points.windows(2) {
            let (p, q) = (&pair[0], &pair[1]);
            if p.d_amp.signum() == q.d_amp.signum() {
                continue;
            }
            let s = p.d_amp / (p.d_amp - q.d_amp);
            let w0 = ghz_to_angular(p.f_d + s * (q.f_d - p.f_d));
            let phi_ac = p.phi_ac + s * (q.phi_ac - p.phi_ac);
            let base = qubit.reduce(phi_ac / TWO_PI, p.phi_dc / TWO_PI, angular_to_ghz(w0))?;
            out.push(refine_doubly(&base, opts)?);
        }
    }
    Ok(out)
}

fn refine_doubly(start: &TwoLevelParams, opts: &TraceOptions) -> Result<SweetPoint> {
    let residual = |tl: &TwoLevelParams| -> Result<[f64; 2]> {
        let d = dispersion(tl)?;
        Ok([d.d_bias, d.d_amp])
    };
    let mut tl = *start;
    let mut converged = false;
    for _ in 0..40 {
        let r = residual(&tl)?;
        if r[0].abs() < opts.tol && r[1].abs() < opts.tol {
            converged = true;
            break;
        }
        let hw = 1e-6 * tl.omega_d;
        let ha = 1e-6 * tl.amp.abs().max(1e-3);
        let rw_p = residual(&tl.with_omega(tl.omega_d + hw))?;
        let rw_m = residual(&tl.with_omega(tl.omega_d - hw))?;
        let ra_p = residual(&tl.with_amp(tl.amp + ha))?;
        let ra_m = residual(&tl.with_amp(tl.amp - ha))?;
        let j = [
            [
                (rw_p[0] - rw_m[0]) / (2.0 * hw),
                (ra_p[0] - ra_m[0]) / (2.0 * ha),
            ],
            [
                (rw_p[1] - rw_m[1]) / (2.0 * hw),
                (ra_p[1] - ra_m[1]) / (2.0 * ha),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let scale = (j[0][0].abs() + j[0][1].abs()) * (j[1][0].abs() + j[1][1].abs());
        if !(det.abs() > 1e-12 * scale) {
            break;
        }
        let dw = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let da = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        // keep the step inside a tenth of the current drive parameters
        let limit = 0.1;
        let shrink = (limit * tl.omega_d / dw.abs())
            .min(limit * tl.amp.abs().max(1e-3) / da.abs())
            .min(1.0);
        let next = tl
            .with_omega(tl.omega_d - shrink * dw)
            .with_amp(tl.amp - shrink * da);
        if !(next.omega_d > 0.0) {
            break;
        }
        tl = next;
    }
    let mut point = sweet_point(if converged { &tl } else { start }, SweetKind::Doubly, opts)?;
    point.unrefined = !converged;
    Ok(point)
}
