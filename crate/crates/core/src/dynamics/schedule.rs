use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    /// (1 − cos πs)/2.
    #[default]
    Cosine,
    Linear,
}

impl RampShape {
    /// Ramp profile on s ∈ [0, 1].
    pub fn value(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            RampShape::Cosine => 0.5 * (1.0 - (PI * s).cos()),
            RampShape::Linear => s,
        }
    }

    /// ∫_0^s value.
    fn integral(self, s: f64) -> f64 {
        match self {
            RampShape::Cosine => 0.5 * s - (PI * s).sin() / (2.0 * PI),
            RampShape::Linear => 0.5 * s * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Rabi,
    Phase,
    RampDown,
    TwoQubit,
    #[default]
    Custom,
}

/// Extra flux tone d(t) cos(ω′t + φ) σ_z with a flat-top envelope whose
/// cosine edges each take `ramp_fraction` of the segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondaryTone {
    /// Peak amplitude d in rad/ns.
    pub amplitude: f64,
    /// Carrier ω′ in rad/ns.
    pub omega: f64,
    pub phase: f64,
    pub ramp_fraction: f64,
}

impl SecondaryTone {
    pub fn new(amplitude: f64, omega: f64, phase: f64) -> Self {
        Self {
            amplitude,
            omega,
            phase,
            ramp_fraction: 0.1,
        }
    }

    pub fn envelope(&self, tau: f64, duration: f64) -> f64 {
        let edge = self.ramp_fraction * duration;
        if tau < 0.0 || tau > duration {
            0.0
        } else if edge <= 0.0 {
            1.0
        } else if tau < edge {
            RampShape::Cosine.value(tau / edge)
        } else if tau > duration - edge {
            RampShape::Cosine.value((duration - tau) / edge)
        } else {
            1.0
        }
    }

    /// ∫ envelope over the segment.
    pub fn area(&self, duration: f64) -> f64 {
        duration * (1.0 - self.ramp_fraction.clamp(0.0, 0.5))
    }
}

/// Drive amplitude and frequency ramped from the start to the end value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// ns.
    pub duration: f64,
    /// A at the start and end, rad/ns.
    pub amp: (f64, f64),
    /// ω_d at the start and end, rad/ns.
    pub omega: (f64, f64),
    pub tone: Option<SecondaryTone>,
}

impl Segment {
    pub fn hold(duration: f64, amp: f64, omega: f64) -> Self {
        Self {
            duration,
            amp: (amp, amp),
            omega: (omega, omega),
            tone: None,
        }
    }

    pub fn ramp(duration: f64, amp: (f64, f64), omega: (f64, f64)) -> Self {
        Self {
            duration,
            amp,
            omega,
            tone: None,
        }
    }
}

/// Instantaneous drive parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub amp: f64,
    pub omega: f64,
    /// Accumulated drive phase ∫ω_d dt.
    pub phase: f64,
    /// Secondary-tone term multiplying σ_z.
    pub tone: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
    pub ramp_shape: RampShape,
    pub protocol: Protocol,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>, protocol: Protocol) -> Self {
        Self {
            segments,
            ramp_shape: RampShape::Cosine,
            protocol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::invalid("schedule has no segments"));
        }
        for s in &self.segments {
            let finite = [s.duration, s.amp.0, s.amp.1, s.omega.0, s.omega.1]
                .iter()
                .all(|x| x.is_finite());
            if !finite || s.duration < 0.0 {
                return Err(Error::invalid(
                    "segment durations must be non-negative and all values finite",
                ));
            }
            if !(s.omega.0 > 0.0 && s.omega.1 > 0.0) {
                return Err(Error::invalid("drive frequencies must be positive"));
            }
            if let Some(t) = &s.tone {
                if !(t.amplitude.is_finite()
                    && t.omega.is_finite()
                    && (0.0..=0.5).contains(&t.ramp_fraction))
                {
                    return Err(Error::invalid(
                        "secondary tone needs finite values and ramp_fraction in [0, 0.5]",
                    ));
                }
            }
        }
        for w in self.segments.windows(2) {
            let tol = 1e-12 * (1.0 + w[0].amp.1.abs() + w[0].omega.1.abs());
            if (w[0].amp.1 - w[1].amp.0).abs() > tol || (w[0].omega.1 - w[1].omega.0).abs() > tol {
                return Err(Error::invalid(
                    "drive amplitude and frequency must be continuous across segments",
                ));
            }
        }
        if !(self.duration() > 0.0) {
            return Err(Error::invalid("schedule duration must be positive"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Drive parameters at time t, clamped to the schedule.
    pub fn sample(&self, t: f64) -> DriveSample {
        let mut start = 0.0;
        let mut phase = 0.0;
        let last = self.segments.len() - 1;
        for (i, s) in self.segments.iter().enumerate() {
            let end = start + s.duration;
            if t < end || i == last {
                let tau = (t - start).clamp(0.0, s.duration);
                return self.within(s, tau, start, phase);
            }
            phase += self.segment_phase(s, s.duration);
            start = end;
        }
        unreachable!("schedule has at least one segment")
    }

    fn within(&self, s: &Segment, tau: f64, start: f64, phase0: f64) -> DriveSample {
        let frac = if s.duration > 0.0 {
            tau / s.duration
        } else {
            1.0
        };
        let shape = self.ramp_shape.value(frac);
        let tone = s.tone.map_or(0.0, |tn| {
            tn.amplitude
                * tn.envelope(tau, s.duration)
                * (tn.omega * (start + tau) + tn.phase).cos()
        });
        DriveSample {
            amp: s.amp.0 + (s.amp.1 - s.amp.0) * shape,
            omega: s.omega.0 + (s.omega.1 - s.omega.0) * shape,
            phase: phase0 + self.segment_phase(s, tau),
            tone,
        }
    }

    fn segment_phase(&self, s: &Segment, tau: f64) -> f64 {
        if s.duration == 0.0 {
            return 0.0;
        }
        let frac = (tau / s.duration).clamp(0.0, 1.0);
        s.omega.0 * tau + (s.omega.1 - s.omega.0) * s.duration * self.ramp_shape.integral(frac)
    }

    /// Segment boundaries, useful as integrator stops.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_integrates_frequency() {
        let sched = PulseSchedule::new(
            vec![
                Segment::hold(3.0, 0.5, 2.0),
                Segment::ramp(4.0, (0.5, 0.1), (2.0, 3.0)),
                Segment::hold(1.0, 0.1, 3.0),
            ],
            Protocol::Custom,
        );
        sched.validate().unwrap();
        let n = 200_000;
        let dt = sched.duration() / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            acc += sched.sample((i as f64 + 0.5) * dt).omega * dt;
        }
        assert!((acc - sched.sample(sched.duration()).phase).abs() < 1e-6);
        assert_eq!(sched.sample(7.0).amp, 0.1);
    }

    #[test]
    fn rejects_jumps() {
        let sched = PulseSchedule::new(
            vec![Segment::hold(1.0, 0.5, 2.0), Segment::hold(1.0, 0.6, 2.0)],
            Protocol::Custom,
        );
        assert!(sched.validate().is_err());
    }

    #[test]
    fn tone_area() {
        let tone = SecondaryTone::new(1.0, 0.0, 0.0);
        let n = 100_000;
        let dur = 40.0;
        let area: f64 = (0..n)
            .map(|i| tone.envelope((i as f64 + 0.5) * dur / n as f64, dur))
            .sum::<f64>()
            * dur
            / n as f64;
        assert!((area - tone.area(dur)).abs() < 1e-6);
    }
}
