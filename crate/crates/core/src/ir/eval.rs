//! Reference sampler: the pointwise meaning of every pulse graph.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::{self, Write};

use super::{durations_match, Graph, Node, NodeId, Oscillator};
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::json::format_f64;

/// Uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl SampledWaveform {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Self {
        SampledWaveform {
            sample_rate,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate
    }

    /// `time_seconds,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_seconds,value")?;
        for (k, v) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", format_f64(self.time(k)), format_f64(*v))?;
        }
        Ok(())
    }
}

impl Graph {
    /// Value of `root` at local time `t`; `global_t` drives clocked oscillators.
    pub fn evaluate_at(&self, root: NodeId, t: f64, global_t: f64) -> Result<f64> {
        let duration = self.duration(root)?;
        if self.is_waveform(root) && !(t >= 0.0 && t < duration) {
            return Err(Error::OutOfRange { t, duration });
        }
        self.eval(root, t, global_t, duration)
    }

    pub fn sample(&self, root: NodeId, sample_rate: f64) -> Result<SampledWaveform> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::BadSampleRate(sample_rate));
        }
        let duration = self.duration(root)?;
        let n = (duration * sample_rate).round() as usize;
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 / sample_rate;
                self.eval(root, t, t, duration)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledWaveform::new(sample_rate, samples))
    }

    /// `span` is the duration of the innermost enclosing waveform; step and
    /// spline parameters are stretched over it.
    fn eval(&self, id: NodeId, t: f64, gt: f64, span: f64) -> Result<f64> {
        let node = self.get(id).ok_or(Error::DanglingRef(id))?;
        match node {
            Node::Num(v) => Ok(*v),
            Node::Var { name, bound } => bound.ok_or_else(|| Error::UnboundVar(name.clone())),
            Node::Const { value, duration } => {
                let d = self.scalar(*duration)?;
                self.eval(*value, t, gt, d)
            }
            Node::Zero { .. } | Node::Clock(_) => Ok(0.0),
            Node::Sine(o) => self.oscillate(o, t, gt, 0.0),
            Node::Cosine(o) => self.oscillate(o, t, gt, FRAC_PI_2),
            Node::Poly {
                coefficients,
                duration,
            } => {
                let d = self.scalar(*duration)?;
                let mut acc = 0.0;
                for c in coefficients.iter().rev() {
                    acc = acc * t + self.eval(*c, t, gt, d)?;
                }
                Ok(acc)
            }
            Node::Gauss {
                amplitude,
                mean,
                sigma,
                duration,
            } => {
                let d = self.scalar(*duration)?;
                let a = self.eval(*amplitude, t, gt, d)?;
                let x = t - mean;
                Ok(a * (-(x * x) / (2.0 * sigma * sigma)).exp())
            }
            Node::Sum(ops) => self.combine(ops, t, gt, span, |a, b| a + b),
            Node::Product(ops) => self.combine(ops, t, gt, span, |a, b| a * b),
            Node::Sequence(children) => {
                let mut start = 0.0;
                let mut last = None;
                for &c in children {
                    let d = self.duration(c)?;
                    if d > 0.0 {
                        // a time within round-off of a boundary belongs to the next child
                        let end = start + d;
                        if t < end && !durations_match(t, end) {
                            return self.eval(c, t - start, gt, d);
                        }
                        last = Some((c, start, d));
                    }
                    start += d;
                }
                match last {
                    // round-off at the very end of the sequence
                    Some((c, s, d)) if t - start <= 1e-9 * start.abs() => {
                        self.eval(c, t - s, gt, d)
                    }
                    _ => Err(Error::OutOfRange { t, duration: start }),
                }
            }
            Node::Spline(knots) => Ok(Curve::spline(knots.clone()).value_at(t, span)),
            Node::Discrete(steps) => Ok(Curve::steps(steps.clone()).value_at(t, span)),
            Node::Channel(c) => {
                if c.tones.len() != 2 || c.frames.len() != 2 {
                    return Err(Error::ArityError {
                        tones: c.tones.len(),
                        frames: c.frames.len(),
                    });
                }
                let d = self.scalar(c.duration)?;
                let mut total = 0.0;
                for &tone_id in &c.tones {
                    let Node::Tone(tone) = self.node(tone_id) else {
                        return Err(Error::NotScalar {
                            node: tone_id,
                            kind: self.node(tone_id).kind(),
                        });
                    };
                    let amp = self.eval(tone.amplitude, t, gt, d)?;
                    let phase = self.eval(tone.phase, t, gt, d)?;
                    let mut cycles = self.integrate(tone.frequency, t, d)?;
                    if tone.sync_phase {
                        cycles += self.eval(tone.frequency, 0.0, gt - t, d)? * (gt - t);
                    }
                    let frame = match tone.frame_index {
                        Some(k) => self.initial_frame(c.frames[k as usize], d)?,
                        None => 0.0,
                    };
                    total += amp * (TAU * (cycles - cycles.floor()) + phase + frame).sin();
                }
                Ok(total)
            }
            Node::Tone(_) | Node::Framerot(_) => Err(Error::NotScalar {
                node: id,
                kind: node.kind(),
            }),
        }
    }

    fn oscillate(&self, o: &Oscillator, t: f64, gt: f64, lead: f64) -> Result<f64> {
        let d = self.scalar(o.duration)?;
        let phase = self.eval(o.phase, t, gt, d)?;
        let cycles = if o.clock.is_some() {
            // phase-continuous: the clock has been running since global time 0,
            // at the pulse's initial frequency before the pulse starts
            let before = gt - t;
            let f0 = self.eval(o.frequency, 0.0, before, d)?;
            f0 * before + self.integrate(o.frequency, t, d)?
        } else {
            self.eval(o.frequency, t, gt, d)? * t
        };
        let phase = if lead != 0.0 { phase + lead } else { phase };
        Ok((TAU * (cycles - cycles.floor()) + phase).sin())
    }

    /// Literal constants are combined first, then the remaining operands in
    /// order. Constant folding relies on this order to preserve samples exactly.
    fn combine(
        &self,
        ops: &[NodeId],
        t: f64,
        gt: f64,
        span: f64,
        op: fn(f64, f64) -> f64,
    ) -> Result<f64> {
        let mut acc: Option<f64> = None;
        for &o in ops.iter().filter(|o| self.is_constant(**o)) {
            let v = self.scalar(o)?;
            acc = Some(acc.map_or(v, |a| op(a, v)));
        }
        for &o in ops.iter().filter(|o| !self.is_constant(**o)) {
            let v = self.eval(o, t, gt, span)?;
            acc = Some(acc.map_or(v, |a| op(a, v)));
        }
        Ok(acc.unwrap_or(0.0))
    }

    fn initial_frame(&self, frame: NodeId, span: f64) -> Result<f64> {
        match self.node(frame) {
            Node::Framerot(f) if f.apply_at_start => self.eval(f.rotation, 0.0, 0.0, span),
            Node::Framerot(_) => Ok(0.0),
            other => Err(Error::NotScalar {
                node: frame,
                kind: other.kind(),
            }),
        }
    }

    /// Integral of a parameter over `[0, t]` of its local timeline, computed
    /// piecewise-analytically.
    pub fn integrate(&self, id: NodeId, t: f64, span: f64) -> Result<f64> {
        let node = self.get(id).ok_or(Error::DanglingRef(id))?;
        let not_integrable = || Error::NotIntegrable {
            node: id,
            kind: node.kind(),
        };
        match node {
            Node::Num(_) | Node::Var { .. } => Ok(self.scalar(id)? * t),
            Node::Const { value, .. } => Ok(self.scalar(*value)? * t),
            Node::Zero { .. } => Ok(0.0),
            Node::Sequence(children) => {
                let mut acc = 0.0;
                let mut start = 0.0;
                for &c in children {
                    if t <= start {
                        break;
                    }
                    let d = self.duration(c)?;
                    let local = (t - start).min(d);
                    acc += self.integrate(c, local, d)?;
                    start += d;
                }
                Ok(acc)
            }
            Node::Spline(knots) => Ok(Curve::spline(knots.clone()).integral(t, span)),
            Node::Discrete(steps) => Ok(Curve::steps(steps.clone()).integral(t, span)),
            Node::Sum(ops) => {
                if let Ok(v) = self.scalar(id) {
                    return Ok(v * t);
                }
                let mut acc = 0.0;
                for &o in ops {
                    acc += self.integrate(o, t, span)?;
                }
                Ok(acc)
            }
            Node::Product(ops) => {
                if let Ok(v) = self.scalar(id) {
                    return Ok(v * t);
                }
                let mut factor = 1.0;
                let mut varying = None;
                for &o in ops {
                    match self.scalar(o) {
                        Ok(v) => factor *= v,
                        Err(_) if varying.is_none() => varying = Some(o),
                        Err(_) => return Err(not_integrable()),
                    }
                }
                let o = varying.ok_or_else(not_integrable)?;
                Ok(factor * self.integrate(o, t, span)?)
            }
            Node::Poly { coefficients, .. } => {
                let mut acc = 0.0;
                let mut power = t;
                for (i, c) in coefficients.iter().enumerate() {
                    acc += self.scalar(*c)? * power / (i + 1) as f64;
                    power *= t;
                }
                Ok(acc)
            }
            _ => Err(not_integrable()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::ramp_graph;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unclocked_sine_starts_at_zero() {
        let mut g = Graph::new();
        let s = g.sine(10e6, 0.0, 1e-6);
        assert_eq!(g.evaluate_at(s, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn scaled_sine_at_quarter_phase() {
        let mut g = Graph::new();
        let s = g.sine(10e6, PI / 2.0, 1e-6);
        let half = g.num(0.5);
        let p = g.product([half, s]);
        assert_eq!(g.evaluate_at(p, 0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn sequence_relocalizes_time() {
        let mut g = Graph::new();
        let seq = g.steps(&[(1.0, 1e-6), (0.25, 1e-6)]);
        // piecewise oracle: the second segment starts at 1 us
        assert_eq!(g.evaluate_at(seq, 1e-6 + 1e-12, 1e-6).unwrap(), 0.25);
        assert_eq!(g.evaluate_at(seq, 1e-6 - 1e-12, 1e-6).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_and_unbound() {
        let mut g = Graph::new();
        let z = g.zero(1e-6);
        assert!(matches!(g.evaluate_at(z, 1e-6, 0.0), Err(Error::OutOfRange { .. })));
        let a = g.var("a");
        let s = g.sine(1e6, 0.0, 1e-6);
        let p = g.product([a, s]);
        assert_eq!(g.evaluate_at(p, 0.0, 0.0), Err(Error::UnboundVar("a".into())));
    }

    #[test]
    fn zero_samples() {
        let mut g = Graph::new();
        let z = g.zero(1e-6);
        let w = g.sample(z, 10e6).unwrap();
        assert_eq!(w.samples, vec![0.0; 10]);
    }

    #[test]
    fn one_megahertz_at_eight_samples_per_cycle() {
        let mut g = Graph::new();
        let s = g.sine(1e6, 0.0, 1e-6);
        let w = g.sample(s, 8e6).unwrap();
        // closed form sin(2 pi k / 8), checked with an independent mpmath script
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [0.0, r, 1.0, r, 0.0, -r, -1.0, -r];
        assert_eq!(w.len(), 8);
        for (a, b) in w.samples.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn ramp_has_rise_hold_fall_envelope() {
        let mut g = Graph::new();
        let root = ramp_graph(&mut g, 1e-6, 3e-6, 1e-6);
        let w = g.sample(root, 1e9).unwrap();
        assert_eq!(w.len(), 5000);
        let peak = |range: std::ops::Range<usize>| {
            w.samples[range].iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        // rising envelope
        assert!(peak(0..100) < 0.11);
        assert!(peak(900..1000) > 0.9);
        // flat top of a 10 MHz carrier
        assert!((peak(1000..4000) - 1.0).abs() < 1e-3);
        // falling envelope
        assert!(peak(4900..5000) < 0.11);
    }

    #[test]
    fn clocked_sine_is_phase_continuous_across_sequence() {
        let mut g = Graph::new();
        let clk = g.clock("main");
        let a = g.sine_clocked(1e6, 0.0, 1e-6, clk);
        let b = g.sine_clocked(1e6, 0.0, 1e-6, clk);
        let seq = g.sequence([a, b]);
        let clocked = g.sample(seq, 64e6).unwrap();
        let single = g.sine(1e6, 0.0, 2e-6);
        let reference = g.sample(single, 64e6).unwrap();
        for (x, y) in clocked.samples.iter().zip(&reference.samples) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn clocked_step_frequency_integrates_phase() {
        let mut g = Graph::new();
        let clk = g.clock("c");
        let f = g.steps(&[(1e6, 1e-6), (2e6, 1e-6)]);
        let s = g.sine_clocked(f, 0.0, 2e-6, clk);
        // at t = 1.5 us the phase is 2 pi (1e6 * 1e-6 + 2e6 * 0.5e-6) = 2 pi * 2
        let v = g.evaluate_at(s, 1.5e-6, 1.5e-6).unwrap();
        assert!(v.abs() < 1e-9);
        let v = g.evaluate_at(s, 1.125e-6, 1.125e-6).unwrap();
        // 1 + 0.25 cycles
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn poly_and_gauss() {
        let mut g = Graph::new();
        let p = g.poly([1.0, 2.0, 3.0], 1.0);
        assert_eq!(g.evaluate_at(p, 0.5, 0.5).unwrap(), 1.0 + 1.0 + 0.75);
        let ga = g.gauss(2.0, 0.5, 0.1, 1.0);
        assert_eq!(g.evaluate_at(ga, 0.5, 0.5).unwrap(), 2.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let w = SampledWaveform::new(1e6, vec![0.0, 0.5]);
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "time_seconds,value\n0.0,0.0\n9.9999999999999995e-07,0.5\n");
    }
}
