//! Random graph generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use pulsegraph::rfsoc::RfsocConfig;
use pulsegraph::schedule::ScheduleBuilder;
use pulsegraph::{Graph, Node, NodeId, Oscillator, Schedule, Tone};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Duration grid for the general generator: 2^-24 s, so every sum of
/// durations is exact and lands on the sampling grid below.
pub const UNIT: f64 = 1.0 / (1u64 << 24) as f64;
/// 16 samples per grid unit.
pub const GRID_RATE: f64 = (1u64 << 28) as f64;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Largest absolute sample difference; panics on a length mismatch.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "sample counts differ");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// general graphs on the dyadic grid
// ---------------------------------------------------------------------------

/// A valid graph with every node kind the sampler understands, nonzero
/// total duration and no variables.
pub fn random_graph(rng: &mut StdRng) -> (Graph, NodeId) {
    let mut g = Graph::new();
    let units = rng.gen_range(1..=8);
    let root = waveform(&mut g, rng, units, 3);
    (g, root)
}

fn waveform(g: &mut Graph, rng: &mut StdRng, units: u32, depth: u32) -> NodeId {
    let d = units as f64 * UNIT;
    let kinds = if depth == 0 { 5 } else { 8 };
    match rng.gen_range(0..kinds) {
        0 => {
            let v = scalar(g, rng);
            g.constant(v, d)
        }
        1 => g.zero(d),
        2 => oscillator(g, rng, units),
        3 => {
            // coefficients scaled so each term stays of order one
            let n = rng.gen_range(1..=3);
            let coeffs: Vec<f64> = (0..n)
                .map(|i| rng.gen_range(-1.0..1.0) / d.max(UNIT).powi(i))
                .collect();
            g.poly(coeffs, d)
        }
        4 => {
            let amplitude = scalar(g, rng);
            let span = d.max(UNIT);
            g.gauss(amplitude, span * rng.gen_range(0.0..1.0), span * rng.gen_range(0.1..0.5), d)
        }
        5 => {
            let n = rng.gen_range(2..=3);
            let mut ops: Vec<NodeId> = (0..n).map(|_| waveform(g, rng, units, depth - 1)).collect();
            if rng.gen_bool(0.3) {
                let s = scalar(g, rng);
                ops.insert(rng.gen_range(0..=ops.len()), s);
            }
            g.sum(ops)
        }
        6 => {
            let w = waveform(g, rng, units, depth - 1);
            let mut ops = vec![w];
            for _ in 0..rng.gen_range(1..=2) {
                let op = if rng.gen_bool(0.7) {
                    scalar(g, rng)
                } else {
                    waveform(g, rng, units, depth - 1)
                };
                ops.insert(rng.gen_range(0..=ops.len()), op);
            }
            g.product(ops)
        }
        _ => {
            let parts = split(rng, units, true);
            let children: Vec<NodeId> = parts.into_iter().map(|u| waveform(g, rng, u, depth - 1)).collect();
            g.sequence(children)
        }
    }
}

/// A literal or a small constant expression over literals.
fn scalar(g: &mut Graph, rng: &mut StdRng) -> NodeId {
    match rng.gen_range(0..4) {
        0 => {
            let a = g.num(rng.gen_range(-2.0..2.0));
            let b = g.num(rng.gen_range(-2.0..2.0));
            g.sum([a, b])
        }
        1 => {
            let a = g.num(rng.gen_range(-2.0..2.0));
            let b = g.num(rng.gen_range(0.25..2.0));
            g.product([a, b])
        }
        // a small value set so sequences see repeated neighbours
        2 => g.num([0.0, 0.5, 1.0][rng.gen_range(0..3)]),
        _ => g.num(rng.gen_range(-2.0..2.0)),
    }
}

/// Splits `units` into 1-4 parts; zero-length parts only when `zeros`.
fn split(rng: &mut StdRng, units: u32, zeros: bool) -> Vec<u32> {
    let n = rng.gen_range(1..=4);
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(0..=units)).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(n);
    let mut prev = 0;
    for c in cuts.into_iter().chain([units]) {
        parts.push(c - prev);
        prev = c;
    }
    if !zeros {
        parts.retain(|&p| p > 0);
    }
    if parts.is_empty() {
        parts.push(units);
    }
    parts
}

fn oscillator(g: &mut Graph, rng: &mut StdRng, units: u32) -> NodeId {
    let d = units as f64 * UNIT;
    let frequency = if units > 0 && rng.gen_bool(0.3) {
        let parts = split(rng, units, true);
        let segments: Vec<(f64, f64)> = parts
            .into_iter()
            .map(|u| (rng.gen_range(0.0..20e6), u as f64 * UNIT))
            .collect();
        g.steps(&segments)
    } else {
        g.num(rng.gen_range(0.0..20e6))
    };
    let phase = if rng.gen_bool(0.2) {
        let a = g.num(rng.gen_range(-PI..PI));
        let b = g.num(rng.gen_range(-PI..PI));
        g.sum([a, b])
    } else {
        g.num(rng.gen_range(-PI..PI))
    };
    let duration = g.num(d);
    match rng.gen_range(0..3) {
        0 => g.cosine(frequency, phase, duration),
        1 => {
            let clock = g.clock("main");
            g.sine_clocked(frequency, phase, duration, clock)
        }
        _ => g.sine(frequency, phase, duration),
    }
}

// ---------------------------------------------------------------------------
// AD9910 template graphs (integer nanosecond durations)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepped {
    None,
    Frequency,
    Phase,
    Amplitude,
}

#[derive(Debug, Clone)]
pub struct TemplateSpec {
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
    pub amplitude: Option<Vec<f64>>,
    /// Step lengths in ns; one entry when nothing is stepped.
    pub steps_ns: Vec<u32>,
    pub stepped: Stepped,
    pub clocked: bool,
    pub cosine: bool,
}

impl TemplateSpec {
    pub fn duration(&self) -> f64 {
        self.steps_ns.iter().sum::<u32>() as f64 * 1e-9
    }

    /// Draws an in-range template. Unclocked graphs never step the
    /// frequency.
    pub fn random(rng: &mut StdRng, max_ns: u32) -> Self {
        let total = rng.gen_range(1..=max_ns);
        let clocked = rng.gen_bool(0.5);
        let stepped = match rng.gen_range(0..4) {
            0 => Stepped::None,
            1 if clocked => Stepped::Frequency,
            1 => Stepped::None,
            2 => Stepped::Phase,
            _ => Stepped::Amplitude,
        };
        let steps_ns = if stepped == Stepped::None || total < 2 {
            vec![total]
        } else {
            let n = rng.gen_range(2..=4u32.min(total));
            let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(1..total)).collect();
            cuts.sort_unstable();
            cuts.dedup();
            let mut prev = 0;
            cuts.into_iter()
                .chain([total])
                .map(|c| {
                    let p = c - prev;
                    prev = c;
                    p
                })
                .collect()
        };
        let stepped = if steps_ns.len() < 2 { Stepped::None } else { stepped };
        let n = steps_ns.len();
        let values = |rng: &mut StdRng, k: Stepped, lo: f64, hi: f64| -> Vec<f64> {
            let count = if stepped == k { n } else { 1 };
            (0..count).map(|_| rng.gen_range(lo..hi)).collect()
        };
        let frequency = values(rng, Stepped::Frequency, 0.0, 400e6);
        let phase = values(rng, Stepped::Phase, -PI, PI);
        let amplitude = if stepped == Stepped::Amplitude || rng.gen_bool(0.8) {
            Some(values(rng, Stepped::Amplitude, -1.0, 1.0))
        } else {
            None
        };
        TemplateSpec {
            frequency,
            phase,
            amplitude,
            steps_ns,
            stepped,
            clocked,
            cosine: rng.gen_bool(0.2),
        }
    }

    pub fn build(&self, g: &mut Graph) -> NodeId {
        let d = self.duration();
        let frequency = self.param(g, &self.frequency);
        let phase = self.param(g, &self.phase);
        let sine = match (self.cosine, self.clocked) {
            (true, false) => g.cosine(frequency, phase, d),
            (true, true) => {
                let osc = Oscillator {
                    frequency,
                    phase,
                    duration: g.num(d),
                    clock: Some(g.clock("main")),
                };
                g.add(Node::Cosine(osc))
            }
            (false, true) => {
                let clock = g.clock("main");
                g.sine_clocked(frequency, phase, d, clock)
            }
            (false, false) => g.sine(frequency, phase, d),
        };
        match &self.amplitude {
            None => sine,
            Some(a) => {
                let amp = self.param(g, a);
                if a.len() == 1 && a[0] > 0.0 {
                    g.product([sine, amp])
                } else {
                    g.product([amp, sine])
                }
            }
        }
    }

    fn param(&self, g: &mut Graph, values: &[f64]) -> NodeId {
        if values.len() == 1 {
            return g.num(values[0]);
        }
        let segments: Vec<(f64, f64)> = values
            .iter()
            .zip(&self.steps_ns)
            .map(|(&v, &ns)| (v, ns as f64 * 1e-9))
            .collect();
        g.steps(&segments)
    }
}

// ---------------------------------------------------------------------------
// RFSoC base graphs and their hand-built channel equivalents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ToneSpec {
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
    /// `None` leaves the base operand unscaled.
    pub amplitude: Option<Vec<f64>>,
    pub clocked: bool,
}

#[derive(Debug, Clone)]
pub struct BasePair {
    pub tones: Vec<ToneSpec>,
    /// Equal step width in ns and number of steps.
    pub width_ns: u32,
    pub steps: usize,
}

impl BasePair {
    pub fn random(rng: &mut StdRng) -> Self {
        let steps = rng.gen_range(1..=4);
        let width_ns = rng.gen_range(1..=500);
        let count = rng.gen_range(1..=2);
        let param = |rng: &mut StdRng, lo: f64, hi: f64| -> Vec<f64> {
            let n = if steps > 1 && rng.gen_bool(0.4) { steps } else { 1 };
            (0..n).map(|_| rng.gen_range(lo..hi)).collect()
        };
        let tones = (0..count)
            .map(|_| ToneSpec {
                frequency: param(rng, 0.0, 500e6),
                phase: param(rng, -PI, PI),
                amplitude: if rng.gen_bool(0.8) { Some(param(rng, -1.0, 1.0)) } else { None },
                clocked: rng.gen_bool(0.3),
            })
            .collect();
        BasePair { tones, width_ns, steps }
    }

    pub fn duration(&self) -> f64 {
        (self.width_ns as usize * self.steps) as f64 * 1e-9
    }

    fn step_param(&self, g: &mut Graph, values: &[f64]) -> NodeId {
        if values.len() == 1 {
            return g.num(values[0]);
        }
        let w = self.width_ns as f64 * 1e-9;
        let segments: Vec<(f64, f64)> = values.iter().map(|&v| (v, w)).collect();
        g.steps(&segments)
    }

    /// A sum of up to two AD9910-style operands.
    pub fn base(&self) -> (Graph, NodeId) {
        let mut g = Graph::new();
        let d = self.duration();
        let ops: Vec<NodeId> = self
            .tones
            .iter()
            .map(|t| {
                let f = self.step_param(&mut g, &t.frequency);
                let p = self.step_param(&mut g, &t.phase);
                let sine = if t.clocked {
                    let c = g.clock("main");
                    g.sine_clocked(f, p, d, c)
                } else {
                    g.sine(f, p, d)
                };
                match &t.amplitude {
                    Some(a) => {
                        let a = self.step_param(&mut g, a);
                        g.product([a, sine])
                    }
                    None => sine,
                }
            })
            .collect();
        let root = if ops.len() == 1 { ops[0] } else { g.sum(ops) };
        (g, root)
    }

    /// The explicit channel pulse the base graph stands for.
    pub fn channel(&self) -> (Graph, NodeId) {
        let mut g = Graph::new();
        let param = |g: &mut Graph, values: &[f64]| {
            if values.len() == 1 {
                g.num(values[0])
            } else {
                g.discrete(values.to_vec())
            }
        };
        let mut tones: Vec<NodeId> = self
            .tones
            .iter()
            .map(|t| {
                let frequency = param(&mut g, &t.frequency);
                let phase = param(&mut g, &t.phase);
                let amplitude = match &t.amplitude {
                    Some(a) => param(&mut g, a),
                    None => g.num(1.0),
                };
                g.tone(Tone {
                    frequency,
                    phase,
                    amplitude,
                    sync_phase: t.clocked,
                    frame_index: None,
                    feedback_enable: false,
                })
            })
            .collect();
        if tones.len() == 1 {
            tones.push(g.plain_tone(0.0, 0.0, 0.0));
        }
        let f0 = g.idle_frame(0.0);
        let f1 = g.idle_frame(0.0);
        let root = g.channel([tones[0], tones[1]], [f0, f1], self.duration());
        (g, root)
    }
}

// ---------------------------------------------------------------------------
// schedules
// ---------------------------------------------------------------------------

pub const CHANNELS: [&str; 3] = ["a", "b", "c"];

pub fn channel_map() -> std::collections::BTreeMap<String, usize> {
    CHANNELS.iter().enumerate().map(|(i, c)| (c.to_string(), i)).collect()
}

/// A random nest of contexts playing fixed-length channel pulses. Parallel
/// contexts hand each item a disjoint share of the available channels.
pub fn random_schedule(rng: &mut StdRng) -> Schedule {
    let mut b = ScheduleBuilder::with_channels(CHANNELS).unwrap();
    b.open_sequential();
    let n = rng.gen_range(1..=4);
    for _ in 0..n {
        block(&mut b, rng, &CHANNELS, 2);
    }
    b.close().unwrap();
    b.finalize().unwrap()
}

fn block(b: &mut ScheduleBuilder, rng: &mut StdRng, channels: &[&str], depth: u32) {
    match if depth == 0 { 0 } else { rng.gen_range(0..3) } {
        0 => {
            let ch = channels[rng.gen_range(0..channels.len())];
            let pulse = pulse(b.graph_mut(), rng);
            b.play(ch, pulse).unwrap();
        }
        1 => {
            b.open_sequential();
            for _ in 0..rng.gen_range(1..=3) {
                block(b, rng, channels, depth - 1);
            }
            b.close().unwrap();
        }
        _ => {
            b.open_parallel();
            let mut pool: Vec<&str> = channels.to_vec();
            while !pool.is_empty() && rng.gen_bool(0.7) {
                let take = rng.gen_range(1..=pool.len());
                let share: Vec<&str> = pool.drain(..take).collect();
                block(b, rng, &share, depth - 1);
            }
            b.close().unwrap();
        }
    }
}

/// A channel pulse of 1-20 grid units.
pub fn pulse(g: &mut Graph, rng: &mut StdRng) -> NodeId {
    let d = rng.gen_range(1..=20) as f64 * UNIT;
    let t0 = g.plain_tone(rng.gen_range(0.0..100e6), rng.gen_range(-PI..PI), rng.gen_range(-1.0..1.0));
    let t1 = g.plain_tone(0.0, 0.0, 0.0);
    let f0 = g.idle_frame(0.0);
    let f1 = g.idle_frame(0.0);
    g.channel([t0, t1], [f0, f1], d)
}

pub fn rfsoc_config() -> RfsocConfig {
    RfsocConfig::default()
}
