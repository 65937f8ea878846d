//! Benchmark workloads: a tiled three-pulse unit schedule and a layered
//! schedule whose 8N pulse durations are rebound every trial. Both run on
//! the graph IR and on the flat baseline in [`direct`].

pub mod direct;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::error::Result;
use crate::ir::Graph;
use crate::rfsoc::{transpile_schedule_rfsoc, PulseDataRecord, RfsocConfig};
use crate::schedule::{Schedule, ScheduleBuilder};
use crate::transform::Bindings;
use direct::{direct_transpile, DirectPulse, DirectSchedule, DirectScheduleBuilder};

pub const WARMUP_TRIALS: usize = 10;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Unit pulses of the tiling workload: (frequency, amplitude, duration).
pub const SBC_PULSES: [(f64, f64, f64); 3] = [(200e6, 0.5, 10e-6), (210e6, 0.5, 50e-6), (205e6, 0.5, 10e-6)];
pub const SBC_CHANNEL: &str = "ch0";

pub const VQA_CHANNELS: usize = 8;
pub const VQA_CHANNEL_NAMES: [&str; VQA_CHANNELS] = ["ch0", "ch1", "ch2", "ch3", "ch4", "ch5", "ch6", "ch7"];
pub const VQA_AMPLITUDE: f64 = 0.5;
pub const VQA_DURATION_RANGE: (f64, f64) = (0.1e-6, 10e-6);

pub type Records = BTreeMap<String, Vec<PulseDataRecord>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ir {
    Graph,
    Direct,
}

impl fmt::Display for Ir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ir::Graph => "graph",
            Ir::Direct => "direct",
        })
    }
}

impl FromStr for Ir {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "graph" => Ok(Ir::Graph),
            "direct" => Ok(Ir::Direct),
            other => Err(format!("unknown IR `{other}` (expected graph or direct)")),
        }
    }
}

/// Timings of one phase across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub samples: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub stddev: f64,
    pub count: usize,
}

impl TrialStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let count = samples.len();
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = samples.iter().sum::<f64>() / count.max(1) as f64;
        let stddev = if count > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        TrialStats {
            samples,
            min,
            mean,
            stddev,
            count,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "min": self.min,
            "mean": self.mean,
            "stddev": self.stddev,
            "unit": "seconds",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub benchmark: &'static str,
    pub ir: Ir,
    pub depth: Option<usize>,
    pub trials: usize,
    pub phases: BTreeMap<&'static str, TrialStats>,
    pub counts: BTreeMap<&'static str, usize>,
}

impl BenchResult {
    pub fn to_json(&self) -> Value {
        let mut doc = json!({
            "benchmark": self.benchmark,
            "ir": self.ir.to_string(),
            "trials": self.trials,
            "phases": self.phases.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect::<serde_json::Map<_, _>>(),
            "counts": self.counts,
        });
        if let Some(d) = self.depth {
            doc["depth"] = json!(d);
        }
        doc
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn single_channel_map(name: &str) -> BTreeMap<String, usize> {
    BTreeMap::from([(name.to_string(), 0)])
}

fn record_count(records: &Records) -> usize {
    records.values().map(Vec::len).sum()
}

// ---------------------------------------------------------------------------
// tiling workload
// ---------------------------------------------------------------------------

pub fn sbc_unit_graph() -> Result<Schedule> {
    let mut b = ScheduleBuilder::with_channels([SBC_CHANNEL])?;
    b.sequential(|b| {
        for (f, a, d) in SBC_PULSES {
            let g = b.graph_mut();
            let sine = g.sine(f, 0.0, d);
            let amp = g.num(a);
            let pulse = g.product([amp, sine]);
            b.play(SBC_CHANNEL, pulse)?;
        }
        Ok(())
    })?;
    b.finalize()
}

pub fn sbc_unit_direct() -> Result<DirectSchedule> {
    let mut b = DirectScheduleBuilder::new();
    b.declare_channel(SBC_CHANNEL);
    b.open_sequential();
    for (f, a, d) in SBC_PULSES {
        b.play(SBC_CHANNEL, DirectPulse::single(f, 0.0, a, d))?;
    }
    b.close()?;
    b.finalize()
}

/// One trial of the tiling workload: records plus construct/tile/transpile times.
pub fn sbc_trial(ir: Ir, reps: usize, config: &RfsocConfig) -> Result<(Records, [f64; 3])> {
    let map = single_channel_map(SBC_CHANNEL);
    match ir {
        Ir::Graph => {
            let (unit, construct) = timed(sbc_unit_graph)?;
            let (full, tile) = timed(|| unit.tile(reps))?;
            let (records, transpile) = timed(|| transpile_schedule_rfsoc(&full, &map, config))?;
            Ok((records, [construct, tile, transpile]))
        }
        Ir::Direct => {
            let (unit, construct) = timed(sbc_unit_direct)?;
            let (full, tile) = timed(|| unit.tile(reps))?;
            let (records, transpile) = timed(|| direct_transpile(&full, &map, config))?;
            Ok((records, [construct, tile, transpile]))
        }
    }
}

pub fn run_sbc(ir: Ir, trials: usize, reps: usize) -> Result<BenchResult> {
    let config = RfsocConfig::default();
    for _ in 0..WARMUP_TRIALS {
        sbc_trial(ir, reps, &config)?;
    }
    let mut phases: [Vec<f64>; 3] = Default::default();
    let mut records = 0;
    for _ in 0..trials {
        let (out, times) = sbc_trial(ir, reps, &config)?;
        records = record_count(&out);
        for (p, t) in phases.iter_mut().zip(times) {
            p.push(t);
        }
    }
    let [construct, tile, transpile] = phases;
    Ok(BenchResult {
        benchmark: "sbc",
        ir,
        depth: None,
        trials,
        phases: BTreeMap::from([
            ("construct", TrialStats::from_samples(construct)),
            ("tile", TrialStats::from_samples(tile)),
            ("transpile", TrialStats::from_samples(transpile)),
        ]),
        counts: BTreeMap::from([("records", records), ("reps", reps)]),
    })
}

// ---------------------------------------------------------------------------
// parametrized workload
// ---------------------------------------------------------------------------

pub fn vqa_channel(c: usize) -> &'static str {
    VQA_CHANNEL_NAMES[c]
}

pub fn vqa_frequency(c: usize) -> f64 {
    200e6 + c as f64 * 1e6
}

pub fn vqa_variable(layer: usize, c: usize) -> String {
    format!("d{layer}_{c}")
}

pub fn vqa_channel_map() -> BTreeMap<String, usize> {
    (0..VQA_CHANNELS).map(|c| (vqa_channel(c).to_string(), c)).collect()
}

/// Durations for one trial, layer-major.
pub fn vqa_draw(depth: usize, rng: &mut StdRng) -> Vec<f64> {
    let (lo, hi) = VQA_DURATION_RANGE;
    (0..depth * VQA_CHANNELS).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Variable names in the same layer-major order as [`vqa_draw`].
pub fn vqa_variables(depth: usize) -> Vec<String> {
    (0..depth)
        .flat_map(|layer| (0..VQA_CHANNELS).map(move |c| vqa_variable(layer, c)))
        .collect()
}

pub fn vqa_bindings(names: &[String], durations: &[f64]) -> Bindings {
    names.iter().cloned().zip(durations.iter().copied()).collect()
}

/// Builds the layered schedule once, with every pulse duration a variable.
pub fn vqa_graph(depth: usize) -> Result<Schedule> {
    let mut b = ScheduleBuilder::with_channels(VQA_CHANNEL_NAMES)?;
    b.sequential(|b| {
        for layer in 0..depth {
            for (c, name) in VQA_CHANNEL_NAMES.into_iter().enumerate() {
                let g: &mut Graph = b.graph_mut();
                let d = g.var(&vqa_variable(layer, c));
                let t0 = g.plain_tone(vqa_frequency(c), 0.0, VQA_AMPLITUDE);
                let t1 = g.plain_tone(0.0, 0.0, 0.0);
                let f0 = g.idle_frame(0.0);
                let f1 = g.idle_frame(0.0);
                let pulse = g.channel([t0, t1], [f0, f1], d);
                b.play(name, pulse)?;
            }
        }
        Ok(())
    })?;
    b.finalize()
}

/// The same schedule with concrete durations.
pub fn vqa_direct(depth: usize, durations: &[f64]) -> Result<DirectSchedule> {
    let mut b = DirectScheduleBuilder::new();
    for c in 0..VQA_CHANNELS {
        b.declare_channel(vqa_channel(c));
    }
    b.open_sequential();
    for layer in 0..depth {
        for c in 0..VQA_CHANNELS {
            let d = durations[layer * VQA_CHANNELS + c];
            b.play(vqa_channel(c), DirectPulse::single(vqa_frequency(c), 0.0, VQA_AMPLITUDE, d))?;
        }
    }
    b.close()?;
    b.finalize()
}

pub fn run_vqa(ir: Ir, depth: usize, trials: usize, seed: u64) -> Result<BenchResult> {
    let config = RfsocConfig::default();
    let map = vqa_channel_map();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut update = Vec::with_capacity(trials);
    let mut transpile = Vec::with_capacity(trials);
    let mut total = Vec::with_capacity(trials);
    let mut counts = BTreeMap::from([("parameters", depth * VQA_CHANNELS)]);
    match ir {
        Ir::Graph => {
            let mut schedule = vqa_graph(depth)?;
            let names = vqa_variables(depth);
            let nodes = schedule.graph().len();
            for trial in 0..WARMUP_TRIALS + trials {
                let durations = vqa_draw(depth, &mut rng);
                let (_, t_bind) = timed(|| {
                    let bindings = vqa_bindings(&names, &durations);
                    schedule.bind_parameters(&bindings)
                })?;
                let (records, t_transpile) = timed(|| transpile_schedule_rfsoc(&schedule, &map, &config))?;
                // rebinding never grows the arena
                assert_eq!(schedule.graph().len(), nodes, "schedule was rebuilt");
                if trial >= WARMUP_TRIALS {
                    update.push(t_bind);
                    transpile.push(t_transpile);
                    total.push(t_bind + t_transpile);
                }
                counts.insert("records", record_count(&records));
            }
            counts.insert("graph_nodes", nodes);
            counts.insert("schedule_parameters", schedule.parameters().len());
        }
        Ir::Direct => {
            for trial in 0..WARMUP_TRIALS + trials {
                let durations = vqa_draw(depth, &mut rng);
                let (schedule, t_build) = timed(|| vqa_direct(depth, &durations))?;
                let (records, t_transpile) = timed(|| direct_transpile(&schedule, &map, &config))?;
                if trial >= WARMUP_TRIALS {
                    update.push(t_build);
                    transpile.push(t_transpile);
                    total.push(t_build + t_transpile);
                }
                counts.insert("records", record_count(&records));
            }
        }
    }
    Ok(BenchResult {
        benchmark: "vqa",
        ir,
        depth: Some(depth),
        trials,
        phases: BTreeMap::from([
            ("update", TrialStats::from_samples(update)),
            ("transpile", TrialStats::from_samples(transpile)),
            ("total", TrialStats::from_samples(total)),
        ]),
        counts,
    })
}

/// Coefficient of determination of the least-squares line through the points.
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    1.0 - ss_res / syy
}
