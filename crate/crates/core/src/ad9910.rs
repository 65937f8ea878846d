//! AD9910 single-channel DDS backend.
//!
//! Accepted graphs are a `Zero`, or a `Sine` optionally scaled by a root
//! `Product(amplitude, Sine)`. Each of frequency, phase and amplitude is a
//! scalar or a step function (`Sequence` of `Const`). Missing amplitude means
//! unity.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{durations_match, Graph, Node, NodeId};
use crate::munch::{MunchRule, Muncher};
use crate::transform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ad9910Config {
    pub sysclk: f64,
    pub max_frequency: f64,
    pub ram_slots: usize,
}

impl Ad9910Config {
    pub const FTW_BITS: u32 = 32;
    pub const POW_BITS: u32 = 16;
    pub const ASF_BITS: u32 = 14;
}

impl Default for Ad9910Config {
    fn default() -> Self {
        Ad9910Config {
            sysclk: 1e9,
            max_frequency: 4e8,
            ram_slots: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstDc {
    pub amplitude: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepWaveform {
    pub steps: Vec<ConstDc>,
}

impl StepWaveform {
    pub fn duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }
}

/// A tone parameter: a number, or `{"steps": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ToneParam {
    Scalar(f64),
    Steps(StepWaveform),
}

impl ToneParam {
    fn values(&self) -> Vec<f64> {
        match self {
            ToneParam::Scalar(v) => vec![*v],
            ToneParam::Steps(s) => s.steps.iter().map(|c| c.amplitude).collect(),
        }
    }

    /// Value during step `k` of the modulation timeline.
    pub fn at_step(&self, k: usize) -> f64 {
        match self {
            ToneParam::Scalar(v) => *v,
            ToneParam::Steps(s) => s.steps[k].amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTone {
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub duration: f64,
    pub phase_continuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSine {
    pub frequency: ToneParam,
    pub phase: ToneParam,
    pub amplitude: ToneParam,
    pub duration: f64,
    pub phase_continuous: bool,
}

impl DiscreteSine {
    /// The single modulated parameter's step timeline.
    pub fn timeline(&self) -> &StepWaveform {
        [&self.frequency, &self.phase, &self.amplitude]
            .into_iter()
            .find_map(|p| match p {
                ToneParam::Steps(s) => Some(s),
                ToneParam::Scalar(_) => None,
            })
            .expect("a discrete sine has a stepped parameter")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Ad9910Program {
    #[serde(rename = "ConstDC")]
    ConstDc(ConstDc),
    SingleTone(SingleTone),
    DiscreteSine(DiscreteSine),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegisterWords {
    pub ftw: u32,
    pub pow: u16,
    pub asf: u16,
}

/// `round(f / sysclk * 2^32)`.
pub fn frequency_word(frequency: f64, config: &Ad9910Config) -> Result<u32> {
    check_frequency(frequency, config)?;
    Ok((frequency / config.sysclk * 4294967296.0).round() as u32)
}

/// `round((phase mod 2pi) / 2pi * 2^16) mod 2^16`.
pub fn phase_word(phase: f64) -> u16 {
    let turns = phase.rem_euclid(TAU) / TAU;
    ((turns * 65536.0).round() as u32 % 65536) as u16
}

/// `round(|a| * (2^14 - 1))`.
pub fn amplitude_word(amplitude: f64) -> Result<u16> {
    check_amplitude(amplitude)?;
    Ok((amplitude.abs() * 16383.0).round() as u16)
}

/// Register words for one tone. A negative amplitude is realized as a half
/// turn of extra phase.
pub fn tone_words(frequency: f64, phase: f64, amplitude: f64, config: &Ad9910Config) -> Result<RegisterWords> {
    let phase = if amplitude < 0.0 { phase + PI } else { phase };
    Ok(RegisterWords {
        ftw: frequency_word(frequency, config)?,
        pow: phase_word(phase),
        asf: amplitude_word(amplitude)?,
    })
}

pub fn quantize_registers(tone: &SingleTone, config: &Ad9910Config) -> Result<RegisterWords> {
    tone_words(tone.frequency, tone.phase, tone.amplitude, config)
}

fn check_frequency(frequency: f64, config: &Ad9910Config) -> Result<()> {
    if (0.0..=config.max_frequency).contains(&frequency) {
        Ok(())
    } else {
        Err(Error::FrequencyOutOfRange {
            frequency,
            max: config.max_frequency,
        })
    }
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&amplitude) {
        Ok(())
    } else {
        Err(Error::AmplitudeOutOfRange(amplitude))
    }
}

/// Scalar value of a parameter edge; `None` when the node is not a scalar.
pub(crate) fn scalar_param(graph: &Graph, id: NodeId) -> Result<Option<f64>> {
    match graph.scalar(id) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotScalar { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `(value, duration)` of each segment when `id` is a `Sequence` of `Const`
/// nodes with scalar values.
pub(crate) fn step_segments(graph: &Graph, id: NodeId) -> Result<Option<Vec<(f64, f64)>>> {
    let Node::Sequence(children) = graph.node(id) else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(children.len());
    for c in children {
        let Node::Const { value, duration } = graph.node(*c) else {
            return Ok(None);
        };
        let Some(v) = scalar_param(graph, *value)? else {
            return Ok(None);
        };
        out.push((v, graph.scalar(*duration)?));
    }
    Ok(Some(out))
}

/// Step functions first, then constants.
fn munch_leaf(graph: &Graph, id: NodeId) -> Result<Option<ToneParam>> {
    if let Some(segments) = step_segments(graph, id)? {
        let steps = segments
            .into_iter()
            .map(|(amplitude, duration)| ConstDc { amplitude, duration })
            .collect();
        return Ok(Some(ToneParam::Steps(StepWaveform { steps })));
    }
    if let Node::Const { value, .. } = graph.node(id) {
        return Ok(scalar_param(graph, *value)?.map(ToneParam::Scalar));
    }
    Ok(scalar_param(graph, id)?.map(ToneParam::Scalar))
}

/// Splits a template root into `(amplitude edge, sine node)`.
pub(crate) fn template_parts(graph: &Graph, root: NodeId) -> Option<(Option<NodeId>, NodeId)> {
    match graph.node(root) {
        Node::Sine(_) => Some((None, root)),
        Node::Product(ops) if ops.len() == 2 => {
            let is_sine = |id: NodeId| matches!(graph.node(id), Node::Sine(_));
            match (is_sine(ops[0]), is_sine(ops[1])) {
                (false, true) => Some((Some(ops[0]), ops[1])),
                (true, false) => Some((Some(ops[1]), ops[0])),
                _ => None,
            }
        }
        _ => None,
    }
}

fn match_zero(graph: &Graph, root: NodeId, _: &Ad9910Config) -> Result<Option<Ad9910Program>> {
    let Node::Zero { duration } = graph.node(root) else {
        return Ok(None);
    };
    Ok(Some(Ad9910Program::ConstDc(ConstDc {
        amplitude: 0.0,
        duration: graph.scalar(*duration)?,
    })))
}

fn match_template(graph: &Graph, root: NodeId, config: &Ad9910Config) -> Result<Option<Ad9910Program>> {
    let Some((amp_edge, sine)) = template_parts(graph, root) else {
        return Ok(None);
    };
    let Node::Sine(osc) = graph.node(sine) else {
        return Ok(None);
    };
    let amplitude = match amp_edge {
        Some(edge) => match munch_leaf(graph, edge)? {
            Some(p) => p,
            None => return Ok(None),
        },
        None => ToneParam::Scalar(1.0),
    };
    let (Some(frequency), Some(phase)) = (munch_leaf(graph, osc.frequency)?, munch_leaf(graph, osc.phase)?) else {
        return Ok(None);
    };
    let duration = graph.scalar(osc.duration)?;
    let phase_continuous = transform::detect_clock(graph, root);

    for f in frequency.values() {
        check_frequency(f, config)?;
    }
    for a in amplitude.values() {
        check_amplitude(a)?;
    }
    let stepped: Vec<&StepWaveform> = [&frequency, &phase, &amplitude]
        .into_iter()
        .filter_map(|p| match p {
            ToneParam::Steps(s) => Some(s),
            ToneParam::Scalar(_) => None,
        })
        .collect();
    match stepped.as_slice() {
        [] => Ok(Some(Ad9910Program::SingleTone(SingleTone {
            frequency: frequency.at_step(0),
            phase: phase.at_step(0),
            amplitude: amplitude.at_step(0),
            duration,
            phase_continuous,
        }))),
        [steps] => {
            if steps.steps.len() > config.ram_slots {
                return Err(Error::TooManySteps {
                    steps: steps.steps.len(),
                    slots: config.ram_slots,
                });
            }
            let total = steps.duration();
            if !durations_match(total, duration) {
                return Err(Error::StepDurationMismatch {
                    steps: total,
                    pulse: duration,
                });
            }
            Ok(Some(Ad9910Program::DiscreteSine(DiscreteSine {
                frequency,
                phase,
                amplitude,
                duration,
                phase_continuous,
            })))
        }
        _ => Err(Error::MultiParamModulation),
    }
}

pub fn ad9910_muncher(config: Ad9910Config) -> Muncher<Ad9910Config, Ad9910Program> {
    Muncher::new(
        vec![
            MunchRule::new("zero", match_zero),
            MunchRule::new("template", match_template),
        ],
        config,
    )
    .expect("rule list is non-empty")
}

/// Munches an already normalized graph.
pub fn munch_ad9910(graph: &Graph, root: NodeId, config: &Ad9910Config) -> Result<Ad9910Program> {
    ad9910_muncher(*config).munch(graph, root)
}

/// Validates, normalizes and munches.
pub fn transpile_ad9910(graph: &mut Graph, root: NodeId, config: &Ad9910Config) -> Result<Ad9910Program> {
    graph.validate(root)?;
    let root = transform::normalize(graph, root);
    munch_ad9910(graph, root, config)
}
