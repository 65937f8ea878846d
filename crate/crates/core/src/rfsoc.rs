//! Octet RFSoC backend: two tones and two frame registers per channel.
//!
//! The muncher runs three layers. The first matches a `Zero` or a `Channel`
//! node, or reduces a sum of up to two AD9910-style tones to a channel view.
//! The second takes the channel's tones and frames apart, and the third turns
//! every parameter into a number, a spline tuple or a discrete list.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ad9910::{scalar_param, step_segments, template_parts, ConstDc};
use crate::error::{Error, Result};
use crate::ir::{durations_match, Framerot, Graph, Node, NodeId, Tone};
use crate::munch::{MunchRule, Muncher};
use crate::schedule::Schedule;
use crate::transform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfsocConfig {
    pub channels: usize,
    /// Output rate of the channel simulator.
    pub sample_rate: f64,
}

impl Default for RfsocConfig {
    fn default() -> Self {
        RfsocConfig {
            channels: 8,
            sample_rate: 1e9,
        }
    }
}

/// A parameter value: a number, `{"tuple": knots}` or `{"list": steps}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamData {
    Scalar(f64),
    Spline { tuple: Vec<f64> },
    Discrete { list: Vec<f64> },
}

impl ParamData {
    pub fn curve(&self) -> crate::curve::Curve {
        use crate::curve::Curve;
        match self {
            ParamData::Scalar(v) => Curve::Constant(*v),
            ParamData::Spline { tuple } => Curve::spline(tuple.clone()),
            ParamData::Discrete { list } => Curve::steps(list.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneData {
    pub frequency: ParamData,
    pub phase: ParamData,
    pub amplitude: ParamData,
    pub sync_phase: bool,
    pub frame_index: Option<u8>,
    pub feedback_enable: bool,
}

impl ToneData {
    pub fn silent() -> Self {
        ToneData {
            frequency: ParamData::Scalar(0.0),
            phase: ParamData::Scalar(0.0),
            amplitude: ParamData::Scalar(0.0),
            sync_phase: false,
            frame_index: None,
            feedback_enable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramerotData {
    pub rotation: ParamData,
    pub apply_at_start: bool,
    pub apply_at_end: bool,
    pub clear_accumulator: bool,
}

impl FramerotData {
    pub fn idle() -> Self {
        FramerotData {
            rotation: ParamData::Scalar(0.0),
            apply_at_start: false,
            apply_at_end: false,
            clear_accumulator: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelData {
    pub tones: [ToneData; 2],
    pub frames: [FramerotData; 2],
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RfsocOutput {
    #[serde(rename = "ConstDC")]
    ConstDc(ConstDc),
    Channel(ChannelData),
}

/// One channel pulse addressed to a physical channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseDataRecord {
    pub channel_index: usize,
    pub duration: f64,
    pub tones: [ToneData; 2],
    pub frames: [FramerotData; 2],
}

impl PulseDataRecord {
    /// Silent record: both tones at zero amplitude, frames untouched.
    pub fn zero(channel_index: usize, duration: f64) -> Self {
        PulseDataRecord {
            channel_index,
            duration,
            tones: [ToneData::silent(), ToneData::silent()],
            frames: [FramerotData::idle(), FramerotData::idle()],
        }
    }

    pub fn channel_data(&self) -> ChannelData {
        ChannelData {
            tones: self.tones.clone(),
            frames: self.frames.clone(),
            duration: self.duration,
        }
    }
}

pub fn to_pulse_record(data: &ChannelData, channel_index: usize, config: &RfsocConfig) -> Result<PulseDataRecord> {
    check_index(channel_index, config)?;
    Ok(PulseDataRecord {
        channel_index,
        duration: data.duration,
        tones: data.tones.clone(),
        frames: data.frames.clone(),
    })
}

fn check_index(index: usize, config: &RfsocConfig) -> Result<()> {
    if index < config.channels {
        Ok(())
    } else {
        Err(Error::ChannelIndexOutOfRange {
            index,
            channels: config.channels,
        })
    }
}

/// Record for one munch result.
pub fn output_record(output: &RfsocOutput, channel_index: usize, config: &RfsocConfig) -> Result<PulseDataRecord> {
    check_index(channel_index, config)?;
    Ok(record_at(output, channel_index))
}

fn record_at(output: &RfsocOutput, channel_index: usize) -> PulseDataRecord {
    match output {
        RfsocOutput::ConstDc(c) => PulseDataRecord::zero(channel_index, c.duration),
        RfsocOutput::Channel(data) => PulseDataRecord {
            channel_index,
            duration: data.duration,
            tones: data.tones.clone(),
            frames: data.frames.clone(),
        },
    }
}

// ---------------------------------------------------------------------------
// layer 3: parameters
// ---------------------------------------------------------------------------

fn param_data(graph: &Graph, id: NodeId) -> Result<Option<ParamData>> {
    match graph.node(id) {
        Node::Num(v) | Node::Var { bound: Some(v), .. } => return Ok(Some(ParamData::Scalar(*v))),
        Node::Spline(knots) => return Ok(Some(ParamData::Spline { tuple: knots.clone() })),
        Node::Discrete(steps) => return Ok(Some(ParamData::Discrete { list: steps.clone() })),
        Node::Const { value, .. } => return Ok(scalar_param(graph, *value)?.map(ParamData::Scalar)),
        _ => {}
    }
    if let Some(segments) = step_segments(graph, id)? {
        // a step function maps onto equal slices only
        let width = segments[0].1;
        if segments.iter().all(|(_, d)| durations_match(*d, width)) {
            return Ok(Some(ParamData::Discrete {
                list: segments.into_iter().map(|(v, _)| v).collect(),
            }));
        }
        return Ok(None);
    }
    Ok(scalar_param(graph, id)?.map(ParamData::Scalar))
}

// ---------------------------------------------------------------------------
// layer 2: tones and frames
// ---------------------------------------------------------------------------

fn tone_data(graph: &Graph, tone: &Tone) -> Result<Option<ToneData>> {
    let (Some(frequency), Some(phase), Some(amplitude)) = (
        param_data(graph, tone.frequency)?,
        param_data(graph, tone.phase)?,
        param_data(graph, tone.amplitude)?,
    ) else {
        return Ok(None);
    };
    Ok(Some(ToneData {
        frequency,
        phase,
        amplitude,
        sync_phase: tone.sync_phase,
        frame_index: tone.frame_index,
        feedback_enable: tone.feedback_enable,
    }))
}

fn framerot_data(graph: &Graph, frame: &Framerot) -> Result<Option<FramerotData>> {
    let Some(rotation) = param_data(graph, frame.rotation)? else {
        return Ok(None);
    };
    Ok(Some(FramerotData {
        rotation,
        apply_at_start: frame.apply_at_start,
        apply_at_end: frame.apply_at_end,
        clear_accumulator: frame.clear_accumulator,
    }))
}

// ---------------------------------------------------------------------------
// layer 1: roots
// ---------------------------------------------------------------------------

fn match_zero(graph: &Graph, root: NodeId, _: &RfsocConfig) -> Result<Option<RfsocOutput>> {
    let Node::Zero { duration } = graph.node(root) else {
        return Ok(None);
    };
    Ok(Some(RfsocOutput::ConstDc(ConstDc {
        amplitude: 0.0,
        duration: graph.scalar(*duration)?,
    })))
}

fn match_channel(graph: &Graph, root: NodeId, _: &RfsocConfig) -> Result<Option<RfsocOutput>> {
    let Node::Channel(c) = graph.node(root) else {
        return Ok(None);
    };
    if c.tones.len() != 2 || c.frames.len() != 2 {
        return Err(Error::ArityError {
            tones: c.tones.len(),
            frames: c.frames.len(),
        });
    }
    let (Node::Tone(a), Node::Tone(b)) = (graph.node(c.tones[0]), graph.node(c.tones[1])) else {
        return Ok(None);
    };
    let (Node::Framerot(f0), Node::Framerot(f1)) = (graph.node(c.frames[0]), graph.node(c.frames[1])) else {
        return Ok(None);
    };
    let (Some(t0), Some(t1), Some(r0), Some(r1)) = (
        tone_data(graph, a)?,
        tone_data(graph, b)?,
        framerot_data(graph, f0)?,
        framerot_data(graph, f1)?,
    ) else {
        return Ok(None);
    };
    Ok(Some(RfsocOutput::Channel(ChannelData {
        tones: [t0, t1],
        frames: [r0, r1],
        duration: graph.scalar(c.duration)?,
    })))
}

/// Tone and duration of an AD9910-style operand.
fn base_tone(graph: &Graph, root: NodeId) -> Result<Option<(ToneData, f64)>> {
    let Some((amp_edge, sine)) = template_parts(graph, root) else {
        return Ok(None);
    };
    let Node::Sine(osc) = graph.node(sine) else {
        return Ok(None);
    };
    let amplitude = match amp_edge {
        Some(edge) => param_data(graph, edge)?,
        None => Some(ParamData::Scalar(1.0)),
    };
    let (Some(frequency), Some(phase), Some(amplitude)) =
        (param_data(graph, osc.frequency)?, param_data(graph, osc.phase)?, amplitude)
    else {
        return Ok(None);
    };
    let tone = ToneData {
        frequency,
        phase,
        amplitude,
        sync_phase: transform::detect_clock(graph, root),
        frame_index: None,
        feedback_enable: false,
    };
    Ok(Some((tone, graph.scalar(osc.duration)?)))
}

/// Reads a base graph as a channel pulse without touching the arena.
fn base_view(graph: &Graph, root: NodeId) -> Result<Option<ChannelData>> {
    let (tones, duration) = match graph.node(root) {
        Node::Sum(ops) if ops.len() == 2 => {
            let (Some((t0, d0)), Some((t1, d1))) = (base_tone(graph, ops[0])?, base_tone(graph, ops[1])?) else {
                return Ok(None);
            };
            if !durations_match(d0, d1) {
                return Ok(None);
            }
            ([t0, t1], d0)
        }
        _ => match base_tone(graph, root)? {
            Some((t0, d)) => ([t0, ToneData::silent()], d),
            None => return Ok(None),
        },
    };
    Ok(Some(ChannelData {
        tones,
        frames: [FramerotData::idle(), FramerotData::idle()],
        duration,
    }))
}

fn match_base(graph: &Graph, root: NodeId, _: &RfsocConfig) -> Result<Option<RfsocOutput>> {
    Ok(base_view(graph, root)?.map(RfsocOutput::Channel))
}

pub fn rfsoc_muncher(config: RfsocConfig) -> Muncher<RfsocConfig, RfsocOutput> {
    Muncher::new(
        vec![
            MunchRule::new("zero", match_zero),
            MunchRule::new("channel_node", match_channel),
            MunchRule::new("reduced_base_graph", match_base),
        ],
        config,
    )
    .expect("rule list is non-empty")
}

/// Rewrites a base graph into an explicit `Channel` node.
pub fn reduce_base_graph(graph: &mut Graph, root: NodeId) -> Result<NodeId> {
    let no_match = |graph: &Graph| Error::NoMatch {
        kind: graph.node(root).kind(),
        tried: vec!["reduce_base_graph".into()],
    };
    let operands: Vec<NodeId> = match graph.node(root) {
        Node::Sum(ops) if ops.len() == 2 => ops.clone(),
        _ => vec![root],
    };
    let mut tones = Vec::with_capacity(2);
    let mut duration = None;
    for op in &operands {
        let Some((amp_edge, sine)) = template_parts(graph, *op) else {
            return Err(no_match(graph));
        };
        let Node::Sine(osc) = graph.node(sine).clone() else {
            return Err(no_match(graph));
        };
        if let Some(d) = duration {
            if !durations_match(graph.scalar(d)?, graph.scalar(osc.duration)?) {
                return Err(no_match(graph));
            }
        }
        duration.get_or_insert(osc.duration);
        let amplitude = match amp_edge {
            Some(a) => a,
            None => graph.num(1.0),
        };
        let frequency = reduce_param(graph, osc.frequency);
        let phase = reduce_param(graph, osc.phase);
        let amplitude = reduce_param(graph, amplitude);
        let sync_phase = transform::detect_clock(graph, *op);
        tones.push(graph.tone(Tone {
            frequency,
            phase,
            amplitude,
            sync_phase,
            frame_index: None,
            feedback_enable: false,
        }));
    }
    if tones.len() == 1 {
        tones.push(graph.plain_tone(0.0, 0.0, 0.0));
    }
    let f0 = graph.idle_frame(0.0);
    let f1 = graph.idle_frame(0.0);
    let duration = duration.expect("at least one operand");
    Ok(graph.channel([tones[0], tones[1]], [f0, f1], duration))
}

fn reduce_param(graph: &mut Graph, id: NodeId) -> NodeId {
    match step_segments(graph, id) {
        Ok(Some(segments)) => {
            let width = segments[0].1;
            if segments.iter().all(|(_, d)| durations_match(*d, width)) {
                return graph.discrete(segments.into_iter().map(|(v, _)| v).collect());
            }
            id
        }
        _ => id,
    }
}

/// Munches an already normalized channel pulse.
pub fn munch_rfsoc(graph: &Graph, root: NodeId, config: &RfsocConfig) -> Result<RfsocOutput> {
    rfsoc_muncher(*config).munch(graph, root)
}

/// Validates, normalizes and munches one pulse.
pub fn transpile_rfsoc_channel(graph: &mut Graph, root: NodeId, config: &RfsocConfig) -> Result<RfsocOutput> {
    graph.validate(root)?;
    let root = transform::normalize(graph, root);
    munch_rfsoc(graph, root, config)
}

/// Per-channel record lists. Every pulse in a channel's top-level sequence
/// becomes one record; a pulse shared within or across channels is munched
/// once.
pub fn transpile_schedule_rfsoc(
    schedule: &Schedule,
    channel_map: &BTreeMap<String, usize>,
    config: &RfsocConfig,
) -> Result<BTreeMap<String, Vec<PulseDataRecord>>> {
    let muncher = rfsoc_muncher(*config);
    let graph = schedule.graph();
    // pass 1: flatten every channel into leaf slots, numbering distinct pulses
    // by first appearance (slot k + 1 in `slots`, 0 when unseen)
    let mut slots = vec![0u32; graph.len()];
    let mut distinct: Vec<(NodeId, &str)> = Vec::new();
    let mut lanes = Vec::with_capacity(schedule.channels().len());
    let mut stack = Vec::new();
    for (name, root) in schedule.channels() {
        let name = name.as_str();
        let index = *channel_map
            .get(name)
            .ok_or_else(|| Error::UnmappedChannel(name.to_string()))?;
        check_index(index, config).map_err(|e| e.in_channel(name))?;
        let mut leaves = Vec::new();
        stack.push(*root);
        while let Some(id) = stack.pop() {
            if let Node::Sequence(children) = graph.node(id) {
                stack.extend(children.iter().rev());
                continue;
            }
            let slot = &mut slots[id.index()];
            if *slot == 0 {
                distinct.push((id, name));
                *slot = distinct.len() as u32;
            }
            leaves.push(*slot as usize - 1);
        }
        lanes.push((name, index, leaves));
    }
    // pass 2: munch each distinct pulse once
    let mut outputs = Vec::with_capacity(distinct.len());
    for (id, name) in distinct {
        outputs.push(muncher.munch(graph, id).map_err(|e| e.in_channel(name))?);
    }
    // pass 3: stamp records
    Ok(lanes
        .into_iter()
        .map(|(name, index, leaves)| {
            let records = leaves.iter().map(|&k| record_at(&outputs[k], index)).collect();
            (name.to_string(), records)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RfsocConfig {
        RfsocConfig::default()
    }

    #[test]
    fn zero_is_const_dc() {
        let mut g = Graph::new();
        let z = g.zero(1e-6);
        assert_eq!(
            transpile_rfsoc_channel(&mut g, z, &cfg()).unwrap(),
            RfsocOutput::ConstDc(ConstDc {
                amplitude: 0.0,
                duration: 1e-6
            })
        );
    }

    #[test]
    fn two_tone_sum_reduces() {
        let mut g = Graph::new();
        let s1 = g.sine(1e6, 0.0, 1e-6);
        let s2 = g.sine(2e6, 0.0, 1e-6);
        let a1 = g.num(0.3);
        let a2 = g.num(0.4);
        let p1 = g.product([a1, s1]);
        let p2 = g.product([a2, s2]);
        let root = g.sum([p1, p2]);
        let RfsocOutput::Channel(base) = transpile_rfsoc_channel(&mut g, root, &cfg()).unwrap() else {
            panic!()
        };
        assert_eq!(base.tones[0].amplitude, ParamData::Scalar(0.3));
        assert_eq!(base.tones[1].frequency, ParamData::Scalar(2e6));
        assert_eq!(base.frames[0], FramerotData::idle());

        let t0 = g.plain_tone(1e6, 0.0, 0.3);
        let t1 = g.plain_tone(2e6, 0.0, 0.4);
        let f0 = g.idle_frame(0.0);
        let f1 = g.idle_frame(0.0);
        let hand = g.channel([t0, t1], [f0, f1], 1e-6);
        let RfsocOutput::Channel(direct) = transpile_rfsoc_channel(&mut g, hand, &cfg()).unwrap() else {
            panic!()
        };
        assert_eq!(base, direct);

        let reduced = reduce_base_graph(&mut g, root).unwrap();
        let RfsocOutput::Channel(via) = transpile_rfsoc_channel(&mut g, reduced, &cfg()).unwrap() else {
            panic!()
        };
        assert_eq!(via, base);
    }

    #[test]
    fn single_tone_defaults_second() {
        let mut g = Graph::new();
        let s = g.sine(1e6, 0.0, 1e-6);
        let a = g.num(0.5);
        let root = g.product([a, s]);
        let reduced = reduce_base_graph(&mut g, root).unwrap();
        let Node::Channel(c) = g.node(reduced).clone() else { panic!() };
        let Node::Tone(t1) = g.node(c.tones[1]) else { panic!() };
        assert_eq!(g.scalar(t1.amplitude).unwrap(), 0.0);
        let ga = g.gauss(1.0, 0.0, 1e-7, 1e-6);
        assert!(matches!(reduce_base_graph(&mut g, ga), Err(Error::NoMatch { .. })));
        assert!(matches!(transpile_rfsoc_channel(&mut g, ga, &cfg()), Err(Error::NoMatch { .. })));
    }

    #[test]
    fn spline_and_discrete_forms() {
        let mut g = Graph::new();
        let f = g.spline(vec![1e6, 2e6, 3e6, 2e6]);
        let a = g.discrete(vec![0.1, 0.2]);
        let t0 = g.plain_tone(f, 0.0, a);
        let t1 = g.plain_tone(0.0, 0.0, 0.0);
        let f0 = g.idle_frame(0.0);
        let f1 = g.idle_frame(0.0);
        let ch = g.channel([t0, t1], [f0, f1], 1e-6);
        let RfsocOutput::Channel(d) = transpile_rfsoc_channel(&mut g, ch, &cfg()).unwrap() else {
            panic!()
        };
        assert_eq!(
            d.tones[0].frequency,
            ParamData::Spline {
                tuple: vec![1e6, 2e6, 3e6, 2e6]
            }
        );
        assert_eq!(d.tones[0].amplitude, ParamData::Discrete { list: vec![0.1, 0.2] });
        let json = serde_json::to_string(&d.tones[0].amplitude).unwrap();
        assert_eq!(json, r#"{"list":[0.1,0.2]}"#);

        let rec = to_pulse_record(&d, 3, &cfg()).unwrap();
        assert_eq!(rec.channel_index, 3);
        assert_eq!(rec.channel_data(), d);
        assert_eq!(
            to_pulse_record(&d, 8, &cfg()),
            Err(Error::ChannelIndexOutOfRange { index: 8, channels: 8 })
        );
    }

    #[test]
    fn bad_channel_arity() {
        let mut g = Graph::new();
        let t = g.plain_tone(1e6, 0.0, 1.0);
        let f = g.idle_frame(0.0);
        let d = g.num(1e-6);
        let ch = g.add(Node::Channel(crate::ir::ChannelPulse {
            tones: vec![t],
            frames: vec![f, f],
            duration: d,
        }));
        assert_eq!(munch_rfsoc(&g, ch, &cfg()), Err(Error::ArityError { tones: 1, frames: 2 }));
    }
}
