//! Pulse graphs.
//!
//! A [`Graph`] is an append-only arena of [`Node`]s. Every edge is a
//! [`NodeId`] into the same arena, so a node may be shared by any number of
//! parents. Parameters (frequencies, phases, amplitudes, durations) are edges
//! too: they point at `Num` or `Var` leaves, at scalar arithmetic over those, or
//! at step functions built from `Sequence`s of `Const` nodes.
//!
//! Units are seconds, hertz, radians and dimensionless amplitude.

mod eval;

use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

pub use eval::SampledWaveform;

/// Relative tolerance used when comparing durations of parallel operands.
pub(crate) const DURATION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("graph arena exceeds u32 nodes"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Sine/Cosine payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillator {
    pub frequency: NodeId,
    pub phase: NodeId,
    pub duration: NodeId,
    /// Presence switches evaluation to phase-continuous mode.
    pub clock: Option<NodeId>,
}

/// One DDS tone of an Octet channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tone {
    pub frequency: NodeId,
    pub phase: NodeId,
    pub amplitude: NodeId,
    pub sync_phase: bool,
    /// Frame register whose accumulated phase is added to this tone.
    pub frame_index: Option<u8>,
    pub feedback_enable: bool,
}

/// A frame-rotation operation on one of the two per-channel frame registers.
#[derive(Debug, Clone, PartialEq)]
pub struct Framerot {
    pub rotation: NodeId,
    pub apply_at_start: bool,
    pub apply_at_end: bool,
    pub clear_accumulator: bool,
}

/// A complete Octet channel pulse: two tones, two frames, one duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPulse {
    pub tones: Vec<NodeId>,
    pub frames: Vec<NodeId>,
    pub duration: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var { name: String, bound: Option<f64> },
    Const { value: NodeId, duration: NodeId },
    Zero { duration: NodeId },
    Sine(Oscillator),
    Cosine(Oscillator),
    /// `sum_i c_i t^i` over the node's local time.
    Poly { coefficients: Vec<NodeId>, duration: NodeId },
    Gauss {
        amplitude: NodeId,
        mean: f64,
        sigma: f64,
        duration: NodeId,
    },
    Sum(Vec<NodeId>),
    Product(Vec<NodeId>),
    Sequence(Vec<NodeId>),
    Clock(String),

    // Octet RFSoC extension nodes
    Spline(Vec<f64>),
    Discrete(Vec<f64>),
    Tone(Tone),
    Framerot(Framerot),
    Channel(ChannelPulse),
}

pub type Edges = SmallVec<[NodeId; 4]>;

impl Node {
    pub fn kind(&self) -> &'static str {
        match self {
            Node::Num(_) => "Num",
            Node::Var { .. } => "Var",
            Node::Const { .. } => "Const",
            Node::Zero { .. } => "Zero",
            Node::Sine(_) => "Sine",
            Node::Cosine(_) => "Cosine",
            Node::Poly { .. } => "Poly",
            Node::Gauss { .. } => "Gauss",
            Node::Sum(_) => "Sum",
            Node::Product(_) => "Product",
            Node::Sequence(_) => "Sequence",
            Node::Clock(_) => "Clock",
            Node::Spline(_) => "Spline",
            Node::Discrete(_) => "Discrete",
            Node::Tone(_) => "Tone",
            Node::Framerot(_) => "Framerot",
            Node::Channel(_) => "Channel",
        }
    }

    /// Outgoing edges in a fixed order.
    pub fn edges(&self) -> Edges {
        let mut out = Edges::new();
        match self {
            Node::Num(_)
            | Node::Var { .. }
            | Node::Clock(_)
            | Node::Spline(_)
            | Node::Discrete(_) => {}
            Node::Const { value, duration } => {
                out.push(*value);
                out.push(*duration);
            }
            Node::Zero { duration } => out.push(*duration),
            Node::Sine(o) | Node::Cosine(o) => {
                out.push(o.frequency);
                out.push(o.phase);
                out.push(o.duration);
                out.extend(o.clock);
            }
            Node::Poly {
                coefficients,
                duration,
            } => {
                out.extend(coefficients.iter().copied());
                out.push(*duration);
            }
            Node::Gauss {
                amplitude,
                duration,
                ..
            } => {
                out.push(*amplitude);
                out.push(*duration);
            }
            Node::Sum(ops) | Node::Product(ops) | Node::Sequence(ops) => {
                out.extend(ops.iter().copied())
            }
            Node::Tone(t) => {
                out.push(t.frequency);
                out.push(t.phase);
                out.push(t.amplitude);
            }
            Node::Framerot(f) => out.push(f.rotation),
            Node::Channel(c) => {
                out.extend(c.tones.iter().copied());
                out.extend(c.frames.iter().copied());
                out.push(c.duration);
            }
        }
        out
    }

    /// Rebuilds the node with every edge passed through `f`, in [`Node::edges`] order.
    pub fn map_edges(&self, mut f: impl FnMut(NodeId) -> NodeId) -> Node {
        match self {
            Node::Num(_)
            | Node::Var { .. }
            | Node::Clock(_)
            | Node::Spline(_)
            | Node::Discrete(_) => self.clone(),
            Node::Const { value, duration } => Node::Const {
                value: f(*value),
                duration: f(*duration),
            },
            Node::Zero { duration } => Node::Zero {
                duration: f(*duration),
            },
            Node::Sine(o) => Node::Sine(map_osc(o, &mut f)),
            Node::Cosine(o) => Node::Cosine(map_osc(o, &mut f)),
            Node::Poly {
                coefficients,
                duration,
            } => Node::Poly {
                coefficients: coefficients.iter().map(|c| f(*c)).collect(),
                duration: f(*duration),
            },
            Node::Gauss {
                amplitude,
                mean,
                sigma,
                duration,
            } => Node::Gauss {
                amplitude: f(*amplitude),
                mean: *mean,
                sigma: *sigma,
                duration: f(*duration),
            },
            Node::Sum(ops) => Node::Sum(ops.iter().map(|c| f(*c)).collect()),
            Node::Product(ops) => Node::Product(ops.iter().map(|c| f(*c)).collect()),
            Node::Sequence(ops) => Node::Sequence(ops.iter().map(|c| f(*c)).collect()),
            Node::Tone(t) => Node::Tone(Tone {
                frequency: f(t.frequency),
                phase: f(t.phase),
                amplitude: f(t.amplitude),
                ..t.clone()
            }),
            Node::Framerot(r) => Node::Framerot(Framerot {
                rotation: f(r.rotation),
                ..r.clone()
            }),
            Node::Channel(c) => Node::Channel(ChannelPulse {
                tones: c.tones.iter().map(|t| f(*t)).collect(),
                frames: c.frames.iter().map(|t| f(*t)).collect(),
                duration: f(c.duration),
            }),
        }
    }

    /// The duration edge of a leaf waveform.
    pub fn duration_edge(&self) -> Option<NodeId> {
        match self {
            Node::Const { duration, .. }
            | Node::Zero { duration }
            | Node::Poly { duration, .. }
            | Node::Gauss { duration, .. } => Some(*duration),
            Node::Sine(o) | Node::Cosine(o) => Some(o.duration),
            Node::Channel(c) => Some(c.duration),
            _ => None,
        }
    }
}

fn map_osc(o: &Oscillator, f: &mut impl FnMut(NodeId) -> NodeId) -> Oscillator {
    Oscillator {
        frequency: f(o.frequency),
        phase: f(o.phase),
        duration: f(o.duration),
        clock: o.clock.map(&mut *f),
    }
}

/// Anything usable as a parameter edge: an existing node or a literal.
pub trait IntoParam {
    fn into_param(self, graph: &mut Graph) -> NodeId;
}

impl IntoParam for NodeId {
    fn into_param(self, _: &mut Graph) -> NodeId {
        self
    }
}

impl IntoParam for f64 {
    fn into_param(self, graph: &mut Graph) -> NodeId {
        graph.num(self)
    }
}

/// Arena of pulse nodes. `Var` nodes are interned by name, so binding a name
/// updates every use of it.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    vars: HashMap<String, NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    /// Panics on a dangling id; use [`Graph::get`] for untrusted ids.
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    /// Raw mutable access. Callers that rewire edges must re-run [`Graph::validate`].
    pub fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.index()]
    }

    /// Adds a node without checking its edges. A `Var` with a name already in
    /// the arena returns the existing node.
    pub fn add(&mut self, node: Node) -> NodeId {
        if let Node::Var { name, .. } = &node {
            if let Some(id) = self.vars.get(name) {
                return *id;
            }
            let id = NodeId::from_index(self.nodes.len());
            self.vars.insert(name.clone(), id);
            self.nodes.push(node);
            return id;
        }
        let id = NodeId::from_index(self.nodes.len());
        self.nodes.push(node);
        id
    }

    pub fn var_id(&self, name: &str) -> Option<NodeId> {
        self.vars.get(name).copied()
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    pub(crate) fn set_binding(&mut self, id: NodeId, value: Option<f64>) {
        if let Node::Var { bound, .. } = &mut self.nodes[id.index()] {
            *bound = value;
        }
    }

    pub(crate) fn clear_bindings(&mut self) {
        for id in self.vars.values() {
            if let Node::Var { bound, .. } = &mut self.nodes[id.index()] {
                *bound = None;
            }
        }
    }

    // ---- constructors ----

    pub fn num(&mut self, value: f64) -> NodeId {
        self.add(Node::Num(value))
    }

    pub fn var(&mut self, name: &str) -> NodeId {
        self.add(Node::Var {
            name: name.to_string(),
            bound: None,
        })
    }

    pub fn constant(&mut self, value: impl IntoParam, duration: impl IntoParam) -> NodeId {
        let value = value.into_param(self);
        let duration = duration.into_param(self);
        self.add(Node::Const { value, duration })
    }

    pub fn zero(&mut self, duration: impl IntoParam) -> NodeId {
        let duration = duration.into_param(self);
        self.add(Node::Zero { duration })
    }

    pub fn sine(
        &mut self,
        frequency: impl IntoParam,
        phase: impl IntoParam,
        duration: impl IntoParam,
    ) -> NodeId {
        let o = self.oscillator(frequency, phase, duration, None);
        self.add(Node::Sine(o))
    }

    pub fn sine_clocked(
        &mut self,
        frequency: impl IntoParam,
        phase: impl IntoParam,
        duration: impl IntoParam,
        clock: NodeId,
    ) -> NodeId {
        let o = self.oscillator(frequency, phase, duration, Some(clock));
        self.add(Node::Sine(o))
    }

    pub fn cosine(
        &mut self,
        frequency: impl IntoParam,
        phase: impl IntoParam,
        duration: impl IntoParam,
    ) -> NodeId {
        let o = self.oscillator(frequency, phase, duration, None);
        self.add(Node::Cosine(o))
    }

    fn oscillator(
        &mut self,
        frequency: impl IntoParam,
        phase: impl IntoParam,
        duration: impl IntoParam,
        clock: Option<NodeId>,
    ) -> Oscillator {
        Oscillator {
            frequency: frequency.into_param(self),
            phase: phase.into_param(self),
            duration: duration.into_param(self),
            clock,
        }
    }

    pub fn poly<P: IntoParam>(
        &mut self,
        coefficients: impl IntoIterator<Item = P>,
        duration: impl IntoParam,
    ) -> NodeId {
        let coefficients = coefficients
            .into_iter()
            .map(|c| c.into_param(self))
            .collect();
        let duration = duration.into_param(self);
        self.add(Node::Poly {
            coefficients,
            duration,
        })
    }

    pub fn gauss(
        &mut self,
        amplitude: impl IntoParam,
        mean: f64,
        sigma: f64,
        duration: impl IntoParam,
    ) -> NodeId {
        let amplitude = amplitude.into_param(self);
        let duration = duration.into_param(self);
        self.add(Node::Gauss {
            amplitude,
            mean,
            sigma,
            duration,
        })
    }

    pub fn sum(&mut self, operands: impl IntoIterator<Item = NodeId>) -> NodeId {
        self.add(Node::Sum(operands.into_iter().collect()))
    }

    pub fn product(&mut self, operands: impl IntoIterator<Item = NodeId>) -> NodeId {
        self.add(Node::Product(operands.into_iter().collect()))
    }

    pub fn sequence(&mut self, children: impl IntoIterator<Item = NodeId>) -> NodeId {
        self.add(Node::Sequence(children.into_iter().collect()))
    }

    pub fn clock(&mut self, id: &str) -> NodeId {
        self.add(Node::Clock(id.to_string()))
    }

    /// Step function: a `Sequence` of `Const` segments.
    pub fn steps(&mut self, segments: &[(f64, f64)]) -> NodeId {
        let children: Vec<_> = segments
            .iter()
            .map(|&(value, duration)| self.constant(value, duration))
            .collect();
        self.sequence(children)
    }

    pub fn spline(&mut self, knots: Vec<f64>) -> NodeId {
        self.add(Node::Spline(knots))
    }

    pub fn discrete(&mut self, steps: Vec<f64>) -> NodeId {
        self.add(Node::Discrete(steps))
    }

    pub fn tone(&mut self, tone: Tone) -> NodeId {
        self.add(Node::Tone(tone))
    }

    /// Tone with default metadata (no sync, no frame, no feedback).
    pub fn plain_tone(
        &mut self,
        frequency: impl IntoParam,
        phase: impl IntoParam,
        amplitude: impl IntoParam,
    ) -> NodeId {
        let tone = Tone {
            frequency: frequency.into_param(self),
            phase: phase.into_param(self),
            amplitude: amplitude.into_param(self),
            sync_phase: false,
            frame_index: None,
            feedback_enable: false,
        };
        self.add(Node::Tone(tone))
    }

    pub fn framerot(&mut self, framerot: Framerot) -> NodeId {
        self.add(Node::Framerot(framerot))
    }

    /// Frame rotation of `rotation` radians with every flag cleared.
    pub fn idle_frame(&mut self, rotation: impl IntoParam) -> NodeId {
        let rotation = rotation.into_param(self);
        self.add(Node::Framerot(Framerot {
            rotation,
            apply_at_start: false,
            apply_at_end: false,
            clear_accumulator: false,
        }))
    }

    pub fn channel(
        &mut self,
        tones: [NodeId; 2],
        frames: [NodeId; 2],
        duration: impl IntoParam,
    ) -> NodeId {
        let duration = duration.into_param(self);
        self.add(Node::Channel(ChannelPulse {
            tones: tones.to_vec(),
            frames: frames.to_vec(),
            duration,
        }))
    }

    // ---- analysis ----

    /// Value of a durationless scalar parameter: `Num`, bound `Var`, or
    /// `Sum`/`Product` over those.
    pub fn scalar(&self, id: NodeId) -> Result<f64> {
        match self.get(id).ok_or(Error::DanglingRef(id))? {
            Node::Num(v) => Ok(*v),
            Node::Var { name, bound } => bound.ok_or_else(|| Error::UnboundVar(name.clone())),
            Node::Sum(ops) => self.fold_scalar(ops, 0.0, |a, b| a + b),
            Node::Product(ops) => self.fold_scalar(ops, 1.0, |a, b| a * b),
            other => Err(Error::NotScalar {
                node: id,
                kind: other.kind(),
            }),
        }
    }

    fn fold_scalar(&self, ops: &[NodeId], unit: f64, op: fn(f64, f64) -> f64) -> Result<f64> {
        // literal constants first, matching waveform evaluation order
        let mut acc: Option<f64> = None;
        for &o in ops.iter().filter(|o| self.is_constant(**o)) {
            let v = self.scalar(o)?;
            acc = Some(acc.map_or(v, |a| op(a, v)));
        }
        for &o in ops.iter().filter(|o| !self.is_constant(**o)) {
            let v = self.scalar(o)?;
            acc = Some(acc.map_or(v, |a| op(a, v)));
        }
        Ok(acc.unwrap_or(unit))
    }

    /// True for `Num` and for `Sum`/`Product` trees whose leaves are all `Num`.
    /// Variable bindings never make a node constant.
    pub fn is_constant(&self, id: NodeId) -> bool {
        match self.get(id) {
            Some(Node::Num(_)) => true,
            Some(Node::Sum(ops)) | Some(Node::Product(ops)) => {
                ops.iter().all(|o| self.is_constant(*o))
            }
            _ => false,
        }
    }

    /// Value of a constant subtree, ignoring variable bindings.
    pub fn constant_value(&self, id: NodeId) -> Option<f64> {
        if self.is_constant(id) {
            self.scalar(id).ok()
        } else {
            None
        }
    }

    /// Whether the node occupies time.
    pub fn is_waveform(&self, id: NodeId) -> bool {
        match self.get(id) {
            Some(
                Node::Const { .. }
                | Node::Zero { .. }
                | Node::Sine(_)
                | Node::Cosine(_)
                | Node::Poly { .. }
                | Node::Gauss { .. }
                | Node::Sequence(_)
                | Node::Channel(_),
            ) => true,
            Some(Node::Sum(ops)) | Some(Node::Product(ops)) => {
                ops.iter().any(|o| self.is_waveform(*o))
            }
            _ => false,
        }
    }

    /// Duration in seconds. Durationless nodes report 0.
    pub fn duration(&self, id: NodeId) -> Result<f64> {
        let node = self.get(id).ok_or(Error::DanglingRef(id))?;
        if let Some(edge) = node.duration_edge() {
            return self.scalar(edge);
        }
        match node {
            Node::Sequence(children) => {
                let mut total = 0.0;
                for c in children {
                    total += self.duration(*c)?;
                }
                Ok(total)
            }
            Node::Sum(ops) | Node::Product(ops) => {
                let mut common: Option<f64> = None;
                for &o in ops.iter().filter(|o| self.is_waveform(**o)) {
                    let d = self.duration(o)?;
                    match common {
                        None => common = Some(d),
                        Some(c) if !durations_match(c, d) => {
                            return Err(Error::MixedDuration {
                                node: id,
                                first: c,
                                other: d,
                            })
                        }
                        Some(_) => {}
                    }
                }
                Ok(common.unwrap_or(0.0))
            }
            _ => Ok(0.0),
        }
    }

    /// Checks edges, acyclicity, arities and literal durations of everything
    /// reachable from `root`.
    pub fn validate(&self, root: NodeId) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        if !self.contains(root) {
            return Err(Error::DanglingRef(root));
        }
        let mut marks = vec![Mark::New; self.nodes.len()];
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        marks[root.index()] = Mark::Open;
        while let Some(&mut (id, ref mut next)) = stack.last_mut() {
            let edges = self.node(id).edges();
            if *next < edges.len() {
                let child = edges[*next];
                *next += 1;
                if !self.contains(child) {
                    return Err(Error::DanglingRef(child));
                }
                match marks[child.index()] {
                    Mark::Open => return Err(Error::CycleDetected(child)),
                    Mark::Done => {}
                    Mark::New => {
                        marks[child.index()] = Mark::Open;
                        stack.push((child, 0));
                    }
                }
            } else {
                self.check_node(id)?;
                marks[id.index()] = Mark::Done;
                stack.pop();
            }
        }
        Ok(())
    }

    fn check_node(&self, id: NodeId) -> Result<()> {
        let node = self.node(id);
        let bad = |detail: String| Error::BadArity {
            node: id,
            kind: node.kind(),
            detail,
        };
        match node {
            Node::Sum(ops) | Node::Product(ops) if ops.len() < 2 => {
                return Err(bad(format!("needs at least 2 operands, has {}", ops.len())))
            }
            Node::Sequence(children) if children.is_empty() => {
                return Err(bad("needs at least 1 child".into()))
            }
            Node::Poly { coefficients, .. } if coefficients.is_empty() => {
                return Err(bad("needs at least 1 coefficient".into()))
            }
            Node::Spline(knots) if knots.len() < 2 => {
                return Err(bad(format!("needs at least 2 knots, has {}", knots.len())))
            }
            Node::Discrete(steps) if steps.is_empty() => {
                return Err(bad("needs at least 1 step".into()))
            }
            Node::Channel(c) if c.tones.len() != 2 || c.frames.len() != 2 => {
                return Err(bad(format!(
                    "needs 2 tones and 2 frames, has {} and {}",
                    c.tones.len(),
                    c.frames.len()
                )))
            }
            Node::Spline(values) | Node::Discrete(values)
                if values.iter().any(|v| !v.is_finite()) =>
            {
                return Err(Error::InvalidParameter {
                    node: id,
                    detail: "non-finite value".into(),
                })
            }
            Node::Num(v) if !v.is_finite() => {
                return Err(Error::InvalidParameter {
                    node: id,
                    detail: "non-finite literal".into(),
                })
            }
            Node::Gauss { sigma, mean, .. } if !(*sigma > 0.0) || !mean.is_finite() => {
                return Err(Error::InvalidParameter {
                    node: id,
                    detail: format!("gaussian needs finite mean and sigma > 0, got sigma {sigma}"),
                })
            }
            Node::Tone(t) if t.frame_index.is_some_and(|i| i > 1) => {
                return Err(Error::InvalidParameter {
                    node: id,
                    detail: "frame index must be 0 or 1".into(),
                })
            }
            _ => {}
        }
        if let Some(edge) = node.duration_edge() {
            if let Some(value) = self.constant_value(edge) {
                if value < 0.0 {
                    return Err(Error::NegativeDuration { node: id, value });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn durations_match(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= DURATION_RTOL * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Piecewise-linear ramp of a 10 MHz tone: ramp up, hold, ramp down.
    pub(crate) fn ramp_graph(g: &mut Graph, t0: f64, t1: f64, t2: f64) -> NodeId {
        let up = g.poly([0.0, 1.0 / t0], t0);
        let hold = g.constant(1.0, t1);
        let down = g.poly([1.0, -1.0 / t2], t2);
        let env = g.sequence([up, hold, down]);
        let carrier = g.sine(10e6, 0.0, t0 + t1 + t2);
        g.product([env, carrier])
    }

    #[test]
    fn sequence_duration_is_sum_of_parts() {
        let mut g = Graph::new();
        let a = g.constant(1.0, 1e-6);
        let b = g.constant(1.0, 2e-6);
        let c = g.constant(1.0, 3e-6);
        let s = g.sequence([a, b, c]);
        assert!((g.duration(s).unwrap() - 6e-6).abs() < 1e-18);
    }

    #[test]
    fn zero_of_zero_length() {
        let mut g = Graph::new();
        let z = g.zero(0.0);
        assert_eq!(g.duration(z).unwrap(), 0.0);
    }

    #[test]
    fn ramp_graph_has_total_duration() {
        let mut g = Graph::new();
        let root = ramp_graph(&mut g, 1e-6, 3e-6, 1e-6);
        g.validate(root).unwrap();
        assert_eq!(g.duration(root).unwrap(), 1e-6 + 3e-6 + 1e-6);
    }

    #[test]
    fn mixed_product_durations_are_rejected() {
        let mut g = Graph::new();
        let a = g.constant(1.0, 1e-6);
        let b = g.sine(1e6, 0.0, 2e-6);
        let p = g.product([a, b]);
        assert!(matches!(g.duration(p), Err(Error::MixedDuration { .. })));
    }

    #[test]
    fn unbound_duration_variable() {
        let mut g = Graph::new();
        let d = g.var("d");
        let z = g.zero(d);
        assert_eq!(g.duration(z), Err(Error::UnboundVar("d".into())));
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let mut g = Graph::new();
        let a = g.constant(1.0, 1e-6);
        let s = g.sequence([a]);
        if let Node::Sequence(children) = g.node_mut(s) {
            children.push(s);
        }
        assert_eq!(g.validate(s), Err(Error::CycleDetected(s)));
    }

    #[test]
    fn empty_sequence_is_bad_arity() {
        let mut g = Graph::new();
        let s = g.sequence([]);
        assert!(matches!(g.validate(s), Err(Error::BadArity { .. })));
    }

    #[test]
    fn negative_and_dangling() {
        let mut g = Graph::new();
        let z = g.zero(-1e-6);
        assert!(matches!(g.validate(z), Err(Error::NegativeDuration { .. })));
        let bogus = NodeId::from_index(999);
        let s = g.add(Node::Sequence(vec![bogus]));
        assert_eq!(g.validate(s), Err(Error::DanglingRef(bogus)));
    }

    #[test]
    fn vars_are_interned() {
        let mut g = Graph::new();
        let a = g.var("amp");
        let b = g.var("amp");
        assert_eq!(a, b);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn shared_subgraph_validates() {
        let mut g = Graph::new();
        let shared = g.constant(0.5, 1e-6);
        let s1 = g.sequence([shared, shared]);
        let s2 = g.sequence([s1, shared]);
        g.validate(s2).unwrap();
        assert!((g.duration(s2).unwrap() - 3e-6).abs() < 1e-18);
    }
}
