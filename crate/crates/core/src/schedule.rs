//! Multi-channel schedules built from nested sequential and parallel contexts.
//!
//! Every item in a sequential context starts when the previous one ends on
//! all channels of the context; channels an item does not touch are padded
//! with `Zero` for its length. Items in a parallel context start together and
//! shorter branches get a trailing `Zero`.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::ir::{Graph, Node, NodeId};
use crate::transform::{self, Bindings};

/// Non-empty channel name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(String);

impl ChannelId {
    pub fn new(name: &str) -> Result<Self> {
        if name.trim().is_empty() {
            return Err(Error::InvalidChannel(name.to_string()));
        }
        Ok(ChannelId(name.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for ChannelId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Length of a block: a literal, or a scalar node when it depends on variables.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Span {
    Fixed(f64),
    Symbolic(NodeId),
}

impl Span {
    fn is_empty(self) -> bool {
        self == Span::Fixed(0.0)
    }
}

#[derive(Debug, Clone)]
struct Block {
    duration: Span,
    lanes: BTreeMap<ChannelId, Vec<NodeId>>,
}

#[derive(Debug)]
struct Frame {
    parallel: bool,
    items: Vec<Block>,
}

#[derive(Debug, Default)]
pub struct ScheduleBuilder {
    graph: Graph,
    declared: BTreeSet<ChannelId>,
    stack: Vec<Frame>,
    top: Vec<Block>,
}

impl ScheduleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds into an existing arena.
    pub fn with_graph(graph: Graph) -> Self {
        ScheduleBuilder {
            graph,
            ..Self::default()
        }
    }

    pub fn with_channels<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut b = Self::new();
        for n in names {
            b.declare_channel(n)?;
        }
        Ok(b)
    }

    pub fn declare_channel(&mut self, name: &str) -> Result<()> {
        self.declared.insert(ChannelId::new(name)?);
        Ok(())
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut Graph {
        &mut self.graph
    }

    pub fn open_sequential(&mut self) {
        self.stack.push(Frame {
            parallel: false,
            items: Vec::new(),
        });
    }

    pub fn open_parallel(&mut self) {
        self.stack.push(Frame {
            parallel: true,
            items: Vec::new(),
        });
    }

    pub fn close(&mut self) -> Result<()> {
        let frame = self.stack.pop().ok_or(Error::UnbalancedClose)?;
        let block = if frame.parallel {
            combine_parallel(&mut self.graph, frame.items)?
        } else {
            combine_sequential(&mut self.graph, frame.items)
        };
        self.push_block(block)
    }

    pub fn play(&mut self, channel: &str, root: NodeId) -> Result<()> {
        if self.stack.is_empty() {
            return Err(Error::NoOpenContext);
        }
        let channel = ChannelId::new(channel)?;
        let duration = span_of(&mut self.graph, root);
        let block = Block {
            duration,
            lanes: BTreeMap::from([(channel, vec![root])]),
        };
        self.push_block(block)
    }

    fn push_block(&mut self, block: Block) -> Result<()> {
        match self.stack.last_mut() {
            None => self.top.push(block),
            Some(frame) => {
                if frame.parallel {
                    for item in &frame.items {
                        if let Some(c) = block.lanes.keys().find(|c| item.lanes.contains_key(*c)) {
                            return Err(Error::DuplicateChannelInParallel(c.to_string()));
                        }
                    }
                }
                frame.items.push(block);
            }
        }
        Ok(())
    }

    /// Runs `body` inside a sequential context.
    pub fn sequential(&mut self, body: impl FnOnce(&mut Self) -> Result<()>) -> Result<()> {
        self.open_sequential();
        body(self)?;
        self.close()
    }

    /// Runs `body` inside a parallel context.
    pub fn parallel(&mut self, body: impl FnOnce(&mut Self) -> Result<()>) -> Result<()> {
        self.open_parallel();
        body(self)?;
        self.close()
    }

    pub fn finalize(mut self) -> Result<Schedule> {
        if !self.stack.is_empty() {
            return Err(Error::UnbalancedClose);
        }
        let top = std::mem::take(&mut self.top);
        let block = combine_sequential(&mut self.graph, top);
        let mut graph = self.graph;
        let mut names: BTreeSet<ChannelId> = self.declared;
        names.extend(block.lanes.keys().cloned());
        let mut lanes = block.lanes;
        let mut channels = BTreeMap::new();
        for name in names {
            let segs = lanes.remove(&name).unwrap_or_default();
            let root = match segs.len() {
                0 => zero_of(&mut graph, block.duration),
                1 => segs[0],
                _ => graph.sequence(segs),
            };
            let root = transform::normalize(&mut graph, root);
            channels.insert(name, root);
        }
        let mut parameters = BTreeMap::new();
        for root in channels.values() {
            for name in transform::reachable_vars(&graph, *root) {
                let id = graph.var_id(&name).expect("interned variable");
                parameters.insert(name, id);
            }
        }
        Ok(Schedule {
            graph,
            channels,
            duration: block.duration,
            parameters,
        })
    }
}

fn zero_of(graph: &mut Graph, span: Span) -> NodeId {
    match span {
        Span::Fixed(d) => graph.zero(d),
        Span::Symbolic(d) => graph.zero(d),
    }
}

/// Length of a waveform as a literal when possible, otherwise as a scalar node.
fn span_of(graph: &mut Graph, root: NodeId) -> Span {
    if let Some(d) = literal_duration(graph, root) {
        return Span::Fixed(d);
    }
    let node = graph.node(root).clone();
    if let Some(edge) = node.duration_edge() {
        return Span::Symbolic(edge);
    }
    match node {
        Node::Sequence(children) => {
            let parts: Vec<Span> = children.iter().map(|c| span_of(graph, *c)).collect();
            add_spans(graph, &parts)
        }
        Node::Sum(ops) | Node::Product(ops) => {
            match ops.iter().find(|o| graph.is_waveform(**o)) {
                Some(o) => span_of(graph, *o),
                None => Span::Fixed(0.0),
            }
        }
        _ => Span::Fixed(0.0),
    }
}

fn literal_duration(graph: &Graph, id: NodeId) -> Option<f64> {
    let node = graph.node(id);
    if let Some(edge) = node.duration_edge() {
        return graph.constant_value(edge);
    }
    match node {
        Node::Sequence(children) => children
            .iter()
            .try_fold(0.0, |acc, c| literal_duration(graph, *c).map(|d| acc + d)),
        Node::Sum(ops) | Node::Product(ops) => match ops.iter().find(|o| graph.is_waveform(**o)) {
            Some(o) => literal_duration(graph, *o),
            None => Some(0.0),
        },
        _ => Some(0.0),
    }
}

fn add_spans(graph: &mut Graph, parts: &[Span]) -> Span {
    if parts.iter().all(|p| matches!(p, Span::Fixed(_))) {
        let total = parts.iter().fold(0.0, |acc, p| match p {
            Span::Fixed(d) => acc + d,
            Span::Symbolic(_) => acc,
        });
        return Span::Fixed(total);
    }
    let terms: Vec<NodeId> = parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| match *p {
            Span::Fixed(d) => graph.num(d),
            Span::Symbolic(n) => n,
        })
        .collect();
    if terms.len() == 1 {
        Span::Symbolic(terms[0])
    } else {
        Span::Symbolic(graph.sum(terms))
    }
}

fn combine_sequential(graph: &mut Graph, items: Vec<Block>) -> Block {
    if items.len() == 1 {
        return items.into_iter().next().expect("one item");
    }
    let channels: BTreeSet<ChannelId> = items
        .iter()
        .flat_map(|b| b.lanes.keys().cloned())
        .collect();
    let mut lanes: BTreeMap<ChannelId, Vec<NodeId>> = BTreeMap::new();
    let mut pads: Vec<Option<NodeId>> = vec![None; items.len()];
    for channel in channels {
        let mut lane = Vec::new();
        for (i, item) in items.iter().enumerate() {
            match item.lanes.get(&channel) {
                Some(segs) => lane.extend_from_slice(segs),
                None if item.duration.is_empty() => {}
                None => {
                    // one pad node per block, shared by every idle channel
                    let pad = *pads[i].get_or_insert_with(|| zero_of(graph, item.duration));
                    lane.push(pad);
                }
            }
        }
        lanes.insert(channel, lane);
    }
    let spans: Vec<Span> = items.iter().map(|b| b.duration).collect();
    Block {
        duration: add_spans(graph, &spans),
        lanes,
    }
}

fn combine_parallel(graph: &mut Graph, items: Vec<Block>) -> Result<Block> {
    let spans: Vec<Span> = items
        .iter()
        .map(|b| b.duration)
        .filter(|s| !s.is_empty())
        .collect();
    let duration = if spans.is_empty() {
        Span::Fixed(0.0)
    } else if spans.iter().all(|s| matches!(s, Span::Fixed(_))) {
        Span::Fixed(spans.iter().fold(0.0, |m, s| match s {
            Span::Fixed(d) => m.max(*d),
            Span::Symbolic(_) => m,
        }))
    } else if spans.iter().all(|s| *s == spans[0]) {
        spans[0]
    } else {
        return Err(Error::SymbolicPadding);
    };
    let mut out = Block {
        duration,
        lanes: BTreeMap::new(),
    };
    for item in items {
        let pad = match (item.duration, duration) {
            (a, b) if a == b => None,
            (Span::Fixed(a), Span::Fixed(b)) => Some(Span::Fixed(b - a)),
            (Span::Fixed(_), sym) => Some(sym),
            _ => unreachable!("symbolic branches are identical"),
        };
        for (channel, mut segs) in item.lanes {
            if let Some(p) = pad {
                segs.push(zero_of(graph, p));
            }
            out.lanes.insert(channel, segs);
        }
    }
    Ok(out)
}

/// A finalized schedule. Structure is fixed; only variable bindings change.
#[derive(Debug, Clone)]
pub struct Schedule {
    graph: Graph,
    channels: BTreeMap<ChannelId, NodeId>,
    duration: Span,
    parameters: BTreeMap<String, NodeId>,
}

impl Schedule {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn channels(&self) -> &BTreeMap<ChannelId, NodeId> {
        &self.channels
    }

    pub fn root(&self, channel: &str) -> Result<NodeId> {
        self.channels
            .get(channel)
            .copied()
            .ok_or_else(|| Error::UnknownChannel(channel.to_string()))
    }

    /// Fails with `UnboundVar` while a duration variable is unbound.
    pub fn total_duration(&self) -> Result<f64> {
        match self.duration {
            Span::Fixed(d) => Ok(d),
            Span::Symbolic(n) => self.graph.scalar(n),
        }
    }

    pub fn parameters(&self) -> &BTreeMap<String, NodeId> {
        &self.parameters
    }

    pub fn bind_parameters(&mut self, bindings: &Bindings) -> Result<()> {
        if let Some((name, _)) = bindings.iter().find(|(n, _)| !self.parameters.contains_key(*n)) {
            return Err(Error::UnknownVariable(name.to_string()));
        }
        transform::substitute(&mut self.graph, bindings)
    }

    pub fn reset_bindings(&mut self) {
        transform::reset_bindings(&mut self.graph);
    }

    /// Repeats the schedule `n` times. Each channel becomes a `Sequence` of
    /// `n` references to the same root.
    pub fn tile(mut self, n: usize) -> Result<Schedule> {
        if n == 0 {
            return Err(Error::ZeroRepetitions);
        }
        if n == 1 {
            return Ok(self);
        }
        for root in self.channels.values_mut() {
            *root = self.graph.sequence(std::iter::repeat(*root).take(n));
        }
        self.duration = match self.duration {
            Span::Fixed(d) => Span::Fixed((0..n).fold(0.0, |acc, _| acc + d)),
            Span::Symbolic(s) => Span::Symbolic(self.graph.sum(std::iter::repeat(s).take(n))),
        };
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_takes_longest_branch() {
        let mut b = ScheduleBuilder::new();
        let p1 = b.graph_mut().constant(1.0, 1e-6);
        let p2 = b.graph_mut().constant(1.0, 2e-6);
        b.parallel(|b| {
            b.play("ch0", p1)?;
            b.play("ch1", p2)
        })
        .unwrap();
        let s = b.finalize().unwrap();
        assert_eq!(s.total_duration().unwrap(), 2e-6);
        let ch0 = s.root("ch0").unwrap();
        let Node::Sequence(segs) = s.graph().node(ch0) else {
            panic!("expected padding")
        };
        assert_eq!(segs[0], p1);
        assert!(matches!(s.graph().node(segs[1]), Node::Zero { .. }));
        assert_eq!(s.graph().duration(segs[1]).unwrap(), 1e-6);
    }

    #[test]
    fn sequential_concatenates() {
        let mut b = ScheduleBuilder::new();
        let a = b.graph_mut().constant(1.0, 1e-6);
        let c = b.graph_mut().constant(0.5, 1e-6);
        b.sequential(|b| {
            b.play("ch0", a)?;
            b.play("ch0", c)
        })
        .unwrap();
        let s = b.finalize().unwrap();
        assert_eq!(s.graph().node(s.root("ch0").unwrap()), &Node::Sequence(vec![a, c]));
    }

    #[test]
    fn context_errors() {
        let mut b = ScheduleBuilder::new();
        let a = b.graph_mut().constant(1.0, 1e-6);
        assert_eq!(b.play("ch0", a), Err(Error::NoOpenContext));
        assert_eq!(b.close(), Err(Error::UnbalancedClose));
        b.open_parallel();
        b.play("ch0", a).unwrap();
        assert_eq!(b.play("ch0", a), Err(Error::DuplicateChannelInParallel("ch0".into())));
        assert!(matches!(b.finalize(), Err(Error::UnbalancedClose)));
        assert!(matches!(ChannelId::new(""), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn unaddressed_channel_is_zero() {
        let mut b = ScheduleBuilder::with_channels(["ch0", "ch1"]).unwrap();
        let a = b.graph_mut().constant(1.0, 3e-6);
        b.sequential(|b| b.play("ch0", a)).unwrap();
        let s = b.finalize().unwrap();
        let ch1 = s.root("ch1").unwrap();
        assert!(matches!(s.graph().node(ch1), Node::Zero { .. }));
        assert_eq!(s.graph().duration(ch1).unwrap(), 3e-6);
    }

    #[test]
    fn empty_builder() {
        let s = ScheduleBuilder::with_channels(["a", "b"]).unwrap().finalize().unwrap();
        assert_eq!(s.total_duration().unwrap(), 0.0);
        for root in s.channels().values() {
            assert_eq!(s.graph().duration(*root).unwrap(), 0.0);
        }
    }

    #[test]
    fn tiling_shares_the_fragment() {
        let mut b = ScheduleBuilder::new();
        let a = b.graph_mut().constant(1.0, 1e-6);
        let c = b.graph_mut().constant(0.5, 2e-6);
        b.sequential(|b| {
            b.play("ch0", a)?;
            b.play("ch0", c)
        })
        .unwrap();
        let s = b.finalize().unwrap();
        let before = s.graph().len();
        let t = s.tile(200).unwrap();
        let root = t.root("ch0").unwrap();
        let Node::Sequence(children) = t.graph().node(root) else { panic!() };
        assert_eq!(children.len(), 200);
        assert!(t.graph().len() <= before + 1);
        assert!((t.total_duration().unwrap() - 600e-6).abs() < 1e-15);
    }

    #[test]
    fn symbolic_sequential_padding() {
        let mut b = ScheduleBuilder::new();
        let g = b.graph_mut();
        let d0 = g.var("d0");
        let d1 = g.var("d1");
        let p0 = g.constant(1.0, d0);
        let p1 = g.constant(1.0, d1);
        b.sequential(|b| {
            b.play("ch0", p0)?;
            b.play("ch1", p1)
        })
        .unwrap();
        let mut s = b.finalize().unwrap();
        assert_eq!(s.parameters().len(), 2);
        s.bind_parameters(&Bindings::from_iter([("d0", 1e-6), ("d1", 2e-6)])).unwrap();
        assert!((s.total_duration().unwrap() - 3e-6).abs() < 1e-18);
        for root in s.channels().values() {
            assert!((s.graph().duration(*root).unwrap() - 3e-6).abs() < 1e-18);
        }
        assert!(matches!(
            s.bind_parameters(&Bindings::from_iter([("zz", 1.0)])),
            Err(Error::UnknownVariable(_))
        ));
    }
}
