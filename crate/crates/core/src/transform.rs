//! Visitors and the rewrite passes run before munching.
//!
//! Passes never mutate existing nodes. A rewritten node is appended to the
//! arena and its parents are rebuilt on the way up; untouched subgraphs keep
//! their ids, so a pass that changes nothing returns the root it was given.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::ir::{ChannelPulse, Framerot, Graph, Node, NodeId, Oscillator, Tone};

/// Reachable nodes, children before parents, each exactly once.
pub fn post_order(graph: &Graph, root: NodeId) -> Vec<NodeId> {
    let mut seen = vec![false; graph.len()];
    let mut order = Vec::new();
    if !graph.contains(root) {
        return order;
    }
    let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
    seen[root.index()] = true;
    while let Some(&mut (id, ref mut next)) = stack.last_mut() {
        let edges = graph.node(id).edges();
        if *next < edges.len() {
            let child = edges[*next];
            *next += 1;
            if graph.contains(child) && !seen[child.index()] {
                seen[child.index()] = true;
                stack.push((child, 0));
            }
        } else {
            order.push(id);
            stack.pop();
        }
    }
    order
}

/// Calls `callback` once per reachable node in post-order.
pub fn visit_depth_first(graph: &Graph, root: NodeId, mut callback: impl FnMut(NodeId, &Node)) {
    for id in post_order(graph, root) {
        callback(id, graph.node(id));
    }
}

/// Per-variant callbacks; every method defaults to doing nothing.
#[allow(unused_variables)]
pub trait Visitor {
    fn visit_num(&mut self, id: NodeId, value: f64) {}
    fn visit_var(&mut self, id: NodeId, name: &str, bound: Option<f64>) {}
    fn visit_const(&mut self, id: NodeId, value: NodeId, duration: NodeId) {}
    fn visit_zero(&mut self, id: NodeId, duration: NodeId) {}
    fn visit_sine(&mut self, id: NodeId, osc: &Oscillator) {}
    fn visit_cosine(&mut self, id: NodeId, osc: &Oscillator) {}
    fn visit_poly(&mut self, id: NodeId, coefficients: &[NodeId], duration: NodeId) {}
    fn visit_gauss(&mut self, id: NodeId, amplitude: NodeId, mean: f64, sigma: f64, duration: NodeId) {}
    fn visit_sum(&mut self, id: NodeId, operands: &[NodeId]) {}
    fn visit_product(&mut self, id: NodeId, operands: &[NodeId]) {}
    fn visit_sequence(&mut self, id: NodeId, children: &[NodeId]) {}
    fn visit_clock(&mut self, id: NodeId, name: &str) {}
    fn visit_spline(&mut self, id: NodeId, knots: &[f64]) {}
    fn visit_discrete(&mut self, id: NodeId, steps: &[f64]) {}
    fn visit_tone(&mut self, id: NodeId, tone: &Tone) {}
    fn visit_framerot(&mut self, id: NodeId, framerot: &Framerot) {}
    fn visit_channel(&mut self, id: NodeId, channel: &ChannelPulse) {}
}

/// Depth-first post-order walk dispatching on node variant.
pub fn walk<V: Visitor + ?Sized>(graph: &Graph, root: NodeId, visitor: &mut V) {
    visit_depth_first(graph, root, |id, node| match node {
        Node::Num(v) => visitor.visit_num(id, *v),
        Node::Var { name, bound } => visitor.visit_var(id, name, *bound),
        Node::Const { value, duration } => visitor.visit_const(id, *value, *duration),
        Node::Zero { duration } => visitor.visit_zero(id, *duration),
        Node::Sine(o) => visitor.visit_sine(id, o),
        Node::Cosine(o) => visitor.visit_cosine(id, o),
        Node::Poly {
            coefficients,
            duration,
        } => visitor.visit_poly(id, coefficients, *duration),
        Node::Gauss {
            amplitude,
            mean,
            sigma,
            duration,
        } => visitor.visit_gauss(id, *amplitude, *mean, *sigma, *duration),
        Node::Sum(ops) => visitor.visit_sum(id, ops),
        Node::Product(ops) => visitor.visit_product(id, ops),
        Node::Sequence(children) => visitor.visit_sequence(id, children),
        Node::Clock(name) => visitor.visit_clock(id, name),
        Node::Spline(knots) => visitor.visit_spline(id, knots),
        Node::Discrete(steps) => visitor.visit_discrete(id, steps),
        Node::Tone(t) => visitor.visit_tone(id, t),
        Node::Framerot(f) => visitor.visit_framerot(id, f),
        Node::Channel(c) => visitor.visit_channel(id, c),
    });
}

/// Bottom-up rebuild. `rule` sees each node after its children were rewritten
/// and may return a replacement.
fn rewrite(
    graph: &mut Graph,
    root: NodeId,
    mut rule: impl FnMut(&mut Graph, NodeId) -> Option<NodeId>,
) -> NodeId {
    let mut memo: HashMap<NodeId, NodeId> = HashMap::new();
    for id in post_order(graph, root) {
        let node = graph.node(id);
        let changed = node.edges().iter().any(|e| memo.get(e).is_some_and(|m| m != e));
        let rebuilt = if changed {
            let node = node.map_edges(|e| memo.get(&e).copied().unwrap_or(e));
            graph.add(node)
        } else {
            id
        };
        let out = rule(graph, rebuilt).unwrap_or(rebuilt);
        memo.insert(id, out);
    }
    memo.get(&root).copied().unwrap_or(root)
}

/// Duration computable without any variable binding.
fn static_duration(graph: &Graph, id: NodeId) -> Option<f64> {
    let node = graph.node(id);
    if let Some(edge) = node.duration_edge() {
        return graph.constant_value(edge);
    }
    match node {
        Node::Sequence(children) => children
            .iter()
            .try_fold(0.0, |acc, c| static_duration(graph, *c).map(|d| acc + d)),
        Node::Sum(ops) | Node::Product(ops) => match ops.iter().find(|o| graph.is_waveform(**o)) {
            Some(o) => static_duration(graph, *o),
            None => Some(0.0),
        },
        _ => Some(0.0),
    }
}

fn is_static_zero(graph: &Graph, id: NodeId) -> bool {
    static_duration(graph, id) == Some(0.0)
}

/// Drops zero-length children from sequences and collapses single-child
/// sequences. Durations that depend on variables count as nonzero.
pub fn remove_zero_duration(graph: &mut Graph, root: NodeId) -> Result<NodeId> {
    if graph.is_waveform(root) && is_static_zero(graph, root) {
        return Err(Error::EmptyResult);
    }
    Ok(rewrite(graph, root, |g, id| {
        let Node::Sequence(children) = g.node(id) else {
            return None;
        };
        let kept: Vec<NodeId> = children
            .iter()
            .copied()
            .filter(|c| !is_static_zero(g, *c))
            .collect();
        match kept.len() {
            // all children empty: the parent drops this sequence
            0 => None,
            1 => Some(kept[0]),
            n if n == children.len() => None,
            _ => Some(g.sequence(kept)),
        }
    }))
}

/// Rewrites `Cosine(f, p)` as `Sine(f, p + pi/2)`.
pub fn cosine_to_sine(graph: &mut Graph, root: NodeId) -> NodeId {
    let mut shifted: HashMap<NodeId, NodeId> = HashMap::new();
    rewrite(graph, root, |g, id| {
        let Node::Cosine(o) = g.node(id) else {
            return None;
        };
        let mut o = o.clone();
        o.phase = match shifted.get(&o.phase) {
            Some(p) => *p,
            None => {
                let p = shift_phase(g, o.phase);
                shifted.insert(o.phase, p);
                p
            }
        };
        Some(g.add(Node::Sine(o)))
    })
}

fn shift_phase(g: &mut Graph, phase: NodeId) -> NodeId {
    match g.node(phase).clone() {
        Node::Num(v) => g.num(v + FRAC_PI_2),
        Node::Discrete(steps) => g.discrete(steps.iter().map(|v| v + FRAC_PI_2).collect()),
        Node::Spline(knots) => g.spline(knots.iter().map(|v| v + FRAC_PI_2).collect()),
        Node::Sequence(children)
            if children.iter().all(|c| {
                matches!(g.node(*c), Node::Const { value, .. } if matches!(g.node(*value), Node::Num(_)))
            }) =>
        {
            let steps: Vec<NodeId> = children
                .iter()
                .map(|c| {
                    let Node::Const { value, duration } = *g.node(*c) else {
                        unreachable!()
                    };
                    let Node::Num(v) = *g.node(value) else {
                        unreachable!()
                    };
                    let value = g.num(v + FRAC_PI_2);
                    g.add(Node::Const { value, duration })
                })
                .collect();
            g.sequence(steps)
        }
        _ => {
            let lead = g.num(FRAC_PI_2);
            g.sum([phase, lead])
        }
    }
}

/// Folds the literal operands of every `Sum`/`Product` into one leading `Num`
/// and drops additive and multiplicative identities.
pub fn fold_constants(graph: &mut Graph, root: NodeId) -> NodeId {
    rewrite(graph, root, |g, id| {
        let (ops, is_sum) = match g.node(id) {
            Node::Sum(ops) => (ops.clone(), true),
            Node::Product(ops) => (ops.clone(), false),
            _ => return None,
        };
        let (identity, op): (f64, fn(f64, f64) -> f64) = if is_sum {
            (0.0, |a, b| a + b)
        } else {
            (1.0, |a, b| a * b)
        };
        let literals: Vec<f64> = ops.iter().filter_map(|o| g.constant_value(*o)).collect();
        let rest: Vec<NodeId> = ops.iter().copied().filter(|o| !g.is_constant(*o)).collect();
        if literals.is_empty() {
            return None;
        }
        let folded = literals[1..].iter().fold(literals[0], |a, b| op(a, *b));
        if rest.is_empty() {
            return Some(g.num(folded));
        }
        // Identity removal is exact: 0 + x == x and 1 * x == x.
        let keep_literal = folded != identity;
        if !keep_literal && rest.len() == 1 {
            return Some(rest[0]);
        }
        let already_folded = literals.len() == 1
            && keep_literal
            && matches!(g.node(ops[0]), Node::Num(v) if *v == folded);
        if already_folded {
            return None;
        }
        let mut new_ops = Vec::with_capacity(rest.len() + 1);
        if keep_literal {
            new_ops.push(g.num(folded));
        }
        new_ops.extend(rest);
        Some(if is_sum { g.sum(new_ops) } else { g.product(new_ops) })
    })
}

/// Relative tolerance for treating two constant values as identical.
pub const MERGE_RTOL: f64 = 1e-12;

fn same_value(g: &Graph, a: NodeId, b: NodeId) -> bool {
    if a == b {
        return matches!(g.node(a), Node::Num(_) | Node::Var { .. }) || g.is_constant(a);
    }
    match (g.constant_value(a), g.constant_value(b)) {
        (Some(x), Some(y)) => x == y || (x - y).abs() <= MERGE_RTOL * x.abs().max(y.abs()),
        _ => false,
    }
}

/// Merges runs of adjacent `Const` children with equal values and literal
/// durations.
pub fn merge_identical_consts(graph: &mut Graph, root: NodeId) -> NodeId {
    rewrite(graph, root, |g, id| {
        let Node::Sequence(children) = g.node(id) else {
            return None;
        };
        let children = children.clone();
        let literal_const = |g: &Graph, c: NodeId| match g.node(c) {
            Node::Const { value, duration } => g.constant_value(*duration).map(|d| (*value, d)),
            _ => None,
        };
        let mut out: Vec<NodeId> = Vec::with_capacity(children.len());
        let mut changed = false;
        let mut i = 0;
        while i < children.len() {
            let Some((value, first_d)) = literal_const(g, children[i]) else {
                out.push(children[i]);
                i += 1;
                continue;
            };
            let mut total = first_d;
            let mut j = i + 1;
            while j < children.len() {
                match literal_const(g, children[j]) {
                    Some((v, d)) if same_value(g, value, v) => {
                        total += d;
                        j += 1;
                    }
                    _ => break,
                }
            }
            if j - i > 1 {
                changed = true;
                let duration = g.num(total);
                out.push(g.add(Node::Const { value, duration }));
            } else {
                out.push(children[i]);
            }
            i = j;
        }
        if !changed {
            return None;
        }
        Some(if out.len() == 1 { out[0] } else { g.sequence(out) })
    })
}

/// The fixed pass pipeline. A graph that is entirely zero-length is left
/// as is rather than rejected.
pub fn normalize(graph: &mut Graph, root: NodeId) -> NodeId {
    let root = match remove_zero_duration(graph, root) {
        Ok(r) => r,
        Err(_) => root,
    };
    let root = cosine_to_sine(graph, root);
    let root = fold_constants(graph, root);
    merge_identical_consts(graph, root)
}

/// Variable name to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Option<f64> {
        self.0.insert(name.into(), value)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Bindings(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Binds every named variable in place. Nothing is bound if any name is
/// unknown or any value is not finite.
pub fn substitute(graph: &mut Graph, bindings: &Bindings) -> Result<()> {
    let mut slots = Vec::with_capacity(bindings.len());
    for (name, value) in bindings.iter() {
        let id = graph
            .var_id(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        if !value.is_finite() {
            return Err(Error::NonFiniteBinding(name.to_string()));
        }
        slots.push((id, value));
    }
    for (id, value) in slots {
        graph.set_binding(id, Some(value));
    }
    Ok(())
}

pub fn reset_bindings(graph: &mut Graph) {
    graph.clear_bindings();
}

#[derive(Default)]
struct ClockFinder {
    found: bool,
}

impl Visitor for ClockFinder {
    fn visit_clock(&mut self, _: NodeId, _: &str) {
        self.found = true;
    }

    fn visit_sine(&mut self, _: NodeId, osc: &Oscillator) {
        self.found |= osc.clock.is_some();
    }
}

/// Whether phase-continuous operation is requested anywhere under `root`.
pub fn detect_clock(graph: &Graph, root: NodeId) -> bool {
    let mut finder = ClockFinder::default();
    walk(graph, root, &mut finder);
    finder.found
}

/// Names of the variables reachable from `root`.
pub fn reachable_vars(graph: &Graph, root: NodeId) -> Vec<String> {
    let mut names = Vec::new();
    visit_depth_first(graph, root, |_, node| {
        if let Node::Var { name, .. } = node {
            names.push(name.clone());
        }
    });
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(g: &Graph, root: NodeId, rate: f64) -> Vec<f64> {
        g.sample(root, rate).unwrap().samples
    }

    #[test]
    fn single_zero_visits_once() {
        let mut g = Graph::new();
        let z = g.zero(1e-6);
        let mut n = 0;
        // the duration literal is a node too
        visit_depth_first(&g, z, |id, _| {
            if id == z {
                n += 1
            }
        });
        assert_eq!(n, 1);
    }

    #[test]
    fn shared_child_visited_once() {
        let mut g = Graph::new();
        let shared = g.constant(0.5, 1e-6);
        let a = g.sequence([shared]);
        let b = g.sequence([shared]);
        let top = g.sequence([a, b]);
        let mut counts: HashMap<NodeId, usize> = HashMap::new();
        visit_depth_first(&g, top, |id, _| *counts.entry(id).or_default() += 1);
        assert!(counts.values().all(|c| *c == 1));
        assert_eq!(counts[&shared], 1);
        assert_eq!(post_order(&g, top).last(), Some(&top));
    }

    #[test]
    fn zero_children_dropped() {
        let mut g = Graph::new();
        let a = g.constant(1.0, 1e-6);
        let z = g.zero(0.0);
        let b = g.constant(2.0, 2e-6);
        let s = g.sequence([a, z, b]);
        let r = remove_zero_duration(&mut g, s).unwrap();
        assert_eq!(g.node(r), &Node::Sequence(vec![a, b]));
        let s2 = g.sequence([z, a]);
        assert_eq!(remove_zero_duration(&mut g, s2).unwrap(), a);
        assert_eq!(remove_zero_duration(&mut g, a).unwrap(), a);
        assert_eq!(remove_zero_duration(&mut g, z), Err(Error::EmptyResult));
    }

    #[test]
    fn cosine_becomes_sine() {
        let mut g = Graph::new();
        let c = g.cosine(1e6, 0.0, 1e-6);
        let r = cosine_to_sine(&mut g, c);
        let Node::Sine(o) = g.node(r) else { panic!() };
        assert_eq!(g.node(o.phase), &Node::Num(FRAC_PI_2));
        assert_eq!(samples(&g, c, 64e6), samples(&g, r, 64e6));

        let p = g.var("p");
        let c = g.cosine(1e6, p, 1e-6);
        let r = cosine_to_sine(&mut g, c);
        substitute(&mut g, &Bindings::from_iter([("p", 0.0)])).unwrap();
        let w = samples(&g, r, 64e6);
        for (k, v) in w.iter().enumerate() {
            let t = k as f64 / 64e6;
            assert!((v - (std::f64::consts::TAU * 1e6 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn folding() {
        let mut g = Graph::new();
        let two = g.num(2.0);
        let three = g.num(3.0);
        let p = g.product([two, three]);
        let r = fold_constants(&mut g, p);
        assert_eq!(g.node(r), &Node::Num(6.0));

        let one = g.num(1.0);
        let x = g.var("x");
        let s = g.sum([one, x, two]);
        let r = fold_constants(&mut g, s);
        let Node::Sum(ops) = g.node(r).clone() else { panic!() };
        assert_eq!(g.node(ops[0]), &Node::Num(3.0));
        assert_eq!(ops[1], x);
        substitute(&mut g, &Bindings::from_iter([("x", 0.123456789)])).unwrap();
        assert_eq!(g.scalar(s).unwrap(), g.scalar(r).unwrap());

        let sine = g.sine(1e6, 0.0, 1e-6);
        let p = g.product([one, sine]);
        assert_eq!(fold_constants(&mut g, p), sine);
        assert_eq!(fold_constants(&mut g, r), r);
    }

    #[test]
    fn merging() {
        let mut g = Graph::new();
        let a = g.constant(0.5, 1e-6);
        let b = g.constant(0.5, 2e-6);
        let s = g.sequence([a, b]);
        let r = merge_identical_consts(&mut g, s);
        assert_eq!(g.duration(r).unwrap(), 3e-6);
        assert!(matches!(g.node(r), Node::Const { .. }));

        let c = g.constant(0.6, 1e-6);
        let s = g.sequence([a, c]);
        assert_eq!(merge_identical_consts(&mut g, s), s);

        let five = g.sequence([a, a, a, a, a]);
        let r = merge_identical_consts(&mut g, five);
        assert!(matches!(g.node(r), Node::Const { .. }));
        assert!((g.duration(r).unwrap() - 5e-6).abs() < 1e-20);
    }

    #[test]
    fn bind_rebind_reset() {
        let mut g = Graph::new();
        let amp = g.var("amp");
        let s = g.sine(1e6, FRAC_PI_2, 1e-6);
        let p = g.product([amp, s]);
        substitute(&mut g, &Bindings::from_iter([("amp", 0.5)])).unwrap();
        assert_eq!(g.evaluate_at(p, 0.0, 0.0).unwrap(), 0.5);
        substitute(&mut g, &Bindings::from_iter([("amp", 0.7)])).unwrap();
        assert_eq!(g.evaluate_at(p, 0.0, 0.0).unwrap(), 0.7);
        reset_bindings(&mut g);
        assert_eq!(g.evaluate_at(p, 0.0, 0.0), Err(Error::UnboundVar("amp".into())));
        assert_eq!(
            substitute(&mut g, &Bindings::from_iter([("nope", 1.0)])),
            Err(Error::UnknownVariable("nope".into()))
        );
    }

    #[test]
    fn clock_detection() {
        let mut g = Graph::new();
        let clk = g.clock("c");
        let with = g.sine_clocked(1e6, 0.0, 1e-6, clk);
        let without = g.sine(1e6, 0.0, 1e-6);
        let z = g.zero(1e-6);
        assert!(detect_clock(&g, with));
        assert!(!detect_clock(&g, without));
        assert!(!detect_clock(&g, z));
    }
}
