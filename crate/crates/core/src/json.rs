//! JSON interchange: graph and schedule documents, bindings, channel maps,
//! and a canonical writer (sorted keys, 17 significant digits).
//!
//! A graph document is a node object:
//!
//! ```json
//! {"kind": "Product", "operands": [0.5, {"kind": "Sine", "frequency": 1e7,
//!   "phase": {"var": "phi"}, "duration": 1e-6}]}
//! ```
//!
//! Parameter edges accept bare numbers, `{"var": name}`, nested node objects
//! or `{"ref": id}`. Shared nodes live in a top-level `"defs"` table, in which
//! case the document is `{"defs": {...}, "root": node}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ir::{ChannelPulse, Framerot, Graph, Node, NodeId, Oscillator, Tone};
use crate::schedule::{Schedule, ScheduleBuilder};
use crate::transform::Bindings;

/// Formats like C's `%.17g`, always keeping a decimal point or exponent so the
/// token reads back as a float.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "Infinity".into()
        } else {
            "-Infinity".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut out = String::from(sign);
    if !(-4..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        out.push_str(head);
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
        let _ = write!(out, "e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    } else if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        let frac = frac.trim_end_matches('0');
        out.push_str(int);
        out.push('.');
        out.push_str(if frac.is_empty() { "0" } else { frac });
    } else {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(digits.trim_end_matches('0'));
    }
    out
}

/// Compact canonical JSON text.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

/// Serializes any record through [`to_canonical_string`].
pub fn to_canonical<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("records serialize to JSON");
    to_canonical_string(&value)
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
    }
}

pub fn parse_value(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::parse("", e.to_string()))
}

// ---------------------------------------------------------------------------
// graph documents
// ---------------------------------------------------------------------------

/// Parses a graph document into a fresh arena and validates it.
pub fn parse_graph(doc: &Value) -> Result<(Graph, NodeId)> {
    let mut graph = Graph::new();
    let root = parse_graph_into(&mut graph, doc)?;
    graph.validate(root)?;
    Ok((graph, root))
}

pub fn parse_graph_str(text: &str) -> Result<(Graph, NodeId)> {
    parse_graph(&parse_value(text)?)
}

/// Parses into an existing arena. The caller validates.
pub fn parse_graph_into(graph: &mut Graph, doc: &Value) -> Result<NodeId> {
    let (defs, root, root_ptr) = match doc.as_object() {
        Some(obj) if obj.contains_key("root") => {
            let defs = match obj.get("defs") {
                None => Map::new(),
                Some(Value::Object(d)) => d.clone(),
                Some(_) => return Err(Error::parse("/defs", "expected an object")),
            };
            (defs, &obj["root"], "/root")
        }
        _ => (Map::new(), doc, ""),
    };
    let mut reader = Reader::new(graph, defs);
    reader.node(root, root_ptr)
}

struct Reader<'g> {
    graph: &'g mut Graph,
    defs: Map<String, Value>,
    resolved: HashMap<String, NodeId>,
}

impl<'g> Reader<'g> {
    fn new(graph: &'g mut Graph, defs: Map<String, Value>) -> Self {
        Reader {
            graph,
            defs,
            resolved: HashMap::new(),
        }
    }

    fn node(&mut self, v: &Value, ptr: &str) -> Result<NodeId> {
        if let Some(x) = v.as_f64() {
            return Ok(self.graph.num(x));
        }
        let obj = v
            .as_object()
            .ok_or_else(|| Error::parse(ptr, "expected a node object or number"))?;
        if let Some(name) = obj.get("var") {
            let name = name
                .as_str()
                .ok_or_else(|| Error::parse(&format!("{ptr}/var"), "expected a string"))?;
            return Ok(self.graph.var(name));
        }
        if let Some(r) = obj.get("ref") {
            let name = r
                .as_str()
                .ok_or_else(|| Error::parse(&format!("{ptr}/ref"), "expected a string"))?;
            return self.reference(name, ptr);
        }
        let kind = obj
            .get("kind")
            .ok_or_else(|| Error::parse(ptr, "missing \"kind\""))?
            .as_str()
            .ok_or_else(|| Error::parse(&format!("{ptr}/kind"), "expected a string"))?;
        let node = match kind {
            "Num" => Node::Num(self.float(obj, "value", ptr)?),
            "Var" => {
                let name = self.string(obj, "name", ptr)?;
                return Ok(self.graph.var(&name));
            }
            "Const" => Node::Const {
                value: self.edge(obj, "value", ptr)?,
                duration: self.edge(obj, "duration", ptr)?,
            },
            "Zero" => Node::Zero {
                duration: self.edge(obj, "duration", ptr)?,
            },
            "Sine" => Node::Sine(self.oscillator(obj, ptr)?),
            "Cosine" => Node::Cosine(self.oscillator(obj, ptr)?),
            "Poly" => Node::Poly {
                coefficients: self.edge_list(obj, "coefficients", ptr)?,
                duration: self.edge(obj, "duration", ptr)?,
            },
            "Gauss" => Node::Gauss {
                amplitude: self.edge(obj, "amplitude", ptr)?,
                mean: self.float(obj, "mean", ptr)?,
                sigma: self.float(obj, "sigma", ptr)?,
                duration: self.edge(obj, "duration", ptr)?,
            },
            "Sum" => Node::Sum(self.edge_list(obj, "operands", ptr)?),
            "Product" => Node::Product(self.edge_list(obj, "operands", ptr)?),
            "Sequence" => Node::Sequence(self.edge_list(obj, "children", ptr)?),
            "Clock" => Node::Clock(self.string(obj, "id", ptr)?),
            "Spline" => Node::Spline(self.float_list(obj, "knots", ptr)?),
            "Discrete" => Node::Discrete(self.float_list(obj, "steps", ptr)?),
            "Tone" => Node::Tone(Tone {
                frequency: self.edge(obj, "frequency", ptr)?,
                phase: self.edge(obj, "phase", ptr)?,
                amplitude: self.edge(obj, "amplitude", ptr)?,
                sync_phase: self.flag(obj, "sync_phase", ptr)?,
                frame_index: self.frame_index(obj, ptr)?,
                feedback_enable: self.flag(obj, "feedback_enable", ptr)?,
            }),
            "Framerot" => Node::Framerot(Framerot {
                rotation: self.edge(obj, "rotation", ptr)?,
                apply_at_start: self.flag(obj, "apply_at_start", ptr)?,
                apply_at_end: self.flag(obj, "apply_at_end", ptr)?,
                clear_accumulator: self.flag(obj, "clear_accumulator", ptr)?,
            }),
            "Channel" => Node::Channel(ChannelPulse {
                tones: self.edge_list(obj, "tones", ptr)?,
                frames: self.edge_list(obj, "frames", ptr)?,
                duration: self.edge(obj, "duration", ptr)?,
            }),
            other => {
                return Err(Error::UnknownKind {
                    pointer: if ptr.is_empty() { "/".into() } else { ptr.into() },
                    kind: other.into(),
                })
            }
        };
        Ok(self.graph.add(node))
    }

    fn reference(&mut self, name: &str, ptr: &str) -> Result<NodeId> {
        if let Some(id) = self.resolved.get(name) {
            return Ok(*id);
        }
        let body = self
            .defs
            .get(name)
            .cloned()
            .ok_or_else(|| Error::parse(ptr, format!("undefined reference `{name}`")))?;
        // Reserve the slot first so self-references become real cycles that
        // validation reports.
        let slot = self.graph.add(Node::Num(f64::NAN));
        self.resolved.insert(name.to_string(), slot);
        let parsed = self.node(&body, &format!("/defs/{}", escape_pointer(name)))?;
        match self.graph.node(parsed) {
            Node::Var { .. } => {
                self.resolved.insert(name.to_string(), parsed);
                Ok(parsed)
            }
            node => {
                let node = node.clone();
                *self.graph.node_mut(slot) = node;
                Ok(slot)
            }
        }
    }

    fn field<'a>(&self, obj: &'a Map<String, Value>, key: &str, ptr: &str) -> Result<&'a Value> {
        obj.get(key)
            .ok_or_else(|| Error::parse(ptr, format!("missing field \"{key}\"")))
    }

    fn edge(&mut self, obj: &Map<String, Value>, key: &str, ptr: &str) -> Result<NodeId> {
        let v = self.field(obj, key, ptr)?.clone();
        self.node(&v, &format!("{ptr}/{key}"))
    }

    fn edge_list(&mut self, obj: &Map<String, Value>, key: &str, ptr: &str) -> Result<Vec<NodeId>> {
        let items = self
            .field(obj, key, ptr)?
            .as_array()
            .ok_or_else(|| Error::parse(&format!("{ptr}/{key}"), "expected an array"))?
            .clone();
        items
            .iter()
            .enumerate()
            .map(|(i, item)| self.node(item, &format!("{ptr}/{key}/{i}")))
            .collect()
    }

    fn float(&self, obj: &Map<String, Value>, key: &str, ptr: &str) -> Result<f64> {
        self.field(obj, key, ptr)?
            .as_f64()
            .ok_or_else(|| Error::parse(&format!("{ptr}/{key}"), "expected a number"))
    }

    fn float_list(&self, obj: &Map<String, Value>, key: &str, ptr: &str) -> Result<Vec<f64>> {
        let items = self
            .field(obj, key, ptr)?
            .as_array()
            .ok_or_else(|| Error::parse(&format!("{ptr}/{key}"), "expected an array"))?;
        items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64()
                    .ok_or_else(|| Error::parse(&format!("{ptr}/{key}/{i}"), "expected a number"))
            })
            .collect()
    }

    fn string(&self, obj: &Map<String, Value>, key: &str, ptr: &str) -> Result<String> {
        self.field(obj, key, ptr)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::parse(&format!("{ptr}/{key}"), "expected a string"))
    }

    fn flag(&self, obj: &Map<String, Value>, key: &str, ptr: &str) -> Result<bool> {
        match obj.get(key) {
            None => Ok(false),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| Error::parse(&format!("{ptr}/{key}"), "expected a boolean")),
        }
    }

    fn frame_index(&self, obj: &Map<String, Value>, ptr: &str) -> Result<Option<u8>> {
        match obj.get("frame_index") {
            None | Some(Value::Null) => Ok(None),
            Some(v) => match v.as_u64() {
                Some(i @ 0..=1) => Ok(Some(i as u8)),
                _ => Err(Error::parse(
                    &format!("{ptr}/frame_index"),
                    "expected 0, 1 or null",
                )),
            },
        }
    }

    fn oscillator(&mut self, obj: &Map<String, Value>, ptr: &str) -> Result<Oscillator> {
        let clock = match obj.get("clock") {
            None | Some(Value::Null) => None,
            Some(v) => Some(self.node(&v.clone(), &format!("{ptr}/clock"))?),
        };
        Ok(Oscillator {
            frequency: self.edge(obj, "frequency", ptr)?,
            phase: self.edge(obj, "phase", ptr)?,
            duration: self.edge(obj, "duration", ptr)?,
            clock,
        })
    }
}

fn escape_pointer(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

/// Emits the subgraph under `root`. Nodes with several parents (other than
/// literals and variables) go to `"defs"`, named in post-order.
pub fn emit_graph(graph: &Graph, root: NodeId) -> Value {
    let order = crate::transform::post_order(graph, root);
    let mut parents: HashMap<NodeId, usize> = HashMap::new();
    for id in &order {
        for e in graph.node(*id).edges() {
            *parents.entry(e).or_default() += 1;
        }
    }
    let mut names: HashMap<NodeId, String> = HashMap::new();
    for id in &order {
        let inline = matches!(graph.node(*id), Node::Num(_) | Node::Var { .. });
        if !inline && parents.get(id).copied().unwrap_or(0) > 1 {
            names.insert(*id, format!("n{}", names.len()));
        }
    }
    let writer = Writer { graph, names: &names };
    let body = writer.inline(root);
    if names.is_empty() {
        return body;
    }
    let defs: Map<String, Value> = names
        .iter()
        .map(|(id, name)| (name.clone(), writer.inline(*id)))
        .collect();
    let mut doc = Map::new();
    doc.insert("defs".into(), Value::Object(defs));
    doc.insert("root".into(), body);
    Value::Object(doc)
}

pub fn emit_graph_string(graph: &Graph, root: NodeId) -> String {
    to_canonical_string(&emit_graph(graph, root))
}

struct Writer<'a> {
    graph: &'a Graph,
    names: &'a HashMap<NodeId, String>,
}

impl Writer<'_> {
    fn edge(&self, id: NodeId) -> Value {
        match self.names.get(&id) {
            Some(name) => serde_json::json!({ "ref": name }),
            None => self.inline(id),
        }
    }

    fn edges(&self, ids: &[NodeId]) -> Value {
        Value::Array(ids.iter().map(|id| self.edge(*id)).collect())
    }

    fn inline(&self, id: NodeId) -> Value {
        let mut m = Map::new();
        let node = self.graph.node(id);
        match node {
            Node::Num(v) => return Value::from(*v),
            Node::Var { name, .. } => return serde_json::json!({ "var": name }),
            Node::Const { value, duration } => {
                m.insert("value".into(), self.edge(*value));
                m.insert("duration".into(), self.edge(*duration));
            }
            Node::Zero { duration } => {
                m.insert("duration".into(), self.edge(*duration));
            }
            Node::Sine(o) | Node::Cosine(o) => {
                m.insert("frequency".into(), self.edge(o.frequency));
                m.insert("phase".into(), self.edge(o.phase));
                m.insert("duration".into(), self.edge(o.duration));
                if let Some(c) = o.clock {
                    m.insert("clock".into(), self.edge(c));
                }
            }
            Node::Poly {
                coefficients,
                duration,
            } => {
                m.insert("coefficients".into(), self.edges(coefficients));
                m.insert("duration".into(), self.edge(*duration));
            }
            Node::Gauss {
                amplitude,
                mean,
                sigma,
                duration,
            } => {
                m.insert("amplitude".into(), self.edge(*amplitude));
                m.insert("mean".into(), Value::from(*mean));
                m.insert("sigma".into(), Value::from(*sigma));
                m.insert("duration".into(), self.edge(*duration));
            }
            Node::Sum(ops) | Node::Product(ops) => {
                m.insert("operands".into(), self.edges(ops));
            }
            Node::Sequence(children) => {
                m.insert("children".into(), self.edges(children));
            }
            Node::Clock(name) => {
                m.insert("id".into(), Value::from(name.clone()));
            }
            Node::Spline(knots) => {
                m.insert("knots".into(), Value::from(knots.clone()));
            }
            Node::Discrete(steps) => {
                m.insert("steps".into(), Value::from(steps.clone()));
            }
            Node::Tone(t) => {
                m.insert("frequency".into(), self.edge(t.frequency));
                m.insert("phase".into(), self.edge(t.phase));
                m.insert("amplitude".into(), self.edge(t.amplitude));
                m.insert("sync_phase".into(), Value::from(t.sync_phase));
                m.insert("frame_index".into(), t.frame_index.map_or(Value::Null, Value::from));
                m.insert("feedback_enable".into(), Value::from(t.feedback_enable));
            }
            Node::Framerot(f) => {
                m.insert("rotation".into(), self.edge(f.rotation));
                m.insert("apply_at_start".into(), Value::from(f.apply_at_start));
                m.insert("apply_at_end".into(), Value::from(f.apply_at_end));
                m.insert("clear_accumulator".into(), Value::from(f.clear_accumulator));
            }
            Node::Channel(c) => {
                m.insert("tones".into(), self.edges(&c.tones));
                m.insert("frames".into(), self.edges(&c.frames));
                m.insert("duration".into(), self.edge(c.duration));
            }
        }
        m.insert("kind".into(), Value::from(node.kind()));
        Value::Object(m)
    }
}

// ---------------------------------------------------------------------------
// schedule documents
// ---------------------------------------------------------------------------

/// `{"channels": [...], "body": item | [items], "defs"?: {...}}` where an item is
/// `{"seq": [items]}`, `{"par": [items]}` or `{"play": {"channel", "graph"}}`.
pub fn parse_schedule(doc: &Value) -> Result<Schedule> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse("", "expected a schedule object"))?;
    let mut builder = ScheduleBuilder::new();
    if let Some(channels) = obj.get("channels") {
        let channels = channels
            .as_array()
            .ok_or_else(|| Error::parse("/channels", "expected an array"))?;
        for (i, c) in channels.iter().enumerate() {
            let name = c
                .as_str()
                .ok_or_else(|| Error::parse(&format!("/channels/{i}"), "expected a string"))?;
            builder.declare_channel(name)?;
        }
    }
    let defs = match obj.get("defs") {
        None => Map::new(),
        Some(Value::Object(d)) => d.clone(),
        Some(_) => return Err(Error::parse("/defs", "expected an object")),
    };
    let body = obj
        .get("body")
        .ok_or_else(|| Error::parse("", "missing field \"body\""))?;
    let mut plays = Vec::new();
    {
        let mut reader = Reader::new(builder.graph_mut(), defs);
        match body {
            // a bare list is shorthand for one sequential context
            Value::Array(items) => {
                plays.push(BodyOp::Open(false));
                for (i, child) in items.iter().enumerate() {
                    collect_plays(&mut reader, child, &format!("/body/{i}"), &mut plays)?;
                }
                plays.push(BodyOp::Close);
            }
            item => collect_plays(&mut reader, item, "/body", &mut plays)?,
        }
    }
    for op in plays {
        match op {
            BodyOp::Open(parallel) => {
                if parallel {
                    builder.open_parallel()
                } else {
                    builder.open_sequential()
                }
            }
            BodyOp::Close => builder.close()?,
            BodyOp::Play(channel, root) => {
                builder.graph().validate(root)?;
                builder.play(&channel, root)?
            }
        }
    }
    builder.finalize()
}

pub fn parse_schedule_str(text: &str) -> Result<Schedule> {
    parse_schedule(&parse_value(text)?)
}

enum BodyOp {
    Open(bool),
    Close,
    Play(String, NodeId),
}

fn collect_plays(reader: &mut Reader<'_>, item: &Value, ptr: &str, ops: &mut Vec<BodyOp>) -> Result<()> {
    let obj = item
        .as_object()
        .ok_or_else(|| Error::parse(ptr, "expected a schedule item"))?;
    let (key, value) = match (obj.len(), obj.iter().next()) {
        (1, Some(kv)) => kv,
        _ => return Err(Error::parse(ptr, "expected exactly one of seq, par, play")),
    };
    let ptr = format!("{ptr}/{key}");
    match key.as_str() {
        "seq" | "par" => {
            let items = value
                .as_array()
                .ok_or_else(|| Error::parse(&ptr, "expected an array"))?;
            ops.push(BodyOp::Open(key == "par"));
            for (i, child) in items.iter().enumerate() {
                collect_plays(reader, child, &format!("{ptr}/{i}"), ops)?;
            }
            ops.push(BodyOp::Close);
        }
        "play" => {
            let play = value
                .as_object()
                .ok_or_else(|| Error::parse(&ptr, "expected an object"))?;
            let channel = reader.string(play, "channel", &ptr)?;
            let root = reader.edge(play, "graph", &ptr)?;
            ops.push(BodyOp::Play(channel, root));
        }
        other => return Err(Error::parse(&ptr, format!("unknown schedule item `{other}`"))),
    }
    Ok(())
}

/// True when the document looks like a schedule rather than a graph.
pub fn is_schedule_document(doc: &Value) -> bool {
    doc.as_object().is_some_and(|o| o.contains_key("body"))
}

// ---------------------------------------------------------------------------
// small documents
// ---------------------------------------------------------------------------

pub fn parse_bindings(doc: &Value) -> Result<Bindings> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse("", "expected an object of name -> number"))?;
    let mut bindings = Bindings::new();
    for (name, v) in obj {
        let x = v
            .as_f64()
            .ok_or_else(|| Error::parse(&format!("/{}", escape_pointer(name)), "expected a number"))?;
        bindings.insert(name.clone(), x);
    }
    Ok(bindings)
}

pub fn parse_channel_map(doc: &Value) -> Result<BTreeMap<String, usize>> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse("", "expected an object of channel -> index"))?;
    obj.iter()
        .map(|(name, v)| {
            v.as_u64()
                .map(|i| (name.clone(), i as usize))
                .ok_or_else(|| {
                    Error::parse(
                        &format!("/{}", escape_pointer(name)),
                        "expected a non-negative integer",
                    )
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(format_f64(0.0), "0.0");
        assert_eq!(format_f64(0.5), "0.5");
        assert_eq!(format_f64(1e-6), "9.9999999999999995e-07");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(10e6), "10000000.0");
        assert_eq!(format_f64(-2.5), "-2.5");
        assert_eq!(format_f64(1e17), "1e+17");
        assert_eq!(format_f64(1e-4), "0.0001");
        for x in [1e-6, 0.1, 3.0e8, -7.25e-13, std::f64::consts::PI, 1e300] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn canonical_sorts_keys() {
        let v: Value = serde_json::from_str(r#"{"b":1,"a":[2.5,{"d":null,"c":true}]}"#).unwrap();
        assert_eq!(to_canonical_string(&v), r#"{"a":[2.5,{"c":true,"d":null}],"b":1}"#);
    }

    #[test]
    fn zero_document() {
        let (g, root) = parse_graph_str(r#"{"kind":"Zero","duration":1e-6}"#).unwrap();
        assert!(matches!(g.node(root), Node::Zero { .. }));
        assert_eq!(g.duration(root).unwrap(), 1e-6);
    }

    #[test]
    fn sine_without_frequency_is_a_parse_error() {
        let err = parse_graph_str(r#"{"kind":"Sine"}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let err = parse_graph_str(r#"{"kind":"Sum","operands":[1,{"kind":"Sine","phase":0,"duration":1}]}"#)
            .unwrap_err();
        match err {
            Error::Parse { pointer, .. } => assert_eq!(pointer, "/operands/1"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_kind() {
        let err = parse_graph_str(r#"{"kind":"Square","duration":1}"#).unwrap_err();
        assert!(matches!(err, Error::UnknownKind { .. }));
    }

    #[test]
    fn shared_definitions_round_trip() {
        let text = r#"{"defs":{"p":{"kind":"Const","value":0.5,"duration":1e-6}},
                       "root":{"kind":"Sequence","children":[{"ref":"p"},{"ref":"p"}]}}"#;
        let (g, root) = parse_graph_str(text).unwrap();
        let Node::Sequence(children) = g.node(root) else { panic!() };
        assert_eq!(children[0], children[1]);
        let once = emit_graph_string(&g, root);
        let (g2, root2) = parse_graph_str(&once).unwrap();
        assert_eq!(emit_graph_string(&g2, root2), once);
    }

    #[test]
    fn self_reference_is_a_cycle() {
        let text = r#"{"defs":{"a":{"kind":"Sequence","children":[{"ref":"a"}]}},"root":{"ref":"a"}}"#;
        assert!(matches!(parse_graph_str(text), Err(Error::CycleDetected(_))));
    }
}
