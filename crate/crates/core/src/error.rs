use thiserror::Error;

use crate::ir::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // graph structure
    #[error("edge points at missing node {0}")]
    DanglingRef(NodeId),
    #[error("cycle detected through node {0}")]
    CycleDetected(NodeId),
    #[error("bad arity on {kind} node {node}: {detail}")]
    BadArity {
        node: NodeId,
        kind: &'static str,
        detail: String,
    },
    #[error("negative duration {value} s on node {node}")]
    NegativeDuration { node: NodeId, value: f64 },
    #[error("invalid parameter on node {node}: {detail}")]
    InvalidParameter { node: NodeId, detail: String },
    #[error("waveform operands of node {node} disagree on duration ({first} s vs {other} s)")]
    MixedDuration { node: NodeId, first: f64, other: f64 },

    // evaluation
    #[error("variable `{0}` is unbound")]
    UnboundVar(String),
    #[error("time {t} s outside [0, {duration}) s")]
    OutOfRange { t: f64, duration: f64 },
    #[error("node {node} ({kind}) cannot be used as a scalar parameter")]
    NotScalar { node: NodeId, kind: &'static str },
    #[error("cannot integrate {kind} node {node} analytically")]
    NotIntegrable { node: NodeId, kind: &'static str },
    #[error("sample rate must be positive and finite, got {0}")]
    BadSampleRate(f64),

    // transforms
    #[error("graph has zero total duration")]
    EmptyResult,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("binding for `{0}` is not finite")]
    NonFiniteBinding(String),

    // scheduling
    #[error("play issued outside any scheduling context")]
    NoOpenContext,
    #[error("channel `{0}` addressed twice in one parallel context")]
    DuplicateChannelInParallel(String),
    #[error("scheduling contexts are unbalanced")]
    UnbalancedClose,
    #[error("parallel branches have distinct symbolic durations; cannot compute padding")]
    SymbolicPadding,
    #[error("invalid channel name `{0}`")]
    InvalidChannel(String),
    #[error("repetition count must be at least 1")]
    ZeroRepetitions,
    #[error("schedule has no channel `{0}`")]
    UnknownChannel(String),

    // munching
    #[error("muncher has no rules")]
    EmptyMuncher,
    #[error("no rule matched {kind} root (tried: {})", tried.join(", "))]
    NoMatch { kind: &'static str, tried: Vec<String> },
    #[error("frequency {frequency} Hz outside [0, {max}] Hz")]
    FrequencyOutOfRange { frequency: f64, max: f64 },
    #[error("amplitude {0} outside [-1, 1]")]
    AmplitudeOutOfRange(f64),
    #[error("{steps} steps exceed the {slots} available RAM slots")]
    TooManySteps { steps: usize, slots: usize },
    #[error("more than one parameter is step-modulated")]
    MultiParamModulation,
    #[error("step waveform spans {steps} s but the pulse lasts {pulse} s")]
    StepDurationMismatch { steps: f64, pulse: f64 },
    #[error("channel node needs 2 tones and 2 frames, found {tones} and {frames}")]
    ArityError { tones: usize, frames: usize },
    #[error("channel index {index} outside 0..{channels}")]
    ChannelIndexOutOfRange { index: usize, channels: usize },
    #[error("schedule channel `{0}` has no entry in the channel map")]
    UnmappedChannel(String),
    #[error("channel `{channel}`: {source}")]
    InChannel {
        channel: String,
        #[source]
        source: Box<Error>,
    },

    // simulation
    #[error("records target channel {found}, expected {expected}")]
    MixedChannel { expected: usize, found: usize },
    #[error("waveform lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("waveform sample rates differ ({left} vs {right})")]
    RateMismatch { left: f64, right: f64 },

    // documents
    #[error("parse error at {pointer}: {message}")]
    Parse { pointer: String, message: String },
    #[error("unknown node kind `{kind}` at {pointer}")]
    UnknownKind { pointer: String, kind: String },
}

impl Error {
    pub(crate) fn parse(pointer: &str, message: impl Into<String>) -> Self {
        Error::Parse {
            pointer: if pointer.is_empty() { "/".into() } else { pointer.into() },
            message: message.into(),
        }
    }

    /// True for malformed input documents, as opposed to well-formed input the
    /// pipeline rejects.
    pub fn is_parse_error(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::UnknownKind { .. } => true,
            Error::InChannel { source, .. } => source.is_parse_error(),
            _ => false,
        }
    }

    /// Strips channel context.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::InChannel { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub(crate) fn in_channel(self, channel: &str) -> Self {
        Error::InChannel {
            channel: channel.to_string(),
            source: Box::new(self),
        }
    }
}
