//! Graph-based pulse representation with backends for the AD9910 DDS and
//! the Octet RFSoC, plus simulators and benchmarks for both.
//!
//! ```
//! use pulsegraph::{ad9910, Graph};
//!
//! let mut g = Graph::new();
//! let sine = g.sine(10e6, 0.0, 1e-6);
//! let amp = g.num(0.5);
//! let root = g.product([amp, sine]);
//! let program = ad9910::transpile_ad9910(&mut g, root, &Default::default()).unwrap();
//! assert!(matches!(program, ad9910::Ad9910Program::SingleTone(_)));
//! ```

pub mod ad9910;
pub mod bench;
pub mod curve;
pub mod error;
pub mod ir;
pub mod json;
pub mod munch;
pub mod rfsoc;
pub mod schedule;
pub mod sim;
pub mod transform;

pub use error::{Error, Result};
pub use ir::{ChannelPulse, Framerot, Graph, IntoParam, Node, NodeId, Oscillator, SampledWaveform, Tone};
pub use schedule::{ChannelId, Schedule, ScheduleBuilder};
pub use transform::Bindings;
