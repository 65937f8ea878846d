//! Baseline representation for the benchmarks: concrete pulses in flat
//! per-channel lists, with the same context and padding rules as
//! [`crate::schedule`] but no graph and no variables.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::rfsoc::{FramerotData, ParamData, PulseDataRecord, RfsocConfig, ToneData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectTone {
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
}

impl DirectTone {
    pub const SILENT: DirectTone = DirectTone {
        frequency: 0.0,
        phase: 0.0,
        amplitude: 0.0,
    };

    fn data(&self) -> ToneData {
        ToneData {
            frequency: ParamData::Scalar(self.frequency),
            phase: ParamData::Scalar(self.phase),
            amplitude: ParamData::Scalar(self.amplitude),
            sync_phase: false,
            frame_index: None,
            feedback_enable: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectPulse {
    pub tones: [DirectTone; 2],
    pub duration: f64,
}

impl DirectPulse {
    pub fn single(frequency: f64, phase: f64, amplitude: f64, duration: f64) -> Self {
        DirectPulse {
            tones: [
                DirectTone {
                    frequency,
                    phase,
                    amplitude,
                },
                DirectTone::SILENT,
            ],
            duration,
        }
    }

    pub fn silent(duration: f64) -> Self {
        DirectPulse {
            tones: [DirectTone::SILENT; 2],
            duration,
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    duration: f64,
    lanes: BTreeMap<String, Vec<DirectPulse>>,
}

#[derive(Debug, Default)]
pub struct DirectScheduleBuilder {
    declared: BTreeSet<String>,
    stack: Vec<(bool, Vec<Block>)>,
    top: Vec<Block>,
}

impl DirectScheduleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_channel(&mut self, name: &str) {
        self.declared.insert(name.to_string());
    }

    pub fn open_sequential(&mut self) {
        self.stack.push((false, Vec::new()));
    }

    pub fn open_parallel(&mut self) {
        self.stack.push((true, Vec::new()));
    }

    pub fn close(&mut self) -> Result<()> {
        let (parallel, items) = self.stack.pop().ok_or(Error::UnbalancedClose)?;
        let block = if parallel {
            combine_parallel(items)
        } else {
            combine_sequential(items)
        };
        self.push(block)
    }

    pub fn play(&mut self, channel: &str, pulse: DirectPulse) -> Result<()> {
        if self.stack.is_empty() {
            return Err(Error::NoOpenContext);
        }
        let lane = if pulse.duration == 0.0 { vec![] } else { vec![pulse] };
        self.push(Block {
            duration: pulse.duration,
            lanes: BTreeMap::from([(channel.to_string(), lane)]),
        })
    }

    fn push(&mut self, block: Block) -> Result<()> {
        match self.stack.last_mut() {
            None => self.top.push(block),
            Some((parallel, items)) => {
                if *parallel {
                    if let Some(c) = block
                        .lanes
                        .keys()
                        .find(|c| items.iter().any(|i| i.lanes.contains_key(*c)))
                    {
                        return Err(Error::DuplicateChannelInParallel(c.clone()));
                    }
                }
                items.push(block);
            }
        }
        Ok(())
    }

    pub fn finalize(mut self) -> Result<DirectSchedule> {
        if !self.stack.is_empty() {
            return Err(Error::UnbalancedClose);
        }
        let block = combine_sequential(std::mem::take(&mut self.top));
        let mut channels = block.lanes;
        for name in self.declared {
            channels.entry(name).or_default();
        }
        for lane in channels.values_mut() {
            if lane.is_empty() {
                lane.push(DirectPulse::silent(block.duration));
            }
        }
        Ok(DirectSchedule {
            channels,
            duration: block.duration,
        })
    }
}

fn combine_sequential(items: Vec<Block>) -> Block {
    let channels: BTreeSet<String> = items.iter().flat_map(|b| b.lanes.keys().cloned()).collect();
    let mut lanes = BTreeMap::new();
    for channel in channels {
        let mut lane = Vec::new();
        for item in &items {
            match item.lanes.get(&channel) {
                Some(pulses) => lane.extend_from_slice(pulses),
                None if item.duration == 0.0 => {}
                None => lane.push(DirectPulse::silent(item.duration)),
            }
        }
        lanes.insert(channel, lane);
    }
    Block {
        duration: items.iter().fold(0.0, |acc, b| acc + b.duration),
        lanes,
    }
}

fn combine_parallel(items: Vec<Block>) -> Block {
    let duration = items.iter().fold(0.0f64, |m, b| m.max(b.duration));
    let mut lanes = BTreeMap::new();
    for item in items {
        for (channel, mut pulses) in item.lanes {
            if item.duration != duration {
                pulses.push(DirectPulse::silent(duration - item.duration));
            }
            lanes.insert(channel, pulses);
        }
    }
    Block { duration, lanes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSchedule {
    pub channels: BTreeMap<String, Vec<DirectPulse>>,
    pub duration: f64,
}

impl DirectSchedule {
    /// Concatenates `n` copies of every channel list.
    pub fn tile(&self, n: usize) -> Result<DirectSchedule> {
        if n == 0 {
            return Err(Error::ZeroRepetitions);
        }
        let channels = self
            .channels
            .iter()
            .map(|(name, pulses)| {
                let mut out = Vec::with_capacity(pulses.len() * n);
                for _ in 0..n {
                    out.extend_from_slice(pulses);
                }
                (name.clone(), out)
            })
            .collect();
        Ok(DirectSchedule {
            channels,
            duration: (0..n).fold(0.0, |acc, _| acc + self.duration),
        })
    }
}

/// Maps every pulse straight to a record.
pub fn direct_transpile(
    schedule: &DirectSchedule,
    channel_map: &BTreeMap<String, usize>,
    config: &RfsocConfig,
) -> Result<BTreeMap<String, Vec<PulseDataRecord>>> {
    let mut out = BTreeMap::new();
    for (name, pulses) in &schedule.channels {
        let index = *channel_map
            .get(name)
            .ok_or_else(|| Error::UnmappedChannel(name.clone()))?;
        if index >= config.channels {
            return Err(Error::ChannelIndexOutOfRange {
                index,
                channels: config.channels,
            }
            .in_channel(name));
        }
        let records = pulses
            .iter()
            .map(|p| PulseDataRecord {
                channel_index: index,
                duration: p.duration,
                tones: [p.tones[0].data(), p.tones[1].data()],
                frames: [FramerotData::idle(), FramerotData::idle()],
            })
            .collect();
        out.insert(name.clone(), records);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_and_tiling() {
        let mut b = DirectScheduleBuilder::new();
        b.declare_channel("idle");
        b.open_parallel();
        b.play("a", DirectPulse::single(1e6, 0.0, 0.5, 1e-6)).unwrap();
        b.play("b", DirectPulse::single(2e6, 0.0, 0.5, 2e-6)).unwrap();
        b.close().unwrap();
        let s = b.finalize().unwrap();
        assert_eq!(s.channels["a"].len(), 2);
        assert_eq!(s.channels["a"][1], DirectPulse::silent(1e-6));
        assert_eq!(s.channels["idle"], vec![DirectPulse::silent(2e-6)]);
        let t = s.tile(3).unwrap();
        assert_eq!(t.channels["b"].len(), 3);
        let map = BTreeMap::from([("a".into(), 0), ("b".into(), 1), ("idle".into(), 2)]);
        let records = direct_transpile(&t, &map, &RfsocConfig::default()).unwrap();
        assert_eq!(records["a"].len(), 6);
        assert_eq!(records["idle"][0], PulseDataRecord::zero(2, 2e-6));
        let partial = BTreeMap::from([("a".into(), 0)]);
        assert!(matches!(
            direct_transpile(&t, &partial, &RfsocConfig::default()),
            Err(Error::UnmappedChannel(_))
        ));
    }
}
