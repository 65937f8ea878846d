//! Sample-level device models for checking transpiled output against the
//! graph sampler.

use std::f64::consts::TAU;

use crate::ad9910::{tone_words, Ad9910Config, Ad9910Program, RegisterWords};
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::ir::SampledWaveform;
use crate::rfsoc::{PulseDataRecord, RfsocConfig};

/// One DDS core: a 32-bit phase accumulator feeding an exact sine table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DdsCore {
    pub accumulator: u32,
    pub words: RegisterWords,
}

impl DdsCore {
    /// Output for the current accumulator state.
    pub fn output(&self) -> f64 {
        let phase = self.accumulator.wrapping_add((self.words.pow as u32) << 16);
        let amplitude = self.words.asf as f64 / 16383.0;
        amplitude * (TAU * (phase as f64 / 4294967296.0)).sin()
    }

    pub fn tick(&mut self) {
        self.accumulator = self.accumulator.wrapping_add(self.words.ftw);
    }

    /// Emits `n` samples, reading the output before each accumulator step.
    pub fn run(&mut self, n: usize, out: &mut Vec<f64>) {
        for _ in 0..n {
            out.push(self.output());
            self.tick();
        }
    }
}

/// Simulates one AD9910 program at the system clock rate.
pub fn simulate_ad9910(program: &Ad9910Program, config: &Ad9910Config) -> Result<SampledWaveform> {
    let rate = config.sysclk;
    let mut samples = Vec::new();
    match program {
        Ad9910Program::ConstDc(c) => {
            let n = (c.duration * rate).round() as usize;
            samples.resize(n, c.amplitude);
        }
        Ad9910Program::SingleTone(t) => {
            let mut core = DdsCore {
                accumulator: 0,
                words: tone_words(t.frequency, t.phase, t.amplitude, config)?,
            };
            core.run((t.duration * rate).round() as usize, &mut samples);
        }
        Ad9910Program::DiscreteSine(d) => {
            let mut core = DdsCore::default();
            let mut start = 0.0;
            let mut start_index = 0usize;
            let mut previous_ftw = None;
            for (k, step) in d.timeline().steps.iter().enumerate() {
                let end = start + step.duration;
                let end_index = (end * rate).round() as usize;
                core.words = tone_words(
                    d.frequency.at_step(k),
                    d.phase.at_step(k),
                    d.amplitude.at_step(k),
                    config,
                )?;
                if !d.phase_continuous && previous_ftw.is_some_and(|f| f != core.words.ftw) {
                    core.accumulator = 0;
                }
                previous_ftw = Some(core.words.ftw);
                core.run(end_index.saturating_sub(start_index), &mut samples);
                start = end;
                start_index = end_index.max(start_index);
            }
        }
    }
    Ok(SampledWaveform::new(rate, samples))
}

/// Phase state of one Octet channel. Frame registers persist across records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RfsocChannelState {
    /// Frame accumulators in radians, kept in `[0, 2pi)`.
    pub frames: [f64; 2],
    /// Start time of the next record in seconds.
    pub time: f64,
}

impl RfsocChannelState {
    /// Appends the samples of `record` and advances the state past it.
    pub fn play(&mut self, record: &PulseDataRecord, rate: f64, out: &mut Vec<f64>) {
        for (j, frame) in record.frames.iter().enumerate() {
            if frame.clear_accumulator {
                self.frames[j] = 0.0;
            }
            if frame.apply_at_start {
                self.frames[j] = (self.frames[j] + frame.rotation.curve().first()).rem_euclid(TAU);
            }
        }
        let d = record.duration;
        let start_index = (self.time * rate).round() as usize;
        let end_index = ((self.time + d) * rate).round() as usize;
        let tones: Vec<(Curve, Curve, Curve, f64, f64)> = record
            .tones
            .iter()
            .map(|t| {
                let frequency = t.frequency.curve();
                // phase-synchronized tones run as if started at time zero
                let base = if t.sync_phase {
                    frequency.first() * self.time
                } else {
                    0.0
                };
                let frame = t.frame_index.map_or(0.0, |k| self.frames[k as usize]);
                (frequency, t.phase.curve(), t.amplitude.curve(), base, frame)
            })
            .collect();
        for k in start_index..end_index.max(start_index) {
            let t = k as f64 / rate - self.time;
            let mut total = 0.0;
            for (frequency, phase, amplitude, base, frame) in &tones {
                let cycles = base + frequency.integral(t, d);
                let arg = TAU * (cycles - cycles.floor()) + phase.value_at(t, d) + frame;
                total += amplitude.value_at(t, d) * arg.sin();
            }
            out.push(total);
        }
        for (j, frame) in record.frames.iter().enumerate() {
            if frame.apply_at_end {
                self.frames[j] = (self.frames[j] + frame.rotation.curve().last()).rem_euclid(TAU);
            }
        }
        self.time += d;
    }
}

/// Plays records back to back from a fresh channel state.
pub fn simulate_rfsoc_channel(records: &[PulseDataRecord], config: &RfsocConfig) -> Result<SampledWaveform> {
    if let Some(first) = records.first() {
        if let Some(r) = records.iter().find(|r| r.channel_index != first.channel_index) {
            return Err(Error::MixedChannel {
                expected: first.channel_index,
                found: r.channel_index,
            });
        }
    }
    let mut state = RfsocChannelState::default();
    let mut samples = Vec::new();
    for r in records {
        state.play(r, config.sample_rate, &mut samples);
    }
    Ok(SampledWaveform::new(config.sample_rate, samples))
}

/// Root-mean-square difference of two equally sampled waveforms.
pub fn rms_compare(a: &SampledWaveform, b: &SampledWaveform) -> Result<f64> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::RateMismatch {
            left: a.sample_rate,
            right: b.sample_rate,
        });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}
