use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::logic::LogicValue;
use crate::netlist::{Design, PortRole, SigIdx, SignalId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputTrack {
    pub signal: SignalId,
    pub role: PortRole,
    /// One value per time step.
    pub values: Vec<LogicValue>,
}

/// Per-primary-input value sequences, one entry per clock cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub cycles: usize,
    pub tracks: Vec<InputTrack>,
}

impl Stimulus {
    /// Uniform random bits for free inputs; clocks held at 0; resets high for
    /// the first `reset_cycles` cycles and low afterwards.
    ///
    /// Bits are drawn cycle by cycle, so a longer stimulus from the same seed
    /// extends a shorter one.
    pub fn random(
        inputs: &[(SignalId, PortRole)],
        seed: u64,
        cycles: usize,
        reset_cycles: usize,
    ) -> Stimulus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tracks: Vec<InputTrack> = inputs
            .iter()
            .map(|(s, role)| InputTrack {
                signal: s.clone(),
                role: *role,
                values: Vec::with_capacity(cycles),
            })
            .collect();
        for t in 0..cycles {
            for track in &mut tracks {
                let v = match track.role {
                    PortRole::Free => rng.gen::<bool>(),
                    PortRole::Clock => false,
                    PortRole::Reset => t < reset_cycles,
                };
                track.values.push(LogicValue::from_bool(v));
            }
        }
        Stimulus {
            seed: Some(seed),
            cycles,
            tracks,
        }
    }

    /// The first `cycles` steps.
    pub fn prefix(&self, cycles: usize) -> Stimulus {
        let cycles = cycles.min(self.cycles);
        Stimulus {
            seed: self.seed,
            cycles,
            tracks: self
                .tracks
                .iter()
                .map(|t| InputTrack {
                    values: t.values[..cycles.min(t.values.len())].to_vec(),
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn track(&self, signal: &SignalId) -> Option<&InputTrack> {
        self.tracks.iter().find(|t| &t.signal == signal)
    }

    /// Maps tracks onto design signals and checks coverage and length.
    pub(crate) fn resolve(
        &self,
        design: &Design,
        cycles: usize,
    ) -> Result<Vec<(SigIdx, &[LogicValue])>, SimError> {
        let mut out = vec![];
        for t in &self.tracks {
            let s = design
                .signal(&t.signal)
                .ok_or_else(|| SimError::UnknownSignal(t.signal.to_string()))?;
            if !design.signals[s].primary_input {
                return Err(SimError::NotInput(t.signal.to_string()));
            }
            if t.values.len() < cycles {
                return Err(SimError::StimulusTooShort {
                    signal: t.signal.to_string(),
                    len: t.values.len(),
                    cycles,
                });
            }
            out.push((s, &t.values[..]));
        }
        for (s, role) in design.input_bits() {
            if role != PortRole::Clock && !out.iter().any(|(o, _)| *o == s) {
                return Err(SimError::MissingInput(design.signals[s].id.to_string()));
            }
        }
        Ok(out)
    }
}

/// Random stimulus for every primary input of `design`, honoring port roles.
pub fn random_stimulus(design: &Design, seed: u64, cycles: usize) -> Stimulus {
    let inputs: Vec<(SignalId, PortRole)> = design
        .input_bits()
        .into_iter()
        .map(|(s, r)| (design.signals[s].id.clone(), r))
        .collect();
    Stimulus::random(&inputs, seed, cycles, design.reset_cycles)
}
