use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{trace::Recorder, EventTrace, SimError, Simulator};
use crate::logic::LogicValue;
use crate::netlist::{Design, SigIdx, SignalId};

/// An explicit input sequence, optionally from a given register state.
///
/// Inputs left unspecified in a frame are driven to 0 (resets deasserted);
/// registers left out of `initial_state` start at X.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    #[serde(default)]
    pub initial_state: BTreeMap<SignalId, bool>,
    pub frames: Vec<BTreeMap<SignalId, bool>>,
    /// Step at which the trigger condition is expected to be observed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fires_at: Option<usize>,
}

impl Trigger {
    /// Sets a vector input (LSB first) in one frame, extending the frame list as needed.
    pub fn set_word(&mut self, frame: usize, name: &str, width: usize, value: u64) {
        if self.frames.len() <= frame {
            self.frames.resize(frame + 1, BTreeMap::new());
        }
        for i in 0..width {
            self.frames[frame].insert(SignalId::bit(name, i as i64), (value >> i) & 1 == 1);
        }
    }

    pub fn set(&mut self, frame: usize, signal: SignalId, value: bool) {
        if self.frames.len() <= frame {
            self.frames.resize(frame + 1, BTreeMap::new());
        }
        self.frames[frame].insert(signal, value);
    }

    /// Resolved per-frame input vectors (every primary input bit) and initial state.
    pub(crate) fn resolve(
        &self,
        design: &Design,
    ) -> Result<(Vec<(SigIdx, LogicValue)>, Vec<Vec<(SigIdx, LogicValue)>>), SimError> {
        let lookup = |s: &SignalId| {
            design
                .signal(s)
                .ok_or_else(|| SimError::UnknownSignal(s.to_string()))
        };
        let mut init = vec![];
        for (s, v) in &self.initial_state {
            let i = lookup(s)?;
            if design.dff_of(i).is_none() {
                return Err(SimError::NotState(s.to_string()));
            }
            init.push((i, LogicValue::from_bool(*v)));
        }
        let bits = design.input_bits();
        let mut frames = vec![];
        for f in &self.frames {
            let mut vals: Vec<(SigIdx, LogicValue)> = bits
                .iter()
                .map(|&(s, _)| (s, LogicValue::Zero))
                .collect();
            for (s, v) in f {
                let i = lookup(s)?;
                let Some(slot) = vals.iter_mut().find(|(b, _)| *b == i) else {
                    return Err(SimError::NotInput(s.to_string()));
                };
                slot.1 = LogicValue::from_bool(*v);
            }
            frames.push(vals);
        }
        Ok((init, frames))
    }
}

/// Simulates the design under exactly the trigger's input sequence.
pub fn replay(design: &Design, trigger: &Trigger) -> Result<EventTrace, SimError> {
    let (init, frames) = trigger.resolve(design)?;
    let mut sim = Simulator::new(design);
    sim.set_initial_state(&init);
    let mut rec = Recorder::new(design);
    for f in &frames {
        sim.step(f)?;
        rec.record(&sim);
    }
    Ok(rec.finish())
}
