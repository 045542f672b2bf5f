use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Simulator;
use crate::logic::LogicValue;
use crate::netlist::{Design, SignalId};

/// A value change of one signal at a time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: usize,
    /// Index into [`EventTrace::signals`].
    pub signal: usize,
    pub value: LogicValue,
}

/// Time-ordered event list. Every signal is X until its first event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTrace {
    pub signals: Vec<SignalId>,
    pub events: Vec<Event>,
    /// Number of time steps covered (events have `time < length`).
    pub length: usize,
}

impl EventTrace {
    pub fn new(signals: Vec<SignalId>) -> Self {
        EventTrace {
            signals,
            events: vec![],
            length: 0,
        }
    }

    pub fn signal_index(&self, id: &SignalId) -> Option<usize> {
        self.signals.iter().position(|s| s == id)
    }

    pub fn index_map(&self) -> HashMap<&SignalId, usize> {
        self.signals.iter().enumerate().map(|(i, s)| (s, i)).collect()
    }

    /// Sorted by time and no signal repeats its previous value.
    pub fn is_well_formed(&self) -> bool {
        let mut last = vec![LogicValue::X; self.signals.len()];
        let mut seen = vec![false; self.signals.len()];
        let mut t = 0;
        for e in &self.events {
            if e.time < t || e.time >= self.length || e.signal >= self.signals.len() {
                return false;
            }
            t = e.time;
            if seen[e.signal] && last[e.signal] == e.value {
                return false;
            }
            // the implicit initial X is not an event, so a first event of X is redundant
            if !seen[e.signal] && e.value == LogicValue::X {
                return false;
            }
            seen[e.signal] = true;
            last[e.signal] = e.value;
        }
        true
    }

    /// Sorts events by time (stably) and drops changes to the current value.
    pub fn normalize(&mut self) {
        self.events.sort_by_key(|e| e.time);
        let mut last = vec![LogicValue::X; self.signals.len()];
        self.events.retain(|e| {
            if last[e.signal] == e.value {
                false
            } else {
                last[e.signal] = e.value;
                true
            }
        });
    }

    /// Per-step values of one signal.
    pub fn waveform(&self, signal: usize) -> Vec<LogicValue> {
        let mut out = vec![LogicValue::X; self.length];
        let mut cur = LogicValue::X;
        let mut t = 0;
        for e in self.events.iter().filter(|e| e.signal == signal) {
            while t < e.time.min(self.length) {
                out[t] = cur;
                t += 1;
            }
            cur = e.value;
        }
        while t < self.length {
            out[t] = cur;
            t += 1;
        }
        out
    }

    pub fn value_at(&self, signal: usize, time: usize) -> LogicValue {
        self.events
            .iter()
            .take_while(|e| e.time <= time)
            .filter(|e| e.signal == signal)
            .last()
            .map_or(LogicValue::X, |e| e.value)
    }

    /// The first `length` steps.
    pub fn prefix(&self, length: usize) -> EventTrace {
        EventTrace {
            signals: self.signals.clone(),
            events: self
                .events
                .iter()
                .copied()
                .take_while(|e| e.time < length)
                .collect(),
            length: length.min(self.length),
        }
    }

    /// Events grouped by time step, in order.
    pub fn steps(&self) -> impl Iterator<Item = (usize, &[Event])> {
        self.events
            .chunk_by(|a, b| a.time == b.time)
            .map(|chunk| (chunk[0].time, chunk))
    }
}

/// Builds an [`EventTrace`] from a running [`Simulator`].
pub(crate) struct Recorder {
    /// design signal → trace signal
    map: Vec<Option<usize>>,
    last: Vec<LogicValue>,
    trace: EventTrace,
    buf: Vec<Event>,
}

impl Recorder {
    pub(crate) fn new(design: &Design) -> Self {
        let mut map = vec![None; design.signals.len()];
        let mut signals = vec![];
        for s in design.visible_signals() {
            map[s] = Some(signals.len());
            signals.push(design.signals[s].id.clone());
        }
        Recorder {
            last: vec![LogicValue::X; signals.len()],
            map,
            trace: EventTrace::new(signals),
            buf: vec![],
        }
    }

    pub(crate) fn record(&mut self, sim: &Simulator<'_>) {
        let t = sim.time() - 1;
        self.buf.clear();
        for &s in sim.touched() {
            if let Some(i) = self.map[s] {
                let v = sim.value(s);
                if self.last[i] != v {
                    self.last[i] = v;
                    self.buf.push(Event {
                        time: t,
                        signal: i,
                        value: v,
                    });
                }
            }
        }
        self.buf.sort_by_key(|e| e.signal);
        self.trace.events.extend_from_slice(&self.buf);
        self.trace.length = sim.time();
    }

    pub(crate) fn trace(&self) -> &EventTrace {
        &self.trace
    }

    pub(crate) fn finish(self) -> EventTrace {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicValue::*;

    #[test]
    fn normalize_and_waveform() {
        let mut t = EventTrace::new(vec![SignalId::scalar("a")]);
        t.length = 4;
        for (time, value) in [(2, One), (0, Zero), (1, Zero), (3, One)] {
            t.events.push(Event {
                time,
                signal: 0,
                value,
            });
        }
        t.normalize();
        assert!(t.is_well_formed());
        assert_eq!(t.events.len(), 2);
        assert_eq!(t.waveform(0), vec![Zero, Zero, One, One]);
        assert_eq!(t.value_at(0, 1), Zero);
        assert_eq!(t.prefix(2).events.len(), 1);
    }
}
