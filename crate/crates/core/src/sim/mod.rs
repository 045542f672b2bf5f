//! Four-valued, event-driven, cycle-based simulation.
//!
//! One time step is one clock cycle: inputs (and register outputs captured at
//! the previous edge) are applied, combinational logic settles through delta
//! cycles, the settled values are recorded, then every DFF samples its data.

mod replay;
mod stimulus;
pub(crate) mod trace;
mod vcd;

use thiserror::Error;

use crate::logic::{LogicValue, TruthTable};
use crate::netlist::{Design, FlatKind, SigIdx};

pub use replay::{replay, Trigger};
pub use stimulus::{random_stimulus, InputTrack, Stimulus};
pub use trace::{Event, EventTrace};
pub use vcd::{export_vcd, import_vcd, VcdError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("combinational logic did not settle at step {time}; oscillating nets: {}", nets.join(", "))]
    Oscillation { time: usize, nets: Vec<String> },
    #[error("LUT has {expected} address lines but {got} values were given")]
    WidthMismatch { expected: usize, got: usize },
    #[error("unknown signal '{0}'")]
    UnknownSignal(String),
    #[error("'{0}' is not a register output")]
    NotState(String),
    #[error("'{0}' is not a primary input")]
    NotInput(String),
    #[error("stimulus has no values for primary input '{0}'")]
    MissingInput(String),
    #[error("stimulus for '{signal}' has {len} values, {cycles} cycles requested")]
    StimulusTooShort {
        signal: String,
        len: usize,
        cycles: usize,
    },
}

/// Evaluates a LUT on four-valued address lines.
///
/// With every line known this is a table lookup. Otherwise the result is the
/// common value of all entries reachable by resolving the unknown lines, or X
/// if they disagree. Z on a line reads as X.
pub fn lut_eval(init: &TruthTable, addr: &[LogicValue]) -> Result<LogicValue, SimError> {
    let k = init.inputs() as usize;
    if addr.len() != k {
        return Err(SimError::WidthMismatch {
            expected: k,
            got: addr.len(),
        });
    }
    Ok(lut_eval_unchecked(init, addr))
}

fn lut_eval_unchecked(init: &TruthTable, addr: &[LogicValue]) -> LogicValue {
    let mut base = 0usize;
    let mut unknown = 0usize;
    for (i, v) in addr.iter().enumerate() {
        match v.to_bool() {
            Some(true) => base |= 1 << i,
            Some(false) => {}
            None => unknown |= 1 << i,
        }
    }
    let first = init.bit(base);
    if unknown == 0 {
        return LogicValue::from_bool(first);
    }
    // enumerate every submask of the unknown lines
    let mut sub = unknown;
    loop {
        if init.bit(base | sub) != first {
            return LogicValue::X;
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & unknown;
    }
    LogicValue::from_bool(first)
}

/// Next value of a DFF with optional synchronous active-high reset.
pub(crate) fn dff_next(d: LogicValue, reset: Option<(LogicValue, bool)>) -> LogicValue {
    match reset {
        None => d,
        Some((r, rv)) => match r {
            LogicValue::One => LogicValue::from_bool(rv),
            LogicValue::Zero => d,
            _ if d == LogicValue::from_bool(rv) => d,
            _ => LogicValue::X,
        },
    }
}

/// Simulation state over one design. Create one per run.
pub struct Simulator<'d> {
    design: &'d Design,
    values: Vec<LogicValue>,
    pending: Vec<(SigIdx, LogicValue)>,
    time: usize,
    touched: Vec<SigIdx>,
    touched_flag: Vec<bool>,
    queued: Vec<bool>,
    delta_cap: usize,
}

impl<'d> Simulator<'d> {
    /// All signals start at X.
    pub fn new(design: &'d Design) -> Self {
        let n = design.signals.len();
        Simulator {
            design,
            values: vec![LogicValue::X; n],
            pending: vec![],
            time: 0,
            touched: vec![],
            touched_flag: vec![false; n],
            queued: vec![false; design.cells.len()],
            delta_cap: 10 * design.cells.len().max(1),
        }
    }

    /// Register outputs to force at step 0 instead of X.
    pub fn set_initial_state(&mut self, state: &[(SigIdx, LogicValue)]) {
        assert_eq!(self.time, 0, "initial state must be set before the first step");
        self.pending.extend_from_slice(state);
    }

    pub fn design(&self) -> &'d Design {
        self.design
    }

    /// Settled values of the most recent step.
    pub fn values(&self) -> &[LogicValue] {
        &self.values
    }

    pub fn value(&self, s: SigIdx) -> LogicValue {
        self.values[s]
    }

    /// Number of completed steps.
    pub fn time(&self) -> usize {
        self.time
    }

    /// Signals written during the most recent step (possibly to their old value).
    pub fn touched(&self) -> &[SigIdx] {
        &self.touched
    }

    fn write(&mut self, s: SigIdx, v: LogicValue) -> bool {
        if self.values[s] == v {
            return false;
        }
        self.values[s] = v;
        if !self.touched_flag[s] {
            self.touched_flag[s] = true;
            self.touched.push(s);
        }
        true
    }

    fn eval(&self, cell: usize) -> LogicValue {
        let v = &self.values;
        match &self.design.cells[cell].kind {
            FlatKind::Lut { init, inputs } => {
                let addr: Vec<LogicValue> = inputs.iter().map(|&i| v[i]).collect();
                lut_eval_unchecked(init, &addr)
            }
            FlatKind::Const(b) => LogicValue::from_bool(*b),
            // aliases are wires and pass Z through unchanged
            FlatKind::Alias(i) => v[*i],
            FlatKind::Dff { .. } => unreachable!("registers are not evaluated combinationally"),
        }
    }

    /// Runs one clock cycle with the given primary-input values.
    pub fn step(&mut self, inputs: &[(SigIdx, LogicValue)]) -> Result<(), SimError> {
        let d = self.design;
        for &s in &self.touched {
            self.touched_flag[s] = false;
        }
        self.touched.clear();

        let mut wave: Vec<usize> = vec![];
        let mut changed: Vec<SigIdx> = vec![];
        if self.time == 0 {
            for (s, info) in d.signals.iter().enumerate() {
                if info.driver.is_none() && !info.primary_input && self.write(s, LogicValue::Z) {
                    changed.push(s);
                }
            }
            for &c in &d.comb_order {
                self.queued[c] = true;
                wave.push(c);
            }
        }
        let pending = std::mem::take(&mut self.pending);
        for (s, v) in pending.into_iter().chain(inputs.iter().copied()) {
            if self.write(s, v) {
                changed.push(s);
            }
        }
        for s in changed {
            for &f in &d.signals[s].fanout {
                if d.cells[f].is_comb() && !self.queued[f] {
                    self.queued[f] = true;
                    wave.push(f);
                }
            }
        }

        let mut deltas = 0;
        while !wave.is_empty() {
            deltas += 1;
            if deltas > self.delta_cap {
                let mut nets: Vec<String> = wave
                    .iter()
                    .map(|&c| d.signals[d.cells[c].output].id.to_string())
                    .collect();
                nets.sort();
                nets.dedup();
                for &c in &wave {
                    self.queued[c] = false;
                }
                return Err(SimError::Oscillation {
                    time: self.time,
                    nets,
                });
            }
            let mut next = vec![];
            for c in wave {
                self.queued[c] = false;
                let v = self.eval(c);
                let out = d.cells[c].output;
                if self.write(out, v) {
                    for &f in &d.signals[out].fanout {
                        if d.cells[f].is_comb() && !self.queued[f] {
                            self.queued[f] = true;
                            next.push(f);
                        }
                    }
                }
            }
            wave = next;
        }

        for &c in &d.dffs {
            if let FlatKind::Dff { data, reset, .. } = &d.cells[c].kind {
                let r = reset.map(|(r, rv)| (self.values[r], rv));
                let next = dff_next(self.values[*data], r);
                let q = d.cells[c].output;
                if next != self.values[q] {
                    self.pending.push((q, next));
                }
            }
        }
        self.time += 1;
        Ok(())
    }
}

/// Simulates `cycles` steps of `stim` and records the event list.
pub fn simulate(design: &Design, stim: &Stimulus, cycles: usize) -> Result<EventTrace, SimError> {
    let inputs = stim.resolve(design, cycles)?;
    let mut sim = Simulator::new(design);
    let mut rec = trace::Recorder::new(design);
    let mut frame = Vec::with_capacity(inputs.len());
    for t in 0..cycles {
        frame.clear();
        frame.extend(inputs.iter().map(|(s, vals)| (*s, vals[t])));
        sim.step(&frame)?;
        rec.record(&sim);
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use LogicValue::*;

    fn tt(k: u8, bits: u64) -> TruthTable {
        TruthTable::new(k, bits).unwrap()
    }

    #[test]
    fn lut_eval_examples() {
        assert_eq!(lut_eval(&tt(2, 0x8), &[One, One]).unwrap(), One);
        assert_eq!(lut_eval(&tt(2, 0x8), &[Zero, X]).unwrap(), Zero);
        assert_eq!(lut_eval(&tt(2, 0x6), &[One, X]).unwrap(), X);
        assert_eq!(lut_eval(&tt(2, 0x6), &[Z, Zero]).unwrap(), X);
        assert_eq!(lut_eval(&tt(2, 0xf), &[X, X]).unwrap(), One);
        assert!(matches!(
            lut_eval(&tt(2, 0x8), &[One]),
            Err(SimError::WidthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn dff_reset_semantics() {
        assert_eq!(dff_next(X, Some((One, false))), Zero);
        assert_eq!(dff_next(One, Some((Zero, false))), One);
        assert_eq!(dff_next(Zero, Some((X, false))), Zero);
        assert_eq!(dff_next(One, Some((X, false))), X);
        assert_eq!(dff_next(Z, None), Z);
    }

    fn design(text: &str) -> Design {
        Design::new(&crate::netlist::parse_netlist(text, None).unwrap()).unwrap()
    }

    #[test]
    fn const_net_single_event() {
        let d = design("module t(input a, output y); wire k; CONST0 c (.O(k)); LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(k), .O(y)); endmodule");
        let stim = random_stimulus(&d, 1, 10);
        let tr = simulate(&d, &stim, 10).unwrap();
        let k = tr.signal_index(&crate::netlist::SignalId::scalar("k")).unwrap();
        let ev: Vec<&Event> = tr.events.iter().filter(|e| e.signal == k).collect();
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].time, ev[0].value), (0, Zero));
        // AND with a constant 0 folds to 0 at once
        let y = tr.signal_index(&crate::netlist::SignalId::scalar("y")).unwrap();
        assert_eq!(tr.waveform(y), vec![Zero; 10]);
    }

    #[test]
    fn and_walk() {
        let d = design("module t(input a, input b, output y); LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(b), .O(y)); endmodule");
        let mut sim = Simulator::new(&d);
        let (a, b, y) = (0, 1, 2);
        assert_eq!(sim.value(y), X);
        let mut seen = vec![];
        for addr in 0..4 {
            let bit = |i: usize| LogicValue::from_bool((addr >> i) & 1 == 1);
            sim.step(&[(a, bit(0)), (b, bit(1))]).unwrap();
            seen.push(sim.value(y));
        }
        assert_eq!(seen, vec![Zero, Zero, Zero, One]);
    }

    #[test]
    fn undriven_net_is_high_z() {
        let d = design("module t(input a, output y); wire f; LUT2 #(.INIT(4'h6)) g (.I0(a), .I1(f), .O(y)); endmodule");
        let mut sim = Simulator::new(&d);
        sim.step(&[(0, One)]).unwrap();
        let f = d.signal_named("f").unwrap();
        assert_eq!(sim.value(f), Z);
        assert_eq!(sim.value(d.signal_named("y").unwrap()), X);
    }
}
