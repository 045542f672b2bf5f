//! Switching and coverage analysis of simulation traces.
//!
//! A signal is *low switching* when the trace never shows it at both 0 and 1.
//! A LUT is *low coverage* when some address combination never appears on its
//! inputs at a settled time step.

mod converge;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{LogicValue, TruthTable};
use crate::netlist::{CellIdx, Design, FlatKind, SigIdx, SignalId};
use crate::sim::EventTrace;

pub use converge::{converge, ConvergeOptions, ConvergeRound, ConvergenceReport, DEFAULT_SCHEDULE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("trace signal '{0}' does not exist in the netlist")]
    UnknownSignal(String),
    #[error("convergence schedule is empty")]
    EmptySchedule,
    #[error("convergence schedule must be strictly increasing")]
    ScheduleNotIncreasing,
    #[error("stable rounds must be at least 1")]
    ZeroStableRounds,
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

/// Why a signal ended up in the low-switching set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowSwitchReason {
    /// Driven by a constant cell.
    Constant,
    /// Never anything but Z (undriven).
    HighZ,
    /// Never resolved to 0 or 1.
    Unresolved,
    /// Held a single known value throughout: a possible Trojan trigger.
    CandidateTrigger,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowSwitch {
    pub signal: SignalId,
    pub reason: LowSwitchReason,
    /// The constant value seen (X or Z when never resolved).
    pub observed: LogicValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "LowCoverageJson", try_from = "LowCoverageJson")]
pub struct LowCoverage {
    pub cell: String,
    pub init: TruthTable,
    pub cover: TruthTable,
}

impl LowCoverage {
    pub fn k(&self) -> u8 {
        self.init.inputs()
    }

    pub fn uncovered_count(&self) -> u32 {
        self.cover.len() as u32 - self.cover.count_ones()
    }
}

#[derive(Serialize, Deserialize)]
struct LowCoverageJson {
    cell: String,
    k: u8,
    init_hex: String,
    cover_hex: String,
    uncovered_count: u32,
}

impl From<LowCoverage> for LowCoverageJson {
    fn from(l: LowCoverage) -> Self {
        LowCoverageJson {
            k: l.k(),
            uncovered_count: l.uncovered_count(),
            init_hex: l.init.to_hex(),
            cover_hex: l.cover.to_hex(),
            cell: l.cell,
        }
    }
}

impl TryFrom<LowCoverageJson> for LowCoverage {
    type Error = crate::logic::TruthTableError;

    fn try_from(j: LowCoverageJson) -> Result<Self, Self::Error> {
        Ok(LowCoverage {
            init: TruthTable::from_hex(j.k, &j.init_hex)?,
            cover: TruthTable::from_hex(j.k, &j.cover_hex)?,
            cell: j.cell,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisStats {
    pub signals: usize,
    pub luts: usize,
    pub switched: usize,
    pub fully_covered: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub trace_len: usize,
    pub low_switch: Vec<LowSwitch>,
    pub low_coverage: Vec<LowCoverage>,
    pub stats: AnalysisStats,
}

impl AnalysisResult {
    pub fn is_clean(&self) -> bool {
        self.low_switch.is_empty() && self.low_coverage.is_empty()
    }

    pub fn low_switch_signal(&self, s: &SignalId) -> Option<&LowSwitch> {
        self.low_switch.iter().find(|l| &l.signal == s)
    }

    pub fn low_coverage_cell(&self, cell: &str) -> Option<&LowCoverage> {
        self.low_coverage.iter().find(|l| l.cell == cell)
    }
}

/// Per-signal observation flags accumulated over a trace.
#[derive(Clone, Copy, Default)]
struct Seen {
    zero: bool,
    one: bool,
    z: bool,
}

/// Runs the switching/coverage analysis over a trace of `design`.
pub fn analyze(design: &Design, trace: &EventTrace) -> Result<AnalysisResult, AnalysisError> {
    let map: Vec<SigIdx> = trace
        .signals
        .iter()
        .map(|s| {
            design
                .signal(s)
                .ok_or_else(|| AnalysisError::UnknownSignal(s.to_string()))
        })
        .collect::<Result<_, _>>()?;

    let n = design.signals.len();
    let mut values = vec![LogicValue::X; n];
    let mut seen = vec![Seen::default(); n];
    for s in 0..n {
        if design.signals[s].synthetic {
            if let Some(v) = design.const_driver(s) {
                values[s] = LogicValue::from_bool(v);
            }
        }
    }
    let luts: &[CellIdx] = &design.luts;
    let mut lut_slot = vec![usize::MAX; design.cells.len()];
    for (i, &c) in luts.iter().enumerate() {
        lut_slot[c] = i;
    }
    let mut cover: Vec<u64> = vec![0; luts.len()];
    let mut dirty = vec![true; luts.len()];
    let mut dirty_list: Vec<usize> = (0..luts.len()).collect();

    let mut events = trace.events.iter().peekable();
    for t in 0..trace.length {
        while let Some(e) = events.next_if(|e| e.time == t) {
            let s = map[e.signal];
            values[s] = e.value;
            for &f in &design.signals[s].fanout {
                let slot = lut_slot[f];
                if slot != usize::MAX && !dirty[slot] {
                    dirty[slot] = true;
                    dirty_list.push(slot);
                }
            }
        }
        for slot in dirty_list.drain(..) {
            dirty[slot] = false;
            let FlatKind::Lut { inputs, .. } = &design.cells[luts[slot]].kind else {
                unreachable!()
            };
            let mut addr = 0u64;
            let mut known = true;
            for (i, &s) in inputs.iter().enumerate() {
                match values[s].to_bool() {
                    Some(b) => addr |= (b as u64) << i,
                    None => {
                        known = false;
                        break;
                    }
                }
            }
            if known {
                cover[slot] |= 1 << addr;
            }
        }
    }
    // value observations come straight from the event list
    for e in trace.events.iter().filter(|e| e.time < trace.length) {
        let s = &mut seen[map[e.signal]];
        match e.value {
            LogicValue::Zero => s.zero = true,
            LogicValue::One => s.one = true,
            LogicValue::Z => s.z = true,
            LogicValue::X => {}
        }
    }

    let mut low_switch = vec![];
    let mut switched = 0;
    let mut analyzed = 0;
    for s in design.visible_signals() {
        if design.is_clock(s) {
            continue;
        }
        analyzed += 1;
        let o = seen[s];
        if o.zero && o.one {
            switched += 1;
            continue;
        }
        let observed = match (o.zero, o.one) {
            (true, _) => LogicValue::Zero,
            (_, true) => LogicValue::One,
            _ if o.z => LogicValue::Z,
            _ => LogicValue::X,
        };
        let reason = if design.const_driver(s).is_some() {
            LowSwitchReason::Constant
        } else {
            match observed {
                LogicValue::Z => LowSwitchReason::HighZ,
                LogicValue::X => LowSwitchReason::Unresolved,
                _ => LowSwitchReason::CandidateTrigger,
            }
        };
        low_switch.push(LowSwitch {
            signal: design.signals[s].id.clone(),
            reason,
            observed,
        });
    }

    let mut low_coverage = vec![];
    for (slot, &c) in luts.iter().enumerate() {
        let FlatKind::Lut { init, .. } = &design.cells[c].kind else {
            unreachable!()
        };
        let cov = TruthTable::new(init.inputs(), cover[slot]).expect("cover fits the table");
        if !cov.is_full() {
            low_coverage.push(LowCoverage {
                cell: design.cells[c].name.clone(),
                init: *init,
                cover: cov,
            });
        }
    }
    Ok(AnalysisResult {
        trace_len: trace.length,
        stats: AnalysisStats {
            signals: analyzed,
            luts: luts.len(),
            switched,
            fully_covered: luts.len() - low_coverage.len(),
        },
        low_switch,
        low_coverage,
    })
}
