//! Formal checking of extracted properties: per-frame SAT proofs,
//! register-boundary back-trace chains and bounded model checking.

mod bmc;
mod chain;
pub mod cnf;
mod cone;
pub mod sat;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::LogicValue;
use crate::netlist::{Design, SigIdx, SignalId};
use crate::properties::{Property, PropertyKind};
use crate::sim::{replay, SimError, Trigger};

pub use bmc::prove_bmc;
pub use chain::{backtrace_chain, ChainResult, ChainRow, ChainStep, StepStatus};
pub use cnf::{encode_lut, ClauseSink, CnfFormula};
pub use cone::{extract_cone, Cone, Encoder, InitState};
pub use sat::{Lit, SatResult, Solver, SolverStats, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProveError {
    #[error("unknown signal '{0}'")]
    UnknownSignal(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Solver limits and the reset policy shared by all proof procedures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProveOptions {
    /// Conflicts allowed per SAT call; `None` is unlimited.
    pub conflict_budget: Option<u64>,
    /// Maximum number of back-trace steps.
    pub max_depth: usize,
    pub init: InitState,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            conflict_budget: Some(200_000),
            max_depth: 64,
            init: InitState::Reset,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProofStatus {
    Holds,
    Fail,
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStats {
    pub vars: usize,
    pub clauses: usize,
    pub sat_calls: u64,
    pub conflicts: u64,
    pub decisions: u64,
    /// Frames unrolled (BMC) or steps taken (chain).
    pub depth: usize,
}

impl ProofStats {
    pub(crate) fn absorb(&mut self, s: &Solver) {
        self.vars = self.vars.max(s.num_vars());
        self.clauses = self.clauses.max(s.num_clauses());
        self.sat_calls += s.stats.solves;
        self.conflicts += s.stats.conflicts;
        self.decisions += s.stats.decisions;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofResult {
    pub property: String,
    pub status: ProofStatus,
    /// For bounded proofs that hold: the number of frames checked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<usize>,
    /// Violating values over the cone support (combinational proofs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BTreeMap<SignalId, bool>>,
    /// Replayable input sequence reaching the violation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Trigger>,
    pub stats: ProofStats,
}

/// A conjunction of signal values that violates a property.
pub type Goal = Vec<(SignalId, bool)>;

/// The violation conditions of a property, one per cube.
pub fn violation_goals(p: &Property) -> Vec<Goal> {
    match &p.kind {
        PropertyKind::Constant { signal, value } => vec![vec![(signal.clone(), !value)]],
        PropertyKind::Never { lines, cubes, .. } => cubes
            .iter()
            .map(|c| {
                c.literal_list()
                    .into_iter()
                    .map(|(i, v)| (lines[i].clone(), v))
                    .collect()
            })
            .collect(),
    }
}

pub(crate) fn resolve_goal(design: &Design, goal: &Goal) -> Result<Vec<(SigIdx, bool)>, ProveError> {
    goal.iter()
        .map(|(s, v)| {
            design
                .signal(s)
                .map(|i| (i, *v))
                .ok_or_else(|| ProveError::UnknownSignal(s.to_string()))
        })
        .collect()
}

/// Proves the property in a single time frame with every register output
/// unconstrained. A failure reports the violating support values.
pub fn prove_combinational(
    design: &Design,
    p: &Property,
    opts: &ProveOptions,
) -> Result<ProofResult, ProveError> {
    let mut stats = ProofStats::default();
    let mut status = ProofStatus::Holds;
    for goal in violation_goals(p) {
        let goal = resolve_goal(design, &goal)?;
        let mut solver = Solver::new();
        solver.set_conflict_budget(opts.conflict_budget);
        let mut enc = Encoder::new(design, InitState::Free);
        let assumptions: Vec<Lit> = goal
            .iter()
            .map(|&(s, v)| {
                let l = enc.lit(&mut solver, 0, s);
                if v {
                    l
                } else {
                    !l
                }
            })
            .collect();
        let r = solver.solve(&assumptions);
        stats.absorb(&solver);
        stats.depth = 1;
        match r {
            SatResult::Unsat => {}
            SatResult::Unknown => status = ProofStatus::Unknown,
            SatResult::Sat => {
                let targets: Vec<SigIdx> = goal.iter().map(|g| g.0).collect();
                let cone = extract_cone(design, &targets);
                let cex: BTreeMap<SignalId, bool> = cone
                    .support
                    .iter()
                    .map(|&s| {
                        let l = enc.encoded(0, s).expect("support is encoded");
                        (design.signals[s].id.clone(), solver.model_lit(l))
                    })
                    .collect();
                let trigger = support_trigger(design, &cex);
                return Ok(ProofResult {
                    property: p.name(),
                    status: ProofStatus::Fail,
                    bound: None,
                    counterexample: Some(cex),
                    trigger: Some(trigger),
                    stats,
                });
            }
        }
    }
    Ok(ProofResult {
        property: p.name(),
        status,
        bound: None,
        counterexample: None,
        trigger: None,
        stats,
    })
}

/// A one-frame trigger that forces register outputs and inputs to `cex`.
fn support_trigger(design: &Design, cex: &BTreeMap<SignalId, bool>) -> Trigger {
    let mut t = Trigger {
        frames: vec![BTreeMap::new()],
        fires_at: Some(0),
        ..Trigger::default()
    };
    for (s, &v) in cex {
        let i = design.signal(s).expect("cex names design signals");
        if design.dff_of(i).is_some() {
            t.initial_state.insert(s.clone(), v);
        } else if design.signals[i].primary_input {
            t.frames[0].insert(s.clone(), v);
        }
    }
    t
}

/// Replays `trigger` and checks that every goal literal holds at its firing step.
pub fn confirm_trigger(design: &Design, goal: &Goal, trigger: &Trigger) -> Result<bool, ProveError> {
    let at = trigger
        .fires_at
        .unwrap_or(trigger.frames.len().saturating_sub(1));
    if at >= trigger.frames.len() {
        return Ok(false);
    }
    let trace = replay(design, trigger)?;
    for (s, v) in goal {
        let Some(i) = trace.signal_index(s) else {
            return Err(ProveError::UnknownSignal(s.to_string()));
        };
        if trace.value_at(i, at) != LogicValue::from_bool(*v) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use crate::properties::extract_constant;

    fn design(text: &str) -> Design {
        Design::new(&parse_netlist(text, None).unwrap()).unwrap()
    }

    #[test]
    fn and_output_fails_with_both_inputs_high() {
        let d = design("module t(input a, input b, output y); LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(b), .O(y)); endmodule");
        let p = extract_constant(SignalId::scalar("y"), LogicValue::Zero).unwrap();
        let r = prove_combinational(&d, &p, &ProveOptions::default()).unwrap();
        assert_eq!(r.status, ProofStatus::Fail);
        let cex = r.counterexample.unwrap();
        assert!(cex[&SignalId::scalar("a")]);
        assert!(cex[&SignalId::scalar("b")]);
        let goal = &violation_goals(&p)[0];
        assert!(confirm_trigger(&d, goal, r.trigger.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn contradiction_holds() {
        // a & !a via one LUT whose table is all zero on reachable lines
        let d = design(
            "module t(input a, output y); wire n; LUT1 #(.INIT(2'h1)) i (.I0(a), .O(n));
             LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(n), .O(y)); endmodule",
        );
        let p = extract_constant(SignalId::scalar("y"), LogicValue::Zero).unwrap();
        let r = prove_combinational(&d, &p, &ProveOptions::default()).unwrap();
        assert_eq!(r.status, ProofStatus::Holds);
    }
}
