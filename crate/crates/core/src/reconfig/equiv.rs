use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ReconfigError, ReconfigPlan};
use crate::logic::LogicValue;
use crate::netlist::{Design, FlatKind, SigIdx, SignalId};
use crate::prove::{Encoder, InitState, Lit, SatResult, Solver};
use crate::sim::{replay, Trigger};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivMode {
    Full,
    /// Patched LUTs only see addresses covered in simulation.
    CareSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EquivStatus {
    Equivalent,
    Inequivalent,
    Unknown,
}

/// A distinguishing input and register state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivVector {
    pub state: BTreeMap<SignalId, bool>,
    pub inputs: BTreeMap<SignalId, bool>,
    /// Outputs (and register next states, as `name'`) that differ in dual simulation.
    pub differing: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivResult {
    pub status: EquivStatus,
    pub mode: EquivMode,
    /// Compared points: primary outputs plus register next states.
    pub compared: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<EquivVector>,
}

fn ids(d: &Design, sigs: impl IntoIterator<Item = SigIdx>) -> BTreeSet<SignalId> {
    sigs.into_iter().map(|s| d.signals[s].id.clone()).collect()
}

fn state_bits(d: &Design) -> Vec<SigIdx> {
    d.dffs.iter().map(|&c| d.cells[c].output).collect()
}

fn same(what: &str, a: BTreeSet<SignalId>, b: BTreeSet<SignalId>) -> Result<(), ReconfigError> {
    if a == b {
        return Ok(());
    }
    let diff: Vec<String> = a.symmetric_difference(&b).map(|s| s.to_string()).collect();
    Err(ReconfigError::InterfaceMismatch {
        what: what.to_string(),
        detail: diff.join(", "),
    })
}

/// Sequential equivalence by name-matched registers: one miter over every
/// primary output and every register's next state, inputs and register
/// outputs shared. With `care`, every patched LUT is restricted to its
/// covered addresses in both designs.
pub fn equivalence_check(
    a: &Design,
    b: &Design,
    care: Option<&ReconfigPlan>,
    conflict_budget: Option<u64>,
) -> Result<EquivResult, ReconfigError> {
    let pis = |d: &Design| ids(d, d.input_bits().into_iter().map(|(s, _)| s));
    same("primary inputs", pis(a), pis(b))?;
    same("primary outputs", ids(a, a.output_bits()), ids(b, b.output_bits()))?;
    same("registers", ids(a, state_bits(a)), ids(b, state_bits(b)))?;

    let mut solver = Solver::new();
    solver.set_conflict_budget(conflict_budget);
    let mut ea = Encoder::new(a, InitState::Free);
    let mut eb = Encoder::new(b, InitState::Free);
    let shared: Vec<SigIdx> = a
        .input_bits()
        .into_iter()
        .map(|(s, _)| s)
        .chain(state_bits(a))
        .collect();
    for &s in &shared {
        let l = ea.lit(&mut solver, 0, s);
        let sb = b.signal(&a.signals[s].id).expect("interfaces match");
        eb.bind(0, sb, l);
    }

    let mut pairs: Vec<(Lit, Lit)> = vec![];
    for s in a.output_bits() {
        let sb = b.signal(&a.signals[s].id).expect("interfaces match");
        pairs.push((ea.lit(&mut solver, 0, s), eb.lit(&mut solver, 0, sb)));
    }
    for &c in &a.dffs {
        let q = &a.signals[a.cells[c].output].id;
        let cb = b.dff_of(b.signal(q).expect("interfaces match")).expect("register in both");
        pairs.push((ea.next_state(&mut solver, 0, c), eb.next_state(&mut solver, 0, cb)));
    }

    let mode = if care.is_some() {
        EquivMode::CareSet
    } else {
        EquivMode::Full
    };
    if let Some(plan) = care {
        for e in &plan.entries {
            for (d, enc) in [(a, &mut ea), (b, &mut eb)] {
                let c = d.cell(&e.cell).ok_or_else(|| ReconfigError::UnknownCell(e.cell.clone()))?;
                let FlatKind::Lut { inputs, .. } = &d.cells[c].kind else {
                    return Err(ReconfigError::NotALut(e.cell.clone()));
                };
                let lits: Vec<Lit> = inputs.iter().map(|&i| enc.lit(&mut solver, 0, i)).collect();
                for u in e.coverage.clear_bits() {
                    let block: Vec<Lit> = lits
                        .iter()
                        .enumerate()
                        .map(|(i, &l)| if u >> i & 1 == 1 { !l } else { l })
                        .collect();
                    solver.add_clause(&block);
                }
            }
        }
    }

    // miter: some pair differs
    let mut any = vec![];
    for &(x, y) in &pairs {
        let d = Lit::pos(solver.new_var());
        solver.add_clause(&[!d, x, y]);
        solver.add_clause(&[!d, !x, !y]);
        any.push(d);
    }
    solver.add_clause(&any);
    let compared = pairs.len();
    let status = match solver.solve(&[]) {
        SatResult::Unsat => EquivStatus::Equivalent,
        SatResult::Unknown => EquivStatus::Unknown,
        SatResult::Sat => EquivStatus::Inequivalent,
    };
    if status != EquivStatus::Inequivalent {
        return Ok(EquivResult {
            status,
            mode,
            compared,
            vector: None,
        });
    }
    let mut state = BTreeMap::new();
    let mut inputs = BTreeMap::new();
    for &s in &shared {
        let v = solver.model_lit(ea.encoded(0, s).expect("shared signals encoded"));
        let id = a.signals[s].id.clone();
        if a.signals[s].primary_input {
            inputs.insert(id, v);
        } else {
            state.insert(id, v);
        }
    }
    let differing = dual_simulate(a, b, &state, &inputs)?;
    assert!(
        !differing.is_empty(),
        "miter model does not distinguish the designs in simulation"
    );
    Ok(EquivResult {
        status,
        mode,
        compared,
        vector: Some(EquivVector {
            state,
            inputs,
            differing,
        }),
    })
}

/// Simulates one cycle of both designs from the same state and inputs and
/// lists outputs and next states that differ.
pub(crate) fn dual_simulate(
    a: &Design,
    b: &Design,
    state: &BTreeMap<SignalId, bool>,
    inputs: &BTreeMap<SignalId, bool>,
) -> Result<Vec<String>, ReconfigError> {
    let trig = Trigger {
        initial_state: state.clone(),
        frames: vec![inputs.clone(), inputs.clone()],
        fires_at: None,
    };
    let (ta, tb) = (replay(a, &trig)?, replay(b, &trig)?);
    let value = |t: &crate::sim::EventTrace, id: &SignalId, at: usize| -> LogicValue {
        t.signal_index(id).map_or(LogicValue::X, |i| t.value_at(i, at))
    };
    let mut out = vec![];
    for s in a.output_bits() {
        let id = &a.signals[s].id;
        if value(&ta, id, 0) != value(&tb, id, 0) {
            out.push(id.to_string());
        }
    }
    for s in state_bits(a) {
        let id = &a.signals[s].id;
        if value(&ta, id, 1) != value(&tb, id, 1) {
            out.push(format!("{id}'"));
        }
    }
    Ok(out)
}
