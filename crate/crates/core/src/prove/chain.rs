use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    extract_cone, resolve_goal, violation_goals, Encoder, InitState, Lit, ProofStats, ProofStatus,
    ProveError, ProveOptions, SatResult, Solver,
};
use crate::netlist::{CellIdx, Design, FlatKind, SigIdx, SignalId};
use crate::properties::Property;
use crate::sim::Trigger;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StepStatus {
    Success,
    Fail,
    Unknown,
}

/// One proof in a chain, shaped like a row of a proof transcript table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub step: usize,
    /// e.g. `sat -prove dc1 0 -set dc2 1`
    pub goal: String,
    pub status: StepStatus,
    /// Lifted counterexample over the cone support; empty unless FAIL.
    pub counterexample: BTreeMap<SignalId, bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainResult {
    pub property: String,
    pub status: ProofStatus,
    /// HOLDS results are exact when every lifted counterexample was the full
    /// preimage of its goal, so the final UNSAT rules out every path.
    pub exact: bool,
    pub steps: Vec<ChainStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Trigger>,
    pub stats: ProofStats,
}

/// Alias for the row type, for callers that think in table rows.
pub type ChainRow = ChainStep;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    Signal(SigIdx),
    /// Value a register takes at the next clock edge.
    Next(CellIdx),
}

fn target_name(d: &Design, t: Target) -> String {
    match t {
        Target::Signal(s) => d.signals[s].id.to_string(),
        Target::Next(c) => match &d.cells[c].kind {
            FlatKind::Dff { data, .. } => d.signals[*data].id.to_string(),
            _ => unreachable!("next-state targets are registers"),
        },
    }
}

fn row_texts(d: &Design, goal: &[(Target, bool)]) -> Vec<String> {
    (0..goal.len())
        .map(|i| {
            let (t, v) = goal[i];
            let mut s = format!("sat -prove {} {}", target_name(d, t), !v as u8);
            for (j, &(u, w)) in goal.iter().enumerate() {
                if j != i {
                    s += &format!(" -set {} {}", target_name(d, u), w as u8);
                }
            }
            s
        })
        .collect()
}

struct GoalOutcome {
    status: ProofStatus,
    exact: bool,
    steps: Vec<ChainStep>,
    trigger: Option<Trigger>,
}

/// Proves the property one frame at a time, walking back across one
/// register boundary per step. Register outputs are free in each step;
/// a failing step's lifted counterexample on register outputs becomes the
/// next goal on their next-state logic. The chain stops with a trigger once
/// the counterexample needs only inputs or agrees with the initial state.
pub fn backtrace_chain(
    design: &Design,
    p: &Property,
    opts: &ProveOptions,
) -> Result<ChainResult, ProveError> {
    let mut stats = ProofStats::default();
    let mut steps = vec![];
    let mut exact = true;
    let mut status = ProofStatus::Holds;
    for goal in violation_goals(p) {
        let goal: Vec<(Target, bool)> = resolve_goal(design, &goal)?
            .into_iter()
            .map(|(s, v)| (Target::Signal(s), v))
            .collect();
        let out = chain_goal(design, goal, opts, &mut stats);
        steps.extend(out.steps);
        match out.status {
            ProofStatus::Fail => {
                return Ok(ChainResult {
                    property: p.name(),
                    status: ProofStatus::Fail,
                    exact: false,
                    steps,
                    trigger: out.trigger,
                    stats,
                });
            }
            ProofStatus::Unknown => status = ProofStatus::Unknown,
            ProofStatus::Holds => exact &= out.exact,
        }
    }
    Ok(ChainResult {
        property: p.name(),
        exact: exact && status == ProofStatus::Holds,
        status,
        steps,
        trigger: None,
        stats,
    })
}

fn chain_goal(
    design: &Design,
    mut goal: Vec<(Target, bool)>,
    opts: &ProveOptions,
    stats: &mut ProofStats,
) -> GoalOutcome {
    let mut steps = vec![];
    let mut frames_rev: Vec<BTreeMap<SignalId, bool>> = vec![];
    let mut exact = true;
    for step in 1..=opts.max_depth {
        stats.depth = stats.depth.max(step);
        let texts = row_texts(design, &goal);
        let mut solver = Solver::new();
        solver.set_conflict_budget(opts.conflict_budget);
        let mut enc = Encoder::new(design, InitState::Free);
        let goal_lits: Vec<Lit> = goal
            .iter()
            .map(|&(t, v)| {
                let l = match t {
                    Target::Signal(s) => enc.lit(&mut solver, 0, s),
                    Target::Next(c) => enc.next_state(&mut solver, 0, c),
                };
                if v {
                    l
                } else {
                    !l
                }
            })
            .collect();
        let r = solver.solve(&goal_lits);
        let row = |status, cex: &BTreeMap<SignalId, bool>| -> Vec<ChainStep> {
            texts
                .iter()
                .map(|g| ChainStep {
                    step,
                    goal: g.clone(),
                    status,
                    counterexample: cex.clone(),
                })
                .collect()
        };
        match r {
            SatResult::Unknown => {
                stats.absorb(&solver);
                steps.extend(row(StepStatus::Unknown, &BTreeMap::new()));
                return GoalOutcome {
                    status: ProofStatus::Unknown,
                    exact: false,
                    steps,
                    trigger: None,
                };
            }
            SatResult::Unsat => {
                stats.absorb(&solver);
                steps.extend(row(StepStatus::Success, &BTreeMap::new()));
                return GoalOutcome {
                    status: ProofStatus::Holds,
                    exact,
                    steps,
                    trigger: None,
                };
            }
            SatResult::Sat => {}
        }

        // support of the goal's cone at frame 0
        let mut targets = vec![];
        for &(t, _) in &goal {
            match t {
                Target::Signal(s) => targets.push(s),
                Target::Next(c) => {
                    if let FlatKind::Dff { data, reset, .. } = &design.cells[c].kind {
                        targets.push(*data);
                        if let Some((r, _)) = reset {
                            targets.push(*r);
                        }
                    }
                }
            }
        }
        let cone = extract_cone(design, &targets);
        let mut support: Vec<SigIdx> = cone.support.clone();
        // try to drop register literals before input literals
        support.sort_by_key(|&s| (design.dff_of(s).is_none(), s));
        let mut cube: Vec<(SigIdx, Lit)> = support
            .iter()
            .map(|&s| {
                let l = enc.encoded(0, s).expect("support is encoded");
                (s, if solver.model_lit(l) { l } else { !l })
            })
            .collect();

        // lift: drop literals while the rest still forces the goal
        let act = Lit::pos(solver.new_var());
        let mut neg_goal: Vec<Lit> = goal_lits.iter().map(|&l| !l).collect();
        neg_goal.push(!act);
        solver.add_clause(&neg_goal);
        let mut i = 0;
        let mut unknown = false;
        while i < cube.len() {
            let mut assume = vec![act];
            assume.extend(cube.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.1));
            match solver.solve(&assume) {
                SatResult::Unsat => {
                    cube.remove(i);
                }
                SatResult::Sat => i += 1,
                SatResult::Unknown => {
                    unknown = true;
                    i += 1;
                }
            }
        }
        // exact when the goal also implies the cube
        let act2 = Lit::pos(solver.new_var());
        let mut neg_cube: Vec<Lit> = cube.iter().map(|c| !c.1).collect();
        neg_cube.push(!act2);
        solver.add_clause(&neg_cube);
        let mut assume = goal_lits.clone();
        assume.push(act2);
        let step_exact = !unknown && solver.solve(&assume) == SatResult::Unsat;
        stats.absorb(&solver);

        let cex: BTreeMap<SignalId, bool> = cube
            .iter()
            .map(|&(s, l)| (design.signals[s].id.clone(), l.is_positive()))
            .collect();
        steps.extend(row(StepStatus::Fail, &cex));

        let inputs: BTreeMap<SignalId, bool> = cube
            .iter()
            .filter(|&&(s, _)| design.signals[s].primary_input)
            .map(|&(s, l)| (design.signals[s].id.clone(), l.is_positive()))
            .collect();
        frames_rev.push(inputs);
        let state: Vec<(CellIdx, bool)> = cube
            .iter()
            .filter_map(|&(s, l)| design.dff_of(s).map(|c| (c, l.is_positive())))
            .collect();
        let at_init = state
            .iter()
            .all(|&(c, v)| opts.init.value(design, c).is_none_or(|iv| iv == v));
        if at_init {
            let mut initial_state = BTreeMap::new();
            for &c in &design.dffs {
                let q = design.cells[c].output;
                let v = match opts.init.value(design, c) {
                    Some(v) => v,
                    None => state.iter().find(|s| s.0 == c).is_some_and(|s| s.1),
                };
                initial_state.insert(design.signals[q].id.clone(), v);
            }
            let frames: Vec<_> = frames_rev.into_iter().rev().collect();
            let fires_at = frames.len() - 1;
            return GoalOutcome {
                status: ProofStatus::Fail,
                exact: false,
                steps,
                trigger: Some(Trigger {
                    initial_state,
                    frames,
                    fires_at: Some(fires_at),
                }),
            };
        }
        exact &= step_exact;
        goal = state.into_iter().map(|(c, v)| (Target::Next(c), v)).collect();
    }
    GoalOutcome {
        status: ProofStatus::Unknown,
        exact: false,
        steps,
        trigger: None,
    }
}
