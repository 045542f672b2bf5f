use std::collections::BTreeMap;

use super::{
    resolve_goal, violation_goals, Encoder, Lit, ProofResult, ProofStats, ProofStatus, ProveError,
    ProveOptions, SatResult, Solver,
};
use crate::netlist::Design;
use crate::properties::Property;
use crate::sim::Trigger;

/// Bounded model check: unrolls up to `depth` frames from the initial state
/// of `opts.init` and returns the earliest violation as an input sequence.
/// A HOLDS result only covers the first `depth` frames.
pub fn prove_bmc(
    design: &Design,
    p: &Property,
    depth: usize,
    opts: &ProveOptions,
) -> Result<ProofResult, ProveError> {
    let goals = violation_goals(p)
        .iter()
        .map(|g| resolve_goal(design, g))
        .collect::<Result<Vec<_>, _>>()?;
    let mut solver = Solver::new();
    solver.set_conflict_budget(opts.conflict_budget);
    let mut enc = Encoder::new(design, opts.init);
    let mut stats = ProofStats::default();
    let mut unknown = false;
    for t in 0..depth {
        stats.depth = t + 1;
        for goal in &goals {
            let assume: Vec<Lit> = goal
                .iter()
                .map(|&(s, v)| {
                    let l = enc.lit(&mut solver, t, s);
                    if v {
                        l
                    } else {
                        !l
                    }
                })
                .collect();
            match solver.solve(&assume) {
                SatResult::Unsat => {}
                SatResult::Unknown => unknown = true,
                SatResult::Sat => {
                    stats.absorb(&solver);
                    return Ok(ProofResult {
                        property: p.name(),
                        status: ProofStatus::Fail,
                        bound: None,
                        counterexample: None,
                        trigger: Some(trigger_from_model(design, &enc, &solver, t)),
                        stats,
                    });
                }
            }
        }
    }
    stats.absorb(&solver);
    Ok(ProofResult {
        property: p.name(),
        status: if unknown {
            ProofStatus::Unknown
        } else {
            ProofStatus::Holds
        },
        bound: Some(depth),
        counterexample: None,
        trigger: None,
        stats,
    })
}

fn trigger_from_model(design: &Design, enc: &Encoder<'_>, solver: &Solver, last: usize) -> Trigger {
    let mut initial_state = BTreeMap::new();
    for &c in &design.dffs {
        let q = design.cells[c].output;
        let v = match enc.encoded(0, q) {
            Some(l) => solver.model_lit(l),
            None => false,
        };
        initial_state.insert(design.signals[q].id.clone(), v);
    }
    let mut frames = vec![];
    for f in 0..=last {
        let mut m = BTreeMap::new();
        for (s, _) in design.input_bits() {
            if let Some(l) = enc.encoded(f, s) {
                m.insert(design.signals[s].id.clone(), solver.model_lit(l));
            }
        }
        frames.push(m);
    }
    Trigger {
        initial_state,
        frames,
        fires_at: Some(last),
    }
}
