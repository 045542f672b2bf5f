//! End-to-end flow: converge, extract, prove, plan, patch, check.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{converge, AnalysisError, ConvergeOptions, ConvergenceReport};
use crate::netlist::{CellIdx, Design, FlatKind, Netlist, NetlistError, PortRoles, SigIdx, SignalId};
use crate::properties::{emit_sva, extract_all, Property, PropertyKind};
use crate::prove::{
    backtrace_chain, confirm_trigger, prove_bmc, violation_goals, ChainResult, ProofResult, ProofStatus,
    ProveError, ProveOptions,
};
use crate::reconfig::{
    apply_plan, equivalence_check, verify_mitigation, EquivResult, MitigationOptions, MitigationReport,
    ReconfigError, ReconfigPlan,
};
use crate::logic::{LogicValue, TruthTable};
use crate::sim::{random_stimulus, SimError, Simulator, Trigger};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Prove(#[from] ProveError),
    #[error(transparent)]
    Reconfig(#[from] ReconfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub converge: ConvergeOptions,
    pub prove: ProveOptions,
    /// Frames unrolled when the back-trace chain is not conclusive.
    pub bmc_depth: usize,
    /// Patch every low-coverage LUT instead of only trigger generators.
    pub all_low_coverage: bool,
    /// Extra random cycles used to refine the covers of planned LUTs once
    /// the trigger is known; 0 keeps the covers from convergence.
    pub refine_cycles: usize,
    pub mitigation: MitigationOptions,
}

impl PipelineOptions {
    pub fn new(seed: u64) -> Self {
        PipelineOptions {
            converge: ConvergeOptions::new(seed),
            prove: ProveOptions::default(),
            bmc_depth: 32,
            all_low_coverage: false,
            refine_cycles: 20_000,
            mitigation: MitigationOptions {
                seed,
                ..Default::default()
            },
        }
    }
}

/// Proof outcome for one extracted property.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyProof {
    pub property: Property,
    pub sva: String,
    pub chain: ChainResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bmc: Option<ProofResult>,
    pub status: ProofStatus,
    /// FAIL with a trigger that replays to the violation.
    pub confirmed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Trigger>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivSummary {
    pub full: EquivResult,
    pub care_set: EquivResult,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub design: String,
    pub options: PipelineOptions,
    pub convergence: ConvergenceReport,
    pub proofs: Vec<PropertyProof>,
    /// Confirmed trigger signals with their active value.
    pub triggers: Vec<(SignalId, bool)>,
    pub plan: ReconfigPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigation: Option<MitigationReport>,
    pub notes: Vec<String>,
}

impl PipelineReport {
    pub fn trojan_confirmed(&self) -> bool {
        self.proofs.iter().any(|p| p.confirmed)
    }

    /// Some proof ran out of budget without a verdict.
    pub fn has_unknown(&self) -> bool {
        self.proofs.iter().any(|p| p.status == ProofStatus::Unknown)
    }

    /// The trigger used for mitigation: the longest confirmed one.
    pub fn primary_trigger(&self) -> Option<&Trigger> {
        best_trigger(&self.proofs)
    }
}

fn best_trigger(proofs: &[PropertyProof]) -> Option<&Trigger> {
    let confirmed = proofs.iter().filter(|p| p.confirmed);
    let consts: Vec<&PropertyProof> = confirmed
        .clone()
        .filter(|p| matches!(p.property.kind, PropertyKind::Constant { .. }))
        .collect();
    let pool: Vec<&PropertyProof> = if consts.is_empty() { confirmed.collect() } else { consts };
    pool.into_iter()
        .filter_map(|p| p.trigger.as_ref())
        .fold(None, |best: Option<&Trigger>, t| match best {
            Some(b) if b.frames.len() >= t.frames.len() => Some(b),
            _ => Some(t),
        })
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub patched: Option<Netlist>,
}

fn replays(design: &Design, p: &Property, t: &Trigger) -> Result<bool, ProveError> {
    for g in violation_goals(p) {
        if confirm_trigger(design, &g, t)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Back-trace chain first; BMC when the chain is not an exact HOLDS or its
/// trigger does not replay.
pub fn prove_property(design: &Design, p: &Property, opts: &PipelineOptions) -> Result<PropertyProof, ProveError> {
    let chain = backtrace_chain(design, p, &opts.prove)?;
    let sva = emit_sva(p);
    if let Some(t) = &chain.trigger {
        if chain.status == ProofStatus::Fail && replays(design, p, t)? {
            return Ok(PropertyProof {
                property: p.clone(),
                sva,
                trigger: Some(t.clone()),
                chain,
                bmc: None,
                status: ProofStatus::Fail,
                confirmed: true,
            });
        }
    }
    if chain.status == ProofStatus::Holds && chain.exact {
        return Ok(PropertyProof {
            property: p.clone(),
            sva,
            chain,
            bmc: None,
            status: ProofStatus::Holds,
            confirmed: false,
            trigger: None,
        });
    }
    let bmc = prove_bmc(design, p, opts.bmc_depth, &opts.prove)?;
    let (status, confirmed, trigger) = match (&bmc.status, &bmc.trigger) {
        (ProofStatus::Fail, Some(t)) if replays(design, p, t)? => (ProofStatus::Fail, true, Some(t.clone())),
        (ProofStatus::Fail, _) => (ProofStatus::Unknown, false, None),
        (ProofStatus::Holds, _) if chain.status == ProofStatus::Holds => (ProofStatus::Holds, false, None),
        _ => (ProofStatus::Unknown, false, None),
    };
    Ok(PropertyProof {
        property: p.clone(),
        sva,
        chain,
        bmc: Some(bmc),
        status,
        confirmed,
        trigger,
    })
}

/// Addresses each LUT in `cells` sees on a fresh random run, skipping the
/// steps in which any watched trigger signal is active.
pub fn trigger_free_coverage(
    design: &Design,
    cells: &[CellIdx],
    watch: &[(SignalId, bool)],
    seed: u64,
    cycles: usize,
) -> Result<Vec<TruthTable>, SimError> {
    let stim = random_stimulus(design, seed, cycles);
    let inputs = stim.resolve(design, cycles)?;
    let watch: Vec<(SigIdx, LogicValue)> = watch
        .iter()
        .filter_map(|(s, v)| design.signal(s).map(|i| (i, LogicValue::from_bool(*v))))
        .collect();
    let mut covers: Vec<TruthTable> = cells
        .iter()
        .map(|&c| TruthTable::zeros(design.lut_inputs(c).map_or(0, |i| i.len() as u8)))
        .collect();
    let mut sim = Simulator::new(design);
    let mut frame = Vec::with_capacity(inputs.len());
    for t in 0..cycles {
        frame.clear();
        frame.extend(inputs.iter().map(|(s, v)| (*s, v[t])));
        sim.step(&frame)?;
        if watch.iter().any(|&(s, v)| sim.value(s) == v) {
            continue;
        }
        for (cov, &c) in covers.iter_mut().zip(cells) {
            let addr = design
                .lut_inputs(c)
                .unwrap_or(&[])
                .iter()
                .enumerate()
                .try_fold(0usize, |a, (b, &i)| sim.value(i).to_bool().map(|v| a | (v as usize) << b));
            if let Some(a) = addr {
                cov.set(a, true);
            }
        }
    }
    Ok(covers)
}

/// The LUT that produces `s`, looking through aliases and register data pins.
pub fn generating_lut(design: &Design, mut s: SigIdx) -> Option<CellIdx> {
    let mut seen = BTreeSet::new();
    while seen.insert(s) {
        let c = design.signals[s].driver?;
        match &design.cells[c].kind {
            FlatKind::Lut { .. } => return Some(c),
            FlatKind::Alias(i) => s = *i,
            FlatKind::Dff { data, .. } => s = *data,
            FlatKind::Const(_) => return None,
        }
    }
    None
}

pub fn run_pipeline(n: &Netlist, roles: &PortRoles, opts: &PipelineOptions) -> Result<PipelineOutput, PipelineError> {
    let design = Design::with_roles(n, roles)?;
    let convergence = converge(&design, &opts.converge)?;
    let result = &convergence.result;
    let props = extract_all(&design, result);
    let proofs = props
        .iter()
        .map(|p| prove_property(&design, p, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut notes = vec![];
    if !convergence.converged {
        notes.push("S and L did not converge within the schedule".to_string());
    }

    let mut triggers = vec![];
    for p in proofs.iter().filter(|p| p.confirmed) {
        if let PropertyKind::Constant { signal, value } = &p.property.kind {
            triggers.push((signal.clone(), !value));
        }
    }

    let mut cells: Vec<String> = vec![];
    let mut sources: Vec<String> = vec![];
    let mut add = |cell: &str, why: String| {
        if !cells.iter().any(|c| c == cell) && result.low_coverage_cell(cell).is_some() {
            cells.push(cell.to_string());
            sources.push(why);
        }
    };
    if opts.all_low_coverage {
        for l in &result.low_coverage {
            add(&l.cell, format!("low coverage {}", l.cell));
        }
    } else {
        for (s, _) in &triggers {
            let idx = design.signal(s).expect("proved signals exist");
            if let Some(c) = generating_lut(&design, idx) {
                add(&design.cells[c].name, format!("generates confirmed trigger {s}"));
            }
        }
        if triggers.is_empty() {
            for p in proofs.iter().filter(|p| p.confirmed) {
                if let PropertyKind::Never { cell, .. } = &p.property.kind {
                    add(cell, format!("reachable uncovered address in {cell}"));
                }
            }
        }
    }
    let mut covers: Vec<TruthTable> = cells
        .iter()
        .map(|c| result.low_coverage_cell(c).expect("plan cells are in L").cover)
        .collect();
    if opts.refine_cycles > 0 && !cells.is_empty() && !triggers.is_empty() {
        let idx: Vec<CellIdx> = cells.iter().map(|c| design.cell(c).expect("plan cells exist")).collect();
        let seed = opts.converge.seed.wrapping_add(1);
        let extra = trigger_free_coverage(&design, &idx, &triggers, seed, opts.refine_cycles)?;
        let mut gained = 0;
        for (cov, e) in covers.iter_mut().zip(extra) {
            let merged = TruthTable::new(cov.inputs(), cov.bits() | e.bits()).expect("same width");
            gained += merged.count_ones() - cov.count_ones();
            *cov = merged;
        }
        notes.push(format!(
            "covers of planned LUTs refined over {} trigger-free cycles (seed {seed}): {gained} addresses added",
            opts.refine_cycles
        ));
    }
    let mut plan = ReconfigPlan::default();
    for ((c, why), cov) in cells.iter().zip(sources).zip(covers) {
        let l = result.low_coverage_cell(c).expect("plan cells are in L");
        plan.entries.push(crate::reconfig::PlanEntry::new(c, l.init, cov)?);
        plan.sources.push(why);
    }

    let trigger_set: BTreeSet<SigIdx> = triggers
        .iter()
        .filter_map(|(s, _)| design.signal(s))
        .map(|s| design.alias_source(s))
        .collect();
    let generators: BTreeSet<CellIdx> = trigger_set.iter().filter_map(|&s| generating_lut(&design, s)).collect();
    for e in &plan.entries {
        let c = design.cell(&e.cell).expect("plan cells exist");
        let reads = design
            .lut_inputs(c)
            .unwrap_or(&[])
            .iter()
            .any(|&i| trigger_set.contains(&design.alias_source(i)));
        if reads && !generators.contains(&c) {
            notes.push(format!(
                "{} reads a trigger signal; its patch changes payload values under the trigger instead of freezing the trigger",
                e.cell
            ));
        }
    }

    let (mut equivalence, mut mitigation, mut patched) = (None, None, None);
    if !plan.is_empty() {
        let pn = apply_plan(n, &plan)?;
        let pd = Design::with_roles(&pn, roles)?;
        equivalence = Some(EquivSummary {
            full: equivalence_check(&design, &pd, None, opts.prove.conflict_budget)?,
            care_set: equivalence_check(&design, &pd, Some(&plan), opts.prove.conflict_budget)?,
        });
        match best_trigger(&proofs) {
            Some(t) if !triggers.is_empty() => {
                mitigation = Some(verify_mitigation(&design, &pd, t, &triggers, Some(&plan), &opts.mitigation)?);
            }
            _ => notes.push("no confirmed trigger signal to watch; mitigation not replayed".to_string()),
        }
        patched = Some(pn);
    }

    Ok(PipelineOutput {
        report: PipelineReport {
            design: design.name.clone(),
            options: opts.clone(),
            convergence,
            proofs,
            triggers,
            plan,
            equivalence,
            mitigation,
            notes,
        },
        patched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{gen_pattern_lock, gen_sdc_pair};
    use crate::reconfig::{EquivStatus, Verdict};

    #[test]
    fn pattern_lock_end_to_end() {
        let b = gen_pattern_lock(16, 0x5a3c, 4).unwrap();
        let out = run_pipeline(&b.netlist, &PortRoles::default(), &PipelineOptions::new(11)).unwrap();
        let r = &out.report;
        assert!(r.trojan_confirmed());
        assert_eq!(r.plan.entries.len(), 1);
        assert_eq!(r.plan.entries[0].cell, "u_cmp_root");
        let eq = r.equivalence.as_ref().unwrap();
        assert_eq!(eq.full.status, EquivStatus::Inequivalent);
        assert_eq!(eq.care_set.status, EquivStatus::Equivalent);
        assert_eq!(r.mitigation.as_ref().unwrap().verdict, Verdict::Pass, "{:#?}", r.mitigation);
    }

    #[test]
    fn sdc_holds() {
        let b = gen_sdc_pair(2).unwrap();
        let out = run_pipeline(&b.netlist, &PortRoles::default(), &PipelineOptions::new(3)).unwrap();
        let r = &out.report;
        assert!(!r.trojan_confirmed());
        assert!(r.plan.is_empty());
        assert!(r.proofs.iter().all(|p| p.status == ProofStatus::Holds));
        assert_eq!(r.proofs.len(), 8);
    }
}
