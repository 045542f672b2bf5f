//! LUT reconfiguration: flip the truth-table entries at addresses never seen
//! in simulation (new INIT = INIT XNOR coverage), then check what changed.

mod equiv;
mod mitigation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::LowCoverage;
use crate::logic::{TruthTable, TruthTableError};
use crate::netlist::{flatten, CellKind, Netlist, NetlistError};

pub use equiv::{equivalence_check, EquivMode, EquivResult, EquivStatus, EquivVector};
pub use mitigation::{verify_mitigation, MitigationOptions, MitigationReport, Verdict, WatchReport};

#[derive(Debug, Error)]
pub enum ReconfigError {
    #[error("INIT and coverage lengths differ ({0} vs {1} bits)")]
    LengthMismatch(usize, usize),
    #[error("plan names cell '{0}', which is not in the netlist")]
    UnknownCell(String),
    #[error("plan names cell '{0}', which is not a LUT")]
    NotALut(String),
    #[error("stale plan: cell '{cell}' has INIT {found}, plan expected {expected}")]
    StalePlan {
        cell: String,
        expected: String,
        found: String,
    },
    #[error("designs differ in {what}: {detail}")]
    InterfaceMismatch { what: String, detail: String },
    #[error(transparent)]
    Table(TruthTableError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

impl From<TruthTableError> for ReconfigError {
    fn from(e: TruthTableError) -> Self {
        match e {
            TruthTableError::LengthMismatch(a, b) => ReconfigError::LengthMismatch(a, b),
            other => ReconfigError::Table(other),
        }
    }
}

/// Bitwise XNOR: covered entries are kept, uncovered ones flipped.
pub fn reconfigure_init(init: &TruthTable, coverage: &TruthTable) -> Result<TruthTable, ReconfigError> {
    Ok(init.xnor(coverage)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "PlanEntryJson", try_from = "PlanEntryJson")]
pub struct PlanEntry {
    pub cell: String,
    pub old_init: TruthTable,
    pub coverage: TruthTable,
    pub new_init: TruthTable,
}

impl PlanEntry {
    pub fn new(cell: &str, old_init: TruthTable, coverage: TruthTable) -> Result<PlanEntry, ReconfigError> {
        Ok(PlanEntry {
            cell: cell.to_string(),
            new_init: reconfigure_init(&old_init, &coverage)?,
            old_init,
            coverage,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PlanEntryJson {
    cell: String,
    k: u8,
    old_init_hex: String,
    coverage_hex: String,
    new_init_hex: String,
}

impl From<PlanEntry> for PlanEntryJson {
    fn from(e: PlanEntry) -> Self {
        PlanEntryJson {
            k: e.old_init.inputs(),
            old_init_hex: e.old_init.to_hex(),
            coverage_hex: e.coverage.to_hex(),
            new_init_hex: e.new_init.to_hex(),
            cell: e.cell,
        }
    }
}

impl TryFrom<PlanEntryJson> for PlanEntry {
    type Error = ReconfigError;

    fn try_from(j: PlanEntryJson) -> Result<Self, ReconfigError> {
        let old = TruthTable::from_hex(j.k, &j.old_init_hex)?;
        let cov = TruthTable::from_hex(j.k, &j.coverage_hex)?;
        let e = PlanEntry::new(&j.cell, old, cov)?;
        if e.new_init.to_hex() != j.new_init_hex.to_ascii_lowercase() {
            return Err(ReconfigError::StalePlan {
                cell: j.cell,
                expected: e.new_init.to_hex(),
                found: j.new_init_hex,
            });
        }
        Ok(e)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconfigPlan {
    pub entries: Vec<PlanEntry>,
    /// Why each cell was chosen, free text per finding.
    #[serde(default)]
    pub sources: Vec<String>,
}

impl ReconfigPlan {
    pub fn from_low_coverage<'a>(cells: impl IntoIterator<Item = &'a LowCoverage>) -> ReconfigPlan {
        let mut plan = ReconfigPlan::default();
        for l in cells {
            plan.entries.push(PlanEntry::new(&l.cell, l.init, l.cover).expect("cover width matches INIT"));
            plan.sources.push(format!("low coverage {} ({} uncovered)", l.cell, l.uncovered_count()));
        }
        plan
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, cell: &str) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.cell == cell)
    }
}

/// Returns a copy of `n` with the plan's INITs written in. Cell names are
/// flat (dot-joined) names, so hierarchical netlists are flattened first.
pub fn apply_plan(n: &Netlist, plan: &ReconfigPlan) -> Result<Netlist, ReconfigError> {
    let mut out = if n.is_flat() { n.clone() } else { flatten(n)? };
    let m = out.top_module_mut();
    for e in &plan.entries {
        let cell = m
            .cells
            .iter_mut()
            .find(|c| c.id == e.cell)
            .ok_or_else(|| ReconfigError::UnknownCell(e.cell.clone()))?;
        let CellKind::Lut { init, .. } = &mut cell.kind else {
            return Err(ReconfigError::NotALut(e.cell.clone()));
        };
        if *init != e.old_init {
            return Err(ReconfigError::StalePlan {
                cell: e.cell.clone(),
                expected: e.old_init.to_hex(),
                found: init.to_hex(),
            });
        }
        *init = e.new_init;
    }
    Ok(out)
}
