//! Invariants extracted from analysis findings, with SVA and BLIF output.

mod emit;
pub mod qm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{AnalysisResult, LowSwitchReason};
use crate::logic::{LogicValue, TruthTable};
use crate::netlist::{Design, FlatKind, SignalId};

pub use emit::{emit_blif, emit_sva, emit_sva_all};
pub use qm::Cube;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PropertyError {
    #[error("signal '{signal}' never resolved ({value}); there is no constant to assert")]
    NotConstant { signal: String, value: LogicValue },
    #[error("LUT '{0}' is fully covered; nothing to extract")]
    FullyCovered(String),
    #[error("LUT '{cell}' has {lines} line names for {k} inputs")]
    LineCount { cell: String, lines: usize, k: u8 },
}

/// Where a property came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "finding", rename_all = "snake_case")]
pub enum Provenance {
    LowSwitch { reason: LowSwitchReason },
    LowCoverage { cover_hex: String },
    Manual,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropertyKind {
    /// `signal` equals `value` in every reachable state.
    Constant { signal: SignalId, value: bool },
    /// No cube over the LUT's address lines is ever active.
    Never {
        cell: String,
        /// Address line names, line 0 first.
        lines: Vec<SignalId>,
        cubes: Vec<Cube>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    #[serde(flatten)]
    pub kind: PropertyKind,
    pub source: Provenance,
}

impl Property {
    /// Short identifier, unique per finding.
    pub fn name(&self) -> String {
        match &self.kind {
            PropertyKind::Constant { signal, .. } => format!("const:{signal}"),
            PropertyKind::Never { cell, .. } => format!("never:{cell}"),
        }
    }

    /// Renames the address lines of a never-property.
    pub fn with_lines(mut self, names: Vec<SignalId>) -> Result<Property, PropertyError> {
        if let PropertyKind::Never { cell, lines, .. } = &mut self.kind {
            if names.len() != lines.len() {
                return Err(PropertyError::LineCount {
                    cell: cell.clone(),
                    lines: names.len(),
                    k: lines.len() as u8,
                });
            }
            *lines = names;
        }
        Ok(self)
    }
}

/// Asserts that `signal` keeps the constant value it showed in simulation.
pub fn extract_constant(signal: SignalId, observed: LogicValue) -> Result<Property, PropertyError> {
    let Some(value) = observed.to_bool() else {
        return Err(PropertyError::NotConstant {
            signal: signal.to_string(),
            value: observed,
        });
    };
    Ok(Property {
        kind: PropertyKind::Constant { signal, value },
        source: Provenance::Manual,
    })
}

/// Minimizes the uncovered addresses of a LUT into never-active cubes.
/// Lines are named `a0`, `a1`, ... until renamed with [`Property::with_lines`].
pub fn extract_coverage(cell: &str, cover: &TruthTable) -> Result<Property, PropertyError> {
    if cover.is_full() {
        return Err(PropertyError::FullyCovered(cell.to_string()));
    }
    let k = cover.inputs();
    let uncovered = !cover.bits() & TruthTable::ones(k).bits();
    Ok(Property {
        kind: PropertyKind::Never {
            cell: cell.to_string(),
            lines: (0..k).map(|i| SignalId::scalar(format!("a{i}"))).collect(),
            cubes: qm::minimize(k, uncovered),
        },
        source: Provenance::LowCoverage {
            cover_hex: cover.to_hex(),
        },
    })
}

/// Every property implied by an analysis result. Constant-driven nets and
/// never-resolved signals are skipped.
pub fn extract_all(design: &Design, result: &AnalysisResult) -> Vec<Property> {
    let mut out = vec![];
    for l in &result.low_switch {
        if l.reason != LowSwitchReason::CandidateTrigger {
            continue;
        }
        if let Ok(mut p) = extract_constant(l.signal.clone(), l.observed) {
            p.source = Provenance::LowSwitch { reason: l.reason };
            out.push(p);
        }
    }
    for l in &result.low_coverage {
        let Ok(p) = extract_coverage(&l.cell, &l.cover) else {
            continue;
        };
        let lines = match design.cell(&l.cell).map(|c| &design.cells[c].kind) {
            Some(FlatKind::Lut { inputs, .. }) => {
                inputs.iter().map(|&s| design.signals[s].id.clone()).collect()
            }
            _ => continue,
        };
        out.push(p.with_lines(lines).expect("LUT width matches its cover"));
    }
    out
}
