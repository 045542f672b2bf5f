//! LUT-level netlists: data model, structural Verilog subset reader/writer,
//! flattening and validation.
//!
//! The accepted grammar is documented in `docs/netlist-grammar.md`. In short:
//! `module`/`endmodule`, `input`/`output`/`wire` declarations with optional
//! `[msb:lsb]` ranges, `assign` of constants and aliases, module instances,
//! and the primitives `LUT1`..`LUT6`, `DFF`, `CONST0`, `CONST1` (plus `BUF`,
//! `INV`, `MUX2`, `GND`, `VCC`, ingested as equivalent LUTs/constants).

mod design;
mod emit;
mod flatten;
mod parse;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::TruthTable;

pub use design::{CellIdx, Design, FlatCell, FlatKind, PortInfo, PortRole, PortRoles, SigIdx, SignalInfo};
pub use emit::emit_netlist;
pub use flatten::flatten;
pub use parse::{parse_netlist, parse_netlist_unchecked};
pub use validate::{validate, Diagnostic, DiagnosticKind};

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown primitive or module '{name}'")]
    UnknownPrimitive { name: String, line: usize },
    #[error("line {line}: cell '{cell}' INIT has {got} bits, expected {expected}")]
    InitWidth {
        cell: String,
        expected: usize,
        got: usize,
        line: usize,
    },
    #[error("net '{net}' has multiple drivers: {}", drivers.join(", "))]
    MultipleDrivers { net: String, drivers: Vec<String> },
    #[error("recursive instantiation: {}", chain.join(" -> "))]
    RecursiveInstantiation { chain: Vec<String> },
    #[error("top module '{0}' not found")]
    MissingTop(String),
    #[error("cannot determine top module; candidates: {}", .0.join(", "))]
    AmbiguousTop(Vec<String>),
    #[error("invalid netlist: {}", .0.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Scalar signal name: hierarchical dot-joined path plus optional bit index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId {
    pub name: String,
    pub index: Option<i64>,
}

impl SignalId {
    pub fn scalar(name: impl Into<String>) -> Self {
        SignalId {
            name: name.into(),
            index: None,
        }
    }

    pub fn bit(name: impl Into<String>, index: i64) -> Self {
        SignalId {
            name: name.into(),
            index: Some(index),
        }
    }

    /// Same bit under a hierarchical prefix (`prefix.name`).
    pub fn prefixed(&self, prefix: &str) -> Self {
        SignalId {
            name: format!("{prefix}.{}", self.name),
            index: self.index,
        }
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.name, i),
            None => f.write_str(&self.name),
        }
    }
}

impl FromStr for SignalId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix(']') {
            if let Some((name, idx)) = body.rsplit_once('[') {
                if let Ok(i) = idx.trim().parse::<i64>() {
                    return Ok(SignalId::bit(name.trim_end(), i));
                }
            }
        }
        Ok(SignalId::scalar(s))
    }
}

impl Serialize for SignalId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignalId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().expect("infallible"))
    }
}

/// One bit of a connection: a net bit or a literal constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitRef {
    Net(SignalId),
    Const(bool),
}

impl BitRef {
    pub fn net(&self) -> Option<&SignalId> {
        match self {
            BitRef::Net(s) => Some(s),
            BitRef::Const(_) => None,
        }
    }
}

impl fmt::Display for BitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitRef::Net(s) => write!(f, "{s}"),
            BitRef::Const(b) => write!(f, "1'b{}", *b as u8),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Input,
    Output,
}

/// Declared vector range `[msb:lsb]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Range {
    pub msb: i64,
    pub lsb: i64,
}

impl Range {
    pub fn width(&self) -> usize {
        (self.msb - self.lsb).unsigned_abs() as usize + 1
    }

    /// Bit indices ordered from least to most significant.
    pub fn indices(&self) -> Vec<i64> {
        if self.msb >= self.lsb {
            (self.lsb..=self.msb).collect()
        } else {
            (self.msb..=self.lsb).rev().collect()
        }
    }

    pub fn contains(&self, i: i64) -> bool {
        i >= self.msb.min(self.lsb) && i <= self.msb.max(self.lsb)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub range: Option<Range>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetDecl {
    pub name: String,
    pub range: Option<Range>,
}

/// Synchronous, active-high reset of a DFF.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncReset {
    pub signal: BitRef,
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// k-input LUT; `inputs[i]` is address line i.
    Lut {
        init: TruthTable,
        inputs: Vec<BitRef>,
        output: BitRef,
    },
    /// Positive-edge flip-flop on the global clock.
    Dff {
        clock: BitRef,
        data: BitRef,
        q: BitRef,
        reset: Option<SyncReset>,
    },
    Const {
        value: bool,
        output: BitRef,
    },
    /// Zero-delay wire alias produced by `assign a = b;` and by flattening.
    Alias {
        input: BitRef,
        output: BitRef,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub id: String,
    pub kind: CellKind,
    /// Source line, 0 when synthesized.
    pub line: usize,
}

impl Cell {
    pub fn output(&self) -> &BitRef {
        match &self.kind {
            CellKind::Lut { output, .. } => output,
            CellKind::Dff { q, .. } => q,
            CellKind::Const { output, .. } => output,
            CellKind::Alias { output, .. } => output,
        }
    }

    /// All bits the cell reads (for a DFF: clock, data, reset).
    pub fn inputs(&self) -> Vec<&BitRef> {
        match &self.kind {
            CellKind::Lut { inputs, .. } => inputs.iter().collect(),
            CellKind::Dff {
                clock, data, reset, ..
            } => {
                let mut v = vec![clock, data];
                if let Some(r) = reset {
                    v.push(&r.signal);
                }
                v
            }
            CellKind::Const { .. } => vec![],
            CellKind::Alias { input, .. } => vec![input],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub port: String,
    /// Bits ordered least significant first.
    pub bits: Vec<BitRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub module: String,
    pub connections: Vec<Connection>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    pub ports: Vec<Port>,
    pub nets: Vec<NetDecl>,
    pub cells: Vec<Cell>,
    pub instances: Vec<Instance>,
}

impl Module {
    pub fn new(name: impl Into<String>) -> Self {
        Module {
            name: name.into(),
            ports: vec![],
            nets: vec![],
            cells: vec![],
            instances: vec![],
        }
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// Declared range of a port or net; `Some(None)` for scalars.
    pub fn declared(&self, name: &str) -> Option<Option<Range>> {
        self.port(name)
            .map(|p| p.range)
            .or_else(|| self.nets.iter().find(|n| n.name == name).map(|n| n.range))
    }

    /// Scalar bits of a declared port or net, least significant first.
    pub fn bits_of(&self, name: &str) -> Option<Vec<SignalId>> {
        self.declared(name).map(|r| expand(name, r))
    }

    /// Every scalar signal declared in the module: ports first, then nets.
    pub fn all_bits(&self) -> Vec<SignalId> {
        let mut out = vec![];
        for p in &self.ports {
            out.extend(expand(&p.name, p.range));
        }
        for n in &self.nets {
            if self.port(&n.name).is_none() {
                out.extend(expand(&n.name, n.range));
            }
        }
        out
    }

    pub fn cell(&self, id: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.id == id)
    }
}

pub(crate) fn expand(name: &str, range: Option<Range>) -> Vec<SignalId> {
    match range {
        None => vec![SignalId::scalar(name)],
        Some(r) => r.indices().into_iter().map(|i| SignalId::bit(name, i)).collect(),
    }
}

/// A hierarchical design: named modules plus the designated top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pub modules: BTreeMap<String, Module>,
    pub top: String,
}

impl Netlist {
    pub fn single(module: Module) -> Self {
        let top = module.name.clone();
        Netlist {
            modules: BTreeMap::from([(top.clone(), module)]),
            top,
        }
    }

    pub fn top_module(&self) -> &Module {
        &self.modules[&self.top]
    }

    pub fn top_module_mut(&mut self) -> &mut Module {
        self.modules.get_mut(&self.top).expect("top exists")
    }

    pub fn is_flat(&self) -> bool {
        self.modules.len() == 1 && self.top_module().instances.is_empty()
    }

    /// Copy with source lines cleared and cells, instances and nets sorted.
    pub fn canonical(&self) -> Netlist {
        let mut n = self.clone();
        for m in n.modules.values_mut() {
            for c in &mut m.cells {
                c.line = 0;
            }
            for i in &mut m.instances {
                i.line = 0;
            }
            m.cells.sort_by(|a, b| a.id.cmp(&b.id));
            m.instances.sort_by(|a, b| a.name.cmp(&b.name));
            m.nets.sort_by(|a, b| a.name.cmp(&b.name));
        }
        n
    }

    /// Same modules, ports, cells, INITs and connectivity, ignoring order and source lines.
    pub fn isomorphic(&self, other: &Netlist) -> bool {
        self.canonical() == other.canonical()
    }
}
