//! Indexed, flattened view of a netlist used by simulation, analysis and proofs.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{flatten, validate, BitRef, CellKind, Direction, Netlist, NetlistError, SignalId};
use crate::logic::TruthTable;

pub type SigIdx = usize;
pub type CellIdx = usize;

/// How random stimulus treats a primary input port.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    Clock,
    /// Active-high reset, asserted for the first `reset_cycles` cycles.
    Reset,
    #[default]
    Free,
}

/// Port-role sidecar: explicit roles override the structural inference.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortRoles {
    #[serde(default)]
    pub roles: BTreeMap<String, PortRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_cycles: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SignalInfo {
    pub id: SignalId,
    pub driver: Option<CellIdx>,
    /// Cells reading this signal.
    pub fanout: Vec<CellIdx>,
    pub primary_input: bool,
    pub primary_output: bool,
    /// Internal constant nets standing in for literal connections.
    pub synthetic: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FlatKind {
    Lut {
        init: TruthTable,
        inputs: Vec<SigIdx>,
    },
    Dff {
        clock: SigIdx,
        data: SigIdx,
        reset: Option<(SigIdx, bool)>,
    },
    Const(bool),
    Alias(SigIdx),
}

#[derive(Clone, Debug)]
pub struct FlatCell {
    pub name: String,
    pub kind: FlatKind,
    pub output: SigIdx,
    pub line: usize,
    pub synthetic: bool,
}

impl FlatCell {
    pub fn is_comb(&self) -> bool {
        !matches!(self.kind, FlatKind::Dff { .. })
    }

    pub fn inputs(&self) -> Vec<SigIdx> {
        match &self.kind {
            FlatKind::Lut { inputs, .. } => inputs.clone(),
            FlatKind::Dff { clock, data, reset } => {
                let mut v = vec![*clock, *data];
                v.extend(reset.map(|(r, _)| r));
                v
            }
            FlatKind::Const(_) => vec![],
            FlatKind::Alias(i) => vec![*i],
        }
    }
}

#[derive(Clone, Debug)]
pub struct PortInfo {
    pub name: String,
    pub direction: Direction,
    /// Bits, least significant first.
    pub bits: Vec<SigIdx>,
    pub role: PortRole,
}

#[derive(Clone, Debug)]
pub struct Design {
    pub name: String,
    /// The flattened netlist this design was built from.
    pub netlist: Netlist,
    pub signals: Vec<SignalInfo>,
    pub cells: Vec<FlatCell>,
    pub inputs: Vec<PortInfo>,
    pub outputs: Vec<PortInfo>,
    /// Combinational cells (LUT, alias, constant) in topological order.
    pub comb_order: Vec<CellIdx>,
    pub luts: Vec<CellIdx>,
    pub dffs: Vec<CellIdx>,
    pub reset_cycles: usize,
    sig_index: HashMap<SignalId, SigIdx>,
    cell_index: HashMap<String, CellIdx>,
}

struct Builder {
    signals: Vec<SignalInfo>,
    index: HashMap<SignalId, SigIdx>,
    cells: Vec<FlatCell>,
    consts: [Option<SigIdx>; 2],
}

impl Builder {
    fn signal(&mut self, id: &SignalId) -> SigIdx {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.signals.push(SignalInfo {
            id: id.clone(),
            driver: None,
            fanout: vec![],
            primary_input: false,
            primary_output: false,
            synthetic: false,
        });
        self.index.insert(id.clone(), self.signals.len() - 1);
        self.signals.len() - 1
    }

    fn bit(&mut self, b: &BitRef) -> SigIdx {
        match b {
            BitRef::Net(s) => self.signal(s),
            BitRef::Const(v) => {
                if let Some(i) = self.consts[*v as usize] {
                    return i;
                }
                let id = SignalId::scalar(format!("1'b{}", *v as u8));
                let s = self.signal(&id);
                self.signals[s].synthetic = true;
                self.cells.push(FlatCell {
                    name: format!("$const{}", *v as u8),
                    kind: FlatKind::Const(*v),
                    output: s,
                    line: 0,
                    synthetic: true,
                });
                self.consts[*v as usize] = Some(s);
                s
            }
        }
    }
}

impl Design {
    /// Builds the indexed design, flattening and validating first. Port roles
    /// are inferred: inputs reaching DFF clock pins are clocks, inputs reaching
    /// DFF reset pins are resets.
    pub fn new(n: &Netlist) -> Result<Design, NetlistError> {
        Design::with_roles(n, &PortRoles::default())
    }

    pub fn with_roles(n: &Netlist, roles: &PortRoles) -> Result<Design, NetlistError> {
        let flat = flatten(n)?;
        let diags = validate(&flat);
        if !diags.is_empty() {
            return Err(super::validate::into_error(diags));
        }
        let m = flat.top_module();
        let mut b = Builder {
            signals: vec![],
            index: HashMap::new(),
            cells: vec![],
            consts: [None, None],
        };
        for s in m.all_bits() {
            b.signal(&s);
        }
        for c in &m.cells {
            let output = b.bit(c.output());
            let kind = match &c.kind {
                CellKind::Lut { init, inputs, .. } => FlatKind::Lut {
                    init: *init,
                    inputs: inputs.iter().map(|i| b.bit(i)).collect(),
                },
                CellKind::Dff {
                    clock, data, reset, ..
                } => FlatKind::Dff {
                    clock: b.bit(clock),
                    data: b.bit(data),
                    reset: reset.as_ref().map(|r| (b.bit(&r.signal), r.value)),
                },
                CellKind::Const { value, .. } => FlatKind::Const(*value),
                CellKind::Alias { input, .. } => FlatKind::Alias(b.bit(input)),
            };
            b.cells.push(FlatCell {
                name: c.id.clone(),
                kind,
                output,
                line: c.line,
                synthetic: false,
            });
        }
        let Builder {
            mut signals,
            index: sig_index,
            cells,
            ..
        } = b;
        for (ci, c) in cells.iter().enumerate() {
            signals[c.output].driver = Some(ci);
            for i in c.inputs() {
                if !signals[i].fanout.contains(&ci) {
                    signals[i].fanout.push(ci);
                }
            }
        }
        let mut ports = |dir: Direction| -> Vec<PortInfo> {
            m.ports
                .iter()
                .filter(|p| p.direction == dir)
                .map(|p| {
                    let bits: Vec<SigIdx> = super::expand(&p.name, p.range)
                        .iter()
                        .map(|s| sig_index[s])
                        .collect();
                    for &s in &bits {
                        match dir {
                            Direction::Input => signals[s].primary_input = true,
                            Direction::Output => signals[s].primary_output = true,
                        }
                    }
                    PortInfo {
                        name: p.name.clone(),
                        direction: dir,
                        bits,
                        role: PortRole::Free,
                    }
                })
                .collect()
        };
        let mut inputs = ports(Direction::Input);
        let outputs = ports(Direction::Output);

        let luts: Vec<CellIdx> = (0..cells.len())
            .filter(|&c| matches!(cells[c].kind, FlatKind::Lut { .. }))
            .collect();
        let dffs: Vec<CellIdx> = (0..cells.len())
            .filter(|&c| matches!(cells[c].kind, FlatKind::Dff { .. }))
            .collect();

        // topological order of combinational cells
        let mut indeg = vec![0usize; cells.len()];
        for (ci, c) in cells.iter().enumerate() {
            if c.is_comb() {
                indeg[ci] = c
                    .inputs()
                    .iter()
                    .filter(|&&s| signals[s].driver.is_some_and(|d| cells[d].is_comb()))
                    .count();
            }
        }
        let mut queue: VecDeque<CellIdx> = (0..cells.len())
            .filter(|&c| cells[c].is_comb() && indeg[c] == 0)
            .collect();
        let mut comb_order = vec![];
        while let Some(c) = queue.pop_front() {
            comb_order.push(c);
            for &f in &signals[cells[c].output].fanout {
                if cells[f].is_comb() {
                    // a cell reading the same signal on several pins was counted per pin
                    let k = cells[f].inputs().iter().filter(|&&s| s == cells[c].output).count();
                    indeg[f] -= k;
                    if indeg[f] == 0 {
                        queue.push_back(f);
                    }
                }
            }
        }
        debug_assert_eq!(
            comb_order.len(),
            cells.iter().filter(|c| c.is_comb()).count(),
            "validated netlists are acyclic"
        );

        let mut design = Design {
            name: m.name.clone(),
            netlist: flat.clone(),
            signals,
            cells,
            inputs: vec![],
            outputs,
            comb_order,
            luts,
            dffs,
            reset_cycles: roles.reset_cycles.unwrap_or(1),
            sig_index,
            cell_index: HashMap::new(),
        };
        design.cell_index = design
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();

        for p in &mut inputs {
            p.role = match roles.roles.get(&p.name) {
                Some(r) => *r,
                None => design.infer_role(&p.bits),
            };
        }
        design.inputs = inputs;
        Ok(design)
    }

    fn infer_role(&self, bits: &[SigIdx]) -> PortRole {
        let mut clock = false;
        let mut reset = false;
        for &d in &self.dffs {
            if let FlatKind::Dff {
                clock: c, reset: r, ..
            } = &self.cells[d].kind
            {
                clock |= bits.contains(&self.alias_source(*c));
                if let Some((r, _)) = r {
                    reset |= bits.contains(&self.alias_source(*r));
                }
            }
        }
        if clock {
            PortRole::Clock
        } else if reset {
            PortRole::Reset
        } else {
            PortRole::Free
        }
    }

    /// Follows alias cells back to the signal that actually carries the value.
    pub fn alias_source(&self, mut s: SigIdx) -> SigIdx {
        let mut guard = 0;
        while let Some(FlatKind::Alias(i)) = self.signals[s].driver.map(|d| &self.cells[d].kind) {
            s = *i;
            guard += 1;
            if guard > self.cells.len() {
                break;
            }
        }
        s
    }

    /// Constant value if the signal is (through aliases) driven by a constant cell.
    pub fn const_driver(&self, s: SigIdx) -> Option<bool> {
        let src = self.alias_source(s);
        match self.signals[src].driver.map(|d| &self.cells[d].kind) {
            Some(FlatKind::Const(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn signal(&self, id: &SignalId) -> Option<SigIdx> {
        self.sig_index.get(id).copied()
    }

    /// Looks up a signal by its display name (`name` or `name[i]`).
    pub fn signal_named(&self, name: &str) -> Option<SigIdx> {
        let id: SignalId = name.parse().expect("infallible");
        self.signal(&id)
            .or_else(|| self.signal(&SignalId::scalar(name)))
    }

    pub fn cell(&self, name: &str) -> Option<CellIdx> {
        self.cell_index.get(name).copied()
    }

    pub fn signal_id(&self, s: SigIdx) -> &SignalId {
        &self.signals[s].id
    }

    pub fn role_of(&self, s: SigIdx) -> Option<PortRole> {
        self.inputs
            .iter()
            .find(|p| p.bits.contains(&s))
            .map(|p| p.role)
    }

    pub fn is_clock(&self, s: SigIdx) -> bool {
        self.role_of(s) == Some(PortRole::Clock)
    }

    /// Primary input bits with their roles, in port order.
    pub fn input_bits(&self) -> Vec<(SigIdx, PortRole)> {
        self.inputs
            .iter()
            .flat_map(|p| p.bits.iter().map(move |&b| (b, p.role)))
            .collect()
    }

    pub fn output_bits(&self) -> Vec<SigIdx> {
        self.outputs.iter().flat_map(|p| p.bits.clone()).collect()
    }

    /// Signals visible to users (everything except internal constant nets).
    pub fn visible_signals(&self) -> impl Iterator<Item = SigIdx> + '_ {
        (0..self.signals.len()).filter(|&s| !self.signals[s].synthetic)
    }

    /// Declared reset value of a DFF, if it has a reset.
    pub fn reset_value(&self, dff: CellIdx) -> Option<bool> {
        match &self.cells[dff].kind {
            FlatKind::Dff { reset, .. } => reset.map(|(_, v)| v),
            _ => None,
        }
    }

    /// The DFF driving `s` directly (its Q output), if any.
    pub fn dff_of(&self, s: SigIdx) -> Option<CellIdx> {
        self.signals[s]
            .driver
            .filter(|&d| matches!(self.cells[d].kind, FlatKind::Dff { .. }))
    }

    /// Number of address lines of a LUT cell.
    pub fn lut_inputs(&self, c: CellIdx) -> Option<&[SigIdx]> {
        match &self.cells[c].kind {
            FlatKind::Lut { inputs, .. } => Some(inputs),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn roles_are_inferred() {
        let n = parse_netlist(
            "module t(input clk, input rst, input d, output q);
             wire c2;
             assign c2 = clk;
             DFF #(.RESET_VALUE(1'b1)) r (.C(c2), .D(d), .R(rst), .Q(q));
             endmodule",
            None,
        )
        .unwrap();
        let d = Design::new(&n).unwrap();
        let roles: Vec<PortRole> = d.inputs.iter().map(|p| p.role).collect();
        assert_eq!(roles, vec![PortRole::Clock, PortRole::Reset, PortRole::Free]);
        let overridden = Design::with_roles(
            &n,
            &PortRoles {
                roles: BTreeMap::from([("rst".to_string(), PortRole::Free)]),
                reset_cycles: Some(3),
            },
        )
        .unwrap();
        assert_eq!(overridden.inputs[1].role, PortRole::Free);
        assert_eq!(overridden.reset_cycles, 3);
        assert_eq!(d.reset_value(d.dffs[0]), Some(true));
    }

    #[test]
    fn literal_connections_become_synthetic_constants() {
        let n = parse_netlist(
            "module t(input a, output y); LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(1'b1), .O(y)); endmodule",
            None,
        )
        .unwrap();
        let d = Design::new(&n).unwrap();
        let one = d.signal_named("1'b1").unwrap();
        assert!(d.signals[one].synthetic);
        assert_eq!(d.const_driver(one), Some(true));
        assert_eq!(d.comb_order.len(), 2);
        assert_eq!(d.visible_signals().count(), 2);
    }
}
