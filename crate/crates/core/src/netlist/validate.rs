use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{flatten, BitRef, CellKind, Direction, Module, Netlist, NetlistError, SignalId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// A reference to a net that is not declared (or a bit outside its range).
    DanglingNet,
    MultipleDrivers,
    CombinationalLoop,
    DuplicateName,
    UnknownModule,
    PortMismatch,
    RecursiveInstantiation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub module: String,
    pub message: String,
    /// Net involved, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net: Option<String>,
    /// Cells (or instances) involved.
    pub cells: Vec<String>,
}

fn diag(
    kind: DiagnosticKind,
    module: &Module,
    message: String,
    net: Option<String>,
    cells: Vec<String>,
) -> Diagnostic {
    Diagnostic {
        kind,
        module: module.name.clone(),
        message,
        net,
        cells,
    }
}

fn check_ref(m: &Module, s: &SignalId) -> bool {
    match m.declared(&s.name) {
        None => false,
        Some(None) => s.index.is_none(),
        Some(Some(r)) => s.index.is_some_and(|i| r.contains(i)),
    }
}

fn check_module(n: &Netlist, m: &Module, out: &mut Vec<Diagnostic>) {
    use DiagnosticKind::*;

    let mut names: HashMap<&str, usize> = HashMap::new();
    for p in &m.ports {
        *names.entry(&p.name).or_default() += 1;
    }
    for net in &m.nets {
        match m.port(&net.name) {
            // redeclaring a port as a wire is legal when the ranges agree
            Some(p) if p.range == net.range => {}
            _ => *names.entry(&net.name).or_default() += 1,
        }
    }
    let mut dup: Vec<&str> = names.iter().filter(|(_, c)| **c > 1).map(|(n, _)| *n).collect();
    dup.sort();
    for name in dup {
        out.push(diag(
            DuplicateName,
            m,
            format!("'{name}' declared more than once in '{}'", m.name),
            Some(name.to_string()),
            vec![],
        ));
    }
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &m.cells {
        *ids.entry(&c.id).or_default() += 1;
    }
    for i in &m.instances {
        *ids.entry(&i.name).or_default() += 1;
    }
    for (id, count) in ids {
        if count > 1 {
            out.push(diag(
                DuplicateName,
                m,
                format!("cell name '{id}' used {count} times in '{}'", m.name),
                None,
                vec![id.to_string()],
            ));
        }
    }

    let mut drivers: BTreeMap<SignalId, Vec<String>> = BTreeMap::new();
    for p in m.ports.iter().filter(|p| p.direction == Direction::Input) {
        for b in super::expand(&p.name, p.range) {
            drivers.entry(b).or_default().push(format!("input port {}", p.name));
        }
    }
    let dangling = |what: &str, b: &BitRef, out: &mut Vec<Diagnostic>| {
        if let BitRef::Net(s) = b {
            if !check_ref(m, s) {
                out.push(diag(
                    DanglingNet,
                    m,
                    format!("{what} references undeclared net '{s}'"),
                    Some(s.to_string()),
                    vec![what.to_string()],
                ));
            }
        }
    };
    for c in &m.cells {
        for b in c.inputs() {
            dangling(&c.id, b, out);
        }
        dangling(&c.id, c.output(), out);
        if let BitRef::Net(s) = c.output() {
            drivers.entry(s.clone()).or_default().push(c.id.clone());
        }
    }
    for inst in &m.instances {
        for conn in &inst.connections {
            for b in &conn.bits {
                dangling(&inst.name, b, out);
            }
        }
        let Some(child) = n.modules.get(&inst.module) else {
            out.push(diag(
                UnknownModule,
                m,
                format!("instance '{}' of unknown module '{}'", inst.name, inst.module),
                None,
                vec![inst.name.clone()],
            ));
            continue;
        };
        for conn in &inst.connections {
            match child.port(&conn.port) {
                None => out.push(diag(
                    PortMismatch,
                    m,
                    format!(
                        "instance '{}' connects unknown port '{}' of '{}'",
                        inst.name, conn.port, child.name
                    ),
                    None,
                    vec![inst.name.clone()],
                )),
                Some(p) => {
                    let width = p.range.map_or(1, |r| r.width());
                    if !conn.bits.is_empty() && conn.bits.len() != width {
                        out.push(diag(
                            PortMismatch,
                            m,
                            format!(
                                "instance '{}' port '{}' is {width} bits wide but {} bits are connected",
                                inst.name,
                                conn.port,
                                conn.bits.len()
                            ),
                            None,
                            vec![inst.name.clone()],
                        ));
                    }
                    if p.direction == Direction::Output {
                        for b in conn.bits.iter().filter_map(|b| b.net()) {
                            drivers
                                .entry(b.clone())
                                .or_default()
                                .push(format!("{}.{}", inst.name, conn.port));
                        }
                    }
                }
            }
        }
    }
    for (net, ds) in drivers {
        if ds.len() > 1 {
            out.push(diag(
                MultipleDrivers,
                m,
                format!("net '{net}' is driven by {}", ds.join(" and ")),
                Some(net.to_string()),
                ds,
            ));
        }
    }
    if m.instances.is_empty() {
        loops(m, out);
    }
}

/// Reports cycles through combinational cells (LUTs and aliases) by DFS.
fn loops(m: &Module, out: &mut Vec<Diagnostic>) {
    let mut driver: HashMap<&SignalId, usize> = HashMap::new();
    for (i, c) in m.cells.iter().enumerate() {
        if matches!(c.kind, CellKind::Lut { .. } | CellKind::Alias { .. }) {
            if let BitRef::Net(s) = c.output() {
                driver.entry(s).or_insert(i);
            }
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; m.cells.len()];
    for root in 0..m.cells.len() {
        if state[root] != 0 || !matches!(m.cells[root].kind, CellKind::Lut { .. } | CellKind::Alias { .. }) {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (cell, ref mut next)) = stack.last_mut() {
            let inputs = m.cells[cell].inputs();
            if *next < inputs.len() {
                let b = inputs[*next];
                *next += 1;
                let Some(&d) = b.net().and_then(|s| driver.get(s)) else {
                    continue;
                };
                match state[d] {
                    0 => {
                        state[d] = 1;
                        stack.push((d, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|(c, _)| *c == d).unwrap_or(0);
                        let cells: Vec<String> =
                            stack[start..].iter().map(|(c, _)| m.cells[*c].id.clone()).collect();
                        out.push(diag(
                            DiagnosticKind::CombinationalLoop,
                            m,
                            format!("combinational loop through {}", cells.join(" -> ")),
                            b.net().map(|s| s.to_string()),
                            cells,
                        ));
                    }
                    _ => {}
                }
            } else {
                state[cell] = 2;
                stack.pop();
            }
        }
    }
}

/// Checks all structural invariants; an empty list means the netlist is well formed.
pub fn validate(n: &Netlist) -> Vec<Diagnostic> {
    let mut out = vec![];
    for m in n.modules.values() {
        check_module(n, m, &mut out);
    }
    if out.is_empty() && !n.is_flat() {
        match flatten(n) {
            Ok(f) => loops(f.top_module(), &mut out),
            Err(NetlistError::RecursiveInstantiation { chain }) => out.push(Diagnostic {
                kind: DiagnosticKind::RecursiveInstantiation,
                module: n.top.clone(),
                message: format!("recursive instantiation: {}", chain.join(" -> ")),
                net: None,
                cells: chain,
            }),
            Err(e) => out.push(Diagnostic {
                kind: DiagnosticKind::UnknownModule,
                module: n.top.clone(),
                message: e.to_string(),
                net: None,
                cells: vec![],
            }),
        }
    }
    out
}

pub(crate) fn into_error(diags: Vec<Diagnostic>) -> NetlistError {
    if let Some(d) = diags.iter().find(|d| d.kind == DiagnosticKind::MultipleDrivers) {
        return NetlistError::MultipleDrivers {
            net: d.net.clone().unwrap_or_default(),
            drivers: d.cells.clone(),
        };
    }
    if let Some(d) = diags
        .iter()
        .find(|d| d.kind == DiagnosticKind::RecursiveInstantiation)
    {
        return NetlistError::RecursiveInstantiation {
            chain: d.cells.clone(),
        };
    }
    NetlistError::Invalid(diags)
}
