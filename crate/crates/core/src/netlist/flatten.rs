use super::parse::ASSIGN_PREFIX;
use super::{
    expand, BitRef, Cell, CellKind, Direction, Module, NetDecl, Netlist, NetlistError, SyncReset,
};

fn rename(b: &BitRef, prefix: &str) -> BitRef {
    match b {
        BitRef::Net(s) if !prefix.is_empty() => BitRef::Net(s.prefixed(prefix)),
        other => other.clone(),
    }
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn rename_cell(c: &Cell, prefix: &str) -> Cell {
    let r = |b: &BitRef| rename(b, prefix);
    let kind = match &c.kind {
        CellKind::Lut {
            init,
            inputs,
            output,
        } => CellKind::Lut {
            init: *init,
            inputs: inputs.iter().map(r).collect(),
            output: r(output),
        },
        CellKind::Dff {
            clock,
            data,
            q,
            reset,
        } => CellKind::Dff {
            clock: r(clock),
            data: r(data),
            q: r(q),
            reset: reset.as_ref().map(|s| SyncReset {
                signal: r(&s.signal),
                value: s.value,
            }),
        },
        CellKind::Const { value, output } => CellKind::Const {
            value: *value,
            output: r(output),
        },
        CellKind::Alias { input, output } => CellKind::Alias {
            input: r(input),
            output: r(output),
        },
    };
    let id = match c.id.strip_prefix(ASSIGN_PREFIX) {
        // keep assign-derived ids tied to their (renamed) output
        Some(_) => format!("{ASSIGN_PREFIX}{}", r(c.output())),
        None => join(prefix, &c.id),
    };
    Cell {
        id,
        kind,
        line: c.line,
    }
}

fn inline(
    n: &Netlist,
    m: &Module,
    prefix: &str,
    out: &mut Module,
    stack: &mut Vec<String>,
) -> Result<(), NetlistError> {
    if !prefix.is_empty() {
        for p in &m.ports {
            out.nets.push(NetDecl {
                name: join(prefix, &p.name),
                range: p.range,
            });
        }
    }
    for net in &m.nets {
        if prefix.is_empty() || m.port(&net.name).is_none() {
            out.nets.push(NetDecl {
                name: join(prefix, &net.name),
                range: net.range,
            });
        }
    }
    for c in &m.cells {
        out.cells.push(rename_cell(c, prefix));
    }
    for inst in &m.instances {
        let child = n
            .modules
            .get(&inst.module)
            .ok_or_else(|| NetlistError::UnknownPrimitive {
                name: inst.module.clone(),
                line: inst.line,
            })?;
        if stack.contains(&inst.module) {
            let mut chain = stack.clone();
            chain.push(inst.module.clone());
            return Err(NetlistError::RecursiveInstantiation { chain });
        }
        let child_prefix = join(prefix, &inst.name);
        for conn in &inst.connections {
            let Some(port) = child.port(&conn.port) else {
                continue;
            };
            let child_bits = expand(&join(&child_prefix, &port.name), port.range);
            for (cb, pb) in child_bits.into_iter().zip(&conn.bits) {
                let parent = rename(pb, prefix);
                let cell = match port.direction {
                    Direction::Input => match parent {
                        BitRef::Const(value) => CellKind::Const {
                            value,
                            output: BitRef::Net(cb),
                        },
                        net => CellKind::Alias {
                            input: net,
                            output: BitRef::Net(cb),
                        },
                    },
                    Direction::Output => match parent {
                        BitRef::Const(_) => continue,
                        net => CellKind::Alias {
                            input: BitRef::Net(cb),
                            output: net,
                        },
                    },
                };
                let id = match &cell {
                    CellKind::Alias { output, .. } | CellKind::Const { output, .. } => {
                        format!("{ASSIGN_PREFIX}{output}")
                    }
                    _ => unreachable!(),
                };
                out.cells.push(Cell {
                    id,
                    kind: cell,
                    line: inst.line,
                });
            }
        }
        stack.push(inst.module.clone());
        inline(n, child, &child_prefix, out, stack)?;
        stack.pop();
    }
    Ok(())
}

/// Inlines every instance into a single module named after the top.
///
/// Child signals and cells are renamed `instance.name`; port bindings become
/// alias cells, so signals on both sides of a port keep their own names.
pub fn flatten(n: &Netlist) -> Result<Netlist, NetlistError> {
    if n.is_flat() {
        return Ok(n.clone());
    }
    let top = n.top_module();
    let mut out = Module::new(top.name.clone());
    out.ports = top.ports.clone();
    let mut stack = vec![top.name.clone()];
    inline(n, top, "", &mut out, &mut stack)?;
    Ok(Netlist::single(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_netlist, parse_netlist_unchecked, SignalId};

    #[test]
    fn single_module_is_identity() {
        let n = parse_netlist(
            "module t(input a, output y); LUT1 #(.INIT(2'h1)) i (.I0(a), .O(y)); endmodule",
            None,
        )
        .unwrap();
        assert_eq!(flatten(&n).unwrap(), n);
    }

    #[test]
    fn names_are_dot_joined() {
        let text = "
module tj(input [1:0] s, output Tj_Trig);
  LUT2 #(.INIT(4'h8)) g (.I0(s[0]), .I1(s[1]), .O(Tj_Trig));
endmodule
module top(input [1:0] s, output y);
  tj Trigger (.s(s), .Tj_Trig(y));
endmodule";
        let f = flatten(&parse_netlist(text, None).unwrap()).unwrap();
        let m = f.top_module();
        assert!(m.cell("Trigger.g").is_some());
        assert!(m.declared("Trigger.Tj_Trig").is_some());
        let aliases = m
            .cells
            .iter()
            .filter(|c| matches!(c.kind, CellKind::Alias { .. }))
            .count();
        assert_eq!(aliases, 3);
        match &m.cell("Trigger.g").unwrap().kind {
            CellKind::Lut { inputs, .. } => {
                assert_eq!(inputs[0], BitRef::Net(SignalId::bit("Trigger.s", 0)))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn recursion_detected() {
        let text = "
module a(input x, output y); b u (.x(x), .y(y)); endmodule
module b(input x, output y); a u (.x(x), .y(y)); endmodule
module top(input x, output y); a u (.x(x), .y(y)); endmodule";
        let n = parse_netlist_unchecked(text, Some("top")).unwrap();
        assert!(matches!(
            flatten(&n),
            Err(NetlistError::RecursiveInstantiation { .. })
        ));
    }
}
