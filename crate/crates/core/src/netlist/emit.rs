use std::fmt::Write;

use super::parse::ASSIGN_PREFIX;
use super::{expand, BitRef, Cell, CellKind, Direction, Module, Netlist, Range, SignalId};

const KEYWORDS: &[&str] = &[
    "module", "endmodule", "input", "output", "inout", "wire", "assign", "reg", "always",
];

/// Identifier as it must appear in source: plain when legal, escaped otherwise.
pub(crate) fn ident(name: &str) -> String {
    let mut chars = name.chars();
    let simple = match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
        }
        _ => false,
    } && !KEYWORDS.contains(&name);
    if simple {
        name.to_string()
    } else {
        // escaped identifiers end at whitespace, so the trailing space is part of the token
        format!("\\{name} ")
    }
}

fn signal(s: &SignalId) -> String {
    match s.index {
        Some(i) => format!("{}[{i}]", ident(&s.name)),
        None => ident(&s.name),
    }
}

fn bit(b: &BitRef) -> String {
    match b {
        BitRef::Net(s) => signal(s),
        BitRef::Const(v) => format!("1'b{}", *v as u8),
    }
}

fn range(r: Option<Range>) -> String {
    match r {
        Some(r) => format!("[{}:{}] ", r.msb, r.lsb),
        None => String::new(),
    }
}

/// Bits (LSB first) as a connection expression: whole vector, single bit, or concatenation.
fn bits_expr(m: Option<&Module>, bits: &[BitRef]) -> String {
    if bits.is_empty() {
        return String::new();
    }
    if let (Some(m), Some(BitRef::Net(first))) = (m, bits.first()) {
        if let Some(r) = m.declared(&first.name) {
            let whole: Vec<BitRef> = expand(&first.name, r).into_iter().map(BitRef::Net).collect();
            if whole == bits && (r.is_some() || bits.len() == 1) {
                return ident(&first.name);
            }
        }
    }
    if bits.len() == 1 {
        return bit(&bits[0]);
    }
    let parts: Vec<String> = bits.iter().rev().map(bit).collect();
    format!("{{{}}}", parts.join(", "))
}

fn emit_cell(out: &mut String, c: &Cell) {
    let id = ident(&c.id);
    match &c.kind {
        CellKind::Lut {
            init,
            inputs,
            output,
        } => {
            let pins: Vec<String> = inputs
                .iter()
                .enumerate()
                .map(|(i, b)| format!(".I{i}({})", bit(b)))
                .collect();
            let _ = writeln!(
                out,
                "  LUT{} #(.INIT({})) {id} ({}, .O({}));",
                inputs.len(),
                init.to_verilog(),
                pins.join(", "),
                bit(output)
            );
        }
        CellKind::Dff {
            clock,
            data,
            q,
            reset,
        } => match reset {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "  DFF #(.RESET_VALUE(1'b{})) {id} (.C({}), .D({}), .R({}), .Q({}));",
                    r.value as u8,
                    bit(clock),
                    bit(data),
                    bit(&r.signal),
                    bit(q)
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "  DFF {id} (.C({}), .D({}), .Q({}));",
                    bit(clock),
                    bit(data),
                    bit(q)
                );
            }
        },
        CellKind::Const { value, output } => {
            if c.id.starts_with(ASSIGN_PREFIX) {
                let _ = writeln!(out, "  assign {} = 1'b{};", bit(output), *value as u8);
            } else {
                let _ = writeln!(out, "  CONST{} {id} (.O({}));", *value as u8, bit(output));
            }
        }
        CellKind::Alias { input, output } => {
            let _ = writeln!(out, "  assign {} = {};", bit(output), bit(input));
        }
    }
}

fn emit_module(out: &mut String, m: &Module) {
    let ports: Vec<String> = m.ports.iter().map(|p| ident(&p.name)).collect();
    let _ = writeln!(out, "module {} ({});", ident(&m.name), ports.join(", "));
    for p in &m.ports {
        let dir = match p.direction {
            Direction::Input => "input",
            Direction::Output => "output",
        };
        let _ = writeln!(out, "  {dir} {}{};", range(p.range), ident(&p.name));
    }
    for net in &m.nets {
        let _ = writeln!(out, "  wire {}{};", range(net.range), ident(&net.name));
    }
    for c in &m.cells {
        emit_cell(out, c);
    }
    for inst in &m.instances {
        let pins: Vec<String> = inst
            .connections
            .iter()
            .map(|c| format!(".{}({})", ident(&c.port), bits_expr(Some(m), &c.bits)))
            .collect();
        let _ = writeln!(
            out,
            "  {} {} ({});",
            ident(&inst.module),
            ident(&inst.name),
            pins.join(", ")
        );
    }
    out.push_str("endmodule\n");
}

/// Writes the netlist back in the accepted Verilog subset, top module last.
pub fn emit_netlist(n: &Netlist) -> String {
    let mut out = String::new();
    for (name, m) in &n.modules {
        if *name != n.top {
            emit_module(&mut out, m);
            out.push('\n');
        }
    }
    emit_module(&mut out, n.top_module());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn empty_module() {
        let text = emit_netlist(&Netlist::single(Module::new("empty")));
        assert_eq!(text, "module empty ();\nendmodule\n");
        let back = parse_netlist(&text, None).unwrap();
        assert!(back.top_module().cells.is_empty());
    }

    #[test]
    fn roundtrip_hierarchy() {
        let text = "
module leaf(input [1:0] a, output y);
  LUT2 #(.INIT(4'h6)) x (.I0(a[0]), .I1(a[1]), .O(y));
endmodule
module top(input clk, input rst, input [3:0] d, output [1:0] q);
  wire [1:0] t;
  wire \\odd.name ;
  leaf u0 (.a(d[1:0]), .y(t[0]));
  leaf u1 (.a({d[3], d[2]}), .y(t[1]));
  assign \\odd.name = 1'b1;
  DFF #(.RESET_VALUE(1'b1)) r0 (.C(clk), .D(t[0]), .R(rst), .Q(q[0]));
  DFF r1 (.C(clk), .D(\\odd.name ), .Q(q[1]));
endmodule
";
        let a = parse_netlist(text, None).unwrap();
        let b = parse_netlist(&emit_netlist(&a), None).unwrap();
        assert!(a.isomorphic(&b));
    }

    #[test]
    fn escapes_keywords_and_dots() {
        assert_eq!(ident("wire"), "\\wire ");
        assert_eq!(ident("Trigger.Tj_Trig"), "\\Trigger.Tj_Trig ");
        assert_eq!(ident("n_12$a"), "n_12$a");
    }
}
