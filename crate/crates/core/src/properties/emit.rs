use std::fmt::Write;

use super::{Property, PropertyError, PropertyKind};
use crate::logic::TruthTable;

/// Assertion text, one `assert` per line. Never-properties list cubes in
/// lexicographic order with literals from the highest line down.
pub fn emit_sva(p: &Property) -> String {
    match &p.kind {
        PropertyKind::Constant { signal, value } => {
            format!("assert ({signal} == {})", *value as u8)
        }
        PropertyKind::Never { lines, cubes, .. } => {
            let mut sorted = cubes.clone();
            sorted.sort_by_key(|c| c.to_string());
            sorted
                .iter()
                .map(|c| {
                    let lits: Vec<String> = c
                        .literal_list()
                        .into_iter()
                        .map(|(i, pos)| {
                            if pos {
                                lines[i].to_string()
                            } else {
                                format!("!{}", lines[i])
                            }
                        })
                        .collect();
                    let expr = if lits.is_empty() {
                        "1'b1".to_string()
                    } else {
                        lits.join(" & ")
                    };
                    format!("assert ({expr} == 0)")
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

/// All properties as one assertion file.
pub fn emit_sva_all(props: &[Property]) -> String {
    let mut out = String::new();
    for p in props {
        writeln!(out, "// {}", p.name()).unwrap();
        writeln!(out, "{}", emit_sva(p)).unwrap();
    }
    out
}

fn blif_name(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.$[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Truth table of the uncovered-address indicator of one LUT. Inputs are
/// named `a0..`, listed and printed most significant first.
pub fn emit_blif(cell: &str, cover: &TruthTable) -> Result<String, PropertyError> {
    if cover.is_full() {
        return Err(PropertyError::FullyCovered(cell.to_string()));
    }
    let k = cover.inputs() as usize;
    let inputs: Vec<String> = (0..k).rev().map(|i| format!("a{i}")).collect();
    let mut out = String::new();
    writeln!(out, ".model {}", blif_name(cell)).unwrap();
    writeln!(out, ".inputs {}", inputs.join(" ")).unwrap();
    writeln!(out, ".outputs uncovered").unwrap();
    writeln!(out, ".names {} uncovered", inputs.join(" ")).unwrap();
    for m in cover.clear_bits() {
        let row: String = (0..k)
            .rev()
            .map(|i| if m >> i & 1 == 1 { '1' } else { '0' })
            .collect();
        writeln!(out, "{row} 1").unwrap();
    }
    writeln!(out, ".end").unwrap();
    Ok(out)
}
