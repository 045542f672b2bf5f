//! Value change dump subset: scalar and vector `$var`s, 0/1/x/z values, `#t` timestamps.

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use super::{Event, EventTrace};
use crate::logic::LogicValue;
use crate::netlist::{Design, SignalId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VcdError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: value change for undeclared identifier code '{code}'")]
    UndeclaredId { line: usize, code: String },
    #[error("line {line}: malformed timestamp '{text}'")]
    BadTimestamp { line: usize, text: String },
    #[error("trace signal '{0}' does not exist in the netlist")]
    UnknownSignal(String),
}

fn code(mut i: usize) -> String {
    // printable ASCII '!'..='~'
    let mut s = String::new();
    loop {
        s.push((b'!' + (i % 94) as u8) as char);
        i /= 94;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s
}

/// Writes the trace as VCD with one 1-bit variable per signal and 1 ns per step.
pub fn export_vcd(trace: &EventTrace) -> String {
    let mut out = String::new();
    out.push_str("$version lutscope $end\n$timescale 1ns $end\n$scope module top $end\n");
    let codes: Vec<String> = (0..trace.signals.len()).map(code).collect();
    for (s, c) in trace.signals.iter().zip(&codes) {
        match s.index {
            Some(i) => {
                let _ = writeln!(out, "$var wire 1 {c} {} [{i}] $end", s.name);
            }
            None => {
                let _ = writeln!(out, "$var wire 1 {c} {} $end", s.name);
            }
        }
    }
    out.push_str("$upscope $end\n$enddefinitions $end\n");
    for (t, events) in trace.steps() {
        let _ = writeln!(out, "#{t}");
        for e in events {
            let _ = writeln!(out, "{}{}", e.value.to_char(), codes[e.signal]);
        }
    }
    if trace.length > 0 {
        let _ = writeln!(out, "#{}", trace.length);
    }
    out
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos.saturating_sub(1))
            .map_or(0, |(l, _)| *l)
    }

    /// Tokens up to (not including) the next `$end`.
    fn until_end(&mut self) -> Result<Vec<&'a str>, VcdError> {
        let mut out = vec![];
        loop {
            match self.next() {
                Some((_, "$end")) => return Ok(out),
                Some((_, t)) => out.push(t),
                None => {
                    return Err(VcdError::Syntax {
                        line: self.line(),
                        message: "missing $end".into(),
                    })
                }
            }
        }
    }
}

fn parse_bitsel(s: &str) -> Option<(i64, i64)> {
    let body = s.strip_prefix('[')?.strip_suffix(']')?;
    match body.split_once(':') {
        Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => {
            let i = body.trim().parse().ok()?;
            Some((i, i))
        }
    }
}

/// Parses a VCD into a trace over the signals it declares (in declaration
/// order). Vectors are split into bits. The outermost scope is dropped and
/// nested scopes are joined with `.`.
pub fn parse_vcd(text: &str) -> Result<EventTrace, VcdError> {
    let mut toks = Tokens::new(text);
    let mut scopes: Vec<String> = vec![];
    let mut signals: Vec<SignalId> = vec![];
    let mut index: HashMap<SignalId, usize> = HashMap::new();
    // code → signal indices, most significant bit first
    let mut codes: HashMap<String, Vec<usize>> = HashMap::new();

    let mut intern = |s: SignalId, signals: &mut Vec<SignalId>| -> usize {
        *index.entry(s.clone()).or_insert_with(|| {
            signals.push(s);
            signals.len() - 1
        })
    };

    loop {
        let Some((line, tok)) = toks.next() else {
            return Err(VcdError::Syntax {
                line: toks.line(),
                message: "missing $enddefinitions".into(),
            });
        };
        match tok {
            "$scope" => {
                let body = toks.until_end()?;
                let name = body.get(1).or(body.first()).copied().unwrap_or("");
                scopes.push(name.to_string());
            }
            "$upscope" => {
                toks.until_end()?;
                scopes.pop();
            }
            "$var" => {
                let body = toks.until_end()?;
                if body.len() < 4 {
                    return Err(VcdError::Syntax {
                        line,
                        message: "malformed $var".into(),
                    });
                }
                let size: usize = body[1].parse().map_err(|_| VcdError::Syntax {
                    line,
                    message: format!("bad $var size '{}'", body[1]),
                })?;
                let mut reference = body[3].to_string();
                let mut sel = body.get(4).and_then(|s| parse_bitsel(s));
                if sel.is_none() {
                    // `name[3]` written without a space
                    if let Some(p) = reference.find('[') {
                        sel = parse_bitsel(&reference[p..]);
                        if sel.is_some() {
                            reference.truncate(p);
                        }
                    }
                }
                let prefix: Vec<&str> = scopes.iter().skip(1).map(String::as_str).collect();
                let name = if prefix.is_empty() {
                    reference
                } else {
                    format!("{}.{reference}", prefix.join("."))
                };
                let bits: Vec<SignalId> = match sel {
                    Some((msb, lsb)) if size == 1 && msb == lsb => vec![SignalId::bit(&name, msb)],
                    Some((msb, lsb)) => {
                        let step = if msb >= lsb { -1 } else { 1 };
                        let mut v = vec![];
                        let mut i = msb;
                        loop {
                            v.push(SignalId::bit(&name, i));
                            if i == lsb {
                                break;
                            }
                            i += step;
                        }
                        v
                    }
                    None if size == 1 => vec![SignalId::scalar(&name)],
                    None => (0..size as i64)
                        .rev()
                        .map(|i| SignalId::bit(&name, i))
                        .collect(),
                };
                if bits.len() != size {
                    return Err(VcdError::Syntax {
                        line,
                        message: format!("$var size {size} does not match its bit range"),
                    });
                }
                let idx = bits.into_iter().map(|b| intern(b, &mut signals)).collect();
                codes.insert(body[2].to_string(), idx);
            }
            "$enddefinitions" => {
                toks.until_end()?;
                break;
            }
            t if t.starts_with('$') => {
                toks.until_end()?;
            }
            other => {
                return Err(VcdError::Syntax {
                    line,
                    message: format!("unexpected '{other}' in header"),
                })
            }
        }
    }

    let mut trace = EventTrace::new(signals);
    let mut time: Option<usize> = None;
    let mut last_stamp_had_changes = false;
    let value_of = |c: char, line: usize| {
        LogicValue::from_char(c).ok_or(VcdError::Syntax {
            line,
            message: format!("bad value character '{c}'"),
        })
    };
    while let Some((line, tok)) = toks.next() {
        if let Some(stamp) = tok.strip_prefix('#') {
            let t: usize = stamp.parse().map_err(|_| VcdError::BadTimestamp {
                line,
                text: tok.to_string(),
            })?;
            if time.is_some_and(|prev| t < prev) {
                return Err(VcdError::BadTimestamp {
                    line,
                    text: tok.to_string(),
                });
            }
            time = Some(t);
            last_stamp_had_changes = false;
            continue;
        }
        if matches!(tok, "$dumpvars" | "$dumpall" | "$dumpon" | "$dumpoff" | "$end") {
            continue;
        }
        if tok == "$comment" {
            toks.until_end()?;
            continue;
        }
        let t = time.unwrap_or(0);
        let first = tok.chars().next().unwrap_or(' ');
        let (values, code): (Vec<LogicValue>, String) = match first {
            'b' | 'B' => {
                let bits: Vec<LogicValue> = tok[1..]
                    .chars()
                    .map(|c| value_of(c, line))
                    .collect::<Result<_, _>>()?;
                let Some((_, c)) = toks.next() else {
                    return Err(VcdError::Syntax {
                        line,
                        message: "vector value without identifier".into(),
                    });
                };
                (bits, c.to_string())
            }
            'r' | 'R' => {
                return Err(VcdError::Syntax {
                    line,
                    message: "real values are not supported".into(),
                })
            }
            c => (vec![value_of(c, line)?], tok[c.len_utf8()..].to_string()),
        };
        let Some(targets) = codes.get(&code) else {
            return Err(VcdError::UndeclaredId { line, code });
        };
        // left-extend short vectors: 0 for 1s and 0s, otherwise the leading x/z
        let pad = match values.first() {
            Some(LogicValue::X) => LogicValue::X,
            Some(LogicValue::Z) => LogicValue::Z,
            _ => LogicValue::Zero,
        };
        let width = targets.len();
        if values.len() > width {
            return Err(VcdError::Syntax {
                line,
                message: format!("value for '{code}' has {} bits, expected {width}", values.len()),
            });
        }
        let full: Vec<LogicValue> = std::iter::repeat_n(pad, width - values.len())
            .chain(values)
            .collect();
        for (&sig, v) in targets.iter().zip(full) {
            trace.events.push(Event {
                time: t,
                signal: sig,
                value: v,
            });
        }
        last_stamp_had_changes = true;
    }
    trace.length = match time {
        None => 0,
        Some(t) if last_stamp_had_changes => t + 1,
        Some(t) => t,
    };
    trace.events.sort_by_key(|e| (e.time, e.signal));
    trace.normalize();
    Ok(trace)
}

/// Parses a VCD and maps it onto the visible signals of `design`.
pub fn import_vcd(text: &str, design: &Design) -> Result<EventTrace, VcdError> {
    let raw = parse_vcd(text)?;
    let visible: Vec<usize> = design.visible_signals().collect();
    let mut pos = vec![usize::MAX; design.signals.len()];
    for (i, &s) in visible.iter().enumerate() {
        pos[s] = i;
    }
    let mut map = Vec::with_capacity(raw.signals.len());
    for s in &raw.signals {
        let d = design
            .signal(s)
            .filter(|&d| pos[d] != usize::MAX)
            .ok_or_else(|| VcdError::UnknownSignal(s.to_string()))?;
        map.push(pos[d]);
    }
    let mut trace = EventTrace::new(visible.iter().map(|&s| design.signals[s].id.clone()).collect());
    trace.length = raw.length;
    trace.events = raw
        .events
        .iter()
        .map(|e| Event {
            signal: map[e.signal],
            ..*e
        })
        .collect();
    trace.events.sort_by_key(|e| (e.time, e.signal));
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toggle() {
        let text = "$timescale 1ns $end\n$scope module t $end\n$var wire 1 ! a $end\n$upscope $end\n$enddefinitions $end\n#0\n0!\n#5\n1!\n";
        let t = parse_vcd(text).unwrap();
        assert_eq!(t.events.len(), 2);
        assert_eq!(t.events[1].time, 5);
        assert_eq!(t.length, 6);
    }

    #[test]
    fn undeclared_code() {
        let text = "$scope module t $end\n$var wire 1 ! a $end\n$upscope $end\n$enddefinitions $end\n#0\n1%\n";
        assert_eq!(
            parse_vcd(text),
            Err(VcdError::UndeclaredId {
                line: 6,
                code: "%".into()
            })
        );
    }

    #[test]
    fn bad_timestamp() {
        let text = "$enddefinitions $end\n#zz\n";
        assert!(matches!(parse_vcd(text), Err(VcdError::BadTimestamp { line: 2, .. })));
    }

    #[test]
    fn vectors_and_nested_scopes() {
        let text = "$scope module top $end\n$scope module Trigger $end\n$var wire 1 # Tj_Trig $end\n$upscope $end\n$var wire 4 \" d [3:0] $end\n$upscope $end\n$enddefinitions $end\n$dumpvars\nb101 \"\n0#\n$end\n#3\n1#\n#4\n";
        let t = parse_vcd(text).unwrap();
        assert_eq!(t.signals[0], SignalId::scalar("Trigger.Tj_Trig"));
        assert_eq!(t.signals[1], SignalId::bit("d", 3));
        let d0 = t.signal_index(&SignalId::bit("d", 0)).unwrap();
        assert_eq!(t.value_at(d0, 0), LogicValue::One);
        let d3 = t.signal_index(&SignalId::bit("d", 3)).unwrap();
        assert_eq!(t.value_at(d3, 0), LogicValue::Zero);
        assert_eq!(t.length, 4);
    }

    #[test]
    fn codes_are_unique() {
        let all: std::collections::HashSet<String> = (0..20000).map(code).collect();
        assert_eq!(all.len(), 20000);
    }
}
