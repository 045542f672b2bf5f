//! Reader for the structural Verilog subset.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    BitRef, Cell, CellKind, Connection, Direction, Instance, Module, NetDecl, Netlist,
    NetlistError, Port, Range, SignalId, SyncReset,
};
use crate::logic::TruthTable;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, NetlistError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = vec![];
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let peek = chars.get(i + 1).copied();
        if c == '/' && peek == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if (c == '/' || c == '(') && peek == Some('*') {
            // block comment or attribute instance
            let close = if c == '/' { '/' } else { ')' };
            let (sl, sc) = (line, col);
            bump!();
            bump!();
            loop {
                if i + 1 >= chars.len() {
                    return Err(NetlistError::Syntax {
                        line: sl,
                        column: sc,
                        message: "unterminated comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == close {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c == '\\' {
            bump!();
            let mut s = String::new();
            while i < chars.len() && !chars[i].is_whitespace() {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let mut s = String::new();
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || c == '\'' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            if i < chars.len() && chars[i] == '\'' {
                s.push('\'');
                bump!();
                if i < chars.len() && (chars[i] == 's' || chars[i] == 'S') {
                    bump!();
                }
                if i < chars.len() && "hHbBdDoO".contains(chars[i]) {
                    s.push(chars[i]);
                    bump!();
                } else {
                    return Err(NetlistError::Syntax {
                        line: tl,
                        column: tc,
                        message: "malformed based number".into(),
                    });
                }
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    bump!();
                }
            }
            out.push(Token {
                tok: Tok::Number(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if "();,.#[]:{}=".contains(c) {
            bump!();
            out.push(Token {
                tok: Tok::Sym(c),
                line: tl,
                col: tc,
            });
            continue;
        }
        return Err(NetlistError::Syntax {
            line: tl,
            column: tc,
            message: format!("unexpected character '{c}'"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// A sized or unsized literal: value bits with an optional explicit width.
#[derive(Clone, Debug, PartialEq)]
struct Literal {
    width: Option<usize>,
    value: u64,
}

fn parse_literal(s: &str) -> Option<Literal> {
    let s = s.replace('_', "");
    match s.split_once('\'') {
        None => s.parse().ok().map(|value| Literal { width: None, value }),
        Some((w, rest)) => {
            let width = if w.is_empty() { None } else { Some(w.parse().ok()?) };
            let mut it = rest.chars();
            let radix = match it.next()?.to_ascii_lowercase() {
                'h' => 16,
                'b' => 2,
                'd' => 10,
                'o' => 8,
                _ => return None,
            };
            let digits: String = it.collect();
            let value = u64::from_str_radix(&digits, radix).ok()?;
            if let Some(w) = width {
                if w == 0 || (w < 64 && value >> w != 0) {
                    return None;
                }
            }
            Some(Literal { width, value })
        }
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Ident(String),
    Bit(String, i64),
    Slice(String, i64, i64),
    Lit(Literal),
    Concat(Vec<Expr>),
}

#[derive(Clone, Debug)]
struct RawInstance {
    kind: String,
    name: String,
    params: Vec<(String, Literal, usize, usize)>,
    pins: Vec<(String, Option<Expr>)>,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
struct RawModule {
    name: String,
    header_ports: Vec<String>,
    ports: BTreeMap<String, (Direction, Option<Range>)>,
    nets: Vec<NetDecl>,
    assigns: Vec<(Expr, Expr, usize, usize)>,
    instances: Vec<RawInstance>,
    line: usize,
    col: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, message: impl Into<String>) -> Result<T, NetlistError> {
        Err(NetlistError::Syntax {
            line: t.line,
            column: t.col,
            message: message.into(),
        })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(s) => format!("'{s}'"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<Token, NetlistError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(t)
        } else {
            // report the end of the previous token's line for a missing ';'
            if c == ';' && self.pos >= 2 {
                let prev = &self.toks[self.pos - 2];
                if prev.line < t.line {
                    return Err(NetlistError::Syntax {
                        line: prev.line,
                        column: prev.col,
                        message: format!("expected ';' after {}", Self::describe(&prev.tok)),
                    });
                }
            }
            self.err(&t, format!("expected '{c}', found {}", Self::describe(&t.tok)))
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<(String, Token), NetlistError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => self.err(&t, format!("expected identifier, found {}", Self::describe(other))),
        }
    }

    fn int(&mut self) -> Result<i64, NetlistError> {
        let t = self.next();
        match &t.tok {
            Tok::Number(s) => match parse_literal(s) {
                Some(l) => Ok(l.value as i64),
                None => self.err(&t, format!("bad integer '{s}'")),
            },
            other => self.err(&t, format!("expected integer, found {}", Self::describe(other))),
        }
    }

    fn range(&mut self) -> Result<Option<Range>, NetlistError> {
        if !self.eat_sym('[') {
            return Ok(None);
        }
        let msb = self.int()?;
        self.expect_sym(':')?;
        let lsb = self.int()?;
        self.expect_sym(']')?;
        Ok(Some(Range { msb, lsb }))
    }

    fn expr(&mut self) -> Result<Expr, NetlistError> {
        let t = self.next();
        match &t.tok {
            Tok::Sym('{') => {
                let mut parts = vec![self.expr()?];
                while self.eat_sym(',') {
                    parts.push(self.expr()?);
                }
                self.expect_sym('}')?;
                Ok(Expr::Concat(parts))
            }
            Tok::Number(s) => match parse_literal(s) {
                Some(l) => Ok(Expr::Lit(l)),
                None => self.err(&t, format!("unsupported literal '{s}'")),
            },
            Tok::Ident(name) => {
                let name = name.clone();
                if self.eat_sym('[') {
                    let a = self.int()?;
                    if self.eat_sym(':') {
                        let b = self.int()?;
                        self.expect_sym(']')?;
                        Ok(Expr::Slice(name, a, b))
                    } else {
                        self.expect_sym(']')?;
                        Ok(Expr::Bit(name, a))
                    }
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            other => self.err(&t, format!("expected expression, found {}", Self::describe(other))),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, NetlistError> {
        let mut names = vec![self.ident()?.0];
        while self.eat_sym(',') {
            names.push(self.ident()?.0);
        }
        Ok(names)
    }

    fn module(&mut self) -> Result<RawModule, NetlistError> {
        let (kw, kt) = self.ident()?;
        if kw != "module" {
            return self.err(&kt, format!("expected 'module', found '{kw}'"));
        }
        let (name, _) = self.ident()?;
        let mut m = RawModule {
            name,
            header_ports: vec![],
            ports: BTreeMap::new(),
            nets: vec![],
            assigns: vec![],
            instances: vec![],
            line: kt.line,
            col: kt.col,
        };
        if self.eat_sym('(') {
            if !self.eat_sym(')') {
                if self.is_keyword("input") || self.is_keyword("output") {
                    // ANSI-style header
                    loop {
                        let (dir_kw, dt) = self.ident()?;
                        let dir = match dir_kw.as_str() {
                            "input" => Direction::Input,
                            "output" => Direction::Output,
                            _ => return self.err(&dt, "expected 'input' or 'output'"),
                        };
                        if self.is_keyword("wire") {
                            self.next();
                        }
                        let range = self.range()?;
                        let (p, _) = self.ident()?;
                        m.header_ports.push(p.clone());
                        m.ports.insert(p, (dir, range));
                        while self.peek().tok == Tok::Sym(',')
                            && !matches!(&self.toks[self.pos + 1].tok, Tok::Ident(s) if s == "input" || s == "output")
                        {
                            self.next();
                            let (p, _) = self.ident()?;
                            m.header_ports.push(p.clone());
                            m.ports.insert(p, (dir, range));
                        }
                        if !self.eat_sym(',') {
                            break;
                        }
                    }
                } else {
                    m.header_ports = self.ident_list()?;
                }
                self.expect_sym(')')?;
            }
        }
        self.expect_sym(';')?;

        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => return self.err(&t, format!("missing 'endmodule' for '{}'", m.name)),
                Tok::Ident(kw) if kw == "endmodule" => {
                    self.next();
                    break;
                }
                Tok::Ident(kw) if kw == "input" || kw == "output" => {
                    self.next();
                    let dir = if kw == "input" {
                        Direction::Input
                    } else {
                        Direction::Output
                    };
                    if self.is_keyword("wire") {
                        self.next();
                    }
                    let range = self.range()?;
                    for n in self.ident_list()? {
                        if !m.header_ports.contains(&n) {
                            return self.err(&t, format!("'{n}' is not in the port list"));
                        }
                        m.ports.insert(n, (dir, range));
                    }
                    self.expect_sym(';')?;
                }
                Tok::Ident(kw) if kw == "wire" => {
                    self.next();
                    let range = self.range()?;
                    for n in self.ident_list()? {
                        m.nets.push(NetDecl { name: n, range });
                    }
                    self.expect_sym(';')?;
                }
                Tok::Ident(kw) if kw == "assign" => {
                    self.next();
                    let lhs = self.expr()?;
                    self.expect_sym('=')?;
                    let rhs = self.expr()?;
                    self.expect_sym(';')?;
                    m.assigns.push((lhs, rhs, t.line, t.col));
                }
                Tok::Ident(kw) if kw == "inout" || kw == "reg" || kw == "always" => {
                    return self.err(&t, format!("'{kw}' is not supported in structural netlists"));
                }
                Tok::Ident(kind) => {
                    let kind = kind.clone();
                    self.next();
                    let mut params = vec![];
                    if self.eat_sym('#') {
                        self.expect_sym('(')?;
                        if !self.eat_sym(')') {
                            loop {
                                self.expect_sym('.')?;
                                let (pname, _) = self.ident()?;
                                self.expect_sym('(')?;
                                let vt = self.next();
                                let lit = match &vt.tok {
                                    Tok::Number(s) => match parse_literal(s) {
                                        Some(l) => l,
                                        None => return self.err(&vt, format!("bad parameter value '{s}'")),
                                    },
                                    other => {
                                        return self.err(
                                            &vt,
                                            format!("expected number, found {}", Self::describe(other)),
                                        )
                                    }
                                };
                                self.expect_sym(')')?;
                                params.push((pname, lit, vt.line, vt.col));
                                if !self.eat_sym(',') {
                                    break;
                                }
                            }
                            self.expect_sym(')')?;
                        }
                    }
                    let (name, _) = self.ident()?;
                    self.expect_sym('(')?;
                    let mut pins = vec![];
                    if !self.eat_sym(')') {
                        loop {
                            if !self.eat_sym('.') {
                                let bad = self.peek().clone();
                                return self.err(&bad, "only named port connections are supported");
                            }
                            let (pin, _) = self.ident()?;
                            self.expect_sym('(')?;
                            let e = if self.peek().tok == Tok::Sym(')') {
                                None
                            } else {
                                Some(self.expr()?)
                            };
                            self.expect_sym(')')?;
                            pins.push((pin, e));
                            if !self.eat_sym(',') {
                                break;
                            }
                        }
                        self.expect_sym(')')?;
                    }
                    self.expect_sym(';')?;
                    m.instances.push(RawInstance {
                        kind,
                        name,
                        params,
                        pins,
                        line: t.line,
                        col: t.col,
                    });
                }
                other => return self.err(&t, format!("unexpected {}", Self::describe(other))),
            }
        }
        Ok(m)
    }
}

enum Primitive {
    Lut(u8, Option<TruthTable>),
    Dff,
    Const(bool),
}

fn primitive(kind: &str) -> Option<(Primitive, &'static [&'static str], &'static str)> {
    const LUT_PINS: [&str; 6] = ["I0", "I1", "I2", "I3", "I4", "I5"];
    Some(match kind {
        "LUT1" => (Primitive::Lut(1, None), &LUT_PINS[..1], "O"),
        "LUT2" => (Primitive::Lut(2, None), &LUT_PINS[..2], "O"),
        "LUT3" => (Primitive::Lut(3, None), &LUT_PINS[..3], "O"),
        "LUT4" => (Primitive::Lut(4, None), &LUT_PINS[..4], "O"),
        "LUT5" => (Primitive::Lut(5, None), &LUT_PINS[..5], "O"),
        "LUT6" => (Primitive::Lut(6, None), &LUT_PINS[..6], "O"),
        "BUF" => (Primitive::Lut(1, TruthTable::new(1, 0b10).ok()), &["I"], "O"),
        "INV" => (Primitive::Lut(1, TruthTable::new(1, 0b01).ok()), &["I"], "O"),
        // address (I0, I1, S): S ? I1 : I0
        "MUX2" => (Primitive::Lut(3, TruthTable::new(3, 0xca).ok()), &["I0", "I1", "S"], "O"),
        "DFF" => (Primitive::Dff, &["C", "D"], "Q"),
        "CONST0" => (Primitive::Const(false), &[], "O"),
        "CONST1" => (Primitive::Const(true), &[], "O"),
        "GND" => (Primitive::Const(false), &[], "G"),
        "VCC" => (Primitive::Const(true), &[], "P"),
        _ => return None,
    })
}

struct Resolver<'a> {
    ports: &'a BTreeMap<String, (Direction, Option<Range>)>,
    nets: &'a [NetDecl],
}

impl Resolver<'_> {
    fn range_of(&self, name: &str) -> Option<Option<Range>> {
        self.ports
            .get(name)
            .map(|(_, r)| *r)
            .or_else(|| self.nets.iter().find(|n| n.name == name).map(|n| n.range))
    }

    /// Expression bits, least significant first.
    fn bits(&self, e: &Expr, line: usize, col: usize) -> Result<Vec<BitRef>, NetlistError> {
        let syntax = |message: String| NetlistError::Syntax {
            line,
            column: col,
            message,
        };
        Ok(match e {
            Expr::Ident(n) => match self.range_of(n) {
                Some(r) => super::expand(n, r).into_iter().map(BitRef::Net).collect(),
                // undeclared: kept as a scalar reference and reported by validation
                None => vec![BitRef::Net(SignalId::scalar(n.clone()))],
            },
            Expr::Bit(n, i) => vec![BitRef::Net(SignalId::bit(n.clone(), *i))],
            Expr::Slice(n, a, b) => {
                let r = Range { msb: *a, lsb: *b };
                if self.range_of(n).is_none() {
                    return Err(syntax(format!("part-select of undeclared net '{n}'")));
                }
                r.indices()
                    .into_iter()
                    .map(|i| BitRef::Net(SignalId::bit(n.clone(), i)))
                    .collect()
            }
            Expr::Lit(l) => {
                let w = l.width.unwrap_or(32).min(64);
                (0..w).map(|i| BitRef::Const((l.value >> i) & 1 == 1)).collect()
            }
            Expr::Concat(parts) => {
                let mut out = vec![];
                for p in parts.iter().rev() {
                    out.extend(self.bits(p, line, col)?);
                }
                out
            }
        })
    }
}

/// Id prefix of cells created from `assign` statements.
pub(crate) const ASSIGN_PREFIX: &str = "$assign$";

fn build_module(raw: &RawModule, known_modules: &BTreeSet<String>) -> Result<Module, NetlistError> {
    let mut module = Module::new(raw.name.clone());
    for p in &raw.header_ports {
        match raw.ports.get(p) {
            Some((dir, range)) => module.ports.push(Port {
                name: p.clone(),
                direction: *dir,
                range: *range,
            }),
            None => {
                return Err(NetlistError::Syntax {
                    line: raw.line,
                    column: raw.col,
                    message: format!("port '{p}' of module '{}' has no direction", raw.name),
                })
            }
        }
    }
    module.nets = raw.nets.clone();
    let res = Resolver {
        ports: &raw.ports,
        nets: &raw.nets,
    };

    for (lhs, rhs, line, col) in &raw.assigns {
        let l = res.bits(lhs, *line, *col)?;
        let mut r = res.bits(rhs, *line, *col)?;
        if matches!(rhs, Expr::Lit(Literal { width: None, .. })) {
            r.resize(l.len(), BitRef::Const(false));
        }
        if l.len() != r.len() {
            return Err(NetlistError::Syntax {
                line: *line,
                column: *col,
                message: format!("assign width mismatch ({} vs {} bits)", l.len(), r.len()),
            });
        }
        for (out, inp) in l.into_iter().zip(r) {
            if let BitRef::Const(_) = out {
                return Err(NetlistError::Syntax {
                    line: *line,
                    column: *col,
                    message: "cannot assign to a constant".into(),
                });
            }
            let id = format!("{ASSIGN_PREFIX}{out}");
            let kind = match inp {
                BitRef::Const(value) => CellKind::Const { value, output: out },
                net => CellKind::Alias {
                    input: net,
                    output: out,
                },
            };
            module.cells.push(Cell {
                id,
                kind,
                line: *line,
            });
        }
    }

    for inst in &raw.instances {
        let pin_bits = |pin: &str| -> Result<Option<BitRef>, NetlistError> {
            match inst.pins.iter().find(|(p, _)| p == pin) {
                None | Some((_, None)) => Ok(None),
                Some((_, Some(e))) => {
                    let bits = res.bits(e, inst.line, inst.col)?;
                    if bits.len() != 1 {
                        return Err(NetlistError::Syntax {
                            line: inst.line,
                            column: inst.col,
                            message: format!(
                                "pin '{pin}' of '{}' must be one bit, got {}",
                                inst.name,
                                bits.len()
                            ),
                        });
                    }
                    Ok(bits.into_iter().next())
                }
            }
        };
        let required = |pin: &str| -> Result<BitRef, NetlistError> {
            pin_bits(pin)?.ok_or_else(|| NetlistError::Syntax {
                line: inst.line,
                column: inst.col,
                message: format!("'{}' is missing pin '{pin}'", inst.name),
            })
        };

        if known_modules.contains(&inst.kind) {
            let mut connections = vec![];
            for (port, e) in &inst.pins {
                let bits = match e {
                    Some(e) => res.bits(e, inst.line, inst.col)?,
                    None => vec![],
                };
                connections.push(Connection {
                    port: port.clone(),
                    bits,
                });
            }
            if !inst.params.is_empty() {
                return Err(NetlistError::Syntax {
                    line: inst.line,
                    column: inst.col,
                    message: "parameters on module instances are not supported".into(),
                });
            }
            module.instances.push(Instance {
                name: inst.name.clone(),
                module: inst.kind.clone(),
                connections,
                line: inst.line,
            });
            continue;
        }

        let Some((prim, in_pins, out_pin)) = primitive(&inst.kind) else {
            return Err(NetlistError::UnknownPrimitive {
                name: inst.kind.clone(),
                line: inst.line,
            });
        };
        let allowed: Vec<&str> = in_pins
            .iter()
            .copied()
            .chain([out_pin])
            .chain(if matches!(prim, Primitive::Dff) { Some("R") } else { None })
            .collect();
        if let Some((p, _)) = inst.pins.iter().find(|(p, _)| !allowed.contains(&p.as_str())) {
            return Err(NetlistError::Syntax {
                line: inst.line,
                column: inst.col,
                message: format!("{} has no pin '{p}'", inst.kind),
            });
        }
        let param = |name: &str| inst.params.iter().find(|(p, ..)| p == name);
        if let Some((p, ..)) = inst
            .params
            .iter()
            .find(|(p, ..)| !matches!((p.as_str(), &prim), ("INIT", Primitive::Lut(_, None)) | ("RESET_VALUE", Primitive::Dff)))
        {
            return Err(NetlistError::Syntax {
                line: inst.line,
                column: inst.col,
                message: format!("{} has no parameter '{p}'", inst.kind),
            });
        }
        let output = required(out_pin)?;
        if matches!(output, BitRef::Const(_)) {
            return Err(NetlistError::Syntax {
                line: inst.line,
                column: inst.col,
                message: format!("output of '{}' is tied to a constant", inst.name),
            });
        }
        let kind = match prim {
            Primitive::Lut(k, fixed) => {
                let init = match fixed {
                    Some(t) => t,
                    None => {
                        let Some((_, lit, pl, _)) = param("INIT") else {
                            return Err(NetlistError::Syntax {
                                line: inst.line,
                                column: inst.col,
                                message: format!("LUT '{}' has no INIT parameter", inst.name),
                            });
                        };
                        let expected = 1usize << k;
                        if let Some(w) = lit.width {
                            if w != expected {
                                return Err(NetlistError::InitWidth {
                                    cell: inst.name.clone(),
                                    expected,
                                    got: w,
                                    line: *pl,
                                });
                            }
                        }
                        TruthTable::new(k, lit.value).map_err(|_| NetlistError::InitWidth {
                            cell: inst.name.clone(),
                            expected,
                            got: 64 - lit.value.leading_zeros() as usize,
                            line: *pl,
                        })?
                    }
                };
                let inputs = in_pins.iter().map(|p| required(p)).collect::<Result<Vec<_>, _>>()?;
                CellKind::Lut {
                    init,
                    inputs,
                    output,
                }
            }
            Primitive::Dff => {
                let reset = match pin_bits("R")? {
                    Some(signal) => {
                        let value = match param("RESET_VALUE") {
                            Some((_, lit, ..)) if lit.value <= 1 => lit.value == 1,
                            Some((_, _, l, c)) => {
                                return Err(NetlistError::Syntax {
                                    line: *l,
                                    column: *c,
                                    message: "RESET_VALUE must be 0 or 1".into(),
                                })
                            }
                            None => false,
                        };
                        Some(SyncReset { signal, value })
                    }
                    None => None,
                };
                CellKind::Dff {
                    clock: required("C")?,
                    data: required("D")?,
                    q: output,
                    reset,
                }
            }
            Primitive::Const(value) => CellKind::Const { value, output },
        };
        module.cells.push(Cell {
            id: inst.name.clone(),
            kind,
            line: inst.line,
        });
    }
    Ok(module)
}

fn parse_raw(text: &str) -> Result<Vec<RawModule>, NetlistError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut out = vec![];
    while p.peek().tok != Tok::Eof {
        out.push(p.module()?);
    }
    Ok(out)
}

/// Parses without semantic validation (syntax, primitives and INIT widths only).
pub fn parse_netlist_unchecked(text: &str, top: Option<&str>) -> Result<Netlist, NetlistError> {
    let raws = parse_raw(text)?;
    let names: BTreeSet<String> = raws.iter().map(|m| m.name.clone()).collect();
    let mut modules = BTreeMap::new();
    for raw in &raws {
        if modules.contains_key(&raw.name) {
            return Err(NetlistError::Syntax {
                line: raw.line,
                column: raw.col,
                message: format!("module '{}' defined twice", raw.name),
            });
        }
        modules.insert(raw.name.clone(), build_module(raw, &names)?);
    }
    let top = match top {
        Some(t) => {
            if !modules.contains_key(t) {
                return Err(NetlistError::MissingTop(t.to_string()));
            }
            t.to_string()
        }
        None => {
            let instantiated: BTreeSet<&String> = modules
                .values()
                .flat_map(|m: &Module| m.instances.iter().map(|i| &i.module))
                .collect();
            let roots: Vec<String> = raws
                .iter()
                .map(|m| m.name.clone())
                .filter(|n| !instantiated.contains(n))
                .collect();
            match roots.len() {
                1 => roots[0].clone(),
                0 if raws.is_empty() => {
                    return Err(NetlistError::Syntax {
                        line: 1,
                        column: 1,
                        message: "no module found".into(),
                    })
                }
                0 => {
                    return Err(NetlistError::RecursiveInstantiation {
                        chain: raws.iter().map(|m| m.name.clone()).collect(),
                    })
                }
                _ => return Err(NetlistError::AmbiguousTop(roots)),
            }
        }
    };
    Ok(Netlist { modules, top })
}

/// Parses and validates a netlist. The top module is the unique module that
/// is not instantiated elsewhere, unless `top` names it explicitly.
pub fn parse_netlist(text: &str, top: Option<&str>) -> Result<Netlist, NetlistError> {
    let n = parse_netlist_unchecked(text, top)?;
    let diags = super::validate(&n);
    if diags.is_empty() {
        return Ok(n);
    }
    Err(super::validate::into_error(diags))
}
