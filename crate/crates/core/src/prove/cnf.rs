use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::sat::{Lit, Solver, Var};
use crate::logic::TruthTable;

/// Anything clauses can be written into.
pub trait ClauseSink {
    fn new_var(&mut self) -> Var;
    fn add_clause(&mut self, lits: &[Lit]);
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> Var {
        Solver::new_var(self)
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        Solver::add_clause(self, lits);
    }
}

/// A plain clause list, mainly for DIMACS export.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i64>>,
    /// Optional variable names, written as `c var <n> <name>` comments.
    #[serde(default)]
    pub names: Vec<(u32, String)>,
}

impl ClauseSink for CnfFormula {
    fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        self.num_vars - 1
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        for l in lits {
            self.num_vars = self.num_vars.max(l.var() + 1);
        }
        self.clauses.push(lits.iter().map(|l| l.to_dimacs()).collect());
    }
}

impl CnfFormula {
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for (v, n) in &self.names {
            writeln!(out, "c var {} {}", v + 1, n).unwrap();
        }
        writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len()).unwrap();
        for c in &self.clauses {
            for l in c {
                write!(out, "{l} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn parse_dimacs(text: &str) -> Result<CnfFormula, String> {
        let mut f = CnfFormula::default();
        let mut cur = vec![];
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf") {
                let nums: Vec<&str> = rest.split_whitespace().collect();
                f.num_vars = nums
                    .first()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| format!("line {}: bad header", n + 1))?;
                continue;
            }
            for tok in line.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| format!("line {}: bad literal '{tok}'", n + 1))?;
                if v == 0 {
                    f.clauses.push(std::mem::take(&mut cur));
                } else {
                    f.num_vars = f.num_vars.max(v.unsigned_abs() as u32);
                    cur.push(v);
                }
            }
        }
        if !cur.is_empty() {
            f.clauses.push(cur);
        }
        Ok(f)
    }

    /// Loads the formula into a fresh solver.
    pub fn to_solver(&self) -> Solver {
        let mut s = Solver::new();
        for _ in 0..self.num_vars {
            s.new_var();
        }
        for c in &self.clauses {
            let lits: Vec<Lit> = c.iter().map(|&d| Lit::from_dimacs(d)).collect();
            s.add_clause(&lits);
        }
        s
    }
}

/// Tseitin clauses for `out <-> LUT(inputs)`: one clause per address.
pub fn encode_lut<S: ClauseSink + ?Sized>(sink: &mut S, init: &TruthTable, inputs: &[Lit], out: Lit) {
    debug_assert_eq!(inputs.len(), init.inputs() as usize);
    let mut clause = Vec::with_capacity(inputs.len() + 1);
    for a in 0..init.len() {
        clause.clear();
        for (i, &x) in inputs.iter().enumerate() {
            // falsified exactly when the inputs spell address a
            clause.push(if a >> i & 1 == 1 { !x } else { x });
        }
        clause.push(if init.bit(a) { out } else { !out });
        sink.add_clause(&clause);
    }
}
