//! A CDCL SAT solver: two watched literals, first-UIP learning, VSIDS,
//! phase saving, Luby restarts and learnt clause reduction. Supports
//! incremental use under assumptions.

use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};

pub type Var = u32;

/// A literal: variable `v` positive is `2v`, negative is `2v+1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(v: Var, positive: bool) -> Lit {
        Lit(v << 1 | (!positive) as u32)
    }

    pub fn pos(v: Var) -> Lit {
        Lit::new(v, true)
    }

    pub fn neg(v: Var) -> Lit {
        Lit::new(v, false)
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// DIMACS form: 1-based, negative for negated literals.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(d: i64) -> Lit {
        assert!(d != 0, "0 is not a literal");
        Lit::new((d.unsigned_abs() - 1) as Var, d > 0)
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SatResult {
    Sat,
    Unsat,
    /// The conflict budget ran out.
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LBool {
    True,
    False,
    Undef,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: usize,
    blocker: Lit,
}

/// Binary max-heap of variables ordered by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<Var>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: Var) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = Some(self.heap.len());
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<Var> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: Var, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.up(i, act);
        }
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.heap[p] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = Some(i);
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

pub struct Solver {
    clauses: Vec<Clause>,
    /// Problem clauses as given, for model checking.
    original: Vec<Vec<Lit>>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<LBool>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    learnts: usize,
    max_learnts: f64,
    budget: Option<u64>,
    pub stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: vec![],
            original: vec![],
            watches: vec![],
            assigns: vec![],
            level: vec![],
            reason: vec![],
            trail: vec![],
            trail_lim: vec![],
            qhead: 0,
            activity: vec![],
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            polarity: vec![],
            seen: vec![],
            ok: true,
            model: vec![],
            learnts: 0,
            max_learnts: 0.0,
            budget: None,
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.original.len()
    }

    /// Conflicts allowed per `solve` call before giving up with `Unknown`.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.budget = budget;
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as Var;
        self.assigns.push(LBool::Undef);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.polarity.push(false);
        self.seen.push(false);
        self.watches.push(vec![]);
        self.watches.push(vec![]);
        self.heap.grow(v as usize + 1);
        self.heap.insert(v, &self.activity);
        v
    }

    fn value(&self, l: Lit) -> LBool {
        match self.assigns[l.var() as usize] {
            LBool::Undef => LBool::Undef,
            LBool::True if l.is_positive() => LBool::True,
            LBool::False if !l.is_positive() => LBool::True,
            _ => LBool::False,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause. Returns false once the formula is known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        assert_eq!(self.decision_level(), 0);
        for l in lits {
            while l.var() as usize >= self.num_vars() {
                self.new_var();
            }
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return self.ok;
        }
        self.original.push(c.clone());
        if !self.ok {
            return false;
        }
        if c.iter().any(|&l| self.value(l) == LBool::True) {
            return true;
        }
        c.retain(|&l| self.value(l) != LBool::False);
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], None);
                self.ok = self.propagate().is_none();
            }
            _ => {
                self.attach(c, false);
            }
        }
        self.ok
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> usize {
        let cref = self.clauses.len();
        self.watches[(!lits[0]).idx()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[(!lits[1]).idx()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts += 1;
        }
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var() as usize;
        debug_assert!(self.assigns[v] == LBool::Undef);
        self.assigns[v] = if l.is_positive() { LBool::True } else { LBool::False };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == LBool::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let c = &mut self.clauses[cref].lits;
                    if c[0] == false_lit {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watcher {
                    cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == LBool::True {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != LBool::False {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(!l).idx()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == LBool::False {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(cref));
                }
            }
            ws.truncate(j);
            self.watches[p.idx()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the level to jump back to.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            self.bump_clause(confl);
            let start = if p.is_some() { 1 } else { 0 };
            for k in start..self.clauses[confl].lits.len() {
                let q = self.clauses[confl].lits[k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(q.var());
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            self.seen[pl.var() as usize] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[pl.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict at a decision level");

        // drop literals implied by the rest of the clause
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if i == 0 {
                    return true;
                }
                match self.reason[l.var() as usize] {
                    None => true,
                    Some(r) => self.clauses[r].lits[1..].iter().any(|q| {
                        let v = q.var() as usize;
                        !self.seen[v] && self.level[v] > 0
                    }),
                }
            })
            .collect();
        for l in &learnt {
            self.seen[l.var() as usize] = false;
        }
        let mut out: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter_map(|(l, k)| k.then_some(l))
            .collect();

        let mut bt = 0;
        if out.len() > 1 {
            let mut max_i = 1;
            for i in 2..out.len() {
                if self.level[out[i].var() as usize] > self.level[out[max_i].var() as usize] {
                    max_i = i;
                }
            }
            out.swap(1, max_i);
            bt = self.level[out[1].var() as usize];
        }
        (out, bt)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.assigns[v as usize] = LBool::Undef;
            self.reason[v as usize] = None;
            self.polarity[v as usize] = l.is_positive();
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn locked(&self, cref: usize) -> bool {
        let l = self.clauses[cref].lits[0];
        self.value(l) == LBool::True && self.reason[l.var() as usize] == Some(cref)
    }

    fn reduce_db(&mut self) {
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lits.len() > 2
            })
            .collect();
        cands.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .expect("activities are finite")
        });
        for &i in cands.iter().take(cands.len() / 2) {
            if !self.locked(i) {
                self.clauses[i].deleted = true;
                self.clauses[i].lits.clear();
                self.learnts -= 1;
            }
        }
        for ws in &mut self.watches {
            let cl = &self.clauses;
            ws.retain(|w| !cl[w.cref].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == LBool::Undef {
                return Some(Lit::new(v, self.polarity[v as usize]));
            }
        }
        None
    }

    /// Searches for up to `nof_conflicts` conflicts.
    fn search(&mut self, nof_conflicts: u64, assumptions: &[Lit], spent: &mut u64) -> SatResult {
        let mut conflicts = 0;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                *spent += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SatResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
            } else {
                if conflicts >= nof_conflicts {
                    self.cancel_until(0);
                    return SatResult::Unknown;
                }
                if let Some(b) = self.budget {
                    if *spent >= b {
                        self.cancel_until(0);
                        return SatResult::Unknown;
                    }
                }
                if self.learnts as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.value(a) {
                        LBool::True => self.trail_lim.push(self.trail.len()),
                        LBool::False => return SatResult::Unsat,
                        LBool::Undef => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let d = match next {
                    Some(a) => a,
                    None => {
                        self.stats.decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return SatResult::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(d, None);
            }
        }
    }

    /// Solves under `assumptions`. Learnt clauses are kept for later calls.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SatResult {
        self.stats.solves += 1;
        self.model.clear();
        if !self.ok {
            return SatResult::Unsat;
        }
        for a in assumptions {
            while a.var() as usize >= self.num_vars() {
                self.new_var();
            }
        }
        self.max_learnts = (self.original.len() as f64 / 3.0).max(1000.0);
        let mut spent = 0;
        let mut restarts = 0;
        let result = loop {
            let limit = (luby(2.0, restarts) * 100.0) as u64;
            match self.search(limit, assumptions, &mut spent) {
                SatResult::Unknown => {
                    if self.budget.is_some_and(|b| spent >= b) {
                        break SatResult::Unknown;
                    }
                    restarts += 1;
                    self.stats.restarts += 1;
                    self.max_learnts *= 1.1;
                }
                r => break r,
            }
        };
        if result == SatResult::Sat {
            self.model = self
                .assigns
                .iter()
                .map(|a| *a == LBool::True)
                .collect();
            assert!(self.check_model(), "model does not satisfy the formula");
            for a in assumptions {
                assert!(self.model_lit(*a), "model violates an assumption");
            }
        }
        self.cancel_until(0);
        result
    }

    fn check_model(&self) -> bool {
        self.original
            .iter()
            .all(|c| c.iter().any(|&l| self.model_lit(l)))
    }

    /// Value of `v` in the last satisfying assignment.
    pub fn model_value(&self, v: Var) -> Option<bool> {
        self.model.get(v as usize).copied()
    }

    pub fn model_lit(&self, l: Lit) -> bool {
        self.model[l.var() as usize] == l.is_positive()
    }

    pub fn model(&self) -> &[bool] {
        &self.model
    }
}
