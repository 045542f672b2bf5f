use serde::{Deserialize, Serialize};

use super::cnf::{encode_lut, ClauseSink};
use super::sat::Lit;
use crate::logic::TruthTable;
use crate::netlist::{CellIdx, Design, FlatKind, SigIdx};

/// Combinational fan-in of some signals up to primary inputs and register outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cone {
    pub targets: Vec<SigIdx>,
    /// Combinational cells, inputs before users.
    pub cells: Vec<CellIdx>,
    /// Primary inputs, DFF outputs and undriven nets the cone reads.
    pub support: Vec<SigIdx>,
    /// Undriven nets in the support; they are treated as free inputs.
    pub undriven: Vec<SigIdx>,
}

impl Cone {
    pub fn contains_cell(&self, c: CellIdx) -> bool {
        self.cells.contains(&c)
    }
}

/// Walks back from `targets` through LUT, alias and constant cells.
pub fn extract_cone(design: &Design, targets: &[SigIdx]) -> Cone {
    let n = design.signals.len();
    let mut visited = vec![false; n];
    let mut cells = vec![];
    let mut support = vec![];
    let mut undriven = vec![];
    // (signal, inputs already pushed)
    let mut stack: Vec<(SigIdx, bool)> = targets.iter().rev().map(|&s| (s, false)).collect();
    while let Some((s, expanded)) = stack.pop() {
        if expanded {
            let c = design.signals[s].driver.expect("expanded signals have a driver");
            cells.push(c);
            continue;
        }
        if visited[s] {
            continue;
        }
        visited[s] = true;
        match design.signals[s].driver {
            None => {
                support.push(s);
                if !design.signals[s].primary_input {
                    undriven.push(s);
                }
            }
            Some(c) if !design.cells[c].is_comb() => support.push(s),
            Some(c) => {
                stack.push((s, true));
                for i in design.cells[c].inputs().into_iter().rev() {
                    if !visited[i] {
                        stack.push((i, false));
                    }
                }
            }
        }
    }
    support.sort_unstable();
    undriven.sort_unstable();
    Cone {
        targets: targets.to_vec(),
        cells,
        support,
        undriven,
    }
}

/// How register outputs are valued in the first time frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitState {
    /// Declared reset value, or 0 for registers without one.
    #[default]
    Reset,
    /// Unconstrained.
    Free,
}

impl InitState {
    /// The fixed initial value of a register under this policy.
    pub fn value(self, design: &Design, dff: CellIdx) -> Option<bool> {
        match self {
            InitState::Reset => Some(design.reset_value(dff).unwrap_or(false)),
            InitState::Free => None,
        }
    }
}

/// Lazily encodes signal values over time frames. Frame 0 registers follow
/// the [`InitState`] policy; frame t+1 registers take the next-state
/// function of frame t. Primary inputs and undriven nets get a fresh
/// variable per frame.
pub struct Encoder<'d> {
    design: &'d Design,
    init: InitState,
    frames: Vec<Vec<Option<Lit>>>,
    true_lit: Option<Lit>,
}

impl<'d> Encoder<'d> {
    pub fn new(design: &'d Design, init: InitState) -> Self {
        Encoder {
            design,
            init,
            frames: vec![],
            true_lit: None,
        }
    }

    pub fn design(&self) -> &'d Design {
        self.design
    }

    pub fn true_lit<S: ClauseSink + ?Sized>(&mut self, sink: &mut S) -> Lit {
        *self.true_lit.get_or_insert_with(|| {
            let t = Lit::pos(sink.new_var());
            sink.add_clause(&[t]);
            t
        })
    }

    fn const_lit<S: ClauseSink + ?Sized>(&mut self, sink: &mut S, v: bool) -> Lit {
        let t = self.true_lit(sink);
        if v {
            t
        } else {
            !t
        }
    }

    /// The literal of `s` in `frame`, if already encoded.
    pub fn encoded(&self, frame: usize, s: SigIdx) -> Option<Lit> {
        self.frames.get(frame).and_then(|f| f[s])
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    fn slot(&mut self, frame: usize) -> &mut Vec<Option<Lit>> {
        while self.frames.len() <= frame {
            self.frames.push(vec![None; self.design.signals.len()]);
        }
        &mut self.frames[frame]
    }

    fn deps(&self, frame: usize, s: SigIdx) -> Vec<(usize, SigIdx)> {
        let Some(c) = self.design.signals[s].driver else {
            return vec![];
        };
        match &self.design.cells[c].kind {
            FlatKind::Lut { inputs, .. } => inputs.iter().map(|&i| (frame, i)).collect(),
            FlatKind::Alias(i) => vec![(frame, *i)],
            FlatKind::Const(_) => vec![],
            FlatKind::Dff { data, reset, .. } => {
                if frame == 0 {
                    vec![]
                } else {
                    let mut d = vec![(frame - 1, *data)];
                    if let Some((r, _)) = reset {
                        d.push((frame - 1, *r));
                    }
                    d
                }
            }
        }
    }

    fn build<S: ClauseSink + ?Sized>(&mut self, sink: &mut S, frame: usize, s: SigIdx) -> Lit {
        let d = self.design;
        let Some(c) = d.signals[s].driver else {
            return Lit::pos(sink.new_var());
        };
        let get = |e: &Self, f: usize, i: SigIdx| e.encoded(f, i).expect("dependency encoded");
        match &d.cells[c].kind {
            FlatKind::Lut { init, inputs } => {
                let ins: Vec<Lit> = inputs.iter().map(|&i| get(self, frame, i)).collect();
                let out = Lit::pos(sink.new_var());
                encode_lut(sink, init, &ins, out);
                out
            }
            FlatKind::Alias(i) => get(self, frame, *i),
            FlatKind::Const(v) => self.const_lit(sink, *v),
            FlatKind::Dff { data, reset, .. } => {
                if frame == 0 {
                    return match self.init.value(d, c) {
                        Some(v) => self.const_lit(sink, v),
                        None => Lit::pos(sink.new_var()),
                    };
                }
                let dl = get(self, frame - 1, *data);
                match reset {
                    None => dl,
                    Some((r, rv)) => {
                        let rl = get(self, frame - 1, *r);
                        // q' = r ? rv : d over lines (d, r)
                        let init = TruthTable::new(2, if *rv { 0xe } else { 0x2 }).expect("2-input table");
                        let out = Lit::pos(sink.new_var());
                        encode_lut(sink, &init, &[dl, rl], out);
                        out
                    }
                }
            }
        }
    }

    /// Fixes the literal of `s` at `frame` before it is encoded, e.g. to share
    /// inputs between two designs.
    pub fn bind(&mut self, frame: usize, s: SigIdx, l: Lit) {
        self.slot(frame)[s] = Some(l);
    }

    /// Encodes `s` at `frame` (and everything it depends on).
    pub fn lit<S: ClauseSink + ?Sized>(&mut self, sink: &mut S, frame: usize, s: SigIdx) -> Lit {
        if let Some(l) = self.encoded(frame, s) {
            return l;
        }
        let mut stack = vec![(frame, s)];
        while let Some(&(f, x)) = stack.last() {
            if self.encoded(f, x).is_some() {
                stack.pop();
                continue;
            }
            let missing: Vec<(usize, SigIdx)> = self
                .deps(f, x)
                .into_iter()
                .filter(|&(g, y)| self.encoded(g, y).is_none())
                .collect();
            if !missing.is_empty() {
                stack.extend(missing);
                continue;
            }
            let l = self.build(sink, f, x);
            self.slot(f)[x] = Some(l);
            stack.pop();
        }
        self.encoded(frame, s).expect("just encoded")
    }

    /// The value register `dff` takes at the clock edge ending `frame`.
    pub fn next_state<S: ClauseSink + ?Sized>(&mut self, sink: &mut S, frame: usize, dff: CellIdx) -> Lit {
        let q = self.design.cells[dff].output;
        self.lit(sink, frame + 1, q)
    }

    /// Names of encoded signals per variable, for DIMACS comments.
    pub fn var_names(&self) -> Vec<(u32, String)> {
        let mut out = vec![];
        for (f, frame) in self.frames.iter().enumerate() {
            for (s, l) in frame.iter().enumerate() {
                if let Some(l) = l {
                    if l.is_positive() && Some(*l) != self.true_lit {
                        out.push((l.var(), format!("{}@{f}", self.design.signals[s].id)));
                    }
                }
            }
        }
        out.sort();
        out.dedup_by_key(|e| e.0);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn design(text: &str) -> Design {
        Design::new(&parse_netlist(text, None).unwrap()).unwrap()
    }

    #[test]
    fn pi_only_cone() {
        let d = design("module t(input a, input b, output y); LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(b), .O(y)); endmodule");
        let y = d.signal_named("y").unwrap();
        let c = extract_cone(&d, &[y]);
        assert_eq!(c.cells, vec![d.cell("g").unwrap()]);
        assert_eq!(c.support, vec![d.signal_named("a").unwrap(), d.signal_named("b").unwrap()]);
    }

    #[test]
    fn stops_at_register() {
        let d = design(
            "module t(input clk, input a, input b, output y); wire m, q;
             LUT2 #(.INIT(4'h6)) x (.I0(a), .I1(b), .O(m));
             DFF r (.C(clk), .D(m), .Q(q));
             LUT1 #(.INIT(2'h1)) n (.I0(q), .O(y)); endmodule",
        );
        let c = extract_cone(&d, &[d.signal_named("y").unwrap()]);
        assert_eq!(c.cells, vec![d.cell("n").unwrap()]);
        assert_eq!(c.support, vec![d.signal_named("q").unwrap()]);
    }

    #[test]
    fn undriven_is_free() {
        let d = design("module t(input a, output y); wire f; LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(f), .O(y)); endmodule");
        let c = extract_cone(&d, &[d.signal_named("y").unwrap()]);
        assert_eq!(c.undriven, vec![d.signal_named("f").unwrap()]);
    }
}
