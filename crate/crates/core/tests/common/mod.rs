#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write;

use lutscope::logic::LogicValue;
use lutscope::netlist::{flatten, BitRef, CellKind, Design, Direction, FlatKind, Netlist, SigIdx, SignalId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Frame = BTreeMap<SignalId, LogicValue>;

fn read(vals: &Frame, b: &BitRef) -> LogicValue {
    match b {
        BitRef::Const(v) => LogicValue::from_bool(*v),
        BitRef::Net(s) => vals.get(s).copied().unwrap_or(LogicValue::X),
    }
}

/// Truth-table lookup by enumeration: the output over every address that
/// agrees with the known lines, X if those disagree.
fn naive_lut(bits: u64, addr: &[LogicValue]) -> LogicValue {
    let mut seen = BTreeSet::new();
    for a in 0..1u64 << addr.len() {
        let fits = addr.iter().enumerate().all(|(i, v)| match v.to_bool() {
            Some(b) => (a >> i & 1 == 1) == b,
            None => true,
        });
        if fits {
            seen.insert(bits >> a & 1 == 1);
        }
    }
    if seen.len() == 1 {
        LogicValue::from_bool(*seen.iter().next().unwrap())
    } else {
        LogicValue::X
    }
}

/// Reference simulator over the flattened netlist: every step re-sweeps all
/// combinational cells until nothing changes, then clocks the registers.
/// Registers start at X, undriven nets read Z.
pub fn naive_sim(n: &Netlist, stim: &[Frame]) -> Vec<Frame> {
    let flat = flatten(n).unwrap();
    let m = flat.top_module();
    let inputs: BTreeSet<SignalId> = m
        .ports
        .iter()
        .filter(|p| p.direction == Direction::Input)
        .flat_map(|p| m.bits_of(&p.name).unwrap())
        .collect();
    let driven: BTreeSet<SignalId> = m.cells.iter().filter_map(|c| c.output().net().cloned()).collect();
    let mut regs: Frame = BTreeMap::new();
    let mut out = vec![];
    for f in stim {
        let mut vals: Frame = BTreeMap::new();
        for s in m.all_bits() {
            if !driven.contains(&s) && !inputs.contains(&s) {
                vals.insert(s, LogicValue::Z);
            }
        }
        for (s, v) in f {
            vals.insert(s.clone(), *v);
        }
        for c in &m.cells {
            if let CellKind::Dff { q: BitRef::Net(q), .. } = &c.kind {
                vals.insert(q.clone(), regs.get(q).copied().unwrap_or(LogicValue::X));
            }
        }
        loop {
            let mut changed = false;
            for c in &m.cells {
                let (v, o) = match &c.kind {
                    CellKind::Lut { init, inputs, output } => {
                        let addr: Vec<LogicValue> = inputs.iter().map(|b| read(&vals, b)).collect();
                        (naive_lut(init.bits(), &addr), output)
                    }
                    CellKind::Const { value, output } => (LogicValue::from_bool(*value), output),
                    CellKind::Alias { input, output } => (read(&vals, input), output),
                    CellKind::Dff { .. } => continue,
                };
                if let BitRef::Net(o) = o {
                    if vals.get(o) != Some(&v) {
                        vals.insert(o.clone(), v);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for c in &m.cells {
            if let CellKind::Dff { data, q: BitRef::Net(q), reset, .. } = &c.kind {
                let d = read(&vals, data);
                let next = match reset {
                    None => d,
                    Some(r) => match read(&vals, &r.signal).to_bool() {
                        Some(true) => LogicValue::from_bool(r.value),
                        Some(false) => d,
                        None if d == LogicValue::from_bool(r.value) => d,
                        None => LogicValue::X,
                    },
                };
                regs.insert(q.clone(), next);
            }
        }
        out.push(vals);
    }
    out
}

/// A random, acyclic, LUT-mapped netlist with registers. LUT inputs are
/// drawn from primary inputs, register outputs and earlier LUT outputs.
pub fn random_netlist(seed: u64, n_in: usize, n_lut: usize, n_dff: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("module r(input clk, input rst");
    for i in 0..n_in {
        write!(s, ", input i{i}").unwrap();
    }
    s += ", output o0, output o1);\n";
    let mut pool: Vec<String> = (0..n_in).map(|i| format!("i{i}")).collect();
    for d in 0..n_dff {
        writeln!(s, "  wire q{d}, dn{d};").unwrap();
        pool.push(format!("q{d}"));
    }
    let mut luts = vec![];
    for l in 0..n_lut {
        let k = rng.gen_range(1..=4.min(pool.len()));
        let mut ins = vec![];
        while ins.len() < k {
            let p = pool[rng.gen_range(0..pool.len())].clone();
            if !ins.contains(&p) {
                ins.push(p);
            }
        }
        let init: u64 = rng.gen::<u64>() & ((1u64 << (1 << k)) - 1);
        let pins: Vec<String> = ins.iter().enumerate().map(|(i, n)| format!(".I{i}({n})")).collect();
        writeln!(s, "  wire w{l};").unwrap();
        writeln!(
            s,
            "  LUT{k} #(.INIT({}'h{init:x})) l{l} ({}, .O(w{l}));",
            1 << k,
            pins.join(", ")
        )
        .unwrap();
        pool.push(format!("w{l}"));
        luts.push(format!("w{l}"));
    }
    for d in 0..n_dff {
        let src = &luts[rng.gen_range(0..luts.len())];
        writeln!(s, "  assign dn{d} = {src};").unwrap();
        if rng.gen_bool(0.5) {
            let rv = rng.gen_range(0..2);
            writeln!(s, "  DFF #(.RESET_VALUE(1'b{rv})) r{d} (.C(clk), .D(dn{d}), .R(rst), .Q(q{d}));").unwrap();
        } else {
            writeln!(s, "  DFF r{d} (.C(clk), .D(dn{d}), .Q(q{d}));").unwrap();
        }
    }
    writeln!(s, "  assign o0 = {};", luts[luts.len() - 1]).unwrap();
    writeln!(s, "  assign o1 = {};", luts[rng.gen_range(0..luts.len())]).unwrap();
    s += "endmodule\n";
    s
}

pub fn brute_force_sat(n: u32, clauses: &[Vec<i64>]) -> bool {
    (0..1u64 << n).any(|m| {
        clauses
            .iter()
            .all(|c| c.iter().any(|&l| ((m >> (l.unsigned_abs() - 1)) & 1 == 1) == (l > 0)))
    })
}

pub fn random_cnf(rng: &mut ChaCha8Rng, n: u32, m: usize, width: usize) -> Vec<Vec<i64>> {
    (0..m)
        .map(|_| {
            (0..width)
                .map(|_| {
                    let v = rng.gen_range(1..=n as i64);
                    if rng.gen() {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect()
}

/// Parses the `din` word out of a frame, if every bit is present.
pub fn word(frame: &BTreeMap<SignalId, bool>, name: &str, width: usize) -> Option<u64> {
    (0..width).try_fold(0u64, |w, i| {
        frame.get(&SignalId::bit(name, i as i64)).map(|&b| w | (b as u64) << i)
    })
}

/// Evaluates a signal from support values by direct truth-table lookup.
pub fn eval_signal(d: &Design, s: SigIdx, support: &HashMap<SigIdx, bool>, memo: &mut HashMap<SigIdx, bool>) -> bool {
    if let Some(&v) = support.get(&s).or(memo.get(&s)) {
        return v;
    }
    let c = d.signals[s].driver.expect("non-support signal has a driver");
    let v = match &d.cells[c].kind {
        FlatKind::Lut { init, inputs } => {
            let addr = inputs
                .iter()
                .enumerate()
                .fold(0usize, |a, (i, &x)| a | (eval_signal(d, x, support, memo) as usize) << i);
            init.bits() >> addr & 1 == 1
        }
        FlatKind::Const(b) => *b,
        FlatKind::Alias(i) => eval_signal(d, *i, support, memo),
        FlatKind::Dff { .. } => unreachable!("registers are support"),
    };
    memo.insert(s, v);
    v
}
