mod common;

use std::collections::BTreeMap;

use common::{naive_sim, random_netlist, Frame};
use lutscope::benchgen::{gen_counter_lock, gen_pattern_lock, gen_sdc_pair};
use lutscope::logic::LogicValue;
use lutscope::netlist::{flatten, parse_netlist, Design, Netlist, SignalId};
use lutscope::sim::{random_stimulus, simulate, EventTrace, Stimulus};

fn frames(stim: &Stimulus) -> Vec<Frame> {
    (0..stim.cycles)
        .map(|t| stim.tracks.iter().map(|tr| (tr.signal.clone(), tr.values[t])).collect())
        .collect()
}

/// Compares every recorded signal at every step against the reference.
fn check(n: &Netlist, seed: u64, cycles: usize) -> usize {
    let d = Design::new(n).unwrap();
    let stim = random_stimulus(&d, seed, cycles);
    let trace = simulate(&d, &stim, cycles).unwrap();
    let reference = naive_sim(n, &frames(&stim));
    let mut compared = 0;
    for (i, id) in trace.signals.iter().enumerate() {
        let w = trace.waveform(i);
        for t in 0..cycles {
            let want = reference[t].get(id).copied().unwrap_or(LogicValue::X);
            assert_eq!(w[t], want, "{id} at step {t}");
            compared += 1;
        }
    }
    compared
}

#[test]
fn matches_reference_on_fixtures() {
    let fixtures = [
        gen_pattern_lock(16, 0x1234, 1).unwrap().netlist,
        gen_pattern_lock(8, 0xa5, 2).unwrap().netlist,
        gen_counter_lock(4, 9, 3).unwrap().netlist,
        gen_sdc_pair(4).unwrap().netlist,
    ];
    for n in &fixtures {
        assert!(n.top_module().cells.len() <= 200);
        assert!(check(n, 7, 300) > 0);
    }
}

#[test]
fn matches_reference_on_random_netlists() {
    for seed in 0..40 {
        let text = random_netlist(seed, 4, 12, 3);
        let n = parse_netlist(&text, None).unwrap();
        check(&n, seed, 60);
    }
}

#[test]
fn undriven_net_reads_z() {
    let n = parse_netlist(
        "module t(input a, output y); wire f; LUT2 #(.INIT(4'h8)) g (.I0(a), .I1(f), .O(y)); endmodule",
        None,
    )
    .unwrap();
    let d = Design::new(&n).unwrap();
    let stim = random_stimulus(&d, 0, 8);
    let trace = simulate(&d, &stim, 8).unwrap();
    let f = trace.signal_index(&SignalId::scalar("f")).unwrap();
    assert!(trace.waveform(f).iter().all(|&v| v == LogicValue::Z));
    check(&n, 0, 8);
}

// 3-bit counter from reset: the reference counts 0..7 after the reset cycle
#[test]
fn counter_counts() {
    let n = gen_counter_lock(3, 5, 0).unwrap().netlist;
    let d = Design::new(&n).unwrap();
    let stim = random_stimulus(&d, 1, 12);
    let trace = simulate(&d, &stim, 12).unwrap();
    let bit = |t: usize, i: usize| -> u64 {
        let s = trace.signal_index(&SignalId::scalar(format!("cnt{i}"))).unwrap();
        trace.value_at(s, t).to_bool().unwrap() as u64
    };
    for t in 1..12 {
        let count = bit(t, 0) | bit(t, 1) << 1 | bit(t, 2) << 2;
        assert_eq!(count, (t as u64 - 1) % 8, "step {t}");
    }
}

const HIER: &str = "
module half(input a, input b, output s, output c);
  LUT2 #(.INIT(4'h6)) x (.I0(a), .I1(b), .O(s));
  LUT2 #(.INIT(4'h8)) y (.I0(a), .I1(b), .O(c));
endmodule
module top(input clk, input rst, input p, input q, output o, output k);
  wire s0, c0, r;
  half h0 (.a(p), .b(q), .s(s0), .c(c0));
  half h1 (.a(s0), .b(r), .s(o), .c(k));
  DFF st (.C(clk), .D(c0), .R(rst), .Q(r));
endmodule";

fn values_by_name(t: &EventTrace) -> BTreeMap<SignalId, Vec<LogicValue>> {
    t.signals.iter().enumerate().map(|(i, s)| (s.clone(), t.waveform(i))).collect()
}

#[test]
fn flattening_preserves_traces() {
    let hier = parse_netlist(HIER, None).unwrap();
    let flat = flatten(&hier).unwrap();
    let (dh, df) = (Design::new(&hier).unwrap(), Design::new(&flat).unwrap());
    let stim = random_stimulus(&dh, 3, 50);
    let (th, tf) = (simulate(&dh, &stim, 50).unwrap(), simulate(&df, &stim, 50).unwrap());
    assert_eq!(values_by_name(&th), values_by_name(&tf));
    assert!(th.signal_index(&SignalId::scalar("h0.s")).is_some());
    check(&hier, 3, 50);
}
