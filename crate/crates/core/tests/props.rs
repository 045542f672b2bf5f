mod common;

use std::collections::BTreeSet;

use common::random_netlist;
use lutscope::analysis::analyze;
use lutscope::logic::{LogicValue, TruthTable};
use lutscope::netlist::{emit_netlist, parse_netlist, Design};
use lutscope::properties::qm::{minimize, prime_implicants};
use lutscope::reconfig::{apply_plan, equivalence_check, EquivStatus, ReconfigPlan};
use lutscope::sim::{lut_eval, random_stimulus, simulate};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = TruthTable> {
    (1u8..=6).prop_flat_map(|k| {
        any::<u64>().prop_map(move |b| {
            let mask = if k == 6 { u64::MAX } else { (1u64 << (1 << k)) - 1 };
            TruthTable::new(k, b & mask).unwrap()
        })
    })
}

fn value() -> impl Strategy<Value = LogicValue> {
    prop_oneof![
        Just(LogicValue::Zero),
        Just(LogicValue::One),
        Just(LogicValue::X),
        Just(LogicValue::Z)
    ]
}

/// `a` refines `b`: equal where `b` is known.
fn refines(a: LogicValue, b: LogicValue) -> bool {
    !b.is_known() || a == b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_parse_roundtrip(seed in any::<u64>(), n_lut in 1usize..20, n_dff in 0usize..4) {
        let n = parse_netlist(&random_netlist(seed, 4, n_lut, n_dff), None).unwrap();
        let text = emit_netlist(&n);
        let back = parse_netlist(&text, None).unwrap();
        prop_assert!(n.isomorphic(&back), "{}", text);
        prop_assert_eq!(emit_netlist(&back), text);
    }

    // resolving an X line to 0 or 1 never changes a known output
    #[test]
    fn lut_eval_x_monotone(t in table(), lines in prop::collection::vec(value(), 6), pick in any::<u64>()) {
        let k = t.inputs() as usize;
        let addr = &lines[..k];
        let out = lut_eval(&t, addr).unwrap();
        let resolved: Vec<LogicValue> = addr
            .iter()
            .enumerate()
            .map(|(i, v)| if v.is_known() { *v } else { LogicValue::from_bool(pick >> i & 1 == 1) })
            .collect();
        let full = lut_eval(&t, &resolved).unwrap();
        prop_assert!(full.is_known());
        prop_assert!(refines(full, out));
        if addr.iter().all(|v| v.is_known()) {
            let a = resolved.iter().enumerate().fold(0usize, |a, (i, v)| a | ((*v == LogicValue::One) as usize) << i);
            prop_assert_eq!(full, LogicValue::from_bool(t.bit(a)));
        }
    }

    #[test]
    fn xnor_is_an_involution(t in table(), c in any::<u64>()) {
        let cov = TruthTable::new(t.inputs(), c & TruthTable::ones(t.inputs()).bits()).unwrap();
        let once = t.xnor(&cov).unwrap();
        prop_assert_eq!(once.xnor(&cov).unwrap(), t);
        for a in 0..t.len() {
            prop_assert_eq!(once.bit(a) == t.bit(a), cov.bit(a));
        }
    }

    #[test]
    fn qm_cover_is_exact_and_prime(k in 1u8..=4, on in any::<u64>()) {
        let on = on & ((1u64 << (1 << k)) - 1);
        let cover = minimize(k, on);
        let primes = prime_implicants(k, on);
        for m in 0..1u64 << k {
            prop_assert_eq!(cover.iter().any(|c| c.contains(m)), on >> m & 1 == 1);
        }
        for c in &cover {
            prop_assert!(primes.contains(c));
            // dropping any literal leaves the on-set
            for (i, _) in c.literal_list() {
                let mut wider = *c;
                wider.care &= !(1 << i);
                wider.value &= !(1 << i);
                prop_assert!(wider.minterms().any(|m| on >> m & 1 == 0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // longer traces only remove signals from S and only add covered addresses
    #[test]
    fn analysis_is_prefix_monotone(seed in any::<u64>(), a in 1usize..80, extra in 1usize..120) {
        let n = parse_netlist(&random_netlist(seed, 4, 14, 3), None).unwrap();
        let d = Design::new(&n).unwrap();
        let b = a + extra;
        let trace = simulate(&d, &random_stimulus(&d, seed, b), b).unwrap();
        let short = analyze(&d, &trace.prefix(a)).unwrap();
        let long = analyze(&d, &trace).unwrap();
        let s_short: BTreeSet<_> = short.low_switch.iter().map(|l| l.signal.clone()).collect();
        for l in &long.low_switch {
            prop_assert!(s_short.contains(&l.signal), "{} left S", l.signal);
        }
        for l in &long.low_coverage {
            let before = short.low_coverage_cell(&l.cell);
            prop_assert!(before.is_some(), "{} joined L", l.cell);
            let before = before.unwrap().cover.bits();
            prop_assert_eq!(before & !l.cover.bits(), 0);
        }
    }

    // patched INITs agree with the old ones on every covered address, and
    // the care-set check accepts the patched design
    #[test]
    fn patch_preserves_care_set(seed in any::<u64>(), cycles in 5usize..60) {
        let n = parse_netlist(&random_netlist(seed, 5, 12, 2), None).unwrap();
        let d = Design::new(&n).unwrap();
        let trace = simulate(&d, &random_stimulus(&d, seed, cycles), cycles).unwrap();
        let res = analyze(&d, &trace).unwrap();
        let plan = ReconfigPlan::from_low_coverage(&res.low_coverage);
        for e in &plan.entries {
            for a in 0..e.old_init.len() {
                if e.coverage.bit(a) {
                    prop_assert_eq!(e.old_init.bit(a), e.new_init.bit(a));
                } else {
                    prop_assert_ne!(e.old_init.bit(a), e.new_init.bit(a));
                }
            }
        }
        let patched = Design::new(&apply_plan(&n, &plan).unwrap()).unwrap();
        let r = equivalence_check(&d, &patched, Some(&plan), None).unwrap();
        prop_assert_eq!(r.status, EquivStatus::Equivalent);
    }
}
