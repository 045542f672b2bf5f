//! One line per acceptance criterion. Exits non-zero if any is red.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use common::{brute_force_sat, eval_signal, naive_sim, random_cnf, random_netlist, word, Frame};
use lutscope::analysis::{analyze, converge, ConvergeOptions, LowSwitchReason};
use lutscope::benchgen::{gen_counter_lock, gen_pattern_lock, gen_sdc_pair, Bench};
use lutscope::logic::{LogicValue, TruthTable};
use lutscope::netlist::{parse_netlist, Design, PortRoles, SignalId};
use lutscope::pipeline::{run_pipeline, PipelineOptions, PipelineOutput};
use lutscope::properties::{emit_blif, emit_sva, extract_constant, extract_coverage, Cube, PropertyKind};
use lutscope::prove::{
    backtrace_chain, confirm_trigger, extract_cone, prove_bmc, CnfFormula, ProofStatus, ProveOptions, SatResult,
    StepStatus,
};
use lutscope::reconfig::{
    apply_plan, equivalence_check, reconfigure_init, EquivStatus, ReconfigPlan, Verdict,
};
use lutscope::sim::{random_stimulus, replay, simulate, Trigger};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PER_RUN: Duration = Duration::from_secs(60);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct LockRun {
    bench: Bench,
    out: PipelineOutput,
    elapsed: Duration,
}

fn lock_runs() -> Vec<LockRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_9701);
    (0..20)
        .map(|_| {
            let pattern = rng.gen::<u16>() as u64;
            let seed = rng.gen_range(0..1_000_000u64);
            let bench = gen_pattern_lock(16, pattern, seed).unwrap();
            let t0 = Instant::now();
            let out = run_pipeline(&bench.netlist, &PortRoles::default(), &PipelineOptions::new(seed)).unwrap();
            LockRun { bench, out, elapsed: t0.elapsed() }
        })
        .collect()
}

fn sdc_benches() -> Vec<Bench> {
    (0..10).map(|s| gen_sdc_pair(0x5dc0 + s).unwrap()).collect()
}

fn counter_benches() -> Vec<Bench> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0_4e7e);
    (0..20)
        .map(|i| {
            let bits = 3 + i % 5;
            let threshold = rng.gen_range(1..1u64 << bits);
            gen_counter_lock(bits as usize, threshold, rng.gen_range(0..1000)).unwrap()
        })
        .collect()
}

/// The signal takes `value` at the trigger's firing step when replayed.
fn replays_to(d: &Design, trig: &Trigger, signal: &str, value: bool) -> bool {
    let Some(at) = trig.fires_at else { return false };
    let t = replay(d, trig).unwrap();
    let Some(i) = t.signal_index(&SignalId::scalar(signal)) else { return false };
    at < t.length && t.value_at(i, at) == LogicValue::from_bool(value)
}

fn worked_example() -> Outcome {
    let init = TruthTable::new(4, 0xaccc).unwrap();
    let cover = TruthTable::new(4, 0x0fff).unwrap();
    let new = reconfigure_init(&init, &cover).unwrap();
    outcome(new.bits() == 0x5ccc, format!("accc xnor 0fff = {}", new.to_hex()))
}

fn extraction_golden() -> Outcome {
    let cover = TruthTable::new(4, 0x0fff).unwrap();
    let p = extract_coverage("u_out0", &cover).unwrap();
    let PropertyKind::Never { cubes, .. } = &p.kind else { unreachable!() };
    let single = cubes == &[Cube::parse("11--").unwrap()];
    let lines = ["key", "res", "dc2", "dc1"].map(SignalId::scalar).to_vec();
    let sva = emit_sva(&p.with_lines(lines).unwrap());
    let blif = emit_blif("u_out0", &cover).unwrap();
    let sva_ok = sva + "\n" == include_str!("golden/sdc_payload.sva");
    let blif_ok = blif == include_str!("golden/cover_0fff.blif");
    outcome(
        single && sva_ok && blif_ok,
        format!("single cube 11--: {single}, sva golden: {sva_ok}, blif golden: {blif_ok}"),
    )
}

fn lock_detection(runs: &[LockRun]) -> Outcome {
    let mut bad = vec![];
    let mut slowest = Duration::ZERO;
    let mut extras_max = 0;
    for (i, r) in runs.iter().enumerate() {
        let res = &r.out.report.convergence.result;
        let s: BTreeSet<&SignalId> = res.low_switch.iter().map(|l| &l.signal).collect();
        let missing: Vec<_> = r.bench.truth.trigger_signals.iter().filter(|t| !s.contains(t)).collect();
        let extras: Vec<_> = res
            .low_switch
            .iter()
            .filter(|l| !r.bench.truth.trigger_signals.contains(&l.signal))
            .collect();
        let extras_tagged = extras
            .iter()
            .all(|l| matches!(l.reason, LowSwitchReason::Constant | LowSwitchReason::HighZ));
        let l: BTreeSet<&str> = res.low_coverage.iter().map(|l| l.cell.as_str()).collect();
        let l_ok = r.bench.truth.expected_low_coverage_cells.iter().all(|c| l.contains(c.as_str()));
        extras_max = extras_max.max(extras.len());
        slowest = slowest.max(r.elapsed);
        if !missing.is_empty() || extras.len() > 2 || !extras_tagged || !l_ok || r.elapsed >= PER_RUN {
            bad.push(format!(
                "#{i} (P={:04x}, seed {}): missing {missing:?}, extras {}, L ok {l_ok}",
                r.bench.truth.planted.unwrap(),
                r.bench.spec.seed,
                extras.len()
            ));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{}/20 runs exact, max false positives {extras_max}, slowest {:.1}s{}",
            20 - bad.len(),
            slowest.as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

fn sdc_detection(benches: &[Bench]) -> Outcome {
    let mut bad = vec![];
    let mut slowest = Duration::ZERO;
    for b in benches {
        let d = Design::new(&b.netlist).unwrap();
        let t0 = Instant::now();
        let rep = converge(&d, &ConvergeOptions::new(b.spec.seed)).unwrap();
        let elapsed = t0.elapsed();
        slowest = slowest.max(elapsed);
        let res = &rep.result;
        let dc_in_s = ["dc1", "dc2"].iter().any(|n| res.low_switch_signal(&SignalId::scalar(*n)).is_some());
        let l: BTreeSet<&str> = res.low_coverage.iter().map(|l| l.cell.as_str()).collect();
        let payload: BTreeSet<&str> = b.truth.payload_cells.iter().map(String::as_str).collect();
        let blocks = res.low_coverage.iter().all(|l| l.cover.bits() & 0xf000 == 0);
        if dc_in_s || l != payload || !blocks || elapsed >= PER_RUN {
            bad.push(format!("seed {}: dc in S {dc_in_s}, L == payload {}, (1,1) block uncovered {blocks}", b.spec.seed, l == payload));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{}/10 seeds, slowest {:.1}s{}", 10 - bad.len(), slowest.as_secs_f64(), if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }),
    )
}

fn trigger_recovery(locks: &[LockRun], counters: &[Bench]) -> Outcome {
    let opts = ProveOptions::default();
    let (mut lock_ok, mut counter_ok, mut returned, mut replayed) = (0, 0, 0, 0);
    for r in locks {
        let d = Design::new(&r.bench.netlist).unwrap();
        let p = extract_constant(SignalId::scalar("Tj_Trig_q"), LogicValue::Zero).unwrap();
        let res = backtrace_chain(&d, &p, &opts).unwrap();
        let Some(trig) = res.trigger.filter(|_| res.status == ProofStatus::Fail) else { continue };
        returned += 1;
        let confirmed = confirm_trigger(&d, &vec![(SignalId::scalar("Tj_Trig_q"), true)], &trig).unwrap()
            && replays_to(&d, &trig, "Tj_Trig_q", true);
        replayed += confirmed as usize;
        let planted = r.bench.truth.planted.unwrap();
        if confirmed && trig.frames.first().and_then(|f| word(f, "din", 16)) == Some(planted) {
            lock_ok += 1;
        }
    }
    for b in counters {
        let d = Design::new(&b.netlist).unwrap();
        let threshold = b.truth.planted.unwrap() as usize;
        let p = extract_constant(SignalId::scalar("Tj_Trig"), LogicValue::Zero).unwrap();
        let res = prove_bmc(&d, &p, threshold + 1, &opts).unwrap();
        let Some(trig) = res.trigger.filter(|_| res.status == ProofStatus::Fail) else { continue };
        returned += 1;
        let confirmed = replays_to(&d, &trig, "Tj_Trig", true);
        replayed += confirmed as usize;
        if confirmed && trig.fires_at == Some(threshold) {
            counter_ok += 1;
        }
    }
    outcome(
        lock_ok >= 19 && counter_ok >= 19 && replayed == returned,
        format!("pattern-lock {lock_ok}/20, counter-lock {counter_ok}/20, replayed {replayed}/{returned}"),
    )
}

fn sdc_proof(benches: &[Bench]) -> Outcome {
    let mut agree = 0;
    let mut holds = 0;
    for b in benches {
        let d = Design::new(&b.netlist).unwrap();
        let cell = &b.truth.payload_cells[0];
        let c = d.cell(cell).unwrap();
        let lines: Vec<SignalId> = d.lut_inputs(c).unwrap().iter().map(|&s| d.signals[s].id.clone()).collect();
        let p = extract_coverage(cell, &TruthTable::new(4, 0x0fff).unwrap())
            .unwrap()
            .with_lines(lines)
            .unwrap();
        let chain = backtrace_chain(&d, &p, &ProveOptions::default()).unwrap();
        let proved = chain.status == ProofStatus::Holds
            && chain.exact
            && chain.steps.last().is_some_and(|last| {
                // one row per literal; the deepest step closes every row
                let rows: Vec<_> = chain.steps.iter().filter(|s| s.step == last.step).collect();
                rows.len() == 2 && rows.iter().all(|s| s.status == StepStatus::Success)
            });
        holds += proved as usize;

        // every state drives dc1_n & dc2_n, the values dc1 and dc2 hold two cycles later
        let targets = [d.signal_named("dc1_n").unwrap(), d.signal_named("dc2_n").unwrap()];
        let cone = extract_cone(&d, &targets);
        let support = &cone.support;
        let reachable = (0..1u64 << support.len()).any(|m| {
            let vals: HashMap<_, _> = support.iter().enumerate().map(|(i, &s)| (s, m >> i & 1 == 1)).collect();
            let mut memo = HashMap::new();
            targets.iter().all(|&t| eval_signal(&d, t, &vals, &mut memo))
        });
        if support.len() == 12 && proved == !reachable {
            agree += 1;
        }
    }
    outcome(holds == 10 && agree == 10, format!("HOLDS with final step SUCCESS per literal {holds}/10, enumeration agrees {agree}/10"))
}

fn mitigation(runs: &[LockRun]) -> Outcome {
    let mut confirmed = 0;
    let mut passed = 0;
    for r in runs.iter().filter(|r| r.out.report.trojan_confirmed()) {
        confirmed += 1;
        let Some(m) = &r.out.report.mitigation else { continue };
        let Some(patched) = &r.out.patched else { continue };
        let trig = r.out.report.primary_trigger().unwrap();
        let pd = Design::new(patched).unwrap();
        let t = replay(&pd, trig).unwrap();
        let frozen = r.bench.truth.trigger_signals.iter().all(|s| {
            t.signal_index(s)
                .is_some_and(|i| t.waveform(i).iter().all(|&v| v != LogicValue::One))
        });
        if m.verdict == Verdict::Pass && frozen && m.random_mismatches == 0 && m.random_vectors == 1000 {
            passed += 1;
        }
    }
    outcome(confirmed > 0 && passed == confirmed, format!("{passed}/{confirmed} confirmed fixtures pass"))
}

fn equivalence(runs: &[LockRun], sdc: &[Bench]) -> Outcome {
    let mut patches = 0;
    let mut care = 0;
    let mut full = 0;
    let mut check = |d: &Design, p: &Design, plan: &ReconfigPlan| {
        patches += 1;
        let c = equivalence_check(d, p, Some(plan), None).unwrap();
        care += (c.status == EquivStatus::Equivalent) as usize;
        let f = equivalence_check(d, p, None, None).unwrap();
        let confirmed = f.status == EquivStatus::Inequivalent && f.vector.as_ref().is_some_and(|v| !v.differing.is_empty());
        full += confirmed as usize;
    };
    for r in runs {
        let Some(patched) = &r.out.patched else { continue };
        let d = Design::new(&r.bench.netlist).unwrap();
        check(&d, &Design::new(patched).unwrap(), &r.out.report.plan);
    }
    // patching every flagged payload LUT of the SDC fixtures
    for b in sdc {
        let d = Design::new(&b.netlist).unwrap();
        let rep = converge(&d, &ConvergeOptions::new(b.spec.seed)).unwrap();
        let plan = ReconfigPlan::from_low_coverage(&rep.result.low_coverage);
        if plan.is_empty() {
            continue;
        }
        let p = Design::new(&apply_plan(&b.netlist, &plan).unwrap()).unwrap();
        check(&d, &p, &plan);
    }
    outcome(
        patches > 0 && care == patches && full == patches,
        format!("{patches} patches: care-set equivalent {care}, full distinguished and confirmed {full}"),
    )
}

fn engine_oracles(benches: &[&Bench]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ac1e);
    let mut sat_ok = 0;
    for i in 0..500 {
        let n = rng.gen_range(3..=20);
        let m = (n as f64 * rng.gen_range(3.0..5.5)) as usize;
        let width = if i % 5 == 0 { rng.gen_range(1..=4) } else { 3 };
        let clauses = random_cnf(&mut rng, n, m, width);
        let f = CnfFormula { num_vars: n, clauses: clauses.clone(), names: vec![] };
        let got = f.to_solver().solve(&[]) == SatResult::Sat;
        sat_ok += (got == brute_force_sat(n, &clauses)) as usize;
    }

    let mut sim_total = 0;
    let mut sim_ok = 0;
    for b in benches.iter().filter(|b| b.netlist.top_module().cells.len() <= 200) {
        sim_total += 1;
        let d = Design::new(&b.netlist).unwrap();
        let stim = random_stimulus(&d, b.spec.seed, 200);
        let trace = simulate(&d, &stim, 200).unwrap();
        let frames: Vec<Frame> = (0..200)
            .map(|t| stim.tracks.iter().map(|tr| (tr.signal.clone(), tr.values[t])).collect())
            .collect();
        let reference = naive_sim(&b.netlist, &frames);
        let same = trace.signals.iter().enumerate().all(|(i, id)| {
            let w = trace.waveform(i);
            (0..200).all(|t| w[t] == reference[t].get(id).copied().unwrap_or(LogicValue::X))
        });
        sim_ok += same as usize;
    }

    let mut mono_ok = 0;
    for seed in 0..100u64 {
        let n = parse_netlist(&random_netlist(seed, 4, 14, 3), None).unwrap();
        let d = Design::new(&n).unwrap();
        let a = rng.gen_range(1..100);
        let b = a + rng.gen_range(1..200);
        let trace = simulate(&d, &random_stimulus(&d, seed, b), b).unwrap();
        let short = analyze(&d, &trace.prefix(a)).unwrap();
        let long = analyze(&d, &trace).unwrap();
        let s_short: BTreeSet<_> = short.low_switch.iter().map(|l| &l.signal).collect();
        let s_ok = long.low_switch.iter().all(|l| s_short.contains(&l.signal));
        let cov_ok = long.low_coverage.iter().all(|l| {
            short
                .low_coverage_cell(&l.cell)
                .is_some_and(|before| before.cover.bits() & !l.cover.bits() == 0)
        });
        mono_ok += (s_ok && cov_ok) as usize;
    }
    outcome(
        sat_ok == 500 && sim_total > 0 && sim_ok == sim_total && mono_ok == 100,
        format!("SAT {sat_ok}/500, simulator {sim_ok}/{sim_total} fixtures, prefix monotonicity {mono_ok}/100"),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, Outcome)> = vec![];
    results.push(("worked example", worked_example()));
    results.push(("property extraction golden", extraction_golden()));

    let locks = lock_runs();
    let sdc = sdc_benches();
    let counters = counter_benches();
    results.push(("detection, pattern-lock", lock_detection(&locks)));
    results.push(("detection, SDC pair", sdc_detection(&sdc)));
    results.push(("trigger recovery", trigger_recovery(&locks, &counters)));
    results.push(("SDC proof", sdc_proof(&sdc)));
    results.push(("mitigation", mitigation(&locks)));
    results.push(("equivalence contract", equivalence(&locks, &sdc)));

    let all: Vec<&Bench> = locks.iter().map(|r| &r.bench).chain(&sdc).chain(&counters).collect();
    let mut oracles = engine_oracles(&all);
    let total = start.elapsed();
    oracles.pass &= total < Duration::from_secs(600);
    oracles.detail += &format!(", suite {:.1}s", total.as_secs_f64());
    results.push(("engine oracles", oracles));

    let mut red = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        red += !o.pass as usize;
    }
    println!("acceptance: {}/{} criteria pass", results.len() - red, results.len());
    if red > 0 {
        std::process::exit(1);
    }
}
