//! Plain-text summary of a pipeline run.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::netlist::SignalId;
use crate::pipeline::PipelineReport;
use crate::prove::ChainStep;

/// Groups bus bits into hex words when every bit `0..n` is present,
/// otherwise lists `name=value` pairs.
pub fn format_assignment(values: &BTreeMap<SignalId, bool>) -> String {
    let mut buses: BTreeMap<&str, BTreeMap<i64, bool>> = BTreeMap::new();
    let mut parts = vec![];
    for (s, v) in values {
        match s.index {
            Some(i) => {
                buses.entry(s.name.as_str()).or_default().insert(i, *v);
            }
            None => parts.push((s.name.clone(), format!("{} = {}", s.name, *v as u8))),
        }
    }
    for (name, bits) in buses {
        let dense = bits.keys().copied().eq(0..bits.len() as i64) && bits.len() <= 64;
        if dense && bits.len() > 1 {
            let word = bits.iter().fold(0u64, |w, (&i, &b)| w | (b as u64) << i);
            let digits = bits.len().div_ceil(4);
            parts.push((name.to_string(), format!("{name} = {word:0digits$X}")));
        } else {
            for (i, b) in bits {
                parts.push((format!("{name}[{i:>20}]"), format!("{name}[{i}] = {}", b as u8)));
            }
        }
    }
    if parts.is_empty() {
        return "-".to_string();
    }
    parts.sort();
    parts.into_iter().map(|(_, s)| s).collect::<Vec<_>>().join(", ")
}

/// Rows shaped like a proof transcript: step, script, status, counterexample.
pub fn proof_table(steps: &[ChainStep]) -> String {
    let rows: Vec<[String; 4]> = steps
        .iter()
        .map(|s| {
            [
                s.step.to_string(),
                s.goal.clone(),
                format!("{:?}", s.status).to_uppercase(),
                format_assignment(&s.counterexample),
            ]
        })
        .collect();
    let head = ["Step", "Proof script", "Status", "Counterexample"];
    let mut w = head.map(str::len);
    for r in &rows {
        for i in 0..4 {
            w[i] = w[i].max(r[i].len());
        }
    }
    let line = |cells: [&str; 4]| {
        format!(
            "  {:<w0$} | {:<w1$} | {:<w2$} | {}\n",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            w0 = w[0],
            w1 = w[1],
            w2 = w[2]
        )
    };
    let mut out = line(head);
    out += &format!("  {}-+-{}-+-{}-+-{}\n", "-".repeat(w[0]), "-".repeat(w[1]), "-".repeat(w[2]), "-".repeat(w[3]));
    for r in &rows {
        out += &line([&r[0], &r[1], &r[2], &r[3]]);
    }
    out
}

pub fn render_report(r: &PipelineReport) -> String {
    let mut o = String::new();
    let c = &r.convergence;
    let res = &c.result;
    writeln!(o, "lutscope report: {}", r.design).unwrap();
    writeln!(
        o,
        "trace: {} cycles, seed {}, {}",
        res.trace_len,
        c.seed,
        if c.converged {
            format!("converged after {} stable rounds", c.stable_rounds)
        } else {
            "not converged".to_string()
        }
    )
    .unwrap();
    let lens: Vec<String> = c
        .history
        .iter()
        .map(|h| format!("{}:{}/{}", h.length, h.low_switch, h.low_coverage))
        .collect();
    writeln!(o, "history (cycles:|S|/|L|): {}", lens.join(" ")).unwrap();
    o.push('\n');

    if res.low_switch.is_empty() && res.low_coverage.is_empty() {
        writeln!(o, "no specious signals or LUTs").unwrap();
    } else {
        writeln!(o, "low switching signals: {}", res.low_switch.len()).unwrap();
        for l in &res.low_switch {
            let reason = serde_json::to_value(l.reason).expect("reason serializes");
            writeln!(o, "  {:<24} {:<18} {}", l.signal.to_string(), reason.as_str().unwrap_or(""), l.observed).unwrap();
        }
        writeln!(o, "low coverage LUTs: {}", res.low_coverage.len()).unwrap();
        for l in &res.low_coverage {
            writeln!(
                o,
                "  {:<24} INIT {}'h{} cover {}'h{} ({} uncovered)",
                l.cell,
                l.init.len(),
                l.init.to_hex(),
                l.cover.len(),
                l.cover.to_hex(),
                l.uncovered_count()
            )
            .unwrap();
        }
    }

    if !r.proofs.is_empty() {
        writeln!(o, "\nproperties: {}", r.proofs.len()).unwrap();
        for p in &r.proofs {
            let status = serde_json::to_value(p.status).expect("status serializes");
            let tag = if p.confirmed { " (confirmed trigger)" } else { "" };
            writeln!(o, "\n{}: {}{}", p.property.name(), status.as_str().unwrap_or(""), tag).unwrap();
            for line in p.sva.lines() {
                writeln!(o, "  {line}").unwrap();
            }
            if !p.chain.steps.is_empty() {
                o += &proof_table(&p.chain.steps);
            }
            if let Some(b) = &p.bmc {
                let s = serde_json::to_value(b.status).expect("status serializes");
                match b.bound {
                    Some(k) => writeln!(o, "  bmc: {} to depth {k}", s.as_str().unwrap_or("")).unwrap(),
                    None => writeln!(o, "  bmc: {}", s.as_str().unwrap_or("")).unwrap(),
                }
            }
            if let Some(t) = &p.trigger {
                writeln!(o, "  trigger ({} frames):", t.frames.len()).unwrap();
                if !t.initial_state.is_empty() {
                    writeln!(o, "    state: {}", format_assignment(&t.initial_state)).unwrap();
                }
                for (i, f) in t.frames.iter().enumerate() {
                    writeln!(o, "    {i}: {}", format_assignment(f)).unwrap();
                }
            }
        }
    }

    writeln!(o).unwrap();
    if r.plan.is_empty() {
        writeln!(o, "plan: empty").unwrap();
    } else {
        writeln!(o, "plan: {} LUTs", r.plan.entries.len()).unwrap();
        for (e, why) in r.plan.entries.iter().zip(&r.plan.sources) {
            writeln!(
                o,
                "  {:<24} {} -> {} (coverage {}): {why}",
                e.cell,
                e.old_init.to_hex(),
                e.new_init.to_hex(),
                e.coverage.to_hex()
            )
            .unwrap();
        }
    }
    if let Some(eq) = &r.equivalence {
        for (label, e) in [("full", &eq.full), ("care-set", &eq.care_set)] {
            let s = serde_json::to_value(e.status).expect("status serializes");
            write!(o, "equivalence ({label}): {}", s.as_str().unwrap_or("")).unwrap();
            if let Some(v) = &e.vector {
                write!(o, ", differs on {}", v.differing.join(" ")).unwrap();
            }
            o.push('\n');
        }
    }
    if let Some(m) = &r.mitigation {
        let v = serde_json::to_value(m.verdict).expect("verdict serializes");
        writeln!(o, "mitigation: {}", v.as_str().unwrap_or("").to_uppercase()).unwrap();
        for w in &m.watch {
            let at = |x: Option<usize>| x.map_or("never".to_string(), |t| format!("at step {t}"));
            writeln!(
                o,
                "  {} = {}: original {}, patched {}",
                w.signal,
                w.active_value as u8,
                at(w.original_first),
                at(w.patched_first)
            )
            .unwrap();
        }
        writeln!(
            o,
            "  random run: {} cycles, seed {}, {} mismatching steps",
            m.random_vectors, m.random_seed, m.random_mismatches
        )
        .unwrap();
        for n in &m.notes {
            writeln!(o, "  note: {n}").unwrap();
        }
    }
    for n in &r.notes {
        writeln!(o, "note: {n}").unwrap();
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::gen_pattern_lock;
    use crate::netlist::{parse_netlist, PortRoles};
    use crate::pipeline::{run_pipeline, PipelineOptions};

    #[test]
    fn words_and_scalars() {
        let mut m = BTreeMap::new();
        for i in 0..8 {
            m.insert(SignalId::bit("state", i), 0xa5u8 >> i & 1 == 1);
        }
        m.insert(SignalId::scalar("Tj_Trig"), true);
        m.insert(SignalId::bit("x", 3), false);
        assert_eq!(format_assignment(&m), "Tj_Trig = 1, state = A5, x[3] = 0");
    }

    #[test]
    fn clean_design() {
        let n = parse_netlist(
            "module t(input a, input b, output y); LUT2 #(.INIT(4'h6)) g (.I0(a), .I1(b), .O(y)); endmodule",
            None,
        )
        .unwrap();
        let r = run_pipeline(&n, &PortRoles::default(), &PipelineOptions::new(1)).unwrap();
        let text = render_report(&r.report);
        assert!(text.contains("no specious signals or LUTs"));
        assert!(text.contains("plan: empty"));
    }

    #[test]
    fn lock_table_and_determinism() {
        let b = gen_pattern_lock(16, 0xbeef, 9).unwrap();
        let run = || render_report(&run_pipeline(&b.netlist, &PortRoles::default(), &PipelineOptions::new(2)).unwrap().report);
        let text = run();
        assert_eq!(text, run());
        assert!(text.contains("Step | Proof script"), "{text}");
        assert!(text.contains("sat -prove Tj_Trig_q 0"));
        assert!(text.contains("din = BEEF"));
        assert!(text.contains("mitigation: PASS"));
    }
}
