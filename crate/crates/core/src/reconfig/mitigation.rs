use serde::{Deserialize, Serialize};

use super::{ReconfigError, ReconfigPlan};
use crate::logic::LogicValue;
use crate::netlist::{Design, FlatKind, SignalId};
use crate::sim::{random_stimulus, replay, simulate, EventTrace, Trigger};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationOptions {
    /// Length of the random non-trigger run compared between the designs.
    pub vectors: usize,
    pub seed: u64,
    /// Fresh seeds tried when a random run happens to activate the original.
    pub max_reseeds: usize,
}

impl Default for MitigationOptions {
    fn default() -> Self {
        MitigationOptions {
            vectors: 1000,
            seed: 0,
            max_reseeds: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Activity of one trigger signal under the replayed trigger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatchReport {
    pub signal: SignalId,
    /// The value that means "trigger active".
    pub active_value: bool,
    /// First step the signal takes the active value, if ever.
    pub original_first: Option<usize>,
    pub patched_first: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationReport {
    pub verdict: Verdict,
    pub watch: Vec<WatchReport>,
    pub original_activated: bool,
    pub patched_activated: bool,
    /// Primary output bits that differ between the designs under the trigger.
    pub trigger_divergence: Vec<String>,
    pub random_vectors: usize,
    pub random_seed: u64,
    /// Steps of the random run where any primary output differs.
    pub random_mismatches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_mismatch: Option<(usize, String)>,
    pub notes: Vec<String>,
}

fn first_active(t: &EventTrace, id: &SignalId, v: bool) -> Option<usize> {
    let i = t.signal_index(id)?;
    let want = LogicValue::from_bool(v);
    t.waveform(i).iter().position(|&x| x == want)
}

/// First step at which a planned LUT sees an address that was uncovered
/// when the plan was made.
fn first_uncovered(design: &Design, t: &EventTrace, plan: &ReconfigPlan) -> Option<usize> {
    let mut first: Option<usize> = None;
    for e in &plan.entries {
        let Some(c) = design.cell(&e.cell) else { continue };
        let FlatKind::Lut { inputs, .. } = &design.cells[c].kind else { continue };
        let waves: Vec<Vec<LogicValue>> = inputs
            .iter()
            .map(|&i| {
                t.signal_index(&design.signals[i].id)
                    .map_or_else(|| vec![LogicValue::X; t.length], |j| t.waveform(j))
            })
            .collect();
        for step in 0..t.length {
            let mut addr = Some(0usize);
            for (b, w) in waves.iter().enumerate() {
                addr = match (addr, w[step].to_bool()) {
                    (Some(a), Some(v)) => Some(a | (v as usize) << b),
                    _ => None,
                };
            }
            if addr.is_some_and(|a| !e.coverage.bit(a)) {
                first = Some(first.map_or(step, |f| f.min(step)));
                break;
            }
        }
    }
    first
}

/// Output bits whose waveforms differ, with the first differing step.
fn output_diffs(design: &Design, a: &EventTrace, b: &EventTrace) -> Vec<(usize, String)> {
    let mut out = vec![];
    for s in design.output_bits() {
        let id = &design.signals[s].id;
        let (Some(i), Some(j)) = (a.signal_index(id), b.signal_index(id)) else {
            continue;
        };
        let (wa, wb) = (a.waveform(i), b.waveform(j));
        if let Some(t) = wa.iter().zip(&wb).position(|(x, y)| x != y) {
            out.push((t, id.to_string()));
        }
    }
    out
}

/// Replays `trigger` on both designs and watches each `(signal, active value)`
/// pair, then compares primary outputs on a random non-trigger run: one that
/// never activates a watched signal in the original and, with `care`, never
/// drives a planned LUT onto an address that was uncovered. Passes iff the
/// original activates, the patched design does not, and the random run shows
/// no output difference.
pub fn verify_mitigation(
    original: &Design,
    patched: &Design,
    trigger: &Trigger,
    watch: &[(SignalId, bool)],
    care: Option<&ReconfigPlan>,
    opts: &MitigationOptions,
) -> Result<MitigationReport, ReconfigError> {
    let to = replay(original, trigger)?;
    let tp = replay(patched, trigger)?;
    let watch_reports: Vec<WatchReport> = watch
        .iter()
        .map(|(s, v)| WatchReport {
            signal: s.clone(),
            active_value: *v,
            original_first: first_active(&to, s, *v),
            patched_first: first_active(&tp, s, *v),
        })
        .collect();
    let original_activated = watch_reports.iter().any(|w| w.original_first.is_some());
    let patched_activated = watch_reports.iter().any(|w| w.patched_first.is_some());
    let trigger_divergence = output_diffs(original, &to, &tp).into_iter().map(|(_, s)| s).collect();

    let mut notes = vec![];
    let mut seed = opts.seed;
    let mut run = None;
    for _ in 0..=opts.max_reseeds {
        let stim = random_stimulus(original, seed, opts.vectors);
        let ro = simulate(original, &stim, opts.vectors)?;
        if watch.iter().any(|(s, v)| first_active(&ro, s, *v).is_some()) {
            notes.push(format!("random run with seed {seed} activated the original; reseeding"));
            seed = seed.wrapping_add(1);
            continue;
        }
        if let Some(step) = care.and_then(|p| first_uncovered(original, &ro, p)) {
            notes.push(format!(
                "random run with seed {seed} reached an uncovered address at step {step}; reseeding"
            ));
            seed = seed.wrapping_add(1);
            continue;
        }
        let rp = simulate(patched, &stim, opts.vectors)?;
        run = Some((ro, rp));
        break;
    }

    let (random_mismatches, first_mismatch) = match &run {
        Some((ro, rp)) => {
            let diffs = output_diffs(original, ro, rp);
            let mut steps = std::collections::BTreeSet::new();
            for s in original.output_bits() {
                let id = &original.signals[s].id;
                if let (Some(i), Some(j)) = (ro.signal_index(id), rp.signal_index(id)) {
                    let (wa, wb) = (ro.waveform(i), rp.waveform(j));
                    steps.extend(wa.iter().zip(&wb).enumerate().filter(|(_, (x, y))| x != y).map(|(t, _)| t));
                }
            }
            (steps.len(), diffs.into_iter().min())
        }
        None => {
            notes.push("no random run avoided the trigger".to_string());
            (0, None)
        }
    };

    let verdict = if !original_activated {
        notes.push("original did not activate".to_string());
        Verdict::Inconclusive
    } else if run.is_none() {
        Verdict::Inconclusive
    } else if patched_activated || random_mismatches > 0 {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(MitigationReport {
        verdict,
        watch: watch_reports,
        original_activated,
        patched_activated,
        trigger_divergence,
        random_vectors: opts.vectors,
        random_seed: seed,
        random_mismatches,
        first_mismatch,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use crate::reconfig::{apply_plan, PlanEntry, ReconfigPlan};
    use crate::logic::TruthTable;

    // trigger t = a & b & c registered into tq, payload y = d ^ tq
    const LOCK: &str = "module l(input clk, input rst, input a, input b, input c, input d, output y);
        wire t, tq;
        LUT3 #(.INIT(8'h80)) g (.I0(a), .I1(b), .I2(c), .O(t));
        DFF r (.C(clk), .D(t), .R(rst), .Q(tq));
        LUT2 #(.INIT(4'h6)) p (.I0(d), .I1(tq), .O(y));
        endmodule";

    fn patched() -> (Design, Design) {
        let n = parse_netlist(LOCK, None).unwrap();
        let plan = ReconfigPlan {
            entries: vec![PlanEntry::new("g", TruthTable::new(3, 0x80).unwrap(), TruthTable::new(3, 0x7f).unwrap()).unwrap()],
            sources: vec![],
        };
        let p = apply_plan(&n, &plan).unwrap();
        (Design::new(&n).unwrap(), Design::new(&p).unwrap())
    }

    #[test]
    fn freezes_trigger() {
        let (o, p) = patched();
        let mut trig = Trigger::default();
        trig.set(0, SignalId::scalar("rst"), true);
        for s in ["a", "b", "c"] {
            trig.set(1, SignalId::scalar(s), true);
        }
        trig.set(2, SignalId::scalar("d"), false);
        let watch = [(SignalId::scalar("tq"), true)];
        // a full random run hits a&b&c often, so use short runs and reseed
        let opts = MitigationOptions {
            vectors: 3,
            ..Default::default()
        };
        let r = verify_mitigation(&o, &p, &trig, &watch, None, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert_eq!(r.watch[0].original_first, Some(2));
        assert_eq!(r.watch[0].patched_first, None);
        assert_eq!(r.trigger_divergence, vec!["y"]);
    }

    #[test]
    fn vacuous_trigger() {
        let (o, p) = patched();
        let mut trig = Trigger::default();
        trig.set(0, SignalId::scalar("rst"), true);
        trig.set(1, SignalId::scalar("a"), true);
        let r = verify_mitigation(&o, &p, &trig, &[(SignalId::scalar("tq"), true)], None, &MitigationOptions::default())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.notes.iter().any(|n| n == "original did not activate"));
    }
}
