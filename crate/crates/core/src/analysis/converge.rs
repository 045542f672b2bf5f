use serde::{Deserialize, Serialize};

use super::{analyze, AnalysisError, AnalysisResult};
use crate::netlist::{Design, SignalId};
use crate::sim::{random_stimulus, trace::Recorder, Simulator};

/// Trace lengths tried by default, roughly 1-2-5 per decade.
pub const DEFAULT_SCHEDULE: &[usize] = &[10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergeOptions {
    pub seed: u64,
    pub schedule: Vec<usize>,
    /// Consecutive identical rounds needed to call the result converged.
    pub stable_rounds: usize,
    /// Stop at the first converged round instead of running the whole schedule.
    pub early_stop: bool,
}

impl ConvergeOptions {
    pub fn new(seed: u64) -> Self {
        ConvergeOptions {
            seed,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            stable_rounds: 3,
            early_stop: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergeRound {
    pub length: usize,
    pub low_switch: usize,
    pub low_coverage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub seed: u64,
    pub schedule: Vec<usize>,
    pub stable_rounds: usize,
    pub converged: bool,
    pub history: Vec<ConvergeRound>,
    pub result: AnalysisResult,
}

/// What has to stay fixed between rounds: the members of S and L. Covers of
/// members may still grow.
fn fingerprint(r: &AnalysisResult) -> (Vec<SignalId>, Vec<String>) {
    (
        r.low_switch.iter().map(|l| l.signal.clone()).collect(),
        r.low_coverage.iter().map(|l| l.cell.clone()).collect(),
    )
}

/// Analyzes growing prefixes of one random stimulus until S and L stop changing.
pub fn converge(design: &Design, opts: &ConvergeOptions) -> Result<ConvergenceReport, AnalysisError> {
    let Some(&max) = opts.schedule.last() else {
        return Err(AnalysisError::EmptySchedule);
    };
    if opts.schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::ScheduleNotIncreasing);
    }
    if opts.stable_rounds == 0 {
        return Err(AnalysisError::ZeroStableRounds);
    }
    let stim = random_stimulus(design, opts.seed, max);
    let inputs = stim.resolve(design, max)?;
    let mut sim = Simulator::new(design);
    let mut rec = Recorder::new(design);
    let mut frame = Vec::with_capacity(inputs.len());

    let mut history = vec![];
    let mut prints = vec![];
    let mut last = None;
    let mut converged = false;
    for &len in &opts.schedule {
        while sim.time() < len {
            let t = sim.time();
            frame.clear();
            frame.extend(inputs.iter().map(|(s, v)| (*s, v[t])));
            sim.step(&frame)?;
            rec.record(&sim);
        }
        let r = analyze(design, rec.trace())?;
        history.push(ConvergeRound {
            length: len,
            low_switch: r.low_switch.len(),
            low_coverage: r.low_coverage.len(),
        });
        prints.push(fingerprint(&r));
        last = Some(r);
        let m = opts.stable_rounds;
        converged = prints.len() >= m && prints[prints.len() - m..].windows(2).all(|w| w[0] == w[1]);
        if converged && opts.early_stop {
            break;
        }
    }
    Ok(ConvergenceReport {
        seed: opts.seed,
        schedule: opts.schedule.clone(),
        stable_rounds: opts.stable_rounds,
        converged,
        history,
        result: last.expect("schedule is non-empty"),
    })
}
