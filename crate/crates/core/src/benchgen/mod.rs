//! Synthetic Trojan benchmarks with known triggers: an input-pattern lock, a
//! cycle-counter lock and a pair of registers that can never both be 1.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{parse_netlist, Netlist, SignalId};
use crate::sim::Trigger;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("width must be between 1 and {max}, got {got}")]
    Width { got: usize, max: usize },
    #[error("pattern {pattern:#x} does not fit in {width} bits")]
    PatternTooWide { pattern: u64, width: usize },
    #[error("threshold {threshold} is not below 2^{bits}")]
    ThresholdTooLarge { threshold: u64, bits: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    PatternLock,
    CounterLock,
    SdcPair,
}

/// Parameters of one benchmark. `param` is the pattern, the counter threshold
/// or unused, depending on the archetype.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub archetype: Archetype,
    pub width: usize,
    #[serde(default)]
    pub param: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub archetype: Archetype,
    /// Inputs that activate the Trojan, starting from reset. None for the
    /// SDC pair, which has no reachable trigger.
    pub trigger: Option<Trigger>,
    /// Signals that stay at `inactive_value` until the trigger fires.
    pub trigger_signals: Vec<SignalId>,
    pub inactive_value: bool,
    pub payload_cells: Vec<String>,
    pub expected_low_coverage_cells: Vec<String>,
    /// Pattern or threshold that was planted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Bench {
    pub spec: BenchSpec,
    pub text: String,
    pub netlist: Netlist,
    pub truth: GroundTruth,
}

pub const MAX_PATTERN_WIDTH: usize = 32;
pub const MAX_COUNTER_BITS: usize = 12;
/// Datapath width of the counter-lock and SDC benchmarks.
pub const DATA_WIDTH: usize = 8;

pub fn generate(spec: &BenchSpec) -> Result<Bench, BenchError> {
    match spec.archetype {
        Archetype::PatternLock => gen_pattern_lock(spec.width, spec.param, spec.seed),
        Archetype::CounterLock => gen_counter_lock(spec.width, spec.param, spec.seed),
        Archetype::SdcPair => gen_sdc_pair(spec.seed),
    }
}

/// Accumulates cell instances as Verilog text.
struct Text {
    body: String,
    wires: Vec<String>,
}

impl Text {
    fn new() -> Self {
        Text {
            body: String::new(),
            wires: vec![],
        }
    }

    fn wire(&mut self, name: &str) -> String {
        self.wires.push(name.to_string());
        name.to_string()
    }

    fn lut(&mut self, cell: &str, init: u64, inputs: &[&str], out: &str) {
        let k = inputs.len();
        let digits = (1usize << k).div_ceil(4);
        let pins: Vec<String> = inputs.iter().enumerate().map(|(i, s)| format!(".I{i}({s})")).collect();
        writeln!(
            self.body,
            "  LUT{k} #(.INIT({}'h{init:0digits$x})) {cell} ({}, .O({out}));",
            1 << k,
            pins.join(", ")
        )
        .unwrap();
    }

    fn dff(&mut self, cell: &str, d: &str, q: &str) {
        writeln!(self.body, "  DFF {cell} (.C(clk), .D({d}), .R(rst), .Q({q}));").unwrap();
    }

    fn finish(self, module: &str, ports: &[String]) -> String {
        let mut s = format!("module {module} (\n  {}\n);\n", ports.join(",\n  "));
        for w in &self.wires {
            writeln!(s, "  wire {w};").unwrap();
        }
        s.push_str(&self.body);
        s.push_str("endmodule\n");
        s
    }
}

/// A random 4-input function with exactly eight ones, so the output is
/// balanced under uniform inputs.
fn balanced_init(rng: &mut ChaCha8Rng) -> u64 {
    let mut addrs: Vec<u64> = (0..16).collect();
    addrs.shuffle(rng);
    addrs[..8].iter().fold(0, |acc, a| acc | 1 << a)
}

/// Equality of `bits` against `value` as LUT leaves over chunks of four and
/// an AND tree of LUT4s; returns the root net, which is named `root`.
fn equality_tree(t: &mut Text, prefix: &str, bits: &[String], value: u64, root: &str) -> Vec<String> {
    let mut cells = vec![];
    let mut level: Vec<String> = vec![];
    let chunks: Vec<&[String]> = bits.chunks(4).collect();
    for (i, chunk) in chunks.iter().enumerate() {
        let nib = (value >> (4 * i)) & ((1 << chunk.len()) - 1);
        let net = if chunks.len() == 1 {
            root.to_string()
        } else {
            t.wire(&format!("{prefix}_eq{i}"))
        };
        let cell = format!("u_{prefix}_eq{i}");
        let ins: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
        t.lut(&cell, 1 << nib, &ins, &net);
        cells.push(cell);
        level.push(net);
    }
    let mut depth = 0;
    while level.len() > 1 {
        let groups: Vec<Vec<String>> = level.chunks(4).map(|c| c.to_vec()).collect();
        let last = groups.len() == 1;
        level = vec![];
        for (i, g) in groups.iter().enumerate() {
            let net = if last {
                root.to_string()
            } else {
                t.wire(&format!("{prefix}_and{depth}_{i}"))
            };
            let cell = if last {
                format!("u_{prefix}_root")
            } else {
                format!("u_{prefix}_and{depth}_{i}")
            };
            let ins: Vec<&str> = g.iter().map(|s| s.as_str()).collect();
            t.lut(&cell, 1 << ((1 << g.len()) - 1), &ins, &net);
            cells.push(cell);
            level.push(net);
        }
        depth += 1;
    }
    cells
}

fn bus(name: &str, width: usize) -> Vec<String> {
    (0..width).map(|i| format!("{name}[{i}]")).collect()
}

fn build(spec: BenchSpec, module: &str, text: Text, ports: &[String], truth: GroundTruth) -> Bench {
    let text = text.finish(module, ports);
    let netlist = parse_netlist(&text, None).expect("generated netlists are valid");
    Bench {
        spec,
        text,
        netlist,
        truth,
    }
}

/// Payload: `out_i = res_i ^ (trig & key_i)`. Returns the payload cells
/// (key bit 1) and all cells reading the trigger.
fn xor_payload(t: &mut Text, res: &[String], trig: &str, key: u64) -> (Vec<String>, Vec<String>) {
    let mut payload = vec![];
    let mut readers = vec![];
    for (i, r) in res.iter().enumerate() {
        let cell = format!("u_out{i}");
        let on = key >> i & 1 == 1;
        t.lut(&cell, if on { 0x6 } else { 0xa }, &[r, trig], &format!("dout[{i}]"));
        if on {
            payload.push(cell.clone());
        }
        readers.push(cell);
    }
    (payload, readers)
}

/// Non-zero secret drawn from the seed.
fn secret(rng: &mut ChaCha8Rng, width: usize) -> u64 {
    let mask = if width >= 64 { u64::MAX } else { (1 << width) - 1 };
    loop {
        let k = rng.gen::<u64>() & mask;
        if k != 0 {
            return k;
        }
    }
}

/// Registered datapath `res_i = DFF(f_i(4 random inputs))`.
fn benign_datapath(t: &mut Text, rng: &mut ChaCha8Rng, inputs: &[String], width: usize) -> Vec<String> {
    let mut out = vec![];
    for i in 0..width {
        let mut picks: Vec<&String> = inputs.iter().collect();
        picks.shuffle(rng);
        let ins: Vec<&str> = picks.iter().take(4).map(|s| s.as_str()).collect();
        let n = t.wire(&format!("res_n{i}"));
        let q = t.wire(&format!("res{i}"));
        t.lut(&format!("u_res{i}"), balanced_init(rng) & ((1 << (1 << ins.len())) - 1), &ins, &n);
        t.dff(&format!("u_res{i}_r"), &n, &q);
        out.push(q);
    }
    out
}

/// `din == pattern` raises `trig_cmp`, registered into `Tj_Trig` and again
/// into `Tj_Trig_q`, which XORs a secret onto `dout`.
pub fn gen_pattern_lock(width: usize, pattern: u64, seed: u64) -> Result<Bench, BenchError> {
    if width == 0 || width > MAX_PATTERN_WIDTH {
        return Err(BenchError::Width {
            got: width,
            max: MAX_PATTERN_WIDTH,
        });
    }
    if pattern >> width != 0 {
        return Err(BenchError::PatternTooWide { pattern, width });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Text::new();
    let din = bus("din", width);
    let cmp = t.wire("trig_cmp");
    let trig = t.wire("Tj_Trig");
    let trig_q = t.wire("Tj_Trig_q");
    let cmp_cells = equality_tree(&mut t, "cmp", &din, pattern, &cmp);
    t.dff("u_trig", &cmp, &trig);
    t.dff("u_trig_q", &trig, &trig_q);
    let res = benign_datapath(&mut t, &mut rng, &din, width);
    let (payload, readers) = xor_payload(&mut t, &res, &trig_q, secret(&mut rng, width));

    let mut trigger = Trigger::default();
    trigger.set(0, SignalId::scalar("rst"), true);
    trigger.set_word(1, "din", width, pattern);
    trigger.set_word(2, "din", width, 0);
    trigger.set_word(3, "din", width, 0);
    trigger.fires_at = Some(2);
    let mut low = vec![cmp_cells.last().cloned().expect("tree has a root")];
    low.extend(readers);
    let truth = GroundTruth {
        archetype: Archetype::PatternLock,
        trigger: Some(trigger),
        trigger_signals: ["trig_cmp", "Tj_Trig", "Tj_Trig_q"].map(SignalId::scalar).to_vec(),
        inactive_value: false,
        payload_cells: payload,
        expected_low_coverage_cells: low,
        planted: Some(pattern),
    };
    let ports = vec![
        "input clk".into(),
        "input rst".into(),
        format!("input [{}:0] din", width - 1),
        format!("output [{}:0] dout", width - 1),
    ];
    Ok(build(
        BenchSpec {
            archetype: Archetype::PatternLock,
            width,
            param: pattern,
            seed,
        },
        "pattern_lock",
        t,
        &ports,
        truth,
    ))
}

/// A free-running `bits`-bit counter; `Tj_Trig` is high while it equals
/// `threshold` and XORs a secret onto `dout`.
pub fn gen_counter_lock(bits: usize, threshold: u64, seed: u64) -> Result<Bench, BenchError> {
    if bits == 0 || bits > MAX_COUNTER_BITS {
        return Err(BenchError::Width {
            got: bits,
            max: MAX_COUNTER_BITS,
        });
    }
    if threshold >> bits != 0 {
        return Err(BenchError::ThresholdTooLarge { threshold, bits });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Text::new();
    let cnt: Vec<String> = (0..bits).map(|i| t.wire(&format!("cnt{i}"))).collect();
    // ripple increment: carry_i = cnt_0 & .. & cnt_{i-1}
    let mut carry: Option<String> = None;
    for i in 0..bits {
        let n = t.wire(&format!("cnt_n{i}"));
        match &carry {
            None => t.lut(&format!("u_inc{i}"), 0x1, &[&cnt[i]], &n),
            Some(c) => t.lut(&format!("u_inc{i}"), 0x6, &[&cnt[i], c], &n),
        }
        t.dff(&format!("u_cnt{i}"), &n, &cnt[i]);
        if i + 1 < bits {
            let next = match &carry {
                None => cnt[0].clone(),
                Some(c) => {
                    let w = t.wire(&format!("carry{}", i + 1));
                    t.lut(&format!("u_carry{}", i + 1), 0x8, &[&cnt[i], c], &w);
                    w
                }
            };
            carry = Some(next);
        }
    }
    let trig = t.wire("Tj_Trig");
    let cmp_cells = equality_tree(&mut t, "cmp", &cnt, threshold, &trig);
    let din = bus("din", DATA_WIDTH);
    let res = benign_datapath(&mut t, &mut rng, &din, DATA_WIDTH);
    let (payload, readers) = xor_payload(&mut t, &res, &trig, secret(&mut rng, DATA_WIDTH));

    let mut trigger = Trigger::default();
    for f in 0..=threshold as usize {
        trigger.set(f, SignalId::scalar("rst"), f == 0);
    }
    // the counter is 0 in the cycle that follows reset
    trigger.set(threshold as usize + 1, SignalId::scalar("rst"), false);
    trigger.fires_at = Some(threshold as usize + 1);
    let mut low = vec![cmp_cells.last().cloned().expect("tree has a root")];
    low.extend(readers);
    let truth = GroundTruth {
        archetype: Archetype::CounterLock,
        trigger: Some(trigger),
        trigger_signals: vec![SignalId::scalar("Tj_Trig")],
        inactive_value: false,
        payload_cells: payload,
        expected_low_coverage_cells: low,
        planted: Some(threshold),
    };
    let ports = vec![
        "input clk".into(),
        "input rst".into(),
        format!("input [{}:0] din", DATA_WIDTH - 1),
        format!("output [{}:0] dout", DATA_WIDTH - 1),
    ];
    Ok(build(
        BenchSpec {
            archetype: Archetype::CounterLock,
            width: bits,
            param: threshold,
            seed,
        },
        "counter_lock",
        t,
        &ports,
        truth,
    ))
}

/// Width of the `state` input that feeds the don't-care pair.
pub const SDC_STATE_WIDTH: usize = 12;

/// Two registers `dc1`, `dc2` that each toggle freely but are never 1 in the
/// same cycle: `dc1_a = h & v1`, `dc2_a = !h & v2` over disjoint nibbles of
/// `state`, each registered twice. Payload LUT4s read
/// `(key_i, res_i, dc2, dc1)` with INIT 16'haccc, so `dout_i = key_i` only
/// when both are 1.
pub fn gen_sdc_pair(seed: u64) -> Result<Bench, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Text::new();
    let state = bus("state", SDC_STATE_WIDTH);
    let mut f = |t: &mut Text, name: &str, bits: &[String]| {
        let w = t.wire(name);
        let ins: Vec<&str> = bits.iter().map(|s| s.as_str()).collect();
        t.lut(&format!("u_{name}"), balanced_init(&mut rng), &ins, &w);
        w
    };
    let h = f(&mut t, "h", &state[0..4]);
    let v1 = f(&mut t, "v1", &state[4..8]);
    let v2 = f(&mut t, "v2", &state[8..12]);
    let n1 = t.wire("dc1_n");
    let n2 = t.wire("dc2_n");
    t.lut("u_dc1_n", 0x8, &[&h, &v1], &n1);
    t.lut("u_dc2_n", 0x4, &[&h, &v2], &n2);
    let a1 = t.wire("dc1_a");
    let a2 = t.wire("dc2_a");
    t.dff("u_dc1_a", &n1, &a1);
    t.dff("u_dc2_a", &n2, &a2);
    let dc1 = t.wire("dc1");
    let dc2 = t.wire("dc2");
    t.dff("u_dc1", &a1, &dc1);
    t.dff("u_dc2", &a2, &dc2);

    let data = bus("data", DATA_WIDTH);
    let key = bus("key", DATA_WIDTH);
    let res = benign_datapath(&mut t, &mut rng, &data, DATA_WIDTH);
    let mut payload = vec![];
    for i in 0..DATA_WIDTH {
        let cell = format!("u_out{i}");
        t.lut(&cell, 0xaccc, &[&key[i], &res[i], &dc2, &dc1], &format!("dout[{i}]"));
        payload.push(cell);
    }
    let truth = GroundTruth {
        archetype: Archetype::SdcPair,
        trigger: None,
        trigger_signals: vec![],
        inactive_value: false,
        expected_low_coverage_cells: payload.clone(),
        payload_cells: payload,
        planted: None,
    };
    let ports = vec![
        "input clk".into(),
        "input rst".into(),
        format!("input [{}:0] state", SDC_STATE_WIDTH - 1),
        format!("input [{}:0] data", DATA_WIDTH - 1),
        format!("input [{}:0] key", DATA_WIDTH - 1),
        format!("output [{}:0] dout", DATA_WIDTH - 1),
    ];
    Ok(build(
        BenchSpec {
            archetype: Archetype::SdcPair,
            width: DATA_WIDTH,
            param: 0,
            seed,
        },
        "sdc_pair",
        t,
        &ports,
        truth,
    ))
}
