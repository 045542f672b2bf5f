use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lutscope::analysis::{
    analyze, converge, AnalysisResult, ConvergeOptions, ConvergenceReport, LowCoverage, DEFAULT_SCHEDULE,
};
use lutscope::benchgen::{generate, Archetype, BenchSpec};
use lutscope::netlist::{emit_netlist, parse_netlist, Design, Netlist, PortRoles, SignalId};
use lutscope::logic::TruthTable;
use lutscope::pipeline::{prove_property, run_pipeline, trigger_free_coverage, PipelineOptions, PropertyProof};
use lutscope::properties::{emit_blif, emit_sva_all, extract_all, Property};
use lutscope::prove::ProofStatus;
use lutscope::reconfig::{apply_plan, verify_mitigation, MitigationOptions, ReconfigPlan, Verdict};
use lutscope::report::{proof_table, render_report};
use lutscope::sim::{export_vcd, import_vcd, random_stimulus, simulate, Trigger};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_TROJAN: u8 = 3;
const EXIT_UNKNOWN: u8 = 4;

#[derive(Parser)]
#[command(name = "lutscope", version, about = "Trojan detection and disarming for LUT-mapped netlists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random simulation, written as VCD
    Simulate(SimulateArgs),
    /// Switching and coverage analysis of a VCD trace
    Analyze(AnalyzeArgs),
    /// Analysis over growing random traces until the findings settle
    Converge(ConvergeArgs),
    /// Properties (JSON, SVA, BLIF) from an analysis
    Extract(ExtractArgs),
    /// Proves extracted properties and recovers triggers
    Prove(ProveArgs),
    /// Builds a reconfiguration plan and the patched netlist
    Patch(PatchArgs),
    /// Checks that a patch disarms a trigger without changing normal behavior
    Verify(VerifyArgs),
    /// Generates a benchmark netlist with ground truth
    Bench(BenchArgs),
    /// Every stage end to end
    Pipeline(PipelineConfig),
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Top module, when the file has more than one root
    #[arg(long)]
    top: Option<String>,
    /// Port-role sidecar (JSON)
    #[arg(long)]
    roles: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Trace lengths tried in order
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SCHEDULE.to_vec())]
    schedule: Vec<usize>,
    /// Identical consecutive rounds needed to stop
    #[arg(long = "stable-rounds", default_value_t = 3)]
    stable_rounds: usize,
    /// Run every schedule length even after convergence
    #[arg(long)]
    full_schedule: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 1000)]
    cycles: usize,
    #[arg(long, env = "LUTSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    /// Output VCD; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long)]
    vcd: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    design: DesignArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, env = "LUTSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Output of `analyze` or `converge`
    #[arg(long)]
    analysis: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProveArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// properties.json from `extract`
    #[arg(long)]
    properties: PathBuf,
    #[arg(long = "bmc-depth", default_value_t = 32)]
    bmc_depth: usize,
    /// Conflicts per SAT call; 0 means unlimited
    #[arg(long, default_value_t = 200_000)]
    budget: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PatchArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Output of `analyze` or `converge`
    #[arg(long)]
    analysis: PathBuf,
    /// LUTs to patch; every low-coverage LUT when omitted
    #[arg(long = "cell")]
    cells: Vec<String>,
    /// Known trigger signal and active value, e.g. Tj_Trig_q=1. With any
    /// given, covers are refined on a fresh random run first, skipping the
    /// steps where one of them is active.
    #[arg(long = "watch")]
    watch: Vec<String>,
    #[arg(long = "refine-cycles", default_value_t = 20_000)]
    refine_cycles: usize,
    #[arg(long, env = "LUTSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    patched: PathBuf,
    #[arg(long)]
    top: Option<String>,
    #[arg(long)]
    roles: Option<PathBuf>,
    /// Trigger JSON: a trigger, a trigger artifact or a benchmark ground truth
    #[arg(long)]
    trigger: PathBuf,
    /// Trigger signal and its active value, e.g. Tj_Trig_q=1
    #[arg(long = "watch", required = true)]
    watch: Vec<String>,
    /// plan.json from `patch`; restricts the random run to covered addresses
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    vectors: usize,
    #[arg(long, env = "LUTSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchetypeArg {
    PatternLock,
    CounterLock,
    SdcPair,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    archetype: ArchetypeArg,
    /// Pattern or counter width
    #[arg(long, default_value_t = 16)]
    width: usize,
    /// Pattern or threshold; decimal or 0x-prefixed hex
    #[arg(long, value_parser = parse_u64, default_value = "0")]
    param: u64,
    #[arg(long, env = "LUTSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineConfig {
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, env = "LUTSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Conflicts per SAT call; 0 means unlimited
    #[arg(long, default_value_t = 200_000)]
    budget: u64,
    #[arg(long = "bmc-depth", default_value_t = 32)]
    bmc_depth: usize,
    /// Patch every low-coverage LUT, not just the trigger generators
    #[arg(long)]
    all_low_coverage: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("'{s}': {e}"))
}

struct Failure {
    code: u8,
    message: String,
}

fn input_err(e: impl Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn usage_err(e: impl Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    }
}

type Res<T> = Result<T, Failure>;

/// Every JSON artifact names the inputs it was made from by content hash.
#[derive(Serialize, Deserialize)]
struct Artifact<T> {
    kind: String,
    inputs: BTreeMap<String, String>,
    data: T,
}

fn sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| input_err(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifacts serialize") + "\n"
}

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_artifact<T: DeserializeOwned>(path: &Path, kinds: &[&str]) -> Res<Artifact<T>> {
    let text = read(path)?;
    let a: Artifact<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    if !kinds.contains(&a.kind.as_str()) {
        return Err(input_err(format!(
            "{}: expected a {} artifact, found '{}'",
            path.display(),
            kinds.join(" or "),
            a.kind
        )));
    }
    let data = serde_json::from_value(a.data).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Ok(Artifact {
        kind: a.kind,
        inputs: a.inputs,
        data,
    })
}

/// Rejects an artifact that was produced from a different file.
fn check_link(a: &Artifact<impl Sized>, what: &str, role: &str, hash: &str) -> Res<()> {
    match a.inputs.get(role) {
        Some(h) if h != hash => Err(input_err(format!(
            "stale {what}: it was produced from a different {role} (sha256 {h}, given {hash})"
        ))),
        _ => Ok(()),
    }
}

struct Loaded {
    netlist: Netlist,
    design: Design,
    roles: PortRoles,
    hashes: BTreeMap<String, String>,
}

fn load_design(path: &Path, top: Option<&str>, roles: Option<&Path>) -> Res<Loaded> {
    let text = read(path)?;
    let netlist = parse_netlist(&text, top).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let mut hashes = BTreeMap::from([("netlist".to_string(), sha256(text.as_bytes()))]);
    let roles = match roles {
        Some(r) => {
            let t = read(r)?;
            hashes.insert("roles".to_string(), sha256(t.as_bytes()));
            serde_json::from_str(&t).map_err(|e| input_err(format!("{}: {e}", r.display())))?
        }
        None => PortRoles::default(),
    };
    let design = Design::with_roles(&netlist, &roles).map_err(input_err)?;
    Ok(Loaded {
        netlist,
        design,
        roles,
        hashes,
    })
}

impl DesignArgs {
    fn load(&self) -> Res<Loaded> {
        load_design(&self.netlist, self.top.as_deref(), self.roles.as_deref())
    }
}

impl ScheduleArgs {
    fn options(&self, seed: u64) -> ConvergeOptions {
        ConvergeOptions {
            seed,
            schedule: self.schedule.clone(),
            stable_rounds: self.stable_rounds,
            early_stop: !self.full_schedule,
        }
    }
}

fn budget(b: u64) -> Option<u64> {
    (b > 0).then_some(b)
}

/// Analysis result from either an `analyze` or a `converge` artifact,
/// checked against the netlist.
fn load_analysis(path: &Path, l: &Loaded) -> Res<(AnalysisResult, String)> {
    let text = read(path)?;
    let hash = sha256(text.as_bytes());
    let a: Artifact<serde_json::Value> = load_artifact(path, &["analysis", "convergence"])?;
    check_link(&a, "analysis", "netlist", &l.hashes["netlist"])?;
    let result = if a.kind == "convergence" {
        let c: ConvergenceReport = serde_json::from_value(a.data).map_err(input_err)?;
        c.result
    } else {
        serde_json::from_value(a.data).map_err(input_err)?
    };
    Ok((result, hash))
}

fn cmd_simulate(a: SimulateArgs) -> Res<u8> {
    let l = a.design.load()?;
    let stim = random_stimulus(&l.design, a.seed, a.cycles);
    let trace = simulate(&l.design, &stim, a.cycles).map_err(input_err)?;
    emit(a.out.as_deref(), &export_vcd(&trace))?;
    Ok(0)
}

fn cmd_analyze(a: AnalyzeArgs) -> Res<u8> {
    let l = a.design.load()?;
    let vcd = read(&a.vcd)?;
    let trace = import_vcd(&vcd, &l.design).map_err(|e| input_err(format!("{}: {e}", a.vcd.display())))?;
    let result = analyze(&l.design, &trace).map_err(input_err)?;
    let mut inputs = l.hashes.clone();
    inputs.insert("vcd".into(), sha256(vcd.as_bytes()));
    emit(
        a.out.as_deref(),
        &json(&Artifact {
            kind: "analysis".into(),
            inputs,
            data: result,
        }),
    )?;
    Ok(0)
}

fn cmd_converge(a: ConvergeArgs) -> Res<u8> {
    let l = a.design.load()?;
    let report = converge(&l.design, &a.schedule.options(a.seed)).map_err(usage_err)?;
    let converged = report.converged;
    emit(
        a.out.as_deref(),
        &json(&Artifact {
            kind: "convergence".into(),
            inputs: l.hashes,
            data: report,
        }),
    )?;
    if !converged {
        eprintln!("warning: findings did not settle within the schedule");
    }
    Ok(0)
}

fn cmd_extract(a: ExtractArgs) -> Res<u8> {
    let l = a.design.load()?;
    let (result, hash) = load_analysis(&a.analysis, &l)?;
    let props = extract_all(&l.design, &result);
    let mut inputs = l.hashes.clone();
    inputs.insert("analysis".into(), hash);
    write(
        &a.out.join("properties.json"),
        &json(&Artifact {
            kind: "properties".into(),
            inputs,
            data: &props,
        }),
    )?;
    write(&a.out.join("properties.sva"), &emit_sva_all(&props))?;
    let mut blif = String::new();
    for c in &result.low_coverage {
        blif += &emit_blif(&c.cell, &c.cover).map_err(input_err)?;
    }
    write(&a.out.join("coverage.blif"), &blif)?;
    println!("{} properties written to {}", props.len(), a.out.display());
    Ok(0)
}

fn cmd_prove(a: ProveArgs) -> Res<u8> {
    let l = a.design.load()?;
    let text = read(&a.properties)?;
    let art: Artifact<Vec<Property>> = load_artifact(&a.properties, &["properties"])?;
    check_link(&art, "property file", "netlist", &l.hashes["netlist"])?;
    let mut opts = PipelineOptions::new(0);
    opts.bmc_depth = a.bmc_depth;
    opts.prove.conflict_budget = budget(a.budget);
    let proofs = art
        .data
        .iter()
        .map(|p| prove_property(&l.design, p, &opts))
        .collect::<Result<Vec<PropertyProof>, _>>()
        .map_err(input_err)?;
    let mut inputs = l.hashes.clone();
    inputs.insert("properties".into(), sha256(text.as_bytes()));
    let proofs_json = json(&Artifact {
        kind: "proofs".into(),
        inputs,
        data: &proofs,
    });
    let proofs_hash = sha256(proofs_json.as_bytes());
    write(&a.out.join("proofs.json"), &proofs_json)?;
    let mut transcript = String::new();
    for (i, p) in proofs.iter().enumerate() {
        let status = serde_json::to_value(p.status).expect("status serializes");
        transcript += &format!("{}: {}\n{}\n", p.property.name(), status.as_str().unwrap_or(""), p.sva);
        transcript += &proof_table(&p.chain.steps);
        transcript.push('\n');
        if let Some(t) = p.trigger.as_ref().filter(|_| p.confirmed) {
            let inputs = BTreeMap::from([
                ("netlist".to_string(), l.hashes["netlist"].clone()),
                ("proofs".to_string(), proofs_hash.clone()),
            ]);
            write(
                &a.out.join(format!("trigger-{i}.json")),
                &json(&Artifact {
                    kind: "trigger".into(),
                    inputs,
                    data: t,
                }),
            )?;
        }
    }
    write(&a.out.join("transcript.txt"), &transcript)?;
    print!("{transcript}");
    Ok(if proofs.iter().any(|p| p.status == ProofStatus::Unknown) {
        EXIT_UNKNOWN
    } else {
        0
    })
}

fn cmd_patch(a: PatchArgs) -> Res<u8> {
    let l = a.design.load()?;
    let (result, hash) = load_analysis(&a.analysis, &l)?;
    let mut chosen: Vec<LowCoverage> = if a.cells.is_empty() {
        result.low_coverage.clone()
    } else {
        a.cells
            .iter()
            .map(|c| {
                result
                    .low_coverage_cell(c)
                    .cloned()
                    .ok_or_else(|| input_err(format!("'{c}' is not a low-coverage LUT in the analysis")))
            })
            .collect::<Res<_>>()?
    };
    let watch = a.watch.iter().map(|w| parse_watch(w)).collect::<Res<Vec<_>>>()?;
    if !watch.is_empty() && a.refine_cycles > 0 {
        let cells: Vec<_> = chosen.iter().map(|c| l.design.cell(&c.cell).expect("analysis cells exist")).collect();
        let extra = trigger_free_coverage(&l.design, &cells, &watch, a.seed, a.refine_cycles).map_err(input_err)?;
        for (c, e) in chosen.iter_mut().zip(extra) {
            c.cover = TruthTable::new(c.cover.inputs(), c.cover.bits() | e.bits()).expect("same width");
        }
        chosen.retain(|c| {
            if c.cover.is_full() {
                eprintln!("{}: fully covered after refinement, left unchanged", c.cell);
            }
            !c.cover.is_full()
        });
    }
    let plan = ReconfigPlan::from_low_coverage(&chosen);
    let patched = apply_plan(&l.netlist, &plan).map_err(input_err)?;
    let mut inputs = l.hashes.clone();
    inputs.insert("analysis".into(), hash);
    write(
        &a.out.join("plan.json"),
        &json(&Artifact {
            kind: "plan".into(),
            inputs,
            data: &plan,
        }),
    )?;
    write(&a.out.join("patched.v"), &emit_netlist(&patched))?;
    for e in &plan.entries {
        println!("{}: {} -> {} (coverage {})", e.cell, e.old_init.to_hex(), e.new_init.to_hex(), e.coverage.to_hex());
    }
    Ok(0)
}

/// Accepts a trigger artifact, a bare trigger or a benchmark ground truth.
fn load_trigger(path: &Path) -> Res<Trigger> {
    let text = read(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let inner = if v.get("kind").and_then(|k| k.as_str()) == Some("trigger") {
        v["data"].clone()
    } else if v.get("frames").is_some() {
        v
    } else {
        v.get("trigger").cloned().unwrap_or(serde_json::Value::Null)
    };
    serde_json::from_value(inner).map_err(|e| input_err(format!("{}: no trigger ({e})", path.display())))
}

fn parse_watch(s: &str) -> Res<(SignalId, bool)> {
    let (name, v) = s.rsplit_once('=').unwrap_or((s, "1"));
    let value = match v {
        "1" => true,
        "0" => false,
        _ => return Err(usage_err(format!("--watch {s}: value must be 0 or 1"))),
    };
    let id = match name.strip_suffix(']').and_then(|n| n.split_once('[')) {
        Some((base, i)) => SignalId::bit(base, i.parse().map_err(|_| usage_err(format!("--watch {s}: bad index")))?),
        None => SignalId::scalar(name),
    };
    Ok((id, value))
}

fn cmd_verify(a: VerifyArgs) -> Res<u8> {
    let o = load_design(&a.original, a.top.as_deref(), a.roles.as_deref())?;
    let p = load_design(&a.patched, a.top.as_deref(), a.roles.as_deref())?;
    let trigger = load_trigger(&a.trigger)?;
    let watch = a.watch.iter().map(|w| parse_watch(w)).collect::<Res<Vec<_>>>()?;
    for (s, _) in &watch {
        if o.design.signal(s).is_none() {
            return Err(input_err(format!("watched signal '{s}' is not in the original netlist")));
        }
    }
    let mut inputs = BTreeMap::from([
        ("original".to_string(), o.hashes["netlist"].clone()),
        ("patched".to_string(), p.hashes["netlist"].clone()),
        ("trigger".to_string(), sha256(read(&a.trigger)?.as_bytes())),
    ]);
    let plan = match &a.plan {
        Some(path) => {
            let art: Artifact<ReconfigPlan> = load_artifact(path, &["plan"])?;
            check_link(&art, "plan", "netlist", &o.hashes["netlist"])?;
            inputs.insert("plan".into(), sha256(read(path)?.as_bytes()));
            Some(art.data)
        }
        None => None,
    };
    let opts = MitigationOptions {
        vectors: a.vectors,
        seed: a.seed,
        ..Default::default()
    };
    let report = verify_mitigation(&o.design, &p.design, &trigger, &watch, plan.as_ref(), &opts).map_err(input_err)?;
    let verdict = report.verdict;
    emit(
        a.out.as_deref(),
        &json(&Artifact {
            kind: "mitigation".into(),
            inputs,
            data: report,
        }),
    )?;
    eprintln!("mitigation: {}", serde_json::to_value(verdict).unwrap().as_str().unwrap_or("").to_uppercase());
    Ok(match verdict {
        Verdict::Pass => 0,
        Verdict::Fail => EXIT_TROJAN,
        Verdict::Inconclusive => EXIT_UNKNOWN,
    })
}

fn cmd_bench(a: BenchArgs) -> Res<u8> {
    let archetype = match a.archetype {
        ArchetypeArg::PatternLock => Archetype::PatternLock,
        ArchetypeArg::CounterLock => Archetype::CounterLock,
        ArchetypeArg::SdcPair => Archetype::SdcPair,
    };
    let spec = BenchSpec {
        archetype,
        width: a.width,
        param: a.param,
        seed: a.seed,
    };
    let b = generate(&spec).map_err(usage_err)?;
    let name = serde_json::to_value(archetype).unwrap().as_str().unwrap_or("bench").to_string();
    let netlist = a.out.join(format!("{name}.v"));
    write(&netlist, &b.text)?;
    write(&a.out.join(format!("{name}.truth.json")), &json(&b.truth))?;
    println!("{}", netlist.display());
    Ok(0)
}

fn cmd_pipeline(c: PipelineConfig) -> Res<u8> {
    let l = c.design.load()?;
    let mut opts = PipelineOptions::new(c.seed);
    opts.converge = c.schedule.options(c.seed);
    opts.prove.conflict_budget = budget(c.budget);
    opts.bmc_depth = c.bmc_depth;
    opts.all_low_coverage = c.all_low_coverage;
    let out = run_pipeline(&l.netlist, &l.roles, &opts).map_err(|e| match e {
        lutscope::pipeline::PipelineError::Analysis(a) => usage_err(a),
        other => input_err(other),
    })?;
    let r = &out.report;
    let report_json = json(&Artifact {
        kind: "pipeline".into(),
        inputs: l.hashes.clone(),
        data: r,
    });
    let report_hash = sha256(report_json.as_bytes());
    write(&c.out.join("report.json"), &report_json)?;
    let text = render_report(r);
    write(&c.out.join("report.txt"), &text)?;
    let linked = |extra: &[(&str, &str)]| {
        let mut m = l.hashes.clone();
        m.insert("report".into(), report_hash.clone());
        for (k, v) in extra {
            m.insert(k.to_string(), v.to_string());
        }
        m
    };
    if let Some(t) = r.primary_trigger() {
        write(
            &c.out.join("trigger.json"),
            &json(&Artifact {
                kind: "trigger".into(),
                inputs: linked(&[]),
                data: t,
            }),
        )?;
    }
    if let Some(p) = &out.patched {
        let patched = emit_netlist(p);
        write(&c.out.join("patched.v"), &patched)?;
        write(
            &c.out.join("plan.json"),
            &json(&Artifact {
                kind: "plan".into(),
                inputs: linked(&[("patched", &sha256(patched.as_bytes()))]),
                data: &r.plan,
            }),
        )?;
    }
    print!("{text}");
    Ok(if r.trojan_confirmed() {
        EXIT_TROJAN
    } else if r.has_unknown() {
        EXIT_UNKNOWN
    } else {
        0
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let r = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Prove(a) => cmd_prove(a),
        Command::Patch(a) => cmd_patch(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Pipeline(c) => cmd_pipeline(c),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
