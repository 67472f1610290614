//! End-to-end pipeline: read program and stubs, solve, emit summaries and a
//! report, optionally cross-check guards with the concrete tester.

pub mod emit;
pub mod stubs;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use log::info;

pub use emit::emit_summary;
pub use stubs::{parse_stubs, StubEntry, StubKind};

use crate::error::{Error, Result};
use crate::heap::HeapModel;
use crate::infer::{InferConfig, Provenance, Summary};
use crate::interproc::{call_env, solve_program, SolveConfig, SummaryTable};
use crate::ir::{normalize_method, parse_program, MethodSig, Program};
use crate::oracle::{check_noninterference, NativeKind, Natives, NiConfig, RunLimits, Verdict};
use crate::scfg::{build_scfg, dump::dump_scfg};
use crate::symlat;

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub programs: Vec<PathBuf>,
    pub model: HeapModel,
    pub stubs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub max_nodes: usize,
    pub max_iters: usize,
    /// Trials per method for the concrete check; off when `None`.
    pub check_ni: Option<usize>,
    pub fuel: usize,
    pub verbose_effects: bool,
    pub dump_scfg: bool,
    pub seed: u64,
}

impl AnalysisConfig {
    pub fn new(model: HeapModel) -> Self {
        AnalysisConfig {
            programs: Vec::new(),
            model,
            stubs: Vec::new(),
            out: None,
            max_nodes: 2_000_000,
            max_iters: 100,
            check_ni: None,
            fuel: 10_000,
            verbose_effects: false,
            dump_scfg: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_nodes == 0 || self.max_iters == 0 || self.fuel == 0 || self.check_ni == Some(0) {
            return Err(Error::semantic("ceilings, fuel and trial counts must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NiOutcome {
    Pass(usize),
    Vacuous,
    Fail(String),
}

#[derive(Clone, Debug)]
pub struct MethodReport {
    pub sig: MethodSig,
    pub provenance: Provenance,
    pub guarded: bool,
    pub flows: bool,
    pub note: Option<String>,
    pub ni: Option<NiOutcome>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub model: HeapModel,
    pub methods: Vec<MethodReport>,
    /// Methods with a body whose guard is not canonically `tt`.
    pub guarded: usize,
    /// Methods with a body where an argument's level reaches the return
    /// level or a different argument's object level.
    pub flows: usize,
    pub elapsed: Duration,
}

impl Report {
    pub fn count(&self, p: Provenance) -> usize {
        self.methods.iter().filter(|m| m.provenance == p).count()
    }

    pub fn ni_failures(&self) -> usize {
        self.methods
            .iter()
            .filter(|m| matches!(m.ni, Some(NiOutcome::Fail(_))))
            .count()
    }

    /// Deterministic text; timing is left out so reruns compare equal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "heap model: {}", self.model).unwrap();
        for m in &self.methods {
            write!(
                out,
                "{}\t{}\t{}\t{}",
                m.sig,
                m.provenance,
                if m.guarded { "guarded" } else { "tt" },
                if m.flows { "flows" } else { "-" }
            )
            .unwrap();
            if let Some(n) = &m.note {
                write!(out, "\t({n})").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "methods: {}", self.methods.len()).unwrap();
        for p in [Provenance::Inferred, Provenance::Stub, Provenance::Pessimistic] {
            writeln!(out, "{p}: {}", self.count(p)).unwrap();
        }
        writeln!(out, "#guarded: {}", self.guarded).unwrap();
        writeln!(out, "#flows: {}", self.flows).unwrap();
        let checked: Vec<&MethodReport> = self.methods.iter().filter(|m| m.ni.is_some()).collect();
        if !checked.is_empty() {
            for m in checked {
                let v = match m.ni.as_ref().unwrap() {
                    NiOutcome::Pass(n) => format!("pass ({n} pairs)"),
                    NiOutcome::Vacuous => "vacuous".to_string(),
                    NiOutcome::Fail(w) => format!("FAIL, witness {w}"),
                };
                writeln!(out, "ni {}: {v}", m.sig).unwrap();
            }
            writeln!(out, "ni failures: {}", self.ni_failures()).unwrap();
        }
        out
    }
}

/// Everything one run produces, before anything is written.
pub struct Analysis {
    pub table: SummaryTable,
    pub report: Report,
    /// Emitted text per method, keyed by file stem.
    pub files: BTreeMap<String, String>,
}

/// Whether an argument level reaches the return level or another
/// argument's object level.
pub fn has_flow(s: &Summary) -> bool {
    for (v, e) in &s.effect {
        let own = if v == &symlat::level(symlat::RET) {
            None
        } else if let Some(r) = v.strip_prefix("objlevel_") {
            if r == symlat::RET {
                continue;
            }
            Some(r)
        } else {
            continue;
        };
        for a in &s.args {
            if Some(a.name.as_str()) != own && e.vars().contains(&symlat::level(&a.name)) {
                return true;
            }
        }
    }
    false
}

/// Concrete behaviour of stubbed natives for the tester.
pub fn natives_of(stubs: &[StubEntry]) -> Natives {
    stubs
        .iter()
        .map(|e| {
            let k = match &e.kind {
                StubKind::Sink | StubKind::Pessimistic => NativeKind::Sink,
                StubKind::Source(p) => NativeKind::Source(p.clone()),
                StubKind::Summary => NativeKind::Pure,
            };
            (e.sig.clone(), k)
        })
        .collect()
}

/// Solve `p` under `stubs` and prepare every output.
pub fn analyze(p: &Program, stubs: &[StubEntry], cfg: &AnalysisConfig) -> Result<Analysis> {
    cfg.validate()?;
    let start = Instant::now();
    let stub_map: BTreeMap<MethodSig, Summary> = stubs.iter().map(|e| (e.sig.clone(), e.summary.clone())).collect();
    let mut infer = InferConfig::new(cfg.model);
    infer.max_nodes = cfg.max_nodes;
    let solve = SolveConfig {
        infer,
        max_iters: cfg.max_iters,
    };
    let table = solve_program(p, &stub_map, solve)?;
    let natives = natives_of(stubs);
    let mut files = BTreeMap::new();
    let mut methods = Vec::new();
    let (mut guarded, mut flows) = (0, 0);
    for (sig, e) in &table.entries {
        let has_body = p.method(sig).is_some_and(|m| m.body.is_some());
        let g = !e.summary.guard.normalized().is_const(true);
        let f = has_flow(&e.summary);
        if has_body {
            guarded += usize::from(g);
            flows += usize::from(f);
        }
        files.insert(
            format!("{}.summary", sig.file_stem()),
            emit_summary(&e.summary, cfg.verbose_effects),
        );
        let mut ni = None;
        if let (Some(trials), true, Provenance::Inferred) = (cfg.check_ni, has_body, e.provenance) {
            let ni_cfg = NiConfig {
                trials,
                limits: RunLimits {
                    fuel: cfg.fuel,
                    ..RunLimits::default()
                },
                seed: cfg.seed,
                ..NiConfig::default()
            };
            ni = Some(match check_noninterference(p, &natives, sig, &e.summary, ni_cfg) {
                Verdict::Pass { runs } => NiOutcome::Pass(runs),
                Verdict::Vacuous => NiOutcome::Vacuous,
                Verdict::Fail(w) => {
                    let name = format!("{}.witness.json", sig.file_stem());
                    files.insert(name.clone(), w.to_json());
                    NiOutcome::Fail(name)
                }
            });
        }
        if cfg.dump_scfg && e.provenance == Provenance::Inferred && has_body {
            let m = normalize_method(p.method(sig).unwrap());
            let env = call_env(p, &m, &stub_map, &table, cfg.model)?;
            let mut g = build_scfg(&m, &env, cfg.model, infer.build)?;
            files.insert(format!("{}.dot", sig.file_stem()), dump_scfg(&mut g));
        }
        methods.push(MethodReport {
            sig: sig.clone(),
            provenance: e.provenance,
            guarded: g,
            flows: f,
            note: e.note.clone(),
            ni,
        });
    }
    let report = Report {
        model: cfg.model,
        methods,
        guarded,
        flows,
        elapsed: start.elapsed(),
    };
    info!("analysed {} methods in {:?}", report.methods.len(), report.elapsed);
    Ok(Analysis { table, report, files })
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::semantic(format!("{}: {e}", path.display())))
}

/// Parse several program files as one unit; syntax errors name the file.
pub fn load_program(paths: &[PathBuf]) -> Result<Program> {
    let mut text = String::new();
    let mut starts = Vec::new();
    let mut line = 1;
    for p in paths {
        let t = read(p)?;
        starts.push((line, p.clone()));
        line += t.lines().count() + 1;
        text.push_str(&t);
        text.push('\n');
    }
    parse_program(&text).map_err(|e| match e {
        Error::Syntax { pos, msg } => {
            let (first, path) = starts.iter().rev().find(|(l, _)| *l <= pos.line).cloned().unwrap_or((1, PathBuf::new()));
            Error::semantic(format!("{}:{}:{}: {msg}", path.display(), pos.line - first + 1, pos.col))
        }
        e => e,
    })
}

pub fn load_stubs(paths: &[PathBuf], model: HeapModel) -> Result<Vec<StubEntry>> {
    let mut out: Vec<StubEntry> = Vec::new();
    for p in paths {
        let es = parse_stubs(&read(p)?, model).map_err(|e| Error::semantic(format!("{}:{e}", p.display())))?;
        for e in es {
            if out.iter().any(|o| o.sig == e.sig) {
                return Err(Error::semantic(format!("{}: duplicate stub for {}", p.display(), e.sig)));
            }
            out.push(e);
        }
    }
    Ok(out)
}

/// Read inputs, analyse, and write `.summary` files plus `report.txt`.
pub fn main_analyze(cfg: &AnalysisConfig) -> Result<Report> {
    let p = load_program(&cfg.programs)?;
    let stubs = load_stubs(&cfg.stubs, cfg.model)?;
    let a = analyze(&p, &stubs, cfg)?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        for (name, text) in &a.files {
            fs::write(dir.join(name), text)?;
        }
        fs::write(dir.join("report.txt"), a.report.render())?;
    }
    Ok(a.report)
}

/// 0 ok, 1 input error, 2 failed concrete check, 3 solver did not converge.
pub fn exit_code(r: &Result<Report>) -> i32 {
    match r {
        Ok(rep) if rep.ni_failures() > 0 => 2,
        Ok(_) => 0,
        Err(Error::NonTermination { .. } | Error::Monotonicity { .. }) => 3,
        Err(_) => 1,
    }
}
