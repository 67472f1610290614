use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowsum::driver::{exit_code, main_analyze, AnalysisConfig};
use flowsum::heap::HeapModel;

#[derive(Parser)]
#[command(name = "flowsum", version, about = "Information-flow summaries for a small bytecode-like language")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer a summary for every method of the given programs.
    Analyze {
        #[arg(required = true)]
        programs: Vec<PathBuf>,
        #[arg(long, default_value = "lprec")]
        heap_model: HeapModel,
        #[arg(long, num_args = 1..)]
        stubs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 2_000_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        /// Cross-check every inferred guard with this many concrete trials.
        #[arg(long, value_name = "TRIALS")]
        check_ni: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Also print assignments that leave a variable unchanged.
        #[arg(long)]
        verbose_effects: bool,
        /// Write a graphviz file of each method's transition system.
        #[arg(long)]
        dump_scfg: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Cmd::Analyze {
        programs,
        heap_model,
        stubs,
        out,
        max_nodes,
        max_iters,
        check_ni,
        fuel,
        seed,
        verbose_effects,
        dump_scfg,
    } = Cli::parse().cmd;
    let mut cfg = AnalysisConfig::new(heap_model);
    cfg.programs = programs;
    cfg.stubs = stubs;
    cfg.out = Some(out.clone());
    cfg.max_nodes = max_nodes;
    cfg.max_iters = max_iters;
    cfg.check_ni = check_ni;
    cfg.fuel = fuel;
    cfg.seed = seed.unwrap_or(0);
    cfg.verbose_effects = verbose_effects;
    cfg.dump_scfg = dump_scfg;
    let res = main_analyze(&cfg);
    match &res {
        Ok(r) => {
            eprintln!(
                "{} methods, #guarded {}, #flows {}, {:.2?}; output in {}",
                r.methods.len(),
                r.guarded,
                r.flows,
                r.elapsed,
                out.display()
            );
            if r.ni_failures() > 0 {
                eprintln!("noninterference check failed for {} method(s)", r.ni_failures());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&res) as u8)
}
