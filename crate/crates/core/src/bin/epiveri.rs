use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use epiveri::bench::{generate, generate_twophase, run_bench, write_csv, Algo, BenchSpec, Family};
use epiveri::checker::{check, stage_dot, CheckOptions, Mode, Stage};
use epiveri::script::{load_system, CheckedSpec, CheckedSystem};
use epiveri::semantics::oracle_check;

#[derive(Parser)]
#[command(name = "epiveri", version, about = "Epistemic model checker for straightline multi-agent programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckAlgo {
    Ci,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Unfolded,
    Moralized,
    Reduced,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the specs of a script with the symbolic checker.
    Check {
        file: PathBuf,
        /// Only this spec (name, bracketed label or prefix).
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, value_enum, default_value = "ci")]
        algo: CheckAlgo,
        #[arg(long)]
        json: bool,
        /// Write PREFIX.{unfolded,moralized,reduced}.dot for each spec.
        #[arg(long, value_name = "PREFIX")]
        dot: Option<PathBuf>,
        #[arg(long, value_name = "SECONDS")]
        timeout: Option<f64>,
    },
    /// Check by explicit enumeration of runs.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Print one stage of the pipeline in DOT syntax.
    Graph {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "reduced")]
        stage: StageArg,
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, value_enum, default_value = "ci")]
        algo: CheckAlgo,
    },
    /// Time a family over a range of sizes and print CSV.
    Bench {
        #[arg(long)]
        family: Family,
        /// `A..B` (inclusive) or a comma-separated list.
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value = "ci")]
        algo: Algo,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 300.0, value_name = "SECONDS")]
        timeout: f64,
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        parallel: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print a generated script.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        size: usize,
        /// Slot count for twophase (defaults to the size).
        #[arg(long)]
        slots: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn load(file: &Path) -> Result<CheckedSystem, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure(format!("{}: {e}", file.display())))?;
    load_system(&text).map_err(|e| Failure(format!("{}:{}: {}", file.display(), e.pos(), e.message())))
}

fn select<'a>(sys: &'a CheckedSystem, label: Option<&str>) -> Result<Vec<&'a CheckedSpec>, Failure> {
    match label {
        None if sys.specs.is_empty() => Err(Failure("script has no specs".into())),
        None => Ok(sys.specs.iter().collect()),
        Some(l) => sys
            .find_spec(l)
            .map(|s| vec![s])
            .ok_or_else(|| Failure(format!("no spec labelled `{l}`"))),
    }
}

fn mode_of(a: CheckAlgo) -> Mode {
    match a {
        CheckAlgo::Ci => Mode::Optimized,
        CheckAlgo::Baseline => Mode::Baseline,
    }
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure(format!("bad size range `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        return if a <= b { Ok((a..=b).collect()) } else { Err(bad()) };
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn verdict_word(holds: bool) -> &'static str {
    if holds {
        "HOLDS"
    } else {
        "FAILS"
    }
}

fn run(cmd: Cmd) -> Result<bool, Failure> {
    match cmd {
        Cmd::Check { file, spec, algo, json, dot, timeout } => {
            let sys = load(&file)?;
            let specs = select(&sys, spec.as_deref())?;
            let mut opts = CheckOptions::new(mode_of(algo));
            if let Some(t) = timeout {
                opts = opts.with_timeout(Duration::from_secs_f64(t));
            }
            let mut all = true;
            let mut out = vec![];
            for (i, s) in specs.iter().enumerate() {
                if let Some(prefix) = &dot {
                    let tag = if specs.len() > 1 { format!(".{i}") } else { String::new() };
                    for (name, stage) in [
                        ("unfolded", Stage::Unfolded),
                        ("moralized", Stage::Moralized),
                        ("reduced", Stage::Reduced),
                    ] {
                        let text = stage_dot(&sys, &s.formula, s.time, opts.mode, stage)?;
                        let path = format!("{}{tag}.{name}.dot", prefix.display());
                        std::fs::write(&path, text).map_err(|e| Failure(format!("{path}: {e}")))?;
                    }
                }
                let v = check(&sys, s, &opts)?;
                all &= v.holds;
                if json {
                    out.push(serde_json::to_value(&v)?);
                    continue;
                }
                let st = &v.stats;
                println!("{}: {}", s.name, verdict_word(v.holds));
                println!(
                    "  mode {}  nodes {}  kept {}  removed {}  quantified {}  bdd vars {}",
                    v.mode.name(),
                    st.total_nodes,
                    st.kappa,
                    st.leaf_removed,
                    st.quantified,
                    st.bdd_vars
                );
                if let Some(cex) = &v.counterexample {
                    println!("  counterexample:");
                    for e in cex {
                        let val = e.value.map_or("*".to_string(), |b| b.to_string());
                        println!("    {} = {val}", e.var);
                    }
                }
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&out)?);
            }
            Ok(all)
        }
        Cmd::Oracle { file, spec, json } => {
            let sys = load(&file)?;
            let mut all = true;
            let mut out = vec![];
            for s in select(&sys, spec.as_deref())? {
                let v = oracle_check(&sys, s)?;
                all &= v.holds;
                if json {
                    out.push(serde_json::json!({ "spec": s.name, "result": v }));
                    continue;
                }
                println!("{}: {} ({} worlds)", s.name, verdict_word(v.holds), v.worlds);
                if let Some(w) = &v.witness {
                    println!("  counterexample:");
                    for (k, b) in w {
                        println!("    {k} = {b}");
                    }
                }
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&out)?);
            }
            Ok(all)
        }
        Cmd::Graph { file, stage, spec, algo } => {
            let sys = load(&file)?;
            let s = select(&sys, spec.as_deref())?[0];
            let stage = match stage {
                StageArg::Unfolded => Stage::Unfolded,
                StageArg::Moralized => Stage::Moralized,
                StageArg::Reduced => Stage::Reduced,
            };
            print!("{}", stage_dot(&sys, &s.formula, s.time, mode_of(algo), stage)?);
            Ok(true)
        }
        Cmd::Bench { family, sizes, algo, reps, timeout, spec, parallel, csv } => {
            let b = BenchSpec {
                spec,
                reps,
                timeout: Duration::from_secs_f64(timeout),
                parallel,
                ..BenchSpec::new(family, parse_sizes(&sizes)?, algo)
            };
            let rows = run_bench(&b);
            match csv {
                Some(p) => write_csv(std::fs::File::create(&p)?, &rows)?,
                None => write_csv(std::io::stdout().lock(), &rows)?,
            }
            Ok(rows.iter().all(|r| r.verdict != "error"))
        }
        Cmd::Gen { family, size, slots, output } => {
            let text = match (family, slots) {
                (Family::Twophase, Some(m)) => generate_twophase(size, m)?,
                _ => generate(family, size)?,
            };
            match output {
                Some(p) => std::fs::write(&p, text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
