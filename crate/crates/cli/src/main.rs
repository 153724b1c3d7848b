use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use kernel_trellis::plan::export::export_json;
use kernel_trellis::plan::report_complexity;
use kernel_trellis::polar::{load_spec, parse_llrs, scl_decode, sc_decode};
use kernel_trellis::sim::run_sweep;
use kernel_trellis::verify::{verify_kernel, verify_random};
use kernel_trellis::{compile_plan, Kernel};

/// Compile, verify and simulate polarization kernel processing plans.
#[derive(Parser)]
#[command(name = "ktrellis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a kernel file and print its cost.
    Plan {
        kernel: PathBuf,
        /// Write the plan as JSON.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Print the sectionalization tree and the per-phase cost table.
        #[arg(long)]
        report: bool,
    },
    /// Compare phase LLRs against the exhaustive oracle.
    Verify {
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        kernel: Option<PathBuf>,
        /// Size of random kernels, one per trial.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode one LLR vector.
    Decode {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        llrs: PathBuf,
        #[arg(long, default_value_t = 1)]
        list: usize,
    },
    /// BPSK/AWGN frame error rate sweep; writes a TSV table.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Eb/N0 range in dB as `start:stop:step`, both ends included.
        #[arg(long)]
        snr: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        list: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    Failed,
}

fn parse_range(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        bail!("--snr expects start:stop:step, got {s:?}");
    };
    let num = |t: &str| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?} in --snr"));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 || b < a {
        bail!("--snr range {s:?} is empty or malformed");
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|j| a + j as f64 * step).collect())
}

fn load_kernel(path: &Path) -> anyhow::Result<Kernel> {
    Kernel::load(path).with_context(|| format!("{}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Plan { kernel, export, report } => {
            let k = load_kernel(&kernel)?;
            let plan = compile_plan(&k)?;
            if report {
                print!("{}", report_complexity(&plan));
            } else {
                let t = plan.cost().total();
                println!("{}\tl={}\tadds={}\tcomps={}", k.name(), k.size(), t.adds, t.comps);
            }
            if let Some(path) = export {
                write_out(Some(&path), &export_json(&plan))?;
            }
            Ok(Outcome::Ok)
        }
        Command::Verify {
            kernel,
            random,
            trials,
            seed,
        } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let report = match (kernel, random) {
                (Some(path), None) => verify_kernel(&load_kernel(&path)?, trials, seed, 0)?,
                (None, Some(l)) => {
                    if !(1..=20).contains(&l) {
                        bail!("--random expects a size in 1..=20, got {l}");
                    }
                    verify_random(l, trials, seed)?
                }
                _ => bail!("give exactly one of --kernel and --random"),
            };
            print!("{}", report.render());
            Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Decode { spec, llrs, list } => {
            let code = load_spec(&spec).with_context(|| format!("{}", spec.display()))?;
            let text = fs::read_to_string(&llrs).with_context(|| format!("reading {}", llrs.display()))?;
            let values = parse_llrs(&text).with_context(|| format!("{}", llrs.display()))?;
            if values.len() != code.n() {
                bail!("{}: expected {} LLRs, found {}", llrs.display(), code.n(), values.len());
            }
            let plan = compile_plan(code.kernel())?;
            let d = if list == 1 {
                sc_decode(&code, &plan, &values)?
            } else {
                scl_decode(&code, &plan, &values, list)?.best
            };
            println!("u\t{}", d.u_hat);
            println!("c\t{}", d.c_hat);
            println!("adds\t{}", d.ops.adds);
            println!("comps\t{}", d.ops.comps);
            Ok(Outcome::Ok)
        }
        Command::Simulate {
            spec,
            snr,
            trials,
            list,
            seed,
            out,
        } => {
            let points = parse_range(&snr)?;
            let code = load_spec(&spec).with_context(|| format!("{}", spec.display()))?;
            let plan = compile_plan(code.kernel())?;
            let report = run_sweep(&code, &plan, &points, trials, list, seed)?;
            write_out(out.as_deref(), &report.to_tsv())?;
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
