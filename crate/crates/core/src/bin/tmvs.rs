use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tmvs::runner::{
    builtin_description, builtin_toml, exit_code, load_scenario, run_scenario, run_sweep, steady_scenario,
    validate_command, RunOptions, ScenarioConfig, SweepSpec, BUILTIN_NAMES, PARTIAL_SWEEP_EXIT,
};
use tmvs::Error;

#[derive(Parser)]
#[command(name = "tmvs", version, about = "Dissipative two-mode squeezing of a trapped ion's motion")]
struct Cli {
    /// Directory for CSV, SVG and manifest files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Concurrent sweep rows.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write SVG plots.
    #[arg(long, global = true, overrides_with = "no_plot")]
    plot: bool,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_plot: bool,
    /// Fock cutoff of mode a.
    #[arg(long, global = true)]
    dim_a: Option<usize>,
    /// Fock cutoff of mode b.
    #[arg(long, global = true)]
    dim_b: Option<usize>,
    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario (a file or a built-in name).
    Run { scenario: String },
    /// Run a parameter sweep file.
    Sweep { sweep: PathBuf },
    /// Solve for a scenario's steady state.
    Steady { scenario: String },
    /// Compare the sideband model against the full model.
    ValidateRwa { scenario: String },
    /// List the built-in scenarios, or print one as TOML.
    ListBuiltin {
        #[arg(long)]
        show: Option<String>,
    },
}

impl Cli {
    fn options(&self) -> RunOptions {
        let plot = if self.no_plot {
            Some(false)
        } else if self.plot {
            Some(true)
        } else {
            None
        };
        RunOptions { out_dir: Some(self.out_dir.clone()), plot, workers: self.workers }
    }

    fn with_dims(&self, mut cfg: ScenarioConfig) -> ScenarioConfig {
        if let Some(d) = self.dim_a {
            cfg.space.dim_a = d;
        }
        if let Some(d) = self.dim_b {
            cfg.space.dim_b = d;
        }
        cfg
    }

    fn scenario(&self, arg: &str) -> Result<ScenarioConfig, Error> {
        load_scenario(arg).map(|c| self.with_dims(c))
    }
}

fn warn_truncation(quiet: bool, name: &str, suspect: bool, leakage: f64) {
    if suspect {
        eprintln!("warning: {name}: truncation leakage {leakage:.3e} exceeds the limit; raise --dim-a/--dim-b");
    } else if !quiet {
        eprintln!("{name}: max truncation leakage {leakage:.3e}");
    }
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let opts = cli.options();
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Run { scenario } => {
            let out = run_scenario(&cli.scenario(scenario)?, &opts)?;
            let m = &out.manifest;
            warn_truncation(cli.quiet, &m.name, m.is_truncation_suspect(), m.truncation.max_leakage);
            say(format!(
                "{}: t = {}  <a+a> = {:.6}  <b+b> = {:.6}  duan = {:.6}  fidelity = {:.6}",
                m.name,
                out.record.times.last().copied().unwrap_or(0.0),
                m.final_sample.mean_quanta_a,
                m.final_sample.mean_quanta_b,
                m.final_sample.duan_variance,
                m.final_sample.tmvs_fidelity
            ));
            for f in &out.files {
                say(format!("wrote {}", f.display()));
            }
            Ok(0)
        }
        Command::Steady { scenario } => {
            let out = steady_scenario(&cli.scenario(scenario)?, &opts)?;
            let m = &out.manifest;
            warn_truncation(cli.quiet, &m.name, m.is_truncation_suspect(), m.truncation.max_leakage);
            let s = &out.sample;
            say(format!(
                "{}: steady <a+a> = {:.6}  <b+b> = {:.6}  duan = {:.6} (entangled: {})  fidelity = {:.6}  ground = {:.6}",
                m.name, s.mean_quanta_a, s.mean_quanta_b, s.duan_variance, m.witness.entangled, s.tmvs_fidelity, s.atom_populations[0]
            ));
            for f in &out.files {
                say(format!("wrote {}", f.display()));
            }
            Ok(0)
        }
        Command::Sweep { sweep } => {
            let mut spec = SweepSpec::load(sweep)?;
            spec.base = cli.with_dims(spec.base);
            let out = run_sweep(&spec, &opts)?;
            for row in &out.rows {
                match &row.result {
                    Ok(x) => say(format!("{} = {}: {} = {x:.8}", spec.axis.key(), row.value, spec.reduce.key())),
                    Err(e) => eprintln!("error: {} = {}: {e}", spec.axis.key(), row.value),
                }
            }
            for f in &out.files {
                say(format!("wrote {}", f.display()));
            }
            Ok(if out.failures() > 0 { PARTIAL_SWEEP_EXIT } else { 0 })
        }
        Command::ValidateRwa { scenario } => {
            let out = validate_command(&cli.scenario(scenario)?, &opts)?;
            say(format!("{:>12} {:>14} {:>6}", "nu/coupling", "trace dist.", "pass"));
            for row in &out.rows {
                say(format!("{:>12} {:>14.6e} {:>6}", row.report.nu_over_coupling, row.report.max_trace_distance, row.pass));
            }
            say(format!("bound {}; deviation decreases with nu: {}", out.bound, out.monotone()));
            for f in &out.files {
                say(format!("wrote {}", f.display()));
            }
            Ok(0)
        }
        Command::ListBuiltin { show: Some(name) } => match builtin_toml(name) {
            Some(t) => {
                print!("{t}");
                Ok(0)
            }
            None => Err(Error::Config(vec![format!("unknown built-in scenario {name:?}")])),
        },
        Command::ListBuiltin { show: None } => {
            for name in BUILTIN_NAMES {
                println!("{name:<18} {}", builtin_description(name).unwrap_or_default());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
