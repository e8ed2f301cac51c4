//! `mgeq`: command-line front end for building and checking microgrid
//! dynamic equivalents.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mgeq::estimation::{two_stage_estimate, TwoStageConfig};
use mgeq::pipeline::{run_pipeline, ScenarioConfig};
use mgeq::sensitivity::{rank_parameters, select_parameters, SelectionPolicy, SensitivityConfig};
use mgeq::sim::{simulate_playin, synth_scenario, FaultTemplate, Method, SimConfig};
use mgeq::validation::{emit_comparison, validate, ValidationEvent, DEFAULT_THRESHOLD};
use mgeq::{load_parameter_set, load_pcc_csv, save_parameter_set, BaseSystem, Window};

#[derive(Parser)]
#[command(name = "mgeq", version, about = "Gray-box dynamic equivalents of grid-connected microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay recorded PCC voltage and frequency through the equivalent.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output CSV with columns t,p_hat,q_hat.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Generate a synthetic PCC record from a fault template.
    Synth {
        #[arg(long)]
        params: PathBuf,
        /// Comma-separated template keys, e.g. t=10,dur=0.5,vsag=0.4
        #[arg(long, default_value = "")]
        fault: String,
        /// Record span t0:t1 in seconds.
        #[arg(long, default_value = "9:14")]
        span: String,
        /// Sample spacing in seconds.
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Rank free parameters by trajectory sensitivity on a window.
    Rank {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        window: String,
        #[arg(long, default_value_t = 0.01)]
        rel_step: f64,
        /// Print the selection under this policy (top:K or threshold:X).
        #[arg(long)]
        select: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Fit the free parameters in two stages with differential evolution.
    Estimate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "9:9.99")]
        stage1: String,
        #[arg(long, default_value = "10:14")]
        stage2: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generation limit of stage 1.
        #[arg(long)]
        generations1: Option<usize>,
        /// Generation limit of stage 2.
        #[arg(long)]
        generations2: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Convergence history CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Score a fitted equivalent on recorded events.
    Validate {
        #[arg(long)]
        params: PathBuf,
        /// Event record; pair each with a --window.
        #[arg(long = "event", required = true)]
        events: Vec<PathBuf>,
        #[arg(long = "window", required = true)]
        windows: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        /// Directory for measured-vs-simulated curves.
        #[arg(long)]
        emit_curves: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run rank, select, estimate and validate from a scenario file.
    Run {
        scenario: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Integration step in seconds.
    #[arg(long, default_value_t = 1e-3)]
    dt_int: f64,
    /// rk4 or trapezoidal.
    #[arg(long, default_value = "rk4")]
    method: Method,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            dt_int: self.dt_int,
            method: self.method,
            base: BaseSystem::default(),
        }
    }
}

fn window(s: &str) -> Result<Window> {
    Window::parse(s).with_context(|| format!("bad window `{s}`"))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate {
            params,
            input,
            out,
            sim,
        } => {
            let cfg = sim.config();
            let set = load_parameter_set(&params)?;
            let series = load_pcc_csv(&input, &cfg.base)?;
            let traj = simulate_playin(&set, &series, &cfg)?;
            let mut s = String::from("t,p_hat,q_hat\n");
            for k in 0..traj.len() {
                let _ = writeln!(s, "{:?},{:?},{:?}", traj.t[k], traj.p_hat[k], traj.q_hat[k]);
            }
            write_output(Some(&out), &s)?;
        }
        Command::Synth {
            params,
            fault,
            span,
            dt,
            out,
            sim,
        } => {
            let span = window(&span)?;
            let mut spec = format!("start={},end={},dt={dt}", span.t_start, span.t_end);
            if !fault.trim().is_empty() {
                spec.push(',');
                spec.push_str(&fault);
            }
            let template = FaultTemplate::parse(&spec).context("bad fault template")?;
            let set = load_parameter_set(&params)?;
            let series = synth_scenario(&set, &template, &sim.config())?;
            write_output(out.as_deref(), &mgeq::timeseries::pcc_csv_string(&series))?;
        }
        Command::Rank {
            params,
            input,
            window: w,
            rel_step,
            select,
            out,
            sim,
        } => {
            let cfg = SensitivityConfig {
                rel_step,
                abs_step: None,
                sim: sim.config(),
            };
            let set = load_parameter_set(&params)?;
            let series = load_pcc_csv(&input, &cfg.sim.base)?;
            let ranking = rank_parameters(&set, &series, &window(&w)?, &cfg)?;
            ranking.save(&out)?;
            if let Some(policy) = select {
                let policy: SelectionPolicy = policy.parse()?;
                let sel = select_parameters(&ranking, policy);
                println!("selected: {}", sel.selected.join(","));
                println!("fixed: {}", sel.fixed.join(","));
            }
        }
        Command::Estimate {
            params,
            input,
            stage1,
            stage2,
            seed,
            generations1,
            generations2,
            out,
            trace,
            sim,
        } => {
            let mut cfg = TwoStageConfig::reference(seed);
            cfg.sim = sim.config();
            cfg.stage1.window = window(&stage1)?;
            cfg.stage2.window = window(&stage2)?;
            if let Some(g) = generations1 {
                cfg.stage1.de.max_generations = g;
            }
            if let Some(g) = generations2 {
                cfg.stage2.de.max_generations = g;
            }
            cfg.check()?;
            let set = load_parameter_set(&params)?;
            cfg.restrict_to(&set.free_names());
            let measured = load_pcc_csv(&input, &cfg.sim.base)?;
            let result = two_stage_estimate(&set, &measured, &cfg)?;
            save_parameter_set(result.fitted(), &out)?;
            if let Some(t) = trace {
                result.save_history(&t)?;
            }
            for stage in [&result.stage1, &result.stage2] {
                println!(
                    "{}: eps {:e} after {} evaluations ({} penalized)",
                    stage.stage_label, stage.best_eps, stage.evaluations, stage.penalties
                );
            }
        }
        Command::Validate {
            params,
            events,
            windows,
            threshold,
            out,
            emit_curves,
            sim,
        } => {
            if events.len() != windows.len() {
                bail!("{} --event given but {} --window", events.len(), windows.len());
            }
            let cfg = sim.config();
            let set = load_parameter_set(&params)?;
            let evs = events
                .iter()
                .zip(&windows)
                .map(|(p, w)| {
                    let label = p
                        .file_stem()
                        .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into());
                    Ok(ValidationEvent {
                        label,
                        series: load_pcc_csv(p, &cfg.base)?,
                        window: window(w)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = validate(&set, &evs, threshold, &cfg);
            report.save(&out)?;
            if let Some(dir) = emit_curves {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                for ev in &evs {
                    emit_comparison(&set, &ev.series, dir.join(format!("{}.csv", ev.label)), &cfg)?;
                }
            }
            println!("verdict: {}", report.verdict);
            return Ok(if report.is_validated() { 0 } else { 2 });
        }
        Command::Run { scenario } => {
            let cfg = ScenarioConfig::load(&scenario)?;
            let outcome = run_pipeline(&cfg)?;
            println!("verdict: {}", outcome.report.verdict);
            return Ok(outcome.exit_code() as u8);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            // library errors already embed their cause in the message
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    msg.push_str(if msg.is_empty() { "" } else { ": " });
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
