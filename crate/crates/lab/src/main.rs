use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use calabi_lab::config::{ConfigError, LabConfig};
use calabi_lab::exit;
use calabi_lab::experiments::{self, grid_checks, sequence_checks, SweepCheck};
use calabi_lab::hamiltonian::parse_hamiltonian;
use calabi_lab::report;
use calabi_lab::verify::{run_verify_suite, Fixture, Status};

#[derive(Parser, Debug)]
#[command(name = "calabi-lab", version, about = "Numerical laboratory for the Calabi invariant on R^2n")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalFlags,
}

#[derive(Args, Debug, Default)]
struct GlobalFlags {
    /// Config file (`key = value` lines); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Half-dimension n.
    #[arg(long, global = true)]
    dim: Option<String>,
    /// radial, xdy or both.
    #[arg(long, global = true)]
    lambda: Option<String>,
    #[arg(long, global = true)]
    steps: Option<String>,
    /// Spatial quadrature nodes per axis.
    #[arg(long, global = true)]
    quad: Option<String>,
    /// Probe grid points per axis (per subcube side for `grid`).
    #[arg(long = "grid-res", global = true)]
    grid_res: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long = "newton-tol", global = true)]
    newton_tol: Option<String>,
    #[arg(long = "newton-max-iter", global = true)]
    newton_max_iter: Option<String>,
    #[arg(long = "time-nodes", global = true)]
    time_nodes: Option<String>,
    #[arg(long, global = true)]
    rule: Option<String>,
    #[arg(long = "min-transition", global = true)]
    min_transition: Option<String>,
    #[arg(long = "grid-stiffness", global = true)]
    grid_stiffness: Option<String>,
    #[arg(long, global = true)]
    concat: Option<String>,
    #[arg(long, global = true)]
    probes: Option<String>,
    #[arg(long = "df-probes", global = true)]
    df_probes: Option<String>,
    #[arg(long = "phase-probes", global = true)]
    phase_probes: Option<String>,
    #[arg(long = "sak-probes", global = true)]
    sak_probes: Option<String>,
    #[arg(long = "path-nodes", global = true)]
    path_nodes: Option<String>,
    #[arg(long = "newton-tol-alpha", global = true)]
    newton_tol_alpha: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
}

impl GlobalFlags {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("dim", self.dim.clone()),
            ("lambda", self.lambda.clone()),
            ("steps", self.steps.clone()),
            ("quad", self.quad.clone()),
            ("grid_res", self.grid_res.clone()),
            ("out", self.out.clone()),
            ("svg", self.svg.then(|| "true".to_string())),
            ("scheme", self.scheme.clone()),
            ("newton_tol", self.newton_tol.clone()),
            ("newton_max_iter", self.newton_max_iter.clone()),
            ("time_nodes", self.time_nodes.clone()),
            ("rule", self.rule.clone()),
            ("min_transition", self.min_transition.clone()),
            ("grid_stiffness", self.grid_stiffness.clone()),
            ("concat", self.concat.clone()),
            ("probes", self.probes.clone()),
            ("df_probes", self.df_probes.clone()),
            ("phase_probes", self.phase_probes.clone()),
            ("sak_probes", self.sak_probes.clone()),
            ("path_nodes", self.path_nodes.clone()),
            ("newton_tol_alpha", self.newton_tol_alpha.clone()),
            ("seed", self.seed.clone()),
        ]
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every invariant check; nonzero exit on any failure.
    Verify {
        /// none, corrupt-chart or zero.
        #[arg(long, default_value = "none")]
        fixture: String,
    },
    /// Calabi invariant of one Hamiltonian by both formulas.
    Cal {
        /// zero, bump, twist[:rate], pulsed, dipole, pair, grid:<k>, eps:<ε>, concat:<h>+<k>
        #[arg(long)]
        hamiltonian: String,
    },
    /// The grid counterexample sweep over k.
    Grid {
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        kmin: Option<String>,
        #[arg(long)]
        kmax: Option<String>,
    },
    /// The graphical ε-sequence.
    Seq {
        /// Comma-separated schedule.
        #[arg(long)]
        eps: Option<String>,
    },
    /// Symplecticity residual of the linear chart.
    ChartCheck,
}

fn load_config(cli: &Cli) -> Result<LabConfig, ConfigError> {
    let mut cfg = match &cli.global.config {
        Some(path) => LabConfig::from_file(path)?,
        None => LabConfig::default(),
    };
    for (key, value) in cli.global.overrides() {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    match &cli.command {
        Command::Grid { delta, kmin, kmax } => {
            for (key, value) in [("delta", delta), ("kmin", kmin), ("kmax", kmax)] {
                if let Some(v) = value {
                    cfg.set(key, v)?;
                }
            }
        }
        Command::Seq { eps: Some(v) } => cfg.set("eps", v)?,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bad_value(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        message: message.into(),
    }
}

fn print_checks(checks: &[SweepCheck]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.message);
    }
    checks.iter().all(|c| c.passed)
}

fn run(cli: &Cli, cfg: &LabConfig) -> Result<bool, Box<dyn std::error::Error>> {
    match &cli.command {
        Command::ChartCheck => {
            let start = Instant::now();
            let r: f64 = calabi_core::chart::chart_symplecticity_residual(cfg.dim, 100, cfg.seed);
            let ok = r <= calabi_lab::verify::CHART_TOL;
            println!(
                "{} chart symplecticity residual {r:e} (tolerance {:e}, {} ms)",
                if ok { "PASS" } else { "FAIL" },
                calabi_lab::verify::CHART_TOL,
                start.elapsed().as_millis()
            );
            Ok(ok)
        }
        Command::Verify { fixture } => {
            let fixture: Fixture = fixture.parse().map_err(|m| bad_value("fixture", m))?;
            let report = run_verify_suite(cfg, fixture)?;
            for c in &report.checks {
                if c.status == Status::Skipped {
                    println!("SKIP {}", c.invariant);
                } else {
                    println!("{} {} [{}] measured {:e} tolerance {:e}", c.status.label(), c.invariant, c.subject, c.measured, c.tolerance);
                }
            }
            std::fs::create_dir_all(&cfg.out)?;
            let doc = report::verify_json(&report, cfg);
            std::fs::write(cfg.out.join("verify.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
            Ok(report.passed())
        }
        Command::Cal { hamiltonian } => {
            let field = parse_hamiltonian(hamiltonian, cfg).map_err(|e| bad_value("hamiltonian", e.to_string()))?;
            let record = experiments::run_single(hamiltonian, &field, cfg)?;
            println!("cal_H = {:e}", record.cal_h);
            for (name, v) in [("radial", record.cal_f_radial), ("xdy", record.cal_f_xdy)] {
                if let Some(v) = v {
                    println!("cal_f[{name}] = {v:e}");
                }
            }
            report::emit_report(cfg, "cal", "param", std::slice::from_ref(&record), &[])?;
            Ok(true)
        }
        Command::Grid { .. } => {
            let records = experiments::run_grid_sweep(cfg)?;
            for r in &records {
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
            }
            let checks = grid_checks(&records, cfg.dim);
            print!("{}", report::csv_string(&records));
            let ok = print_checks(&checks);
            report::emit_report(cfg, "grid", "k", &records, &checks)?;
            Ok(ok)
        }
        Command::Seq { .. } => {
            let base = calabi_core::suite::epsilon_base(cfg.dim)?;
            let records = experiments::run_graphical_sequence(&base, &cfg.eps, cfg)?;
            for r in &records {
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
            }
            let checks = sequence_checks(&records);
            print!("{}", report::csv_string(&records));
            let ok = print_checks(&checks);
            report::emit_report(cfg, "seq", "eps", &records, &checks)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG_ERROR } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(exit::CONFIG_ERROR as u8);
        }
    };
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::from(exit::SUCCESS as u8),
        Ok(false) => ExitCode::from(exit::INVARIANT_FAILURE as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is::<ConfigError>() { exit::CONFIG_ERROR } else { exit::INVARIANT_FAILURE };
            ExitCode::from(code as u8)
        }
    }
}
