//! Argument parsing and command dispatch for the `qent` binary.
//!
//! [`parse_args`] validates everything that can be checked without numerics
//! (flags, momentum grammar, Pauli exclusion, lattice commensurability for
//! fixed-L commands). [`execute`] does the work and renders the output in
//! memory; [`run`] writes it from a single place.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qent_core::measures::{self, MeasureSet};
use qent_core::oracle::{self, OracleCase, ORACLE_TOL};
use qent_core::output;
use qent_core::statebuilder::{build_classical_density, build_density, ClassicalState};
use qent_core::sweeps::{
    self, GeometryTemplate, MomentumSpec, StateSpec, SweepParameter, SweepResult,
    DEFAULT_ADDITIVITY_BOUND,
};
use qent_core::{Execution, Geometry, MomentumMultiset, QentError, Statistics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Small,
}

#[derive(Debug, Parser)]
#[command(
    name = "qent",
    version,
    about = "Entanglement of two intervals in quasiparticle states"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Evaluate on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct RatioArgs {
    /// Length of A over L.
    #[arg(long)]
    x1: Option<f64>,
    /// Length of B over L.
    #[arg(long)]
    x2: Option<f64>,
    /// Separation between A and B over L.
    #[arg(long, default_value_t = 0.0)]
    y: f64,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Measures of one state at one geometry.
    Measure {
        #[arg(long, value_parser = parse_stats)]
        stats: Statistics,
        /// Momentum multiset, e.g. "1,2", "1^2,3" or "1,L/4".
        #[arg(long = "K")]
        k: String,
        #[arg(long = "L")]
        sites: usize,
        #[arg(long, requires_all = ["d", "ell2"], conflicts_with_all = ["x1", "x2"])]
        ell1: Option<usize>,
        #[arg(long, requires = "ell1")]
        d: Option<usize>,
        #[arg(long, requires = "ell1")]
        ell2: Option<usize>,
        #[command(flatten)]
        ratios: RatioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classical limit: r distinguishable-in-C particles, no lattice.
    Classical {
        #[arg(long)]
        x1: f64,
        #[arg(long)]
        x2: f64,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measures as one geometry parameter varies at fixed L.
    Sweep {
        #[arg(long, value_parser = parse_stats)]
        stats: Statistics,
        #[arg(long = "K")]
        k: String,
        /// Lattice size; ignored when sweeping L.
        #[arg(long = "L")]
        sites: Option<usize>,
        #[arg(long, value_parser = parse_parameter)]
        param: SweepParameter,
        /// Parameter values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        ratios: RatioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measures along an L ladder with an L → ∞ fit.
    Extrapolate {
        #[arg(long, value_parser = parse_stats)]
        stats: Statistics,
        #[arg(long = "K")]
        k: String,
        #[arg(long, value_delimiter = ',', default_values_t = sweeps::DEFAULT_LADDER)]
        ladder: Vec<usize>,
        #[command(flatten)]
        ratios: RatioArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compares the measures of K1 ∪ K2 (∪ K3) with the sum over the parts.
    Additivity {
        #[arg(long, value_parser = parse_stats)]
        stats: Statistics,
        #[arg(long = "K1")]
        k1: String,
        #[arg(long = "K2")]
        k2: String,
        #[arg(long = "K3")]
        k3: Option<String>,
        #[arg(long)]
        x1: f64,
        /// One report per value.
        #[arg(long, value_delimiter = ',', default_values_t = [0.125, 0.25, 0.375])]
        x2: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long, value_delimiter = ',', default_values_t = sweeps::DEFAULT_LADDER)]
        ladder: Vec<usize>,
        /// Largest deviation allowed at the top of the ladder, in nats.
        #[arg(long, default_value_t = DEFAULT_ADDITIVITY_BOUND)]
        bound: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Pipeline against exact diagonalization on small chains.
    OracleCheck {
        #[arg(long, value_enum, default_value_t = Suite::Small)]
        suite: Suite,
        #[arg(long, default_value_t = ORACLE_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_stats(s: &str) -> Result<Statistics, String> {
    s.parse().map_err(|e: QentError| e.to_string())
}

fn parse_parameter(s: &str) -> Result<SweepParameter, String> {
    s.parse().map_err(|e: QentError| e.to_string())
}

/// A fully validated command.
#[derive(Debug, Clone)]
pub enum Command {
    Measure {
        stats: Statistics,
        k: MomentumMultiset,
        geometry: Geometry,
    },
    Classical {
        state: ClassicalState,
    },
    Sweep {
        state: StateSpec,
        template: GeometryTemplate,
        sites: usize,
        parameter: SweepParameter,
        values: Vec<f64>,
    },
    Extrapolate {
        state: StateSpec,
        template: GeometryTemplate,
        ladder: Vec<usize>,
    },
    Additivity {
        stats: Statistics,
        parts: Vec<MomentumSpec>,
        templates: Vec<GeometryTemplate>,
        ladder: Vec<usize>,
        bound: f64,
    },
    OracleCheck {
        cases: Vec<OracleCase>,
        tol: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub exec: Execution,
}

#[derive(Debug)]
pub enum CliError {
    /// Rejected by the flag parser; carries its own exit code and rendering.
    Args(clap::Error),
    /// Invalid input, exit 2.
    Invalid(String),
    /// Numerical or I/O failure, exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Args(e) => e.exit_code(),
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Args(e) => write!(f, "{e}"),
            CliError::Invalid(m) | CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn is_input_error(e: &QentError) -> bool {
    matches!(
        e,
        QentError::Parse(_)
            | QentError::Geometry(_)
            | QentError::NonCommensurate(_)
            | QentError::PauliExclusion { .. }
            | QentError::InvalidMultiset(_)
            | QentError::InvalidSplitting(_)
    )
}

impl From<QentError> for CliError {
    fn from(e: QentError) -> Self {
        if is_input_error(&e) {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Failed(e.to_string())
        }
    }
}

fn flag(name: &str) -> impl Fn(QentError) -> CliError + '_ {
    move |e| {
        if is_input_error(&e) {
            CliError::Invalid(format!("{name}: {e}"))
        } else {
            CliError::Failed(format!("{name}: {e}"))
        }
    }
}

fn require(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Invalid(format!("{name} is required")))
}

fn state_spec(stats: Statistics, k: &str, name: &str) -> Result<StateSpec, CliError> {
    StateSpec::new(stats, k).map_err(flag(name))
}

fn exec_of(o: &OutputArgs) -> Execution {
    if o.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Args)?;
    let (command, output, default_format) = match cli.command {
        Cmd::Measure {
            stats,
            k,
            sites,
            ell1,
            d,
            ell2,
            ratios,
            output,
        } => {
            let geometry = match (ell1, d, ell2) {
                (Some(ell1), Some(d), Some(ell2)) => Geometry::new(sites, ell1, d, ell2),
                _ => Geometry::from_ratios(
                    sites,
                    require("--x1", ratios.x1)?,
                    require("--x2", ratios.x2)?,
                    ratios.y,
                ),
            }
            .map_err(flag("geometry"))?;
            let spec = state_spec(stats, &k, "--K")?;
            let k = spec.momenta.resolve(sites).map_err(flag("--K"))?;
            if stats == Statistics::Fermionic {
                k.check_fermionic().map_err(flag("--K"))?;
            }
            (
                Command::Measure { stats, k, geometry },
                output,
                Format::Json,
            )
        }
        Cmd::Classical { x1, x2, r, output } => {
            let state = ClassicalState { r, x1, x2 };
            if r == 0 || !(0.0..=1.0).contains(&x1) || !(0.0..=1.0).contains(&x2) || x1 + x2 > 1.0 {
                return Err(CliError::Invalid(format!(
                    "--x1/--x2/--r: need r >= 1, x1, x2 >= 0 and x1 + x2 <= 1 (got r={r}, x1={x1}, x2={x2})"
                )));
            }
            (Command::Classical { state }, output, Format::Json)
        }
        Cmd::Sweep {
            stats,
            k,
            sites,
            param,
            values,
            ratios,
            output,
        } => {
            let state = state_spec(stats, &k, "--K")?;
            let x1 = require("--x1", ratios.x1)?;
            let x2 = match param {
                SweepParameter::X2 => ratios.x2.unwrap_or(0.0),
                _ => require("--x2", ratios.x2)?,
            };
            let sites = match param {
                SweepParameter::L => 0,
                _ => sites.ok_or_else(|| CliError::Invalid("--L is required".into()))?,
            };
            if param == SweepParameter::L && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(CliError::Invalid(
                    "--values: lattice sizes must be positive integers".into(),
                ));
            }
            let template = GeometryTemplate::new(x1, x2, ratios.y);
            (
                Command::Sweep {
                    state,
                    template,
                    sites,
                    parameter: param,
                    values,
                },
                output,
                Format::Csv,
            )
        }
        Cmd::Extrapolate {
            stats,
            k,
            ladder,
            ratios,
            output,
        } => {
            let state = state_spec(stats, &k, "--K")?;
            let template = GeometryTemplate::new(
                require("--x1", ratios.x1)?,
                require("--x2", ratios.x2)?,
                ratios.y,
            );
            let usable = ladder
                .iter()
                .filter(|&&l| template.at(l).is_ok() && state.momenta.resolve(l).is_ok())
                .count();
            if usable < 3 {
                return Err(CliError::Invalid(format!(
                    "--ladder: {usable} of {ladder:?} are commensurate with the geometry and K, the fit needs 3"
                )));
            }
            (
                Command::Extrapolate {
                    state,
                    template,
                    ladder,
                },
                output,
                Format::Csv,
            )
        }
        Cmd::Additivity {
            stats,
            k1,
            k2,
            k3,
            x1,
            x2,
            y,
            ladder,
            bound,
            output,
        } => {
            let mut parts = vec![
                state_spec(stats, &k1, "--K1")?.momenta,
                state_spec(stats, &k2, "--K2")?.momenta,
            ];
            if let Some(k3) = k3 {
                parts.push(state_spec(stats, &k3, "--K3")?.momenta);
            }
            if bound.is_nan() || bound <= 0.0 {
                return Err(CliError::Invalid(format!(
                    "--bound: must be positive, got {bound}"
                )));
            }
            let templates = x2
                .iter()
                .map(|&x2| GeometryTemplate::new(x1, x2, y))
                .collect();
            (
                Command::Additivity {
                    stats,
                    parts,
                    templates,
                    ladder,
                    bound,
                },
                output,
                Format::Csv,
            )
        }
        Cmd::OracleCheck { suite, tol, output } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err(CliError::Invalid(format!(
                    "--tol: must be positive, got {tol}"
                )));
            }
            let cases = match suite {
                Suite::Small => oracle::small_suite(),
            };
            (Command::OracleCheck { cases, tol }, output, Format::Csv)
        }
    };
    Ok(RunConfig {
        command,
        format: output.format.unwrap_or(default_format),
        exec: exec_of(&output),
        out: output.out,
    })
}

/// Everything a command produces, before anything is written.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub body: String,
    pub summary: Vec<String>,
    /// False when a verification command found a failure.
    pub verified: bool,
}

fn check(m: &MeasureSet, what: impl fmt::Display) -> Result<(), CliError> {
    m.validate()
        .map_err(|e| CliError::Failed(format!("{what}: {e}")))
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> qent_core::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Failed(e.to_string()))
}

fn fmt_triple(m: &MeasureSet) -> String {
    format!(
        "S_R={:.6} I={:.6} E_N={:.6} gap={:.6}",
        m.reflected_entropy, m.mutual_information, m.log_negativity, m.markov_gap
    )
}

fn render_sweep(result: &SweepResult, format: Format) -> Result<String, CliError> {
    for r in &result.rows {
        check(&r.measures, format_args!("L={} K={}", r.sites, r.k))?;
    }
    // The fitted limit is an estimate rather than the measure of a state, so
    // it is not held to the state invariants.
    match format {
        Format::Csv => csv_string(|b| output::write_sweep_csv(b, result)),
        Format::Json => Ok(output::to_json(result)?),
    }
}

pub fn execute(config: &RunConfig) -> Result<Rendered, CliError> {
    let exec = config.exec;
    let format = config.format;
    match &config.command {
        Command::Measure { stats, k, geometry } => {
            let m = measures::measure_state(&build_density(k, geometry, *stats)?)?;
            check(&m, "measure")?;
            let row = sweeps::SweepRow {
                value: geometry.sites() as f64,
                sites: geometry.sites(),
                x1: geometry.x1(),
                x2: geometry.x2(),
                y: geometry.y(),
                k: k.clone(),
                measures: m,
            };
            let body = match format {
                Format::Json => output::to_json(&json!({
                    "stats": stats,
                    "L": row.sites,
                    "x1": row.x1,
                    "x2": row.x2,
                    "y": row.y,
                    "K": k.to_string(),
                    "S_R": m.reflected_entropy,
                    "I": m.mutual_information,
                    "E_N": m.log_negativity,
                    "gap": m.markov_gap,
                }))?,
                Format::Csv => {
                    let result = SweepResult {
                        stats: *stats,
                        momenta: k.to_string(),
                        parameter: SweepParameter::L,
                        values: vec![row.value],
                        rows: vec![row],
                        extrapolated: None,
                    };
                    csv_string(|b| output::write_sweep_csv(b, &result))?
                }
            };
            Ok(Rendered {
                body,
                summary: vec![format!("{stats} K={k} {geometry}: {}", fmt_triple(&m))],
                verified: true,
            })
        }
        Command::Classical { state } => {
            let m = measures::measure_state(&build_classical_density(state)?)?;
            check(&m, "classical")?;
            if state.r == 1 {
                let closed = measures::classical_closed_forms(state.x1, state.x2);
                let diff = m.max_abs_diff(&closed);
                if diff > 1e-9 {
                    return Err(CliError::Failed(format!(
                        "invariant violated: pipeline differs from the closed forms by {diff:e}"
                    )));
                }
            }
            let body = match format {
                Format::Json => output::to_json(&m)?,
                Format::Csv => format!("S_R,I,E_N,gap\n{}\n", m_fields(&m).join(",")),
            };
            Ok(Rendered {
                body,
                summary: vec![format!(
                    "classical r={} x1={} x2={}: {}",
                    state.r,
                    state.x1,
                    state.x2,
                    fmt_triple(&m)
                )],
                verified: true,
            })
        }
        Command::Sweep {
            state,
            template,
            sites,
            parameter,
            values,
        } => {
            let result = sweeps::sweep(state, template, *sites, *parameter, values, exec)?;
            Ok(Rendered {
                body: render_sweep(&result, format)?,
                summary: vec![format!(
                    "sweep over {parameter}: {} points, {} K={}",
                    result.rows.len(),
                    state.stats,
                    state.momenta
                )],
                verified: true,
            })
        }
        Command::Extrapolate {
            state,
            template,
            ladder,
        } => {
            let result = sweeps::extrapolate_l(state, template, ladder, exec)?;
            let e = result.extrapolated.as_ref().expect("extrapolation present");
            let used: Vec<String> = result.rows.iter().map(|r| r.sites.to_string()).collect();
            Ok(Rendered {
                body: render_sweep(&result, format)?,
                summary: vec![
                    format!(
                        "L ladder {}: {} K={}",
                        used.join(","),
                        state.stats,
                        state.momenta
                    ),
                    format!(
                        "L -> inf: {} (max fit residual {:.1e})",
                        fmt_triple(&e.limit),
                        e.max_residual
                    ),
                ],
                verified: true,
            })
        }
        Command::Additivity {
            stats,
            parts,
            templates,
            ladder,
            bound,
        } => {
            let mut reports = Vec::new();
            for t in templates {
                let rep = sweeps::additivity_report(*stats, parts, t, ladder, *bound, exec)?;
                for r in &rep.rows {
                    check(&r.joint, format_args!("L={} K={}", r.sites, r.k))?;
                }
                reports.push(rep);
            }
            let mut summary = Vec::new();
            for (t, rep) in templates.iter().zip(&reports) {
                let last = rep.rows.last().expect("non-empty ladder");
                summary.push(format!(
                    "{} x2={}: deviation at L={} dS_R={:.2e} dI={:.2e} dE_N={:.2e}, {}, {}",
                    if rep.pass { "PASS" } else { "FAIL" },
                    t.x2,
                    last.sites,
                    last.deviation[0],
                    last.deviation[1],
                    last.deviation[2],
                    if rep.non_increasing {
                        "non-increasing"
                    } else {
                        "grows with L"
                    },
                    if rep.within_bound {
                        format!("within {}", rep.bound)
                    } else {
                        format!("exceeds {}", rep.bound)
                    },
                ));
            }
            let body = match format {
                Format::Csv => csv_string(|b| output::write_additivity_csv(b, &reports))?,
                Format::Json => output::to_json(&reports)?,
            };
            Ok(Rendered {
                body,
                summary,
                verified: reports.iter().all(|r| r.pass),
            })
        }
        Command::OracleCheck { cases, tol } => {
            let mut checks = Vec::new();
            let mut summary = Vec::new();
            for (case, r) in cases.iter().zip(oracle::run_checks(cases, *tol, exec)) {
                match r {
                    Ok(c) => {
                        check(
                            &c.pipeline,
                            format_args!("{} K={} {}", case.stats, case.k, case.geometry),
                        )?;
                        check(
                            &c.oracle,
                            format_args!("oracle {} K={} {}", case.stats, case.k, case.geometry),
                        )?;
                        if !c.pass {
                            summary.push(format!(
                                "FAIL {} K={} {}: |diff| = {:e}",
                                case.stats, case.k, case.geometry, c.max_diff
                            ));
                        }
                        checks.push(c);
                    }
                    Err(e) => summary.push(format!(
                        "ERROR {} K={} {}: {e}",
                        case.stats, case.k, case.geometry
                    )),
                }
            }
            let passed = checks.iter().filter(|c| c.pass).count();
            let worst = checks.iter().map(|c| c.max_diff).fold(0.0, f64::max);
            summary.push(format!(
                "oracle-check: {passed}/{} cases within {tol:e}, max |diff| = {worst:.1e}",
                cases.len()
            ));
            let body = match format {
                Format::Csv => csv_string(|b| output::write_oracle_csv(b, &checks))?,
                Format::Json => output::to_json(&checks)?,
            };
            Ok(Rendered {
                body,
                summary,
                verified: passed == cases.len(),
            })
        }
    }
}

fn m_fields(m: &MeasureSet) -> [String; 4] {
    [
        m.reflected_entropy,
        m.mutual_information,
        m.log_negativity,
        m.markov_gap,
    ]
    .map(output::fmt_num)
}

/// Executes `config`, writes its output and summary, and returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let rendered = match execute(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &config.out {
        Some(path) => std::fs::write(path, &rendered.body),
        None => std::io::stdout().lock().write_all(rendered.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: could not write output: {e}");
        return 1;
    }
    for line in &rendered.summary {
        eprintln!("{line}");
    }
    if rendered.verified {
        0
    } else {
        1
    }
}
