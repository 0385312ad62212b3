//! The `oneshot` command line: every input file is parsed and validated
//! before any solver runs, artifacts are written atomically, and failures
//! exit with 2 (validation), 3 (I/O) or 4 (non-convergence) after printing
//! an error report as JSON on stderr.

pub mod error;
pub mod plot;
pub mod schema;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use oneshot_core::design::{self, DesignMethod, DesignResult};
use oneshot_core::divergences::{self, LaserParams};
use oneshot_core::hyptest::{self, CompositeOptions, TestCertificate};
use oneshot_core::workflows::{self, LaserSetup, MeasuredDataCase, MeteorScenario};
use oneshot_core::{limits, numfmt};
use serde::Serialize;

pub use error::{CliError, CliResult};
use plot::{PlotSpec, Table};
use schema::{DataJson, DistributionJson, EnergyJson};

pub const MAX_DIM_VAR: &str = "ONESHOT_MAX_DIM";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Destination file (written via temp file + rename); stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal test for a simple null against a simple alternative.
    Solve {
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        alt: PathBuf,
        #[arg(long)]
        epsilon: f64,
    },
    /// Composite test with a dual certificate.
    Composite {
        #[arg(long)]
        nulls: PathBuf,
        #[arg(long)]
        alts: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        gap_tol: f64,
    },
    /// Block rates (1/n) D_H^ε(P^⊗n ‖ Q^⊗n) for n = 1..nmax.
    Stein {
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        alt: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        nmax: usize,
    },
    /// Source design maximizing D(N(P*) ‖ N(P_D)) over a polytope.
    Design {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        star: PathBuf,
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Energy-budgeted design minimizing the type-II error.
    Inscribed {
        #[arg(long)]
        noise: PathBuf,
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        energy: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        epsilon: f64,
    },
    /// Type-II error of a k-event excess over Poisson background counts.
    Meteor {
        #[arg(long, value_delimiter = ',', default_values_t = [3.0, 6.0])]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.01, 0.001])]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 15)]
        kmax: usize,
        #[arg(long, default_value_t = oneshot_core::distributions::DEFAULT_FOLD_TOL)]
        fold_tol: f64,
    },
    /// KL divergence of the pulsed-laser model across pulse powers.
    Laser {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        c: usize,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        /// Defaults to every admissible integer power.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        powers: Vec<usize>,
    },
    /// Applies the optimal test against each model to an observed outcome.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        null: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Uniform draw in [0, 1); overrides the data file's `u`.
        #[arg(long)]
        u: Option<f64>,
    },
    /// Line plot of a CSV table.
    Plot {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        series: Vec<String>,
        #[arg(long)]
        log_y: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Gradient,
}

#[derive(Debug, Parser)]
#[command(
    name = "oneshot",
    version,
    about = "One-shot hypothesis testing for detection problems"
)]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: Output,
}

/// Reads `ONESHOT_MAX_DIM` and applies it to the core size caps.
pub fn apply_env_limits() -> CliResult<()> {
    match std::env::var(MAX_DIM_VAR) {
        Ok(v) => {
            let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::validation(format!(
                    "{MAX_DIM_VAR} must be a positive integer, got {v:?}"
                ))
            })?;
            limits::set_max_dim(n);
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(CliError::validation(format!("{MAX_DIM_VAR}: {e}"))),
    }
}

fn resolve_format(
    output: &Output,
    default: Format,
    allowed: &[Format],
    command: &str,
) -> CliResult<Format> {
    let inferred = output
        .out
        .as_deref()
        .and_then(|p| match p.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "svg" => Some(Format::Svg),
            _ => None,
        });
    let f = output.format.or(inferred).unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        let name = f
            .to_possible_value()
            .map(|v| v.get_name().to_owned())
            .unwrap_or_default();
        Err(CliError::validation(format!(
            "{command} cannot write {name} output"
        )))
    }
}

/// Writes `contents` to `path` through a sibling temp file and a rename, or
/// to stdout when no path is given.
pub fn write_artifact(path: Option<&Path>, contents: &str) -> CliResult<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(contents.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(|e| CliError::validation(format!("cannot encode output: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct DesignJson {
    method: DesignMethod,
    #[serde(with = "numfmt::extended")]
    objective: f64,
    iterations: usize,
    certified_optimal: bool,
    best_device: DistributionJson,
}

impl From<&DesignResult> for DesignJson {
    fn from(r: &DesignResult) -> Self {
        Self {
            method: r.method,
            objective: r.objective,
            iterations: r.iterations,
            certified_optimal: r.certified_optimal,
            best_device: DistributionJson::from_distribution(&r.best_device),
        }
    }
}

#[derive(Serialize)]
struct InscribedJson {
    design: DesignJson,
    certificate: TestCertificate,
}

#[derive(Serialize)]
struct AnalyzeJson {
    observed: usize,
    epsilon: f64,
    u: Option<f64>,
    verdicts: Vec<workflows::ModelVerdict>,
}

fn design_csv(r: &DesignResult) -> String {
    let mut s = String::from("outcome,p\n");
    for (i, p) in r.best_device.mass().iter().enumerate() {
        s.push_str(&format!("{i},{}\n", numfmt::sig12(*p)));
    }
    s
}

fn table_output(
    csv: String,
    format: Format,
    json: impl FnOnce() -> CliResult<String>,
    plot: PlotSpec,
) -> CliResult<String> {
    match format {
        Format::Csv => Ok(csv),
        Format::Json => json(),
        Format::Svg => plot::plot_svg(&Table::parse(&csv)?, &plot),
    }
}

fn spec(x: &str, y: &[&str], series: &[&str], log_y: bool) -> PlotSpec {
    PlotSpec {
        x: x.into(),
        y: y.iter().map(|s| s.to_string()).collect(),
        series: series.iter().map(|s| s.to_string()).collect(),
        log_y,
    }
}

/// Runs one invocation and returns the artifact text.
pub fn render(inv: &Invocation) -> CliResult<String> {
    use Format::*;
    let out = &inv.output;
    match &inv.command {
        Command::Solve { null, alt, epsilon } => {
            resolve_format(out, Json, &[Json], "solve")?;
            let (p0, p1) = (
                schema::load_hypothesis(null)?,
                schema::load_hypothesis(alt)?,
            );
            to_json(&hyptest::solve(&p0, &p1, *epsilon)?)
        }
        Command::Composite {
            nulls,
            alts,
            epsilon,
            max_iter,
            gap_tol,
        } => {
            resolve_format(out, Json, &[Json], "composite")?;
            let (n, a) = (
                schema::load_hypotheses(nulls)?,
                schema::load_hypotheses(alts)?,
            );
            let opts = CompositeOptions {
                max_iterations: *max_iter,
                gap_tol: *gap_tol,
                ..CompositeOptions::default()
            };
            to_json(&hyptest::solve_composite(&n, &a, *epsilon, &opts)?)
        }
        Command::Stein {
            null,
            alt,
            epsilon,
            nmax,
        } => {
            let f = resolve_format(out, Csv, &[Csv, Json, Svg], "stein")?;
            let (p0, p1) = (
                schema::load_hypothesis(null)?,
                schema::load_hypothesis(alt)?,
            );
            let curve = divergences::stein_rate_curve(&p0, &p1, *epsilon, *nmax)?;
            table_output(
                curve.to_csv(),
                f,
                || to_json(&curve),
                spec("n", &["rate_bits", "reference_bits"], &[], false),
            )
        }
        Command::Design {
            channel,
            star,
            polytope,
            method,
            restarts,
            seed,
        } => {
            let f = resolve_format(out, Json, &[Json, Csv], "design")?;
            let ch = schema::load_classical_channel(channel)?;
            let star = schema::load_distribution(star)?;
            let poly = schema::load_polytope(polytope)?;
            let r = match method {
                Method::Exact => design::optimize_source_exact(&ch, &star, &poly)?,
                Method::Gradient => {
                    design::optimize_source_gradient(&ch, &star, &poly, *restarts, *seed)?
                }
            };
            match f {
                Csv => Ok(design_csv(&r)),
                _ => to_json(&DesignJson::from(&r)),
            }
        }
        Command::Inscribed {
            noise,
            null,
            energy,
            budget,
            epsilon,
        } => {
            resolve_format(out, Json, &[Json], "inscribed")?;
            let ch = schema::load_classical_channel(noise)?;
            let p0 = schema::load_distribution(null)?;
            let e: EnergyJson = schema::load(energy)?;
            let (r, cert) = design::inscribed_matter_design(&ch, &p0, *epsilon, &e.a, *budget)?;
            to_json(&InscribedJson {
                design: DesignJson::from(&r),
                certificate: cert,
            })
        }
        Command::Meteor {
            lambdas,
            epsilons,
            kmax,
            fold_tol,
        } => {
            let f = resolve_format(out, Csv, &[Csv, Json, Svg], "meteor")?;
            let s = MeteorScenario {
                lambda_values: lambdas.clone(),
                epsilon_values: epsilons.clone(),
                k_values: (0..=*kmax).collect(),
                fold_tol: *fold_tol,
            };
            s.validate()?;
            let rows = workflows::meteor_experiment(&s)?;
            table_output(
                workflows::meteor_csv(&rows),
                f,
                || to_json(&rows),
                spec("k", &["beta"], &["lambda", "epsilon"], true),
            )
        }
        Command::Laser {
            g,
            s,
            c,
            q,
            delta,
            n,
            powers,
        } => {
            let f = resolve_format(out, Csv, &[Csv, Json, Svg], "laser")?;
            let setup = LaserSetup {
                g: *g,
                s: *s,
                c: *c,
                q: *q,
                delta: *delta,
                n: *n,
            };
            let powers = if powers.is_empty() {
                LaserParams::admissible_powers(*c, *s, *g)
            } else {
                powers.clone()
            };
            if powers.is_empty() {
                return Err(CliError::validation(
                    "no admissible powers for these settings",
                ));
            }
            let rows = workflows::laser_experiment(&setup, &powers)?;
            table_output(
                workflows::laser_csv(&rows),
                f,
                || to_json(&rows),
                spec("power", &["kl_bits", "reference_bits"], &[], false),
            )
        }
        Command::Analyze {
            data,
            null,
            models,
            epsilon,
            u,
        } => {
            resolve_format(out, Json, &[Json], "analyze")?;
            let d: DataJson = schema::load(data)?;
            let p0 = schema::load_distribution(null)?;
            let qs = schema::load_distributions(models)?;
            let observed = d.observed_index(p0.space())?;
            let u = u.or(d.u);
            let case = MeasuredDataCase::new(observed, p0, qs, *epsilon)?;
            let verdicts = workflows::analyze_measured_data(&case, u)?;
            to_json(&AnalyzeJson {
                observed,
                epsilon: *epsilon,
                u,
                verdicts,
            })
        }
        Command::Plot {
            table,
            x,
            y,
            series,
            log_y,
        } => {
            resolve_format(out, Svg, &[Svg], "plot")?;
            let t = Table::parse(&schema::read_text(table)?)?;
            plot::plot_svg(
                &t,
                &PlotSpec {
                    x: x.clone(),
                    y: y.clone(),
                    series: series.clone(),
                    log_y: *log_y,
                },
            )
        }
    }
}

pub fn run(inv: &Invocation) -> CliResult<()> {
    apply_env_limits()?;
    let text = render(inv)?;
    write_artifact(inv.output.out.as_deref(), &text)
}
