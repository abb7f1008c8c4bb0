//! `annular-euler`: dispersion tables, bifurcation diagrams, branch tracing,
//! stability solves and the verification suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver error,
//! 4 verification failure.

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use annular_euler::continuation::NeumannForm;
use annular_euler::verify::Mutation;
use annular_euler::ProblemKind;
use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Solver(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<annular_euler::Error> for CliError {
    fn from(e: annular_euler::Error) -> Self {
        use annular_euler::Error as E;
        match e {
            E::Config(m) => CliError::Config(m),
            E::Domain(_) | E::Geometry(_) => CliError::Config(e.to_string()),
            E::Degenerate { .. } | E::Solver(_) | E::Divergence { .. } | E::NotFound(_) => CliError::Solver(e.to_string()),
        }
    }
}

/// A list of values given as `a,b,c` or as an inclusive range `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || !(b >= a) || !h.is_finite() {
                return Err(format!("range `{s}` needs start ≤ stop and a positive step"));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            if n > 100_000 {
                return Err(format!("range `{s}` has too many points"));
            }
            // rounding keeps 0.1:0.9:0.1 on the decimal grid
            (0..=n).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("`{s}` is neither a comma list nor start:stop:step")),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(format!("`{s}` contains no usable values"));
    }
    Ok(Grid(values))
}

fn parse_lambda(s: &str) -> Result<Grid, String> {
    let g = parse_grid(s)?;
    if let Some(v) = g.0.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(format!("inner radius {v} outside (0,1)"));
    }
    Ok(g)
}

/// Mode numbers as `1,2,5` or `start:stop[:step]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modes(pub Vec<usize>);

fn parse_modes(s: &str) -> Result<Modes, String> {
    let int = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a mode number"));
    let mut out = Vec::new();
    for part in s.split(',') {
        let r: Vec<&str> = part.split(':').collect();
        match r.as_slice() {
            [k] => out.push(int(k)?),
            [a, b] => out.extend(int(a)?..=int(b)?),
            [a, b, h] => out.extend((int(a)?..=int(b)?).step_by(int(h)?.max(1))),
            _ => return Err(format!("`{part}` is not a mode range")),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(format!("mode list `{s}` must be nonempty with k ≥ 1"));
    }
    Ok(Modes(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formats(pub Vec<Format>);

fn parse_formats(s: &str) -> Result<Formats, String> {
    s.split(',').map(|t| t.trim().parse()).collect::<Result<Vec<_>, _>>().map(Formats)
}

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: annular_euler::Error| e.to_string())
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    s.parse().map_err(|e: annular_euler::Error| e.to_string())
}

fn parse_form(s: &str) -> Result<NeumannForm, String> {
    match s {
        "squared" => Ok(NeumannForm::Squared),
        "signed" => Ok(NeumannForm::Signed),
        other => Err(format!("unknown Neumann form `{other}` (expected squared or signed)")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` must be a positive number")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "annular-euler", version, about = "Free-boundary problems for constant-vorticity flows on annuli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory; tables go to stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma list of csv, json, svg
    #[arg(long, default_value = "csv", value_parser = parse_formats)]
    pub format: Formats,
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    /// Chebyshev points across the annulus
    #[arg(long, default_value_t = 48)]
    pub nr: usize,
    /// Angular points on the full circle (even)
    #[arg(long, default_value_t = 128)]
    pub ntheta: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dispersion function and its roots over a (k, λ) grid
    Dispersion {
        #[arg(long, value_parser = parse_problem, default_value = "single")]
        problem: ProblemKind,
        #[arg(long, value_parser = parse_lambda, default_value = "0.1:0.9:0.1")]
        lambda: Grid,
        #[arg(long, value_parser = parse_modes, default_value = "1,2,3,5,10,20,100")]
        k: Modes,
        /// Vorticity at which the dispersion function is evaluated (γ₂ for two-phase)
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        gamma: f64,
        /// Core vorticity of the two-phase problem
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma1: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bifurcation values as functions of λ, one curve per mode
    Diagram {
        #[arg(long, value_parser = parse_problem, default_value = "single")]
        problem: ProblemKind,
        #[arg(long, value_parser = parse_lambda, default_value = "0.1:0.9:0.1")]
        lambda: Grid,
        #[arg(long, value_parser = parse_modes, default_value = "1,2,3,5,10,20,100")]
        k: Modes,
        /// Core vorticity of the two-phase problem; values are reported as γ₂*/γ₁
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma1: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Continue the branch of nontrivial domains bifurcating in mode k
    Branch {
        #[arg(long, value_parser = parse_problem, default_value = "single")]
        problem: ProblemKind,
        #[arg(long, value_parser = parse_lambda)]
        lambda: Grid,
        #[arg(long, value_parser = parse_modes, default_value = "1")]
        k: Modes,
        /// Start the branch here instead of at the detected bifurcation value
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma1: f64,
        /// Which root of the two-boundary determinant to follow for k ≥ 2
        #[arg(long, default_value = "star", value_parser = ["star", "star_star"])]
        root: String,
        /// Step in the amplitude of cos(kθ) in the outer boundary
        #[arg(long, default_value_t = 0.002, allow_negative_numbers = true)]
        ds: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Initial cosine truncation of each free boundary
        #[arg(long, default_value_t = 16)]
        modes: usize,
        /// Largest truncation the adaptive refinement may reach
        #[arg(long)]
        max_modes: Option<usize>,
        /// Largest admissible grid residual of a branch point
        #[arg(long, default_value = "1e-9", value_parser = positive)]
        tol: f64,
        #[command(flatten)]
        resolution: ResolutionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve with perturbed Neumann data and compare with the first-order prediction
    Stability {
        #[arg(long, value_parser = parse_problem, default_value = "single")]
        problem: ProblemKind,
        #[arg(long, value_parser = parse_lambda)]
        lambda: Grid,
        /// Vorticity (γ₂ for two-phase, which defaults to γ₁)
        #[arg(long, allow_negative_numbers = true)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma1: f64,
        /// Perturbed modes of the outer Neumann data
        #[arg(long, value_parser = parse_modes, default_value = "2")]
        k: Modes,
        #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
        amplitude: f64,
        /// Amplitude on the inner boundary (two-boundary problem)
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        inner_amplitude: f64,
        /// Neumann condition as squared or signed flux (one free boundary)
        #[arg(long, value_parser = parse_form, default_value = "squared")]
        form: NeumannForm,
        #[arg(long, default_value_t = 16)]
        modes: usize,
        #[arg(long, default_value = "1e-9", value_parser = positive)]
        tol: f64,
        #[command(flatten)]
        resolution: ResolutionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the acceptance checks and report pass/fail per criterion
    Verify {
        /// Corrupt one oracle constant to show the corresponding check fails
        #[arg(long, value_parser = parse_mutation)]
        mutation: Option<Mutation>,
        /// Restrict to these criteria
        #[arg(long, value_parser = parse_modes)]
        only: Option<Modes>,
        /// Exit 0 when every failure is on the list of known unattainable checks
        #[arg(long)]
        allow_known: bool,
        #[command(flatten)]
        resolution: ResolutionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ANNULAR_EULER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("ANNULAR_EULER_THREADS=`{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn single<T: Copy + std::fmt::Display>(flag: &str, values: &[T]) -> Result<T, CliError> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::Config(format!("--{flag} takes exactly one value for this command"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Dispersion { problem, lambda, k, gamma, gamma1, output } => {
            commands::dispersion(problem, &lambda.0, &k.0, gamma, gamma1, &output)
        }
        Command::Diagram { problem, lambda, k, gamma1, output } => commands::diagram(problem, &lambda.0, &k.0, gamma1, &output),
        Command::Branch {
            problem,
            lambda,
            k,
            gamma,
            gamma1,
            root,
            ds,
            steps,
            modes,
            max_modes,
            tol,
            resolution,
            output,
        } => commands::branch(
            &commands::BranchArgs {
                problem,
                lambda: single("lambda", &lambda.0)?,
                k: single("k", &k.0)?,
                gamma,
                gamma1,
                star_star: root == "star_star",
                ds,
                steps,
                modes,
                max_modes,
                tol,
            },
            &resolution,
            &output,
        ),
        Command::Stability {
            problem,
            lambda,
            gamma,
            gamma1,
            k,
            amplitude,
            inner_amplitude,
            form,
            modes,
            tol,
            resolution,
            output,
        } => commands::stability(
            &commands::StabilityArgs {
                problem,
                lambda: single("lambda", &lambda.0)?,
                gamma,
                gamma1,
                modes_perturbed: k.0,
                amplitude,
                inner_amplitude,
                form,
                order: modes,
                tol,
            },
            &resolution,
            &output,
        ),
        Command::Verify { mutation, only, allow_known, resolution, output } => {
            commands::verify(mutation, only.map(|m| m.0).unwrap_or_default(), allow_known, &resolution, &output)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("annular-euler: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ranges_stay_on_decimals() {
        assert_eq!(parse_grid("0.1:0.9:0.1").unwrap().0, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(parse_grid("0.5").unwrap().0, vec![0.5]);
        assert_eq!(parse_grid("0.2, 0.4").unwrap().0, vec![0.2, 0.4]);
        assert!(parse_grid("0.9:0.1:0.1").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn lambda_must_lie_in_unit_interval() {
        assert!(parse_lambda("0.5,1.0").is_err());
        assert!(parse_lambda("0").is_err());
    }

    #[test]
    fn mode_lists_and_ranges() {
        assert_eq!(parse_modes("1,3:5").unwrap().0, vec![1, 3, 4, 5]);
        assert_eq!(parse_modes("2:10:4").unwrap().0, vec![2, 6, 10]);
        assert!(parse_modes("0,1").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(annular_euler::Error::Domain("x".into())).code(), 2);
        assert_eq!(CliError::from(annular_euler::Error::Divergence { iters: 1, residual: 1.0 }).code(), 3);
        assert_eq!(CliError::Verification(String::new()).code(), 4);
    }
}
