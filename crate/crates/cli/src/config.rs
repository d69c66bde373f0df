//! Run configuration: command-line flags merged over an optional JSON file,
//! validated as a whole before anything is computed.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Deserialize;
use serde_json::Value;
use torsion_core::reproduce::Case;
use torsion_core::{AngleArc, SolverOptions, TrigPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Predict,
    Solve,
    Failpoints,
    Rectangle,
    Sweep,
    Reproduce,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::Solve => "solve",
            Command::Failpoints => "failpoints",
            Command::Rectangle => "rectangle",
            Command::Sweep => "sweep",
            Command::Reproduce => "reproduce",
        }
    }
}

/// Fail points of the torsion function on nearly-disk and rectangular domains.
///
/// ZETA is a JSON boundary profile such as '{"cos": {"2": -4, "4": 1}}' or one
/// of the presets faraway, monotone, local-min, translation, disk. Angles are
/// in radians. Output file paths are printed to stdout as JSON.
#[derive(Debug, Parser)]
#[command(name = "torsion", version)]
pub struct Cli {
    /// What to run; may instead be given as "command" in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Boundary profile ζ: JSON or a preset name.
    #[arg(long)]
    pub zeta: Option<String>,

    /// Perturbation amplitude t.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,

    /// Strictly decreasing amplitudes for `sweep`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t_list: Option<Vec<f64>>,

    /// Highest harmonic degree K of the solver basis.
    #[arg(long)]
    pub degree: Option<usize>,

    /// Boundary collocation points M.
    #[arg(long)]
    pub samples: Option<usize>,

    /// Largest accepted boundary residual.
    #[arg(long)]
    pub rtol: Option<f64>,

    /// Raise the degree up to this value until the residual meets rtol.
    #[arg(long)]
    pub max_degree: Option<usize>,

    /// Boundary samples written to profile CSVs.
    #[arg(long)]
    pub profile_samples: Option<usize>,

    /// Search arc start (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub arc_start: Option<f64>,

    /// Search arc end (radians).
    #[arg(long, allow_hyphen_values = true)]
    pub arc_end: Option<f64>,

    /// Rectangle half-length L.
    #[arg(long)]
    pub length: Option<f64>,

    /// Rectangle half-width l.
    #[arg(long)]
    pub width: Option<f64>,

    /// Minimum number of rectangle series terms.
    #[arg(long)]
    pub terms: Option<usize>,

    /// Samples per rectangle side.
    #[arg(long)]
    pub side_samples: Option<usize>,

    /// Case for `reproduce`: faraway, monotone, rectangle, local-min, translation.
    #[arg(long)]
    pub case: Option<String>,

    /// Output directory.
    #[arg(long, env = "TORSION_OUT")]
    pub out: Option<PathBuf>,

    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,

    /// Worker threads for sweeps (default: logical processors).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Show angles in degrees in the summary on stderr (files stay in radians).
    #[arg(long)]
    pub degrees: bool,
}

/// Settings accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub zeta: Option<Value>,
    pub t: Option<f64>,
    pub t_list: Option<Vec<f64>>,
    pub degree: Option<usize>,
    pub samples: Option<usize>,
    pub rtol: Option<f64>,
    pub max_degree: Option<usize>,
    pub profile_samples: Option<usize>,
    pub arc: Option<[f64; 2]>,
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub terms: Option<usize>,
    pub side_samples: Option<usize>,
    pub case: Option<String>,
    pub out: Option<PathBuf>,
    pub force: Option<bool>,
    pub jobs: Option<usize>,
}

/// Fully validated settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub zeta: Option<TrigPolynomial>,
    pub t: Option<f64>,
    pub t_list: Vec<f64>,
    pub solver: SolverOptions,
    pub max_degree: Option<usize>,
    pub profile_samples: usize,
    pub arc: AngleArc,
    pub length: f64,
    pub width: f64,
    pub terms: usize,
    pub side_samples: usize,
    pub case: Option<Case>,
    pub out: PathBuf,
    pub force: bool,
    pub jobs: Option<usize>,
    pub degrees: bool,
}

pub const PRESETS: [&str; 5] = ["faraway", "monotone", "local-min", "translation", "disk"];

pub fn preset(name: &str) -> Option<TrigPolynomial> {
    match name {
        "disk" => Some(TrigPolynomial::zero()),
        _ => name.parse::<Case>().ok().and_then(Case::zeta),
    }
}

fn parse_zeta(value: &Value) -> Result<TrigPolynomial, String> {
    match value {
        Value::String(s) => {
            let trimmed = s.trim();
            if trimmed.starts_with('{') {
                let v: Value = serde_json::from_str(trimmed).map_err(|e| format!("zeta: {e}"))?;
                parse_zeta(&v)
            } else {
                preset(trimmed).ok_or_else(|| format!("zeta: unknown preset '{s}' (expected one of {})", PRESETS.join(", ")))
            }
        }
        other => serde_json::from_value(other.clone()).map_err(|e| format!("zeta: {e}")),
    }
}

/// Which settings each command reads; anything else supplied is an error.
fn allowed(command: Command) -> &'static [&'static str] {
    match command {
        Command::Predict => &["zeta", "t", "arc"],
        Command::Solve => &["zeta", "t", "degree", "samples", "rtol", "max_degree", "profile_samples"],
        Command::Failpoints => &["zeta", "t", "degree", "samples", "rtol", "max_degree", "profile_samples", "arc"],
        Command::Sweep => &["zeta", "t_list", "degree", "samples", "rtol", "max_degree", "arc"],
        Command::Rectangle => &["length", "width", "terms", "side_samples"],
        Command::Reproduce => &["case"],
    }
}

impl RunConfig {
    /// Merges flags over the file settings and validates the result,
    /// collecting every problem into one message.
    pub fn resolve(cli: Cli, file: FileConfig) -> Result<RunConfig, String> {
        let mut errors: Vec<String> = Vec::new();
        let command = cli.command.or(file.command);

        let zeta_raw = cli.zeta.map(Value::String).or(file.zeta);
        let t = cli.t.or(file.t);
        let t_list = cli.t_list.or(file.t_list);
        let degree = cli.degree.or(file.degree);
        let samples = cli.samples.or(file.samples);
        let rtol = cli.rtol.or(file.rtol);
        let max_degree = cli.max_degree.or(file.max_degree);
        let profile_samples = cli.profile_samples.or(file.profile_samples);
        let arc_start = cli.arc_start.or(file.arc.map(|a| a[0]));
        let arc_end = cli.arc_end.or(file.arc.map(|a| a[1]));
        let length = cli.length.or(file.length);
        let width = cli.width.or(file.width);
        let terms = cli.terms.or(file.terms);
        let side_samples = cli.side_samples.or(file.side_samples);
        let case_raw = cli.case.or(file.case);
        let jobs = cli.jobs.or(file.jobs);

        let Some(command) = command else {
            return Err("no command given (expected one of predict, solve, failpoints, rectangle, sweep, reproduce)".into());
        };

        let supplied: Vec<(&str, bool)> = vec![
            ("zeta", zeta_raw.is_some()),
            ("t", t.is_some()),
            ("t_list", t_list.is_some()),
            ("degree", degree.is_some()),
            ("samples", samples.is_some()),
            ("rtol", rtol.is_some()),
            ("max_degree", max_degree.is_some()),
            ("profile_samples", profile_samples.is_some()),
            ("arc", arc_start.is_some() || arc_end.is_some()),
            ("length", length.is_some()),
            ("width", width.is_some()),
            ("terms", terms.is_some()),
            ("side_samples", side_samples.is_some()),
            ("case", case_raw.is_some()),
        ];
        let allowed = allowed(command);
        for (name, present) in &supplied {
            if *present && !allowed.contains(name) {
                errors.push(format!("{name} is not used by '{}'", command.name()));
            }
        }
        let needs = |name: &str| allowed.contains(&name);

        let zeta = match (&zeta_raw, needs("zeta")) {
            (Some(v), true) => parse_zeta(v).map_err(|e| errors.push(e)).ok(),
            (None, true) => {
                errors.push(format!("'{}' requires zeta", command.name()));
                None
            }
            _ => None,
        };

        let t_required = matches!(command, Command::Solve | Command::Failpoints);
        if t_required && t.is_none() {
            errors.push(format!("'{}' requires t", command.name()));
        }
        if let Some(t) = t {
            if !t.is_finite() {
                errors.push(format!("t must be finite, got {t}"));
            }
        }

        let t_list = t_list.unwrap_or_default();
        if command == Command::Sweep {
            if t_list.is_empty() {
                errors.push("'sweep' requires t_list".into());
            } else if t_list.iter().any(|&t| !(t > 0.0 && t.is_finite())) || t_list.windows(2).any(|w| w[1] >= w[0]) {
                errors.push(format!("t_list must be strictly decreasing positive values, got {t_list:?}"));
            }
        }

        let defaults = SolverOptions::default();
        let solver = SolverOptions {
            degree: degree.unwrap_or(defaults.degree),
            collocation_points: samples.unwrap_or(defaults.collocation_points),
            rtol: rtol.unwrap_or(defaults.rtol),
            condition_limit: defaults.condition_limit,
        };
        if solver.degree == 0 {
            errors.push("degree must be positive".into());
        }
        if solver.collocation_points < 4 * solver.degree + 2 {
            errors.push(format!(
                "samples must be at least 4·degree + 2 = {}, got {}",
                4 * solver.degree + 2,
                solver.collocation_points
            ));
        }
        if !(solver.rtol > 0.0) {
            errors.push(format!("rtol must be positive, got {}", solver.rtol));
        }
        if let Some(m) = max_degree {
            if m < solver.degree {
                errors.push(format!("max_degree {m} is below degree {}", solver.degree));
            }
        }
        let profile_samples = profile_samples.unwrap_or(1024);
        if profile_samples < 16 {
            errors.push(format!("profile_samples must be at least 16, got {profile_samples}"));
        }

        let arc = match (arc_start, arc_end) {
            (None, None) => AngleArc::full(),
            (Some(a), Some(b)) => AngleArc::new(a, b).unwrap_or_else(|e| {
                errors.push(format!("arc: {e}"));
                AngleArc::full()
            }),
            _ => {
                errors.push("arc needs both a start and an end".into());
                AngleArc::full()
            }
        };

        let (length, width) = if command == Command::Rectangle {
            match (length, width) {
                (Some(big), Some(small)) => {
                    if let Err(e) = torsion_core::RectangleDomain::new(big, small) {
                        errors.push(e.to_string());
                    }
                    (big, small)
                }
                _ => {
                    errors.push("'rectangle' requires length and width".into());
                    (f64::NAN, f64::NAN)
                }
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        let terms = terms.unwrap_or(torsion_core::rectangle::DEFAULT_TERMS);
        if terms < torsion_core::rectangle::MIN_TERMS {
            errors.push(format!("terms must be at least {}, got {terms}", torsion_core::rectangle::MIN_TERMS));
        }
        let side_samples = side_samples.unwrap_or(257);
        if side_samples < torsion_core::rectangle::MIN_SIDE_SAMPLES {
            errors.push(format!(
                "side_samples must be at least {}, got {side_samples}",
                torsion_core::rectangle::MIN_SIDE_SAMPLES
            ));
        }

        let case = match (case_raw, command) {
            (Some(name), Command::Reproduce) => name.parse::<Case>().map_err(|e| errors.push(e.to_string())).ok(),
            (None, Command::Reproduce) => {
                errors.push("'reproduce' requires case".into());
                None
            }
            _ => None,
        };

        if jobs == Some(0) {
            errors.push("jobs must be positive".into());
        }

        if !errors.is_empty() {
            return Err(errors.join("; "));
        }
        Ok(RunConfig {
            command,
            zeta,
            t,
            t_list,
            solver,
            max_degree,
            profile_samples,
            arc,
            length,
            width,
            terms,
            side_samples,
            case,
            out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            force: cli.force || file.force.unwrap_or(false),
            jobs,
            degrees: cli.degrees,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("torsion").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn presets_and_json_profiles() {
        let c = RunConfig::resolve(cli(&["predict", "--zeta", "faraway"]), FileConfig::default()).unwrap();
        assert_eq!(c.zeta.unwrap(), TrigPolynomial::from_modes(&[(2, -4.0), (4, 1.0)], &[]));
        let c = RunConfig::resolve(cli(&["predict", "--zeta", r#"{"cos": {"1": 1}}"#]), FileConfig::default()).unwrap();
        assert_eq!(c.zeta.unwrap(), TrigPolynomial::cos_mode(1, 1.0));
    }

    #[test]
    fn errors_are_aggregated() {
        let err = RunConfig::resolve(
            cli(&["solve", "--zeta", "nope", "--degree", "70", "--length", "2"]),
            FileConfig::default(),
        )
        .unwrap_err();
        assert!(err.contains("unknown preset"));
        assert!(err.contains("requires t"));
        assert!(err.contains("length is not used"));
        assert!(err.contains("samples must be at least"));
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = serde_json::from_str(r#"{"command": "solve", "zeta": {"cos": {"2": 1}}, "t": 0.1}"#).unwrap();
        let c = RunConfig::resolve(cli(&["--t", "0.01"]), file).unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.t, Some(0.01));
    }

    #[test]
    fn file_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"comand": "solve"}"#).is_err());
    }

    #[test]
    fn sweep_list_must_decrease() {
        let err = RunConfig::resolve(cli(&["sweep", "--zeta", "faraway", "--t-list", "0.01,0.02"]), FileConfig::default())
            .unwrap_err();
        assert!(err.contains("strictly decreasing"));
    }
}
