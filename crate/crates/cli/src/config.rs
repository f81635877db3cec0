//! Command-line and config-file parsing.
//!
//! Every option can come from three places, in strictly decreasing
//! precedence: an explicit CLI flag, a `key = value` line in the `--config`
//! file, and (for the seed only) the `STOCHWAVE_SEED` environment variable.
//! Whatever remains unset falls back to the desk-scale defaults — small
//! enough that a full study runs in minutes — or, under `--paper-scale`, to
//! the full-scale settings (N=2¹⁰, reference 2¹² steps, 1000 samples).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::experiments::Functional;
use stochwave_core::integrator::SchemeKind;

pub const ENV_SEED: &str = "STOCHWAVE_SEED";

/// Desk-scale defaults: modes, reference steps, samples.
pub const DESK_SCALE: (usize, usize, usize) = (256, 2048, 200);
/// `--paper-scale` defaults: modes, reference steps, samples.
pub const PAPER_SCALE: (usize, usize, usize) = (1024, 4096, 1000);

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("config file line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("bad value for {key}: {value:?} ({expected})")]
    BadValue { key: &'static str, value: String, expected: &'static str },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must not be empty")]
    EmptyList(&'static str),
    #[error("cannot read config file {path}: {source}")]
    FileRead { path: PathBuf, source: std::io::Error },
    #[error("output path {path} is not writable: {source}")]
    OutputNotWritable { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Study(#[from] crate::experiments::StudyError),
    #[error(transparent)]
    Core(#[from] stochwave_core::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "stochwave",
    version,
    about = "Stochastic wave equation integrators and convergence-rate studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Integrate one sample path and print final-state functionals.
    Simulate(CommonArgs),
    /// Pathwise RMS convergence study against a fine shared-path reference.
    StrongRate(CommonArgs),
    /// Functional-expectation convergence study (coupled differences by default).
    WeakRate(CommonArgs),
    /// Weak values for all three schemes at tau = 2^-3..2^-6, table-shaped.
    Table1(CommonArgs),
    /// Run the runtime invariant suite and exit nonzero on any failure.
    Selftest(CommonArgs),
}

impl CliCommand {
    fn kind(&self) -> Command {
        match self {
            CliCommand::Simulate(_) => Command::Simulate,
            CliCommand::StrongRate(_) => Command::StrongRate,
            CliCommand::WeakRate(_) => Command::WeakRate,
            CliCommand::Table1(_) => Command::Table1,
            CliCommand::Selftest(_) => Command::Selftest,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            CliCommand::Simulate(a)
            | CliCommand::StrongRate(a)
            | CliCommand::WeakRate(a)
            | CliCommand::Table1(a)
            | CliCommand::Selftest(a) => a,
        }
    }
}

/// Raw option layer: everything is optional so the resolver can tell an
/// explicit flag from an omission.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Plain-text config file: one `key = value` per line, `#` comments.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem preset name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Galerkin modes N.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Schemes to run, comma-separated (ee, lie, cn).
    #[arg(long, value_delimiter = ',')]
    pub scheme: Option<Vec<String>>,
    /// Step counts, comma-separated; a single count for simulate.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    /// Reference step count for studies.
    #[arg(long)]
    pub ref_steps: Option<usize>,
    /// Reference scheme for studies.
    #[arg(long)]
    pub ref_scheme: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// RNG seed; the STOCHWAVE_SEED env var is the lowest-precedence source.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weak-study functional: paper_phi, h_norm_sq, or mode_k(k).
    #[arg(long)]
    pub functional: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Cap on worker threads for sample-parallel studies.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also record the sup-over-grid error diagnostic (strong studies).
    #[arg(long)]
    pub sup_norm: bool,
    /// Weak studies: independent paths per cell instead of coupled differences.
    #[arg(long)]
    pub uncoupled: bool,
    /// Emit a gnuplot script next to the CSV.
    #[arg(long)]
    pub emit_plot: bool,
    /// Suppress the generated_unix timestamp comment for byte-stable CSV.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Full-scale defaults: N=1024, reference 2^12 steps, 1000 samples.
    #[arg(long)]
    pub paper_scale: bool,
    /// Write the driving Brownian path to this file (simulate only).
    #[arg(long)]
    pub dump_path: Option<PathBuf>,
    /// Write the full coefficient trajectory as CSV to this file (simulate only).
    #[arg(long)]
    pub dump_trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    StrongRate,
    WeakRate,
    Table1,
    Selftest,
}

/// Fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub preset: String,
    pub n_modes: usize,
    pub schemes: Vec<SchemeKind>,
    pub steps: Vec<usize>,
    pub ref_scheme: SchemeKind,
    pub ref_steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub functional: Functional,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub sup_norm: bool,
    pub coupled: bool,
    pub emit_plot: bool,
    pub timestamp: bool,
    pub paper_scale: bool,
    pub dump_path: Option<PathBuf>,
    pub dump_trajectory: Option<PathBuf>,
}

const KNOWN_KEYS: [&str; 18] = [
    "preset",
    "modes",
    "scheme",
    "steps",
    "ref-steps",
    "ref-scheme",
    "samples",
    "seed",
    "functional",
    "output",
    "threads",
    "sup-norm",
    "uncoupled",
    "emit-plot",
    "no-timestamp",
    "paper-scale",
    "dump-path",
    "dump-trajectory",
];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Unknown keys are hard errors so typos cannot silently change a study.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>, ConfigError> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Malformed { line, text: raw.to_string() });
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct FileGet<'a>(Option<&'a HashMap<String, String>>);

impl<'a> FileGet<'a> {
    fn raw(&self, key: &'static str) -> Option<&'a str> {
        self.0.and_then(|m| m.get(key)).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(
        &self,
        key: &'static str,
        expected: &'static str,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key,
                value: s.to_string(),
                expected,
            }),
        }
    }

    fn parse_bool(&self, key: &'static str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(other) => Err(ConfigError::BadValue {
                key,
                value: other.to_string(),
                expected: "true or false",
            }),
        }
    }

    fn parse_list<T: std::str::FromStr>(
        &self,
        key: &'static str,
        expected: &'static str,
    ) -> Result<Option<Vec<T>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| ConfigError::BadValue {
                        key,
                        value: item.trim().to_string(),
                        expected,
                    })
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }
}

fn parse_schemes(names: &[String]) -> Result<Vec<SchemeKind>, ConfigError> {
    names.iter().map(|n| Ok(SchemeKind::parse(n)?)).collect()
}

/// Merges CLI args, optional config-file values, and the environment seed
/// into a validated [`RunConfig`].
pub fn resolve(
    cli: &Cli,
    file: Option<&HashMap<String, String>>,
    env_seed: Option<u64>,
) -> Result<RunConfig, ConfigError> {
    let command = cli.command.kind();
    let args = cli.command.args();
    let file = FileGet(file);

    let paper_scale = args.paper_scale || file.parse_bool("paper-scale")?.unwrap_or(false);
    let (default_modes, default_ref_steps, default_samples) =
        if paper_scale { PAPER_SCALE } else { DESK_SCALE };

    let preset = args
        .preset
        .clone()
        .or_else(|| file.raw("preset").map(str::to_string))
        .unwrap_or_else(|| {
            match command {
                Command::WeakRate | Command::Table1 => "sine_gordon_weak_additive",
                _ => "sine_gordon_strong_white",
            }
            .to_string()
        });

    let n_modes = args
        .modes
        .or(file.parse("modes", "a positive integer")?)
        .unwrap_or(default_modes);

    let scheme_names = args
        .scheme
        .clone()
        .or(file.parse_list("scheme", "scheme names")?);
    let schemes = match (&scheme_names, command) {
        // the table is always all three schemes, in its column order
        (_, Command::Table1) => vec![
            SchemeKind::LinearImplicitEuler,
            SchemeKind::CrankNicolson,
            SchemeKind::ExponentialEuler,
        ],
        (Some(names), _) => parse_schemes(names)?,
        (None, Command::StrongRate) => SchemeKind::ALL.to_vec(),
        (None, _) => vec![SchemeKind::ExponentialEuler],
    };

    let steps = match command {
        Command::Table1 => vec![8, 16, 32, 64],
        _ => args
            .steps
            .clone()
            .or(file.parse_list("steps", "positive integers")?)
            .unwrap_or_else(|| match command {
                Command::StrongRate => vec![32, 64, 128, 256],
                Command::WeakRate => vec![8, 16, 32, 64],
                _ => vec![64],
            }),
    };

    let ref_scheme = match args
        .ref_scheme
        .clone()
        .or_else(|| file.raw("ref-scheme").map(str::to_string))
    {
        Some(name) => SchemeKind::parse(&name)?,
        None => SchemeKind::CrankNicolson,
    };
    let ref_steps = args
        .ref_steps
        .or(file.parse("ref-steps", "a positive integer")?)
        .unwrap_or(default_ref_steps);

    let samples = args
        .samples
        .or(file.parse("samples", "a positive integer")?)
        .unwrap_or(default_samples);

    let seed = args
        .seed
        .or(file.parse("seed", "an unsigned integer")?)
        .or(env_seed)
        .unwrap_or(0);

    let functional = Functional::parse(
        args.functional
            .as_deref()
            .or(file.raw("functional"))
            .unwrap_or("paper_phi"),
    )?;

    let output = args
        .output
        .clone()
        .or_else(|| file.raw("output").map(PathBuf::from))
        .unwrap_or_else(|| {
            PathBuf::from(match command {
                Command::StrongRate => "strong_rate.csv",
                Command::WeakRate => "weak_rate.csv",
                _ => "table1.csv",
            })
        });

    let threads = match args.threads.or(file.parse("threads", "a positive integer")?) {
        Some(0) => return Err(ConfigError::NonPositive("threads")),
        other => other,
    };

    let config = RunConfig {
        command,
        preset,
        n_modes,
        schemes,
        steps,
        ref_scheme,
        ref_steps,
        samples,
        seed,
        functional,
        output,
        threads,
        sup_norm: args.sup_norm || file.parse_bool("sup-norm")?.unwrap_or(false),
        coupled: !(args.uncoupled || file.parse_bool("uncoupled")?.unwrap_or(false)),
        emit_plot: args.emit_plot || file.parse_bool("emit-plot")?.unwrap_or(false),
        timestamp: !(args.no_timestamp || file.parse_bool("no-timestamp")?.unwrap_or(false)),
        paper_scale,
        dump_path: args
            .dump_path
            .clone()
            .or_else(|| file.raw("dump-path").map(PathBuf::from)),
        dump_trajectory: args
            .dump_trajectory
            .clone()
            .or_else(|| file.raw("dump-trajectory").map(PathBuf::from)),
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    if config.n_modes == 0 {
        return Err(ConfigError::NonPositive("modes"));
    }
    if config.ref_steps == 0 {
        return Err(ConfigError::NonPositive("ref-steps"));
    }
    if config.samples == 0 {
        return Err(ConfigError::NonPositive("samples"));
    }
    if config.schemes.is_empty() {
        return Err(ConfigError::EmptyList("scheme"));
    }
    if config.steps.is_empty() {
        return Err(ConfigError::EmptyList("steps"));
    }
    // simulate --steps 0 is meaningful (print the initial state); studies
    // validate divisibility and positivity themselves
    if config.command != Command::Simulate && config.steps.contains(&0) {
        return Err(ConfigError::NonPositive("steps"));
    }
    Ok(())
}

/// Full front end: parse argv, load the config file if given, read the
/// environment seed, resolve and validate.
pub fn parse_invocation<I, T>(argv: I) -> Result<RunConfig, anyhow::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let file_values = match &cli.command.args().config {
        Some(path) => Some(parse_config_file(&std::fs::read_to_string(path).map_err(
            |source| ConfigError::FileRead { path: path.clone(), source },
        )?)?),
        None => None,
    };
    let env_seed = match std::env::var(ENV_SEED) {
        Ok(s) => Some(s.parse::<u64>().map_err(|_| ConfigError::BadValue {
            key: "STOCHWAVE_SEED",
            value: s,
            expected: "an unsigned integer",
        })?),
        Err(_) => None,
    };
    Ok(resolve(&cli, file_values.as_ref(), env_seed)?)
}

/// Confirms the output location can be created and written, without leaving
/// anything behind: parent directories are created, then the file is opened
/// in append mode (so an existing file is not clobbered) and removed again
/// if it did not previously exist.
pub fn check_output_writable(path: &Path) -> Result<(), ConfigError> {
    let not_writable = |source| ConfigError::OutputNotWritable {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(not_writable)?;
        }
    }
    let existed = path.exists();
    std::fs::OpenOptions::new()
        .append(true)
        .create(true)
        .open(path)
        .map_err(not_writable)?;
    if !existed {
        std::fs::remove_file(path).map_err(not_writable)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<(Cli, Option<HashMap<String, String>>), ConfigError> {
        let cli = Cli::try_parse_from(args).expect("argv parses");
        Ok((cli, None))
    }

    fn resolve_args(args: &[&str]) -> RunConfig {
        let (cli, _) = parse(args).unwrap();
        resolve(&cli, None, None).unwrap()
    }

    #[test]
    fn example_invocation_resolves() {
        let config = resolve_args(&[
            "stochwave",
            "strong-rate",
            "--preset",
            "sine_gordon_strong_white",
            "--samples",
            "200",
            "--seed",
            "42",
        ]);
        assert_eq!(config.command, Command::StrongRate);
        assert_eq!(config.preset, "sine_gordon_strong_white");
        assert_eq!(config.samples, 200);
        assert_eq!(config.seed, 42);
        assert_eq!(config.n_modes, 256);
        assert_eq!(config.ref_steps, 2048);
        assert_eq!(config.steps, vec![32, 64, 128, 256]);
        assert_eq!(config.schemes.len(), 3);
        assert!(config.coupled);
        assert!(config.timestamp);
    }

    #[test]
    fn unknown_flag_is_an_error_naming_it() {
        let err = Cli::try_parse_from(["stochwave", "strong-rate", "--foo"]).unwrap_err();
        assert!(err.to_string().contains("--foo"), "{err}");
    }

    #[test]
    fn cli_beats_file_beats_env() {
        let cli = Cli::try_parse_from(["stochwave", "strong-rate", "--samples", "200"]).unwrap();
        let file = parse_config_file("samples = 100\nseed = 9\n").unwrap();
        let config = resolve(&cli, Some(&file), Some(5)).unwrap();
        assert_eq!(config.samples, 200, "flag beats file");
        assert_eq!(config.seed, 9, "file beats env");

        let cli = Cli::try_parse_from(["stochwave", "strong-rate"]).unwrap();
        let config = resolve(&cli, None, Some(5)).unwrap();
        assert_eq!(config.seed, 5, "env used when nothing else sets the seed");
        let config = resolve(&cli, None, None).unwrap();
        assert_eq!(config.seed, 0, "default seed");
    }

    #[test]
    fn config_file_rejects_unknown_keys_and_junk() {
        let err = parse_config_file("sample = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 1, ref key } if key == "sample"));
        let err = parse_config_file("samples 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
        let err = parse_config_file("samples = many\n");
        assert!(err.is_ok(), "value errors surface at resolve time");
        let cli = Cli::try_parse_from(["stochwave", "strong-rate"]).unwrap();
        let file = parse_config_file("samples = many\n").unwrap();
        assert!(matches!(
            resolve(&cli, Some(&file), None),
            Err(ConfigError::BadValue { key: "samples", .. })
        ));
    }

    #[test]
    fn config_file_parses_comments_lists_and_bools() {
        let file = parse_config_file(
            "# study shape\nsteps = 8, 16, 32\nscheme = ee,lie\nsup-norm = true\nseed = 7 # inline\n",
        )
        .unwrap();
        let cli = Cli::try_parse_from(["stochwave", "strong-rate"]).unwrap();
        let config = resolve(&cli, Some(&file), None).unwrap();
        assert_eq!(config.steps, vec![8, 16, 32]);
        assert_eq!(
            config.schemes,
            vec![SchemeKind::ExponentialEuler, SchemeKind::LinearImplicitEuler]
        );
        assert!(config.sup_norm);
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn command_defaults_differ() {
        let weak = resolve_args(&["stochwave", "weak-rate"]);
        assert_eq!(weak.preset, "sine_gordon_weak_additive");
        assert_eq!(weak.steps, vec![8, 16, 32, 64]);
        assert_eq!(weak.schemes, vec![SchemeKind::ExponentialEuler]);

        let table = resolve_args(&["stochwave", "table1", "--scheme", "ee"]);
        assert_eq!(table.steps, vec![8, 16, 32, 64], "table shape is fixed");
        assert_eq!(table.schemes.len(), 3, "table always runs all three schemes");

        let sim = resolve_args(&["stochwave", "simulate", "--steps", "0"]);
        assert_eq!(sim.steps, vec![0], "steps 0 is allowed for simulate");
    }

    #[test]
    fn paper_scale_changes_defaults_not_explicit_values() {
        let config = resolve_args(&["stochwave", "strong-rate", "--paper-scale"]);
        assert_eq!(config.n_modes, 1024);
        assert_eq!(config.ref_steps, 4096);
        assert_eq!(config.samples, 1000);

        let config =
            resolve_args(&["stochwave", "strong-rate", "--paper-scale", "--modes", "128"]);
        assert_eq!(config.n_modes, 128, "explicit flag beats the scale bundle");
    }

    #[test]
    fn zero_parameters_are_rejected() {
        let cli = Cli::try_parse_from(["stochwave", "strong-rate", "--modes", "0"]).unwrap();
        assert!(matches!(resolve(&cli, None, None), Err(ConfigError::NonPositive("modes"))));
        let cli = Cli::try_parse_from(["stochwave", "strong-rate", "--steps", "0,32"]).unwrap();
        assert!(matches!(resolve(&cli, None, None), Err(ConfigError::NonPositive("steps"))));
        let cli = Cli::try_parse_from(["stochwave", "strong-rate", "--threads", "0"]).unwrap();
        assert!(matches!(resolve(&cli, None, None), Err(ConfigError::NonPositive("threads"))));
    }

    #[test]
    fn writability_probe_creates_dirs_and_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("nested/out.csv");
        check_output_writable(&target).unwrap();
        assert!(target.parent().unwrap().is_dir());
        assert!(!target.exists(), "probe must clean up after itself");

        // an existing file is left alone
        let existing = dir.path().join("keep.csv");
        std::fs::write(&existing, "data").unwrap();
        check_output_writable(&existing).unwrap();
        assert_eq!(std::fs::read_to_string(&existing).unwrap(), "data");
    }
}
