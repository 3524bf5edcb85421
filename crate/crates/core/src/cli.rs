//! Command-line configuration for the `oaspmdp` binary.
//!
//! Values come from, in decreasing precedence: explicit flags, a
//! `key = value` config file given with `--config`, the `OASPMDP_OUT`
//! environment variable (output directory only), and the scenario defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use crate::experiment::{
    aggregate, final_summary, run_scenario, write_outputs, AgentKind, ScenarioKind, ScenarioSpec,
};
use crate::par::Execution;
use crate::qlearn::LearnParams;
use crate::Error;

pub const OUT_ENV: &str = "OASPMDP_OUT";
pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_OUT: &str = "out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// `--help` or `--version`; not a failure.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
}

/// Run the baseline Q-learner and the oASP agent through a non-stationary
/// grid-world scenario and write per-episode learning curves.
#[derive(Debug, Parser)]
#[command(name = "oaspmdp", version)]
struct Args {
    /// Scenario: `walls` (wall ratio changes) or `probs` (transition changes)
    #[arg(long)]
    scenario: Option<String>,
    /// Episodes per trial
    #[arg(long)]
    episodes: Option<usize>,
    /// Independent trials averaged into the curves
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial i uses seed + i
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Step cap per episode
    #[arg(long = "max-steps")]
    max_steps: Option<usize>,
    /// Output root; results go to <out>/<scenario>/
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size as WxH
    #[arg(long)]
    grid: Option<String>,
    /// Wall ratio per phase, comma separated
    #[arg(long = "wall-ratios")]
    wall_ratios: Option<String>,
    /// Intended-direction probability per phase, comma separated
    #[arg(long)]
    probs: Option<String>,
    /// Episodes at which the environment changes, comma separated
    #[arg(long)]
    changes: Option<String>,
    /// `key = value` file with any of the options above
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run trials one after another on a single thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ScenarioSpec,
    pub seed: u64,
    /// Output root; the scenario directory is `out/<scenario>`.
    pub out: PathBuf,
    pub execution: Execution,
}

impl RunConfig {
    pub fn scenario_dir(&self) -> PathBuf {
        self.out.join(self.spec.kind.name())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| usage(format!("invalid value `{value}` for {key}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse_num(key, v)).collect()
}

fn parse_grid(value: &str) -> Result<(usize, usize), CliError> {
    let (w, h) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("invalid grid `{value}`, expected WxH")))?;
    Ok((parse_num("grid", w)?, parse_num("grid", h)?))
}

const CONFIG_KEYS: [&str; 13] = [
    "scenario",
    "episodes",
    "trials",
    "seed",
    "alpha",
    "gamma",
    "epsilon",
    "max_steps",
    "out",
    "grid",
    "wall_ratios",
    "probs",
    "changes",
];

/// Parses `key = value` lines; `#` and `%` start comments. Keys may use `-`
/// or `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split(['#', '%']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Builds a validated [`RunConfig`] from `argv` (including the program name)
/// and the value of `OASPMDP_OUT`, if set.
pub fn parse_args<I, T>(argv: I, env_out: Option<String>) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;

    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    // flag wins, then file
    let pick = |flag: Option<String>, key: &str| flag.or_else(|| file.get(key).cloned());

    let scenario_name = pick(args.scenario.clone(), "scenario").unwrap_or_else(|| "walls".into());
    let kind = ScenarioKind::from_name(&scenario_name)
        .ok_or_else(|| usage(format!("unknown scenario `{scenario_name}` (walls|probs)")))?;
    let mut spec = ScenarioSpec::standard(kind);

    macro_rules! num {
        ($flag:expr, $key:literal, $target:expr) => {
            if let Some(v) = pick($flag.map(|v| v.to_string()), $key) {
                $target = parse_num($key, &v)?;
            }
        };
    }
    num!(args.episodes, "episodes", spec.episodes);
    num!(args.trials, "trials", spec.trials);
    num!(args.alpha, "alpha", spec.params.alpha);
    num!(args.gamma, "gamma", spec.params.gamma);
    num!(args.epsilon, "epsilon", spec.params.epsilon);
    num!(args.max_steps, "max_steps", spec.params.max_steps);
    let mut seed = DEFAULT_SEED;
    num!(args.seed, "seed", seed);

    if let Some(v) = pick(args.grid.clone(), "grid") {
        (spec.width, spec.height) = parse_grid(&v)?;
    }
    if let Some(v) = pick(args.wall_ratios.clone(), "wall_ratios") {
        spec.wall_ratios = parse_list("wall-ratios", &v)?;
    }
    if let Some(v) = pick(args.probs.clone(), "probs") {
        spec.probs = parse_list("probs", &v)?;
    }
    if let Some(v) = pick(args.changes.clone(), "changes") {
        spec.changes = if v.trim().is_empty() {
            Vec::new()
        } else {
            parse_list("changes", &v)?
        };
    }

    let out = args
        .out
        .or_else(|| file.get("out").map(PathBuf::from))
        .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(RunConfig {
        spec,
        seed,
        out,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSummary {
    pub agent: AgentKind,
    pub mean_steps: f64,
    pub mean_return: f64,
}

/// Runs the configured scenario and writes its outputs. Returns the
/// final-100-episode means per agent.
pub fn run(config: &RunConfig) -> Result<Vec<AgentSummary>, Error> {
    let result = run_scenario(&config.spec, config.seed, config.execution)?;
    let table = aggregate(&result.trials)?;
    write_outputs(&result, &table, &config.scenario_dir())?;
    Ok(final_summary(&table, 100)
        .into_iter()
        .map(|(agent, mean_steps, mean_return)| AgentSummary {
            agent,
            mean_steps,
            mean_return,
        })
        .collect())
}

/// Default learning parameters, exposed for help text and tests.
pub fn default_params() -> LearnParams {
    LearnParams::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let argv = std::iter::once("oaspmdp").chain(args.iter().copied());
        parse_args(argv, None)
    }

    #[test]
    fn scenario_alone_gives_defaults() {
        let c = parse(&["--scenario", "walls"]).unwrap();
        assert_eq!(c.spec, ScenarioSpec::standard(ScenarioKind::Walls));
        assert_eq!(c.spec.params, default_params());
        assert_eq!(c.spec.params.alpha, 0.2);
        assert_eq!(c.spec.params.gamma, 0.9);
        assert_eq!(c.spec.params.epsilon, 0.1);
        assert_eq!(c.spec.params.max_steps, 1000);
        assert_eq!(c.spec.changes, vec![1000, 2000]);
        assert_eq!(c.scenario_dir(), PathBuf::from("out/walls"));
        assert_eq!(c.execution, Execution::Parallel);
    }

    #[test]
    fn epsilon_out_of_range() {
        assert!(matches!(
            parse(&["--epsilon", "1.5"]),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn malformed_and_unknown() {
        assert!(matches!(parse(&["--bogus"]), Err(CliError::Usage(_))));
        assert!(matches!(parse(&["--trials", "x"]), Err(CliError::Usage(_))));
        assert!(matches!(
            parse(&["--grid", "10by10"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["--scenario", "lava"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["--probs", "0.5,0.6"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(parse(&["--help"]), Err(CliError::Info(_))));
    }

    #[test]
    fn overrides() {
        let c = parse(&[
            "--scenario",
            "probs",
            "--grid",
            "6x4",
            "--changes",
            "50,90",
            "--probs",
            "0.6,0.8,1",
            "--wall-ratios",
            "0.1",
            "--episodes",
            "120",
            "--trials",
            "2",
            "--seed",
            "9",
            "--max-steps",
            "300",
            "--sequential",
        ])
        .unwrap();
        assert_eq!((c.spec.width, c.spec.height), (6, 4));
        assert_eq!(c.spec.changes, vec![50, 90]);
        assert_eq!(c.spec.probs, vec![0.6, 0.8, 1.0]);
        assert_eq!(c.spec.wall_ratios, vec![0.1]);
        assert_eq!((c.spec.episodes, c.spec.trials, c.seed), (120, 2, 9));
        assert_eq!(c.spec.params.max_steps, 300);
        assert_eq!(c.execution, Execution::Sequential);
    }

    #[test]
    fn flag_beats_config_file_beats_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# run\nalpha = 0.5\ngamma=0.8\nout = from_file\n").unwrap();
        let p = path.to_str().unwrap();

        let c = parse(&["--config", p, "--alpha", "0.2"]).unwrap();
        assert_eq!(c.spec.params.alpha, 0.2);
        assert_eq!(c.spec.params.gamma, 0.8);
        assert_eq!(c.out, PathBuf::from("from_file"));

        let argv = ["oaspmdp", "--config", p];
        let c = parse_args(argv, Some("from_env".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("from_file"));
        let c = parse_args(["oaspmdp"], Some("from_env".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("from_env"));
        let c = parse_args(["oaspmdp", "--out", "flag"], Some("from_env".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("flag"));
    }

    #[test]
    fn config_file_errors() {
        assert!(parse_config_file("alpha 0.5").is_err());
        assert!(parse_config_file("colour = red").is_err());
        let m = parse_config_file("max-steps = 10 % trailing comment\n\n").unwrap();
        assert_eq!(m["max_steps"], "10");
    }
}
