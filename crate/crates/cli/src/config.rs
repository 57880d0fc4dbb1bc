//! TOML run configuration: a named scenario or an inline one.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::LevelFilter;
use serde::Deserialize;

use riemflow::experiments::{scenario, Check, InitialField, Relabel, Scenario};
use riemflow::manifold::ManifoldSpec;
use riemflow::operators::CurvatureOperator;
use riemflow::solver::SolverConfig;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    resolution: [usize; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    name: Option<String>,
    manifold: Option<ManifoldSpec>,
    grid: Option<GridSection>,
    initial: Option<InitialField>,
    relabel: Option<Relabel>,
    operator: Option<CurvatureOperator>,
    solver: Option<SolverConfig>,
    checks: Option<Vec<Check>>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    checkpoint_every: usize,
    log_level: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub output_dir: Option<PathBuf>,
    /// Steps between checkpoints; 0 writes one only on interrupt.
    pub checkpoint_every: usize,
    pub log_level: LevelFilter,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Read { path: path.display().to_string(), message: e.to_string() })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        Self::parse(&text, &path.display().to_string(), stem)
    }

    /// `origin` labels diagnostics; `default_name` names inline scenarios without `name`.
    pub fn parse(text: &str, origin: &str, default_name: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| parse_error(text, origin, &e))?;
        let log_level = match &raw.log_level {
            Some(s) => LevelFilter::from_str(s)
                .map_err(|_| CliError::Config(format!("{origin}: `log_level`: unknown level `{s}`")))?,
            None => LevelFilter::Info,
        };
        let scenario = match &raw.scenario {
            Some(name) => named(&raw, name, origin)?,
            None => inline(&raw, origin, default_name)?,
        };
        Ok(RunConfig { scenario, output_dir: raw.output_dir, checkpoint_every: raw.checkpoint_every, log_level })
    }
}

fn named(raw: &RawConfig, name: &str, origin: &str) -> Result<Scenario, CliError> {
    let inline_keys = [
        ("name", raw.name.is_some()),
        ("manifold", raw.manifold.is_some()),
        ("initial", raw.initial.is_some()),
        ("relabel", raw.relabel.is_some()),
        ("operator", raw.operator.is_some()),
        ("solver", raw.solver.is_some()),
        ("checks", raw.checks.is_some()),
    ];
    let clash: Vec<&str> = inline_keys.iter().filter(|k| k.1).map(|k| k.0).collect();
    if !clash.is_empty() {
        return Err(CliError::Config(format!(
            "{origin}: `scenario` and an inline scenario are mutually exclusive (remove {})",
            clash.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", ")
        )));
    }
    let mut sc = scenario(name).map_err(|e| CliError::Config(format!("{origin}: `scenario`: {e}")))?;
    if let Some(g) = &raw.grid {
        sc.resolution = g.resolution;
    }
    Ok(sc)
}

fn inline(raw: &RawConfig, origin: &str, default_name: &str) -> Result<Scenario, CliError> {
    let missing = |key: &str| CliError::Config(format!("{origin}: missing `{key}` (or give `scenario = \"<name>\"`)"));
    Ok(Scenario {
        name: raw.name.clone().unwrap_or_else(|| default_name.to_string()),
        manifold: raw.manifold.clone().ok_or_else(|| missing("manifold"))?,
        resolution: raw.grid.as_ref().map(|g| g.resolution).unwrap_or([128, 128]),
        initial: raw.initial.clone().ok_or_else(|| missing("initial"))?,
        relabel: raw.relabel,
        operator: raw.operator.ok_or_else(|| missing("operator"))?,
        solver: raw.solver.clone().ok_or_else(|| missing("solver"))?,
        checks: raw.checks.clone().unwrap_or_default(),
    })
}

/// Line/column diagnostic naming the offending key where the span allows it.
fn parse_error(text: &str, origin: &str, e: &toml::de::Error) -> CliError {
    let message = e.message().trim().to_string();
    let Some(span) = e.span() else {
        return CliError::Parse { origin: origin.into(), line: 0, column: 0, key: None, message };
    };
    let start = span.start.min(text.len());
    let before = &text[..start];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let column = before[line_start..].chars().count() + 1;
    let line_text = text[line_start..].lines().next().unwrap_or("");
    let table = text[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let key = line_text.split_once('=').map(|(k, _)| k.trim().to_string()).filter(|k| !k.is_empty());
    let key = match (table, key) {
        (Some(t), Some(k)) => Some(format!("{t}.{k}")),
        (None, Some(k)) => Some(k),
        (Some(t), None) => Some(t),
        (None, None) => None,
    };
    CliError::Parse { origin: origin.into(), line, column, key, message }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_with_grid_override() {
        let c = RunConfig::parse("scenario = \"euclid_shrinking_circle\"\n[grid]\nresolution = [64, 64]\n", "t", "x")
            .unwrap();
        assert_eq!(c.scenario.resolution, [64, 64]);
        assert_eq!(c.log_level, LevelFilter::Info);
    }

    #[test]
    fn inline_scenario() {
        let text = r#"
name = "plane"
checkpoint_every = 5
log_level = "warn"

[manifold]
kind = "euclidean"
extents = [[-1.0, 1.0], [-1.0, 1.0]]

[grid]
resolution = [32, 32]

[initial]
kind = "circle"
center = [0.0, 0.0]
radius = 0.5

[operator]
kind = "gce_plus"

[solver]
t_end_seconds = 0.01
snapshot_every = 0.005

[[checks]]
check = "max_principle"
"#;
        let c = RunConfig::parse(text, "t", "x").unwrap();
        assert_eq!(c.scenario.name, "plane");
        assert_eq!(c.checkpoint_every, 5);
        assert_eq!(c.scenario.checks, vec![Check::MaxPrinciple]);
        assert_eq!(c.scenario.solver.t_end, 0.01);
    }

    #[test]
    fn bad_operator_names_key_and_position() {
        let text = "name = \"x\"\n[operator]\nkind = \"mean\"\n";
        match RunConfig::parse(text, "b.cfg", "x").unwrap_err() {
            CliError::Parse { line, column, key, message, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 8);
                assert_eq!(key.as_deref(), Some("operator.kind"));
                assert!(message.contains("mean"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn named_and_inline_conflict() {
        let text = "scenario = \"euclid_shrinking_circle\"\n[operator]\nkind = \"mce\"\n";
        let e = RunConfig::parse(text, "t", "x").unwrap_err().to_string();
        assert!(e.contains("mutually exclusive") && e.contains("`operator`"), "{e}");
    }

    #[test]
    fn unknown_scenario_and_missing_keys() {
        assert!(RunConfig::parse("scenario = \"nope\"\n", "t", "x").unwrap_err().to_string().contains("nope"));
        assert!(RunConfig::parse("", "t", "x").unwrap_err().to_string().contains("manifold"));
        assert!(RunConfig::parse("bogus = 1\n", "t", "x").is_err());
        assert!(RunConfig::parse("scenario = \"euclid_shrinking_circle\"\nlog_level = \"loud\"\n", "t", "x").is_err());
    }
}
