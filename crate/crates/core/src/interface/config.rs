//! Run configuration and scenario documents (TOML).
//!
//! ```toml
//! format_version = 1
//! output_dir = "out"
//! scenarios = ["builtin:1", "builtin:2", "attacks/edge.toml"]
//! traversal = "serpentine"
//!
//! [field]
//! seed = 42          # or: path = "field.csv", or: fixture = "calibrated"
//! rows = 10
//! cols = 10
//!
//! [econ]
//! corn_price = 7.53
//!
//! [optimizer]
//! multiplier_set = [0.0, 0.5, 1.0, 1.5, 2.0]
//! stealth_budget = 50.0
//! ```
//!
//! Every section is optional except `[field]`; omitted keys take their
//! defaults. Relative paths resolve against the directory of the document
//! that names them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::OptimizerConfig;
use crate::agronomy::{EconParams, SplitFractions, YieldBounds};
use crate::attack::{builtin_scenario, AttackScenario, BuiltinScenario, MultiplierRule, Traversal};
use crate::error::{Error, Result};
use crate::field::{generate_field, FieldGrid, GenerationRanges};
use crate::interface::fixtures;
use crate::interface::grid_csv::{read_field_csv, read_grid_csv};

pub const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_OUTPUT_DIR: &str = "sidedress-out";

fn check_version(found: u32, what: &str) -> Result<()> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what}: unsupported format_version {found} (this build reads {FORMAT_VERSION})"
        )))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default = "default_dim")]
    pub rows: usize,
    #[serde(default = "default_dim")]
    pub cols: usize,
    #[serde(default)]
    pub ranges: GenerationRanges,
}

fn default_dim() -> usize {
    10
}

/// Where the field comes from, after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Seeded {
        seed: u64,
        rows: usize,
        cols: usize,
        ranges: GenerationRanges,
    },
    File(PathBuf),
    Calibrated,
}

impl FieldSource {
    pub fn seeded(seed: u64) -> Self {
        FieldSource::Seeded {
            seed,
            rows: 10,
            cols: 10,
            ranges: GenerationRanges::default(),
        }
    }

    pub fn load(&self) -> Result<FieldGrid> {
        match self {
            FieldSource::Seeded {
                seed,
                rows,
                cols,
                ranges,
            } => generate_field(*seed, *rows, *cols, ranges),
            FieldSource::File(path) => read_field_csv(&read_text(path)?),
            FieldSource::Calibrated => fixtures::calibrated_field(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            FieldSource::Seeded { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FieldSource::Seeded {
                seed, rows, cols, ..
            } => format!("seed {seed} ({rows}x{cols})"),
            // Only the file name, so reports do not depend on the checkout location.
            FieldSource::File(path) => format!(
                "file {}",
                path.file_name().map_or_else(
                    || path.display().to_string(),
                    |n| n.to_string_lossy().into_owned()
                )
            ),
            FieldSource::Calibrated => "fixture calibrated".into(),
        }
    }
}

impl FieldSection {
    fn source(&self, base: &Path) -> Result<FieldSource> {
        let given = [
            self.seed.is_some(),
            self.path.is_some(),
            self.fixture.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            return Err(Error::Config(
                "[field] needs exactly one of `seed`, `path` or `fixture`".into(),
            ));
        }
        if let Some(seed) = self.seed {
            self.ranges.validate()?;
            return Ok(FieldSource::Seeded {
                seed,
                rows: self.rows,
                cols: self.cols,
                ranges: self.ranges,
            });
        }
        if let Some(path) = &self.path {
            let path = resolve(base, path);
            require_file(&path, "field file")?;
            return Ok(FieldSource::File(path));
        }
        match self.fixture.as_deref() {
            Some("calibrated") => Ok(FieldSource::Calibrated),
            other => Err(Error::Config(format!(
                "unknown field fixture {other:?} (expected \"calibrated\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraversalKind {
    #[default]
    Serpentine,
    RowMajor,
}

impl TraversalKind {
    pub fn traversal(self) -> Traversal {
        match self {
            TraversalKind::Serpentine => Traversal::Serpentine,
            TraversalKind::RowMajor => Traversal::RowMajor,
        }
    }
}

/// A scenario reference: `identity`, `builtin:<1|2|3>`, or a path to a
/// scenario document.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioRef {
    Builtin(BuiltinScenario),
    Document(PathBuf),
}

impl ScenarioRef {
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(id) = text.strip_prefix("builtin:") {
            return Ok(ScenarioRef::Builtin(id.parse()?));
        }
        if text == "identity" {
            return Ok(ScenarioRef::Builtin(BuiltinScenario::Identity));
        }
        Ok(ScenarioRef::Document(PathBuf::from(text)))
    }

    /// Builtin ids (`1`, `scenario-2`, `identity`) or a document path.
    pub fn parse_cli(text: &str) -> Self {
        match text.parse::<BuiltinScenario>() {
            Ok(b) => ScenarioRef::Builtin(b),
            Err(_) => {
                ScenarioRef::parse(text).unwrap_or_else(|_| ScenarioRef::Document(text.into()))
            }
        }
    }

    pub fn load(&self, rows: usize, cols: usize) -> Result<AttackScenario> {
        match self {
            ScenarioRef::Builtin(b) => builtin_scenario(*b, rows, cols),
            ScenarioRef::Document(path) => load_scenario(path, rows, cols),
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self, ScenarioRef::Builtin(_))
    }
}

fn default_scenarios() -> Vec<String> {
    vec!["builtin:1".into(), "builtin:2".into(), "builtin:3".into()]
}

/// Run configuration as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub field: FieldSection,
    #[serde(default)]
    pub econ: EconParams,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default)]
    pub yield_bounds: YieldBounds,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<String>,
    #[serde(default)]
    pub traversal: TraversalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A validated configuration with paths resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub field: FieldSource,
    pub econ: EconParams,
    pub split: SplitFractions,
    pub yield_bounds: YieldBounds,
    pub scenarios: Vec<ScenarioRef>,
    pub traversal: TraversalKind,
    pub optimizer: Option<OptimizerConfig>,
    pub output_dir: PathBuf,
    /// sha256 of the canonical (JSON) form of the configuration as written.
    pub digest: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        check_version(config.format_version, "run config")?;
        Ok(config)
    }

    /// Validates the document and resolves paths against `base`.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedConfig> {
        self.econ.validate()?;
        self.split.validate()?;
        self.yield_bounds.validate()?;
        if let Some(opt) = &self.optimizer {
            opt.validate()?;
        }
        let field = self.field.source(base)?;
        let scenarios = self
            .scenarios
            .iter()
            .map(|s| {
                Ok(match ScenarioRef::parse(s)? {
                    ScenarioRef::Document(p) => {
                        let p = resolve(base, &p);
                        require_file(&p, "scenario document")?;
                        ScenarioRef::Document(p)
                    }
                    builtin => builtin,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResolvedConfig {
            field,
            econ: self.econ,
            split: self.split,
            yield_bounds: self.yield_bounds,
            scenarios,
            traversal: self.traversal,
            optimizer: self.optimizer.clone(),
            output_dir: resolve(
                base,
                self.output_dir
                    .as_deref()
                    .unwrap_or(Path::new(DEFAULT_OUTPUT_DIR)),
            ),
            digest: self.digest(),
        })
    }

    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

impl Default for RunConfig {
    /// Calibrated field, reference parameters, the three builtin scenarios.
    fn default() -> Self {
        RunConfig {
            format_version: FORMAT_VERSION,
            field: FieldSection {
                fixture: Some("calibrated".into()),
                rows: 10,
                cols: 10,
                ..FieldSection::default()
            },
            econ: EconParams::default(),
            split: SplitFractions::default(),
            yield_bounds: YieldBounds::default(),
            scenarios: default_scenarios(),
            traversal: TraversalKind::default(),
            optimizer: None,
            output_dir: None,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ResolvedConfig> {
    let config = RunConfig::parse(&read_text(path)?)?;
    config.resolve(path.parent().unwrap_or(Path::new(".")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDocument {
    zones: String,
    multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    #[serde(default = "current_version")]
    format_version: u32,
    name: String,
    #[serde(default)]
    spoof_display: bool,
    grid: Option<PathBuf>,
    rules: Option<Vec<RuleDocument>>,
}

fn current_version() -> u32 {
    FORMAT_VERSION
}

/// Parses a scenario document; `base` resolves a relative `grid` path.
pub fn parse_scenario(text: &str, base: &Path, rows: usize, cols: usize) -> Result<AttackScenario> {
    let doc: ScenarioDocument =
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    check_version(doc.format_version, "scenario document")?;
    match (doc.grid, doc.rules) {
        (Some(grid), None) => {
            let path = resolve(base, &grid);
            let multipliers = read_grid_csv(&read_text(&path)?)?;
            multipliers.ensure_shape(rows, cols)?;
            AttackScenario::new(doc.name, multipliers, doc.spoof_display)
        }
        (None, Some(rules)) => {
            let rules = rules
                .iter()
                .map(|r| MultiplierRule::new(&r.zones, r.multiplier))
                .collect::<Result<Vec<_>>>()?;
            AttackScenario::from_rules(doc.name, rows, cols, &rules, doc.spoof_display)
        }
        _ => Err(Error::Config(format!(
            "scenario {:?} needs exactly one of `grid` or `rules`",
            doc.name
        ))),
    }
}

pub fn load_scenario(path: &Path, rows: usize, cols: usize) -> Result<AttackScenario> {
    parse_scenario(
        &read_text(path)?,
        path.parent().unwrap_or(Path::new(".")),
        rows,
        cols,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "format_version = 1\n[field]\nseed = 42\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.econ, EconParams::default());
        assert_eq!(c.scenarios.len(), 3);
        let r = c.resolve(Path::new("/tmp")).unwrap();
        assert_eq!(r.field, FieldSource::seeded(42));
        assert_eq!(r.output_dir, Path::new("/tmp").join(DEFAULT_OUTPUT_DIR));
        assert_eq!(r.traversal, TraversalKind::Serpentine);
    }

    #[test]
    fn partial_sections_fill_in() {
        let text =
            format!("{MINIMAL}[econ]\ncorn_price = 5.0\n[optimizer]\nstealth_budget = 40.0\n");
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.econ.corn_price, 5.0);
        assert_eq!(c.econ.nitrogen_price, EconParams::default().nitrogen_price);
        let opt = c.optimizer.unwrap();
        assert_eq!(opt.stealth_budget, Some(40.0));
        assert_eq!(
            opt.multiplier_set,
            OptimizerConfig::default().multiplier_set
        );
    }

    #[test]
    fn field_source_must_be_unique() {
        let both = "format_version = 1\n[field]\nseed = 1\nfixture = \"calibrated\"\n";
        let err = RunConfig::parse(both)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
        let none = "format_version = 1\n[field]\nrows = 3\n";
        assert!(RunConfig::parse(none)
            .unwrap()
            .resolve(Path::new("."))
            .is_err());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(RunConfig::parse("format_version = 2\n[field]\nseed = 1\n").is_err());
        assert!(RunConfig::parse("[field]\nseed = 1\n").is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}bogus = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}[econ]\ncorn = 1\n")).is_err());
        let missing = "format_version = 1\n[field]\npath = \"nope.csv\"\n";
        let err = RunConfig::parse(missing)
            .unwrap()
            .resolve(Path::new("/nonexistent"))
            .unwrap_err();
        assert!(err.to_string().contains("does not exist"), "{err}");
        let negative = format!("{MINIMAL}[econ]\ncorn_price = -1.0\n");
        assert!(RunConfig::parse(&negative)
            .unwrap()
            .resolve(Path::new("."))
            .is_err());
    }

    #[test]
    fn scenario_references() {
        assert_eq!(
            ScenarioRef::parse("builtin:2").unwrap(),
            ScenarioRef::Builtin(BuiltinScenario::Scenario2)
        );
        assert!(ScenarioRef::parse("builtin:7").is_err());
        assert_eq!(
            ScenarioRef::parse_cli("identity"),
            ScenarioRef::Builtin(BuiltinScenario::Identity)
        );
        assert_eq!(
            ScenarioRef::parse_cli("3"),
            ScenarioRef::Builtin(BuiltinScenario::Scenario3)
        );
        assert_eq!(
            ScenarioRef::parse_cli("a.toml"),
            ScenarioRef::Document("a.toml".into())
        );
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let b = RunConfig::parse(&format!("{MINIMAL}[split]\nat_planting = 0.3\n")).unwrap();
        assert_eq!(a.digest(), RunConfig::parse(MINIMAL).unwrap().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn rule_documents() {
        let text = "name = \"edge\"\nspoof_display = true\nrules = [\n  { zones = \"A1:J10\", multiplier = 0.5 },\n  { zones = \"E1:E10\", multiplier = 2.0 },\n]\n";
        let s = parse_scenario(text, Path::new("."), 10, 10).unwrap();
        assert_eq!(s.name, "edge");
        assert!(s.spoof_display);
        assert_eq!(s.multiplier("E3".parse().unwrap()), Some(2.0));
        assert_eq!(s.multiplier("D3".parse().unwrap()), Some(0.5));
    }

    #[test]
    fn scenario_document_errors() {
        let neither = "name = \"x\"\n";
        assert!(parse_scenario(neither, Path::new("."), 2, 2).is_err());
        let outside = "name = \"x\"\nrules = [{ zones = \"A1:C3\", multiplier = 0.5 }]\n";
        assert!(parse_scenario(outside, Path::new("."), 2, 2).is_err());
        let negative = "name = \"x\"\nrules = [{ zones = \"A1:A1\", multiplier = -0.5 }]\n";
        assert!(parse_scenario(negative, Path::new("."), 2, 2).is_err());
        let version = "format_version = 9\nname = \"x\"\nrules = []\n";
        assert!(parse_scenario(version, Path::new("."), 2, 2).is_err());
    }

    #[test]
    fn grid_documents_resolve_relative_paths() {
        let dir = std::env::temp_dir().join(format!("sidedress-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("m.csv"), ",A,B\n1,0.5,2\n").unwrap();
        fs::write(dir.join("s.toml"), "name = \"g\"\ngrid = \"m.csv\"\n").unwrap();
        let s = load_scenario(&dir.join("s.toml"), 1, 2).unwrap();
        assert_eq!(s.multipliers.cells(), &[0.5, 2.0]);
        assert!(load_scenario(&dir.join("s.toml"), 2, 2).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
