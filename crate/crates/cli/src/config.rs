//! Project configuration file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use afindex_core::analytics::{Dimension, OaxacaVariant};
use afindex_core::econ::HcType;
use afindex_core::survey::{Aggregate, RhoMode};
use afindex_core::timeseries::BandMode;
use afindex_core::WeightMode;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub paths: Paths,
    #[serde(default)]
    pub catalog: Vec<CatalogEntry>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub index: IndexConfig,
    pub backcast: Option<BackcastConfig>,
    pub analysis: Option<AnalysisConfig>,
    #[serde(default)]
    pub regression: Vec<RegressionConfig>,
    #[serde(default)]
    pub regression_labels: BTreeMap<String, String>,
    pub survey: Option<SurveyConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub amenities: PathBuf,
    pub panel: Option<PathBuf>,
    /// `occupation_id,title` CSV used for labels in reports and survey forms.
    pub titles: Option<PathBuf>,
    pub survey_text: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub year: i32,
    /// Release label when a year has several releases to average.
    pub release: Option<String>,
    pub weights: PathBuf,
    pub texts: PathBuf,
    /// Scores on a native scale, min-max scaled per descriptor on load.
    #[serde(default)]
    pub native: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Builtin,
    Command,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    #[serde(default)]
    pub provider: ProviderKind,
    /// Vector length for the built-in embedder; checked against command output when set.
    pub dim: Option<usize>,
    pub command: Option<String>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Builtin,
            dim: Some(16),
            command: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    #[serde(default)]
    pub mode: WeightMode,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BackcastConfig {
    pub target_year: i32,
    #[serde(default)]
    pub band: BandMode,
    /// Years feeding the series; all catalog years when absent.
    pub source_years: Option<Vec<i32>>,
    /// Earliest observations dropped in the pseudo out-of-sample check; 0 skips it.
    #[serde(default)]
    pub holdout: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub t0: i32,
    pub t1: i32,
    pub anchor_year: i32,
    #[serde(default = "default_quartiles")]
    pub quartiles: usize,
    #[serde(default = "default_deciles")]
    pub deciles: usize,
    #[serde(default)]
    pub variant: OaxacaVariant,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Histogram range; the range of the scores when absent.
    pub histogram_range: Option<[f64; 2]>,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_older")]
    pub older_bands: BTreeSet<String>,
    #[serde(default = "default_dimensions")]
    pub dimensions: Vec<Dimension>,
    #[serde(default)]
    pub age_map: BTreeMap<String, String>,
}

fn default_quartiles() -> usize {
    4
}
fn default_deciles() -> usize {
    10
}
fn default_bins() -> usize {
    20
}
fn default_top_k() -> usize {
    10
}
pub fn default_older() -> BTreeSet<String> {
    ["50-64", "65-74"].into_iter().map(String::from).collect()
}
fn default_dimensions() -> Vec<Dimension> {
    vec![Dimension::Education, Dimension::Sex, Dimension::Age]
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionConfig {
    pub label: String,
    pub year: i32,
    #[serde(default = "default_dependent")]
    pub dependent: String,
    pub regressors: Vec<String>,
    #[serde(default = "default_true")]
    pub intercept: bool,
    pub focus: Option<String>,
    #[serde(default)]
    pub hc: HcType,
}

fn default_dependent() -> String {
    "older_share".into()
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    pub year: i32,
    pub seed: u64,
    #[serde(default = "default_per_decile")]
    pub per_decile: usize,
    #[serde(default)]
    pub aggregate: Aggregate,
    #[serde(default)]
    pub rho_mode: RhoMode,
}

fn default_per_decile() -> usize {
    3
}

/// A loaded configuration plus the directories its paths resolve against.
#[derive(Debug, Clone)]
pub struct Project {
    pub config: ProjectConfig,
    pub config_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Project {
    pub fn load(path: &Path, out: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ProjectConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out_dir = match out {
            Some(o) => o.to_path_buf(),
            None => config_dir.join(&config.paths.output),
        };
        let project = Self {
            config,
            config_dir,
            out_dir,
        };
        project.validate()?;
        Ok(project)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.config_dir.join(p)
    }

    /// Resolves a configured input path, failing when it does not exist.
    pub fn existing(&self, what: &str, p: &Path) -> Result<PathBuf> {
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(CliError::Config(format!(
                "{what} `{}` does not exist",
                full.display()
            )));
        }
        Ok(full)
    }

    pub fn optional_path(&self, what: &str, p: &Option<PathBuf>) -> Result<Option<PathBuf>> {
        p.as_ref().map(|p| self.existing(what, p)).transpose()
    }

    pub fn required_path(&self, what: &'static str, p: &Option<PathBuf>) -> Result<PathBuf> {
        let p = p
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("[paths] {what} is not set")))?;
        self.existing(what, p)
    }

    /// Distinct catalog years in ascending order.
    pub fn catalog_years(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.config.catalog.iter().map(|c| c.year).collect();
        set.into_iter().collect()
    }

    /// Catalog years plus the backcast target, ascending.
    pub fn scored_years(&self) -> Vec<i32> {
        let mut set: BTreeSet<i32> = self.config.catalog.iter().map(|c| c.year).collect();
        if let Some(b) = &self.config.backcast {
            set.insert(b.target_year);
        }
        set.into_iter().collect()
    }

    pub fn analysis(&self) -> Result<&AnalysisConfig> {
        self.config
            .analysis
            .as_ref()
            .ok_or_else(|| CliError::Config("no [analysis] section".into()))
    }

    pub fn survey(&self) -> Result<&SurveyConfig> {
        self.config
            .survey
            .as_ref()
            .ok_or_else(|| CliError::Config("no [survey] section".into()))
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let bad = |m: String| Err(CliError::Config(m));
        if c.catalog.is_empty() {
            return bad("no [[catalog]] entries".into());
        }
        let mut seen = BTreeSet::new();
        for e in &c.catalog {
            if !seen.insert((e.year, e.release.clone())) {
                return bad(format!(
                    "catalog year {} release {} listed twice",
                    e.year,
                    e.release.as_deref().unwrap_or("(none)")
                ));
            }
        }
        let years = self.catalog_years();
        for y in &years {
            let n = c.catalog.iter().filter(|e| e.year == *y).count();
            if n > 1
                && c.catalog
                    .iter()
                    .any(|e| e.year == *y && e.release.is_none())
            {
                return bad(format!(
                    "catalog year {y} has several entries; each needs a `release` label"
                ));
            }
        }
        match (c.embedding.provider, c.embedding.dim) {
            (_, Some(d)) if d < 2 => {
                return bad(format!("embedding dim must be at least 2, got {d}"))
            }
            (ProviderKind::Builtin, None) => return bad("the builtin provider needs `dim`".into()),
            _ => {}
        }
        if let Some(b) = &c.backcast {
            if years.contains(&b.target_year) {
                return bad(format!(
                    "backcast target {} is also a catalog year",
                    b.target_year
                ));
            }
            if let Some(src) = &b.source_years {
                if let Some(y) = src.iter().find(|y| !years.contains(y)) {
                    return bad(format!("backcast source year {y} has no catalog"));
                }
            }
        }
        let scored = self.scored_years();
        let need_year = |what: &str, y: i32| -> Result<()> {
            if scored.contains(&y) {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "{what} {y} is neither a catalog year nor the backcast target"
                )))
            }
        };
        if let Some(a) = &c.analysis {
            need_year("analysis t0", a.t0)?;
            need_year("analysis t1", a.t1)?;
            need_year("analysis anchor_year", a.anchor_year)?;
            if a.t0 == a.t1 {
                return bad("analysis t0 and t1 must differ".into());
            }
            if a.quartiles < 2 || a.deciles < 2 {
                return bad("quantile counts must be at least 2".into());
            }
            if a.histogram_bins == 0 {
                return bad("histogram_bins must be positive".into());
            }
            if let Some([lo, hi]) = a.histogram_range {
                if !(lo < hi) {
                    return bad(format!("histogram_range [{lo}, {hi}] is empty"));
                }
            }
        }
        let mut labels = BTreeSet::new();
        for r in &c.regression {
            need_year("regression year", r.year)?;
            if !labels.insert(&r.label) {
                return bad(format!("regression label `{}` used twice", r.label));
            }
            if let Some(f) = &r.focus {
                if !r.regressors.contains(f) {
                    return bad(format!(
                        "regression `{}`: focus `{f}` is not a regressor",
                        r.label
                    ));
                }
            }
        }
        if let Some(s) = &c.survey {
            need_year("survey year", s.year)?;
            if s.per_decile == 0 {
                return bad("survey per_decile must be positive".into());
            }
        }
        Ok(())
    }
}

/// Reads an `occupation_id,title` file.
pub fn read_titles(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::data(path, e))?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(path, e))?;
        if rec.len() != 2 {
            return Err(CliError::Data(format!(
                "{}: expected occupation_id,title",
                path.display()
            )));
        }
        out.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyText {
    pub definition: String,
    #[serde(default)]
    pub controls: BTreeMap<String, String>,
}

pub fn read_survey_text(path: &Path) -> Result<SurveyText> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> Result<Project> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.toml");
        std::fs::write(&p, body).unwrap();
        Project::load(&p, None)
    }

    const MINIMAL: &str = r#"
[paths]
amenities = "a.toml"

[[catalog]]
year = 2020
weights = "w.csv"
texts = "t.csv"
"#;

    #[test]
    fn defaults_apply() {
        let p = parse(MINIMAL).unwrap();
        assert_eq!(p.config.embedding.dim, Some(16));
        assert_eq!(p.config.index.mode, WeightMode::Average);
        assert!(p.out_dir.ends_with("out"));
        assert_eq!(p.scored_years(), [2020]);
    }

    #[test]
    fn rejects_bad_values() {
        let cases = [
            format!("{MINIMAL}\n[embedding]\ndim = 1\n"),
            format!("{MINIMAL}\n[backcast]\ntarget_year = 2020\n"),
            format!("{MINIMAL}\n[analysis]\nt0 = 1990\nt1 = 2020\nanchor_year = 2020\n"),
            format!("{MINIMAL}\n[[regression]]\nlabel = \"a\"\nyear = 2020\nregressors = [\"x\"]\nfocus = \"y\"\n"),
            format!("{MINIMAL}\n[[catalog]]\nyear = 2020\nrelease = \"b\"\nweights = \"w.csv\"\ntexts = \"t.csv\"\n"),
            format!("{MINIMAL}\nunknown = 1\n"),
        ];
        for c in &cases {
            assert!(matches!(parse(c), Err(CliError::Config(_))), "{c}");
        }
    }
}
