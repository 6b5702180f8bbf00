//! Declarative run configuration, read from TOML and overridden by flags.

use claimclass::explore::{Binning, CiMethod, ClaimCounting};
use claimclass::ingest::{ImputeStrategy, Label, DEFAULT_ID_SEPARATOR};
use claimclass::knn::{DistanceMetric, Weighting};
use claimclass::logreg::{FitConfig, Penalty};
use claimclass::preprocess::{EncodeOptions, PrepareOptions, ScalingKind, DEFAULT_NUMERIC};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub ingest: IngestSection,
    pub preprocess: PreprocessSection,
    pub knn: KnnSection,
    pub logreg: LogregSection,
    pub evaluation: EvaluationSection,
    pub explore: ExploreSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub policies: Option<PathBuf>,
    pub claims: Option<PathBuf>,
    pub geojson: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { policies: None, claims: None, geojson: None, out: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeKind {
    ExternalValue,
    Median,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub id_separator: String,
    pub impute: ImputeKind,
    /// Vehicle ages by policy id for `impute = "external_value"`.
    pub external_vh_age: BTreeMap<String, u32>,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            id_separator: DEFAULT_ID_SEPARATOR.to_string(),
            impute: ImputeKind::Median,
            external_vh_age: BTreeMap::new(),
        }
    }
}

impl IngestSection {
    pub fn strategy(&self) -> ImputeStrategy {
        match self.impute {
            ImputeKind::Median => ImputeStrategy::Median,
            ImputeKind::Drop => ImputeStrategy::Drop,
            ImputeKind::ExternalValue => ImputeStrategy::ExternalValue(
                self.external_vh_age.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
    pub scaling: ScalingKind,
    pub fit_on_train: bool,
    pub test_fraction: f64,
    pub seed: u64,
    /// Cap on training rows; the test split is never reduced.
    pub subsample: Option<usize>,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        let encode = EncodeOptions::default();
        PreprocessSection {
            numeric: encode.numeric,
            categorical: encode.categorical,
            scaling: ScalingKind::Zscore,
            fit_on_train: false,
            test_fraction: 0.25,
            seed: 0,
            subsample: None,
        }
    }
}

impl PreprocessSection {
    pub fn prepare_options(&self) -> PrepareOptions {
        PrepareOptions {
            encode: EncodeOptions { numeric: self.numeric.clone(), categorical: self.categorical.clone() },
            scaling: self.scaling,
            fit_on_train: self.fit_on_train,
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnSection {
    pub k: usize,
    pub metric: DistanceMetric,
    pub weighting: Weighting,
}

impl Default for KnnSection {
    fn default() -> Self {
        KnnSection { k: 20, metric: DistanceMetric::EUCLIDEAN, weighting: Weighting::InverseDistance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregSection {
    pub penalty: Penalty,
    /// Penalty strength; `c` takes precedence when both are given.
    pub lambda: Option<f64>,
    pub c: Option<f64>,
    pub threshold: f64,
    pub fit: FitConfig,
}

impl Default for LogregSection {
    fn default() -> Self {
        LogregSection { penalty: Penalty::Ridge, lambda: None, c: Some(1.0), threshold: 0.5, fit: FitConfig::default() }
    }
}

impl LogregSection {
    pub fn lambda(&self) -> Result<f64, String> {
        match (self.c, self.lambda) {
            (Some(c), _) if c > 0.0 && c.is_finite() => Ok(c.recip()),
            (Some(c), _) => Err(format!("logreg.c must be positive, got {c}")),
            (None, Some(l)) if l >= 0.0 && l.is_finite() => Ok(l),
            (None, Some(l)) => Err(format!("logreg.lambda must be non-negative, got {l}")),
            (None, None) => Err("logreg needs `c` or `lambda`".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PositiveClass {
    Claims,
    NoClaims,
}

impl PositiveClass {
    pub fn label(self) -> Label {
        match self {
            PositiveClass::Claims => Label::Claim,
            PositiveClass::NoClaims => Label::NoClaim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub positive_class: PositiveClass,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection { positive_class: PositiveClass::NoClaims }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreSection {
    pub features: Vec<String>,
    /// Per-feature override of the default grouping.
    pub bins: BTreeMap<String, Binning>,
    pub counting: ClaimCounting,
    pub ci_method: CiMethod,
    pub ci_level: f64,
    pub heatmap_columns: Vec<String>,
    pub geojson_code_property: String,
}

impl Default for ExploreSection {
    fn default() -> Self {
        ExploreSection {
            features: [
                "pol_bonus",
                "pol_coverage",
                "pol_duration",
                "pol_sit_duration",
                "pol_pay_freq",
                "pol_payd",
                "pol_usage",
                "drv_drv2",
                "drv_age1",
                "drv_sex1",
                "vh_age",
                "vh_fuel",
                "vh_type",
                "vh_speed",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            bins: BTreeMap::new(),
            counting: ClaimCounting::ClaimingPolicies,
            ci_method: CiMethod::Wald,
            ci_level: 0.95,
            heatmap_columns: DEFAULT_NUMERIC.iter().map(|s| s.to_string()).collect(),
            geojson_code_property: "code".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub k_values: Vec<usize>,
    pub c_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            k_values: (1..=30).collect(),
            c_values: (-4..=2).map(|e| 10f64.powi(e)).collect(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.paths.policies.as_mut().map(rebase);
        config.paths.claims.as_mut().map(rebase);
        config.paths.geojson.as_mut().map(rebase);
        rebase(&mut config.paths.out);
        Ok(config)
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<(), String> {
        let p = &self.preprocess;
        if !(p.test_fraction > 0.0 && p.test_fraction < 1.0) {
            return Err(format!("preprocess.test_fraction must lie in (0, 1), got {}", p.test_fraction));
        }
        if p.subsample == Some(0) {
            return Err("subsample must be at least 1".into());
        }
        if self.knn.k == 0 {
            return Err("knn.k must be at least 1".into());
        }
        self.knn.metric.validate().map_err(|e| e.to_string())?;
        self.logreg.penalty.validate().map_err(|e| e.to_string())?;
        self.logreg.lambda()?;
        if !(self.logreg.threshold > 0.0 && self.logreg.threshold < 1.0) {
            return Err(format!("logreg.threshold must lie in (0, 1), got {}", self.logreg.threshold));
        }
        if !(self.explore.ci_level > 0.0 && self.explore.ci_level < 1.0) {
            return Err(format!("explore.ci_level must lie in (0, 1), got {}", self.explore.ci_level));
        }
        if self.ingest.id_separator.is_empty() {
            return Err("ingest.id_separator must not be empty".into());
        }
        if self.ingest.impute == ImputeKind::ExternalValue && self.ingest.external_vh_age.is_empty() {
            return Err("impute = \"external_value\" needs [ingest.external_vh_age] entries".into());
        }
        Ok(())
    }
}
