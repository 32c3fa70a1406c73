//! The experiment configuration: one JSON document shared by every command.
//!
//! Relative paths inside the document resolve against the directory holding
//! it; the `--out` override resolves against the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wrse_core::importance::ImportanceConfig;
use wrse_core::learners::{BaseLearner, FfnetConfig, GbtConfig, LogisticConfig};
use wrse_core::metrics::MetricConfig;
use wrse_core::parametric::{HeadKind, ParametricConfig};
use wrse_core::split::SplitConfig;
use wrse_core::synth::{Scenario, ScenarioKind};
use wrse_core::weighting::{even_horizons, weighted_horizons, DEFAULT_EVEN_SPAN_DAYS};
use wrse_core::HorizonGrid;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioBlock,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub models: ModelsBlock,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub runtime: RuntimeBlock,
    #[serde(default)]
    pub eval: EvalBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub importance: ImportanceConfig,
}

/// Exactly one of `synth` and `files` must be given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub files: Option<FilesBlock>,
}

/// Synthetic cohort; its seed is `runtime.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthBlock {
    pub n_stays: usize,
    pub kind: ScenarioKind,
    pub beta: Vec<f64>,
    pub censoring_rate: f64,
    pub max_stay_hours: Option<f64>,
}

impl Default for SynthBlock {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            n_stays: 2000,
            kind: s.kind,
            beta: s.beta,
            censoring_rate: s.censoring_rate,
            max_stay_hours: s.max_stay_hours,
        }
    }
}

impl SynthBlock {
    pub fn scenario(&self, seed: u64) -> Scenario {
        Scenario {
            kind: self.kind.clone(),
            beta: self.beta.clone(),
            censoring_rate: self.censoring_rate,
            max_stay_hours: self.max_stay_hours,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilesBlock {
    pub stays: PathBuf,
    pub features: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrse: Option<WrseBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parametric: Option<ParametricBlock>,
}

impl Default for ModelsBlock {
    fn default() -> Self {
        Self {
            wrse: Some(WrseBlock::default()),
            parametric: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingKind {
    Weighted,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerName {
    Gbt,
    Ffnet,
    Logistic,
}

impl LearnerName {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerName::Gbt => "gbt",
            LearnerName::Ffnet => "ffnet",
            LearnerName::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WrseBlock {
    /// Decay of the weighted spacing.
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub spacing: SpacingKind,
    /// Span of the even spacing.
    pub span_days: f64,
    pub base_learner: LearnerName,
    /// Hyperparameters of `base_learner`; omitted fields take their defaults.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_config: Option<serde_json::Value>,
}

impl Default for WrseBlock {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            k: 10,
            spacing: SpacingKind::Weighted,
            span_days: DEFAULT_EVEN_SPAN_DAYS,
            base_learner: LearnerName::Gbt,
            base_config: None,
        }
    }
}

impl WrseBlock {
    pub fn grid(&self) -> CliResult<HorizonGrid> {
        grid_for(self.spacing, self.gamma, self.k, self.span_days)
    }

    pub fn base(&self) -> CliResult<BaseLearner> {
        base_learner(self.base_learner, self.base_config.as_ref(), "models.wrse.base_config")
    }
}

pub fn grid_for(spacing: SpacingKind, gamma: f64, k: usize, span_days: f64) -> CliResult<HorizonGrid> {
    match spacing {
        SpacingKind::Weighted => weighted_horizons(gamma, k),
        SpacingKind::Even => even_horizons(k, span_days),
    }
    .map_err(|e| CliError::Config(e.to_string()))
}

fn base_learner(name: LearnerName, raw: Option<&serde_json::Value>, path: &str) -> CliResult<BaseLearner> {
    let empty = serde_json::Value::Object(Default::default());
    let raw = raw.unwrap_or(&empty);
    let base = match name {
        LearnerName::Gbt => BaseLearner::Gbt(from_value::<GbtConfig>(raw, path)?),
        LearnerName::Ffnet => BaseLearner::FeedForward(from_value::<FfnetConfig>(raw, path)?),
        LearnerName::Logistic => BaseLearner::Logistic(from_value::<LogisticConfig>(raw, path)?),
    };
    base.validate().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    Ok(base)
}

fn from_value<T: serde::de::DeserializeOwned>(raw: &serde_json::Value, path: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(raw).map_err(|e| {
        let inner = e.path().to_string();
        let at = if inner == "." { path.to_string() } else { format!("{path}.{inner}") };
        CliError::Config(format!("{at}: {}", e.inner()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametricBlock {
    pub head: HeadKind,
    /// Predictor and optimizer settings; omitted fields take their defaults.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictor: Option<serde_json::Value>,
}

impl Default for ParametricBlock {
    fn default() -> Self {
        Self {
            head: HeadKind::Exponential,
            predictor: None,
        }
    }
}

impl ParametricBlock {
    pub fn config(&self) -> CliResult<ParametricConfig> {
        let path = "models.parametric.predictor";
        let mut cfg: ParametricConfig = match &self.predictor {
            Some(raw) => {
                if raw.get("head").is_some() {
                    return Err(CliError::Config(format!(
                        "{path}.head: set the head at models.parametric.head"
                    )));
                }
                from_value(raw, path)?
            }
            None => ParametricConfig::default(),
        };
        cfg.head = self.head;
        cfg.validate().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeBlock {
    pub workers: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Also time a single-worker WRSE fit during `train`.
    pub benchmark: bool,
}

impl Default for RuntimeBlock {
    fn default() -> Self {
        Self {
            workers: 1,
            seed: 0,
            output_dir: PathBuf::from("out"),
            benchmark: false,
        }
    }
}

/// Reference predictors that need the generating scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePredictor {
    Oracle,
    AntiOracle,
    Random,
    Constant,
}

impl ReferencePredictor {
    pub fn as_str(self) -> &'static str {
        match self {
            ReferencePredictor::Oracle => "oracle",
            ReferencePredictor::AntiOracle => "anti_oracle",
            ReferencePredictor::Random => "random",
            ReferencePredictor::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalBlock {
    pub reference_predictors: Vec<ReferencePredictor>,
    /// CDF value of the constant reference predictor.
    pub constant_cdf: f64,
    /// Knots of the parametric recalibration maps.
    pub recalibration_knots_hours: Vec<f64>,
}

impl Default for EvalBlock {
    fn default() -> Self {
        Self {
            reference_predictors: Vec::new(),
            constant_cdf: 0.3,
            recalibration_knots_hours: (1..=240).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfigs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gbt: Option<GbtConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ffnet: Option<FfnetConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logistic: Option<LogisticConfig>,
}

/// Grid of WRSE variants; `weighted` expands once per entry of `gammas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub spacings: Vec<SpacingKind>,
    pub gammas: Vec<f64>,
    #[serde(rename = "Ks")]
    pub ks: Vec<usize>,
    pub base_learners: Vec<LearnerName>,
    pub span_days: f64,
    pub base_configs: BaseConfigs,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            spacings: vec![SpacingKind::Even, SpacingKind::Weighted],
            gammas: vec![0.3, 0.5, 0.8],
            ks: vec![5, 7, 10],
            base_learners: vec![LearnerName::Gbt, LearnerName::Ffnet, LearnerName::Logistic],
            span_days: DEFAULT_EVEN_SPAN_DAYS,
            base_configs: BaseConfigs::default(),
        }
    }
}

impl SweepBlock {
    pub fn base(&self, name: LearnerName) -> CliResult<BaseLearner> {
        let b = &self.base_configs;
        let base = match name {
            LearnerName::Gbt => BaseLearner::Gbt(b.gbt.clone().unwrap_or_default()),
            LearnerName::Ffnet => BaseLearner::FeedForward(b.ffnet.clone().unwrap_or_default()),
            LearnerName::Logistic => BaseLearner::Logistic(b.logistic.clone().unwrap_or_default()),
        };
        base.validate()
            .map_err(|e| CliError::Config(format!("sweep.base_configs.{}: {e}", name.as_str())))?;
        Ok(base)
    }
}

/// Command-line overrides of the runtime block.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A validated configuration with its paths resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
}

impl Experiment {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().unwrap_or(Path::new(""));
        Self::from_json(&text, base_dir, overrides)
    }

    pub fn from_json(text: &str, base_dir: &Path, overrides: &Overrides) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
        Self::new(config, base_dir, overrides)
    }

    pub fn new(mut config: ExperimentConfig, base_dir: &Path, overrides: &Overrides) -> CliResult<Self> {
        if let Some(w) = overrides.workers {
            config.runtime.workers = w;
        }
        if let Some(s) = overrides.seed {
            config.runtime.seed = s;
        }
        if let Some(files) = &mut config.scenario.files {
            files.stays = base_dir.join(&files.stays);
            files.features = base_dir.join(&files.features);
        }
        let output_dir = match &overrides.out {
            Some(out) => out.clone(),
            None => base_dir.join(&config.runtime.output_dir),
        };
        validate(&config)?;
        Ok(Self { config, output_dir })
    }
}

fn check_gamma(path: &str, g: f64) -> CliResult<()> {
    if g > 0.0 && g < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{path}: gamma {g} is outside (0, 1)")))
    }
}

fn in_block(path: &str, r: wrse_core::Result<()>) -> CliResult<()> {
    r.map_err(|e| CliError::Config(format!("{path}: {e}")))
}

pub fn validate(c: &ExperimentConfig) -> CliResult<()> {
    match (&c.scenario.synth, &c.scenario.files) {
        (Some(s), None) => {
            in_block("scenario.synth", s.scenario(c.runtime.seed).validate())?;
            if s.n_stays == 0 {
                return Err(CliError::Config("scenario.synth.n_stays: must be positive".into()));
            }
        }
        (None, Some(f)) => {
            for (key, p) in [("scenario.files.stays", &f.stays), ("scenario.files.features", &f.features)] {
                if !p.is_file() {
                    return Err(CliError::Config(format!("{key}: no such file {}", p.display())));
                }
            }
        }
        _ => {
            return Err(CliError::Config(
                "scenario: exactly one of `synth` and `files` must be given".into(),
            ))
        }
    }
    in_block("split", c.split.validate())?;
    if let Some(w) = &c.models.wrse {
        check_gamma("models.wrse.gamma", w.gamma)?;
        if w.k == 0 {
            return Err(CliError::Config("models.wrse.K: must be positive".into()));
        }
        w.grid()?;
        w.base()?;
    }
    if let Some(p) = &c.models.parametric {
        p.config()?;
    }
    for (i, &g) in c.metrics.gammas.iter().enumerate() {
        check_gamma(&format!("metrics.gammas[{i}]"), g)?;
    }
    in_block("metrics", c.metrics.validate())?;
    if c.runtime.workers == 0 {
        return Err(CliError::Config("runtime.workers: must be positive".into()));
    }
    let e = &c.eval;
    if !(0.0..=1.0).contains(&e.constant_cdf) {
        return Err(CliError::Config("eval.constant_cdf: must lie in [0, 1]".into()));
    }
    if e.recalibration_knots_hours.is_empty()
        || e.recalibration_knots_hours[0] <= 0.0
        || e.recalibration_knots_hours.windows(2).any(|w| !(w[0] < w[1]))
    {
        return Err(CliError::Config(
            "eval.recalibration_knots_hours: must be positive and strictly ascending".into(),
        ));
    }
    if c.scenario.synth.is_none() && !e.reference_predictors.is_empty() {
        return Err(CliError::Config(
            "eval.reference_predictors: reference predictors need a synthetic scenario".into(),
        ));
    }
    for (i, &g) in c.sweep.gammas.iter().enumerate() {
        check_gamma(&format!("sweep.gammas[{i}]"), g)?;
    }
    if let Some(k) = c.sweep.ks.iter().position(|&k| k == 0) {
        return Err(CliError::Config(format!("sweep.Ks[{k}]: must be positive")));
    }
    for &name in &c.sweep.base_learners {
        c.sweep.base(name)?;
    }
    for (i, &g) in c.importance.gammas.iter().enumerate() {
        check_gamma(&format!("importance.gammas[{i}]"), g)?;
    }
    in_block("importance", c.importance.validate())?;
    Ok(())
}
