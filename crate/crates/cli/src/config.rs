//! Run configuration, read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mixvol::diagnostics::AdfTrend;
use mixvol::garch_midas::{CovariateGenerator, GarchMidasModel, GarchMidasParams, Link, ModelCovariate};
use mixvol::{Frequency, WeightScheme};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Name reserved for the realized volatility of the return series.
pub const RV: &str = "rv";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub series: BTreeMap<String, SeriesConfig>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub describe: Option<DescribeConfig>,
    pub garch_midas: Option<GarchMidasConfig>,
    pub dcc: Option<DccConfig>,
    pub simulate: Option<SimulateConfig>,
    /// Directory the config was read from; relative paths resolve against it.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    LogDiff,
    FirstDiff,
    #[default]
    None,
}

impl Transform {
    pub fn label(self) -> &'static str {
        match self {
            Transform::LogDiff => "log-differencing",
            Transform::FirstDiff => "first-differencing",
            Transform::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyName {
    #[default]
    Daily,
    Monthly,
}

impl From<FrequencyName> for Frequency {
    fn from(f: FrequencyName) -> Self {
        match f {
            FrequencyName::Daily => Frequency::Daily,
            FrequencyName::Monthly => Frequency::Monthly,
        }
    }
}

fn default_date_column() -> String {
    "date".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub path: PathBuf,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    pub value_column: String,
    #[serde(default)]
    pub frequency: FrequencyName,
    #[serde(default)]
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_starts() -> usize {
    5
}

fn default_iterations() -> usize {
    2000
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: default_starts(),
            max_iterations: default_iterations(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendName {
    #[default]
    Constant,
    ConstantTrend,
}

impl From<TrendName> for AdfTrend {
    fn from(t: TrendName) -> Self {
        match t {
            TrendName::Constant => AdfTrend::Constant,
            TrendName::ConstantTrend => AdfTrend::ConstantTrend,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescribeConfig {
    /// Defaults to every configured series.
    pub series: Option<Vec<String>>,
    #[serde(default)]
    pub adf_trend: TrendName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    #[default]
    Level,
    /// Squared residuals of an AR(p) fit to the series.
    Volatility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    RestrictedBeta,
    Beta,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkName {
    #[default]
    Identity,
    Log,
}

impl From<LinkName> for Link {
    fn from(l: LinkName) -> Self {
        match l {
            LinkName::Identity => Link::Identity,
            LinkName::Log => Link::Log,
        }
    }
}

fn default_lags() -> usize {
    12
}

fn yes() -> bool {
    true
}

/// A covariate reference inside a model block.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    /// A configured series, or `rv` for the realized volatility of the returns.
    pub name: String,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default)]
    pub form: Form,
    #[serde(default)]
    pub scheme: SchemeName,
    /// Starting values of the weight parameters.
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub omega: Option<f64>,
}

impl CovariateSpec {
    pub fn is_rv(&self) -> bool {
        self.name == RV
    }

    /// Name of the covariate inside the panel.
    pub fn panel_name(&self) -> String {
        if self.is_rv() {
            "RV".into()
        } else {
            match self.form {
                Form::Level => self.name.clone(),
                Form::Volatility => format!("{}_vol", self.name),
            }
        }
    }

    pub fn label(&self) -> String {
        if self.is_rv() {
            "RV".into()
        } else {
            match self.form {
                Form::Level => format!("{}-level", self.name),
                Form::Volatility => format!("{}-volatility", self.name),
            }
        }
    }

    pub fn scheme(&self) -> WeightScheme {
        match self.scheme {
            SchemeName::RestrictedBeta => WeightScheme::restricted_beta(self.omega2.unwrap_or(3.0)),
            SchemeName::Beta => WeightScheme::beta(self.omega1.unwrap_or(1.5), self.omega2.unwrap_or(3.0)),
            SchemeName::Exp => WeightScheme::ExpWeighted {
                omega: self.omega.unwrap_or(0.7),
            },
        }
    }

    pub fn model_covariate(&self) -> ModelCovariate {
        ModelCovariate {
            name: self.panel_name(),
            lags: self.lags,
            scheme: self.scheme(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarchMidasConfig {
    /// Series holding the daily returns.
    pub returns: String,
    #[serde(default)]
    pub models: Vec<ModelBlock>,
    pub grid: Option<GridBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub label: Option<String>,
    pub covariates: Vec<CovariateSpec>,
    #[serde(default)]
    pub link: LinkName,
    #[serde(default = "yes")]
    pub asymmetric: bool,
    /// Parameters held at given values, by reported name.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

impl ModelBlock {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            self.covariates
                .iter()
                .map(CovariateSpec::label)
                .collect::<Vec<_>>()
                .join("+")
        })
    }

    pub fn model(&self) -> GarchMidasModel {
        GarchMidasModel {
            covariates: self.covariates.iter().map(CovariateSpec::model_covariate).collect(),
            link: self.link.into(),
            asymmetric: self.asymmetric,
        }
    }
}

fn both_forms() -> Vec<Form> {
    vec![Form::Level, Form::Volatility]
}

/// Expands to one model per covariate and form.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub covariates: Vec<String>,
    #[serde(default = "both_forms")]
    pub forms: Vec<Form>,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default)]
    pub link: LinkName,
    #[serde(default = "yes")]
    pub asymmetric: bool,
    /// Added as a second covariate to every grid model.
    pub companion: Option<CovariateSpec>,
}

impl GarchMidasConfig {
    /// Explicit models followed by the grid, in declaration order.
    pub fn blocks(&self) -> Vec<ModelBlock> {
        let mut out = self.models.clone();
        if let Some(g) = &self.grid {
            for name in &g.covariates {
                for form in &g.forms {
                    let mut covariates = vec![CovariateSpec {
                        name: name.clone(),
                        lags: g.lags,
                        form: *form,
                        scheme: g.scheme,
                        omega1: None,
                        omega2: None,
                        omega: None,
                    }];
                    covariates.extend(g.companion.clone());
                    out.push(ModelBlock {
                        label: None,
                        covariates,
                        link: g.link,
                        asymmetric: g.asymmetric,
                        fixed: BTreeMap::new(),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationName {
    Garch,
    Midas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstStepName {
    #[default]
    Garch11,
    GarchMidas,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DccVariant {
    pub label: Option<String>,
    pub correlation: CorrelationName,
    #[serde(default)]
    pub first_step: FirstStepName,
    /// First-step GARCH-MIDAS covariates, applied to both series.
    #[serde(default)]
    pub covariates: Vec<CovariateSpec>,
    #[serde(default)]
    pub link: LinkName,
    #[serde(default = "yes")]
    pub asymmetric: bool,
}

impl DccVariant {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let head = match self.correlation {
                CorrelationName::Garch => "DCC-GARCH",
                CorrelationName::Midas => "DCC-MIDAS",
            };
            match self.first_step {
                FirstStepName::Garch11 => head.to_string(),
                FirstStepName::GarchMidas => {
                    let covs: Vec<String> = self.covariates.iter().map(CovariateSpec::label).collect();
                    format!("{head}-{}", covs.join("+"))
                }
            }
        })
    }

    /// Key identifying the first step, shared between variants.
    pub fn first_step_key(&self) -> String {
        match self.first_step {
            FirstStepName::Garch11 => "garch11".into(),
            FirstStepName::GarchMidas => format!(
                "garch-midas[{}]",
                serde_json::to_string(&(&self.covariates, self.link, self.asymmetric)).unwrap_or_default()
            ),
        }
    }

    pub fn first_step_model(&self) -> Option<GarchMidasModel> {
        (self.first_step == FirstStepName::GarchMidas).then(|| GarchMidasModel {
            covariates: self.covariates.iter().map(CovariateSpec::model_covariate).collect(),
            link: self.link.into(),
            asymmetric: self.asymmetric,
        })
    }
}

fn default_window() -> usize {
    mixvol::dcc::DEFAULT_WINDOW
}

fn default_span() -> usize {
    mixvol::dcc::DEFAULT_SPAN
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DccConfig {
    pub a: String,
    pub b: String,
    /// Days per rolling correlation (`N_c`).
    #[serde(default = "default_window")]
    pub window: usize,
    /// Lagged correlations in the long-run filter (`K_c`).
    #[serde(default = "default_span")]
    pub span: usize,
    #[serde(default)]
    pub scheme: SchemeName,
    pub omega2: Option<f64>,
    pub omega: Option<f64>,
    #[serde(default)]
    pub variants: Vec<DccVariant>,
}

impl DccConfig {
    pub fn variants(&self) -> Vec<DccVariant> {
        if !self.variants.is_empty() {
            return self.variants.clone();
        }
        [CorrelationName::Garch, CorrelationName::Midas]
            .into_iter()
            .map(|correlation| DccVariant {
                label: None,
                correlation,
                first_step: FirstStepName::Garch11,
                covariates: Vec::new(),
                link: LinkName::Identity,
                asymmetric: true,
            })
            .collect()
    }

    pub fn scheme(&self) -> WeightScheme {
        match self.scheme {
            SchemeName::Exp => WeightScheme::ExpWeighted {
                omega: self.omega.unwrap_or(0.7),
            },
            _ => WeightScheme::restricted_beta(self.omega2.unwrap_or(3.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorName {
    Rv,
    Ar1,
    LogAr1,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimCovariate {
    pub name: String,
    #[serde(default = "default_lags")]
    pub lags: usize,
    pub theta: f64,
    #[serde(default)]
    pub scheme: SchemeName,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub omega: Option<f64>,
    pub generator: GeneratorName,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub sd: f64,
}

impl SimCovariate {
    pub fn generator(&self) -> CovariateGenerator {
        match self.generator {
            GeneratorName::Rv => CovariateGenerator::RealizedVolatility,
            GeneratorName::Ar1 => CovariateGenerator::Ar1 {
                mean: self.mean,
                phi: self.phi,
                sd: self.sd,
            },
            GeneratorName::LogAr1 => CovariateGenerator::LogAr1 {
                mean: self.mean,
                phi: self.phi,
                sd: self.sd,
            },
        }
    }

    fn scheme(&self) -> WeightScheme {
        CovariateSpec {
            name: self.name.clone(),
            lags: self.lags,
            form: Form::Level,
            scheme: self.scheme,
            omega1: self.omega1,
            omega2: self.omega2,
            omega: self.omega,
        }
        .scheme()
    }
}

fn default_periods() -> usize {
    240
}

fn default_days() -> usize {
    22
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default = "default_days")]
    pub days_per_period: usize,
    #[serde(default)]
    pub link: LinkName,
    #[serde(default = "yes")]
    pub asymmetric: bool,
    #[serde(default)]
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    pub m: f64,
    pub covariates: Vec<SimCovariate>,
}

impl SimulateConfig {
    pub fn model(&self) -> GarchMidasModel {
        GarchMidasModel {
            covariates: self
                .covariates
                .iter()
                .map(|c| ModelCovariate {
                    name: c.name.clone(),
                    lags: c.lags,
                    scheme: c.scheme(),
                })
                .collect(),
            link: self.link.into(),
            asymmetric: self.asymmetric,
        }
    }

    pub fn params(&self) -> GarchMidasParams {
        GarchMidasParams {
            mu: self.mu,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            m: self.m,
            theta: self.covariates.iter().map(|c| c.theta).collect(),
            schemes: self.covariates.iter().map(SimCovariate::scheme).collect(),
        }
    }
}

/// Which subcommand the config is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Describe,
    FitGarchMidas,
    FitDcc,
    Simulate,
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn check_series(&self, field: &str, name: &str) -> Result<(), Failure> {
        if self.series.contains_key(name) {
            Ok(())
        } else {
            Err(config_error(format!("{field}: unknown series `{name}`")))
        }
    }

    fn check_covariates(&self, field: &str, covs: &[CovariateSpec], rv_allowed: bool) -> Result<(), Failure> {
        if covs.is_empty() || covs.len() > 2 {
            return Err(config_error(format!(
                "{field}: a model takes one or two covariates, got {}",
                covs.len()
            )));
        }
        for (i, c) in covs.iter().enumerate() {
            let f = format!("{field}[{i}]");
            if c.is_rv() {
                if !rv_allowed {
                    return Err(config_error(format!("{f}.name: `rv` is not available here")));
                }
            } else {
                self.check_series(&format!("{f}.name"), &c.name)?;
            }
            if c.lags == 0 {
                return Err(config_error(format!("{f}.lags: must be at least 1")));
            }
            c.scheme()
                .validate()
                .map_err(|e| config_error(format!("{f}.scheme: {e}")))?;
        }
        let names: Vec<String> = covs.iter().map(CovariateSpec::panel_name).collect();
        if names.len() == 2 && names[0] == names[1] {
            return Err(config_error(format!("{field}: the same covariate appears twice")));
        }
        Ok(())
    }

    /// Check the sections `command` needs.
    pub fn validate(&self, command: Command) -> Result<(), Failure> {
        if self.series.contains_key(RV) {
            return Err(config_error(format!("series.{RV}: the name is reserved for realized volatility")));
        }
        if self.optimizer.max_iterations == 0 {
            return Err(config_error("optimizer.max_iterations: must be at least 1"));
        }
        match command {
            Command::Describe => {
                let d = self.describe.as_ref();
                let list = d.and_then(|d| d.series.clone());
                match list {
                    Some(names) => {
                        if names.is_empty() {
                            return Err(config_error("describe.series: empty list"));
                        }
                        for (i, n) in names.iter().enumerate() {
                            self.check_series(&format!("describe.series[{i}]"), n)?;
                        }
                    }
                    None if self.series.is_empty() => return Err(config_error("series: no series configured")),
                    None => {}
                }
            }
            Command::FitGarchMidas => {
                let g = self
                    .garch_midas
                    .as_ref()
                    .ok_or_else(|| config_error("garch_midas: section missing"))?;
                self.check_series("garch_midas.returns", &g.returns)?;
                if g.models.is_empty() && g.grid.as_ref().is_none_or(|gr| gr.covariates.is_empty()) {
                    return Err(config_error("garch_midas.models: no models to fit"));
                }
                for (i, m) in g.models.iter().enumerate() {
                    self.check_covariates(&format!("garch_midas.models[{i}].covariates"), &m.covariates, true)?;
                }
                if let Some(grid) = &g.grid {
                    for (i, n) in grid.covariates.iter().enumerate() {
                        self.check_series(&format!("garch_midas.grid.covariates[{i}]"), n)?;
                    }
                    if grid.forms.is_empty() {
                        return Err(config_error("garch_midas.grid.forms: empty list"));
                    }
                    if grid.lags == 0 {
                        return Err(config_error("garch_midas.grid.lags: must be at least 1"));
                    }
                    if let Some(c) = &grid.companion {
                        self.check_covariates("garch_midas.grid.companion", std::slice::from_ref(c), true)?;
                    }
                }
                let mut labels: Vec<String> = g.blocks().iter().map(ModelBlock::label).collect();
                labels.sort();
                if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
                    return Err(config_error(format!("garch_midas.models: duplicate label `{}`", w[0])));
                }
            }
            Command::FitDcc => {
                let d = self.dcc.as_ref().ok_or_else(|| config_error("dcc: section missing"))?;
                self.check_series("dcc.a", &d.a)?;
                self.check_series("dcc.b", &d.b)?;
                if d.window < 2 {
                    return Err(config_error("dcc.window: must be at least 2"));
                }
                if d.span == 0 {
                    return Err(config_error("dcc.span: must be at least 1"));
                }
                if d.scheme == SchemeName::Beta {
                    return Err(config_error(
                        "dcc.scheme: the correlation filter supports restricted-beta or exp",
                    ));
                }
                d.scheme()
                    .validate()
                    .map_err(|e| config_error(format!("dcc.scheme: {e}")))?;
                for (i, v) in d.variants.iter().enumerate() {
                    let f = format!("dcc.variants[{i}]");
                    match v.first_step {
                        FirstStepName::Garch11 if !v.covariates.is_empty() => {
                            return Err(config_error(format!(
                                "{f}.covariates: only used with first_step = \"garch-midas\""
                            )))
                        }
                        FirstStepName::GarchMidas => {
                            self.check_covariates(&format!("{f}.covariates"), &v.covariates, true)?
                        }
                        _ => {}
                    }
                }
                let mut labels: Vec<String> = d.variants().iter().map(DccVariant::label).collect();
                labels.sort();
                if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
                    return Err(config_error(format!("dcc.variants: duplicate label `{}`", w[0])));
                }
            }
            Command::Simulate => {
                let s = self
                    .simulate
                    .as_ref()
                    .ok_or_else(|| config_error("simulate: section missing"))?;
                if self.seed.is_none() {
                    return Err(config_error("seed: required for simulation (config `seed` or --seed)"));
                }
                if s.covariates.is_empty() || s.covariates.len() > 2 {
                    return Err(config_error("simulate.covariates: one or two covariates required"));
                }
                for (i, c) in s.covariates.iter().enumerate() {
                    if c.name.is_empty() || c.name.contains(['/', '\\']) {
                        return Err(config_error(format!("simulate.covariates[{i}].name: invalid name")));
                    }
                }
                s.model()
                    .validate()
                    .map_err(|e| config_error(format!("simulate.covariates: {e}")))?;
                s.params()
                    .validate(&s.model())
                    .map_err(|e| config_error(format!("simulate: {e}")))?;
                if !(1..=28).contains(&s.days_per_period) || s.periods == 0 {
                    return Err(config_error(
                        "simulate.days_per_period: need 1..=28 days and at least one period",
                    ));
                }
            }
        }
        Ok(())
    }
}
