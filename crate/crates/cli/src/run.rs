use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mixvol::dcc::{self, DccFit, FirstStep, FirstStepSummary, UnivariateVolFit};
use mixvol::diagnostics::{self, AdfTrend};
use mixvol::garch_midas::{self, FitOptions, GarchMidasModel, GarchMidasParams};
use mixvol::optimizer::OptimizerOptions;
use mixvol::report::{self, DccReport, DiagnosticsReport, GarchMidasReport, SpearmanEntry};
use mixvol::timeseries::{build_panel, intersect_calendars, load_csv, month_ordinal, CovariateInput};
use mixvol::{DatedSeries, MixedPanel};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    Command, CorrelationName, CovariateSpec, DccVariant, Form, ModelBlock, RunConfig, SimCovariate, Transform,
};
use crate::Failure;

/// Flag overrides.
#[derive(Debug, Clone)]
pub struct Settings {
    pub out: PathBuf,
    pub jobs: usize,
    pub seed: Option<u64>,
}

fn data(context: &str) -> impl Fn(mixvol::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

/// Run `command`; `Ok(true)` iff every requested fit converged.
pub fn run(command: Command, cfg: &RunConfig, settings: &Settings) -> Result<bool, Failure> {
    let mut cfg = cfg.clone();
    if settings.seed.is_some() {
        cfg.seed = settings.seed;
    }
    cfg.validate(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs.max(1))
        .build()
        .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    fs::create_dir_all(&settings.out)
        .map_err(|e| Failure::Data(format!("{}: {e}", settings.out.display())))?;
    pool.install(|| match command {
        Command::Describe => describe(&cfg, &settings.out),
        Command::FitGarchMidas => fit_garch_midas(&cfg, &settings.out),
        Command::FitDcc => fit_dcc(&cfg, &settings.out),
        Command::Simulate => simulate(&cfg, &settings.out),
    })
}

fn optimizer_options(cfg: &RunConfig) -> OptimizerOptions {
    let mut o = OptimizerOptions::default();
    if let Some(seed) = cfg.seed {
        o.seed = seed;
    }
    o.perturbed_starts = cfg.optimizer.starts;
    o.max_iterations = cfg.optimizer.max_iterations;
    o
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write(path, text)
}

fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Load a configured series and apply its transform.
fn load(cfg: &RunConfig, name: &str) -> Result<DatedSeries, Failure> {
    let s = &cfg.series[name];
    let path = cfg.resolve(&s.path);
    let loaded = load_csv(&path, &s.date_column, &s.value_column, s.frequency.into())
        .map_err(|e| Failure::Data(format!("series `{name}` ({}): {e}", path.display())))?;
    if loaded.dropped_rows > 0 {
        info!("series `{name}`: {} rows without a value skipped", loaded.dropped_rows);
    }
    let series = match s.transform {
        Transform::LogDiff => loaded.series.log_diff(),
        Transform::FirstDiff => loaded.series.first_diff(),
        Transform::None => Ok(loaded.series),
    }
    .map_err(data(&format!("series `{name}`")))?;
    Ok(series.with_name(name))
}

/// Covariate inputs for the non-RV entries of `specs`.
fn covariate_inputs(cfg: &RunConfig, specs: &[CovariateSpec]) -> Result<Vec<CovariateInput>, Failure> {
    specs
        .iter()
        .filter(|c| !c.is_rv())
        .map(|c| {
            let series = load(cfg, &c.name)?;
            let series = match c.form {
                Form::Level => series,
                Form::Volatility => {
                    diagnostics::ar_residual_volatility(&series, None)
                        .map_err(data(&format!("AR volatility of `{}`", c.name)))?
                        .squared_residuals
                }
            };
            Ok(CovariateInput {
                series: series.with_name(c.panel_name()),
                lags: c.lags,
            })
        })
        .collect()
}

/// Drop return days in months before every covariate has started.
fn trim_to_covariates(returns: &DatedSeries, inputs: &[CovariateInput], context: &str) -> DatedSeries {
    let Some(start) = inputs
        .iter()
        .filter_map(|c| c.series.dates().first().copied().map(month_ordinal))
        .max()
    else {
        return returns.clone();
    };
    let trimmed = returns.filter_dates(|d| month_ordinal(d) >= start);
    if trimmed.len() < returns.len() {
        info!(
            "{context}: {} return days before the covariates start dropped",
            returns.len() - trimmed.len()
        );
    }
    trimmed
}

fn panel_for(cfg: &RunConfig, returns: &DatedSeries, block: &ModelBlock) -> Result<MixedPanel, Failure> {
    let context = format!("model `{}`", block.label());
    let inputs = covariate_inputs(cfg, &block.covariates)?;
    let returns = trim_to_covariates(returns, &inputs, &context);
    let mut panel = build_panel(&returns, &inputs).map_err(data(&context))?;
    if panel.drops.return_days > 0 {
        info!("{context}: {} return days without covariate data dropped", panel.drops.return_days);
    }
    if let Some(rv) = block.covariates.iter().find(|c| c.is_rv()) {
        panel = panel.with_realized_volatility(rv.lags).map_err(data(&context))?;
    }
    Ok(panel)
}

fn describe(cfg: &RunConfig, out: &Path) -> Result<bool, Failure> {
    let d = cfg.describe.clone();
    let names: Vec<String> = d
        .as_ref()
        .and_then(|d| d.series.clone())
        .unwrap_or_else(|| cfg.series.keys().cloned().collect());
    let trend: AdfTrend = d.map(|d| d.adf_trend).unwrap_or_default().into();
    let series: Vec<DatedSeries> = names.iter().map(|n| load(cfg, n)).collect::<Result<_, _>>()?;

    let mut rep = DiagnosticsReport::default();
    for (name, s) in names.iter().zip(&series) {
        let transform = cfg.series[name].transform.label();
        let row = report::diagnostics_row(name, transform, s.values(), trend, &mut rep.warnings)
            .map_err(data(&format!("series `{name}`")))?;
        rep.rows.push(row);
    }
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let (a, b) = (&series[i], &series[j]);
            if a.frequency() != b.frequency() {
                continue;
            }
            let pair = intersect_calendars(a, b).and_then(|(x, y)| {
                diagnostics::spearman(x.values(), y.values()).map(|rho| (x.len(), rho))
            });
            match pair {
                Ok((n, rho)) => rep.spearman.push(SpearmanEntry {
                    a: names[i].clone(),
                    b: names[j].clone(),
                    n,
                    rho,
                }),
                Err(e) => rep
                    .warnings
                    .push(format!("{} / {}: Spearman correlation not computed ({e})", names[i], names[j])),
            }
        }
    }
    for w in &rep.warnings {
        warn!("{w}");
    }
    write_json(&out.join("report.json"), &rep)?;
    write(&out.join("report.txt"), rep.to_text())?;
    Ok(true)
}

#[derive(Serialize)]
struct ModelOutcome {
    label: String,
    spec: ModelBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<GarchMidasReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct GarchMidasRun {
    returns: String,
    n_days: usize,
    seed: u64,
    models: Vec<ModelOutcome>,
}

fn fit_garch_midas(cfg: &RunConfig, out: &Path) -> Result<bool, Failure> {
    let g = cfg.garch_midas.as_ref().expect("validated");
    let returns = load(cfg, &g.returns)?;
    let blocks = g.blocks();
    let panels: Vec<MixedPanel> = blocks
        .iter()
        .map(|b| panel_for(cfg, &returns, b))
        .collect::<Result<_, _>>()?;
    let optimizer = optimizer_options(cfg);

    // independent blocks run concurrently; collect keeps declaration order
    let fits: Vec<mixvol::Result<garch_midas::GarchMidasFit>> = blocks
        .par_iter()
        .zip(&panels)
        .map(|(block, panel)| {
            let options = FitOptions {
                fixed: block.fixed.clone(),
                optimizer,
                ..FitOptions::default()
            };
            garch_midas::fit(panel, &block.model(), &options)
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut all_converged = true;
    for (block, fit) in blocks.iter().zip(fits) {
        let label = block.label();
        match fit {
            Ok(fit) => {
                if !fit.converged {
                    warn!("model `{label}` did not converge");
                    all_converged = false;
                }
                let mut csv = Vec::new();
                report::write_components_csv(&mut csv, &fit).map_err(data(&label))?;
                write(&out.join("components").join(format!("{}.csv", slug(&label))), csv)?;
                outcomes.push(ModelOutcome {
                    label: label.clone(),
                    spec: block.clone(),
                    fit: Some(report::garch_midas_report(&label, &fit)),
                    error: None,
                });
            }
            Err(e) => {
                warn!("model `{label}` failed: {e}");
                all_converged = false;
                outcomes.push(ModelOutcome {
                    label,
                    spec: block.clone(),
                    fit: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let reports: Vec<GarchMidasReport> = outcomes.iter().filter_map(|o| o.fit.clone()).collect();
    let mut text = String::new();
    text.push_str("GARCH-MIDAS estimates (p-values in parentheses)\n\n");
    text.push_str(&report::estimates_table(&reports));
    text.push_str("\nRanking by BIC\n\n");
    text.push_str(&report::comparison_table(&reports));
    for o in outcomes.iter().filter(|o| o.error.is_some()) {
        text.push_str(&format!("\nFAILED {}: {}\n", o.label, o.error.as_deref().unwrap_or("")));
    }
    write(&out.join("comparison.txt"), text)?;
    write_json(
        &out.join("report.json"),
        &GarchMidasRun {
            returns: g.returns.clone(),
            n_days: returns.len(),
            seed: optimizer.seed,
            models: outcomes,
        },
    )?;
    Ok(all_converged)
}

#[derive(Serialize)]
struct FirstStepSide {
    name: String,
    n_obs: usize,
    converged: bool,
    summary: FirstStepSummary,
}

#[derive(Serialize)]
struct FirstStepRecord {
    key: String,
    a: FirstStepSide,
    b: FirstStepSide,
    residual_days: usize,
}

#[derive(Serialize)]
struct VariantOutcome {
    label: String,
    spec: DccVariant,
    first_step: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<DccReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct DccRun {
    a: String,
    b: String,
    common_days: usize,
    dropped_a: usize,
    dropped_b: usize,
    window: usize,
    span: usize,
    seed: u64,
    first_steps: Vec<FirstStepRecord>,
    fits: Vec<VariantOutcome>,
}

fn side(fit: &UnivariateVolFit) -> FirstStepSide {
    FirstStepSide {
        name: fit.name.clone(),
        n_obs: fit.residuals.len(),
        converged: fit.converged,
        summary: fit.summary.clone(),
    }
}

fn fit_dcc(cfg: &RunConfig, out: &Path) -> Result<bool, Failure> {
    let d = cfg.dcc.as_ref().expect("validated");
    let a = load(cfg, &d.a)?;
    let b = load(cfg, &d.b)?;
    let (a, b, dropped_a, dropped_b) = {
        let (x, y) = intersect_calendars(&a, &b).map_err(data("dcc pair"))?;
        let (da, db) = (a.len() - x.len(), b.len() - y.len());
        if da + db > 0 {
            info!(
                "calendars intersected: {} common days ({da} dropped from `{}`, {db} from `{}`)",
                x.len(),
                d.a,
                d.b
            );
        }
        (x, y, da, db)
    };
    let optimizer = optimizer_options(cfg);

    let variants = d.variants();
    let mut steps: BTreeMap<String, (UnivariateVolFit, UnivariateVolFit)> = BTreeMap::new();
    let mut step_order = Vec::new();
    for v in &variants {
        let key = v.first_step_key();
        if steps.contains_key(&key) {
            continue;
        }
        let model: Option<GarchMidasModel> = v.first_step_model();
        let inputs = covariate_inputs(cfg, &v.covariates)?;
        let first = match &model {
            None => FirstStep::Garch11,
            Some(m) => FirstStep::GarchMidas {
                model: m,
                covariates: &inputs,
            },
        };
        let context = format!("first step `{key}`");
        let (ta, tb) = (
            trim_to_covariates(&a, &inputs, &context),
            trim_to_covariates(&b, &inputs, &context),
        );
        let (fa, fb) = rayon::join(
            || dcc::standardize(&ta, first, &optimizer),
            || dcc::standardize(&tb, first, &optimizer),
        );
        let pair = (fa.map_err(data(&context))?, fb.map_err(data(&context))?);
        step_order.push(key.clone());
        steps.insert(key, pair);
    }

    let mut all_converged = true;
    let mut records = Vec::new();
    let mut pairs = BTreeMap::new();
    for key in &step_order {
        let (fa, fb) = &steps[key];
        all_converged &= fa.converged && fb.converged;
        let pair = dcc::align(fa, fb).map_err(data(&format!("first step `{key}`")))?;
        records.push(FirstStepRecord {
            key: key.clone(),
            a: side(fa),
            b: side(fb),
            residual_days: pair.dates.len(),
        });
        pairs.insert(key.clone(), pair);
    }

    let fits: Vec<mixvol::Result<DccFit>> = variants
        .par_iter()
        .map(|v| {
            let p = &pairs[&v.first_step_key()];
            match v.correlation {
                CorrelationName::Garch => dcc::dcc_garch_fit(&p.a, &p.b, &p.dates, &optimizer),
                CorrelationName::Midas => {
                    dcc::dcc_midas_fit(&p.a, &p.b, &p.dates, d.window, d.span, d.scheme(), &optimizer)
                }
            }
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut good: Vec<(String, DccFit)> = Vec::new();
    for (v, fit) in variants.iter().zip(fits) {
        let label = v.label();
        let mut outcome = VariantOutcome {
            label: label.clone(),
            spec: v.clone(),
            first_step: v.first_step_key(),
            fit: None,
            error: None,
        };
        match fit {
            Ok(fit) => {
                if !fit.converged {
                    warn!("`{label}` did not converge");
                    all_converged = false;
                }
                if fit.degenerate {
                    warn!("`{label}`: residuals are perfectly correlated");
                }
                outcome.fit = Some(report::dcc_report(&label, &fit));
                good.push((label, fit));
            }
            Err(e) => {
                warn!("`{label}` failed: {e}");
                all_converged = false;
                outcome.error = Some(e.to_string());
            }
        }
        outcomes.push(outcome);
    }

    let reports: Vec<DccReport> = outcomes.iter().filter_map(|o| o.fit.clone()).collect();
    let mut text = format!(
        "Correlation models for {} / {} (p-values in parentheses)\n\n",
        d.a, d.b
    );
    text.push_str(&report::dcc_table(&reports));
    for o in outcomes.iter().filter(|o| o.error.is_some()) {
        text.push_str(&format!("\nFAILED {}: {}\n", o.label, o.error.as_deref().unwrap_or("")));
    }
    write(&out.join("comparison.txt"), text)?;
    let refs: Vec<(&str, &DccFit)> = good.iter().map(|(l, f)| (l.as_str(), f)).collect();
    let mut csv = Vec::new();
    report::write_correlations_csv(&mut csv, &refs).map_err(data("correlations"))?;
    write(&out.join("correlations.csv"), csv)?;
    write_json(
        &out.join("report.json"),
        &DccRun {
            a: d.a.clone(),
            b: d.b.clone(),
            common_days: a.len(),
            dropped_a,
            dropped_b,
            window: d.window,
            span: d.span,
            seed: optimizer.seed,
            first_steps: records,
            fits: outcomes,
        },
    )?;
    Ok(all_converged)
}

#[derive(Serialize)]
struct Truth<'a> {
    seed: u64,
    periods: usize,
    days_per_period: usize,
    model: GarchMidasModel,
    params: GarchMidasParams,
    covariates: &'a [SimCovariate],
    files: Vec<String>,
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<bool, Failure> {
    let s = cfg.simulate.as_ref().expect("validated");
    let seed = cfg.seed.expect("validated");
    let model = s.model();
    let params = s.params();
    let generators: Vec<_> = s.covariates.iter().map(SimCovariate::generator).collect();
    let sim = garch_midas::simulate(&model, &params, &generators, s.periods, s.days_per_period, seed)
        .map_err(|e| Failure::Config(format!("simulate: {e}")))?;

    let mut files = vec!["returns.csv".to_string()];
    let mut returns = String::from("date,return\n");
    for (d, r) in sim.panel.day_dates.iter().zip(&sim.panel.returns) {
        returns.push_str(&format!("{d},{r}\n"));
    }
    write(&out.join("returns.csv"), returns)?;
    for c in &sim.panel.covariates {
        let mut text = String::from("date,value\n");
        for (d, v) in c.period_dates.iter().zip(&c.values) {
            text.push_str(&format!("{d},{v}\n"));
        }
        let file = format!("{}.csv", slug(&c.name));
        write(&out.join(&file), text)?;
        files.push(file);
    }
    let mut comp = String::from("date,tau,g,variance\n");
    for ((d, t), g) in sim.panel.day_dates.iter().zip(&sim.tau).zip(&sim.g) {
        comp.push_str(&format!("{d},{t},{g},{}\n", t * g));
    }
    write(&out.join("components").join("truth.csv"), comp)?;
    files.push("components/truth.csv".into());
    write_json(
        &out.join("truth.json"),
        &Truth {
            seed,
            periods: s.periods,
            days_per_period: s.days_per_period,
            model,
            params,
            covariates: &s.covariates,
            files,
        },
    )?;
    info!("simulated {} days over {} periods", sim.panel.n_days(), s.periods);
    Ok(true)
}
