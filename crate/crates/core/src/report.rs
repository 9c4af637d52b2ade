//! Serializable reports, fixed-width text tables and CSV path dumps.
//!
//! Text tables print estimates with four decimals and significance stars
//! (`***` 1%, `**` 5%, `*` 10%), with p-values in parentheses on the line
//! below. JSON reports keep full precision.

use std::fmt::Write as _;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::dcc::{correlation_report, DccFit, DccKind};
use crate::diagnostics::{self, AdfTrend, SummaryStats, TestResult, DEFAULT_LAGS};
use crate::error::{Error, Result};
use crate::garch_midas::{GarchMidasFit, Link, ParamEstimate};
use crate::weights::WeightScheme;

/// Four decimals; `NA` for non-finite values and no negative zero.
pub fn fmt4(v: f64) -> String {
    if !v.is_finite() {
        return "NA".into();
    }
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

pub fn stars(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.01 => "***",
        Some(p) if p < 0.05 => "**",
        Some(p) if p < 0.1 => "*",
        _ => "",
    }
}

/// Columns from `left` on are right-aligned.
fn render(header: &[String], rows: &[Vec<String>], left: usize) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for row in std::iter::once(header).chain(rows.iter().map(|r| r.as_slice())) {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (i, cell) in row.iter().enumerate() {
            let pad = width[i] - cell.chars().count();
            if i > 0 {
                s.push_str("  ");
            }
            if i < left {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_string()
    };
    let total: usize = width.iter().sum::<usize>() + 2 * (cols - 1);
    let mut out = String::new();
    out.push_str(&line(header));
    out.push('\n');
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// Descriptive statistics and test battery of one series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub name: String,
    pub transform: String,
    pub n: usize,
    pub stats: SummaryStats,
    /// Zero variance; the tests are not run.
    pub degenerate: bool,
    pub kolmogorov_smirnov: Option<TestResult>,
    pub jarque_bera: Option<TestResult>,
    pub ljung_box: Option<TestResult>,
    pub arch_lm: Option<TestResult>,
    pub adf: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearmanEntry {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagnosticsRow>,
    pub spearman: Vec<SpearmanEntry>,
    pub warnings: Vec<String>,
}

/// Run the test battery on `values`. A constant series yields a row
/// without statistics and a warning.
pub fn diagnostics_row(
    name: &str,
    transform: &str,
    values: &[f64],
    trend: AdfTrend,
    warnings: &mut Vec<String>,
) -> Result<DiagnosticsRow> {
    let stats = diagnostics::describe(values)?;
    let degenerate = !(stats.sd > 0.0);
    if degenerate {
        warnings.push(format!("{name}: zero variance, tests skipped"));
    }
    let mut row = DiagnosticsRow {
        name: name.into(),
        transform: transform.into(),
        n: values.len(),
        stats,
        degenerate,
        kolmogorov_smirnov: None,
        jarque_bera: None,
        ljung_box: None,
        arch_lm: None,
        adf: None,
    };
    if degenerate {
        return Ok(row);
    }
    let mut attempt = |label: &str, r: Result<TestResult>| match r {
        Ok(t) => Some(t),
        Err(e) => {
            warnings.push(format!("{name}: {label} not computed ({e})"));
            None
        }
    };
    row.kolmogorov_smirnov = attempt("K-S", diagnostics::ks_normal(values));
    row.jarque_bera = attempt("J-B", diagnostics::jarque_bera(values));
    row.ljung_box = attempt("L-B", diagnostics::ljung_box(values, DEFAULT_LAGS));
    row.arch_lm = attempt("ARCH-LM", diagnostics::arch_lm(values, DEFAULT_LAGS));
    row.adf = attempt("ADF", diagnostics::adf_test(values, trend));
    Ok(row)
}

fn p_cell(t: &Option<TestResult>) -> String {
    t.as_ref().map_or("NA".into(), |t| fmt4(t.p_value))
}

impl DiagnosticsReport {
    /// Obs / Min / Max / Mean / SD / Skew / Kurt plus normality and
    /// white-noise p-values.
    pub fn descriptive_table(&self) -> String {
        let header: Vec<String> = [
            "", "Obs.", "Min", "Max", "Mean", "SD", "Skew.", "Kurt.", "K-S p", "J-B p", "L-B p", "ARCH p",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.name.clone(), r.n.to_string()];
                let s = &r.stats;
                row.extend(
                    [s.min, s.max, s.mean, s.sd, s.skewness, s.excess_kurtosis]
                        .iter()
                        .map(|v| fmt4(*v)),
                );
                row.extend([
                    p_cell(&r.kolmogorov_smirnov),
                    p_cell(&r.jarque_bera),
                    p_cell(&r.ljung_box),
                    p_cell(&r.arch_lm),
                ]);
                row
            })
            .collect();
        render(&header, &rows, 1)
    }

    /// ADF statistic with the 1% critical value in parentheses.
    pub fn stationarity_table(&self) -> String {
        let header: Vec<String> = ["Variable", "Pre-processing", "ADF (1% cv)", "P value"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let (stat, p) = match &r.adf {
                    Some(t) => {
                        let cv = t.critical_values.as_ref().and_then(|c| c.get("1%")).copied();
                        (
                            format!("{}({})", fmt4(t.statistic), cv.map_or("NA".into(), fmt4)),
                            fmt4(t.p_value),
                        )
                    }
                    None => ("NA".into(), "NA".into()),
                };
                vec![r.name.clone(), r.transform.clone(), stat, p]
            })
            .collect();
        render(&header, &rows, 2)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("Descriptive statistics\n\n");
        out.push_str(&self.descriptive_table());
        out.push_str("\nStationarity\n\n");
        out.push_str(&self.stationarity_table());
        if !self.spearman.is_empty() {
            out.push_str("\nSpearman correlation\n\n");
            for s in &self.spearman {
                let _ = writeln!(out, "{} / {}: {} (n = {})", s.a, s.b, fmt4(s.rho), s.n);
            }
        }
        if !self.warnings.is_empty() {
            out.push_str("\nWarnings\n\n");
            for w in &self.warnings {
                let _ = writeln!(out, "- {w}");
            }
        }
        out
    }
}

/// Sample span of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleInfo {
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    /// Panel days dropped as MIDAS burn-in.
    pub burn_in_days: usize,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GarchMidasReport {
    pub label: String,
    pub covariates: Vec<String>,
    pub lags: Vec<usize>,
    pub link: Link,
    pub asymmetric: bool,
    pub estimates: Vec<ParamEstimate>,
    pub llh: f64,
    pub bic: f64,
    pub aic: f64,
    pub n_params: usize,
    pub variance_ratio: Option<f64>,
    pub sample: SampleInfo,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub fn garch_midas_report(label: &str, fit: &GarchMidasFit) -> GarchMidasReport {
    GarchMidasReport {
        label: label.into(),
        covariates: fit.model.covariates.iter().map(|c| c.name.clone()).collect(),
        lags: fit.model.covariates.iter().map(|c| c.lags).collect(),
        link: fit.model.link,
        asymmetric: fit.model.asymmetric,
        estimates: fit.estimates.clone(),
        llh: fit.llh,
        bic: fit.bic,
        aic: fit.aic,
        n_params: fit.n_params,
        variance_ratio: fit.variance_ratio,
        sample: SampleInfo {
            first_date: fit.dates.first().copied(),
            last_date: fit.dates.last().copied(),
            burn_in_days: fit.first_day,
            n_obs: fit.n_obs,
        },
        converged: fit.converged,
        iterations: fit.iterations,
        gradient_norm: fit.gradient_norm,
    }
}

fn estimate_cells(e: Option<&ParamEstimate>) -> (String, String) {
    match e {
        None => ("-".into(), String::new()),
        Some(e) if e.fixed => (fmt4(e.value), "(fixed)".into()),
        Some(e) => (
            format!("{}{}", fmt4(e.value), stars(e.p_value)),
            e.p_value.map_or("(NA)".into(), |p| format!("({})", fmt4(p))),
        ),
    }
}

/// Parameter estimates of several fits, one block per fit: estimates with
/// stars, then p-values in parentheses.
pub fn estimates_table(reports: &[GarchMidasReport]) -> String {
    let mut names: Vec<String> = Vec::new();
    for r in reports {
        for e in &r.estimates {
            if !names.contains(&e.name) {
                names.push(e.name.clone());
            }
        }
    }
    let mut header = vec!["Model".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["BIC", "LLH", "VR(X)"].iter().map(|s| s.to_string()));
    let mut rows = Vec::new();
    for r in reports {
        let mut top = vec![r.label.clone()];
        let mut bottom = vec![String::new()];
        for n in &names {
            let (v, p) = estimate_cells(r.estimates.iter().find(|e| &e.name == n));
            top.push(v);
            bottom.push(p);
        }
        top.push(fmt4(r.bic));
        top.push(fmt4(r.llh));
        top.push(r.variance_ratio.map_or("NA".into(), fmt4));
        bottom.extend(std::iter::repeat_n(String::new(), 3));
        rows.push(top);
        rows.push(bottom);
    }
    render(&header, &rows, 1)
}

/// One line per fit, sorted by BIC (smallest first; ties by label).
pub fn comparison_table(reports: &[GarchMidasReport]) -> String {
    let mut sorted: Vec<&GarchMidasReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.bic.total_cmp(&b.bic).then_with(|| a.label.cmp(&b.label)));
    let header: Vec<String> = ["Rank", "Model", "theta", "omega2", "LLH", "BIC", "VR(X)", "Converged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = sorted
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let first = |prefix: &str| {
                let e = r.estimates.iter().find(|e| e.name.starts_with(prefix));
                estimate_cells(e).0
            };
            vec![
                (i + 1).to_string(),
                r.label.clone(),
                first("theta"),
                first("omega2"),
                fmt4(r.llh),
                fmt4(r.bic),
                r.variance_ratio.map_or("NA".into(), fmt4),
                if r.converged { "yes".into() } else { "NO".into() },
            ]
        })
        .collect();
    render(&header, &rows, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DccReport {
    pub label: String,
    pub kind: DccKind,
    pub estimates: Vec<ParamEstimate>,
    pub scheme: Option<WeightScheme>,
    pub window: Option<usize>,
    pub span: Option<usize>,
    pub unconditional: f64,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub llh: Option<f64>,
    pub n_obs: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_mean: f64,
    pub converged: bool,
    pub degenerate: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn dcc_report(label: &str, fit: &DccFit) -> DccReport {
    let c = correlation_report(fit);
    DccReport {
        label: label.into(),
        kind: fit.kind,
        estimates: fit.estimates.clone(),
        scheme: fit.scheme,
        window: fit.window,
        span: fit.span,
        unconditional: fit.unconditional,
        aic: finite(fit.aic),
        bic: finite(fit.bic),
        llh: finite(fit.llh),
        n_obs: fit.n_obs,
        rho_min: c.min,
        rho_max: c.max,
        rho_mean: c.mean,
        converged: fit.converged,
        degenerate: fit.degenerate,
    }
}

/// a, b, ω, AIC, BIC, LLH per correlation model.
pub fn dcc_table(reports: &[DccReport]) -> String {
    let header: Vec<String> = ["Model", "a", "b", "omega", "AIC", "BIC", "LLH", "rho range"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for r in reports {
        let get = |n: &str| r.estimates.iter().find(|e| e.name == n || (n == "omega" && e.name.starts_with("omega")));
        let (a, pa) = estimate_cells(get("a"));
        let (b, pb) = estimate_cells(get("b"));
        let (w, pw) = estimate_cells(get("omega"));
        let opt = |v: Option<f64>| v.map_or("NA".into(), fmt4);
        rows.push(vec![
            r.label.clone(),
            a,
            b,
            w,
            opt(r.aic),
            opt(r.bic),
            opt(r.llh),
            format!("[{}, {}]", fmt4(r.rho_min), fmt4(r.rho_max)),
        ]);
        rows.push(vec![String::new(), pa, pb, pw, String::new(), String::new(), String::new(), String::new()]);
    }
    render(&header, &rows, 1)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Csv(e)
}

/// `date,tau,g,variance` per likelihood day.
pub fn write_components_csv<W: Write>(out: W, fit: &GarchMidasFit) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "tau", "g", "variance"]).map_err(csv_error)?;
    for ((d, t), g) in fit.dates.iter().zip(&fit.tau).zip(&fit.g) {
        w.write_record([d.to_string(), t.to_string(), g.to_string(), (t * g).to_string()])
            .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("components csv", e))?;
    Ok(())
}

/// Long format `model,date,rho,rho_bar`.
pub fn write_correlations_csv<W: Write>(out: W, fits: &[(&str, &DccFit)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "date", "rho", "rho_bar"]).map_err(csv_error)?;
    for (label, fit) in fits {
        for row in correlation_report(fit).rows {
            w.write_record([
                label.to_string(),
                row.date.to_string(),
                row.rho.to_string(),
                row.rho_bar.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| Error::io("correlations csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_decimals() {
        assert_eq!(fmt4(0.07899), "0.0790");
        assert_eq!(fmt4(-0.00001), "0.0000");
        assert_eq!(fmt4(f64::NAN), "NA");
        assert_eq!(stars(Some(0.004)), "***");
        assert_eq!(stars(Some(0.07)), "*");
        assert_eq!(stars(None), "");
    }

    #[test]
    fn constant_series_warns() {
        let mut w = Vec::new();
        let row = diagnostics_row("flat", "none", &[2.0; 50], AdfTrend::Constant, &mut w).unwrap();
        assert!(row.degenerate);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("zero variance"));
    }

    #[test]
    fn tables_align() {
        let t = render(
            &["a".into(), "bb".into()],
            &[vec!["xyz".into(), "1".into()], vec!["q".into(), "22".into()]],
            1,
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a    bb");
        assert_eq!(lines[2], "xyz   1");
        assert_eq!(lines[3], "q    22");
    }
}
