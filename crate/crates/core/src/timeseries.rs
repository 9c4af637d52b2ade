//! Dated series, transforms and the mixed-frequency panel.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Monthly,
}

/// Calendar month identity `(year, month)` as a single ordinal.
pub fn month_ordinal(date: NaiveDate) -> i64 {
    date.year() as i64 * 12 + date.month0() as i64
}

fn ordinal_to_year_month(ordinal: i64) -> (i32, u32) {
    (ordinal.div_euclid(12) as i32, ordinal.rem_euclid(12) as u32 + 1)
}

fn first_of_month(ordinal: i64) -> NaiveDate {
    let (y, m) = ordinal_to_year_month(ordinal);
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month")
}

/// Ordered `(date, value)` observations at a single frequency.
///
/// Construction validates that dates are strictly increasing, values are
/// finite and, for monthly data, that no calendar month appears twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedSeries {
    name: String,
    frequency: Frequency,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl DatedSeries {
    pub fn new(
        name: impl Into<String>,
        frequency: Frequency,
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate(w[1]));
            }
            if w[1] < w[0] {
                return Err(Error::UnorderedDates(w[1]));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(dates[i]));
        }
        if frequency == Frequency::Monthly {
            for w in dates.windows(2) {
                if month_ordinal(w[0]) == month_ordinal(w[1]) {
                    return Err(Error::MonthlyCollision {
                        year: w[1].year(),
                        month: w[1].month(),
                    });
                }
            }
        }
        Ok(Self {
            name: name.into(),
            frequency,
            dates,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }

    /// `ln(x[i+1]) - ln(x[i])`, dated at the later observation.
    pub fn log_diff(&self) -> Result<DatedSeries> {
        self.require_len(2)?;
        if let Some((d, v)) = self.iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::NonPositive { date: d, value: v });
        }
        let values = self
            .values
            .windows(2)
            .map(|w| w[1].ln() - w[0].ln())
            .collect();
        DatedSeries::new(
            self.name.clone(),
            self.frequency,
            self.dates[1..].to_vec(),
            values,
        )
    }

    /// `x[i+1] - x[i]`, dated at the later observation.
    pub fn first_diff(&self) -> Result<DatedSeries> {
        self.require_len(2)?;
        let values = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        DatedSeries::new(
            self.name.clone(),
            self.frequency,
            self.dates[1..].to_vec(),
            values,
        )
    }

    fn require_len(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            Err(Error::TooShort {
                needed,
                got: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Keep only observations whose date satisfies `keep`.
    pub fn filter_dates(&self, mut keep: impl FnMut(NaiveDate) -> bool) -> DatedSeries {
        let (dates, values) = self.iter().filter(|(d, _)| keep(*d)).unzip();
        DatedSeries {
            name: self.name.clone(),
            frequency: self.frequency,
            dates,
            values,
        }
    }
}

/// Result of reading a CSV column pair.
#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: DatedSeries,
    /// Rows skipped because the value cell was empty or not finite.
    pub dropped_rows: usize,
}

/// Read `(date_column, value_column)` from a CSV file with a header row.
pub fn load_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    value_column: &str,
    frequency: Frequency,
) -> Result<LoadedSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    load_csv_reader(file, date_column, value_column, frequency)
}

/// Same as [`load_csv`] over any reader. The series is named after the value
/// column.
pub fn load_csv_reader<R: Read>(
    reader: R,
    date_column: &str,
    value_column: &str,
    frequency: Frequency,
) -> Result<LoadedSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |col: &str| {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::MissingColumn(col.to_string()))
    };
    let date_idx = find(date_column)?;
    let value_idx = find(value_column)?;

    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let row = i + 2;
        let record = record?;
        let date_text = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| Error::Parse {
            row,
            what: "date",
            text: date_text.to_string(),
        })?;
        let value_text = record.get(value_idx).unwrap_or("");
        if value_text.is_empty() {
            dropped += 1;
            continue;
        }
        let value: f64 = value_text.parse().map_err(|_| Error::Parse {
            row,
            what: "number",
            text: value_text.to_string(),
        })?;
        if !value.is_finite() {
            dropped += 1;
            continue;
        }
        rows.push((date, value));
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    rows.sort_by_key(|(d, _)| *d);
    let (dates, values) = rows.into_iter().unzip();
    let series = DatedSeries::new(value_column, frequency, dates, values)?;
    Ok(LoadedSeries {
        series,
        dropped_rows: dropped,
    })
}

/// Restrict two series to their common dates.
pub fn intersect_calendars(a: &DatedSeries, b: &DatedSeries) -> Result<(DatedSeries, DatedSeries)> {
    if a.frequency != b.frequency {
        return Err(Error::InvalidParameter(format!(
            "cannot intersect {:?} and {:?} calendars",
            a.frequency, b.frequency
        )));
    }
    let in_b: HashSet<NaiveDate> = b.dates.iter().copied().collect();
    let common: HashSet<NaiveDate> = a.dates.iter().copied().filter(|d| in_b.contains(d)).collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok((
        a.filter_dates(|d| common.contains(&d)),
        b.filter_dates(|d| common.contains(&d)),
    ))
}

/// A low-frequency regressor attached to the daily calendar.
///
/// `values` holds one entry per covariate period, including any presample
/// periods available before the first return day. `day_period[d]` is the
/// index into `values` of the period containing panel day `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub frequency: Frequency,
    pub lags: usize,
    pub period_dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub day_period: Vec<usize>,
}

impl Covariate {
    /// Value carried by each panel day, without interpolation.
    pub fn expanded(&self) -> Vec<f64> {
        self.day_period.iter().map(|&p| self.values[p]).collect()
    }

    /// First panel day whose period has `lags` complete prior periods.
    pub fn first_complete_day(&self) -> Option<usize> {
        self.day_period.iter().position(|&p| p >= self.lags)
    }

    /// `Σ_{k=1..K} weights[k-1] · values[p - k]` for every period `p ≥ K`;
    /// `None` for periods without a full lag window.
    pub fn filtered_periods(&self, weights: &[f64]) -> Vec<Option<f64>> {
        let k_max = weights.len();
        (0..self.values.len())
            .map(|p| {
                if p < k_max {
                    None
                } else {
                    Some(
                        weights
                            .iter()
                            .enumerate()
                            .map(|(k, w)| w * self.values[p - k - 1])
                            .sum(),
                    )
                }
            })
            .collect()
    }
}

/// How a covariate enters [`build_panel`].
#[derive(Debug, Clone)]
pub struct CovariateInput {
    pub series: DatedSeries,
    pub lags: usize,
}

/// Counts of observations discarded while aligning calendars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentDrops {
    /// Return days removed because a daily covariate had no value on them.
    pub return_days: usize,
    /// Daily covariate observations inside the return span with no matching return day.
    pub covariate_days: usize,
}

/// Daily returns aligned with low-frequency covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPanel {
    pub day_dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    /// Ordinal of each day's month, starting at 0 for the first month.
    pub month_index: Vec<usize>,
    /// Number of days in each month period.
    pub period_lengths: Vec<usize>,
    pub covariates: Vec<Covariate>,
    pub drops: AlignmentDrops,
}

impl MixedPanel {
    /// Assemble a panel from already-aligned parts and check its invariants.
    pub fn from_parts(
        day_dates: Vec<NaiveDate>,
        returns: Vec<f64>,
        covariates: Vec<Covariate>,
    ) -> Result<Self> {
        if day_dates.len() != returns.len() {
            return Err(Error::LengthMismatch {
                left: day_dates.len(),
                right: returns.len(),
            });
        }
        if day_dates.is_empty() {
            return Err(Error::Empty);
        }
        let (month_index, period_lengths) = month_structure(&day_dates)?;
        for c in &covariates {
            if c.lags == 0 {
                return Err(Error::InvalidParameter(format!(
                    "covariate `{}` needs lag length K >= 1",
                    c.name
                )));
            }
            if c.day_period.len() != day_dates.len() {
                return Err(Error::LengthMismatch {
                    left: c.day_period.len(),
                    right: day_dates.len(),
                });
            }
            if c.values.len() != c.period_dates.len()
                || c.day_period.iter().any(|&p| p >= c.values.len())
            {
                return Err(Error::CovariateHistory {
                    name: c.name.clone(),
                    reason: "period indexing out of range".into(),
                });
            }
        }
        Ok(Self {
            day_dates,
            returns,
            month_index,
            period_lengths,
            covariates,
            drops: AlignmentDrops::default(),
        })
    }

    pub fn n_days(&self) -> usize {
        self.returns.len()
    }

    pub fn n_periods(&self) -> usize {
        self.period_lengths.len()
    }

    /// First day at which every covariate has a full lag window.
    pub fn first_usable_day(&self) -> Option<usize> {
        let mut first = 0usize;
        for c in &self.covariates {
            first = first.max(c.first_complete_day()?);
        }
        Some(first)
    }

    pub fn covariate(&self, name: &str) -> Option<&Covariate> {
        self.covariates.iter().find(|c| c.name == name)
    }

    /// Append the monthly realized volatility of the panel's own returns as a
    /// covariate with `lags` lags. No presample exists for it, so the first
    /// `lags` months become burn-in.
    pub fn with_realized_volatility(mut self, lags: usize) -> Result<Self> {
        if lags == 0 {
            return Err(Error::InvalidParameter("RV lag length must be >= 1".into()));
        }
        let rv = realized_volatility(&self)?;
        self.covariates.push(Covariate {
            name: "RV".into(),
            frequency: Frequency::Monthly,
            lags,
            period_dates: rv.dates().to_vec(),
            values: rv.values().to_vec(),
            day_period: self.month_index.clone(),
        });
        if self.first_usable_day().is_none() {
            return Err(Error::CovariateHistory {
                name: "RV".into(),
                reason: format!("sample has fewer than {} months", lags + 1),
            });
        }
        Ok(self)
    }
}

fn month_structure(days: &[NaiveDate]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut month_index = Vec::with_capacity(days.len());
    let mut lengths: Vec<usize> = Vec::new();
    let mut prev: Option<i64> = None;
    for w in days.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::UnorderedDates(w[1]));
        }
    }
    for &d in days {
        let m = month_ordinal(d);
        if prev != Some(m) {
            lengths.push(0);
            prev = Some(m);
        }
        *lengths.last_mut().expect("pushed") += 1;
        month_index.push(lengths.len() - 1);
    }
    Ok((month_index, lengths))
}

/// Align daily returns with daily or monthly covariates.
///
/// Monthly values are held constant over every trading day of their month.
/// Daily covariates restrict the calendar to days present in both series.
/// Up to `K` covariate periods before the first return day are kept as lag
/// history; days without a full lag window form the likelihood burn-in.
pub fn build_panel(returns: &DatedSeries, covariates: &[CovariateInput]) -> Result<MixedPanel> {
    if returns.frequency() != Frequency::Daily {
        return Err(Error::InvalidParameter("returns must be daily".into()));
    }
    if returns.is_empty() {
        return Err(Error::Empty);
    }

    let mut drops = AlignmentDrops::default();
    let mut keep: Vec<bool> = vec![true; returns.len()];
    for cov in covariates.iter().filter(|c| c.series.frequency() == Frequency::Daily) {
        let cov_days: HashSet<NaiveDate> = cov.series.dates().iter().copied().collect();
        for (k, d) in keep.iter_mut().zip(returns.dates()) {
            if *k && !cov_days.contains(d) {
                *k = false;
                drops.return_days += 1;
            }
        }
    }
    let day_dates: Vec<NaiveDate> = returns
        .dates()
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(d, _)| *d)
        .collect();
    if day_dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let values: Vec<f64> = returns
        .values()
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(v, _)| *v)
        .collect();
    let first = day_dates[0];
    let last = *day_dates.last().expect("non-empty");

    let mut built = Vec::with_capacity(covariates.len());
    for cov in covariates {
        if cov.lags == 0 {
            return Err(Error::InvalidParameter(format!(
                "covariate `{}` needs lag length K >= 1",
                cov.series.name()
            )));
        }
        let c = match cov.series.frequency() {
            Frequency::Monthly => expand_monthly(&cov.series, cov.lags, &day_dates)?,
            Frequency::Daily => {
                let day_set: HashSet<NaiveDate> = day_dates.iter().copied().collect();
                drops.covariate_days += cov
                    .series
                    .dates()
                    .iter()
                    .filter(|d| **d >= first && **d <= last && !day_set.contains(d))
                    .count();
                align_daily(&cov.series, cov.lags, &day_dates)?
            }
        };
        built.push(c);
    }

    let mut panel = MixedPanel::from_parts(day_dates, values, built)?;
    panel.drops = drops;
    if panel.first_usable_day().is_none() {
        let name = panel
            .covariates
            .iter()
            .find(|c| c.first_complete_day().is_none())
            .map(|c| c.name.clone())
            .unwrap_or_default();
        return Err(Error::CovariateHistory {
            name,
            reason: "lag window never fills within the sample".into(),
        });
    }
    Ok(panel)
}

fn expand_monthly(series: &DatedSeries, lags: usize, days: &[NaiveDate]) -> Result<Covariate> {
    let by_month: BTreeMap<i64, f64> = series
        .iter()
        .map(|(d, v)| (month_ordinal(d), v))
        .collect();
    let first_month = month_ordinal(days[0]);
    let last_month = month_ordinal(*days.last().expect("non-empty"));

    let mut start = first_month;
    while start > first_month - lags as i64 && by_month.contains_key(&(start - 1)) {
        start -= 1;
    }
    let mut period_dates = Vec::new();
    let mut values = Vec::new();
    for m in start..=last_month {
        match by_month.get(&m) {
            Some(v) => {
                period_dates.push(first_of_month(m));
                values.push(*v);
            }
            None => {
                let (year, month) = ordinal_to_year_month(m);
                return Err(Error::MissingPeriod {
                    name: series.name().to_string(),
                    year,
                    month,
                });
            }
        }
    }
    let day_period = days
        .iter()
        .map(|d| (month_ordinal(*d) - start) as usize)
        .collect();
    Ok(Covariate {
        name: series.name().to_string(),
        frequency: Frequency::Monthly,
        lags,
        period_dates,
        values,
        day_period,
    })
}

fn align_daily(series: &DatedSeries, lags: usize, days: &[NaiveDate]) -> Result<Covariate> {
    let first = days[0];
    let presample_start = series.dates().partition_point(|d| *d < first);
    let take = presample_start.min(lags);
    let mut period_dates: Vec<NaiveDate> =
        series.dates()[presample_start - take..presample_start].to_vec();
    let mut values: Vec<f64> = series.values()[presample_start - take..presample_start].to_vec();
    let lookup: BTreeMap<NaiveDate, f64> = series.iter().collect();
    let mut day_period = Vec::with_capacity(days.len());
    for d in days {
        let v = lookup.get(d).ok_or_else(|| Error::MissingDay {
            name: series.name().to_string(),
            date: *d,
        })?;
        day_period.push(values.len());
        period_dates.push(*d);
        values.push(*v);
    }
    Ok(Covariate {
        name: series.name().to_string(),
        frequency: Frequency::Daily,
        lags,
        period_dates,
        values,
        day_period,
    })
}

/// Monthly realized volatility `RV_t = Σ_i r²_{i,t}`, dated at the first of
/// each month.
pub fn realized_volatility(panel: &MixedPanel) -> Result<DatedSeries> {
    if panel.n_days() == 0 {
        return Err(Error::Empty);
    }
    let mut rv = vec![0.0; panel.n_periods()];
    for (r, &t) in panel.returns.iter().zip(&panel.month_index) {
        rv[t] += r * r;
    }
    let mut dates = Vec::with_capacity(rv.len());
    let mut seen = usize::MAX;
    for (d, &t) in panel.day_dates.iter().zip(&panel.month_index) {
        if t != seen {
            dates.push(first_of_month(month_ordinal(*d)));
            seen = t;
        }
    }
    DatedSeries::new("RV", Frequency::Monthly, dates, rv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn daily(values: &[f64], start: &str) -> DatedSeries {
        let s = date(start);
        let dates = (0..values.len())
            .map(|i| s + chrono::Duration::days(i as i64))
            .collect();
        DatedSeries::new("x", Frequency::Daily, dates, values.to_vec()).unwrap()
    }

    fn business_days(year: i32, month: u32, n: usize) -> Vec<NaiveDate> {
        (1..=n as u32)
            .map(|d| NaiveDate::from_ymd_opt(year, month, d).unwrap())
            .collect()
    }

    #[test]
    fn csv_minimal() {
        let text = "date,close\n2002-09-03,0.7\n2002-09-04,0.71\n";
        let loaded = load_csv_reader(text.as_bytes(), "date", "close", Frequency::Daily).unwrap();
        assert_eq!(loaded.series.len(), 2);
        assert_eq!(loaded.dropped_rows, 0);
        assert_eq!(loaded.series.values(), &[0.7, 0.71]);
    }

    #[test]
    fn csv_drops_empty_and_sorts() {
        let text = "date,close,extra\n2002-09-05,3,a\n2002-09-03,1,b\n2002-09-04,,c\n";
        let loaded = load_csv_reader(text.as_bytes(), "date", "close", Frequency::Daily).unwrap();
        assert_eq!(loaded.dropped_rows, 1);
        assert_eq!(loaded.series.values(), &[1.0, 3.0]);
    }

    #[test]
    fn csv_duplicate_date_is_named() {
        let text = "date,close\n2002-09-03,1\n2002-09-03,2\n";
        let err = load_csv_reader(text.as_bytes(), "date", "close", Frequency::Daily).unwrap_err();
        assert!(err.to_string().contains("2002-09-03"), "{err}");
    }

    #[test]
    fn csv_reports_row_number() {
        let text = "date,close\n2002-09-03,1\n2002-09-04,abc\n";
        match load_csv_reader(text.as_bytes(), "date", "close", Frequency::Daily) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "date,close\n03/09/2002,1\n";
        assert!(matches!(
            load_csv_reader(text.as_bytes(), "date", "close", Frequency::Daily),
            Err(Error::Parse { row: 2, what: "date", .. })
        ));
    }

    #[test]
    fn csv_empty_is_error() {
        let text = "date,close\n2002-09-03,\n";
        assert!(matches!(
            load_csv_reader(text.as_bytes(), "date", "close", Frequency::Daily),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn log_diff_exact() {
        let e = std::f64::consts::E;
        let s = daily(&[1.0, e, e * e], "2020-01-01");
        let d = s.log_diff().unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.values()[0] - 1.0).abs() < 1e-15);
        assert!((d.values()[1] - 1.0).abs() < 1e-15);
        assert_eq!(d.dates()[0], date("2020-01-02"));
        let c = daily(&[5.0, 5.0, 5.0], "2020-01-01").log_diff().unwrap();
        assert_eq!(c.values(), &[0.0, 0.0]);
    }

    #[test]
    fn log_diff_rejects_non_positive() {
        let s = daily(&[1.0, 0.0, 2.0], "2020-01-01");
        match s.log_diff() {
            Err(Error::NonPositive { date: d, .. }) => assert_eq!(d, date("2020-01-02")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_diff_basic() {
        let s = daily(&[1.0, 2.0, 4.0], "2020-01-01");
        assert_eq!(s.first_diff().unwrap().values(), &[1.0, 2.0]);
        assert!(daily(&[1.0], "2020-01-01").first_diff().is_err());
    }

    #[test]
    fn intersect_removes_extra_holiday() {
        let a = daily(&[1.0, 2.0, 3.0, 4.0], "2020-01-01");
        let b = a.filter_dates(|d| d != date("2020-01-03"));
        let (a2, b2) = intersect_calendars(&a, &b).unwrap();
        assert_eq!(a2.dates(), b2.dates());
        assert_eq!(a2.values(), &[1.0, 2.0, 4.0]);
        let (a3, b3) = intersect_calendars(&a, &a).unwrap();
        assert_eq!(a3, a);
        assert_eq!(b3, a);
        let c = daily(&[1.0], "2021-01-01");
        assert!(matches!(intersect_calendars(&a, &c), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn panel_expands_monthly_covariate() {
        let mut days = business_days(2020, 2, 20);
        days.extend(business_days(2020, 3, 20));
        let returns =
            DatedSeries::new("r", Frequency::Daily, days.clone(), vec![0.01; 40]).unwrap();
        let cov = DatedSeries::new(
            "ppi",
            Frequency::Monthly,
            vec![date("2020-01-01"), date("2020-02-01"), date("2020-03-01")],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let panel = build_panel(
            &returns,
            &[CovariateInput {
                series: cov,
                lags: 1,
            }],
        )
        .unwrap();
        assert_eq!(panel.period_lengths, vec![20, 20]);
        let c = &panel.covariates[0];
        let expanded = c.expanded();
        assert!(expanded[..20].iter().all(|v| *v == 2.0));
        assert!(expanded[20..].iter().all(|v| *v == 3.0));
        // January kept as lag history, so no burn-in
        assert_eq!(panel.first_usable_day(), Some(0));
    }

    #[test]
    fn panel_missing_month_is_named() {
        let mut days = business_days(2020, 1, 5);
        days.extend(business_days(2020, 2, 5));
        days.extend(business_days(2020, 3, 5));
        let returns = DatedSeries::new("r", Frequency::Daily, days, vec![0.0; 15]).unwrap();
        let cov = DatedSeries::new(
            "ip",
            Frequency::Monthly,
            vec![date("2020-01-15"), date("2020-03-15")],
            vec![1.0, 3.0],
        )
        .unwrap();
        let err = build_panel(&returns, &[CovariateInput { series: cov, lags: 1 }]).unwrap_err();
        assert!(err.to_string().contains("2020-02"), "{err}");
    }

    #[test]
    fn panel_daily_covariate_drops_unmatched_days() {
        let r = daily(&[0.1, 0.2, 0.3, 0.4, 0.5], "2020-01-01");
        let cov = daily(&[9.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], "2019-12-31")
            .filter_dates(|d| d != date("2020-01-03"))
            .with_name("ir");
        let panel = build_panel(&r, &[CovariateInput { series: cov, lags: 2 }]).unwrap();
        assert_eq!(panel.n_days(), 4);
        assert_eq!(panel.drops.return_days, 1);
        let c = &panel.covariates[0];
        // one presample observation (2019-12-31) exists
        assert_eq!(c.values[0], 9.0);
        assert_eq!(c.first_complete_day(), Some(1));
        assert_eq!(c.expanded(), vec![1.0, 2.0, 4.0, 5.0]);
    }

    #[test]
    fn realized_volatility_hand_sum() {
        let days = vec![date("2020-01-02"), date("2020-01-03"), date("2020-02-03")];
        let panel = MixedPanel::from_parts(days, vec![0.1, -0.1, 0.0], vec![]).unwrap();
        let rv = realized_volatility(&panel).unwrap();
        assert!((rv.values()[0] - 0.02).abs() < 1e-15);
        assert_eq!(rv.values()[1], 0.0);
        assert_eq!(rv.frequency(), Frequency::Monthly);
    }

    #[test]
    fn filtered_periods_hand_computation() {
        let c = Covariate {
            name: "x".into(),
            frequency: Frequency::Monthly,
            lags: 2,
            period_dates: vec![date("2020-01-01"), date("2020-02-01"), date("2020-03-01")],
            values: vec![1.0, 2.0, 3.0],
            day_period: vec![0, 1, 2],
        };
        let f = c.filtered_periods(&[0.6, 0.4]);
        assert_eq!(f[0], None);
        assert_eq!(f[1], None);
        assert!((f[2].unwrap() - 1.6).abs() < 1e-15);
    }
}
