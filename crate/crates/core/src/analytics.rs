//! Employment-weighted aggregation over the panel, anchored quantiles,
//! within/between decomposition of the aggregate AFI change and demographic
//! breakdowns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{DescriptorCatalog, Education, EmploymentPanel, PanelCell, Sex};
use crate::econ::DataTable;
use crate::index::AfiTable;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("filter value `{value}` for {dimension} does not occur in the panel")]
    UnknownCategory {
        dimension: &'static str,
        value: String,
    },
    #[error("no employment under the filter")]
    ZeroEmployment,
    #[error("occupation `{0}` has employment but no value")]
    MissingValue(String),
    #[error("need at least {k} values for {k} quantiles, got {n}")]
    TooFewValues { n: usize, k: usize },
    #[error("number of quantiles must be at least 2, got {0}")]
    BadQuantileCount(usize),
    #[error("tied values give a repeated cut point at quantile {0}")]
    TiedCutPoints(usize),
    #[error("no occupation has a value and employment in both years")]
    EmptyCommonSet,
    #[error("histogram needs at least one bin and lo < hi")]
    BadHistogram,
}

pub type Result<T, E = AnalyticsError> = std::result::Result<T, E>;

/// Restricts panel cells. `None` leaves a dimension unconstrained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupFilter {
    pub year: Option<i32>,
    pub age_bands: Option<BTreeSet<String>>,
    pub sex: Option<Sex>,
    pub education: Option<Education>,
    pub industries: Option<BTreeSet<String>>,
}

impl GroupFilter {
    pub fn year(year: i32) -> Self {
        Self {
            year: Some(year),
            ..Self::default()
        }
    }

    /// Checks every constrained value against the panel's categories.
    pub fn validate(&self, panel: &EmploymentPanel) -> Result<()> {
        if let Some(y) = self.year {
            if !panel.years().contains(&y) {
                return Err(AnalyticsError::UnknownCategory {
                    dimension: "year",
                    value: y.to_string(),
                });
            }
        }
        let check = |dimension, wanted: &Option<BTreeSet<String>>, have: BTreeSet<&str>| {
            for v in wanted.iter().flatten() {
                if !have.contains(v.as_str()) {
                    return Err(AnalyticsError::UnknownCategory {
                        dimension,
                        value: v.clone(),
                    });
                }
            }
            Ok(())
        };
        check("age band", &self.age_bands, panel.age_bands())?;
        check("industry", &self.industries, panel.industries())?;
        if let Some(s) = self.sex {
            if !panel.cells().iter().any(|c| c.sex == s) {
                return Err(AnalyticsError::UnknownCategory {
                    dimension: "sex",
                    value: s.to_string(),
                });
            }
        }
        if let Some(e) = self.education {
            if !panel.cells().iter().any(|c| c.education == e) {
                return Err(AnalyticsError::UnknownCategory {
                    dimension: "education",
                    value: e.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn matches(&self, c: &PanelCell) -> bool {
        self.year.is_none_or(|y| c.year == y)
            && self.sex.is_none_or(|s| c.sex == s)
            && self.education.is_none_or(|e| c.education == e)
            && self
                .age_bands
                .as_ref()
                .is_none_or(|b| b.contains(&c.age_band))
            && self
                .industries
                .as_ref()
                .is_none_or(|b| b.contains(&c.industry))
    }
}

/// Employment per occupation over the cells matching `filter`. Occupations
/// whose matching cells all have zero count are omitted.
pub fn employment_by_occupation(
    panel: &EmploymentPanel,
    filter: &GroupFilter,
) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for c in panel
        .cells()
        .iter()
        .filter(|c| filter.matches(c) && c.count > 0.0)
    {
        *out.entry(c.occupation.clone()).or_default() += c.count;
    }
    out
}

fn weighted_mean_of(
    values: &BTreeMap<String, f64>,
    employment: &BTreeMap<String, f64>,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (occ, &e) in employment {
        let v = values
            .get(occ)
            .ok_or_else(|| AnalyticsError::MissingValue(occ.clone()))?;
        num += v * e;
        den += e;
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(AnalyticsError::ZeroEmployment)
    }
}

/// Employment-weighted mean of per-occupation values over the filtered cells.
pub fn weighted_mean(
    values: &BTreeMap<String, f64>,
    panel: &EmploymentPanel,
    filter: &GroupFilter,
) -> Result<f64> {
    filter.validate(panel)?;
    weighted_mean_of(values, &employment_by_occupation(panel, filter))
}

/// Quantile cut points computed from one year's AFI over occupations
/// (unweighted) and applied to any year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileScheme {
    pub anchor_year: i32,
    pub k: usize,
    /// `k - 1` strictly ascending cut points.
    pub cuts: Vec<f64>,
    /// Always `"linear"`: interpolation between order statistics at `(n - 1) p`.
    pub definition: String,
}

/// Linear-interpolation quantile of sorted data at probability `p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn make_quantiles(afi: &AfiTable, k: usize) -> Result<QuantileScheme> {
    if k < 2 {
        return Err(AnalyticsError::BadQuantileCount(k));
    }
    let n = afi.len();
    if n < k {
        return Err(AnalyticsError::TooFewValues { n, k });
    }
    let mut sorted: Vec<f64> = afi.values().values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..k)
        .map(|j| quantile_sorted(&sorted, j as f64 / k as f64))
        .collect();
    for (j, w) in cuts.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(AnalyticsError::TiedCutPoints(j + 2));
        }
    }
    Ok(QuantileScheme {
        anchor_year: afi.year,
        k,
        cuts,
        definition: "linear".into(),
    })
}

impl QuantileScheme {
    /// Bucket in `1..=k`; a value on a cut point belongs to the upper bucket.
    pub fn assign(&self, value: f64) -> usize {
        1 + self.cuts.partition_point(|&c| c <= value)
    }

    /// Bucket of every occupation in `afi`.
    pub fn assign_all(&self, afi: &AfiTable) -> BTreeMap<String, usize> {
        afi.values()
            .iter()
            .map(|(id, &v)| (id.clone(), self.assign(v)))
            .collect()
    }
}

/// Reference weighting of the two-fold decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OaxacaVariant {
    /// Average shares and values of both years; no interaction term.
    #[default]
    Midpoint,
    /// Base-year shares and values, with an explicit interaction term.
    Initial,
    /// Final-year shares and values, with an explicit interaction term.
    Final,
}

impl fmt::Display for OaxacaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Midpoint => "midpoint",
            Self::Initial => "initial",
            Self::Final => "final",
        })
    }
}

impl FromStr for OaxacaVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "initial" => Ok(Self::Initial),
            "final" => Ok(Self::Final),
            other => Err(format!(
                "unknown decomposition variant `{other}` (midpoint|initial|final)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedOccupation {
    pub occupation_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub variant: OaxacaVariant,
    pub t0: i32,
    pub t1: i32,
    /// Employment-weighted mean AFI over the common set in each year.
    pub mean_t0: f64,
    pub mean_t1: f64,
    pub total: f64,
    pub within: f64,
    pub between: f64,
    /// Zero for the midpoint variant.
    pub interaction: f64,
    /// `total / mean_t0`.
    pub relative_change: f64,
    pub common: Vec<String>,
    pub excluded: Vec<ExcludedOccupation>,
}

impl Decomposition {
    pub fn within_share(&self) -> f64 {
        self.within / self.total
    }
}

/// Splits the change in employment-weighted mean AFI between `t0` and `t1`
/// into changes within occupations and shifts in employment shares. Only
/// occupations scored and employed in both years enter; the others are listed
/// in `excluded`.
pub fn oaxaca_decompose(
    afi_t0: &AfiTable,
    afi_t1: &AfiTable,
    panel: &EmploymentPanel,
    t0: i32,
    t1: i32,
    variant: OaxacaVariant,
) -> Result<Decomposition> {
    let e0 = employment_by_occupation(panel, &GroupFilter::year(t0));
    let e1 = employment_by_occupation(panel, &GroupFilter::year(t1));
    let universe: BTreeSet<&String> = afi_t0
        .values()
        .keys()
        .chain(afi_t1.values().keys())
        .chain(e0.keys())
        .chain(e1.keys())
        .collect();
    let mut common = Vec::new();
    let mut excluded = Vec::new();
    for id in universe {
        let mut missing = Vec::new();
        if afi_t0.get(id).is_none() {
            missing.push(format!("no AFI in {t0}"));
        }
        if afi_t1.get(id).is_none() {
            missing.push(format!("no AFI in {t1}"));
        }
        if !e0.contains_key(id) {
            missing.push(format!("no employment in {t0}"));
        }
        if !e1.contains_key(id) {
            missing.push(format!("no employment in {t1}"));
        }
        if missing.is_empty() {
            common.push(id.clone());
        } else {
            excluded.push(ExcludedOccupation {
                occupation_id: id.clone(),
                reason: missing.join("; "),
            });
        }
    }
    if common.is_empty() {
        return Err(AnalyticsError::EmptyCommonSet);
    }
    let tot0: f64 = common.iter().map(|id| e0[id]).sum();
    let tot1: f64 = common.iter().map(|id| e1[id]).sum();
    let (mut mean0, mut mean1) = (0.0, 0.0);
    let (mut within, mut between, mut interaction) = (0.0, 0.0, 0.0);
    for id in &common {
        let (s0, s1) = (e0[id] / tot0, e1[id] / tot1);
        let (a0, a1) = (afi_t0.get(id).unwrap(), afi_t1.get(id).unwrap());
        let (ds, da) = (s1 - s0, a1 - a0);
        mean0 += s0 * a0;
        mean1 += s1 * a1;
        match variant {
            OaxacaVariant::Midpoint => {
                within += 0.5 * (s0 + s1) * da;
                between += 0.5 * (a0 + a1) * ds;
            }
            OaxacaVariant::Initial => {
                within += s0 * da;
                between += a0 * ds;
                interaction += ds * da;
            }
            OaxacaVariant::Final => {
                within += s1 * da;
                between += a1 * ds;
                interaction -= ds * da;
            }
        }
    }
    let total = mean1 - mean0;
    Ok(Decomposition {
        variant,
        t0,
        t1,
        mean_t0: mean0,
        mean_t1: mean1,
        total,
        within,
        between,
        interaction,
        relative_change: total / mean0,
        common,
        excluded,
    })
}

/// Panel dimension used to form demographic groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Education,
    Sex,
    Age,
    Industry,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Self::Education => "education",
            Self::Sex => "sex",
            Self::Age => "age",
            Self::Industry => "industry",
        }
    }
}

impl FromStr for Dimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "education" => Ok(Self::Education),
            "sex" => Ok(Self::Sex),
            "age" => Ok(Self::Age),
            "industry" => Ok(Self::Industry),
            other => Err(format!("unknown dimension `{other}`")),
        }
    }
}

/// Label used for a dimension that is summed over.
pub const TOTAL_LABEL: &str = "total";

/// How panel cells are grouped for the demographic tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupingSpec {
    pub dimensions: Vec<Dimension>,
    /// Relabels age bands, e.g. `50-64` and `65-74` to `50-74`. Unmapped bands
    /// keep their label.
    #[serde(default)]
    pub age_map: BTreeMap<String, String>,
    /// Also emit groups where some dimensions are replaced by `total`.
    #[serde(default)]
    pub include_totals: bool,
}

impl GroupingSpec {
    pub fn age_label<'a>(&'a self, band: &'a str) -> &'a str {
        self.age_map.get(band).map_or(band, String::as_str)
    }

    fn label(&self, d: Dimension, c: &PanelCell) -> String {
        match d {
            Dimension::Education => c.education.to_string(),
            Dimension::Sex => c.sex.to_string(),
            Dimension::Age => self.age_label(&c.age_band).to_string(),
            Dimension::Industry => c.industry.clone(),
        }
    }

    fn levels(&self, panel: &EmploymentPanel) -> Vec<Vec<String>> {
        self.dimensions
            .iter()
            .map(|&d| {
                let set: BTreeSet<String> =
                    panel.cells().iter().map(|c| self.label(d, c)).collect();
                let mut v: Vec<String> = set.into_iter().collect();
                if self.include_totals {
                    v.insert(0, TOTAL_LABEL.to_string());
                }
                v
            })
            .collect()
    }

    fn cell_matches(&self, group: &[String], c: &PanelCell) -> bool {
        self.dimensions
            .iter()
            .zip(group)
            .all(|(&d, g)| g == TOTAL_LABEL || self.label(d, c) == *g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemographicRow {
    /// One label per grouping dimension.
    pub group: Vec<String>,
    pub year: i32,
    pub employment: f64,
    /// Group employment over all employment in the year.
    pub employment_share: f64,
    /// `None` for empty groups.
    pub weighted_afi: Option<f64>,
    /// Share of the group's employment in the top bucket of the scheme.
    pub top_share: Option<f64>,
    pub empty: bool,
}

/// One row per group and year, groups in lexicographic order of their labels
/// (with `total` first when totals are requested).
pub fn demographic_table(
    afi: &BTreeMap<i32, AfiTable>,
    panel: &EmploymentPanel,
    spec: &GroupingSpec,
    scheme: Option<&QuantileScheme>,
) -> Result<Vec<DemographicRow>> {
    let levels = spec.levels(panel);
    let mut groups: Vec<Vec<String>> = vec![Vec::new()];
    for lv in &levels {
        groups = groups
            .into_iter()
            .flat_map(|g| {
                lv.iter().map(move |l| {
                    let mut g = g.clone();
                    g.push(l.clone());
                    g
                })
            })
            .collect();
    }
    let mut rows = Vec::new();
    for (&year, table) in afi {
        let year_total = panel.total(year);
        let buckets = scheme.map(|s| s.assign_all(table));
        for g in &groups {
            let (mut emp, mut num, mut top) = (0.0, 0.0, 0.0);
            for c in panel
                .cells()
                .iter()
                .filter(|c| c.year == year && c.count > 0.0)
            {
                if !spec.cell_matches(g, c) {
                    continue;
                }
                let a = table
                    .get(&c.occupation)
                    .ok_or_else(|| AnalyticsError::MissingValue(c.occupation.clone()))?;
                emp += c.count;
                num += a * c.count;
                if let (Some(b), Some(s)) = (&buckets, scheme) {
                    if b[&c.occupation] == s.k {
                        top += c.count;
                    }
                }
            }
            let empty = emp <= 0.0;
            rows.push(DemographicRow {
                group: g.clone(),
                year,
                employment: emp,
                employment_share: if year_total > 0.0 {
                    emp / year_total
                } else {
                    0.0
                },
                weighted_afi: (!empty).then(|| num / emp),
                top_share: scheme.filter(|_| !empty).map(|_| top / emp),
                empty,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemographicChange {
    pub group: Vec<String>,
    pub t0: i32,
    pub t1: i32,
    pub employment_t0: f64,
    pub employment_t1: f64,
    pub employment_change: f64,
    /// Percentage change in employment; `None` when the group was empty in `t0`.
    pub employment_pct_change: Option<f64>,
    /// Change in employment share, in percentage points.
    pub share_change_pp: f64,
    pub afi_change: Option<f64>,
    pub top_share_t0: Option<f64>,
    pub top_share_t1: Option<f64>,
}

/// Pairs the `t0` and `t1` rows of a demographic table.
pub fn demographic_changes(rows: &[DemographicRow], t0: i32, t1: i32) -> Vec<DemographicChange> {
    let at = |year| -> BTreeMap<&Vec<String>, &DemographicRow> {
        rows.iter()
            .filter(|r| r.year == year)
            .map(|r| (&r.group, r))
            .collect()
    };
    let (r0, r1) = (at(t0), at(t1));
    r0.iter()
        .filter_map(|(g, a)| r1.get(g).map(|b| (g, a, b)))
        .map(|(g, a, b)| DemographicChange {
            group: (*g).clone(),
            t0,
            t1,
            employment_t0: a.employment,
            employment_t1: b.employment,
            employment_change: b.employment - a.employment,
            employment_pct_change: (a.employment > 0.0)
                .then(|| 100.0 * (b.employment / a.employment - 1.0)),
            share_change_pp: 100.0 * (b.employment_share - a.employment_share),
            afi_change: a.weighted_afi.zip(b.weighted_afi).map(|(x, y)| y - x),
            top_share_t0: a.top_share,
            top_share_t1: b.top_share,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketShare {
    pub bucket: usize,
    pub year: i32,
    pub n_occupations: usize,
    pub employment: f64,
    pub employment_share: f64,
    /// Employment-weighted mean AFI of the bucket; `None` when it has no employment.
    pub mean_afi: Option<f64>,
}

/// Employment by bucket of `scheme` for the year of `afi`. Occupations without
/// employment count towards `n_occupations` only.
pub fn bucket_shares(
    afi: &AfiTable,
    panel: &EmploymentPanel,
    scheme: &QuantileScheme,
) -> Vec<BucketShare> {
    let emp = employment_by_occupation(panel, &GroupFilter::year(afi.year));
    let mut n = vec![0usize; scheme.k];
    let mut e = vec![0.0; scheme.k];
    let mut num = vec![0.0; scheme.k];
    for (id, &a) in afi.values() {
        let b = scheme.assign(a) - 1;
        n[b] += 1;
        let w = emp.get(id).copied().unwrap_or(0.0);
        e[b] += w;
        num[b] += w * a;
    }
    let total: f64 = e.iter().sum();
    (0..scheme.k)
        .map(|b| BucketShare {
            bucket: b + 1,
            year: afi.year,
            n_occupations: n[b],
            employment: e[b],
            employment_share: if total > 0.0 { e[b] / total } else { 0.0 },
            mean_afi: (e[b] > 0.0).then(|| num[b] / e[b]),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketChange {
    pub bucket: usize,
    pub employment_pct_change: Option<f64>,
    pub share_change_pp: f64,
    pub afi_change: Option<f64>,
}

pub fn bucket_changes(b0: &[BucketShare], b1: &[BucketShare]) -> Vec<BucketChange> {
    b0.iter()
        .zip(b1)
        .map(|(a, b)| BucketChange {
            bucket: a.bucket,
            employment_pct_change: (a.employment > 0.0)
                .then(|| 100.0 * (b.employment / a.employment - 1.0)),
            share_change_pp: 100.0 * (b.employment_share - a.employment_share),
            afi_change: a.mean_afi.zip(b.mean_afi).map(|(x, y)| y - x),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub descriptor_id: String,
    /// Employment-weighted mean weight per group, in group order.
    pub means: Vec<Option<f64>>,
}

impl ProfileRow {
    /// Last group minus first group.
    pub fn spread(&self) -> Option<f64> {
        match (self.means.first()?, self.means.last()?) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        }
    }
}

/// Employment-weighted mean of each descriptor weight under each weighting.
/// Occupations employed but missing from the catalog are an error.
fn profile(
    catalog: &DescriptorCatalog,
    weightings: &[BTreeMap<String, f64>],
) -> Result<Vec<ProfileRow>> {
    let mut rows: Vec<ProfileRow> = catalog
        .descriptors()
        .iter()
        .map(|d| ProfileRow {
            descriptor_id: d.clone(),
            means: Vec::with_capacity(weightings.len()),
        })
        .collect();
    for emp in weightings {
        let total: f64 = emp.values().sum();
        let mut acc = vec![0.0; catalog.n_descriptors()];
        for (occ, &e) in emp {
            let i = catalog
                .occupation_index(occ)
                .ok_or_else(|| AnalyticsError::MissingValue(occ.clone()))?;
            for (a, w) in acc.iter_mut().zip(catalog.row(i)) {
                *a += e * w;
            }
        }
        for (row, a) in rows.iter_mut().zip(acc) {
            row.means.push((total > 0.0).then(|| a / total));
        }
    }
    Ok(rows)
}

/// Descriptor means by AFI bucket, weighted by employment in the year of `afi`.
pub fn quantile_profile(
    catalog: &DescriptorCatalog,
    afi: &AfiTable,
    panel: &EmploymentPanel,
    scheme: &QuantileScheme,
) -> Result<Vec<ProfileRow>> {
    let emp = employment_by_occupation(panel, &GroupFilter::year(afi.year));
    let mut by_bucket = vec![BTreeMap::new(); scheme.k];
    for (occ, e) in emp {
        let a = afi
            .get(&occ)
            .ok_or_else(|| AnalyticsError::MissingValue(occ.clone()))?;
        by_bucket[scheme.assign(a) - 1].insert(occ, e);
    }
    profile(catalog, &by_bucket)
}

/// Descriptor means for each filter, e.g. one filter per age group.
pub fn group_profile(
    catalog: &DescriptorCatalog,
    panel: &EmploymentPanel,
    filters: &[GroupFilter],
) -> Result<Vec<ProfileRow>> {
    let mut weightings = Vec::with_capacity(filters.len());
    for f in filters {
        f.validate(panel)?;
        weightings.push(employment_by_occupation(panel, f));
    }
    profile(catalog, &weightings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Count over `n * width`, so the bins integrate to 1.
    pub density: f64,
}

/// Equal-width bins on `[lo, hi]`; the last bin is closed. Values outside the
/// range are ignored.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 || !(lo < hi) {
        return Err(AnalyticsError::BadHistogram);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n: usize = counts.iter().sum();
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            lo: lo + b as f64 * width,
            hi: if b + 1 == bins {
                hi
            } else {
                lo + (b + 1) as f64 * width
            },
            count,
            density: if n > 0 {
                count as f64 / (n as f64 * width)
            } else {
                0.0
            },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndustryMean {
    pub industry: String,
    pub employment: f64,
    pub mean_afi: f64,
}

/// Employment-weighted mean AFI per industry in the year of `afi`, plus the
/// all-industry mean.
pub fn industry_means(afi: &AfiTable, panel: &EmploymentPanel) -> Result<(Vec<IndustryMean>, f64)> {
    let mut out = Vec::new();
    for ind in panel.industries() {
        let f = GroupFilter {
            industries: Some([ind.to_string()].into()),
            ..GroupFilter::year(afi.year)
        };
        let emp = employment_by_occupation(panel, &f);
        if emp.is_empty() {
            continue;
        }
        out.push(IndustryMean {
            industry: ind.to_string(),
            employment: emp.values().sum(),
            mean_afi: weighted_mean_of(afi.values(), &emp)?,
        });
    }
    let overall = weighted_mean_of(
        afi.values(),
        &employment_by_occupation(panel, &GroupFilter::year(afi.year)),
    )?;
    Ok((out, overall))
}

/// Parses `a-b` into the half-open year interval `[a, b + 1)`.
fn band_bounds(band: &str) -> Option<(f64, f64)> {
    let (a, b) = band.split_once('-')?;
    let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (b >= a).then_some((a, b + 1.0))
}

/// Median of grouped ages, interpolating linearly inside the median band.
/// `None` when a band label is not of the form `a-b` or there is no employment.
pub fn grouped_median_age(by_band: &BTreeMap<String, f64>) -> Option<f64> {
    let mut bands = Vec::with_capacity(by_band.len());
    for (b, &e) in by_band {
        let (lo, hi) = band_bounds(b)?;
        bands.push((lo, hi, e));
    }
    bands.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = bands.iter().map(|b| b.2).sum();
    if total <= 0.0 {
        return None;
    }
    let half = total / 2.0;
    let mut below = 0.0;
    for &(lo, hi, e) in &bands {
        if e > 0.0 && below + e >= half {
            return Some(lo + (half - below) / e * (hi - lo));
        }
        below += e;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketCharacteristics {
    pub bucket: usize,
    pub year: i32,
    pub employment: f64,
    /// Employment-weighted mean over cells that report a wage.
    pub mean_wage: Option<f64>,
    pub graduate_share: Option<f64>,
    pub median_age: Option<f64>,
}

/// Wage, graduate share and median age of the workforce in each bucket.
pub fn bucket_characteristics(
    afi: &AfiTable,
    panel: &EmploymentPanel,
    scheme: &QuantileScheme,
) -> Vec<BucketCharacteristics> {
    let k = scheme.k;
    let mut emp = vec![0.0; k];
    let mut grad = vec![0.0; k];
    let mut wage_num = vec![0.0; k];
    let mut wage_den = vec![0.0; k];
    let mut ages: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); k];
    for c in panel
        .cells()
        .iter()
        .filter(|c| c.year == afi.year && c.count > 0.0)
    {
        let Some(a) = afi.get(&c.occupation) else {
            continue;
        };
        let b = scheme.assign(a) - 1;
        emp[b] += c.count;
        if c.education == Education::College {
            grad[b] += c.count;
        }
        if let Some(w) = c.wage {
            wage_num[b] += w * c.count;
            wage_den[b] += c.count;
        }
        *ages[b].entry(c.age_band.clone()).or_default() += c.count;
    }
    (0..k)
        .map(|b| BucketCharacteristics {
            bucket: b + 1,
            year: afi.year,
            employment: emp[b],
            mean_wage: (wage_den[b] > 0.0).then(|| wage_num[b] / wage_den[b]),
            graduate_share: (emp[b] > 0.0).then(|| grad[b] / emp[b]),
            median_age: grouped_median_age(&ages[b]),
        })
        .collect()
}

/// Occupation-level regression table for one year: share of employment in
/// `older_bands`, AFI, female share, graduate share, mean hourly wage and one
/// `industry_<id>` employment-share column per industry. Occupations without
/// employment or AFI are left out; a missing wage is NaN.
pub fn occupation_table(
    afi: &AfiTable,
    panel: &EmploymentPanel,
    older_bands: &BTreeSet<String>,
) -> DataTable {
    #[derive(Default)]
    struct Acc {
        total: f64,
        older: f64,
        female: f64,
        grad: f64,
        wage_num: f64,
        wage_den: f64,
        industry: BTreeMap<String, f64>,
    }
    let industries: Vec<String> = panel.industries().into_iter().map(String::from).collect();
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for c in panel
        .cells()
        .iter()
        .filter(|c| c.year == afi.year && c.count > 0.0)
    {
        if afi.get(&c.occupation).is_none() {
            continue;
        }
        let a = acc.entry(&c.occupation).or_default();
        a.total += c.count;
        if older_bands.contains(&c.age_band) {
            a.older += c.count;
        }
        if c.sex == Sex::Female {
            a.female += c.count;
        }
        if c.education == Education::College {
            a.grad += c.count;
        }
        if let Some(w) = c.wage {
            a.wage_num += w * c.count;
            a.wage_den += c.count;
        }
        *a.industry.entry(c.industry.clone()).or_default() += c.count;
    }
    let ids: Vec<String> = acc.keys().map(|s| s.to_string()).collect();
    let mut table = DataTable::new(ids);
    let col = |f: &dyn Fn(&Acc) -> f64| acc.values().map(f).collect::<Vec<f64>>();
    let push =
        |t: &mut DataTable, name: &str, v: Vec<f64>| t.push_column(name, v).expect("fresh column");
    push(&mut table, "older_share", col(&|a| a.older / a.total));
    push(
        &mut table,
        "afi",
        acc.keys()
            .map(|id| afi.get(id).expect("filtered above"))
            .collect(),
    );
    push(&mut table, "female_share", col(&|a| a.female / a.total));
    push(&mut table, "graduate_share", col(&|a| a.grad / a.total));
    push(
        &mut table,
        "hourly_wage",
        col(&|a| {
            if a.wage_den > 0.0 {
                a.wage_num / a.wage_den
            } else {
                f64::NAN
            }
        }),
    );
    for ind in &industries {
        push(
            &mut table,
            &format!("industry_{ind}"),
            col(&|a| a.industry.get(ind).copied().unwrap_or(0.0) / a.total),
        );
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(
        year: i32,
        occ: &str,
        age: &str,
        sex: Sex,
        edu: Education,
        ind: &str,
        count: f64,
    ) -> PanelCell {
        PanelCell {
            year,
            occupation: occ.into(),
            age_band: age.into(),
            sex,
            education: edu,
            industry: ind.into(),
            count,
            wage: Some(20.0),
        }
    }

    fn simple_panel(rows: &[(i32, &str, f64)]) -> EmploymentPanel {
        EmploymentPanel::new(
            rows.iter()
                .map(|&(y, o, c)| cell(y, o, "25-49", Sex::Female, Education::College, "retail", c))
                .collect(),
        )
        .unwrap()
    }

    fn afi(year: i32, v: &[(&str, f64)]) -> AfiTable {
        AfiTable::new(
            year,
            None,
            v.iter().map(|(k, x)| (k.to_string(), *x)).collect(),
        )
        .unwrap()
    }

    fn values(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|(k, x)| (k.to_string(), *x)).collect()
    }

    #[test]
    fn weighted_mean_cases() {
        let p = simple_panel(&[(2020, "a", 10.0), (2020, "b", 10.0)]);
        let v = values(&[("a", 0.2), ("b", 0.4)]);
        assert!((weighted_mean(&v, &p, &GroupFilter::default()).unwrap() - 0.3).abs() < 1e-15);

        let p = simple_panel(&[(2020, "a", 1.0), (2020, "b", 2.0), (2020, "c", 7.0)]);
        let v = values(&[("a", 0.9), ("b", -0.3), ("c", 0.5)]);
        // (0.9 - 0.6 + 3.5) / 10
        assert!((weighted_mean(&v, &p, &GroupFilter::default()).unwrap() - 0.38).abs() < 1e-12);
    }

    #[test]
    fn weighted_mean_errors() {
        let p = simple_panel(&[(2020, "a", 0.0), (2020, "b", 3.0)]);
        let v = values(&[("b", 0.1)]);
        // zero-count occupation needs no value
        assert!(weighted_mean(&v, &p, &GroupFilter::default()).is_ok());
        let f = GroupFilter {
            industries: Some(["mining".to_string()].into()),
            ..Default::default()
        };
        assert!(matches!(
            weighted_mean(&v, &p, &f),
            Err(AnalyticsError::UnknownCategory { .. })
        ));
        let p = simple_panel(&[(2020, "a", 0.0)]);
        assert_eq!(
            weighted_mean(&v, &p, &GroupFilter::default()),
            Err(AnalyticsError::ZeroEmployment)
        );
        let p = simple_panel(&[(2020, "z", 1.0)]);
        assert_eq!(
            weighted_mean(&v, &p, &GroupFilter::default()),
            Err(AnalyticsError::MissingValue("z".into()))
        );
    }

    #[test]
    fn quartiles_of_four_values() {
        let t = afi(2020, &[("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)]);
        let q = make_quantiles(&t, 4).unwrap();
        let b = q.assign_all(&t);
        assert_eq!(b.values().copied().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        // value on a cut point goes up
        assert_eq!(q.assign(q.cuts[1]), 3);
        assert_eq!(q.assign(-1.0), 1);
        assert_eq!(q.assign(1.0), 4);
    }

    #[test]
    fn quantile_errors() {
        let t = afi(2020, &[("a", 0.1), ("b", 0.2)]);
        assert_eq!(
            make_quantiles(&t, 4),
            Err(AnalyticsError::TooFewValues { n: 2, k: 4 })
        );
        assert_eq!(
            make_quantiles(&t, 1),
            Err(AnalyticsError::BadQuantileCount(1))
        );
        let t = afi(2020, &[("a", 0.1), ("b", 0.1), ("c", 0.1), ("d", 0.4)]);
        assert!(matches!(
            make_quantiles(&t, 4),
            Err(AnalyticsError::TiedCutPoints(_))
        ));
    }

    #[test]
    fn linear_quantile_definition() {
        let s = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(quantile_sorted(&s, 0.5), 3.0);
        assert_eq!(quantile_sorted(&s, 0.25), 1.75);
        assert_eq!(quantile_sorted(&s, 1.0), 8.0);
    }

    #[test]
    fn oaxaca_hand_case() {
        let p = simple_panel(&[
            (1990, "a", 1.0),
            (1990, "b", 1.0),
            (2020, "a", 1.0),
            (2020, "b", 3.0),
        ]);
        let a0 = afi(1990, &[("a", 0.2), ("b", 0.4)]);
        let a1 = afi(2020, &[("a", 0.3), ("b", 0.5)]);
        let d = oaxaca_decompose(&a0, &a1, &p, 1990, 2020, OaxacaVariant::Midpoint).unwrap();
        assert!((d.total - 0.15).abs() < 1e-15);
        assert!((d.within - 0.10).abs() < 1e-15);
        assert!((d.between - 0.05).abs() < 1e-15);
        assert_eq!(d.interaction, 0.0);
        assert!((d.relative_change - 0.5).abs() < 1e-15);

        for v in [OaxacaVariant::Initial, OaxacaVariant::Final] {
            let d = oaxaca_decompose(&a0, &a1, &p, 1990, 2020, v).unwrap();
            assert!((d.within + d.between + d.interaction - d.total).abs() < 1e-15);
        }
        let d = oaxaca_decompose(&a0, &a1, &p, 1990, 2020, OaxacaVariant::Initial).unwrap();
        // s0 = (.5, .5): within 0.1; a0 dot ds = -0.05 + 0.1 = 0.05; interaction 0
        assert!((d.within - 0.10).abs() < 1e-15 && (d.between - 0.05).abs() < 1e-15);
    }

    #[test]
    fn oaxaca_excludes_non_common() {
        let p = simple_panel(&[
            (1990, "a", 1.0),
            (1990, "b", 1.0),
            (2020, "a", 1.0),
            (2020, "c", 2.0),
        ]);
        let a0 = afi(1990, &[("a", 0.2), ("b", 0.4)]);
        let a1 = afi(2020, &[("a", 0.3), ("c", 0.5)]);
        let d = oaxaca_decompose(&a0, &a1, &p, 1990, 2020, OaxacaVariant::Midpoint).unwrap();
        assert_eq!(d.common, vec!["a".to_string()]);
        assert_eq!(d.excluded.len(), 2);
        assert!(d.excluded[0].reason.contains("no AFI in 2020"));
        let empty = afi(2020, &[("q", 0.1)]);
        assert_eq!(
            oaxaca_decompose(&a0, &empty, &p, 1990, 2020, OaxacaVariant::Midpoint),
            Err(AnalyticsError::EmptyCommonSet)
        );
    }

    fn demo_panel() -> EmploymentPanel {
        use Education::*;
        use Sex::*;
        EmploymentPanel::new(vec![
            cell(2020, "a", "25-49", Female, College, "x", 4.0),
            cell(2020, "b", "25-49", Female, NoCollege, "x", 2.0),
            cell(2020, "b", "50-64", Male, NoCollege, "y", 3.0),
            cell(2020, "c", "65-74", Male, College, "y", 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn demographic_totals_and_top_share() {
        let p = demo_panel();
        let t = afi(2020, &[("a", 0.4), ("b", 0.1), ("c", 0.3), ("d", 0.2)]);
        let q = make_quantiles(&t, 4).unwrap();
        let all = GroupingSpec::default();
        let rows = demographic_table(&[(2020, t.clone())].into(), &p, &all, Some(&q)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].employment_share, 1.0);
        // top quartile is `a`: 4 of 10
        assert!((rows[0].top_share.unwrap() - 0.4).abs() < 1e-15);

        let spec = GroupingSpec {
            dimensions: vec![Dimension::Sex, Dimension::Age],
            age_map: [("50-64", "50-74"), ("65-74", "50-74"), ("25-49", "15-49")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            include_totals: true,
        };
        let rows = demographic_table(&[(2020, t)].into(), &p, &spec, Some(&q)).unwrap();
        // (total, female, male) x (total, 15-49, 50-74)
        assert_eq!(rows.len(), 9);
        let find = |g: [&str; 2]| rows.iter().find(|r| r.group == g).unwrap();
        let fo = find(["female", "50-74"]);
        assert!(fo.empty && fo.weighted_afi.is_none() && fo.top_share.is_none());
        let mo = find(["male", "50-74"]);
        assert!((mo.weighted_afi.unwrap() - (0.3 + 0.3) / 4.0).abs() < 1e-15);
        let shares: f64 = ["female", "male"]
            .iter()
            .flat_map(|s| ["15-49", "50-74"].map(|a| find([s, a]).employment_share))
            .sum();
        assert!((shares - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grouped_median() {
        let m: BTreeMap<String, f64> =
            [("25-49".to_string(), 50.0), ("50-64".to_string(), 50.0)].into();
        assert_eq!(grouped_median_age(&m), Some(50.0));
        let m: BTreeMap<String, f64> =
            [("15-24".to_string(), 1.0), ("25-49".to_string(), 3.0)].into();
        // half = 2, one below, one more of three within 25..50
        assert!((grouped_median_age(&m).unwrap() - (25.0 + 25.0 / 3.0)).abs() < 1e-12);
        let m: BTreeMap<String, f64> = [("old".to_string(), 1.0)].into();
        assert_eq!(grouped_median_age(&m), None);
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[-1.0, 0.0, 0.5, 1.0, 2.0], -1.0, 1.0, 4).unwrap();
        assert_eq!(
            h.iter().map(|b| b.count).collect::<Vec<_>>(),
            vec![1, 0, 1, 2]
        );
        let area: f64 = h.iter().map(|b| b.density * (b.hi - b.lo)).sum();
        assert!((area - 1.0).abs() < 1e-15);
        assert!(histogram(&[], 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn occupation_table_columns() {
        let p = demo_panel();
        let t = afi(2020, &[("a", 0.4), ("b", 0.1), ("c", 0.3)]);
        let older: BTreeSet<String> = ["50-64".to_string(), "65-74".to_string()].into();
        let d = occupation_table(&t, &p, &older);
        assert_eq!(d.ids(), ["a", "b", "c"]);
        assert_eq!(d.column("older_share").unwrap(), [0.0, 0.6, 1.0]);
        assert_eq!(d.column("female_share").unwrap(), [1.0, 0.4, 0.0]);
        assert_eq!(d.column("industry_y").unwrap(), [0.0, 0.6, 1.0]);
    }

    #[test]
    fn profiles_by_bucket() {
        let cat = DescriptorCatalog::new(
            2020,
            vec!["a".into(), "b".into()],
            vec!["d1".into()],
            vec![vec![0.2], vec![0.8]],
            [("d1".to_string(), "t".to_string())].into(),
        )
        .unwrap();
        let p = simple_panel(&[(2020, "a", 1.0), (2020, "b", 3.0)]);
        let t = afi(2020, &[("a", -0.5), ("b", 0.5)]);
        let q = make_quantiles(&t, 2).unwrap();
        let rows = quantile_profile(&cat, &t, &p, &q).unwrap();
        assert_eq!(rows[0].means[0], Some(0.2));
        assert!((rows[0].means[1].unwrap() - 0.8).abs() < 1e-15);
        assert!((rows[0].spread().unwrap() - 0.6).abs() < 1e-15);
        let rows = group_profile(&cat, &p, &[GroupFilter::default()]).unwrap();
        assert!((rows[0].means[0].unwrap() - 0.65).abs() < 1e-15);
    }
}
