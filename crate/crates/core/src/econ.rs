//! Least squares with heteroskedasticity-robust inference, Spearman rank
//! correlation and rank-deviation summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::linalg::{least_squares, Matrix};

#[derive(Debug, Error)]
pub enum EconError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` given twice")]
    DuplicateColumn(String),
    #[error("column `{name}` has {got} values, expected {expected}")]
    ColumnLength {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("focus regressor `{0}` is not among the regressors")]
    FocusNotRegressor(String),
    #[error("design is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("need more observations than parameters: N = {n}, k = {k}")]
    TooFewObservations { n: usize, k: usize },
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0} input is constant; rank correlation undefined")]
    Constant(&'static str),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("exact permutation p-value supports n <= {max}, got {n}")]
    ExactTooLarge { n: usize, max: usize },
    #[error("item sets differ; `{0}` appears in only one ranking")]
    ItemMismatch(String),
    #[error("no deviations to summarize")]
    Empty,
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
}

pub type Result<T, E = EconError> = std::result::Result<T, E>;

/// Numeric columns keyed by name over a shared list of row ids. NaN marks a
/// missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    ids: Vec<String>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn new(ids: Vec<String>) -> Self {
        Self {
            ids,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if self.names.iter().any(|n| n == name) {
            return Err(EconError::DuplicateColumn(name.into()));
        }
        if values.len() != self.ids.len() {
            return Err(EconError::ColumnLength {
                name: name.into(),
                expected: self.ids.len(),
                got: values.len(),
            });
        }
        self.names.push(name.into());
        self.columns.push(values);
        Ok(())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
    }

    /// Reads a CSV whose first column holds row ids and whose other columns are
    /// numeric. Empty cells and `NA` read as missing.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.is_empty() {
            return Err(EconError::Malformed {
                line: 1,
                reason: "empty header".into(),
            });
        }
        let mut ids = Vec::new();
        let mut columns = vec![Vec::new(); headers.len() - 1];
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = k as u64 + 2;
            ids.push(rec[0].to_string());
            for (j, col) in columns.iter_mut().enumerate() {
                let raw = rec[j + 1].trim();
                let v = if raw.is_empty() || raw == "NA" {
                    f64::NAN
                } else {
                    raw.parse().map_err(|_| EconError::Malformed {
                        line,
                        reason: format!("`{raw}` in column `{}` is not a number", &headers[j + 1]),
                    })?
                };
                col.push(v);
            }
        }
        let mut t = Self::new(ids);
        for (name, col) in headers.iter().skip(1).zip(columns) {
            t.push_column(name, col)?;
        }
        Ok(t)
    }

    /// Writes shortest round-trip floats; missing values as empty cells.
    pub fn write_csv(&self, out: impl Write, id_header: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once(id_header).chain(self.names.iter().map(String::as_str)))?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.columns.iter().map(|c| {
                if c[i].is_nan() {
                    String::new()
                } else {
                    c[i].to_string()
                }
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Heteroskedasticity-consistent covariance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HcType {
    Hc0,
    #[default]
    Hc1,
    Hc2,
    Hc3,
}

impl fmt::Display for HcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hc0 => "HC0",
            Self::Hc1 => "HC1",
            Self::Hc2 => "HC2",
            Self::Hc3 => "HC3",
        })
    }
}

impl FromStr for HcType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "HC0" => Ok(Self::Hc0),
            "HC1" => Ok(Self::Hc1),
            "HC2" => Ok(Self::Hc2),
            "HC3" => Ok(Self::Hc3),
            other => Err(format!("unknown covariance type `{other}` (HC0..HC3)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    #[serde(default = "default_true")]
    pub intercept: bool,
    /// Regressor whose partial R² is reported.
    #[serde(default)]
    pub focus: Option<String>,
    #[serde(default)]
    pub hc: HcType,
}

fn default_true() -> bool {
    true
}

pub const INTERCEPT: &str = "const";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub dependent: String,
    pub hc: HcType,
    /// Intercept first when present, then regressors in spec order.
    pub coefficients: Vec<Coefficient>,
    pub n: usize,
    pub k: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub partial_r_squared: Option<f64>,
    pub focus: Option<String>,
    pub ssr: f64,
    /// Rows dropped for missing values.
    pub dropped: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// `***` below 1%, `**` below 5%, `*` below 10%.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Two-sided p value of `t` under Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

struct Design {
    x: Matrix,
    y: Vec<f64>,
    names: Vec<String>,
    dropped: usize,
}

fn build_design(data: &DataTable, spec: &RegressionSpec) -> Result<Design> {
    let mut seen = BTreeSet::new();
    for r in std::iter::once(&spec.dependent).chain(&spec.regressors) {
        if !seen.insert(r.as_str()) {
            return Err(EconError::DuplicateColumn(r.clone()));
        }
    }
    if let Some(f) = &spec.focus {
        if !spec.regressors.contains(f) {
            return Err(EconError::FocusNotRegressor(f.clone()));
        }
    }
    let col = |name: &String| {
        data.column(name)
            .ok_or_else(|| EconError::UnknownColumn(name.clone()))
    };
    let y_all = col(&spec.dependent)?;
    let regs: Vec<&[f64]> = spec.regressors.iter().map(col).collect::<Result<_>>()?;
    let keep: Vec<usize> = (0..data.len())
        .filter(|&i| y_all[i].is_finite() && regs.iter().all(|c| c[i].is_finite()))
        .collect();
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if spec.intercept {
        names.push(INTERCEPT.to_string());
        columns.push(vec![1.0; keep.len()]);
    }
    for (name, c) in spec.regressors.iter().zip(&regs) {
        names.push(name.clone());
        columns.push(keep.iter().map(|&i| c[i]).collect());
    }
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    Ok(Design {
        x: Matrix::from_columns(&refs),
        y: keep.iter().map(|&i| y_all[i]).collect(),
        names,
        dropped: data.len() - keep.len(),
    })
}

fn ssr(e: &[f64]) -> f64 {
    e.iter().map(|v| v * v).sum()
}

fn drop_column(x: &Matrix, j: usize) -> Matrix {
    let mut out = Matrix::zeros(x.rows, x.cols - 1);
    for i in 0..x.rows {
        for (c, jj) in (0..x.cols).filter(|&c| c != j).enumerate() {
            out.set(i, c, x.get(i, jj));
        }
    }
    out
}

/// OLS with robust standard errors. Rows with a missing value in any used
/// column are dropped.
pub fn ols_robust(data: &DataTable, spec: &RegressionSpec) -> Result<RegressionResult> {
    let d = build_design(data, spec)?;
    let (n, k) = (d.x.rows, d.x.cols);
    if k == 0 || n <= k {
        return Err(EconError::TooFewObservations { n, k });
    }
    let fit = least_squares(&d.x, &d.y).map_err(|cols| {
        EconError::RankDeficient(cols.into_iter().map(|j| d.names[j].clone()).collect())
    })?;
    let e = &fit.residuals;

    // meat = sum_i w_i e_i^2 x_i x_i'
    let mut meat = Matrix::zeros(k, k);
    for i in 0..n {
        let h = fit.leverage[i];
        let w = match spec.hc {
            HcType::Hc0 | HcType::Hc1 => 1.0,
            HcType::Hc2 => 1.0 / (1.0 - h),
            HcType::Hc3 => 1.0 / ((1.0 - h) * (1.0 - h)),
        };
        let s = w * e[i] * e[i];
        for a in 0..k {
            let xa = d.x.get(i, a) * s;
            for b in 0..k {
                meat.data[a * k + b] += xa * d.x.get(i, b);
            }
        }
    }
    let scale = if spec.hc == HcType::Hc1 {
        n as f64 / (n - k) as f64
    } else {
        1.0
    };
    let bread = &fit.xtx_inv;
    let df = (n - k) as f64;
    let mut coefficients = Vec::with_capacity(k);
    for j in 0..k {
        // (A M A)_jj
        let mut v = 0.0;
        for a in 0..k {
            for b in 0..k {
                v += bread.get(j, a) * meat.get(a, b) * bread.get(b, j);
            }
        }
        let se = (scale * v).max(0.0).sqrt();
        let beta = fit.beta[j];
        let t = if se > 0.0 {
            beta / se
        } else if beta == 0.0 {
            f64::NAN
        } else {
            beta.signum() * f64::INFINITY
        };
        let p = two_sided_p(t, df);
        coefficients.push(Coefficient {
            name: d.names[j].clone(),
            estimate: beta,
            std_error: se,
            t,
            p,
            stars: stars(p),
        });
    }

    let ssr_full = ssr(e);
    let (r2, adj) = if spec.intercept {
        let mean = d.y.iter().sum::<f64>() / n as f64;
        let sst: f64 = d.y.iter().map(|v| (v - mean).powi(2)).sum();
        let r2 = 1.0 - ssr_full / sst;
        (r2, 1.0 - (1.0 - r2) * (n - 1) as f64 / df)
    } else {
        let r2 = 1.0 - ssr_full / ssr(&d.y);
        (r2, 1.0 - (1.0 - r2) * n as f64 / df)
    };

    let partial = match &spec.focus {
        None => None,
        Some(f) => {
            let j = d.names.iter().position(|nm| nm == f).expect("validated");
            let ssr_r = if k == 1 {
                ssr(&d.y)
            } else {
                let xr = drop_column(&d.x, j);
                let fr = least_squares(&xr, &d.y).expect("subset of a full-rank design");
                ssr(&fr.residuals)
            };
            Some(if ssr_r > 0.0 {
                ((ssr_r - ssr_full) / ssr_r).clamp(0.0, 1.0)
            } else {
                0.0
            })
        }
    };

    Ok(RegressionResult {
        dependent: spec.dependent.clone(),
        hc: spec.hc,
        coefficients,
        n,
        k,
        r_squared: r2,
        adj_r_squared: adj,
        partial_r_squared: partial,
        focus: spec.focus.clone(),
        ssr: ssr_full,
        dropped: d.dropped,
        residuals: fit.residuals,
    })
}

/// Aligned text table with one column per model: estimates with stars, standard
/// errors in parentheses on the row below, then partial R², adjusted R² and N.
/// `labels` maps column names to display names.
pub fn render_table(
    models: &[(String, RegressionResult)],
    labels: &BTreeMap<String, String>,
    digits: usize,
) -> String {
    let mut terms: Vec<&str> = Vec::new();
    for (_, m) in models {
        for c in &m.coefficients {
            if !terms.contains(&c.name.as_str()) {
                terms.push(&c.name);
            }
        }
    }
    // intercept last, as is conventional in printed tables
    if let Some(pos) = terms.iter().position(|t| *t == INTERCEPT) {
        let c = terms.remove(pos);
        terms.push(c);
    }
    let label = |name: &str| {
        labels
            .get(name)
            .cloned()
            .unwrap_or_else(|| name.to_string())
    };
    let mut rows: Vec<Vec<String>> = Vec::new();
    rows.push(
        std::iter::once(String::new())
            .chain(models.iter().map(|m| m.0.clone()))
            .collect(),
    );
    for t in &terms {
        let mut est = vec![label(t)];
        let mut se = vec![String::new()];
        for (_, m) in models {
            match m.coefficient(t) {
                Some(c) => {
                    est.push(format!("{:.*}{}", digits, c.estimate, c.stars));
                    se.push(format!("({:.*})", digits, c.std_error));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push(est);
        rows.push(se);
    }
    let focus = models.iter().find_map(|(_, m)| m.focus.clone());
    if let Some(f) = focus {
        let mut r = vec![format!("Partial R² of {}", label(&f))];
        r.extend(models.iter().map(|(_, m)| {
            m.partial_r_squared
                .map_or(String::new(), |v| format!("{v:.5}"))
        }));
        rows.push(r);
    }
    let mut r = vec!["Adj. R²".to_string()];
    r.extend(
        models
            .iter()
            .map(|(_, m)| format!("{:.5}", m.adj_r_squared)),
    );
    rows.push(r);
    let mut r = vec!["N".to_string()];
    r.extend(models.iter().map(|(_, m)| m.n.to_string()));
    rows.push(r);

    let ncol = models.len() + 1;
    let widths: Vec<usize> = (0..ncol)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let mut line = String::new();
        for (j, cell) in r.iter().enumerate() {
            let pad = widths[j] - cell.chars().count();
            if j == 0 {
                line.push_str(cell);
                line.extend(std::iter::repeat_n(' ', pad));
            } else {
                line.push_str("  ");
                line.extend(std::iter::repeat_n(' ', pad));
                line.push_str(cell);
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

/// Long-format CSV: `model,term,estimate,std_error,t,p,stars` followed by one
/// row per fit statistic with the value in `estimate`.
pub fn write_regression_csv(models: &[(String, RegressionResult)], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "term", "estimate", "std_error", "t", "p", "stars"])?;
    for (label, m) in models {
        for c in &m.coefficients {
            w.write_record([
                label.clone(),
                c.name.clone(),
                c.estimate.to_string(),
                c.std_error.to_string(),
                c.t.to_string(),
                c.p.to_string(),
                c.stars.to_string(),
            ])?;
        }
        let mut stat =
            |name: &str, v: String| w.write_record([label.as_str(), name, &v, "", "", "", ""]);
        stat("adj_r_squared", m.adj_r_squared.to_string())?;
        stat("r_squared", m.r_squared.to_string())?;
        if let Some(p) = m.partial_r_squared {
            stat("partial_r_squared", p.to_string())?;
        }
        stat("n", m.n.to_string())?;
        stat("covariance", m.hc.to_string())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Ranks with ties sharing the average of the positions they occupy (1-based).
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    /// Student's t approximation with `n - 2` degrees of freedom.
    #[default]
    Asymptotic,
    /// Full permutation distribution of the rank correlation.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
    pub method: PValueMethod,
}

/// Largest sample for the exact permutation p value (10! orderings).
pub const EXACT_MAX_N: usize = 10;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(EconError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(EconError::TooFewObservations { n: x.len(), k: 2 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(EconError::NonFinite);
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(EconError::Constant("first"));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(EconError::Constant("second"));
    }
    Ok((midranks(x), midranks(y)))
}

/// Spearman's rho with midranks for ties and a two-sided p value.
pub fn spearman(x: &[f64], y: &[f64], method: PValueMethod) -> Result<SpearmanResult> {
    let (rx, ry) = check_pair(x, y)?;
    let n = x.len();
    let rho = pearson(&rx, &ry);
    let p = match method {
        PValueMethod::Asymptotic => {
            if rho.abs() >= 1.0 {
                0.0
            } else {
                let df = (n - 2) as f64;
                two_sided_p(rho * (df / (1.0 - rho * rho)).sqrt(), df)
            }
        }
        PValueMethod::Exact => {
            if n > EXACT_MAX_N {
                return Err(EconError::ExactTooLarge {
                    n,
                    max: EXACT_MAX_N,
                });
            }
            exact_p(&rx, &ry, rho)
        }
    };
    Ok(SpearmanResult { rho, p, n, method })
}

/// Share of orderings of `ry` whose |rho| reaches the observed |rho|.
fn exact_p(rx: &[f64], ry: &[f64], rho: f64) -> f64 {
    let n = ry.len();
    let mut perm = ry.to_vec();
    let target = rho.abs() - 1e-12;
    let (mut hits, mut total) = (0u64, 0u64);
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut visit = |p: &[f64]| {
        total += 1;
        if pearson(rx, p).abs() >= target {
            hits += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationLevel {
    pub deviation: f64,
    pub count: usize,
    pub share: f64,
    /// Share of deviations at or below this level.
    pub cumulative_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub levels: Vec<DeviationLevel>,
}

impl DeviationStats {
    /// Summarizes absolute deviations (signs are dropped).
    pub fn from_deviations(devs: &[f64]) -> Result<Self> {
        if devs.is_empty() {
            return Err(EconError::Empty);
        }
        if devs.iter().any(|d| !d.is_finite()) {
            return Err(EconError::NonFinite);
        }
        let mut sorted: Vec<f64> = devs.iter().map(|d| d.abs()).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let mut levels: Vec<DeviationLevel> = Vec::new();
        let mut seen = 0;
        for &d in &sorted {
            seen += 1;
            match levels.last_mut() {
                Some(l) if l.deviation == d => l.count += 1,
                _ => levels.push(DeviationLevel {
                    deviation: d,
                    count: 1,
                    share: 0.0,
                    cumulative_share: 0.0,
                }),
            }
            let last = levels.last_mut().unwrap();
            last.cumulative_share = seen as f64 / n as f64;
        }
        for l in &mut levels {
            l.share = l.count as f64 / n as f64;
        }
        Ok(Self {
            n,
            mean,
            median,
            levels,
        })
    }

    /// Share of deviations at or below `level`.
    pub fn share_at_most(&self, level: f64) -> f64 {
        self.levels
            .iter()
            .take_while(|l| l.deviation <= level)
            .last()
            .map_or(0.0, |l| l.cumulative_share)
    }
}

/// Absolute differences between two rankings of the same items.
pub fn deviation_stats(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<DeviationStats> {
    if let Some(k) = a
        .keys()
        .find(|k| !b.contains_key(*k))
        .or_else(|| b.keys().find(|k| !a.contains_key(*k)))
    {
        return Err(EconError::ItemMismatch(k.clone()));
    }
    let devs: Vec<f64> = a.iter().map(|(k, v)| v - b[k]).collect();
    DeviationStats::from_deviations(&devs)
}
