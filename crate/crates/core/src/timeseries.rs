//! Release averaging and backcasting of descriptor weights.
//!
//! Backcasts extend the first segment of a Fritsch-Carlson monotone cubic
//! Hermite interpolant to the target year, then clamp the value to a band of
//! one standard error around the OLS line through all observations, and
//! finally to `[0, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogMeta, DescriptorCatalog};

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("no catalogs to average")]
    NoCatalogs,
    #[error("catalog {index} has a different {kind} set")]
    IdSetMismatch { index: usize, kind: &'static str },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("abscissae must be strictly increasing (at index {0})")]
    NotIncreasing(usize),
    #[error("non-finite observation at index {0}")]
    NonFinite(usize),
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("target year {target} is not before the first observation {first}")]
    NotBeforeFirst { target: f64, first: f64 },
    #[error("cannot drop {drop} of {total} observations and keep 3 for fitting")]
    InvalidHoldout { drop: usize, total: usize },
}

pub type Result<T, E = SeriesError> = std::result::Result<T, E>;

/// Averages several releases of the same year cell by cell. Occupation rows are
/// aligned by id and returned in the order of the first catalog.
pub fn average_releases(catalogs: &[DescriptorCatalog]) -> Result<DescriptorCatalog> {
    let first = catalogs.first().ok_or(SeriesError::NoCatalogs)?;
    let occ_set: BTreeSet<&String> = first.occupations().iter().collect();
    let mut aligned = Vec::with_capacity(catalogs.len());
    for (index, c) in catalogs.iter().enumerate() {
        if c.descriptors() != first.descriptors() {
            return Err(SeriesError::IdSetMismatch {
                index,
                kind: "descriptor",
            });
        }
        if c.occupations().iter().collect::<BTreeSet<_>>() != occ_set {
            return Err(SeriesError::IdSetMismatch {
                index,
                kind: "occupation",
            });
        }
        aligned.push(c.reordered(first.occupations()).expect("same id set"));
    }
    let n = first.n_occupations();
    let count = catalogs.len() as f64;
    let mut weights = Vec::with_capacity(n * first.n_descriptors());
    for i in 0..n {
        for j in 0..first.n_descriptors() {
            let sum: f64 = aligned.iter().map(|c| c.weight(i, j)).sum();
            weights.push((sum / count).clamp(0.0, 1.0));
        }
    }
    let meta = CatalogMeta {
        missing_cells: catalogs.iter().map(|c| c.meta().missing_cells).sum(),
        clamped_cells: catalogs.iter().map(|c| c.meta().clamped_cells).sum(),
        scaling: first.meta().scaling.clone(),
    };
    Ok(first.with_weights(first.year(), weights, meta))
}

/// Monotone piecewise cubic Hermite interpolant with Fritsch-Carlson slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
}

/// Three-point endpoint slope, limited to keep the end segment monotone.
fn edge_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if !same_sign(d, s0) {
        0.0
    } else if !same_sign(s0, s1) && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(SeriesError::TooFewObservations {
                needed: 2,
                got: n.min(y.len()),
            });
        }
        if let Some(k) = x.iter().chain(y).position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(k % n));
        }
        let mut h = Vec::with_capacity(n - 1);
        let mut secant = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            let hk = x[k + 1] - x[k];
            if hk <= 0.0 {
                return Err(SeriesError::NotIncreasing(k + 1));
            }
            h.push(hk);
            secant.push((y[k + 1] - y[k]) / hk);
        }

        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = secant[0];
            slopes[1] = secant[0];
        } else {
            for k in 1..n - 1 {
                let (s_prev, s_next) = (secant[k - 1], secant[k]);
                if same_sign(s_prev, s_next) {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / s_prev + w2 / s_next);
                }
            }
            slopes[0] = edge_slope(h[0], h[1], secant[0], secant[1]);
            slopes[n - 1] = edge_slope(h[n - 2], h[n - 3], secant[n - 2], secant[n - 3]);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            slopes,
        })
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Evaluates the interpolant; outside the knots the end segments are extended.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = if t <= self.x[0] {
            0
        } else if t >= self.x[n - 1] {
            n - 2
        } else {
            self.x.partition_point(|&xi| xi <= t) - 1
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k]
            + h10 * h * self.slopes[k]
            + h01 * self.y[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

/// Width of the clamping band around the linear extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMode {
    /// Residual standard error of the line, `sqrt(SSR / (m - 2))`.
    #[default]
    Residual,
    /// Standard error of a new observation at the target year.
    Prediction,
}

impl fmt::Display for BandMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Residual => "residual",
            Self::Prediction => "prediction",
        })
    }
}

impl FromStr for BandMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "residual" => Ok(Self::Residual),
            "prediction" => Ok(Self::Prediction),
            other => Err(format!("unknown band mode `{other}` (residual|prediction)")),
        }
    }
}

/// Observations of one occupation/descriptor weight over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSeries {
    pub occupation: String,
    pub descriptor: String,
    years: Vec<f64>,
    values: Vec<f64>,
}

impl DescriptorSeries {
    pub fn new(
        occupation: impl Into<String>,
        descriptor: impl Into<String>,
        observations: &[(f64, f64)],
    ) -> Result<Self> {
        for (k, w) in observations.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(SeriesError::NotIncreasing(k + 1));
            }
        }
        for (index, &(t, v)) in observations.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(SeriesError::NonFinite(index));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(SeriesError::OutOfRange { index, value: v });
            }
        }
        Ok(Self {
            occupation: occupation.into(),
            descriptor: descriptor.into(),
            years: observations.iter().map(|o| o.0).collect(),
            values: observations.iter().map(|o| o.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn years(&self) -> &[f64] {
        &self.years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn tail(&self, skip: usize) -> Self {
        Self {
            occupation: self.occupation.clone(),
            descriptor: self.descriptor.clone(),
            years: self.years[skip..].to_vec(),
            values: self.values[skip..].to_vec(),
        }
    }
}

/// One backcast evaluation, with the intermediate quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backcast {
    pub target_year: f64,
    /// Extended first PCHIP segment at the target year.
    pub pchip_raw: f64,
    /// OLS line at the target year.
    pub linear: f64,
    /// Half-width of the band.
    pub stderr: f64,
    /// `pchip_raw` clamped to the band, before the `[0, 1]` clamp.
    pub banded: f64,
    pub final_value: f64,
}

struct LineFit {
    intercept: f64,
    slope: f64,
    resid_se: f64,
    mean_t: f64,
    sxx: f64,
    m: f64,
}

fn fit_line(t: &[f64], y: &[f64]) -> LineFit {
    let m = t.len() as f64;
    let mean_t = t.iter().sum::<f64>() / m;
    let mean_y = y.iter().sum::<f64>() / m;
    let sxx: f64 = t.iter().map(|v| (v - mean_t).powi(2)).sum();
    let sxy: f64 = t
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mean_t) * (b - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let ssr: f64 = t
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    LineFit {
        intercept,
        slope,
        resid_se: (ssr / (m - 2.0)).sqrt(),
        mean_t,
        sxx,
        m,
    }
}

/// Backcasts `series` to `target_year`, which must precede the first
/// observation. Needs at least three observations.
pub fn backcast(series: &DescriptorSeries, target_year: f64, band: BandMode) -> Result<Backcast> {
    if series.len() < 3 {
        return Err(SeriesError::TooFewObservations {
            needed: 3,
            got: series.len(),
        });
    }
    if !(target_year < series.years[0]) {
        return Err(SeriesError::NotBeforeFirst {
            target: target_year,
            first: series.years[0],
        });
    }
    let pchip_raw = Pchip::new(&series.years, &series.values)?.eval(target_year);
    let line = fit_line(&series.years, &series.values);
    let linear = line.intercept + line.slope * target_year;
    let stderr = match band {
        BandMode::Residual => line.resid_se,
        BandMode::Prediction => {
            line.resid_se
                * (1.0 + 1.0 / line.m + (target_year - line.mean_t).powi(2) / line.sxx).sqrt()
        }
    };
    let banded = pchip_raw.clamp(linear - stderr, linear + stderr);
    Ok(Backcast {
        target_year,
        pchip_raw,
        linear,
        stderr,
        banded,
        final_value: banded.clamp(0.0, 1.0),
    })
}

/// Drops the earliest `drop` observations, backcasts each of them from the
/// rest and returns the mean absolute error.
pub fn pseudo_out_of_sample(series: &DescriptorSeries, drop: usize, band: BandMode) -> Result<f64> {
    if drop == 0 || series.len() < drop + 3 {
        return Err(SeriesError::InvalidHoldout {
            drop,
            total: series.len(),
        });
    }
    let kept = series.tail(drop);
    let mut total = 0.0;
    for k in 0..drop {
        let b = backcast(&kept, series.years[k], band)?;
        total += (b.final_value - series.values[k]).abs();
    }
    Ok(total / drop as f64)
}

/// Row of the backcast report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackcastRow {
    pub occupation_id: String,
    pub descriptor_id: String,
    pub target_year: i32,
    pub pchip_raw: f64,
    pub linear: f64,
    pub stderr: f64,
    #[serde(rename = "final")]
    pub final_value: f64,
}

/// Backcasts every cell of a stack of yearly catalogs to `target_year`.
/// All catalogs must share occupation and descriptor ids; the result takes its
/// ids and texts from the earliest catalog.
pub fn backcast_catalog(
    yearly: &BTreeMap<i32, DescriptorCatalog>,
    target_year: i32,
    band: BandMode,
) -> Result<(DescriptorCatalog, Vec<BackcastRow>)> {
    let (_, base) = yearly.iter().next().ok_or(SeriesError::NoCatalogs)?;
    let occ_set: BTreeSet<&String> = base.occupations().iter().collect();
    let mut aligned = Vec::with_capacity(yearly.len());
    for (index, (&year, c)) in yearly.iter().enumerate() {
        if c.descriptors() != base.descriptors() {
            return Err(SeriesError::IdSetMismatch {
                index,
                kind: "descriptor",
            });
        }
        if c.occupations().iter().collect::<BTreeSet<_>>() != occ_set {
            return Err(SeriesError::IdSetMismatch {
                index,
                kind: "occupation",
            });
        }
        aligned.push((
            f64::from(year),
            c.reordered(base.occupations()).expect("same id set"),
        ));
    }
    let n = base.n_occupations();
    let d = base.n_descriptors();
    let mut weights = Vec::with_capacity(n * d);
    let mut rows = Vec::with_capacity(n * d);
    let mut obs = Vec::with_capacity(aligned.len());
    for i in 0..n {
        for j in 0..d {
            obs.clear();
            obs.extend(aligned.iter().map(|(t, c)| (*t, c.weight(i, j))));
            let series = DescriptorSeries::new(
                base.occupations()[i].clone(),
                base.descriptors()[j].clone(),
                &obs,
            )?;
            let b = backcast(&series, f64::from(target_year), band)?;
            weights.push(b.final_value);
            rows.push(BackcastRow {
                occupation_id: series.occupation,
                descriptor_id: series.descriptor,
                target_year,
                pchip_raw: b.pchip_raw,
                linear: b.linear,
                stderr: b.stderr,
                final_value: b.final_value,
            });
        }
    }
    let catalog = base.with_weights(target_year, weights, CatalogMeta::default());
    Ok((catalog, rows))
}

/// Writes the backcast report as
/// `occupation_id,descriptor_id,target_year,pchip_raw,linear,stderr,final`.
pub fn write_backcast_report(
    rows: &[BackcastRow],
    out: impl Write,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "occupation_id",
            "descriptor_id",
            "target_year",
            "pchip_raw",
            "linear",
            "stderr",
            "final",
        ])?;
    }
    w.flush()?;
    Ok(())
}
