//! Descriptor catalogs, amenity definitions and employment panels.
//!
//! A [`DescriptorCatalog`] holds one year's occupation-by-descriptor weight
//! matrix together with the textual definition of every descriptor. Weights
//! live in `[0, 1]`; files on a native scale go through
//! [`load_native_catalog`], which min-max scales each descriptor column.

mod amenity;
mod panel;

pub use amenity::{load_amenities, parse_amenities, Amenity, AmenitySpec};
pub use panel::{
    load_panel, write_panel, Education, EmploymentPanel, PanelCell, Sex, STANDARD_AGE_BANDS,
};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weights this far outside `[0, 1]` are clamped instead of rejected.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

const WEIGHTS_HEADER: [&str; 3] = ["occupation_id", "descriptor_id", "weight"];
const TEXTS_HEADER: [&str; 2] = ["descriptor_id", "text"];

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: line {line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("descriptor `{0}` has no text definition")]
    MissingText(String),
    #[error("duplicate {kind} `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("line {line}: weight {value} for occupation `{occupation}`, descriptor `{descriptor}` is outside [0, 1]")]
    OutOfRange {
        line: u64,
        occupation: String,
        descriptor: String,
        value: f64,
    },
    #[error("weight matrix has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("catalog has no {0}")]
    Empty(&'static str),
    #[error("amenity spec: {0}")]
    AmenitySyntax(String),
    #[error("amenity #{index}: missing field `{field}`")]
    AmenityMissingField { index: usize, field: &'static str },
    #[error("amenity `{0}` has an empty definition")]
    EmptyDefinition(String),
    #[error("line {line}: duplicate panel key {key}")]
    DuplicatePanelKey { line: u64, key: String },
    #[error("line {line}: negative {field} {value}")]
    NegativeValue {
        line: u64,
        field: &'static str,
        value: f64,
    },
}

impl CatalogError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn malformed(path: &Path, line: u64, reason: impl Into<String>) -> Self {
        Self::MalformedRow {
            path: path.to_path_buf(),
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = CatalogError> = std::result::Result<T, E>;

/// Min-max bounds used to map a descriptor's native scale onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleBounds {
    pub min: f64,
    pub max: f64,
}

/// Ingestion bookkeeping. Not part of catalog equality.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogMeta {
    /// Occupation/descriptor cells absent from the file, stored as 0.
    pub missing_cells: usize,
    /// Cells within [`WEIGHT_TOLERANCE`] of the unit interval that were clamped.
    pub clamped_cells: usize,
    /// Per-descriptor bounds when the catalog was built from native-scale scores.
    pub scaling: BTreeMap<String, ScaleBounds>,
}

/// One year's occupation-by-descriptor weights plus descriptor texts.
///
/// Descriptor ids are kept in ascending order so that every reduction over
/// descriptors runs in a fixed order.
#[derive(Debug, Clone)]
pub struct DescriptorCatalog {
    year: i32,
    occupations: Vec<String>,
    descriptors: Vec<String>,
    weights: Vec<f64>,
    texts: BTreeMap<String, String>,
    meta: CatalogMeta,
}

impl PartialEq for DescriptorCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.year == other.year
            && self.occupations == other.occupations
            && self.descriptors == other.descriptors
            && self.texts == other.texts
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl DescriptorCatalog {
    /// Builds a validated catalog. `weights[i][j]` is the weight of
    /// `occupations[i]` on `descriptors[j]`; descriptors may come in any order.
    pub fn new(
        year: i32,
        occupations: Vec<String>,
        descriptors: Vec<String>,
        weights: Vec<Vec<f64>>,
        texts: BTreeMap<String, String>,
    ) -> Result<Self> {
        if weights.len() != occupations.len() {
            return Err(CatalogError::Shape {
                expected: occupations.len(),
                got: weights.len(),
            });
        }
        let d = descriptors.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| descriptors[a].cmp(&descriptors[b]));
        let sorted: Vec<String> = order.iter().map(|&j| descriptors[j].clone()).collect();

        let mut flat = Vec::with_capacity(occupations.len() * d);
        for (i, row) in weights.iter().enumerate() {
            if row.len() != d {
                return Err(CatalogError::Shape {
                    expected: d,
                    got: row.len(),
                });
            }
            for &j in &order {
                let w = row[j];
                if !(0.0..=1.0).contains(&w) {
                    return Err(CatalogError::OutOfRange {
                        line: 0,
                        occupation: occupations[i].clone(),
                        descriptor: descriptors[j].clone(),
                        value: w,
                    });
                }
                flat.push(w);
            }
        }
        Self::from_parts(
            year,
            occupations,
            sorted,
            flat,
            texts,
            CatalogMeta::default(),
        )
    }

    fn from_parts(
        year: i32,
        occupations: Vec<String>,
        descriptors: Vec<String>,
        weights: Vec<f64>,
        mut texts: BTreeMap<String, String>,
        meta: CatalogMeta,
    ) -> Result<Self> {
        if occupations.is_empty() {
            return Err(CatalogError::Empty("occupations"));
        }
        if descriptors.is_empty() {
            return Err(CatalogError::Empty("descriptors"));
        }
        check_unique("occupation id", &occupations)?;
        check_unique("descriptor id", &descriptors)?;
        debug_assert!(descriptors.windows(2).all(|w| w[0] < w[1]));
        for id in &descriptors {
            match texts.get(id) {
                Some(t) if !t.trim().is_empty() => {}
                _ => return Err(CatalogError::MissingText(id.clone())),
            }
        }
        texts.retain(|k, _| descriptors.binary_search(k).is_ok());
        Ok(Self {
            year,
            occupations,
            descriptors,
            weights,
            texts,
            meta,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn occupations(&self) -> &[String] {
        &self.occupations
    }

    /// Descriptor ids in ascending order.
    pub fn descriptors(&self) -> &[String] {
        &self.descriptors
    }

    pub fn texts(&self) -> &BTreeMap<String, String> {
        &self.texts
    }

    pub fn meta(&self) -> &CatalogMeta {
        &self.meta
    }

    pub fn n_occupations(&self) -> usize {
        self.occupations.len()
    }

    pub fn n_descriptors(&self) -> usize {
        self.descriptors.len()
    }

    /// Weight row of occupation `i`, aligned with [`Self::descriptors`].
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.descriptors.len();
        &self.weights[i * d..(i + 1) * d]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.descriptors.len() + j]
    }

    pub fn occupation_index(&self, id: &str) -> Option<usize> {
        self.occupations.iter().position(|o| o == id)
    }

    pub fn descriptor_index(&self, id: &str) -> Option<usize> {
        self.descriptors
            .binary_search_by(|d| d.as_str().cmp(id))
            .ok()
    }

    /// Same ids and texts, new year label and weights (row-major, aligned).
    pub(crate) fn with_weights(&self, year: i32, weights: Vec<f64>, meta: CatalogMeta) -> Self {
        assert_eq!(weights.len(), self.weights.len());
        Self {
            year,
            occupations: self.occupations.clone(),
            descriptors: self.descriptors.clone(),
            weights,
            texts: self.texts.clone(),
            meta,
        }
    }

    /// Returns the catalog with occupation rows reordered to `order`, which must
    /// be a permutation of the catalog's ids.
    pub fn reordered(&self, order: &[String]) -> Option<Self> {
        if order.len() != self.occupations.len() {
            return None;
        }
        let mut weights = Vec::with_capacity(self.weights.len());
        for id in order {
            let i = self.occupation_index(id)?;
            weights.extend_from_slice(self.row(i));
        }
        Some(Self {
            occupations: order.to_vec(),
            weights,
            ..self.clone()
        })
    }
}

fn check_unique(kind: &'static str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(CatalogError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CatalogError::io(path, e))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| CatalogError::csv(path, e))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(CatalogError::malformed(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

struct LongRows {
    occupations: Vec<String>,
    descriptors: Vec<String>,
    cells: HashMap<(usize, usize), (f64, u64)>,
}

fn read_long_rows(path: &Path) -> Result<LongRows> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    check_header(path, &mut rdr, &WEIGHTS_HEADER)?;

    let mut occupations = Vec::new();
    let mut occ_pos: HashMap<String, usize> = HashMap::new();
    let mut desc_pos: HashMap<String, usize> = HashMap::new();
    let mut descriptors = Vec::new();
    let mut cells = HashMap::new();
    let mut missing = 0usize;

    for rec in rdr.records() {
        let rec = rec.map_err(|e| CatalogError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(CatalogError::malformed(
                path,
                line,
                format!("expected 3 fields, found {}", rec.len()),
            ));
        }
        let (occ, desc, raw) = (&rec[0], &rec[1], &rec[2]);
        if occ.is_empty() || desc.is_empty() {
            return Err(CatalogError::malformed(path, line, "empty id"));
        }
        let i = *occ_pos.entry(occ.to_string()).or_insert_with(|| {
            occupations.push(occ.to_string());
            occupations.len() - 1
        });
        let j = *desc_pos.entry(desc.to_string()).or_insert_with(|| {
            descriptors.push(desc.to_string());
            descriptors.len() - 1
        });
        if raw.is_empty() {
            missing += 1;
            continue;
        }
        let value: f64 = raw.parse().map_err(|_| {
            CatalogError::malformed(path, line, format!("weight `{raw}` is not a number"))
        })?;
        if !value.is_finite() {
            return Err(CatalogError::malformed(
                path,
                line,
                format!("weight `{raw}` is not finite"),
            ));
        }
        if cells.insert((i, j), (value, line)).is_some() {
            return Err(CatalogError::DuplicateId {
                kind: "occupation/descriptor pair",
                id: format!("{occ}/{desc}"),
            });
        }
    }
    if missing > 0 {
        log::debug!("{}: {missing} empty weight cells", path.display());
    }
    Ok(LongRows {
        occupations,
        descriptors,
        cells,
    })
}

fn read_texts(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(open(path)?);
    check_header(path, &mut rdr, &TEXTS_HEADER)?;
    let mut texts = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CatalogError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(CatalogError::malformed(
                path,
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(CatalogError::malformed(path, line, "empty descriptor id"));
        }
        if texts.insert(id.clone(), rec[1].to_string()).is_some() {
            return Err(CatalogError::DuplicateId {
                kind: "descriptor text",
                id,
            });
        }
    }
    Ok(texts)
}

/// Assembles the dense matrix with descriptors sorted ascending. `map` turns
/// each observed cell into its final weight.
fn assemble<F>(
    year: i32,
    rows: LongRows,
    texts: BTreeMap<String, String>,
    mut meta: CatalogMeta,
    mut map: F,
) -> Result<DescriptorCatalog>
where
    F: FnMut(usize, usize, f64, u64) -> Result<f64>,
{
    let n = rows.occupations.len();
    let d = rows.descriptors.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| rows.descriptors[a].cmp(&rows.descriptors[b]));

    let mut weights = vec![0.0; n * d];
    let mut missing = 0usize;
    for i in 0..n {
        for (col, &j) in order.iter().enumerate() {
            weights[i * d + col] = match rows.cells.get(&(i, j)) {
                Some(&(v, line)) => map(i, j, v, line)?,
                None => {
                    missing += 1;
                    0.0
                }
            };
        }
    }
    if missing > 0 {
        log::warn!("catalog {year}: {missing} missing weight cells treated as 0");
    }
    meta.missing_cells = missing;
    let descriptors = order.iter().map(|&j| rows.descriptors[j].clone()).collect();
    DescriptorCatalog::from_parts(year, rows.occupations, descriptors, weights, texts, meta)
}

/// Loads a catalog whose weights are already on `[0, 1]`.
///
/// Values outside the interval by more than [`WEIGHT_TOLERANCE`] are rejected;
/// values within the tolerance are clamped. Occupation/descriptor pairs absent
/// from the file (or with an empty weight) become 0.
pub fn load_catalog(
    weights_path: &Path,
    texts_path: &Path,
    year: i32,
) -> Result<DescriptorCatalog> {
    let rows = read_long_rows(weights_path)?;
    let texts = read_texts(texts_path)?;
    let mut clamped = 0usize;
    let occupations = rows.occupations.clone();
    let descriptors = rows.descriptors.clone();
    let mut catalog = assemble(
        year,
        rows,
        texts,
        CatalogMeta::default(),
        |i, j, v, line| {
            if !(-WEIGHT_TOLERANCE..=1.0 + WEIGHT_TOLERANCE).contains(&v) {
                return Err(CatalogError::OutOfRange {
                    line,
                    occupation: occupations[i].clone(),
                    descriptor: descriptors[j].clone(),
                    value: v,
                });
            }
            let c = v.clamp(0.0, 1.0);
            if c != v {
                clamped += 1;
            }
            Ok(c)
        },
    )?;
    catalog.meta.clamped_cells = clamped;
    Ok(catalog)
}

/// Loads a catalog of native-scale scores (e.g. a 1-5 importance scale) and
/// min-max scales each descriptor over the occupations that report it.
/// Constant columns map to 0. The bounds are kept in [`CatalogMeta::scaling`].
pub fn load_native_catalog(
    weights_path: &Path,
    texts_path: &Path,
    year: i32,
) -> Result<DescriptorCatalog> {
    let rows = read_long_rows(weights_path)?;
    let texts = read_texts(texts_path)?;
    let mut bounds = vec![
        ScaleBounds {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY
        };
        rows.descriptors.len()
    ];
    for (&(_, j), &(v, _)) in &rows.cells {
        bounds[j].min = bounds[j].min.min(v);
        bounds[j].max = bounds[j].max.max(v);
    }
    let meta = CatalogMeta {
        scaling: rows
            .descriptors
            .iter()
            .cloned()
            .zip(bounds.iter().copied())
            .filter(|(_, b)| b.min.is_finite())
            .collect(),
        ..CatalogMeta::default()
    };
    assemble(year, rows, texts, meta, |_, j, v, _| {
        let b = bounds[j];
        let span = b.max - b.min;
        Ok(if span > 0.0 {
            ((v - b.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        })
    })
}

/// Writes the catalog in the long weights format plus the texts file.
/// Numbers use the shortest representation that parses back to the same bits.
pub fn write_catalog(
    catalog: &DescriptorCatalog,
    weights_path: &Path,
    texts_path: &Path,
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(weights_path).map_err(|e| CatalogError::csv(weights_path, e))?;
    w.write_record(WEIGHTS_HEADER)
        .map_err(|e| CatalogError::csv(weights_path, e))?;
    for (i, occ) in catalog.occupations.iter().enumerate() {
        for (j, desc) in catalog.descriptors.iter().enumerate() {
            let value = catalog.weight(i, j).to_string();
            w.write_record([occ.as_str(), desc.as_str(), value.as_str()])
                .map_err(|e| CatalogError::csv(weights_path, e))?;
        }
    }
    w.flush().map_err(|e| CatalogError::io(weights_path, e))?;

    let mut t = csv::Writer::from_path(texts_path).map_err(|e| CatalogError::csv(texts_path, e))?;
    t.write_record(TEXTS_HEADER)
        .map_err(|e| CatalogError::csv(texts_path, e))?;
    for (id, text) in &catalog.texts {
        t.write_record([id.as_str(), text.as_str()])
            .map_err(|e| CatalogError::csv(texts_path, e))?;
    }
    t.flush().map_err(|e| CatalogError::io(texts_path, e))?;
    Ok(())
}
