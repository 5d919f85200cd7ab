//! Occupation vectors, the age-friendliness embedding and AFI scores.
//!
//! An occupation's vector is the weighted sum of its descriptor embeddings,
//! rescaled to unit length. The age-friendliness embedding is the
//! preference-weighted sum of the amenity embeddings, also rescaled. The AFI
//! of an occupation is the dot product of the two, i.e. their cosine.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{AmenitySpec, DescriptorCatalog};
use crate::embedder::{l2_norm, EmbeddingMatrix};

/// Raw cosines this far outside `[-1, 1]` are clamped; anything further is a bug.
pub const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("descriptor `{0}` has no embedding")]
    MissingEmbedding(String),
    #[error("embedding row `{0}` does not correspond to any catalog entry")]
    UnexpectedEmbedding(String),
    #[error("occupation `{0}` has no positive weight")]
    ZeroWeights(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("amenity embeddings are not aligned with the spec: expected `{expected}` at row {row}, found `{found}`")]
    AmenityOrder {
        row: usize,
        expected: String,
        found: String,
    },
    #[error("weighted amenity sum is the zero vector")]
    ZeroEmbedding,
    #[error("{0}")]
    Embedding(#[from] crate::embedder::EmbedError),
    #[error("score {value} for `{id}` is outside [-1, 1]")]
    OutOfRange { id: String, value: f64 },
    #[error("AFI table is empty")]
    EmptyTable,
    #[error("AFI file line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = IndexError> = std::result::Result<T, E>;

/// Unit-norm occupation vectors for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationVectors {
    year: i32,
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl OccupationVectors {
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Builds one unit vector per occupation from `catalog` weights and descriptor
/// embeddings. Descriptor contributions are summed in ascending descriptor-id
/// order, so the result does not depend on how rows are scheduled.
pub fn build_occupation_vectors(
    catalog: &DescriptorCatalog,
    descriptors: &EmbeddingMatrix,
) -> Result<OccupationVectors> {
    descriptors.check_unit_norm()?;
    let rows: Vec<&[f64]> = catalog
        .descriptors()
        .iter()
        .map(|id| {
            descriptors
                .get(id)
                .ok_or_else(|| IndexError::MissingEmbedding(id.clone()))
        })
        .collect::<Result<_>>()?;
    if descriptors.len() != rows.len() {
        let extra = descriptors
            .ids()
            .iter()
            .find(|id| catalog.descriptor_index(id).is_none())
            .cloned()
            .unwrap_or_default();
        return Err(IndexError::UnexpectedEmbedding(extra));
    }
    let dim = descriptors.dim();
    let vectors: Vec<Vec<f64>> = (0..catalog.n_occupations())
        .into_par_iter()
        .map(|i| {
            let weights = catalog.row(i);
            if !weights.iter().any(|&w| w > 0.0) {
                return Err(IndexError::ZeroWeights(catalog.occupations()[i].clone()));
            }
            let mut acc = vec![0.0; dim];
            for (w, d) in weights.iter().zip(&rows) {
                if *w != 0.0 {
                    for (a, v) in acc.iter_mut().zip(d.iter()) {
                        *a += w * v;
                    }
                }
            }
            let norm = l2_norm(&acc);
            if norm == 0.0 {
                return Err(IndexError::ZeroWeights(catalog.occupations()[i].clone()));
            }
            acc.iter_mut().for_each(|a| *a /= norm);
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(OccupationVectors {
        year: catalog.year(),
        ids: catalog.occupations().to_vec(),
        dim,
        data: vectors.concat(),
    })
}

/// How the two amenity weight sets combine into one weight per amenity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Absolute,
    Relative,
    #[default]
    Average,
}

impl WeightMode {
    pub fn combine(self, absolute: f64, relative: f64) -> f64 {
        match self {
            Self::Absolute => absolute,
            Self::Relative => relative,
            Self::Average => (absolute + relative) / 2.0,
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Absolute => "absolute",
            Self::Relative => "relative",
            Self::Average => "average",
        })
    }
}

impl FromStr for WeightMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "absolute" => Ok(Self::Absolute),
            "relative" => Ok(Self::Relative),
            "average" => Ok(Self::Average),
            other => Err(format!(
                "unknown weight mode `{other}` (absolute|relative|average)"
            )),
        }
    }
}

/// Unit-norm target vector plus the amenity weights that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeFriendlinessEmbedding {
    pub vector: Vec<f64>,
    pub weights: Vec<f64>,
    pub mode: WeightMode,
}

/// Combines amenity embeddings (rows in spec order) with the weights selected
/// by `mode`. The weights are used as given; only the sum is normalized.
pub fn build_age_embedding(
    amenities: &AmenitySpec,
    embeddings: &EmbeddingMatrix,
    mode: WeightMode,
) -> Result<AgeFriendlinessEmbedding> {
    embeddings.check_unit_norm()?;
    if embeddings.len() != amenities.len() {
        return Err(IndexError::AmenityOrder {
            row: embeddings.len().min(amenities.len()),
            expected: amenities
                .amenities()
                .get(embeddings.len())
                .map(|a| a.name.clone())
                .unwrap_or_default(),
            found: embeddings
                .ids()
                .get(amenities.len())
                .cloned()
                .unwrap_or_default(),
        });
    }
    for (row, (a, id)) in amenities
        .amenities()
        .iter()
        .zip(embeddings.ids())
        .enumerate()
    {
        if &a.name != id {
            return Err(IndexError::AmenityOrder {
                row,
                expected: a.name.clone(),
                found: id.clone(),
            });
        }
    }
    let weights: Vec<f64> = amenities
        .amenities()
        .iter()
        .map(|a| mode.combine(a.weight_absolute, a.weight_relative))
        .collect();
    let mut acc = vec![0.0; embeddings.dim()];
    for (k, w) in weights.iter().enumerate() {
        for (a, v) in acc.iter_mut().zip(embeddings.row(k)) {
            *a += w * v;
        }
    }
    let norm = l2_norm(&acc);
    // cancellation leaves rounding dust rather than an exact zero
    let scale = weights.iter().map(|w| w.abs()).sum::<f64>();
    if norm == 0.0 || norm <= 1e-12 * scale {
        return Err(IndexError::ZeroEmbedding);
    }
    acc.iter_mut().for_each(|a| *a /= norm);
    Ok(AgeFriendlinessEmbedding {
        vector: acc,
        weights,
        mode,
    })
}

/// Per-occupation AFI for one year, ordered by occupation id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfiTable {
    pub year: i32,
    /// Weight mode of the embedding that produced the scores, when known.
    pub mode: Option<WeightMode>,
    values: BTreeMap<String, f64>,
}

impl AfiTable {
    pub fn new(year: i32, mode: Option<WeightMode>, values: BTreeMap<String, f64>) -> Result<Self> {
        for (id, &v) in &values {
            if !(-1.0..=1.0).contains(&v) {
                return Err(IndexError::OutOfRange {
                    id: id.clone(),
                    value: v,
                });
            }
        }
        Ok(Self { year, mode, values })
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same scores restricted to `ids`.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Self {
        let values = ids
            .into_iter()
            .filter_map(|id| self.values.get_key_value(id).map(|(k, v)| (k.clone(), *v)))
            .collect();
        Self {
            year: self.year,
            mode: self.mode,
            values,
        }
    }
}

/// Cosine of each occupation vector with the target, clamped to `[-1, 1]`.
pub fn score_afi(
    vectors: &OccupationVectors,
    target: &AgeFriendlinessEmbedding,
) -> Result<AfiTable> {
    if vectors.dim != target.vector.len() {
        return Err(IndexError::DimensionMismatch {
            left: vectors.dim,
            right: target.vector.len(),
        });
    }
    let mut values = BTreeMap::new();
    for (i, id) in vectors.ids.iter().enumerate() {
        let dot: f64 = vectors
            .row(i)
            .iter()
            .zip(&target.vector)
            .map(|(a, b)| a * b)
            .sum();
        if dot.abs() > 1.0 + RANGE_SLACK {
            return Err(IndexError::OutOfRange {
                id: id.clone(),
                value: dot,
            });
        }
        values.insert(id.clone(), dot.clamp(-1.0, 1.0));
    }
    AfiTable::new(vectors.year, Some(target.mode), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Descending,
    Ascending,
}

/// Sorted `(id, afi)` pairs; ties go to the smaller occupation id.
pub fn rank_occupations(afi: &AfiTable, direction: Direction) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = afi.values.iter().map(|(k, v)| (k.clone(), *v)).collect();
    out.sort_by(|a, b| {
        let by_value = match direction {
            Direction::Descending => b.1.total_cmp(&a.1),
            Direction::Ascending => a.1.total_cmp(&b.1),
        };
        by_value.then_with(|| a.0.cmp(&b.0))
    });
    out
}

/// Occupation ids with their AFI, in ranking order.
pub type Ranking = Vec<(String, f64)>;

/// First and last `k` of the descending ranking.
pub fn top_bottom(afi: &AfiTable, k: usize) -> (Ranking, Ranking) {
    let ranked = rank_occupations(afi, Direction::Descending);
    let k = k.min(ranked.len());
    let bottom = ranked[ranked.len() - k..].to_vec();
    let mut top = ranked;
    top.truncate(k);
    (top, bottom)
}

/// Writes `year,occupation_id,afi` with 17 significant digits.
pub fn write_afi_csv(table: &AfiTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "occupation_id", "afi"])?;
    for (id, v) in &table.values {
        w.write_record([table.year.to_string(), id.clone(), format!("{v:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an AFI CSV. All rows must carry the same year.
pub fn read_afi_csv(input: impl Read, mode: Option<WeightMode>) -> Result<AfiTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["year", "occupation_id", "afi"] {
        return Err(IndexError::Malformed {
            line: 1,
            reason: format!("unexpected header `{}`", header.join(",")),
        });
    }
    let mut year = None;
    let mut values = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| IndexError::Malformed { line, reason };
        if rec.len() != 3 {
            return Err(bad("expected 3 fields".into()));
        }
        let y: i32 = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad year `{}`", &rec[0])))?;
        if *year.get_or_insert(y) != y {
            return Err(bad(format!("mixed years {} and {y}", year.unwrap_or(y))));
        }
        let v: f64 = rec[2]
            .parse()
            .map_err(|_| bad(format!("bad afi `{}`", &rec[2])))?;
        if values.insert(rec[1].to_string(), v).is_some() {
            return Err(bad(format!("duplicate occupation `{}`", &rec[1])));
        }
    }
    let year = year.ok_or(IndexError::EmptyTable)?;
    AfiTable::new(year, mode, values)
}

pub fn write_afi_file(table: &AfiTable, path: &Path) -> Result<()> {
    write_afi_csv(table, std::fs::File::create(path)?)
}

pub fn read_afi_file(path: &Path, mode: Option<WeightMode>) -> Result<AfiTable> {
    read_afi_csv(std::fs::File::open(path)?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Amenity;

    fn texts(ids: &[&str]) -> BTreeMap<String, String> {
        ids.iter()
            .map(|id| (id.to_string(), format!("text {id}")))
            .collect()
    }

    fn emb(ids: &[&str], rows: Vec<Vec<f64>>) -> EmbeddingMatrix {
        let dim = rows[0].len();
        EmbeddingMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            dim,
            rows,
            "test",
        )
        .unwrap()
    }

    fn catalog(occs: &[&str], weights: Vec<Vec<f64>>) -> DescriptorCatalog {
        DescriptorCatalog::new(
            2020,
            occs.iter().map(|s| s.to_string()).collect(),
            vec!["d1".into(), "d2".into()],
            weights,
            texts(&["d1", "d2"]),
        )
        .unwrap()
    }

    fn amenity(name: &str, abs: f64, rel: f64) -> Amenity {
        Amenity {
            name: name.into(),
            definition: format!("about {name}"),
            weight_absolute: abs,
            weight_relative: rel,
        }
    }

    #[test]
    fn identity_weights_reproduce_descriptor_rows() {
        let s = 0.5f64.sqrt();
        let d = emb(&["d1", "d2"], vec![vec![0.6, 0.8, 0.0], vec![0.0, s, s]]);
        let v = build_occupation_vectors(
            &catalog(&["a", "b"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            &d,
        )
        .unwrap();
        assert_eq!(v.row(0), d.row(0));
        assert_eq!(v.row(1), d.row(1));
    }

    #[test]
    fn equal_weights_give_normalized_midpoint() {
        let d = emb(&["d1", "d2"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = build_occupation_vectors(&catalog(&["a"], vec![vec![0.5, 0.5]]), &d).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((v.row(0)[0] - h).abs() < 1e-15 && (v.row(0)[1] - h).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_row_is_named() {
        let d = emb(&["d1", "d2"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let err = build_occupation_vectors(
            &catalog(&["a", "idle"], vec![vec![0.5, 0.5], vec![0.0, 0.0]]),
            &d,
        )
        .unwrap_err();
        assert!(matches!(err, IndexError::ZeroWeights(id) if id == "idle"));
    }

    #[test]
    fn id_mismatch_rejected() {
        let d = emb(&["d1", "dx"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let err = build_occupation_vectors(&catalog(&["a"], vec![vec![0.5, 0.5]]), &d).unwrap_err();
        assert!(matches!(err, IndexError::MissingEmbedding(id) if id == "d2"));
        let d = emb(
            &["d1", "d2", "d3"],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        );
        let err = build_occupation_vectors(&catalog(&["a"], vec![vec![0.5, 0.5]]), &d).unwrap_err();
        assert!(matches!(err, IndexError::UnexpectedEmbedding(id) if id == "d3"));
    }

    #[test]
    fn single_amenity_sign_applied() {
        let spec = AmenitySpec::new(vec![amenity("pace", -2.0, -1.0)]).unwrap();
        let e = emb(&["pace"], vec![vec![0.6, 0.8]]);
        let d0 = build_age_embedding(&spec, &e, WeightMode::Average).unwrap();
        assert!((d0.vector[0] + 0.6).abs() < 1e-15 && (d0.vector[1] + 0.8).abs() < 1e-15);
        assert_eq!(d0.weights, vec![-1.5]);
    }

    #[test]
    fn orthogonal_amenities_average_weights() {
        let spec = AmenitySpec::new(vec![amenity("a", 1.5, 0.5), amenity("b", 0.5, 1.5)]).unwrap();
        let e = emb(&["a", "b"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let d0 = build_age_embedding(&spec, &e, WeightMode::Average).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((d0.vector[0] - h).abs() < 1e-15 && (d0.vector[1] - h).abs() < 1e-15);
        let abs = build_age_embedding(&spec, &e, WeightMode::Absolute).unwrap();
        assert!(abs.vector[0] > abs.vector[1]);
    }

    #[test]
    fn cancelling_weights_rejected() {
        let spec =
            AmenitySpec::new(vec![amenity("a", 1.0, 1.0), amenity("b", -1.0, -1.0)]).unwrap();
        let e = emb(&["a", "b"], vec![vec![0.6, 0.8], vec![0.6, 0.8]]);
        assert!(matches!(
            build_age_embedding(&spec, &e, WeightMode::Average),
            Err(IndexError::ZeroEmbedding)
        ));
    }

    #[test]
    fn amenity_rows_must_follow_spec_order() {
        let spec = AmenitySpec::new(vec![amenity("a", 1.0, 1.0), amenity("b", 1.0, 1.0)]).unwrap();
        let e = emb(&["b", "a"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            build_age_embedding(&spec, &e, WeightMode::Average),
            Err(IndexError::AmenityOrder { row: 0, .. })
        ));
    }

    #[test]
    fn self_and_orthogonal_scores() {
        let d = emb(&["d1", "d2"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = build_occupation_vectors(
            &catalog(&["a", "b"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            &d,
        )
        .unwrap();
        let target = AgeFriendlinessEmbedding {
            vector: vec![1.0, 0.0],
            weights: vec![1.0],
            mode: WeightMode::Average,
        };
        let afi = score_afi(&v, &target).unwrap();
        assert_eq!(afi.get("a"), Some(1.0));
        assert_eq!(afi.get("b"), Some(0.0));
        assert_eq!(afi.mode, Some(WeightMode::Average));

        let bad = AgeFriendlinessEmbedding {
            vector: vec![1.0, 0.0, 0.0],
            ..target
        };
        assert!(matches!(
            score_afi(&v, &bad),
            Err(IndexError::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    fn table(pairs: &[(&str, f64)]) -> AfiTable {
        AfiTable::new(
            2020,
            None,
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn ranking_descends_with_id_ties() {
        let t = table(&[("c", 0.2), ("a", 0.9), ("b", 0.5)]);
        let r: Vec<f64> = rank_occupations(&t, Direction::Descending)
            .into_iter()
            .map(|p| p.1)
            .collect();
        assert_eq!(r, [0.9, 0.5, 0.2]);
        let t = table(&[("z", 0.5), ("m", 0.5), ("a", 0.1)]);
        let ids: Vec<String> = rank_occupations(&t, Direction::Descending)
            .into_iter()
            .map(|p| p.0)
            .collect();
        assert_eq!(ids, ["m", "z", "a"]);
        let ids: Vec<String> = rank_occupations(&t, Direction::Ascending)
            .into_iter()
            .map(|p| p.0)
            .collect();
        assert_eq!(ids, ["a", "m", "z"]);
    }

    #[test]
    fn top_and_bottom_ten_of_thirty() {
        let pairs: Vec<(String, f64)> = (0..30)
            .map(|k| (format!("o{k:02}"), (k as f64) / 30.0 - 0.5))
            .collect();
        let t = AfiTable::new(2020, None, pairs.iter().cloned().collect()).unwrap();
        let ranked = rank_occupations(&t, Direction::Descending);
        let (top, bottom) = top_bottom(&t, 10);
        assert_eq!(top, ranked[..10]);
        assert_eq!(bottom, ranked[20..]);
        assert_eq!(top[0].0, "o29");
        assert_eq!(bottom[9].0, "o00");
    }

    #[test]
    fn csv_round_trip() {
        let t = table(&[("a", 0.1 + 0.2), ("b", -1.0 / 3.0), ("c", 1.0)]);
        let mut buf = Vec::new();
        write_afi_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("2020,a,3.0000000000000004e-1"), "{text}");
        let back = read_afi_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back, t);
    }
}
