//! Text embeddings: the provider contract, a deterministic built-in embedder
//! and the JSON-lines exchange format.
//!
//! Every matrix handed to the index is row-normalized here, so downstream
//! dot products are cosine similarities.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows must have Euclidean norm within this distance of 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("text `{0}` has no tokens")]
    NoTokens(String),
    #[error("embedding dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: expected {expected} values, found {got}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("duplicate id `{id}` (line {line})")]
    DuplicateId { line: usize, id: String },
    #[error("row `{0}` is the zero vector")]
    ZeroVector(String),
    #[error("row `{0}` contains a non-finite value")]
    NonFinite(String),
    #[error("row `{id}` has norm {norm}, expected 1")]
    NotNormalized { id: String, norm: f64 },
    #[error("provider failure: {0}")]
    Provider(String),
}

pub type Result<T, E = EmbedError> = std::result::Result<T, E>;

/// Dense matrix of text embeddings, one row per id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    provider: String,
}

impl EmbeddingMatrix {
    /// `line` numbers in errors are 1-based row positions; the exchange reader
    /// reports file lines instead.
    pub fn new(
        ids: Vec<String>,
        dim: usize,
        rows: Vec<Vec<f64>>,
        provider: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(EmbedError::BadDimension(dim));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        let mut data = Vec::with_capacity(ids.len() * dim);
        if rows.len() != ids.len() {
            return Err(EmbedError::Provider(format!(
                "{} rows for {} ids",
                rows.len(),
                ids.len()
            )));
        }
        for (k, (id, row)) in ids.iter().zip(&rows).enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(EmbedError::DuplicateId {
                    line: k + 1,
                    id: id.clone(),
                });
            }
            if row.len() != dim {
                return Err(EmbedError::DimensionMismatch {
                    line: k + 1,
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::NonFinite(id.clone()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            ids,
            dim,
            data,
            provider: provider.into(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.row(i))
    }

    /// Rescales rows whose norm is off by more than `1e-12`; rows already at
    /// unit norm keep their exact bits. Zero rows are rejected.
    pub fn normalized(mut self) -> Result<Self> {
        for i in 0..self.ids.len() {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            let norm = l2_norm(row);
            if norm == 0.0 {
                return Err(EmbedError::ZeroVector(self.ids[i].clone()));
            }
            if (norm - 1.0).abs() > 1e-12 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Ok(self)
    }

    pub fn check_unit_norm(&self) -> Result<()> {
        for i in 0..self.ids.len() {
            let norm = l2_norm(self.row(i));
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(EmbedError::NotNormalized {
                    id: self.ids[i].clone(),
                    norm,
                });
            }
        }
        Ok(())
    }

    pub fn is_unit_norm(&self) -> bool {
        self.check_unit_norm().is_ok()
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Something that turns texts into vectors. Rows come back in input order.
pub trait EmbeddingProvider {
    /// Recorded in exchange headers and output metadata.
    fn name(&self) -> String;

    fn embed_batch(&self, items: &[(String, String)]) -> Result<Vec<Vec<f64>>>;
}

/// Embeds `items` (`(id, text)` pairs) and unit-normalizes every row.
pub fn embed_texts(
    items: &[(String, String)],
    provider: &dyn EmbeddingProvider,
) -> Result<EmbeddingMatrix> {
    for (id, text) in items {
        if text.trim().is_empty() {
            return Err(EmbedError::NoTokens(id.clone()));
        }
    }
    let rows = provider.embed_batch(items)?;
    if rows.len() != items.len() {
        return Err(EmbedError::Provider(format!(
            "{} vectors returned for {} texts",
            rows.len(),
            items.len()
        )));
    }
    let dim = rows.first().map_or(2, Vec::len);
    let ids = items.iter().map(|(id, _)| id.clone()).collect();
    EmbeddingMatrix::new(ids, dim, rows, provider.name())?.normalized()
}

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// The splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on `[-1, 1)` from the top 53 bits.
    pub fn next_signed_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Deterministic bag-of-tokens embedding: each token's FNV-1a hash seeds a
/// splitmix64 stream of `dim` values in `[-1, 1)`; token vectors are averaged
/// in token order and the mean is unit-normalized.
pub fn builtin_embed(text: &str, dim: usize) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(EmbedError::BadDimension(dim));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(EmbedError::NoTokens(text.to_string()));
    }
    let mut sum = vec![0.0; dim];
    for tok in &tokens {
        let mut rng = SplitMix64::new(fnv1a64(tok.as_bytes()));
        for s in sum.iter_mut() {
            *s += rng.next_signed_unit();
        }
    }
    let count = tokens.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / count).collect();
    let norm = l2_norm(&mean);
    if norm == 0.0 {
        return Err(EmbedError::ZeroVector(text.to_string()));
    }
    Ok(mean.into_iter().map(|v| v / norm).collect())
}

/// Offline provider backed by [`builtin_embed`].
#[derive(Debug, Clone, Copy)]
pub struct BuiltinEmbedder {
    pub dim: usize,
}

impl EmbeddingProvider for BuiltinEmbedder {
    fn name(&self) -> String {
        format!("builtin-fnv1a-splitmix64/{}", self.dim)
    }

    fn embed_batch(&self, items: &[(String, String)]) -> Result<Vec<Vec<f64>>> {
        items
            .par_iter()
            .map(|(_, text)| builtin_embed(text, self.dim))
            .collect()
    }
}

/// External process speaking the JSON-lines protocol: `{"id", "text"}` lines on
/// stdin, an exchange-format stream on stdout.
#[derive(Debug, Clone)]
pub struct SubprocessProvider {
    pub program: String,
    pub args: Vec<String>,
}

impl SubprocessProvider {
    /// Splits a command line on whitespace.
    pub fn from_command_line(cmd: &str) -> Option<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(Self {
            program,
            args: parts.collect(),
        })
    }
}

#[derive(Serialize)]
struct ProviderInput<'a> {
    id: &'a str,
    text: &'a str,
}

impl EmbeddingProvider for SubprocessProvider {
    fn name(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn embed_batch(&self, items: &[(String, String)]) -> Result<Vec<Vec<f64>>> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EmbedError::Provider(format!("cannot start `{}`: {e}", self.program)))?;

        let mut input = String::new();
        for (id, text) in items {
            input.push_str(
                &serde_json::to_string(&ProviderInput { id, text }).expect("serializable"),
            );
            input.push('\n');
        }
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            let r = stdin.write_all(input.as_bytes());
            drop(stdin);
            r
        });
        let mut child_stderr = child.stderr.take().expect("piped stderr");
        let err_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            child_stderr.read_to_string(&mut buf).map(|_| buf)
        });
        let mut stdout = String::new();
        child
            .stdout
            .take()
            .expect("piped stdout")
            .read_to_string(&mut stdout)?;
        let status = child.wait()?;
        let stderr = err_reader
            .join()
            .map_err(|_| EmbedError::Provider("stderr reader panicked".into()))??;
        let write_result = writer
            .join()
            .map_err(|_| EmbedError::Provider("stdin writer panicked".into()))?;
        if !status.success() {
            return Err(EmbedError::Provider(format!(
                "`{}` exited with {status}: {}",
                self.name(),
                stderr.trim()
            )));
        }
        write_result?;

        let (_, matrix) = parse_exchange(stdout.as_bytes())?;
        let mut by_id: HashMap<&str, usize> = matrix
            .ids()
            .iter()
            .enumerate()
            .map(|(k, id)| (id.as_str(), k))
            .collect();
        let mut rows = Vec::with_capacity(items.len());
        for (id, _) in items {
            let k = by_id
                .remove(id.as_str())
                .ok_or_else(|| EmbedError::Provider(format!("no vector returned for `{id}`")))?;
            rows.push(matrix.row(k).to_vec());
        }
        if let Some(extra) = by_id.keys().next() {
            return Err(EmbedError::Provider(format!(
                "unexpected id `{extra}` in provider output"
            )));
        }
        Ok(rows)
    }
}

/// First line of an exchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeHeader {
    pub dim: usize,
    pub provider: String,
    pub normalized: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExchangeRow {
    id: String,
    v: Vec<f64>,
}

/// Parses an exchange stream. Line numbers in errors are 1-based file lines.
pub fn parse_exchange(reader: impl Read) -> Result<(ExchangeHeader, EmbeddingMatrix)> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header: ExchangeHeader = loop {
        match lines.next() {
            None => {
                return Err(EmbedError::Malformed {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
            Some((k, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| EmbedError::Malformed {
                    line: k + 1,
                    reason: format!("bad header: {e}"),
                })?;
            }
        }
    };
    if header.dim == 0 {
        return Err(EmbedError::BadDimension(0));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (k, line) in lines {
        let line = line?;
        let lineno = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: ExchangeRow = serde_json::from_str(&line).map_err(|e| EmbedError::Malformed {
            line: lineno,
            reason: e.to_string(),
        })?;
        if row.v.len() != header.dim {
            return Err(EmbedError::DimensionMismatch {
                line: lineno,
                expected: header.dim,
                got: row.v.len(),
            });
        }
        if !seen.insert(row.id.clone()) {
            return Err(EmbedError::DuplicateId {
                line: lineno,
                id: row.id,
            });
        }
        ids.push(row.id);
        rows.push(row.v);
    }
    let matrix = EmbeddingMatrix::new(ids, header.dim, rows, header.provider.clone())?;
    Ok((header, matrix))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    parse_exchange(File::open(path)?).map(|(_, m)| m)
}

/// Writes a matrix in the exchange format. Values are printed in their
/// shortest round-trip form, so reading the file back is exact.
pub fn write_exchange(matrix: &EmbeddingMatrix, mut out: impl Write) -> Result<()> {
    let header = ExchangeHeader {
        dim: matrix.dim,
        provider: matrix.provider.clone(),
        normalized: matrix.is_unit_norm(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for (i, id) in matrix.ids.iter().enumerate() {
        let row = ExchangeRow {
            id: id.clone(),
            v: matrix.row(i).to_vec(),
        };
        serde_json::to_writer(&mut out, &row).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_exchange(matrix, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (l2_norm(a) * l2_norm(b))
    }

    #[test]
    fn tokenizer_splits_and_lowercases() {
        assert_eq!(
            tokenize("Heavy-lifting, OUTDOORS!  x2"),
            ["heavy", "lifting", "outdoors", "x2"]
        );
        assert!(tokenize(" -- ").is_empty());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn splitmix_reference_values() {
        let mut g = SplitMix64::new(0);
        assert_eq!(g.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(g.next_u64(), 0x6e789e6aa1b965f4);
    }

    #[test]
    fn same_text_same_vector() {
        let a = builtin_embed("work", 32).unwrap();
        let b = builtin_embed("work", 32).unwrap();
        assert_eq!(a, b);
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn token_overlap_orders_similarity() {
        let base = builtin_embed("heavy lifting outdoors", 64).unwrap();
        let far = builtin_embed("office scheduling flexibility", 64).unwrap();
        let near = builtin_embed("heavy lifting work", 64).unwrap();
        assert!(cosine(&base, &far) < cosine(&base, &near));
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(matches!(builtin_embed("", 8), Err(EmbedError::NoTokens(_))));
        assert!(matches!(
            builtin_embed("...", 8),
            Err(EmbedError::NoTokens(_))
        ));
        assert!(matches!(
            builtin_embed("a", 1),
            Err(EmbedError::BadDimension(1))
        ));
    }

    struct FixedProvider(Vec<Vec<f64>>);

    impl EmbeddingProvider for FixedProvider {
        fn name(&self) -> String {
            "fixed".into()
        }
        fn embed_batch(&self, _items: &[(String, String)]) -> Result<Vec<Vec<f64>>> {
            Ok(self.0.clone())
        }
    }

    fn items(n: usize) -> Vec<(String, String)> {
        (0..n)
            .map(|k| (format!("t{k}"), format!("text {k}")))
            .collect()
    }

    #[test]
    fn embed_texts_normalizes_and_checks_dims() {
        let m = embed_texts(
            &items(2),
            &FixedProvider(vec![vec![3.0, 4.0], vec![0.0, 2.0]]),
        )
        .unwrap();
        assert_eq!(m.row(0), &[0.6, 0.8]);
        assert_eq!(m.row(1), &[0.0, 1.0]);
        assert_eq!(m.provider(), "fixed");

        let err =
            embed_texts(&items(2), &FixedProvider(vec![vec![1.0; 8], vec![1.0; 5]])).unwrap_err();
        assert!(matches!(
            err,
            EmbedError::DimensionMismatch {
                expected: 8,
                got: 5,
                ..
            }
        ));

        let err = embed_texts(&items(1), &FixedProvider(vec![vec![0.0; 4]])).unwrap_err();
        assert!(matches!(err, EmbedError::ZeroVector(_)));
    }

    #[test]
    fn identical_texts_identical_rows() {
        let items = vec![
            ("a".to_string(), "same text".to_string()),
            ("b".to_string(), "same text".to_string()),
        ];
        let m = embed_texts(&items, &BuiltinEmbedder { dim: 16 }).unwrap();
        assert_eq!(m.row(0), m.row(1));
    }

    #[test]
    fn exchange_round_trip_is_exact() {
        let rows = vec![
            vec![0.1, -0.2, 1.0 / 3.0, 1e-300],
            vec![f64::MAX, f64::MIN_POSITIVE, -0.0, 2.5],
            vec![0.30000000000000004, 7.0, -1e20, 0.125],
        ];
        let m = EmbeddingMatrix::new(vec!["x".into(), "y".into(), "z".into()], 4, rows, "test")
            .unwrap();
        let mut buf = Vec::new();
        write_exchange(&m, &mut buf).unwrap();
        let (header, back) = parse_exchange(buf.as_slice()).unwrap();
        assert_eq!(header.dim, 4);
        assert!(!header.normalized);
        for i in 0..3 {
            let a: Vec<u64> = m.row(i).iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.row(i).iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exchange_errors_carry_line_numbers() {
        let short = "{\"dim\":4,\"provider\":\"p\",\"normalized\":true}\n{\"id\":\"a\",\"v\":[1,0,0,0]}\n{\"id\":\"b\",\"v\":[1,0,0]}\n";
        assert!(matches!(
            parse_exchange(short.as_bytes()),
            Err(EmbedError::DimensionMismatch {
                line: 3,
                expected: 4,
                got: 3
            })
        ));
        let dup = "{\"dim\":2,\"provider\":\"p\",\"normalized\":true}\n{\"id\":\"a\",\"v\":[1,0]}\n{\"id\":\"a\",\"v\":[0,1]}\n";
        assert!(matches!(
            parse_exchange(dup.as_bytes()),
            Err(EmbedError::DuplicateId { line: 3, .. })
        ));
        let bad = "{\"dim\":2,\"provider\":\"p\",\"normalized\":true}\nnot json\n";
        assert!(matches!(
            parse_exchange(bad.as_bytes()),
            Err(EmbedError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse_exchange("".as_bytes()),
            Err(EmbedError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn header_only_stream_is_empty_matrix() {
        let (_, m) =
            parse_exchange("{\"dim\":3,\"provider\":\"p\",\"normalized\":true}\n".as_bytes())
                .unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn normalized_keeps_unit_rows_bitwise() {
        let v = builtin_embed("keep these bits", 8).unwrap();
        let m = EmbeddingMatrix::new(vec!["a".into()], 8, vec![v.clone()], "p")
            .unwrap()
            .normalized()
            .unwrap();
        assert_eq!(m.row(0), v.as_slice());
    }
}
