//! Distributional vectors: loading, cosine similarity, prototypes and thematic fit.

use std::io::BufRead;
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("vectors of dimension {0} and {1} cannot be compared")]
    IncompatibleDims(usize, usize),
    #[error("zero vector{}", .0.as_ref().map(|w| format!(" for `{w}`")).unwrap_or_default())]
    ZeroVector(Option<String>),
    #[error("`{0}` has no vector")]
    OutOfVocabulary(String),
    #[error("prototype needs at least one filler")]
    EmptyFillerList,
    #[error("filler `{word}` has weight {weight}; weights must be positive")]
    InvalidWeight { word: String, weight: f64 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Scales `v` to unit length.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>, VectorError> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(VectorError::ZeroVector(None));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, VectorError> {
    if u.len() != v.len() {
        return Err(VectorError::IncompatibleDims(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(VectorError::ZeroVector(None));
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Unit vectors keyed by lowercased word, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorStore {
    dim: usize,
    entries: IndexMap<String, Vec<f64>>,
}

impl VectorStore {
    /// Reads the plain-text `<count> <dim>` format.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, VectorError> {
        let mut lines = reader.lines().enumerate();
        let io = |e: std::io::Error| VectorError::Io { path: "<input>".into(), source: e };
        let (count, dim) = match lines.next() {
            None => return Err(VectorError::Format { line: 1, reason: "missing `<count> <dim>` header".into() }),
            Some((_, header)) => {
                let header = header.map_err(io)?;
                let fields: Vec<&str> = clean(&header).split(' ').collect();
                let parsed: Vec<usize> = fields.iter().filter_map(|f| f.parse().ok()).collect();
                if fields.len() != 2 || parsed.len() != 2 {
                    return Err(VectorError::Format { line: 1, reason: format!("bad header `{header}`") });
                }
                if parsed[1] == 0 {
                    return Err(VectorError::Format { line: 1, reason: "dimension must be positive".into() });
                }
                (parsed[0], parsed[1])
            }
        };

        let mut store = VectorStore { dim, entries: IndexMap::with_capacity(count) };
        let mut blank_at = None;
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(io)?;
            let line = clean(&line);
            if line.is_empty() {
                blank_at.get_or_insert(lineno);
                continue;
            }
            if let Some(b) = blank_at {
                return Err(VectorError::Format { line: b, reason: "blank line inside the vector table".into() });
            }
            let mut fields = line.split(' ');
            let word = fields.next().unwrap_or_default();
            let values: Vec<&str> = fields.collect();
            if word.is_empty() || values.iter().any(|f| f.is_empty()) {
                return Err(VectorError::Format {
                    line: lineno,
                    reason: "fields must be separated by single spaces".into(),
                });
            }
            if values.len() != dim {
                return Err(VectorError::DimensionMismatch { line: lineno, expected: dim, found: values.len() });
            }
            let mut raw = Vec::with_capacity(dim);
            for f in values {
                match f.parse::<f64>() {
                    Ok(x) if x.is_finite() => raw.push(x),
                    _ => {
                        return Err(VectorError::Format {
                            line: lineno,
                            reason: format!("`{f}` is not a decimal number"),
                        })
                    }
                }
            }
            let unit = normalize(&raw)
                .map_err(|_| VectorError::Format { line: lineno, reason: format!("`{word}` has a zero vector") })?;
            let key = word.to_lowercase();
            if store.entries.contains_key(&key) {
                return Err(VectorError::Format { line: lineno, reason: format!("duplicate word `{word}`") });
            }
            store.entries.insert(key, unit);
        }
        if store.entries.len() != count {
            return Err(VectorError::Format {
                line: 1,
                reason: format!("header announces {count} vectors, file has {}", store.entries.len()),
            });
        }
        Ok(store)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, VectorError> {
        let path = path.as_ref();
        let file =
            std::fs::File::open(path).map_err(|e| VectorError::Io { path: path.display().to_string(), source: e })?;
        Self::load(std::io::BufReader::new(file))
    }

    pub fn parse_str(text: &str) -> Result<Self, VectorError> {
        Self::load(text.as_bytes())
    }

    /// Builds a store from in-memory rows (normalized here).
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self, VectorError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut text = String::new();
        let mut n = 0;
        let mut body = String::new();
        for (word, values) in rows {
            n += 1;
            body.push_str(word.as_ref());
            for v in values {
                body.push(' ');
                body.push_str(&format!("{v:?}"));
            }
            body.push('\n');
        }
        text.push_str(&format!("{n} {dim}\n"));
        text.push_str(&body);
        Self::parse_str(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    /// Unit vector for `word`, case-folded.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        match self.entries.get(word) {
            Some(v) => Some(v),
            None => self.entries.get(&word.to_lowercase()).map(Vec::as_slice),
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Cosine of two stored words; `None` if either is missing.
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        let (u, v) = (self.get(a)?, self.get(b)?);
        Some(dot(u, v).clamp(-1.0, 1.0))
    }
}

fn clean(line: &str) -> &str {
    line.trim_end_matches(['\r', ' '])
}

/// Weighted centroid of normalized filler vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Prototype {
    pub vector: Vec<f64>,
    pub source_fillers: Vec<(String, f64)>,
}

pub fn build_prototype<S: AsRef<str>>(fillers: &[(S, f64)], vs: &VectorStore) -> Result<Prototype, VectorError> {
    if fillers.is_empty() {
        return Err(VectorError::EmptyFillerList);
    }
    let mut sum = vec![0.0; vs.dim()];
    let mut total = 0.0;
    let mut sources = Vec::with_capacity(fillers.len());
    for (word, weight) in fillers {
        let word = word.as_ref();
        if !(*weight > 0.0 && weight.is_finite()) {
            return Err(VectorError::InvalidWeight { word: word.to_string(), weight: *weight });
        }
        let v = vs.get(word).ok_or_else(|| VectorError::OutOfVocabulary(word.to_string()))?;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += weight * x;
        }
        total += weight;
        sources.push((word.to_lowercase(), *weight));
    }
    Ok(Prototype { vector: sum.into_iter().map(|s| s / total).collect(), source_fillers: sources })
}

pub fn thematic_fit(word: &str, proto: &Prototype, vs: &VectorStore) -> Result<f64, VectorError> {
    let v = vs.get(word).ok_or_else(|| VectorError::OutOfVocabulary(word.to_string()))?;
    cosine(v, &proto.vector)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_rows() {
        let vs = VectorStore::parse_str("2 3\nbook 1 0 0\nmagazine 0 1 0\n").unwrap();
        assert_eq!((vs.len(), vs.dim()), (2, 3));
        assert_eq!(vs.get("Book"), Some(&[1.0, 0.0, 0.0][..]));
    }

    #[test]
    fn short_row_is_a_dimension_mismatch() {
        let err = VectorStore::parse_str("2 3\nbook 1 0 0\nmagazine 0 1\n").unwrap_err();
        assert!(matches!(err, VectorError::DimensionMismatch { line: 3, expected: 3, found: 2 }));
    }

    #[test]
    fn duplicate_word_is_named() {
        let err = VectorStore::parse_str("2 2\nbook 1 0\nbook 0 1\n").unwrap_err();
        assert!(err.to_string().contains("`book`"), "{err}");
    }

    #[test]
    fn count_and_zero_rows_are_checked() {
        assert!(VectorStore::parse_str("3 2\nbook 1 0\n").is_err());
        assert!(VectorStore::parse_str("1 2\nbook 0 0\n").is_err());
        assert!(VectorStore::parse_str("1 2\nbook  1 0\n").is_err());
        assert!(VectorStore::parse_str("1 2\r\nbook 1 0\r\n").is_ok());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        assert!((cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.974631846).abs() < 1e-9);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(VectorError::ZeroVector(_))));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(VectorError::IncompatibleDims(1, 2))));
    }

    #[test]
    fn prototype_errors() {
        let vs = VectorStore::parse_str("1 2\nbook 1 0\n").unwrap();
        let empty: [(&str, f64); 0] = [];
        assert!(matches!(build_prototype(&empty, &vs), Err(VectorError::EmptyFillerList)));
        assert!(matches!(build_prototype(&[("cat", 1.0)], &vs), Err(VectorError::OutOfVocabulary(w)) if w == "cat"));
        assert!(matches!(build_prototype(&[("book", 0.0)], &vs), Err(VectorError::InvalidWeight { .. })));
    }

    #[test]
    fn singleton_prototype_fits_perfectly() {
        let vs = VectorStore::parse_str("2 2\nstudent 3 4\nrock 4 -3\n").unwrap();
        let p = build_prototype(&[("student", 1.0)], &vs).unwrap();
        assert_eq!(p.vector, vec![0.6, 0.8]);
        assert!((thematic_fit("student", &p, &vs).unwrap() - 1.0).abs() < 1e-12);
        assert!(thematic_fit("rock", &p, &vs).unwrap().abs() < 1e-12);
    }
}
