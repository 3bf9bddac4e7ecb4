use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FlameError, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"FLMP";
pub const BINARY_VERSION: u16 = 1;
const GT_ABSENT: u8 = 255;

/// One proposal embedding of the unlabeled pool.
///
/// The ground-truth label is not reachable from here; see [`GroundTruth`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f32>,
    pub image_ref: Option<String>,
    pub meta: Option<BTreeMap<String, String>>,
    gt_label: Option<bool>,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, vector: Vec<f32>) -> Self {
        EmbeddingRecord {
            id: id.into(),
            vector,
            image_ref: None,
            meta: None,
            gt_label: None,
        }
    }

    pub fn with_ground_truth(mut self, label: Option<bool>) -> Self {
        self.gt_label = label;
        self
    }

    pub fn has_ground_truth(&self) -> bool {
        self.gt_label.is_some()
    }

    pub fn vector_f64(&self) -> Vec<f64> {
        self.vector.iter().map(|&v| v as f64).collect()
    }
}

/// Ground-truth labels of a pool, keyed by record id. Only evaluation and
/// the file oracle should construct this.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    labels: BTreeMap<String, bool>,
}

impl GroundTruth {
    pub fn from_pool(pool: &[EmbeddingRecord]) -> Self {
        GroundTruth {
            labels: pool
                .iter()
                .filter_map(|r| r.gt_label.map(|l| (r.id.clone(), l)))
                .collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<bool> {
        self.labels.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// True when every record of the pool has a label.
    pub fn covers(&self, pool: &[EmbeddingRecord]) -> bool {
        pool.iter().all(|r| self.labels.contains_key(&r.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolFormat {
    Json,
    Binary,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    vector: Vec<f32>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "de_gt"
    )]
    gt: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<BTreeMap<String, String>>,
}

// Accepts true/false, 0/1 or null.
fn de_gt<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<bool>, D::Error> {
    use serde::de::Error;
    match Option::<serde_json::Value>::deserialize(d)? {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(serde_json::Value::Bool(b)) => Ok(Some(b)),
        Some(serde_json::Value::Number(n)) if n.as_u64() == Some(0) => Ok(Some(false)),
        Some(serde_json::Value::Number(n)) if n.as_u64() == Some(1) => Ok(Some(true)),
        Some(other) => Err(D::Error::custom(format!(
            "gt must be a boolean or 0/1, got {other}"
        ))),
    }
}

fn format_err(line: Option<usize>, message: impl Into<String>) -> FlameError {
    FlameError::Format {
        line,
        message: message.into(),
    }
}

/// Validates dimensions, ids and finiteness in file order.
fn validate(records: &[EmbeddingRecord]) -> Result<()> {
    let Some(first) = records.first() else {
        return Err(FlameError::EmptyPool);
    };
    let dim = first.vector.len();
    if dim == 0 {
        return Err(FlameError::DegenerateVector(format!(
            "record {} has an empty vector",
            first.id
        )));
    }
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(FlameError::DuplicateId(r.id.clone()));
        }
        if r.vector.len() != dim {
            return Err(format_err(
                None,
                format!(
                    "dimension mismatch: record {} has {}, expected {dim}",
                    r.id,
                    r.vector.len()
                ),
            ));
        }
        if let Some(k) = r.vector.iter().position(|v| !v.is_finite()) {
            return Err(FlameError::NonFinite(format!(
                "record {} component {k} is {}",
                r.id, r.vector[k]
            )));
        }
    }
    Ok(())
}

/// Loads a pool, detecting the binary format by its magic bytes.
pub fn load_pool(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let mut file = BufReader::new(File::open(path)?);
    let head = file.fill_buf()?;
    let records = if head.starts_with(BINARY_MAGIC) {
        read_binary(file)?
    } else {
        read_jsonl(file)?
    };
    validate(&records)?;
    Ok(records)
}

fn read_jsonl(reader: impl BufRead) -> Result<Vec<EmbeddingRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonRecord =
            serde_json::from_str(&line).map_err(|e| format_err(Some(i + 1), e.to_string()))?;
        out.push(EmbeddingRecord {
            id: raw.id,
            vector: raw.vector,
            image_ref: raw.image_ref,
            meta: raw.meta,
            gt_label: raw.gt,
        });
    }
    Ok(out)
}

fn read_exact<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| format_err(None, format!("truncated binary pool while reading {what}")))?;
    Ok(buf)
}

fn read_binary(mut r: impl Read) -> Result<Vec<EmbeddingRecord>> {
    read_exact::<4>(&mut r, "magic")?;
    let version = u16::from_le_bytes(read_exact(&mut r, "version")?);
    if version != BINARY_VERSION {
        return Err(format_err(
            None,
            format!("unsupported binary pool version {version}"),
        ));
    }
    let count = u64::from_le_bytes(read_exact(&mut r, "count")?);
    let dim = u32::from_le_bytes(read_exact(&mut r, "dim")?) as usize;

    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    for n in 0..count {
        let len = u32::from_le_bytes(read_exact(&mut r, "id length")?) as usize;
        let mut id = vec![0u8; len];
        r.read_exact(&mut id)
            .map_err(|_| format_err(None, format!("truncated id of record {n}")))?;
        let id = String::from_utf8(id)
            .map_err(|_| format_err(None, format!("id of record {n} is not UTF-8")))?;
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(f32::from_le_bytes(read_exact(&mut r, "vector")?));
        }
        let gt_label = match read_exact::<1>(&mut r, "gt")?[0] {
            0 => Some(false),
            1 => Some(true),
            GT_ABSENT => None,
            b => {
                return Err(format_err(
                    None,
                    format!("record {id} has invalid gt byte {b}"),
                ))
            }
        };
        out.push(EmbeddingRecord {
            id,
            vector,
            image_ref: None,
            meta: None,
            gt_label,
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(format_err(None, "trailing bytes after the last record"));
    }
    Ok(out)
}

/// Writes a pool. The binary format has no room for `image_ref` or `meta`;
/// they are dropped with a warning.
pub fn save_pool(path: &Path, records: &[EmbeddingRecord], format: PoolFormat) -> Result<()> {
    validate(records)?;
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        PoolFormat::Json => {
            for r in records {
                let raw = JsonRecord {
                    id: r.id.clone(),
                    vector: r.vector.clone(),
                    gt: r.gt_label,
                    image_ref: r.image_ref.clone(),
                    meta: r.meta.clone(),
                };
                serde_json::to_writer(&mut w, &raw)?;
                w.write_all(b"\n")?;
            }
        }
        PoolFormat::Binary => {
            let dropped = records
                .iter()
                .filter(|r| r.image_ref.is_some() || r.meta.is_some())
                .count();
            if dropped > 0 {
                log::warn!("binary pool format drops image_ref/meta of {dropped} records");
            }
            w.write_all(BINARY_MAGIC)?;
            w.write_all(&BINARY_VERSION.to_le_bytes())?;
            w.write_all(&(records.len() as u64).to_le_bytes())?;
            w.write_all(&(records[0].vector.len() as u32).to_le_bytes())?;
            for r in records {
                w.write_all(&(r.id.len() as u32).to_le_bytes())?;
                w.write_all(r.id.as_bytes())?;
                for v in &r.vector {
                    w.write_all(&v.to_le_bytes())?;
                }
                w.write_all(&[match r.gt_label {
                    Some(false) => 0,
                    Some(true) => 1,
                    None => GT_ABSENT,
                }])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QueryFile {
    Bare(Vec<f64>),
    Record { vector: Vec<f64> },
}

/// Loads a query embedding stored either as a bare JSON array or as an
/// object with a `vector` field.
pub fn load_query(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let q: QueryFile = serde_json::from_str(text.trim()).map_err(|e| {
        format_err(
            Some(e.line()),
            format!("query must be a JSON array or {{\"vector\": [...]}}: {e}"),
        )
    })?;
    let v = match q {
        QueryFile::Bare(v) | QueryFile::Record { vector: v } => v,
    };
    if v.is_empty() {
        return Err(FlameError::DegenerateVector("query vector is empty".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FlameError::NonFinite("query vector".into()));
    }
    Ok(v)
}

pub fn save_query(path: &Path, query: &[f64]) -> Result<()> {
    std::fs::write(
        path,
        serde_json::to_string(&serde_json::json!({ "vector": query }))? + "\n",
    )?;
    Ok(())
}
