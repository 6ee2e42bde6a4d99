//! Multi-label comment datasets: schemas, loading, validation, statistics
//! and writing.
//!
//! Two on-disk formats are supported:
//!
//! * CSV with a header row `id,text,<cat1>,...,<catN>` where each category
//!   column holds a `0`/`1` integer.
//! * JSONL with one `{"id": ..., "text": ..., "labels": [0, 1, ...]}` object
//!   per line.
//!
//! Text is kept verbatim. The loader validates every record and never
//! repairs one.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: I/O error: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record {record}: malformed record: {reason}")]
    Malformed { record: usize, reason: String },
    #[error("record {record}: label-width mismatch: expected {expected} labels, found {found}")]
    LabelWidth {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}: duplicate id {id:?}")]
    DuplicateId { record: usize, id: String },
    #[error("record {record}: all-zero label vector for id {id:?}")]
    AllZeroLabels { record: usize, id: String },
    #[error("record {record}: empty text for id {id:?}")]
    EmptyText { record: usize, id: String },
    #[error("header does not match schema: expected {expected:?}, found {found:?}")]
    Header {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("empty dataset")]
    EmptyDataset,
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
    Pharo,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::Java, Language::Python, Language::Pharo];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "python",
            Language::Pharo => "pharo",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "python" => Ok(Language::Python),
            "pharo" => Ok(Language::Pharo),
            other => Err(CorpusError::Schema(format!("unknown language {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Picks a format from the file extension, if it is one we know.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(CorpusError::Schema(format!("unknown format {other:?}"))),
        }
    }
}

/// Ordered category names for one corpus language. The order fixes the
/// meaning of each position in a [`LabelVector`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySchema {
    language: Language,
    categories: Vec<String>,
}

impl CategorySchema {
    pub fn new(language: Language, categories: Vec<String>) -> Result<Self, CorpusError> {
        if categories.is_empty() {
            return Err(CorpusError::Schema("schema has no categories".into()));
        }
        let mut seen = HashSet::new();
        for name in &categories {
            if name.trim().is_empty() {
                return Err(CorpusError::Schema("empty category name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(CorpusError::Schema(format!("duplicate category {name:?}")));
            }
        }
        Ok(Self {
            language,
            categories,
        })
    }

    /// The category set used by the code comment classification challenge
    /// corpora (7 Java, 5 Python, 6 Pharo categories).
    pub fn challenge(language: Language) -> Self {
        let names: &[&str] = match language {
            Language::Java => &[
                "summary",
                "Ownership",
                "Expand",
                "usage",
                "Pointer",
                "deprecation",
                "rational",
            ],
            Language::Python => &[
                "Usage",
                "Parameters",
                "DevelopmentNotes",
                "Expand",
                "Summary",
            ],
            Language::Pharo => &[
                "Keyimplementationpoints",
                "Example",
                "Responsibilities",
                "Intent",
                "Keymessages",
                "Collaborators",
            ],
        };
        Self {
            language,
            categories: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn width(&self) -> usize {
        self.categories.len()
    }

    pub fn index_of(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }
}

/// Multi-label membership vector. Serialized as an array of `0`/`1`
/// integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LabelVector(Vec<bool>);

impl LabelVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Builds a vector from integer flags; any value other than 0 or 1 is
    /// rejected.
    pub fn from_ints<I: IntoIterator<Item = i64>>(ints: I) -> Result<Self, String> {
        ints.into_iter()
            .map(|v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(format!("label value {other} is not 0 or 1")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, category: usize) -> bool {
        self.0.get(category).copied().unwrap_or(false)
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Indices of the categories this vector is positive for.
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

impl Serialize for LabelVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for &bit in &self.0 {
            seq.serialize_element(&u8::from(bit))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for LabelVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LabelsVisitor;

        impl<'de> Visitor<'de> for LabelsVisitor {
            type Value = LabelVector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of 0/1 integers")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<LabelVector, A::Error> {
                let mut ints = Vec::new();
                while let Some(v) = seq.next_element::<i64>()? {
                    ints.push(v);
                }
                LabelVector::from_ints(ints).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_seq(LabelsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledComment {
    pub id: String,
    pub language: Language,
    pub text: String,
    pub labels: LabelVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: CategorySchema,
    pub items: Vec<LabeledComment>,
    pub split: Split,
}

impl Dataset {
    /// Builds a dataset, checking every item against the schema and the
    /// per-record invariants.
    pub fn new(
        schema: CategorySchema,
        items: Vec<LabeledComment>,
        split: Split,
    ) -> Result<Self, CorpusError> {
        let mut ids = HashSet::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let record = i + 1;
            if item.language != schema.language {
                return Err(CorpusError::Malformed {
                    record,
                    reason: format!(
                        "language {} does not match schema language {}",
                        item.language, schema.language
                    ),
                });
            }
            validate_record(record, &item.id, &item.text, &item.labels, &schema)?;
            if !ids.insert(item.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    record,
                    id: item.id.clone(),
                });
            }
        }
        Ok(Self {
            schema,
            items,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&LabeledComment> {
        self.items.iter().find(|c| c.id == id)
    }
}

fn validate_record(
    record: usize,
    id: &str,
    text: &str,
    labels: &LabelVector,
    schema: &CategorySchema,
) -> Result<(), CorpusError> {
    if id.is_empty() {
        return Err(CorpusError::Malformed {
            record,
            reason: "empty id".into(),
        });
    }
    if labels.len() != schema.width() {
        return Err(CorpusError::LabelWidth {
            record,
            expected: schema.width(),
            found: labels.len(),
        });
    }
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText {
            record,
            id: id.to_string(),
        });
    }
    if !labels.any() {
        return Err(CorpusError::AllZeroLabels {
            record,
            id: id.to_string(),
        });
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
    labels: LabelVector,
}

/// Loads a dataset, keeping records in file order.
pub fn load_dataset(
    path: &Path,
    format: Format,
    schema: &CategorySchema,
    split: Split,
) -> Result<Dataset, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let records = match format {
        Format::Csv => read_csv(path, file, schema)?,
        Format::Jsonl => read_jsonl(path, file)?,
    };
    let items = records
        .into_iter()
        .map(|r| LabeledComment {
            id: r.id,
            language: schema.language,
            text: r.text,
            labels: r.labels,
        })
        .collect();
    Dataset::new(schema.clone(), items, split)
}

fn read_csv(
    path: &Path,
    file: File,
    schema: &CategorySchema,
) -> Result<Vec<JsonRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, 0, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut expected = vec!["id".to_string(), "text".to_string()];
    expected.extend(schema.categories().iter().cloned());
    if header.len() != expected.len() && header.len() >= 2 && header[..2] == expected[..2] {
        return Err(CorpusError::LabelWidth {
            record: 0,
            expected: schema.width(),
            found: header.len() - 2,
        });
    }
    if header != expected {
        return Err(CorpusError::Header {
            expected,
            found: header,
        });
    }

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let record = i + 1;
        let row = row.map_err(|e| csv_error(path, record, e))?;
        if row.len() != expected.len() {
            return Err(CorpusError::LabelWidth {
                record,
                expected: schema.width(),
                found: row.len().saturating_sub(2),
            });
        }
        let labels = row
            .iter()
            .skip(2)
            .map(|field| {
                field
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| CorpusError::Malformed {
                        record,
                        reason: format!("label field {field:?} is not an integer"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let labels = LabelVector::from_ints(labels)
            .map_err(|reason| CorpusError::Malformed { record, reason })?;
        out.push(JsonRecord {
            id: row[0].to_string(),
            text: row[1].to_string(),
            labels,
        });
    }
    Ok(out)
}

fn csv_error(path: &Path, record: usize, e: csv::Error) -> CorpusError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CorpusError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        CorpusError::Malformed {
            record,
            reason: e.to_string(),
        }
    }
}

fn read_jsonl(path: &Path, file: File) -> Result<Vec<JsonRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let record = i + 1;
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            record,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Writes a dataset in the given format. `load_dataset` on the result
/// reproduces the dataset field for field.
pub fn write_dataset(d: &Dataset, path: &Path, format: Format) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(&mut out);
            let mut header = vec!["id", "text"];
            header.extend(d.schema.categories().iter().map(String::as_str));
            writer
                .write_record(&header)
                .map_err(|e| csv_error(path, 0, e))?;
            for (i, item) in d.items.iter().enumerate() {
                let mut row = vec![item.id.clone(), item.text.clone()];
                row.extend(item.labels.bits().iter().map(|&b| u8::from(b).to_string()));
                writer
                    .write_record(&row)
                    .map_err(|e| csv_error(path, i + 1, e))?;
            }
            writer.flush().map_err(|e| CorpusError::io(path, e))?;
        }
        Format::Jsonl => {
            for item in &d.items {
                let rec = JsonRecord {
                    id: item.id.clone(),
                    text: item.text.clone(),
                    labels: item.labels.clone(),
                };
                serde_json::to_writer(&mut out, &rec)
                    .map_err(|e| CorpusError::io(path, e.into()))?;
                out.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
            }
        }
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub positives: usize,
    pub ratio: f64,
}

/// Per-category positive counts and ratios over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub total: usize,
    pub categories: Vec<CategoryStats>,
}

impl ClassStats {
    /// Builds stats from raw positive counts. Ratios are `count / total`.
    pub fn from_counts(schema: &CategorySchema, counts: &[usize], total: usize) -> Self {
        let categories = schema
            .categories()
            .iter()
            .zip(counts)
            .map(|(name, &positives)| CategoryStats {
                category: name.clone(),
                positives,
                ratio: if total == 0 {
                    0.0
                } else {
                    positives as f64 / total as f64
                },
            })
            .collect();
        Self { total, categories }
    }

    pub fn counts(&self) -> Vec<usize> {
        self.categories.iter().map(|c| c.positives).collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.categories.iter().map(|c| c.ratio).collect()
    }

    pub fn min_ratio(&self) -> f64 {
        self.categories
            .iter()
            .map(|c| c.ratio)
            .fold(f64::INFINITY, f64::min)
    }

    /// Aligned plain-text table, one row per category.
    pub fn to_table(&self) -> String {
        let width = self
            .categories
            .iter()
            .map(|c| c.category.len())
            .max()
            .unwrap_or(0)
            .max("category".len());
        let mut s = format!(
            "{:<width$}  {:>9}  {:>7}\n",
            "category", "positives", "ratio"
        );
        for c in &self.categories {
            s.push_str(&format!(
                "{:<width$}  {:>9}  {:>7.4}\n",
                c.category, c.positives, c.ratio
            ));
        }
        s.push_str(&format!("{:<width$}  {:>9}\n", "total", self.total));
        s
    }
}

pub(crate) fn positive_counts(items: &[LabeledComment], width: usize) -> Vec<usize> {
    let mut counts = vec![0usize; width];
    for item in items {
        for c in item.labels.positives() {
            counts[c] += 1;
        }
    }
    counts
}

pub fn class_stats(d: &Dataset) -> Result<ClassStats, CorpusError> {
    if d.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let counts = positive_counts(&d.items, d.schema.width());
    Ok(ClassStats::from_counts(&d.schema, &counts, d.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn java() -> CategorySchema {
        CategorySchema::challenge(Language::Java)
    }

    fn comment(id: &str, text: &str, labels: &[i64]) -> LabeledComment {
        LabeledComment {
            id: id.into(),
            language: Language::Java,
            text: text.into(),
            labels: LabelVector::from_ints(labels.iter().copied()).unwrap(),
        }
    }

    fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn challenge_schema_widths() {
        assert_eq!(CategorySchema::challenge(Language::Java).width(), 7);
        assert_eq!(CategorySchema::challenge(Language::Python).width(), 5);
        assert_eq!(CategorySchema::challenge(Language::Pharo).width(), 6);
    }

    #[test]
    fn schema_rejects_duplicates() {
        let err = CategorySchema::new(Language::Java, vec!["a".into(), "a".into()]).unwrap_err();
        assert!(err.to_string().contains("duplicate category"));
    }

    #[test]
    fn single_record_jsonl() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "one.jsonl",
            r#"{"id":"a","text":"returns the sum","labels":[1,0,0,0,0,0,0]}"#,
        );
        let d = load_dataset(&p, Format::Jsonl, &java(), Split::Train).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.items[0].text, "returns the sum");
        assert!(d.items[0].labels.get(0));
    }

    #[test]
    fn all_zero_labels_rejected() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "z.jsonl",
            r#"{"id":"a","text":"returns the sum","labels":[0,0,0,0,0,0,0]}"#,
        );
        let err = load_dataset(&p, Format::Jsonl, &java(), Split::Train).unwrap_err();
        assert!(matches!(err, CorpusError::AllZeroLabels { record: 1, .. }));
        assert!(err.to_string().contains("all-zero label vector"));
    }

    #[test]
    fn label_width_mismatch_rejected() {
        let dir = TempDir::new().unwrap();
        let p = write(&dir, "w.jsonl", r#"{"id":"a","text":"x","labels":[1,0]}"#);
        let err = load_dataset(&p, Format::Jsonl, &java(), Split::Train).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::LabelWidth {
                expected: 7,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn duplicate_id_rejected_with_record_number() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "d.jsonl",
            "{\"id\":\"a\",\"text\":\"x\",\"labels\":[1,0,0,0,0,0,0]}\n\
             {\"id\":\"a\",\"text\":\"y\",\"labels\":[1,0,0,0,0,0,0]}\n",
        );
        let err = load_dataset(&p, Format::Jsonl, &java(), Split::Train).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { record: 2, .. }));
    }

    #[test]
    fn non_binary_label_rejected() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "b.csv",
            "id,text,summary,Ownership,Expand,usage,Pointer,deprecation,rational\n\
             a,hello,2,0,0,0,0,0,0\n",
        );
        let err = load_dataset(&p, Format::Csv, &java(), Split::Train).unwrap_err();
        assert!(
            matches!(err, CorpusError::Malformed { record: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn blank_text_rejected() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "t.jsonl",
            r#"{"id":"a","text":"   ","labels":[1,0,0,0,0,0,0]}"#,
        );
        let err = load_dataset(&p, Format::Jsonl, &java(), Split::Train).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyText { .. }));
    }

    #[test]
    fn csv_header_must_match_schema() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "h.csv",
            "id,text,a,b,c,d,e,f,g\nx,hello,1,0,0,0,0,0,0\n",
        );
        let err = load_dataset(&p, Format::Csv, &java(), Split::Train).unwrap_err();
        assert!(matches!(err, CorpusError::Header { .. }));
    }

    #[test]
    fn csv_short_row_is_width_error() {
        let dir = TempDir::new().unwrap();
        let p = write(
            &dir,
            "s.csv",
            "id,text,summary,Ownership,Expand,usage,Pointer,deprecation,rational\n\
             a,hello,1,0,0\n",
        );
        let err = load_dataset(&p, Format::Csv, &java(), Split::Train).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::LabelWidth {
                record: 1,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn three_items_jsonl_writes_three_lines() {
        let dir = TempDir::new().unwrap();
        let d = Dataset::new(
            java(),
            vec![
                comment("a", "one", &[1, 0, 0, 0, 0, 0, 0]),
                comment("b", "two, with \"quotes\"", &[0, 1, 0, 0, 0, 0, 1]),
                comment("c", "three\nlines", &[0, 0, 1, 0, 0, 0, 0]),
            ],
            Split::Train,
        )
        .unwrap();
        let p = dir.path().join("out.jsonl");
        write_dataset(&d, &p, Format::Jsonl).unwrap();
        let body = std::fs::read_to_string(&p).unwrap();
        assert_eq!(body.lines().count(), 3);
        for format in [Format::Jsonl, Format::Csv] {
            let p = dir.path().join(format!("rt.{}", format.extension()));
            write_dataset(&d, &p, format).unwrap();
            assert_eq!(load_dataset(&p, format, &java(), Split::Train).unwrap(), d);
        }
    }

    #[test]
    fn unwritable_path_reports_path() {
        let d = Dataset::new(
            java(),
            vec![comment("a", "x", &[1, 0, 0, 0, 0, 0, 0])],
            Split::Train,
        )
        .unwrap();
        let p = Path::new("/nonexistent-dir/for/sure/out.jsonl");
        let err = write_dataset(&d, p, Format::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
        assert!(err
            .to_string()
            .contains("/nonexistent-dir/for/sure/out.jsonl"));
    }

    #[test]
    fn class_stats_counts_and_ratios() {
        let schema = CategorySchema::new(Language::Java, vec!["c0".into(), "c1".into()]).unwrap();
        let mk = |id: &str, bits: [i64; 2]| LabeledComment {
            id: id.into(),
            language: Language::Java,
            text: "t".into(),
            labels: LabelVector::from_ints(bits).unwrap(),
        };
        let d = Dataset::new(
            schema,
            vec![
                mk("1", [1, 1]),
                mk("2", [1, 1]),
                mk("3", [0, 1]),
                mk("4", [0, 1]),
            ],
            Split::Train,
        )
        .unwrap();
        let s = class_stats(&d).unwrap();
        assert_eq!(s.total, 4);
        assert_eq!(s.categories[0].positives, 2);
        assert_eq!(s.categories[0].ratio, 0.5);
        assert_eq!(s.categories[1].ratio, 1.0);
    }

    #[test]
    fn class_stats_empty_is_error() {
        let d = Dataset::new(java(), vec![], Split::Test).unwrap();
        assert!(matches!(class_stats(&d), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.CSV")), Some(Format::Csv));
        assert_eq!(Format::from_path(Path::new("b.jsonl")), Some(Format::Jsonl));
        assert_eq!(Format::from_path(Path::new("b.txt")), None);
    }
}
