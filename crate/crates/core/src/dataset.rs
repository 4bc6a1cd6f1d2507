//! Gold-standard dataset files: a JSON list of entry objects.
//!
//! Each object carries an identifier, a headword, the article text, an
//! optional `coordinates` encoding and an optional `meridian` list. Key names
//! other than the defaults can be mapped through [`KeyMap`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::codec::{
    decode_geometry_detailed, encode_geometry, encoding_from_json, parse_literal, CodecError,
    Encoding,
};
use crate::model::{precision_of, Entry, Geometry, MeridianRef, PrecisionLevel};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("entry {index}: key '{key}': {message}")]
    Schema {
        index: usize,
        key: String,
        message: String,
    },
}

/// Accepted key spellings for each of the five entry fields, tried in order.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyMap {
    pub id: Vec<String>,
    pub head: Vec<String>,
    pub text: Vec<String>,
    pub coordinates: Vec<String>,
    pub meridian: Vec<String>,
}

impl Default for KeyMap {
    fn default() -> Self {
        let v = |keys: &[&str]| keys.iter().map(|k| k.to_string()).collect();
        KeyMap {
            id: v(&["id", "uid", "entry_id", "identifier"]),
            head: v(&["head", "headword", "vedette"]),
            text: v(&["text", "content", "contenu"]),
            coordinates: v(&["coordinates", "coords"]),
            meridian: v(&["meridian", "meridians"]),
        }
    }
}

impl KeyMap {
    /// Adds `key` as the preferred spelling of `field`.
    pub fn alias(&mut self, field: &str, key: &str) -> Result<(), String> {
        let list = match field {
            "id" => &mut self.id,
            "head" => &mut self.head,
            "text" => &mut self.text,
            "coordinates" => &mut self.coordinates,
            "meridian" => &mut self.meridian,
            other => return Err(format!("unknown field '{other}'")),
        };
        list.insert(0, key.to_string());
        Ok(())
    }
}

/// Problem found with one entry; the entry is kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub entry_id: String,
    pub kind: String,
    pub detail: String,
}

impl Diagnostic {
    pub fn new(
        entry_id: impl Into<String>,
        kind: impl Into<String>,
        detail: impl Into<String>,
    ) -> Self {
        Diagnostic {
            entry_id: entry_id.into(),
            kind: kind.into(),
            detail: detail.into(),
        }
    }
}

/// Entries in file order, with unique identifiers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetFile {
    entries: Vec<Entry>,
}

impl DatasetFile {
    pub fn new(entries: Vec<Entry>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for (index, e) in entries.iter().enumerate() {
            if e.id.is_empty() {
                return Err(DatasetError::Schema {
                    index,
                    key: "id".into(),
                    message: "empty identifier".into(),
                });
            }
            if !seen.insert(e.id.as_str()) {
                return Err(DatasetError::Schema {
                    index,
                    key: "id".into(),
                    message: format!("duplicate identifier '{}'", e.id),
                });
            }
        }
        Ok(DatasetFile { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Entry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn by_id(&self) -> BTreeMap<&str, &Entry> {
        self.entries.iter().map(|e| (e.id.as_str(), e)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Loaded {
    pub dataset: DatasetFile,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn load_dataset(path: &Path) -> Result<Loaded, DatasetError> {
    load_dataset_with(path, &KeyMap::default())
}

pub fn load_dataset_with(path: &Path, keys: &KeyMap) -> Result<Loaded, DatasetError> {
    let raw = fs::read_to_string(path).map_err(|source| DatasetError::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&raw, keys)
}

pub fn parse_dataset(raw: &str, keys: &KeyMap) -> Result<Loaded, DatasetError> {
    let value: Value = serde_json::from_str(raw)?;
    let items = value.as_array().ok_or_else(|| DatasetError::Schema {
        index: 0,
        key: "(root)".into(),
        message: "expected a JSON list of entry objects".into(),
    })?;
    let mut entries = Vec::with_capacity(items.len());
    let mut diagnostics = Vec::new();
    for (index, item) in items.iter().enumerate() {
        let (entry, diags) = parse_entry(index, item, keys)?;
        entries.push(entry);
        diagnostics.extend(diags);
    }
    Ok(Loaded {
        dataset: DatasetFile::new(entries)?,
        diagnostics,
    })
}

fn lookup<'a>(
    obj: &'a serde_json::Map<String, Value>,
    names: &[String],
) -> Option<(&'a str, &'a Value)> {
    names
        .iter()
        .find_map(|n| obj.get_key_value(n.as_str()))
        .map(|(k, v)| (k.as_str(), v))
}

fn parse_entry(
    index: usize,
    item: &Value,
    keys: &KeyMap,
) -> Result<(Entry, Vec<Diagnostic>), DatasetError> {
    let schema = |key: &str, message: &str| DatasetError::Schema {
        index,
        key: key.into(),
        message: message.into(),
    };
    let obj = item
        .as_object()
        .ok_or_else(|| schema("(entry)", "expected an object"))?;

    let id = match lookup(obj, &keys.id) {
        Some((_, Value::String(s))) => s.clone(),
        Some((_, Value::Number(n))) => n.to_string(),
        Some((k, _)) => return Err(schema(k, "identifier must be a string or number")),
        None => return Err(schema(&keys.id[0], "missing")),
    };
    let string_field = |names: &[String]| -> Result<String, DatasetError> {
        match lookup(obj, names) {
            Some((_, Value::String(s))) => Ok(s.clone()),
            Some((_, Value::Null)) | None => Ok(String::new()),
            Some((k, _)) => Err(schema(k, "must be a string")),
        }
    };
    let headword = string_field(&keys.head)?;
    let text = string_field(&keys.text)?;

    let mut diagnostics = Vec::new();
    let coordinates = match lookup(obj, &keys.coordinates) {
        None | Some((_, Value::Null)) => None,
        Some((_, value)) => match decode_value(value) {
            Ok(geometry) => geometry,
            Err(e) => {
                diagnostics.push(Diagnostic::new(&id, codec_error_kind(&e), e.to_string()));
                None
            }
        },
    };
    let meridians = match lookup(obj, &keys.meridian) {
        None | Some((_, Value::Null)) => Vec::new(),
        Some((_, Value::String(s))) => vec![MeridianRef::from_label(s)],
        Some((k, Value::Array(items))) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(MeridianRef::from_label)
                    .ok_or_else(|| schema(k, "meridian entries must be strings"))
            })
            .collect::<Result<_, _>>()?,
        Some((k, _)) => return Err(schema(k, "must be a string or a list of strings")),
    };
    Ok((
        Entry {
            id,
            headword,
            text,
            coordinates,
            meridians,
        },
        diagnostics,
    ))
}

/// JSON lists and printed list literals are both accepted; an empty list
/// means no annotation.
fn decode_value(value: &Value) -> Result<Option<Geometry>, CodecError> {
    let encoding: Encoding = match value {
        Value::String(s) if s.trim().is_empty() => return Ok(None),
        Value::String(s) => parse_literal(s)?,
        other => encoding_from_json(other)?,
    };
    if encoding.is_empty() {
        return Ok(None);
    }
    let decoded = decode_geometry_detailed(&encoding)?;
    Ok(Some(decoded.geometry))
}

pub fn codec_error_kind(e: &CodecError) -> &'static str {
    match e {
        CodecError::Empty => "EmptyError",
        CodecError::Grammar { .. } | CodecError::Literal { .. } => "GrammarError",
        CodecError::Range(_) => "RangeError",
        CodecError::UnknownPrefix(_) => "UnknownPrefixError",
        CodecError::Depth(_) => "DepthError",
        CodecError::Arity(_) | CodecError::Geometry(_) => "StructureError",
    }
}

#[derive(Serialize)]
struct EntryRecord<'a> {
    id: &'a str,
    head: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    coordinates: Option<Encoding>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    meridian: Vec<&'a str>,
}

/// Serializes entries with a fixed key order; identical datasets give
/// identical bytes.
pub fn dataset_to_json(ds: &DatasetFile) -> String {
    let records: Vec<EntryRecord<'_>> = ds
        .entries
        .iter()
        .map(|e| EntryRecord {
            id: &e.id,
            head: &e.headword,
            text: &e.text,
            coordinates: e.coordinates.as_ref().map(encode_geometry),
            meridian: e.meridians.iter().map(MeridianRef::label).collect(),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&records).expect("entry records serialize");
    out.push('\n');
    out
}

pub fn write_dataset(ds: &DatasetFile, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, dataset_to_json(ds)).map_err(|source| DatasetError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Composition of a dataset by annotation type and precision.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub entries: usize,
    pub well_formed_points: usize,
    pub incomplete_points: usize,
    pub latitude_only: usize,
    pub longitude_only: usize,
    pub surfaces: usize,
    pub poly_chains: usize,
    pub sub_entries: usize,
    pub multi_sources: usize,
    pub misc: usize,
    pub meridian_entries: usize,
    /// Rows: latitude level D, DM, DMS. Columns: longitude level.
    pub precision_matrix: [[usize; 3]; 3],
}

impl DatasetStats {
    pub fn coordinate_bearing(&self) -> usize {
        self.well_formed_points
            + self.incomplete_points
            + self.surfaces
            + self.poly_chains
            + self.sub_entries
            + self.multi_sources
            + self.misc
    }

    pub fn prose_only(&self) -> usize {
        self.entries - self.coordinate_bearing()
    }

    pub fn matrix_total(&self) -> usize {
        self.precision_matrix.iter().flatten().sum()
    }

    pub fn cell(&self, lat: PrecisionLevel, lon: PrecisionLevel) -> usize {
        self.precision_matrix[lat.index()][lon.index()]
    }

    fn add_entry(mut self, e: &Entry) -> Self {
        self.entries += 1;
        if !e.meridians.is_empty() {
            self.meridian_entries += 1;
        }
        match &e.coordinates {
            None => {}
            Some(Geometry::Point(p)) => match precision_of(p) {
                (Some(lat), Some(lon)) => {
                    self.well_formed_points += 1;
                    self.precision_matrix[lat.index()][lon.index()] += 1;
                }
                (Some(_), None) => {
                    self.incomplete_points += 1;
                    self.latitude_only += 1;
                }
                (None, _) => {
                    self.incomplete_points += 1;
                    self.longitude_only += 1;
                }
            },
            Some(Geometry::Rectangle(_)) => self.surfaces += 1,
            Some(Geometry::PolyChain(_)) => self.poly_chains += 1,
            Some(Geometry::SubEntries(_)) => self.sub_entries += 1,
            Some(Geometry::MultiSource(_)) => self.multi_sources += 1,
            Some(Geometry::Misc(_)) => self.misc += 1,
        }
        self
    }

    fn merge(mut self, o: Self) -> Self {
        self.entries += o.entries;
        self.well_formed_points += o.well_formed_points;
        self.incomplete_points += o.incomplete_points;
        self.latitude_only += o.latitude_only;
        self.longitude_only += o.longitude_only;
        self.surfaces += o.surfaces;
        self.poly_chains += o.poly_chains;
        self.sub_entries += o.sub_entries;
        self.multi_sources += o.multi_sources;
        self.misc += o.misc;
        self.meridian_entries += o.meridian_entries;
        for (row, other) in self.precision_matrix.iter_mut().zip(o.precision_matrix) {
            for (cell, v) in row.iter_mut().zip(other) {
                *cell += v;
            }
        }
        self
    }
}

pub fn compute_stats(ds: &DatasetFile) -> DatasetStats {
    ds.entries
        .par_iter()
        .fold(DatasetStats::default, DatasetStats::add_entry)
        .reduce(DatasetStats::default, DatasetStats::merge)
}

/// Well-formed single points whose latitude and longitude share a level.
pub fn select_same_precision(ds: &DatasetFile) -> Vec<(&Entry, PrecisionLevel)> {
    ds.entries
        .iter()
        .filter_map(
            |e| match e.coordinates.as_ref()?.as_point().map(precision_of)? {
                (Some(lat), Some(lon)) if lat == lon => Some((e, lat)),
                _ => None,
            },
        )
        .collect()
}

/// Counts and shares of a same-precision selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSummary {
    pub selected: usize,
    pub counts: BTreeMap<PrecisionLevel, usize>,
    pub shares: BTreeMap<PrecisionLevel, f64>,
}

pub fn summarize_selection(selection: &[(&Entry, PrecisionLevel)]) -> SelectionSummary {
    let mut counts: BTreeMap<PrecisionLevel, usize> =
        PrecisionLevel::ALL.iter().map(|&l| (l, 0)).collect();
    for (_, level) in selection {
        *counts.entry(*level).or_default() += 1;
    }
    let total = selection.len();
    let shares = counts
        .iter()
        .map(|(&l, &c)| {
            (
                l,
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                },
            )
        })
        .collect();
    SelectionSummary {
        selected: total,
        counts,
        shares,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"[
      {"id": "v1-1", "head": "AAHUS", "text": "Long. 24. 36. lat. 52. 10.",
       "coordinates": [["52 10' N 24 36' E"]]},
      {"id": "v1-2", "head": "AGRIGNON", "text": "Lat. 19. 40.", "coordinates": [["19 40' N"]]},
      {"id": "v1-3", "head": "PROSE", "text": "ville de France."},
      {"id": "v6-9", "head": "FONING", "text": "Long. 4. 0. latit. 26. 33.",
       "coordinates": [["26 33' N 4 0' E"]], "meridian": ["Pékin"]}
    ]"#;

    #[test]
    fn loads_entries() {
        let loaded = parse_dataset(SAMPLE, &KeyMap::default()).unwrap();
        assert!(loaded.diagnostics.is_empty());
        let ds = loaded.dataset;
        assert_eq!(ds.len(), 4);
        assert!(matches!(
            ds.entries()[0].coordinates,
            Some(Geometry::Point(_))
        ));
        assert_eq!(ds.entries()[2].coordinates, None);
        assert_eq!(ds.entries()[3].meridians, vec![MeridianRef::Pekin]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let raw = r#"[{"id": "a", "head": "", "text": ""}, {"id": "a", "head": "", "text": ""}]"#;
        assert!(matches!(
            parse_dataset(raw, &KeyMap::default()),
            Err(DatasetError::Schema { index: 1, .. })
        ));
    }

    #[test]
    fn schema_errors_name_key() {
        let raw = r#"[{"head": "X", "text": ""}]"#;
        match parse_dataset(raw, &KeyMap::default()) {
            Err(DatasetError::Schema { index, key, .. }) => {
                assert_eq!((index, key.as_str()), (0, "id"))
            }
            other => panic!("unexpected {other:?}"),
        }
        let raw = r#"[{"id": "a", "head": 3, "text": ""}]"#;
        assert!(matches!(
            parse_dataset(raw, &KeyMap::default()),
            Err(DatasetError::Schema { .. })
        ));
        assert!(matches!(
            parse_dataset("{}", &KeyMap::default()),
            Err(DatasetError::Schema { .. })
        ));
    }

    #[test]
    fn bad_annotation_becomes_diagnostic() {
        let raw = r#"[{"id": "a", "head": "X", "text": "", "coordinates": [["52 61' N"]]}]"#;
        let loaded = parse_dataset(raw, &KeyMap::default()).unwrap();
        assert_eq!(loaded.dataset.entries()[0].coordinates, None);
        assert_eq!(loaded.diagnostics[0].kind, "RangeError");
    }

    #[test]
    fn literal_strings_and_aliases() {
        let raw = r#"[{"uid": 7, "headword": "ABISSINIE", "text": "",
                      "coordinates": "[['6 N 48 E', '20 N 65 E']]"}]"#;
        let loaded = parse_dataset(raw, &KeyMap::default()).unwrap();
        let e = &loaded.dataset.entries()[0];
        assert_eq!(e.id, "7");
        assert!(matches!(e.coordinates, Some(Geometry::Rectangle(_))));

        let mut keys = KeyMap::default();
        keys.alias("text", "body").unwrap();
        let raw = r#"[{"id": "a", "head": "X", "body": "Lat. 1."}]"#;
        assert_eq!(
            parse_dataset(raw, &keys).unwrap().dataset.entries()[0].text,
            "Lat. 1."
        );
        assert!(keys.alias("nope", "x").is_err());
    }

    #[test]
    fn write_is_stable() {
        let ds = parse_dataset(SAMPLE, &KeyMap::default()).unwrap().dataset;
        let first = dataset_to_json(&ds);
        let reloaded = parse_dataset(&first, &KeyMap::default()).unwrap().dataset;
        assert_eq!(reloaded, ds);
        assert_eq!(dataset_to_json(&reloaded), first);
        assert_eq!(first.matches("\"meridian\"").count(), 1);
        assert_eq!(first.matches("\"coordinates\"").count(), 3);
    }

    #[test]
    fn stats_and_selection() {
        let ds = parse_dataset(SAMPLE, &KeyMap::default()).unwrap().dataset;
        let s = compute_stats(&ds);
        assert_eq!(s.entries, 4);
        assert_eq!(s.well_formed_points, 2);
        assert_eq!(
            (s.incomplete_points, s.latitude_only, s.longitude_only),
            (1, 1, 0)
        );
        assert_eq!(s.meridian_entries, 1);
        assert_eq!(s.coordinate_bearing(), 3);
        assert_eq!(s.prose_only(), 1);
        assert_eq!(s.cell(PrecisionLevel::DM, PrecisionLevel::DM), 2);
        assert_eq!(s.matrix_total(), s.well_formed_points);

        let sel = select_same_precision(&ds);
        assert_eq!(sel.len(), 2);
        assert!(sel.iter().all(|(_, l)| *l == PrecisionLevel::DM));
        let summary = summarize_selection(&sel);
        assert_eq!(summary.shares[&PrecisionLevel::DM], 1.0);
    }

    #[test]
    fn empty_dataset_stats() {
        let s = compute_stats(&DatasetFile::default());
        assert_eq!(s, DatasetStats::default());
    }

    #[test]
    fn mismatched_levels_excluded() {
        let raw = r#"[{"id": "a", "head": "X", "text": "", "coordinates": [["52 N 24 36' E"]]}]"#;
        let ds = parse_dataset(raw, &KeyMap::default()).unwrap().dataset;
        assert!(select_same_precision(&ds).is_empty());
    }
}
