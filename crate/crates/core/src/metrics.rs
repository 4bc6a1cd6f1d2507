//! Exact match, character error rate and annotator agreement.
//!
//! CER is the character-level Levenshtein distance divided by the length of
//! the gold (reference) string. Whitespace counts as characters. The micro
//! average pools distances and reference lengths over all pairs.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::codec::{decode_geometry, parse_literal};
use crate::model::{precision_of, PrecisionLevel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no pairs to evaluate")]
    EmptyEval,
}

/// Gold and predicted flattened geometry strings for one entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalPair {
    pub entry_id: String,
    pub gold: String,
    pub pred: Option<String>,
}

impl EvalPair {
    pub fn new(entry_id: impl Into<String>, gold: impl Into<String>, pred: Option<String>) -> Self {
        EvalPair {
            entry_id: entry_id.into(),
            gold: gold.into(),
            pred,
        }
    }
}

/// 1 when the strings are equal after trimming outer whitespace, else 0.
pub fn exact_match(gold: &str, pred: Option<&str>) -> u8 {
    match pred {
        Some(p) if p.trim() == gold.trim() => 1,
        _ => 0,
    }
}

/// Unit-cost Levenshtein distance over characters.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Pooled edit counts: `edits / reference_chars` is the CER.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CerTally {
    pub edits: usize,
    pub reference_chars: usize,
}

impl CerTally {
    /// Outer whitespace is trimmed as in [`exact_match`].
    pub fn of(gold: &str, pred: Option<&str>) -> Self {
        let gold = gold.trim();
        CerTally {
            edits: edit_distance(gold, pred.unwrap_or("").trim()),
            reference_chars: gold.chars().count(),
        }
    }

    pub fn add(&mut self, other: CerTally) {
        self.edits += other.edits;
        self.reference_chars += other.reference_chars;
    }

    pub fn rate(&self) -> f64 {
        if self.reference_chars == 0 {
            if self.edits == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.edits as f64 / self.reference_chars as f64
        }
    }
}

/// Edit distance divided by the gold length. A missing prediction is scored
/// as the empty string.
pub fn cer(gold: &str, pred: Option<&str>) -> f64 {
    CerTally::of(gold, pred).rate()
}

/// Sum of distances over sum of gold lengths.
pub fn micro_cer(pairs: &[EvalPair]) -> Result<f64, MetricsError> {
    micro_tally(pairs).map(|t| t.rate())
}

pub fn micro_tally(pairs: &[EvalPair]) -> Result<CerTally, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyEval);
    }
    let mut tally = CerTally::default();
    for p in pairs {
        tally.add(CerTally::of(&p.gold, p.pred.as_deref()));
    }
    Ok(tally)
}

/// Comparison of two annotators' id → annotation maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub union: usize,
    pub only_a: usize,
    pub only_b: usize,
    pub intersection: usize,
    pub identical: usize,
    /// identical / intersection; 0 when the intersection is empty.
    pub rate: f64,
    /// Micro CER over the intersection pairs that differ (A taken as
    /// reference); `None` when every shared pair is identical.
    pub divergent_micro_cer: Option<f64>,
}

pub fn agreement(a: &BTreeMap<String, String>, b: &BTreeMap<String, String>) -> Agreement {
    let mut divergent = Vec::new();
    let mut identical = 0;
    let mut intersection = 0;
    for (id, gold_a) in a {
        if let Some(gold_b) = b.get(id) {
            intersection += 1;
            if exact_match(gold_a, Some(gold_b)) == 1 {
                identical += 1;
            } else {
                divergent.push(EvalPair::new(
                    id.clone(),
                    gold_a.clone(),
                    Some(gold_b.clone()),
                ));
            }
        }
    }
    let only_a = a.len() - intersection;
    let only_b = b.len() - intersection;
    Agreement {
        union: only_a + only_b + intersection,
        only_a,
        only_b,
        intersection,
        identical,
        rate: if intersection == 0 {
            0.0
        } else {
            identical as f64 / intersection as f64
        },
        divergent_micro_cer: micro_cer(&divergent).ok(),
    }
}

/// EM within one (latitude level, longitude level) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CellScore {
    pub matches: usize,
    pub support: usize,
}

impl CellScore {
    pub fn em(&self) -> f64 {
        if self.support == 0 {
            0.0
        } else {
            self.matches as f64 / self.support as f64
        }
    }
}

pub type Breakdown = BTreeMap<(PrecisionLevel, PrecisionLevel), CellScore>;

/// A pair left out of the breakdown because its gold is not a well-formed point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiagnostic {
    pub entry_id: String,
    pub detail: String,
}

/// Precision levels of a flattened gold string, if it encodes a single
/// well-formed point.
pub fn point_levels(gold: &str) -> Result<(PrecisionLevel, PrecisionLevel), String> {
    let encoding = parse_literal(gold).map_err(|e| e.to_string())?;
    let geometry = decode_geometry(&encoding).map_err(|e| e.to_string())?;
    match geometry.as_point().map(precision_of) {
        Some((Some(lat), Some(lon))) => Ok((lat, lon)),
        Some(_) => Err("gold point is incomplete".into()),
        None => Err(format!("gold is a {:?}, not a point", geometry.kind())),
    }
}

/// EM per precision cell; cells without gold pairs are absent.
pub fn precision_breakdown(pairs: &[EvalPair]) -> (Breakdown, Vec<PairDiagnostic>) {
    let mut cells = Breakdown::new();
    let mut diagnostics = Vec::new();
    for pair in pairs {
        match point_levels(&pair.gold) {
            Ok(levels) => {
                let cell = cells.entry(levels).or_default();
                cell.support += 1;
                cell.matches += usize::from(exact_match(&pair.gold, pair.pred.as_deref()));
            }
            Err(detail) => diagnostics.push(PairDiagnostic {
                entry_id: pair.entry_id.clone(),
                detail,
            }),
        }
    }
    (cells, diagnostics)
}

/// EM and pooled CER over one subset of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetScore {
    pub em: f64,
    pub cer_micro: f64,
    pub support: usize,
}

impl SubsetScore {
    fn of(pairs: &[&EvalPair]) -> Option<Self> {
        if pairs.is_empty() {
            return None;
        }
        let mut tally = CerTally::default();
        let mut matches = 0;
        for p in pairs {
            tally.add(CerTally::of(&p.gold, p.pred.as_deref()));
            matches += usize::from(exact_match(&p.gold, p.pred.as_deref()));
        }
        Some(SubsetScore {
            em: matches as f64 / pairs.len() as f64,
            cer_micro: tally.rate(),
            support: pairs.len(),
        })
    }
}

/// Aggregate scores over all pairs, split into single well-formed points and
/// everything else, with the per-precision breakdown of the points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub em: f64,
    pub cer_micro: f64,
    pub support: usize,
    pub exact_matches: usize,
    pub tally: CerTally,
    pub points: Option<SubsetScore>,
    pub others: Option<SubsetScore>,
    #[serde(serialize_with = "serialize_breakdown")]
    pub breakdown: Breakdown,
}

impl EvalReport {
    pub fn well_formed_support(&self) -> usize {
        self.points.map_or(0, |p| p.support)
    }
}

fn serialize_breakdown<S: serde::Serializer>(b: &Breakdown, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(b.len()))?;
    for ((lat, lon), cell) in b {
        map.serialize_entry(
            &format!("{lat}x{lon}"),
            &serde_json::json!({
                "latitude": lat,
                "longitude": lon,
                "em": cell.em(),
                "matches": cell.matches,
                "support": cell.support,
            }),
        )?;
    }
    map.end()
}

pub fn evaluate_pairs(pairs: &[EvalPair]) -> Result<EvalReport, MetricsError> {
    let tally = micro_tally(pairs)?;
    let exact_matches = pairs
        .iter()
        .map(|p| usize::from(exact_match(&p.gold, p.pred.as_deref())))
        .sum();
    let (point_pairs, other_pairs): (Vec<&EvalPair>, Vec<&EvalPair>) =
        pairs.iter().partition(|p| point_levels(&p.gold).is_ok());
    let owned_points: Vec<EvalPair> = point_pairs.iter().map(|p| (*p).clone()).collect();
    let (breakdown, _) = precision_breakdown(&owned_points);
    Ok(EvalReport {
        em: exact_matches as f64 / pairs.len() as f64,
        cer_micro: tally.rate(),
        support: pairs.len(),
        exact_matches,
        tally,
        points: SubsetScore::of(&point_pairs),
        others: SubsetScore::of(&other_pairs),
        breakdown,
    })
}
