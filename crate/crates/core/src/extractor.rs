//! Rule-based detection and extraction of coordinates from article text.
//!
//! Two cue shapes are recognised:
//!
//! * keyword first: `Long. 24. 36.`, `sa longitude est 114`, `Long. 48-65.`
//! * number first: `55. degré de latitude septentrionale`, `le 152. de longitude`
//!
//! Number-first matches are resolved before keyword-first ones so that a
//! number already tied to a following keyword cannot be taken by an earlier
//! keyword whose window reaches it. Numeric fields map positionally onto
//! degrees, minutes and seconds unless an explicit unit says otherwise.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    fold_accents, Axis, CanonicalPoint, DmsAngle, Entry, Geometry, Hemisphere, MeridianRef,
    Rectangle, Shape,
};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("invalid pattern in '{field}': {source}")]
    Pattern {
        field: &'static str,
        #[source]
        source: regex::Error,
    },
    #[error("cardinal word '{word}' maps to unknown hemisphere '{hemisphere}'")]
    Cardinal { word: String, hemisphere: String },
    #[error("reading rules: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing rules: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Editable rule configuration. Every list holds case-insensitive regular
/// expression fragments. Keys present in a rules file replace the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    /// Maximum characters between a keyword and the number it introduces.
    pub window: usize,
    /// Maximum characters between a latitude and a longitude of one point.
    pub pair_gap: usize,
    pub latitude_keywords: Vec<String>,
    pub longitude_keywords: Vec<String>,
    pub degree_units: Vec<String>,
    pub minute_units: Vec<String>,
    pub second_units: Vec<String>,
    pub range_separators: Vec<String>,
    /// Words after a number that make it a distance, not a coordinate.
    pub distance_units: Vec<String>,
    /// Cardinal word pattern → hemisphere letter.
    pub cardinal_words: BTreeMap<String, String>,
    pub citation_cues: Vec<String>,
    pub subentry_cues: Vec<String>,
    pub river_cues: Vec<String>,
    /// City pattern → meridian label.
    pub meridian_cities: BTreeMap<String, String>,
    /// Characters after "méridien" searched for a city name.
    pub meridian_window: usize,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for RuleConfig {
    fn default() -> Self {
        let map = |pairs: &[(&str, &str)]| {
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        };
        RuleConfig {
            window: 40,
            pair_gap: 30,
            latitude_keywords: strings(&[
                r"latitudes?",
                r"latit\.",
                r"lat\.",
                r"hauteur\s+du\s+p[ôo]le",
                r"[ée]l[ée]vation\s+du\s+p[ôo]le",
            ]),
            longitude_keywords: strings(&[r"longitudes?", r"longit\.", r"long\."]),
            degree_units: strings(&[r"degr[ée]s?", r"deg\.", r"d\.", "°", "º"]),
            minute_units: strings(&[r"minutes?", r"min\.", r"m\.", "'", "′", "’"]),
            second_units: strings(&[r"secondes?", r"sec\.", r"s\.", "''", "\"", "″", "”"]),
            range_separators: strings(&["-", "–", "—"]),
            distance_units: strings(&[
                r"lieues?",
                r"milles?",
                r"toises?",
                r"pas",
                r"pi[ée]s",
                r"pieds?",
                r"verstes?",
                r"journ[ée]es?",
                r"stades?",
                r"brasses?",
                r"perches?",
            ]),
            cardinal_words: map(&[
                (r"septentrionale?", "N"),
                (r"sept\.", "N"),
                (r"bor[ée]ale?", "N"),
                (r"nord", "N"),
                (r"m[ée]ridionale?", "S"),
                (r"m[ée]rid\.", "S"),
                (r"australe?", "S"),
                (r"sud", "S"),
                (r"orientale?", "E"),
                (r"orient\.", "E"),
                (r"occidentale?", "W"),
                (r"occid\.", "W"),
                (r"ouest", "W"),
            ]),
            citation_cues: strings(&[
                r"selon",
                r"suivant",
                r"d'apr[èe]s",
                r"d’apr[èe]s",
                r"au rapport d",
            ]),
            subentry_cues: strings(&[r"autre", r"il y a"]),
            river_cues: strings(&[
                r"sources?",
                r"embouchure",
                r"se jette",
                r"se d[ée]charge",
                r"se perd",
                r"prend naissance",
            ]),
            meridian_cities: map(&[
                (r"paris", "Paris"),
                (r"p[ée]kin[g]?", "Pékin"),
                (r"londres|london|greenwich", "Londres"),
                (r"lund|lunden", "Lund"),
            ]),
            meridian_window: 60,
        }
    }
}

impl RuleConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, RuleError> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("rule config serializes")
    }
}

/// Compiled, immutable rule set.
#[derive(Debug, Clone)]
pub struct ExtractionRuleSet {
    config: RuleConfig,
    keyword: Regex,
    unit: Regex,
    separator: Regex,
    range: Regex,
    distance: Regex,
    cardinal_after: Regex,
    cardinal_any: Regex,
    cardinals: Vec<(Regex, Hemisphere)>,
    backward_connector: Regex,
    citation: Regex,
    subentry: Regex,
    river: Regex,
    meridian: Regex,
    cities: Vec<(Regex, MeridianRef)>,
}

impl Default for ExtractionRuleSet {
    fn default() -> Self {
        Self::from_config(RuleConfig::default()).expect("default rules compile")
    }
}

fn alternation(items: &[String]) -> String {
    let mut sorted: Vec<&String> = items.iter().collect();
    // Longer alternatives first so "''" wins over "'".
    sorted.sort_by_key(|s| std::cmp::Reverse(s.len()));
    sorted
        .iter()
        .map(|s| format!("(?:{s})"))
        .collect::<Vec<_>>()
        .join("|")
}

fn compile(field: &'static str, pattern: &str) -> Result<Regex, RuleError> {
    Regex::new(pattern).map_err(|source| RuleError::Pattern { field, source })
}

impl ExtractionRuleSet {
    pub fn from_config(config: RuleConfig) -> Result<Self, RuleError> {
        let keyword = compile(
            "latitude_keywords/longitude_keywords",
            &format!(
                r"(?i)\b(?:(?P<lat>{})|(?P<lon>{}))",
                alternation(&config.latitude_keywords),
                alternation(&config.longitude_keywords)
            ),
        )?;
        let unit = compile(
            "degree_units/minute_units/second_units",
            &format!(
                r"(?i)^\.?[^\S\n]*(?:(?P<sec>{})|(?P<deg>{})|(?P<min>{}))",
                alternation(&config.second_units),
                alternation(&config.degree_units),
                alternation(&config.minute_units)
            ),
        )?;
        let separator = compile("separator", r"^(?:\s*[.,:]\s*|\s+)")?;
        let range = compile(
            "range_separators",
            &format!(r"^\.?\s*(?:{})\s*", alternation(&config.range_separators)),
        )?;
        let distance = compile(
            "distance_units",
            &format!(
                r"(?i)^\.?\s*(?:de\s+)?(?:{})\b",
                alternation(&config.distance_units)
            ),
        )?;
        let mut cardinals = Vec::new();
        for (word, hemi) in &config.cardinal_words {
            let hemisphere = hemi
                .chars()
                .next()
                .filter(|_| hemi.chars().count() == 1)
                .and_then(Hemisphere::from_char)
                .ok_or_else(|| RuleError::Cardinal {
                    word: word.clone(),
                    hemisphere: hemi.clone(),
                })?;
            cardinals.push((
                compile("cardinal_words", &format!(r"(?i)^(?:{word})$"))?,
                hemisphere,
            ));
        }
        let cardinal_words: Vec<String> = config.cardinal_words.keys().cloned().collect();
        let cardinal_after = compile(
            "cardinal_words",
            &format!(
                r"(?i)^[\s,.]*(?:(?:de|du)\s+)?(?P<c>{})",
                alternation(&cardinal_words)
            ),
        )?;
        let cardinal_any = compile(
            "cardinal_words",
            &format!(r"(?i)\b(?:{})", alternation(&cardinal_words)),
        )?;
        let backward_connector = compile(
            "connector",
            r"(?i)^\.?\s*(?:(?:de|du)\s+(?:la\s+)?|d['’]\s*)$",
        )?;
        let cue =
            |field, items: &[String]| compile(field, &format!(r"(?i)\b(?:{})", alternation(items)));
        let citation = cue("citation_cues", &config.citation_cues)?;
        let subentry = cue("subentry_cues", &config.subentry_cues)?;
        let river = cue("river_cues", &config.river_cues)?;
        let meridian = compile("meridian", r"(?i)\bm[ée]ridiens?\b")?;
        let mut cities = Vec::new();
        for (pattern, label) in &config.meridian_cities {
            cities.push((
                compile("meridian_cities", &format!(r"(?i)\b(?:{pattern})\b"))?,
                MeridianRef::from_label(label),
            ));
        }
        Ok(ExtractionRuleSet {
            config,
            keyword,
            unit,
            separator,
            range,
            distance,
            cardinal_after,
            cardinal_any,
            cardinals,
            backward_connector,
            citation,
            subentry,
            river,
            meridian,
            cities,
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self, RuleError> {
        Self::from_config(RuleConfig::from_toml_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, RuleError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn config(&self) -> &RuleConfig {
        &self.config
    }

    fn cardinal_hemisphere(&self, word: &str) -> Option<Hemisphere> {
        self.cardinals
            .iter()
            .find(|(re, _)| re.is_match(word))
            .map(|(_, h)| *h)
    }
}

/// Which end of a range ("48-65") a mention is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeRole {
    Lower,
    Upper,
}

/// One latitude or longitude found in the text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mention {
    /// Byte offsets into the entry text; `raw == text[span]`.
    pub span: Range<usize>,
    pub kind: Axis,
    pub raw: String,
    pub parsed: DmsAngle,
    pub range: Option<RangeRole>,
}

impl Mention {
    /// Extracts again from the raw slice alone and returns the matching angle.
    pub fn reparse(&self, rules: &ExtractionRuleSet) -> Option<DmsAngle> {
        let entry = Entry::new("", "", self.raw.clone());
        extract_mentions(&entry, rules)
            .into_iter()
            .find(|m| m.kind == self.kind && m.range == self.range)
            .map(|m| m.parsed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Degrees,
    Minutes,
    Seconds,
}

#[derive(Debug, Clone)]
struct NumberGroup {
    start: usize,
    end: usize,
    degrees: u32,
    minutes: Option<u32>,
    seconds: Option<u32>,
}

fn digit_run(text: &str, pos: usize) -> usize {
    text[pos..].bytes().take_while(u8::is_ascii_digit).count()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whether the match `[start, end)` ends on a word boundary.
fn ends_at_boundary(text: &str, end: usize) -> bool {
    let last = text[..end].chars().next_back();
    let next = text[end..].chars().next();
    !matches!((last, next), (Some(a), Some(b)) if is_word_char(a) && is_word_char(b))
}

/// Scans degrees, minutes and seconds starting at a digit.
fn scan_group(text: &str, start: usize, rules: &ExtractionRuleSet) -> Option<NumberGroup> {
    let mut pos = start;
    let mut fields: Vec<(Role, u32)> = Vec::new();
    let mut end = start;
    let mut degree_unit_seen = false;
    loop {
        let digits = digit_run(text, pos);
        if digits == 0 {
            break;
        }
        let number_end = pos + digits;
        let value: u32 = text[pos..number_end].parse().ok()?;
        let mut field_end = number_end;
        let mut explicit = None;
        if let Some(c) = rules.unit.captures(&text[number_end..]) {
            let m = c.get(0).unwrap();
            if ends_at_boundary(text, number_end + m.end()) {
                explicit = Some(if c.name("deg").is_some() {
                    Role::Degrees
                } else if c.name("min").is_some() {
                    Role::Minutes
                } else {
                    Role::Seconds
                });
                field_end = number_end + m.end();
            }
        }
        if explicit.is_none()
            && text[number_end..]
                .chars()
                .next()
                .is_some_and(char::is_alphabetic)
        {
            // "2e", "1er": not a measure.
            if fields.is_empty() {
                return None;
            }
            break;
        }
        let role = match (fields.last(), explicit) {
            (None, Some(Role::Degrees) | None) => Role::Degrees,
            (None, Some(_)) => return None,
            (Some(&(prev, _)), Some(r)) if r > prev => r,
            (Some(&(prev, _)), None) if prev < Role::Seconds => {
                if prev == Role::Degrees && degree_unit_seen {
                    break;
                }
                if prev == Role::Degrees {
                    Role::Minutes
                } else {
                    Role::Seconds
                }
            }
            _ => break,
        };
        let max_digits = if role == Role::Degrees { 3 } else { 2 };
        let in_range = role == Role::Degrees || value < 60;
        let is_distance = rules.distance.is_match(&text[field_end..]);
        if digits > max_digits || !in_range || is_distance {
            if fields.is_empty() {
                return None;
            }
            break;
        }
        if role == Role::Degrees && explicit == Some(Role::Degrees) {
            degree_unit_seen = true;
        }
        fields.push((role, value));
        end = field_end;
        if role == Role::Seconds {
            break;
        }
        match rules.separator.find(&text[end..]) {
            Some(sep) if text[end + sep.end()..].starts_with(|c: char| c.is_ascii_digit()) => {
                pos = end + sep.end()
            }
            _ => break,
        }
    }
    let (_, degrees) = *fields.first()?;
    let find = |role| fields.iter().find(|(r, _)| *r == role).map(|(_, v)| *v);
    Some(NumberGroup {
        start,
        end,
        degrees,
        minutes: find(Role::Minutes),
        seconds: find(Role::Seconds),
    })
}

fn group_angle(g: &NumberGroup, hemisphere: Hemisphere) -> Option<DmsAngle> {
    // Seconds without minutes cannot occur: roles only increase.
    DmsAngle::new(g.degrees, g.minutes, g.seconds.map(f64::from), hemisphere).ok()
}

struct KeywordHit {
    start: usize,
    end: usize,
    kind: Axis,
}

fn keyword_hits(text: &str, rules: &ExtractionRuleSet) -> Vec<KeywordHit> {
    rules
        .keyword
        .captures_iter(text)
        .filter_map(|c| {
            let m = c.get(0)?;
            if !ends_at_boundary(text, m.end()) {
                return None;
            }
            let kind = if c.name("lat").is_some() {
                Axis::Latitude
            } else {
                Axis::Longitude
            };
            Some(KeywordHit {
                start: m.start(),
                end: m.end(),
                kind,
            })
        })
        .collect()
}

/// Cardinal word right after `pos`, if it fits the axis.
fn cardinal_after(
    text: &str,
    pos: usize,
    kind: Axis,
    rules: &ExtractionRuleSet,
) -> Option<(Hemisphere, usize)> {
    let c = rules.cardinal_after.captures(&text[pos..])?;
    let word = c.name("c")?;
    let end = pos + word.end();
    if !ends_at_boundary(text, end) {
        return None;
    }
    let h = rules.cardinal_hemisphere(word.as_str())?;
    (h.axis() == kind).then_some((h, end))
}

fn cardinal_within(text: &str, kind: Axis, rules: &ExtractionRuleSet) -> Option<Hemisphere> {
    rules
        .cardinal_any
        .find_iter(text)
        .filter(|m| ends_at_boundary(text, m.end()))
        .filter_map(|m| rules.cardinal_hemisphere(m.as_str()))
        .filter(|h| h.axis() == kind)
        .last()
}

fn floor_char_boundary(text: &str, mut i: usize) -> usize {
    while !text.is_char_boundary(i) {
        i -= 1;
    }
    i
}

fn push_mention(
    out: &mut Vec<Mention>,
    text: &str,
    span: Range<usize>,
    kind: Axis,
    angle: DmsAngle,
    range: Option<RangeRole>,
) {
    out.push(Mention {
        raw: text[span.clone()].to_string(),
        span,
        kind,
        parsed: angle,
        range,
    });
}

/// Finds every latitude and longitude mention, ordered by span start.
pub fn extract_mentions(entry: &Entry, rules: &ExtractionRuleSet) -> Vec<Mention> {
    let text = entry.text.as_str();
    let hits = keyword_hits(text, rules);
    let mut mentions = Vec::new();
    let mut claimed: Vec<Range<usize>> = Vec::new();
    let mut used = vec![false; hits.len()];

    // Number first: "55. degré de latitude".
    const LOOKBACK: usize = 60;
    for (i, hit) in hits.iter().enumerate() {
        let from = floor_char_boundary(text, hit.start.saturating_sub(LOOKBACK));
        let prefix_floor = hits[..i].last().map_or(0, |h| h.end).max(from);
        let candidates = (prefix_floor..hit.start).filter(|&p| {
            text.as_bytes()[p].is_ascii_digit()
                && (p == 0 || !text.as_bytes()[p - 1].is_ascii_digit())
        });
        let found = candidates
            .filter(|&p| !claimed.iter().any(|c| c.contains(&p)))
            .find_map(|p| {
                let g = scan_group(text, p, rules)?;
                rules
                    .backward_connector
                    .is_match(&text[g.end..hit.start])
                    .then_some(g)
            });
        let Some(group) = found else { continue };
        let cardinal = cardinal_after(text, hit.end, hit.kind, rules);
        let hemisphere = cardinal.map_or(hit.kind.default_hemisphere(), |(h, _)| h);
        let Some(angle) = group_angle(&group, hemisphere) else {
            log::debug!(
                "skipping out-of-range {} at {}..{}",
                hit.kind,
                group.start,
                group.end
            );
            continue;
        };
        let end = cardinal.map_or(hit.end, |(_, e)| e);
        push_mention(&mut mentions, text, group.start..end, hit.kind, angle, None);
        claimed.push(group.start..end);
        used[i] = true;
    }

    // Keyword first: "Long. 24. 36.", "longitude est 114", "Long. 48-65."
    for (i, hit) in hits.iter().enumerate() {
        if used[i] || claimed.iter().any(|c| c.contains(&hit.start)) {
            continue;
        }
        let next_keyword = hits.get(i + 1).map_or(text.len(), |h| h.start);
        let Some((offset, _)) = text[hit.end..]
            .char_indices()
            .take(rules.config.window + 1)
            .find(|(_, c)| c.is_ascii_digit())
        else {
            continue;
        };
        let start = hit.end + offset;
        if start >= next_keyword || claimed.iter().any(|c| c.contains(&start)) {
            continue;
        }
        let Some(first) = scan_group(text, start, rules) else {
            log::debug!(
                "unparseable number after {} keyword at {}",
                hit.kind,
                hit.start
            );
            continue;
        };
        let second = rules.range.find(&text[first.end..]).and_then(|sep| {
            let p = first.end + sep.end();
            text[p..]
                .starts_with(|c: char| c.is_ascii_digit())
                .then(|| scan_group(text, p, rules))
                .flatten()
        });
        let last_end = second.as_ref().map_or(first.end, |g| g.end);
        let trailing = cardinal_after(text, last_end, hit.kind, rules);
        let hemisphere = trailing
            .map(|(h, _)| h)
            .or_else(|| cardinal_within(&text[hit.end..start], hit.kind, rules))
            .unwrap_or(hit.kind.default_hemisphere());
        let end = trailing.map_or(last_end, |(_, e)| e);
        let span = hit.start..end;
        match second {
            Some(upper) => {
                let (Some(lo), Some(hi)) = (
                    group_angle(&first, hemisphere),
                    group_angle(&upper, hemisphere),
                ) else {
                    log::debug!("skipping out-of-range {} range at {}", hit.kind, hit.start);
                    continue;
                };
                push_mention(
                    &mut mentions,
                    text,
                    span.clone(),
                    hit.kind,
                    lo,
                    Some(RangeRole::Lower),
                );
                push_mention(
                    &mut mentions,
                    text,
                    span.clone(),
                    hit.kind,
                    hi,
                    Some(RangeRole::Upper),
                );
            }
            None => {
                let Some(angle) = group_angle(&first, hemisphere) else {
                    log::debug!("skipping out-of-range {} at {}", hit.kind, hit.start);
                    continue;
                };
                push_mention(&mut mentions, text, span.clone(), hit.kind, angle, None);
            }
        }
        claimed.push(span);
    }

    mentions.sort_by_key(|m| (m.span.start, m.range.map(|r| r == RangeRole::Upper)));
    mentions
}

/// True when the text holds at least one latitude or longitude with a number.
pub fn classify_has_coordinates(entry: &Entry, rules: &ExtractionRuleSet) -> bool {
    !entry.text.is_empty() && !extract_mentions(entry, rules).is_empty()
}

/// A latitude or longitude, single or ranged, with its text extent.
#[derive(Debug, Clone)]
struct Unit {
    kind: Axis,
    span: Range<usize>,
    lower: DmsAngle,
    upper: Option<DmsAngle>,
}

#[derive(Debug, Default)]
struct Group {
    latitude: Option<Unit>,
    longitude: Option<Unit>,
    span: Range<usize>,
}

impl Group {
    fn slot(&mut self, kind: Axis) -> &mut Option<Unit> {
        match kind {
            Axis::Latitude => &mut self.latitude,
            Axis::Longitude => &mut self.longitude,
        }
    }

    fn is_complete(&self) -> bool {
        self.latitude.is_some() && self.longitude.is_some()
    }

    fn shape(&self) -> Result<(Shape, bool), String> {
        let lat = self.latitude.as_ref();
        let lon = self.longitude.as_ref();
        let ranged =
            lat.is_some_and(|u| u.upper.is_some()) || lon.is_some_and(|u| u.upper.is_some());
        let point = |lat: Option<DmsAngle>, lon: Option<DmsAngle>| {
            CanonicalPoint::new(lat, lon).map_err(|e| e.to_string())
        };
        if !ranged {
            return Ok((
                Shape::Point(point(lat.map(|u| u.lower), lon.map(|u| u.lower))?),
                false,
            ));
        }
        let low = point(lat.map(|u| u.lower), lon.map(|u| u.lower))?;
        let high = point(
            lat.map(|u| u.upper.unwrap_or(u.lower)),
            lon.map(|u| u.upper.unwrap_or(u.lower)),
        )?;
        let (rect, swapped) = Rectangle::ordered(low, high).map_err(|e| e.to_string())?;
        Ok((Shape::Rectangle(rect), swapped))
    }
}

/// Geometry assembled from mentions, with notes on anything uncertain.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub geometry: Option<Geometry>,
    pub diagnostics: Vec<String>,
}

fn units(mentions: &[Mention]) -> Vec<Unit> {
    let mut out: Vec<Unit> = Vec::new();
    for m in mentions {
        if m.range == Some(RangeRole::Upper) {
            if let Some(prev) = out
                .last_mut()
                .filter(|u| u.span == m.span && u.kind == m.kind && u.upper.is_none())
            {
                prev.upper = Some(m.parsed);
                continue;
            }
        }
        out.push(Unit {
            kind: m.kind,
            span: m.span.clone(),
            lower: m.parsed,
            upper: None,
        });
    }
    out
}

/// Pairs adjacent latitude and longitude mentions into points or rectangles,
/// then picks the sequence type from textual cues: source citations first,
/// then subentry markers, then river source/mouth phrasing.
pub fn assemble_geometry(
    mentions: &[Mention],
    entry: &Entry,
    rules: &ExtractionRuleSet,
) -> Assembly {
    let text = entry.text.as_str();
    let mut diagnostics = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    for unit in units(mentions) {
        let joins = groups.last_mut().is_some_and(|g| {
            let slot_free = match unit.kind {
                Axis::Latitude => g.latitude.is_none(),
                Axis::Longitude => g.longitude.is_none(),
            };
            let gap = text.get(g.span.end..unit.span.start).unwrap_or("");
            slot_free
                && gap.chars().count() <= rules.config.pair_gap
                && !rules.citation.is_match(gap)
        });
        if !joins {
            groups.push(Group {
                span: unit.span.clone(),
                ..Group::default()
            });
        }
        let g = groups.last_mut().expect("group exists");
        g.span = g.span.start.min(unit.span.start)..g.span.end.max(unit.span.end);
        let kind = unit.kind;
        *g.slot(kind) = Some(unit);
    }

    let mut shapes = Vec::new();
    for g in &groups {
        match g.shape() {
            Ok((shape, swapped)) => {
                if swapped {
                    diagnostics.push(format!(
                        "reordered rectangle corners at {}..{}",
                        g.span.start, g.span.end
                    ));
                }
                shapes.push((shape, g));
            }
            Err(e) => diagnostics.push(format!(
                "dropped group at {}..{}: {e}",
                g.span.start, g.span.end
            )),
        }
    }

    let geometry = match shapes.len() {
        0 => None,
        1 => Some(match shapes[0].0 {
            Shape::Point(p) => Geometry::Point(p),
            Shape::Rectangle(r) => Geometry::Rectangle(r),
        }),
        _ => Some(sequence_geometry(&shapes, entry, rules, &mut diagnostics)),
    };
    Assembly {
        geometry,
        diagnostics,
    }
}

fn headword_key(headword: &str) -> Option<String> {
    let first = headword
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .split(|c: char| c.is_whitespace() || c == ',' || c == '(')
        .next()?;
    (first.chars().count() >= 2).then(|| fold_accents(first).to_lowercase())
}

fn mentions_headword(gap: &str, key: &str) -> bool {
    let folded = fold_accents(gap).to_lowercase();
    folded.match_indices(key).any(|(i, _)| {
        let before = folded[..i].chars().next_back();
        let after = folded[i + key.len()..].chars().next();
        !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
    })
}

fn sequence_geometry(
    shapes: &[(Shape, &Group)],
    entry: &Entry,
    rules: &ExtractionRuleSet,
    diagnostics: &mut Vec<String>,
) -> Geometry {
    let text = entry.text.as_str();
    let items: Vec<Shape> = shapes.iter().map(|(s, _)| *s).collect();
    let mut gaps: Vec<&str> = shapes
        .windows(2)
        .map(|w| text.get(w[0].1.span.end..w[1].1.span.start).unwrap_or(""))
        .collect();
    let tail_start = shapes.last().map_or(text.len(), |(_, g)| g.span.end);
    let tail_end = floor_char_boundary(text, (tail_start + rules.config.window).min(text.len()));
    let tail = text.get(tail_start..tail_end).unwrap_or("");

    let cited = gaps
        .iter()
        .chain(std::iter::once(&tail))
        .any(|g| rules.citation.is_match(g));
    if cited {
        return Geometry::multi_source(items).expect("at least two items");
    }
    let headword = headword_key(&entry.headword);
    gaps.retain(|g| !g.is_empty());
    let subentry = gaps.iter().any(|g| {
        rules.subentry.is_match(g)
            || headword
                .as_deref()
                .is_some_and(|key| mentions_headword(g, key))
    });
    if subentry {
        return Geometry::sub_entries(items).expect("at least two items");
    }
    let all_points: Option<Vec<CanonicalPoint>> = items
        .iter()
        .map(|s| match s {
            Shape::Point(p) => Some(*p),
            Shape::Rectangle(_) => None,
        })
        .collect();
    if let Some(points) = all_points.as_ref().filter(|_| rules.river.is_match(text)) {
        return Geometry::poly_chain(points.clone()).expect("at least two points");
    }

    let complete: Vec<&(Shape, &Group)> = shapes.iter().filter(|(_, g)| g.is_complete()).collect();
    if let [(only, _)] = complete.as_slice() {
        diagnostics.push(format!(
            "AssemblyAmbiguity: {} groups without sequence cue; kept the only complete one",
            shapes.len()
        ));
        return match only {
            Shape::Point(p) => Geometry::Point(*p),
            Shape::Rectangle(r) => Geometry::Rectangle(*r),
        };
    }
    diagnostics.push(format!(
        "AssemblyAmbiguity: {} groups without sequence cue; assumed multiple sources",
        shapes.len()
    ));
    Geometry::multi_source(items).expect("at least two items")
}

/// Named prime meridians; an empty list means the implicit Ferro meridian.
pub fn detect_meridian(entry: &Entry, rules: &ExtractionRuleSet) -> Vec<MeridianRef> {
    let text = entry.text.as_str();
    let mut found: Vec<(usize, MeridianRef)> = Vec::new();
    for m in rules.meridian.find_iter(text) {
        let end = floor_char_boundary(
            text,
            (m.end() + rules.config.meridian_window).min(text.len()),
        );
        let window = &text[m.end()..end];
        for (re, meridian) in &rules.cities {
            if let Some(city) = re.find(window) {
                found.push((m.end() + city.start(), meridian.clone()));
            }
        }
    }
    found.sort_by_key(|(pos, _)| *pos);
    let mut out: Vec<MeridianRef> = Vec::new();
    for (_, m) in found {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// Everything the extractor produces for one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub has_coordinates: bool,
    pub mentions: Vec<Mention>,
    pub geometry: Option<Geometry>,
    pub meridians: Vec<MeridianRef>,
    pub diagnostics: Vec<String>,
}

/// classify, extract, assemble and detect meridians in one pass.
pub fn extract_entry(entry: &Entry, rules: &ExtractionRuleSet) -> Extraction {
    let mentions = extract_mentions(entry, rules);
    let assembly = assemble_geometry(&mentions, entry, rules);
    Extraction {
        has_coordinates: !mentions.is_empty(),
        geometry: assembly.geometry,
        meridians: detect_meridian(entry, rules),
        diagnostics: assembly.diagnostics,
        mentions,
    }
}
