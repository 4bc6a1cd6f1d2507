//! Browser bindings. Every function returns a JSON string so the page can
//! `JSON.parse` it and native tests can inspect it.

use histcoord::codec::{
    decode_geometry, flatten_geometry, normalize_canonical, parse_canonical, parse_literal,
};
use histcoord::extractor::{extract_entry, ExtractionRuleSet};
use histcoord::geodesy::{convert_geometry, convert_point, MeridianOffsetTable};
use histcoord::{Axis, Entry, MeridianRef};
use std::sync::LazyLock;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

static RULES: LazyLock<ExtractionRuleSet> = LazyLock::new(ExtractionRuleSet::default);

fn table(rounded: bool) -> MeridianOffsetTable {
    if rounded {
        MeridianOffsetTable::rounded()
    } else {
        MeridianOffsetTable::exact()
    }
}

fn failure(message: impl ToString) -> String {
    json!({"ok": false, "error": message.to_string()}).to_string()
}

/// Parses one canonical point string and converts it from Ferro.
#[wasm_bindgen]
pub fn inspect_point(input: &str, rounded: bool) -> String {
    let point = match parse_canonical(input) {
        Ok(p) => p,
        Err(e) => return failure(e),
    };
    let part = |axis| {
        point.part(axis).map(|a| {
            json!({
                "degrees": a.degrees(),
                "minutes": a.minutes(),
                "seconds": a.seconds(),
                "hemisphere": a.hemisphere().as_char().to_string(),
                "precision": a.precision().as_str(),
                "decimal": a.to_decimal(),
            })
        })
    };
    let modern = convert_point(&point, &MeridianRef::Ferro, &table(rounded))
        .expect("Ferro offset is always known");
    json!({
        "ok": true,
        "normalized": normalize_canonical(input),
        "latitude": part(Axis::Latitude),
        "longitude": part(Axis::Longitude),
        "modern": modern,
    })
    .to_string()
}

/// Runs the rule-based extractor over an article.
#[wasm_bindgen]
pub fn extract_text(headword: &str, text: &str, rounded: bool) -> String {
    let entry = Entry::new("web", headword, text);
    let x = extract_entry(&entry, &RULES);
    let mentions: Vec<Value> = x
        .mentions
        .iter()
        .map(|m| {
            json!({
                "start": text[..m.span.start].chars().count(),
                "end": text[..m.span.end].chars().count(),
                "kind": m.kind.to_string(),
                "raw": m.raw,
                "range": m.range,
            })
        })
        .collect();
    let modern =
        x.geometry.as_ref().map(
            |g| match convert_geometry(g, &x.meridians, &table(rounded)) {
                Ok(c) => serde_json::to_value(c).expect("serializes"),
                Err(e) => json!({"error": e.to_string()}),
            },
        );
    json!({
        "ok": true,
        "has_coordinates": x.has_coordinates,
        "prediction": x.geometry.as_ref().map(flatten_geometry),
        "mentions": mentions,
        "meridians": x.meridians.iter().map(MeridianRef::label).collect::<Vec<_>>(),
        "modern": modern,
        "diagnostics": x.diagnostics,
    })
    .to_string()
}

/// Checks a nested-list annotation and returns its normalized form.
#[wasm_bindgen]
pub fn check_annotation(literal: &str) -> String {
    match parse_literal(literal).and_then(|e| decode_geometry(&e)) {
        Ok(g) => json!({
            "ok": true,
            "kind": g.kind(),
            "normalized": flatten_geometry(&g),
            "unchanged": flatten_geometry(&g) == literal.trim(),
        })
        .to_string(),
        Err(e) => failure(e),
    }
}
