//! Canonical coordinate strings and the nested-list geometry encoding.
//!
//! A canonical string is one or two parts separated by single spaces, the
//! latitude part first:
//!
//! ```text
//! canonical := part | part " " part
//! part      := deg [" " min "'" [" " sec "\""]] " " hemi
//! ```
//!
//! Geometries are encoded as lists of lists of canonical strings, always two
//! levels deep. A singleton is a point, a pair is a rectangle, and sequences
//! start with a prefix list (`pchain`, `subart`, `multsrc`, `misc`).

use std::fmt;

use serde_json::Value;
use thiserror::Error;

use crate::model::{
    Axis, CanonicalPoint, DmsAngle, Geometry, GeometryError, Hemisphere, RangeError, Rectangle,
    Shape,
};

pub const PREFIX_POLY_CHAIN: &str = "pchain";
pub const PREFIX_SUB_ENTRIES: &str = "subart";
pub const PREFIX_MULTI_SOURCE: &str = "multsrc";
pub const PREFIX_MISC: &str = "misc";

const PREFIXES: [&str; 4] = [
    PREFIX_POLY_CHAIN,
    PREFIX_SUB_ENTRIES,
    PREFIX_MULTI_SOURCE,
    PREFIX_MISC,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("empty input")]
    Empty,
    #[error("at character {position}: expected {expected}, found {found}")]
    Grammar {
        position: usize,
        expected: &'static str,
        found: String,
    },
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error("unknown sequence prefix '{0}'")]
    UnknownPrefix(String),
    #[error("encoding must be a list of lists of strings: {0}")]
    Depth(String),
    #[error("{0}")]
    Arity(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("at character {position}: {message}")]
    Literal { position: usize, message: String },
}

/// Replaces typographic primes and quotes by the ASCII apostrophe and
/// double quote used in canonical strings. Nothing else is touched.
pub fn normalize_canonical(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '′' | '’' | '‘' | 'ʹ' => '\'',
            '″' | '”' | '“' | 'ʺ' => '"',
            other => other,
        })
        .collect()
}

struct Token<'a> {
    text: &'a str,
    /// Character offset of the token in the input.
    position: usize,
}

fn tokenize(s: &str) -> Result<Vec<Token<'_>>, CodecError> {
    let mut tokens = Vec::new();
    let mut position = 0;
    for piece in s.split(' ') {
        if piece.is_empty() {
            return Err(CodecError::Grammar {
                position,
                expected: "a token separated by exactly one space",
                found: "space".into(),
            });
        }
        tokens.push(Token {
            text: piece,
            position,
        });
        position += piece.chars().count() + 1;
    }
    Ok(tokens)
}

fn grammar(token: &Token<'_>, expected: &'static str) -> CodecError {
    CodecError::Grammar {
        position: token.position,
        expected,
        found: format!("'{}'", token.text),
    }
}

/// Integer without sign or superfluous leading zeros.
fn parse_integer(
    token: &Token<'_>,
    digits: &str,
    expected: &'static str,
) -> Result<u32, CodecError> {
    let well_formed = !digits.is_empty()
        && digits.bytes().all(|b| b.is_ascii_digit())
        && !(digits.len() > 1 && digits.starts_with('0'));
    if !well_formed {
        return Err(grammar(token, expected));
    }
    digits.parse::<u32>().map_err(|_| grammar(token, expected))
}

fn parse_seconds(token: &Token<'_>, digits: &str) -> Result<f64, CodecError> {
    const EXPECTED: &str = "seconds such as 20\"";
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    parse_integer(token, int, EXPECTED)?;
    if let Some(f) = frac {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return Err(grammar(token, EXPECTED));
        }
    }
    let value: f64 = digits.parse().map_err(|_| grammar(token, EXPECTED))?;
    // Only the shortest form is canonical ("14.5", never "14.50").
    if format_seconds(value) != digits {
        return Err(grammar(token, "seconds in shortest form"));
    }
    Ok(value)
}

fn format_seconds(value: f64) -> String {
    if value.fract() == 0.0 {
        format!("{}", value as u64)
    } else {
        format!("{value}")
    }
}

fn parse_part<'a>(
    tokens: &mut std::iter::Peekable<std::slice::Iter<'a, Token<'a>>>,
    end: usize,
) -> Result<DmsAngle, CodecError> {
    let missing = |expected| CodecError::Grammar {
        position: end,
        expected,
        found: "end of input".into(),
    };
    let deg_tok = tokens.next().ok_or_else(|| missing("degrees"))?;
    let degrees = parse_integer(deg_tok, deg_tok.text, "degrees")?;

    let mut minutes = None;
    let mut seconds = None;
    let mut next = tokens
        .next()
        .ok_or_else(|| missing("minutes or hemisphere"))?;
    if let Some(digits) = next.text.strip_suffix('\'') {
        minutes = Some(parse_integer(next, digits, "minutes such as 10'")?);
        next = tokens
            .next()
            .ok_or_else(|| missing("seconds or hemisphere"))?;
        if let Some(digits) = next.text.strip_suffix('"') {
            seconds = Some(parse_seconds(next, digits)?);
            next = tokens.next().ok_or_else(|| missing("hemisphere"))?;
        }
    }
    let mut chars = next.text.chars();
    let hemisphere = match (chars.next().and_then(Hemisphere::from_char), chars.next()) {
        (Some(h), None) => h,
        _ => return Err(grammar(next, "hemisphere N, S, E or W")),
    };
    Ok(DmsAngle::new(degrees, minutes, seconds, hemisphere)?)
}

/// Parses a canonical string into a point.
///
/// Typographic primes are accepted and normalized; any other deviation from
/// the grammar is an error, so `format_canonical(parse_canonical(s)?)` always
/// equals `normalize_canonical(s)`.
pub fn parse_canonical(s: &str) -> Result<CanonicalPoint, CodecError> {
    if s.is_empty() {
        return Err(CodecError::Empty);
    }
    let normalized = normalize_canonical(s);
    let tokens = tokenize(&normalized)?;
    let end = normalized.chars().count();
    let mut iter = tokens.iter().peekable();

    let first = parse_part(&mut iter, end)?;
    let second = if iter.peek().is_some() {
        let start = iter.peek().map(|t| t.position).unwrap_or(end);
        let part = parse_part(&mut iter, end)?;
        if first.axis() != Axis::Latitude || part.axis() != Axis::Longitude {
            return Err(CodecError::Grammar {
                position: start,
                expected: "latitude part (N/S) followed by longitude part (E/W)",
                found: format!("{} then {}", first.hemisphere(), part.hemisphere()),
            });
        }
        Some(part)
    } else {
        None
    };
    if let Some(extra) = iter.next() {
        return Err(grammar(extra, "end of input"));
    }

    let point = match (first.axis(), second) {
        (Axis::Latitude, lon) => CanonicalPoint::new(Some(first), lon)?,
        (Axis::Longitude, _) => CanonicalPoint::new(None, Some(first))?,
    };
    Ok(point)
}

fn format_angle(a: &DmsAngle, out: &mut String) {
    use fmt::Write;
    let _ = write!(out, "{}", a.degrees());
    if let Some(m) = a.minutes() {
        let _ = write!(out, " {m}'");
        if let Some(s) = a.seconds() {
            let _ = write!(out, " {}\"", format_seconds(s));
        }
    }
    let _ = write!(out, " {}", a.hemisphere());
}

/// Renders a point as its canonical string.
pub fn format_canonical(p: &CanonicalPoint) -> String {
    let mut out = String::new();
    if let Some(lat) = p.latitude() {
        format_angle(lat, &mut out);
    }
    if let Some(lon) = p.longitude() {
        if !out.is_empty() {
            out.push(' ');
        }
        format_angle(lon, &mut out);
    }
    out
}

/// Nested-list encoding: a list of lists of canonical strings.
pub type Encoding = Vec<Vec<String>>;

fn encode_shape(shape: &Shape) -> Vec<String> {
    match shape {
        Shape::Point(p) => vec![format_canonical(p)],
        Shape::Rectangle(r) => vec![format_canonical(r.min()), format_canonical(r.max())],
    }
}

pub fn encode_geometry(g: &Geometry) -> Encoding {
    let prefixed = |prefix: &str, items: Vec<Vec<String>>| {
        let mut out = vec![vec![prefix.to_string()]];
        out.extend(items);
        out
    };
    match g {
        Geometry::Point(p) => vec![vec![format_canonical(p)]],
        Geometry::Rectangle(r) => vec![vec![format_canonical(r.min()), format_canonical(r.max())]],
        Geometry::PolyChain(points) => prefixed(
            PREFIX_POLY_CHAIN,
            points.iter().map(|p| vec![format_canonical(p)]).collect(),
        ),
        Geometry::SubEntries(items) => {
            prefixed(PREFIX_SUB_ENTRIES, items.iter().map(encode_shape).collect())
        }
        Geometry::MultiSource(items) => prefixed(
            PREFIX_MULTI_SOURCE,
            items.iter().map(encode_shape).collect(),
        ),
        Geometry::Misc(items) => prefixed(
            PREFIX_MISC,
            items
                .iter()
                .map(|points| points.iter().map(format_canonical).collect())
                .collect(),
        ),
    }
}

/// Result of decoding, with the number of rectangles whose corners had to
/// be reordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub geometry: Geometry,
    pub reordered_rectangles: usize,
}

fn decode_shape(item: &[String], reordered: &mut usize) -> Result<Shape, CodecError> {
    match item {
        [single] => Ok(Shape::Point(parse_canonical(single)?)),
        [a, b] => {
            let (rect, swapped) = Rectangle::ordered(parse_canonical(a)?, parse_canonical(b)?)?;
            if swapped {
                *reordered += 1;
            }
            Ok(Shape::Rectangle(rect))
        }
        other => Err(CodecError::Arity(format!(
            "expected a point (1 string) or a rectangle (2 strings), got {} strings",
            other.len()
        ))),
    }
}

fn is_prefix_like(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphabetic() || c == '_')
}

/// Decodes the nested-list encoding and reports reordered rectangles.
pub fn decode_geometry_detailed(nested: &[Vec<String>]) -> Result<Decoded, CodecError> {
    let first = nested.first().ok_or(CodecError::Empty)?;
    if nested.iter().any(Vec::is_empty) {
        return Err(CodecError::Empty);
    }
    let mut reordered = 0;

    let prefix = match first.as_slice() {
        [token] if PREFIXES.contains(&token.as_str()) => Some(token.as_str()),
        [token] if is_prefix_like(token) => return Err(CodecError::UnknownPrefix(token.clone())),
        _ => None,
    };

    let geometry = match prefix {
        None => {
            if nested.len() != 1 {
                return Err(CodecError::Arity(format!(
                    "{} lists without a sequence prefix",
                    nested.len()
                )));
            }
            match decode_shape(first, &mut reordered)? {
                Shape::Point(p) => Geometry::Point(p),
                Shape::Rectangle(r) => Geometry::Rectangle(r),
            }
        }
        Some(prefix) => {
            let rest = &nested[1..];
            match prefix {
                PREFIX_POLY_CHAIN => {
                    let points = rest
                        .iter()
                        .map(|item| match item.as_slice() {
                            [single] => parse_canonical(single),
                            other => Err(CodecError::Arity(format!(
                                "polygonal chain items are single points, got {} strings",
                                other.len()
                            ))),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Geometry::poly_chain(points)?
                }
                PREFIX_SUB_ENTRIES | PREFIX_MULTI_SOURCE => {
                    let shapes = rest
                        .iter()
                        .map(|item| decode_shape(item, &mut reordered))
                        .collect::<Result<Vec<_>, _>>()?;
                    if prefix == PREFIX_SUB_ENTRIES {
                        Geometry::sub_entries(shapes)?
                    } else {
                        Geometry::multi_source(shapes)?
                    }
                }
                _ => {
                    let items = rest
                        .iter()
                        .map(|item| {
                            item.iter()
                                .map(|s| parse_canonical(s))
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Geometry::misc(items)?
                }
            }
        }
    };
    if reordered > 0 {
        log::warn!("reordered corners of {reordered} rectangle(s) to min/max order");
    }
    Ok(Decoded {
        geometry,
        reordered_rectangles: reordered,
    })
}

/// Decodes the nested-list encoding into a geometry.
pub fn decode_geometry(nested: &[Vec<String>]) -> Result<Geometry, CodecError> {
    decode_geometry_detailed(nested).map(|d| d.geometry)
}

/// Checks that a JSON value is exactly two levels of lists over strings.
pub fn encoding_from_json(value: &Value) -> Result<Encoding, CodecError> {
    let outer = value.as_array().ok_or_else(|| {
        CodecError::Depth(format!("expected an outer list, got {}", json_kind(value)))
    })?;
    outer
        .iter()
        .map(|inner| {
            let items = inner.as_array().ok_or_else(|| {
                CodecError::Depth(format!("expected an inner list, got {}", json_kind(inner)))
            })?;
            items
                .iter()
                .map(|s| {
                    s.as_str().map(str::to_owned).ok_or_else(|| {
                        CodecError::Depth(format!(
                            "expected a string inside an inner list, got {}",
                            json_kind(s)
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

pub fn encoding_to_json(encoding: &[Vec<String>]) -> Value {
    Value::Array(
        encoding
            .iter()
            .map(|inner| Value::Array(inner.iter().cloned().map(Value::String).collect()))
            .collect(),
    )
}

fn json_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "a list",
        Value::Object(_) => "an object",
    }
}

/// Quotes a string the way a Python list repr does: single quotes unless the
/// string holds a single quote and no double quote.
fn quote_literal(s: &str, out: &mut String) {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    out.push(quote);
    for c in s.chars() {
        if c == '\\' || c == quote {
            out.push('\\');
        }
        out.push(c);
    }
    out.push(quote);
}

/// Renders an encoding in the printed list-literal form, e.g.
/// `[['6 N 48 E', '20 N 65 E']]` or `[["52 10' N 24 36' E"]]`.
///
/// This is also the flattened single-string form used for scoring.
pub fn render_literal(encoding: &[Vec<String>]) -> String {
    let mut out = String::from("[");
    for (i, inner) in encoding.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for (j, s) in inner.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            quote_literal(s, &mut out);
        }
        out.push(']');
    }
    out.push(']');
    out
}

/// Flattened single-string form of a geometry.
pub fn flatten_geometry(g: &Geometry) -> String {
    render_literal(&encode_geometry(g))
}

/// Parses a printed list literal. Both quote styles and backslash escapes
/// are accepted, and whitespace between tokens is free.
pub fn parse_literal(s: &str) -> Result<Encoding, CodecError> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let err = |pos: usize, message: &str| CodecError::Literal {
        position: pos,
        message: message.to_string(),
    };
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    let expect = |pos: &mut usize, c: char| -> Result<(), CodecError> {
        skip_ws(pos);
        if chars.get(*pos) == Some(&c) {
            *pos += 1;
            Ok(())
        } else {
            Err(err(*pos, &format!("expected '{c}'")))
        }
    };

    let mut outer = Vec::new();
    expect(&mut pos, '[')?;
    skip_ws(&mut pos);
    if chars.get(pos) == Some(&']') {
        pos += 1;
    } else {
        loop {
            expect(&mut pos, '[')?;
            let mut inner = Vec::new();
            skip_ws(&mut pos);
            if chars.get(pos) == Some(&']') {
                pos += 1;
            } else {
                loop {
                    skip_ws(&mut pos);
                    let quote = match chars.get(pos) {
                        Some(&q @ ('\'' | '"')) => q,
                        Some('[') => {
                            return Err(CodecError::Depth(
                                "lists nested deeper than two levels".into(),
                            ))
                        }
                        _ => return Err(err(pos, "expected a quoted string")),
                    };
                    pos += 1;
                    let mut value = String::new();
                    loop {
                        match chars.get(pos) {
                            None => return Err(err(pos, "unterminated string")),
                            Some('\\') => {
                                let escaped = chars
                                    .get(pos + 1)
                                    .ok_or_else(|| err(pos, "dangling escape"))?;
                                value.push(*escaped);
                                pos += 2;
                            }
                            Some(&c) if c == quote => {
                                pos += 1;
                                break;
                            }
                            Some(&c) => {
                                value.push(c);
                                pos += 1;
                            }
                        }
                    }
                    inner.push(value);
                    skip_ws(&mut pos);
                    match chars.get(pos) {
                        Some(',') => pos += 1,
                        Some(']') => {
                            pos += 1;
                            break;
                        }
                        _ => return Err(err(pos, "expected ',' or ']'")),
                    }
                }
            }
            outer.push(inner);
            skip_ws(&mut pos);
            match chars.get(pos) {
                Some(',') => pos += 1,
                Some(']') => {
                    pos += 1;
                    break;
                }
                _ => return Err(err(pos, "expected ',' or ']'")),
            }
        }
    }
    skip_ws(&mut pos);
    if pos != chars.len() {
        return Err(err(pos, "trailing characters"));
    }
    Ok(outer)
}
