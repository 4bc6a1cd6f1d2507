//! Coordinate extraction, encoding, conversion and scoring for historical
//! gazetteer entries.

pub mod cli;
pub mod codec;
pub mod dataset;
pub mod extractor;
pub mod geodesy;
pub mod metrics;
pub mod model;

pub use codec::{
    decode_geometry, encode_geometry, flatten_geometry, format_canonical, parse_canonical,
    CodecError,
};
pub use extractor::{extract_entry, ExtractionRuleSet, Mention};
pub use model::{
    Axis, CanonicalPoint, DmsAngle, Entry, Geometry, Hemisphere, MeridianRef, PrecisionLevel,
};
