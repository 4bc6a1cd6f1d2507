//! Conversion of historical longitudes (Ferro-referenced, 0 to 360 eastwards)
//! to modern Greenwich-referenced decimal degrees, and attachment of points
//! to labelled modern regions.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::model::{CanonicalPoint, Geometry, MeridianRef, ModernPoint, Rectangle, Shape};

/// Paris lies 2°20'14.025" east of Greenwich.
pub const PARIS_EAST_OF_GREENWICH: f64 = 2.0 + 20.0 / 60.0 + 14.025 / 3600.0;
/// Ferro was fixed 20° west of Paris.
pub const FERRO_WEST_OF_PARIS: f64 = 20.0;
/// Degrees subtracted from a Ferro longitude to reference it to Greenwich.
pub const FERRO_OFFSET: f64 = FERRO_WEST_OF_PARIS - PARIS_EAST_OF_GREENWICH;
/// The rounded offset used in practice for published figures.
pub const FERRO_OFFSET_ROUNDED: f64 = 17.66;

/// Mean Earth radius for great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesyError {
    #[error("no offset known for meridian '{0}'; longitude left unconverted")]
    UnsupportedMeridian(MeridianRef),
    #[error("entry names several meridians ({0}); cannot choose one")]
    AmbiguousMeridian(String),
    #[error("region set is empty")]
    EmptyRegionSet,
    #[error("invalid region data: {0}")]
    InvalidRegion(String),
}

/// Offsets, in decimal degrees, subtracted from a historical longitude to
/// obtain a Greenwich longitude. Meridians without an entry are refused.
#[derive(Debug, Clone, PartialEq)]
pub struct MeridianOffsetTable {
    offsets: BTreeMap<MeridianRef, f64>,
}

impl Default for MeridianOffsetTable {
    fn default() -> Self {
        Self::exact()
    }
}

impl MeridianOffsetTable {
    /// Ferro and Paris with the exact Paris-Greenwich difference.
    pub fn exact() -> Self {
        let mut offsets = BTreeMap::new();
        offsets.insert(MeridianRef::Ferro, FERRO_OFFSET);
        // Paris is east of Greenwich: subtracting a negative offset adds it.
        offsets.insert(MeridianRef::Paris, -PARIS_EAST_OF_GREENWICH);
        MeridianOffsetTable { offsets }
    }

    /// Same as [`exact`](Self::exact) but Ferro uses 17.66.
    pub fn rounded() -> Self {
        let mut table = Self::exact();
        table
            .offsets
            .insert(MeridianRef::Ferro, FERRO_OFFSET_ROUNDED);
        table
    }

    pub fn set(&mut self, meridian: MeridianRef, offset: f64) {
        self.offsets.insert(meridian, offset);
    }

    pub fn offset(&self, meridian: &MeridianRef) -> Result<f64, GeodesyError> {
        self.offsets
            .get(meridian)
            .copied()
            .ok_or_else(|| GeodesyError::UnsupportedMeridian(meridian.clone()))
    }
}

/// Maps any longitude into (-180, 180].
pub fn wrap_longitude(x: f64) -> f64 {
    let r = x.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// The meridian an entry's longitudes refer to; Ferro when none is named.
pub fn resolve_meridian(meridians: &[MeridianRef]) -> Result<MeridianRef, GeodesyError> {
    match meridians {
        [] => Ok(MeridianRef::Ferro),
        [first, rest @ ..] if rest.iter().all(|m| m == first) => Ok(first.clone()),
        many => Err(GeodesyError::AmbiguousMeridian(
            many.iter()
                .map(MeridianRef::label)
                .collect::<Vec<_>>()
                .join(", "),
        )),
    }
}

/// A converted point; parts absent from the source stay absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvertedPoint {
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

impl ConvertedPoint {
    pub fn complete(&self) -> Option<ModernPoint> {
        ModernPoint::new(self.latitude?, self.longitude?).ok()
    }
}

pub fn convert_point(
    p: &CanonicalPoint,
    meridian: &MeridianRef,
    table: &MeridianOffsetTable,
) -> Result<ConvertedPoint, GeodesyError> {
    let offset = table.offset(meridian)?;
    Ok(ConvertedPoint {
        latitude: p.latitude().map(|a| a.to_decimal()),
        longitude: p
            .longitude()
            .map(|a| wrap_longitude(a.to_decimal() - offset)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvertedShape {
    Point(ConvertedPoint),
    Rectangle {
        min: ConvertedPoint,
        max: ConvertedPoint,
        /// The western edge lies east of the eastern edge after wrapping.
        crosses_antimeridian: bool,
    },
}

/// Geometry over converted points, mirroring [`Geometry`] variant by variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "items", rename_all = "snake_case")]
pub enum ConvertedGeometry {
    Point(ConvertedPoint),
    Rectangle(ConvertedShape),
    PolyChain(Vec<ConvertedPoint>),
    SubEntries(Vec<ConvertedShape>),
    MultiSource(Vec<ConvertedShape>),
    Misc(Vec<Vec<ConvertedPoint>>),
}

impl ConvertedGeometry {
    pub fn rectangles_crossing_antimeridian(&self) -> usize {
        let crossing = |s: &ConvertedShape| {
            matches!(
                s,
                ConvertedShape::Rectangle {
                    crosses_antimeridian: true,
                    ..
                }
            )
        };
        match self {
            ConvertedGeometry::Rectangle(s) => usize::from(crossing(s)),
            ConvertedGeometry::SubEntries(items) | ConvertedGeometry::MultiSource(items) => {
                items.iter().filter(|s| crossing(s)).count()
            }
            _ => 0,
        }
    }
}

fn convert_rectangle(
    r: &Rectangle,
    meridian: &MeridianRef,
    table: &MeridianOffsetTable,
) -> Result<ConvertedShape, GeodesyError> {
    let min = convert_point(r.min(), meridian, table)?;
    let max = convert_point(r.max(), meridian, table)?;
    let crosses_antimeridian =
        matches!((min.longitude, max.longitude), (Some(w), Some(e)) if w > e);
    if crosses_antimeridian {
        log::warn!("rectangle crosses the antimeridian after conversion");
    }
    Ok(ConvertedShape::Rectangle {
        min,
        max,
        crosses_antimeridian,
    })
}

fn convert_shape(
    s: &Shape,
    meridian: &MeridianRef,
    table: &MeridianOffsetTable,
) -> Result<ConvertedShape, GeodesyError> {
    match s {
        Shape::Point(p) => convert_point(p, meridian, table).map(ConvertedShape::Point),
        Shape::Rectangle(r) => convert_rectangle(r, meridian, table),
    }
}

/// Applies [`convert_point`] to every point, preserving variant, arity and order.
pub fn convert_geometry(
    g: &Geometry,
    meridians: &[MeridianRef],
    table: &MeridianOffsetTable,
) -> Result<ConvertedGeometry, GeodesyError> {
    let meridian = resolve_meridian(meridians)?;
    let m = &meridian;
    let points = |ps: &[CanonicalPoint]| {
        ps.iter()
            .map(|p| convert_point(p, m, table))
            .collect::<Result<Vec<_>, _>>()
    };
    let shapes = |ss: &[Shape]| {
        ss.iter()
            .map(|s| convert_shape(s, m, table))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(match g {
        Geometry::Point(p) => ConvertedGeometry::Point(convert_point(p, m, table)?),
        Geometry::Rectangle(r) => ConvertedGeometry::Rectangle(convert_rectangle(r, m, table)?),
        Geometry::PolyChain(ps) => ConvertedGeometry::PolyChain(points(ps)?),
        Geometry::SubEntries(ss) => ConvertedGeometry::SubEntries(shapes(ss)?),
        Geometry::MultiSource(ss) => ConvertedGeometry::MultiSource(shapes(ss)?),
        Geometry::Misc(items) => ConvertedGeometry::Misc(
            items
                .iter()
                .map(|ps| points(ps))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    })
}

/// Great-circle distance in kilometres (spherical haversine).
pub fn haversine_km(a: &ModernPoint, b: &ModernPoint) -> f64 {
    let (phi1, phi2) = (a.latitude().to_radians(), b.latitude().to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.longitude() - a.longitude()).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Closed ring of (longitude, latitude) vertices.
pub type Ring = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring) -> Self {
        Polygon {
            exterior,
            holes: Vec::new(),
        }
    }

    /// Axis-aligned box over latitude and longitude ranges.
    pub fn lat_lon_box(lat: (f64, f64), lon: (f64, f64)) -> Self {
        Polygon::new(vec![
            (lon.0, lat.0),
            (lon.1, lat.0),
            (lon.1, lat.1),
            (lon.0, lat.1),
            (lon.0, lat.0),
        ])
    }

    pub fn contains(&self, p: &ModernPoint) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    fn vertices(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.exterior.iter().chain(self.holes.iter().flatten())
    }
}

/// Even-odd ray casting in the longitude/latitude plane.
fn ring_contains(ring: &[(f64, f64)], p: &ModernPoint) -> bool {
    let (x, y) = (p.longitude(), p.latitude());
    let mut inside = false;
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = ring[i];
        let (xj, yj) = ring[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Labelled polygons. Polygons sharing a label form one region.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionSet {
    regions: BTreeMap<String, Vec<Polygon>>,
}

impl RegionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, polygon: Polygon) {
        self.regions.entry(label.into()).or_default().push(polygon);
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    /// Reads a GeoJSON FeatureCollection of Polygon and MultiPolygon features.
    pub fn from_geojson(value: &Value, label_property: &str) -> Result<Self, GeodesyError> {
        let invalid = |msg: String| GeodesyError::InvalidRegion(msg);
        let features = value
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| {
                invalid("expected a FeatureCollection with a 'features' array".into())
            })?;
        let mut set = RegionSet::new();
        for (i, feature) in features.iter().enumerate() {
            let label = match feature
                .get("properties")
                .and_then(|p| p.get(label_property))
            {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => {
                    return Err(invalid(format!(
                        "feature {i} has no '{label_property}' property"
                    )))
                }
            };
            let geometry = feature
                .get("geometry")
                .ok_or_else(|| invalid(format!("feature {i} has no geometry")))?;
            let coords = geometry.get("coordinates");
            match geometry.get("type").and_then(Value::as_str) {
                Some("Polygon") => set.insert(label, parse_polygon(coords, i)?),
                Some("MultiPolygon") => {
                    let polys = coords.and_then(Value::as_array).ok_or_else(|| {
                        invalid(format!("feature {i}: MultiPolygon without coordinates"))
                    })?;
                    for poly in polys {
                        set.insert(label.clone(), parse_polygon(Some(poly), i)?);
                    }
                }
                other => {
                    return Err(invalid(format!(
                        "feature {i}: unsupported geometry type {}",
                        other.unwrap_or("(missing)")
                    )))
                }
            }
        }
        Ok(set)
    }
}

fn parse_polygon(coords: Option<&Value>, feature: usize) -> Result<Polygon, GeodesyError> {
    let invalid = |msg: &str| GeodesyError::InvalidRegion(format!("feature {feature}: {msg}"));
    let rings = coords
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("polygon without rings"))?;
    let mut parsed = rings.iter().map(|ring| {
        ring.as_array()
            .ok_or_else(|| invalid("ring is not a list"))?
            .iter()
            .map(|pos| match pos.as_array().map(Vec::as_slice) {
                Some([lon, lat, ..]) => match (lon.as_f64(), lat.as_f64()) {
                    (Some(lon), Some(lat)) => Ok((lon, lat)),
                    _ => Err(invalid("non-numeric position")),
                },
                _ => Err(invalid("position needs longitude and latitude")),
            })
            .collect::<Result<Ring, _>>()
    });
    let exterior = parsed
        .next()
        .ok_or_else(|| invalid("polygon without exterior ring"))??;
    let holes = parsed.collect::<Result<Vec<_>, _>>()?;
    Ok(Polygon { exterior, holes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attachment {
    pub point: ModernPoint,
    pub label: String,
    /// True when a polygon of the region contains the point.
    pub contained: bool,
    /// Distance to the nearest vertex; zero when contained.
    pub distance_km: f64,
}

/// Labels each point with a containing region, or else with the region
/// owning the nearest vertex. Ties go to the lexicographically smaller label.
pub fn attach_regions(
    points: &[ModernPoint],
    regions: &RegionSet,
) -> Result<Vec<Attachment>, GeodesyError> {
    if regions.is_empty() {
        return Err(GeodesyError::EmptyRegionSet);
    }
    Ok(points.iter().map(|p| attach_one(p, regions)).collect())
}

fn attach_one(p: &ModernPoint, regions: &RegionSet) -> Attachment {
    // BTreeMap iteration is label-ordered, so the first hit wins ties.
    if let Some(label) = regions
        .regions
        .iter()
        .find(|(_, polys)| polys.iter().any(|poly| poly.contains(p)))
        .map(|(label, _)| label.clone())
    {
        return Attachment {
            point: *p,
            label,
            contained: true,
            distance_km: 0.0,
        };
    }
    let mut best: Option<(&str, f64)> = None;
    for (label, polys) in &regions.regions {
        for &(lon, lat) in polys.iter().flat_map(Polygon::vertices) {
            let Ok(vertex) = ModernPoint::new(lat, wrap_longitude(lon)) else {
                continue;
            };
            let d = haversine_km(p, &vertex);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((label, d));
            }
        }
    }
    let (label, distance_km) = best.unwrap_or_else(|| {
        (
            regions.regions.keys().next().map_or("", String::as_str),
            f64::INFINITY,
        )
    });
    Attachment {
        point: *p,
        label: label.to_string(),
        contained: false,
        distance_km,
    }
}
