//! Domain types shared by every module: angles, points, geometries, entries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cardinal direction attached to one angular measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hemisphere {
    N,
    S,
    E,
    W,
}

impl Hemisphere {
    pub fn axis(self) -> Axis {
        match self {
            Hemisphere::N | Hemisphere::S => Axis::Latitude,
            Hemisphere::E | Hemisphere::W => Axis::Longitude,
        }
    }

    /// +1 for N and E, -1 for S and W.
    pub fn sign(self) -> f64 {
        match self {
            Hemisphere::N | Hemisphere::E => 1.0,
            Hemisphere::S | Hemisphere::W => -1.0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Hemisphere::N => 'N',
            Hemisphere::S => 'S',
            Hemisphere::E => 'E',
            Hemisphere::W => 'W',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'N' => Some(Hemisphere::N),
            'S' => Some(Hemisphere::S),
            'E' => Some(Hemisphere::E),
            'W' => Some(Hemisphere::W),
            _ => None,
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Latitude,
    Longitude,
}

impl Axis {
    pub fn default_hemisphere(self) -> Hemisphere {
        match self {
            Axis::Latitude => Hemisphere::N,
            Axis::Longitude => Hemisphere::E,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Latitude => "latitude",
            Axis::Longitude => "longitude",
        })
    }
}

/// Violations of the angle and point invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RangeError {
    #[error("minutes must be below 60, got {0}")]
    Minutes(u32),
    #[error("seconds must be in [0, 60), got {0}")]
    Seconds(f64),
    #[error("seconds given without minutes")]
    SecondsWithoutMinutes,
    #[error("{hemisphere} degrees must not exceed {max}, got {degrees}")]
    Degrees {
        degrees: u32,
        max: u32,
        hemisphere: Hemisphere,
    },
    #[error("latitude of 90 degrees cannot carry non-zero minutes or seconds")]
    BeyondPole,
    #[error("expected a {expected} hemisphere, got {got}")]
    WrongAxis { expected: Axis, got: Hemisphere },
    #[error("a point needs a latitude or a longitude")]
    EmptyPoint,
}

/// One angular measure in degrees, optional minutes and optional seconds.
///
/// Historical longitudes run eastwards from 0 to 360, so E/W degrees are
/// bounded by 360 rather than 180.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmsAngle {
    degrees: u32,
    minutes: Option<u32>,
    seconds: Option<f64>,
    hemisphere: Hemisphere,
}

pub const MAX_LATITUDE_DEGREES: u32 = 90;
pub const MAX_LONGITUDE_DEGREES: u32 = 360;

impl DmsAngle {
    pub fn new(
        degrees: u32,
        minutes: Option<u32>,
        seconds: Option<f64>,
        hemisphere: Hemisphere,
    ) -> Result<Self, RangeError> {
        if let Some(m) = minutes {
            if m >= 60 {
                return Err(RangeError::Minutes(m));
            }
        }
        if let Some(s) = seconds {
            if !(0.0..60.0).contains(&s) {
                return Err(RangeError::Seconds(s));
            }
            if minutes.is_none() {
                return Err(RangeError::SecondsWithoutMinutes);
            }
        }
        let max = match hemisphere.axis() {
            Axis::Latitude => MAX_LATITUDE_DEGREES,
            Axis::Longitude => MAX_LONGITUDE_DEGREES,
        };
        if degrees > max {
            return Err(RangeError::Degrees {
                degrees,
                max,
                hemisphere,
            });
        }
        if hemisphere.axis() == Axis::Latitude
            && degrees == MAX_LATITUDE_DEGREES
            && (minutes.unwrap_or(0) != 0 || seconds.unwrap_or(0.0) != 0.0)
        {
            return Err(RangeError::BeyondPole);
        }
        Ok(DmsAngle {
            degrees,
            minutes,
            seconds,
            hemisphere,
        })
    }

    pub fn degrees(&self) -> u32 {
        self.degrees
    }

    pub fn minutes(&self) -> Option<u32> {
        self.minutes
    }

    pub fn seconds(&self) -> Option<f64> {
        self.seconds
    }

    pub fn hemisphere(&self) -> Hemisphere {
        self.hemisphere
    }

    pub fn axis(&self) -> Axis {
        self.hemisphere.axis()
    }

    /// Presence of fields, not their value, decides the level.
    pub fn precision(&self) -> PrecisionLevel {
        match (self.minutes, self.seconds) {
            (None, _) => PrecisionLevel::D,
            (Some(_), None) => PrecisionLevel::DM,
            (Some(_), Some(_)) => PrecisionLevel::DMS,
        }
    }

    /// Signed decimal degrees: negative for S and W.
    pub fn to_decimal(&self) -> f64 {
        let magnitude = f64::from(self.degrees)
            + f64::from(self.minutes.unwrap_or(0)) / 60.0
            + self.seconds.unwrap_or(0.0) / 3600.0;
        self.hemisphere.sign() * magnitude
    }
}

/// Signed decimal degrees of an angle.
pub fn to_decimal(angle: &DmsAngle) -> f64 {
    angle.to_decimal()
}

/// How finely an angle is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrecisionLevel {
    D,
    DM,
    DMS,
}

impl PrecisionLevel {
    pub const ALL: [PrecisionLevel; 3] =
        [PrecisionLevel::D, PrecisionLevel::DM, PrecisionLevel::DMS];

    pub fn index(self) -> usize {
        match self {
            PrecisionLevel::D => 0,
            PrecisionLevel::DM => 1,
            PrecisionLevel::DMS => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrecisionLevel::D => "D",
            PrecisionLevel::DM => "DM",
            PrecisionLevel::DMS => "DMS",
        }
    }
}

impl fmt::Display for PrecisionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A latitude part and/or a longitude part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalPoint {
    latitude: Option<DmsAngle>,
    longitude: Option<DmsAngle>,
}

impl CanonicalPoint {
    pub fn new(
        latitude: Option<DmsAngle>,
        longitude: Option<DmsAngle>,
    ) -> Result<Self, RangeError> {
        if latitude.is_none() && longitude.is_none() {
            return Err(RangeError::EmptyPoint);
        }
        if let Some(lat) = latitude {
            if lat.axis() != Axis::Latitude {
                return Err(RangeError::WrongAxis {
                    expected: Axis::Latitude,
                    got: lat.hemisphere(),
                });
            }
        }
        if let Some(lon) = longitude {
            if lon.axis() != Axis::Longitude {
                return Err(RangeError::WrongAxis {
                    expected: Axis::Longitude,
                    got: lon.hemisphere(),
                });
            }
        }
        Ok(CanonicalPoint {
            latitude,
            longitude,
        })
    }

    pub fn latitude(&self) -> Option<&DmsAngle> {
        self.latitude.as_ref()
    }

    pub fn longitude(&self) -> Option<&DmsAngle> {
        self.longitude.as_ref()
    }

    /// Both latitude and longitude are present.
    pub fn is_well_formed(&self) -> bool {
        self.latitude.is_some() && self.longitude.is_some()
    }

    pub fn part(&self, axis: Axis) -> Option<&DmsAngle> {
        match axis {
            Axis::Latitude => self.latitude(),
            Axis::Longitude => self.longitude(),
        }
    }
}

/// Level of each present part of a point.
pub fn precision_of(point: &CanonicalPoint) -> (Option<PrecisionLevel>, Option<PrecisionLevel>) {
    (
        point.latitude.map(|a| a.precision()),
        point.longitude.map(|a| a.precision()),
    )
}

/// Violations of the geometry invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{kind} needs at least {min} items, got {got}")]
    TooFewItems {
        kind: &'static str,
        min: usize,
        got: usize,
    },
    #[error("rectangle corners must express the same parts (latitude, longitude)")]
    MismatchedCorners,
    #[error("misc items must not be empty")]
    EmptyMiscItem,
}

/// Bounding box given by its minimum and maximum corners.
///
/// Corners express the same parts: both well-formed, or both bounded by a
/// single axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rectangle {
    min: CanonicalPoint,
    max: CanonicalPoint,
}

impl Rectangle {
    /// Builds a rectangle, reordering each axis so that `min <= max`.
    ///
    /// The flag is true when any axis had to be swapped.
    pub fn ordered(a: CanonicalPoint, b: CanonicalPoint) -> Result<(Self, bool), GeometryError> {
        if a.latitude.is_some() != b.latitude.is_some()
            || a.longitude.is_some() != b.longitude.is_some()
        {
            return Err(GeometryError::MismatchedCorners);
        }
        let mut swapped = false;
        let mut order = |x: Option<DmsAngle>, y: Option<DmsAngle>| match (x, y) {
            (Some(x), Some(y)) if x.to_decimal() > y.to_decimal() => {
                swapped = true;
                (Some(y), Some(x))
            }
            other => other,
        };
        let (lat_min, lat_max) = order(a.latitude, b.latitude);
        let (lon_min, lon_max) = order(a.longitude, b.longitude);
        let rect = Rectangle {
            min: CanonicalPoint {
                latitude: lat_min,
                longitude: lon_min,
            },
            max: CanonicalPoint {
                latitude: lat_max,
                longitude: lon_max,
            },
        };
        Ok((rect, swapped))
    }

    pub fn new(a: CanonicalPoint, b: CanonicalPoint) -> Result<Self, GeometryError> {
        Self::ordered(a, b).map(|(r, _)| r)
    }

    pub fn min(&self) -> &CanonicalPoint {
        &self.min
    }

    pub fn max(&self) -> &CanonicalPoint {
        &self.max
    }
}

/// Member of a subentry or multiple-source sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape {
    Point(CanonicalPoint),
    Rectangle(Rectangle),
}

/// Every coordinate structure observed in the corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Geometry {
    Point(CanonicalPoint),
    Rectangle(Rectangle),
    /// Connected points, e.g. a river's source and mouth. Points may be incomplete.
    PolyChain(Vec<CanonicalPoint>),
    /// Several places described in one article.
    SubEntries(Vec<Shape>),
    /// Alternative values for one place cited from different authorities.
    MultiSource(Vec<Shape>),
    /// Anything else; each item keeps its inner list of points.
    Misc(Vec<Vec<CanonicalPoint>>),
}

impl Geometry {
    pub fn poly_chain(points: Vec<CanonicalPoint>) -> Result<Self, GeometryError> {
        at_least("polygonal chain", 2, points.len())?;
        Ok(Geometry::PolyChain(points))
    }

    pub fn sub_entries(items: Vec<Shape>) -> Result<Self, GeometryError> {
        at_least("subentry sequence", 2, items.len())?;
        Ok(Geometry::SubEntries(items))
    }

    pub fn multi_source(items: Vec<Shape>) -> Result<Self, GeometryError> {
        at_least("multiple-source sequence", 2, items.len())?;
        Ok(Geometry::MultiSource(items))
    }

    pub fn misc(items: Vec<Vec<CanonicalPoint>>) -> Result<Self, GeometryError> {
        at_least("misc sequence", 1, items.len())?;
        if items.iter().any(Vec::is_empty) {
            return Err(GeometryError::EmptyMiscItem);
        }
        Ok(Geometry::Misc(items))
    }

    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::Rectangle(_) => GeometryKind::Rectangle,
            Geometry::PolyChain(_) => GeometryKind::PolyChain,
            Geometry::SubEntries(_) => GeometryKind::SubEntries,
            Geometry::MultiSource(_) => GeometryKind::MultiSource,
            Geometry::Misc(_) => GeometryKind::Misc,
        }
    }

    /// The single point, when this geometry is one.
    pub fn as_point(&self) -> Option<&CanonicalPoint> {
        match self {
            Geometry::Point(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_well_formed_point(&self) -> bool {
        self.as_point().is_some_and(CanonicalPoint::is_well_formed)
    }
}

fn at_least(kind: &'static str, min: usize, got: usize) -> Result<(), GeometryError> {
    if got < min {
        Err(GeometryError::TooFewItems { kind, min, got })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Point,
    Rectangle,
    PolyChain,
    SubEntries,
    MultiSource,
    Misc,
}

/// Prime meridian (or other reference) named by an entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeridianRef {
    /// El Hierro, the implicit default.
    Ferro,
    Paris,
    Pekin,
    Londres,
    Lund,
    /// Any other label, recorded verbatim. Covers latitudes given relative
    /// to a reference other than the equator.
    Other(String),
}

impl MeridianRef {
    pub fn label(&self) -> &str {
        match self {
            MeridianRef::Ferro => "Ferro",
            MeridianRef::Paris => "Paris",
            MeridianRef::Pekin => "Pékin",
            MeridianRef::Londres => "Londres",
            MeridianRef::Lund => "Lund",
            MeridianRef::Other(label) => label,
        }
    }

    /// Recognizes French, English and historical spellings; anything else
    /// becomes [`MeridianRef::Other`].
    pub fn from_label(label: &str) -> Self {
        let folded = fold_accents(label.trim()).to_lowercase();
        match folded.as_str() {
            "ferro" | "fer" | "ile de fer" | "el hierro" | "hierro" => MeridianRef::Ferro,
            "paris" => MeridianRef::Paris,
            "pekin" | "peking" | "beijing" => MeridianRef::Pekin,
            "londres" | "london" | "greenwich" => MeridianRef::Londres,
            "lund" | "lunden" => MeridianRef::Lund,
            _ => MeridianRef::Other(label.trim().to_string()),
        }
    }
}

impl fmt::Display for MeridianRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MeridianRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(MeridianRef::from_label(s))
    }
}

impl Serialize for MeridianRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for MeridianRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(MeridianRef::from_label(&s))
    }
}

/// Strips the diacritics that occur in French place and keyword spellings.
pub(crate) fn fold_accents(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            'à' | 'â' | 'ä' => 'a',
            'À' | 'Â' | 'Ä' => 'A',
            'é' | 'è' | 'ê' | 'ë' => 'e',
            'É' | 'È' | 'Ê' | 'Ë' => 'E',
            'î' | 'ï' => 'i',
            'Î' | 'Ï' => 'I',
            'ô' | 'ö' => 'o',
            'Ô' | 'Ö' => 'O',
            'ù' | 'û' | 'ü' => 'u',
            'Ù' | 'Û' | 'Ü' => 'U',
            'ç' => 'c',
            'Ç' => 'C',
            other => other,
        })
        .collect()
}

/// One encyclopedia article.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub id: String,
    pub headword: String,
    pub text: String,
    pub coordinates: Option<Geometry>,
    pub meridians: Vec<MeridianRef>,
}

impl Entry {
    pub fn new(
        id: impl Into<String>,
        headword: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Entry {
            id: id.into(),
            headword: headword.into(),
            text: text.into(),
            coordinates: None,
            meridians: Vec::new(),
        }
    }
}

/// Modern signed decimal coordinates referenced to Greenwich.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModernPoint {
    latitude: f64,
    longitude: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("modern point out of range: latitude {latitude}, longitude {longitude}")]
pub struct ModernRangeError {
    pub latitude: f64,
    pub longitude: f64,
}

impl ModernPoint {
    /// Latitude in [-90, 90], longitude in (-180, 180].
    pub fn new(latitude: f64, longitude: f64) -> Result<Self, ModernRangeError> {
        if (-90.0..=90.0).contains(&latitude) && longitude > -180.0 && longitude <= 180.0 {
            Ok(ModernPoint {
                latitude,
                longitude,
            })
        } else {
            Err(ModernRangeError {
                latitude,
                longitude,
            })
        }
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angle(d: u32, m: Option<u32>, s: Option<f64>, h: Hemisphere) -> DmsAngle {
        DmsAngle::new(d, m, s, h).unwrap()
    }

    #[test]
    fn precision_follows_presence() {
        let dm = angle(52, Some(10), None, Hemisphere::N);
        assert_eq!(dm.precision(), PrecisionLevel::DM);
        let dms_zero = angle(52, Some(10), Some(0.0), Hemisphere::N);
        assert_eq!(dms_zero.precision(), PrecisionLevel::DMS);
        assert_eq!(
            angle(6, None, None, Hemisphere::N).precision(),
            PrecisionLevel::D
        );
    }

    #[test]
    fn precision_of_points() {
        let aahus = CanonicalPoint::new(
            Some(angle(52, Some(10), None, Hemisphere::N)),
            Some(angle(24, Some(36), None, Hemisphere::E)),
        )
        .unwrap();
        assert_eq!(
            precision_of(&aahus),
            (Some(PrecisionLevel::DM), Some(PrecisionLevel::DM))
        );

        let corner = CanonicalPoint::new(
            Some(angle(6, None, None, Hemisphere::N)),
            Some(angle(48, None, None, Hemisphere::E)),
        )
        .unwrap();
        assert_eq!(
            precision_of(&corner),
            (Some(PrecisionLevel::D), Some(PrecisionLevel::D))
        );

        let agrignon =
            CanonicalPoint::new(Some(angle(19, Some(40), None, Hemisphere::N)), None).unwrap();
        assert_eq!(precision_of(&agrignon), (Some(PrecisionLevel::DM), None));
        assert!(!agrignon.is_well_formed());
    }

    #[test]
    fn angle_invariants() {
        assert_eq!(
            DmsAngle::new(52, Some(61), None, Hemisphere::N),
            Err(RangeError::Minutes(61))
        );
        assert!(matches!(
            DmsAngle::new(52, Some(1), Some(60.0), Hemisphere::N),
            Err(RangeError::Seconds(_))
        ));
        assert_eq!(
            DmsAngle::new(52, None, Some(3.0), Hemisphere::N),
            Err(RangeError::SecondsWithoutMinutes)
        );
        assert!(matches!(
            DmsAngle::new(91, None, None, Hemisphere::S),
            Err(RangeError::Degrees { .. })
        ));
        assert_eq!(
            DmsAngle::new(90, Some(1), None, Hemisphere::N),
            Err(RangeError::BeyondPole)
        );
        assert!(DmsAngle::new(90, Some(0), Some(0.0), Hemisphere::N).is_ok());
        assert!(DmsAngle::new(360, None, None, Hemisphere::E).is_ok());
        assert!(matches!(
            DmsAngle::new(361, None, None, Hemisphere::W),
            Err(RangeError::Degrees { .. })
        ));
    }

    #[test]
    fn point_axes_checked() {
        let lat = angle(10, None, None, Hemisphere::N);
        assert!(matches!(
            CanonicalPoint::new(None, Some(lat)),
            Err(RangeError::WrongAxis { .. })
        ));
        assert_eq!(CanonicalPoint::new(None, None), Err(RangeError::EmptyPoint));
    }

    #[test]
    fn decimal_conversion() {
        let a = angle(48, Some(51), Some(20.0), Hemisphere::N);
        assert!((a.to_decimal() - 48.855_555_555_555_55).abs() < 1e-9);
        let b = angle(20, Some(21), Some(30.0), Hemisphere::E);
        assert!((b.to_decimal() - 20.358_333_333_333_33).abs() < 1e-9);
        assert_eq!(angle(0, None, None, Hemisphere::N).to_decimal(), 0.0);
        assert_eq!(angle(30, Some(30), None, Hemisphere::S).to_decimal(), -30.5);
    }

    #[test]
    fn rectangle_orders_each_axis() {
        let p = |lat: u32, lon: u32| {
            CanonicalPoint::new(
                Some(angle(lat, None, None, Hemisphere::N)),
                Some(angle(lon, None, None, Hemisphere::E)),
            )
            .unwrap()
        };
        let (r, swapped) = Rectangle::ordered(p(20, 48), p(6, 65)).unwrap();
        assert!(swapped);
        assert_eq!(r.min(), &p(6, 48));
        assert_eq!(r.max(), &p(20, 65));

        let lat_only =
            CanonicalPoint::new(Some(angle(1, None, None, Hemisphere::N)), None).unwrap();
        assert_eq!(
            Rectangle::new(lat_only, p(2, 3)),
            Err(GeometryError::MismatchedCorners)
        );
    }

    #[test]
    fn sequence_arity() {
        assert!(Geometry::misc(vec![]).is_err());
        assert!(Geometry::poly_chain(vec![]).is_err());
        assert!(Geometry::sub_entries(vec![]).is_err());
    }

    #[test]
    fn meridian_labels() {
        assert_eq!(MeridianRef::from_label("Pékin"), MeridianRef::Pekin);
        assert_eq!(MeridianRef::from_label("Peking"), MeridianRef::Pekin);
        assert_eq!(MeridianRef::from_label("London"), MeridianRef::Londres);
        assert_eq!(MeridianRef::Pekin.label(), "Pékin");
        assert_eq!(
            MeridianRef::from_label("tropique du Cancer"),
            MeridianRef::Other("tropique du Cancer".into())
        );
    }

    #[test]
    fn modern_point_ranges() {
        assert!(ModernPoint::new(90.0, 180.0).is_ok());
        assert!(ModernPoint::new(0.0, -180.0).is_err());
        assert!(ModernPoint::new(-90.1, 0.0).is_err());
    }
}
