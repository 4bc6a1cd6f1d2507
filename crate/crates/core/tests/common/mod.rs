#![allow(dead_code)]

use std::collections::HashMap;

use histcoord::model::{Rectangle, Shape};
use histcoord::{Axis, CanonicalPoint, DmsAngle, Geometry, Hemisphere};
use proptest::prelude::*;

pub fn angle(axis: Axis) -> impl Strategy<Value = DmsAngle> {
    let (max, hemis) = match axis {
        Axis::Latitude => (90u32, [Hemisphere::N, Hemisphere::S]),
        Axis::Longitude => (360u32, [Hemisphere::E, Hemisphere::W]),
    };
    let seconds = prop_oneof![
        Just(None),
        (0u32..60).prop_map(|s| Some(f64::from(s))),
        (0u32..59).prop_map(|s| Some(f64::from(s) + 0.5)),
    ];
    (
        0..=max,
        prop::option::of(0u32..60),
        seconds,
        prop::sample::select(hemis.to_vec()),
    )
        .prop_filter_map("valid angle", |(d, m, s, h)| {
            DmsAngle::new(d, m, if m.is_some() { s } else { None }, h).ok()
        })
}

/// Which parts a point expresses.
#[derive(Debug, Clone, Copy)]
pub enum Parts {
    Both,
    Latitude,
    Longitude,
}

pub fn parts() -> impl Strategy<Value = Parts> {
    prop_oneof![4 => Just(Parts::Both), 1 => Just(Parts::Latitude), 1 => Just(Parts::Longitude)]
}

pub fn point_with(p: Parts) -> BoxedStrategy<CanonicalPoint> {
    let lat = angle(Axis::Latitude);
    let lon = angle(Axis::Longitude);
    match p {
        Parts::Both => (lat, lon)
            .prop_map(|(a, o)| CanonicalPoint::new(Some(a), Some(o)).unwrap())
            .boxed(),
        Parts::Latitude => lat
            .prop_map(|a| CanonicalPoint::new(Some(a), None).unwrap())
            .boxed(),
        Parts::Longitude => lon
            .prop_map(|o| CanonicalPoint::new(None, Some(o)).unwrap())
            .boxed(),
    }
}

pub fn point() -> impl Strategy<Value = CanonicalPoint> {
    parts().prop_flat_map(point_with)
}

pub fn rectangle() -> impl Strategy<Value = Rectangle> {
    parts()
        .prop_flat_map(|p| (point_with(p), point_with(p)))
        .prop_map(|(a, b)| Rectangle::ordered(a, b).unwrap().0)
}

pub fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        3 => point().prop_map(Shape::Point),
        1 => rectangle().prop_map(Shape::Rectangle),
    ]
}

pub fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![
        4 => point().prop_map(Geometry::Point),
        2 => rectangle().prop_map(Geometry::Rectangle),
        1 => prop::collection::vec(point(), 2..5).prop_map(|ps| Geometry::poly_chain(ps).unwrap()),
        1 => prop::collection::vec(shape(), 2..5).prop_map(|ss| Geometry::sub_entries(ss).unwrap()),
        1 => prop::collection::vec(shape(), 2..5).prop_map(|ss| Geometry::multi_source(ss).unwrap()),
        1 => prop::collection::vec(prop::collection::vec(point(), 1..3), 1..4)
            .prop_map(|items| Geometry::misc(items).unwrap()),
    ]
}

/// Edit distance from its recursive definition, memoized top-down.
pub fn edit_distance_oracle(a: &[char], b: &[char]) -> usize {
    fn go(
        a: &[char],
        b: &[char],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}
