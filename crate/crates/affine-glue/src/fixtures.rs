//! Built-in example spaces: the demo catalogue plus the standard accepted
//! and rejected instances used by the test suite.

use crate::io::Instance;
use crate::kernel::PLPath;
use crate::mapping::RayGeom;
use crate::scalar::{Point, Scalar};
use crate::space::{Arc, EndSpec, PointEntry, SpaceDescription, TauTarget};
use crate::unbounded::{ExtendedSpace, UnboundedArc};

fn entry(id: &str, coords: &[i64], in_x: bool, in_g: bool) -> PointEntry {
    PointEntry {
        id: id.into(),
        coords: Point::from_ints(coords),
        in_x,
        in_g,
    }
}

fn path(vertices: &[&[i64]], left_open: bool, right_open: bool) -> PLPath {
    PLPath::from_vertices(
        vertices.iter().map(|v| Point::from_ints(v)).collect(),
        left_open,
        right_open,
    )
    .expect("fixture path")
}

fn member(limit: &str) -> EndSpec {
    EndSpec {
        limit: limit.into(),
        member: true,
        tau: TauTarget::Affine,
    }
}

fn glued(limit: &str, target: &str) -> EndSpec {
    EndSpec {
        limit: limit.into(),
        member: false,
        tau: TauTarget::Glue(target.into()),
    }
}

/// The planar circle presentation: a half-open segment whose open end is
/// re-glued to its closed end. One shape class, one slot: the image lives
/// in `Q^4`.
pub fn circle() -> SpaceDescription {
    SpaceDescription {
        n: 2,
        r: Some(Scalar::from_int(16)),
        points: vec![
            entry("g", &[1, 1], true, true),
            entry("e", &[9, 1], false, false),
        ],
        arcs: vec![Arc {
            id: "a".into(),
            path: path(&[&[1, 1], &[9, 1]], false, true),
            ends: [member("g"), glued("e", "g")],
        }],
        declared_k: None,
        shift: None,
    }
}

/// Two loops re-glued at a common singular point: two shape classes, one
/// slot each, image in `Q^6`.
pub fn figure_eight() -> SpaceDescription {
    SpaceDescription {
        n: 2,
        r: Some(Scalar::from_int(16)),
        points: vec![
            entry("g", &[4, 4], true, true),
            entry("e1", &[4, 7], false, false),
            entry("e2", &[4, 1], false, false),
        ],
        arcs: vec![
            Arc {
                id: "right".into(),
                path: path(&[&[4, 4], &[7, 4], &[7, 7], &[4, 7]], false, true),
                ends: [member("g"), glued("e1", "g")],
            },
            Arc {
                id: "left".into(),
                path: path(&[&[4, 4], &[1, 4], &[1, 1], &[4, 1]], false, true),
                ends: [member("g"), glued("e2", "g")],
            },
        ],
        declared_k: None,
        shift: None,
    }
}

/// A segment with one limitless open end: its trimmed germ becomes a
/// half-open vertical interval whose top endpoint is the single frontier
/// point of the image.
pub fn no_limit() -> SpaceDescription {
    SpaceDescription {
        n: 1,
        r: Some(Scalar::from_int(16)),
        points: vec![
            entry("g", &[1], true, false),
            entry("e", &[9], false, false),
        ],
        arcs: vec![Arc {
            id: "a".into(),
            path: path(&[&[1], &[9]], false, true),
            ends: [
                member("g"),
                EndSpec {
                    limit: "e".into(),
                    member: false,
                    tau: TauTarget::NoLimit,
                },
            ],
        }],
        declared_k: None,
        shift: None,
    }
}

/// Two translated germs glued to different targets: their first-cut blocks
/// cross at `(3, q)` in the shared slot, forcing exactly one re-slotting.
pub fn collision() -> SpaceDescription {
    SpaceDescription {
        n: 1,
        r: Some(Scalar::from_int(16)),
        points: vec![
            entry("a", &[1], true, true),
            entry("b", &[3], true, true),
            entry("m2", &[4], true, false),
            entry("e2", &[6], false, false),
            PointEntry {
                id: "m1".into(),
                coords: Point(vec![Scalar::ratio(13, 2)]),
                in_x: true,
                in_g: false,
            },
            entry("e1", &[8], false, false),
        ],
        arcs: vec![
            Arc {
                id: "inner".into(),
                path: path(&[&[4], &[6]], false, true),
                ends: [member("m2"), glued("e2", "a")],
            },
            Arc {
                id: "outer".into(),
                path: PLPath::from_vertices(
                    vec![Point(vec![Scalar::ratio(13, 2)]), Point::from_ints(&[8])],
                    false,
                    true,
                )
                .expect("fixture path"),
                ends: [member("m1"), glued("e1", "b")],
            },
        ],
        declared_k: None,
        shift: None,
    }
}

/// The circle core with an attached half ray at the singular point and a
/// detached full line.
pub fn circle_with_rays() -> ExtendedSpace {
    let up = RayGeom::new(
        path(&[&[1, 1], &[1, 3]], false, false),
        Point::from_ints(&[0, 1]),
        None,
    )
    .expect("fixture ray");
    let line = RayGeom::new(
        path(&[&[20, 0], &[21, 0]], false, false),
        Point::from_ints(&[1, 0]),
        Some(Point::from_ints(&[-1, 0])),
    )
    .expect("fixture ray");
    ExtendedSpace {
        core: circle(),
        rays: vec![
            UnboundedArc {
                id: "up".into(),
                geom: up,
                attach: Some("g".into()),
            },
            UnboundedArc {
                id: "line".into(),
                geom: line,
                attach: None,
            },
        ],
    }
}

/// A closed segment with half rays attached at both endpoints: the simplest
/// properly embedded unbounded space.
pub fn two_rays() -> ExtendedSpace {
    // the left ray runs toward -∞ from x = 1/2, so at arc length T + 1 it
    // sits at -T - 1/2, strictly outside every truncation box [-T, T]
    let half = Point(vec![Scalar::ratio(1, 2)]);
    let core = SpaceDescription {
        n: 1,
        r: Some(Scalar::from_int(16)),
        points: vec![
            PointEntry {
                id: "p1".into(),
                coords: half.clone(),
                in_x: true,
                in_g: false,
            },
            entry("p2", &[2], true, false),
        ],
        arcs: vec![Arc {
            id: "seg".into(),
            path: PLPath::from_vertices(vec![half.clone(), Point::from_ints(&[2])], false, false)
                .expect("fixture path"),
            ends: [member("p1"), member("p2")],
        }],
        declared_k: None,
        shift: None,
    };
    let left = RayGeom::new(
        PLPath::from_vertices(vec![half, Point(vec![Scalar::ratio(1, 4)])], false, false)
            .expect("fixture ray"),
        Point::from_ints(&[-1]),
        None,
    )
    .expect("fixture ray");
    let right = RayGeom::new(
        path(&[&[2], &[3]], false, false),
        Point::from_ints(&[1]),
        None,
    )
    .expect("fixture ray");
    ExtendedSpace {
        core,
        rays: vec![
            UnboundedArc {
                id: "left".into(),
                geom: left,
                attach: Some("p1".into()),
            },
            UnboundedArc {
                id: "right".into(),
                geom: right,
                attach: Some("p2".into()),
            },
        ],
    }
}

/// No singular points at all: the realization is the identity.
pub fn empty_g() -> SpaceDescription {
    SpaceDescription {
        n: 1,
        r: Some(Scalar::from_int(16)),
        points: vec![entry("p1", &[1], true, false), entry("p2", &[9], true, false)],
        arcs: vec![Arc {
            id: "seg".into(),
            path: path(&[&[1], &[9]], false, false),
            ends: [member("p1"), member("p2")],
        }],
        declared_k: None,
        shift: None,
    }
}

/// Rejected: the glue target is not marked singular.
pub fn glue_to_non_g() -> SpaceDescription {
    let mut sp = circle();
    sp.points[0].in_g = false;
    sp
}

/// Rejected: the branch count at the singular point exceeds the declared
/// bound.
pub fn declared_k_exceeded() -> SpaceDescription {
    let mut sp = figure_eight();
    sp.declared_k = Some(3);
    sp
}

pub fn demo_names() -> &'static [&'static str] {
    &["circle", "figure-eight", "no-limit", "collision", "rays"]
}

/// The demo catalogue served by the command line.
pub fn demo(name: &str) -> Option<Instance> {
    match name {
        "circle" => Some(Instance::Bounded(circle())),
        "figure-eight" => Some(Instance::Bounded(figure_eight())),
        "no-limit" => Some(Instance::Bounded(no_limit())),
        "collision" => Some(Instance::Bounded(collision())),
        "rays" => Some(Instance::Unbounded(circle_with_rays())),
        _ => None,
    }
}
