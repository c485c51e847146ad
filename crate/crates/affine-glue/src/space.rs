//! The data model for a one-dimensional definable topological space:
//! a point table, PL arcs with per-end gluing behavior, validation, and
//! coordinate normalization.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::kernel::{pl_intersections, End, IntersectionRecord, PLPath};
use crate::scalar::{Point, Scalar};

/// How an arc end behaves under the topology `τ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TauTarget {
    /// The end converges to its affine limit point (which must be in `X`).
    Affine,
    /// The end has no `τ`-limit in `X`.
    NoLimit,
    /// The end is re-glued to the named singular point.
    Glue(String),
}

/// One end of an arc: its affine limit, whether the limit point belongs to
/// the arc inside `X`, and the `τ` behavior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndSpec {
    pub limit: String,
    pub member: bool,
    pub tau: TauTarget,
}

#[derive(Clone, Debug)]
pub struct PointEntry {
    pub id: String,
    pub coords: Point,
    pub in_x: bool,
    pub in_g: bool,
}

#[derive(Clone, Debug)]
pub struct Arc {
    pub id: String,
    pub path: PLPath,
    /// `ends[0]` is the low parameter end, `ends[1]` the high end.
    pub ends: [EndSpec; 2],
}

/// The input space `(X, τ)`: ambient dimension, optional normalization
/// bound, point table (including singular and frontier points), and arcs.
#[derive(Clone, Debug)]
pub struct SpaceDescription {
    pub n: usize,
    pub r: Option<Scalar>,
    pub points: Vec<PointEntry>,
    pub arcs: Vec<Arc>,
    pub declared_k: Option<usize>,
    /// Translation applied by `normalize_shift`, for round-tripping.
    pub shift: Option<Point>,
}

impl SpaceDescription {
    pub fn point(&self, id: &str) -> Option<&PointEntry> {
        self.points.iter().find(|p| p.id == id)
    }

    /// Ids of `Z = ∂X ∪ G`: marked singular points and frontier points.
    pub fn z_ids(&self) -> Vec<&PointEntry> {
        self.points
            .iter()
            .filter(|p| p.in_g || !p.in_x)
            .collect()
    }

    pub fn g_ids(&self) -> Vec<&PointEntry> {
        self.points.iter().filter(|p| p.in_g).collect()
    }

    /// Isolated points of `X`: in `X`, not lying on any arc's closed image.
    pub fn isolated_points(&self) -> Vec<&PointEntry> {
        self.points
            .iter()
            .filter(|p| p.in_x && !self.arcs.iter().any(|a| a.path.contains(&p.coords)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("[{code}] {subject}: {detail}")]
pub struct Violation {
    pub code: String,
    pub subject: String,
    pub detail: String,
}

impl Violation {
    fn new(code: &str, subject: impl Into<String>, detail: impl Into<String>) -> Violation {
        Violation {
            code: code.into(),
            subject: subject.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural validation: type invariants, arc disjointness, gluing targets,
/// and end consistency. Returns all violations with first witnesses.
pub fn validate(space: &SpaceDescription) -> ValidationReport {
    let mut v = Vec::new();
    if space.n == 0 {
        v.push(Violation::new("ambient-dim", "space", "ambient dimension is zero"));
    }

    let mut seen = BTreeSet::new();
    for p in &space.points {
        if !seen.insert(&p.id) {
            v.push(Violation::new("dup-point", &p.id, "duplicate point id"));
        }
        if p.coords.dim() != space.n {
            v.push(Violation::new(
                "point-dim",
                &p.id,
                format!("coords have dimension {}, expected {}", p.coords.dim(), space.n),
            ));
        }
        if p.in_g && !p.in_x {
            v.push(Violation::new(
                "g-outside-x",
                &p.id,
                "marked singular but not in X",
            ));
        }
    }

    let mut seen_arcs = BTreeSet::new();
    for arc in &space.arcs {
        if !seen_arcs.insert(&arc.id) {
            v.push(Violation::new("dup-arc", &arc.id, "duplicate arc id"));
        }
        if arc.path.dim() != space.n {
            v.push(Violation::new(
                "arc-dim",
                &arc.id,
                format!("vertices have dimension {}, expected {}", arc.path.dim(), space.n),
            ));
            continue;
        }
        for (k, end) in arc.ends.iter().enumerate() {
            let which = if k == 0 { End::Low } else { End::High };
            let subject = format!("{}[{}]", arc.id, k);
            let Some(limit) = space.point(&end.limit) else {
                v.push(Violation::new("unknown-limit", &subject, format!("limit point {:?} not in the point table", end.limit)));
                continue;
            };
            if limit.coords != *arc.path.limit(which) {
                v.push(Violation::new(
                    "limit-coords",
                    &subject,
                    format!(
                        "limit point {} at {:?} does not match the end vertex {:?}",
                        limit.id,
                        limit.coords,
                        arc.path.limit(which)
                    ),
                ));
            }
            let open = if k == 0 { arc.path.left_open } else { arc.path.right_open };
            if open == end.member {
                v.push(Violation::new(
                    "member-flag",
                    &subject,
                    "path openness disagrees with end membership",
                ));
            }
            if end.member {
                if !limit.in_x {
                    v.push(Violation::new(
                        "member-outside-x",
                        &subject,
                        format!("closed end at {} which is not in X", limit.id),
                    ));
                }
                if end.tau != TauTarget::Affine {
                    v.push(Violation::new(
                        "member-tau",
                        &subject,
                        "a closed end must carry the affine target",
                    ));
                }
            }
            match &end.tau {
                TauTarget::Affine => {
                    if !limit.in_x {
                        v.push(Violation::new(
                            "affine-limit-outside-x",
                            &subject,
                            format!("affine target requires the limit {} to be in X", limit.id),
                        ));
                    }
                }
                TauTarget::Glue(g) => match space.point(g) {
                    None => v.push(Violation::new(
                        "unknown-glue",
                        &subject,
                        format!("glue target {g:?} not in the point table"),
                    )),
                    Some(gp) if !gp.in_g => v.push(Violation::new(
                        "glue-target-not-singular",
                        &subject,
                        format!("glue target {} is not marked singular", gp.id),
                    )),
                    Some(_) => {}
                },
                TauTarget::NoLimit => {}
            }
        }
    }

    // boundedness against a declared bound
    if let Some(r) = &space.r {
        let inside = |p: &Point| {
            p.coords()
                .iter()
                .all(|c| c.is_positive() && c < r)
        };
        for p in &space.points {
            if p.coords.dim() == space.n && !inside(&p.coords) {
                v.push(Violation::new(
                    "outside-bound",
                    &p.id,
                    format!("coordinates {:?} not strictly inside (0, {r})^n", p.coords),
                ));
            }
        }
        for arc in &space.arcs {
            if arc.path.dim() == space.n {
                for vert in arc.path.vertices() {
                    if !inside(vert) {
                        v.push(Violation::new(
                            "outside-bound",
                            &arc.id,
                            format!("vertex {vert:?} not strictly inside (0, {r})^n"),
                        ));
                        break;
                    }
                }
            }
        }
    }

    // pairwise arc disjointness except at shared limit points
    for i in 0..space.arcs.len() {
        for j in i + 1..space.arcs.len() {
            let (a, b) = (&space.arcs[i], &space.arcs[j]);
            if a.path.dim() != space.n || b.path.dim() != space.n {
                continue;
            }
            let shared: BTreeSet<Point> = {
                let ea: BTreeSet<&Point> = vec![a.path.limit(End::Low), a.path.limit(End::High)]
                    .into_iter()
                    .collect();
                [b.path.limit(End::Low), b.path.limit(End::High)]
                    .into_iter()
                    .filter(|p| ea.contains(p))
                    .cloned()
                    .collect()
            };
            for record in pl_intersections(&a.path, &b.path).unwrap() {
                match record {
                    IntersectionRecord::Point(p) if shared.contains(&p) => {}
                    IntersectionRecord::Point(p) => v.push(Violation::new(
                        "arcs-cross",
                        format!("{}/{}", a.id, b.id),
                        format!("arcs intersect at {p:?}"),
                    )),
                    IntersectionRecord::Overlap(p, q) => v.push(Violation::new(
                        "arcs-overlap",
                        format!("{}/{}", a.id, b.id),
                        format!("arcs overlap between {p:?} and {q:?}"),
                    )),
                }
            }
        }
    }

    // arcs avoid Z in their interiors
    for arc in &space.arcs {
        if arc.path.dim() != space.n {
            continue;
        }
        for z in space.z_ids() {
            if z.coords.dim() != space.n {
                continue;
            }
            if let Ok(t) = arc.path.inverse(&z.coords) {
                if &t != arc.path.param_lo() && &t != arc.path.param_hi() {
                    v.push(Violation::new(
                        "z-in-interior",
                        &arc.id,
                        format!("singular/frontier point {} at {:?} lies in the arc interior", z.id, z.coords),
                    ));
                }
            }
        }
    }

    ValidationReport { violations: v }
}

/// Translates all coordinates by a uniform positive shift so every
/// coordinate is strictly positive, then sets `R` to the smallest power of
/// two exceeding the maximum coordinate plus one. Taxicab distances are
/// unchanged; the shift is recorded for round-tripping.
pub fn normalize_shift(space: &SpaceDescription) -> SpaceDescription {
    let mut min: Option<Scalar> = None;
    let mut max: Option<Scalar> = None;
    let mut see = |c: &Scalar| {
        min = Some(match min.take() {
            Some(m) => m.min(c.clone()),
            None => c.clone(),
        });
        max = Some(match max.take() {
            Some(m) => m.max(c.clone()),
            None => c.clone(),
        });
    };
    for p in &space.points {
        for c in p.coords.coords() {
            see(c);
        }
    }
    for arc in &space.arcs {
        for vert in arc.path.vertices() {
            for c in vert.coords() {
                see(c);
            }
        }
    }
    let (min, max) = match (min, max) {
        (Some(a), Some(b)) => (a, b),
        _ => (Scalar::one(), Scalar::one()),
    };
    let delta = if min.is_positive() {
        Scalar::zero()
    } else {
        &Scalar::one() - &min
    };
    let offset = Point(vec![delta.clone(); space.n]);
    let r = (&max + &delta + &Scalar::one()).next_power_of_two();
    SpaceDescription {
        n: space.n,
        r: Some(r),
        points: space
            .points
            .iter()
            .map(|p| PointEntry {
                id: p.id.clone(),
                coords: p.coords.add(&offset),
                in_x: p.in_x,
                in_g: p.in_g,
            })
            .collect(),
        arcs: space
            .arcs
            .iter()
            .map(|a| Arc {
                id: a.id.clone(),
                path: a.path.translate(&offset),
                ends: a.ends.clone(),
            })
            .collect(),
        declared_k: space.declared_k,
        shift: Some(offset),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("the singular set is empty")]
    EmptySingularSet,
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
}

/// Half-widths `d_i` of the common separating box `B = Π(-d_i, d_i)`:
/// half the minimum positive gap of the i-th coordinate projection of `Z`,
/// falling back to `R` when the projection is a single value. Guarantees
/// `cl(z + B) ∩ Z = {z}` for every `z ∈ Z`.
pub fn separating_box(zs: &[Point], r: &Scalar) -> Result<Vec<Scalar>, SpaceError> {
    let first = zs.first().ok_or(SpaceError::EmptySingularSet)?;
    let n = first.dim();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut proj: Vec<Scalar> = zs.iter().map(|z| z.coords()[i].clone()).collect();
        proj.sort();
        proj.dedup();
        let min_gap = proj
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .min();
        match min_gap {
            Some(g) => out.push(&g / &Scalar::from_int(2)),
            None => out.push(r.clone()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separating_box_examples() {
        let r = Scalar::from_int(16);
        let zs = vec![
            Point::from_ints(&[1]),
            Point::from_ints(&[4]),
            Point::from_ints(&[9]),
        ];
        assert_eq!(separating_box(&zs, &r).unwrap(), vec![Scalar::ratio(3, 2)]);

        let zs = vec![Point::from_ints(&[0])];
        assert_eq!(separating_box(&zs, &r).unwrap(), vec![r.clone()]);

        let zs = vec![Point::from_ints(&[0, 0]), Point::from_ints(&[2, 0])];
        assert_eq!(
            separating_box(&zs, &r).unwrap(),
            vec![Scalar::one(), r.clone()]
        );

        assert_eq!(separating_box(&[], &r), Err(SpaceError::EmptySingularSet));
    }

    #[test]
    fn separating_box_separates() {
        let r = Scalar::from_int(16);
        let zs = vec![
            Point::from_ints(&[1, 5]),
            Point::from_ints(&[4, 5]),
            Point::from_ints(&[9, 2]),
        ];
        let d = separating_box(&zs, &r).unwrap();
        for z in &zs {
            for w in &zs {
                if z == w {
                    continue;
                }
                // w must be outside cl(z + B): some coordinate differs by more than d_i
                let outside = (0..2).any(|i| {
                    (&z.coords()[i] - &w.coords()[i]).abs() > d[i]
                });
                assert!(outside, "{w:?} inside the closed box around {z:?}");
            }
        }
    }

    #[test]
    fn normalize_shift_round_trip() {
        let space = SpaceDescription {
            n: 2,
            r: None,
            points: vec![PointEntry {
                id: "a".into(),
                coords: Point::from_ints(&[-3, 5]),
                in_x: true,
                in_g: false,
            }],
            arcs: vec![],
            declared_k: None,
            shift: None,
        };
        let norm = normalize_shift(&space);
        let shifted = &norm.points[0].coords;
        assert!(shifted.coords().iter().all(|c| c.is_positive()));
        let shift = norm.shift.clone().unwrap();
        assert_eq!(shifted.sub(&shift), space.points[0].coords);
        // R strictly dominates the shifted coordinates + 1
        let r = norm.r.unwrap();
        assert!(shifted.coords().iter().all(|c| &(c + &Scalar::one()) < &r));
    }
}
