//! Decision procedure for the affineness criterion, structural claims about
//! the germ decomposition, and the `τ`-discontinuity locus of a candidate
//! realization map.

use std::collections::BTreeMap;

use crate::germ::{Connection, GermTable};
use crate::kernel::{pl_intersections, End};
use crate::mapping::PLMapping;
use crate::neighborhood::{count_branches, shadow_set, NeighborhoodError};
use crate::scalar::{Point, Scalar};
use crate::space::{SpaceDescription, TauTarget, Violation};

/// Outcome of the affineness criterion: branch counts over the marked
/// singular set, their maximum `K`, and the reasons for rejection, if any.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub accepted: bool,
    /// Largest number of local branches at a marked singular point.
    pub k: usize,
    pub branch_counts: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
}

/// Decides the criterion on a validated space. The space is affine in the
/// glued topology exactly when every end's `τ`-limit is compatible with the
/// affine structure: re-glued and limitless ends may only escape through
/// frontier or marked singular points, and branch counts stay within any
/// declared bound.
pub fn check_criterion(space: &SpaceDescription) -> Result<CriterionReport, NeighborhoodError> {
    let mut violations = Vec::new();

    for arc in &space.arcs {
        for (idx, end) in arc.ends.iter().enumerate() {
            let side = if idx == 0 { "low" } else { "high" };
            let escapes = matches!(end.tau, TauTarget::Glue(_) | TauTarget::NoLimit);
            if !escapes {
                continue;
            }
            if let Some(limit) = space.point(&end.limit) {
                if limit.in_x && !limit.in_g {
                    violations.push(Violation {
                        code: "tau-limit-in-space".into(),
                        subject: format!("{}/{}", arc.id, side),
                        detail: format!(
                            "end escapes through {:?}, an ordinary point of X: \
                             the glued topology would not be Hausdorff-regular there",
                            end.limit
                        ),
                    });
                }
            }
        }
    }

    let mut branch_counts = BTreeMap::new();
    let mut k = 0usize;
    for p in space.g_ids() {
        let b = count_branches(space, &p.id)?;
        k = k.max(b);
        branch_counts.insert(p.id.clone(), b);
    }

    if let Some(declared) = space.declared_k {
        for (id, b) in &branch_counts {
            if *b > declared {
                violations.push(Violation {
                    code: "declared-k-exceeded".into(),
                    subject: id.clone(),
                    detail: format!("branch bound {declared} declared but {b} branches meet at {id}"),
                });
            }
        }
    }

    Ok(CriterionReport {
        accepted: violations.is_empty(),
        k,
        branch_counts,
        violations,
    })
}

/// Verifies the structural claims behind the germ decomposition: germs stay
/// strictly inside their separating boxes, their nontrivial endpoints avoid
/// the singular set, distinct germs are disjoint, slot assignments are in
/// range, and shadows of marked singular points stay inside the singular set.
pub fn check_claims(
    space: &SpaceDescription,
    table: &GermTable,
) -> Result<Vec<Violation>, NeighborhoodError> {
    let mut out = Vec::new();
    let z_coords: Vec<Point> = space
        .z_ids()
        .iter()
        .map(|p| p.coords.clone())
        .collect();

    for (gi, g) in table.germs.iter().enumerate() {
        for v in g.path.vertices() {
            for (i, c) in v.coords().iter().enumerate() {
                if &(c - &g.base.coords()[i]).abs() >= &table.box_half_widths[i] {
                    out.push(Violation {
                        code: "germ-escapes-box".into(),
                        subject: format!("{}@{}", g.arc_id, g.base_id),
                        detail: format!("vertex {v:?} leaves the separating box"),
                    });
                }
            }
        }
        if z_coords.contains(&g.nontrivial_endpoint) {
            out.push(Violation {
                code: "germ-endpoint-singular".into(),
                subject: format!("{}@{}", g.arc_id, g.base_id),
                detail: format!("endpoint {:?} lies in Z", g.nontrivial_endpoint),
            });
        }
        if g.needs_surgery() {
            match g.surgery_class {
                Some(i) if i < table.n_classes => {}
                _ => out.push(Violation {
                    code: "surgery-class-missing".into(),
                    subject: format!("{}@{}", g.arc_id, g.base_id),
                    detail: "surgery germ without class index".into(),
                }),
            }
        }
        if let Some(slot) = g.slot_k {
            if slot == 0 || slot > table.k {
                out.push(Violation {
                    code: "slot-out-of-range".into(),
                    subject: format!("{}@{}", g.arc_id, g.base_id),
                    detail: format!("slot {slot} outside 1..={}", table.k),
                });
            }
        }
        for h in &table.germs[gi + 1..] {
            let crossings = pl_intersections(&g.path, &h.path)
                .expect("germ paths share the ambient dimension");
            let allowed = |p: &Point| p == &g.base || p == &h.base;
            let bad = crossings.iter().any(|c| match c {
                crate::kernel::IntersectionRecord::Point(p) => !allowed(p),
                crate::kernel::IntersectionRecord::Overlap(_, _) => true,
            });
            if bad {
                out.push(Violation {
                    code: "germs-overlap".into(),
                    subject: format!("{}@{} vs {}@{}", g.arc_id, g.base_id, h.arc_id, h.base_id),
                    detail: "distinct germs meet away from their bases".into(),
                });
            }
        }
    }

    for p in space.g_ids() {
        for s in shadow_set(space, &p.id)? {
            if s != p.coords && !z_coords.contains(&s) {
                out.push(Violation {
                    code: "shadow-outside-z".into(),
                    subject: p.id.clone(),
                    detail: format!("shadow point {s:?} is not singular"),
                });
            }
        }
    }

    if table
        .germs
        .iter()
        .any(|g| g.connection != Connection::SelfBase)
        && !table.u.is_positive()
    {
        out.push(Violation {
            code: "degenerate-safe-radius".into(),
            subject: "germ-table".into(),
            detail: "surgery germs present but the safe radius is zero".into(),
        });
    }

    Ok(out)
}

/// Image limit of an arc end under a piecewise map: the target-side limit
/// of the piece whose source covers the arc arbitrarily close to that end.
pub fn image_limit_at_end(
    map: &PLMapping,
    arc: &crate::space::Arc,
    end: End,
) -> Option<Point> {
    let (t_end, t_other) = match end {
        End::Low => (arc.path.param_lo(), arc.path.param_hi()),
        End::High => (arc.path.param_hi(), arc.path.param_lo()),
    };
    let vertex = arc.path.limit(end);
    let mut step = &(t_other - t_end) / &Scalar::from_int(2);
    for _ in 0..64 {
        let t = t_end + &step;
        let p = arc.path.eval(&t).ok()?;
        if let Some(piece) = map.pieces.iter().find(|pc| pc.source.contains(&p)) {
            for (src, tgt) in piece.end_limits() {
                if &src == vertex {
                    return Some(tgt);
                }
            }
        }
        step = &step / &Scalar::from_int(2);
    }
    None
}

/// Points where a candidate map fails to be a `τ`-homeomorphism onto its
/// image: affine and re-glued ends whose image limits disagree with the
/// image of the `τ`-limit point, limitless ends whose images nevertheless
/// converge into the image, and piece junctions where the map values jump.
pub fn discontinuity_locus(space: &SpaceDescription, map: &PLMapping) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();

    // piece junctions: approaching a point of X affinely must reach f(x)
    for piece in &map.pieces {
        for (src, tgt) in piece.end_limits() {
            if let Some(y) = map.eval(&src) {
                if y != tgt {
                    out.push(src.clone());
                }
            }
        }
    }

    // τ-ends: the image limit along each end against the glued topology
    for arc in &space.arcs {
        for (idx, end) in arc.ends.iter().enumerate() {
            let which = if idx == 0 { End::Low } else { End::High };
            let w = image_limit_at_end(map, arc, which);
            match &end.tau {
                TauTarget::Affine | TauTarget::Glue(_) => {
                    let target_id = match &end.tau {
                        TauTarget::Glue(g) => g,
                        _ => &end.limit,
                    };
                    let Some(x) = space.point(target_id) else {
                        continue;
                    };
                    let fx = map.eval(&x.coords);
                    if w.is_none() || fx.is_none() || w != fx {
                        out.push(x.coords.clone());
                    }
                }
                TauTarget::NoLimit => {
                    if let Some(w) = w {
                        if map.pieces.iter().any(|pc| pc.target.contains(&w)) {
                            if let Some(p) = space.point(&end.limit) {
                                out.push(p.coords.clone());
                            }
                        }
                    }
                }
            }
        }
    }

    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::germ_table;
    use crate::kernel::PLPath;
    use crate::mapping::{MapPiece, PieceGeom};
    use crate::space::{Arc, EndSpec, PointEntry};

    fn entry(id: &str, coords: &[i64], in_x: bool, in_g: bool) -> PointEntry {
        PointEntry {
            id: id.into(),
            coords: Point::from_ints(coords),
            in_x,
            in_g,
        }
    }

    fn circle() -> SpaceDescription {
        let path = PLPath::from_vertices(
            vec![Point::from_ints(&[1]), Point::from_ints(&[9])],
            false,
            true,
        )
        .unwrap();
        SpaceDescription {
            n: 1,
            r: Some(Scalar::from_int(16)),
            points: vec![entry("g", &[1], true, true), entry("e", &[9], false, false)],
            arcs: vec![Arc {
                id: "a".into(),
                path,
                ends: [
                    EndSpec {
                        limit: "g".into(),
                        member: true,
                        tau: TauTarget::Affine,
                    },
                    EndSpec {
                        limit: "e".into(),
                        member: false,
                        tau: TauTarget::Glue("g".into()),
                    },
                ],
            }],
            declared_k: None,
            shift: None,
        }
    }

    #[test]
    fn circle_is_accepted_with_two_branches() {
        let report = check_criterion(&circle()).unwrap();
        assert!(report.accepted);
        assert_eq!(report.k, 2);
        assert_eq!(report.branch_counts.get("g"), Some(&2));
    }

    #[test]
    fn escape_through_ordinary_point_is_rejected() {
        let mut sp = circle();
        // make the frontier point an ordinary member of X
        sp.points[1].in_x = true;
        sp.arcs[0].ends[1].tau = TauTarget::NoLimit;
        let report = check_criterion(&sp).unwrap();
        assert!(!report.accepted);
        assert_eq!(report.violations[0].code, "tau-limit-in-space");
    }

    #[test]
    fn declared_bound_is_enforced() {
        let mut sp = circle();
        sp.declared_k = Some(1);
        let report = check_criterion(&sp).unwrap();
        assert!(!report.accepted);
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == "declared-k-exceeded"));
    }

    #[test]
    fn circle_claims_hold() {
        let sp = circle();
        let table = germ_table(&sp).unwrap();
        assert!(check_claims(&sp, &table).unwrap().is_empty());
    }

    #[test]
    fn naive_identity_on_circle_is_discontinuous_at_glue_point() {
        let sp = circle();
        let map = PLMapping {
            pieces: vec![
                MapPiece {
                    name: "g".into(),
                    source: PieceGeom::Point(Point::from_ints(&[1])),
                    target: PieceGeom::Point(Point::from_ints(&[1])),
                    corr: None,
                },
                MapPiece {
                    name: "a".into(),
                    source: PieceGeom::Path(sp.arcs[0].path.clone()),
                    target: PieceGeom::Path(sp.arcs[0].path.clone()),
                    corr: None,
                },
            ],
            source_dim: 1,
            target_dim: 1,
        };
        let locus = discontinuity_locus(&sp, &map);
        assert_eq!(locus, vec![Point::from_ints(&[1])]);
    }
}
