//! Extension of the realization to spaces with finitely many unbounded
//! ends: the bounded core is realized first, then every ray is re-routed
//! onto a vertical line over an anchor point in one extra coordinate.

use thiserror::Error;

use crate::embedder::{affinize, BuildOptions, EmbedError, EmbeddedSpace};
use crate::kernel::{pl_intersections, End, KernelError, PLPath};
use crate::mapping::{MapPiece, PLMapping, PieceGeom, RayGeom};
use crate::scalar::{Point, Scalar};
use crate::space::{SpaceDescription, Violation};

/// One unbounded arc: a PL prefix continued by one ray direction, or two
/// for a full line. When `attach` names a core point, the prefix starts at
/// that point and the ray is glued there; otherwise the ray is a separate
/// connected component.
#[derive(Clone, Debug)]
pub struct UnboundedArc {
    pub id: String,
    pub geom: RayGeom,
    pub attach: Option<String>,
}

/// A space with a bounded core plus finitely many unbounded ends.
#[derive(Clone, Debug)]
pub struct ExtendedSpace {
    pub core: SpaceDescription,
    pub rays: Vec<UnboundedArc>,
}

impl ExtendedSpace {
    /// Splits the description into its bounded part and its rays.
    pub fn split_bounded(&self) -> (&SpaceDescription, &[UnboundedArc]) {
        (&self.core, &self.rays)
    }
}

/// The realized unbounded space: the core image with a zero appended,
/// plus one vertical ray or line per unbounded arc over its anchor.
#[derive(Clone, Debug)]
pub struct UnboundedEmbedding {
    pub core: EmbeddedSpace,
    pub ambient: usize,
    pub map: PLMapping,
    /// `(ray id, anchor in the core ambient)` per unbounded arc.
    pub anchors: Vec<(String, Point)>,
}

#[derive(Debug, Error)]
pub enum UnboundedError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid rays: {0:?}")]
    Validation(Vec<Violation>),
}

/// Structural validation of the rays against the core: junctions must be
/// named core points at the prefix start, and rays must stay off the core
/// and off each other away from their junctions.
pub fn validate_rays(ext: &ExtendedSpace) -> Vec<Violation> {
    let mut out = Vec::new();
    let r = ext
        .core
        .r
        .clone()
        .unwrap_or_else(|| Scalar::from_int(1));
    // beyond this arc length every normalized direction has left the
    // bounding box of the core, so a finite witness segment suffices
    let reach = &Scalar::from_int(4 * ext.core.n.max(1) as i64) * &r;
    let witness = |g: &RayGeom| -> Result<Vec<PLPath>, KernelError> {
        let mut parts = vec![g.prefix.clone()];
        let far = g.prefix.limit(End::High).add(&g.dir.scale(&reach));
        parts.push(PLPath::from_vertices(
            vec![g.prefix.limit(End::High).clone(), far],
            false,
            false,
        )?);
        if let Some(low) = &g.low_dir {
            let far = g.prefix.limit(End::Low).add(&low.scale(&reach));
            parts.push(PLPath::from_vertices(
                vec![g.prefix.limit(End::Low).clone(), far],
                false,
                false,
            )?);
        }
        Ok(parts)
    };

    for (ri, ray) in ext.rays.iter().enumerate() {
        if let Some(attach) = &ray.attach {
            match ext.core.point(attach) {
                Some(p) if p.in_x => {
                    if &p.coords != ray.geom.prefix.limit(End::Low) {
                        out.push(Violation {
                            code: "ray-junction-mismatch".into(),
                            subject: ray.id.clone(),
                            detail: format!(
                                "prefix starts at {:?}, not at {attach:?}",
                                ray.geom.prefix.limit(End::Low)
                            ),
                        });
                    }
                    if ray.geom.low_dir.is_some() {
                        out.push(Violation {
                            code: "attached-line".into(),
                            subject: ray.id.clone(),
                            detail: "a full line cannot attach to the core".into(),
                        });
                    }
                }
                _ => out.push(Violation {
                    code: "ray-junction-missing".into(),
                    subject: ray.id.clone(),
                    detail: format!("{attach:?} is not a point of the core"),
                }),
            }
        }
        let parts = match witness(&ray.geom) {
            Ok(p) => p,
            Err(e) => {
                out.push(Violation {
                    code: "ray-geometry".into(),
                    subject: ray.id.clone(),
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let junction = ray
            .attach
            .as_ref()
            .and_then(|a| ext.core.point(a))
            .map(|p| p.coords.clone());
        for arc in &ext.core.arcs {
            for part in &parts {
                let hits = match pl_intersections(part, &arc.path) {
                    Ok(h) => h,
                    Err(_) => continue,
                };
                let bad = hits.iter().any(|h| match h {
                    crate::kernel::IntersectionRecord::Point(p) => Some(p) != junction.as_ref(),
                    crate::kernel::IntersectionRecord::Overlap(_, _) => true,
                });
                if bad {
                    out.push(Violation {
                        code: "ray-crosses-core".into(),
                        subject: ray.id.clone(),
                        detail: format!("meets arc {:?} away from its junction", arc.id),
                    });
                }
            }
        }
        for other in &ext.rays[ri + 1..] {
            let other_parts = match witness(&other.geom) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let shared = (ray.attach.is_some() && ray.attach == other.attach)
                .then(|| junction.clone())
                .flatten();
            for a in &parts {
                for b in &other_parts {
                    let hits = match pl_intersections(a, b) {
                        Ok(h) => h,
                        Err(_) => continue,
                    };
                    let bad = hits.iter().any(|h| match h {
                        crate::kernel::IntersectionRecord::Point(p) => Some(p) != shared.as_ref(),
                        crate::kernel::IntersectionRecord::Overlap(_, _) => true,
                    });
                    if bad {
                        out.push(Violation {
                            code: "ray-overlaps-ray".into(),
                            subject: ray.id.clone(),
                            detail: format!("meets ray {:?} away from a junction", other.id),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Realizes a space with unbounded ends: the core construction in one
/// extra coordinate, with each ray straightened onto a vertical line over
/// its anchor. Attached rays anchor at the image of their junction point;
/// detached rays anchor at fresh points beyond the core bound.
pub fn affinize_unbounded(
    ext: &ExtendedSpace,
    opts: &BuildOptions,
) -> Result<UnboundedEmbedding, UnboundedError> {
    let violations = validate_rays(ext);
    if !violations.is_empty() {
        return Err(UnboundedError::Validation(violations));
    }
    let core = affinize(&ext.core, opts)?;
    let m = core.ambient;
    let ambient = m + 1;

    let lift1 = |p: &Point| -> Point {
        let mut c = p.coords().to_vec();
        c.push(Scalar::zero());
        Point(c)
    };

    let mut pieces: Vec<MapPiece> = core
        .map
        .pieces
        .iter()
        .map(|pc| MapPiece {
            name: pc.name.clone(),
            source: pc.source.clone(),
            target: match &pc.target {
                PieceGeom::Point(p) => PieceGeom::Point(lift1(p)),
                PieceGeom::Path(p) => PieceGeom::Path(p.map_vertices(&lift1)),
                PieceGeom::Ray(_) => unreachable!("core targets are bounded"),
            },
            corr: pc.corr.clone(),
        })
        .collect();

    let e_last = {
        let mut c = vec![Scalar::zero(); ambient];
        c[ambient - 1] = Scalar::one();
        Point(c)
    };

    let mut anchors = Vec::new();
    let mut detached = 0i64;
    for ray in &ext.rays {
        let (anchor, attached) = match &ray.attach {
            Some(id) => {
                let j = &ext.core.point(id).expect("validated junction").coords;
                // the junction may have been translated during normalization
                let shifted = match &core.space.shift {
                    Some(delta) => j.add(delta),
                    None => j.clone(),
                };
                let fx = core
                    .map
                    .eval(&shifted)
                    .expect("junction is a mapped core point");
                (fx, true)
            }
            None => {
                detached += 1;
                let mut c = vec![Scalar::zero(); m];
                c[0] = &core.r + &Scalar::from_int(detached);
                (Point(c), false)
            }
        };

        let base = {
            let mut c = anchor.coords().to_vec();
            c.push(Scalar::zero());
            Point(c)
        };
        let top = base.add(&e_last);
        let mut prefix = PLPath::from_vertices(vec![base, top], false, false)?;
        prefix.left_open = attached;
        let target = RayGeom::new(
            prefix,
            e_last.clone(),
            ray.geom.low_dir.as_ref().map(|_| {
                let mut c = vec![Scalar::zero(); ambient];
                c[ambient - 1] = -Scalar::one();
                Point(c)
            }),
        )?;

        let mut source = ray.geom.clone();
        source.prefix.left_open = attached || source.prefix.left_open;

        pieces.push(MapPiece {
            name: format!("ray:{}", ray.id),
            source: PieceGeom::Ray(source),
            target: PieceGeom::Ray(target),
            corr: None,
        });
        anchors.push((ray.id.clone(), anchor));
    }

    let map = PLMapping {
        pieces,
        source_dim: ext.core.n,
        target_dim: ambient,
    };
    Ok(UnboundedEmbedding {
        core,
        ambient,
        map,
        anchors,
    })
}

/// Properness spot-check at increasing truncations: beyond parameter `T`
/// every ray image has escaped the box `[-T, T]^ambient`, and within the
/// truncation the preimage stays an initial bounded piece.
pub fn verify_properness(emb: &UnboundedEmbedding, truncations: &[i64]) -> Vec<Violation> {
    let mut out = Vec::new();
    for piece in &emb.map.pieces {
        let PieceGeom::Ray(src) = &piece.source else {
            continue;
        };
        let PieceGeom::Ray(tgt) = &piece.target else {
            out.push(Violation {
                code: "ray-target-shape".into(),
                subject: piece.name.clone(),
                detail: "ray source with bounded target".into(),
            });
            continue;
        };
        for &t in truncations {
            let bound = Scalar::from_int(t);
            let probe = &bound + &Scalar::one();
            for s in [probe.clone(), &probe + &probe] {
                let y = match tgt.eval(&s) {
                    Ok(y) => y,
                    Err(e) => {
                        out.push(Violation {
                            code: "ray-eval".into(),
                            subject: piece.name.clone(),
                            detail: e.to_string(),
                        });
                        continue;
                    }
                };
                let escaped = y.coords().iter().any(|c| c.abs() > bound);
                if !escaped {
                    out.push(Violation {
                        code: "not-proper".into(),
                        subject: piece.name.clone(),
                        detail: format!("image at parameter {s} is still inside [-{t}, {t}]"),
                    });
                }
                // the source point at the same parameter is also far out
                if let Ok(x) = src.eval(&s) {
                    if x.coords().iter().all(|c| c.abs() <= bound) {
                        out.push(Violation {
                            code: "preimage-unbounded".into(),
                            subject: piece.name.clone(),
                            detail: format!("source at parameter {s} never escapes"),
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Arc, EndSpec, PointEntry, TauTarget};

    fn entry(id: &str, coords: &[i64], in_x: bool, in_g: bool) -> PointEntry {
        PointEntry {
            id: id.into(),
            coords: Point::from_ints(coords),
            in_x,
            in_g,
        }
    }

    /// The non-affine circle presentation with a ray attached at the glue
    /// point, plus a detached full line.
    fn circle_with_rays() -> ExtendedSpace {
        let path = PLPath::from_vertices(
            vec![Point::from_ints(&[1, 1]), Point::from_ints(&[9, 1])],
            false,
            true,
        )
        .unwrap();
        let core = SpaceDescription {
            n: 2,
            r: Some(Scalar::from_int(16)),
            points: vec![
                entry("g", &[1, 1], true, true),
                entry("e", &[9, 1], false, false),
            ],
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
        };
        let up = RayGeom::new(
            PLPath::from_vertices(
                vec![Point::from_ints(&[1, 1]), Point::from_ints(&[1, 3])],
                false,
                false,
            )
            .unwrap(),
            Point::from_ints(&[0, 1]),
            None,
        )
        .unwrap();
        let line = RayGeom::new(
            PLPath::from_vertices(
                vec![Point::from_ints(&[20, 0]), Point::from_ints(&[21, 0])],
                false,
                false,
            )
            .unwrap(),
            Point::from_ints(&[1, 0]),
            Some(Point::from_ints(&[-1, 0])),
        )
        .unwrap();
        ExtendedSpace {
            core,
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

    #[test]
    fn rays_validate_and_embed() {
        let ext = circle_with_rays();
        assert!(validate_rays(&ext).is_empty());
        let emb = affinize_unbounded(&ext, &BuildOptions::default()).unwrap();
        assert_eq!(emb.ambient, emb.core.ambient + 1);

        // the attached ray sits vertically over the image of g
        let f_g = emb.core.map.eval(&Point::from_ints(&[1, 1])).unwrap();
        assert_eq!(emb.anchors[0].1, f_g);
        let y = emb.map.eval(&Point::from_ints(&[1, 4])).unwrap();
        assert_eq!(y.coords()[emb.ambient - 1], Scalar::from_int(3));

        // the detached line anchors beyond the bound
        assert!(emb.anchors[1].1.coords()[0] > emb.core.r);
        let far = emb.map.eval(&Point::from_ints(&[25, 0])).unwrap();
        assert_eq!(y.coords().len(), emb.ambient);
        assert!(far.coords()[emb.ambient - 1] > Scalar::zero());
        let back = emb.map.eval(&Point::from_ints(&[15, 0])).unwrap();
        assert!(back.coords()[emb.ambient - 1] < Scalar::zero());
    }

    #[test]
    fn properness_holds_at_standard_truncations() {
        let ext = circle_with_rays();
        let emb = affinize_unbounded(&ext, &BuildOptions::default()).unwrap();
        assert!(verify_properness(&emb, &[10, 100, 1000]).is_empty());
    }

    #[test]
    fn crossing_ray_is_rejected() {
        let mut ext = circle_with_rays();
        // re-route the detached line straight through the core arc
        ext.rays[1].geom = RayGeom::new(
            PLPath::from_vertices(
                vec![Point::from_ints(&[5, 0]), Point::from_ints(&[5, 2])],
                false,
                false,
            )
            .unwrap(),
            Point::from_ints(&[0, 1]),
            None,
        )
        .unwrap();
        let v = validate_rays(&ext);
        assert!(v.iter().any(|x| x.code == "ray-crosses-core"));
    }
}
