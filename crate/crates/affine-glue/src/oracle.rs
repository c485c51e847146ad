//! Independent checks: certificate verification by exhaustive exact
//! sampling, a bisection solver for the crossing equation, and a
//! brute-force shadow computation from shrinking neighborhoods.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::embedder::EmbeddedSpace;
use crate::kernel::{KernelError, PLFunction, PLPath};
use crate::mapping::{MapPiece, PieceGeom};
use crate::neighborhood::{basic_neighborhood, NeighborhoodError, Radii};
use crate::scalar::{taxicab, Point, Scalar};
use crate::space::{SpaceDescription, TauTarget, Violation};
use crate::verifier::discontinuity_locus;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("radius schedule too coarse: limits never stabilized")]
    ScheduleTooCoarse,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Neighborhood(#[from] NeighborhoodError),
    #[error("no sign change of g - h on (0, u)")]
    NoSignChange,
}

/// Independent crossing solver: scans a uniform grid for the first sign
/// change of `g - h` and bisects it. Returns an exact enclosure `[lo, hi]`
/// of the leftmost crossing; sound when `g - h` changes sign once.
pub fn bisection_crossing(
    g: &PLFunction,
    h: &PLFunction,
    u: &Scalar,
    grid: usize,
    iters: usize,
) -> Result<(Scalar, Scalar), OracleError> {
    let diff = |t: &Scalar| -> Result<Scalar, KernelError> { Ok(&g.eval(t)? - &h.eval(t)?) };
    let mut lo = Scalar::zero();
    let mut hi = u.clone();
    let mut found = false;
    let gq = Scalar::from_int(grid as i64);
    for j in 0..grid {
        let a = &(&(u * &Scalar::from_int(j as i64)) / &gq);
        let b = &(&(u * &Scalar::from_int((j + 1) as i64)) / &gq);
        if diff(a)?.is_negative() && !diff(b)?.is_negative() {
            lo = a.clone();
            hi = b.clone();
            found = true;
            break;
        }
    }
    if !found {
        return Err(OracleError::NoSignChange);
    }
    for _ in 0..iters {
        let mid = &(&lo + &hi) / &Scalar::from_int(2);
        if diff(&mid)?.is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Resolves a first crossing of `g` and `h` on `(0, u)` to within `tol`:
/// bisects the leftmost sign-change cell of a uniform grid until the
/// enclosure is narrower than `tol` and returns its midpoint.
pub fn bisection_crossing_tol(
    g: &PLFunction,
    h: &PLFunction,
    u: &Scalar,
    tol: &Scalar,
) -> Result<Scalar, OracleError> {
    let (mut lo, mut hi) = bisection_crossing(g, h, u, 64, 0)?;
    let two = Scalar::from_int(2);
    while &(&hi - &lo) > tol {
        let mid = &(&lo + &hi) / &two;
        if (&g.eval(&mid)? - &h.eval(&mid)?).is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(&(&lo + &hi) / &two)
}

/// Exact sample parameters of a path: all vertices plus `density - 1`
/// evenly spaced interior points of every segment, honoring open end flags.
fn sample_params(path: &PLPath, density: usize) -> Vec<Scalar> {
    let params = path.params();
    let density = density.max(2);
    let d = Scalar::from_int(density as i64);
    let mut out = Vec::new();
    for w in params.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        out.push(a.clone());
        for j in 1..density {
            let frac = &Scalar::from_int(j as i64) / &d;
            out.push(a + &(&frac * &(b - a)));
        }
    }
    out.push(params[params.len() - 1].clone());
    if path.left_open {
        out.remove(0);
    }
    if path.right_open {
        out.pop();
    }
    out.sort();
    out.dedup();
    out
}

fn sample_source(piece: &MapPiece, density: usize) -> Vec<Point> {
    match &piece.source {
        PieceGeom::Point(p) => vec![p.clone()],
        PieceGeom::Path(p) => sample_params(p, density)
            .iter()
            .map(|t| p.eval(t).expect("in-range sample"))
            .collect(),
        PieceGeom::Ray(r) => {
            let mut out: Vec<Point> = sample_params(&r.prefix, density)
                .iter()
                .map(|t| r.prefix.eval(t).expect("in-range sample"))
                .collect();
            let hi = r.prefix_len();
            for j in 1..=3i64 {
                let t = &hi + &Scalar::from_int(j);
                out.push(r.eval(&t).expect("tail sample"));
                if r.low_dir.is_some() {
                    out.push(r.eval(&-&Scalar::from_int(j)).expect("tail sample"));
                }
            }
            out
        }
    }
}

fn piece_value(piece: &MapPiece, x: &Point) -> Option<Point> {
    let t = piece.source.param_of(x)?;
    let s = piece.target_param(&t).ok()?;
    piece.target.eval(&s).ok()
}

/// Checks that the realization map is a bijection onto its image: piece
/// values agree on overlaps, distinct sources have distinct images, and the
/// target-side inverse returns every sampled point.
pub fn verify_bijection(emb: &EmbeddedSpace, density: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut image: BTreeMap<Point, Point> = BTreeMap::new();

    for piece in &emb.map.pieces {
        for x in sample_source(piece, density) {
            let values: Vec<Point> = emb
                .map
                .pieces
                .iter()
                .filter_map(|pc| piece_value(pc, &x))
                .collect();
            if values.is_empty() {
                out.push(Violation {
                    code: "unmapped-point".into(),
                    subject: piece.name.clone(),
                    detail: format!("{x:?} has no image"),
                });
                continue;
            }
            if values.windows(2).any(|w| w[0] != w[1]) {
                out.push(Violation {
                    code: "inconsistent-overlap".into(),
                    subject: piece.name.clone(),
                    detail: format!("pieces disagree at {x:?}"),
                });
            }
            let y = values[0].clone();
            if let Some(prev) = image.get(&y) {
                if prev != &x {
                    out.push(Violation {
                        code: "not-injective".into(),
                        subject: piece.name.clone(),
                        detail: format!("{prev:?} and {x:?} share the image {y:?}"),
                    });
                }
            } else {
                image.insert(y.clone(), x.clone());
            }
            match emb.map.eval_inverse(&y) {
                Some(back) if back == x => {}
                other => out.push(Violation {
                    code: "inverse-mismatch".into(),
                    subject: piece.name.clone(),
                    detail: format!("f^-1(f({x:?})) = {other:?}"),
                }),
            }
        }
    }
    out
}

/// Full certificate check: bijectivity, an empty discontinuity locus,
/// exact image containment in the declared blocks, and the shrinking-image
/// property along every re-glued germ.
pub fn verify_homeomorphism(emb: &EmbeddedSpace, density: usize) -> Vec<Violation> {
    let mut out = verify_bijection(emb, density);

    for x in discontinuity_locus(&emb.space, &emb.map) {
        out.push(Violation {
            code: "discontinuity".into(),
            subject: "map".into(),
            detail: format!("τ-discontinuity at {x:?}"),
        });
    }

    // every sampled image must lie on a declared block
    for piece in &emb.map.pieces {
        for x in sample_source(piece, density) {
            let Some(y) = piece_value(piece, &x) else {
                continue;
            };
            let on_block = emb
                .blocks
                .iter()
                .any(|b| b.path.inverse(&y).is_ok());
            if !on_block {
                out.push(Violation {
                    code: "off-block".into(),
                    subject: piece.name.clone(),
                    detail: format!("image {y:?} is on no declared block"),
                });
            }
        }
    }

    // images contract toward f(x) along every re-glued germ: the image of
    // γ(t) stays within chain distance Φ(t) of the image of the target
    for rec in &emb.germs {
        let Some(target) = &rec.target_id else {
            continue;
        };
        let Some(tp) = emb.space.point(target) else {
            continue;
        };
        let Some(fx) = emb.map.eval(&tp.coords) else {
            out.push(Violation {
                code: "target-unmapped".into(),
                subject: rec.arc_id.clone(),
                detail: format!("glue target {target:?} has no image"),
            });
            continue;
        };
        let Some(germ) = oriented_germ(&emb.space, rec) else {
            continue;
        };
        let scale = &(&Scalar::from_int(3 * emb.n as i64) * &emb.r) / &emb.u;
        let mut t = rec.v.clone();
        for _ in 0..6 {
            t = &t / &Scalar::from_int(2);
            let x = germ.eval(&t).expect("within germ");
            let Some(y) = emb.map.eval(&x) else {
                out.push(Violation {
                    code: "unmapped-point".into(),
                    subject: rec.arc_id.clone(),
                    detail: format!("germ point {x:?} has no image"),
                });
                break;
            };
            let bound = &scale * &t;
            let dist = taxicab(&y, &fx).expect("ambient dim");
            if dist > bound {
                out.push(Violation {
                    code: "no-contraction".into(),
                    subject: rec.arc_id.clone(),
                    detail: format!(
                        "image at germ parameter {t} sits {dist} from the target image, \
                         beyond the bound {bound}"
                    ),
                });
                break;
            }
        }
    }

    out
}

/// The unit-speed arc path oriented away from the germ's base end.
fn oriented_germ(space: &SpaceDescription, rec: &crate::embedder::GermRecord) -> Option<PLPath> {
    let arc = space.arcs.iter().find(|a| a.id == rec.arc_id)?;
    for (idx, end) in arc.ends.iter().enumerate() {
        if end.limit == rec.base_id && matches!(end.tau, TauTarget::Glue(_) | TauTarget::NoLimit) {
            return Some(if idx == 1 {
                arc.path.reversed().unit_speed()
            } else {
                arc.path.unit_speed()
            });
        }
    }
    None
}

/// Brute-force shadow of a point: affine limit points of its basic
/// neighborhoods that survive every radius of a shrinking power-of-two
/// schedule. Limits must stabilize for three consecutive radii.
pub fn brute_force_shadows(
    space: &SpaceDescription,
    x_id: &str,
    start: &Scalar,
    steps: u32,
) -> Result<Vec<Point>, OracleError> {
    let mut stable: Option<Vec<Point>> = None;
    let mut streak = 0u32;
    let mut survivors: Option<Vec<Point>> = None;
    for j in 0..steps {
        let radius = start * &Scalar::pow2_neg(j);
        let region = basic_neighborhood(space, x_id, &Radii::uniform(radius))?;
        let limits = region.closure_limits(space)?;
        let next = match survivors {
            None => limits,
            Some(prev) => prev.into_iter().filter(|p| limits.contains(p)).collect(),
        };
        match &stable {
            Some(s) if s == &next => streak += 1,
            _ => {
                stable = Some(next.clone());
                streak = 0;
            }
        }
        survivors = Some(next);
        if streak >= 3 {
            return Ok(stable.unwrap());
        }
    }
    Err(OracleError::ScheduleTooCoarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::{affinize, BuildOptions};
    use crate::kernel::phi_function;
    use crate::neighborhood::shadow_set;
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
    fn bisection_encloses_exact_crossing() {
        // Φ(t) = 30t against d' = 10 + 3t on (0, 1): crossing at 10/27
        let g = phi_function(&Scalar::one(), 1, &Scalar::from_int(10));
        let h = PLFunction::new(
            vec![Scalar::zero(), Scalar::one()],
            vec![Scalar::from_int(10), Scalar::from_int(13)],
        )
        .unwrap();
        let (lo, hi) = bisection_crossing(&g, &h, &Scalar::one(), 16, 40).unwrap();
        let exact = Scalar::ratio(10, 27);
        assert!(lo <= exact && exact <= hi);
        assert!(&hi - &lo <= Scalar::pow2_neg(38));
    }

    #[test]
    fn circle_certificate_verifies() {
        let emb = affinize(&circle(), &BuildOptions::default()).unwrap();
        let violations = verify_homeomorphism(&emb, 12);
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn defective_staircase_is_caught() {
        let mut sp = circle();
        // lift the circle into the plane so the staircase variant differs
        for p in &mut sp.points {
            p.coords = Point(vec![p.coords.coords()[0].clone(), Scalar::from_int(2)]);
        }
        sp.n = 2;
        let verts: Vec<Point> = vec![
            Point::from_ints(&[1, 2]),
            Point::from_ints(&[9, 2]),
            Point::from_ints(&[9, 7]),
        ];
        sp.arcs[0].path = PLPath::from_vertices(verts, false, true).unwrap();
        sp.points[1].coords = Point::from_ints(&[9, 7]);
        let emb = affinize(
            &sp,
            &BuildOptions {
                unit_speed: false,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        let violations = verify_homeomorphism(&emb, 12);
        assert!(violations.iter().any(|v| v.code == "off-block"));
    }

    #[test]
    fn brute_force_shadow_matches_direct_computation() {
        let sp = circle();
        let brute =
            brute_force_shadows(&sp, "g", &Scalar::one(), 12).unwrap();
        assert_eq!(brute, shadow_set(&sp, "g").unwrap());
    }
}
