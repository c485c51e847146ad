//! The affine realization: replaces every re-glued or limitless germ by an
//! explicit block construction in `Q^{n(1+KN)}` and assembles the piecewise
//! homeomorphism onto the image, together with a checkable certificate.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::germ::{germ_table, Connection, Germ, GermError, GermTable};
use crate::kernel::{
    phi_function, pl_intersections, solve_first_crossing, std_connection, IntersectionRecord,
    KernelError, PLFunction, PLPath,
};
use crate::mapping::{MapPiece, PLMapping, PieceGeom};
use crate::scalar::{taxicab, Point, Scalar};
use crate::space::{normalize_shift, validate, SpaceDescription, Violation};
use crate::verifier::check_criterion;

/// Construction switches. All of them default to the corrected behavior;
/// turning one off reproduces a defective variant whose failure is
/// detectable by the certificate checks.
#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Use the crossing point `q` as the held slot value on the middle
    /// branch (off: hold the germ's far endpoint instead, which breaks
    /// continuity at the first branch junction).
    pub substitute_q: bool,
    /// Route branch parameters through the rescaling `Φ` (off: raw germ
    /// parameters clamped into the branch, which undershoots junctions).
    pub rescale: bool,
    /// Use the corrected trailing-zero count after the slot block (off: a
    /// miscounted tail changes the block dimension).
    pub corrected_tail: bool,
    /// Re-slot colliding germs until all blocks are disjoint.
    pub repair: bool,
    /// Connect block endpoints by the standard last-coordinate-first
    /// staircase (off: a first-coordinate-first staircase that leaves the
    /// declared blocks).
    pub unit_speed: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            substitute_q: true,
            rescale: true,
            corrected_tail: true,
            repair: true,
            unit_speed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Untouched part of the space, lifted with trailing zeros.
    Residual,
    /// One branch (1, 2 or 3) of a re-glued germ's block chain.
    Surgery { germ: usize, branch: u8 },
    /// The half-open interval replacing a limitless germ.
    NoLimit { germ: usize },
}

#[derive(Clone, Debug)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    pub path: PLPath,
}

/// Certificate data for one surgically treated germ.
#[derive(Clone, Debug)]
pub struct GermRecord {
    pub arc_id: String,
    pub base_id: String,
    pub target_id: Option<String>,
    /// 1-based shape-class row `i`.
    pub class: usize,
    /// 1-based slot `k` (after any re-slotting).
    pub slot: usize,
    /// Trim parameter: the `Φ = d'` crossing for glued germs, the safe
    /// radius for limitless germs.
    pub v: Scalar,
    pub q: Option<Point>,
    /// Cumulative branch lengths `[ℓ₁, ℓ₁+ℓ₂, ℓ₁+ℓ₂+ℓ₃]` for glued germs.
    pub thresholds: Vec<Scalar>,
}

/// One re-slotting performed by the collision repair loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairRecord {
    pub arc_id: String,
    pub base_id: String,
    pub from_slot: usize,
    pub to_slot: usize,
}

/// The result of the construction: the image blocks in `Q^{n(1+KN)}`, the
/// realization map, and the per-germ certificate records.
#[derive(Clone, Debug)]
pub struct EmbeddedSpace {
    /// The normalized working copy of the input.
    pub space: SpaceDescription,
    pub n: usize,
    pub ambient: usize,
    pub k: usize,
    pub n_classes: usize,
    pub u: Scalar,
    pub r: Scalar,
    pub blocks: Vec<Block>,
    pub map: PLMapping,
    pub germs: Vec<GermRecord>,
    /// Re-slottings performed by the collision repair loop, in order.
    pub repairs: Vec<RepairRecord>,
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("validation failed: {0:?}")]
    Validation(Vec<Violation>),
    #[error("criterion rejected: {0:?}")]
    Rejected(Vec<Violation>),
    #[error(transparent)]
    Germ(#[from] GermError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("block dimension drift: expected {expected}, found {found}")]
    DimensionDrift { expected: usize, found: usize },
    #[error("collision repair did not converge: {0}")]
    RepairFailed(String),
}

/// The branch-length profile `d'(t) = 2·d(0, γ(t)) + d(ζ, γ(t))` along a
/// germ, as an exact PL function of the germ parameter.
pub fn dprime_function(germ: &PLPath, zeta: &Point) -> Result<PLFunction, KernelError> {
    let mut params: Vec<Scalar> = germ.params().to_vec();
    let verts = germ.vertices();
    for s in 0..verts.len().saturating_sub(1) {
        for i in 0..zeta.dim() {
            let a = &verts[s].coords()[i];
            let b = &verts[s + 1].coords()[i];
            let z = &zeta.coords()[i];
            if (a < z && z < b) || (b < z && z < a) {
                let t = &germ.params()[s]
                    + &(&(&(z - a) / &(b - a)) * &(&germ.params()[s + 1] - &germ.params()[s]));
                params.push(t);
            }
        }
    }
    params.sort();
    params.dedup();
    let origin = Point::origin(zeta.dim());
    let values = params
        .iter()
        .map(|t| {
            let p = germ.eval(t)?;
            Ok(&(&Scalar::from_int(2) * &taxicab(&origin, &p)?) + &taxicab(zeta, &p)?)
        })
        .collect::<Result<Vec<_>, KernelError>>()?;
    PLFunction::new(params, values)
}

/// Trim parameter and crossing point of a glued germ: the first solution of
/// `Φ(t) = d'(t)` on `(0, u)` and the germ point there.
pub fn compute_crossing(
    germ: &Germ,
    zeta: &Point,
    n: usize,
    r: &Scalar,
    u: &Scalar,
) -> Result<(Scalar, Point), KernelError> {
    let phi = phi_function(u, n, r);
    let dprime = dprime_function(&germ.path, zeta)?;
    let v = solve_first_crossing(&phi, &dprime, u)?;
    let q = germ.path.eval(&v)?;
    Ok((v, q))
}

/// Coordinate offset of slot `(i, k)` (both 1-based) in the block layout.
fn slot_offset(n: usize, k_bound: usize, i: usize, k: usize) -> usize {
    n + n * ((i - 1) * k_bound + (k - 1))
}

/// Lifts an ambient `n`-point by trailing zeros.
fn lift(p: &Point, ambient: usize) -> Point {
    let mut c = p.coords().to_vec();
    c.resize(ambient, Scalar::zero());
    Point(c)
}

/// Base coordinates, then zeros up to `offset`, the slot coordinates, then
/// `tail` zeros.
fn assemble(base: &Point, offset: usize, val: &Point, tail: usize) -> Point {
    let mut c = base.coords().to_vec();
    c.resize(offset, Scalar::zero());
    c.extend(val.coords().iter().cloned());
    c.extend(std::iter::repeat(Scalar::zero()).take(tail));
    Point(c)
}

/// The connection path used for map targets: the standard staircase, or the
/// defective first-coordinate-first variant.
fn connection(p: &Point, q: &Point, standard: bool) -> Result<PLPath, KernelError> {
    if standard {
        return std_connection(p, q);
    }
    let n = p.dim();
    let mut vertices: Vec<Point> = vec![p.clone()];
    for j in 1..=n {
        let mut coords: Vec<Scalar> = q.coords()[..j].to_vec();
        coords.extend(p.coords()[j..].iter().cloned());
        let v = Point(coords);
        if &v != vertices.last().unwrap() {
            vertices.push(v);
        }
    }
    if vertices.len() == 1 {
        return Ok(PLPath::point(p.clone()));
    }
    PLPath::from_vertices(vertices, false, false)
}

/// Surgery data for one germ at fixed slot assignment.
struct GermPlan {
    germ_idx: usize,
    class: usize,
    slot: usize,
    zeta: Option<Point>,
    target_id: Option<String>,
    v: Scalar,
    q: Option<Point>,
    thresholds: Vec<Scalar>,
}

/// Builds the realization of a validated, accepted space. Normalizes the
/// input first when no bound is recorded yet.
pub fn affinize(space: &SpaceDescription, opts: &BuildOptions) -> Result<EmbeddedSpace, EmbedError> {
    let space = if space.r.is_some() {
        space.clone()
    } else {
        normalize_shift(space)
    };
    let report = validate(&space);
    if !report.ok() {
        return Err(EmbedError::Validation(report.violations));
    }
    let criterion = check_criterion(&space)
        .map_err(|e| EmbedError::RepairFailed(format!("branch analysis failed: {e}")))?;
    if !criterion.accepted {
        return Err(EmbedError::Rejected(criterion.violations));
    }

    let table = germ_table(&space)?;
    let n = space.n;
    let r = space.r.clone().expect("normalized");
    let n_classes = table.n_classes;
    let u = table.u.clone();

    let surgery: Vec<usize> = table
        .germs
        .iter()
        .enumerate()
        .filter(|(_, g)| g.needs_surgery())
        .map(|(i, _)| i)
        .collect();

    // crossing data is slot-independent: compute it once
    let mut crossings: BTreeMap<usize, (Scalar, Point, Point, String)> = BTreeMap::new();
    for &gi in &surgery {
        let g = &table.germs[gi];
        if let Connection::Glue(target) = &g.connection {
            let zeta = space
                .point(target)
                .expect("validated glue target")
                .coords
                .clone();
            let (v, q) = compute_crossing(g, &zeta, n, &r, &u)?;
            crossings.insert(gi, (v, q, zeta, target.clone()));
        }
    }

    let mut slots: BTreeMap<usize, usize> = table
        .germs
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.slot_k.map(|s| (i, s)))
        .collect();
    let mut k_bound = table.k;

    let max_rounds = 2 * surgery.len() + 4;
    let mut round = 0usize;
    let mut repairs: Vec<RepairRecord> = Vec::new();
    loop {
        let plans = make_plans(&table, &surgery, &slots, &crossings, &u);
        let ambient = n * (1 + k_bound * n_classes);

        let mut blocks = point_blocks(&space, ambient);
        for arc in &space.arcs {
            if let Some(b) = arc_residual_block(&space, &table, &plans, &arc.id, ambient)? {
                blocks.push(b);
            }
        }
        build_germ_blocks(
            &table, &plans, n, k_bound, n_classes, ambient, opts, &mut blocks,
        )?;
        for b in &blocks {
            if b.path.dim() != ambient {
                return Err(EmbedError::DimensionDrift {
                    expected: ambient,
                    found: b.path.dim(),
                });
            }
        }

        let collision = if opts.repair {
            find_collision(&space, &table, &plans, &blocks, n, k_bound)?
        } else {
            None
        };
        match collision {
            Some(germ_idx) => {
                round += 1;
                if round > max_rounds {
                    return Err(EmbedError::RepairFailed(format!(
                        "germ on arc {} still collides after {round} rounds",
                        table.germs[germ_idx].arc_id
                    )));
                }
                let class = table.germs[germ_idx].surgery_class.unwrap();
                let fresh = table
                    .germs
                    .iter()
                    .enumerate()
                    .filter(|(i, g)| g.surgery_class == Some(class) && slots.contains_key(i))
                    .map(|(i, _)| slots[&i])
                    .max()
                    .unwrap_or(0)
                    + 1;
                repairs.push(RepairRecord {
                    arc_id: table.germs[germ_idx].arc_id.clone(),
                    base_id: table.germs[germ_idx].base_id.clone(),
                    from_slot: slots[&germ_idx],
                    to_slot: fresh,
                });
                slots.insert(germ_idx, fresh);
                k_bound = k_bound.max(fresh);
            }
            None => {
                let map = build_map(&space, &table, &plans, n, k_bound, ambient, opts)?;
                let germs = plans
                    .iter()
                    .map(|p| GermRecord {
                        arc_id: table.germs[p.germ_idx].arc_id.clone(),
                        base_id: table.germs[p.germ_idx].base_id.clone(),
                        target_id: p.target_id.clone(),
                        class: p.class,
                        slot: p.slot,
                        v: p.v.clone(),
                        q: p.q.clone(),
                        thresholds: p.thresholds.clone(),
                    })
                    .collect();
                return Ok(EmbeddedSpace {
                    space,
                    n,
                    ambient,
                    k: k_bound,
                    n_classes,
                    u,
                    r,
                    blocks,
                    map,
                    germs,
                    repairs,
                });
            }
        }
    }
}

fn make_plans(
    table: &GermTable,
    surgery: &[usize],
    slots: &BTreeMap<usize, usize>,
    crossings: &BTreeMap<usize, (Scalar, Point, Point, String)>,
    u: &Scalar,
) -> Vec<GermPlan> {
    surgery
        .iter()
        .map(|&gi| {
            let g = &table.germs[gi];
            let class = g.surgery_class.expect("surgery germ has a class") + 1;
            match &g.connection {
                Connection::Glue(_) => {
                    let (v, q, zeta, target) = crossings[&gi].clone();
                    let origin = Point::origin(zeta.dim());
                    let l1 = taxicab(&origin, &q).expect("same dim");
                    let l2 = taxicab(&zeta, &q).expect("same dim");
                    let t2 = &l1 + &l2;
                    let t3 = &t2 + &l1;
                    GermPlan {
                        germ_idx: gi,
                        class,
                        slot: slots[&gi],
                        zeta: Some(zeta),
                        target_id: Some(target),
                        v,
                        q: Some(q),
                        thresholds: vec![l1, t2, t3],
                    }
                }
                Connection::None => GermPlan {
                    germ_idx: gi,
                    class,
                    slot: 1,
                    zeta: None,
                    target_id: None,
                    v: u.clone(),
                    q: None,
                    thresholds: Vec::new(),
                },
                Connection::SelfBase => unreachable!("self germs need no surgery"),
            }
        })
        .collect()
}

fn point_blocks(space: &SpaceDescription, ambient: usize) -> Vec<Block> {
    space
        .points
        .iter()
        .filter(|p| p.in_x)
        .map(|p| Block {
            name: format!("point:{}", p.id),
            kind: BlockKind::Residual,
            path: PLPath::point(lift(&p.coords, ambient)),
        })
        .collect()
}

/// The middle of an arc left after trimming its surgical germ pieces,
/// lifted with trailing zeros. `None` for an arc fully consumed by trims.
fn arc_residual_block(
    space: &SpaceDescription,
    table: &GermTable,
    plans: &[GermPlan],
    arc_id: &str,
    ambient: usize,
) -> Result<Option<Block>, EmbedError> {
    let arc = space
        .arcs
        .iter()
        .find(|a| a.id == arc_id)
        .expect("known arc");
    let unit = arc.path.unit_speed();
    let total = unit.param_hi().clone();
    let trim_at = |high: bool| -> Scalar {
        for p in plans {
            let g = &table.germs[p.germ_idx];
            if g.arc_id == arc_id && g.from_high_end == high {
                return p.v.clone();
            }
        }
        Scalar::zero()
    };
    let c0 = trim_at(false);
    let c1 = trim_at(true);
    let lo = c0.clone();
    let hi = &total - &c1;
    if lo >= hi {
        return Ok(None);
    }
    let lo_open = if c0.is_positive() {
        false
    } else {
        unit.left_open
    };
    let hi_open = if c1.is_positive() {
        false
    } else {
        unit.right_open
    };
    let sub = unit.sub_path(&lo, &hi, lo_open, hi_open)?;
    Ok(Some(Block {
        name: format!("residual:{arc_id}"),
        kind: BlockKind::Residual,
        path: sub.map_vertices(|v| lift(v, ambient)),
    }))
}

#[allow(clippy::too_many_arguments)]
fn build_germ_blocks(
    table: &GermTable,
    plans: &[GermPlan],
    n: usize,
    k_bound: usize,
    n_classes: usize,
    ambient: usize,
    opts: &BuildOptions,
    blocks: &mut Vec<Block>,
) -> Result<(), EmbedError> {
    for plan in plans {
        let g = &table.germs[plan.germ_idx];
        let label = format!("{}@{}", g.arc_id, g.base_id);
        let tail_for = |offset: usize| {
            if opts.corrected_tail {
                ambient - offset - n
            } else {
                n * k_bound * (n_classes - plan.class + 1) + n - 1
            }
        };
        match (&plan.zeta, &plan.q) {
            (Some(zeta), Some(q)) => {
                let offset = slot_offset(n, k_bound, plan.class, plan.slot);
                let tail = tail_for(offset);
                let origin = Point::origin(n);
                let b1 = std_connection(&origin, q)?;
                let b2 = std_connection(zeta, q)?;
                let b3 = std_connection(q, &origin)?;
                let mut s1 = b1.map_vertices(|w| assemble(zeta, offset, w, tail));
                let mut s2 = b2.map_vertices(|w| assemble(w, offset, q, tail));
                let mut s3 = b3.map_vertices(|w| assemble(q, offset, w, tail));
                s1.left_open = true;
                s1.right_open = false;
                s2.left_open = true;
                s2.right_open = false;
                s3.left_open = true;
                s3.right_open = true;
                for (branch, path) in [(1u8, s1), (2, s2), (3, s3)] {
                    blocks.push(Block {
                        name: format!("germ:{label}:b{branch}"),
                        kind: BlockKind::Surgery {
                            germ: plan.germ_idx,
                            branch,
                        },
                        path,
                    });
                }
            }
            _ => {
                // limitless germ: a half-open interval in the first slot
                // coordinate of its class row, anchored at the endpoint
                let offset = slot_offset(n, k_bound, plan.class, 1);
                let tail = tail_for(offset);
                let p = &g.nontrivial_endpoint;
                let zero = Point::origin(n);
                let mut top = zero.clone();
                top.0[0] = plan.v.clone();
                let seg = PLPath::from_vertices(
                    vec![
                        assemble(p, offset, &zero, tail),
                        assemble(p, offset, &top, tail),
                    ],
                    true,
                    true,
                )?;
                blocks.push(Block {
                    name: format!("nolimit:{label}"),
                    kind: BlockKind::NoLimit {
                        germ: plan.germ_idx,
                    },
                    path: seg,
                });
            }
        }
    }
    Ok(())
}

/// Scans all block pairs for intersections outside the designed junction
/// set; returns a glued germ to re-slot when one is found.
fn find_collision(
    space: &SpaceDescription,
    table: &GermTable,
    plans: &[GermPlan],
    blocks: &[Block],
    n: usize,
    k_bound: usize,
) -> Result<Option<usize>, EmbedError> {
    let ambient = blocks
        .first()
        .map(|b| b.path.dim())
        .unwrap_or(n);
    let mut allowed: Vec<Point> = space
        .points
        .iter()
        .map(|p| lift(&p.coords, ambient))
        .collect();
    for plan in plans {
        let g = &table.germs[plan.germ_idx];
        match (&plan.zeta, &plan.q) {
            (Some(zeta), Some(q)) => {
                let offset = slot_offset(n, k_bound, plan.class, plan.slot);
                let tail = ambient - offset - n;
                allowed.push(lift(zeta, ambient));
                allowed.push(lift(q, ambient));
                allowed.push(assemble(zeta, offset, q, tail));
                allowed.push(assemble(q, offset, q, tail));
            }
            _ => {
                allowed.push(lift(&g.nontrivial_endpoint, ambient));
            }
        }
    }
    allowed.sort();
    allowed.dedup();

    for (ai, a) in blocks.iter().enumerate() {
        for b in &blocks[ai + 1..] {
            let records = pl_intersections(&a.path, &b.path)?;
            let bad = records.iter().any(|rec| match rec {
                IntersectionRecord::Point(p) => !allowed.contains(p),
                IntersectionRecord::Overlap(_, _) => true,
            });
            if !bad {
                continue;
            }
            // prefer re-slotting the lex-later glued germ involved
            let mut candidates: Vec<usize> = Vec::new();
            for blk in [a, b] {
                if let BlockKind::Surgery { germ, .. } = blk.kind {
                    if matches!(table.germs[germ].connection, Connection::Glue(_)) {
                        candidates.push(germ);
                    }
                }
            }
            candidates.sort_by(|&x, &y| {
                (&table.germs[x].base, &table.germs[x].arc_id)
                    .cmp(&(&table.germs[y].base, &table.germs[y].arc_id))
            });
            return match candidates.last() {
                Some(&g) => Ok(Some(g)),
                None => Err(EmbedError::RepairFailed(format!(
                    "blocks {} and {} collide but neither is re-slottable",
                    a.name, b.name
                ))),
            };
        }
    }
    Ok(None)
}

fn build_map(
    space: &SpaceDescription,
    table: &GermTable,
    plans: &[GermPlan],
    n: usize,
    k_bound: usize,
    ambient: usize,
    opts: &BuildOptions,
) -> Result<PLMapping, EmbedError> {
    let mut pieces = Vec::new();

    for p in &space.points {
        if p.in_x {
            pieces.push(MapPiece {
                name: format!("point:{}", p.id),
                source: PieceGeom::Point(p.coords.clone()),
                target: PieceGeom::Point(lift(&p.coords, ambient)),
                corr: None,
            });
        }
    }

    for arc in &space.arcs {
        if let Some(block) = arc_residual_block(space, table, plans, &arc.id, ambient)? {
            let src = block
                .path
                .map_vertices(|v| Point(v.coords()[..n].to_vec()));
            pieces.push(MapPiece {
                name: block.name.clone(),
                source: PieceGeom::Path(src),
                target: PieceGeom::Path(block.path),
                corr: None,
            });
        }
    }

    for plan in plans {
        let g = &table.germs[plan.germ_idx];
        let label = format!("{}@{}", g.arc_id, g.base_id);
        match (&plan.zeta, &plan.q) {
            (Some(zeta), Some(q)) => {
                let offset = slot_offset(n, k_bound, plan.class, plan.slot);
                let tail = ambient - offset - n;
                let origin = Point::origin(n);
                let held = if opts.substitute_q {
                    q.clone()
                } else {
                    // defective variant: hold the germ's far endpoint
                    g.nontrivial_endpoint.clone()
                };
                let c1 = connection(&origin, q, opts.unit_speed)?;
                let c2 = connection(zeta, q, opts.unit_speed)?;
                let c3 = connection(q, &origin, opts.unit_speed)?;
                let t1 = c1.map_vertices(|w| assemble(zeta, offset, w, tail));
                let t2 = c2.map_vertices(|w| assemble(w, offset, &held, tail));
                let t3 = c3.map_vertices(|w| assemble(q, offset, w, tail));

                let thr = &plan.thresholds;
                let v = &plan.v;
                let cuts = [
                    Scalar::zero(),
                    &(&thr[0] * v) / &thr[2],
                    &(&thr[1] * v) / &thr[2],
                    v.clone(),
                ];
                let lens = [
                    thr[0].clone(),
                    &thr[1] - &thr[0],
                    &thr[2] - &thr[1],
                ];
                for (b, mut tgt) in [t1, t2, t3].into_iter().enumerate() {
                    let src = g.full.sub_path(&cuts[b], &cuts[b + 1], true, b == 2)?;
                    let span = &cuts[b + 1] - &cuts[b];
                    let top = if opts.rescale {
                        lens[b].clone()
                    } else {
                        span.min(lens[b].clone())
                    };
                    let corr = PLFunction::new(
                        vec![cuts[b].clone(), cuts[b + 1].clone()],
                        vec![Scalar::zero(), top],
                    )?;
                    tgt.left_open = true;
                    tgt.right_open = b == 2;
                    pieces.push(MapPiece {
                        name: format!("germ:{label}:b{}", b + 1),
                        source: PieceGeom::Path(src),
                        target: PieceGeom::Path(tgt),
                        corr: Some(corr),
                    });
                }
            }
            _ => {
                let offset = slot_offset(n, k_bound, plan.class, 1);
                let tail = ambient - offset - n;
                let p = &g.nontrivial_endpoint;
                let zero = Point::origin(n);
                let mut top = zero.clone();
                top.0[0] = plan.v.clone();
                let tgt = PLPath::from_vertices(
                    vec![
                        assemble(p, offset, &zero, tail),
                        assemble(p, offset, &top, tail),
                    ],
                    true,
                    true,
                )?;
                let src = g
                    .full
                    .sub_path(&Scalar::zero(), &plan.v, true, true)?
                    .reversed();
                pieces.push(MapPiece {
                    name: format!("nolimit:{label}"),
                    source: PieceGeom::Path(src),
                    target: PieceGeom::Path(tgt),
                    corr: None,
                });
            }
        }
    }

    Ok(PLMapping {
        pieces,
        source_dim: n,
        target_dim: ambient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::End;
    use crate::space::{Arc, EndSpec, PointEntry, TauTarget};
    use crate::verifier::discontinuity_locus;

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
    fn circle_embedding_is_exact() {
        let emb = affinize(&circle(), &BuildOptions::default()).unwrap();
        assert_eq!(emb.ambient, 2);
        assert_eq!(emb.k, 1);
        assert_eq!(emb.n_classes, 1);
        assert_eq!(emb.u, Scalar::from_int(2));

        let rec = &emb.germs[0];
        assert_eq!(rec.v, Scalar::ratio(26, 27));
        assert_eq!(rec.q, Some(Point(vec![Scalar::ratio(217, 27)])));
        // Φ(v) = 24·26/27 equals the total chain length
        assert_eq!(rec.thresholds[2], Scalar::ratio(624, 27));

        // f is the identity-with-zeros on the glue point and residual
        let f_g = emb.map.eval(&Point::from_ints(&[1])).unwrap();
        assert_eq!(f_g, Point::from_ints(&[1, 0]));
        let f_mid = emb.map.eval(&Point::from_ints(&[5])).unwrap();
        assert_eq!(f_mid, Point::from_ints(&[5, 0]));

        // approaching the re-glued end, images run along the chain toward
        // f(g): image of γ(t) for small t sits on branch 1 near (1, 0)
        let t = Scalar::ratio(1, 100);
        let x = Point(vec![&Scalar::from_int(9) - &t]);
        let y = emb.map.eval(&x).unwrap();
        assert_eq!(y.coords()[0], Scalar::from_int(1));
        // branch-1 height is Φ(t) = 24t
        assert_eq!(y.coords()[1], Scalar::ratio(24, 100));

        // the realization has no τ-discontinuities
        assert!(discontinuity_locus(&emb.space, &emb.map).is_empty());

        // junction with the residual at q is exact
        let fq = emb.map.eval(rec.q.as_ref().unwrap()).unwrap();
        assert_eq!(
            fq,
            Point(vec![Scalar::ratio(217, 27), Scalar::zero()])
        );
    }

    #[test]
    fn circle_blocks_form_a_rectangle_side() {
        let emb = affinize(&circle(), &BuildOptions::default()).unwrap();
        let b1 = emb
            .blocks
            .iter()
            .find(|b| b.name.ends_with(":b1"))
            .unwrap();
        assert_eq!(b1.path.limit(End::Low), &Point::from_ints(&[1, 0]));
        assert_eq!(
            b1.path.limit(End::High),
            &Point(vec![Scalar::from_int(1), Scalar::ratio(217, 27)])
        );
        let b3 = emb
            .blocks
            .iter()
            .find(|b| b.name.ends_with(":b3"))
            .unwrap();
        assert_eq!(
            b3.path.limit(End::High),
            &Point(vec![Scalar::ratio(217, 27), Scalar::zero()])
        );
    }

    #[test]
    fn defective_variants_are_detectable() {
        let sp = circle();
        let bad_tail = affinize(
            &sp,
            &BuildOptions {
                corrected_tail: false,
                ..BuildOptions::default()
            },
        );
        assert!(matches!(
            bad_tail,
            Err(EmbedError::DimensionDrift { .. })
        ));

        let no_rescale = affinize(
            &sp,
            &BuildOptions {
                rescale: false,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        assert!(!discontinuity_locus(&no_rescale.space, &no_rescale.map).is_empty());
    }

    #[test]
    fn rejected_space_does_not_embed() {
        let mut sp = circle();
        sp.points[1].in_x = true;
        sp.arcs[0].ends[1].tau = TauTarget::NoLimit;
        assert!(matches!(
            affinize(&sp, &BuildOptions::default()),
            Err(EmbedError::Rejected(_))
        ));
    }

    #[test]
    fn no_limit_end_gets_half_open_interval() {
        let path = PLPath::from_vertices(
            vec![Point::from_ints(&[1]), Point::from_ints(&[9])],
            false,
            true,
        )
        .unwrap();
        let sp = SpaceDescription {
            n: 1,
            r: Some(Scalar::from_int(16)),
            points: vec![
                entry("g", &[1], true, false),
                entry("e", &[9], false, false),
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
                        tau: TauTarget::NoLimit,
                    },
                ],
            }],
            declared_k: None,
            shift: None,
        };
        let emb = affinize(&sp, &BuildOptions::default()).unwrap();
        assert_eq!(emb.ambient, 2);
        // the germ occupies (0, u) of the slot coordinate over p = 9 - u
        let p = &Scalar::from_int(9) - &emb.u;
        let x = Point(vec![&Scalar::from_int(9) - &Scalar::ratio(1, 4)]);
        let y = emb.map.eval(&x).unwrap();
        assert_eq!(y.coords()[0], p);
        // the slot height is u - t, approaching (excluded) height u at the end
        assert_eq!(y.coords()[1], &emb.u - &Scalar::ratio(1, 4));
        // no τ-discontinuities and no image point at height u
        assert!(discontinuity_locus(&sp, &emb.map).is_empty());
        assert!(emb.map.pieces.iter().all(|pc| {
            !pc.target.contains(&Point(vec![p.clone(), emb.u.clone()]))
        }));
    }
}
