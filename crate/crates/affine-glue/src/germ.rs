//! Germ extraction and classification: for every singular or frontier point,
//! the short injective curves emanating from it, clipped inside a common
//! separating box at a common safe radius, grouped into shape classes and
//! classified by their gluing behavior.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kernel::{End, KernelError, PLPath};
use crate::scalar::{Point, Scalar};
use crate::space::{
    separating_box, validate, SpaceDescription, SpaceError, TauTarget, Violation,
};

/// Where a germ's open end goes under `τ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Connection {
    /// No `τ`-limit (the `Z_no` class).
    None,
    /// `τ`-limit equal to the germ's own base point (the `Z_self` class).
    SelfBase,
    /// Re-glued to another singular point (the `Z_{i,k}` classes).
    Glue(String),
}

/// A germ at a base point `z ∈ Z`: the initial piece of an arc emanating
/// from `z`, reparametrized by taxicab arc length and clipped at the common
/// safe radius `u`.
#[derive(Clone, Debug)]
pub struct Germ {
    pub base_id: String,
    pub base: Point,
    pub arc_id: String,
    pub from_high_end: bool,
    /// Parameter domain `(0, u]`, unit taxicab speed, `limit(Low) = base`.
    pub path: PLPath,
    /// The whole oriented arc from the base, unit speed.
    pub full: PLPath,
    pub shape_class: usize,
    /// Index `i` among surgery classes (classes owning embedding slots),
    /// absent for classes containing only self-connected germs.
    pub surgery_class: Option<usize>,
    pub connection: Connection,
    /// 1-based `k` slot for glued germs.
    pub slot_k: Option<usize>,
    /// The clipped germ's far endpoint `p_i(z)`, never a point of `Z`.
    pub nontrivial_endpoint: Point,
}

impl Germ {
    pub fn needs_surgery(&self) -> bool {
        matches!(self.connection, Connection::None | Connection::Glue(_))
    }
}

/// The normalized germ decomposition of a space.
#[derive(Clone, Debug)]
pub struct GermTable {
    pub germs: Vec<Germ>,
    /// Common safe radius: all germs are defined on `(0, u]`.
    pub u: Scalar,
    /// Slot multiplicity bound: at least the largest gluing fiber.
    pub k: usize,
    /// Number of surgery shape classes (the `N` of the block layout).
    pub n_classes: usize,
    pub shape_class_count: usize,
    pub box_half_widths: Vec<Scalar>,
}

impl GermTable {
    pub fn germs_at<'a>(&'a self, base_id: &'a str) -> impl Iterator<Item = &'a Germ> {
        self.germs.iter().filter(move |g| g.base_id == base_id)
    }

    pub fn glued_to<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a Germ> {
        self.germs
            .iter()
            .filter(move |g| g.connection == Connection::Glue(target.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum GermError {
    #[error("validation failed: {0:?}")]
    Validation(Vec<Violation>),
    #[error("space is not normalized: no bound R recorded")]
    NotNormalized,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// First arc-length parameter at which `path` (starting at `z`) leaves the
/// open box `z + Π(-d_i, d_i)`, if it ever does.
fn first_box_exit(path: &PLPath, z: &Point, d: &[Scalar]) -> Option<Scalar> {
    let mut best: Option<Scalar> = None;
    let params = path.params();
    let verts = path.vertices();
    for s in 0..verts.len().saturating_sub(1) {
        let (t0, t1) = (&params[s], &params[s + 1]);
        for i in 0..z.dim() {
            let fa = &verts[s].coords()[i] - &z.coords()[i];
            let fb = &verts[s + 1].coords()[i] - &z.coords()[i];
            for c in [d[i].clone(), -&d[i]] {
                let (lo, hi) = if fa <= fb { (&fa, &fb) } else { (&fb, &fa) };
                if lo < &c && &c <= hi || lo <= &c && &c < hi {
                    if fb == fa {
                        continue;
                    }
                    let t = t0 + &(&(&(&c - &fa) / &(&fb - &fa)) * &(t1 - t0));
                    if t.is_positive() && best.as_ref().map_or(true, |b| &t < b) {
                        best = Some(t);
                    }
                }
            }
        }
    }
    best
}

/// Builds the germ table of a validated, normalized space: separating box,
/// per-germ clipping at the common exact safe radius, shape classes, the
/// `Z_no`/`Z_self`/`Z_{i,k}` classification, and the bounds `K` and `N`.
pub fn germ_table(space: &SpaceDescription) -> Result<GermTable, GermError> {
    let report = validate(space);
    if !report.ok() {
        return Err(GermError::Validation(report.violations));
    }
    let r = space.r.clone().ok_or(GermError::NotNormalized)?;

    let zs = space.z_ids();
    if zs.is_empty() {
        return Ok(GermTable {
            germs: Vec::new(),
            u: Scalar::zero(),
            k: space.declared_k.unwrap_or(0),
            n_classes: 0,
            shape_class_count: 0,
            box_half_widths: Vec::new(),
        });
    }
    let z_coords: Vec<Point> = zs.iter().map(|p| p.coords.clone()).collect();
    let d = separating_box(&z_coords, &r)?;
    let z_id_set: Vec<&str> = zs.iter().map(|p| p.id.as_str()).collect();

    // collect raw germs: one per arc end whose limit lies in Z
    struct Raw {
        base_id: String,
        base: Point,
        arc_id: String,
        from_high_end: bool,
        full: PLPath,
        connection: Connection,
        cap: Scalar,
    }
    let mut raws: Vec<Raw> = Vec::new();
    for arc in &space.arcs {
        let unit = arc.path.unit_speed();
        let total = unit.param_hi().clone();
        for (idx, end) in arc.ends.iter().enumerate() {
            if !z_id_set.contains(&end.limit.as_str()) {
                continue;
            }
            let from_high_end = idx == 1;
            let oriented = if from_high_end {
                arc.path.reversed().unit_speed()
            } else {
                unit.clone()
            };
            let base = oriented.limit(End::Low).clone();
            let other_in_z = z_id_set.contains(&arc.ends[1 - idx].limit.as_str());
            let cap_far = if other_in_z {
                &total / &Scalar::from_int(2)
            } else {
                total.clone()
            };
            let cap_box = first_box_exit(&oriented, &base, &d).unwrap_or_else(|| total.clone());
            let connection = match &end.tau {
                TauTarget::NoLimit => Connection::None,
                TauTarget::Affine => Connection::SelfBase,
                TauTarget::Glue(g) if g == &end.limit => Connection::SelfBase,
                TauTarget::Glue(g) => Connection::Glue(g.clone()),
            };
            raws.push(Raw {
                base_id: end.limit.clone(),
                base,
                arc_id: arc.id.clone(),
                from_high_end,
                full: oriented,
                connection,
                cap: cap_far.min(cap_box),
            });
        }
    }

    if raws.is_empty() {
        return Ok(GermTable {
            germs: Vec::new(),
            u: Scalar::zero(),
            k: space.declared_k.unwrap_or(0),
            n_classes: 0,
            shape_class_count: 0,
            box_half_widths: d,
        });
    }

    // exact safe radius: half the smallest cap, kept below R
    let mut u = raws
        .iter()
        .map(|g| g.cap.clone())
        .min()
        .unwrap()
        .min(r.clone());
    u = &u / &Scalar::from_int(2);

    raws.sort_by(|a, b| {
        (&a.base, &a.arc_id, a.from_high_end).cmp(&(&b.base, &b.arc_id, b.from_high_end))
    });

    // clip and normalize for shape grouping
    let mut germs: Vec<Germ> = Vec::new();
    let mut shapes: Vec<(Vec<Scalar>, Vec<Point>)> = Vec::new();
    for raw in raws {
        let clipped = raw.full.sub_path(&Scalar::zero(), &u, true, false)?;
        let normalized: Vec<Point> = clipped
            .vertices()
            .iter()
            .map(|v| v.sub(&raw.base))
            .collect();
        let key = (clipped.params().to_vec(), normalized);
        let shape_class = match shapes.iter().position(|s| s == &key) {
            Some(i) => i,
            None => {
                shapes.push(key);
                shapes.len() - 1
            }
        };
        let nontrivial_endpoint = clipped.limit(End::High).clone();
        germs.push(Germ {
            base_id: raw.base_id,
            base: raw.base,
            arc_id: raw.arc_id,
            from_high_end: raw.from_high_end,
            path: clipped,
            full: raw.full,
            shape_class,
            surgery_class: None,
            connection: raw.connection,
            slot_k: None,
            nontrivial_endpoint,
        });
    }

    // surgery classes: shape classes containing at least one germ needing surgery
    let mut surgery_classes: Vec<usize> = Vec::new();
    for g in &germs {
        if g.needs_surgery() && !surgery_classes.contains(&g.shape_class) {
            surgery_classes.push(g.shape_class);
        }
    }
    for g in &mut germs {
        g.surgery_class = surgery_classes.iter().position(|&c| c == g.shape_class);
    }

    // k distribution: within each surgery class and glue target, rank the
    // base points lexicographically
    let mut fiber_max = 0usize;
    let mut by_slot: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
    for (gi, g) in germs.iter().enumerate() {
        let target = match &g.connection {
            Connection::Glue(t) => t.clone(),
            Connection::SelfBase => {
                // self fibers count toward K but never occupy slots
                fiber_max = fiber_max.max(1);
                continue;
            }
            Connection::None => continue,
        };
        if let Some(i) = g.surgery_class {
            by_slot.entry((i, target)).or_default().push(gi);
        }
    }
    for ((_, _), members) in &mut by_slot {
        members.sort_by(|&a, &b| germs[a].base.cmp(&germs[b].base));
        fiber_max = fiber_max.max(members.len());
        for (rank, &gi) in members.iter().enumerate() {
            germs[gi].slot_k = Some(rank + 1);
        }
    }

    let k = fiber_max
        .max(space.declared_k.unwrap_or(0))
        .max(usize::from(!germs.is_empty()));

    Ok(GermTable {
        u,
        k,
        n_classes: surgery_classes.len(),
        shape_class_count: shapes.len(),
        box_half_widths: d,
        germs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::End;
    use crate::scalar::Point;
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
    fn circle_table() {
        let table = germ_table(&circle()).unwrap();
        assert_eq!(table.germs.len(), 2);
        // box half-width: half the gap between 1 and 9, capped germs halved
        assert_eq!(table.box_half_widths, vec![Scalar::from_int(4)]);
        assert_eq!(table.u, Scalar::from_int(2));
        assert_eq!(table.n_classes, 1);
        assert_eq!(table.shape_class_count, 2);
        assert_eq!(table.k, 1);

        let at_g: Vec<_> = table.germs_at("g").collect();
        assert_eq!(at_g.len(), 1);
        assert_eq!(at_g[0].connection, Connection::SelfBase);
        assert_eq!(at_g[0].surgery_class, None);
        assert_eq!(at_g[0].nontrivial_endpoint, Point::from_ints(&[3]));

        let glued: Vec<_> = table.glued_to("g").collect();
        assert_eq!(glued.len(), 1);
        assert_eq!(glued[0].base, Point::from_ints(&[9]));
        assert!(glued[0].from_high_end);
        assert_eq!(glued[0].surgery_class, Some(0));
        assert_eq!(glued[0].slot_k, Some(1));
        assert_eq!(glued[0].nontrivial_endpoint, Point::from_ints(&[7]));
        assert_eq!(glued[0].path.limit(End::Low), &Point::from_ints(&[9]));
    }

    #[test]
    fn no_limit_end_counts_toward_k() {
        // segment [g, e) with the open end having no τ-limit
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
        let table = germ_table(&sp).unwrap();
        // only e lies in Z, so only one germ
        assert_eq!(table.germs.len(), 1);
        assert_eq!(table.germs[0].connection, Connection::None);
        assert_eq!(table.germs[0].surgery_class, Some(0));
        assert_eq!(table.germs[0].slot_k, None);
        assert_eq!(table.n_classes, 1);
        assert_eq!(table.k, 1);
    }

    #[test]
    fn translated_germs_share_a_shape_class() {
        // two parallel arcs whose open ends are glued to the same point
        let mk = |x0: i64| {
            PLPath::from_vertices(
                vec![Point::from_ints(&[x0, 1]), Point::from_ints(&[x0, 9])],
                false,
                true,
            )
            .unwrap()
        };
        let end = |limit: &str, member: bool, tau: TauTarget| EndSpec {
            limit: limit.into(),
            member,
            tau,
        };
        let sp = SpaceDescription {
            n: 2,
            r: Some(Scalar::from_int(16)),
            points: vec![
                entry("g", &[1, 1], true, true),
                entry("h", &[9, 1], true, false),
                entry("e1", &[1, 9], false, false),
                entry("e2", &[9, 9], false, false),
            ],
            arcs: vec![
                Arc {
                    id: "a1".into(),
                    path: mk(1),
                    ends: [
                        end("g", true, TauTarget::Affine),
                        end("e1", false, TauTarget::Glue("g".into())),
                    ],
                },
                Arc {
                    id: "a2".into(),
                    path: mk(9),
                    ends: [
                        end("h", true, TauTarget::Affine),
                        end("e2", false, TauTarget::Glue("g".into())),
                    ],
                },
            ],
            declared_k: None,
            shift: None,
        };
        let table = germ_table(&sp).unwrap();
        // germs at e1 and e2 point downward and are translates: one class,
        // two slots over the same target
        let glued: Vec<_> = table.glued_to("g").collect();
        assert_eq!(glued.len(), 2);
        assert_eq!(glued[0].shape_class, glued[1].shape_class);
        assert_eq!(table.k, 2);
        assert_eq!(table.n_classes, 1);
        let mut slots: Vec<_> = glued.iter().map(|g| g.slot_k.unwrap()).collect();
        slots.sort();
        assert_eq!(slots, vec![1, 2]);
        // k ranks follow lexicographic base order
        let k_of_e1 = table
            .germs
            .iter()
            .find(|g| g.base_id == "e1")
            .unwrap()
            .slot_k
            .unwrap();
        assert_eq!(k_of_e1, 1);
    }

    #[test]
    fn declared_k_raises_bound() {
        let mut sp = circle();
        sp.declared_k = Some(3);
        let table = germ_table(&sp).unwrap();
        assert_eq!(table.k, 3);
    }
}
