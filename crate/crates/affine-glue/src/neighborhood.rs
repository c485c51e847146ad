//! Basic neighborhoods of the glued topology `τ`, shadow sets, and branch
//! counts. Regions are exact unions of named points and parameter intervals
//! on arcs.

use std::collections::BTreeMap;

use crate::kernel::{KernelError, PLPath};
use crate::scalar::{taxicab, Point, Scalar};
use crate::space::{SpaceDescription, SpaceError, TauTarget};

/// A parameter interval on one arc, in the arc's stored parametrization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ArcInterval {
    pub arc_id: String,
    pub lo: Scalar,
    pub hi: Scalar,
    pub lo_open: bool,
    pub hi_open: bool,
}

/// An exact subset of the space: named points plus arc intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Region {
    pub points: Vec<String>,
    pub intervals: Vec<ArcInterval>,
}

impl Region {
    pub fn normalize(&mut self) {
        self.points.sort();
        self.points.dedup();
        self.intervals.sort();
        self.intervals.dedup();
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    /// Affine limit points of the region's closure: interval endpoints
    /// (whether or not included) and the named points themselves.
    pub fn closure_limits(&self, space: &SpaceDescription) -> Result<Vec<Point>, KernelError> {
        let mut out: Vec<Point> = Vec::new();
        for id in &self.points {
            if let Some(p) = space.point(id) {
                out.push(p.coords.clone());
            }
        }
        for iv in &self.intervals {
            let arc = space
                .arcs
                .iter()
                .find(|a| a.id == iv.arc_id)
                .expect("interval references existing arc");
            out.push(arc.path.eval(&iv.lo)?);
            out.push(arc.path.eval(&iv.hi)?);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn contains_param(&self, arc_id: &str, t: &Scalar) -> bool {
        self.intervals.iter().any(|iv| {
            iv.arc_id == arc_id
                && (&iv.lo < t || (!iv.lo_open && &iv.lo == t))
                && (t < &iv.hi || (!iv.hi_open && t == &iv.hi))
        })
    }
}

/// Radii for a basic neighborhood: a ball radius for the affine part and
/// per-germ cut lengths (arc length from the end), defaulting to `affine`.
#[derive(Clone, Debug)]
pub struct Radii {
    pub affine: Scalar,
    pub cuts: BTreeMap<(String, bool), Scalar>,
}

impl Radii {
    pub fn uniform(r: Scalar) -> Radii {
        Radii {
            affine: r,
            cuts: BTreeMap::new(),
        }
    }

    fn cut(&self, arc_id: &str, from_high_end: bool) -> Scalar {
        self.cuts
            .get(&(arc_id.to_string(), from_high_end))
            .cloned()
            .unwrap_or_else(|| self.affine.clone())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NeighborhoodError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("point {0:?} is not a point of X")]
    NotInSpace(String),
}

/// Open sublevel intervals `{t : d(γ(t), x) < r}` of the exact PL distance
/// function along a path, honoring the path's end openness.
pub fn sublevel_intervals(
    path: &PLPath,
    x: &Point,
    r: &Scalar,
) -> Result<Vec<(Scalar, Scalar, bool, bool)>, KernelError> {
    // refine parameters so the taxicab distance is linear between nodes
    let mut cuts: Vec<Scalar> = path.params().to_vec();
    let params = path.params();
    let verts = path.vertices();
    for s in 0..verts.len().saturating_sub(1) {
        for i in 0..x.dim() {
            let fa = &verts[s].coords()[i];
            let fb = &verts[s + 1].coords()[i];
            let xi = &x.coords()[i];
            if (fa < xi && xi < fb) || (fb < xi && xi < fa) {
                let t = &params[s]
                    + &(&(&(xi - fa) / &(fb - fa)) * &(&params[s + 1] - &params[s]));
                cuts.push(t);
            }
        }
    }
    cuts.sort();
    cuts.dedup();

    let dist: Vec<Scalar> = cuts
        .iter()
        .map(|t| taxicab(&path.eval(t)?, x))
        .collect::<Result<_, _>>()?;

    // walk the refined grid and collect maximal open sublevel intervals
    let mut out: Vec<(Scalar, Scalar, bool, bool)> = Vec::new();
    let mut open_at: Option<(Scalar, bool)> = None;
    let cross = |ta: &Scalar, tb: &Scalar, da: &Scalar, db: &Scalar| -> Scalar {
        ta + &(&(&(r - da) / &(db - da)) * &(tb - ta))
    };
    for s in 0..cuts.len() {
        let below = &dist[s] < r;
        if s == 0 {
            if below {
                open_at = Some((cuts[0].clone(), path.left_open));
            }
            continue;
        }
        let prev_below = &dist[s - 1] < r;
        if below && open_at.is_none() {
            // entered strictly inside the segment (or exactly at this node)
            let start = if prev_below {
                cuts[s - 1].clone()
            } else if &dist[s - 1] == r {
                cuts[s - 1].clone()
            } else {
                cross(&cuts[s - 1], &cuts[s], &dist[s - 1], &dist[s])
            };
            open_at = Some((start, true));
        } else if !below && !prev_below && &dist[s - 1] == r && open_at.is_none() {
            // touched the level at an isolated node: no interval
        }
        if !below {
            if let Some((start, start_open)) = open_at.take() {
                let end = if &dist[s] == r {
                    cuts[s].clone()
                } else {
                    cross(&cuts[s - 1], &cuts[s], &dist[s - 1], &dist[s])
                };
                out.push((start, end, start_open, true));
            }
        }
    }
    if let Some((start, start_open)) = open_at {
        out.push((
            start,
            path.param_hi().clone(),
            start_open,
            path.right_open,
        ));
    }
    Ok(out)
}

/// Number of local branches of `X` at a named point: arc-interior points
/// have two, otherwise one per affine arc end at the point plus one per arc
/// end glued to it.
pub fn count_branches(space: &SpaceDescription, x_id: &str) -> Result<usize, NeighborhoodError> {
    let entry = space
        .point(x_id)
        .ok_or_else(|| SpaceError::UnknownPoint(x_id.to_string()))?;
    if !entry.in_x {
        return Err(NeighborhoodError::NotInSpace(x_id.to_string()));
    }
    for arc in &space.arcs {
        if let Ok(t) = arc.path.inverse(&entry.coords) {
            if arc.path.param_lo() < &t && &t < arc.path.param_hi() {
                return Ok(2);
            }
        }
    }
    let mut branches = 0usize;
    for arc in &space.arcs {
        for end in &arc.ends {
            match &end.tau {
                TauTarget::Affine if end.limit == x_id => branches += 1,
                TauTarget::Glue(g) if g == x_id => branches += 1,
                _ => {}
            }
        }
    }
    Ok(branches)
}

/// The shadow of `x`: `x` together with the affine base points of every
/// germ re-glued to it. For ordinary points this is just `{x}`.
pub fn shadow_set(space: &SpaceDescription, x_id: &str) -> Result<Vec<Point>, NeighborhoodError> {
    let entry = space
        .point(x_id)
        .ok_or_else(|| SpaceError::UnknownPoint(x_id.to_string()))?;
    let mut out = vec![entry.coords.clone()];
    for arc in &space.arcs {
        for end in &arc.ends {
            if end.tau == TauTarget::Glue(x_id.to_string()) {
                if let Some(b) = space.point(&end.limit) {
                    out.push(b.coords.clone());
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// The basic `τ`-neighborhood of a named point: for an ordinary point the
/// exact open metric ball in `X`; for a marked singular point the point
/// itself, the attached affine local arcs within the ball radius, and the
/// initial segments of every germ re-glued to it below the cut lengths.
pub fn basic_neighborhood(
    space: &SpaceDescription,
    x_id: &str,
    radii: &Radii,
) -> Result<Region, NeighborhoodError> {
    let entry = space
        .point(x_id)
        .ok_or_else(|| SpaceError::UnknownPoint(x_id.to_string()))?;
    if !entry.in_x {
        return Err(NeighborhoodError::NotInSpace(x_id.to_string()));
    }
    let x = &entry.coords;
    let mut region = Region::default();
    region.points.push(x_id.to_string());

    if !entry.in_g {
        // honest open metric ball in X
        for p in &space.points {
            if p.in_x && p.id != x_id && &taxicab(&p.coords, x)? < &radii.affine {
                region.points.push(p.id.clone());
            }
        }
        for arc in &space.arcs {
            for (lo, hi, lo_open, hi_open) in sublevel_intervals(&arc.path, x, &radii.affine)? {
                region.intervals.push(ArcInterval {
                    arc_id: arc.id.clone(),
                    lo,
                    hi,
                    lo_open,
                    hi_open,
                });
            }
        }
        region.normalize();
        return Ok(region);
    }

    for arc in &space.arcs {
        for (idx, end) in arc.ends.iter().enumerate() {
            let from_high_end = idx == 1;
            let attached_affine = end.tau == TauTarget::Affine && end.limit == x_id;
            let glued = end.tau == TauTarget::Glue(x_id.to_string());
            if attached_affine {
                // the sublevel component adjacent to this end
                let ivs = sublevel_intervals(&arc.path, x, &radii.affine)?;
                let pick = ivs.into_iter().find(|(lo, hi, _, _)| {
                    if from_high_end {
                        hi == arc.path.param_hi()
                    } else {
                        lo == arc.path.param_lo()
                    }
                });
                if let Some((lo, hi, lo_open, hi_open)) = pick {
                    // keep the end itself open: x is listed separately
                    let (lo_open, hi_open) = if from_high_end {
                        (lo_open, true)
                    } else {
                        (true, hi_open)
                    };
                    region.intervals.push(ArcInterval {
                        arc_id: arc.id.clone(),
                        lo,
                        hi,
                        lo_open,
                        hi_open,
                    });
                }
            } else if glued {
                // initial open segment of the germ, measured by arc length
                let unit = if from_high_end {
                    arc.path.reversed().unit_speed()
                } else {
                    arc.path.unit_speed()
                };
                let total = unit.param_hi().clone();
                let cut = radii.cut(&arc.id, from_high_end).min(total.clone());
                if !cut.is_positive() {
                    continue;
                }
                let (lo, hi) = if cut == total {
                    (arc.path.param_lo().clone(), arc.path.param_hi().clone())
                } else {
                    let at = arc.path.inverse(&unit.eval(&cut)?)?;
                    if from_high_end {
                        (at, arc.path.param_hi().clone())
                    } else {
                        (arc.path.param_lo().clone(), at)
                    }
                };
                region.intervals.push(ArcInterval {
                    arc_id: arc.id.clone(),
                    lo,
                    hi,
                    lo_open: true,
                    hi_open: true,
                });
            }
        }
    }
    region.normalize();
    Ok(region)
}
