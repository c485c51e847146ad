//! Piecewise-linear mappings: finite lists of source/target pieces with
//! increasing parameter correspondences. Houses the homeomorphism produced
//! by the embedding construction.

use crate::kernel::{End, KernelError, PLFunction, PLPath, Result};
use crate::scalar::{Point, Scalar};

/// A source or target piece: a single point, a finite PL path, or a PL
/// prefix continued by one or two infinite rays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PieceGeom {
    Point(Point),
    Path(PLPath),
    Ray(RayGeom),
}

/// A path with an unbounded tail: `prefix` covers parameters `[0, L]`
/// (taxicab arc length), `dir` continues past `L` at unit taxicab speed.
/// When `low_dir` is present the parameter domain is all of `Q` (a full
/// line); otherwise it is `(0, ∞)` when the prefix's low end is open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RayGeom {
    pub prefix: PLPath,
    pub dir: Point,
    pub low_dir: Option<Point>,
}

impl RayGeom {
    /// Normalizes `dir` to unit taxicab length.
    pub fn new(prefix: PLPath, dir: Point, low_dir: Option<Point>) -> Result<RayGeom> {
        let norm = |d: &Point| -> Result<Point> {
            let len = d
                .coords()
                .iter()
                .fold(Scalar::zero(), |a, c| a + c.abs());
            if len.is_zero() {
                return Err(KernelError::InvalidPath("zero ray direction".into()));
            }
            Ok(d.scale(&(Scalar::one() / len)))
        };
        Ok(RayGeom {
            prefix,
            dir: norm(&dir)?,
            low_dir: low_dir.map(|d| norm(&d)).transpose()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.prefix.dim()
    }

    pub fn prefix_len(&self) -> Scalar {
        self.prefix.param_hi().clone()
    }

    pub fn eval(&self, t: &Scalar) -> Result<Point> {
        let hi = self.prefix_len();
        if t > &hi {
            let last = self.prefix.limit(End::High);
            return Ok(last.add(&self.dir.scale(&(t - &hi))));
        }
        if t < self.prefix.param_lo() {
            let low = self
                .low_dir
                .as_ref()
                .ok_or_else(|| KernelError::ParameterOutOfRange {
                    t: t.clone(),
                    lo: self.prefix.param_lo().clone(),
                    hi,
                })?;
            let first = self.prefix.limit(End::Low);
            return Ok(first.add(&low.scale(&(-t))));
        }
        self.prefix.eval(t)
    }

    /// The parameter of `x` on the prefix or a ray tail, if any.
    pub fn inverse(&self, x: &Point) -> Option<Scalar> {
        if let Ok(t) = self.prefix.inverse(x) {
            return Some(t);
        }
        let on_tail = |base: &Point, dir: &Point| -> Option<Scalar> {
            let delta = x.sub(base);
            let c = dir.coords().iter().position(|v| !v.is_zero())?;
            let s = &delta.coords()[c] / &dir.coords()[c];
            if !s.is_positive() {
                return None;
            }
            if base.add(&dir.scale(&s)) == *x {
                Some(s)
            } else {
                None
            }
        };
        if let Some(s) = on_tail(self.prefix.limit(End::High), &self.dir) {
            return Some(&self.prefix_len() + &s);
        }
        if let Some(low) = &self.low_dir {
            if let Some(s) = on_tail(self.prefix.limit(End::Low), low) {
                return Some(self.prefix.param_lo() - &s);
            }
        }
        None
    }
}

impl PieceGeom {
    pub fn dim(&self) -> usize {
        match self {
            PieceGeom::Point(p) => p.dim(),
            PieceGeom::Path(p) => p.dim(),
            PieceGeom::Ray(r) => r.dim(),
        }
    }

    /// Semantic membership, honoring open end flags.
    pub fn contains(&self, x: &Point) -> bool {
        self.param_of(x).is_some()
    }

    pub fn param_of(&self, x: &Point) -> Option<Scalar> {
        match self {
            PieceGeom::Point(p) => (p == x).then(Scalar::zero),
            PieceGeom::Path(p) => {
                let t = p.inverse(x).ok()?;
                if (p.left_open && &t == p.param_lo()) || (p.right_open && &t == p.param_hi()) {
                    return None;
                }
                Some(t)
            }
            PieceGeom::Ray(r) => {
                let t = r.inverse(x)?;
                if r.prefix.left_open && &t == r.prefix.param_lo() {
                    return None;
                }
                Some(t)
            }
        }
    }

    pub fn eval(&self, t: &Scalar) -> Result<Point> {
        match self {
            PieceGeom::Point(p) => Ok(p.clone()),
            PieceGeom::Path(p) => p.eval(t),
            PieceGeom::Ray(r) => r.eval(t),
        }
    }
}

/// One piece of a piecewise map: a source piece, a target piece, and an
/// increasing PL bijection between their parameters (identity when absent).
#[derive(Clone, Debug)]
pub struct MapPiece {
    pub name: String,
    pub source: PieceGeom,
    pub target: PieceGeom,
    pub corr: Option<PLFunction>,
}

impl MapPiece {
    pub fn target_param(&self, t: &Scalar) -> Result<Scalar> {
        match &self.corr {
            Some(f) => f.eval(t),
            None => Ok(t.clone()),
        }
    }

    /// `(source limit, target limit)` at each finite parameter end.
    /// Point pieces and full lines contribute none.
    pub fn end_limits(&self) -> Vec<(Point, Point)> {
        match (&self.source, &self.target) {
            (PieceGeom::Path(sp), _) => {
                let mut out = Vec::new();
                for end in [End::Low, End::High] {
                    let t = match end {
                        End::Low => sp.param_lo().clone(),
                        End::High => sp.param_hi().clone(),
                    };
                    let s = self.target_param(&t).expect("corr covers source domain");
                    let tgt = self.target.eval(&s).expect("target covers corr range");
                    out.push((sp.limit(end).clone(), tgt));
                }
                out
            }
            (PieceGeom::Ray(r), _) if r.low_dir.is_none() => {
                let t = r.prefix.param_lo().clone();
                let s = self.target_param(&t).expect("corr covers source domain");
                let tgt = self.target.eval(&s).expect("target covers corr range");
                vec![(r.prefix.limit(End::Low).clone(), tgt)]
            }
            _ => Vec::new(),
        }
    }
}

/// A piecewise map whose source pieces partition the source space.
#[derive(Clone, Debug)]
pub struct PLMapping {
    pub pieces: Vec<MapPiece>,
    pub source_dim: usize,
    pub target_dim: usize,
}

impl PLMapping {
    pub fn eval(&self, x: &Point) -> Option<Point> {
        let piece = self.pieces.iter().find(|p| p.source.contains(x))?;
        let t = piece.source.param_of(x)?;
        let s = piece.target_param(&t).ok()?;
        piece.target.eval(&s).ok()
    }

    /// Preimage lookup through the target pieces.
    pub fn eval_inverse(&self, y: &Point) -> Option<Point> {
        for piece in &self.pieces {
            if let Some(s) = piece.target.param_of(y) {
                let t = match &piece.corr {
                    Some(f) => f.invert_increasing(&s).ok()?,
                    None => s,
                };
                return piece.source.eval(&t).ok();
            }
        }
        None
    }
}
