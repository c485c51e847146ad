//! Exact piecewise-linear kernel: parametrized PL paths and functions,
//! taxicab standard connections, the rescaling map, and an exact
//! first-crossing solver.
//!
//! Everything here is pure and immutable; all predicates are exact with no
//! epsilon tolerances.

use thiserror::Error;

use crate::scalar::{taxicab, Point, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("parameter {t} outside [{lo}, {hi}]")]
    ParameterOutOfRange { t: Scalar, lo: Scalar, hi: Scalar },
    #[error("point {0:?} does not lie on the path")]
    NotOnPath(Point),
    #[error("no crossing: precondition g(0) < h(0), g(u) > h(u) violated")]
    NoCrossing,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;

/// A parametrized piecewise-linear curve with an injective image.
///
/// `params` are strictly increasing breakpoints, `vertices` the corresponding
/// points; evaluation is linear interpolation. The open flags mark whether the
/// parameter endpoints belong to the semantic domain (the geometry always
/// stores the endpoint vertices, which are the affine limits of open ends).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLPath {
    params: Vec<Scalar>,
    vertices: Vec<Point>,
    pub left_open: bool,
    pub right_open: bool,
}

impl PLPath {
    pub fn new(
        params: Vec<Scalar>,
        vertices: Vec<Point>,
        left_open: bool,
        right_open: bool,
    ) -> Result<PLPath> {
        if params.len() != vertices.len() || params.is_empty() {
            return Err(KernelError::InvalidPath(format!(
                "{} params vs {} vertices",
                params.len(),
                vertices.len()
            )));
        }
        let dim = vertices[0].dim();
        for v in &vertices {
            if v.dim() != dim {
                return Err(KernelError::DimensionMismatch {
                    left: dim,
                    right: v.dim(),
                });
            }
        }
        for w in params.windows(2) {
            if w[0] >= w[1] {
                return Err(KernelError::InvalidPath(
                    "params not strictly increasing".into(),
                ));
            }
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(KernelError::InvalidPath(
                    "consecutive vertices coincide".into(),
                ));
            }
        }
        let path = PLPath {
            params,
            vertices,
            left_open,
            right_open,
        };
        path.check_injective()?;
        Ok(path)
    }

    /// Internal constructor for data already known to satisfy the invariants.
    pub(crate) fn new_unchecked(
        params: Vec<Scalar>,
        vertices: Vec<Point>,
        left_open: bool,
        right_open: bool,
    ) -> PLPath {
        PLPath {
            params,
            vertices,
            left_open,
            right_open,
        }
    }

    /// Chord-length parametrization: cumulative taxicab distance from the
    /// first vertex.
    pub fn from_vertices(vertices: Vec<Point>, left_open: bool, right_open: bool) -> Result<PLPath> {
        if vertices.is_empty() {
            return Err(KernelError::InvalidPath("no vertices".into()));
        }
        let mut params = vec![Scalar::zero()];
        for w in vertices.windows(2) {
            let d = taxicab(&w[0], &w[1])?;
            params.push(params.last().unwrap() + &d);
        }
        PLPath::new(params, vertices, left_open, right_open)
    }

    /// A degenerate single-point path.
    pub fn point(p: Point) -> PLPath {
        PLPath {
            params: vec![Scalar::zero()],
            vertices: vec![p],
            left_open: false,
            right_open: false,
        }
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn params(&self) -> &[Scalar] {
        &self.params
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn param_lo(&self) -> &Scalar {
        &self.params[0]
    }

    pub fn param_hi(&self) -> &Scalar {
        self.params.last().unwrap()
    }

    /// Total taxicab arc length.
    pub fn arc_length(&self) -> Scalar {
        self.vertices
            .windows(2)
            .fold(Scalar::zero(), |acc, w| acc + taxicab(&w[0], &w[1]).unwrap())
    }

    /// Exact linear interpolation at `t` within the closed parameter hull.
    pub fn eval(&self, t: &Scalar) -> Result<Point> {
        if t < self.param_lo() || t > self.param_hi() {
            return Err(KernelError::ParameterOutOfRange {
                t: t.clone(),
                lo: self.param_lo().clone(),
                hi: self.param_hi().clone(),
            });
        }
        if self.is_point() {
            return Ok(self.vertices[0].clone());
        }
        let idx = match self.params.binary_search(t) {
            Ok(i) => return Ok(self.vertices[i].clone()),
            Err(i) => i - 1,
        };
        let (t0, t1) = (&self.params[idx], &self.params[idx + 1]);
        let frac = (t - t0) / &(t1 - t0);
        Ok(self.vertices[idx].lerp(&self.vertices[idx + 1], &frac))
    }

    /// The affine limit at a parameter end: the stored endpoint vertex.
    pub fn limit(&self, end: End) -> &Point {
        match end {
            End::Low => &self.vertices[0],
            End::High => self.vertices.last().unwrap(),
        }
    }

    /// The unique parameter mapping to `x`, by injectivity.
    pub fn inverse(&self, x: &Point) -> Result<Scalar> {
        if x.dim() != self.dim() {
            return Err(KernelError::DimensionMismatch {
                left: self.dim(),
                right: x.dim(),
            });
        }
        if self.is_point() {
            if x == &self.vertices[0] {
                return Ok(self.params[0].clone());
            }
            return Err(KernelError::NotOnPath(x.clone()));
        }
        for i in 0..self.vertices.len() - 1 {
            let (a, b) = (&self.vertices[i], &self.vertices[i + 1]);
            if let Some(frac) = on_segment_fraction(a, b, x) {
                let (t0, t1) = (&self.params[i], &self.params[i + 1]);
                return Ok(t0 + &(&frac * &(t1 - t0)));
            }
        }
        Err(KernelError::NotOnPath(x.clone()))
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.inverse(x).is_ok()
    }

    /// Restriction to `[a, b]` keeping the original parameter values.
    pub fn sub_path(&self, a: &Scalar, b: &Scalar, left_open: bool, right_open: bool) -> Result<PLPath> {
        if a >= b {
            return Err(KernelError::InvalidPath("empty sub-path".into()));
        }
        let mut params = vec![a.clone()];
        let mut vertices = vec![self.eval(a)?];
        for (t, v) in self.params.iter().zip(&self.vertices) {
            if t > a && t < b {
                params.push(t.clone());
                vertices.push(v.clone());
            }
        }
        params.push(b.clone());
        vertices.push(self.eval(b)?);
        // interior breakpoints may duplicate the evaluated endpoints
        dedup_consecutive(&mut params, &mut vertices);
        Ok(PLPath::new_unchecked(params, vertices, left_open, right_open))
    }

    /// Reversal: parameter `t` maps to `lo + hi - t`.
    pub fn reversed(&self) -> PLPath {
        let lo = self.param_lo().clone();
        let hi = self.param_hi().clone();
        let params = self
            .params
            .iter()
            .rev()
            .map(|t| &lo + &(&hi - t))
            .collect();
        let vertices = self.vertices.iter().rev().cloned().collect();
        PLPath::new_unchecked(params, vertices, self.right_open, self.left_open)
    }

    /// Reparametrization by cumulative taxicab arc length from the low end.
    pub fn unit_speed(&self) -> PLPath {
        let mut params = vec![Scalar::zero()];
        for w in self.vertices.windows(2) {
            let d = taxicab(&w[0], &w[1]).unwrap();
            params.push(params.last().unwrap() + &d);
        }
        PLPath::new_unchecked(params, self.vertices.clone(), self.left_open, self.right_open)
    }

    /// Applies a vertex transformation, keeping parameters and flags.
    /// The caller is responsible for the transform preserving injectivity.
    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> PLPath {
        PLPath::new_unchecked(
            self.params.clone(),
            self.vertices.iter().map(f).collect(),
            self.left_open,
            self.right_open,
        )
    }

    pub fn translate(&self, offset: &Point) -> PLPath {
        self.map_vertices(|v| v.add(offset))
    }

    fn check_injective(&self) -> Result<()> {
        let m = self.vertices.len().saturating_sub(1);
        // A loop geometry (first vertex == last) is allowed when an end is
        // open: the repeated vertex is then outside the semantic image.
        let loop_ok = self.vertices.first() == self.vertices.last()
            && (self.left_open || self.right_open)
            && m > 1;
        for i in 0..m {
            for j in i + 1..m {
                let hit = segment_intersection(
                    &self.vertices[i],
                    &self.vertices[i + 1],
                    &self.vertices[j],
                    &self.vertices[j + 1],
                );
                let allowed: Option<Point> = if j == i + 1 {
                    Some(self.vertices[j].clone())
                } else if i == 0 && j == m - 1 && loop_ok {
                    Some(self.vertices[0].clone())
                } else {
                    None
                };
                match hit {
                    SegIntersection::Empty => {}
                    SegIntersection::Point(p) => {
                        if Some(p.clone()) != allowed {
                            return Err(KernelError::InvalidPath(format!(
                                "self-intersection at {p:?}"
                            )));
                        }
                    }
                    SegIntersection::Overlap(a, b) => {
                        return Err(KernelError::InvalidPath(format!(
                            "self-overlap between {a:?} and {b:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Low,
    High,
}

fn dedup_consecutive(params: &mut Vec<Scalar>, vertices: &mut Vec<Point>) {
    let mut i = 1;
    while i < params.len() {
        if params[i] == params[i - 1] {
            params.remove(i);
            vertices.remove(i);
        } else {
            i += 1;
        }
    }
}

/// If `x` lies on segment `[a, b]`, the fraction `t ∈ [0,1]` with
/// `x = a + t (b - a)`; otherwise `None`.
pub fn on_segment_fraction(a: &Point, b: &Point, x: &Point) -> Option<Scalar> {
    let d = b.sub(a);
    let c = d.coords().iter().position(|v| !v.is_zero())?;
    let frac = &(&x.coords()[c] - &a.coords()[c]) / &d.coords()[c];
    if frac.is_negative() || frac > Scalar::one() {
        return None;
    }
    if &a.lerp(b, &frac) == x {
        Some(frac)
    } else {
        None
    }
}

/// Exact intersection of two closed segments in `Q^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SegIntersection {
    Empty,
    Point(Point),
    Overlap(Point, Point),
}

pub fn segment_intersection(a0: &Point, a1: &Point, b0: &Point, b1: &Point) -> SegIntersection {
    let d1 = a1.sub(a0);
    let d2 = b1.sub(b0);
    let n = a0.dim();
    // degenerate segments reduce to point membership
    if d1.coords().iter().all(Scalar::is_zero) {
        if d2.coords().iter().all(Scalar::is_zero) {
            return if a0 == b0 {
                SegIntersection::Point(a0.clone())
            } else {
                SegIntersection::Empty
            };
        }
        return match on_segment_fraction(b0, b1, a0) {
            Some(_) => SegIntersection::Point(a0.clone()),
            None => SegIntersection::Empty,
        };
    }
    if d2.coords().iter().all(Scalar::is_zero) {
        return match on_segment_fraction(a0, a1, b0) {
            Some(_) => SegIntersection::Point(b0.clone()),
            None => SegIntersection::Empty,
        };
    }
    // look for a coordinate pair where the directions are independent
    for i in 0..n {
        for j in i + 1..n {
            let det = &(&d1.coords()[i] * &d2.coords()[j]) - &(&d1.coords()[j] * &d2.coords()[i]);
            if det.is_zero() {
                continue;
            }
            // solve a0 + t d1 = b0 + s d2 on coordinates (i, j)
            let ri = &b0.coords()[i] - &a0.coords()[i];
            let rj = &b0.coords()[j] - &a0.coords()[j];
            let t = &(&(&ri * &d2.coords()[j]) - &(&rj * &d2.coords()[i])) / &det;
            let s = &(&(&ri * &d1.coords()[j]) - &(&rj * &d1.coords()[i])) / &det;
            if t.is_negative() || t > Scalar::one() || s.is_negative() || s > Scalar::one() {
                return SegIntersection::Empty;
            }
            let pa = a0.lerp(a1, &t);
            let pb = b0.lerp(b1, &s);
            return if pa == pb {
                SegIntersection::Point(pa)
            } else {
                SegIntersection::Empty
            };
        }
    }
    // directions are parallel; check collinearity of b0 with the a-line
    let r = b0.sub(a0);
    let mut collinear = true;
    'outer: for i in 0..n {
        for j in i + 1..n {
            let det = &(&d1.coords()[i] * &r.coords()[j]) - &(&d1.coords()[j] * &r.coords()[i]);
            if !det.is_zero() {
                collinear = false;
                break 'outer;
            }
        }
    }
    if !collinear {
        return SegIntersection::Empty;
    }
    // collinear: compare parameters of b0, b1 along a
    let c = d1.coords().iter().position(|v| !v.is_zero()).unwrap();
    let tb0 = &(&b0.coords()[c] - &a0.coords()[c]) / &d1.coords()[c];
    let tb1 = &(&b1.coords()[c] - &a0.coords()[c]) / &d1.coords()[c];
    let (lo, hi) = if tb0 <= tb1 { (tb0, tb1) } else { (tb1, tb0) };
    let lo = lo.max(Scalar::zero());
    let hi = hi.min(Scalar::one());
    if lo > hi {
        SegIntersection::Empty
    } else if lo == hi {
        SegIntersection::Point(a0.lerp(a1, &lo))
    } else {
        SegIntersection::Overlap(a0.lerp(a1, &lo), a0.lerp(a1, &hi))
    }
}

/// One common point or overlapping subsegment of two PL paths.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum IntersectionRecord {
    Point(Point),
    Overlap(Point, Point),
}

/// All common points and overlaps of two paths, over their closed hulls.
pub fn pl_intersections(a: &PLPath, b: &PLPath) -> Result<Vec<IntersectionRecord>> {
    if a.dim() != b.dim() {
        return Err(KernelError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut out = std::collections::BTreeSet::new();
    let seg = |p: &PLPath, i: usize| -> (Point, Point) {
        if p.is_point() {
            (p.vertices()[0].clone(), p.vertices()[0].clone())
        } else {
            (p.vertices()[i].clone(), p.vertices()[i + 1].clone())
        }
    };
    let na = if a.is_point() { 1 } else { a.vertices().len() - 1 };
    let nb = if b.is_point() { 1 } else { b.vertices().len() - 1 };
    for i in 0..na {
        for j in 0..nb {
            let (a0, a1) = seg(a, i);
            let (b0, b1) = seg(b, j);
            match segment_intersection(&a0, &a1, &b0, &b1) {
                SegIntersection::Empty => {}
                SegIntersection::Point(p) => {
                    out.insert(IntersectionRecord::Point(p));
                }
                SegIntersection::Overlap(p, q) => {
                    out.insert(IntersectionRecord::Overlap(p, q));
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// The axis-aligned staircase from `p` to `q`, changing the last coordinate
/// first; its taxicab length equals `taxicab(p, q)`. Degenerate segments are
/// dropped, so `p = q` yields a single-point path. Parametrized at unit
/// taxicab speed from 0.
pub fn std_connection(p: &Point, q: &Point) -> Result<PLPath> {
    if p.dim() != q.dim() {
        return Err(KernelError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let n = p.dim();
    let mut vertices: Vec<Point> = vec![p.clone()];
    for j in 1..=n {
        let mut coords = Vec::with_capacity(n);
        coords.extend(p.coords()[..n - j].iter().cloned());
        coords.extend(q.coords()[n - j..].iter().cloned());
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

/// Unit-taxicab-speed traversal of `Std(p, q)`: `Ψ(0) = p`,
/// `Ψ(d(p,q)) = q`, and `Ψ` is a taxicab isometry along the path.
pub fn psi(t: &Scalar, p: &Point, q: &Point) -> Result<Point> {
    let d = taxicab(p, q)?;
    if t.is_negative() || t > &d {
        return Err(KernelError::ParameterOutOfRange {
            t: t.clone(),
            lo: Scalar::zero(),
            hi: d,
        });
    }
    let path = std_connection(p, q)?;
    if path.is_point() {
        return Ok(p.clone());
    }
    path.eval(t)
}

/// The linear interval rescaling `Φ(t) = 3nR·t/u : [0,u] → [0,3nR]`.
pub fn phi_rescale(t: &Scalar, u: &Scalar, n: usize, r: &Scalar) -> Result<Scalar> {
    if !u.is_positive() || !r.is_positive() {
        return Err(KernelError::InvalidFunction("need u > 0 and R > 0".into()));
    }
    if t.is_negative() || t > u {
        return Err(KernelError::ParameterOutOfRange {
            t: t.clone(),
            lo: Scalar::zero(),
            hi: u.clone(),
        });
    }
    let top = &Scalar::from_int(3 * n as i64) * r;
    Ok(&(&top * t) / u)
}

/// `Φ` as a PL function on `[0, u]`.
pub fn phi_function(u: &Scalar, n: usize, r: &Scalar) -> PLFunction {
    let top = &Scalar::from_int(3 * n as i64) * r;
    PLFunction::new(vec![Scalar::zero(), u.clone()], vec![Scalar::zero(), top]).unwrap()
}

/// A scalar piecewise-linear function on a closed parameter hull.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLFunction {
    params: Vec<Scalar>,
    values: Vec<Scalar>,
}

impl PLFunction {
    pub fn new(params: Vec<Scalar>, values: Vec<Scalar>) -> Result<PLFunction> {
        if params.len() != values.len() || params.is_empty() {
            return Err(KernelError::InvalidFunction("length mismatch".into()));
        }
        for w in params.windows(2) {
            if w[0] >= w[1] {
                return Err(KernelError::InvalidFunction(
                    "params not strictly increasing".into(),
                ));
            }
        }
        Ok(PLFunction { params, values })
    }

    pub fn params(&self) -> &[Scalar] {
        &self.params
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn domain(&self) -> (&Scalar, &Scalar) {
        (&self.params[0], self.params.last().unwrap())
    }

    pub fn eval(&self, t: &Scalar) -> Result<Scalar> {
        let (lo, hi) = self.domain();
        if t < lo || t > hi {
            return Err(KernelError::ParameterOutOfRange {
                t: t.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
        let idx = match self.params.binary_search(t) {
            Ok(i) => return Ok(self.values[i].clone()),
            Err(i) => i - 1,
        };
        let (t0, t1) = (&self.params[idx], &self.params[idx + 1]);
        let frac = (t - t0) / &(t1 - t0);
        Ok(&self.values[idx] + &(&frac * &(&self.values[idx + 1] - &self.values[idx])))
    }

    /// For an increasing function, the unique `t` with `f(t) = v`.
    pub fn invert_increasing(&self, v: &Scalar) -> Result<Scalar> {
        for i in 0..self.params.len() - 1 {
            let (v0, v1) = (&self.values[i], &self.values[i + 1]);
            if v >= v0 && v <= v1 && v1 > v0 {
                let frac = (v - v0) / &(v1 - v0);
                return Ok(&self.params[i] + &(&frac * &(&self.params[i + 1] - &self.params[i])));
            }
        }
        Err(KernelError::InvalidFunction(format!(
            "value {v} outside range of increasing function"
        )))
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }
}

/// The exact infimum `v` of `{0 < t < u | g(t) = h(t)}` under the strict
/// endpoint preconditions `g(0) < h(0)` and `g(u) > h(u)`; `g(v) = h(v)`
/// holds exactly and `g < h` on `(0, v)`.
pub fn solve_first_crossing(g: &PLFunction, h: &PLFunction, u: &Scalar) -> Result<Scalar> {
    let zero = Scalar::zero();
    let g0 = g.eval(&zero)?;
    let h0 = h.eval(&zero)?;
    let gu = g.eval(u)?;
    let hu = h.eval(u)?;
    if g0 >= h0 || gu <= hu {
        return Err(KernelError::NoCrossing);
    }
    // merged breakpoint grid of g - h over [0, u]
    let mut grid: Vec<Scalar> = vec![zero.clone()];
    for t in g.params().iter().chain(h.params()) {
        if t > &zero && t < u {
            grid.push(t.clone());
        }
    }
    grid.push(u.clone());
    grid.sort();
    grid.dedup();
    let mut fa = &g0 - &h0; // negative
    for w in grid.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let fb = &g.eval(b)? - &h.eval(b)?;
        if fb.is_zero() {
            return Ok(b.clone());
        }
        if fb.is_positive() {
            // linear piece with fa < 0 < fb
            let frac = &(-&fa) / &(&fb - &fa);
            return Ok(a + &(&frac * &(b - a)));
        }
        fa = fb;
    }
    // unreachable given the endpoint signs
    Err(KernelError::NoCrossing)
}
