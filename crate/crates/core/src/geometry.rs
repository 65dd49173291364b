//! Piecewise-smooth curves, the corner-grading map `s = w(t)` and graded
//! collocation meshes.
//!
//! A curve is a chain of arclength-parameterized line and circular-arc
//! segments. A mesh assigns an even number of nodes to each segment and maps
//! the uniform parameter `t_j = j/N` through a per-segment grading whose
//! derivatives vanish at both segment ends, so every segment junction is a
//! node and the nodes cluster there.
//!
//! Mesh positions are addressed by [`Param`], a node number plus a fractional
//! offset in node units. Local quantities near a junction are computed from
//! the integer part, so offsets of order `1e-3` node units keep full relative
//! precision even where the arclength itself is `1e-20`.

use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("segments are not contiguous at junction {0}")]
    NotContiguous(usize),
    #[error("parameter t = {0} sits on a junction; a side must be given")]
    AmbiguousCorner(f64),
}

pub type Point<T> = [T; 2];

/// Wedge product `a ∧ b = a₂b₁ − a₁b₂`, the orientation used by the kernels.
#[inline]
pub fn wedge<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[1] * b[0] - a[0] * b[1]
}

/// Which side of a junction to take a one-sided limit from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

/// Arclength position inside a segment, measured from whichever end is
/// nearer so that small offsets keep their relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalPos<T> {
    FromStart(T),
    FromEnd(T),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind<T> {
    Line { start: Point<T>, end: Point<T>, dir: Point<T> },
    /// Circular arc; `sense` is `+1` for counterclockwise traversal.
    Arc { start: Point<T>, end: Point<T>, center: Point<T>, radius: T, theta0: T, theta1: T, sense: T },
}

/// Smooth arclength-parameterized piece of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSegment<T> {
    pub kind: SegmentKind<T>,
    pub length: T,
}

/// Point, unit tangent `dx/ds` and `d²x/ds²` on a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPoint<T> {
    pub x: Point<T>,
    pub tau: Point<T>,
    pub dtau: Point<T>,
}

impl<T: Real> SmoothSegment<T> {
    pub fn line(start: Point<T>, end: Point<T>) -> Result<Self, GeometryError> {
        let d = [end[0] - start[0], end[1] - start[1]];
        let length = d[0].hypot(d[1]);
        if !(length > T::zero()) {
            return Err(GeometryError::Parameter("degenerate line segment".into()));
        }
        let dir = [d[0] / length, d[1] / length];
        Ok(Self { kind: SegmentKind::Line { start, end, dir }, length })
    }

    /// Arc from `start` to `end` around `center`. Both endpoints must lie on the
    /// same circle; they are stored verbatim so exact junction coordinates
    /// survive.
    pub fn arc(start: Point<T>, end: Point<T>, center: Point<T>, ccw: bool) -> Result<Self, GeometryError> {
        let r0 = (start[0] - center[0]).hypot(start[1] - center[1]);
        let r1 = (end[0] - center[0]).hypot(end[1] - center[1]);
        if !(r0 > T::zero()) || (r0 - r1).abs() > T::of(1e-9) * r0 {
            return Err(GeometryError::Parameter("arc endpoints are not on one circle".into()));
        }
        let theta0 = (start[1] - center[1]).atan2(start[0] - center[0]);
        let mut theta1 = (end[1] - center[1]).atan2(end[0] - center[0]);
        let two_pi = T::PI() + T::PI();
        let sense = if ccw { T::one() } else { -T::one() };
        if ccw {
            while theta1 <= theta0 {
                theta1 = theta1 + two_pi;
            }
        } else {
            while theta1 >= theta0 {
                theta1 = theta1 - two_pi;
            }
        }
        let length = r0 * (theta1 - theta0).abs();
        Ok(Self {
            kind: SegmentKind::Arc { start, end, center, radius: r0, theta0, theta1, sense },
            length,
        })
    }

    pub fn start(&self) -> Point<T> {
        match &self.kind {
            SegmentKind::Line { start, .. } | SegmentKind::Arc { start, .. } => *start,
        }
    }

    pub fn end(&self) -> Point<T> {
        match &self.kind {
            SegmentKind::Line { end, .. } | SegmentKind::Arc { end, .. } => *end,
        }
    }

    /// Exact evaluation at a local arclength position.
    pub fn eval(&self, pos: LocalPos<T>) -> SegmentPoint<T> {
        match &self.kind {
            SegmentKind::Line { start, end, dir } => {
                let x = match pos {
                    LocalPos::FromStart(s) => [start[0] + dir[0] * s, start[1] + dir[1] * s],
                    LocalPos::FromEnd(s) => [end[0] - dir[0] * s, end[1] - dir[1] * s],
                };
                SegmentPoint { x, tau: *dir, dtau: [T::zero(), T::zero()] }
            }
            SegmentKind::Arc { start, end, radius, theta0, theta1, sense, .. } => {
                let (base, theta_ref, phi) = match pos {
                    LocalPos::FromStart(s) => (*start, *theta0, *sense * s / *radius),
                    LocalPos::FromEnd(s) => (*end, *theta1, -*sense * s / *radius),
                };
                // R e^{iθ}(e^{iφ} − 1) with e^{iφ} − 1 = −2 sin²(φ/2) + i sin φ
                let h = (phi / T::of(2.0)).sin();
                let (em_re, em_im) = (-T::of(2.0) * h * h, phi.sin());
                let (c, s) = (theta_ref.cos(), theta_ref.sin());
                let dx = *radius * (c * em_re - s * em_im);
                let dy = *radius * (s * em_re + c * em_im);
                let theta = theta_ref + phi;
                let (ct, st) = (theta.cos(), theta.sin());
                SegmentPoint {
                    x: [base[0] + dx, base[1] + dy],
                    tau: [-*sense * st, *sense * ct],
                    dtau: [-ct / *radius, -st / *radius],
                }
            }
        }
    }

    /// Evaluation at arclength `s ∈ [0, length]` from the start.
    pub fn at(&self, s: T) -> SegmentPoint<T> {
        if s + s <= self.length {
            self.eval(LocalPos::FromStart(s))
        } else {
            self.eval(LocalPos::FromEnd(self.length - s))
        }
    }
}

/// Chain of smooth segments: an open interface `Γ_AB` or a closed obstacle
/// boundary. Every junction between segments is treated as a corner; smooth
/// junctions (artificial corners) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCurve<T> {
    pub segments: Vec<SmoothSegment<T>>,
    pub closed: bool,
}

impl<T: Real> PiecewiseCurve<T> {
    pub fn new(segments: Vec<SmoothSegment<T>>, closed: bool) -> Result<Self, GeometryError> {
        if segments.is_empty() {
            return Err(GeometryError::Parameter("empty curve".into()));
        }
        let tol = |p: Point<T>, q: Point<T>| (p[0] - q[0]).hypot(p[1] - q[1]) <= T::of(1e-12);
        for i in 1..segments.len() {
            if !tol(segments[i - 1].end(), segments[i].start()) {
                return Err(GeometryError::NotContiguous(i));
            }
        }
        if closed && !tol(segments[segments.len() - 1].end(), segments[0].start()) {
            return Err(GeometryError::NotContiguous(0));
        }
        Ok(Self { segments, closed })
    }

    pub fn open(segments: Vec<SmoothSegment<T>>) -> Result<Self, GeometryError> {
        Self::new(segments, false)
    }

    pub fn closed(segments: Vec<SmoothSegment<T>>) -> Result<Self, GeometryError> {
        Self::new(segments, true)
    }

    pub fn endpoint_a(&self) -> Point<T> {
        self.segments[0].start()
    }

    pub fn endpoint_b(&self) -> Point<T> {
        self.segments[self.segments.len() - 1].end()
    }

    pub fn length(&self) -> T {
        self.segments.iter().fold(T::zero(), |acc, s| acc + s.length)
    }

    /// Arclength of every junction, including the two ends.
    pub fn junction_arclengths(&self) -> Vec<T> {
        let mut out = vec![T::zero()];
        let mut acc = T::zero();
        for s in &self.segments {
            acc = acc + s.length;
            out.push(acc);
        }
        out
    }

    /// Splits the segment containing arclength `s` there, declaring an
    /// artificial corner. Only line segments can be split.
    pub fn with_artificial_corner(mut self, s: T) -> Result<Self, GeometryError> {
        let mut acc = T::zero();
        for i in 0..self.segments.len() {
            let len = self.segments[i].length;
            if s > acc && s < acc + len {
                let (start, end) = (self.segments[i].start(), self.segments[i].end());
                let mid = self.segments[i].at(s - acc).x;
                match self.segments[i].kind {
                    SegmentKind::Line { .. } => {
                        let a = SmoothSegment::line(start, mid)?;
                        let b = SmoothSegment::line(mid, end)?;
                        self.segments.splice(i..=i, [a, b]);
                        return Ok(self);
                    }
                    SegmentKind::Arc { .. } => {
                        return Err(GeometryError::Parameter("artificial corners only split lines".into()))
                    }
                }
            }
            acc = acc + len;
        }
        Err(GeometryError::Parameter("artificial corner outside the curve interior".into()))
    }
}

/// Coefficients of the grading cubic `v(ξ) = Aξ³ + Bξ + 1/2`.
#[inline]
fn cubic_coeffs<T: Real>(p: u32) -> (T, T) {
    let pf = T::of_int(p as i64);
    (T::of(0.5) - T::one() / pf, T::one() / pf)
}

/// Grading quantities at a point inside a segment, from the node-unit
/// distances `a` to the start and `b` to the end (`a + b = n`).
#[derive(Debug, Clone, Copy)]
pub struct Grading<T> {
    /// `f(ξ) ∈ [0, 1]`, the relative arclength from the start.
    pub f: T,
    /// `1 − f`, computed without cancellation.
    pub g: T,
    /// `df/dξ`.
    pub df: T,
}

pub fn grading_local<T: Real>(a: T, b: T, n: T, p: u32) -> Grading<T> {
    let (ca, _) = cubic_coeffs::<T>(p);
    let half = T::of(0.5);
    let two = T::of(2.0);
    let xi = (a - b) / n;
    let opx = two * a / n;
    let omx = two * b / n;
    let w2 = opx * (ca * xi * xi - ca * xi + half);
    let w1 = omx * (ca * xi * xi + ca * xi + half);
    let pi = p as i32;
    let w1p = w1.powi(pi);
    let w2p = w2.powi(pi);
    let d = w1p + w2p;
    let (_, cb) = cubic_coeffs::<T>(p);
    let dv = T::of(3.0) * ca * xi * xi + cb;
    let pf = T::of_int(p as i64);
    let df = pf * dv * (w1 * w2).powi(pi - 1) / (d * d);
    Grading { f: w2p / d, g: w1p / d, df }
}

/// The grading map on one segment: `t ∈ [t0, t1] ↦ s ∈ [s0, s1]` and its
/// derivative. Derivatives of order `1..p−1` vanish at both ends.
pub fn grading_w<T: Real>(t: T, t0: T, t1: T, s0: T, s1: T, p: u32) -> Result<(T, T), GeometryError> {
    if p < 2 {
        return Err(GeometryError::Parameter(format!("grading order p = {p} < 2")));
    }
    if !(t0 < t1) || !(s0 < s1) {
        return Err(GeometryError::Parameter("grading interval must be increasing".into()));
    }
    let g = grading_local(t - t0, t1 - t, t1 - t0, p);
    let len = s1 - s0;
    let s = if g.f <= g.g { s0 + len * g.f } else { s1 - len * g.g };
    let dxi_dt = T::of(2.0) / (t1 - t0);
    Ok((s, len * g.df * dxi_dt))
}

/// Mesh position `u = node + frac` in node units; node `j` sits at `t = j/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Param<T> {
    pub node: i64,
    pub frac: T,
}

impl<T: Real> Param<T> {
    pub fn node(node: i64) -> Self {
        Self { node, frac: T::zero() }
    }

    pub fn new(node: i64, frac: T) -> Self {
        Self { node, frac }
    }

    /// Parameter value in node units (lossy for huge node counts only).
    pub fn u(&self) -> T {
        T::of_int(self.node) + self.frac
    }
}

/// Geometry at a mesh position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub x: Point<T>,
    pub tau: Point<T>,
    pub dtau: Point<T>,
    /// `w'(t)`, i.e. `|x'(t)|` for the physical curve.
    pub wprime: T,
    pub segment: usize,
    pub local: LocalPos<T>,
}

/// Graded Nyström mesh on a piecewise curve.
#[derive(Debug, Clone)]
pub struct GradedMesh<T> {
    pub curve: PiecewiseCurve<T>,
    pub counts: Vec<usize>,
    /// Node number of each segment start, plus `N` at the end.
    pub offsets: Vec<i64>,
    pub n: usize,
    pub p: u32,
    pub nodes: Vec<CurvePoint<T>>,
}

impl<T: Real> GradedMesh<T> {
    pub fn new(curve: PiecewiseCurve<T>, counts: &[usize], p: u32) -> Result<Self, GeometryError> {
        if counts.len() != curve.segments.len() {
            return Err(GeometryError::Parameter(format!(
                "{} node counts for {} segments",
                counts.len(),
                curve.segments.len()
            )));
        }
        if p < 2 {
            return Err(GeometryError::Parameter(format!("grading order p = {p} < 2")));
        }
        if let Some(c) = counts.iter().find(|&&c| c == 0 || c % 2 == 1) {
            return Err(GeometryError::Parameter(format!("per-segment node count {c} is not even and positive")));
        }
        let mut offsets = vec![0i64];
        for &c in counts {
            offsets.push(offsets.last().unwrap() + c as i64);
        }
        let n = *offsets.last().unwrap() as usize;
        let mut mesh = Self { curve, counts: counts.to_vec(), offsets, n, p, nodes: Vec::with_capacity(n) };
        for j in 1..=n as i64 {
            let pt = mesh.eval(Param::node(j), Side::Before);
            mesh.nodes.push(pt);
        }
        Ok(mesh)
    }

    /// Mesh with equal node counts per segment.
    pub fn uniform_counts(curve: PiecewiseCurve<T>, per_segment: usize, p: u32) -> Result<Self, GeometryError> {
        let counts = vec![per_segment; curve.segments.len()];
        Self::new(curve, &counts, p)
    }

    pub fn h(&self) -> T {
        T::one() / T::of_int(self.n as i64)
    }

    /// Node numbers of interior junctions (for closed curves the start node `N`
    /// is a junction as well).
    pub fn corner_nodes(&self) -> Vec<i64> {
        let m = self.counts.len();
        let mut out: Vec<i64> = self.offsets[1..m].to_vec();
        if self.curve.closed {
            out.push(self.n as i64);
        }
        out
    }

    /// Wraps a parameter into `[0, N]`.
    pub fn normalize(&self, p: Param<T>) -> Param<T> {
        let n = self.n as i64;
        let mut q = p;
        while q.u() > T::of_int(n) {
            q.node -= n;
        }
        while q.u() < T::zero() {
            q.node += n;
        }
        q
    }

    /// Segment index and node-unit distances `(a, b)` to its ends.
    pub fn locate(&self, p: Param<T>, side: Side) -> (usize, T, T) {
        let mut p = self.normalize(p);
        let m = self.counts.len();
        let n = self.n as i64;
        if self.curve.closed {
            if p.u() == T::zero() {
                p = Param::node(n);
            }
            if p.u() == T::of_int(n) && side == Side::After {
                return (0, T::zero(), T::of_int(self.counts[0] as i64));
            }
        }
        let u = p.u();
        let mut seg = m - 1;
        for i in 0..m {
            let hi = T::of_int(self.offsets[i + 1]);
            if u < hi || (u == hi && side == Side::Before) {
                seg = i;
                break;
            }
        }
        let a = T::of_int(p.node - self.offsets[seg]) + p.frac;
        let b = T::of_int(self.offsets[seg + 1] - p.node) - p.frac;
        (seg, a, b)
    }

    /// Local arclength position and `w'` at a located point.
    pub fn local_grading(&self, seg: usize, a: T, b: T) -> (LocalPos<T>, T) {
        let nseg = T::of_int(self.counts[seg] as i64);
        let g = grading_local(a, b, nseg, self.p);
        let len = self.curve.segments[seg].length;
        let pos = if a <= b { LocalPos::FromStart(len * g.f) } else { LocalPos::FromEnd(len * g.g) };
        let wprime = len * g.df * T::of(2.0) * T::of_int(self.n as i64) / nseg;
        (pos, wprime)
    }

    /// `w'(t)` at a located point.
    pub fn wprime_local(&self, seg: usize, a: T, b: T) -> T {
        self.local_grading(seg, a, b).1
    }

    /// Geometry at a mesh position. At a junction `side` picks the segment.
    pub fn eval(&self, p: Param<T>, side: Side) -> CurvePoint<T> {
        let (seg, a, b) = self.locate(p, side);
        let (local, wprime) = self.local_grading(seg, a, b);
        let sp = self.curve.segments[seg].eval(local);
        CurvePoint { x: sp.x, tau: sp.tau, dtau: sp.dtau, wprime, segment: seg, local }
    }

    /// Geometry at `t ∈ (0, 1]`; junction parameters require a side.
    pub fn geometry_at(&self, t: T, side: Option<Side>) -> Result<CurvePoint<T>, GeometryError> {
        if !(t > T::zero() && t <= T::one()) {
            return Err(GeometryError::Parameter(format!("t = {} outside (0, 1]", t.f64())));
        }
        let u = t * T::of_int(self.n as i64);
        let node = u.round().to_i64().unwrap_or(0);
        let frac = u - T::of_int(node);
        let p = Param::new(node, frac);
        let on_junction = frac == T::zero() && self.corner_nodes().contains(&node);
        match (on_junction, side) {
            (true, None) => Err(GeometryError::AmbiguousCorner(t.f64())),
            (_, s) => Ok(self.eval(p, s.unwrap_or(Side::Before))),
        }
    }

    /// Global arclength at a mesh position.
    pub fn arclength(&self, p: Param<T>) -> T {
        let (seg, a, b) = self.locate(p, Side::Before);
        let mut s0 = T::zero();
        for sgm in &self.curve.segments[..seg] {
            s0 = s0 + sgm.length;
        }
        let len = self.curve.segments[seg].length;
        let g = grading_local(a, b, T::of_int(self.counts[seg] as i64), self.p);
        if g.f <= g.g {
            s0 + len * g.f
        } else {
            s0 + len - len * g.g
        }
    }

    /// Inverse of [`Self::arclength`] by bisection in node units.
    pub fn param_of_arclength(&self, s: T) -> Param<T> {
        let mut acc = T::zero();
        let m = self.counts.len();
        let mut seg = m - 1;
        for (i, sg) in self.curve.segments.iter().enumerate() {
            if s <= acc + sg.length || i == m - 1 {
                seg = i;
                break;
            }
            acc = acc + sg.length;
        }
        let len = self.curve.segments[seg].length;
        let local = s - acc;
        let pos = if local + local <= len {
            LocalPos::FromStart(local)
        } else {
            LocalPos::FromEnd(len - local)
        };
        self.param_of_local(seg, pos)
    }

    /// Mesh position of a local arclength position on segment `seg`, by
    /// bisection on the grading measured from the same end.
    pub fn param_of_local(&self, seg: usize, pos: LocalPos<T>) -> Param<T> {
        let c0 = self.offsets[seg];
        let nseg = T::of_int(self.counts[seg] as i64);
        let len = self.curve.segments[seg].length;
        let (mut lo, mut hi) = (T::zero(), nseg);
        for _ in 0..200 {
            let mid = (lo + hi) / T::of(2.0);
            let g = grading_local(mid, nseg - mid, nseg, self.p);
            let below = match pos {
                LocalPos::FromStart(t) => len * g.f < t,
                LocalPos::FromEnd(t) => len * g.g > t,
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * nseg {
                break;
            }
        }
        let a = match pos {
            LocalPos::FromStart(t) if t == T::zero() => T::zero(),
            LocalPos::FromEnd(t) if t == T::zero() => nseg,
            _ => (lo + hi) / T::of(2.0),
        };
        let whole = a.floor();
        Param::new(c0 + whole.to_i64().unwrap_or(0), a - whole)
    }

    /// Largest physical spacing between consecutive nodes.
    pub fn spacings(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n);
        for j in 1..self.n {
            let (p, q) = (self.nodes[j - 1].x, self.nodes[j].x);
            out.push((p[0] - q[0]).hypot(p[1] - q[1]));
        }
        out
    }
}

/// Interfaces and obstacles of the worked examples.
///
/// The notched interface and the drop are stand-ins: five trapezoidal
/// indentations and a circle capped by two tangent lines.
pub mod shapes {
    use super::{GeometryError, PiecewiseCurve, SmoothSegment};

    type Curve = PiecewiseCurve<f64>;

    /// `x₂ = 0` on `[-half, half]` with an artificial corner at the origin.
    pub fn flat(half: f64) -> Result<Curve, GeometryError> {
        PiecewiseCurve::open(vec![
            SmoothSegment::line([-half, 0.0], [0.0, 0.0])?,
            SmoothSegment::line([0.0, 0.0], [half, 0.0])?,
        ])
    }

    /// Flat tails to `±half`, an upward unit semicircle on `[-2, 0]` and a
    /// downward one on `[0, 2]`.
    pub fn semicircles(half: f64) -> Result<Curve, GeometryError> {
        PiecewiseCurve::open(vec![
            SmoothSegment::line([-half, 0.0], [-2.0, 0.0])?,
            SmoothSegment::arc([-2.0, 0.0], [0.0, 0.0], [-1.0, 0.0], false)?,
            SmoothSegment::arc([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], true)?,
            SmoothSegment::line([2.0, 0.0], [half, 0.0])?,
        ])
    }

    /// Five trapezoidal indentations centred at `-4, -2, 0, 2, 4` (top width 1,
    /// bottom width 0.5, depth 0.5) joined by flats, with tails to `±half`.
    /// 21 segments.
    pub fn notched(half: f64) -> Result<Curve, GeometryError> {
        let mut segs = Vec::with_capacity(21);
        let mut x = -half;
        for c in [-4.0, -2.0, 0.0, 2.0, 4.0] {
            segs.push(SmoothSegment::line([x, 0.0], [c - 0.5, 0.0])?);
            segs.push(SmoothSegment::line([c - 0.5, 0.0], [c - 0.25, -0.5])?);
            segs.push(SmoothSegment::line([c - 0.25, -0.5], [c + 0.25, -0.5])?);
            segs.push(SmoothSegment::line([c + 0.25, -0.5], [c + 0.5, 0.0])?);
            x = c + 0.5;
        }
        segs.push(SmoothSegment::line([x, 0.0], [half, 0.0])?);
        PiecewiseCurve::open(segs)
    }

    /// Drop: circle of radius `r` about `center` with a tip at distance `2r`
    /// straight above, joined by the two tangent lines. Counterclockwise from
    /// the tip.
    pub fn drop(center: [f64; 2], r: f64) -> Result<Curve, GeometryError> {
        let tip = [center[0], center[1] + 2.0 * r];
        let at = |deg: f64| {
            let a = deg.to_radians();
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        };
        let (left, right) = (at(150.0), at(30.0));
        PiecewiseCurve::closed(vec![
            SmoothSegment::line(tip, left)?,
            SmoothSegment::arc(left, right, center, true)?,
            SmoothSegment::line(right, tip)?,
        ])
    }

    /// `x₂ = 0` for `x₁ < 0`, a vertical unit drop at `x₁ = 0`, `x₂ = -1` for
    /// `x₁ > 0`.
    pub fn step(half: f64) -> Result<Curve, GeometryError> {
        PiecewiseCurve::open(vec![
            SmoothSegment::line([-half, 0.0], [0.0, 0.0])?,
            SmoothSegment::line([0.0, 0.0], [0.0, -1.0])?,
            SmoothSegment::line([0.0, -1.0], [half, -1.0])?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> PiecewiseCurve<f64> {
        PiecewiseCurve::open(vec![SmoothSegment::line([-2.0, 0.0], [2.0, 0.0]).unwrap()]).unwrap()
    }

    #[test]
    fn grading_endpoints_and_midpoint() {
        let (s, d) = grading_w::<f64>(0.2, 0.2, 0.6, 1.0, 3.0, 6).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(d, 0.0);
        let (s, _) = grading_w::<f64>(0.4, 0.2, 0.6, 1.0, 3.0, 6).unwrap();
        assert!((s - 2.0).abs() < 1e-15);
        let (s, d) = grading_w::<f64>(0.6, 0.2, 0.6, 1.0, 3.0, 6).unwrap();
        assert!((s - 3.0).abs() < 1e-15 && d == 0.0);
        assert!(grading_w::<f64>(0.3, 0.2, 0.6, 1.0, 3.0, 1).is_err());
    }

    #[test]
    fn grading_derivative_matches_difference_quotient() {
        for &t in &[0.25, 0.33, 0.41, 0.55] {
            let h = 1e-6;
            let (sp, _) = grading_w::<f64>(t + h, 0.2, 0.6, 1.0, 3.0, 6).unwrap();
            let (sm, _) = grading_w::<f64>(t - h, 0.2, 0.6, 1.0, 3.0, 6).unwrap();
            let (_, d) = grading_w::<f64>(t, 0.2, 0.6, 1.0, 3.0, 6).unwrap();
            assert!(((sp - sm) / (2.0 * h) - d).abs() < 1e-6 * d.abs().max(1.0));
        }
    }

    #[test]
    fn single_flat_segment_mesh() {
        let m = GradedMesh::new(flat(), &[8], 6).unwrap();
        assert_eq!(m.n, 8);
        let s: Vec<f64> = (1..=8).map(|j| m.arclength(Param::node(j))).collect();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!((s[7] - 4.0).abs() < 1e-15);
        assert!((m.nodes[3].x[0] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn corner_parameter_is_a_node() {
        let c = PiecewiseCurve::open(vec![
            SmoothSegment::line([-1.0, 0.0], [0.0, 0.0]).unwrap(),
            SmoothSegment::line([0.0, 0.0], [1.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let m = GradedMesh::new(c, &[4, 4], 6).unwrap();
        assert_eq!(m.corner_nodes(), vec![4]);
        assert_eq!(m.nodes[3].x, [0.0, 0.0]);
        assert_eq!(m.nodes[3].wprime, 0.0);
        assert!(m.geometry_at(0.5, None).is_err());
        let before = m.geometry_at(0.5, Some(Side::Before)).unwrap();
        let after = m.geometry_at(0.5, Some(Side::After)).unwrap();
        assert_ne!(before.tau, after.tau);
    }

    #[test]
    fn odd_counts_rejected() {
        assert!(GradedMesh::new(flat(), &[7], 6).is_err());
        assert!(PiecewiseCurve::<f64>::open(vec![]).is_err());
    }

    #[test]
    fn arc_curvature_and_endpoints() {
        let a = SmoothSegment::arc([-2.0, 0.0], [0.0, 0.0], [-1.0, 0.0], false).unwrap();
        assert!((a.length - std::f64::consts::PI).abs() < 1e-15);
        for k in 0..=10 {
            let p = a.at(a.length * k as f64 / 10.0);
            let kappa = p.dtau[0].hypot(p.dtau[1]);
            assert!((kappa - 1.0).abs() < 1e-14);
            assert!(((p.x[0] + 1.0).hypot(p.x[1]) - 1.0).abs() < 1e-14);
            assert!(p.x[1] >= -1e-15);
        }
        let end = a.eval(LocalPos::FromEnd(0.0));
        assert_eq!(end.x, [0.0, 0.0]);
    }

    #[test]
    fn param_inversion_round_trips() {
        let m = GradedMesh::new(flat().with_artificial_corner(2.0).unwrap(), &[12, 14], 6).unwrap();
        for j in 1..=26 {
            let nd = m.nodes[j as usize - 1];
            let p = m.param_of_local(nd.segment, nd.local);
            assert!((p.u() - j as f64).abs() < 1e-9, "{j}: {:?}", p);
        }
        let p = m.param_of_arclength(m.arclength(Param::node(5)));
        assert!((p.u() - 5.0).abs() < 1e-9);
    }
}
