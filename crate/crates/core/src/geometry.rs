//! Discrete closed space curves and their differential geometry.
//!
//! A [`Filament`] is an ordered ring of nodes; the last node connects back to
//! the first. Smooth quantities (arclength, tangent, curvature, torsion) are
//! recovered from the nodes through a periodic cubic spline and periodic
//! differentiation.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::{cos, ordered_sum, segment_distance_sq, sin, sqrt, Mat3, Vec3, TAU};
use crate::quadrature::gauss_legendre5;
use crate::spectral::periodic_derivatives;

pub const MIN_POINTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("a filament needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("segment {index} has length {length:e}, below the degeneracy floor")]
    DegenerateSegment { index: usize, length: f64 },
    #[error("non-finite coordinate at node {0}")]
    NonFinite(usize),
    #[error("invalid torus knot parameters: {0}")]
    InvalidTorusKnot(&'static str),
    #[error("circle normal must be nonzero")]
    ZeroNormal,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("bundle offset {offset} is not below the minimum radius of curvature {min_radius}")]
    OffsetTooLarge { offset: f64, min_radius: f64 },
    #[error("curve has zero length")]
    ZeroLength,
}

/// A closed vortex filament: node positions, circulation and an integer label.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "FilamentRecord", into = "FilamentRecord"))]
pub struct Filament {
    points: Vec<Vec3>,
    gamma: f64,
    id: i64,
}

/// Serialized form of a [`Filament`]; deserializing validates it.
#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FilamentRecord {
    id: i64,
    gamma: f64,
    points: Vec<Vec3>,
}

#[cfg(feature = "serde")]
impl TryFrom<FilamentRecord> for Filament {
    type Error = GeometryError;

    fn try_from(r: FilamentRecord) -> Result<Self, GeometryError> {
        Filament::new(r.points, r.gamma, r.id)
    }
}

#[cfg(feature = "serde")]
impl From<Filament> for FilamentRecord {
    fn from(f: Filament) -> Self {
        FilamentRecord { id: f.id, gamma: f.gamma, points: f.points }
    }
}

impl Filament {
    /// Validates node count, finiteness and that no segment (including the
    /// closing one) is shorter than 1e-12 of the bounding-box diagonal.
    pub fn new(points: Vec<Vec3>, gamma: f64, id: i64) -> Result<Self, GeometryError> {
        if points.len() < MIN_POINTS {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        let floor = 1e-12 * bbox_diagonal(&points);
        let n = points.len();
        for i in 0..n {
            let length = points[(i + 1) % n].distance(points[i]);
            if length <= floor {
                return Err(GeometryError::DegenerateSegment { index: i, length });
            }
        }
        Ok(Filament { points, gamma, id })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn id(&self) -> i64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_id(mut self, id: i64) -> Self {
        self.id = id;
        self
    }

    /// Node `i`, indices taken modulo the node count.
    #[inline]
    pub fn node(&self, i: usize) -> Vec3 {
        self.points[i % self.points.len()]
    }

    /// Segment `i` as (start, end); the last segment closes the loop.
    #[inline]
    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        (self.node(i), self.node(i + 1))
    }

    /// Midpoints and chord vectors of every segment.
    pub fn midpoints_and_chords(&self) -> (Vec<Vec3>, Vec<Vec3>) {
        let n = self.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.segment(i);
                ((a + b) * 0.5, b - a)
            })
            .unzip()
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            a.distance(b)
        }).collect()
    }

    /// Polygon (chord-sum) length.
    pub fn polygon_length(&self) -> f64 {
        ordered_sum(self.segment_lengths())
    }

    pub fn max_segment(&self) -> f64 {
        self.segment_lengths().into_iter().fold(0.0, f64::max)
    }

    pub fn mean_segment(&self) -> f64 {
        self.polygon_length() / self.len() as f64
    }

    /// (max - min) / mean of the chord lengths.
    pub fn segment_spread(&self) -> f64 {
        let l = self.segment_lengths();
        let max = l.iter().copied().fold(0.0, f64::max);
        let min = l.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / (ordered_sum(l.iter().copied()) / l.len() as f64)
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        bbox(&self.points)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.points)
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.len() as f64;
        self.points.iter().fold(Vec3::ZERO, |acc, p| acc + *p) / n
    }

    /// Same curve traversed in the opposite direction (node 0 kept first).
    pub fn reversed(&self) -> Filament {
        let mut pts = Vec::with_capacity(self.len());
        pts.push(self.points[0]);
        pts.extend(self.points[1..].iter().rev().copied());
        Filament { points: pts, ..self.clone() }
    }

    /// Apply a point map to every node. The caller guarantees the map keeps
    /// nodes distinct (rigid motions, reflections, scalings).
    pub fn map_points<F: Fn(Vec3) -> Vec3>(&self, f: F) -> Filament {
        Filament { points: self.points.iter().map(|p| f(*p)).collect(), ..self.clone() }
    }

    pub fn translated(&self, c: Vec3) -> Filament {
        self.map_points(|p| p + c)
    }

    pub fn rotated(&self, r: &Mat3) -> Filament {
        self.map_points(|p| r.apply(p))
    }

    /// Mirror image through the plane z = 0.
    pub fn mirrored(&self) -> Filament {
        self.map_points(|p| Vec3::new(p.x, p.y, -p.z))
    }

    /// Minimum segment-to-segment distance to another filament.
    pub fn min_distance(&self, other: &Filament) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            let (a0, a1) = self.segment(i);
            for j in 0..other.len() {
                let (b0, b1) = other.segment(j);
                best = best.min(segment_distance_sq(a0, a1, b0, b1));
            }
        }
        sqrt(best)
    }

    /// Minimum distance between segments of this curve that are separated by
    /// more than `local` in polygon arclength (measured the short way round).
    pub fn min_nonlocal_distance(&self, local: f64) -> f64 {
        let n = self.len();
        let lens = self.segment_lengths();
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + lens[i];
        }
        let total = cum[n];
        let mut best = f64::INFINITY;
        for i in 0..n {
            let (a0, a1) = self.segment(i);
            for j in (i + 1)..n {
                let d = cum[j] - cum[i + 1];
                let sep = d.min(total - (cum[j + 1] - cum[i]));
                if sep <= local {
                    continue;
                }
                let (b0, b1) = self.segment(j);
                best = best.min(segment_distance_sq(a0, a1, b0, b1));
            }
        }
        sqrt(best)
    }

    /// Periodic cubic spline through the nodes, parameterised by cumulative
    /// chord length.
    pub fn spline(&self) -> PeriodicSpline {
        PeriodicSpline::through(&self.points)
    }

    /// Length of the interpolating spline.
    pub fn length(&self) -> f64 {
        self.spline().length()
    }
}

fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    (lo, hi)
}

fn bbox_diagonal(points: &[Vec3]) -> f64 {
    let (lo, hi) = bbox(points);
    (hi - lo).norm()
}

/// Periodic cubic spline in 3D with knots at cumulative chord length.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    values: Vec<Vec3>,
    second: Vec<Vec3>,
    // cumulative arclength at each knot, with the total as the last entry
    arc: Vec<f64>,
}

impl PeriodicSpline {
    pub fn through(points: &[Vec3]) -> Self {
        let n = points.len();
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for i in 0..n {
            let l = points[(i + 1) % n].distance(points[i]);
            knots.push(knots[i] + l);
        }
        let h: Vec<f64> = (0..n).map(|i| knots[i + 1] - knots[i]).collect();
        // Cyclic tridiagonal system for the knot second derivatives.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![Vec3::ZERO; n];
        for i in 0..n {
            let hp = h[(i + n - 1) % n];
            let hi = h[i];
            sub[i] = hp;
            diag[i] = 2.0 * (hp + hi);
            sup[i] = hi;
            let dn = (points[(i + 1) % n] - points[i]) / hi;
            let dp = (points[i] - points[(i + n - 1) % n]) / hp;
            rhs[i] = (dn - dp) * 6.0;
        }
        let second = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        let mut s = PeriodicSpline { knots, values: points.to_vec(), second, arc: Vec::new() };
        let mut arc = Vec::with_capacity(n + 1);
        arc.push(0.0);
        for i in 0..n {
            let seg = s.interval_arclength(i, s.knots[i + 1]);
            arc.push(arc[i] + seg);
        }
        s.arc = arc;
        s
    }

    pub fn period(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    /// Cumulative spline arclength at each node (first entry 0).
    pub fn node_arclengths(&self) -> &[f64] {
        &self.arc[..self.values.len()]
    }

    fn interval_of(&self, t: f64) -> (usize, f64) {
        let p = self.period();
        let t = t - p * crate::math::floor(t / p);
        let n = self.values.len();
        let k = match self.knots.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(k) => k.min(n - 1),
            Err(k) => (k - 1).min(n - 1),
        };
        (k, t)
    }

    fn eval_in(&self, k: usize, t: f64) -> (Vec3, Vec3) {
        let n = self.values.len();
        let (t0, t1) = (self.knots[k], self.knots[k + 1]);
        let h = t1 - t0;
        let (y0, y1) = (self.values[k], self.values[(k + 1) % n]);
        let (m0, m1) = (self.second[k], self.second[(k + 1) % n]);
        let a = t1 - t;
        let b = t - t0;
        let pos = m0 * (a * a * a / (6.0 * h))
            + m1 * (b * b * b / (6.0 * h))
            + (y0 / h - m0 * (h / 6.0)) * a
            + (y1 / h - m1 * (h / 6.0)) * b;
        let der = m0 * (-a * a / (2.0 * h)) + m1 * (b * b / (2.0 * h)) - (y0 / h - m0 * (h / 6.0))
            + (y1 / h - m1 * (h / 6.0));
        (pos, der)
    }

    /// Position at parameter `t` (periodic).
    pub fn eval(&self, t: f64) -> Vec3 {
        let (k, t) = self.interval_of(t);
        self.eval_in(k, t).0
    }

    /// Position and derivative with respect to the parameter.
    pub fn eval_with_derivative(&self, t: f64) -> (Vec3, Vec3) {
        let (k, t) = self.interval_of(t);
        self.eval_in(k, t)
    }

    /// Midpoint-rule nodes on the smooth interpolant: for each interval, the
    /// point halfway along it in arclength and the unit tangent there scaled
    /// by the interval's arclength.
    pub fn midpoint_nodes(&self) -> (Vec<Vec3>, Vec<Vec3>) {
        let n = self.values.len();
        (0..n)
            .map(|k| {
                let t = self.param_at_arclength(0.5 * (self.arc[k] + self.arc[k + 1]));
                let (p, d) = self.eval_with_derivative(t);
                (p, d.normalize() * (self.arc[k + 1] - self.arc[k]))
            })
            .unzip()
    }

    fn interval_arclength(&self, k: usize, upto: f64) -> f64 {
        let t0 = self.knots[k];
        let mid = 0.5 * (t0 + upto);
        let f = |t: f64| self.eval_in(k, t).1.norm();
        gauss_legendre5(f, t0, mid) + gauss_legendre5(f, mid, upto)
    }

    /// Parameter at which the spline arclength from node 0 equals `s`.
    pub fn param_at_arclength(&self, s: f64) -> f64 {
        let total = self.length();
        let s = s - total * crate::math::floor(s / total);
        let n = self.values.len();
        let k = match self.arc.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(k) => k.min(n - 1),
            Err(k) => (k - 1).min(n - 1),
        };
        let (t0, t1) = (self.knots[k], self.knots[k + 1]);
        let target = s - self.arc[k];
        let seg = self.arc[k + 1] - self.arc[k];
        let mut t = t0 + (t1 - t0) * (target / seg);
        for _ in 0..8 {
            let g = self.interval_arclength(k, t) - target;
            let speed = self.eval_in(k, t).1.norm();
            let dt = g / speed;
            t = (t - dt).clamp(t0, t1);
            if dt.abs() < 1e-15 * (t1 - t0).max(1.0) {
                break;
            }
        }
        t
    }
}

fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Vec3]) -> Vec<Vec3> {
    // Sherman-Morrison on the cyclic corners.
    let n = diag.len();
    let gamma = -diag[0];
    let alpha = sup[n - 1]; // A[n-1][0]
    let beta = sub[0]; // A[0][n-1]
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let solve = |r: &[Vec3]| -> Vec<Vec3> {
        let mut c = vec![0.0; n];
        let mut x = r.to_vec();
        c[0] = sup[0] / d[0];
        x[0] = x[0] / d[0];
        for i in 1..n {
            let m = d[i] - sub[i] * c[i - 1];
            c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
            x[i] = (x[i] - x[i - 1] * sub[i]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - x[i + 1] * c[i];
        }
        x
    };
    let y = solve(rhs);
    let mut u = vec![Vec3::ZERO; n];
    u[0] = Vec3::new(gamma, gamma, gamma);
    u[n - 1] = Vec3::new(alpha, alpha, alpha);
    let z = solve(&u);
    // v = (1, 0, ..., 0, beta/gamma)
    let mut out = Vec::with_capacity(n);
    let fac = |k: usize| {
        let num = y[0][k] + beta / gamma * y[n - 1][k];
        let den = 1.0 + z[0][k] + beta / gamma * z[n - 1][k];
        num / den
    };
    let f = Vec3::new(fac(0), fac(1), fac(2));
    for i in 0..n {
        out.push(Vec3::new(y[i].x - f.x * z[i].x, y[i].y - f.y * z[i].y, y[i].z - f.z * z[i].z));
    }
    out
}

/// Resample to `n` nodes equally spaced in arclength along a periodic cubic
/// interpolant. The start node is kept.
///
/// The output is a fixed point: the spline through the returned nodes has
/// equal arclength between consecutive nodes, so resampling the output again
/// at the same `n` returns it unchanged.
pub fn resample_arclength(f: &Filament, n: usize) -> Result<Filament, GeometryError> {
    if n < MIN_POINTS {
        return Err(GeometryError::TooFewPoints(n));
    }
    let spline = f.spline();
    let total = spline.length();
    if !(total > 0.0) || !total.is_finite() {
        return Err(GeometryError::ZeroLength);
    }
    let mut steps = vec![total / n as f64; n];
    let mut pts: Vec<Vec3> = Vec::new();
    for _ in 0..30 {
        let mut s = 0.0;
        pts = (0..n)
            .map(|k| {
                let p = spline.eval(spline.param_at_arclength(s));
                s += steps[k];
                p
            })
            .collect();
        let own = PeriodicSpline::through(&pts);
        let lens: Vec<f64> = (0..n).map(|k| own.arc[k + 1] - own.arc[k]).collect();
        let mean = own.length() / n as f64;
        let spread = lens.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max) / mean;
        if spread < 1e-13 {
            break;
        }
        for k in 0..n {
            steps[k] *= mean / lens[k];
        }
        let sum = ordered_sum(steps.iter().copied());
        for s in steps.iter_mut() {
            *s *= total / sum;
        }
    }
    Filament::new(pts, f.gamma, f.id)
}

/// Per-node Frenet frame, curvature, torsion and arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct FrenetData {
    pub t: Vec<Vec3>,
    pub n: Vec<Vec3>,
    pub b: Vec<Vec3>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Total spline arclength of the closed curve.
    pub length: f64,
    /// Nodes whose curvature fell below the floor; their normal was carried
    /// by parallel transport and their torsion set to zero.
    pub degenerate: Vec<bool>,
}

impl FrenetData {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn has_degenerate(&self) -> bool {
        self.degenerate.iter().any(|d| *d)
    }

    /// Arclength weight of each node for periodic trapezoidal sums.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let next = if k + 1 < n { self.sigma[k + 1] } else { self.length };
                let prev = if k > 0 { self.sigma[k - 1] } else { self.sigma[n - 1] - self.length };
                0.5 * (next - prev)
            })
            .collect()
    }

    /// Total torsion normalised by 2π.
    pub fn total_torsion(&self) -> f64 {
        let w = self.weights();
        ordered_sum(self.tau.iter().zip(&w).map(|(t, w)| t * w)) / TAU
    }

    /// Total curvature ∮κ dσ.
    pub fn total_curvature(&self) -> f64 {
        let w = self.weights();
        ordered_sum(self.kappa.iter().zip(&w).map(|(k, w)| k * w))
    }

    pub fn max_curvature(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }
}

/// Tangent, normal, binormal, curvature and torsion from the first three
/// derivatives of any regular parameterisation.
pub fn frame_from_derivatives(d1: Vec3, d2: Vec3, d3: Vec3) -> (Vec3, Vec3, Vec3, f64, f64) {
    let speed = d1.norm();
    let t = d1 / speed;
    let c = d1.cross(d2);
    let cn = c.norm();
    let kappa = cn / (speed * speed * speed);
    let b0 = c / cn;
    let n = b0.cross(t).normalize();
    let b = t.cross(n);
    let tau = c.dot(d3) / (cn * cn);
    (t, n, b, kappa, tau)
}

/// Frenet data of a closed filament.
///
/// Derivatives are taken with respect to node index (spectrally for
/// power-of-two node counts); the frame quantities are parameterisation
/// invariant, so any smooth node distribution works, although uniform
/// arclength nodes give the best accuracy.
pub fn frenet(f: &Filament) -> FrenetData {
    let n = f.len();
    let spline = f.spline();
    let length = spline.length();
    let sigma = spline.node_arclengths().to_vec();
    let comp = |c: usize| f.points().iter().map(|p| p[c]).collect::<Vec<_>>();
    let [dx1, dx2, dx3] = periodic_derivatives(&comp(0), n as f64);
    let [dy1, dy2, dy3] = periodic_derivatives(&comp(1), n as f64);
    let [dz1, dz2, dz3] = periodic_derivatives(&comp(2), n as f64);
    let kappa_floor = 1e-8 / length;

    let mut t = Vec::with_capacity(n);
    let mut nn = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    let mut degenerate = Vec::with_capacity(n);
    for k in 0..n {
        let d1 = Vec3::new(dx1[k], dy1[k], dz1[k]);
        let d2 = Vec3::new(dx2[k], dy2[k], dz2[k]);
        let d3 = Vec3::new(dx3[k], dy3[k], dz3[k]);
        let speed = d1.norm();
        let kap = d1.cross(d2).norm() / (speed * speed * speed);
        if kap < kappa_floor || !kap.is_finite() {
            t.push(d1 / speed);
            nn.push(Vec3::ZERO);
            kappa.push(if kap.is_finite() { kap } else { 0.0 });
            tau.push(0.0);
            degenerate.push(true);
        } else {
            let (tk, nk, _, kk, tk_tau) = frame_from_derivatives(d1, d2, d3);
            t.push(tk);
            nn.push(nk);
            kappa.push(kk);
            tau.push(tk_tau);
            degenerate.push(false);
        }
    }
    if degenerate.iter().any(|d| *d) {
        patch_by_transport(f, &t, &mut nn, &degenerate);
    }
    let b = t.iter().zip(&nn).map(|(t, n)| t.cross(*n)).collect();
    FrenetData { t, n: nn, b, kappa, tau, sigma, length, degenerate }
}

/// Double-reflection transport of `normal` at node `i` to node `i + 1`.
pub fn transport_step(p0: Vec3, p1: Vec3, t0: Vec3, t1: Vec3, normal: Vec3) -> Vec3 {
    let v1 = p1 - p0;
    let c1 = v1.norm_sq();
    let n_l = normal - v1 * (2.0 / c1 * v1.dot(normal));
    let t_l = t0 - v1 * (2.0 / c1 * v1.dot(t0));
    let v2 = t1 - t_l;
    let c2 = v2.norm_sq();
    let out = if c2 > 0.0 { n_l - v2 * (2.0 / c2 * v2.dot(n_l)) } else { n_l };
    // re-orthogonalise against drift
    (out - t1 * out.dot(t1)).normalize()
}

fn patch_by_transport(f: &Filament, t: &[Vec3], nn: &mut [Vec3], degenerate: &[bool]) {
    let n = t.len();
    let start = match degenerate.iter().position(|d| !*d) {
        Some(s) => s,
        None => {
            // No usable Frenet normal anywhere: seed with an arbitrary one.
            nn[0] = t[0].any_orthogonal();
            0
        }
    };
    for step in 1..n {
        let k = (start + step) % n;
        if degenerate[k] {
            let prev = (k + n - 1) % n;
            nn[k] = transport_step(f.node(prev), f.node(k), t[prev], t[k], nn[prev]);
        }
    }
}

/// Torus-knot generator parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TorusKnotParams {
    pub p: u32,
    pub q: u32,
    pub r0: f64,
    pub a: f64,
    pub n_points: usize,
}

impl TorusKnotParams {
    /// The trefoil with p = 2, q = 3, r0 = 28, a = 5.
    pub fn trefoil(n_points: usize) -> Self {
        TorusKnotParams { p: 2, q: 3, r0: 28.0, a: 5.0, n_points }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.p < 1 || self.q < 1 {
            return Err(GeometryError::InvalidTorusKnot("p and q must be at least 1"));
        }
        if self.p > self.q {
            return Err(GeometryError::InvalidTorusKnot("p/q > 1 makes the z amplitude imaginary"));
        }
        if !(self.r0 > 0.0) {
            return Err(GeometryError::InvalidTorusKnot("r0 must be positive"));
        }
        if !(self.a.abs() < self.r0) {
            return Err(GeometryError::InvalidTorusKnot("|a| must be below r0"));
        }
        if self.n_points < MIN_POINTS {
            return Err(GeometryError::TooFewPoints(self.n_points));
        }
        Ok(())
    }
}

/// Torus knot sampled at θ = 2πk/n:
/// x = r cos α, y = r sin α, z = √(1 − (p/q)²) cos qθ,
/// r = r0 + a sin qθ, α = pθ + (p/q)(a/r0) cos qθ.
pub fn make_torus_knot(params: &TorusKnotParams) -> Result<Filament, GeometryError> {
    params.validate()?;
    let TorusKnotParams { p, q, r0, a, n_points } = *params;
    let (p, q) = (p as f64, q as f64);
    let ratio = p / q;
    let zamp = sqrt(1.0 - ratio * ratio);
    let pts = (0..n_points)
        .map(|k| {
            let th = TAU * k as f64 / n_points as f64;
            let r = r0 + a * sin(q * th);
            let al = p * th + ratio * (a / r0) * cos(q * th);
            Vec3::new(r * cos(al), r * sin(al), zamp * cos(q * th))
        })
        .collect();
    Filament::new(pts, 1.0, 0)
}

/// Planar circle, counterclockwise about `normal`.
pub fn make_circle(center: Vec3, radius: f64, normal: Vec3, n_points: usize) -> Result<Filament, GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::NonPositiveRadius(radius));
    }
    let axis = normal.try_normalize().ok_or(GeometryError::ZeroNormal)?;
    let u = axis.any_orthogonal();
    let w = axis.cross(u);
    let pts = (0..n_points)
        .map(|k| {
            let th = TAU * k as f64 / n_points as f64;
            center + (u * cos(th) + w * sin(th)) * radius
        })
        .collect();
    Filament::new(pts, 1.0, 0)
}

/// The linked ring pair: ring 1 of radius `r` in the plane z = 0 centred at
/// (−r/2, 0.48 r, 0) and ring 2 in the plane y = 0 centred at (r/2, 0, 0).
/// With `r = 40.5` the centres are (−20.25, 19.5, 0) and (20.25, 0, 0).
pub fn hopf_rings(r: f64, n_points: usize) -> Result<[Filament; 2], GeometryError> {
    let s = r / 40.5;
    let ring1 = make_circle(Vec3::new(-20.25 * s, 19.5 * s, 0.0), r, Vec3::Z, n_points)?.with_id(0);
    // x = r cos θ + 20.25, z = r sin θ: counterclockwise about −y.
    let ring2 = make_circle(Vec3::new(20.25 * s, 0.0, 0.0), r, -Vec3::Y, n_points)?.with_id(1);
    Ok([ring1, ring2])
}

/// Rotation-minimising frame along a closed curve with the holonomy spread
/// uniformly in arclength so the frame closes.
pub fn closed_parallel_frame(f: &Filament, frame: &FrenetData) -> Vec<Vec3> {
    let n = f.len();
    let mut u = Vec::with_capacity(n + 1);
    u.push(frame.t[0].any_orthogonal());
    for k in 0..n {
        let next = (k + 1) % n;
        let v = transport_step(f.node(k), f.node(next), frame.t[k], frame.t[next], u[k]);
        u.push(v);
    }
    let end = u[n];
    let start = u[0];
    let holonomy = crate::math::atan2(start.cross(end).dot(frame.t[0]), start.dot(end));
    (0..n)
        .map(|k| {
            let ang = -holonomy * frame.sigma[k] / frame.length;
            u[k].rotate_about(frame.t[k], ang)
        })
        .collect()
}

/// A centre filament plus `n_satellites` copies displaced by `offset` in
/// the normal plane at angles 2πm/n_satellites, the displacement carried
/// along by the closed parallel-transport frame.
pub fn make_bundle(center: &Filament, n_satellites: usize, offset: f64) -> Result<Vec<Filament>, GeometryError> {
    let frame = frenet(center);
    let min_radius = 1.0 / frame.max_curvature();
    if !(offset < min_radius) {
        return Err(GeometryError::OffsetTooLarge { offset, min_radius });
    }
    let u = closed_parallel_frame(center, &frame);
    let mut out = Vec::with_capacity(n_satellites + 1);
    out.push(center.clone());
    for m in 0..n_satellites {
        let phi = TAU * m as f64 / n_satellites as f64;
        let (c, s) = (cos(phi), sin(phi));
        let pts = (0..center.len())
            .map(|k| {
                let w = frame.t[k].cross(u[k]);
                center.node(k) + (u[k] * c + w * s) * offset
            })
            .collect();
        out.push(Filament::new(pts, center.gamma(), center.id() + 1 + m as i64)?);
    }
    Ok(out)
}
