//! Biot-Savart velocity of filament sets, the multivalued velocity
//! potential obtained by line integration, and the constant-phase framing.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{frenet, Filament, GeometryError};
use crate::grid::{GridSpec, VectorGrid};
use crate::math::{ceil, cos, floor, ordered_sum, point_segment_distance_sq, round, segment_distance_sq, sin, sqrt, Vec3, PI, TAU};
use crate::par::map_indexed;
use crate::quadrature::{gauss_legendre5, integrate_halving};
use crate::topology::{Framing, TopologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("point is {distance:.3e} from filament {filament}, inside the exclusion radius {required:.3e}")]
    TooClose { filament: i64, distance: f64, required: f64 },
    #[error("no continuous constant-phase branch at node {node}: {reason}")]
    NoBranch { node: usize, reason: &'static str },
    #[error("target index {index} out of range for {count} filaments")]
    BadTarget { index: usize, count: usize },
    #[error("push-off radius {epsilon} is not below half the distance {distance} to filament {filament}")]
    EpsilonTooLarge { epsilon: f64, distance: f64, filament: i64 },
    #[error("path needs at least two waypoints")]
    ShortPath,
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How the velocity of a filament is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Kernel {
    /// Segment-midpoint quadrature of the Biot-Savart integral.
    Midpoint,
    /// Exact field of the straight segments of the polygon.
    Segment,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldOptions {
    /// Points closer than this many (longest) segment lengths to a filament
    /// are rejected or masked.
    pub exclusion_factor: f64,
    /// Adaptive line-integration tolerance, relative to the largest |Γ|.
    pub phase_tol: f64,
    pub kernel: Kernel,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions { exclusion_factor: 2.0, phase_tol: 1e-6, kernel: Kernel::Midpoint }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VelocitySample {
    pub position: Vec3,
    pub v: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhasePath {
    pub waypoints: Vec<Vec3>,
    pub phi: Vec<f64>,
    pub reference_value: f64,
}

impl PhasePath {
    /// φ(end) − φ(start).
    pub fn increment(&self) -> f64 {
        self.phi[self.phi.len() - 1] - self.phi[0]
    }
}

/// Midpoint-rule velocity with no proximity check.
pub fn midpoint_velocity(filaments: &[Filament], r: Vec3) -> Vec3 {
    let mut acc = Vec3::ZERO;
    for f in filaments {
        let n = f.len();
        let mut part = Vec3::ZERO;
        for i in 0..n {
            let (a, b) = f.segment(i);
            let m = (a + b) * 0.5;
            let s = m - r;
            let d2 = s.norm_sq();
            part += s.cross(b - a) / (d2 * sqrt(d2));
        }
        acc += part * (f.gamma() / (4.0 * PI));
    }
    acc
}

/// Exact velocity of a straight vortex segment `a → b` of unit circulation,
/// zero on the segment's line.
pub fn segment_kernel(a: Vec3, b: Vec3, r: Vec3) -> Vec3 {
    let r1 = r - a;
    let r2 = r - b;
    let c = r1.cross(r2);
    let c2 = c.norm_sq();
    let (l1, l2) = (r1.norm(), r2.norm());
    if c2 <= 1e-300 || l1 == 0.0 || l2 == 0.0 {
        return Vec3::ZERO;
    }
    let r0 = b - a;
    c * (r0.dot(r1 / l1 - r2 / l2) / (4.0 * PI * c2))
}

/// Velocity of the polygonal filaments, summing exact segment fields.
pub fn segment_velocity(filaments: &[Filament], r: Vec3) -> Vec3 {
    let mut acc = Vec3::ZERO;
    for f in filaments {
        let mut part = Vec3::ZERO;
        for i in 0..f.len() {
            let (a, b) = f.segment(i);
            part += segment_kernel(a, b, r);
        }
        acc += part * f.gamma();
    }
    acc
}

fn exclusion_radius(f: &Filament, opts: &FieldOptions) -> f64 {
    opts.exclusion_factor * f.max_segment()
}

fn check_point(filaments: &[Filament], r: Vec3, opts: &FieldOptions) -> Result<(), FieldError> {
    for f in filaments {
        let required = exclusion_radius(f, opts);
        let d2 = f.points().iter().map(|p| (*p - r).norm_sq()).fold(f64::INFINITY, f64::min);
        if d2 <= required * required {
            return Err(FieldError::TooClose { filament: f.id(), distance: sqrt(d2), required });
        }
    }
    Ok(())
}

fn velocity_unchecked(filaments: &[Filament], r: Vec3, kernel: Kernel) -> Vec3 {
    match kernel {
        Kernel::Midpoint => midpoint_velocity(filaments, r),
        Kernel::Segment => segment_velocity(filaments, r),
    }
}

/// v(r) = Σᵢ (Γᵢ/4π)∮(sᵢ − r) × dsᵢ / |r − sᵢ|³.
pub fn velocity_with(filaments: &[Filament], r: Vec3, opts: &FieldOptions) -> Result<VelocitySample, FieldError> {
    check_point(filaments, r, opts)?;
    Ok(VelocitySample { position: r, v: velocity_unchecked(filaments, r, opts.kernel) })
}

/// Midpoint-quadrature Biot-Savart velocity under default options.
pub fn biot_savart_velocity(filaments: &[Filament], r: Vec3) -> Result<VelocitySample, FieldError> {
    velocity_with(filaments, r, &FieldOptions::default())
}

/// ∮ v·dl around a closed polyline by the midpoint rule.
pub fn circulation_with(filaments: &[Filament], loop_pts: &[Vec3], opts: &FieldOptions) -> Result<f64, FieldError> {
    let n = loop_pts.len();
    if n < 2 {
        return Err(FieldError::ShortPath);
    }
    let mut parts = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (loop_pts[i], loop_pts[(i + 1) % n]);
        let s = velocity_with(filaments, (a + b) * 0.5, opts)?;
        parts.push(s.v.dot(b - a));
    }
    Ok(ordered_sum(parts))
}

pub fn circulation(filaments: &[Filament], loop_pts: &[Vec3]) -> Result<f64, FieldError> {
    circulation_with(filaments, loop_pts, &FieldOptions::default())
}

fn check_leg(filaments: &[Filament], a: Vec3, b: Vec3, opts: &FieldOptions) -> Result<(), FieldError> {
    for f in filaments {
        let required = exclusion_radius(f, opts);
        let d2 = f
            .points()
            .iter()
            .map(|p| point_segment_distance_sq(*p, a, b))
            .fold(f64::INFINITY, f64::min);
        if d2 <= required * required {
            return Err(FieldError::TooClose { filament: f.id(), distance: sqrt(d2), required });
        }
        if opts.kernel == Kernel::Segment {
            // the exact kernel is singular only on the polygon itself
            for i in 0..f.len() {
                let (p, q) = f.segment(i);
                if segment_distance_sq(a, b, p, q) == 0.0 {
                    return Err(FieldError::TooClose { filament: f.id(), distance: 0.0, required });
                }
            }
        }
    }
    Ok(())
}

fn leg_integral(filaments: &[Filament], a: Vec3, b: Vec3, tol: f64, kernel: Kernel) -> f64 {
    let d = b - a;
    integrate_halving(|t| velocity_unchecked(filaments, a + d * t, kernel).dot(d), 0.0, 1.0, tol, 40)
}

/// Velocity potential along a polyline: φ(k) = φ0 + ∫ v·dl from waypoint 0
/// to waypoint k, each leg integrated by adaptive halving.
pub fn phase_along_path_with(
    filaments: &[Filament],
    waypoints: &[Vec3],
    phi0: f64,
    opts: &FieldOptions,
) -> Result<PhasePath, FieldError> {
    if waypoints.len() < 2 {
        return Err(FieldError::ShortPath);
    }
    let gmax = filaments.iter().map(|f| f.gamma().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = opts.phase_tol * gmax;
    let mut phi = Vec::with_capacity(waypoints.len());
    phi.push(phi0);
    for w in waypoints.windows(2) {
        check_leg(filaments, w[0], w[1], opts)?;
        let inc = leg_integral(filaments, w[0], w[1], tol, opts.kernel);
        phi.push(phi[phi.len() - 1] + inc);
    }
    Ok(PhasePath { waypoints: waypoints.to_vec(), phi, reference_value: phi0 })
}

pub fn phase_along_path(filaments: &[Filament], waypoints: &[Vec3], phi0: f64) -> Result<PhasePath, FieldError> {
    phase_along_path_with(filaments, waypoints, phi0, &FieldOptions::default())
}

/// Dense velocity on a grid; points inside the exclusion radius of any
/// filament are masked and left at zero.
pub fn velocity_field_on_grid(filaments: &[Filament], spec: &GridSpec, opts: &FieldOptions) -> VectorGrid {
    let samples = map_indexed(spec.len(), |idx| {
        let r = spec.position_of(idx);
        match check_point(filaments, r, opts) {
            Ok(()) => (velocity_unchecked(filaments, r, opts.kernel), true),
            Err(_) => (Vec3::ZERO, false),
        }
    });
    let (data, mask): (Vec<Vec3>, Vec<bool>) = samples.into_iter().unzip();
    let mask = if mask.iter().all(|m| *m) { None } else { Some(mask) };
    VectorGrid { spec: *spec, data, mask }
}

const SCAN: usize = 64;

struct Ring {
    center: Vec3,
    n: Vec3,
    b: Vec3,
    eps: f64,
}

impl Ring {
    fn point(&self, th: f64) -> Vec3 {
        self.center + (self.n * cos(th) + self.b * sin(th)) * self.eps
    }

    fn dpoint(&self, th: f64) -> Vec3 {
        (self.b * cos(th) - self.n * sin(th)) * self.eps
    }

    fn rate(&self, filaments: &[Filament], th: f64) -> f64 {
        segment_velocity(filaments, self.point(th)).dot(self.dpoint(th))
    }

    fn arc(&self, filaments: &[Filament], a: f64, b: f64) -> f64 {
        gauss_legendre5(|t| self.rate(filaments, t), a, b)
    }

    /// φ at the scan angles 2πm/SCAN relative to θ = 0, m = 0..=SCAN.
    fn table(&self, filaments: &[Filament]) -> Vec<f64> {
        let step = TAU / SCAN as f64;
        let mut out = Vec::with_capacity(SCAN + 1);
        out.push(0.0);
        for m in 0..SCAN {
            let inc = self.arc(filaments, step * m as f64, step * (m + 1) as f64);
            out.push(out[m] + inc);
        }
        out
    }

    /// Angles in [0, 2π) where base + φ(θ) − target is a multiple of Γ.
    fn roots(&self, filaments: &[Filament], table: &[f64], base: f64, target: f64, gamma: f64) -> Vec<f64> {
        let step = TAU / SCAN as f64;
        let g: Vec<f64> = table.iter().map(|v| (base + v - target) / gamma).collect();
        let mut out = Vec::new();
        for m in 0..SCAN {
            let (a, b) = (g[m], g[m + 1]);
            let mut crossings = Vec::new();
            if a <= b {
                let mut j = ceil(a);
                while j < b {
                    crossings.push(j);
                    j += 1.0;
                }
            } else {
                let mut j = floor(a);
                while j > b {
                    crossings.push(j);
                    j -= 1.0;
                }
            }
            let th0 = step * m as f64;
            for j in crossings {
                let mut th = th0 + step * (j - a) / (b - a);
                for _ in 0..3 {
                    let val = (base + table[m] + self.arc(filaments, th0, th) - target) / gamma - j;
                    let der = self.rate(filaments, th) / gamma;
                    if der == 0.0 {
                        break;
                    }
                    th = (th - val / der).clamp(th0 - step, th0 + 2.0 * step);
                }
                let th = th - TAU * floor(th / TAU);
                if !out.iter().any(|r: &f64| (r - th).abs() < 1e-9 || (r - th).abs() > TAU - 1e-9) {
                    out.push(th);
                }
            }
        }
        out
    }
}

/// Constant-phase (Seifert) framing of `filaments[target]`.
///
/// For every node the velocity potential is tabulated on the ε-circle in the
/// normal plane, referenced to the previous node through a short straight
/// path between their θ = 0 points. Θ is the root of φ = φ_ref (mod Γ)
/// nearest the previous node's angle. Any residual left at closure is spread
/// linearly in arclength once the winding has been rounded.
pub fn seifert_framing(
    filaments: &[Filament],
    target: usize,
    epsilon: f64,
    phi_ref: f64,
) -> Result<Framing, FieldError> {
    let f = filaments.get(target).ok_or(FieldError::BadTarget { index: target, count: filaments.len() })?;
    for (j, other) in filaments.iter().enumerate() {
        if j != target {
            let distance = f.min_distance(other);
            if !(epsilon < 0.5 * distance) {
                return Err(FieldError::EpsilonTooLarge { epsilon, distance, filament: other.id() });
            }
        }
    }
    let frame = frenet(f);
    let n = f.len();
    let gamma = f.gamma();
    let rings: Vec<Ring> =
        (0..n).map(|k| Ring { center: f.node(k), n: frame.n[k], b: frame.b[k], eps: epsilon }).collect();

    let mut tables = map_indexed(n, |k| rings[k].table(filaments));
    for (k, t) in tables.iter_mut().enumerate() {
        let miss = t[SCAN] - gamma;
        if !(miss.abs() < 0.05 * gamma.abs()) {
            return Err(FieldError::NoBranch { node: k, reason: "circulation on the epsilon-circle is not the filament's own" });
        }
        // The loop integral is exactly Γ for the polygon; remove the
        // quadrature residual so the table is periodic modulo Γ.
        for (m, v) in t.iter_mut().enumerate() {
            *v -= miss * m as f64 / SCAN as f64;
        }
    }
    // links[k]: from the θ = 0 point of node k to that of node k + 1
    let links = map_indexed(n, |k| {
        let (a, b) = (rings[k].point(0.0), rings[(k + 1) % n].point(0.0));
        let d = b - a;
        let mid = 0.5;
        gauss_legendre5(|t| segment_velocity(filaments, a + d * t).dot(d), 0.0, mid)
            + gauss_legendre5(|t| segment_velocity(filaments, a + d * t).dot(d), mid, 1.0)
    });
    let mut base = Vec::with_capacity(n + 1);
    base.push(0.0);
    for k in 0..n {
        base.push(base[k] + links[k]);
    }
    let roots = map_indexed(n + 1, |k| {
        let kk = k % n;
        rings[kk].roots(filaments, &tables[kk], base[k], phi_ref, gamma)
    });

    let nearest = |rs: &[f64], prev: f64| -> Option<f64> {
        rs.iter()
            .map(|r| r + TAU * round((prev - r) / TAU))
            .min_by(|a, b| (a - prev).abs().partial_cmp(&(b - prev).abs()).unwrap())
    };
    let mut theta = Vec::with_capacity(n + 1);
    theta.push(nearest(&roots[0], 0.0).ok_or(FieldError::NoBranch { node: 0, reason: "no root on the scan" })?);
    for k in 1..=n {
        let prev = theta[k - 1];
        let th = nearest(&roots[k], prev).ok_or(FieldError::NoBranch { node: k % n, reason: "no root on the scan" })?;
        if !((th - prev).abs() < 0.5 * PI) {
            return Err(FieldError::NoBranch { node: k % n, reason: "angle jumped by more than a quarter turn" });
        }
        theta.push(th);
    }
    let total = theta[n] - theta[0];
    let winding = round(total / TAU);
    let residual = total - TAU * winding;
    if !(residual.abs() < 0.1) {
        return Err(FieldError::NoBranch { node: 0, reason: "closure residual too large" });
    }
    theta.truncate(n);
    for (th, s) in theta.iter_mut().zip(&frame.sigma) {
        *th -= residual * s / frame.length;
    }
    Ok(Framing::from_angles(f, frame, theta, epsilon)?)
}

/// Uniform-density circle of `n` points around `center` in the plane
/// normal to `axis`, for circulation loops and phase paths.
pub fn loop_around(center: Vec3, axis: Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    let a = axis.normalize();
    let u = a.any_orthogonal();
    let w = a.cross(u);
    (0..n)
        .map(|k| {
            let th = TAU * k as f64 / n as f64;
            center + (u * cos(th) + w * sin(th)) * radius
        })
        .collect()
}
