//! Linking number, writhe, twist and self-linking of closed filaments, plus
//! the local integrals that explain where the twist term comes from.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{frenet, Filament, FrenetData, GeometryError};
use crate::math::{asin, cos, ordered_sum, round, sin, sqrt, Vec3, PI, TAU};
use crate::par::map_indexed;
use crate::quadrature::integrate_adaptive;
use crate::spectral::periodic_derivatives;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("curves are {distance:.3e} apart, need more than {required:.3e} for midpoint quadrature")]
    TooClose { distance: f64, required: f64 },
    #[error("framing has {got} angles for {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("framing angle jumps by {jump:.3} rad at node {index}")]
    Discontinuous { index: usize, jump: f64 },
    #[error("push-off radius {epsilon} exceeds the limit {limit}")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
    #[error("push-off curve comes within {distance:.3e} of {what}")]
    PushOffIntersects { what: &'static str, distance: f64 },
    #[error("frame normal at node {0} is not a unit vector")]
    DegenerateFrame(usize),
    #[error("{what} = {value} is not within {tol} of an integer")]
    NotInteger { what: &'static str, value: f64, tol: f64 },
    #[error("{filaments} filaments but {framings} framings")]
    FramingCount { filaments: usize, framings: usize },
    #[error("invalid probe: {0}")]
    InvalidProbe(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Numerical tolerances used when rounding topological quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerances {
    /// Allowed distance from an integer before rounding is refused.
    pub integer: f64,
    /// Minimum curve separation for the midpoint Gauss integral, in units of
    /// the longest segment.
    pub proximity_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { integer: 5e-3, proximity_factor: 3.0 }
    }
}

/// Raw Gauss integral and its nearest integer.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkingNumber {
    pub raw: f64,
    pub rounded: i64,
}

impl LinkingNumber {
    fn from_raw(raw: f64) -> Self {
        LinkingNumber { raw, rounded: round(raw) as i64 }
    }

    pub fn residual(&self) -> f64 {
        (self.raw - self.rounded as f64).abs()
    }
}

fn gauss_pair(mi: Vec3, di: Vec3, mj: Vec3, dj: Vec3) -> f64 {
    let r = mi - mj;
    let d2 = r.norm_sq();
    r.dot(di.cross(dj)) / (d2 * sqrt(d2))
}

/// Gauss linking integral by segment-midpoint quadrature on both curves.
///
/// The quadrature nodes sit at the arclength midpoints of each curve's
/// periodic cubic interpolant, with the interpolant's tangent as direction;
/// this removes the O(h²κ) offset of chord midpoints.
///
/// Circulations are not applied. Fails if the curves come closer than
/// `tol.proximity_factor` times the longest segment of either.
pub fn linking_number_with(fi: &Filament, fj: &Filament, tol: &Tolerances) -> Result<LinkingNumber, TopologyError> {
    let distance = fi.min_distance(fj);
    let required = tol.proximity_factor * fi.max_segment().max(fj.max_segment());
    if !(distance > required) {
        return Err(TopologyError::TooClose { distance, required });
    }
    let (mi, di) = fi.spline().midpoint_nodes();
    let (mj, dj) = fj.spline().midpoint_nodes();
    let rows = map_indexed(mi.len(), |a| {
        ordered_sum((0..mj.len()).map(|b| gauss_pair(mi[a], di[a], mj[b], dj[b])))
    });
    Ok(LinkingNumber::from_raw(ordered_sum(rows) / (4.0 * PI)))
}

/// [`linking_number_with`] under default tolerances.
pub fn linking_number(fi: &Filament, fj: &Filament) -> Result<LinkingNumber, TopologyError> {
    linking_number_with(fi, fj, &Tolerances::default())
}

/// Signed solid angle subtended by segment (p1, p2) as seen sweeping
/// segment (p3, p4); zero for coplanar pairs.
fn segment_pair_solid_angle(p1: Vec3, p2: Vec3, p3: Vec3, p4: Vec3) -> f64 {
    let r13 = p3 - p1;
    let r14 = p4 - p1;
    let r23 = p3 - p2;
    let r24 = p4 - p2;
    let sign = (p4 - p3).cross(p2 - p1).dot(r13);
    if sign == 0.0 {
        return 0.0;
    }
    let normals = [r13.cross(r14), r14.cross(r24), r24.cross(r23), r23.cross(r13)];
    let mut unit = [Vec3::ZERO; 4];
    for (u, n) in unit.iter_mut().zip(normals) {
        match n.try_normalize() {
            Some(v) => *u = v,
            None => return 0.0,
        }
    }
    let a = |x: Vec3, y: Vec3| asin(x.dot(y).clamp(-1.0, 1.0));
    let omega = a(unit[0], unit[1]) + a(unit[1], unit[2]) + a(unit[2], unit[3]) + a(unit[3], unit[0]);
    if sign > 0.0 {
        omega
    } else {
        -omega
    }
}

/// Linking number of two closed polygons, exact up to rounding, from the
/// solid angles of all segment pairs. Valid at any separation as long as the
/// polygons do not intersect.
pub fn linking_number_polygon(fi: &Filament, fj: &Filament) -> LinkingNumber {
    let rows = map_indexed(fi.len(), |a| {
        let (p1, p2) = fi.segment(a);
        ordered_sum((0..fj.len()).map(|b| {
            let (p3, p4) = fj.segment(b);
            segment_pair_solid_angle(p1, p2, p3, p4)
        }))
    });
    LinkingNumber::from_raw(ordered_sum(rows) / (4.0 * PI))
}

/// Writhe by midpoint quadrature over all ordered segment pairs, skipping
/// identical and adjacent pairs. Nodes are placed on the interpolant as in
/// [`linking_number_with`].
pub fn writhe(f: &Filament) -> f64 {
    let n = f.len();
    let (m, d) = f.spline().midpoint_nodes();
    let rows = map_indexed(n, |i| {
        ordered_sum((0..n).filter_map(|j| {
            let gap = if i > j { i - j } else { j - i };
            if gap <= 1 || gap == n - 1 {
                None
            } else {
                Some(gauss_pair(m[i], d[i], m[j], d[j]))
            }
        }))
    });
    ordered_sum(rows) / (4.0 * PI)
}

/// Ribbon angle Θ(σ) about a filament, measured from the Frenet normal
/// toward the binormal, and the push-off radius ε.
#[derive(Clone, Debug, PartialEq)]
pub struct Framing {
    theta: Vec<f64>,
    epsilon: f64,
    winding: i64,
    filament: Filament,
    frame: FrenetData,
}

impl Framing {
    /// Validates continuity (|ΔΘ| < π between neighbours, including the
    /// closing step) and the push-off radius. The winding number 𝒩 is the
    /// integer that makes the closing step continuous.
    pub fn from_angles(
        filament: &Filament,
        frame: FrenetData,
        theta: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, TopologyError> {
        let n = filament.len();
        if theta.len() != n || frame.len() != n {
            return Err(TopologyError::LengthMismatch { expected: n, got: theta.len().min(frame.len()) });
        }
        for k in 0..n - 1 {
            let jump = theta[k + 1] - theta[k];
            if !(jump.abs() < PI) {
                return Err(TopologyError::Discontinuous { index: k, jump });
            }
        }
        let winding = round((theta[n - 1] - theta[0]) / TAU);
        let closing = theta[0] + TAU * winding - theta[n - 1];
        if !(closing.abs() < PI) {
            return Err(TopologyError::Discontinuous { index: n - 1, jump: closing });
        }
        let limit = 0.5 / frame.max_curvature();
        if !(epsilon > 0.0 && epsilon < limit) {
            return Err(TopologyError::EpsilonTooLarge { epsilon, limit });
        }
        Ok(Framing { theta, epsilon, winding: winding as i64, filament: filament.clone(), frame })
    }

    /// Θ ≡ 0: the ribbon follows the Frenet normal.
    pub fn frenet(filament: &Filament, epsilon: f64) -> Result<Self, TopologyError> {
        let frame = frenet(filament);
        let theta = vec![0.0; filament.len()];
        Self::from_angles(filament, frame, theta, epsilon)
    }

    /// Θ = 2πkσ/L: uniform rotation with `k` full turns.
    pub fn winding(filament: &Filament, k: i64, epsilon: f64) -> Result<Self, TopologyError> {
        let frame = frenet(filament);
        let theta = frame.sigma.iter().map(|s| TAU * k as f64 * s / frame.length).collect();
        Self::from_angles(filament, frame, theta, epsilon)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of turns 𝒩 of the spanwise vector about the Frenet normal.
    pub fn winding_number(&self) -> i64 {
        self.winding
    }

    pub fn filament(&self) -> &Filament {
        &self.filament
    }

    pub fn frame(&self) -> &FrenetData {
        &self.frame
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, TopologyError> {
        Self::from_angles(&self.filament, self.frame.clone(), self.theta.clone(), epsilon)
    }

    /// Spanwise unit vectors N = n cos Θ + b sin Θ.
    pub fn spanwise(&self) -> Vec<Vec3> {
        (0..self.theta.len())
            .map(|k| self.frame.n[k] * cos(self.theta[k]) + self.frame.b[k] * sin(self.theta[k]))
            .collect()
    }

    /// dσ/dk at every node, from periodic differentiation of arclength.
    fn arclength_rate(&self) -> Vec<f64> {
        let n = self.theta.len();
        let step = self.frame.length / n as f64;
        let periodic: Vec<f64> = self.frame.sigma.iter().enumerate().map(|(k, s)| s - step * k as f64).collect();
        let [d, _, _] = periodic_derivatives(&periodic, n as f64);
        d.into_iter().map(|x| x + step).collect()
    }

    /// Θ′ = dΘ/dσ at every node.
    pub fn theta_prime(&self) -> Vec<f64> {
        let n = self.theta.len();
        let rate = TAU * self.winding as f64 / self.frame.length;
        let periodic: Vec<f64> = self.theta.iter().zip(&self.frame.sigma).map(|(t, s)| t - rate * s).collect();
        let [d, _, _] = periodic_derivatives(&periodic, n as f64);
        d.iter().zip(self.arclength_rate()).map(|(d, r)| d / r + rate).collect()
    }

    fn check_frame(&self) -> Result<(), TopologyError> {
        for (k, n) in self.frame.n.iter().enumerate() {
            if !((n.norm() - 1.0).abs() < 1e-6) {
                return Err(TopologyError::DegenerateFrame(k));
            }
        }
        Ok(())
    }
}

/// Tw = (1/2π)∮(τ + Θ′)dσ.
pub fn twist(framing: &Framing) -> Result<f64, TopologyError> {
    framing.check_frame()?;
    let w = framing.frame.weights();
    let tp = framing.theta_prime();
    Ok(ordered_sum((0..w.len()).map(|k| (framing.frame.tau[k] + tp[k]) * w[k])) / TAU)
}

/// Tw = (1/2π)∮(N × N′)·t dσ, evaluated from the spanwise vectors alone.
pub fn twist_spanwise(framing: &Framing) -> Result<f64, TopologyError> {
    framing.check_frame()?;
    let n = framing.theta.len();
    let span = framing.spanwise();
    let comp = |c: usize| -> Vec<f64> {
        let v: Vec<f64> = span.iter().map(|s| s[c]).collect();
        let [d, _, _] = periodic_derivatives(&v, n as f64);
        d
    };
    let (dx, dy, dz) = (comp(0), comp(1), comp(2));
    let rate = framing.arclength_rate();
    let w = framing.frame.weights();
    Ok(ordered_sum((0..n).map(|k| {
        let dn = Vec3::new(dx[k], dy[k], dz[k]) / rate[k];
        span[k].cross(dn).dot(framing.frame.t[k]) * w[k]
    })) / TAU)
}

/// The push-off curve s* = s + εN.
pub fn push_off(framing: &Framing) -> Result<Filament, TopologyError> {
    let base = &framing.filament;
    let eps = framing.epsilon;
    let pts = base.points().iter().zip(framing.spanwise()).map(|(p, n)| *p + n * eps).collect();
    let star = Filament::new(pts, base.gamma(), base.id())?;
    let to_base = star.min_distance(base);
    if !(to_base > 0.5 * eps) {
        return Err(TopologyError::PushOffIntersects { what: "the base curve", distance: to_base });
    }
    let own = star.min_nonlocal_distance(3.0 * star.max_segment());
    if !(own > 0.05 * eps) {
        return Err(TopologyError::PushOffIntersects { what: "itself", distance: own });
    }
    Ok(star)
}

/// Linking number of the filament with its push-off.
pub fn self_linking_raw(framing: &Framing) -> Result<LinkingNumber, TopologyError> {
    let star = push_off(framing)?;
    Ok(linking_number_polygon(&framing.filament, &star))
}

/// SL = Lk(C, C*), as an integer.
pub fn self_linking(framing: &Framing) -> Result<i64, TopologyError> {
    Ok(self_linking_raw(framing)?.rounded)
}

/// 0.1 × the smallest of: the minimum radius of curvature, half the
/// filament's nonlocal self-distance, half its distance to any other filament.
pub fn default_epsilon(f: &Filament, frame: &FrenetData, others: &[&Filament]) -> f64 {
    let r_min = 1.0 / frame.max_curvature();
    let mut scale = r_min.min(0.5 * f.min_nonlocal_distance(2.0 * r_min));
    for o in others {
        scale = scale.min(0.5 * f.min_distance(o));
    }
    0.1 * scale
}

/// Per-filament and pairwise helicity components.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HelicityReport {
    pub lk: Vec<Vec<i64>>,
    pub lk_raw: Vec<Vec<f64>>,
    pub wr: Vec<f64>,
    pub tw: Vec<f64>,
    pub sl: Vec<i64>,
    pub total: f64,
    pub gammas: Vec<f64>,
    pub tolerances: Tolerances,
}

impl HelicityReport {
    /// Σᵢ Γᵢ² SLᵢ + Σ_{i≠j} ΓᵢΓⱼ Lkᵢⱼ with integer SL and Lk.
    pub fn integer_total(&self) -> f64 {
        let n = self.gammas.len();
        let g = &self.gammas;
        let mut parts = Vec::with_capacity(n * n);
        for i in 0..n {
            parts.push(g[i] * g[i] * self.sl[i] as f64);
            for j in 0..n {
                if i != j {
                    parts.push(g[i] * g[j] * self.lk[i][j] as f64);
                }
            }
        }
        ordered_sum(parts)
    }

    /// Σᵢ SLᵢ + Σ_{i≠j} Lkᵢⱼ, the signed residual of the linking/self-linking
    /// duality (circulations not applied).
    pub fn lk_plus_sl(&self) -> i64 {
        let n = self.sl.len();
        let mut s: i64 = self.sl.iter().sum();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.lk[i][j];
                }
            }
        }
        s
    }

    /// Fails if any linking number or Wr + Tw sits further than the integer
    /// tolerance from the integer it was rounded to.
    pub fn check_integrality(&self) -> Result<(), TopologyError> {
        let tol = self.tolerances.integer;
        for (i, row) in self.lk_raw.iter().enumerate() {
            for (j, raw) in row.iter().enumerate() {
                if i != j && (raw - self.lk[i][j] as f64).abs() > tol {
                    return Err(TopologyError::NotInteger { what: "linking number", value: *raw, tol });
                }
            }
        }
        for i in 0..self.wr.len() {
            let sum = self.wr[i] + self.tw[i];
            if (sum - self.sl[i] as f64).abs() > tol {
                return Err(TopologyError::NotInteger { what: "Wr + Tw", value: sum, tol });
            }
        }
        Ok(())
    }
}

/// H = Σᵢ Γᵢ²(Wrᵢ + Twᵢ) + Σ_{i≠j} ΓᵢΓⱼ Lkᵢⱼ.
///
/// Each framing must belong to the filament at the same index. Pairwise
/// linking uses midpoint quadrature (and so its proximity rule); SL uses the
/// exact polygon linking of each filament with its push-off.
pub fn assemble_helicity(
    filaments: &[Filament],
    framings: &[Framing],
    tol: &Tolerances,
) -> Result<HelicityReport, TopologyError> {
    let n = filaments.len();
    if framings.len() != n {
        return Err(TopologyError::FramingCount { filaments: n, framings: framings.len() });
    }
    let mut lk = vec![vec![0i64; n]; n];
    let mut lk_raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let l = linking_number_with(&filaments[i], &filaments[j], tol)?;
            lk[i][j] = l.rounded;
            lk[j][i] = l.rounded;
            lk_raw[i][j] = l.raw;
            lk_raw[j][i] = l.raw;
        }
    }
    let mut wr = Vec::with_capacity(n);
    let mut tw = Vec::with_capacity(n);
    let mut sl = Vec::with_capacity(n);
    for (i, fr) in framings.iter().enumerate() {
        for (j, other) in filaments.iter().enumerate() {
            if i != j {
                let limit = 0.5 * filaments[i].min_distance(other);
                if fr.epsilon >= limit {
                    return Err(TopologyError::EpsilonTooLarge { epsilon: fr.epsilon, limit });
                }
            }
        }
        wr.push(writhe(&filaments[i]));
        tw.push(twist(fr)?);
        sl.push(self_linking(fr)?);
    }
    let gammas: Vec<f64> = filaments.iter().map(|f| f.gamma()).collect();
    let mut parts = Vec::with_capacity(n * n);
    for i in 0..n {
        parts.push(gammas[i] * gammas[i] * (wr[i] + tw[i]));
        for j in 0..n {
            if i != j {
                parts.push(gammas[i] * gammas[j] * lk[i][j] as f64);
            }
        }
    }
    Ok(HelicityReport { lk, lk_raw, wr, tw, sl, total: ordered_sum(parts), gammas, tolerances: *tol })
}

/// Local data for the near-diagonal part of the push-off linking integral.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalugareanuProbe {
    pub tau0: f64,
    pub theta_prime: f64,
    pub kappa0: f64,
    pub theta0: f64,
    pub epsilon: f64,
    pub arc_halfwidth: f64,
}

impl CalugareanuProbe {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.epsilon > 0.0) {
            return Err(TopologyError::InvalidProbe("epsilon must be positive"));
        }
        if !(self.arc_halfwidth > self.epsilon) {
            return Err(TopologyError::InvalidProbe("arc half-width must exceed epsilon"));
        }
        if !(self.epsilon * self.kappa0.abs() < 1.0) {
            return Err(TopologyError::InvalidProbe("epsilon times curvature must be below 1"));
        }
        Ok(())
    }

    fn numerator(&self, h: f64, eps: f64) -> f64 {
        let (s, c) = (sin(self.theta0), cos(self.theta0));
        eps * eps * (self.tau0 + self.theta_prime) + eps * h * self.kappa0 * s
            - eps * eps * h * self.kappa0 * self.kappa0 * s * c
    }

    fn denominator(&self, h: f64, eps: f64) -> f64 {
        let q = h * h + eps * eps - eps * h * h * self.kappa0 * cos(self.theta0);
        q * sqrt(q)
    }

    /// The local integrand at arc offset `h` and push-off radius `eps`.
    pub fn integrand(&self, h: f64, eps: f64) -> f64 {
        let num = self.numerator(h, eps);
        if num == 0.0 {
            return 0.0;
        }
        num / self.denominator(h, eps)
    }
}

/// ∫_{−H}^{H} g(h) / (h² + ε² − εh²κ cos Θ)^{3/2} dh with
/// g(h) = ε²(τ + Θ′) + εhκ sin Θ − ε²hκ² sin Θ cos Θ.
///
/// Tends to 2(τ + Θ′) as ε → 0 at fixed H. Evaluated after the substitution
/// h = (ε/a) tan u, a² = 1 − εκ cos Θ, which removes the ε-scale peak.
pub fn calugareanu_local_integral(probe: &CalugareanuProbe) -> Result<f64, TopologyError> {
    probe.validate()?;
    let eps = probe.epsilon;
    let a = sqrt(1.0 - eps * probe.kappa0 * cos(probe.theta0));
    let umax = libm::atan(a * probe.arc_halfwidth / eps);
    let f = |u: f64| {
        let h = eps / a * libm::tan(u);
        let c = cos(u);
        probe.numerator(h, eps) * c / (eps * eps * a)
    };
    Ok(integrate_adaptive(f, -umax, umax, 1e-14).value)
}

/// ∫_{−T}^{T} ds / (1 + s²)^{3/2}, integrated numerically in s.
pub fn kernel_integral(t: f64) -> f64 {
    let f = |s: f64| {
        let q = 1.0 + s * s;
        1.0 / (q * sqrt(q))
    };
    split_symmetric(f, t, 1e-15)
}

/// (1/T²) ∫_{−T}^{T} s⁴ / (1 + s²)^{3/2} ds, integrated numerically in s.
pub fn quartic_tail(t: f64) -> f64 {
    let f = |s: f64| {
        let q = 1.0 + s * s;
        s * s * s * s / (q * sqrt(q))
    };
    split_symmetric(f, t, 1e-12 * t * t) / (t * t)
}

// Even integrand: twice the integral over [0, T], split into unit, decade
// panels so the adaptive rule sees comparable scales.
fn split_symmetric<F: Fn(f64) -> f64>(f: F, t: f64, tol: f64) -> f64 {
    let mut edges = vec![0.0];
    let mut e = 1.0;
    while e < t {
        edges.push(e);
        e *= 10.0;
    }
    edges.push(t);
    let panels = edges.len() - 1;
    let parts = (0..panels).map(|k| integrate_adaptive(&f, edges[k], edges[k + 1], tol / panels as f64).value);
    2.0 * ordered_sum(parts)
}

/// The two iterated limits of the local integrand at h → 0, ε → 0:
/// `(lim_h lim_ε F, lim_ε lim_h ε·F)`.
///
/// Taking ε → 0 first kills every term of the numerator, so the first value
/// is zero for any h; taking h → 0 first leaves ε²(τ + Θ′)/ε³, whose ε-scaled
/// limit is τ + Θ′. Each limit is evaluated along a geometric sequence and
/// the last member returned.
pub fn calugareanu_order_of_limits(probe: &CalugareanuProbe) -> (f64, f64) {
    let scales = [1e-2, 1e-4, 1e-6, 1e-8];
    let mut eps_first = f64::NAN;
    for &h in &scales {
        // inner limit ε → 0 at fixed h: the integrand is evaluated at ε = 0
        eps_first = probe.integrand(h, 0.0);
    }
    let mut h_first = f64::NAN;
    for &eps in &scales {
        h_first = eps * probe.integrand(0.0, eps);
    }
    (eps_first, h_first)
}
