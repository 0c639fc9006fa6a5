//! Phase imprinting of closed vortex lines.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use helicity_core::{resample_arclength, Filament, GridSpec, Vec3};

use super::{ComplexField3D, GpeError};

/// Node count of the polygons used for the periodic images.
const IMAGE_NODES: usize = 48;

/// Solid angle of a closed polygon seen from `x`, modulo 4π, as a fan of
/// triangles from `apex`. The sign makes ΓΩ/4π the velocity potential.
fn solid_angle(apex: Vec3, pts: &[Vec3], x: Vec3) -> f64 {
    let a = apex - x;
    let la = a.norm();
    let n = pts.len();
    let mut total = 0.0;
    let mut b = pts[n - 1] - x;
    let mut lb = b.norm();
    for p in pts {
        let d = *p - x;
        let ld = d.norm();
        let num = a.dot(b.cross(d));
        let den = la * lb * ld + a.dot(b) * ld + a.dot(d) * lb + b.dot(d) * la;
        total += 2.0 * num.atan2(den);
        b = d;
        lb = ld;
    }
    total
}

/// Pair-check of filament separation and containment in the box.
fn validate(spec: &GridSpec, filaments: &[Filament]) -> Result<(), GpeError> {
    let h = spec.spacing[0];
    let lo = spec.origin;
    let len = spec.box_lengths();
    for f in filaments {
        let (a, b) = f.bbox();
        for ax in 0..3 {
            if a[ax] < lo[ax] || b[ax] > lo[ax] + len[ax] - h {
                return Err(GpeError::OutsideBox { id: f.id() });
            }
        }
    }
    for i in 0..filaments.len() {
        for j in (i + 1)..filaments.len() {
            let d = filaments[i].min_distance(&filaments[j]);
            if d < 2.0 * h {
                return Err(GpeError::FilamentsTooClose {
                    a: filaments[i].id(),
                    b: filaments[j].id(),
                    distance: d,
                    limit: 2.0 * h,
                });
            }
        }
    }
    Ok(())
}

/// Fan apex for a loop: lifted off the centroid in a generic direction so
/// that grid nodes do not fall on the fan's edges, where the in-plane sign
/// of zero would decide between ±2π.
fn fan_apex(f: &Filament) -> Vec3 {
    let dir = Vec3::new(0.318_309_886, 0.577_215_665, 0.751_988_797).normalize();
    f.centroid() + dir * (0.5 * f.bbox_diagonal() + 0.137_035_999)
}

struct Loop {
    sign: f64,
    apex: Vec3,
    fine: Vec<Vec3>,
    coarse: Vec<Vec3>,
    coarse_apex: Vec3,
}

fn wrap(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

fn min_image_distance_sq(x: Vec3, pts: &[Vec3], len: [f64; 3]) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let d = x - a;
        let xd = a + Vec3::new(wrap(d.x, len[0]), wrap(d.y, len[1]), wrap(d.z, len[2]));
        best = best.min(helicity_core::math::point_segment_distance_sq(xd, a, b));
    }
    best
}

/// Nodes closer than this many cells to a filament get the exact phase and
/// core amplitude; the rest are interpolated from a coarser lattice.
const NEAR_CELLS: f64 = 6.0;

/// Phase and amplitude of the primary (non-image) filaments at `x`:
/// (e^{iχ}, Πᵢ core(dᵢ), minᵢ dᵢ).
fn primary(loops: &[Loop], x: Vec3, len: [f64; 3]) -> (Complex64, f64, f64) {
    let mut chi = 0.0;
    let mut core = 1.0;
    let mut dmin = f64::INFINITY;
    for l in loops {
        chi += l.sign * 0.5 * solid_angle(l.apex, &l.fine, x);
        let d2 = min_image_distance_sq(x, &l.fine, len);
        core *= (d2 / (d2 + 2.0)).sqrt();
        dmin = dmin.min(d2.sqrt());
    }
    (Complex64::from_polar(1.0, chi), core, dmin)
}

/// Lattice of every `stride`-th node, including the far faces of the box.
struct Coarse {
    stride: usize,
    n: [usize; 3],
}

impl Coarse {
    fn new(spec: &GridSpec, stride: usize) -> Self {
        Coarse { stride, n: spec.shape.map(|n| n / stride + 1) }
    }

    fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    fn node(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n[0] * self.stride, (idx / n[0]) % n[1] * self.stride, idx / (n[0] * n[1]) * self.stride]
    }

    /// Trilinear weights of the 8 coarse nodes around fine node `ijk`.
    fn weights(&self, ijk: [usize; 3]) -> [(usize, f64); 8] {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            base[a] = (ijk[a] / self.stride).min(self.n[a] - 2);
            frac[a] = (ijk[a] - base[a] * self.stride) as f64 / self.stride as f64;
        }
        let mut out = [(0usize, 0.0f64); 8];
        for (m, slot) in out.iter_mut().enumerate() {
            let d = [m & 1, (m >> 1) & 1, (m >> 2) & 1];
            let w = (0..3).map(|a| if d[a] == 1 { frac[a] } else { 1.0 - frac[a] }).product();
            let idx = (base[0] + d[0]) + self.n[0] * ((base[1] + d[1]) + self.n[1] * (base[2] + d[2]));
            *slot = (idx, w);
        }
        out
    }

    fn interp_complex(&self, v: &[Complex64], ijk: [usize; 3]) -> Complex64 {
        self.weights(ijk).iter().map(|(i, w)| v[*i] * *w).sum()
    }

    fn interp_real(&self, v: &[f64], ijk: [usize; 3]) -> f64 {
        self.weights(ijk).iter().map(|(i, w)| v[*i] * w).sum()
    }
}

fn unit(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// e^{iχ} and the core amplitude Πᵢ core(dᵢ) on the grid nodes.
fn imprint_fields(spec: &GridSpec, filaments: &[Filament]) -> Result<(Vec<Complex64>, Vec<f64>), GpeError> {
    let [nx, ny, _] = spec.shape;
    let len = spec.box_lengths();
    let h = spec.spacing[0];
    let mut loops = Vec::with_capacity(filaments.len());
    for f in filaments {
        let coarse = if f.len() > IMAGE_NODES { resample_arclength(f, IMAGE_NODES)? } else { f.clone() };
        loops.push(Loop {
            sign: if f.gamma() < 0.0 { -1.0 } else { 1.0 },
            apex: fan_apex(f),
            fine: f.points().to_vec(),
            coarse_apex: fan_apex(&coarse),
            coarse: coarse.into_points(),
        });
    }

    let mut shifts = Vec::with_capacity(26);
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                if (a, b, c) != (0, 0, 0) {
                    shifts.push(Vec3::new(a as f64 * len[0], b as f64 * len[1], c as f64 * len[2]));
                }
            }
        }
    }
    let images: Vec<(f64, Vec3, Vec<Vec3>)> = loops
        .iter()
        .flat_map(|l| shifts.iter().map(move |s| (l.sign, l.coarse_apex + *s, l.coarse.iter().map(|p| *p + *s).collect())))
        .collect();

    // Images are smooth inside the box and only need a coarse lattice.
    let img_lat = Coarse::new(spec, if spec.shape.iter().all(|n| n % 4 == 0) { 4 } else { 2 });
    let img_phase: Vec<Complex64> = (0..img_lat.len())
        .into_par_iter()
        .map(|idx| {
            let [i, j, k] = img_lat.node(idx);
            let x = spec.position(i, j, k);
            let chi: f64 = images.iter().map(|(sign, apex, pts)| sign * 0.5 * solid_angle(*apex, pts, x)).sum();
            Complex64::from_polar(1.0, chi)
        })
        .collect();

    // Primary filaments: exact near the lines, interpolated elsewhere.
    let lat = Coarse::new(spec, 2);
    let sampled: Vec<(Complex64, f64, f64)> = (0..lat.len())
        .into_par_iter()
        .map(|idx| {
            let [i, j, k] = lat.node(idx);
            primary(&loops, spec.position(i, j, k), len)
        })
        .collect();
    let c_phase: Vec<Complex64> = sampled.iter().map(|s| s.0).collect();
    let c_core: Vec<f64> = sampled.iter().map(|s| s.1).collect();
    let c_dist: Vec<f64> = sampled.iter().map(|s| s.2).collect();

    let mut u = vec![Complex64::default(); spec.len()];
    let mut core = vec![0.0; spec.len()];
    u.par_chunks_mut(nx * ny).zip(core.par_chunks_mut(nx * ny)).enumerate().for_each(|(k, (us, cs))| {
        for j in 0..ny {
            for i in 0..nx {
                let ijk = [i, j, k];
                let (p, c) = if lat.interp_real(&c_dist, ijk) < NEAR_CELLS * h {
                    let (p, c, _) = primary(&loops, spec.position(i, j, k), len);
                    (p, c)
                } else {
                    (unit(lat.interp_complex(&c_phase, ijk)), lat.interp_real(&c_core, ijk))
                };
                us[i + nx * j] = p * unit(img_lat.interp_complex(&img_phase, ijk));
                cs[i + nx * j] = c;
            }
        }
    });

    // Linear ramp per axis so the boundary link matches its neighbours.
    for ax in 0..3 {
        let n = spec.shape[ax];
        let stride_ax = [1, nx, nx * ny][ax];
        let mut z = Complex64::default();
        for base in (0..spec.len()).filter(|idx| spec.coords(*idx)[ax] == 0) {
            let at = |m: usize| u[base + m * stride_ax];
            let boundary = at(0) * at(n - 1).conj();
            z += boundary * (at(1) * at(0).conj()).conj();
            z += boundary * (at(n - 1) * at(n - 2).conj()).conj();
        }
        let m = z.arg();
        if m.abs() > 1e-12 {
            let g = m / len[ax];
            u.par_iter_mut().enumerate().for_each(|(idx, v)| {
                *v *= Complex64::from_polar(1.0, g * spec.coords(idx)[ax] as f64 * h);
            });
        }
    }
    Ok((u, core))
}

/// e^{iχ} on the grid nodes, where χ winds once (with the sign of Γ) about
/// every filament. χ is the solid-angle phase of the filaments and of their
/// 26 nearest periodic images, with a linear ramp per axis that removes the
/// mean phase mismatch across the periodic faces.
pub fn imprint_phase_factor(spec: &GridSpec, filaments: &[Filament]) -> Result<Vec<Complex64>, GpeError> {
    Ok(imprint_fields(spec, filaments)?.0)
}

/// ψ = √ρ_bg · Πᵢ core(dᵢ) · e^{iχ} with core(d) = d/√(d² + 2), dᵢ the
/// minimum-image distance to filament i and χ as in
/// [`imprint_phase_factor`].
pub fn imprint_vortices(
    field: &mut ComplexField3D,
    filaments: &[Filament],
    background_density: f64,
) -> Result<(), GpeError> {
    if !(background_density > 0.0 && background_density.is_finite()) {
        return Err(GpeError::Scene(format!("background density {background_density} must be positive")));
    }
    let spec = field.spec();
    validate(&spec, filaments)?;
    let (u, core) = imprint_fields(&spec, filaments)?;
    let amp = background_density.sqrt();
    field.data.par_iter_mut().zip(u.par_iter().zip(core.par_iter())).for_each(|(v, (u, c))| *v = u * (amp * c));
    Ok(())
}
