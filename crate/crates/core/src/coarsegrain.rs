//! Mollified vorticity of a filament set and the quasiclassical helicity
//! ∫ v·ω of the smoothed fields.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::Filament;
use crate::grid::{GridSpec, VectorGrid};
use crate::math::{ceil, erf, exp, floor, ordered_sum, sqrt, Vec3, PI};
use crate::par::map_indexed;

/// Gaussian tails beyond this many widths are dropped.
const CUTOFF: f64 = 4.0;
/// Fixed number of deposition chunks, so sums do not depend on thread count.
const CHUNKS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoarseError {
    #[error("kernel width {width} is below twice the grid spacing {spacing}")]
    KernelTooNarrow { width: f64, spacing: f64 },
    #[error("filament {0} lies entirely outside the grid")]
    OutsideGrid(i64),
    #[error("velocity and vorticity grids differ")]
    GridMismatch,
    #[error("velocity is masked at cell {0} where the vorticity is nonzero")]
    MaskedSupport(usize),
    #[error("invalid grid specification")]
    InvalidGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VorticityGrid {
    pub spec: GridSpec,
    pub omega: Vec<Vec3>,
    pub kernel_width: f64,
}

impl VorticityGrid {
    /// Indices of cells with nonzero vorticity.
    pub fn support(&self) -> Vec<usize> {
        (0..self.omega.len()).filter(|&i| self.omega[i] != Vec3::ZERO).collect()
    }

    /// Σ ω ΔV over all cells.
    pub fn total(&self) -> Vec3 {
        let dv = self.spec.cell_volume();
        let s = |c: usize| ordered_sum(self.omega.iter().map(|w| w[c])) * dv;
        Vec3::new(s(0), s(1), s(2))
    }

    /// Flux of ω through the grid plane `axis = index`, restricted to the
    /// cells whose in-plane position satisfies `select`.
    pub fn plane_flux<F: Fn(Vec3) -> bool>(&self, axis: usize, index: usize, select: F) -> f64 {
        let s = &self.spec;
        let h = s.spacing;
        let area = match axis {
            0 => h[1] * h[2],
            1 => h[0] * h[2],
            _ => h[0] * h[1],
        };
        let mut parts = Vec::new();
        for idx in 0..s.len() {
            let c = s.coords(idx);
            if c[axis] == index && select(s.position_of(idx)) {
                parts.push(self.omega[idx][axis]);
            }
        }
        ordered_sum(parts) * area
    }

    pub fn as_vector_grid(&self) -> VectorGrid {
        VectorGrid { spec: self.spec, data: self.omega.clone(), mask: None }
    }
}

fn gaussian_1d(n: usize, origin: f64, h: f64, centre: f64, width: f64) -> (usize, Vec<f64>) {
    let reach = CUTOFF * width;
    let lo = ceil((centre - reach - origin) / h).max(0.0);
    let hi = floor((centre + reach - origin) / h).min(n as f64 - 1.0);
    if hi < lo {
        return (0, Vec::new());
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let w = (lo..=hi)
        .map(|i| {
            let d = origin + i as f64 * h - centre;
            exp(-d * d / (2.0 * width * width))
        })
        .collect();
    (lo, w)
}

/// Deposit Γ·(chord) of every segment through a Gaussian of standard
/// deviation `kernel_width` centred on the segment midpoint. Each segment's
/// weights are normalised to unit sum over the grid points they reach, so
/// Σ ω ΔV equals Σ Γ·chord exactly for segments well inside the grid.
pub fn coarse_vorticity(filaments: &[Filament], spec: &GridSpec, kernel_width: f64) -> Result<VorticityGrid, CoarseError> {
    if !spec.is_valid() {
        return Err(CoarseError::InvalidGrid);
    }
    let hmax = spec.spacing.iter().copied().fold(0.0, f64::max);
    if !(kernel_width >= 2.0 * hmax) {
        return Err(CoarseError::KernelTooNarrow { width: kernel_width, spacing: hmax });
    }
    for f in filaments {
        if !f.points().iter().any(|p| spec.contains(*p)) {
            return Err(CoarseError::OutsideGrid(f.id()));
        }
    }
    let mut segs: Vec<(Vec3, Vec3)> = Vec::new();
    for f in filaments {
        let (m, d) = f.midpoints_and_chords();
        segs.extend(m.into_iter().zip(d.into_iter().map(|d| d * f.gamma())));
    }
    let dv = spec.cell_volume();
    let per = (segs.len() + CHUNKS - 1) / CHUNKS.max(1);
    let buffers = map_indexed(CHUNKS, |c| {
        let mut buf = vec![Vec3::ZERO; spec.len()];
        let lo = (c * per).min(segs.len());
        let hi = ((c + 1) * per).min(segs.len());
        for &(m, gd) in &segs[lo..hi] {
            let (i0, wx) = gaussian_1d(spec.shape[0], spec.origin.x, spec.spacing[0], m.x, kernel_width);
            let (j0, wy) = gaussian_1d(spec.shape[1], spec.origin.y, spec.spacing[1], m.y, kernel_width);
            let (k0, wz) = gaussian_1d(spec.shape[2], spec.origin.z, spec.spacing[2], m.z, kernel_width);
            let norm = wx.iter().sum::<f64>() * wy.iter().sum::<f64>() * wz.iter().sum::<f64>();
            if !(norm > 0.0) {
                continue;
            }
            let scale = gd / (norm * dv);
            for (dk, z) in wz.iter().enumerate() {
                for (dj, y) in wy.iter().enumerate() {
                    let yz = y * z;
                    let row = spec.index(i0, j0 + dj, k0 + dk);
                    for (di, x) in wx.iter().enumerate() {
                        buf[row + di] += scale * (x * yz);
                    }
                }
            }
        }
        buf
    });
    let mut omega = vec![Vec3::ZERO; spec.len()];
    for buf in &buffers {
        for (o, b) in omega.iter_mut().zip(buf) {
            *o += *b;
        }
    }
    Ok(VorticityGrid { spec: *spec, omega, kernel_width })
}

/// Fraction of a unit Gaussian's mass (standard deviation `s`) inside radius `rho`.
pub fn gaussian_mass_within(rho: f64, s: f64) -> f64 {
    let x = rho / s;
    erf(x / core::f64::consts::SQRT_2) - sqrt(2.0 / PI) * x * exp(-0.5 * x * x)
}

/// Biot-Savart velocity of the Gaussian-smoothed filaments at `r`: the
/// line kernel multiplied by the enclosed Gaussian mass q(ρ).
pub fn regularized_velocity(filaments: &[Filament], r: Vec3, kernel_width: f64) -> Vec3 {
    let mut acc = Vec3::ZERO;
    for f in filaments {
        let mut part = Vec3::ZERO;
        for i in 0..f.len() {
            let (a, b) = f.segment(i);
            let s = (a + b) * 0.5 - r;
            let rho = s.norm();
            if rho < 1e-12 * kernel_width {
                continue;
            }
            let q = gaussian_mass_within(rho, kernel_width);
            part += s.cross(b - a) * (q / (rho * rho * rho));
        }
        acc += part * (f.gamma() / (4.0 * PI));
    }
    acc
}

/// Coarse velocity on the support of `omega`, from the filaments smoothed
/// with the same Gaussian; zero (and masked) elsewhere.
pub fn coarse_velocity(filaments: &[Filament], omega: &VorticityGrid) -> VectorGrid {
    let spec = omega.spec;
    let support = omega.support();
    let values = map_indexed(support.len(), |k| {
        regularized_velocity(filaments, spec.position_of(support[k]), omega.kernel_width)
    });
    let mut data = vec![Vec3::ZERO; spec.len()];
    let mut mask = vec![false; spec.len()];
    for (k, &idx) in support.iter().enumerate() {
        data[idx] = values[k];
        mask[idx] = true;
    }
    VectorGrid { spec, data, mask: Some(mask) }
}

/// H_cl = Σ (v·ω) ΔV. The velocity must be available wherever ω ≠ 0.
pub fn quasiclassical_helicity(omega: &VorticityGrid, v: &VectorGrid) -> Result<f64, CoarseError> {
    if omega.spec != v.spec || v.data.len() != omega.omega.len() {
        return Err(CoarseError::GridMismatch);
    }
    let mut parts = Vec::new();
    for (idx, w) in omega.omega.iter().enumerate() {
        if *w == Vec3::ZERO {
            continue;
        }
        if !v.is_valid_at(idx) {
            return Err(CoarseError::MaskedSupport(idx));
        }
        parts.push(v.data[idx].dot(*w));
    }
    Ok(ordered_sum(parts) * omega.spec.cell_volume())
}

/// Grid with spacing `spacing` covering every filament plus `margin`.
pub fn covering_grid(filaments: &[Filament], margin: f64, spacing: f64) -> GridSpec {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for f in filaments {
        let (a, b) = f.bbox();
        lo = Vec3::new(lo.x.min(a.x), lo.y.min(a.y), lo.z.min(a.z));
        hi = Vec3::new(hi.x.max(b.x), hi.y.max(b.y), hi.z.max(b.z));
    }
    if filaments.is_empty() {
        lo = Vec3::ZERO;
        hi = Vec3::ZERO;
    }
    let lo = lo - Vec3::new(margin, margin, margin);
    let hi = hi + Vec3::new(margin, margin, margin);
    let count = |a: f64, b: f64| (ceil((b - a) / spacing) as usize + 1).max(2);
    GridSpec::new([count(lo.x, hi.x), count(lo.y, hi.y), count(lo.z, hi.z)], lo, [spacing; 3])
}
