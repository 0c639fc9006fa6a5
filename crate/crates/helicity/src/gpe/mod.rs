//! Periodic Gross-Pitaevskii solver for iψ_t = −∇²ψ + |ψ|²ψ, with vortex
//! imprinting, vortex-line extraction and experiment driver.

mod detect;
mod experiment;
pub mod fft;
mod imprint;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use helicity_core::{GridSpec, Vec3};

pub use detect::{detect_vortex_lines, hausdorff_distance, plaquette_windings, trace_vortex_lines, Plaquettes, VortexLine};
pub use experiment::{lk_matrix, run_experiment, Scene, Snapshot};
pub use imprint::{imprint_vortices, imprint_phase_factor};

use fft::{wavenumbers, Fft3};

#[derive(Debug, thiserror::Error)]
pub enum GpeError {
    #[error("grid shape {0:?} must have every dimension even and at least 16")]
    BadShape([usize; 3]),
    #[error("grid spacing {0} must be positive and finite")]
    BadSpacing(f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("non-finite value at cell {index} after t = {time}")]
    NonFinite { index: usize, time: f64 },
    #[error("filaments {a} and {b} are {distance:.3} apart, closer than two cells ({limit:.3})")]
    FilamentsTooClose { a: i64, b: i64, distance: f64, limit: f64 },
    #[error("filament {id} leaves the box")]
    OutsideBox { id: i64 },
    #[error("vortex line ends in the bulk at cube {cube:?}")]
    OpenLine { cube: [usize; 3] },
    #[error("scene: {0}")]
    Scene(String),
    #[error(transparent)]
    Geometry(#[from] helicity_core::GeometryError),
}

/// Periodic grid of ψ values, x-fastest, with node (i, j, k) at
/// `origin + (i, j, k)·spacing`.
#[derive(Clone, Debug)]
pub struct ComplexField3D {
    shape: [usize; 3],
    spacing: f64,
    origin: Vec3,
    pub data: Vec<Complex64>,
    pub time: f64,
}

impl ComplexField3D {
    /// Uniform field on a box centred on the origin.
    pub fn uniform(shape: [usize; 3], spacing: f64, value: Complex64) -> Result<Self, GpeError> {
        if shape.iter().any(|n| *n < 16 || n % 2 != 0) {
            return Err(GpeError::BadShape(shape));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(GpeError::BadSpacing(spacing));
        }
        let origin = Vec3::new(
            -0.5 * shape[0] as f64 * spacing,
            -0.5 * shape[1] as f64 * spacing,
            -0.5 * shape[2] as f64 * spacing,
        );
        let len = shape[0] * shape[1] * shape[2];
        Ok(ComplexField3D { shape, spacing, origin, data: vec![value; len], time: 0.0 })
    }

    /// Cube of `n³` nodes.
    pub fn cube(n: usize, spacing: f64) -> Result<Self, GpeError> {
        Self::uniform([n; 3], spacing, Complex64::new(1.0, 0.0))
    }

    pub fn from_parts(
        shape: [usize; 3],
        spacing: f64,
        origin: Vec3,
        data: Vec<Complex64>,
        time: f64,
    ) -> Result<Self, GpeError> {
        let mut f = Self::uniform(shape, spacing, Complex64::default())?;
        if data.len() != f.data.len() {
            return Err(GpeError::BadShape(shape));
        }
        f.origin = origin;
        f.data = data;
        f.time = time;
        Ok(f)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.shape, self.origin, [self.spacing; 3])
    }

    pub fn box_lengths(&self) -> [f64; 3] {
        self.shape.map(|n| n as f64 * self.spacing)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    /// N = Σ Δx³|ψ|².
    pub fn norm(&self) -> f64 {
        let slab = self.shape[0] * self.shape[1];
        let parts: Vec<f64> = self.data.par_chunks(slab).map(|s| s.iter().map(|c| c.norm_sqr()).sum()).collect();
        parts.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn check_finite(&self) -> Result<(), GpeError> {
        match self.data.par_iter().position_first(|c| !(c.re.is_finite() && c.im.is_finite())) {
            Some(index) => Err(GpeError::NonFinite { index, time: self.time }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SplitOrder {
    /// Strang splitting.
    #[default]
    #[serde(rename = "2")]
    Second,
    /// Triple-jump composition of the Strang step.
    #[serde(rename = "4")]
    Fourth,
}

impl SplitOrder {
    pub fn from_int(n: u32) -> Option<Self> {
        match n {
            2 => Some(SplitOrder::Second),
            4 => Some(SplitOrder::Fourth),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    #[serde(default)]
    pub order: SplitOrder,
    /// Modes with |k| above this fraction of the axis Nyquist wavenumber π/Δx
    /// are removed in every kinetic substep. `None` gives the plain,
    /// exactly unitary scheme.
    #[serde(default)]
    pub dealias: Option<f64>,
}

impl Default for GpeConfig {
    fn default() -> Self {
        GpeConfig { dt: 0.1, t_end: 200.0, output_stride: 50, order: SplitOrder::Second, dealias: Some(2.0 / 3.0) }
    }
}

impl GpeConfig {
    pub fn validate(&self, spacing: f64) -> Result<(), GpeError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(GpeError::BadConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(GpeError::BadConfig(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(GpeError::BadConfig("output_stride must be at least 1".into()));
        }
        if let Some(f) = self.dealias {
            if !(f > 0.0 && f <= 3f64.sqrt()) {
                return Err(GpeError::BadConfig(format!("dealias fraction {f} must lie in (0, √3]")));
            }
        }
        let limit = self.stability_limit(spacing);
        if self.dt >= limit {
            log::warn!("dt = {} exceeds the split-step stability limit {limit:.4} for this grid and cutoff", self.dt);
        }
        Ok(())
    }

    /// Largest dt with |k|²dt < π for every retained mode on a grid of
    /// spacing `spacing`. Beyond it the unfiltered splitting resonates.
    pub fn stability_limit(&self, spacing: f64) -> f64 {
        let frac2 = self.dealias.map_or(3.0, |f| (f * f).min(3.0));
        let kn = std::f64::consts::PI / spacing;
        std::f64::consts::PI / (frac2 * kn * kn)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Split-step integrator bound to one grid shape and timestep.
pub struct Stepper {
    fft: Fft3,
    k2: [Vec<f64>; 3],
    dt: f64,
    order: SplitOrder,
    dealias: Option<f64>,
    kinetic: Vec<(f64, Vec<Complex64>)>,
    scratch: Vec<Complex64>,
}

const YOSHIDA_W1: f64 = 1.351_207_191_959_657_6; // 1 / (2 − 2^{1/3})
const YOSHIDA_W0: f64 = -1.702_414_383_919_315_3; // −2^{1/3} / (2 − 2^{1/3})

impl Stepper {
    pub fn new(field: &ComplexField3D, config: &GpeConfig) -> Result<Self, GpeError> {
        config.validate(field.spacing)?;
        let shape = field.shape;
        let k2 = [0, 1, 2].map(|a| wavenumbers(shape[a], field.spacing).iter().map(|k| k * k).collect());
        let mut s = Stepper {
            fft: Fft3::new(shape),
            k2,
            dt: config.dt,
            order: config.order,
            dealias: config.dealias,
            kinetic: Vec::new(),
            scratch: Vec::new(),
        };
        let coeffs: &[f64] = match config.order {
            SplitOrder::Second => &[1.0],
            SplitOrder::Fourth => &[YOSHIDA_W1, YOSHIDA_W0],
        };
        for c in coeffs {
            let m = s.multiplier(c * config.dt);
            s.kinetic.push((*c, m));
        }
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    /// e^{−i|k|²h} / N in FFT order, zero outside the dealiasing sphere.
    fn multiplier(&self, h: f64) -> Vec<Complex64> {
        let [nx, ny, nz] = [self.k2[0].len(), self.k2[1].len(), self.k2[2].len()];
        let inv_n = 1.0 / (nx * ny * nz) as f64;
        let cut2 = match self.dealias {
            Some(frac) => frac * frac * self.k2[0][nx / 2],
            None => f64::INFINITY,
        };
        let mut m = vec![Complex64::default(); nx * ny * nz];
        m.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slab)| {
            for j in 0..ny {
                for i in 0..nx {
                    let q = self.k2[0][i] + self.k2[1][j] + self.k2[2][k];
                    slab[i + nx * j] = if q > cut2 { Complex64::default() } else { Complex64::from_polar(inv_n, -q * h) };
                }
            }
        });
        m
    }

    fn kinetic(&mut self, data: &mut [Complex64], c: f64) {
        self.fft.forward(data);
        let m = &self.kinetic.iter().find(|(cc, _)| *cc == c).expect("kinetic multiplier").1;
        data.par_iter_mut().zip(m.par_iter()).for_each(|(v, m)| *v *= m);
        self.fft.inverse(data);
    }

    fn nonlinear(data: &mut [Complex64], h: f64) {
        data.par_iter_mut().for_each(|v| {
            let (s, c) = (-v.norm_sqr() * h).sin_cos();
            *v *= Complex64::new(c, s);
        });
    }

    /// One step of length dt; fails if the result is not finite.
    pub fn step(&mut self, field: &mut ComplexField3D) -> Result<(), GpeError> {
        let dt = self.dt;
        let mut data = std::mem::take(&mut field.data);
        match self.order {
            SplitOrder::Second => {
                Self::nonlinear(&mut data, 0.5 * dt);
                self.kinetic(&mut data, 1.0);
                Self::nonlinear(&mut data, 0.5 * dt);
            }
            SplitOrder::Fourth => {
                let (w1, w0) = (YOSHIDA_W1, YOSHIDA_W0);
                Self::nonlinear(&mut data, 0.5 * w1 * dt);
                self.kinetic(&mut data, w1);
                Self::nonlinear(&mut data, 0.5 * (w1 + w0) * dt);
                self.kinetic(&mut data, w0);
                Self::nonlinear(&mut data, 0.5 * (w0 + w1) * dt);
                self.kinetic(&mut data, w1);
                Self::nonlinear(&mut data, 0.5 * w1 * dt);
            }
        }
        field.data = data;
        field.time += dt;
        field.check_finite()
    }

    pub fn advance(&mut self, field: &mut ComplexField3D, steps: usize) -> Result<(), GpeError> {
        for _ in 0..steps {
            self.step(field)?;
        }
        Ok(())
    }

    /// E = Σ Δx³(|∇ψ|² + |ψ|⁴/2), with the gradient term evaluated
    /// spectrally so that it matches the kinetic operator exactly.
    pub fn energy(&mut self, field: &ComplexField3D) -> f64 {
        let [nx, ny, _] = field.shape;
        let mut buf = std::mem::take(&mut self.scratch);
        buf.clear();
        buf.extend_from_slice(&field.data);
        self.fft.forward(&mut buf);
        let k2 = &self.k2;
        let kin: Vec<f64> = buf
            .par_chunks(nx * ny)
            .enumerate()
            .map(|(k, slab)| {
                let mut s = 0.0;
                for j in 0..ny {
                    for i in 0..nx {
                        s += (k2[0][i] + k2[1][j] + k2[2][k]) * slab[i + nx * j].norm_sqr();
                    }
                }
                s
            })
            .collect();
        let pot: Vec<f64> = field
            .data
            .par_chunks(nx * ny)
            .map(|s| s.iter().map(|c| 0.5 * c.norm_sqr() * c.norm_sqr()).sum())
            .collect();
        self.scratch = buf;
        let n = field.len() as f64;
        field.cell_volume() * (kin.iter().sum::<f64>() / n + pot.iter().sum::<f64>())
    }
}

/// Advances `field` by one step of `config`. Builds a fresh [`Stepper`];
/// reuse one for repeated steps.
pub fn step(field: &mut ComplexField3D, config: &GpeConfig) -> Result<(), GpeError> {
    Stepper::new(field, config)?.step(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn plane_wave(n: usize, h: f64, m: [i32; 3], amp: f64) -> (ComplexField3D, [f64; 3]) {
        let mut f = ComplexField3D::cube(n, h).unwrap();
        let l = n as f64 * h;
        let k = m.map(|m| 2.0 * PI * m as f64 / l);
        for kk in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = f.position(i, j, kk);
                    let idx = f.index(i, j, kk);
                    f.data[idx] = Complex64::from_polar(amp, k[0] * p.x + k[1] * p.y + k[2] * p.z);
                }
            }
        }
        (f, k)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(ComplexField3D::cube(15, 0.5), Err(GpeError::BadShape(_))));
        assert!(matches!(ComplexField3D::cube(8, 0.5), Err(GpeError::BadShape(_))));
        assert!(matches!(ComplexField3D::cube(16, 0.0), Err(GpeError::BadSpacing(_))));
    }

    #[test]
    fn plane_wave_is_exact() {
        for order in [SplitOrder::Second, SplitOrder::Fourth] {
            let (mut f, k) = plane_wave(16, 0.5, [1, -2, 3], 0.7);
            let init = f.clone();
            let cfg = GpeConfig { dt: 0.1, t_end: 1.0, output_stride: 1, order, dealias: None };
            let mut s = Stepper::new(&f, &cfg).unwrap();
            s.advance(&mut f, 10).unwrap();
            let omega = k.iter().map(|k| k * k).sum::<f64>() + 0.49;
            let rot = Complex64::from_polar(1.0, -omega * f.time);
            for (a, b) in f.data.iter().zip(&init.data) {
                assert!((a.norm() - 0.7).abs() < 1e-12);
                assert!((a - b * rot).norm() < 1e-12, "{order:?}");
            }
        }
    }

    #[test]
    fn uniform_rotates_at_density() {
        let mut f = ComplexField3D::uniform([16; 3], 0.5, Complex64::new(1.5, 0.0)).unwrap();
        let n0 = f.norm();
        step(&mut f, &GpeConfig { dt: 0.05, ..GpeConfig::default() }).unwrap();
        let expect = Complex64::from_polar(1.5, -2.25 * 0.05);
        assert!((f.data[17] - expect).norm() < 1e-13);
        assert!((f.norm() - n0).abs() / n0 < 1e-14);
    }

    #[test]
    fn energy_of_plane_wave() {
        let (f, k) = plane_wave(16, 0.5, [2, 0, 1], 1.2);
        let mut s = Stepper::new(&f, &GpeConfig::default()).unwrap();
        let vol = 8.0f64.powi(3);
        let expect = vol * (1.44 * (k[0] * k[0] + k[2] * k[2]) + 0.5 * 1.2f64.powi(4));
        assert!((s.energy(&f) - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn detects_non_finite() {
        let mut f = ComplexField3D::cube(16, 0.5).unwrap();
        f.data[100] = Complex64::new(f64::NAN, 0.0);
        let err = step(&mut f, &GpeConfig::default()).unwrap_err();
        assert!(matches!(err, GpeError::NonFinite { .. }));
    }

    #[test]
    fn config_validation_and_steps() {
        let mut c = GpeConfig::default();
        assert!(c.validate(0.5).is_ok());
        assert!((GpeConfig { dealias: None, ..c }.stability_limit(0.5) - 0.25 / (3.0 * PI)).abs() < 1e-15);
        assert!(GpeConfig { dealias: Some(2.0), ..c }.validate(0.5).is_err());
        assert_eq!(c.steps(), 2000);
        c.dt = 0.0;
        assert!(c.validate(0.5).is_err());
        c = GpeConfig { output_stride: 0, ..GpeConfig::default() };
        assert!(c.validate(0.5).is_err());
        let parsed: GpeConfig = serde_json::from_str(r#"{"dt":0.1,"t_end":5,"output_stride":10,"order":"4"}"#).unwrap();
        assert_eq!(parsed.order, SplitOrder::Fourth);
        assert!(serde_json::from_str::<GpeConfig>(r#"{"dt":0.1,"t_end":5,"output_stride":10,"bogus":1}"#).is_err());
    }
}
