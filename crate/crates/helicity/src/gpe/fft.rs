//! Unnormalised in-place 3D FFT on x-fastest complex arrays.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

pub struct Fft3 {
    shape: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(shape: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let plan = |p: &mut FftPlanner<f64>, dir| -> [Arc<dyn Fft<f64>>; 3] {
            [0, 1, 2].map(|a| p.plan_fft(shape[a], dir))
        };
        let forward = plan(&mut planner, FftDirection::Forward);
        let inverse = plan(&mut planner, FftDirection::Inverse);
        Fft3 { shape, forward, inverse }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform without the 1/N factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.shape;
        assert_eq!(data.len(), nx * ny * nz);

        // x: contiguous rows.
        data.par_chunks_mut(nx * ny).for_each(|slab| {
            let mut scratch = vec![Complex64::default(); plans[0].get_inplace_scratch_len()];
            plans[0].process_with_scratch(slab, &mut scratch);
        });

        // y: transpose each z-slab into (i, j) with j fastest.
        data.par_chunks_mut(nx * ny).for_each(|slab| {
            let mut tmp = vec![Complex64::default(); nx * ny];
            let mut scratch = vec![Complex64::default(); plans[1].get_inplace_scratch_len()];
            for j in 0..ny {
                for i in 0..nx {
                    tmp[i * ny + j] = slab[j * nx + i];
                }
            }
            plans[1].process_with_scratch(&mut tmp, &mut scratch);
            for j in 0..ny {
                for i in 0..nx {
                    slab[j * nx + i] = tmp[i * ny + j];
                }
            }
        });

        // z: gather (i, k) planes for each j. Rows of fixed (j, k) are
        // contiguous, so each j-plane is read row by row.
        let plane = nx * nz;
        let mut planes: Vec<Vec<Complex64>> = (0..ny)
            .into_par_iter()
            .map(|j| {
                let mut tmp = vec![Complex64::default(); plane];
                let mut scratch = vec![Complex64::default(); plans[2].get_inplace_scratch_len()];
                for k in 0..nz {
                    let row = &data[(k * ny + j) * nx..(k * ny + j + 1) * nx];
                    for (i, v) in row.iter().enumerate() {
                        tmp[i * nz + k] = *v;
                    }
                }
                plans[2].process_with_scratch(&mut tmp, &mut scratch);
                tmp
            })
            .collect();
        for (j, tmp) in planes.iter_mut().enumerate() {
            for k in 0..nz {
                let row = &mut data[(k * ny + j) * nx..(k * ny + j + 1) * nx];
                for (i, v) in row.iter_mut().enumerate() {
                    *v = tmp[i * nz + k];
                }
            }
        }
    }
}

/// Angular wavenumbers of an `n`-point periodic axis with spacing `h`, in
/// FFT order.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let l = n as f64 * h;
    (0..n)
        .map(|i| {
            let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            2.0 * std::f64::consts::PI * m / l
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let shape = [8, 6, 4];
        let n = 8 * 6 * 4;
        let fft = Fft3::new(shape);
        let mut data: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let orig = data.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }

        // e^{2πi(x/8 + 2y/6 + 3z/4)} lands on one bin.
        let mut wave = vec![Complex64::default(); n];
        for k in 0..4 {
            for j in 0..6 {
                for i in 0..8 {
                    let ph = 2.0 * std::f64::consts::PI * (i as f64 / 8.0 + 2.0 * j as f64 / 6.0 + 3.0 * k as f64 / 4.0);
                    wave[i + 8 * (j + 6 * k)] = Complex64::from_polar(1.0, ph);
                }
            }
        }
        fft.forward(&mut wave);
        for (idx, v) in wave.iter().enumerate() {
            let expect = if idx == 1 + 8 * (2 + 6 * 3) { n as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9, "{idx} {v}");
        }
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(8, 0.5);
        let dk = 2.0 * std::f64::consts::PI / 4.0;
        assert_eq!(k[0], 0.0);
        assert!((k[1] - dk).abs() < 1e-15);
        assert!((k[4] - 4.0 * dk).abs() < 1e-15);
        assert!((k[7] + dk).abs() < 1e-15);
    }
}
