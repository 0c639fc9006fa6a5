//! Derivatives of periodic samples: Fourier differentiation for power-of-two
//! lengths, fourth-order central differences otherwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cos, sin, TAU};

/// In-place iterative radix-2 FFT on split real/imaginary buffers.
/// `inverse` applies the conjugate transform without the 1/n scale.
pub fn fft_radix2(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "radix-2 FFT needs a power-of-two length");
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let ang = sign * TAU / len as f64;
        // Twiddles computed directly rather than by recurrence to keep the
        // round-off at machine precision for long transforms.
        let tw: Vec<(f64, f64)> = (0..half).map(|k| (cos(ang * k as f64), sin(ang * k as f64))).collect();
        let mut start = 0;
        while start < n {
            for (k, &(wr, wi)) in tw.iter().enumerate() {
                let a = start + k;
                let b = a + half;
                let xr = re[b] * wr - im[b] * wi;
                let xi = re[b] * wi + im[b] * wr;
                re[b] = re[a] - xr;
                im[b] = im[a] - xi;
                re[a] += xr;
                im[a] += xi;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// First, second and third derivatives of a periodic sequence sampled at
/// `n` equispaced points over one `period`.
pub fn periodic_derivatives(values: &[f64], period: f64) -> [Vec<f64>; 3] {
    let n = values.len();
    if n.is_power_of_two() && n >= 8 {
        spectral_derivatives(values, period)
    } else {
        central_derivatives(values, period / n as f64)
    }
}

fn spectral_derivatives(values: &[f64], period: f64) -> [Vec<f64>; 3] {
    let n = values.len();
    let mut re = values.to_vec();
    let mut im = vec![0.0; n];
    fft_radix2(&mut re, &mut im, false);
    let scale = TAU / period;
    let out = [1u32, 2, 3].map(|order| {
        let mut dr = vec![0.0; n];
        let mut di = vec![0.0; n];
        for j in 0..n {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            if j == n / 2 && order % 2 == 1 {
                continue;
            }
            let k = m * scale;
            // (ik)^order
            let (fr, fi) = match order % 4 {
                1 => (0.0, k),
                2 => (-k * k, 0.0),
                3 => (0.0, -k * k * k),
                _ => unreachable!(),
            };
            dr[j] = re[j] * fr - im[j] * fi;
            di[j] = re[j] * fi + im[j] * fr;
        }
        fft_radix2(&mut dr, &mut di, true);
        dr.iter().map(|x| x / n as f64).collect::<Vec<_>>()
    });
    out
}

/// Fourth-order accurate periodic central differences with spacing `h`.
pub fn central_derivatives(v: &[f64], h: f64) -> [Vec<f64>; 3] {
    let n = v.len() as isize;
    let at = |i: isize| v[i.rem_euclid(n) as usize];
    let mut d1 = Vec::with_capacity(v.len());
    let mut d2 = Vec::with_capacity(v.len());
    let mut d3 = Vec::with_capacity(v.len());
    for i in 0..n {
        d1.push((at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h));
        d2.push((-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) / (12.0 * h * h));
        d3.push(
            (at(i - 3) - 8.0 * at(i - 2) + 13.0 * at(i - 1) - 13.0 * at(i + 1) + 8.0 * at(i + 2) - at(i + 3))
                / (8.0 * h * h * h),
        );
    }
    [d1, d2, d3]
}
