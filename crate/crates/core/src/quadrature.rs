//! One-dimensional quadrature: fixed Gauss-Legendre panels, step-halving
//! refinement and adaptive Gauss-Kronrod (7/15).

/// Five-point Gauss-Legendre abscissae on [-1, 1].
const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss 7-point weights for the odd-indexed Kronrod nodes (and the centre).
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += GL5_W[i] * f(c + h * GL5_X[i]);
    }
    s * h
}

/// Step-halving refinement: a panel is accepted once its five-point value
/// and the sum over its two halves differ by less than `tol`. The tolerance
/// is split between the halves on recursion.
pub fn integrate_halving<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let whole = gauss_legendre5(&mut f, a, b);
    halving_step(&mut f, a, b, whole, tol, max_depth)
}

fn halving_step<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss_legendre5(&mut *f, a, m);
    let right = gauss_legendre5(&mut *f, m, b);
    let halves = left + right;
    if depth == 0 || (halves - whole).abs() < tol {
        return halves;
    }
    halving_step(f, a, m, left, 0.5 * tol, depth - 1) + halving_step(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Result of an adaptive Gauss-Kronrod integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK15_WK[7];
    let mut gauss = fc * GK15_WG[3];
    for i in 0..7 {
        let dx = h * GK15_X[i];
        let s = f(c - dx) + f(c + dx);
        kron += GK15_WK[i] * s;
        if i % 2 == 1 {
            gauss += GK15_WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Recursive adaptive Gauss-Kronrod integration to an absolute tolerance.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> QuadResult {
    let mut evals = 0;
    let (value, error) = gk_recurse(&mut f, a, b, abs_tol, 50, &mut evals);
    QuadResult { value, error, evaluations: evals }
}

fn gk_recurse<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32, evals: &mut usize) -> (f64, f64) {
    let (v, e) = gk15(f, a, b);
    *evals += 15;
    if e <= tol || depth == 0 {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = gk_recurse(f, a, m, 0.5 * tol, depth - 1, evals);
    let (v2, e2) = gk_recurse(f, m, b, 0.5 * tol, depth - 1, evals);
    (v1 + v2, e1 + e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl5_is_exact_for_degree_nine() {
        let v = gauss_legendre5(|x| x.powi(9) + 3.0 * x.powi(8), -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + (2f64.powi(9) + 1.0) / 3.0;
        assert!((v - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let eps: f64 = 1e-4;
        let r = integrate_adaptive(|h| eps * eps / (h * h + eps * eps).powf(1.5), -1.0, 1.0, 1e-12);
        let exact = 2.0 / (1.0 + eps * eps).sqrt();
        assert!((r.value - exact).abs() < 1e-10, "{} vs {exact}", r.value);
    }

    #[test]
    fn halving_converges_on_smooth_function() {
        let v = integrate_halving(|x| x.sin(), 0.0, core::f64::consts::PI, 1e-12, 30);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
