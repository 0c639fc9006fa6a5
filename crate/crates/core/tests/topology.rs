use helicity_core::geometry::{frenet, hopf_rings, make_bundle, make_circle, make_torus_knot, resample_arclength, Filament, TorusKnotParams};
use helicity_core::math::{Mat3, TAU};
use helicity_core::topology::{
    assemble_helicity, calugareanu_local_integral, calugareanu_order_of_limits, kernel_integral, linking_number,
    linking_number_polygon, push_off, quartic_tail, self_linking, twist, twist_spanwise, writhe, CalugareanuProbe,
    Framing, Tolerances,
};
use helicity_core::Vec3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linking number from signed crossings in a generic projection: the sum of
/// crossing signs where a strand of `a` passes over a strand of `b`.
fn crossing_linking(a: &Filament, b: &Filament) -> i64 {
    let rot = Mat3::rotation(Vec3::new(0.31, -0.57, 0.76).normalize(), 0.913);
    let pa: Vec<Vec3> = a.points().iter().map(|p| rot.apply(*p)).collect();
    let pb: Vec<Vec3> = b.points().iter().map(|p| rot.apply(*p)).collect();
    let mut total = 0;
    for i in 0..pa.len() {
        let (p0, p1) = (pa[i], pa[(i + 1) % pa.len()]);
        for j in 0..pb.len() {
            let (q0, q1) = (pb[j], pb[(j + 1) % pb.len()]);
            let u = p1 - p0;
            let w = q1 - q0;
            let den = u.x * w.y - u.y * w.x;
            if den == 0.0 {
                continue;
            }
            let d = q0 - p0;
            let s = (d.x * w.y - d.y * w.x) / den;
            let t = (d.x * u.y - d.y * u.x) / den;
            if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&t) {
                continue;
            }
            let za = p0.z + s * u.z;
            let zb = q0.z + t * w.z;
            if za > zb {
                total += if den > 0.0 { 1 } else { -1 };
            }
        }
    }
    total
}

fn trefoil(n: usize) -> Filament {
    resample_arclength(&make_torus_knot(&TorusKnotParams::trefoil(n)).unwrap(), n).unwrap()
}

fn random_framing(f: &Filament, rng: &mut ChaCha8Rng, eps: f64) -> Framing {
    let frame = frenet(f);
    let wind = rng.gen_range(-3i64..=3);
    let modes: Vec<(f64, f64)> = (1..=3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..TAU))).collect();
    let theta = frame
        .sigma
        .iter()
        .map(|s| {
            let x = s / frame.length;
            TAU * wind as f64 * x
                + modes.iter().enumerate().map(|(m, (a, ph))| a * (TAU * (m + 1) as f64 * x + ph).sin()).sum::<f64>()
        })
        .collect();
    Framing::from_angles(f, frame, theta, eps).unwrap()
}

#[test]
fn crossing_oracle_sanity() {
    let a = make_circle(Vec3::ZERO, 1.0, Vec3::Z, 64).unwrap();
    let b = make_circle(Vec3::new(1.0, 0.0, 0.0), 1.0, Vec3::Y, 64).unwrap();
    let far = b.translated(Vec3::new(5.0, 0.0, 0.0));
    assert_eq!(crossing_linking(&a, &far), 0);
    assert_eq!(crossing_linking(&a, &b).abs(), 1);
    assert_eq!(crossing_linking(&a, &b), crossing_linking(&b, &a));
}

#[test]
fn hopf_rings_link_once() {
    let [a, b] = hopf_rings(40.5, 512).unwrap();
    let l = linking_number(&a, &b).unwrap();
    assert_eq!(l.rounded, crossing_linking(&a, &b));
    assert_eq!(l.rounded.abs(), 1);
    assert!(l.residual() < 1e-3);
    let a4 = resample_arclength(&a, 2048).unwrap();
    let b4 = resample_arclength(&b, 2048).unwrap();
    let fine = linking_number(&a4, &b4).unwrap();
    assert!((fine.raw - l.raw).abs() < 1e-4);
}

#[test]
fn reversing_one_curve_negates_linking() {
    let [a, b] = hopf_rings(40.5, 256).unwrap();
    let l = linking_number(&a, &b).unwrap();
    let r = linking_number(&a, &b.reversed()).unwrap();
    assert_eq!(r.rounded, -l.rounded);
    assert_eq!(linking_number_polygon(&a.reversed(), &b).rounded, -l.rounded);
}

#[test]
fn default_bundles_link_pairwise() {
    let [r1, r2] = hopf_rings(40.5, 512).unwrap();
    let b1 = make_bundle(&r1, 6, 4.0).unwrap();
    let b2 = make_bundle(&r2, 6, 4.0).unwrap();
    let mut inter = 0;
    for x in &b1 {
        for y in &b2 {
            let l = linking_number(x, y).unwrap();
            assert_eq!(l.rounded, crossing_linking(x, y));
            assert!(l.residual() < 5e-3);
            inter += l.rounded.abs();
        }
    }
    assert_eq!(inter, 49);
    for bundle in [&b1, &b2] {
        for i in 0..7 {
            for j in (i + 1)..7 {
                assert_eq!(linking_number(&bundle[i], &bundle[j]).unwrap().rounded, 0);
            }
        }
    }
}

#[test]
fn writhe_of_circle_mirror_and_refinement() {
    let c = make_circle(Vec3::new(3.0, 1.0, -2.0), 5.0, Vec3::new(0.2, 0.4, 1.0), 512).unwrap();
    assert!(writhe(&c).abs() < 1e-10);
    let k = trefoil(1024);
    let w = writhe(&k);
    assert!((w + writhe(&k.mirrored())).abs() < 1e-8);
    assert!((w - writhe(&k.reversed())).abs() < 1e-10);
    assert!((w - writhe(&trefoil(2048))).abs() < 1e-3);
}

#[test]
fn calugareanu_on_random_trefoil_framings() {
    let k = trefoil(1024);
    let wr = writhe(&k);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let fr = random_framing(&k, &mut rng, 0.5);
        let tw = twist(&fr).unwrap();
        assert!((tw - twist_spanwise(&fr).unwrap()).abs() < 1e-6);
        let star = push_off(&fr).unwrap();
        let lk = crossing_linking(&k, &star);
        assert!((wr + tw - lk as f64).abs() < 5e-3, "Wr + Tw = {} vs Lk = {lk}", wr + tw);
        assert_eq!(self_linking(&fr).unwrap(), lk);
    }
}

#[test]
fn frenet_twist_matches_total_torsion() {
    let k = trefoil(1024);
    let fr = Framing::frenet(&k, 0.5).unwrap();
    assert!((twist(&fr).unwrap() - frenet(&k).total_torsion()).abs() < 1e-6);
}

#[test]
fn winding_framing_on_circle() {
    let c = make_circle(Vec3::ZERO, 2.0, Vec3::Z, 256).unwrap();
    for k in -2..=2 {
        let fr = Framing::winding(&c, k, 0.2).unwrap();
        assert!((twist(&fr).unwrap() - k as f64).abs() < 1e-9);
        let star = push_off(&fr).unwrap();
        // the push-off stays on a torus of radius ε about the circle
        for p in star.points() {
            let rho = (p.x * p.x + p.y * p.y).sqrt() - 2.0;
            assert!(((rho * rho + p.z * p.z).sqrt() - 0.2).abs() < 1e-9);
        }
        assert_eq!(self_linking(&fr).unwrap(), k);
        assert_eq!(crossing_linking(&c, &star), k);
    }
}

#[test]
fn helicity_assembly_with_frenet_framings() {
    let c = make_circle(Vec3::ZERO, 3.0, Vec3::Z, 128).unwrap();
    let fr = Framing::frenet(&c, 0.2).unwrap();
    let rep = assemble_helicity(&[c], &[fr], &Tolerances::default()).unwrap();
    assert!(rep.total.abs() < 1e-10);
    assert_eq!(rep.sl, vec![0]);

    let [a, b] = hopf_rings(40.5, 256).unwrap();
    let fa = Framing::frenet(&a, 1.0).unwrap();
    let fb = Framing::frenet(&b, 1.0).unwrap();
    let rep = assemble_helicity(&[a.clone(), b.clone()], &[fa, fb], &Tolerances::default()).unwrap();
    let lk = linking_number(&a, &b).unwrap().rounded as f64;
    let expect = 2.0 * lk + writhe(&a) + writhe(&b);
    assert!((rep.total - expect).abs() < 1e-9);
    assert!(rep.total.abs() > 1.0);
    rep.check_integrality().unwrap();
}

#[test]
fn appendix_integrals() {
    let t: f64 = 1e4;
    let closed = 2.0 * t / (1.0 + t * t).sqrt();
    assert!((kernel_integral(t) - closed).abs() < 1e-12);
    assert!((kernel_integral(t) - 2.0).abs() < 2e-8);
    // antiderivative of s⁴(1+s²)^{-3/2}
    let big_f = |x: f64| {
        let q = (1.0 + x * x).sqrt();
        0.5 * (x * q + x.asinh()) - 2.0 * x.asinh() + x / q
    };
    let tt = 1e3;
    assert!((quartic_tail(tt) - 2.0 * big_f(tt) / (tt * tt)).abs() < 1e-9);
    assert!((quartic_tail(tt) - 1.0).abs() < 1e-2);
}

#[test]
fn local_integral_limits() {
    let base = CalugareanuProbe { tau0: 0.5, theta_prime: 0.5, kappa0: 0.0, theta0: 0.0, epsilon: 1e-2, arc_halfwidth: 1.0 };
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let v = calugareanu_local_integral(&CalugareanuProbe { epsilon: eps, ..base }).unwrap();
        assert!((v - 2.0 / (1.0 + eps * eps).sqrt()).abs() < 1e-12);
        let err = (v - 2.0).abs();
        assert!(err < last && err <= eps);
        last = err;
    }
    // with curvature the odd terms integrate away and the error is first order
    let curved = CalugareanuProbe { tau0: 0.3, theta_prime: -0.1, kappa0: 0.8, theta0: 0.7, ..base };
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| (calugareanu_local_integral(&CalugareanuProbe { epsilon: e, ..curved }).unwrap() - 0.4).abs())
        .collect();
    assert!(errs[1] < 0.2 * errs[0] && errs[2] < 0.2 * errs[1], "{errs:?}");
}

#[test]
fn order_of_limits() {
    let p = CalugareanuProbe { tau0: 0.25, theta_prime: 0.75, kappa0: 0.4, theta0: 0.3, epsilon: 0.1, arc_halfwidth: 1.0 };
    let (a, b) = calugareanu_order_of_limits(&p);
    assert!(a.abs() < 1e-12);
    assert!((b - 1.0).abs() < 1e-9);
    let flat = CalugareanuProbe { tau0: 0.6, theta_prime: -0.6, ..p };
    let (a, b) = calugareanu_order_of_limits(&flat);
    assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
}

fn small_knot() -> Filament {
    let k = make_torus_knot(&TorusKnotParams { p: 2, q: 5, r0: 10.0, a: 2.0, n_points: 384 }).unwrap();
    resample_arclength(&k, 384).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn framing_changes_sum_by_integers(seed in any::<u64>()) {
        let k = small_knot();
        let wr = writhe(&k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = 0.1;
        let f1 = random_framing(&k, &mut rng, eps);
        let f2 = random_framing(&k, &mut rng, eps);
        let (s1, s2) = (wr + twist(&f1).unwrap(), wr + twist(&f2).unwrap());
        prop_assert!(((s1 - s2) - (s1 - s2).round()).abs() < 5e-3);
        prop_assert_eq!(self_linking(&f1).unwrap() as f64, s1.round());
        prop_assert_eq!(self_linking(&f2).unwrap() as f64, s2.round());
    }

    #[test]
    fn linking_and_writhe_are_rigid_invariants(
        axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        angle in 0.0f64..TAU,
        shift in (-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0),
    ) {
        let rot = Mat3::rotation(Vec3::new(axis.0, axis.1, axis.2).normalize(), angle);
        let c = Vec3::new(shift.0, shift.1, shift.2);
        let [a, b] = hopf_rings(40.5, 256).unwrap();
        let l0 = linking_number(&a, &b).unwrap();
        let l1 = linking_number(&a.rotated(&rot).translated(c), &b.rotated(&rot).translated(c)).unwrap();
        prop_assert_eq!(l0.rounded, l1.rounded);
        prop_assert!((l0.raw - l1.raw).abs() < 1e-9);
        let k = small_knot();
        prop_assert!((writhe(&k) - writhe(&k.rotated(&rot).translated(c))).abs() < 1e-9);
    }
}
