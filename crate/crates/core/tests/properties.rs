use std::sync::Arc;

use proptest::prelude::*;

use fracdir::fields::{Bump, Combination, Constant, FieldRef};
use fracdir::fraclap::fraclap_pv;
use fracdir::geometry::{Domain, PartitionFamily, RegularizedDistance, Side};
use fracdir::kernels::{poisson_kernel, StableParams};
use fracdir::solvers::{green_potential_ball, solve_elliptic_kernel, ExteriorData};
use fracdir::spaces::{weighted_lp_norm, NormOptions, WeightSpec};
use fracdir::stochastic::{run_paths, stable_scalar};
use fracdir::Point;

fn domain(kind: u8, d: usize) -> Domain {
    match kind % 3 {
        0 => Domain::half_space(d),
        1 => Domain::ball(Point::new(&vec![0.25; d]), 1.5),
        _ => Domain::ball_complement(Point::zeros(d), 0.75),
    }
}

fn point(v: &[f64], d: usize) -> Point {
    Point::new(&v[..d])
}

proptest! {
    #[test]
    fn distance_is_one_lipschitz(
        kind in 0u8..3,
        d in 1usize..=3,
        a in prop::collection::vec(-3.0f64..3.0, 3),
        b in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let dom = domain(kind, d);
        let (x, y) = (point(&a, d), point(&b, d));
        prop_assert!((dom.dist_to_boundary(&x) - dom.dist_to_boundary(&y)).abs() <= x.dist(&y) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn point_at_distance_round_trips(kind in 0u8..3, d in 1usize..=3, ls in -6.0f64..0.0, outside in any::<bool>()) {
        let dom = domain(kind, d);
        let s = 10f64.powf(ls) * 0.7;
        let side = if outside { Side::Outside } else { Side::Inside };
        let x = dom.point_at_distance(side, s);
        prop_assert!(dom.in_side(side, &x));
        prop_assert!((dom.dist_to_boundary(&x) - s).abs() <= 1e-12 * (1.0 + s) + 4.0 * f64::EPSILON);
    }

    #[test]
    fn psi_comparable_to_distance_and_log_periodic(ls in -8.0f64..8.0) {
        let psi = RegularizedDistance::standard(Domain::half_space(1));
        let cal = psi.calibrate();
        let s = 10f64.powf(ls);
        let r = psi.of_distance(s) / s;
        prop_assert!(r >= cal.c1 * (1.0 - 1e-9) && r <= cal.c2 * (1.0 + 1e-9), "{r} not in [{}, {}]", cal.c1, cal.c2);
        let r_next = psi.of_distance(s * std::f64::consts::E) / (s * std::f64::consts::E);
        prop_assert!((r - r_next).abs() <= 1e-9 * r);
        let sum = psi.partition.sum_of_distance(s);
        prop_assert!(sum >= cal.sum_lower * (1.0 - 1e-9) && sum <= cal.sum_upper * (1.0 + 1e-9));
    }

    #[test]
    fn partition_members_are_bounded_by_one(n in -20i32..20, ls in -10.0f64..10.0, k1 in 0.2f64..2.0, stretch in 1.05f64..3.0) {
        let p = PartitionFamily::new(Domain::half_space(2), k1, k1 * std::f64::consts::E * stretch).unwrap();
        let z = p.zeta_of_distance(n, 10f64.powf(ls));
        prop_assert!((0.0..=1.0).contains(&z));
    }

    #[test]
    fn half_space_poisson_kernel_scales(alpha in 0.2f64..1.9, d in 1usize..=3, lam in 0.01f64..100.0, xs in 0.01f64..5.0, zs in 0.01f64..5.0, t in -2.0f64..2.0) {
        let p = StableParams::new(d, alpha).unwrap();
        let h = Domain::half_space(d);
        let mut xv = vec![0.0; d];
        let mut zv = vec![0.0; d];
        xv[0] = xs;
        zv[0] = -zs;
        if d > 1 {
            zv[1] = t;
        }
        let (x, z) = (Point::new(&xv), Point::new(&zv));
        let k = poisson_kernel(&h, &p, &x, &z).unwrap();
        let kl = poisson_kernel(&h, &p, &(x * lam), &(z * lam)).unwrap();
        prop_assert!(k > 0.0);
        prop_assert!((kl * lam.powi(d as i32) / k - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stability_index_outside_range_is_rejected(d in 1usize..=3, a in prop_oneof![-5.0f64..=0.0, 2.0f64..5.0]) {
        prop_assert!(StableParams::new(d, a).is_err());
    }

    #[test]
    fn stable_draws_are_reproducible(seed in any::<u64>(), alpha in 0.3f64..1.95) {
        let a = run_paths(300, seed, 7, |rng| stable_scalar(alpha, rng));
        let b = run_paths(300, seed, 7, |rng| stable_scalar(alpha, rng));
        let c = run_paths(300, seed, 8, |rng| stable_scalar(alpha, rng));
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &c);
        prop_assert!(a.iter().all(|v| v.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ball_poisson_kernel_has_unit_mass(alpha in 0.3f64..1.8, x in -0.9f64..0.9) {
        let p = StableParams::new(1, alpha).unwrap();
        let one = ExteriorData::ClosedForm(Arc::new(Constant { dim: 1, value: 1.0 }));
        let u = solve_elliptic_kernel(&Domain::unit_ball(1), &p, &one, &Point::scalar(x)).unwrap();
        prop_assert!((u.value - 1.0).abs() < 1e-7, "{}", u.value);
    }

    #[test]
    fn elliptic_solution_is_linear_and_positive(
        alpha in 0.3f64..1.8,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c1 in 1.3f64..4.0,
        c2 in -4.0f64..-1.3,
        x in -0.95f64..0.95,
    ) {
        let p = StableParams::new(1, alpha).unwrap();
        let ball = Domain::unit_ball(1);
        let g1: FieldRef = Arc::new(Bump::new(Point::scalar(c1), 0.25));
        let g2: FieldRef = Arc::new(Bump::new(Point::scalar(c2), 0.25));
        let sum: FieldRef = Arc::new(Combination::new(vec![(a, g1.clone()), (b, g2.clone())]));
        let xp = Point::scalar(x);
        let e1 = solve_elliptic_kernel(&ball, &p, &ExteriorData::ClosedForm(g1), &xp).unwrap();
        let e2 = solve_elliptic_kernel(&ball, &p, &ExteriorData::ClosedForm(g2), &xp).unwrap();
        let es = solve_elliptic_kernel(&ball, &p, &ExteriorData::ClosedForm(sum), &xp).unwrap();
        let (u1, u2) = (e1.value, e2.value);
        prop_assert!(u1 > 0.0 && u2 > 0.0 && u1 <= 1.0 && u2 <= 1.0);
        let tol = es.error + a.abs() * e1.error + b.abs() * e2.error + 1e-6 * (a.abs() * u1 + b.abs() * u2) + 1e-15;
        let diff = (es.value - a * u1 - b * u2).abs();
        prop_assert!(diff <= tol, "{diff:e} > {tol:e}");
    }

    #[test]
    fn green_potential_of_nonnegative_source_is_positive(alpha in 0.3f64..1.8, c in -0.6f64..0.6, x in -0.95f64..0.95) {
        let p = StableParams::new(1, alpha).unwrap();
        let f = Bump::new(Point::scalar(c), 0.3);
        let g = green_potential_ball(&Domain::unit_ball(1), &p, &f, &Point::scalar(x)).unwrap();
        prop_assert!(g.value > 0.0, "{g:?}");
    }

    #[test]
    fn fractional_laplacian_is_linear(alpha in 0.3f64..1.8, a in -2.0f64..2.0, x in -1.0f64..1.0) {
        let p = StableParams::new(1, alpha).unwrap();
        let u: FieldRef = Arc::new(Bump::new(Point::scalar(0.0), 0.7));
        let v: FieldRef = Arc::new(Bump::new(Point::scalar(0.4), 0.3));
        let w = Combination::new(vec![(a, u.clone()), (1.0, v.clone())]);
        let xp = Point::scalar(x);
        let lu = fraclap_pv(u.as_ref(), &p, &xp).unwrap();
        let lv = fraclap_pv(v.as_ref(), &p, &xp).unwrap();
        let lw = fraclap_pv(&w, &p, &xp).unwrap();
        let scale = a.abs() * lu.value.abs() + lv.value.abs();
        prop_assert!((lw.value - a * lu.value - lv.value).abs() <= 1e-6 * scale + lw.error + lu.error + lv.error + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn weighted_norms_are_absolutely_homogeneous(c in -5.0f64..5.0, s in 0.01f64..3.0, theta in 0.2f64..1.8) {
        prop_assume!(c.abs() > 1e-3);
        let h = Domain::half_space(1);
        let spec = WeightSpec::new(2.0, theta, 0.0, 0).unwrap();
        let u: FieldRef = Arc::new(Bump::new(h.point_at_distance(Side::Inside, s), 0.5 * s));
        let cu = Combination::new(vec![(c, u.clone())]);
        let opts = NormOptions::default();
        let a = weighted_lp_norm(u.as_ref(), &h, Side::Inside, &spec, &opts).unwrap().value;
        let b = weighted_lp_norm(&cu, &h, Side::Inside, &spec, &opts).unwrap().value;
        prop_assert!((b / (c.abs() * a) - 1.0).abs() < 1e-12, "{}", b / (c.abs() * a) - 1.0);
    }
}
