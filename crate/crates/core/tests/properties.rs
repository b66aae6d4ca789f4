use std::f64::consts::PI;

use nldiff::kernels::{
    convolve, resolvent_kernel, sample_cell_averages, DiscreteKernel, KernelPair, KernelSide, TimeGrid,
};
use nldiff::nonlocal::{ConvexFn, NonlocalOperator};
use nldiff::solver::{solve, Forcing, Nonlinearity, ProblemSpec, SolverConfig, TimeKernels};
use nldiff::spatial::{hminus1_norm, norms, stiffness_from_cells, CoefficientField, Mesh1D};
use nldiff::verify::mittag_leffler;
use proptest::prelude::*;

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn power_law_weights_are_positive_and_nonincreasing(beta in 0.01f64..0.99, n in 2usize..300) {
        let k = DiscreteKernel::power_law(beta, grid(n)).unwrap();
        prop_assert!(k.weights().iter().all(|w| *w > 0.0));
        prop_assert_eq!(k.monotonicity_defect(), 0.0);
    }

    #[test]
    fn convolution_is_linear(
        alpha in 0.05f64..0.95,
        v in prop::collection::vec(-2.0f64..2.0, 17),
        w in prop::collection::vec(-2.0f64..2.0, 17),
        c in -3.0f64..3.0,
    ) {
        let k = DiscreteKernel::power_law(alpha, grid(16)).unwrap();
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + c * b).collect();
        let lhs = convolve(&k, &sum).unwrap();
        let (kv, kw) = (convolve(&k, &v).unwrap(), convolve(&k, &w).unwrap());
        for n in 0..17 {
            let rhs = kv[n] + c * kw[n];
            prop_assert!((lhs[n] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs() + kv[n].abs() + kw[n].abs()));
        }
    }

    #[test]
    fn resolvent_family_keeps_its_structure(alpha in 0.05f64..0.95, gamma in 0.0f64..50.0, n in 4usize..256) {
        let l = sample_cell_averages(&KernelPair::fractional(alpha).unwrap(), KernelSide::L, grid(n)).unwrap();
        let res = resolvent_kernel(&l, gamma).unwrap();
        prop_assert!(res.h.negativity_defect() <= 1e-12);
        prop_assert!(res.s.monotonicity_defect() <= 1e-10);
        prop_assert!(res.s.weights().iter().all(|s| *s <= 1.0 + 1e-12 && *s >= -1e-12));
        for (h, r) in res.h.weights().iter().zip(res.r.weights()) {
            prop_assert_eq!(*h, gamma * r);
        }
    }

    #[test]
    fn convexity_margin_is_nonnegative(
        alpha in 0.05f64..0.95,
        v in prop::collection::vec(-1.5f64..1.5, 33),
        which in 0usize..3,
        eps in 0.01f64..1.0,
    ) {
        let k = sample_cell_averages(&KernelPair::fractional(alpha).unwrap(), KernelSide::K, grid(32)).unwrap();
        let op = NonlocalOperator::new(k).unwrap();
        let h = [ConvexFn::Square, ConvexFn::SmoothAbs { eps }, ConvexFn::Exp][which];
        let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let margin = op.convexity_margin(&h, &v, v[0]).unwrap();
        prop_assert!(margin >= -1e-10 * (1.0 + sup * sup), "margin {}", margin);
    }

    #[test]
    fn affine_convex_functions_have_zero_margin(slope in -3.0f64..3.0, v in prop::collection::vec(-1.0f64..1.0, 17)) {
        let op = NonlocalOperator::new(DiscreteKernel::power_law(0.5, grid(16)).unwrap()).unwrap();
        let margin = op.convexity_margin(&ConvexFn::Linear { slope }, &v, v[0]).unwrap();
        prop_assert!(margin.abs() <= 1e-10);
    }

    #[test]
    fn thomas_solve_inverts_the_stiffness(
        a in prop::collection::vec(0.05f64..5.0, 12),
        rhs in prop::collection::vec(-10.0f64..10.0, 11),
    ) {
        let mesh = Mesh1D::new(1.0, 12).unwrap();
        let k = stiffness_from_cells(&mesh, &a).unwrap();
        prop_assert!(k.is_m_matrix());
        prop_assert!(k.asymmetry() <= 1e-12);
        let x = k.solve(&rhs).unwrap();
        let back = k.mul(&x);
        let scale = rhs.iter().fold(1.0f64, |m, r| m.max(r.abs()));
        for (b, r) in back.iter().zip(&rhs) {
            prop_assert!((b - r).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn hminus1_is_bounded_by_l2(w in prop::collection::vec(-3.0f64..3.0, 15)) {
        let mesh = Mesh1D::new(2.0, 16).unwrap();
        let full = mesh.with_boundary(&w);
        let l2_sq = mesh.h() * w.iter().map(|x| x * x).sum::<f64>();
        let hm1 = hminus1_norm(&mesh, &w).unwrap();
        prop_assert!(hm1 * hm1 <= l2_sq / mesh.min_eigenvalue() * (1.0 + 1e-10) + 1e-300);
        prop_assert!(norms(&mesh, &full).unwrap().l2 >= 0.0);
    }

    #[test]
    fn truncation_matches_phi_inside_and_is_c1_at_the_cut(m in 1.0f64..4.0, bound in 0.5f64..3.0) {
        let phi = Nonlinearity::power(m).unwrap();
        let t = phi.truncate(bound).unwrap();
        for r in [-bound, -0.5 * bound, 0.0, 0.3 * bound, bound] {
            prop_assert!((t.phi(r) - phi.phi(r)).abs() <= 1e-12 * (1.0 + phi.phi(r).abs()));
        }
        let d = 1e-7 * bound;
        for edge in [-bound, bound] {
            let jump = t.phi(edge + d) - t.phi(edge - d);
            prop_assert!(jump.abs() <= 3.0 * d * phi.dphi(edge) + 1e-12);
            prop_assert!((t.dphi(edge + d) - t.dphi(edge - d)).abs() <= 1e-5 * (1.0 + phi.dphi(edge)));
        }
        let xs: Vec<f64> = (0..=80).map(|i| -2.0 * bound + 4.0 * bound * i as f64 / 80.0).collect();
        prop_assert!(xs.windows(2).all(|p| t.phi(p[1]) >= t.phi(p[0])));
    }

    #[test]
    fn secant_lies_between_endpoint_slopes(m in 1.0f64..4.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let phi = Nonlinearity::power(m).unwrap();
        let s = phi.secant(a, b);
        let lo = phi.dphi(a).min(phi.dphi(b)).min(phi.dphi(0.0));
        let hi = phi.dphi(a).max(phi.dphi(b));
        prop_assert!(s >= lo - 1e-9 && s <= hi + 1e-9 * (1.0 + hi));
    }

    #[test]
    fn mittag_leffler_is_a_decreasing_probability(alpha in 0.05f64..1.0, x in 0.0f64..40.0, dx in 0.01f64..5.0) {
        let a = mittag_leffler(alpha, -x).unwrap();
        let b = mittag_leffler(alpha, -x - dx).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a);
    }
}

fn sine_problem(m: f64, amplitude: f64, alpha: f64) -> ProblemSpec {
    let mesh = Mesh1D::new(1.0, 8).unwrap();
    let grid = TimeGrid::new(0.5, 8).unwrap();
    let mut u0: Vec<f64> = mesh.nodes().iter().map(|x| amplitude * (PI * x).sin()).collect();
    u0[0] = 0.0;
    u0[8] = 0.0;
    ProblemSpec::new(
        mesh,
        grid,
        TimeKernels::from_pair(KernelPair::fractional(alpha).unwrap(), grid).unwrap(),
        CoefficientField::constant(1.0).unwrap(),
        Nonlinearity::power(m).unwrap(),
        u0,
        Forcing::Zero,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solutions_obey_the_maximum_principle(m in 1.0f64..4.0, amplitude in -2.0f64..2.0, alpha in 0.1f64..0.9) {
        let spec = sine_problem(m, amplitude, alpha);
        let sol = solve(&spec, &SolverConfig::default()).unwrap();
        prop_assert!(sol.sup() <= spec.u0_sup() + 1e-10);
        let sign = amplitude.signum();
        for row in &sol.u {
            prop_assert!(row.iter().all(|u| sign * u >= -1e-10));
        }
    }

    #[test]
    fn odd_laws_give_odd_solutions(m in 1.0f64..4.0, amplitude in 0.1f64..2.0) {
        let plus = solve(&sine_problem(m, amplitude, 0.5), &SolverConfig::default()).unwrap();
        let minus = solve(&sine_problem(m, -amplitude, 0.5), &SolverConfig::default()).unwrap();
        for (a, b) in plus.u.iter().flatten().zip(minus.u.iter().flatten()) {
            prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn kernel_csv_round_trips() {
    let g = grid(32);
    let k = sample_cell_averages(&KernelPair::tempered(0.3, 2.0).unwrap(), KernelSide::L, g).unwrap();
    let back = DiscreteKernel::from_csv(k.to_csv().as_bytes(), g).unwrap();
    assert_eq!(back, k);
}
