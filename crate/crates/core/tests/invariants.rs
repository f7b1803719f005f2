mod common;

use common::{c, random_density, rng};
use proptest::prelude::*;
use rand::Rng;
use spinboson::heom::{heom_rhs, Hierarchy, HierarchyState, ADO_LEN};
use spinboson::observables::{blp_witness, l1_coherence, trace_distance, von_neumann_entropy};
use spinboson::rcm::{build_rc_dissipator, build_supersystem, RcParams, RcmGenerator};
use spinboson::{build_system_hamiltonian, ComplexOperator, ModelConfig, C64};

fn config(alpha: f64, j: f64, t1: f64, t2: f64, k: usize, l: usize) -> ModelConfig {
    let mut cfg = ModelConfig::preset("WWW").unwrap();
    cfg.bath1.alpha = alpha;
    cfg.bath2.alpha = 0.5 * alpha;
    cfg.j = j;
    cfg.bath1.temperature = t1;
    cfg.bath2.temperature = t2;
    cfg.numerics.k = k;
    cfg.numerics.l = l;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_matrices_are_valid_states(seed in any::<u64>(), d in prop::sample::select(vec![2usize, 4, 8])) {
        let rho = random_density(&mut rng(seed), d);
        prop_assert!((rho.as_op().trace() - c(1.0)).norm() < 1e-12);
        prop_assert!(rho.as_op().hermiticity_error() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
        let s = von_neumann_entropy(&rho);
        prop_assert!(s >= -1e-12 && s <= (d as f64).ln() + 1e-12);
        let coh = l1_coherence(&rho);
        prop_assert!(coh >= 0.0 && coh <= (d - 1) as f64 + 1e-12);
    }

    #[test]
    fn trace_distance_is_a_bounded_symmetric_metric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_density(&mut r, 4), random_density(&mut r, 4));
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn unitary_generator_preserves_hermiticity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = random_density(&mut r, 4).into_op();
        let rho = random_density(&mut r, 4).into_op();
        let drho = h.commutator(&rho).scale(C64::new(0.0, -1.0));
        prop_assert!(drho.hermiticity_error() < 1e-14);
        prop_assert!(drho.trace().norm() < 1e-14);
    }

    #[test]
    fn blp_measure_is_nonnegative(series in prop::collection::vec(0.0f64..1.0, 2..64)) {
        let w = blp_witness(&series).unwrap();
        prop_assert!(w.measure >= 0.0);
        prop_assert!(w.revivals <= series.len() / 2);
        let monotone: Vec<f64> = (0..series.len()).map(|i| -(i as f64)).collect();
        prop_assert_eq!(blp_witness(&monotone).unwrap().measure, 0.0);
    }

    #[test]
    fn hierarchy_links_are_mutual(k in 0usize..4, l in 0usize..5) {
        let h = Hierarchy::build(&config(0.02, 0.02, 1.0, 1.3, k, l)).unwrap();
        for p in 0..h.len() {
            prop_assert!(h.index(p).tier() <= l);
            for m in 0..h.n_modes() {
                if let Some(q) = h.up(p, m) {
                    prop_assert_eq!(h.down(q, m), Some(p));
                    prop_assert_eq!(h.index(q).tier(), h.index(p).tier() + 1);
                }
                if let Some(q) = h.down(p, m) {
                    prop_assert_eq!(h.up(q, m), Some(p));
                }
            }
        }
    }

    #[test]
    fn heom_generator_annihilates_the_trace(
        seed in any::<u64>(),
        alpha in 0.0f64..1.0,
        j in 0.0f64..1.0,
        t1 in 0.5f64..2.0,
        t2 in 0.5f64..2.0,
        k in 0usize..3,
    ) {
        let cfg = config(alpha, j, t1, t2, k, 2);
        let h = Hierarchy::build(&cfg).unwrap();
        let mut r = rng(seed);
        let mut data: Vec<C64> = (0..h.len() * ADO_LEN)
            .map(|_| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        data[..ADO_LEN].copy_from_slice(&random_density(&mut r, 4).as_op().column_stacked());
        let x = HierarchyState::from_vec(&h, data).unwrap();
        let d = heom_rhs(&h, &build_system_hamiltonian(&cfg), &x).unwrap();
        let tr = ComplexOperator::from_column_stacked(4, &d.as_slice()[..ADO_LEN]).trace();
        prop_assert!(tr.norm() < 1e-12, "{}", tr);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rcm_generator_preserves_trace_and_hermiticity(
        seed in any::<u64>(),
        alpha in 0.001f64..0.8,
        t1 in 0.5f64..2.0,
        t2 in 0.5f64..2.0,
    ) {
        let cfg = config(alpha, 0.05, t1, t2, 0, 0);
        let rc = RcParams::from_config(&cfg).unwrap();
        let sys = build_supersystem(&cfg, &rc, 2).unwrap();
        let diss = build_rc_dissipator(&sys, t1, t2).unwrap();
        let gen = RcmGenerator::new(&sys, &diss, false).unwrap();
        let d = sys.dim();
        let rho = random_density(&mut rng(seed), d);
        let mut dy = vec![c(0.0); d * d];
        gen.apply(&rho.as_op().column_stacked(), &mut dy);
        let drho = ComplexOperator::from_column_stacked(d, &dy);
        let scale = drho.max_abs().max(1.0);
        prop_assert!(drho.trace().norm() < 1e-12 * scale, "{}", drho.trace());
        prop_assert!(drho.hermiticity_error() < 1e-12 * scale);
    }
}
