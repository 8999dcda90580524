use proptest::prelude::*;

use nhse_core::c64;
use nhse_core::dynamics::{correlation_from_orbitals, steady_state_projection, ProjectionOptions};
use nhse_core::entanglement::{
    entropy_curve, entropy_from_correlation, steady_state_curve, SteadyOptions,
};
use nhse_core::model::{apply_igt, build_full, build_hn, Decay, ModelParams};
use nhse_core::spectral::{eig_dense, polylog, PolylogOptions};
use nhse_core::sweep::{build_config, parse_entries, TaskKind};

fn decay() -> impl Strategy<Value = Decay> {
    prop_oneof![
        4 => (0.0..4.0f64).prop_map(Decay::Power),
        1 => Just(Decay::NearestNeighbor),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hopping_follows_the_power_law(
        jl in 0.1..3.0f64, jr in 0.1..3.0f64, a in 0.0..4.0f64, l in 2usize..24,
    ) {
        let p = ModelParams::new(c64::new(jl, 0.0), c64::new(jr, 0.0), Decay::Power(a), l).unwrap();
        let h = build_full(&p).unwrap();
        for i in 1..=l {
            prop_assert_eq!(h.site(i, i), c64::new(0.0, 0.0));
            for d in 1..=l - i {
                let w = (d as f64).powf(-a);
                prop_assert!((h.site(i, i + d) - jl * w).norm() <= 1e-14 * jl);
                prop_assert!((h.site(i + d, i) - jr * w).norm() <= 1e-14 * jr);
            }
        }
    }

    #[test]
    fn gauge_transform_symmetrises_nearest_neighbour_hopping(g in -1.5..1.5f64, l in 2usize..30) {
        let p = ModelParams::from_g(g, Decay::NearestNeighbor, l).unwrap();
        let h = build_hn(&p).unwrap();
        let t = apply_igt(&h, g);
        for i in 1..l {
            prop_assert!((t.site(i, i + 1) - t.site(i + 1, i)).norm() < 1e-12);
        }
        let spec = eig_dense(&h, None).unwrap();
        for e in &spec.eigenvalues {
            prop_assert!(e.im.abs() <= spec.reality_tol);
            prop_assert!(e.re.abs() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn real_couplings_give_conjugate_closed_spectra(
        g in -1.0..1.0f64, d in decay(), l in 2usize..40,
    ) {
        let p = ModelParams::from_g(g, d, l).unwrap();
        let spec = eig_dense(&build_full(&p).unwrap(), None).unwrap();
        let ev = &spec.eigenvalues;
        for e in ev {
            let nearest = ev.iter().map(|f| (f - e.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-8 * (1.0 + e.norm()));
        }
        let trace: c64 = ev.iter().sum();
        prop_assert!(trace.norm() <= 1e-8 * l as f64 * (1.0 + spec.eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max)));
    }

    #[test]
    fn steady_entropy_is_pure_and_bounded(
        r in 0.5..1.5f64, phi in -1.0..1.0f64, a in 0.2..3.0f64, half in 2usize..7,
    ) {
        let l = 2 * half;
        let p = ModelParams::new(c64::from_polar(r, phi), c64::new(1.0, 0.0), Decay::Power(a), l).unwrap();
        let h = build_full(&p).unwrap();
        let ss = steady_state_projection(&h, half, ProjectionOptions::default());
        prop_assume!(ss.is_ok());
        let state = ss.unwrap().state;
        let c = correlation_from_orbitals(&state);
        let curve = entropy_curve(&state).unwrap();
        for (k, &cut) in curve.cuts.iter().enumerate() {
            let s = curve.entropy[k];
            prop_assert!(s >= -1e-12);
            prop_assert!(s <= cut.min(l - cut) as f64 * 2f64.ln() + 1e-9);
            let rest: Vec<usize> = (cut + 1..=l).collect();
            prop_assert!((s - entropy_from_correlation(&c, &rest).unwrap()).abs() <= 1e-8);
        }
    }

    #[test]
    fn real_coupling_steady_entropy_is_mirror_symmetric(g in 0.1..1.5f64, half in 2usize..10) {
        let l = 2 * half;
        let p = ModelParams::from_g(g, Decay::Power(0.0), l).unwrap();
        let (_, curve) = steady_state_curve(&p, SteadyOptions::default()).unwrap();
        for k in 0..curve.entropy.len() {
            prop_assert!((curve.entropy[k] - curve.entropy[l - 2 - k]).abs() <= 1e-6);
        }
    }

    #[test]
    fn polylog_matches_a_direct_sum(a in 2.5..5.0f64, t in 0.0..6.3f64) {
        let z = c64::cis(t);
        let direct: c64 = (1..200_000).map(|n| z.powi(n) / (n as f64).powf(a)).sum();
        let p = polylog(a, z, PolylogOptions::default()).unwrap();
        prop_assert!((p.value - direct).norm() < 1e-6);
    }

    #[test]
    fn size_ranges_expand_inclusively(start in 2usize..30, span in 0usize..40, step in 1usize..7) {
        let stop = start + span;
        let text = format!("g = 0.1\nalpha = 1\nL = {start}:{stop}:{step}");
        let cfg = build_config(Some(TaskKind::Transition), &parse_entries(&text).unwrap()).unwrap();
        let expected: Vec<usize> = (start..=stop).step_by(step).collect();
        prop_assert_eq!(cfg.sizes, expected);
    }
}
