use proptest::prelude::*;

use rhokit::ends::{classify_end, schwarz_check, EndProfile, EndStatus};
use rhokit::profiles::{Domain, GridSpec, ScalarProfile};
use rhokit::rho_metric::RhoDistanceTable;
use rhokit::rigidity::{comparison_check, cosh_power_model, integrate_warp, WarpBuilder};
use rhokit::warped::{DomainKind, FiberData, WarpedModel, Warping};
use rhokit::weights::{green_weight_model, WeightProfile};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn ricci_is_a_sum_of_sectional_curvatures(n in 3usize..8, a in 0.1f64..2.0, t in -3.0f64..3.0) {
        let m = WarpedModel::new(n, DomainKind::FullLine, Warping::exponential(a), FiberData::flat(1.0)).unwrap();
        let nm1 = n as f64 - 1.0;
        let kr = m.sectional_radial(t).unwrap();
        let kf = m.sectional_fiber(t).unwrap();
        prop_assert!((m.ricci_radial(t).unwrap() - nm1 * kr).abs() < 1e-9);
        prop_assert!((m.ricci_fiber(t).unwrap() - (kr + (nm1 - 1.0) * kf)).abs() < 1e-9);
        prop_assert!((kr + a * a).abs() < 1e-9);
    }

    #[test]
    fn sampled_profiles_reproduce_lines(slope in -5.0f64..5.0, icpt in -5.0f64..5.0, t in 0.0f64..10.0) {
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let vs: Vec<f64> = ts.iter().map(|x| slope * x + icpt).collect();
        let p = ScalarProfile::from_samples(&ts, &vs).unwrap();
        prop_assert!((p.eval(t).unwrap() - (slope * t + icpt)).abs() < 1e-10);
        prop_assert!((p.derivative(t, 1).unwrap() - slope).abs() < 1e-8);
    }

    #[test]
    fn rho_distance_is_monotone_and_invertible(c in 0.1f64..10.0, p in -1.5f64..1.5, target in 0.05f64..0.95) {
        let w = WeightProfile::user(ScalarProfile::analytic(Domain::positive(), move |r: f64, k| match k {
            0 => c * r.powf(p),
            1 => c * p * r.powf(p - 1.0),
            _ => c * p * (p - 1.0) * r.powf(p - 2.0),
        }));
        let table = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(0.5, 20.0, 40).unwrap()).unwrap();
        prop_assert!(table.r_rho.windows(2).all(|v| v[1] > v[0]));
        let (lo, hi) = table.range();
        let d = lo + target * (hi - lo);
        let r = table.inverse(d).unwrap();
        prop_assert!((table.forward(r).unwrap() - d).abs() < 1e-10 * d.abs().max(1.0));
    }

    #[test]
    fn integrated_warp_recovers_its_source(base in 0.5f64..3.0, amp in 0.0f64..0.4, deta0 in -0.5f64..0.5, n in 3usize..7) {
        let d = Domain::new(0.0, 3.0).unwrap();
        let tau = ScalarProfile::analytic(d, move |t: f64, k| match k {
            0 => base * (1.0 + amp * t.sin()),
            1 => base * amp * t.cos(),
            _ => -base * amp * t.sin(),
        });
        let eta = integrate_warp(&WarpBuilder { tau: tau.clone(), eta0: 1.0, deta0, domain: d, step: 1e-3 }).unwrap();
        let m = WarpedModel::new(n, DomainKind::FullLine, Warping::Direct(eta), FiberData::flat(1.0)).unwrap();
        let w = m.natural_weight();
        let scale = n as f64 - 2.0;
        for t in [0.3, 1.0, 1.7, 2.6] {
            let got = w.eval(t).unwrap();
            prop_assert!((got - scale * tau.eval(t).unwrap()).abs() < 1e-6 * scale.max(1.0) * base, "t = {}: {}", t, got);
        }
    }

    #[test]
    fn cosh_power_models_are_even_and_pass(alpha in 1.0f64..4.0, c1 in 1.0f64..2.0, n in 3usize..6, t in 0.0f64..20.0) {
        let (m, w, report) = cosh_power_model(alpha, c1, 0.5, n).unwrap();
        prop_assert!(report.passes());
        let a = m.jet(t).unwrap();
        let b = m.jet(-t).unwrap();
        prop_assert!((a.log_eta - b.log_eta).abs() <= 1e-10 * a.log_eta.abs().max(1.0));
        prop_assert!((a.dlog + b.dlog).abs() <= 1e-10 * a.dlog.abs().max(1.0));
        let (wa, wb) = (w.eval(t).unwrap(), w.eval(-t).unwrap());
        prop_assert!((wa - wb).abs() <= 1e-6 * wa.abs().max(1.0));
    }

    #[test]
    fn green_weight_exists_exactly_on_nonparabolic_ends(n in 3usize..7, kind in 0u8..3, c in 0.2f64..3.0) {
        let m = match kind {
            0 => WarpedModel::euclidean(n).unwrap(),
            1 => WarpedModel::hyperbolic(n).unwrap(),
            _ => WarpedModel::new(n, DomainKind::FullLine, Warping::constant(c).unwrap(), FiberData::flat(1.0)).unwrap(),
        };
        let status = classify_end(&EndProfile::from_model(&m, 1.0, "end").unwrap()).unwrap().status;
        prop_assert_ne!(status, EndStatus::Inconclusive);
        prop_assert_eq!(green_weight_model(&m).is_ok(), status == EndStatus::Nonparabolic);
    }

    #[test]
    fn schwarz_inequality_holds(n in 2usize..6, c in 0.1f64..5.0, p in -2.5f64..1.0) {
        let e = EndProfile::euclidean(n).unwrap();
        let w = WeightProfile::user(ScalarProfile::analytic(Domain::positive(), move |r: f64, k| match k {
            0 => c * r.powf(p),
            1 => c * p * r.powf(p - 1.0),
            _ => c * p * (p - 1.0) * r.powf(p - 2.0),
        }));
        let table = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 50.0, 30).unwrap()).unwrap();
        for s in schwarz_check(&e, &w, &table, &[2.0, 5.0, 20.0, 50.0]).unwrap() {
            prop_assert!(s.holds, "r = {}: {} > {}", s.r, s.lhs, s.rhs);
        }
    }

    #[test]
    fn constant_weight_meets_comparison_with_equality(n in 4usize..9, c in 0.05f64..5.0) {
        let w = WeightProfile::user(ScalarProfile::constant(Domain::positive(), c));
        let table = RhoDistanceTable::build(&w, 1.0, &GridSpec::log_spaced(1.0, 30.0, 60).unwrap()).unwrap();
        let r = comparison_check(&w, n, 1.0, &table).unwrap();
        prop_assert!(r.max_gap <= 1e-9, "gap {}", r.max_gap);
    }
}
