use proptest::prelude::*;

use rfowc::config::RunConfig;
use rfowc::dual_hop::{DualHop, DualHopParams};
use rfowc::montecarlo::{estimate_sop, McRun};
use rfowc::par::Execution;
use rfowc::rf::{rwp_distance_cdf, RfLinkParams, StatRoute};
use rfowc::secrecy::{Scenario, ScenarioConfig, Secrecy, SeriesControl};
use rfowc::specfun::meijer::EvalOptions;
use rfowc::uowc::{Detection, UowcLinkParams};

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![Just(Scenario::I), Just(Scenario::II), Just(Scenario::III)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eq_cdf_between_hop_bounds(rf_db in 10.0..50.0f64, d_db in 0.0..40.0f64, imdd in any::<bool>(), lg in -3.0..3.0f64) {
        let p = DualHopParams {
            rf: RfLinkParams { gbar: db(rf_db), ..Default::default() },
            uowc: UowcLinkParams { gbar: db(d_db), detection: if imdd { Detection::Imdd } else { Detection::Hd }, ..Default::default() },
        };
        let h = DualHop::new(&p).unwrap();
        let o = EvalOptions::default();
        let g = 10f64.powf(lg);
        let fr = h.rf.cdf(g, StatRoute::Reduced, &o).unwrap();
        let fd = h.uowc.cdf(g, StatRoute::Reduced, &o).unwrap();
        let f = h.eq_cdf(g, StatRoute::Reduced, &o).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f >= fr.max(fd) - 1e-14 && f <= fr + fd + 1e-14);
        let f2 = h.eq_cdf(2.0 * g, StatRoute::Reduced, &o).unwrap();
        prop_assert!(f2 >= f - 1e-14);
    }

    #[test]
    fn sop_monotone_in_rate_and_identities(sc in scenario(), a in 0.0..3.0f64, b in 0.0..3.0f64, main in 20.0..40.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut c = ScenarioConfig { scenario: sc, ..Default::default() };
        c.rf_main.gbar = db(main);
        c.uowc_main.gbar = db(main - 10.0);
        let ctl = SeriesControl::default();
        let s_lo = Secrecy::new(&c.with_rs(lo)).unwrap();
        let p_lo = s_lo.sop_lower(&ctl).unwrap().value;
        let p_hi = Secrecy::new(&c.with_rs(hi)).unwrap().sop_lower(&ctl).unwrap().value;
        prop_assert!(p_lo <= p_hi + 1e-12, "{p_lo} > {p_hi}");
        prop_assert_eq!(s_lo.est(&ctl).unwrap().value, lo * (1.0 - p_lo));
        let p0 = Secrecy::new(&c.with_rs(0.0)).unwrap().sop_lower(&ctl).unwrap().value;
        prop_assert_eq!(s_lo.spsc(&ctl).unwrap().value, 1.0 - p0);
    }

    #[test]
    fn mc_reproducible_across_execution(seed in any::<u64>(), sc in scenario()) {
        let c = ScenarioConfig { scenario: sc, ..Default::default() };
        let par = McRun { exec: Execution::Parallel, ..McRun::new(20_000, seed) };
        let seq = McRun { exec: Execution::Sequential, ..par };
        prop_assert_eq!(estimate_sop(&c, &par).unwrap(), estimate_sop(&c, &seq).unwrap());
    }

    #[test]
    fn rwp_cdf_is_a_distribution(q in 0.0..1.0f64, d in 1.0..500.0f64) {
        let f = rwp_distance_cdf(q * d, d);
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&f));
        prop_assert!(rwp_distance_cdf((q * d + 0.01 * d).min(d), d) >= f - 1e-15);
    }

    #[test]
    fn db_settings_convert_once(x in -20.0..60.0f64) {
        let c = RunConfig::from_toml(&format!("[rf_eve]\ngbar_db = {x:?}\n[uowc_main]\ngbar_db = {x:?}\n")).unwrap();
        prop_assert!((c.scenario.rf_eve.gbar / db(x) - 1.0).abs() < 1e-14);
        prop_assert_eq!(c.scenario.rf_eve.gbar, c.scenario.uowc_main.gbar);
    }
}
