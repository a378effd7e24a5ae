use aquarl::growth::{
    anabolism_coefficient, catabolism_coefficient, do_factor, growth_rate, step,
    temperature_factor, uia_factor,
};
use aquarl::mdp::reward;
use aquarl::metrics::{mae, mape, rmse};
use aquarl::qlearn::{epsilon_schedule, td_update};
use aquarl::{
    EnvConditions, FishState, Grid, GrowthParams, Integrator, QTable, RewardShape, RewardSpec,
    StateId, TrainConfig,
};
use proptest::prelude::*;

fn params() -> GrowthParams {
    GrowthParams::default()
}

fn shape() -> impl Strategy<Value = RewardShape> {
    prop_oneof![
        Just(RewardShape::L2),
        Just(RewardShape::L2L1),
        Just(RewardShape::L1)
    ]
}

fn grid() -> impl Strategy<Value = Grid> {
    (
        1.0..20.0f64,
        50.0..500.0f64,
        1.0..30.0f64,
        1u32..15,
        10u32..150,
    )
        .prop_map(|(w_min, span, dw, dt, horizon)| Grid {
            w_min,
            w_max: w_min + span,
            dw,
            dt,
            horizon,
        })
}

proptest! {
    #[test]
    fn factors_stay_in_unit_interval(t in -10.0..60.0f64, uia in 0.0..3.0f64, o2 in 0.0..10.0f64) {
        let p = params();
        for x in [temperature_factor(t, &p), uia_factor(uia, &p), do_factor(o2, &p)] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn temperature_factor_peaks_at_optimum(d1 in 0.0..15.0f64, d2 in 0.0..15.0f64) {
        let p = params();
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(temperature_factor(p.t_opt + near, &p) >= temperature_factor(p.t_opt + far, &p));
        prop_assert!(temperature_factor(p.t_opt - near, &p) >= temperature_factor(p.t_opt - far, &p));
    }

    #[test]
    fn uia_and_oxygen_factors_are_monotone(a in 0.0..2.0f64, b in 0.0..2.0f64, c in 0.0..6.0f64, d in 0.0..6.0f64) {
        let p = params();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(uia_factor(lo, &p) >= uia_factor(hi, &p));
        let (lo, hi) = if c <= d { (c, d) } else { (d, c) };
        prop_assert!(do_factor(lo, &p) <= do_factor(hi, &p));
    }

    #[test]
    fn catabolism_grows_with_temperature(t in 0.0..50.0f64, dt in 0.0..10.0f64) {
        let p = params();
        prop_assert!(catabolism_coefficient(t + dt, &p) >= catabolism_coefficient(t, &p));
    }

    #[test]
    fn growth_rate_increases_with_feed(w in 0.5..800.0f64, f1 in 0.0..=1.0f64, f2 in 0.0..=1.0f64, t in 24.0..36.0f64) {
        let p = params();
        let env = EnvConditions { temperature: t, dissolved_oxygen: 5.0, uia: 0.03 };
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        prop_assert!(anabolism_coefficient(lo, &env, &p).unwrap() <= anabolism_coefficient(hi, &env, &p).unwrap());
        prop_assert!(growth_rate(w, lo, &env, &p).unwrap() <= growth_rate(w, hi, &env, &p).unwrap());
        prop_assert!(growth_rate(w, 0.0, &env, &p).unwrap() < 0.0);
    }

    #[test]
    fn step_preserves_positivity_and_counts_days(w in 1.0..400.0f64, f in 0.0..=1.0f64, days in 1u32..30) {
        let p = params();
        let env = EnvConditions::optimal(&p);
        let next = step(FishState { weight: w, day: 4 }, f, &env, &p, days, &Integrator::default()).unwrap();
        prop_assert!(next.weight > 0.0);
        prop_assert_eq!(next.day, 4 + days);
    }

    #[test]
    fn reward_is_non_positive_and_zero_only_at_perfect_tracking(
        w in 0.1..500.0f64, wd in 0.1..500.0f64, f in 0.0..=1.0f64, lambda in 0.0..2.0f64, shape in shape(),
    ) {
        let spec = RewardSpec { shape, lambda };
        let r = reward(w, wd, f, &spec).unwrap();
        prop_assert!(r <= 0.0);
        prop_assert_eq!(reward(wd, wd, 0.0, &spec).unwrap(), 0.0);
        if (w - wd).abs() > 1e-9 * wd {
            prop_assert!(r < 0.0);
        }
    }

    #[test]
    fn reward_worsens_with_tracking_error(wd in 1.0..500.0f64, e1 in 0.0..1.0f64, e2 in 0.0..1.0f64, f in 0.0..=1.0f64, shape in shape()) {
        let spec = RewardSpec { shape, lambda: 0.5 };
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(reward(wd * (1.0 + lo), wd, f, &spec).unwrap() >= reward(wd * (1.0 + hi), wd, f, &spec).unwrap());
        prop_assert!(reward(wd * (1.0 - lo), wd, f, &spec).unwrap() >= reward(wd * (1.0 - hi), wd, f, &spec).unwrap());
    }

    #[test]
    fn discretize_is_idempotent_on_centers(g in grid(), w in 0.0..600.0f64, day in 0u32..200) {
        match g.discretize(w, day) {
            StateId::Live { weight_bin, time_bin } => {
                let center = g.center(weight_bin);
                let again = g.discretize(center, g.bin_start_day(time_bin));
                prop_assert_eq!(again, StateId::Live { weight_bin, time_bin });
                prop_assert!(weight_bin < g.weight_bins() && time_bin < g.time_bins());
                let s = g.index(StateId::Live { weight_bin, time_bin }).unwrap();
                prop_assert!(s < g.state_count());
                prop_assert_eq!(g.state(s), StateId::Live { weight_bin, time_bin });
            }
            StateId::Terminal => prop_assert!(day >= g.horizon),
        }
    }

    #[test]
    fn state_count_matches_enumeration(g in grid()) {
        let mut seen = std::collections::BTreeSet::new();
        let mut w = g.w_min - g.dw;
        while w <= g.w_max + g.dw {
            for day in 0..g.horizon + 3 {
                if let StateId::Live { weight_bin, time_bin } = g.discretize(w, day) {
                    seen.insert((weight_bin, time_bin));
                }
            }
            w += g.dw / 4.0;
        }
        prop_assert_eq!(seen.len(), g.state_count());
    }

    #[test]
    fn rmse_dominates_mae(pairs in prop::collection::vec((0.1..500.0f64, 0.1..500.0f64), 1..60)) {
        let (w, d): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(rmse(&w, &d).unwrap() >= mae(&w, &d).unwrap() - 1e-12);
        prop_assert!(mape(&w, &d).unwrap() >= 0.0);
    }

    #[test]
    fn greedy_action_is_invariant_under_constant_shift(row in prop::collection::vec(-10.0..0.0f64, 1..12), shift in -50.0..50.0f64) {
        let mut q = QTable::zeros(1, row.len());
        let mut shifted = q.clone();
        for (a, &v) in row.iter().enumerate() {
            q.set(0, a, v);
            shifted.set(0, a, v + shift);
        }
        prop_assert_eq!(q.greedy(0), shifted.greedy(0));
    }

    #[test]
    fn td_update_touches_only_its_entry(
        values in prop::collection::vec(-5.0..5.0f64, 12),
        s in 0usize..4, a in 0usize..3, next in prop::option::of(0usize..4),
        r in -2.0..0.0f64, alpha in 0.01..=1.0f64, gamma in 0.0..=1.0f64,
    ) {
        let mut q = QTable::zeros(4, 3);
        for (i, &v) in values.iter().enumerate() {
            q.set(i / 3, i % 3, v);
        }
        let before = q.clone();
        let new = td_update(&mut q, s, a, r, next, alpha, gamma).unwrap();
        prop_assert_eq!(q.get(s, a), new);
        for i in 0..12 {
            if i != s * 3 + a {
                prop_assert_eq!(q.values()[i], before.values()[i]);
            }
        }
    }

    #[test]
    fn epsilon_is_non_increasing(i in 0usize..100_000, t in 1.0..50_000.0f64, e0 in 0.0..=1.0f64) {
        let cfg = TrainConfig { epsilon0: e0, t_epsilon: t, ..TrainConfig::default() };
        let (now, later) = (epsilon_schedule(i, &cfg), epsilon_schedule(i + 1, &cfg));
        prop_assert!(later <= now && (0.0..=1.0).contains(&later));
    }
}
