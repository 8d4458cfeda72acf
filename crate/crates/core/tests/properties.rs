//! Randomised properties checked against exact oracles.

use proptest::prelude::*;

use converse_kit::applications::{cs_bound, CsConfig};
use converse_kit::converse::{fano_bound_for_family, optimize_lambda, theorem1_bound, ChannelFamily, QChoice};
use converse_kit::divergence::{
    kl_discrete, renyi_discrete, renyi_product_iid, total_variation, verdu_sason_renyi_upper, DiscretePmf,
    RenyiOrder,
};
use converse_kit::oracle::{exact_bayes_error, min_distance_decoder_error};
use converse_kit::packing::{Metric, PackingSet};
use converse_kit::report::format_f64;

const SLACK: f64 = 1e-9;

fn pmf(size: usize) -> impl Strategy<Value = DiscretePmf> {
    prop::collection::vec(0.01f64..1.0, size).prop_map(|w| DiscretePmf::from_weights(&w).unwrap())
}

/// `M` conditionals over a shared alphabet.
fn conditionals() -> impl Strategy<Value = Vec<DiscretePmf>> {
    (2usize..=5, 2usize..=8).prop_flat_map(|(m, k)| prop::collection::vec(pmf(k), m))
}

fn order() -> impl Strategy<Value = RenyiOrder> {
    (-2.0f64..1.0).prop_map(|e| RenyiOrder::new(10f64.powf(e)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn converse_bound_never_exceeds_bayes_error(conds in conditionals(), order in order(), n in 1usize..=2) {
        let family = ChannelFamily::discrete(conds, QChoice::Mixture).unwrap().product(n).unwrap();
        let bayes = exact_bayes_error(&family).unwrap();
        for q in [QChoice::Uniform, QChoice::Mixture, QChoice::OptimalQStar] {
            let f = family.with_q(q).unwrap();
            prop_assert!(theorem1_bound(&f, order).eps_lower <= bayes + SLACK);
        }
        let best = optimize_lambda(&family, (1e-3, 10.0)).unwrap();
        prop_assert!(best.eps_lower <= bayes + SLACK);
    }

    #[test]
    fn fano_never_exceeds_bayes_error(conds in conditionals()) {
        let family = ChannelFamily::discrete(conds, QChoice::Mixture).unwrap();
        let bayes = exact_bayes_error(&family).unwrap();
        prop_assert!(fano_bound_for_family(&family).unwrap().eps_lower <= bayes + SLACK);
    }

    #[test]
    fn bayes_error_ignores_relabelling(conds in conditionals(), rot in 0usize..5) {
        let mut rotated = conds.clone();
        rotated.rotate_left(rot % conds.len());
        let a = exact_bayes_error(&ChannelFamily::discrete(conds, QChoice::Mixture).unwrap()).unwrap();
        let b = exact_bayes_error(&ChannelFamily::discrete(rotated, QChoice::Mixture).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn no_decoder_beats_bayes(conds in conditionals(), salt in any::<u64>()) {
        let m = conds.len();
        let family = ChannelFamily::discrete(conds, QChoice::Mixture).unwrap();
        let corners: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let packing = PackingSet::new(corners, Metric::L2, 1.0).unwrap();
        // An arbitrary but fixed estimator: a hashed point in [0, 1]^m.
        let estimator = |y: usize| -> Vec<f64> {
            (0..m)
                .map(|j| {
                    let h = (y as u64 ^ salt).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(7 * j as u32 + 1);
                    (h >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect()
        };
        let l2 = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let decoder = min_distance_decoder_error(&family, &packing, estimator, l2).unwrap();
        prop_assert!(exact_bayes_error(&family).unwrap() <= decoder + 1e-12);
    }

    #[test]
    fn renyi_is_nondecreasing_in_order(p in pmf(6), q in pmf(6), a in 0.01f64..2.0, b in 0.01f64..2.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let d_lo = renyi_discrete(&p, &q, RenyiOrder::new(lo).unwrap()).unwrap();
        let d_hi = renyi_discrete(&p, &q, RenyiOrder::new(hi).unwrap()).unwrap();
        prop_assert!(d_lo <= d_hi + 1e-12);
        prop_assert!(kl_discrete(&p, &q).unwrap() <= d_lo + 1e-12);
    }

    #[test]
    fn renyi_tensorises(p in pmf(4), q in pmf(4), order in order(), n in 1usize..=3) {
        let single = renyi_discrete(&p, &q, order).unwrap();
        let joint = renyi_discrete(&p.power(n).unwrap(), &q.power(n).unwrap(), order).unwrap();
        prop_assert!((renyi_product_iid(single, n) - joint).abs() <= 1e-10 * (1.0 + joint));
    }

    #[test]
    fn total_variation_controls_renyi(p in pmf(5), q in pmf(5), lambda in 0.01f64..=1.0) {
        let order = RenyiOrder::new(lambda).unwrap();
        let tv = total_variation(&p, &q).unwrap();
        let upper = verdu_sason_renyi_upper(tv, q.min_prob(), order).unwrap();
        prop_assert!(renyi_discrete(&p, &q, order).unwrap() <= upper + 1e-12);
    }

    #[test]
    fn trimming_fraction_trades_off_eps_and_risk(k in 8.0f64..256.0, log_n in 8.0f64..40.0, ld in 0.002f64..0.2) {
        let cfg = CsConfig::new(k * log_n.exp(), k, ld, ld);
        prop_assume!(cfg.log_m() > 3.0);
        let base = cs_bound(&cfg).unwrap();
        let inv_m = (-cfg.log_m()).exp();
        let default = 1.0 / cfg.log_m();
        // A larger trimming fraction can only help ε.
        let wider = cs_bound(&CsConfig { delta_m: Some((2.0 * default).min(1.0 - inv_m)), ..cfg }).unwrap();
        prop_assert!(wider.strong.eps_raw >= base.strong.eps_raw - 1e-12);
        // The explicit default reproduces the implicit one.
        let same = cs_bound(&CsConfig { delta_m: Some(default), ..cfg }).unwrap();
        prop_assert!((same.strong.eps_raw - base.strong.eps_raw).abs() <= 1e-12);
    }

    #[test]
    fn float_encoding_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = format_f64(x).unwrap();
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

mod spectral {
    use super::*;
    use converse_kit::packing::operator_norm;
    use nalgebra::DMatrix;

    fn symmetric() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=8).prop_flat_map(|n| {
            prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
                (0..n).map(|i| (0..n).map(|j| v[i.min(j) * n + i.max(j)]).collect()).collect()
            })
        })
    }

    proptest! {
        #[test]
        fn operator_norm_matches_eigendecomposition(rows in symmetric()) {
            let n = rows.len();
            let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            let expected = m.symmetric_eigenvalues().iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
            let got = operator_norm(&rows).unwrap();
            prop_assert!((got - expected).abs() <= 1e-8 * (1.0 + expected), "{} vs {}", got, expected);
        }
    }
}
