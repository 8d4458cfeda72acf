//! Randomised invariant suites.
//!
//! Every suite is deterministic in its seed: instance `i` draws from the
//! ChaCha stream `i` of the seed, and instances are evaluated in parallel but
//! reported in index order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{exact_bayes_error, gaussian_renyi_quadrature, randomized_test_check};
use crate::converse::{
    fano_bound_for_family, generalized_fano_logm_bound, generalized_fano_logm_lambda_form, mixture_avg_kl,
    optimize_lambda, theorem1_bound, ChannelFamily, QChoice, DEFAULT_LAMBDA_RANGE,
};
use crate::divergence::{
    e_gamma_divergence, max_likelihood_ratio, renyi_bernoulli, renyi_discrete, renyi_gaussian_shift,
    renyi_product_iid, total_variation, verdu_sason_renyi_upper, BernoulliPair, DiscretePmf, GaussianShiftPair,
    RenyiOrder,
};
use crate::error::Result;
use crate::packing::{
    cs_random_packing, gv_greedy, gv_size_bound, trim_packing, verify_packing, GreedyOrder,
};

/// Allowed numerical slack for inequalities between exact quantities.
pub const SLACK: f64 = 1e-9;

/// Relative tolerance for closed forms against numeric oracles.
pub const CLOSED_FORM_RTOL: f64 = 1e-6;

pub const MAX_RANDOM_M: usize = 6;
pub const MAX_RANDOM_ALPHABET: usize = 12;
pub const MAX_RANDOM_PRODUCT: usize = 3;

/// Outcome of one suite. `worst_margin` is the smallest observed slack of
/// the checked inequality; negative means a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub total: usize,
    pub passed: usize,
    pub checks: usize,
    pub worst_margin: f64,
    pub failures: Vec<String>,
}

impl SuiteSummary {
    fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            total: 0,
            passed: 0,
            checks: 0,
            worst_margin: f64::INFINITY,
            failures: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }

    fn absorb(&mut self, item: Tally) {
        self.total += 1;
        self.checks += item.checks;
        self.worst_margin = self.worst_margin.min(item.worst_margin);
        if item.failures.is_empty() {
            self.passed += 1;
        } else if self.failures.len() < 10 {
            self.failures.extend(item.failures.into_iter().take(10 - self.failures.len()));
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {}/{} pass ({} checks), worst margin {:.3e}",
            self.suite, self.passed, self.total, self.checks, self.worst_margin
        )
    }
}

/// Per-instance accumulator.
#[derive(Debug, Default)]
struct Tally {
    checks: usize,
    worst_margin: f64,
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self { checks: 0, worst_margin: f64::INFINITY, failures: Vec::new() }
    }

    /// Records `margin >= -slack`.
    fn check(&mut self, margin: f64, slack: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if !(margin >= -slack) {
            self.failures.push(what());
        }
    }
}

fn run_instances(suite: &str, seed: u64, count: usize, f: impl Fn(usize, &mut ChaCha8Rng) -> Tally + Sync) -> SuiteSummary {
    let tallies: Vec<Tally> = (0..count)
        .into_par_iter()
        .map(|i| f(i, &mut instance_rng(seed, i)))
        .collect();
    let mut summary = SuiteSummary::new(suite);
    tallies.into_iter().for_each(|t| summary.absorb(t));
    summary
}

pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `λ_k = 10^{-2 + 3k/19}`, `k = 0..20`: twenty points from `0.01` to `10`.
pub fn lambda_grid() -> Vec<f64> {
    (0..20).map(|k| 10f64.powf(-2.0 + 3.0 * k as f64 / 19.0)).collect()
}

/// A random pmf; about a third of them have zeros.
pub fn random_pmf(rng: &mut impl Rng, size: usize) -> DiscretePmf {
    let sparse = rng.random_bool(0.3);
    let skew = rng.random_range(0.5..4.0);
    loop {
        let weights: Vec<f64> = (0..size)
            .map(|_| if sparse && rng.random_bool(0.4) { 0.0 } else { rng.random::<f64>().powf(skew) })
            .collect();
        if weights.iter().any(|&w| w > 0.0) {
            return DiscretePmf::from_weights(&weights).expect("non-negative weights with positive sum");
        }
    }
}

/// A random discrete family with `M <= 6` codewords over a per-letter
/// alphabet of at most 12 symbols, extended to `n <= 3` letters. A few
/// instances are degenerate on purpose (identical or well-separated
/// conditionals).
pub fn random_family(rng: &mut impl Rng) -> ChannelFamily {
    let m = rng.random_range(2..=MAX_RANDOM_M);
    let alphabet = rng.random_range(2..=MAX_RANDOM_ALPHABET);
    let n = rng.random_range(1..=MAX_RANDOM_PRODUCT);
    let kind = rng.random_range(0..20);
    let conds: Vec<DiscretePmf> = match kind {
        0 => vec![random_pmf(rng, alphabet); m],
        1 => {
            let m = m.min(alphabet);
            (0..m).map(|i| DiscretePmf::dirac(alphabet, i).expect("index in range")).collect()
        }
        _ => (0..m).map(|_| random_pmf(rng, alphabet)).collect(),
    };
    ChannelFamily::discrete(conds, QChoice::Mixture)
        .and_then(|f| f.product(n))
        .expect("valid random family")
}

pub fn q_choices() -> [QChoice; 3] {
    [QChoice::Uniform, QChoice::Mixture, QChoice::OptimalQStar]
}

/// The converse bound never exceeds the exact Bayes error, for every `Q`
/// choice and every λ of [`lambda_grid`], nor after optimising λ.
pub fn soundness(seed: u64, count: usize) -> SuiteSummary {
    let grid = lambda_grid();
    run_instances("soundness", seed, count, |i, rng| {
        let family = random_family(rng);
        let bayes = exact_bayes_error(&family).expect("small alphabet");
        let mut tally = Tally::new();
        for q in q_choices() {
            let fam = family.with_q(q.clone()).expect("same alphabet");
            for &l in &grid {
                let eps = theorem1_bound(&fam, RenyiOrder::new(l).expect("positive")).eps_lower;
                tally.check(bayes - eps, SLACK, || {
                    format!("instance {i}: Q={} λ={l}: bound {eps} > Bayes {bayes}", q.tag())
                });
            }
            let best = optimize_lambda(&fam, DEFAULT_LAMBDA_RANGE).expect("valid range");
            tally.check(bayes - best.eps_lower, SLACK, || {
                format!("instance {i}: Q={} optimised: bound {} > Bayes {bayes}", q.tag(), best.eps_lower)
            });
        }
        tally
    })
}

/// Fano's bound stays below the Bayes error, and the generalised Fano
/// inequalities on `log M` hold at the exact `(M, ε, I)`.
pub fn fano_recovery(seed: u64, count: usize) -> SuiteSummary {
    let grid = lambda_grid();
    run_instances("fano-recovery", seed, count, |i, rng| {
        let family = random_family(rng);
        let conds = family.discrete_conditionals().expect("discrete");
        let m = family.m();
        let log_m = (m as f64).ln();
        let bayes = exact_bayes_error(&family).expect("small alphabet");
        let mut tally = Tally::new();
        let fano = fano_bound_for_family(&family).expect("M >= 2").eps_lower;
        tally.check(bayes - fano, SLACK, || format!("instance {i}: Fano {fano} > Bayes {bayes}"));

        let info = mixture_avg_kl(conds).expect("mixture dominates");
        let mixture = DiscretePmf::mixture(conds).expect("non-empty");
        let t = conds
            .iter()
            .map(|p| max_likelihood_ratio(p, &mixture).expect("mixture dominates"))
            .fold(1.0, f64::max);
        tally.check(m as f64 - t, SLACK, || format!("instance {i}: t = {t} > M = {m}"));
        for &l in &grid {
            let order = RenyiOrder::new(l).expect("positive");
            for t_used in [t, m as f64] {
                let bound = generalized_fano_logm_bound(order, t_used, info, bayes).expect("ε < 1");
                tally.check(bound - log_m, SLACK, || {
                    format!("instance {i}: λ={l} t={t_used}: log M = {log_m} > {bound}")
                });
            }
        }
        if m >= 3 {
            let order = RenyiOrder::new(1.0 / log_m.sqrt()).expect("positive");
            if let Some(bound) = generalized_fano_logm_lambda_form(m, info, bayes, order) {
                tally.check(bound - log_m, SLACK, || format!("instance {i}: λ-form: log M = {log_m} > {bound}"));
            }
        }
        tally
    })
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Closed-form divergences against numeric oracles on fixed 100-point grids,
/// plus `count` random checks of the randomized-test inequality, the
/// product rule and the total-variation upper bound.
pub fn divergence(seed: u64, count: usize) -> SuiteSummary {
    let mut summary = SuiteSummary::new("divergence");

    let mut gaussian = Tally::new();
    for shift_sq in [0.01, 0.1, 1.0, 4.0, 10.0] {
        for sigma_sq in [0.25, 1.0, 2.0, 4.0] {
            for lambda in [0.1, 0.5, 1.0, 2.0, 3.0] {
                let pair = GaussianShiftPair::new(shift_sq, sigma_sq).expect("valid");
                let order = RenyiOrder::new(lambda).expect("positive");
                let (exact, numeric) = (renyi_gaussian_shift(pair, order), gaussian_renyi_quadrature(pair, order));
                gaussian.check(CLOSED_FORM_RTOL - rel_err(exact, numeric), 0.0, || {
                    format!("gaussian μ²={shift_sq} σ²={sigma_sq} λ={lambda}: {exact} vs {numeric}")
                });
            }
        }
    }
    summary.absorb(gaussian);

    let mut bernoulli = Tally::new();
    for p in [0.05, 0.3, 0.5, 0.7, 0.95] {
        for q in [0.1, 0.4, 0.6, 0.9] {
            for lambda in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let pair = BernoulliPair::new(p, q).expect("valid");
                let order = RenyiOrder::new(lambda).expect("positive");
                let (bp, bq) = pair.to_pmfs();
                let closed = renyi_bernoulli(pair, order).expect("q in (0,1)");
                let generic = renyi_discrete(&bp, &bq, order).expect("q in (0,1)");
                bernoulli.check(CLOSED_FORM_RTOL - rel_err(closed, generic), 0.0, || {
                    format!("bernoulli p={p} q={q} λ={lambda}: {closed} vs {generic}")
                });
            }
        }
    }
    summary.absorb(bernoulli);

    let random = run_instances("divergence", seed, count, |i, rng| {
        let mut tally = Tally::new();
        let size = rng.random_range(2..=8);
        let p = random_pmf(rng, size);
        let q = DiscretePmf::from_weights(&(0..size).map(|_| rng.random_range(0.05..1.0)).collect::<Vec<_>>())
            .expect("positive weights");
        let gamma = 10f64.powf(rng.random_range(-1.0..1.0));
        let test: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
        let (gap, tail) = randomized_test_check(&p, &q, gamma, &test).expect("same alphabet");
        tally.check(tail - gap, SLACK, || format!("random {i}: test gap {gap} > tail {tail}"));
        let e_gamma = e_gamma_divergence(&p, &q, gamma).expect("same alphabet");
        tally.check(e_gamma - gap, SLACK, || format!("random {i}: test gap {gap} > E_γ {e_gamma}"));

        let lambda = rng.random_range(0.05..1.0);
        let order = RenyiOrder::new(lambda).expect("positive");
        let single = renyi_discrete(&p, &q, order).expect("q positive");
        let pair = renyi_discrete(&p.power(2).expect("n >= 1"), &q.power(2).expect("n >= 1"), order)
            .expect("q positive");
        let want = renyi_product_iid(single, 2);
        tally.check(1e-9 * want.max(1.0) - (pair - want).abs(), 0.0, || {
            format!("random {i}: product rule {pair} vs {want}")
        });
        let tv = total_variation(&p, &q).expect("same alphabet");
        let upper = verdu_sason_renyi_upper(tv, q.min_prob(), order).expect("λ <= 1");
        tally.check(upper - single, SLACK, || format!("random {i}: D = {single} above TV bound {upper}"));
        tally
    });
    summary.total += random.total;
    summary.passed += random.passed;
    summary.checks += random.checks;
    summary.worst_margin = summary.worst_margin.min(random.worst_margin);
    summary.failures.extend(random.failures);
    summary
}

/// Greedy code size against the GV count, a random sparse packing's
/// certificate, and the trimming inequality on `count` random lists.
pub fn packing(m: u32, d_min: u32, seed: u64, count: usize) -> Result<SuiteSummary> {
    let mut summary = SuiteSummary::new("packing");

    let mut gv = Tally::new();
    let code = gv_greedy(m, d_min, GreedyOrder::Lexicographic)?;
    let bound = gv_size_bound(m, d_min);
    gv.check(code.len() as f64 - bound as f64, 0.0, || {
        format!("greedy code of size {} below GV count {bound}", code.len())
    });
    let cert = code.verify();
    gv.check(cert.min_distance - d_min as f64, 0.0, || format!("greedy code distance {}", cert.min_distance));
    summary.absorb(gv);

    let mut sparse = Tally::new();
    match cs_random_packing(64, 4, 16, seed, 100_000) {
        Ok(p) => {
            for (i, u) in p.codewords().iter().enumerate() {
                sparse.check(1e-12 - (u.norm_sq() - 1.0).abs(), 0.0, || format!("codeword {i} not unit norm"));
                sparse.check(4.0 - u.nnz() as f64, 0.0, || format!("codeword {i} has {} non-zeros", u.nnz()));
            }
            let d = p.min_dist_sq();
            sparse.check(d - 0.5, 0.0, || format!("sparse packing squared distance {d}"));
            let cert = verify_packing(&p.to_packing_set())?;
            sparse.check(if cert.passed { 0.0 } else { -1.0 }, 0.0, || "dense certificate failed".into());
            sparse.check(p.beta_hat(), 0.0, || format!("beta_hat = {}", p.beta_hat()));
        }
        Err(e) => sparse.check(-1.0, 0.0, || format!("sparse packing: {e}")),
    }
    summary.absorb(sparse);

    let trims = run_instances("packing", seed, count, |i, rng| {
        let mut tally = Tally::new();
        let len = rng.random_range(2..=40);
        let values: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 10.0).collect();
        let lo = 1.0 / len as f64;
        let delta = lo + rng.random::<f64>() * (1.0 - 2.0 * lo);
        let kept = trim_packing(&values, delta).expect("δ in range");
        let mean = values.iter().sum::<f64>() / len as f64;
        let max_kept = kept.iter().map(|&j| values[j]).fold(0.0, f64::max);
        tally.check(mean / (1.0 - delta) - max_kept, 1e-12, || {
            format!("trim {i}: kept max {max_kept} above mean/(1-δ) = {}", mean / (1.0 - delta))
        });
        tally
    });
    summary.total += trims.total;
    summary.passed += trims.passed;
    summary.checks += trims.checks;
    summary.worst_margin = summary.worst_margin.min(trims.worst_margin);
    summary.failures.extend(trims.failures);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_two_to_ten() {
        let g = lambda_grid();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[19] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn suites_pass_and_are_deterministic() {
        let a = soundness(3, 12);
        assert!(a.ok(), "{:?}", a.failures);
        assert_eq!(a, soundness(3, 12));
        let f = fano_recovery(3, 12);
        assert!(f.ok(), "{:?}", f.failures);
        let d = divergence(3, 20);
        assert!(d.ok(), "{:?}", d.failures);
        let p = packing(10, 3, 3, 50).unwrap();
        assert!(p.ok(), "{:?}", p.failures);
    }
}
