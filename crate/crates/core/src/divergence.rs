//! Divergences between probability laws.
//!
//! Everything here is in nats. Rényi divergences are indexed by `λ > 0`, the
//! order being `1 + λ`:
//!
//! ```text
//! D_{1+λ}(P || Q) = (1/λ) log Σ_y p(y)^{1+λ} q(y)^{-λ}
//! H_{1+λ}(P || Q) = (1/λ) (Σ_y p(y)^{1+λ} q(y)^{-λ} - 1) = (exp(λ D) - 1) / λ
//! ```
//!
//! Terms with `p(y) = 0` contribute nothing whatever `q(y)` is. A term with
//! `p(y) > 0 = q(y)` is an absolute-continuity failure and is reported as
//! [`Error::NotAbsolutelyContinuous`]. Overflow of the moment sum yields
//! `f64::INFINITY`, which callers treat as the infinite-divergence sentinel.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance on the total mass of a [`DiscretePmf`].
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// Infinite divergence. Propagates through `exp(λ D)` and makes any bound
/// built on it vacuous.
pub const INFINITE: f64 = f64::INFINITY;

/// Below this distance from `t = 1`, [`kappa`] switches to its Taylor series.
pub const KAPPA_SERIES_RADIUS: f64 = 1e-3;

/// A probability mass function over `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidPmf(format!("entry {i} is {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("mass sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalises non-negative weights. Fails if they are all zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(support_size: usize) -> Result<Self> {
        if support_size == 0 {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        Ok(Self { probs: vec![1.0 / support_size as f64; support_size] })
    }

    /// Point mass at `index`.
    pub fn dirac(support_size: usize, index: usize) -> Result<Self> {
        if index >= support_size {
            return domain(format!("index {index} outside support of size {support_size}"));
        }
        let mut probs = vec![0.0; support_size];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Law of `(X, Y)` for independent `X ~ self`, `Y ~ other`; the outcome
    /// `(x, y)` sits at index `x * |Y| + y`.
    pub fn product(&self, other: &DiscretePmf) -> DiscretePmf {
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        for &p in &self.probs {
            for &q in &other.probs {
                probs.push(p * q);
            }
        }
        DiscretePmf { probs }
    }

    /// `n`-fold i.i.d. product.
    pub fn power(&self, n: usize) -> Result<DiscretePmf> {
        if n == 0 {
            return domain("product order must be positive");
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.product(self);
        }
        Ok(out)
    }

    /// Equal-weight mixture of `pmfs`.
    pub fn mixture(pmfs: &[DiscretePmf]) -> Result<DiscretePmf> {
        let first = pmfs.first().ok_or_else(|| Error::Domain("mixture of zero laws".into()))?;
        let len = first.support_size();
        let mut probs = vec![0.0; len];
        for p in pmfs {
            check_same_alphabet(first, p)?;
            for (acc, &v) in probs.iter_mut().zip(&p.probs) {
                *acc += v;
            }
        }
        let m = pmfs.len() as f64;
        probs.iter_mut().for_each(|v| *v /= m);
        Ok(DiscretePmf { probs })
    }

    /// Equality of masses up to `tol` in every coordinate.
    pub fn approx_eq(&self, other: &DiscretePmf, tol: f64) -> bool {
        self.probs.len() == other.probs.len()
            && self.probs.iter().zip(&other.probs).all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl TryFrom<Vec<f64>> for DiscretePmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscretePmf> for Vec<f64> {
    fn from(p: DiscretePmf) -> Vec<f64> {
        p.probs
    }
}

/// The parameter `λ > 0` of a Rényi divergence of order `1 + λ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return domain(format!("Rényi parameter λ must be positive and finite, got {lambda}"));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }

    /// The order `1 + λ`.
    pub fn order(self) -> f64 {
        1.0 + self.0
    }

    /// Rejects `λ > 1`, for bounds only valid on `(0, 1]`.
    pub fn require_at_most_one(self) -> Result<Self> {
        if self.0 > 1.0 {
            return domain(format!("this bound needs λ ∈ (0, 1], got {}", self.0));
        }
        Ok(self)
    }
}

impl TryFrom<f64> for RenyiOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RenyiOrder> for f64 {
    fn from(o: RenyiOrder) -> f64 {
        o.0
    }
}

/// `N(μ, σ² I)` against `N(0, σ² I)`, described by `‖μ‖²` and `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianShiftPair {
    shift_sq: f64,
    sigma_sq: f64,
}

impl GaussianShiftPair {
    pub fn new(shift_sq: f64, sigma_sq: f64) -> Result<Self> {
        if !(shift_sq.is_finite() && shift_sq >= 0.0) {
            return domain(format!("squared shift must be finite and non-negative, got {shift_sq}"));
        }
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return domain(format!("noise variance must be positive, got {sigma_sq}"));
        }
        Ok(Self { shift_sq, sigma_sq })
    }

    pub fn shift_sq(&self) -> f64 {
        self.shift_sq
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }
}

/// `Bernoulli(p)` against `Bernoulli(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliPair {
    p: f64,
    q: f64,
}

impl BernoulliPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return domain(format!("Bernoulli parameter {name} = {v} outside [0, 1]"));
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Total variation distance `|p - q|`.
    pub fn total_variation(&self) -> f64 {
        (self.p - self.q).abs()
    }

    /// The two laws as pmfs on `{1, 0}` (index 0 carries `p`).
    pub fn to_pmfs(&self) -> (DiscretePmf, DiscretePmf) {
        (
            DiscretePmf { probs: vec![self.p, 1.0 - self.p] },
            DiscretePmf { probs: vec![self.q, 1.0 - self.q] },
        )
    }
}

fn check_same_alphabet(p: &DiscretePmf, q: &DiscretePmf) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(Error::AlphabetMismatch(p.support_size(), q.support_size()));
    }
    Ok(())
}

/// `log Σ exp(x_i)`, tolerant of `-inf` entries.
pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log Σ_y p(y)^{1+λ} q(y)^{-λ}`, i.e. `λ D_{1+λ}(P || Q)`.
///
/// Evaluated in the log domain so that products over many letters do not
/// overflow before the logarithm is taken.
pub fn log_renyi_moment(p: &DiscretePmf, q: &DiscretePmf, order: RenyiOrder) -> Result<f64> {
    check_same_alphabet(p, q)?;
    if p.probs == q.probs {
        return Ok(0.0);
    }
    let lambda = order.lambda();
    let mut terms = Vec::with_capacity(p.support_size());
    for (index, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::NotAbsolutelyContinuous { index, p_val: pi });
        }
        terms.push(pi.ln() + lambda * (pi.ln() - qi.ln()));
    }
    Ok(log_sum_exp(terms))
}

/// Rényi divergence `D_{1+λ}(P || Q)`.
pub fn renyi_discrete(p: &DiscretePmf, q: &DiscretePmf, order: RenyiOrder) -> Result<f64> {
    let log_moment = log_renyi_moment(p, q, order)?;
    Ok((log_moment / order.lambda()).max(0.0))
}

/// Rényi divergence between `n`-fold products, from the single-letter value.
pub fn renyi_product_iid(single_letter_div: f64, n: usize) -> f64 {
    if single_letter_div == 0.0 {
        return 0.0;
    }
    n as f64 * single_letter_div
}

/// `D_{1+λ}(N(μ, σ²I) || N(0, σ²I)) = (1+λ) ‖μ‖² / (2σ²)`.
pub fn renyi_gaussian_shift(pair: GaussianShiftPair, order: RenyiOrder) -> f64 {
    order.order() * pair.shift_sq / (2.0 * pair.sigma_sq)
}

/// Rényi divergence between two Bernoulli laws.
pub fn renyi_bernoulli(pair: BernoulliPair, order: RenyiOrder) -> Result<f64> {
    let lambda = order.lambda();
    let mut total = 0.0;
    for (index, (p, q)) in [(pair.p, pair.q), (1.0 - pair.p, 1.0 - pair.q)].into_iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Err(Error::NotAbsolutelyContinuous { index, p_val: p });
        }
        total += p.powf(1.0 + lambda) * q.powf(-lambda);
    }
    Ok((total.ln() / lambda).max(0.0))
}

/// Upper bound `log(1 + 2 δ² / q_min)` on `D_{1+λ}` for `λ ∈ (0, 1]`, where
/// `δ` is the total variation distance and `q_min` the smallest mass of the
/// reference law.
pub fn verdu_sason_renyi_upper(tv: f64, q_min: f64, order: RenyiOrder) -> Result<f64> {
    order.require_at_most_one()?;
    if !(q_min.is_finite() && q_min > 0.0) {
        return domain(format!("q_min must be positive, got {q_min}"));
    }
    if !(tv.is_finite() && tv >= 0.0) {
        return domain(format!("total variation must be non-negative, got {tv}"));
    }
    Ok((2.0 * tv * tv / q_min).ln_1p())
}

/// Hellinger divergence of order `1 + λ`. At `λ = 1` this is χ².
pub fn hellinger_discrete(p: &DiscretePmf, q: &DiscretePmf, order: RenyiOrder) -> Result<f64> {
    let log_moment = log_renyi_moment(p, q, order)?;
    Ok((log_moment.exp_m1() / order.lambda()).max(0.0))
}

/// Kullback–Leibler divergence `Σ p log(p/q)`.
pub fn kl_discrete(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    check_same_alphabet(p, q)?;
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::NotAbsolutelyContinuous { index, p_val: pi });
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

/// Total variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    check_same_alphabet(p, q)?;
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Essential supremum of `dP/dQ` under `Q`.
pub fn max_likelihood_ratio(p: &DiscretePmf, q: &DiscretePmf) -> Result<f64> {
    check_same_alphabet(p, q)?;
    let mut t: f64 = 0.0;
    for (index, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if qi == 0.0 {
            if pi > 0.0 {
                return Err(Error::NotAbsolutelyContinuous { index, p_val: pi });
            }
            continue;
        }
        t = t.max(pi / qi);
    }
    Ok(t)
}

/// `κ(λ, t) = (λ + t^{1+λ} - (1+λ)t) / (λ (t log t + 1 - t))`, the constant
/// in `H_{1+λ}(P||Q) <= κ(λ, t) D(P||Q)` when `dP/dQ <= t`.
///
/// Both numerator and denominator vanish to second order at `t = 1`; within
/// [`KAPPA_SERIES_RADIUS`] of it the expansion
/// `(1+λ)(1 + λh/3 + λ(3λ-5)h²/36)`, `h = t - 1`, is used instead.
pub fn kappa(order: RenyiOrder, t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return domain(format!("κ(λ, t) needs t >= 1, got {t}"));
    }
    let lambda = order.lambda();
    let h = t - 1.0;
    if h < KAPPA_SERIES_RADIUS {
        return Ok((1.0 + lambda) * (1.0 + lambda * h / 3.0 + lambda * (3.0 * lambda - 5.0) * h * h / 36.0));
    }
    if t == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let numerator = lambda + t.powf(1.0 + lambda) - (1.0 + lambda) * t;
    let denominator = lambda * (t * t.ln() + 1.0 - t);
    Ok(numerator / denominator)
}

/// `E_γ(P || Q) = Σ_y max(p(y) - γ q(y), 0)`, the largest value of
/// `P[T=1] - γ Q[T=1]` over tests `T`.
pub fn e_gamma_divergence(p: &DiscretePmf, q: &DiscretePmf, gamma: f64) -> Result<f64> {
    check_same_alphabet(p, q)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return domain(format!("γ must be positive, got {gamma}"));
    }
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - gamma * b).max(0.0)).sum())
}

/// `P[dP/dQ > γ]`. Outcomes with `q = 0 < p` count as exceeding every `γ`.
pub fn likelihood_ratio_tail(p: &DiscretePmf, q: &DiscretePmf, gamma: f64) -> Result<f64> {
    check_same_alphabet(p, q)?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .filter(|(&a, &b)| a > 0.0 && a > gamma * b)
        .map(|(a, _)| a)
        .sum())
}

/// `P[T=1] - γ Q[T=1]` for a randomized test given by `test[y] = P(T=1 | y)`.
pub fn randomized_test_gap(p: &DiscretePmf, q: &DiscretePmf, gamma: f64, test: &[f64]) -> Result<f64> {
    check_same_alphabet(p, q)?;
    if test.len() != p.support_size() {
        return Err(Error::AlphabetMismatch(test.len(), p.support_size()));
    }
    if test.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return domain("test probabilities must lie in [0, 1]");
    }
    let pt: f64 = p.probs.iter().zip(test).map(|(a, t)| a * t).sum();
    let qt: f64 = q.probs.iter().zip(test).map(|(b, t)| b * t).sum();
    Ok(pt - gamma * qt)
}
