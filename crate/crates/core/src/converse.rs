//! Lower bounds on the average error probability `ε_M` of any decoder for
//! `M` equiprobable codewords.
//!
//! The main bound compares the channel against a product law `π × Q` in
//! which the output carries no information about the codeword:
//!
//! ```text
//! ε_M >= 1 - (1+λ) (λM)^{-λ/(1+λ)} S^{1/(1+λ)},   S = (1/M) Σ_i exp(λ D_{1+λ}(P_i || Q))
//! ```
//!
//! for every `λ > 0` and every `Q` dominating all `P_i`. It is the supremum
//! over `γ > 0` of `1 - γ/M - S γ^{-λ}` ([`gamma_variational_bound`]), with
//! maximiser `γ* = (λ S M)^{1/(1+λ)}`.
//!
//! Fano's inequality and a Hellinger/KL generalisation of it are provided as
//! baselines; [`risk_from_eps`] turns any `ε_M` bound into a risk bound.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::divergence::{
    self, hellinger_discrete, kappa, kl_discrete, log_renyi_moment, log_sum_exp, max_likelihood_ratio,
    renyi_gaussian_shift, DiscretePmf, GaussianShiftPair, RenyiOrder,
};
use crate::error::{domain, Error, Result};
use crate::optimize::{maximize_log_scale, Boundary};
use crate::packing::PackingSet;

/// Default λ search interval for [`optimize_lambda`].
pub const DEFAULT_LAMBDA_RANGE: (f64, f64) = (1e-6, 10.0);

/// The auxiliary output law `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QChoice {
    Uniform,
    /// `(1/M) Σ_i P_i`.
    Mixture,
    /// `q*(y) ∝ ((1/M) Σ_i p_i(y)^{1+λ})^{1/(1+λ)}`, recomputed for each λ.
    OptimalQStar,
    Explicit(DiscretePmf),
}

impl QChoice {
    pub fn tag(&self) -> &'static str {
        match self {
            QChoice::Uniform => "uniform",
            QChoice::Mixture => "mixture",
            QChoice::OptimalQStar => "optimal_qstar",
            QChoice::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Conditionals {
    Discrete(Vec<DiscretePmf>),
    /// `P_i = N(A θ_i, σ² I)` against `Q = N(0, σ² I)`.
    GaussianShift(Vec<GaussianShiftPair>),
}

/// `M` conditional laws `P_{Y|θ_i}` and the choice of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFamily {
    conditionals: Conditionals,
    /// `None` for Gaussian families, whose `Q` is fixed.
    q_choice: Option<QChoice>,
}

impl ChannelFamily {
    pub fn discrete(conditionals: Vec<DiscretePmf>, q_choice: QChoice) -> Result<Self> {
        let first = conditionals
            .first()
            .ok_or_else(|| Error::Domain("a channel family needs at least one codeword".into()))?;
        let len = first.support_size();
        for p in &conditionals {
            if p.support_size() != len {
                return Err(Error::AlphabetMismatch(len, p.support_size()));
            }
        }
        if let QChoice::Explicit(q) = &q_choice {
            if q.support_size() != len {
                return Err(Error::AlphabetMismatch(len, q.support_size()));
            }
        }
        Ok(Self { conditionals: Conditionals::Discrete(conditionals), q_choice: Some(q_choice) })
    }

    /// Gaussian location family; `Q` is always the zero-mean law.
    pub fn gaussian(pairs: Vec<GaussianShiftPair>) -> Result<Self> {
        if pairs.is_empty() {
            return domain("a channel family needs at least one codeword");
        }
        Ok(Self { conditionals: Conditionals::GaussianShift(pairs), q_choice: None })
    }

    pub fn m(&self) -> usize {
        match &self.conditionals {
            Conditionals::Discrete(v) => v.len(),
            Conditionals::GaussianShift(v) => v.len(),
        }
    }

    pub fn conditionals(&self) -> &Conditionals {
        &self.conditionals
    }

    pub fn discrete_conditionals(&self) -> Option<&[DiscretePmf]> {
        match &self.conditionals {
            Conditionals::Discrete(v) => Some(v),
            Conditionals::GaussianShift(_) => None,
        }
    }

    /// Output alphabet size; `None` for Gaussian families.
    pub fn alphabet_size(&self) -> Option<usize> {
        self.discrete_conditionals().map(|v| v[0].support_size())
    }

    pub fn q_choice(&self) -> Option<&QChoice> {
        self.q_choice.as_ref()
    }

    /// Same conditionals, different `Q`. Ignored for Gaussian families.
    pub fn with_q(&self, q_choice: QChoice) -> Result<Self> {
        match &self.conditionals {
            Conditionals::Discrete(v) => Self::discrete(v.clone(), q_choice),
            Conditionals::GaussianShift(_) => Ok(self.clone()),
        }
    }

    /// The `n`-letter memoryless extension: every conditional and an explicit
    /// `Q` are replaced by their `n`-fold products.
    pub fn product(&self, n: usize) -> Result<Self> {
        match &self.conditionals {
            Conditionals::Discrete(v) => {
                let conds = v.iter().map(|p| p.power(n)).collect::<Result<Vec<_>>>()?;
                let q = match self.q_choice.as_ref().expect("discrete family") {
                    QChoice::Explicit(q) => QChoice::Explicit(q.power(n)?),
                    other => other.clone(),
                };
                Self::discrete(conds, q)
            }
            Conditionals::GaussianShift(v) => {
                if n == 0 {
                    return domain("product order must be positive");
                }
                let pairs = v
                    .iter()
                    .map(|p| GaussianShiftPair::new(p.shift_sq() * n as f64, p.sigma_sq()))
                    .collect::<Result<Vec<_>>>()?;
                Self::gaussian(pairs)
            }
        }
    }

    /// The reference law used at this λ, for discrete families.
    pub fn reference(&self, order: RenyiOrder) -> Option<DiscretePmf> {
        let conds = self.discrete_conditionals()?;
        Some(match self.q_choice.as_ref()? {
            QChoice::Uniform => DiscretePmf::uniform(conds[0].support_size()).expect("non-empty alphabet"),
            QChoice::Mixture => DiscretePmf::mixture(conds).expect("validated family"),
            QChoice::OptimalQStar => optimal_q_discrete(conds, order).expect("validated family").0,
            QChoice::Explicit(q) => q.clone(),
        })
    }

    /// `λ D_{1+λ}(P_i || Q)` for every codeword.
    pub fn log_moments(&self, order: RenyiOrder) -> Result<Vec<f64>> {
        match &self.conditionals {
            Conditionals::Discrete(conds) => {
                let q = self.reference(order).expect("discrete family");
                conds.iter().map(|p| log_renyi_moment(p, &q, order)).collect()
            }
            Conditionals::GaussianShift(pairs) => {
                Ok(pairs.iter().map(|p| order.lambda() * renyi_gaussian_shift(*p, order)).collect())
            }
        }
    }

    fn echo(&self) -> Value {
        match &self.conditionals {
            Conditionals::Discrete(v) => json!({
                "kind": "discrete",
                "m": v.len(),
                "alphabet": v[0].support_size(),
                "q_choice": self.q_choice.as_ref().map(QChoice::tag),
            }),
            Conditionals::GaussianShift(v) => json!({
                "kind": "gaussian_shift",
                "m": v.len(),
                "q_choice": "zero_mean_gaussian",
            }),
        }
    }
}

/// Which bound produced a [`BoundReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theorem1,
    Fano,
    GeneralizedFano,
}

/// Diagnostics attached to a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Some `P_i` is not absolutely continuous w.r.t. `Q`; the bound is vacuous.
    NotDominated,
    /// The raw bound fell outside `[0, 1]`.
    Clamped,
    /// `M = 1`: one codeword is always decoded correctly.
    SingleCodeword,
    LambdaAtLowerBound,
    LambdaAtUpperBound,
    LambdaInterior,
    /// The exponent of an application bound has the wrong sign.
    OutOfRegime,
    /// A Fano baseline whose validity condition fails.
    Vacuous,
    /// `log M <= 2`: both compressed-sensing bounds degenerate.
    DegenerateLogM,
    /// Two algebraically equivalent forms of a bound disagree.
    FormsDisagree,
    /// `min(f_κ(ψ), ψ)` took the linear branch.
    LinearLossBranch,
}

/// One evaluation of an error-probability bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub method: Method,
    /// The bound clamped to `[0, 1]`.
    pub eps_lower: f64,
    /// The bound before clamping; may be negative or `-inf`.
    pub eps_raw: f64,
    pub lambda_star: Option<f64>,
    pub gamma_star: Option<f64>,
    pub risk_lower: Option<f64>,
    pub flags: Vec<Flag>,
    /// Inputs echoed back, plus method-specific intermediate values.
    pub params: Value,
}

impl BoundReport {
    pub fn new(method: Method, eps_raw: f64, params: Value) -> Self {
        let mut flags = Vec::new();
        let eps_lower = if eps_raw.is_nan() {
            flags.push(Flag::Clamped);
            0.0
        } else {
            if !(0.0..=1.0).contains(&eps_raw) {
                flags.push(Flag::Clamped);
            }
            eps_raw.clamp(0.0, 1.0)
        };
        Self {
            method,
            eps_lower,
            eps_raw,
            lambda_star: None,
            gamma_star: None,
            risk_lower: None,
            flags,
            params,
        }
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub(crate) fn flag(&mut self, flag: Flag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    /// Forces the report to the vacuous value `0`.
    pub(crate) fn make_vacuous(&mut self, flag: Flag) {
        self.eps_lower = 0.0;
        self.flag(flag);
    }
}

/// `1 - (1+λ) (λM)^{-λ/(1+λ)} exp(log S / (1+λ))`, everything in logs so
/// that astronomically large `M` can be handled through `log M`.
pub fn theorem1_eps_raw(log_m: f64, log_mean_moment: f64, order: RenyiOrder) -> f64 {
    let lambda = order.lambda();
    let log_term = (1.0 + lambda).ln() - lambda / (1.0 + lambda) * (lambda.ln() + log_m)
        + log_mean_moment / (1.0 + lambda);
    if log_term.is_nan() {
        return f64::NEG_INFINITY;
    }
    -log_term.exp_m1()
}

/// `log((1/M) Σ_i exp(x_i))`.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs.iter().copied()) - (xs.len() as f64).ln()
}

/// The converse bound at a fixed λ with the family's choice of `Q`.
pub fn theorem1_bound(family: &ChannelFamily, order: RenyiOrder) -> BoundReport {
    let m = family.m();
    let lambda = order.lambda();
    let mut params = json!({ "family": family.echo(), "lambda": lambda });
    let log_moments = match family.log_moments(order) {
        Ok(v) => v,
        Err(Error::NotAbsolutelyContinuous { index, .. }) => {
            params["not_dominated_at"] = json!(index);
            let mut report = BoundReport::new(Method::Theorem1, f64::NEG_INFINITY, params);
            report.lambda_star = Some(lambda);
            report.make_vacuous(Flag::NotDominated);
            return report;
        }
        Err(e) => unreachable!("validated family: {e}"),
    };
    let log_s = log_mean_exp(&log_moments);
    let raw = theorem1_eps_raw((m as f64).ln(), log_s, order);
    params["log_mean_moment"] = json!(log_s);
    let mut report = BoundReport::new(Method::Theorem1, raw, params);
    report.lambda_star = Some(lambda);
    let log_gamma = (lambda.ln() + log_s + (m as f64).ln()) / (1.0 + lambda);
    report.gamma_star = Some(log_gamma.exp());
    if log_s == f64::INFINITY {
        report.make_vacuous(Flag::NotDominated);
    }
    if m == 1 {
        report.make_vacuous(Flag::SingleCodeword);
    }
    report
}

/// Maximises [`theorem1_bound`] over `λ ∈ [lo, hi]` (log-scale scan plus
/// golden section; see [`crate::optimize`]).
pub fn optimize_lambda(family: &ChannelFamily, lambda_range: (f64, f64)) -> Result<BoundReport> {
    let (lo, hi) = lambda_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return domain(format!("invalid λ range [{lo}, {hi}]"));
    }
    let eval = |l: f64| theorem1_bound(family, RenyiOrder::new(l).expect("positive λ")).eps_raw;
    let best = maximize_log_scale(eval, lo, hi);
    let mut report = theorem1_bound(family, RenyiOrder::new(best.argmax)?);
    report.params["lambda_range"] = json!([lo, hi]);
    report.flag(match best.boundary {
        Boundary::Lower => Flag::LambdaAtLowerBound,
        Boundary::Upper => Flag::LambdaAtUpperBound,
        Boundary::Interior => Flag::LambdaInterior,
    });
    Ok(report)
}

/// The ε bound implied by one fixed `γ > 0`: `1 - γ/M - S γ^{-λ}`.
pub fn gamma_variational_bound(family: &ChannelFamily, order: RenyiOrder, gamma: f64) -> f64 {
    let log_s = match family.log_moments(order) {
        Ok(v) => log_mean_exp(&v),
        Err(_) => f64::INFINITY,
    };
    1.0 - gamma / family.m() as f64 - (log_s - order.lambda() * gamma.ln()).exp()
}

/// The reference law maximising the converse bound at this λ, together with
/// its normalising constant `C`.
pub fn optimal_q_discrete(conditionals: &[DiscretePmf], order: RenyiOrder) -> Result<(DiscretePmf, f64)> {
    let first = conditionals.first().ok_or_else(|| Error::Domain("no conditionals".into()))?;
    let len = first.support_size();
    if let Some(p) = conditionals.iter().find(|p| p.support_size() != len) {
        return Err(Error::AlphabetMismatch(len, p.support_size()));
    }
    let a = order.order();
    let log_m = (conditionals.len() as f64).ln();
    let log_w: Vec<f64> = (0..len)
        .map(|y| {
            let terms = conditionals.iter().map(|p| {
                let v = p.probs()[y];
                if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    a * v.ln() - log_m
                }
            });
            log_sum_exp(terms) / a
        })
        .collect();
    let log_c = log_sum_exp(log_w.iter().copied());
    let weights: Vec<f64> = log_w.iter().map(|lw| (lw - log_c).exp()).collect();
    Ok((DiscretePmf::from_weights(&weights)?, log_c.exp()))
}

/// `(1/M) Σ_i D(P_i || P̄)`, which equals the mutual information `I(θ; Y)`
/// under a uniform prior.
pub fn mixture_avg_kl(conditionals: &[DiscretePmf]) -> Result<f64> {
    let mixture = DiscretePmf::mixture(conditionals)?;
    let total = conditionals.iter().map(|p| kl_discrete(p, &mixture)).sum::<Result<f64>>()?;
    Ok(total / conditionals.len() as f64)
}

/// Fano's inequality `ε_M >= 1 - (log 2 + avg_kl) / log M`, with the average
/// KL taken to the mixture.
pub fn fano_bound(m_codewords: usize, avg_kl_to_mixture: f64) -> Result<BoundReport> {
    if m_codewords < 2 {
        return domain(format!("Fano's inequality needs M >= 2, got {m_codewords}"));
    }
    if !(avg_kl_to_mixture >= 0.0) {
        return domain(format!("average KL must be non-negative, got {avg_kl_to_mixture}"));
    }
    let raw = 1.0 - (2f64.ln() + avg_kl_to_mixture) / (m_codewords as f64).ln();
    Ok(BoundReport::new(
        Method::Fano,
        raw,
        json!({ "m": m_codewords, "avg_kl_to_mixture": avg_kl_to_mixture }),
    ))
}

/// [`fano_bound`] for a discrete family.
pub fn fano_bound_for_family(family: &ChannelFamily) -> Result<BoundReport> {
    let conds = family
        .discrete_conditionals()
        .ok_or_else(|| Error::Capability("Fano baseline needs a discrete family".into()))?;
    fano_bound(family.m(), mixture_avg_kl(conds)?)
}

/// Right side of
/// `log M <= (1 + 1/λ) log((1+λ)/(1-ε)) - log λ + (1/λ) log(1 + λ κ(λ,t) I)`.
pub fn generalized_fano_logm_bound(order: RenyiOrder, t: f64, mutual_info: f64, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return domain(format!("ε must lie in [0, 1), got {eps}"));
    }
    if !(mutual_info >= 0.0) {
        return domain(format!("mutual information must be non-negative, got {mutual_info}"));
    }
    let lambda = order.lambda();
    let c = lambda * kappa(order, t)?;
    Ok((1.0 + 1.0 / lambda) * ((1.0 + lambda) / (1.0 - eps)).ln() - lambda.ln()
        + (c * mutual_info).ln_1p() / lambda)
}

/// `1 + I (λ^λ (1-ε)^{1+λ} / (1+λ)^{1+λ} - M^{-λ})^{-1}`, an upper bound on
/// `log M` for `M >= 3`; `None` when the bracket is not positive.
pub fn generalized_fano_logm_lambda_form(m: usize, mutual_info: f64, eps: f64, order: RenyiOrder) -> Option<f64> {
    let lambda = order.lambda();
    let bracket = lambda.powf(lambda) * (1.0 - eps).powf(1.0 + lambda) / (1.0 + lambda).powf(1.0 + lambda)
        - (m as f64).powf(-lambda);
    (bracket > 0.0).then(|| 1.0 + mutual_info / bracket)
}

/// ε bound obtained by inverting the generalised Fano inequality, i.e. the
/// converse bound with `λ H_{1+λ} + 1 <= λ κ(λ,t) I + 1` in place of the
/// exact moment. Uses `Q` = mixture and the exact `t = max dP/dQ`.
pub fn generalized_fano_bound(family: &ChannelFamily, order: RenyiOrder) -> Result<BoundReport> {
    let conds = family
        .discrete_conditionals()
        .ok_or_else(|| Error::Capability("generalised Fano needs a discrete family".into()))?;
    let mixture = DiscretePmf::mixture(conds)?;
    let t = conds
        .iter()
        .map(|p| max_likelihood_ratio(p, &mixture))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0, f64::max);
    let info = mixture_avg_kl(conds)?;
    let lambda = order.lambda();
    let log_s = (lambda * kappa(order, t)? * info).ln_1p();
    let raw = theorem1_eps_raw((family.m() as f64).ln(), log_s, order);
    let mut report = BoundReport::new(
        Method::GeneralizedFano,
        raw,
        json!({ "m": family.m(), "lambda": lambda, "t": t, "mutual_info": info }),
    );
    report.lambda_star = Some(lambda);
    if family.m() == 1 {
        report.make_vacuous(Flag::SingleCodeword);
    }
    Ok(report)
}

/// Hellinger divergence of the joint law `π P_{Y|θ}` from `π Q`.
pub fn joint_hellinger(family: &ChannelFamily, order: RenyiOrder) -> Result<f64> {
    let conds = family
        .discrete_conditionals()
        .ok_or_else(|| Error::Capability("needs a discrete family".into()))?;
    let q = family.reference(order).expect("discrete");
    let total = conds.iter().map(|p| hellinger_discrete(p, &q, order)).sum::<Result<f64>>()?;
    Ok(total / conds.len() as f64)
}

/// The loss transform `w`: monotone, `w(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFn {
    Identity,
    Power(f64),
    /// `w(u) = 1{u >= c}`.
    Indicator(f64),
}

impl LossFn {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            LossFn::Identity => u,
            LossFn::Power(p) => u.powf(p),
            LossFn::Indicator(c) => {
                if u >= c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `w`, the scale `A` and the rate `ψ_n` of a risk bound
/// `sup E w(d/ψ_n) >= w(A) ε_M` over a packing with minimum distance `2Aψ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    w: LossFn,
    a: f64,
    psi_n: f64,
}

impl LossSpec {
    pub fn new(w: LossFn, a: f64, psi_n: f64) -> Result<Self> {
        match w {
            LossFn::Power(p) if !(p > 0.0) => return domain(format!("power loss needs p > 0, got {p}")),
            LossFn::Indicator(c) if !(c > 0.0) => {
                return domain(format!("indicator loss needs c > 0, got {c}"))
            }
            _ => {}
        }
        if !(a > 0.0 && a.is_finite()) {
            return domain(format!("A must be positive, got {a}"));
        }
        if !(psi_n > 0.0 && psi_n.is_finite()) {
            return domain(format!("ψ_n must be positive, got {psi_n}"));
        }
        Ok(Self { w, a, psi_n })
    }

    pub fn w(&self) -> LossFn {
        self.w
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn psi_n(&self) -> f64 {
        self.psi_n
    }

    /// The packing separation `2 A ψ_n` this loss needs.
    pub fn required_min_distance(&self) -> f64 {
        2.0 * self.a * self.psi_n
    }
}

/// `w(A) ε`.
pub fn risk_from_eps(loss: &LossSpec, eps_lower: f64) -> f64 {
    loss.w.eval(loss.a) * eps_lower.clamp(0.0, 1.0)
}

/// [`risk_from_eps`] after checking that the packing is separated by at
/// least `2 A ψ_n`.
pub fn risk_from_eps_with_packing<T>(loss: &LossSpec, eps_lower: f64, packing: &PackingSet<T>) -> Result<f64> {
    let need = loss.required_min_distance();
    if packing.d_min() < need * (1.0 - 1e-12) {
        return domain(format!(
            "packing minimum distance {} is below 2Aψ_n = {need}",
            packing.d_min()
        ));
    }
    Ok(risk_from_eps(loss, eps_lower))
}

/// Total variation between two conditionals of a discrete family.
pub fn pairwise_tv(family: &ChannelFamily, i: usize, j: usize) -> Result<f64> {
    let conds = family
        .discrete_conditionals()
        .ok_or_else(|| Error::Capability("needs a discrete family".into()))?;
    divergence::total_variation(&conds[i], &conds[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(v: &[f64]) -> DiscretePmf {
        DiscretePmf::new(v.to_vec()).unwrap()
    }

    fn lam(l: f64) -> RenyiOrder {
        RenyiOrder::new(l).unwrap()
    }

    fn bsc(crossover: f64) -> Vec<DiscretePmf> {
        vec![pmf(&[1.0 - crossover, crossover]), pmf(&[crossover, 1.0 - crossover])]
    }

    #[test]
    fn zero_divergence_family() {
        let q = pmf(&[0.25, 0.75]);
        let fam = ChannelFamily::discrete(vec![q.clone(); 4], QChoice::Explicit(q)).unwrap();
        let r = theorem1_bound(&fam, lam(1.0));
        assert!(r.eps_raw.abs() < 1e-15);
        assert_eq!(r.eps_lower, 0.0);
    }

    #[test]
    fn huge_m_zero_divergence() {
        let raw = theorem1_eps_raw(1e6f64.ln(), 0.0, lam(1.0));
        assert!((raw - 0.998).abs() < 1e-12);
    }

    #[test]
    fn binary_symmetric_pair_below_bayes_error() {
        let fam = ChannelFamily::discrete(bsc(0.1), QChoice::Mixture).unwrap();
        for k in 0..20 {
            let l = 10f64.powf(-2.0 + 3.0 * k as f64 / 19.0);
            let r = theorem1_bound(&fam, lam(l));
            assert!(r.eps_lower <= 0.1 + 1e-12, "λ = {l}: {}", r.eps_lower);
        }
    }

    #[test]
    fn single_codeword_is_vacuous() {
        let fam = ChannelFamily::discrete(vec![pmf(&[0.5, 0.5])], QChoice::Mixture).unwrap();
        let r = theorem1_bound(&fam, lam(0.7));
        assert_eq!(r.eps_lower, 0.0);
        assert!(r.eps_raw <= 0.0);
        assert!(r.has_flag(Flag::SingleCodeword));
        for g in [1e-3, 0.5, 1.0, 7.0, 1e4] {
            assert!(gamma_variational_bound(&fam, lam(0.7), g) <= 0.0);
        }
    }

    #[test]
    fn domination_failure_gives_vacuous_report() {
        let fam = ChannelFamily::discrete(
            vec![pmf(&[0.5, 0.5]), pmf(&[0.0, 1.0])],
            QChoice::Explicit(pmf(&[0.0, 1.0])),
        )
        .unwrap();
        let r = theorem1_bound(&fam, lam(1.0));
        assert_eq!(r.eps_lower, 0.0);
        assert!(r.has_flag(Flag::NotDominated));
    }

    #[test]
    fn gamma_star_attains_closed_form() {
        let fam = ChannelFamily::discrete(
            vec![pmf(&[0.7, 0.2, 0.1]), pmf(&[0.1, 0.3, 0.6]), pmf(&[0.3, 0.4, 0.3])],
            QChoice::Uniform,
        )
        .unwrap();
        let o = lam(0.6);
        let r = theorem1_bound(&fam, o);
        let g = r.gamma_star.unwrap();
        assert!((gamma_variational_bound(&fam, o, g) - r.eps_raw).abs() < 1e-13);
        assert!(gamma_variational_bound(&fam, o, g * 1.01) < r.eps_raw);
        assert!(gamma_variational_bound(&fam, o, g / 1.01) < r.eps_raw);
    }

    #[test]
    fn optimal_q_examples() {
        let p = pmf(&[0.2, 0.3, 0.5]);
        let (q, c) = optimal_q_discrete(&[p.clone(), p.clone()], lam(0.8)).unwrap();
        assert!(q.approx_eq(&p, 1e-15));
        assert!((c - 1.0).abs() < 1e-15);
        let (q, c) = optimal_q_discrete(&[pmf(&[1.0, 0.0]), pmf(&[0.0, 1.0])], lam(1.0)).unwrap();
        assert!(q.approx_eq(&pmf(&[0.5, 0.5]), 1e-15));
        // Each outcome has weight ((1/2)·1)^{1/2}.
        assert!((c - 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn optimize_lambda_brackets_endpoints() {
        let fam = ChannelFamily::discrete(bsc(0.05).into_iter().chain(bsc(0.3)).collect(), QChoice::Mixture)
            .unwrap();
        let r = optimize_lambda(&fam, (1e-3, 5.0)).unwrap();
        let lo = theorem1_bound(&fam, lam(1e-3)).eps_raw;
        let hi = theorem1_bound(&fam, lam(5.0)).eps_raw;
        assert!(r.eps_raw >= lo && r.eps_raw >= hi);
        assert!(r.flags.iter().any(|f| matches!(
            f,
            Flag::LambdaInterior | Flag::LambdaAtLowerBound | Flag::LambdaAtUpperBound
        )));
        assert!(optimize_lambda(&fam, (0.0, 1.0)).is_err());
    }

    #[test]
    fn fano_examples() {
        assert_eq!(fano_bound(2, 0.0).unwrap().eps_raw, 0.0);
        let r = fano_bound(16, 2f64.ln()).unwrap();
        assert!((r.eps_lower - 0.5).abs() < 1e-15);
        assert!(fano_bound(1, 0.0).is_err());
        let conds = vec![pmf(&[0.6, 0.4]), pmf(&[0.2, 0.8]), pmf(&[0.5, 0.5])];
        let mix = DiscretePmf::mixture(&conds).unwrap();
        let by_hand: f64 = conds.iter().map(|p| kl_discrete(p, &mix).unwrap()).sum::<f64>() / 3.0;
        assert!((mixture_avg_kl(&conds).unwrap() - by_hand).abs() < 1e-15);
    }

    #[test]
    fn generalized_fano_examples() {
        let v = generalized_fano_logm_bound(lam(1.0), 2.0, 0.0, 0.0).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-15);
        assert!(generalized_fano_logm_bound(lam(1.0), 2.0, 0.0, 1.0).is_err());
        assert!(generalized_fano_logm_bound(lam(1.0), 0.5, 0.0, 0.1).is_err());
        assert!(generalized_fano_logm_lambda_form(4, 0.1, 0.9999, lam(0.5)).is_none());
    }

    #[test]
    fn generalized_fano_bound_is_weaker_than_exact_moment() {
        let fam = ChannelFamily::discrete(
            vec![pmf(&[0.7, 0.2, 0.1]), pmf(&[0.1, 0.3, 0.6]), pmf(&[0.3, 0.4, 0.3])],
            QChoice::Mixture,
        )
        .unwrap();
        for l in [0.1, 0.5, 1.0] {
            let exact = theorem1_bound(&fam, lam(l)).eps_raw;
            let gf = generalized_fano_bound(&fam, lam(l)).unwrap().eps_raw;
            assert!(gf <= exact + 1e-12);
        }
    }

    #[test]
    fn risk_assembly() {
        let id = LossSpec::new(LossFn::Identity, 1.0, 0.1).unwrap();
        assert_eq!(risk_from_eps(&id, 0.5), 0.5);
        assert_eq!(risk_from_eps(&id, 0.0), 0.0);
        let c: f64 = 3.0;
        let sq = LossSpec::new(LossFn::Power(2.0), c / (2.0 * 2f64.sqrt()), 1.0).unwrap();
        assert!((risk_from_eps(&sq, 0.4) - c * c / 8.0 * 0.4).abs() < 1e-15);
        let ind = LossSpec::new(LossFn::Indicator(2.0), 1.0, 1.0).unwrap();
        assert_eq!(risk_from_eps(&ind, 0.9), 0.0);
        assert!(LossSpec::new(LossFn::Power(0.0), 1.0, 1.0).is_err());
        assert!(LossSpec::new(LossFn::Identity, 0.0, 1.0).is_err());
    }

    #[test]
    fn risk_checks_packing_separation() {
        let packing = PackingSet::new(vec![vec![0.0], vec![1.0]], crate::packing::Metric::L2, 1.0).unwrap();
        let ok = LossSpec::new(LossFn::Identity, 1.0, 0.5).unwrap();
        assert!(risk_from_eps_with_packing(&ok, 0.3, &packing).is_ok());
        let too_wide = LossSpec::new(LossFn::Identity, 1.0, 0.6).unwrap();
        assert!(risk_from_eps_with_packing(&too_wide, 0.3, &packing).is_err());
    }

    #[test]
    fn gaussian_family_moments() {
        let pairs = vec![GaussianShiftPair::new(2.0, 1.0).unwrap(); 3];
        let fam = ChannelFamily::gaussian(pairs).unwrap();
        let m = fam.log_moments(lam(1.0)).unwrap();
        assert!(m.iter().all(|v| (v - 2.0).abs() < 1e-15));
        let fam3 = fam.product(3).unwrap();
        assert!((fam3.log_moments(lam(1.0)).unwrap()[0] - 6.0).abs() < 1e-15);
    }
}
