//! Ground truth computed without going through any bound.
//!
//! * [`exact_bayes_error`] enumerates the output alphabet and evaluates the
//!   error of the MAP decoder under a uniform prior, which is the smallest
//!   error any decoder can reach.
//! * [`min_distance_decoder_error`] evaluates a concrete (suboptimal)
//!   decoder that rounds an estimate to the nearest codeword.
//! * [`HypercubeDensityFamily`] and its quadrature routines check the
//!   algebra behind the density-estimation bound.
//! * [`gaussian_renyi_quadrature`] integrates a Gaussian Rényi divergence
//!   numerically, independently of its closed form.
//!
//! The randomised suites in [`suites`] combine these with the bounds and are
//! shared by the command-line tool and the acceptance tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::converse::ChannelFamily;
use crate::divergence::{likelihood_ratio_tail, randomized_test_gap, DiscretePmf, GaussianShiftPair, RenyiOrder};
use crate::error::{domain, Error, Result};
use crate::packing::PackingSet;
use crate::quadrature::adaptive_simpson;

pub mod suites;

/// Largest output alphabet the enumeration routines accept.
pub const MAX_OUTCOMES: usize = 1_000_000;

const PARALLEL_CHUNK: usize = 4096;

fn enumerable(family: &ChannelFamily) -> Result<&[DiscretePmf]> {
    let conds = family
        .discrete_conditionals()
        .ok_or_else(|| Error::Capability("enumeration needs a finite output alphabet".into()))?;
    let size = conds[0].support_size();
    if size > MAX_OUTCOMES {
        return Err(Error::Capability(format!("{size} outcomes exceed the enumeration limit of {MAX_OUTCOMES}")));
    }
    Ok(conds)
}

/// Sums `f(y)` over `0..size`, in parallel but in a fixed order.
fn ordered_sum(size: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let starts: Vec<usize> = (0..size).step_by(PARALLEL_CHUNK).collect();
    let partial: Vec<f64> = starts
        .par_iter()
        .map(|&s| (s..(s + PARALLEL_CHUNK).min(size)).map(&f).sum())
        .collect();
    partial.into_iter().sum()
}

/// `1 - (1/M) Σ_y max_i P(y | θ_i)`: the error of the optimal decoder.
pub fn exact_bayes_error(family: &ChannelFamily) -> Result<f64> {
    let conds = enumerable(family)?;
    let hits = ordered_sum(conds[0].support_size(), |y| {
        conds.iter().map(|p| p.probs()[y]).fold(0.0, f64::max)
    });
    Ok((1.0 - hits / conds.len() as f64).clamp(0.0, 1.0))
}

/// Index of the packing element closest to `estimate` (smallest index on
/// ties).
pub fn nearest_codeword<T>(packing: &PackingSet<T>, estimate: &T, distance: impl Fn(&T, &T) -> f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, theta) in packing.elements().iter().enumerate() {
        let d = distance(estimate, theta);
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// Exact average error of the decoder `y ↦ argmin_j d(θ̂(y), θ_j)`, where
/// `θ̂` is the supplied estimator and `θ_j` are the packing elements, which
/// must correspond one-to-one with the family's codewords.
pub fn min_distance_decoder_error<T: Sync>(
    family: &ChannelFamily,
    packing: &PackingSet<T>,
    estimator: impl Fn(usize) -> T + Sync,
    distance: impl Fn(&T, &T) -> f64 + Sync,
) -> Result<f64> {
    let conds = enumerable(family)?;
    if packing.len() != conds.len() {
        return domain(format!("packing has {} elements but the family has {} codewords", packing.len(), conds.len()));
    }
    let hits = ordered_sum(conds[0].support_size(), |y| {
        let j = nearest_codeword(packing, &estimator(y), &distance);
        conds[j].probs()[y]
    });
    Ok((1.0 - hits / conds.len() as f64).clamp(0.0, 1.0))
}

/// Bump shapes for the hypercube density class; both integrate to zero on
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpShape {
    /// `sin(2πx)`: `∫g² = 1/2`, `sup|g| = 1`.
    Sine,
    /// `x² - x + 1/6`: `∫g² = 1/180`, `sup|g| = 1/6`.
    Quadratic,
}

impl BumpShape {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BumpShape::Sine => (2.0 * std::f64::consts::PI * x).sin(),
            BumpShape::Quadratic => x * x - x + 1.0 / 6.0,
        }
    }

    /// `a = ∫₀¹ g²`.
    pub fn a(self) -> f64 {
        match self {
            BumpShape::Sine => 0.5,
            BumpShape::Quadratic => 1.0 / 180.0,
        }
    }

    pub fn sup_abs(self) -> f64 {
        match self {
            BumpShape::Sine => 1.0,
            BumpShape::Quadratic => 1.0 / 6.0,
        }
    }
}

/// Densities `f_τ(y) = 1 + Σ_j τ_j (c/m²) g(my - j) 1{j/m <= y < (j+1)/m}`
/// on `[0, 1]`, indexed by sign vectors `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeDensityFamily {
    m: usize,
    c: f64,
    g: BumpShape,
    tau_set: Vec<Vec<i8>>,
}

impl HypercubeDensityFamily {
    pub fn new(m: usize, c: f64, g: BumpShape, tau_set: Vec<Vec<i8>>) -> Result<Self> {
        if m == 0 {
            return domain("need at least one subinterval");
        }
        if !(c >= 0.0 && c.is_finite()) {
            return domain(format!("perturbation scale must be non-negative, got {c}"));
        }
        if c * g.sup_abs() / (m * m) as f64 >= 1.0 {
            return domain("c·sup|g|/m² must be below 1 for the densities to be non-negative");
        }
        for (i, tau) in tau_set.iter().enumerate() {
            if tau.len() != m || tau.iter().any(|&s| s != 1 && s != -1) {
                return domain(format!("sign vector {i} is not in {{±1}}^{m}"));
            }
        }
        Ok(Self { m, c, g, tau_set })
    }

    /// Convenience constructor with the all-plus and alternating sign
    /// vectors, enough for the identity checks.
    pub fn with_default_signs(m: usize, c: f64, g: BumpShape) -> Result<Self> {
        let plus = vec![1; m];
        let alt = (0..m).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect();
        Self::new(m, c, g, vec![plus, alt])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn shape(&self) -> BumpShape {
        self.g
    }

    pub fn tau_set(&self) -> &[Vec<i8>] {
        &self.tau_set
    }

    fn tau(&self, index: usize) -> Result<&[i8]> {
        self.tau_set
            .get(index)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Domain(format!("no sign vector with index {index}")))
    }

    /// `f_τ` restricted to cell `j`, as a function of `y ∈ [j/m, (j+1)/m]`.
    fn cell_density(&self, tau: &[i8], j: usize) -> impl Fn(f64) -> f64 + '_ {
        let scale = tau[j] as f64 * self.c / (self.m * self.m) as f64;
        let m = self.m as f64;
        move |y| 1.0 + scale * self.g.eval(m * y - j as f64)
    }

    /// `f_τ(y)` for `y ∈ [0, 1]`.
    pub fn density(&self, tau_index: usize, y: f64) -> Result<f64> {
        let tau = self.tau(tau_index)?;
        if !(0.0..=1.0).contains(&y) {
            return Ok(0.0);
        }
        let j = ((y * self.m as f64) as usize).min(self.m - 1);
        Ok(self.cell_density(tau, j)(y))
    }

    /// `∫ f` of `integrand(f_a, f_b)` cell by cell.
    fn integrate(&self, tau_a: &[i8], tau_b: &[i8], integrand: impl Fn(f64, f64) -> f64) -> f64 {
        let m = self.m as f64;
        let tol = QUADRATURE_TOL / m;
        (0..self.m)
            .map(|j| {
                let fa = self.cell_density(tau_a, j);
                let fb = self.cell_density(tau_b, j);
                adaptive_simpson(|y| integrand(fa(y), fb(y)), j as f64 / m, (j + 1) as f64 / m, tol, 4)
            })
            .sum()
    }
}

const QUADRATURE_TOL: f64 = 1e-10;

/// `∫₀¹ f_τ(y)² dy` by adaptive quadrature on each cell.
pub fn density_sq_integral(family: &HypercubeDensityFamily, tau_index: usize) -> Result<f64> {
    let tau = family.tau(tau_index)?;
    Ok(family.integrate(tau, tau, |f, _| f * f))
}

/// The closed form `1 + c²a/m⁴` that [`density_sq_integral`] must match.
pub fn density_sq_integral_closed_form(family: &HypercubeDensityFamily) -> f64 {
    1.0 + family.c * family.c * family.g.a() / (family.m as f64).powi(4)
}

/// `∫ (√f_a - √f_b)²` by adaptive quadrature on each cell.
pub fn hellinger_sq_distance(family: &HypercubeDensityFamily, tau_a: usize, tau_b: usize) -> Result<f64> {
    let (a, b) = (family.tau(tau_a)?, family.tau(tau_b)?);
    if a == b {
        return Ok(0.0);
    }
    Ok(family.integrate(a, b, |fa, fb| (fa.sqrt() - fb.sqrt()).powi(2)))
}

/// Both sides of `(∫ f_τ²)^n = (1 + x)^n <= exp(x n)` with `x = c²a/m⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Check {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const LEMMA2_MAX_N: usize = 30;

pub fn lemma2_sides(family: &HypercubeDensityFamily, n: usize) -> Result<Lemma2Check> {
    if n > LEMMA2_MAX_N {
        return domain(format!("n = {n} exceeds {LEMMA2_MAX_N}"));
    }
    let x = density_sq_integral_closed_form(family) - 1.0;
    let lhs = (n as f64 * x.ln_1p()).exp();
    let rhs = (x * n as f64).exp();
    Ok(Lemma2Check { x, lhs, rhs, holds: lhs <= rhs })
}

pub fn lemma2_product_bound_check(family: &HypercubeDensityFamily, n: usize) -> Result<bool> {
    Ok(lemma2_sides(family, n)?.holds)
}

/// `D_{1+λ}(N(μ, σ²) || N(0, σ²))` with `μ² = shift_sq`, by quadrature of
/// `p^{1+λ} q^{-λ}` in log space. Only the one-dimensional slice along the
/// shift matters, since the orthogonal coordinates cancel.
pub fn gaussian_renyi_quadrature(pair: GaussianShiftPair, order: RenyiOrder) -> f64 {
    let lambda = order.lambda();
    let mu = pair.shift_sq().sqrt();
    let sigma_sq = pair.sigma_sq();
    let sigma = sigma_sq.sqrt();
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * sigma_sq).ln();
    let log_p = |x: f64| log_norm - (x - mu).powi(2) / (2.0 * sigma_sq);
    let log_q = |x: f64| log_norm - x * x / (2.0 * sigma_sq);
    let log_integrand = |x: f64| (1.0 + lambda) * log_p(x) - lambda * log_q(x);
    // The integrand is a bump whose peak lies somewhere between the two
    // means and their reflections; a window of 40σ beyond all of them holds
    // all of its mass.
    let reach = mu * (2.0 + lambda);
    let (lo, hi) = (-reach - 40.0 * sigma, reach + 40.0 * sigma);
    let grid = 4096;
    let shift = (0..=grid)
        .map(|i| log_integrand(lo + (hi - lo) * i as f64 / grid as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let integral = adaptive_simpson(|x| (log_integrand(x) - shift).exp(), lo, hi, 1e-13, 64);
    (shift + integral.ln()) / lambda
}

/// `(P[T=1] - γ Q[T=1], P[dP/dQ > γ])` for a randomized test `T`; the first
/// never exceeds the second.
pub fn randomized_test_check(p: &DiscretePmf, q: &DiscretePmf, gamma: f64, test: &[f64]) -> Result<(f64, f64)> {
    Ok((randomized_test_gap(p, q, gamma, test)?, likelihood_ratio_tail(p, q, gamma)?))
}
