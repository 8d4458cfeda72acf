//! The three worked applications: density estimation over a hypercube class
//! of perturbed uniform densities, active learning of a boundary-fragment
//! classifier, and sparse recovery from noisy linear measurements.
//!
//! Each `*_bound` function evaluates the converse bound (`strong`) and the
//! Fano-type baseline from the earlier literature (`fano`) at the same
//! parameters, together with the large-`n` limit of the risk bound.
//!
//! Sample sizes are real numbers so that sweeps can reach `n = 10¹⁴` and
//! beyond; the bandwidth `m` that the bounds are evaluated at is real as
//! well, and each report also records the value at `⌊m⌋`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::converse::{risk_from_eps, BoundReport, Flag, LossFn, LossSpec, Method};
use crate::error::{config, Error, Result};
use crate::oracle::BumpShape;

/// Relative disagreement above which two equivalent forms are flagged.
pub const FORMS_RTOL: f64 = 1e-9;

/// The strong bound next to its Fano-type baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub app: &'static str,
    pub config: Value,
    pub strong: BoundReport,
    pub fano: BoundReport,
    /// Large-`n` limit of the strong risk bound at this `n`.
    pub asymptote: f64,
    /// `strong.risk_lower / fano.risk_lower`; absent if the latter is zero.
    pub ratio: Option<f64>,
}

impl ComparisonReport {
    fn new(app: &'static str, config: Value, mut strong: BoundReport, mut fano: BoundReport, asymptote: f64) -> Self {
        strong.params["config"] = config.clone();
        fano.params["config"] = config.clone();
        let ratio = match (strong.risk_lower, fano.risk_lower) {
            (Some(s), Some(f)) if f > 0.0 => Some(s / f),
            _ => None,
        };
        Self { app, config, strong, fano, asymptote, ratio }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config(format!("{name} must be positive and finite, got {v}"))
    }
}

fn forms_agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= FORMS_RTOL * a.abs().max(b.abs()).max(1e-300) || a == b
}

// ---------------------------------------------------------------------------
// Density estimation

/// Parameters of the density-estimation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub n: f64,
    /// Bandwidth constant: `m = n^{1/5} / ν`.
    pub nu: f64,
    /// Perturbation scale.
    pub c: f64,
    /// `∫ g²` of the bump.
    pub a: f64,
    /// Packing exponent: at least `e^{c₀ m}` well-separated sign vectors.
    pub c0: f64,
    /// `c · sup|g|`, only used by the baseline.
    pub c_g: f64,
    /// If set, `ν` follows `(c₀/(c²a))^{1/5} (1 - n^{-1/κ_s})` with this `κ_s`
    /// instead of the fixed value.
    pub nu_schedule: Option<f64>,
}

pub const DEFAULT_C0: f64 = 0.082;
pub const DEFAULT_NU_SCHEDULE_EXPONENT: f64 = 26.0;

impl DensityConfig {
    /// Defaults to `g = sin(2πx)`.
    pub fn new(n: f64, nu: f64, c: f64) -> Self {
        Self::with_shape(n, nu, c, BumpShape::Sine)
    }

    pub fn with_shape(n: f64, nu: f64, c: f64, shape: BumpShape) -> Self {
        Self { n, nu, c, a: shape.a(), c0: DEFAULT_C0, c_g: c * shape.sup_abs(), nu_schedule: None }
    }

    /// The largest `ν` for which the strong bound tends to one.
    pub fn nu_limit(&self) -> f64 {
        (self.c0 / (self.c * self.c * self.a)).powf(0.2)
    }

    /// The `ν` actually used.
    pub fn effective_nu(&self) -> f64 {
        match self.nu_schedule {
            Some(k) => self.nu_limit() * (1.0 - self.n.powf(-1.0 / k)),
            None => self.nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return config(format!("n must be at least 1, got {}", self.n));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return config(format!("c must be non-negative, got {}", self.c));
        }
        positive("a", self.a)?;
        positive("c0", self.c0)?;
        if !(self.c_g >= 0.0 && self.c_g < 1.0) {
            return config(format!("c_g < 1 is required, got c_g = {}", self.c_g));
        }
        match self.nu_schedule {
            Some(k) => {
                if !(k > 0.0) {
                    return config(format!("ν schedule exponent must be positive, got {k}"));
                }
                if self.c == 0.0 {
                    return config("the ν schedule needs c > 0");
                }
                if !(self.effective_nu() > 0.0) {
                    return config("the ν schedule gives ν <= 0 at n = 1; use n > 1");
                }
            }
            None => {
                positive("nu", self.nu)?;
                let limit = self.nu_limit();
                if !(self.nu < limit) {
                    return config(format!("ν < (c0/(c²a))^(1/5) is required, got ν = {} >= {limit}", self.nu));
                }
            }
        }
        Ok(())
    }
}

/// `1 - 2 exp(-(m/2)(c₀ - c²a n / m⁵))`, the bound before `m` is tied to `n`.
fn density_eps_at_m(cfg: &DensityConfig, m: f64) -> f64 {
    let c2a = cfg.c * cfg.c * cfg.a;
    1.0 - 2.0 * (-(m / 2.0) * (cfg.c0 - c2a * cfg.n / m.powi(5))).exp()
}

/// Converse bound and baseline for density estimation.
pub fn density_bound(cfg: &DensityConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let (n, c0) = (cfg.n, cfg.c0);
    let nu = cfg.effective_nu();
    let c2a = cfg.c * cfg.c * cfg.a;
    let n5 = n.powf(0.2);
    let m = n5 / nu;

    let eps_raw = 1.0 - 2.0 * (-(n5 / (2.0 * nu)) * (c0 - nu.powi(5) * c2a)).exp();
    let eps_pre = density_eps_at_m(cfg, m);
    let m_floor = m.floor();
    let (eps_floor, risk_floor) = if m_floor >= 1.0 {
        let e = density_eps_at_m(cfg, m_floor);
        (Some(e), Some(c2a / (6.0 * m_floor.powi(4)) * e.clamp(0.0, 1.0)))
    } else {
        (None, None)
    };
    let mut strong = BoundReport::new(
        Method::Theorem1,
        eps_raw,
        json!({
            "nu": nu,
            "m": m,
            "psi_n": c2a / (6.0 * m.powi(4)),
            "eps_pre_substitution": eps_pre,
            "floor_m": { "m": m_floor, "eps": eps_floor, "risk": risk_floor },
        }),
    );
    strong.lambda_star = Some(1.0);
    if !forms_agree(eps_raw, eps_pre) {
        strong.flag(Flag::FormsDisagree);
    }
    if c0 - nu.powi(5) * c2a <= 0.0 {
        strong.flag(Flag::OutOfRegime);
    }
    // risk >= ψ_n w(A) ε with w the identity, A = 1 and ψ_n = c²a / (6 m⁴).
    strong.risk_lower = Some(if c2a == 0.0 {
        0.0
    } else {
        let loss = LossSpec::new(LossFn::Identity, 1.0, c2a / (6.0 * m.powi(4)))?;
        loss.psi_n() * risk_from_eps(&loss, strong.eps_lower)
    });

    let margin = 2.0 * c2a * nu.powi(5) / ((1.0 - cfg.c_g) * c0);
    let fano_raw = 1.0 - margin - 2f64.ln() / (c0 * n5);
    let mut fano = BoundReport::new(
        Method::Fano,
        fano_raw,
        json!({
            "margin": margin,
            "nu_max": (c0 / c2a * (1.0 - cfg.c_g) / 2.0).powf(0.2),
        }),
    );
    if fano_raw <= 0.0 {
        fano.flag(Flag::Vacuous);
    }
    fano.risk_lower = Some(c2a * nu.powi(4) / 6.0 * n.powf(-0.8) * fano.eps_lower);

    let asymptote = c0.powf(0.8) * c2a.powf(0.2) / 6.0 * n.powf(-0.8);
    let cfg_json = serde_json::to_value(cfg).expect("plain data");
    Ok(ComparisonReport::new("density", cfg_json, strong, fano, asymptote))
}

// ---------------------------------------------------------------------------
// Active learning

/// Parameters of the active-learning bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveConfig {
    pub n: f64,
    /// Feature dimension, at least 2.
    pub d: u32,
    /// Smoothness of the boundary fragment.
    pub alpha: f64,
    /// Noise exponent, at least 1.
    pub kappa: f64,
    pub l: f64,
    /// Noise margin constant in `(0, 1/2]`.
    pub c: f64,
    /// `‖h‖₁` of the bump used in the construction.
    pub h: f64,
    pub nu: f64,
    /// Rényi parameter in `(0, 1]`.
    pub lambda: f64,
}

impl ActiveConfig {
    /// `ρ = (d - 1) / α`.
    pub fn rho(&self) -> f64 {
        (self.d as f64 - 1.0) / self.alpha
    }

    /// `2κ - 2 + ρ`.
    fn denom_exp(&self) -> f64 {
        2.0 * self.kappa - 2.0 + self.rho()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return config(format!("n must be at least 1, got {}", self.n));
        }
        if self.d < 2 {
            return config(format!("d >= 2 is required, got {}", self.d));
        }
        positive("alpha", self.alpha)?;
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return config(format!("κ >= 1 is required, got {}", self.kappa));
        }
        positive("L", self.l)?;
        positive("H", self.h)?;
        positive("nu", self.nu)?;
        if !(self.c > 0.0 && self.c <= 0.5) {
            return config(format!("c ∈ (0, 1/2] is required, got c = {}", self.c));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return config(format!("λ ∈ (0, 1] is required, got λ = {}", self.lambda));
        }
        Ok(())
    }

    /// Bandwidth `m = n^{1/(α(2κ-2) + d - 1)} / ν`.
    pub fn bandwidth(&self) -> f64 {
        self.n.powf(1.0 / (self.alpha * (2.0 * self.kappa - 2.0) + self.d as f64 - 1.0)) / self.nu
    }
}

/// `(1+λ) / λ^{λ/(1+λ)}`.
fn active_prefactor(lambda: f64) -> f64 {
    (1.0 + lambda) / lambda.powf(lambda / (1.0 + lambda))
}

/// The bound at bandwidth `m` with `M = 2^{m^{d-1}/8}` and `β_m = LH m^{-α}`.
fn active_eps_at_m(cfg: &ActiveConfig, m: f64) -> f64 {
    let lambda = cfg.lambda;
    let beta = cfg.l * cfg.h * m.powf(-cfg.alpha);
    let denom = 1.0 - 2.0 * cfg.c * beta;
    if denom <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let growth = 16.0 * cfg.c * cfg.c * beta.powf(2.0 * (cfg.kappa - 1.0)) * cfg.n / denom;
    let log_m = m.powf(cfg.d as f64 - 1.0) * 2f64.ln() / 8.0;
    1.0 - active_prefactor(lambda) * (lambda / (1.0 + lambda) * (growth - log_m)).exp()
}

/// The bound as a function of `n` and `ν`, given the denominator
/// `1 - 2cLH·s·n^{-1/(2κ-2+ρ)}` with scale `s`.
fn active_eps_substituted(cfg: &ActiveConfig, scale: f64) -> (f64, f64, f64) {
    let lambda = cfg.lambda;
    let dexp = cfg.denom_exp();
    let lh = cfg.l * cfg.h;
    let denom = 1.0 - 2.0 * cfg.c * lh * scale * cfg.n.powf(-1.0 / dexp);
    let dm1 = cfg.d as f64 - 1.0;
    let bracket = 2f64.ln() / 8.0
        - 16.0 * cfg.c * cfg.c * lh.powf(2.0 * cfg.kappa - 2.0)
            * cfg.nu.powf(dm1 + 2.0 * cfg.alpha * (cfg.kappa - 1.0))
            / denom;
    let eps = if denom <= 0.0 {
        f64::NEG_INFINITY
    } else {
        let exponent = -lambda * cfg.n.powf(cfg.rho() / dexp) / ((1.0 + lambda) * cfg.nu.powf(dm1)) * bracket;
        1.0 - active_prefactor(lambda) * exponent.exp()
    };
    (eps, bracket, denom)
}

/// Converse bound and baseline for active learning.
///
/// The displayed closed form divides by `1 - 2cLH n^{-1/(2κ-2+ρ)}/ν`, while
/// substituting the bandwidth into the bound at fixed `m` gives the factor
/// `ν^α` in place of `1/ν`. Both are computed; the smaller one is reported.
pub fn active_bound(cfg: &ActiveConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let (n, kappa, c) = (cfg.n, cfg.kappa, cfg.c);
    let lh = cfg.l * cfg.h;
    let dexp = cfg.denom_exp();
    let m = cfg.bandwidth();

    let (eps_displayed, bracket, denom_displayed) = active_eps_substituted(cfg, 1.0 / cfg.nu);
    let (eps_proof, bracket_proof, denom_proof) = active_eps_substituted(cfg, cfg.nu.powf(cfg.alpha));
    let eps_pre = active_eps_at_m(cfg, m);
    let m_floor = m.floor();
    let eps_floor = (m_floor >= 1.0).then(|| active_eps_at_m(cfg, m_floor));
    let eps_raw = eps_displayed.min(eps_proof);

    let beta_m = lh * cfg.nu.powf(cfg.alpha) * n.powf(-1.0 / dexp);
    let psi = beta_m / 16.0;
    let f_power = 4.0 * c / (kappa * 2f64.powf(kappa)) * psi.powf(kappa);
    let f_psi = f_power.min(psi);

    let mut strong = BoundReport::new(
        Method::Theorem1,
        eps_raw,
        json!({
            "rho": cfg.rho(),
            "m": m,
            "beta_m": beta_m,
            "psi_n": psi,
            "f_psi": f_psi,
            "bracket": bracket,
            "bracket_proof": bracket_proof,
            "eps_displayed": eps_displayed,
            "eps_proof_substitution": eps_proof,
            "eps_pre_substitution": eps_pre,
            "denominator_displayed": denom_displayed,
            "denominator_proof": denom_proof,
            "floor_m": { "m": m_floor, "eps": eps_floor },
        }),
    );
    strong.lambda_star = Some(cfg.lambda);
    if !forms_agree(eps_displayed, eps_proof) || !forms_agree(eps_proof, eps_pre) {
        strong.flag(Flag::FormsDisagree);
    }
    if bracket <= 0.0 || bracket_proof <= 0.0 || denom_displayed <= 0.0 || denom_proof <= 0.0 {
        strong.flag(Flag::OutOfRegime);
    }
    if psi < f_power {
        strong.flag(Flag::LinearLossBranch);
    }
    strong.risk_lower = Some(f_psi * strong.eps_lower);

    let xi = 256.0 / 2f64.ln() * c * c * lh.powf(2.0 * kappa - 2.0) * cfg.nu;
    let fano_raw = 1.0
        - 2.0 * xi
        - (32.0 * xi * cfg.nu.powf(cfg.d as f64 - 1.0) / 2f64.ln()).sqrt()
            * n.powf(-cfg.rho() / (4.0 * (kappa - 1.0) + 2.0 * cfg.rho()));
    let mut fano = BoundReport::new(
        Method::Fano,
        fano_raw,
        json!({ "xi": xi, "nu_max": 2f64.ln() / (512.0 * c * c * lh.powf(2.0 * kappa - 2.0)) }),
    );
    if xi >= 0.5 {
        fano.make_vacuous(Flag::Vacuous);
    }
    fano.risk_lower = Some(f_psi * fano.eps_lower);

    let asymptote = 4.0 * c / (kappa * 32f64.powf(kappa))
        * (2f64.ln() / (128.0 * c * c)).powf(kappa / dexp)
        * lh.powf(kappa * cfg.rho() / dexp)
        * n.powf(-kappa / dexp);
    let cfg_json = serde_json::to_value(cfg).expect("plain data");
    Ok(ComparisonReport::new("active", cfg_json, strong, fano, asymptote))
}

// ---------------------------------------------------------------------------
// Compressed sensing

/// Parameters of the sparse-recovery bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsConfig {
    /// Ambient dimension.
    pub n: f64,
    /// Sparsity.
    pub k: f64,
    pub sigma_sq: f64,
    /// `‖A‖_F²`.
    pub frob_norm_sq: f64,
    pub lambda: f64,
    /// Fraction of the exponent given up to make `ε_M → 1`, in `(0, 1)`.
    pub delta: f64,
    /// Isotropy defect of the packing.
    pub beta: f64,
    /// Fraction of the packing kept after trimming; `1/log M` if absent.
    pub delta_m: Option<f64>,
}

pub const DEFAULT_BETA: f64 = 0.01;

impl CsConfig {
    /// `‖A‖_F² = n`, `σ² = 1`, `β = 0.01` and `δ_M = 1/log M`.
    pub fn new(n: f64, k: f64, lambda: f64, delta: f64) -> Self {
        Self { n, k, sigma_sq: 1.0, frob_norm_sq: n, lambda, delta, beta: DEFAULT_BETA, delta_m: None }
    }

    /// A configuration with a prescribed `log M`, choosing `n` to match `k`.
    /// `n = k exp(4 log M / k)` must be finite, so very large `log M` needs
    /// a correspondingly large `k`.
    pub fn for_log_m(log_m: f64, k: f64, lambda: f64, delta: f64) -> Self {
        let n = k * (4.0 * log_m / k).exp();
        Self::new(n, k, lambda, delta)
    }

    /// `log M = (k/4) log(n/k)`.
    pub fn log_m(&self) -> f64 {
        self.k / 4.0 * (self.n / self.k).ln()
    }

    pub fn validate(&self) -> Result<()> {
        positive("n", self.n)?;
        positive("k", self.k)?;
        if self.k > self.n {
            return config(format!("k <= n is required, got k = {} > n = {}", self.k, self.n));
        }
        positive("sigma2", self.sigma_sq)?;
        positive("frob2", self.frob_norm_sq)?;
        positive("lambda", self.lambda)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return config(format!("Δ ∈ (0, 1) is required, got Δ = {}", self.delta));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return config(format!("β >= 0 is required, got β = {}", self.beta));
        }
        if let Some(d) = self.delta_m {
            let inv_m = (-self.log_m()).exp();
            if !(d >= inv_m && d <= 1.0 - inv_m) {
                return config(format!("δ_M ∈ [1/M, 1 - 1/M] is required, got δ_M = {d}"));
            }
        }
        Ok(())
    }
}

/// Converse bound and baseline for sparse recovery.
///
/// With a general trimming fraction `δ_M` the bound reads
/// `ε >= 1 - (1+λ) (M^{-Δ} / (λ δ_M))^{λ/(1+λ)}` and the risk carries the
/// factor `(1 - δ_M) log M`; `δ_M = 1/log M` recovers
/// `(log M) M^{-Δ} / λ` and `log M - 1`.
pub fn cs_bound(cfg: &CsConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let log_m = cfg.log_m();
    let lambda = cfg.lambda;
    let scale = cfg.sigma_sq / (cfg.frob_norm_sq * (1.0 + cfg.beta));
    let degenerate = log_m <= 2.0;
    let delta_m = cfg.delta_m.unwrap_or(1.0 / log_m);
    let delta_m_valid = delta_m > 0.0 && delta_m < 1.0;

    let (eps_raw, c_sq) = if delta_m_valid {
        let log_inner = -cfg.delta * log_m - lambda.ln() - delta_m.ln();
        let eps = -((1.0 + lambda).ln() + lambda / (1.0 + lambda) * log_inner).exp_m1();
        let c_sq = 2.0 * cfg.n * (1.0 - delta_m) * log_m * (1.0 - cfg.delta) * scale / (1.0 + lambda);
        (eps, c_sq)
    } else {
        (f64::NEG_INFINITY, 0.0)
    };
    let mut strong = BoundReport::new(
        Method::Theorem1,
        eps_raw,
        json!({
            "log_m": log_m,
            "delta_m": delta_m,
            "c_sq": c_sq,
            "psi_n": c_sq.sqrt() / (2.0 * 2f64.sqrt()),
        }),
    );
    strong.lambda_star = Some(lambda);
    if !delta_m_valid {
        strong.make_vacuous(Flag::DegenerateLogM);
    }
    // Squared loss normalised by n: (C/(2√2))² ε / n.
    strong.risk_lower = Some(if delta_m_valid {
        (1.0 - delta_m) * log_m * (1.0 - cfg.delta) * scale / (4.0 * (1.0 + lambda)) * strong.eps_lower
    } else {
        0.0
    });

    let fano_risk = (scale / 32.0 * (log_m - 2.0)).max(0.0);
    let mut fano = BoundReport::new(Method::Fano, f64::NAN, json!({ "log_m": log_m, "eps_defined": false }));
    fano.flags.clear();
    fano.risk_lower = Some(fano_risk);
    if degenerate {
        strong.flag(Flag::DegenerateLogM);
        fano.flag(Flag::DegenerateLogM);
    }

    let asymptote = cfg.sigma_sq / (4.0 * cfg.frob_norm_sq) * log_m;
    let cfg_json = serde_json::to_value(cfg).expect("plain data");
    Ok(ComparisonReport::new("cs", cfg_json, strong, fano, asymptote))
}

// ---------------------------------------------------------------------------
// Sweeps

/// Any of the three application configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "app", rename_all = "snake_case")]
pub enum AppConfig {
    Density(DensityConfig),
    Active(ActiveConfig),
    Cs(CsConfig),
}

impl AppConfig {
    pub fn evaluate(&self) -> Result<ComparisonReport> {
        match self {
            AppConfig::Density(c) => density_bound(c),
            AppConfig::Active(c) => active_bound(c),
            AppConfig::Cs(c) => cs_bound(c),
        }
    }

    pub fn app(&self) -> &'static str {
        match self {
            AppConfig::Density(_) => "density",
            AppConfig::Active(_) => "active",
            AppConfig::Cs(_) => "cs",
        }
    }

    /// Names accepted by [`AppConfig::set_param`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            AppConfig::Density(_) => &["n", "nu", "c", "a", "c0", "c_g"],
            AppConfig::Active(_) => &["n", "d", "alpha", "kappa", "l", "c", "h", "nu", "lambda"],
            AppConfig::Cs(_) => &["n", "k", "sigma2", "frob2", "lambda", "delta", "beta", "delta_m", "lambda_delta"],
        }
    }

    /// Sets one parameter. For compressed sensing, `lambda_delta` sets `λ`
    /// and `Δ` together.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let slot: &mut f64 = match (self, name) {
            (AppConfig::Density(c), "n") => &mut c.n,
            (AppConfig::Density(c), "nu") => &mut c.nu,
            (AppConfig::Density(c), "c") => &mut c.c,
            (AppConfig::Density(c), "a") => &mut c.a,
            (AppConfig::Density(c), "c0") => &mut c.c0,
            (AppConfig::Density(c), "c_g") => &mut c.c_g,
            (AppConfig::Active(c), "d") => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return config(format!("d must be a whole number, got {value}"));
                }
                c.d = value as u32;
                return Ok(());
            }
            (AppConfig::Active(c), "n") => &mut c.n,
            (AppConfig::Active(c), "alpha") => &mut c.alpha,
            (AppConfig::Active(c), "kappa") => &mut c.kappa,
            (AppConfig::Active(c), "l") => &mut c.l,
            (AppConfig::Active(c), "c") => &mut c.c,
            (AppConfig::Active(c), "h") => &mut c.h,
            (AppConfig::Active(c), "nu") => &mut c.nu,
            (AppConfig::Active(c), "lambda") => &mut c.lambda,
            (AppConfig::Cs(c), "delta_m") => {
                c.delta_m = Some(value);
                return Ok(());
            }
            (AppConfig::Cs(c), "lambda_delta") => {
                c.lambda = value;
                c.delta = value;
                return Ok(());
            }
            (AppConfig::Cs(c), "n") => &mut c.n,
            (AppConfig::Cs(c), "k") => &mut c.k,
            (AppConfig::Cs(c), "sigma2") => &mut c.sigma_sq,
            (AppConfig::Cs(c), "frob2") => &mut c.frob_norm_sq,
            (AppConfig::Cs(c), "lambda") => &mut c.lambda,
            (AppConfig::Cs(c), "delta") => &mut c.delta,
            (AppConfig::Cs(c), "beta") => &mut c.beta,
            (cfg, _) => {
                return Err(Error::Config(format!(
                    "unknown parameter `{name}` for {}; expected one of {:?}",
                    cfg.app(),
                    cfg.param_names()
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// One report per value of `vary`, in the order given.
pub fn sweep(template: &AppConfig, vary: &str, values: &[f64]) -> Result<Vec<ComparisonReport>> {
    let mut probe = *template;
    probe.set_param(vary, values.first().copied().unwrap_or(0.0))?;
    values
        .par_iter()
        .map(|&v| {
            let mut cfg = *template;
            cfg.set_param(vary, v)?;
            cfg.evaluate().map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{vary} = {v}: {msg}")),
                other => other,
            })
        })
        .collect()
}

/// Index of the largest strong risk bound in a sweep and whether it lies
/// strictly inside the swept range.
pub fn strong_risk_argmax(reports: &[ComparisonReport]) -> Option<(usize, bool)> {
    let (best, _) = reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.strong.risk_lower.map(|v| (i, v)))
        .fold((None, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (Some(i), v) } else { (bi, bv) });
    best.map(|i| (i, i > 0 && i + 1 < reports.len()))
}

/// The smallest `n` in `[lo, hi]` from which the strong `ε` stays at or
/// above `target`, located by a log-spaced scan followed by bisection.
/// `None` if the target is not reached at `hi`.
pub fn strong_eps_threshold(template: &AppConfig, target: f64, lo: f64, hi: f64) -> Result<Option<f64>> {
    let eps_at = |n: f64| -> Result<f64> {
        let mut cfg = *template;
        cfg.set_param("n", n)?;
        Ok(cfg.evaluate()?.strong.eps_lower)
    };
    const SCAN: usize = 400;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..=SCAN).map(|i| (llo + (lhi - llo) * i as f64 / SCAN as f64).exp()).collect();
    let hits = grid.iter().map(|&n| eps_at(n).map(|e| e >= target)).collect::<Result<Vec<bool>>>()?;
    if !hits[SCAN] {
        return Ok(None);
    }
    let first = (0..=SCAN).rev().take_while(|&i| hits[i]).last().expect("hits[SCAN] is true");
    if first == 0 {
        return Ok(Some(lo));
    }
    let (mut a, mut b) = (grid[first - 1], grid[first]);
    for _ in 0..200 {
        let mid = (a * b).sqrt();
        if mid <= a || mid >= b {
            break;
        }
        if eps_at(mid)? >= target {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn active_example(n: f64) -> ActiveConfig {
        ActiveConfig { n, d: 2, alpha: 1.0, kappa: 2.0, l: 1.0, c: 0.1, h: 1.0, nu: 0.5, lambda: 1.0 }
    }

    #[test]
    fn density_example() {
        let r = density_bound(&DensityConfig::new(1e11, 1.0, 0.1)).unwrap();
        let direct = 1.0 - 2.0 * (-(1e11f64.powf(0.2) / 2.0) * (0.082 - 0.005)).exp();
        assert!((r.strong.eps_lower - direct).abs() < 1e-15);
        assert!((r.strong.eps_lower - 0.9955).abs() < 5e-4);
        assert!(r.fano.eps_lower <= 0.8645);
        assert!(r.strong.eps_lower > r.fano.eps_lower);
        assert!(!r.strong.has_flag(Flag::FormsDisagree));
        let risk = 0.005 / 6.0 * 1e11f64.powf(-0.8) * r.strong.eps_lower;
        assert!((r.strong.risk_lower.unwrap() - risk).abs() <= 1e-12 * risk);
    }

    #[test]
    fn density_zero_perturbation_has_zero_risk() {
        let r = density_bound(&DensityConfig::new(1e6, 1.0, 0.0)).unwrap();
        assert_eq!(r.strong.risk_lower, Some(0.0));
        assert_eq!(r.ratio, None);
    }

    #[test]
    fn density_config_errors_name_the_inequality() {
        let err = density_bound(&DensityConfig::new(1e6, 5.0, 0.1)).unwrap_err();
        assert!(err.to_string().contains("(c0/(c²a))^(1/5)"), "{err}");
        let mut cfg = DensityConfig::new(1e6, 1.0, 0.1);
        cfg.c_g = 1.2;
        assert!(density_bound(&cfg).unwrap_err().to_string().contains("c_g < 1"));
        assert!(density_bound(&DensityConfig::new(0.0, 1.0, 0.1)).is_err());
    }

    #[test]
    fn density_schedule_tends_to_one() {
        let mut cfg = DensityConfig::new(1e12, 1.0, 0.1);
        cfg.nu_schedule = Some(DEFAULT_NU_SCHEDULE_EXPONENT);
        let mut last = 0.0;
        for e in [40.0, 60.0, 80.0, 100.0] {
            cfg.n = 10f64.powf(e);
            let r = density_bound(&cfg).unwrap();
            assert!(r.strong.eps_lower >= last);
            last = r.strong.eps_lower;
            let ratio = r.strong.risk_lower.unwrap() / r.asymptote;
            assert!(ratio < 1.0);
        }
        assert!(last > 0.99);
    }

    #[test]
    fn active_example_values() {
        let r = active_bound(&active_example(1e6)).unwrap();
        assert!((r.strong.eps_lower - 0.997).abs() < 1e-3, "{}", r.strong.eps_lower);
        let xi = r.fano.params["xi"].as_f64().unwrap();
        assert!((xi - 1.8466).abs() < 1e-3);
        assert!(r.fano.has_flag(Flag::Vacuous));
        assert_eq!(r.fano.eps_lower, 0.0);
        assert!(r.strong.has_flag(Flag::FormsDisagree));
        // The proof's substitution reproduces the fixed-m form exactly.
        let p = &r.strong.params;
        let proof = p["eps_proof_substitution"].as_f64().unwrap();
        let pre = p["eps_pre_substitution"].as_f64().unwrap();
        assert!((proof - pre).abs() < 1e-12);
        let risk = 0.4 / 2.0 * 0.5f64.powi(2) * (1.0f64 / 32.0).powi(2) * 1e6f64.powf(-2.0 / 3.0);
        assert!((r.strong.risk_lower.unwrap() - risk * r.strong.eps_lower).abs() < 1e-15);
    }

    #[test]
    fn active_out_of_regime_is_clamped() {
        let mut cfg = active_example(1e6);
        cfg.nu = 2.0;
        let r = active_bound(&cfg).unwrap();
        assert_eq!(r.strong.eps_lower, 0.0);
        assert!(r.strong.has_flag(Flag::OutOfRegime));
        cfg.c = 0.6;
        assert!(active_bound(&cfg).unwrap_err().to_string().contains("(0, 1/2]"));
    }

    #[test]
    fn active_linear_branch() {
        let mut cfg = active_example(1e6);
        cfg.kappa = 1.0;
        cfg.c = 0.5;
        let r = active_bound(&cfg).unwrap();
        assert!(!r.strong.has_flag(Flag::LinearLossBranch));
        let psi = r.strong.params["psi_n"].as_f64().unwrap();
        assert!((r.strong.params["f_psi"].as_f64().unwrap() - psi).abs() < 1e-15);
    }

    #[test]
    fn cs_example() {
        let r = cs_bound(&CsConfig::new(1e6, 128.0, 0.05, 0.05)).unwrap();
        let log_m = 32.0 * (1e6f64 / 128.0).ln();
        assert!((r.strong.params["log_m"].as_f64().unwrap() - log_m).abs() < 1e-12);
        let want = 8.0 * 0.95 / 1.05 * (log_m - 1.0) / (log_m - 2.0) * r.strong.eps_lower;
        assert!((r.ratio.unwrap() - want).abs() < 1e-12);
        // At this log M and λ the converse ε is only about 0.2, so the
        // factor near 8 shows up in the ε-free part of the ratio.
        assert!((r.strong.eps_lower - 0.199_097_918).abs() < 1e-8);
        assert!((r.ratio.unwrap() / r.strong.eps_lower - 7.2635).abs() < 1e-4);
        let far = cs_bound(&CsConfig::for_log_m(1e4, 128.0, 0.05, 0.05)).unwrap();
        assert!((far.ratio.unwrap() - 7.238_819).abs() < 1e-5);
    }

    #[test]
    fn cs_degenerate() {
        let cfg = CsConfig::for_log_m(2.0, 4.0, 0.05, 0.05);
        let r = cs_bound(&cfg).unwrap();
        assert!(r.fano.risk_lower.unwrap().abs() < 1e-15);
        assert!(r.ratio.is_none() || r.fano.risk_lower.unwrap() > 0.0);
        assert!(r.strong.has_flag(Flag::DegenerateLogM));
        let tiny = CsConfig::for_log_m(0.5, 4.0, 0.05, 0.05);
        let r = cs_bound(&tiny).unwrap();
        assert_eq!(r.strong.eps_lower, 0.0);
        assert_eq!(r.ratio, None);
        let mut bad = CsConfig::new(1e6, 128.0, 0.05, 0.05);
        bad.delta_m = Some(1.5);
        assert!(cs_bound(&bad).is_err());
    }

    #[test]
    fn sweeps() {
        let template = AppConfig::Density(DensityConfig::new(1e6, 1.0, 0.1));
        assert!(sweep(&template, "n", &[]).unwrap().is_empty());
        assert!(matches!(sweep(&template, "bogus", &[1.0]), Err(Error::Config(_))));
        let ns: Vec<f64> = (6..=14).map(|e| 10f64.powi(e)).collect();
        let out = sweep(&template, "n", &ns).unwrap();
        assert_eq!(out.len(), 9);
        assert!(out[8].strong.eps_lower >= 0.99);
        let single = sweep(&template, "n", &[1e6]).unwrap();
        assert_eq!(single[0], template.evaluate().unwrap());

        let cs = AppConfig::Cs(CsConfig::new(1e4, 10.0, 0.05, 0.05));
        let ks: Vec<f64> = (1..=40).map(|i| i as f64 * 250.0).collect();
        let out = sweep(&cs, "k", &ks).unwrap();
        let (best, interior) = strong_risk_argmax(&out).unwrap();
        assert!(interior, "argmax at {best}");
    }

    #[test]
    fn threshold_search() {
        let template = AppConfig::Active(active_example(1e6));
        let n_star = strong_eps_threshold(&template, 0.99, 1e2, 1e12).unwrap().unwrap();
        let mut cfg = template;
        cfg.set_param("n", n_star).unwrap();
        assert!(cfg.evaluate().unwrap().strong.eps_lower >= 0.99);
        cfg.set_param("n", n_star * 0.999).unwrap();
        assert!(cfg.evaluate().unwrap().strong.eps_lower < 0.99);
    }
}
