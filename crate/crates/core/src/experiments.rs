//! Monte-Carlo checks of the oracle inequality and of the noise events it
//! rests on, under `Y = f⁰ + ε`, `ε ~ N(0, I)`.
//!
//! An [`Experiment`] is prepared once per configuration: the signal `f⁰`, its
//! jump set `S`, the tuning parameter, the weights and `Γ_S`, and the bound
//! for the comparator `f = f⁰`, which then does not depend on the noise.
//! Trials are indexed by id; trial `t` draws its noise from ChaCha20 keyed by
//! `seed` on stream `t`, so trials can run in any order or in parallel.
//!
//! Per trial two events are recorded:
//!
//! * `𝒰`: `max_j |εᵀψ_j^{−S}| / (n‖ψ_j^{−S}‖_n) ≤ λ₀(u)`,
//! * `𝒱`: `‖Π_{N̄₋S} ε‖_n ≤ √(r̄_S/n) + √(2v/n)`,
//!
//! with targets `1 − e^{−u}` and `1 − e^{−v}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::active_set::ActiveSet;
use crate::difference::{BlockDictionary, DiffOperator};
use crate::error::{Error, Result};
use crate::estimator::{fit, Algorithm, FitConfig};
use crate::interpolants::{build, delta_k_energy, Construction, Mode};
use crate::math;
use crate::sparsity::{self, DirectConfig, Weights};
use crate::theory::{self, BoundInputs};

/// Stream reserved for the random jump layout.
const LAYOUT_STREAM: u64 = u64::MAX;

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpLayout {
    /// `t_i = k + round(i(n+1−k)/(s₀+1))`.
    #[default]
    Equispaced,
    /// Uniform among layouts with every segment at least `k(k+2)` long.
    RandomMinGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    /// The strengthened threshold for the true jump set, with `c_k` from
    /// the config or the shipped default.
    #[serde(alias = "theorem_1_1")]
    Theorem,
    /// `scale · n^{k−1} (1/(s₀+1))^{(2k−1)/2} √(log n / n)`.
    #[serde(alias = "corollary_1_1")]
    Corollary { scale: f64 },
    Fixed { lambda: f64 },
}

/// Where `Γ_S` in the bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    /// `n‖Δ′q‖²` of the noisy interpolating vector; it must be feasible.
    #[default]
    Interpolant,
    /// The closed form with the shipped `C_k`.
    ClosedForm,
    /// The direct oracle (`n ≤ 64`).
    Direct,
    /// No bound; only the mse and the events are recorded.
    None,
}

fn default_delta() -> f64 {
    1.0
}

fn default_u() -> f64 {
    math::ln(20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub s0: usize,
    #[serde(default)]
    pub jump_layout: JumpLayout,
    /// Jumps of `Δ(k) f⁰` are `±δ n^{−(k−1)}` with alternating signs.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub lambda_rule: LambdaRule,
    #[serde(default)]
    pub c_k: Option<f64>,
    #[serde(default)]
    pub gamma_source: GammaSource,
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default = "default_u")]
    pub v: f64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub algorithm: Algorithm,
    /// Wall-clock time per trial; off by default so outputs are byte-stable.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(n: usize, k: usize, s0: usize, lambda_rule: LambdaRule) -> Self {
        Self {
            n,
            k,
            s0,
            jump_layout: JumpLayout::Equispaced,
            delta: default_delta(),
            lambda_rule,
            c_k: None,
            gamma_source: GammaSource::Interpolant,
            u: default_u(),
            v: default_u(),
            replications: 100,
            seed: 0,
            algorithm: Algorithm::Admm,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.k) {
            return Err(Error::UnsupportedOrder { k: self.k });
        }
        if self.n < self.k + 2 {
            return Err(Error::InvalidOrder { n: self.n, k: self.k });
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter {
                name: "replications",
                value: 0.0,
            });
        }
        for (name, value) in [("u", self.u), ("v", self.v), ("delta", self.delta)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        match self.lambda_rule {
            LambdaRule::Corollary { scale } if !(scale > 0.0) => Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
            }),
            LambdaRule::Fixed { lambda } if !(lambda > 0.0) => Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
            }),
            _ => Ok(()),
        }
    }
}

fn min_gap(k: usize) -> usize {
    k * (k + 2)
}

/// Knot labels for `cfg`; every segment is at least `k(k+2)` long.
pub fn jump_locations(cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    let (n, k, s0) = (cfg.n, cfg.k, cfg.s0);
    let total = n + 1 - k;
    let gap = min_gap(k);
    if s0 > n - k - 1 || gap * (s0 + 1) > total {
        return Err(Error::InfeasibleLayout(format!(
            "{} jumps need {} positions with segments of length {gap}; only {total} available",
            s0,
            gap * (s0 + 1)
        )));
    }
    let knots = match cfg.jump_layout {
        JumpLayout::Equispaced => {
            let knots: Vec<usize> = (1..=s0)
                .map(|i| k + math::round((i * total) as f64 / (s0 + 1) as f64) as usize)
                .collect();
            let mut prev = k;
            for (i, &t) in knots.iter().chain(core::iter::once(&(n + 1))).enumerate() {
                if t - prev < gap {
                    return Err(Error::InfeasibleLayout(format!(
                        "equispaced segment {} has length {} < {gap}",
                        i + 1,
                        t - prev
                    )));
                }
                prev = t;
            }
            knots
        }
        JumpLayout::RandomMinGap => {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            rng.set_stream(LAYOUT_STREAM);
            // distribute the slack uniformly over s0 + 1 segments
            let free = total - gap * (s0 + 1);
            let mut cuts: Vec<usize> = (0..s0).map(|_| rng.random_range(0..=free)).collect();
            cuts.sort_unstable();
            let mut t = k;
            let mut prev = 0;
            cuts.iter()
                .map(|&c| {
                    t += c - prev + gap;
                    prev = c;
                    t
                })
                .collect()
        }
    };
    Ok(knots)
}

/// `f⁰` with `Δ(k) f⁰` equal to `±δ n^{−(k−1)}` (alternating, starting with
/// `+`) at the jump labels and zero elsewhere, and `f⁰_1 = … = f⁰_k = 0`.
pub fn generate_signal(cfg: &ExperimentConfig) -> Result<(Vec<f64>, ActiveSet)> {
    cfg.validate()?;
    let (n, k) = (cfg.n, cfg.k);
    let knots = jump_locations(cfg)?;
    let size = cfg.delta / math::powi(n as f64, k - 1);
    let signs: Vec<i8> = (0..knots.len())
        .map(|i| if i % 2 == 0 { 1 } else { -1 })
        .collect();
    let mut z = vec![0.0; n];
    for (&t, &s) in knots.iter().zip(&signs) {
        z[t - 1] = s as f64 * size;
    }
    // k-fold cumulative sum: each pass inverts one first difference
    for _ in 0..k {
        let mut acc = 0.0;
        for v in z.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    let active = ActiveSet::new(n, k, knots, signs)?;
    Ok((z, active))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub mse: f64,
    pub bound_rhs: Option<f64>,
    pub held: Option<bool>,
    pub event_u: bool,
    pub event_v: bool,
    pub kkt_residual: f64,
    /// Filled in by the runner when timing is requested.
    pub seconds: Option<f64>,
}

/// A trial whose fit was not certified; excluded from all rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedTrial {
    pub trial_id: u64,
    pub kkt_residual: f64,
}

pub type TrialOutcome = core::result::Result<TrialRecord, FailedTrial>;

/// Everything about a configuration that does not depend on the noise.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub f0: Vec<f64>,
    pub active: ActiveSet,
    pub lambda: f64,
    pub lambda0: f64,
    /// `max_j w_j ≤ 1`, i.e. `λ` meets the plain requirement for `S`.
    pub lambda_admissible: bool,
    pub gamma_sq: Option<f64>,
    pub bound: Option<theory::Bound>,
    dict: BlockDictionary,
    fit_cfg: FitConfig,
}

impl Experiment {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        let (f0, active) = generate_signal(cfg)?;
        let (n, k, s) = (cfg.n, cfg.k, active.s());
        let op = DiffOperator::new(n, k)?;
        let dict = BlockDictionary::new(&op, &active)?;
        let inputs = BoundInputs::from_active(&active, cfg.u, cfg.v);
        let c_k = match cfg.c_k {
            Some(c) => c,
            None => theory::shipped_c_k(k)?,
        };
        let lambda = match cfg.lambda_rule {
            LambdaRule::Theorem => theory::lambda_threshold(&inputs, Some(c_k))?,
            LambdaRule::Corollary { scale } => theory::equal_segment_lambda(n, k, s, scale),
            LambdaRule::Fixed { lambda } => lambda,
        };
        let weights = Weights::new(&dict, &active, lambda, cfg.u)?;
        let gamma_sq = match cfg.gamma_source {
            GammaSource::Interpolant => {
                let v = build(&active, Mode::Noisy, Construction::Continuous, Some(&weights.w))?;
                v.check_feasible(0.0)?;
                Some(delta_k_energy(&v)?)
            }
            GammaSource::ClosedForm => Some(sparsity::gamma_closed_form(
                &active,
                sparsity::shipped_gamma_c_k(k)?,
            )),
            GammaSource::Direct => {
                let d = sparsity::direct(&active, Some(&weights.w), &DirectConfig::default())?;
                Some(d.gamma_sq)
            }
            GammaSource::None => None,
        };
        let bound = gamma_sq
            .map(|g| {
                theory::adaptive_bound(&f0, &f0, &active, lambda, cfg.u, cfg.v, math::sqrt(g), c_k)
            })
            .transpose()?;
        Ok(Self {
            cfg: cfg.clone(),
            f0,
            lambda,
            lambda0: weights.lambda0,
            lambda_admissible: weights.max() <= 1.0,
            gamma_sq,
            bound,
            active,
            dict,
            fit_cfg: FitConfig::new(lambda, k).with_algorithm(cfg.algorithm),
        })
    }

    /// Noise of trial `id`.
    pub fn noise(&self, id: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(id);
        (0..self.cfg.n).map(|_| rng.sample(StandardNormal)).collect()
    }

    pub fn trial(&self, id: u64) -> Result<TrialOutcome> {
        let n = self.cfg.n;
        let nf = n as f64;
        let eps = self.noise(id);
        let y: Vec<f64> = self.f0.iter().zip(&eps).map(|(f, e)| f + e).collect();
        let r = fit(&y, &self.fit_cfg)?;
        if !r.converged {
            return Ok(Err(FailedTrial {
                trial_id: id,
                kkt_residual: r.kkt_residual,
            }));
        }
        let mse = r
            .f_hat
            .iter()
            .zip(&self.f0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / nf;
        let ips = self.dict.inner_products(&eps);
        let u_stat = ips
            .iter()
            .zip(self.dict.sq_norms())
            .map(|(ip, sq)| math::abs(*ip) / math::sqrt(nf * sq))
            .fold(0.0, f64::max);
        let proj = self.dict.project_null(&eps);
        let v_stat = math::sqrt(proj.iter().map(|x| x * x).sum::<f64>() / nf);
        let v_level = math::sqrt(self.dict.r_bar() as f64 / nf) + math::sqrt(2.0 * self.cfg.v / nf);
        Ok(Ok(TrialRecord {
            trial_id: id,
            mse,
            bound_rhs: self.bound.as_ref().map(|b| b.total),
            held: self.bound.as_ref().map(|b| mse <= b.total),
            event_u: u_stat <= self.lambda0,
            event_v: v_stat <= v_level,
            kkt_residual: r.kkt_residual,
            seconds: None,
        }))
    }

    /// All trials in order, one after another.
    pub fn run_sequential(&self) -> Result<Vec<TrialOutcome>> {
        (0..self.cfg.replications as u64).map(|id| self.trial(id)).collect()
    }
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nf = trials as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * math::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf));
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// An empirical frequency with its 95% Wilson interval and target. It passes
/// when the target lies below the upper end of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub target: f64,
    pub pass: bool,
}

impl Rate {
    pub fn new(successes: usize, trials: usize, target: f64) -> Self {
        let (lo, hi) = wilson(successes, trials, Z_95);
        Self {
            successes,
            trials,
            rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            wilson_low: lo,
            wilson_high: hi,
            target,
            pass: trials > 0 && hi >= target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantiles; `None` for an empty sample.
pub fn quantiles(values: &[f64]) -> Option<Quantiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = pos as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    Some(Quantiles {
        min: v[0],
        q25: at(0.25),
        median: at(0.5),
        q75: at(0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub k: usize,
    pub s0: usize,
    pub knots: Vec<usize>,
    pub n_max: usize,
    pub lambda: f64,
    pub lambda0: f64,
    pub lambda_admissible: bool,
    pub gamma_sq: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub replications: usize,
    pub failed_trials: Vec<u64>,
    /// `mse ≤ bound` against `1 − e^{−u} − e^{−v}`.
    pub coverage: Option<Rate>,
    pub event_u: Rate,
    pub event_v: Rate,
    pub event_uv: Rate,
    pub mse: Option<Quantiles>,
}

/// Aggregates outcomes after sorting them by trial id.
pub fn summarize(exp: &Experiment, outcomes: &[TrialOutcome]) -> Summary {
    let mut records: Vec<&TrialRecord> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    records.sort_by_key(|r| r.trial_id);
    let mut failed: Vec<u64> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err().map(|f| f.trial_id))
        .collect();
    failed.sort_unstable();
    let m = records.len();
    let count = |pred: &dyn Fn(&TrialRecord) -> bool| records.iter().filter(|r| pred(r)).count();
    let (eu, ev) = (math::exp(-exp.cfg.u), math::exp(-exp.cfg.v));
    let mses: Vec<f64> = records.iter().map(|r| r.mse).collect();
    Summary {
        n: exp.cfg.n,
        k: exp.cfg.k,
        s0: exp.cfg.s0,
        knots: exp.active.knots().to_vec(),
        n_max: exp.active.n_max(),
        lambda: exp.lambda,
        lambda0: exp.lambda0,
        lambda_admissible: exp.lambda_admissible,
        gamma_sq: exp.gamma_sq,
        bound_rhs: exp.bound.as_ref().map(|b| b.total),
        replications: exp.cfg.replications,
        failed_trials: failed,
        coverage: exp
            .bound
            .as_ref()
            .map(|_| Rate::new(count(&|r| r.held == Some(true)), m, 1.0 - eu - ev)),
        event_u: Rate::new(count(&|r| r.event_u), m, 1.0 - eu),
        event_v: Rate::new(count(&|r| r.event_v), m, 1.0 - ev),
        event_uv: Rate::new(count(&|r| r.event_u && r.event_v), m, 1.0 - eu - ev),
        mse: quantiles(&mses),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| math::ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| math::ln(*v)).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub lambda: f64,
    pub median_mse: f64,
    pub mean_mse: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub points: Vec<RatePoint>,
    /// Slope of log median mse against log n.
    pub slope: f64,
}

/// Runs `base` at every `n` in `ns` (at least four) through `runner` and fits
/// the log-log slope of the median mse.
pub fn rate_sweep<F>(base: &ExperimentConfig, ns: &[usize], mut runner: F) -> Result<RateSweep>
where
    F: FnMut(&Experiment) -> Result<Vec<TrialOutcome>>,
{
    if ns.len() < 4 {
        return Err(Error::InvalidParameter {
            name: "grid size",
            value: ns.len() as f64,
        });
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let cfg = ExperimentConfig { n, ..base.clone() };
        let exp = Experiment::prepare(&cfg)?;
        let outcomes = runner(&exp)?;
        let mses: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.as_ref().ok().map(|r| r.mse))
            .collect();
        let q = quantiles(&mses).ok_or(Error::InvalidParameter {
            name: "converged trials",
            value: 0.0,
        })?;
        points.push(RatePoint {
            n,
            lambda: exp.lambda,
            median_mse: q.median,
            mean_mse: q.mean,
            failed: outcomes.len() - mses.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median_mse).collect();
    let slope = log_log_slope(&xs, &ys);
    Ok(RateSweep { points, slope })
}
