use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tvtrend_core::experiments::Experiment;
use tvtrend_core::interpolants::{build, check_monotone, delta_k_energy, Construction, Mode};
use tvtrend_core::sparsity::{direct, gamma_closed_form, shipped_gamma_c_k, DirectConfig, Weights};
use tvtrend_core::theory::{
    adaptive_bound, adaptive_rate, equal_segment_lambda, lambda_threshold, minimax_rate,
    n_max_cap, non_adaptive_bound, shipped_c_k, BoundInputs,
};
use tvtrend_core::{fit, ActiveSet, Algorithm, BlockDictionary, DiffOperator, FitConfig};

use crate::config::{config_to_json, read_config};
use crate::error::{CliError, Result};
use crate::io::{fmt_f64, read_column, write_column, write_file, write_trials};
use crate::montecarlo::{pool, run_monte_carlo, run_rate_sweep, threads_from_env};
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "tvtrend", version, about = "Trend filtering: fits, bounds, interpolating vectors, checks and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit trend filtering to a single-column CSV signal.
    Solve(SolveArgs),
    /// Evaluate tuning thresholds, effective sparsity and oracle bounds.
    Bounds(BoundsArgs),
    /// Build an interpolating vector for a jump set.
    Interpolant(InterpolantArgs),
    /// Run a property suite; exit 1 if any check fails.
    Verify(VerifyArgs),
    /// Run a Monte-Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    /// Strengthened threshold for the given `s` and `n_max`.
    Theorem,
    /// `scale · n^{k−1} (s+1)^{−(2k−1)/2} √(log n / n)`.
    Corollary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Admm,
    #[value(name = "dp_k1")]
    DpK1,
    #[value(name = "synthesis_cd")]
    SynthesisCd,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Admm => Algorithm::Admm,
            AlgorithmArg::DpK1 => Algorithm::DpK1,
            AlgorithmArg::SynthesisCd => Algorithm::SynthesisCd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GammaArg {
    Interpolant,
    #[value(name = "closed-form")]
    ClosedForm,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Noisy,
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    Continuous,
    Discrete,
}

#[derive(Debug, Args)]
pub struct Tuning {
    /// Explicit tuning parameter.
    #[arg(long, conflicts_with = "lambda_rule")]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub lambda_rule: Option<RuleArg>,
    /// Confidence parameter of the dictionary event.
    #[arg(long, default_value_t = 20f64.ln())]
    pub u: f64,
    /// Confidence parameter of the projection event.
    #[arg(long, default_value_t = 20f64.ln())]
    pub v: f64,
    /// Constant of the strengthened threshold (default: shipped value for k).
    #[arg(long)]
    pub c_k: Option<f64>,
    /// Multiplier for the corollary rule.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

impl Tuning {
    fn c_k(&self, k: usize) -> Result<f64> {
        Ok(match self.c_k {
            Some(c) => c,
            None => shipped_c_k(k)?,
        })
    }

    /// `λ` from the flags, or `default` when neither flag is set.
    fn resolve(&self, n: usize, k: usize, s: usize, n_max: usize, default: Option<RuleArg>) -> Result<f64> {
        if let Some(l) = self.lambda {
            return Ok(l);
        }
        let rule = self
            .lambda_rule
            .or(default)
            .ok_or_else(|| CliError::Usage("one of --lambda or --lambda-rule is required".into()))?;
        Ok(match rule {
            RuleArg::Theorem => {
                let inputs = BoundInputs {
                    n,
                    k,
                    s,
                    n_max,
                    u: self.u,
                    v: self.v,
                };
                lambda_threshold(&inputs, Some(self.c_k(k)?))?
            }
            RuleArg::Corollary => equal_segment_lambda(n, k, s, self.scale),
        })
    }
}

/// A jump set given directly or read off a signal.
#[derive(Debug, Args)]
pub struct JumpSet {
    /// Signal whose nonzero kth differences define the jump set.
    #[arg(long, conflicts_with_all = ["n", "knots"])]
    pub signal: Option<PathBuf>,
    /// Relative threshold for nonzero differences of --signal.
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long)]
    pub n: Option<usize>,
    /// Jump labels in [k+1, n], comma separated.
    #[arg(long, value_delimiter = ',')]
    pub knots: Vec<usize>,
    /// Jump signs (+1/-1), comma separated; alternating from +1 by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Vec<i8>,
}

impl JumpSet {
    /// The active set and, when a signal was given, the signal.
    fn resolve(&self, k: usize) -> Result<(ActiveSet, Option<Vec<f64>>)> {
        if let Some(path) = &self.signal {
            let f = read_column(path)?;
            return Ok((ActiveSet::from_signal(&f, k, self.rel_tol)?, Some(f)));
        }
        let n = self
            .n
            .ok_or_else(|| CliError::Usage("either --signal or --n (with --knots) is required".into()))?;
        let signs = if self.signs.is_empty() {
            (0..self.knots.len()).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()
        } else {
            self.signs.clone()
        };
        Ok((ActiveSet::new(n, k, self.knots.clone(), signs)?, None))
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Single-column CSV of observations.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Number of jumps assumed by the tuning rules.
    #[arg(long, default_value_t = 0)]
    pub s: usize,
    /// Longest segment assumed by the theorem rule (default n+1−k).
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long, value_enum, default_value = "admm")]
    pub algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Fitted values (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fit report JSON, for --format csv (stderr when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub jumps: JumpSet,
    /// Comparator `f` (default: the signal, or zero).
    #[arg(long)]
    pub comparator: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
    #[arg(long, value_enum, default_value = "interpolant")]
    pub gamma: GammaArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterpolantArgs {
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub jumps: JumpSet,
    #[arg(long, value_enum, default_value = "noisy")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "continuous")]
    pub construction: ConstructionArg,
    #[command(flatten)]
    pub tuning: Tuning,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Validate the config and print the prepared experiment without running trials.
    #[arg(long)]
    pub dry_run: bool,
    /// Override the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-trial CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON (stdout when --out is given, else stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Run a rate sweep over these n instead; writes the sweep JSON as summary.
    #[arg(long, value_delimiter = ',')]
    pub sweep_n: Vec<usize>,
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bounds(a) => bounds(a),
        Command::Interpolant(a) => interpolant(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let y = read_column(&a.input)?;
    let (n, k) = (y.len(), a.k);
    if k == 0 || n < k + 1 {
        return Err(CliError::Usage(format!("need k >= 1 and at least k+1 values; got k={k}, n={n}")));
    }
    let lambda = a.tuning.resolve(n, k, a.s, a.n_max.unwrap_or(n + 1 - k), None)?;
    let mut cfg = FitConfig::new(lambda, k)
        .with_algorithm(a.algorithm.into())
        .with_tol(a.tol);
    if let Some(m) = a.max_iter {
        cfg = cfg.with_max_iter(m);
    }
    let r = fit(&y, &cfg)?;
    let report = json!({
        "n": n,
        "k": k,
        "lambda": lambda,
        "algorithm": cfg.algorithm,
        "objective": r.objective,
        "kkt_residual": r.kkt_residual,
        "iters": r.iters,
        "converged": r.converged,
    });
    match a.format {
        Format::Csv => {
            emit(a.out.as_deref(), &write_column(&r.f_hat))?;
            match &a.report {
                Some(p) => write_file(p, &to_json(&report))?,
                None => eprint!("{}", to_json(&report)),
            }
        }
        Format::Json => {
            let mut full = report;
            full["f_hat"] = json!(r.f_hat);
            emit(a.out.as_deref(), &to_json(&full))?;
        }
    }
    if r.converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "fit did not converge: KKT residual {} after {} iterations",
            fmt_f64(r.kkt_residual),
            r.iters
        )))
    }
}

fn weights_for(active: &ActiveSet, lambda: f64, u: f64) -> Result<(BlockDictionary, Weights)> {
    let dict = BlockDictionary::new(&DiffOperator::new(active.n(), active.k())?, active)?;
    let w = Weights::new(&dict, active, lambda, u)?;
    Ok((dict, w))
}

fn bounds(a: BoundsArgs) -> Result<()> {
    let k = a.k;
    let (active, signal) = a.jumps.resolve(k)?;
    let (n, s, n_max) = (active.n(), active.s(), active.n_max());
    let t = &a.tuning;
    let lambda = t.resolve(n, k, s, n_max, None)?;
    let c_k = t.c_k(k)?;
    let inputs = BoundInputs::from_active(&active, t.u, t.v);
    let (_, w) = weights_for(&active, lambda, t.u)?;
    let gamma_sq = match a.gamma {
        GammaArg::Interpolant => {
            let v = build(&active, Mode::Noisy, Construction::Continuous, Some(&w.w))?;
            v.check_feasible(0.0)?;
            delta_k_energy(&v)?
        }
        GammaArg::ClosedForm => gamma_closed_form(&active, shipped_gamma_c_k(k)?),
        GammaArg::Direct => direct(&active, Some(&w.w), &DirectConfig::default())?.gamma_sq,
    };
    let f0 = signal.unwrap_or_else(|| vec![0.0; n]);
    let f = match &a.comparator {
        Some(p) => read_column(p)?,
        None => f0.clone(),
    };
    let adaptive = adaptive_bound(&f, &f0, &active, lambda, t.u, t.v, gamma_sq.sqrt(), c_k)?;
    let plain = non_adaptive_bound(&f, &f0, &active, lambda, t.u, t.v)?;
    let report = json!({
        "n": n,
        "k": k,
        "s": s,
        "knots": active.knots(),
        "segment_lengths": active.segment_lengths(),
        "n_max": n_max,
        "lambda": lambda,
        "lambda0": inputs.lambda0()?,
        "threshold_plain": lambda_threshold(&inputs, None)?,
        "threshold_strengthened": lambda_threshold(&inputs, Some(c_k))?,
        "c_k": c_k,
        "n_max_cap": n_max_cap(lambda, t.u, n, k, s, c_k)?,
        "max_weight": w.max(),
        "gamma_source": format!("{:?}", a.gamma).to_lowercase(),
        "gamma_sq": gamma_sq,
        "adaptive": adaptive,
        "non_adaptive": plain,
        "adaptive_rate": adaptive_rate(n, s),
        "minimax_rate": minimax_rate(n, k),
    });
    emit(a.out.as_deref(), &to_json(&report))
}

fn interpolant(a: InterpolantArgs) -> Result<()> {
    let k = a.k;
    let (active, _) = a.jumps.resolve(k)?;
    let (n, s, n_max) = (active.n(), active.s(), active.n_max());
    let mode = match a.mode {
        ModeArg::Noisy => Mode::Noisy,
        ModeArg::Noiseless => Mode::Noiseless,
    };
    let construction = match a.construction {
        ConstructionArg::Continuous => Construction::Continuous,
        ConstructionArg::Discrete => Construction::Discrete,
    };
    let (lambda, weights) = match mode {
        Mode::Noisy => {
            let lambda = a.tuning.resolve(n, k, s, n_max, Some(RuleArg::Theorem))?;
            (Some(lambda), Some(weights_for(&active, lambda, a.tuning.u)?.1))
        }
        Mode::Noiseless => (None, None),
    };
    let v = build(&active, mode, construction, weights.as_ref().map(|w| w.w.as_slice()))?;
    let slack = v.slack();
    let violations = slack.iter().filter(|x| **x < 0.0).count();
    match a.format {
        Format::Csv => {
            let mut out = String::from("label,q,cap\n");
            for (r, q) in v.q.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", r + k + 1, fmt_f64(*q), fmt_f64(v.caps[r])));
            }
            emit(a.out.as_deref(), &out)
        }
        Format::Json => {
            let report = json!({
                "n": n,
                "k": k,
                "knots": active.knots(),
                "signs": active.signs(),
                "mode": format!("{mode:?}").to_lowercase(),
                "construction": format!("{construction:?}").to_lowercase(),
                "lambda": lambda,
                "energy": delta_k_energy(&v)?,
                "interpolates": v.interpolates(),
                "feasible": violations == 0,
                "violations": violations,
                "monotone": check_monotone(&v),
                "q": v.q,
            });
            emit(a.out.as_deref(), &to_json(&report))
        }
    }
}

fn verify(a: VerifyArgs) -> Result<()> {
    let report = run_suite(a.suite)?;
    let text = match a.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut out = String::from("check,instances,worst,tolerance,passed\n");
            for c in &report.checks {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.name,
                    c.instances,
                    fmt_f64(c.worst),
                    fmt_f64(c.tolerance),
                    c.passed
                ));
            }
            out
        }
    };
    emit(a.out.as_deref(), &text)?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = read_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let summary_to = |text: &str| -> Result<()> {
        match (&a.summary, &a.out) {
            (Some(p), _) => write_file(p, text),
            (None, Some(_)) => emit(None, text),
            (None, None) => {
                eprint!("{text}");
                Ok(())
            }
        }
    };
    if a.dry_run {
        let exp = Experiment::prepare(&cfg)?;
        let report = json!({
            "config": serde_json::from_str::<serde_json::Value>(&config_to_json(&cfg)).expect("json"),
            "knots": exp.active.knots(),
            "segment_lengths": exp.active.segment_lengths(),
            "lambda": exp.lambda,
            "lambda0": exp.lambda0,
            "lambda_admissible": exp.lambda_admissible,
            "gamma_sq": exp.gamma_sq,
            "bound": exp.bound,
        });
        return emit(None, &to_json(&report));
    }
    let pool = pool(threads_from_env()?)?;
    if !a.sweep_n.is_empty() {
        let sweep = run_rate_sweep(&cfg, &a.sweep_n, &pool)?;
        return summary_to(&to_json(&sweep));
    }
    let mc = run_monte_carlo(&cfg, &pool)?;
    emit(a.out.as_deref(), &write_trials(&mc.records))?;
    summary_to(&to_json(&mc.summary))?;
    if mc.records.is_empty() {
        return Err(CliError::Numerical("no trial converged".into()));
    }
    Ok(())
}
