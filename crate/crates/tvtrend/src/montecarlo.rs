//! Parallel trial execution. Trials are independent and keyed by id, so the
//! records, after sorting by id, do not depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tvtrend_core::experiments::{
    rate_sweep, summarize, Experiment, ExperimentConfig, RateSweep, Summary, TrialOutcome,
    TrialRecord,
};

use crate::error::{CliError, Result};

/// Caps the number of worker threads.
pub const THREADS_ENV: &str = "TVTREND_THREADS";

/// `None` when the variable is unset or empty.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, found `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
}

pub fn run_trials(
    exp: &Experiment,
    pool: &rayon::ThreadPool,
) -> tvtrend_core::Result<Vec<TrialOutcome>> {
    let timing = exp.cfg.record_timing;
    let mut outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..exp.cfg.replications as u64)
            .into_par_iter()
            .map(|id| {
                let start = Instant::now();
                let mut out = exp.trial(id)?;
                if let (true, Ok(r)) = (timing, out.as_mut()) {
                    r.seconds = Some(start.elapsed().as_secs_f64());
                }
                Ok(out)
            })
            .collect::<tvtrend_core::Result<_>>()
    })?;
    outcomes.sort_by_key(|o| match o {
        Ok(r) => r.trial_id,
        Err(f) => f.trial_id,
    });
    Ok(outcomes)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarlo {
    pub summary: Summary,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

pub fn run_monte_carlo(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<MonteCarlo> {
    let exp = Experiment::prepare(cfg)?;
    let outcomes = run_trials(&exp, pool)?;
    let summary = summarize(&exp, &outcomes);
    let records = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    Ok(MonteCarlo { summary, records })
}

pub fn run_rate_sweep(
    cfg: &ExperimentConfig,
    ns: &[usize],
    pool: &rayon::ThreadPool,
) -> Result<RateSweep> {
    Ok(rate_sweep(cfg, ns, |exp| run_trials(exp, pool))?)
}
