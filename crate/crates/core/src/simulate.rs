//! Discrete-event Monte-Carlo simulation of the actual testing protocols.
//!
//! Each trial draws a fresh cohort of independent Bernoulli(`p`) items, runs
//! the protocol test by test, and counts the tests spent. The empirical
//! means validate the closed-form `M(n, p)` of the registry from a fully
//! independent direction.
//!
//! Trials are processed in chunks; chunk `i` draws from an independent
//! ChaCha8 stream derived from `(seed, i)`, and per-chunk tallies are exact
//! integers merged in chunk order, so a result depends on `(trials, seed,
//! chunk_size)` and nothing else - in particular not on how chunks were
//! scheduled across worker threads.
//!
//! Pairwise testing and halving have no protocol registered (their means are
//! formula-only) and are rejected as not simulatable.
//!
//! In debug builds every trial additionally checks that the set of
//! defectives the protocol identifies equals the set actually drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CutpointError, Result};
use crate::procedures::{Prevalence, Procedure};

/// Trial budget, seed and chunking of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        Self::with_chunk_size(trials, seed, 1 << 16)
    }

    pub fn with_chunk_size(trials: u64, seed: u64, chunk_size: u64) -> Result<Self> {
        if trials == 0 {
            return Err(CutpointError::Domain("trials must be >= 1".into()));
        }
        if chunk_size == 0 {
            return Err(CutpointError::Domain("chunk_size must be >= 1".into()));
        }
        Ok(Self {
            trials,
            seed,
            chunk_size,
        })
    }
}

/// Empirical mean and standard error of the test count per cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub procedure: String,
    pub n: u32,
    pub p: f64,
    pub trials: u64,
    pub mean_tests: f64,
    /// Sample standard deviation divided by `sqrt(trials)`.
    pub std_error: f64,
}

struct Scratch {
    items: Vec<bool>,
    rows: Vec<bool>,
    cols: Vec<bool>,
}

fn draw(rng: &mut ChaCha8Rng, count: usize, p: f64, items: &mut Vec<bool>) {
    items.clear();
    items.extend((0..count).map(|_| rng.random_bool(p)));
}

/// Dorfman: one pool test; on a positive pool, every item is retested
/// individually.
fn dorfman_trial(rng: &mut ChaCha8Rng, n: usize, p: f64, s: &mut Scratch) -> u64 {
    draw(rng, n, p, &mut s.items);
    if s.items.iter().any(|&d| d) {
        1 + n as u64
    } else {
        1
    }
}

/// Modified Dorfman: as Dorfman, but the n-th individual test is skipped
/// when the first `n - 1` are all negative, because the positive pool then
/// forces the last item defective.
fn md_trial(rng: &mut ChaCha8Rng, n: usize, p: f64, s: &mut Scratch) -> u64 {
    draw(rng, n, p, &mut s.items);
    if !s.items.iter().any(|&d| d) {
        return 1;
    }
    let head_positive = s.items[..n - 1].iter().any(|&d| d);
    if head_positive {
        1 + n as u64
    } else {
        // Last item inferred defective without a test.
        debug_assert!(s.items[n - 1]);
        1 + (n - 1) as u64
    }
}

/// Sterrett: pool test; on a positive pool, items are tested one by one
/// until the first positive appears (the last item is inferred when all
/// before it were negative), then the untested remainder re-enters as a
/// fresh pool. An empty remainder terminates without a test.
fn sterrett_trial(rng: &mut ChaCha8Rng, n: usize, p: f64, s: &mut Scratch) -> u64 {
    draw(rng, n, p, &mut s.items);
    #[cfg(debug_assertions)]
    let mut identified = vec![false; n];

    let mut tests = 0u64;
    let mut idx = 0usize;
    while idx < n {
        tests += 1; // pool of items[idx..]
        let rest = &s.items[idx..];
        let Some(k) = rest.iter().position(|&d| d) else {
            break; // negative pool clears the remainder
        };
        if k == rest.len() - 1 {
            // All before the last tested negative; the last is inferred.
            tests += (rest.len() - 1) as u64;
            #[cfg(debug_assertions)]
            {
                identified[idx + k] = true;
            }
            break;
        }
        tests += (k + 1) as u64; // sequential tests up to the first positive
        #[cfg(debug_assertions)]
        {
            identified[idx + k] = true;
        }
        idx += k + 1;
    }

    #[cfg(debug_assertions)]
    debug_assert_eq!(identified, s.items, "protocol must identify the drawn set");
    tests
}

/// Squared array: `n` row pools and `n` column pools over an `n x n`
/// cohort, then an individual test on every item whose row and column both
/// tested positive.
fn a2_trial(rng: &mut ChaCha8Rng, n: usize, p: f64, s: &mut Scratch) -> u64 {
    draw(rng, n * n, p, &mut s.items);
    s.rows.clear();
    s.rows
        .extend((0..n).map(|i| s.items[i * n..(i + 1) * n].iter().any(|&d| d)));
    s.cols.clear();
    s.cols
        .extend((0..n).map(|j| (0..n).any(|i| s.items[i * n + j])));

    let mut tests = 2 * n as u64;
    for i in 0..n {
        if !s.rows[i] {
            continue;
        }
        for j in 0..n {
            if s.cols[j] {
                tests += 1;
            }
        }
    }
    // A defective always makes both its pools positive, so every defective
    // cell is among the individually retested ones.
    #[cfg(debug_assertions)]
    for (idx, &defective) in s.items.iter().enumerate() {
        if defective {
            debug_assert!(s.rows[idx / n] && s.cols[idx % n]);
        }
    }
    tests
}

fn run<F>(proc: Procedure, n: u32, p: Prevalence, cfg: &SimConfig, trial: F) -> SimResult
where
    F: Fn(&mut ChaCha8Rng, usize, f64, &mut Scratch) -> u64 + Sync,
{
    let num_chunks = cfg.trials.div_ceil(cfg.chunk_size);
    let partials: Vec<(u64, u128)> = (0..num_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk);
            let lo = chunk * cfg.chunk_size;
            let hi = cfg.trials.min(lo + cfg.chunk_size);
            let mut scratch = Scratch {
                items: Vec::new(),
                rows: Vec::new(),
                cols: Vec::new(),
            };
            let mut sum = 0u64;
            let mut sum_sq = 0u128;
            for _ in lo..hi {
                let t = trial(&mut rng, n as usize, p.value(), &mut scratch);
                sum += t;
                sum_sq += (t as u128) * (t as u128);
            }
            (sum, sum_sq)
        })
        .collect();

    let (sum, sum_sq) = partials
        .iter()
        .fold((0u64, 0u128), |(s, q), &(cs, cq)| (s + cs, q + cq));

    let trials = cfg.trials;
    let mean_tests = sum as f64 / trials as f64;
    let std_error = if trials > 1 {
        // Exact integer moments keep the reduction order-independent:
        // s^2 = (N sum_sq - sum^2) / (N (N - 1)).
        let num = (trials as u128) * sum_sq - (sum as u128) * (sum as u128);
        (num as f64 / (trials as f64 * trials as f64 * (trials - 1) as f64)).sqrt()
    } else {
        0.0
    };
    debug_assert!(mean_tests >= 1.0);

    SimResult {
        procedure: proc.name().to_string(),
        n,
        p: p.value(),
        trials,
        mean_tests,
        std_error,
    }
}

pub fn simulate_dorfman(n: u32, p: Prevalence, cfg: &SimConfig) -> Result<SimResult> {
    require_min_n(Procedure::Dorfman, n, 2)?;
    Ok(run(Procedure::Dorfman, n, p, cfg, dorfman_trial))
}

pub fn simulate_md(n: u32, p: Prevalence, cfg: &SimConfig) -> Result<SimResult> {
    require_min_n(Procedure::ModifiedDorfman, n, 2)?;
    Ok(run(Procedure::ModifiedDorfman, n, p, cfg, md_trial))
}

pub fn simulate_sterrett(n: u32, p: Prevalence, cfg: &SimConfig) -> Result<SimResult> {
    require_min_n(Procedure::Sterrett, n, 1)?;
    Ok(run(Procedure::Sterrett, n, p, cfg, sterrett_trial))
}

/// Simulate the squared array on its `n x n` cohort (`n^2` items drawn per
/// trial).
pub fn simulate_a2(n: u32, p: Prevalence, cfg: &SimConfig) -> Result<SimResult> {
    require_min_n(Procedure::SquaredArray, n, 2)?;
    Ok(run(Procedure::SquaredArray, n, p, cfg, a2_trial))
}

/// Dispatch on the registry; pairwise testing and halving are not
/// simulatable.
pub fn simulate(proc: Procedure, n: u32, p: Prevalence, cfg: &SimConfig) -> Result<SimResult> {
    match proc {
        Procedure::Dorfman => simulate_dorfman(n, p, cfg),
        Procedure::ModifiedDorfman => simulate_md(n, p, cfg),
        Procedure::Sterrett => simulate_sterrett(n, p, cfg),
        Procedure::SquaredArray => simulate_a2(n, p, cfg),
        Procedure::PairwiseTesting | Procedure::Halving => {
            Err(CutpointError::NotSimulatable(proc.name()))
        }
    }
}

fn require_min_n(proc: Procedure, n: u32, min: u32) -> Result<()> {
    if n < min {
        Err(CutpointError::Domain(format!(
            "{} needs n >= {min}, got {n}",
            proc.name()
        )))
    } else {
        Ok(())
    }
}
