//! Clairvoyant baselines: the exact dynamic-programming OPT for tiny
//! instances, the D-LP fractional-matching upper bound, and an exhaustive
//! expectation oracle that integrates `simulate_run` over every sample path.

pub mod lp;

use crate::model::{require_valid, Instance, ModelError, SamplePath, Volunteer};
use crate::policies::{simulate_run, simulate_run_with_weights, Policy, PolicyError};
use lp::{ColumnLp, LpError, LpStatus, Sense, SimplexEngine};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("LP solve failed: {0}")]
    Lp(#[from] LpError),
    #[error("D-LP terminated with status {0:?}")]
    UnexpectedLpStatus(LpStatus),
    #[error("DP state space too large: {states} states x {horizon} arrivals exceeds {limit}")]
    DpTooLarge { states: u64, horizon: u64, limit: u64 },
    #[error("exact enumeration too large: {detail}")]
    EnumerationTooLarge { detail: String },
    #[error("GPG exact expectation supports n <= 2, got n = {0}")]
    GpgTooWide(usize),
}

const DP_STATE_LIMIT: u64 = 1_000_000;
const BERNOULLI_LIMIT: u32 = 22;
const PATH_LIMIT: u64 = 1 << 24;

/// D-LP column groups: volunteers with identical type are merged and their
/// per-volunteer budget rows summed. Exact by symmetry of the LP.
fn dlp_engine(instance: &Instance) -> Result<(SimplexEngine, Vec<f64>), BenchmarkError> {
    require_valid(instance)?;
    let n = instance.n();

    #[derive(PartialEq, Eq, Hash)]
    enum Key {
        Ext(u32, u64),
        Int(Vec<u64>),
    }
    let mut index: HashMap<Key, usize> = HashMap::new();
    // (count, representative arrival position) in first-seen order.
    let mut groups: Vec<(u64, usize)> = Vec::new();
    for (pos, v) in instance.arrivals.iter().enumerate() {
        let key = match v {
            Volunteer::External { target, ext_signup_prob, .. } => {
                Key::Ext(*target, ext_signup_prob.to_bits())
            }
            Volunteer::Internal { mu, .. } => Key::Int(mu.iter().map(|m| m.to_bits()).collect()),
        };
        match index.get(&key) {
            Some(&g) => groups[g].0 += 1,
            None => {
                index.insert(key, groups.len());
                groups.push((1, pos));
            }
        }
    }

    let mut rhs: Vec<f64> = instance.opportunities.iter().map(|o| f64::from(o.capacity)).collect();
    rhs.extend(groups.iter().map(|&(count, _)| count as f64));
    let senses = vec![Sense::Le; rhs.len()];
    let mut col_lp = ColumnLp::new(rhs.clone(), senses);
    for (g, &(_, pos)) in groups.iter().enumerate() {
        let group_row = (n + g) as u32;
        match &instance.arrivals[pos] {
            Volunteer::External { target, ext_signup_prob, .. } => {
                let p = *ext_signup_prob;
                col_lp.push_col(p, vec![((*target - 1), p), (group_row, 1.0)]);
            }
            Volunteer::Internal { mu, .. } => {
                for (i, &m) in mu.iter().enumerate() {
                    if m > 0.0 {
                        col_lp.push_col(m, vec![(i as u32, m), (group_row, 1.0)]);
                    }
                }
            }
        }
    }
    Ok((SimplexEngine::build(&col_lp)?, rhs))
}

/// Optimal value of the deterministic fractional-matching LP; an upper bound
/// on the expected value of the clairvoyant OPT.
pub fn dlp_upper_bound(instance: &Instance) -> Result<f64, BenchmarkError> {
    let (mut engine, rhs) = dlp_engine(instance)?;
    let sol = engine.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(BenchmarkError::UnexpectedLpStatus(sol.status));
    }
    debug_assert!(
        (sol.value - sol.dual_value(&rhs)).abs() <= 1e-8 * (1.0 + sol.value.abs()),
        "primal/dual gap on D-LP"
    );
    Ok(sol.value)
}

/// D-LP value together with its dual value, for the duality test surface.
pub fn dlp_with_dual(instance: &Instance) -> Result<(f64, f64), BenchmarkError> {
    let (mut engine, rhs) = dlp_engine(instance)?;
    let sol = engine.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(BenchmarkError::UnexpectedLpStatus(sol.status));
    }
    Ok((sol.value, sol.dual_value(&rhs)))
}

/// Exact expected value of the clairvoyant DP: state = remaining capacities,
/// arrivals processed in order with sign-up realizations observed after each
/// recommendation.
pub fn dp_opt_exact(instance: &Instance) -> Result<f64, BenchmarkError> {
    require_valid(instance)?;
    let n = instance.n();
    let caps = instance.capacities();
    let mut states: u64 = 1;
    for &c in &caps {
        states = states.saturating_mul(u64::from(c) + 1);
    }
    let horizon = instance.horizon() as u64;
    if states.saturating_mul(horizon.max(1)) > DP_STATE_LIMIT {
        return Err(BenchmarkError::DpTooLarge { states, horizon, limit: DP_STATE_LIMIT });
    }
    let states = states as usize;
    let mut stride = vec![1usize; n];
    for i in 1..n {
        stride[i] = stride[i - 1] * (caps[i - 1] as usize + 1);
    }
    // rem[i] of state idx = (idx / stride[i]) % (caps[i]+1)
    let mut next = vec![0.0f64; states];
    let mut cur = vec![0.0f64; states];
    for v in instance.arrivals.iter().rev() {
        match v {
            Volunteer::External { target, ext_signup_prob, .. } => {
                let i = (*target - 1) as usize;
                let p = *ext_signup_prob;
                for idx in 0..states {
                    let rem = (idx / stride[i]) % (caps[i] as usize + 1);
                    cur[idx] = if rem > 0 {
                        p * (1.0 + next[idx - stride[i]]) + (1.0 - p) * next[idx]
                    } else {
                        next[idx]
                    };
                }
            }
            Volunteer::Internal { mu, .. } => {
                for idx in 0..states {
                    let stay = next[idx];
                    let mut best = stay; // dummy recommendation
                    for (i, &m) in mu.iter().enumerate() {
                        if m <= 0.0 {
                            continue;
                        }
                        let rem = (idx / stride[i]) % (caps[i] as usize + 1);
                        if rem > 0 {
                            let cand = m * (1.0 + next[idx - stride[i]]) + (1.0 - m) * stay;
                            if cand > best {
                                best = cand;
                            }
                        }
                    }
                    cur[idx] = best;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    // Full-capacity start state is the last index.
    Ok(next[states - 1])
}

/// One stochastic coordinate of the sample-path enumeration.
enum Coord {
    IntSignup { pos: usize, opp: usize, prob: f64 },
    ExtSignup { pos: usize, prob: f64 },
    /// Cascade view position for one internal arrival: K+1 outcomes.
    ViewPos { pos: usize, probs: Vec<f64> },
}

fn base_path(instance: &Instance) -> SamplePath {
    let n = instance.n();
    let horizon = instance.horizon();
    let mut path = SamplePath {
        int_signup: vec![false; horizon * n],
        ext_signup: vec![false; horizon],
        view_position: if instance.cascade.is_some() { vec![1; horizon] } else { vec![] },
        n,
    };
    for v in &instance.arrivals {
        let pos = (v.t() - 1) as usize;
        match v {
            Volunteer::External { ext_signup_prob, .. } => {
                if *ext_signup_prob >= 1.0 {
                    path.ext_signup[pos] = true;
                }
            }
            Volunteer::Internal { mu, .. } => {
                for (i, &m) in mu.iter().enumerate() {
                    if m >= 1.0 {
                        path.int_signup[pos * n + i] = true;
                    }
                }
            }
        }
    }
    path
}

fn stochastic_coords(instance: &Instance, enumerate_views: bool) -> Result<Vec<Coord>, BenchmarkError> {
    let n = instance.n();
    let mut coords = Vec::new();
    let mut bernoullis = 0u32;
    for v in &instance.arrivals {
        let pos = (v.t() - 1) as usize;
        match v {
            Volunteer::External { ext_signup_prob, .. } => {
                if *ext_signup_prob < 1.0 {
                    coords.push(Coord::ExtSignup { pos, prob: *ext_signup_prob });
                    bernoullis += 1;
                }
            }
            Volunteer::Internal { mu, .. } => {
                for (i, &m) in mu.iter().enumerate().take(n) {
                    if m > 0.0 && m < 1.0 {
                        coords.push(Coord::IntSignup { pos, opp: i, prob: m });
                        bernoullis += 1;
                    }
                }
                if enumerate_views {
                    let cascade = instance.cascade.as_ref().expect("cascade checked by caller");
                    coords.push(Coord::ViewPos { pos, probs: cascade.position_probs(pos) });
                }
            }
        }
    }
    if bernoullis > BERNOULLI_LIMIT {
        return Err(BenchmarkError::EnumerationTooLarge {
            detail: format!("{bernoullis} sign-up Bernoullis exceed the cap of {BERNOULLI_LIMIT}"),
        });
    }
    let mut paths: u64 = 1;
    for c in &coords {
        let branch = match c {
            Coord::ViewPos { probs, .. } => probs.len() as u64,
            _ => 2,
        };
        paths = paths.saturating_mul(branch);
        if paths > PATH_LIMIT {
            return Err(BenchmarkError::EnumerationTooLarge {
                detail: format!("more than {PATH_LIMIT} sample paths"),
            });
        }
    }
    Ok(coords)
}

/// Sums `prob(path) * simulate_run(path).total` over every sample path.
fn enumerate_expectation(
    policy: Policy,
    instance: &Instance,
    coords: &[Coord],
    gpg_weights: Option<&[f64]>,
) -> Result<f64, BenchmarkError> {
    let base = base_path(instance);
    let mut path = base.clone();
    let mut choice = vec![0u32; coords.len()];
    let mut total = 0.0f64;
    loop {
        let mut prob = 1.0f64;
        for (c, &ch) in coords.iter().zip(&choice) {
            match c {
                Coord::IntSignup { pos, opp, prob: p } => {
                    let on = ch == 1;
                    path.int_signup[pos * path.n + opp] = on;
                    prob *= if on { *p } else { 1.0 - *p };
                }
                Coord::ExtSignup { pos, prob: p } => {
                    let on = ch == 1;
                    path.ext_signup[*pos] = on;
                    prob *= if on { *p } else { 1.0 - *p };
                }
                Coord::ViewPos { pos, probs } => {
                    path.view_position[*pos] = ch + 1;
                    prob *= probs[ch as usize];
                }
            }
        }
        if prob > 0.0 {
            let run = match gpg_weights {
                Some(w) => {
                    simulate_run_with_weights(policy, instance, &path, Some(w.to_vec()))?
                }
                None => simulate_run(policy, instance, &path, None)?,
            };
            total += prob * f64::from(run.total);
        }
        // Mixed-radix increment over the choice vector.
        let mut k = 0;
        loop {
            if k == coords.len() {
                return Ok(total);
            }
            let radix = match &coords[k] {
                Coord::ViewPos { probs, .. } => probs.len() as u32,
                _ => 2,
            };
            choice[k] += 1;
            if choice[k] < radix {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Exact expectation of `simulate_run(..).total` by exhaustive enumeration
/// over all sample paths weighted by their probabilities. GPG additionally
/// integrates over its uniform weight draws (n <= 2 enforced).
pub fn policy_value_exact(policy: Policy, instance: &Instance) -> Result<f64, BenchmarkError> {
    require_valid(instance)?;
    let enumerate_views = policy == Policy::AcR && instance.cascade.is_some();
    let coords = stochastic_coords(instance, enumerate_views)?;
    if policy != Policy::Gpg {
        return enumerate_expectation(policy, instance, &coords, None);
    }
    match instance.n() {
        // The argmax never compares two weights, so any positive weight works
        // (w = 0 has probability zero under y ~ U[0,1]).
        1 => enumerate_expectation(policy, instance, &coords, Some(&[0.5])),
        2 => {
            let mut value = 0.0;
            let mut prob_sum = 0.0;
            for (rep_ratio, prob) in gpg_ratio_regions(instance) {
                prob_sum += prob;
                if prob > 0.0 {
                    let v = enumerate_expectation(policy, instance, &coords, Some(&[1.0, rep_ratio]))?;
                    value += prob * v;
                }
            }
            debug_assert!((prob_sum - 1.0).abs() < 1e-9, "region probabilities sum to {prob_sum}");
            Ok(value)
        }
        n => Err(BenchmarkError::GpgTooWide(n)),
    }
}

/// For n = 2, a GPG run with fixed sign-up realizations is piecewise constant
/// in the weight ratio r = w2/w1: every comparison is mu1 w1 vs mu2 w2, with
/// boundaries at r = mu1/mu2 over the arrivals. Returns (representative r,
/// probability of the region) under w_i = 1 - exp(y_i - 1), y_i ~ U[0,1].
fn gpg_ratio_regions(instance: &Instance) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = instance
        .arrivals
        .iter()
        .filter_map(|v| match v {
            Volunteer::Internal { mu, .. } if mu[0] > 0.0 && mu[1] > 0.0 => Some(mu[0] / mu[1]),
            _ => None,
        })
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut regions = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0.0f64;
    for &c in &cuts {
        regions.push((midpoint(lo, c), ratio_region_prob(lo, c)));
        lo = c;
    }
    regions.push((if lo == 0.0 { 1.0 } else { 2.0 * lo }, ratio_region_prob(lo, f64::INFINITY)));
    regions
}

fn midpoint(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        b / 2.0
    } else {
        0.5 * (a + b)
    }
}

const W_BAR: f64 = 0.632_120_558_828_557_7; // 1 - 1/e

/// P[a < w2/w1 < b] for iid w with density 1/(1-w) on [0, 1-1/e]:
/// integral of f(w1) * (F(min(b w1, wbar)) - F(min(a w1, wbar))) dw1,
/// F(w) = -ln(1-w). Simpson quadrature split at the clamp kinks.
fn ratio_region_prob(a: f64, b: f64) -> f64 {
    let cdf = |w: f64| -(1.0 - w.min(W_BAR)).ln();
    let f = |w1: f64| {
        let hi = if b.is_infinite() { W_BAR } else { (b * w1).min(W_BAR) };
        let lo = (a * w1).min(W_BAR);
        (cdf(hi) - cdf(lo)) / (1.0 - w1)
    };
    // Kinks where the clamps switch.
    let mut knots = vec![0.0, W_BAR];
    for s in [a, b] {
        if s.is_finite() && s > 0.0 {
            let k = W_BAR / s;
            if k > 0.0 && k < W_BAR {
                knots.push(k);
            }
        }
    }
    knots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for pair in knots.windows(2) {
        total += simpson(&f, pair[0], pair[1], 10_000);
    }
    total
}

fn simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + h * k as f64);
    }
    s * h / 3.0
}
