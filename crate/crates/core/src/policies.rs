//! Online recommendation policies behind one interface, plus the simulation
//! loop that runs a policy over an instance and a fixed sample path.
//!
//! Tie-breaking is lowest index everywhere; ties at value 0 resolve to the
//! dummy opportunity (index 0), so a full opportunity is never recommended.

use crate::model::{
    psi_unchecked, require_valid, CascadeParams, Instance, ModelError, RunResult, SamplePath,
    Volunteer, DUMMY,
};
use thiserror::Error;

/// Policy identifiers; the strings accepted on the CLI are
/// `ac`, `msvv`, `gpg`, `cp`, `scp`, `rc`, `ac-r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Ac,
    Msvv,
    Gpg,
    Cp,
    Scp,
    Rc,
    AcR,
}

pub const ALL_POLICIES: [Policy; 7] = [
    Policy::Ac,
    Policy::Msvv,
    Policy::Gpg,
    Policy::Cp,
    Policy::Scp,
    Policy::Rc,
    Policy::AcR,
];

impl Policy {
    pub fn id(&self) -> &'static str {
        match self {
            Policy::Ac => "ac",
            Policy::Msvv => "msvv",
            Policy::Gpg => "gpg",
            Policy::Cp => "cp",
            Policy::Scp => "scp",
            Policy::Rc => "rc",
            Policy::AcR => "ac-r",
        }
    }

    pub fn parse(s: &str) -> Option<Policy> {
        match s {
            "ac" => Some(Policy::Ac),
            "msvv" => Some(Policy::Msvv),
            "gpg" => Some(Policy::Gpg),
            "cp" => Some(Policy::Cp),
            "scp" => Some(Policy::Scp),
            "rc" => Some(Policy::Rc),
            "ac-r" => Some(Policy::AcR),
            _ => None,
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy {0} requires per-opportunity recency scores on the instance")]
    MissingRecency(Policy),
    #[error("policy ac-r requires cascade parameters on the instance")]
    MissingCascade,
    #[error("policy gpg requires an initialized weight vector (draw y before the run)")]
    MissingGpgWeights,
    #[error("sample path shape mismatch: {0}")]
    PathShape(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-run counters. `int_fill`/`ext_fill` are the AC counters of Algorithm 2
/// (min-capped so int + ext never exceeds capacity); their sum is the MSVV
/// counter of Algorithm 1.
#[derive(Debug, Clone)]
pub struct PolicyState {
    pub int_fill: Vec<u32>,
    pub ext_fill: Vec<u32>,
    /// GPG's fixed per-opportunity weights 1 - exp(y_i - 1); None for other policies.
    pub gpg_weights: Option<Vec<f64>>,
}

impl PolicyState {
    pub fn new(n: usize) -> Self {
        PolicyState { int_fill: vec![0; n], ext_fill: vec![0; n], gpg_weights: None }
    }

    #[inline]
    pub fn filled(&self, i: usize) -> u32 {
        self.int_fill[i] + self.ext_fill[i]
    }

    /// AC fill rate: int / (c - ext), with 0/0 treated as 1 (opportunity full).
    #[inline]
    pub fn ac_fill_rate(&self, i: usize, capacity: u32) -> f64 {
        let denom = capacity - self.ext_fill[i];
        if denom == 0 {
            1.0
        } else {
            f64::from(self.int_fill[i]) / f64::from(denom)
        }
    }

    /// MSVV fill rate: total filled / c.
    #[inline]
    pub fn msvv_fill_rate(&self, i: usize, capacity: u32) -> f64 {
        f64::from(self.filled(i)) / f64::from(capacity)
    }
}

/// Either a single opportunity id in {0, 1..n} (0 = dummy) or, for cascade
/// runs, a ranked list of distinct non-dummy ids of length <= K.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recommendation {
    Single(u32),
    Ranked(Vec<u32>),
}

fn mu_of(volunteer: &Volunteer) -> &[f64] {
    match volunteer {
        Volunteer::Internal { mu, .. } => mu,
        Volunteer::External { .. } => unreachable!("recommend called on external traffic"),
    }
}

/// Argmax of mu_i * psi(AC fill rate); dummy value 0 wins ties at 0.
pub fn ac_recommend(state: &PolicyState, volunteer: &Volunteer, caps: &[u32]) -> Recommendation {
    let mu = mu_of(volunteer);
    let mut best = DUMMY;
    let mut best_val = 0.0f64;
    for (i, &m) in mu.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let val = m * psi_unchecked(state.ac_fill_rate(i, caps[i]));
        if val > best_val {
            best_val = val;
            best = i as u32 + 1;
        }
    }
    Recommendation::Single(best)
}

/// Argmax of mu_i * psi(MSVV fill rate); same tie-breaking as AC.
pub fn msvv_recommend(state: &PolicyState, volunteer: &Volunteer, caps: &[u32]) -> Recommendation {
    let mu = mu_of(volunteer);
    let mut best = DUMMY;
    let mut best_val = 0.0f64;
    for (i, &m) in mu.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let val = m * psi_unchecked(state.msvv_fill_rate(i, caps[i]));
        if val > best_val {
            best_val = val;
            best = i as u32 + 1;
        }
    }
    Recommendation::Single(best)
}

/// Argmax of mu_i * w_i over opportunities with remaining capacity, where
/// w_i = 1 - exp(y_i - 1) with y drawn uniformly once per run.
pub fn gpg_recommend(
    state: &PolicyState,
    volunteer: &Volunteer,
    caps: &[u32],
) -> Result<Recommendation, PolicyError> {
    let weights = state.gpg_weights.as_ref().ok_or(PolicyError::MissingGpgWeights)?;
    let mu = mu_of(volunteer);
    let mut best = DUMMY;
    let mut best_val = 0.0f64;
    for (i, &m) in mu.iter().enumerate() {
        if m <= 0.0 || state.filled(i) >= caps[i] {
            continue;
        }
        let val = m * weights[i];
        if val > best_val {
            best_val = val;
            best = i as u32 + 1;
        }
    }
    Ok(Recommendation::Single(best))
}

/// CP: compatible opportunity with maximal recency, ignoring remaining
/// capacity. SCP: same, restricted to opportunities with remaining capacity.
pub fn cp_recommend(
    state: &PolicyState,
    volunteer: &Volunteer,
    caps: &[u32],
    recency: &[f64],
    capacity_aware: bool,
) -> Recommendation {
    let mu = mu_of(volunteer);
    let mut best = DUMMY;
    let mut best_rec = f64::NEG_INFINITY;
    for (i, &m) in mu.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        if capacity_aware && state.filled(i) >= caps[i] {
            continue;
        }
        if recency[i] > best_rec {
            best_rec = recency[i];
            best = i as u32 + 1;
        }
    }
    Recommendation::Single(best)
}

/// RC: compatible open opportunity with the largest remaining capacity.
pub fn rc_recommend(state: &PolicyState, volunteer: &Volunteer, caps: &[u32]) -> Recommendation {
    let mu = mu_of(volunteer);
    let mut best = DUMMY;
    let mut best_rem = 0u32;
    for (i, &m) in mu.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        let rem = caps[i] - state.filled(i).min(caps[i]);
        if rem > best_rem {
            best_rem = rem;
            best = i as u32 + 1;
        }
    }
    Recommendation::Single(best)
}

/// AC-R under the opportunity-agnostic cascade: opportunities with
/// mu_i * psi(AC fill rate) > 0, sorted descending by that value (ties by
/// lowest index), truncated to K.
pub fn acr_rank(
    state: &PolicyState,
    volunteer: &Volunteer,
    caps: &[u32],
    cascade: &CascadeParams,
) -> Recommendation {
    let mu = mu_of(volunteer);
    let mut scored: Vec<(f64, u32)> = mu
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| {
            if m <= 0.0 {
                return None;
            }
            let val = m * psi_unchecked(state.ac_fill_rate(i, caps[i]));
            if val > 0.0 {
                Some((val, i as u32 + 1))
            } else {
                None
            }
        })
        .collect();
    // Descending value, ascending index on ties.
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.truncate(cascade.max_list_len as usize);
    Recommendation::Ranked(scored.into_iter().map(|(_, i)| i).collect())
}

/// Dispatches to the policy's recommendation rule for an internal volunteer.
pub fn recommend(
    policy: Policy,
    state: &PolicyState,
    volunteer: &Volunteer,
    instance: &Instance,
    caps: &[u32],
) -> Result<Recommendation, PolicyError> {
    match policy {
        Policy::Ac => Ok(ac_recommend(state, volunteer, caps)),
        Policy::Msvv => Ok(msvv_recommend(state, volunteer, caps)),
        Policy::Gpg => gpg_recommend(state, volunteer, caps),
        Policy::Cp | Policy::Scp => {
            let recency = instance
                .recency
                .as_ref()
                .ok_or(PolicyError::MissingRecency(policy))?;
            Ok(cp_recommend(state, volunteer, caps, recency, policy == Policy::Scp))
        }
        Policy::Rc => Ok(rc_recommend(state, volunteer, caps)),
        Policy::AcR => {
            let cascade = instance.cascade.as_ref().ok_or(PolicyError::MissingCascade)?;
            Ok(acr_rank(state, volunteer, caps, cascade))
        }
    }
}

fn check_path_shape(instance: &Instance, path: &SamplePath) -> Result<(), PolicyError> {
    let horizon = instance.horizon();
    let n = instance.n();
    if path.n != n || path.int_signup.len() != horizon * n {
        return Err(PolicyError::PathShape(format!(
            "int_signup is {} x {}, instance is {} x {}",
            if path.n == 0 { 0 } else { path.int_signup.len() / path.n },
            path.n,
            horizon,
            n
        )));
    }
    if path.ext_signup.len() != horizon {
        return Err(PolicyError::PathShape(format!(
            "ext_signup length {} != horizon {}",
            path.ext_signup.len(),
            horizon
        )));
    }
    if instance.cascade.is_some() && path.view_position.len() != horizon {
        return Err(PolicyError::PathShape(format!(
            "view_position length {} != horizon {}",
            path.view_position.len(),
            horizon
        )));
    }
    Ok(())
}

/// Runs `policy` over the arrival sequence with all randomness fixed by
/// `path` (and, for GPG, by `gpg_y`). Deterministic given its arguments.
///
/// External traffic is always routed to its target; a sign-up beyond capacity
/// counts in `raw_signups` only. Internal traffic views per the model implied
/// by the recommendation: a single recommendation is viewed deterministically,
/// a ranked list is viewed at `path.view_position` when long enough.
pub fn simulate_run(
    policy: Policy,
    instance: &Instance,
    path: &SamplePath,
    gpg_y: Option<&[f64]>,
) -> Result<RunResult, PolicyError> {
    require_valid(instance)?;
    check_path_shape(instance, path)?;
    let weights = match (policy, gpg_y) {
        (Policy::Gpg, Some(y)) => Some(y.iter().map(|&yi| 1.0 - (yi - 1.0).exp()).collect()),
        (Policy::Gpg, None) => return Err(PolicyError::MissingGpgWeights),
        _ => None,
    };
    simulate_run_with_weights(policy, instance, path, weights)
}

/// Same as `simulate_run` but with GPG weights w_i = 1 - exp(y_i - 1)
/// supplied directly; used by the exact-expectation oracle.
pub(crate) fn simulate_run_with_weights(
    policy: Policy,
    instance: &Instance,
    path: &SamplePath,
    gpg_weights: Option<Vec<f64>>,
) -> Result<RunResult, PolicyError> {
    let n = instance.n();
    let caps = instance.capacities();
    let mut state = PolicyState::new(n);
    state.gpg_weights = gpg_weights;
    let mut raw = vec![0u32; n];

    for v in &instance.arrivals {
        let pos = (v.t() - 1) as usize;
        match v {
            Volunteer::External { target, .. } => {
                let i = (*target - 1) as usize;
                if path.ext_signup[pos] {
                    raw[i] += 1;
                    if state.filled(i) < caps[i] {
                        state.ext_fill[i] += 1;
                    }
                }
            }
            Volunteer::Internal { .. } => {
                let viewed: u32 = match recommend(policy, &state, v, instance, &caps)? {
                    Recommendation::Single(i) => i,
                    Recommendation::Ranked(list) => {
                        let k = path.view_position[pos] as usize;
                        if k >= 1 && k <= list.len() {
                            list[k - 1]
                        } else {
                            DUMMY
                        }
                    }
                };
                if viewed != DUMMY {
                    let i = (viewed - 1) as usize;
                    if path.int_signup_at(pos, i) {
                        raw[i] += 1;
                        if state.filled(i) < caps[i] {
                            state.int_fill[i] += 1;
                        }
                    }
                }
            }
        }
    }

    let total = state.int_fill.iter().chain(&state.ext_fill).sum();
    Ok(RunResult {
        filled_int: state.int_fill,
        filled_ext: state.ext_fill,
        raw_signups: raw,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Opportunity;

    fn inst(caps: &[u32], arrivals: Vec<Volunteer>) -> Instance {
        Instance {
            opportunities: caps
                .iter()
                .enumerate()
                .map(|(i, &c)| Opportunity { id: i as u32 + 1, capacity: c })
                .collect(),
            arrivals,
            cascade: None,
            recency: None,
            meta: None,
        }
    }

    fn all_true_path(instance: &Instance) -> SamplePath {
        let n = instance.n();
        let horizon = instance.horizon();
        SamplePath {
            int_signup: vec![true; horizon * n],
            ext_signup: vec![true; horizon],
            view_position: if instance.cascade.is_some() { vec![1; horizon] } else { vec![] },
            n,
        }
    }

    fn internal(t: u32, mu: &[f64]) -> Volunteer {
        Volunteer::internal(t, mu.to_vec())
    }

    #[test]
    fn ac_prefers_larger_mu_at_equal_fill_rates() {
        let instance = inst(&[1, 1], vec![internal(1, &[0.5, 0.9])]);
        let state = PolicyState::new(2);
        let rec = ac_recommend(&state, &instance.arrivals[0], &[1, 1]);
        assert_eq!(rec, Recommendation::Single(2));
    }

    #[test]
    fn ac_discounts_external_fill_from_denominator() {
        // Opp 1 has one external fill out of c=2: AC fill rates are (0/1, 0/2),
        // both 0, so the tie goes to the lowest index.
        let v = internal(1, &[1.0, 1.0]);
        let mut state = PolicyState::new(2);
        state.ext_fill[0] = 1;
        assert_eq!(ac_recommend(&state, &v, &[2, 2]), Recommendation::Single(1));
        // MSVV sees fill rates (0.5, 0) and diverges to opp 2.
        assert_eq!(msvv_recommend(&state, &v, &[2, 2]), Recommendation::Single(2));
    }

    #[test]
    fn full_opportunity_is_never_recommended() {
        let v = internal(1, &[1.0, 0.0]);
        let mut state = PolicyState::new(2);
        state.int_fill[0] = 1;
        state.ext_fill[0] = 1;
        assert_eq!(ac_recommend(&state, &v, &[2, 2]), Recommendation::Single(0));
        state.int_fill[0] = 2;
        state.ext_fill[0] = 0;
        assert_eq!(msvv_recommend(&state, &v, &[2, 2]), Recommendation::Single(0));
    }

    #[test]
    fn msvv_ties_break_to_lowest_index() {
        let v = internal(1, &[0.3, 0.3]);
        let state = PolicyState::new(2);
        assert_eq!(msvv_recommend(&state, &v, &[1, 1]), Recommendation::Single(1));
    }

    #[test]
    fn gpg_weights_drive_choice_and_full_opps_are_filtered() {
        let v = internal(1, &[0.5, 0.9]);
        let mut state = PolicyState::new(2);
        state.gpg_weights = Some(vec![1.0 - (0.0f64 - 1.0).exp(), 1.0 - (0.0f64 - 1.0).exp()]);
        assert_eq!(gpg_recommend(&state, &v, &[1, 1]).unwrap(), Recommendation::Single(2));

        // y = (0, 0.999999): opp 2's weight collapses to ~9e-7.
        state.gpg_weights = Some(vec![
            1.0 - (0.0f64 - 1.0).exp(),
            1.0 - (0.999999f64 - 1.0).exp(),
        ]);
        assert_eq!(gpg_recommend(&state, &v, &[1, 1]).unwrap(), Recommendation::Single(1));

        state.int_fill[1] = 1;
        state.gpg_weights = Some(vec![0.0, 0.6]);
        // Opp 2 full and opp 1 weight zero: dummy.
        assert_eq!(gpg_recommend(&state, &v, &[1, 1]).unwrap(), Recommendation::Single(0));
    }

    #[test]
    fn cp_scp_rc_semantics() {
        let v = internal(1, &[0.1, 0.1]);
        let mut state = PolicyState::new(2);
        state.int_fill[1] = 1; // opp 2 full at c=1
        let recency = [2.0, 5.0];
        assert_eq!(
            cp_recommend(&state, &v, &[1, 1], &recency, false),
            Recommendation::Single(2)
        );
        assert_eq!(
            cp_recommend(&state, &v, &[1, 1], &recency, true),
            Recommendation::Single(1)
        );

        let mut state = PolicyState::new(2);
        state.int_fill[0] = 1;
        assert_eq!(rc_recommend(&state, &v, &[5, 3]), Recommendation::Single(1));

        let nobody = internal(1, &[0.0, 0.0]);
        // Validation forbids all-zero internal volunteers; the recommenders
        // still degrade to the dummy.
        assert_eq!(rc_recommend(&state, &nobody, &[5, 3]), Recommendation::Single(0));
        assert_eq!(
            cp_recommend(&state, &nobody, &[5, 3], &recency, false),
            Recommendation::Single(0)
        );
    }

    #[test]
    fn acr_ranks_descending_and_truncates() {
        let cascade = CascadeParams {
            view_prob: vec![0.5],
            exit_prob: vec![0.0],
            max_list_len: 2,
        };
        let state = PolicyState::new(3);
        let v = internal(1, &[0.3, 0.5, 0.4]);
        assert_eq!(
            acr_rank(&state, &v, &[1, 1, 1], &cascade),
            Recommendation::Ranked(vec![2, 3])
        );

        let zero = internal(1, &[0.0, 0.0, 0.0]);
        assert_eq!(
            acr_rank(&state, &zero, &[1, 1, 1], &cascade),
            Recommendation::Ranked(vec![])
        );

        let cascade3 = CascadeParams { max_list_len: 3, ..cascade };
        let tie = internal(1, &[0.3, 0.3, 0.0]);
        assert_eq!(
            acr_rank(&state, &tie, &[1, 1, 1], &cascade3),
            Recommendation::Ranked(vec![1, 2])
        );
    }

    #[test]
    fn footnote_instance_ac_wastes_second_volunteer() {
        let instance = inst(
            &[1, 1],
            vec![internal(1, &[1.0, 1.0]), internal(2, &[1.0, 0.0])],
        );
        let path = all_true_path(&instance);
        let run = simulate_run(Policy::Ac, &instance, &path, None).unwrap();
        assert_eq!(run.total, 1);
        assert_eq!(run.filled_int, vec![1, 0]);
    }

    #[test]
    fn external_only_total_matches_efet_mass() {
        let instance = inst(
            &[1, 2],
            vec![
                Volunteer::external(1, 1, 1.0),
                Volunteer::external(2, 1, 1.0),
                Volunteer::external(3, 2, 1.0),
            ],
        );
        let path = all_true_path(&instance);
        for policy in [Policy::Ac, Policy::Msvv, Policy::Rc] {
            let run = simulate_run(policy, &instance, &path, None).unwrap();
            assert_eq!(run.total, 2);
            assert_eq!(run.raw_signups, vec![2, 1]);
            assert_eq!(run.excess(), 1);
        }
    }

    #[test]
    fn capacity_never_exceeded_and_totals_consistent() {
        let instance = inst(
            &[2, 1],
            vec![
                internal(1, &[0.9, 0.8]),
                Volunteer::external(2, 1, 1.0),
                internal(3, &[1.0, 1.0]),
                Volunteer::external(4, 1, 1.0),
                internal(5, &[1.0, 1.0]),
            ],
        );
        let path = all_true_path(&instance);
        for policy in [Policy::Ac, Policy::Msvv, Policy::Rc] {
            let run = simulate_run(policy, &instance, &path, None).unwrap();
            for i in 0..2 {
                assert!(run.filled_int[i] + run.filled_ext[i] <= instance.opportunities[i].capacity);
            }
            let sum: u32 = run.filled_int.iter().chain(&run.filled_ext).sum();
            assert_eq!(sum, run.total);
        }
    }

    #[test]
    fn path_shape_mismatch_is_rejected() {
        let instance = inst(&[1], vec![internal(1, &[0.5])]);
        let path = SamplePath { int_signup: vec![true; 3], ext_signup: vec![false], view_position: vec![], n: 3 };
        assert!(matches!(
            simulate_run(Policy::Ac, &instance, &path, None),
            Err(PolicyError::PathShape(_))
        ));
    }
}
