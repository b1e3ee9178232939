//! Domain types for the multi-channel matching problem: opportunities with
//! integer capacities, an ordered arrival sequence of external/internal
//! volunteers, instance-level metrics (EFET beta, MCPR sigma), the psi
//! trade-off function, and instance validation.
//!
//! All types are immutable after construction and safe to share across
//! threads; every operation here is a pure function.

use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

/// Dummy opportunity index: "no recommendation" / "no sign-up".
pub const DUMMY: u32 = 0;

/// Offline-side node. Ids are 1-based and contiguous; 0 is reserved for the
/// dummy opportunity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opportunity {
    pub id: u32,
    pub capacity: u32,
}

fn default_ext_prob() -> f64 {
    1.0
}

/// Online-side arrival. External traffic targets exactly one opportunity and
/// bypasses recommendations; internal traffic carries a dense length-n
/// conversion-probability vector and is routed by the policy.
///
/// The mu vector is reference-counted so that batches of identical
/// volunteers (every hard-instance family) share one allocation; the JSON
/// encoding is the plain dense array either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source")]
pub enum Volunteer {
    #[serde(rename = "ext")]
    External {
        t: u32,
        target: u32,
        #[serde(default = "default_ext_prob")]
        ext_signup_prob: f64,
    },
    #[serde(rename = "int")]
    Internal { t: u32, mu: Arc<Vec<f64>> },
}

impl Volunteer {
    pub fn external(t: u32, target: u32, ext_signup_prob: f64) -> Self {
        Volunteer::External { t, target, ext_signup_prob }
    }

    pub fn internal(t: u32, mu: Vec<f64>) -> Self {
        Volunteer::Internal { t, mu: Arc::new(mu) }
    }

    pub fn internal_shared(t: u32, mu: Arc<Vec<f64>>) -> Self {
        Volunteer::Internal { t, mu }
    }

    pub fn t(&self) -> u32 {
        match self {
            Volunteer::External { t, .. } | Volunteer::Internal { t, .. } => *t,
        }
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Volunteer::Internal { .. })
    }
}

/// Opportunity-agnostic cascade parameters: per-volunteer view probability
/// nu_t, per-volunteer exit probability q_t, and the maximum ranking length K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub view_prob: Vec<f64>,
    pub exit_prob: Vec<f64>,
    pub max_list_len: u32,
}

impl CascadeParams {
    /// P[view position = k] for k in 1..=K under the cascade:
    /// nu * ((1-nu)(1-q))^(k-1). Position K+1 means "no view".
    pub fn position_probs(&self, t_index: usize) -> Vec<f64> {
        let nu = self.view_prob[t_index];
        let q = self.exit_prob[t_index];
        let k = self.max_list_len as usize;
        let step = (1.0 - nu) * (1.0 - q);
        let mut probs = Vec::with_capacity(k + 1);
        let mut w = 1.0;
        let mut seen = 0.0;
        for _ in 0..k {
            let p = nu * w;
            probs.push(p);
            seen += p;
            w *= step;
        }
        probs.push((1.0 - seen).max(0.0));
        probs
    }
}

/// Generator provenance embedded under the instance's "meta" key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requested_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounding_report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounding_warning: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command_line: Option<String>,
}

/// A full problem instance: opportunities, the ordered arrival sequence,
/// optional cascade parameters, and optional per-opportunity recency scores
/// (used only by the CP/SCP baselines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub opportunities: Vec<Opportunity>,
    pub arrivals: Vec<Volunteer>,
    pub cascade: Option<CascadeParams>,
    pub recency: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.opportunities.len()
    }

    pub fn horizon(&self) -> usize {
        self.arrivals.len()
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.opportunities.iter().map(|o| o.capacity).collect()
    }

    pub fn total_capacity(&self) -> u64 {
        self.opportunities.iter().map(|o| o.capacity as u64).sum()
    }

    /// Number of internal arrivals.
    pub fn internal_count(&self) -> usize {
        self.arrivals.iter().filter(|v| v.is_internal()).count()
    }
}

/// One structured invariant violation found by `validate_instance`.
/// Violations are data, not faults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NoOpportunities,
    NonPositiveCapacity { id: u32 },
    NonContiguousIds { position: usize, id: u32 },
    ArrivalIndexMismatch { position: usize, t: u32 },
    ExternalWithoutTarget { t: u32 },
    ExtSignupProbOutOfRange { t: u32, value: f64 },
    ConversionLengthMismatch { t: u32, len: usize, n: usize },
    ConversionOutOfRange { t: u32, opp: u32, value: f64 },
    InternalAllZeroConversion { t: u32 },
    CascadeLengthMismatch { field: &'static str, len: usize, horizon: usize },
    CascadeViewProbInvalid { t: u32, value: f64 },
    CascadeExitProbInvalid { t: u32, value: f64 },
    CascadeZeroListLen,
    RecencyLengthMismatch { len: usize, n: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NoOpportunities => write!(f, "instance has no opportunities"),
            Violation::NonPositiveCapacity { id } => {
                write!(f, "opportunity {id} has capacity < 1")
            }
            Violation::NonContiguousIds { position, id } => {
                write!(f, "opportunity at position {position} has id {id}; ids must be 1..n in order")
            }
            Violation::ArrivalIndexMismatch { position, t } => {
                write!(f, "arrival at position {position} has t = {t}; arrivals must be indexed 1..T in order")
            }
            Violation::ExternalWithoutTarget { t } => {
                write!(f, "external volunteer {t} without (valid) target")
            }
            Violation::ExtSignupProbOutOfRange { t, value } => {
                write!(f, "external volunteer {t} has ext_signup_prob {value} outside (0, 1]")
            }
            Violation::ConversionLengthMismatch { t, len, n } => {
                write!(f, "volunteer {t} conversion length mismatch: {len} != n = {n}")
            }
            Violation::ConversionOutOfRange { t, opp, value } => {
                write!(f, "volunteer {t} has mu[{opp}] = {value} outside [0, 1]")
            }
            Violation::InternalAllZeroConversion { t } => {
                write!(f, "internal volunteer {t} has no strictly positive conversion probability")
            }
            Violation::CascadeLengthMismatch { field, len, horizon } => {
                write!(f, "cascade {field} has length {len}; expected horizon {horizon}")
            }
            Violation::CascadeViewProbInvalid { t, value } => {
                write!(f, "cascade view_prob for volunteer {t} is {value}; must be in (0, 1]")
            }
            Violation::CascadeExitProbInvalid { t, value } => {
                write!(f, "cascade exit_prob for volunteer {t} is {value}; must be in [0, 1]")
            }
            Violation::CascadeZeroListLen => write!(f, "cascade max_list_len must be >= 1"),
            Violation::RecencyLengthMismatch { len, n } => {
                write!(f, "recency has length {len}; expected n = {n}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("psi argument {0} outside [0, 1]")]
    PsiDomain(f64),
    #[error("EFET undefined: instance has no opportunities")]
    EmptyInstance,
    #[error("invalid instance: {0:?}")]
    Invalid(Vec<Violation>),
}

/// The exponential trade-off function psi(FR) = 1 - exp(FR - 1); strictly
/// decreasing on [0, 1] with psi(1) = 0.
pub fn psi(fill_rate: f64) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&fill_rate) {
        return Err(ModelError::PsiDomain(fill_rate));
    }
    Ok(psi_unchecked(fill_rate))
}

/// psi without the domain check, for hot inner loops that guarantee FR in [0, 1].
#[inline]
pub fn psi_unchecked(fill_rate: f64) -> f64 {
    1.0 - (fill_rate - 1.0).exp()
}

/// EFET beta: fraction of total capacity fillable by external traffic alone,
/// counted by targeting volunteers (ext_signup_prob = 1 semantics).
pub fn compute_efet(instance: &Instance) -> Result<f64, ModelError> {
    if instance.opportunities.is_empty() {
        return Err(ModelError::EmptyInstance);
    }
    let n = instance.n();
    let mut targets = vec![0u64; n];
    for v in &instance.arrivals {
        if let Volunteer::External { target, .. } = v {
            let idx = (*target as usize).wrapping_sub(1);
            if idx < n {
                targets[idx] += 1;
            }
        }
    }
    let fillable: u64 = instance
        .opportunities
        .iter()
        .zip(&targets)
        .map(|(o, &cnt)| cnt.min(o.capacity as u64))
        .sum();
    Ok(fillable as f64 / instance.total_capacity() as f64)
}

/// MCPR sigma: maximum over internal volunteers of (max positive mu) /
/// (min positive mu). Instances with no internal traffic return 1. Returns
/// infinity only if a positive mu is subnormal (generators emit exact zeros).
pub fn compute_mcpr(instance: &Instance) -> f64 {
    let mut sigma = 1.0f64;
    for v in &instance.arrivals {
        if let Volunteer::Internal { mu, .. } = v {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for &m in mu.iter() {
                if m > 0.0 {
                    lo = lo.min(m);
                    hi = hi.max(m);
                }
            }
            if hi > 0.0 {
                if lo.is_subnormal() {
                    return f64::INFINITY;
                }
                sigma = sigma.max(hi / lo);
            }
        }
    }
    sigma
}

/// Checks every type invariant; an empty list means the instance is well formed.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = instance.n();
    if n == 0 {
        out.push(Violation::NoOpportunities);
    }
    for (pos, opp) in instance.opportunities.iter().enumerate() {
        if opp.capacity < 1 {
            out.push(Violation::NonPositiveCapacity { id: opp.id });
        }
        if opp.id as usize != pos + 1 {
            out.push(Violation::NonContiguousIds { position: pos, id: opp.id });
        }
    }
    for (pos, v) in instance.arrivals.iter().enumerate() {
        if v.t() as usize != pos + 1 {
            out.push(Violation::ArrivalIndexMismatch { position: pos, t: v.t() });
        }
        match v {
            Volunteer::External { t, target, ext_signup_prob } => {
                if *target == DUMMY || *target as usize > n {
                    out.push(Violation::ExternalWithoutTarget { t: *t });
                }
                if !(*ext_signup_prob > 0.0 && *ext_signup_prob <= 1.0) {
                    out.push(Violation::ExtSignupProbOutOfRange { t: *t, value: *ext_signup_prob });
                }
            }
            Volunteer::Internal { t, mu } => {
                if mu.len() != n {
                    out.push(Violation::ConversionLengthMismatch { t: *t, len: mu.len(), n });
                } else {
                    let mut any_positive = false;
                    for (i, &m) in mu.iter().enumerate() {
                        if !(0.0..=1.0).contains(&m) {
                            out.push(Violation::ConversionOutOfRange {
                                t: *t,
                                opp: i as u32 + 1,
                                value: m,
                            });
                        }
                        any_positive |= m > 0.0;
                    }
                    if !any_positive {
                        out.push(Violation::InternalAllZeroConversion { t: *t });
                    }
                }
            }
        }
    }
    if let Some(c) = &instance.cascade {
        let horizon = instance.horizon();
        if c.view_prob.len() != horizon {
            out.push(Violation::CascadeLengthMismatch {
                field: "view_prob",
                len: c.view_prob.len(),
                horizon,
            });
        }
        if c.exit_prob.len() != horizon {
            out.push(Violation::CascadeLengthMismatch {
                field: "exit_prob",
                len: c.exit_prob.len(),
                horizon,
            });
        }
        if c.max_list_len == 0 {
            out.push(Violation::CascadeZeroListLen);
        }
        for v in &instance.arrivals {
            if !v.is_internal() {
                continue;
            }
            let idx = (v.t() - 1) as usize;
            if let Some(&nu) = c.view_prob.get(idx) {
                if !(nu > 0.0 && nu <= 1.0) {
                    out.push(Violation::CascadeViewProbInvalid { t: v.t(), value: nu });
                }
            }
            if let Some(&q) = c.exit_prob.get(idx) {
                if !(0.0..=1.0).contains(&q) {
                    out.push(Violation::CascadeExitProbInvalid { t: v.t(), value: q });
                }
            }
        }
    }
    if let Some(r) = &instance.recency {
        if r.len() != n {
            out.push(Violation::RecencyLengthMismatch { len: r.len(), n });
        }
    }
    out
}

/// Returns the instance if it passes validation, otherwise all violations.
pub fn require_valid(instance: &Instance) -> Result<(), ModelError> {
    let v = validate_instance(instance);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(v))
    }
}

/// Fixed realization of every random volunteer decision: sign-up Bernoullis
/// for all (internal volunteer, opportunity) pairs, external sign-up
/// Bernoullis, and (cascade runs) one view position per internal volunteer.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    /// Row-major T x n; rows for external arrivals stay all-false.
    pub int_signup: Vec<bool>,
    /// Indexed by arrival position (t-1); false for internal arrivals.
    pub ext_signup: Vec<bool>,
    /// Indexed by arrival position (t-1), values in 1..=K+1; empty when the
    /// instance has no cascade parameters.
    pub view_position: Vec<u32>,
    pub n: usize,
}

impl SamplePath {
    pub fn int_signup_at(&self, arrival_pos: usize, opp_idx: usize) -> bool {
        self.int_signup[arrival_pos * self.n + opp_idx]
    }
}

/// Outcome of one simulated run: per-opportunity filled capacity split by
/// traffic source, raw sign-up counts including excess, and the total number
/// of useful sign-ups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub filled_int: Vec<u32>,
    pub filled_ext: Vec<u32>,
    pub raw_signups: Vec<u32>,
    pub total: u32,
}

impl RunResult {
    pub fn excess(&self) -> u64 {
        self.raw_signups
            .iter()
            .zip(self.filled_int.iter().zip(&self.filled_ext))
            .map(|(&raw, (&fi, &fe))| raw as u64 - (fi + fe).min(raw) as u64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opp(id: u32, capacity: u32) -> Opportunity {
        Opportunity { id, capacity }
    }

    fn small_instance() -> Instance {
        Instance {
            opportunities: vec![opp(1, 1), opp(2, 1)],
            arrivals: vec![
                Volunteer::external(1, 1, 1.0),
                Volunteer::internal(2, vec![0.1, 0.0]),
            ],
            cascade: None,
            recency: None,
            meta: None,
        }
    }

    #[test]
    fn psi_reference_values() {
        assert_eq!(psi(1.0).unwrap(), 0.0);
        assert!((psi(0.0).unwrap() - 0.6321205588285577).abs() < 1e-12);
        // 1 - exp(-0.5), frozen from high-precision evaluation.
        assert!((psi(0.5).unwrap() - 0.3934693402873666).abs() < 1e-12);
        assert!(psi(-0.1).is_err());
        assert!(psi(1.1).is_err());
    }

    #[test]
    fn psi_recurrence_exact() {
        // 1 - psi((k-1)/c) = e^{-1/c} (1 - psi(k/c))
        for c in 1..=50u32 {
            for k in 1..=c {
                let lhs = 1.0 - psi_unchecked((k - 1) as f64 / c as f64);
                let rhs = (-1.0 / c as f64).exp() * (1.0 - psi_unchecked(k as f64 / c as f64));
                assert!((lhs - rhs).abs() < 1e-12, "c={c} k={k}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn efet_counts_targets_capped_by_capacity() {
        let inst = small_instance();
        assert!((compute_efet(&inst).unwrap() - 0.5).abs() < 1e-15);

        let capped = Instance {
            opportunities: vec![opp(1, 5)],
            arrivals: (1..=8)
                .map(|t| Volunteer::external(t, 1, 1.0))
                .collect(),
            cascade: None,
            recency: None,
            meta: None,
        };
        assert_eq!(compute_efet(&capped).unwrap(), 1.0);

        let empty = Instance {
            opportunities: vec![],
            arrivals: vec![],
            cascade: None,
            recency: None,
            meta: None,
        };
        assert!(compute_efet(&empty).is_err());
    }

    #[test]
    fn mcpr_values() {
        let inst = small_instance();
        assert_eq!(compute_mcpr(&inst), 1.0);

        let mixed = Instance {
            opportunities: vec![opp(1, 1), opp(2, 1), opp(3, 1)],
            arrivals: vec![Volunteer::internal(1, vec![1.0, 0.25, 0.0])],
            cascade: None,
            recency: None,
            meta: None,
        };
        assert!((compute_mcpr(&mixed) - 4.0).abs() < 1e-12);

        let ext_only = Instance {
            opportunities: vec![opp(1, 1)],
            arrivals: vec![Volunteer::external(1, 1, 1.0)],
            cascade: None,
            recency: None,
            meta: None,
        };
        assert_eq!(compute_mcpr(&ext_only), 1.0);
    }

    #[test]
    fn validate_flags_structured_violations() {
        let inst = small_instance();
        assert!(validate_instance(&inst).is_empty());

        let bad_target = Instance {
            arrivals: vec![
                Volunteer::external(1, 7, 1.0),
                Volunteer::internal(2, vec![0.1, 0.0]),
            ],
            ..small_instance()
        };
        assert!(validate_instance(&bad_target)
            .iter()
            .any(|v| matches!(v, Violation::ExternalWithoutTarget { t: 1 })));

        let bad_mu_len = Instance {
            arrivals: vec![Volunteer::internal(1, vec![0.1])],
            ..small_instance()
        };
        assert!(validate_instance(&bad_mu_len)
            .iter()
            .any(|v| matches!(v, Violation::ConversionLengthMismatch { t: 1, len: 1, n: 2 })));

        let all_zero = Instance {
            arrivals: vec![Volunteer::internal(1, vec![0.0, 0.0])],
            ..small_instance()
        };
        assert!(validate_instance(&all_zero)
            .iter()
            .any(|v| matches!(v, Violation::InternalAllZeroConversion { t: 1 })));
    }

    #[test]
    fn instance_json_schema_is_bit_exact() {
        let inst = Instance {
            opportunities: vec![opp(1, 5)],
            arrivals: vec![
                Volunteer::external(1, 1, 1.0),
                Volunteer::internal(2, vec![0.1, 0.0]),
            ],
            cascade: None,
            recency: Some(vec![2.0, 1.0]),
            meta: None,
        };
        let expected: serde_json::Value = serde_json::from_str(
            r#"{"opportunities":[{"id":1,"capacity":5}],
                "arrivals":[{"t":1,"source":"ext","target":1,"ext_signup_prob":1.0},
                            {"t":2,"source":"int","mu":[0.1,0.0]}],
                "cascade":null,"recency":[2.0,1.0]}"#,
        )
        .unwrap();
        let got: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&inst).unwrap()).unwrap();
        assert_eq!(got, expected);
        let back: Instance = serde_json::from_value(expected).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn cascade_position_probs_sum_to_one() {
        let c = CascadeParams {
            view_prob: vec![0.6, 0.3],
            exit_prob: vec![0.2, 0.0],
            max_list_len: 3,
        };
        for t in 0..2 {
            let p = c.position_probs(t);
            assert_eq!(p.len(), 4);
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            // nu * ((1-nu)(1-q))^(k-1)
            let nu = c.view_prob[t];
            let q = c.exit_prob[t];
            for k in 0..3 {
                let expect = nu * ((1.0 - nu) * (1.0 - q)).powi(k as i32);
                assert!((p[k] - expect).abs() < 1e-12);
            }
        }
    }
}
