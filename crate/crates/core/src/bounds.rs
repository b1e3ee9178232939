//! Numeric evaluation of the competitive-ratio bound curves: the universal
//! hardness upper bound, the warm-up (external-traffic-first) bounds, the
//! deterministic-sign-up lower bound on AC, the general z*/convex-envelope
//! lower bound, the general MSVV upper bound, and the ranking/cascade bounds.

use crate::benchmark::lp::{lp_solve, ColumnLp, LpError, LpProblem, LpStatus, Sense, SimplexEngine};
use rayon::prelude::*;
use thiserror::Error;

pub const ONE_MINUS_INV_E: f64 = 0.632_120_558_828_557_7;
const INV_E: f64 = 0.367_879_441_171_442_33;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("beta {0} outside [0, 1]")]
    BetaDomain(f64),
    #[error("sigma {0} must be >= 1")]
    SigmaDomain(f64),
    #[error("({0}, {1}) outside the domain x1, x2 >= 0, x1 + x2 <= 1")]
    EnvelopeDomain(f64, f64),
    #[error("root bracketing failed: {sign_changes} sign changes on the scan grid")]
    RootBracket { sign_changes: usize },
    #[error("LP failure inside a bound evaluation: {0}")]
    Lp(#[from] LpError),
    #[error("envelope LP terminated with status {0:?}")]
    EnvelopeStatus(LpStatus),
    #[error("unknown bound name: {0}")]
    UnknownBound(String),
}

/// Minimum capacity parameter: a finite c or the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CMin {
    Finite(u32),
    Asymptotic,
}

impl CMin {
    /// e^{-1/c}; 1 in the asymptotic regime.
    pub fn decay(&self) -> f64 {
        match self {
            CMin::Finite(c) => (-1.0 / f64::from(*c)).exp(),
            CMin::Asymptotic => 1.0,
        }
    }

    /// 1/c; 0 in the asymptotic regime.
    pub fn inv(&self) -> f64 {
        match self {
            CMin::Finite(c) => 1.0 / f64::from(*c),
            CMin::Asymptotic => 0.0,
        }
    }
}

impl std::fmt::Display for CMin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CMin::Finite(c) => write!(f, "{c}"),
            CMin::Asymptotic => write!(f, "inf"),
        }
    }
}

/// Parameters of a bound evaluation.
#[derive(Debug, Clone, Copy)]
pub struct BoundQuery {
    pub beta: f64,
    pub c_min: CMin,
    /// MCPR; f64::INFINITY for the unbounded case.
    pub sigma: f64,
    /// Envelope grid resolution m.
    pub envelope_grid: usize,
    /// z* scan step.
    pub z_step: f64,
}

impl BoundQuery {
    pub fn new(beta: f64, c_min: CMin, sigma: f64) -> Self {
        BoundQuery { beta, c_min, sigma, envelope_grid: 200, z_step: 1e-4 }
    }

    fn check(&self) -> Result<(), BoundsError> {
        check_beta(self.beta)?;
        if !(self.sigma >= 1.0) {
            return Err(BoundsError::SigmaDomain(self.sigma));
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<(), BoundsError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(BoundsError::BetaDomain(beta));
    }
    Ok(())
}

/// Upper bound on any online algorithm:
/// (1 - 1/e) for beta <= 1/e, else 1 + beta ln(beta).
pub fn hardness_upper(beta: f64) -> Result<f64, BoundsError> {
    check_beta(beta)?;
    if beta <= INV_E {
        Ok(ONE_MINUS_INV_E)
    } else {
        Ok(1.0 + beta * beta.ln())
    }
}

/// Upper bound when all external traffic arrives first:
/// beta + (1 - beta)(1 - 1/e).
pub fn warmup_upper(beta: f64) -> Result<f64, BoundsError> {
    check_beta(beta)?;
    Ok(beta + (1.0 - beta) * ONE_MINUS_INV_E)
}

/// Lower bound on AC when external traffic arrives first:
/// warmup_upper minus 1/c.
pub fn warmup_ac_lower(beta: f64, c_min: CMin) -> Result<f64, BoundsError> {
    Ok(warmup_upper(beta)? - c_min.inv())
}

/// alpha-hat-1 equation of the warm-up MSVV bound:
/// phi(a) = a + (1-a)(exp(-a/(1-a)) - 1).
fn warmup_alpha_lhs(a: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    a + (1.0 - a) * ((-a / (1.0 - a)).exp() - 1.0)
}

/// Solves f(a) = target for a in [0, 1], asserting a single sign change on a
/// 10^4-point grid before bisecting to residual <= 1e-12.
fn solve_unique_root(f: impl Fn(f64) -> f64, target: f64) -> Result<f64, BoundsError> {
    const GRID: usize = 10_000;
    let h = |a: f64| f(a) - target;
    let mut prev = h(0.0);
    if prev.abs() <= 1e-13 {
        return Ok(0.0);
    }
    let mut bracket = None;
    let mut sign_changes = 0;
    for k in 1..=GRID {
        let a = k as f64 / GRID as f64;
        let cur = h(a);
        if cur.abs() <= 1e-15 {
            return Ok(a);
        }
        if (prev < 0.0) != (cur < 0.0) {
            sign_changes += 1;
            if bracket.is_none() {
                bracket = Some(((k - 1) as f64 / GRID as f64, a));
            }
        }
        prev = cur;
    }
    if sign_changes != 1 {
        return Err(BoundsError::RootBracket { sign_changes });
    }
    let (mut lo, mut hi) = bracket.unwrap();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = h(mid);
        if v.abs() <= 1e-13 {
            return Ok(mid);
        }
        if (v < 0.0) == (h(lo) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves the Prop-2 alpha-hat-1 equation for a given EFET.
pub fn solve_warmup_alpha1(beta: f64) -> Result<f64, BoundsError> {
    check_beta(beta)?;
    solve_unique_root(warmup_alpha_lhs, beta)
}

fn msvv_warmup_value(a: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    1.0 - (1.0 - a) / ((-a / (1.0 - a)).exp()).exp()
}

/// Upper bound on MSVV when all external traffic arrives first.
pub fn warmup_msvv_upper(beta: f64) -> Result<f64, BoundsError> {
    let a = solve_warmup_alpha1(beta)?;
    Ok(msvv_warmup_value(a))
}

/// Lower bound on AC with deterministic sign-ups:
/// hardness_upper - 2/c, floored at 0.
pub fn ac_lower_deterministic(beta: f64, c_min: CMin) -> Result<f64, BoundsError> {
    Ok((hardness_upper(beta)? - 2.0 * c_min.inv()).max(0.0))
}

/// Reward-gap function g(x1, x2) = 1 - 1/e + x1 + (1-x1) psi(x2/(1-x1)) - psi(x2)
/// on D = {x1, x2 >= 0, x1 + x2 <= 1}; the (1-x1) psi(.) term is 0 at x1 = 1.
pub fn g_fn(x1: f64, x2: f64) -> Result<f64, BoundsError> {
    if x1 < -1e-12 || x2 < -1e-12 || x1 + x2 > 1.0 + 1e-12 {
        return Err(BoundsError::EnvelopeDomain(x1, x2));
    }
    Ok(g_fn_unchecked(x1, x2))
}

#[inline]
fn g_fn_unchecked(x1: f64, x2: f64) -> f64 {
    let psi = |u: f64| 1.0 - (u - 1.0).exp();
    let mid = if x1 >= 1.0 { 0.0 } else { (1.0 - x1) * psi((x2 / (1.0 - x1)).min(1.0)) };
    ONE_MINUS_INV_E + x1 + mid - psi(x2.min(1.0))
}

/// The triangular evaluation grid {(a/m, b/m) : a + b <= m} with g values.
struct EnvelopeGrid {
    m: usize,
    q: Vec<(f64, f64)>,
    g: Vec<f64>,
}

impl EnvelopeGrid {
    fn new(m: usize) -> Self {
        let mut q = Vec::new();
        let mut g = Vec::new();
        for a in 0..=m {
            for b in 0..=(m - a) {
                let x1 = a as f64 / m as f64;
                let x2 = b as f64 / m as f64;
                q.push((x1, x2));
                g.push(g_fn_unchecked(x1, x2));
            }
        }
        EnvelopeGrid { m, q, g }
    }
}

/// Grid lower-hull value of g at one point, solved as a fresh LP through
/// `lp_solve` in dense inequality form: min sum lambda_k g_k subject to
/// sum lambda_k q_k = p and lambda in the simplex.
pub fn envelope_eval(x1: f64, x2: f64, m: usize) -> Result<f64, BoundsError> {
    if x1 < -1e-12 || x2 < -1e-12 || x1 + x2 > 1.0 + 1e-12 {
        return Err(BoundsError::EnvelopeDomain(x1, x2));
    }
    let grid = EnvelopeGrid::new(m);
    let k = grid.q.len();
    let mut rows = vec![vec![0.0; k]; 6];
    for (j, &(q1, q2)) in grid.q.iter().enumerate() {
        rows[0][j] = q1;
        rows[1][j] = -q1;
        rows[2][j] = q2;
        rows[3][j] = -q2;
        rows[4][j] = 1.0;
        rows[5][j] = -1.0;
    }
    let problem = LpProblem {
        objective: grid.g.iter().map(|&v| -v).collect(),
        rows,
        rhs: vec![x1, -x1, x2, -x2, 1.0, -1.0],
    };
    let sol = lp_solve(&problem)?;
    if sol.status != LpStatus::Optimal {
        return Err(BoundsError::EnvelopeStatus(sol.status));
    }
    Ok(-sol.value)
}

/// Warm envelope evaluator: one LP over the grid columns whose right-hand
/// side moves with the query point; re-solved by the engine's dual simplex.
pub struct EnvelopeScanner {
    grid: EnvelopeGrid,
    engine: SimplexEngine,
}

impl EnvelopeScanner {
    pub fn new(m: usize, p0: (f64, f64)) -> Result<Self, BoundsError> {
        let grid = EnvelopeGrid::new(m);
        let mut lp = ColumnLp::new(vec![p0.0, p0.1, 1.0], vec![Sense::Eq, Sense::Eq, Sense::Eq]);
        for (j, &(q1, q2)) in grid.q.iter().enumerate() {
            let mut entries = Vec::with_capacity(3);
            if q1 != 0.0 {
                entries.push((0u32, q1));
            }
            if q2 != 0.0 {
                entries.push((1u32, q2));
            }
            entries.push((2u32, 1.0));
            lp.push_col(-grid.g[j], entries);
        }
        let mut engine = SimplexEngine::build(&lp)?;
        let sol = engine.solve()?;
        if sol.status != LpStatus::Optimal {
            return Err(BoundsError::EnvelopeStatus(sol.status));
        }
        Ok(EnvelopeScanner { grid, engine })
    }

    pub fn grid_m(&self) -> usize {
        self.grid.m
    }

    pub fn eval(&mut self, x1: f64, x2: f64) -> Result<f64, BoundsError> {
        let v = self.engine.resolve_rhs(&[x1, x2, 1.0])?;
        Ok(-v)
    }
}

/// Result of the z* scan behind the general AC lower bound.
#[derive(Debug, Clone, Copy)]
pub struct GeneralBound {
    pub value: f64,
    pub z_star: Option<f64>,
    /// True when no z in [e^{-1/c}(1 - 1/e), 1] satisfied the constraint.
    pub scan_exhausted: bool,
}

/// Theorem-3 lower bound f(beta, c, sigma) = max(beta, z*), where z* is the
/// smallest z in [e^{-1/c}(1-1/e), 1] with
/// z >= e^{-1/c} * envelope(max(0, beta - sigma + z), z - max(0, beta - sigma + z)),
/// located by a forward scan with the query's step.
pub fn ac_lower_general(query: &BoundQuery) -> Result<GeneralBound, BoundsError> {
    query.check()?;
    let factor = query.c_min.decay();
    let z_lo = factor * ONE_MINUS_INV_E;
    let args = |z: f64| {
        let u = (query.beta - query.sigma + z).max(0.0);
        (u, z - u)
    };
    let mut scanner = EnvelopeScanner::new(query.envelope_grid, args(z_lo))?;
    let mut k = 0u64;
    loop {
        let mut z = z_lo + k as f64 * query.z_step;
        let last = z >= 1.0;
        if last {
            z = 1.0;
        }
        let (u, v) = args(z);
        let env = scanner.eval(u, v)?;
        if z >= factor * env - 1e-12 {
            return Ok(GeneralBound {
                value: query.beta.max(z),
                z_star: Some(z),
                scan_exhausted: false,
            });
        }
        if last {
            return Ok(GeneralBound { value: query.beta.max(z_lo), z_star: None, scan_exhausted: true });
        }
        k += 1;
    }
}

/// Constraint satisfaction over the whole scan grid, for monotonicity checks.
pub fn z_scan_profile(query: &BoundQuery) -> Result<Vec<(f64, bool)>, BoundsError> {
    query.check()?;
    let factor = query.c_min.decay();
    let z_lo = factor * ONE_MINUS_INV_E;
    let args = |z: f64| {
        let u = (query.beta - query.sigma + z).max(0.0);
        (u, z - u)
    };
    let mut scanner = EnvelopeScanner::new(query.envelope_grid, args(z_lo))?;
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let mut z = z_lo + k as f64 * query.z_step;
        let last = z >= 1.0;
        if last {
            z = 1.0;
        }
        let (u, v) = args(z);
        let env = scanner.eval(u, v)?;
        out.push((z, z >= factor * env - 1e-12));
        if last {
            return Ok(out);
        }
        k += 1;
    }
}

fn prop5_alpha_lhs(a: f64) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    warmup_alpha_lhs(a) + (1.0 - a) / ((-a / (1.0 - a)).exp()).exp()
}

/// Solves the Prop-5 alpha_1 equation (warm-up equation plus the additive
/// tail term) for beta in (1/e, 1].
pub fn solve_general_alpha1(beta: f64) -> Result<f64, BoundsError> {
    check_beta(beta)?;
    solve_unique_root(prop5_alpha_lhs, beta)
}

/// General upper bound on MSVV: 1 - 1/e for beta <= 1/e, else
/// min(alpha_2, alpha_3) with alpha_3 minimized over an alpha_4 grid on [0, beta].
pub fn msvv_general_upper(beta: f64, alpha4_grid: usize) -> Result<f64, BoundsError> {
    check_beta(beta)?;
    if beta <= INV_E {
        return Ok(ONE_MINUS_INV_E);
    }
    let a1 = solve_general_alpha1(beta)?;
    let alpha2 = msvv_warmup_value(a1);
    let points = alpha4_grid.max(2);
    let mut alpha3 = f64::INFINITY;
    for k in 0..points {
        let a4 = beta * k as f64 / (points - 1) as f64;
        alpha3 = alpha3.min(i4_value(beta, a4));
    }
    Ok(alpha2.min(alpha3))
}

/// The alpha_3 expression at one alpha_4: 1 - ((1-beta)/(1-a4)) *
/// (a5 + (1-a6) ln((1-a5)/(1-a6))).
fn i4_value(beta: f64, a4: f64) -> f64 {
    let rem = 1.0 - a4;
    if rem <= 0.0 {
        return 1.0;
    }
    let a5 = rem.min(if beta < 1.0 { a4 * (beta - a4) / (1.0 - beta) } else { f64::INFINITY });
    let a6 = rem.min(1.0 - (1.0 - a5) / std::f64::consts::E);
    let tail = 1.0 - a6;
    let log_term = if tail <= 0.0 {
        0.0 // limit of (1 - a6) ln((1-a5)/(1-a6)) as a6 -> 1
    } else {
        tail * ((1.0 - a5) / tail).ln()
    };
    1.0 - (1.0 - beta) / rem * (a5 + log_term)
}

/// Ranking-setting lower bound: max(beta, e^{-1/c}(1 - 1/e)).
pub fn ranking_lower(beta: f64, c_min: CMin) -> Result<f64, BoundsError> {
    check_beta(beta)?;
    Ok(beta.max(c_min.decay() * ONE_MINUS_INV_E))
}

/// Cascade-setting lower bound; delegates to the general AC bound.
pub fn cascade_lower(query: &BoundQuery) -> Result<GeneralBound, BoundsError> {
    ac_lower_general(query)
}

pub const BOUND_NAMES: [&str; 9] = [
    "hardness_upper",
    "warmup_upper",
    "warmup_ac_lower",
    "warmup_msvv_upper",
    "ac_lower_deterministic",
    "ac_lower_general",
    "msvv_general_upper",
    "ranking_lower",
    "cascade_lower",
];

/// One sampled bound curve: (beta, value) pairs under fixed parameters.
#[derive(Debug, Clone)]
pub struct BoundCurve {
    pub name: String,
    pub c_min: CMin,
    pub sigma: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Samples the named bounds over a beta grid. The envelope-backed curves
/// parallelize over grid points.
pub fn emit_bound_curves(
    beta_grid: &[f64],
    c_min: CMin,
    sigma: f64,
    grid_m: usize,
    z_step: f64,
    names: &[String],
) -> Result<Vec<BoundCurve>, BoundsError> {
    let mut curves = Vec::new();
    for name in names {
        let samples: Result<Vec<(f64, f64)>, BoundsError> = match name.as_str() {
            "hardness_upper" => beta_grid.iter().map(|&b| Ok((b, hardness_upper(b)?))).collect(),
            "warmup_upper" => beta_grid.iter().map(|&b| Ok((b, warmup_upper(b)?))).collect(),
            "warmup_ac_lower" => {
                beta_grid.iter().map(|&b| Ok((b, warmup_ac_lower(b, c_min)?))).collect()
            }
            "warmup_msvv_upper" => {
                beta_grid.iter().map(|&b| Ok((b, warmup_msvv_upper(b)?))).collect()
            }
            "ac_lower_deterministic" => beta_grid
                .iter()
                .map(|&b| Ok((b, ac_lower_deterministic(b, c_min)?)))
                .collect(),
            "msvv_general_upper" => beta_grid
                .iter()
                .map(|&b| Ok((b, msvv_general_upper(b, 2001)?)))
                .collect(),
            "ranking_lower" => beta_grid.iter().map(|&b| Ok((b, ranking_lower(b, c_min)?))).collect(),
            "ac_lower_general" | "cascade_lower" => beta_grid
                .par_iter()
                .map(|&b| {
                    let q = BoundQuery { beta: b, c_min, sigma, envelope_grid: grid_m, z_step };
                    Ok((b, ac_lower_general(&q)?.value))
                })
                .collect(),
            other => return Err(BoundsError::UnknownBound(other.to_string())),
        };
        curves.push(BoundCurve { name: name.clone(), c_min, sigma, samples: samples? });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardness_reference_values() {
        assert!((hardness_upper(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((hardness_upper(INV_E).unwrap() - ONE_MINUS_INV_E).abs() < 1e-15);
        // 1 + 0.5 ln 0.5, frozen from high-precision evaluation.
        assert!((hardness_upper(0.5).unwrap() - 0.6534264097200273).abs() < 1e-12);
        assert_eq!(hardness_upper(0.0).unwrap(), ONE_MINUS_INV_E);
        assert!(hardness_upper(-0.1).is_err());
    }

    #[test]
    fn warmup_bounds_reference_values() {
        assert!((warmup_upper(0.0).unwrap() - ONE_MINUS_INV_E).abs() < 1e-15);
        assert!((warmup_upper(1.0).unwrap() - 1.0).abs() < 1e-15);
        // 0.5 + 0.5(1 - 1/e) - 1/100, frozen.
        assert!(
            (warmup_ac_lower(0.5, CMin::Finite(100)).unwrap() - 0.8060602794142788).abs() < 1e-12
        );
        assert_eq!(warmup_ac_lower(0.5, CMin::Asymptotic).unwrap(), warmup_upper(0.5).unwrap());
    }

    #[test]
    fn warmup_msvv_endpoints_and_interior() {
        assert!((warmup_msvv_upper(0.0).unwrap() - ONE_MINUS_INV_E).abs() < 1e-12);
        assert!((warmup_msvv_upper(1.0).unwrap() - 1.0).abs() < 1e-12);
        let v = warmup_msvv_upper(0.5).unwrap();
        assert!(v < warmup_upper(0.5).unwrap());
        // Residual of the root equation at the solved alpha-hat-1.
        let a = solve_warmup_alpha1(0.5).unwrap();
        assert!((warmup_alpha_lhs(a) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn ac_lower_deterministic_values() {
        assert!(
            (ac_lower_deterministic(0.5, CMin::Asymptotic).unwrap() - 0.6534264097200273).abs()
                < 1e-12
        );
        assert_eq!(ac_lower_deterministic(0.2, CMin::Finite(2)).unwrap(), 0.0);
        assert!((ac_lower_deterministic(1.0, CMin::Finite(1000)).unwrap() - 0.998).abs() < 1e-12);
    }

    #[test]
    fn g_fn_corners() {
        assert!((g_fn(0.0, 0.0).unwrap() - ONE_MINUS_INV_E).abs() < 1e-15);
        assert!((g_fn(1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(g_fn(0.7, 0.7).is_err());
    }

    #[test]
    fn envelope_is_below_g_and_matches_scanner() {
        let m = 60;
        let mut scanner = EnvelopeScanner::new(m, (0.2, 0.3)).unwrap();
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..25 {
            let x1 = next();
            let x2 = next() * (1.0 - x1);
            let env = envelope_eval(x1, x2, m).unwrap();
            assert!(env <= g_fn(x1, x2).unwrap() + 1e-9, "env {env} above g at ({x1},{x2})");
            let warm = scanner.eval(x1, x2).unwrap();
            assert!((env - warm).abs() < 1e-9, "cold {env} vs warm {warm}");
        }
    }

    #[test]
    fn envelope_exact_at_grid_vertices_of_convex_region() {
        // At grid corners the hull value never exceeds g.
        let m = 40;
        for (a, b) in [(0usize, 0usize), (m, 0), (0, m), (m / 2, m / 4)] {
            let x1 = a as f64 / m as f64;
            let x2 = b as f64 / m as f64;
            let env = envelope_eval(x1, x2, m).unwrap();
            assert!(env <= g_fn(x1, x2).unwrap() + 1e-9);
        }
    }

    #[test]
    fn general_bound_sigma_one_at_beta_zero_is_one_minus_inv_e() {
        let q = BoundQuery { envelope_grid: 120, ..BoundQuery::new(0.0, CMin::Asymptotic, 1.0) };
        let b = ac_lower_general(&q).unwrap();
        // g(0, x2) = 1 - 1/e on the whole edge, so z_lo already satisfies the
        // constraint and z* = 1 - 1/e exactly.
        assert!(b.z_star.is_some());
        assert!((b.value - ONE_MINUS_INV_E).abs() <= 2.0 / 120.0 + 1e-4 + 1e-9);
        assert!(b.value >= ONE_MINUS_INV_E - 1e-9);
    }

    #[test]
    fn general_bound_dominates_beta_and_infinite_sigma_matches_ranking() {
        for beta in [0.0, 0.3, 0.7, 0.95] {
            let q = BoundQuery {
                envelope_grid: 80,
                ..BoundQuery::new(beta, CMin::Finite(5), f64::INFINITY)
            };
            let b = ac_lower_general(&q).unwrap();
            assert!(b.value >= beta);
            let rank = ranking_lower(beta, CMin::Finite(5)).unwrap();
            assert!((b.value - rank).abs() < 1e-9, "beta {beta}: {} vs {rank}", b.value);
        }
    }

    #[test]
    fn msvv_general_upper_branches() {
        assert_eq!(msvv_general_upper(0.2, 101).unwrap(), ONE_MINUS_INV_E);
        assert!((msvv_general_upper(1.0, 101).unwrap() - 1.0).abs() < 1e-9);
        // Strictly below the AC deterministic lower bound at beta = 0.5.
        let msvv = msvv_general_upper(0.5, 2001).unwrap();
        let ac = ac_lower_deterministic(0.5, CMin::Asymptotic).unwrap();
        assert!(msvv < ac, "msvv {msvv} !< ac {ac}");
    }

    #[test]
    fn ranking_lower_values() {
        assert!((ranking_lower(0.9, CMin::Asymptotic).unwrap() - 0.9).abs() < 1e-15);
        // e^{-1} (1 - 1/e), frozen from high-precision evaluation.
        assert!((ranking_lower(0.0, CMin::Finite(1)).unwrap() - 0.23254415793482963).abs() < 1e-12);
    }

    #[test]
    fn curve_sampler_produces_all_requested_rows() {
        let grid: Vec<f64> = (0..=4).map(|k| k as f64 / 4.0).collect();
        let names: Vec<String> =
            ["hardness_upper", "warmup_upper", "ranking_lower"].iter().map(|s| s.to_string()).collect();
        let curves =
            emit_bound_curves(&grid, CMin::Asymptotic, 1.0, 40, 1e-3, &names).unwrap();
        assert_eq!(curves.len(), 3);
        for c in &curves {
            assert_eq!(c.samples.len(), 5);
            for w in c.samples.windows(2) {
                assert!(w[0].0 < w[1].0);
            }
        }
    }
}
