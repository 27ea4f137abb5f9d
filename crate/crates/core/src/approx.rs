//! Constructive m-term approximation.
//!
//! The harmonic-budget schedules keep every dyadic ring below a base level
//! `l` in full and then spend a geometrically varying budget `m_s` on the
//! rings `l ≤ s ≤ ⌊γl⌋`. Inside a ring the `m_s` kept harmonics are chosen
//! greedily by coefficient modulus and keep their Fourier coefficients.
//!
//! Also here: the pure largest-coefficient baseline, the cubic Fourier sum
//! (orthogonal baseline), and an exhaustive oracle over coefficient
//! restrictions for small instances.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{level_of, mu_size, sharp_block, top_level, BlockMode};
use crate::error::{Error, Result};
use crate::norms::{SpaceParams, TargetNorm};
use crate::spectrum::{default_points, CoeffGrid, FreqIndex, Spectrum, TrigPoly};

/// Largest support the exhaustive oracle accepts.
pub const ORACLE_MAX_SUPPORT: usize = 16;

/// Relative slack applied before flooring budget formulas, so values that are
/// mathematically integral do not lose one to rounding.
const FLOOR_SLACK: f64 = 1e-12;

fn floor_tol(x: f64) -> f64 {
    (x * (1.0 + FLOOR_SLACK)).floor()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    /// Small smoothness, `d(1/p − 1/q) < r < d/p`, `γ = q/2`.
    CaseA,
    /// `r > d/p`.
    CaseB,
    /// `d = 1` schedule for the `B_{∞,1}` target.
    Univariate,
}

/// Every approximation scheme the crate can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CaseA,
    CaseB,
    Univariate,
    Greedy,
    Orthogonal,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::CaseA => "case-a",
            Scheme::CaseB => "case-b",
            Scheme::Univariate => "univariate",
            Scheme::Greedy => "greedy",
            Scheme::Orthogonal => "orthogonal",
        }
    }

    pub fn plan_kind(self) -> Option<PlanKind> {
        match self {
            Scheme::CaseA => Some(PlanKind::CaseA),
            Scheme::CaseB => Some(PlanKind::CaseB),
            Scheme::Univariate => Some(PlanKind::Univariate),
            Scheme::Greedy | Scheme::Orthogonal => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "case-a" | "casea" | "a" => Ok(Scheme::CaseA),
            "case-b" | "caseb" | "b" => Ok(Scheme::CaseB),
            "univariate" => Ok(Scheme::Univariate),
            "greedy" => Ok(Scheme::Greedy),
            "orthogonal" | "cubic" => Ok(Scheme::Orthogonal),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Class and target exponents a schedule is built for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    pub d: usize,
    pub p: f64,
    #[serde(with = "crate::serde_inf")]
    pub q: f64,
    pub r: f64,
}

impl PlanParams {
    pub fn new(d: usize, p: f64, q: f64, r: f64) -> Self {
        PlanParams { d, p, q, r }
    }

    /// Univariate schedules only depend on `r`.
    pub fn univariate(r: f64) -> Self {
        PlanParams {
            d: 1,
            p: 2.0,
            q: f64::INFINITY,
            r,
        }
    }
}

/// A harmonic-budget schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub kind: PlanKind,
    /// Hard term budget.
    pub m: u64,
    pub d: usize,
    /// Base level: rings `s < l` are kept in full.
    pub l: usize,
    pub gamma: f64,
    /// `⌊γl⌋`, the last ring that receives a budget.
    pub cutoff: usize,
    /// `Σ_{1≤s<l} |μ(s)|`; the constant term is counted separately.
    pub kept_full: u64,
    /// Budgets straight from the schedule formula.
    pub raw_budgets: BTreeMap<usize, u64>,
    /// Budgets after rescaling to the hard budget.
    pub budgets: BTreeMap<usize, u64>,
    /// Common factor applied to the raw budgets.
    pub scale: f64,
}

impl BudgetPlan {
    /// `kept_full + 1 + Σ raw m_s`.
    pub fn pre_shrink_total(&self) -> u64 {
        self.kept_full + 1 + self.raw_budgets.values().sum::<u64>()
    }

    /// `kept_full + 1 + Σ m_s`, an upper bound on the assembled term count.
    pub fn total(&self) -> u64 {
        self.kept_full + 1 + self.budgets.values().sum::<u64>()
    }

    pub fn budget(&self, s: usize) -> u64 {
        self.budgets.get(&s).copied().unwrap_or(0)
    }
}

fn validate_regime(kind: PlanKind, m: u64, pp: &PlanParams) -> Result<()> {
    let PlanParams { d, p, q, r } = *pp;
    let df = d as f64;
    match kind {
        PlanKind::CaseA | PlanKind::CaseB => {
            if d == 0 {
                return Err(Error::InvalidArgument("dimension must be at least 1".into()));
            }
            if !(p > 1.0 && p <= 2.0) {
                return Err(Error::Regime(format!("needs 1 < p <= 2, got p = {p}")));
            }
            if !(q > 2.0 && q.is_finite()) {
                return Err(Error::Regime(format!("needs 2 < q < inf, got q = {q}")));
            }
            let critical = df / p;
            if (r - critical).abs() <= 1e-12 * critical.max(1.0) {
                return Err(Error::OpenCase(format!(
                    "r = d/p = {critical}: the order at the critical smoothness is unknown"
                )));
            }
            if kind == PlanKind::CaseA {
                let lower = df * (1.0 / p - 1.0 / q);
                if !(r > lower) {
                    return Err(Error::Regime(format!(
                        "case a needs r > d(1/p - 1/q) = {lower}, got r = {r}"
                    )));
                }
                if !(r < critical) {
                    return Err(Error::Regime(format!("case a needs r < d/p = {critical}, got r = {r}")));
                }
            } else if !(r > critical) {
                return Err(Error::Regime(format!("case b needs r > d/p = {critical}, got r = {r}")));
            }
            let min_m = 1u64 << d;
            if m < min_m {
                return Err(Error::InvalidArgument(format!(
                    "budget m = {m} is below 2^d = {min_m}: no base level exists"
                )));
            }
        }
        PlanKind::Univariate => {
            if d != 1 {
                return Err(Error::Regime(format!("univariate schedule needs d = 1, got d = {d}")));
            }
            if !(r > 0.5) {
                return Err(Error::Regime(format!("univariate schedule needs r > 1/2, got r = {r}")));
            }
            if m < 2 {
                return Err(Error::InvalidArgument(format!(
                    "univariate schedule needs m >= 2, got m = {m}"
                )));
            }
        }
    }
    Ok(())
}

fn gamma_of(kind: PlanKind, pp: &PlanParams) -> f64 {
    let PlanParams { d, p, q, r } = *pp;
    let df = d as f64;
    match kind {
        PlanKind::CaseA => q / 2.0,
        PlanKind::CaseB => (r / df - 1.0 / p + 0.5) / (r / df - 1.0 / p + 1.0 / q),
        PlanKind::Univariate => r / (r - 0.5),
    }
}

/// Base-2 logarithm of the raw budget formula at ring `s`.
fn budget_log2(kind: PlanKind, pp: &PlanParams, l: usize, s: usize) -> f64 {
    let PlanParams { d, p, q, r } = *pp;
    let (df, lf, sf) = (d as f64, l as f64, s as f64);
    match kind {
        // 2^{dl} 2^{s(d/p − r)} 2^{−(ql/2)(d/p − r)}
        PlanKind::CaseA => df * lf + (sf - q * lf / 2.0) * (df / p - r),
        // 2^{dl(r/d − 1/p + 1)} 2^{−s(r − d/p)}
        PlanKind::CaseB => df * lf + (lf - sf) * (r - df / p),
        // 2^{l(r + 1/2)} 2^{−s(r − 1/2)}
        PlanKind::Univariate => (lf - sf) * r + (lf + sf) / 2.0,
    }
}

/// Schedule for a given base level, before any rescaling.
fn raw_plan(kind: PlanKind, m: u64, pp: &PlanParams, l: usize) -> BudgetPlan {
    let gamma = gamma_of(kind, pp);
    let cutoff = floor_tol(gamma * l as f64) as usize;
    let raw_budgets: BTreeMap<usize, u64> = (l..=cutoff)
        .map(|s| (s, floor_tol(budget_log2(kind, pp, l, s).exp2()) as u64 + 1))
        .collect();
    let kept_full = (1..l).map(|s| mu_size(s, pp.d)).sum();
    BudgetPlan {
        kind,
        m,
        d: pp.d,
        l,
        gamma,
        cutoff,
        kept_full,
        budgets: raw_budgets.clone(),
        raw_budgets,
        scale: 1.0,
    }
}

/// Shrinks all budgets by `ρ = min(1, room / Σ raw m_s)` (re-floored), where
/// `room = m − kept_full − 1`.
fn shrink(mut plan: BudgetPlan) -> BudgetPlan {
    let raw_sum: u64 = plan.raw_budgets.values().sum();
    let room = plan.m.saturating_sub(plan.kept_full + 1);
    if raw_sum == 0 {
        return plan;
    }
    let rho = (room as f64 / raw_sum as f64).min(1.0);
    if rho != 1.0 {
        plan.budgets = plan
            .raw_budgets
            .iter()
            .map(|(&s, &b)| (s, (rho * b as f64).floor() as u64))
            .collect();
    }
    plan.scale = rho;
    plan
}

fn base_level(m: u64, d: usize) -> usize {
    // l = ⌊log2(m)/d⌋, computed in integers.
    let log2m = (u64::BITS - 1 - m.leading_zeros()) as usize;
    log2m / d
}

fn spec_plan(kind: PlanKind, m: u64, pp: &PlanParams) -> Result<BudgetPlan> {
    validate_regime(kind, m, pp)?;
    let l = base_level(m, pp.d);
    Ok(shrink(raw_plan(kind, m, pp, l)))
}

/// Small-smoothness schedule: `l = ⌊log2(m)/d⌋`, `γ = q/2`,
/// `m_s = ⌊2^{dl} 2^{s(d/p − r)} 2^{−(ql/2)(d/p − r)}⌋ + 1`, then shrunk so
/// the total fits in `m`.
pub fn budget_plan_case_a(m: u64, d: usize, p: f64, q: f64, r: f64) -> Result<BudgetPlan> {
    spec_plan(PlanKind::CaseA, m, &PlanParams::new(d, p, q, r))
}

/// Schedule for `r > d/p`:
/// `γ = (r/d − 1/p + 1/2)/(r/d − 1/p + 1/q)`,
/// `m_s = ⌊2^{dl(r/d − 1/p + 1)} 2^{−s(r − d/p)}⌋ + 1`.
pub fn budget_plan_case_b(m: u64, d: usize, p: f64, q: f64, r: f64) -> Result<BudgetPlan> {
    spec_plan(PlanKind::CaseB, m, &PlanParams::new(d, p, q, r))
}

/// Univariate schedule: `γ = r/(r − 1/2)`,
/// `m_s = ⌊2^{l(r + 1/2)} 2^{−s(r − 1/2)}⌋ + 1` on `l ≤ s ≤ ⌊γl⌋`.
pub fn budget_plan_univariate(m: u64, r: f64) -> Result<BudgetPlan> {
    spec_plan(PlanKind::Univariate, m, &PlanParams::univariate(r))
}

pub fn budget_plan(kind: PlanKind, m: u64, pp: &PlanParams) -> Result<BudgetPlan> {
    spec_plan(kind, m, pp)
}

/// Ranking rule for greedy selection inside a block.
#[derive(Clone, Copy)]
pub enum Measure<'a> {
    /// By coefficient modulus, optimal for the `L2` residual.
    L2,
    /// By `|c_k| · w(k)`.
    Weighted(&'a dyn Fn(&FreqIndex) -> f64),
}

impl fmt::Debug for Measure<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::L2 => f.write_str("L2"),
            Measure::Weighted(_) => f.write_str("Weighted"),
        }
    }
}

fn top_terms(
    terms: impl Iterator<Item = (FreqIndex, Complex64)>,
    count: u64,
    measure: Measure<'_>,
) -> Vec<(FreqIndex, Complex64)> {
    let mut scored: Vec<(f64, FreqIndex, Complex64)> = terms
        .filter(|(_, c)| *c != Complex64::default())
        .map(|(k, c)| {
            let score = match measure {
                Measure::L2 => c.norm(),
                Measure::Weighted(w) => c.norm() * w(&k),
            };
            (score, k, c)
        })
        .collect();
    scored.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        other => other,
    });
    scored
        .into_iter()
        .take(count.min(usize::MAX as u64) as usize)
        .map(|(_, k, c)| (k, c))
        .collect()
}

/// Keeps the `m_s` largest coefficients of a block (ties broken by
/// lexicographic frequency order), with their original values.
pub fn greedy_block_reduce(block: &CoeffGrid, m_s: u64, measure: Measure<'_>) -> TrigPoly {
    TrigPoly::from_terms(block.dim(), top_terms(block.nonzero(), m_s, measure))
}

/// An m-term approximant together with the schedule that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Approximant {
    pub poly: TrigPoly,
    pub plan: Option<BudgetPlan>,
    pub scheme: Scheme,
    pub m: u64,
}

impl Approximant {
    pub fn term_count(&self) -> usize {
        self.poly.len()
    }

    /// JSON-ready description `{scheme, m, l, gamma, budgets}`.
    pub fn sidecar(&self) -> ApproximantSidecar {
        ApproximantSidecar {
            scheme: self.scheme,
            m: self.m,
            terms: self.poly.len(),
            l: self.plan.as_ref().map(|p| p.l),
            gamma: self.plan.as_ref().map(|p| p.gamma),
            budgets: self.plan.as_ref().map(|p| p.budgets.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximantSidecar {
    pub scheme: Scheme,
    pub m: u64,
    pub terms: usize,
    pub l: Option<usize>,
    pub gamma: Option<f64>,
    pub budgets: Option<BTreeMap<usize, u64>>,
}

/// `Σ_{s<l} f_(s) + Σ_{s=l}^{⌊γl⌋} greedy(f_(s), m_s)`.
pub fn assemble(f: &CoeffGrid, plan: &BudgetPlan) -> Result<Approximant> {
    if f.dim() != plan.d {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: plan.d,
        });
    }
    let mut poly = TrigPoly::zero(f.dim());
    for s in 0..plan.l {
        for (k, c) in sharp_block(f, s).nonzero() {
            poly.insert(k, c);
        }
    }
    for s in plan.l..=plan.cutoff {
        let m_s = plan.budget(s);
        if m_s == 0 {
            continue;
        }
        for (k, c) in greedy_block_reduce(&sharp_block(f, s), m_s, Measure::L2).iter() {
            poly.insert(k.clone(), *c);
        }
    }
    debug_assert!(poly.len() as u64 <= plan.total());
    let scheme = match plan.kind {
        PlanKind::CaseA => Scheme::CaseA,
        PlanKind::CaseB => Scheme::CaseB,
        PlanKind::Univariate => Scheme::Univariate,
    };
    Ok(Approximant {
        poly,
        plan: Some(plan.clone()),
        scheme,
        m: plan.m,
    })
}

/// Achieved error `‖f − a‖` in the target space (an upper bound on `e_m(f)`).
pub fn approx_error(f: &CoeffGrid, a: &Approximant, sp: &SpaceParams) -> Result<f64> {
    if f.dim() != a.poly.dim() {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: a.poly.dim(),
        });
    }
    sp.norm(&f.sub_poly(&a.poly))
}

/// Top-`m` coefficients of `f` by modulus, ties by frequency order.
pub fn greedy_baseline(f: &CoeffGrid, m: u64) -> Approximant {
    Approximant {
        poly: TrigPoly::from_terms(f.dim(), top_terms(f.nonzero(), m, Measure::L2)),
        plan: None,
        scheme: Scheme::Greedy,
        m,
    }
}

/// Cubic Fourier sum `S_n(f) = Σ_{s<n} f_(s)` with the largest `n` such that
/// `2^{dn} ≤ m`.
pub fn orthogonal_cubic(f: &CoeffGrid, m: u64) -> Result<Approximant> {
    if m == 0 {
        return Err(Error::InvalidArgument("orthogonal_cubic needs m >= 1".into()));
    }
    let d = f.dim();
    let mut n = 0usize;
    while (d * (n + 1)) < 63 && (1u64 << (d * (n + 1))) <= m {
        n += 1;
    }
    let poly = TrigPoly::from_terms(d, f.nonzero().filter(|(k, _)| level_of(k.components()) < n));
    Ok(Approximant {
        poly,
        plan: None,
        scheme: Scheme::Orthogonal,
        m,
    })
}

/// Exhaustive minimum of the target norm over coefficient restrictions of
/// `f` with at most `m` harmonics. Exact for `e_m^⊥(f)`; an upper bound for
/// `e_m(f)`. Support size is limited to [`ORACLE_MAX_SUPPORT`].
pub fn oracle_best_mterm(f: &CoeffGrid, m: u64, sp: &SpaceParams) -> Result<(TrigPoly, f64)> {
    let mut profile = oracle_profile(f, sp)?;
    let idx = (m as usize).min(profile.len() - 1);
    Ok(profile.swap_remove(idx))
}

/// `oracle_best_mterm` for every `m = 0 ..= |support|` in one enumeration.
pub fn oracle_profile(f: &CoeffGrid, sp: &SpaceParams) -> Result<Vec<(TrigPoly, f64)>> {
    let support: Vec<(FreqIndex, Complex64)> = f.nonzero().collect();
    let n = support.len();
    if n > ORACLE_MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "oracle support {n} exceeds {ORACLE_MAX_SUPPORT}"
        )));
    }
    let d = f.dim();
    let kmax = support.iter().map(|(k, _)| k.sup_norm()).max().unwrap_or(0);
    let m_pts = default_points(kmax);
    let total = m_pts.pow(d as u32);
    let q = sp.q;

    // One weight profile per measured piece: a single unit piece for L_q,
    // one per dyadic block for B_{q,1}.
    let weights: Vec<Vec<f64>> = match sp.mode {
        TargetNorm::Lq => vec![vec![1.0; n]],
        TargetNorm::Bq1 => {
            let top = top_level(kmax, sp.block_mode);
            (0..=top)
                .map(|s| {
                    support
                        .iter()
                        .map(|(k, _)| oracle_block_weight(k.components(), s, sp.block_mode))
                        .collect::<Vec<f64>>()
                })
                .filter(|w| w.iter().any(|&x| x != 0.0))
                .collect()
        }
    };

    // Direct evaluation of each term on the grid: c_k e^{i(k, 2πj/M)}.
    let step = std::f64::consts::TAU / m_pts as f64;
    let term_samples: Vec<Vec<Complex64>> = support
        .iter()
        .map(|(k, c)| {
            (0..total)
                .map(|mut idx| {
                    let mut phase = 0.0;
                    for &kj in k.components().iter().rev() {
                        let j = idx % m_pts;
                        idx /= m_pts;
                        phase += kj as f64 * j as f64 * step;
                    }
                    c * Complex64::from_polar(1.0, phase)
                })
                .collect()
        })
        .collect();

    // Residual pieces start as the full function (nothing kept).
    let mut pieces: Vec<Vec<Complex64>> = weights
        .iter()
        .map(|w| {
            let mut acc = vec![Complex64::default(); total];
            for (t, samples) in term_samples.iter().enumerate() {
                if w[t] != 0.0 {
                    for (a, v) in acc.iter_mut().zip(samples) {
                        *a += v * w[t];
                    }
                }
            }
            acc
        })
        .collect();

    let measure = |pieces: &[Vec<Complex64>]| -> f64 {
        pieces
            .iter()
            .map(|v| {
                if q.is_infinite() {
                    return v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                }
                let s: f64 = if q == 2.0 {
                    v.iter().map(|z| z.norm_sqr()).sum()
                } else if q == 4.0 {
                    v.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum()
                } else {
                    v.iter().map(|z| z.norm().powf(q)).sum()
                };
                (s / total as f64).powf(1.0 / q)
            })
            .sum()
    };

    // best[size] = (error, mask) over subsets of exactly that size.
    let mut best: Vec<(f64, u32)> = vec![(f64::INFINITY, 0); n + 1];
    best[0] = (measure(&pieces), 0);
    let mut mask: u32 = 0;
    for i in 1u32..(1u32 << n) {
        let bit = i.trailing_zeros() as usize;
        mask ^= 1 << bit;
        let sign = if mask & (1 << bit) != 0 { -1.0 } else { 1.0 };
        for (piece, w) in pieces.iter_mut().zip(&weights) {
            let wt = w[bit];
            if wt != 0.0 {
                for (a, v) in piece.iter_mut().zip(&term_samples[bit]) {
                    *a += v * (sign * wt);
                }
            }
        }
        let size = mask.count_ones() as usize;
        let err = measure(&pieces);
        if err < best[size].0 {
            best[size] = (err, mask);
        }
    }

    // At most m harmonics: running minimum over sizes.
    let mut out = Vec::with_capacity(n + 1);
    let mut running = (f64::INFINITY, 0u32);
    for &(err, mask) in &best {
        if err < running.0 {
            running = (err, mask);
        }
        let poly = TrigPoly::from_terms(
            d,
            (0..n).filter(|t| running.1 & (1 << t) != 0).map(|t| support[t].clone()),
        );
        out.push((poly, running.0));
    }
    Ok(out)
}

/// Block multiplier written out from the closed-form kernel profile.
fn oracle_block_weight(k: &[i64], s: usize, mode: BlockMode) -> f64 {
    match mode {
        BlockMode::Sharp => {
            let m = k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            let in_ring = if s == 0 {
                m == 0
            } else {
                (1u64 << (s - 1)) <= m && m < (1u64 << s)
            };
            if in_ring {
                1.0
            } else {
                0.0
            }
        }
        BlockMode::Vp => {
            let profile = |l: f64| -> f64 {
                k.iter()
                    .map(|&kj| {
                        let a = kj.unsigned_abs() as f64;
                        ((2.0 * l - a) / l).clamp(0.0, 1.0)
                    })
                    .product()
            };
            if s == 0 {
                profile(1.0)
            } else {
                profile((1u64 << s) as f64) - profile((1u64 << (s - 1)) as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::SpaceParams;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn case_a_example_budgets() {
        let plan = budget_plan_case_a(64, 1, 2.0, 4.0, 0.4).unwrap();
        assert_eq!(plan.l, 6);
        assert_eq!(plan.gamma, 2.0);
        assert_eq!(plan.cutoff, 12);
        // Independent recomputation of ⌊2^6 · 2^{0.1 s} · 2^{-1.2}⌋ + 1.
        for s in 6..=12usize {
            let expect = (64.0 * 2f64.powf(0.1 * s as f64) * 2f64.powf(-1.2)).floor() as u64 + 1;
            assert_eq!(plan.raw_budgets[&s], expect, "s={s}");
        }
        assert_eq!(plan.raw_budgets[&6], 43);
        assert!(plan.total() <= 64);
        assert!(plan.raw_budgets.values().sum::<u64>() + 64 <= 8 * 64);
        assert!(budget_plan_case_a(1, 1, 2.0, 4.0, 0.4).is_err());
    }

    #[test]
    fn case_b_example_budgets() {
        let plan = budget_plan_case_b(64, 1, 2.0, 4.0, 2.0).unwrap();
        assert_eq!(plan.l, 6);
        assert!((plan.gamma - 2.0 / 1.75).abs() < 1e-15);
        assert_eq!(plan.raw_budgets[&6], 65);
        assert_eq!(plan.cutoff, 6);
        assert!(plan.total() <= 64);
        let p2 = budget_plan_case_b(1 << 12, 1, 2.0, 4.0, 2.0).unwrap();
        let raw: Vec<u64> = p2.raw_budgets.values().copied().collect();
        assert!(raw.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn univariate_example_budgets() {
        let plan = budget_plan_univariate(64, 1.5).unwrap();
        assert_eq!(plan.l, 6);
        assert_eq!(plan.gamma, 1.5);
        assert_eq!(plan.cutoff, 9);
        let raw: Vec<(usize, u64)> = plan.raw_budgets.iter().map(|(&s, &b)| (s, b)).collect();
        assert_eq!(raw, vec![(6, 65), (7, 33), (8, 17), (9, 9)]);
        assert_eq!(plan.cutoff - plan.l + 1, 4);
        assert!(plan.total() <= 64);
        let big = budget_plan_univariate(64, 200.0).unwrap();
        assert!((big.gamma - 1.0).abs() < 0.01);
        assert!(matches!(budget_plan_univariate(64, 0.5), Err(Error::Regime(_))));
    }

    #[test]
    fn regime_diagnostics() {
        assert!(matches!(
            budget_plan_case_a(64, 1, 2.0, 4.0, 0.5),
            Err(Error::OpenCase(_))
        ));
        assert!(matches!(
            budget_plan_case_b(64, 1, 2.0, 4.0, 0.5),
            Err(Error::OpenCase(_))
        ));
        assert!(matches!(
            budget_plan_case_a(64, 1, 2.0, 4.0, 0.2),
            Err(Error::Regime(_))
        ));
        assert!(matches!(
            budget_plan_case_a(64, 1, 3.0, 4.0, 0.2),
            Err(Error::Regime(_))
        ));
        assert!(matches!(
            budget_plan_case_b(64, 1, 2.0, 2.0, 2.0),
            Err(Error::Regime(_))
        ));
        assert!(matches!(
            budget_plan_case_b(64, 1, 2.0, 4.0, 0.4),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn shrunk_plans_fit_the_budget() {
        for m in [16u64, 32, 64, 100, 513, 4096] {
            for r in [0.75, 1.0, 1.5, 2.0] {
                let plan = budget_plan_univariate(m, r).unwrap();
                assert!(plan.total() <= m, "m={m} r={r}");
                assert!(plan.scale <= 1.0);
            }
            let plan = budget_plan_case_b(m, 1, 2.0, 4.0, 2.0).unwrap();
            assert!(plan.total() <= m);
        }
        // At m = 2^l the full rings already use 2^l - 1 terms.
        let plan = budget_plan_univariate(64, 1.5).unwrap();
        assert_eq!(plan.kept_full + 1, 63);
        assert!(plan.budgets.values().all(|&b| b == 0));
        let plan = budget_plan_univariate(100, 1.5).unwrap();
        assert!(plan.budgets[&6] > 0);
    }

    #[test]
    fn greedy_reduction() {
        let mut block = CoeffGrid::zeros(1, 7);
        for (k, v) in [(4, 1.0), (-5, -3.0), (6, 0.5), (-7, 2.0)] {
            block.set(&[k], c(v));
        }
        assert!(greedy_block_reduce(&block, 0, Measure::L2).is_empty());
        let two = greedy_block_reduce(&block, 2, Measure::L2);
        let ks: Vec<i64> = two.frequencies().map(|k| k.components()[0]).collect();
        assert_eq!(ks, vec![-7, -5]);
        assert_eq!(two.coeff(&FreqIndex::new(vec![-5])), c(-3.0));
        assert_eq!(greedy_block_reduce(&block, 10, Measure::L2), block.to_poly());

        let w = |k: &FreqIndex| if k.components()[0] == 6 { 100.0 } else { 1.0 };
        let one = greedy_block_reduce(&block, 1, Measure::Weighted(&w));
        assert_eq!(one.frequencies().next().unwrap().components(), &[6]);
    }

    #[test]
    fn equal_moduli_ties_and_residual() {
        let mut block = CoeffGrid::zeros(1, 7);
        for k in [-7i64, -6, -5, -4, 4, 5, 6, 7] {
            block.set(&[k], c(0.5));
        }
        let kept = greedy_block_reduce(&block, 3, Measure::L2);
        let ks: Vec<i64> = kept.frequencies().map(|k| k.components()[0]).collect();
        assert_eq!(ks, vec![-7, -6, -5]);
        let residual = block.sub_poly(&kept);
        assert!((residual.l2_norm_parseval() - 0.5 * 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn assembly_counts_and_exactness() {
        let mut f = CoeffGrid::zeros(1, 15);
        for k in -15i64..=15 {
            f.set(&[k], c(1.0 / (1.0 + k.abs() as f64)));
        }
        let plan = budget_plan_univariate(1024, 1.5).unwrap();
        // l = 10: every ring of f lies below the base level.
        let a = assemble(&f, &plan).unwrap();
        assert_eq!(a.poly, f.to_poly());
        let sp = SpaceParams::bq1(f64::INFINITY).unwrap();
        assert!(approx_error(&f, &a, &sp).unwrap() < 1e-15);

        let plan = budget_plan_univariate(12, 1.5).unwrap();
        let a = assemble(&f, &plan).unwrap();
        let full: usize = (0..plan.l).map(|s| sharp_block(&f, s).count_nonzero()).sum();
        let partial: u64 = (plan.l..=plan.cutoff)
            .map(|s| plan.budget(s).min(sharp_block(&f, s).count_nonzero() as u64))
            .sum();
        assert_eq!(a.term_count() as u64, full as u64 + partial);
        assert!(a.term_count() as u64 <= 12);
        assert!(partial > 0);
    }

    #[test]
    fn baselines() {
        let mut f = CoeffGrid::zeros(1, 9);
        for k in -9i64..=9 {
            f.set(&[k], c(1.0 + k as f64 * 0.01));
        }
        let sp = SpaceParams::lq(2.0).unwrap();
        let exact = greedy_baseline(&f, 100);
        assert_eq!(approx_error(&f, &exact, &sp).unwrap(), 0.0);
        assert!(greedy_baseline(&f, 0).poly.is_empty());
        let zero_err = approx_error(&f, &greedy_baseline(&f, 0), &sp).unwrap();
        assert!((zero_err - f.l2_norm_parseval()).abs() < 1e-12);

        let orth = orthogonal_cubic(&f, 8).unwrap();
        assert_eq!(orth.term_count(), 7);
        assert!(orth.poly.frequencies().all(|k| k.sup_norm() <= 3));
        let all = orthogonal_cubic(&f, 19).unwrap();
        assert!(all.term_count() <= 19);
        assert_eq!(orthogonal_cubic(&f, 1 << 10).unwrap().poly, f.to_poly());
        assert!(orthogonal_cubic(&f, 0).is_err());
    }

    #[test]
    fn oracle_l2_matches_parseval() {
        let mut f = CoeffGrid::zeros(1, 6);
        let vals = [(-6, 0.3), (-2, 1.5), (0, -0.7), (1, 0.2), (3, 2.2), (5, -1.1)];
        for (k, v) in vals {
            f.set(&[k], c(v));
        }
        let sp = SpaceParams::lq(2.0).unwrap();
        let profile = oracle_profile(&f, &sp).unwrap();
        let mut sq: Vec<f64> = vals.iter().map(|(_, v)| v * v).collect();
        sq.sort_by(f64::total_cmp);
        for (m, (poly, err)) in profile.iter().enumerate() {
            let expect: f64 = sq[..vals.len() - m].iter().sum::<f64>().sqrt();
            assert!((err - expect).abs() < 1e-12, "m={m}");
            assert_eq!(poly.len(), m);
            let greedy = approx_error(&f, &greedy_baseline(&f, m as u64), &sp).unwrap();
            assert!((greedy - err).abs() < 1e-12);
        }
        assert!(profile.last().unwrap().1 < 1e-12);
        let (_, e2) = oracle_best_mterm(&f, 2, &sp).unwrap();
        assert!((e2 - profile[2].1).abs() == 0.0);
    }

    #[test]
    fn oracle_rejects_large_support() {
        let f = CoeffGrid::from_poly(&crate::spectrum::dirichlet_kernel(8), None).unwrap();
        let sp = SpaceParams::lq(2.0).unwrap();
        assert!(matches!(oracle_profile(&f, &sp), Err(Error::TooLarge(_))));
    }
}
