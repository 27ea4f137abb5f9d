//! Exponent table, rate experiments and slope fitting.
//!
//! All orders are of the form `m^{e}`; the functions here return `e`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{
    approx_error, assemble, budget_plan, greedy_baseline, orthogonal_cubic, Approximant, PlanParams, Scheme,
};
use crate::error::{Error, Result};
use crate::norms::{fmt_exponent, SpaceParams, TargetNorm};
use crate::spectrum::CoeffGrid;
use crate::testfuncs::{generate, GenKind, GenSpec};

fn pos(a: f64) -> f64 {
    a.max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Best m-term approximation with free coefficients.
    Em,
    /// Best orthogonal m-term approximation (Fourier coefficients kept).
    EmPerp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassKind {
    Besov,
    Sobolev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Bq1,
    Lq,
    Binf1,
    Linf,
}

macro_rules! parse_enum {
    ($ty:ty, $what:literal, { $($($name:literal)|+ => $val:expr),+ $(,)? }) => {
        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($($name)|+ => Ok($val),)+
                    other => Err(Error::Parse(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

parse_enum!(Quantity, "quantity", {
    "em" => Quantity::Em,
    "emperp" | "em-perp" | "perp" => Quantity::EmPerp,
});
parse_enum!(ClassKind, "class", {
    "besov" => ClassKind::Besov,
    "sobolev" => ClassKind::Sobolev,
});
parse_enum!(Target, "target", {
    "bq1" => Target::Bq1,
    "lq" => Target::Lq,
    "binf1" => Target::Binf1,
    "linf" => Target::Linf,
});

/// Which order estimate answered a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// `1 < p ≤ 2 < q < ∞`, `d(1/p − 1/q) < r < d/p`.
    SmallSmoothness,
    /// `1 < p ≤ 2 < q < ∞`, `r > d/p`.
    LargeSmoothness,
    /// `2 < p < q < ∞`, `r > d/2`.
    HighIntegrability,
    /// `1 ≤ p ≤ q ≤ 2` or `1 ≤ q ≤ p ≤ ∞`: cubic sums are optimal.
    CubicSums,
    /// Orthogonal approximation in `B_{q,1}`.
    Orthogonal,
    /// `d = 1`, uniform-type target, `r > max(1/p, 1/2)`.
    Univariate,
    /// Sobolev class in `L_∞`, `r > 1/p`.
    SobolevUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub quantity: Quantity,
    pub class: ClassKind,
    pub target: Target,
    pub d: usize,
    pub r: f64,
    #[serde(with = "crate::serde_inf")]
    pub p: f64,
    /// Ignored for `Binf1` and `Linf`.
    #[serde(with = "crate::serde_inf")]
    pub q: f64,
    /// Besov only; no estimate depends on it.
    #[serde(with = "crate::serde_inf")]
    pub theta: f64,
    /// Sobolev only; no estimate depends on it.
    pub alpha: f64,
}

impl ExponentQuery {
    pub fn besov(quantity: Quantity, target: Target, d: usize, r: f64, p: f64, q: f64) -> Self {
        ExponentQuery {
            quantity,
            class: ClassKind::Besov,
            target,
            d,
            r,
            p,
            q,
            theta: f64::INFINITY,
            alpha: 0.0,
        }
    }

    pub fn sobolev(quantity: Quantity, target: Target, r: f64, p: f64, alpha: f64) -> Self {
        ExponentQuery {
            quantity,
            class: ClassKind::Sobolev,
            target,
            d: 1,
            r,
            p,
            q: f64::INFINITY,
            theta: f64::INFINITY,
            alpha,
        }
    }

    /// `(B_{q,1} or L_q, q)` with `q = ∞` for the uniform targets.
    fn target_space(&self) -> (TargetNorm, f64) {
        match self.target {
            Target::Bq1 => (TargetNorm::Bq1, self.q),
            Target::Lq => (TargetNorm::Lq, self.q),
            Target::Binf1 => (TargetNorm::Bq1, f64::INFINITY),
            Target::Linf => (TargetNorm::Lq, f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub value: f64,
    pub clause: Clause,
}

/// `−(q/2)(r/d − 1/p + 1/q)`.
pub fn small_smoothness_exponent(d: usize, p: f64, q: f64, r: f64) -> f64 {
    -(q / 2.0) * (r / d as f64 - 1.0 / p + 1.0 / q)
}

/// `−r/d + 1/p − 1/2`.
pub fn large_smoothness_exponent(d: usize, p: f64, r: f64) -> f64 {
    -r / d as f64 + 1.0 / p - 0.5
}

/// `−r/d + (1/p − 1/q)_+`.
pub fn cubic_exponent(d: usize, p: f64, q: f64, r: f64) -> f64 {
    -r / d as f64 + pos(1.0 / p - 1.0 / q)
}

/// `−r + (1/p − 1/2)_+`.
pub fn univariate_exponent(p: f64, r: f64) -> f64 {
    -r + pos(1.0 / p - 0.5)
}

/// Both small- and large-smoothness branches evaluated at `r = d/p`.
pub fn critical_branch_values(d: usize, p: f64, q: f64) -> (f64, f64) {
    let r = d as f64 / p;
    (
        small_smoothness_exponent(d, p, q, r),
        large_smoothness_exponent(d, p, r),
    )
}

fn in_range(p: f64) -> bool {
    (1.0..=f64::INFINITY).contains(&p)
}

fn not_covered(q: &ExponentQuery, why: impl fmt::Display) -> Error {
    Error::Regime(format!(
        "no order estimate for {:?} of the {:?} class in {:?} with d = {}, r = {}, p = {}, q = {}: {why}",
        q.quantity,
        q.class,
        q.target,
        q.d,
        q.r,
        fmt_exponent(q.p),
        fmt_exponent(q.q)
    ))
}

/// Order exponent for a query, the open-case marker for `r = d/p` in the
/// `1 < p ≤ 2 < q < ∞` setting, or a regime error naming the violated
/// condition.
pub fn theoretical_exponent(query: &ExponentQuery) -> Result<Exponent> {
    let ExponentQuery { d, r, p, .. } = *query;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("smoothness r = {r} must be positive")));
    }
    if !in_range(p) {
        return Err(Error::InvalidArgument(format!("p = {p} is outside [1, inf]")));
    }
    let (norm, q) = query.target_space();
    if !in_range(q) {
        return Err(Error::InvalidArgument(format!("q = {q} is outside [1, inf]")));
    }
    let df = d as f64;
    let found = |value: f64, clause: Clause| Ok(Exponent { value, clause });

    match query.class {
        ClassKind::Sobolev => {
            if d != 1 {
                return Err(not_covered(query, "Sobolev estimates are univariate"));
            }
            if query.quantity != Quantity::Em || q.is_finite() {
                return Err(not_covered(query, "only e_m in B_{inf,1} and L_inf are tabulated"));
            }
            match norm {
                TargetNorm::Bq1 => {
                    if r > (1.0 / p).max(0.5) {
                        found(univariate_exponent(p, r), Clause::Univariate)
                    } else {
                        Err(not_covered(query, "needs r > max(1/p, 1/2)"))
                    }
                }
                TargetNorm::Lq => {
                    if r > 1.0 / p {
                        found(-(r.min(r - 1.0 / p + 0.5)), Clause::SobolevUniform)
                    } else {
                        Err(not_covered(query, "needs r > 1/p"))
                    }
                }
            }
        }
        ClassKind::Besov => match query.quantity {
            Quantity::EmPerp => {
                if norm != TargetNorm::Bq1 {
                    return Err(not_covered(query, "orthogonal orders are tabulated for B_{q,1} only"));
                }
                if (p == 1.0 && q == 1.0) || (p.is_infinite() && q.is_infinite()) {
                    return Err(not_covered(query, "(p, q) must not be (1, 1) or (inf, inf)"));
                }
                let threshold = df * pos(1.0 / p - 1.0 / q);
                if r > threshold {
                    found(cubic_exponent(d, p, q, r), Clause::Orthogonal)
                } else {
                    Err(not_covered(query, format!("needs r > d(1/p - 1/q)_+ = {threshold}")))
                }
            }
            Quantity::Em => {
                if q.is_infinite() && d == 1 {
                    return if r > (1.0 / p).max(0.5) {
                        found(univariate_exponent(p, r), Clause::Univariate)
                    } else {
                        Err(not_covered(query, "needs r > max(1/p, 1/2)"))
                    };
                }
                if p > 1.0 && p <= 2.0 && q > 2.0 && q.is_finite() {
                    let critical = df / p;
                    let lower = df * (1.0 / p - 1.0 / q);
                    if (r - critical).abs() <= 1e-12 * critical.max(1.0) {
                        if norm == TargetNorm::Bq1 {
                            return Err(Error::OpenCase(format!(
                                "r = d/p = {critical}: the order at the critical smoothness is open"
                            )));
                        }
                        return Err(not_covered(query, "r = d/p is not covered"));
                    }
                    if r > critical {
                        return found(large_smoothness_exponent(d, p, r), Clause::LargeSmoothness);
                    }
                    if r > lower {
                        return found(small_smoothness_exponent(d, p, q, r), Clause::SmallSmoothness);
                    }
                    return Err(not_covered(query, format!("needs r > d(1/p - 1/q) = {lower}")));
                }
                if p > 2.0 && p < q && q.is_finite() {
                    return if r > df / 2.0 {
                        found(-r / df, Clause::HighIntegrability)
                    } else {
                        Err(not_covered(query, format!("needs r > d/2 = {}", df / 2.0)))
                    };
                }
                if norm == TargetNorm::Bq1 && ((p <= q && q <= 2.0) || q <= p) {
                    let threshold = df * pos(1.0 / p - 1.0 / q);
                    return if r > threshold {
                        found(cubic_exponent(d, p, q, r), Clause::CubicSums)
                    } else {
                        Err(not_covered(query, format!("needs r > d(1/p - 1/q)_+ = {threshold}")))
                    };
                }
                Err(not_covered(
                    query,
                    "the (p, q) pair lies outside every tabulated regime",
                ))
            }
        },
    }
}

/// Least-squares line through `(ln m, ln err)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log residuals.
    pub residual: f64,
}

pub fn fit_slope(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("a slope fit needs at least two points".into()));
    }
    if let Some(&(m, e)) = points.iter().find(|(m, e)| !(*m > 0.0) || !(*e > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "slope fits need positive m and error, got ({m}, {e})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(m, _)| m.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fits need at least two distinct m".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(Fit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// Middle value for odd counts, mean of the two middle values otherwise.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Builds the approximant of `scheme` for the hard budget `m`.
pub fn scheme_approximant(f: &CoeffGrid, scheme: Scheme, pp: &PlanParams, m: u64) -> Result<Approximant> {
    match scheme.plan_kind() {
        Some(kind) => assemble(f, &budget_plan(kind, m, pp)?),
        None if scheme == Scheme::Greedy => Ok(greedy_baseline(f, m)),
        None => orthogonal_cubic(f, m),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Fitted slope is at least as steep as the order minus the tolerance.
    Pass,
    /// Steeper than the class order by more than the tolerance. Counts as a
    /// pass; a single function can decay faster than the class supremum.
    SteeperThanClass,
    Fail,
    /// Too few positive errors to fit.
    Degenerate,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::SteeperThanClass)
    }
}

pub fn verdict(slope: f64, exponent: f64, tolerance: f64) -> Verdict {
    if slope > exponent + tolerance {
        Verdict::Fail
    } else if slope < exponent - tolerance {
        Verdict::SteeperThanClass
    } else {
        Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateExperiment {
    /// Generator; `gen.seed` is the first of `seeds` consecutive seeds.
    pub gen: GenSpec,
    pub scheme: Scheme,
    pub space: SpaceParams,
    pub m_grid: Vec<u64>,
    pub seeds: usize,
    pub tolerance: f64,
    /// Smallest octaves of the grid left out of the fit.
    pub drop_octaves: usize,
}

impl RateExperiment {
    pub fn new(gen: GenSpec, scheme: Scheme, space: SpaceParams, m_grid: Vec<u64>) -> Self {
        RateExperiment {
            gen,
            scheme,
            space,
            m_grid,
            seeds: 1,
            tolerance: 0.3,
            drop_octaves: 1,
        }
    }

    /// The quantity the scheme realizes, against the target it is measured in.
    pub fn query(&self) -> ExponentQuery {
        let cp = &self.gen.cp;
        let quantity = if self.scheme == Scheme::Orthogonal {
            Quantity::EmPerp
        } else {
            Quantity::Em
        };
        let target = match (self.space.mode, self.space.q.is_infinite()) {
            (TargetNorm::Bq1, false) => Target::Bq1,
            (TargetNorm::Bq1, true) => Target::Binf1,
            (TargetNorm::Lq, false) => Target::Lq,
            (TargetNorm::Lq, true) => Target::Linf,
        };
        let class = if self.gen.kind == GenKind::Sobolev {
            ClassKind::Sobolev
        } else {
            ClassKind::Besov
        };
        ExponentQuery {
            quantity,
            class,
            target,
            d: cp.d,
            r: cp.r,
            p: cp.p,
            q: self.space.q,
            theta: cp.theta,
            alpha: self.gen.alpha,
        }
    }

    pub fn plan_params(&self) -> PlanParams {
        PlanParams::new(self.gen.cp.d, self.gen.cp.p, self.space.q, self.gen.cp.r)
    }

    fn validate(&self) -> Result<()> {
        if self.m_grid.len() < 4 {
            return Err(Error::InvalidArgument(
                "rate experiments need at least 4 grid points".into(),
            ));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) || self.m_grid[0] == 0 {
            return Err(Error::InvalidArgument(
                "m grid must be positive and strictly increasing".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidArgument("need at least one seed".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
        }
        self.gen.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub m: u64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub query: ExponentQuery,
    pub scheme: Scheme,
    pub space: String,
    pub gen: GenSpec,
    /// Median error over seeds for each m.
    pub points: Vec<RatePoint>,
    pub runs: Vec<SeedRun>,
    /// Grid values that entered the fit.
    pub fitted_m: Vec<u64>,
    pub fit: Option<Fit>,
    pub fitted_slope: Option<f64>,
    pub theoretical_exponent: f64,
    pub clause: Clause,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

/// Errors of one scheme on one function over a grid of budgets.
pub fn error_profile(
    f: &CoeffGrid,
    scheme: Scheme,
    pp: &PlanParams,
    sp: &SpaceParams,
    m_grid: &[u64],
) -> Result<Vec<f64>> {
    m_grid
        .par_iter()
        .map(|&m| {
            let a = scheme_approximant(f, scheme, pp, m)?;
            debug_assert!(a.term_count() as u64 <= m);
            approx_error(f, &a, sp)
        })
        .collect()
}

/// Runs every seed, takes the per-m median and fits the slope.
pub fn run_rate_experiment(exp: &RateExperiment) -> Result<RateReport> {
    exp.validate()?;
    let query = exp.query();
    let theory = theoretical_exponent(&query)?;
    let pp = exp.plan_params();
    if let Some(kind) = exp.scheme.plan_kind() {
        // Surface regime mismatches before any work is done.
        budget_plan(kind, *exp.m_grid.last().unwrap(), &pp)?;
    }

    let runs: Vec<SeedRun> = (0..exp.seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = exp.gen.seed.wrapping_add(i);
            let f = generate(&exp.gen.with_seed(seed))?;
            let errors = error_profile(&f, exp.scheme, &pp, &exp.space, &exp.m_grid)?;
            Ok(SeedRun { seed, errors })
        })
        .collect::<Result<_>>()?;

    let points: Vec<RatePoint> = exp
        .m_grid
        .iter()
        .enumerate()
        .map(|(j, &m)| RatePoint {
            m,
            error: median(&runs.iter().map(|r| r.errors[j]).collect::<Vec<_>>()),
        })
        .collect();

    let mut warnings = Vec::new();
    let cutoff = exp.m_grid[0].saturating_mul(1u64 << exp.drop_octaves.min(63));
    let mut usable = Vec::new();
    for pt in points.iter().filter(|pt| pt.m >= cutoff) {
        if pt.error > 0.0 {
            usable.push(pt);
        } else {
            warnings.push(format!("m = {}: zero error, left out of the fit", pt.m));
        }
    }

    let (fit, verdict_value) = if usable.len() < 2 {
        warnings.push("fewer than two positive errors: no fit".to_string());
        (None, Verdict::Degenerate)
    } else {
        let xy: Vec<(f64, f64)> = usable.iter().map(|pt| (pt.m as f64, pt.error)).collect();
        let fit = fit_slope(&xy)?;
        (Some(fit), verdict(fit.slope, theory.value, exp.tolerance))
    };

    Ok(RateReport {
        query,
        scheme: exp.scheme,
        space: exp.space.label(),
        gen: exp.gen,
        fitted_m: usable.iter().map(|pt| pt.m).collect(),
        points,
        runs,
        fitted_slope: fit.map(|f| f.slope),
        fit,
        theoretical_exponent: theory.value,
        clause: theory.clause,
        tolerance: exp.tolerance,
        verdict: verdict_value,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub m: u64,
    pub scheme: f64,
    pub greedy: f64,
    pub orthogonal: f64,
    /// `scheme / orthogonal`.
    pub ratio: f64,
}

/// Side-by-side errors of a scheme, the largest-coefficient baseline and the
/// cubic Fourier sum.
pub fn compare_schemes(
    f: &CoeffGrid,
    scheme: Scheme,
    pp: &PlanParams,
    sp: &SpaceParams,
    m_grid: &[u64],
) -> Result<Vec<ComparisonRow>> {
    m_grid
        .par_iter()
        .map(|&m| {
            let e_scheme = approx_error(f, &scheme_approximant(f, scheme, pp, m)?, sp)?;
            let e_greedy = approx_error(f, &greedy_baseline(f, m), sp)?;
            let e_orth = approx_error(f, &orthogonal_cubic(f, m)?, sp)?;
            Ok(ComparisonRow {
                m,
                scheme: e_scheme,
                greedy: e_greedy,
                orthogonal: e_orth,
                ratio: e_scheme / e_orth,
            })
        })
        .collect()
}
