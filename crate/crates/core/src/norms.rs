//! Decomposition norms: the Besov class norm `B^r_{p,θ}` and the target
//! space norm `B_{q,1}`, both computed over the finitely many blocks of a
//! trigonometric polynomial.

use serde::{Deserialize, Serialize};

use crate::decomposition::{check_exponent, lp_norm, BlockMode, DyadicBlocks};
use crate::error::{Error, Result};
use crate::spectrum::CoeffGrid;

/// Parameters `(d, r, p, θ)` of a Nikol'skii–Besov class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub d: usize,
    pub r: f64,
    #[serde(with = "crate::serde_inf")]
    pub p: f64,
    #[serde(with = "crate::serde_inf")]
    pub theta: f64,
}

impl ClassParams {
    pub fn new(d: usize, r: f64, p: f64, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("smoothness r = {r} must be positive")));
        }
        check_exponent(p)?;
        if theta.is_nan() || theta < 1.0 {
            return Err(Error::InvalidArgument(format!("theta = {theta} is outside [1, inf]")));
        }
        Ok(ClassParams { d, r, p, theta })
    }

    /// Sharp blocks are norm-equivalent only for `1 < p < ∞`.
    pub fn sharp_admissible(&self) -> bool {
        self.p > 1.0 && self.p.is_finite()
    }

    /// `1 < p ≤ 2 < q < ∞` and `d(1/p − 1/q) < r < d/p`.
    pub fn small_smoothness(&self, q: f64) -> bool {
        let d = self.d as f64;
        self.p > 1.0
            && self.p <= 2.0
            && q > 2.0
            && q.is_finite()
            && self.r > d * (1.0 / self.p - 1.0 / q)
            && self.r < d / self.p
    }

    /// `1 < p ≤ 2 < q < ∞` and `r > d/p`.
    pub fn large_smoothness(&self, q: f64) -> bool {
        self.p > 1.0 && self.p <= 2.0 && q > 2.0 && q.is_finite() && self.r > self.d as f64 / self.p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetNorm {
    /// `‖·‖_{B_{q,1}} = Σ_s ‖σ_s(·)‖_q`.
    Bq1,
    /// Plain normalized `L_q`.
    Lq,
}

impl std::str::FromStr for TargetNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bq1" => Ok(TargetNorm::Bq1),
            "lq" => Ok(TargetNorm::Lq),
            other => Err(Error::Parse(format!("unknown target norm `{other}`"))),
        }
    }
}

/// Target space: `B_{q,1}` (with a block family) or `L_q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    #[serde(with = "crate::serde_inf")]
    pub q: f64,
    pub mode: TargetNorm,
    pub block_mode: BlockMode,
}

impl SpaceParams {
    pub fn new(q: f64, mode: TargetNorm, block_mode: BlockMode) -> Result<Self> {
        check_exponent(q)?;
        check_block_mode(q, block_mode)?;
        Ok(SpaceParams { q, mode, block_mode })
    }

    pub fn bq1(q: f64) -> Result<Self> {
        SpaceParams::new(q, TargetNorm::Bq1, BlockMode::Vp)
    }

    pub fn lq(q: f64) -> Result<Self> {
        SpaceParams::new(q, TargetNorm::Lq, BlockMode::Vp)
    }

    /// Short tag such as `B4,1`, `Binf,1`, `L2`.
    pub fn label(&self) -> String {
        let q = fmt_exponent(self.q);
        match self.mode {
            TargetNorm::Bq1 => format!("B{q},1"),
            TargetNorm::Lq => format!("L{q}"),
        }
    }

    /// Norm of `f` in this space.
    pub fn norm(&self, f: &CoeffGrid) -> Result<f64> {
        match self.mode {
            TargetNorm::Bq1 => bq1_norm(f, self.q, self.block_mode),
            TargetNorm::Lq => lp_norm(f, self.q),
        }
    }
}

pub fn fmt_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

fn check_block_mode(p: f64, mode: BlockMode) -> Result<()> {
    if mode == BlockMode::Sharp && !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sharp blocks need 1 < p < inf, got p = {}",
            fmt_exponent(p)
        )));
    }
    Ok(())
}

/// `(Σ_s 2^{srθ} ‖block_s‖_p^θ)^{1/θ}`, or `max_s 2^{sr} ‖block_s‖_p` for `θ = ∞`.
pub fn besov_norm(f: &CoeffGrid, cp: &ClassParams, block_mode: BlockMode) -> Result<f64> {
    check_block_mode(cp.p, block_mode)?;
    let norms = DyadicBlocks::new(f, block_mode).norms(cp.p)?;
    let weighted = norms.iter().enumerate().map(|(s, n)| 2f64.powf(s as f64 * cp.r) * n);
    if cp.theta.is_infinite() {
        Ok(weighted.fold(0.0, f64::max))
    } else {
        let sum: f64 = weighted.map(|w| w.powf(cp.theta)).sum();
        Ok(sum.powf(1.0 / cp.theta))
    }
}

/// `Σ_s ‖block_s‖_q`.
pub fn bq1_norm(f: &CoeffGrid, q: f64, block_mode: BlockMode) -> Result<f64> {
    check_block_mode(q, block_mode)?;
    Ok(DyadicBlocks::new(f, block_mode).norms(q)?.iter().sum())
}

/// `f / ‖f‖_{B^r_{p,θ}}`: places `f` on the unit sphere of the class.
pub fn class_normalize(f: &CoeffGrid, cp: &ClassParams, block_mode: BlockMode) -> Result<CoeffGrid> {
    let n = besov_norm(f, cp, block_mode)?;
    if n <= 0.0 || !n.is_finite() {
        return Err(Error::InvalidArgument(
            "cannot normalize a function with zero class norm".into(),
        ));
    }
    Ok(f.scale(1.0 / n))
}
