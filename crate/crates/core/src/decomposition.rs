//! Dyadic block decompositions and normalized `L_p` norms.
//!
//! Two block families are provided: the smooth de la Vallée-Poussin blocks
//! `σ_s(f) = V_{2^s}(f) − V_{2^{s-1}}(f)` (with `σ_0(f) = V_1(f)`) and the
//! sharp blocks `f_(s)`, the restriction of `f̂` to the ring
//! `μ(s) = {k : 2^{s-1} ≤ max_j |k_j| < 2^s}` (with `μ(0) = {0}`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{synthesize_default, vallee_poussin_coeff, CoeffGrid, SampleGrid, Spectrum, TrigPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BlockMode {
    /// De la Vallée-Poussin blocks `σ_s`; valid for every `1 ≤ p ≤ ∞`.
    #[default]
    Vp,
    /// Fourier restriction to the rings `μ(s)`; norm-equivalent only for `1 < p < ∞`.
    Sharp,
}

impl BlockMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockMode::Vp => "vp",
            BlockMode::Sharp => "sharp",
        }
    }
}

impl std::str::FromStr for BlockMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vp" => Ok(BlockMode::Vp),
            "sharp" => Ok(BlockMode::Sharp),
            other => Err(Error::Parse(format!("unknown block mode `{other}`"))),
        }
    }
}

/// Checks `1 ≤ p ≤ ∞` (`f64::INFINITY` stands for `∞`).
pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Lebesgue exponent {p} is outside [1, inf]"
        )));
    }
    Ok(())
}

/// Dyadic level of a frequency: 0 for `k = 0`, otherwise the `s` with
/// `2^{s-1} ≤ max_j |k_j| < 2^s`.
pub fn level_of(k: &[i64]) -> usize {
    let m = k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    (u64::BITS - m.leading_zeros()) as usize
}

/// `|μ(s)| = (2^{s+1} − 1)^d − (2^s − 1)^d`, with `|μ(0)| = 1`.
pub fn mu_size(s: usize, d: usize) -> u64 {
    if s == 0 {
        return 1;
    }
    let outer = (1u64 << (s + 1)) - 1;
    let inner = (1u64 << s) - 1;
    outer.pow(d as u32) - inner.pow(d as u32)
}

/// Highest level needed to cover a polynomial of sup-degree `n`.
///
/// VP mode: smallest `S` with `2^S ≥ n` (the telescoping sum is then exact).
/// Sharp mode: smallest `S` with `2^S > n`.
pub fn top_level(max_freq: u64, mode: BlockMode) -> usize {
    match mode {
        BlockMode::Vp => {
            if max_freq <= 1 {
                0
            } else {
                (u64::BITS - (max_freq - 1).leading_zeros()) as usize
            }
        }
        BlockMode::Sharp => (u64::BITS - max_freq.leading_zeros()) as usize,
    }
}

fn vp_profile(l: u64, k: &[i64]) -> f64 {
    k.iter().map(|&kj| vallee_poussin_coeff(l, kj)).product()
}

/// `σ_s(f)`: `V_1(f)` for `s = 0`, otherwise `V_{2^s}(f) − V_{2^{s-1}}(f)`.
pub fn vp_block(f: &CoeffGrid, s: usize) -> CoeffGrid {
    if s == 0 {
        return f.apply_multiplier(1, |k| vp_profile(1, k));
    }
    let hi = 1u64 << s;
    let lo = 1u64 << (s - 1);
    let h = (2 * hi - 1) as usize;
    f.apply_multiplier(h, |k| vp_profile(hi, k) - vp_profile(lo, k))
}

/// `f_(s)`: the restriction of `f̂` to `μ(s)`; the constant term for `s = 0`.
pub fn sharp_block(f: &CoeffGrid, s: usize) -> CoeffGrid {
    let h = if s == 0 { 0 } else { (1usize << s) - 1 };
    f.apply_multiplier(h, |k| if level_of(k) == s { 1.0 } else { 0.0 })
}

pub fn block(f: &CoeffGrid, s: usize, mode: BlockMode) -> CoeffGrid {
    match mode {
        BlockMode::Vp => vp_block(f, s),
        BlockMode::Sharp => sharp_block(f, s),
    }
}

/// All nonempty-range blocks `s = 0 ..= S` of a polynomial.
#[derive(Clone, Debug)]
pub struct DyadicBlocks {
    mode: BlockMode,
    blocks: Vec<(usize, CoeffGrid)>,
}

impl DyadicBlocks {
    pub fn new(f: &CoeffGrid, mode: BlockMode) -> Self {
        let top = top_level(f.max_freq(), mode);
        let blocks = (0..=top).into_par_iter().map(|s| (s, block(f, s, mode))).collect();
        DyadicBlocks { mode, blocks }
    }

    pub fn mode(&self) -> BlockMode {
        self.mode
    }

    pub fn blocks(&self) -> &[(usize, CoeffGrid)] {
        &self.blocks
    }

    pub fn top_level(&self) -> usize {
        self.blocks.last().map(|(s, _)| *s).unwrap_or(0)
    }

    /// Sum of all blocks on a box of the given halfwidth.
    pub fn reconstruct(&self, halfwidth: usize) -> CoeffGrid {
        let dim = self.blocks[0].1.dim();
        self.blocks
            .iter()
            .fold(CoeffGrid::zeros(dim, halfwidth), |acc, (_, b)| acc.add(b))
    }

    /// Each block synthesized once at the default resolution.
    pub fn samples(&self) -> Vec<(usize, SampleGrid)> {
        self.blocks
            .par_iter()
            .map(|(s, b)| (*s, synthesize_default(b)))
            .collect()
    }

    /// `‖block_s‖_p` for every level, in level order.
    pub fn norms(&self, p: f64) -> Result<Vec<f64>> {
        check_exponent(p)?;
        Ok(self
            .blocks
            .par_iter()
            .map(|(_, b)| synthesize_default(b).lp_norm(p))
            .collect())
    }
}

/// Normalized `L_p` norm by equal-weight quadrature on the default
/// oversampled grid (grid maximum for `p = ∞`).
pub fn lp_norm(f: &dyn Spectrum, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(synthesize_default(f).lp_norm(p))
}

/// `‖f‖_q / (2^d Π_j n_j^{1/p − 1/q} ‖f‖_p)` with `n_j = max(1, deg_j f)`.
/// The different-metrics inequality says this never exceeds 1.
pub fn nikolskii_gap(f: &TrigPoly, p: f64, q: f64) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    if p >= q {
        return Err(Error::InvalidArgument(format!(
            "nikolskii_gap needs p < q, got p = {p}, q = {q}"
        )));
    }
    if f.is_empty() {
        return Ok(0.0);
    }
    let samples = synthesize_default(f);
    let norm_p = samples.lp_norm(p);
    let norm_q = samples.lp_norm(q);
    let exponent = 1.0 / p - 1.0 / q;
    let degrees: f64 = f
        .axis_degrees()
        .iter()
        .map(|&n| (n.max(1) as f64).powf(exponent))
        .product();
    let bound = 2f64.powi(f.dim() as i32) * degrees * norm_p;
    Ok(norm_q / bound)
}
