//! Class representatives used as experiment inputs.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{level_of, lp_norm, sharp_block, BlockMode};
use crate::error::{Error, Result};
use crate::norms::{class_normalize, ClassParams};
use crate::rng::stream;
use crate::spectrum::{bernoulli_kernel, convolve, CoeffGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    #[default]
    RandomBesov,
    SingleBlock,
    Sobolev,
}

impl GenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::RandomBesov => "random-besov",
            GenKind::SingleBlock => "single-block",
            GenKind::Sobolev => "sobolev",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random-besov" | "randombesov" | "besov" => Ok(GenKind::RandomBesov),
            "single-block" | "singleblock" => Ok(GenKind::SingleBlock),
            "sobolev" => Ok(GenKind::Sobolev),
            other => Err(Error::Parse(format!("unknown generator `{other}`"))),
        }
    }
}

/// Source density for Sobolev functions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiKind {
    #[default]
    RandomSigns,
    Constant,
}

impl PhiKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhiKind::RandomSigns => "random-signs",
            PhiKind::Constant => "constant",
        }
    }
}

impl std::str::FromStr for PhiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random-signs" | "randomsigns" | "signs" => Ok(PhiKind::RandomSigns),
            "constant" => Ok(PhiKind::Constant),
            other => Err(Error::Parse(format!("unknown phi kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub cp: ClassParams,
    /// Top dyadic level. For `SingleBlock` this is the populated ring; for
    /// `Sobolev` the density lives on `|k| < 2^{s_max}`.
    pub s_max: usize,
    pub seed: u64,
    pub alpha: f64,
    pub phi_kind: PhiKind,
}

impl GenSpec {
    pub fn new(kind: GenKind, cp: ClassParams, s_max: usize, seed: u64) -> Self {
        GenSpec {
            kind,
            cp,
            s_max,
            seed,
            alpha: 0.0,
            phi_kind: PhiKind::RandomSigns,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ClassParams::new(self.cp.d, self.cp.r, self.cp.p, self.cp.theta)?;
        if self.s_max < 1 {
            return Err(Error::InvalidArgument("s_max must be at least 1".into()));
        }
        if self.cp.d * (self.s_max + 1) > 40 {
            return Err(Error::TooLarge(format!(
                "s_max = {} in dimension {} gives too many coefficients",
                self.s_max, self.cp.d
            )));
        }
        if self.kind == GenKind::Sobolev && self.cp.d != 1 {
            return Err(Error::InvalidArgument("Sobolev functions are univariate".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidArgument("alpha must be finite".into()));
        }
        Ok(())
    }
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &GenSpec) -> Result<CoeffGrid> {
    spec.validate()?;
    match spec.kind {
        GenKind::RandomBesov => random_besov(spec),
        GenKind::SingleBlock => single_block_extremal(spec.s_max, &spec.cp),
        GenKind::Sobolev => sobolev_function(
            spec.cp.r,
            spec.cp.p,
            spec.alpha,
            spec.phi_kind,
            (1u64 << spec.s_max) - 1,
            spec.seed,
        ),
    }
}

fn normalizing_mode(cp: &ClassParams) -> BlockMode {
    if cp.sharp_admissible() {
        BlockMode::Sharp
    } else {
        BlockMode::Vp
    }
}

/// Random real function on the unit sphere of `B^r_{p,θ}` with blocks up to
/// level `s_max`: unit-modulus random phases on every ring `μ(s)`, each
/// block scaled to `‖f_(s)‖_p = 2^{−sr} w_s`, then normalized exactly.
pub fn random_besov(spec: &GenSpec) -> Result<CoeffGrid> {
    spec.validate()?;
    let cp = &spec.cp;
    let halfwidth = (1usize << spec.s_max) - 1;
    let mut rng = stream(spec.seed, "random-besov");
    let mut f = CoeffGrid::zeros(cp.d, halfwidth);
    for idx in 0..f.len() {
        let k = f.freq_at(idx);
        let neg = k.neg();
        if k == neg {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            f.set(k.components(), Complex64::new(sign, 0.0));
        } else if k < neg {
            let z = Complex64::from_polar(1.0, TAU * rng.random::<f64>());
            f.set(k.components(), z);
            f.set(neg.components(), z.conj());
        }
    }

    let w = if cp.theta.is_infinite() {
        1.0
    } else {
        ((spec.s_max + 1) as f64).powf(-1.0 / cp.theta)
    };
    let mut shaped = CoeffGrid::zeros(cp.d, halfwidth);
    for s in 0..=spec.s_max {
        let block = sharp_block(&f, s);
        let n = lp_norm(&block, cp.p)?;
        let target = 2f64.powf(-(s as f64) * cp.r) * w;
        shaped = shaped.add(&block.scale(target / n));
    }
    class_normalize(&shaped, cp, normalizing_mode(cp))?.tag_real()
}

/// All-ones coefficients on the ring `μ(s)`, normalized to unit class norm.
pub fn single_block_extremal(s: usize, cp: &ClassParams) -> Result<CoeffGrid> {
    if s < 1 {
        return Err(Error::InvalidArgument("single block level must be at least 1".into()));
    }
    let halfwidth = (1usize << s) - 1;
    let mut f = CoeffGrid::zeros(cp.d, halfwidth);
    for idx in 0..f.len() {
        let k = f.freq_at(idx);
        if level_of(k.components()) == s {
            f.set(k.components(), Complex64::new(1.0, 0.0));
        }
    }
    class_normalize(&f, cp, normalizing_mode(cp))?.tag_real()
}

/// Density `φ` with `φ̂(k) = ±1` on `|k| ≤ K` (mirrored so `φ` is real),
/// normalized to `‖φ‖_p = 1`.
pub fn sobolev_density(p: f64, phi_kind: PhiKind, truncation: u64, seed: u64) -> Result<CoeffGrid> {
    let n = truncation as i64;
    let mut phi = CoeffGrid::zeros(1, truncation as usize);
    let mut rng = stream(seed, "sobolev-phi");
    for k in 0..=n {
        let v = match phi_kind {
            PhiKind::Constant => 1.0,
            PhiKind::RandomSigns => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        phi.set(&[k], Complex64::new(v, 0.0));
        phi.set(&[-k], Complex64::new(v, 0.0));
    }
    let norm = lp_norm(&phi, p)?;
    phi.scale(1.0 / norm).tag_real()
}

/// `f = φ * F_r(·, α)` for a given density, with `φ` first scaled to
/// `‖φ‖_p = 1`. The kernel is truncated at the density's halfwidth.
pub fn sobolev_from_density(phi: &CoeffGrid, r: f64, p: f64, alpha: f64) -> Result<CoeffGrid> {
    if phi.dim() != 1 {
        return Err(Error::InvalidArgument("Sobolev functions are univariate".into()));
    }
    let norm = lp_norm(phi, p)?;
    if norm <= 0.0 {
        return Err(Error::InvalidArgument("density must be nonzero".into()));
    }
    let kernel = bernoulli_kernel(r, alpha, phi.halfwidth() as u64);
    let mut f = convolve(&phi.scale(1.0 / norm), &kernel)?;
    f.set(&[0], Complex64::default());
    Ok(f)
}

/// Univariate `W^r_{p,α}` representative: `f̂(k) = φ̂(k) F̂_r(k)` for
/// `k ≠ 0`, `f̂(0) = 0`.
pub fn sobolev_function(
    r: f64,
    p: f64,
    alpha: f64,
    phi_kind: PhiKind,
    truncation: u64,
    seed: u64,
) -> Result<CoeffGrid> {
    if truncation < 1 {
        return Err(Error::InvalidArgument("truncation must be at least 1".into()));
    }
    let phi = sobolev_density(p, phi_kind, truncation, seed)?;
    sobolev_from_density(&phi, r, p, alpha)
}

/// `n` distinct random frequencies in `[-H, H]^d` with coefficients whose
/// real and imaginary parts are uniform in `[-1, 1]`. Small instances for
/// the exhaustive oracle.
pub fn random_sparse(d: usize, n: usize, halfwidth: usize, seed: u64) -> Result<CoeffGrid> {
    let side = 2 * halfwidth + 1;
    let total = side.checked_pow(d as u32).unwrap_or(usize::MAX);
    if d == 0 || n > total {
        return Err(Error::InvalidArgument(format!(
            "cannot place {n} distinct frequencies in a box of {total}"
        )));
    }
    let mut rng = stream(seed, "random-sparse");
    let mut f = CoeffGrid::zeros(d, halfwidth);
    let mut picked = rand::seq::index::sample(&mut rng, total, n).into_vec();
    picked.sort_unstable();
    for idx in picked {
        let re = rng.random_range(-1.0..=1.0);
        let im = rng.random_range(-1.0..=1.0);
        let k = f.freq_at(idx);
        f.set(k.components(), Complex64::new(re, im));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::mu_size;
    use crate::norms::besov_norm;
    use crate::spectrum::write_dump;

    fn dump(f: &CoeffGrid) -> Vec<u8> {
        let mut out = Vec::new();
        write_dump(&f.to_poly(), &[], &mut out).unwrap();
        out
    }

    #[test]
    fn random_besov_unit_norm_and_decay() {
        for (d, r, p, s_max) in [(1, 1.5, 2.0, 8), (2, 1.0, 4.0, 4), (1, 0.7, 1.5, 6)] {
            let cp = ClassParams::new(d, r, p, f64::INFINITY).unwrap();
            let f = random_besov(&GenSpec::new(GenKind::RandomBesov, cp, s_max, 3)).unwrap();
            assert!(f.is_real_valued());
            let n = besov_norm(&f, &cp, BlockMode::Sharp).unwrap();
            assert!((n - 1.0).abs() < 1e-9);
            for s in 0..s_max {
                let a = lp_norm(&sharp_block(&f, s), p).unwrap();
                let b = lp_norm(&sharp_block(&f, s + 1), p).unwrap();
                assert!((a / b / 2f64.powf(r) - 1.0).abs() < 1e-6, "s={s}");
            }
            assert_eq!(f.count_nonzero() as u64, (0..=s_max).map(|s| mu_size(s, d)).sum());
        }
    }

    #[test]
    fn random_besov_finite_theta_and_endpoints() {
        let cp = ClassParams::new(1, 1.0, 2.0, 2.0).unwrap();
        let f = random_besov(&GenSpec::new(GenKind::RandomBesov, cp, 6, 1)).unwrap();
        assert!((besov_norm(&f, &cp, BlockMode::Sharp).unwrap() - 1.0).abs() < 1e-9);
        let cp = ClassParams::new(1, 1.0, 1.0, f64::INFINITY).unwrap();
        let f = random_besov(&GenSpec::new(GenKind::RandomBesov, cp, 6, 1)).unwrap();
        assert!((besov_norm(&f, &cp, BlockMode::Vp).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seeds_reproduce_and_differ() {
        let cp = ClassParams::new(1, 1.0, 2.0, f64::INFINITY).unwrap();
        let spec = GenSpec::new(GenKind::RandomBesov, cp, 7, 42);
        let a = dump(&random_besov(&spec).unwrap());
        let b = dump(&random_besov(&spec).unwrap());
        let c = dump(&random_besov(&spec.with_seed(43)).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
        let sob = GenSpec {
            kind: GenKind::Sobolev,
            ..spec
        };
        assert_eq!(dump(&generate(&sob).unwrap()), dump(&generate(&sob).unwrap()));
    }

    #[test]
    fn single_block() {
        let cp = ClassParams::new(2, 1.0, 2.0, f64::INFINITY).unwrap();
        let f = single_block_extremal(3, &cp).unwrap();
        assert_eq!(f.count_nonzero() as u64, mu_size(3, 2));
        assert!((besov_norm(&f, &cp, BlockMode::Sharp).unwrap() - 1.0).abs() < 1e-12);
        // Equal moduli: every coefficient is 2^{-3r}/sqrt|μ(3)| in L2.
        let c = f.get(&[4, 0]).re;
        let expect = 2f64.powf(-3.0) / (mu_size(3, 2) as f64).sqrt();
        assert!((c - expect).abs() < 1e-14);
        assert!(single_block_extremal(0, &cp).is_err());
    }

    #[test]
    fn sparse_instances() {
        let f = random_sparse(1, 14, 32, 5).unwrap();
        assert_eq!(f.count_nonzero(), 14);
        assert_eq!(random_sparse(1, 14, 32, 5).unwrap(), f);
        assert_ne!(random_sparse(1, 14, 32, 6).unwrap(), f);
        assert_eq!(random_sparse(2, 9, 1, 0).unwrap().count_nonzero(), 9);
        assert!(random_sparse(1, 4, 1, 0).is_err());
    }

    #[test]
    fn sobolev_cosine() {
        let mut phi = CoeffGrid::zeros(1, 1);
        phi.set(&[1], Complex64::new(0.5, 0.0));
        phi.set(&[-1], Complex64::new(0.5, 0.0));
        for p in [1.0, 2.0, f64::INFINITY] {
            let f = sobolev_from_density(&phi, 2.5, p, 0.0).unwrap();
            // L1 is a 16-point quadrature, not 2/π; L2 and L∞ are exact.
            let cos_norm = if p == 1.0 {
                (0..16).map(|j| (TAU * j as f64 / 16.0).cos().abs()).sum::<f64>() / 16.0
            } else if p == 2.0 {
                0.5f64.sqrt()
            } else {
                1.0
            };
            let expect = 0.5 * 0.5 / cos_norm;
            assert!((f.get(&[1]).re - expect).abs() < 1e-9, "p={p}");
            assert!(f.get(&[1]).im.abs() < 1e-15);
            assert_eq!(f.get(&[0]), Complex64::default());
        }
    }

    #[test]
    fn sobolev_decay_and_density_norm() {
        let phi = sobolev_density(2.0, PhiKind::RandomSigns, 63, 9).unwrap();
        assert!((lp_norm(&phi, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let f = sobolev_function(1.5, 2.0, 0.5, PhiKind::RandomSigns, 63, 9).unwrap();
        assert!(f.is_real_valued());
        for k in 1..=63i64 {
            let ratio = f.get(&[k]).norm() / phi.get(&[k]).norm();
            assert!((ratio - 0.5 * (k as f64).powf(-1.5)).abs() < 1e-14);
        }
        let flat = sobolev_density(4.0, PhiKind::Constant, 15, 0).unwrap();
        assert!((lp_norm(&flat, 4.0).unwrap() - 1.0).abs() < 1e-12);
    }
}
