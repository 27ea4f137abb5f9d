//! Frequency-domain representations of periodic functions on the torus,
//! the classical kernels, and synthesis on uniform sample grids.
//!
//! Everything is expressed through Fourier coefficients with respect to the
//! normalized measure `(2π)^{-d} dx`, so convolution with a kernel is a
//! coefficient-wise product.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Tolerance used when checking conjugate symmetry of coefficient tables.
const SYMMETRY_TOL: f64 = 1e-12;

/// An integer frequency vector `k ∈ Z^d`.
///
/// Ordering is lexicographic on the components, which is the ordering used
/// for dumps and for deterministic tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqIndex(Vec<i64>);

impl FreqIndex {
    pub fn new(components: Vec<i64>) -> Self {
        assert!(!components.is_empty(), "frequency vectors need d >= 1");
        FreqIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        FreqIndex::new(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    /// `max_j |k_j|`.
    pub fn sup_norm(&self) -> u64 {
        self.0.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn neg(&self) -> FreqIndex {
        FreqIndex(self.0.iter().map(|k| -k).collect())
    }
}

impl From<Vec<i64>> for FreqIndex {
    fn from(v: Vec<i64>) -> Self {
        FreqIndex::new(v)
    }
}

impl fmt::Display for FreqIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Anything that can be viewed as a finite table of Fourier coefficients.
pub trait Spectrum {
    fn dim(&self) -> usize;

    /// Largest `max_j |k_j|` over the nonzero coefficients (0 for the zero function).
    fn max_freq(&self) -> u64;

    /// Calls `visit` for every stored coefficient, zeros included or not.
    fn for_each_coeff(&self, visit: &mut dyn FnMut(&[i64], Complex64));
}

/// Sparse trigonometric polynomial: a finite map from frequencies to
/// complex coefficients. Zero coefficients are never stored, so `len()` is
/// the number of harmonics.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigPoly {
    dim: usize,
    terms: BTreeMap<FreqIndex, Complex64>,
}

impl TrigPoly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        TrigPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut p = TrigPoly::zero(dim);
        p.insert(FreqIndex::zero(dim), c);
        p
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (FreqIndex, Complex64)>,
    {
        let mut p = TrigPoly::zero(dim);
        for (k, c) in terms {
            p.insert(k, c);
        }
        p
    }

    /// Sets the coefficient at `k`; a zero value removes the term.
    pub fn insert(&mut self, k: FreqIndex, c: Complex64) {
        assert_eq!(k.dim(), self.dim, "frequency dimension mismatch");
        if c == Complex64::new(0.0, 0.0) {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, c);
        }
    }

    pub fn coeff(&self, k: &FreqIndex) -> Complex64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FreqIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn frequencies(&self) -> impl Iterator<Item = &FreqIndex> {
        self.terms.keys()
    }

    /// Per-axis degree bounds `n_j = max |k_j|` over the stored terms.
    pub fn axis_degrees(&self) -> Vec<u64> {
        let mut n = vec![0u64; self.dim];
        for k in self.terms.keys() {
            for (nj, kj) in n.iter_mut().zip(k.components()) {
                *nj = (*nj).max(kj.unsigned_abs());
            }
        }
        n
    }

    /// Point evaluation `Σ c_k e^{i(k,x)}`.
    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        self.terms
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k.components().iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    pub fn scale(&self, factor: Complex64) -> TrigPoly {
        TrigPoly::from_terms(self.dim, self.terms.iter().map(|(k, c)| (k.clone(), c * factor)))
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let v = out.coeff(k) + c;
            out.insert(k.clone(), v);
        }
        out
    }

    /// `coeff(-k) == conj(coeff(k))` for every `k`, to a small tolerance.
    pub fn is_conj_symmetric(&self) -> bool {
        self.terms.iter().all(|(k, c)| {
            let mirrored = self.coeff(&k.neg());
            (mirrored - c.conj()).norm() <= SYMMETRY_TOL * (1.0 + c.norm())
        })
    }
}

impl Spectrum for TrigPoly {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_freq(&self) -> u64 {
        self.terms.keys().map(FreqIndex::sup_norm).max().unwrap_or(0)
    }

    fn for_each_coeff(&self, visit: &mut dyn FnMut(&[i64], Complex64)) {
        for (k, c) in &self.terms {
            visit(k.components(), *c);
        }
    }
}

/// Dense table of Fourier coefficients over the box `[-N, N]^d`.
///
/// Storage is row-major with the first axis slowest, so linear index order
/// coincides with lexicographic order of the frequency vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffGrid {
    dim: usize,
    halfwidth: usize,
    coeffs: Vec<Complex64>,
    real_valued: bool,
}

impl CoeffGrid {
    pub fn zeros(dim: usize, halfwidth: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        let side = 2 * halfwidth + 1;
        CoeffGrid {
            dim,
            halfwidth,
            coeffs: vec![Complex64::default(); side.pow(dim as u32)],
            real_valued: false,
        }
    }

    /// Dense copy of a polynomial on the smallest box containing it, or on
    /// `[-halfwidth, halfwidth]^d` when given (terms outside are an error).
    pub fn from_poly(poly: &TrigPoly, halfwidth: Option<usize>) -> Result<Self> {
        let needed = poly.max_freq() as usize;
        let n = halfwidth.unwrap_or(needed);
        if n < needed {
            return Err(Error::InvalidArgument(format!(
                "polynomial has frequency {needed} outside the box of halfwidth {n}"
            )));
        }
        let mut g = CoeffGrid::zeros(poly.dim(), n);
        for (k, c) in poly.iter() {
            g.set(k.components(), *c);
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfwidth(&self) -> usize {
        self.halfwidth
    }

    pub fn side(&self) -> usize {
        2 * self.halfwidth + 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    /// Tags the grid as real-valued after checking conjugate symmetry.
    pub fn tag_real(mut self) -> Result<Self> {
        if !self.is_conj_symmetric() {
            return Err(Error::InvalidArgument(
                "coefficients are not conjugate-symmetric".into(),
            ));
        }
        self.real_valued = true;
        Ok(self)
    }

    pub(crate) fn with_real_tag(mut self, tag: bool) -> Self {
        self.real_valued = tag;
        self
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let n = self.halfwidth as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &kj in k {
            if kj < -n || kj > n {
                return None;
            }
            idx = idx * side + (kj + n) as usize;
        }
        Some(idx)
    }

    /// Frequency vector stored at linear index `idx`.
    pub fn freq_at(&self, mut idx: usize) -> FreqIndex {
        let side = self.side();
        let n = self.halfwidth as i64;
        let mut k = vec![0i64; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = (idx % side) as i64 - n;
            idx /= side;
        }
        FreqIndex(k)
    }

    /// Coefficient at `k`, zero outside the box.
    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.index_of(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Sets the coefficient at `k`. Panics when `k` is outside the box.
    pub fn set(&mut self, k: &[i64], c: Complex64) {
        let i = self
            .index_of(k)
            .unwrap_or_else(|| panic!("frequency {k:?} outside box of halfwidth {}", self.halfwidth));
        self.coeffs[i] = c;
    }

    /// Iterates `(k, coefficient)` over the whole box in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (FreqIndex, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.freq_at(i), *c))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (FreqIndex, Complex64)> + '_ {
        self.iter().filter(|(_, c)| *c != Complex64::default())
    }

    pub fn count_nonzero(&self) -> usize {
        self.coeffs.iter().filter(|c| **c != Complex64::default()).count()
    }

    pub fn to_poly(&self) -> TrigPoly {
        TrigPoly::from_terms(self.dim, self.nonzero())
    }

    /// Re-boxes to a new halfwidth, dropping coefficients outside it.
    pub fn resized(&self, halfwidth: usize) -> CoeffGrid {
        let mut out = CoeffGrid::zeros(self.dim, halfwidth);
        for (k, c) in self.nonzero() {
            if k.sup_norm() as usize <= halfwidth {
                out.set(k.components(), c);
            }
        }
        out.real_valued = self.real_valued;
        out
    }

    /// Multiplies each coefficient by `weight(k)` and keeps only the box of
    /// the given halfwidth (which must not exceed the current one).
    pub fn apply_multiplier<F>(&self, halfwidth: usize, weight: F) -> CoeffGrid
    where
        F: Fn(&[i64]) -> f64,
    {
        let h = halfwidth.min(self.halfwidth);
        let mut out = CoeffGrid::zeros(self.dim, h);
        let mut k = vec![-(h as i64); self.dim];
        for slot in out.coeffs.iter_mut() {
            let src = self.index_of(&k).expect("sub-box lies inside the source box");
            let c = self.coeffs[src];
            if c != Complex64::default() {
                let w = weight(&k);
                if w != 0.0 {
                    *slot = c * w;
                }
            }
            advance_odometer(&mut k, h as i64);
        }
        out.real_valued = self.real_valued;
        out
    }

    pub fn scale(&self, factor: f64) -> CoeffGrid {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    fn combine(&self, other: &CoeffGrid, sign: f64) -> CoeffGrid {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let h = self.halfwidth.max(other.halfwidth);
        let mut out = self.resized(h);
        for (k, c) in other.nonzero() {
            let i = out.index_of(k.components()).expect("inside enlarged box");
            out.coeffs[i] += c * sign;
        }
        out.real_valued = self.real_valued && other.real_valued;
        out
    }

    pub fn add(&self, other: &CoeffGrid) -> CoeffGrid {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &CoeffGrid) -> CoeffGrid {
        self.combine(other, -1.0)
    }

    /// `f - p` on the union box.
    pub fn sub_poly(&self, p: &TrigPoly) -> CoeffGrid {
        let h = self.halfwidth.max(p.max_freq() as usize);
        let mut out = self.resized(h);
        out.real_valued = false;
        for (k, c) in p.iter() {
            let i = out.index_of(k.components()).expect("inside enlarged box");
            out.coeffs[i] -= c;
        }
        out
    }

    /// Largest absolute difference between coefficients of two grids.
    pub fn max_abs_diff(&self, other: &CoeffGrid) -> f64 {
        self.sub(other).coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `sqrt(Σ |f̂(k)|²)`, the L2 norm by Parseval.
    pub fn l2_norm_parseval(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_conj_symmetric(&self) -> bool {
        self.iter().all(|(k, c)| {
            let m = self.get(k.neg().components());
            (m - c.conj()).norm() <= SYMMETRY_TOL * (1.0 + c.norm())
        })
    }
}

impl Spectrum for CoeffGrid {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_freq(&self) -> u64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != Complex64::default())
            .map(|(i, _)| self.freq_at(i).sup_norm())
            .max()
            .unwrap_or(0)
    }

    fn for_each_coeff(&self, visit: &mut dyn FnMut(&[i64], Complex64)) {
        let n = self.halfwidth as i64;
        let mut k = vec![-n; self.dim];
        for c in &self.coeffs {
            visit(&k, *c);
            advance_odometer(&mut k, n);
        }
    }
}

/// Steps a frequency vector through `[-n, n]^d` in lexicographic order.
fn advance_odometer(k: &mut [i64], n: i64) {
    for slot in k.iter_mut().rev() {
        if *slot < n {
            *slot += 1;
            return;
        }
        *slot = -n;
    }
}

/// Values of a function at the uniform points `2πj/M` on each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    dim: usize,
    points_per_axis: usize,
    values: Vec<Complex64>,
}

impl SampleGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Sample at multi-index `j` (row-major, first axis slowest).
    pub fn at(&self, j: &[usize]) -> Complex64 {
        let idx = j.iter().fold(0usize, |acc, &jj| acc * self.points_per_axis + jj);
        self.values[idx]
    }

    /// Discrete normalized `L_p` norm: the equal-weight mean of `|v|^p` for
    /// finite `p`, the sample maximum for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let n = self.values.len() as f64;
        if p == 2.0 {
            (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / n).sqrt()
        } else if p == 1.0 {
            self.values.iter().map(|v| v.norm()).sum::<f64>() / n
        } else {
            let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
            (s / n).powf(1.0 / p)
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// Mandated resolution for synthesis: `4·(2N+1)` rounded up to a power of two.
pub fn default_points(max_freq: u64) -> usize {
    (4 * (2 * max_freq as usize + 1)).next_power_of_two()
}

/// Evaluates `Σ f̂(k) e^{i(k, 2πj/M)}` at every point of the uniform
/// `M^d` grid. Requires `M > 2·max_freq` so no two frequencies alias.
pub fn synthesize(f: &dyn Spectrum, points_per_axis: usize) -> Result<SampleGrid> {
    let dim = f.dim();
    let m = points_per_axis;
    let kmax = f.max_freq();
    if m == 0 || (m as u64) <= 2 * kmax {
        return Err(Error::Aliasing {
            points: m,
            max_freq: kmax,
        });
    }
    let total = m
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::InvalidArgument(format!("sample grid {m}^{dim} does not fit in memory")))?;
    let mut values = vec![Complex64::default(); total];
    let mm = m as i64;
    f.for_each_coeff(&mut |k, c| {
        if c == Complex64::default() {
            return;
        }
        let idx = k.iter().fold(0usize, |acc, &kj| acc * m + kj.rem_euclid(mm) as usize);
        values[idx] += c;
    });

    // Unnormalized inverse DFT along every axis: e^{+2πi kj/M}.
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(m);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::default(); m];
    for axis in 0..dim {
        let stride = m.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in values.chunks_exact_mut(m) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * m;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + t * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (t, v) in line.iter().enumerate() {
                    values[base + t * stride] = *v;
                }
            }
        }
    }
    Ok(SampleGrid {
        dim,
        points_per_axis: m,
        values,
    })
}

/// Synthesis at the default oversampled resolution.
pub fn synthesize_default(f: &dyn Spectrum) -> SampleGrid {
    synthesize(f, default_points(f.max_freq())).expect("default resolution is alias-free")
}

/// Dirichlet kernel `D_k(t) = Σ_{|m|≤k} e^{imt}`.
pub fn dirichlet_kernel(order: u64) -> TrigPoly {
    let k = order as i64;
    TrigPoly::from_terms(1, (-k..=k).map(|m| (FreqIndex::new(vec![m]), Complex64::new(1.0, 0.0))))
}

/// Coefficient of the de la Vallée-Poussin kernel `V_l` at frequency `m`:
/// 1 for `|m| ≤ l`, `(2l − |m|)/l` up to `2l − 1`, zero beyond.
pub fn vallee_poussin_coeff(l: u64, m: i64) -> f64 {
    assert!(l >= 1, "de la Vallée-Poussin kernel needs l >= 1");
    let a = m.unsigned_abs();
    if a <= l {
        1.0
    } else if a < 2 * l {
        (2 * l - a) as f64 / l as f64
    } else {
        0.0
    }
}

/// De la Vallée-Poussin kernel `V_l = l^{-1} Σ_{k=l}^{2l-1} D_k`, `l ≥ 1`.
pub fn vallee_poussin_kernel(l: u64) -> TrigPoly {
    let top = 2 * l as i64 - 1;
    TrigPoly::from_terms(
        1,
        (-top..=top).map(|m| (FreqIndex::new(vec![m]), Complex64::new(vallee_poussin_coeff(l, m), 0.0))),
    )
}

/// Tensor-product extension of a univariate kernel to `d` variables.
pub fn tensor_kernel(kernel_1d: &TrigPoly, d: usize) -> TrigPoly {
    assert_eq!(kernel_1d.dim(), 1, "tensor_kernel expects a univariate kernel");
    assert!(d >= 1, "dimension must be at least 1");
    let factors: Vec<(i64, Complex64)> = kernel_1d.iter().map(|(k, c)| (k.components()[0], *c)).collect();
    let mut acc: Vec<(Vec<i64>, Complex64)> = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
    for _ in 0..d {
        acc = acc
            .iter()
            .flat_map(|(k, c)| {
                factors.iter().map(move |(m, w)| {
                    let mut kk = k.clone();
                    kk.push(*m);
                    (kk, c * w)
                })
            })
            .collect();
    }
    TrigPoly::from_terms(d, acc.into_iter().map(|(k, c)| (FreqIndex::new(k), c)))
}

/// `f ∗ g` with the normalized measure: coefficient-wise product, on the box
/// of halfwidth `min(halfwidth(f), max_freq(g))`.
pub fn convolve(f: &CoeffGrid, g: &TrigPoly) -> Result<CoeffGrid> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: g.dim(),
        });
    }
    let h = f.halfwidth().min(g.max_freq() as usize);
    let mut out = CoeffGrid::zeros(f.dim(), h);
    for (k, w) in g.iter() {
        if k.sup_norm() as usize <= h {
            out.set(k.components(), f.get(k.components()) * w);
        }
    }
    Ok(out.with_real_tag(f.is_real_valued() && g.is_conj_symmetric()))
}

/// Truncated Bernoulli kernel `Σ_{k=1}^{K} k^{-r} cos(kx − πα/2)`:
/// coefficient `k^{-r} e^{-iπα/2}/2` at `+k` and its conjugate at `−k`.
pub fn bernoulli_kernel(r: f64, alpha: f64, truncation: u64) -> TrigPoly {
    assert!(r > 0.0, "smoothness must be positive");
    assert!(truncation >= 1, "truncation must be at least 1");
    let phase = Complex64::from_polar(1.0, -FRAC_PI_2 * alpha);
    let mut p = TrigPoly::zero(1);
    for k in 1..=truncation {
        let c = phase * (0.5 * (k as f64).powf(-r));
        p.insert(FreqIndex::new(vec![k as i64]), c);
        p.insert(FreqIndex::new(vec![-(k as i64)]), c.conj());
    }
    p
}

/// Smallest `K` whose L2 tail bound `∫_K^∞ x^{-2r} dx = K^{1-2r}/(2r-1)`
/// (which dominates `Σ_{k>K} k^{-2r}`) is below `tail`.
pub fn bernoulli_truncation(r: f64, tail: f64) -> Result<u64> {
    if r <= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "Bernoulli kernel with r = {r} is not square-summable"
        )));
    }
    if tail <= 0.0 {
        return Err(Error::InvalidArgument("tail tolerance must be positive".into()));
    }
    let e = 2.0 * r - 1.0;
    let k = (tail * e).powf(-1.0 / e).ceil().max(1.0);
    if !k.is_finite() || k > 1e12 {
        return Err(Error::InvalidArgument(format!(
            "truncation for r = {r} and tail {tail} is impractically large"
        )));
    }
    Ok(k as u64)
}

/// Writes the coefficient dump format: a `# dim = d` header followed by one
/// line `k_1 ... k_d  re  im` per nonzero coefficient in lexicographic order.
pub fn write_dump<W: Write>(poly: &TrigPoly, header: &[(String, String)], mut out: W) -> Result<()> {
    writeln!(out, "# dim = {}", poly.dim())?;
    for (key, value) in header {
        writeln!(out, "# {key} = {value}")?;
    }
    for (k, c) in poly.iter() {
        let ks: Vec<String> = k.components().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}  {:e}  {:e}", ks.join(" "), c.re, c.im)?;
    }
    Ok(())
}

/// Parses the coefficient dump format. Comment lines start with `#`; the
/// dimension comes from the `# dim = d` header or the first data line.
pub fn read_dump<R: BufRead>(input: R) -> Result<TrigPoly> {
    let mut dim: Option<usize> = None;
    let mut terms = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "dim" {
                    let d = value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("line {}: bad dimension", lineno + 1)))?;
                    dim = Some(d);
                }
            }
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(Error::Parse(format!(
                "line {}: expected `k_1 ... k_d re im`",
                lineno + 1
            )));
        }
        let d = tokens.len() - 2;
        match dim {
            Some(expected) if expected != d => {
                return Err(Error::Parse(format!(
                    "line {}: {d} frequency components, expected {expected}",
                    lineno + 1
                )))
            }
            None => dim = Some(d),
            _ => {}
        }
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
        let k: Vec<i64> = tokens[..d]
            .iter()
            .map(|t| t.parse::<i64>().map_err(|_| bad("frequency")))
            .collect::<Result<_>>()?;
        let re = tokens[d].parse::<f64>().map_err(|_| bad("real part"))?;
        let im = tokens[d + 1].parse::<f64>().map_err(|_| bad("imaginary part"))?;
        terms.push((FreqIndex::new(k), Complex64::new(re, im)));
    }
    let dim = dim.ok_or_else(|| Error::Parse("empty dump without a dim header".into()))?;
    if dim == 0 {
        return Err(Error::Parse("dimension must be at least 1".into()));
    }
    Ok(TrigPoly::from_terms(dim, terms))
}
