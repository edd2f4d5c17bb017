//! Gowers-Host-Kra norms, the 2^k-linear Gowers inner product, the sharp
//! constants, the deficit functional and the closed-form Gaussian oracle.
//!
//! Conjugation convention: slot α ∈ {0,1}^k (stored as a bitmask, bit i is
//! α_{i+1}) carries a conjugation iff the number of ones in α is odd. Sign
//! errors here are silent for real inputs, so the complex unit tests pin it.
//!
//! The U² base case evaluates `‖f̂‖₄` on a zero-padded DFT. With padding of at
//! least 2× the support per axis the padded power sum reproduces the lattice
//! Gowers sum exactly (no wraparound), so the FFT route and the translate-
//! multiply recursion agree to rounding, not merely to quadrature error.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GhkError, Result};
use crate::grid::{lp_norm, unravel, GridFunction};
use crate::linalg;

/// Default resource-guard threshold for the h-slice recursion.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Degree and ambient dimension of a Gowers norm computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GowersParams {
    pub k: usize,
    pub n: usize,
}

impl GowersParams {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 1 || n < 1 {
            return Err(GhkError::InvalidParameter(format!(
                "GowersParams requires k >= 1 and n >= 1, got k={k}, n={n}"
            )));
        }
        Ok(GowersParams { k, n })
    }

    pub fn holder_exponent(&self) -> f64 {
        holder_exponent(self.k)
    }

    pub fn sharp_constant(&self) -> Result<f64> {
        sharp_constant(self.k, self.n)
    }
}

/// The critical exponent p_k = 2^k/(k+1).
pub fn holder_exponent(k: usize) -> f64 {
    assert!(k >= 1, "holder_exponent requires k >= 1");
    2f64.powi(k as i32) / (k as f64 + 1.0)
}

fn sharp_constant_1d(k: usize) -> f64 {
    // A(1) = 1 is the degenerate base used by the Young-constant relation.
    if k == 1 {
        return 1.0;
    }
    let kf = k as f64;
    let two_k = 2f64.powi(k as i32);
    2f64.powf(kf / two_k) / (kf + 1.0).powf((kf + 1.0) / (2.0 * two_k))
}

/// The optimal constant A(k,n) = A(k,1)^n of the norm inequality
/// `‖f‖_{U^k} <= A(k,n) ‖f‖_{p_k}`, for k >= 2.
pub fn sharp_constant(k: usize, n: usize) -> Result<f64> {
    if k < 2 || n < 1 {
        return Err(GhkError::InvalidParameter(format!(
            "sharp_constant requires k >= 2 and n >= 1, got k={k}, n={n}"
        )));
    }
    Ok(sharp_constant_1d(k).powi(n as i32))
}

/// Sharp one-dimensional Young coefficient C_t = (t^{1/t}/t'^{1/t'})^{1/2}.
pub fn young_c(t: f64) -> Result<f64> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(GhkError::Domain(format!("young_c requires t > 1, got {t}")));
    }
    Ok(young_c_ext(t))
}

/// Continuous extension of `young_c` to t = 1 (limit value 1), used by the
/// constant-identity checks where C_1 appears.
pub(crate) fn young_c_ext(t: f64) -> f64 {
    if t == 1.0 {
        return 1.0;
    }
    let tp = t / (t - 1.0);
    (t.powf(1.0 / t) / tp.powf(1.0 / tp)).sqrt()
}

/// The sharp Young constant B(k+1,n) tied to A by
/// `A(k,n)^{2^k} B(k+1,n)^{k+1} = A(k+1,n)^{2^{k+1}}`, with A(1,n) = 1.
pub fn sharp_young_b(k: usize, n: usize) -> Result<f64> {
    if k < 1 || n < 1 {
        return Err(GhkError::InvalidParameter(format!(
            "sharp_young_b requires k >= 1 and n >= 1, got k={k}, n={n}"
        )));
    }
    let ak = sharp_constant_1d(k).powi(n as i32);
    let ak1 = sharp_constant_1d(k + 1).powi(n as i32);
    let num = ak1.powf(2f64.powi(k as i32 + 1));
    let den = ak.powf(2f64.powi(k as i32));
    Ok((num / den).powf(1.0 / (k as f64 + 1.0)))
}

// ---------------------------------------------------------------------------
// FFT machinery
// ---------------------------------------------------------------------------

fn padded_shape(shape: &[usize]) -> Vec<usize> {
    shape.iter().map(|&s| (2 * s).next_power_of_two()).collect()
}

/// In-place forward DFT along every axis of a row-major n-d array.
fn fft_nd(values: &mut [Complex64], shape: &[usize]) {
    let total: usize = shape.iter().product();
    debug_assert_eq!(values.len(), total);
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..shape.len() {
        let len = shape[axis];
        if len == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(len);
        let stride: usize = shape[axis + 1..].iter().product();
        let block = stride * len;
        let mut line = vec![Complex64::default(); len];
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = values[start + off + t * stride];
                }
                fft.process(&mut line);
                for (t, slot) in line.iter().enumerate() {
                    values[start + off + t * stride] = *slot;
                }
            }
        }
    }
}

/// Zero-padded spectrum of `f` (phases from the grid origin omitted; they
/// cancel in every power sum this crate forms).
fn padded_spectrum(f: &GridFunction) -> (Vec<Complex64>, Vec<usize>) {
    let pshape = padded_shape(f.shape());
    let total: usize = pshape.iter().product();
    let mut padded = vec![Complex64::default(); total];
    let mut idx = vec![0usize; f.dim()];
    for (lin, &v) in f.values().iter().enumerate() {
        unravel(lin, f.shape(), &mut idx);
        let mut plin = 0usize;
        for a in 0..f.dim() {
            plin = plin * pshape[a] + idx[a];
        }
        padded[plin] = v;
    }
    fft_nd(&mut padded, &pshape);
    (padded, pshape)
}

/// ‖f‖_{U²} = ‖f̂‖₄ via the zero-padded DFT, normalized so Plancherel holds
/// with the cell-volume quadrature weights.
pub fn u2_norm(f: &GridFunction) -> f64 {
    u2_power(f).powf(0.25)
}

/// ‖f‖_{U²}^4.
fn u2_power(f: &GridFunction) -> f64 {
    let (spec, pshape) = padded_spectrum(f);
    let m_total: usize = pshape.iter().product();
    let mut terms: Vec<f64> = spec.iter().map(|c| c.norm_sqr() * c.norm_sqr()).collect();
    let s = crate::grid::stable_sum(&mut terms);
    let vol = f.cell_volume();
    s * vol.powi(3) / m_total as f64
}

// ---------------------------------------------------------------------------
// Recursion over translate-multiply slices
// ---------------------------------------------------------------------------

/// a(x) · conj(b(x + h·spacing)), zero-padded; the slice map of the recursion.
pub fn shifted_product(a: &GridFunction, b: &GridFunction, h: &[i64]) -> GridFunction {
    product_with_shifted(a, b, h)
}

/// All lattice offsets with per-axis range [-(s-1), s-1] (the h-grid of the
/// recursion; outside it the supports cannot overlap).
pub fn lattice_offsets(shape: &[usize]) -> Vec<Vec<i64>> {
    offsets(shape)
}

fn product_with_shifted(a: &GridFunction, b: &GridFunction, h: &[i64]) -> GridFunction {
    let shape = a.shape();
    let dim = a.dim();
    let mut g = GridFunction::zeros(&a.spec());
    let mut idx = vec![0usize; dim];
    let mut jdx = vec![0usize; dim];
    'cells: for lin in 0..a.len() {
        unravel(lin, shape, &mut idx);
        for ax in 0..dim {
            let j = idx[ax] as i64 + h[ax];
            if j < 0 || j >= shape[ax] as i64 {
                continue 'cells;
            }
            jdx[ax] = j as usize;
        }
        let shifted = b.values()[crate::grid::ravel(&jdx, shape)];
        g.values_mut()[lin] = a.values()[lin] * shifted.conj();
    }
    g
}

fn offsets(shape: &[usize]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for &s in shape {
        let mut next = Vec::with_capacity(out.len() * (2 * s - 1));
        for prefix in &out {
            for h in -(s as i64 - 1)..=(s as i64 - 1) {
                let mut p = prefix.clone();
                p.push(h);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn offsets_count(shape: &[usize]) -> u128 {
    shape.iter().map(|&s| (2 * s - 1) as u128).product()
}

fn check_budget(shape: &[usize], levels: u32, budget: u128) -> Result<()> {
    let per_level = offsets_count(shape);
    let mut estimated: u128 = 1;
    for _ in 0..levels {
        estimated = estimated.saturating_mul(per_level);
        if estimated > budget {
            return Err(GhkError::Budget { estimated, budget });
        }
    }
    Ok(())
}

/// ‖f‖_{U^k} with the default resource budget.
pub fn uk_norm(f: &GridFunction, k: usize) -> Result<f64> {
    uk_norm_budgeted(f, k, DEFAULT_BUDGET)
}

/// ‖f‖_{U^k}; refuses when the slice-count estimate exceeds `budget`.
///
/// The recursion over lattice offsets descends to the FFT base at k = 2;
/// k = 1 returns |Σ f · cellvol|.
pub fn uk_norm_budgeted(f: &GridFunction, k: usize, budget: u128) -> Result<f64> {
    if k < 1 {
        return Err(GhkError::InvalidParameter("uk_norm requires k >= 1".into()));
    }
    if k >= 3 {
        check_budget(f.shape(), k as u32 - 2, budget)?;
    }
    let p = uk_power(f, k);
    Ok(p.max(0.0).powf(1.0 / 2f64.powi(k as i32)))
}

/// ‖f‖_{U^k}^{2^k} with the FFT base at k = 2.
fn uk_power(f: &GridFunction, k: usize) -> f64 {
    match k {
        1 => {
            // ‖f‖_{U^1}^{2^1} = |∫f|²
            let vol = f.cell_volume();
            let mut re: Vec<f64> = f.values().iter().map(|v| v.re).collect();
            let mut im: Vec<f64> = f.values().iter().map(|v| v.im).collect();
            let s = Complex64::new(
                crate::grid::stable_sum(&mut re),
                crate::grid::stable_sum(&mut im),
            ) * vol;
            s.norm_sqr()
        }
        2 => u2_power(f),
        _ => {
            let vol = f.cell_volume();
            let mut total = 0.0;
            let mut comp = 0.0;
            for h in offsets(f.shape()) {
                let slice = product_with_shifted(f, f, &h);
                let term = uk_power(&slice, k - 1) * vol;
                let t = total + term;
                if total.abs() >= term.abs() {
                    comp += (total - t) + term;
                } else {
                    comp += (term - t) + total;
                }
                total = t;
            }
            total + comp
        }
    }
}

/// Reference route for cross-validation: the recursion taken all the way to
/// the U¹ base, never touching the FFT. Exponentially slower; small grids.
pub fn uk_norm_via_recursion(f: &GridFunction, k: usize, budget: u128) -> Result<f64> {
    if k < 1 {
        return Err(GhkError::InvalidParameter("uk_norm requires k >= 1".into()));
    }
    if k >= 2 {
        check_budget(f.shape(), k as u32 - 1, budget)?;
    }
    fn power(f: &GridFunction, k: usize) -> f64 {
        if k == 1 {
            let vol = f.cell_volume();
            let s: Complex64 = f.values().iter().sum::<Complex64>() * vol;
            return s.norm_sqr();
        }
        let vol = f.cell_volume();
        let mut total = 0.0;
        for h in offsets(f.shape()) {
            let slice = product_with_shifted(f, f, &h);
            total += power(&slice, k - 1) * vol;
        }
        total
    }
    Ok(power(f, k).max(0.0).powf(1.0 / 2f64.powi(k as i32)))
}

/// The Gowers inner product 𝒯_k of 2^k functions (slot α conjugated when the
/// parity of α is odd). `fs[α]` is indexed by the bitmask of α.
pub fn gowers_inner(fs: &[GridFunction], k: usize) -> Result<Complex64> {
    gowers_inner_budgeted(fs, k, DEFAULT_BUDGET)
}

pub fn gowers_inner_budgeted(fs: &[GridFunction], k: usize, budget: u128) -> Result<Complex64> {
    if k < 1 {
        return Err(GhkError::InvalidParameter(
            "gowers_inner requires k >= 1".into(),
        ));
    }
    let want = 1usize << k;
    if fs.len() != want {
        return Err(GhkError::InvalidParameter(format!(
            "gowers_inner at degree k={k} needs {want} functions, got {}",
            fs.len()
        )));
    }
    for g in &fs[1..] {
        if !fs[0].same_grid(g) {
            return Err(GhkError::GridMismatch(
                "gowers_inner inputs must share one grid".into(),
            ));
        }
    }
    if k >= 3 {
        check_budget(fs[0].shape(), k as u32 - 2, budget)?;
    }
    let refs: Vec<&GridFunction> = fs.iter().collect();
    Ok(inner_recursive(&refs, k))
}

fn inner_recursive(fs: &[&GridFunction], k: usize) -> Complex64 {
    match k {
        1 => {
            let vol = fs[0].cell_volume();
            let s0: Complex64 = fs[0].values().iter().sum::<Complex64>() * vol;
            let s1: Complex64 = fs[1].values().iter().sum::<Complex64>() * vol;
            s0 * s1.conj()
        }
        2 => inner_fft_base(fs),
        _ => {
            // split off the last coordinate of the cube: slice β pairs
            // fs[β] (α_k = 0) with fs[β | top] (α_k = 1) shifted by h.
            let top = 1usize << (k - 1);
            let vol = fs[0].cell_volume();
            let mut total = Complex64::default();
            for h in offsets(fs[0].shape()) {
                let slices: Vec<GridFunction> = (0..top)
                    .map(|beta| product_with_shifted(fs[beta], fs[beta | top], &h))
                    .collect();
                let refs: Vec<&GridFunction> = slices.iter().collect();
                total += inner_recursive(&refs, k - 1) * vol;
            }
            total
        }
    }
}

/// Degree-2 base: 𝒯₂ = ∫ f̂_{00} f̂_{11} conj(f̂_{01} f̂_{10}), evaluated on the
/// common zero-padded spectrum (exact for the lattice sum).
fn inner_fft_base(fs: &[&GridFunction]) -> Complex64 {
    let (s00, pshape) = padded_spectrum(fs[0]);
    let (s10, _) = padded_spectrum(fs[1]);
    let (s01, _) = padded_spectrum(fs[2]);
    let (s11, _) = padded_spectrum(fs[3]);
    let m_total: usize = pshape.iter().product();
    let mut re: Vec<f64> = Vec::with_capacity(m_total);
    let mut im: Vec<f64> = Vec::with_capacity(m_total);
    for i in 0..m_total {
        let t = s00[i] * s11[i] * (s01[i] * s10[i]).conj();
        re.push(t.re);
        im.push(t.im);
    }
    let vol = fs[0].cell_volume();
    let scale = vol.powi(3) / m_total as f64;
    Complex64::new(
        crate::grid::stable_sum(&mut re) * scale,
        crate::grid::stable_sum(&mut im) * scale,
    )
}

/// Deficit δ = 1 − ‖f‖_{U^k} / (A(k,n)·‖f‖_{p_k}).
///
/// May be slightly negative from quadrature; reported raw, never clamped.
pub fn deficit(f: &GridFunction, k: usize) -> Result<f64> {
    deficit_budgeted(f, k, DEFAULT_BUDGET)
}

pub fn deficit_budgeted(f: &GridFunction, k: usize, budget: u128) -> Result<f64> {
    let a = sharp_constant(k, f.dim())?;
    let p = holder_exponent(k);
    let norm_p = lp_norm(f, p)?;
    if norm_p == 0.0 {
        return Err(GhkError::Domain("deficit of the zero function".into()));
    }
    let norm_u = uk_norm_budgeted(f, k, budget)?;
    Ok(1.0 - norm_u / (a * norm_p))
}

// ---------------------------------------------------------------------------
// Closed-form Gaussian inner products
// ---------------------------------------------------------------------------

/// One Gaussian factor m·exp(−(x−c)ᵀ M (x−c)).
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct GaussianEntry {
    pub amplitude: f64,
    /// n×n positive-definite precision matrix, row-major.
    pub precision: Vec<f64>,
    pub center: Vec<f64>,
}

/// 2^k Gaussian factors indexed by the cube vertex bitmask.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct GaussianTuple {
    pub k: usize,
    pub n: usize,
    pub entries: Vec<GaussianEntry>,
}

impl GaussianTuple {
    pub fn new(k: usize, n: usize, entries: Vec<GaussianEntry>) -> Result<Self> {
        if k < 1 || n < 1 {
            return Err(GhkError::InvalidParameter(
                "GaussianTuple requires k >= 1, n >= 1".into(),
            ));
        }
        if entries.len() != 1 << k {
            return Err(GhkError::InvalidParameter(format!(
                "GaussianTuple needs {} entries, got {}",
                1 << k,
                entries.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if !(e.amplitude > 0.0) {
                return Err(GhkError::InvalidParameter(format!(
                    "entry {i}: amplitude must be positive"
                )));
            }
            if e.precision.len() != n * n || e.center.len() != n {
                return Err(GhkError::InvalidParameter(format!(
                    "entry {i}: precision must be {n}x{n} and center length {n}"
                )));
            }
            if !linalg::is_spd(&e.precision, n) {
                return Err(GhkError::InvalidParameter(format!(
                    "entry {i}: precision matrix is not positive-definite"
                )));
            }
        }
        Ok(GaussianTuple { k, n, entries })
    }

    /// Isotropic entry helper for n = 1 or scalar·I precision.
    pub fn isotropic_entry(n: usize, amplitude: f64, a: f64, center: Vec<f64>) -> GaussianEntry {
        let mut precision = vec![0.0; n * n];
        for i in 0..n {
            precision[i * n + i] = a;
        }
        GaussianEntry {
            amplitude,
            precision,
            center,
        }
    }

    /// Sample entry α on a grid.
    pub fn synthesize_entry(&self, alpha: usize, spec: &crate::grid::GridSpec) -> Result<GridFunction> {
        let e = &self.entries[alpha];
        let n = self.n;
        GridFunction::from_fn(spec, |x| {
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += (x[i] - e.center[i]) * e.precision[i * n + j] * (x[j] - e.center[j]);
                }
            }
            Complex64::new(e.amplitude * (-q).exp(), 0.0)
        })
    }
}

/// Closed form for 𝒯_k on a Gaussian tuple:
/// `Π m_α · π^{(k+1)n/2} · det(Q)^{-1/2} · exp(−Σ_α (c_α − B_α T)ᵀ M_α (c_α − B_α T))`
/// with `Q = Σ_α (b_α b_αᵀ) ⊗ M_α`, `b_α = (1, α)`, `B_α(x, h⃗) = x + α·h⃗` and
/// `T` solving `Q T = Σ_α B_αᵀ M_α c_α`. Exact up to floating point.
pub fn gaussian_tuple_inner(t: &GaussianTuple) -> Result<f64> {
    let k = t.k;
    let n = t.n;
    let d = (k + 1) * n;
    let mut q = vec![0.0f64; d * d];
    let mut rhs = vec![0.0f64; d];
    for (alpha, e) in t.entries.iter().enumerate() {
        let b = cube_vector(alpha, k);
        // M_α · c_α
        let mut mc = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                mc[i] += e.precision[i * n + j] * e.center[j];
            }
        }
        for r in 0..=k {
            if b[r] == 0.0 {
                continue;
            }
            for i in 0..n {
                rhs[r * n + i] += b[r] * mc[i];
            }
            for c in 0..=k {
                if b[c] == 0.0 {
                    continue;
                }
                let w = b[r] * b[c];
                for i in 0..n {
                    for j in 0..n {
                        q[(r * n + i) * d + (c * n + j)] += w * e.precision[i * n + j];
                    }
                }
            }
        }
    }
    let det = linalg::spd_det(&q, d)
        .map_err(|_| GhkError::Internal("Q not positive-definite".into()))?;
    let t_vec = linalg::spd_solve(&q, &rhs, d)
        .map_err(|_| GhkError::Internal("Q solve failed".into()))?;
    // E = Σ_α (c_α − B_α T)ᵀ M_α (c_α − B_α T)
    let mut exponent = 0.0;
    for (alpha, e) in t.entries.iter().enumerate() {
        let b = cube_vector(alpha, k);
        let mut r = vec![0.0; n];
        for i in 0..n {
            let mut bt = 0.0;
            for blk in 0..=k {
                bt += b[blk] * t_vec[blk * n + i];
            }
            r[i] = e.center[i] - bt;
        }
        for i in 0..n {
            for j in 0..n {
                exponent += r[i] * e.precision[i * n + j] * r[j];
            }
        }
    }
    let mut amp = 1.0;
    for e in &t.entries {
        amp *= e.amplitude;
    }
    Ok(amp * std::f64::consts::PI.powf(d as f64 / 2.0) / det.sqrt() * (-exponent).exp())
}

/// b_α = (1, α_1, ..., α_k).
fn cube_vector(alpha: usize, k: usize) -> Vec<f64> {
    let mut b = vec![0.0; k + 1];
    b[0] = 1.0;
    for i in 0..k {
        b[1 + i] = ((alpha >> i) & 1) as f64;
    }
    b
}

/// Parity of ones in the bitmask of α (the conjugation indicator).
pub fn parity(alpha: usize) -> bool {
    (alpha.count_ones() & 1) == 1
}
