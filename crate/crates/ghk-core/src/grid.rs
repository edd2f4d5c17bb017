//! Discretized function carrier on R^n.
//!
//! A [`GridFunction`] samples a complex-valued function at the cell centers of
//! a uniform rectangular grid. Quadrature is the midpoint cell sum throughout:
//! the weight of every cell is `cell_volume = prod(spacing)`. Functions are
//! zero outside their box; translations zero-pad and never wrap.
//!
//! Norm sums are accumulated in ascending order of term magnitude with
//! Neumaier compensation, so `lp_norm` is bit-identical under any permutation
//! of the cells. The rearrangement module relies on that exactness.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{GhkError, Result};

/// Complex-valued function sampled on a uniform rectangular grid over a box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dim: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    values: Vec<Complex64>,
}

/// Grid geometry without values; used for synthesis and CLI parsing.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

impl GridSpec {
    /// 1-d spec with `n` cells whose centers fill the box `[lo, hi]`.
    pub fn line(n: usize, lo: f64, hi: f64) -> Self {
        let d = (hi - lo) / n as f64;
        GridSpec {
            shape: vec![n],
            spacing: vec![d],
            origin: vec![lo + 0.5 * d],
        }
    }

    /// n-d spec from per-axis cell counts and box edges.
    pub fn boxed(cells: &[usize], lo: &[f64], hi: &[f64]) -> Self {
        let spacing: Vec<f64> = cells
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&m, (&a, &b))| (b - a) / m as f64)
            .collect();
        let origin: Vec<f64> = lo
            .iter()
            .zip(&spacing)
            .map(|(&a, &d)| a + 0.5 * d)
            .collect();
        GridSpec {
            shape: cells.to_vec(),
            spacing,
            origin,
        }
    }
}

impl GridFunction {
    pub fn new(
        shape: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 {
            return Err(GhkError::InvalidParameter("empty shape".into()));
        }
        if shape.iter().any(|&s| s == 0) {
            return Err(GhkError::InvalidParameter("zero-length axis".into()));
        }
        if spacing.len() != dim || origin.len() != dim {
            return Err(GhkError::InvalidParameter(
                "shape, spacing and origin must have equal length".into(),
            ));
        }
        if spacing.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(GhkError::InvalidParameter(
                "spacing entries must be strictly positive and finite".into(),
            ));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(GhkError::InvalidParameter(format!(
                "value buffer length {} != product of shape {}",
                values.len(),
                len
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(GhkError::InvalidParameter(
                "values must be finite (no NaN/Inf)".into(),
            ));
        }
        Ok(GridFunction {
            dim,
            shape,
            spacing,
            origin,
            values,
        })
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        let len = spec.shape.iter().product();
        GridFunction {
            dim: spec.shape.len(),
            shape: spec.shape.clone(),
            spacing: spec.spacing.clone(),
            origin: spec.origin.clone(),
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Sample `f` at every cell center.
    pub fn from_fn(spec: &GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Result<Self> {
        let len: usize = spec.shape.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut x = vec![0.0; spec.shape.len()];
        let mut idx = vec![0usize; spec.shape.len()];
        for lin in 0..len {
            unravel(lin, &spec.shape, &mut idx);
            for a in 0..spec.shape.len() {
                x[a] = spec.origin[a] + idx[a] as f64 * spec.spacing[a];
            }
            values.push(f(&x));
        }
        GridFunction::new(
            spec.shape.clone(),
            spec.spacing.clone(),
            spec.origin.clone(),
            values,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            shape: self.shape.clone(),
            spacing: self.spacing.clone(),
            origin: self.origin.clone(),
        }
    }

    /// Quadrature weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinates of the center of cell `lin` (row-major index).
    pub fn cell_center(&self, lin: usize, out: &mut [f64]) {
        let mut rem = lin;
        for a in (0..self.dim).rev() {
            let i = rem % self.shape[a];
            rem /= self.shape[a];
            out[a] = self.origin[a] + i as f64 * self.spacing[a];
        }
    }

    /// True when `other` lives on the identical grid.
    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.shape == other.shape && self.spacing == other.spacing && self.origin == other.origin
    }

    /// |f| as a real-valued grid function.
    pub fn modulus(&self) -> GridFunction {
        let mut g = self.clone();
        for v in &mut g.values {
            *v = Complex64::new(v.norm(), 0.0);
        }
        g
    }

    /// f/|f| where |f| > 0, zero elsewhere.
    pub fn unimodular(&self) -> GridFunction {
        let mut g = self.clone();
        for v in &mut g.values {
            let m = v.norm();
            *v = if m > 0.0 {
                *v / m
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        g
    }

    /// arg(f)/2π in [0,1) per cell (0 where f = 0).
    pub fn phase_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| {
                if v.norm() > 0.0 {
                    let p = v.arg() / (2.0 * std::f64::consts::PI);
                    p.rem_euclid(1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Pointwise scale.
    pub fn scaled(&self, c: Complex64) -> GridFunction {
        let mut g = self.clone();
        for v in &mut g.values {
            *v *= c;
        }
        g
    }

    /// Pointwise sum; grids must match.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(GhkError::GridMismatch("add on different grids".into()));
        }
        let mut g = self.clone();
        for (v, w) in g.values.iter_mut().zip(&other.values) {
            *v += *w;
        }
        Ok(g)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }
}

pub(crate) fn unravel(lin: usize, shape: &[usize], out: &mut [usize]) {
    let mut rem = lin;
    for a in (0..shape.len()).rev() {
        out[a] = rem % shape[a];
        rem /= shape[a];
    }
}

pub(crate) fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    let mut lin = 0usize;
    for a in 0..shape.len() {
        lin = lin * shape[a] + idx[a];
    }
    lin
}

/// Permutation-invariant compensated sum: terms are sorted ascending by
/// magnitude before Neumaier accumulation, so the result does not depend on
/// the order the caller produced them in.
pub(crate) fn stable_sum(terms: &mut Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &t in terms.iter() {
        let u = s + t;
        if s.abs() >= t.abs() {
            c += (s - u) + t;
        } else {
            c += (t - u) + s;
        }
        s = u;
    }
    s + c
}

/// L^p norm by the midpoint cell sum: `(Σ |f|^p · cellvol)^{1/p}`.
///
/// Requires `p >= 1`. The sum is exact under cell permutation (see module
/// docs); a zero function returns 0.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(GhkError::InvalidParameter(format!(
            "lp_norm requires finite p >= 1, got {p}"
        )));
    }
    let mut terms: Vec<f64> = f
        .values()
        .iter()
        .map(|v| {
            let m = v.norm();
            if m == 0.0 {
                0.0
            } else {
                m.powf(p)
            }
        })
        .collect();
    let s = stable_sum(&mut terms);
    Ok((s * f.cell_volume()).powf(1.0 / p))
}

/// One dyadic level of the layer-cake decomposition.
#[derive(Clone, Debug)]
pub struct DyadicLevel {
    pub mask: Vec<bool>,
    pub cell_count: usize,
    pub measure: f64,
}

/// Sparse dyadic decomposition of |f|: cell x sits in level j iff
/// `2^j <= |f(x)| < 2^{j+1}`; zero cells belong to no level.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition {
    pub levels: BTreeMap<i32, DyadicLevel>,
}

impl DyadicDecomposition {
    pub fn measure(&self, j: i32) -> f64 {
        self.levels.get(&j).map_or(0.0, |l| l.measure)
    }
}

/// Dyadic level index of a positive value: the unique j with 2^j <= v < 2^{j+1}.
pub(crate) fn dyadic_level(v: f64) -> i32 {
    debug_assert!(v > 0.0 && v.is_finite());
    let mut j = v.log2().floor() as i32;
    // log2+floor can land one off at powers of two; correct exactly.
    while exp2i(j + 1) <= v {
        j += 1;
    }
    while v < exp2i(j) {
        j -= 1;
    }
    j
}

pub(crate) fn exp2i(j: i32) -> f64 {
    (j as f64).exp2()
}

/// Layer-cake decomposition of |f| into dyadic levels.
pub fn layer_cake(f: &GridFunction) -> DyadicDecomposition {
    let vol = f.cell_volume();
    let n = f.len();
    let mut levels: BTreeMap<i32, DyadicLevel> = BTreeMap::new();
    for (i, v) in f.values().iter().enumerate() {
        let m = v.norm();
        if m > 0.0 {
            let j = dyadic_level(m);
            let entry = levels.entry(j).or_insert_with(|| DyadicLevel {
                mask: vec![false; n],
                cell_count: 0,
                measure: 0.0,
            });
            entry.mask[i] = true;
            entry.cell_count += 1;
        }
    }
    for l in levels.values_mut() {
        l.measure = l.cell_count as f64 * vol;
    }
    DyadicDecomposition { levels }
}

/// Dyadic Lorentz seminorm surrogate computed from the layer cake of |f|:
/// `(Σ_j 2^{j·qt} L_j^{qt/q})^{1/qt}`, or `sup_j 2^j L_j^{1/q}` when
/// `qt = ∞`. Comparable to the rearrangement-integral Lorentz norm within
/// absolute constants (`2^{-1/qt} <= ratio <= 2`).
pub fn lorentz_seminorm(f: &GridFunction, q: f64, qt: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(GhkError::InvalidParameter(format!(
            "lorentz_seminorm requires finite q >= 1, got {q}"
        )));
    }
    if !(qt >= 1.0) {
        return Err(GhkError::InvalidParameter(format!(
            "lorentz_seminorm requires qt >= 1 (or infinity), got {qt}"
        )));
    }
    let cake = layer_cake(f);
    if cake.levels.is_empty() {
        return Ok(0.0);
    }
    if qt.is_infinite() {
        let mut best = 0.0f64;
        for (&j, l) in &cake.levels {
            best = best.max(exp2i(j) * l.measure.powf(1.0 / q));
        }
        Ok(best)
    } else {
        let mut terms: Vec<f64> = cake
            .levels
            .iter()
            .map(|(&j, l)| exp2i(j).powf(qt) * l.measure.powf(qt / q))
            .collect();
        let s = stable_sum(&mut terms);
        Ok(s.powf(1.0 / qt))
    }
}

/// Super-level set `{|f| > s}` with its measure.
#[derive(Clone, Debug)]
pub struct SuperLevelSet {
    pub mask: Vec<bool>,
    pub cell_count: usize,
    pub measure: f64,
}

impl SuperLevelSet {
    /// Indicator of the set as a grid function on `spec`.
    pub fn indicator(&self, spec: &GridSpec) -> GridFunction {
        let mut g = GridFunction::zeros(spec);
        for (v, &m) in g.values_mut().iter_mut().zip(&self.mask) {
            if m {
                *v = Complex64::new(1.0, 0.0);
            }
        }
        g
    }
}

/// Mask and measure of `{|f| > s}` for `s > 0`.
pub fn super_level_mask(f: &GridFunction, s: f64) -> Result<SuperLevelSet> {
    if !(s > 0.0) {
        return Err(GhkError::InvalidParameter(format!(
            "super_level_mask requires s > 0, got {s}"
        )));
    }
    let mask: Vec<bool> = f.values().iter().map(|v| v.norm() > s).collect();
    let cell_count = mask.iter().filter(|&&b| b).count();
    Ok(SuperLevelSet {
        measure: cell_count as f64 * f.cell_volume(),
        cell_count,
        mask,
    })
}

/// The translate-multiply primitive of the U^k recursion:
/// `g(x) = f(x + h·spacing) · conj(f(x))` on the same grid, with zero padding
/// outside the box (no wraparound). `h` is a lattice offset in whole steps.
pub fn translate_multiply(f: &GridFunction, h: &[i64]) -> Result<GridFunction> {
    if h.len() != f.dim() {
        return Err(GhkError::InvalidParameter(format!(
            "offset dimension {} != grid dimension {}",
            h.len(),
            f.dim()
        )));
    }
    let shape = f.shape();
    let mut g = GridFunction::zeros(&f.spec());
    let mut idx = vec![0usize; f.dim()];
    let mut jdx = vec![0usize; f.dim()];
    'cells: for lin in 0..f.len() {
        unravel(lin, shape, &mut idx);
        for a in 0..f.dim() {
            let j = idx[a] as i64 + h[a];
            if j < 0 || j >= shape[a] as i64 {
                continue 'cells;
            }
            jdx[a] = j as usize;
        }
        let shifted = f.values()[ravel(&jdx, shape)];
        g.values_mut()[lin] = shifted * f.values()[lin].conj();
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator_01(n: usize, lo: f64, hi: f64) -> GridFunction {
        // 1_{[0,1]} sampled at cell centers of [lo, hi].
        let spec = GridSpec::line(n, lo, hi);
        GridFunction::from_fn(&spec, |x| {
            if x[0] > 0.0 && x[0] < 1.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap()
    }

    #[test]
    fn lp_norm_of_unit_box_indicator_is_one() {
        // box of measure exactly 1 carved out of [−2, 2] with 512 cells:
        // 1 / spacing = 128 cells inside.
        let f = indicator_01(512, -2.0, 2.0);
        for p in [1.0, 4.0 / 3.0, 2.0, 7.0] {
            let v = lp_norm(&f, p).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "p={p}: {v}");
        }
    }

    #[test]
    fn lp_norm_gaussian_matches_closed_form() {
        // ∫ e^{-4x²/3} dx = sqrt(3π)/2, so ‖e^{-x²}‖_{4/3} = (sqrt(3π)/2)^{3/4}.
        let spec = GridSpec::line(4096, -10.0, 10.0);
        let f = GridFunction::from_fn(&spec, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let oracle = ((3.0 * std::f64::consts::PI).sqrt() / 2.0).powf(0.75);
        let v = lp_norm(&f, 4.0 / 3.0).unwrap();
        assert!((v - oracle).abs() < 1e-6, "v={v} oracle={oracle}");
    }

    #[test]
    fn lp_norm_homogeneity() {
        let spec = GridSpec::line(64, -1.0, 1.0);
        let mut rng = crate::rng::CounterRng::new(11);
        let f = GridFunction::from_fn(&spec, |_| {
            Complex64::new(rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0))
        })
        .unwrap();
        let v1 = lp_norm(&f.scaled(Complex64::new(2.0, 0.0)), 1.3).unwrap();
        let v2 = 2.0 * lp_norm(&f, 1.3).unwrap();
        assert!((v1 - v2).abs() < 1e-12 * v2.abs().max(1.0));
    }

    #[test]
    fn lp_norm_invalid_p_rejected() {
        let f = indicator_01(16, -2.0, 2.0);
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(lp_norm(&f, f64::NAN).is_err());
        assert!(lp_norm(&f, f64::INFINITY).is_err());
    }

    #[test]
    fn lp_norm_permutation_invariant_bit_exact() {
        let spec = GridSpec::line(257, -3.0, 3.0);
        let mut rng = crate::rng::CounterRng::new(5);
        let f = GridFunction::from_fn(&spec, |_| {
            Complex64::new(rng.next_normal(), rng.next_normal())
        })
        .unwrap();
        // reverse the cells: same multiset of values
        let mut rev = f.values().to_vec();
        rev.reverse();
        let g = GridFunction::new(
            f.shape().to_vec(),
            f.spacing().to_vec(),
            f.origin().to_vec(),
            rev,
        )
        .unwrap();
        for p in [1.0, 4.0 / 3.0, 2.0] {
            let a = lp_norm(&f, p).unwrap();
            let b = lp_norm(&g, p).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "p={p}");
        }
    }

    #[test]
    fn layer_cake_unit_indicator_single_level() {
        let f = indicator_01(512, -2.0, 2.0);
        let cake = layer_cake(&f);
        assert_eq!(cake.levels.len(), 1);
        let l = cake.levels.get(&0).expect("level 0");
        assert!((l.measure - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layer_cake_two_steps() {
        // 1.5·1_A + 6·1_B with disjoint A, B: levels 0 (A) and 2 (B).
        let spec = GridSpec::line(400, -2.0, 2.0);
        let f = GridFunction::from_fn(&spec, |x| {
            if x[0] < -1.0 {
                Complex64::new(1.5, 0.0)
            } else if x[0] > 1.0 {
                Complex64::new(6.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let cake = layer_cake(&f);
        let keys: Vec<i32> = cake.levels.keys().copied().collect();
        assert_eq!(keys, vec![0, 2]);
        assert!((cake.measure(0) - 1.0).abs() < 2.0 * f.cell_volume());
        assert!((cake.measure(2) - 1.0).abs() < 2.0 * f.cell_volume());
    }

    #[test]
    fn layer_cake_gaussian_level_measures_match_analytic() {
        // level j of e^{-x²} is {sqrt(-ln 2^{j+1}) < |x| <= sqrt(-ln 2^j)}.
        let spec = GridSpec::line(1024, -8.0, 8.0);
        let f = GridFunction::from_fn(&spec, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let cake = layer_cake(&f);
        let vol = f.cell_volume();
        for j in [-1i32, -2, -3] {
            let inner = (-(j as f64) * std::f64::consts::LN_2).sqrt();
            let outer = (-((j + 1) as f64) * std::f64::consts::LN_2).sqrt();
            let analytic = 2.0 * (inner - outer);
            let got = cake.measure(j);
            assert!(
                (got - analytic).abs() <= 2.0 * vol,
                "j={j}: got {got}, analytic {analytic}"
            );
        }
    }

    #[test]
    fn layer_cake_reconstruction_bound() {
        let spec = GridSpec::line(300, -4.0, 4.0);
        let mut rng = crate::rng::CounterRng::new(23);
        let f = GridFunction::from_fn(&spec, |_| {
            Complex64::new(rng.next_f64() * 5.0, 0.0)
        })
        .unwrap();
        let cake = layer_cake(&f);
        for (i, v) in f.values().iter().enumerate() {
            let m = v.norm();
            if m == 0.0 {
                for l in cake.levels.values() {
                    assert!(!l.mask[i]);
                }
                continue;
            }
            let mut recon = 0.0;
            for (&j, l) in &cake.levels {
                if l.mask[i] {
                    recon += exp2i(j);
                }
            }
            assert!(recon <= m && m < 2.0 * recon, "cell {i}: {recon} vs {m}");
        }
    }

    #[test]
    fn dyadic_level_exact_powers() {
        assert_eq!(dyadic_level(1.0), 0);
        assert_eq!(dyadic_level(2.0), 1);
        assert_eq!(dyadic_level(0.5), -1);
        assert_eq!(dyadic_level(1.9999999), 0);
        assert_eq!(dyadic_level(6.0), 2);
        assert_eq!(dyadic_level(exp2i(-40)), -40);
    }

    #[test]
    fn lorentz_indicator_is_measure_power() {
        let f = indicator_01(512, -2.0, 2.0);
        for (q, qt) in [(4.0 / 3.0, 4.0), (2.0, 1.0), (1.5, f64::INFINITY)] {
            let v = lorentz_seminorm(&f, q, qt).unwrap();
            assert!((v - 1.0f64.powf(1.0 / q)).abs() < 1e-12, "q={q} qt={qt}: {v}");
        }
        // scaled measure: indicator of measure 0.5
        let spec = GridSpec::line(512, -2.0, 2.0);
        let g = GridFunction::from_fn(&spec, |x| {
            if x[0] > 0.0 && x[0] < 0.5 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let v = lorentz_seminorm(&g, 4.0 / 3.0, 4.0).unwrap();
        assert!((v - 0.5f64.powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn lorentz_single_level_scales_dyadically() {
        // f = 2^5 · 1_E with L(E) = 1: the (4/3, 4) seminorm is 2^5.
        let f = indicator_01(512, -2.0, 2.0).scaled(Complex64::new(32.0, 0.0));
        let v = lorentz_seminorm(&f, 4.0 / 3.0, 4.0).unwrap();
        assert!((v - 32.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn lorentz_diagonal_comparable_to_lp_within_factor_two() {
        // 100 seeded random nonnegative step functions.
        let spec = GridSpec::line(128, -2.0, 2.0);
        for seed in 0..100u64 {
            let mut rng = crate::rng::CounterRng::new(1000 + seed);
            let f = GridFunction::from_fn(&spec, |_| {
                if rng.next_f64() < 0.3 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(rng.next_range(0.01, 20.0), 0.0)
                }
            })
            .unwrap();
            let p = 4.0 / 3.0;
            let a = lorentz_seminorm(&f, p, p).unwrap();
            let b = lp_norm(&f, p).unwrap();
            if b == 0.0 {
                assert_eq!(a, 0.0);
                continue;
            }
            let ratio = a / b;
            assert!(
                (0.5..=2.0).contains(&ratio),
                "seed {seed}: ratio {ratio} outside [1/2, 2]"
            );
        }
    }

    #[test]
    fn super_level_basics() {
        let f = indicator_01(512, -2.0, 2.0);
        let s = super_level_mask(&f, 0.5).unwrap();
        assert!((s.measure - 1.0).abs() < 1e-12);
        let e = super_level_mask(&f, 2.0).unwrap();
        assert_eq!(e.cell_count, 0);
        assert_eq!(e.measure, 0.0);
    }

    #[test]
    fn super_level_gaussian_half_height() {
        let spec = GridSpec::line(1024, -8.0, 8.0);
        let f = GridFunction::from_fn(&spec, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let s = super_level_mask(&f, 0.5).unwrap();
        let analytic = 2.0 * std::f64::consts::LN_2.sqrt();
        assert!((s.measure - analytic).abs() <= f.cell_volume());
    }

    #[test]
    fn super_level_monotone_in_s() {
        let spec = GridSpec::line(256, -4.0, 4.0);
        let mut rng = crate::rng::CounterRng::new(77);
        let f = GridFunction::from_fn(&spec, |_| Complex64::new(rng.next_f64() * 3.0, 0.0)).unwrap();
        let lo = super_level_mask(&f, 0.4).unwrap();
        let hi = super_level_mask(&f, 1.1).unwrap();
        for (a, b) in lo.mask.iter().zip(&hi.mask) {
            assert!(!b | a, "mask(s') must be contained in mask(s) for s' > s");
        }
    }

    #[test]
    fn layer_cake_total_identity_against_l1() {
        // ∫_0^∞ measure{|f| > s} ds == ‖f‖_1, trapezoid over the sorted
        // distinct values of |f| (the distribution is a step function, so the
        // trapezoid rule over its breakpoints is exact).
        let spec = GridSpec::line(200, -1.0, 1.0);
        let mut rng = crate::rng::CounterRng::new(3);
        let f = GridFunction::from_fn(&spec, |_| Complex64::new(rng.next_f64() * 4.0, 0.0)).unwrap();
        let mut vals: Vec<f64> = f.values().iter().map(|v| v.norm()).filter(|&m| m > 0.0).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        let vol = f.cell_volume();
        // integral of the right-continuous step function measure(s) on [0, max]
        let mut integral = 0.0;
        let mut prev = 0.0f64;
        for &v in &vals {
            let count = f.values().iter().filter(|w| w.norm() > prev).count();
            integral += (v - prev) * count as f64 * vol;
            prev = v;
        }
        let l1 = lp_norm(&f, 1.0).unwrap();
        assert!(
            (integral - l1).abs() <= 1e-10 * l1,
            "layer-cake identity: {integral} vs {l1}"
        );
    }

    #[test]
    fn translate_multiply_zero_offset_gives_modulus_squared() {
        let spec = GridSpec::line(64, -1.0, 1.0);
        let mut rng = crate::rng::CounterRng::new(8);
        let f = GridFunction::from_fn(&spec, |_| {
            Complex64::new(rng.next_normal(), rng.next_normal())
        })
        .unwrap();
        let g = translate_multiply(&f, &[0]).unwrap();
        for (v, w) in f.values().iter().zip(g.values()) {
            assert!((w.re - v.norm_sqr()).abs() < 1e-14);
            assert!(w.im.abs() < 1e-14);
        }
    }

    #[test]
    fn translate_multiply_disjoint_supports_vanish() {
        let f = indicator_01(512, -2.0, 2.0);
        // one full support width (128 cells of width 1/128 cover [0,1])
        let g = translate_multiply(&f, &[512]).unwrap();
        assert!(g.values().iter().all(|v| v.norm() == 0.0));
        let g = translate_multiply(&f, &[128]).unwrap();
        assert!(g.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn translate_multiply_real_reflection_identity() {
        // real f: g_h(x) = g_{-h}(x + h·spacing) where both sides live on the grid
        let spec = GridSpec::line(96, -1.5, 1.5);
        let mut rng = crate::rng::CounterRng::new(13);
        let f = GridFunction::from_fn(&spec, |_| Complex64::new(rng.next_normal(), 0.0)).unwrap();
        let h = 7i64;
        let a = translate_multiply(&f, &[h]).unwrap();
        let b = translate_multiply(&f, &[-h]).unwrap();
        for i in 0..f.len() {
            let j = i as i64 + h;
            if j >= 0 && (j as usize) < f.len() {
                let lhs = a.values()[i];
                let rhs = b.values()[j as usize];
                assert!((lhs - rhs).norm() < 1e-14, "i={i}");
            }
        }
    }

    #[test]
    fn translate_multiply_l1_bounded_by_l2_squared() {
        let spec = GridSpec::line(128, -2.0, 2.0);
        let mut rng = crate::rng::CounterRng::new(21);
        let f = GridFunction::from_fn(&spec, |_| {
            Complex64::new(rng.next_normal(), rng.next_normal())
        })
        .unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        for h in [-31i64, -2, 1, 17] {
            let g = translate_multiply(&f, &[h]).unwrap();
            let l1 = lp_norm(&g, 1.0).unwrap();
            assert!(l1 <= l2 * l2 * (1.0 + 1e-12), "h={h}: {l1} vs {}", l2 * l2);
        }
    }

    #[test]
    fn degenerate_zero_function() {
        let spec = GridSpec::line(32, 0.0, 1.0);
        let f = GridFunction::zeros(&spec);
        assert_eq!(lp_norm(&f, 2.0).unwrap(), 0.0);
        assert_eq!(lorentz_seminorm(&f, 2.0, 2.0).unwrap(), 0.0);
        assert!(layer_cake(&f).levels.is_empty());
    }

    #[test]
    fn constructor_validation() {
        assert!(GridFunction::new(vec![], vec![], vec![], vec![]).is_err());
        assert!(GridFunction::new(vec![4], vec![0.0], vec![0.0], vec![Complex64::default(); 4]).is_err());
        assert!(GridFunction::new(vec![4], vec![0.1], vec![0.0], vec![Complex64::default(); 3]).is_err());
        assert!(GridFunction::new(
            vec![2],
            vec![0.1],
            vec![0.0],
            vec![Complex64::new(f64::NAN, 0.0), Complex64::default()]
        )
        .is_err());
    }

    #[test]
    fn two_dimensional_indexing_roundtrip() {
        let shape = [5usize, 7];
        let mut idx = [0usize; 2];
        for lin in 0..35 {
            unravel(lin, &shape, &mut idx);
            assert_eq!(ravel(&idx, &shape), lin);
        }
    }
}
