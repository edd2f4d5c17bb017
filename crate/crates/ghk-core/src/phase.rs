//! Constructive phase recovery: multiplicative derivatives, robust affine
//! recovery from additive triples, and polynomial phase recovery of degree
//! <= k-1 from approximate vanishing of the k-th multiplicative derivative.
//!
//! All phase arithmetic is circular: values live in [0,1) representing R/Z,
//! residuals are measured as |e^{2πiu} - 1|, and raw differences are unwrapped
//! only along adjacent lattice steps where the wrap is unambiguous.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{GhkError, Result};
use crate::rng::CounterRng;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Wrap to the balanced representative in [-1/2, 1/2).
fn wrap_half(u: f64) -> f64 {
    let w = u.rem_euclid(1.0);
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Circular residual |e^{2πiu} - 1|.
pub fn circle_residual(u: f64) -> f64 {
    2.0 * (std::f64::consts::PI * wrap_half(u)).sin().abs()
}

// ---------------------------------------------------------------------------
// Real polynomials on R^n
// ---------------------------------------------------------------------------

/// Real polynomial stored as multi-index -> coefficient, with a degree bound.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPolynomial {
    pub n: usize,
    pub degree: usize,
    pub coeffs: BTreeMap<Vec<u32>, f64>,
}

impl RealPolynomial {
    pub fn zero(n: usize, degree: usize) -> Self {
        RealPolynomial {
            n,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = RealPolynomial::zero(n, 0);
        p.set(vec![0; n], c);
        p
    }

    pub fn set(&mut self, gamma: Vec<u32>, c: f64) {
        assert_eq!(gamma.len(), self.n);
        let total: u32 = gamma.iter().sum();
        assert!(
            total as usize <= self.degree,
            "coefficient exceeds the degree bound"
        );
        if c == 0.0 {
            self.coeffs.remove(&gamma);
        } else {
            self.coeffs.insert(gamma, c);
        }
    }

    pub fn coeff(&self, gamma: &[u32]) -> f64 {
        self.coeffs.get(gamma).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (gamma, &c) in &self.coeffs {
            let mut m = c;
            for (xi, &g) in x.iter().zip(gamma) {
                m *= xi.powi(g as i32);
            }
            s += m;
        }
        s
    }

    /// Sum with the degree bound raised as needed.
    pub fn add(&self, other: &RealPolynomial) -> RealPolynomial {
        assert_eq!(self.n, other.n);
        let mut out = RealPolynomial::zero(self.n, self.degree.max(other.degree));
        for (g, &c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            let cur = out.coeff(g);
            out.coeffs.insert(g.clone(), cur + c);
        }
        out.coeffs.retain(|_, c| *c != 0.0);
        out
    }

    /// Canonicalize the constant term to [0,1) (the observable is e^{2πiP}).
    pub fn canonicalize_constant(&mut self) {
        let key = vec![0u32; self.n];
        let c = self.coeff(&key);
        let wrapped = c.rem_euclid(1.0);
        if wrapped == 0.0 {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, wrapped);
        }
    }

    /// JSON list of [multi-index, coefficient] pairs.
    pub fn to_json_value(&self) -> serde_json::Value {
        let list: Vec<serde_json::Value> = self
            .coeffs
            .iter()
            .map(|(g, c)| serde_json::json!([g, c]))
            .collect();
        serde_json::Value::Array(list)
    }

    pub fn from_json_value(n: usize, degree: usize, v: &serde_json::Value) -> Result<Self> {
        let arr = v
            .as_array()
            .ok_or_else(|| GhkError::Parse("polynomial must be a JSON list".into()))?;
        let mut p = RealPolynomial::zero(n, degree);
        for item in arr {
            let pair = item
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| GhkError::Parse("polynomial entry must be [gamma, coeff]".into()))?;
            let gamma: Vec<u32> = serde_json::from_value(pair[0].clone())?;
            let c = pair[1]
                .as_f64()
                .ok_or_else(|| GhkError::Parse("coefficient must be a number".into()))?;
            if gamma.len() != n {
                return Err(GhkError::Parse("multi-index length mismatch".into()));
            }
            if gamma.iter().sum::<u32>() as usize > degree {
                return Err(GhkError::Parse("coefficient above the degree bound".into()));
            }
            p.set(gamma, c);
        }
        Ok(p)
    }
}

/// All multi-indices over n variables with |γ| = total.
pub fn multi_indices(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for head in 0..=total {
            prefix.push(head);
            rec(n - 1, total - head, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::new(), &mut out);
    out
}

/// All multi-indices with |γ| <= max_total.
pub fn multi_indices_up_to(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    (0..=max_total).flat_map(|t| multi_indices(n, t)).collect()
}

// ---------------------------------------------------------------------------
// Phase samples and the lattice evaluator
// ---------------------------------------------------------------------------

/// Samples of a function B -> R/Z on points inside a ball. Values are stored
/// wrapped into [0,1), so adding integers to the inputs changes nothing.
#[derive(Clone, Debug)]
pub struct PhaseSamples {
    pub n: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Flat row-major point coordinates (len = count·n).
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseSamples {
    pub fn new(
        n: usize,
        center: Vec<f64>,
        radius: f64,
        points: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 || center.len() != n || !(radius > 0.0) {
            return Err(GhkError::InvalidParameter(
                "PhaseSamples needs n >= 1, center of length n and radius > 0".into(),
            ));
        }
        if points.len() != values.len() * n {
            return Err(GhkError::InvalidParameter(
                "points length must be count·n".into(),
            ));
        }
        for p in points.chunks_exact(n) {
            let d2: f64 = p
                .iter()
                .zip(&center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum();
            if d2.sqrt() > radius * (1.0 + 1e-9) {
                return Err(GhkError::InvalidParameter(
                    "sample point outside the ball".into(),
                ));
            }
        }
        let values = values.into_iter().map(|v| v.rem_euclid(1.0)).collect();
        Ok(PhaseSamples {
            n,
            center,
            radius,
            points,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    /// Samples of a polynomial on a centered lattice filling the ball.
    pub fn from_polynomial_grid(
        center: &[f64],
        radius: f64,
        per_axis: usize,
        poly: &RealPolynomial,
    ) -> Result<Self> {
        let n = center.len();
        let step = 2.0 * radius / (per_axis.max(2) as f64 - 1.0) / (n as f64).sqrt();
        let mut points = Vec::new();
        let mut values = Vec::new();
        let half = (per_axis / 2) as i64;
        let mut idx = vec![-half; n];
        loop {
            let x: Vec<f64> = (0..n).map(|a| center[a] + idx[a] as f64 * step).collect();
            let d2: f64 = x
                .iter()
                .zip(center)
                .map(|(xi, ci)| (xi - ci) * (xi - ci))
                .sum();
            if d2.sqrt() <= radius {
                points.extend_from_slice(&x);
                values.push(poly.eval(&x));
            }
            // odometer over [-half, half]^n
            let mut axis = 0;
            loop {
                if axis == n {
                    return PhaseSamples::new(n, center.to_vec(), radius, points, values);
                }
                idx[axis] += 1;
                if idx[axis] <= half {
                    break;
                }
                idx[axis] = -half;
                axis += 1;
            }
        }
    }
}

/// Gridded evaluator backed by phase samples on a regular lattice.
#[derive(Clone, Debug)]
pub struct PhaseLattice {
    n: usize,
    base: Vec<f64>,
    step: Vec<f64>,
    extent: Vec<usize>,
    values: Vec<Option<f64>>,
}

impl PhaseLattice {
    /// Infer the lattice from the sample points. Fails when the points do not
    /// sit on a uniform per-axis lattice.
    pub fn from_samples(s: &PhaseSamples) -> Result<Self> {
        let n = s.n;
        if s.is_empty() {
            return Err(GhkError::Sampling("no samples".into()));
        }
        let mut base = vec![0.0; n];
        let mut step = vec![0.0; n];
        let mut extent = vec![0usize; n];
        for a in 0..n {
            let mut coords: Vec<f64> = (0..s.len()).map(|i| s.point(i)[a]).collect();
            coords.sort_by(f64::total_cmp);
            coords.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
            base[a] = coords[0];
            if coords.len() == 1 {
                step[a] = 1.0;
                extent[a] = 1;
                continue;
            }
            let mut min_gap = f64::INFINITY;
            for w in coords.windows(2) {
                min_gap = min_gap.min(w[1] - w[0]);
            }
            step[a] = min_gap;
            let span = coords[coords.len() - 1] - coords[0];
            let cells = (span / min_gap).round() as usize;
            if ((span / min_gap) - cells as f64).abs() > 1e-6 {
                return Err(GhkError::Sampling(format!(
                    "axis {a}: points are not on a uniform lattice"
                )));
            }
            extent[a] = cells + 1;
            for &c in &coords {
                let t = (c - base[a]) / min_gap;
                if (t - t.round()).abs() > 1e-6 {
                    return Err(GhkError::Sampling(format!(
                        "axis {a}: coordinate {c} off-lattice"
                    )));
                }
            }
        }
        let total: usize = extent.iter().product();
        let mut values: Vec<Option<f64>> = vec![None; total];
        for i in 0..s.len() {
            let p = s.point(i);
            let mut lin = 0usize;
            for a in 0..n {
                let t = ((p[a] - base[a]) / step[a]).round() as usize;
                lin = lin * extent[a] + t;
            }
            if let Some(old) = values[lin] {
                if circle_residual(old - s.values[i]) > 1e-9 {
                    return Err(GhkError::Sampling(
                        "conflicting duplicate sample point".into(),
                    ));
                }
            }
            values[lin] = Some(s.values[i]);
        }
        Ok(PhaseLattice {
            n,
            base,
            step,
            extent,
            values,
        })
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    fn lin(&self, idx: &[i64]) -> Option<usize> {
        let mut lin = 0usize;
        for a in 0..self.n {
            if idx[a] < 0 || idx[a] >= self.extent[a] as i64 {
                return None;
            }
            lin = lin * self.extent[a] + idx[a] as usize;
        }
        Some(lin)
    }

    fn get(&self, idx: &[i64]) -> Option<f64> {
        self.lin(idx).and_then(|l| self.values[l])
    }

    /// Nearest lattice index of a physical point; error if off-lattice by more
    /// than 10% of a step.
    fn locate(&self, x: &[f64]) -> Result<Vec<i64>> {
        let mut idx = vec![0i64; self.n];
        for a in 0..self.n {
            let t = (x[a] - self.base[a]) / self.step[a];
            let r = t.round();
            if (t - r).abs() > 0.1 {
                return Err(GhkError::Sampling(format!(
                    "point coordinate {} is not near the sample lattice",
                    x[a]
                )));
            }
            idx[a] = r as i64;
        }
        Ok(idx)
    }

    fn value_at_point(&self, x: &[f64]) -> Result<f64> {
        let idx = self.locate(x)?;
        self.get(&idx)
            .ok_or_else(|| GhkError::Sampling("missing sample at stencil point".into()))
    }

    /// Difference lattice (ψ(x+h) − ψ(x)) mod 1 for a lattice offset h.
    fn diff(&self, h: &[i64]) -> PhaseLattice {
        let mut out = self.clone();
        let total: usize = self.extent.iter().product();
        let mut idx = vec![0i64; self.n];
        for lin in 0..total {
            let mut rem = lin;
            for a in (0..self.n).rev() {
                idx[a] = (rem % self.extent[a]) as i64;
                rem /= self.extent[a];
            }
            let here = self.values[lin];
            let mut shifted_idx = idx.clone();
            for a in 0..self.n {
                shifted_idx[a] += h[a];
            }
            out.values[lin] = match (here, self.get(&shifted_idx)) {
                (Some(v0), Some(v1)) => Some((v1 - v0).rem_euclid(1.0)),
                _ => None,
            };
        }
        out
    }

    /// Subtract an exactly-evaluated polynomial, mod 1.
    fn subtract_poly(&self, p: &RealPolynomial) -> PhaseLattice {
        let mut out = self.clone();
        let total: usize = self.extent.iter().product();
        let mut x = vec![0.0; self.n];
        for lin in 0..total {
            if let Some(v) = self.values[lin] {
                let mut rem = lin;
                for a in (0..self.n).rev() {
                    let i = rem % self.extent[a];
                    rem /= self.extent[a];
                    x[a] = self.base[a] + i as f64 * self.step[a];
                }
                out.values[lin] = Some((v - p.eval(&x)).rem_euclid(1.0));
            }
        }
        out
    }

    fn defined_points(&self) -> Vec<(Vec<f64>, f64)> {
        let total: usize = self.extent.iter().product();
        let mut out = Vec::new();
        let mut x = vec![0.0; self.n];
        for lin in 0..total {
            if let Some(v) = self.values[lin] {
                let mut rem = lin;
                for a in (0..self.n).rev() {
                    let i = rem % self.extent[a];
                    rem /= self.extent[a];
                    x[a] = self.base[a] + i as f64 * self.step[a];
                }
                out.push((x.clone(), v));
            }
        }
        out
    }
}

/// The multiplicative derivative `exp(2πi Δ_{h_k}…Δ_{h_1} ψ(x))`, evaluated as
/// the alternating sum over the 2^k stencil.
pub fn mult_derivative(lat: &PhaseLattice, x: &[f64], hs: &[Vec<f64>]) -> Result<Complex64> {
    let k = hs.len();
    if k == 0 {
        return Err(GhkError::InvalidParameter(
            "mult_derivative needs at least one offset".into(),
        ));
    }
    let mut acc = 0.0f64;
    let mut point = vec![0.0; x.len()];
    for alpha in 0..(1usize << k) {
        point.copy_from_slice(x);
        for (i, h) in hs.iter().enumerate() {
            if (alpha >> i) & 1 == 1 {
                for a in 0..point.len() {
                    point[a] += h[a];
                }
            }
        }
        let v = lat.value_at_point(&point)?;
        let sign = if (k - alpha.count_ones() as usize) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc += sign * v;
    }
    Ok(Complex64::from_polar(1.0, TAU * acc))
}

// ---------------------------------------------------------------------------
// Robust affine recovery
// ---------------------------------------------------------------------------

/// One additive sample: values of α at x, β at y and γ at x+y.
#[derive(Clone, Debug)]
pub struct AffineTriple {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Result of the consensus affine fit.
#[derive(Clone, Debug)]
pub struct AffineFit {
    pub linear: Vec<f64>,
    pub intercept: f64,
    pub inlier_fraction: f64,
    /// Fraction of triples with |α(x)+β(y)−γ(x+y)| > τ.
    pub violation_fraction: f64,
}

impl AffineFit {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.linear).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn median(xs: &mut Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Recover an affine map L ≈ α from additive triples.
///
/// Consensus estimation: per coordinate, the slope is the median of
/// difference quotients over sample pairs sharing the other coordinates
/// (lattice-structured inputs make such pairs plentiful); the intercept is
/// the median residual. One inlier-restricted least-squares pass refines the
/// result. Corrupted triples are rejected by the medians and the inlier gate.
pub fn affine_recover(triples: &[AffineTriple], tau: f64) -> Result<AffineFit> {
    if triples.is_empty() {
        return Err(GhkError::Rank("no triples".into()));
    }
    let n = triples[0].x.len();
    if triples.len() < n + 1 {
        return Err(GhkError::Rank(format!(
            "{} samples cannot determine {} unknowns",
            triples.len(),
            n + 1
        )));
    }
    let samples: Vec<(&[f64], f64)> = triples.iter().map(|t| (t.x.as_slice(), t.alpha)).collect();
    // consensus slopes, one coordinate at a time
    let mut linear = vec![0.0; n];
    for j in 0..n {
        let mut groups: std::collections::HashMap<Vec<u64>, Vec<(f64, f64)>> =
            std::collections::HashMap::new();
        for (x, v) in &samples {
            let key: Vec<u64> = (0..n)
                .filter(|&a| a != j)
                .map(|a| x[a].to_bits())
                .collect();
            groups.entry(key).or_default().push((x[j], *v));
        }
        let mut quotients = Vec::new();
        for (_, mut pts) in groups {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.dedup_by(|a, b| a.0 == b.0);
            for w in pts.windows(2) {
                let dx = w[1].0 - w[0].0;
                if dx.abs() > 1e-14 {
                    quotients.push((w[1].1 - w[0].1) / dx);
                }
            }
        }
        if quotients.is_empty() {
            return Err(GhkError::Rank(format!(
                "no difference pairs along coordinate {j}"
            )));
        }
        linear[j] = median(&mut quotients);
    }
    let mut residuals: Vec<f64> = samples
        .iter()
        .map(|(x, v)| v - x.iter().zip(&linear).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let intercept = median(&mut residuals);
    // inlier-restricted least squares refinement
    let gate = (24.0 * tau).max(1e-9);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut inliers = 0usize;
    for (x, v) in &samples {
        let pred = intercept + x.iter().zip(&linear).map(|(a, b)| a * b).sum::<f64>();
        if (v - pred).abs() <= gate {
            inliers += 1;
            for &xi in x.iter() {
                rows.push(xi);
            }
            rows.push(1.0);
            rhs.push(*v);
        }
    }
    let (linear, intercept) = if inliers > n + 1 {
        match crate::linalg::weighted_least_squares(inliers, n + 1, &rows, &rhs, None) {
            Some(sol) => (sol[..n].to_vec(), sol[n]),
            None => (linear, intercept),
        }
    } else {
        (linear, intercept)
    };
    let violation = triples
        .iter()
        .filter(|t| (t.alpha + t.beta - t.gamma).abs() > tau.max(1e-12))
        .count() as f64
        / triples.len() as f64;
    Ok(AffineFit {
        inlier_fraction: inliers as f64 / samples.len() as f64,
        linear,
        intercept,
        violation_fraction: violation,
    })
}

// ---------------------------------------------------------------------------
// Polynomial phase recovery
// ---------------------------------------------------------------------------

/// Output of [`poly_phase_recover`].
#[derive(Clone, Debug)]
pub struct PhaseRecovery {
    pub poly: RealPolynomial,
    pub inlier_fraction: f64,
    /// Empirical ρ: the largest circular residual among inliers.
    pub max_inlier_residual: f64,
    /// Largest |intercept| seen in the linear coefficient fits (the additive
    /// structure forces zero; recorded as a diagnostic).
    pub max_fit_intercept: f64,
}

/// Recover a polynomial P of degree <= k-1 with e^{2πiψ} ≈ e^{2πiP}.
///
/// Base case k = 1: the circular mean. Inductive step: recover a degree
/// k-2 polynomial for each difference ψ(·+h)−ψ(·) over a common offset set,
/// fit the top coefficients as linear maps of h (zero intercept), integrate
/// them into the degree-(k-1) part, subtract and recurse.
pub fn poly_phase_recover(s: &PhaseSamples, k: usize, tau: f64) -> Result<PhaseRecovery> {
    if k < 1 {
        return Err(GhkError::InvalidParameter(
            "poly_phase_recover requires k >= 1".into(),
        ));
    }
    let lat = PhaseLattice::from_samples(s)?;
    let mut max_intercept = 0.0f64;
    let mut poly = recover_level(&lat, k, tau, &mut max_intercept)?;
    poly.canonicalize_constant();
    // classify residuals
    let rho_gate = 2.0 * (std::f64::consts::PI * (4.0 * tau).clamp(1e-9, 0.45)).sin();
    let mut inliers = 0usize;
    let mut max_res = 0.0f64;
    let pts = lat.defined_points();
    for (x, v) in &pts {
        let r = circle_residual(v - poly.eval(x));
        if r <= rho_gate {
            inliers += 1;
            max_res = max_res.max(r);
        }
    }
    Ok(PhaseRecovery {
        poly,
        inlier_fraction: inliers as f64 / pts.len() as f64,
        max_inlier_residual: max_res,
        max_fit_intercept: max_intercept,
    })
}

fn circular_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut z = Complex64::default();
    for v in values {
        z += Complex64::from_polar(1.0, TAU * v);
    }
    if z.norm() == 0.0 {
        return 0.0;
    }
    (z.arg() / TAU).rem_euclid(1.0)
}

/// Circular mean with one trimming pass: corrupted samples sit far from the
/// consensus direction and would bias the plain mean by O(fraction).
fn trimmed_circular_mean(values: &[f64], tau: f64) -> f64 {
    let m0 = circular_mean(values.iter().copied());
    let gate = (8.0 * tau).clamp(1e-6, 0.2);
    let kept: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| wrap_half(v - m0).abs() <= gate)
        .collect();
    if kept.len() * 2 >= values.len() {
        circular_mean(kept.into_iter())
    } else {
        m0
    }
}

/// Offset set for the h-grid: nonzero integer vectors with entries in
/// [-2, 2]. One fixed set per level so the coefficient maps share h-coverage.
fn offset_set(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut idx = vec![-2i64; n];
    loop {
        if idx.iter().any(|&v| v != 0) {
            out.push(idx.clone());
        }
        let mut a = 0;
        loop {
            if a == n {
                return out;
            }
            idx[a] += 1;
            if idx[a] <= 2 {
                break;
            }
            idx[a] = -2;
            a += 1;
        }
    }
}

fn recover_level(
    lat: &PhaseLattice,
    k: usize,
    tau: f64,
    max_intercept: &mut f64,
) -> Result<RealPolynomial> {
    let n = lat.n;
    if k == 1 {
        let pts = lat.defined_points();
        if pts.is_empty() {
            return Err(GhkError::Sampling("level 1: no defined points".into()));
        }
        let vals: Vec<f64> = pts.iter().map(|(_, v)| *v).collect();
        return Ok(RealPolynomial::constant(n, trimmed_circular_mean(&vals, tau)));
    }
    let offsets = offset_set(n);
    let min_points = 1usize << k;
    let mut inner: Vec<(Vec<i64>, RealPolynomial)> = Vec::new();
    for h in &offsets {
        let d = lat.diff(h);
        if d.defined_count() < min_points {
            continue;
        }
        let p = recover_level(&d, k - 1, tau, max_intercept)
            .map_err(|e| GhkError::Sampling(format!("level {k}, offset {h:?}: {e}")))?;
        inner.push((h.clone(), p));
    }
    if inner.len() < 2 * n + 1 {
        return Err(GhkError::Sampling(format!(
            "level {k}: only {} usable offsets",
            inner.len()
        )));
    }
    let q = integrate_top_coefficients(n, k, &inner, lat, tau, max_intercept)?;
    let reduced = lat.subtract_poly(&q);
    let lower = recover_level(&reduced, k - 1, tau, max_intercept)?;
    Ok(q.add(&lower))
}

/// Fit A_γ for every top multi-index and integrate into the homogeneous
/// degree-(k-1) polynomial q with q_β = mean_{i: β_i>=1} (A_{β-e_i})_i / β_i.
fn integrate_top_coefficients(
    n: usize,
    k: usize,
    inner: &[(Vec<i64>, RealPolynomial)],
    lat: &PhaseLattice,
    tau: f64,
    max_intercept: &mut f64,
) -> Result<RealPolynomial> {
    let top_degree = (k - 2) as u32;
    let mut fits: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
    for gamma in multi_indices(n, top_degree) {
        let mut samples: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (h, p) in inner {
            samples.insert(h.clone(), p.coeff(&gamma));
        }
        if top_degree == 0 {
            unwrap_over_offsets(&mut samples);
        }
        let phys =
            |h: &[i64]| -> Vec<f64> { (0..n).map(|a| h[a] as f64 * lat.step[a]).collect() };
        let mut triples = Vec::new();
        for (t, &at) in &samples {
            for (s, &asv) in &samples {
                let sum: Vec<i64> = t.iter().zip(s).map(|(a, b)| a + b).collect();
                if let Some(&asum) = samples.get(&sum) {
                    triples.push(AffineTriple {
                        x: phys(t),
                        y: phys(s),
                        alpha: at,
                        beta: asv,
                        gamma: asum,
                    });
                }
            }
        }
        let fit = affine_recover(&triples, tau)
            .map_err(|e| GhkError::Rank(format!("level {k}, gamma {gamma:?}: {e}")))?;
        *max_intercept = max_intercept.max(fit.intercept.abs());
        fits.insert(gamma, fit.linear);
    }
    let mut q = RealPolynomial::zero(n, k - 1);
    for beta in multi_indices(n, (k - 1) as u32) {
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for i in 0..n {
            if beta[i] == 0 {
                continue;
            }
            let mut gamma = beta.clone();
            gamma[i] -= 1;
            if let Some(a) = fits.get(&gamma) {
                acc += a[i] / beta[i] as f64;
                cnt += 1;
            }
        }
        if cnt > 0 {
            q.set(beta, acc / cnt as f64);
        }
    }
    Ok(q)
}

/// Unwrap mod-1 coefficient samples over the offset lattice: breadth-first
/// from the origin (value 0), stepping between offsets that differ by one
/// lattice unit along one axis.
fn unwrap_over_offsets(samples: &mut BTreeMap<Vec<i64>, f64>) {
    if samples.is_empty() {
        return;
    }
    let n = samples.keys().next().unwrap().len();
    let mut unwrapped: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let origin = vec![0i64; n];
    unwrapped.insert(origin.clone(), 0.0);
    let mut frontier = vec![origin];
    while let Some(cur) = frontier.pop() {
        let cur_val = unwrapped[&cur];
        for a in 0..n {
            for dir in [-1i64, 1] {
                let mut nb = cur.clone();
                nb[a] += dir;
                if unwrapped.contains_key(&nb) {
                    continue;
                }
                if let Some(&raw) = samples.get(&nb) {
                    let raw_cur = if cur.iter().all(|&v| v == 0) {
                        0.0
                    } else {
                        samples.get(&cur).copied().unwrap_or(0.0)
                    };
                    let delta = wrap_half(raw - raw_cur);
                    unwrapped.insert(nb.clone(), cur_val + delta);
                    frontier.push(nb);
                }
            }
        }
    }
    for (h, v) in samples.iter_mut() {
        if let Some(&u) = unwrapped.get(h) {
            *v = u;
        }
    }
}

/// Deterministic random polynomial of degree <= deg with coefficients in
/// [-range, range]; test-corpus helper.
pub fn random_polynomial(n: usize, deg: usize, range: f64, seed: u64) -> RealPolynomial {
    let mut rng = CounterRng::new(seed);
    let mut p = RealPolynomial::zero(n, deg);
    for gamma in multi_indices_up_to(n, deg as u32) {
        p.set(gamma, rng.next_range(-range, range));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice_samples(n: usize, per_axis: usize, mut f: impl FnMut(&[f64]) -> f64) -> PhaseSamples {
        let radius = 1.0;
        let center = vec![0.0; n];
        let step = 2.0 * radius / (per_axis as f64 - 1.0) / (n as f64).sqrt();
        let half = (per_axis / 2) as i64;
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut idx = vec![-half; n];
        'outer: loop {
            let x: Vec<f64> = (0..n).map(|a| idx[a] as f64 * step).collect();
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2.sqrt() <= radius {
                points.extend_from_slice(&x);
                values.push(f(&x));
            }
            let mut a = 0;
            loop {
                if a == n {
                    break 'outer;
                }
                idx[a] += 1;
                if idx[a] <= half {
                    break;
                }
                idx[a] = -half;
                a += 1;
            }
        }
        PhaseSamples::new(n, center, radius, points, values).unwrap()
    }

    #[test]
    fn polynomial_eval_and_json_roundtrip() {
        let mut p = RealPolynomial::zero(2, 2);
        p.set(vec![0, 0], 0.5);
        p.set(vec![1, 0], 2.0);
        p.set(vec![1, 1], -3.0);
        assert!((p.eval(&[2.0, 1.0]) - (0.5 + 4.0 - 6.0)).abs() < 1e-15);
        let v = p.to_json_value();
        let q = RealPolynomial::from_json_value(2, 2, &v).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3), vec![vec![3]]);
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices_up_to(2, 2).len(), 6);
    }

    #[test]
    fn mult_derivative_annihilates_low_degree() {
        let p = random_polynomial(1, 2, 2.0, 3);
        let s = lattice_samples(1, 33, |x| p.eval(x));
        let lat = PhaseLattice::from_samples(&s).unwrap();
        let step = lat.step()[0];
        // k = 3 differences of a degree-2 polynomial vanish
        let hs = vec![vec![step], vec![2.0 * step], vec![step]];
        let v = mult_derivative(&lat, &[-0.2 * 16.0 * step * 0.0], &hs).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn mult_derivative_leading_coefficient_oracle() {
        // ψ = a·x^k: Δ_h^k ψ = a·k!·h^k; oracle computed by iterated numeric
        // differencing, independent of the alternating-sum implementation.
        let a = 0.013;
        let k = 3usize;
        let poly = |x: f64| a * x.powi(k as i32);
        let s = lattice_samples(1, 41, |x| poly(x[0]));
        let lat = PhaseLattice::from_samples(&s).unwrap();
        let h = lat.step()[0];
        let hs = vec![vec![h]; k];
        let got = mult_derivative(&lat, &[0.0], &hs).unwrap();
        // iterated differencing oracle
        fn delta(f: &dyn Fn(f64) -> f64, h: f64, x: f64) -> f64 {
            f(x + h) - f(x)
        }
        let d1 = |x: f64| delta(&poly, h, x);
        let d2 = |x: f64| delta(&d1, h, x);
        let d3 = |x: f64| delta(&d2, h, x);
        let expect = Complex64::from_polar(1.0, TAU * d3(0.0));
        assert!((got - expect).norm() < 1e-10, "{got} vs {expect}");
        // closed form a·k!·h^k
        let closed = Complex64::from_polar(1.0, TAU * a * 6.0 * h.powi(3));
        assert!((got - closed).norm() < 1e-10);
    }

    #[test]
    fn mult_derivative_k1_is_single_difference() {
        let s = lattice_samples(1, 21, |x| (0.3 * x[0] + 0.4).rem_euclid(1.0));
        let lat = PhaseLattice::from_samples(&s).unwrap();
        let h = lat.step()[0];
        let v = mult_derivative(&lat, &[0.0], &[vec![h]]).unwrap();
        let expect = Complex64::from_polar(1.0, TAU * 0.3 * h);
        assert!((v - expect).norm() < 1e-12);
    }

    #[test]
    fn mult_derivative_missing_point_errors() {
        let s = lattice_samples(1, 21, |_| 0.0);
        let lat = PhaseLattice::from_samples(&s).unwrap();
        let r = mult_derivative(&lat, &[0.9], &[vec![0.9]]);
        assert!(r.is_err());
    }

    #[test]
    fn affine_recover_exact_additive_data() {
        let v = [1.25, -0.75];
        let b = 0.4;
        let alpha = |x: &[f64]| v[0] * x[0] + v[1] * x[1] + b;
        // lattice points and triples with β, γ compatible: β = α − b (so that
        // α(x) + β(y) = γ(x+y) with γ = α)
        let mut triples = Vec::new();
        for i in -3i64..=3 {
            for j in -3i64..=3 {
                for p in -2i64..=2 {
                    for q in -2i64..=2 {
                        let x = vec![i as f64 * 0.1, j as f64 * 0.1];
                        let y = vec![p as f64 * 0.1, q as f64 * 0.1];
                        let s = vec![x[0] + y[0], x[1] + y[1]];
                        triples.push(AffineTriple {
                            alpha: alpha(&x),
                            beta: alpha(&y) - b,
                            gamma: alpha(&s),
                            x,
                            y,
                        });
                    }
                }
            }
        }
        let fit = affine_recover(&triples, 1e-9).unwrap();
        assert!((fit.linear[0] - v[0]).abs() < 1e-10);
        assert!((fit.linear[1] - v[1]).abs() < 1e-10);
        assert!((fit.intercept - b).abs() < 1e-10);
        assert!(fit.violation_fraction < 1e-12);
    }

    #[test]
    fn affine_recover_zero_data_gives_zero_map() {
        let mut triples = Vec::new();
        for i in -2i64..=2 {
            for j in -2i64..=2 {
                triples.push(AffineTriple {
                    x: vec![i as f64],
                    y: vec![j as f64],
                    alpha: 0.0,
                    beta: 0.0,
                    gamma: 0.0,
                });
            }
        }
        let fit = affine_recover(&triples, 1e-6).unwrap();
        assert_eq!(fit.linear[0], 0.0);
        assert_eq!(fit.intercept, 0.0);
    }

    #[test]
    fn affine_recover_robust_to_corruption() {
        // 10% of triples replaced by uniform noise, τ = 1e-3
        let v = [0.8, -1.4];
        let mut rng = CounterRng::new(515);
        let mut triples = Vec::new();
        let m = 14i64;
        for i in -m..=m {
            for j in -m..=m {
                let x = vec![i as f64 / m as f64, j as f64 / m as f64];
                let y = vec![j as f64 / m as f64, i as f64 / m as f64];
                let s = vec![x[0] + y[0], x[1] + y[1]];
                let lin = |z: &[f64]| v[0] * z[0] + v[1] * z[1];
                let noise = 1e-3 * rng.next_range(-1.0, 1.0);
                let mut t = AffineTriple {
                    alpha: lin(&x) + noise,
                    beta: lin(&y),
                    gamma: lin(&s),
                    x,
                    y,
                };
                if rng.next_f64() < 0.10 {
                    t.alpha = rng.next_range(-3.0, 3.0);
                    t.gamma = rng.next_range(-3.0, 3.0);
                }
                triples.push(t);
            }
        }
        let fit = affine_recover(&triples, 1e-3).unwrap();
        assert!((fit.linear[0] - v[0]).abs() < 1e-2, "{:?}", fit.linear);
        assert!((fit.linear[1] - v[1]).abs() < 1e-2, "{:?}", fit.linear);
    }

    #[test]
    fn affine_recover_rank_failure() {
        let triples = vec![AffineTriple {
            x: vec![0.0, 0.0],
            y: vec![0.0, 0.0],
            alpha: 1.0,
            beta: 1.0,
            gamma: 2.0,
        }];
        assert!(affine_recover(&triples, 1e-6).is_err());
    }

    #[test]
    fn recover_constant_phase() {
        let s = lattice_samples(1, 25, |_| 0.37);
        let r = poly_phase_recover(&s, 1, 1e-6).unwrap();
        assert!((r.poly.coeff(&[0]) - 0.37).abs() < 1e-12);
        assert!(r.inlier_fraction > 0.999);
    }

    #[test]
    fn recover_exact_polynomial_k3() {
        let p0 = random_polynomial(1, 2, 2.0, 8);
        let s = lattice_samples(1, 33, |x| p0.eval(x));
        let r = poly_phase_recover(&s, 3, 1e-6).unwrap();
        for gamma in multi_indices_up_to(1, 2) {
            let got = r.poly.coeff(&gamma);
            let want = p0.coeff(&gamma);
            if gamma.iter().all(|&g| g == 0) {
                assert!(
                    circle_residual(got - want) < 1e-8,
                    "constant: {got} vs {want}"
                );
            } else {
                assert!((got - want).abs() < 1e-8, "gamma {gamma:?}: {got} vs {want}");
            }
        }
        assert!(r.max_fit_intercept < 1e-9, "intercept {}", r.max_fit_intercept);
    }

    #[test]
    fn recover_gauge_invariance() {
        // recovering ψ + Q shifts the answer by exactly Q (constants mod 1)
        let p0 = random_polynomial(1, 1, 1.0, 21);
        let q = random_polynomial(1, 1, 1.0, 22);
        let s1 = lattice_samples(1, 33, |x| p0.eval(x));
        let s2 = lattice_samples(1, 33, |x| p0.eval(x) + q.eval(x));
        let r1 = poly_phase_recover(&s1, 2, 1e-6).unwrap();
        let r2 = poly_phase_recover(&s2, 2, 1e-6).unwrap();
        for gamma in multi_indices_up_to(1, 1) {
            let diff = r2.poly.coeff(&gamma) - r1.poly.coeff(&gamma);
            let want = q.coeff(&gamma);
            if gamma.iter().all(|&g| g == 0) {
                assert!(circle_residual(diff - want) < 1e-9);
            } else {
                assert!((diff - want).abs() < 1e-9, "gamma {gamma:?}");
            }
        }
    }

    #[test]
    fn recover_integer_invariance() {
        let p0 = random_polynomial(1, 1, 1.0, 30);
        let s1 = lattice_samples(1, 25, |x| p0.eval(x));
        let s2 = lattice_samples(1, 25, |x| p0.eval(x) + 7.0);
        let r1 = poly_phase_recover(&s1, 2, 1e-6).unwrap();
        let r2 = poly_phase_recover(&s2, 2, 1e-6).unwrap();
        for gamma in multi_indices_up_to(1, 1) {
            let a = r1.poly.coeff(&gamma);
            let b = r2.poly.coeff(&gamma);
            if gamma.iter().all(|&g| g == 0) {
                assert!(circle_residual(a - b) < 1e-10);
            } else {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recover_annihilation_of_recovered_polynomial() {
        let p0 = random_polynomial(1, 2, 1.5, 40);
        let s = lattice_samples(1, 33, |x| p0.eval(x));
        let lat = PhaseLattice::from_samples(&s).unwrap();
        let r = poly_phase_recover(&s, 3, 1e-6).unwrap();
        // k-th multiplicative derivative of ψ − P is 1 at interior stencils
        let step = lat.step()[0];
        let reduced = lat.subtract_poly(&r.poly);
        for x0 in [-0.3, 0.0, 0.2] {
            let hs = vec![vec![step], vec![step], vec![step]];
            if let Ok(v) = mult_derivative(&reduced, &[x0], &hs) {
                assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10, "x0={x0}: {v}");
            }
        }
    }

    #[test]
    fn recover_noisy_corrupted_corpus() {
        // ψ = P0 + 1e-3 noise, 5% junk samples (k=2, n=2)
        let mut ok = 0;
        for seed in 0..5u64 {
            let p0 = random_polynomial(2, 1, 1.5, 600 + seed);
            let mut rng = CounterRng::new(700 + seed);
            let s = lattice_samples(2, 25, |x| {
                if rng.next_f64() < 0.05 {
                    rng.next_f64()
                } else {
                    p0.eval(x) + 1e-3 * rng.next_range(-1.0, 1.0)
                }
            });
            let r = poly_phase_recover(&s, 2, 1e-3).unwrap();
            let mut good = true;
            for gamma in multi_indices(2, 1) {
                if (r.poly.coeff(&gamma) - p0.coeff(&gamma)).abs() > 1e-2 {
                    good = false;
                }
            }
            if good && r.inlier_fraction >= 0.9 {
                ok += 1;
            }
        }
        assert_eq!(ok, 5, "all seeded corrupted instances must recover");
    }
}
