//! Admissibility of linear-functional tuples, polytope volume profiles and
//! the Burchard triangle equivalence.
//!
//! Admissibility is an equality question, so the linear programs are solved
//! by exhaustive vertex enumeration in exact rational arithmetic whenever the
//! inputs fit into i128 fractions (every finite f64 is a dyadic rational, so
//! conversion is exact). On overflow or rank deficiency the solver falls back
//! to f64 enumeration with a 1e-9 relative tolerance.
//!
//! Volumes come in two flavors: an exact recursive slicer (surface
//! decomposition, any dimension but practical for N <= 3) used as the oracle,
//! and seeded Monte Carlo over the vertex bounding box with a counter-based
//! generator keyed by the instance hash, reported with its standard error.

use std::cmp::Ordering;

use crate::error::{GhkError, Result};
use crate::rng::{hash_f64s, CounterRng};

// ---------------------------------------------------------------------------
// Exact rational arithmetic (i128 fractions, checked)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Rat {
    num: i128,
    den: i128, // > 0, reduced
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl Rat {
    const ZERO: Rat = Rat { num: 0, den: 1 };

    fn new(num: i128, den: i128) -> Option<Rat> {
        if den == 0 {
            return None;
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den);
        Some(Rat {
            num: sign * num / g,
            den: (den / g).abs(),
        })
    }

    /// Exact conversion: every finite f64 is m·2^e.
    fn from_f64(x: f64) -> Option<Rat> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Rat::ZERO);
        }
        let bits = x.to_bits();
        let sign: i128 = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & 0xf_ffff_ffff_ffff) as i128;
        let (mant, e2) = if exp == 0 {
            (frac, -1074i64)
        } else {
            (frac + (1i128 << 52), exp - 1075)
        };
        if e2 >= 0 {
            if e2 > 60 {
                return None;
            }
            mant.checked_mul(1i128 << e2).and_then(|n| Rat::new(sign * n, 1))
        } else {
            let shift = -e2;
            if shift > 100 {
                return None;
            }
            Rat::new(sign * mant, 1i128 << shift)
        }
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn add(self, o: Rat) -> Option<Rat> {
        let n = self
            .num
            .checked_mul(o.den)?
            .checked_add(o.num.checked_mul(self.den)?)?;
        Rat::new(n, self.den.checked_mul(o.den)?)
    }

    fn sub(self, o: Rat) -> Option<Rat> {
        self.add(Rat {
            num: -o.num,
            den: o.den,
        })
    }

    fn mul(self, o: Rat) -> Option<Rat> {
        Rat::new(self.num.checked_mul(o.num)?, self.den.checked_mul(o.den)?)
    }

    fn div(self, o: Rat) -> Option<Rat> {
        if o.num == 0 {
            return None;
        }
        Rat::new(self.num.checked_mul(o.den)?, self.den.checked_mul(o.num)?)
    }

    fn cmp_rat(self, o: Rat) -> Option<Ordering> {
        let l = self.num.checked_mul(o.den)?;
        let r = o.num.checked_mul(self.den)?;
        Some(l.cmp(&r))
    }

    fn is_zero(self) -> bool {
        self.num == 0
    }

    fn abs(self) -> Rat {
        Rat {
            num: self.num.abs(),
            den: self.den,
        }
    }
}

/// Solve an N×N rational system. Outer None = arithmetic overflow; inner None
/// = singular matrix.
fn rat_solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Option<Vec<Rat>>> {
    let d = b.len();
    let mut m: Vec<Vec<Rat>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let piv = (col..d).find(|&r| !m[r][col].is_zero());
        let piv = match piv {
            Some(p) => p,
            None => return Some(None),
        };
        m.swap(col, piv);
        rhs.swap(col, piv);
        let diag = m[col][col];
        for r in (col + 1)..d {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].div(diag)?;
            for c in col..d {
                let t = factor.mul(m[col][c])?;
                m[r][c] = m[r][c].sub(t)?;
            }
            let t = factor.mul(rhs[col])?;
            rhs[r] = rhs[r].sub(t)?;
        }
    }
    let mut x = vec![Rat::ZERO; d];
    for i in (0..d).rev() {
        let mut s = rhs[i];
        for c in (i + 1)..d {
            s = s.sub(m[i][c].mul(x[c])?)?;
        }
        x[i] = s.div(m[i][i])?;
    }
    Some(Some(x))
}

// ---------------------------------------------------------------------------
// Admissible tuples
// ---------------------------------------------------------------------------

/// M surjective linear functionals on R^N with positive lengths: the data of
/// the constraint body `K = {x : |L_i(x)| <= l_i for all i}`.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct AdmissibleTuple {
    /// Ambient dimension N.
    pub n: usize,
    /// M×N functional coefficients, row-major.
    pub functionals: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl AdmissibleTuple {
    pub fn new(n: usize, functionals: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        if n == 0 || lengths.is_empty() {
            return Err(GhkError::InvalidParameter(
                "AdmissibleTuple needs N >= 1 and M >= 1".into(),
            ));
        }
        if functionals.len() != lengths.len() * n {
            return Err(GhkError::InvalidParameter(
                "functionals must be M×N row-major".into(),
            ));
        }
        for (i, row) in functionals.chunks_exact(n).enumerate() {
            if row.iter().all(|&v| v == 0.0) {
                return Err(GhkError::InvalidParameter(format!(
                    "functional {i} is the zero vector"
                )));
            }
        }
        if lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(GhkError::InvalidParameter("lengths must be positive".into()));
        }
        Ok(AdmissibleTuple {
            n,
            functionals,
            lengths,
        })
    }

    pub fn count(&self) -> usize {
        self.lengths.len()
    }

    pub fn functional(&self, i: usize) -> &[f64] {
        &self.functionals[i * self.n..(i + 1) * self.n]
    }

    /// The tuple of cube functionals h ↦ α·h (α ∈ {0,1}^k, α ≠ 0) with unit
    /// lengths, in bitmask order.
    pub fn gowers(k: usize) -> Self {
        let mut functionals = Vec::new();
        let mut lengths = Vec::new();
        for alpha in 1usize..(1 << k) {
            for i in 0..k {
                functionals.push(((alpha >> i) & 1) as f64);
            }
            lengths.push(1.0);
        }
        AdmissibleTuple {
            n: k,
            functionals,
            lengths,
        }
    }

    /// The Riesz-Sobolev tuple (x1, x2, x1+x2) with the given lengths.
    pub fn riesz_sobolev(l: [f64; 3]) -> Result<Self> {
        AdmissibleTuple::new(
            2,
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            l.to_vec(),
        )
    }
}

/// Verdict of the admissibility linear programs.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// max of L_m over K, one per constraint.
    pub maxima: Vec<f64>,
    /// A point of K attaining each maximum.
    pub witnesses: Vec<Vec<f64>>,
    /// Whether the exact rational path decided the question.
    pub exact: bool,
}

/// Vertices of `{x : lo_i <= a_i·x <= hi_i}` in exact rational arithmetic.
/// `None` = overflow or no vertex found (caller falls back to f64).
fn rat_vertices(
    rows: &[Vec<Rat>],
    lo: &[Rat],
    hi: &[Rat],
    dim: usize,
) -> Option<Vec<Vec<Rat>>> {
    let m = rows.len();
    if m < dim {
        return None;
    }
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    let mut choice: Vec<usize> = (0..dim).collect();
    loop {
        // all sign patterns over the chosen rows
        for pattern in 0..(1u32 << dim) {
            let a: Vec<Vec<Rat>> = choice.iter().map(|&i| rows[i].clone()).collect();
            let b: Vec<Rat> = choice
                .iter()
                .enumerate()
                .map(|(j, &i)| {
                    if (pattern >> j) & 1 == 1 {
                        hi[i]
                    } else {
                        lo[i]
                    }
                })
                .collect();
            match rat_solve(&a, &b)? {
                None => continue,
                Some(x) => {
                    // feasibility across all constraints
                    let mut feasible = true;
                    for i in 0..m {
                        let mut v = Rat::ZERO;
                        for c in 0..dim {
                            v = v.add(rows[i][c].mul(x[c])?)?;
                        }
                        if v.cmp_rat(lo[i])? == Ordering::Less
                            || v.cmp_rat(hi[i])? == Ordering::Greater
                        {
                            feasible = false;
                            break;
                        }
                    }
                    if feasible && !vertices.contains(&x) {
                        vertices.push(x);
                    }
                }
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                if vertices.is_empty() {
                    return None;
                }
                return Some(vertices);
            }
            i -= 1;
            if choice[i] != i + m - dim {
                choice[i] += 1;
                for j in (i + 1)..dim {
                    choice[j] = choice[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Vertices in f64 with tolerance; functional rows may be rank-deficient, in
/// which case enumeration happens inside the row space.
fn f64_vertices(rows: &[Vec<f64>], lo: &[f64], hi: &[f64], dim: usize) -> Vec<Vec<f64>> {
    // orthonormal basis of the row space
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= d * bi;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-10 {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push(v);
        }
    }
    let r = basis.len();
    // constraints in reduced coordinates: x = Σ t_j basis_j
    let reduced: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            basis
                .iter()
                .map(|b| row.iter().zip(b).map(|(a, c)| a * c).sum())
                .collect()
        })
        .collect();
    let m = rows.len();
    let mut verts_reduced: Vec<Vec<f64>> = Vec::new();
    let mut choice: Vec<usize> = (0..r).collect();
    if m < r || r == 0 {
        return Vec::new();
    }
    loop {
        for pattern in 0..(1u32 << r) {
            let mut a = Vec::with_capacity(r * r);
            let mut b = Vec::with_capacity(r);
            for (j, &i) in choice.iter().enumerate() {
                a.extend_from_slice(&reduced[i]);
                b.push(if (pattern >> j) & 1 == 1 { hi[i] } else { lo[i] });
            }
            if let Some(x) = crate::linalg::solve_general(&a, &b, r) {
                let feasible = (0..m).all(|i| {
                    let v: f64 = reduced[i].iter().zip(&x).map(|(p, q)| p * q).sum();
                    let scale = 1.0 + lo[i].abs().max(hi[i].abs());
                    v >= lo[i] - 1e-9 * scale && v <= hi[i] + 1e-9 * scale
                });
                if feasible
                    && !verts_reduced
                        .iter()
                        .any(|w| w.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9))
                {
                    verts_reduced.push(x);
                }
            }
        }
        let mut i = r;
        let done = loop {
            if i == 0 {
                break true;
            }
            i -= 1;
            if choice[i] != i + m - r {
                choice[i] += 1;
                for j in (i + 1)..r {
                    choice[j] = choice[j - 1] + 1;
                }
                break false;
            }
        };
        if done {
            break;
        }
    }
    // lift back to ambient coordinates
    verts_reduced
        .into_iter()
        .map(|t| {
            let mut x = vec![0.0; dim];
            for (tj, b) in t.iter().zip(&basis) {
                for a in 0..dim {
                    x[a] += tj * b[a];
                }
            }
            x
        })
        .collect()
}

/// Decide admissibility: for each m, maximize L_m over K by vertex
/// enumeration; the tuple is admissible iff every maximum equals l_m.
pub fn is_admissible(t: &AdmissibleTuple) -> Result<AdmissibilityReport> {
    let n = t.n;
    let m = t.count();
    // exact rational path
    let exact = (|| -> Option<AdmissibilityReport> {
        let rows: Option<Vec<Vec<Rat>>> = (0..m)
            .map(|i| {
                t.functional(i)
                    .iter()
                    .map(|&v| Rat::from_f64(v))
                    .collect::<Option<Vec<Rat>>>()
            })
            .collect();
        let rows = rows?;
        let lens: Vec<Rat> = t
            .lengths
            .iter()
            .map(|&l| Rat::from_f64(l))
            .collect::<Option<Vec<Rat>>>()?;
        let lo: Vec<Rat> = lens.iter().map(|l| Rat { num: -l.num, den: l.den }).collect();
        let verts = rat_vertices(&rows, &lo, &lens, n)?;
        let mut maxima = Vec::with_capacity(m);
        let mut witnesses = Vec::with_capacity(m);
        let mut admissible = true;
        for i in 0..m {
            let mut best: Option<(Rat, usize)> = None;
            for (vi, v) in verts.iter().enumerate() {
                let mut val = Rat::ZERO;
                for c in 0..n {
                    val = val.add(rows[i][c].mul(v[c])?)?;
                }
                match &best {
                    None => best = Some((val, vi)),
                    Some((b, _)) => {
                        if val.cmp_rat(*b)? == Ordering::Greater {
                            best = Some((val, vi));
                        }
                    }
                }
            }
            let (bval, bidx) = best?;
            if bval.cmp_rat(lens[i])? != Ordering::Equal {
                admissible = false;
            }
            maxima.push(bval.to_f64());
            witnesses.push(verts[bidx].iter().map(|r| r.to_f64()).collect());
        }
        Some(AdmissibilityReport {
            admissible,
            maxima,
            witnesses,
            exact: true,
        })
    })();
    if let Some(report) = exact {
        return Ok(report);
    }
    // f64 fallback with relative tolerance
    let rows: Vec<Vec<f64>> = (0..m).map(|i| t.functional(i).to_vec()).collect();
    let lo: Vec<f64> = t.lengths.iter().map(|l| -l).collect();
    let verts = f64_vertices(&rows, &lo, &t.lengths, n);
    if verts.is_empty() {
        return Err(GhkError::Internal(
            "vertex enumeration found no feasible vertex".into(),
        ));
    }
    let mut maxima = Vec::with_capacity(m);
    let mut witnesses = Vec::with_capacity(m);
    let mut admissible = true;
    for i in 0..m {
        let (mut best, mut bidx) = (f64::NEG_INFINITY, 0usize);
        for (vi, v) in verts.iter().enumerate() {
            let val: f64 = rows[i].iter().zip(v).map(|(a, b)| a * b).sum();
            if val > best {
                best = val;
                bidx = vi;
            }
        }
        if (best - t.lengths[i]).abs() > 1e-9 * t.lengths[i] {
            admissible = false;
        }
        maxima.push(best);
        witnesses.push(verts[bidx].clone());
    }
    Ok(AdmissibilityReport {
        admissible,
        maxima,
        witnesses,
        exact: false,
    })
}

/// Strict admissibility of constraint m: some witness attains |L_m| = l_m
/// with every other constraint strictly slack. Decided on the barycenter of
/// the face {L_m = l_m} ∩ K: a constraint is strictly slack somewhere on the
/// face iff it is strictly slack at the barycenter.
pub fn is_strictly_admissible(t: &AdmissibleTuple) -> Result<bool> {
    let n = t.n;
    let m = t.count();
    let rat_path = (|| -> Option<bool> {
        let rows: Option<Vec<Vec<Rat>>> = (0..m)
            .map(|i| {
                t.functional(i)
                    .iter()
                    .map(|&v| Rat::from_f64(v))
                    .collect::<Option<Vec<Rat>>>()
            })
            .collect();
        let rows = rows?;
        let lens: Vec<Rat> = t
            .lengths
            .iter()
            .map(|&l| Rat::from_f64(l))
            .collect::<Option<Vec<Rat>>>()?;
        let lo: Vec<Rat> = lens.iter().map(|l| Rat { num: -l.num, den: l.den }).collect();
        let verts = rat_vertices(&rows, &lo, &lens, n)?;
        for i in 0..m {
            // face vertices where L_i = +l_i
            let mut face: Vec<&Vec<Rat>> = Vec::new();
            for v in &verts {
                let mut val = Rat::ZERO;
                for c in 0..n {
                    val = val.add(rows[i][c].mul(v[c])?)?;
                }
                if val.cmp_rat(lens[i])? == Ordering::Equal {
                    face.push(v);
                }
            }
            if face.is_empty() {
                return Some(false);
            }
            // barycenter
            let count = Rat::new(face.len() as i128, 1)?;
            let mut bary = vec![Rat::ZERO; n];
            for v in &face {
                for c in 0..n {
                    bary[c] = bary[c].add(v[c])?;
                }
            }
            for c in 0..n {
                bary[c] = bary[c].div(count)?;
            }
            for j in 0..m {
                if j == i {
                    continue;
                }
                let mut val = Rat::ZERO;
                for c in 0..n {
                    val = val.add(rows[j][c].mul(bary[c])?)?;
                }
                if val.abs().cmp_rat(lens[j])? != Ordering::Less {
                    return Some(false);
                }
            }
        }
        Some(true)
    })();
    if let Some(v) = rat_path {
        return Ok(v);
    }
    // f64 fallback
    let rows: Vec<Vec<f64>> = (0..m).map(|i| t.functional(i).to_vec()).collect();
    let lo: Vec<f64> = t.lengths.iter().map(|l| -l).collect();
    let verts = f64_vertices(&rows, &lo, &t.lengths, n);
    if verts.is_empty() {
        return Err(GhkError::Internal(
            "vertex enumeration found no feasible vertex".into(),
        ));
    }
    for i in 0..m {
        let li = t.lengths[i];
        let face: Vec<&Vec<f64>> = verts
            .iter()
            .filter(|v| {
                let val: f64 = rows[i].iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                (val - li).abs() <= 1e-9 * li
            })
            .collect();
        if face.is_empty() {
            return Ok(false);
        }
        let mut bary = vec![0.0; n];
        for v in &face {
            for c in 0..n {
                bary[c] += v[c];
            }
        }
        for b in &mut bary {
            *b /= face.len() as f64;
        }
        for j in 0..m {
            if j == i {
                continue;
            }
            let val: f64 = rows[j].iter().zip(&bary).map(|(a, b)| a * b).sum();
            if val.abs() >= t.lengths[j] * (1.0 - 1e-9) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Burchard equivalence probe for the Riesz-Sobolev tuple (x1, x2, x1+x2):
/// returns (strict admissibility by the linear programs, strict triangle
/// condition l_i < l_j + l_k for every permutation).
pub fn burchard_check(l1: f64, l2: f64, l3: f64) -> Result<(bool, bool)> {
    let t = AdmissibleTuple::riesz_sobolev([l1, l2, l3])?;
    let lp = is_strictly_admissible(&t)?;
    let tri = l1 < l2 + l3 && l2 < l1 + l3 && l3 < l1 + l2;
    Ok((lp, tri))
}

// ---------------------------------------------------------------------------
// Volumes
// ---------------------------------------------------------------------------

/// Evaluation method for volume profiles.
#[derive(Clone, Copy, Debug)]
pub enum VolumeMethod {
    /// Recursive exact slicing (the oracle; practical for N <= 3).
    Exact,
    /// Seeded Monte Carlo over the vertex bounding box.
    MonteCarlo { samples: u64, seed: u64 },
}

/// A volume estimate with its uncertainty (0 for the exact method).
#[derive(Clone, Copy, Debug)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Exact volume of {y : lo_i <= a_i·y <= hi_i} by the recursive surface
/// decomposition vol = (1/N)·Σ_faces dist(0, H_j)·vol_{N-1}(F_j).
fn exact_volume(rows: &[Vec<f64>], lo: &[f64], hi: &[f64], dim: usize) -> f64 {
    // one-sided rows: a·y <= b
    let mut sided: Vec<(Vec<f64>, f64)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        sided.push((r.clone(), hi[i]));
        sided.push((r.iter().map(|v| -v).collect(), -lo[i]));
    }
    sided.dedup_by(|a, b| a.1 == b.1 && a.0 == b.0);
    exact_volume_sided(&sided, dim)
}

fn exact_volume_sided(rows: &[(Vec<f64>, f64)], dim: usize) -> f64 {
    if dim == 1 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, b) in rows {
            let a = a[0];
            if a.abs() < 1e-13 {
                if *b < 0.0 {
                    return 0.0;
                }
                continue;
            }
            if a > 0.0 {
                hi = hi.min(b / a);
            } else {
                lo = lo.max(b / a);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return f64::INFINITY;
        }
        return (hi - lo).max(0.0);
    }
    let mut total = 0.0;
    for (j, (aj, bj)) in rows.iter().enumerate() {
        let norm2: f64 = aj.iter().map(|v| v * v).sum();
        if norm2 < 1e-26 {
            continue;
        }
        let norm = norm2.sqrt();
        // base point on the hyperplane and an orthonormal basis of a_j^⊥
        let p0: Vec<f64> = aj.iter().map(|v| v * bj / norm2).collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let unit: Vec<f64> = aj.iter().map(|v| v / norm).collect();
        for e in 0..dim {
            let mut v = vec![0.0; dim];
            v[e] = 1.0;
            let d: f64 = v.iter().zip(&unit).map(|(x, u)| x * u).sum();
            for (vi, ui) in v.iter_mut().zip(&unit) {
                *vi -= d * ui;
            }
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(x, u)| x * u).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= d * bi;
                }
            }
            let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vn > 1e-9 {
                for vi in &mut v {
                    *vi /= vn;
                }
                basis.push(v);
                if basis.len() == dim - 1 {
                    break;
                }
            }
        }
        // face constraints in the (dim-1)-coordinates t: a_i·(p0 + B t) <= b_i
        let mut sub: Vec<(Vec<f64>, f64)> = Vec::new();
        for (i, (ai, bi)) in rows.iter().enumerate() {
            if i == j {
                continue;
            }
            let offset: f64 = ai.iter().zip(&p0).map(|(x, y)| x * y).sum();
            let coeffs: Vec<f64> = basis
                .iter()
                .map(|b| ai.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect();
            sub.push((coeffs, bi - offset));
        }
        let face = exact_volume_sided(&sub, dim - 1);
        if face.is_infinite() {
            return f64::INFINITY;
        }
        total += bj / norm * face;
    }
    (total / dim as f64).max(0.0)
}

/// Monte Carlo volume over the vertex bounding box, with the counter RNG
/// keyed by (instance hash, sample index).
fn mc_volume(
    rows: &[Vec<f64>],
    lo: &[f64],
    hi: &[f64],
    dim: usize,
    samples: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    let verts = f64_vertices(rows, lo, hi, dim);
    if verts.is_empty() {
        return Ok(VolumeEstimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let mut box_lo = vec![f64::INFINITY; dim];
    let mut box_hi = vec![f64::NEG_INFINITY; dim];
    for v in &verts {
        for a in 0..dim {
            box_lo[a] = box_lo[a].min(v[a]);
            box_hi[a] = box_hi[a].max(v[a]);
        }
    }
    let mut box_vol = 1.0;
    for a in 0..dim {
        let w = box_hi[a] - box_lo[a];
        if w <= 0.0 {
            return Ok(VolumeEstimate {
                value: 0.0,
                std_error: 0.0,
            });
        }
        box_vol *= w;
    }
    // key the stream off the full instance
    let mut key_data: Vec<f64> = Vec::new();
    for r in rows {
        key_data.extend_from_slice(r);
    }
    key_data.extend_from_slice(lo);
    key_data.extend_from_slice(hi);
    let key = hash_f64s(seed, &key_data);
    let rng = CounterRng::new(key);
    let mut hits = 0u64;
    let mut y = vec![0.0; dim];
    for s in 0..samples {
        for (a, ya) in y.iter_mut().enumerate() {
            let u = rng.at(s * dim as u64 + a as u64) as f64 / u64::MAX as f64;
            *ya = box_lo[a] + (box_hi[a] - box_lo[a]) * u;
        }
        let inside = rows.iter().enumerate().all(|(i, r)| {
            let v: f64 = r.iter().zip(&y).map(|(p, q)| p * q).sum();
            v >= lo[i] && v <= hi[i]
        });
        if inside {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(VolumeEstimate {
        value: p * box_vol,
        std_error: box_vol * (p * (1.0 - p) / samples as f64).sqrt(),
    })
}

/// Ψ(t⃗): volume of {y : |L_i(y) − t_i| <= l_i}.
pub fn psi(t: &AdmissibleTuple, shifts: &[f64], method: VolumeMethod) -> Result<VolumeEstimate> {
    if shifts.len() != t.count() {
        return Err(GhkError::InvalidParameter(
            "psi needs one shift per functional".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = (0..t.count()).map(|i| t.functional(i).to_vec()).collect();
    let lo: Vec<f64> = (0..t.count()).map(|i| shifts[i] - t.lengths[i]).collect();
    let hi: Vec<f64> = (0..t.count()).map(|i| shifts[i] + t.lengths[i]).collect();
    match method {
        VolumeMethod::Exact => {
            let v = exact_volume(&rows, &lo, &hi, t.n);
            if v.is_infinite() {
                return Err(GhkError::Domain("polytope is unbounded".into()));
            }
            Ok(VolumeEstimate {
                value: v,
                std_error: 0.0,
            })
        }
        VolumeMethod::MonteCarlo { samples, seed } => {
            mc_volume(&rows, &lo, &hi, t.n, samples, seed)
        }
    }
}

/// H(x): volume of {h⃗ ∈ R^k : |x + α·h⃗| <= 1 for every α ≠ 0}. Even in x,
/// supported on [−(k+1)/(k−1), (k+1)/(k−1)].
pub fn h_profile(x: f64, k: usize, method: VolumeMethod) -> Result<VolumeEstimate> {
    if k < 2 {
        return Err(GhkError::InvalidParameter("h_profile requires k >= 2".into()));
    }
    let t = AdmissibleTuple::gowers(k);
    let shifts: Vec<f64> = vec![-x; t.count()];
    psi(&t, &shifts, method)
}

/// φ(t) = ∫ 1_{J+t}(x)·H(x) dx with J = [−η−1, 1+η], by adaptive Simpson
/// quadrature over the exact H slices. Returns the value and whether η was
/// inside [0, 2/(k−1)] (outside, monotonicity in t is known to fail).
pub fn phi_profile(t: f64, k: usize, eta: f64) -> Result<(f64, bool)> {
    if k < 2 {
        return Err(GhkError::InvalidParameter("phi_profile requires k >= 2".into()));
    }
    if eta < 0.0 {
        return Err(GhkError::InvalidParameter("eta must be >= 0".into()));
    }
    let in_range = eta <= 2.0 / (k as f64 - 1.0) + 1e-12;
    let support = (k as f64 + 1.0) / (k as f64 - 1.0);
    let lo = (t - 1.0 - eta).max(-support);
    let hi = (t + 1.0 + eta).min(support);
    if lo >= hi {
        return Ok((0.0, in_range));
    }
    let f = |x: f64| -> f64 {
        h_profile(x, k, VolumeMethod::Exact)
            .map(|e| e.value)
            .unwrap_or(0.0)
    };
    let value = adaptive_simpson(&f, lo, hi, 1e-9, 24);
    Ok((value, in_range))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, m, fm, whole, tol, depth)
}
