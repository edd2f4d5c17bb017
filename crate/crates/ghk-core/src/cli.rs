//! Experiment harness behind the `ghk` command line: stability sweeps,
//! scale-localization and level-set diagnostics, the nonnegative inequality
//! chain, and the self-test battery.
//!
//! Every command is deterministic given (config, seed): all randomness flows
//! through counter-based streams and rows are emitted in sorted order, so
//! re-runs produce byte-identical CSV/JSON. Wall-clock fields are kept out of
//! the serialized output for the same reason.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GhkError, Result};
use crate::extremizer::{fit, normalize, synthesize, ExtremizerParams, FitOptions};
use crate::gowers::{
    deficit, gowers_inner, holder_exponent, sharp_constant, sharp_young_b, shifted_product,
    u2_norm, uk_norm, uk_norm_via_recursion, young_c_ext,
};
use crate::grid::{layer_cake, lp_norm, super_level_mask, GridFunction, GridSpec};
use crate::phase::RealPolynomial;
use crate::rearrange::symmetric_rearrangement;
use crate::rng::CounterRng;

/// Output schema version stamped into every CSV row.
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Stability sweep
// ---------------------------------------------------------------------------

/// Perturbation families of the stability sweep. The phase twist has degree
/// exactly k: a sharp negative control probing past the extremizer family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationFamily {
    Bump,
    Noise,
    PhaseTwist,
}

/// Configuration of `ghk stability`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub k: usize,
    pub n: usize,
    pub grid_cells: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    /// Base extremizer parameters (JSON form of [`ExtremizerParams`]).
    pub base: serde_json::Value,
    pub family: PerturbationFamily,
    pub amplitudes: Vec<f64>,
    pub seeds: Vec<u64>,
    pub fit_restarts: usize,
}

impl StabilityConfig {
    /// The built-in ladder: k=2, n=1, bump family, 12 amplitudes × 5 seeds.
    pub fn default_ladder() -> Self {
        let base = ExtremizerParams::standard(2, 1);
        StabilityConfig {
            k: 2,
            n: 1,
            grid_cells: 512,
            box_lo: -8.0,
            box_hi: 8.0,
            base: base.to_json_value(),
            family: PerturbationFamily::Bump,
            amplitudes: (0..12).map(|i| 0.05 * i as f64).collect(),
            seeds: vec![1, 2, 3, 4, 5],
            fit_restarts: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(GhkError::InvalidParameter("k: must be >= 2".into()));
        }
        if self.n != 1 {
            return Err(GhkError::InvalidParameter(
                "n: stability sweep currently runs on n = 1".into(),
            ));
        }
        if self.grid_cells < 16 {
            return Err(GhkError::InvalidParameter("grid_cells: must be >= 16".into()));
        }
        if !(self.box_hi > self.box_lo) {
            return Err(GhkError::InvalidParameter(
                "box_hi: must exceed box_lo".into(),
            ));
        }
        if self.amplitudes.is_empty() {
            return Err(GhkError::InvalidParameter(
                "amplitudes: must be nonempty".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(GhkError::InvalidParameter("seeds: must be nonempty".into()));
        }
        ExtremizerParams::from_json_value(&self.base)
            .map_err(|e| GhkError::InvalidParameter(format!("base: {e}")))?;
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::line(self.grid_cells, self.box_lo, self.box_hi)
    }
}

/// One row of the stability sweep.
#[derive(Clone, Debug, Serialize)]
pub struct DeficitReport {
    pub schema: u32,
    pub k: usize,
    pub n: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub norm_pk: f64,
    pub norm_uk: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub fitted: serde_json::Value,
    pub grid: GridSpec,
    /// Wall-clock per row; excluded from serialized output so re-runs stay
    /// byte-identical.
    #[serde(skip)]
    pub runtime_ms: f64,
}

fn bump_profile(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn perturbation(
    family: PerturbationFamily,
    spec: &GridSpec,
    seed: u64,
    p: f64,
) -> Result<GridFunction> {
    let mut rng = CounterRng::new(seed ^ 0xabcd_1234);
    let width = spec.spacing[0] * spec.shape[0] as f64;
    let mid = spec.origin[0] + 0.5 * width;
    let g = match family {
        PerturbationFamily::Bump => {
            let c = mid + rng.next_range(-0.06, 0.06) * width;
            let w = rng.next_range(0.035, 0.055) * width;
            GridFunction::from_fn(spec, |x| Complex64::new(bump_profile((x[0] - c) / w), 0.0))?
        }
        PerturbationFamily::Noise => {
            let modes: Vec<(f64, f64, f64)> = (1..=8)
                .map(|m| (m as f64, rng.next_normal(), rng.next_normal()))
                .collect();
            GridFunction::from_fn(spec, |x| {
                let t = (x[0] - mid) / width;
                let envelope = (-(4.0 * t).powi(2)).exp();
                let mut v = 0.0;
                for (m, a, b) in &modes {
                    let arg = 2.0 * std::f64::consts::PI * m * t;
                    v += a * arg.cos() + b * arg.sin();
                }
                Complex64::new(v * envelope, 0.0)
            })?
        }
        PerturbationFamily::PhaseTwist => {
            return Err(GhkError::Internal(
                "phase twist is multiplicative, not additive".into(),
            ))
        }
    };
    normalize(&g, p)
}

/// Run the sweep: rows ordered by (amplitude, seed), deterministic given the
/// config.
pub fn run_stability_sweep(config: &StabilityConfig) -> Result<Vec<DeficitReport>> {
    config.validate()?;
    let spec = config.grid_spec();
    let base = ExtremizerParams::from_json_value(&config.base)?;
    let base_f = synthesize(&base, &spec)?;
    let p = holder_exponent(config.k);
    let mut reports = Vec::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (ai, _) in config.amplitudes.iter().enumerate() {
        for (si, _) in config.seeds.iter().enumerate() {
            order.push((ai, si));
        }
    }
    order.sort_by(|a, b| {
        config.amplitudes[a.0]
            .total_cmp(&config.amplitudes[b.0])
            .then(config.seeds[a.1].cmp(&config.seeds[b.1]))
    });
    for (ai, si) in order {
        let amplitude = config.amplitudes[ai];
        let seed = config.seeds[si];
        let start = std::time::Instant::now();
        let f = match config.family {
            PerturbationFamily::PhaseTwist => {
                let mut g = base_f.clone();
                let mut x = vec![0.0; 1];
                for lin in 0..g.len() {
                    g.cell_center(lin, &mut x);
                    let phase = 2.0 * std::f64::consts::PI * amplitude * x[0].powi(config.k as i32);
                    g.values_mut()[lin] *= Complex64::from_polar(1.0, phase);
                }
                normalize(&g, p)?
            }
            family => {
                let pert = perturbation(family, &spec, seed, p)?;
                let sum = base_f.add(&pert.scaled(Complex64::new(amplitude, 0.0)))?;
                normalize(&sum, p)?
            }
        };
        let norm_pk = lp_norm(&f, p)?;
        let norm_uk = uk_norm(&f, config.k)?;
        let a = sharp_constant(config.k, config.n)?;
        let delta = 1.0 - norm_uk / (a * norm_pk);
        let fitted = fit(
            &f,
            config.k,
            &FitOptions {
                restarts: config.fit_restarts,
                seed,
                ..Default::default()
            },
        )?;
        reports.push(DeficitReport {
            schema: SCHEMA_VERSION,
            k: config.k,
            n: config.n,
            amplitude,
            seed,
            norm_pk,
            norm_uk,
            delta,
            epsilon: fitted.epsilon,
            fitted: fitted.params.to_json_value(),
            grid: spec.clone(),
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(reports)
}

/// CSV with '.' decimals, one row per report, ladder order.
pub fn sweep_csv(reports: &[DeficitReport]) -> String {
    let mut out = String::from("schema,k,n,amplitude,seed,norm_pk,norm_uk,delta,epsilon\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.schema, r.k, r.n, r.amplitude, r.seed, r.norm_pk, r.norm_uk, r.delta, r.epsilon
        ));
    }
    out
}

/// Companion gnuplot script for a sweep CSV (data-only plotting).
pub fn sweep_gnuplot(csv_path: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'amplitude'\nset ylabel 'delta / epsilon'\nplot '{csv_path}' using 4:8 with points title 'delta', \\\n     '{csv_path}' using 4:9 with points title 'epsilon'\n"
    )
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut ranks = vec![0.0; vals.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && vals[idx[j + 1]] == vals[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &t in &idx[i..=j] {
                ranks[t] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..xs.len() {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx).powi(2);
        vy += (ry[i] - my).powi(2);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

// ---------------------------------------------------------------------------
// Scale localization
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ScaleLevel {
    pub j: i32,
    pub measure: f64,
    /// 2^j · measure^{1/p_k}.
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleTail {
    pub m: u32,
    /// Σ_{|j−l*|>=m} 2^{j·p_k} · measure_j.
    pub value: f64,
}

/// Dyadic scale diagnostics of |f|.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleReport {
    pub schema: u32,
    pub k: usize,
    pub levels: Vec<ScaleLevel>,
    pub l_star: i32,
    pub c0_realized: f64,
    pub tail: Vec<ScaleTail>,
    /// Power-of-two dilation bringing the l* level set to measure nearest 1.
    pub lambda_suggested: f64,
}

pub fn scale_localization(f: &GridFunction, k: usize) -> Result<ScaleReport> {
    let p = holder_exponent(k);
    let cake = layer_cake(f);
    if cake.levels.is_empty() {
        return Err(GhkError::Domain("scale localization of the zero function".into()));
    }
    let mut levels = Vec::new();
    let mut l_star = 0i32;
    let mut best = f64::NEG_INFINITY;
    for (&j, lv) in &cake.levels {
        let weight = (j as f64).exp2() * lv.measure.powf(1.0 / p);
        if weight > best {
            best = weight;
            l_star = j;
        }
        levels.push(ScaleLevel {
            j,
            measure: lv.measure,
            weight,
        });
    }
    let max_dist = cake
        .levels
        .keys()
        .map(|&j| (j - l_star).unsigned_abs())
        .max()
        .unwrap_or(0);
    let mut tail = Vec::new();
    for m in 0..=max_dist + 1 {
        let value: f64 = cake
            .levels
            .iter()
            .filter(|(&j, _)| (j - l_star).unsigned_abs() >= m)
            .map(|(&j, lv)| (j as f64 * p).exp2() * lv.measure)
            .sum();
        tail.push(ScaleTail { m, value });
    }
    let n = f.dim() as f64;
    let m_star = cake.levels[&l_star].measure;
    let lambda_suggested = (m_star.log2() / n).round().exp2();
    Ok(ScaleReport {
        schema: SCHEMA_VERSION,
        k,
        levels,
        l_star,
        c0_realized: best,
        tail,
        lambda_suggested,
    })
}

// ---------------------------------------------------------------------------
// Level-set alignment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct LevelsetRow {
    pub s: f64,
    pub measure: f64,
    /// uk(1_{F_s})^{2^k} / uk(1_{F_s^*})^{2^k}; null when the set is empty.
    pub r: Option<f64>,
}

/// Ratio of the U^k power of each super-level set against its rearrangement,
/// over an s-grid in [eta, max|f| − eta].
pub fn levelset_alignment(
    f: &GridFunction,
    k: usize,
    eta: f64,
    s_count: usize,
) -> Result<Vec<LevelsetRow>> {
    let max_mod = f.values().iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if !(max_mod > 2.0 * eta) {
        return Err(GhkError::Domain(format!(
            "empty range: max|f| = {max_mod} with eta = {eta}"
        )));
    }
    let fstar = symmetric_rearrangement(f);
    let spec = f.spec();
    let lo = eta;
    let hi = max_mod - eta;
    let count = s_count.max(2);
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let s = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        let set_f = super_level_mask(f, s)?;
        let set_star = super_level_mask(&fstar, s)?;
        if set_f.cell_count == 0 || set_star.cell_count == 0 {
            rows.push(LevelsetRow {
                s,
                measure: set_f.measure,
                r: None,
            });
            continue;
        }
        let two_k = 2f64.powi(k as i32);
        let uf = uk_norm(&set_f.indicator(&spec), k)?.powf(two_k);
        let us = uk_norm(&set_star.indicator(&spec), k)?.powf(two_k);
        rows.push(LevelsetRow {
            s,
            measure: set_f.measure,
            r: if us > 0.0 { Some(uf / us) } else { None },
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// The nonnegative inequality chain
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ChainStep {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs (must be >= −tolerance).
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub schema: u32,
    /// Degree of the inner product being majorized (k+1 in the chain).
    pub degree: usize,
    pub steps: Vec<ChainStep>,
    pub all_hold: bool,
}

fn a_const(k: usize, n: usize) -> f64 {
    if k < 2 {
        1.0
    } else {
        sharp_constant(k, n).expect("k >= 2")
    }
}

/// Evaluate every intermediate quantity of the nonnegative chain majorizing
/// 𝒯_{k+1} and assert each inequality with slack. Inputs: 2^{k+1} nonnegative
/// functions sharing one grid.
pub fn verify_chain(k: usize, fs: &[GridFunction]) -> Result<ChainReport> {
    if k < 1 {
        return Err(GhkError::InvalidParameter("chain requires k >= 1".into()));
    }
    let want = 1usize << (k + 1);
    if fs.len() != want {
        return Err(GhkError::InvalidParameter(format!(
            "chain at degree {} needs {want} functions, got {}",
            k + 1,
            fs.len()
        )));
    }
    for (i, f) in fs.iter().enumerate() {
        if !fs[0].same_grid(f) {
            return Err(GhkError::GridMismatch("chain inputs must share one grid".into()));
        }
        for v in f.values() {
            if v.re < -1e-12 || v.im.abs() > 1e-12 {
                return Err(GhkError::InvalidParameter(format!(
                    "input {i} is not nonnegative"
                )));
            }
        }
    }
    let n = fs[0].dim();
    let p_k = holder_exponent(k);
    let p_k1 = holder_exponent(k + 1);
    let a_k = a_const(k, n);
    let b_k1 = sharp_young_b(k, n)?;
    let two_k = 2f64.powi(k as i32);
    let vol = fs[0].cell_volume();

    let top = 1usize << k;
    let q1 = gowers_inner(fs, k + 1)?.re;

    // slice quantities over every lattice offset
    let mut q2 = 0.0; // Σ_h Π_α ‖T^h f_{(α,0)} f_{(α,1)}‖_{U^k}
    let mut q3_inner = 0.0; // Σ_h Π_α ‖·‖_{p_k}
    let mut younger = vec![0.0f64; top]; // per α: Σ_h ‖·‖_{p_k}^{2^k}
    for h in crate::gowers::lattice_offsets(fs[0].shape()) {
        let mut prod_u = 1.0;
        let mut prod_p = 1.0;
        for alpha in 0..top {
            let g = shifted_product(&fs[alpha | top], &fs[alpha], &h);
            let pnorm = lp_norm(&g, p_k)?;
            prod_p *= pnorm;
            younger[alpha] += pnorm.powf(two_k) * vol;
            if prod_u != 0.0 {
                prod_u *= if k == 1 {
                    uk_norm(&g, 1)?
                } else {
                    uk_norm(&g, k)?
                };
            }
        }
        q2 += prod_u * vol;
        q3_inner += prod_p * vol;
    }
    let q3 = a_k.powf(two_k) * q3_inner;
    let mut q4 = a_k.powf(two_k);
    for y in &younger {
        q4 *= y.powf(1.0 / two_k);
    }
    // Young step per α and the closed final bound
    let mut young_ok = true;
    let mut steps = Vec::new();
    for (alpha, &y) in younger.iter().enumerate() {
        let bound = b_k1.powi(k as i32 + 1)
            * lp_norm(&fs[alpha | top], p_k1)?.powf(two_k)
            * lp_norm(&fs[alpha], p_k1)?.powf(two_k);
        let holds = y <= bound * (1.0 + 1e-9) + 1e-12;
        young_ok &= holds;
        steps.push(ChainStep {
            name: format!("young[alpha={alpha}]"),
            lhs: y,
            rhs: bound,
            slack: bound - y,
            holds,
        });
    }
    let mut final_bound = a_const(k + 1, n).powf(2.0 * two_k);
    for f in fs {
        final_bound *= lp_norm(f, p_k1)?;
    }
    let tol = |x: f64| 1e-9 * x.abs() + 1e-12;
    let push = |name: &str, lhs: f64, rhs: f64, steps: &mut Vec<ChainStep>| {
        let holds = lhs <= rhs + tol(rhs);
        steps.push(ChainStep {
            name: name.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            holds,
        });
        holds
    };
    let mut all = young_ok;
    all &= push("gowers-cauchy-schwarz", q1, q2, &mut steps);
    all &= push("norm-inequality", q2, q3, &mut steps);
    all &= push("holder", q3, q4, &mut steps);
    all &= push("final-bound", q1, final_bound, &mut steps);
    Ok(ChainReport {
        schema: SCHEMA_VERSION,
        degree: k + 1,
        steps,
        all_hold: all,
    })
}

/// Scalar-only mode: the constant identity A(k)^{2^k}·B(k+1)^{k+1} =
/// A(k+1)^{2^{k+1}} for k = 1..5.
pub fn verify_chain_constants() -> Result<ChainReport> {
    let mut steps = Vec::new();
    let mut all = true;
    for k in 1..=5usize {
        let two_k = 2f64.powi(k as i32);
        let lhs = a_const(k, 1).powf(two_k) * sharp_young_b(k, 1)?.powi(k as i32 + 1);
        let rhs = a_const(k + 1, 1).powf(2.0 * two_k);
        let holds = (lhs - rhs).abs() <= 1e-12 * rhs;
        all &= holds;
        steps.push(ChainStep {
            name: format!("constant-identity[k={k}]"),
            lhs,
            rhs,
            slack: rhs - lhs,
            holds,
        });
    }
    Ok(ChainReport {
        schema: SCHEMA_VERSION,
        degree: 0,
        steps,
        all_hold: all,
    })
}

// ---------------------------------------------------------------------------
// Self test
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub schema: u32,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Reduced-size invariant battery. `mutate` names a check whose constant
/// table is perturbed before checking — the harness must then fail with that
/// check named (a mutation-test hook).
pub fn selftest(mutate: Option<&str>) -> Result<SelftestReport> {
    let mut checks = Vec::new();
    let poison = |name: &str| mutate == Some(name);

    // constants: the two closed-form identities at 1e-12
    {
        let name = "constants";
        let mut worst: f64 = 0.0;
        let fudge = if poison(name) { 1.0 + 1e-6 } else { 1.0 };
        let mut prev = 1.0f64;
        for k in 2..=6usize {
            let kf = k as f64;
            let a = a_const(k, 1) * fudge;
            let route = (young_c_ext(2.0 * kf / (kf + 1.0)).powi(2) / young_c_ext(kf))
                .powf(kf / 2f64.powi(k as i32))
                * prev.sqrt();
            worst = worst.max((a - route).abs() / route);
            prev = a;
        }
        for k in 1..=5usize {
            let two_k = 2f64.powi(k as i32);
            let lhs = a_const(k, 1).powf(two_k) * sharp_young_b(k, 1).unwrap().powi(k as i32 + 1);
            let rhs = a_const(k + 1, 1).powf(2.0 * two_k) * fudge;
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
        checks.push(CheckResult {
            name: name.into(),
            passed: worst <= 1e-12,
            detail: format!("worst relative error {worst:.3e}"),
        });
    }

    // fft vs recursion cross-validation on seeded random compact functions
    {
        let name = "fft-recursion";
        let spec = GridSpec::line(64, -2.0, 2.0);
        let mut worst: f64 = 0.0;
        for seed in 0..5u64 {
            let mut rng = CounterRng::new(7000 + seed);
            let f = GridFunction::from_fn(&spec, |x| {
                if x[0].abs() < 1.0 {
                    Complex64::new(rng.next_normal(), rng.next_normal())
                } else {
                    Complex64::default()
                }
            })
            .unwrap();
            let fft = u2_norm(&f);
            let mut rec = uk_norm_via_recursion(&f, 2, crate::gowers::DEFAULT_BUDGET)?;
            if poison(name) {
                rec *= 1.0 + 1e-6;
            }
            worst = worst.max((fft - rec).abs() / fft.max(1e-300));
        }
        checks.push(CheckResult {
            name: name.into(),
            passed: worst <= 1e-8,
            detail: format!("worst relative gap {worst:.3e}"),
        });
    }

    // indicator benchmark: u2 and deficit against the sinc^4 oracle
    {
        let name = "indicator";
        let spec = GridSpec::line(512, -2.0, 2.0);
        let f = GridFunction::from_fn(&spec, |x| {
            if x[0] > 0.0 && x[0] < 1.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        })
        .unwrap();
        let mut u = u2_norm(&f);
        if poison(name) {
            u *= 1.0 + 1e-2;
        }
        let oracle = (2.0f64 / 3.0).powf(0.25);
        let d = deficit(&f, 2)?;
        let du = (u - oracle).abs();
        let dd = (d - 0.035321370039691).abs();
        checks.push(CheckResult {
            name: name.into(),
            passed: du < 1e-3 && dd < 2e-3,
            detail: format!("|u2 - oracle| = {du:.3e}, |deficit - oracle| = {dd:.3e}"),
        });
    }

    // rearrangement: U^k never drops and L^p multisets stay bit-identical
    {
        let name = "rearrangement";
        let spec = GridSpec::line(64, -2.0, 2.0);
        let mut ok = true;
        let mut detail = String::from("all seeds pass");
        'outer: for seed in 0..20u64 {
            let mut rng = CounterRng::new(8000 + seed);
            let c = rng.next_range(-1.0, 1.0);
            let f = GridFunction::from_fn(&spec, |x| {
                let v = (-3.0 * (x[0] - c).powi(2)).exp() + 0.5 * rng.next_f64() * 0.0
                    + 0.6 * (-7.0 * (x[0] + c).powi(2)).exp();
                Complex64::new(v, 0.0)
            })
            .unwrap();
            let g = symmetric_rearrangement(&f);
            for k in [2usize, 3] {
                let a = uk_norm(&f, k)?;
                let mut b = uk_norm(&g, k)?;
                if poison(name) {
                    b -= 1e-3;
                }
                if b < a - 1e-9 {
                    ok = false;
                    detail = format!("seed {seed} k={k}: {b} < {a}");
                    break 'outer;
                }
            }
            let pa = lp_norm(&f, 4.0 / 3.0)?;
            let pb = lp_norm(&g, 4.0 / 3.0)?;
            if pa.to_bits() != pb.to_bits() {
                ok = false;
                detail = format!("seed {seed}: L^p not bit-identical");
                break;
            }
        }
        checks.push(CheckResult {
            name: name.into(),
            passed: ok,
            detail,
        });
    }

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(SelftestReport {
        schema: SCHEMA_VERSION,
        checks,
        all_passed,
    })
}

// ---------------------------------------------------------------------------
// Shared CLI helpers
// ---------------------------------------------------------------------------

/// Parse `--grid N,lo,hi` (1-d) or `N1xN2,lo1,hi1,lo2,hi2`.
pub fn parse_grid_flag(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() < 3 {
        return Err(GhkError::Parse(
            "grid flag needs at least cells,lo,hi".into(),
        ));
    }
    let cells: Vec<usize> = parts[0]
        .split('x')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| GhkError::Parse(format!("grid cells {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let bounds: Vec<f64> = parts[1..]
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| GhkError::Parse(format!("grid bound {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if bounds.len() != 2 * cells.len() {
        return Err(GhkError::Parse(format!(
            "grid flag needs 2 bounds per axis: got {} cells axes and {} bounds",
            cells.len(),
            bounds.len()
        )));
    }
    let lo: Vec<f64> = bounds.iter().step_by(2).copied().collect();
    let hi: Vec<f64> = bounds.iter().skip(1).step_by(2).copied().collect();
    for a in 0..cells.len() {
        if !(hi[a] > lo[a]) || cells[a] == 0 {
            return Err(GhkError::Parse(format!("grid axis {a}: empty box or zero cells")));
        }
    }
    Ok(GridSpec::boxed(&cells, &lo, &hi))
}

/// A synthesized phase polynomial for CLI demos: degree-d monomial in x_0.
pub fn monomial_phase(n: usize, degree: usize, coeff: f64) -> RealPolynomial {
    let mut p = RealPolynomial::zero(n, degree);
    let mut gamma = vec![0u32; n];
    gamma[0] = degree as u32;
    p.set(gamma, coeff);
    p
}
