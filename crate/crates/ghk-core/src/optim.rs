//! Derivative-free simplex minimization (Nelder-Mead).
//!
//! The fit objective is a quasi-smooth L^p distance with p < 2, so gradients
//! are unreliable near the optimum; reflection-type search is used instead.

/// Outcome of a simplex run.
#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Options for [`nelder_mead`].
#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    pub f_tolerance: f64,
    pub x_tolerance: f64,
    /// Initial per-coordinate displacement building the simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 4000,
            f_tolerance: 1e-14,
            x_tolerance: 1e-12,
            initial_step: 0.1,
        }
    }
}

/// Classic Nelder-Mead with standard parameters (α=1, γ=2, ρ=1/2, σ=1/2).
/// Deterministic for a given start.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        let step = if p[i].abs() > 1e-8 {
            p[i].abs() * opts.initial_step
        } else {
            opts.initial_step
        };
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let f_spread = (values[worst] - values[best]).abs();
        let x_spread = simplex
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if f_spread <= opts.f_tolerance && x_spread <= opts.x_tolerance {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; dim];
        for (i, p) in simplex.iter().enumerate() {
            if i != worst {
                for a in 0..dim {
                    centroid[a] += p[a];
                }
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }

        let lerp = |t: f64| -> Vec<f64> {
            (0..dim)
                .map(|a| centroid[a] + t * (centroid[a] - simplex[worst][a]))
                .collect()
        };
        let reflected = lerp(1.0);
        let f_r = f(&reflected);
        if f_r < values[order[0]] {
            let expanded = lerp(2.0);
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[worst] = expanded;
                values[worst] = f_e;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_r;
            }
        } else if f_r < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_r;
        } else {
            let contracted = if f_r < values[worst] {
                lerp(0.5)
            } else {
                lerp(-0.5)
            };
            let f_c = f(&contracted);
            if f_c < values[worst].min(f_r) {
                simplex[worst] = contracted;
                values[worst] = f_c;
            } else {
                // shrink toward the best vertex
                let best_point = simplex[best].clone();
                for (i, p) in simplex.iter_mut().enumerate() {
                    if i != best {
                        for a in 0..dim {
                            p[a] = best_point[a] + 0.5 * (p[a] - best_point[a]);
                        }
                        values[i] = f(p);
                    }
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=dim {
        if values[i] < values[best] {
            best = i;
        }
    }
    SimplexResult {
        x: simplex.swap_remove(best),
        value: values[best],
        iterations,
        converged,
    }
}
