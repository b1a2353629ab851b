//! Majorization-minimization over the relaxed selection vector.
//!
//! The one-hot choice of a grid point is relaxed to a point `d` on the
//! probability simplex with an ℓq (0 < q < 1) sparsity penalty. Each outer
//! iteration linearizes the penalty at the current `d`, giving per-point
//! weights `W_i = q (d_i + ε)^(q-1)`, and the resulting subproblem
//!
//! ```text
//! max_d  Σ_k ln R(dᵀh_k) − λ Σ_i W_i d_i    s.t. d ∈ simplex
//! ```
//!
//! is solved by projected gradient ascent with a halving line search. The
//! penalty weight λ is doubled between stages until the iterate is
//! essentially one-hot.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::channel::PhyParams;
use crate::error::{Error, Result};
use crate::optimizer::exhaustive::{discrete_objective, Solution};
use crate::optimizer::grid::GainGrid;
use crate::optimizer::simplex::project_simplex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmParams {
    /// Initial penalty weight λ.
    pub lambda: f64,
    /// ℓq exponent.
    pub q: f64,
    /// Smoothing added to `d_i` in the weight update.
    pub epsilon: f64,
    /// Outer (reweighting) iterations per λ stage.
    pub max_outer: usize,
    /// Projected-gradient iterations per subproblem.
    pub max_inner: usize,
    /// Outer stopping tolerance on `‖d(t) − d(t−1)‖∞`.
    pub tol: f64,
    /// Inner stopping tolerance on relative objective change.
    pub inner_tol: f64,
    /// Maximum number of λ-doubling stages.
    pub lambda_stages: usize,
    /// A stage ends the continuation once `max_i d_i` exceeds this.
    pub sparsity_target: f64,
}

impl Default for MmParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            q: 0.1,
            epsilon: 1e-8,
            max_outer: 50,
            max_inner: 500,
            tol: 1e-6,
            inner_tol: 1e-6,
            lambda_stages: 10,
            sparsity_target: 0.99,
        }
    }
}

impl MmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("mm_lambda", format!("must be >= 0, got {}", self.lambda));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad("mm_q", format!("must lie in (0, 1), got {}", self.q));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("mm_epsilon", format!("must be > 0, got {}", self.epsilon));
        }
        if self.max_outer == 0 {
            return bad("mm_max_outer", "must be >= 1".into());
        }
        if self.max_inner == 0 {
            return bad("mm_max_inner", "must be >= 1".into());
        }
        if self.lambda_stages == 0 {
            return bad("mm_lambda_stages", "must be >= 1".into());
        }
        if !(self.tol > 0.0) {
            return bad("mm_tol", format!("must be > 0, got {}", self.tol));
        }
        if !(self.inner_tol > 0.0) {
            return bad("mm_inner_tol", format!("must be > 0, got {}", self.inner_tol));
        }
        Ok(())
    }
}

/// Result of an MM solve plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MmSolution {
    /// Grid point at `argmax_i d_i`, objective re-evaluated exactly there.
    pub solution: Solution,
    /// False when the last stage hit `max_outer` without meeting `tol`.
    pub converged: bool,
    pub outer_iterations: usize,
    pub stages: usize,
    /// Final relaxed selection vector over the full grid (zero on collapsed
    /// duplicate columns).
    pub selection: Vec<f64>,
    /// Largest `|Σd − 1|` over all iterates.
    pub max_sum_violation: f64,
    /// Smallest entry over all iterates.
    pub min_entry: f64,
}

struct Relaxed<'a> {
    /// `columns[k][j]`: gain of user `k` at the `j`-th distinct grid column.
    columns: Vec<Vec<f64>>,
    phy: &'a PhyParams,
    /// `(r p)² / (N₀ B)`
    snr_scale: f64,
}

impl Relaxed<'_> {
    fn mixed_gains(&self, d: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().zip(d).map(|(h, x)| h * x).sum())
            .collect()
    }

    fn utility(&self, s: &[f64]) -> f64 {
        s.iter()
            .map(|&sk| {
                let rate = self.phy.rate_from_sinr(self.snr_scale * sk * sk);
                rate.ln()
            })
            .sum()
    }

    fn value(&self, d: &[f64], penalty: &[f64]) -> f64 {
        let lin: f64 = penalty.iter().zip(d).map(|(w, x)| w * x).sum();
        self.utility(&self.mixed_gains(d)) - lin
    }

    /// Gradient of the utility part only.
    fn utility_gradient(&self, d: &[f64]) -> Vec<f64> {
        let s = self.mixed_gains(d);
        let mut g = vec![0.0; d.len()];
        for (k, &sk) in s.iter().enumerate() {
            let x = self.snr_scale * sk * sk;
            // d ln(ln(1 + c s²)) / ds
            let coeff = 2.0 * self.snr_scale * sk / ((1.0 + x) * x.ln_1p());
            if !coeff.is_finite() {
                continue;
            }
            for (gi, &h) in g.iter_mut().zip(&self.columns[k]) {
                *gi += coeff * h;
            }
        }
        g
    }
}

#[derive(Default)]
struct Trace {
    max_sum_violation: f64,
    min_entry: f64,
}

impl Trace {
    fn record(&mut self, d: &[f64]) {
        let sum: f64 = d.iter().sum();
        self.max_sum_violation = self.max_sum_violation.max((sum - 1.0).abs());
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        self.min_entry = self.min_entry.min(min);
    }
}

/// Grid indices whose gain columns are pairwise distinct, keeping the lowest
/// index of each class. Mirrored steering directions give bit-identical
/// columns; left in, they split the mass evenly and `d` can never become
/// one-hot.
fn distinct_columns(grid: &GainGrid) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..grid.len())
        .filter(|&i| seen.insert((0..grid.num_users()).map(|k| grid.gain(k, i).to_bits()).collect::<Vec<_>>()))
        .collect()
}

/// Lowest index holding the largest entry.
fn argmax(d: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in d.iter().enumerate() {
        if x > d[best] {
            best = i;
        }
    }
    best
}

fn solve_subproblem(
    problem: &Relaxed<'_>,
    start: Vec<f64>,
    penalty: &[f64],
    params: &MmParams,
    trace: &mut Trace,
) -> Vec<f64> {
    let mut d = start;
    let mut value = problem.value(&d, penalty);
    let mut step = f64::NAN;
    for _ in 0..params.max_inner {
        let mut grad = problem.utility_gradient(&d);
        if step.is_nan() {
            let (lo, hi) = grad
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)));
            step = if hi > lo { 1.0 / (hi - lo) } else { 1.0 };
        }
        for (g, w) in grad.iter_mut().zip(penalty) {
            *g -= w;
        }

        let mut accepted = None;
        for _ in 0..64 {
            let trial: Vec<f64> = d.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
            let candidate = project_simplex(&trial);
            let cand_value = problem.value(&candidate, penalty);
            if cand_value >= value {
                accepted = Some((candidate, cand_value));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, cand_value)) = accepted else {
            break;
        };
        trace.record(&candidate);
        let rel = (cand_value - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        d = candidate;
        value = cand_value;
        step *= 2.0;
        if rel < params.inner_tol {
            break;
        }
    }
    d
}

/// Relaxed ℓq-penalized solve of the discrete steering problem.
pub fn solve_mm(grid: &GainGrid, phy: &PhyParams, params: &MmParams) -> Result<MmSolution> {
    params.validate()?;
    phy.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    // the exact objective must be finite somewhere, as for the exhaustive search
    let feasible =
        (0..grid.len()).any(|i| (0..grid.num_users()).all(|k| grid.gain(k, i) > 0.0));
    if !feasible {
        return Err(Error::Infeasible);
    }

    let reps = distinct_columns(grid);
    let n = reps.len();
    let problem = Relaxed {
        columns: (0..grid.num_users())
            .map(|k| reps.iter().map(|&i| grid.gain(k, i)).collect())
            .collect(),
        phy,
        snr_scale: phy.signal_power(1.0) / phy.noise_power(),
    };
    let mut trace = Trace {
        max_sum_violation: 0.0,
        min_entry: f64::INFINITY,
    };
    let mut d = vec![1.0 / n as f64; n];
    trace.record(&d);

    let mut best: Option<Solution> = None;
    let mut consider = |index: usize| {
        let objective = discrete_objective(grid, phy, index);
        if objective > best.map_or(f64::NEG_INFINITY, |b| b.objective) {
            best = Some(Solution {
                index,
                beam: grid.beam(index),
                objective,
            });
        }
    };

    let mut converged = n == 1;
    let mut outer_iterations = 0;
    let mut stages = 0;
    if n > 1 {
        let mut lambda = params.lambda;
        for _ in 0..params.lambda_stages {
            stages += 1;
            converged = false;
            for _ in 0..params.max_outer {
                outer_iterations += 1;
                let penalty: Vec<f64> = d
                    .iter()
                    .map(|&x| lambda * params.q * (x + params.epsilon).powf(params.q - 1.0))
                    .collect();
                let next = solve_subproblem(&problem, d.clone(), &penalty, params, &mut trace);
                let delta = next
                    .iter()
                    .zip(&d)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                d = next;
                consider(reps[argmax(&d)]);
                if delta < params.tol {
                    converged = true;
                    break;
                }
            }
            if d[argmax(&d)] > params.sparsity_target {
                break;
            }
            lambda *= 2.0;
        }
    }

    let index = reps[argmax(&d)];
    let objective = discrete_objective(grid, phy, index);
    let final_point = Solution {
        index,
        beam: grid.beam(index),
        objective,
    };
    let solution = if converged && objective.is_finite() {
        final_point
    } else {
        log::warn!(
            "MM stopped without convergence after {outer_iterations} outer iterations; returning best iterate"
        );
        consider(index);
        match best {
            Some(b) => b,
            None => return Err(Error::Infeasible),
        }
    };

    let mut selection = vec![0.0; grid.len()];
    for (&i, &x) in reps.iter().zip(&d) {
        selection[i] = x;
    }
    Ok(MmSolution {
        solution,
        converged,
        outer_iterations,
        stages,
        selection,
        max_sum_violation: trace.max_sum_violation,
        min_entry: trace.min_entry,
    })
}
