//! SMO solver for the dual soft-margin problem with per-example costs.
//!
//! State kept across iterations: the alphas and the vector
//! `u_t = sum_j a_j s_j K_jt`, from which the first-order terms
//! `F_t = s_t - u_t` follow in O(1). One iteration picks the maximal
//! violating pair (largest `F` among indices whose alpha can still grow in
//! the +s direction vs. smallest `F` among those that can shrink), applies
//! the analytic two-variable update clipped to the box, and refreshes `u`.
//! The loop stops when `max F_up - min F_low <= tol`; the bias is the
//! midpoint of those two extremes, which bounds every point's KKT violation
//! by `tol / 2`.

use super::kernel::KernelSpec;
use super::SvmError;

/// Below this many points the full kernel matrix is precomputed; above it
/// rows are recomputed on demand to keep memory bounded.
const DENSE_LIMIT: usize = 6000;

/// Degeneracy floor for the two-variable curvature.
const ETA_FLOOR: f64 = 1e-12;

/// Coefficients within this relative distance of a box bound are set to
/// the bound exactly, so at-bound points never linger in the index sets.
const BOUND_SNAP: f64 = 1e-12;

fn snap_to_bounds(alpha: f64, cost: f64) -> f64 {
    if alpha <= BOUND_SNAP * cost {
        0.0
    } else if alpha >= cost * (1.0 - BOUND_SNAP) {
        cost
    } else {
        alpha
    }
}

/// Stopping tolerance and iteration cap for [`solve_dual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_passes: usize,
}

/// What the solver can report about its own run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// Dual objective at the returned alphas.
    pub dual_objective: f64,
    /// Largest per-point KKT violation given the returned bias.
    pub max_kkt_violation: f64,
    /// Pair updates performed.
    pub passes: usize,
    /// Number of strictly positive alphas.
    pub support_count: usize,
    /// False when the iteration cap (or a numerical stall) ended the run
    /// before the tolerance was met. Not an error: the returned alphas are
    /// still feasible and usable.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub diagnostics: SolveDiagnostics,
}

/// Dense symmetric kernel matrix over a point set.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn compute(kernel: &KernelSpec, points: &[Vec<f64>]) -> Result<Self, SvmError> {
        kernel.validate()?;
        check_points(points)?;
        let n = points.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval_raw(&points[i], &points[j]);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<(), SvmError> {
    let Some(first) = points.first() else {
        return Err(SvmError::InvalidConfig("no training points".into()));
    };
    let dim = first.len();
    if dim == 0 {
        return Err(SvmError::InvalidConfig("zero-dimensional points".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFiniteInput);
        }
    }
    Ok(())
}

/// Kernel rows, either precomputed or recomputed per request.
enum GramStore<'a> {
    Dense(GramMatrix),
    Lazy {
        points: &'a [Vec<f64>],
        kernel: KernelSpec,
    },
}

impl GramStore<'_> {
    fn row<'s>(&'s self, i: usize, buf: &'s mut Vec<f64>) -> &'s [f64] {
        match self {
            GramStore::Dense(g) => g.row(i),
            GramStore::Lazy { points, kernel } => {
                buf.clear();
                buf.extend(points.iter().map(|p| kernel.eval_raw(&points[i], p)));
                buf
            }
        }
    }
}

/// Solve the dual problem for arbitrary labelled points with per-example
/// box constraints. `signs` must be -1/+1 with both classes present,
/// `costs` positive. Never errors out on slow convergence — that is
/// reported through [`SolveDiagnostics::converged`].
pub fn solve_dual(
    points: &[Vec<f64>],
    signs: &[f64],
    costs: &[f64],
    kernel: &KernelSpec,
    options: &SolveOptions,
) -> Result<DualSolution, SvmError> {
    kernel.validate()?;
    check_points(points)?;
    let n = points.len();
    if signs.len() != n {
        return Err(SvmError::DimensionMismatch { expected: n, found: signs.len() });
    }
    if costs.len() != n {
        return Err(SvmError::DimensionMismatch { expected: n, found: costs.len() });
    }
    if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
        return Err(SvmError::InvalidConfig("signs must be -1 or +1".into()));
    }
    if costs.iter().any(|c| !c.is_finite() || *c <= 0.0) {
        return Err(SvmError::InvalidConfig("costs must be positive and finite".into()));
    }
    if !(options.tol.is_finite() && options.tol > 0.0) {
        return Err(SvmError::InvalidConfig(format!("tol must be positive, got {}", options.tol)));
    }
    if options.max_passes == 0 {
        return Err(SvmError::InvalidConfig("max_passes must be positive".into()));
    }
    if !signs.contains(&1.0) || !signs.contains(&-1.0) {
        return Err(SvmError::SingleClassData);
    }

    let diag: Vec<f64> = points
        .iter()
        .map(|p| kernel.eval_raw(p, p))
        .collect();
    let store = if n <= DENSE_LIMIT {
        GramStore::Dense(GramMatrix::compute(kernel, points)?)
    } else {
        GramStore::Lazy { points, kernel: *kernel }
    };

    let mut alphas = vec![0.0; n];
    let mut u = vec![0.0; n]; // u_t = sum_j a_j s_j K_jt
    let mut passes = 0usize;
    let mut converged = false;
    #[cfg(debug_assertions)]
    let mut objective_so_far = 0.0f64;

    let (mut m_up, mut m_low);
    loop {
        // Maximal violating pair scan. F_t = s_t - u_t.
        let mut i_up: Option<usize> = None;
        let mut i_low: Option<usize> = None;
        m_up = f64::NEG_INFINITY;
        m_low = f64::INFINITY;
        for t in 0..n {
            let f = signs[t] - u[t];
            let at_lower = alphas[t] <= 0.0;
            let at_upper = alphas[t] >= costs[t];
            if ((signs[t] > 0.0 && !at_upper) || (signs[t] < 0.0 && !at_lower)) && f > m_up {
                m_up = f;
                i_up = Some(t);
            }
            if ((signs[t] < 0.0 && !at_upper) || (signs[t] > 0.0 && !at_lower)) && f < m_low {
                m_low = f;
                i_low = Some(t);
            }
        }

        let (Some(i), Some(j)) = (i_up, i_low) else {
            // One side exhausted: no admissible pair remains.
            converged = true;
            break;
        };
        if m_up - m_low <= options.tol {
            converged = true;
            break;
        }
        if passes >= options.max_passes {
            break;
        }

        let mut row_i_buf = Vec::new();
        let mut row_j_buf = Vec::new();
        let row_i = store.row(i, &mut row_i_buf);
        let row_j = store.row(j, &mut row_j_buf);

        let eta = (diag[i] + diag[j] - 2.0 * row_i[j]).max(ETA_FLOOR);
        let f_i = signs[i] - u[i];
        let f_j = signs[j] - u[j];

        // Box for the second variable along the constraint line.
        let (lo, hi) = if signs[i] != signs[j] {
            (
                (alphas[j] - alphas[i]).max(0.0),
                (costs[i] + alphas[j] - alphas[i]).min(costs[j]),
            )
        } else {
            (
                (alphas[i] + alphas[j] - costs[i]).max(0.0),
                (alphas[i] + alphas[j]).min(costs[j]),
            )
        };

        let unclipped = alphas[j] + signs[j] * (f_j - f_i) / eta;
        // Snap to exact bounds: cancellation dust (e.g. a + x - x) would
        // otherwise leave a not-quite-at-bound coefficient in the index
        // sets, and the scan can wedge on a pair whose only room is that
        // dust.
        let new_j = snap_to_bounds(unclipped.clamp(lo, hi), costs[j]);
        let delta_j = new_j - alphas[j];
        if delta_j == 0.0 {
            // The maximal violating pair always has room in exact
            // arithmetic; a zero step means we are at numeric resolution.
            break;
        }
        let new_i = snap_to_bounds(
            (alphas[i] + signs[i] * signs[j] * (alphas[j] - new_j)).clamp(0.0, costs[i]),
            costs[i],
        );
        let delta_i = new_i - alphas[i];

        #[cfg(debug_assertions)]
        {
            // O(1) objective delta; the dual must never decrease.
            let gain = delta_i + delta_j
                - delta_i * signs[i] * u[i]
                - delta_j * signs[j] * u[j]
                - 0.5
                    * (delta_i * delta_i * diag[i]
                        + delta_j * delta_j * diag[j]
                        + 2.0 * delta_i * delta_j * signs[i] * signs[j] * row_i[j]);
            debug_assert!(
                gain >= -1e-9 * (1.0 + objective_so_far.abs()),
                "dual objective decreased by {gain} at pass {passes}"
            );
            objective_so_far += gain;
        }

        let (si_di, sj_dj) = (signs[i] * delta_i, signs[j] * delta_j);
        for t in 0..n {
            u[t] += si_di * row_i[t] + sj_dj * row_j[t];
        }
        alphas[i] = new_i;
        alphas[j] = new_j;
        passes += 1;
    }

    let bias = match (m_up.is_finite(), m_low.is_finite()) {
        (true, true) => 0.5 * (m_up + m_low),
        (true, false) => m_up,
        (false, true) => m_low,
        (false, false) => 0.0,
    };

    // Final diagnostics from the maintained state.
    let mut dual_objective = 0.0;
    for t in 0..n {
        dual_objective += alphas[t] - 0.5 * alphas[t] * signs[t] * u[t];
    }
    let mut max_violation = 0.0f64;
    for t in 0..n {
        let margin = signs[t] * (u[t] + bias);
        let at_lower = alphas[t] <= 0.0;
        let at_upper = alphas[t] >= costs[t];
        let v = if at_lower {
            (1.0 - margin).max(0.0)
        } else if at_upper {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        max_violation = max_violation.max(v);
    }
    let support_count = alphas.iter().filter(|a| **a > 0.0).count();

    Ok(DualSolution {
        alphas,
        bias,
        diagnostics: SolveDiagnostics {
            dual_objective,
            max_kkt_violation: max_violation,
            passes,
            support_count,
            converged,
        },
    })
}

/// Dual objective `W(a)` for externally supplied alphas (test and debugging
/// instrumentation). Alphas must be finite and non-negative.
pub fn dual_objective(alphas: &[f64], signs: &[f64], gram: &GramMatrix) -> Result<f64, SvmError> {
    let n = gram.n();
    if alphas.len() != n || signs.len() != n {
        return Err(SvmError::DimensionMismatch { expected: n, found: alphas.len().max(signs.len()) });
    }
    if let Some(bad) = alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(SvmError::InfeasibleAlphas(format!("alpha = {bad}")));
    }
    let mut w: f64 = alphas.iter().sum();
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        let mut acc = 0.0;
        for j in 0..n {
            acc += alphas[j] * signs[j] * row[j];
        }
        w -= 0.5 * alphas[i] * signs[i] * acc;
    }
    Ok(w)
}

/// Largest per-point KKT violation of `(alphas, bias)` under the margin
/// conditions: points at the lower bound need margin >= 1, points at the
/// upper bound need margin <= 1, free points need margin == 1. Bound
/// membership uses a small relative tolerance so near-optimal external
/// solutions are judged fairly.
pub fn max_kkt_violation(
    alphas: &[f64],
    signs: &[f64],
    costs: &[f64],
    gram: &GramMatrix,
    bias: f64,
) -> Result<f64, SvmError> {
    let n = gram.n();
    if alphas.len() != n || signs.len() != n || costs.len() != n {
        return Err(SvmError::DimensionMismatch { expected: n, found: alphas.len() });
    }
    for (a, c) in alphas.iter().zip(costs) {
        let bt = 1e-8 * c.max(1.0);
        if !a.is_finite() || *a < -bt || *a > c + bt {
            return Err(SvmError::InfeasibleAlphas(format!("alpha = {a} outside [0, {c}]")));
        }
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        let row = gram.row(i);
        let mut u = 0.0;
        for j in 0..n {
            u += alphas[j] * signs[j] * row[j];
        }
        let margin = signs[i] * (u + bias);
        let bt = 1e-8 * costs[i].max(1.0);
        let at_lower = alphas[i] <= bt;
        let at_upper = alphas[i] >= costs[i] - bt;
        let v = if at_lower && at_upper {
            // Degenerate box (cost ~ 0): no condition binds beyond feasibility.
            0.0
        } else if at_lower {
            (1.0 - margin).max(0.0)
        } else if at_upper {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}
