//! Independent reference implementations ("oracles") used to verify the
//! production code. Nothing here shares logic with the library beyond type
//! definitions: kernels are re-derived from their formulas, the dual SVM
//! problem is solved by exhaustive active-set enumeration, and AUC is
//! computed as a pairwise rank statistic.

#![allow(dead_code)] // each integration-test binary uses a subset

use cadet::svm::KernelSpec;

/// Kernel value recomputed from the definition (not via the library).
pub fn oracle_kernel(kernel: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        KernelSpec::Rbf { gamma } => {
            let d2: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum();
            (-gamma * d2).exp()
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

/// Exact maximizer of the dual soft-margin problem
///
/// ```text
/// max  W(a) = sum_i a_i - 1/2 sum_ij a_i a_j s_i s_j K_ij
/// s.t. 0 <= a_i <= C_i,  sum_i a_i s_i = 0
/// ```
///
/// found by brute force: every point is assigned to {at lower bound,
/// at upper bound, free}, the stationarity system is solved exactly on the
/// free set for each of the 3^n assignments, infeasible candidates are
/// discarded, and the best feasible candidate wins. Intended for n <= 6.
pub fn solve_qp_exact(
    points: &[Vec<f64>],
    signs: &[f64],
    costs: &[f64],
    kernel: &KernelSpec,
) -> OracleSolution {
    let n = points.len();
    assert!(n > 0 && n <= 8, "oracle is exponential; keep n tiny");
    assert_eq!(signs.len(), n);
    assert_eq!(costs.len(), n);

    // Q_ij = s_i s_j K_ij
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            q[i][j] = signs[i] * signs[j] * oracle_kernel(kernel, &points[i], &points[j]);
        }
    }

    let objective = |alphas: &[f64]| -> f64 {
        let mut w: f64 = alphas.iter().sum();
        for i in 0..n {
            for j in 0..n {
                w -= 0.5 * alphas[i] * alphas[j] * q[i][j];
            }
        }
        w
    };

    const FEAS_EPS: f64 = 1e-7;
    let mut best: Option<(f64, Vec<f64>)> = None;

    // Each assignment is a base-3 digit string: 0 = lower, 1 = upper, 2 = free.
    let cells = 3usize.pow(n as u32);
    for cell in 0..cells {
        let mut kind = vec![0u8; n];
        let mut c = cell;
        for k in kind.iter_mut() {
            *k = (c % 3) as u8;
            c /= 3;
        }

        let free: Vec<usize> = (0..n).filter(|&i| kind[i] == 2).collect();
        let mut alphas = vec![0.0; n];
        for i in 0..n {
            if kind[i] == 1 {
                alphas[i] = costs[i];
            }
        }

        if free.is_empty() {
            let balance: f64 = (0..n).map(|i| alphas[i] * signs[i]).sum();
            if balance.abs() > FEAS_EPS * (1.0 + costs.iter().fold(0.0f64, |m, c| m.max(*c))) {
                continue;
            }
        } else {
            // Stationarity on the free set with multiplier lambda for the
            // equality constraint:
            //   sum_j Q_ij a_j + lambda s_i = 1   for i free
            //   sum_{j free} s_j a_j = -sum_{j bound} s_j a_j
            let m = free.len();
            let mut mat = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cidx, &j) in free.iter().enumerate() {
                    mat[r][cidx] = q[i][j];
                }
                mat[r][m] = signs[i];
                let bound_term: f64 = (0..n)
                    .filter(|j| kind[*j] != 2)
                    .map(|j| q[i][j] * alphas[j])
                    .sum();
                rhs[r] = 1.0 - bound_term;
            }
            for (cidx, &j) in free.iter().enumerate() {
                mat[m][cidx] = signs[j];
            }
            let bound_balance: f64 = (0..n)
                .filter(|j| kind[*j] != 2)
                .map(|j| signs[j] * alphas[j])
                .sum();
            rhs[m] = -bound_balance;

            // Singular systems are skipped: every sub-face of a degenerate
            // cell is enumerated separately, so no optimum is lost.
            let Some(sol) = solve_linear(mat, rhs) else {
                continue;
            };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let a = sol[r];
                if !a.is_finite() || a < -FEAS_EPS || a > costs[i] + FEAS_EPS {
                    ok = false;
                    break;
                }
                alphas[i] = a.clamp(0.0, costs[i]);
            }
            if !ok {
                continue;
            }
            let balance: f64 = (0..n).map(|i| alphas[i] * signs[i]).sum();
            if balance.abs() > 1e-6 {
                continue;
            }
        }

        let w = objective(&alphas);
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, alphas));
        }
    }

    let (objective_value, alphas) =
        best.expect("a = 0 is always feasible, so a best cell must exist");
    let bias = oracle_bias(&alphas, signs, costs, &q);
    OracleSolution {
        alphas,
        bias,
        objective: objective_value,
    }
}

/// Midpoint-of-bounds bias from an optimal alpha vector: with
/// F_i = s_i - sum_j a_j s_j K_ij, the bias sits halfway between the
/// largest F over indices that may still increase and the smallest F over
/// indices that may still decrease.
fn oracle_bias(alphas: &[f64], signs: &[f64], costs: &[f64], q: &[Vec<f64>]) -> f64 {
    let n = alphas.len();
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for i in 0..n {
        // u_i = sum_j a_j s_j K_ij = s_i * sum_j Q_ij a_j (since Q folds both signs)
        let qdot: f64 = (0..n).map(|j| q[i][j] * alphas[j]).sum();
        let u = signs[i] * qdot;
        let f = signs[i] - u;
        let bt = 1e-8 * costs[i].max(1.0);
        let at_lower = alphas[i] <= bt;
        let at_upper = alphas[i] >= costs[i] - bt;
        let in_up = (signs[i] > 0.0 && !at_upper) || (signs[i] < 0.0 && !at_lower);
        let in_low = (signs[i] < 0.0 && !at_upper) || (signs[i] > 0.0 && !at_lower);
        if in_up {
            m_up = m_up.max(f);
        }
        if in_low {
            m_low = m_low.min(f);
        }
    }
    match (m_up.is_finite(), m_low.is_finite()) {
        (true, true) => 0.5 * (m_up + m_low),
        (true, false) => m_up,
        (false, true) => m_low,
        (false, false) => 0.0,
    }
}

/// Decision value of the oracle solution at a probe point.
pub fn oracle_discriminant(
    solution: &OracleSolution,
    points: &[Vec<f64>],
    signs: &[f64],
    kernel: &KernelSpec,
    probe: &[f64],
) -> f64 {
    let mut f = solution.bias;
    for ((alpha, sign), point) in solution.alphas.iter().zip(signs).zip(points) {
        f += alpha * sign * oracle_kernel(kernel, point, probe);
    }
    f
}

/// Gaussian elimination with partial pivoting; `None` when singular.
// Index loops keep the row operations readable; the elimination step reads
// row `col` while mutating row `row`, which iterators cannot express without
// `split_at_mut` noise.
#[allow(clippy::needless_range_loop)]
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tiny = 1e-12 * scale * n as f64;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < tiny {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Tie-aware Mann-Whitney AUC with anomalies expected to score LOW:
/// the probability that a random expected-anomaly scores below a random
/// expected-normal (ties count half).
pub fn mann_whitney_auc(scores: &[f64], expected_anomaly: &[bool]) -> f64 {
    assert_eq!(scores.len(), expected_anomaly.len());
    let anomalies: Vec<f64> = scores
        .iter()
        .zip(expected_anomaly)
        .filter(|(_, e)| **e)
        .map(|(s, _)| *s)
        .collect();
    let normals: Vec<f64> = scores
        .iter()
        .zip(expected_anomaly)
        .filter(|(_, e)| !**e)
        .map(|(s, _)| *s)
        .collect();
    assert!(!anomalies.is_empty() && !normals.is_empty());
    let mut u = 0.0;
    for a in &anomalies {
        for n in &normals {
            if a < n {
                u += 1.0;
            } else if a == n {
                u += 0.5;
            }
        }
    }
    u / (anomalies.len() as f64 * normals.len() as f64)
}

#[cfg(test)]
mod oracle_self_checks {
    use super::*;

    /// The two-point problem has a closed form: x1 = +1 labelled +1,
    /// x2 = -1 labelled -1, linear kernel, generous C. KKT gives
    /// a1 = a2 = 1/2, b = 0, W = 1/2.
    #[test]
    fn oracle_reproduces_two_point_closed_form() {
        let points = vec![vec![1.0], vec![-1.0]];
        let signs = [1.0, -1.0];
        let costs = [10.0, 10.0];
        let sol = solve_qp_exact(&points, &signs, &costs, &KernelSpec::Linear);
        assert!((sol.alphas[0] - 0.5).abs() < 1e-12, "{:?}", sol.alphas);
        assert!((sol.alphas[1] - 0.5).abs() < 1e-12);
        assert!(sol.bias.abs() < 1e-12);
        assert!((sol.objective - 0.5).abs() < 1e-12);
        let f = oracle_discriminant(&sol, &points, &signs, &KernelSpec::Linear, &[0.25]);
        assert!((f - 0.25).abs() < 1e-12);
    }

    /// With C small enough to bind, both alphas saturate: a1 = a2 = C,
    /// W = 2C - 2C^2 (since K11 = K22 = 1, K12 = -1).
    #[test]
    fn oracle_handles_bound_constrained_optimum() {
        let points = vec![vec![1.0], vec![-1.0]];
        let signs = [1.0, -1.0];
        let costs = [0.25, 0.25];
        let sol = solve_qp_exact(&points, &signs, &costs, &KernelSpec::Linear);
        assert!((sol.alphas[0] - 0.25).abs() < 1e-12);
        assert!((sol.alphas[1] - 0.25).abs() < 1e-12);
        assert!((sol.objective - (0.5 - 0.125)).abs() < 1e-12);
    }

    /// Objective of the oracle solution dominates every feasible random
    /// candidate (spot check of optimality).
    #[test]
    fn oracle_objective_dominates_feasible_candidates() {
        let points = vec![
            vec![0.0, 1.0],
            vec![1.0, 1.5],
            vec![-0.5, -1.0],
            vec![0.25, -0.75],
        ];
        let signs = [1.0, 1.0, -1.0, -1.0];
        let costs = [2.0, 2.0, 2.0, 2.0];
        let kernel = KernelSpec::Rbf { gamma: 0.5 };
        let sol = solve_qp_exact(&points, &signs, &costs, &kernel);

        let mut q = vec![vec![0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                q[i][j] = signs[i] * signs[j] * oracle_kernel(&kernel, &points[i], &points[j]);
            }
        }
        let objective = |al: &[f64]| -> f64 {
            let mut w: f64 = al.iter().sum();
            for i in 0..4 {
                for j in 0..4 {
                    w -= 0.5 * al[i] * al[j] * q[i][j];
                }
            }
            w
        };

        // Feasible candidates: pair up one +1 and one -1 coordinate so the
        // equality constraint holds by construction.
        let mut worse = 0;
        for a_pos in [0.0, 0.3, 1.1, 2.0] {
            for a_neg_split in [0.0, 0.5, 1.0] {
                let cand = [
                    a_pos * a_neg_split,
                    a_pos * (1.0 - a_neg_split),
                    a_pos * 0.5,
                    a_pos * 0.5,
                ];
                if cand.iter().any(|a| *a > 2.0) {
                    continue;
                }
                let w = objective(&cand);
                assert!(
                    w <= sol.objective + 1e-9,
                    "feasible candidate beats oracle: {w} > {}",
                    sol.objective
                );
                worse += 1;
            }
        }
        assert!(worse > 5);
    }

    #[test]
    fn mann_whitney_hand_values() {
        // anomalies low, fully separated
        assert_eq!(mann_whitney_auc(&[0.0, 1.0, 5.0, 6.0], &[true, true, false, false]), 1.0);
        // alternating case worked out by hand: pairs (1,2)+,(1,4)+,(3,2)-,(3,4)+
        assert_eq!(mann_whitney_auc(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, false]), 0.75);
        // symmetric case: (1,2)+,(1,3)+,(4,2)-,(4,3)- => 0.5
        assert_eq!(mann_whitney_auc(&[1.0, 2.0, 3.0, 4.0], &[true, false, false, true]), 0.5);
        // ties count half
        assert_eq!(mann_whitney_auc(&[1.0, 1.0], &[true, false]), 0.5);
    }
}
