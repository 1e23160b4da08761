//! Training front end and the trained-model representation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel::KernelSpec;
use super::solver::{solve_dual, SolveDiagnostics, SolveOptions};
use super::SvmError;
use crate::dataset::{
    apply_standardizer, fit_standardizer, Dataset, Decision, FeatureSchema, PatientState,
    StandardizationStats,
};

/// How per-class costs are derived from the base cost `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeighting {
    /// Minority examples get cost `c * (majority count / minority count)`,
    /// majority examples get `c` — costs inversely proportional to class
    /// frequency, so a rare class is not priced out of the margin.
    Balanced,
    /// Every example gets cost `c`.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Base soft-margin cost; must be positive.
    pub c: f64,
    pub class_weighting: ClassWeighting,
    /// Stopping tolerance on the violating-pair gap.
    pub tol: f64,
    /// Pair-update cap; `None` means `10 * n` for `n` training examples.
    pub max_passes: Option<usize>,
    /// Seed for the majority-class subsample.
    pub seed: u64,
    /// Cap on majority-class examples fed to the solver. When the majority
    /// class exceeds it, a seeded subsample of this size is used; minority
    /// examples are always kept.
    pub max_train: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            class_weighting: ClassWeighting::Balanced,
            tol: 1e-3,
            max_passes: None,
            seed: 0,
            max_train: 5000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SvmError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == Some(0) {
            return Err(SvmError::InvalidConfig("max_passes must be positive".into()));
        }
        if self.max_train == 0 {
            return Err(SvmError::InvalidConfig("max_train must be positive".into()));
        }
        Ok(())
    }
}

/// A trained model: support vectors live in standardized feature space, and
/// the stored standardization stats map raw states into that space, so
/// callers always pass raw (unstandardized) features.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    kernel: KernelSpec,
    support_vectors: Vec<Vec<f64>>,
    /// One per support vector: `alpha_i * s_i`, so the decision value is
    /// `f(z) = sum_i coeff_i K(sv_i, z) + bias`.
    coefficients: Vec<f64>,
    bias: f64,
    stats: StandardizationStats,
    schema: FeatureSchema,
}

impl SvmModel {
    /// Assemble a model from parts, validating shape and finiteness.
    pub fn from_parts(
        kernel: KernelSpec,
        support_vectors: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
        bias: f64,
        stats: StandardizationStats,
        schema: FeatureSchema,
    ) -> Result<Self, SvmError> {
        kernel.validate()?;
        if coefficients.len() != support_vectors.len() {
            return Err(SvmError::DimensionMismatch {
                expected: support_vectors.len(),
                found: coefficients.len(),
            });
        }
        if stats.len() != schema.count() {
            return Err(SvmError::DimensionMismatch {
                expected: schema.count(),
                found: stats.len(),
            });
        }
        for sv in &support_vectors {
            if sv.len() != schema.count() {
                return Err(SvmError::DimensionMismatch {
                    expected: schema.count(),
                    found: sv.len(),
                });
            }
            if sv.iter().any(|v| !v.is_finite()) {
                return Err(SvmError::NonFiniteInput);
            }
        }
        if coefficients.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
            return Err(SvmError::NonFiniteInput);
        }
        Ok(Self { kernel, support_vectors, coefficients, bias, stats, schema })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn stats(&self) -> &StandardizationStats {
        &self.stats
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn support_count(&self) -> usize {
        self.support_vectors.len()
    }
}

/// Train a model. Standardization is fitted on the full training set, then
/// the majority class may be subsampled (seeded, deterministic) before the
/// dual solve. Slow convergence is not an error; inspect the returned
/// diagnostics.
pub fn train(
    train_set: &Dataset,
    kernel: &KernelSpec,
    config: &TrainConfig,
) -> Result<(SvmModel, SolveDiagnostics), SvmError> {
    kernel.validate()?;
    config.validate()?;
    let (no_orders, orders) = train_set.count_decisions();
    if no_orders == 0 || orders == 0 {
        return Err(SvmError::SingleClassData);
    }

    let stats = fit_standardizer(train_set)?;
    let standardized = apply_standardizer(&stats, train_set)?;

    let (majority, minority) = if orders <= no_orders {
        (Decision::NoOrder, Decision::Order)
    } else {
        (Decision::Order, Decision::NoOrder)
    };
    let majority_count = no_orders.max(orders);
    let minority_count = no_orders.min(orders);

    // Seeded majority subsample, reassembled in original row order so the
    // outcome is independent of how the caller ordered the file.
    let selected: Vec<usize> = if majority_count > config.max_train {
        let mut majority_rows: Vec<usize> = standardized
            .examples()
            .iter()
            .enumerate()
            .filter(|(_, ex)| ex.decision == majority)
            .map(|(i, _)| i)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        majority_rows.shuffle(&mut rng);
        majority_rows.truncate(config.max_train);
        let mut keep: Vec<usize> = standardized
            .examples()
            .iter()
            .enumerate()
            .filter(|(_, ex)| ex.decision == minority)
            .map(|(i, _)| i)
            .collect();
        keep.extend(majority_rows);
        keep.sort_unstable();
        keep
    } else {
        (0..standardized.len()).collect()
    };

    let majority_used = selected
        .iter()
        .filter(|&&i| standardized.examples()[i].decision == majority)
        .count();
    let minority_used = selected.len() - majority_used;
    debug_assert_eq!(minority_used, minority_count);

    let minority_cost = match config.class_weighting {
        ClassWeighting::Balanced => config.c * (majority_used as f64 / minority_used as f64),
        ClassWeighting::None => config.c,
    };

    let mut points = Vec::with_capacity(selected.len());
    let mut signs = Vec::with_capacity(selected.len());
    let mut costs = Vec::with_capacity(selected.len());
    for &i in &selected {
        let ex = &standardized.examples()[i];
        points.push(ex.state.features.clone());
        signs.push(ex.decision.sign());
        costs.push(if ex.decision == minority { minority_cost } else { config.c });
    }

    let options = SolveOptions {
        tol: config.tol,
        max_passes: config.max_passes.unwrap_or(10 * points.len()),
    };
    let solution = solve_dual(&points, &signs, &costs, kernel, &options)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (idx, alpha) in solution.alphas.iter().enumerate() {
        if *alpha > 0.0 {
            support_vectors.push(points[idx].clone());
            coefficients.push(alpha * signs[idx]);
        }
    }

    let model = SvmModel::from_parts(
        *kernel,
        support_vectors,
        coefficients,
        solution.bias,
        stats,
        train_set.schema().clone(),
    )?;
    Ok((model, solution.diagnostics))
}

/// Decision value `f(x)` for a raw (unstandardized) state.
pub fn discriminant(model: &SvmModel, state: &PatientState) -> Result<f64, SvmError> {
    if state.features.len() != model.schema.count() {
        return Err(SvmError::DimensionMismatch {
            expected: model.schema.count(),
            found: state.features.len(),
        });
    }
    if state.features.iter().any(|v| !v.is_finite()) {
        return Err(SvmError::NonFiniteInput);
    }
    let z = model.stats.apply_vec(&state.features);
    let mut f = model.bias;
    for (sv, coeff) in model.support_vectors.iter().zip(&model.coefficients) {
        f += coeff * model.kernel.eval_raw(sv, &z);
    }
    Ok(f)
}
