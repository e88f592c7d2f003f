//! EM fitting: per-sample E-step via belief propagation, closed-form M-step,
//! convergence control, and posterior deregulation scoring.

use rayon::prelude::*;

use crate::compile::{build_with_index, IndexedNetwork};
use crate::error::{Error, Result};
use crate::model::{DeregulationScores, ExpressionMatrix, ModelParams, RegulatoryNetwork};

/// Posterior marginals of every sample: status distributions for all genes
/// and indicator distributions for all targets.
#[derive(Debug, Clone)]
pub struct SampleMarginals {
    pub sample_ids: Vec<String>,
    /// `[sample][gene][status]`, canonical gene order.
    pub gene_state: Vec<Vec<[f64; 3]>>,
    /// `[sample][target][indicator]`.
    pub deregulated: Vec<Vec<[f64; 2]>>,
}

/// Settings of the EM loop and its E-step.
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    /// Belief-propagation sweeps per sample. Accuracy is insensitive above
    /// five on the graphs this model compiles to; the default keeps a margin.
    pub passes: usize,
    /// Message damping in `[0, 1)` for loopy graphs (shared regulators).
    pub damping: f64,
    /// Convergence threshold on the largest absolute parameter change.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting parameters; when absent a data-driven quantile guess is used.
    pub initial: Option<ModelParams>,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            passes: 10,
            damping: 0.0,
            tol: 1e-4,
            max_iterations: 100,
            initial: None,
        }
    }
}

/// One EM iteration as recorded in the trajectory: the parameters after the
/// M-step and the largest absolute change from the previous iterate.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub params: ModelParams,
    pub max_change: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub iterations: usize,
    pub trajectory: Vec<IterationRecord>,
    pub converged: bool,
}

/// Computes posterior marginals for every sample independently: compiles the
/// sample's factor graph and reads beliefs off `passes` sweeps of sum-product
/// message passing. Samples run in parallel; the output order matches the
/// expression matrix.
pub fn e_step(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    data: &ExpressionMatrix,
    passes: usize,
    damping: f64,
) -> Result<SampleMarginals> {
    params.validate()?;
    let indexed = IndexedNetwork::new(net)?;
    let alignment = data.alignment(net)?;
    let n = data.sample_count();

    let per_sample: Vec<Result<(Vec<[f64; 3]>, Vec<[f64; 2]>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = data.row_in_network_order(&alignment, i);
            let compiled = build_with_index(net, &indexed, params, &row)?;
            let beliefs = compiled
                .graph
                .run_sum_product(passes, damping)
                .map_err(|e| Error::SampleInference {
                    sample: data.sample_ids()[i].clone(),
                    source: Box::new(e),
                })?;
            let genes = compiled
                .gene_state
                .iter()
                .map(|&v| {
                    let b = beliefs.belief(v);
                    [b[0], b[1], b[2]]
                })
                .collect();
            let dereg = compiled
                .deregulated
                .iter()
                .map(|&v| {
                    let b = beliefs.belief(v);
                    [b[0], b[1]]
                })
                .collect();
            Ok((genes, dereg))
        })
        .collect();

    let mut gene_state = Vec::with_capacity(n);
    let mut deregulated = Vec::with_capacity(n);
    for result in per_sample {
        let (genes, dereg) = result?;
        gene_state.push(genes);
        deregulated.push(dereg);
    }
    Ok(SampleMarginals {
        sample_ids: data.sample_ids().to_vec(),
        gene_state,
        deregulated,
    })
}

/// Relative floor applied to the fitted standard deviations, as a fraction of
/// the overall expression standard deviation.
pub const SIGMA_FLOOR_FRACTION: f64 = 1e-3;

/// Mass below which a status is considered starved and keeps its previous
/// Gaussian parameters.
const EMPTY_STATE_MASS: f64 = 1e-12;

/// Closed-form maximization of the expected complete-data log-likelihood.
///
/// `previous` supplies the fallback for statuses with vanishing posterior
/// mass, whose mean and deviation would otherwise be 0/0. After the update
/// the three statuses are sorted by mean (labels stay canonical across
/// iterations) and deviations are floored to avoid Gaussian collapse.
pub fn m_step(
    marginals: &SampleMarginals,
    data: &ExpressionMatrix,
    net: &RegulatoryNetwork,
    previous: &ModelParams,
) -> Result<ModelParams> {
    let alignment = data.alignment(net)?;
    let r = net.regulator_count();
    let t = net.target_count();
    let n = data.sample_count();
    if marginals.gene_state.len() != n {
        return Err(Error::IdMismatch {
            context: "marginals vs expression samples".into(),
        });
    }

    let mut alpha_acc = [0.0f64; 3];
    let mut mass = [0.0f64; 3];
    let mut mean_acc = [0.0f64; 3];
    let mut dereg_acc = 0.0f64;

    // Fixed reduction order: samples outer, genes inner.
    for i in 0..n {
        let row = data.row_in_network_order(&alignment, i);
        for g in 0..r + t {
            let q = &marginals.gene_state[i][g];
            for s in 0..3 {
                if g < r {
                    alpha_acc[s] += q[s];
                }
                mass[s] += q[s];
                mean_acc[s] += q[s] * row[g];
            }
        }
        for k in 0..t {
            dereg_acc += marginals.deregulated[i][k][1];
        }
    }

    let mut mu = previous.mu;
    for s in 0..3 {
        if mass[s] >= EMPTY_STATE_MASS {
            mu[s] = mean_acc[s] / mass[s];
        }
    }

    let mut var_acc = [0.0f64; 3];
    for i in 0..n {
        let row = data.row_in_network_order(&alignment, i);
        for g in 0..r + t {
            let q = &marginals.gene_state[i][g];
            for s in 0..3 {
                let d = mu[s] - row[g];
                var_acc[s] += q[s] * d * d;
            }
        }
    }

    let floor = SIGMA_FLOOR_FRACTION * population_std(data.values());
    let mut sigma = previous.sigma;
    for s in 0..3 {
        if mass[s] >= EMPTY_STATE_MASS {
            let candidate = (var_acc[s] / mass[s]).sqrt().max(floor);
            if candidate > 0.0 {
                sigma[s] = candidate;
            }
        }
    }

    let alpha_total: f64 = alpha_acc.iter().sum();
    let mut alpha = previous.alpha;
    if alpha_total > 0.0 {
        for s in 0..3 {
            alpha[s] = alpha_acc[s] / alpha_total;
        }
    }

    let pair_count = (n * t) as f64;
    let epsilon = if pair_count > 0.0 {
        (dereg_acc / pair_count).clamp(0.0, 1.0 - 1e-9)
    } else {
        previous.epsilon
    };

    // Canonical status order: sort by mean, carry deviations and prior along.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| mu[a].partial_cmp(&mu[b]).unwrap().then(a.cmp(&b)));
    let params = ModelParams {
        alpha: order.map(|s| alpha[s]),
        epsilon,
        mu: order.map(|s| mu[s]),
        sigma: order.map(|s| sigma[s]),
    };
    params.validate()?;
    Ok(params)
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Data-driven starting point: uniform prior, a small deregulation rate, the
/// 20/50/80 percent expression quantiles as means, and half the mean
/// inter-quantile gap as the shared deviation.
pub fn initial_params(data: &ExpressionMatrix) -> ModelParams {
    let mut sorted: Vec<f64> = data.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| -> f64 {
        if sorted.is_empty() {
            return 0.0;
        }
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    let mu = [quantile(0.2), quantile(0.5), quantile(0.8)];
    let mut sigma = 0.5 * ((mu[1] - mu[0]) + (mu[2] - mu[1])) / 2.0;
    if !(sigma > 0.0) {
        // Degenerate spread; any positive value lets EM proceed.
        sigma = 1.0;
    }
    ModelParams {
        alpha: [1.0 / 3.0; 3],
        epsilon: 0.05,
        mu,
        sigma: [sigma; 3],
    }
}

/// Alternates E- and M-steps until the largest absolute parameter change
/// drops below `tol` or the iteration budget runs out. Non-convergence is
/// reported through `converged`, not as an error.
pub fn fit(
    net: &RegulatoryNetwork,
    data: &ExpressionMatrix,
    settings: &FitSettings,
) -> Result<FitResult> {
    let mut params = match settings.initial {
        Some(p) => {
            p.validate()?;
            p
        }
        None => initial_params(data),
    };

    let mut trajectory = Vec::new();
    let mut converged = false;
    for _ in 0..settings.max_iterations {
        let marginals = e_step(net, &params, data, settings.passes, settings.damping)?;
        let updated = m_step(&marginals, data, net, &params)?;
        let max_change = params.max_abs_difference(&updated);
        trajectory.push(IterationRecord {
            params: updated,
            max_change,
        });
        params = updated;
        if max_change < settings.tol {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        params,
        iterations: trajectory.len(),
        trajectory,
        converged,
    })
}

/// One E-step under fixed parameters, reduced to the deregulation posteriors
/// `q(D = 1)`. Output rows follow the expression matrix, columns the
/// network's target order.
pub fn score(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    data: &ExpressionMatrix,
    passes: usize,
    damping: f64,
) -> Result<DeregulationScores> {
    let marginals = e_step(net, params, data, passes, damping)?;
    let t = net.target_count();
    let mut scores = Vec::with_capacity(data.sample_count() * t);
    for sample in &marginals.deregulated {
        for k in 0..t {
            scores.push(sample[k][1]);
        }
    }
    Ok(DeregulationScores {
        sample_ids: data.sample_ids().to_vec(),
        target_ids: net.targets().to_vec(),
        scores,
    })
}
