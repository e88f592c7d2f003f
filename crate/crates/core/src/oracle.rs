//! Brute-force exact inference over the generative model for small
//! instances. This module deliberately shares no code with the factor-graph
//! compiler or the message-passing engine: each configuration's probability
//! is computed directly from the model definition, which is what makes it a
//! trustworthy reference for both.

use crate::em::SampleMarginals;
use crate::error::{Error, Result};
use crate::model::{
    collective_state, truth_table, ExpressionMatrix, ModelParams, RegulatoryNetwork, TernaryState,
};

/// Joint configurations above this count are refused.
pub const ENUMERATION_LIMIT: f64 = 1e7;

const LN_2PI: f64 = 1.8378770664093453;

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn ln_normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * LN_2PI
}

/// Exact posterior marginals of one sample, plus the log evidence
/// `ln P(x | theta)` that normalizes them.
#[derive(Debug, Clone)]
pub struct ExactMarginals {
    /// Per gene (canonical column order), posterior over the three statuses.
    pub gene_state: Vec<[f64; 3]>,
    /// Per target, posterior over the deregulation indicator.
    pub deregulated: Vec<[f64; 2]>,
    pub log_evidence: f64,
}

/// Number of joint hidden configurations once the collective and predicted
/// statuses are determinized from the regulator statuses.
pub fn configuration_count(net: &RegulatoryNetwork) -> f64 {
    let r = net.regulator_count() as f64;
    let t = net.target_count() as f64;
    3f64.powf(r) * 2f64.powf(t) * 3f64.powf(t)
}

/// Enumerates every hidden configuration of the model and returns exact
/// posterior marginals of all statuses and deregulation indicators given one
/// expression row (canonical gene order).
pub fn exact_marginals(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    expression_row: &[f64],
) -> Result<ExactMarginals> {
    net.ensure_valid()?;
    params.validate()?;
    if expression_row.len() != net.gene_count() {
        return Err(Error::DimensionMismatch {
            context: "expression row".into(),
            expected: net.gene_count(),
            got: expression_row.len(),
        });
    }
    let configurations = configuration_count(net);
    if configurations > ENUMERATION_LIMIT {
        return Err(Error::TooLargeToEnumerate {
            configurations,
            limit: ENUMERATION_LIMIT,
        });
    }

    let r = net.regulator_count();
    let t = net.target_count();
    let indexed = crate::compile::IndexedNetwork::new(net)?;

    let mut gene_state = vec![[0.0f64; 3]; r + t];
    let mut deregulated = vec![[0.0f64; 2]; t];
    let mut total = 0.0f64;

    // Outer loop: regulator statuses. Inner loop: per-target indicator and
    // actual status. Collective and predicted statuses are deterministic
    // given the regulators.
    let mut reg_states = vec![TernaryState::Under; r];
    let mut reg_digits = vec![0usize; r];
    loop {
        for (s, &d) in reg_states.iter_mut().zip(&reg_digits) {
            *s = TernaryState::from_index(d).unwrap();
        }
        let mut reg_weight = 1.0f64;
        for (k, &s) in reg_states.iter().enumerate() {
            reg_weight *= params.alpha[s.index()]
                * normal_pdf(expression_row[k], params.mu[s.index()], params.sigma[s.index()]);
        }

        let predicted: Vec<TernaryState> = (0..t)
            .map(|k| {
                let sa = collective_state(indexed.activators[k].iter().map(|&m| reg_states[m]));
                let si = collective_state(indexed.inhibitors[k].iter().map(|&m| reg_states[m]));
                truth_table(sa, si)
            })
            .collect();

        if reg_weight > 0.0 {
            let mut target_digits = vec![0usize; t];
            loop {
                // Each target digit encodes (indicator, actual status) as d * 3 + s.
                let mut weight = reg_weight;
                for (k, &digit) in target_digits.iter().enumerate() {
                    let d = digit / 3;
                    let s = TernaryState::from_index(digit % 3).unwrap();
                    let chain = if d == 0 {
                        if s == predicted[k] {
                            1.0 - params.epsilon
                        } else {
                            0.0
                        }
                    } else if s != predicted[k] {
                        params.epsilon / 2.0
                    } else {
                        0.0
                    };
                    weight *= chain
                        * normal_pdf(
                            expression_row[r + k],
                            params.mu[s.index()],
                            params.sigma[s.index()],
                        );
                    if weight == 0.0 {
                        break;
                    }
                }

                if weight > 0.0 {
                    total += weight;
                    for (k, &s) in reg_states.iter().enumerate() {
                        gene_state[k][s.index()] += weight;
                    }
                    for (k, &digit) in target_digits.iter().enumerate() {
                        gene_state[r + k][digit % 3] += weight;
                        deregulated[k][digit / 3] += weight;
                    }
                }
                if !advance(&mut target_digits, 6) {
                    break;
                }
            }
        }
        if !advance(&mut reg_digits, 3) {
            break;
        }
    }

    if total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroBelief {
            variable: "sample posterior".into(),
        });
    }
    for m in gene_state.iter_mut() {
        for x in m.iter_mut() {
            *x /= total;
        }
    }
    for m in deregulated.iter_mut() {
        for x in m.iter_mut() {
            *x /= total;
        }
    }
    Ok(ExactMarginals {
        gene_state,
        deregulated,
        log_evidence: total.ln(),
    })
}

fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Joint density `P(x_row, states, dereg | theta)` of one fully specified
/// hidden configuration, straight from the model definition. Zero when the
/// configuration is inconsistent with the regulation logic.
pub fn model_config_weight(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    expression_row: &[f64],
    states: &[TernaryState],
    dereg: &[bool],
) -> Result<f64> {
    let r = net.regulator_count();
    let t = net.target_count();
    if states.len() != r + t || dereg.len() != t || expression_row.len() != r + t {
        return Err(Error::InvalidArgument(
            "configuration shape does not match the network".into(),
        ));
    }
    let indexed = crate::compile::IndexedNetwork::new(net)?;

    let mut weight = 1.0f64;
    for k in 0..r {
        let s = states[k];
        weight *= params.alpha[s.index()]
            * normal_pdf(expression_row[k], params.mu[s.index()], params.sigma[s.index()]);
    }
    for k in 0..t {
        let sa = collective_state(indexed.activators[k].iter().map(|&m| states[m]));
        let si = collective_state(indexed.inhibitors[k].iter().map(|&m| states[m]));
        let sr = truth_table(sa, si);
        let s = states[r + k];
        weight *= if dereg[k] {
            if s != sr {
                params.epsilon / 2.0
            } else {
                0.0
            }
        } else if s == sr {
            1.0 - params.epsilon
        } else {
            0.0
        };
        weight *= normal_pdf(
            expression_row[r + k],
            params.mu[s.index()],
            params.sigma[s.index()],
        );
    }
    Ok(weight)
}

/// Expected complete-data log-likelihood `sum_Z q(Z) ln P(X, Z | theta)`.
///
/// The log joint decomposes into terms touching one status or one indicator
/// each (the hard regulation constraints contribute zero on the support of
/// any posterior-derived `q`), so the sum only needs the per-variable
/// marginals. The deregulated half-split contributes `q(D=1) * ln(1/2)` per
/// target and sample.
///
/// Unlike the rest of the crate this accepts means in any order: the
/// canonical ordering is a label convention, and optimality probes need the
/// objective at perturbed parameter points that break it.
pub fn exact_expected_complete_loglik(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    data: &ExpressionMatrix,
    marginals: &SampleMarginals,
) -> Result<f64> {
    net.ensure_valid()?;
    if params.sigma.iter().any(|&s| !(s > 0.0))
        || !(0.0..1.0).contains(&params.epsilon)
        || params.alpha.iter().any(|&a| !(0.0..=1.0).contains(&a))
    {
        return Err(Error::InvalidParams(
            "objective needs positive deviations, epsilon in [0, 1) and alpha in [0, 1]".into(),
        ));
    }
    let alignment = data.alignment(net)?;
    let r = net.regulator_count();
    let t = net.target_count();
    let n = data.sample_count();
    if marginals.gene_state.len() != n || marginals.deregulated.len() != n {
        return Err(Error::IdMismatch {
            context: "marginals vs expression samples".into(),
        });
    }

    let ln_or_zero = |q: f64, p: f64| if q > 0.0 { q * p.ln() } else { 0.0 };
    let half = 0.5f64;

    let mut value = 0.0f64;
    for i in 0..n {
        let row = data.row_in_network_order(&alignment, i);
        for g in 0..r + t {
            let q = &marginals.gene_state[i][g];
            for s in 0..3 {
                if g < r {
                    value += ln_or_zero(q[s], params.alpha[s]);
                }
                if q[s] > 0.0 {
                    value += q[s] * ln_normal_pdf(row[g], params.mu[s], params.sigma[s]);
                }
            }
        }
        for k in 0..t {
            let q = &marginals.deregulated[i][k];
            value += ln_or_zero(q[0], 1.0 - params.epsilon);
            value += ln_or_zero(q[1], params.epsilon * half);
        }
    }
    Ok(value)
}
