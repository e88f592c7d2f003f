//! Generative sampling from the model and random network generation, for
//! recovery experiments and precision-recall studies.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::compile::IndexedNetwork;
use crate::error::{Error, Result};
use crate::model::{
    collective_state, truth_table, DeregulationMask, ExpressionMatrix, ModelParams,
    RegulatoryNetwork, TernaryState,
};

/// Realized hidden configuration behind a simulated expression matrix.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub sample_ids: Vec<String>,
    /// Canonical gene order (regulators then targets).
    pub gene_ids: Vec<String>,
    /// `n x (r + t)` realized statuses, sample-major.
    pub states: Vec<TernaryState>,
    /// Which (sample, target) pairs ignored their regulators.
    pub deregulated: DeregulationMask,
}

impl GroundTruth {
    pub fn state(&self, sample: usize, gene: usize) -> TernaryState {
        self.states[sample * self.gene_ids.len() + gene]
    }
}

/// Draws `n` samples from the generative model. Regulator statuses come from
/// the prior, collective and predicted statuses follow the regulation logic,
/// each target deregulates independently with probability `epsilon` (taking
/// one of the two wrong statuses uniformly), and every observation is
/// Gaussian around its status mean. Deterministic given the seed; samples use
/// independent sub-streams so generation parallelizes.
pub fn simulate(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    n: usize,
    seed: u64,
) -> Result<(ExpressionMatrix, GroundTruth)> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    params.validate()?;
    let indexed = IndexedNetwork::new(net)?;
    let r = net.regulator_count();
    let t = net.target_count();

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let sample_seeds: Vec<u64> = (0..n).map(|_| master.random()).collect();

    let rows: Vec<(Vec<TernaryState>, Vec<bool>, Vec<f64>)> = sample_seeds
        .par_iter()
        .map(|&s| draw_sample(&indexed, params, r, t, s))
        .collect();

    let sample_ids: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    let gene_ids = net.gene_ids();
    let mut states = Vec::with_capacity(n * (r + t));
    let mut dereg = Vec::with_capacity(n * t);
    let mut values = Vec::with_capacity(n * (r + t));
    for (row_states, row_dereg, row_values) in rows {
        states.extend(row_states);
        dereg.extend(row_dereg);
        values.extend(row_values);
    }

    let expression = ExpressionMatrix::new(sample_ids.clone(), gene_ids.clone(), values)?;
    let truth = GroundTruth {
        sample_ids: sample_ids.clone(),
        gene_ids,
        states,
        deregulated: DeregulationMask {
            sample_ids,
            target_ids: net.targets().to_vec(),
            values: dereg,
        },
    };
    Ok((expression, truth))
}

fn draw_sample(
    indexed: &IndexedNetwork,
    params: &ModelParams,
    r: usize,
    t: usize,
    seed: u64,
) -> (Vec<TernaryState>, Vec<bool>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(r + t);
    for _ in 0..r {
        states.push(draw_status(&mut rng, &params.alpha));
    }
    let mut dereg = Vec::with_capacity(t);
    for k in 0..t {
        let sa = collective_state(indexed.activators[k].iter().map(|&m| states[m]));
        let si = collective_state(indexed.inhibitors[k].iter().map(|&m| states[m]));
        let predicted = truth_table(sa, si);
        let d = params.epsilon > 0.0 && rng.random_bool(params.epsilon);
        let status = if d {
            let wrong: Vec<TernaryState> = TernaryState::ALL
                .into_iter()
                .filter(|&s| s != predicted)
                .collect();
            wrong[rng.random_range(0..wrong.len())]
        } else {
            predicted
        };
        states.push(status);
        dereg.push(d);
    }
    let values = states
        .iter()
        .map(|s| {
            Normal::new(params.mu[s.index()], params.sigma[s.index()])
                .expect("validated sigma is positive and finite")
                .sample(&mut rng)
        })
        .collect();
    (states, dereg, values)
}

fn draw_status(rng: &mut ChaCha8Rng, alpha: &[f64; 3]) -> TernaryState {
    let u: f64 = rng.random();
    if u < alpha[0] {
        TernaryState::Under
    } else if u < alpha[0] + alpha[1] {
        TernaryState::Normal
    } else {
        TernaryState::Over
    }
}

/// Random bipartite topology: each target draws a uniform number of distinct
/// regulators in `1..=max_regulators`, each independently assigned the
/// activator or inhibitor role with equal probability. Deterministic given
/// the seed.
pub fn random_network(
    r: usize,
    t: usize,
    max_regulators: usize,
    seed: u64,
) -> Result<RegulatoryNetwork> {
    if r == 0 || t == 0 || max_regulators == 0 {
        return Err(Error::InvalidArgument(
            "regulator, target and max-regulator counts must all be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let regulators: Vec<String> = (1..=r).map(|k| format!("tf{k}")).collect();
    let targets: Vec<String> = (1..=t).map(|k| format!("g{k}")).collect();
    let cap = max_regulators.min(r);

    let mut activators = Vec::with_capacity(t);
    let mut inhibitors = Vec::with_capacity(t);
    for _ in 0..t {
        let k = rng.random_range(1..=cap);
        let members = rand::seq::index::sample(&mut rng, r, k);
        let mut act = Vec::new();
        let mut inh = Vec::new();
        for m in members {
            if rng.random_bool(0.5) {
                act.push(regulators[m].clone());
            } else {
                inh.push(regulators[m].clone());
            }
        }
        activators.push(act);
        inhibitors.push(inh);
    }
    RegulatoryNetwork::new(regulators, targets, activators, inhibitors)
}
