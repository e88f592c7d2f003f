//! Helpers shared by the integration suites: random model instances and the
//! independent numerical M-step maximizer used as an oracle.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dereg_core::em::SampleMarginals;
use dereg_core::{ExpressionMatrix, ModelParams, RegulatoryNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random parameters with canonical mean order and moderate noise.
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let raw: [f64; 3] = [
        rng.random_range(0.05..1.0),
        rng.random_range(0.05..1.0),
        rng.random_range(0.05..1.0),
    ];
    let total: f64 = raw.iter().sum();
    let alpha = raw.map(|a| a / total);
    let mut mu = [
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    ];
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sigma = [
        rng.random_range(0.15..1.2),
        rng.random_range(0.15..1.2),
        rng.random_range(0.15..1.2),
    ];
    ModelParams::new(alpha, rng.random_range(0.02..0.3), mu, sigma).unwrap()
}

/// Random tree-structured instance: at most four regulators partitioned over
/// at most three targets (no sharing, so the compiled graph is acyclic),
/// random parameters and a random expression row in canonical gene order.
pub fn tree_instance(rng: &mut ChaCha8Rng) -> (RegulatoryNetwork, ModelParams, Vec<f64>) {
    let t = rng.random_range(1..=3usize);
    let mut remaining = 4usize;
    let mut counts = Vec::with_capacity(t);
    for k in 0..t {
        let spare_for_rest = t - k - 1;
        let hi = remaining - spare_for_rest;
        let take = rng.random_range(1..=hi.max(1));
        counts.push(take);
        remaining -= take;
    }
    let r: usize = counts.iter().sum();

    let regulators: Vec<String> = (1..=r).map(|k| format!("tf{k}")).collect();
    let targets: Vec<String> = (1..=t).map(|k| format!("g{k}")).collect();
    let mut activators = Vec::with_capacity(t);
    let mut inhibitors = Vec::with_capacity(t);
    let mut next = 0usize;
    for &count in &counts {
        let mut act = Vec::new();
        let mut inh = Vec::new();
        for _ in 0..count {
            if rng.random_bool(0.5) {
                act.push(regulators[next].clone());
            } else {
                inh.push(regulators[next].clone());
            }
            next += 1;
        }
        activators.push(act);
        inhibitors.push(inh);
    }
    let net = RegulatoryNetwork::new(regulators, targets, activators, inhibitors).unwrap();
    let params = random_params(rng);
    let row: Vec<f64> = (0..net.gene_count())
        .map(|_| rng.random_range(-2.5..2.5))
        .collect();
    (net, params, row)
}

/// Small instance with soft marginals anchored to the data scale, so the
/// closed-form means come out in canonical order and neither the deviation
/// floor nor the starved-status fallback engages.
pub fn soft_marginal_instance(
    rng: &mut ChaCha8Rng,
) -> (RegulatoryNetwork, ExpressionMatrix, SampleMarginals) {
    let net = RegulatoryNetwork::new(
        vec!["tf1".into()],
        vec!["g1".into()],
        vec![vec!["tf1".into()]],
        vec![vec![]],
    )
    .unwrap();
    let n = 3usize;
    let gene_ids = vec!["tf1".to_string(), "g1".to_string()];
    let sample_ids: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    let values: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-1.6..1.6)).collect();
    let data = ExpressionMatrix::new(sample_ids.clone(), gene_ids, values).unwrap();

    let anchors = [-1.0f64, 0.0, 1.0];
    let mut gene_state = Vec::with_capacity(n);
    let mut deregulated = Vec::with_capacity(n);
    for i in 0..n {
        let mut per_gene = Vec::with_capacity(2);
        for g in 0..2 {
            let x = data.row(i)[g];
            let mut q = [0.0f64; 3];
            for s in 0..3 {
                let z = (x - anchors[s]) / 0.7;
                q[s] = (-0.5 * z * z).exp() * rng.random_range(0.5..1.5);
            }
            let total: f64 = q.iter().sum();
            for v in q.iter_mut() {
                *v /= total;
            }
            per_gene.push(q);
        }
        gene_state.push(per_gene);
        let q1: f64 = rng.random_range(0.05..0.95);
        deregulated.push(vec![[1.0 - q1, q1]]);
    }
    let marginals = SampleMarginals {
        sample_ids,
        gene_state,
        deregulated,
    };
    (net, data, marginals)
}

/// Wraps raw rows (canonical gene order) into an expression matrix.
pub fn matrix_from_rows(net: &RegulatoryNetwork, rows: &[Vec<f64>]) -> ExpressionMatrix {
    let sample_ids: Vec<String> = (1..=rows.len()).map(|i| format!("s{i}")).collect();
    let values: Vec<f64> = rows.iter().flatten().copied().collect();
    ExpressionMatrix::new(sample_ids, net.gene_ids(), values).unwrap()
}

/// Golden-section maximization of a unimodal function on [lo, hi].
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iterations: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Independent maximizer of the expected complete-data log-likelihood. Never
/// touches the closed forms under test: the prior is found by simplex grid
/// refinement, the deregulation rate by golden section, and each status's
/// mean and deviation by nested golden section.
pub fn numeric_m_step(
    marginals: &SampleMarginals,
    data: &ExpressionMatrix,
    net: &RegulatoryNetwork,
) -> ModelParams {
    let alignment = data.alignment(net).unwrap();
    let r = net.regulator_count();
    let t = net.target_count();
    let n = data.sample_count();

    // Sufficient views: per (sample, gene) weights and values.
    let mut xs: Vec<f64> = Vec::new();
    let mut weights: Vec<[f64; 3]> = Vec::new();
    let mut alpha_counts = [0.0f64; 3];
    let mut dereg_on = 0.0f64;
    let mut dereg_off = 0.0f64;
    for i in 0..n {
        let row = data.row_in_network_order(&alignment, i);
        for g in 0..r + t {
            xs.push(row[g]);
            weights.push(marginals.gene_state[i][g]);
            if g < r {
                for s in 0..3 {
                    alpha_counts[s] += marginals.gene_state[i][g][s];
                }
            }
        }
        for k in 0..t {
            dereg_off += marginals.deregulated[i][k][0];
            dereg_on += marginals.deregulated[i][k][1];
        }
    }

    // Prior over the simplex by iterative grid refinement.
    let alpha_objective = |a0: f64, a1: f64| -> f64 {
        let a2 = 1.0 - a0 - a1;
        if a0 <= 0.0 || a1 <= 0.0 || a2 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        alpha_counts[0] * a0.ln() + alpha_counts[1] * a1.ln() + alpha_counts[2] * a2.ln()
    };
    // Shrinking-grid refinement; halving the width keeps the whole simplex
    // reachable across rounds, and the objective is strictly concave.
    let (mut c0, mut c1, mut width) = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
    for _ in 0..26 {
        let mut best = (c0, c1, alpha_objective(c0, c1));
        let steps = 20i32;
        for i in -steps..=steps {
            for j in -steps..=steps {
                let a0 = c0 + width * i as f64 / steps as f64;
                let a1 = c1 + width * j as f64 / steps as f64;
                let v = alpha_objective(a0, a1);
                if v > best.2 {
                    best = (a0, a1, v);
                }
            }
        }
        c0 = best.0;
        c1 = best.1;
        width *= 0.5;
    }
    let alpha = [c0, c1, 1.0 - c0 - c1];

    let epsilon = golden_max(
        |e| dereg_on * e.ln() + dereg_off * (1.0 - e).ln(),
        1e-9,
        1.0 - 1e-9,
        200,
    );

    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-3);
    let mut mu = [0.0f64; 3];
    let mut sigma = [0.0f64; 3];
    for s in 0..3 {
        let state_objective = |m: f64, sd: f64| -> f64 {
            let mut v = 0.0;
            for (x, w) in xs.iter().zip(&weights) {
                let z = (x - m) / sd;
                v += w[s] * (-0.5 * z * z - sd.ln());
            }
            v
        };
        let best_sigma =
            |m: f64| golden_max(|sd| state_objective(m, sd), 1e-6, 2.0 * span + 1.0, 160);
        mu[s] = golden_max(
            |m| state_objective(m, best_sigma(m)),
            lo - span - 1.0,
            hi + span + 1.0,
            160,
        );
        sigma[s] = best_sigma(mu[s]);
    }

    // Relabel so the comparison with the canonical closed forms is direct.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| mu[a].partial_cmp(&mu[b]).unwrap());
    ModelParams {
        alpha: order.map(|s| alpha[s]),
        epsilon,
        mu: order.map(|s| mu[s]),
        sigma: order.map(|s| sigma[s]),
    }
}

/// Random valid perturbation of fitted parameters, for optimality probes.
pub fn perturb_params(params: &ModelParams, rng: &mut ChaCha8Rng, scale: f64) -> ModelParams {
    let mut alpha = params.alpha.map(|a| (a + rng.random_range(-scale..scale)).max(1e-6));
    let total: f64 = alpha.iter().sum();
    for a in alpha.iter_mut() {
        *a /= total;
    }
    ModelParams {
        alpha,
        epsilon: (params.epsilon + rng.random_range(-scale..scale)).clamp(1e-6, 1.0 - 1e-6),
        mu: params.mu.map(|m| m + rng.random_range(-scale..scale)),
        sigma: params
            .sigma
            .map(|s| (s + rng.random_range(-scale..scale)).max(1e-3)),
    }
}
