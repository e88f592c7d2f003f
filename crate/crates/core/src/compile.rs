//! Compiles (network, parameters, one sample's expression row) into a factor
//! graph whose unnormalized joint over the hidden states is proportional to
//! the model posterior given that row.
//!
//! Emitted factors, per the model's likelihood factorization:
//! 1. a unary prior `alpha` on each regulator's status;
//! 2. per target, one merged ternary factor over (predicted status,
//!    deregulation indicator, actual status) carrying `1 - epsilon` for the
//!    obedient case and `epsilon / 2` for each of the two wrong statuses;
//! 3. a unary Gaussian evidence factor `(1/sigma) * exp(-(x - mu)^2 / (2 sigma^2))`
//!    on every gene's status;
//! 4. collective-state constraints for the co-activator and co-inhibitor
//!    sets, decomposed into balanced binary trees of degree-3 agreement
//!    factors so no factor exceeds degree 3;
//! 5. per target, a degree-3 hard factor forcing the predicted status to the
//!    truth-table entry of the two collective states.
//!
//! A singleton regulator set ties its collective variable by a degree-2
//! equality factor; an empty set pins it to normal. Evidence is folded in at
//! compile time, so one compiled graph serves exactly one sample and distinct
//! samples can be compiled and run fully in parallel.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::factorgraph::{FactorGraph, VarId};
use crate::model::{truth_table, ModelParams, RegulatoryNetwork, TernaryState};

/// A per-sample factor graph plus the mapping from model variables to graph
/// variables.
#[derive(Debug, Clone)]
pub struct CompiledSampleGraph {
    pub graph: FactorGraph,
    /// Status variable of every gene, canonical column order (regulators then
    /// targets).
    pub gene_state: Vec<VarId>,
    /// Per target: collective co-activator state.
    pub activator_state: Vec<VarId>,
    /// Per target: collective co-inhibitor state.
    pub inhibitor_state: Vec<VarId>,
    /// Per target: predicted status (truth-table output).
    pub predicted_state: Vec<VarId>,
    /// Per target: binary deregulation indicator (state 0 = obedient,
    /// state 1 = deregulated).
    pub deregulated: Vec<VarId>,
}

/// Resolved regulator indices per target; the shared read-only view used by
/// compilation, simulation and the oracle.
#[derive(Debug, Clone)]
pub(crate) struct IndexedNetwork {
    /// Per target, indices into the regulator list, ascending.
    pub activators: Vec<Vec<usize>>,
    pub inhibitors: Vec<Vec<usize>>,
}

impl IndexedNetwork {
    pub fn new(net: &RegulatoryNetwork) -> Result<Self> {
        net.ensure_valid()?;
        let index_of: std::collections::HashMap<&str, usize> = net
            .regulators()
            .iter()
            .enumerate()
            .map(|(k, id)| (id.as_str(), k))
            .collect();
        let resolve = |ids: &[String]| -> Vec<usize> {
            let mut v: Vec<usize> = ids.iter().map(|id| index_of[id.as_str()]).collect();
            // Canonical leaf order for the combination trees.
            v.sort_unstable();
            v
        };
        let mut activators = Vec::with_capacity(net.target_count());
        let mut inhibitors = Vec::with_capacity(net.target_count());
        for k in 0..net.target_count() {
            activators.push(resolve(net.activators_of(k)));
            inhibitors.push(resolve(net.inhibitors_of(k)));
        }
        Ok(IndexedNetwork {
            activators,
            inhibitors,
        })
    }
}

/// Gaussian evidence entries for one observed value, indexed by status.
fn evidence_table(x: f64, params: &ModelParams) -> Vec<f64> {
    (0..3)
        .map(|s| {
            let mu = params.mu[s];
            let sigma = params.sigma[s];
            let z = (x - mu) / sigma;
            (1.0 / sigma) * (-0.5 * z * z).exp()
        })
        .collect()
}

/// Constraint tables built once per compilation and shared by every factor
/// that uses them.
struct SharedTables {
    /// (left, right, out): one when `out` is the pairwise combination.
    combine: Arc<[f64]>,
    /// (member, out): ties a singleton set to its collective state.
    equality: Arc<[f64]>,
    /// Pins an empty set's collective state to normal.
    pin_normal: Arc<[f64]>,
}

impl SharedTables {
    fn new() -> Self {
        let mut combine = vec![0.0; 27];
        for a in TernaryState::ALL {
            for b in TernaryState::ALL {
                let c = crate::model::combine(a, b);
                combine[(a.index() * 3 + b.index()) * 3 + c.index()] = 1.0;
            }
        }
        let mut equality = vec![0.0; 9];
        for s in 0..3 {
            equality[s * 3 + s] = 1.0;
        }
        SharedTables {
            combine: combine.into(),
            equality: equality.into(),
            pin_normal: vec![0.0, 1.0, 0.0].into(),
        }
    }
}

/// Emits the balanced binary combination tree that ties `out` to the
/// collective state of `members`: `max(len - 2, 0)` internal variables and
/// `max(len - 1, 1)` factors.
fn emit_collective_tree(
    graph: &mut FactorGraph,
    shared: &SharedTables,
    members: &[VarId],
    out: VarId,
    label: &str,
) -> Result<()> {
    match members.len() {
        0 => {
            // No signal: the collective state is pinned to normal.
            graph.add_factor(format!("{label}.empty"), &[out], shared.pin_normal.clone())
        }
        1 => graph.add_factor(
            format!("{label}.eq"),
            &[members[0], out],
            shared.equality.clone(),
        ),
        _ => {
            let mut counter = 0usize;
            let root = reduce_balanced(graph, shared, members, label, &mut counter, Some(out))?;
            debug_assert_eq!(root, out);
            Ok(())
        }
    }
}

/// Reduces `members` (length >= 2 at the root call) to a single variable via
/// a minimum-depth tree of agreement factors. When `out` is given the root
/// result lands in it instead of a fresh internal variable.
fn reduce_balanced(
    graph: &mut FactorGraph,
    shared: &SharedTables,
    members: &[VarId],
    label: &str,
    counter: &mut usize,
    out: Option<VarId>,
) -> Result<VarId> {
    if members.len() == 1 {
        return Ok(members[0]);
    }
    let mid = members.len().div_ceil(2);
    let left = reduce_balanced(graph, shared, &members[..mid], label, counter, None)?;
    let right = reduce_balanced(graph, shared, &members[mid..], label, counter, None)?;
    let result = match out {
        Some(v) => v,
        None => {
            *counter += 1;
            graph.add_variable(format!("{label}.part{counter}"), 3)?
        }
    };
    *counter += 1;
    graph.add_factor(
        format!("{label}.combine{counter}"),
        &[left, right, result],
        shared.combine.clone(),
    )?;
    Ok(result)
}

/// Builds the factor graph of one sample. `expression_row` must hold one
/// value per gene in canonical column order (regulators then targets).
pub fn build_sample_graph(
    net: &RegulatoryNetwork,
    params: &ModelParams,
    expression_row: &[f64],
) -> Result<CompiledSampleGraph> {
    let indexed = IndexedNetwork::new(net)?;
    build_with_index(net, &indexed, params, expression_row)
}

pub(crate) fn build_with_index(
    net: &RegulatoryNetwork,
    indexed: &IndexedNetwork,
    params: &ModelParams,
    expression_row: &[f64],
) -> Result<CompiledSampleGraph> {
    params.validate()?;
    if expression_row.len() != net.gene_count() {
        return Err(Error::DimensionMismatch {
            context: "expression row".into(),
            expected: net.gene_count(),
            got: expression_row.len(),
        });
    }

    let r = net.regulator_count();
    let t = net.target_count();
    let mut graph = FactorGraph::new();
    let shared = SharedTables::new();

    let mut gene_state = Vec::with_capacity(r + t);
    for id in net.regulators() {
        gene_state.push(graph.add_variable(format!("S({id})"), 3)?);
    }
    for id in net.targets() {
        gene_state.push(graph.add_variable(format!("S({id})"), 3)?);
    }

    // Regulator priors.
    let alpha_table: Arc<[f64]> = params.alpha.to_vec().into();
    for (k, id) in net.regulators().iter().enumerate() {
        graph.add_factor(format!("alpha({id})"), &[gene_state[k]], alpha_table.clone())?;
    }

    // Gaussian evidence on every gene.
    let all_ids = net.gene_ids();
    for (g, id) in all_ids.iter().enumerate() {
        graph.add_factor(
            format!("evidence({id})"),
            &[gene_state[g]],
            evidence_table(expression_row[g], params),
        )?;
    }

    let mut activator_state = Vec::with_capacity(t);
    let mut inhibitor_state = Vec::with_capacity(t);
    let mut predicted_state = Vec::with_capacity(t);
    let mut deregulated = Vec::with_capacity(t);

    // Merged deregulation factor over (predicted, indicator, actual):
    // obedient mass 1 - epsilon, each wrong status epsilon / 2.
    let mut dereg_table = vec![0.0; 3 * 2 * 3];
    for sr in 0..3 {
        for s in 0..3 {
            if s == sr {
                dereg_table[(sr * 2) * 3 + s] = 1.0 - params.epsilon;
            } else {
                dereg_table[(sr * 2 + 1) * 3 + s] = params.epsilon / 2.0;
            }
        }
    }
    let dereg_table: Arc<[f64]> = dereg_table.into();

    let mut truth = vec![0.0; 27];
    for sa in TernaryState::ALL {
        for si in TernaryState::ALL {
            let sr = truth_table(sa, si);
            truth[(sa.index() * 3 + si.index()) * 3 + sr.index()] = 1.0;
        }
    }
    let truth: Arc<[f64]> = truth.into();

    for (k, id) in net.targets().iter().enumerate() {
        let sa = graph.add_variable(format!("SA({id})"), 3)?;
        let si = graph.add_variable(format!("SI({id})"), 3)?;
        let sr = graph.add_variable(format!("SR({id})"), 3)?;
        let d = graph.add_variable(format!("D({id})"), 2)?;

        let activator_vars: Vec<VarId> = indexed.activators[k]
            .iter()
            .map(|&m| gene_state[m])
            .collect();
        let inhibitor_vars: Vec<VarId> = indexed.inhibitors[k]
            .iter()
            .map(|&m| gene_state[m])
            .collect();
        emit_collective_tree(&mut graph, &shared, &activator_vars, sa, &format!("A({id})"))?;
        emit_collective_tree(&mut graph, &shared, &inhibitor_vars, si, &format!("I({id})"))?;

        graph.add_factor(format!("truth({id})"), &[sa, si, sr], truth.clone())?;
        graph.add_factor(
            format!("dereg({id})"),
            &[sr, d, gene_state[r + k]],
            dereg_table.clone(),
        )?;

        activator_state.push(sa);
        inhibitor_state.push(si);
        predicted_state.push(sr);
        deregulated.push(d);
    }

    debug_assert!(graph.max_factor_degree() <= 3);
    Ok(CompiledSampleGraph {
        graph,
        gene_state,
        activator_state,
        inhibitor_state,
        predicted_state,
        deregulated,
    })
}

/// Variable and factor counts of one target's compiled subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetCensus {
    pub target: String,
    /// Model variables (collective pair, predicted, indicator, own status)
    /// plus internal tree variables.
    pub variables: usize,
    /// Truth, deregulation and evidence factors plus the two trees.
    pub factors: usize,
}

/// Node counts of the compiled graph, derived arithmetically from the
/// network shape without compiling.
///
/// The total stays within a small constant factor of `2E + G` (`E` edges,
/// `G` genes): at most 3x when targets average at least two regulators, and
/// never above 10/3 even in the degenerate all-singleton case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkCensus {
    pub per_target: Vec<TargetCensus>,
    /// One status variable per regulator.
    pub regulator_variables: usize,
    /// Prior and evidence factors of the regulators.
    pub regulator_factors: usize,
    pub variable_total: usize,
    pub factor_total: usize,
}

impl NetworkCensus {
    pub fn node_total(&self) -> usize {
        self.variable_total + self.factor_total
    }
}

fn tree_counts(set_size: usize) -> (usize, usize) {
    // (internal variables, factors)
    match set_size {
        0 | 1 => (0, 1),
        k => (k - 2, k - 1),
    }
}

/// Predicts per-target and total node counts of [`build_sample_graph`]'s
/// output for a valid network.
pub fn hidden_variable_census(net: &RegulatoryNetwork) -> Result<NetworkCensus> {
    let indexed = IndexedNetwork::new(net)?;
    let r = net.regulator_count();
    let mut per_target = Vec::with_capacity(net.target_count());
    let mut variable_total = r;
    let mut factor_total = 2 * r; // alpha + evidence per regulator
    for (k, id) in net.targets().iter().enumerate() {
        let (a_vars, a_factors) = tree_counts(indexed.activators[k].len());
        let (i_vars, i_factors) = tree_counts(indexed.inhibitors[k].len());
        // own status, both collectives, predicted, indicator = 5 model vars
        let variables = 5 + a_vars + i_vars;
        // truth + dereg + own evidence = 3 fixed factors
        let factors = 3 + a_factors + i_factors;
        variable_total += variables;
        factor_total += factors;
        per_target.push(TargetCensus {
            target: id.clone(),
            variables,
            factors,
        });
    }
    Ok(NetworkCensus {
        per_target,
        regulator_variables: r,
        regulator_factors: 2 * r,
        variable_total,
        factor_total,
    })
}
