//! Discrete factor graphs with sum-product belief propagation.
//!
//! The engine is independent of the regulation model: variables are discrete
//! with arbitrary cardinality, factors are dense non-negative tables over
//! their scope. Message passing uses synchronous flooding sweeps; every
//! variable-to-factor message is recomputed from the previous sweep, then
//! every factor-to-variable message from those. Messages and beliefs live in
//! the linear domain and are renormalized to sum one after each update, which
//! keeps hard zeros exact and bounds the dynamic range.

use crate::error::{Error, Result};

/// Handle to a variable of a [`FactorGraph`]; only valid for the graph that
/// issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct VariableNode {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone)]
pub struct FactorNode {
    pub name: String,
    pub scope: Vec<VarId>,
    /// Dense table over the joint states of `scope`, last scope variable
    /// fastest (row-major). Shared: hard-constraint tables repeat across a
    /// compiled graph and deduplication keeps the hot set in cache.
    pub table: std::sync::Arc<[f64]>,
}

/// Per-variable belief vectors; each sums to one. Stored flat, one
/// concatenated buffer for all variables.
#[derive(Debug, Clone)]
pub struct MarginalSet {
    starts: Vec<usize>,
    data: Vec<f64>,
}

impl MarginalSet {
    fn with_cardinalities(variables: &[VariableNode]) -> Self {
        let mut starts = Vec::with_capacity(variables.len() + 1);
        starts.push(0usize);
        for v in variables {
            starts.push(starts.last().unwrap() + v.cardinality);
        }
        let total = *starts.last().unwrap();
        MarginalSet {
            starts,
            data: vec![0.0; total],
        }
    }

    fn slice_mut(&mut self, var: usize) -> &mut [f64] {
        &mut self.data[self.starts[var]..self.starts[var + 1]]
    }

    pub fn belief(&self, var: VarId) -> &[f64] {
        &self.data[self.starts[var.0]..self.starts[var.0 + 1]]
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct FactorGraph {
    variables: Vec<VariableNode>,
    factors: Vec<FactorNode>,
    /// Per variable: (factor index, position of the variable in its scope),
    /// in factor insertion order.
    incidence: Vec<Vec<(usize, usize)>>,
}

impl FactorGraph {
    pub fn new() -> Self {
        FactorGraph::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, cardinality: usize) -> Result<VarId> {
        if cardinality < 2 {
            return Err(Error::BadCardinality(cardinality));
        }
        let id = VarId(self.variables.len());
        self.variables.push(VariableNode {
            name: name.into(),
            cardinality,
        });
        self.incidence.push(Vec::new());
        Ok(id)
    }

    /// Adds a dense factor over `scope`. The table must have one non-negative
    /// entry per joint state (last scope variable fastest), at least one of
    /// them positive, and the scope must not repeat a variable. Accepts
    /// either an owned `Vec<f64>` or a shared `Arc<[f64]>`.
    pub fn add_factor(
        &mut self,
        name: impl Into<String>,
        scope: &[VarId],
        table: impl Into<std::sync::Arc<[f64]>>,
    ) -> Result<()> {
        let name = name.into();
        let table = table.into();
        let mut expected = 1usize;
        for (k, v) in scope.iter().enumerate() {
            if v.0 >= self.variables.len() {
                return Err(Error::BadFactor {
                    factor: name,
                    reason: format!("scope references undeclared variable #{}", v.0),
                });
            }
            if scope[..k].contains(v) {
                return Err(Error::BadFactor {
                    factor: name,
                    reason: format!("variable '{}' repeats in scope", self.variables[v.0].name),
                });
            }
            expected *= self.variables[v.0].cardinality;
        }
        if table.len() != expected {
            return Err(Error::BadFactor {
                factor: name,
                reason: format!("table has {} entries, scope requires {expected}", table.len()),
            });
        }
        if table.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::BadFactor {
                factor: name,
                reason: "table entries must be finite and non-negative".into(),
            });
        }
        if table.iter().all(|&x| x == 0.0) {
            return Err(Error::BadFactor {
                factor: name,
                reason: "table must have at least one positive entry".into(),
            });
        }
        let factor_index = self.factors.len();
        for (pos, v) in scope.iter().enumerate() {
            self.incidence[v.0].push((factor_index, pos));
        }
        self.factors.push(FactorNode {
            name,
            scope: scope.to_vec(),
            table,
        });
        Ok(())
    }

    pub fn variables(&self) -> &[VariableNode] {
        &self.variables
    }

    pub fn factors(&self) -> &[FactorNode] {
        &self.factors
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    /// Total node count of the bipartite graph, variables plus factors.
    pub fn node_count(&self) -> usize {
        self.variables.len() + self.factors.len()
    }

    pub fn max_factor_degree(&self) -> usize {
        self.factors.iter().map(|f| f.scope.len()).max().unwrap_or(0)
    }

    pub fn cardinality(&self, var: VarId) -> usize {
        self.variables[var.0].cardinality
    }

    /// Runs `passes` synchronous flooding sweeps of sum-product message
    /// passing and returns the resulting beliefs.
    ///
    /// `damping` in `[0, 1)` mixes each freshly computed message with its
    /// previous value (`(1 - damping) * new + damping * old`); zero
    /// reproduces plain belief propagation. On an acyclic graph the beliefs
    /// equal the exact marginals once `passes` reaches the graph diameter.
    /// The run is deterministic: identical graphs and settings give
    /// bit-identical beliefs.
    pub fn run_sum_product(&self, passes: usize, damping: f64) -> Result<MarginalSet> {
        if passes == 0 {
            return Err(Error::InvalidArgument("passes must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&damping) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in [0, 1), got {damping}"
            )));
        }

        let mut state = MessageState::new(self);
        for _ in 0..passes {
            state.sweep_variable_to_factor(self, damping)?;
            state.sweep_factor_to_variable(self, damping);
        }
        state.beliefs(self)
    }

    /// Exact marginals by enumerating every joint state; the brute-force
    /// reference for [`FactorGraph::run_sum_product`]. Cost is the product of
    /// all cardinalities, so this is for small graphs and diagnostics only.
    pub fn brute_force_marginals(&self) -> Result<MarginalSet> {
        let cards: Vec<usize> = self.variables.iter().map(|v| v.cardinality).collect();
        let mut beliefs = MarginalSet::with_cardinalities(&self.variables);
        let mut assignment = vec![0usize; self.variables.len()];
        let mut normalizer = 0.0;
        loop {
            let mut weight = 1.0;
            for factor in &self.factors {
                let mut idx = 0usize;
                for v in &factor.scope {
                    idx = idx * cards[v.0] + assignment[v.0];
                }
                weight *= factor.table[idx];
                if weight == 0.0 {
                    break;
                }
            }
            if weight > 0.0 {
                normalizer += weight;
                for (v, &state) in assignment.iter().enumerate() {
                    beliefs.slice_mut(v)[state] += weight;
                }
            }
            if !next_assignment(&mut assignment, &cards) {
                break;
            }
        }
        if normalizer <= 0.0 {
            let name = self
                .variables
                .first()
                .map(|v| v.name.clone())
                .unwrap_or_default();
            return Err(Error::ZeroBelief { variable: name });
        }
        for x in beliefs.data.iter_mut() {
            *x /= normalizer;
        }
        Ok(beliefs)
    }
}

fn next_assignment(assignment: &mut [usize], cards: &[usize]) -> bool {
    for (d, &card) in assignment.iter_mut().zip(cards.iter()).rev() {
        *d += 1;
        if *d < card {
            return true;
        }
        *d = 0;
    }
    false
}

/// Message storage for one BP run. One slot per (factor, scope position);
/// both directions live in flat contiguous buffers so sweeps allocate
/// nothing and stay cache-friendly on large graphs.
struct MessageState {
    /// factor -> variable, concatenated slot vectors.
    to_variable: Vec<f64>,
    /// variable -> factor, same layout.
    to_factor: Vec<f64>,
    /// Buffer offset per slot, with one sentinel entry at the end.
    slot_start: Vec<usize>,
    /// First slot of each factor: slot(f, pos) = factor_base[f] + pos.
    factor_base: Vec<usize>,
    /// Row-major table stride per slot.
    stride: Vec<usize>,
    /// Incidence in CSR form: slots of variable v are
    /// `var_slots[var_slot_start[v]..var_slot_start[v + 1]]`.
    var_slot_start: Vec<usize>,
    var_slots: Vec<usize>,
    scratch: Vec<f64>,
}

impl MessageState {
    fn new(graph: &FactorGraph) -> Self {
        let mut factor_base = Vec::with_capacity(graph.factors.len());
        let mut slot_start = Vec::new();
        let mut stride = Vec::new();
        let mut offset = 0usize;
        let mut max_card = 1usize;
        for factor in &graph.factors {
            factor_base.push(slot_start.len());
            let mut s = vec![1usize; factor.scope.len()];
            for k in (0..factor.scope.len().saturating_sub(1)).rev() {
                s[k] = s[k + 1] * graph.variables[factor.scope[k + 1].0].cardinality;
            }
            for (q, v) in factor.scope.iter().enumerate() {
                slot_start.push(offset);
                stride.push(s[q]);
                let card = graph.variables[v.0].cardinality;
                max_card = max_card.max(card);
                offset += card;
            }
        }
        slot_start.push(offset);

        let mut to_variable = vec![0.0f64; offset];
        for window in slot_start.windows(2) {
            let card = window[1] - window[0];
            for x in 0..card {
                to_variable[window[0] + x] = 1.0 / card as f64;
            }
        }
        let to_factor = to_variable.clone();

        let mut var_slot_start = Vec::with_capacity(graph.incidence.len() + 1);
        var_slot_start.push(0);
        let mut var_slots = Vec::new();
        for incident in &graph.incidence {
            for &(f, pos) in incident {
                var_slots.push(factor_base[f] + pos);
            }
            var_slot_start.push(var_slots.len());
        }

        MessageState {
            to_variable,
            to_factor,
            slot_start,
            factor_base,
            stride,
            var_slot_start,
            var_slots,
            scratch: vec![0.0; max_card],
        }
    }

    #[inline]
    fn range(&self, slot: usize) -> std::ops::Range<usize> {
        self.slot_start[slot]..self.slot_start[slot + 1]
    }

    /// Recomputes every variable-to-factor message from the factor-to-variable
    /// messages of the previous sweep. Exclude-one products are formed with
    /// prefix/suffix arrays so the cost stays linear in total variable degree.
    fn sweep_variable_to_factor(&mut self, graph: &FactorGraph, damping: f64) -> Result<()> {
        let mut prefix: Vec<f64> = Vec::new();
        let mut suffix: Vec<f64> = Vec::new();
        for v in 0..graph.variables.len() {
            let slots = self.var_slot_start[v]..self.var_slot_start[v + 1];
            if slots.is_empty() {
                continue;
            }
            let card = graph.variables[v].cardinality;
            let deg = slots.len();

            prefix.clear();
            prefix.resize((deg + 1) * card, 1.0);
            suffix.clear();
            suffix.resize((deg + 1) * card, 1.0);
            for (k, s) in slots.clone().enumerate() {
                let start = self.slot_start[self.var_slots[s]];
                for x in 0..card {
                    prefix[(k + 1) * card + x] =
                        prefix[k * card + x] * self.to_variable[start + x];
                }
            }
            for (k, s) in slots.clone().enumerate().rev() {
                let start = self.slot_start[self.var_slots[s]];
                for x in 0..card {
                    suffix[k * card + x] =
                        suffix[(k + 1) * card + x] * self.to_variable[start + x];
                }
            }

            for (k, s) in slots.clone().enumerate() {
                let mut sum = 0.0;
                for x in 0..card {
                    let m = prefix[k * card + x] * suffix[(k + 1) * card + x];
                    self.scratch[x] = m;
                    sum += m;
                }
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::ZeroBelief {
                        variable: graph.variables[v].name.clone(),
                    });
                }
                let start = self.slot_start[self.var_slots[s]];
                for x in 0..card {
                    let normalized = self.scratch[x] / sum;
                    let slot = &mut self.to_factor[start + x];
                    *slot = if damping > 0.0 {
                        (1.0 - damping) * normalized + damping * *slot
                    } else {
                        normalized
                    };
                }
                debug_assert!(
                    (self.to_factor[start..start + card].iter().sum::<f64>() - 1.0).abs()
                        <= 1e-12
                );
            }
        }
        Ok(())
    }

    fn sweep_factor_to_variable(&mut self, graph: &FactorGraph, damping: f64) {
        for (f, factor) in graph.factors.iter().enumerate() {
            let deg = factor.scope.len();
            if deg == 0 {
                continue;
            }
            let base = self.factor_base[f];
            for pos in 0..deg {
                let card = graph.variables[factor.scope[pos].0].cardinality;
                let out = &mut self.scratch[..card];
                out.fill(0.0);
                for (idx, &weight) in factor.table.iter().enumerate() {
                    if weight == 0.0 {
                        continue;
                    }
                    let mut contribution = weight;
                    let mut own_state = 0usize;
                    for q in 0..deg {
                        let state = (idx / self.stride[base + q])
                            % graph.variables[factor.scope[q].0].cardinality;
                        if q == pos {
                            own_state = state;
                        } else {
                            contribution *=
                                self.to_factor[self.slot_start[base + q] + state];
                        }
                    }
                    out[own_state] += contribution;
                }
                let sum: f64 = out.iter().sum();
                if sum > 0.0 && sum.is_finite() {
                    for x in out.iter_mut() {
                        *x /= sum;
                    }
                } else {
                    // A factor starved of support sends no information.
                    for x in out.iter_mut() {
                        *x = 1.0 / card as f64;
                    }
                }
                let r = self.range(base + pos);
                let slot = &mut self.to_variable[r];
                if damping > 0.0 {
                    for x in 0..card {
                        slot[x] = (1.0 - damping) * self.scratch[x] + damping * slot[x];
                    }
                } else {
                    slot.copy_from_slice(&self.scratch[..card]);
                }
                debug_assert!((slot.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }

    fn beliefs(&self, graph: &FactorGraph) -> Result<MarginalSet> {
        let mut beliefs = MarginalSet::with_cardinalities(&graph.variables);
        for (v, var) in graph.variables.iter().enumerate() {
            let b = beliefs.slice_mut(v);
            b.fill(1.0);
            for s in self.var_slot_start[v]..self.var_slot_start[v + 1] {
                let start = self.slot_start[self.var_slots[s]];
                for (x, m) in b.iter_mut().enumerate() {
                    *m *= self.to_variable[start + x];
                }
            }
            let sum: f64 = b.iter().sum();
            if sum <= 0.0 || !sum.is_finite() {
                return Err(Error::ZeroBelief {
                    variable: var.name.clone(),
                });
            }
            for x in b.iter_mut() {
                *x /= sum;
            }
        }
        Ok(beliefs)
    }
}
