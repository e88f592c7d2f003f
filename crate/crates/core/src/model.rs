//! Core domain types: ternary expression states, the deterministic regulation
//! logic, regulatory networks, expression matrices and model parameters.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Discretized expression status of a gene: under-expressed, normal, or
/// over-expressed. Total order: `Under < Normal < Over`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TernaryState {
    Under,
    Normal,
    Over,
}

impl TernaryState {
    pub const ALL: [TernaryState; 3] = [TernaryState::Under, TernaryState::Normal, TernaryState::Over];

    /// Dense index used everywhere a state selects a table entry or a
    /// parameter component: Under = 0, Normal = 1, Over = 2.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            TernaryState::Under => 0,
            TernaryState::Normal => 1,
            TernaryState::Over => 2,
        }
    }

    #[inline]
    pub fn from_index(index: usize) -> Option<TernaryState> {
        match index {
            0 => Some(TernaryState::Under),
            1 => Some(TernaryState::Normal),
            2 => Some(TernaryState::Over),
            _ => None,
        }
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            TernaryState::Under => -1,
            TernaryState::Normal => 0,
            TernaryState::Over => 1,
        }
    }

    #[inline]
    pub fn from_i8(value: i8) -> Option<TernaryState> {
        match value {
            -1 => Some(TernaryState::Under),
            0 => Some(TernaryState::Normal),
            1 => Some(TernaryState::Over),
            _ => None,
        }
    }
}

impl fmt::Display for TernaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// How a target behaves given the collective state of its co-activators and
/// co-inhibitors, unless it is deregulated.
///
/// Rows of the underlying table are the co-activator state, columns the
/// co-inhibitor state. Over-expressed inhibitors dominate everything else;
/// otherwise the activators win and a lone silent side leaves the target
/// following the other side.
pub fn truth_table(activators: TernaryState, inhibitors: TernaryState) -> TernaryState {
    use TernaryState::{Normal, Over, Under};
    const TABLE: [[TernaryState; 3]; 3] = [
        // inhibitors:  Under   Normal  Over
        /* act Under */ [Normal, Under, Under],
        /* act Normal*/ [Over, Normal, Under],
        /* act Over  */ [Over, Over, Under],
    ];
    TABLE[activators.index()][inhibitors.index()]
}

/// Collective status of a regulator set: the shared value when every member
/// agrees on a non-conflicting status, otherwise normal. The empty set carries
/// no signal and is fixed to normal.
pub fn collective_state<I>(states: I) -> TernaryState
where
    I: IntoIterator<Item = TernaryState>,
{
    let mut iter = states.into_iter();
    let first = match iter.next() {
        Some(s) => s,
        None => return TernaryState::Normal,
    };
    if iter.all(|s| s == first) {
        first
    } else {
        TernaryState::Normal
    }
}

/// Binary reduction underlying [`collective_state`]: agreement keeps the
/// shared value, any disagreement collapses to normal. Associative and
/// commutative, so collective states can be computed by balanced trees.
#[inline]
pub fn combine(a: TernaryState, b: TernaryState) -> TernaryState {
    if a == b {
        a
    } else {
        TernaryState::Normal
    }
}

/// Bipartite regulatory structure: regulator genes drive target genes through
/// per-target co-activator and co-inhibitor sets.
///
/// Identifier order is load-bearing: the gene column order of every matrix is
/// all regulators in declaration order followed by all targets in declaration
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegulatoryNetwork {
    regulators: Vec<String>,
    targets: Vec<String>,
    /// Per target, aligned with `targets`.
    activators: Vec<Vec<String>>,
    inhibitors: Vec<Vec<String>>,
}

impl RegulatoryNetwork {
    /// Assembles a network. `activators` and `inhibitors` are aligned with
    /// `targets`. Only structural alignment is checked here; semantic
    /// invariants are reported by [`RegulatoryNetwork::validate`].
    pub fn new(
        regulators: Vec<String>,
        targets: Vec<String>,
        activators: Vec<Vec<String>>,
        inhibitors: Vec<Vec<String>>,
    ) -> Result<Self> {
        if activators.len() != targets.len() || inhibitors.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "regulator set lists must align with targets: {} targets, {} activator sets, {} inhibitor sets",
                targets.len(),
                activators.len(),
                inhibitors.len()
            )));
        }
        Ok(RegulatoryNetwork {
            regulators,
            targets,
            activators,
            inhibitors,
        })
    }

    pub fn regulators(&self) -> &[String] {
        &self.regulators
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn regulator_count(&self) -> usize {
        self.regulators.len()
    }

    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    pub fn gene_count(&self) -> usize {
        self.regulators.len() + self.targets.len()
    }

    /// All gene identifiers in canonical column order: regulators, then targets.
    pub fn gene_ids(&self) -> Vec<String> {
        self.regulators.iter().chain(self.targets.iter()).cloned().collect()
    }

    pub fn activators_of(&self, target_index: usize) -> &[String] {
        &self.activators[target_index]
    }

    pub fn inhibitors_of(&self, target_index: usize) -> &[String] {
        &self.inhibitors[target_index]
    }

    /// Total number of regulator-target edges.
    pub fn edge_count(&self) -> usize {
        self.activators
            .iter()
            .zip(&self.inhibitors)
            .map(|(a, i)| a.len() + i.len())
            .sum()
    }

    /// Checks every structural invariant and reports the complete list of
    /// violations. Violations are data, not failures.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();

        let mut seen = HashSet::new();
        for id in self.regulators.iter().chain(self.targets.iter()) {
            if !seen.insert(id.as_str()) {
                violations.push(Violation::DuplicateId { id: id.clone() });
            }
        }

        let regulator_set: HashSet<&str> = self.regulators.iter().map(String::as_str).collect();
        for (k, target) in self.targets.iter().enumerate() {
            let act: HashSet<&str> = self.activators[k].iter().map(String::as_str).collect();
            let inh: HashSet<&str> = self.inhibitors[k].iter().map(String::as_str).collect();

            for id in act.intersection(&inh) {
                violations.push(Violation::ActivatorInhibitorOverlap {
                    target: target.clone(),
                    regulator: (*id).to_string(),
                });
            }
            for id in self.activators[k].iter().chain(self.inhibitors[k].iter()) {
                if !regulator_set.contains(id.as_str()) {
                    violations.push(Violation::UnknownRegulator {
                        target: target.clone(),
                        regulator: id.clone(),
                    });
                }
            }
            for set in [&self.activators[k], &self.inhibitors[k]] {
                for (pos, id) in set.iter().enumerate() {
                    if set[..pos].contains(id) {
                        violations.push(Violation::DuplicateMember {
                            target: target.clone(),
                            regulator: id.clone(),
                        });
                    }
                }
            }
            if self.activators[k].is_empty() && self.inhibitors[k].is_empty() {
                violations.push(Violation::NoRegulators {
                    target: target.clone(),
                });
            }
        }

        ValidationReport { violations }
    }

    /// Validates and returns an error carrying the report on failure.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(report))
        }
    }
}

/// A single broken network invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateId { id: String },
    ActivatorInhibitorOverlap { target: String, regulator: String },
    UnknownRegulator { target: String, regulator: String },
    DuplicateMember { target: String, regulator: String },
    NoRegulators { target: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate identifier '{id}'"),
            Violation::ActivatorInhibitorOverlap { target, regulator } => write!(
                f,
                "target '{target}': regulator '{regulator}' is both co-activator and co-inhibitor"
            ),
            Violation::UnknownRegulator { target, regulator } => write!(
                f,
                "target '{target}': unknown regulator '{regulator}'"
            ),
            Violation::DuplicateMember { target, regulator } => write!(
                f,
                "target '{target}': regulator '{regulator}' listed twice in one set"
            ),
            Violation::NoRegulators { target } => {
                write!(f, "target '{target}' has no regulators")
            }
        }
    }
}

/// Outcome of [`RegulatoryNetwork::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "ok")
        } else {
            for (k, v) in self.violations.iter().enumerate() {
                if k > 0 {
                    writeln!(f)?;
                }
                write!(f, "- {v}")?;
            }
            Ok(())
        }
    }
}

/// Observed log-expression values for `n` samples over all network genes,
/// stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    sample_ids: Vec<String>,
    gene_ids: Vec<String>,
    values: Vec<f64>,
}

impl ExpressionMatrix {
    /// `values` is sample-major with one row per sample and one column per
    /// gene in `gene_ids` order. Rejects non-finite entries and duplicate ids.
    pub fn new(sample_ids: Vec<String>, gene_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != sample_ids.len() * gene_ids.len() {
            return Err(Error::DimensionMismatch {
                context: "expression matrix".into(),
                expected: sample_ids.len() * gene_ids.len(),
                got: values.len(),
            });
        }
        let mut seen = HashSet::new();
        for id in sample_ids.iter().chain(gene_ids.iter()) {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    gene: gene_ids[k % gene_ids.len()].clone(),
                    sample: sample_ids[k / gene_ids.len()].clone(),
                });
            }
        }
        Ok(ExpressionMatrix {
            sample_ids,
            gene_ids,
            values,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn sample_count(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        let w = self.gene_ids.len();
        &self.values[sample * w..(sample + 1) * w]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Maps each network gene (canonical column order) to its column in this
    /// matrix. Errors list the exact id mismatch when the gene sets differ.
    pub fn alignment(&self, net: &RegulatoryNetwork) -> Result<Vec<usize>> {
        let own: HashSet<&str> = self.gene_ids.iter().map(String::as_str).collect();
        let wanted = net.gene_ids();
        let wanted_set: HashSet<&str> = wanted.iter().map(String::as_str).collect();

        let missing: Vec<String> = wanted
            .iter()
            .filter(|id| !own.contains(id.as_str()))
            .cloned()
            .collect();
        let extra: Vec<String> = self
            .gene_ids
            .iter()
            .filter(|id| !wanted_set.contains(id.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::GeneMismatch { missing, extra });
        }

        let column_of: std::collections::HashMap<&str, usize> = self
            .gene_ids
            .iter()
            .enumerate()
            .map(|(k, id)| (id.as_str(), k))
            .collect();
        Ok(wanted.iter().map(|id| column_of[id.as_str()]).collect())
    }

    /// One sample's values reordered into the network's canonical gene order.
    pub fn row_in_network_order(&self, alignment: &[usize], sample: usize) -> Vec<f64> {
        let row = self.row(sample);
        alignment.iter().map(|&c| row[c]).collect()
    }
}

/// Tolerance for the probability simplex check on `alpha`.
pub const ALPHA_SUM_TOLERANCE: f64 = 1e-12;

/// Full parameter vector of the generative model. Triples are indexed by
/// [`TernaryState::index`]: under, normal, over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Prior state distribution of regulator genes.
    pub alpha: [f64; 3],
    /// Deregulation probability of a target in a sample.
    ///
    /// Admissible range is `0 <= epsilon < 1`; zero disables deregulation
    /// entirely and is allowed so that null models can be expressed.
    pub epsilon: f64,
    /// Per-state Gaussian means, canonically ordered `mu[0] <= mu[1] <= mu[2]`.
    pub mu: [f64; 3],
    /// Per-state Gaussian standard deviations, all positive.
    pub sigma: [f64; 3],
}

impl ModelParams {
    pub fn new(alpha: [f64; 3], epsilon: f64, mu: [f64; 3], sigma: [f64; 3]) -> Result<Self> {
        let params = ModelParams {
            alpha,
            epsilon,
            mu,
            sigma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.alpha {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "alpha components must be non-negative, got {:?}",
                    self.alpha
                )));
            }
        }
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > ALPHA_SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "alpha must sum to 1 (within {ALPHA_SUM_TOLERANCE:.0e}), got sum {sum}"
            )));
        }
        if !self.epsilon.is_finite() || !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParams(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        for m in self.mu {
            if !m.is_finite() {
                return Err(Error::InvalidParams("mu must be finite".into()));
            }
        }
        if !(self.mu[0] <= self.mu[1] && self.mu[1] <= self.mu[2]) {
            return Err(Error::InvalidParams(format!(
                "mu must be in canonical order (under <= normal <= over), got {:?}",
                self.mu
            )));
        }
        for s in self.sigma {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "sigma components must be positive, got {:?}",
                    self.sigma
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute difference over all ten scalar parameters.
    pub fn max_abs_difference(&self, other: &ModelParams) -> f64 {
        let mut d: f64 = (self.epsilon - other.epsilon).abs();
        for k in 0..3 {
            d = d.max((self.alpha[k] - other.alpha[k]).abs());
            d = d.max((self.mu[k] - other.mu[k]).abs());
            d = d.max((self.sigma[k] - other.sigma[k]).abs());
        }
        d
    }
}

/// Posterior deregulation probabilities, one row per sample and one column
/// per target gene. Every entry lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeregulationScores {
    pub sample_ids: Vec<String>,
    pub target_ids: Vec<String>,
    /// Sample-major, `sample_ids.len() * target_ids.len()` entries.
    pub scores: Vec<f64>,
}

impl DeregulationScores {
    pub fn score(&self, sample: usize, target: usize) -> f64 {
        self.scores[sample * self.target_ids.len() + target]
    }
}

/// Boolean deregulation indicators with the same shape as
/// [`DeregulationScores`]; the positive class of every evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeregulationMask {
    pub sample_ids: Vec<String>,
    pub target_ids: Vec<String>,
    /// Sample-major.
    pub values: Vec<bool>,
}

impl DeregulationMask {
    pub fn is_deregulated(&self, sample: usize, target: usize) -> bool {
        self.values[sample * self.target_ids.len() + target]
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}
