//! Tab-separated file formats. Floating-point values are printed with 17
//! significant digits so every file round-trips to the exact in-memory
//! value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use dereg_core::em::IterationRecord;
use dereg_core::eval::{FdrSelection, PrCurve};
use dereg_core::{
    DeregulationMask, DeregulationScores, ExpressionMatrix, GroundTruth, ModelParams,
    RegulatoryNetwork, TernaryState,
};

const PARAMS_FORMAT_TAG: &str = "dereg-params-v1";

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| anyhow!("cannot parse {field} value '{raw}' as a number"))
}

fn read_to_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

// --- network: one edge per line ---------------------------------------------

pub fn write_network(path: &Path, net: &RegulatoryNetwork) -> Result<()> {
    let mut out = String::from("target\tregulator\trole\n");
    for (k, target) in net.targets().iter().enumerate() {
        for regulator in net.activators_of(k) {
            writeln!(out, "{target}\t{regulator}\tactivator").unwrap();
        }
        for regulator in net.inhibitors_of(k) {
            writeln!(out, "{target}\t{regulator}\tinhibitor").unwrap();
        }
    }
    write_atomic(path, &out)
}

pub fn read_network(path: &Path) -> Result<RegulatoryNetwork> {
    let lines = read_to_lines(path)?;
    let mut iter = lines.iter();
    match iter.next() {
        Some(header) if header == "target\tregulator\trole" => {}
        other => bail!(
            "{}: expected header 'target<TAB>regulator<TAB>role', got {:?}",
            path.display(),
            other
        ),
    }

    let mut regulators: Vec<String> = Vec::new();
    let mut targets: Vec<String> = Vec::new();
    let mut activators: Vec<Vec<String>> = Vec::new();
    let mut inhibitors: Vec<Vec<String>> = Vec::new();
    for (number, line) in iter.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            bail!(
                "{} line {}: expected 3 tab-separated fields, got {}",
                path.display(),
                number + 2,
                fields.len()
            );
        }
        let (target, regulator, role) = (fields[0], fields[1], fields[2]);
        let k = match targets.iter().position(|t| t == target) {
            Some(k) => k,
            None => {
                targets.push(target.to_string());
                activators.push(Vec::new());
                inhibitors.push(Vec::new());
                targets.len() - 1
            }
        };
        if !regulators.iter().any(|r| r == regulator) {
            regulators.push(regulator.to_string());
        }
        match role {
            "activator" => activators[k].push(regulator.to_string()),
            "inhibitor" => inhibitors[k].push(regulator.to_string()),
            other => bail!(
                "{} line {}: role must be 'activator' or 'inhibitor', got '{other}'",
                path.display(),
                number + 2
            ),
        }
    }
    let net = RegulatoryNetwork::new(regulators, targets, activators, inhibitors)?;
    net.ensure_valid()?;
    Ok(net)
}

// --- expression: genes as rows, samples as columns ---------------------------

pub fn write_expression(path: &Path, data: &ExpressionMatrix) -> Result<()> {
    let mut out = String::from("gene");
    for sample in data.sample_ids() {
        out.push('\t');
        out.push_str(sample);
    }
    out.push('\n');
    for (g, gene) in data.gene_ids().iter().enumerate() {
        out.push_str(gene);
        for i in 0..data.sample_count() {
            out.push('\t');
            out.push_str(&fmt_f64(data.row(i)[g]));
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn read_expression(path: &Path) -> Result<ExpressionMatrix> {
    let lines = read_to_lines(path)?;
    let mut iter = lines.iter();
    let header = iter
        .next()
        .ok_or_else(|| anyhow!("{}: empty expression file", path.display()))?;
    let sample_ids: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
    if sample_ids.is_empty() {
        bail!("{}: header declares no samples", path.display());
    }

    let mut gene_ids = Vec::new();
    let mut by_gene: Vec<Vec<f64>> = Vec::new();
    for (number, line) in iter.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != sample_ids.len() + 1 {
            bail!(
                "{} line {}: expected {} fields, got {}",
                path.display(),
                number + 2,
                sample_ids.len() + 1,
                fields.len()
            );
        }
        gene_ids.push(fields[0].to_string());
        let row: Result<Vec<f64>> = fields[1..]
            .iter()
            .map(|raw| parse_f64("expression", raw))
            .collect();
        by_gene.push(row?);
    }

    let mut values = Vec::with_capacity(sample_ids.len() * gene_ids.len());
    for i in 0..sample_ids.len() {
        for row in &by_gene {
            values.push(row[i]);
        }
    }
    Ok(ExpressionMatrix::new(sample_ids, gene_ids, values)?)
}

// --- model parameters --------------------------------------------------------

pub fn write_params(path: &Path, params: &ModelParams) -> Result<()> {
    let triple = |v: &[f64; 3]| format!("{}\t{}\t{}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]));
    let out = format!(
        "format\t{PARAMS_FORMAT_TAG}\nalpha\t{}\nepsilon\t{}\nmu\t{}\nsigma\t{}\n",
        triple(&params.alpha),
        fmt_f64(params.epsilon),
        triple(&params.mu),
        triple(&params.sigma),
    );
    write_atomic(path, &out)
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let lines = read_to_lines(path)?;
    let mut alpha = None;
    let mut epsilon = None;
    let mut mu = None;
    let mut sigma = None;
    let mut tagged = false;
    for line in lines.iter().filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "format" => {
                if fields.get(1).copied() != Some(PARAMS_FORMAT_TAG) {
                    bail!(
                        "{}: unsupported params format {:?}",
                        path.display(),
                        fields.get(1)
                    );
                }
                tagged = true;
            }
            key @ ("alpha" | "mu" | "sigma") => {
                if fields.len() != 4 {
                    bail!("{}: {key} needs three values", path.display());
                }
                let v = [
                    parse_f64(key, fields[1])?,
                    parse_f64(key, fields[2])?,
                    parse_f64(key, fields[3])?,
                ];
                match key {
                    "alpha" => alpha = Some(v),
                    "mu" => mu = Some(v),
                    _ => sigma = Some(v),
                }
            }
            "epsilon" => {
                if fields.len() != 2 {
                    bail!("{}: epsilon needs one value", path.display());
                }
                epsilon = Some(parse_f64("epsilon", fields[1])?);
            }
            other => bail!("{}: unknown params key '{other}'", path.display()),
        }
    }
    if !tagged {
        bail!("{}: missing 'format' tag line", path.display());
    }
    let params = ModelParams::new(
        alpha.ok_or_else(|| anyhow!("{}: missing alpha", path.display()))?,
        epsilon.ok_or_else(|| anyhow!("{}: missing epsilon", path.display()))?,
        mu.ok_or_else(|| anyhow!("{}: missing mu", path.display()))?,
        sigma.ok_or_else(|| anyhow!("{}: missing sigma", path.display()))?,
    )?;
    Ok(params)
}

// --- samples-by-targets matrices ---------------------------------------------

fn write_matrix<T, F: Fn(&T) -> String>(
    path: &Path,
    first_header: &str,
    row_ids: &[String],
    column_ids: &[String],
    values: &[T],
    render: F,
) -> Result<()> {
    let mut out = String::from(first_header);
    for column in column_ids {
        out.push('\t');
        out.push_str(column);
    }
    out.push('\n');
    for (i, row_id) in row_ids.iter().enumerate() {
        out.push_str(row_id);
        for k in 0..column_ids.len() {
            out.push('\t');
            out.push_str(&render(&values[i * column_ids.len() + k]));
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<Vec<String>>)> {
    let lines = read_to_lines(path)?;
    let mut iter = lines.iter();
    let header = iter
        .next()
        .ok_or_else(|| anyhow!("{}: empty matrix file", path.display()))?;
    let column_ids: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
    let mut row_ids = Vec::new();
    let mut cells = Vec::new();
    for (number, line) in iter.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != column_ids.len() + 1 {
            bail!(
                "{} line {}: expected {} fields, got {}",
                path.display(),
                number + 2,
                column_ids.len() + 1,
                fields.len()
            );
        }
        row_ids.push(fields[0].to_string());
        cells.push(fields[1..].iter().map(|s| s.to_string()).collect());
    }
    Ok((column_ids, row_ids, cells))
}

pub fn write_scores(path: &Path, scores: &DeregulationScores) -> Result<()> {
    write_matrix(
        path,
        "sample",
        &scores.sample_ids,
        &scores.target_ids,
        &scores.scores,
        |v| fmt_f64(*v),
    )
}

pub fn read_scores(path: &Path) -> Result<DeregulationScores> {
    let (target_ids, sample_ids, cells) = read_matrix(path)?;
    let mut scores = Vec::with_capacity(sample_ids.len() * target_ids.len());
    for row in &cells {
        for raw in row {
            let v = parse_f64("score", raw)?;
            if !(0.0..=1.0).contains(&v) {
                bail!("{}: score {v} outside [0, 1]", path.display());
            }
            scores.push(v);
        }
    }
    Ok(DeregulationScores {
        sample_ids,
        target_ids,
        scores,
    })
}

pub fn write_mask(path: &Path, mask: &DeregulationMask) -> Result<()> {
    write_matrix(
        path,
        "sample",
        &mask.sample_ids,
        &mask.target_ids,
        &mask.values,
        |v| if *v { "1".into() } else { "0".into() },
    )
}

pub fn read_mask(path: &Path) -> Result<DeregulationMask> {
    let (target_ids, sample_ids, cells) = read_matrix(path)?;
    let mut values = Vec::with_capacity(sample_ids.len() * target_ids.len());
    for row in &cells {
        for raw in row {
            values.push(match raw.as_str() {
                "0" => false,
                "1" => true,
                other => bail!("{}: mask entry '{other}' is not 0 or 1", path.display()),
            });
        }
    }
    Ok(DeregulationMask {
        sample_ids,
        target_ids,
        values,
    })
}

pub fn write_states(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_matrix(
        path,
        "sample",
        &truth.sample_ids,
        &truth.gene_ids,
        &truth.states,
        |s| s.as_i8().to_string(),
    )
}

// No command consumes realized statuses back, but the file must round-trip
// like every other format.
#[cfg_attr(not(test), allow(dead_code))]
pub fn read_states(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<TernaryState>)> {
    let (gene_ids, sample_ids, cells) = read_matrix(path)?;
    let mut states = Vec::with_capacity(sample_ids.len() * gene_ids.len());
    for row in &cells {
        for raw in row {
            let value: i8 = raw
                .parse()
                .map_err(|_| anyhow!("{}: bad status '{raw}'", path.display()))?;
            states.push(
                TernaryState::from_i8(value)
                    .ok_or_else(|| anyhow!("{}: status {value} not in -1/0/1", path.display()))?,
            );
        }
    }
    Ok((sample_ids, gene_ids, states))
}

// --- fit trajectory -----------------------------------------------------------

pub fn write_trace(path: &Path, trajectory: &[IterationRecord]) -> Result<()> {
    let mut out = String::from(
        "iteration\talpha_under\talpha_normal\talpha_over\tepsilon\tmu_under\tmu_normal\tmu_over\tsigma_under\tsigma_normal\tsigma_over\tmax_change\n",
    );
    for (k, record) in trajectory.iter().enumerate() {
        let p = &record.params;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            k + 1,
            fmt_f64(p.alpha[0]),
            fmt_f64(p.alpha[1]),
            fmt_f64(p.alpha[2]),
            fmt_f64(p.epsilon),
            fmt_f64(p.mu[0]),
            fmt_f64(p.mu[1]),
            fmt_f64(p.mu[2]),
            fmt_f64(p.sigma[0]),
            fmt_f64(p.sigma[1]),
            fmt_f64(p.sigma[2]),
            fmt_f64(record.max_change),
        )
        .unwrap();
    }
    write_atomic(path, &out)
}

// --- evaluation outputs ---------------------------------------------------------

pub fn write_pr_curve(path: &Path, curve: &PrCurve) -> Result<()> {
    let mut out = format!("# auprc\t{}\nrecall\tprecision\n", fmt_f64(curve.auprc));
    for p in &curve.points {
        writeln!(out, "{}\t{}", fmt_f64(p.recall), fmt_f64(p.precision)).unwrap();
    }
    write_atomic(path, &out)
}

pub fn write_selection(path: &Path, selection: &FdrSelection, scores: &DeregulationScores) -> Result<()> {
    let mut score_of = std::collections::HashMap::new();
    for (i, sample) in scores.sample_ids.iter().enumerate() {
        for (k, target) in scores.target_ids.iter().enumerate() {
            score_of.insert((sample.as_str(), target.as_str()), scores.score(i, k));
        }
    }
    let mut out = format!(
        "# threshold\t{}\n# estimated_fdr\t{}\nsample\ttarget\tscore\n",
        fmt_f64(selection.threshold),
        fmt_f64(selection.estimated_fdr),
    );
    for (sample, target) in &selection.selected {
        let score = score_of[&(sample.as_str(), target.as_str())];
        writeln!(out, "{sample}\t{target}\t{}", fmt_f64(score)).unwrap();
    }
    write_atomic(path, &out)
}
