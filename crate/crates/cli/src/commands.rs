use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use ising_lab::continuum::{
    discrete_moment_full, susceptibility_discrete, tightness_probability, ConvergenceRow, DiscreteMethod,
    ScalingParams,
};
use ising_lab::inequalities::{corbound_check, corbound_grid, run_suite, summary_csv, CheckStatus, Engine, SuiteConfig};
use ising_lab::ising::{
    expectation_exact_with, pair_interaction, partition_exact_with, ExactOptions, ExactRecord, Lattice,
    TransferChain, TwoPoint, DEFAULT_MAX_SITES,
};
use ising_lab::jump::{free_susceptibility, moment_closed_with_intensity, JumpModel};
use ising_lab::stats::RatioForm;
use ising_lab::{Estimate, Kernel, McConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    Common, ContinuumConfig, CorboundRunConfig, ExactConfig, McRunConfig, Quantity, ScanConfig, ScanMethod,
};
use crate::output::{cell, optional_cell, Document};
use crate::CliError;

/// Exact lattices at most this wide serve as references in continuum studies.
const REFERENCE_MAX_SITES: usize = 16;

fn mc_config(common: &Common, samples: usize) -> McConfig {
    McConfig::new(samples, common.seed)
        .with_shards(common.shards)
        .with_execution(common.execution)
}

fn header(common: &Common, section: &impl Serialize) -> Value {
    json!({ "common": common, "command": section })
}

fn check_samples(samples: usize) -> Result<(), CliError> {
    if samples < 2 {
        return Err(CliError::Config(format!("samples must be at least 2, got {samples}")));
    }
    Ok(())
}

fn check_horizons(horizons: &[f64]) -> Result<(), CliError> {
    if horizons.is_empty() {
        return Err(CliError::Config("no horizons given".into()));
    }
    Ok(())
}

pub fn verify(common: &Common, mut cfg: SuiteConfig, summary_path: Option<&Path>) -> Result<Document, CliError> {
    cfg.seed = common.seed;
    cfg.execution = common.execution;
    let report = run_suite(&cfg)?;
    let mut doc = Document::json_lines("verify", header(common, &cfg));
    for r in &report.reports {
        doc.push_record(r);
    }
    doc.failures = report.failures();
    let csv = summary_csv(&report.summary);
    if let Some(path) = summary_path {
        std::fs::write(path, &csv)?;
    }
    eprint!("{csv}");
    Ok(doc)
}

/// Sites that survive `σ_i² = 1`, sorted.
fn odd_sites(sites: &[i64]) -> Vec<i64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &s in sites {
        *counts.entry(s).or_default() += 1;
    }
    counts.into_iter().filter(|&(_, c)| c % 2 == 1).map(|(s, _)| s).collect()
}

pub fn exact(common: &Common, cfg: ExactConfig) -> Result<Document, CliError> {
    let lattice = Lattice::new(cfg.half_width);
    for q in &cfg.sites {
        if let Some(&s) = q.iter().find(|&&s| !lattice.contains(s)) {
            return Err(CliError::Config(format!("site {s} is outside {lattice}")));
        }
    }
    let engine = match cfg.engine {
        Engine::Auto if lattice.len() <= DEFAULT_MAX_SITES => Engine::Enumeration,
        Engine::Auto => Engine::TransferMatrix,
        e => e,
    };
    let engine_name = match engine {
        Engine::Enumeration => "enumeration",
        _ => "transfer_matrix",
    };
    let mut doc = Document::json_lines("exact", header(common, &cfg));
    let inputs = |extra: Option<&[i64]>| {
        let mut v = json!({ "w": cfg.w, "half_width": cfg.half_width, "engine": engine_name });
        if let Some(sites) = extra {
            v["sites"] = json!(sites);
        }
        v
    };
    match engine {
        Engine::Enumeration => {
            let j = pair_interaction(&cfg.w, lattice)?;
            let opts = ExactOptions {
                execution: common.execution,
                ..ExactOptions::default()
            };
            let z = partition_exact_with(&j, opts)?;
            doc.push_record(&ExactRecord {
                operation: "partition".into(),
                inputs: inputs(None),
                value: z.value(),
                log_value: Some(z.log_value),
            });
            for q in &cfg.sites {
                doc.push_record(&ExactRecord {
                    operation: "expectation".into(),
                    inputs: inputs(Some(q)),
                    value: expectation_exact_with(&j, q, opts)?,
                    log_value: None,
                });
            }
        }
        _ => {
            let reduced: Vec<Vec<i64>> = cfg.sites.iter().map(|q| odd_sites(q)).collect();
            if let Some(q) = reduced.iter().find(|q| q.len() > 2) {
                return Err(CliError::Config(format!(
                    "the transfer-matrix engine answers one- and two-site queries only, got {q:?}"
                )));
            }
            let chain = TransferChain::new(&cfg.w, lattice)?;
            let log_z = chain.log_partition();
            doc.push_record(&ExactRecord {
                operation: "partition".into(),
                inputs: inputs(None),
                value: log_z.exp(),
                log_value: Some(log_z),
            });
            for (q, r) in cfg.sites.iter().zip(&reduced) {
                let value = match r.as_slice() {
                    [] => 1.0,
                    [_] => 0.0,
                    [a, b] => chain.two_point(*a, *b),
                    _ => unreachable!("checked above"),
                };
                doc.push_record(&ExactRecord {
                    operation: "expectation".into(),
                    inputs: inputs(Some(q)),
                    value,
                    log_value: None,
                });
            }
        }
    }
    Ok(doc)
}

fn push_convergence(doc: &mut Document, row: &ConvergenceRow) {
    doc.push_row(vec![
        cell(row.delta),
        row.quantity.clone(),
        cell(row.estimate),
        cell(row.std_error),
        optional_cell(row.exact_reference),
    ]);
}

pub fn continuum_study(common: &Common, cfg: ContinuumConfig) -> Result<Document, CliError> {
    check_samples(cfg.samples)?;
    if cfg.deltas.is_empty() {
        return Err(CliError::Config("no lattice spacings given".into()));
    }
    let params: Vec<ScalingParams> = cfg
        .deltas
        .iter()
        .map(|&d| ScalingParams::new(d, cfg.horizon))
        .collect::<Result<_, _>>()?;
    let model = JumpModel::new(cfg.kernel.clone(), cfg.horizon)?;
    if let Some(&t) = cfg.times.iter().find(|t| !(t.abs() <= cfg.horizon)) {
        return Err(CliError::Config(format!("time {t} is outside [-T, T] with T = {}", cfg.horizon)));
    }
    let mc = mc_config(common, cfg.samples);
    let zero = cfg.kernel.is_zero();
    let mut doc = Document::csv(
        "continuum-study",
        header(common, &cfg),
        vec!["delta", "quantity", "estimate", "std_error", "exact_reference"],
    );

    let reference = |p: &ScalingParams, run: &dyn Fn(DiscreteMethod) -> ising_lab::Result<Estimate>| {
        if cfg.method == DiscreteMethod::Exact || p.lattice().len() > REFERENCE_MAX_SITES {
            return Ok(None);
        }
        run(DiscreteMethod::Exact).map(|e| Some(e.mean))
    };

    for p in &params {
        let moment = |m| discrete_moment_full(p, &cfg.times, &cfg.kernel, m, &mc);
        let est = moment(cfg.method)?;
        let exact = if zero { Some(est.mean) } else { reference(p, &moment)? };
        push_convergence(&mut doc, &ConvergenceRow::new(p.delta(), "moment", &est, exact));

        if cfg.susceptibility {
            let chi = |m| susceptibility_discrete(p, &cfg.kernel, m, &mc);
            let est = chi(cfg.method)?;
            let exact = if zero { Some(est.mean) } else { reference(p, &chi)? };
            push_convergence(&mut doc, &ConvergenceRow::new(p.delta(), "susceptibility", &est, exact));
        }

        if let Some(eps) = cfg.epsilon_gap {
            let t = tightness_probability(p, eps, &mc)?;
            doc.push_row(vec![
                cell(p.delta()),
                "close_jumps_probability".into(),
                cell(t.empirical_probability),
                cell(t.std_error),
                String::new(),
            ]);
            doc.push_row(vec![
                cell(p.delta()),
                "close_jumps_bound".into(),
                cell(t.analytic_bound),
                cell(0.0),
                String::new(),
            ]);
        }
    }

    if cfg.jump_reference {
        let form = match cfg.method {
            DiscreteMethod::ReweightedControlVariate => RatioForm::ControlVariate,
            _ => RatioForm::Plain,
        };
        let est = model.mc_moment(&cfg.times, form, &mc)?;
        let exact = if zero { Some(moment_closed_with_intensity(&cfg.times, 1.0)?) } else { None };
        push_convergence(&mut doc, &ConvergenceRow::new(0.0, "moment", &est, exact));
        if cfg.susceptibility {
            let est = model.mc_susceptibility(&mc)?.estimate;
            let exact = zero.then(|| free_susceptibility(cfg.horizon, 1.0));
            push_convergence(&mut doc, &ConvergenceRow::new(0.0, "susceptibility", &est, exact));
        }
    }
    Ok(doc)
}

#[derive(Serialize)]
struct McRecord<'a> {
    quantity: Quantity,
    kernel: &'a Kernel,
    #[serde(rename = "T")]
    horizon: f64,
    intensity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    times: Option<&'a [f64]>,
    samples: usize,
    seed: u64,
    shards: usize,
    mean: f64,
    std_error: f64,
    ess: Option<f64>,
    warnings: &'a [String],
    /// Closed-form value for `W ≡ 0`.
    reference: Option<f64>,
    wall_time_s: f64,
}

fn models(kernel: &Kernel, horizons: &[f64], intensity: f64) -> Result<Vec<JumpModel>, CliError> {
    check_horizons(horizons)?;
    horizons
        .iter()
        .map(|&t| Ok(JumpModel::new(kernel.clone(), t)?.with_intensity(intensity)?))
        .collect()
}

pub fn mc(common: &Common, cfg: McRunConfig) -> Result<Document, CliError> {
    check_samples(cfg.samples)?;
    if cfg.quantities.is_empty() {
        return Err(CliError::Config("no quantities requested".into()));
    }
    let models = models(&cfg.kernel, &cfg.horizons, cfg.intensity)?;
    if cfg.quantities.contains(&Quantity::Moment) {
        for m in &models {
            if let Some(&t) = cfg.times.iter().find(|t| !(t.abs() <= m.horizon())) {
                return Err(CliError::Config(format!("time {t} is outside [-T, T] with T = {}", m.horizon())));
            }
        }
    }
    let mc = mc_config(common, cfg.samples);
    let zero = cfg.kernel.is_zero();
    let mut doc = Document::json_lines("mc", header(common, &cfg));
    for model in &models {
        for &q in &cfg.quantities {
            let start = Instant::now();
            let (est, reference) = match q {
                Quantity::Partition => (model.mc_partition(&mc)?, None),
                Quantity::PartitionWithField => (model.mc_partition_with_field(cfg.mu, &mc)?, None),
                Quantity::Susceptibility => (
                    model.mc_susceptibility(&mc)?.estimate,
                    zero.then(|| free_susceptibility(model.horizon(), model.intensity())),
                ),
                Quantity::FdSusceptibility => (
                    model.fd_susceptibility(cfg.h, &mc)?.estimate,
                    zero.then(|| free_susceptibility(model.horizon(), model.intensity())),
                ),
                Quantity::Moment => (
                    model.mc_moment(&cfg.times, RatioForm::Plain, &mc)?,
                    if zero { Some(moment_closed_with_intensity(&cfg.times, model.intensity())?) } else { None },
                ),
            };
            doc.push_record(&McRecord {
                quantity: q,
                kernel: &cfg.kernel,
                horizon: model.horizon(),
                intensity: model.intensity(),
                mu: (q == Quantity::PartitionWithField).then_some(cfg.mu),
                h: (q == Quantity::FdSusceptibility).then_some(cfg.h),
                times: (q == Quantity::Moment).then_some(cfg.times.as_slice()),
                samples: est.samples,
                seed: est.seed,
                shards: est.shards,
                mean: est.mean,
                std_error: est.std_error,
                ess: est.ess,
                warnings: &est.warnings,
                reference,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(doc)
}

pub fn susceptibility_scan(common: &Common, cfg: ScanConfig) -> Result<Document, CliError> {
    check_samples(cfg.samples)?;
    let models = models(&cfg.kernel, &cfg.horizons, cfg.intensity)?;
    let mc = mc_config(common, cfg.samples);
    let zero = cfg.kernel.is_zero();
    let mut doc = Document::csv(
        "susceptibility-scan",
        header(common, &cfg),
        vec!["T", "estimate", "std_error", "reference", "ess"],
    );
    for model in &models {
        let est = match cfg.method {
            ScanMethod::Ratio => model.mc_susceptibility(&mc)?.estimate,
            ScanMethod::FiniteDifference => model.fd_susceptibility(cfg.h, &mc)?.estimate,
        };
        let reference = zero.then(|| free_susceptibility(model.horizon(), model.intensity()));
        doc.push_row(vec![
            cell(model.horizon()),
            cell(est.mean),
            cell(est.std_error),
            optional_cell(reference),
            optional_cell(est.ess),
        ]);
    }
    Ok(doc)
}

pub fn corbound(common: &Common, cfg: CorboundRunConfig) -> Result<Document, CliError> {
    let points = if cfg.points.is_empty() { corbound_grid() } else { cfg.points.clone() };
    let mut doc = Document::json_lines("corbound", header(common, &json!({ "points": points })));
    for p in &points {
        let report = corbound_check(p)?;
        if report.status == CheckStatus::Failed {
            doc.failures += 1;
        }
        doc.push_record(&report);
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_sites_cancel() {
        assert_eq!(odd_sites(&[3, -1, 3, 2, 3]), vec![-1, 2, 3]);
        assert!(odd_sites(&[1, 1]).is_empty());
    }
}
