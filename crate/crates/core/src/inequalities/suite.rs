//! Randomized instance generation and the aggregated suite runner.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::chain::{corbound_check, corbound_grid, lemma36_check_with, Engine};
use super::gks::{check_uncoupled_zero, GksInstance, GksVariant};
use super::{interaction_json, CheckStatus, InequalityReport, DEFAULT_TOLERANCE};
use crate::exec::{map_indexed, stream_rng, Execution};
use crate::ising::{pair_interaction, GibbsTable, InteractionMap, Lattice, PairCoupling, TwoPoint};
use crate::Result;

/// Sizes and ranges of a randomized suite run. Instance `k` of family `f`
/// draws from `stream_rng(seed, f * 2^32 + k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub gks_instances: usize,
    pub gks_max_half_width: usize,
    pub lemma36_instances: usize,
    pub lemma36_max_half_width: usize,
    pub uncoupled_instances: usize,
    pub monotonicity_instances: usize,
    pub monotonicity_max_half_width: usize,
    pub max_range: usize,
    /// Couplings are log-uniform on this interval.
    pub coupling_min: f64,
    pub coupling_max: f64,
    /// Fraction of GKS instances that also get a random multi-spin term.
    pub multi_spin_fraction: f64,
    pub include_corbound_grid: bool,
    pub execution: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            gks_instances: 1000,
            gks_max_half_width: 3,
            lemma36_instances: 1000,
            lemma36_max_half_width: 6,
            uncoupled_instances: 1000,
            monotonicity_instances: 1000,
            monotonicity_max_half_width: 5,
            max_range: 3,
            coupling_min: 1e-3,
            coupling_max: 2.0,
            multi_spin_fraction: 0.2,
            include_corbound_grid: true,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub instances: usize,
    pub min_slack: f64,
    pub failures: usize,
    pub hypothesis_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub reports: Vec<InequalityReport>,
    pub summary: Vec<SummaryRow>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.summary.iter().map(|r| r.failures).sum()
    }

    /// One JSON object per report.
    pub fn json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r).expect("reports serialize"));
            out.push('\n');
        }
        out
    }
}

/// `name,instances,min_slack,failures,hypothesis_violations` table.
pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from("name,instances,min_slack,failures,hypothesis_violations\n");
    for r in summary {
        out.push_str(&format!(
            "{},{},{:e},{},{}\n",
            r.name, r.instances, r.min_slack, r.failures, r.hypothesis_violations
        ));
    }
    out
}

fn summarize(reports: &[InequalityReport]) -> Vec<SummaryRow> {
    let mut rows: BTreeMap<&str, SummaryRow> = BTreeMap::new();
    for r in reports {
        let row = rows.entry(&r.name).or_insert_with(|| SummaryRow {
            name: r.name.clone(),
            instances: 0,
            min_slack: f64::INFINITY,
            failures: 0,
            hypothesis_violations: 0,
        });
        row.instances += 1;
        match r.status {
            CheckStatus::HypothesisViolated => row.hypothesis_violations += 1,
            CheckStatus::Failed => row.failures += 1,
            CheckStatus::Passed => {}
        }
        if r.slack.is_finite() {
            row.min_slack = row.min_slack.min(r.slack);
        }
    }
    rows.into_values().collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

fn random_pair_coupling(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> PairCoupling {
    let range = rng.random_range(1..=cfg.max_range.max(1));
    let w = (0..range)
        .map(|_| log_uniform(rng, cfg.coupling_min, cfg.coupling_max))
        .collect();
    PairCoupling::new(w).expect("positive strengths")
}

fn random_subset(lattice: Lattice, rng: &mut ChaCha8Rng) -> Vec<i64> {
    loop {
        let s: Vec<i64> = lattice.sites().filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn random_site(lattice: Lattice, rng: &mut ChaCha8Rng) -> i64 {
    let l = lattice.half_width() as i64;
    rng.random_range(-l..=l)
}

fn gks_instance(cfg: &SuiteConfig, k: usize) -> Result<Vec<InequalityReport>> {
    let mut rng = stream_rng(cfg.seed, k as u64);
    let lattice = Lattice::new(rng.random_range(0..=cfg.gks_max_half_width));
    let w = random_pair_coupling(cfg, &mut rng);
    let mut j = pair_interaction(&w, lattice)?;
    if rng.random_bool(cfg.multi_spin_fraction) {
        let extra = random_subset(lattice, &mut rng);
        j.insert(&extra, log_uniform(&mut rng, cfg.coupling_min, cfg.coupling_max))?;
    }
    let a = random_subset(lattice, &mut rng);
    // B is usually a coupled set, so that tanh J(B) > 0 matters
    let coupled: Vec<Vec<i64>> = j.iter().map(|(s, _)| s.to_vec()).collect();
    let b = if !coupled.is_empty() && rng.random_bool(0.75) {
        coupled[rng.random_range(0..coupled.len())].clone()
    } else {
        random_subset(lattice, &mut rng)
    };
    let inst = GksInstance::new(&j, &a, &b, true)?;
    GksVariant::ALL
        .iter()
        .map(|&v| {
            inst.report(v, DEFAULT_TOLERANCE).map(|mut r| {
                r.instance["seed"] = json!([cfg.seed, k]);
                r
            })
        })
        .collect()
}

fn lemma36_instance(cfg: &SuiteConfig, k: usize) -> Result<InequalityReport> {
    let mut rng = stream_rng(cfg.seed, (1 << 32) + k as u64);
    let half_width = rng.random_range(1..=cfg.lemma36_max_half_width.max(1));
    let lattice = Lattice::new(half_width);
    let w = random_pair_coupling(cfg, &mut rng);
    let i = random_site(lattice, &mut rng);
    let j = loop {
        let j = random_site(lattice, &mut rng);
        if j != i {
            break j;
        }
    };
    let mut r = lemma36_check_with(&w, half_width, i, j, Engine::Enumeration)?;
    r.instance["seed"] = json!([cfg.seed, k]);
    Ok(r)
}

fn uncoupled_instance(cfg: &SuiteConfig, k: usize) -> Result<InequalityReport> {
    let mut rng = stream_rng(cfg.seed, (2 << 32) + k as u64);
    let lattice = Lattice::new(rng.random_range(1..=cfg.gks_max_half_width.max(1)));
    let w = random_pair_coupling(cfg, &mut rng);
    let i = random_site(lattice, &mut rng);
    let full = pair_interaction(&w, lattice)?;
    let mut j = InteractionMap::new(lattice);
    for (sites, strength) in full.iter().filter(|(s, _)| !s.contains(&i)) {
        j.insert(sites, strength)?;
    }
    let mut b = random_subset(lattice, &mut rng);
    if !b.contains(&i) {
        b.push(i);
        b.sort_unstable();
    }
    let mut r = check_uncoupled_zero(&j, i, &b)?;
    r.instance["seed"] = json!([cfg.seed, k]);
    Ok(r)
}

fn monotonicity_instance(cfg: &SuiteConfig, k: usize) -> Result<InequalityReport> {
    let mut rng = stream_rng(cfg.seed, (3 << 32) + k as u64);
    let lattice = Lattice::new(rng.random_range(0..=cfg.monotonicity_max_half_width));
    let bigger = Lattice::new(lattice.half_width() + 1);
    let w = random_pair_coupling(cfg, &mut rng);
    let (i, j) = (random_site(lattice, &mut rng), random_site(lattice, &mut rng));
    let small = GibbsTable::new(&pair_interaction(&w, lattice)?)?.two_point(i, j);
    let large = GibbsTable::new(&pair_interaction(&w, bigger)?)?.two_point(i, j);
    let instance = json!({
        "w": w.strengths(), "L": lattice.half_width(), "i": i, "j": j,
        "J": interaction_json(&pair_interaction(&w, lattice)?), "seed": [cfg.seed, k]
    });
    Ok(InequalityReport::judged("monotone_in_l", instance, small, large, DEFAULT_TOLERANCE))
}

/// Runs every randomized family plus the documented bound grid. Reports
/// come back grouped by family, each family in instance order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let exec = cfg.execution;
    let mut reports = Vec::new();
    for batch in map_indexed(cfg.gks_instances, exec, |k| gks_instance(cfg, k)) {
        reports.extend(batch?);
    }
    for r in map_indexed(cfg.lemma36_instances, exec, |k| lemma36_instance(cfg, k)) {
        reports.push(r?);
    }
    for r in map_indexed(cfg.uncoupled_instances, exec, |k| uncoupled_instance(cfg, k)) {
        reports.push(r?);
    }
    for r in map_indexed(cfg.monotonicity_instances, exec, |k| monotonicity_instance(cfg, k)) {
        reports.push(r?);
    }
    if cfg.include_corbound_grid {
        let grid = corbound_grid();
        for r in map_indexed(grid.len(), exec, |k| corbound_check(&grid[k])) {
            reports.push(r?);
        }
    }
    let summary = summarize(&reports);
    Ok(SuiteReport { reports, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            gks_instances: 50,
            lemma36_instances: 30,
            uncoupled_instances: 30,
            monotonicity_instances: 30,
            include_corbound_grid: false,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn small_suite_passes() {
        let s = run_suite(&small()).unwrap();
        assert_eq!(s.failures(), 0, "{}", summary_csv(&s.summary));
        assert_eq!(s.reports.len(), 50 * 5 + 30 * 3);
        let names: Vec<_> = s.summary.iter().map(|r| r.name.as_str()).collect();
        assert!(names.contains(&"gks_v") && names.contains(&"lemma36"));
    }

    #[test]
    fn suite_is_reproducible_across_modes() {
        let a = run_suite(&small()).unwrap();
        let b = run_suite(&SuiteConfig {
            execution: Execution::Sequential,
            ..small()
        })
        .unwrap();
        assert_eq!(a.json_lines(), b.json_lines());
    }

    #[test]
    fn csv_shape() {
        let s = run_suite(&small()).unwrap();
        let csv = summary_csv(&s.summary);
        assert!(csv.starts_with("name,instances,min_slack,failures"));
        assert_eq!(csv.lines().count(), s.summary.len() + 1);
    }

    #[test]
    fn config_defaults_from_partial_json() {
        let cfg: SuiteConfig = serde_json::from_str(r#"{"seed": 7, "gks_instances": 3}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.lemma36_instances, 1000);
    }
}
