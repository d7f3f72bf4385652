use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CheckStatus, InequalityReport};
use crate::ising::{pair_interaction, GibbsTable, Lattice, PairCoupling, TransferChain, DEFAULT_MAX_RANGE};
use crate::ising::{TwoPoint, DEFAULT_MAX_SITES};
use crate::{Error, Result};

/// Tolerance of the chain checks.
pub const CHAIN_TOLERANCE: f64 = 1e-10;

/// Where two-point functions come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Transfer matrix when the range allows, enumeration otherwise.
    #[default]
    Auto,
    Enumeration,
    TransferMatrix,
}

impl Engine {
    fn resolve(self, w: &PairCoupling, lattice: Lattice) -> Result<Engine> {
        match self {
            Engine::Auto if w.range() <= DEFAULT_MAX_RANGE => Ok(Engine::TransferMatrix),
            Engine::Auto if lattice.len() <= DEFAULT_MAX_SITES => Ok(Engine::Enumeration),
            Engine::Auto => Err(Error::Capacity {
                what: "coupling range",
                needed: w.range(),
                cap: DEFAULT_MAX_RANGE,
            }),
            e => Ok(e),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Enumeration => "enumeration",
            Engine::TransferMatrix => "transfer_matrix",
        }
    }

    /// `k ↦ <σ_i σ_k>` in storage order.
    fn row(self, w: &PairCoupling, lattice: Lattice, i: i64) -> Result<Vec<f64>> {
        match self.resolve(w, lattice)? {
            Engine::Enumeration => {
                let table = GibbsTable::new(&pair_interaction(w, lattice)?)?;
                Ok(lattice.sites().map(|k| table.two_point(i, k)).collect())
            }
            _ => TransferChain::new(w, lattice)?.row(i),
        }
    }
}

/// Two-point bound for pair couplings on `Λ_L`, with `τ_k = tanh w_k` and
/// `c(x) = <σ_i σ_x>` (zero off the lattice). For `i < j`:
///
/// ```text
/// c(j) <= τ_1 c(j-1) + Σ_{l>=2} Σ_{s=±1} τ_l c(j+sl)
///         + (1 - τ_1²) Σ_{b>=1} τ_1^b Σ_{l>=2} Σ_{s=±1} τ_l c(j+b+sl)
/// ```
///
/// and the mirror image for `i > j`.
pub fn lemma36_check(w: &PairCoupling, half_width: usize, i: i64, j: i64) -> Result<InequalityReport> {
    lemma36_check_with(w, half_width, i, j, Engine::Auto)
}

pub fn lemma36_check_with(
    w: &PairCoupling,
    half_width: usize,
    i: i64,
    j: i64,
    engine: Engine,
) -> Result<InequalityReport> {
    let lattice = Lattice::new(half_width);
    if !lattice.contains(i) || !lattice.contains(j) {
        return Err(Error::domain(format!("sites {i}, {j} must lie in {lattice}")));
    }
    if i == j {
        return Err(Error::domain("the bound needs i != j"));
    }
    let engine = engine.resolve(w, lattice)?;
    let row = engine.row(w, lattice, i)?;
    let c = |x: i64| lattice.index(x).map_or(0.0, |k| row[k]);
    let dir = if i < j { 1 } else { -1 };
    let tau1 = w.tau(1);
    let r = w.range() as i64;
    let around = |centre: i64| -> f64 { (2..=r).map(|l| w.tau(l as usize) * (c(centre + l) + c(centre - l))).sum() };
    let direct = tau1 * c(j - dir) + around(j);
    // Beyond b_max every c(j + dir·b ± l) is off the lattice; the tail is
    // further cut once it is provably below 1e-14.
    let b_max = 2 * half_width as i64 + r;
    let mass = 2.0 * (2..=r).map(|l| w.tau(l as usize)).sum::<f64>();
    let mut tail = 0.0;
    let mut power = 1.0;
    let mut last_b = 0;
    for b in 1..=b_max {
        power *= tau1;
        if tau1 < 1.0 && power * mass / (1.0 - tau1) < 1e-14 {
            break;
        }
        tail += power * around(j + dir * b);
        last_b = b;
    }
    let rhs = direct + (1.0 - tau1 * tau1) * tail;
    let instance = json!({
        "w": w.strengths(), "L": half_width, "i": i, "j": j, "engine": engine.name(), "b_terms": last_b
    });
    let mut report = InequalityReport::judged("lemma36", instance, c(j), rhs, CHAIN_TOLERANCE);
    if last_b < b_max && mass > 0.0 {
        report = report.with_note(format!("b-sum truncated after {last_b} nonnegative terms"));
    }
    Ok(report)
}

/// Inputs of the susceptibility-sum bound
/// `Σ_{|i| <= N} <σ_i σ_0> <= 2 / ((1 - 10 D ε)(1 - tanh w_1))`, valid
/// when `Σ_{l>=2} tanh w_l <= ε (1 - tanh w_1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorBoundConfig {
    pub w: PairCoupling,
    pub epsilon: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    pub truncation: usize,
    pub half_width: usize,
    #[serde(default)]
    pub engine: Engine,
}

fn default_d() -> f64 {
    1.01
}

impl CorBoundConfig {
    pub fn new(w: PairCoupling, epsilon: f64, half_width: usize, truncation: usize) -> Self {
        CorBoundConfig {
            w,
            epsilon,
            d: default_d(),
            truncation,
            half_width,
            engine: Engine::Auto,
        }
    }

    /// `2 / ((1 - 10 D ε)(1 - tanh w_1))`.
    pub fn constant(&self) -> f64 {
        2.0 / ((1.0 - 10.0 * self.d * self.epsilon) * (1.0 - self.w.tau(1)))
    }

    /// Reasons the hypotheses fail, if any.
    pub fn hypothesis_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            v.push(format!("ε = {} is not in (0, 1/10)", self.epsilon));
        }
        if !(self.d > 1.0) {
            v.push(format!("D = {} is not > 1", self.d));
        }
        if !(10.0 * self.d * self.epsilon < 1.0) {
            v.push(format!("10 D ε = {} is not < 1", 10.0 * self.d * self.epsilon));
        }
        let long = self.w.long_range_tanh_sum();
        let allowed = self.epsilon * (1.0 - self.w.tau(1));
        if long > allowed {
            v.push(format!("Σ_(l>=2) tanh w_l = {long} exceeds ε (1 - tanh w_1) = {allowed}"));
        }
        v
    }
}

/// Truncated correlation sum against the explicit constant.
pub fn corbound_check(cfg: &CorBoundConfig) -> Result<InequalityReport> {
    if cfg.truncation > cfg.half_width {
        return Err(Error::domain(format!(
            "truncation N = {} exceeds the lattice half-width {}",
            cfg.truncation, cfg.half_width
        )));
    }
    let lattice = Lattice::new(cfg.half_width);
    let engine = cfg.engine.resolve(&cfg.w, lattice)?;
    let instance = json!({
        "w": cfg.w.strengths(), "epsilon": cfg.epsilon, "D": cfg.d,
        "L": cfg.half_width, "N": cfg.truncation, "engine": engine.name()
    });
    let violations = cfg.hypothesis_violations();
    if !violations.is_empty() {
        let rhs = if 10.0 * cfg.d * cfg.epsilon < 1.0 { cfg.constant() } else { f64::NAN };
        return Ok(InequalityReport {
            name: "corbound".into(),
            instance,
            lhs: f64::NAN,
            rhs,
            slack: f64::NAN,
            tolerance: 0.0,
            passed: false,
            status: CheckStatus::HypothesisViolated,
            note: Some(violations.join("; ")),
        });
    }
    let row = engine.row(&cfg.w, lattice, 0)?;
    let n = cfg.truncation as i64;
    let lhs: f64 = (-n..=n).map(|k| row[lattice.index(k).expect("N <= L")]).sum();
    Ok(InequalityReport::judged("corbound", instance, lhs, cfg.constant(), 0.0))
}

/// The documented grid of hypothesis-satisfying couplings
/// (`L = 2000`, `N = 1500`, `D = 1.01` unless noted).
///
/// | w                                 | ε    | note                      |
/// |-----------------------------------|------|---------------------------|
/// | 0                                 | 0.05 | uncoupled: lhs = 1        |
/// | (2, 0.001, 0.001)                 | 0.09 | τ_1 ≈ 0.9640              |
/// | (2.5, 0.0005)                     | 0.05 | τ_1 ≈ 0.9866              |
/// | (1.5, 0.003, 0.002, 0.001)        | 0.07 |                           |
/// | (1, 0.01, 0.005)                  | 0.08 |                           |
/// | (0.5, 0.02)                       | 0.05 |                           |
/// | (0, 0.05)                         | 0.06 | enumeration, L = N = 8    |
pub fn corbound_grid() -> Vec<CorBoundConfig> {
    let big = |w: Vec<f64>, eps: f64| CorBoundConfig::new(PairCoupling::new(w).expect("valid grid"), eps, 2000, 1500);
    let mut small = CorBoundConfig::new(PairCoupling::new(vec![0.0, 0.05]).expect("valid grid"), 0.06, 8, 8);
    small.engine = Engine::Enumeration;
    vec![
        big(vec![], 0.05),
        big(vec![2.0, 0.001, 0.001], 0.09),
        big(vec![2.5, 0.0005], 0.05),
        big(vec![1.5, 0.003, 0.002, 0.001], 0.07),
        big(vec![1.0, 0.01, 0.005], 0.08),
        big(vec![0.5, 0.02], 0.05),
        small,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::nn_correlation_closed;

    #[test]
    fn zero_coupling_gives_zero_sides() {
        let r = lemma36_check(&PairCoupling::zero(), 3, -1, 2).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn nearest_neighbour_is_equality() {
        let w = PairCoupling::nearest(0.8).unwrap();
        for (i, j) in [(-3, 2), (2, -1), (0, 1)] {
            let r = lemma36_check(&w, 4, i, j).unwrap();
            let closed = nn_correlation_closed(0.8, &[i.min(j), i.max(j)]).unwrap();
            assert!((r.lhs - closed).abs() < 1e-12);
            assert!(r.slack.abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn spec_instance_holds_on_both_engines() {
        let w = PairCoupling::new(vec![1.0, 0.05, 0.02]).unwrap();
        let e = lemma36_check_with(&w, 6, -2, 1, Engine::Enumeration).unwrap();
        let t = lemma36_check_with(&w, 6, -2, 1, Engine::TransferMatrix).unwrap();
        assert!(e.passed && t.passed);
        assert!((e.lhs - t.lhs).abs() < 1e-12 && (e.rhs - t.rhs).abs() < 1e-12);
        assert!(e.slack > 0.0);
    }

    #[test]
    fn lemma36_rejects_bad_sites() {
        let w = PairCoupling::nearest(1.0).unwrap();
        assert!(lemma36_check(&w, 2, 1, 1).is_err());
        assert!(lemma36_check(&w, 2, 0, 3).is_err());
    }

    #[test]
    fn corbound_uncoupled() {
        let cfg = CorBoundConfig::new(PairCoupling::zero(), 0.05, 10, 10);
        let r = corbound_check(&cfg).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        assert!((r.rhs - 2.0 / (1.0 - 0.505)).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn corbound_hypothesis_violation_is_not_failure() {
        let cfg = CorBoundConfig::new(PairCoupling::new(vec![1.0, 0.5]).unwrap(), 0.05, 10, 10);
        let r = corbound_check(&cfg).unwrap();
        assert_eq!(r.status, CheckStatus::HypothesisViolated);
        let mut cfg = CorBoundConfig::new(PairCoupling::zero(), 0.099, 10, 10);
        cfg.d = 1.02;
        assert_eq!(corbound_check(&cfg).unwrap().status, CheckStatus::HypothesisViolated);
        cfg.truncation = 11;
        assert!(corbound_check(&cfg).is_err());
    }

    #[test]
    fn grid_has_the_strong_coupling_point() {
        let grid = corbound_grid();
        assert!(grid.iter().any(|c| (c.w.tau(1) - 0.9640).abs() < 1e-4));
        assert!(grid.iter().all(|c| c.hypothesis_violations().is_empty()));
    }

    #[test]
    fn config_serde() {
        let cfg: CorBoundConfig =
            serde_json::from_str(r#"{"w": [2.0, 0.001], "epsilon": 0.09, "truncation": 10, "half_width": 20}"#).unwrap();
        assert_eq!(cfg.d, 1.01);
        assert_eq!(cfg.engine, Engine::Auto);
    }
}
