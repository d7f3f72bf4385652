//! The lattice model at spacing `δ` and its comparison with the jump process.
//!
//! At spacing `δ` on the time window `[-T, T]`:
//!
//! * time `t` maps to site `i_δ(t) = floor(t/δ + 1/2)`, and site `i` covers
//!   the time cell `[(i - 1/2) δ, (i + 1/2) δ)`;
//! * the lattice is `Λ_L` with `L = i_δ(T)`;
//! * the nearest-neighbour coupling is `j_δ = -ln(δ)/2`, so that
//!   `tanh j_δ = (1 - δ)/(1 + δ)` and a bond breaks with probability `δ/(1 + δ)`;
//! * the kernel enters as `w_k = δ² W(δ k)`.
//!
//! The kernel acts through `exp(Σ_{i ≠ j} w_{|i-j|} σ_i σ_j)`, a sum over
//! ordered pairs, which is the Riemann sum of `∬ W(t - s) X(t) X(s)`. As a
//! pair coupling on unordered pairs this is `2 w_k`, and the exact method
//! uses `j_δ + 2 w_1, 2 w_2, 2 w_3, ...`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{ensemble, try_ensemble};
use crate::ising::{fill_nn_chain, pair_interaction, tanh_power, Enumerator, ExactOptions, Lattice, PairCoupling};
use crate::ising::{SpinConfiguration, DEFAULT_MAX_SITES};
use crate::jump::JumpPath;
use crate::kernels::Kernel;
use crate::stats::{control_variate_ratio, plain_ratio, Estimate, Moments, RatioForm};
use crate::{Error, McConfig, Result};

/// Pair strengths below this are dropped from `w^(δ)`.
pub const TRUNCATION_THRESHOLD: f64 = 1e-16;

/// Importance-weight ESS below which estimates carry a warning.
pub const ESS_WARNING: f64 = 100.0;

/// `i_δ(t) = floor(t/δ + 1/2)`.
pub fn lattice_index(t: f64, delta: f64) -> i64 {
    (t / delta + 0.5).floor() as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    delta: f64,
    horizon: f64,
}

impl ScalingParams {
    pub fn new(delta: f64, horizon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("lattice spacing δ = {delta} must lie in (0, 1)")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain(format!("horizon T = {horizon} must be finite and > 0")));
        }
        Ok(ScalingParams { delta, horizon })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `j_δ = -ln(δ)/2`.
    pub fn nn_coupling(&self) -> f64 {
        -0.5 * self.delta.ln()
    }

    /// `tanh j_δ`, evaluated as `(1 - δ)/(1 + δ)`.
    pub fn nn_tanh(&self) -> f64 {
        (1.0 - self.delta) / (1.0 + self.delta)
    }

    /// `δ/(1 + δ)`.
    pub fn flip_probability(&self) -> f64 {
        self.delta / (1.0 + self.delta)
    }

    /// `L_δ(T) = i_δ(T)`.
    pub fn half_width(&self) -> usize {
        lattice_index(self.horizon, self.delta) as usize
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.half_width())
    }

    pub fn site_of(&self, t: f64) -> i64 {
        lattice_index(t, self.delta)
    }

    fn sites_of(&self, times: &[f64]) -> Result<Vec<i64>> {
        if times.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::domain("times must be sorted"));
        }
        if let Some(t) = times.iter().find(|t| !(t.abs() <= self.horizon)) {
            return Err(Error::domain(format!("time {t} lies outside [-{0}, {0}]", self.horizon)));
        }
        Ok(times.iter().map(|&t| self.site_of(t)).collect())
    }
}

/// `w^(δ)` together with its truncation record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledCoupling {
    pub coupling: PairCoupling,
    /// Largest distance scanned; strengths beyond the range were dropped.
    pub scanned_range: usize,
    /// Largest dropped strength, zero if nothing was dropped.
    pub largest_dropped: f64,
    pub threshold: f64,
}

/// `w^(δ)_k = δ² W(δ k)` for `k >= 1`, truncated at [`TRUNCATION_THRESHOLD`].
pub fn scaled_pair_coupling(kernel: &Kernel, delta: f64) -> Result<ScaledCoupling> {
    scaled_pair_coupling_within(kernel, delta, 1 << 24)
}

/// As [`scaled_pair_coupling`], scanning distances up to `max_range` only
/// (a lattice of `n` sites never needs more than `n - 1`).
pub fn scaled_pair_coupling_within(kernel: &Kernel, delta: f64, max_range: usize) -> Result<ScaledCoupling> {
    kernel.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("lattice spacing δ = {delta} must lie in (0, 1)")));
    }
    let scale = delta * delta;
    let mut strengths = Vec::new();
    let mut largest_dropped = 0.0;
    let mut scanned_range = max_range;
    if !kernel.is_zero() {
        for k in 1..=max_range {
            let w = scale * kernel.evaluate(delta * k as f64);
            if w < TRUNCATION_THRESHOLD {
                // kernels are nonincreasing in |t|: everything further out is smaller
                largest_dropped = w;
                scanned_range = k;
                break;
            }
            strengths.push(w);
        }
    }
    Ok(ScaledCoupling {
        coupling: PairCoupling::new(strengths)?,
        scanned_range,
        largest_dropped,
        threshold: TRUNCATION_THRESHOLD,
    })
}

/// `<σ_{i(t_1)} ... σ_{i(t_N)}>` for the bare chain at coupling `j_δ`.
pub fn discrete_moment_nn(params: &ScalingParams, times: &[f64]) -> Result<f64> {
    let sites = params.sites_of(times)?;
    Ok(nn_moment(params, &sites))
}

fn nn_moment(params: &ScalingParams, sites: &[i64]) -> f64 {
    if sites.len() % 2 == 1 {
        return 0.0;
    }
    let gap: u64 = sites.chunks(2).map(|p| (p[1] - p[0]) as u64).sum();
    tanh_power(params.nn_tanh(), gap)
}

/// How expectations of the kernel-coupled chain are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteMethod {
    /// Full enumeration; the lattice must fit the enumeration cap.
    Exact,
    /// Exact bare-chain samples reweighted by the kernel term.
    #[default]
    Reweighted,
    /// As `Reweighted`, with the bare-chain value as a control variate.
    ReweightedControlVariate,
}

impl DiscreteMethod {
    fn ratio_form(self) -> RatioForm {
        match self {
            DiscreteMethod::ReweightedControlVariate => RatioForm::ControlVariate,
            _ => RatioForm::Plain,
        }
    }
}

/// The coupled chain on `Λ_{L_δ(T)}`: bare coupling `j_δ` plus the kernel.
struct CoupledChain {
    params: ScalingParams,
    lattice: Lattice,
    w: Vec<f64>,
}

impl CoupledChain {
    fn new(params: &ScalingParams, kernel: &Kernel) -> Result<Self> {
        let lattice = params.lattice();
        let scaled = scaled_pair_coupling_within(kernel, params.delta, lattice.len().saturating_sub(1))?;
        Ok(CoupledChain {
            params: *params,
            lattice,
            w: scaled.coupling.strengths().to_vec(),
        })
    }

    fn is_bare(&self) -> bool {
        self.w.is_empty()
    }

    /// Unordered-pair coupling `j_δ + 2 w_1, 2 w_2, ...`.
    fn pair_coupling(&self) -> Result<PairCoupling> {
        let mut s: Vec<f64> = self.w.iter().map(|w| 2.0 * w).collect();
        if s.is_empty() {
            s.push(0.0);
        }
        s[0] += self.params.nn_coupling();
        PairCoupling::new(s)
    }

    fn enumerator(&self, cfg: &McConfig) -> Result<Enumerator> {
        let map = pair_interaction(&self.pair_coupling()?, self.lattice)?;
        Enumerator::new(
            &map,
            ExactOptions {
                max_sites: DEFAULT_MAX_SITES,
                execution: cfg.execution,
            },
        )
    }

    /// `ln` of the importance weight relative to its maximum:
    /// `-4 Σ_k w_k #{i : σ_i ≠ σ_{i+k}}`.
    fn log_weight(&self, spins: &[i8]) -> f64 {
        let mut total = 0.0;
        for (k, w) in self.w.iter().enumerate() {
            let d = k + 1;
            let broken = spins.iter().zip(&spins[d..]).filter(|(a, b)| a != b).count();
            total += w * broken as f64;
        }
        -4.0 * total
    }

    fn draw(&self, spins: &mut [i8], rng: &mut impl Rng) -> f64 {
        fill_nn_chain(self.params.flip_probability(), spins, rng);
        self.log_weight(spins).exp()
    }

    /// Reweighted estimate of `<f>` with `f` a function of the spins.
    fn reweighted<F>(&self, f: F, known: f64, form: RatioForm, cfg: &McConfig) -> Result<Estimate>
    where
        F: Fn(&[i8]) -> f64 + Sync + Send,
    {
        if cfg.samples < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {}", cfg.samples)));
        }
        let n = self.lattice.len();
        let (value, se, ess) = match form {
            RatioForm::Plain => {
                let m: Moments<2> = ensemble(cfg, || vec![0i8; n], |spins, rng| {
                    let w = self.draw(spins, rng);
                    [f(spins) * w, w]
                });
                let ess = m.effective_sample_size(1);
                let (v, se) = plain_ratio(&m);
                (v, se, ess)
            }
            RatioForm::ControlVariate => {
                let m: Moments<3> = ensemble(cfg, || vec![0i8; n], |spins, rng| {
                    let w = self.draw(spins, rng);
                    let v = f(spins);
                    [v * w, v, w]
                });
                let ess = m.effective_sample_size(2);
                let (v, se) = control_variate_ratio(&m, known);
                (v, se, ess)
            }
        };
        if !(ess > 0.0) || !value.is_finite() {
            return Err(Error::DegenerateWeights(format!(
                "importance weights collapsed (ESS {ess}) at δ = {}",
                self.params.delta
            )));
        }
        let mut est = Estimate::sampled(value, se, cfg);
        est.ess = Some(ess);
        if ess < ESS_WARNING {
            est.warnings.push(format!("effective sample size {ess:.1} is below {ESS_WARNING}"));
        }
        Ok(est)
    }
}

/// `<σ_{i(t_1)} ... σ_{i(t_N)}>` for the chain coupled by `j_δ` and the
/// scaled kernel.
///
/// With `W ≡ 0` (or a kernel whose scaled coupling truncates to nothing)
/// this returns [`discrete_moment_nn`] exactly, whatever the method.
pub fn discrete_moment_full(
    params: &ScalingParams,
    times: &[f64],
    kernel: &Kernel,
    method: DiscreteMethod,
    cfg: &McConfig,
) -> Result<Estimate> {
    let sites = params.sites_of(times)?;
    let bare = nn_moment(params, &sites);
    let chain = CoupledChain::new(params, kernel)?;
    if chain.is_bare() {
        return Ok(Estimate::exact(bare));
    }
    let lat = chain.lattice;
    match method {
        DiscreteMethod::Exact => {
            let mask = lat.product_mask(&sites)?;
            let e = chain.enumerator(cfg)?;
            Ok(Estimate::exact(if mask == 0 { 1.0 } else { e.expectation_mask(mask) }))
        }
        _ => {
            let idx: Vec<usize> = sites.iter().map(|&s| lat.index(s).expect("site in lattice")).collect();
            let f = |spins: &[i8]| f64::from(idx.iter().map(|&k| i32::from(spins[k])).product::<i32>());
            chain.reweighted(f, bare, method.ratio_form(), cfg)
        }
    }
}

/// `(δ²/T) Σ_{i,j ∈ Λ} τ^{|i-j|}` with `τ = tanh j_δ`: the bare-chain
/// susceptibility.
pub fn susceptibility_nn(params: &ScalingParams) -> f64 {
    let n = params.lattice().len();
    let tau = params.nn_tanh();
    let mut sum = n as f64;
    let mut power = 1.0;
    for d in 1..n {
        power *= tau;
        sum += 2.0 * (n - d) as f64 * power;
    }
    params.delta * params.delta * sum / params.horizon
}

/// `(1/T) Σ_{i,j ∈ Λ} δ² <σ_i σ_j>` for the coupled chain.
pub fn susceptibility_discrete(
    params: &ScalingParams,
    kernel: &Kernel,
    method: DiscreteMethod,
    cfg: &McConfig,
) -> Result<Estimate> {
    let bare = susceptibility_nn(params);
    let chain = CoupledChain::new(params, kernel)?;
    if chain.is_bare() {
        return Ok(Estimate::exact(bare));
    }
    let scale = params.delta * params.delta / params.horizon;
    let n = chain.lattice.len() as i64;
    match method {
        DiscreteMethod::Exact => {
            let e = chain.enumerator(cfg)?;
            let m2 = e.expectation_fn(|x| {
                let m = 2 * i64::from(x.count_ones()) - n;
                (m * m) as f64
            });
            Ok(Estimate::exact(scale * m2))
        }
        _ => {
            let f = |spins: &[i8]| {
                let m: i64 = spins.iter().map(|&s| i64::from(s)).sum();
                scale * (m * m) as f64
            };
            chain.reweighted(f, bare, method.ratio_form(), cfg)
        }
    }
}

/// The step path of a chain: site `i` holds its spin on
/// `[(i - 1/2) δ, (i + 1/2) δ)`, clipped to `[-T, T]`.
pub fn step_path(params: &ScalingParams, config: &SpinConfiguration) -> Result<JumpPath> {
    if config.lattice() != params.lattice() {
        return Err(Error::domain("configuration lattice does not match the scaling parameters"));
    }
    let spins = config.spins();
    let l = params.half_width() as i64;
    let t = params.horizon;
    let jumps = spins
        .windows(2)
        .enumerate()
        .filter(|(_, p)| p[0] != p[1])
        .map(|(k, _)| (k as i64 - l) as f64 * params.delta + 0.5 * params.delta)
        .filter(|&x| x > -t && x < t)
        .collect();
    let first = spins[0];
    JumpPath::new(first, jumps, t)
}

/// Empirical probability of two sign changes closer than `ε` against the
/// analytic bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessReport {
    pub delta: f64,
    pub horizon: f64,
    pub epsilon_gap: f64,
    pub scale: f64,
    pub sample_count: usize,
    pub empirical_probability: f64,
    pub std_error: f64,
    pub analytic_bound: f64,
}

/// `T s (ε + δ) e^{2T + δ} + Σ_{k > floor(T s)} (2T + δ)^k / k!`.
pub fn tightness_bound(params: &ScalingParams, epsilon_gap: f64, scale: f64) -> f64 {
    let t = params.horizon;
    let x = 2.0 * t + params.delta;
    let head = t * scale * (epsilon_gap + params.delta) * x.exp();
    let k0 = (t * scale).floor() as u64;
    let mut term = 1.0;
    let mut tail = 0.0;
    let mut k = 0u64;
    loop {
        k += 1;
        term *= x / k as f64;
        if k > k0 {
            tail += term;
            if term < 1e-17 * tail && k as f64 > x {
                break;
            }
        }
    }
    head + tail
}

/// [`tightness_probability_with_scale`] with `s = ε^{-1/2}`.
pub fn tightness_probability(params: &ScalingParams, epsilon_gap: f64, cfg: &McConfig) -> Result<TightnessReport> {
    tightness_probability_with_scale(params, epsilon_gap, epsilon_gap.powf(-0.5), cfg)
}

/// Fraction of bare chains at `j_δ` whose step path has two sign changes
/// strictly inside `(-T, T)` closer than `ε`.
pub fn tightness_probability_with_scale(
    params: &ScalingParams,
    epsilon_gap: f64,
    scale: f64,
    cfg: &McConfig,
) -> Result<TightnessReport> {
    if !(epsilon_gap > params.delta && epsilon_gap.is_finite()) {
        return Err(Error::domain(format!(
            "gap ε = {epsilon_gap} must exceed the spacing δ = {}",
            params.delta
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!("bound scale s = {scale} must be > 0")));
    }
    if cfg.samples < 2 {
        return Err(Error::domain(format!("need at least 2 samples, got {}", cfg.samples)));
    }
    let lattice = params.lattice();
    let n = lattice.len();
    let l = params.half_width() as i64;
    let (delta, t) = (params.delta, params.horizon);
    let m: Moments<1> = try_ensemble(cfg, || vec![0i8; n], |spins, rng| {
        fill_nn_chain(params.flip_probability(), spins, rng);
        let mut last: Option<f64> = None;
        let mut hit = false;
        for (k, p) in spins.windows(2).enumerate() {
            if p[0] == p[1] {
                continue;
            }
            let time = ((k as i64 - l) as f64 + 0.5) * delta;
            if !(time > -t && time < t) {
                continue;
            }
            if let Some(prev) = last {
                if time - prev < epsilon_gap {
                    hit = true;
                    break;
                }
            }
            last = Some(time);
        }
        Ok([if hit { 1.0 } else { 0.0 }])
    })?;
    Ok(TightnessReport {
        delta,
        horizon: t,
        epsilon_gap,
        scale,
        sample_count: cfg.samples,
        empirical_probability: m.mean()[0],
        std_error: m.std_error(0),
        analytic_bound: tightness_bound(params, epsilon_gap, scale),
    })
}

/// One line of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
    pub exact_reference: Option<f64>,
}

impl ConvergenceRow {
    pub fn new(delta: f64, quantity: impl Into<String>, est: &Estimate, exact_reference: Option<f64>) -> Self {
        ConvergenceRow {
            delta,
            quantity: quantity.into(),
            estimate: est.mean,
            std_error: est.std_error,
            exact_reference,
        }
    }
}
