//! The continuum spin path `X(t) = B (-1)^{N(t)}` on `[-T, T]` and Monte
//! Carlo estimators for the path measures it defines.
//!
//! `N` is a two-sided Poisson clock. On `[-T, T]` it is realized exactly as
//! a Poisson(`2 T λ`) number of uniform points; `B` is the sign at `-T`.
//! Paths are right-continuous: a jump at `t` is already counted at `t`.
//!
//! Every estimator reweights free paths by `exp(I(X))` with
//! `I(X) = ∬ W(t - s) X(t) X(s) ds dt`. Since `|I| <= ∬ W`, the weights
//! are computed as `exp(I - ∬ W)` in `(0, 1]` and the shift is undone
//! analytically where a partition function is reported.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::exec::try_ensemble;
use crate::kernels::Kernel;
use crate::stats::{control_variate_ratio, plain_ratio, Estimate, Moments, RatioForm};
use crate::{Error, McConfig, Result};

/// A piecewise constant `±1` path on `[-T, T]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpPath {
    initial_sign: i8,
    jump_times: Vec<f64>,
    horizon: f64,
}

impl JumpPath {
    /// `jump_times` must be strictly increasing inside `(-T, T)`.
    pub fn new(initial_sign: i8, jump_times: Vec<f64>, horizon: f64) -> Result<Self> {
        if initial_sign != 1 && initial_sign != -1 {
            return Err(Error::domain(format!("initial sign {initial_sign} is not ±1")));
        }
        check_horizon(horizon)?;
        if jump_times.iter().any(|&t| !(t > -horizon && t < horizon)) {
            return Err(Error::domain(format!("jump times must lie in (-{horizon}, {horizon})")));
        }
        if jump_times.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::domain("jump times must be strictly increasing"));
        }
        Ok(JumpPath {
            initial_sign,
            jump_times,
            horizon,
        })
    }

    pub fn constant(sign: i8, horizon: f64) -> Result<Self> {
        JumpPath::new(sign, Vec::new(), horizon)
    }

    pub fn initial_sign(&self) -> i8 {
        self.initial_sign
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `X(t)`, counting jumps in `(-T, t]`.
    pub fn value_at(&self, t: f64) -> i8 {
        let jumps = self.jump_times.partition_point(|&x| x <= t);
        if jumps % 2 == 0 {
            self.initial_sign
        } else {
            -self.initial_sign
        }
    }

    /// Constant pieces `(start, end, value)` covering `[-T, T]` in order.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, i8)> + '_ {
        let n = self.jump_times.len();
        (0..=n).map(move |m| {
            let start = if m == 0 { -self.horizon } else { self.jump_times[m - 1] };
            let end = if m == n { self.horizon } else { self.jump_times[m] };
            let sign = if m % 2 == 0 { self.initial_sign } else { -self.initial_sign };
            (start, end, sign)
        })
    }

    /// `∫_{-T}^{T} X(t) dt`.
    pub fn time_integral(&self) -> f64 {
        self.segments().map(|(a, b, s)| f64::from(s) * (b - a)).sum()
    }

    /// `∬_{[-T, T]^2} W(t - s) X(t) X(s) ds dt`.
    ///
    /// Exponential-type kernels go through the double antiderivative `G` at
    /// the breakpoints `p_m` of the path:
    /// `-Σ_{m,n} d_m d_n G(p_m - p_n)` with `d_m` the jump of `X` at `p_m`
    /// (counting the switch-on at `-T` and switch-off at `T`). Other kernels
    /// sum adaptive quadratures over segment pairs.
    pub fn interaction_double_integral(&self, kernel: &Kernel) -> Result<f64> {
        if kernel.is_zero() {
            return Ok(0.0);
        }
        if kernel.has_closed_form() {
            let n = self.jump_times.len();
            let b = f64::from(self.initial_sign);
            let mut points = Vec::with_capacity(n + 2);
            points.push((-self.horizon, b));
            for (m, &t) in self.jump_times.iter().enumerate() {
                // the sign goes from ±b to ∓b
                let before = if m % 2 == 0 { b } else { -b };
                points.push((t, -2.0 * before));
            }
            let last = if n % 2 == 0 { b } else { -b };
            points.push((self.horizon, -last));
            let mut total = 0.0;
            for (m, &(pm, dm)) in points.iter().enumerate() {
                for &(pn, dn) in &points[m + 1..] {
                    let g = kernel.double_antiderivative(pn - pm).expect("closed form");
                    total += dm * dn * g;
                }
            }
            return Ok(-2.0 * total);
        }
        let segs: Vec<_> = self.segments().collect();
        let mut total = 0.0;
        for (a, &(u1, u2, su)) in segs.iter().enumerate() {
            total += kernel.segment_double_integral((u1, u2), (u1, u2))?;
            for &(v1, v2, sv) in &segs[a + 1..] {
                let sign = f64::from(su * sv);
                total += 2.0 * sign * kernel.segment_double_integral((u1, u2), (v1, v2))?;
            }
        }
        Ok(total)
    }

    /// The path with `B` replaced by `-B`.
    pub fn mirrored(&self) -> JumpPath {
        JumpPath {
            initial_sign: -self.initial_sign,
            ..self.clone()
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("horizon T = {horizon} must be finite and > 0")))
    }
}

fn check_intensity(intensity: f64) -> Result<()> {
    if intensity.is_finite() && intensity > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("intensity {intensity} must be finite and > 0")))
    }
}

/// Exact draw of `X` on `[-T, T]` for a clock of the given intensity.
pub fn sample_path<R: Rng + ?Sized>(horizon: f64, intensity: f64, rng: &mut R) -> Result<JumpPath> {
    check_horizon(horizon)?;
    check_intensity(intensity)?;
    let poisson = Poisson::new(2.0 * horizon * intensity).map_err(|e| Error::domain(e.to_string()))?;
    Ok(draw_path(horizon, &poisson, rng))
}

fn draw_path<R: Rng + ?Sized>(horizon: f64, poisson: &Poisson<f64>, rng: &mut R) -> JumpPath {
    let count = poisson.sample(rng) as usize;
    let mut jump_times = Vec::with_capacity(count);
    while jump_times.len() < count {
        let t = rng.random_range(-horizon..horizon);
        if t > -horizon {
            jump_times.push(t);
        }
    }
    jump_times.sort_by(f64::total_cmp);
    // coincident points have probability zero; a coincident pair cancels
    let mut k = 1;
    while k < jump_times.len() {
        if jump_times[k] == jump_times[k - 1] {
            jump_times.drain(k - 1..=k);
            k = k.saturating_sub(1).max(1);
        } else {
            k += 1;
        }
    }
    let initial_sign = if rng.random::<bool>() { 1 } else { -1 };
    JumpPath {
        initial_sign,
        jump_times,
        horizon,
    }
}

/// `E[X(t_1) ... X(t_N)]` for sorted times under a unit-intensity clock:
/// `exp(-2 Σ_k (t_{2k} - t_{2k-1}))` for even `N`, zero for odd `N`.
pub fn moment_closed(times: &[f64]) -> Result<f64> {
    moment_closed_with_intensity(times, 1.0)
}

/// [`moment_closed`] for a clock of intensity `λ`: each gap decays at rate `2λ`.
pub fn moment_closed_with_intensity(times: &[f64], intensity: f64) -> Result<f64> {
    check_intensity(intensity)?;
    if times.windows(2).any(|p| p[0] > p[1]) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("moment times must be finite and sorted"));
    }
    if times.len() % 2 == 1 {
        return Ok(0.0);
    }
    let gaps: f64 = times.chunks(2).map(|p| p[1] - p[0]).sum();
    Ok((-2.0 * intensity * gaps).exp())
}

/// `(1/T) ∬_{[-T,T]^2} E[X(t) X(s)] ds dt` for `W ≡ 0`:
/// `2/λ - (1 - e^{-4 λ T}) / (2 λ² T)`.
pub fn free_susceptibility(horizon: f64, intensity: f64) -> f64 {
    let l = intensity;
    2.0 / l + (-4.0 * l * horizon).exp_m1() / (2.0 * l * l * horizon)
}

/// Susceptibility as the ratio `E[(1/T)(∫X)² e^I] / E[e^I]`, with both
/// sides of the ratio reported on the unshifted scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SusceptibilityEstimate {
    pub estimate: Estimate,
    pub numerator: Estimate,
    pub denominator: Estimate,
}

/// Finite-difference susceptibility and the matching first difference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdSusceptibility {
    pub estimate: Estimate,
    /// `(ln Z_h - ln Z_{-h}) / (2 h T)`, the magnetization at `μ = 0`.
    pub first_difference: Estimate,
    /// `ln Z_μ` at `μ = -h, 0, h`.
    pub log_partitions: [f64; 3],
    pub step: f64,
}

/// A kernel, horizon and clock intensity: everything that fixes the
/// reweighted path measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpModel {
    kernel: Kernel,
    horizon: f64,
    intensity: f64,
    square_integral: f64,
}

struct Draw {
    path: JumpPath,
    exponent: f64,
}

impl JumpModel {
    pub fn new(kernel: Kernel, horizon: f64) -> Result<Self> {
        kernel.validate()?;
        check_horizon(horizon)?;
        let square_integral = kernel.square_integral(horizon)?;
        Ok(JumpModel {
            kernel,
            horizon,
            intensity: 1.0,
            square_integral,
        })
    }

    pub fn with_intensity(mut self, intensity: f64) -> Result<Self> {
        check_intensity(intensity)?;
        self.intensity = intensity;
        Ok(self)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    /// `∬_{[-T,T]^2} W`, an upper bound for `|I(X)|` on every path.
    pub fn exponent_bound(&self) -> f64 {
        self.square_integral
    }

    fn poisson(&self) -> Poisson<f64> {
        Poisson::new(2.0 * self.horizon * self.intensity).expect("validated rate")
    }

    fn draw(&self, poisson: &Poisson<f64>, rng: &mut ChaCha8Rng) -> Result<Draw> {
        let path = draw_path(self.horizon, poisson, rng);
        let exponent = path.interaction_double_integral(&self.kernel)?;
        Ok(Draw { path, exponent })
    }

    fn check_samples(cfg: &McConfig, min: usize) -> Result<()> {
        if cfg.samples < min {
            return Err(Error::domain(format!("need at least {min} samples, got {}", cfg.samples)));
        }
        Ok(())
    }

    /// `Z(W, T) = E[exp I(X)]`.
    pub fn mc_partition(&self, cfg: &McConfig) -> Result<Estimate> {
        self.mc_partition_with_field(0.0, cfg)
    }

    /// `Z_μ(W, T) = E[exp(I(X) + μ ∫X)]`.
    pub fn mc_partition_with_field(&self, mu: f64, cfg: &McConfig) -> Result<Estimate> {
        Self::check_samples(cfg, 1)?;
        if !mu.is_finite() {
            return Err(Error::domain("field μ must be finite"));
        }
        let shift = self.square_integral + mu.abs() * 2.0 * self.horizon;
        let moments = try_ensemble::<1, _, _, _>(cfg, || self.poisson(), |p, rng| {
            let d = self.draw(p, rng)?;
            Ok([(d.exponent + mu * d.path.time_integral() - shift).exp()])
        })?;
        let scale = shift.exp();
        let mut est = Estimate::sampled(moments.mean()[0] * scale, moments.std_error(0) * scale, cfg);
        est.ess = Some(moments.effective_sample_size(0));
        Ok(est)
    }

    /// `χ(W, T) = E[(1/T)(∫X)² e^I] / Z(W, T)` as a paired ratio estimate.
    pub fn mc_susceptibility(&self, cfg: &McConfig) -> Result<SusceptibilityEstimate> {
        Self::check_samples(cfg, 2)?;
        let shift = self.square_integral;
        let t = self.horizon;
        let moments = try_ensemble::<2, _, _, _>(cfg, || self.poisson(), |p, rng| {
            let d = self.draw(p, rng)?;
            let m = d.path.time_integral();
            let w = (d.exponent - shift).exp();
            Ok([m * m / t * w, w])
        })?;
        let [num, den] = moments.mean();
        if !(den > 0.0) {
            return Err(Error::Numerical(format!("susceptibility denominator {den} is not positive")));
        }
        let (value, se) = plain_ratio(&moments);
        let scale = shift.exp();
        let mut estimate = Estimate::sampled(value, se, cfg);
        estimate.ess = Some(moments.effective_sample_size(1));
        Ok(SusceptibilityEstimate {
            estimate,
            numerator: Estimate::sampled(num * scale, moments.std_error(0) * scale, cfg),
            denominator: Estimate::sampled(den * scale, moments.std_error(1) * scale, cfg),
        })
    }

    /// Central second difference of `(1/T) ln Z_μ` at `μ = 0` with step `h`,
    /// all three `Z_μ` evaluated on one path ensemble.
    pub fn fd_susceptibility(&self, h: f64, cfg: &McConfig) -> Result<FdSusceptibility> {
        Self::check_samples(cfg, 2)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::domain(format!("finite-difference step h = {h} must be > 0")));
        }
        let t = self.horizon;
        let shift = self.square_integral + h * 2.0 * t;
        let moments = try_ensemble::<3, _, _, _>(cfg, || self.poisson(), |p, rng| {
            let d = self.draw(p, rng)?;
            let m = d.path.time_integral();
            Ok([-h, 0.0, h].map(|mu| (d.exponent + mu * m - shift).exp()))
        })?;
        let z = moments.mean();
        let logs = z.map(|v| v.ln() + shift);
        let second = logs[2] - 2.0 * logs[1] + logs[0];
        let value = second / (t * h * h);
        let se = moments.delta_std_error(&[1.0 / z[0], -2.0 / z[1], 1.0 / z[2]]) / (t * h * h);
        let mut estimate = Estimate::sampled(value, se, cfg);
        let floor = 64.0 * f64::EPSILON * (logs[0].abs() + 2.0 * logs[1].abs() + logs[2].abs()).max(1.0);
        if second.abs() <= floor {
            estimate.warnings.push(format!(
                "second difference {second:e} is below the rounding floor {floor:e}; raise h"
            ));
        }
        let first = (logs[2] - logs[0]) / (2.0 * h * t);
        let first_se = moments.delta_std_error(&[-1.0 / z[0], 0.0, 1.0 / z[2]]) / (2.0 * h * t);
        Ok(FdSusceptibility {
            estimate,
            first_difference: Estimate::sampled(first, first_se, cfg),
            log_partitions: logs,
            step: h,
        })
    }

    /// `E[X(t_1) ... X(t_N) e^I] / Z(W, T)` for sorted times in `[-T, T]`.
    ///
    /// [`RatioForm::ControlVariate`] subtracts the free-path moment, known in
    /// closed form, before reweighting.
    pub fn mc_moment(&self, times: &[f64], form: RatioForm, cfg: &McConfig) -> Result<Estimate> {
        Self::check_samples(cfg, 2)?;
        let free = moment_closed_with_intensity(times, self.intensity)?;
        if times.iter().any(|t| t.abs() > self.horizon) {
            return Err(Error::domain(format!("moment times must lie in [-{0}, {0}]", self.horizon)));
        }
        let shift = self.square_integral;
        let observe = |d: &Draw| -> (f64, f64) {
            let f: i32 = times.iter().map(|&t| i32::from(d.path.value_at(t))).product();
            (f64::from(f), (d.exponent - shift).exp())
        };
        let (value, se, ess) = match form {
            RatioForm::Plain => {
                let m = try_ensemble::<2, _, _, _>(cfg, || self.poisson(), |p, rng| {
                    let (f, w) = observe(&self.draw(p, rng)?);
                    Ok([f * w, w])
                })?;
                let (v, se) = plain_ratio(&m);
                (v, se, m.effective_sample_size(1))
            }
            RatioForm::ControlVariate => {
                let m = try_ensemble::<3, _, _, _>(cfg, || self.poisson(), |p, rng| {
                    let (f, w) = observe(&self.draw(p, rng)?);
                    Ok([f * w, f, w])
                })?;
                let (v, se) = control_variate_ratio(&m, free);
                (v, se, m.effective_sample_size(2))
            }
        };
        let mut est = Estimate::sampled(value, se, cfg);
        est.ess = Some(ess);
        Ok(est)
    }

    /// Sample mean of the jump count, for intensity diagnostics.
    pub fn mc_jump_count(&self, cfg: &McConfig) -> Result<Estimate> {
        Self::check_samples(cfg, 1)?;
        let m: Moments<1> = try_ensemble(cfg, || self.poisson(), |p, rng| {
            Ok([draw_path(self.horizon, p, rng).jump_times.len() as f64])
        })?;
        Ok(Estimate::sampled(m.mean()[0], m.std_error(0), cfg))
    }
}
