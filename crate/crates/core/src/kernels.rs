//! Interaction functions `W`: even, continuous, nonnegative and integrable.
//!
//! Every family is nonincreasing in `|t|`. Exponential-type families
//! (`Exponential`, `SpinBosonDiscrete`) have closed-form norms and
//! rectangle integrals; the others fall back to adaptive quadrature.
//!
//! Serialized form is an internally tagged table, e.g.
//! `{"family": "exponential", "a": 0.01, "b": 1.0}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, integrate_to_infinity, integrate_with_breaks, Tolerance};
use crate::{Error, Result};

/// One spectral mass of the spin-boson kernel: contributes
/// `weight · e^{-rate |t|}` before the `λ²/8` prefactor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralMode {
    pub weight: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    /// `W ≡ 0`.
    Zero,
    /// `a e^{-b|t|}`.
    Exponential { a: f64, b: f64 },
    /// `c (1 + |t| / cutoff)^{-α}` with `α > 2`.
    PowerLawTail {
        c: f64,
        alpha: f64,
        #[serde(default = "unit_cutoff")]
        cutoff: f64,
    },
    /// Raised cosine `height (1 + cos(π t / w)) / 2` on `|t| < w`.
    CompactBump { height: f64, half_width: f64 },
    /// `(λ²/8) Σ_m weight_m e^{-rate_m |t|}`, a discretized spectral measure.
    SpinBosonDiscrete { lambda: f64, modes: Vec<SpectralMode> },
}

fn unit_cutoff() -> f64 {
    1.0
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("kernel parameter {name} = {v} must be finite and > 0")))
    }
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-13,
        max_intervals: 4_000,
    }
}

/// `e^{-y} + y - 1`, accurate for small `y >= 0`.
fn exp_double_antiderivative(y: f64) -> f64 {
    if y < 1e-3 {
        let y2 = y * y;
        y2 * (0.5 - y / 6.0 + y2 / 24.0 - y2 * y / 120.0)
    } else {
        (-y).exp_m1() + y
    }
}

impl Kernel {
    pub fn exponential(a: f64, b: f64) -> Result<Self> {
        let k = Kernel::Exponential { a, b };
        k.validate()?;
        Ok(k)
    }

    /// Exponential kernel with decay rate `b` scaled to `||W||_1 = norm`.
    pub fn exponential_with_norm(norm: f64, b: f64) -> Result<Self> {
        if norm == 0.0 {
            return Ok(Kernel::Zero);
        }
        Kernel::exponential(0.5 * norm * b, b)
    }

    pub fn power_law_tail(c: f64, alpha: f64, cutoff: f64) -> Result<Self> {
        let k = Kernel::PowerLawTail { c, alpha, cutoff };
        k.validate()?;
        Ok(k)
    }

    pub fn compact_bump(height: f64, half_width: f64) -> Result<Self> {
        let k = Kernel::CompactBump { height, half_width };
        k.validate()?;
        Ok(k)
    }

    pub fn spin_boson(lambda: f64, modes: Vec<SpectralMode>) -> Result<Self> {
        let k = Kernel::SpinBosonDiscrete { lambda, modes };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Zero => Ok(()),
            Kernel::Exponential { a, b } => {
                positive("a", *a)?;
                positive("b", *b)
            }
            Kernel::PowerLawTail { c, alpha, cutoff } => {
                positive("c", *c)?;
                positive("cutoff", *cutoff)?;
                if alpha.is_finite() && *alpha > 2.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("power-law exponent α = {alpha} must exceed 2")))
                }
            }
            Kernel::CompactBump { height, half_width } => {
                positive("height", *height)?;
                positive("half_width", *half_width)
            }
            Kernel::SpinBosonDiscrete { lambda, modes } => {
                if !lambda.is_finite() {
                    return Err(Error::domain("spin-boson coupling λ must be finite"));
                }
                for m in modes {
                    if !(m.weight.is_finite() && m.weight >= 0.0) {
                        return Err(Error::domain(format!("spectral weight {} must be >= 0", m.weight)));
                    }
                    positive("rate", m.rate)?;
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Kernel::Zero => true,
            Kernel::SpinBosonDiscrete { lambda, modes } => *lambda == 0.0 || modes.iter().all(|m| m.weight == 0.0),
            _ => false,
        }
    }

    /// Exponential components `(amplitude, rate)` for the closed-form families.
    fn exponential_terms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Kernel::Zero => Some(Vec::new()),
            Kernel::Exponential { a, b } => Some(vec![(*a, *b)]),
            Kernel::SpinBosonDiscrete { lambda, modes } => {
                let pre = lambda * lambda / 8.0;
                Some(modes.iter().map(|m| (pre * m.weight, m.rate)).collect())
            }
            _ => None,
        }
    }

    pub fn has_closed_form(&self) -> bool {
        self.exponential_terms().is_some()
    }

    /// `W(t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let x = t.abs();
        match self {
            Kernel::Zero => 0.0,
            Kernel::Exponential { a, b } => a * (-b * x).exp(),
            Kernel::PowerLawTail { c, alpha, cutoff } => c * (1.0 + x / cutoff).powf(-alpha),
            Kernel::CompactBump { height, half_width } => {
                if x < *half_width {
                    0.5 * height * (1.0 + (PI * x / half_width).cos())
                } else {
                    0.0
                }
            }
            Kernel::SpinBosonDiscrete { lambda, modes } => {
                lambda * lambda / 8.0 * modes.iter().map(|m| m.weight * (-m.rate * x).exp()).sum::<f64>()
            }
        }
    }

    /// `sup |W| = W(0)`.
    pub fn sup_norm(&self) -> f64 {
        self.evaluate(0.0)
    }

    /// `||W||_1`: closed form for exponential-type kernels, adaptive
    /// quadrature otherwise.
    pub fn l1_norm(&self) -> Result<f64> {
        match self.exponential_terms() {
            Some(terms) => Ok(terms.iter().map(|(a, b)| 2.0 * a / b).sum()),
            None => self.l1_norm_quadrature(),
        }
    }

    /// `||W||_1 = 2 ∫_0^∞ W` by quadrature, for every family.
    pub fn l1_norm_quadrature(&self) -> Result<f64> {
        let half = match self {
            Kernel::Zero => return Ok(0.0),
            Kernel::CompactBump { half_width, .. } => integrate(|t| self.evaluate(t), 0.0, *half_width, quad_tol())?,
            _ => integrate_to_infinity(|t| self.evaluate(t), 0.0, quad_tol())?,
        };
        Ok(2.0 * half.value)
    }

    /// A function `G` with `G'' = W` and `G(0) = G'(0) = 0`, for the
    /// closed-form families.
    pub fn double_antiderivative(&self, x: f64) -> Option<f64> {
        let terms = self.exponential_terms()?;
        let y = x.abs();
        Some(terms.iter().map(|(a, b)| a / (b * b) * exp_double_antiderivative(b * y)).sum())
    }

    /// `∫_{u1}^{u2} ∫_{v1}^{v2} W(t - s) ds dt`.
    pub fn segment_double_integral(&self, u: (f64, f64), v: (f64, f64)) -> Result<f64> {
        let ((u1, u2), (v1, v2)) = (u, v);
        if !(u1 <= u2 && v1 <= v2) {
            return Err(Error::domain(format!("intervals [{u1}, {u2}] and [{v1}, {v2}] must be ordered")));
        }
        if u1 == u2 || v1 == v2 || self.is_zero() {
            return Ok(0.0);
        }
        if self.has_closed_form() {
            let g = |x: f64| self.double_antiderivative(x).expect("closed form");
            return Ok(g(u2 - v1) - g(u1 - v1) - g(u2 - v2) + g(u1 - v2));
        }
        // Reduce to one dimension: the set {t - s = x} inside the rectangle
        // has length min(u2, v2 + x) - max(u1, v1 + x).
        let overlap = |x: f64| (u2.min(v2 + x) - u1.max(v1 + x)).max(0.0);
        let mut breaks = vec![u1 - v1, u2 - v2, 0.0];
        if let Kernel::CompactBump { half_width, .. } = self {
            breaks.extend([-half_width, *half_width]);
        }
        let q = integrate_with_breaks(|x| self.evaluate(x) * overlap(x), u1 - v2, u2 - v1, &breaks, quad_tol())?;
        Ok(q.value)
    }

    /// `∬_{[-T, T]^2} W(t - s) ds dt`, which bounds `|∬ W(t - s) X(t) X(s)|`.
    pub fn square_integral(&self, horizon: f64) -> Result<f64> {
        self.segment_double_integral((-horizon, horizon), (-horizon, horizon))
    }
}
