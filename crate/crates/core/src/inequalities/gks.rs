use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{interaction_json, InequalityReport, DEFAULT_TOLERANCE};
use crate::ising::{GibbsTable, InteractionMap};
use crate::{Error, Result};

/// The five comparison inequalities for ferromagnetic interactions.
/// `<.>_{;B}` is the expectation with `J(B)` set to zero and `AB` the
/// symmetric difference of `A` and `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GksVariant {
    /// `<σ_A> >= 0`.
    First,
    /// `<σ_AB> >= <σ_A><σ_B>`.
    Second,
    /// `<σ_A> <= <σ_A>_{;B} + tanh J(B) <σ_AB>_{;B}`.
    Third,
    /// `<σ_A>_{;B} <= <σ_A>`.
    Truncation,
    /// `<σ_A> <= tanh J(B) <σ_AB> + (1 - tanh² J(B)) <σ_A>_{;B}`.
    Thompson,
}

impl GksVariant {
    pub const ALL: [GksVariant; 5] = [
        GksVariant::First,
        GksVariant::Second,
        GksVariant::Third,
        GksVariant::Truncation,
        GksVariant::Thompson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GksVariant::First => "gks_i",
            GksVariant::Second => "gks_ii",
            GksVariant::Third => "gks_iii",
            GksVariant::Truncation => "gks_iv",
            GksVariant::Thompson => "gks_v",
        }
    }

    fn needs_cut(self) -> bool {
        matches!(self, GksVariant::Third | GksVariant::Truncation | GksVariant::Thompson)
    }
}

/// Exact tables for one `(J, A, B)` instance.
pub(crate) struct GksInstance {
    instance: serde_json::Value,
    full: GibbsTable,
    cut: Option<GibbsTable>,
    a: Vec<i64>,
    b: Vec<i64>,
    tanh_b: f64,
}

fn as_set(sites: &[i64]) -> Vec<i64> {
    let mut s = sites.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

impl GksInstance {
    pub(crate) fn new(j: &InteractionMap, a: &[i64], b: &[i64], with_cut: bool) -> Result<Self> {
        let lattice = j.lattice();
        for &s in a.iter().chain(b) {
            if !lattice.contains(s) {
                return Err(Error::domain(format!("site {s} is outside {lattice}")));
            }
        }
        let b = as_set(b);
        let cut = if with_cut {
            Some(GibbsTable::new(&j.without(&b))?)
        } else {
            None
        };
        Ok(GksInstance {
            instance: json!({ "L": lattice.half_width(), "J": interaction_json(j), "A": a, "B": b }),
            full: GibbsTable::new(j)?,
            cut,
            a: a.to_vec(),
            tanh_b: j.strength_of(&b).tanh(),
            b,
        })
    }

    pub(crate) fn report(&self, variant: GksVariant, tolerance: f64) -> Result<InequalityReport> {
        let ab: Vec<i64> = self.a.iter().chain(&self.b).copied().collect();
        let full = &self.full;
        let cut = || {
            self.cut
                .as_ref()
                .ok_or_else(|| Error::domain("truncated table was not built"))
        };
        let (lhs, rhs) = match variant {
            GksVariant::First => (0.0, full.expectation(&self.a)?),
            GksVariant::Second => (full.expectation(&self.a)? * full.expectation(&self.b)?, full.expectation(&ab)?),
            GksVariant::Third => {
                let c = cut()?;
                (full.expectation(&self.a)?, c.expectation(&self.a)? + self.tanh_b * c.expectation(&ab)?)
            }
            GksVariant::Truncation => (cut()?.expectation(&self.a)?, full.expectation(&self.a)?),
            GksVariant::Thompson => {
                let t = self.tanh_b;
                let rhs = t * full.expectation(&ab)? + (1.0 - t * t) * cut()?.expectation(&self.a)?;
                (full.expectation(&self.a)?, rhs)
            }
        };
        Ok(InequalityReport::judged(variant.name(), self.instance.clone(), lhs, rhs, tolerance))
    }
}

/// One of the inequalities of [`GksVariant`] on `(J, A, B)`, by enumeration.
pub fn check_gks(j: &InteractionMap, a: &[i64], b: &[i64], variant: GksVariant) -> Result<InequalityReport> {
    GksInstance::new(j, a, b, variant.needs_cut())?.report(variant, DEFAULT_TOLERANCE)
}

/// `<σ_B> = 0` when no coupling of `J` touches the site `i ∈ B`.
pub fn check_uncoupled_zero(j: &InteractionMap, i: i64, b: &[i64]) -> Result<InequalityReport> {
    if j.touches(i) {
        return Err(Error::domain(format!("site {i} is coupled, the precondition cannot hold")));
    }
    if !b.contains(&i) {
        return Err(Error::domain(format!("site {i} is not in B")));
    }
    let value = GibbsTable::new(j)?.expectation(b)?;
    let instance = json!({ "L": j.lattice().half_width(), "J": interaction_json(j), "i": i, "B": b });
    Ok(InequalityReport::judged("uncoupled_zero", instance, value.abs(), 0.0, DEFAULT_TOLERANCE))
}
