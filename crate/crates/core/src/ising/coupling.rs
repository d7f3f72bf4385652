use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Lattice;
use crate::{Error, Result};

fn check_strength(value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::domain(format!(
            "coupling strength {value} is not a finite nonnegative number"
        )));
    }
    Ok(())
}

/// A ferromagnetic interaction `J : P(Λ_L) -> [0, ∞)` with finite support.
///
/// Subsets are stored sorted and deduplicated; zero strengths are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMap {
    lattice: Lattice,
    couplings: BTreeMap<Vec<i64>, f64>,
}

impl InteractionMap {
    pub fn new(lattice: Lattice) -> Self {
        InteractionMap {
            lattice,
            couplings: BTreeMap::new(),
        }
    }

    /// Nearest-neighbour coupling `j` on every bond `{i, i + 1}`.
    pub fn nearest_neighbor(j: f64, lattice: Lattice) -> Result<Self> {
        pair_interaction(&PairCoupling::nearest(j)?, lattice)
    }

    /// Adds `strength` to `J(subset)`.
    pub fn insert(&mut self, subset: &[i64], strength: f64) -> Result<()> {
        check_strength(strength)?;
        let key = normalize(subset);
        for &s in &key {
            self.lattice.checked_index(s)?;
        }
        if strength > 0.0 {
            *self.couplings.entry(key).or_insert(0.0) += strength;
        }
        Ok(())
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn strength_of(&self, subset: &[i64]) -> f64 {
        self.couplings.get(&normalize(subset)).copied().unwrap_or(0.0)
    }

    /// The truncated interaction with `J(subset)` set to zero.
    pub fn without(&self, subset: &[i64]) -> Self {
        let mut out = self.clone();
        out.couplings.remove(&normalize(subset));
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        self.couplings.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    /// Whether some coupled subset contains `site`.
    pub fn touches(&self, site: i64) -> bool {
        self.couplings.keys().any(|a| a.binary_search(&site).is_ok())
    }

    pub fn total_strength(&self) -> f64 {
        self.couplings.values().sum()
    }

    /// Pair couplings `w_k` if every coupled subset is a pair and the
    /// strengths depend only on the distance.
    pub(crate) fn as_pair_coupling(&self) -> Option<PairCoupling> {
        let mut by_distance: BTreeMap<usize, f64> = BTreeMap::new();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for (a, v) in self.iter() {
            if a.len() != 2 {
                return None;
            }
            let k = (a[1] - a[0]) as usize;
            match by_distance.get(&k) {
                Some(&w) if w != v => return None,
                _ => {
                    by_distance.insert(k, v);
                    *counts.entry(k).or_insert(0) += 1;
                }
            }
        }
        let n = self.lattice.len();
        if counts.iter().any(|(&k, &c)| c != n - k) {
            return None;
        }
        let range = by_distance.keys().next_back().copied().unwrap_or(0);
        let mut w = vec![0.0; range];
        for (k, v) in by_distance {
            w[k - 1] = v;
        }
        PairCoupling::new(w).ok()
    }
}

fn normalize(subset: &[i64]) -> Vec<i64> {
    let mut key = subset.to_vec();
    key.sort_unstable();
    key.dedup();
    key
}

/// Distance-dependent pair strengths `w_1, w_2, ...`; `w_k = 0` beyond the
/// stored range.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PairCoupling {
    strengths: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PairCoupling {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PairCoupling::new(v)
    }
}

impl From<PairCoupling> for Vec<f64> {
    fn from(w: PairCoupling) -> Self {
        w.strengths
    }
}

impl PairCoupling {
    /// `strengths[k - 1] = w_k`. Trailing zeros are dropped.
    pub fn new(mut strengths: Vec<f64>) -> Result<Self> {
        for &w in &strengths {
            check_strength(w)?;
        }
        while strengths.last() == Some(&0.0) {
            strengths.pop();
        }
        Ok(PairCoupling { strengths })
    }

    pub fn zero() -> Self {
        PairCoupling::default()
    }

    pub fn nearest(j: f64) -> Result<Self> {
        PairCoupling::new(vec![j])
    }

    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.strengths.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// `τ_k = tanh(w_k)`.
    pub fn tau(&self, k: usize) -> f64 {
        self.get(k).tanh()
    }

    /// Largest `k` with `w_k > 0` (0 for the zero coupling).
    pub fn range(&self) -> usize {
        self.strengths.len()
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn is_zero(&self) -> bool {
        self.strengths.is_empty()
    }

    pub fn truncated(&self, max_range: usize) -> Self {
        let mut s = self.strengths.clone();
        s.truncate(max_range);
        PairCoupling::new(s).expect("already validated")
    }

    /// `Σ_{l ≥ 2} tanh(w_l)`.
    pub fn long_range_tanh_sum(&self) -> f64 {
        (2..=self.range()).map(|k| self.tau(k)).sum()
    }
}

/// The pair interaction `J_w` restricted to `Λ_L`: `w_{|i - j|}` on every
/// pair `{i, j}`, zero elsewhere.
pub fn pair_interaction(w: &PairCoupling, lattice: Lattice) -> Result<InteractionMap> {
    let mut map = InteractionMap::new(lattice);
    let sites: Vec<i64> = lattice.sites().collect();
    for (a, &i) in sites.iter().enumerate() {
        for &j in &sites[a + 1..] {
            let k = (j - i) as usize;
            if k > w.range() {
                break;
            }
            map.insert(&[i, j], w.get(k))?;
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_has_no_bonds() {
        let map = pair_interaction(&PairCoupling::zero(), Lattice::new(3)).unwrap();
        assert!(map.is_empty());
    }

    #[test]
    fn nearest_neighbor_bonds_on_l1() {
        let map = pair_interaction(&PairCoupling::nearest(1.0).unwrap(), Lattice::new(1)).unwrap();
        let bonds: Vec<_> = map.iter().map(|(a, v)| (a.to_vec(), v)).collect();
        assert_eq!(bonds, vec![(vec![-1, 0], 1.0), (vec![0, 1], 1.0)]);
    }

    #[test]
    fn two_range_pair_interaction_on_l1() {
        let w = PairCoupling::new(vec![1.0, 0.5]).unwrap();
        let map = pair_interaction(&w, Lattice::new(1)).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.strength_of(&[-1, 0]), 1.0);
        assert_eq!(map.strength_of(&[1, 0]), 1.0);
        assert_eq!(map.strength_of(&[-1, 1]), 0.5);
        assert_eq!(map.as_pair_coupling(), Some(w));
    }

    #[test]
    fn negative_strengths_are_rejected() {
        assert!(PairCoupling::new(vec![1.0, -0.1]).is_err());
        let mut map = InteractionMap::new(Lattice::new(1));
        assert!(map.insert(&[0], -1.0).is_err());
        assert!(map.insert(&[0], f64::NAN).is_err());
        assert!(map.insert(&[2], 1.0).is_err());
    }

    #[test]
    fn truncation_removes_one_set() {
        let mut map = InteractionMap::new(Lattice::new(2));
        map.insert(&[0, 1], 0.5).unwrap();
        map.insert(&[1, 0, 2], 0.25).unwrap();
        let cut = map.without(&[2, 1, 0]);
        assert_eq!(cut.len(), 1);
        assert_eq!(cut.strength_of(&[0, 1, 2]), 0.0);
        assert!(map.touches(2));
        assert!(!cut.touches(2));
    }

    #[test]
    fn trailing_zeros_do_not_extend_range() {
        let w = PairCoupling::new(vec![0.0, 0.3, 0.0, 0.0]).unwrap();
        assert_eq!(w.range(), 2);
        assert_eq!(w.get(7), 0.0);
        assert!((w.long_range_tanh_sum() - 0.3f64.tanh()).abs() < 1e-16);
    }
}
