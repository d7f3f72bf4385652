use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The symmetric lattice `{-L, ..., L}`. Site `s` has storage index `s + L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    half_width: usize,
}

impl Lattice {
    pub fn new(half_width: usize) -> Self {
        Lattice { half_width }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> RangeInclusive<i64> {
        let l = self.half_width as i64;
        -l..=l
    }

    pub fn contains(&self, site: i64) -> bool {
        site.unsigned_abs() <= self.half_width as u64
    }

    pub fn index(&self, site: i64) -> Option<usize> {
        self.contains(site).then(|| (site + self.half_width as i64) as usize)
    }

    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    pub(crate) fn checked_index(&self, site: i64) -> Result<usize> {
        self.index(site)
            .ok_or_else(|| Error::domain(format!("site {site} is outside the lattice {self}")))
    }

    /// Bit mask of the spin product over `sites`, counted with multiplicity
    /// (a site listed twice cancels). Only for lattices of at most 64 sites.
    pub(crate) fn product_mask(&self, sites: &[i64]) -> Result<u64> {
        debug_assert!(self.len() <= 64);
        let mut mask = 0u64;
        for &s in sites {
            mask ^= 1u64 << self.checked_index(s)?;
        }
        Ok(mask)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ_{}", self.half_width)
    }
}

/// A ±1 spin on every site of a lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinConfiguration {
    lattice: Lattice,
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(lattice: Lattice, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != lattice.len() {
            return Err(Error::domain(format!(
                "{} spins given for {lattice} with {} sites",
                spins.len(),
                lattice.len()
            )));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::domain(format!("spin value {bad} is not ±1")));
        }
        Ok(SpinConfiguration { lattice, spins })
    }

    pub fn all_up(lattice: Lattice) -> Self {
        SpinConfiguration {
            lattice,
            spins: vec![1; lattice.len()],
        }
    }

    /// Bit `k` set means storage index `k` carries spin `+1`.
    pub fn from_bits(lattice: Lattice, bits: u64) -> Self {
        let spins = (0..lattice.len())
            .map(|k| if bits >> k & 1 == 1 { 1 } else { -1 })
            .collect();
        SpinConfiguration { lattice, spins }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, site: i64) -> Option<i8> {
        self.lattice.index(site).map(|k| self.spins[k])
    }

    /// `σ_A` for the listed sites; the empty product is 1.
    pub fn product(&self, sites: &[i64]) -> Result<i8> {
        sites.iter().try_fold(1i8, |acc, &s| {
            self.spin(s)
                .map(|v| acc * v)
                .ok_or_else(|| Error::domain(format!("site {s} is outside {}", self.lattice)))
        })
    }

    /// Number of nearest-neighbour bonds with opposite spins.
    pub fn sign_changes(&self) -> usize {
        self.spins.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let lat = Lattice::new(3);
        assert_eq!(lat.len(), 7);
        for s in lat.sites() {
            assert_eq!(lat.site(lat.index(s).unwrap()), s);
        }
        assert_eq!(lat.index(4), None);
        assert_eq!(lat.index(-4), None);
        assert_eq!(lat.index(i64::MIN), None);
    }

    #[test]
    fn single_site_lattice() {
        let lat = Lattice::new(0);
        assert_eq!(lat.len(), 1);
        assert_eq!(lat.sites().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn products_and_sign_changes() {
        let c = SpinConfiguration::new(Lattice::new(1), vec![1, -1, 1]).unwrap();
        assert_eq!(c.product(&[]).unwrap(), 1);
        assert_eq!(c.product(&[-1, 0]).unwrap(), -1);
        assert_eq!(c.product(&[0, 0]).unwrap(), 1);
        assert_eq!(c.sign_changes(), 2);
        assert!(c.product(&[2]).is_err());
    }

    #[test]
    fn rejects_non_spin_values() {
        assert!(SpinConfiguration::new(Lattice::new(1), vec![1, 0, 1]).is_err());
        assert!(SpinConfiguration::new(Lattice::new(1), vec![1, 1]).is_err());
    }

    #[test]
    fn product_mask_cancels_repeats() {
        let lat = Lattice::new(2);
        assert_eq!(lat.product_mask(&[1, 1]).unwrap(), 0);
        assert_eq!(lat.product_mask(&[-2, 2]).unwrap(), 0b10001);
    }
}
