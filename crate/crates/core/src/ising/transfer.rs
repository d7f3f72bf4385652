//! Transfer-matrix engine for finite-range pair couplings on `Λ_L`.
//!
//! The state after adding storage index `s` is the window of the last `R`
//! spins, bit `k` holding index `s - k` (bit set means spin `+1`). Windows
//! that reach past the left boundary carry zero bits that never couple.
//! Forward and backward vectors are normalized at every step and the scale
//! factors are shared with the propagated correlation vectors, so two-point
//! values are ratios of like-scaled quantities.

use super::{Lattice, PairCoupling, TwoPoint};
use crate::{Error, Result};

/// Default cap on the coupling range (state count `2^R`).
pub const DEFAULT_MAX_RANGE: usize = 12;

#[derive(Clone, Debug)]
pub struct TransferChain {
    lattice: Lattice,
    range: usize,
    couplings: Vec<f64>,
    steady: Vec<f64>,
    forward: Vec<f64>,
    backward: Vec<f64>,
    forward_norm: Vec<f64>,
    backward_norm: Vec<f64>,
    overlap: Vec<f64>,
    log_partition: f64,
}

#[inline]
fn spin_of(bit: usize) -> f64 {
    if bit & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl TransferChain {
    pub fn new(w: &PairCoupling, lattice: Lattice) -> Result<Self> {
        Self::with_max_range(w, lattice, DEFAULT_MAX_RANGE)
    }

    pub fn with_max_range(w: &PairCoupling, lattice: Lattice, max_range: usize) -> Result<Self> {
        let n = lattice.len();
        let range = w.range().min(n - 1).max(1);
        if range > max_range.min(24) {
            return Err(Error::Capacity {
                what: "transfer matrix (coupling range)",
                needed: range,
                cap: max_range.min(24),
            });
        }
        let couplings: Vec<f64> = (1..=range).map(|k| w.get(k)).collect();
        let states = 1usize << range;
        let mut chain = TransferChain {
            lattice,
            range,
            couplings,
            steady: Vec::new(),
            forward: vec![0.0; n * states],
            backward: vec![0.0; n * states],
            forward_norm: vec![1.0; n],
            backward_norm: vec![1.0; n],
            overlap: vec![0.0; n],
            log_partition: 0.0,
        };
        chain.steady = (0..2 * states).map(|idx| chain.raw_weight(range, idx >> 1, idx & 1)).collect();
        chain.sweep();
        Ok(chain)
    }

    fn states(&self) -> usize {
        1 << self.range
    }

    /// Boltzmann factor, divided by `exp(Σ_{k<=kmax} w_k)`, of attaching
    /// spin bit `b` to the window `old` when adding storage index `s`.
    fn raw_weight(&self, s: usize, old: usize, b: usize) -> f64 {
        let kmax = self.range.min(s);
        let sb = spin_of(b);
        let mut e = 0.0;
        for k in 1..=kmax {
            let w = self.couplings[k - 1];
            e += w * (sb * spin_of(old >> (k - 1)) - 1.0);
        }
        e.exp()
    }

    #[inline]
    fn weight(&self, s: usize, old: usize, b: usize) -> f64 {
        if s >= self.range {
            self.steady[old << 1 | b]
        } else {
            self.raw_weight(s, old, b)
        }
    }

    fn shift(&self, s: usize) -> f64 {
        self.couplings[..self.range.min(s)].iter().sum()
    }

    /// `to = from · T_s` (unnormalized).
    fn step_forward(&self, s: usize, from: &[f64], to: &mut [f64]) {
        let mask = self.states() - 1;
        to.iter_mut().for_each(|v| *v = 0.0);
        for (old, &a) in from.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for b in 0..2 {
                to[(old << 1 | b) & mask] += a * self.weight(s, old, b);
            }
        }
    }

    /// `to = T_s · next` (unnormalized).
    fn step_backward(&self, s: usize, next: &[f64], to: &mut [f64]) {
        let mask = self.states() - 1;
        for (old, slot) in to.iter_mut().enumerate() {
            *slot = (0..2)
                .map(|b| self.weight(s, old, b) * next[(old << 1 | b) & mask])
                .sum();
        }
    }

    fn sweep(&mut self) {
        let n = self.lattice.len();
        let st = self.states();
        self.forward[0] = 0.5;
        self.forward[1] = 0.5;
        let mut log_z = std::f64::consts::LN_2;
        let mut buf = vec![0.0; st];
        for s in 1..n {
            self.step_forward(s, &self.forward[(s - 1) * st..s * st], &mut buf);
            let c: f64 = buf.iter().sum();
            self.forward_norm[s] = c;
            log_z += c.ln() + self.shift(s);
            for (dst, v) in self.forward[s * st..(s + 1) * st].iter_mut().zip(&buf) {
                *dst = v / c;
            }
        }
        self.log_partition = log_z;

        let last = (n - 1) * st;
        self.backward[last..last + st].iter_mut().for_each(|v| *v = 1.0 / st as f64);
        for s in (0..n - 1).rev() {
            self.step_backward(s + 1, &self.backward[(s + 1) * st..(s + 2) * st], &mut buf);
            let d: f64 = buf.iter().sum();
            self.backward_norm[s] = d;
            for (dst, v) in self.backward[s * st..(s + 1) * st].iter_mut().zip(&buf) {
                *dst = v / d;
            }
        }
        for s in 0..n {
            self.overlap[s] = self.alpha(s).iter().zip(self.beta(s)).map(|(a, b)| a * b).sum();
        }
    }

    fn alpha(&self, s: usize) -> &[f64] {
        let st = self.states();
        &self.forward[s * st..(s + 1) * st]
    }

    fn beta(&self, s: usize) -> &[f64] {
        let st = self.states();
        &self.backward[s * st..(s + 1) * st]
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// `<σ_i σ_j>` for every site `i` of the lattice (storage order).
    pub fn row(&self, j: i64) -> Result<Vec<f64>> {
        let n = self.lattice.len();
        let st = self.states();
        let jj = self.lattice.checked_index(j)?;
        let mut out = vec![0.0; n];
        out[jj] = 1.0;

        let mut v: Vec<f64> = self.alpha(jj).iter().enumerate().map(|(x, a)| a * spin_of(x)).collect();
        let mut buf = vec![0.0; st];
        for s in jj + 1..n {
            self.step_forward(s, &v, &mut buf);
            let c = self.forward_norm[s];
            v.iter_mut().zip(&buf).for_each(|(dst, x)| *dst = x / c);
            let num: f64 = v.iter().zip(self.beta(s)).enumerate().map(|(x, (a, b))| a * b * spin_of(x)).sum();
            out[s] = num / self.overlap[s];
        }

        let mut u: Vec<f64> = self.beta(jj).iter().enumerate().map(|(x, b)| b * spin_of(x)).collect();
        for s in (0..jj).rev() {
            self.step_backward(s + 1, &u, &mut buf);
            let d = self.backward_norm[s];
            u.iter_mut().zip(&buf).for_each(|(dst, x)| *dst = x / d);
            let num: f64 = u.iter().zip(self.alpha(s)).enumerate().map(|(x, (b, a))| a * b * spin_of(x)).sum();
            out[s] = num / self.overlap[s];
        }
        Ok(out)
    }

    fn pair(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 1.0;
        }
        let (a, b) = (a.min(b), a.max(b));
        let st = self.states();
        let mut v: Vec<f64> = self.alpha(a).iter().enumerate().map(|(x, p)| p * spin_of(x)).collect();
        let mut buf = vec![0.0; st];
        for s in a + 1..=b {
            self.step_forward(s, &v, &mut buf);
            let c = self.forward_norm[s];
            v.iter_mut().zip(&buf).for_each(|(dst, x)| *dst = x / c);
        }
        let num: f64 = v.iter().zip(self.beta(b)).enumerate().map(|(x, (p, q))| p * q * spin_of(x)).sum();
        num / self.overlap[b]
    }
}

impl TwoPoint for TransferChain {
    fn lattice(&self) -> Lattice {
        self.lattice
    }

    fn two_point(&self, i: i64, j: i64) -> f64 {
        match (self.lattice.index(i), self.lattice.index(j)) {
            (Some(a), Some(b)) => self.pair(a, b),
            _ => 0.0,
        }
    }
}

/// `<σ_i σ_j>` under `J_w` on `Λ_L`; both sites must lie in the lattice.
pub fn transfer_matrix_correlation(w: &PairCoupling, lattice: Lattice, i: i64, j: i64) -> Result<f64> {
    lattice.checked_index(i)?;
    lattice.checked_index(j)?;
    Ok(TransferChain::new(w, lattice)?.two_point(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::ising::{nn_correlation_closed, pair_interaction, GibbsTable};
    use rand::Rng;

    #[test]
    fn nearest_neighbor_matches_closed_form() {
        let lat = Lattice::new(6);
        for j in [0.0, 0.4, 2.0] {
            let w = PairCoupling::nearest(j).unwrap();
            let chain = TransferChain::new(&w, lat).unwrap();
            for a in -6..=6 {
                for b in a..=6 {
                    let closed = nn_correlation_closed(j, &[a, b]).unwrap();
                    assert!((chain.two_point(a, b) - closed).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_coupling_is_identity() {
        let chain = TransferChain::new(&PairCoupling::zero(), Lattice::new(3)).unwrap();
        assert_eq!(chain.two_point(1, 1), 1.0);
        assert!(chain.two_point(-1, 2).abs() < 1e-15);
        assert!((chain.log_partition() - 7.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn random_couplings_match_enumeration() {
        let mut rng = stream_rng(77, 0);
        for _ in 0..20 {
            let range = rng.random_range(1..=3);
            let w: Vec<f64> = (0..range).map(|_| rng.random_range(0.0..1.5)).collect();
            let w = PairCoupling::new(w).unwrap();
            let lat = Lattice::new(4);
            let chain = TransferChain::new(&w, lat).unwrap();
            let table = GibbsTable::new(&pair_interaction(&w, lat).unwrap()).unwrap();
            assert!((chain.log_partition() - table.log_partition()).abs() < 1e-10);
            for a in -4..=4 {
                let row = chain.row(a).unwrap();
                for b in -4..=4 {
                    let exact = table.two_point(a, b);
                    assert!((chain.two_point(a, b) - exact).abs() < 1e-10);
                    assert!((row[lat.index(b).unwrap()] - exact).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn out_of_lattice_is_zero() {
        let chain = TransferChain::new(&PairCoupling::nearest(1.0).unwrap(), Lattice::new(2)).unwrap();
        assert_eq!(chain.two_point(0, 3), 0.0);
        assert!(transfer_matrix_correlation(&PairCoupling::zero(), Lattice::new(2), 0, 3).is_err());
    }

    #[test]
    fn range_cap_is_enforced() {
        let w = PairCoupling::new(vec![0.1; 13]).unwrap();
        let err = TransferChain::new(&w, Lattice::new(10)).unwrap_err();
        assert!(matches!(err, Error::Capacity { needed: 13, cap: 12, .. }));
        // couplings longer than the lattice are irrelevant and cut away
        assert_eq!(TransferChain::new(&w, Lattice::new(2)).unwrap().range(), 4);
    }

    #[test]
    fn long_chain_stays_finite() {
        let w = PairCoupling::new(vec![2.0, 0.001, 0.001]).unwrap();
        let chain = TransferChain::new(&w, Lattice::new(2000)).unwrap();
        let row = chain.row(0).unwrap();
        assert!(row.iter().all(|v| v.is_finite() && *v >= -1e-12 && *v <= 1.0 + 1e-12));
        // bulk two-point function decays with distance
        assert!(row[2000 + 50] < row[2000 + 10]);
    }
}
