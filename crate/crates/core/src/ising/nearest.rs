//! Closed forms and an exact sampler for the nearest-neighbour chain
//! `E(σ) = -j Σ_i σ_i σ_{i+1}` on `Λ_L`.
//!
//! The bond variables `σ'_i = σ_i σ_{i+1}` (for `i < L`) together with the
//! boundary spin `σ'_L = σ_L` are independent under the Gibbs measure:
//! `σ_L` is a fair sign and each `σ'_i` equals `-1` with probability
//! `1 / (1 + e^{2j})`.

use rand::Rng;

use super::{Lattice, LogValue, SpinConfiguration};
use crate::{Error, Result};

fn check_coupling(j: f64) -> Result<()> {
    if j.is_nan() || j < 0.0 {
        return Err(Error::domain(format!("nearest-neighbour coupling {j} must be >= 0")));
    }
    Ok(())
}

/// `Z = 2 (e^j + e^{-j})^{2L}`, returned in log space.
pub fn nn_partition_closed(j: f64, half_width: usize) -> Result<LogValue> {
    check_coupling(j)?;
    // ln(e^j + e^{-j}) = j + ln(1 + e^{-2j})
    let per_bond = j + (-2.0 * j).exp().ln_1p();
    Ok(LogValue::from_log(
        std::f64::consts::LN_2 + 2.0 * half_width as f64 * per_bond,
    ))
}

/// `<σ_{i_1} ... σ_{i_n}>` for sorted indices: `tanh(j)^{Σ_k |i_{2k} - i_{2k-1}|}`
/// when `n` is even and 0 when `n` is odd. Independent of `L`.
pub fn nn_correlation_closed(j: f64, indices: &[i64]) -> Result<f64> {
    check_coupling(j)?;
    if indices.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain(format!("indices {indices:?} are not sorted")));
    }
    if indices.len() % 2 == 1 {
        return Ok(0.0);
    }
    let gap: u64 = indices.chunks(2).map(|p| (p[1] - p[0]) as u64).sum();
    Ok(tanh_power(j.tanh(), gap))
}

pub(crate) fn tanh_power(tau: f64, gap: u64) -> f64 {
    match i32::try_from(gap) {
        Ok(g) => tau.powi(g),
        Err(_) => tau.powf(gap as f64),
    }
}

/// Probability that a nearest-neighbour bond is broken, `1 / (1 + e^{2j})`.
pub fn nn_flip_probability(j: f64) -> f64 {
    1.0 / (1.0 + (2.0 * j).exp())
}

/// Draws one exact sample of the nearest-neighbour chain on `Λ_L`.
pub fn sample_nn_chain<R: Rng + ?Sized>(j: f64, lattice: Lattice, rng: &mut R) -> Result<SpinConfiguration> {
    check_coupling(j)?;
    let mut spins = vec![0i8; lattice.len()];
    fill_nn_chain(nn_flip_probability(j), &mut spins, rng);
    SpinConfiguration::new(lattice, spins)
}

/// Fills `spins` (storage order) right to left from a fair boundary spin.
pub(crate) fn fill_nn_chain<R: Rng + ?Sized>(flip_probability: f64, spins: &mut [i8], rng: &mut R) {
    let Some(last) = spins.len().checked_sub(1) else {
        return;
    };
    spins[last] = if rng.random::<bool>() { 1 } else { -1 };
    for k in (0..last).rev() {
        let flip = rng.random::<f64>() < flip_probability;
        spins[k] = if flip { -spins[k + 1] } else { spins[k + 1] };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn partition_closed_examples() {
        assert!((nn_partition_closed(0.0, 3).unwrap().value() - 128.0).abs() < 1e-10);
        let e = std::f64::consts::E;
        let z = nn_partition_closed(1.0, 1).unwrap().value();
        assert!((z - 2.0 * (e + 1.0 / e).powi(2)).abs() < 1e-12);
        // no overflow in log space at very large coupling
        let big = nn_partition_closed(500.0, 1000).unwrap();
        assert!((big.log_value - (2f64.ln() + 2000.0 * 500.0)).abs() < 1e-6);
        assert!(nn_partition_closed(-0.1, 1).is_err());
    }

    #[test]
    fn correlation_closed_examples() {
        assert_eq!(nn_correlation_closed(0.7, &[0]).unwrap(), 0.0);
        assert_eq!(nn_correlation_closed(3.0, &[3, 3]).unwrap(), 1.0);
        assert_eq!(nn_correlation_closed(0.0, &[-1, 2]).unwrap(), 0.0);
        assert_eq!(nn_correlation_closed(0.0, &[]).unwrap(), 1.0);
        let v = nn_correlation_closed(0.5, &[0, 2]).unwrap();
        assert!((v - 0.5f64.tanh().powi(2)).abs() < 1e-16);
        assert!((v - 0.213_552_27).abs() < 1e-8);
        let four = nn_correlation_closed(1.0, &[-3, -1, 0, 4]).unwrap();
        assert!((four - 1f64.tanh().powi(6)).abs() < 1e-15);
        assert!(nn_correlation_closed(1.0, &[2, 0]).is_err());
    }

    #[test]
    fn flip_probability_limits() {
        assert_eq!(nn_flip_probability(0.0), 0.5);
        assert_eq!(nn_flip_probability(1e6), 0.0);
        let delta: f64 = 0.01;
        let jd = -0.5 * delta.ln();
        assert!((nn_flip_probability(jd) - delta / (1.0 + delta)).abs() < 1e-15);
    }

    #[test]
    fn frozen_chain_is_constant() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            let c = sample_nn_chain(1e6, Lattice::new(10), &mut rng).unwrap();
            assert_eq!(c.sign_changes(), 0);
        }
    }

    #[test]
    fn sampled_two_point_function_matches_closed_form() {
        let lat = Lattice::new(4);
        let mut rng = stream_rng(2024, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let c = sample_nn_chain(1.0, lat, &mut rng).unwrap();
            let v = c.product(&[0, 3]).unwrap() as f64;
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = 1f64.tanh().powi(3);
        assert!((mean - exact).abs() < 4.0 * se, "mean {mean} exact {exact} se {se}");
    }

    #[test]
    fn single_site_sample_is_fair() {
        let mut rng = stream_rng(5, 0);
        let ups = (0..20_000)
            .filter(|_| sample_nn_chain(2.0, Lattice::new(0), &mut rng).unwrap().spins()[0] == 1)
            .count();
        assert!((ups as f64 / 20_000.0 - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
    }
}
