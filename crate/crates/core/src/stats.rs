//! Mergeable multivariate sample moments and the estimates built from them.

use serde::{Deserialize, Serialize};

/// Running count, mean vector and co-moment matrix of `K`-dimensional
/// observations. `push` is Welford's update and `merge` is the pairwise
/// (Chan et al.) combination, so shard results can be folded in any fixed
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments<const K: usize> {
    n: u64,
    mean: [f64; K],
    comoment: [[f64; K]; K],
}

impl<const K: usize> Default for Moments<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const K: usize> Moments<K> {
    pub fn new() -> Self {
        Moments {
            n: 0,
            mean: [0.0; K],
            comoment: [[0.0; K]; K],
        }
    }

    pub fn push(&mut self, x: &[f64; K]) {
        self.n += 1;
        let n = self.n as f64;
        let mut before = [0.0; K];
        for i in 0..K {
            before[i] = x[i] - self.mean[i];
            self.mean[i] += before[i] / n;
        }
        for i in 0..K {
            let after = x[i] - self.mean[i];
            for j in 0..K {
                self.comoment[j][i] += before[j] * after;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let mut delta = [0.0; K];
        for i in 0..K {
            delta[i] = other.mean[i] - self.mean[i];
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..K {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> [f64; K] {
        self.mean
    }

    /// Unbiased sample covariance of components `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i][j] / (self.n - 1) as f64
    }

    /// Standard error of the sample mean of component `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.covariance(i, i).max(0.0) / self.n as f64).sqrt()
    }

    /// Delta-method standard error of `g(mean)` given the gradient of `g`
    /// at the sample mean.
    pub fn delta_std_error(&self, grad: &[f64; K]) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut var = 0.0;
        for i in 0..K {
            for j in 0..K {
                var += grad[i] * grad[j] * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.n as f64).sqrt()
    }

    /// Kish effective sample size `(sum w)^2 / sum w^2` of component `i`
    /// read as a weight.
    pub fn effective_sample_size(&self, i: usize) -> f64 {
        let n = self.n as f64;
        let m = self.mean[i];
        let second = self.comoment[i][i] / n + m * m;
        if second <= 0.0 {
            return 0.0;
        }
        n * m * m / second
    }
}

/// A point estimate with its standard error and provenance.
///
/// Exact computations carry `samples == 0` and `std_error == 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub shards: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            samples: 0,
            seed: 0,
            shards: 0,
            ess: None,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn sampled(mean: f64, std_error: f64, cfg: &crate::McConfig) -> Self {
        Estimate {
            mean,
            std_error,
            samples: cfg.samples,
            seed: cfg.seed,
            shards: cfg.effective_shards(),
            ess: None,
            warnings: Vec::new(),
        }
    }

    /// `|self - reference| / std_error`; infinite for a nonzero gap with zero error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.mean - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }

    /// Bit patterns of the mean and standard error, for reproducibility checks.
    pub fn fingerprint(&self) -> [u64; 2] {
        [self.mean.to_bits(), self.std_error.to_bits()]
    }
}

/// Combined standard error of the difference of two independent estimates.
pub fn combined_std_error(a: &Estimate, b: &Estimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// How a reweighted expectation `E[f w] / E[w]` is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioForm {
    /// `mean(f w) / mean(w)`.
    #[default]
    Plain,
    /// `f0 + mean(f w) / mean(w) - mean(f)` where `f0 = E[f]` is known in
    /// closed form under the sampling measure. Same limit as the plain
    /// ratio; the noise of `f` itself cancels.
    ControlVariate,
}

/// Ratio estimate from moments of `(f w, w)`.
pub(crate) fn plain_ratio(m: &Moments<2>) -> (f64, f64) {
    let [fw, w] = m.mean();
    let r = fw / w;
    (r, m.delta_std_error(&[1.0 / w, -r / w]))
}

/// Control-variate ratio estimate from moments of `(f w, f, w)`.
pub(crate) fn control_variate_ratio(m: &Moments<3>, known_mean: f64) -> (f64, f64) {
    let [fw, f, w] = m.mean();
    let value = known_mean + fw / w - f;
    (value, m.delta_std_error(&[1.0 / w, -1.0, -fw / (w * w)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_cov(xs: &[[f64; 2]], i: usize, j: usize) -> f64 {
        let n = xs.len() as f64;
        let mi = xs.iter().map(|x| x[i]).sum::<f64>() / n;
        let mj = xs.iter().map(|x| x[j]).sum::<f64>() / n;
        xs.iter().map(|x| (x[i] - mi) * (x[j] - mj)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<[f64; 2]> = (0..50)
            .map(|k| {
                let t = k as f64;
                [t.sin() + 3.0, (0.3 * t).cos() * t]
            })
            .collect();
        let mut m = Moments::new();
        for x in &xs {
            m.push(x);
        }
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            assert!((m.covariance(i, j) - naive_cov(&xs, i, j)).abs() < 1e-10);
        }
    }

    #[test]
    fn merge_equals_single_pass() {
        let xs: Vec<[f64; 2]> = (0..97).map(|k| [k as f64 * 0.1, (k % 7) as f64]).collect();
        let mut whole = Moments::new();
        xs.iter().for_each(|x| whole.push(x));
        let mut left = Moments::new();
        let mut right = Moments::new();
        xs[..40].iter().for_each(|x| left.push(x));
        xs[40..].iter().for_each(|x| right.push(x));
        left.merge(&right);
        assert_eq!(left.count(), 97);
        for i in 0..2 {
            assert!((left.mean()[i] - whole.mean()[i]).abs() < 1e-12);
            for j in 0..2 {
                assert!((left.covariance(i, j) - whole.covariance(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ess_of_equal_weights_is_count() {
        let mut m = Moments::<1>::new();
        for _ in 0..10 {
            m.push(&[2.5]);
        }
        assert!((m.effective_sample_size(0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn control_variate_with_constant_weight_returns_known_mean() {
        let mut m = Moments::<3>::new();
        for k in 0..20 {
            let f = if k % 3 == 0 { 1.0 } else { -1.0 };
            m.push(&[f, f, 1.0]);
        }
        let (v, se) = control_variate_ratio(&m, 0.25);
        assert!((v - 0.25).abs() < 1e-15);
        assert!(se < 1e-12);
    }
}
