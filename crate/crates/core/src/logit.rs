//! Random-utility discrete choice with Gumbel noise.
//!
//! Each alternative `j` carries utility `V_j + eps_j` with i.i.d. Gumbel noise
//! of scale `gamma = 1 / xi`. The probability that `j` is the utility maximiser
//! is the logit `exp(xi V_j) / sum_k exp(xi V_k)`; [`sample_gumbel_argmax`]
//! provides the Monte Carlo counterpart used to check that identity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceProblem {
    utilities: Vec<f64>,
    xi: f64,
}

impl ChoiceProblem {
    pub fn new(utilities: Vec<f64>, xi: f64) -> Result<Self> {
        if utilities.len() < 2 {
            return Err(Error::invalid(
                "utilities",
                format!("need at least two alternatives, got {}", utilities.len()),
            ));
        }
        for &v in &utilities {
            ensure_finite("utilities", v)?;
        }
        ensure_non_negative("xi", xi)?;
        Ok(ChoiceProblem { utilities, xi })
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn len(&self) -> usize {
        self.utilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utilities.is_empty()
    }
}

/// Closed-form logit probabilities, computed with the maximum utility
/// subtracted so large `xi * V` cannot overflow.
pub fn logit_probs(p: &ChoiceProblem) -> Vec<f64> {
    softmax(p.utilities(), p.xi())
}

pub(crate) fn softmax(v: &[f64], xi: f64) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = v.iter().map(|&u| (xi * (u - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Probability of the second of two choices when the utility difference
/// (second minus first) is `diff`: the logistic `1 / (1 + exp(-xi diff))`.
pub fn binary_logit(diff: f64, xi: f64) -> f64 {
    let z = xi * diff;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws `n` perturbed-utility maximisations with Gumbel(0, 1/xi) noise and
/// returns the empirical frequency of each alternative. Ties go to the lowest
/// index.
pub fn sample_gumbel_argmax(p: &ChoiceProblem, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    if p.xi() <= 0.0 {
        return Err(Error::invalid(
            "xi",
            "must be > 0 for sampling (noise scale 1/xi)",
        ));
    }
    let noise = Gumbel::new(0.0, 1.0 / p.xi()).map_err(|e| Error::invalid("xi", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; p.len()];
    for _ in 0..n {
        let mut best = 0;
        let mut best_u = f64::NEG_INFINITY;
        for (j, &v) in p.utilities().iter().enumerate() {
            let u = v + noise.sample(&mut rng);
            if u > best_u {
                best_u = u;
                best = j;
            }
        }
        counts[best] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / n as f64).collect())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Gumbel (type I extreme value) distribution with location `mu`, scale `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams {
    mu: f64,
    gamma: f64,
}

impl GumbelParams {
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        ensure_finite("mu", mu)?;
        ensure_finite("gamma", gamma)?;
        if gamma <= 0.0 {
            return Err(Error::invalid("gamma", format!("must be > 0, got {gamma}")));
        }
        Ok(GumbelParams { mu, gamma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.gamma;
        (-(-z).exp()).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.gamma;
        let e = (-z).exp();
        if e.is_infinite() {
            return 0.0;
        }
        (-z - e).exp() / self.gamma
    }

    pub fn std_dev(&self) -> f64 {
        self.gamma * std::f64::consts::PI / 6f64.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn two_choice_logit_is_sigmoid() {
        let p = logit_probs(&ChoiceProblem::new(vec![1.0, 0.0], 1.0).unwrap());
        assert!((p[0] - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((p[1] - 0.268_941_421_369_995_1).abs() < 1e-12);
        assert!((p[0] - sigmoid(1.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_xi_is_uniform() {
        let p = logit_probs(&ChoiceProblem::new(vec![3.0, -1.0, 8.0, 0.5], 0.0).unwrap());
        assert!(p.iter().all(|&x| x == 0.25));
    }

    #[test]
    fn equal_utilities_are_uniform() {
        for xi in [0.1, 1.0, 50.0] {
            let p = logit_probs(&ChoiceProblem::new(vec![5.0, 5.0, 5.0], xi).unwrap());
            assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn large_xi_concentrates_without_overflow() {
        let p = logit_probs(&ChoiceProblem::new(vec![1000.0, 0.0, 999.0], 1e3).unwrap());
        assert!(p[0] > 1.0 - 1e-6);
        assert!(p.iter().all(|x| x.is_finite()));
        // tied maxima split evenly
        let p = logit_probs(&ChoiceProblem::new(vec![2.0, 2.0, 0.0], 1e6).unwrap());
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_problems_rejected() {
        assert!(ChoiceProblem::new(vec![1.0], 1.0).is_err());
        assert!(ChoiceProblem::new(vec![1.0, f64::NAN], 1.0).is_err());
        assert!(ChoiceProblem::new(vec![1.0, f64::INFINITY], 1.0).is_err());
        assert!(ChoiceProblem::new(vec![1.0, 0.0], -1.0).is_err());
        let p = ChoiceProblem::new(vec![1.0, 0.0], 0.0).unwrap();
        assert!(sample_gumbel_argmax(&p, 10, 1).is_err());
        let p = ChoiceProblem::new(vec![1.0, 0.0], 1.0).unwrap();
        assert!(sample_gumbel_argmax(&p, 0, 1).is_err());
    }

    #[test]
    fn monte_carlo_matches_logit() {
        let p = ChoiceProblem::new(vec![1.0, 0.0], 1.0).unwrap();
        let emp = sample_gumbel_argmax(&p, 1_000_000, 42).unwrap();
        let exact = logit_probs(&p);
        assert!((emp[0] - exact[0]).abs() < 0.005, "{emp:?} vs {exact:?}");

        let p = ChoiceProblem::new(vec![0.0, 0.0], 1.0).unwrap();
        let emp = sample_gumbel_argmax(&p, 1_000_000, 7).unwrap();
        assert!((emp[0] - 0.5).abs() < 0.005);

        let p = ChoiceProblem::new(vec![10.0, 0.0], 5.0).unwrap();
        let emp = sample_gumbel_argmax(&p, 100_000, 3).unwrap();
        assert!(emp[0] > 0.999);
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let p = ChoiceProblem::new(vec![0.3, 0.1, -0.2], 2.0).unwrap();
        assert_eq!(
            sample_gumbel_argmax(&p, 5_000, 11).unwrap(),
            sample_gumbel_argmax(&p, 5_000, 11).unwrap()
        );
    }

    #[test]
    fn gumbel_values() {
        let g = GumbelParams::new(0.7, 2.0).unwrap();
        assert!((g.cdf(0.7) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(g.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(g.cdf(f64::INFINITY), 1.0);
        let std = GumbelParams::new(0.0, 1.0).unwrap();
        assert!((std.pdf(0.0) - (-1f64).exp()).abs() < 1e-15);
        assert!((g.std_dev() - 2.0 * std::f64::consts::PI / 6f64.sqrt()).abs() < 1e-15);
        assert!(GumbelParams::new(0.0, 0.0).is_err());
        assert!(GumbelParams::new(0.0, -1.0).is_err());
    }

    #[test]
    fn binary_logit_matches_softmax() {
        for &(d, xi) in &[(0.3, 2.0), (-4.0, 0.5), (700.0, 3.0), (-700.0, 3.0)] {
            let p = softmax(&[0.0, d], xi);
            assert!((binary_logit(d, xi) - p[1]).abs() < 1e-12);
        }
    }
}
