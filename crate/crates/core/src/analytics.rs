//! Two-state Markov model of the capture sequence.
//!
//! State 1 is "defender starts at the center", state 2 is "defender starts on
//! the capture circle". A game from state `j` is captured with probability
//! `p_j`, and a capture always leads to state 2, a breach to state 1.
//!
//! Games are indexed from 1 and `η_i` is the distribution at the *start* of
//! game `i`, so `η_1 = (1, 0)` and the first game is captured with
//! probability `p1`.

use crate::game::{GameEngine, Outcome};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub p1: f64,
    pub p2: f64,
}

/// Column-stochastic 2×2 matrix, row-major: `m[row][col]`.
pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionVector {
    pub eta: [f64; 2],
}

impl MarkovModel {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(Self { p1, p2 })
    }

    fn capture_vector(&self) -> [f64; 2] {
        [self.p1, self.p2]
    }

    /// Second eigenvalue of the transition matrix.
    fn lambda(&self) -> f64 {
        self.p2 - self.p1
    }
}

pub fn transition_matrix(model: &MarkovModel) -> Matrix2 {
    [[1.0 - model.p1, 1.0 - model.p2], [model.p1, model.p2]]
}

pub fn apply(m: &Matrix2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Distribution at the start of game `i ≥ 1`, `P^(i−1) e₁`.
pub fn state_distribution(model: &MarkovModel, i: usize) -> Result<DistributionVector> {
    if i < 1 {
        return Err(Error::Index(i));
    }
    // With P = I (p1 = 0, p2 = 1) the chain never leaves the center.
    let Ok(star) = stationary_distribution(model) else {
        return Ok(DistributionVector { eta: [1.0, 0.0] });
    };
    // η_i = η* + λ^(i−1) (e₁ − η*)
    let decay = model.lambda().powi((i - 1).min(i32::MAX as usize) as i32);
    let s2 = star.eta[1] * (1.0 - decay);
    Ok(DistributionVector { eta: [1.0 - s2, s2] })
}

/// Expected share of captures over the first `n` games, in percent.
pub fn expected_percentage(model: &MarkovModel, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Index(n));
    }
    Ok(*percentage_curve(model, n).last().expect("n >= 1"))
}

/// `expected_percentage(model, k)` for `k = 1..=n`.
pub fn percentage_curve(model: &MarkovModel, n: usize) -> Vec<f64> {
    let p = model.capture_vector();
    let m = transition_matrix(model);
    let mut eta = [1.0, 0.0];
    let mut total = 0.0;
    (1..=n)
        .map(|k| {
            total += p[0] * eta[0] + p[1] * eta[1];
            eta = apply(&m, eta);
            100.0 * total / k as f64
        })
        .collect()
}

pub fn stationary_distribution(model: &MarkovModel) -> Result<DistributionVector> {
    let denom = 1.0 + model.p1 - model.p2;
    if denom == 0.0 {
        return Err(Error::DegenerateChain);
    }
    Ok(DistributionVector {
        eta: [(1.0 - model.p2) / denom, model.p1 / denom],
    })
}

pub fn asymptotic_percentage(model: &MarkovModel) -> Result<f64> {
    let star = stationary_distribution(model)?;
    Ok(100.0 * (model.p1 * star.eta[0] + model.p2 * star.eta[1]))
}

/// Large-`n` standard error of the capture fraction of one `n`-game
/// sequence. The capture indicators form a chain with flip probabilities
/// `p1` (after a breach) and `1 − p2` (after a capture), so the variance of
/// their mean is `π(1 − π)(1 + λ)/((1 − λ) n)` with `λ = p2 − p1`.
pub fn fraction_standard_error(model: &MarkovModel, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Index(n));
    }
    let pi = asymptotic_percentage(model)? / 100.0;
    let lambda = model.lambda();
    if lambda >= 1.0 {
        return Err(Error::DegenerateChain);
    }
    Ok((pi * (1.0 - pi) * (1.0 + lambda) / ((1.0 - lambda) * n as f64)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub n_trials: usize,
    pub n_arrivals: usize,
    pub model: MarkovModel,
    /// Final capture fraction of each trial, in trial order.
    pub per_trial_fractions: Vec<f64>,
    /// Mean over trials of the running capture percentage after `n` games.
    pub mean_curve: Vec<f64>,
    pub theory_curve: Vec<f64>,
    pub asymptotic_pct: Option<f64>,
}

/// Runs `n_trials` independent sequences; trial `k` uses arrival seed
/// `seed + k`. Results do not depend on thread scheduling.
pub fn monte_carlo_summary(engine: &GameEngine, n_trials: usize, n_arrivals: usize, seed: u64) -> Result<TrialSummary> {
    if n_trials < 1 {
        return Err(Error::InvalidParameter("n_trials must be >= 1".into()));
    }
    let model = engine.markov_model();
    let quiet = engine.clone().with_trajectories(false);
    let (running, per_trial_fractions): (Vec<Vec<f64>>, Vec<f64>) = (0..n_trials)
        .into_par_iter()
        .map(|k| {
            let result = quiet.run_sequence(n_arrivals, seed.wrapping_add(k as u64));
            let mut captures = 0usize;
            let curve = result
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    captures += usize::from(r.outcome == Outcome::Capture);
                    100.0 * captures as f64 / (i + 1) as f64
                })
                .collect();
            (curve, result.capture_fraction)
        })
        .unzip();

    let mean_curve = (0..n_arrivals)
        .map(|i| running.iter().map(|c| c[i]).sum::<f64>() / n_trials as f64)
        .collect();
    Ok(TrialSummary {
        n_trials,
        n_arrivals,
        model,
        per_trial_fractions,
        mean_curve,
        theory_curve: percentage_curve(&model, n_arrivals),
        asymptotic_pct: asymptotic_percentage(&model).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(p1: f64, p2: f64) -> MarkovModel {
        MarkovModel::new(p1, p2).unwrap()
    }

    #[test]
    fn matrix_examples() {
        assert_eq!(transition_matrix(&model(0.0, 0.0)), [[1.0, 1.0], [0.0, 0.0]]);
        assert_eq!(transition_matrix(&model(1.0, 1.0)), [[0.0, 0.0], [1.0, 1.0]]);
        assert!(MarkovModel::new(1.2, 0.0).is_err());
    }

    #[test]
    fn distribution_examples() {
        let m = model(0.3, 0.6);
        assert_eq!(state_distribution(&m, 1).unwrap().eta, [1.0, 0.0]);
        let eta2 = state_distribution(&m, 2).unwrap().eta;
        assert!((eta2[0] - 0.7).abs() < 1e-15 && (eta2[1] - 0.3).abs() < 1e-15);
        assert_eq!(state_distribution(&m, 0), Err(Error::Index(0)));
        let far = state_distribution(&m, 200).unwrap().eta;
        assert!((far[0] - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_power_iteration() {
        let m = model(0.23, 0.71);
        let p = transition_matrix(&m);
        let mut eta = [1.0, 0.0];
        for i in 1..60 {
            let closed = state_distribution(&m, i).unwrap().eta;
            assert!((closed[0] - eta[0]).abs() < 1e-12 && (closed[1] - eta[1]).abs() < 1e-12, "i={i}");
            eta = apply(&p, eta);
        }
    }

    #[test]
    fn percentage_examples() {
        let m = model(0.3, 0.6);
        assert_eq!(expected_percentage(&m, 1).unwrap(), 100.0 * 0.3);
        for n in [1, 7, 50] {
            assert!((expected_percentage(&model(0.4, 0.4), n).unwrap() - 40.0).abs() < 1e-12);
        }
        assert!((asymptotic_percentage(&m).unwrap() - 300.0 / 7.0).abs() < 1e-12);
        let gap = |n| (expected_percentage(&m, n).unwrap() - asymptotic_percentage(&m).unwrap()).abs();
        assert!(gap(500) < 0.5);
        assert!(gap(200) < gap(20));
    }

    #[test]
    fn stationary_examples() {
        let s = stationary_distribution(&model(0.5, 0.5)).unwrap().eta;
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert_eq!(stationary_distribution(&model(0.0, 0.4)).unwrap().eta, [1.0, 0.0]);
        assert_eq!(stationary_distribution(&model(0.0, 1.0)), Err(Error::DegenerateChain));
        assert_eq!(state_distribution(&model(0.0, 1.0), 9).unwrap().eta, [1.0, 0.0]);
    }
}
