//! Agent-based price dynamics with `N` binary agents.
//!
//! At step `t` each agent picks `+1` or `-1` by a binary logit on the utility
//! difference `2((p_bar_t - p_{t-1}) + J x_{t-1})`, the excess demand `x_t` is
//! the mean choice, and the log-price moves by `p_t = p_{t-1} + beta x_t + z eta`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::logit::binary_logit;
use crate::sdt::{equilibria, SdtModel};

/// How agents form the expected price `p_bar_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceRule {
    /// `p_bar_t = p_{t-1}`: the price term drops out of the utility.
    #[default]
    Static,
    /// `p_bar_t = p_{t-1} + (p_{t-1} - p_{t-2})`.
    Trend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateScheme {
    /// All agents respond to last step's excess demand.
    #[default]
    Synchronous,
    /// Agents update one at a time in random order, each seeing the running mean.
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbmConfig {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub xi: f64,
    /// Standard deviation of the price shock.
    pub z: f64,
    /// Price impact of excess demand.
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub expected_price: PriceRule,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub update: UpdateScheme,
    /// Initial mean choice; agents start at `+1` with probability `(1 + x0) / 2`.
    #[serde(default)]
    pub x0: f64,
    /// Initial log-price.
    #[serde(default)]
    pub p0: f64,
    /// Keep the full per-agent choice matrix in the history.
    #[serde(default)]
    pub record_choices: bool,
}

impl AbmConfig {
    pub fn new(n: usize, j: f64, xi: f64, horizon: usize, seed: u64) -> Self {
        AbmConfig {
            n,
            j,
            xi,
            z: 0.0,
            beta: 0.0,
            expected_price: PriceRule::Static,
            horizon,
            seed,
            update: UpdateScheme::Synchronous,
            x0: 0.0,
            p0: 0.0,
            record_choices: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(
                "n",
                format!("need at least 2 agents, got {}", self.n),
            ));
        }
        if self.horizon < 1 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        ensure_finite("J", self.j)?;
        ensure_non_negative("xi", self.xi)?;
        ensure_non_negative("z", self.z)?;
        ensure_finite("beta", self.beta)?;
        ensure_finite("p0", self.p0)?;
        ensure_finite("x0", self.x0)?;
        if !(-1.0..=1.0).contains(&self.x0) {
            return Err(Error::invalid(
                "x0",
                format!("must lie in [-1, 1], got {}", self.x0),
            ));
        }
        Ok(())
    }
}

/// Market state after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub t: usize,
    pub choices: Vec<i8>,
    /// Excess demand: mean of `choices`.
    pub x: f64,
    pub p: f64,
    /// Price before the last step, for the trend rule.
    pub p_prev: f64,
}

impl MarketState {
    pub fn initial(cfg: &AbmConfig, rng: &mut impl Rng) -> Self {
        let up = (1.0 + cfg.x0) / 2.0;
        let choices: Vec<i8> = (0..cfg.n)
            .map(|_| if rng.random::<f64>() < up { 1 } else { -1 })
            .collect();
        MarketState {
            t: 0,
            x: mean_choice(&choices),
            choices,
            p: cfg.p0,
            p_prev: cfg.p0,
        }
    }
}

fn mean_choice(c: &[i8]) -> f64 {
    c.iter().map(|&v| v as i64).sum::<i64>() as f64 / c.len() as f64
}

/// Advances the market by one step.
pub fn step(state: &MarketState, cfg: &AbmConfig, rng: &mut impl Rng) -> MarketState {
    let p_bar = match cfg.expected_price {
        PriceRule::Static => state.p,
        PriceRule::Trend => state.p + (state.p - state.p_prev),
    };
    let public = p_bar - state.p;
    let mut choices = state.choices.clone();
    match cfg.update {
        UpdateScheme::Synchronous => {
            let prob_up = binary_logit(2.0 * (public + cfg.j * state.x), cfg.xi);
            for c in choices.iter_mut() {
                *c = if rng.random::<f64>() < prob_up { 1 } else { -1 };
            }
        }
        UpdateScheme::Asynchronous => {
            let n = choices.len() as f64;
            let mut sum: i64 = choices.iter().map(|&v| v as i64).sum();
            let mut order: Vec<usize> = (0..choices.len()).collect();
            order.shuffle(rng);
            for i in order {
                let prob_up = binary_logit(2.0 * (public + cfg.j * sum as f64 / n), cfg.xi);
                let new = if rng.random::<f64>() < prob_up { 1 } else { -1 };
                sum += (new - choices[i]) as i64;
                choices[i] = new;
            }
        }
    }
    let x = mean_choice(&choices);
    let eta: f64 = if cfg.z > 0.0 {
        rng.sample(StandardNormal)
    } else {
        0.0
    };
    MarketState {
        t: state.t + 1,
        choices,
        x,
        p: state.p + cfg.beta * x + cfg.z * eta,
        p_prev: state.p,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketHistory {
    /// Log-price for `t = 0..=horizon`.
    pub p: Vec<f64>,
    /// Excess demand for `t = 0..=horizon`.
    pub x: Vec<f64>,
    /// Per-step agent choices when recorded.
    pub choices: Option<Vec<Vec<i8>>>,
}

/// Simulates `cfg.horizon` steps from a seeded initial state.
pub fn run(cfg: &AbmConfig) -> Result<MarketHistory> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = MarketState::initial(cfg, &mut rng);
    let mut p = Vec::with_capacity(cfg.horizon + 1);
    let mut x = Vec::with_capacity(cfg.horizon + 1);
    let mut choices = cfg
        .record_choices
        .then(|| Vec::with_capacity(cfg.horizon + 1));
    let mut record = |s: &MarketState| {
        p.push(s.p);
        x.push(s.x);
        if let Some(c) = choices.as_mut() {
            c.push(s.choices.clone());
        }
    };
    record(&state);
    for _ in 0..cfg.horizon {
        state = step(&state, cfg, &mut rng);
        record(&state);
    }
    Ok(MarketHistory { p, x, choices })
}

/// Independent runs with seeds `base_seed, base_seed + 1, ...`, in parallel.
pub fn run_replicates(cfg: &AbmConfig, replicates: usize) -> Result<Vec<MarketHistory>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            run(&AbmConfig {
                seed: cfg.seed.wrapping_add(r),
                ..cfg.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    /// A stable mean-field equilibrium of `x = tanh(xi J x)`.
    pub equilibrium: f64,
    /// Fraction of steps with `|x_t - equilibrium| < tol`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_x: f64,
    pub mean_abs_x: f64,
    /// Standard deviation of log-price increments.
    pub volatility: f64,
    pub dwell: Vec<Dwell>,
}

/// Summary statistics over steps `burn_in..`, with dwell fractions against
/// the static-price mean-field equilibria.
pub fn summarize(h: &MarketHistory, cfg: &AbmConfig, burn_in: usize, tol: f64) -> Result<Summary> {
    let xs =
        h.x.get(burn_in..)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| {
                Error::invalid(
                    "burn_in",
                    format!("must be below the history length {}", h.x.len()),
                )
            })?;
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_abs_x = xs.iter().map(|v| v.abs()).sum::<f64>() / n;
    let incs: Vec<f64> = h.p[burn_in..].windows(2).map(|w| w[1] - w[0]).collect();
    let volatility = if incs.len() > 1 {
        let m = incs.iter().sum::<f64>() / incs.len() as f64;
        (incs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (incs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let eq = equilibria(&SdtModel::social(0.0, cfg.j, cfg.xi)?)?;
    let dwell = eq
        .stable()
        .map(|e| Dwell {
            equilibrium: e.x[0],
            fraction: xs.iter().filter(|&&v| (v - e.x[0]).abs() < tol).count() as f64 / n,
        })
        .collect();
    Ok(Summary {
        mean_x,
        mean_abs_x,
        volatility,
        dwell,
    })
}
