//! The cusp catastrophe: stationary points of the quartic potential
//! `W(x) = x^4/4 - u1 x^2/2 - u2 x`, the fold boundary `4 u1^3 = 27 u2^2`,
//! the stationary density `p(x) ~ exp(-xi W(x))` of the gradient diffusion
//! `dx = -W'(x) dt + sigma dB` with `xi = 2 / sigma^2`, and an
//! Euler-Maruyama simulator for that diffusion.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::fixedpoint::{Equilibrium, EquilibriumSet, Point, Region, Stability};
use crate::quad::simpson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspControl {
    pub u1: f64,
    pub u2: f64,
    /// Inverse noise scale; only the density uses it.
    pub xi: f64,
}

impl CuspControl {
    pub fn new(u1: f64, u2: f64, xi: f64) -> Result<Self> {
        ensure_finite("u1", u1)?;
        ensure_finite("u2", u2)?;
        ensure_finite("xi", xi)?;
        if xi <= 0.0 {
            return Err(Error::invalid("xi", format!("must be > 0, got {xi}")));
        }
        Ok(CuspControl { u1, u2, xi })
    }

    /// Control point for the deterministic problem (`xi = 1`).
    pub fn plane(u1: f64, u2: f64) -> Result<Self> {
        Self::new(u1, u2, 1.0)
    }

    pub fn potential(&self, x: f64) -> f64 {
        x.powi(4) / 4.0 - self.u1 * x * x / 2.0 - self.u2 * x
    }

    /// Drift of the gradient flow, `-W'(x) = -x^3 + u1 x + u2`.
    pub fn drift(&self, x: f64) -> f64 {
        -x * x * x + self.u1 * x + self.u2
    }

    pub fn curvature(&self, x: f64) -> f64 {
        3.0 * x * x - self.u1
    }
}

pub fn discriminant(u1: f64, u2: f64) -> f64 {
    4.0 * u1 * u1 * u1 - 27.0 * u2 * u2
}

/// Real roots of `x^3 - u1 x - u2 = 0`, ascending. Multiple roots appear once.
pub fn cubic_roots(u1: f64, u2: f64) -> Vec<f64> {
    if u1 == 0.0 && u2 == 0.0 {
        return vec![0.0];
    }
    let disc = discriminant(u1, u2);
    let mut roots = if disc > 0.0 {
        // three distinct roots; u1 > 0 here
        let r = 2.0 * (u1 / 3.0).sqrt();
        let arg = (1.5 * u2 / u1 * (3.0 / u1).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos())
            .collect()
    } else if disc < 0.0 {
        let s = (u2 * u2 / 4.0 - u1 * u1 * u1 / 27.0).sqrt();
        // pick the sign that avoids cancellation
        let a = (0.5 * u2 + s.copysign(u2)).cbrt();
        let b = if a == 0.0 { 0.0 } else { u1 / (3.0 * a) };
        vec![a + b]
    } else if u1 == 0.0 {
        vec![0.0]
    } else {
        vec![-1.5 * u2 / u1, 3.0 * u2 / u1]
    };
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let f = *x * *x * *x - u1 * *x - u2;
            let df = 3.0 * *x * *x - u1;
            if df == 0.0 || f == 0.0 {
                break;
            }
            *x -= f / df;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Stationary points of the potential with stability from its curvature:
/// stable where `3x^2 > u1`. The recorded spectral radius is that of the
/// time-one flow map, `exp(-W''(x))`.
pub fn stationary_points(c: &CuspControl) -> EquilibriumSet<1> {
    let points = cubic_roots(c.u1, c.u2)
        .into_iter()
        .map(|x| {
            let k = c.curvature(x);
            let stability = if k.abs() <= 1e-12 * (1.0 + c.u1.abs()) {
                Stability::Critical
            } else if k > 0.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            Equilibrium {
                x: Point::<1>::new(x),
                stability,
                residual: c.drift(x).abs(),
                spectral_radius: (-k).exp(),
            }
        })
        .collect();
    EquilibriumSet {
        points,
        failed_starts: 0,
    }
}

/// `A` (one root) where the discriminant is negative, `B` (three) where it is
/// positive, `Critical` within `1e-12` of the larger of its two terms.
pub fn classify_region(c: &CuspControl) -> Region {
    let (a, b) = (4.0 * c.u1.powi(3), 27.0 * c.u2 * c.u2);
    let d = a - b;
    if d.abs() <= 1e-12 * a.abs().max(b) {
        Region::Critical
    } else if d > 0.0 {
        Region::B
    } else {
        Region::A
    }
}

/// The fold boundary `u2 = +-2 (u1/3)^{3/2}` for `u1 in [0, u1_max]`, traced
/// from the lower branch through the cusp point to the upper branch.
pub fn critical_curve(u1_max: f64, n: usize) -> Result<Vec<[f64; 2]>> {
    ensure_finite("u1_max", u1_max)?;
    if u1_max <= 0.0 || n < 2 {
        return Err(Error::invalid(
            "u1_max",
            "need u1_max > 0 and at least two points per branch",
        ));
    }
    let branch = |k: usize| {
        let u1 = u1_max * k as f64 / (n - 1) as f64;
        (u1, 2.0 * (u1 / 3.0).powf(1.5))
    };
    let mut out: Vec<[f64; 2]> = (1..n)
        .rev()
        .map(&branch)
        .map(|(u1, u2)| [u1, -u2])
        .collect();
    out.extend((0..n).map(branch).map(|(u1, u2)| [u1, u2]));
    Ok(out)
}

/// Normalised stationary density `exp(-xi W(x)) / Z` on `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryDensity {
    pub control: CuspControl,
    /// `log Z` relative to the potential minimum.
    pub log_norm: f64,
    pub bound: f64,
    w_min: f64,
}

const TAIL: f64 = 1e-16;

impl StationaryDensity {
    pub fn new(control: CuspControl) -> Result<Self> {
        let c = CuspControl::new(control.u1, control.u2, control.xi)?;
        let roots = cubic_roots(c.u1, c.u2);
        let w_min = roots
            .iter()
            .map(|&x| c.potential(x))
            .fold(f64::INFINITY, f64::min);
        let widest = roots.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut bound = 3f64.max(widest + 5.0 / c.xi.sqrt());
        let rel = |x: f64| (-c.xi * (c.potential(x) - w_min)).exp();
        while rel(bound).max(rel(-bound)) > TAIL {
            bound *= 2.0;
        }
        // split at the stationary points so each piece is smooth and unimodal
        let mut knots = vec![-bound];
        knots.extend(roots.iter().copied());
        knots.push(bound);
        let z: f64 = knots
            .windows(2)
            .map(|w| simpson(&rel, w[0], w[1], 1e-14))
            .sum();
        Ok(StationaryDensity {
            control: c,
            log_norm: z.ln(),
            bound,
            w_min,
        })
    }

    fn eval(&self, x: f64) -> f64 {
        (-self.control.xi * (self.control.potential(x) - self.w_min) - self.log_norm).exp()
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        ensure_finite("x", x)?;
        Ok(self.eval(x))
    }

    /// Probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let f = |x: f64| self.eval(x);
        simpson(&f, a, b, 1e-14)
    }

    /// Local maxima (`modes`) and interior minima (`antimodes`) of the
    /// density, located on a grid of spacing `step` and refined by
    /// golden-section search.
    pub fn extrema(&self, step: f64) -> (Vec<f64>, Vec<f64>) {
        let n = (2.0 * self.bound / step).ceil() as usize;
        let xs: Vec<f64> = (0..=n)
            .map(|k| -self.bound + 2.0 * self.bound * k as f64 / n as f64)
            .collect();
        let ps: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
        let (mut modes, mut anti) = (Vec::new(), Vec::new());
        for k in 1..n {
            if ps[k] > ps[k - 1] && ps[k] >= ps[k + 1] {
                modes.push(golden(|x| -self.eval(x), xs[k - 1], xs[k + 1]));
            } else if ps[k] < ps[k - 1] && ps[k] <= ps[k + 1] {
                anti.push(golden(|x| self.eval(x), xs[k - 1], xs[k + 1]));
            }
        }
        (modes, anti)
    }
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    while (b - a).abs() > 1e-10 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - R * (b - a);
        d = a + R * (b - a);
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub sigma: f64,
    pub dt: f64,
    pub steps: usize,
    pub x0: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdePath {
    /// `steps + 1` states including the start.
    pub x: Vec<f64>,
    pub dt: f64,
    /// Steps where the drift increment exceeded one unit.
    pub large_steps: usize,
}

/// Euler-Maruyama integration of `dx = -W'(x) dt + sigma dB`.
pub fn simulate_sde(c: &CuspControl, cfg: &SdeConfig) -> Result<SdePath> {
    ensure_finite("sigma", cfg.sigma)?;
    ensure_finite("x0", cfg.x0)?;
    ensure_finite("dt", cfg.dt)?;
    if cfg.sigma < 0.0 {
        return Err(Error::invalid(
            "sigma",
            format!("must be >= 0, got {}", cfg.sigma),
        ));
    }
    if cfg.dt <= 0.0 {
        return Err(Error::invalid("dt", format!("must be > 0, got {}", cfg.dt)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = cfg.sigma * cfg.dt.sqrt();
    let mut x = Vec::with_capacity(cfg.steps + 1);
    let mut cur = cfg.x0;
    let mut large = 0;
    x.push(cur);
    for step in 0..cfg.steps {
        let drift = c.drift(cur) * cfg.dt;
        if drift.abs() > 1.0 {
            if large == 0 {
                log::warn!(
                    "drift step {drift:.3} exceeds 1 at step {step}; dt = {} may be too large",
                    cfg.dt
                );
            }
            large += 1;
        }
        let eta: f64 = StandardNormal.sample(&mut rng);
        cur += drift + scale * eta;
        if !cur.is_finite() {
            return Err(Error::Diverged { step });
        }
        x.push(cur);
    }
    Ok(SdePath {
        x,
        dt: cfg.dt,
        large_steps: large,
    })
}

/// Inverse noise scale matching a constant diffusion coefficient.
pub fn xi_from_sigma(sigma: f64) -> f64 {
    2.0 / (sigma * sigma)
}

/// Total-variation distance between the empirical histogram of `samples`
/// and the density's bin masses, over `bins` equal bins on `[lo, hi]` plus
/// the two tails.
pub fn histogram_tv(
    samples: &[f64],
    density: &StationaryDensity,
    lo: f64,
    hi: f64,
    bins: usize,
) -> f64 {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins + 2];
    for &s in samples {
        let idx = if s < lo {
            0
        } else if s >= hi {
            bins + 1
        } else {
            1 + (((s - lo) / width) as usize).min(bins - 1)
        };
        counts[idx] += 1;
    }
    let n = samples.len() as f64;
    let mut masses = Vec::with_capacity(bins + 2);
    masses.push(density.mass(-density.bound, lo));
    for k in 0..bins {
        let a = lo + width * k as f64;
        masses.push(density.mass(a, a + width));
    }
    masses.push(density.mass(hi, density.bound));
    0.5 * counts
        .iter()
        .zip(&masses)
        .map(|(&c, &m)| (c as f64 / n - m).abs())
        .sum::<f64>()
}
