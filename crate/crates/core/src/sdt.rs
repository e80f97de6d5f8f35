//! Mean-field social decision model: binary agents whose utility couples
//! their own choice to the population mean through `J`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::fixedpoint::{
    bracket_roots, find_all, scalar_map, sweep, EquilibriumSet, FindOptions, FixedPointProblem,
    Point, SelfMap, SweepOptions,
};
use crate::game::SocialCoefficients;
use crate::logit::softmax;

/// Coefficients `(k, h, f, J)` together with the inverse noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdtParams {
    #[serde(flatten)]
    pub coeffs: SocialCoefficients,
    pub xi: f64,
}

impl SdtParams {
    pub fn new(coeffs: SocialCoefficients, xi: f64) -> Result<Self> {
        let p = SdtParams { coeffs, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let SocialCoefficients { k, h, f, j } = self.coeffs;
        ensure_finite("k", k)?;
        ensure_finite("h", h)?;
        ensure_finite("f", f)?;
        ensure_finite("J", j)?;
        ensure_non_negative("xi", self.xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdtModel {
    pub params: SdtParams,
    /// Expected neighbour mean, for evaluation away from equilibrium.
    pub neighbor_mean: Option<f64>,
}

impl SdtModel {
    pub fn new(params: SdtParams) -> Result<Self> {
        params.validate()?;
        Ok(SdtModel {
            params,
            neighbor_mean: None,
        })
    }

    /// Shorthand for the pure social model `k = f = 0`.
    pub fn social(h: f64, j: f64, xi: f64) -> Result<Self> {
        Self::new(SdtParams::new(
            SocialCoefficients {
                k: 0.0,
                h,
                f: 0.0,
                j,
            },
            xi,
        )?)
    }

    pub fn with_neighbor_mean(mut self, m: f64) -> Result<Self> {
        check_mean("neighbor_mean", m)?;
        self.neighbor_mean = Some(m);
        Ok(self)
    }

    pub fn h(&self) -> f64 {
        self.params.coeffs.h
    }

    pub fn j(&self) -> f64 {
        self.params.coeffs.j
    }

    pub fn xi(&self) -> f64 {
        self.params.xi
    }

    /// The social field `h + J m` felt by an agent facing neighbour mean `m`.
    pub fn field(&self, m: f64) -> f64 {
        self.h() + self.j() * m
    }

    /// Mean choice `tanh(xi (h + J m))` given neighbour mean `m`.
    pub fn response(&self, m: f64) -> f64 {
        (self.xi() * self.field(m)).tanh()
    }

    fn response_slope(&self, m: f64) -> f64 {
        let c = (self.xi() * self.field(m)).cosh();
        self.xi() * self.j() / (c * c)
    }

    /// The self-consistency map `x -> tanh(xi (h + J x))` as a fixed-point
    /// problem, seeded with the sign changes of `x - tanh(...)`.
    pub fn problem(&self) -> FixedPointProblem<1, impl SelfMap<1> + '_> {
        let seeds = bracket_roots(|x| x - self.response(x), -1.0, 1.0, 400)
            .into_iter()
            .map(Point::<1>::new)
            .collect();
        FixedPointProblem::new(scalar_map(
            move |x| self.response(x),
            move |x| self.response_slope(x),
        ))
        .with_seeds(seeds)
    }
}

fn check_mean(field: &'static str, m: f64) -> Result<()> {
    ensure_finite(field, m)?;
    if !(-1.0..=1.0).contains(&m) {
        return Err(Error::invalid(
            field,
            format!("must lie in [-1, 1], got {m}"),
        ));
    }
    Ok(())
}

/// Probability of choosing `x_j` (`-1` or `+1`) given neighbour mean `m`.
/// Falls back to the model's stored neighbour mean when `m` is `None`, and to
/// zero when neither is set.
pub fn choice_prob(model: &SdtModel, x_j: i8, m: Option<f64>) -> Result<f64> {
    if x_j != 1 && x_j != -1 {
        return Err(Error::invalid(
            "x_j",
            format!("choice must be -1 or +1, got {x_j}"),
        ));
    }
    let m = m.or(model.neighbor_mean).unwrap_or(0.0);
    check_mean("neighbor_mean", m)?;
    let a = model.field(m);
    let p = softmax(&[-a, a], model.xi());
    Ok(if x_j == 1 { p[1] } else { p[0] })
}

/// All solutions of `x = tanh(xi (h + J x))` with stability labels.
pub fn equilibria(model: &SdtModel) -> Result<EquilibriumSet<1>> {
    find_all(&model.problem(), &FindOptions::default())
}

/// Deterministic part of the extended utility
/// `k + h x_own + f x_other + J x_own x_other`.
pub fn utility(model: &SdtModel, own: f64, other: f64) -> Result<f64> {
    check_mean("own_mean", own)?;
    check_mean("neighbor_mean", other)?;
    let SocialCoefficients { k, h, f, j } = model.params.coeffs;
    Ok(k + h * own + f * other + j * own * other)
}

/// Locates the pitchfork at `h = 0` by sweeping `xi` and bisecting the
/// bracket where the equilibrium count goes from one to three.
pub fn pitchfork_critical_xi(j: f64) -> Result<f64> {
    ensure_finite("J", j)?;
    if j <= 0.0 {
        return Err(Error::invalid(
            "J",
            format!("no pitchfork for J <= 0, got {j}"),
        ));
    }
    let scale = 1.0 / j;
    let grid: Vec<f64> = (0..=60).map(|k| scale * 0.05 * k as f64).collect();
    let opts = SweepOptions {
        find: FindOptions::default(),
        refine_tol: Some(1e-8 * scale),
    };
    let family = move |xi: f64| {
        FixedPointProblem::new(scalar_map(
            move |x| (xi * j * x).tanh(),
            move |x| xi * j / (xi * j * x).cosh().powi(2),
        ))
    };
    let branch = sweep(family, &grid, &opts)?;
    branch
        .folds
        .iter()
        .find(|f| f.count_lo == 1 && f.count_hi == 3)
        .map(|f| f.location)
        .ok_or(Error::NoConvergence {
            failed: 0,
            total: grid.len(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::Stability;
    use crate::game::{gparams_to_sdt, to_gparams, Game2x2, Player};

    const TANH2_ROOT: f64 = 0.957_504_024_077_268_7;

    #[test]
    fn choice_probabilities() {
        let m = SdtModel::social(0.0, 1.0, 3.0).unwrap();
        assert_eq!(choice_prob(&m, 1, Some(0.0)).unwrap(), 0.5);
        let m = SdtModel::social(0.7, -2.0, 0.0).unwrap();
        assert_eq!(choice_prob(&m, -1, Some(0.4)).unwrap(), 0.5);
        let m = SdtModel::social(1.0, 0.0, 1.0).unwrap();
        for nb in [-1.0, 0.0, 0.5] {
            let p = choice_prob(&m, 1, Some(nb)).unwrap();
            assert!((p - 0.880_797_077_977_882_3).abs() < 1e-12);
        }
        assert!(choice_prob(&m, 0, None).is_err());
        assert!(choice_prob(&m, 1, Some(1.5)).is_err());
    }

    #[test]
    fn supercritical_equilibria() {
        let set = equilibria(&SdtModel::social(0.0, 1.0, 2.0).unwrap()).unwrap();
        let xs: Vec<f64> = set.points.iter().map(|e| e.x[0]).collect();
        assert_eq!(xs.len(), 3);
        assert!((xs[0] + TANH2_ROOT).abs() < 1e-12);
        assert!(xs[1].abs() < 1e-14);
        assert!((xs[2] - TANH2_ROOT).abs() < 1e-12);
        assert_eq!(set.points[1].stability, Stability::Unstable);
        assert_eq!(set.points[0].stability, Stability::Stable);
    }

    #[test]
    fn subcritical_single_point() {
        let set = equilibria(&SdtModel::social(0.0, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.points[0].stability, Stability::Stable);
    }

    #[test]
    fn biased_field_saturates() {
        let set = equilibria(&SdtModel::social(0.2, 1.0, 50.0).unwrap()).unwrap();
        assert_eq!(set.len(), 3);
        let top = set.points.last().unwrap();
        assert!(top.x[0] > 1.0 - 1e-12 && top.stability == Stability::Stable);
        assert!(set.points[0].x[0] < -1.0 + 1e-12);
        // the positive branch has the larger basin: the unstable point is negative
        assert!(set.points[1].x[0] < 0.0);
    }

    #[test]
    fn pitchfork_locations() {
        for (j, tol) in [(1.0, 1e-6), (2.0, 1e-6), (0.5, 1e-6), (0.001, 1e-3)] {
            let xi = pitchfork_critical_xi(j).unwrap();
            assert!((xi - 1.0 / j).abs() < tol, "J={j}: {xi}");
        }
        assert!(pitchfork_critical_xi(0.0).is_err());
        assert!(pitchfork_critical_xi(-1.0).is_err());
    }

    #[test]
    fn utility_values() {
        let z = SdtModel::social(0.0, 0.0, 1.0).unwrap();
        assert_eq!(utility(&z, 0.3, -0.2).unwrap(), 0.0);
        let m = SdtModel::new(
            SdtParams::new(
                SocialCoefficients {
                    k: 0.0,
                    h: 1.0,
                    f: 2.0,
                    j: 3.0,
                },
                1.0,
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(utility(&m, 1.0, 1.0).unwrap(), 6.0);
    }

    #[test]
    fn chicken_utility_matches_game() {
        let game = Game2x2::chicken_integer();
        let coeffs = gparams_to_sdt(&to_gparams(&game, Player::One));
        let m = SdtModel::new(SdtParams::new(coeffs, 1.0).unwrap()).unwrap();
        let (a, b) = (1.0 / 3.0, 1.0 / 3.0);
        let direct = game.expected_utility(Player::One, [a, b]);
        assert!((utility(&m, a, b).unwrap() - direct).abs() < 1e-12);
    }
}
