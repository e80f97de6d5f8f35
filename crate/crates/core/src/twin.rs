//! Two coupled markets, each a logit responder to the other's mean state.
//! Moving one market's inverse noise across the fold of the joint
//! equilibrium surface drags both markets into a discontinuous collapse.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::fixedpoint::{
    follow_branch, EquilibriumSet, FixedPointProblem, FollowOptions, Point, SelfMap, RESIDUAL_TOL,
};
use crate::game::{Game2x2, Player};
use crate::qre::{qre_equilibria, qre_find_options, QreModel};

/// Fold proximity below which the sensitivity matrix is flagged.
pub const NEAR_FOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledMarkets {
    pub model: QreModel,
}

impl CoupledMarkets {
    pub fn new(game: Game2x2, xi: [f64; 2]) -> Result<Self> {
        Ok(CoupledMarkets {
            model: QreModel::new(game, xi)?,
        })
    }

    fn at_xi(&self, xi: [f64; 2]) -> QreModel {
        QreModel {
            xi,
            ..self.model.clone()
        }
    }
}

/// Joint equilibria of the two markets: the fixed points of the coupled QRE map.
pub fn joint_equilibria(c: &CoupledMarkets) -> Result<EquilibriumSet<2>> {
    qre_equilibria(&c.model)
}

/// `d(x^1, x^2) / d(xi^1, xi^2)` at a joint equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub matrix: [[f64; 2]; 2],
    /// `|f1^1 f1^2 - 1|`; the matrix diverges as this goes to zero.
    pub fold_residual: f64,
    pub near_singular: bool,
}

impl Sensitivity {
    pub fn max_abs(&self) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Implicit-function sensitivity of the joint equilibrium:
/// `1 / (1 - f1^1 f1^2) [[f2^1, f1^1 f2^2], [f1^2 f2^1, f2^2]]`, where `f1^i`
/// is market i's response slope in the other market's state and `f2^i` its
/// slope in its own inverse noise.
pub fn jacobian(c: &CoupledMarkets, x: [f64; 2]) -> Result<Sensitivity> {
    ensure_finite("x1", x[0])?;
    ensure_finite("x2", x[1])?;
    let m = &c.model;
    let p = Point::<2>::new(x[0], x[1]);
    let residual = (p - m.map().apply(&p)).norm();
    if residual >= RESIDUAL_TOL {
        return Err(Error::NotEquilibrium { residual });
    }
    let [r1, r2] = m.responders();
    let [xi1, xi2] = m.xi;
    let (a, b) = (r1.f1(x[1], xi1), r2.f1(x[0], xi2));
    let (f2a, f2b) = (r1.f2(x[1], xi1), r2.f2(x[0], xi2));
    let fold = a * b - 1.0;
    let k = 1.0 / (1.0 - a * b);
    Ok(Sensitivity {
        matrix: [[k * f2a, k * a * f2b], [k * b * f2a, k * f2b]],
        fold_residual: fold.abs(),
        near_singular: fold.abs() < NEAR_FOLD,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(alias = "up")]
    Ascending,
    #[serde(alias = "down")]
    Descending,
}

/// Stable equilibrium the swept market starts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartBranch {
    /// Largest state of the swept market.
    High,
    /// Smallest state of the swept market.
    Low,
    /// Stable equilibrium nearest to the given state.
    Near([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    /// Index into the sweep grid of the first post-jump point.
    pub index: usize,
    pub xi_before: f64,
    pub xi_after: f64,
    /// Fold location refined inside `[xi_before, xi_after]`.
    pub location: f64,
    pub before: [f64; 2],
    pub after: [f64; 2],
    /// Which markets moved by more than the jump threshold.
    pub markets: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub swept: Player,
    pub fixed_xi: f64,
    pub direction: Direction,
    /// Swept values in sweep order.
    pub grid: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    pub counts: Vec<usize>,
    pub jumps: Vec<JumpEvent>,
    pub jump_threshold: f64,
}

impl SweepResult {
    /// Grid indices where `market`'s state moves by more than the threshold
    /// between consecutive points.
    pub fn jump_cells(&self, market: Player) -> Vec<usize> {
        let i = market.index();
        (1..self.states.len())
            .filter(|&k| (self.states[k][i] - self.states[k - 1][i]).abs() > self.jump_threshold)
            .collect()
    }

    /// Whether a jump occurred at grid index `k`.
    pub fn jumped_at(&self, k: usize) -> bool {
        self.jumps.iter().any(|j| j.index == k)
    }
}

/// Sweeps `swept`'s inverse noise over `grid` in `direction`, holding the
/// other market at its current value, and follows the occupied stable branch.
pub fn one_sided_sweep(
    c: &CoupledMarkets,
    swept: Player,
    grid: &[f64],
    direction: Direction,
    start: StartBranch,
) -> Result<SweepResult> {
    let mut grid = grid.to_vec();
    if grid.is_empty() {
        return Err(Error::invalid("grid", "sweep grid is empty"));
    }
    for &v in &grid {
        ensure_finite("grid", v)?;
        if v < 0.0 {
            return Err(Error::invalid(
                "grid",
                format!("inverse noise must be >= 0, got {v}"),
            ));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if direction == Direction::Descending {
        grid.reverse();
    }
    let s = swept.index();
    let fixed_xi = c.model.xi[1 - s];
    let xi_at = |v: f64| {
        let mut xi = c.model.xi;
        xi[s] = v;
        xi
    };

    let first = qre_equilibria(&c.at_xi(xi_at(grid[0])))?;
    let stable: Vec<Point<2>> = first.stable().map(|e| e.x).collect();
    let pick = match start {
        StartBranch::High => stable.iter().max_by(|a, b| a[s].total_cmp(&b[s])),
        StartBranch::Low => stable.iter().min_by(|a, b| a[s].total_cmp(&b[s])),
        StartBranch::Near(p) => {
            let p = Point::<2>::new(p[0], p[1]);
            stable
                .iter()
                .min_by(|a, b| (*a - p).norm().total_cmp(&(*b - p).norm()))
        }
    };
    let start_x = *pick.ok_or(Error::NoConvergence {
        failed: first.failed_starts,
        total: first.len(),
    })?;

    let opts = FollowOptions {
        find: qre_find_options(),
        ..FollowOptions::default()
    };
    let family = |v: f64| -> FixedPointProblem<2, _> { c.at_xi(xi_at(v)).problem() };
    let path = follow_branch(family, &grid, start_x, &opts)?;

    let jumps = path
        .jumps
        .iter()
        .map(|j| JumpEvent {
            index: j.index,
            xi_before: j.param_before,
            xi_after: j.param_after,
            location: j.location,
            before: [j.before[0], j.before[1]],
            after: [j.after[0], j.after[1]],
            markets: [0, 1].map(|i| (j.after[i] - j.before[i]).abs() > opts.jump_threshold),
        })
        .collect();
    Ok(SweepResult {
        swept,
        fixed_xi,
        direction,
        grid,
        states: path.states.iter().map(|x| [x[0], x[1]]).collect(),
        counts: path.counts,
        jumps,
        jump_threshold: opts.jump_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::Stability;
    use crate::game::TsPoint;

    fn chicken(xi: [f64; 2]) -> CoupledMarkets {
        CoupledMarkets::new(Game2x2::chicken_integer(), xi).unwrap()
    }

    #[test]
    fn zero_noise_sensitivity_is_diagonal() {
        let c = chicken([0.0, 0.0]);
        let s = jacobian(&c, [0.0, 0.0]).unwrap();
        assert_eq!(s.matrix, [[0.25, 0.0], [0.0, 0.25]]);
        assert!(!s.near_singular);
        assert!(jacobian(&c, [0.5, 0.0]).is_err());
    }

    #[test]
    fn symmetric_point_gives_swap_symmetric_matrix() {
        let c = chicken([1.5, 1.5]);
        let set = joint_equilibria(&c).unwrap();
        let sym = set
            .points
            .iter()
            .find(|e| (e.x[0] - e.x[1]).abs() < 1e-12)
            .unwrap();
        let m = jacobian(&c, [sym.x[0], sym.x[1]]).unwrap().matrix;
        assert!((m[0][0] - m[1][1]).abs() < 1e-12 && (m[0][1] - m[1][0]).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_matches_finite_differences() {
        let c = chicken([2.0, 0.7]);
        let set = joint_equilibria(&c).unwrap();
        let e = &set.points[0];
        let s = jacobian(&c, [e.x[0], e.x[1]]).unwrap();
        let h = 1e-6;
        for col in 0..2 {
            let mut up = c.model.xi;
            let mut dn = c.model.xi;
            up[col] += h;
            dn[col] -= h;
            let near = |xi: [f64; 2]| {
                let set =
                    joint_equilibria(&CoupledMarkets::new(Game2x2::chicken_integer(), xi).unwrap())
                        .unwrap();
                set.nearest(&e.x).unwrap().x
            };
            let d = (near(up) - near(dn)) / (2.0 * h);
            for row in 0..2 {
                assert!(
                    (d[row] - s.matrix[row][col]).abs() < 1e-6,
                    "{row}{col}: {} vs {}",
                    d[row],
                    s.matrix[row][col]
                );
            }
        }
    }

    #[test]
    fn sensitivity_blows_up_near_fold() {
        let [r1, r2] = chicken([0.0, 0.0]).model.responders();
        let fold = crate::qre::solve_fold(r1, r2, 1, 2.0, Point::<2>::new(0.5, -0.3), 1.2).unwrap();
        let c = chicken([fold.xi[0] + 1e-10, 2.0]);
        let set = joint_equilibria(&c).unwrap();
        let e = set.nearest(&Point::<2>::new(fold.x[0], fold.x[1])).unwrap();
        let s = jacobian(&c, [e.x[0], e.x[1]]).unwrap();
        assert!(s.max_abs() > 1e3, "{s:?}");
    }

    #[test]
    fn descending_sweep_co_collapses() {
        let c = chicken([0.0, 3.0]);
        let grid: Vec<f64> = (0..=800).map(|k| 0.005 * k as f64).collect();
        let down = one_sided_sweep(
            &c,
            Player::One,
            &grid,
            Direction::Descending,
            StartBranch::High,
        )
        .unwrap();
        assert_eq!(down.jumps.len(), 1);
        let j = &down.jumps[0];
        assert_eq!(j.markets, [true, true]);
        assert_eq!(down.jump_cells(Player::One), down.jump_cells(Player::Two));
        assert!(j.before[0] > 0.0 && j.after[0] < 0.0 && j.before[1] < 0.0 && j.after[1] > 0.0);
        let up = one_sided_sweep(
            &c,
            Player::One,
            &grid,
            Direction::Ascending,
            StartBranch::High,
        )
        .unwrap();
        assert!(up.jumps.is_empty());
        // landing point is a stable equilibrium of the post-jump model
        let post = joint_equilibria(
            &CoupledMarkets::new(Game2x2::chicken_integer(), [j.xi_after, 3.0]).unwrap(),
        )
        .unwrap();
        let e = post
            .nearest(&Point::<2>::new(j.after[0], j.after[1]))
            .unwrap();
        assert_eq!(e.stability, Stability::Stable);
        assert!(e.residual < 1e-10);
    }

    #[test]
    fn uniform_opponent_gives_no_jumps() {
        let c = chicken([0.0, 0.0]);
        let grid: Vec<f64> = (0..=80).map(|k| 0.05 * k as f64).collect();
        for dir in [Direction::Ascending, Direction::Descending] {
            let r = one_sided_sweep(&c, Player::One, &grid, dir, StartBranch::High).unwrap();
            assert!(r.jumps.is_empty());
            assert!(r.counts.iter().all(|&n| n == 1));
        }
    }

    #[test]
    fn two_crossing_game_has_hysteresis_loop() {
        let g = Game2x2::from_ts(TsPoint { t: 2.9, s: 0.1 });
        let c = CoupledMarkets::new(g, [0.0, 3.0]).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|k| 0.005 * k as f64).collect();
        let up = one_sided_sweep(
            &c,
            Player::One,
            &grid,
            Direction::Ascending,
            StartBranch::High,
        )
        .unwrap();
        let down = one_sided_sweep(
            &c,
            Player::One,
            &grid,
            Direction::Descending,
            StartBranch::High,
        )
        .unwrap();
        assert_eq!(up.jumps.len(), 1);
        assert_eq!(down.jumps.len(), 1);
        assert!(down.jumps[0].location < up.jumps[0].location - 0.3);
    }
}
