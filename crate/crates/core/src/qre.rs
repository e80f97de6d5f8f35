//! Two-player logit quantal response equilibrium on a 2x2 game.
//!
//! Each player's mean strategy is `x^i = tanh(xi^i (g_self^i + g12^i x^-i))`.
//! The coupled map has one or three fixed points; the boundary between the
//! two regimes in the `(xi^1, xi^2)` plane is where `f1^1 f1^2 = 1`, with
//! `f1^i` the slope of player i's response in the opponent's mean.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::fixedpoint::{
    bracket_roots, find_all, EquilibriumSet, FindOptions, FixedPointProblem, FnMap, Jacobian,
    Point, Region, SelfMap, Stability,
};
use crate::game::{to_gparams, Choice, GParams, Game2x2, Player};
use crate::logit::softmax;

/// Scale of the inverse-noise axis.
///
/// `Canonical` uses the quarter-scaled coefficients of the payoff transform.
/// `Integer` multiplies the coefficients by four (for the integer Chicken game,
/// `tanh(xi (1 - 3x))`), so a value `xi` there equals `4 xi` canonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiConvention {
    #[default]
    Canonical,
    #[serde(rename = "eq45")]
    Integer,
}

impl XiConvention {
    pub fn to_canonical(self, xi: f64) -> f64 {
        match self {
            XiConvention::Canonical => xi,
            XiConvention::Integer => 4.0 * xi,
        }
    }

    pub fn from_canonical(self, xi: f64) -> f64 {
        match self {
            XiConvention::Canonical => xi,
            XiConvention::Integer => xi / 4.0,
        }
    }
}

/// One player's logit response `x -> tanh(xi (s + c x))` to the opponent mean
/// `x`, with `s = g_self` and `c = g12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Responder {
    pub s: f64,
    pub c: f64,
}

fn sech2(z: f64) -> f64 {
    let ch = z.cosh();
    1.0 / (ch * ch)
}

impl Responder {
    pub fn from_gparams(g: &GParams) -> Self {
        Responder {
            s: g.g_self,
            c: g.g12,
        }
    }

    pub fn arg(&self, x: f64) -> f64 {
        self.s + self.c * x
    }

    pub fn value(&self, x: f64, xi: f64) -> f64 {
        (xi * self.arg(x)).tanh()
    }

    /// Slope in the opponent mean.
    pub fn f1(&self, x: f64, xi: f64) -> f64 {
        xi * self.c * sech2(xi * self.arg(x))
    }

    /// Slope in the player's own inverse noise.
    pub fn f2(&self, x: f64, xi: f64) -> f64 {
        self.arg(x) * sech2(xi * self.arg(x))
    }

    pub fn df1_dx(&self, x: f64, xi: f64) -> f64 {
        let z = xi * self.arg(x);
        -2.0 * xi * xi * self.c * self.c * sech2(z) * z.tanh()
    }

    pub fn df1_dxi(&self, x: f64, xi: f64) -> f64 {
        let u = self.arg(x);
        let z = xi * u;
        self.c * sech2(z) * (1.0 - 2.0 * z.tanh() * z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QreModel {
    pub game: Game2x2,
    pub gparams: [GParams; 2],
    pub xi: [f64; 2],
}

impl QreModel {
    pub fn new(game: Game2x2, xi: [f64; 2]) -> Result<Self> {
        game.validate()?;
        ensure_non_negative("xi1", xi[0])?;
        ensure_non_negative("xi2", xi[1])?;
        let gparams = [
            to_gparams(&game, Player::One),
            to_gparams(&game, Player::Two),
        ];
        Ok(QreModel { game, gparams, xi })
    }

    pub fn with_xi(&self, xi: [f64; 2]) -> Result<Self> {
        Self::new(self.game, xi)
    }

    pub fn responder(&self, player: Player) -> Responder {
        Responder::from_gparams(&self.gparams[player.index()])
    }

    pub fn responders(&self) -> [Responder; 2] {
        [self.responder(Player::One), self.responder(Player::Two)]
    }

    /// The coupled response map on `(x^1, x^2)` with its Jacobian.
    pub fn map(&self) -> impl SelfMap<2> {
        let [r1, r2] = self.responders();
        let [xi1, xi2] = self.xi;
        FnMap::new(
            move |x: &Point<2>| Point::<2>::new(r1.value(x[1], xi1), r2.value(x[0], xi2)),
            move |x: &Point<2>| Jacobian::<2>::new(0.0, r1.f1(x[1], xi1), r2.f1(x[0], xi2), 0.0),
        )
    }

    /// Fixed-point problem seeded with the roots of the composite
    /// `x^1 - f^1(f^2(x^1))`, so that every equilibrium has a nearby start.
    pub fn problem(&self) -> FixedPointProblem<2, impl SelfMap<2>> {
        let [r1, r2] = self.responders();
        let [xi1, xi2] = self.xi;
        let composite = |x1: f64| x1 - r1.value(r2.value(x1, xi2), xi1);
        let seeds = bracket_roots(composite, -1.0, 1.0, 400)
            .into_iter()
            .map(|x1| Point::<2>::new(x1, r2.value(x1, xi2)))
            .collect();
        FixedPointProblem::new(self.map()).with_seeds(seeds)
    }

    /// `|f1^1 f1^2 - 1|` at `x`.
    pub fn fold_residual(&self, x: &Point<2>) -> f64 {
        let [r1, r2] = self.responders();
        (r1.f1(x[1], self.xi[0]) * r2.f1(x[0], self.xi[1]) - 1.0).abs()
    }
}

fn check_mean(m: f64) -> Result<()> {
    ensure_finite("opponent_mean", m)?;
    if !(-1.0..=1.0).contains(&m) {
        return Err(Error::invalid(
            "opponent_mean",
            format!("must lie in [-1, 1], got {m}"),
        ));
    }
    Ok(())
}

/// Expected utility of `own` choice against opponent mean `m`:
/// `g0 + s g_self + m g_other + s m g12` with `s` the choice sign.
pub fn conditional_utility(
    m: &QreModel,
    player: Player,
    own: Choice,
    opponent_mean: f64,
) -> Result<f64> {
    check_mean(opponent_mean)?;
    let g = &m.gparams[player.index()];
    let s = own.sign();
    Ok(g.g0 + s * g.g_self + opponent_mean * g.g_other + s * opponent_mean * g.g12)
}

/// Logit probabilities `[p(first), p(second)]` over the conditional utilities.
pub fn choice_probs(m: &QreModel, player: Player, opponent_mean: f64) -> Result<[f64; 2]> {
    let v = [
        conditional_utility(m, player, Choice::First, opponent_mean)?,
        conditional_utility(m, player, Choice::Second, opponent_mean)?,
    ];
    let p = softmax(&v, m.xi[player.index()]);
    Ok([p[0], p[1]])
}

/// Mean strategy `tanh(xi (g_self + g12 m))` of `player` against opponent mean `m`.
pub fn qre_response(m: &QreModel, player: Player, opponent_mean: f64) -> Result<f64> {
    check_mean(opponent_mean)?;
    Ok(m.responder(player)
        .value(opponent_mean, m.xi[player.index()]))
}

pub(crate) fn qre_find_options() -> FindOptions {
    FindOptions {
        grid: 5,
        max_iter: 2_000,
        ..FindOptions::default()
    }
}

/// All fixed points of the coupled response map.
pub fn qre_equilibria(m: &QreModel) -> Result<EquilibriumSet<2>> {
    find_all(&m.problem(), &qre_find_options())
}

pub fn region(m: &QreModel) -> Result<Region> {
    Ok(Region::from_count(qre_equilibria(m)?.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub xi: [f64; 2],
    /// The merging pair's common location on the equilibrium surface.
    pub x: [f64; 2],
    pub residual: f64,
    pub fold_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    /// Points ordered along the curve.
    pub points: Vec<CriticalPoint>,
}

impl CriticalSet {
    /// Values of the free coordinate where the line `xi^other = value`
    /// crosses the polyline, by linear interpolation between neighbours.
    pub fn crossings(&self, fixed: Player, value: f64) -> Vec<f64> {
        let (k, free) = (fixed.index(), fixed.other().index());
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (w[0].xi, w[1].xi);
            let (da, db) = (a[k] - value, b[k] - value);
            if da == 0.0 {
                out.push(a[free]);
            } else if da * db < 0.0 {
                let t = da / (da - db);
                out.push(a[free] + t * (b[free] - a[free]));
            }
        }
        if let Some(last) = self.points.last() {
            if last.xi[k] == value {
                out.push(last.xi[free]);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Euclidean distance from `xi` to the polyline.
    pub fn distance(&self, xi: [f64; 2]) -> f64 {
        let seg = |a: [f64; 2], b: [f64; 2]| {
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((xi[0] - a[0]) * d[0] + (xi[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            };
            let p = [a[0] + t * d[0], a[1] + t * d[1]];
            ((xi[0] - p[0]).powi(2) + (xi[1] - p[1]).powi(2)).sqrt()
        };
        match self.points.len() {
            0 => f64::INFINITY,
            1 => seg(self.points[0].xi, self.points[0].xi),
            _ => self
                .points
                .windows(2)
                .map(|w| seg(w[0].xi, w[1].xi))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CriticalOutcome {
    /// `|g_self| >= |g12|` for this player, so the sweep cannot find
    /// multiple equilibria.
    NoComplementarity {
        player: Player,
    },
    Curve(CriticalSet),
}

impl CriticalOutcome {
    pub fn points(&self) -> &[CriticalPoint] {
        match self {
            CriticalOutcome::Curve(c) => &c.points,
            CriticalOutcome::NoComplementarity { .. } => &[],
        }
    }
}

/// Tolerance on the fixed-point and fold residuals of an emitted point.
pub const CRITICAL_TOL: f64 = 1e-8;

/// Traces the critical set over the rectangle spanned by the two grids.
///
/// The grid is swept for count changes between neighbouring nodes; each such
/// edge seeds a Newton solve of the augmented system
/// `{x1 = f^1(x2), x2 = f^2(x1), f1^1 f1^2 = 1}` in `(x1, x2, xi)`, with the
/// edge's varying coordinate left free.
pub fn critical_set(game: &Game2x2, xi1: &[f64], xi2: &[f64]) -> Result<CriticalOutcome> {
    let base = QreModel::new(*game, [0.0, 0.0])?;
    for p in Player::BOTH {
        if !base.gparams[p.index()].admits_three_equilibria() {
            return Ok(CriticalOutcome::NoComplementarity { player: p });
        }
    }
    for (name, grid) in [("xi1", xi1), ("xi2", xi2)] {
        crate::fixedpoint::check_monotone(grid)
            .map_err(|_| Error::invalid(name, "grid must be strictly monotone"))?;
        if grid.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid(name, "inverse noise must be >= 0"));
        }
    }

    let (n1, n2) = (xi1.len(), xi2.len());
    let sets: Vec<EquilibriumSet<2>> = (0..n1 * n2)
        .into_par_iter()
        .map(|idx| qre_equilibria(&base.with_xi([xi1[idx / n2], xi2[idx % n2]])?))
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize| &sets[i * n2 + j];

    // (fixed coordinate index, fixed value, free lo, free hi, seed state)
    let mut seeds: Vec<(usize, f64, f64, f64, Point<2>)> = Vec::new();
    let mut push_edge = |free: usize,
                         fixed_val: f64,
                         lo: f64,
                         hi: f64,
                         a: &EquilibriumSet<2>,
                         b: &EquilibriumSet<2>| {
        if a.len() == b.len() {
            return;
        }
        let multi = if a.len() > b.len() { a } else { b };
        if let Some(seed) = fold_seed(multi) {
            seeds.push((1 - free, fixed_val, lo, hi, seed));
        }
    };
    for i in 0..n1 {
        for j in 0..n2 {
            if i + 1 < n1 {
                push_edge(0, xi2[j], xi1[i], xi1[i + 1], at(i, j), at(i + 1, j));
            }
            if j + 1 < n2 {
                push_edge(1, xi1[i], xi2[j], xi2[j + 1], at(i, j), at(i, j + 1));
            }
        }
    }

    let [r1, r2] = base.responders();
    let mut points: Vec<CriticalPoint> = seeds
        .par_iter()
        .filter_map(|&(fixed, val, lo, hi, x)| {
            let width = (hi - lo).abs();
            let cp = solve_fold(r1, r2, fixed, val, x, 0.5 * (lo + hi))?;
            let free = cp.xi[1 - fixed];
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            (free >= lo - width && free <= hi + width).then_some(cp)
        })
        .collect();

    points.sort_by(|a, b| {
        a.xi[0]
            .total_cmp(&b.xi[0])
            .then(a.xi[1].total_cmp(&b.xi[1]))
    });
    points.dedup_by(|a, b| (a.xi[0] - b.xi[0]).abs() < 1e-9 && (a.xi[1] - b.xi[1]).abs() < 1e-9);
    Ok(CriticalOutcome::Curve(CriticalSet {
        points: order_along_curve(points),
    }))
}

/// Midpoint between the unstable equilibrium and its nearest stable
/// neighbour: the pair that merges at the fold.
fn fold_seed(set: &EquilibriumSet<2>) -> Option<Point<2>> {
    let u = set
        .points
        .iter()
        .find(|e| e.stability != Stability::Stable)?;
    let s = set
        .stable()
        .min_by(|a, b| (a.x - u.x).norm().total_cmp(&(b.x - u.x).norm()))?;
    Some((u.x + s.x) * 0.5)
}

pub(crate) fn solve_fold(
    r1: Responder,
    r2: Responder,
    fixed: usize,
    fixed_val: f64,
    x0: Point<2>,
    xi0: f64,
) -> Option<CriticalPoint> {
    let free = 1 - fixed;
    let mut v = Vector3::new(x0[0], x0[1], xi0);
    let xi_of = |v: &Vector3<f64>| {
        let mut xi = [0.0; 2];
        xi[fixed] = fixed_val;
        xi[free] = v[2];
        xi
    };
    let eval = |v: &Vector3<f64>| {
        let xi = xi_of(v);
        let (a, b) = (r1.f1(v[1], xi[0]), r2.f1(v[0], xi[1]));
        Vector3::new(
            v[0] - r1.value(v[1], xi[0]),
            v[1] - r2.value(v[0], xi[1]),
            a * b - 1.0,
        )
    };
    let mut f = eval(&v);
    for _ in 0..100 {
        if f.amax() < 1e-14 {
            break;
        }
        let xi = xi_of(&v);
        let (x1, x2) = (v[0], v[1]);
        let (a, b) = (r1.f1(x2, xi[0]), r2.f1(x1, xi[1]));
        let (da_dx2, db_dx1) = (r1.df1_dx(x2, xi[0]), r2.df1_dx(x1, xi[1]));
        let mut jac = Matrix3::new(
            1.0,
            -a,
            0.0, //
            -b,
            1.0,
            0.0, //
            a * db_dx1,
            b * da_dx2,
            0.0,
        );
        // column for the free inverse-noise coordinate
        if free == 0 {
            jac[(0, 2)] = -r1.f2(x2, xi[0]);
            jac[(2, 2)] = b * r1.df1_dxi(x2, xi[0]);
        } else {
            jac[(1, 2)] = -r2.f2(x1, xi[1]);
            jac[(2, 2)] = a * r2.df1_dxi(x1, xi[1]);
        }
        let step = jac.lu().solve(&(-f))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = v + step * t;
            if cand[2] > 0.0 && cand[0].abs() <= 1.0 && cand[1].abs() <= 1.0 {
                let fc = eval(&cand);
                if fc.norm() < f.norm() {
                    v = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = (f[0] * f[0] + f[1] * f[1]).sqrt();
    let fold_residual = f[2].abs();
    (residual < CRITICAL_TOL && fold_residual < CRITICAL_TOL).then(|| CriticalPoint {
        xi: xi_of(&v),
        x: [v[0], v[1]],
        residual,
        fold_residual,
    })
}

/// Greedy nearest-neighbour chaining from an extreme point.
fn order_along_curve(mut pts: Vec<CriticalPoint>) -> Vec<CriticalPoint> {
    if pts.len() < 3 {
        return pts;
    }
    let d = |a: &CriticalPoint, b: &CriticalPoint| (a.xi[0] - b.xi[0]).hypot(a.xi[1] - b.xi[1]);
    let far_from = |pts: &[CriticalPoint], p: &CriticalPoint| {
        (0..pts.len())
            .max_by(|&i, &j| d(&pts[i], p).total_cmp(&d(&pts[j], p)))
            .unwrap()
    };
    let first = pts[0];
    let start = far_from(&pts, &first);
    let mut ordered = vec![pts.swap_remove(start)];
    while !pts.is_empty() {
        let last = *ordered.last().unwrap();
        let next = (0..pts.len())
            .min_by(|&i, &j| d(&pts[i], &last).total_cmp(&d(&pts[j], &last)))
            .unwrap();
        ordered.push(pts.swap_remove(next));
    }
    ordered
}
