//! Fixed points of smooth self-maps on a box `[lo, hi]^D`, `D` in {1, 2}.
//!
//! [`find_all`] runs a multi-start search: every start is relaxed with the
//! damped iteration `x <- (1 - alpha) x + alpha f(x)` and then polished with
//! Newton's method on `x - f(x)`; every start is also handed to Newton
//! directly so that repelling fixed points are recovered. Stability is read
//! off the spectral radius of the map's Jacobian.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point<const D: usize> = SVector<f64, D>;
pub type Jacobian<const D: usize> = SMatrix<f64, D, D>;

/// Residual threshold for accepting a fixed point.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Points closer than this are treated as the same equilibrium.
pub const DEDUPE_TOL: f64 = 1e-6;
/// Spectral radii within this distance of one are labelled critical.
pub const CRITICAL_BAND: f64 = 1e-6;

pub trait SelfMap<const D: usize>: Sync {
    fn apply(&self, x: &Point<D>) -> Point<D>;
    fn jacobian(&self, x: &Point<D>) -> Jacobian<D>;
}

/// Adapts a pair of closures (map, Jacobian) into a [`SelfMap`].
pub struct FnMap<F, J> {
    f: F,
    j: J,
}

impl<F, J> FnMap<F, J> {
    pub fn new(f: F, j: J) -> Self {
        FnMap { f, j }
    }
}

impl<const D: usize, F, J> SelfMap<D> for FnMap<F, J>
where
    F: Fn(&Point<D>) -> Point<D> + Sync,
    J: Fn(&Point<D>) -> Jacobian<D> + Sync,
{
    fn apply(&self, x: &Point<D>) -> Point<D> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &Point<D>) -> Jacobian<D> {
        (self.j)(x)
    }
}

/// Scalar map with its derivative.
pub fn scalar_map<F, G>(f: F, df: G) -> impl SelfMap<1>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    FnMap::new(
        move |x: &Point<1>| Point::<1>::new(f(x[0])),
        move |x: &Point<1>| Jacobian::<1>::new(df(x[0])),
    )
}

pub struct FixedPointProblem<const D: usize, M> {
    pub map: M,
    pub lo: f64,
    pub hi: f64,
    /// Problem-specific starting points, used in addition to the grid.
    pub seeds: Vec<Point<D>>,
}

impl<const D: usize, M: SelfMap<D>> FixedPointProblem<D, M> {
    /// A problem on the default domain `[-1, 1]^D`.
    pub fn new(map: M) -> Self {
        Self::with_bounds(map, -1.0, 1.0)
    }

    pub fn with_bounds(map: M, lo: f64, hi: f64) -> Self {
        assert!(
            D == 1 || D == 2,
            "only one- and two-dimensional maps are supported"
        );
        assert!(lo < hi, "empty domain");
        FixedPointProblem {
            map,
            lo,
            hi,
            seeds: Vec::new(),
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<Point<D>>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn residual(&self, x: &Point<D>) -> f64 {
        (x - self.map.apply(x)).norm()
    }

    fn clamp(&self, x: Point<D>) -> Point<D> {
        x.map(|v| v.clamp(self.lo, self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Critical,
}

impl Stability {
    pub fn from_spectral_radius(rho: f64) -> Self {
        if (rho - 1.0).abs() <= CRITICAL_BAND {
            Stability::Critical
        } else if rho < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Critical => "critical",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<const D: usize> {
    pub x: Point<D>,
    pub stability: Stability,
    pub residual: f64,
    pub spectral_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet<const D: usize> {
    /// Sorted lexicographically by coordinate.
    pub points: Vec<Equilibrium<D>>,
    /// Starts that converged to nothing (excluded from `points`).
    pub failed_starts: usize,
}

impl<const D: usize> EquilibriumSet<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stable(&self) -> impl Iterator<Item = &Equilibrium<D>> {
        self.points
            .iter()
            .filter(|e| e.stability == Stability::Stable)
    }

    /// The equilibrium closest to `x` (Euclidean distance).
    pub fn nearest(&self, x: &Point<D>) -> Option<&Equilibrium<D>> {
        self.points
            .iter()
            .min_by(|a, b| (a.x - x).norm().total_cmp(&(b.x - x).norm()))
    }
}

/// Spectral radius of a 1x1 or 2x2 matrix.
pub fn spectral_radius<const D: usize>(m: &Jacobian<D>) -> f64 {
    match D {
        1 => m[(0, 0)].abs(),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = tr * tr / 4.0 - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
            } else {
                // complex pair, modulus sqrt(det)
                det.sqrt()
            }
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

/// Solves `a x = b` for 1x1 and 2x2 systems; `None` when singular.
pub fn solve_small<const D: usize>(a: &Jacobian<D>, b: &Point<D>) -> Option<Point<D>> {
    let mut x = Point::<D>::zeros();
    match D {
        1 => {
            if a[(0, 0)] == 0.0 {
                return None;
            }
            x[0] = b[0] / a[(0, 0)];
        }
        2 => {
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            x[0] = (b[0] * a[(1, 1)] - a[(0, 1)] * b[1]) / det;
            x[1] = (a[(0, 0)] * b[1] - a[(1, 0)] * b[0]) / det;
        }
        _ => unreachable!("dimension checked at construction"),
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindOptions {
    /// Grid points per dimension for the uniform start grid (0 disables it).
    pub grid: usize,
    pub alpha: f64,
    pub max_iter: usize,
    pub dedupe_tol: f64,
}

impl Default for FindOptions {
    fn default() -> Self {
        FindOptions {
            grid: 21,
            alpha: 0.5,
            max_iter: 10_000,
            dedupe_tol: DEDUPE_TOL,
        }
    }
}

fn grid_starts<const D: usize>(n: usize, lo: f64, hi: f64) -> Vec<Point<D>> {
    if n == 0 {
        return Vec::new();
    }
    let coord = |k: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let total = n.pow(D as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = Point::<D>::zeros();
            for d in 0..D {
                p[d] = coord(idx % n);
                idx /= n;
            }
            p
        })
        .collect()
}

/// Damped fixed-point iteration from `x0`.
pub fn relax<const D: usize, M: SelfMap<D>>(
    p: &FixedPointProblem<D, M>,
    x0: Point<D>,
    alpha: f64,
    max_iter: usize,
) -> Point<D> {
    let mut x = x0;
    for _ in 0..max_iter {
        let next = p.clamp(x * (1.0 - alpha) + p.map.apply(&x) * alpha);
        let step = (next - x).norm();
        x = next;
        if step < 1e-14 {
            break;
        }
    }
    x
}

/// Newton's method on `x - f(x) = 0` with backtracking, kept inside the box.
/// Returns the final point and its residual.
pub fn newton<const D: usize, M: SelfMap<D>>(
    p: &FixedPointProblem<D, M>,
    x0: Point<D>,
) -> Option<(Point<D>, f64)> {
    let mut x = x0;
    let mut r = x - p.map.apply(&x);
    let mut rn = r.norm();
    for _ in 0..100 {
        if rn < 1e-15 {
            break;
        }
        let a = Jacobian::<D>::identity() - p.map.jacobian(&x);
        let step = solve_small(&a, &(-r))?;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = p.clamp(x + step * t);
            let rc = cand - p.map.apply(&cand);
            let rcn = rc.norm();
            if rcn < rn {
                x = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some((x, rn))
}

fn classify<const D: usize, M: SelfMap<D>>(
    p: &FixedPointProblem<D, M>,
    x: Point<D>,
    residual: f64,
) -> Equilibrium<D> {
    let rho = spectral_radius(&p.map.jacobian(&x));
    Equilibrium {
        x,
        stability: Stability::from_spectral_radius(rho),
        residual,
        spectral_radius: rho,
    }
}

/// Finds every fixed point reachable from the start grid and the problem's
/// seeds. Fails only when no start converges.
pub fn find_all<const D: usize, M: SelfMap<D>>(
    p: &FixedPointProblem<D, M>,
    opts: &FindOptions,
) -> Result<EquilibriumSet<D>> {
    let mut starts = grid_starts::<D>(opts.grid, p.lo, p.hi);
    starts.extend(p.seeds.iter().map(|s| p.clamp(*s)));
    let total = starts.len();

    let mut candidates: Vec<(Point<D>, f64)> = Vec::with_capacity(2 * total);
    let mut failed = 0;
    for s in starts {
        let mut ok = false;
        let relaxed = relax(p, s, opts.alpha, opts.max_iter);
        for x0 in [relaxed, s] {
            if let Some((x, r)) = newton(p, x0) {
                if r < RESIDUAL_TOL {
                    candidates.push((x, r));
                    ok = true;
                }
            }
        }
        if !ok {
            failed += 1;
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoConvergence { failed, total });
    }

    // Near a degenerate root Newton stalls at scattered points that all pass the
    // residual test; two candidates whose connecting segment is flat within
    // tolerance are treated as one root.
    let same_root = |(u, ru): &(Point<D>, f64), x: &Point<D>, rx: f64| {
        let flat = (10.0 * ru.max(rx)).max(1e-13);
        (*u - *x).norm() < opts.dedupe_tol
            || [0.25, 0.5, 0.75]
                .iter()
                .all(|&t| p.residual(&(*u + (*x - *u) * t)) < flat)
    };
    let mut unique: Vec<(Point<D>, f64)> = Vec::new();
    for (x, r) in candidates {
        match unique.iter_mut().find(|slot| same_root(slot, &x, r)) {
            Some(slot) => {
                if r < slot.1 {
                    *slot = (x, r);
                }
            }
            None => unique.push((x, r)),
        }
    }
    unique.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(EquilibriumSet {
        points: unique.into_iter().map(|(x, r)| classify(p, x, r)).collect(),
        failed_starts: failed,
    })
}

/// Roots of a scalar function on `[lo, hi]` found by scanning `n` equal
/// intervals and bisecting every sign change. Interior local extrema of `|g|`
/// that touch zero between scan points (near-tangent double roots) are
/// located by golden-section search and split into two brackets.
pub fn bracket_roots(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo < hi);
    let xs: Vec<f64> = (0..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for k in 0..n {
        let (a, b, ga, gb) = (xs[k], xs[k + 1], gs[k], gs[k + 1]);
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if ga * gb < 0.0 {
            roots.push(bisect(&g, a, b, ga));
        } else if k + 2 <= n {
            // a sign-preserving dip between a and the next-but-one node
            let gc = gs[k + 2];
            let dips = (gb.abs() < ga.abs() && gb.abs() < gc.abs()) && gb * gc > 0.0;
            if dips {
                let m = golden_min(|x| gb.signum() * g(x), a, xs[k + 2]);
                let gm = g(m);
                if gm == 0.0 {
                    roots.push(m);
                } else if gm * gb < 0.0 {
                    roots.push(bisect(&g, a, m, ga));
                    roots.push(bisect(&g, m, xs[k + 2], gm));
                }
            }
        }
    }
    if gs[n] == 0.0 {
        roots.push(hi);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    roots
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    0.5 * (a + b)
}

fn golden_min(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while (b - a).abs() > 1e-13 * (1.0 + a.abs()) {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - R * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + R * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Region of a control plane by equilibrium count: `A` has one, `B` three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    Critical,
}

impl Region {
    pub fn from_count(n: usize) -> Self {
        match n {
            1 => Region::A,
            3 => Region::B,
            _ => Region::Critical,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::A => "A",
            Region::B => "B",
            Region::Critical => "critical",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldEvent {
    /// Grid values bracketing the change in equilibrium count.
    pub lo: f64,
    pub hi: f64,
    pub count_lo: usize,
    pub count_hi: usize,
    /// Bisection estimate of the fold, or the bracket midpoint when not refined.
    pub location: f64,
}

#[derive(Debug, Clone)]
pub struct Branch<const D: usize> {
    pub params: Vec<f64>,
    pub sets: Vec<EquilibriumSet<D>>,
    pub folds: Vec<FoldEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub find: FindOptions,
    /// Bisect each fold bracket down to this width.
    pub refine_tol: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            find: FindOptions::default(),
            refine_tol: Some(1e-6),
        }
    }
}

pub(crate) fn check_monotone(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "parameter grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "grid",
            "parameter grid has non-finite values",
        ));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if up || down {
        Ok(())
    } else {
        Err(Error::invalid(
            "grid",
            "parameter grid must be strictly monotone",
        ))
    }
}

fn solve_at<const D: usize, M, F>(
    family: &F,
    param: f64,
    opts: &FindOptions,
) -> Result<EquilibriumSet<D>>
where
    M: SelfMap<D>,
    F: Fn(f64) -> FixedPointProblem<D, M>,
{
    find_all(&family(param), opts).map_err(|e| Error::SweepFailed {
        param,
        source: Box::new(e),
    })
}

/// Bisects `[lo, hi]` until narrower than `tol`, keeping `lo` on the side
/// whose equilibrium count equals `count_lo`.
pub fn bisect_count<const D: usize, M, F>(
    family: &F,
    mut lo: f64,
    mut hi: f64,
    count_lo: usize,
    tol: f64,
    opts: &FindOptions,
) -> Result<f64>
where
    M: SelfMap<D>,
    F: Fn(f64) -> FixedPointProblem<D, M>,
{
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if solve_at(family, mid, opts)?.len() == count_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves a one-parameter family on every grid value and records the grid
/// brackets where the number of equilibria changes.
pub fn sweep<const D: usize, M, F>(
    family: F,
    grid: &[f64],
    opts: &SweepOptions,
) -> Result<Branch<D>>
where
    M: SelfMap<D>,
    F: Fn(f64) -> FixedPointProblem<D, M> + Sync,
{
    check_monotone(grid)?;
    let sets = grid
        .par_iter()
        .map(|&v| solve_at(&family, v, &opts.find))
        .collect::<Result<Vec<_>>>()?;

    let mut folds = Vec::new();
    for k in 1..grid.len() {
        let (c0, c1) = (sets[k - 1].len(), sets[k].len());
        if c0 == c1 {
            continue;
        }
        let (lo, hi) = (grid[k - 1], grid[k]);
        let location = match opts.refine_tol {
            Some(tol) => bisect_count(&family, lo, hi, c0, tol, &opts.find)?,
            None => 0.5 * (lo + hi),
        };
        folds.push(FoldEvent {
            lo,
            hi,
            count_lo: c0,
            count_hi: c1,
            location,
        });
    }
    Ok(Branch {
        params: grid.to_vec(),
        sets,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowOptions {
    pub find: FindOptions,
    pub alpha: f64,
    pub max_iter: usize,
    /// Minimum sup-norm displacement that counts as a jump.
    pub jump_threshold: f64,
    pub refine_tol: Option<f64>,
}

impl Default for FollowOptions {
    fn default() -> Self {
        FollowOptions {
            find: FindOptions::default(),
            alpha: 0.5,
            max_iter: 100_000,
            jump_threshold: 0.25,
            refine_tol: Some(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump<const D: usize> {
    /// Grid index of the first point after the jump.
    pub index: usize,
    pub param_before: f64,
    pub param_after: f64,
    /// Refined fold location inside `[param_before, param_after]`.
    pub location: f64,
    pub before: Point<D>,
    pub after: Point<D>,
}

#[derive(Debug, Clone)]
pub struct BranchPath<const D: usize> {
    pub params: Vec<f64>,
    pub states: Vec<Point<D>>,
    pub counts: Vec<usize>,
    pub jumps: Vec<Jump<D>>,
}

/// Follows the stable equilibrium occupied at `grid[0]` (the one whose basin
/// contains `start`) along the grid. Each step relaxes from the previous state
/// and snaps to the nearest stable fixed point. A jump is recorded when the
/// equilibrium count drops and the state moves by more than the threshold.
pub fn follow_branch<const D: usize, M, F>(
    family: F,
    grid: &[f64],
    start: Point<D>,
    opts: &FollowOptions,
) -> Result<BranchPath<D>>
where
    M: SelfMap<D>,
    F: Fn(f64) -> FixedPointProblem<D, M> + Sync,
{
    check_monotone(grid)?;
    let sets = grid
        .par_iter()
        .map(|&v| solve_at(&family, v, &opts.find))
        .collect::<Result<Vec<_>>>()?;

    let mut states = Vec::with_capacity(grid.len());
    let mut jumps = Vec::new();
    let mut x = start;
    for (k, &param) in grid.iter().enumerate() {
        let problem = family(param);
        let relaxed = relax(&problem, x, opts.alpha, opts.max_iter);
        let set = &sets[k];
        let snapped = set
            .stable()
            .min_by(|a, b| (a.x - relaxed).norm().total_cmp(&(b.x - relaxed).norm()))
            .or_else(|| set.nearest(&relaxed))
            .map(|e| e.x)
            .unwrap_or(relaxed);
        if k > 0 {
            let moved = (snapped - x).amax();
            if set.len() < sets[k - 1].len() && moved > opts.jump_threshold {
                let location = match opts.refine_tol {
                    Some(tol) => bisect_count(
                        &family,
                        grid[k - 1],
                        param,
                        sets[k - 1].len(),
                        tol,
                        &opts.find,
                    )?,
                    None => 0.5 * (grid[k - 1] + param),
                };
                jumps.push(Jump {
                    index: k,
                    param_before: grid[k - 1],
                    param_after: param,
                    location,
                    before: x,
                    after: snapped,
                });
            }
        }
        x = snapped;
        states.push(x);
    }
    Ok(BranchPath {
        params: grid.to_vec(),
        states,
        counts: sets.iter().map(|s| s.len()).collect(),
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_map(a: f64) -> FixedPointProblem<1, impl SelfMap<1>> {
        FixedPointProblem::new(scalar_map(
            move |x| (a * x).tanh(),
            move |x| a / (a * x).cosh().powi(2),
        ))
    }

    /// Positive root of x = tanh(a x), a > 1, by bisection.
    fn bisect_root(a: f64) -> f64 {
        let (mut lo, mut hi) = (1e-3, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - (a * mid).tanh() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn tanh_two_has_three_points() {
        let set = find_all(&tanh_map(2.0), &FindOptions::default()).unwrap();
        assert_eq!(set.len(), 3);
        let r = bisect_root(2.0);
        assert!((r - 0.957_504_024_077_268_7).abs() < 1e-12);
        assert!((set.points[0].x[0] + r).abs() < 1e-10);
        assert!(set.points[1].x[0].abs() < 1e-12);
        assert!((set.points[2].x[0] - r).abs() < 1e-10);
        assert_eq!(set.points[1].stability, Stability::Unstable);
        assert_eq!(set.points[0].stability, Stability::Stable);
        assert!(set.points.iter().all(|e| e.residual < RESIDUAL_TOL));
    }

    #[test]
    fn contractions_have_one_point() {
        let set = find_all(&tanh_map(0.5), &FindOptions::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.points[0].stability, Stability::Stable);

        let half = FixedPointProblem::new(scalar_map(|x| x / 2.0, |_| 0.5));
        let set = find_all(&half, &FindOptions::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.points[0].x[0].abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_cases() {
        assert_eq!(spectral_radius(&Jacobian::<1>::new(-1.5)), 1.5);
        let rot = Jacobian::<2>::new(0.0, -0.5, 0.5, 0.0);
        assert!((spectral_radius(&rot) - 0.5).abs() < 1e-15);
        let diag = Jacobian::<2>::new(0.2, 0.0, 0.0, -3.0);
        assert!((spectral_radius(&diag) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn pitchfork_fold_bracketed() {
        let grid: Vec<f64> = (0..=150).map(|k| 0.5 + 0.01 * k as f64).collect();
        let br = sweep(tanh_map, &grid, &SweepOptions::default()).unwrap();
        assert_eq!(br.folds.len(), 1);
        let f = br.folds[0];
        assert!(f.lo <= 1.0 && f.hi >= 1.0);
        assert_eq!((f.count_lo, f.count_hi), (1, 3));
        assert!((f.location - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_family_has_no_folds() {
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let br = sweep(
            |c| FixedPointProblem::new(scalar_map(move |_| 0.3 * c.sin(), |_| 0.0)),
            &grid,
            &SweepOptions::default(),
        )
        .unwrap();
        assert!(br.folds.is_empty());
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let err = sweep(tanh_map, &[0.5, 1.0, 0.7], &SweepOptions::default()).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn no_fixed_point_reports_failure() {
        // x -> x + 0.5 clamped has no fixed point inside the box interior
        // other than the boundary, and the boundary is not a root
        let p = FixedPointProblem::with_bounds(scalar_map(|x| x + 0.5, |_| 1.0), -1.0, 1.0);
        match find_all(&p, &FindOptions::default()) {
            Err(Error::NoConvergence { failed, total }) => assert_eq!(failed, total),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn following_through_a_fold_records_a_jump() {
        // x = tanh(3 x + h): ascending h from the lower branch jumps up
        let family = |h: f64| {
            FixedPointProblem::new(scalar_map(
                move |x| (3.0 * x + h).tanh(),
                move |x| 3.0 / (3.0 * x + h).cosh().powi(2),
            ))
        };
        let grid: Vec<f64> = (0..=400).map(|k| -2.0 + 0.01 * k as f64).collect();
        let path = follow_branch(
            family,
            &grid,
            Point::<1>::new(-1.0),
            &FollowOptions::default(),
        )
        .unwrap();
        assert_eq!(path.jumps.len(), 1);
        let j = &path.jumps[0];
        assert!(j.before[0] < 0.0 && j.after[0] > 0.0);
        // lower fold at tanh^2 = 2/3
        let xf = -(2.0f64 / 3.0).sqrt();
        assert!(
            (j.location - (xf.atanh() - 3.0 * xf)).abs() < 1e-5,
            "{}",
            j.location
        );
    }

    #[test]
    fn bracket_roots_finds_simple_and_near_double_roots() {
        let r = bracket_roots(|x| (x - 0.3) * (x + 0.2) * x, -1.0, 1.0, 10);
        assert_eq!(r.len(), 3);
        assert!(r
            .iter()
            .zip([-0.2, 0.0, 0.3])
            .all(|(a, b)| (a - b).abs() < 1e-14));
        // two roots 1e-4 apart inside one scan cell
        let r = bracket_roots(|x| (x - 0.5) * (x - 0.5001) + 0.0, 0.0, 1.0, 7);
        assert_eq!(r.len(), 2, "{r:?}");
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[1] - 0.5001).abs() < 1e-12);
    }
}
