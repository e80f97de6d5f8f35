//! Invariant suites: each check recomputes a property with an independent
//! oracle from [`oracle`] and reports pass or fail with the measured value.

pub mod oracle;

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abm::{self, AbmConfig};
use crate::cusp::{self, CuspControl, SdeConfig, StationaryDensity};
use crate::error::Result;
use crate::fixedpoint::{
    find_all, follow_branch, newton, scalar_map, sweep, FindOptions, FixedPointProblem,
    FollowOptions, Point, Region, SelfMap, Stability, SweepOptions,
};
use crate::game::{
    classify_ts, gparams_to_sdt, is_pure_nash, pure_nash, sdt_to_payoffs, to_gparams,
    weakly_prefers, Choice, Game2x2, GameKind, PayoffVector, Player, Profile, TsPoint,
};
use crate::logit::{logit_probs, sample_gumbel_argmax, ChoiceProblem};
use crate::qre::{self, critical_set, qre_equilibria, CriticalOutcome, QreModel};
use crate::sdt::{self, SdtModel};
use crate::twin::{self, CoupledMarkets, Direction, StartBranch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Game,
    Logit,
    Fixedpoint,
    Sdt,
    Qre,
    Cusp,
    Twin,
    Abm,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Game,
        Suite::Logit,
        Suite::Fixedpoint,
        Suite::Sdt,
        Suite::Qre,
        Suite::Cusp,
        Suite::Twin,
        Suite::Abm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Game => "game",
            Suite::Logit => "logit",
            Suite::Fixedpoint => "fixedpoint",
            Suite::Sdt => "sdt",
            Suite::Qre => "qre",
            Suite::Cusp => "cusp",
            Suite::Twin => "twin",
            Suite::Abm => "abm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} ({:.2}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type CheckFn = fn(u64) -> Result<(bool, String)>;

fn checks_for(suite: Suite) -> Vec<(&'static str, CheckFn)> {
    match suite {
        Suite::Game => vec![
            ("round_trip", game_round_trip),
            ("expected_utility_equivalence", game_eu_equivalence),
            ("pure_nash_vs_deviation", game_nash_oracle),
            ("ts_quadrants", game_ts_quadrants),
            ("ts_boundary_crossing", game_ts_crossing),
            ("ordinal_consistency", game_ordinal),
        ],
        Suite::Logit => vec![
            ("gumbel_monte_carlo", logit_monte_carlo),
            ("translation_invariance", logit_translation),
            ("monotonicity", logit_monotone),
            ("limits", logit_limits),
        ],
        Suite::Fixedpoint => vec![
            ("scan_oracle_1d", fp_oracle_1d),
            ("grid_oracle_2d", fp_oracle_2d),
            ("perturbation_stability", fp_stability),
            ("finer_grid_keeps_folds", fp_fold_refinement),
            ("gradient_map_folds", fp_gradient_folds),
        ],
        Suite::Sdt => vec![
            ("pitchfork_location", sdt_pitchfork),
            ("equilibrium_count", sdt_counts),
            ("odd_symmetry", sdt_symmetry),
            ("hysteresis_in_h", sdt_hysteresis),
            ("choice_prob_is_logit", sdt_logit),
            ("utility_partials", sdt_partials),
        ],
        Suite::Qre => vec![
            ("critical_residuals", qre_critical_residuals),
            ("count_partition", qre_partition),
            ("nash_limit", qre_nash_limit),
            ("response_logit_chain", qre_chain),
            ("diagonal_single_fold", qre_diagonal),
        ],
        Suite::Cusp => vec![
            ("discriminant_vs_roots", cusp_discriminant),
            ("critical_curve", cusp_curve),
            ("density_normalization", cusp_normalization),
            ("density_extrema_are_roots", cusp_extrema),
            ("sde_histogram", cusp_sde),
        ],
        Suite::Twin => vec![
            ("co_collapse_synchrony", twin_synchrony),
            ("jacobian_vs_differences", twin_jacobian),
            ("jump_endpoints_stable", twin_endpoints),
            ("hysteresis_vs_crossings", twin_hysteresis),
        ],
        Suite::Abm => vec![
            ("mean_field_consistency", abm_mean_field),
            ("aggregation_identity", abm_aggregation),
            ("seed_determinism", abm_determinism),
            ("price_martingale", abm_martingale),
        ],
    }
}

/// Runs the listed suites, calling `on_check` as each check finishes.
pub fn run(suites: &[Suite], seed: u64, mut on_check: impl FnMut(&Check)) -> Report {
    let mut report = Report::default();
    for &suite in suites {
        for (name, f) in checks_for(suite) {
            let t0 = Instant::now();
            let (passed, detail) = match f(seed) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            let check = Check {
                suite: suite.name().to_string(),
                name: name.to_string(),
                passed,
                detail,
                seconds: t0.elapsed().as_secs_f64(),
            };
            on_check(&check);
            report.checks.push(check);
        }
    }
    report
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_game(r: &mut impl Rng) -> Game2x2 {
    let mut m = || {
        [
            [r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)],
            [r.random_range(-10.0..10.0), r.random_range(-10.0..10.0)],
        ]
    };
    Game2x2 { p1: m(), p2: m() }
}

fn max_abs_diff(a: &PayoffVector, b: &PayoffVector) -> f64 {
    a.as_array()
        .iter()
        .zip(b.as_array())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---- game ----

fn game_round_trip(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let g = random_game(&mut r);
        for p in Player::BOTH {
            let back = sdt_to_payoffs(&gparams_to_sdt(&to_gparams(&g, p)));
            worst = worst.max(max_abs_diff(&back, &g.own_payoffs(p)));
        }
    }
    Ok((
        worst < 1e-12,
        format!("max error {worst:.2e} over 1000 games"),
    ))
}

fn game_eu_equivalence(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let g = random_game(&mut r);
        let x = [r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0)];
        for p in Player::BOTH {
            let gp = to_gparams(&g, p);
            let (own, other) = (x[p.index()], x[p.other().index()]);
            // direct expectation over the four outcomes
            let prob = |m: f64, c: Choice| (1.0 + c.sign() * m) / 2.0;
            let direct: f64 = Profile::all()
                .iter()
                .map(|pr| {
                    prob(own, pr.choice_of(p))
                        * prob(other, pr.choice_of(p.other()))
                        * g.payoff(p, *pr)
                })
                .sum();
            worst = worst.max((gp.expected_utility(own, other) - direct).abs());
        }
    }
    Ok((worst < 1e-12, format!("max error {worst:.2e}")))
}

fn game_nash_oracle(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 3);
    let mut mismatches = 0;
    for k in 0..1000 {
        // round payoffs on half the games so ties occur
        let mut g = random_game(&mut r);
        if k % 2 == 0 {
            for m in [&mut g.p1, &mut g.p2] {
                for v in m.iter_mut().flatten() {
                    *v = v.round() / 4.0;
                }
            }
        }
        let fast = pure_nash(&g);
        for pr in Profile::all() {
            if fast.contains(&pr) != is_pure_nash(&g, pr) {
                mismatches += 1;
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} mismatches over 1000 games"),
    ))
}

fn ne_names(g: &Game2x2) -> Vec<String> {
    pure_nash(g).iter().map(|p| p.to_string()).collect()
}

fn game_ts_quadrants(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 4);
    let cases = [
        (GameKind::Harmony, (0.0, 1.0), (0.0, 1.0), vec!["CC"]),
        (
            GameKind::StagHunt,
            (0.0, 1.0),
            (-1.0, 0.0),
            vec!["CC", "DD"],
        ),
        (
            GameKind::PrisonersDilemma,
            (1.0, 2.0),
            (-1.0, 0.0),
            vec!["DD"],
        ),
        (GameKind::Chicken, (1.0, 2.0), (0.0, 1.0), vec!["CD", "DC"]),
    ];
    let mut bad = 0;
    for (kind, (t0, t1), (s0, s1), ne) in &cases {
        for _ in 0..250 {
            let p = TsPoint {
                t: r.random_range(*t0..*t1),
                s: r.random_range(*s0..*s1),
            };
            if p.t == 1.0 || p.s == 0.0 {
                continue;
            }
            let c = classify_ts(p);
            let names: Vec<String> = c.pure_ne.iter().map(|p| p.to_string()).collect();
            if c.kind != *kind || names != *ne || ne_names(&Game2x2::from_ts(p)) != *ne {
                bad += 1;
            }
        }
    }
    Ok((
        bad == 0,
        format!("{bad} misclassified of 1000 interior samples"),
    ))
}

fn game_ts_crossing(_seed: u64) -> Result<(bool, String)> {
    let ne = |t: f64, s: f64| ne_names(&Game2x2::from_ts(TsPoint { t, s }));
    // Harmony -> Chicken across T = 1: CC disappears, CD and DC appear
    let a = ne(0.9, 0.5) == ["CC"] && ne(1.1, 0.5) == ["CD", "DC"];
    // Stag Hunt -> Prisoner's Dilemma across T = 1: CC disappears
    let b = ne(0.9, -0.5) == ["CC", "DD"] && ne(1.1, -0.5) == ["DD"];
    // Harmony -> Stag Hunt across S = 0: DD appears
    let c = ne(0.5, 0.1) == ["CC"] && ne(0.5, -0.1) == ["CC", "DD"];
    // Chicken -> Prisoner's Dilemma across S = 0: CD, DC give way to DD
    let d = ne(1.5, 0.1) == ["CD", "DC"] && ne(1.5, -0.1) == ["DD"];
    let boundary = classify_ts(TsPoint { t: 1.0, s: 0.5 }).kind == GameKind::Boundary;
    Ok((
        a && b && c && d && boundary,
        format!("T-crossings {a}/{b}, S-crossings {c}/{d}, boundary {boundary}"),
    ))
}

fn game_ordinal(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 5);
    let mut bad = 0;
    for _ in 0..1000 {
        let g = random_game(&mut r);
        for p in Player::BOTH {
            for other in Choice::ALL {
                for own in Choice::ALL {
                    let u = g.payoff_own(p, own, other);
                    let v = g.payoff_own(p, own.flip(), other);
                    if weakly_prefers(&g, p, own, other) != (u >= v) {
                        bad += 1;
                    }
                }
            }
        }
    }
    Ok((bad == 0, format!("{bad} disagreements")))
}

// ---- logit ----

fn random_problem(r: &mut impl Rng) -> ChoiceProblem {
    let k = r.random_range(2..=6);
    let v = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
    ChoiceProblem::new(v, r.random_range(0.2..3.0)).expect("valid by construction")
}

fn logit_monte_carlo(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 10);
    let problems: Vec<(ChoiceProblem, u64)> = (0..50)
        .map(|_| (random_problem(&mut r), r.random()))
        .collect();
    let tvs = problems
        .par_iter()
        .map(|(p, s)| {
            Ok(oracle::total_variation(
                &sample_gumbel_argmax(p, 1_000_000, *s)?,
                &logit_probs(p),
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = tvs.iter().copied().fold(0.0, f64::max);
    Ok((
        worst < 0.01,
        format!("max TV {worst:.4} over 50 problems, n = 1e6"),
    ))
}

fn logit_translation(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = random_problem(&mut r);
        let c = r.random_range(-100.0..100.0);
        let q = ChoiceProblem::new(p.utilities().iter().map(|v| v + c).collect(), p.xi())?;
        let d = logit_probs(&p)
            .iter()
            .zip(logit_probs(&q))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    Ok((worst < 1e-12, format!("max shift {worst:.2e}")))
}

fn logit_monotone(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 12);
    let mut bad = 0;
    for _ in 0..200 {
        let p = random_problem(&mut r);
        let j = r.random_range(0..p.len());
        let mut v = p.utilities().to_vec();
        v[j] += r.random_range(0.01..1.0);
        let q = ChoiceProblem::new(v, p.xi())?;
        if logit_probs(&q)[j] <= logit_probs(&p)[j] {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} non-increasing cases of 200")))
}

fn logit_limits(_seed: u64) -> Result<(bool, String)> {
    let u = logit_probs(&ChoiceProblem::new(vec![3.0, -2.0, 0.5], 0.0)?);
    let uniform = u.iter().all(|&p| p == 1.0 / 3.0);
    let sharp = logit_probs(&ChoiceProblem::new(vec![0.1, 0.0, -0.3], 1e3)?)[0];
    Ok((
        uniform && sharp > 1.0 - 1e-6,
        format!("uniform {uniform}, p(argmax) = {sharp}"),
    ))
}

// ---- fixedpoint ----

fn fp_oracle_1d(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 20);
    let mut bad = 0;
    for _ in 0..100 {
        let (a, b) = (r.random_range(0.0..5.0), r.random_range(-1.0..1.0));
        let p = FixedPointProblem::new(scalar_map(
            move |x| (a * x + b).tanh(),
            move |x| a / (a * x + b).cosh().powi(2),
        ));
        let found: Vec<f64> = find_all(&p, &FindOptions::default())?
            .points
            .iter()
            .map(|e| e.x[0])
            .collect();
        let reference = oracle::scan_roots(|x| x - (a * x + b).tanh(), -1.0, 1.0, 10_000);
        // near-tangent pairs closer than the scan spacing are invisible to the oracle
        let tangent = found.windows(2).any(|w| w[1] - w[0] < 1e-3);
        if tangent {
            continue;
        }
        let matched = found.len() == reference.len()
            && found
                .iter()
                .zip(&reference)
                .all(|(x, y)| (x - y).abs() < 1e-6);
        if !matched {
            bad += 1;
        }
    }
    Ok((
        bad == 0,
        format!("{bad} mismatches over 100 random tanh maps"),
    ))
}

fn fp_oracle_2d(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 21);
    let mut bad = 0;
    let mut cases = 0;
    for _ in 0..12 {
        let xi = [r.random_range(0.0..4.0), r.random_range(0.0..4.0)];
        let m = QreModel::new(Game2x2::chicken_integer(), xi)?;
        let set = qre_equilibria(&m)?;
        if set.points.iter().any(|e| m.fold_residual(&e.x) < 0.05) {
            continue;
        }
        cases += 1;
        let map = m.map();
        let reference = oracle::grid_minima_2d(
            |a, b| {
                let p = Point::<2>::new(a, b);
                (p - map.apply(&p)).norm()
            },
            300,
            1e-9,
        );
        let ok = reference.len() == set.len()
            && reference.iter().all(|q| {
                set.points
                    .iter()
                    .any(|e| (e.x[0] - q[0]).hypot(e.x[1] - q[1]) < 1e-6)
            });
        if !ok {
            bad += 1;
        }
    }
    Ok((
        bad == 0 && cases > 5,
        format!("{bad} mismatches over {cases} non-critical QRE maps"),
    ))
}

fn iterate<const D: usize>(m: &impl SelfMap<D>, mut x: Point<D>, n: usize) -> Point<D> {
    for _ in 0..n {
        x = m.apply(&x);
    }
    x
}

fn fp_stability(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 22);
    let mut bad = 0;
    let mut checked = 0;
    for _ in 0..50 {
        let a = r.random_range(0.2..4.0);
        let p = FixedPointProblem::new(scalar_map(
            move |x| (a * x).tanh(),
            move |x| a / (a * x).cosh().powi(2),
        ));
        for e in find_all(&p, &FindOptions::default())?.points {
            if (e.spectral_radius - 1.0).abs() < 0.05 {
                continue;
            }
            checked += 1;
            match e.stability {
                Stability::Stable => {
                    let y = iterate(&p.map, e.x + Point::<1>::new(1e-3), 20_000);
                    if (y - e.x).norm() > 1e-8 {
                        bad += 1;
                    }
                }
                Stability::Unstable => {
                    let y = iterate(&p.map, e.x + Point::<1>::new(1e-6), 200);
                    if (y - e.x).norm() < 1e-3 {
                        bad += 1;
                    }
                }
                Stability::Critical => {}
            }
        }
        let xi = [r.random_range(0.0..4.0), r.random_range(0.0..4.0)];
        let m = QreModel::new(Game2x2::chicken_integer(), xi)?;
        for e in qre_equilibria(&m)?.stable() {
            if e.spectral_radius > 0.95 {
                continue;
            }
            checked += 1;
            let y = iterate(&m.map(), e.x + Point::<2>::new(1e-3, -1e-3), 20_000);
            if (y - e.x).norm() > 1e-8 {
                bad += 1;
            }
        }
    }
    Ok((
        bad == 0,
        format!("{bad} failures over {checked} equilibria"),
    ))
}

fn tanh_family(a: f64) -> FixedPointProblem<1, impl SelfMap<1>> {
    FixedPointProblem::new(scalar_map(
        move |x| (a * x).tanh(),
        move |x| a / (a * x).cosh().powi(2),
    ))
}

fn fp_fold_refinement(_seed: u64) -> Result<(bool, String)> {
    let opts = SweepOptions {
        refine_tol: None,
        ..SweepOptions::default()
    };
    let coarse: Vec<f64> = (0..=15).map(|k| 0.5 + 0.1 * k as f64).collect();
    let fine: Vec<f64> = (0..=150).map(|k| 0.5 + 0.01 * k as f64).collect();
    let a = sweep(tanh_family, &coarse, &opts)?.folds.len();
    let b = sweep(tanh_family, &fine, &opts)?.folds.len();
    Ok((
        b >= a && a == 1,
        format!("{a} folds on the coarse grid, {b} on the 10x finer grid"),
    ))
}

fn fp_gradient_folds(_seed: u64) -> Result<(bool, String)> {
    // one gradient-descent step x -> x - h W'(x) on the cusp potential, u1 = 1
    let family = |u2: f64| {
        let h = 0.1;
        FixedPointProblem::with_bounds(
            scalar_map(
                move |x| x + h * (-x * x * x + x + u2),
                move |x| 1.0 + h * (1.0 - 3.0 * x * x),
            ),
            -2.0,
            2.0,
        )
    };
    let grid: Vec<f64> = (0..=200).map(|k| -1.0 + 0.01 * k as f64).collect();
    let b = sweep(family, &grid, &SweepOptions::default())?;
    let expected = 2.0 * (1.0f64 / 3.0).powf(1.5);
    let locs: Vec<f64> = b.folds.iter().map(|f| f.location).collect();
    let ok =
        locs.len() == 2 && (locs[0] + expected).abs() < 1e-5 && (locs[1] - expected).abs() < 1e-5;
    Ok((ok, format!("folds at {locs:?}, expected +-{expected:.6}")))
}

// ---- sdt ----

fn sdt_pitchfork(_seed: u64) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for j in [0.5, 1.0, 2.0] {
        worst = worst.max((sdt::pitchfork_critical_xi(j)? - 1.0 / j).abs());
    }
    Ok((worst < 1e-6, format!("max |xi* - 1/J| = {worst:.2e}")))
}

fn sdt_counts(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 30);
    let mut bad = 0;
    let mut n = 0;
    while n < 100 {
        let (xi, j) = (r.random_range(0.0..4.0), r.random_range(0.05..3.0));
        let a = xi * j;
        if a > 1.0 && a < 1.0 + 1e-6 {
            continue;
        }
        n += 1;
        let set = sdt::equilibria(&SdtModel::social(0.0, j, xi)?)?;
        let ok = if a <= 1.0 {
            set.len() == 1 && set.points[0].x[0].abs() < 1e-12
        } else {
            let root = oracle::tanh_root(a);
            set.len() == 3
                && (set.points[2].x[0] - root).abs() < 1e-8
                && (set.points[0].x[0] + root).abs() < 1e-8
        };
        if !ok {
            bad += 1;
        }
    }
    Ok((
        bad == 0,
        format!("{bad} wrong counts over 100 (xi, J) pairs"),
    ))
}

fn sdt_symmetry(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 31);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let set = sdt::equilibria(&SdtModel::social(
            0.0,
            r.random_range(0.05..3.0),
            r.random_range(0.0..4.0),
        )?)?;
        for e in &set.points {
            let d = set
                .points
                .iter()
                .map(|f| (f.x[0] + e.x[0]).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    Ok((worst < 1e-10, format!("max asymmetry {worst:.2e}")))
}

fn sdt_hysteresis(_seed: u64) -> Result<(bool, String)> {
    let (xi, j) = (1.0, 2.0);
    let family = move |h: f64| {
        FixedPointProblem::new(scalar_map(
            move |x| (xi * (h + j * x)).tanh(),
            move |x| xi * j / (xi * (h + j * x)).cosh().powi(2),
        ))
    };
    let up: Vec<f64> = (0..=200).map(|k| -1.0 + 0.01 * k as f64).collect();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let opts = FollowOptions::default();
    let a = follow_branch(family, &up, Point::<1>::new(-1.0), &opts)?;
    let b = follow_branch(family, &down, Point::<1>::new(1.0), &opts)?;
    let (ja, jb) = (
        a.jumps.first().map(|j| j.location),
        b.jumps.first().map(|j| j.location),
    );
    let xf = -(1.0 - 1.0 / (xi * j)).sqrt();
    let hc = xf.atanh() / xi - j * xf;
    let ok =
        matches!((ja, jb), (Some(u), Some(d)) if (u - hc).abs() < 1e-5 && (d + hc).abs() < 1e-5);
    Ok((
        ok,
        format!("ascending jump {ja:?}, descending jump {jb:?}, fold field +-{hc:.6}"),
    ))
}

fn sdt_logit(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 32);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (h, j, xi, m) = (
            r.random_range(-2.0..2.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.0..5.0),
            r.random_range(-1.0..=1.0),
        );
        let model = SdtModel::social(h, j, xi)?;
        let u = h + j * m;
        let p = logit_probs(&ChoiceProblem::new(vec![-u, u], xi)?);
        worst = worst.max((sdt::choice_prob(&model, 1, Some(m))? - p[1]).abs());
        worst = worst.max((sdt::choice_prob(&model, -1, Some(m))? - p[0]).abs());
    }
    Ok((worst < 1e-12, format!("max difference {worst:.2e}")))
}

fn sdt_partials(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 33);
    let mut worst = 0.0f64;
    let eps = 1e-6;
    for _ in 0..200 {
        let c = crate::game::SocialCoefficients {
            k: r.random_range(-2.0..2.0),
            h: r.random_range(-2.0..2.0),
            f: r.random_range(-2.0..2.0),
            j: r.random_range(-2.0..2.0),
        };
        let m = SdtModel::new(sdt::SdtParams::new(c, 1.0)?)?;
        let (a, b) = (r.random_range(-0.9..0.9), r.random_range(-0.9..0.9));
        let d_own = (sdt::utility(&m, a + eps, b)? - sdt::utility(&m, a - eps, b)?) / (2.0 * eps);
        let d_other = (sdt::utility(&m, a, b + eps)? - sdt::utility(&m, a, b - eps)?) / (2.0 * eps);
        worst = worst
            .max((d_own - (c.h + c.j * b)).abs())
            .max((d_other - (c.f + c.j * a)).abs());
    }
    Ok((worst < 1e-6, format!("max partial error {worst:.2e}")))
}

// ---- qre ----

fn chicken_grid() -> Vec<f64> {
    (0..=80).map(|k| 0.05 * k as f64).collect()
}

fn chicken_curve() -> Result<qre::CriticalSet> {
    let g = chicken_grid();
    match critical_set(&Game2x2::chicken_integer(), &g, &g)? {
        CriticalOutcome::Curve(c) => Ok(c),
        CriticalOutcome::NoComplementarity { .. } => Ok(qre::CriticalSet { points: Vec::new() }),
    }
}

fn qre_critical_residuals(_seed: u64) -> Result<(bool, String)> {
    let c = chicken_curve()?;
    let worst = c
        .points
        .iter()
        .map(|p| p.residual.max(p.fold_residual))
        .fold(0.0, f64::max);
    let harmony = critical_set(
        &Game2x2::from_ts(TsPoint { t: 0.5, s: 0.5 }),
        &chicken_grid(),
        &chicken_grid(),
    )?;
    let empty = harmony.points().is_empty();
    Ok((
        !c.points.is_empty() && worst < 1e-8 && empty,
        format!(
            "{} points, max residual {worst:.2e}; harmony empty: {empty}",
            c.points.len()
        ),
    ))
}

fn qre_partition(seed: u64) -> Result<(bool, String)> {
    let c = chicken_curve()?;
    let mut r = rng(seed, 40);
    let mut samples = Vec::new();
    while samples.len() < 400 {
        let xi = [r.random_range(0.0..4.0), r.random_range(0.0..4.0)];
        if c.distance(xi) > 0.02 {
            samples.push(xi);
        }
    }
    let base = QreModel::new(Game2x2::chicken_integer(), [0.0, 0.0])?;
    let bad: usize = samples
        .par_iter()
        .map(|&xi| -> Result<usize> {
            let n = qre_equilibria(&base.with_xi(xi)?)?.len();
            // region B lies to the right of the crossing of this horizontal line
            let crossing = c.crossings(Player::Two, xi[1]);
            let expect_b = crossing.first().is_some_and(|&x| xi[0] > x);
            let expected = if expect_b { 3 } else { 1 };
            Ok(usize::from(n != expected))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok((
        bad == 0,
        format!("{bad} of 400 samples off the expected count"),
    ))
}

/// Errors of the three equilibria at `xi1 = xi2 = xi` against the Nash set.
pub fn nash_limit_errors(xi: f64) -> Result<[f64; 3]> {
    let set = qre_equilibria(&QreModel::new(Game2x2::chicken_integer(), [xi, xi])?)?;
    let targets = [[-1.0, 1.0], [1.0 / 3.0, 1.0 / 3.0], [1.0, -1.0]];
    let mut out = [f64::INFINITY; 3];
    for (k, t) in targets.iter().enumerate() {
        for e in &set.points {
            out[k] = out[k].min((e.x[0] - t[0]).abs().max((e.x[1] - t[1]).abs()));
        }
    }
    Ok(out)
}

fn qre_nash_limit(_seed: u64) -> Result<(bool, String)> {
    let e = nash_limit_errors(50.0)?;
    let ok = e.iter().all(|&v| v < 1e-3);
    Ok((
        ok,
        format!(
            "xi = 50: corner errors {:.2e}, {:.2e}; interior error {:.2e}",
            e[0], e[2], e[1]
        ),
    ))
}

fn qre_chain(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 41);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let g = random_game(&mut r);
        let m = QreModel::new(g, [r.random_range(0.0..3.0), r.random_range(0.0..3.0)])?;
        for p in Player::BOTH {
            let x = r.random_range(-1.0..=1.0);
            let probs = qre::choice_probs(&m, p, x)?;
            worst = worst.max((qre::qre_response(&m, p, x)? - (1.0 - 2.0 * probs[0])).abs());
        }
    }
    Ok((worst < 1e-12, format!("max difference {worst:.2e}")))
}

fn qre_diagonal(_seed: u64) -> Result<(bool, String)> {
    let game = Game2x2::chicken_integer();
    let base = QreModel::new(game, [0.0, 0.0])?;
    let family = |t: f64| base.with_xi([t, t]).expect("non-negative grid").problem();
    let grid: Vec<f64> = (0..=100).map(|k| 0.04 * k as f64).collect();
    let b = sweep(family, &grid, &SweepOptions::default())?;
    let counts: Vec<usize> = b
        .folds
        .iter()
        .flat_map(|f| [f.count_lo, f.count_hi])
        .collect();
    let ok = b.folds.len() == 1 && counts == [1, 3];
    Ok((
        ok,
        format!(
            "folds {:?}",
            b.folds.iter().map(|f| f.location).collect::<Vec<_>>()
        ),
    ))
}

// ---- cusp ----

fn cusp_discriminant(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 50);
    let mut bad = 0;
    for _ in 0..10_000 {
        let (u1, u2) = (r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
        let region = cusp::classify_region(&CuspControl::plane(u1, u2)?);
        let n = cusp::cubic_roots(u1, u2).len();
        let reference = oracle::cubic_roots_scan(u1, u2).len();
        let agree = match region {
            Region::A => n == 1 && reference == 1,
            Region::B => n == 3 && (reference == 3 || cusp::discriminant(u1, u2) < 1e-6),
            Region::Critical => n == 2,
        };
        if !agree {
            bad += 1;
        }
    }
    Ok((
        bad == 0,
        format!("{bad} disagreements over 1e4 random controls"),
    ))
}

fn cusp_curve(_seed: u64) -> Result<(bool, String)> {
    let pts = cusp::critical_curve(4.0, 200)?;
    let mut worst = 0.0f64;
    let mut all_critical = true;
    for p in &pts {
        let scale = (4.0 * p[0].powi(3)).max(f64::MIN_POSITIVE);
        worst = worst.max(cusp::discriminant(p[0], p[1]).abs() / scale);
        all_critical &= cusp::classify_region(&CuspControl::plane(p[0], p[1])?) == Region::Critical;
    }
    Ok((
        worst < 1e-10 && all_critical,
        format!("max relative residual {worst:.2e}"),
    ))
}

fn cusp_normalization(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 51);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c = CuspControl::new(
            r.random_range(-3.0..4.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.5..8.0),
        )?;
        let d = StationaryDensity::new(c)?;
        // trapezoid oracle on a fine grid
        let n = 200_000;
        let h = 2.0 * d.bound / n as f64;
        let mut s = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            s += w * d.pdf(-d.bound + h * k as f64)?;
        }
        worst = worst.max((s * h - 1.0).abs());
    }
    Ok((worst < 1e-8, format!("max |integral - 1| = {worst:.2e}")))
}

fn cusp_extrema(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed, 52);
    let mut bad = 0;
    for _ in 0..30 {
        let c = CuspControl::new(
            r.random_range(-2.0..4.0),
            r.random_range(-1.5..1.5),
            r.random_range(1.0..6.0),
        )?;
        let pts = cusp::stationary_points(&c);
        if pts
            .points
            .iter()
            .any(|e| e.stability == Stability::Critical)
            || pts.len() == 2
        {
            continue;
        }
        let (modes, anti) = StationaryDensity::new(c)?.extrema(1e-3);
        let stable: Vec<f64> = pts.stable().map(|e| e.x[0]).collect();
        let unstable: Vec<f64> = pts
            .points
            .iter()
            .filter(|e| e.stability == Stability::Unstable)
            .map(|e| e.x[0])
            .collect();
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-3)
        };
        if !close(&modes, &stable) || !close(&anti, &unstable) {
            bad += 1;
        }
    }
    Ok((
        bad == 0,
        format!("{bad} mismatches between density extrema and stationary points"),
    ))
}

/// TV distance between a long Euler-Maruyama path and the stationary density.
pub fn sde_tv(c: CuspControl, sigma: f64, dt: f64, steps: usize, seed: u64) -> Result<f64> {
    let path = cusp::simulate_sde(
        &c,
        &SdeConfig {
            sigma,
            dt,
            steps,
            x0: 0.0,
            seed,
        },
    )?;
    let d = StationaryDensity::new(CuspControl {
        xi: cusp::xi_from_sigma(sigma),
        ..c
    })?;
    Ok(cusp::histogram_tv(&path.x[1..], &d, -2.0, 2.0, 40))
}

fn cusp_sde(seed: u64) -> Result<(bool, String)> {
    let tv = sde_tv(CuspControl::plane(-1.0, 0.0)?, 0.5, 0.01, 1_000_000, seed)?;
    Ok((tv < 0.03, format!("TV {tv:.4} over 1e6 steps")))
}

// ---- twin ----

fn twin_synchrony(_seed: u64) -> Result<(bool, String)> {
    let mut ok = true;
    let mut jumps = 0;
    let grid: Vec<f64> = (0..=800).map(|k| 0.005 * k as f64).collect();
    let games = [
        (Game2x2::chicken_integer(), 3.0),
        (Game2x2::from_ts(TsPoint { t: 2.9, s: 0.1 }), 3.0),
    ];
    for (g, xi2) in games {
        let c = CoupledMarkets::new(g, [0.0, xi2])?;
        for dir in [Direction::Ascending, Direction::Descending] {
            let s = twin::one_sided_sweep(&c, Player::One, &grid, dir, StartBranch::High)?;
            jumps += s.jumps.len();
            ok &= s.jump_cells(Player::One) == s.jump_cells(Player::Two);
            ok &= s.jumps.iter().all(|j| j.markets == [true, true]);
        }
    }
    Ok((ok && jumps > 0, format!("{jumps} jumps, all joint: {ok}")))
}

/// Largest relative error between the analytic sensitivity and central
/// differences of the re-solved equilibrium, over `n` random equilibria
/// away from the fold. Returns (error, equilibria checked).
pub fn jacobian_fd_error(seed: u64, n: usize) -> Result<(f64, usize)> {
    let mut r = rng(seed, 60);
    let game = Game2x2::chicken_integer();
    let mut worst = 0.0f64;
    let mut done = 0;
    let h = 1e-6;
    while done < n {
        let xi = [r.random_range(0.1..4.0), r.random_range(0.1..4.0)];
        let c = CoupledMarkets::new(game, xi)?;
        let set = twin::joint_equilibria(&c)?;
        let e = &set.points[r.random_range(0..set.len())];
        if c.model.fold_residual(&e.x) < 0.05 {
            continue;
        }
        let s = twin::jacobian(&c, [e.x[0], e.x[1]])?;
        for col in 0..2 {
            let solve = |dx: f64| -> Option<Point<2>> {
                let mut v = xi;
                v[col] += dx;
                let m = c.model.with_xi(v).ok()?;
                newton(&m.problem(), e.x).map(|(x, _)| x)
            };
            let (Some(up), Some(dn)) = (solve(h), solve(-h)) else {
                worst = f64::INFINITY;
                continue;
            };
            let fd = (up - dn) / (2.0 * h);
            for row in 0..2 {
                let a = s.matrix[row][col];
                worst = worst.max((fd[row] - a).abs() / a.abs().max(1.0));
            }
        }
        done += 1;
    }
    Ok((worst, done))
}

fn twin_jacobian(seed: u64) -> Result<(bool, String)> {
    let (worst, n) = jacobian_fd_error(seed, 100)?;
    Ok((
        worst < 1e-5,
        format!("max relative error {worst:.2e} at {n} equilibria"),
    ))
}

fn twin_endpoints(_seed: u64) -> Result<(bool, String)> {
    let c = CoupledMarkets::new(Game2x2::chicken_integer(), [0.0, 3.0])?;
    let grid: Vec<f64> = (0..=800).map(|k| 0.005 * k as f64).collect();
    let s = twin::one_sided_sweep(
        &c,
        Player::One,
        &grid,
        Direction::Descending,
        StartBranch::High,
    )?;
    let mut ok = !s.jumps.is_empty();
    for j in &s.jumps {
        let post = twin::joint_equilibria(&CoupledMarkets::new(c.model.game, [j.xi_after, 3.0])?)?;
        {
            let x = j.after;
            let e = post
                .nearest(&Point::<2>::new(x[0], x[1]))
                .expect("non-empty");
            ok &= e.stability == Stability::Stable && e.residual < 1e-10;
        }
        let pre = twin::joint_equilibria(&CoupledMarkets::new(c.model.game, [j.xi_before, 3.0])?)?;
        let e = pre
            .nearest(&Point::<2>::new(j.before[0], j.before[1]))
            .expect("non-empty");
        ok &= e.stability == Stability::Stable && e.residual < 1e-10;
    }
    Ok((ok, format!("{} jumps checked", s.jumps.len())))
}

/// Outcome of an ascending and a descending sweep compared with the
/// critical-set crossings of the line `xi2 = fixed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisCheck {
    pub crossings: Vec<f64>,
    pub ascending_jumps: Vec<f64>,
    pub descending_jumps: Vec<f64>,
    /// Largest distance from a jump to its nearest crossing.
    pub max_offset: f64,
    /// Grid points where the two sweeps occupy different branches.
    pub hysteresis_width: f64,
}

pub fn hysteresis_check(
    game: &Game2x2,
    xi2: f64,
    step: f64,
    xi_max: f64,
) -> Result<HysteresisCheck> {
    let n = (xi_max / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| step * k as f64).collect();
    let crit_grid: Vec<f64> = (0..=((xi_max / 0.05).round() as usize))
        .map(|k| 0.05 * k as f64)
        .collect();
    let y_grid: Vec<f64> = (0..=((2.0 * xi2 / 0.05).round() as usize))
        .map(|k| 0.05 * k as f64)
        .collect();
    let curve = match critical_set(game, &crit_grid, &y_grid)? {
        CriticalOutcome::Curve(c) => c,
        CriticalOutcome::NoComplementarity { .. } => qre::CriticalSet { points: Vec::new() },
    };
    let crossings = curve.crossings(Player::Two, xi2);
    let c = CoupledMarkets::new(*game, [0.0, xi2])?;
    let up = twin::one_sided_sweep(
        &c,
        Player::One,
        &grid,
        Direction::Ascending,
        StartBranch::High,
    )?;
    let down = twin::one_sided_sweep(
        &c,
        Player::One,
        &grid,
        Direction::Descending,
        StartBranch::High,
    )?;
    let locs = |s: &twin::SweepResult| s.jumps.iter().map(|j| j.location).collect::<Vec<_>>();
    let (a, d) = (locs(&up), locs(&down));
    let max_offset = a
        .iter()
        .chain(&d)
        .map(|j| {
            crossings
                .iter()
                .map(|c| (c - j).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    // the descending states are stored in reverse grid order
    let differ = up
        .states
        .iter()
        .zip(down.states.iter().rev())
        .filter(|(u, v)| (u[0] - v[0]).abs() > 0.25)
        .count();
    Ok(HysteresisCheck {
        crossings,
        ascending_jumps: a,
        descending_jumps: d,
        max_offset,
        hysteresis_width: differ as f64 * step,
    })
}

fn twin_hysteresis(_seed: u64) -> Result<(bool, String)> {
    let loop_game = Game2x2::from_ts(TsPoint { t: 2.9, s: 0.1 });
    let h = hysteresis_check(&loop_game, 3.0, 0.005, 5.0)?;
    let ok = h.crossings.len() == 2
        && h.ascending_jumps.len() == 1
        && h.descending_jumps.len() == 1
        && h.descending_jumps[0] < h.ascending_jumps[0]
        && h.max_offset < 0.005;
    Ok((
        ok,
        format!(
            "crossings {:?}, jumps up {:?} down {:?}, offset {:.2e}",
            h.crossings, h.ascending_jumps, h.descending_jumps, h.max_offset
        ),
    ))
}

// ---- abm ----

fn abm_mean_field(seed: u64) -> Result<(bool, String)> {
    let mut details = Vec::new();
    let mut ok = true;
    for (xi, x0) in [(0.5, 0.0), (2.0, 0.5), (2.0, -0.5)] {
        let cfg = AbmConfig {
            x0,
            ..AbmConfig::new(1_000, 1.0, xi, 5_000, seed)
        };
        let h = abm::run(&cfg)?;
        let xs = &h.x[500..];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // lag-1 autocorrelation inflates the standard error
        let rho = xs
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / (var * (n - 1.0));
        let se = (var / n * (1.0 + rho) / (1.0 - rho).max(1e-3)).sqrt();
        let eq = sdt::equilibria(&SdtModel::social(0.0, 1.0, xi)?)?;
        let target = eq
            .stable()
            .map(|e| e.x[0])
            .min_by(|a, b| (a - mean).abs().total_cmp(&(b - mean).abs()))
            .unwrap_or(f64::NAN);
        let pass = (mean - target).abs() < 3.0 * se.max(1e-4);
        ok &= pass;
        details.push(format!(
            "xiJ={xi}: mean {mean:.4} vs {target:.4} (se {se:.1e})"
        ));
    }
    Ok((ok, details.join("; ")))
}

fn abm_aggregation(seed: u64) -> Result<(bool, String)> {
    let cfg = AbmConfig {
        record_choices: true,
        z: 0.1,
        beta: 0.5,
        update: abm::UpdateScheme::Asynchronous,
        ..AbmConfig::new(101, 1.5, 1.0, 300, seed)
    };
    let h = abm::run(&cfg)?;
    let ch = h.choices.as_ref().expect("recorded");
    let ok = ch.iter().zip(&h.x).all(|(c, &x)| {
        let s: i64 = c.iter().map(|&v| v as i64).sum();
        x == s as f64 / c.len() as f64 && x.abs() <= 1.0
    });
    Ok((ok, format!("{} steps checked", ch.len())))
}

fn abm_determinism(seed: u64) -> Result<(bool, String)> {
    let cfg = AbmConfig {
        z: 0.2,
        beta: 0.1,
        expected_price: abm::PriceRule::Trend,
        ..AbmConfig::new(200, 1.0, 1.5, 1_000, seed)
    };
    let a = abm::run(&cfg)?;
    let b = abm::run(&cfg)?;
    Ok((a == b, format!("{} steps compared", a.p.len())))
}

fn abm_martingale(seed: u64) -> Result<(bool, String)> {
    let z = 0.3;
    let cfg = AbmConfig {
        z,
        ..AbmConfig::new(10, 0.0, 0.0, 10_000, seed)
    };
    let h = abm::run(&cfg)?;
    let inc: Vec<f64> = h.p.windows(2).map(|w| w[1] - w[0]).collect();
    let (d, p_ks) = oracle::ks_normal(&inc, 0.0, z);
    let (q, p_lb) = oracle::ljung_box(&inc, 20);
    Ok((
        p_ks > 0.01 && p_lb > 0.01,
        format!("KS D = {d:.4} (p = {p_ks:.3}), Ljung-Box Q(20) = {q:.1} (p = {p_lb:.3})"),
    ))
}
