//! Two-player, two-choice games.
//!
//! Mean-strategy convention used throughout the crate: a player's mean
//! strategy is `<x> = 1 - 2 p(x_1)`, so the first choice maps to `-1` and the
//! second choice maps to `+1`. A probability of playing the second choice is
//! therefore `(1 + <x>) / 2`.
//!
//! Payoffs are stored as a bi-matrix whose rows are player one's choices and
//! whose columns are player two's choices. The per-player quadruple
//! `(a, b, c, d)` is always taken from the player's own perspective:
//!
//! | own \ other | first | second |
//! |-------------|-------|--------|
//! | first       | a     | c      |
//! | second      | b     | d      |

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub const BOTH: [Player; 2] = [Player::One, Player::Two];
}

/// One of the two pure choices. In the T x S games the first choice is
/// "cooperate" and the second is "defect".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    First,
    Second,
}

impl Choice {
    pub const ALL: [Choice; 2] = [Choice::First, Choice::Second];

    /// Numerical support of the choice: first -> -1, second -> +1.
    pub fn sign(self) -> f64 {
        match self {
            Choice::First => -1.0,
            Choice::Second => 1.0,
        }
    }

    pub fn flip(self) -> Choice {
        match self {
            Choice::First => Choice::Second,
            Choice::Second => Choice::First,
        }
    }

    fn letter(self) -> char {
        match self {
            Choice::First => 'C',
            Choice::Second => 'D',
        }
    }
}

/// A pure strategy profile `(player one's choice, player two's choice)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Profile {
    pub p1: Choice,
    pub p2: Choice,
}

impl Profile {
    pub const fn new(p1: Choice, p2: Choice) -> Self {
        Profile { p1, p2 }
    }

    pub fn all() -> [Profile; 4] {
        use Choice::*;
        [
            Profile::new(First, First),
            Profile::new(First, Second),
            Profile::new(Second, First),
            Profile::new(Second, Second),
        ]
    }

    pub fn choice_of(&self, player: Player) -> Choice {
        match player {
            Player::One => self.p1,
            Player::Two => self.p2,
        }
    }

    fn with_choice(mut self, player: Player, choice: Choice) -> Profile {
        match player {
            Player::One => self.p1 = choice,
            Player::Two => self.p2 = choice,
        }
        self
    }

    /// Mean strategies `(<x>^1, <x>^2)` of this pure profile.
    pub fn means(&self) -> [f64; 2] {
        [self.p1.sign(), self.p2.sign()]
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.p1.letter(), self.p2.letter())
    }
}

/// Payoff quadruple `(a, b, c, d)` from one player's own perspective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffVector {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PayoffVector {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        PayoffVector { a, b, c, d }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Game2x2 {
    /// Player one's payoffs, `p1[row][col]` with row = player one's choice.
    pub p1: [[f64; 2]; 2],
    /// Player two's payoffs in the same bi-matrix layout.
    pub p2: [[f64; 2]; 2],
}

impl Game2x2 {
    pub fn new(p1: [[f64; 2]; 2], p2: [[f64; 2]; 2]) -> Result<Self> {
        let game = Game2x2 { p1, p2 };
        game.validate()?;
        Ok(game)
    }

    pub fn validate(&self) -> Result<()> {
        for row in self.p1.iter().chain(self.p2.iter()) {
            for &v in row {
                ensure_finite("payoff", v)?;
            }
        }
        Ok(())
    }

    /// Builds a game from each player's own-perspective payoff quadruple.
    pub fn from_payoff_vectors(p1: PayoffVector, p2: PayoffVector) -> Self {
        Game2x2 {
            p1: [[p1.a, p1.c], [p1.b, p1.d]],
            // player two's own choice is the column
            p2: [[p2.a, p2.b], [p2.c, p2.d]],
        }
    }

    /// Builds a game whose players have the given coefficient quadruples.
    pub fn from_gparams(p1: GParams, p2: GParams) -> Self {
        Game2x2::from_payoff_vectors(
            sdt_to_payoffs(&gparams_to_sdt(&p1)),
            sdt_to_payoffs(&gparams_to_sdt(&p2)),
        )
    }

    /// The symmetric game with `R = 1` at (C, C), `P = 0` at (D, D),
    /// temptation `T` at (D, C) and sucker's payoff `S` at (C, D).
    pub fn from_ts(p: TsPoint) -> Self {
        let (r, pun) = (1.0, 0.0);
        Game2x2 {
            p1: [[r, p.s], [p.t, pun]],
            p2: [[r, p.t], [p.s, pun]],
        }
    }

    /// The asymmetric-looking but symmetric Chicken game
    /// `G1 = [[0, 7], [2, 6]]`, `G2 = [[0, 2], [7, 6]]`.
    pub fn chicken_integer() -> Self {
        Game2x2 {
            p1: [[0.0, 7.0], [2.0, 6.0]],
            p2: [[0.0, 2.0], [7.0, 6.0]],
        }
    }

    pub fn payoff(&self, player: Player, profile: Profile) -> f64 {
        let (r, c) = (profile.p1 as usize, profile.p2 as usize);
        match player {
            Player::One => self.p1[r][c],
            Player::Two => self.p2[r][c],
        }
    }

    /// Payoff to `player` when it plays `own` and the opponent plays `other`.
    pub fn payoff_own(&self, player: Player, own: Choice, other: Choice) -> f64 {
        let profile = match player {
            Player::One => Profile::new(own, other),
            Player::Two => Profile::new(other, own),
        };
        self.payoff(player, profile)
    }

    pub fn own_payoffs(&self, player: Player) -> PayoffVector {
        use Choice::*;
        PayoffVector {
            a: self.payoff_own(player, First, First),
            b: self.payoff_own(player, Second, First),
            c: self.payoff_own(player, First, Second),
            d: self.payoff_own(player, Second, Second),
        }
    }

    /// Expected payoff to `player` by direct expectation over the four
    /// outcomes, with `p(second) = (1 + <x>) / 2` for each player.
    pub fn expected_utility(&self, player: Player, means: [f64; 2]) -> f64 {
        let prob = |choice: Choice, mean: f64| match choice {
            Choice::First => 0.5 * (1.0 - mean),
            Choice::Second => 0.5 * (1.0 + mean),
        };
        Profile::all()
            .iter()
            .map(|pr| prob(pr.p1, means[0]) * prob(pr.p2, means[1]) * self.payoff(player, *pr))
            .sum()
    }

    /// The game seen with the players' roles exchanged.
    pub fn swapped(&self) -> Game2x2 {
        let t = |m: [[f64; 2]; 2]| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
        Game2x2 {
            p1: t(self.p2),
            p2: t(self.p1),
        }
    }
}

/// Coefficients of a player's expected utility written as a bilinear form in
/// the two mean strategies:
/// `V = g0 + <x>^self g_self + <x>^other g_other + <x>^self <x>^other g12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GParams {
    pub g0: f64,
    pub g_self: f64,
    pub g_other: f64,
    pub g12: f64,
}

impl GParams {
    pub const fn new(g0: f64, g_self: f64, g_other: f64, g12: f64) -> Self {
        GParams {
            g0,
            g_self,
            g_other,
            g12,
        }
    }

    pub fn from_payoffs(v: &PayoffVector) -> Self {
        let PayoffVector { a, b, c, d } = *v;
        GParams {
            g0: (a + b + c + d) / 4.0,
            g_self: ((b + d) - (a + c)) / 4.0,
            g_other: ((c + d) - (a + b)) / 4.0,
            g12: ((a + d) - (b + c)) / 4.0,
        }
    }

    pub fn expected_utility(&self, own_mean: f64, other_mean: f64) -> f64 {
        self.g0
            + own_mean * self.g_self
            + other_mean * self.g_other
            + own_mean * other_mean * self.g12
    }

    /// Sufficient condition for three equilibria in the noiseless limit:
    /// `g_self - |g12| < 0 < g_self + |g12|`, i.e. `|g_self| < |g12|`.
    pub fn admits_three_equilibria(&self) -> bool {
        self.g_self.abs() < self.g12.abs()
    }
}

/// The social-decision coefficients `(k, h, f, J)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SocialCoefficients {
    pub k: f64,
    pub h: f64,
    pub f: f64,
    pub j: f64,
}

pub fn to_gparams(game: &Game2x2, player: Player) -> GParams {
    GParams::from_payoffs(&game.own_payoffs(player))
}

/// Identifies the coefficient quadruple with the social-decision vector.
pub fn gparams_to_sdt(g: &GParams) -> SocialCoefficients {
    SocialCoefficients {
        k: g.g0,
        h: g.g_self,
        f: g.g_other,
        j: g.g12,
    }
}

/// Inverse of the coefficient transform: integer matrix
/// `[[1,-1,-1,1],[1,1,-1,-1],[1,-1,1,-1],[1,1,1,1]]` applied to `(k,h,f,J)`.
pub fn sdt_to_payoffs(z: &SocialCoefficients) -> PayoffVector {
    let SocialCoefficients { k, h, f, j } = *z;
    PayoffVector {
        a: k - h - f + j,
        b: k + h - f - j,
        c: k - h + f - j,
        d: k + h + f + j,
    }
}

/// Strength of the opponent's direct effect on utility, `dV/d<x>^other` at
/// `g12 = 0`. Positive values are positive spillovers.
pub fn spillover(g: &GParams) -> f64 {
    g.g_other
}

/// Cross-partial `d2V / d<x>^self d<x>^other`; positive values are strategic
/// complements.
pub fn complementarity(g: &GParams) -> f64 {
    g.g12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    First,
    Second,
    Indifferent,
}

/// Ordinal preference of `player` between its own two choices, given the
/// opponent's pure choice.
pub fn preference(game: &Game2x2, player: Player, other: Choice) -> Preference {
    let u1 = game.payoff_own(player, Choice::First, other);
    let u2 = game.payoff_own(player, Choice::Second, other);
    match u1.partial_cmp(&u2).unwrap_or(Ordering::Equal) {
        Ordering::Greater => Preference::First,
        Ordering::Less => Preference::Second,
        Ordering::Equal => Preference::Indifferent,
    }
}

/// True when `player` weakly prefers `own` to the alternative.
pub fn weakly_prefers(game: &Game2x2, player: Player, own: Choice, other: Choice) -> bool {
    match preference(game, player, other) {
        Preference::Indifferent => true,
        Preference::First => own == Choice::First,
        Preference::Second => own == Choice::Second,
    }
}

/// Pure Nash equilibria: profiles where each player's choice is weakly
/// preferred given the other's choice.
pub fn pure_nash(game: &Game2x2) -> Vec<Profile> {
    Profile::all()
        .into_iter()
        .filter(|pr| {
            Player::BOTH.iter().all(|&pl| {
                let own = pr.choice_of(pl);
                let other = pr.choice_of(pl.other());
                weakly_prefers(game, pl, own, other)
            })
        })
        .collect()
}

/// Returns true when `profile` survives every unilateral deviation.
pub fn is_pure_nash(game: &Game2x2, profile: Profile) -> bool {
    Player::BOTH.iter().all(|&pl| {
        let dev = profile.with_choice(pl, profile.choice_of(pl).flip());
        game.payoff(pl, profile) >= game.payoff(pl, dev)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsPoint {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
}

impl TsPoint {
    pub const fn new(t: f64, s: f64) -> Self {
        TsPoint { t, s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameKind {
    Harmony,
    StagHunt,
    PrisonersDilemma,
    Chicken,
    Boundary,
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GameKind::Harmony => "Harmony",
            GameKind::StagHunt => "StagHunt",
            GameKind::PrisonersDilemma => "PrisonersDilemma",
            GameKind::Chicken => "Chicken",
            GameKind::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameClass {
    pub kind: GameKind,
    pub pure_ne: Vec<Profile>,
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ne: Vec<String> = self.pure_ne.iter().map(|p| p.to_string()).collect();
        write!(f, "{}, NE: {}", self.kind, ne.join(", "))
    }
}

/// Names the region of the T x S plane (with R = 1, P = 0) and lists the pure
/// equilibria of the induced game. Points with `T = 1` or `S = 0` are
/// reported as `Boundary`.
pub fn classify_ts(p: TsPoint) -> GameClass {
    let kind = if p.t == 1.0 || p.s == 0.0 {
        GameKind::Boundary
    } else {
        match (p.t > 1.0, p.s > 0.0) {
            (false, true) => GameKind::Harmony,
            (false, false) => GameKind::StagHunt,
            (true, false) => GameKind::PrisonersDilemma,
            (true, true) => GameKind::Chicken,
        }
    };
    GameClass {
        kind,
        pure_ne: pure_nash(&Game2x2::from_ts(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Choice::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn chicken_coefficients() {
        let g = to_gparams(&Game2x2::chicken_integer(), Player::One);
        assert_eq!(g, GParams::new(3.75, 0.25, 2.75, -0.75));
        // the game is symmetric, player two sees the same quadruple
        let g2 = to_gparams(&Game2x2::chicken_integer(), Player::Two);
        assert_eq!(g, g2);
        let z = gparams_to_sdt(&g);
        assert_eq!((z.k, z.h, z.f, z.j), (3.75, 0.25, 2.75, -0.75));
    }

    #[test]
    fn trivial_transforms() {
        let zero = Game2x2::new([[0.0; 2]; 2], [[0.0; 2]; 2]).unwrap();
        assert_eq!(
            to_gparams(&zero, Player::One),
            GParams::new(0.0, 0.0, 0.0, 0.0)
        );
        let ones = Game2x2::new([[1.0; 2]; 2], [[1.0; 2]; 2]).unwrap();
        assert_eq!(
            to_gparams(&ones, Player::Two),
            GParams::new(1.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(
            sdt_to_payoffs(&SocialCoefficients {
                k: 1.0,
                ..Default::default()
            }),
            PayoffVector::new(1.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(
            sdt_to_payoffs(&SocialCoefficients::default()),
            PayoffVector::new(0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn inverse_transform_recovers_chicken() {
        let z = SocialCoefficients {
            k: 3.75,
            h: 0.25,
            f: 2.75,
            j: -0.75,
        };
        assert_eq!(sdt_to_payoffs(&z), PayoffVector::new(0.0, 2.0, 7.0, 6.0));
    }

    #[test]
    fn non_finite_payoff_rejected() {
        assert!(Game2x2::new([[f64::NAN, 0.0], [0.0, 0.0]], [[0.0; 2]; 2]).is_err());
    }

    #[test]
    fn chicken_pure_equilibria() {
        let ne = pure_nash(&Game2x2::chicken_integer());
        assert_eq!(
            ne,
            vec![Profile::new(First, Second), Profile::new(Second, First)]
        );
    }

    #[test]
    fn constant_game_all_profiles_are_equilibria() {
        let g = Game2x2::new([[2.0; 2]; 2], [[2.0; 2]; 2]).unwrap();
        assert_eq!(pure_nash(&g).len(), 4);
    }

    #[test]
    fn ts_regions() {
        let c = classify_ts(TsPoint::new(0.5, 0.5));
        assert_eq!(c.kind, GameKind::Harmony);
        assert_eq!(c.pure_ne, vec![Profile::new(First, First)]);

        let c = classify_ts(TsPoint::new(0.5, -0.5));
        assert_eq!(c.kind, GameKind::StagHunt);
        assert_eq!(c.to_string(), "StagHunt, NE: CC, DD");

        let c = classify_ts(TsPoint::new(1.5, 0.5));
        assert_eq!(c.kind, GameKind::Chicken);
        assert_eq!(
            c.pure_ne,
            vec![Profile::new(First, Second), Profile::new(Second, First)]
        );

        let c = classify_ts(TsPoint::new(1.5, -0.5));
        assert_eq!(c.kind, GameKind::PrisonersDilemma);
        assert_eq!(c.pure_ne, vec![Profile::new(Second, Second)]);

        assert_eq!(classify_ts(TsPoint::new(1.0, 0.3)).kind, GameKind::Boundary);
        assert_eq!(classify_ts(TsPoint::new(0.3, 0.0)).kind, GameKind::Boundary);
    }

    #[test]
    fn spillover_and_complementarity() {
        let g = to_gparams(&Game2x2::chicken_integer(), Player::One);
        assert_eq!(spillover(&g), 2.75);
        assert_eq!(complementarity(&g), -0.75);
        assert!(g.admits_three_equilibria());

        let zero = GParams::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(spillover(&zero), 0.0);
        assert_eq!(complementarity(&zero), 0.0);
        assert!(!zero.admits_three_equilibria());
        assert!(!GParams::new(0.0, 2.0, 0.0, 1.0).admits_three_equilibria());
    }

    #[test]
    fn prisoners_dilemma_spillover_dominates() {
        let g = to_gparams(&Game2x2::from_ts(TsPoint::new(1.5, -0.5)), Player::One);
        assert!(g.g12.abs() < EPS);
        // defection by the opponent hurts, and that effect outweighs the own term
        assert!(spillover(&g) < 0.0);
        assert!(spillover(&g).abs() > g.g_self.abs());
    }

    #[test]
    fn chicken_expected_utility_matches_bilinear_form() {
        let game = Game2x2::chicken_integer();
        let g = to_gparams(&game, Player::One);
        for &(x1, x2) in &[(0.0, 0.0), (1.0, -1.0), (1.0 / 3.0, 1.0 / 3.0), (-0.4, 0.9)] {
            let direct = game.expected_utility(Player::One, [x1, x2]);
            let closed = 0.25 * (15.0 + x1 + 11.0 * x2 - 3.0 * x1 * x2);
            assert!((direct - closed).abs() < EPS);
            assert!((g.expected_utility(x1, x2) - closed).abs() < EPS);
        }
    }

    #[test]
    fn swapped_game_exchanges_roles() {
        let game = Game2x2::new([[1.0, 2.0], [3.0, 4.0]], [[5.0, 6.0], [7.0, 8.0]]).unwrap();
        let sw = game.swapped();
        assert_eq!(to_gparams(&game, Player::One), to_gparams(&sw, Player::Two));
        assert_eq!(to_gparams(&game, Player::Two), to_gparams(&sw, Player::One));
    }
}
