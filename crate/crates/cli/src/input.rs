//! Parsing of ranges, utility lists and game descriptions.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use critmarkets::game::{Game2x2, PayoffVector, TsPoint};

use crate::UsageError;

/// Inclusive grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + self.step * k as f64).collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("expected start:stop:step, got `{s}`"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let r = Range {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if ![r.start, r.stop, r.step].iter().all(|v| v.is_finite()) {
            return Err("range bounds must be finite".into());
        }
        if r.step <= 0.0 {
            return Err(format!("step must be > 0, got {}", r.step));
        }
        if r.stop < r.start {
            return Err(format!("stop {} is below start {}", r.stop, r.start));
        }
        if (r.stop - r.start) / r.step > 1e7 {
            return Err("range has more than 1e7 points".into());
        }
        Ok(r)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

/// Game file contents: each player's payoffs as `[[a, c], [b, d]]` from its
/// own perspective (row = own choice, column = opponent's choice), or a
/// symmetric `{"T": .., "S": ..}` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GameFile {
    Payoffs {
        p1: [[f64; 2]; 2],
        p2: [[f64; 2]; 2],
    },
    Ts(TsPoint),
}

fn own_view(m: [[f64; 2]; 2]) -> PayoffVector {
    PayoffVector::new(m[0][0], m[1][0], m[0][1], m[1][1])
}

impl GameFile {
    pub fn to_game(&self) -> Result<Game2x2, UsageError> {
        let g = match self {
            GameFile::Payoffs { p1, p2 } => {
                Game2x2::from_payoff_vectors(own_view(*p1), own_view(*p2))
            }
            GameFile::Ts(p) => Game2x2::from_ts(*p),
        };
        g.validate()
            .map_err(|e| UsageError::new("game", e.to_string()))?;
        Ok(g)
    }
}

pub const BUILTIN_GAMES: [&str; 5] = ["chicken", "harmony", "stag-hunt", "pd", "chicken-paper"];

pub fn builtin(name: &str) -> Option<Game2x2> {
    let ts = |t, s| Some(Game2x2::from_ts(TsPoint::new(t, s)));
    match name {
        "chicken" => ts(1.5, 0.5),
        "harmony" => ts(0.5, 0.5),
        "stag-hunt" => ts(0.5, -0.5),
        "pd" => ts(1.5, -0.5),
        "chicken-paper" => Some(Game2x2::chicken_integer()),
        _ => None,
    }
}

/// Resolves `--game`: a built-in name or a path to a JSON game file.
pub fn load_game(name: &str) -> Result<Game2x2, UsageError> {
    if let Some(g) = builtin(name) {
        return Ok(g);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(UsageError::new(
            "game",
            format!(
                "`{name}` is neither a file nor one of {}",
                BUILTIN_GAMES.join(", ")
            ),
        ));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError::new("game", format!("{name}: {e}")))?;
    let file: GameFile =
        serde_json::from_str(&text).map_err(|e| UsageError::new("game", format!("{name}: {e}")))?;
    file.to_game()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_inclusive() {
        let r: Range = "0.2:3:0.01".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 281);
        assert!((v[280] - 3.0).abs() < 1e-12);
        assert!("1:0:0.1".parse::<Range>().is_err());
        assert!("0:1:0".parse::<Range>().is_err());
        assert!("0:1".parse::<Range>().is_err());
    }

    #[test]
    fn game_file_layout_is_own_perspective() {
        let f: GameFile =
            serde_json::from_str(r#"{"p1": [[0, 7], [2, 6]], "p2": [[0, 7], [2, 6]]}"#).unwrap();
        assert_eq!(f.to_game().unwrap(), Game2x2::chicken_integer());
        let t: GameFile = serde_json::from_str(r#"{"T": 1.5, "S": 0.5}"#).unwrap();
        assert_eq!(t.to_game().unwrap(), builtin("chicken").unwrap());
    }
}
