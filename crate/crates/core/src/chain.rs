//! Bold-play stake function and exact Markov chain dynamics.
//!
//! The bold stake is `s(f) = min{ℓ, f, 1-f}`; a win moves the fortune to
//! `f + s(f)`, a loss to `f - s(f)`. Both absorbing states self-loop with
//! stake zero, so fixed-length trajectories need no special casing.

use std::cmp::Ordering;
use std::io;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ell::{EllSpec, EllSpecError};
use crate::linear_form::LinearForm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Ell(#[from] EllSpecError),
    #[error("win probability must lie strictly in (0, 1/2), got {0}")]
    WinProbOutOfRange(String),
    #[error("fortune must lie in [0, 1], got {0}")]
    FortuneOutOfRange(String),
    #[error("theorem pipeline requires an irrational stake cap below 1/2, got {0}")]
    NotTheoremReady(String),
}

/// Game parameters: stake cap ℓ and subfair win probability w.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameParams {
    ell: EllSpec,
    win_prob: BigRational,
    lose_prob: BigRational,
}

impl GameParams {
    pub fn new(ell: EllSpec, win_prob: BigRational) -> Result<Self, ChainError> {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        if !win_prob.is_positive() || win_prob >= half {
            return Err(ChainError::WinProbOutOfRange(win_prob.to_string()));
        }
        let lose_prob = BigRational::one() - &win_prob;
        Ok(GameParams {
            ell,
            win_prob,
            lose_prob,
        })
    }

    pub fn ell(&self) -> &EllSpec {
        &self.ell
    }

    pub fn win_prob(&self) -> &BigRational {
        &self.win_prob
    }

    pub fn lose_prob(&self) -> &BigRational {
        &self.lose_prob
    }

    /// Checks the hypotheses of the improvement theorem: ℓ irrational and
    /// strictly below 1/2.
    pub fn require_theorem_ready(&self) -> Result<(), ChainError> {
        if self.ell.is_theorem_ready() {
            Ok(())
        } else {
            Err(ChainError::NotTheoremReady(self.ell.to_string()))
        }
    }

    /// Bold stake `min{ℓ, f, 1-f}`, selected by exact sign comparisons.
    pub fn stake(&self, f: &Fortune) -> LinearForm {
        let mut s = LinearForm::ell_unit();
        if f.value().cmp_value(&s, &self.ell) == Ordering::Less {
            s = f.value().clone();
        }
        let remaining = LinearForm::one() - f.value().clone();
        if remaining.cmp_value(&s, &self.ell) == Ordering::Less {
            s = remaining;
        }
        s
    }

    /// One exact transition.
    pub fn step(&self, f: &Fortune, outcome: Outcome) -> Fortune {
        let s = self.stake(f);
        let next = match outcome {
            Outcome::Win => f.value() + &s,
            Outcome::Lose => f.value() - &s,
        };
        Fortune(next)
    }

    /// Exact fold of `step`; the result has length `outcomes.len() + 1`.
    pub fn trajectory(&self, f0: &Fortune, outcomes: &[Outcome]) -> Vec<Fortune> {
        let mut out = Vec::with_capacity(outcomes.len() + 1);
        out.push(f0.clone());
        let mut cur = f0.clone();
        for &o in outcomes {
            cur = self.step(&cur, o);
            out.push(cur.clone());
        }
        out
    }

    /// Absorption state of a fortune, decided by exact value comparison.
    pub fn absorption(&self, f: &Fortune) -> Absorption {
        if f.value().eq_value(&LinearForm::one(), &self.ell) {
            Absorption::Goal
        } else if f.value().eq_value(&LinearForm::zero(), &self.ell) {
            Absorption::Ruin
        } else {
            Absorption::Active
        }
    }
}

/// A validated fortune in [0, 1].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fortune(LinearForm);

impl Fortune {
    pub fn new(value: LinearForm, ell: &EllSpec) -> Result<Self, ChainError> {
        let nonnegative = value.sign(ell) >= 0;
        let at_most_one = (LinearForm::one() - value.clone()).sign(ell) >= 0;
        if nonnegative && at_most_one {
            Ok(Fortune(value))
        } else {
            Err(ChainError::FortuneOutOfRange(value.to_string()))
        }
    }

    pub fn value(&self) -> &LinearForm {
        &self.0
    }

    pub fn into_inner(self) -> LinearForm {
        self.0
    }
}

/// A single bet outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Win,
    Lose,
}

impl Outcome {
    pub fn as_char(self) -> char {
        match self {
            Outcome::Win => 'W',
            Outcome::Lose => 'L',
        }
    }
}

/// Parses an outcome word like "WLLW".
pub fn parse_word(s: &str) -> Result<Vec<Outcome>, String> {
    s.chars()
        .map(|c| match c.to_ascii_uppercase() {
            'W' => Ok(Outcome::Win),
            'L' => Ok(Outcome::Lose),
            other => Err(format!("invalid outcome character {other:?} (expected W or L)")),
        })
        .collect()
}

/// Renders an outcome word as "W"/"L" characters.
pub fn format_word(word: &[Outcome]) -> String {
    word.iter().map(|o| o.as_char()).collect()
}

/// Absorption status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Absorption {
    Goal,
    Ruin,
    Active,
}

/// Writes an exact trajectory as CSV with columns
/// `step,outcome,p_num,p_exp,q_num,q_exp,float_approx`.
/// Row 0 is the initial fortune with an empty outcome column.
pub fn write_trajectory_csv<W: io::Write>(
    mut w: W,
    ell: &EllSpec,
    fortunes: &[Fortune],
    outcomes: &[Outcome],
) -> io::Result<()> {
    writeln!(w, "step,outcome,p_num,p_exp,q_num,q_exp,float_approx")?;
    for (i, f) in fortunes.iter().enumerate() {
        let outcome = if i == 0 {
            String::new()
        } else {
            outcomes[i - 1].as_char().to_string()
        };
        let v = f.value();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            i,
            outcome,
            v.rational_part().numer(),
            v.rational_part().exp(),
            v.ell_coeff().numer(),
            v.ell_coeff().exp(),
            v.to_f64(ell),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicRational;
    use num_traits::Zero;

    fn params(ell: EllSpec, num: i64, den: i64) -> GameParams {
        GameParams::new(ell, BigRational::new(BigInt::from(num), BigInt::from(den))).unwrap()
    }

    fn dy(n: i64, e: u32) -> DyadicRational {
        DyadicRational::new(n, e)
    }

    fn fortune(params: &GameParams, pn: i64, pe: u32, qn: i64, qe: u32) -> Fortune {
        Fortune::new(
            LinearForm::new(dy(pn, pe), dy(qn, qe)),
            params.ell(),
        )
        .unwrap()
    }

    #[test]
    fn param_validation() {
        let ell = EllSpec::rational(3, 10).unwrap();
        assert!(GameParams::new(ell.clone(), BigRational::new(1.into(), 2.into())).is_err());
        assert!(GameParams::new(ell.clone(), BigRational::zero()).is_err());
        assert!(GameParams::new(ell, BigRational::new(49.into(), 100.into())).is_ok());
    }

    #[test]
    fn stake_cases() {
        // ℓ = 3/10, f = 1/2: cap binds
        let p = params(EllSpec::rational(3, 10).unwrap(), 1, 4);
        let f = fortune(&p, 1, 1, 0, 0);
        let s = p.stake(&f);
        assert!(s.eq_value(&LinearForm::ell_unit(), p.ell()));
        // f = 1/10 < ℓ: fortune binds (1/10 = 1 - 3ℓ at ℓ = 3/10)
        let f = fortune(&p, 1, 0, -3, 0);
        assert!(p.stake(&f).eq_value(f.value(), p.ell()));
        let f = fortune(&p, 1, 4, 0, 0);
        assert!(p.stake(&f).eq_value(f.value(), p.ell()));
        // f = 1 - ℓ/4: distance to goal binds
        let f = Fortune::new(
            LinearForm::one() - LinearForm::ell_unit().shr(2),
            p.ell(),
        )
        .unwrap();
        assert!(p.stake(&f).eq_value(&LinearForm::ell_unit().shr(2), p.ell()));
    }

    #[test]
    fn step_examples() {
        // ℓ = 3/10, f = 1/2: win → 4/5, lose → 1/5
        let p = params(EllSpec::rational(3, 10).unwrap(), 1, 4);
        let f = fortune(&p, 1, 1, 0, 0);
        let up = p.step(&f, Outcome::Win);
        let down = p.step(&f, Outcome::Lose);
        // 1/2 + 3/10 = 4/5 and 1/2 - 3/10 = 1/5, as forms 1/2 ± ℓ
        assert!(up
            .value()
            .eq_value(&(LinearForm::new(dy(1, 1), dy(1, 0))), p.ell()));
        assert!(down
            .value()
            .eq_value(&(LinearForm::new(dy(1, 1), dy(-1, 0))), p.ell()));
        // absorbed at 1: stake 0, self-loop
        let one = fortune(&p, 1, 0, 0, 0);
        assert_eq!(p.step(&one, Outcome::Win), one);
    }

    #[test]
    fn trajectory_unrolls() {
        // ℓ = 1/2, f0 = 1/4, WW → [1/4, 1/2, 1]
        let p = params(EllSpec::rational(1, 2).unwrap(), 3, 10);
        let f0 = fortune(&p, 1, 2, 0, 0);
        let traj = p.trajectory(&f0, &[Outcome::Win, Outcome::Win]);
        assert_eq!(traj.len(), 3);
        assert!(traj[1].value().eq_value(&LinearForm::new(dy(1, 1), dy(0, 0)), p.ell()));
        assert_eq!(p.absorption(&traj[2]), Absorption::Goal);

        // ℓ = 3/10, f0 = 1/2, LL → [1/2, 1/5, 0] (second stake is 1/5)
        let p = params(EllSpec::rational(3, 10).unwrap(), 1, 4);
        let f0 = fortune(&p, 1, 1, 0, 0);
        let traj = p.trajectory(&f0, &[Outcome::Lose, Outcome::Lose]);
        assert_eq!(p.absorption(&traj[2]), Absorption::Ruin);
        // empty word: single state
        assert_eq!(p.trajectory(&f0, &[]).len(), 1);
    }

    #[test]
    fn absorption_by_value() {
        let p = params(EllSpec::rational(1, 2).unwrap(), 3, 10);
        // 0 + 2ℓ has value 1 when ℓ = 1/2
        let f = fortune(&p, 0, 0, 2, 0);
        assert_eq!(p.absorption(&f), Absorption::Goal);
        let ell_point = fortune(&p, 0, 0, 1, 0);
        assert_eq!(p.absorption(&ell_point), Absorption::Active);
    }

    #[test]
    fn word_parsing() {
        assert_eq!(parse_word("WLw").unwrap().len(), 3);
        assert!(parse_word("WX").is_err());
        assert_eq!(format_word(&[Outcome::Win, Outcome::Lose]), "WL");
    }

    #[test]
    fn csv_export() {
        let p = params(EllSpec::rational(3, 10).unwrap(), 1, 4);
        let f0 = fortune(&p, 1, 1, 0, 0);
        let word = [Outcome::Lose, Outcome::Lose];
        let traj = p.trajectory(&f0, &word);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, p.ell(), &traj, &word).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,outcome,p_num,p_exp,q_num,q_exp,float_approx");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,,1,1,0,0,"));
        assert!(lines[2].starts_with("1,L,"));
    }
}
