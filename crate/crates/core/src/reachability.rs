//! Reachability of the fortune 1-ℓ, and the constructed point whose
//! one-step neighborhood straddles it.
//!
//! `S` is the set of starting fortunes from which bold play can hit
//! exactly 1-ℓ in finitely many bets. Membership is semi-decided:
//!
//! - `InS` comes with an explicit outcome word that replays to an exact
//!   hit;
//! - `NotInS` is only issued above 1-ℓ, from the algebraic obstruction:
//!   a member of S in (1-ℓ, 1] must admit a representation
//!   `2^-c (a + bℓ)` with `c ≥ 1`, `a ≥ 2`, and `a` or `b` odd, and for
//!   irrational ℓ the representation with an odd coefficient is unique,
//!   so the canonical form either satisfies those conditions or rules
//!   membership out;
//! - everything else is `Unknown` at the searched depth.

use std::collections::HashMap;

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{format_word, Fortune, GameParams, Outcome};
use crate::dyadic::DyadicRational;
use crate::ell::EllSpec;
use crate::linear_form::{LinearForm, StateKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReachabilityError {
    #[error("operation requires an irrational stake cap, got {0}")]
    RationalEll(String),
    #[error("counterexample construction requires ℓ < 1/2, got {0}")]
    EllNotBelowHalf(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no valid (d, n) pair found with scale exponent d ≤ {max_scale}")]
    ConstructionFailed { max_scale: u32 },
    #[error("internal validation failed: {0}")]
    InternalCheckFailed(String),
}

/// A fortune written as `2^-c (a + bℓ)` with integer a, b and minimal c.
/// For irrational ℓ this representation is unique, and when c ≥ 1 at
/// least one of a, b is odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraicForm {
    pub a: BigInt,
    pub b: BigInt,
    pub c: u32,
}

impl Serialize for AlgebraicForm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("AlgebraicForm", 3)?;
        s.serialize_field("a", &self.a.to_string())?;
        s.serialize_field("b", &self.b.to_string())?;
        s.serialize_field("c", &self.c)?;
        s.end()
    }
}

impl AlgebraicForm {
    pub fn to_linear_form(&self) -> LinearForm {
        LinearForm::new(
            DyadicRational::new(self.a.clone(), self.c),
            DyadicRational::new(self.b.clone(), self.c),
        )
    }
}

/// Unique minimal-exponent algebraic form of a fortune. Requires ℓ
/// irrational; for rational ℓ the representation is not unique.
pub fn canonical_form(f: &LinearForm, ell: &EllSpec) -> Result<AlgebraicForm, ReachabilityError> {
    if !ell.is_irrational() {
        return Err(ReachabilityError::RationalEll(ell.to_string()));
    }
    let p = f.rational_part();
    let q = f.ell_coeff();
    let c = p.exp().max(q.exp());
    Ok(AlgebraicForm {
        a: p.numer() << (c - p.exp()),
        b: q.numer() << (c - q.exp()),
        c,
    })
}

/// Which membership condition the canonical form violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Obstruction {
    /// Canonical exponent is zero: every representation with c ≥ 1 has
    /// both coefficients even, so no admissible representation exists.
    ScaleExponentZero,
    /// The canonical integer part is below 2, and scaling only makes
    /// both coefficients even.
    IntegerPartBelowTwo,
}

/// Certificate that a fortune above 1-ℓ cannot belong to S.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotInSCertificate {
    pub form: AlgebraicForm,
    pub obstruction: Obstruction,
}

/// Checks the algebraic membership obstruction for a fortune strictly
/// above 1-ℓ. `Ok(None)` means no conclusion, never membership.
pub fn not_in_s_certificate(
    f: &Fortune,
    ell: &EllSpec,
) -> Result<Option<NotInSCertificate>, ReachabilityError> {
    if !ell.is_irrational() {
        return Err(ReachabilityError::RationalEll(ell.to_string()));
    }
    let above = LinearForm::one() - LinearForm::ell_unit();
    if f.value().cmp_value(&above, ell) != std::cmp::Ordering::Greater {
        return Err(ReachabilityError::PreconditionViolated(format!(
            "certificate domain is (1-ℓ, 1], got {}",
            f.value()
        )));
    }
    let form = canonical_form(f.value(), ell)?;
    if form.c == 0 {
        return Ok(Some(NotInSCertificate {
            form,
            obstruction: Obstruction::ScaleExponentZero,
        }));
    }
    if form.a < BigInt::from(2) {
        return Ok(Some(NotInSCertificate {
            form,
            obstruction: Obstruction::IntegerPartBelowTwo,
        }));
    }
    Ok(None)
}

/// Breadth-first search for a shortest outcome word whose exact replay
/// hits 1-ℓ. States coalesce through the memoized visited set, keyed by
/// exact fortune per layer. `None` means no witness within the depth,
/// not non-membership.
pub fn search_hit(params: &GameParams, f: &Fortune, max_depth: u32) -> Option<Vec<Outcome>> {
    let ell = params.ell();
    let target = LinearForm::one() - LinearForm::ell_unit();
    if f.value().eq_value(&target, ell) {
        return Some(Vec::new());
    }
    // arena of (form, parent index + outcome that led here)
    let mut arena: Vec<(Fortune, Option<(usize, Outcome)>)> = vec![(f.clone(), None)];
    let mut visited: HashMap<StateKey, usize> = HashMap::new();
    visited.insert(f.value().state_key(ell), 0);
    let mut layer = vec![0usize];
    for _depth in 0..max_depth {
        let mut next = Vec::new();
        for &i in &layer {
            let cur = arena[i].0.clone();
            if params.absorption(&cur) != crate::chain::Absorption::Active {
                continue;
            }
            for outcome in [Outcome::Win, Outcome::Lose] {
                let child = params.step(&cur, outcome);
                let key = child.value().state_key(ell);
                if visited.contains_key(&key) {
                    continue;
                }
                let idx = arena.len();
                arena.push((child.clone(), Some((i, outcome))));
                visited.insert(key, idx);
                if child.value().eq_value(&target, ell) {
                    // reconstruct the word back to the root
                    let mut word = Vec::new();
                    let mut at = idx;
                    while let Some((parent, o)) = arena[at].1 {
                        word.push(o);
                        at = parent;
                    }
                    word.reverse();
                    return Some(word);
                }
                next.push(idx);
            }
        }
        if next.is_empty() {
            return None;
        }
        layer = next;
    }
    None
}

/// Verdict of the semi-decision procedure for membership in S.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipVerdict {
    InS { witness: Vec<Outcome> },
    NotInS { certificate: NotInSCertificate },
    Unknown { search_depth: u32 },
}

/// Decides membership where possible: witness search first, then the
/// algebraic obstruction for points above 1-ℓ under irrational ℓ.
pub fn membership(params: &GameParams, f: &Fortune, max_depth: u32) -> MembershipVerdict {
    if let Some(witness) = search_hit(params, f, max_depth) {
        return MembershipVerdict::InS { witness };
    }
    let ell = params.ell();
    let above = LinearForm::one() - LinearForm::ell_unit();
    if ell.is_irrational() && f.value().cmp_value(&above, ell) == std::cmp::Ordering::Greater {
        if let Ok(Some(certificate)) = not_in_s_certificate(f, ell) {
            return MembershipVerdict::NotInS { certificate };
        }
    }
    MembershipVerdict::Unknown {
        search_depth: max_depth,
    }
}

/// The constructed fortune f0 with `f0 - ℓ ∈ S` and `f0 + ℓ ∉ S`:
/// `f0 = 2^-d (1 - mℓ) + nℓ` for the minimal valid (m, d, n).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexamplePoint {
    pub m: u32,
    pub d: u32,
    pub n: u32,
    pub f0: LinearForm,
    /// Witness that f0 - ℓ hits 1-ℓ: lose n-1 bets, then win d+m-1.
    pub witness: Vec<Outcome>,
}

/// Which textual reading of the construction's interval condition the
/// chosen (m, d, n) satisfies; recorded because the two readings differ
/// in the source material while the property actually used is
/// `f0 ∈ (ℓ, 1-ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntervalConditionReadings {
    /// `2^-d (1 - ℓ) + nℓ ∈ (1-2ℓ, 1-ℓ)`
    pub with_unit_coefficient: bool,
    /// `2^-d (1 - mℓ) + nℓ ∈ (1-2ℓ, 1-ℓ)`
    pub with_m_coefficient: bool,
}

impl CounterexamplePoint {
    pub fn witness_word(&self) -> String {
        format_word(&self.witness)
    }

    pub fn interval_condition_readings(&self, ell: &EllSpec) -> IntervalConditionReadings {
        let in_band = |x: &LinearForm| {
            let lower = LinearForm::one() - LinearForm::ell_unit().double(); // 1-2ℓ
            let upper = LinearForm::one() - LinearForm::ell_unit(); // 1-ℓ
            x.cmp_value(&lower, ell) == std::cmp::Ordering::Greater
                && x.cmp_value(&upper, ell) == std::cmp::Ordering::Less
        };
        let n_ell = scaled_ell(self.n);
        let unit = (LinearForm::one() - LinearForm::ell_unit()).shr(self.d) + n_ell.clone();
        let with_m =
            (LinearForm::one() - scaled_ell(self.m)).shr(self.d) + n_ell;
        IntervalConditionReadings {
            with_unit_coefficient: in_band(&unit),
            with_m_coefficient: in_band(&with_m),
        }
    }
}

/// k·ℓ as a form.
fn scaled_ell(k: u32) -> LinearForm {
    LinearForm::new(
        DyadicRational::zero(),
        DyadicRational::from_integer(BigInt::from(k)),
    )
}

/// Builds the counterexample point for an irrational ℓ < 1/2, choosing
/// the lexicographically smallest (m, d, n):
///
/// - m is the unique positive integer with `1 - mℓ ∈ (ℓ, 2ℓ]`;
/// - d is the smallest scale with `2^-d (1 - mℓ) < 1 - 2ℓ` admitting
///   some n with `f0 = 2^-d (1 - mℓ) + nℓ ∈ (ℓ, 1-ℓ)` strictly;
/// - the witness (lose n-1, win d+m-1) is replayed exactly and the
///   obstruction for f0 + ℓ is checked before returning.
pub fn construct_counterexample(ell: &EllSpec) -> Result<CounterexamplePoint, ReachabilityError> {
    construct_counterexample_with_scale_cap(ell, 64)
}

pub fn construct_counterexample_with_scale_cap(
    ell: &EllSpec,
    max_scale: u32,
) -> Result<CounterexamplePoint, ReachabilityError> {
    if !ell.is_irrational() {
        return Err(ReachabilityError::RationalEll(ell.to_string()));
    }
    if !ell.is_theorem_ready() {
        return Err(ReachabilityError::EllNotBelowHalf(ell.to_string()));
    }
    let one = LinearForm::one();
    let ell_form = LinearForm::ell_unit();

    // unique m with ℓ < 1 - mℓ ≤ 2ℓ
    let mut m = None;
    for cand in 1..=1_000u32 {
        let rem = &one - &scaled_ell(cand);
        let above = rem.cmp_value(&ell_form, ell) == std::cmp::Ordering::Greater;
        let at_most = rem.cmp_value(&ell_form.double(), ell) != std::cmp::Ordering::Greater;
        if above && at_most {
            m = Some(cand);
            break;
        }
        if rem.sign(ell) <= 0 {
            break;
        }
    }
    let m = m.ok_or_else(|| ReachabilityError::InternalCheckFailed("no m found".into()))?;

    let head = &one - &scaled_ell(m); // 1 - mℓ
    let band_low = &one - &ell_form.double(); // 1 - 2ℓ

    // n cannot exceed (1-ℓ)/ℓ; a small cap suffices
    let n_cap = 4 + (1.0 / ell.to_f64()).ceil() as u32;

    for d in 1..=max_scale {
        let scaled = head.shr(d);
        if scaled.cmp_value(&band_low, ell) != std::cmp::Ordering::Less {
            continue; // 2^-d (1 - mℓ) not yet below 1 - 2ℓ
        }
        for n in 1..=n_cap {
            let f0 = &scaled + &scaled_ell(n);
            let above_ell = f0.cmp_value(&ell_form, ell) == std::cmp::Ordering::Greater;
            let below_goal_gap =
                f0.cmp_value(&(&one - &ell_form), ell) == std::cmp::Ordering::Less;
            if !(above_ell && below_goal_gap) {
                continue;
            }
            let point = finish_construction(ell, m, d, n, f0)?;
            return Ok(point);
        }
    }
    Err(ReachabilityError::ConstructionFailed { max_scale })
}

fn finish_construction(
    ell: &EllSpec,
    m: u32,
    d: u32,
    n: u32,
    f0: LinearForm,
) -> Result<CounterexamplePoint, ReachabilityError> {
    let params_check = |msg: &str| ReachabilityError::InternalCheckFailed(msg.to_string());

    // witness: lose the first n-1 bets, then win the next d+m-1
    let mut witness = vec![Outcome::Lose; (n - 1) as usize];
    witness.extend(std::iter::repeat_n(Outcome::Win, (d + m - 1) as usize));
    debug_assert_eq!(witness.len(), (n + m + d - 2) as usize);

    // replay from f0 - ℓ with any valid win probability; dynamics do not
    // depend on w
    let w = num_rational::BigRational::new(1.into(), 4.into());
    let params = GameParams::new(ell.clone(), w).map_err(|e| params_check(&e.to_string()))?;
    let start = Fortune::new(&f0 - &LinearForm::ell_unit(), ell)
        .map_err(|_| params_check("f0 - ℓ outside [0, 1]"))?;
    let traj = params.trajectory(&start, &witness);
    let target = LinearForm::one() - LinearForm::ell_unit();
    let end = traj
        .last()
        .expect("trajectory contains at least the start");
    if !end.value().eq_value(&target, ell) {
        return Err(params_check("witness replay did not end at 1 - ℓ"));
    }

    // the sibling point f0 + ℓ must carry the non-membership obstruction
    let sibling = Fortune::new(&f0 + &LinearForm::ell_unit(), ell)
        .map_err(|_| params_check("f0 + ℓ outside [0, 1]"))?;
    let cert = not_in_s_certificate(&sibling, ell)
        .map_err(|e| params_check(&format!("certificate precondition: {e}")))?;
    if cert.is_none() {
        return Err(params_check("no obstruction found for f0 + ℓ"));
    }

    Ok(CounterexamplePoint {
        m,
        d,
        n,
        f0,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn surd_ell() -> EllSpec {
        EllSpec::surd(0, 1, 5, 5).unwrap() // 1/√5
    }

    fn params(ell: EllSpec) -> GameParams {
        GameParams::new(ell, BigRational::new(1.into(), 4.into())).unwrap()
    }

    fn dy(n: i64, e: u32) -> DyadicRational {
        DyadicRational::new(n, e)
    }

    #[test]
    fn canonical_form_examples() {
        let ell = surd_ell();
        // 1 - ℓ → (1, -1, 0)
        let f = LinearForm::one() - LinearForm::ell_unit();
        let cf = canonical_form(&f, &ell).unwrap();
        assert_eq!((cf.a.clone(), cf.b.clone(), cf.c), (1.into(), (-1).into(), 0));
        // (1 - 3ℓ)/2 → (1, -3, 1)
        let f = (LinearForm::one() - scaled_ell(3)).halve();
        let cf = canonical_form(&f, &ell).unwrap();
        assert_eq!((cf.a.clone(), cf.b.clone(), cf.c), (1.into(), (-3).into(), 1));
        // 1/2 → (1, 0, 1)
        let f = LinearForm::from_rational_part(dy(1, 1));
        let cf = canonical_form(&f, &ell).unwrap();
        assert_eq!((cf.a.clone(), cf.b.clone(), cf.c), (1.into(), 0.into(), 1));
        // rational ℓ: uniqueness fails
        assert!(canonical_form(&f, &EllSpec::rational(3, 10).unwrap()).is_err());
    }

    #[test]
    fn canonical_form_roundtrip() {
        let ell = surd_ell();
        let f = LinearForm::new(dy(-7, 3), dy(9, 1));
        let cf = canonical_form(&f, &ell).unwrap();
        assert_eq!(cf.to_linear_form(), f);
    }

    #[test]
    fn search_hits() {
        // target at time zero
        let ell = EllSpec::rational(3, 10).unwrap();
        let p = params(ell.clone());
        let target = Fortune::new(LinearForm::one() - LinearForm::ell_unit(), &ell).unwrap();
        assert_eq!(search_hit(&p, &target, 5), Some(vec![]));
        // ℓ = 3/10, f = 1 - ℓ/2 = 17/20: one loss lands on 7/10 = 1 - ℓ
        let f = Fortune::new(
            LinearForm::one() - LinearForm::ell_unit().halve(),
            &ell,
        )
        .unwrap();
        assert_eq!(search_hit(&p, &f, 5), Some(vec![Outcome::Lose]));
    }

    #[test]
    fn certificate_examples() {
        let ell = surd_ell();
        // the goal fortune 1 has canonical form (1, 0, 0): obstructed
        let one = Fortune::new(LinearForm::one(), &ell).unwrap();
        let cert = not_in_s_certificate(&one, &ell).unwrap().unwrap();
        assert_eq!(cert.obstruction, Obstruction::ScaleExponentZero);
        // 1 - ℓ/2 ∈ S (one loss hits 1-ℓ): certificate must not fire
        let f = Fortune::new(LinearForm::one() - LinearForm::ell_unit().halve(), &ell).unwrap();
        assert!(not_in_s_certificate(&f, &ell).unwrap().is_none());
        // below the domain: precondition error
        let low = Fortune::new(LinearForm::ell_unit(), &ell).unwrap();
        assert!(not_in_s_certificate(&low, &ell).is_err());
    }

    #[test]
    fn counterexample_for_inverse_sqrt5() {
        let ell = surd_ell();
        let point = construct_counterexample(&ell).unwrap();
        assert_eq!((point.m, point.d, point.n), (1, 3, 1));
        // f0 = (1-ℓ)/8 + ℓ
        let expected = (LinearForm::one() - LinearForm::ell_unit()).shr(3) + LinearForm::ell_unit();
        assert_eq!(point.f0, expected);
        assert_eq!(point.witness.len(), 3);
        assert_eq!(point.witness_word(), "WWW");
    }

    #[test]
    fn counterexample_for_sqrt2_over_4() {
        let ell = EllSpec::surd(0, 1, 2, 4).unwrap();
        let point = construct_counterexample(&ell).unwrap();
        assert_eq!((point.m, point.d, point.n), (1, 2, 1));
        let expected = (LinearForm::one() - LinearForm::ell_unit()).shr(2) + LinearForm::ell_unit();
        assert_eq!(point.f0, expected);
    }

    #[test]
    fn counterexample_rejects_rational() {
        let err = construct_counterexample(&EllSpec::rational(3, 10).unwrap());
        assert!(matches!(err, Err(ReachabilityError::RationalEll(_))));
    }

    #[test]
    fn membership_verdicts() {
        let ell = surd_ell();
        let p = params(ell.clone());
        let point = construct_counterexample(&ell).unwrap();
        // f0 - ℓ: witnessed member
        let in_s = Fortune::new(&point.f0 - &LinearForm::ell_unit(), &ell).unwrap();
        match membership(&p, &in_s, 12) {
            MembershipVerdict::InS { witness } => {
                let traj = p.trajectory(&in_s, &witness);
                let target = LinearForm::one() - LinearForm::ell_unit();
                assert!(traj.last().unwrap().value().eq_value(&target, &ell));
            }
            other => panic!("expected InS, got {other:?}"),
        }
        // f0 + ℓ: certified non-member
        let out_s = Fortune::new(&point.f0 + &LinearForm::ell_unit(), &ell).unwrap();
        assert!(matches!(
            membership(&p, &out_s, 12),
            MembershipVerdict::NotInS { .. }
        ));
        // an interior point with no conclusion
        let unknown = Fortune::new(LinearForm::from_rational_part(dy(1, 1)), &ell).unwrap();
        assert!(matches!(
            membership(&p, &unknown, 6),
            MembershipVerdict::Unknown { search_depth: 6 }
        ));
    }
}
