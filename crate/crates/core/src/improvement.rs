//! Certificates that a one-step deviation strictly beats bold play.
//!
//! The deviation stakes `s(f) - ε` once and plays boldly afterwards. Its
//! success probability is `w·Q(f + s(f) - ε) + (1-w)·Q(f - s(f) + ε)`;
//! bold play's is `Q(f)`. A certificate is issued only on strict
//! interval separation: the lower bound of the deviation side must
//! exceed the upper bound of the bold side, so the exact-rational margin
//! is itself a machine-checkable proof of the strict inequality at this
//! `(f, ε)`. Midpoint comparisons are reporting-only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;
use thiserror::Error;

use crate::chain::{ChainError, Fortune, GameParams};
use crate::dyadic::DyadicRational;
use crate::interval::{ExactInterval, ProbInterval};
use crate::linear_form::LinearForm;
use crate::qsolver::{q_bounds, Budget, QSolverError};
use crate::reachability::{construct_counterexample, ReachabilityError};

#[derive(Debug, Error, Clone)]
pub enum ImprovementError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Solver(#[from] QSolverError),
    #[error(transparent)]
    Reachability(#[from] ReachabilityError),
    #[error("no certificate found over {attempts} attempts; best margin {best_margin:?}")]
    SearchExhausted {
        attempts: usize,
        /// Best (largest) lower-bound margin seen, as a float for display.
        best_margin: Option<f64>,
    },
    #[error("epsilon grid entries must be powers of two, got {0}")]
    EpsilonNotPowerOfTwo(String),
}

/// Proof object for the strict improvement inequality at one `(f, ε)`.
#[derive(Debug, Clone, Serialize)]
pub struct ImprovementCertificate {
    pub f: LinearForm,
    pub epsilon: String,
    /// Enclosure of the deviation side `w·Q(f+s(f)-ε) + (1-w)·Q(f-s(f)+ε)`.
    pub lhs: ProbInterval,
    /// Enclosure of the bold side `Q(f)`.
    pub rhs: ProbInterval,
    /// Exact positive margin `lhs.lo - rhs.hi`, serialized as a string.
    pub margin: String,
    pub margin_float: f64,
    pub budget: Budget,
    pub states_explored: usize,
}

impl ImprovementCertificate {
    pub fn margin_ratio(&self) -> BigRational {
        self.margin.parse().expect("margin serialized from an exact rational")
    }
}

fn epsilon_form(epsilon: &DyadicRational) -> LinearForm {
    LinearForm::from_rational_part(epsilon.clone())
}

/// Both sides of the deviation inequality with their certified margin.
struct MarginEvaluation {
    lhs: ProbInterval,
    rhs: ProbInterval,
    margin: BigRational,
    states_explored: usize,
}

fn evaluate_margin(
    params: &GameParams,
    f: &Fortune,
    epsilon: &DyadicRational,
    budget: &Budget,
) -> Result<MarginEvaluation, ImprovementError> {
    let ell = params.ell();
    let ell_form = LinearForm::ell_unit();
    if epsilon.signum() <= 0 {
        return Err(ImprovementError::PreconditionViolated(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let eps = epsilon_form(epsilon);
    if eps.cmp_value(&ell_form, ell) != std::cmp::Ordering::Less {
        return Err(ImprovementError::PreconditionViolated(format!(
            "epsilon {epsilon} must be below the bold stake ℓ"
        )));
    }
    let interior = f.value().cmp_value(&ell_form, ell) == std::cmp::Ordering::Greater
        && f.value()
            .cmp_value(&(LinearForm::one() - ell_form.clone()), ell)
            == std::cmp::Ordering::Less;
    if !interior {
        return Err(ImprovementError::PreconditionViolated(format!(
            "fortune {} must lie strictly between ℓ and 1-ℓ",
            f.value()
        )));
    }

    let up = Fortune::new(f.value() + &ell_form - eps.clone(), ell)?;
    let down = Fortune::new(f.value() - &ell_form + eps, ell)?;
    let (q_up, s1) = q_bounds(params, &up, budget)?;
    let (q_down, s2) = q_bounds(params, &down, budget)?;
    let (q_bold, s3) = q_bounds(params, f, budget)?;

    let lhs = ProbInterval::mix(params.win_prob(), &q_up, &q_down);
    let margin = lhs.lo() - q_bold.hi();
    Ok(MarginEvaluation {
        lhs,
        rhs: q_bold,
        margin,
        states_explored: s1.states_explored + s2.states_explored + s3.states_explored,
    })
}

fn certificate_from(
    evaluation: MarginEvaluation,
    f: &Fortune,
    epsilon: &DyadicRational,
    budget: &Budget,
) -> Option<ImprovementCertificate> {
    if !evaluation.margin.is_positive() {
        return None;
    }
    Some(ImprovementCertificate {
        f: f.value().clone(),
        epsilon: epsilon.to_string(),
        lhs: evaluation.lhs,
        rhs: evaluation.rhs,
        margin_float: crate::linear_form::ratio_to_f64_floor(&evaluation.margin),
        margin: evaluation.margin.to_string(),
        budget: budget.clone(),
        states_explored: evaluation.states_explored,
    })
}

/// Attempts to certify `w·Q(f+ℓ-ε) + (1-w)·Q(f-ℓ+ε) > Q(f)` at interval
/// precision given by the budget. Requires `f ∈ (ℓ, 1-ℓ)` (so the bold
/// stake is exactly ℓ) and `0 < ε < ℓ`. `Ok(None)` means inconclusive at
/// this budget, not a refutation.
pub fn verify_improvement(
    params: &GameParams,
    f: &Fortune,
    epsilon: &DyadicRational,
    budget: &Budget,
) -> Result<Option<ImprovementCertificate>, ImprovementError> {
    let evaluation = evaluate_margin(params, f, epsilon, budget)?;
    Ok(certificate_from(evaluation, f, epsilon, budget))
}

/// Default ε grid 2^-4 .. 2^-24.
pub fn default_epsilon_grid() -> Vec<DyadicRational> {
    (4..=24).map(DyadicRational::unit).collect()
}

/// End-to-end reproduction of the improvement theorem: construct the
/// counterexample point f0, then scan `f = f0 - ε` over the ε grid with
/// escalating budgets until strict separation certifies. Exhaustion is
/// reported with the best margins achieved, never hidden.
pub fn find_improvement(
    params: &GameParams,
    budget: &Budget,
    epsilon_grid: &[DyadicRational],
) -> Result<ImprovementCertificate, ImprovementError> {
    params.require_theorem_ready()?;
    let ell = params.ell();
    let point = construct_counterexample(ell)?;
    let mut attempts = 0;
    let mut best_margin: Option<BigRational> = None;

    // pre-scan the whole grid coarsely, then escalate; large-ε entries
    // can never certify, so the cheap pass discards them fast
    let coarse = Budget::new(
        budget.max_depth.min(48),
        budget.max_states / 4 + 1,
        budget
            .target_width
            .clone()
            .max(BigRational::new(1.into(), 3_000_000.into())),
    );
    let ladder = [coarse, budget.clone(), budget.escalated(1)];

    for scaled in &ladder {
        for epsilon in epsilon_grid {
            let f_form = &point.f0 - &epsilon_form(epsilon);
            let Ok(f) = Fortune::new(f_form, ell) else {
                continue;
            };
            // stay inside the band where the bold stake is exactly ℓ
            let interior = f.value().cmp_value(&LinearForm::ell_unit(), ell)
                == std::cmp::Ordering::Greater;
            if !interior {
                continue;
            }
            attempts += 1;
            match evaluate_margin(params, &f, epsilon, scaled) {
                Ok(evaluation) => {
                    if best_margin.as_ref().is_none_or(|m| &evaluation.margin > m) {
                        best_margin = Some(evaluation.margin.clone());
                    }
                    if let Some(cert) = certificate_from(evaluation, &f, epsilon, scaled) {
                        return Ok(cert);
                    }
                }
                Err(ImprovementError::PreconditionViolated(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Err(ImprovementError::SearchExhausted {
        attempts,
        best_margin: best_margin
            .as_ref()
            .map(crate::linear_form::ratio_to_f64_floor),
    })
}

/// Outcome of the small-cap heuristic comparison at `f = 1/2 - δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HpsVerdict {
    DeviationBetter,
    BoldBetter,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct HpsReport {
    pub f: LinearForm,
    pub delta: String,
    pub bold: ProbInterval,
    pub deviation: ProbInterval,
    pub verdict: HpsVerdict,
    /// `deviation.lo - bold.hi` when positive proves the deviation wins.
    pub separation_margin_float: f64,
}

/// Compares bold play against "first stake ℓ - δ, then bold" from
/// `f = 1/2 - δ`, for ℓ ∈ (1/4, 1/3). Strict separation is certified
/// exactly as in [`verify_improvement`]; an inconclusive or reversed
/// outcome is reported, not suppressed.
pub fn hps_demo(
    params: &GameParams,
    delta: &DyadicRational,
    budget: &Budget,
) -> Result<HpsReport, ImprovementError> {
    let ell = params.ell();
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    let third = BigRational::new(BigInt::from(1), BigInt::from(3));
    let in_band = ell.cmp_ratio(&quarter) == std::cmp::Ordering::Greater
        && ell.cmp_ratio(&third) == std::cmp::Ordering::Less;
    if !in_band {
        return Err(ImprovementError::PreconditionViolated(format!(
            "heuristic band requires 1/4 < ℓ < 1/3, got {ell}"
        )));
    }
    if delta.signum() < 0 {
        return Err(ImprovementError::PreconditionViolated(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let delta_form = epsilon_form(delta);
    if delta_form.cmp_value(&LinearForm::ell_unit(), ell) != std::cmp::Ordering::Less {
        return Err(ImprovementError::PreconditionViolated(format!(
            "delta {delta} must be below ℓ"
        )));
    }

    let half = LinearForm::from_rational_part(DyadicRational::new(1, 1));
    let f = Fortune::new(&half - &delta_form, ell)?;
    let (bold, _) = q_bounds(params, &f, budget)?;

    let deviation = if delta.is_zero() {
        // identical strategies, identical computation
        bold.clone()
    } else {
        let up = Fortune::new(f.value() + &LinearForm::ell_unit() - delta_form.clone(), ell)?;
        let down = Fortune::new(f.value() - &LinearForm::ell_unit() + delta_form, ell)?;
        let (a, _) = q_bounds(params, &up, budget)?;
        let (b, _) = q_bounds(params, &down, budget)?;
        ProbInterval::mix(params.win_prob(), &a, &b)
    };

    let sep = deviation.lo() - bold.hi();
    let verdict = if sep.is_positive() {
        HpsVerdict::DeviationBetter
    } else if (bold.lo() - deviation.hi()).is_positive() {
        HpsVerdict::BoldBetter
    } else {
        HpsVerdict::Inconclusive
    };
    Ok(HpsReport {
        f: f.value().clone(),
        delta: delta.to_string(),
        bold,
        deviation,
        verdict,
        separation_margin_float: crate::linear_form::ratio_to_f64_floor(&sep),
    })
}

/// Which side of f the difference quotient probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Δ(ε) = Q(f) - Q(f - ε); ratios stay bounded below for f ∈ S.
    Below,
    /// Δ(ε) = Q(f) - Q(f - 2ε); ratios vanish for f ∉ S.
    Above,
}

/// One row of the scaling table: ε = 2^-k, the certified Δ enclosure,
/// and the normalized ratio Δ / (1-w)^k. The normalizer is exact because
/// ε is a power of two: (1-w)^(-log ε) = (1-w)^k.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub k: u32,
    pub epsilon: String,
    pub delta: ExactInterval,
    pub ratio: ExactInterval,
    pub delta_float: (f64, f64),
    pub ratio_float: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingDiagnostic {
    pub base: LinearForm,
    pub side: Side,
    pub rows: Vec<ScalingRow>,
}

/// Certified difference quotients of Q at a fortune, normalized by the
/// theoretical decay rate. Requires a strictly decreasing power-of-two
/// ε grid with every probe staying inside (0, 1).
pub fn scaling_diagnostic(
    params: &GameParams,
    f: &Fortune,
    side: Side,
    epsilons: &[DyadicRational],
    budget: &Budget,
) -> Result<ScalingDiagnostic, ImprovementError> {
    use num_traits::One as _;
    let ell = params.ell();
    let mut rows = Vec::new();
    let mut prev: Option<&DyadicRational> = None;
    let (q_f, _) = q_bounds(params, f, budget)?;
    for epsilon in epsilons {
        if epsilon.signum() <= 0 || !epsilon.numer().magnitude().is_one() {
            return Err(ImprovementError::EpsilonNotPowerOfTwo(epsilon.to_string()));
        }
        if let Some(p) = prev {
            if epsilon >= p {
                return Err(ImprovementError::PreconditionViolated(
                    "epsilon grid must be strictly decreasing".into(),
                ));
            }
        }
        prev = Some(epsilon);
        let k = epsilon.exp();
        let probe_step = match side {
            Side::Below => epsilon_form(epsilon),
            Side::Above => epsilon_form(epsilon).double(),
        };
        let probe = Fortune::new(f.value() - &probe_step, ell).map_err(|_| {
            ImprovementError::PreconditionViolated(format!(
                "probe {} - {} leaves [0, 1]",
                f.value(),
                probe_step
            ))
        })?;
        if params.absorption(&probe) != crate::chain::Absorption::Active {
            return Err(ImprovementError::PreconditionViolated(
                "probe fortune is absorbing; choose smaller epsilons".into(),
            ));
        }
        let (q_probe, _) = q_bounds(params, &probe, budget)?;
        let delta = ExactInterval::sub(&q_f, &q_probe);
        let normalizer = pow_ratio(params.lose_prob(), k);
        let ratio = delta.div_positive(&normalizer);
        rows.push(ScalingRow {
            k,
            epsilon: epsilon.to_string(),
            delta_float: delta.to_f64_pair(),
            ratio_float: ratio.to_f64_pair(),
            delta,
            ratio,
        });
    }
    Ok(ScalingDiagnostic {
        base: f.value().clone(),
        side,
        rows,
    })
}

fn pow_ratio(x: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ell::EllSpec;
    use crate::qsolver::Budget;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn budget(width_den: i64) -> Budget {
        Budget::new(64, 200_000, r(1, width_den))
    }

    #[test]
    fn epsilon_zero_rejected() {
        let ell = EllSpec::surd(0, 1, 5, 5).unwrap();
        let params = GameParams::new(ell.clone(), r(1, 4)).unwrap();
        let f = Fortune::new(
            LinearForm::from_rational_part(DyadicRational::new(1, 1)),
            &ell,
        )
        .unwrap();
        let err = verify_improvement(&params, &f, &DyadicRational::zero(), &budget(1000));
        assert!(matches!(err, Err(ImprovementError::PreconditionViolated(_))));
    }

    #[test]
    fn substitution_identity_of_arguments() {
        // with f = f0 - ε: f + ℓ - ε = f0 + ℓ - 2ε and f - ℓ + ε = f0 - ℓ
        let ell = EllSpec::surd(0, 1, 5, 5).unwrap();
        let point = construct_counterexample(&ell).unwrap();
        let eps = DyadicRational::unit(6);
        let eform = LinearForm::from_rational_part(eps.clone());
        let f = &point.f0 - &eform;
        let up = &f + &LinearForm::ell_unit() - eform.clone();
        let down = &f - &LinearForm::ell_unit() + eform.clone();
        let expected_up = &point.f0 + &LinearForm::ell_unit() - eform.double();
        let expected_down = &point.f0 - &LinearForm::ell_unit();
        assert!(up.eq_value(&expected_up, &ell));
        assert!(down.eq_value(&expected_down, &ell));
    }

    #[test]
    fn certifies_at_small_w() {
        // the margin first turns positive near ε = 2^-12; scan that band
        let ell = EllSpec::surd(0, 1, 5, 5).unwrap();
        let params = GameParams::new(ell.clone(), r(1, 20)).unwrap();
        let grid: Vec<DyadicRational> = (12..=14).map(DyadicRational::unit).collect();
        let cert = find_improvement(
            &params,
            &Budget::new(72, 200_000, r(1, 100_000_000)),
            &grid,
        )
        .unwrap();
        assert!(cert.margin_ratio().is_positive());
        assert!(cert.lhs.lo() > cert.rhs.hi());
    }

    #[test]
    fn negative_control_never_certifies() {
        // ℓ = 1/3: bold play is optimal; certification would be a bug
        let ell = EllSpec::rational(1, 3).unwrap();
        let params = GameParams::new(ell.clone(), r(1, 4)).unwrap();
        for (num, den, eps_exp) in [(1i64, 2i64, 4u32), (3, 8, 5), (5, 8, 6)] {
            let f = Fortune::new(
                LinearForm::from_rational_part(DyadicRational::new(
                    BigInt::from(num),
                    den.trailing_zeros(),
                )),
                &ell,
            )
            .unwrap();
            let got = verify_improvement(
                &params,
                &f,
                &DyadicRational::unit(eps_exp),
                &budget(1_000_000),
            )
            .unwrap();
            assert!(got.is_none(), "certified a false improvement at {num}/{den}");
        }
    }

    #[test]
    fn search_exhaustion_reports_margins() {
        // a single too-coarse ε cannot certify; the error carries the
        // best margin rather than hiding the failure
        let ell = EllSpec::surd(0, 1, 5, 5).unwrap();
        let params = GameParams::new(ell, r(1, 4)).unwrap();
        let grid = [DyadicRational::unit(4)];
        let err = find_improvement(&params, &Budget::new(40, 50_000, r(1, 10_000)), &grid);
        match err {
            Err(ImprovementError::SearchExhausted {
                attempts,
                best_margin,
            }) => {
                assert!(attempts >= 1);
                assert!(best_margin.unwrap() < 0.0);
            }
            other => panic!("expected SearchExhausted, got {other:?}"),
        }
    }

    #[test]
    fn hps_near_fair_is_reported_not_forced() {
        // close to a fair game the deviation's edge vanishes; the demo
        // must report whatever the intervals support
        let ell = EllSpec::rational(3, 10).unwrap();
        let params = GameParams::new(ell, r(49, 100)).unwrap();
        let report = hps_demo(&params, &DyadicRational::unit(6), &budget(1_000_000)).unwrap();
        // any verdict is acceptable; the point is an honest report
        assert!(report.bold.width() <= r(1, 100_000));
    }

    #[test]
    fn hps_band_enforced() {
        let ell = EllSpec::surd(0, 1, 5, 5).unwrap(); // ≈ 0.447, outside (1/4, 1/3)
        let params = GameParams::new(ell, r(1, 10)).unwrap();
        let err = hps_demo(&params, &DyadicRational::unit(6), &budget(1000));
        assert!(matches!(err, Err(ImprovementError::PreconditionViolated(_))));
    }

    #[test]
    fn hps_delta_zero_gives_equal_intervals() {
        let ell = EllSpec::rational(3, 10).unwrap();
        let params = GameParams::new(ell, r(1, 4)).unwrap();
        let report = hps_demo(&params, &DyadicRational::zero(), &budget(1_000_000)).unwrap();
        assert_eq!(report.bold, report.deviation);
        assert_eq!(report.verdict, HpsVerdict::Inconclusive);
    }

    #[test]
    fn scaling_rejects_non_powers() {
        let ell = EllSpec::rational(3, 10).unwrap();
        let params = GameParams::new(ell.clone(), r(1, 4)).unwrap();
        let f = Fortune::new(
            LinearForm::from_rational_part(DyadicRational::new(1, 1)),
            &ell,
        )
        .unwrap();
        let bad = [DyadicRational::new(3, 3)];
        let err = scaling_diagnostic(&params, &f, Side::Below, &bad, &budget(1000));
        assert!(matches!(err, Err(ImprovementError::EpsilonNotPowerOfTwo(_))));
        // empty grid: empty table
        let table =
            scaling_diagnostic(&params, &f, Side::Below, &[], &budget(1000)).unwrap();
        assert!(table.rows.is_empty());
    }
}
