//! Two-gambler coupling and exhaustive verification of its
//! supermartingale estimates.
//!
//! Both gamblers share every win/lose outcome. The ordered difference
//! `X_k - Y_k` evolves by the factor `1 ± h(X_k, Y_k)` where
//! `h(f, f*) = (s(f) - s(f*))/(f - f*)`, and the distance statistic
//! `W_k = (X_k - Y_k)^(-log2(1-w))` is driven by
//! `g(x) = w(1+x)^p + (1-w)(1-x)^p` with `p = -log2(1-w)`.
//!
//! Fortunes, stopping-rule comparisons, and expectation weights are all
//! exact; only `W`, `g`, and `Z` are evaluated in directed-rounding
//! float intervals, with inequality tolerances that include the tracked
//! widths. The stopping-time estimates are verified by enumerating every
//! outcome word up to the relevant horizon, so the reported expectations
//! are exact finite sums, not samples.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{Absorption, ChainError, Fortune, GameParams, Outcome};
use crate::fenv::{neg_log2_one_minus, FInterval};
use crate::linear_form::{LinearForm, StateKey};

#[derive(Debug, Error, Clone)]
pub enum CouplingError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("proved inequality failed (implementation bug): {0}")]
    InequalityViolated(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// One step of the coupled evolution, with `x ≥ y` maintained exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledState {
    pub x: Fortune,
    pub y: Fortune,
    pub k: usize,
}

/// Evolves both gamblers along a shared outcome word, checking the
/// ordering and doubling invariants exactly at every step.
pub fn coupled_run(
    params: &GameParams,
    f1: &Fortune,
    f2: &Fortune,
    outcomes: &[Outcome],
) -> Result<Vec<CoupledState>, CouplingError> {
    let ell = params.ell();
    if f2.value().cmp_value(f1.value(), ell) == std::cmp::Ordering::Greater {
        return Err(CouplingError::HypothesisViolated(format!(
            "coupling requires f2 ≤ f1, got f1 = {}, f2 = {}",
            f1.value(),
            f2.value()
        )));
    }
    let initial_gap = f1.value() - f2.value();
    let mut states = Vec::with_capacity(outcomes.len() + 1);
    states.push(CoupledState {
        x: f1.clone(),
        y: f2.clone(),
        k: 0,
    });
    let mut x = f1.clone();
    let mut y = f2.clone();
    let mut doubling_cap = initial_gap;
    for (i, &o) in outcomes.iter().enumerate() {
        x = params.step(&x, o);
        y = params.step(&y, o);
        doubling_cap = doubling_cap.double();
        let gap = x.value() - y.value();
        if gap.sign(ell) < 0 {
            return Err(CouplingError::InequalityViolated(format!(
                "ordering X ≥ Y broken at step {}",
                i + 1
            )));
        }
        if (&doubling_cap - &gap).sign(ell) < 0 {
            return Err(CouplingError::InequalityViolated(format!(
                "doubling bound X_k - Y_k ≤ 2^k (f1 - f2) broken at step {}",
                i + 1
            )));
        }
        states.push(CoupledState {
            x: x.clone(),
            y: y.clone(),
            k: i + 1,
        });
    }
    Ok(states)
}

/// Exact sign of `h(f, f*)` for `f* ≤ f`; equals the sign of
/// `s(f) - s(f*)` when `f > f*`, and +1 on the diagonal where h = 1.
pub fn h_sign(params: &GameParams, f: &Fortune, fstar: &Fortune) -> i32 {
    let ell = params.ell();
    if f.value().eq_value(fstar.value(), ell) {
        return 1;
    }
    (params.stake(f) - params.stake(fstar)).sign(ell)
}

/// Exact test `h(f, f*) ≥ 1/2`, the trigger in every stopping rule:
/// equivalent to `2(s(f) - s(f*)) ≥ f - f*` by positivity of the gap.
pub fn h_ge_half(params: &GameParams, f: &Fortune, fstar: &Fortune) -> bool {
    let ell = params.ell();
    if f.value().eq_value(fstar.value(), ell) {
        return true; // h = 1 by definition
    }
    let stake_gap = params.stake(f) - params.stake(fstar);
    let gap = f.value() - fstar.value();
    (stake_gap.double() - gap).sign(ell) >= 0
}

/// Enclosure of `h(f, f*) = (s(f) - s(f*))/(f - f*)`; exact 1 on the
/// diagonal. Reported in floats since it only feeds diagnostics.
pub fn h_interval(params: &GameParams, f: &Fortune, fstar: &Fortune) -> FInterval {
    let ell = params.ell();
    if f.value().eq_value(fstar.value(), ell) {
        return FInterval::exact(1.0);
    }
    let num = params.stake(f) - params.stake(fstar);
    let den = f.value() - fstar.value();
    // widen precision with the dyadic scale of the gap so tiny
    // denominators still produce tight quotients
    let scale_bits = den
        .rational_part()
        .exp()
        .max(den.ell_coeff().exp())
        .min(1920);
    let bits = 128 + scale_bits;
    let (nlo, nhi) = num.ratio_bounds(ell, bits);
    let (dlo, dhi) = den.ratio_bounds(ell, bits);
    debug_assert!(dlo.is_positive());
    FInterval::from_ratio_bounds(&(&nlo / &dhi).min(&nlo / &dlo), &(&nhi / &dlo).max(&nhi / &dhi))
}

/// `g(x) = w(1+x)^p + (1-w)(1-x)^p` with `p = -log2(1-w)`, on [-1, 1].
pub fn g_value(w: &BigRational, x: FInterval) -> FInterval {
    let p = neg_log2_one_minus(w);
    let one = FInterval::exact(1.0);
    let up = clamp_nonnegative(one.add(&x)).pow(&p);
    let down = clamp_nonnegative(one.sub(&x)).pow(&p);
    up.scale_ratio(w).add(&down.scale_ratio(&(BigRational::one() - w)))
}

fn clamp_nonnegative(x: FInterval) -> FInterval {
    FInterval::new(x.lo.max(0.0), x.hi.max(0.0))
}

/// The distance statistic `diff^(-log2(1-w))` for diff in (0, 1]; by
/// convention 0 at diff = 0 (the exponent is positive).
pub fn w_statistic(diff: FInterval, w: &BigRational) -> FInterval {
    let p = neg_log2_one_minus(w);
    clamp_nonnegative(diff).pow(&p)
}

/// `w_statistic` of an exact gap `x - y`.
pub fn w_statistic_of_gap(params: &GameParams, x: &Fortune, y: &Fortune) -> FInterval {
    let gap = x.value() - y.value();
    if gap.sign(params.ell()) == 0 {
        return FInterval::exact(0.0);
    }
    let (lo, hi) = gap.ratio_bounds(params.ell(), 192);
    w_statistic(FInterval::from_ratio_bounds(&lo, &hi), params.win_prob())
}

/// Stopping parameters shared by the estimates: the loss-run bound
/// `L = ⌊1 + (1-2ℓ)/ℓ⌋` and the contraction factor
/// `α = 1 - (1 - g(1/2))(1-w)^(2L)`.
#[derive(Debug, Clone, Serialize)]
pub struct StoppingParams {
    pub loss_horizon: u32,
    pub alpha: FInterval,
}

pub fn stopping_params(params: &GameParams) -> StoppingParams {
    let ell = params.ell();
    // L = ⌊(1-ℓ)/ℓ⌋: the largest integer with 1 - (L+1)ℓ ≥ 0
    let mut loss_horizon = 1u32;
    loop {
        let next = LinearForm::one()
            - LinearForm::new(
                crate::dyadic::DyadicRational::zero(),
                crate::dyadic::DyadicRational::from_integer(i64::from(loss_horizon) + 2),
            );
        if next.sign(ell) < 0 {
            break;
        }
        loss_horizon += 1;
    }
    let g_half = g_value(params.win_prob(), FInterval::exact(0.5));
    let decay = pow_ratio(params.lose_prob(), 2 * loss_horizon);
    let one = FInterval::exact(1.0);
    let alpha = one.sub(&one.sub(&g_half).scale_ratio(&decay));
    assert!(
        alpha.lo > 0.0 && alpha.hi < 1.0,
        "alpha must land strictly inside (0, 1), got [{}, {}]",
        alpha.lo,
        alpha.hi
    );
    StoppingParams {
        loss_horizon,
        alpha,
    }
}

fn pow_ratio(x: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Band of a fortune relative to 1-ℓ and 1-ℓ/2, used by the stopping
/// rules. All comparisons exact.
fn below_goal_band(params: &GameParams, f: &Fortune) -> bool {
    let threshold = LinearForm::one() - LinearForm::ell_unit();
    f.value().cmp_value(&threshold, params.ell()) == std::cmp::Ordering::Less
}

fn below_half_stake_band(params: &GameParams, f: &Fortune) -> bool {
    let threshold = LinearForm::one() - LinearForm::ell_unit().halve();
    f.value().cmp_value(&threshold, params.ell()) == std::cmp::Ordering::Less
}

/// Which proved estimate to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LemmaCase {
    /// Both fortunes in [1-ℓ, 1]: E[W₁] = W₀.
    HighBand,
    /// Both below 1-ℓ, stop R (win or h ≥ 1/2 after the step):
    /// R ≤ L and E[W_R] ≤ W₀.
    LowBandRun,
    /// Both below 1-ℓ, stop T (win or h ≥ 1/2 before the step):
    /// T ≤ L+1 and E[W_T] ≤ α W₀.
    LowBandStep,
    /// y below 1-ℓ ≤ x < 1-ℓ/2, loss-prefixed stop:
    /// T ≤ L+2 and E[N W_T] ≤ W₀.
    Straddle,
}

impl LemmaCase {
    pub fn code(self) -> char {
        match self {
            LemmaCase::HighBand => 'A',
            LemmaCase::LowBandRun => 'R',
            LemmaCase::LowBandStep => 'B',
            LemmaCase::Straddle => 'C',
        }
    }
}

/// Result of one exhaustive expectation check.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub case: LemmaCase,
    pub horizon: u32,
    pub words_enumerated: u64,
    /// Largest stopping index observed over all words.
    pub max_stop: u32,
    pub expectation: FInterval,
    pub reference: FInterval,
    /// Interval widths + this constant form the comparison tolerance.
    pub tolerance: f64,
    pub pass: bool,
}

const CHECK_TOLERANCE: f64 = 1e-10;

/// Exhaustively verifies the selected estimate from the given coupled
/// start. The hypothesis region is checked exactly; a violated
/// inequality is an implementation-bug signal, not a data error.
pub fn exact_supermartingale_check(
    params: &GameParams,
    f1: &Fortune,
    f2: &Fortune,
    case: LemmaCase,
) -> Result<LemmaReport, CouplingError> {
    let ell = params.ell();
    if f2.value().cmp_value(f1.value(), ell) == std::cmp::Ordering::Greater {
        return Err(CouplingError::HypothesisViolated("requires f2 ≤ f1".into()));
    }
    let sp = stopping_params(params);
    let l = sp.loss_horizon;
    let w0 = w_statistic_of_gap(params, f1, f2);

    let x_low = below_goal_band(params, f1);
    let y_low = below_goal_band(params, f2);
    let (horizon, reference) = match case {
        LemmaCase::HighBand => {
            if y_low {
                return Err(CouplingError::HypothesisViolated(
                    "high-band check requires 1-ℓ ≤ f2".into(),
                ));
            }
            (1, w0)
        }
        LemmaCase::LowBandRun => {
            if !x_low {
                return Err(CouplingError::HypothesisViolated(
                    "low-band check requires f1 < 1-ℓ".into(),
                ));
            }
            (l, w0)
        }
        LemmaCase::LowBandStep => {
            if !x_low {
                return Err(CouplingError::HypothesisViolated(
                    "low-band check requires f1 < 1-ℓ".into(),
                ));
            }
            (l + 1, w0.mul(&sp.alpha))
        }
        LemmaCase::Straddle => {
            if !(y_low && !x_low && below_half_stake_band(params, f1)) {
                return Err(CouplingError::HypothesisViolated(
                    "straddle check requires f2 < 1-ℓ ≤ f1 < 1-ℓ/2".into(),
                ));
            }
            (l + 2, w0)
        }
    };

    let mut expectation = FInterval::exact(0.0);
    let mut max_stop = 0u32;
    let words = 1u64 << horizon;
    for bits in 0..words {
        let word: Vec<Outcome> = (0..horizon)
            .map(|i| {
                if bits >> i & 1 == 1 {
                    Outcome::Win
                } else {
                    Outcome::Lose
                }
            })
            .collect();
        let states = coupled_run(params, f1, f2, &word)?;
        let stop = match case {
            LemmaCase::HighBand => Some(1),
            LemmaCase::LowBandRun => stop_after_step(params, &states, &word, 1),
            LemmaCase::LowBandStep => stop_before_step(params, &states, &word, 1),
            LemmaCase::Straddle => {
                if word[0] == Outcome::Win {
                    Some(1)
                } else {
                    stop_before_step(params, &states, &word, 2)
                }
            }
        };
        let Some(stop) = stop else {
            return Err(CouplingError::InequalityViolated(format!(
                "stopping time exceeded its proved horizon {horizon} on word {}",
                crate::chain::format_word(&word)
            )));
        };
        max_stop = max_stop.max(stop);
        let weight = word_probability(params, &word);
        let w_at_stop =
            w_statistic_of_gap(params, &states[stop as usize].x, &states[stop as usize].y);
        let factor = match case {
            LemmaCase::Straddle if word[0] == Outcome::Win => {
                FInterval::exact(1.0).sub(&sp.alpha)
            }
            _ => FInterval::exact(1.0),
        };
        expectation = expectation.add(&w_at_stop.mul(&factor).scale_ratio(&weight));
    }

    // R = 0 / T degenerate cases are covered by the stop helpers; here
    // only the final comparison differs per case.
    let tolerance = CHECK_TOLERANCE;
    let pass = match case {
        LemmaCase::HighBand => {
            expectation.lo <= reference.hi + tolerance
                && reference.lo <= expectation.hi + tolerance
        }
        _ => expectation.lo <= reference.hi + tolerance,
    };
    Ok(LemmaReport {
        case,
        horizon,
        words_enumerated: words,
        max_stop,
        expectation,
        reference,
        tolerance,
        pass,
    })
}

/// Exact weight w^wins (1-w)^losses of a word.
fn word_probability(params: &GameParams, word: &[Outcome]) -> BigRational {
    let mut p = BigRational::one();
    for o in word {
        p *= match o {
            Outcome::Win => params.win_prob(),
            Outcome::Lose => params.lose_prob(),
        };
    }
    p
}

/// Stop `inf{j ≥ start: win at j or h(X_j, Y_j) ≥ 1/2}`, the h test on
/// the state after the step. Returns None if not reached in the word.
/// The degenerate `h(X_0, Y_0) ≥ 1/2 ⟹ stop = 0` case is honored.
fn stop_after_step(
    params: &GameParams,
    states: &[CoupledState],
    word: &[Outcome],
    start: u32,
) -> Option<u32> {
    if start == 1 && h_ge_half(params, &states[0].x, &states[0].y) {
        return Some(0);
    }
    (start..=word.len() as u32).find(|&j| {
        word[(j - 1) as usize] == Outcome::Win
            || h_ge_half(params, &states[j as usize].x, &states[j as usize].y)
    })
}

/// Stop `inf{j ≥ start: win at j or h(X_(j-1), Y_(j-1)) ≥ 1/2}`, the h
/// test on the state before the step.
fn stop_before_step(
    params: &GameParams,
    states: &[CoupledState],
    word: &[Outcome],
    start: u32,
) -> Option<u32> {
    (start..=word.len() as u32).find(|&j| {
        word[(j - 1) as usize] == Outcome::Win
            || h_ge_half(params, &states[(j - 1) as usize].x, &states[(j - 1) as usize].y)
    })
}

/// Bookkeeping at a schedule point T_k.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleState {
    pub k: usize,
    /// T_k, an index into the coupled trajectory.
    pub t: usize,
    /// B_k: count of past schedule points with X below 1-ℓ.
    pub b: u32,
    /// True once the designated win event has fired, i.e. N_k = 1-α.
    pub n_reduced: bool,
    /// Z_k = α^(-B_k) N_k W_(T_k).
    pub z: FInterval,
    /// Rule 4 reached: T stays constant from here on.
    pub frozen: bool,
}

/// Which stopping rule applies at a schedule point; decided exactly.
fn schedule_rule(params: &GameParams, x: &Fortune, y: &Fortune) -> u8 {
    if !below_goal_band(params, y) {
        1
    } else if below_goal_band(params, x) {
        2
    } else if below_half_stake_band(params, x) {
        3
    } else {
        4
    }
}

/// Runs the four-rule schedule along a fixed outcome word, emitting
/// every fully determined `T_k`. Stops at the word's end or at the
/// first frozen point.
pub fn schedule(
    params: &GameParams,
    f1: &Fortune,
    f2: &Fortune,
    word: &[Outcome],
) -> Result<Vec<ScheduleState>, CouplingError> {
    let states = coupled_run(params, f1, f2, word)?;
    let sp = stopping_params(params);
    let mut out = Vec::new();
    let mut t = 0usize;
    let mut b = 0u32;
    let mut n_reduced = false;
    let mut k = 0usize;
    loop {
        let z = z_value(params, &sp, &states[t], b, n_reduced);
        let frozen = schedule_rule(params, &states[t].x, &states[t].y) == 4;
        out.push(ScheduleState {
            k,
            t,
            b,
            n_reduced,
            z,
            frozen,
        });
        if frozen {
            break;
        }
        let Some((next_t, next_b, next_n)) =
            advance_schedule(params, &states, word, t, b, n_reduced)
        else {
            break; // next T_k not determined within this word
        };
        t = next_t;
        b = next_b;
        n_reduced = next_n;
        k += 1;
    }
    Ok(out)
}

fn z_value(
    params: &GameParams,
    sp: &StoppingParams,
    state: &CoupledState,
    b: u32,
    n_reduced: bool,
) -> FInterval {
    let w_val = w_statistic_of_gap(params, &state.x, &state.y);
    let n = if n_reduced {
        FInterval::exact(1.0).sub(&sp.alpha)
    } else {
        FInterval::exact(1.0)
    };
    sp.alpha.powi_neg(b).mul(&n).mul(&w_val)
}

/// One schedule transition (T_k, B_k, N_k) → (T_(k+1), B_(k+1), N_(k+1))
/// along a concrete word; None when the word is too short to decide.
fn advance_schedule(
    params: &GameParams,
    states: &[CoupledState],
    word: &[Outcome],
    t: usize,
    b: u32,
    n_reduced: bool,
) -> Option<(usize, u32, bool)> {
    let rule = schedule_rule(params, &states[t].x, &states[t].y);
    let next_b = b + u32::from(below_goal_band(params, &states[t].x));
    let next_t = match rule {
        1 => {
            if t + 1 >= states.len() {
                return None;
            }
            t + 1
        }
        2 => scan_stop(params, states, word, t + 1)?,
        3 => {
            if t >= word.len() {
                return None;
            }
            if word[t] == Outcome::Win {
                t + 1
            } else {
                scan_stop(params, states, word, t + 2)?
            }
        }
        _ => t, // rule 4: frozen (callers break before asking)
    };
    // the designated win event: Y before the bet below 1-ℓ ≤ X, and win
    let mut n_next = n_reduced;
    for j in (t + 1)..=next_t {
        if !n_next
            && word[j - 1] == Outcome::Win
            && below_goal_band(params, &states[j - 1].y)
            && !below_goal_band(params, &states[j - 1].x)
        {
            n_next = true;
        }
    }
    Some((next_t, next_b, n_next))
}

/// `inf{j ≥ start: win at j or h(X_(j-1), Y_(j-1)) ≥ 1/2}` over a
/// concrete word, None if undecided within it.
fn scan_stop(
    params: &GameParams,
    states: &[CoupledState],
    word: &[Outcome],
    start: usize,
) -> Option<usize> {
    (start..=word.len()).find(|&j| {
        word[j - 1] == Outcome::Win || h_ge_half(params, &states[j - 1].x, &states[j - 1].y)
    })
}

/// Report of the schedule supermartingale check over a driver set.
#[derive(Debug, Clone, Serialize)]
pub struct Prop2Report {
    pub driver_states: usize,
    pub frozen_states: usize,
    pub worst_slack: f64,
    pub max_block: u32,
    pub pass: bool,
}

/// Checks `E[Z_(k+1) | state at T_k] ≤ Z_k` on every distinct schedule
/// state reachable from the given starts within `rounds` schedule
/// blocks, by exhausting all continuations of length L+2 from each
/// state. The driver set is the breadth-first closure of the schedule
/// chain itself; degenerate X = Y states (where Z vanishes identically)
/// are checked once but not expanded or counted. Also confirms the
/// block bound `T_(k+1) ≤ T_k + L + 2`.
pub fn prop2_driver_check(
    params: &GameParams,
    starts: &[(Fortune, Fortune)],
    rounds: u32,
    min_states: usize,
) -> Result<Prop2Report, CouplingError> {
    let ell = params.ell();
    let sp = stopping_params(params);
    let block = sp.loss_horizon + 2;
    let state_cap = min_states.saturating_mul(8).max(512);

    type Key = (StateKey, StateKey, u32, bool);
    let mut seen: HashMap<Key, ()> = HashMap::new();
    let mut frontier: Vec<(Fortune, Fortune, u32, bool)> = Vec::new();
    for (f1, f2) in starts {
        let key = (
            f1.value().state_key(ell),
            f2.value().state_key(ell),
            0,
            false,
        );
        if f1.value().eq_value(f2.value(), ell) {
            continue;
        }
        if seen.insert(key, ()).is_none() {
            frontier.push((f1.clone(), f2.clone(), 0, false));
        }
    }

    let mut worst_slack = f64::NEG_INFINITY;
    let mut frozen_states = 0usize;
    let mut max_block = 0u32;
    let mut checked = 0usize;

    for _round in 0..rounds {
        let mut next: Vec<(Fortune, Fortune, u32, bool)> = Vec::new();
        for (x, y, b, n_reduced) in frontier.drain(..) {
            let state = CoupledState {
                x: x.clone(),
                y: y.clone(),
                k: 0,
            };
            let z_here = z_value(params, &sp, &state, b, n_reduced);
            checked += 1;
            if schedule_rule(params, &x, &y) == 4 {
                frozen_states += 1;
                continue; // Z_(k+1) = Z_k exactly, and T freezes
            }
            let mut expectation = FInterval::exact(0.0);
            let words = 1u64 << block;
            for bits in 0..words {
                let word: Vec<Outcome> = (0..block)
                    .map(|i| {
                        if bits >> i & 1 == 1 {
                            Outcome::Win
                        } else {
                            Outcome::Lose
                        }
                    })
                    .collect();
                let states = coupled_run(params, &x, &y, &word)?;
                let Some((next_t, next_b, next_n)) =
                    advance_schedule(params, &states, &word, 0, b, n_reduced)
                else {
                    return Err(CouplingError::InequalityViolated(format!(
                        "schedule block exceeded T_k + {block}"
                    )));
                };
                max_block = max_block.max(next_t as u32);
                let at = &states[next_t];
                let z_next = z_value(params, &sp, at, next_b, next_n);
                expectation =
                    expectation.add(&z_next.scale_ratio(&word_probability(params, &word)));

                let degenerate = at.x.value().eq_value(at.y.value(), ell);
                if !degenerate && seen.len() < state_cap {
                    let key = (
                        at.x.value().state_key(ell),
                        at.y.value().state_key(ell),
                        next_b,
                        next_n,
                    );
                    if seen.insert(key, ()).is_none() {
                        next.push((at.x.clone(), at.y.clone(), next_b, next_n));
                    }
                }
            }
            let slack = expectation.lo - z_here.hi;
            if slack > worst_slack {
                worst_slack = slack;
            }
            if slack > CHECK_TOLERANCE {
                return Err(CouplingError::InequalityViolated(format!(
                    "E[Z_(k+1)] exceeded Z_k by {slack:.3e} at a driver state"
                )));
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    if checked < min_states {
        return Err(CouplingError::HypothesisViolated(format!(
            "driver set too small: {checked} states < {min_states}; add starts or rounds"
        )));
    }
    Ok(Prop2Report {
        driver_states: checked,
        frozen_states,
        worst_slack,
        max_block,
        pass: true,
    })
}

/// Monte Carlo estimate of `Q(f1) - Q(f2)` through the coupling
/// identity: the difference equals the probability that the upper
/// gambler reaches the goal while the lower one is ruined.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub samples: u64,
    pub hits: u64,
    pub unabsorbed: u64,
    pub estimate: f64,
    /// Three-sigma binomial half-width around the estimate.
    pub ci_half_width: f64,
    pub seed: u64,
    pub horizon: u32,
}

/// Seeded, splittable sampler: sample i draws from stream i of a
/// counter-based generator, so results are byte-identical for any
/// thread count.
pub fn monte_carlo_diff(
    params: &GameParams,
    f1: &Fortune,
    f2: &Fortune,
    samples: u64,
    horizon: u32,
    seed: u64,
    threads: usize,
) -> Result<McReport, CouplingError> {
    let ell = params.ell();
    if f2.value().cmp_value(f1.value(), ell) == std::cmp::Ordering::Greater {
        return Err(CouplingError::HypothesisViolated(
            "coupling requires f2 ≤ f1".into(),
        ));
    }
    // win iff the next 64 random bits, as an integer, fall below
    // ⌊w·2^64⌋; the bias is below 2^-64 and far inside the 3σ band
    let threshold = {
        let num = params.win_prob().numer() << 64usize;
        let den = params.win_prob().denom();
        let t: num_bigint::BigInt = num / den;
        let digits = t.to_u64_digits().1;
        match digits.len() {
            0 => 0u128,
            1 => digits[0] as u128,
            _ => (digits[0] as u128) | ((digits[1] as u128) << 64),
        }
    };

    let worker = |range: std::ops::Range<u64>| -> (u64, u64) {
        let mut hits = 0u64;
        let mut unabsorbed = 0u64;
        for i in range {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut x = f1.clone();
            let mut y = f2.clone();
            let mut absorbed = false;
            for _ in 0..horizon {
                let x_done = params.absorption(&x) != Absorption::Active;
                let y_done = params.absorption(&y) != Absorption::Active;
                if x_done && y_done {
                    absorbed = true;
                    break;
                }
                let r = rng.random::<u64>() as u128;
                let o = if r < threshold {
                    Outcome::Win
                } else {
                    Outcome::Lose
                };
                x = params.step(&x, o);
                y = params.step(&y, o);
            }
            if !absorbed {
                let x_done = params.absorption(&x) != Absorption::Active;
                let y_done = params.absorption(&y) != Absorption::Active;
                absorbed = x_done && y_done;
            }
            if absorbed {
                if params.absorption(&x) == Absorption::Goal
                    && params.absorption(&y) == Absorption::Ruin
                {
                    hits += 1;
                }
            } else {
                unabsorbed += 1;
            }
        }
        (hits, unabsorbed)
    };

    let threads = threads.clamp(1, 64) as u64;
    let (hits, unabsorbed) = if threads <= 1 || samples < 4 * threads {
        worker(0..samples)
    } else {
        let chunk = samples.div_ceil(threads);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..threads {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(samples);
                if lo >= hi {
                    break;
                }
                handles.push(scope.spawn(move || worker(lo..hi)));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler thread panicked"))
                .fold((0, 0), |(a, b), (c, d)| (a + c, b + d))
        })
    };

    let estimate = hits as f64 / samples as f64;
    let ci_half_width = 3.0 * (estimate * (1.0 - estimate) / samples as f64).sqrt();
    Ok(McReport {
        samples,
        hits,
        unabsorbed,
        estimate,
        ci_half_width,
        seed,
        horizon,
    })
}

/// Uniform random dyadic fortune with `bits` of resolution, shaken by a
/// few bold-play steps so both coefficients get exercised.
pub fn random_fortune<R: RngExt>(params: &GameParams, rng: &mut R, bits: u32) -> Fortune {
    let raw: u64 = rng.random_range(0..=(1u64 << bits));
    let form = LinearForm::from_rational_part(crate::dyadic::DyadicRational::new(
        num_bigint::BigInt::from(raw),
        bits,
    ));
    let mut f = Fortune::new(form, params.ell()).expect("grid point lies in [0, 1]");
    for _ in 0..3 {
        if params.absorption(&f) != Absorption::Active {
            break;
        }
        let o = if rng.random_bool(0.5) {
            Outcome::Win
        } else {
            Outcome::Lose
        };
        f = params.step(&f, o);
    }
    f
}

/// Orders two fortunes into (upper, lower).
pub fn ordered_pair(params: &GameParams, a: Fortune, b: Fortune) -> (Fortune, Fortune) {
    if a.value().cmp_value(b.value(), params.ell()) == std::cmp::Ordering::Less {
        (b, a)
    } else {
        (a, b)
    }
}
