//! Certified two-sided bounds on Q(f), the bold-play success probability.
//!
//! The solver expands the reachable set of exact fortunes breadth-first
//! (states coalesce on the ±ℓ lattice, which keeps the set small), then
//! runs interval value iteration over it:
//!
//! - `lo` starts at 0 everywhere and converges up to the probability of
//!   reaching the goal inside the explored subgraph;
//! - `hi` starts at 1 and converges down to one minus the probability of
//!   ruin inside the explored subgraph;
//! - unexpanded frontier states stay pinned at [0, 1].
//!
//! Therefore `lo ≤ Q(f) ≤ hi` at every sweep, and the pair is a
//! certificate, not an estimate. All accumulation is exact rational
//! arithmetic; endpoints are rounded outward onto a fine dyadic grid
//! after each update so that numerator growth stays bounded. Enlarging
//! the budget never widens the result.

use std::collections::HashMap;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::chain::{Absorption, Fortune, GameParams};
use crate::interval::{round_down_dyadic, round_up_dyadic, ProbInterval};
use crate::linear_form::{LinearForm, StateKey};

/// Dyadic grid (in bits) the endpoints are rounded onto after each
/// update. Far below every supported target width, far above f64.
const GRID_BITS: u32 = 160;

/// Hard cap on refinement sweeps; the fixpoint detection below always
/// fires first in practice.
const SWEEP_CAP: u32 = 50_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QSolverError {
    #[error("fortune outside [0, 1]: {0}")]
    PreconditionViolated(String),
    #[error("closed-form and direct intervals are disjoint at n = {n}: direct {direct}, mapped {mapped}")]
    InconsistencyDetected {
        n: u32,
        direct: String,
        mapped: String,
    },
}

/// Exploration budget. Exhausting it is not an error: the returned
/// interval is simply looser, and the stats say what bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    /// BFS expansion depth of the reachable set.
    pub max_depth: u32,
    /// Cap on the number of distinct expanded states.
    pub max_states: usize,
    /// Refinement stops once the query interval is at most this wide.
    pub target_width: BigRational,
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Budget", 3)?;
        s.serialize_field("max_depth", &self.max_depth)?;
        s.serialize_field("max_states", &self.max_states)?;
        s.serialize_field("target_width", &self.target_width.to_string())?;
        s.end()
    }
}

impl Budget {
    pub fn new(max_depth: u32, max_states: usize, target_width: BigRational) -> Self {
        assert!(max_depth >= 1, "budget depth must be positive");
        assert!(max_states >= 1, "budget state cap must be positive");
        assert!(
            target_width.is_positive(),
            "budget width target must be positive"
        );
        Budget {
            max_depth,
            max_states,
            target_width,
        }
    }

    /// Geometric escalation used by certificate searches: deeper
    /// expansion, more states, and a quartered width target per level.
    pub fn escalated(&self, level: u32) -> Budget {
        let shift = level.min(10);
        Budget {
            max_depth: self.max_depth + 16 * level,
            max_states: self.max_states.saturating_mul(1usize << shift),
            target_width: &self.target_width
                / BigRational::from_integer(num_bigint::BigInt::from(1u64 << (2 * shift))),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_depth: 64,
            max_states: 400_000,
            target_width: BigRational::new(1.into(), 1_000_000_000.into()),
        }
    }
}

/// What the solver actually did, alongside the certified interval.
#[derive(Debug, Clone, Serialize)]
pub struct QStats {
    pub states_explored: usize,
    pub frontier_states: usize,
    pub depth_reached: u32,
    pub sweeps: u32,
    pub state_cap_hit: bool,
    pub target_met: bool,
    pub achieved_width: f64,
    pub runtime_ms: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StateKind {
    Goal,
    Ruin,
    Interior,
    Frontier,
}

struct State {
    form: LinearForm,
    kind: StateKind,
    // indices of win / lose successors, set when expanded
    succ: Option<(usize, usize)>,
    lo: BigRational,
    hi: BigRational,
}

/// The memoized table of explored fortunes and their enclosures.
/// Intervals only ever tighten (lo nondecreasing, hi nonincreasing).
pub struct StateTable {
    states: Vec<State>,
    index: HashMap<StateKey, usize>,
}

impl StateTable {
    fn new() -> Self {
        StateTable {
            states: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, params: &GameParams, form: LinearForm) -> usize {
        let key = form.state_key(params.ell());
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let fortune = Fortune::new(form.clone(), params.ell()).expect("reachable fortune in range");
        let (kind, lo, hi) = match params.absorption(&fortune) {
            Absorption::Goal => (StateKind::Goal, BigRational::one(), BigRational::one()),
            Absorption::Ruin => (StateKind::Ruin, BigRational::zero(), BigRational::zero()),
            Absorption::Active => (StateKind::Frontier, BigRational::zero(), BigRational::one()),
        };
        let i = self.states.len();
        self.states.push(State {
            form,
            kind,
            succ: None,
            lo,
            hi,
        });
        self.index.insert(key, i);
        i
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn interval(&self, i: usize) -> ProbInterval {
        ProbInterval::new(self.states[i].lo.clone(), self.states[i].hi.clone())
            .expect("state enclosure stays a probability interval")
    }
}

/// Certified enclosure of Q(f) under the given budget.
pub fn q_bounds(
    params: &GameParams,
    f: &Fortune,
    budget: &Budget,
) -> Result<(ProbInterval, QStats), QSolverError> {
    let (interval, stats, _) = q_bounds_with_table(params, f, budget)?;
    Ok((interval, stats))
}

/// As [`q_bounds`], also returning the state table for inspection.
pub fn q_bounds_with_table(
    params: &GameParams,
    f: &Fortune,
    budget: &Budget,
) -> Result<(ProbInterval, QStats, StateTable), QSolverError> {
    // revalidate: CLI paths can construct fortunes from raw parts
    let start = Instant::now();
    if f.value().sign(params.ell()) < 0
        || (LinearForm::one() - f.value().clone()).sign(params.ell()) < 0
    {
        return Err(QSolverError::PreconditionViolated(f.value().to_string()));
    }

    let mut table = StateTable::new();
    let root = table.intern(params, f.value().clone());

    // breadth-first expansion of the reachable set
    let mut frontier = vec![root];
    let mut depth_reached = 0;
    let mut state_cap_hit = false;
    'expand: for depth in 0..budget.max_depth {
        let mut next = Vec::new();
        for &i in &frontier {
            if table.states[i].kind != StateKind::Frontier {
                continue;
            }
            if table.len() >= budget.max_states {
                state_cap_hit = true;
                break 'expand;
            }
            let fortune = Fortune::new(table.states[i].form.clone(), params.ell())
                .expect("explored fortune in range");
            let win = params.step(&fortune, crate::chain::Outcome::Win);
            let lose = params.step(&fortune, crate::chain::Outcome::Lose);
            let wi = table.intern(params, win.into_inner());
            let li = table.intern(params, lose.into_inner());
            table.states[i].kind = StateKind::Interior;
            table.states[i].succ = Some((wi, li));
            if table.states[wi].succ.is_none() && table.states[wi].kind == StateKind::Frontier {
                next.push(wi);
            }
            if table.states[li].succ.is_none() && table.states[li].kind == StateKind::Frontier {
                next.push(li);
            }
            depth_reached = depth + 1;
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    // interval value iteration, deepest-first so absorption information
    // propagates backward in few sweeps
    let w = params.win_prob().clone();
    let wc = params.lose_prob().clone();
    let order: Vec<usize> = (0..table.len()).rev().collect();
    let mut sweeps = 0;
    let mut target_met = false;
    let mut stagnant = 0u32;
    let mut last_width = BigRational::one();
    while sweeps < SWEEP_CAP {
        sweeps += 1;
        let mut changed = false;
        for &i in &order {
            let Some((wi, li)) = table.states[i].succ else {
                continue;
            };
            let new_lo = shrink_down(&w * &table.states[wi].lo + &wc * &table.states[li].lo);
            let new_hi = shrink_up(&w * &table.states[wi].hi + &wc * &table.states[li].hi);
            if new_lo > table.states[i].lo {
                table.states[i].lo = new_lo;
                changed = true;
            }
            if new_hi < table.states[i].hi {
                table.states[i].hi = new_hi;
                changed = true;
            }
        }
        let width = &table.states[root].hi - &table.states[root].lo;
        if width <= budget.target_width {
            target_met = true;
            break;
        }
        if !changed {
            break;
        }
        // the query interval has hit the floor set by the explored
        // frontier; grinding interior cells further cannot help it
        if width < last_width {
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= 3 {
                break;
            }
        }
        last_width = width;
    }

    let interval = table.interval(root);
    let frontier_states = table
        .states
        .iter()
        .filter(|s| s.kind == StateKind::Frontier)
        .count();
    let stats = QStats {
        states_explored: table.len(),
        frontier_states,
        depth_reached,
        sweeps,
        state_cap_hit,
        target_met,
        achieved_width: interval.width().to_f64().unwrap_or(f64::NAN),
        runtime_ms: start.elapsed().as_millis(),
    };
    Ok((interval, stats, table))
}

/// Rounds an endpoint down onto the dyadic grid, but only once its
/// exact representation outgrows the grid; small exact values (finite
/// absorption cases) pass through untouched.
fn shrink_down(x: BigRational) -> BigRational {
    if x.denom().bits() > GRID_BITS as u64 {
        round_down_dyadic(&x, GRID_BITS)
    } else {
        x
    }
}

fn shrink_up(x: BigRational) -> BigRational {
    if x.denom().bits() > GRID_BITS as u64 {
        round_up_dyadic(&x, GRID_BITS)
    } else {
        x
    }
}

/// One-step consistency audit of a converged table: for every interior
/// state, the stored interval must agree with the mix of its successors
/// up to the supplied slack (rounding grid + residual sweep movement).
pub fn one_step_residual(params: &GameParams, table: &StateTable) -> BigRational {
    let w = params.win_prob();
    let wc = params.lose_prob();
    let mut worst = BigRational::zero();
    for s in &table.states {
        let Some((wi, li)) = s.succ else { continue };
        let mix_lo = w * &table.states[wi].lo + wc * &table.states[li].lo;
        let mix_hi = w * &table.states[wi].hi + wc * &table.states[li].hi;
        // stored lo ≤ mix lo + grid slack and stored hi ≥ mix hi - slack
        let below = &s.lo - &mix_lo;
        let above = &mix_hi - &s.hi;
        if below > worst {
            worst = below;
        }
        if above > worst {
            worst = above;
        }
    }
    worst
}

/// The semigroup of fortunes `1 - 2^-n ℓ` approaching the goal: maps an
/// enclosure of Q(1-ℓ) to an enclosure of Q(1 - 2^-n ℓ) through the
/// closed form `1 - (1-w)^n (1 - Q(1-ℓ))`, which is monotone increasing.
pub fn q_near_goal(params: &GameParams, n: u32, base: &ProbInterval) -> ProbInterval {
    let decay = pow_ratio(params.lose_prob(), n);
    let map = |x: &BigRational| BigRational::one() - &decay * (BigRational::one() - x);
    ProbInterval::new(map(base.lo()), map(base.hi()))
        .expect("monotone map preserves the probability range")
}

fn pow_ratio(x: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// One row of the near-goal consistency report.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRow {
    pub n: u32,
    pub direct: ProbInterval,
    pub mapped: ProbInterval,
    pub direct_width: f64,
    pub intersection_width: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
}

/// Cross-validates the solver against the near-goal closed form: for
/// n = 0..n_max, the direct enclosure of Q(1 - 2^-n ℓ) must intersect
/// the closed-form image of the n = 0 enclosure. Disjointness would mean
/// an implementation bug, never a tight budget.
pub fn q_consistency_check(
    params: &GameParams,
    n_max: u32,
    budget: &Budget,
) -> Result<ConsistencyReport, QSolverError> {
    let near_goal_fortune = |n: u32| {
        let form = LinearForm::one() - LinearForm::ell_unit().shr(n);
        Fortune::new(form, params.ell()).expect("1 - 2^-n ℓ lies in [0, 1]")
    };
    let (base, _) = q_bounds(params, &near_goal_fortune(0), budget)?;
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let (direct, _) = q_bounds(params, &near_goal_fortune(n), budget)?;
        let mapped = q_near_goal(params, n, &base);
        match direct.intersect(&mapped) {
            Some(common) => rows.push(ConsistencyRow {
                n,
                direct_width: direct.width_f64(),
                intersection_width: common.width_f64(),
                direct,
                mapped,
            }),
            None => {
                return Err(QSolverError::InconsistencyDetected {
                    n,
                    direct: direct.to_string(),
                    mapped: mapped.to_string(),
                })
            }
        }
    }
    Ok(ConsistencyReport { rows })
}
