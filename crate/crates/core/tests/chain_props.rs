//! Property tests for the bold-play dynamics: monotone coupling,
//! gap doubling, the one-step supermartingale identity, and ruin under
//! consecutive losses.

use boldplay_core::chain::{Absorption, Fortune, GameParams, Outcome};
use boldplay_core::coupling::{ordered_pair, random_fortune};
use boldplay_core::dyadic::DyadicRational;
use boldplay_core::ell::EllSpec;
use boldplay_core::linear_form::LinearForm;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn configs() -> Vec<GameParams> {
    vec![
        GameParams::new(EllSpec::rational(3, 10).unwrap(), ratio(1, 4)).unwrap(),
        GameParams::new(EllSpec::rational(1, 2).unwrap(), ratio(3, 10)).unwrap(),
        GameParams::new(EllSpec::surd(0, 1, 5, 5).unwrap(), ratio(2, 5)).unwrap(),
    ]
}

#[test]
fn monotone_coupling_over_ten_thousand_triples() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for params in configs() {
        let ell = params.ell();
        for _ in 0..3_400 {
            let a = random_fortune(&params, &mut rng, 14);
            let b = random_fortune(&params, &mut rng, 14);
            let (g, f) = ordered_pair(&params, a, b);
            let o = if rng.random_bool(0.5) {
                Outcome::Win
            } else {
                Outcome::Lose
            };
            let fg = params.step(&g, o);
            let ff = params.step(&f, o);
            // order preserved
            assert_ne!(
                (fg.value() - ff.value()).sign(ell),
                -1,
                "step broke monotonicity"
            );
            // per-step gap at most doubles
            let before = g.value() - f.value();
            let after = fg.value() - ff.value();
            assert_ne!(
                (&before.double() - &after).sign(ell),
                -1,
                "gap more than doubled in one step"
            );
        }
    }
}

#[test]
fn one_step_supermartingale_exact() {
    // w·(f + s) + (1-w)·(f - s) ≤ f, checked in exact rational
    // coefficients of 1 and ℓ
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    for params in configs() {
        let ell = params.ell();
        let w = params.win_prob();
        for _ in 0..2_000 {
            let f = random_fortune(&params, &mut rng, 14);
            let up = params.step(&f, Outcome::Win);
            let down = params.step(&f, Outcome::Lose);
            // expectation minus f, as rational coefficients (p, q)
            let wc = params.lose_prob();
            let p = w * up.value().rational_part().to_ratio()
                + wc * down.value().rational_part().to_ratio()
                - f.value().rational_part().to_ratio();
            let q = w * up.value().ell_coeff().to_ratio()
                + wc * down.value().ell_coeff().to_ratio()
                - f.value().ell_coeff().to_ratio();
            assert!(
                ell.sign_linear(&p, &q) <= 0,
                "expected one-step drift ≤ 0 at {}",
                f.value()
            );
        }
    }
}

#[test]
fn ruin_in_bounded_losses_from_below_goal_gap() {
    // from any fortune at most 1-ℓ, ⌈1/ℓ⌉ + 1 consecutive losses ruin
    let mut rng = ChaCha12Rng::seed_from_u64(37);
    for params in configs() {
        let ell = params.ell();
        let ceil_inv_ell = {
            let mut k = 1u32;
            loop {
                // kℓ ≥ 1 ⟺ sign(kℓ - 1) ≥ 0
                let form = LinearForm::new(
                    DyadicRational::from_integer(-1),
                    DyadicRational::from_integer(i64::from(k)),
                );
                if form.sign(ell) >= 0 {
                    break k;
                }
                k += 1;
            }
        };
        let losses = vec![Outcome::Lose; (ceil_inv_ell + 1) as usize];
        let cap = LinearForm::one() - LinearForm::ell_unit();
        for _ in 0..500 {
            let f = random_fortune(&params, &mut rng, 12);
            if (cap.clone() - f.value().clone()).sign(ell) < 0 {
                continue; // above 1-ℓ: the bound needs extra steps, below
            }
            let traj = params.trajectory(&f, &losses);
            assert_eq!(
                params.absorption(traj.last().unwrap()),
                Absorption::Ruin,
                "not ruined after {} losses from {}",
                losses.len(),
                f.value()
            );
        }
    }
}

#[test]
fn ruin_near_goal_needs_doubling_time() {
    // above 1-ℓ the distance to the goal doubles per loss; ruin follows
    // within ⌈log2(ℓ/(1-f))⌉ extra losses. With 16-bit starts that is at
    // most 16 extra steps.
    for params in configs() {
        let ell = params.ell();
        let start = Fortune::new(
            LinearForm::one()
                - LinearForm::from_rational_part(DyadicRational::unit(16)),
            ell,
        )
        .unwrap();
        let mut k = 1u32;
        loop {
            let form = LinearForm::new(
                DyadicRational::from_integer(-1),
                DyadicRational::from_integer(i64::from(k)),
            );
            if form.sign(ell) >= 0 {
                break;
            }
            k += 1;
        }
        let losses = vec![Outcome::Lose; (16 + k + 2) as usize];
        let traj = params.trajectory(&start, &losses);
        assert_eq!(params.absorption(traj.last().unwrap()), Absorption::Ruin);
    }
}

#[test]
fn absorbing_states_are_fixed_points() {
    for params in configs() {
        let one = Fortune::new(LinearForm::one(), params.ell()).unwrap();
        let zero = Fortune::new(LinearForm::zero(), params.ell()).unwrap();
        for o in [Outcome::Win, Outcome::Lose] {
            assert_eq!(params.step(&one, o), one);
            assert_eq!(params.step(&zero, o), zero);
        }
    }
}
