//! Coupling-layer properties: the one-step distance recursion and the
//! broader negative control for unit-fraction caps.

use boldplay_core::chain::{Fortune, GameParams, Outcome};
use boldplay_core::coupling::{h_interval, ordered_pair, random_fortune, w_statistic_of_gap};
use boldplay_core::dyadic::DyadicRational;
use boldplay_core::ell::EllSpec;
use boldplay_core::fenv::{neg_log2_one_minus, FInterval};
use boldplay_core::improvement::verify_improvement;
use boldplay_core::linear_form::LinearForm;
use boldplay_core::qsolver::Budget;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn one_step_distance_recursion() {
    // W(next gap) = (1 ± h)^(-log2(1-w)) · W(gap) on every coupled step
    let mut rng = ChaCha12Rng::seed_from_u64(61);
    for ell in [
        EllSpec::rational(3, 10).unwrap(),
        EllSpec::surd(0, 1, 5, 5).unwrap(),
    ] {
        let p = GameParams::new(ell, ratio(1, 4)).unwrap();
        let exponent = neg_log2_one_minus(p.win_prob());
        let mut checked = 0;
        while checked < 400 {
            let a = random_fortune(&p, &mut rng, 12);
            let b = random_fortune(&p, &mut rng, 12);
            let (f1, f2) = ordered_pair(&p, a, b);
            if f1.value().eq_value(f2.value(), p.ell()) {
                continue;
            }
            let h = h_interval(&p, &f1, &f2);
            let w_now = w_statistic_of_gap(&p, &f1, &f2);
            for outcome in [Outcome::Win, Outcome::Lose] {
                let x = p.step(&f1, outcome);
                let y = p.step(&f2, outcome);
                let w_next = w_statistic_of_gap(&p, &x, &y);
                let factor_base = match outcome {
                    Outcome::Win => {
                        FInterval::new((1.0 + h.lo).max(0.0), (1.0 + h.hi).max(0.0))
                    }
                    Outcome::Lose => {
                        FInterval::new((1.0 - h.hi).max(0.0), (1.0 - h.lo).max(0.0))
                    }
                };
                let predicted = factor_base.pow(&exponent).mul(&w_now);
                // enclosures must overlap within accumulated widths
                let tol = 1e-9 + predicted.width() + w_next.width();
                assert!(
                    w_next.lo <= predicted.hi + tol && predicted.lo <= w_next.hi + tol,
                    "distance recursion failed: W' = [{}, {}], predicted [{}, {}]",
                    w_next.lo,
                    w_next.hi,
                    predicted.lo,
                    predicted.hi
                );
            }
            checked += 1;
        }
    }
}

#[test]
fn negative_control_unit_fraction_caps() {
    // bold play is optimal at ℓ = 1/n for n ≥ 3; certification anywhere
    // on this grid would be an implementation bug
    let budget = Budget::new(40, 50_000, ratio(1, 1_000_000));
    for n in [3i64, 4, 5] {
        let ell = EllSpec::rational(1, n).unwrap();
        for w in [ratio(1, 10), ratio(1, 4)] {
            let p = GameParams::new(ell.clone(), w).unwrap();
            for (num, e) in [(1i64, 1u32), (7, 4)] {
                let f = Fortune::new(
                    LinearForm::from_rational_part(DyadicRational::new(num, e)),
                    &ell,
                )
                .unwrap();
                // keep f strictly inside (ℓ, 1-ℓ)
                let inside = (f.value() - &LinearForm::ell_unit()).sign(&ell) > 0
                    && ((LinearForm::one() - LinearForm::ell_unit()) - f.value().clone())
                        .sign(&ell)
                        > 0;
                if !inside {
                    continue;
                }
                for k in [5u32, 7] {
                    let got =
                        verify_improvement(&p, &f, &DyadicRational::unit(k), &budget).unwrap();
                    assert!(
                        got.is_none(),
                        "false certificate at ℓ=1/{n}, f={num}/2^{e}, ε=2^-{k}"
                    );
                }
            }
        }
    }
}
