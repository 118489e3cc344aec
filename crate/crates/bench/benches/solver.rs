use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use boldplay_core::chain::{Fortune, GameParams, Outcome};
use boldplay_core::coupling::{exact_supermartingale_check, LemmaCase};
use boldplay_core::dyadic::DyadicRational;
use boldplay_core::ell::EllSpec;
use boldplay_core::linear_form::LinearForm;
use boldplay_core::qsolver::{q_bounds, Budget};
use boldplay_core::reachability::search_hit;
use num_bigint::BigInt;
use num_rational::BigRational;

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn surd_params() -> GameParams {
    GameParams::new(EllSpec::surd(0, 1, 5, 5).unwrap(), ratio(1, 4)).unwrap()
}

fn rational_params() -> GameParams {
    GameParams::new(EllSpec::rational(3, 10).unwrap(), ratio(1, 4)).unwrap()
}

fn near_goal(p: &GameParams, n: u32) -> Fortune {
    Fortune::new(LinearForm::one() - LinearForm::ell_unit().shr(n), p.ell()).unwrap()
}

fn bench_sign(c: &mut Criterion) {
    let surd = EllSpec::surd(0, 1, 5, 5).unwrap();
    let x = LinearForm::new(DyadicRational::new(12345, 20), DyadicRational::new(-23456, 21));
    c.bench_function("lf_sign_surd", |b| {
        b.iter(|| black_box(black_box(&x).sign(&surd)))
    });
}

fn bench_q_bounds(c: &mut Criterion) {
    let budget = Budget::new(48, 200_000, ratio(1, 1_000_000));
    let ps = surd_params();
    let f = near_goal(&ps, 6);
    c.bench_function("q_bounds_surd_depth48", |b| {
        b.iter(|| black_box(q_bounds(&ps, &f, &budget).unwrap()))
    });
    let pr = rational_params();
    let f = near_goal(&pr, 6);
    c.bench_function("q_bounds_rational_depth48", |b| {
        b.iter(|| black_box(q_bounds(&pr, &f, &budget).unwrap()))
    });
}

fn bench_search(c: &mut Criterion) {
    let p = surd_params();
    let f = Fortune::new(
        LinearForm::from_rational_part(DyadicRational::new(1, 1)),
        p.ell(),
    )
    .unwrap();
    c.bench_function("search_hit_depth12", |b| {
        b.iter(|| black_box(search_hit(&p, &f, 12)))
    });
}

fn bench_trajectory(c: &mut Criterion) {
    let p = surd_params();
    let f = near_goal(&p, 4);
    let word: Vec<Outcome> = (0..200)
        .map(|i| if i % 3 == 0 { Outcome::Win } else { Outcome::Lose })
        .collect();
    c.bench_function("trajectory_200_steps", |b| {
        b.iter(|| black_box(p.trajectory(&f, &word)))
    });
}

fn bench_lemma_check(c: &mut Criterion) {
    let p = rational_params();
    let f1 = Fortune::new(
        LinearForm::from_rational_part(DyadicRational::new(1, 1)),
        p.ell(),
    )
    .unwrap();
    let f2 = Fortune::new(
        LinearForm::from_rational_part(DyadicRational::new(3, 3)),
        p.ell(),
    )
    .unwrap();
    c.bench_function("lemma_low_band_step", |b| {
        b.iter(|| {
            black_box(exact_supermartingale_check(&p, &f1, &f2, LemmaCase::LowBandStep).unwrap())
        })
    });
}

criterion_group!(
    benches,
    bench_sign,
    bench_q_bounds,
    bench_search,
    bench_trajectory,
    bench_lemma_check
);
criterion_main!(benches);
