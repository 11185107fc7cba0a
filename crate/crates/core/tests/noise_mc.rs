mod common;

use common::*;
use holoref::analysis::{mean, sample_std};
use holoref::noise::{sample_poisson, stream_rng};
use holoref::references::make_reference;
use holoref::specimen::random_specimen;
use holoref::{
    expected_squared_error, forward_magnitudes, poisson_corrupt, referenced_deconvolution,
    scaling_factor_closed_form, CompositeSpecimen, PhotonBudget, ReferenceKind,
};
use proptest::prelude::*;

#[test]
fn shot_noise_error_matches_prediction() {
    let (n, m, trials) = (16, 64, 200);
    let x = random_specimen(n, 5);
    let budget = PhotonBudget::new(1000.0, m).unwrap();
    let norm: f64 = x.data().iter().map(|z| z.norm_sqr()).sum();
    for kind in ReferenceKind::SPECIAL {
        let r = make_reference(kind, n, None).unwrap();
        let y = forward_magnitudes(&CompositeSpecimen::new(&x, &r.to_image()).unwrap(), m).unwrap();
        let s = scaling_factor_closed_form(kind, n, m).unwrap();
        let expected = expected_squared_error(&s, &y, &budget).unwrap();
        let errors: Vec<f64> = (0..trials)
            .map(|t| {
                let noisy = poisson_corrupt(&y, &budget, 1000 + t).unwrap();
                let est = referenced_deconvolution(&noisy, &r).unwrap().estimate;
                rel_err(est.view(), x.view()) * norm
            })
            .collect();
        let ratio = mean(&errors) / expected;
        assert!((ratio - 1.0).abs() < 0.05, "{kind}: empirical/expected = {ratio}");
    }
}

#[test]
fn corruption_is_seeded() {
    let n = 4;
    let r = make_reference(ReferenceKind::Block, n, None).unwrap();
    let y = forward_magnitudes(&CompositeSpecimen::new(&random_specimen(n, 1), &r.to_image()).unwrap(), 16).unwrap();
    let budget = PhotonBudget::new(10.0, 16).unwrap();
    let a = poisson_corrupt(&y, &budget, 3).unwrap();
    assert_eq!(a, poisson_corrupt(&y, &budget, 3).unwrap());
    assert_ne!(a, poisson_corrupt(&y, &budget, 4).unwrap());
    assert!(!a.is_nominal());
}

#[test]
fn sampler_moments_across_regimes() {
    for (i, rate) in [0.3, 4.0, 29.0, 31.0, 500.0, 1e6].into_iter().enumerate() {
        let mut g = stream_rng(77, i as u64);
        let draws: Vec<f64> = (0..40_000).map(|_| sample_poisson(rate, &mut g) as f64).collect();
        let (mu, sd) = (mean(&draws), sample_std(&draws));
        // Five standard errors on the mean, loose on the variance.
        assert!((mu - rate).abs() < 5.0 * (rate / 40_000.0f64).sqrt(), "rate {rate}: mean {mu}");
        assert!((sd * sd / rate - 1.0).abs() < 0.05, "rate {rate}: var {}", sd * sd);
    }
}

#[test]
fn small_rate_probabilities() {
    // P(0) = e^{-λ}, P(1) = λ e^{-λ} for λ = 1.
    let mut g = stream_rng(5, 0);
    let draws: Vec<u64> = (0..100_000).map(|_| sample_poisson(1.0, &mut g)).collect();
    let p0 = draws.iter().filter(|&&k| k == 0).count() as f64 / 1e5;
    let p1 = draws.iter().filter(|&&k| k == 1).count() as f64 / 1e5;
    let e = (-1.0f64).exp();
    assert!((p0 - e).abs() < 0.006 && (p1 - e).abs() < 0.006, "{p0} {p1}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn corrupted_data_is_a_scaled_count(seed in any::<u64>(), npp in 1.0f64..500.0) {
        let n = 3;
        let m = 12;
        let mut g = rng(seed);
        let r = random_reference(n, &mut g);
        let y = forward_magnitudes(&CompositeSpecimen::new(&random_image(n, &mut g), &r.to_image()).unwrap(), m).unwrap();
        let budget = PhotonBudget::new(npp, m).unwrap();
        let noisy = poisson_corrupt(&y, &budget, seed).unwrap();
        let unit = y.l1_norm() / budget.total_photons();
        for v in noisy.data().iter() {
            prop_assert!(*v >= 0.0);
            let k = v / unit;
            prop_assert!((k - k.round()).abs() < 1e-6 * k.max(1.0));
        }
    }
}
