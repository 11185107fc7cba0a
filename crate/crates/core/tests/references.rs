mod common;

use common::*;
use holoref::references::{difference_matrix, lower_ones, make_reference, Structure};
use holoref::{apply_mr, apply_mr_inverse, build_mr, Reference, ReferenceKind};
use ndarray::Array2;
use proptest::prelude::*;

fn special(kind: ReferenceKind, n: usize) -> Reference {
    make_reference(kind, n, None).unwrap()
}

#[test]
fn built_matrix_equals_probed_autocorrelation() {
    let mut g = rng(21);
    for n in [1, 2, 3, 4, 5] {
        let mut refs: Vec<Reference> = ReferenceKind::SPECIAL.iter().map(|&k| special(k, n)).collect();
        refs.push(random_reference(n, &mut g));
        for r in refs {
            let built = build_mr(&r).unwrap();
            let probed = mr_by_probing(r.values().view());
            assert_eq!(max_abs_diff(built.data().view(), probed.view()), 0.0, "{} n={n}", r.kind());
        }
    }
}

#[test]
fn structures_are_labelled() {
    let s = |k| build_mr(&special(k, 3)).unwrap().structure();
    assert_eq!(s(ReferenceKind::Pinhole), Structure::Identity);
    assert_eq!(s(ReferenceKind::Slit), Structure::KroneckerLowerOnes);
    assert_eq!(s(ReferenceKind::Block), Structure::KroneckerLowerOnesBoth);
}

#[test]
fn fast_inverse_matches_dense_solve() {
    let mut g = rng(22);
    for n in [1, 2, 5, 8, 16] {
        let mut refs: Vec<Reference> = ReferenceKind::SPECIAL.iter().map(|&k| special(k, n)).collect();
        refs.push(random_mask(n, true, &mut g));
        refs.push(random_mask(n, false, &mut g));
        if n <= 8 {
            refs.push(random_reference(n, &mut g));
        }
        for r in refs {
            let c = random_image(n, &mut g);
            let fast = apply_mr_inverse(&r, c.view()).unwrap();
            let probed = mr_by_probing(r.values().view());
            let dense = unvec_col(&forward_substitute(probed.view(), &vec_col(c.view())), n, n);
            let scale = dense.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!(max_abs_diff(fast.view(), dense.view()) <= 1e-10 * scale, "{} n={n}", r.kind());
        }
    }
}

#[test]
fn difference_operators_invert_cumulative_sums() {
    for n in [1, 2, 7, 20] {
        let prod = difference_matrix(n).dot(&lower_ones(n));
        assert_eq!(prod, Array2::<f64>::eye(n));
    }
}

#[test]
fn inverse_maps_flipped_reference_to_first_basis_vector() {
    // M_R vec(e_0) is the flipped, conjugated reference, so the fast inverse
    // of that array must be the unit impulse at the origin.
    for kind in [ReferenceKind::Slit, ReferenceKind::Block] {
        let n = 6;
        let r = special(kind, n);
        let flipped = Array2::from_shape_fn((n, n), |(i, j)| r.values()[[n - 1 - i, n - 1 - j]].conj());
        let x = apply_mr_inverse(&r, flipped.view()).unwrap();
        for ((i, j), v) in x.indexed_iter() {
            let expected = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
            assert_eq!(*v, C::new(expected, 0.0));
        }
    }
}

#[test]
fn zero_corner_violates_separation() {
    let mut v = Array2::from_elem((3, 3), C::new(0.5, 0.0));
    v[[2, 2]] = C::new(0.0, 0.0);
    assert!(matches!(Reference::custom(v), Err(holoref::Error::SeparationViolated)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_map_equals_direct_quadrant(n in 1usize..6, seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = random_image(n, &mut g);
        let r = random_reference(n, &mut g);
        let direct = quadrant_direct(x.view(), r.values().view());
        prop_assert!(max_abs_diff(apply_mr(&r, x.view()).unwrap().view(), direct.view()) <= 1e-12);
        for kind in ReferenceKind::SPECIAL {
            let s = special(kind, n);
            let direct = quadrant_direct(x.view(), s.values().view());
            prop_assert!(max_abs_diff(apply_mr(&s, x.view()).unwrap().view(), direct.view()) <= 1e-12);
        }
    }

    #[test]
    fn inverse_round_trip(n in 1usize..9, seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = random_image(n, &mut g);
        for r in [special(ReferenceKind::Slit, n), special(ReferenceKind::Block, n), random_mask(n, false, &mut g)] {
            let back = apply_mr_inverse(&r, apply_mr(&r, x.view()).unwrap().view()).unwrap();
            prop_assert!(max_abs_diff(back.view(), x.view()) <= 1e-10);
        }
    }
}
