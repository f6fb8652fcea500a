use cotrans_core::group::reduce;
use cotrans_core::random::{rng, spectral};
use cotrans_core::{FiniteTable, GroupElement, GroupHandle, Mat, Word};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn to_na(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.data())
}

fn mat_strategy(max_dim: usize) -> impl Strategy<Value = Mat> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| Mat::new(d, v).unwrap())
    })
}

/// All permutations of three points, composed right to left.
fn s3() -> FiniteTable {
    let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    let table = perms
        .iter()
        .map(|a| perms.iter().map(|b| idx([a[b[0]], a[b[1]], a[b[2]]])).collect())
        .collect();
    FiniteTable::new(table, None).unwrap()
}

#[test]
fn svd_round_trip_seeded() {
    let mut r = rng(42);
    for i in 0..1000 {
        let d = 1 + i % 8;
        let data: Vec<f64> = (0..d * d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = Mat::new(d, data).unwrap();
        let svd = a.svd();
        let smax = svd.sigma[0];
        assert!(svd.reconstruct().dist(&a) <= 1e-9 * smax.max(f64::MIN_POSITIVE), "case {i}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn singular_values_match_nalgebra(a in mat_strategy(8)) {
        let ours = a.singular_values();
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-10 * theirs[0].max(1.0));
        }
        prop_assert!((a.op_norm() - theirs[0]).abs() <= 1e-10 * theirs[0].max(1.0));
    }

    #[test]
    fn rank_of_product_is_bounded(d in 2usize..6, ra in 1usize..6, rb in 1usize..6, seed in any::<u64>()) {
        let (ra, rb) = (ra.min(d), rb.min(d));
        let mut r = rng(seed);
        let a = &(&spectral(&mut r, d, 0.5, 2.0) * &Mat::block_projector(d, ra, true)) * &spectral(&mut r, d, 0.5, 2.0);
        let b = &(&spectral(&mut r, d, 0.5, 2.0) * &Mat::block_projector(d, rb, true)) * &spectral(&mut r, d, 0.5, 2.0);
        prop_assert_eq!(a.rank_eps(1e-8), ra);
        prop_assert_eq!(b.rank_eps(1e-8), rb);
        prop_assert!((&a * &b).rank_eps(1e-8) <= ra.min(rb));
    }

    #[test]
    fn inverse_accuracy(d in 1usize..8, seed in any::<u64>()) {
        let a = spectral(&mut rng(seed), d, 1e-3, 1e3);
        let inv = a.try_inverse(1e-12).unwrap();
        prop_assert!((&a * &inv).dist(&Mat::identity(d)) <= 1e-8);
        let oracle = to_na(&a).try_inverse().unwrap();
        let ours = to_na(&inv);
        prop_assert!((ours - &oracle).norm() <= 1e-8 * oracle.norm());
    }

    #[test]
    fn image_and_kernel_split_space(d in 2usize..7, rank in 1usize..6, seed in any::<u64>()) {
        let rank = rank.min(d - 1);
        let mut r = rng(seed);
        let a = &(&spectral(&mut r, d, 0.5, 2.0) * &Mat::block_projector(d, rank, true)) * &spectral(&mut r, d, 0.5, 2.0);
        let img = a.image_basis(1e-8);
        let ker = a.kernel_basis(1e-8);
        let coimg = a.transpose().image_basis(1e-8);
        let coker = a.transpose().kernel_basis(1e-8);
        prop_assert_eq!(img.rank() + coker.rank(), d);
        prop_assert_eq!(coimg.rank() + ker.rank(), d);
        prop_assert!(img.orthonormality_defect() <= 1e-12 && ker.orthonormality_defect() <= 1e-12);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        for k in ker.columns() {
            prop_assert!(a.mul_vec(k).iter().map(|v| v.abs()).fold(0.0, f64::max) <= 1e-10);
            for c in coimg.columns() {
                prop_assert!(dot(k, c).abs() <= 1e-10);
            }
        }
        for c in coker.columns() {
            for i in img.columns() {
                prop_assert!(dot(c, i).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn lattice_associativity(a in prop::collection::vec(-50i64..50, 3), b in prop::collection::vec(-50i64..50, 3), c in prop::collection::vec(-50i64..50, 3)) {
        let g = GroupHandle::lattice(3).unwrap();
        let (a, b, c) = (GroupElement::IntVec(a), GroupElement::IntVec(b), GroupElement::IntVec(c));
        let left = g.compose(&g.compose(&a, &b).unwrap(), &c).unwrap();
        let right = g.compose(&a, &g.compose(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(g.compose(&a, &g.inverse(&a).unwrap()).unwrap(), g.identity());
        prop_assert_eq!(g.eval_word(&g.word_of(&a).unwrap()).unwrap(), a);
    }

    #[test]
    fn free_group_words(a in prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..12),
                        b in prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..12),
                        c in prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..12)) {
        prop_assert_eq!(reduce(&reduce(&a)), reduce(&a));
        let g = GroupHandle::free(2).unwrap();
        let el = |w: &[i32]| GroupElement::Word(Word::new(&reduce(w)).unwrap());
        let (x, y, z) = (el(&a), el(&b), el(&c));
        let left = g.compose(&g.compose(&x, &y).unwrap(), &z).unwrap();
        let right = g.compose(&x, &g.compose(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(g.compose(&g.inverse(&x).unwrap(), &x).unwrap(), g.identity());
        let cat: Vec<i32> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(el(&cat), g.compose(&x, &y).unwrap());
    }

    #[test]
    fn windows_are_deterministic(radius in 1usize..7, seed in any::<u64>()) {
        for g in [GroupHandle::integers(), GroupHandle::lattice(2).unwrap(), GroupHandle::free(2).unwrap()] {
            prop_assert_eq!(g.sample_window(radius, seed), g.sample_window(radius, seed));
            let w = g.sample_window(radius, seed);
            prop_assert_eq!(g.sample_triples(&w, 500, seed), g.sample_triples(&w, 500, seed));
        }
    }
}

#[test]
fn finite_group_axioms() {
    let g = GroupHandle::finite(s3());
    let w = g.sample_window(1, 0);
    assert_eq!(w.len(), 6);
    for a in &w {
        assert_eq!(g.eval_word(&g.word_of(a).unwrap()).unwrap(), *a);
        assert_eq!(g.compose(a, &g.inverse(a).unwrap()).unwrap(), g.identity());
        for b in &w {
            for c in &w {
                let l = g.compose(&g.compose(a, b).unwrap(), c).unwrap();
                let r = g.compose(a, &g.compose(b, c).unwrap()).unwrap();
                assert_eq!(l, r);
            }
        }
    }
    // S3 is not abelian
    let (x, y) = (GroupElement::Finite(1), GroupElement::Finite(2));
    assert_ne!(g.compose(&x, &y).unwrap(), g.compose(&y, &x).unwrap());
}
