use cotrans_core::cotranslation::{
    check_preserves_relations, cocycle_check, cot_inverse_law_check, extract_morphism, from_difference_seq,
    from_generator_maps, from_hull, from_morphism, hull_axiom_check, hull_roundtrip_check, is_autonomous, max_deviation,
    morphisms, to_hull,
};
use cotrans_core::random::{rng, spectral, uniform_seq};
use cotrans_core::{DifferenceSeq, ElementMap, GroupElement, GroupHandle, Hull, Mat, MatrixCocycle};
use rand::Rng;

fn ints(r: i64) -> Vec<GroupElement> {
    (-r..=r).map(GroupElement::Int).collect()
}

/// Solution of `x(t+1) = A(t) x(t)` from `x(n) = e_j`, stepped `m` times, one column at a time.
fn naive_transition(seq: &DifferenceSeq, n: i64, m: i64) -> Vec<Vec<f64>> {
    let d = seq.dim();
    (0..d)
        .map(|j| {
            let mut x = vec![0.0; d];
            x[j] = 1.0;
            if m >= 0 {
                for t in n..n + m {
                    x = seq.at(t).unwrap().mul_vec(&x);
                }
            } else {
                for t in (n + m..n).rev() {
                    x = seq.at(t).unwrap().try_inverse(1e-14).unwrap().mul_vec(&x);
                }
            }
            x
        })
        .collect()
}

#[test]
fn random_difference_sequences_satisfy_laws() {
    let win = ints(8);
    for seed in 0..100u64 {
        let d = 2 + (seed % 3) as usize;
        let seq = uniform_seq(seed, d);
        let z = from_difference_seq(&seq);
        let inv = cot_inverse_law_check(&z, &win, 1e-10).unwrap();
        assert!(inv.pass(), "seed {seed}: {inv:?}");
        let c = cocycle_check(&z, &win, 1e-10, seed).unwrap();
        assert!(c.pass, "seed {seed}: {c:?}");
        assert_eq!(c.samples, 17 * 17 * 17);
        if seed < 10 {
            for (n, m) in [(0, 3), (-2, 5), (4, -6), (1, -1)] {
                let oracle = naive_transition(&seq, n, m);
                let got = z.at(&GroupElement::Int(n), &GroupElement::Int(m)).unwrap();
                let cmp = Mat::from_columns(d, &oracle).unwrap();
                assert!(got.dist(&cmp) <= 1e-10 * cmp.op_norm().max(1.0), "seed {seed} ({n},{m})");
            }
        }
    }
}

#[test]
fn autonomy_round_trip_and_negative() {
    let win = ints(5);
    for seed in 0..50u64 {
        let d = 2 + (seed % 3) as usize;
        let gamma = morphisms::matrix_pow(spectral(&mut rng(seed), d, 0.8, 1.25)).unwrap();
        let z = from_morphism(&gamma, &win, 1e-10).unwrap();
        let (auto, entry) = is_autonomous(&z, &win, 1e-12, seed).unwrap();
        assert!(auto, "{entry:?}");
        let back = from_morphism(&extract_morphism(&z), &win, 1e-10).unwrap();
        assert_eq!(max_deviation("roundtrip", &back, &z, &win, 0.0).unwrap().max_residual, 0.0);
        for g in &win {
            assert_eq!(extract_morphism(&z).at(g).unwrap(), gamma.at(g).unwrap());
        }
    }
    let (auto, entry) = is_autonomous(&from_difference_seq(&DifferenceSeq::bump()), &win, 1e-9, 0).unwrap();
    assert!(!auto);
    assert!(entry.max_residual > 0.1);

    let z2 = GroupHandle::lattice(2).unwrap();
    let gamma = morphisms::diag_pow(&z2, vec![vec![2.0, 0.5], vec![3.0, -1.0]]).unwrap();
    let z = from_morphism(&gamma, &z2.sample_window(2, 0), 1e-12).unwrap();
    assert!(is_autonomous(&z, &z2.sample_window(2, 0), 0.0, 0).unwrap().0);
}

#[test]
fn hull_round_trip_is_exact() {
    let win = ints(6);
    for seed in 0..10u64 {
        let seq = uniform_seq(seed, 3);
        let z = from_difference_seq(&seq);
        assert_eq!(hull_roundtrip_check(&z, &win).unwrap().max_residual, 0.0);
        let hull = to_hull(&z);
        let axioms = hull_axiom_check(&hull, &win, 1e-10, seed).unwrap();
        assert!(axioms.pass(), "{axioms:?}");

        // columnwise solutions give the same cotranslation up to rounding
        let sol = Hull::solution_family(&seq);
        let zs = from_hull(&sol);
        assert!(max_deviation("solution", &zs, &z, &win, 1e-9).unwrap().pass);
        assert!(hull_axiom_check(&sol, &win, 1e-10, seed).unwrap().pass());
    }
    let broken = to_hull(&from_difference_seq(&uniform_seq(1, 2))).with_identity_slice(GroupElement::Int(2));
    assert!(!hull_axiom_check(&broken, &win, 1e-10, 0).unwrap().pass());
}

#[test]
fn relation_fixtures() {
    let g = GroupHandle::lattice(2).unwrap();
    let win = g.sample_window(3, 0);
    let constant = |m: Mat| ElementMap::constant(g.clone(), m);

    let ok = check_preserves_relations(&g, &[constant(Mat::diag(&[2.0, 1.0])), constant(Mat::diag(&[1.0, 3.0]))], &win, 0.0)
        .unwrap();
    assert!(ok.pass());
    assert!(ok.entries.iter().all(|e| e.max_residual == 0.0));

    let shear = |a: f64, b: f64| Mat::from_rows(&[[1.0, a], [b, 1.0]]).unwrap();
    let maps = vec![constant(shear(1.0, 0.0)), constant(shear(0.0, 1.0))];
    let bad = check_preserves_relations(&g, &maps, &win, 1e-9).unwrap();
    assert!(!bad.pass());
    assert!(bad.entries.iter().map(|e| e.max_residual).fold(0.0, f64::max) > 0.5);
    assert!(from_generator_maps(&g, maps, &win, 1e-9).is_err());
}

#[test]
fn generator_maps_on_integers_match_difference_seq() {
    let win = ints(6);
    for seed in 0..20u64 {
        let seq = uniform_seq(seed, 2 + (seed % 3) as usize);
        let a = from_difference_seq(&seq);
        let b = from_generator_maps(&GroupHandle::integers(), vec![seq.as_generator_map()], &win, 1e-12).unwrap();
        for g in &win {
            for h in &win {
                assert_eq!(a.at(g, h).unwrap(), b.at(g, h).unwrap(), "seed {seed} {g} {h}");
            }
        }
    }
}

#[test]
fn free_group_generator_maps() {
    let f2 = GroupHandle::free(2).unwrap();
    let win = f2.sample_window(3, 0);
    let mut r = rng(3);
    let (m1, m2) = (spectral(&mut r, 2, 0.5, 2.0), spectral(&mut r, 2, 0.5, 2.0));
    let phase = r.gen_range(0.0..1.0);
    let maps = vec![
        ElementMap::new(f2.clone(), 2, move |g| Ok(m1.scale(1.0 + phase * g.to_string().len() as f64 / 10.0))),
        ElementMap::constant(f2.clone(), m2),
    ];
    let z = from_generator_maps(&f2, maps, &win, 1e-12).unwrap();
    let short: Vec<GroupElement> = win.iter().filter(|w| matches!(w, GroupElement::Word(x) if x.len() <= 1)).cloned().collect();
    assert!(cocycle_check(&z, &short, 1e-9, 0).unwrap().pass);
    assert!(cot_inverse_law_check(&z, &win, 1e-9).unwrap().pass());
}
