use cotrans_core::cotranslation::{cocycle_check, from_difference_seq};
use cotrans_core::partial::{
    check_invariant_projector, complete, conjugate, conjugate_check, continuity_probe_t, kernel_constancy_check,
    kinematic_similarity_report, law_check, mutual_orthogonality_check, normalize_units, projector_reconstruction_check,
    rank_of, restrict, units_projector, units_projector_check, ConjugationMap, PartialCotranslation, ProjectorMap,
};
use cotrans_core::random::{partial_shape, random_partial, rng, spectral, spectral_seq};
use cotrans_core::{laws, GroupElement, GroupHandle, Mat, MatrixCocycle, Verdict};

fn ints(r: i64) -> Vec<GroupElement> {
    (-r..=r).map(GroupElement::Int).collect()
}

fn pow2(n: &GroupElement) -> f64 {
    2f64.powi(n.as_int().unwrap() as i32)
}

fn counterexample() -> PartialCotranslation {
    PartialCotranslation::explicit(GroupHandle::integers(), 2, |_, n| Ok(Mat::diag(&[0.0, pow2(n)])))
}

#[test]
fn counterexample_fidelity() {
    let w = counterexample();
    let win = ints(6);
    assert_eq!(law_check(&w, &win, 0.0, 0).unwrap().max_residual, 0.0);
    assert!(units_projector_check(&w, &win, 0.0).unwrap().pass());
    let k = kernel_constancy_check(&w, &win, 0.0, 0).unwrap();
    assert!(k.pass(), "{k:?}");

    let alt = ProjectorMap::alternating(Mat::diag(&[0.0, 1.0]), Mat::identity(2)).unwrap();
    let inv = check_invariant_projector(&w, &alt, &win, 0.0).unwrap();
    assert!(inv.pass(), "{inv:?}");
    for g in &win {
        let expect = if g.as_int().unwrap() % 2 == 0 { 1 } else { 2 };
        assert_eq!(alt.at(g).unwrap().rank_eps(1e-8), expect);
    }
    assert!(!alt.rank_check(&win).unwrap().pass);
}

#[test]
fn invariant_projectors_of_full_cotranslations_are_transported() {
    let z = from_difference_seq(&spectral_seq(4, 3));
    let win = ints(4);
    let mut r = rng(2);
    let p0 = cotrans_core::random::idempotent(&mut r, 3, 1).unwrap();
    let p = ProjectorMap::conjugated_constant(&z, p0).unwrap();
    assert!(check_invariant_projector(&z, &p, &win, 1e-9).unwrap().pass());
    assert!(projector_reconstruction_check(&z, &p, &win, 1e-9).unwrap().pass);
    assert!(p.rank_check(&win).unwrap().pass);
}

#[test]
fn seeded_completions() {
    let win = ints(3);
    for seed in 0..100u64 {
        let (d, r) = partial_shape(seed);
        let rp = random_partial(seed, d, r, &win).unwrap();
        let w = &rp.w;
        assert!(law_check(w, &win, 1e-9, seed).unwrap().pass, "seed {seed}");
        assert_eq!(rank_of(w).unwrap(), r);
        let k = kernel_constancy_check(w, &win, 1e-8, seed).unwrap();
        assert!(k.pass(), "seed {seed}: {k:?}");

        let c = complete(w, &win, 1e-9, seed).unwrap();
        assert!(c.report.pass(), "seed {seed}");
        for entry in &c.report.entries {
            assert_ne!(entry.verdict, Verdict::Fail);
        }
        let z = &c.z_full;
        assert!(cocycle_check(z, &win, 1e-9, seed).unwrap().pass);
        // W = restrict(Z_full, units projector of W)
        let back = restrict(z, &units_projector(w), &win, 1e-9).unwrap();
        for g in &win {
            for h in &win {
                let (a, b) = (back.at(g, h).unwrap(), w.at(g, h).unwrap());
                assert!(a.dist(&b) <= 1e-9 * b.op_norm().max(1.0), "seed {seed}");
            }
        }
        let n = &c.normalization;
        let (sup_t, sup_inv) = n.t.sup_norms(&win).unwrap();
        assert!(sup_t <= d as f64 * (1.0 + 1e-9));
        assert!(sup_inv <= d as f64 * n.m * (1.0 + 1e-9));
        let e = GroupElement::Int(0);
        for g in &win {
            assert!(n.w_hat.at(g, &e).unwrap().dist(&Mat::block_projector(d, r, true)) <= 1e-8);
        }
    }
}

#[test]
fn conjugation_preserves_rank_and_orthogonality() {
    let win = ints(2);
    for seed in 0..100u64 {
        let (d, r) = partial_shape(seed);
        let rp = random_partial(seed, d, r, &win).unwrap();
        let v = complete(&rp.w, &win, 1e-9, seed).unwrap().v;
        let t = ConjugationMap::new(GroupHandle::integers(), d, move |g| {
            Ok(spectral(&mut rng(seed.wrapping_mul(31) ^ g.as_int().unwrap() as u64), d, 0.5, 2.0))
        });
        let (wt, vt) = (conjugate(&rp.w, &t).unwrap(), conjugate(&v, &t).unwrap());
        assert!(conjugate_check(&rp.w, &wt, &win, 1e-9, seed).unwrap().pass(), "seed {seed}");
        assert!(mutual_orthogonality_check(&wt, &vt, &win, 1e-9, seed).unwrap().pass, "seed {seed}");
    }
}

#[test]
fn completion_examples() {
    let win = ints(5);
    let upper = PartialCotranslation::explicit(GroupHandle::integers(), 2, |_, n| Ok(Mat::diag(&[pow2(n), 0.0])));
    let c = complete(&upper, &win, 1e-12, 0).unwrap();
    let lower = counterexample();
    let c2 = complete(&lower, &win, 1e-12, 0).unwrap();
    for g in &win {
        for h in &win {
            assert_eq!(c.v.at(g, h).unwrap(), Mat::diag(&[0.0, 1.0]));
            assert_eq!(c.z_full.at(g, h).unwrap(), Mat::diag(&[pow2(h), 1.0]));
            assert_eq!(c2.z_full.at(g, h).unwrap(), Mat::diag(&[1.0, pow2(h)]));
            assert_eq!(&c2.z_full.at(g, h).unwrap() * &Mat::diag(&[0.0, 1.0]), lower.at(g, h).unwrap());
        }
    }
}

#[test]
fn similarity_reports() {
    let win = ints(4);
    let rp = random_partial(5, 3, 2, &win).unwrap();
    let n = normalize_units(&rp.w, &win, 1e-8, 1e-9).unwrap();
    // T(hg) W_hat(g,h) = W(g,h) T(g)
    let sim = kinematic_similarity_report(&rp.w, &n.w_hat, &n.t, &win, 1e-9, None).unwrap();
    assert!(sim.report.pass(), "{sim:?}");
    assert!(sim.sup_t <= 3.0 * (1.0 + 1e-9));
    assert!(sim.continuity.is_some());

    let id = ConjugationMap::constant(GroupHandle::integers(), Mat::identity(2)).unwrap();
    let w = counterexample();
    let s = kinematic_similarity_report(&w, &w, &id, &win, 0.0, None).unwrap();
    assert_eq!(s.report.entries[0].max_residual, 0.0);
    assert!(s.bounded);
}

#[test]
fn continuity_probe_cases() {
    let g = GroupHandle::integers();
    let path = ints(10);
    let flat = ConjugationMap::constant(g.clone(), Mat::identity(2)).unwrap();
    assert_eq!(continuity_probe_t(&flat, &path, 1.0).unwrap().max_jump, 0.0);

    let step = 0.01;
    let rot = ConjugationMap::new(g, 2, move |n| {
        let th = n.as_int().unwrap() as f64 * step;
        Mat::from_rows(&[[th.cos(), -th.sin()], [th.sin(), th.cos()]])
    });
    let p = continuity_probe_t(&rot, &path, 1.0).unwrap();
    // ||R(a + s) - R(a)|| = 2 sin(s / 2)
    assert!((p.max_jump - 2.0 * (step / 2.0).sin()).abs() <= 1e-12);
    assert!(!p.flagged);
}

#[test]
fn restrict_rejects_non_invariant_projector() {
    let z = from_difference_seq(&spectral_seq(1, 2));
    let p = ProjectorMap::constant(GroupHandle::integers(), Mat::diag(&[1.0, 0.0]));
    let err = restrict(&z, &p, &ints(2), 1e-9).unwrap_err();
    assert!(err.to_string().contains(laws::PROJECTOR_INVARIANCE), "{err}");
}
