//! Partial cotranslations: possibly singular `W` with `W(g,kh) = W(hg,k) W(g,h)`,
//! their units projectors, invariant projectors, orthogonal sums,
//! conjugations, bounded normalization and completion to a cotranslation.

use serde::{Deserialize, Serialize};

use crate::cotranslation::{cocycle_check_as, construction_error, Cotranslation, CotranslationKind};
use crate::error::{Error, Result};
use crate::eval::{ElementMap, MatrixCocycle, PairMap};
use crate::group::{GroupElement, GroupHandle, DEFAULT_TRIPLE_CAP};
use crate::matrix::{same_kernel_residual, Mat, DEFAULT_INV_TOL, DEFAULT_RANK_TOL};
use crate::report::{laws, normalized, sweep, LawEntry, Verdict, VerificationReport};

/// Singular values closer than this factor to the rank threshold make a
/// rank decision inconclusive.
pub const BORDERLINE_MARGIN: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartialKind {
    Explicit,
    Restricted,
    Sum,
    Conjugated,
    ConstantBlock,
}

#[derive(Clone, Debug)]
pub struct PartialCotranslation {
    map: PairMap,
    kind: PartialKind,
}

impl MatrixCocycle for PartialCotranslation {
    fn pair_map(&self) -> &PairMap {
        &self.map
    }
}

impl PartialCotranslation {
    pub fn explicit<F>(group: GroupHandle, dim: usize, eval: F) -> Self
    where
        F: Fn(&GroupElement, &GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        PartialCotranslation { map: PairMap::new(group, dim, eval), kind: PartialKind::Explicit }
    }

    fn from_parts(map: PairMap, kind: PartialKind) -> Self {
        PartialCotranslation { map, kind }
    }

    /// Every cotranslation is a partial cotranslation.
    pub fn from_cotranslation(z: &Cotranslation) -> Self {
        let zc = z.clone();
        PartialCotranslation::explicit(z.group().clone(), z.dim(), move |g, h| zc.at(g, h))
    }

    /// The constant map `W(g,h) = p` for an idempotent `p`.
    pub fn constant(group: GroupHandle, p: Mat) -> Result<Self> {
        let (ok, r) = p.is_idempotent(1e-12 * p.op_norm().max(1.0));
        if !ok {
            return Err(Error::Spec(format!("constant partial cotranslation needs an idempotent (residual {r:e})")));
        }
        let dim = p.dim();
        Ok(PartialCotranslation::from_parts(PairMap::new(group, dim, move |_, _| Ok(p.clone())), PartialKind::ConstantBlock))
    }

    /// `diag(Id_r, 0)` (`upper`) or `diag(0, Id_{d-r})`, constant in `(g, h)`.
    pub fn constant_block(group: GroupHandle, dim: usize, rank: usize, upper: bool) -> Self {
        PartialCotranslation::constant(group, Mat::block_projector(dim, rank, upper)).expect("block projectors are idempotent")
    }

    pub fn kind(&self) -> PartialKind {
        self.kind
    }

    /// Reinterprets as a cotranslation. Invertibility is the caller's responsibility.
    pub fn to_cotranslation(&self) -> Cotranslation {
        Cotranslation::from_parts(self.map.clone(), CotranslationKind::Explicit)
    }
}

/// Idempotent-valued map `g -> P(g)`.
#[derive(Clone, Debug)]
pub struct ProjectorMap {
    map: ElementMap,
}

impl ProjectorMap {
    pub fn new<F>(group: GroupHandle, dim: usize, f: F) -> Self
    where
        F: Fn(&GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        ProjectorMap { map: ElementMap::new(group, dim, f) }
    }

    pub fn from_map(map: ElementMap) -> Self {
        ProjectorMap { map }
    }

    pub fn constant(group: GroupHandle, p: Mat) -> Self {
        ProjectorMap { map: ElementMap::constant(group, p) }
    }

    /// `P(g) = Z(e,g) p0 Z(g,g^-1)`, invariant for `Z` whenever `p0` is idempotent.
    pub fn conjugated_constant(z: &Cotranslation, p0: Mat) -> Result<Self> {
        if p0.dim() != z.dim() {
            return Err(Error::DimMismatch { expected: z.dim(), got: p0.dim() });
        }
        let zc = z.clone();
        let group = z.group().clone();
        let e = group.identity();
        let g2 = group.clone();
        Ok(ProjectorMap::new(group, z.dim(), move |g| {
            let back = zc.at(g, &g2.inverse(g)?)?;
            Ok(&(&zc.at(&e, g)? * &p0) * &back)
        }))
    }

    /// `even` at even integers, `odd` at odd ones.
    pub fn alternating(even: Mat, odd: Mat) -> Result<Self> {
        if even.dim() != odd.dim() {
            return Err(Error::DimMismatch { expected: even.dim(), got: odd.dim() });
        }
        let dim = even.dim();
        Ok(ProjectorMap::new(GroupHandle::integers(), dim, move |g| {
            Ok(if g.as_int().expect("integer") % 2 == 0 { even.clone() } else { odd.clone() })
        }))
    }

    /// `Id - P`.
    pub fn complement(&self) -> Self {
        let inner = self.clone();
        let d = self.dim();
        ProjectorMap::new(self.group().clone(), d, move |g| Ok(&Mat::identity(d) - &inner.at(g)?))
    }

    pub fn group(&self) -> &GroupHandle {
        self.map.group()
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn at(&self, g: &GroupElement) -> Result<Mat> {
        self.map.at(g)
    }

    /// `||P(g)^2 - P(g)||` relative to `max(1, ||P(g)||^2)`.
    pub fn idempotency_check(&self, law: &str, window: &[GroupElement], tol: f64) -> Result<LawEntry> {
        sweep(law, tol, window.iter().map(|g| vec![g.clone()]), |l| idempotency_residual(&self.at(&l[0])?))
    }

    /// `max |rank P(g) - rank P(g_0)|` over the window; `details.rank` is the first rank seen.
    pub fn rank_check(&self, window: &[GroupElement]) -> Result<LawEntry> {
        let first = match window.first() {
            Some(g) => self.at(g)?.rank_eps(DEFAULT_RANK_TOL),
            None => 0,
        };
        let mut ranks = Vec::with_capacity(window.len());
        let e = sweep(laws::PROJECTOR_RANK, 0.0, window.iter().map(|g| vec![g.clone()]), |l| {
            let r = self.at(&l[0])?.rank_eps(DEFAULT_RANK_TOL);
            ranks.push(r);
            Ok((r as f64 - first as f64).abs())
        })?;
        let (lo, hi) = (ranks.iter().min().copied().unwrap_or(0), ranks.iter().max().copied().unwrap_or(0));
        Ok(e.with_detail("rank", first as f64).with_detail("min_rank", lo as f64).with_detail("max_rank", hi as f64))
    }
}

pub fn idempotency_residual(p: &Mat) -> Result<f64> {
    let n = p.op_norm();
    Ok(normalized((p * p).dist(p), n * n))
}

/// Invertible-valued map `g -> T(g)` with lazily cached inverses.
#[derive(Clone, Debug)]
pub struct ConjugationMap {
    map: ElementMap,
    inverse: ElementMap,
}

impl ConjugationMap {
    pub fn new<F>(group: GroupHandle, dim: usize, f: F) -> Self
    where
        F: Fn(&GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        ConjugationMap::from_map(ElementMap::new(group, dim, f))
    }

    pub fn from_map(map: ElementMap) -> Self {
        let m2 = map.clone();
        let inverse = ElementMap::new(map.group().clone(), map.dim(), move |g| m2.at(g)?.try_inverse(DEFAULT_INV_TOL));
        ConjugationMap { map, inverse }
    }

    pub fn constant(group: GroupHandle, t: Mat) -> Result<Self> {
        t.try_inverse(DEFAULT_INV_TOL)?;
        Ok(ConjugationMap::from_map(ElementMap::constant(group, t)))
    }

    /// `T(n) = [[1, n], [0, 1]]` on `Z`.
    pub fn shear() -> Self {
        ConjugationMap::new(GroupHandle::integers(), 2, |g| {
            Mat::from_rows(&[[1.0, g.as_int().expect("integer") as f64], [0.0, 1.0]])
        })
    }

    /// `T(g)^-1` as a conjugation map.
    pub fn inverse_map(&self) -> ConjugationMap {
        ConjugationMap { map: self.inverse.clone(), inverse: self.map.clone() }
    }

    pub fn group(&self) -> &GroupHandle {
        self.map.group()
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn at(&self, g: &GroupElement) -> Result<Mat> {
        self.map.at(g)
    }

    pub fn inverse_at(&self, g: &GroupElement) -> Result<Mat> {
        self.inverse.at(g)
    }

    /// `||T(g) T(g)^-1 - Id||` over the window.
    pub fn invertibility_check(&self, window: &[GroupElement], tol: f64) -> Result<LawEntry> {
        sweep(laws::CONJUGATION_INVERSE, tol, window.iter().map(|g| vec![g.clone()]), |l| {
            Ok((&self.at(&l[0])? * &self.inverse_at(&l[0])?).dist(&Mat::identity(self.dim())))
        })
    }

    /// `(sup ||T(g)||, sup ||T(g)^-1||)` over the window.
    pub fn sup_norms(&self, window: &[GroupElement]) -> Result<(f64, f64)> {
        let mut out = (0.0f64, 0.0f64);
        for g in window {
            out.0 = out.0.max(self.at(g)?.op_norm());
            out.1 = out.1.max(self.inverse_at(g)?.op_norm());
        }
        Ok(out)
    }
}

/// Partial cotranslation law over window triples.
pub fn law_check<C: MatrixCocycle + ?Sized>(w: &C, window: &[GroupElement], tol: f64, seed: u64) -> Result<LawEntry> {
    cocycle_check_as(laws::PARTIAL_LAW, w, window, tol, seed)
}

/// `P(g) = W(g, e)`.
pub fn units_projector<C: MatrixCocycle + Clone + Send + Sync + 'static>(w: &C) -> ProjectorMap {
    let wc = w.clone();
    let e = w.group().identity();
    ProjectorMap::new(w.group().clone(), w.dim(), move |g| wc.at(g, &e))
}

/// `||P(hg) V(g,h) - V(g,h) P(g)||`, normalized by the larger product of norms.
pub fn invariance_residual<C: MatrixCocycle + ?Sized>(v: &C, p: &ProjectorMap, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    let hg = v.group().compose(h, g)?;
    let (ph, vg, pg) = (p.at(&hg)?, v.at(g, h)?, p.at(g)?);
    let vn = vg.op_norm();
    Ok(normalized((&ph * &vg).dist(&(&vg * &pg)), (ph.op_norm() * vn).max(vn * pg.op_norm())))
}

fn invariance_check<C: MatrixCocycle + ?Sized>(law: &str, v: &C, p: &ProjectorMap, window: &[GroupElement], tol: f64) -> Result<LawEntry> {
    let pairs = v.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, 0);
    sweep(law, tol, pairs.into_iter().map(Vec::from), |l| invariance_residual(v, p, &l[0], &l[1]))
}

/// Idempotency and invariance of the units projector `W(g, e)`.
pub fn units_projector_check<C>(w: &C, window: &[GroupElement], tol: f64) -> Result<VerificationReport>
where
    C: MatrixCocycle + Clone + Send + Sync + 'static,
{
    let p = units_projector(w);
    let mut report = VerificationReport::new();
    report.push(p.idempotency_check(laws::UNITS_IDEMPOTENT, window, tol)?);
    report.push(invariance_check(laws::UNITS_INVARIANCE, w, &p, window, tol)?);
    Ok(report)
}

/// Numeric rank of `W`, read off `W(e, e)`.
pub fn rank_of<C: MatrixCocycle + ?Sized>(w: &C) -> Result<usize> {
    let e = w.group().identity();
    Ok(w.at(&e, &e)?.rank_eps(DEFAULT_RANK_TOL))
}

/// Kernel comparison of `W(h,g)` and `W(h,k)`; 1.0 when the numeric ranks differ.
pub fn kernel_residual<C: MatrixCocycle + ?Sized>(w: &C, h: &GroupElement, g: &GroupElement, k: &GroupElement) -> Result<f64> {
    Ok(same_kernel_residual(&w.at(h, g)?, &w.at(h, k)?, DEFAULT_RANK_TOL).unwrap_or(1.0))
}

/// `|rank W(g,h) - rank W(e,e)|`.
pub fn rank_residual<C: MatrixCocycle + ?Sized>(w: &C, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    Ok((w.at(g, h)?.rank_eps(DEFAULT_RANK_TOL) as f64 - rank_of(w)? as f64).abs())
}

/// Kernel constancy along shared first arguments, and rank constancy over
/// all window pairs. Rank decisions with a singular value within
/// [`BORDERLINE_MARGIN`] of the threshold make the rank entry inconclusive.
pub fn kernel_constancy_check<C: MatrixCocycle + ?Sized>(w: &C, window: &[GroupElement], tol: f64, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    let triples = w.group().sample_triples(window, DEFAULT_TRIPLE_CAP, seed);
    report.push(sweep(laws::KERNEL_CONSTANCY, tol, triples.into_iter().map(Vec::from), |l| {
        kernel_residual(w, &l[0], &l[1], &l[2])
    })?);

    let reference = rank_of(w)?;
    let mut borderline = 0usize;
    let mut min_gap = f64::INFINITY;
    let pairs = w.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, seed);
    let mut rank = sweep(laws::RANK_CONSTANCY, 0.0, pairs.into_iter().map(Vec::from), |l| {
        let info = w.at(&l[0], &l[1])?.rank_info(DEFAULT_RANK_TOL);
        if info.is_borderline(BORDERLINE_MARGIN) {
            borderline += 1;
        }
        if info.threshold > 0.0 {
            if let Some(s) = info.last_kept {
                min_gap = min_gap.min(s / info.threshold);
            }
            if let Some(s) = info.first_dropped.filter(|&s| s > 0.0) {
                min_gap = min_gap.min(info.threshold / s);
            }
        }
        Ok((info.rank as f64 - reference as f64).abs())
    })?;
    rank = rank.with_detail("rank", reference as f64).with_detail("borderline_pairs", borderline as f64);
    if min_gap.is_finite() {
        rank = rank.with_detail("min_gap_factor", min_gap);
    }
    if borderline > 0 {
        rank.set_verdict(Verdict::Inconclusive);
    }
    report.push(rank);
    Ok(report)
}

/// Idempotency and invariance of `P` with respect to `V`.
pub fn check_invariant_projector<C: MatrixCocycle + ?Sized>(
    v: &C,
    p: &ProjectorMap,
    window: &[GroupElement],
    tol: f64,
) -> Result<VerificationReport> {
    if p.dim() != v.dim() {
        return Err(Error::DimMismatch { expected: v.dim(), got: p.dim() });
    }
    let mut report = VerificationReport::new();
    report.push(p.idempotency_check(laws::PROJECTOR_IDEMPOTENT, window, tol)?);
    report.push(invariance_check(laws::PROJECTOR_INVARIANCE, v, p, window, tol)?);
    Ok(report)
}

pub fn projector_orthogonality_residual(p: &ProjectorMap, q: &ProjectorMap, g: &GroupElement) -> Result<f64> {
    let (a, b) = (p.at(g)?, q.at(g)?);
    Ok(normalized((&a * &b).op_norm().max((&b * &a).op_norm()), a.op_norm() * b.op_norm()))
}

/// `P(g) Q(g) = Q(g) P(g) = 0` on the window.
pub fn check_projectors_orthogonal(p: &ProjectorMap, q: &ProjectorMap, window: &[GroupElement], tol: f64) -> Result<LawEntry> {
    sweep(laws::PROJECTOR_ORTHOGONALITY, tol, window.iter().map(|g| vec![g.clone()]), |l| {
        projector_orthogonality_residual(p, q, &l[0])
    })
}

/// `W(g,h) = V(g,h) P(g)` for a projector verified invariant on the window.
pub fn restrict<C>(v: &C, p: &ProjectorMap, window: &[GroupElement], tol: f64) -> Result<PartialCotranslation>
where
    C: MatrixCocycle + Clone + Send + Sync + 'static,
{
    let check = check_invariant_projector(v, p, window, tol)?;
    if let Some(bad) = check.failures().next() {
        return Err(construction_error(bad));
    }
    let (vc, pc) = (v.clone(), p.clone());
    let map = PairMap::new(v.group().clone(), v.dim(), move |g, h| Ok(&vc.at(g, h)? * &pc.at(g)?));
    Ok(PartialCotranslation::from_parts(map, PartialKind::Restricted))
}

pub fn mutual_orthogonality_residual<A, B>(w: &A, v: &B, g: &GroupElement, h: &GroupElement, k: &GroupElement) -> Result<f64>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    let hg = w.group().compose(h, g)?;
    let (w_out, v_in) = (w.at(&hg, k)?, v.at(g, h)?);
    let (v_out, w_in) = (v.at(&hg, k)?, w.at(g, h)?);
    let r = (&w_out * &v_in).op_norm().max((&v_out * &w_in).op_norm());
    Ok(normalized(r, (w_out.op_norm() * v_in.op_norm()).max(v_out.op_norm() * w_in.op_norm())))
}

/// `W(hg,k) V(g,h) = V(hg,k) W(g,h) = 0` on window triples.
pub fn mutual_orthogonality_check<A, B>(w: &A, v: &B, window: &[GroupElement], tol: f64, seed: u64) -> Result<LawEntry>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    if w.dim() != v.dim() {
        return Err(Error::DimMismatch { expected: w.dim(), got: v.dim() });
    }
    let triples = w.group().sample_triples(window, DEFAULT_TRIPLE_CAP, seed);
    sweep(laws::MUTUAL_ORTHOGONALITY, tol, triples.into_iter().map(Vec::from), |l| {
        mutual_orthogonality_residual(w, v, &l[0], &l[1], &l[2])
    })
}

/// `||S(g,h) W(g,e) - W(g,h)||` normalized: `W` is recovered from `S` by restriction.
pub fn reconstruction_residual<A, B>(s: &A, w: &B, g: &GroupElement, h: &GroupElement) -> Result<f64>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    let e = w.group().identity();
    let (sg, p) = (s.at(g, h)?, w.at(g, &e)?);
    Ok(normalized((&sg * &p).dist(&w.at(g, h)?), sg.op_norm() * p.op_norm()))
}

fn pairwise_sum(w: &PartialCotranslation, v: &PartialCotranslation) -> PartialCotranslation {
    let (wc, vc) = (w.clone(), v.clone());
    let map = PairMap::new(w.group().clone(), w.dim(), move |g, h| Ok(&wc.at(g, h)? + &vc.at(g, h)?));
    PartialCotranslation::from_parts(map, PartialKind::Sum)
}

/// `W + V` for mutually orthogonal partial cotranslations, with a report
/// covering the sum law, invariance of `W`'s units projector for the sum and
/// recovery of `W` by restricting the sum.
pub fn orthogonal_sum(
    w: &PartialCotranslation,
    v: &PartialCotranslation,
    window: &[GroupElement],
    tol: f64,
    seed: u64,
) -> Result<(PartialCotranslation, VerificationReport)> {
    let orth = mutual_orthogonality_check(w, v, window, tol, seed)?;
    if !orth.pass {
        return Err(construction_error(&orth));
    }
    let s = pairwise_sum(w, v);
    let mut report = VerificationReport::from(orth);
    report.push(law_check(&s, window, tol, seed)?);
    report.push(invariance_check(laws::SUM_UNITS_INVARIANCE, &s, &units_projector(w), window, tol)?);
    let pairs = w.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, seed);
    report.push(sweep(laws::SUM_RECONSTRUCTION, tol, pairs.into_iter().map(Vec::from), |l| {
        reconstruction_residual(&s, w, &l[0], &l[1])
    })?);
    Ok((s, report))
}

fn conjugated_map<C>(w: &C, t: &ConjugationMap) -> Result<PairMap>
where
    C: MatrixCocycle + Clone + Send + Sync + 'static,
{
    if w.dim() != t.dim() {
        return Err(Error::DimMismatch { expected: w.dim(), got: t.dim() });
    }
    let (wc, tc) = (w.clone(), t.clone());
    let group = w.group().clone();
    let g2 = group.clone();
    Ok(PairMap::new(group, w.dim(), move |g, h| {
        let hg = g2.compose(h, g)?;
        Ok(&(&tc.inverse_at(&hg)? * &wc.at(g, h)?) * &tc.at(g)?)
    }))
}

/// `W_T(g,h) = T(hg)^-1 W(g,h) T(g)`.
pub fn conjugate<C>(w: &C, t: &ConjugationMap) -> Result<PartialCotranslation>
where
    C: MatrixCocycle + Clone + Send + Sync + 'static,
{
    Ok(PartialCotranslation::from_parts(conjugated_map(w, t)?, PartialKind::Conjugated))
}

/// The same conjugation applied to a full cotranslation.
pub fn conjugate_cotranslation(z: &Cotranslation, t: &ConjugationMap) -> Result<Cotranslation> {
    Ok(Cotranslation::from_parts(conjugated_map(z, t)?, CotranslationKind::Conjugated))
}

/// `|rank W_T(g,h) - rank W(g,h)|`.
pub fn conjugate_rank_residual<A, B>(w: &A, wt: &B, g: &GroupElement, h: &GroupElement) -> Result<f64>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    let (a, b) = (w.at(g, h)?.rank_eps(DEFAULT_RANK_TOL), wt.at(g, h)?.rank_eps(DEFAULT_RANK_TOL));
    Ok((a as f64 - b as f64).abs())
}

/// Law of `W_T` and pointwise rank agreement with `W`.
pub fn conjugate_check(
    w: &PartialCotranslation,
    wt: &PartialCotranslation,
    window: &[GroupElement],
    tol: f64,
    seed: u64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::from(law_check(wt, window, tol, seed)?);
    let pairs = w.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, seed);
    report.push(sweep(laws::CONJUGATE_RANK, 0.0, pairs.into_iter().map(Vec::from), |l| {
        conjugate_rank_residual(w, wt, &l[0], &l[1])
    })?);
    Ok(report)
}

/// `T(g) = [image basis of P(g) | kernel basis of P(g)]` for `P = W(., e)`.
pub fn units_frame<C: MatrixCocycle + Clone + Send + Sync + 'static>(w: &C) -> ConjugationMap {
    let p = units_projector(w);
    let d = w.dim();
    ConjugationMap::new(w.group().clone(), d, move |g| {
        let pg = p.at(g)?;
        let mut cols: Vec<Vec<f64>> = pg.image_basis(DEFAULT_RANK_TOL).columns().to_vec();
        cols.extend(pg.kernel_basis(DEFAULT_RANK_TOL).columns().iter().cloned());
        Mat::from_columns(d, &cols)
    })
}

/// `sup_g max(||P(g)||, ||Id - P(g)||)` over the window.
pub fn projector_bound(p: &ProjectorMap, window: &[GroupElement]) -> Result<f64> {
    let mut m: f64 = 0.0;
    for g in window {
        let pg = p.at(g)?;
        m = m.max(pg.op_norm()).max((&Mat::identity(pg.dim()) - &pg).op_norm());
    }
    Ok(m)
}

/// Relative excess of `||T(g)||` over `d` and of `||T(g)^-1||` over `d M`, clamped at 0.
pub fn normalization_bound_residual(t: &ConjugationMap, g: &GroupElement, m: f64) -> Result<f64> {
    let d = t.dim() as f64;
    let (a, b) = (t.at(g)?.op_norm(), t.inverse_at(g)?.op_norm());
    Ok((a / d - 1.0).max(b / (d * m) - 1.0).max(0.0))
}

pub fn units_block_residual(w_hat: &PartialCotranslation, rank: usize, g: &GroupElement) -> Result<f64> {
    let e = w_hat.group().identity();
    Ok(w_hat.at(g, &e)?.dist(&Mat::block_projector(w_hat.dim(), rank, true)))
}

/// Output of [`normalize_units`].
#[derive(Clone, Debug)]
pub struct Normalization {
    pub w_hat: PartialCotranslation,
    pub t: ConjugationMap,
    pub rank: usize,
    /// `sup_g max(||P(g)||, ||Id - P(g)||)` on the window.
    pub m: f64,
    pub report: VerificationReport,
}

/// Conjugates `W` by orthonormal frames adapted to its units projector, so
/// that the new units projector is the constant block `diag(Id_r, 0)`.
pub fn normalize_units(w: &PartialCotranslation, window: &[GroupElement], tol_block: f64, tol_bounds: f64) -> Result<Normalization> {
    let rank = rank_of(w)?;
    let t = units_frame(w);
    let m = projector_bound(&units_projector(w), window)?;
    let w_hat = conjugate(w, &t)?;
    let mut report = VerificationReport::new();
    report.push(sweep(laws::UNITS_BLOCK, tol_block, window.iter().map(|g| vec![g.clone()]), |l| {
        units_block_residual(&w_hat, rank, &l[0])
    })?);
    let (sup_t, sup_inv) = t.sup_norms(window)?;
    let bounds = sweep(laws::NORMALIZATION_BOUNDS, tol_bounds, window.iter().map(|g| vec![g.clone()]), |l| {
        normalization_bound_residual(&t, &l[0], m)
    })?;
    report.push(bounds.with_detail("m", m).with_detail("sup_t", sup_t).with_detail("sup_t_inv", sup_inv).with_detail("rank", rank as f64));
    Ok(Normalization { w_hat, t, rank, m, report })
}

/// Output of [`complete`].
#[derive(Clone, Debug)]
pub struct Completion {
    pub v: PartialCotranslation,
    pub z_full: Cotranslation,
    pub normalization: Normalization,
    pub report: VerificationReport,
}

fn invertible_residual(s: &PartialCotranslation, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    Ok(match s.at(g, h)?.try_inverse(DEFAULT_INV_TOL) {
        Ok(_) => 0.0,
        Err(_) => 1.0,
    })
}

/// Builds the completing `V(g,h) = T(hg) diag(0, Id_{d-r}) T(g)^-1` and
/// verifies it without failing on a bad check; see [`complete`].
pub fn completion_candidate(w: &PartialCotranslation, window: &[GroupElement], tol: f64, seed: u64) -> Result<Completion> {
    let normalization = normalize_units(w, window, tol.max(1e-8), tol)?;
    let d = w.dim();
    let group = w.group().clone();
    let v = if normalization.rank == d {
        PartialCotranslation::constant(group.clone(), Mat::zeros(d))?
    } else {
        let block = PartialCotranslation::constant_block(group.clone(), d, normalization.rank, false);
        conjugate(&block, &normalization.t.inverse_map())?
    };
    let s = pairwise_sum(w, &v);
    let pairs = group.sample_pairs(window, DEFAULT_TRIPLE_CAP, seed);
    let locs = || pairs.iter().cloned().map(Vec::from);

    let mut report = normalization.report.clone();
    report.push(mutual_orthogonality_check(w, &v, window, tol, seed)?);
    report.push(law_check(&s, window, tol, seed)?);
    report.push(sweep(laws::COMPLETION_RANK, 0.0, locs(), |l| {
        Ok((d - s.at(&l[0], &l[1])?.rank_eps(DEFAULT_RANK_TOL)) as f64)
    })?);
    report.push(sweep(laws::COMPLETION_INVERTIBLE, 0.0, locs(), |l| invertible_residual(&s, &l[0], &l[1]))?);
    report.push(sweep(laws::COMPLETION_RECONSTRUCTION, tol, locs(), |l| reconstruction_residual(&s, w, &l[0], &l[1]))?);

    let z_full = s.to_cotranslation();
    Ok(Completion { v, z_full, normalization, report })
}

/// Completes `W` to a full cotranslation `W + V` with `W = (W + V) W(., e)`.
/// Fails with the first failing check.
pub fn complete(w: &PartialCotranslation, window: &[GroupElement], tol: f64, seed: u64) -> Result<Completion> {
    let c = completion_candidate(w, window, tol, seed)?;
    if let Some(bad) = c.report.failures().next() {
        return Err(construction_error(bad));
    }
    Ok(c)
}

/// Largest jump of `T` between consecutive elements of a path. Informational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    pub max_jump: f64,
    pub argmax: Option<(GroupElement, GroupElement)>,
    pub jumps: usize,
    /// Set when some jump exceeds `flag_threshold`.
    pub flagged: bool,
    pub flag_threshold: f64,
}

/// `max ||T(g_{i+1}) - T(g_i)||` along `path`.
pub fn continuity_probe_t(t: &ConjugationMap, path: &[GroupElement], flag_threshold: f64) -> Result<ContinuityProbe> {
    let mut probe = ContinuityProbe { max_jump: 0.0, argmax: None, jumps: 0, flagged: false, flag_threshold };
    for pair in path.windows(2) {
        let j = t.at(&pair[1])?.dist(&t.at(&pair[0])?);
        probe.jumps += 1;
        if probe.argmax.is_none() || j > probe.max_jump {
            probe.max_jump = j;
            probe.argmax = Some((pair[0].clone(), pair[1].clone()));
        }
    }
    probe.flagged = probe.max_jump > flag_threshold;
    Ok(probe)
}

/// Word length, max-norm or 0, used to split a window into an inner half.
fn element_size(g: &GroupElement) -> u64 {
    match g {
        GroupElement::Int(n) => n.unsigned_abs(),
        GroupElement::IntVec(v) => v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0),
        GroupElement::Word(w) => w.len() as u64,
        GroupElement::Finite(_) => 0,
    }
}

/// Output of [`kinematic_similarity_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub report: VerificationReport,
    pub sup_t: f64,
    pub sup_t_inv: f64,
    pub sup_t_inner: f64,
    pub sup_t_inv_inner: f64,
    /// False when the sup norms more than double from the inner half of the
    /// window to the full window, or exceed a declared bound.
    pub bounded: bool,
    pub continuity: Option<ContinuityProbe>,
}

pub fn similarity_residual<A, B>(w: &A, v: &B, t: &ConjugationMap, g: &GroupElement, h: &GroupElement) -> Result<f64>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    let hg = w.group().compose(h, g)?;
    let (th, vg, wg, tg) = (t.at(&hg)?, v.at(g, h)?, w.at(g, h)?, t.at(g)?);
    let scale = (th.op_norm() * vg.op_norm()).max(wg.op_norm() * tg.op_norm());
    Ok(normalized((&th * &vg).dist(&(&wg * &tg)), scale))
}

/// `T(hg) V(g,h) = W(g,h) T(g)` on the window, sup norms of `T` and `T^-1`,
/// and a growth-based boundedness flag.
pub fn kinematic_similarity_report<A, B>(
    w: &A,
    v: &B,
    t: &ConjugationMap,
    window: &[GroupElement],
    tol: f64,
    declared_bound: Option<f64>,
) -> Result<SimilarityReport>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    let pairs = w.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, 0);
    let entry = sweep(laws::SIMILARITY, tol, pairs.into_iter().map(Vec::from), |l| {
        similarity_residual(w, v, t, &l[0], &l[1])
    })?;
    let (sup_t, sup_t_inv) = t.sup_norms(window)?;
    let max_size = window.iter().map(element_size).max().unwrap_or(0);
    let inner: Vec<GroupElement> = window.iter().filter(|g| 2 * element_size(g) <= max_size).cloned().collect();
    let (sup_t_inner, sup_t_inv_inner) = t.sup_norms(&inner)?;
    let grows = |full: f64, part: f64| full > 2.0 * part.max(1.0);
    let mut bounded = !grows(sup_t, sup_t_inner) && !grows(sup_t_inv, sup_t_inv_inner);
    if let Some(b) = declared_bound {
        bounded &= sup_t <= b && sup_t_inv <= b;
    }
    let continuity = if w.group().is_discrete_line() {
        let mut path = window.to_vec();
        path.sort();
        Some(continuity_probe_t(t, &path, 1.0)?)
    } else {
        None
    };
    Ok(SimilarityReport {
        report: entry.into(),
        sup_t,
        sup_t_inv,
        sup_t_inner,
        sup_t_inv_inner,
        bounded,
        continuity,
    })
}

/// `||P(g) - Z(e,g) P(e) Z(g,g^-1)||`, normalized.
pub fn projector_reconstruction_residual(z: &Cotranslation, p: &ProjectorMap, g: &GroupElement) -> Result<f64> {
    let group = z.group();
    let e = group.identity();
    let (fwd, back) = (z.at(&e, g)?, z.at(g, &group.inverse(g)?)?);
    let pe = p.at(&e)?;
    let rebuilt = &(&fwd * &pe) * &back;
    Ok(normalized(p.at(g)?.dist(&rebuilt), fwd.op_norm() * pe.op_norm() * back.op_norm()))
}

/// For an invariant projector of a full cotranslation, every `P(g)` is
/// transported from `P(e)`, so its rank is constant.
pub fn projector_reconstruction_check(z: &Cotranslation, p: &ProjectorMap, window: &[GroupElement], tol: f64) -> Result<LawEntry> {
    sweep(laws::PROJECTOR_RECONSTRUCTION, tol, window.iter().map(|g| vec![g.clone()]), |l| {
        projector_reconstruction_residual(z, p, &l[0])
    })
}
