//! Full cotranslations `Z: G x G -> GL_d` with `Z(g,kh) = Z(hg,k) Z(g,h)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::eval::{ElementMap, MatrixCocycle, PairMap};
use crate::group::{GroupElement, GroupHandle, GroupKind, DEFAULT_TRIPLE_CAP};
use crate::matrix::{Mat, DEFAULT_INV_TOL, DEFAULT_RANK_TOL};
use crate::report::{laws, normalized, sweep, LawEntry, VerificationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CotranslationKind {
    FromMorphism,
    FromDifferenceSeq,
    FromGeneratorMaps,
    FromEvolution,
    Conjugated,
    ShiftedByMorphism,
    Explicit,
}

/// A lazily evaluated cotranslation.
#[derive(Clone, Debug)]
pub struct Cotranslation {
    map: PairMap,
    kind: CotranslationKind,
}

impl MatrixCocycle for Cotranslation {
    fn pair_map(&self) -> &PairMap {
        &self.map
    }
}

impl Cotranslation {
    /// Wraps an arbitrary evaluator. Nothing is verified.
    pub fn explicit<F>(group: GroupHandle, dim: usize, eval: F) -> Self
    where
        F: Fn(&GroupElement, &GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        Cotranslation { map: PairMap::new(group, dim, eval), kind: CotranslationKind::Explicit }
    }

    pub(crate) fn from_parts(map: PairMap, kind: CotranslationKind) -> Self {
        Cotranslation { map, kind }
    }

    pub fn kind(&self) -> CotranslationKind {
        self.kind
    }
}

/// A coefficient sequence `A: Z -> GL_d` for `x(n+1) = A(n) x(n)`.
#[derive(Clone)]
pub struct DifferenceSeq {
    dim: usize,
    f: Arc<dyn Fn(i64) -> Result<Mat> + Send + Sync>,
}

impl fmt::Debug for DifferenceSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferenceSeq").field("dim", &self.dim).finish()
    }
}

impl DifferenceSeq {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(i64) -> Result<Mat> + Send + Sync + 'static,
    {
        DifferenceSeq { dim, f: Arc::new(f) }
    }

    /// `A(n) = mats[n mod p]`.
    pub fn periodic(mats: Vec<Mat>) -> Result<Self> {
        let dim = mats.first().ok_or_else(|| Error::Spec("empty period".into()))?.dim();
        if let Some(bad) = mats.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, got: bad.dim() });
        }
        let p = mats.len() as i64;
        Ok(DifferenceSeq::new(dim, move |n| Ok(mats[n.rem_euclid(p) as usize].clone())))
    }

    pub fn constant(m: Mat) -> Self {
        DifferenceSeq::new(m.dim(), move |_| Ok(m.clone()))
    }

    /// `A(n) = diag(1 + 1/(1+n^2), 1)`: invertible, non-constant, tending to `Id`.
    pub fn bump() -> Self {
        DifferenceSeq::new(2, |n| {
            let n = n as f64;
            Ok(Mat::diag(&[1.0 + 1.0 / (1.0 + n * n), 1.0]))
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, n: i64) -> Result<Mat> {
        let m = (self.f)(n)?;
        if m.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: m.dim() });
        }
        Ok(m)
    }

    /// The sequence as the single generator map of `Z`.
    pub fn as_generator_map(&self) -> ElementMap {
        let seq = self.clone();
        ElementMap::new(GroupHandle::integers(), self.dim, move |g| {
            seq.at(g.as_int().expect("integer group element"))
        })
    }
}

/// `Z(n,m)` from the three-case product formula.
///
/// Factors are accumulated by left multiplication starting from the factor
/// applied first, which is also the order used by [`from_generator_maps`];
/// on `Z` the two constructors agree bit for bit.
fn difference_product(seq: &DifferenceSeq, n: i64, m: i64) -> Result<Mat> {
    if m == 0 {
        return Ok(Mat::identity(seq.dim));
    }
    if m > 0 {
        let mut acc = seq.at(n)?;
        for j in n + 1..n + m {
            acc = &seq.at(j)? * &acc;
        }
        Ok(acc)
    } else {
        let mut acc = seq.at(n - 1)?.try_inverse(DEFAULT_INV_TOL)?;
        for j in (n + m..n - 1).rev() {
            acc = &seq.at(j)?.try_inverse(DEFAULT_INV_TOL)? * &acc;
        }
        Ok(acc)
    }
}

pub fn from_difference_seq(seq: &DifferenceSeq) -> Cotranslation {
    let s = seq.clone();
    let map = PairMap::new(GroupHandle::integers(), seq.dim, move |g, h| {
        difference_product(&s, g.as_int().expect("checked"), h.as_int().expect("checked"))
    });
    Cotranslation::from_parts(map, CotranslationKind::FromDifferenceSeq)
}

/// Ordered product of generator maps along `letters`, starting at `base`.
///
/// The rightmost letter acts first. A positive letter `i` contributes
/// `A_i(b)` and moves `b` to `x_i b`; a negative letter `-i` moves `b` to
/// `x_i^{-1} b` and contributes `A_i(b)^{-1}` at the new point.
pub fn word_product(group: &GroupHandle, maps: &[ElementMap], letters: &[i32], base: &GroupElement) -> Result<Mat> {
    let dim = maps.first().map(|m| m.dim()).ok_or_else(|| Error::Spec("no generator maps".into()))?;
    let mut b = base.clone();
    let mut acc: Option<Mat> = None;
    for &l in letters.iter().rev() {
        let i = l.unsigned_abs() as usize;
        let a = maps
            .get(i.wrapping_sub(1))
            .ok_or_else(|| Error::Spec(format!("relation uses undefined generator {l}")))?;
        let factor = if l > 0 {
            let f = a.at(&b)?;
            b = group.compose(&group.generator(l)?, &b)?;
            f
        } else {
            b = group.compose(&group.generator(l)?, &b)?;
            a.at(&b)?.try_inverse(DEFAULT_INV_TOL)?
        };
        acc = Some(match acc {
            None => factor,
            Some(prev) => &factor * &prev,
        });
    }
    Ok(acc.unwrap_or_else(|| Mat::identity(dim)))
}

fn check_map_count(group: &GroupHandle, maps: &[ElementMap]) -> Result<()> {
    if maps.len() != group.generator_count() {
        return Err(Error::Spec(format!(
            "{} generator maps given for a group with {} generators",
            maps.len(),
            group.generator_count()
        )));
    }
    if let Some(m) = maps.iter().find(|m| m.dim() != maps[0].dim()) {
        return Err(Error::DimMismatch { expected: maps[0].dim(), got: m.dim() });
    }
    Ok(())
}

/// Residual `||prod_p - Id||` of one relation word at base point `eta`.
pub fn relation_residual(group: &GroupHandle, maps: &[ElementMap], relation: usize, eta: &GroupElement) -> Result<f64> {
    let word = group
        .relations()
        .get(relation)
        .ok_or_else(|| Error::Spec(format!("no relation with index {relation}")))?;
    let p = word_product(group, maps, word.letters(), eta)?;
    Ok(p.dist(&Mat::identity(p.dim())))
}

/// One entry per relation, law id `relations/<index>`.
pub fn check_preserves_relations(
    group: &GroupHandle,
    maps: &[ElementMap],
    window: &[GroupElement],
    tol: f64,
) -> Result<VerificationReport> {
    check_map_count(group, maps)?;
    let mut report = VerificationReport::new();
    if group.relations().is_empty() {
        report.push(LawEntry::new(laws::RELATIONS, 0.0, None, tol, 0));
    }
    for idx in 0..group.relations().len() {
        let law = format!("{}/{idx}", laws::RELATIONS);
        let entry = sweep(&law, tol, window.iter().map(|g| vec![g.clone()]), |loc| {
            relation_residual(group, maps, idx, &loc[0])
        })?;
        report.push(entry);
    }
    Ok(report)
}

/// A second word for `g`, different from `word_of(g)` where the group
/// offers one: reversed generator blocks on lattices, `x_1 (x_1^{-1} g)` on
/// finite groups.
fn alternate_word(group: &GroupHandle, g: &GroupElement) -> Result<Option<Vec<i32>>> {
    match (group.kind(), g) {
        (GroupKind::Lattice { .. }, GroupElement::IntVec(v)) => {
            let mut w = Vec::new();
            for (i, &n) in v.iter().enumerate().rev() {
                let l = if n >= 0 { i as i32 + 1 } else { -(i as i32 + 1) };
                w.extend(std::iter::repeat_n(l, n.unsigned_abs() as usize));
            }
            Ok(Some(w))
        }
        (GroupKind::Finite(_), _) if group.generator_count() > 0 => {
            let rest = group.compose(&group.generator(-1)?, g)?;
            let mut w = vec![1];
            w.extend(group.word_of(&rest)?);
            Ok(Some(w))
        }
        _ => Ok(None),
    }
}

pub fn well_defined_residual(group: &GroupHandle, maps: &[ElementMap], eta: &GroupElement, g: &GroupElement) -> Result<f64> {
    let Some(alt) = alternate_word(group, g)? else {
        return Ok(0.0);
    };
    let a = word_product(group, maps, &group.word_of(g)?, eta)?;
    let b = word_product(group, maps, &alt, eta)?;
    Ok(normalized(a.dist(&b), a.op_norm().max(b.op_norm())))
}

/// Builds `Z(eta, w)` from generator maps after checking every relation on
/// the window, and (for groups with a normal form) that two different
/// words for the same element give the same product.
pub fn from_generator_maps(
    group: &GroupHandle,
    maps: Vec<ElementMap>,
    window: &[GroupElement],
    tol: f64,
) -> Result<Cotranslation> {
    check_map_count(group, &maps)?;
    let rel = check_preserves_relations(group, &maps, window, tol)?;
    if let Some(bad) = rel.failures().next() {
        return Err(construction_error(bad));
    }
    if matches!(group.kind(), GroupKind::Lattice { .. } | GroupKind::Finite(_)) {
        let pairs = group.sample_pairs(window, DEFAULT_TRIPLE_CAP, 0);
        let wd = sweep(laws::WELL_DEFINED, tol, pairs.into_iter().map(Vec::from), |l| {
            well_defined_residual(group, &maps, &l[0], &l[1])
        })?;
        if !wd.pass {
            return Err(construction_error(&wd));
        }
    }
    let dim = maps[0].dim();
    let g2 = group.clone();
    let map = PairMap::new(group.clone(), dim, move |eta, h| word_product(&g2, &maps, &g2.word_of(h)?, eta));
    Ok(Cotranslation::from_parts(map, CotranslationKind::FromGeneratorMaps))
}

pub(crate) fn construction_error(e: &LawEntry) -> Error {
    Error::Construction {
        law: e.law.clone(),
        residual: e.max_residual,
        tolerance: e.tolerance,
        location: e.argmax.clone().unwrap_or_default(),
    }
}

pub fn morphism_residual(gamma: &ElementMap, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    let group = gamma.group();
    let (a, b) = (gamma.at(g)?, gamma.at(h)?);
    let gh = gamma.at(&group.compose(g, h)?)?;
    Ok(normalized(gh.dist(&(&a * &b)), a.op_norm() * b.op_norm()))
}

/// `gamma(e) = Id` (location `[e]`) and `gamma(gh) = gamma(g) gamma(h)` on window pairs.
pub fn morphism_check(gamma: &ElementMap, window: &[GroupElement], tol: f64, seed: u64) -> Result<LawEntry> {
    let group = gamma.group().clone();
    let e = group.identity();
    let unit = gamma.at(&e)?.dist(&Mat::identity(gamma.dim()));
    let mut entry = sweep(
        laws::MORPHISM,
        tol,
        group.sample_pairs(window, DEFAULT_TRIPLE_CAP, seed).into_iter().map(Vec::from),
        |l| morphism_residual(gamma, &l[0], &l[1]),
    )?;
    if unit > entry.max_residual {
        entry.max_residual = unit;
        entry.argmax = Some(vec![e.clone(), e]);
        entry.pass = unit <= tol;
        entry.verdict = if entry.pass { crate::report::Verdict::Pass } else { crate::report::Verdict::Fail };
    }
    Ok(entry)
}

/// `Z(g,h) = gamma(h)` for a verified group morphism `gamma`.
pub fn from_morphism(gamma: &ElementMap, window: &[GroupElement], tol: f64) -> Result<Cotranslation> {
    let check = morphism_check(gamma, window, tol, 0)?;
    if !check.pass {
        return Err(construction_error(&check));
    }
    let gm = gamma.clone();
    let map = PairMap::new(gamma.group().clone(), gamma.dim(), move |_, h| gm.at(h));
    Ok(Cotranslation::from_parts(map, CotranslationKind::FromMorphism))
}

/// `g -> Z(e, g)`.
pub fn extract_morphism<C: MatrixCocycle + Clone + Send + Sync + 'static>(z: &C) -> ElementMap {
    let zc = z.clone();
    let e = z.group().identity();
    ElementMap::new(z.group().clone(), z.dim(), move |g| zc.at(&e, g))
}

pub fn autonomy_residual<C: MatrixCocycle + ?Sized>(z: &C, g: &GroupElement, k: &GroupElement, h: &GroupElement) -> Result<f64> {
    let (a, b) = (z.at(g, h)?, z.at(k, h)?);
    Ok(normalized(a.dist(&b), a.op_norm().max(b.op_norm())))
}

/// Autonomy residual over sampled triples `(g, k, h)`.
pub fn is_autonomous<C: MatrixCocycle + ?Sized>(z: &C, window: &[GroupElement], tol: f64, seed: u64) -> Result<(bool, LawEntry)> {
    let triples = z.group().sample_triples(window, DEFAULT_TRIPLE_CAP, seed);
    let e = sweep(laws::AUTONOMY, tol, triples.into_iter().map(Vec::from), |l| {
        autonomy_residual(z, &l[0], &l[1], &l[2])
    })?;
    Ok((e.pass, e))
}

pub fn commutation_residual<C: MatrixCocycle + ?Sized>(
    z: &C,
    gamma: &ElementMap,
    g: &GroupElement,
    h: &GroupElement,
    k: &GroupElement,
) -> Result<f64> {
    let (zg, c) = (z.at(g, h)?, gamma.at(k)?);
    Ok(normalized((&c * &zg).dist(&(&zg * &c)), c.op_norm() * zg.op_norm()))
}

/// `W(g,h) = Z(g,h) gamma(h)` for a morphism commuting with every value of `Z`.
pub fn shift_by_morphism(
    z: &Cotranslation,
    gamma: &ElementMap,
    window: &[GroupElement],
    tol: f64,
    seed: u64,
) -> Result<Cotranslation> {
    if gamma.dim() != z.dim() {
        return Err(Error::DimMismatch { expected: z.dim(), got: gamma.dim() });
    }
    let triples = z.group().sample_triples(window, DEFAULT_TRIPLE_CAP, seed);
    let comm = sweep(laws::COMMUTATION, tol, triples.into_iter().map(Vec::from), |l| {
        commutation_residual(z, gamma, &l[0], &l[1], &l[2])
    })?;
    if !comm.pass {
        return Err(construction_error(&comm));
    }
    let (zc, gc) = (z.clone(), gamma.clone());
    let map = PairMap::new(z.group().clone(), z.dim(), move |g, h| Ok(&zc.at(g, h)? * &gc.at(h)?));
    let w = Cotranslation::from_parts(map, CotranslationKind::ShiftedByMorphism);
    let law = cocycle_check(&w, window, tol, seed)?;
    if !law.pass {
        return Err(construction_error(&law));
    }
    Ok(w)
}

/// `||Z(g,kh) - Z(hg,k) Z(g,h)|| / max(1, ||Z(hg,k)|| ||Z(g,h)||)`.
pub fn cocycle_residual<C: MatrixCocycle + ?Sized>(z: &C, g: &GroupElement, h: &GroupElement, k: &GroupElement) -> Result<f64> {
    let group = z.group();
    let hg = group.compose(h, g)?;
    let kh = group.compose(k, h)?;
    let (outer, inner) = (z.at(&hg, k)?, z.at(g, h)?);
    let lhs = z.at(g, &kh)?;
    Ok(normalized(lhs.dist(&(&outer * &inner)), outer.op_norm() * inner.op_norm()))
}

/// Cocycle law over window triples `(g, h, k)`: exhaustive up to the triple
/// cap, seeded beyond it.
pub fn cocycle_check<C: MatrixCocycle + ?Sized>(z: &C, window: &[GroupElement], tol: f64, seed: u64) -> Result<LawEntry> {
    cocycle_check_as(laws::COCYCLE, z, window, tol, seed)
}

pub(crate) fn cocycle_check_as<C: MatrixCocycle + ?Sized>(
    law: &str,
    z: &C,
    window: &[GroupElement],
    tol: f64,
    seed: u64,
) -> Result<LawEntry> {
    let triples = z.group().sample_triples(window, DEFAULT_TRIPLE_CAP, seed);
    sweep(law, tol, triples.into_iter().map(Vec::from), |l| cocycle_residual(z, &l[0], &l[1], &l[2]))
}

pub fn unit_residual<C: MatrixCocycle + ?Sized>(z: &C, g: &GroupElement) -> Result<f64> {
    Ok(z.at(g, &z.group().identity())?.dist(&Mat::identity(z.dim())))
}

/// Two-sided: `Z(hg,h^-1) Z(g,h)` and `Z(g,h) Z(hg,h^-1)` against `Id`,
/// normalized by the product of norms. Avoids forming an explicit inverse.
pub fn involution_residual<C: MatrixCocycle + ?Sized>(z: &C, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    let group = z.group();
    let hg = group.compose(h, g)?;
    let back = z.at(&hg, &group.inverse(h)?)?;
    let fwd = z.at(g, h)?;
    let id = Mat::identity(z.dim());
    let r = (&back * &fwd).dist(&id).max((&fwd * &back).dist(&id));
    Ok(normalized(r, back.op_norm() * fwd.op_norm()))
}

/// `d - rank_eps(Z(g,h))`.
pub fn rank_deficiency<C: MatrixCocycle + ?Sized>(z: &C, g: &GroupElement, h: &GroupElement) -> Result<f64> {
    Ok((z.dim() - z.at(g, h)?.rank_eps(DEFAULT_RANK_TOL)) as f64)
}

/// Unit law and involution law on the window. A small involution residual
/// already exhibits a two-sided inverse; see [`invertibility_check`] for
/// the rank test.
pub fn cot_inverse_law_check<C: MatrixCocycle + ?Sized>(z: &C, window: &[GroupElement], tol: f64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    report.push(sweep(laws::UNIT, tol, window.iter().map(|g| vec![g.clone()]), |l| unit_residual(z, &l[0]))?);
    let pairs = z.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, 0);
    report.push(sweep(laws::INVOLUTION, tol, pairs.into_iter().map(Vec::from), |l| {
        involution_residual(z, &l[0], &l[1])
    })?);
    Ok(report)
}

/// Relative numeric rank of every `Z(g,h)` on window pairs. Long products of
/// invertible factors can fall below the relative threshold, so this is
/// meaningful for explicit evaluators and short windows.
pub fn invertibility_check<C: MatrixCocycle + ?Sized>(z: &C, window: &[GroupElement]) -> Result<LawEntry> {
    let pairs = z.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, 0);
    sweep(laws::INVERTIBLE, 0.0, pairs.into_iter().map(Vec::from), |l| rank_deficiency(z, &l[0], &l[1]))
}

/// Largest `||A(g,h) - B(g,h)||` over window pairs; 0 means bitwise-equal up to signed zeros.
pub fn max_deviation<A, B>(law: &str, a: &A, b: &B, window: &[GroupElement], tol: f64) -> Result<LawEntry>
where
    A: MatrixCocycle + ?Sized,
    B: MatrixCocycle + ?Sized,
{
    let pairs = a.group().sample_pairs(window, DEFAULT_TRIPLE_CAP, 0);
    sweep(law, tol, pairs.into_iter().map(Vec::from), |l| {
        let (x, y) = (a.at(&l[0], &l[1])?, b.at(&l[0], &l[1])?);
        Ok(x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
    })
}

/// Morphism families used by fixtures and the CLI.
pub mod morphisms {
    use super::*;

    fn pow(b: f64, n: i64) -> f64 {
        match i32::try_from(n) {
            Ok(n) => b.powi(n),
            Err(_) => b.powf(n as f64),
        }
    }

    /// `Z`: `n -> diag(b_i^n)` from `bases[0]`; `Z^k`: `v -> diag(prod_j bases[j][i]^{v_j})`.
    pub fn diag_pow(group: &GroupHandle, bases: Vec<Vec<f64>>) -> Result<ElementMap> {
        let dim = bases.first().map(|b| b.len()).ok_or_else(|| Error::Spec("diag_pow needs bases".into()))?;
        if dim == 0 || bases.iter().any(|b| b.len() != dim) {
            return Err(Error::Spec("diag_pow bases must be non-empty and of equal length".into()));
        }
        if bases.iter().flatten().any(|&b| b == 0.0 || !b.is_finite()) {
            return Err(Error::Spec("diag_pow bases must be finite and non-zero".into()));
        }
        let needed = match group.kind() {
            GroupKind::Integers | GroupKind::RealGrid { .. } => 1,
            GroupKind::Lattice { rank } => *rank,
            _ => return Err(Error::Spec("diag_pow is defined on Z and Z^k only".into())),
        };
        if bases.len() != needed {
            return Err(Error::Spec(format!("diag_pow needs {needed} base vectors, got {}", bases.len())));
        }
        Ok(ElementMap::new(group.clone(), dim, move |g| {
            let exps: Vec<i64> = match g {
                GroupElement::Int(n) => vec![*n],
                GroupElement::IntVec(v) => v.clone(),
                _ => unreachable!("checked by the group"),
            };
            let diag: Vec<f64> = (0..dim)
                .map(|i| exps.iter().zip(&bases).map(|(&n, b)| pow(b[i], n)).product())
                .collect();
            Ok(Mat::diag(&diag))
        }))
    }

    /// `n -> M^n` on `Z` by repeated squaring; negative powers use `M^-1`.
    pub fn matrix_pow(m: Mat) -> Result<ElementMap> {
        let inv = m.try_inverse(DEFAULT_INV_TOL)?;
        let dim = m.dim();
        Ok(ElementMap::new(GroupHandle::integers(), dim, move |g| {
            let n = g.as_int().expect("integer");
            let mut base = if n >= 0 { m.clone() } else { inv.clone() };
            let mut e = n.unsigned_abs();
            let mut acc = Mat::identity(dim);
            while e > 0 {
                if e & 1 == 1 {
                    acc = &acc * &base;
                }
                base = &base * &base;
                e >>= 1;
            }
            Ok(acc)
        }))
    }

    /// `t -> exp(-lambda t) Id`, with `t = i * step` on a real grid and `t = n` on `Z`.
    pub fn scalar_exp(group: &GroupHandle, dim: usize, lambda: f64) -> Result<ElementMap> {
        let step = match group.kind() {
            GroupKind::Integers => 1.0,
            GroupKind::RealGrid { step } => *step,
            _ => return Err(Error::Spec("scalar_exp is defined on Z and real grids".into())),
        };
        Ok(ElementMap::new(group.clone(), dim, move |g| {
            let t = g.as_int().expect("integer") as f64 * step;
            Ok(Mat::identity(dim).scale((-lambda * t).exp()))
        }))
    }
}

/// A linear hull: the family `g -> (h -> psi_g(h))` with `sigma(h, psi_g) = psi_{hg}`.
#[derive(Clone, Debug)]
pub struct Hull {
    map: PairMap,
}

impl Hull {
    pub fn new<F>(group: GroupHandle, dim: usize, psi: F) -> Self
    where
        F: Fn(&GroupElement, &GroupElement) -> Result<Mat> + Send + Sync + 'static,
    {
        Hull { map: PairMap::new(group, dim, psi) }
    }

    pub fn group(&self) -> &GroupHandle {
        self.map.group()
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// `psi_g(h)`.
    pub fn psi(&self, g: &GroupElement, h: &GroupElement) -> Result<Mat> {
        self.map.at(g, h)
    }

    /// Index of `sigma(h, psi_g)`, namely `hg`.
    pub fn act(&self, h: &GroupElement, g: &GroupElement) -> Result<GroupElement> {
        self.group().compose(h, g)
    }

    /// `psi_m(n) xi = x(n+m, m, xi)` for `x(k+1) = A(k) x(k)`, propagated
    /// column by column.
    pub fn solution_family(seq: &DifferenceSeq) -> Hull {
        let s = seq.clone();
        let d = seq.dim();
        Hull::new(GroupHandle::integers(), d, move |g, h| {
            let (m, n) = (g.as_int().expect("int"), h.as_int().expect("int"));
            let mut cols = Vec::with_capacity(d);
            for j in 0..d {
                let mut x = vec![0.0; d];
                x[j] = 1.0;
                if n >= 0 {
                    for t in m..m + n {
                        x = s.at(t)?.mul_vec(&x);
                    }
                } else {
                    for t in (m + n..m).rev() {
                        x = s.at(t)?.try_inverse(DEFAULT_INV_TOL)?.mul_vec(&x);
                    }
                }
                cols.push(x);
            }
            Mat::from_columns(d, &cols)
        })
    }

    /// Copy with the slice `psi_{g0}` replaced by the identity.
    pub fn with_identity_slice(&self, g0: GroupElement) -> Hull {
        let inner = self.clone();
        let d = self.dim();
        Hull::new(self.group().clone(), d, move |g, h| {
            if *g == g0 {
                Ok(Mat::identity(d))
            } else {
                inner.psi(g, h)
            }
        })
    }
}

pub fn to_hull<C: MatrixCocycle + Clone + Send + Sync + 'static>(z: &C) -> Hull {
    let zc = z.clone();
    Hull::new(z.group().clone(), z.dim(), move |g, h| zc.at(g, h))
}

pub fn from_hull(hull: &Hull) -> Cotranslation {
    let hc = hull.clone();
    Cotranslation::explicit(hull.group().clone(), hull.dim(), move |g, h| hc.psi(g, h))
}

pub fn hull_compatibility_residual(hull: &Hull, g: &GroupElement, h: &GroupElement, k: &GroupElement) -> Result<f64> {
    let hg = hull.act(h, g)?;
    let kh = hull.group().compose(k, h)?;
    let (outer, inner) = (hull.psi(&hg, k)?, hull.psi(g, h)?);
    let rhs = hull.psi(g, &kh)?;
    Ok(normalized((&outer * &inner).dist(&rhs), outer.op_norm() * inner.op_norm()))
}

pub fn hull_admissibility_residual(hull: &Hull, g: &GroupElement) -> Result<f64> {
    Ok(hull.psi(g, &hull.group().identity())?.dist(&Mat::identity(hull.dim())))
}

/// Admissibility `psi_g(e) = Id` and the compatibility axiom
/// `psi_{hg}(k) psi_g(h) = psi_g(kh)` on window triples.
pub fn hull_axiom_check(hull: &Hull, window: &[GroupElement], tol: f64, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    report.push(sweep(laws::HULL_ADMISSIBILITY, tol, window.iter().map(|g| vec![g.clone()]), |l| {
        hull_admissibility_residual(hull, &l[0])
    })?);
    let triples = hull.group().sample_triples(window, DEFAULT_TRIPLE_CAP, seed);
    report.push(sweep(laws::HULL_COMPATIBILITY, tol, triples.into_iter().map(Vec::from), |l| {
        hull_compatibility_residual(hull, &l[0], &l[1], &l[2])
    })?);
    Ok(report)
}

/// `from_hull(to_hull(Z))` against `Z`, entrywise, on window pairs.
pub fn hull_roundtrip_check(z: &Cotranslation, window: &[GroupElement]) -> Result<LawEntry> {
    let back = from_hull(&to_hull(z));
    max_deviation(laws::HULL_ROUNDTRIP, &back, z, window, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(r: i64) -> Vec<GroupElement> {
        (-r..=r).map(GroupElement::Int).collect()
    }

    fn m(rows: &[[f64; 2]]) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn difference_seq_small_cases() {
        let seq = DifferenceSeq::periodic(vec![m(&[[1.0, 1.0], [0.0, 1.0]]), m(&[[1.0, 0.0], [1.0, 1.0]])]).unwrap();
        let z = from_difference_seq(&seq);
        let (zero, one, two) = (GroupElement::Int(0), GroupElement::Int(1), GroupElement::Int(2));
        assert_eq!(z.at(&zero, &two).unwrap(), m(&[[1.0, 1.0], [1.0, 2.0]]));
        assert_eq!(z.at(&one, &zero).unwrap(), Mat::identity(2));
        assert_eq!(z.at(&one, &one).unwrap(), seq.at(1).unwrap());
        let w = ints(4);
        assert!(cocycle_check(&z, &w, 1e-10, 0).unwrap().pass);
        assert!(cot_inverse_law_check(&z, &w, 1e-10).unwrap().pass());
    }

    #[test]
    fn relations_on_z2() {
        let g = GroupHandle::lattice(2).unwrap();
        let w = g.sample_window(2, 0);
        let diag = |a: f64, b: f64| ElementMap::constant(g.clone(), Mat::diag(&[a, b]));
        let ok = check_preserves_relations(&g, &[diag(2.0, 1.0), diag(1.0, 3.0)], &w, 1e-12).unwrap();
        assert!(ok.pass());
        assert_eq!(ok.entries[0].max_residual, 0.0);
        let a1 = ElementMap::constant(g.clone(), m(&[[1.0, 1.0], [0.0, 1.0]]));
        let a2 = ElementMap::constant(g.clone(), m(&[[1.0, 0.0], [1.0, 1.0]]));
        let bad = check_preserves_relations(&g, &[a1.clone(), a2.clone()], &w, 1e-10).unwrap();
        assert!(!bad.pass());
        assert!(bad.entries[0].max_residual > 0.5);
        assert!(from_generator_maps(&g, vec![a1, a2], &w, 1e-10).is_err());

        let z = from_generator_maps(&g, vec![diag(2.0, 1.0), diag(1.0, 3.0)], &w, 1e-12).unwrap();
        let v = z.at(&GroupElement::IntVec(vec![0, 0]), &GroupElement::IntVec(vec![1, 1])).unwrap();
        assert_eq!(v, Mat::diag(&[2.0, 3.0]));
    }

    #[test]
    fn generator_maps_match_difference_seq_exactly() {
        let seq = DifferenceSeq::new(2, |n| {
            let x = n as f64;
            Mat::from_rows(&[[1.0 + 0.1 * x.sin(), 0.3], [0.2 * x.cos(), 0.9]])
        });
        let z = from_difference_seq(&seq);
        let g = GroupHandle::integers();
        let w = ints(6);
        let y = from_generator_maps(&g, vec![seq.as_generator_map()], &w, 1e-10).unwrap();
        let dev = max_deviation("eq", &z, &y, &w, 0.0).unwrap();
        assert_eq!(dev.max_residual, 0.0);
    }

    #[test]
    fn morphisms_and_autonomy() {
        let g = GroupHandle::integers();
        let w = ints(5);
        let gamma = morphisms::diag_pow(&g, vec![vec![2.0, 3.0]]).unwrap();
        let z = from_morphism(&gamma, &w, 1e-12).unwrap();
        assert_eq!(z.at(&GroupElement::Int(4), &GroupElement::Int(3)).unwrap(), Mat::diag(&[8.0, 27.0]));
        assert!(is_autonomous(&z, &w, 1e-12, 0).unwrap().0);
        assert!(cocycle_check(&z, &w, 1e-12, 0).unwrap().pass);

        let bump = from_difference_seq(&DifferenceSeq::bump());
        let (auto, entry) = is_autonomous(&bump, &w, 1e-10, 0).unwrap();
        assert!(!auto);
        assert!(entry.max_residual > 0.1);

        let not_morphism = ElementMap::new(g.clone(), 1, |x| Mat::new(1, vec![1.0 + x.as_int().unwrap() as f64]));
        assert!(matches!(from_morphism(&not_morphism, &w, 1e-10), Err(Error::Construction { .. })));
    }

    #[test]
    fn constant_sequence_is_power_morphism() {
        let a0 = m(&[[1.0, 0.5], [-0.25, 1.0]]);
        let z = from_difference_seq(&DifferenceSeq::constant(a0.clone()));
        let w = ints(4);
        assert!(is_autonomous(&z, &w, 1e-12, 0).unwrap().0);
        let gamma = extract_morphism(&z);
        let pow = morphisms::matrix_pow(a0).unwrap();
        for g in &w {
            let (a, b) = (gamma.at(g).unwrap(), pow.at(g).unwrap());
            assert!(a.dist(&b) <= 1e-12 * a.op_norm().max(1.0));
        }
    }

    #[test]
    fn shift_by_scalar_morphism() {
        let seq = DifferenceSeq::periodic(vec![m(&[[1.0, 1.0], [0.0, 1.0]]), m(&[[2.0, 0.0], [1.0, 1.0]])]).unwrap();
        let z = from_difference_seq(&seq);
        let g = GroupHandle::integers();
        let w = ints(4);
        let gamma = ElementMap::new(g.clone(), 2, |x| Ok(Mat::identity(2).scale(2f64.powi(-(x.as_int().unwrap() as i32)))));
        let shifted = shift_by_morphism(&z, &gamma, &w, 1e-12, 0).unwrap();
        for (a, b) in [(1, 2), (-2, 3), (0, -3)] {
            let (a, b) = (GroupElement::Int(a), GroupElement::Int(b));
            let expect = z.at(&a, &b).unwrap().scale(2f64.powi(-(b.as_int().unwrap() as i32)));
            assert_eq!(shifted.at(&a, &b).unwrap(), expect);
        }
        let noncommuting = ElementMap::constant(g, m(&[[0.0, 1.0], [1.0, 0.0]]));
        assert!(shift_by_morphism(&z, &noncommuting, &w, 1e-10, 0).is_err());
    }

    #[test]
    fn corrupted_entry_is_located() {
        let g = GroupHandle::integers();
        let z = Cotranslation::explicit(g, 1, |a, b| {
            let v = if (a.as_int(), b.as_int()) == (Some(2), Some(1)) { 5.0 } else { 1.0 };
            Mat::new(1, vec![v])
        });
        let r = cot_inverse_law_check(&z, &ints(3), 1e-10).unwrap();
        let inv = r.entry(laws::INVOLUTION).unwrap();
        assert!(!inv.pass);
        let loc = inv.argmax.clone().unwrap();
        assert!(loc.contains(&GroupElement::Int(2)) || loc.contains(&GroupElement::Int(3)));
    }

    #[test]
    fn hull_round_trip_and_solution_family() {
        let seq = DifferenceSeq::periodic(vec![m(&[[1.0, 1.0], [0.0, 1.0]]), m(&[[0.5, 0.0], [1.0, 2.0]])]).unwrap();
        let z = from_difference_seq(&seq);
        let w = ints(6);
        assert_eq!(hull_roundtrip_check(&z, &w).unwrap().max_residual, 0.0);

        let fam = Hull::solution_family(&seq);
        let rep = hull_axiom_check(&fam, &ints(4), 1e-10, 0).unwrap();
        assert!(rep.pass(), "{rep:?}");
        let corrupted = fam.with_identity_slice(GroupElement::Int(1));
        assert!(!hull_axiom_check(&corrupted, &ints(4), 1e-10, 0).unwrap().pass());
    }

    #[test]
    fn finite_group_generator_maps() {
        use crate::group::FiniteTable;
        let c3 = GroupHandle::finite(FiniteTable::new(
            vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
            Some(vec![1]),
        ).unwrap())
        .with_relations(&[vec![1, 1, 1]])
        .unwrap();
        // rotation by 120 degrees satisfies x^3 = e
        let (c, s) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
        let r = ElementMap::constant(c3.clone(), m(&[[c, -s], [s, c]]));
        let w = c3.sample_window(1, 0);
        let z = from_generator_maps(&c3, vec![r], &w, 1e-12).unwrap();
        assert!(cocycle_check(&z, &w, 1e-12, 0).unwrap().pass);
    }
}
