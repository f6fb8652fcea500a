//! Spec to library objects.

use std::collections::HashMap;
use std::sync::Arc;

use cotrans_core::cotranslation::{self, morphisms};
use cotrans_core::evolution::{cotranslation_of, integrate};
use cotrans_core::matrix::DEFAULT_MAX_DIM;
use cotrans_core::partial::{self, conjugate, conjugate_cotranslation};
use cotrans_core::random;
use cotrans_core::{
    CoeffFn, ConjugationMap, Cotranslation, DifferenceSeq, ElementMap, EvolutionGrid, FiniteTable, GroupElement,
    GroupHandle, GroupKind, Hull, Mat, MatrixCocycle, PartialCotranslation, ProjectorMap,
};

use crate::error::CliError;
use crate::spec::{
    CoeffSpec, ConjugationSpec, CotSpec, ElementSpec, GeneratorMapSpec, GroupSpec, HullSpec, MorphismSpec, ObjectKind,
    OdeSpec, PartialSpec, ProblemSpec, ProjectorSpec, RandomFamily, TableEntry,
};

type R<T> = Result<T, CliError>;
type PairTable = HashMap<(GroupElement, GroupElement), Mat>;

pub const MAX_DIM_ENV: &str = "COTRANS_MAX_DIM";

/// Dimension cap from `COTRANS_MAX_DIM`, falling back to the library default.
pub fn max_dim() -> R<usize> {
    match std::env::var(MAX_DIM_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .ok()
            .filter(|&d: &usize| d >= 1)
            .ok_or_else(|| CliError::spec(format!("{MAX_DIM_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(DEFAULT_MAX_DIM),
    }
}

fn check_dim(d: usize, cap: usize) -> R<()> {
    if d == 0 || d > cap {
        return Err(CliError::spec(format!("dimension {d} outside 1..={cap}")));
    }
    Ok(())
}

/// A cotranslation together with the data needed to re-check it.
#[derive(Clone, Debug)]
pub struct BuiltCot {
    pub z: Cotranslation,
    /// Generator maps, when the cotranslation was built from them.
    pub generator_maps: Option<Vec<ElementMap>>,
    /// The morphism of an autonomous construction.
    pub morphism: Option<ElementMap>,
    /// Grid and coefficient of an integrated evolution.
    pub ode: Option<(EvolutionGrid, CoeffFn)>,
    pub explicit: bool,
}

#[derive(Clone, Debug)]
pub enum Object {
    Cot(BuiltCot),
    Partial {
        w: PartialCotranslation,
        /// Full cotranslation under a restriction, used by `conjugated_constant` projectors.
        base: Option<Cotranslation>,
    },
    Hull(Hull),
    Ode { grid: EvolutionGrid, coeff: CoeffFn },
}

#[derive(Clone, Debug)]
pub struct Built {
    pub group: GroupHandle,
    pub window: Vec<GroupElement>,
    pub object: Object,
    pub projector: Option<ProjectorMap>,
}

struct Ctx<'a> {
    spec: &'a ProblemSpec,
    group: GroupHandle,
    window: Vec<GroupElement>,
    cap: usize,
}

pub fn build_group(g: &GroupSpec) -> R<GroupHandle> {
    Ok(match g {
        GroupSpec::Z => GroupHandle::integers(),
        GroupSpec::Zk { k } => GroupHandle::lattice(*k)?,
        GroupSpec::Free { n } => GroupHandle::free(*n)?,
        GroupSpec::Finite { table, generators, relations } => {
            let t = FiniteTable::new(table.clone(), generators.clone())?;
            let g = GroupHandle::finite(t);
            if relations.is_empty() {
                g
            } else {
                g.with_relations(relations)?
            }
        }
        GroupSpec::Grid { step } => GroupHandle::real_grid(*step)?,
    })
}

pub fn build_coeff(c: &CoeffSpec) -> R<CoeffFn> {
    let a = match c {
        CoeffSpec::Constant { matrix } => CoeffFn::Constant(matrix.clone()),
        CoeffSpec::Rotation { omega } => CoeffFn::Rotation { omega: *omega },
        CoeffSpec::Table { step, mats, interp } => CoeffFn::PeriodicTable { step: *step, mats: mats.clone(), interp: *interp },
        CoeffSpec::DiagPoly { coeffs } => CoeffFn::DiagonalPoly { coeffs: coeffs.clone() },
        CoeffSpec::Sinusoidal { base, amplitude, omega } => {
            CoeffFn::Sinusoidal { base: base.clone(), amplitude: amplitude.clone(), omega: *omega }
        }
        CoeffSpec::Shifted { base, lambda } => CoeffFn::ShiftedByScalar { base: Box::new(build_coeff(base)?), lambda: *lambda },
    };
    a.validate()?;
    Ok(a)
}

pub fn build_ode(o: &OdeSpec, cap: usize) -> R<(EvolutionGrid, CoeffFn)> {
    let a = build_coeff(&o.coeff)?;
    check_dim(a.dim(), cap)?;
    Ok((integrate(&a, o.t0, o.t1, o.h)?, a))
}

impl Ctx<'_> {
    fn require_integers(&self, what: &str) -> R<()> {
        if matches!(self.group.kind(), GroupKind::Integers) {
            Ok(())
        } else {
            Err(CliError::spec(format!("{what} is defined on the group Z only (got {})", self.group.kind_name())))
        }
    }

    fn element(&self, e: &ElementSpec) -> R<GroupElement> {
        e.resolve(&self.group)
    }

    fn mats(&self, mats: &[Mat]) -> R<()> {
        let d = mats.first().ok_or_else(|| CliError::spec("empty matrix list"))?.dim();
        check_dim(d, self.cap)?;
        if let Some(bad) = mats.iter().find(|m| m.dim() != d) {
            return Err(cotrans_core::Error::DimMismatch { expected: d, got: bad.dim() }.into());
        }
        Ok(())
    }

    fn diag_pow(&self, base: &Option<Vec<f64>>, bases: &Option<Vec<Vec<f64>>>) -> R<ElementMap> {
        let bases = match (base, bases) {
            (Some(b), None) => vec![b.clone()],
            (None, Some(bs)) => bs.clone(),
            _ => return Err(CliError::spec("diag_pow takes exactly one of `base`, `bases`")),
        };
        let m = morphisms::diag_pow(&self.group, bases)?;
        check_dim(m.dim(), self.cap)?;
        Ok(m)
    }

    fn morphism(&self, m: &MorphismSpec) -> R<ElementMap> {
        match m {
            MorphismSpec::DiagPow { base, bases } => self.diag_pow(base, bases),
            MorphismSpec::MatrixPow { matrix } => {
                self.require_integers("matrix_pow")?;
                check_dim(matrix.dim(), self.cap)?;
                Ok(morphisms::matrix_pow(matrix.clone())?)
            }
            MorphismSpec::ScalarExp { dim, lambda } => {
                check_dim(*dim, self.cap)?;
                Ok(morphisms::scalar_exp(&self.group, *dim, *lambda)?)
            }
        }
    }

    fn table(&self, entries: &[TableEntry]) -> R<(usize, Arc<PairTable>)> {
        let d = entries.first().ok_or_else(|| CliError::spec("explicit_table: no entries"))?.value.dim();
        check_dim(d, self.cap)?;
        let mut map = HashMap::new();
        for e in entries {
            if e.value.dim() != d {
                return Err(cotrans_core::Error::DimMismatch { expected: d, got: e.value.dim() }.into());
            }
            if map.insert((self.element(&e.g)?, self.element(&e.h)?), e.value.clone()).is_some() {
                return Err(CliError::spec("explicit_table: duplicate (g, h)"));
            }
        }
        Ok((d, Arc::new(map)))
    }

    fn conjugation(&self, c: &ConjugationSpec) -> R<ConjugationMap> {
        Ok(match c {
            ConjugationSpec::Constant { matrix } => {
                check_dim(matrix.dim(), self.cap)?;
                ConjugationMap::constant(self.group.clone(), matrix.clone())?
            }
            ConjugationSpec::Shear => {
                self.require_integers("shear")?;
                ConjugationMap::shear()
            }
            ConjugationSpec::DiagPow { base, bases } => ConjugationMap::from_map(self.diag_pow(base, bases)?),
        })
    }

    fn cot(&self, c: &CotSpec) -> R<BuiltCot> {
        let plain = |z| BuiltCot { z, generator_maps: None, morphism: None, ode: None, explicit: false };
        Ok(match c {
            CotSpec::DifferenceSeq { period } => {
                self.require_integers("difference_seq")?;
                self.mats(period)?;
                plain(cotranslation::from_difference_seq(&DifferenceSeq::periodic(period.clone())?))
            }
            CotSpec::RandomSeq { dim, seed, family } => {
                self.require_integers("random_seq")?;
                check_dim(*dim, self.cap)?;
                let seq = match family {
                    RandomFamily::Uniform => random::uniform_seq(*seed, *dim),
                    RandomFamily::Spectral => random::spectral_seq(*seed, *dim),
                };
                plain(cotranslation::from_difference_seq(&seq))
            }
            CotSpec::Morphism(m) => {
                let gamma = self.morphism(m)?;
                let z = cotranslation::from_morphism(&gamma, &self.window, self.spec.tolerance(cotrans_core::laws::MORPHISM))?;
                BuiltCot { morphism: Some(gamma), ..plain(z) }
            }
            CotSpec::GeneratorMaps { maps } => {
                let built = maps.iter().map(|m| self.generator_map(m)).collect::<R<Vec<_>>>()?;
                let tol = self.spec.tolerance(cotrans_core::laws::RELATIONS);
                let z = cotranslation::from_generator_maps(&self.group, built.clone(), &self.window, tol)?;
                BuiltCot { generator_maps: Some(built), ..plain(z) }
            }
            CotSpec::ExplicitTable { entries } => {
                let (d, table) = self.table(entries)?;
                let z = Cotranslation::explicit(self.group.clone(), d, move |g, h| {
                    table
                        .get(&(g.clone(), h.clone()))
                        .cloned()
                        .ok_or_else(|| cotrans_core::Error::Spec(format!("explicit_table has no entry for ({g}, {h})")))
                });
                BuiltCot { explicit: true, ..plain(z) }
            }
            CotSpec::Evolution { ode } => {
                let step = self.group.step().filter(|_| !matches!(self.group.kind(), GroupKind::Integers));
                if step.is_none_or(|s| (s - ode.h).abs() > 1e-12 * ode.h) {
                    return Err(CliError::spec("evolution cotranslations need group {\"kind\":\"grid\"} with step equal to `ode.h`"));
                }
                let (grid, a) = build_ode(ode, self.cap)?;
                BuiltCot { ode: Some((grid.clone(), a)), ..plain(cotranslation_of(&grid)) }
            }
            CotSpec::Shifted { base, morphism } => {
                let b = self.cot(base)?;
                let gamma = self.morphism(morphism)?;
                let tol = self.spec.tolerance(cotrans_core::laws::COMMUTATION);
                plain(cotranslation::shift_by_morphism(&b.z, &gamma, &self.window, tol, self.spec.seed)?)
            }
            CotSpec::Conjugated { base, conjugation } => {
                let b = self.cot(base)?;
                plain(conjugate_cotranslation(&b.z, &self.conjugation(conjugation)?)?)
            }
            CotSpec::FromHull { hull } => plain(cotranslation::from_hull(&self.hull(hull)?)),
        })
    }

    fn generator_map(&self, m: &GeneratorMapSpec) -> R<ElementMap> {
        Ok(match m {
            GeneratorMapSpec::Constant { matrix } => {
                check_dim(matrix.dim(), self.cap)?;
                ElementMap::constant(self.group.clone(), matrix.clone())
            }
            GeneratorMapSpec::Periodic { mats } => {
                self.require_integers("periodic generator maps")?;
                self.mats(mats)?;
                DifferenceSeq::periodic(mats.clone())?.as_generator_map()
            }
        })
    }

    fn projector(&self, p: &ProjectorSpec, base: Option<&Cotranslation>) -> R<ProjectorMap> {
        Ok(match p {
            ProjectorSpec::Constant { p } => {
                check_dim(p.dim(), self.cap)?;
                ProjectorMap::constant(self.group.clone(), p.clone())
            }
            ProjectorSpec::ConjugatedConstant { p0 } => {
                let z = base.ok_or_else(|| CliError::spec("conjugated_constant needs a full cotranslation to transport along"))?;
                ProjectorMap::conjugated_constant(z, p0.clone())?
            }
            ProjectorSpec::Alternating { even, odd } => {
                self.require_integers("alternating projectors")?;
                ProjectorMap::alternating(even.clone(), odd.clone())?
            }
        })
    }

    fn partial(&self, p: &PartialSpec) -> R<(PartialCotranslation, Option<Cotranslation>)> {
        Ok(match p {
            PartialSpec::Restrict { base, projector } => {
                let b = self.cot(base)?;
                let proj = self.projector(projector, Some(&b.z))?;
                let tol = self.spec.tolerance(cotrans_core::laws::PROJECTOR_INVARIANCE);
                (partial::restrict(&b.z, &proj, &self.window, tol)?, Some(b.z))
            }
            PartialSpec::ExplicitTable { entries } => {
                let (d, table) = self.table(entries)?;
                let w = PartialCotranslation::explicit(self.group.clone(), d, move |g, h| {
                    table
                        .get(&(g.clone(), h.clone()))
                        .cloned()
                        .ok_or_else(|| cotrans_core::Error::Spec(format!("explicit_table has no entry for ({g}, {h})")))
                });
                (w, None)
            }
            PartialSpec::Random { dim, rank, seed } => {
                self.require_integers("random partials")?;
                check_dim(*dim, self.cap)?;
                if *rank > *dim {
                    return Err(CliError::spec("random partial: rank exceeds dim"));
                }
                let rp = random::random_partial(*seed, *dim, *rank, &self.window)?;
                (rp.w, Some(rp.base))
            }
            PartialSpec::Constant { p } => {
                check_dim(p.dim(), self.cap)?;
                (PartialCotranslation::constant(self.group.clone(), p.clone())?, None)
            }
            PartialSpec::Sum { parts } => {
                let mut it = parts.iter();
                let first = it.next().ok_or_else(|| CliError::spec("sum: no parts"))?;
                let mut acc = self.partial(first)?.0;
                for part in it {
                    let next = self.partial(part)?.0;
                    let tol = self.spec.tolerance(cotrans_core::laws::MUTUAL_ORTHOGONALITY);
                    acc = partial::orthogonal_sum(&acc, &next, &self.window, tol, self.spec.seed)?.0;
                }
                (acc, None)
            }
            PartialSpec::Conjugated { base, conjugation } => {
                let (w, _) = self.partial(base)?;
                (conjugate(&w, &self.conjugation(conjugation)?)?, None)
            }
        })
    }

    fn hull(&self, h: &HullSpec) -> R<Hull> {
        let (hull, slice) = match h {
            HullSpec::SolutionFamily { period, identity_slice_at } => {
                self.require_integers("solution_family")?;
                self.mats(period)?;
                (Hull::solution_family(&DifferenceSeq::periodic(period.clone())?), identity_slice_at)
            }
            HullSpec::Of { cotranslation, identity_slice_at } => {
                (cotranslation::to_hull(&self.cot(cotranslation)?.z), identity_slice_at)
            }
        };
        Ok(match slice {
            Some(e) => hull.with_identity_slice(self.element(e)?),
            None => hull,
        })
    }
}

/// Builds the object of a validated spec and its verification window.
pub fn build(spec: &ProblemSpec) -> R<Built> {
    let cap = max_dim()?;
    let kind = spec.object_kind()?;
    if kind == ObjectKind::Ode {
        let ode = spec.ode.as_ref().expect("checked");
        if let Some(g) = &spec.group {
            if *g != (GroupSpec::Grid { step: ode.h }) {
                return Err(CliError::spec("`group` for an ode must be {\"kind\":\"grid\",\"step\": h}"));
            }
        }
        let (grid, coeff) = build_ode(ode, cap)?;
        let group = grid.group();
        return Ok(Built { group, window: Vec::new(), object: Object::Ode { grid, coeff }, projector: None });
    }
    let group = build_group(spec.group.as_ref().expect("checked by validate"))?;
    let window = group.sample_window(spec.radius, spec.seed);
    let ctx = Ctx { spec, group: group.clone(), window: window.clone(), cap };
    let object = match kind {
        ObjectKind::Cotranslation => Object::Cot(ctx.cot(spec.cotranslation.as_ref().expect("checked"))?),
        ObjectKind::Partial => {
            let (w, base) = ctx.partial(spec.partial.as_ref().expect("checked"))?;
            Object::Partial { w, base }
        }
        ObjectKind::Hull => Object::Hull(ctx.hull(spec.hull.as_ref().expect("checked"))?),
        ObjectKind::Ode => unreachable!(),
    };
    let projector = match (&spec.projector, &object) {
        (None, _) => None,
        (Some(p), Object::Cot(c)) => Some(ctx.projector(p, Some(&c.z))?),
        (Some(p), Object::Partial { base, .. }) => Some(ctx.projector(p, base.as_ref())?),
        _ => unreachable!("checked by validate"),
    };
    if let Some(p) = &projector {
        let d = match &object {
            Object::Cot(c) => c.z.dim(),
            Object::Partial { w, .. } => w.dim(),
            _ => unreachable!(),
        };
        if p.dim() != d {
            return Err(cotrans_core::Error::DimMismatch { expected: d, got: p.dim() }.into());
        }
    }
    Ok(Built { group, window, object, projector })
}
