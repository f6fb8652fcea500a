//! Runs a command on built objects and re-evaluates single report entries.

use std::collections::BTreeMap;

use cotrans_core::cotranslation::{self as cot, from_hull, to_hull};
use cotrans_core::evolution::{self as evo, DerivativeIdentity};
use cotrans_core::partial::{self, Completion};
use cotrans_core::report::sweep;
use cotrans_core::{
    laws, Cotranslation, GroupElement, LawEntry, Mat, MatrixCocycle, PartialCotranslation, Verdict, VerificationReport,
};
use cotrans_core::matrix::{DEFAULT_INV_TOL, DEFAULT_RANK_TOL};
use serde_json::{json, Value};

use crate::build::{build, Built, Object};
use crate::error::CliError;
use crate::spec::{Command, ProblemSpec};

type R<T> = Result<T, CliError>;

/// Detail key marking an entry produced by a failed constructor.
pub const CONSTRUCTION_DETAIL: &str = "construction";

/// Outcome of a run before it is wrapped into a report envelope.
#[derive(Debug, Default)]
pub struct Outcome {
    pub report: VerificationReport,
    pub info: BTreeMap<String, Value>,
    pub csv: Option<String>,
}

/// Built objects plus everything derived from them that reports refer to.
pub struct Session<'a> {
    pub spec: &'a ProblemSpec,
    pub built: Built,
    completion: Option<Completion>,
}

fn tol_of(spec: &ProblemSpec, law: &str) -> f64 {
    spec.tolerance(law)
}

/// Re-judges threshold-based entries against the spec's tolerance table.
fn rejudge(spec: &ProblemSpec, report: &mut VerificationReport) {
    for e in &mut report.entries {
        let richardson = DerivativeIdentity::from_law(&e.law).is_some();
        if richardson || e.verdict == Verdict::Inconclusive || e.details.contains_key(CONSTRUCTION_DETAIL) {
            continue;
        }
        e.tolerance = tol_of(spec, &e.law);
        e.set_verdict(if e.max_residual <= e.tolerance { Verdict::Pass } else { Verdict::Fail });
    }
}

/// A failed constructor as a failing report entry.
pub fn construction_entry(err: &cotrans_core::Error) -> Option<LawEntry> {
    match err {
        cotrans_core::Error::Construction { law, residual, tolerance, location } => {
            let loc = (!location.is_empty()).then(|| location.clone());
            Some(LawEntry::new(law.clone(), *residual, loc, *tolerance, 1).with_detail(CONSTRUCTION_DETAIL, 1.0))
        }
        _ => None,
    }
}

fn mat_json(m: &Mat) -> Value {
    serde_json::to_value(m).expect("matrices serialize")
}

fn ints(l: &[GroupElement]) -> R<Vec<i64>> {
    l.iter()
        .map(|g| g.as_int().ok_or_else(|| CliError::Replay(format!("expected grid indices, got {g}"))))
        .collect()
}

fn entrywise(a: &Mat, b: &Mat) -> f64 {
    a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

impl<'a> Session<'a> {
    pub fn new(spec: &'a ProblemSpec) -> R<Self> {
        let built = build(spec)?;
        let completion = match (&built.object, spec.command) {
            (Object::Partial { w, .. }, Command::Complete) => {
                Some(partial::completion_candidate(w, &built.window, tol_of(spec, laws::PARTIAL_LAW), spec.seed)?)
            }
            _ => None,
        };
        Ok(Session { spec, built, completion })
    }

    fn tol(&self, law: &str) -> f64 {
        tol_of(self.spec, law)
    }

    fn window(&self) -> &[GroupElement] {
        &self.built.window
    }

    fn k_steps(&self, step: f64) -> R<i64> {
        let k = evo::fd_steps(self.spec.options.h_fd, step)?;
        if k < 2 || k % 2 != 0 {
            return Err(CliError::spec(format!("options.h_fd must be an even number (>= 2) of grid steps, got {k}")));
        }
        Ok(k)
    }

    pub fn run(&self) -> R<Outcome> {
        let mut out = Outcome::default();
        match (self.spec.command, &self.built.object) {
            (Command::Verify, Object::Cot(c)) => self.verify_cot(c, &mut out)?,
            (Command::Verify, Object::Partial { w, .. }) => self.verify_partial(w, &mut out)?,
            (Command::Verify, Object::Hull(h)) => {
                out.report.extend(cot::hull_axiom_check(h, self.window(), self.tol(laws::HULL_COMPATIBILITY), self.spec.seed)?);
                out.report.push(cot::cocycle_check(&from_hull(h), self.window(), self.tol(laws::COCYCLE), self.spec.seed)?);
            }
            (Command::Verify | Command::Evolve, Object::Ode { grid, coeff }) => self.evolve(grid, coeff, &mut out)?,
            (Command::Complete, Object::Partial { w, .. }) => self.complete(w, &mut out)?,
            (Command::SkewRoundtrip, Object::Cot(c)) => {
                out.report.push(cot::hull_roundtrip_check(&c.z, self.window())?);
                let hull = to_hull(&c.z);
                out.report.extend(cot::hull_axiom_check(&hull, self.window(), self.tol(laws::HULL_COMPATIBILITY), self.spec.seed)?);
            }
            (Command::SkewRoundtrip, Object::Hull(h)) => {
                let z = from_hull(h);
                out.report.extend(cot::hull_axiom_check(h, self.window(), self.tol(laws::HULL_COMPATIBILITY), self.spec.seed)?);
                out.report.push(cot::hull_roundtrip_check(&z, self.window())?);
                out.report.push(cot::cocycle_check(&z, self.window(), self.tol(laws::COCYCLE), self.spec.seed)?);
            }
            (Command::Generator, Object::Ode { grid, coeff }) => self.generator(grid, coeff, &mut out)?,
            _ => return Err(CliError::spec(format!("command `{}` does not apply to this object", self.spec.command.name()))),
        }
        rejudge(self.spec, &mut out.report);
        out.info.insert("window_size".into(), json!(self.window().len()));
        out.info.insert("group".into(), json!(self.built.group.kind_name()));
        Ok(out)
    }

    fn verify_cot(&self, c: &crate::build::BuiltCot, out: &mut Outcome) -> R<()> {
        let (z, win, seed) = (&c.z, self.window(), self.spec.seed);
        if let Some(maps) = &c.generator_maps {
            out.report.extend(cot::check_preserves_relations(&self.built.group, maps, win, self.tol(laws::RELATIONS))?);
        }
        if let Some(gamma) = &c.morphism {
            out.report.push(cot::morphism_check(gamma, win, self.tol(laws::MORPHISM), seed)?);
        }
        out.report.extend(cot::cot_inverse_law_check(z, win, self.tol(laws::INVOLUTION))?);
        out.report.push(cot::cocycle_check(z, win, self.tol(laws::COCYCLE), seed)?);
        if c.explicit {
            out.report.push(cot::invertibility_check(z, win)?);
        }
        if let Some(p) = &self.built.projector {
            out.report.extend(partial::check_invariant_projector(z, p, win, self.tol(laws::PROJECTOR_INVARIANCE))?);
            out.report.push(p.rank_check(win)?);
            out.report.push(partial::projector_reconstruction_check(z, p, win, self.tol(laws::PROJECTOR_RECONSTRUCTION))?);
        }
        let (auto, entry) = cot::is_autonomous(z, win, self.tol(laws::AUTONOMY), seed)?;
        out.info.insert("autonomous".into(), json!(auto));
        out.info.insert("autonomy_residual".into(), json!(entry.max_residual));
        out.info.insert("dim".into(), json!(z.dim()));
        Ok(())
    }

    fn verify_partial(&self, w: &PartialCotranslation, out: &mut Outcome) -> R<()> {
        let (win, seed) = (self.window(), self.spec.seed);
        out.report.push(partial::law_check(w, win, self.tol(laws::PARTIAL_LAW), seed)?);
        out.report.extend(partial::units_projector_check(w, win, self.tol(laws::UNITS_INVARIANCE))?);
        out.report.extend(partial::kernel_constancy_check(w, win, self.tol(laws::KERNEL_CONSTANCY), seed)?);
        if let Some(p) = &self.built.projector {
            out.report.extend(partial::check_invariant_projector(w, p, win, self.tol(laws::PROJECTOR_INVARIANCE))?);
            out.report.push(p.rank_check(win)?);
        }
        out.info.insert("rank".into(), json!(partial::rank_of(w)?));
        out.info.insert("dim".into(), json!(w.dim()));
        Ok(())
    }

    fn complete(&self, w: &PartialCotranslation, out: &mut Outcome) -> R<()> {
        let c = self.completion.as_ref().expect("built in new");
        let win = self.window();
        out.report.extend(c.report.clone());
        let n = &c.normalization;
        let sim = partial::kinematic_similarity_report(
            w,
            &n.w_hat,
            &n.t,
            win,
            self.tol(laws::SIMILARITY),
            self.spec.options.declared_bound,
        )?;
        out.report.extend(sim.report.clone());

        let mut t_rows = Vec::new();
        for g in win {
            t_rows.push(json!({ "element": g, "matrix": mat_json(&n.t.at(g)?) }));
        }
        let mut z_rows = Vec::new();
        for g in win {
            for h in win {
                z_rows.push(json!({ "g": g, "h": h, "value": mat_json(&c.z_full.at(g, h)?) }));
            }
        }
        out.info.insert("rank".into(), json!(n.rank));
        out.info.insert("dim".into(), json!(w.dim()));
        out.info.insert("m".into(), json!(n.m));
        out.info.insert("t".into(), Value::Array(t_rows));
        out.info.insert(
            "v".into(),
            json!({ "kind": "conjugated_block", "block": mat_json(&Mat::block_projector(w.dim(), n.rank, false)), "rank": n.rank }),
        );
        out.info.insert("z_full".into(), Value::Array(z_rows));
        out.info.insert(
            "similarity".into(),
            json!({
                "sup_t": sim.sup_t,
                "sup_t_inv": sim.sup_t_inv,
                "sup_t_inner": sim.sup_t_inner,
                "sup_t_inv_inner": sim.sup_t_inv_inner,
                "bounded": sim.bounded,
                "continuity": sim.continuity,
            }),
        );
        Ok(())
    }

    fn evolve(&self, e: &cotrans_core::EvolutionGrid, a: &cotrans_core::CoeffFn, out: &mut Outcome) -> R<()> {
        let (samples, seed) = (self.spec.options.samples, self.spec.seed);
        out.report.extend(evo::evolution_report(e, a, samples, seed, &|l| self.tol(l))?);
        let k = self.k_steps(e.step())?;
        let pairs = evo::sample_indices::<2>(e.lo(), e.hi(), k, samples, seed ^ 3)?;
        out.report.push(sweep(
            laws::SOLUTION_RESIDUAL,
            self.tol(laws::SOLUTION_RESIDUAL),
            pairs.iter().map(|p| p.iter().map(|&i| GroupElement::Int(i)).collect()),
            |l| evo::solution_residual(e, a, l[0].as_int().expect("grid"), l[1].as_int().expect("grid"), k),
        )?.with_detail("h_fd", k as f64 * e.step()));

        let mut csv = String::from("t");
        for i in 0..e.dim() {
            for j in 0..e.dim() {
                csv.push_str(&format!(",m{i}{j}"));
            }
        }
        csv.push('\n');
        for row in evo::trajectory_rows(e, self.spec.options.csv_stride)? {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        out.csv = Some(csv);
        out.info.insert("steps".into(), json!(e.hi() - e.lo()));
        out.info.insert("lo".into(), json!(e.lo()));
        out.info.insert("hi".into(), json!(e.hi()));
        out.info.insert("step".into(), json!(e.step()));
        Ok(())
    }

    fn generator(&self, e: &cotrans_core::EvolutionGrid, a: &cotrans_core::CoeffFn, out: &mut Outcome) -> R<()> {
        let z = evo::cotranslation_of(e);
        let k = self.k_steps(e.step())?;
        let (n, seed) = (self.spec.options.points, self.spec.seed);
        let pts: Vec<i64> = evo::sample_indices::<1>(e.lo(), e.hi(), k, n, seed)?.into_iter().map(|[t]| t).collect();
        out.report.push(evo::generator_recovery_check(&z, a, &pts, k, self.tol(laws::GENERATOR_RECOVERY))?);
        let rt = evo::sample_rt_points(e.lo(), e.hi(), 2 * k, n, seed ^ 5)?;
        out.report.extend(evo::check_derivative_identities(&z, &rt, k, self.tol(laws::D1_FROM_D2))?);
        let probe = evo::two_variable_differentiability_probe(&z, &rt, k)?;
        out.info.insert("differentiability_probe".into(), serde_json::to_value(&probe).expect("serializes"));
        out.info.insert("h_fd".into(), json!(k as f64 * e.step()));
        Ok(())
    }

    /// Recomputes the residual of `entry` at its recorded location.
    /// `None` when the entry has nothing to replay.
    pub fn residual_at(&self, entry: &LawEntry) -> R<Option<f64>> {
        let Some(loc) = entry.argmax.as_deref() else {
            return Ok(None);
        };
        let law = entry.law.as_str();
        let bad = || CliError::Replay(format!("law `{law}` cannot be replayed for this spec"));
        let arity = |n: usize| if loc.len() == n { Ok(()) } else { Err(CliError::Replay(format!("law `{law}` expects {n} arguments"))) };
        let r = match &self.built.object {
            Object::Cot(c) => {
                let z = &c.z;
                match law {
                    laws::COCYCLE => { arity(3)?; cot::cocycle_residual(z, &loc[0], &loc[1], &loc[2])? }
                    laws::UNIT => { arity(1)?; cot::unit_residual(z, &loc[0])? }
                    laws::INVOLUTION => { arity(2)?; cot::involution_residual(z, &loc[0], &loc[1])? }
                    laws::INVERTIBLE => { arity(2)?; cot::rank_deficiency(z, &loc[0], &loc[1])? }
                    laws::MORPHISM => {
                        arity(2)?;
                        let gamma = c.morphism.as_ref().ok_or_else(bad)?;
                        let mut r = cot::morphism_residual(gamma, &loc[0], &loc[1])?;
                        let e = self.built.group.identity();
                        if loc[0] == e && loc[1] == e {
                            r = r.max(gamma.at(&e)?.dist(&Mat::identity(gamma.dim())));
                        }
                        r
                    }
                    laws::HULL_ROUNDTRIP => { arity(2)?; entrywise(&from_hull(&to_hull(z)).at(&loc[0], &loc[1])?, &z.at(&loc[0], &loc[1])?) }
                    laws::HULL_ADMISSIBILITY => { arity(1)?; cot::hull_admissibility_residual(&to_hull(z), &loc[0])? }
                    laws::HULL_COMPATIBILITY => { arity(3)?; cot::hull_compatibility_residual(&to_hull(z), &loc[0], &loc[1], &loc[2])? }
                    _ if law.starts_with("relations/") => {
                        arity(1)?;
                        let idx: usize = law["relations/".len()..].parse().map_err(|_| bad())?;
                        let maps = c.generator_maps.as_ref().ok_or_else(bad)?;
                        cot::relation_residual(&self.built.group, maps, idx, &loc[0])?
                    }
                    _ => self.projector_residual(z, law, loc, true)?.ok_or_else(bad)?,
                }
            }
            Object::Partial { w, .. } => match &self.completion {
                None => match law {
                    laws::PARTIAL_LAW => { arity(3)?; cot::cocycle_residual(w, &loc[0], &loc[1], &loc[2])? }
                    laws::UNITS_IDEMPOTENT => { arity(1)?; partial::idempotency_residual(&partial::units_projector(w).at(&loc[0])?)? }
                    laws::UNITS_INVARIANCE => { arity(2)?; partial::invariance_residual(w, &partial::units_projector(w), &loc[0], &loc[1])? }
                    laws::KERNEL_CONSTANCY => { arity(3)?; partial::kernel_residual(w, &loc[0], &loc[1], &loc[2])? }
                    laws::RANK_CONSTANCY => { arity(2)?; partial::rank_residual(w, &loc[0], &loc[1])? }
                    _ => self.projector_residual(w, law, loc, false)?.ok_or_else(bad)?,
                },
                Some(c) => self.completion_residual(w, c, law, loc)?.ok_or_else(bad)?,
            },
            Object::Hull(h) => match law {
                laws::HULL_ADMISSIBILITY => { arity(1)?; cot::hull_admissibility_residual(h, &loc[0])? }
                laws::HULL_COMPATIBILITY => { arity(3)?; cot::hull_compatibility_residual(h, &loc[0], &loc[1], &loc[2])? }
                laws::COCYCLE => { arity(3)?; cot::cocycle_residual(&from_hull(h), &loc[0], &loc[1], &loc[2])? }
                laws::HULL_ROUNDTRIP => {
                    arity(2)?;
                    let z = from_hull(h);
                    entrywise(&from_hull(&to_hull(&z)).at(&loc[0], &loc[1])?, &z.at(&loc[0], &loc[1])?)
                }
                _ => return Err(bad()),
            },
            Object::Ode { grid: e, coeff: a } => {
                let ix = ints(loc)?;
                let k_of = || -> R<i64> {
                    let h_fd = entry.details.get("h_fd").copied().ok_or_else(bad)?;
                    Ok((h_fd / e.step()).round() as i64)
                };
                match (law, ix.as_slice()) {
                    (laws::EVOLUTION_UNIT, &[u]) => e.psi(u, u)?.dist(&Mat::identity(e.dim())),
                    (laws::EVOLUTION_COCYCLE, &[u, v, w]) => evo::evolution_cocycle_residual(e, u, v, w)?,
                    (laws::CLOSED_FORM, &[u, v]) => evo::closed_form_residual(e, a, u, v)?,
                    (laws::SOLUTION_RESIDUAL, &[u, v]) => evo::solution_residual(e, a, u, v, k_of()?)?,
                    (laws::GENERATOR_RECOVERY, &[t]) => evo::generator_residual(&evo::cotranslation_of(e), a, t, k_of()?)?,
                    (_, &[r, t]) => {
                        let which = DerivativeIdentity::from_law(law).ok_or_else(bad)?;
                        evo::derivative_identity_residual(&evo::cotranslation_of(e), which, r, t, k_of()?)?
                    }
                    _ => return Err(bad()),
                }
            }
        };
        Ok(Some(if r.is_finite() { r } else { f64::MAX }))
    }

    fn projector_residual<C: MatrixCocycle>(&self, v: &C, law: &str, loc: &[GroupElement], full: bool) -> R<Option<f64>> {
        let Some(p) = &self.built.projector else {
            return Ok(None);
        };
        Ok(Some(match (law, loc) {
            (laws::PROJECTOR_IDEMPOTENT, [g]) => partial::idempotency_residual(&p.at(g)?)?,
            (laws::PROJECTOR_INVARIANCE, [g, h]) => partial::invariance_residual(v, p, g, h)?,
            (laws::PROJECTOR_RANK, [g]) => {
                let first = self.window().first().ok_or_else(|| CliError::Replay("empty window".into()))?;
                let r0 = p.at(first)?.rank_eps(DEFAULT_RANK_TOL) as f64;
                (p.at(g)?.rank_eps(DEFAULT_RANK_TOL) as f64 - r0).abs()
            }
            (laws::PROJECTOR_RECONSTRUCTION, [g]) if full => {
                let Object::Cot(c) = &self.built.object else { return Ok(None) };
                partial::projector_reconstruction_residual(&c.z, p, g)?
            }
            _ => return Ok(None),
        }))
    }

    fn completion_residual(&self, w: &PartialCotranslation, c: &Completion, law: &str, loc: &[GroupElement]) -> R<Option<f64>> {
        let n = &c.normalization;
        let s: &Cotranslation = &c.z_full;
        let d = w.dim();
        Ok(Some(match (law, loc) {
            (laws::UNITS_BLOCK, [g]) => partial::units_block_residual(&n.w_hat, n.rank, g)?,
            (laws::NORMALIZATION_BOUNDS, [g]) => partial::normalization_bound_residual(&n.t, g, n.m)?,
            (laws::MUTUAL_ORTHOGONALITY, [g, h, k]) => partial::mutual_orthogonality_residual(w, &c.v, g, h, k)?,
            (laws::PARTIAL_LAW, [g, h, k]) => cot::cocycle_residual(s, g, h, k)?,
            (laws::COMPLETION_RANK, [g, h]) => (d - s.at(g, h)?.rank_eps(DEFAULT_RANK_TOL)) as f64,
            (laws::COMPLETION_INVERTIBLE, [g, h]) => {
                if s.at(g, h)?.try_inverse(DEFAULT_INV_TOL).is_ok() { 0.0 } else { 1.0 }
            }
            (laws::COMPLETION_RECONSTRUCTION, [g, h]) => partial::reconstruction_residual(s, w, g, h)?,
            (laws::SIMILARITY, [g, h]) => partial::similarity_residual(w, &n.w_hat, &n.t, g, h)?,
            _ => return Ok(None),
        }))
    }
}

/// Runs `spec`, turning constructor failures into failing entries.
pub fn execute(spec: &ProblemSpec) -> R<Outcome> {
    match Session::new(spec).and_then(|s| s.run()) {
        Ok(out) => Ok(out),
        Err(CliError::Core(err)) => match construction_entry(&err) {
            Some(entry) => Ok(Outcome { report: entry.into(), ..Outcome::default() }),
            None => Err(CliError::Core(err)),
        },
        Err(e) => Err(e),
    }
}

