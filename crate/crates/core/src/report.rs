//! Verification reports: one entry per law, each carrying the worst residual
//! seen on a window together with where it occurred.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::GroupElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A numeric rank decision sat too close to its threshold to call.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawEntry {
    pub law: String,
    pub max_residual: f64,
    /// Arguments at which `max_residual` was attained.
    #[serde(rename = "argmax_triple")]
    pub argmax: Option<Vec<GroupElement>>,
    pub pass: bool,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl LawEntry {
    pub fn new(law: impl Into<String>, max_residual: f64, argmax: Option<Vec<GroupElement>>, tolerance: f64, samples: usize) -> Self {
        let pass = max_residual <= tolerance;
        LawEntry {
            law: law.into(),
            max_residual,
            argmax,
            pass,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            tolerance,
            samples,
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn set_verdict(&mut self, verdict: Verdict) {
        self.verdict = verdict;
        self.pass = verdict != Verdict::Fail;
    }
}

/// Per-law residual statistics over a window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<LawEntry>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: LawEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.entries.extend(other.entries);
    }

    /// Conjunction of the entry verdicts.
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, law: &str) -> Option<&LawEntry> {
        self.entries.iter().find(|e| e.law == law)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LawEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

impl From<LawEntry> for VerificationReport {
    fn from(e: LawEntry) -> Self {
        VerificationReport { entries: vec![e] }
    }
}

/// Evaluates `residual` at every location and keeps the first strict maximum.
///
/// Non-finite residuals are recorded as `f64::MAX` so they always fail and
/// still serialize.
pub fn sweep<I, F>(law: &str, tolerance: f64, locations: I, mut residual: F) -> Result<LawEntry>
where
    I: IntoIterator<Item = Vec<GroupElement>>,
    F: FnMut(&[GroupElement]) -> Result<f64>,
{
    let mut worst = 0.0f64;
    let mut argmax = None;
    let mut samples = 0usize;
    for loc in locations {
        let mut r = residual(&loc)?;
        if !r.is_finite() {
            r = f64::MAX;
        }
        samples += 1;
        if argmax.is_none() || r > worst {
            worst = r;
            argmax = Some(loc);
        }
    }
    Ok(LawEntry::new(law, worst, argmax, tolerance, samples))
}

/// Residual normalization shared by every product law: `max(1, scale)`.
#[inline]
pub fn normalized(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

/// Law identifiers with their default tolerances.
pub mod laws {
    pub const COCYCLE: &str = "cocycle";
    pub const UNIT: &str = "unit";
    pub const INVOLUTION: &str = "involution";
    pub const INVERTIBLE: &str = "invertible";
    pub const AUTONOMY: &str = "autonomy";
    pub const MORPHISM: &str = "morphism";
    pub const COMMUTATION: &str = "commutation";
    pub const RELATIONS: &str = "relations";
    pub const WELL_DEFINED: &str = "well_defined";
    pub const HULL_ADMISSIBILITY: &str = "hull_admissibility";
    pub const HULL_COMPATIBILITY: &str = "hull_compatibility";
    pub const HULL_ROUNDTRIP: &str = "hull_roundtrip";
    pub const EVOLUTION_UNIT: &str = "evolution_unit";
    pub const EVOLUTION_COCYCLE: &str = "evolution_cocycle";
    pub const CLOSED_FORM: &str = "closed_form";
    pub const GENERATOR_RECOVERY: &str = "generator_recovery";
    pub const SOLUTION_RESIDUAL: &str = "solution_residual";
    pub const D1_FROM_D2: &str = "d1_from_d2";
    pub const D2_FORWARD: &str = "d2_forward";
    pub const D1_INVERSE: &str = "d1_inverse";
    pub const D2_INVERSE: &str = "d2_inverse";
    pub const D_INITIAL_TIME: &str = "d_initial_time";
    pub const PARTIAL_LAW: &str = "partial_law";
    pub const UNITS_IDEMPOTENT: &str = "units_idempotent";
    pub const UNITS_INVARIANCE: &str = "units_invariance";
    pub const KERNEL_CONSTANCY: &str = "kernel_constancy";
    pub const RANK_CONSTANCY: &str = "rank_constancy";
    pub const PROJECTOR_IDEMPOTENT: &str = "projector_idempotent";
    pub const PROJECTOR_INVARIANCE: &str = "projector_invariance";
    pub const PROJECTOR_ORTHOGONALITY: &str = "projector_orthogonality";
    pub const PROJECTOR_RECONSTRUCTION: &str = "projector_reconstruction";
    pub const PROJECTOR_RANK: &str = "projector_rank";
    pub const CONJUGATION_INVERSE: &str = "conjugation_inverse";
    pub const MUTUAL_ORTHOGONALITY: &str = "mutual_orthogonality";
    pub const SUM_UNITS_INVARIANCE: &str = "sum_units_invariance";
    pub const SUM_RECONSTRUCTION: &str = "sum_reconstruction";
    pub const CONJUGATE_RANK: &str = "conjugate_rank";
    pub const UNITS_BLOCK: &str = "units_block";
    pub const NORMALIZATION_BOUNDS: &str = "normalization_bounds";
    pub const COMPLETION_RANK: &str = "completion_rank";
    pub const COMPLETION_INVERTIBLE: &str = "completion_invertible";
    pub const COMPLETION_RECONSTRUCTION: &str = "completion_reconstruction";
    pub const SIMILARITY: &str = "similarity";

    /// `(id, default tolerance, description)` for every law.
    pub const ALL: &[(&str, f64, &str)] = &[
        (COCYCLE, 1e-10, "Z(g,kh) = Z(hg,k) Z(g,h), scale-normalized"),
        (UNIT, 1e-10, "Z(g,e) = Id"),
        (INVOLUTION, 1e-10, "Z(hg,h^-1) is the two-sided inverse of Z(g,h)"),
        (INVERTIBLE, 0.0, "numeric rank of Z(g,h) equals d"),
        (AUTONOMY, 1e-10, "Z(g,h) = Z(k,h)"),
        (MORPHISM, 1e-10, "gamma(gh) = gamma(g) gamma(h) and gamma(e) = Id"),
        (COMMUTATION, 1e-10, "gamma(k) Z(g,h) = Z(g,h) gamma(k)"),
        (RELATIONS, 1e-10, "ordered generator-map product along each relation word is Id"),
        (WELL_DEFINED, 1e-10, "generator-map products agree along two words for the same element"),
        (HULL_ADMISSIBILITY, 1e-10, "psi_g(e) = Id"),
        (HULL_COMPATIBILITY, 1e-10, "psi_{hg}(k) psi_g(h) = psi_g(kh)"),
        (HULL_ROUNDTRIP, 0.0, "cotranslation -> hull -> cotranslation reproduces every value"),
        (EVOLUTION_UNIT, 0.0, "Psi(t,t) = Id"),
        (EVOLUTION_COCYCLE, 1e-9, "Psi(u,v) Psi(v,w) = Psi(u,w)"),
        (CLOSED_FORM, 1e-6, "grid propagator against the analytic propagator"),
        (GENERATOR_RECOVERY, 5e-4, "central difference of Z(t,.) at 0 against A(t)"),
        (SOLUTION_RESIDUAL, 1e-4, "d/du Psi(u,v) xi = A(u) Psi(u,v) xi"),
        (D1_FROM_D2, 1e-9, "d1 Z(r,t) = d2 Z(r,t) - Z(r,t) d2 Z(r,0) (Richardson-judged)"),
        (D2_FORWARD, 1e-9, "d2 Z(r,t) = d2 Z(r+t,0) Z(r,t) (Richardson-judged)"),
        (D1_INVERSE, 1e-9, "d1 Z^inv = -Z^inv (d1 Z) Z^inv (Richardson-judged)"),
        (D2_INVERSE, 1e-9, "d2 Z^inv = -Z^inv (d2 Z) Z^inv (Richardson-judged)"),
        (D_INITIAL_TIME, 1e-9, "d/dv Psi(u,v) = -Psi(u,v) A(v) (Richardson-judged)"),
        (PARTIAL_LAW, 1e-9, "W(g,kh) = W(hg,k) W(g,h), scale-normalized"),
        (UNITS_IDEMPOTENT, 1e-9, "W(g,e)^2 = W(g,e)"),
        (UNITS_INVARIANCE, 1e-9, "P(hg) W(g,h) = W(g,h) P(g) for P(g) = W(g,e)"),
        (KERNEL_CONSTANCY, 1e-8, "ker W(h,g) = ker W(h,k)"),
        (RANK_CONSTANCY, 0.0, "numeric rank of W(g,h) is constant"),
        (PROJECTOR_IDEMPOTENT, 1e-9, "P(g)^2 = P(g)"),
        (PROJECTOR_INVARIANCE, 1e-9, "P(hg) V(g,h) = V(g,h) P(g)"),
        (PROJECTOR_ORTHOGONALITY, 1e-9, "P(g) Q(g) = Q(g) P(g) = 0"),
        (PROJECTOR_RECONSTRUCTION, 1e-9, "P(g) = Z(e,g) P(e) Z(g,g^-1) for a full cotranslation"),
        (PROJECTOR_RANK, 0.0, "numeric rank of P(g) is constant"),
        (CONJUGATION_INVERSE, 1e-9, "T(g) T(g)^-1 = Id"),
        (MUTUAL_ORTHOGONALITY, 1e-9, "W(hg,k) V(g,h) = V(hg,k) W(g,h) = 0"),
        (SUM_UNITS_INVARIANCE, 1e-9, "units projector of W is invariant for W + V"),
        (SUM_RECONSTRUCTION, 1e-9, "(W + V)(g,h) W(g,e) = W(g,h)"),
        (CONJUGATE_RANK, 0.0, "rank W_T = rank W"),
        (UNITS_BLOCK, 1e-8, "normalized units projector equals diag(Id_r, 0)"),
        (NORMALIZATION_BOUNDS, 1e-9, "||T(g)|| <= d and ||T(g)^-1|| <= d M (relative excess)"),
        (COMPLETION_RANK, 0.0, "numeric rank of (W + V)(g,h) equals d"),
        (COMPLETION_INVERTIBLE, 0.0, "every (W + V)(g,h) passes the inverse tolerance"),
        (COMPLETION_RECONSTRUCTION, 1e-9, "(W + V)(g,h) W(g,e) = W(g,h)"),
        (SIMILARITY, 1e-9, "T(hg) V(g,h) = W(g,h) T(g)"),
    ];

    pub fn default_tolerance(law: &str) -> Option<f64> {
        let base = law.split('/').next().unwrap_or(law);
        ALL.iter().find(|(id, _, _)| *id == base).map(|(_, t, _)| *t)
    }
}
