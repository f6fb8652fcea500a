//! Problem spec format. Field layout mirrors `schema/problem_spec.schema.json`;
//! unknown fields are rejected.

use std::collections::BTreeMap;

use cotrans_core::{GroupElement, GroupHandle, Mat, Word};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_JSON: &str = include_str!("../schema/problem_spec.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Complete,
    Evolve,
    SkewRoundtrip,
    Generator,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Complete => "complete",
            Command::Evolve => "evolve",
            Command::SkewRoundtrip => "skew-roundtrip",
            Command::Generator => "generator",
        }
    }
}

fn default_radius() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub command: Command,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub cotranslation: Option<CotSpec>,
    #[serde(default)]
    pub partial: Option<PartialSpec>,
    #[serde(default)]
    pub hull: Option<HullSpec>,
    #[serde(default)]
    pub ode: Option<OdeSpec>,
    /// Extra projector family checked for invariance by `verify`.
    #[serde(default)]
    pub projector: Option<ProjectorSpec>,
    #[serde(default = "default_radius")]
    pub radius: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Seeded samples for grid checks.
    #[serde(default = "Options::default_samples")]
    pub samples: usize,
    /// Finite-difference width for generator and derivative checks.
    #[serde(default = "Options::default_h_fd")]
    pub h_fd: f64,
    /// `(r, t)` points for derivative identities.
    #[serde(default = "Options::default_points")]
    pub points: usize,
    /// Row stride of the CSV trajectory dump.
    #[serde(default = "Options::default_stride")]
    pub csv_stride: usize,
    /// Declared bound on `sup ||T||`, `sup ||T^-1||` for the similarity report.
    #[serde(default)]
    pub declared_bound: Option<f64>,
}

impl Options {
    fn default_samples() -> usize {
        200
    }
    fn default_h_fd() -> f64 {
        1e-2
    }
    fn default_points() -> usize {
        40
    }
    fn default_stride() -> usize {
        1
    }
}

impl Default for Options {
    fn default() -> Self {
        Options {
            samples: Self::default_samples(),
            h_fd: Self::default_h_fd(),
            points: Self::default_points(),
            csv_stride: Self::default_stride(),
            declared_bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum GroupSpec {
    Z,
    Zk {
        k: usize,
    },
    #[serde(rename = "free")]
    Free {
        n: usize,
    },
    #[serde(rename = "finite")]
    Finite {
        table: Vec<Vec<usize>>,
        #[serde(default)]
        generators: Option<Vec<usize>>,
        #[serde(default)]
        relations: Vec<Vec<i32>>,
    },
    #[serde(rename = "grid")]
    Grid {
        step: f64,
    },
}

/// Group element in spec files: `3`, `[1, -2]`, `{"word": [1, -2]}` or `{"finite": 4}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Int(i64),
    Vec(Vec<i64>),
    Word { word: Vec<i32> },
    Finite { finite: usize },
}

impl ElementSpec {
    pub fn resolve(&self, group: &GroupHandle) -> Result<GroupElement, CliError> {
        let g = match self {
            ElementSpec::Int(n) if matches!(group.kind(), cotrans_core::GroupKind::Finite(_)) => {
                GroupElement::Finite(usize::try_from(*n).map_err(|_| CliError::spec("negative finite element"))?)
            }
            ElementSpec::Int(n) => GroupElement::Int(*n),
            ElementSpec::Vec(v) => GroupElement::IntVec(v.clone()),
            ElementSpec::Word { word } => GroupElement::Word(Word::new(word)?),
            ElementSpec::Finite { finite } => GroupElement::Finite(*finite),
        };
        group.check(&g)?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CotSpec {
    /// `A(n) = period[n mod p]` on `Z`.
    DifferenceSeq { period: Vec<Mat> },
    /// Seeded per-index sequence on `Z`.
    RandomSeq {
        dim: usize,
        seed: u64,
        #[serde(default)]
        family: RandomFamily,
    },
    Morphism(MorphismSpec),
    GeneratorMaps { maps: Vec<GeneratorMapSpec> },
    /// `(g, h, value)` rows; evaluation off the table is a spec error.
    ExplicitTable { entries: Vec<TableEntry> },
    /// `Z(r, t) = Psi(r + t, r)` from an integrated equation on its grid.
    Evolution { ode: OdeSpec },
    /// `Z(g,h) gamma(h)` for a morphism `gamma` commuting with every `Z(g,h)`.
    Shifted { base: Box<CotSpec>, morphism: MorphismSpec },
    /// `T(hg)^-1 Z(g,h) T(g)`.
    Conjugated { base: Box<CotSpec>, conjugation: ConjugationSpec },
    /// `from_hull` of a hull.
    FromHull { hull: Box<HullSpec> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomFamily {
    /// Entries uniform in `[-1, 1]`, condition number at most `1e3`.
    #[default]
    Uniform,
    /// Singular values in `[0.5, 2]`.
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MorphismSpec {
    /// `Z`: `n -> diag(base^n)`; `Z^k`: `bases[j]` for the `j`-th coordinate.
    DiagPow {
        #[serde(default)]
        base: Option<Vec<f64>>,
        #[serde(default)]
        bases: Option<Vec<Vec<f64>>>,
    },
    MatrixPow { matrix: Mat },
    ScalarExp { dim: usize, lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorMapSpec {
    Constant { matrix: Mat },
    /// `mats[n mod p]` at the integer `n`; `Z` only.
    Periodic { mats: Vec<Mat> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub g: ElementSpec,
    pub h: ElementSpec,
    pub value: Mat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConjugationSpec {
    Constant { matrix: Mat },
    /// `[[1, n], [0, 1]]` on `Z`.
    Shear,
    DiagPow {
        #[serde(default)]
        base: Option<Vec<f64>>,
        #[serde(default)]
        bases: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectorSpec {
    Constant { p: Mat },
    /// `Z(e,g) p0 Z(g,g^-1)` for the base cotranslation.
    ConjugatedConstant { p0: Mat },
    /// `even` at even integers and `odd` at odd ones.
    Alternating { even: Mat, odd: Mat },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartialSpec {
    Restrict { base: CotSpec, projector: ProjectorSpec },
    ExplicitTable { entries: Vec<TableEntry> },
    /// Seeded `restrict(Z, Z(e,.) P0 Z(.,.^-1))` on `Z` with random `Z` and `P0`.
    Random { dim: usize, rank: usize, seed: u64 },
    Constant { p: Mat },
    Sum { parts: Vec<PartialSpec> },
    Conjugated { base: Box<PartialSpec>, conjugation: ConjugationSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HullSpec {
    /// Column-by-column solutions of `x(n+1) = A(n) x(n)`.
    SolutionFamily {
        period: Vec<Mat>,
        #[serde(default)]
        identity_slice_at: Option<ElementSpec>,
    },
    /// `psi_g(h) = Z(g, h)`.
    Of {
        cotranslation: Box<CotSpec>,
        #[serde(default)]
        identity_slice_at: Option<ElementSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    pub coeff: CoeffSpec,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    Constant { matrix: Mat },
    Rotation { omega: f64 },
    Table {
        step: f64,
        mats: Vec<Mat>,
        #[serde(default = "CoeffSpec::default_interp")]
        interp: cotrans_core::Interp,
    },
    DiagPoly { coeffs: Vec<Vec<f64>> },
    Sinusoidal { base: Mat, amplitude: Mat, omega: f64 },
    Shifted { base: Box<CoeffSpec>, lambda: f64 },
}

impl CoeffSpec {
    fn default_interp() -> cotrans_core::Interp {
        cotrans_core::Interp::Linear
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectKind {
    Cotranslation,
    Partial,
    Hull,
    Ode,
}

impl ProblemSpec {
    /// Parses and validates a spec document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| CliError::spec(format!("schema: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn object_kind(&self) -> Result<ObjectKind, CliError> {
        let present: Vec<ObjectKind> = [
            (self.cotranslation.is_some(), ObjectKind::Cotranslation),
            (self.partial.is_some(), ObjectKind::Partial),
            (self.hull.is_some(), ObjectKind::Hull),
            (self.ode.is_some(), ObjectKind::Ode),
        ]
        .into_iter()
        .filter_map(|(p, k)| p.then_some(k))
        .collect();
        match present.as_slice() {
            [k] => Ok(*k),
            [] => Err(CliError::spec("one of `cotranslation`, `partial`, `hull`, `ode` is required")),
            _ => Err(CliError::spec("exactly one of `cotranslation`, `partial`, `hull`, `ode` may be given")),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let kind = self.object_kind()?;
        if self.radius < 1 {
            return Err(CliError::spec("`radius` must be at least 1"));
        }
        let ok = match self.command {
            Command::Verify => true,
            Command::Complete => kind == ObjectKind::Partial,
            Command::Evolve | Command::Generator => kind == ObjectKind::Ode,
            Command::SkewRoundtrip => matches!(kind, ObjectKind::Cotranslation | ObjectKind::Hull),
        };
        if !ok {
            return Err(CliError::spec(format!("command `{}` does not apply to this object", self.command.name())));
        }
        if self.group.is_none() && kind != ObjectKind::Ode {
            return Err(CliError::spec("`group` is required"));
        }
        if self.projector.is_some() && !matches!(kind, ObjectKind::Cotranslation | ObjectKind::Partial) {
            return Err(CliError::spec("`projector` applies to cotranslations and partials only"));
        }
        for (law, &tol) in &self.tolerances {
            if cotrans_core::laws::default_tolerance(law).is_none() {
                return Err(CliError::spec(format!("tolerances: unknown law `{law}`")));
            }
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(CliError::spec(format!("tolerances.{law}: must be finite and non-negative")));
            }
        }
        if !(self.options.h_fd > 0.0 && self.options.h_fd.is_finite()) {
            return Err(CliError::spec("options.h_fd: must be positive"));
        }
        Ok(())
    }

    /// Tolerance for `law`: spec override, then the default table.
    pub fn tolerance(&self, law: &str) -> f64 {
        let base = law.split('/').next().unwrap_or(law);
        self.tolerances
            .get(law)
            .or_else(|| self.tolerances.get(base))
            .copied()
            .or_else(|| cotrans_core::laws::default_tolerance(law))
            .unwrap_or(0.0)
    }
}
