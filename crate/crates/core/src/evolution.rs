//! Cotranslations over a uniformly sampled real line: evolution operators of
//! `x' = A(t) x`, their cotranslations `Z(r,t) = Psi(t+r, r)`, generator
//! recovery and finite-difference checks of the derivative identities.
//!
//! Grid points are `GroupElement::Int(i)` standing for `t = i * h`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cotranslation::{Cotranslation, CotranslationKind};
use crate::error::{Error, Result};
use crate::eval::{MatrixCocycle, PairMap};
use crate::group::{GroupElement, GroupHandle, GroupKind};
use crate::matrix::{Mat, DEFAULT_INV_TOL};
use crate::report::{laws, normalized, sweep, LawEntry, Verdict, VerificationReport};

/// Upper bound on the number of integration steps.
pub const MAX_STEPS: i64 = 1_000_000;

/// Block fan-out of the cached propagator products.
const FAN: usize = 32;

/// Accepted band for the ratio of residuals at `h_fd` and `h_fd / 2`.
pub const RICHARDSON_BAND: (f64, f64) = (3.5, 4.5);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Linear,
    /// Piecewise constant; used to build discontinuous coefficients.
    Hold,
}

/// The coefficient `A(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CoeffFn {
    Constant(Mat),
    /// `mats[i]` at `t = i * step`, extended periodically.
    PeriodicTable { step: f64, mats: Vec<Mat>, interp: Interp },
    /// `[[0, omega], [-omega, 0]]`.
    Rotation { omega: f64 },
    /// `diag(p_0(t), ..., p_{d-1}(t))` with `coeffs[i]` in ascending powers.
    DiagonalPoly { coeffs: Vec<Vec<f64>> },
    /// `base + sin(omega t) * amplitude`.
    Sinusoidal { base: Mat, amplitude: Mat, omega: f64 },
    /// `A(t) - lambda * Id`.
    ShiftedByScalar { base: Box<CoeffFn>, lambda: f64 },
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * t + x)
}

fn poly_antiderivative(c: &[f64], t: f64) -> f64 {
    c.iter().enumerate().rev().fold(0.0, |acc, (i, &x)| acc * t + x / (i as f64 + 1.0)) * t
}

impl CoeffFn {
    pub fn dim(&self) -> usize {
        match self {
            CoeffFn::Constant(m) => m.dim(),
            CoeffFn::PeriodicTable { mats, .. } => mats.first().map_or(0, Mat::dim),
            CoeffFn::Rotation { .. } => 2,
            CoeffFn::DiagonalPoly { coeffs } => coeffs.len(),
            CoeffFn::Sinusoidal { base, .. } => base.dim(),
            CoeffFn::ShiftedByScalar { base, .. } => base.dim(),
        }
    }

    /// Structural checks: non-empty, consistent dimensions, finite parameters.
    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Spec(format!("{what} must be finite")))
            }
        };
        match self {
            CoeffFn::Constant(_) => Ok(()),
            CoeffFn::PeriodicTable { step, mats, .. } => {
                finite(*step, "table step")?;
                if *step <= 0.0 {
                    return Err(Error::Spec("table step must be positive".into()));
                }
                let d = mats.first().ok_or_else(|| Error::Spec("empty coefficient table".into()))?.dim();
                match mats.iter().find(|m| m.dim() != d) {
                    Some(m) => Err(Error::DimMismatch { expected: d, got: m.dim() }),
                    None => Ok(()),
                }
            }
            CoeffFn::Rotation { omega } => finite(*omega, "omega"),
            CoeffFn::DiagonalPoly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Spec("diagonal polynomial needs at least one entry".into()));
                }
                coeffs.iter().flatten().try_for_each(|&c| finite(c, "polynomial coefficient"))
            }
            CoeffFn::Sinusoidal { base, amplitude, omega } => {
                finite(*omega, "omega")?;
                if base.dim() != amplitude.dim() {
                    return Err(Error::DimMismatch { expected: base.dim(), got: amplitude.dim() });
                }
                Ok(())
            }
            CoeffFn::ShiftedByScalar { base, lambda } => {
                finite(*lambda, "lambda")?;
                base.validate()
            }
        }
    }

    pub fn at(&self, t: f64) -> Mat {
        match self {
            CoeffFn::Constant(m) => m.clone(),
            CoeffFn::PeriodicTable { step, mats, interp } => {
                let p = mats.len() as i64;
                let s = t / step;
                let i = s.floor();
                let idx = |j: i64| &mats[j.rem_euclid(p) as usize];
                let lo = idx(i as i64);
                match interp {
                    Interp::Hold => lo.clone(),
                    Interp::Linear => {
                        let f = s - i;
                        &lo.scale(1.0 - f) + &idx(i as i64 + 1).scale(f)
                    }
                }
            }
            CoeffFn::Rotation { omega } => {
                Mat::from_rows(&[[0.0, *omega], [-omega, 0.0]]).expect("finite omega")
            }
            CoeffFn::DiagonalPoly { coeffs } => {
                Mat::diag(&coeffs.iter().map(|c| poly(c, t)).collect::<Vec<_>>())
            }
            CoeffFn::Sinusoidal { base, amplitude, omega } => base + &amplitude.scale((omega * t).sin()),
            CoeffFn::ShiftedByScalar { base, lambda } => {
                &base.at(t) - &Mat::identity(base.dim()).scale(*lambda)
            }
        }
    }

    /// Analytic `Psi(t, s)` where one is available.
    pub fn closed_form(&self, t: f64, s: f64) -> Option<Mat> {
        match self {
            CoeffFn::Constant(m) => {
                let d = m.dim();
                let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || m.get(i, j) == 0.0));
                diagonal.then(|| Mat::diag(&(0..d).map(|i| (m.get(i, i) * (t - s)).exp()).collect::<Vec<_>>()))
            }
            CoeffFn::Rotation { omega } => {
                let a = omega * (t - s);
                Some(Mat::from_rows(&[[a.cos(), a.sin()], [-a.sin(), a.cos()]]).expect("finite"))
            }
            CoeffFn::DiagonalPoly { coeffs } => Some(Mat::diag(
                &coeffs
                    .iter()
                    .map(|c| (poly_antiderivative(c, t) - poly_antiderivative(c, s)).exp())
                    .collect::<Vec<_>>(),
            )),
            CoeffFn::ShiftedByScalar { base, lambda } => {
                base.closed_form(t, s).map(|m| m.scale((-lambda * (t - s)).exp()))
            }
            CoeffFn::PeriodicTable { .. } | CoeffFn::Sinusoidal { .. } => None,
        }
    }
}

/// One classical RK4 step for `Y' = A(t) Y`, `Y(t) = Id`.
fn rk4_step(a: &CoeffFn, t: f64, h: f64) -> Mat {
    let id = Mat::identity(a.dim());
    let (a0, am, a1) = (a.at(t), a.at(t + 0.5 * h), a.at(t + h));
    let k1 = a0;
    let k2 = &am * &(&id + &k1.scale(0.5 * h));
    let k3 = &am * &(&id + &k2.scale(0.5 * h));
    let k4 = &a1 * &(&id + &k3.scale(h));
    let sum = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
    &id + &sum.scale(h / 6.0)
}

/// Products of consecutive per-step factors cached in blocks of `FAN^l`.
#[derive(Clone, Debug)]
struct BlockProducts {
    levels: Vec<Vec<Mat>>,
    /// `true`: later factors multiply on the left (forward propagation).
    later_left: bool,
}

impl BlockProducts {
    fn build(leaves: Vec<Mat>, later_left: bool) -> Result<Self> {
        let mut levels = vec![leaves];
        while levels.last().expect("non-empty").len() >= FAN {
            let prev = levels.last().expect("non-empty");
            let mut next = Vec::with_capacity(prev.len() / FAN);
            for chunk in prev.chunks_exact(FAN) {
                let mut acc = chunk[0].clone();
                for m in &chunk[1..] {
                    acc = if later_left { m * &acc } else { &acc * m };
                }
                if !acc.is_finite() {
                    return Err(Error::Divergence("propagator product overflowed".into()));
                }
                next.push(acc);
            }
            levels.push(next);
        }
        Ok(BlockProducts { levels, later_left })
    }

    /// Ordered product of factors `i..j` (`i < j`).
    fn product(&self, i: usize, j: usize, dim: usize) -> Mat {
        let mut acc: Option<Mat> = None;
        let mut pos = i;
        while pos < j {
            let mut l = 0;
            while l + 1 < self.levels.len() {
                let span = FAN.pow(l as u32 + 1);
                if pos.is_multiple_of(span) && pos + span <= j && pos / span < self.levels[l + 1].len() {
                    l += 1;
                } else {
                    break;
                }
            }
            let span = FAN.pow(l as u32);
            let blk = &self.levels[l][pos / span];
            acc = Some(match acc {
                None => blk.clone(),
                Some(a) if self.later_left => blk * &a,
                Some(a) => &a * blk,
            });
            pos += span;
        }
        acc.unwrap_or_else(|| Mat::identity(dim))
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Stepped { fwd: BlockProducts, bwd: BlockProducts },
    Sampled(Cotranslation),
}

/// `Psi(t_i, t_j)` on grid indices `lo..=hi`.
#[derive(Clone, Debug)]
pub struct EvolutionGrid {
    step: f64,
    lo: i64,
    hi: i64,
    dim: usize,
    storage: Storage,
}

/// Grid index of `t`, which must be an integer multiple of `h`.
pub fn grid_index(t: f64, h: f64) -> Result<i64> {
    let i = (t / h).round();
    if !i.is_finite() || (i * h - t).abs() > 1e-9 * t.abs().max(1.0) || i.abs() > 1e15 {
        return Err(Error::Spec(format!("t = {t} is not a multiple of the step {h}")));
    }
    Ok(i as i64)
}

/// Integrates `x' = A(t) x` on `[t0, t1]` with fixed-step RK4.
///
/// The grid covers `t0 + i h` for `i = 0..=floor((t1 - t0) / h)`; `t0` itself
/// must be a multiple of `h`.
pub fn integrate(a: &CoeffFn, t0: f64, t1: f64, h: f64) -> Result<EvolutionGrid> {
    a.validate()?;
    if !(h > 0.0 && h.is_finite() && t0.is_finite() && t1.is_finite()) {
        return Err(Error::Spec("step must be positive and bounds finite".into()));
    }
    let span = (t1 - t0) / h;
    if span > MAX_STEPS as f64 {
        return Err(Error::Spec(format!("(t1 - t0) / h = {span:.0} exceeds {MAX_STEPS}")));
    }
    let n = (span + 1e-9).floor() as i64;
    if n < 1 {
        return Err(Error::Spec("need t1 >= t0 + h".into()));
    }
    let lo = grid_index(t0, h)?;
    let d = a.dim();
    let mut fwd = Vec::with_capacity(n as usize);
    let mut bwd = Vec::with_capacity(n as usize);
    for i in 0..n {
        let t = (lo + i) as f64 * h;
        let u = rk4_step(a, t, h);
        if !u.is_finite() {
            return Err(Error::Divergence(format!("non-finite propagator at step {i} (t = {t})")));
        }
        let inv = u
            .try_inverse(DEFAULT_INV_TOL)
            .map_err(|_| Error::Divergence(format!("singular propagator at step {i} (t = {t})")))?;
        fwd.push(u);
        bwd.push(inv);
    }
    Ok(EvolutionGrid {
        step: h,
        lo,
        hi: lo + n,
        dim: d,
        storage: Storage::Stepped {
            fwd: BlockProducts::build(fwd, true)?,
            bwd: BlockProducts::build(bwd, false)?,
        },
    })
}

impl EvolutionGrid {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time(&self, i: i64) -> f64 {
        i as f64 * self.step
    }

    pub fn group(&self) -> GroupHandle {
        GroupHandle::real_grid(self.step).expect("positive step")
    }

    fn in_range(&self, i: i64) -> Result<()> {
        if i < self.lo || i > self.hi {
            return Err(Error::Range { index: i, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    /// `Psi(t_u, t_v)`.
    pub fn psi(&self, u: i64, v: i64) -> Result<Mat> {
        self.in_range(u)?;
        self.in_range(v)?;
        let m = match &self.storage {
            Storage::Stepped { fwd, bwd } => {
                let (a, b) = ((v - self.lo) as usize, (u - self.lo) as usize);
                match u.cmp(&v) {
                    std::cmp::Ordering::Equal => Mat::identity(self.dim),
                    std::cmp::Ordering::Greater => fwd.product(a, b, self.dim),
                    std::cmp::Ordering::Less => bwd.product(b, a, self.dim),
                }
            }
            Storage::Sampled(z) => z.at(&GroupElement::Int(v), &GroupElement::Int(u - v))?,
        };
        if !m.is_finite() {
            return Err(Error::Divergence(format!("Psi({u}, {v}) is not finite")));
        }
        Ok(m)
    }
}

/// `Z(r, t) = Psi(t + r, r)` over the real grid of `E`.
pub fn cotranslation_of(e: &EvolutionGrid) -> Cotranslation {
    let grid = e.clone();
    let map = PairMap::new(e.group(), e.dim, move |r, t| {
        let (r, t) = (r.as_int().expect("grid"), t.as_int().expect("grid"));
        grid.psi(r.checked_add(t).ok_or(Error::Range { index: i64::MAX, lo: grid.lo, hi: grid.hi })?, r)
    });
    Cotranslation::from_parts(map, CotranslationKind::FromEvolution)
}

/// `Psi(u, v) = Z(v, u - v)` for a cotranslation over a real grid, on indices `lo..=hi`.
pub fn evolution_of(z: &Cotranslation, lo: i64, hi: i64) -> Result<EvolutionGrid> {
    let step = match z.group().kind() {
        GroupKind::RealGrid { step } => *step,
        _ => return Err(Error::Usage("evolution_of needs a cotranslation over a real grid".into())),
    };
    if hi <= lo {
        return Err(Error::Spec("empty grid range".into()));
    }
    Ok(EvolutionGrid { step, lo, hi, dim: z.dim(), storage: Storage::Sampled(z.clone()) })
}

/// Converts a finite-difference width to a whole number of grid steps.
pub fn fd_steps(h_fd: f64, step: f64) -> Result<i64> {
    let k = (h_fd / step).round();
    if k.is_nan() || k < 1.0 || (k * step - h_fd).abs() > 1e-6 * h_fd {
        return Err(Error::Spec(format!("h_fd = {h_fd} is not a positive multiple of the step {step}")));
    }
    Ok(k as i64)
}

fn grid_step(z: &Cotranslation) -> Result<f64> {
    z.group().step().ok_or_else(|| Error::Usage("expected a cotranslation over a real grid".into()))
}

fn zg(z: &Cotranslation, r: i64, t: i64) -> Result<Mat> {
    z.at(&GroupElement::Int(r), &GroupElement::Int(t))
}

fn central(z: &Cotranslation, plus: (i64, i64), minus: (i64, i64), width: f64) -> Result<Mat> {
    Ok((&zg(z, plus.0, plus.1)? - &zg(z, minus.0, minus.1)?).scale(1.0 / width))
}

/// Central-difference `d2 Z(t, 0)` with `k` grid steps on each side.
pub fn infinitesimal_generator(z: &Cotranslation, t: i64, k: i64) -> Result<Mat> {
    let h = grid_step(z)?;
    central(z, (t, k), (t, -k), 2.0 * k as f64 * h)
}

/// Which derivative identity to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeIdentity {
    /// `d1 Z(r,t) = d2 Z(r,t) - Z(r,t) d2 Z(r,0)`
    D1FromD2,
    /// `d2 Z(r,t) = d2 Z(r+t,0) Z(r,t)`
    D2Forward,
    /// `d1 Z^inv = -Z^inv (d1 Z) Z^inv`
    D1Inverse,
    /// `d2 Z^inv = -Z^inv (d2 Z) Z^inv`
    D2Inverse,
    /// `d/dv Psi(u,v) = -Psi(u,v) A(v)` at `u = r + t`, `v = r`
    InitialTime,
}

impl DerivativeIdentity {
    pub const ALL: [DerivativeIdentity; 5] = [
        DerivativeIdentity::D1FromD2,
        DerivativeIdentity::D2Forward,
        DerivativeIdentity::D1Inverse,
        DerivativeIdentity::D2Inverse,
        DerivativeIdentity::InitialTime,
    ];

    pub fn law(self) -> &'static str {
        match self {
            DerivativeIdentity::D1FromD2 => laws::D1_FROM_D2,
            DerivativeIdentity::D2Forward => laws::D2_FORWARD,
            DerivativeIdentity::D1Inverse => laws::D1_INVERSE,
            DerivativeIdentity::D2Inverse => laws::D2_INVERSE,
            DerivativeIdentity::InitialTime => laws::D_INITIAL_TIME,
        }
    }

    pub fn from_law(law: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.law() == law)
    }
}

/// Residual of one identity at grid point `(r, t)` using `k`-step central
/// differences, normalized by `max(1, ||Z(r,t)|| ||Z(r,t)^-1||)`.
pub fn derivative_identity_residual(z: &Cotranslation, which: DerivativeIdentity, r: i64, t: i64, k: i64) -> Result<f64> {
    let w = 2.0 * k as f64 * grid_step(z)?;
    let zrt = zg(z, r, t)?;
    let zinv = zrt.try_inverse(DEFAULT_INV_TOL)?;
    let scale = zrt.op_norm() * zinv.op_norm();
    let d1 = || central(z, (r + k, t), (r - k, t), w);
    let d2 = || central(z, (r, t + k), (r, t - k), w);
    let inv_at = |a: i64, b: i64| zg(z, a, b)?.try_inverse(DEFAULT_INV_TOL);
    let diff = match which {
        DerivativeIdentity::D1FromD2 => {
            let a_r = central(z, (r, k), (r, -k), w)?;
            &d1()? - &(&d2()? - &(&zrt * &a_r))
        }
        DerivativeIdentity::D2Forward => {
            let a_u = central(z, (r + t, k), (r + t, -k), w)?;
            &d2()? - &(&a_u * &zrt)
        }
        DerivativeIdentity::D1Inverse => {
            let lhs = (&inv_at(r + k, t)? - &inv_at(r - k, t)?).scale(1.0 / w);
            &lhs + &(&(&zinv * &d1()?) * &zinv)
        }
        DerivativeIdentity::D2Inverse => {
            let lhs = (&inv_at(r, t + k)? - &inv_at(r, t - k)?).scale(1.0 / w);
            &lhs + &(&(&zinv * &d2()?) * &zinv)
        }
        DerivativeIdentity::InitialTime => {
            // Psi(u, v +- k) = Z(r +- k, t -+ k)
            let lhs = central(z, (r + k, t - k), (r - k, t + k), w)?;
            let a_v = central(z, (r, k), (r, -k), w)?;
            &lhs + &(&zrt * &a_v)
        }
    };
    Ok(normalized(diff.op_norm(), scale))
}

/// Judges a residual suite evaluated at widths `k` and `k / 2`.
///
/// Passes when the residual at `k` is already at the rounding floor, or when
/// halving the width divides it by a factor inside [`RICHARDSON_BAND`].
fn richardson_entry(mut at_k: LawEntry, at_half: f64, k: i64, step: f64, floor: f64) -> LawEntry {
    let ratio = at_k.max_residual / at_half;
    at_k.tolerance = floor;
    at_k = at_k
        .with_detail("h_fd", k as f64 * step)
        .with_detail("residual_half", at_half)
        .with_detail("floor", floor);
    if ratio.is_finite() {
        at_k = at_k.with_detail("richardson_ratio", ratio);
    }
    let second_order = ratio >= RICHARDSON_BAND.0 && ratio <= RICHARDSON_BAND.1;
    at_k.set_verdict(if at_k.max_residual <= floor || second_order { Verdict::Pass } else { Verdict::Fail });
    at_k
}

fn check_even(k: i64) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::Spec(format!("finite-difference width of {k} steps must be even and >= 2")));
    }
    Ok(())
}

/// All five identities at the given `(r, t)` points, each judged by its
/// residual at `k` steps against `k / 2` steps.
pub fn check_derivative_identities(z: &Cotranslation, points: &[(i64, i64)], k: i64, floor: f64) -> Result<VerificationReport> {
    check_even(k)?;
    let step = grid_step(z)?;
    let locs = || points.iter().map(|&(r, t)| vec![GroupElement::Int(r), GroupElement::Int(t)]);
    let mut report = VerificationReport::new();
    for which in DerivativeIdentity::ALL {
        let eval = |kk: i64| {
            sweep(which.law(), floor, locs(), |l| {
                derivative_identity_residual(z, which, l[0].as_int().expect("grid"), l[1].as_int().expect("grid"), kk)
            })
        };
        let full = eval(k)?;
        let half = eval(k / 2)?.max_residual;
        report.push(richardson_entry(full, half, k, step, floor));
    }
    Ok(report)
}

pub fn generator_residual(z: &Cotranslation, a: &CoeffFn, t: i64, k: i64) -> Result<f64> {
    let h = grid_step(z)?;
    Ok(infinitesimal_generator(z, t, k)?.dist(&a.at(t as f64 * h)))
}

/// `||generator(t) - A(t)||` at each point with the Richardson ratio recorded.
/// Judged against `tol` only; the ratio is reported in `details`.
pub fn generator_recovery_check(z: &Cotranslation, a: &CoeffFn, points: &[i64], k: i64, tol: f64) -> Result<LawEntry> {
    check_even(k)?;
    let step = grid_step(z)?;
    let locs = || points.iter().map(|&t| vec![GroupElement::Int(t)]);
    let run = |kk| sweep(laws::GENERATOR_RECOVERY, tol, locs(), |l| generator_residual(z, a, l[0].as_int().expect("grid"), kk));
    let full = run(k)?;
    let half = run(k / 2)?.max_residual;
    let ratio = full.max_residual / half;
    let mut e = full.with_detail("h_fd", k as f64 * step).with_detail("residual_half", half);
    if ratio.is_finite() {
        e = e.with_detail("richardson_ratio", ratio);
    }
    Ok(e)
}

/// `||d/du Psi(u,v) - A(u) Psi(u,v)||` at `(u, v)`.
pub fn solution_residual(e: &EvolutionGrid, a: &CoeffFn, u: i64, v: i64, k: i64) -> Result<f64> {
    let w = 2.0 * k as f64 * e.step;
    let du = (&e.psi(u + k, v)? - &e.psi(u - k, v)?).scale(1.0 / w);
    let p = e.psi(u, v)?;
    Ok(normalized(du.dist(&(&a.at(e.time(u)) * &p)), p.op_norm()))
}

pub fn evolution_cocycle_residual(e: &EvolutionGrid, u: i64, v: i64, w: i64) -> Result<f64> {
    let (a, b) = (e.psi(u, v)?, e.psi(v, w)?);
    Ok(normalized((&a * &b).dist(&e.psi(u, w)?), a.op_norm() * b.op_norm()))
}

pub fn closed_form_residual(e: &EvolutionGrid, a: &CoeffFn, u: i64, v: i64) -> Result<f64> {
    let exact = a
        .closed_form(e.time(u), e.time(v))
        .ok_or_else(|| Error::Usage("coefficient has no closed form".into()))?;
    Ok(e.psi(u, v)?.dist(&exact))
}

/// Seeded grid index tuples in `[lo + margin, hi - margin]`.
pub fn sample_indices<const N: usize>(lo: i64, hi: i64, margin: i64, count: usize, seed: u64) -> Result<Vec<[i64; N]>> {
    let (a, b) = (lo + margin, hi - margin);
    if a > b {
        return Err(Error::Spec(format!("grid [{lo}, {hi}] too short for a margin of {margin} steps")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| std::array::from_fn(|_| rng.gen_range(a..=b))).collect())
}

/// `(r, t)` points with `r` and `r + t` both in `[lo + margin, hi - margin]`.
pub fn sample_rt_points(lo: i64, hi: i64, margin: i64, count: usize, seed: u64) -> Result<Vec<(i64, i64)>> {
    Ok(sample_indices::<2>(lo, hi, margin, count, seed)?.into_iter().map(|[r, u]| (r, u - r)).collect())
}

/// Unit law, cocycle on seeded triples, and (where available) the analytic
/// propagator on seeded pairs.
pub fn evolution_report(
    e: &EvolutionGrid,
    a: &CoeffFn,
    samples: usize,
    seed: u64,
    tol: &dyn Fn(&str) -> f64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    let singles = sample_indices::<1>(e.lo, e.hi, 0, samples, seed)?;
    report.push(sweep(laws::EVOLUTION_UNIT, tol(laws::EVOLUTION_UNIT), singles.iter().map(|[u]| vec![GroupElement::Int(*u)]), |l| {
        let u = l[0].as_int().expect("grid");
        Ok(e.psi(u, u)?.dist(&Mat::identity(e.dim)))
    })?);
    let triples = sample_indices::<3>(e.lo, e.hi, 0, samples, seed ^ 1)?;
    report.push(sweep(
        laws::EVOLUTION_COCYCLE,
        tol(laws::EVOLUTION_COCYCLE),
        triples.iter().map(|t| t.iter().map(|&i| GroupElement::Int(i)).collect()),
        |l| evolution_cocycle_residual(e, l[0].as_int().expect("grid"), l[1].as_int().expect("grid"), l[2].as_int().expect("grid")),
    )?);
    if a.closed_form(0.0, 0.0).is_some() {
        let pairs = sample_indices::<2>(e.lo, e.hi, 0, samples, seed ^ 2)?;
        report.push(sweep(
            laws::CLOSED_FORM,
            tol(laws::CLOSED_FORM),
            pairs.iter().map(|p| p.iter().map(|&i| GroupElement::Int(i)).collect()),
            |l| closed_form_residual(e, a, l[0].as_int().expect("grid"), l[1].as_int().expect("grid")),
        )?);
    }
    Ok(report)
}

/// Result of the joint-difference probe. Informational only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentiabilityProbe {
    pub max_residual: f64,
    pub max_residual_half: f64,
    pub ratio: Option<f64>,
    pub argmax: Option<(i64, i64)>,
    /// Residuals at the rounding floor, or shrinking at least threefold per halving.
    pub smooth: bool,
}

fn joint_residual(z: &Cotranslation, r: i64, t: i64, s: i64) -> Result<f64> {
    let w = 2.0 * s as f64 * grid_step(z)?;
    let d1 = central(z, (r + s, t), (r - s, t), w)?;
    let d2 = central(z, (r, t + s), (r, t - s), w)?;
    let mut worst: f64 = 0.0;
    for (a, b) in [(1i64, 1i64), (1, -1)] {
        let joint = central(z, (r + a * s, t + b * s), (r - a * s, t - b * s), w)?;
        let lin = &d1.scale(a as f64) + &d2.scale(b as f64);
        worst = worst.max(joint.dist(&lin) / 2.0);
    }
    Ok(worst)
}

/// Compares symmetric joint differences along diagonal rays with the
/// linearization from the partial differences, at `k` and `k / 2` steps.
/// Axis-aligned rays agree with the partials by construction and are omitted.
pub fn two_variable_differentiability_probe(z: &Cotranslation, points: &[(i64, i64)], k: i64) -> Result<DifferentiabilityProbe> {
    check_even(k)?;
    let run = |s: i64| -> Result<(f64, Option<(i64, i64)>)> {
        let mut best = (0.0f64, None);
        for &(r, t) in points {
            let v = joint_residual(z, r, t, s)?;
            if best.1.is_none() || v > best.0 {
                best = (v, Some((r, t)));
            }
        }
        Ok(best)
    };
    let (full, argmax) = run(k)?;
    let (half, _) = run(k / 2)?;
    let ratio = (half > 0.0).then(|| full / half);
    let smooth = full <= 1e-9 || ratio.is_some_and(|q| q >= 3.0);
    Ok(DifferentiabilityProbe { max_residual: full, max_residual_half: half, ratio, argmax, smooth })
}

/// Dumps `Psi(t_i, t_lo)` rows as `t, m00, m01, ...`.
pub fn trajectory_rows(e: &EvolutionGrid, stride: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut i = e.lo;
    while i <= e.hi {
        let mut row = vec![e.time(i)];
        row.extend_from_slice(e.psi(i, e.lo)?.data());
        rows.push(row);
        i += stride.max(1) as i64;
    }
    Ok(rows)
}

/// Entry-wise comparison of two grids on seeded index pairs.
pub fn grid_deviation(a: &EvolutionGrid, b: &EvolutionGrid, samples: usize, seed: u64) -> Result<f64> {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    let mut worst: f64 = 0.0;
    for [u, v] in sample_indices::<2>(lo, hi, 0, samples, seed)? {
        let (x, y) = (a.psi(u, v)?, b.psi(u, v)?);
        worst = worst.max(x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Summary numbers of a derivative-identity report, keyed by law.
pub fn richardson_summary(report: &VerificationReport) -> BTreeMap<String, (f64, Option<f64>)> {
    report
        .entries
        .iter()
        .map(|e| (e.law.clone(), (e.max_residual, e.details.get("richardson_ratio").copied())))
        .collect()
}
