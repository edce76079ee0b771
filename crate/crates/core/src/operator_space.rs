//! Hermitian operators on a finite-dimensional Hilbert space, their
//! signatures, membership in the sets F^{p,q}, and the Hilbert–Schmidt
//! geometry used to compare operator clouds.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

/// A finite Hermitian matrix with a lazily cached spectrum.
///
/// The entries are symmetrized as `(x + x*)/2` on construction, so
/// `entries[(i, j)] == entries[(j, i)].conj()` holds bit for bit.
pub struct HermitianOperator {
    entries: CMat,
    spectrum: OnceLock<Vec<f64>>,
}

impl HermitianOperator {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidOperator(format!(
                "matrix is {}x{}, not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidOperator("empty matrix".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidOperator("non-finite entry".into()));
        }
        Ok(Self::from_matrix_unchecked(linalg::hermitian_part(&entries)))
    }

    /// Skips validation; the caller guarantees `entries` is exactly Hermitian.
    pub(crate) fn from_matrix_unchecked(entries: CMat) -> Self {
        Self {
            entries,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Result<Self> {
        Self::new(linalg::diag_real(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(CMat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> &[f64] {
        self.spectrum.get_or_init(|| {
            let mut vals = linalg::eigvalsh(&self.entries).unwrap_or_else(|_| vec![f64::NAN; self.dim()]);
            vals.reverse();
            vals
        })
    }

    /// Spectral norm, i.e. the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.spectrum().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(&self.entries)
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_matrix_unchecked(self.entries.scale(factor))
    }
}

impl Clone for HermitianOperator {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            entries: self.entries.clone(),
            spectrum,
        }
    }
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("entries", &self.entries)
            .finish()
    }
}

impl PartialEq for HermitianOperator {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

/// Counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_zero: usize,
}

impl Signature {
    pub fn dim(&self) -> usize {
        self.n_pos + self.n_neg + self.n_zero
    }

    pub fn rank(&self) -> usize {
        self.n_pos + self.n_neg
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {} zero)", self.n_pos, self.n_neg, self.n_zero)
    }
}

/// The pair (p, q) selecting F^{p,q}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SignatureBound {
    pub p: usize,
    pub q: usize,
}

impl SignatureBound {
    pub fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }

    pub fn rank(&self) -> usize {
        self.p + self.q
    }

    /// Componentwise maximum.
    pub fn join(self, other: Self) -> Self {
        Self {
            p: self.p.max(other.p),
            q: self.q.max(other.q),
        }
    }
}

/// Classify eigenvalues against `tol · ‖op‖` (spectral norm), or against
/// `tol` itself when `op` is the zero operator.
pub fn signature(op: &HermitianOperator, tol: f64) -> Result<Signature> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgs(format!("tolerance must be >= 0, got {tol}")));
    }
    let spectrum = op.spectrum();
    if spectrum.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidOperator("spectrum is not finite".into()));
    }
    Ok(classify(spectrum, tol))
}

pub(crate) fn classify(spectrum: &[f64], tol: f64) -> Signature {
    let norm = spectrum.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let threshold = if norm > 0.0 { tol * norm } else { tol };
    let n_pos = spectrum.iter().filter(|&&v| v > threshold).count();
    let n_neg = spectrum.iter().filter(|&&v| v < -threshold).count();
    Signature {
        n_pos,
        n_neg,
        n_zero: spectrum.len() - n_pos - n_neg,
    }
}

/// Result of a membership test against F^{p,q}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    /// Exactly `p` positive and `q` negative eigenvalues.
    pub regular: bool,
    pub signature: Signature,
}

pub fn in_fpq(op: &HermitianOperator, bound: SignatureBound, tol: f64) -> Result<Membership> {
    let signature = signature(op, tol)?;
    let member = signature.n_pos <= bound.p && signature.n_neg <= bound.q;
    Ok(Membership {
        member,
        regular: member && signature.n_pos == bound.p && signature.n_neg == bound.q,
        signature,
    })
}

fn check_same_dim(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Hilbert–Schmidt inner product `trace(a b)`.
pub fn hs_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(hs_inner_unchecked(a.entries(), b.entries()))
}

/// `trace(a b)` for Hermitian `a`, `b`: the sum of `a_ij * conj(b_ij)`.
pub(crate) fn hs_inner_unchecked(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Hilbert–Schmidt distance `‖a − b‖_HS`.
pub fn hs_dist(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(hs_dist_unchecked(a.entries(), b.entries()))
}

pub(crate) fn hs_dist_unchecked(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `u · op · u*` for a unitary `u`.
pub fn conjugate(u: &CMat, op: &HermitianOperator) -> Result<HermitianOperator> {
    if u.nrows() != op.dim() || u.ncols() != op.dim() {
        return Err(Error::DimMismatch {
            expected: op.dim(),
            found: u.nrows(),
        });
    }
    linalg::ensure_unitary(u)?;
    Ok(conjugate_unchecked(u, op))
}

pub(crate) fn conjugate_unchecked(u: &CMat, op: &HermitianOperator) -> HermitianOperator {
    let m = u * op.entries() * u.adjoint();
    HermitianOperator::from_matrix_unchecked(linalg::hermitian_part(&m))
}

/// Real dimension `2f(p+q) − (p+q)²` of the regular stratum of F^{p,q}.
pub fn fpq_dimension(f: usize, bound: SignatureBound) -> Result<usize> {
    let r = bound.rank();
    if r == 0 {
        return Err(Error::InvalidArgs("p + q must be at least 1".into()));
    }
    if f < r {
        return Err(Error::InvalidArgs(format!(
            "Hilbert dimension {f} is smaller than p + q = {r}"
        )));
    }
    Ok(2 * f * r - r * r)
}

/// Estimate the dimension of the regular stratum numerically.
///
/// Parametrizes `x = V D V*` with `V` an `f × (p+q)` complex matrix and `D`
/// a real invertible diagonal of signature (p, q), then takes the rank of
/// the differential at a random point. Columns of the Jacobian are central
/// differences along each real parameter; the map is quadratic in `V` and
/// linear in `D`, so these are exact up to rounding. Singular values above
/// `1e-6 · σ_max` count towards the rank. A draw whose singular values fall
/// in the ambiguous band `(1e-9, 1e-3) · σ_max`, or whose `V` is close to
/// rank deficient, is discarded and redrawn.
pub fn fpq_rank_check(f: usize, bound: SignatureBound, trials: usize, seed: u64) -> Result<usize> {
    let r = bound.rank();
    if r == 0 || f < r {
        return Err(Error::InvalidArgs(format!(
            "need f >= p + q >= 1, got f = {f}, p + q = {r}"
        )));
    }
    for attempt in 0..trials.max(1) {
        let mut rng = linalg::seeded_rng(linalg::sub_seed(seed, attempt as u64));
        if let Some(rank) = rank_at_random_point(f, bound, &mut rng)? {
            return Ok(rank);
        }
    }
    Err(Error::NumericalFailure(format!(
        "no non-degenerate draw in {trials} trials for f = {f}, (p, q) = ({}, {})",
        bound.p, bound.q
    )))
}

fn rank_at_random_point<R: Rng>(f: usize, bound: SignatureBound, rng: &mut R) -> Result<Option<usize>> {
    let r = bound.rank();
    let v = CMat::from_fn(f, r, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let d: Vec<f64> = (0..r)
        .map(|i| {
            let mag = rng.random_range(0.5..2.0);
            if i < bound.p {
                mag
            } else {
                -mag
            }
        })
        .collect();

    let v_sv = v.clone().singular_values();
    let (v_max, v_min) = v_sv
        .iter()
        .fold((0.0_f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if v_min < 1e-6 * v_max {
        return Ok(None);
    }

    let n_params = 2 * f * r + r;
    let step = 1e-3;
    let eval = |v: &CMat, d: &[f64]| -> Vec<f64> {
        let x = v * linalg::diag_real(d) * v.adjoint();
        flatten_hermitian(&x)
    };
    let mut jac = DMatrix::<f64>::zeros(f * f, n_params);
    for param in 0..n_params {
        let mut v_plus = v.clone();
        let mut v_minus = v.clone();
        let mut d_plus = d.clone();
        let mut d_minus = d.clone();
        if param < 2 * f * r {
            let entry = param / 2;
            let (row, col) = (entry / r, entry % r);
            let delta = if param % 2 == 0 { c(step, 0.0) } else { c(0.0, step) };
            v_plus[(row, col)] += delta;
            v_minus[(row, col)] -= delta;
        } else {
            let k = param - 2 * f * r;
            d_plus[k] += step;
            d_minus[k] -= step;
        }
        let plus = eval(&v_plus, &d_plus);
        let minus = eval(&v_minus, &d_minus);
        for (row, (a, b)) in plus.iter().zip(&minus).enumerate() {
            jac[(row, param)] = (a - b) / (2.0 * step);
        }
    }
    let sv = jac.singular_values();
    let s_max = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
    if s_max == 0.0 {
        return Ok(None);
    }
    if sv.iter().any(|&s| s > 1e-9 * s_max && s < 1e-3 * s_max) {
        return Ok(None);
    }
    Ok(Some(sv.iter().filter(|&&s| s > 1e-6 * s_max).count()))
}

/// Real coordinates of a Hermitian matrix: the diagonal, then real and
/// imaginary parts of the strict upper triangle.
fn flatten_hermitian(x: &CMat) -> Vec<f64> {
    let n = x.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(x[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z: Complex64 = x[(i, j)];
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}
