//! Dense complex linear algebra helpers shared by the rest of the crate.
//!
//! All randomness goes through [`seeded_rng`], a ChaCha8 stream keyed by a
//! `u64` seed, so every randomized routine is reproducible across platforms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;

/// Deterministic generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent sub-seed, e.g. for retry `attempt` of a search.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order with matching eigenvector columns.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// (m + m*)/2
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).unscale(2.0)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `u u* - I`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    if u.ncols() != n {
        return f64::INFINITY;
    }
    frobenius(&(u * u.adjoint() - CMat::identity(n, n)))
}

/// Accepts `u` when `‖u u* − I‖ ≤ 1e-10 · dim`.
pub fn ensure_unitary(u: &CMat) -> Result<()> {
    let deviation = unitarity_defect(u);
    let n = u.nrows().max(1) as f64;
    if deviation.is_finite() && deviation <= 1e-10 * n {
        Ok(())
    } else {
        Err(Error::NotUnitary { deviation })
    }
}

/// Haar-distributed random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix with standard normal entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| {
        c(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    hermitian_part(&g)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Rotate a vector so its largest-magnitude entry is real and positive.
/// The first entry wins ties.
pub fn canonical_phase(v: DVector<Complex64>) -> DVector<Complex64> {
    let mut pivot = c(0.0, 0.0);
    for z in v.iter() {
        if z.norm() > pivot.norm() {
            pivot = *z;
        }
    }
    if pivot.norm() > 0.0 {
        v * (pivot.conj() / pivot.norm())
    } else {
        v
    }
}

/// Unitary polar factor of `m`: the nearest unitary to `m` in Frobenius norm.
pub fn nearest_unitary(m: &CMat) -> Result<CMat> {
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::NumericalFailure("SVD returned no singular vectors".into()));
    };
    Ok(u * v_t)
}
