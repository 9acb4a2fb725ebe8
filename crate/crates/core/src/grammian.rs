//! Finite- and infinite-horizon controllability Grammians.
//!
//! Three routes to the same object, kept deliberately separate so they can
//! referee each other:
//! - the defining series `G_N = sum A^i B (A^i B)^T`, accumulated in the
//!   original basis with compensated summation;
//! - closed-form entries in the eigen-space from a diagonal form, finite or
//!   infinite horizon;
//! - similarity transforms moving a Grammian between the two bases.
//!
//! Eigen-space Grammians are stored Hermitian with the pairing
//! `G_ij = bhat_i * conj(bhat_j) / (1 - lambda_i * conj(lambda_j))`, which is
//! exactly `P^{-1} G (P^{-1})^H` and keeps the matrix real on the diagonal
//! for conjugate-closed spectra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Basis, DiagonalForm, GrammianResult, Horizon, LdtSystem, Spectrum, HORIZON_CAP};

/// Transform condition estimate above which a warning is attached.
const CONDITION_WARN: f64 = 1e12;

/// Pairs with `|1 - lambda_i lambda_j|` below this are treated as resonant.
const RESONANCE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformDirection {
    ToEigen,
    ToOriginal,
}

/// `G_N` by direct summation of the defining series, original basis.
///
/// Terms are added in ascending `i` with Kahan compensation per entry, so
/// stable systems lose nothing to the long convergent tail.
pub fn finite_series(sys: &LdtSystem, horizon: u64) -> Result<GrammianResult> {
    if horizon == 0 || horizon > HORIZON_CAP {
        return Err(Error::HorizonOutOfRange {
            n: horizon,
            cap: HORIZON_CAP,
        });
    }
    let n = sys.n();
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut comp = DMatrix::<f64>::zeros(n, n);
    let mut powers = sys.b().clone();
    for step in 0..horizon {
        if step > 0 {
            powers = sys.a() * &powers;
        }
        if !powers.iter().all(|v| v.is_finite()) {
            return Err(Error::Overflow);
        }
        let term = &powers * powers.transpose();
        for j in 0..n {
            for i in 0..n {
                let y = term[(i, j)] - comp[(i, j)];
                let t = sum[(i, j)] + y;
                comp[(i, j)] = (t - sum[(i, j)]) - y;
                sum[(i, j)] = t;
            }
        }
    }
    if !sum.iter().all(|v| v.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(GrammianResult::from_real(
        sum,
        Horizon::Finite(horizon),
        Basis::Original,
    ))
}

/// Closed-form finite-horizon Grammian in the eigen-space:
/// `G_ij = bhat_i conj(bhat_j) (1 - (lambda_i conj(lambda_j))^N) / (1 - lambda_i conj(lambda_j))`.
pub fn closed_form_finite(diag: &DiagonalForm, horizon: u64) -> Result<GrammianResult> {
    if horizon == 0 || horizon > HORIZON_CAP {
        return Err(Error::HorizonOutOfRange {
            n: horizon,
            cap: HORIZON_CAP,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let g = eigen_entries(diag, |i, j, z| {
        if (one - z).norm() < RESONANCE_TOL {
            return Err(Error::ResonantPair { i, j });
        }
        let zn = z.powu(horizon as u32);
        if !zn.re.is_finite() || !zn.im.is_finite() {
            return Err(Error::Overflow);
        }
        Ok((one - zn) / (one - z))
    })?;
    Ok(GrammianResult::new(
        g,
        Horizon::Finite(horizon),
        Basis::Eigen,
    ))
}

/// Infinite-horizon eigen-space Grammian; exists only for stable spectra.
pub fn infinite_grammian(diag: &DiagonalForm) -> Result<GrammianResult> {
    if !diag.stable() {
        return Err(Error::Unstable {
            spectral_radius: diag.spectral_radius(),
        });
    }
    let g = eigen_entries(diag, |_, _, z| Ok((Complex64::new(1.0, 0.0) - z).inv()))?;
    Ok(GrammianResult::new(g, Horizon::Infinite, Basis::Eigen))
}

/// Builds the Hermitian eigen-space matrix with entries
/// `bhat_i conj(bhat_j) * kernel(lambda_i conj(lambda_j))`.
fn eigen_entries(
    diag: &DiagonalForm,
    kernel: impl Fn(usize, usize, Complex64) -> Result<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n = diag.n();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = diag.lambdas[i] * diag.lambdas[j].conj();
            let factor = kernel(i, j, z)?;
            let entry = diag.bhat[i] * diag.bhat[j].conj() * factor;
            if i == j {
                g[(i, i)] = Complex64::new(entry.re, 0.0);
            } else {
                g[(i, j)] = entry;
                g[(j, i)] = entry.conj();
            }
        }
    }
    Ok(g)
}

/// Moves a Grammian between original and eigen coordinates through the
/// unit-eigenvector transform `P`: `Gbar = P^{-1} G P^{-H}`, inverse
/// `G = P Gbar P^H`. `det G = |det P|^2 det Gbar` either way.
///
/// An ill-conditioned `P` (estimate above 1e12) attaches a warning to the
/// result instead of failing.
pub fn transform_grammian(
    g: &GrammianResult,
    spec: &Spectrum,
    direction: TransformDirection,
) -> Result<GrammianResult> {
    let (target, ok) = match direction {
        TransformDirection::ToEigen => (Basis::Eigen, g.basis() == Basis::Original),
        TransformDirection::ToOriginal => (Basis::Original, g.basis() == Basis::Eigen),
    };
    if !ok {
        return Err(Error::BasisMismatch);
    }
    let p = &spec.right_eigenvectors;
    let transformed = match direction {
        TransformDirection::ToEigen => {
            let lu = p.clone().lu();
            let x = lu.solve(g.matrix()).ok_or(Error::SingularTransform)?;
            let y = lu.solve(&x.adjoint()).ok_or(Error::SingularTransform)?;
            y.adjoint()
        }
        TransformDirection::ToOriginal => p * g.matrix() * p.adjoint(),
    };
    // symmetrize away the rounding skew of the two-sided product
    let hermitian = (&transformed + transformed.adjoint()) * Complex64::new(0.5, 0.0);
    let warning = (spec.p_condition > CONDITION_WARN).then(|| {
        format!(
            "transform matrix is ill-conditioned (estimate {:.3e})",
            spec.p_condition
        )
    });
    Ok(GrammianResult::new(hermitian, g.horizon(), target).with_warning(warning))
}
