//! Eigendecomposition of the state matrix and the diagonal canonical form.
//!
//! Eigenvalues come from the real Schur form; eigenvectors are recovered by
//! shifted inverse iteration on the complex LU factorization, which meets the
//! residual contract `||A p - lambda p|| <= 1e-10 ||A||` for spectra above
//! the distinctness threshold. Left eigenvectors are computed from `A^T` and
//! re-paired to the eigenvalues by nearest match.
//!
//! Conventions, chosen for reproducibility:
//! - eigenvalues sorted by (real part, imaginary part) ascending, conjugate
//!   pairs adjacent with the negative-imaginary member first;
//! - every eigenvector scaled so its largest-magnitude entry is real and
//!   positive;
//! - vectors of a conjugate pair are exact conjugates of each other.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{distinctness_threshold, to_complex, DiagonalForm, LdtSystem, Spectrum};

/// Residual target for accepted eigenpairs, relative to `||A||`.
const RESIDUAL_TOL: f64 = 1e-10;

/// Normalization convention identifier recorded on every [`DiagonalForm`]
/// produced here: `bhat` is the transformed input of the similarity by the
/// unit-right-eigenvector matrix, i.e. `bhat = P^{-1} B`.
pub const BASIS_NOTE: &str =
    "bhat = P^{-1} B with unit right eigenvectors, largest entry real positive";

/// Eigendecomposition of the state matrix with unit right/left eigenvectors.
///
/// Fails when eigenvalues fall below the distinctness threshold (Jordan
/// blocks are out of scope) or when the Schur iteration does not converge.
pub fn decompose(sys: &LdtSystem) -> Result<Spectrum> {
    let a = sys.a();
    let n = sys.n();
    let fro = a.norm();

    let eigenvalues = canonical_eigenvalues(a)?;
    let spectral_radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let min_separation = min_pairwise_distance(&eigenvalues);
    let threshold = distinctness_threshold(spectral_radius);
    if n > 1 && min_separation <= threshold {
        return Err(Error::RepeatedEigenvalues {
            separation: min_separation,
            threshold,
        });
    }

    let ac = to_complex(a);
    let right = eigenvector_set(&ac, &eigenvalues, fro)?;

    // Left eigenvectors: right eigenvectors of A^T at the nearest-matching
    // eigenvalue of A^T, stored as rows.
    let at = to_complex(&a.transpose());
    let eigs_t = canonical_eigenvalues(&a.transpose())?;
    let shifts = repair_by_nearest(&eigenvalues, &eigs_t);
    let left_cols = eigenvector_set(&at, &shifts, fro)?;
    let left = left_cols.transpose();

    let lu = right.clone().lu();
    let det_p = lu.determinant();
    let p_inv = lu.try_inverse().ok_or(Error::SingularTransform)?;
    let p_condition = right.norm() * p_inv.norm();

    Ok(Spectrum {
        stable: eigenvalues.iter().all(|l| l.norm() < 1.0),
        eigenvalues,
        right_eigenvectors: right,
        left_eigenvectors: left,
        det_p,
        min_separation,
        p_condition,
    })
}

/// Diagonal canonical form of a single-input system: `bhat = P^{-1} B`.
///
/// Conjugate eigenvalue pairs carry exactly conjugate `bhat` entries and
/// real eigenvalues carry exactly real ones.
pub fn to_diagonal_form(sys: &LdtSystem, spec: &Spectrum) -> Result<DiagonalForm> {
    let b = sys.single_input()?;
    let bc = DVector::from_iterator(b.len(), b.iter().map(|&v| Complex64::new(v, 0.0)));
    let lu = spec.right_eigenvectors.clone().lu();
    let solved = lu.solve(&bc).ok_or(Error::SingularTransform)?;
    let mut bhat: Vec<Complex64> = solved.iter().copied().collect();

    let scale = spec.spectral_radius().max(1.0);
    let mut i = 0;
    while i < bhat.len() {
        let l = spec.eigenvalues[i];
        if l.im.abs() <= 1e-12 * scale {
            bhat[i] = Complex64::new(bhat[i].re, 0.0);
            i += 1;
        } else {
            // pair layout is (-im, +im); enforce exact conjugation
            let mean = 0.5 * (bhat[i] + bhat[i + 1].conj());
            bhat[i] = mean;
            bhat[i + 1] = mean.conj();
            i += 2;
        }
    }

    Ok(DiagonalForm::new(spec.eigenvalues.clone(), bhat, BASIS_NOTE))
}

/// Eigenvalues via the real Schur form, sorted and conjugate-paired.
fn canonical_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or(Error::EigNonConvergence)?;
    let raw: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let scale = raw.iter().map(|l| l.norm()).fold(0.0, f64::max).max(1.0);

    let mut sorted = raw;
    sorted.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());

    // Pair complex eigenvalues with their conjugates and symmetrize exactly.
    let mut out = Vec::with_capacity(sorted.len());
    let mut used = vec![false; sorted.len()];
    for i in 0..sorted.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let l = sorted[i];
        if l.im.abs() <= 1e-12 * scale {
            out.push(Complex64::new(l.re, 0.0));
            continue;
        }
        let mut partner = None;
        let mut best = f64::INFINITY;
        for (j, cand) in sorted.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (cand - l.conj()).norm();
            if d < best {
                best = d;
                partner = Some(j);
            }
        }
        let j = partner
            .filter(|_| best <= 1e-8 * scale)
            .ok_or(Error::EigNonConvergence)?;
        used[j] = true;
        let mean = 0.5 * (l + sorted[j].conj());
        let low = Complex64::new(mean.re, -mean.im.abs());
        out.push(low);
        out.push(low.conj());
    }
    out.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    Ok(out)
}

/// For each wanted eigenvalue, the nearest candidate (ties by index order).
fn repair_by_nearest(wanted: &[Complex64], candidates: &[Complex64]) -> Vec<Complex64> {
    let mut used = vec![false; candidates.len()];
    wanted
        .iter()
        .map(|w| {
            let mut best = f64::INFINITY;
            let mut pick = 0;
            for (j, c) in candidates.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let d = (c - w).norm();
                if d < best {
                    best = d;
                    pick = j;
                }
            }
            used[pick] = true;
            candidates[pick]
        })
        .collect()
}

/// Unit eigenvectors for every listed eigenvalue, columns in list order.
/// Conjugate pairs are solved once and mirrored.
fn eigenvector_set(
    ac: &DMatrix<Complex64>,
    eigenvalues: &[Complex64],
    fro: f64,
) -> Result<DMatrix<Complex64>> {
    let n = ac.nrows();
    let scale = fro.max(1.0);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut i = 0;
    while i < eigenvalues.len() {
        let l = eigenvalues[i];
        if l.im == 0.0 {
            let mut v = inverse_iteration(ac, l, scale)?;
            realize(&mut v);
            fix_phase(&mut v);
            m.set_column(i, &v);
            i += 1;
        } else {
            let mut v = inverse_iteration(ac, l, scale)?;
            fix_phase(&mut v);
            m.set_column(i, &v);
            m.set_column(i + 1, &v.map(|z| z.conj()));
            i += 2;
        }
    }
    Ok(m)
}

/// Shifted inverse iteration. The Schur eigenvalue is accurate to machine
/// precision, so one or two solves against the nearly singular shift reach
/// the residual target; an exactly singular shift is nudged off by
/// `1e-13 * scale` and retried.
fn inverse_iteration(
    ac: &DMatrix<Complex64>,
    lambda: Complex64,
    scale: f64,
) -> Result<DVector<Complex64>> {
    let n = ac.nrows();
    let start = DVector::from_element(n, Complex64::new(1.0, 0.0) / (n as f64).sqrt());
    let mut shift = lambda;
    let mut best: Option<(DVector<Complex64>, f64)> = None;

    'attempts: for attempt in 0..4 {
        let mut shifted = ac.clone();
        for k in 0..n {
            shifted[(k, k)] -= shift;
        }
        let lu = shifted.lu();
        let mut v = start.clone();
        for _ in 0..6 {
            let w = match lu.solve(&v) {
                Some(w) if w.norm().is_finite() && w.norm() > 0.0 => w,
                _ => {
                    shift = lambda + Complex64::new(1e-13 * scale * (attempt + 1) as f64, 0.0);
                    continue 'attempts;
                }
            };
            v = w.normalize();
            let residual = (ac * &v - v.map(|z| z * lambda)).norm();
            if best.as_ref().map_or(true, |(_, r)| residual < *r) {
                best = Some((v.clone(), residual));
            }
            if residual <= 1e-13 * scale {
                break 'attempts;
            }
        }
        if best.as_ref().map_or(false, |(_, r)| *r <= RESIDUAL_TOL * scale) {
            break;
        }
        shift = lambda + Complex64::new(1e-13 * scale * (attempt + 1) as f64, 0.0);
    }

    match best {
        Some((v, residual)) if residual <= RESIDUAL_TOL * scale => Ok(v),
        _ => Err(Error::EigNonConvergence),
    }
}

/// Strips the (noise-level) imaginary part of a vector belonging to a real
/// eigenvalue and renormalizes.
fn realize(v: &mut DVector<Complex64>) {
    for z in v.iter_mut() {
        *z = Complex64::new(z.re, 0.0);
    }
    let norm = v.norm();
    if norm > 0.0 {
        *v /= Complex64::new(norm, 0.0);
    }
}

/// Rotates the vector so its largest-magnitude entry (lowest index on ties)
/// is real and positive.
fn fix_phase(v: &mut DVector<Complex64>) {
    let mut idx = 0;
    let mut mag = 0.0;
    for (k, z) in v.iter().enumerate() {
        if z.norm() > mag {
            mag = z.norm();
            idx = k;
        }
    }
    if mag > 0.0 {
        let phase = v[idx] / mag;
        for z in v.iter_mut() {
            *z *= phase.conj();
        }
        v[idx] = Complex64::new(mag, 0.0);
    }
}

fn min_pairwise_distance(eigs: &[Complex64]) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            min = min.min((eigs[i] - eigs[j]).norm());
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn companion() -> LdtSystem {
        LdtSystem::new(
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.432, -1.74, 2.3]),
            DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    fn rotation_scale(a: f64) -> LdtSystem {
        LdtSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.8, -a, a, 0.8]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn companion_eigenvalues() {
        let spec = decompose(&companion()).unwrap();
        let expected = [0.6, 0.8, 0.9];
        for (l, e) in spec.eigenvalues.iter().zip(expected) {
            assert_relative_eq!(l.re, e, max_relative = 1e-9);
            assert!(l.im.abs() < 1e-12);
        }
        assert!(spec.stable);
    }

    #[test]
    fn diagonal_matrix_gives_signed_permutation() {
        let sys = LdtSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let spec = decompose(&sys).unwrap();
        assert_relative_eq!(spec.eigenvalues[0].re, -0.5, max_relative = 1e-12);
        assert_relative_eq!(spec.eigenvalues[1].re, 0.5, max_relative = 1e-12);
        // columns are +- coordinate axes; the sign convention makes them +.
        for j in 0..2 {
            let col = spec.right_eigenvectors.column(j);
            let mut ones = 0;
            for z in col.iter() {
                assert!(z.im.abs() < 1e-14);
                if (z.re - 1.0).abs() < 1e-12 {
                    ones += 1;
                } else {
                    assert!(z.re.abs() < 1e-12);
                }
            }
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn rotation_scale_pair() {
        let spec = decompose(&rotation_scale(0.3)).unwrap();
        assert_relative_eq!(spec.eigenvalues[0].re, 0.8, max_relative = 1e-12);
        assert_relative_eq!(spec.eigenvalues[0].im, -0.3, max_relative = 1e-12);
        assert_eq!(spec.eigenvalues[1], spec.eigenvalues[0].conj());
    }

    #[test]
    fn repeated_eigenvalues_rejected() {
        let sys = LdtSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            decompose(&sys),
            Err(Error::RepeatedEigenvalues { .. })
        ));
    }

    #[test]
    fn companion_bhat_proportional_to_reported_values() {
        let sys = companion();
        let spec = decompose(&sys).unwrap();
        let diag = to_diagonal_form(&sys, &spec).unwrap();
        assert_eq!(diag.basis_note, BASIS_NOTE);
        let reported = [2.034, 7.158, 5.235];
        let ratios: Vec<f64> = diag
            .bhat
            .iter()
            .zip(reported)
            .map(|(b, t)| b.norm() / t)
            .collect();
        for r in &ratios[1..] {
            assert_relative_eq!(*r, ratios[0], max_relative = 1e-3);
        }
    }

    #[test]
    fn diagonal_system_bhat_is_unit() {
        let sys = LdtSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let spec = decompose(&sys).unwrap();
        let diag = to_diagonal_form(&sys, &spec).unwrap();
        for b in &diag.bhat {
            assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-12);
            assert_eq!(b.im, 0.0);
        }
    }

    #[test]
    fn rotation_scale_bhat_has_unit_modulus() {
        // hand eigenvectors of the rotation-scale matrix are (1, -i)/sqrt(2)
        // and its conjugate, so |bhat_i| = 1 for B = (1,1)^T
        let sys = rotation_scale(0.3);
        let spec = decompose(&sys).unwrap();
        let diag = to_diagonal_form(&sys, &spec).unwrap();
        for b in &diag.bhat {
            assert_relative_eq!(b.norm(), 1.0, max_relative = 1e-10);
        }
        assert_eq!(diag.bhat[0], diag.bhat[1].conj());
    }

    #[test]
    fn multi_input_rejected_by_diagonal_form() {
        let sys = LdtSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let spec = decompose(&sys).unwrap();
        assert!(matches!(
            to_diagonal_form(&sys, &spec),
            Err(Error::MultiInput { inputs: 2 })
        ));
    }

    fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> LdtSystem {
        loop {
            let mut a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let radius = a
                .complex_eigenvalues()
                .iter()
                .map(|l| l.norm())
                .fold(0.0, f64::max);
            if radius < 1e-6 {
                continue;
            }
            a *= 0.9 / radius;
            let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
            let sys = LdtSystem::new(a, b).unwrap();
            if decompose(&sys).is_ok() {
                return sys;
            }
        }
    }

    #[test]
    fn reconstruction_and_biorthogonality_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8] {
            let sys = random_stable(&mut rng, n);
            let spec = decompose(&sys).unwrap();
            let fro = sys.a().norm();

            // residual contract for every accepted eigenpair, both sides
            let ac = to_complex(sys.a());
            for (i, l) in spec.eigenvalues.iter().enumerate() {
                let p = spec.right_eigenvectors.column(i);
                let q = spec.left_eigenvectors.row(i);
                assert!((&ac * p - p * *l).norm() <= RESIDUAL_TOL * fro);
                assert!((q * &ac - q * *l).norm() <= RESIDUAL_TOL * fro);
                assert_relative_eq!(p.norm(), 1.0, max_relative = 1e-12);
                assert_relative_eq!(q.norm(), 1.0, max_relative = 1e-12);
            }

            // P diag(lambda) P^{-1} reconstructs A
            let p = &spec.right_eigenvectors;
            let lam = DMatrix::from_diagonal(&DVector::from_vec(spec.eigenvalues.clone()));
            let p_inv = p.clone().lu().try_inverse().unwrap();
            let recon = p * lam * p_inv;
            assert!((recon - &ac).norm() <= 1e-8 * fro.max(1.0));

            // biorthogonality of re-paired left/right vectors
            let cross = &spec.left_eigenvectors * p;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        assert!(cross[(i, j)].norm() > 1e-12);
                    } else {
                        assert!(cross[(i, j)].norm() <= 1e-8);
                    }
                }
            }

            // spectrum closed under conjugation
            for l in &spec.eigenvalues {
                assert!(spec
                    .eigenvalues
                    .iter()
                    .any(|m| (m - l.conj()).norm() == 0.0));
            }
        }
    }
}
