//! Domain records: systems, spectra, diagonal forms, Grammians, metrics.
//!
//! All records are immutable after construction and safe to share across
//! threads. Validation happens at the constructor boundary so downstream
//! numerics can assume finite, dimensionally consistent data.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for invariant checks, overridable at the CLI.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Horizons past this cap route to the infinite closed form when stable.
pub const HORIZON_CAP: u64 = 1_000_000;

/// Eigenvalues are treated as distinct iff their minimum pairwise distance
/// exceeds this threshold. The Cauchy matrix behind the analytic volume is
/// numerically singular below it.
pub fn distinctness_threshold(spectral_radius: f64) -> f64 {
    1e-8 * spectral_radius.max(1.0)
}

/// A linear discrete-time system `x_{k+1} = A x_k + B u_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LdtSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    name: Option<String>,
}

/// On-disk schema: `{"A": [[..]], "B": [..] or [[..]], "name": optional}`.
#[derive(Serialize, Deserialize)]
struct SystemFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: InputColumns,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    name: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InputColumns {
    Flat(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl LdtSystem {
    /// Validates and wraps the pair `(A, B)`.
    ///
    /// Rejects non-square `A`, row-count mismatches, empty dimensions and
    /// non-finite entries. The analytic volume path additionally requires
    /// a single input; multi-input systems are accepted here and served by
    /// the numeric paths only.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NonSquareState {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::EmptyState);
        }
        if b.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if b.nrows() != a.nrows() {
            return Err(Error::InputRowMismatch {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        check_finite(&a, "A")?;
        check_finite(&b, "B")?;
        Ok(Self { a, b, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Parses the JSON system-file schema.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        let n = file.a.len();
        let mut a = DMatrix::zeros(n, n);
        for (i, row) in file.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NonSquareState {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        let b = match file.b {
            InputColumns::Flat(col) => DMatrix::from_column_slice(col.len(), 1, &col),
            InputColumns::Full(rows) => {
                let r = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|row| row.len() != r) {
                    return Err(Error::InputRowMismatch {
                        expected: r,
                        got: rows.iter().map(Vec::len).max().unwrap_or(0),
                    });
                }
                let mut b = DMatrix::zeros(rows.len(), r);
                for (i, row) in rows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        b[(i, j)] = v;
                    }
                }
                b
            }
        };
        let sys = Self::new(a, b)?;
        Ok(match file.name {
            Some(name) => sys.with_name(name),
            None => sys,
        })
    }

    /// Serializes back to the system-file schema. Round-trips bit-exactly:
    /// the emitted decimal text carries enough digits to reproduce every
    /// `f64` entry.
    pub fn to_json_string(&self) -> String {
        let a = (0..self.n())
            .map(|i| self.a.row(i).iter().copied().collect())
            .collect();
        let b = if self.r() == 1 {
            InputColumns::Flat(self.b.column(0).iter().copied().collect())
        } else {
            InputColumns::Full(
                (0..self.n())
                    .map(|i| self.b.row(i).iter().copied().collect())
                    .collect(),
            )
        };
        let file = SystemFile {
            a,
            b,
            name: self.name.clone(),
        };
        serde_json::to_string_pretty(&file).expect("system serialization cannot fail")
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension; the analytic path requires `r == 1`.
    pub fn r(&self) -> usize {
        self.b.ncols()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Single-input column, or an error for multi-input systems.
    pub fn single_input(&self) -> Result<nalgebra::DVector<f64>> {
        if self.r() != 1 {
            return Err(Error::MultiInput { inputs: self.r() });
        }
        Ok(self.b.column(0).into_owned())
    }
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

fn check_finite(m: &DMatrix<f64>, which: &'static str) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFiniteEntry {
                    matrix: which,
                    row: i,
                    col: j,
                });
            }
        }
    }
    Ok(())
}

/// Eigenstructure of the state matrix: unit right eigenvectors as columns of
/// `P`, unit left eigenvectors as rows, eigenvalues sorted by (re, im) with
/// conjugate pairs adjacent.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are unit-norm right eigenvectors; this is the transform `P`.
    pub right_eigenvectors: DMatrix<Complex64>,
    /// Rows are unit-norm left eigenvectors `q_i` with `q_i A = lambda_i q_i`.
    pub left_eigenvectors: DMatrix<Complex64>,
    pub det_p: Complex64,
    pub min_separation: f64,
    /// True iff every eigenvalue lies strictly inside the unit disk.
    pub stable: bool,
    /// Condition estimate of `P` (Frobenius-based); above 1e12 downstream
    /// transforms attach a warning.
    pub p_condition: f64,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max)
    }

    /// True when every imaginary part is negligible against the spectrum scale.
    pub fn is_real(&self) -> bool {
        let scale = self.spectral_radius().max(1.0);
        self.eigenvalues
            .iter()
            .all(|l| l.im.abs() <= 1e-12 * scale)
    }
}

/// Diagonal canonical form of a single-input system: `diag(lambdas)` with
/// transformed input `bhat = P^{-1} B`.
#[derive(Clone, Debug)]
pub struct DiagonalForm {
    pub lambdas: Vec<Complex64>,
    pub bhat: Vec<Complex64>,
    /// Identifies the eigenvector normalization that produced `bhat`.
    pub basis_note: String,
}

impl DiagonalForm {
    pub fn new(lambdas: Vec<Complex64>, bhat: Vec<Complex64>, basis_note: impl Into<String>) -> Self {
        assert_eq!(lambdas.len(), bhat.len(), "lambdas and bhat must align");
        Self {
            lambdas,
            bhat,
            basis_note: basis_note.into(),
        }
    }

    /// Real diagonal pair, the common case in examples and search.
    pub fn from_real(lambdas: &[f64], bhat: &[f64], basis_note: impl Into<String>) -> Self {
        Self::new(
            lambdas.iter().map(|&l| Complex64::new(l, 0.0)).collect(),
            bhat.iter().map(|&b| Complex64::new(b, 0.0)).collect(),
            basis_note,
        )
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn stable(&self) -> bool {
        self.lambdas.iter().all(|l| l.norm() < 1.0)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        let scale = self.spectral_radius().max(1.0);
        self.lambdas.iter().all(|l| l.im.abs() <= 1e-12 * scale)
            && self.bhat.iter().all(|b| b.im.abs() <= 1e-12)
    }
}

/// Which coordinates a Grammian lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Original,
    Eigen,
}

/// Accumulation horizon of a Grammian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(u64),
    Infinite,
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Infinite => write!(f, "infinite"),
        }
    }
}

/// A controllability Grammian with its horizon and basis tags.
///
/// Stored as a complex matrix throughout: real symmetric in the original
/// basis, Hermitian in the eigen-space (the imaginary parts of an
/// original-basis Grammian are identically zero).
#[derive(Clone, Debug)]
pub struct GrammianResult {
    matrix: DMatrix<Complex64>,
    horizon: Horizon,
    basis: Basis,
    warning: Option<String>,
}

impl GrammianResult {
    pub fn new(matrix: DMatrix<Complex64>, horizon: Horizon, basis: Basis) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "Grammian must be square");
        Self {
            matrix,
            horizon,
            basis,
            warning: None,
        }
    }

    pub fn from_real(matrix: DMatrix<f64>, horizon: Horizon, basis: Basis) -> Self {
        Self::new(matrix.map(|v| Complex64::new(v, 0.0)), horizon, basis)
    }

    pub(crate) fn with_warning(mut self, warning: Option<String>) -> Self {
        self.warning = warning;
        self
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The real part, valid whenever `is_real` holds (always true in the
    /// original basis, and in the eigen basis of a real spectrum).
    pub fn real_part(&self) -> DMatrix<f64> {
        self.matrix.map(|v| v.re)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.matrix.norm().max(1.0);
        self.matrix.iter().all(|v| v.im.abs() <= tol * scale)
    }

    /// `max |G - G^H|` entrywise; zero for an exactly Hermitian matrix.
    pub fn hermitian_residual(&self) -> f64 {
        let adj = self.matrix.adjoint();
        (&self.matrix - adj).norm()
    }

    /// Eigenvalues of the Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eigs
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    /// Determinant through the Hermitian eigendecomposition, accumulated in
    /// log magnitude with sign tracking.
    pub fn determinant(&self) -> f64 {
        let eigs = self.hermitian_eigenvalues();
        let mut log_mag = 0.0f64;
        let mut sign = 1.0f64;
        for e in eigs {
            if e == 0.0 {
                return 0.0;
            }
            log_mag += e.abs().ln();
            if e < 0.0 {
                sign = -sign;
            }
        }
        sign * log_mag.exp()
    }

    /// Symmetry/Hermitian and positive-semidefinite invariants at relative
    /// tolerance `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let scale = self.matrix.norm().max(1.0);
        if self.hermitian_residual() > tol * scale {
            return Err(Error::BasisMismatch);
        }
        if self.min_eigenvalue() < -tol * scale {
            return Err(Error::Overflow);
        }
        Ok(())
    }
}

/// Aggregated shape metrics of one ellipsoid, assembled by the front end.
#[derive(Clone, Debug)]
pub struct EllipsoidMetrics {
    pub volume: f64,
    pub det_g: f64,
    pub f1: f64,
    /// Symmetric pairwise section-factor table with unit diagonal.
    pub pairwise: DMatrix<f64>,
    pub box_half_lengths: Vec<f64>,
    pub hypersphere_coeff: f64,
}

impl EllipsoidMetrics {
    /// Volume/determinant consistency and factor range invariants.
    pub fn check_invariants(&self, tol: f64, stable: bool) -> bool {
        let vol_ok = (self.volume - self.hypersphere_coeff * self.det_g.sqrt()).abs()
            <= tol * self.volume.max(1e-300);
        let f1_ok = !stable || (0.0..1.0).contains(&self.f1);
        let pair_ok = !stable
            || (0..self.pairwise.nrows()).all(|i| {
                (0..self.pairwise.ncols())
                    .all(|j| i == j || (0.0..1.0).contains(&self.pairwise[(i, j)]))
            });
        vol_ok && f1_ok && pair_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn companion_example() -> LdtSystem {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.432, -1.74, 2.3],
        );
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        LdtSystem::new(a, b).expect("valid system")
    }

    #[test]
    fn accepts_companion_pair() {
        let sys = companion_example();
        assert_eq!(sys.n(), 3);
        assert_eq!(sys.r(), 1);
    }

    #[test]
    fn accepts_smallest_system() {
        let sys = LdtSystem::new(
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert_eq!((sys.n(), sys.r()), (1, 1));
    }

    #[test]
    fn rejects_row_mismatch() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(
            LdtSystem::new(a, b),
            Err(Error::InputRowMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(
            LdtSystem::new(a, b),
            Err(Error::NonFiniteEntry { matrix: "A", .. })
        ));
    }

    #[test]
    fn rejects_empty() {
        let a = DMatrix::<f64>::zeros(0, 0);
        let b = DMatrix::<f64>::zeros(0, 1);
        assert!(matches!(LdtSystem::new(a, b), Err(Error::EmptyState)));
    }

    #[test]
    fn parses_flat_and_full_input_columns() {
        let flat = r#"{"A": [[0.5]], "B": [1.0], "name": "scalar"}"#;
        let sys = LdtSystem::from_json_str(flat).unwrap();
        assert_eq!(sys.name(), Some("scalar"));
        assert_eq!(sys.r(), 1);

        let full = r#"{"A": [[0.5, 0.0], [0.0, 0.2]], "B": [[1.0, 0.0], [0.0, 1.0]]}"#;
        let sys = LdtSystem::from_json_str(full).unwrap();
        assert_eq!(sys.r(), 2);
    }

    #[test]
    fn grammian_invariants_catch_asymmetry() {
        let g = GrammianResult::from_real(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.3, 1.0]),
            Horizon::Finite(1),
            Basis::Original,
        );
        assert!(g.check_invariants(1e-9).is_err());
    }

    proptest! {
        #[test]
        fn system_file_round_trip_is_bit_exact(
            entries in proptest::collection::vec(-1e12f64..1e12, 6),
        ) {
            let a = DMatrix::from_row_slice(2, 2, &entries[0..4]);
            let b = DMatrix::from_column_slice(2, 1, &entries[4..6]);
            let sys = LdtSystem::new(a, b).unwrap();
            let text = sys.to_json_string();
            let back = LdtSystem::from_json_str(&text).unwrap();
            prop_assert_eq!(sys.a(), back.a());
            prop_assert_eq!(sys.b(), back.b());
        }
    }
}
