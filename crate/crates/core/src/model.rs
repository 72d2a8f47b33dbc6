//! Core domain types: coupling specifications, moment states and the
//! collective quantities every other module consumes.
//!
//! Conventions used throughout the crate:
//!
//! * the bath-bath rate `delta` is the unit of rate and time is measured in
//!   `1/delta`; all other rates are dimensionless multiples of `delta`,
//! * mode ordering is system guides first (`0..n_system`), then bath guides
//!   left to right,
//! * second moments are normal ordered, `corr[(i, j)] = <a_i^dag a_j>`, with
//!   the row index carrying the dagger.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance below which a slightly negative collective contraction is
/// clamped to zero; anything more negative is an error.
pub const CONTRACTION_TOL: f64 = 1e-10;

/// Whether the unwanted system-system and system-to-far-bath couplings are
/// retained (`Full`) or dropped (`Ideal`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    Full,
    Ideal,
}

/// All coupling rates of an `n_system`-guide ensemble attached to an
/// `n_bath`-guide linear bath array.
///
/// `g[j]` couples system guide `j` to the first bath guide, `omega` holds the
/// system-system rates and `j_coupling[(j, k - 2)]` couples system guide `j`
/// to bath guide `k` for `k = 2..=n_bath`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n_system: usize,
    pub n_bath: usize,
    pub g: Vec<f64>,
    pub delta: f64,
    pub omega: DMatrix<f64>,
    pub j_coupling: DMatrix<f64>,
    pub fidelity: Fidelity,
}

impl SystemSpec {
    /// Spec with the given system-to-first-bath rates, no unwanted couplings
    /// and `delta = 1`.
    pub fn new(g: Vec<f64>, n_bath: usize) -> Self {
        let n = g.len();
        let j_cols = n_bath.saturating_sub(1);
        SystemSpec {
            n_system: n,
            n_bath,
            g,
            delta: 1.0,
            omega: DMatrix::zeros(n, n),
            j_coupling: DMatrix::zeros(n, j_cols),
            fidelity: Fidelity::Full,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_omega(mut self, omega: DMatrix<f64>) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_j_coupling(mut self, j_coupling: DMatrix<f64>) -> Self {
        self.j_coupling = j_coupling;
        self
    }

    pub fn with_fidelity(mut self, fidelity: Fidelity) -> Self {
        self.fidelity = fidelity;
        self
    }

    /// Total mode count, system plus bath.
    pub fn n_modes(&self) -> usize {
        self.n_system + self.n_bath
    }
}

/// Structural diagnostics attached to a validated spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecDiagnostics {
    /// Collective system-bath coupling over the bath-bath rate; the
    /// weak-coupling regime needs this well below one.
    pub coupling_ratio: f64,
    /// Largest unwanted system-system rate over the smallest positive `g`.
    pub omega_to_g: f64,
    /// Largest far-bath rate over the smallest positive `g`.
    pub j_to_g: f64,
    pub warnings: Vec<String>,
}

/// A spec that passed [`validate`]. Under `Ideal` fidelity the stored
/// `omega` and `j_coupling` blocks are canonicalized to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec {
    spec: SystemSpec,
    diagnostics: SpecDiagnostics,
}

impl ValidatedSpec {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn diagnostics(&self) -> &SpecDiagnostics {
        &self.diagnostics
    }
}

impl Deref for ValidatedSpec {
    type Target = SystemSpec;

    fn deref(&self) -> &SystemSpec {
        &self.spec
    }
}

fn check_rates(name: &'static str, values: impl Iterator<Item = f64>) -> Result<()> {
    for (index, value) in values.enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidRate { name, index, value });
        }
    }
    Ok(())
}

/// Validate a spec: structural checks plus the separation-of-scales
/// diagnostics. Idempotent: revalidating the contained spec reproduces the
/// same diagnostics.
pub fn validate(mut spec: SystemSpec) -> Result<ValidatedSpec> {
    if spec.n_system == 0 {
        return Err(Error::NoSystemModes);
    }
    if spec.n_bath == 0 {
        return Err(Error::NoBathModes);
    }
    if spec.g.len() != spec.n_system {
        return Err(Error::Dimension {
            context: "g length",
            expected: spec.n_system,
            got: spec.g.len(),
        });
    }
    if !spec.delta.is_finite() || spec.delta <= 0.0 {
        return Err(Error::InvalidDelta(spec.delta));
    }
    check_rates("g", spec.g.iter().copied())?;

    let n = spec.n_system;
    if spec.omega.nrows() != n || spec.omega.ncols() != n {
        return Err(Error::Dimension {
            context: "omega rows*cols",
            expected: n * n,
            got: spec.omega.nrows() * spec.omega.ncols(),
        });
    }
    check_rates("omega", spec.omega.iter().copied())?;
    for i in 0..n {
        let d = spec.omega[(i, i)];
        if d != 0.0 {
            return Err(Error::OmegaDiagonal { i, value: d });
        }
        for j in (i + 1)..n {
            let a = spec.omega[(i, j)];
            let b = spec.omega[(j, i)];
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::AsymmetricOmega { i, j, a, b });
            }
        }
    }

    let j_cols = spec.n_bath - 1;
    if spec.j_coupling.nrows() != n || spec.j_coupling.ncols() != j_cols {
        return Err(Error::Dimension {
            context: "j_coupling rows*cols",
            expected: n * j_cols,
            got: spec.j_coupling.nrows() * spec.j_coupling.ncols(),
        });
    }
    check_rates("j_coupling", spec.j_coupling.iter().copied())?;

    if spec.fidelity == Fidelity::Ideal {
        spec.omega.fill(0.0);
        spec.j_coupling.fill(0.0);
    }

    let g_total = collective_coupling_of(&spec.g);
    let min_g = spec
        .g
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let max_omega = spec.omega.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let max_j = spec.j_coupling.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    let mut warnings = Vec::new();
    if g_total == 0.0 {
        warnings.push("no system-bath coupling".to_string());
    }

    let diagnostics = SpecDiagnostics {
        coupling_ratio: g_total / spec.delta,
        omega_to_g: max_omega / min_g,
        j_to_g: max_j / min_g,
        warnings,
    };
    Ok(ValidatedSpec { spec, diagnostics })
}

fn collective_coupling_of(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Collective system-bath coupling, the root of the summed squared rates.
pub fn collective_coupling(spec: &ValidatedSpec) -> f64 {
    collective_coupling_of(&spec.g)
}

/// Effective single-oscillator decay rate, `2 g_total^2 / (N delta)`. The
/// collective mode population decays at `N` times this rate.
pub fn effective_decay_rate(spec: &ValidatedSpec) -> f64 {
    let g_total = collective_coupling(spec);
    2.0 * g_total * g_total / (spec.n_system as f64 * spec.delta)
}

/// The collective coupling, decay rate and the unit vector of coupling
/// weights that defines the collective mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveQuantities {
    pub g_total: f64,
    pub gamma: f64,
    /// `g / g_total`; the zero vector when there is no system-bath coupling.
    pub c_vector: DVector<f64>,
}

pub fn collective_quantities(spec: &ValidatedSpec) -> CollectiveQuantities {
    let g_total = collective_coupling(spec);
    let gamma = effective_decay_rate(spec);
    let c_vector = if g_total > 0.0 {
        DVector::from_iterator(spec.n_system, spec.g.iter().map(|v| v / g_total))
    } else {
        DVector::zeros(spec.n_system)
    };
    CollectiveQuantities {
        g_total,
        gamma,
        c_vector,
    }
}

/// First moments and normal-ordered second moments over all system and bath
/// modes; a complete state description for every observable in scope.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    mean: DVector<Complex64>,
    corr: DMatrix<Complex64>,
}

impl MomentState {
    /// Build from explicit moments, rejecting non-Hermitian matrices and
    /// complex or negative occupations.
    pub fn new(mean: DVector<Complex64>, corr: DMatrix<Complex64>) -> Result<Self> {
        let dim = mean.len();
        if corr.nrows() != dim || corr.ncols() != dim {
            return Err(Error::Dimension {
                context: "corr rows*cols",
                expected: dim * dim,
                got: corr.nrows() * corr.ncols(),
            });
        }
        let scale = corr.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                asym = asym.max((corr[(i, j)] - corr[(j, i)].conj()).norm());
            }
        }
        if asym > 1e-11 * scale {
            return Err(Error::NotHermitian(asym));
        }
        for i in 0..dim {
            let d = corr[(i, i)];
            if d.im.abs() > 1e-11 * scale || d.re < -CONTRACTION_TOL || !d.re.is_finite() {
                return Err(Error::BadOccupation {
                    index: i,
                    re: d.re,
                    im: d.im,
                });
            }
        }
        Ok(MomentState { mean, corr })
    }

    /// All-mode vacuum.
    pub fn vacuum(dim: usize) -> Self {
        MomentState {
            mean: DVector::zeros(dim),
            corr: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<Complex64> {
        &self.mean
    }

    pub fn corr(&self) -> &DMatrix<Complex64> {
        &self.corr
    }

    /// Occupation of a single mode.
    pub fn occupation(&self, index: usize) -> f64 {
        self.corr[(index, index)].re
    }

    /// Total quanta over all modes.
    pub fn total_quanta(&self) -> f64 {
        (0..self.dim()).map(|i| self.corr[(i, i)].re).sum()
    }

    /// Connected second moments, `corr - conj(mean) mean^T`. Positive
    /// semidefinite for any physical state.
    pub fn connected(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| {
            self.corr[(i, j)] - self.mean[i].conj() * self.mean[j]
        })
    }

    /// Check positive semidefiniteness of the connected moments to `tol`
    /// (relative to the largest occupation).
    pub fn check_positive(&self, tol: f64) -> Result<()> {
        let conn = self.connected();
        let scale = conn.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
        let eig = conn.symmetric_eigenvalues();
        let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if min < -tol * scale {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    /// Embed a system-block state into the full mode space with an empty
    /// bath.
    pub fn from_system_block(
        spec: &SystemSpec,
        sys_mean: DVector<Complex64>,
        sys_corr: DMatrix<Complex64>,
    ) -> Result<Self> {
        let n = spec.n_system;
        if sys_mean.len() != n || sys_corr.nrows() != n || sys_corr.ncols() != n {
            return Err(Error::Dimension {
                context: "system block dimension",
                expected: n,
                got: sys_mean.len(),
            });
        }
        let dim = spec.n_modes();
        let mut mean = DVector::zeros(dim);
        let mut corr = DMatrix::zeros(dim, dim);
        mean.rows_mut(0, n).copy_from(&sys_mean);
        corr.view_mut((0, 0), (n, n)).copy_from(&sys_corr);
        MomentState::new(mean, corr)
    }

    /// Replace the bath diagonal with a uniform thermal occupation.
    pub fn with_thermal_bath(mut self, n_system: usize, nbar: f64) -> Result<Self> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(Error::InvalidThermalOccupation(nbar));
        }
        for k in n_system..self.dim() {
            self.corr[(k, k)] = Complex64::new(nbar, 0.0);
        }
        Ok(self)
    }
}

/// Total, bright (collective-mode) and dark quanta of the system block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveMoments {
    /// Total system quanta.
    pub total: f64,
    /// Population of the collective mode; decays to the bath.
    pub bright: f64,
    /// Quanta outside the collective mode; trapped in the system guides.
    pub dark: f64,
}

/// Contract the system block of `state` into total, bright and dark quanta.
pub fn collective_moments(state: &MomentState, spec: &ValidatedSpec) -> Result<CollectiveMoments> {
    let n = spec.n_system;
    if state.dim() != spec.n_modes() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: spec.n_modes(),
            got: state.dim(),
        });
    }
    let total: f64 = (0..n).map(|j| state.corr()[(j, j)].re).sum();
    let c = collective_quantities(spec).c_vector;
    let mut bright = 0.0;
    for i in 0..n {
        for j in 0..n {
            bright += c[i] * c[j] * state.corr()[(i, j)].re;
        }
    }
    if bright < -CONTRACTION_TOL {
        return Err(Error::NegativeContraction {
            value: bright,
            tol: CONTRACTION_TOL,
        });
    }
    let bright = bright.max(0.0);
    let dark = total - bright;
    if dark < -CONTRACTION_TOL {
        return Err(Error::NegativeContraction {
            value: dark,
            tol: CONTRACTION_TOL,
        });
    }
    Ok(CollectiveMoments {
        total,
        bright,
        dark,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::paper_preset;
    use approx::assert_relative_eq;

    #[test]
    fn preset_is_valid_with_expected_coupling_ratio() {
        let spec = validate(paper_preset()).unwrap();
        assert_relative_eq!(
            spec.diagnostics().coupling_ratio,
            0.2045062364648081,
            epsilon = 1e-12
        );
        assert!(spec.diagnostics().warnings.is_empty());
    }

    #[test]
    fn zero_coupling_is_valid_but_flagged() {
        let spec = validate(SystemSpec::new(vec![0.0, 0.0, 0.0], 4)).unwrap();
        assert!(spec
            .diagnostics()
            .warnings
            .iter()
            .any(|w| w.contains("no system-bath coupling")));
    }

    #[test]
    fn asymmetric_omega_is_rejected() {
        let mut omega = DMatrix::zeros(2, 2);
        omega[(0, 1)] = 1e-3;
        omega[(1, 0)] = 2e-3;
        let err = validate(SystemSpec::new(vec![0.1, 0.1], 4).with_omega(omega)).unwrap_err();
        assert!(matches!(err, Error::AsymmetricOmega { i: 0, j: 1, .. }));
    }

    #[test]
    fn nonzero_omega_diagonal_is_rejected() {
        let mut omega = DMatrix::zeros(2, 2);
        omega[(1, 1)] = 1e-3;
        let err = validate(SystemSpec::new(vec![0.1, 0.1], 4).with_omega(omega)).unwrap_err();
        assert!(matches!(err, Error::OmegaDiagonal { i: 1, .. }));
    }

    #[test]
    fn negative_rate_is_rejected() {
        let err = validate(SystemSpec::new(vec![0.1, -0.1], 4)).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidRate {
                name: "g",
                index: 1,
                ..
            }
        ));
    }

    #[test]
    fn empty_bath_is_rejected() {
        let err = validate(SystemSpec::new(vec![0.1], 0)).unwrap_err();
        assert!(matches!(err, Error::NoBathModes));
    }

    #[test]
    fn validate_is_idempotent() {
        let once = validate(paper_preset()).unwrap();
        let twice = validate(once.spec().clone()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn collective_coupling_matches_preset_value() {
        let spec = validate(paper_preset()).unwrap();
        assert_relative_eq!(
            collective_coupling(&spec),
            0.2045062364648081,
            epsilon = 1e-12
        );
    }

    #[test]
    fn collective_coupling_equal_rates() {
        for n in 1..6 {
            let spec = validate(SystemSpec::new(vec![0.07; n], 3)).unwrap();
            assert_relative_eq!(
                collective_coupling(&spec),
                0.07 * (n as f64).sqrt(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn single_mode_collective_coupling_is_g1() {
        let spec = validate(SystemSpec::new(vec![0.123], 2)).unwrap();
        assert_relative_eq!(collective_coupling(&spec), 0.123, epsilon = 1e-15);
    }

    #[test]
    fn decay_rate_matches_preset_value() {
        let spec = validate(paper_preset()).unwrap();
        assert_relative_eq!(
            effective_decay_rate(&spec),
            0.02788186716866667,
            epsilon = 1e-14
        );
    }

    #[test]
    fn equal_couplings_decay_like_a_single_oscillator() {
        let g = 0.05;
        let spec = validate(SystemSpec::new(vec![g; 4], 3)).unwrap();
        assert_relative_eq!(effective_decay_rate(&spec), 2.0 * g * g, epsilon = 1e-15);
    }

    #[test]
    fn zero_coupling_zero_decay() {
        let spec = validate(SystemSpec::new(vec![0.0; 3], 3)).unwrap();
        assert_eq!(effective_decay_rate(&spec), 0.0);
    }

    #[test]
    fn c_vector_is_unit_for_preset() {
        let spec = validate(paper_preset()).unwrap();
        let q = collective_quantities(&spec);
        assert_relative_eq!(q.c_vector.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(q.gamma, 2.0 * q.g_total * q.g_total / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn collective_moments_of_bright_fock_dark() {
        let spec = validate(paper_preset()).unwrap();
        let bright = crate::states::bright_state(&spec, 2.0).unwrap();
        let m = collective_moments(&bright, &spec).unwrap();
        assert_relative_eq!(m.total, 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.bright, 2.0, epsilon = 1e-12);
        assert!(m.dark.abs() < 1e-12);

        // brute-force contraction oracle for |2,0,0>
        let fock = crate::states::fock_state(&spec, &[2, 0, 0]).unwrap();
        let c = collective_quantities(&spec).c_vector;
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                oracle += c[i] * c[j] * fock.corr()[(i, j)].re;
            }
        }
        let m = collective_moments(&fock, &spec).unwrap();
        assert_relative_eq!(m.bright, oracle, epsilon = 1e-15);
        assert_relative_eq!(m.bright, 0.7249639719507572, epsilon = 1e-12);
        assert_relative_eq!(m.dark, 1.2750360280492428, epsilon = 1e-12);

        let dark = crate::states::dark_state(&spec, 2.0, 0, 2).unwrap();
        let m = collective_moments(&dark, &spec).unwrap();
        assert_relative_eq!(m.total, 2.0, epsilon = 1e-12);
        assert!(m.bright.abs() < 1e-12);
        assert_relative_eq!(m.dark, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn collective_moments_dimension_mismatch() {
        let spec = validate(paper_preset()).unwrap();
        let state = MomentState::vacuum(5);
        assert!(matches!(
            collective_moments(&state, &spec),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn moment_state_rejects_non_hermitian() {
        let mut corr = DMatrix::zeros(2, 2);
        corr[(0, 1)] = Complex64::new(0.5, 0.0);
        corr[(1, 0)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            MomentState::new(DVector::zeros(2), corr),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn moment_state_rejects_negative_occupation() {
        let mut corr = DMatrix::zeros(2, 2);
        corr[(0, 0)] = Complex64::new(-1.0, 0.0);
        assert!(matches!(
            MomentState::new(DVector::zeros(2), corr),
            Err(Error::BadOccupation { index: 0, .. })
        ));
    }

    #[test]
    fn domain_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<SystemSpec>();
        assert_send_sync::<ValidatedSpec>();
        assert_send_sync::<MomentState>();
        assert_send_sync::<CollectiveQuantities>();
    }
}
