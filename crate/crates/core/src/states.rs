//! Initial-state constructors for the bright, normal and dark classes, and
//! the beam-splitter networks that prepare them from product states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{collective_quantities, MomentState, ValidatedSpec};

/// A unitary single-particle transformation acting on the mode-operator
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMap {
    matrix: DMatrix<Complex64>,
}

impl ModeMap {
    /// Wrap a matrix, rejecting anything that is not unitary to `1e-10`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                context: "mode map rows",
                expected: matrix.ncols(),
                got: matrix.nrows(),
            });
        }
        let dim = matrix.nrows();
        let gram = matrix.adjoint() * &matrix;
        let mut dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "mode map is not unitary: max |B^dag B - I| = {dev:.3e}"
            )));
        }
        Ok(ModeMap { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        ModeMap {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Two-mode rotation acting on modes `(i, j)` of a `dim`-mode register:
/// `a'_i = cos(theta) a_i + sin(theta) a_j`,
/// `a'_j = -sin(theta) a_i + cos(theta) a_j`.
pub fn beamsplitter(i: usize, j: usize, theta: f64, dim: usize) -> Result<ModeMap> {
    if i >= dim {
        return Err(Error::IndexOutOfRange { index: i, dim });
    }
    if j >= dim {
        return Err(Error::IndexOutOfRange { index: j, dim });
    }
    if i == j {
        return Err(Error::RepeatedIndex(i));
    }
    let mut m = DMatrix::identity(dim, dim);
    let (c, s) = (theta.cos(), theta.sin());
    m[(i, i)] = Complex64::new(c, 0.0);
    m[(i, j)] = Complex64::new(s, 0.0);
    m[(j, i)] = Complex64::new(-s, 0.0);
    m[(j, j)] = Complex64::new(c, 0.0);
    ModeMap::new(m)
}

/// One beam splitter of a preparation chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterStage {
    pub modes: (usize, usize),
    pub angle: f64,
}

/// An ordered chain of two-mode splitters acting on the system modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationNetwork {
    stages: Vec<SplitterStage>,
    n_modes: usize,
}

impl PreparationNetwork {
    pub fn new(stages: Vec<SplitterStage>, n_modes: usize) -> Result<Self> {
        for stage in &stages {
            let (i, j) = stage.modes;
            if i >= n_modes {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: n_modes,
                });
            }
            if j >= n_modes {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    dim: n_modes,
                });
            }
            if i == j {
                return Err(Error::RepeatedIndex(i));
            }
            if !stage.angle.is_finite() || stage.angle.abs() > std::f64::consts::PI {
                return Err(Error::AngleOutOfRange(stage.angle));
            }
        }
        Ok(PreparationNetwork { stages, n_modes })
    }

    pub fn stages(&self) -> &[SplitterStage] {
        &self.stages
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Compose the chain into a single map on a `dim`-mode register
    /// (`dim >= n_modes`; extra modes pass through untouched).
    ///
    /// Column `i` of the result is the output superposition fed by input
    /// mode `i`: a product state injected on mode `i` and pushed through the
    /// splitters in stage order comes out with its creation operator carried
    /// onto that column. Applying the map to the injected state's moments via
    /// [`apply_map`] therefore reproduces the prepared state.
    pub fn mode_map(&self, dim: usize) -> Result<ModeMap> {
        if dim < self.n_modes {
            return Err(Error::Dimension {
                context: "mode map dimension",
                expected: self.n_modes,
                got: dim,
            });
        }
        let mut composed = DMatrix::<Complex64>::identity(dim, dim);
        for stage in &self.stages {
            let b = beamsplitter(stage.modes.0, stage.modes.1, stage.angle, dim)?;
            composed = b.matrix().transpose() * composed;
        }
        ModeMap::new(composed)
    }
}

/// Transport moments through a linear mode map: `mean' = B mean`,
/// `corr' = conj(B) corr B^T`. Hermiticity and the trace are preserved.
pub fn apply_map(map: &ModeMap, state: &MomentState) -> Result<MomentState> {
    if map.dim() != state.dim() {
        return Err(Error::Dimension {
            context: "mode map dimension",
            expected: state.dim(),
            got: map.dim(),
        });
    }
    let b = map.matrix();
    let mean = b * state.mean();
    let corr = b.conjugate() * state.corr() * b.transpose();
    MomentState::new(mean, corr)
}

/// `quanta` copies of the collective mode: the fully superradiant class.
/// System-block moments are `quanta * c_i c_j`; the bath starts empty.
pub fn bright_state(spec: &ValidatedSpec, quanta: f64) -> Result<MomentState> {
    check_quanta(quanta)?;
    let n = spec.n_system;
    if quanta == 0.0 {
        return Ok(MomentState::vacuum(spec.n_modes()));
    }
    let q = collective_quantities(spec);
    if q.g_total == 0.0 {
        return Err(Error::ZeroCollectiveCoupling);
    }
    let corr = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(quanta * q.c_vector[i] * q.c_vector[j], 0.0)
    });
    MomentState::from_system_block(spec, DVector::zeros(n), corr)
}

/// Product of single-mode Fock states over the system guides.
pub fn fock_state(spec: &ValidatedSpec, occupations: &[u32]) -> Result<MomentState> {
    let n = spec.n_system;
    if occupations.len() != n {
        return Err(Error::Dimension {
            context: "occupations length",
            expected: n,
            got: occupations.len(),
        });
    }
    let corr = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(occupations[i] as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    MomentState::from_system_block(spec, DVector::zeros(n), corr)
}

fn dark_vector(spec: &ValidatedSpec, i: usize, j: usize) -> Result<DVector<f64>> {
    let n = spec.n_system;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, dim: n });
    }
    if i == j {
        return Err(Error::RepeatedIndex(i));
    }
    let (gi, gj) = (spec.g[i], spec.g[j]);
    let norm = (gi * gi + gj * gj).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroDarkPair { i, j });
    }
    let mut v = DVector::zeros(n);
    v[i] = gj / norm;
    v[j] = -gi / norm;
    Ok(v)
}

/// `quanta` copies of the trapped mode spanned by guides `i` and `j`
/// (weights `(g_j, -g_i)` normalized). Orthogonal to the collective mode,
/// so these states carry no bright quanta.
pub fn dark_state(spec: &ValidatedSpec, quanta: f64, i: usize, j: usize) -> Result<MomentState> {
    check_quanta(quanta)?;
    let v = dark_vector(spec, i, j)?;
    let n = spec.n_system;
    let corr = DMatrix::from_fn(n, n, |p, q| Complex64::new(quanta * v[p] * v[q], 0.0));
    MomentState::from_system_block(spec, DVector::zeros(n), corr)
}

fn check_quanta(quanta: f64) -> Result<()> {
    if !quanta.is_finite() || quanta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "quanta must be finite and nonnegative, got {quanta}"
        )));
    }
    Ok(())
}

/// Single splitter on guides (3, 1) that turns `|R,0,0>` into the dark
/// class over that pair; the angle is `asin(g_1 / sqrt(g_1^2 + g_3^2))`.
pub fn dark_prep_network(spec: &ValidatedSpec) -> Result<PreparationNetwork> {
    dark_prep_network_for(spec, 0, 2)
}

/// Dark-state preparation for an arbitrary guide pair `(i, j)`: one stage
/// on `(j, i)` with angle `asin(g_i / sqrt(g_i^2 + g_j^2))`.
pub fn dark_prep_network_for(
    spec: &ValidatedSpec,
    i: usize,
    j: usize,
) -> Result<PreparationNetwork> {
    // reuse the index and zero-coupling checks
    dark_vector(spec, i, j)?;
    let (gi, gj) = (spec.g[i], spec.g[j]);
    let theta = (gi / (gi * gi + gj * gj).sqrt()).asin();
    PreparationNetwork::new(
        vec![SplitterStage {
            modes: (j, i),
            angle: theta,
        }],
        spec.n_system,
    )
}

/// The two-splitter chain preparing the three-guide bright class from
/// `|R,0,0>`: stage (1,2) at `acos(g_1/g_total)`, then stage (2,3) at
/// `asin(g_3 / sqrt(g_2^2 + g_3^2))`.
pub fn bright_prep_network(spec: &ValidatedSpec) -> Result<PreparationNetwork> {
    if spec.n_system != 3 {
        return Err(Error::InvalidArgument(format!(
            "three-guide bright preparation needs n_system = 3, got {}; use generalize_bright",
            spec.n_system
        )));
    }
    let q = collective_quantities(spec);
    if q.g_total == 0.0 {
        return Err(Error::ZeroCollectiveCoupling);
    }
    let theta = clamped_acos(spec.g[0] / q.g_total);
    let tail = (spec.g[1] * spec.g[1] + spec.g[2] * spec.g[2]).sqrt();
    let phi = if tail > 0.0 {
        (spec.g[2] / tail).clamp(-1.0, 1.0).asin()
    } else {
        0.0
    };
    PreparationNetwork::new(
        vec![
            SplitterStage {
                modes: (0, 1),
                angle: theta,
            },
            SplitterStage {
                modes: (1, 2),
                angle: phi,
            },
        ],
        3,
    )
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// `N - 1` splitters carrying `|R>|0>^(N-1)` onto the bright class for any
/// `N >= 2`: stage `k` acts on `(k, k+1)` and peels off the weight of guide
/// `k` from the remaining amplitude.
pub fn generalize_bright(spec: &ValidatedSpec) -> Result<PreparationNetwork> {
    let n = spec.n_system;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "bright preparation chain needs n_system >= 2, got {n}"
        )));
    }
    let q = collective_quantities(spec);
    if q.g_total == 0.0 {
        return Err(Error::ZeroCollectiveCoupling);
    }
    let mut stages = Vec::with_capacity(n - 1);
    let mut residual = 1.0f64;
    for k in 0..n - 1 {
        let angle = if residual > 1e-300 {
            clamped_acos(q.c_vector[k] / residual)
        } else {
            0.0
        };
        stages.push(SplitterStage {
            modes: (k, k + 1),
            angle,
        });
        residual *= angle.sin();
    }
    PreparationNetwork::new(stages, n)
}
