//! Exact propagation of the full coupled-mode Hamiltonian on a truncated
//! bath. The single-particle coupling matrix is time independent and real
//! symmetric, so one eigendecomposition yields the exact propagator
//! `U(t) = V exp(-i lambda t) V^T`; moments transport as
//! `mean(t) = U mean(0)` and `corr(t) = conj(U) corr(0) U^T`.
//!
//! [`run_series`] avoids forming the full `U(t)` per sample: with the
//! initial moments rotated into the eigenbasis once, every observable only
//! needs a handful of rows of `U`, which costs `O(N n^2)` per sample instead
//! of `O(n^3)`. Samples are independent, so the grid is evaluated in
//! parallel when the `parallel` feature is enabled (the default).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{MomentState, SystemSpec, ValidatedSpec};

/// Safety factor applied to the bath edge-reach time when estimating the
/// usable grid horizon.
const HORIZON_SAFETY: f64 = 0.8;

/// Real symmetric single-particle coupling matrix, system modes first.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    h: DMatrix<f64>,
    n_system: usize,
}

impl CouplingMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Assemble the coupling matrix: `g` on the system-to-first-bath entries,
/// `omega` on the system block, `j_coupling` on the far-bath entries and
/// `delta` on the bath nearest-neighbour chain. Ideal fidelity arrives here
/// with `omega` and `j_coupling` already zeroed.
pub fn build_hamiltonian(spec: &ValidatedSpec) -> CouplingMatrix {
    let n = spec.n_system;
    let m = spec.n_bath;
    let dim = n + m;
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..n {
        h[(j, n)] = spec.g[j];
        h[(n, j)] = spec.g[j];
        for i in 0..n {
            if i != j {
                h[(i, j)] = spec.omega[(i, j)];
            }
        }
        for k in 2..=m {
            let rate = spec.j_coupling[(j, k - 2)];
            h[(j, n + k - 1)] = rate;
            h[(n + k - 1, j)] = rate;
        }
    }
    for k in 0..m - 1 {
        h[(n + k, n + k + 1)] = spec.delta;
        h[(n + k + 1, n + k)] = spec.delta;
    }
    CouplingMatrix { h, n_system: n }
}

/// Eigendecomposition of a coupling matrix; evaluates the exact propagator
/// at any time.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    n_system: usize,
}

impl Propagator {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    /// `U(t) = V exp(-i lambda t) V^T`; unitary and symmetric.
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let dim = self.dim();
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, -lam * t))
            .collect();
        // scaled = V * diag(phases), then U = scaled * V^T
        let mut scaled = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            for row in 0..dim {
                scaled[(row, col)] = phases[col] * self.eigenvectors[(row, col)];
            }
        }
        let mut unitary = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += scaled[(i, k)] * self.eigenvectors[(j, k)];
                }
                unitary[(i, j)] = acc;
            }
        }
        unitary
    }
}

/// Diagonalize a coupling matrix, verifying orthogonality of the returned
/// basis and reconstruction of the input.
pub fn diagonalize(coupling: &CouplingMatrix) -> Result<Propagator> {
    let dim = coupling.dim();
    let eig = coupling.h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let lam = &eig.eigenvalues;

    let gram = v.transpose() * v;
    let mut ortho_dev = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { 1.0 } else { 0.0 };
            ortho_dev = ortho_dev.max((gram[(i, j)] - target).abs());
        }
    }
    if ortho_dev > 1e-10 {
        return Err(Error::EigenFailure(format!(
            "eigenbasis not orthogonal: max |V^T V - I| = {ortho_dev:.3e}"
        )));
    }

    let reconstructed = v * DMatrix::from_diagonal(lam) * v.transpose();
    let scale = coupling
        .h
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.abs()))
        .max(1.0);
    let mut recon_dev = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            recon_dev = recon_dev.max((reconstructed[(i, j)] - coupling.h[(i, j)]).abs());
        }
    }
    if recon_dev > 1e-9 * scale {
        return Err(Error::EigenFailure(format!(
            "reconstruction error {recon_dev:.3e} exceeds tolerance"
        )));
    }

    Ok(Propagator {
        eigenvalues: lam.clone(),
        eigenvectors: v.clone(),
        n_system: coupling.n_system,
    })
}

/// Full-state moment transport to time `t`.
pub fn evolve(prop: &Propagator, state0: &MomentState, t: f64) -> Result<MomentState> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTime(t));
    }
    if state0.dim() != prop.dim() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: prop.dim(),
            got: state0.dim(),
        });
    }
    let u = prop.unitary(t);
    let mean = &u * state0.mean();
    let corr = u.conjugate() * state0.corr() * u.transpose();
    MomentState::new(mean, corr)
}

/// Instantaneous emission rate out of the system block, from the exact
/// rate of change of the system quanta:
/// `I = -2 sum_j sum_q h[j][q] Im corr[j][q]` over system rows `j` and bath
/// columns `q`. System-system couplings conserve the system quanta and drop
/// out. Positive while the system decays.
pub fn boundary_flux(state: &MomentState, spec: &ValidatedSpec) -> Result<f64> {
    let n = spec.n_system;
    let m = spec.n_bath;
    if state.dim() != spec.n_modes() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: spec.n_modes(),
            got: state.dim(),
        });
    }
    let mut flux = 0.0;
    for j in 0..n {
        flux += spec.g[j] * state.corr()[(j, n)].im;
        for k in 2..=m {
            let rate = spec.j_coupling[(j, k - 2)];
            if rate != 0.0 {
                flux += rate * state.corr()[(j, n + k - 1)].im;
            }
        }
    }
    Ok(-2.0 * flux)
}

/// Per-sample observables of a propagated state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    /// Sample times, strictly increasing, in units of `1/delta`.
    pub times: Vec<f64>,
    /// Total system quanta per sample.
    pub m_total: Vec<f64>,
    /// Per-system-guide populations, indexed `[guide][sample]`.
    pub per_guide: Vec<Vec<f64>>,
    /// Boundary flux per sample.
    pub intensity: Vec<f64>,
    /// Two-time correlations `c_ij(t, 0)` for the requested guide pairs.
    pub correlations: Vec<((usize, usize), Vec<Complex64>)>,
    /// Usable horizon before bath-edge reflections reach the system.
    pub horizon: f64,
    /// Set when the grid extends beyond the horizon.
    pub horizon_exceeded: bool,
}

/// Estimated usable grid horizon for a bath of `n_bath` guides: excitations
/// cross the bath at group velocity `<= 2 delta`.
pub fn reflection_horizon(spec: &SystemSpec) -> f64 {
    HORIZON_SAFETY * spec.n_bath as f64 / (2.0 * spec.delta)
}

struct SeriesContext {
    eigenvalues: DVector<f64>,
    /// System rows of the eigenvector matrix.
    rows_system: DMatrix<f64>,
    /// Rows of the eigenvector matrix for bath modes with direct system
    /// coupling, for the flux contraction.
    rows_flux: DMatrix<f64>,
    /// Coupling weights into the flux rows, indexed `[row][system guide]`.
    flux_weights: Vec<Vec<f64>>,
    /// Initial moments in the eigenbasis: `V^T corr V`.
    corr_eig: DMatrix<Complex64>,
    /// `V^T conn[:, 0..N]` for two-time correlations.
    conn_eig_sys: DMatrix<Complex64>,
    pairs: Vec<(usize, usize)>,
    n_system: usize,
}

struct SampleRow {
    m_total: f64,
    populations: Vec<f64>,
    intensity: f64,
    correlations: Vec<Complex64>,
}

fn compute_sample(ctx: &SeriesContext, t: f64) -> SampleRow {
    let n = ctx.n_system;
    let dim = ctx.eigenvalues.len();
    let phases: Vec<Complex64> = ctx
        .eigenvalues
        .iter()
        .map(|&lam| Complex64::from_polar(1.0, lam * t))
        .collect();

    // rows of conj(U): a[p][k] = V[p][k] e^{+i lam_k t}
    let mut a_sys = DMatrix::<Complex64>::zeros(n, dim);
    for k in 0..dim {
        for p in 0..n {
            a_sys[(p, k)] = phases[k] * ctx.rows_system[(p, k)];
        }
    }

    // corr(t) system rows: B = a_sys * corr_eig, then blocks via adjoints
    let b = &a_sys * &ctx.corr_eig;
    let corr_sys = &b * a_sys.adjoint();

    let mut populations = Vec::with_capacity(n);
    let mut m_total = 0.0;
    for p in 0..n {
        let occ = corr_sys[(p, p)].re;
        populations.push(occ);
        m_total += occ;
    }

    let n_flux = ctx.rows_flux.nrows();
    let mut intensity = 0.0;
    if n_flux > 0 {
        let mut a_flux = DMatrix::<Complex64>::zeros(n_flux, dim);
        for k in 0..dim {
            for r in 0..n_flux {
                a_flux[(r, k)] = phases[k] * ctx.rows_flux[(r, k)];
            }
        }
        let corr_sys_bath = &b * a_flux.adjoint();
        for r in 0..n_flux {
            for j in 0..n {
                let w = ctx.flux_weights[r][j];
                if w != 0.0 {
                    intensity += w * corr_sys_bath[(j, r)].im;
                }
            }
        }
        intensity *= -2.0;
    }

    let mut correlations = Vec::with_capacity(ctx.pairs.len());
    if !ctx.pairs.is_empty() {
        // two-time block: rows of conj(U) times V^T conn[:, 0..N]
        let ctt = &a_sys * &ctx.conn_eig_sys;
        for &(i, j) in &ctx.pairs {
            correlations.push(ctt[(i, j)]);
        }
    }

    SampleRow {
        m_total,
        populations,
        intensity,
        correlations,
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::BadTimeGrid);
    }
    if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
        return Err(Error::BadTimeGrid);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadTimeGrid);
    }
    Ok(())
}

fn series_context(
    spec: &ValidatedSpec,
    state0: &MomentState,
    pairs: &[(usize, usize)],
) -> Result<SeriesContext> {
    let n = spec.n_system;
    if state0.dim() != spec.n_modes() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: spec.n_modes(),
            got: state0.dim(),
        });
    }
    for &(i, j) in pairs {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, dim: n });
        }
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, dim: n });
        }
    }

    let coupling = build_hamiltonian(spec);
    let prop = diagonalize(&coupling)?;
    let dim = prop.dim();
    let v = &prop.eigenvectors;

    // bath modes with direct coupling into the system block
    let mut flux_cols: Vec<usize> = Vec::new();
    let mut flux_weights: Vec<Vec<f64>> = Vec::new();
    for q in n..dim {
        let weights: Vec<f64> = (0..n).map(|j| coupling.h[(j, q)]).collect();
        if weights.iter().any(|&w| w != 0.0) {
            flux_cols.push(q);
            flux_weights.push(weights);
        }
    }

    let rows_system = DMatrix::from_fn(n, dim, |p, k| v[(p, k)]);
    let rows_flux = DMatrix::from_fn(flux_cols.len(), dim, |r, k| v[(flux_cols[r], k)]);

    let vt_complex = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(v[(j, i)], 0.0));
    let corr_eig = &vt_complex * state0.corr() * vt_complex.transpose();
    let conn_eig_sys = if pairs.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        let conn = state0.connected();
        let conn_sys_cols = DMatrix::from_fn(dim, n, |i, j| conn[(i, j)]);
        &vt_complex * conn_sys_cols
    };

    Ok(SeriesContext {
        eigenvalues: prop.eigenvalues.clone(),
        rows_system,
        rows_flux,
        flux_weights,
        corr_eig,
        conn_eig_sys,
        pairs: pairs.to_vec(),
        n_system: n,
    })
}

fn assemble_series(
    spec: &ValidatedSpec,
    times: &[f64],
    pairs: &[(usize, usize)],
    rows: Vec<SampleRow>,
) -> ObservableSeries {
    let n = spec.n_system;
    let horizon = reflection_horizon(spec);
    let horizon_exceeded = times.last().copied().unwrap_or(0.0) > horizon;

    let mut m_total = Vec::with_capacity(times.len());
    let mut intensity = Vec::with_capacity(times.len());
    let mut per_guide = vec![Vec::with_capacity(times.len()); n];
    let mut correlations: Vec<((usize, usize), Vec<Complex64>)> = pairs
        .iter()
        .map(|&p| (p, Vec::with_capacity(times.len())))
        .collect();

    for row in rows {
        m_total.push(row.m_total);
        intensity.push(row.intensity);
        for (g, &occ) in row.populations.iter().enumerate() {
            per_guide[g].push(occ);
        }
        for (slot, value) in correlations.iter_mut().zip(row.correlations) {
            slot.1.push(value);
        }
    }

    ObservableSeries {
        times: times.to_vec(),
        m_total,
        per_guide,
        intensity,
        correlations,
        horizon,
        horizon_exceeded,
    }
}

/// Propagate `state0` across the grid and collect populations, total system
/// quanta, boundary flux and the requested two-time correlations.
///
/// Time samples are evaluated in parallel when the `parallel` feature is
/// active; results are identical to the sequential path.
pub fn run_series(
    spec: &ValidatedSpec,
    state0: &MomentState,
    times: &[f64],
    pairs: &[(usize, usize)],
) -> Result<ObservableSeries> {
    check_times(times)?;
    let ctx = series_context(spec, state0, pairs)?;
    #[cfg(feature = "parallel")]
    let rows: Vec<SampleRow> = times.par_iter().map(|&t| compute_sample(&ctx, t)).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<SampleRow> = times.iter().map(|&t| compute_sample(&ctx, t)).collect();
    Ok(assemble_series(spec, times, pairs, rows))
}

/// Sequential variant of [`run_series`]; the baseline the parallel path is
/// benchmarked against.
pub fn run_series_sequential(
    spec: &ValidatedSpec,
    state0: &MomentState,
    times: &[f64],
    pairs: &[(usize, usize)],
) -> Result<ObservableSeries> {
    check_times(times)?;
    let ctx = series_context(spec, state0, pairs)?;
    let rows: Vec<SampleRow> = times.iter().map(|&t| compute_sample(&ctx, t)).collect();
    Ok(assemble_series(spec, times, pairs, rows))
}

/// Uniform grid helper: `samples` points from `0` to `t_max` inclusive.
pub fn uniform_grid(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if !t_max.is_finite() || t_max <= 0.0 || samples < 2 {
        return Err(Error::BadTimeGrid);
    }
    let step = t_max / (samples - 1) as f64;
    Ok((0..samples).map(|k| k as f64 * step).collect())
}

/// Result of an exponential-decay fit `m(t) ~ floor + amplitude e^(-rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub floor: f64,
    pub amplitude: f64,
    /// False when the series does not decay; `rate` is then not meaningful.
    pub decaying: bool,
}

/// Fit the decay rate of the total-quanta series.
///
/// The floor is seeded with the tail mean, the log-linear fit is restricted
/// to the window `[0.5, 2] / rate_estimate`, and the floor is re-estimated
/// from the model tail until the pair converges. A non-decaying series is
/// reported with `decaying = false`, not an error.
pub fn fit_decay_rate(series: &ObservableSeries) -> Result<DecayFit> {
    let times = &series.times;
    let values = &series.m_total;
    if times.len() < 4 {
        return Err(Error::Dimension {
            context: "series length",
            expected: 4,
            got: times.len(),
        });
    }

    let tail_start = times.len() - (times.len() / 10).max(3);
    let tail_mean = values[tail_start..].iter().sum::<f64>() / (values.len() - tail_start) as f64;
    let scale = values
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-300);

    let not_decaying = DecayFit {
        rate: 0.0,
        floor: tail_mean,
        amplitude: 0.0,
        decaying: false,
    };

    let mut floor = tail_mean;
    let mut window: Option<(f64, f64)> = None;
    let mut fit = (0.0f64, 0.0f64); // (rate, amplitude)
    for _pass in 0..4 {
        // least squares of ln(m - floor) = ln(amplitude) - rate t
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (&t, &m) in times.iter().zip(values.iter()) {
            if let Some((lo, hi)) = window {
                if t < lo || t > hi {
                    continue;
                }
            }
            let excess = m - floor;
            if excess > 1e-9 * scale {
                pts.push((t, excess.ln()));
            }
        }
        if pts.len() < 3 {
            return Ok(not_decaying);
        }
        let count = pts.len() as f64;
        let sum_t: f64 = pts.iter().map(|p| p.0).sum();
        let sum_y: f64 = pts.iter().map(|p| p.1).sum();
        let sum_tt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sum_ty: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = count * sum_tt - sum_t * sum_t;
        if denom.abs() < 1e-300 {
            return Ok(not_decaying);
        }
        let slope = (count * sum_ty - sum_t * sum_y) / denom;
        let intercept = (sum_y - slope * sum_t) / count;
        let rate = -slope;
        if rate <= 0.0 || !rate.is_finite() {
            return Ok(not_decaying);
        }
        let amplitude = intercept.exp();
        fit = (rate, amplitude);
        window = Some((0.5 / rate, 2.0 / rate));
        // subtract the fitted tail from the floor estimate
        let corrected: f64 = times[tail_start..]
            .iter()
            .zip(&values[tail_start..])
            .map(|(&t, &m)| m - amplitude * (-rate * t).exp())
            .sum::<f64>()
            / (times.len() - tail_start) as f64;
        floor = corrected;
    }

    Ok(DecayFit {
        rate: fit.0,
        floor,
        amplitude: fit.1,
        decaying: true,
    })
}

fn with_bath_size(spec: &ValidatedSpec, n_bath: usize) -> Result<ValidatedSpec> {
    let n = spec.n_system;
    let mut j_coupling = DMatrix::zeros(n, n_bath - 1);
    for row in 0..n {
        for col in 0..(n_bath - 1).min(spec.j_coupling.ncols()) {
            j_coupling[(row, col)] = spec.j_coupling[(row, col)];
        }
    }
    // a validated ideal spec already carries zeroed omega and j blocks
    crate::model::validate(
        SystemSpec::new(spec.g.clone(), n_bath)
            .with_delta(spec.delta)
            .with_omega(spec.omega.clone())
            .with_j_coupling(j_coupling)
            .with_fidelity(spec.fidelity),
    )
}

/// Smallest bath size whose total-quanta series is converged against the
/// doubled bath to `tol` over the grid, found by doubling then bisecting.
///
/// The system block of `state0` is kept; the bath is re-seeded at each trial
/// size with a uniform diagonal taken from the first bath mode of `state0`.
pub fn converge_bath_size(
    spec: &ValidatedSpec,
    state0: &MomentState,
    times: &[f64],
    tol: f64,
) -> Result<usize> {
    const MAX_BATH: usize = 4096;
    check_times(times)?;
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = spec.n_system;
    if state0.dim() != spec.n_modes() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: spec.n_modes(),
            got: state0.dim(),
        });
    }
    let sys_mean = DVector::from_fn(n, |i, _| state0.mean()[i]);
    let sys_corr = DMatrix::from_fn(n, n, |i, j| state0.corr()[(i, j)]);
    let bath_occupation = state0.corr()[(n, n)].re;

    let mut cache: std::collections::HashMap<usize, Vec<f64>> = std::collections::HashMap::new();
    let series_for =
        |m: usize, cache: &mut std::collections::HashMap<usize, Vec<f64>>| -> Result<Vec<f64>> {
            if let Some(v) = cache.get(&m) {
                return Ok(v.clone());
            }
            let trial_spec = with_bath_size(spec, m)?;
            let state =
                MomentState::from_system_block(&trial_spec, sys_mean.clone(), sys_corr.clone())?
                    .with_thermal_bath(n, bath_occupation)?;
            let series = run_series(&trial_spec, &state, times, &[])?;
            cache.insert(m, series.m_total.clone());
            Ok(series.m_total)
        };

    let deviation = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b.iter())
            .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
    };

    let converged =
        |m: usize, cache: &mut std::collections::HashMap<usize, Vec<f64>>| -> Result<bool> {
            let a = series_for(m, cache)?;
            let b = series_for(2 * m, cache)?;
            Ok(deviation(&a, &b) < tol)
        };

    // doubling phase; the comparison bath 2m stays within the cap
    let mut m = 1usize;
    loop {
        if 2 * m > MAX_BATH {
            return Err(Error::BathNotConverged(MAX_BATH));
        }
        if converged(m, &mut cache)? {
            break;
        }
        m *= 2;
    }
    if m == 1 {
        return Ok(1);
    }

    // bisect (m/2, m]: m passes, m/2 failed
    let mut lo = m / 2;
    let mut hi = m;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if converged(mid, &mut cache)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
