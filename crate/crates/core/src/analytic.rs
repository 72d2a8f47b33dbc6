//! Closed-form predictions of the weak-coupling effective master equation:
//! decay of the total system quanta, emission intensity and its
//! correlated/uncorrelated split, the radiance classification, two-time
//! correlations and the thermal-bath generalizations.
//!
//! Everything here is an exact function of the initial system moments; no
//! integration is involved. The bright-quanta population decays at `N Gamma`
//! while operator amplitudes (and with them the two-time correlations) relax
//! at `N Gamma / 2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{collective_moments, collective_quantities, MomentState, ValidatedSpec};

/// Sign of the correlated intensity at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadianceClass {
    Super,
    Normal,
    Sub,
}

/// Classification plus the correlated intensity it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radiance {
    pub class: RadianceClass,
    pub correlated_part: f64,
}

/// Mean thermal occupation per bath mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBathSpec {
    pub nbar: f64,
}

impl ThermalBathSpec {
    pub fn new(nbar: f64) -> Result<Self> {
        if !nbar.is_finite() || nbar < 0.0 {
            return Err(Error::InvalidThermalOccupation(nbar));
        }
        Ok(ThermalBathSpec { nbar })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

fn n_gamma(spec: &ValidatedSpec) -> f64 {
    spec.n_system as f64 * crate::model::effective_decay_rate(spec)
}

/// Total system quanta at time `t`: the dark quanta stay put and the bright
/// quanta decay at `N Gamma`.
pub fn total_quanta_t(state0: &MomentState, spec: &ValidatedSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    let m = collective_moments(state0, spec)?;
    Ok(m.dark + m.bright * (-n_gamma(spec) * t).exp())
}

/// Emission intensity into the bath, `-d<M>/dt = N Gamma <R(0)> e^(-N Gamma t)`.
pub fn intensity_t(state0: &MomentState, spec: &ValidatedSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    let m = collective_moments(state0, spec)?;
    let ng = n_gamma(spec);
    Ok(ng * m.bright * (-ng * t).exp())
}

/// Split the intensity into its uncorrelated (diagonal) and correlated
/// (cross-guide) parts; they sum to [`intensity_t`] exactly.
pub fn intensity_parts(state0: &MomentState, spec: &ValidatedSpec, t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    if state0.dim() != spec.n_modes() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: spec.n_modes(),
            got: state0.dim(),
        });
    }
    let n = spec.n_system;
    // N Gamma / g_total^2 = 2 / delta, finite even at zero coupling
    let prefactor = 2.0 / spec.delta * (-n_gamma(spec) * t).exp();
    let mut uncorrelated = 0.0;
    let mut correlated = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let weight = spec.g[i] * spec.g[j];
            if i == j {
                uncorrelated += weight * state0.corr()[(i, i)].re;
            } else {
                correlated += weight * state0.corr()[(i, j)];
            }
        }
    }
    let uncorrelated = prefactor * uncorrelated;
    let correlated = prefactor * correlated;
    let scale = uncorrelated.abs().max(correlated.norm()).max(1e-3);
    if correlated.im.abs() > 1e-12 * scale {
        return Err(Error::NotHermitian(correlated.im.abs()));
    }
    Ok((uncorrelated, correlated.re))
}

/// Classify by the sign of the correlated intensity at `t = 0`, with a
/// tolerance scaled to the uncorrelated part.
pub fn classify_radiance(state0: &MomentState, spec: &ValidatedSpec) -> Result<Radiance> {
    let (uncorrelated, correlated) = intensity_parts(state0, spec, 0.0)?;
    let tol = 1e-12 * uncorrelated.abs() + 1e-15;
    let class = if correlated > tol {
        RadianceClass::Super
    } else if correlated < -tol {
        RadianceClass::Sub
    } else {
        RadianceClass::Normal
    };
    Ok(Radiance {
        class,
        correlated_part: correlated,
    })
}

/// Two-time correlation `c_ij(t, 0) = <a_i^dag(t) a_j(0)> - <a_i^dag(t)><a_j(0)>`
/// for system guides, from the regression of the amplitude dynamics:
///
/// `c_ij(t,0) = c_ij(0,0) - (g_i/g_total) (1 - e^(-N Gamma t / 2)) sum_k c_k conn_kj`
///
/// where `conn` is the connected moment matrix of the initial state.
pub fn correlation_t(
    state0: &MomentState,
    spec: &ValidatedSpec,
    i: usize,
    j: usize,
    t: f64,
) -> Result<Complex64> {
    check_time(t)?;
    let n = spec.n_system;
    if state0.dim() != spec.n_modes() {
        return Err(Error::Dimension {
            context: "state dimension",
            expected: spec.n_modes(),
            got: state0.dim(),
        });
    }
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, dim: n });
    }
    let q = collective_quantities(spec);
    let conn = state0.connected();
    let at_zero = conn[(i, j)];
    if q.g_total == 0.0 {
        return Ok(at_zero);
    }
    let mut collective_column = Complex64::new(0.0, 0.0);
    for k in 0..n {
        collective_column += q.c_vector[k] * conn[(k, j)];
    }
    let relax = 1.0 - (-0.5 * n_gamma(spec) * t).exp();
    Ok(at_zero - (spec.g[i] / q.g_total) * relax * collective_column)
}

/// Closed form for the bright class: `quanta * c_i c_j e^(-N Gamma t / 2)`.
pub fn bright_correlation_t(
    spec: &ValidatedSpec,
    quanta: f64,
    i: usize,
    j: usize,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    let q = collective_quantities(spec);
    if q.g_total == 0.0 {
        return Err(Error::ZeroCollectiveCoupling);
    }
    check_pair(spec, i, j)?;
    Ok(quanta * q.c_vector[i] * q.c_vector[j] * (-0.5 * n_gamma(spec) * t).exp())
}

/// Closed form for Fock products: initially uncorrelated guides build up
/// negative correlation toward `-c_i c_j n_j`; the self term keeps the
/// autocorrelation consistent.
pub fn fock_correlation_t(
    spec: &ValidatedSpec,
    occupations: &[u32],
    i: usize,
    j: usize,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    if occupations.len() != spec.n_system {
        return Err(Error::Dimension {
            context: "occupations length",
            expected: spec.n_system,
            got: occupations.len(),
        });
    }
    check_pair(spec, i, j)?;
    let q = collective_quantities(spec);
    let n_j = occupations[j] as f64;
    let self_term = if i == j { n_j } else { 0.0 };
    if q.g_total == 0.0 {
        return Ok(self_term);
    }
    let relax = 1.0 - (-0.5 * n_gamma(spec) * t).exp();
    Ok(-q.c_vector[i] * q.c_vector[j] * relax * n_j + self_term)
}

/// Closed form for the dark class over `pair`: constant in time.
pub fn dark_correlation_t(
    spec: &ValidatedSpec,
    quanta: f64,
    pair: (usize, usize),
    i: usize,
    j: usize,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    check_pair(spec, i, j)?;
    let (p, q_idx) = pair;
    check_pair(spec, p, q_idx)?;
    let (gp, gq) = (spec.g[p], spec.g[q_idx]);
    let norm2 = gp * gp + gq * gq;
    if norm2 == 0.0 {
        return Err(Error::ZeroDarkPair { i: p, j: q_idx });
    }
    let weight = |idx: usize| -> f64 {
        if idx == p {
            gq
        } else if idx == q_idx {
            -gp
        } else {
            0.0
        }
    };
    Ok(quanta * weight(i) * weight(j) / norm2)
}

fn check_pair(spec: &ValidatedSpec, i: usize, j: usize) -> Result<()> {
    let n = spec.n_system;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, dim: n });
    }
    Ok(())
}

/// Total system quanta with the bath prepared at occupation `nbar`:
/// `<L(0)> + nbar + (<R(0)> - nbar) e^(-N Gamma t)`.
pub fn thermal_total_quanta_t(
    state0: &MomentState,
    spec: &ValidatedSpec,
    nbar: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    let bath = ThermalBathSpec::new(nbar)?;
    let m = collective_moments(state0, spec)?;
    Ok(m.dark + bath.nbar + (m.bright - bath.nbar) * (-n_gamma(spec) * t).exp())
}

/// Intensity with a thermal bath; settles to the steady value
/// `N Gamma nbar`.
pub fn thermal_intensity_t(
    state0: &MomentState,
    spec: &ValidatedSpec,
    nbar: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    let bath = ThermalBathSpec::new(nbar)?;
    let m = collective_moments(state0, spec)?;
    let ng = n_gamma(spec);
    Ok(ng * (m.bright - bath.nbar) * (-ng * t).exp() + ng * bath.nbar)
}
