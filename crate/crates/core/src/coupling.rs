//! Producers of [`SystemSpec`] instances: the published reference coupling
//! set and a parametric distance-to-rate model for user geometries.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Fidelity, SystemSpec};

/// Rates below this multiple of `delta` are stored as exact zeros.
const RATE_TRUNCATION: f64 = 1e-12;

/// Reference coupling set: three system guides over a 150-guide bath, all
/// rates normalized by the bath-bath rate. Far-bath couplings vanish beyond
/// the fourth bath guide, and the middle system guide lies in the bath plane
/// so it only couples to the first bath guide.
pub fn paper_preset() -> SystemSpec {
    let g = vec![0.123126, 0.107251, 0.123126];
    let n_bath = 150;

    let mut omega = DMatrix::zeros(3, 3);
    omega[(0, 1)] = 4.12065e-3;
    omega[(1, 0)] = 4.12065e-3;
    omega[(0, 2)] = 7.2793e-5;
    omega[(2, 0)] = 7.2793e-5;
    omega[(1, 2)] = 4.12065e-3;
    omega[(2, 1)] = 4.12065e-3;

    // j_coupling column k-2 couples to bath guide k; the outer guides are
    // mirror images so rows 0 and 2 coincide.
    let mut j_coupling = DMatrix::zeros(3, n_bath - 1);
    for (col, rate) in [(0, 2.42439e-2), (1, 5.06164e-4), (2, 4.89101e-6)] {
        j_coupling[(0, col)] = rate;
        j_coupling[(2, col)] = rate;
    }

    SystemSpec::new(g, n_bath)
        .with_omega(omega)
        .with_j_coupling(j_coupling)
}

/// Exponential surrogate for the evanescent overlap of two guided modes:
/// `rate(d) = amplitude * exp(-(d - reference_distance) / decay_length)`.
/// Distances are in waveguide radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    pub amplitude: f64,
    pub decay_length: f64,
    pub reference_distance: f64,
}

impl CouplingModel {
    pub fn new(amplitude: f64, decay_length: f64, reference_distance: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidRate {
                name: "amplitude",
                index: 0,
                value: amplitude,
            });
        }
        if !decay_length.is_finite() || decay_length <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "decay_length must be positive, got {decay_length}"
            )));
        }
        Ok(CouplingModel {
            amplitude,
            decay_length,
            reference_distance,
        })
    }
}

/// Evaluate the model at separation `d > 0`.
pub fn coupling_rate(model: &CouplingModel, d: f64) -> Result<f64> {
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok(model.amplitude * (-(d - model.reference_distance) / model.decay_length).exp())
}

/// Fit the unique exponential model through two (distance, rate) points.
pub fn calibrate(d1: f64, r1: f64, d2: f64, r2: f64) -> Result<CouplingModel> {
    if !d1.is_finite() || !d2.is_finite() || d1 <= 0.0 || d2 <= 0.0 {
        return Err(Error::NonPositiveDistance(d1.min(d2)));
    }
    if r1 <= 0.0 || r2 <= 0.0 || !r1.is_finite() || !r2.is_finite() {
        return Err(Error::DegenerateCalibration(format!(
            "rates must be positive, got {r1} and {r2}"
        )));
    }
    if d1 == d2 {
        return Err(Error::DegenerateCalibration(
            "calibration distances coincide".to_string(),
        ));
    }
    if r1 == r2 {
        return Err(Error::DegenerateCalibration(
            "equal rates at distinct distances imply an infinite decay length".to_string(),
        ));
    }
    let decay_length = (d2 - d1) / (r1 / r2).ln();
    if !decay_length.is_finite() || decay_length <= 0.0 {
        return Err(Error::DegenerateCalibration(format!(
            "rates must decrease with distance, got decay length {decay_length}"
        )));
    }
    // anchor the reference at d1 so the model reproduces both points exactly
    CouplingModel::new(r1, decay_length, d1)
}

/// Waveguide positions in the transverse plane, in waveguide radii. The
/// first `n_system` entries passed to [`geometry_to_spec`] are system
/// guides; the remainder are bath guides in left-to-right order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec {
    pub positions: Vec<[f64; 2]>,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Compute every pairwise rate from the model over Euclidean distances, take
/// `delta` from the (uniform) bath spacing and return a spec normalized to
/// `delta = 1`.
pub fn geometry_to_spec(
    geom: &GeometrySpec,
    model: &CouplingModel,
    n_system: usize,
) -> Result<SystemSpec> {
    let total = geom.positions.len();
    if n_system == 0 {
        return Err(Error::NoSystemModes);
    }
    if total < n_system + 2 {
        return Err(Error::InvalidGeometry(format!(
            "need at least two bath guides, got {} positions for {} system guides",
            total, n_system
        )));
    }
    for i in 0..total {
        for j in (i + 1)..total {
            if distance(geom.positions[i], geom.positions[j]) < 1e-12 {
                return Err(Error::InvalidGeometry(format!(
                    "positions {i} and {j} coincide"
                )));
            }
        }
    }

    let bath = &geom.positions[n_system..];
    let n_bath = bath.len();
    let step = [bath[1][0] - bath[0][0], bath[1][1] - bath[0][1]];
    for k in 1..n_bath - 1 {
        let d = [bath[k + 1][0] - bath[k][0], bath[k + 1][1] - bath[k][1]];
        if (d[0] - step[0]).abs() > 1e-9 || (d[1] - step[1]).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "bath guides must be collinear and equally spaced; spacing breaks at guide {k}"
            )));
        }
    }
    let delta = coupling_rate(model, (step[0].powi(2) + step[1].powi(2)).sqrt())?;
    if delta <= 0.0 {
        return Err(Error::InvalidGeometry(
            "bath spacing yields a zero bath-bath rate".to_string(),
        ));
    }

    let truncate = |rate: f64| if rate < RATE_TRUNCATION { 0.0 } else { rate };

    let mut g = Vec::with_capacity(n_system);
    for s in 0..n_system {
        let rate = coupling_rate(model, distance(geom.positions[s], bath[0]))? / delta;
        g.push(truncate(rate));
    }

    let mut omega = DMatrix::zeros(n_system, n_system);
    for i in 0..n_system {
        for j in (i + 1)..n_system {
            let rate =
                coupling_rate(model, distance(geom.positions[i], geom.positions[j]))? / delta;
            let rate = truncate(rate);
            omega[(i, j)] = rate;
            omega[(j, i)] = rate;
        }
    }

    let mut j_coupling = DMatrix::zeros(n_system, n_bath - 1);
    for s in 0..n_system {
        for k in 1..n_bath {
            let rate = coupling_rate(model, distance(geom.positions[s], bath[k]))? / delta;
            j_coupling[(s, k - 1)] = truncate(rate);
        }
    }

    Ok(SystemSpec::new(g, n_bath)
        .with_omega(omega)
        .with_j_coupling(j_coupling)
        .with_fidelity(Fidelity::Full))
}
