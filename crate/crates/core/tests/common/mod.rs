//! Shared test support: an independent Fock-space reference solver for up to
//! two photons, plus randomized spec and state generators.
//!
//! The oracle never touches the moment-transport code path it is used to
//! check: it enumerates the occupation basis, builds the many-body
//! Hamiltonian from the single-particle coupling matrix with ladder-operator
//! rules, evolves the wavefunction by exact diagonalization and reads the
//! moments back out of the wavefunction.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use wgsr::model::{validate, MomentState, SystemSpec, ValidatedSpec};

pub const N_GAMMA_PRESET: f64 = 0.083645601506;

pub fn preset_full() -> ValidatedSpec {
    validate(wgsr::coupling::paper_preset()).unwrap()
}

pub fn preset_ideal() -> ValidatedSpec {
    validate(wgsr::coupling::paper_preset().with_fidelity(wgsr::model::Fidelity::Ideal)).unwrap()
}

/// Occupation basis for at most two photons over `n_modes` modes.
pub struct FockBasis {
    pub n_modes: usize,
    pub states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn up_to_two_photons(n_modes: usize) -> Self {
        let mut states = vec![vec![0u32; n_modes]];
        for i in 0..n_modes {
            let mut occ = vec![0u32; n_modes];
            occ[i] = 1;
            states.push(occ);
        }
        for i in 0..n_modes {
            for j in i..n_modes {
                let mut occ = vec![0u32; n_modes];
                occ[i] += 1;
                occ[j] += 1;
                states.push(occ);
            }
        }
        let index = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(k, occ)| (occ, k))
            .collect();
        FockBasis {
            n_modes,
            states,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn idx(&self, occ: &[u32]) -> usize {
        self.index[&occ.to_vec()]
    }

    /// Apply `c_p^dag c_q` to basis state `b`: returns (target index,
    /// amplitude) or None when `occ[q] = 0`.
    fn hop(&self, b: usize, p: usize, q: usize) -> Option<(usize, f64)> {
        let occ = &self.states[b];
        if occ[q] == 0 {
            return None;
        }
        let mut target = occ.clone();
        let lower = (target[q] as f64).sqrt();
        target[q] -= 1;
        let raise = ((target[p] + 1) as f64).sqrt();
        target[p] += 1;
        Some((self.index[&target], lower * raise))
    }
}

/// Exact few-photon reference solver over a single-particle coupling matrix.
pub struct FockOracle {
    pub basis: FockBasis,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl FockOracle {
    pub fn new(h: &DMatrix<f64>) -> Self {
        let n_modes = h.nrows();
        let basis = FockBasis::up_to_two_photons(n_modes);
        let dim = basis.len();
        let mut many_body = DMatrix::<f64>::zeros(dim, dim);
        for b in 0..dim {
            for p in 0..n_modes {
                for q in 0..n_modes {
                    let rate = h[(p, q)];
                    if rate == 0.0 {
                        continue;
                    }
                    if let Some((a, amp)) = basis.hop(b, p, q) {
                        many_body[(a, b)] += rate * amp;
                    }
                }
            }
        }
        let eig = many_body.symmetric_eigen();
        FockOracle {
            basis,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    pub fn evolve(&self, psi0: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let dim = self.basis.len();
        let v = &self.eigenvectors;
        // coefficients in the eigenbasis
        let mut coeff = vec![Complex64::new(0.0, 0.0); dim];
        for k in 0..dim {
            for a in 0..dim {
                coeff[k] += Complex64::new(v[(a, k)], 0.0) * psi0[a];
            }
        }
        let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
        for k in 0..dim {
            let phase = Complex64::from_polar(1.0, -self.eigenvalues[k] * t);
            for a in 0..dim {
                psi[a] += Complex64::new(v[(a, k)], 0.0) * phase * coeff[k];
            }
        }
        psi
    }

    /// First moments and normal-ordered second moments of a wavefunction.
    pub fn moments(&self, psi: &DVector<Complex64>) -> (DVector<Complex64>, DMatrix<Complex64>) {
        let n = self.basis.n_modes;
        let dim = self.basis.len();
        let mut corr = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..dim {
                    if psi[b].norm() == 0.0 {
                        continue;
                    }
                    if let Some((a, amp)) = self.basis.hop(b, i, j) {
                        acc += psi[a].conj() * amp * psi[b];
                    }
                }
                corr[(i, j)] = acc;
            }
        }
        // <c_i> couples total-photon sectors differing by one
        let mut mean = DVector::<Complex64>::zeros(n);
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..dim {
                let occ = &self.basis.states[b];
                if occ[i] == 0 || psi[b].norm() == 0.0 {
                    continue;
                }
                let mut target = occ.clone();
                let amp = (target[i] as f64).sqrt();
                target[i] -= 1;
                let a = self.basis.idx(&target);
                acc += psi[a].conj() * amp * psi[b];
            }
            mean[i] = acc;
        }
        (mean, corr)
    }

    pub fn product_state(&self, occ: &[u32]) -> DVector<Complex64> {
        let mut psi = DVector::from_element(self.basis.len(), Complex64::new(0.0, 0.0));
        psi[self.basis.idx(occ)] = Complex64::new(1.0, 0.0);
        psi
    }

    /// Two photons in the superposition mode with real unit weights `v`:
    /// `(sum_p v_p c_p^dag)^2 |0> / sqrt(2)`.
    pub fn pair_state(&self, v: &[f64]) -> DVector<Complex64> {
        let n = self.basis.n_modes;
        let mut psi = DVector::from_element(self.basis.len(), Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in i..n {
                let mut occ = vec![0u32; n];
                occ[i] += 1;
                occ[j] += 1;
                let amp = if i == j {
                    v[i] * v[i]
                } else {
                    std::f64::consts::SQRT_2 * v[i] * v[j]
                };
                psi[self.basis.idx(&occ)] = Complex64::new(amp, 0.0);
            }
        }
        psi
    }

    /// `alpha |0> + sum_i s_i |1_i>`; exercises nonzero first moments.
    pub fn vacuum_single_superposition(
        &self,
        alpha: Complex64,
        singles: &[Complex64],
    ) -> DVector<Complex64> {
        let n = self.basis.n_modes;
        let mut psi = DVector::from_element(self.basis.len(), Complex64::new(0.0, 0.0));
        psi[self.basis.idx(&vec![0u32; n])] = alpha;
        for i in 0..n {
            let mut occ = vec![0u32; n];
            occ[i] = 1;
            psi[self.basis.idx(&occ)] = singles[i];
        }
        let norm = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        psi / Complex64::new(norm, 0.0)
    }
}

/// Moment state matching an oracle wavefunction.
pub fn moment_state_of(oracle: &FockOracle, psi: &DVector<Complex64>) -> MomentState {
    let (mean, corr) = oracle.moments(psi);
    MomentState::new(mean, corr).unwrap()
}

/// Random small spec with `n_system + n_bath <= max_total`.
pub fn random_small_spec(rng: &mut impl Rng, max_total: usize) -> ValidatedSpec {
    let total = rng.random_range(2..=max_total);
    let n_system = rng.random_range(1..total);
    let n_bath = total - n_system;
    let g: Vec<f64> = (0..n_system).map(|_| rng.random_range(0.05..0.4)).collect();
    let mut omega = DMatrix::zeros(n_system, n_system);
    for i in 0..n_system {
        for j in (i + 1)..n_system {
            let w = rng.random_range(0.0..0.02);
            omega[(i, j)] = w;
            omega[(j, i)] = w;
        }
    }
    let mut j_coupling = DMatrix::zeros(n_system, n_bath - 1);
    for value in j_coupling.iter_mut() {
        *value = rng.random_range(0.0..0.02);
    }
    validate(
        SystemSpec::new(g, n_bath)
            .with_omega(omega)
            .with_j_coupling(j_coupling),
    )
    .unwrap()
}

/// Random spec with positive couplings and no unwanted interactions, for
/// network and classification checks.
pub fn random_clean_spec(rng: &mut impl Rng, n_system: usize, n_bath: usize) -> ValidatedSpec {
    let g: Vec<f64> = (0..n_system).map(|_| rng.random_range(0.02..0.3)).collect();
    validate(SystemSpec::new(g, n_bath)).unwrap()
}

pub fn max_corr_deviation(a: &MomentState, b: &MomentState) -> f64 {
    (a.corr() - b.corr())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()))
}

pub fn max_mean_deviation(a: &MomentState, b: &MomentState) -> f64 {
    (a.mean() - b.mean())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()))
}
