//! Linear ion-chain equilibria and transverse normal modes.
//!
//! Everything is dimensionless: the axial trap frequency and the
//! characteristic length `(e^2 / 4 pi eps0 m w_z^2)^(1/3)` are both 1, so the
//! axial potential of ion `i` is `u_i^2 / 2` and the Coulomb repulsion of a
//! pair is `1 / |u_i - u_j|`.  Transverse confinement enters through the
//! anisotropy `alpha = w_x / w_z`.
//!
//! Mode vectors carry the "com-unity-v1" scaling: each unit vector `b_k` is
//! stretched by `sqrt(n)` so the center-of-mass coupling matrix has unit
//! off-diagonal entries and the stack of scaled matrices sums to `n * I`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag stored alongside every schedule built on these modes.
pub const CONVENTION: &str = "com-unity-v1";

const GRADIENT_TOLERANCE: f64 = 1e-12;
const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub n_ions: usize,
    pub anisotropy: f64,
}

impl TrapConfig {
    /// Chain of `n_ions` with the default anisotropy for that size.
    pub fn new(n_ions: usize) -> Result<Self> {
        Self::with_anisotropy(n_ions, Self::default_anisotropy(n_ions))
    }

    pub fn with_anisotropy(n_ions: usize, anisotropy: f64) -> Result<Self> {
        if n_ions == 0 {
            return Err(Error::InvalidParameter("a chain needs at least one ion".into()));
        }
        if !(anisotropy.is_finite() && anisotropy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "anisotropy must be positive and finite, got {anisotropy}"
            )));
        }
        Ok(Self { n_ions, anisotropy })
    }

    /// `max(10, 1.2 * 0.77 * n^0.86)`: a 20% margin over the empirical
    /// linear-to-zigzag threshold.
    pub fn default_anisotropy(n_ions: usize) -> f64 {
        (1.2 * 0.77 * (n_ions as f64).powf(0.86)).max(10.0)
    }
}

/// Equilibrium positions, transverse spectrum and scaled mode matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeData {
    pub anisotropy: f64,
    /// Ascending equilibrium coordinates.
    pub positions: Vec<f64>,
    /// Mode frequencies in units of the axial frequency, highest (center of
    /// mass) first.
    pub frequencies: Vec<f64>,
    /// Column `k` is the unit-norm mode vector `b_k`.
    pub vectors: DMatrix<f64>,
    /// Column `k` is `sqrt(n) * b_k`; the center-of-mass column is exactly 1.
    pub scaled_vectors: DMatrix<f64>,
    /// `scaled_matrices[k] = n * b_k b_k^T`.
    pub scaled_matrices: Vec<DMatrix<f64>>,
}

/// Wire form of [`ModeData`]; `vectors[i][k]` is ion `i` in mode `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeJson {
    pub n: usize,
    pub anisotropy: f64,
    pub positions: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl ModeData {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn to_wire(&self) -> ModeJson {
        ModeJson {
            n: self.n(),
            anisotropy: self.anisotropy,
            positions: self.positions.clone(),
            frequencies: self.frequencies.clone(),
            vectors: self.vectors.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_wire())?)
    }

    pub fn compute(config: &TrapConfig) -> Result<Self> {
        transverse_modes(config)
    }
}

fn gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = u.to_vec();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = u[i] - u[j];
            let f = d.signum() / (d * d);
            g[i] -= f;
            g[j] += f;
        }
    }
    g
}

fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let k = 2.0 / (u[i] - u[j]).abs().powi(3);
            h[(i, i)] += k;
            h[(j, j)] += k;
            h[(i, j)] -= k;
            h[(j, i)] -= k;
        }
    }
    h
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn is_ascending(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

/// Mirror-symmetrize so that `u[n-1-i] = -u[i]` holds exactly.
fn symmetrize(u: &mut [f64]) {
    let n = u.len();
    for i in 0..n / 2 {
        let v = 0.5 * (u[n - 1 - i] - u[i]);
        u[i] = -v;
        u[n - 1 - i] = v;
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }
}

/// Damped Newton iteration on the axial force balance.
pub fn equilibrium_positions(config: &TrapConfig) -> Result<Vec<f64>> {
    let n = config.n_ions;
    if n == 0 {
        return Err(Error::InvalidParameter("a chain needs at least one ion".into()));
    }
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - 0.5 * (n as f64 - 1.0)) * spacing)
        .collect();
    symmetrize(&mut u);

    let mut g = gradient(&u);
    let mut norm = inf_norm(&g);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if norm <= GRADIENT_TOLERANCE {
            return Ok(u);
        }
        // The Hessian is strictly diagonally dominant with a positive
        // diagonal, hence positive definite on the whole ordered cone.
        let step = axial_hessian(&u)
            .cholesky()
            .expect("axial Hessian is positive definite")
            .solve(&DVector::from_column_slice(&g));

        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-8 {
            let mut trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - t * s).collect();
            symmetrize(&mut trial);
            if is_ascending(&trial) {
                let tg = gradient(&trial);
                let tn = inf_norm(&tg);
                if tn < norm || (t == 1.0 && tn <= GRADIENT_TOLERANCE) {
                    u = trial;
                    g = tg;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm <= GRADIENT_TOLERANCE {
        Ok(u)
    } else {
        Err(Error::EquilibriumNotConverged {
            iterations: MAX_NEWTON_ITERATIONS,
            gradient: norm,
        })
    }
}

/// Transverse Hessian `alpha^2 I - L` where `L` is the Coulomb graph
/// Laplacian with weights `1/|u_i - u_j|^3`.
pub fn transverse_hessian(positions: &[f64], anisotropy: f64) -> DMatrix<f64> {
    let n = positions.len();
    let mut k = DMatrix::from_diagonal_element(n, n, anisotropy * anisotropy);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = 1.0 / (positions[i] - positions[j]).abs().powi(3);
            k[(i, i)] -= w;
            k[(j, j)] -= w;
            k[(i, j)] = w;
            k[(j, i)] = w;
        }
    }
    k
}

/// Flip `v` so its largest-magnitude component is positive; among
/// near-ties the lowest index decides.
fn fix_sign(v: &mut [f64]) {
    let max = inf_norm(v);
    if let Some(lead) = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn transverse_modes(config: &TrapConfig) -> Result<ModeData> {
    let n = config.n_ions;
    let alpha = config.anisotropy;
    let positions = equilibrium_positions(config)?;
    let hessian = transverse_hessian(&positions, alpha);

    let eig = SymmetricEigen::new(hessian);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut frequencies = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 0.0 {
            return Err(Error::ZigzagInstability {
                mode: k,
                eigenvalue: lambda,
            });
        }
        frequencies.push(lambda.sqrt());
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        fix_sign(&mut v);
        vectors.set_column(k, &DVector::from_vec(v));
    }

    // The top eigenpair is the center-of-mass mode (alpha^2, 1/sqrt(n)) in
    // exact arithmetic; pin it so downstream identities hold exactly.
    frequencies[0] = alpha;
    let root_n = (n as f64).sqrt();
    vectors.set_column(0, &DVector::from_element(n, 1.0 / root_n));
    let mut scaled_vectors = &vectors * root_n;
    scaled_vectors.set_column(0, &DVector::from_element(n, 1.0));

    let scaled_matrices = (0..n)
        .map(|k| {
            let s = scaled_vectors.column(k);
            &s * s.transpose()
        })
        .collect();

    Ok(ModeData {
        anisotropy: alpha,
        positions,
        frequencies,
        vectors,
        scaled_vectors,
        scaled_matrices,
    })
}

/// The stack of scaled per-mode coupling matrices `n * b_k b_k^T`.
pub fn mode_matrices(modes: &ModeData) -> &[DMatrix<f64>] {
    &modes.scaled_matrices
}

/// `pi / min_k |w_k - w_{k+1}|`, the shortest gate that still resolves
/// neighbouring modes.
pub fn min_gate_time(modes: &ModeData) -> Result<f64> {
    min_gate_time_for_spectrum(&modes.frequencies)
}

pub fn min_gate_time_for_spectrum(frequencies: &[f64]) -> Result<f64> {
    if frequencies.len() < 2 {
        return Err(Error::InvalidParameter(
            "a minimum gate time needs at least two modes".into(),
        ));
    }
    let mut sorted = frequencies.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let gap = sorted
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    if gap < 1e-12 {
        return Err(Error::DegenerateSpectrum { gap });
    }
    Ok(PI / gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn modes(n: usize, alpha: f64) -> ModeData {
        transverse_modes(&TrapConfig::with_anisotropy(n, alpha).unwrap()).unwrap()
    }

    #[test]
    fn wire_form_is_row_major() {
        let m = modes(3, 10.0);
        let w: ModeJson = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(w.n, 3);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(w.vectors[i][k], m.vectors[(i, k)]);
            }
        }
    }

    #[test]
    fn single_ion_sits_at_center() {
        let cfg = TrapConfig::new(1).unwrap();
        assert_eq!(equilibrium_positions(&cfg).unwrap(), vec![0.0]);
        let m = transverse_modes(&cfg).unwrap();
        assert_eq!(m.frequencies, vec![cfg.anisotropy]);
        assert_eq!(m.vectors[(0, 0)], 1.0);
    }

    #[test]
    fn two_and_three_ion_force_balance() {
        let u2 = equilibrium_positions(&TrapConfig::new(2).unwrap()).unwrap();
        let a2 = 0.25_f64.cbrt();
        assert_abs_diff_eq!(u2[0], -a2, epsilon = 1e-12);
        assert_abs_diff_eq!(u2[1], a2, epsilon = 1e-12);

        let u3 = equilibrium_positions(&TrapConfig::new(3).unwrap()).unwrap();
        let a3 = 1.25_f64.cbrt();
        assert_abs_diff_eq!(u3[0], -a3, epsilon = 1e-12);
        assert_abs_diff_eq!(u3[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u3[2], a3, epsilon = 1e-12);
    }

    #[test]
    fn large_chains_converge_symmetric_and_ordered() {
        for n in [10, 37, 64, 100] {
            let u = equilibrium_positions(&TrapConfig::new(n).unwrap()).unwrap();
            assert!(inf_norm(&gradient(&u)) <= 1e-12, "n = {n}");
            assert!(is_ascending(&u));
            for i in 0..n {
                assert_abs_diff_eq!(u[i], -u[n - 1 - i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn two_ion_spectrum() {
        let alpha = 7.5;
        let m = modes(2, alpha);
        assert_abs_diff_eq!(m.frequencies[0], alpha, epsilon = 1e-12);
        assert_abs_diff_eq!(m.frequencies[1], (alpha * alpha - 1.0).sqrt(), epsilon = 1e-12);
        // tilt mode scaled off-diagonal is -1
        assert_abs_diff_eq!(m.scaled_matrices[1][(0, 1)], -1.0, epsilon = 1e-12);
        assert!(m.vectors[(0, 1)] > 0.0);
    }

    #[test]
    fn orthonormal_and_complete() {
        for n in [2, 5, 12, 40, 100] {
            let m = transverse_modes(&TrapConfig::new(n).unwrap()).unwrap();
            let gram = m.vectors.transpose() * &m.vectors;
            let defect = (gram - DMatrix::<f64>::identity(n, n)).amax();
            assert!(defect <= 1e-10, "n = {n}: {defect:e}");

            let mut sum = DMatrix::<f64>::zeros(n, n);
            for j in mode_matrices(&m) {
                sum += j;
            }
            let completeness = (sum - DMatrix::<f64>::identity(n, n) * n as f64).amax();
            assert!(completeness <= 1e-9, "n = {n}: {completeness:e}");

            let com = &m.scaled_matrices[0];
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(com[(i, j)], 1.0);
                }
            }
            assert!(m.frequencies.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn deterministic() {
        let cfg = TrapConfig::new(9).unwrap();
        assert_eq!(transverse_modes(&cfg).unwrap(), transverse_modes(&cfg).unwrap());
    }

    #[test]
    fn weak_confinement_is_zigzag() {
        let cfg = TrapConfig::with_anisotropy(10, 1.5).unwrap();
        match transverse_modes(&cfg) {
            Err(Error::ZigzagInstability { mode, eigenvalue }) => {
                assert!((1..10).contains(&mode));
                assert!(eigenvalue <= 0.0);
            }
            other => panic!("expected zigzag instability, got {other:?}"),
        }
    }

    #[test]
    fn gate_time_bound() {
        assert_abs_diff_eq!(min_gate_time_for_spectrum(&[1.0 + PI, 1.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            min_gate_time_for_spectrum(&[2.0, 2.0]),
            Err(Error::DegenerateSpectrum { .. })
        ));
        assert!(min_gate_time_for_spectrum(&[2.0]).is_err());

        let m = modes(5, 10.0);
        let gap = m
            .frequencies
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min_gate_time(&m).unwrap(), PI / gap, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(TrapConfig::with_anisotropy(0, 10.0).is_err());
        assert!(TrapConfig::with_anisotropy(3, -1.0).is_err());
        assert!(TrapConfig::with_anisotropy(3, f64::NAN).is_err());
    }
}
