//! Exchange-coupled spin Hamiltonians.
//!
//! Conventions are pinned to the two-spin matrix
//!
//! ```text
//! | -Ω+K   0    0    0  |
//! |   0    ω    K    0  |
//! |   0    K   -ω    0  |
//! |   0    0    0   Ω+K |
//! ```
//!
//! in the basis `|00⟩, |01⟩, |10⟩, |11⟩`, with `K = 2J`, `Ω = (A+B)/2`,
//! `ω = (A−B)/2` and the global shift `J·I` included. The logical qubit of a
//! pair lives on `|01⟩ ≡ |0⟩_L`, `|10⟩ ≡ |1⟩_L`.
//!
//! Chain states index site `i` by bit `i` of the basis index (site 0 is the
//! least significant bit). With that ordering a two-site chain with energies
//! `(A, B)` reproduces the matrix above entry for entry.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{AxisAngle, ComplexMatrix};

/// Largest chain handled by the dense representation.
pub const MAX_CHAIN_SPINS: usize = 12;

/// One AB spin pair: transition energies and the coupling bound.
///
/// Stored as `ω` and `Ω`, the quantities every formula uses, so that a pair
/// built from them reproduces them bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParams {
    omega: f64,
    omega_large: f64,
    pub j_max: f64,
}

impl PairParams {
    pub fn new(a: f64, b: f64, j_max: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument("site energies must be finite".into()));
        }
        Self::from_omegas(0.5 * (a - b), 0.5 * (a + b), j_max)
    }

    /// Build from the half-difference `ω` and half-sum `Ω`.
    pub fn from_omegas(omega: f64, omega_large: f64, j_max: f64) -> Result<Self> {
        if !omega.is_finite() || !omega_large.is_finite() {
            return Err(Error::InvalidArgument("pair energies must be finite".into()));
        }
        if !(j_max.is_finite() && j_max >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "j_max must be finite and >= 0, got {j_max}"
            )));
        }
        Ok(Self {
            omega,
            omega_large,
            j_max,
        })
    }

    /// Transition energy `A = Ω + ω`.
    pub fn a(&self) -> f64 {
        self.omega_large + self.omega
    }

    /// Transition energy `B = Ω − ω`.
    pub fn b(&self) -> f64 {
        self.omega_large - self.omega
    }

    /// Default coupling bound `(√3/2)·ω`, which lets one tilted π pulse reach
    /// a tilt of π/3.
    pub fn default_j_max(omega: f64) -> f64 {
        0.5 * 3f64.sqrt() * omega.abs()
    }

    /// `ω = (A − B)/2`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `Ω = (A + B)/2`.
    pub fn omega_large(&self) -> f64 {
        self.omega_large
    }

    pub fn with_j_max(self, j_max: f64) -> Self {
        Self { j_max, ..self }
    }

    pub fn check_coupling(&self, j: f64) -> Result<()> {
        // a few ulps of slack so bound-saturating pulses survive rounding
        if !(j.is_finite() && j >= 0.0 && j <= self.j_max * (1.0 + 1e-12)) {
            return Err(Error::DomainViolation(format!(
                "coupling J = {j} outside [0, {}]",
                self.j_max
            )));
        }
        Ok(())
    }

    /// `ω' = √(ω² + K²)` with `K = 2J`.
    pub fn precession(&self, j: f64) -> f64 {
        self.omega().hypot(2.0 * j)
    }

    /// Largest reachable tilt `arctan(2 j_max / ω)`; requires `ω > 0`.
    pub fn max_tilt(&self) -> f64 {
        (2.0 * self.j_max).atan2(self.omega())
    }
}

/// The 4×4 pair Hamiltonian in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn pair_hamiltonian(params: &PairParams, j: f64) -> Result<ComplexMatrix> {
    params.check_coupling(j)?;
    Ok(pair_hamiltonian_unchecked(params, j))
}

pub(crate) fn pair_hamiltonian_unchecked(params: &PairParams, j: f64) -> ComplexMatrix {
    let k = 2.0 * j;
    let (w, big) = (params.omega(), params.omega_large());
    let r = |x: f64| Complex64::new(x, 0.0);
    let z = r(0.0);
    #[rustfmt::skip]
    let h = ComplexMatrix::from_row_slice(
        4,
        4,
        &[
            r(-big + k), z, z, z,
            z, r(w), r(k), z,
            z, r(k), r(-w), z,
            z, z, z, r(big + k),
        ],
    );
    h
}

/// `H_L = ω σ_z + K σ_x`, the `{|01⟩, |10⟩}` block of [`pair_hamiltonian`].
pub fn logical_hamiltonian(params: &PairParams, j: f64) -> Result<ComplexMatrix> {
    params.check_coupling(j)?;
    let k = Complex64::new(2.0 * j, 0.0);
    let w = Complex64::new(params.omega(), 0.0);
    Ok(ComplexMatrix::from_row_slice(2, 2, &[w, k, k, -w]))
}

/// Tilt `θ = arctan(2J/ω)` from the z axis toward x.
pub fn tilt_angle(params: &PairParams, j: f64) -> f64 {
    (2.0 * j).atan2(params.omega())
}

/// Rotation axis of a constant-J pulse and its Bloch precession rate `2ω'`.
///
/// The returned [`AxisAngle`] carries the axis only; its angle is zero.
pub fn axis_and_rate(params: &PairParams, j: f64) -> Result<(AxisAngle, f64)> {
    if !(params.omega() > 0.0) {
        return Err(Error::DomainViolation(format!(
            "tilted-axis picture needs ω > 0, got ω = {}",
            params.omega()
        )));
    }
    params.check_coupling(j)?;
    let theta = tilt_angle(params, j);
    let axis = AxisAngle::new([theta.sin(), 0.0, theta.cos()], 0.0)?;
    Ok((axis, 2.0 * params.precession(j)))
}

/// The real rotation `R(θ)` with `R† diag(ω', −ω') R = H_L`.
pub fn diagonalizing_rotation(params: &PairParams, j: f64) -> ComplexMatrix {
    let half = 0.5 * tilt_angle(params, j);
    let (s, c) = half.sin_cos();
    let r = |x: f64| Complex64::new(x, 0.0);
    ComplexMatrix::from_row_slice(2, 2, &[r(c), r(s), r(-s), r(c)])
}

/// Site energies and bond couplings of an open chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub site_energies: Vec<f64>,
    pub bond_couplings: Vec<f64>,
}

impl ChainParams {
    pub fn new(site_energies: Vec<f64>, bond_couplings: Vec<f64>) -> Result<Self> {
        let n = site_energies.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("chain needs at least 2 spins, got {n}")));
        }
        if bond_couplings.len() != n - 1 {
            return Err(Error::InvalidArgument(format!(
                "{n} spins need {} bond couplings, got {}",
                n - 1,
                bond_couplings.len()
            )));
        }
        if site_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("site energies must be finite".into()));
        }
        if let Some(j) = bond_couplings.iter().find(|j| !(j.is_finite() && **j >= 0.0)) {
            return Err(Error::DomainViolation(format!("bond coupling {j} must be >= 0")));
        }
        Ok(Self {
            site_energies,
            bond_couplings,
        })
    }

    /// Alternating `A, B, A, B, ...` energies with every bond off.
    pub fn alternating(n_spins: usize, a: f64, b: f64) -> Result<Self> {
        let energies = (0..n_spins).map(|i| if i % 2 == 0 { a } else { b }).collect();
        Self::new(energies, vec![0.0; n_spins.saturating_sub(1)])
    }

    pub fn n_spins(&self) -> usize {
        self.site_energies.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bond_couplings.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn with_couplings(&self, couplings: &[f64]) -> Result<Self> {
        Self::new(self.site_energies.clone(), couplings.to_vec())
    }

    /// Parameters of the pair formed by `bond` (site `bond` in the A slot).
    pub fn bond_pair(&self, bond: usize, j_max: f64) -> Result<PairParams> {
        if bond >= self.n_bonds() {
            return Err(Error::InvalidArgument(format!("bond {bond} out of range")));
        }
        PairParams::new(self.site_energies[bond], self.site_energies[bond + 1], j_max)
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_CHAIN_SPINS {
        return Err(Error::CapacityExceeded {
            what: format!("{n}-spin chain exceeds the dense limit"),
            needed: Some(n),
            allowed: MAX_CHAIN_SPINS,
        });
    }
    Ok(())
}

/// Real symmetric chain Hamiltonian
/// `Σ −(E_i/2) σ_z^i + Σ J_i (σ^i·σ^{i+1} + 1)`.
pub fn chain_hamiltonian_real(chain: &ChainParams) -> Result<DMatrix<f64>> {
    let n = chain.n_spins();
    check_capacity(n)?;
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..dim {
        let mut d = 0.0;
        for (i, e) in chain.site_energies.iter().enumerate() {
            let up = (s >> i) & 1 == 0;
            d += if up { -0.5 * e } else { 0.5 * e };
        }
        for (i, &j) in chain.bond_couplings.iter().enumerate() {
            if j == 0.0 {
                continue;
            }
            let (bi, bj) = ((s >> i) & 1, (s >> (i + 1)) & 1);
            if bi == bj {
                d += 2.0 * j;
            } else {
                // σ·σ = −1 on antiparallel spins, cancelled by the shift
                let flipped = s ^ (0b11 << i);
                h[(flipped, s)] += 2.0 * j;
            }
        }
        h[(s, s)] = d;
    }
    Ok(h)
}

/// Dense complex form of [`chain_hamiltonian_real`].
pub fn chain_hamiltonian(chain: &ChainParams) -> Result<ComplexMatrix> {
    Ok(chain_hamiltonian_real(chain)?.map(|x| Complex64::new(x, 0.0)))
}

/// `Σ_i σ_z^i` as a diagonal matrix.
pub fn total_sz(n_spins: usize) -> ComplexMatrix {
    let dim = 1usize << n_spins;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for s in 0..dim {
        let down = s.count_ones() as f64;
        m[(s, s)] = Complex64::new(n_spins as f64 - 2.0 * down, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, pauli_x, pauli_z};
    use approx::assert_abs_diff_eq;
    use nalgebra::SymmetricEigen;

    fn real(rows: &[[f64; 4]; 4]) -> ComplexMatrix {
        ComplexMatrix::from_fn(4, 4, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    #[test]
    fn pair_matrix_examples() {
        let p = PairParams::new(3.0, 1.0, 1.0).unwrap();
        let h0 = pair_hamiltonian(&p, 0.0).unwrap();
        let e0 = real(&[[-2., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., -1., 0.], [0., 0., 0., 2.]]);
        assert_eq!(h0, e0);
        let h = pair_hamiltonian(&p, 0.5).unwrap();
        let e = real(&[[-1., 0., 0., 0.], [0., 1., 1., 0.], [0., 1., -1., 0.], [0., 0., 0., 3.]]);
        assert_eq!(h, e);

        let p = PairParams::new(2.0, 2.0, 1.0).unwrap();
        let h = pair_hamiltonian(&p, 0.25).unwrap();
        let e = real(&[
            [-1.5, 0., 0., 0.],
            [0., 0., 0.5, 0.],
            [0., 0.5, 0., 0.],
            [0., 0., 0., 2.5],
        ]);
        assert_eq!(h, e);
    }

    #[test]
    fn coupling_outside_bound_rejected() {
        let p = PairParams::new(3.0, 1.0, 0.5).unwrap();
        assert!(matches!(pair_hamiltonian(&p, 0.6), Err(Error::DomainViolation(_))));
        assert!(matches!(pair_hamiltonian(&p, -0.1), Err(Error::DomainViolation(_))));
        assert!(matches!(logical_hamiltonian(&p, 0.6), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn logical_examples() {
        let p = PairParams::from_omegas(1.0, 0.0, 1.0).unwrap();
        assert_eq!(logical_hamiltonian(&p, 0.0).unwrap(), pauli_z());
        assert_eq!(logical_hamiltonian(&p, 0.5).unwrap(), pauli_z() + pauli_x());
        let eig = SymmetricEigen::new(logical_hamiltonian(&p, 0.5).unwrap());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], -2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn axis_and_rate_examples() {
        let p = PairParams::from_omegas(1.0, 0.0, 1e7).unwrap();
        let (axis, rate) = axis_and_rate(&p, 0.0).unwrap();
        assert_eq!(axis.axis(), [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(rate, 2.0);

        let (axis, rate) = axis_and_rate(&p, 0.5).unwrap();
        let [x, y, z] = axis.axis();
        assert_abs_diff_eq!(x, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(y, 0.0);
        assert_abs_diff_eq!(z, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(rate, 2.0 * 2f64.sqrt(), epsilon = 1e-14);

        let (axis, _) = axis_and_rate(&p, 1e6).unwrap();
        assert_abs_diff_eq!(axis.axis()[0], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn axis_needs_positive_omega() {
        let p = PairParams::from_omegas(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(axis_and_rate(&p, 0.5), Err(Error::DomainViolation(_))));
        let p = PairParams::from_omegas(-1.0, 1.0, 1.0).unwrap();
        assert!(matches!(axis_and_rate(&p, 0.5), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn diagonalization_reconstructs_logical_hamiltonian() {
        for &(w, j) in &[(1.0, 0.5), (0.3, 0.9), (2.0, 0.0), (1.0, 0.866)] {
            let p = PairParams::from_omegas(w, 0.7, 1.0).unwrap();
            let r = diagonalizing_rotation(&p, j);
            let wp = Complex64::new(p.precession(j), 0.0);
            let d = crate::linalg::diag(&[wp, -wp]);
            let rebuilt = r.adjoint() * d * &r;
            assert!(max_abs_diff(&rebuilt, &logical_hamiltonian(&p, j).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn two_site_chain_is_the_pair_matrix() {
        let chain = ChainParams::new(vec![3.0, 1.0], vec![0.5]).unwrap();
        let p = PairParams::new(3.0, 1.0, 1.0).unwrap();
        assert_eq!(chain_hamiltonian(&chain).unwrap(), pair_hamiltonian(&p, 0.5).unwrap());
    }

    #[test]
    fn uncoupled_chain_is_diagonal() {
        let chain = ChainParams::alternating(3, 3.0, 1.0).unwrap();
        let h = chain_hamiltonian(&chain).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(h[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn chain_commutes_with_magnetization_exactly() {
        let chain = ChainParams::new(vec![3.0, 1.0, 2.5, 0.5], vec![0.3, 0.7, 0.1]).unwrap();
        let h = chain_hamiltonian(&chain).unwrap();
        let m = total_sz(4);
        let comm = &h * &m - &m * &h;
        assert!(comm.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn chain_capacity_guard() {
        let chain = ChainParams::alternating(13, 1.0, 0.5).unwrap();
        assert!(matches!(chain_hamiltonian(&chain), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn chain_param_validation() {
        assert!(ChainParams::new(vec![1.0], vec![]).is_err());
        assert!(ChainParams::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(ChainParams::new(vec![1.0, 2.0], vec![-0.1]).is_err());
    }
}
