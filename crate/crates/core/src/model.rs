//! Rabi Hamiltonian, its conserved parity and the parity-reduced bosonic Hamiltonians.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    build_quadratures, check_len, parity_sign, sigma_x, sigma_y, sigma_z, spin_operator, CMatrix, CVector, FockRep,
    Observable, QuantumState, Space, C64,
};

/// A point `(omega, lambda, omega0)` of the Rabi parameter plane plus the oscillator mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    omega: f64,
    lambda: f64,
    omega0: f64,
    mass: f64,
}

impl ModelParams {
    /// Unit mass.
    pub fn new(omega: f64, lambda: f64, omega0: f64) -> Result<Self> {
        Self::with_mass(omega, lambda, omega0, 1.0)
    }

    pub fn with_mass(omega: f64, lambda: f64, omega0: f64, mass: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid(
                "omega",
                format!("must be positive and finite, got {omega}"),
            ));
        }
        // negative lambda is the same model after sigma_x -> -sigma_x
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be non-negative and finite, got {lambda}"),
            ));
        }
        if !(omega0 >= 0.0 && omega0.is_finite()) {
            return Err(Error::invalid(
                "omega0",
                format!("must be non-negative and finite, got {omega0}"),
            ));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid(
                "mass",
                format!("must be positive and finite, got {mass}"),
            ));
        }
        Ok(Self::unchecked(omega, lambda, omega0, mass))
    }

    pub(crate) fn unchecked(omega: f64, lambda: f64, omega0: f64, mass: f64) -> Self {
        Self {
            omega,
            lambda,
            omega0,
            mass,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Coupling force `F0 = sqrt(2 m omega) lambda`.
    pub fn coupling_force(&self) -> f64 {
        (2.0 * self.mass * self.omega).sqrt() * self.lambda
    }

    /// All three energies multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_mass(self.omega * c, self.lambda * c, self.omega0 * c, self.mass)
    }
}

/// Eigenvalue `p = +-1` of the parity `P = -sigma_z cos(pi a^dagger a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParitySector {
    Even,
    Odd,
}

impl ParitySector {
    pub fn sign(self) -> f64 {
        match self {
            ParitySector::Even => 1.0,
            ParitySector::Odd => -1.0,
        }
    }

    pub fn from_sign(p: i32) -> Result<Self> {
        match p {
            1 => Ok(ParitySector::Even),
            -1 => Ok(ParitySector::Odd),
            _ => Err(Error::invalid("sector", format!("parity must be +1 or -1, got {p}"))),
        }
    }

    pub fn both() -> [ParitySector; 2] {
        [ParitySector::Even, ParitySector::Odd]
    }
}

impl fmt::Display for ParitySector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParitySector::Even => f.write_str("+1"),
            ParitySector::Odd => f.write_str("-1"),
        }
    }
}

fn full_hamiltonian_matrix(dim: usize, omega: f64, lambda: f64, omega0: f64) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * dim, 2 * dim);
    for n in 0..dim {
        h[(2 * n, 2 * n)] = omega * n as f64 + omega0 / 2.0;
        h[(2 * n + 1, 2 * n + 1)] = omega * n as f64 - omega0 / 2.0;
        if n + 1 < dim {
            // lambda sqrt(n+1) couples |n,s> with |n+1,1-s>
            let g = lambda * ((n + 1) as f64).sqrt();
            for s in 0..2 {
                let (i, j) = (2 * n + s, 2 * (n + 1) + (1 - s));
                h[(i, j)] = g;
                h[(j, i)] = g;
            }
        }
    }
    h
}

/// `H = omega a^dagger a + lambda (a + a^dagger) sigma_x + (omega0/2) sigma_z` on `2 * dim` amplitudes.
pub fn build_full_hamiltonian(rep: &FockRep, params: &ModelParams) -> Observable {
    Observable::from_real_symmetric(full_hamiltonian_matrix(
        rep.dim(),
        params.omega(),
        params.lambda(),
        params.omega0(),
    ))
}

/// Full Hamiltonian without the sign restriction on `lambda`.
#[cfg(test)]
pub(crate) fn full_hamiltonian_any_sign(dim: usize, omega: f64, lambda: f64, omega0: f64) -> Observable {
    Observable::from_real_symmetric(full_hamiltonian_matrix(dim, omega, lambda, omega0))
}

/// `P = -sigma_z cos(pi a^dagger a)`, diagonal in the `2n + s` ordering.
pub fn build_parity_operator(rep: &FockRep) -> Observable {
    let dim = rep.dim();
    let diag = nalgebra::DVector::from_fn(2 * dim, |i, _| {
        let (n, s) = (i / 2, i % 2);
        let sz = if s == 0 { 1.0 } else { -1.0 };
        -parity_sign(n) * sz
    });
    Observable::from_real_symmetric(DMatrix::from_diagonal(&diag))
}

/// `H_p = omega a^dagger a + lambda (a + a^dagger) - (omega0/2) p cos(pi a^dagger a)`.
pub fn build_reduced_hamiltonian(rep: &FockRep, params: &ModelParams, sector: ParitySector) -> Observable {
    Observable::from_real_symmetric(reduced_hamiltonian_matrix(rep.dim(), params, sector))
}

pub(crate) fn reduced_hamiltonian_matrix(dim: usize, params: &ModelParams, sector: ParitySector) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(dim, dim);
    let p = sector.sign();
    for n in 0..dim {
        h[(n, n)] = params.omega() * n as f64 - 0.5 * params.omega0() * p * parity_sign(n);
        if n + 1 < dim {
            let g = params.lambda() * ((n + 1) as f64).sqrt();
            h[(n, n + 1)] = g;
            h[(n + 1, n)] = g;
        }
    }
    h
}

/// Lifts a boson state `phi` into the parity-`p` spin-boson state
/// `(|phi>|+>_x - p cos(pi a^dagger a)|phi>|->_x)/sqrt(2)`, with `|+->_x = (|up> +- |down>)/sqrt(2)`.
///
/// Fock level `n` lands on spin up when `p (-1)^n = -1` and on spin down otherwise.
pub fn embed_reduced_state(phi: &QuantumState, sector: ParitySector) -> Result<QuantumState> {
    let dim = match phi.space() {
        Space::Boson(n) => n,
        Space::SpinBoson(n) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: 2 * n,
            })
        }
    };
    let p = sector.sign();
    let mut v = CVector::zeros(2 * dim);
    for (n, &c) in phi.amplitudes().iter().enumerate() {
        let pc = p * parity_sign(n);
        v[2 * n] = c * (0.5 * (1.0 - pc));
        v[2 * n + 1] = c * (0.5 * (1.0 + pc));
    }
    QuantumState::new(v, Space::SpinBoson(dim))
}

/// Inverse of [`embed_reduced_state`] on definite-parity states: `phi_n = psi_(n,up) + psi_(n,down)`,
/// i.e. `sqrt(2) <+_x|psi>`.
pub fn reduce_to_boson(state: &QuantumState) -> Result<QuantumState> {
    let dim = match state.space() {
        Space::SpinBoson(n) => n,
        Space::Boson(n) => {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: n,
            })
        }
    };
    let a = state.amplitudes();
    let v = CVector::from_fn(dim, |n, _| a[2 * n] + a[2 * n + 1]);
    QuantumState::new(v, Space::Boson(dim))
}

/// Spin-boson operators shared by the balance checks at one parameter point.
#[derive(Clone, Debug)]
pub struct RabiOperators {
    pub params: ModelParams,
    pub dim: usize,
    pub hamiltonian: Observable,
    pub parity: Observable,
    /// `q (x) I`
    pub position: Observable,
    /// `p (x) I`
    pub momentum: Observable,
    /// `q^2 (x) I`
    pub position_sq: Observable,
    /// `a^dagger a (x) I`
    pub number: Observable,
    /// `cos(pi a^dagger a) (x) I`
    pub boson_parity: Observable,
    pub sigma_x: Observable,
    pub sigma_y: Observable,
    pub sigma_z: Observable,
    /// `q sigma_x`
    pub position_sigma_x: Observable,
    /// `p sigma_x`
    pub momentum_sigma_x: Observable,
    /// `p sigma_y`
    pub momentum_sigma_y: Observable,
    /// `(a + a^dagger) sigma_x`
    pub quadrature_sigma_x: Observable,
    /// `a^dagger a cos(pi a^dagger a)`
    pub number_boson_parity: Observable,
    /// `a^dagger a sigma_z`
    pub number_sigma_z: Observable,
}

impl RabiOperators {
    pub fn new(rep: &FockRep, params: &ModelParams) -> Result<Self> {
        let dim = rep.dim();
        let l = rep.ladder();
        let quad = build_quadratures(rep, params)?;
        let sx = sigma_x();
        let sy = sigma_y();
        let sz = sigma_z();
        let q2 = quad.position.compose(&quad.position)?;
        let n_c = l.number.compose(&l.parity)?;
        Ok(Self {
            params: *params,
            dim,
            hamiltonian: build_full_hamiltonian(rep, params),
            parity: build_parity_operator(rep),
            position: quad.position.boson_to_spin_boson(),
            momentum: quad.momentum.boson_to_spin_boson(),
            position_sq: q2.boson_to_spin_boson(),
            number: l.number.boson_to_spin_boson(),
            boson_parity: l.parity.boson_to_spin_boson(),
            sigma_x: spin_operator(dim, &sx),
            sigma_y: spin_operator(dim, &sy),
            sigma_z: spin_operator(dim, &sz),
            position_sigma_x: quad.position.tensor_spin(&sx)?,
            momentum_sigma_x: quad.momentum.tensor_spin(&sx)?,
            momentum_sigma_y: quad.momentum.tensor_spin(&sy)?,
            quadrature_sigma_x: l.position_like().tensor_spin(&sx)?,
            number_boson_parity: n_c.boson_to_spin_boson(),
            number_sigma_z: l.number.tensor_spin(&sz)?,
        })
    }

    pub fn check_state(&self, state: &QuantumState) -> Result<()> {
        match state.space() {
            Space::SpinBoson(n) if n == self.dim => Ok(()),
            other => Err(Error::DimensionMismatch {
                expected: 2 * self.dim,
                found: other.len(),
            }),
        }
    }

    /// `||(H - e) psi||`.
    pub fn eigen_residual(&self, state: &QuantumState, energy: f64) -> Result<f64> {
        check_len(self.hamiltonian.dim(), state.len())?;
        let hpsi = self.hamiltonian.apply(state)?;
        Ok((hpsi - state.amplitudes() * C64::new(energy, 0.0)).norm())
    }
}

/// Max-norm of `A B - B A`.
pub fn commutator_norm(a: &Observable, b: &Observable) -> f64 {
    let (x, y): (&CMatrix, &CMatrix) = (a.matrix(), b.matrix());
    let c = x * y - y * x;
    c.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
