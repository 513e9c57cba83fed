//! Truncated Fock-space operators, states and expectation values.
//!
//! Boson operators are dense `dim x dim` complex matrices over `|0>..|dim-1>`.
//! Spin-boson operators act on `2 * dim` amplitudes indexed `i = 2n + s`, where
//! `s = 0` is the sigma_z = +1 (up) state and `s = 1` is sigma_z = -1 (down).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest squeeze magnitude accepted by [`PhaseSpaceOps::squeeze`].
pub const MAX_SQUEEZE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "dim", rename_all = "snake_case")]
pub enum Space {
    /// Single bosonic mode with `dim` Fock states.
    Boson(usize),
    /// Two-level system tensored with a mode of `dim` Fock states (`2 * dim` amplitudes).
    SpinBoson(usize),
}

impl Space {
    pub fn len(self) -> usize {
        match self {
            Space::Boson(n) => n,
            Space::SpinBoson(n) => 2 * n,
        }
    }

    pub fn fock_dim(self) -> usize {
        match self {
            Space::Boson(n) | Space::SpinBoson(n) => n,
        }
    }
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: CVector,
    space: Space,
}

impl QuantumState {
    /// Normalizes `amplitudes` and tags them with `space`.
    pub fn new(amplitudes: CVector, space: Space) -> Result<Self> {
        if amplitudes.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
            space,
        })
    }

    pub fn from_real(amplitudes: &[f64], space: Space) -> Result<Self> {
        let v = CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(v, space)
    }

    /// Fock state `|n>` of a single mode.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::invalid("n", format!("Fock index {n} outside dimension {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[n] = ONE;
        Self::new(v, Space::Boson(dim))
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim.max(1)).expect("vacuum always fits")
    }

    /// Product state `|n> (x) |s>` with `s = 0` up, `s = 1` down.
    pub fn spin_boson_basis(n: usize, s: usize, dim: usize) -> Result<Self> {
        if n >= dim || s > 1 {
            return Err(Error::invalid(
                "n",
                format!("basis state ({n}, {s}) outside dimension {dim}"),
            ));
        }
        let mut v = CVector::zeros(2 * dim);
        v[2 * n + s] = ONE;
        Self::new(v, Space::SpinBoson(dim))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// Multiplies by a global phase so the largest-magnitude amplitude is real and positive.
    pub fn fix_phase(mut self) -> Self {
        let (idx, _) = self.amplitudes.iter().enumerate().fold((0, -1.0), |(bi, bm), (i, c)| {
            if c.norm() > bm + 1e-14 {
                (i, c.norm())
            } else {
                (bi, bm)
            }
        });
        let c = self.amplitudes[idx];
        if c.norm() > 0.0 {
            let phase = c.conj() / c.norm();
            self.amplitudes.iter_mut().for_each(|a| *a *= phase);
        }
        self
    }

    /// Overlap `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        check_len(self.len(), other.len())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

/// Dense square operator with a Hermiticity tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    hermitian: bool,
}

impl Observable {
    /// Wraps a matrix that must be Hermitian within [`HERMITIAN_TOL`].
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        let defect = hermitian_defect(&matrix)?;
        if defect >= HERMITIAN_TOL {
            return Err(Error::NonHermitian { defect });
        }
        Ok(Self {
            matrix,
            hermitian: true,
        })
    }

    /// Wraps an arbitrary square matrix; the Hermitian flag is set when the defect allows it.
    pub fn general(matrix: CMatrix) -> Result<Self> {
        let defect = hermitian_defect(&matrix)?;
        Ok(Self {
            matrix,
            hermitian: defect < HERMITIAN_TOL,
        })
    }

    pub(crate) fn from_real_symmetric(matrix: DMatrix<f64>) -> Self {
        Self {
            matrix: matrix.map(|x| C64::new(x, 0.0)),
            hermitian: true,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Observable {
        Observable {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn apply(&self, state: &QuantumState) -> Result<CVector> {
        check_len(self.dim(), state.len())?;
        Ok(&self.matrix * state.amplitudes())
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &Observable) -> Result<Observable> {
        check_len(self.dim(), rhs.dim())?;
        Observable::general(&self.matrix * &rhs.matrix)
    }

    /// `c1 * self + c2 * rhs`.
    pub fn combine(&self, c1: C64, rhs: &Observable, c2: C64) -> Result<Observable> {
        check_len(self.dim(), rhs.dim())?;
        Observable::general(self.matrix.scale_c(c1) + rhs.matrix.scale_c(c2))
    }

    /// Embeds a boson operator as `self (x) I_2` in the spin-boson ordering.
    pub fn boson_to_spin_boson(&self) -> Observable {
        Observable {
            matrix: self.matrix.kronecker(&CMatrix::identity(2, 2)),
            hermitian: self.hermitian,
        }
    }

    /// `self (x) spin` for a boson operator and a 2x2 spin operator.
    pub fn tensor_spin(&self, spin: &CMatrix) -> Result<Observable> {
        if spin.shape() != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: spin.nrows(),
            });
        }
        Observable::general(self.matrix.kronecker(spin))
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> CMatrix {
        self.matrix.view((0, 0), (k, k)).into_owned()
    }
}

trait ScaleC {
    fn scale_c(&self, c: C64) -> CMatrix;
}

impl ScaleC for CMatrix {
    fn scale_c(&self, c: C64) -> CMatrix {
        self.map(|x| x * c)
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn hermitian_defect(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    Ok(defect)
}

/// Max-norm of the elementwise difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Pauli matrices in the (up, down) basis.
pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    let i = C64::i();
    CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `I_N (x) spin` for a 2x2 spin operator.
pub fn spin_operator(dim: usize, spin: &CMatrix) -> Observable {
    Observable::general(CMatrix::identity(dim, dim).kronecker(spin)).expect("kronecker of square matrices is square")
}

/// Ladder operators of one truncated mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    pub annihilation: Observable,
    pub creation: Observable,
    pub number: Observable,
    /// `cos(pi a^dagger a)`, i.e. `diag((-1)^n)`.
    pub parity: Observable,
}

impl Ladder {
    /// `a + a^dagger`.
    pub fn position_like(&self) -> Observable {
        Observable {
            matrix: self.annihilation.matrix() + self.creation.matrix(),
            hermitian: true,
        }
    }
}

pub fn build_ladder(rep: &FockRep) -> Ladder {
    ladder_of_dim(rep.dim())
}

fn ladder_of_dim(n: usize) -> Ladder {
    let a = real_annihilation(n);
    let adag = a.transpose();
    let number = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| i as f64));
    let parity = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| parity_sign(i)));
    Ladder {
        annihilation: Observable {
            matrix: a.map(|x| C64::new(x, 0.0)),
            hermitian: false,
        },
        creation: Observable {
            matrix: adag.map(|x| C64::new(x, 0.0)),
            hermitian: false,
        },
        number: Observable::from_real_symmetric(number),
        parity: Observable::from_real_symmetric(parity),
    }
}

pub(crate) fn parity_sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn real_annihilation(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = (k as f64).sqrt();
    }
    a
}

/// Truncated boson space with its ladder matrices.
#[derive(Clone, Debug)]
pub struct FockRep {
    dim: usize,
    working_dim: usize,
    ladder: Ladder,
}

impl FockRep {
    /// Default working dimension `2 * dim + 20`.
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_working_dim(dim, 2 * dim + 20)
    }

    pub fn with_working_dim(dim: usize, working_dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", format!("need at least 2 Fock states, got {dim}")));
        }
        if working_dim < dim {
            return Err(Error::invalid(
                "working_dim",
                format!("working dimension {working_dim} smaller than dim {dim}"),
            ));
        }
        Ok(Self {
            dim,
            working_dim,
            ladder: ladder_of_dim(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn working_dim(&self) -> usize {
        self.working_dim
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn identity(&self) -> Observable {
        Observable {
            matrix: CMatrix::identity(self.dim, self.dim),
            hermitian: true,
        }
    }

    /// Zero-pads a boson state of this dimension to the working dimension.
    pub fn pad(&self, state: &QuantumState) -> Result<CVector> {
        check_len(self.dim, state.len())?;
        let mut v = CVector::zeros(self.working_dim);
        v.rows_mut(0, self.dim).copy_from(state.amplitudes());
        Ok(v)
    }
}

/// Position and momentum quadratures.
#[derive(Clone, Debug)]
pub struct Quadratures {
    pub position: Observable,
    pub momentum: Observable,
}

/// `q = (a + a^dagger)/sqrt(2 m omega)`, `p = i sqrt(m omega / 2)(a^dagger - a)`.
pub fn build_quadratures(rep: &FockRep, params: &ModelParams) -> Result<Quadratures> {
    let (m, w) = (params.mass(), params.omega());
    if !(m > 0.0) {
        return Err(Error::invalid("mass", "must be positive"));
    }
    if !(w > 0.0) {
        return Err(Error::invalid("omega", "must be positive"));
    }
    let l = rep.ladder();
    let a = l.annihilation.matrix();
    let ad = l.creation.matrix();
    let q = (a + ad).unscale((2.0 * m * w).sqrt());
    let p = (ad - a).map(|x| x * C64::new(0.0, (m * w / 2.0).sqrt()));
    Ok(Quadratures {
        position: Observable::hermitian(q)?,
        momentum: Observable::hermitian(p)?,
    })
}

/// Spectral data of a real symmetric matrix conjugated by a diagonal phase.
///
/// The generator `G` satisfies `i G = U M U^dagger` with `M` real symmetric and
/// `U = diag(exp(i theta n))`, so `exp(t G) = U V exp(-i t L) V^T U^dagger`.
#[derive(Clone, Debug)]
struct PhasedSpectrum {
    phases: DVector<C64>,
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl PhasedSpectrum {
    fn new(symmetric: DMatrix<f64>, theta: f64) -> Self {
        let n = symmetric.nrows();
        let eig = SymmetricEigen::new(symmetric);
        Self {
            phases: DVector::from_fn(n, |k, _| C64::from_polar(1.0, theta * k as f64)),
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        }
    }

    fn exp_matrix(&self, t: f64) -> CMatrix {
        let n = self.values.len();
        let v = self.vectors.map(|x| C64::new(x, 0.0));
        let mut scaled = v.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -t * self.values[k]);
        }
        let core = scaled * v.transpose();
        CMatrix::from_fn(n, n, |i, j| self.phases[i] * core[(i, j)] * self.phases[j].conj())
    }

    fn exp_apply(&self, t: f64, x: &CVector) -> CVector {
        let y = x.zip_map(&self.phases, |xi, p| xi * p.conj());
        let v = self.vectors.map(|x| C64::new(x, 0.0));
        let mut coeff = v.transpose() * y;
        for (k, c) in coeff.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, -t * self.values[k]);
        }
        (v * coeff).zip_map(&self.phases, |zi, p| zi * p)
    }
}

/// Displacement and squeeze unitaries built in the working dimension.
///
/// `D(beta) = exp(beta (a^dagger - a))`, `S(gamma) = exp(gamma (a^dagger^2 - a^2) / 2)`,
/// both for real arguments. The generator spectra are computed once, so each
/// new amplitude costs one matrix product rather than a fresh eigendecomposition.
#[derive(Clone, Debug)]
pub struct PhaseSpaceOps {
    dim: usize,
    working_dim: usize,
    displacement: PhasedSpectrum,
    squeeze: PhasedSpectrum,
}

impl PhaseSpaceOps {
    pub fn new(rep: &FockRep) -> Self {
        let nw = rep.working_dim();
        let a = real_annihilation(nw);
        let x = &a + a.transpose();
        let a2 = &a * &a;
        let x2 = (&a2 + a2.transpose()) * 0.5;
        Self {
            dim: rep.dim(),
            working_dim: nw,
            // i (a^dagger - a) = U (a + a^dagger) U^dagger with U = diag(i^n)
            displacement: PhasedSpectrum::new(x, std::f64::consts::FRAC_PI_2),
            // i (a^dagger^2 - a^2)/2 = U (a^2 + a^dagger^2)/2 U^dagger with U = diag(e^{i pi n / 4})
            squeeze: PhasedSpectrum::new(x2, std::f64::consts::FRAC_PI_4),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn working_dim(&self) -> usize {
        self.working_dim
    }

    pub fn check_displacement(&self, beta: f64) -> Result<()> {
        let limit = self.working_dim as f64 / 4.0;
        if !beta.is_finite() || beta * beta > limit {
            return Err(Error::AmplitudeTooLarge {
                beta,
                working_dim: self.working_dim,
                limit,
            });
        }
        Ok(())
    }

    pub fn check_squeeze(&self, gamma: f64) -> Result<()> {
        if !gamma.is_finite() || gamma.abs() > MAX_SQUEEZE {
            return Err(Error::SqueezeTooLarge {
                gamma,
                limit: MAX_SQUEEZE,
            });
        }
        Ok(())
    }

    /// `D(beta)` in the working dimension.
    pub fn displacement_working(&self, beta: f64) -> Result<CMatrix> {
        self.check_displacement(beta)?;
        Ok(self.displacement.exp_matrix(beta))
    }

    /// `S(gamma)` in the working dimension.
    pub fn squeeze_working(&self, gamma: f64) -> Result<CMatrix> {
        self.check_squeeze(gamma)?;
        Ok(self.squeeze.exp_matrix(gamma))
    }

    /// `D(beta)` truncated to the leading `dim x dim` block.
    pub fn displacement(&self, beta: f64) -> Result<Observable> {
        let full = self.displacement_working(beta)?;
        Observable::general(full.view((0, 0), (self.dim, self.dim)).into_owned())
    }

    /// `S(gamma)` truncated to the leading `dim x dim` block.
    pub fn squeeze(&self, gamma: f64) -> Result<Observable> {
        let full = self.squeeze_working(gamma)?;
        Observable::general(full.view((0, 0), (self.dim, self.dim)).into_owned())
    }

    /// Applies `D(beta)` to a working-dimension vector.
    pub fn displace_vector(&self, beta: f64, v: &CVector) -> Result<CVector> {
        self.check_displacement(beta)?;
        check_len(self.working_dim, v.len())?;
        Ok(self.displacement.exp_apply(beta, v))
    }

    /// Applies `S(gamma)` to a working-dimension vector.
    pub fn squeeze_vector(&self, gamma: f64, v: &CVector) -> Result<CVector> {
        self.check_squeeze(gamma)?;
        check_len(self.working_dim, v.len())?;
        Ok(self.squeeze.exp_apply(gamma, v))
    }

    /// Vacuum in the working dimension.
    pub fn working_vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.working_dim);
        v[0] = ONE;
        v
    }

    /// Truncates a working-dimension vector to `dim` and normalizes it.
    pub fn truncate(&self, v: &CVector) -> Result<QuantumState> {
        check_len(self.working_dim, v.len())?;
        QuantumState::new(v.rows(0, self.dim).into_owned(), Space::Boson(self.dim))
    }
}

/// `D(beta)` on `rep`; builds the generator spectra on every call.
pub fn displacement(rep: &FockRep, beta: f64) -> Result<Observable> {
    PhaseSpaceOps::new(rep).displacement(beta)
}

/// `S(gamma)` on `rep`; builds the generator spectra on every call.
pub fn squeeze(rep: &FockRep, gamma: f64) -> Result<Observable> {
    PhaseSpaceOps::new(rep).squeeze(gamma)
}

/// `<psi|M|psi>`.
pub fn expectation(state: &QuantumState, obs: &Observable) -> Result<C64> {
    let mpsi = obs.apply(state)?;
    Ok(state.amplitudes().dotc(&mpsi))
}

/// Real part of `<psi|M|psi>` for Hermitian `M`.
pub fn expectation_real(state: &QuantumState, obs: &Observable) -> Result<f64> {
    if !obs.is_hermitian() {
        return Err(Error::NonHermitian {
            defect: hermitian_defect(obs.matrix())?,
        });
    }
    Ok(expectation(state, obs)?.re)
}

/// `<M^2> - <M>^2`, evaluated as `||(M - <M>) psi||^2` so it is never negative.
pub fn variance(state: &QuantumState, obs: &Observable) -> Result<f64> {
    let mean = expectation_real(state, obs)?;
    let mpsi = obs.apply(state)?;
    let centered = mpsi - state.amplitudes() * C64::new(mean, 0.0);
    Ok(centered.norm_squared())
}

/// Symmetrized covariance `<{A, B}>/2 - <A><B>` of two Hermitian observables.
pub fn covariance(state: &QuantumState, a: &Observable, b: &Observable) -> Result<f64> {
    let ma = expectation_real(state, a)?;
    let mb = expectation_real(state, b)?;
    let apsi = a.apply(state)?;
    let bpsi = b.apply(state)?;
    let sym = apsi.dotc(&bpsi).re;
    Ok(sym - ma * mb)
}

/// Random normalized state whose amplitudes vanish outside the first `support` Fock levels.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, space: Space, support: usize) -> Result<QuantumState> {
    let fock = space.fock_dim();
    if support == 0 || support > fock {
        return Err(Error::invalid("support", format!("need 1 <= support <= {fock}")));
    }
    let per_level = space.len() / fock;
    let mut v = CVector::zeros(space.len());
    for i in 0..support * per_level {
        v[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    QuantumState::new(v, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 0.0, 0.0).unwrap()
    }

    fn coherent(beta: f64, dim: usize) -> QuantumState {
        let mut amps = Vec::with_capacity(dim);
        let mut term = (-beta * beta / 2.0).exp();
        for n in 0..dim {
            if n > 0 {
                term *= beta / (n as f64).sqrt();
            }
            amps.push(term);
        }
        QuantumState::from_real(&amps, Space::Boson(dim)).unwrap()
    }

    #[test]
    fn ladder_small_cases() {
        let rep = FockRep::new(3).unwrap();
        let l = build_ladder(&rep);
        let par: Vec<f64> = (0..3).map(|i| l.parity.matrix()[(i, i)].re).collect();
        assert_eq!(par, vec![1.0, -1.0, 1.0]);
        assert_eq!(l.annihilation.matrix()[(0, 1)].re, 1.0);
        assert_eq!(l.annihilation.matrix()[(1, 2)].re, 2f64.sqrt());
        let rep4 = FockRep::new(4).unwrap();
        let n = build_ladder(&rep4).number;
        for i in 0..4 {
            assert_eq!(n.matrix()[(i, i)].re, i as f64);
        }
    }

    #[test]
    fn ladder_identities_are_exact() {
        for dim in [4, 7, 20] {
            let l = build_ladder(&FockRep::new(dim).unwrap());
            let a = l.annihilation.matrix();
            let ad = l.creation.matrix();
            assert_eq!(ad, &a.adjoint());
            // sqrt(n)^2 rounds to within one ulp of n
            assert!(max_abs_diff(&(ad * a), l.number.matrix()) <= 4.0 * f64::EPSILON * dim as f64);
            let pap = l.parity.matrix() * a * l.parity.matrix();
            assert_eq!(pap, -a);
            let comm = a * ad - ad * a;
            let k = dim - 1;
            let block = comm.view((0, 0), (k, k)).into_owned();
            assert!(max_abs_diff(&block, &CMatrix::identity(k, k)) < 1e-10);
        }
    }

    #[test]
    fn rejects_small_dims() {
        assert!(FockRep::new(1).is_err());
        assert!(FockRep::with_working_dim(10, 9).is_err());
    }

    #[test]
    fn quadrature_vacuum_moments_and_commutator() {
        let rep = FockRep::new(20).unwrap();
        let quad = build_quadratures(&rep, &unit()).unwrap();
        let vac = QuantumState::vacuum(20);
        assert_abs_diff_eq!(expectation(&vac, &quad.position).unwrap().norm(), 0.0);
        let q2 = quad.position.compose(&quad.position).unwrap();
        assert_abs_diff_eq!(expectation(&vac, &q2).unwrap().re, 0.5, epsilon = 1e-14);
        let q = quad.position.matrix();
        let p = quad.momentum.matrix();
        let comm = q * p - p * q;
        let k = 19;
        let target = CMatrix::identity(k, k) * C64::i();
        assert!(max_abs_diff(&comm.view((0, 0), (k, k)).into_owned(), &target) < 1e-10);
    }

    #[test]
    fn quadratures_reject_bad_params() {
        let rep = FockRep::new(4).unwrap();
        let bad = ModelParams::unchecked(0.0, 0.1, 1.0, 1.0);
        assert!(matches!(
            build_quadratures(&rep, &bad),
            Err(Error::InvalidParameter { field: "omega", .. })
        ));
        let bad_mass = ModelParams::unchecked(1.0, 0.1, 1.0, -1.0);
        assert!(matches!(
            build_quadratures(&rep, &bad_mass),
            Err(Error::InvalidParameter { field: "mass", .. })
        ));
    }

    #[test]
    fn displacement_zero_is_identity_and_column_is_coherent() {
        let rep = FockRep::new(30).unwrap();
        let ops = PhaseSpaceOps::new(&rep);
        let d0 = ops.displacement(0.0).unwrap();
        assert!(max_abs_diff(d0.matrix(), &CMatrix::identity(30, 30)) < 1e-12);
        let d = ops.displacement(0.5).unwrap();
        let coh = coherent(0.5, 30);
        for n in 0..30 {
            assert_abs_diff_eq!(d.matrix()[(n, 0)].re, coh.amplitudes()[n].re, epsilon = 1e-12);
            assert!(d.matrix()[(n, 0)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_unitary_on_leading_block() {
        // same check at working_dim = 80 as the independent construction
        for rep in [FockRep::new(40).unwrap(), FockRep::with_working_dim(40, 80).unwrap()] {
            let d = displacement(&rep, 1.0).unwrap();
            let dd = d.matrix().adjoint() * d.matrix();
            let block = dd.view((0, 0), (20, 20)).into_owned();
            assert!(max_abs_diff(&block, &CMatrix::identity(20, 20)) < 1e-8);
        }
    }

    #[test]
    fn displacement_rejects_large_amplitude() {
        let rep = FockRep::with_working_dim(4, 8).unwrap();
        assert!(matches!(displacement(&rep, 1.5), Err(Error::AmplitudeTooLarge { .. })));
        assert!(displacement(&rep, 1.4).is_ok());
    }

    #[test]
    fn squeeze_basics() {
        let rep = FockRep::new(40).unwrap();
        let ops = PhaseSpaceOps::new(&rep);
        assert!(max_abs_diff(ops.squeeze(0.0).unwrap().matrix(), &CMatrix::identity(40, 40)) < 1e-12);
        let s = ops.squeeze(0.3).unwrap();
        let mut col = s.matrix().column(0).into_owned();
        col /= C64::new(col.norm(), 0.0);
        let sq = QuantumState::new(col, Space::Boson(40)).unwrap();
        let n = expectation(&sq, &rep.ladder().number).unwrap().re;
        assert_abs_diff_eq!(n, 0.3f64.sinh().powi(2), epsilon = 1e-10);
        assert_abs_diff_eq!(n, 0.0927326, epsilon = 1e-7);
        assert_abs_diff_eq!(expectation(&sq, &rep.ladder().parity).unwrap().re, 1.0, epsilon = 1e-12);
        for i in 0..40 {
            for j in 0..40 {
                if (i + j) % 2 == 1 {
                    assert!(s.matrix()[(i, j)].norm() < 1e-12);
                }
            }
        }
        assert!(matches!(ops.squeeze(2.5), Err(Error::SqueezeTooLarge { .. })));
    }

    #[test]
    fn squeeze_sign_convention_stretches_position() {
        // Positive gamma widens q: Var(q) = e^{2 gamma} / (2 m omega).
        let rep = FockRep::new(80).unwrap();
        let ops = PhaseSpaceOps::new(&rep);
        let quad = build_quadratures(&rep, &unit()).unwrap();
        let state = ops
            .truncate(&ops.squeeze_vector(0.3, &ops.working_vacuum()).unwrap())
            .unwrap();
        let var = variance(&state, &quad.position).unwrap();
        assert_abs_diff_eq!(var, 0.5 * (0.6f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(var, 0.9111, epsilon = 1e-4);
        let state = ops
            .truncate(&ops.squeeze_vector(-0.3, &ops.working_vacuum()).unwrap())
            .unwrap();
        assert_abs_diff_eq!(
            variance(&state, &quad.position).unwrap(),
            0.5 * (-0.6f64).exp(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn vector_and_matrix_paths_agree() {
        let rep = FockRep::new(12).unwrap();
        let ops = PhaseSpaceOps::new(&rep);
        let v = ops.working_vacuum();
        let via_vec = ops
            .squeeze_vector(0.4, &ops.displace_vector(-0.7, &v).unwrap())
            .unwrap();
        let via_mat = ops.squeeze_working(0.4).unwrap() * ops.displacement_working(-0.7).unwrap() * v;
        assert!((via_vec - via_mat).norm() < 1e-12);
    }

    #[test]
    fn expectation_and_variance_examples() {
        let rep = FockRep::new(40).unwrap();
        let l = rep.ladder();
        let vac = QuantumState::vacuum(40);
        assert_eq!(expectation(&vac, &l.number).unwrap().re, 0.0);
        assert_eq!(expectation(&vac, &l.parity).unwrap().re, 1.0);
        let coh = coherent(0.5, 40);
        assert_abs_diff_eq!(
            expectation(&coh, &l.parity).unwrap().re,
            (-0.5f64).exp(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(expectation(&coh, &l.parity).unwrap().re, 0.60653, epsilon = 1e-5);

        let quad = build_quadratures(&rep, &unit()).unwrap();
        assert_abs_diff_eq!(variance(&vac, &quad.position).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            variance(&coherent(1.0, 40), &quad.position).unwrap(),
            0.5,
            epsilon = 1e-10
        );
    }

    #[test]
    fn errors_on_mismatch_and_non_hermitian() {
        let rep = FockRep::new(5).unwrap();
        let vac = QuantumState::vacuum(6);
        assert!(matches!(
            expectation(&vac, &rep.ladder().number),
            Err(Error::DimensionMismatch { .. })
        ));
        let vac5 = QuantumState::vacuum(5);
        assert!(matches!(
            variance(&vac5, &rep.ladder().annihilation),
            Err(Error::NonHermitian { .. })
        ));
        assert!(Observable::hermitian(rep.ladder().annihilation.matrix().clone()).is_err());
    }

    #[test]
    fn fix_phase_makes_largest_amplitude_positive() {
        let v = CVector::from_vec(vec![C64::new(0.1, 0.0), C64::new(0.0, -0.9), C64::new(0.3, 0.3)]);
        let s = QuantumState::new(v, Space::Boson(3)).unwrap().fix_phase();
        let a = s.amplitudes()[1];
        assert!(a.re > 0.0 && a.im.abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn displacement_composes(b1 in -1.5f64..1.5, b2 in -1.5f64..1.5) {
                let rep = FockRep::new(60).unwrap();
                let ops = PhaseSpaceOps::new(&rep);
                let lhs = ops.displacement(b1).unwrap().compose(&ops.displacement(b2).unwrap()).unwrap();
                let rhs = ops.displacement(b1 + b2).unwrap();
                let k = 30;
                prop_assert!(max_abs_diff(&lhs.leading_block(k), &rhs.leading_block(k)) < 1e-8);
            }

            #[test]
            fn squeeze_preserves_parity(g in -2.0f64..2.0) {
                let rep = FockRep::new(24).unwrap();
                let s = squeeze(&rep, g).unwrap();
                for i in 0..24 {
                    for j in 0..24 {
                        if (i + j) % 2 == 1 {
                            prop_assert!(s.matrix()[(i, j)].norm() < 1e-12);
                        }
                    }
                }
            }

            #[test]
            fn expectation_is_linear(seed in any::<u64>(), c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rep = FockRep::new(10).unwrap();
                let quad = build_quadratures(&rep, &unit()).unwrap();
                let psi = random_state(&mut rng, Space::Boson(10), 10).unwrap();
                let m1 = &quad.position;
                let m2 = &rep.ladder().number;
                let mix = m1.combine(C64::new(c1, 0.0), m2, C64::new(c2, 0.0)).unwrap();
                let lhs = expectation(&psi, &mix).unwrap();
                let rhs = expectation(&psi, m1).unwrap() * c1 + expectation(&psi, m2).unwrap() * c2;
                prop_assert!((lhs - rhs).norm() < 1e-12);
            }

            #[test]
            fn variance_nonnegative(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rep = FockRep::new(12).unwrap();
                let quad = build_quadratures(&rep, &unit()).unwrap();
                let psi = random_state(&mut rng, Space::Boson(12), 12).unwrap();
                prop_assert!(variance(&psi, &quad.momentum).unwrap() >= -1e-12);
                prop_assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
