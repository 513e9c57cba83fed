//! Dense diagonalization and the truncation-converged Rabi ground state.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::FockRep;
use crate::fock::{CVector, Observable, QuantumState, Space, C64};
use crate::model::{
    build_full_hamiltonian, embed_reduced_state, reduced_hamiltonian_matrix, ModelParams, ParitySector,
};

/// Sector gap (in units of omega) below which the two parity sectors are called degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityLabel {
    Definite(ParitySector),
    Degenerate,
}

impl ParityLabel {
    /// Sector of the representative state; the even state stands in for a degenerate pair.
    pub fn representative(self) -> ParitySector {
        match self {
            ParityLabel::Definite(p) => p,
            ParityLabel::Degenerate => ParitySector::Even,
        }
    }

    pub fn sector(self) -> Option<ParitySector> {
        match self {
            ParityLabel::Definite(p) => Some(p),
            ParityLabel::Degenerate => None,
        }
    }
}

impl fmt::Display for ParityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParityLabel::Definite(p) => p.fmt(f),
            ParityLabel::Degenerate => f.write_str("degenerate"),
        }
    }
}

impl Serialize for ParityLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_dim: usize,
    pub start_dim: usize,
    /// Diagonalize only at this dimension (convergence judged against half of it).
    pub fixed_dim: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_dim: 256,
            start_dim: 16,
            fixed_dim: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64, max_dim: usize) -> Self {
        Self {
            tol,
            max_dim,
            ..Self::default()
        }
    }

    pub fn fixed(dim: usize, tol: f64) -> Self {
        Self {
            tol,
            max_dim: dim,
            start_dim: dim,
            fixed_dim: Some(dim),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        match self.fixed_dim {
            Some(d) if d < 4 => Err(Error::invalid(
                "dim",
                format!("fixed dimension must be at least 4, got {d}"),
            )),
            Some(_) => Ok(()),
            None if self.max_dim < 8 => Err(Error::invalid(
                "max_dim",
                format!("must be at least 8, got {}", self.max_dim),
            )),
            None => Ok(()),
        }
    }

    /// Dimensions visited, in order.
    pub fn schedule(&self) -> Vec<usize> {
        if let Some(d) = self.fixed_dim {
            return vec![(d / 2).max(2), d];
        }
        let mut dims = Vec::new();
        let mut d = self.start_dim.clamp(2, self.max_dim);
        while d < self.max_dim {
            dims.push(d);
            d *= 2;
        }
        dims.push(self.max_dim);
        dims
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStep {
    pub dim: usize,
    pub energy: f64,
    pub even_energy: f64,
    pub odd_energy: f64,
    /// Change from the previous dimension; absent on the first row.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GroundSolution {
    pub params: ModelParams,
    pub energy: f64,
    /// Spin-boson ground state (the even representative when degenerate).
    pub state: QuantumState,
    /// Boson state of the winning sector, `sqrt(2) <+_x|state>`.
    pub reduced: QuantumState,
    pub parity: ParityLabel,
    pub dim_used: usize,
    pub converged: bool,
    pub energy_delta: f64,
    /// Lowest odd-sector energy minus lowest even-sector energy.
    pub sector_gap: f64,
    /// `||(H - E) state||` with the full Hamiltonian at `dim_used`.
    pub eigen_residual: f64,
    pub history: Vec<ConvergenceStep>,
}

impl GroundSolution {
    /// Sector of `state`.
    pub fn state_sector(&self) -> ParitySector {
        self.parity.representative()
    }

    pub fn rep(&self) -> Result<FockRep> {
        FockRep::new(self.dim_used)
    }
}

fn real_part_if_real(m: &Observable) -> Option<DMatrix<f64>> {
    if m.matrix().iter().all(|z| z.im == 0.0) {
        Some(m.matrix().map(|z| z.re))
    } else {
        None
    }
}

fn require_hermitian(m: &Observable) -> Result<()> {
    if m.is_hermitian() {
        Ok(())
    } else {
        let defect = m
            .matrix()
            .iter()
            .zip(m.matrix().adjoint().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Err(Error::NonHermitian { defect })
    }
}

/// Eigenvalues ascending with matching eigenvectors as columns.
fn eigh(m: &Observable) -> Result<(Vec<f64>, Vec<CVector>)> {
    require_hermitian(m)?;
    let fail = || Error::EigDecompositionFailure(format!("no convergence for {0}x{0} matrix", m.dim()));
    let (values, vectors): (Vec<f64>, Vec<CVector>) = if let Some(real) = real_part_if_real(m) {
        let eig = SymmetricEigen::try_new(real, EIG_EPS, EIG_MAX_ITER).ok_or_else(fail)?;
        let vals = eig.eigenvalues.iter().copied().collect();
        let vecs = eig
            .eigenvectors
            .column_iter()
            .map(|c| c.map(|x| C64::new(x, 0.0)))
            .collect();
        (vals, vecs)
    } else {
        let eig = SymmetricEigen::try_new(m.matrix().clone(), EIG_EPS, EIG_MAX_ITER).ok_or_else(fail)?;
        let vals = eig.eigenvalues.iter().copied().collect();
        let vecs = eig.eigenvectors.column_iter().map(|c| c.into_owned()).collect();
        (vals, vecs)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok((
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| vectors[i].clone()).collect(),
    ))
}

fn lowest_real_symmetric(m: DMatrix<f64>) -> Result<(f64, CVector)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::EigDecompositionFailure(format!("no convergence for {n}x{n} matrix")))?;
    let k = eig.eigenvalues.imin();
    Ok((eig.eigenvalues[k], eig.eigenvectors.column(k).map(|x| C64::new(x, 0.0))))
}

/// Lowest eigenvalue and a unit eigenvector tagged as a boson state of the matrix dimension.
pub fn ground_state(matrix: &Observable) -> Result<(f64, QuantumState)> {
    ground_state_in(matrix, Space::Boson(matrix.dim()))
}

/// As [`ground_state`], tagging the eigenvector with `space`.
///
/// The eigenvector phase is fixed so its largest-magnitude amplitude is real and positive.
pub fn ground_state_in(matrix: &Observable, space: Space) -> Result<(f64, QuantumState)> {
    if space.len() != matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dim(),
            found: space.len(),
        });
    }
    require_hermitian(matrix)?;
    let (e, v) = match real_part_if_real(matrix) {
        Some(real) => lowest_real_symmetric(real)?,
        None => {
            let (vals, vecs) = eigh(matrix)?;
            (vals[0], vecs[0].clone())
        }
    };
    Ok((e, QuantumState::new(v, space)?.fix_phase()))
}

/// The `k` smallest eigenvalues, ascending.
pub fn spectrum_head(matrix: &Observable, k: usize) -> Result<Vec<f64>> {
    if k > matrix.dim() {
        return Err(Error::invalid(
            "k",
            format!("requested {k} eigenvalues of a {0}x{0} matrix", matrix.dim()),
        ));
    }
    let (vals, _) = eigh(matrix)?;
    Ok(vals.into_iter().take(k).collect())
}

struct SectorSolve {
    even: (f64, CVector),
    odd: (f64, CVector),
}

fn solve_sectors(dim: usize, params: &ModelParams) -> Result<SectorSolve> {
    Ok(SectorSolve {
        even: lowest_real_symmetric(reduced_hamiltonian_matrix(dim, params, ParitySector::Even))?,
        odd: lowest_real_symmetric(reduced_hamiltonian_matrix(dim, params, ParitySector::Odd))?,
    })
}

/// Ground state of the Rabi model from the two parity-reduced Hamiltonians, doubling the
/// Fock dimension until the ground energy changes by less than `opts.tol`.
///
/// Returns [`Error::NotConverged`] carrying the best-effort solution when the schedule is
/// exhausted.
pub fn solve_rabi_ground(params: &ModelParams, opts: &SolveOptions) -> Result<GroundSolution> {
    opts.validate()?;
    let mut history: Vec<ConvergenceStep> = Vec::new();
    let mut last: Option<(usize, SectorSolve)> = None;
    let mut converged = false;
    for dim in opts.schedule() {
        let sol = solve_sectors(dim, params)?;
        let energy = sol.even.0.min(sol.odd.0);
        let delta = history.last().map(|s| energy - s.energy);
        history.push(ConvergenceStep {
            dim,
            energy,
            even_energy: sol.even.0,
            odd_energy: sol.odd.0,
            delta,
        });
        last = Some((dim, sol));
        if matches!(delta, Some(d) if d.abs() < opts.tol) {
            converged = true;
            break;
        }
    }
    let (dim, sol) = last.expect("schedule is never empty");
    let sector_gap = sol.odd.0 - sol.even.0;
    let parity = if sector_gap.abs() < DEGENERACY_THRESHOLD * params.omega() {
        ParityLabel::Degenerate
    } else if sector_gap > 0.0 {
        ParityLabel::Definite(ParitySector::Even)
    } else {
        ParityLabel::Definite(ParitySector::Odd)
    };
    let sector = parity.representative();
    let (energy, phi) = match sector {
        ParitySector::Even => sol.even,
        ParitySector::Odd => sol.odd,
    };
    let reduced = QuantumState::new(phi, Space::Boson(dim))?.fix_phase();
    let state = embed_reduced_state(&reduced, sector)?;
    let h = build_full_hamiltonian(&FockRep::new(dim)?, params);
    let eigen_residual = (h.apply(&state)? - state.amplitudes() * C64::new(energy, 0.0)).norm();
    let energy_delta = history.last().and_then(|s| s.delta).unwrap_or(f64::NAN);
    let solution = GroundSolution {
        params: *params,
        energy,
        state,
        reduced,
        parity,
        dim_used: dim,
        converged,
        energy_delta,
        sector_gap,
        eigen_residual,
        history,
    };
    if converged {
        Ok(solution)
    } else {
        Err(Error::NotConverged(Box::new(solution)))
    }
}
