//! Squeezed-displaced trial states `S(gamma) D(beta)|0>` in the even parity sector.
//!
//! The closed-form energy uses `sinh^2(gamma)` for the squeeze term; it agrees with
//! the direct matrix expectation, while `sinh(gamma^2)` does not (see
//! [`energy_closed_form_sinh_of_square`]). The state is built by applying `D` first
//! and then `S`; the other ordering gives a different functional.

use std::collections::BTreeMap;

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::balance::{
    b1_kinetic_balance, b2_variance_bounds, b7_covariance_balance, property_checks, PropertyCheck, VarianceBounds,
};
use crate::error::{Error, Result};
use crate::fock::{expectation_real, FockRep, PhaseSpaceOps, QuantumState};
use crate::model::{build_reduced_hamiltonian, embed_reduced_state, ModelParams, ParitySector, RabiOperators};
use crate::solver::{solve_rabi_ground, SolveOptions};

pub const MAX_BETA: f64 = 6.0;
pub const MAX_GAMMA: f64 = 2.0;

/// Step of the central-difference gradient.
pub const GRADIENT_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub beta: f64,
    pub gamma: f64,
}

impl TrialParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !beta.is_finite() || beta.abs() > MAX_BETA {
            return Err(Error::invalid("beta", format!("{beta} outside |beta| <= {MAX_BETA}")));
        }
        if !gamma.is_finite() || gamma.abs() > MAX_GAMMA {
            return Err(Error::SqueezeTooLarge {
                gamma,
                limit: MAX_GAMMA,
            });
        }
        Ok(Self { beta, gamma })
    }

    fn in_box(beta: f64, gamma: f64) -> bool {
        beta.abs() <= MAX_BETA && gamma.abs() <= MAX_GAMMA
    }

    /// Rough mean photon number `beta^2 e^{2|gamma|} + sinh^2 gamma`.
    pub fn photon_scale(&self) -> f64 {
        self.beta * self.beta * (2.0 * self.gamma.abs()).exp() + self.gamma.sinh().powi(2)
    }
}

/// `S(gamma) D(beta)|0>`, built in the working dimension and truncated to `ops.dim()`.
pub fn trial_state(ops: &PhaseSpaceOps, t: TrialParams) -> Result<QuantumState> {
    let displaced = ops.displace_vector(t.beta, &ops.working_vacuum())?;
    let squeezed = ops.squeeze_vector(t.gamma, &displaced)?;
    ops.truncate(&squeezed)
}

/// `D(beta) S(gamma)|0>`; not the ansatz, kept to show the ordering matters.
pub fn trial_state_swapped(ops: &PhaseSpaceOps, t: TrialParams) -> Result<QuantumState> {
    let squeezed = ops.squeeze_vector(t.gamma, &ops.working_vacuum())?;
    let displaced = ops.displace_vector(t.beta, &squeezed)?;
    ops.truncate(&displaced)
}

/// `omega [beta^2 e^{2 gamma} + sinh^2 gamma] + 2 lambda beta e^gamma - (omega0/2) e^{-2 beta^2}`.
pub fn energy_closed_form(t: TrialParams, params: &ModelParams) -> f64 {
    closed_form(t.beta, t.gamma, params)
}

/// Variant with `sinh(gamma^2)` as the squeeze term.
pub fn energy_closed_form_sinh_of_square(t: TrialParams, params: &ModelParams) -> f64 {
    let (b, g) = (t.beta, t.gamma);
    params.omega() * (b * b * (2.0 * g).exp() + (g * g).sinh()) + 2.0 * params.lambda() * b * g.exp()
        - params.omega0() / 2.0 * (-2.0 * b * b).exp()
}

fn closed_form(b: f64, g: f64, params: &ModelParams) -> f64 {
    params.omega() * (b * b * (2.0 * g).exp() + g.sinh().powi(2)) + 2.0 * params.lambda() * b * g.exp()
        - params.omega0() / 2.0 * (-2.0 * b * b).exp()
}

/// `<trial| H_+ |trial>` by direct matrix expectation at `ops.dim()`.
pub fn energy_numeric(ops: &PhaseSpaceOps, t: TrialParams, params: &ModelParams) -> Result<f64> {
    let rep = FockRep::with_working_dim(ops.dim(), ops.working_dim())?;
    let h = build_reduced_hamiltonian(&rep, params, ParitySector::Even);
    expectation_real(&trial_state(ops, t)?, &h)
}

/// Central-difference gradient of the closed form.
pub fn energy_gradient(t: TrialParams, params: &ModelParams, step: f64) -> Vector2<f64> {
    let f = |b, g| closed_form(b, g, params);
    Vector2::new(
        (f(t.beta + step, t.gamma) - f(t.beta - step, t.gamma)) / (2.0 * step),
        (f(t.beta, t.gamma + step) - f(t.beta, t.gamma - step)) / (2.0 * step),
    )
}

fn energy_hessian(b: f64, g: f64, params: &ModelParams, h: f64) -> Matrix2<f64> {
    let f = |x, y| closed_form(x, y, params);
    let f0 = f(b, g);
    let bb = (f(b + h, g) - 2.0 * f0 + f(b - h, g)) / (h * h);
    let gg = (f(b, g + h) - 2.0 * f0 + f(b, g - h)) / (h * h);
    let bg = (f(b + h, g + h) - f(b + h, g - h) - f(b - h, g + h) + f(b - h, g - h)) / (4.0 * h * h);
    Matrix2::new(bb, bg, bg, gg)
}

/// Smallest Fock dimension (from 64 upward, doubling) at which the trial state has
/// negligible weight in the top quarter of the retained levels.
pub fn trial_dim(t: TrialParams) -> Result<usize> {
    const TAIL: f64 = 1e-24;
    let mut dim = 64usize;
    loop {
        let ops = PhaseSpaceOps::new(&FockRep::new(dim)?);
        let v = ops.squeeze_vector(t.gamma, &ops.displace_vector(t.beta, &ops.working_vacuum())?)?;
        let tail: f64 = v.iter().skip(3 * dim / 4).map(|c| c.norm_sqr()).sum();
        if tail < TAIL || dim >= 512 {
            return Ok(dim);
        }
        dim *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Spread of simplex energies at which the simplex stops.
    pub energy_tol: f64,
    /// Step size at which the Newton refinement stops.
    pub param_tol: f64,
    pub max_evaluations: usize,
    /// Largest gradient norm accepted as stationary.
    pub grad_tol: f64,
    pub solve: SolveOptions,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            energy_tol: 1e-10,
            param_tol: 1e-8,
            max_evaluations: 2000,
            grad_tol: 1e-6,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationalResult {
    pub trial: TrialParams,
    pub energy: f64,
    pub exact_energy: f64,
    /// `energy - exact_energy`
    pub gap: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub b1_residual: f64,
    pub b7_residual: f64,
    /// Fock dimension used for the residuals.
    pub residual_dim: usize,
    pub converged: bool,
}

/// Minimum of the closed form without reference to the exact ground state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOptimum {
    pub trial: TrialParams,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct BoxedEnergy<'a> {
    params: &'a ModelParams,
}

impl CostFunction for BoxedEnergy<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (b, g) = (x[0], x[1]);
        let cb = b.clamp(-MAX_BETA, MAX_BETA);
        let cg = g.clamp(-MAX_GAMMA, MAX_GAMMA);
        let outside = (b - cb).powi(2) + (g - cg).powi(2);
        Ok(closed_form(cb, cg, self.params) + 1e3 * outside)
    }
}

/// Multi-start points `(0,0)`, `(-lambda/omega, 0)`, `(-lambda/omega, +-0.3)`, clipped to the box.
pub fn starting_points(params: &ModelParams) -> Vec<TrialParams> {
    let b = (-params.lambda() / params.omega()).clamp(-MAX_BETA, MAX_BETA);
    [(0.0, 0.0), (b, 0.0), (b, 0.3), (b, -0.3)]
        .into_iter()
        .map(|(beta, gamma)| TrialParams { beta, gamma })
        .collect()
}

fn simplex_from(start: TrialParams, params: &ModelParams, opts: &OptimizerOptions) -> Result<TrialOptimum> {
    let x0 = vec![start.beta, start.gamma];
    let simplex = vec![x0.clone(), vec![x0[0] + 0.1, x0[1]], vec![x0[0], x0[1] + 0.1]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(opts.energy_tol)
        .map_err(|e| Error::invalid("energy_tol", e.to_string()))?;
    // each iteration costs one or two evaluations outside of shrink steps
    let max_iters = (opts.max_evaluations / 2).max(1) as u64;
    let res = Executor::new(BoxedEnergy { params }, solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(|e| Error::EigDecompositionFailure(format!("simplex: {e}")))?;
    let state = res.state();
    let best = state.get_best_param().cloned().unwrap_or(x0);
    let beta = best[0].clamp(-MAX_BETA, MAX_BETA);
    let gamma = best[1].clamp(-MAX_GAMMA, MAX_GAMMA);
    let trial = TrialParams { beta, gamma };
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    Ok(TrialOptimum {
        trial,
        energy: closed_form(beta, gamma, params),
        grad_norm: energy_gradient(trial, params, GRADIENT_STEP).norm(),
        iterations: state.get_iter() as usize,
        evaluations: state.get_func_counts().get("cost_count").copied().unwrap_or(0) as usize,
        converged,
    })
}

/// Newton steps on the finite-difference gradient and Hessian; each step is kept only
/// if it stays in the box and lowers the gradient norm.
fn polish(mut opt: TrialOptimum, params: &ModelParams, opts: &OptimizerOptions) -> TrialOptimum {
    for _ in 0..20 {
        let t = opt.trial;
        let grad = energy_gradient(t, params, GRADIENT_STEP);
        let hess = energy_hessian(t.beta, t.gamma, params, 1e-4);
        opt.evaluations += 13;
        let Some(step) = hess.cholesky().map(|c| c.solve(&grad)) else {
            break;
        };
        let (b, g) = (t.beta - step[0], t.gamma - step[1]);
        if !TrialParams::in_box(b, g) {
            break;
        }
        let next = TrialParams { beta: b, gamma: g };
        let next_grad = energy_gradient(next, params, GRADIENT_STEP).norm();
        let next_energy = closed_form(b, g, params);
        opt.evaluations += 5;
        if next_grad >= opt.grad_norm || next_energy > opt.energy + 1e-12 {
            break;
        }
        opt.trial = next;
        opt.grad_norm = next_grad;
        opt.energy = next_energy;
        opt.iterations += 1;
        if step.norm() < opts.param_tol * 1e-3 {
            break;
        }
    }
    opt.converged = opt.converged || opt.grad_norm < opts.grad_tol;
    opt
}

/// Best simplex minimum over [`starting_points`], refined by Newton steps.
pub fn optimize_trial(params: &ModelParams, opts: &OptimizerOptions) -> Result<TrialOptimum> {
    let mut best: Option<TrialOptimum> = None;
    let mut evaluations = 0;
    for start in starting_points(params) {
        let run = simplex_from(start, params, opts)?;
        evaluations += run.evaluations;
        if best.map_or(true, |b| run.energy < b.energy) {
            best = Some(run);
        }
    }
    let mut best = best.expect("non-empty start set");
    best.evaluations = evaluations;
    Ok(polish(best, params, opts))
}

/// Virial and covariance residuals of the embedded (p = +1) trial state.
pub fn trial_balance_residuals(t: TrialParams, params: &ModelParams) -> Result<(f64, f64, usize)> {
    let dim = trial_dim(t)?;
    let rep = FockRep::new(dim)?;
    let phase = PhaseSpaceOps::new(&rep);
    let psi = embed_reduced_state(&trial_state(&phase, t)?, ParitySector::Even)?;
    let ops = RabiOperators::new(&rep, params)?;
    Ok((b1_kinetic_balance(&psi, &ops)?, b7_covariance_balance(&psi, &ops)?, dim))
}

/// Optimum, its gap to `exact_energy`, and the balance residuals at the optimum.
///
/// Returns [`Error::OptimizerStalled`] with the best point when the gradient there
/// is not below `opts.grad_tol`.
pub fn minimize_energy_against(
    params: &ModelParams,
    opts: &OptimizerOptions,
    exact_energy: f64,
) -> Result<VariationalResult> {
    let opt = optimize_trial(params, opts)?;
    let (b1_residual, b7_residual, residual_dim) = trial_balance_residuals(opt.trial, params)?;
    let result = VariationalResult {
        trial: opt.trial,
        energy: opt.energy,
        exact_energy,
        gap: opt.energy - exact_energy,
        grad_norm: opt.grad_norm,
        iterations: opt.iterations,
        evaluations: opt.evaluations,
        b1_residual,
        b7_residual,
        residual_dim,
        converged: opt.grad_norm < opts.grad_tol,
    };
    if !result.converged {
        return Err(Error::OptimizerStalled(Box::new(result)));
    }
    Ok(result)
}

/// [`minimize_energy_against`] with the exact energy from [`solve_rabi_ground`].
pub fn minimize_energy(params: &ModelParams, opts: &OptimizerOptions) -> Result<VariationalResult> {
    let exact = solve_rabi_ground(params, &opts.solve)?;
    minimize_energy_against(params, opts, exact.energy)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stationarity {
    pub grad: [f64; 2],
    pub grad_norm: f64,
    pub b1: f64,
    pub b7: f64,
}

/// Gradient of the closed form next to the balance residuals of the embedded trial
/// state. The two vanish together: squeezing and displacing an optimum infinitesimally
/// are generated by `q p + p q` and `p`, whose double commutators with `H` give the
/// virial and covariance relations.
pub fn stationarity_equals_balance(params: &ModelParams, t: TrialParams) -> Result<Stationarity> {
    let g = energy_gradient(t, params, GRADIENT_STEP);
    let (b1, b7, _) = trial_balance_residuals(t, params)?;
    Ok(Stationarity {
        grad: [g[0], g[1]],
        grad_norm: g.norm(),
        b1,
        b7,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialCompliance {
    pub properties: BTreeMap<String, PropertyCheck>,
    pub variance: VarianceBounds,
}

impl TrialCompliance {
    pub fn all_satisfied(&self) -> bool {
        self.variance.satisfied && self.properties.values().all(|p| p.satisfied)
    }
}

/// Ground-state properties evaluated on the embedded trial state at `rep.dim()`.
pub fn trial_property_compliance(rep: &FockRep, t: TrialParams, params: &ModelParams) -> Result<TrialCompliance> {
    let phase = PhaseSpaceOps::new(rep);
    let psi = embed_reduced_state(&trial_state(&phase, t)?, ParitySector::Even)?;
    let ops = RabiOperators::new(rep, params)?;
    Ok(TrialCompliance {
        properties: property_checks(&psi, &ops, Some(ParitySector::Even))?,
        variance: b2_variance_bounds(&psi, &ops, Some(ParitySector::Even))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::wigner_origin;
    use approx::assert_abs_diff_eq;

    fn phase(dim: usize) -> PhaseSpaceOps {
        PhaseSpaceOps::new(&FockRep::new(dim).unwrap())
    }

    fn tp(b: f64, g: f64) -> TrialParams {
        TrialParams::new(b, g).unwrap()
    }

    #[test]
    fn box_is_enforced() {
        assert!(TrialParams::new(6.5, 0.0).is_err());
        assert!(matches!(TrialParams::new(0.0, 2.5), Err(Error::SqueezeTooLarge { .. })));
        assert!(TrialParams::new(-6.0, 2.0).is_ok());
    }

    #[test]
    fn trial_state_examples() {
        let ops = phase(40);
        let vac = trial_state(&ops, tp(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(vac.amplitudes()[0].re, 1.0, epsilon = 1e-14);

        let coh = trial_state(&ops, tp(0.5, 0.0)).unwrap();
        let mut fact = 1.0f64;
        for n in 0..10 {
            if n > 0 {
                fact *= n as f64;
            }
            let want = (-0.125f64).exp() * 0.5f64.powi(n as i32) / fact.sqrt();
            assert_abs_diff_eq!(coh.amplitudes()[n].re, want, epsilon = 1e-12);
        }

        let s = trial_state(&phase(60), tp(0.5, 0.3)).unwrap();
        assert_abs_diff_eq!(s.amplitudes().norm(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(wigner_origin(&s).unwrap(), 2.0 * (-0.5f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn trial_state_rejects_out_of_range() {
        let ops = PhaseSpaceOps::new(&FockRep::with_working_dim(4, 8).unwrap());
        let t = TrialParams { beta: 3.0, gamma: 0.0 };
        assert!(matches!(trial_state(&ops, t), Err(Error::AmplitudeTooLarge { .. })));
    }

    #[test]
    fn closed_form_examples() {
        let p = ModelParams::new(1.0, 0.5, 1.0).unwrap();
        assert_eq!(energy_closed_form(tp(0.0, 0.0), &p), -0.5);
        assert_abs_diff_eq!(
            energy_closed_form(tp(-0.5, 0.0), &p),
            -0.25 - 0.5 * (-0.5f64).exp(),
            epsilon = 1e-15
        );
        let num = energy_numeric(&phase(80), tp(0.3, 0.2), &p).unwrap();
        assert_abs_diff_eq!(energy_closed_form(tp(0.3, 0.2), &p), num, epsilon = 1e-8);
    }

    #[test]
    fn closed_form_matches_numeric_on_grid() {
        // the (|beta| = 2, gamma = 1) corners keep ~2e-5 of their weight above level 120 and ~7e-11 above 200
        let p = ModelParams::new(1.0, 0.7, 1.3).unwrap();
        let ops = phase(240);
        let mut worst_sq = 0.0f64;
        for i in 0..9 {
            for j in 0..9 {
                let t = tp(-2.0 + 0.5 * i as f64, -1.0 + 0.25 * j as f64);
                let num = energy_numeric(&ops, t, &p).unwrap();
                assert_abs_diff_eq!(energy_closed_form(t, &p), num, epsilon = 1e-8);
                worst_sq = worst_sq.max((energy_closed_form_sinh_of_square(t, &p) - num).abs());
            }
        }
        assert!(worst_sq > 1e-2);
    }

    #[test]
    fn swapped_ordering_gives_a_different_functional() {
        let p = ModelParams::new(1.0, 0.5, 1.0).unwrap();
        let ops = phase(80);
        let rep = FockRep::new(80).unwrap();
        let h = build_reduced_hamiltonian(&rep, &p, ParitySector::Even);
        let t = tp(-0.6, 0.4);
        let swapped = expectation_real(&trial_state_swapped(&ops, t).unwrap(), &h).unwrap();
        assert!((swapped - energy_closed_form(t, &p)).abs() > 1e-2);
        // the orderings coincide without squeezing
        let t = tp(-0.6, 0.0);
        let swapped = expectation_real(&trial_state_swapped(&ops, t).unwrap(), &h).unwrap();
        assert_abs_diff_eq!(swapped, energy_closed_form(t, &p), epsilon = 1e-12);
    }

    #[test]
    fn numeric_energy_examples() {
        let p = ModelParams::new(1.0, 0.5, 0.0).unwrap();
        assert_abs_diff_eq!(
            energy_numeric(&phase(40), tp(0.0, 0.0), &p).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let p = ModelParams::new(1.0, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(
            energy_numeric(&phase(40), tp(0.0, 0.0), &p).unwrap(),
            -0.5,
            epsilon = 1e-15
        );
        // omega0 = 0 on the line beta = -(l/w) e^{-gamma}: -l^2/w + w sinh^2 gamma
        let p = ModelParams::new(1.0, 0.5, 0.0).unwrap();
        for g in [-0.4, 0.0, 0.3] {
            let t = tp(-0.5 * (-g as f64).exp(), g);
            let e = energy_numeric(&phase(80), t, &p).unwrap();
            assert_abs_diff_eq!(e, -0.25 + (g as f64).sinh().powi(2), epsilon = 1e-10);
        }
    }

    #[test]
    fn numeric_energy_is_truncation_stable() {
        let p = ModelParams::new(1.0, 0.8, 1.5).unwrap();
        let (a, b) = (phase(80), phase(140));
        for t in [tp(-1.2, 0.4), tp(0.7, -0.6), tp(-1.8, 0.1)] {
            let ea = energy_numeric(&a, t, &p).unwrap();
            let eb = energy_numeric(&b, t, &p).unwrap();
            assert_abs_diff_eq!(ea, eb, epsilon = 1e-9);
        }
    }

    #[test]
    fn trial_parity_is_independent_of_squeezing() {
        let ops = phase(120);
        for b in [0.0, 0.4, -1.1] {
            for g in [-0.8, 0.0, 0.5, 1.0] {
                let w = wigner_origin(&trial_state(&ops, tp(b, g)).unwrap()).unwrap();
                assert_abs_diff_eq!(w / 2.0, (-2.0 * b * b as f64).exp(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_finer_step() {
        let p = ModelParams::new(1.0, 0.6, 1.4).unwrap();
        for t in [tp(-0.3, 0.2), tp(1.0, -0.5), tp(-1.5, 0.8)] {
            let g5 = energy_gradient(t, &p, 1e-5);
            let g6 = energy_gradient(t, &p, 1e-6);
            assert!((g5 - g6).norm() <= 1e-4 * g6.norm());
        }
    }

    #[test]
    fn minimize_decoupled_limit() {
        let p = ModelParams::new(1.0, 0.0, 1.0).unwrap();
        let r = minimize_energy(&p, &OptimizerOptions::default()).unwrap();
        assert_abs_diff_eq!(r.trial.beta, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.trial.gamma, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.energy, -0.5, epsilon = 1e-12);
        assert!(r.gap.abs() < 1e-9);
        assert!(r.b1_residual < 1e-9 && r.b7_residual < 1e-9);
    }

    #[test]
    fn minimize_without_bohr_splitting() {
        let p = ModelParams::new(1.0, 0.5, 0.0).unwrap();
        let r = minimize_energy(&p, &OptimizerOptions::default()).unwrap();
        assert_abs_diff_eq!(r.trial.beta, -0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(r.trial.gamma, 0.0, epsilon = 1e-7);
        assert!(r.gap.abs() < 1e-9);
    }

    #[test]
    fn minimize_weak_coupling_gap() {
        let p = ModelParams::new(1.0, 0.2, 0.5).unwrap();
        let r = minimize_energy(&p, &OptimizerOptions::default()).unwrap();
        assert!(r.gap >= -1e-9);
        assert!(r.gap / r.exact_energy.abs() < 1e-2);
        assert!(r.trial.gamma.abs() < 0.1);
    }

    #[test]
    fn stationarity_and_balance_vanish_together() {
        let p = ModelParams::new(1.0, 0.5, 1.0).unwrap();
        let r = minimize_energy(&p, &OptimizerOptions::default()).unwrap();
        assert!(r.gap >= 0.0);
        let s = stationarity_equals_balance(&p, r.trial).unwrap();
        assert!(s.grad_norm < 1e-6);
        assert!(s.b1 < 1e-5 && s.b7 < 1e-5);

        let off = TrialParams {
            beta: r.trial.beta + 0.1,
            gamma: r.trial.gamma,
        };
        let s = stationarity_equals_balance(&p, off).unwrap();
        assert!(s.grad_norm > 1e-3);
        assert!(s.b1.max(s.b7) > 1e-4);
    }

    #[test]
    fn compliance_examples() {
        let rep = FockRep::new(60).unwrap();
        let p = ModelParams::new(1.0, 0.0, 1.0).unwrap();
        let c = trial_property_compliance(&rep, tp(0.0, 0.0), &p).unwrap();
        assert!(c.all_satisfied());
        assert_eq!(c.properties["p1"].lower_bound, c.properties["p1"].upper_bound);

        let p = ModelParams::new(1.0, 0.5, 1.0).unwrap();
        let r = minimize_energy(&p, &OptimizerOptions::default()).unwrap();
        let c = trial_property_compliance(&rep, r.trial, &p).unwrap();
        for k in ["p1", "p2_sign", "p2_identity", "p3", "p4_bound", "p4_identity"] {
            assert!(c.properties[k].satisfied, "{k}: {:?}", c.properties[k]);
        }

        let p = ModelParams::new(1.0, 0.1, 1.0).unwrap();
        let c = trial_property_compliance(&rep, tp(2.0, 0.0), &p).unwrap();
        let p1 = c.properties["p1"];
        assert!(!p1.satisfied && p1.value > p1.upper_bound.unwrap());
    }
}
