//! Energy minimisation over the QCC parameters.
//!
//! Gradients come from the parameter-shift rule, which is exact for
//! generators with eigenvalues ±1. The outer loop is a quasi-Newton (BFGS)
//! descent with a backtracking Armijo line search, started at θ = 0.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ansatz::QccCircuit;
use crate::error::{AnsatzError, Result};
use crate::par;
use crate::pauli::PauliSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqeOptions {
    pub gtol: f64,
    pub max_iter: usize,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-7,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Best energy after each iteration, starting with the θ = 0 value.
    pub trace: Vec<f64>,
}

/// `⟨ψ(θ)|H|ψ(θ)⟩`.
pub fn energy(h: &PauliSum, circuit: &QccCircuit, theta: &[f64]) -> Result<f64> {
    Ok(circuit.prepare_state(theta)?.expectation(h)?.re)
}

/// `∂E/∂θ_k = ½[E(θ + π/2·e_k) − E(θ − π/2·e_k)]` for every k.
pub fn energy_gradient(h: &PauliSum, circuit: &QccCircuit, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != circuit.n_params() {
        return Err(AnsatzError::ParameterCount {
            expected: circuit.n_params(),
            got: theta.len(),
        }
        .into());
    }
    par::try_map_range(theta.len(), |k| {
        let mut shifted = theta.to_vec();
        shifted[k] = theta[k] + FRAC_PI_2;
        let plus = energy(h, circuit, &shifted)?;
        shifted[k] = theta[k] - FRAC_PI_2;
        let minus = energy(h, circuit, &shifted)?;
        Ok(0.5 * (plus - minus))
    })
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

pub fn minimize(h: &PauliSum, circuit: &QccCircuit, opts: &VqeOptions) -> Result<VqeResult> {
    let n = circuit.n_params();
    let mut x = DVector::<f64>::zeros(n);
    let mut e = energy(h, circuit, x.as_slice())?;
    let mut trace = vec![e];
    if n == 0 {
        return Ok(VqeResult {
            theta: vec![],
            energy: e,
            iterations: 0,
            converged: true,
            gradient_norm: 0.0,
            trace,
        });
    }
    let mut g = DVector::from_vec(energy_gradient(h, circuit, x.as_slice())?);
    let mut inv_hess = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = g.norm() < opts.gtol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut dir = -(&inv_hess * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            inv_hess.fill_with_identity();
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + step * &dir;
            let e_trial = energy(h, circuit, trial.as_slice())?;
            if e_trial <= e + ARMIJO_C1 * step * slope {
                accepted = Some((trial, e_trial));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, e_new)) = accepted else {
            log::warn!("line search failed at iteration {iterations}; |g| = {:e}", g.norm());
            break;
        };
        let g_new = DVector::from_vec(energy_gradient(h, circuit, x_new.as_slice())?);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - rho * &s * y.transpose();
            let right = &eye - rho * &y * s.transpose();
            inv_hess = left * &inv_hess * right + rho * &s * s.transpose();
        }
        x = x_new;
        e = e_new;
        g = g_new;
        trace.push(e);
        converged = g.norm() < opts.gtol;
    }
    if !converged {
        log::warn!(
            "VQE stopped after {iterations} iterations with |g| = {:e}",
            g.norm()
        );
    }
    Ok(VqeResult {
        theta: x.as_slice().to_vec(),
        energy: e,
        iterations,
        converged,
        gradient_norm: g.norm(),
        trace,
    })
}
