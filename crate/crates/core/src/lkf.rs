//! The Lyapunov-Krasovskii functional with a singular kernel
//!
//! ```text
//! V(t) = x(t)ᵀ P x(t)
//!      + ∫_{-τ̄}^0 ∫_{t+θ}^t x(s)ᵀ Q x(s) ds dθ
//!      + ∫_0^τ̄ ξ^{α-1} ∫_{t-ξ}^t x(s)ᵀ R x(s) ds dξ
//! ```
//!
//! evaluated over a stored trajectory, plus an L1-scheme Caputo derivative
//! for checking fractional Lyapunov inequalities numerically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fde::{SystemModel, Trajectory};
use crate::sdp::{lambda_max, lambda_min};
use crate::specfun::gamma_unchecked;

/// Outer nodes of the substituted V3 quadrature.
pub const V3_OUTER_NODES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkfWeights {
    #[serde(with = "crate::rows")]
    pub p: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub q: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub r: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LkfBounds {
    pub c1: f64,
    pub c2: f64,
}

impl LkfWeights {
    pub fn new(p: DMatrix<f64>, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let w = Self { p, q, r };
        w.validate()?;
        Ok(w)
    }

    pub fn identity(n: usize) -> Self {
        let i = DMatrix::identity(n, n);
        Self {
            p: i.clone(),
            q: i.clone(),
            r: i,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p.nrows();
        for (name, m) in [("P", &self.p), ("Q", &self.q), ("R", &self.r)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
            let asym = (m - m.transpose()).amax();
            if asym > 1e-12 * m.amax().max(1.0) {
                return Err(Error::Domain(format!("{name} is not symmetric (|M - Mᵀ| = {asym:.2e})")));
            }
            if lambda_min(m) <= 0.0 {
                return Err(Error::Domain(format!("{name} is not positive definite")));
            }
        }
        Ok(())
    }

    /// `c1 = λmin(P)`, `c2 = λmax(P) + (τ̄²/2)λmax(Q) + (τ̄^{α+1}/(α+1))λmax(R)`.
    pub fn bounds(&self, alpha: f64, tau_bar: f64) -> LkfBounds {
        LkfBounds {
            c1: lambda_min(&self.p),
            c2: lambda_max(&self.p)
                + 0.5 * tau_bar * tau_bar * lambda_max(&self.q)
                + tau_bar.powf(alpha + 1.0) / (alpha + 1.0) * lambda_max(&self.r),
        }
    }
}

pub fn eval_v1(p: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(p * x))
}

/// `C(ξ_j) = ∫_{t-ξ_j}^t x(s)ᵀ M x(s) ds` on `ξ_j = jδ`, `j = 0..=N`, `Nδ = τ̄`.
struct Cumulative {
    delta: f64,
    c: Vec<f64>,
    q: Vec<f64>,
}

impl Cumulative {
    fn new(m: &DMatrix<f64>, traj: &Trajectory, t: f64, tau_bar: f64) -> Result<Self> {
        if tau_bar <= 0.0 {
            return Ok(Self { delta: 1.0, c: vec![0.0], q: vec![0.0] });
        }
        let steps = ((tau_bar / traj.h) - 1e-9).ceil().max(1.0) as usize;
        let delta = tau_bar / steps as f64;
        let mut q = Vec::with_capacity(steps + 1);
        for j in 0..=steps {
            let s = if j == steps { t - tau_bar } else { t - j as f64 * delta };
            let x = traj.lookup(s)?;
            q.push(eval_v1(m, &x));
        }
        let mut c = vec![0.0; steps + 1];
        for j in 1..=steps {
            c[j] = c[j - 1] + 0.5 * delta * (q[j - 1] + q[j]);
        }
        Ok(Self { delta, c, q })
    }

    fn at(&self, xi: f64) -> f64 {
        let last = self.c.len() - 1;
        let s = xi / self.delta;
        let j = (s.floor() as usize).min(last);
        if j == last {
            return self.c[last];
        }
        let f = s - j as f64;
        let q_mid = self.q[j] * (1.0 - f) + self.q[j + 1] * f;
        self.c[j] + 0.5 * f * self.delta * (self.q[j] + q_mid)
    }
}

fn check_history(traj: &Trajectory, t: f64, tau_bar: f64) -> Result<()> {
    let lo = traj.t0 - traj.history.tau_bar;
    if t - tau_bar < lo - 1e-9 || t > traj.t_latest() + 1e-9 {
        return Err(Error::OutOfRange { t: t - tau_bar, lo, hi: traj.t_latest() });
    }
    Ok(())
}

/// `∫_{-τ̄}^0 ∫_{t+θ}^t xᵀQx ds dθ` by iterated trapezoid on the grid.
pub fn eval_v2(q: &DMatrix<f64>, traj: &Trajectory, t: f64, tau_bar: f64) -> Result<f64> {
    check_history(traj, t, tau_bar)?;
    let cum = Cumulative::new(q, traj, t, tau_bar)?;
    let mut v = 0.0;
    for j in 1..cum.c.len() {
        v += 0.5 * cum.delta * (cum.c[j - 1] + cum.c[j]);
    }
    Ok(v)
}

/// `∫_0^τ̄ ξ^{α-1} ∫_{t-ξ}^t xᵀRx ds dξ`. The substitution `u = ξ^α` removes
/// the kernel singularity; the outer integral is a trapezoid with `nodes` points.
pub fn eval_v3_with(r: &DMatrix<f64>, alpha: f64, traj: &Trajectory, t: f64, tau_bar: f64, nodes: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1]")));
    }
    check_history(traj, t, tau_bar)?;
    let cum = Cumulative::new(r, traj, t, tau_bar)?;
    let u_max = tau_bar.powf(alpha);
    let du = u_max / (nodes - 1) as f64;
    let mut v = 0.0;
    for i in 0..nodes {
        let u = i as f64 * du;
        let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        let xi = if i == nodes - 1 { tau_bar } else { u.powf(1.0 / alpha) };
        v += w * cum.at(xi);
    }
    Ok(v * du / alpha)
}

pub fn eval_v3(r: &DMatrix<f64>, alpha: f64, traj: &Trajectory, t: f64, tau_bar: f64) -> Result<f64> {
    eval_v3_with(r, alpha, traj, t, tau_bar, V3_OUTER_NODES)
}

pub fn eval_full(w: &LkfWeights, alpha: f64, traj: &Trajectory, t: f64, tau_bar: f64) -> Result<f64> {
    let x = traj.lookup(t)?;
    Ok(eval_v1(&w.p, &x) + eval_v2(&w.q, traj, t, tau_bar)? + eval_v3(&w.r, alpha, traj, t, tau_bar)?)
}

/// V at every grid node.
pub fn eval_series(w: &LkfWeights, alpha: f64, traj: &Trajectory, tau_bar: f64) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    (0..traj.len())
        .into_par_iter()
        .map(|k| eval_full(w, alpha, traj, traj.time(k), tau_bar))
        .collect()
}

/// L1-scheme Caputo derivative of uniformly sampled `f` at node `k`.
pub fn caputo_derivative_numeric(samples: &[f64], h: f64, alpha: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InsufficientHistory);
    }
    if k >= samples.len() {
        return Err(Error::Domain(format!("node {k} beyond {} samples", samples.len())));
    }
    let e = 1.0 - alpha;
    let mut acc = 0.0;
    for j in 0..k {
        let b = if j == 0 { 1.0 } else { (j as f64 + 1.0).powf(e) - (j as f64).powf(e) };
        acc += b * (samples[k - j] - samples[k - j - 1]);
    }
    Ok(acc * h.powf(-alpha) / gamma_unchecked(2.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticLemmaReport {
    /// max over nodes of `D^α(xᵀPx) - 2xᵀP D^α x`
    pub max_excess: f64,
    pub worst_time: f64,
    /// `h^α · max |2xᵀP D^α x|`, the discretization allowance
    pub slack: f64,
    pub holds: bool,
}

/// Checks `D^α(xᵀPx) ≤ 2xᵀP D^α x` along a trajectory from `fde::integrate`,
/// using the stored right-hand side as `D^α x`.
pub fn verify_quadratic_lemma(p: &DMatrix<f64>, traj: &Trajectory, model: &SystemModel) -> QuadraticLemmaReport {
    let n = model.dim;
    let v: Vec<f64> = traj.states.iter().map(|x| eval_v1(p, x)).collect();
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_time = traj.t0;
    let mut scale: f64 = 0.0;
    for k in 1..traj.len() {
        let x = &traj.states[k];
        let dx = traj.rhs[k].rows(0, n);
        let rhs = 2.0 * x.dot(&(p * dx));
        scale = scale.max(rhs.abs());
        let lhs = caputo_derivative_numeric(&v, traj.h, model.alpha, k).expect("k >= 1");
        if lhs - rhs > max_excess {
            max_excess = lhs - rhs;
            worst_time = traj.time(k);
        }
    }
    if traj.len() < 2 {
        max_excess = 0.0;
    }
    let slack = traj.h.powf(model.alpha) * scale;
    QuadraticLemmaReport {
        max_excess,
        worst_time,
        slack,
        holds: max_excess <= slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fde::{integrate, InitialFunction, SolverConfig};
    use crate::specfun::ml_decay;

    fn constant_traj(c: &[f64], tau: f64) -> Trajectory {
        let n = c.len();
        let model = SystemModel::linear(0.9, DMatrix::zeros(n, n));
        let init = InitialFunction::constant(DVector::from_column_slice(c), tau);
        integrate(&model, &init, &SolverConfig::new(0.05, 2.0), None).unwrap()
    }

    #[test]
    fn v1_examples() {
        let x = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(eval_v1(&DMatrix::identity(2, 2), &x), 25.0);
        assert_eq!(eval_v1(&DMatrix::identity(2, 2), &DVector::zeros(2)), 0.0);
    }

    #[test]
    fn constant_trajectory_closed_forms() {
        let tau = 0.5;
        let alpha = 0.95;
        let traj = constant_traj(&[0.5, -0.3, 0.4], tau);
        let c2 = 0.5;
        let i3 = DMatrix::identity(3, 3);
        let v2 = eval_v2(&i3, &traj, 1.0, tau).unwrap();
        assert!((v2 - 0.5 * tau * tau * c2).abs() < 1e-14);
        let v3 = eval_v3(&i3, alpha, &traj, 1.0, tau).unwrap();
        let want = c2 * tau.powf(alpha + 1.0) / (alpha + 1.0);
        assert!(((v3 - want) / want).abs() < 1e-5, "{v3} vs {want}");
        // inside the history window too
        let v3_early = eval_v3(&i3, alpha, &traj, 0.2, tau).unwrap();
        assert!(((v3_early - want) / want).abs() < 1e-5);
        let full = eval_full(&LkfWeights::identity(3), alpha, &traj, 1.0, tau).unwrap();
        assert!((full - (c2 + 0.5 * tau * tau * c2 + want)).abs() < 1e-5);
    }

    #[test]
    fn zero_trajectory_gives_zero() {
        let traj = constant_traj(&[0.0, 0.0], 0.4);
        assert_eq!(eval_full(&LkfWeights::identity(2), 0.8, &traj, 1.0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn history_must_cover_window() {
        let traj = constant_traj(&[1.0], 0.2);
        assert!(matches!(eval_v2(&DMatrix::identity(1, 1), &traj, 0.1, 0.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn v3_quadrature_refinement() {
        let model = SystemModel::linear(0.95, DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.5, -1.5]));
        let init = InitialFunction::constant(DVector::from_vec(vec![1.0, -0.5]), 0.5);
        let traj = integrate(&model, &init, &SolverConfig::new(0.05, 3.0), None).unwrap();
        let r = DMatrix::identity(2, 2);
        let coarse = eval_v3(&r, 0.95, &traj, 1.0, 0.5).unwrap();
        let fine = eval_v3_with(&r, 0.95, &traj, 1.0, 0.5, 4 * V3_OUTER_NODES).unwrap();
        assert!(((coarse - fine) / fine).abs() < 5e-3);
    }

    #[test]
    fn l1_derivative_examples() {
        let h = 0.01;
        let consts = vec![2.0; 101];
        assert_eq!(caputo_derivative_numeric(&consts, h, 0.5, 100).unwrap(), 0.0);
        assert!(matches!(caputo_derivative_numeric(&consts, h, 0.5, 0), Err(Error::InsufficientHistory)));

        // D^α t = t^{1-α}/Γ(2-α), exact for the L1 scheme on linear data
        let lin: Vec<f64> = (0..=100).map(|k| k as f64 * h).collect();
        let want = 1.0 / gamma_unchecked(1.5);
        assert!((caputo_derivative_numeric(&lin, h, 0.5, 100).unwrap() - want).abs() < 1e-12);

        // E_α(-t^α) is an eigenfunction
        let a = 0.95;
        let ml: Vec<f64> = (0..=200).map(|k| ml_decay(a, 1.0, k as f64 * h).unwrap()).collect();
        let d = caputo_derivative_numeric(&ml, h, a, 200).unwrap();
        assert!((d + ml[200]).abs() < 5e-3, "{d} vs {}", -ml[200]);
    }

    #[test]
    fn quadratic_lemma_on_linear_systems() {
        let zero = constant_traj(&[0.0], 0.0);
        let model = SystemModel::linear(0.9, DMatrix::zeros(1, 1));
        assert_eq!(verify_quadratic_lemma(&DMatrix::identity(1, 1), &zero, &model).max_excess, 0.0);

        for alpha in [0.8, 1.0] {
            let model = SystemModel::linear(alpha, DMatrix::from_element(1, 1, -1.0));
            let init = InitialFunction::constant(DVector::from_element(1, 1.0), 0.0);
            let traj = integrate(&model, &init, &SolverConfig::new(0.01, 3.0), None).unwrap();
            let rep = verify_quadratic_lemma(&DMatrix::identity(1, 1), &traj, &model);
            assert!(rep.holds, "alpha {alpha}: {rep:?}");
        }
    }
}
