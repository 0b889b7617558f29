//! Three-neuron fractional Hopfield network with a state-dependent delay:
//!
//! ```text
//! D^α x = -C x + A tanh(x) + W tanh(x(t - τ(x))) + B u
//! τ(x)  = τ̄ (1 - η tanh(ωᵀx))
//! ```

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::control::{pole_placement, solve_c1, AdaptiveConfig, AdaptiveController, ConditionReport, Parameterization, SmcConfig};
use crate::error::{Error, Result};
use crate::fde::{InitialFunction, SolverConfig, SystemConstants, SystemModel};
use crate::stability::LmiProblem;

fn mat(rows: &[[f64; 3]; 3]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

fn eye3() -> Vec<Vec<f64>> {
    mat(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    /// Diagonal of C.
    pub c: Vec<f64>,
    pub a_inst: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            c: vec![1.0, 1.2, 0.9],
            a_inst: mat(&[[-2.0, 0.5, -0.3], [0.4, -1.8, 0.2], [-0.1, 0.3, -2.2]]),
            w: mat(&[[1.5, -0.4, 0.2], [-0.3, 1.2, -0.5], [0.4, -0.2, 1.8]]),
            b: eye3(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Delay {
    pub tau_bar: f64,
    pub eta: f64,
    pub omega: Vec<f64>,
}

impl Default for Delay {
    fn default() -> Self {
        Self {
            tau_bar: 0.5,
            eta: 0.3,
            omega: vec![0.3, 0.3, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    pub alpha: f64,
    pub x0: Vec<f64>,
    pub h: f64,
    pub t_end: f64,
    pub corrector_iterations: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            x0: vec![0.5, -0.3, 0.4],
            h: 0.05,
            t_end: 15.0,
            corrector_iterations: 1,
        }
    }
}

/// Reported Lipschitz constants used as LMI and controller inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub l_f: f64,
    pub l_g: f64,
    pub l_tau: f64,
    pub l_phi_f: f64,
    pub l_phi_g: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            l_f: 3.81,
            l_g: 2.22,
            l_tau: 0.078,
            // tanh is 1-Lipschitz and ‖I ⊗ vᵀ‖ = ‖v‖
            l_phi_f: 1.0,
            l_phi_g: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controller {
    /// Closed-loop eigenvalues of A - BK.
    pub poles: Vec<f64>,
    pub gamma_f: f64,
    pub gamma_g: f64,
    pub sigma_f: f64,
    pub sigma_g: f64,
    pub t_f: f64,
    /// θ̄ = safety · ‖θ‖
    pub theta_safety: f64,
    /// Refuse to run when (C1)-(C3) fail unless set.
    pub force: bool,
}

impl Default for Controller {
    fn default() -> Self {
        Self {
            poles: vec![-1.5; 3],
            gamma_f: 5.0,
            gamma_g: 7.0,
            sigma_f: 0.005,
            sigma_g: 0.005,
            t_f: 0.05,
            theta_safety: 1.5,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smc {
    /// Defaults to the adaptive controller's K when absent.
    pub k_s: Option<Vec<Vec<f64>>>,
    pub rho: f64,
    pub boundary_layer: f64,
}

impl Default for Smc {
    fn default() -> Self {
        Self {
            k_s: None,
            rho: 2.5,
            boundary_layer: 0.0,
        }
    }
}

/// Everything the benchmark needs; the TOML file mirrors this layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopfieldParams {
    pub weights: Weights,
    pub delay: Delay,
    pub simulation: Simulation,
    pub constants: Constants,
    pub controller: Controller,
    pub smc: Smc,
}

fn to_matrix(name: &str, rows: &[Vec<f64>], n: usize, m: usize) -> Result<DMatrix<f64>> {
    let mat = crate::rows::from_rows(rows).map_err(|e| Error::Config(format!("{name}: {e}")))?;
    if mat.nrows() != n || mat.ncols() != m {
        return Err(Error::Config(format!("{name} must be {n}x{m}, got {}x{}", mat.nrows(), mat.ncols())));
    }
    Ok(mat)
}

impl HopfieldParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("params serialize")
    }

    pub fn dim(&self) -> usize {
        self.weights.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 || self.weights.c.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::Config("C must have positive diagonal entries".into()));
        }
        to_matrix("a_inst", &self.weights.a_inst, n, n)?;
        to_matrix("w", &self.weights.w, n, n)?;
        let b = crate::rows::from_rows(&self.weights.b).map_err(Error::Config)?;
        if b.nrows() != n {
            return Err(Error::Config(format!("B must have {n} rows")));
        }
        if !(0.0..1.0).contains(&self.delay.eta) {
            return Err(Error::Config(format!("eta = {} must lie in [0, 1)", self.delay.eta)));
        }
        if !(self.delay.tau_bar >= 0.0) {
            return Err(Error::Config("tau_bar must be non-negative".into()));
        }
        if self.delay.omega.len() != n || self.simulation.x0.len() != n {
            return Err(Error::Config(format!("omega and x0 need {n} entries")));
        }
        let a = self.simulation.alpha;
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Config(format!("alpha = {a} not in (0, 1]")));
        }
        if !(self.simulation.h > 0.0 && self.simulation.t_end > 0.0) {
            return Err(Error::Config("h and t_end must be positive".into()));
        }
        Ok(())
    }

    pub fn c(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.weights.c))
    }

    pub fn a_inst(&self) -> DMatrix<f64> {
        to_matrix("a_inst", &self.weights.a_inst, self.dim(), self.dim()).expect("validated")
    }

    pub fn w(&self) -> DMatrix<f64> {
        to_matrix("w", &self.weights.w, self.dim(), self.dim()).expect("validated")
    }

    pub fn b(&self) -> DMatrix<f64> {
        crate::rows::from_rows(&self.weights.b).expect("validated")
    }

    pub fn omega(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.delay.omega)
    }

    pub fn x0(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.simulation.x0)
    }

    pub fn system_constants(&self) -> SystemConstants {
        let c = &self.constants;
        SystemConstants {
            l_f: c.l_f,
            l_g: c.l_g,
            l_tau: c.l_tau,
            l_phi_f: c.l_phi_f,
            l_phi_g: c.l_phi_g,
            tau_bar: self.delay.tau_bar,
        }
    }

    /// Same benchmark with delay bound `tau_bar`; `L_τ = τ̄η‖ω‖` scales with it.
    pub fn with_tau_bar(&self, tau_bar: f64) -> Self {
        let mut out = self.clone();
        out.constants.l_tau = if self.delay.tau_bar > 0.0 {
            self.constants.l_tau * tau_bar / self.delay.tau_bar
        } else {
            tau_bar * self.delay.eta * self.omega().norm()
        };
        out.delay.tau_bar = tau_bar;
        out
    }

    /// Largest delay the law can produce: `τ̄(1 + η)`.
    pub fn max_delay(&self) -> f64 {
        self.delay.tau_bar * (1.0 + self.delay.eta)
    }

    pub fn initial_function(&self) -> InitialFunction {
        InitialFunction::constant(self.x0(), self.max_delay())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            h: self.simulation.h,
            t_end: self.simulation.t_end,
            corrector_iterations: self.simulation.corrector_iterations,
            ..Default::default()
        }
    }
}

pub fn delay_law(tau_bar: f64, eta: f64, omega: DVector<f64>) -> impl Fn(&DVector<f64>) -> f64 + Clone {
    move |x: &DVector<f64>| tau_bar * (1.0 - eta * omega.dot(x).tanh())
}

pub fn build(params: &HopfieldParams) -> SystemModel {
    let c = params.c();
    let a = params.a_inst();
    let w = params.w();
    let tau = delay_law(params.delay.tau_bar, params.delay.eta, params.omega());
    SystemModel {
        alpha: params.simulation.alpha,
        dim: params.dim(),
        f: Arc::new(move |x| -(&c * x) + &a * x.map(f64::tanh)),
        g: Arc::new(move |x| &w * x.map(f64::tanh)),
        tau: Arc::new(tau),
        b: params.b(),
        constants: params.system_constants(),
        max_delay: params.max_delay(),
    }
}

/// `-C + A_inst + W`.
pub fn linearize(params: &HopfieldParams) -> DMatrix<f64> {
    -params.c() + params.a_inst() + params.w()
}

/// `I_n ⊗ tanh(x)ᵀ`: row i holds tanh(x)ᵀ in columns n·i .. n·i + n.
pub fn block_regressor(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let t = x.map(f64::tanh);
    let mut m = DMatrix::zeros(n, n * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, n * i + j)] = t[j];
        }
    }
    m
}

/// Row-major vectorization.
pub fn vec_rows(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()))
}

pub fn parameterize(params: &HopfieldParams) -> Parameterization {
    let theta_f = vec_rows(&params.a_inst());
    let theta_g = vec_rows(&params.w());
    let s = params.controller.theta_safety;
    Parameterization {
        a: -params.c(),
        phi_f: Arc::new(block_regressor),
        phi_g: Arc::new(block_regressor),
        theta_f_bound: s * theta_f.norm(),
        theta_g_bound: s * theta_g.norm(),
        theta_f_true: theta_f,
        theta_g_true: theta_g,
    }
}

/// LMI data with the reported constants.
pub fn lmi_problem(params: &HopfieldParams) -> LmiProblem {
    LmiProblem {
        a: linearize(params),
        constants: params.system_constants(),
        alpha: params.simulation.alpha,
        tau_bar: params.delay.tau_bar,
    }
}

/// Gain of `M(tanh(x) - x)` relative to `‖x‖` on `‖x‖∞ ≤ r`: `‖M‖ (1 - tanh(r)/r)`.
pub fn sector_gain(m: &DMatrix<f64>, radius: f64) -> f64 {
    let d = if radius > 0.0 { 1.0 - radius.tanh() / radius } else { 0.0 };
    m.clone().singular_values().max() * d
}

/// Regional surrogate: the linearization `A_lin` with the nonlinear remainders
/// `A_inst(tanh x - x)` and `W(tanh y - y)` bounded on a ball of radius
/// `radius`. The delay mismatch `W(x(t-τ) - x(t))` is not accounted for, so
/// this is a heuristic local certificate rather than a proof.
pub fn regional_lmi_problem(params: &HopfieldParams, radius: f64) -> LmiProblem {
    let mut prob = lmi_problem(params);
    prob.constants.l_f = sector_gain(&params.a_inst(), radius);
    prob.constants.l_g = sector_gain(&params.w(), radius);
    prob
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzAudit {
    pub pairs: usize,
    pub radius: f64,
    pub seed: u64,
    pub max_ratio_f: f64,
    pub max_ratio_g: f64,
    pub max_ratio_tau: f64,
    pub holds: bool,
}

fn sample_ball(rng: &mut StdRng, n: usize, r: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-r..r));
        if v.norm() <= r {
            return v;
        }
    }
}

/// Empirical Lipschitz ratios of f, g and τ over random pairs in `‖x‖ ≤ radius`.
pub fn lipschitz_audit(params: &HopfieldParams, pairs: usize, radius: f64, seed: u64) -> LipschitzAudit {
    let model = build(params);
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut rf, mut rg, mut rt) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..pairs {
        let x = sample_ball(&mut rng, model.dim, radius);
        let y = sample_ball(&mut rng, model.dim, radius);
        let d = (&x - &y).norm();
        if d == 0.0 {
            continue;
        }
        rf = rf.max(((model.f)(&x) - (model.f)(&y)).norm() / d);
        rg = rg.max(((model.g)(&x) - (model.g)(&y)).norm() / d);
        rt = rt.max(((model.tau)(&x) - (model.tau)(&y)).abs() / d);
    }
    let c = &params.constants;
    LipschitzAudit {
        pairs,
        radius,
        seed,
        max_ratio_f: rf,
        max_ratio_g: rg,
        max_ratio_tau: rt,
        holds: rf <= c.l_f && rg <= c.l_g && rt <= c.l_tau,
    }
}

/// The adaptive controller for these parameters, with its design report.
#[derive(Debug, Clone)]
pub struct ControllerDesign {
    pub controller: AdaptiveController,
    pub conditions: ConditionReport,
}

pub fn design_controller(params: &HopfieldParams) -> Result<ControllerDesign> {
    let param = parameterize(params);
    let b = params.b();
    let n = params.dim();
    let k = pole_placement(&param.a, &b, &params.controller.poles)?;
    let (p, mu) = solve_c1(&param.a, &b, &k)?;
    let ctl = &params.controller;
    let cfg = AdaptiveConfig {
        k,
        p,
        gamma_f: DMatrix::identity(n * n, n * n) * ctl.gamma_f,
        gamma_g: DMatrix::identity(n * n, n * n) * ctl.gamma_g,
        sigma_f: ctl.sigma_f,
        sigma_g: ctl.sigma_g,
        t_f: ctl.t_f,
        mu,
    };
    let conditions = crate::control::check_conditions(&cfg, &param, &params.system_constants(), &b);
    if !ctl.force {
        conditions.ensure()?;
    }
    let model = build(params);
    Ok(ControllerDesign {
        controller: AdaptiveController {
            cfg,
            param,
            b,
            tau: model.tau.clone(),
        },
        conditions,
    })
}

pub fn smc_config(params: &HopfieldParams, k: &DMatrix<f64>) -> Result<SmcConfig> {
    let n = params.dim();
    let k_s = match &params.smc.k_s {
        Some(rows) => to_matrix("smc.k_s", rows, params.b().ncols(), n)?,
        None => k.clone(),
    };
    Ok(SmcConfig {
        k_s,
        rho: params.smc.rho,
        boundary_layer: params.smc.boundary_layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::sym_eigs;

    #[test]
    fn model_at_origin() {
        let p = HopfieldParams::default();
        let m = build(&p);
        let z = DVector::zeros(3);
        assert_eq!((m.f)(&z), z);
        assert_eq!((m.g)(&z), z);
        assert_eq!((m.tau)(&z), 0.5);
        let big = DVector::from_element(3, 100.0);
        assert!(((m.tau)(&big) - 0.35).abs() < 1e-12);
        assert!(((m.tau)(&-big) - 0.65).abs() < 1e-12);
        assert_eq!(m.constants.l_f, 3.81);
        assert_eq!(m.constants.l_g, 2.22);
        assert_eq!(m.constants.l_tau, 0.078);
    }

    #[test]
    fn linearization() {
        let a = linearize(&HopfieldParams::default());
        assert!((a.trace() + 4.6).abs() < 1e-12);
        let mut re: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.83).abs() < 0.01 && (re[1] + 1.39).abs() < 0.01 && (re[2] + 1.39).abs() < 0.01);

        let mut zero = HopfieldParams::default();
        zero.weights.a_inst = vec![vec![0.0; 3]; 3];
        zero.weights.w = vec![vec![0.0; 3]; 3];
        let mut e: Vec<f64> = sym_eigs(&linearize(&zero)).iter().copied().collect();
        e.sort_by(f64::total_cmp);
        for (got, want) in e.iter().zip([-1.2, -1.0, -0.9]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn parameterization_reconstructs_f_and_g() {
        let p = HopfieldParams::default();
        let par = parameterize(&p);
        let m = build(&p);
        let z = DVector::zeros(3);
        assert_eq!((par.phi_f)(&z).amax(), 0.0);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let x = sample_ball(&mut rng, 3, 3.0);
            let f = &par.a * &x + (par.phi_f)(&x) * &par.theta_f_true;
            assert!((f - (m.f)(&x)).amax() < 1e-14);
            let g = (par.phi_g)(&x) * &par.theta_g_true;
            assert!((g - (m.g)(&x)).amax() < 1e-14);
        }
        assert!((par.theta_f_bound - 1.5 * par.theta_f_true.norm()).abs() < 1e-12);
        assert!((par.theta_g_bound - 1.5 * par.theta_g_true.norm()).abs() < 1e-12);
    }

    #[test]
    fn reported_constants_bound_sampled_ratios() {
        let audit = lipschitz_audit(&HopfieldParams::default(), 10_000, 2.0, 1);
        assert!(audit.holds, "{audit:?}");
        // the τ constant is tight: τ̄ η ‖ω‖ = 0.0779
        assert!(audit.max_ratio_tau > 0.07);
    }

    #[test]
    fn delay_stays_positive() {
        let p = HopfieldParams::default();
        let m = build(&p);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = sample_ball(&mut rng, 3, 50.0);
            assert!((m.tau)(&x) >= 0.35 - 1e-12);
        }
    }

    #[test]
    fn toml_roundtrip_and_overrides() {
        let p = HopfieldParams::default();
        assert_eq!(HopfieldParams::from_toml(&p.to_toml()).unwrap(), p);
        let q = HopfieldParams::from_toml("[simulation]\nalpha = 0.8\n").unwrap();
        assert_eq!(q.simulation.alpha, 0.8);
        assert_eq!(q.delay, Delay::default());
        assert!(matches!(HopfieldParams::from_toml("[delay]\neta = 1.5\n"), Err(Error::Config(_))));
        assert!(matches!(HopfieldParams::from_toml("[delay]\ntypo = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn default_design_meets_conditions() {
        let d = design_controller(&HopfieldParams::default()).unwrap();
        assert!(d.conditions.all());
        // A - BK = -sI, P = pI: mu = max_p (2sp - 2p^2) = s^2/2 at p = s/2
        let s = -HopfieldParams::default().controller.poles[0];
        assert!((d.controller.cfg.mu - s * s / 2.0).abs() < 1e-6);
        assert!((&d.controller.cfg.p - DMatrix::identity(3, 3) * (s / 2.0)).norm() < 1e-4);
    }
}
