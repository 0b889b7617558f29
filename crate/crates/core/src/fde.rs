//! Caputo fractional delay systems `D^α x = f(x) + g(x(t - τ(x))) + B u`
//! integrated with the fractional Adams-Bashforth-Moulton (PECE) scheme.
//!
//! The whole history is kept: every step sums over all previous right-hand
//! sides, there is no short-memory truncation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::gamma_unchecked;

pub type VecField = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type HistoryFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemConstants {
    pub l_f: f64,
    pub l_g: f64,
    pub l_tau: f64,
    pub l_phi_f: f64,
    pub l_phi_g: f64,
    pub tau_bar: f64,
}

#[derive(Clone)]
pub struct SystemModel {
    pub alpha: f64,
    pub dim: usize,
    pub f: VecField,
    pub g: VecField,
    pub tau: ScalarField,
    /// n×m input matrix.
    pub b: DMatrix<f64>,
    pub constants: SystemConstants,
    /// Largest delay `tau` can return anywhere; the history must reach back this far.
    pub max_delay: f64,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("alpha", &self.alpha)
            .field("dim", &self.dim)
            .field("inputs", &self.b.ncols())
            .field("constants", &self.constants)
            .field("max_delay", &self.max_delay)
            .finish_non_exhaustive()
    }
}

impl SystemModel {
    /// `D^α x = A x`, no delay and no input channel.
    pub fn linear(alpha: f64, a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        let l_f = a.norm();
        Self {
            alpha,
            dim: n,
            f: Arc::new(move |x| &a * x),
            g: Arc::new(move |_| DVector::zeros(n)),
            tau: Arc::new(|_| 0.0),
            b: DMatrix::zeros(n, 0),
            constants: SystemConstants {
                l_f,
                ..Default::default()
            },
            max_delay: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        if self.b.nrows() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, state has {}",
                self.b.nrows(),
                self.dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct InitialFunction {
    pub tau_bar: f64,
    /// θ ∈ [-tau_bar, 0] ↦ x(t0 + θ)
    pub phi: HistoryFn,
    pub phi_derivative_bound: f64,
}

impl fmt::Debug for InitialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialFunction")
            .field("tau_bar", &self.tau_bar)
            .field("phi(0)", &(self.phi)(0.0).as_slice())
            .field("phi_derivative_bound", &self.phi_derivative_bound)
            .finish()
    }
}

impl InitialFunction {
    pub fn constant(x0: DVector<f64>, tau_bar: f64) -> Self {
        Self {
            tau_bar,
            phi: Arc::new(move |_| x0.clone()),
            phi_derivative_bound: 0.0,
        }
    }

    pub fn zero(dim: usize, tau_bar: f64) -> Self {
        Self::constant(DVector::zeros(dim), tau_bar)
    }

    pub fn at(&self, theta: f64) -> DVector<f64> {
        (self.phi)(theta)
    }

    /// `‖φ‖_∞` estimated on 201 points of `[-tau_bar, 0]`.
    pub fn sup_norm(&self) -> f64 {
        (0..=200)
            .map(|i| self.at(-self.tau_bar * i as f64 / 200.0).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t0: f64,
    pub h: f64,
    pub t_end: f64,
    pub corrector_iterations: usize,
    pub blowup_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            h: 0.05,
            t_end: 15.0,
            corrector_iterations: 1,
            blowup_guard: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn new(h: f64, t_end: f64) -> Self {
        Self {
            h,
            t_end,
            ..Default::default()
        }
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.h - 1e-9).ceil().max(0.0) as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::Config(format!("step h = {} must be positive", self.h)));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::Config(format!("t_end = {} must exceed t0 = {}", self.t_end, self.t0)));
        }
        if !(1..=5).contains(&self.corrector_iterations) {
            return Err(Error::Config("corrector_iterations must be in 1..=5".into()));
        }
        Ok(())
    }
}

/// What a controller sees at a grid node.
pub struct NodeContext<'a> {
    pub t: f64,
    pub x: &'a DVector<f64>,
    /// Fractional controller states, integrated with the plant.
    pub aux: &'a DVector<f64>,
    /// Integer-order controller states, advanced once per step.
    pub disc: &'a DVector<f64>,
    pub lookup: &'a dyn Fn(f64) -> Result<DVector<f64>>,
}

/// A feedback law, possibly with internal states of its own.
///
/// All controller state lives in the trajectory, so implementations are
/// immutable and a step can be recomputed from stored data alone.
pub trait ControlLaw: Send + Sync {
    fn input_dim(&self) -> usize;

    fn aux_dim(&self) -> usize {
        0
    }

    fn aux_init(&self) -> DVector<f64> {
        DVector::zeros(self.aux_dim())
    }

    fn disc_init(&self, _x0: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }

    /// Advance the integer-order states over one step with `x` held.
    fn disc_advance(&self, disc: &DVector<f64>, _x: &DVector<f64>, _h: f64) -> DVector<f64> {
        disc.clone()
    }

    fn control(&self, ctx: &NodeContext<'_>) -> Result<DVector<f64>>;

    fn aux_rhs(&self, _ctx: &NodeContext<'_>) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.aux_dim()))
    }
}

/// u ≡ 0 on an m-dimensional input.
#[derive(Debug, Clone, Copy)]
pub struct ZeroInput(pub usize);

impl ControlLaw for ZeroInput {
    fn input_dim(&self) -> usize {
        self.0
    }

    fn control(&self, _ctx: &NodeContext<'_>) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.0))
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub h: f64,
    pub history: InitialFunction,
    pub states: Vec<DVector<f64>>,
    pub aux: Vec<DVector<f64>>,
    pub disc: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// τ(x_k) at each node.
    pub delays: Vec<f64>,
    /// Augmented right-hand side `[f + g + Bu; aux_rhs]` at each node.
    pub rhs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn t_latest(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|x| x.norm()).collect()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |x| x.len())
    }

    /// `sup_{s ∈ [t - window, t]} ‖x(s)‖` over grid nodes and history samples.
    pub fn sup_norm_window(&self, k: usize, window: f64) -> f64 {
        let t = self.time(k);
        let mut m = self.states[k].norm();
        let steps = (window / self.h).ceil() as usize;
        for i in 1..=steps {
            let s = (t - i as f64 * self.h).max(t - window);
            if s < self.t0 - self.history.tau_bar - 1e-12 {
                break;
            }
            if let Ok(x) = self.lookup(s) {
                m = m.max(x.norm());
            }
        }
        m
    }

    pub fn lookup(&self, t: f64) -> Result<DVector<f64>> {
        self.interp(t, None)
    }

    /// Interpolate with an extra, not yet stored, node at `t_latest + h`.
    fn interp(&self, t: f64, pending: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        let tol = 1e-9 * self.h;
        let lo = self.t0 - self.history.tau_bar;
        let last = self.len() - 1 + usize::from(pending.is_some());
        let hi = self.time(last);
        if t < lo - tol || t > hi + tol || t.is_nan() {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        if t <= self.t0 {
            return Ok(self.history.at((t - self.t0).max(-self.history.tau_bar)));
        }
        let node = |k: usize| -> &DVector<f64> {
            if k < self.len() {
                &self.states[k]
            } else {
                pending.expect("pending node in range")
            }
        };
        let s = (t - self.t0) / self.h;
        let k = (s.floor() as usize).min(last);
        let frac = s - k as f64;
        if frac <= 0.0 || k == last {
            return Ok(node(k).clone());
        }
        Ok(node(k) * (1.0 - frac) + node(k + 1) * frac)
    }
}

/// Fractional ABM weights on a uniform grid for one α.
struct AbmWeights {
    alpha: f64,
    pow_a: Vec<f64>,
    pow_a1: Vec<f64>,
    c_pred: f64,
    c_corr: f64,
}

impl AbmWeights {
    fn new(alpha: f64, h: f64, upto: usize) -> Self {
        let pow_a = (0..=upto + 2).map(|m| (m as f64).powf(alpha)).collect();
        let pow_a1 = (0..=upto + 2).map(|m| (m as f64).powf(alpha + 1.0)).collect();
        let ha = h.powf(alpha);
        Self {
            alpha,
            pow_a,
            pow_a1,
            c_pred: ha / gamma_unchecked(alpha + 1.0),
            c_corr: ha / gamma_unchecked(alpha + 2.0),
        }
    }

    /// Rectangle weight of node j when predicting node k+1 (m = k - j).
    fn pred(&self, m: usize) -> f64 {
        self.pow_a[m + 1] - self.pow_a[m]
    }

    /// Trapezoid weight of node j when correcting node k+1.
    fn corr(&self, k: usize, j: usize) -> f64 {
        if j == 0 {
            self.pow_a1[k] - (k as f64 - self.alpha) * self.pow_a[k + 1]
        } else {
            let m = k - j;
            self.pow_a1[m + 2] + self.pow_a1[m] - 2.0 * self.pow_a1[m + 1]
        }
    }
}

struct Stepper<'a> {
    model: &'a SystemModel,
    ctrl: &'a dyn ControlLaw,
    cfg: SolverConfig,
    w: AbmWeights,
    z0: DVector<f64>,
}

struct NodeEval {
    rhs: DVector<f64>,
    u: DVector<f64>,
    tau: f64,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a SystemModel, ctrl: &'a dyn ControlLaw, cfg: SolverConfig, z0: DVector<f64>) -> Self {
        let w = AbmWeights::new(model.alpha, cfg.h, cfg.steps() + 1);
        Self { model, ctrl, cfg, w, z0 }
    }

    fn eval(
        &self,
        traj: &Trajectory,
        t: f64,
        z: &DVector<f64>,
        disc: &DVector<f64>,
        pending: Option<&DVector<f64>>,
    ) -> Result<NodeEval> {
        let n = self.model.dim;
        let x = z.rows(0, n).into_owned();
        let aux = z.rows(n, z.len() - n).into_owned();
        let lookup = |s: f64| traj.interp(s, pending);
        let tau = (self.model.tau)(&x);
        let xd = lookup(t - tau)?;
        let ctx = NodeContext {
            t,
            x: &x,
            aux: &aux,
            disc,
            lookup: &lookup,
        };
        let u = self.ctrl.control(&ctx)?;
        let dx = (self.model.f)(&x) + (self.model.g)(&xd) + &self.model.b * &u;
        let daux = self.ctrl.aux_rhs(&ctx)?;
        let mut rhs = DVector::zeros(z.len());
        rhs.rows_mut(0, n).copy_from(&dx);
        rhs.rows_mut(n, z.len() - n).copy_from(&daux);
        Ok(NodeEval { rhs, u, tau })
    }

    /// One PECE step from node k to k+1; returns (z_{k+1}, disc_{k+1}, eval at k+1).
    fn step(&self, traj: &Trajectory, k: usize) -> Result<(DVector<f64>, DVector<f64>, NodeEval)> {
        let n = self.model.dim;
        let t1 = traj.time(k + 1);
        let disc1 = self.ctrl.disc_advance(&traj.disc[k], &traj.states[k], self.cfg.h);

        let mut pred = DVector::zeros(self.z0.len());
        for j in 0..=k {
            pred.axpy(self.w.pred(k - j), &traj.rhs[j], 1.0);
        }
        let mut z = &self.z0 + pred * self.w.c_pred;

        let mut hist = DVector::zeros(self.z0.len());
        for j in 0..=k {
            hist.axpy(self.w.corr(k, j), &traj.rhs[j], 1.0);
        }
        for _ in 0..self.cfg.corrector_iterations {
            let xp = z.rows(0, n).into_owned();
            let ev = self.eval(traj, t1, &z, &disc1, Some(&xp))?;
            z = &self.z0 + (&hist + ev.rhs) * self.w.c_corr;
        }

        let x1 = z.rows(0, n).into_owned();
        let norm = x1.norm();
        if !(norm <= self.cfg.blowup_guard) {
            return Err(Error::NumericalBlowup { t: t1, norm });
        }
        let ev = self.eval(traj, t1, &z, &disc1, Some(&x1))?;
        Ok((z, disc1, ev))
    }
}

fn start(model: &SystemModel, init: &InitialFunction, cfg: &SolverConfig, ctrl: &dyn ControlLaw) -> Result<Trajectory> {
    model.validate()?;
    cfg.validate()?;
    let x0 = init.at(0.0);
    if x0.len() != model.dim {
        return Err(Error::DimensionMismatch(format!(
            "initial function has dimension {}, model {}",
            x0.len(),
            model.dim
        )));
    }
    if ctrl.input_dim() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "controller drives {} inputs, B has {} columns",
            ctrl.input_dim(),
            model.input_dim()
        )));
    }
    Ok(Trajectory {
        t0: cfg.t0,
        h: cfg.h,
        history: init.clone(),
        disc: vec![ctrl.disc_init(&x0)],
        aux: vec![ctrl.aux_init()],
        states: vec![x0],
        inputs: Vec::new(),
        delays: Vec::new(),
        rhs: Vec::new(),
    })
}

fn augmented(traj: &Trajectory, k: usize) -> DVector<f64> {
    let x = &traj.states[k];
    let a = &traj.aux[k];
    let mut z = DVector::zeros(x.len() + a.len());
    z.rows_mut(0, x.len()).copy_from(x);
    z.rows_mut(x.len(), a.len()).copy_from(a);
    z
}

/// Integrate on `[cfg.t0, cfg.t_end]`. Without a controller, u ≡ 0.
pub fn integrate(
    model: &SystemModel,
    init: &InitialFunction,
    cfg: &SolverConfig,
    controller: Option<&dyn ControlLaw>,
) -> Result<Trajectory> {
    let zero = ZeroInput(model.input_dim());
    let ctrl = controller.unwrap_or(&zero);
    let mut traj = start(model, init, cfg, ctrl)?;
    let n = model.dim;
    let z0 = augmented(&traj, 0);
    let stepper = Stepper::new(model, ctrl, *cfg, z0.clone());

    let ev0 = stepper
        .eval(&traj, cfg.t0, &z0, &traj.disc[0].clone(), None)
        .map_err(|e| e.context(format!("initial node t = {}", cfg.t0)))?;
    traj.rhs.push(ev0.rhs);
    traj.inputs.push(ev0.u);
    traj.delays.push(ev0.tau);

    for k in 0..cfg.steps() {
        let (z, disc, ev) = stepper.step(&traj, k).map_err(|e| match e {
            Error::NumericalBlowup { .. } => e,
            other => other.context(format!("step to t = {:.6}", traj.time(k + 1))),
        })?;
        traj.states.push(z.rows(0, n).into_owned());
        traj.aux.push(z.rows(n, z.len() - n).into_owned());
        traj.disc.push(disc);
        traj.rhs.push(ev.rhs);
        traj.inputs.push(ev.u);
        traj.delays.push(ev.tau);
    }
    Ok(traj)
}

/// Recompute `x_{k+1}` from the stored nodes `0..=k` of `traj` alone.
pub fn abm_step(
    model: &SystemModel,
    traj: &Trajectory,
    controller: Option<&dyn ControlLaw>,
    cfg: &SolverConfig,
    k: usize,
) -> Result<DVector<f64>> {
    if k + 1 > traj.rhs.len() {
        return Err(Error::Domain(format!("trajectory not populated through node {k}")));
    }
    let zero = ZeroInput(model.input_dim());
    let ctrl = controller.unwrap_or(&zero);
    // a view holding exactly nodes 0..=k so lookups cannot peek ahead
    let view = Trajectory {
        t0: traj.t0,
        h: traj.h,
        history: traj.history.clone(),
        states: traj.states[..=k].to_vec(),
        aux: traj.aux[..=k].to_vec(),
        disc: traj.disc[..=k].to_vec(),
        inputs: traj.inputs[..=k].to_vec(),
        delays: traj.delays[..=k].to_vec(),
        rhs: traj.rhs[..=k].to_vec(),
    };
    let stepper = Stepper::new(model, ctrl, *cfg, augmented(traj, 0));
    let (z, _, _) = stepper.step(&view, k)?;
    Ok(z.rows(0, model.dim).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub m_x: f64,
    pub m_u: f64,
    pub m_d: f64,
    /// M_D / Γ(α+1)
    pub constant: f64,
    /// max over node pairs of ‖x(t) - x(s)‖ / |t - s|^α
    pub max_ratio: f64,
    pub pairs_checked: usize,
    pub holds: bool,
}

/// Hölder-α constant `M_D / Γ(α+1)` with `M_D = (L_f + L_g) M_x + ‖B‖ M_u`,
/// checked against every pair of grid nodes.
pub fn holder_constant(model: &SystemModel, traj: &Trajectory) -> HolderReport {
    let c = &model.constants;
    let alpha = model.alpha;
    let m_x = traj.states.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let m_u = traj.inputs.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let b_norm = if model.b.is_empty() { 0.0 } else { model.b.clone().singular_values().max() };
    let m_d = (c.l_f + c.l_g) * m_x + b_norm * m_u;
    let constant = m_d / gamma_unchecked(alpha + 1.0);

    let n = traj.len();
    let pow: Vec<f64> = (0..n).map(|d| (d as f64 * traj.h).powf(alpha)).collect();
    let mut max_ratio: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = (&traj.states[j] - &traj.states[i]).norm();
            max_ratio = max_ratio.max(d / pow[j - i]);
            pairs += 1;
        }
    }
    HolderReport {
        m_x,
        m_u,
        m_d,
        constant,
        max_ratio,
        pairs_checked: pairs,
        holds: max_ratio <= constant * (1.0 + 1e-12),
    }
}
