//! Adaptive control with a filtered delay estimate, and a sliding-mode baseline.
//!
//! For plants `D^α x = Ax + Φ_f(x)θ_f + Φ_g(x(t - τ(x)))θ_g + Bu` with unknown
//! `θ`, the controller is
//!
//! ```text
//! u = -Kx - BᵀPx - BᵀP [Φ_f(x) θ̂_f + Φ_g(x̂_d) θ̂_g],   x̂_d = x(t - τ(x̂))
//! D^α θ̂_f = Γ_f Φ_f(x)ᵀ B Bᵀ P x - σ_f θ̂_f
//! D^α θ̂_g = Γ_g Φ_g(x̂_d)ᵀ B Bᵀ P x - σ_g θ̂_g
//! ```
//!
//! where `x̂` is a first-order low-pass of the state with time constant `T_f`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fde::{ControlLaw, NodeContext, ScalarField, SystemConstants};
use crate::sdp::{lambda_max, sym_basis, sym_from, LmiBlock, Sdp, SdpOptions};
use crate::specfun::gamma_unchecked;

pub type Regressor = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub struct Parameterization {
    pub a: DMatrix<f64>,
    pub phi_f: Regressor,
    pub phi_g: Regressor,
    pub theta_f_true: DVector<f64>,
    pub theta_g_true: DVector<f64>,
    pub theta_f_bound: f64,
    pub theta_g_bound: f64,
}

impl fmt::Debug for Parameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Parameterization")
            .field("a", &self.a)
            .field("p_f", &self.theta_f_true.len())
            .field("p_g", &self.theta_g_true.len())
            .field("theta_f_bound", &self.theta_f_bound)
            .field("theta_g_bound", &self.theta_g_bound)
            .finish_non_exhaustive()
    }
}

impl Parameterization {
    pub fn p_f(&self) -> usize {
        self.theta_f_true.len()
    }

    pub fn p_g(&self) -> usize {
        self.theta_g_true.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    #[serde(with = "crate::rows")]
    pub k: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub p: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub gamma_f: DMatrix<f64>,
    #[serde(with = "crate::rows")]
    pub gamma_g: DMatrix<f64>,
    pub sigma_f: f64,
    pub sigma_g: f64,
    pub t_f: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub theta_f_hat: DVector<f64>,
    pub theta_g_hat: DVector<f64>,
    pub x_hat: DVector<f64>,
    pub tau_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltimateBound {
    pub bound: f64,
    pub delta_tau: f64,
}

/// Exact update of `T_f dx̂/dt = x - x̂` over one step with `x` held.
pub fn filter_step(state: &AdaptiveState, x: &DVector<f64>, t_f: f64, h: f64, tau: &dyn Fn(&DVector<f64>) -> f64) -> AdaptiveState {
    let decay = if t_f > 0.0 { (-h / t_f).exp() } else { 0.0 };
    let x_hat = x + (&state.x_hat - x) * decay;
    AdaptiveState {
        tau_hat: tau(&x_hat),
        x_hat,
        ..state.clone()
    }
}

/// `L_τ M_D T_f^α / Γ(α+1)` with `M_D = (L_f + L_g) M_x + ‖B‖ M_u`.
pub fn delay_error_bound(c: &SystemConstants, m_x: f64, m_u: f64, b_norm: f64, t_f: f64, alpha: f64) -> f64 {
    let m_d = (c.l_f + c.l_g) * m_x + b_norm * m_u;
    c.l_tau * m_d * t_f.powf(alpha) / gamma_unchecked(alpha + 1.0)
}

pub fn adaptive_control(
    x: &DVector<f64>,
    x_delayed_hat: &DVector<f64>,
    state: &AdaptiveState,
    cfg: &AdaptiveConfig,
    b: &DMatrix<f64>,
    param: &Parameterization,
) -> DVector<f64> {
    let bt_p = b.transpose() * &cfg.p;
    let comp = (param.phi_f)(x) * &state.theta_f_hat + (param.phi_g)(x_delayed_hat) * &state.theta_g_hat;
    -(&cfg.k * x) - &bt_p * x - bt_p * comp
}

pub fn adaptation_rhs(
    x: &DVector<f64>,
    x_delayed_hat: &DVector<f64>,
    state: &AdaptiveState,
    cfg: &AdaptiveConfig,
    b: &DMatrix<f64>,
    param: &Parameterization,
) -> (DVector<f64>, DVector<f64>) {
    let drive = b * (b.transpose() * (&cfg.p * x));
    let pf = &cfg.gamma_f * ((param.phi_f)(x).transpose() * &drive) - &state.theta_f_hat * cfg.sigma_f;
    let pg = &cfg.gamma_g * ((param.phi_g)(x_delayed_hat).transpose() * &drive) - &state.theta_g_hat * cfg.sigma_g;
    (pf, pg)
}

/// `δ_τ = (L_Φg L_x L_τ M_D T_f^α / Γ(α+1))² θ̄_g² / μ`, one concrete
/// instance of the O(T_f^{2α}) filter mismatch term.
pub fn delta_tau(c: &SystemConstants, l_x: f64, m_d: f64, t_f: f64, alpha: f64, theta_g_bound: f64, mu: f64) -> f64 {
    let e = c.l_phi_g * l_x * c.l_tau * m_d * t_f.powf(alpha) / gamma_unchecked(alpha + 1.0);
    e * e * theta_g_bound * theta_g_bound / mu
}

/// `√(2(σ_f θ̄_f² + σ_g θ̄_g² + δ_τ) / (μ - 2(σ_f + σ_g)))`.
pub fn ultimate_bound(cfg: &AdaptiveConfig, param: &Parameterization, delta_tau: f64) -> Result<UltimateBound> {
    let den = cfg.mu - 2.0 * (cfg.sigma_f + cfg.sigma_g);
    if !(den > 0.0) {
        return Err(Error::DegenerateDenominator(den));
    }
    let num = cfg.sigma_f * param.theta_f_bound.powi(2) + cfg.sigma_g * param.theta_g_bound.powi(2) + delta_tau;
    Ok(UltimateBound {
        bound: (2.0 * num / den).sqrt(),
        delta_tau,
    })
}

/// `K = B⁺(A - diag(poles))`, placing the eigenvalues of `A - BK` exactly
/// when `B` has full row rank.
pub fn pole_placement(a: &DMatrix<f64>, b: &DMatrix<f64>, poles: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if poles.len() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch(format!("{} poles for a {n}-state system", poles.len())));
    }
    if poles.iter().any(|p| !(*p < 0.0)) {
        return Err(Error::Domain("poles must be negative".into()));
    }
    let b_pinv = b.clone().pseudo_inverse(1e-12).map_err(|e| Error::Domain(e.into()))?;
    if (b * &b_pinv - DMatrix::identity(n, n)).amax() > 1e-9 {
        return Err(Error::NotApplicable("pole placement needs B with full row rank".into()));
    }
    let target = DMatrix::from_diagonal(&DVector::from_column_slice(poles));
    Ok(b_pinv * (a - target))
}

/// `(A-BK)ᵀP + P(A-BK) + 2PBBᵀP + μI`, negative semidefinite under (C1).
pub fn c1_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>, p: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    let acl = a - b * k;
    let n = a.nrows();
    acl.transpose() * p + p * &acl + p * b * b.transpose() * p * 2.0 + DMatrix::identity(n, n) * mu
}

/// Solve for `P ≻ 0` maximizing `μ` in condition (C1), via the Schur form
/// `[[(A-BK)ᵀP + P(A-BK) + μI, PB], [BᵀP, -½I]] ⪯ 0`.
pub fn solve_c1(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    let m = b.ncols();
    let acl = a - b * k;
    let basis = sym_basis(n);
    let s = basis.len();
    let nv = s + 1;
    let mut big = LmiBlock::new(n + m, nv);
    big.f0.view_mut((n, n), (m, m)).copy_from(&(DMatrix::identity(m, m) * 0.5));
    for (j, e) in basis.iter().enumerate() {
        let f = &mut big.fj[j];
        f.view_mut((0, 0), (n, n)).copy_from(&-(acl.transpose() * e + e * &acl));
        let eb = -(e * b);
        f.view_mut((0, n), (n, m)).copy_from(&eb);
        f.view_mut((n, 0), (m, n)).copy_from(&eb.transpose());
    }
    big.fj[s].view_mut((0, 0), (n, n)).copy_from(&-DMatrix::<f64>::identity(n, n));
    let mut pos = LmiBlock::new(n, nv);
    for (j, e) in basis.iter().enumerate() {
        pos.fj[j] = e.clone();
    }
    let mut sdp = Sdp::new(nv);
    sdp.objective[s] = 1.0;
    sdp.blocks = vec![big, pos];

    let p0 = DMatrix::identity(n, n) * 0.1;
    let mu0 = -lambda_max(&c1_matrix(a, b, k, &p0, 0.0)) - 1.0;
    let mut y0 = DVector::zeros(nv);
    for (j, v) in crate::sdp::sym_coords(&p0).into_iter().enumerate() {
        y0[j] = v;
    }
    y0[s] = mu0;
    let sol = sdp.maximize(&y0, &SdpOptions::default())?;
    let p = sym_from(&sol.y.as_slice()[..s], n);
    let mu = sol.y[s];
    if !(mu > 0.0) {
        return Err(Error::ConditionViolated(format!("(C1) admits no positive mu (best {mu:.3e}); A - BK is not stable enough")));
    }
    Ok((p, mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `λmax((A-BK)ᵀP + P(A-BK) + 2PBBᵀP + μI)`, must be ≤ 0.
    pub c1_lambda_max: f64,
    pub c1: bool,
    /// `τ̄ / (2 L_τ L_Φg θ̄_g)`
    pub t_f_limit: f64,
    pub c2: bool,
    /// `μ / (4 max(θ̄_f², θ̄_g²))`
    pub sigma_limit: f64,
    pub c3: bool,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }

    pub fn ensure(&self) -> Result<()> {
        if !self.c1 {
            return Err(Error::ConditionViolated(format!("(C1): lambda_max = {:.3e} > 0", self.c1_lambda_max)));
        }
        if !self.c2 {
            return Err(Error::ConditionViolated(format!("(C2): T_f must be below {:.4}", self.t_f_limit)));
        }
        if !self.c3 {
            return Err(Error::ConditionViolated(format!("(C3): sigma must be below {:.4e}", self.sigma_limit)));
        }
        Ok(())
    }
}

pub fn check_conditions(
    cfg: &AdaptiveConfig,
    param: &Parameterization,
    constants: &SystemConstants,
    b: &DMatrix<f64>,
) -> ConditionReport {
    let l1 = lambda_max(&c1_matrix(&param.a, b, &cfg.k, &cfg.p, cfg.mu));
    let denom = 2.0 * constants.l_tau * constants.l_phi_g * param.theta_g_bound;
    let t_f_limit = if denom > 0.0 { constants.tau_bar / denom } else { f64::INFINITY };
    let th = param.theta_f_bound.powi(2).max(param.theta_g_bound.powi(2));
    let sigma_limit = if th > 0.0 { cfg.mu / (4.0 * th) } else { f64::INFINITY };
    ConditionReport {
        c1_lambda_max: l1,
        c1: l1 <= 1e-9 && cfg.mu > 0.0,
        t_f_limit,
        c2: cfg.t_f > 0.0 && cfg.t_f < t_f_limit,
        sigma_limit,
        c3: cfg.sigma_f > 0.0 && cfg.sigma_g > 0.0 && cfg.sigma_f.max(cfg.sigma_g) < sigma_limit,
    }
}

/// The adaptive law as a `ControlLaw`: fractional states `[θ̂_f; θ̂_g]`,
/// integer-order state `x̂`.
#[derive(Clone)]
pub struct AdaptiveController {
    pub cfg: AdaptiveConfig,
    pub param: Parameterization,
    pub b: DMatrix<f64>,
    pub tau: ScalarField,
}

impl fmt::Debug for AdaptiveController {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdaptiveController")
            .field("cfg", &self.cfg)
            .field("param", &self.param)
            .finish_non_exhaustive()
    }
}

impl AdaptiveController {
    pub fn state_from(&self, aux: &DVector<f64>, disc: &DVector<f64>) -> AdaptiveState {
        let pf = self.param.p_f();
        AdaptiveState {
            theta_f_hat: aux.rows(0, pf).into_owned(),
            theta_g_hat: aux.rows(pf, self.param.p_g()).into_owned(),
            tau_hat: (self.tau)(disc),
            x_hat: disc.clone(),
        }
    }

    fn delayed_hat(&self, ctx: &NodeContext<'_>, st: &AdaptiveState) -> Result<DVector<f64>> {
        (ctx.lookup)(ctx.t - st.tau_hat)
    }
}

impl ControlLaw for AdaptiveController {
    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn aux_dim(&self) -> usize {
        self.param.p_f() + self.param.p_g()
    }

    /// The filter starts at the initial state.
    fn disc_init(&self, x0: &DVector<f64>) -> DVector<f64> {
        x0.clone()
    }

    fn disc_advance(&self, disc: &DVector<f64>, x: &DVector<f64>, h: f64) -> DVector<f64> {
        let st = AdaptiveState {
            theta_f_hat: DVector::zeros(0),
            theta_g_hat: DVector::zeros(0),
            x_hat: disc.clone(),
            tau_hat: 0.0,
        };
        filter_step(&st, x, self.cfg.t_f, h, &*self.tau).x_hat
    }

    fn control(&self, ctx: &NodeContext<'_>) -> Result<DVector<f64>> {
        let st = self.state_from(ctx.aux, ctx.disc);
        let xd = self.delayed_hat(ctx, &st)?;
        Ok(adaptive_control(ctx.x, &xd, &st, &self.cfg, &self.b, &self.param))
    }

    fn aux_rhs(&self, ctx: &NodeContext<'_>) -> Result<DVector<f64>> {
        let st = self.state_from(ctx.aux, ctx.disc);
        let xd = self.delayed_hat(ctx, &st)?;
        let (pf, pg) = adaptation_rhs(ctx.x, &xd, &st, &self.cfg, &self.b, &self.param);
        let mut out = DVector::zeros(pf.len() + pg.len());
        out.rows_mut(0, pf.len()).copy_from(&pf);
        out.rows_mut(pf.len(), pg.len()).copy_from(&pg);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcConfig {
    #[serde(with = "crate::rows")]
    pub k_s: DMatrix<f64>,
    pub rho: f64,
    /// Width of the linear zone around zero; 0 gives the pure sign function.
    pub boundary_layer: f64,
}

fn sgn(v: f64, width: f64) -> f64 {
    if width > 0.0 {
        (v / width).clamp(-1.0, 1.0)
    } else if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `u = -K_s x - ρ sgn(x)` componentwise.
pub fn smc_control(x: &DVector<f64>, cfg: &SmcConfig) -> DVector<f64> {
    -(&cfg.k_s * x) - x.map(|v| cfg.rho * sgn(v, cfg.boundary_layer))
}

#[derive(Debug, Clone)]
pub struct SmcController(pub SmcConfig);

impl ControlLaw for SmcController {
    fn input_dim(&self) -> usize {
        self.0.k_s.nrows()
    }

    fn control(&self, ctx: &NodeContext<'_>) -> Result<DVector<f64>> {
        Ok(smc_control(ctx.x, &self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_param() -> Parameterization {
        Parameterization {
            a: DMatrix::from_diagonal_element(2, 2, -1.0),
            phi_f: Arc::new(|x| DMatrix::from_diagonal(&x.map(f64::tanh))),
            phi_g: Arc::new(|x| DMatrix::from_diagonal(&x.map(f64::tanh))),
            theta_f_true: DVector::from_vec(vec![0.5, -0.2]),
            theta_g_true: DVector::from_vec(vec![0.3, 0.1]),
            theta_f_bound: 0.8,
            theta_g_bound: 0.5,
        }
    }

    fn toy_cfg() -> AdaptiveConfig {
        let i = DMatrix::identity(2, 2);
        AdaptiveConfig {
            k: &i * 1.0,
            p: &i * 1.0,
            gamma_f: &i * 5.0,
            gamma_g: &i * 5.0,
            sigma_f: 0.01,
            sigma_g: 0.01,
            t_f: 0.05,
            mu: 2.0,
        }
    }

    fn state(tf: &[f64], tg: &[f64], xh: &[f64]) -> AdaptiveState {
        AdaptiveState {
            theta_f_hat: DVector::from_column_slice(tf),
            theta_g_hat: DVector::from_column_slice(tg),
            x_hat: DVector::from_column_slice(xh),
            tau_hat: 0.0,
        }
    }

    #[test]
    fn filter_examples() {
        let tau = |_: &DVector<f64>| 0.4;
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let st = state(&[], &[], &[1.0, -2.0]);
        assert_eq!(filter_step(&st, &x, 0.05, 0.01, &tau).x_hat, x);
        let st0 = state(&[], &[], &[0.0, 0.0]);
        assert!((filter_step(&st0, &x, 1e-12, 0.01, &tau).x_hat - &x).amax() < 1e-300);
        assert_eq!(filter_step(&st0, &x, 0.05, 0.01, &tau).tau_hat, 0.4);

        // x ≡ c from 0: x̂(t) = c (1 - e^{-t/T_f}) exactly at every step
        let c = DVector::from_element(1, 3.0);
        let mut st = state(&[], &[], &[0.0]);
        let (tf, h) = (0.2, 0.05);
        for k in 1..=40 {
            st = filter_step(&st, &c, tf, h, &tau);
            let t = k as f64 * h;
            assert!((st.x_hat[0] - 3.0 * (1.0 - (-t / tf).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn delay_error_bound_examples() {
        let c = SystemConstants {
            l_f: 3.81,
            l_g: 2.22,
            l_tau: 0.0,
            ..Default::default()
        };
        assert_eq!(delay_error_bound(&c, 1.0, 1.0, 1.0, 0.05, 0.95), 0.0);
        let c = SystemConstants { l_tau: 0.078, ..c };
        assert_eq!(delay_error_bound(&c, 1.0, 1.0, 1.0, 0.0, 0.95), 0.0);
        let want = 0.078 * (6.03 * 0.5 + 1.2) * 0.05f64.powf(0.95) / gamma_unchecked(1.95);
        assert!((delay_error_bound(&c, 0.5, 1.2, 1.0, 0.05, 0.95) - want).abs() < 1e-15);
    }

    #[test]
    fn control_law_examples() {
        let (p, cfg) = (toy_param(), toy_cfg());
        let b = DMatrix::identity(2, 2);
        let z = DVector::zeros(2);
        let st = state(&[1.0, 2.0], &[3.0, 4.0], &[0.0, 0.0]);
        assert_eq!(adaptive_control(&z, &z, &st, &cfg, &b, &p), z);

        let x = DVector::from_vec(vec![0.3, -0.7]);
        let st0 = state(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        let u = adaptive_control(&x, &x, &st0, &cfg, &b, &p);
        assert!((u + (&cfg.k + b.transpose() * &cfg.p) * &x).amax() < 1e-15);
    }

    #[test]
    fn adaptation_examples() {
        let (p, cfg) = (toy_param(), toy_cfg());
        let b = DMatrix::identity(2, 2);
        let z = DVector::zeros(2);
        let st = state(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        let (pf, pg) = adaptation_rhs(&z, &z, &st, &cfg, &b, &p);
        assert_eq!((pf.amax(), pg.amax()), (0.0, 0.0));
        let st = state(&[1.0, -2.0], &[0.5, 0.0], &[0.0, 0.0]);
        let (pf, pg) = adaptation_rhs(&z, &z, &st, &cfg, &b, &p);
        assert_eq!(pf, -&st.theta_f_hat * 0.01);
        assert_eq!(pg, -&st.theta_g_hat * 0.01);
    }

    #[test]
    fn ultimate_bound_examples() {
        let p = toy_param();
        let mut cfg = toy_cfg();
        cfg.sigma_f = 0.0;
        cfg.sigma_g = 0.0;
        assert_eq!(ultimate_bound(&cfg, &p, 0.0).unwrap().bound, 0.0);
        assert!((ultimate_bound(&cfg, &p, 0.3).unwrap().bound - (2.0 * 0.3 / 2.0f64).sqrt()).abs() < 1e-15);
        cfg.sigma_f = 0.6;
        cfg.sigma_g = 0.6;
        assert!(matches!(ultimate_bound(&cfg, &p, 0.0), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn smc_examples() {
        let cfg = SmcConfig {
            k_s: DMatrix::identity(2, 2),
            rho: 2.5,
            boundary_layer: 0.0,
        };
        assert_eq!(smc_control(&DVector::zeros(2), &cfg), DVector::zeros(2));
        let x = DVector::from_vec(vec![1e3, -2e3]);
        let u = smc_control(&x, &cfg);
        assert!(((&u + &x).amax() - 2.5).abs() < 1e-12);
        let layer = SmcConfig { boundary_layer: 0.1, ..cfg };
        assert!((smc_control(&DVector::from_vec(vec![0.05, 0.0]), &layer)[0] + 0.05 + 1.25).abs() < 1e-15);
    }

    #[test]
    fn pole_placement_and_c1() {
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.2, 0.9]));
        let a = -&c;
        let b = DMatrix::identity(3, 3);
        let k = pole_placement(&a, &b, &[-2.0; 3]).unwrap();
        assert!((&k - (-&c + DMatrix::identity(3, 3) * 2.0)).amax() < 1e-12);
        let (p, mu) = solve_c1(&a, &b, &k).unwrap();
        // A - BK = -2I: optimum P = I, μ = 2
        assert!((mu - 2.0).abs() < 1e-6, "mu = {mu}");
        assert!((p - DMatrix::identity(3, 3)).amax() < 1e-3);

        let thin = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(pole_placement(&a, &thin, &[-2.0; 3]), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn condition_checks() {
        let p = toy_param();
        let b = DMatrix::identity(2, 2);
        let k = pole_placement(&p.a, &b, &[-2.0, -2.0]).unwrap();
        let (pm, mu) = solve_c1(&p.a, &b, &k).unwrap();
        let mut cfg = AdaptiveConfig { k, p: pm, mu: mu * (1.0 - 1e-6), ..toy_cfg() };
        let consts = SystemConstants {
            l_tau: 0.078,
            l_phi_g: 1.0,
            tau_bar: 0.5,
            ..Default::default()
        };
        let rep = check_conditions(&cfg, &p, &consts, &b);
        assert!(rep.all(), "{rep:?}");
        cfg.sigma_f = 1.0;
        let rep = check_conditions(&cfg, &p, &consts, &b);
        assert!(!rep.c3 && rep.ensure().is_err());
        cfg.sigma_f = 0.01;
        cfg.t_f = 10.0;
        assert!(!check_conditions(&cfg, &p, &consts, &b).c2);
    }
}
