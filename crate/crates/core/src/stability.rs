//! Delay-dependent Mittag-Leffler stability certificates.
//!
//! For `D^α x = f(x) + g(x(t - τ(x)))` with `∂f/∂x(0) = A`, Lipschitz
//! constants `L_f`, `L_g` and delay bound `τ̄`, a certificate is a tuple
//! `(P, Q, R, ε1, ε2, ε3)` with
//!
//! ```text
//! Ω = [ Ω11   P    ]  ≺ 0,
//!     [ P   -ε3 I  ]
//! Ω11 = PA + AᵀP + τ̄Q + (τ̄^α/α)R + (ε1 + ε2)P² + (L_f²/ε1 + L_g²/ε2) I
//! ```
//!
//! and `L_g²/ε2 < τ̄ λmin(Q)`. `Ω` is not affine in `(P, ε)`, so the solver
//! works with `a_i = 1/ε_i` and the Schur-expanded 4n×4n form, which is.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fde::SystemConstants;
use crate::lkf::{LkfBounds, LkfWeights};
use crate::sdp::{lambda_max, lambda_min, sym_basis, sym_from, LmiBlock, Sdp, SdpOptions};
use crate::specfun::ml_decay;

/// `λmax(Ω)` at or below this counts as negative definite.
pub const FEASIBILITY_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiProblem {
    #[serde(with = "crate::rows")]
    pub a: DMatrix<f64>,
    pub constants: SystemConstants,
    pub alpha: f64,
    pub tau_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Upper limit on ε3; γ keeps improving as ε3 → ∞ otherwise.
    pub eps3_cap: f64,
    pub gap_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps3_cap: 1e3,
            gap_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiCertificate {
    pub weights: LkfWeights,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// `-λmax(Ω11 + P²/ε3)`
    pub gamma: f64,
    /// `λmin(-Ω)`
    pub delta: f64,
    pub delay_margin: f64,
    pub bounds: LkfBounds,
    pub lambda_max_omega: f64,
    /// Normalization under which γ was maximized.
    pub normalization: String,
    pub alpha: f64,
    pub tau_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recheck {
    pub lambda_max_omega: f64,
    pub lambda_min_p: f64,
    pub lambda_min_q: f64,
    pub lambda_min_r: f64,
    /// `τ̄ λmin(Q) - L_g²/ε2`, must be positive.
    pub step4_margin: f64,
    pub gamma: f64,
    pub passes: bool,
}

impl LmiProblem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn validate(&self) -> Result<()> {
        if self.a.nrows() != self.a.ncols() {
            return Err(Error::DimensionMismatch("A must be square".into()));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("A has non-finite entries".into()));
        }
        if !(self.tau_bar > 0.0) {
            return Err(Error::Domain(format!("tau_bar = {} must be positive", self.tau_bar)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha = {} not in (0, 1]", self.alpha)));
        }
        Ok(())
    }

    pub fn with_tau_bar(&self, tau_bar: f64) -> Self {
        Self {
            tau_bar,
            constants: SystemConstants {
                tau_bar,
                ..self.constants
            },
            ..self.clone()
        }
    }

    /// `L_f + √2 L_g`: any certificate makes `A + cI` Hurwitz.
    pub fn necessary_shift(&self) -> f64 {
        self.constants.l_f + std::f64::consts::SQRT_2 * self.constants.l_g
    }

    /// Spectral abscissa of `A + cI`; non-negative means no certificate exists.
    pub fn shifted_abscissa(&self) -> f64 {
        let c = self.necessary_shift();
        self.a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) + c
    }
}

pub fn omega11(prob: &LmiProblem, w: &LkfWeights, eps: [f64; 3]) -> Result<DMatrix<f64>> {
    let n = prob.dim();
    for (name, m) in [("P", &w.p), ("Q", &w.q), ("R", &w.r)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!("{name} is {}x{}, A is {n}x{n}", m.nrows(), m.ncols())));
        }
    }
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain(format!("eps = {eps:?} must be positive")));
    }
    let c = &prob.constants;
    let (tb, al) = (prob.tau_bar, prob.alpha);
    let p2 = &w.p * &w.p;
    let scalar = c.l_f * c.l_f / eps[0] + c.l_g * c.l_g / eps[1];
    Ok(&w.p * &prob.a + prob.a.transpose() * &w.p
        + &w.q * tb
        + &w.r * (tb.powf(al) / al)
        + p2 * (eps[0] + eps[1])
        + DMatrix::identity(n, n) * scalar)
}

/// The 2n×2n matrix `[[Ω11, P], [P, -ε3 I]]`.
pub fn assemble_omega(prob: &LmiProblem, w: &LkfWeights, eps: [f64; 3]) -> Result<DMatrix<f64>> {
    let n = prob.dim();
    let o11 = omega11(prob, w, eps)?;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&o11);
    m.view_mut((0, n), (n, n)).copy_from(&w.p);
    m.view_mut((n, 0), (n, n)).copy_from(&w.p);
    m.view_mut((n, n), (n, n)).copy_from(&(DMatrix::identity(n, n) * -eps[2]));
    Ok(m)
}

/// `-λmax(Ω11 + P²/ε3)`.
pub fn decay_rate(prob: &LmiProblem, w: &LkfWeights, eps: [f64; 3]) -> Result<f64> {
    let o11 = omega11(prob, w, eps)?;
    Ok(-lambda_max(&(o11 + &w.p * &w.p / eps[2])))
}

/// Eigenvalue re-check of a certificate, from its matrices alone.
pub fn recheck(prob: &LmiProblem, cert: &LmiCertificate) -> Result<Recheck> {
    let eps = [cert.eps1, cert.eps2, cert.eps3];
    let omega = assemble_omega(prob, &cert.weights, eps)?;
    let lmax = lambda_max(&omega);
    let lq = lambda_min(&cert.weights.q);
    let lg = prob.constants.l_g;
    let step4 = prob.tau_bar * lq - lg * lg / cert.eps2;
    let r = Recheck {
        lambda_max_omega: lmax,
        lambda_min_p: lambda_min(&cert.weights.p),
        lambda_min_q: lq,
        lambda_min_r: lambda_min(&cert.weights.r),
        step4_margin: step4,
        gamma: decay_rate(prob, &cert.weights, eps)?,
        passes: false,
    };
    Ok(Recheck {
        passes: r.lambda_max_omega <= FEASIBILITY_TOL
            && r.lambda_min_p > 0.0
            && r.lambda_min_q > 0.0
            && r.lambda_min_r > 0.0
            && r.step4_margin > 0.0
            && r.gamma > 0.0,
        ..r
    })
}

/// `Δτ* = δ / (λmax(Q) + τ̄^{α-1} λmax(R))`.
pub fn delay_margin(delta: f64, w: &LkfWeights, tau_bar: f64, alpha: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::NotApplicable(format!("delta = {delta:.3e}: certificate is not strictly feasible")));
    }
    Ok(delta / (lambda_max(&w.q) + tau_bar.powf(alpha - 1.0) * lambda_max(&w.r)))
}

impl LmiCertificate {
    /// `√(c2/c1) ‖φ‖ E_α(-(γ/c2) t^α)^{1/2}`, with `t` measured from t0.
    pub fn ml_bound(&self, phi_norm: f64, alpha: f64, t: f64) -> Result<f64> {
        ml_bound(self, phi_norm, alpha, t)
    }
}

pub fn ml_bound(cert: &LmiCertificate, phi_norm: f64, alpha: f64, t: f64) -> Result<f64> {
    if phi_norm == 0.0 {
        return Ok(0.0);
    }
    let LkfBounds { c1, c2 } = cert.bounds;
    let e = ml_decay(alpha, cert.gamma / c2, t)?;
    Ok((c2 / c1).sqrt() * phi_norm * e.max(0.0).sqrt())
}

/// Variable layout of the SDP.
struct Layout {
    n: usize,
    s: usize,
}

impl Layout {
    fn p(&self) -> usize {
        0
    }
    fn q(&self) -> usize {
        self.s
    }
    fn r(&self) -> usize {
        2 * self.s
    }
    fn a1(&self) -> usize {
        3 * self.s
    }
    fn a2(&self) -> usize {
        3 * self.s + 1
    }
    fn e3(&self) -> usize {
        3 * self.s + 2
    }
    fn gamma(&self) -> usize {
        3 * self.s + 3
    }
    fn nvars(&self) -> usize {
        3 * self.s + 4
    }
}

fn scalar_block(nv: usize, f0: f64, coeffs: &[(usize, f64)]) -> LmiBlock {
    let mut b = LmiBlock::new(1, nv);
    b.f0[(0, 0)] = f0;
    for &(j, c) in coeffs {
        b.fj[j][(0, 0)] = c;
    }
    b
}

fn build_sdp(prob: &LmiProblem, opts: &SolveOptions) -> (Sdp, Layout) {
    let n = prob.dim();
    let lay = Layout { n, s: n * (n + 1) / 2 };
    let nv = lay.nvars();
    let basis = sym_basis(n);
    let c = &prob.constants;
    let (tb, al) = (prob.tau_bar, prob.alpha);
    let id = DMatrix::<f64>::identity(n, n);

    // -M ≻ 0 with M = [[S, P, P, P], [P, -a1 I, 0, 0], [P, 0, -a2 I, 0], [P, 0, 0, -ε3 I]]
    let mut big = LmiBlock::new(4 * n, nv);
    let put = |m: &mut DMatrix<f64>, bi: usize, bj: usize, blk: &DMatrix<f64>| {
        m.view_mut((bi * n, bj * n), (n, n)).copy_from(&(-blk));
    };
    for (k, e) in basis.iter().enumerate() {
        let s_p = e * &prob.a + prob.a.transpose() * e;
        let m = &mut big.fj[lay.p() + k];
        put(m, 0, 0, &s_p);
        for b in 1..4 {
            put(m, 0, b, e);
            put(m, b, 0, e);
        }
        put(&mut big.fj[lay.q() + k], 0, 0, &(e * tb));
        put(&mut big.fj[lay.r() + k], 0, 0, &(e * (tb.powf(al) / al)));
    }
    {
        let m = &mut big.fj[lay.a1()];
        put(m, 0, 0, &(&id * (c.l_f * c.l_f)));
        put(m, 1, 1, &-&id);
    }
    {
        let m = &mut big.fj[lay.a2()];
        put(m, 0, 0, &(&id * (c.l_g * c.l_g)));
        put(m, 2, 2, &-&id);
    }
    put(&mut big.fj[lay.e3()], 3, 3, &-&id);
    put(&mut big.fj[lay.gamma()], 0, 0, &id);

    let mat_block = |offset: usize, sign: f64, f0: DMatrix<f64>| {
        let mut b = LmiBlock::new(n, nv);
        b.f0 = f0;
        for (k, e) in basis.iter().enumerate() {
            b.fj[offset + k] = e * sign;
        }
        b
    };
    let p_pos = mat_block(lay.p(), 1.0, DMatrix::zeros(n, n));
    let q_pos = mat_block(lay.q(), 1.0, DMatrix::zeros(n, n));
    let r_pos = mat_block(lay.r(), 1.0, DMatrix::zeros(n, n));
    let p_cap = mat_block(lay.p(), -1.0, id.clone());
    // τ̄Q - L_g² a2 I ≻ 0
    let mut step4 = mat_block(lay.q(), tb, DMatrix::zeros(n, n));
    step4.fj[lay.a2()] = &id * -(c.l_g * c.l_g);

    let mut sdp = Sdp::new(nv);
    sdp.objective[lay.gamma()] = 1.0;
    sdp.blocks = vec![
        big,
        p_pos,
        q_pos,
        r_pos,
        p_cap,
        step4,
        scalar_block(nv, 0.0, &[(lay.a1(), 1.0)]),
        scalar_block(nv, 0.0, &[(lay.a2(), 1.0)]),
        scalar_block(nv, 0.0, &[(lay.e3(), 1.0)]),
        scalar_block(nv, opts.eps3_cap, &[(lay.e3(), -1.0)]),
    ];
    (sdp, lay)
}

fn unpack(y: &DVector<f64>, lay: &Layout) -> (LkfWeights, [f64; 3], f64) {
    let n = lay.n;
    let s = lay.s;
    let w = LkfWeights {
        p: sym_from(&y.as_slice()[lay.p()..lay.p() + s], n),
        q: sym_from(&y.as_slice()[lay.q()..lay.q() + s], n),
        r: sym_from(&y.as_slice()[lay.r()..lay.r() + s], n),
    };
    let eps = [1.0 / y[lay.a1()], 1.0 / y[lay.a2()], y[lay.e3()]];
    (w, eps, y[lay.gamma()])
}

fn pack(w: &LkfWeights, a: [f64; 3], gamma: f64, lay: &Layout) -> DVector<f64> {
    let mut y = DVector::zeros(lay.nvars());
    for (off, m) in [(lay.p(), &w.p), (lay.q(), &w.q), (lay.r(), &w.r)] {
        for (k, v) in crate::sdp::sym_coords(m).into_iter().enumerate() {
            y[off + k] = v;
        }
    }
    y[lay.a1()] = a[0];
    y[lay.a2()] = a[1];
    y[lay.e3()] = a[2];
    y[lay.gamma()] = gamma;
    y
}

/// Maximize γ subject to the certificate conditions and `λmax(P) ≤ 1`.
pub fn solve_lmi(prob: &LmiProblem) -> Result<LmiCertificate> {
    solve_lmi_with(prob, &SolveOptions::default())
}

pub fn solve_lmi_with(prob: &LmiProblem, opts: &SolveOptions) -> Result<LmiCertificate> {
    prob.validate()?;
    let n = prob.dim();
    let (sdp, lay) = build_sdp(prob, opts);

    let lg2 = prob.constants.l_g.powi(2);
    let start = LkfWeights {
        p: DMatrix::identity(n, n) * 0.5,
        q: DMatrix::identity(n, n) * (2.0 * lg2 / prob.tau_bar + 1.0),
        r: DMatrix::identity(n, n) * 0.1,
    };
    let eps0 = [1.0, 1.0, 1.0];
    let g0 = decay_rate(prob, &start, eps0)? - 1.0;
    let y0 = pack(&start, [1.0, 1.0, 1.0], g0, &lay);

    let sol = sdp.maximize(
        &y0,
        &SdpOptions {
            gap_tol: opts.gap_tol,
            ..Default::default()
        },
    )?;
    let (weights, eps, _) = unpack(&sol.y, &lay);
    certificate_from(prob, weights, eps)
}

/// Evaluate a candidate; `Infeasible` unless `Ω ≺ 0` and the side conditions hold.
pub fn certificate_from(prob: &LmiProblem, weights: LkfWeights, eps: [f64; 3]) -> Result<LmiCertificate> {
    let omega = assemble_omega(prob, &weights, eps)?;
    let lmax = lambda_max(&omega);
    let gamma = decay_rate(prob, &weights, eps)?;
    let delta = -lmax;
    let bounds = weights.bounds(prob.alpha, prob.tau_bar);
    let mut cert = LmiCertificate {
        weights,
        eps1: eps[0],
        eps2: eps[1],
        eps3: eps[2],
        gamma,
        delta,
        delay_margin: 0.0,
        bounds,
        lambda_max_omega: lmax,
        normalization: "lambda_max(P) <= 1".into(),
        alpha: prob.alpha,
        tau_bar: prob.tau_bar,
    };
    let check = recheck(prob, &cert)?;
    if !check.passes {
        let a = prob.shifted_abscissa();
        return Err(Error::Infeasible {
            best_lambda_max: lmax,
            obstruction: (a >= 0.0).then_some(a),
        });
    }
    cert.delay_margin = delay_margin(delta, &cert.weights, prob.tau_bar, prob.alpha)?;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, l: f64, tau: f64, alpha: f64) -> LmiProblem {
        LmiProblem {
            a: DMatrix::from_element(1, 1, a),
            constants: SystemConstants {
                l_f: l,
                l_g: l,
                tau_bar: tau,
                ..Default::default()
            },
            alpha,
            tau_bar: tau,
        }
    }

    fn one(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn omega_scalar_example() {
        let prob = scalar(-1.0, 0.0, 1.0, 1.0);
        let w = LkfWeights {
            p: one(1.0),
            q: one(1.0),
            r: one(1.0),
        };
        let om = assemble_omega(&prob, &w, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(om, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, -1.0]));
        assert!(lambda_max(&om) > 0.0);
        assert!(matches!(assemble_omega(&prob, &w, [0.0, 1.0, 1.0]), Err(Error::Domain(_))));
        let w3 = LkfWeights::identity(3);
        assert!(matches!(assemble_omega(&prob, &w3, [1.0; 3]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn omega_limit_structure() {
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 0.3, 0.1, -1.0]);
        let prob = LmiProblem {
            a: a.clone(),
            constants: SystemConstants::default(),
            alpha: 0.9,
            tau_bar: 0.4,
        };
        let w = LkfWeights::identity(2);
        let o = omega11(&prob, &w, [1e-9, 1e-9, 1.0]).unwrap();
        let want = &a + a.transpose() + DMatrix::identity(2, 2) * (0.4 + 0.4f64.powf(0.9) / 0.9);
        assert!((o - want).amax() < 1e-8);
    }

    /// Exhaustive grid over (p, q, r, ε1, ε2, ε3) for 1-D problems, using the
    /// 2×2 criterion `Ω ≺ 0 ⇔ ω11 + p²/ε3 < 0` (ε3 > 0).
    fn grid_feasible(prob: &LmiProblem) -> bool {
        let vals: Vec<f64> = (-8..=8).map(|k| 2f64.powi(k)).collect();
        let a = prob.a[(0, 0)];
        let (lf, lg, tb, al) = (prob.constants.l_f, prob.constants.l_g, prob.tau_bar, prob.alpha);
        for &p in &vals {
            for &q in &vals {
                for &r in &vals {
                    for &e1 in &vals {
                        for &e2 in &vals {
                            for &e3 in &vals {
                                let w11 = 2.0 * p * a + tb * q + tb.powf(al) / al * r
                                    + (e1 + e2) * p * p
                                    + lf * lf / e1
                                    + lg * lg / e2;
                                if w11 + p * p / e3 < 0.0 && lg * lg / e2 < tb * q {
                                    return true;
                                }
                            }
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn scalar_feasible_problem() {
        let prob = scalar(-2.0, 0.1, 0.1, 0.95);
        assert!(grid_feasible(&prob));
        let cert = solve_lmi(&prob).unwrap();
        assert!(cert.gamma > 0.0);
        assert!(recheck(&prob, &cert).unwrap().passes);
        assert!(lambda_max(&cert.weights.p) <= 1.0 + 1e-12);
    }

    #[test]
    fn scalar_infeasible_problem() {
        let prob = scalar(1.0, 1.0, 0.1, 0.95);
        assert!(!grid_feasible(&prob));
        match solve_lmi(&prob) {
            Err(Error::Infeasible { best_lambda_max, obstruction }) => {
                assert!(best_lambda_max > FEASIBILITY_TOL);
                assert!(obstruction.unwrap() > 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn solver_beats_grid_optimum() {
        let prob = scalar(-2.0, 0.3, 0.2, 0.8);
        let cert = solve_lmi(&prob).unwrap();
        // best γ over a coarse grid restricted to p ≤ 1
        let vals: Vec<f64> = (-6..=6).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
        let mut best = f64::NEG_INFINITY;
        for &p in vals.iter().filter(|p| **p <= 1.0) {
            for &q in &vals {
                for &e1 in &vals {
                    for &e2 in &vals {
                        if 0.09 / e2 >= 0.2 * q {
                            continue;
                        }
                        let w = LkfWeights { p: one(p), q: one(q), r: one(1e-6) };
                        best = best.max(decay_rate(&prob, &w, [e1, e2, 1e3]).unwrap());
                    }
                }
            }
        }
        assert!(cert.gamma >= best - 1e-6, "{} < {best}", cert.gamma);
    }

    #[test]
    fn margin_examples() {
        let w = LkfWeights {
            p: one(1.0),
            q: one(1.0),
            r: one(0.0),
        };
        assert_eq!(delay_margin(1.0, &w, 0.5, 0.9).unwrap(), 1.0);
        assert_eq!(delay_margin(1.0, &w, 0.5, 0.5).unwrap(), 1.0);
        assert!(matches!(delay_margin(-0.1, &w, 0.5, 0.9), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn bound_examples() {
        let prob = scalar(-2.0, 0.1, 0.1, 0.95);
        let cert = solve_lmi(&prob).unwrap();
        let k = (cert.bounds.c2 / cert.bounds.c1).sqrt();
        assert!((ml_bound(&cert, 2.0, 0.95, 0.0).unwrap() - 2.0 * k).abs() < 1e-12);
        assert_eq!(ml_bound(&cert, 0.0, 0.95, 3.0).unwrap(), 0.0);
        assert!(ml_bound(&cert, 1.0, 0.95, 3.0).unwrap() < k);
    }

    #[test]
    fn gamma_nonincreasing_in_delay() {
        let base = LmiProblem {
            a: DMatrix::from_row_slice(2, 2, &[-2.0, 0.5, -0.3, -1.5]),
            constants: SystemConstants {
                l_f: 0.2,
                l_g: 0.3,
                ..Default::default()
            },
            alpha: 0.9,
            tau_bar: 0.1,
        };
        let mut prev = f64::INFINITY;
        for tau in [0.1, 0.3, 0.5, 0.7] {
            let g = solve_lmi(&base.with_tau_bar(tau)).unwrap().gamma;
            assert!(g <= prev + 1e-7, "tau {tau}: {g} > {prev}");
            prev = g;
        }
    }

    #[test]
    fn margin_is_conservative() {
        let prob = scalar(-2.0, 0.3, 0.2, 0.9);
        let cert = solve_lmi(&prob).unwrap();
        assert!(cert.delay_margin > 0.0);
        let bigger = prob.with_tau_bar(prob.tau_bar + 0.9 * cert.delay_margin);
        assert!(solve_lmi(&bigger).is_ok());
    }
}
