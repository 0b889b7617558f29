//! Small dense semidefinite programs: maximize `cᵀy` subject to
//! `F_i(y) = F_i0 + Σ_j y_j F_ij ≻ 0`, by a log-det barrier path-following
//! method with damped Newton centering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One affine matrix inequality `f0 + Σ y_j fj ≻ 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub f0: DMatrix<f64>,
    pub fj: Vec<DMatrix<f64>>,
}

impl LmiBlock {
    pub fn new(size: usize, nvars: usize) -> Self {
        Self {
            f0: DMatrix::zeros(size, size),
            fj: vec![DMatrix::zeros(size, size); nvars],
        }
    }

    pub fn size(&self) -> usize {
        self.f0.nrows()
    }

    pub fn eval(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.f0.clone();
        for (j, fj) in self.fj.iter().enumerate() {
            if y[j] != 0.0 {
                m += fj * y[j];
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct Sdp {
    pub nvars: usize,
    pub objective: DVector<f64>,
    pub blocks: Vec<LmiBlock>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Stop once the barrier duality measure m/t drops below this.
    pub gap_tol: f64,
    pub t_init: f64,
    pub t_growth: f64,
    pub max_newton: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            t_init: 1.0,
            t_growth: 10.0,
            max_newton: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub y: DVector<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    pub gap: f64,
}

/// Symmetric n×n basis: one matrix per upper-triangular entry.
pub fn sym_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Inverse of `sym_basis`: coordinates of a symmetric matrix.
pub fn sym_coords(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) });
        }
    }
    out
}

pub fn sym_from(y: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = y[k];
            m[(j, i)] = y[k];
            k += 1;
        }
    }
    m
}

pub fn sym_eigs(m: &DMatrix<f64>) -> DVector<f64> {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues()
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigs(m).max()
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigs(m).min()
}

fn chol_logdet(m: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let c = m.clone().cholesky()?;
    let l = c.l_dirty();
    let mut ld = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return None;
        }
        ld += 2.0 * d.ln();
    }
    Some((ld, c.inverse()))
}

impl Sdp {
    pub fn new(nvars: usize) -> Self {
        Self {
            nvars,
            objective: DVector::zeros(nvars),
            blocks: Vec::new(),
        }
    }

    fn barrier_size(&self) -> usize {
        self.blocks.iter().map(|b| b.size()).sum()
    }

    /// Smallest eigenvalue over all blocks at `y`.
    pub fn margin(&self, y: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|b| lambda_min(&b.eval(y)))
            .fold(f64::INFINITY, f64::min)
    }

    fn value(&self, t: f64, y: &DVector<f64>) -> Option<f64> {
        let mut v = -t * self.objective.dot(y);
        for b in &self.blocks {
            let (ld, _) = chol_logdet(&b.eval(y))?;
            v -= ld;
        }
        Some(v)
    }

    fn newton_system(&self, t: f64, y: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let nv = self.nvars;
        let mut g = -&self.objective * t;
        let mut h = DMatrix::zeros(nv, nv);
        for b in &self.blocks {
            let (_, inv) = chol_logdet(&b.eval(y))?;
            let gs: Vec<Option<DMatrix<f64>>> = b
                .fj
                .iter()
                .map(|fj| if fj.iter().all(|v| *v == 0.0) { None } else { Some(&inv * fj) })
                .collect();
            for j in 0..nv {
                let Some(gj) = &gs[j] else { continue };
                g[j] -= gj.trace();
                for k in j..nv {
                    let Some(gk) = &gs[k] else { continue };
                    // tr(G_j G_k)
                    let v = gj.component_mul(&gk.transpose()).sum();
                    h[(j, k)] += v;
                    if k != j {
                        h[(k, j)] += v;
                    }
                }
            }
        }
        Some((g, h))
    }

    fn solve_newton(g: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
        if let Some(c) = h.clone().cholesky() {
            return -c.solve(g);
        }
        // Hessian loses rank only for variables no block sees; regularize
        let reg = h + DMatrix::identity(h.nrows(), h.nrows()) * (1e-12 * h.diagonal().amax().max(1.0));
        match reg.clone().cholesky() {
            Some(c) => -c.solve(g),
            None => -reg.pseudo_inverse(1e-14).map(|p| p * g).unwrap_or_else(|_| g.clone()),
        }
    }

    /// Path-following from a strictly feasible `y0`.
    pub fn maximize(&self, y0: &DVector<f64>, opts: &SdpOptions) -> Result<SdpSolution> {
        if y0.len() != self.nvars {
            return Err(Error::DimensionMismatch(format!("start has {} entries, expected {}", y0.len(), self.nvars)));
        }
        if self.value(1.0, y0).is_none() {
            return Err(Error::Domain("starting point is not strictly feasible".into()));
        }
        let m = self.barrier_size() as f64;
        let mut y = y0.clone();
        let mut t = opts.t_init;
        let mut steps = 0;
        loop {
            for _ in 0..opts.max_newton {
                let Some((g, h)) = self.newton_system(t, &y) else {
                    return Err(Error::Domain("iterate left the feasible set".into()));
                };
                let dy = Self::solve_newton(&g, &h);
                let dec = -g.dot(&dy);
                if !dec.is_finite() || dec * 0.5 <= 1e-10 {
                    break;
                }
                let v0 = self.value(t, &y).expect("feasible iterate");
                let mut s = 1.0;
                let mut moved = false;
                while s > 1e-14 {
                    let cand = &y + &dy * s;
                    if let Some(v) = self.value(t, &cand) {
                        if v <= v0 - 0.25 * s * dec {
                            y = cand;
                            moved = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                steps += 1;
                if !moved {
                    break;
                }
            }
            if m / t < opts.gap_tol {
                break;
            }
            t *= opts.t_growth;
        }
        Ok(SdpSolution {
            objective: self.objective.dot(&y),
            y,
            newton_steps: steps,
            gap: m / t,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_roundtrip() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        assert_eq!(sym_from(&sym_coords(&m), 3), m);
        assert_eq!(sym_basis(3).len(), 6);
    }

    #[test]
    fn scalar_lp() {
        // max y s.t. 2 - y > 0, y + 1 > 0
        let mut sdp = Sdp::new(1);
        sdp.objective[0] = 1.0;
        let mut a = LmiBlock::new(1, 1);
        a.f0[(0, 0)] = 2.0;
        a.fj[0][(0, 0)] = -1.0;
        let mut b = LmiBlock::new(1, 1);
        b.f0[(0, 0)] = 1.0;
        b.fj[0][(0, 0)] = 1.0;
        sdp.blocks = vec![a, b];
        let sol = sdp.maximize(&DVector::from_element(1, 0.0), &SdpOptions::default()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // max s s.t. M - sI ≻ 0 gives λ_min(M)
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let mut sdp = Sdp::new(1);
        sdp.objective[0] = 1.0;
        sdp.blocks.push(LmiBlock {
            f0: m.clone(),
            fj: vec![-DMatrix::identity(2, 2)],
        });
        let sol = sdp.maximize(&DVector::from_element(1, 0.0), &SdpOptions::default()).unwrap();
        assert!((sol.objective - lambda_min(&m)).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_decay_rate() {
        // max μ s.t. AᵀP + PA + μI ⪯ 0, 0 ≺ P ⪯ I for A = -diag(1, 3): μ* = 2
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0]));
        let basis = sym_basis(2);
        let nv = basis.len() + 1;
        let mut sdp = Sdp::new(nv);
        sdp.objective[nv - 1] = 1.0;
        let mut lyap = LmiBlock::new(2, nv);
        let mut pos = LmiBlock::new(2, nv);
        let mut cap = LmiBlock::new(2, nv);
        cap.f0 = DMatrix::identity(2, 2);
        for (j, e) in basis.iter().enumerate() {
            lyap.fj[j] = -(a.transpose() * e + e * &a);
            pos.fj[j] = e.clone();
            cap.fj[j] = -e.clone();
        }
        lyap.fj[nv - 1] = -DMatrix::identity(2, 2);
        sdp.blocks = vec![lyap, pos, cap];
        let mut y0 = DVector::zeros(nv);
        y0[0] = 0.5;
        y0[2] = 0.5;
        y0[nv - 1] = -1.0;
        let sol = sdp.maximize(&y0, &SdpOptions::default()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-8, "{}", sol.objective);
        assert!(sdp.margin(&sol.y) > 0.0);
    }

    #[test]
    fn infeasible_start_rejected() {
        let mut sdp = Sdp::new(1);
        let mut b = LmiBlock::new(1, 1);
        b.f0[(0, 0)] = -1.0;
        sdp.blocks.push(b);
        assert!(sdp.maximize(&DVector::zeros(1), &SdpOptions::default()).is_err());
    }
}
