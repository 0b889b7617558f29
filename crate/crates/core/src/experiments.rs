//! Figure and table reproductions for the Hopfield benchmark. Every run
//! writes CSV series, SVG panels, `metrics.json` and `manifest.json` into
//! its own directory and records pass/fail invariant checks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::control::{delay_error_bound, delta_tau, ultimate_bound, SmcController};
use crate::error::{Error, Result};
use crate::fde::{holder_constant, integrate, Trajectory};
use crate::hopfield::{build, design_controller, regional_lmi_problem, smc_config, lmi_problem, ControllerDesign, HopfieldParams};
use crate::lkf::{caputo_derivative_numeric, eval_series, eval_v1, verify_quadratic_lemma};
use crate::plot::{Plot, Series};
use crate::report::{compute_metrics, cumulative_trapezoid, Check, OutDir, RunManifest, RunMetrics, Table};
use crate::specfun::{gamma, ml_asymptotic, ml_decay};
use crate::stability::{recheck, solve_lmi, LmiCertificate, LmiProblem};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    MlCurves,
    Uncontrolled,
    Adaptive,
    Compare,
    SensitivityAlpha,
    SensitivityTau,
    LyapunovValidation,
    DelayCharacterization,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::MlCurves,
        Experiment::Uncontrolled,
        Experiment::Adaptive,
        Experiment::Compare,
        Experiment::SensitivityAlpha,
        Experiment::SensitivityTau,
        Experiment::LyapunovValidation,
        Experiment::DelayCharacterization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MlCurves => "ml_curves",
            Experiment::Uncontrolled => "uncontrolled",
            Experiment::Adaptive => "adaptive",
            Experiment::Compare => "compare",
            Experiment::SensitivityAlpha => "sensitivity_alpha",
            Experiment::SensitivityTau => "sensitivity_tau",
            Experiment::LyapunovValidation => "lyapunov_validation",
            Experiment::DelayCharacterization => "delay_characterization",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}; expected one of {}", Experiment::ALL.map(|e| e.name()).join(", "))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub alphas: Vec<f64>,
    pub tau_bars: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            alphas: vec![0.70, 0.80, 0.90, 0.95, 0.99],
            tau_bars: vec![0.0, 0.1, 0.3, 0.5, 0.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlCurves {
    pub alphas: Vec<f64>,
    /// Horizon of the linear panel.
    pub t_linear: f64,
    /// Horizon of the logarithmic panel.
    pub t_log: f64,
    pub points: usize,
}

impl Default for MlCurves {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 0.7, 0.85, 0.95, 1.0],
            t_linear: 10.0,
            t_log: 100.0,
            points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Audit {
    pub pairs: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for Audit {
    fn default() -> Self {
        Self {
            pairs: 10_000,
            radius: 2.0,
            seed: 20240917,
        }
    }
}

/// One config file for every experiment: the benchmark sections plus
/// `[sweep]`, `[ml_curves]` and `[audit]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub system: HopfieldParams,
    pub sweep: Sweep,
    pub ml_curves: MlCurves,
    pub audit: Audit,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        fn take<T: for<'de> Deserialize<'de> + Default>(t: &mut toml::Table, key: &str) -> Result<T> {
            match t.remove(key) {
                Some(v) => v.try_into().map_err(|e: toml::de::Error| Error::Config(format!("[{key}]: {e}"))),
                None => Ok(T::default()),
            }
        }
        let sweep = take(&mut table, "sweep")?;
        let ml_curves = take(&mut table, "ml_curves")?;
        let audit = take(&mut table, "audit")?;
        let system = HopfieldParams::from_toml(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?)?;
        let cfg = Self {
            system,
            sweep,
            ml_curves,
            audit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(format!("reading {}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.sweep.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::Config("sweep.alphas must lie in (0, 1]".into()));
        }
        if self.sweep.tau_bars.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("sweep.tau_bars must be non-negative".into()));
        }
        if self.ml_curves.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) || self.ml_curves.points < 2 {
            return Err(Error::Config("ml_curves needs alphas in (0, 1] and at least 2 points".into()));
        }
        if !(self.audit.radius > 0.0) {
            return Err(Error::Config("audit.radius must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        let mut t: toml::Table = toml::from_str(&self.system.to_toml()).expect("params serialize");
        for (k, v) in [
            ("sweep", toml::Value::try_from(&self.sweep)),
            ("ml_curves", toml::Value::try_from(&self.ml_curves)),
            ("audit", toml::Value::try_from(&self.audit)),
        ] {
            t.insert(k.into(), v.expect("plain data serializes"));
        }
        toml::to_string(&t).expect("table serializes")
    }
}

fn manifest(
    exp: &str,
    cfg: &ExperimentConfig,
    out: OutDir,
    metrics: serde_json::Value,
    checks: Vec<Check>,
) -> Result<RunManifest> {
    let mut out = out;
    out.json("metrics.json", &metrics)?;
    let path = out.path("manifest.json");
    let m = RunManifest {
        experiment: exp.into(),
        version: VERSION.into(),
        seed: cfg.audit.seed,
        config: cfg.to_toml(),
        outputs: out.written.iter().map(|p| p.strip_prefix(&out.root).unwrap_or(p).to_path_buf()).collect(),
        metrics,
        checks,
    };
    std::fs::write(path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(m)
}

/// Uncontrolled run of the configured benchmark.
pub fn uncontrolled_run(p: &HopfieldParams) -> Result<Trajectory> {
    integrate(&build(p), &p.initial_function(), &p.solver_config(), None)
}

/// Closed loop under the adaptive controller.
pub fn adaptive_run(p: &HopfieldParams) -> Result<(Trajectory, ControllerDesign)> {
    let d = design_controller(p)?;
    let traj = integrate(&build(p), &p.initial_function(), &p.solver_config(), Some(&d.controller))?;
    Ok((traj, d))
}

/// Closed loop under the sliding-mode baseline sharing the adaptive K.
pub fn smc_run(p: &HopfieldParams, design: &ControllerDesign) -> Result<Trajectory> {
    let ctrl = SmcController(smc_config(p, &design.controller.cfg.k)?);
    integrate(&build(p), &p.initial_function(), &p.solver_config(), Some(&ctrl))
}

/// Regional surrogate certificate on the ball of radius `‖φ‖∞`.
pub fn regional_certificate(p: &HopfieldParams) -> Result<(LmiProblem, LmiCertificate)> {
    let prob = regional_lmi_problem(p, p.initial_function().sup_norm());
    let cert = solve_lmi(&prob).map_err(|e| e.context("regional surrogate LMI"))?;
    Ok((prob, cert))
}

/// `√(c2/c1)‖φ‖ E_α(-(γ/c2)t^α)^{1/2}` at every node.
pub fn bound_series(cert: &LmiCertificate, traj: &Trajectory, phi: f64, alpha: f64) -> Result<Vec<f64>> {
    traj.times().iter().map(|t| cert.ml_bound(phi, alpha, t - traj.t0)).collect()
}

fn component(traj: &Trajectory, i: usize) -> Vec<f64> {
    traj.states.iter().map(|x| x[i]).collect()
}

fn state_plot(title: &str, traj: &Trajectory) -> Plot {
    let t = traj.times();
    let mut p = Plot::new(title, "t (s)", "x_i");
    for i in 0..traj.dim() {
        p = p.with(Series::line(format!("x{}", i + 1), t.clone(), component(traj, i)));
    }
    p
}

fn state_columns(mut tab: Table, traj: &Trajectory, prefix: &str) -> Table {
    for i in 0..traj.dim() {
        tab = tab.col(&format!("{prefix}{}", i + 1), "1", component(traj, i));
    }
    tab
}

fn holder_check(label: &str, p: &HopfieldParams, traj: &Trajectory) -> (Check, serde_json::Value) {
    let r = holder_constant(&build(p), traj);
    (
        Check::new(
            &format!("holder pairs ({label})"),
            r.holds,
            format!("max ratio {:.4} vs constant {:.4} over {} pairs", r.max_ratio, r.constant, r.pairs_checked),
        ),
        serde_json::to_value(r).expect("plain data"),
    )
}

/// Runs one experiment into `root/<name>`.
pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig, root: &Path) -> Result<RunManifest> {
    let out = OutDir::create(root.join(exp.name()))?;
    let r = match exp {
        Experiment::MlCurves => ml_curves(cfg, out),
        Experiment::Uncontrolled => uncontrolled(cfg, out),
        Experiment::Adaptive => adaptive(cfg, out),
        Experiment::Compare => compare(cfg, out),
        Experiment::SensitivityAlpha => sensitivity(cfg, out, SweepKind::Alpha),
        Experiment::SensitivityTau => sensitivity(cfg, out, SweepKind::TauBar),
        Experiment::LyapunovValidation => lyapunov_validation(cfg, out),
        Experiment::DelayCharacterization => delay_characterization(cfg, out),
    };
    r.map_err(|e| e.context(format!("experiment {exp}")))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn ml_curves(cfg: &ExperimentConfig, mut out: OutDir) -> Result<RunManifest> {
    let c = &cfg.ml_curves;
    let t_lin = linspace(0.0, c.t_linear, c.points);
    let t_log = linspace(0.0, c.t_log, c.points);
    let mut lin = Table::new("E_alpha(-t^alpha), linear panel").col("t", "s", t_lin.clone());
    let mut log = Table::new("E_alpha(-t^alpha) and leading asymptotic term, logarithmic panel").col("t", "s", t_log.clone());
    let mut pa = Plot::new("Mittag-Leffler decay E_a(-t^a)", "t", "E_a(-t^a)");
    let mut pb = Plot::new("Mittag-Leffler decay, log scale (dashed: t^-a / Gamma(1-a))", "t", "E_a(-t^a)").log_y();
    let mut checks = Vec::new();
    let mut ratios = serde_json::Map::new();
    for (i, &a) in c.alphas.iter().enumerate() {
        let color = crate::plot::ramp_color(i as f64 / (c.alphas.len().max(2) - 1) as f64);
        let e_lin = t_lin.iter().map(|t| ml_decay(a, 1.0, *t)).collect::<Result<Vec<_>>>()?;
        let e_log = t_log.iter().map(|t| ml_decay(a, 1.0, *t)).collect::<Result<Vec<_>>>()?;
        let monotone = e_lin.windows(2).chain(e_log.windows(2)).all(|w| w[1] <= w[0] + 1e-15);
        checks.push(Check::new(&format!("monotone decay, alpha {a}"), monotone && e_lin[0] == 1.0, "E(0) = 1 and non-increasing"));
        pa = pa.with(Series::line(format!("a = {a}"), t_lin.clone(), e_lin.clone()).color(&color));
        pb = pb.with(Series::line(format!("a = {a}"), t_log.clone(), e_log.clone()).color(&color));
        lin = lin.col(&format!("E_{a}"), "1", e_lin);
        log = log.col(&format!("E_{a}"), "1", e_log);
        if a < 1.0 {
            let asym: Vec<f64> = t_log.iter().map(|t| if *t >= 1.0 { ml_asymptotic(a, *t).unwrap_or(f64::NAN) } else { f64::NAN }).collect();
            pb = pb.with(Series::line("", t_log.clone(), asym.clone()).dashed().color(&color));
            log = log.col(&format!("asym_{a}"), "1", asym);
            // Error of the leading term relative to t^{-2α} on [20, 200]
            let mut worst: f64 = 0.0;
            for k in 0..=90 {
                let t = 20.0 + 2.0 * k as f64;
                let err = (ml_decay(a, 1.0, t)? - ml_asymptotic(a, t)?).abs();
                worst = worst.max(err * t.powf(2.0 * a));
            }
            checks.push(Check::new(&format!("asymptotic error O(t^-2a), alpha {a}"), worst < 2.0, format!("max |E - asym| t^2a = {worst:.4}")));
            ratios.insert(a.to_string(), json!(worst));
        }
    }
    out.table("ml_linear.csv", &lin)?;
    out.table("ml_log.csv", &log)?;
    out.plot("fig1a_linear.svg", &pa)?;
    out.plot("fig1b_log.svg", &pb)?;
    let metrics = json!({ "asymptotic_error_ratio": ratios });
    manifest("ml_curves", cfg, out, metrics, checks)
}

fn uncontrolled(cfg: &ExperimentConfig, mut out: OutDir) -> Result<RunManifest> {
    let p = &cfg.system;
    let traj = uncontrolled_run(p)?;
    let phi = p.initial_function().sup_norm();
    let alpha = p.simulation.alpha;
    let t = traj.times();
    let norms = traj.norms();
    let mut checks = Vec::new();

    let reported = solve_lmi(&lmi_problem(p));
    let (bound, cert_json) = match regional_certificate(p) {
        Ok((prob, cert)) => {
            let rc = recheck(&prob, &cert)?;
            checks.push(Check::new("regional surrogate certificate re-check", rc.passes, format!("lambda_max(Omega) = {:.3e}", rc.lambda_max_omega)));
            let b = bound_series(&cert, &traj, phi, alpha)?;
            let worst = norms.iter().zip(&b).map(|(n, b)| n - b).fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::new(
                "norm below Mittag-Leffler bound (regional surrogate)",
                worst <= 1e-12,
                format!("max(norm - bound) = {worst:.3e}"),
            ));
            (Some(b), json!({ "gamma": cert.gamma, "c1": cert.bounds.c1, "c2": cert.bounds.c2, "delay_margin": cert.delay_margin, "l_f": prob.constants.l_f, "l_g": prob.constants.l_g }))
        }
        Err(e) => {
            checks.push(Check::new("regional surrogate certificate", false, e.to_string()));
            (None, json!(null))
        }
    };

    let lo = p.delay.tau_bar * (1.0 - p.delay.eta);
    let hi = p.delay.tau_bar * (1.0 + p.delay.eta);
    let dmin = traj.delays.iter().copied().fold(f64::INFINITY, f64::min);
    let dmax = traj.delays.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("delay within admissible range", dmin >= lo && dmax <= hi, format!("observed [{dmin:.4}, {dmax:.4}] in [{lo}, {hi}]")));
    let (hc, hv) = holder_check("uncontrolled", p, &traj);
    checks.push(hc);

    let mut tab = state_columns(Table::new("uncontrolled response").col("t", "s", t.clone()), &traj, "x");
    tab = tab.col("norm", "1", norms.clone()).col("delay", "s", traj.delays.clone());
    if let Some(b) = &bound {
        tab = tab.col("ml_bound_regional", "1", b.clone());
    }
    out.table("uncontrolled.csv", &tab)?;
    out.plot("fig2a_states.svg", &state_plot("Uncontrolled state trajectories", &traj))?;
    let mut pb = Plot::new("State norm and Mittag-Leffler bound", "t (s)", "||x||").log_y().with(Series::line("||x(t)||", t.clone(), norms.clone()));
    if let Some(b) = &bound {
        pb = pb.with(Series::line("bound (regional surrogate)", t.clone(), b.clone()).dashed());
    }
    out.plot("fig2b_norm_bound.svg", &pb)?;
    out.plot(
        "fig2c_phase.svg",
        &Plot::new("Phase portrait", "x1", "x2").with(Series::line("", component(&traj, 0), component(&traj, 1))),
    )?;
    out.plot(
        "fig2d_delay.svg",
        &Plot::new("State-dependent delay", "t (s)", "tau (s)")
            .with(Series::line("tau(x(t))", t.clone(), traj.delays.clone()))
            .hline(lo, "tau_bar(1-eta)")
            .hline(p.delay.tau_bar, "tau_bar"),
    )?;

    let metrics = json!({
        "run": compute_metrics(&traj),
        "delay_min": dmin,
        "delay_max": dmax,
        "delay_final": traj.delays.last(),
        "reported_constants_lmi": lmi_status(&reported),
        "regional_certificate": cert_json,
        "holder": hv,
    });
    manifest("uncontrolled", cfg, out, metrics, checks)
}

fn lmi_status(r: &Result<LmiCertificate>) -> serde_json::Value {
    match r {
        Ok(c) => json!({ "feasible": true, "gamma": c.gamma, "delay_margin": c.delay_margin }),
        Err(Error::Infeasible { best_lambda_max, obstruction }) => {
            json!({ "feasible": false, "best_lambda_max": best_lambda_max, "shifted_abscissa": obstruction })
        }
        Err(e) => json!({ "feasible": false, "error": e.to_string() }),
    }
}

/// Per-node `V = xᵀPx`, and whether it falls monotonically with its
/// total decrease in decades.
pub fn quadratic_decay(traj: &Trajectory, p: &nalgebra::DMatrix<f64>) -> (Vec<f64>, bool, f64) {
    let v: Vec<f64> = traj.states.iter().map(|x| eval_v1(p, x)).collect();
    let monotone = v.windows(2).all(|w| w[1] <= w[0]);
    let decades = match (v.first(), v.last()) {
        (Some(a), Some(b)) if *b > 0.0 => (a / b).log10(),
        (Some(a), Some(_)) if *a > 0.0 => f64::INFINITY,
        _ => 0.0,
    };
    (v, monotone, decades)
}

/// Filter estimate error `|τ(x) - τ̂|` and `‖x - x̂‖` against their bounds.
pub fn filter_audit(p: &HopfieldParams, traj: &Trajectory, design: &ControllerDesign) -> Result<(Check, Check, serde_json::Value)> {
    let model = build(p);
    let alpha = p.simulation.alpha;
    let c = p.system_constants();
    let m_x = traj.states.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let m_u = traj.inputs.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let b_norm = p.b().singular_values().max();
    let tau_bound = delay_error_bound(&c, m_x, m_u, b_norm, p.controller.t_f, alpha);
    let m_d = (c.l_f + c.l_g) * m_x + b_norm * m_u;
    let state_bound = m_d * p.controller.t_f.powf(alpha) / gamma(alpha + 1.0)?;
    let mut tau_err: f64 = 0.0;
    let mut x_err: f64 = 0.0;
    for (x, xh) in traj.states.iter().zip(&traj.disc) {
        tau_err = tau_err.max(((model.tau)(x) - (design.controller.tau)(xh)).abs());
        x_err = x_err.max((x - xh).norm());
    }
    Ok((
        Check::new("delay estimate error below filter bound", tau_err <= tau_bound, format!("max {tau_err:.3e} vs bound {tau_bound:.3e}")),
        Check::new("filtered state error below filter bound", x_err <= state_bound, format!("max {x_err:.3e} vs bound {state_bound:.3e}")),
        json!({ "max_delay_error": tau_err, "delay_error_bound": tau_bound, "max_state_error": x_err, "state_error_bound": state_bound, "m_d": m_d }),
    ))
}

fn adaptive(cfg: &ExperimentConfig, mut out: OutDir) -> Result<RunManifest> {
    let p = &cfg.system;
    let (traj, design) = adaptive_run(p)?;
    let free = uncontrolled_run(p)?;
    let acfg = &design.controller.cfg;
    let t = traj.times();
    let norms = traj.norms();
    let metrics_run = compute_metrics(&traj);
    let (v, monotone, decades) = quadratic_decay(&traj, &acfg.p);
    let pf = design.controller.param.p_f();
    let th_f: Vec<f64> = traj.aux.iter().map(|a| a.rows(0, pf).norm()).collect();
    let th_g: Vec<f64> = traj.aux.iter().map(|a| a.rows(pf, a.len() - pf).norm()).collect();
    let tau_hat: Vec<f64> = traj.disc.iter().map(|xh| (design.controller.tau)(xh)).collect();

    let mut checks = vec![Check::new(
        "design conditions (C1)-(C3)",
        design.conditions.all(),
        format!(
            "C1 lambda_max {:.2e}; T_f {} < {:.4}; sigma {} < {:.4e}",
            design.conditions.c1_lambda_max,
            acfg.t_f,
            design.conditions.t_f_limit,
            acfg.sigma_f.max(acfg.sigma_g),
            design.conditions.sigma_limit
        ),
    )];
    let (fc1, fc2, fv) = filter_audit(p, &traj, &design)?;
    checks.push(fc1);
    checks.push(fc2);
    let (hc, hv) = holder_check("adaptive", p, &traj);
    checks.push(hc);
    let lemma = verify_quadratic_lemma(&acfg.p, &traj, &build(p));
    checks.push(Check::new(
        "quadratic Caputo inequality (adaptive run)",
        lemma.holds,
        format!("max excess {:.3e} vs slack {:.3e}", lemma.max_excess, lemma.slack),
    ));
    let hold = holder_constant(&build(p), &traj);
    let dt = delta_tau(&p.system_constants(), hold.constant, hold.m_d, acfg.t_f, p.simulation.alpha, design.controller.param.theta_g_bound, acfg.mu);
    let ub = ultimate_bound(acfg, &design.controller.param, dt)?;
    checks.push(Check::new(
        "terminal norm within ultimate bound",
        metrics_run.terminal_norm <= ub.bound,
        format!("{:.3e} <= {:.4}", metrics_run.terminal_norm, ub.bound),
    ));

    let mut tab = state_columns(Table::new("adaptive closed loop").col("t", "s", t.clone()), &traj, "x");
    for i in 0..traj.inputs[0].len() {
        tab = tab.col(&format!("u{}", i + 1), "1", traj.inputs.iter().map(|u| u[i]).collect());
    }
    tab = tab
        .col("norm", "1", norms.clone())
        .col("norm_uncontrolled", "1", free.norms())
        .col("V", "1", v.clone())
        .col("theta_f_hat_norm", "1", th_f)
        .col("theta_g_hat_norm", "1", th_g)
        .col("delay", "s", traj.delays.clone())
        .col("delay_estimate", "s", tau_hat);
    out.table("adaptive.csv", &tab)?;
    out.plot("fig3a_states.svg", &state_plot("Controlled state trajectories", &traj))?;
    let mut pu = Plot::new("Adaptive control signals", "t (s)", "u_i");
    for i in 0..traj.inputs[0].len() {
        pu = pu.with(Series::line(format!("u{}", i + 1), t.clone(), traj.inputs.iter().map(|u| u[i]).collect()));
    }
    out.plot("fig3b_controls.svg", &pu)?;
    let mut pn = Plot::new("State norm: controlled vs uncontrolled", "t (s)", "||x||")
        .log_y()
        .with(Series::line("adaptive", t.clone(), norms))
        .with(Series::line("uncontrolled", t.clone(), free.norms()).dashed());
    if metrics_run.settling_time_10pct.is_finite() {
        pn = pn.vline(metrics_run.settling_time_10pct, &format!("t_s = {:.2} s", metrics_run.settling_time_10pct));
    }
    out.plot("fig3c_norm.svg", &pn)?;
    out.plot("fig3d_lyapunov.svg", &Plot::new("Lyapunov function V = x'Px", "t (s)", "V").log_y().with(Series::line("V", t, v)))?;

    let metrics = json!({
        "run": metrics_run,
        "lyapunov_monotone": monotone,
        "lyapunov_decades": decades,
        "conditions": design.conditions,
        "mu": acfg.mu,
        "ultimate_bound": ub,
        "filter": fv,
        "holder": hv,
        "quadratic_lemma": lemma,
    });
    manifest("adaptive", cfg, out, metrics, checks)
}

/// Table 1 rows: `(metric, adaptive, smc)`; the ratio is always recomputed.
pub fn comparison_rows(a: &RunMetrics, s: &RunMetrics) -> Vec<(&'static str, f64, f64)> {
    vec![
        ("peak_control", a.peak_control, s.peak_control),
        ("control_energy", a.control_energy, s.control_energy),
        ("terminal_norm", a.terminal_norm, s.terminal_norm),
        ("settling_time_10pct", a.settling_time_10pct, s.settling_time_10pct),
    ]
}

fn compare(cfg: &ExperimentConfig, mut out: OutDir) -> Result<RunManifest> {
    let p = &cfg.system;
    let (ta, design) = adaptive_run(p)?;
    let ts = smc_run(p, &design)?;
    let (ma, ms) = (compute_metrics(&ta), compute_metrics(&ts));
    let t = ta.times();
    let ua: Vec<f64> = ta.inputs.iter().map(|u| u.norm()).collect();
    let us: Vec<f64> = ts.inputs.iter().map(|u| u.norm()).collect();
    let ea = cumulative_trapezoid(ta.h, &ua.iter().map(|v| v * v).collect::<Vec<_>>());
    let es = cumulative_trapezoid(ts.h, &us.iter().map(|v| v * v).collect::<Vec<_>>());
    let tab = Table::new("adaptive vs sliding mode")
        .col("t", "s", t.clone())
        .col("norm_adaptive", "1", ta.norms())
        .col("norm_smc", "1", ts.norms())
        .col("u_norm_adaptive", "1", ua.clone())
        .col("u_norm_smc", "1", us.clone())
        .col("energy_adaptive", "1*s", ea.clone())
        .col("energy_smc", "1*s", es.clone());
    out.table("compare.csv", &tab)?;

    let rows = comparison_rows(&ma, &ms);
    let mut csv = String::from("# adaptive vs sliding mode over the simulated horizon; ratio = adaptive / smc\n");
    csv.push_str("# metric: name\n# adaptive: metric value\n# smc: metric value\n# ratio: 1\nmetric,adaptive,smc,ratio\n");
    for (name, a, s) in &rows {
        csv.push_str(&format!("{name},{a},{s},{}\n", a / s));
    }
    std::fs::write(out.path("table1.csv"), csv)?;

    out.plot(
        "fig4a_norm.svg",
        &Plot::new("State norm", "t (s)", "||x||").log_y().with(Series::line("adaptive", t.clone(), ta.norms())).with(Series::line("SMC", t.clone(), ts.norms())),
    )?;
    out.plot(
        "fig4b_effort.svg",
        &Plot::new("Instantaneous control effort", "t (s)", "||u||").with(Series::line("adaptive", t.clone(), ua)).with(Series::line("SMC", t.clone(), us)),
    )?;
    out.plot(
        "fig4c_energy.svg",
        &Plot::new("Cumulative control energy", "t (s)", "int ||u||^2 dt").log_y().with(Series::line("adaptive", t.clone(), ea)).with(Series::line("SMC", t, es)),
    )?;

    let (h1, hv1) = holder_check("adaptive", p, &ta);
    let (h2, hv2) = holder_check("sliding mode", p, &ts);
    let checks = vec![h1, h2];
    let table: Vec<_> = rows.iter().map(|(n, a, s)| json!({ "metric": n, "adaptive": a, "smc": s, "ratio": a / s })).collect();
    let metrics = json!({ "adaptive": ma, "smc": ms, "table": table, "holder": [hv1, hv2] });
    manifest("compare", cfg, out, metrics, checks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Alpha,
    TauBar,
}

impl SweepKind {
    fn key(self) -> &'static str {
        match self {
            SweepKind::Alpha => "alpha",
            SweepKind::TauBar => "tau_bar",
        }
    }

    pub fn apply(self, p: &HopfieldParams, v: f64) -> HopfieldParams {
        match self {
            SweepKind::Alpha => {
                let mut q = p.clone();
                q.simulation.alpha = v;
                q
            }
            SweepKind::TauBar => p.with_tau_bar(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub metrics: RunMetrics,
    pub conditions_hold: bool,
}

/// Closed-loop runs over `values`, concurrently; results sorted by value.
pub fn sweep(p: &HopfieldParams, kind: SweepKind, values: &[f64]) -> Result<Vec<(SweepPoint, Trajectory)>> {
    let mut pts = values
        .par_iter()
        .map(|&v| {
            let q = kind.apply(p, v);
            let (traj, d) = adaptive_run(&q).map_err(|e| e.context(format!("{} = {v}", kind.key())))?;
            Ok((
                SweepPoint {
                    value: v,
                    metrics: compute_metrics(&traj),
                    conditions_hold: d.conditions.all(),
                },
                traj,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    pts.sort_by(|a, b| a.0.value.total_cmp(&b.0.value));
    Ok(pts)
}

fn sensitivity(cfg: &ExperimentConfig, mut out: OutDir, kind: SweepKind) -> Result<RunManifest> {
    let (values, name, unit) = match kind {
        SweepKind::Alpha => (&cfg.sweep.alphas, "sensitivity_alpha", "1"),
        SweepKind::TauBar => (&cfg.sweep.tau_bars, "sensitivity_tau", "s"),
    };
    let pts = sweep(&cfg.system, kind, values)?;
    let mut pn = Plot::new(&format!("State norm vs {}", kind.key()), "t (s)", "||x||").log_y();
    for (i, (pt, traj)) in pts.iter().enumerate() {
        let dir = out.root.join(format!("{}_{:.2}", kind.key(), pt.value));
        let mut sub = OutDir::create(dir)?;
        sub.table("trajectory.csv", &state_columns(Table::new(&format!("{} = {}", kind.key(), pt.value)).col("t", "s", traj.times()), traj, "x").col("norm", "1", traj.norms()))?;
        sub.json("metrics.json", pt)?;
        out.written.extend(sub.written);
        let color = crate::plot::ramp_color(i as f64 / (pts.len().max(2) - 1) as f64);
        pn = pn.with(Series::line(format!("{} = {}", kind.key(), pt.value), traj.times(), traj.norms()).color(&color));
    }
    let vals: Vec<f64> = pts.iter().map(|(p, _)| p.value).collect();
    let ts: Vec<f64> = pts.iter().map(|(p, _)| p.metrics.settling_time_10pct).collect();
    let summary = Table::new("settling time summary")
        .col(kind.key(), unit, vals.clone())
        .col("settling_time_10pct", "s", ts.clone())
        .col("peak_control", "1", pts.iter().map(|(p, _)| p.metrics.peak_control).collect())
        .col("control_energy", "1*s", pts.iter().map(|(p, _)| p.metrics.control_energy).collect())
        .col("terminal_norm", "1", pts.iter().map(|(p, _)| p.metrics.terminal_norm).collect());
    out.table("settling.csv", &summary)?;
    let fig = if kind == SweepKind::Alpha { "fig5a" } else { "fig5b" };
    out.plot(&format!("{fig}_norms.svg"), &pn)?;
    out.plot(
        &format!("fig5c_settling_{}.svg", kind.key()),
        &Plot::new("Settling time summary", kind.key(), "t_s (s)").with(Series::line("t_s", vals.clone(), ts.clone()).markers()),
    )?;
    let checks = vec![Check::new(
        "design conditions hold at every sweep point",
        pts.iter().all(|(p, _)| p.conditions_hold),
        format!("{} points", pts.len()),
    )];
    let strictly_decreasing = ts.windows(2).all(|w| w[1] < w[0]);
    let degradation = ts.iter().copied().fold(0.0, f64::max) / ts.first().copied().unwrap_or(f64::NAN);
    let metrics = json!({
        "points": pts.iter().map(|(p, _)| p).collect::<Vec<_>>(),
        "settling_strictly_decreasing": strictly_decreasing,
        "settling_degradation": degradation,
    });
    manifest(name, cfg, out, metrics, checks)
}

/// LKF sandwich `c1‖x(t)‖² ≤ V(t) ≤ c2 sup_{[t-τ̄,t]}‖x‖²` at every node.
pub fn sandwich_check(cert: &LmiCertificate, traj: &Trajectory, v: &[f64], tau_bar: f64) -> (bool, f64) {
    let mut worst = f64::NEG_INFINITY;
    for (k, x) in traj.states.iter().enumerate() {
        let lo = cert.bounds.c1 * x.norm_squared() - v[k];
        let sup = traj.sup_norm_window(k, tau_bar);
        let hi = v[k] - cert.bounds.c2 * sup * sup;
        worst = worst.max(lo.max(hi));
    }
    (worst <= 1e-12, worst)
}

fn lyapunov_validation(cfg: &ExperimentConfig, mut out: OutDir) -> Result<RunManifest> {
    let p = &cfg.system;
    let alpha = p.simulation.alpha;
    let traj = uncontrolled_run(p)?;
    let (prob, cert) = regional_certificate(p)?;
    let phi = p.initial_function().sup_norm();
    let t = traj.times();
    let v = eval_series(&cert.weights, alpha, &traj, prob.tau_bar)?;
    let v1: Vec<f64> = traj.states.iter().map(|x| eval_v1(&cert.weights.p, x)).collect();
    let bound: Vec<f64> = t
        .iter()
        .map(|s| ml_decay(alpha, cert.gamma / cert.bounds.c2, s - traj.t0).map(|e| cert.bounds.c2 * phi * phi * e))
        .collect::<Result<_>>()?;
    let mut dv = vec![f64::NAN];
    for k in 1..traj.len() {
        dv.push(caputo_derivative_numeric(&v, traj.h, alpha, k)?);
    }
    let rate: Vec<f64> = traj.states.iter().map(|x| -cert.gamma * x.norm_squared()).collect();
    let above = (1..traj.len()).filter(|&k| dv[k] > rate[k]).count();

    let mut checks = Vec::new();
    let (ok, worst) = sandwich_check(&cert, &traj, &v, prob.tau_bar);
    checks.push(Check::new("LKF sandwich c1|x|^2 <= V <= c2 sup|x_t|^2", ok, format!("worst violation {worst:.3e}")));
    let vb = v.iter().zip(&bound).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("V below Mittag-Leffler envelope (regional surrogate)", vb <= 1e-12, format!("max(V - bound) = {vb:.3e}")));
    let lemma = verify_quadratic_lemma(&cert.weights.p, &traj, &build(p));
    checks.push(Check::new(
        "quadratic Caputo inequality (uncontrolled run)",
        lemma.holds,
        format!("max excess {:.3e} vs slack {:.3e}", lemma.max_excess, lemma.slack),
    ));

    let tab = Table::new("Lyapunov validation with the regional surrogate certificate")
        .col("t", "s", t.clone())
        .col("V", "1", v.clone())
        .col("V1", "1", v1.clone())
        .col("ml_envelope", "1", bound.clone())
        .col("caputo_V", "1/s^alpha", dv.clone())
        .col("minus_gamma_norm2", "1/s^alpha", rate.clone());
    out.table("lyapunov.csv", &tab)?;
    out.plot(
        "fig6a_lyapunov.svg",
        &Plot::new("Lyapunov functional and Mittag-Leffler envelope", "t (s)", "V")
            .log_y()
            .with(Series::line("V (full functional)", t.clone(), v))
            .with(Series::line("x'Px", t.clone(), v1))
            .with(Series::line("envelope (regional surrogate)", t.clone(), bound).dashed()),
    )?;
    out.plot(
        "fig6b_derivative.svg",
        &Plot::new("Caputo derivative of V vs -gamma |x|^2", "t (s)", "D^a V")
            .with(Series::line("D^a V (L1 scheme)", t.clone(), dv))
            .with(Series::line("-gamma |x|^2", t, rate).dashed()),
    )?;
    let metrics = json!({
        "gamma": cert.gamma,
        "c1": cert.bounds.c1,
        "c2": cert.bounds.c2,
        "derivative_nodes_above_rate": above,
        "quadratic_lemma": lemma,
        "sandwich_worst": worst,
    });
    manifest("lyapunov_validation", cfg, out, metrics, checks)
}

fn delay_characterization(cfg: &ExperimentConfig, mut out: OutDir) -> Result<RunManifest> {
    let p = &cfg.system;
    let traj = uncontrolled_run(p)?;
    let t = traj.times();
    let delayed: Vec<DVector<f64>> = t.iter().zip(&traj.delays).map(|(s, d)| traj.lookup(s - d)).collect::<Result<_>>()?;
    let lo = p.delay.tau_bar * (1.0 - p.delay.eta);
    let hi = p.delay.tau_bar * (1.0 + p.delay.eta);
    let dmin = traj.delays.iter().copied().fold(f64::INFINITY, f64::min);
    let dmax = traj.delays.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut tab = state_columns(Table::new("delay characterization").col("t", "s", t.clone()), &traj, "x");
    for i in 0..traj.dim() {
        tab = tab.col(&format!("x{}_delayed", i + 1), "1", delayed.iter().map(|x| x[i]).collect());
    }
    tab = tab.col("delay", "s", traj.delays.clone()).col("norm", "1", traj.norms());
    out.table("delay.csv", &tab)?;
    out.plot(
        "fig7a_delay.svg",
        &Plot::new("Delay within the admissible range", "t (s)", "tau (s)")
            .with(Series::line("tau(x(t))", t.clone(), traj.delays.clone()))
            .hline(lo, "tau_bar(1-eta)")
            .hline(p.delay.tau_bar, "tau_bar"),
    )?;
    out.plot(
        "fig7b_delay_vs_norm.svg",
        &Plot::new("Delay vs state norm (blue: early, red: late)", "||x||", "tau (s)").with(Series::line("time", traj.norms(), traj.delays.clone()).ramp()),
    )?;
    let mut pc = Plot::new("Current vs delayed states", "t (s)", "x_i");
    for i in 0..traj.dim() {
        pc = pc
            .with(Series::line(format!("x{}(t)", i + 1), t.clone(), component(&traj, i)))
            .with(Series::line(format!("x{}(t - tau)", i + 1), t.clone(), delayed.iter().map(|x| x[i]).collect()).dashed());
    }
    out.plot("fig7c_current_delayed.svg", &pc)?;
    out.plot(
        "fig7d_phase.svg",
        &Plot::new("x1(t) vs x1(t - tau(x(t)))", "x1(t)", "x1(t - tau)").with(Series::line("", component(&traj, 0), delayed.iter().map(|x| x[0]).collect())),
    )?;
    let checks = vec![Check::new(
        "delay within [tau_bar(1-eta), tau_bar(1+eta)]",
        dmin >= lo && dmax <= hi,
        format!("observed [{dmin:.4}, {dmax:.4}]"),
    )];
    let metrics = json!({ "delay_min": dmin, "delay_max": dmax, "delay_final": traj.delays.last(), "run": compute_metrics(&traj) });
    manifest("delay_characterization", cfg, out, metrics, checks)
}

/// Certificate report for the reported constants and for the regional
/// surrogate, with margin re-solves.
pub fn run_lmi(cfg: &ExperimentConfig, root: &Path) -> Result<RunManifest> {
    let p = &cfg.system;
    let mut out = OutDir::create(root.join("lmi"))?;
    let mut checks = Vec::new();
    let mut report = serde_json::Map::new();
    let radius = p.initial_function().sup_norm();
    for (label, prob) in [("reported", lmi_problem(p)), ("regional_surrogate", regional_lmi_problem(p, radius))] {
        let entry = match solve_lmi(&prob) {
            Ok(cert) => {
                let rc = recheck(&prob, &cert)?;
                let bigger = prob.with_tau_bar(prob.tau_bar + 0.9 * cert.delay_margin);
                let resolve = solve_lmi(&bigger);
                checks.push(Check::new(&format!("{label}: certificate re-check"), rc.passes, format!("lambda_max(Omega) = {:.3e}", rc.lambda_max_omega)));
                checks.push(Check::new(
                    &format!("{label}: feasible at tau_bar + 0.9 delay margin"),
                    resolve.is_ok(),
                    lmi_status(&resolve).to_string(),
                ));
                json!({ "problem": prob, "certificate": cert, "recheck": rc, "margin_resolve": lmi_status(&resolve) })
            }
            Err(e) => {
                checks.push(Check::new(&format!("{label}: certificate found"), false, e.to_string()));
                json!({ "problem": prob, "status": lmi_status(&Err(e)), "necessary_shift": prob.necessary_shift(), "shifted_abscissa": prob.shifted_abscissa() })
            }
        };
        report.insert(label.into(), entry);
    }
    out.json("lmi.json", &report)?;
    manifest("lmi", cfg, out, serde_json::Value::Object(report), checks)
}

/// Output root: explicit path, else `FRACSTAB_OUT`, else `./out`.
pub fn output_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("FRACSTAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert_eq!("sensitivity-alpha".parse::<Experiment>().unwrap(), Experiment::SensitivityAlpha);
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn config_sections_split() {
        let cfg = ExperimentConfig::from_toml("[delay]\ntau_bar = 0.4\n[sweep]\nalphas = [0.9]\n[audit]\nseed = 7\n").unwrap();
        assert_eq!(cfg.system.delay.tau_bar, 0.4);
        assert_eq!(cfg.sweep.alphas, vec![0.9]);
        assert_eq!(cfg.sweep.tau_bars, Sweep::default().tau_bars);
        assert_eq!(cfg.audit.seed, 7);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(ExperimentConfig::from_toml("[sweep]\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[nonsense]\n").is_err());
    }

    #[test]
    fn zero_initial_state_is_trivial() {
        let mut p = HopfieldParams::default();
        p.simulation.x0 = vec![0.0; 3];
        p.simulation.t_end = 1.0;
        let traj = uncontrolled_run(&p).unwrap();
        assert!(traj.states.iter().all(|x| x.iter().all(|v| *v == 0.0)));
        let m = compute_metrics(&traj);
        assert_eq!((m.settling_time_10pct, m.peak_control, m.control_energy, m.terminal_norm), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn comparison_ratio_is_recomputed() {
        let a = RunMetrics { settling_time_10pct: 1.0, peak_control: 1.0, control_energy: 0.5, terminal_norm: 0.001 };
        let s = RunMetrics { settling_time_10pct: f64::INFINITY, peak_control: 4.0, control_energy: 100.0, terminal_norm: 0.1 };
        let rows = comparison_rows(&a, &s);
        assert_eq!(rows[1], ("control_energy", 0.5, 100.0));
        assert_eq!(rows[1].1 / rows[1].2, 0.005);
    }
}
