//! Adaptive closed loop: design conditions, then the run itself.

use fracstab::experiments::{adaptive_run, filter_audit, quadratic_decay};
use fracstab::hopfield::HopfieldParams;
use fracstab::report::compute_metrics;

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();
    let (traj, d) = adaptive_run(&p)?;
    let c = &d.conditions;
    println!("C1 lambda_max {:.3e} ({})", c.c1_lambda_max, c.c1);
    println!("C2 T_f {} < {:.4} ({})", p.controller.t_f, c.t_f_limit, c.c2);
    println!("C3 sigma {} < {:.4e} ({})", p.controller.sigma_f, c.sigma_limit, c.c3);
    println!("K =\n{:.4}", d.controller.cfg.k);

    let m = compute_metrics(&traj);
    println!("settling {:.2} s, peak |u| {:.4}, energy {:.4}, terminal {:.3e}",
        m.settling_time_10pct, m.peak_control, m.control_energy, m.terminal_norm);

    let (v, monotone, decades) = quadratic_decay(&traj, &d.controller.cfg.p);
    println!("x'Px from {:.3e} down {decades:.1} decades, monotone {monotone}", v[0]);

    let (delay, state, _) = filter_audit(&p, &traj, &d)?;
    for chk in [delay, state] {
        println!("{}: {}", chk.name, chk.detail);
    }
    Ok(())
}
