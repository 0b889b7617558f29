//! Open-loop network from a constant history, with the regional bound.

use fracstab::experiments::{bound_series, regional_certificate, uncontrolled_run};
use fracstab::fde::holder_constant;
use fracstab::hopfield::{build, HopfieldParams};
use fracstab::report::compute_metrics;

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();
    let traj = uncontrolled_run(&p)?;
    let (_, cert) = regional_certificate(&p)?;
    let phi = p.initial_function().sup_norm();
    let bound = bound_series(&cert, &traj, phi, p.simulation.alpha)?;

    println!("{:>6} {:>10} {:>10} {:>8}", "t", "|x|", "bound", "tau");
    let norms = traj.norms();
    let stride = traj.len() / 10;
    for k in (0..traj.len()).step_by(stride) {
        println!("{:>6.2} {:>10.4e} {:>10.4e} {:>8.4}", traj.time(k), norms[k], bound[k], traj.delays[k]);
    }

    let m = compute_metrics(&traj);
    println!("terminal |x| {:.4e}, gamma {:.4}", m.terminal_norm, cert.gamma);
    let h = holder_constant(&build(&p), &traj);
    println!("holder ratio {:.4} <= {:.4}: {}", h.max_ratio, h.constant, h.holds);
    Ok(())
}
