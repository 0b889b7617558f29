//! State-dependent delay along the open-loop run.

use fracstab::experiments::uncontrolled_run;
use fracstab::hopfield::HopfieldParams;

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();
    let traj = uncontrolled_run(&p)?;
    let (lo, hi) = traj.delays.iter().fold((f64::MAX, f64::MIN), |(a, b), &d| (a.min(d), b.max(d)));
    let d = &p.delay;
    println!("tau in [{lo:.4}, {hi:.4}], admissible [{:.4}, {:.4}]", d.tau_bar * (1.0 - d.eta), d.tau_bar * (1.0 + d.eta));

    let norms = traj.norms();
    println!("{:>6} {:>10} {:>8}", "t", "|x|", "tau");
    for k in (0..traj.len()).step_by(traj.len() / 10) {
        println!("{:>6.2} {:>10.4e} {:>8.4}", traj.time(k), norms[k], traj.delays[k]);
    }
    Ok(())
}
