//! Singular-kernel functional along the open-loop run, against its sandwich
//! bounds and the Mittag-Leffler envelope.

use fracstab::experiments::{regional_certificate, sandwich_check, uncontrolled_run};
use fracstab::hopfield::{build, HopfieldParams};
use fracstab::lkf::{eval_series, verify_quadratic_lemma};

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();
    let alpha = p.simulation.alpha;
    let tau_bar = p.delay.tau_bar;
    let traj = uncontrolled_run(&p)?;
    let (_, cert) = regional_certificate(&p)?;
    let v = eval_series(&cert.weights, alpha, &traj, tau_bar)?;

    let (ok, worst) = sandwich_check(&cert, &traj, &v, tau_bar);
    println!("sandwich holds {ok}, worst violation {worst:.3e}");

    let phi = p.initial_function().sup_norm();
    let v0 = cert.bounds.c2 * phi * phi;
    let stride = traj.len() / 8;
    println!("{:>6} {:>12} {:>12}", "t", "V", "envelope");
    for k in (0..traj.len()).step_by(stride) {
        let env = v0 * fracstab::specfun::ml_decay(alpha, cert.gamma / cert.bounds.c2, traj.time(k))?;
        println!("{:>6.2} {:>12.4e} {:>12.4e}", traj.time(k), v[k], env);
    }

    let q = verify_quadratic_lemma(&cert.weights.p, &traj, &build(&p));
    println!("quadratic inequality: max excess {:.3e}, slack {:.3e}, holds {}", q.max_excess, q.slack, q.holds);
    Ok(())
}
