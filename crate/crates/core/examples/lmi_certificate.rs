//! Stability LMI for the stated constants and for the regional surrogate.

use fracstab::hopfield::{lmi_problem, regional_lmi_problem, HopfieldParams};
use fracstab::stability::{recheck, solve_lmi};

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();

    let stated = lmi_problem(&p);
    match solve_lmi(&stated) {
        Ok(c) => println!("stated constants: feasible, gamma {:.4}", c.gamma),
        Err(e) => println!("stated constants: {e}"),
    }
    println!("necessary shift {:.4}, shifted abscissa {:.4}", stated.necessary_shift(), stated.shifted_abscissa());

    let radius = p.initial_function().sup_norm();
    let prob = regional_lmi_problem(&p, radius);
    let cert = solve_lmi(&prob)?;
    let rc = recheck(&prob, &cert)?;
    println!("regional surrogate, radius {radius}: L_f {:.4}, L_g {:.4}", prob.constants.l_f, prob.constants.l_g);
    println!("  gamma {:.4}, delta {:.4e}, delay margin {:.4}", cert.gamma, cert.delta, cert.delay_margin);
    println!("  recheck lambda_max(Omega) {:.3e}, step-4 margin {:.3e}", rc.lambda_max_omega, rc.step4_margin);
    println!("  c1 {:.4e}, c2 {:.4e}", cert.bounds.c1, cert.bounds.c2);
    Ok(())
}
