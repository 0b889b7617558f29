//! E_a(-t^a) on a log grid next to its leading asymptotic term.

use fracstab::specfun::{ml_asymptotic, mittag_leffler, ml_decay, MlParams};

fn main() -> fracstab::Result<()> {
    let ts = [0.1, 1.0, 10.0, 100.0];
    println!("{:>6} {:>8} {:>14} {:>14}", "alpha", "t", "E", "asymptotic");
    for alpha in [0.5, 0.7, 0.85, 0.95] {
        for t in ts {
            let e = ml_decay(alpha, 1.0, t)?;
            println!("{alpha:>6} {t:>8} {e:>14.6e} {:>14.6e}", ml_asymptotic(alpha, t)?);
        }
    }

    // which evaluator answered and how sure it is
    let r = mittag_leffler(MlParams::classic(0.7)?, -30.0)?;
    println!("E_0.7(-30) = {:.12e} via {:?}, est error {:.1e}", r.value, r.method, r.est_error);
    Ok(())
}
