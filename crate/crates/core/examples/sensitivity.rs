//! Closed-loop settling time across alpha and the nominal delay.

use fracstab::experiments::{sweep, SweepKind};
use fracstab::hopfield::HopfieldParams;

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();
    for (kind, values) in [
        (SweepKind::Alpha, vec![0.7, 0.8, 0.9, 0.95, 0.99]),
        (SweepKind::TauBar, vec![0.0, 0.1, 0.3, 0.5, 0.7]),
    ] {
        println!("{kind:?}");
        for (pt, _) in sweep(&p, kind, &values)? {
            let m = pt.metrics;
            println!("  {:>5} settling {:>5.2} s, peak |u| {:.4}, conditions {}",
                pt.value, m.settling_time_10pct, m.peak_control, pt.conditions_hold);
        }
    }
    Ok(())
}
