//! Adaptive law against a boundary-layer sliding-mode controller.

use fracstab::experiments::{adaptive_run, comparison_rows, smc_run};
use fracstab::hopfield::HopfieldParams;
use fracstab::report::compute_metrics;

fn main() -> fracstab::Result<()> {
    let p = HopfieldParams::default();
    let (ad, design) = adaptive_run(&p)?;
    let sm = smc_run(&p, &design)?;
    let (a, s) = (compute_metrics(&ad), compute_metrics(&sm));

    println!("{:<24} {:>12} {:>12} {:>8}", "metric", "adaptive", "smc", "ratio");
    for (name, x, y) in comparison_rows(&a, &s) {
        let ratio = if y.is_finite() { format!("{:.4}", x / y) } else { "n/a".into() };
        println!("{name:<24} {x:>12.4e} {y:>12.4e} {ratio:>8}");
    }
    Ok(())
}
