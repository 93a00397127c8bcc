//! Spot-checks the structural conditions of the default cubic nonlinearity
//! and prints the exponent ladder it implies.

use fhn_attractor::config::RunConfig;
use fhn_attractor::problem::{build_ladder, check_growth_conditions, SampleBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = RunConfig::default().problem_spec()?;
    let nl = &spec.nonlinearity;
    println!(
        "p = {}, alpha1 = {}, alpha3 = {}, psi1 L1 norm = {:.4}",
        nl.p,
        nl.alpha1,
        nl.alpha3,
        nl.psi1_l1(1)
    );
    let report = check_growth_conditions(nl, SampleBox::default(), 201);
    for e in &report.entries {
        println!(
            "{:<28} margin {:>12.4e} at (x, s) = ({:.2}, {:.2}) {}{}",
            e.name,
            e.margin,
            e.worst_x,
            e.worst_s,
            if e.passed { "ok" } else { "VIOLATED" },
            if e.informational {
                " (informational)"
            } else {
                ""
            }
        );
    }
    println!("all conditions hold: {}", report.all_passed());

    let ladder = build_ladder(&spec)?;
    println!("{ladder:?}");
    match spec.equilibrium_condition() {
        Ok(()) => println!(
            "delta = {} > alpha3 = {}: a single random equilibrium is expected",
            spec.delta(),
            nl.alpha3
        ),
        Err(e) => println!("{e}"),
    }
    Ok(())
}
