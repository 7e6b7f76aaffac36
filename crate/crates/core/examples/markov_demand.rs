//! Projects category demand with a Markov chain estimated from two dates,
//! with and without a ban on farmland becoming construction.

use parcel_ca::demand::{
    constrain, crosstab, horizon_steps, project, to_conditional, to_demand, Redistribution,
};
use parcel_ca::synth::{self, TownSpec, CONSTRUCTION, FARMLAND};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec::default());
    let ct = crosstab(&town.t_prev, &town.t0, &town.t0, 3.0)?;
    let tm = to_conditional(&ct);
    println!("transition matrix over {} years:", ct.period_years);
    for (name, row) in ct.categories.iter().zip(&tm.rows) {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
        println!("  {name:>12}: {}", cells.join(" "));
    }

    let total = ct.total();
    let shares: Vec<f64> = ct.end_areas().iter().map(|a| a / total).collect();
    let steps = horizon_steps(2018.0, 2024.0, ct.period_years)?;
    let free = to_demand(ct.categories.clone(), &project(&shares, &tm, steps)?, total);
    let banned = constrain(&tm, &[(FARMLAND, CONSTRUCTION)], Redistribution::Persist)?;
    let protected = to_demand(
        ct.categories.clone(),
        &project(&shares, &banned, steps)?,
        total,
    );

    println!("demand after {steps} steps (m²):");
    for (c, name) in ct.categories.iter().enumerate() {
        println!(
            "  {name:>12}: {:>10.0} unrestricted, {:>10.0} farmland protected",
            free.targets[c], protected.targets[c]
        );
    }
    Ok(())
}
