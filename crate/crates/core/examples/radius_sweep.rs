//! Calibrates the neighborhood radius: one simulation per radius, each scored
//! by figure of merit against the observed t1 map.

use parcel_ca::assess::label_overlay;
use parcel_ca::demand::Demand;
use parcel_ca::engine::{sweep_radius, ScenarioConstraints, SimConfig};
use parcel_ca::io;
use parcel_ca::models::{build_training_set, train_rf, ForestHyper};
use parcel_ca::subdivision::{subdivide, SubdivisionConfig};
use parcel_ca::synth::{self, TownSpec};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec::default());
    let cells = subdivide(&town.t0, &SubdivisionConfig::default())?.landscape;
    let features = town.features(&cells, 30.0)?;
    let model = train_rf(
        &build_training_set(&features, &cells, &town.t1, 0.7, 1)?,
        &ForestHyper::default(),
    )?;
    let actual = cells.with_assignment(&label_overlay(&cells, &town.t1)?)?;
    let demand = Demand {
        categories: cells.categories().names(),
        targets: actual.category_areas(),
    };
    let cfg = SimConfig {
        seed: 9,
        initial_threshold: 0.3,
        ..SimConfig::default()
    };
    let radii: Vec<f64> = (1..=10).map(|i| f64::from(i) * 100.0).collect();
    let table = sweep_radius(
        &cells,
        &model,
        &features,
        &cfg,
        &demand,
        &ScenarioConstraints::default(),
        &actual,
        &radii,
    )?;
    print!("{}", io::sweep_to_csv(&table));
    println!("best radius: {:?}", table.best_radius);
    Ok(())
}
