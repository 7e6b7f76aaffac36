//! Trains a random forest on a synthetic town and simulates growth from t0
//! towards the t1 category areas with the forest reserve protected.

use parcel_ca::assess::{assess, label_overlay, WeightMode};
use parcel_ca::demand::Demand;
use parcel_ca::engine::{replay, simulate, RestrictedZone, Scenario, SimConfig};
use parcel_ca::models::{build_training_set, train_rf, ForestHyper};
use parcel_ca::subdivision::{subdivide, SubdivisionConfig};
use parcel_ca::synth::{self, TownSpec};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec::default());
    let cells = subdivide(&town.t0, &SubdivisionConfig::default())?.landscape;
    let features = town.features(&cells, 30.0)?;
    let ts = build_training_set(&features, &cells, &town.t1, 0.7, 1)?;
    let model = train_rf(&ts, &ForestHyper::default())?;
    println!(
        "{} cells, forest holdout accuracy {:.3}",
        cells.len(),
        model.holdout_accuracy.unwrap_or(f64::NAN)
    );

    // Demand: the category areas actually observed at t1.
    let actual = cells.with_assignment(&label_overlay(&cells, &town.t1)?)?;
    let demand = Demand {
        categories: cells.categories().names(),
        targets: actual.category_areas(),
    };
    let constraints = Scenario::Eco.constraints(
        vec![RestrictedZone::new(town.reserve.clone())],
        vec![synth::CONSTRUCTION],
        None,
    )?;
    // Combined probabilities are not renormalized, so the threshold is set
    // against their typical scale on this town.
    let cfg = SimConfig {
        seed: 3,
        initial_threshold: 0.3,
        ..Default::default()
    };
    let out = simulate(&cells, &model, &features, &cfg, &demand, &constraints)?;
    for r in &out.trace.records {
        println!(
            "iteration {}: threshold {:.3}, quota {:>7.0} m², converted {:>7.0} m² in {} cells",
            r.iteration,
            r.threshold,
            r.quota,
            r.converted_area,
            r.conversions.len()
        );
    }
    println!("demand met: {}", out.converged());
    assert_eq!(replay(&cells, &out.trace)?, out.landscape);

    let r = assess(&cells, &out.landscape, &actual, WeightMode::Area)?;
    println!("FoM {:.3}  PA {:.3}  UA {:.3}", r.fom, r.pa, r.ua);
    Ok(())
}
