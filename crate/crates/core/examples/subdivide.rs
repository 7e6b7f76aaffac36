//! Bisects a synthetic town's parcels into minimum cells and checks that each
//! parent's area is conserved.

use std::collections::BTreeMap;

use parcel_ca::subdivision::{subdivide, SubdivisionConfig};
use parcel_ca::synth::{self, TownSpec};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec {
        merge_fraction: 0.4,
        ..TownSpec::default()
    });
    let out = subdivide(&town.t0, &SubdivisionConfig::default())?;
    println!(
        "{} parcels -> {} cells, target area {:.0} m²",
        town.t0.len(),
        out.landscape.len(),
        out.target_area
    );

    let mut children: BTreeMap<&str, f64> = BTreeMap::new();
    for c in out.landscape.parcels() {
        *children.entry(c.parent_id().unwrap()).or_default() += c.area();
    }
    let worst = town
        .t0
        .parcels()
        .iter()
        .map(|p| (children[p.id()] - p.area()).abs() / p.area())
        .fold(0.0, f64::max);
    let largest = out.landscape.areas().into_iter().fold(0.0, f64::max);
    println!("largest cell {largest:.0} m², worst relative area error {worst:.1e}");

    for c in out
        .landscape
        .parcels()
        .iter()
        .filter(|c| c.id().contains('/'))
        .take(4)
    {
        println!(
            "  {} from {}: {:.0} m²",
            c.id(),
            c.parent_id().unwrap(),
            c.area()
        );
    }
    Ok(())
}
