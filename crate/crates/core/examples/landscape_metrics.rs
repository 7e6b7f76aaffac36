//! Checks a map's topology, merges parcels into patches, and compares the
//! landscape indices of two dates.

use parcel_ca::synth::{self, TownSpec};
use parcel_ca::vecli::{
    landscape_report, li_similarity, merge_patches, topology_check, FilterRule,
};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec::default());
    let topo = topology_check(&town.t0, 0.01);
    println!(
        "topology clean: {} ({} overlaps, {} gaps)",
        topo.is_clean(),
        topo.overlaps.len(),
        topo.gaps.len()
    );

    let patches = merge_patches(&town.t0, 0.01);
    let biggest = patches
        .iter()
        .max_by(|a, b| a.area.total_cmp(&b.area))
        .unwrap();
    println!(
        "{} parcels form {} patches; largest is {} with {} parcels",
        town.t0.len(),
        patches.len(),
        town.t0.categories().name(biggest.category),
        biggest.members.len()
    );

    for filter in [FilterRule::None, FilterRule::BelowKSigma { k: 0.5 }] {
        let t0 = landscape_report(&town.t0, 0.01, filter)?;
        let t1 = landscape_report(&town.t1, 0.01, filter)?;
        println!("filter {filter:?}");
        for (label, r) in [("t0", &t0), ("t1", &t1)] {
            println!(
                "  {label}: NP {:>4}  LPI {:.3}  ENN {:>7.2}  PARA {:.4}",
                r.np,
                r.lpi,
                r.enn.unwrap_or(f64::NAN),
                r.para
            );
        }
        let s = li_similarity(&t0, &t1);
        println!("  similarity of t0 to t1: {:.3} {:?}", s.alpha, s.deltas);
    }
    Ok(())
}
