//! Builds distance and kernel density grids from point sources, writes one as
//! an ESRI ASCII grid, and samples all of them into a per-cell feature table.

use parcel_ca::features::{
    assemble, distance_grid, kde_grid, normalize, scott_bandwidth, GridSpec, SampleMode,
};
use parcel_ca::io;
use parcel_ca::synth::{self, TownSpec};

fn main() -> parcel_ca::Result<()> {
    let town = synth::town(&TownSpec::default());
    let spec = GridSpec::covering(town.extent(), 30.0)?;
    println!(
        "grid {} x {} at {} m",
        spec.ncols, spec.nrows, spec.cell_size
    );

    let bw = scott_bandwidth(&town.roads).expect("enough road points");
    let grids = vec![
        (
            "road".to_string(),
            normalize(&distance_grid(&town.roads, spec)?)?,
        ),
        (
            "centre".to_string(),
            normalize(&distance_grid(&town.centres, spec)?)?,
        ),
        (
            "road_density".to_string(),
            normalize(&kde_grid(&town.roads, spec, bw)?)?,
        ),
    ];
    println!("road density bandwidth {bw:.1} m (Scott's rule)");

    let dir = std::env::temp_dir().join("parcel-ca-feature-grids");
    let path = dir.join("road.asc");
    io::write_grid(&grids[0].1, &path)?;
    assert_eq!(io::read_grid(&path)?, grids[0].1);
    println!("wrote and re-read {}", path.display());

    for mode in [SampleMode::Centroid, SampleMode::ArealMean] {
        let m = assemble(&town.t0, &grids, mode)?;
        let means: Vec<String> = (0..m.ncols())
            .map(|j| {
                let mean = m.rows().map(|r| r[j]).sum::<f64>() / m.nrows() as f64;
                format!("{} {mean:.3}", m.names[j])
            })
            .collect();
        println!(
            "{mode:?}: {} rows; column means {}",
            m.nrows(),
            means.join(", ")
        );
    }
    Ok(())
}
