//! Writes a synthetic town to disk, describes the whole workflow in one TOML
//! config, and runs it through the command-line entry point. Equivalent to
//! `parcel-ca run --config <dir>/run.toml`.

use parcel_ca::synth::{self, TownSpec};

const CONFIG: &str = r#"
seed = 1
categories = ["farmland", "construction", "water", "forest"]

[inputs]
parcels = "t0.geojson"
actual = "t1.geojson"

[features]
cell_size = 30.0
grids = [
  { name = "road", kind = "distance", path = "roads.geojson" },
  { name = "centre", kind = "distance", path = "centres.geojson" },
  { name = "river", kind = "distance", path = "river.geojson" },
  { name = "road_density", kind = "kde", path = "roads.geojson" },
]

[model]
kind = "rf"

[simulation]
neighborhood_radius = 500.0
initial_threshold = 0.3

[scenario]
preset = "eco"
zones = ["reserve.geojson"]
development = ["construction"]

[demand.markov]
earlier = "t_prev.geojson"
period_years = 3.0
base_year = 2015.0
target_year = 2018.0

[sweep]
radii = [200.0, 400.0, 600.0, 800.0]

[output]
dir = "out"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("parcel-ca-cli-workflow");
    synth::town(&TownSpec::default()).write(&dir)?;
    let config = dir.join("run.toml");
    std::fs::write(&config, CONFIG)?;

    let code = parcel_ca::cli::run_command([
        "parcel-ca",
        "--quiet",
        "run",
        "--config",
        config.to_str().unwrap(),
    ]);
    println!("exit code {code}");
    let out = dir.join("out");
    let mut names: Vec<_> = std::fs::read_dir(&out)?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()?;
    names.sort();
    for n in &names {
        println!("  {}", out.join(n).display());
    }
    let accuracy = std::fs::read_to_string(out.join("accuracy.json"))?;
    println!("{accuracy}");
    print!("{}", std::fs::read_to_string(out.join("sweep.csv"))?);
    Ok(())
}
