//! Fixtures shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use parcel_ca::synth::{self, Town, TownSpec};

/// A small town: 16 x 16 parcels.
pub fn small_town() -> Town {
    synth::town(&TownSpec {
        nx: 16,
        ny: 16,
        ..TownSpec::default()
    })
}

/// Writes the town's files into `dir` plus a `run.toml` that sends results to
/// `out`. Returns the config path.
pub fn write_run_fixture(town: &Town, dir: &Path, out: &Path) -> PathBuf {
    town.write(dir).unwrap();
    let config = format!(
        r#"
seed = 11
categories = ["farmland", "construction", "water", "forest"]

[inputs]
parcels = "t0.geojson"
actual = "t1.geojson"

[features]
cell_size = 40.0
grids = [
  {{ name = "road", kind = "distance", path = "roads.geojson" }},
  {{ name = "centre", kind = "distance", path = "centres.geojson" }},
  {{ name = "river", kind = "distance", path = "river.geojson" }},
  {{ name = "road_density", kind = "kde", path = "roads.geojson" }},
]

[model]
kind = "rf"
rf = {{ trees = 30 }}

[simulation]
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
radii = [200.0, 600.0]

[output]
dir = "{}"
"#,
        out.display()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    path
}

/// Every regular file under `dir`, relative path and contents, sorted by path.
pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
