//! Acceptance criteria, one line each. Runs without the test harness so the
//! report is always printed; exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;

use parcel_ca::assess::{figure_of_merit, ConfusionAreas, WeightMode};
use parcel_ca::demand::{
    constrain, project, to_conditional, CrossTab, Redistribution, TransitionMatrix,
};
use parcel_ca::engine::{
    neighborhood_effect, random_factor, random_factor_from_y, replay, roulette_select, simulate,
    Neighborhood, RestrictedZone, Scenario, SimConfig,
};
use parcel_ca::features::FeatureMatrix;
use parcel_ca::geom::intersection_area;
use parcel_ca::geom::{Point, Polygon};
use parcel_ca::models::{
    build_training_set, predict_po, train_lr, train_mlp, train_rf, ForestHyper, LogisticHyper,
    MlpHyper, Network, TrainingSet,
};
use parcel_ca::parcel::{CategorySet, Landscape, Parcel};
use parcel_ca::rng::stream;
use parcel_ca::subdivision::{subdivide, SubdivisionConfig};
use parcel_ca::synth::{self, TownSpec};
use parcel_ca::vecli::{landscape_report, li_similarity, FilterRule, LandscapeReport};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("took {t:?}, limit {limit:?}"));
    }
    Ok(t)
}

// 1. LI similarity from reference index columns of three models at two dates.
fn li_similarity_reproduction() -> Check {
    let start = Instant::now();
    let actual_2018 = LandscapeReport::from_indices(13502, 0.419, Some(52.532), 0.112);
    let actual_2015 = LandscapeReport::from_indices(12432, 0.430, Some(52.965), 0.103);
    let lr = LandscapeReport::from_indices(10874, 0.418, Some(45.111), 0.086);
    let nn_2018 = LandscapeReport::from_indices(11161, 0.426, Some(47.081), 0.085);
    let rf_2018 = LandscapeReport::from_indices(11023, 0.418, Some(48.029), 0.085);
    let nn_2015 = LandscapeReport::from_indices(11159, 0.424, Some(47.197), 0.085);
    let rf_2015 = LandscapeReport::from_indices(11038, 0.423, Some(47.850), 0.085);
    let rows = [
        ("LR 2018", &lr, &actual_2018, 0.859, 0.002),
        ("NN 2018", &nn_2018, &actual_2018, 0.869, 0.002),
        ("RF 2018", &rf_2018, &actual_2018, 0.873, 0.002),
        ("LR 2015", &lr, &actual_2015, 0.894, 0.010),
        ("NN 2015", &nn_2015, &actual_2015, 0.905, 0.010),
        ("RF 2015", &rf_2015, &actual_2015, 0.906, 0.010),
    ];
    let mut got = Vec::new();
    for (name, sim, act, want, tol) in rows {
        let a = li_similarity(sim, act).alpha;
        ensure!(
            (a - want).abs() <= tol,
            "{name}: {a:.4} vs {want} (tol {tol})"
        );
        got.push(format!("{a:.3}"));
    }
    let t = within_time(start, Duration::from_secs(1))?;
    Ok(format!("alphas {} in {t:?}", got.join(" ")))
}

// 2. Landscape indices against brute force on random grids.

struct Grid {
    xs: Vec<i64>,
    ys: Vec<i64>,
    cat: Vec<usize>,
}

impl Grid {
    fn nx(&self) -> usize {
        self.xs.len() - 1
    }
    fn ny(&self) -> usize {
        self.ys.len() - 1
    }
    fn rect(&self, i: usize, j: usize) -> (i64, i64, i64, i64) {
        (self.xs[i], self.ys[j], self.xs[i + 1], self.ys[j + 1])
    }
}

fn random_grid(seed: u64) -> Grid {
    let mut r = stream(seed, &[20, 1]);
    let nx = r.gen_range(2..=20);
    let ny = r.gen_range(2..=20);
    let k = r.gen_range(1..=4);
    let mut edges = |n: usize| {
        let mut v = vec![0i64];
        for _ in 0..n {
            let w = 10 * r.gen_range(1..=4);
            v.push(v.last().unwrap() + w);
        }
        v
    };
    let xs = edges(nx);
    let ys = edges(ny);
    // Copy a neighbor's category now and then so patches span several cells.
    let mut cat = vec![0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let u: f64 = r.gen();
            cat[j * nx + i] = if u < 0.35 && i > 0 {
                cat[j * nx + i - 1]
            } else if u < 0.6 && j > 0 {
                cat[(j - 1) * nx + i]
            } else {
                r.gen_range(0..k)
            };
        }
    }
    Grid { xs, ys, cat }
}

fn grid_landscape(g: &Grid) -> Landscape {
    let mut parcels = Vec::new();
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let (x0, y0, x1, y1) = g.rect(i, j);
            let poly = Polygon::rect(x0 as f64, y0 as f64, x1 as f64, y1 as f64).unwrap();
            parcels.push(Parcel::new(
                format!("g{:03}", j * g.nx() + i),
                poly,
                g.cat[j * g.nx() + i],
            ));
        }
    }
    Landscape::new(parcels, CategorySet::new(["a", "b", "c", "d"]).unwrap()).unwrap()
}

struct Brute {
    np: usize,
    lpi: f64,
    enn: Option<f64>,
    para: f64,
}

/// Flood fill over cells sharing a full edge, perimeter from exposed edges,
/// ENN from all pairs.
fn brute_force(g: &Grid) -> Brute {
    let (nx, ny) = (g.nx(), g.ny());
    let total = ((g.xs[nx] - g.xs[0]) * (g.ys[ny] - g.ys[0])) as f64;
    let mut label = vec![usize::MAX; nx * ny];
    let mut patches: Vec<(usize, f64, f64, Point)> = Vec::new();
    for s in 0..nx * ny {
        if label[s] != usize::MAX {
            continue;
        }
        let id = patches.len();
        let c = g.cat[s];
        let mut queue = VecDeque::from([s]);
        label[s] = id;
        let mut members = Vec::new();
        while let Some(n) = queue.pop_front() {
            members.push(n);
            let (i, j) = (n % nx, n / nx);
            let mut nbrs = Vec::new();
            if i > 0 {
                nbrs.push(n - 1);
            }
            if i + 1 < nx {
                nbrs.push(n + 1);
            }
            if j > 0 {
                nbrs.push(n - nx);
            }
            if j + 1 < ny {
                nbrs.push(n + nx);
            }
            for m in nbrs {
                if label[m] == usize::MAX && g.cat[m] == c {
                    label[m] = id;
                    queue.push_back(m);
                }
            }
        }
        let mut area = 0i64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &n in &members {
            let (x0, y0, x1, y1) = g.rect(n % nx, n / nx);
            let a = (x1 - x0) * (y1 - y0);
            area += a;
            sx += a as f64 * (x0 + x1) as f64 / 2.0;
            sy += a as f64 * (y0 + y1) as f64 / 2.0;
        }
        patches.push((
            c,
            area as f64,
            0.0,
            Point::new(sx / area as f64, sy / area as f64),
        ));
    }
    // Exposed edges: each cell side whose neighbor is outside the patch.
    for n in 0..nx * ny {
        let (i, j) = (n % nx, n / nx);
        let (x0, y0, x1, y1) = g.rect(i, j);
        let (w, h) = ((x1 - x0) as f64, (y1 - y0) as f64);
        let other = |m: Option<usize>| m.is_none_or(|m| label[m] != label[n]);
        let mut p = 0.0;
        if other((i > 0).then(|| n - 1)) {
            p += h;
        }
        if other((i + 1 < nx).then(|| n + 1)) {
            p += h;
        }
        if other((j > 0).then(|| n - nx)) {
            p += w;
        }
        if other((j + 1 < ny).then(|| n + nx)) {
            p += w;
        }
        patches[label[n]].2 += p;
    }
    let np = patches.len();
    let lpi = patches.iter().map(|p| p.1).fold(0.0, f64::max) / total;
    let para = patches.iter().map(|p| p.2 / p.1).sum::<f64>() / np as f64;
    let (mut sum, mut n) = (0.0, 0usize);
    for (a, pa) in patches.iter().enumerate() {
        let nearest = patches
            .iter()
            .enumerate()
            .filter(|(b, pb)| *b != a && pb.0 == pa.0)
            .map(|(_, pb)| pa.3.distance(pb.3))
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            sum += nearest;
            n += 1;
        }
    }
    Brute {
        np,
        lpi,
        enn: (n > 0).then(|| sum / n as f64),
        para,
    }
}

fn vecli_oracle() -> Check {
    let start = Instant::now();
    let mut max_cells = 0;
    for seed in 0..20 {
        let g = random_grid(seed);
        max_cells = max_cells.max(g.cat.len());
        let r = landscape_report(&grid_landscape(&g), 0.01, FilterRule::None)
            .map_err(|e| e.to_string())?;
        let b = brute_force(&g);
        ensure!(r.np == b.np, "grid {seed}: NP {} vs {}", r.np, b.np);
        ensure!(r.lpi == b.lpi, "grid {seed}: LPI {} vs {}", r.lpi, b.lpi);
        ensure!(
            (r.para - b.para).abs() <= 1e-12 * b.para,
            "grid {seed}: PARA {} vs {}",
            r.para,
            b.para
        );
        match (r.enn, b.enn) {
            (Some(x), Some(y)) => ensure!((x - y).abs() <= 1e-9, "grid {seed}: ENN {x} vs {y}"),
            (None, None) => {}
            (x, y) => return Err(format!("grid {seed}: ENN {x:?} vs {y:?}")),
        }
    }
    let t = within_time(start, Duration::from_secs(10))?;
    Ok(format!("20 grids up to {max_cells} cells agree in {t:?}"))
}

// 3. Random factor and accuracy identities.
fn formula_identities() -> Check {
    for a in 1..=10 {
        let a = f64::from(a);
        ensure!(
            random_factor_from_y(1.0, a) == 1.0,
            "RA(1) != 1 at alpha {a}"
        );
        let v = random_factor_from_y((-1f64).exp(), a);
        ensure!((v - 2.0).abs() < 1e-12, "RA(1/e) = {v} at alpha {a}");
    }
    let mut r = stream(3, &[1]);
    let n = 1_000_000;
    let mean = (0..n)
        .map(|_| random_factor(&mut r, 1.0) - 1.0)
        .sum::<f64>()
        / n as f64;
    ensure!((mean - 1.0).abs() <= 0.02, "mean RA-1 = {mean}");
    let rep = figure_of_merit(
        ConfusionAreas {
            a: 30.0,
            b: 20.0,
            c: 10.0,
            d: 40.0,
        },
        WeightMode::Area,
    );
    ensure!(rep.fom == 0.2, "FoM {}", rep.fom);
    ensure!(rep.pa == 1.0 / 3.0, "PA {}", rep.pa);
    ensure!(rep.ua == 2.0 / 7.0, "UA {}", rep.ua);
    Ok(format!(
        "RA identities for alpha 1..10, mean RA-1 {mean:.4}, FoM/PA/UA exact"
    ))
}

// 4. Neighborhood effect.
fn omega_properties() -> Check {
    let cats = CategorySet::new(["a", "b"]).unwrap();
    let sq = |x: f64, c| {
        Parcel::new(
            format!("p{x}"),
            Polygon::rect(x, 0.0, x + 10.0, 10.0).unwrap(),
            c,
        )
    };
    let pair = Landscape::new(vec![sq(0.0, 0), sq(100.0, 0), sq(200.0, 1)], cats.clone()).unwrap();
    let e = neighborhood_effect(0, &pair, &pair.spatial_index(), 200.0, 100.0);
    ensure!(
        (e[0] - 0.7311).abs() < 1e-4 && (e[1] - 0.2689).abs() < 1e-4,
        "two-neighbor effect {e:?}"
    );

    let lone = Landscape::new(vec![sq(0.0, 0)], cats).unwrap();
    let town = synth::town(&TownSpec::default());
    let fixtures = [
        (&pair, 200.0, 100.0),
        (&lone, 50.0, 50.0),
        (&town.t0, 300.0, 300.0),
        (&town.t1, 800.0, 250.0),
    ];
    let mut cells = 0;
    for (ls, radius, decay) in fixtures {
        let nb = Neighborhood::new(ls, radius, decay);
        let state = ls.category_of();
        for i in 0..ls.len() {
            let w = nb.effect(i, &state);
            ensure!(
                w.iter().all(|&v| v >= 0.0),
                "negative weight at cell {i}: {w:?}"
            );
            let s: f64 = w.iter().sum();
            ensure!((s - 1.0).abs() <= 1e-9, "cell {i} sums to {s}");
            cells += 1;
        }
    }
    Ok(format!(
        "({:.4}, {:.4}); simplex on {cells} cells",
        e[0], e[1]
    ))
}

// 5. Markov demand.
fn markov_suite() -> Check {
    let pct = [
        [10.14, 0.72, 0.34],
        [0.12, 37.58, 3.44],
        [0.12, 1.38, 46.16],
    ];
    let ct = CrossTab {
        categories: vec!["unused".into(), "farmland".into(), "construction".into()],
        areas: pct
            .iter()
            .map(|r| r.iter().map(|p| p / 100.0 * 806.13e6).collect())
            .collect(),
        period_years: 6.0,
    };
    let tm = to_conditional(&ct);
    for (i, row) in tm.rows.iter().enumerate() {
        let s: f64 = row.iter().sum();
        ensure!((s - 1.0).abs() <= 1e-9, "row {i} sums to {s}");
    }
    let c = constrain(&tm, &[(1, 2)], Redistribution::Persist).map_err(|e| e.to_string())?;
    let want = [0.0029, 0.9971, 0.0];
    ensure!(
        c.rows[1]
            .iter()
            .zip(want)
            .all(|(g, w)| (g - w).abs() <= 1e-3),
        "constrained farmland row {:?}",
        c.rows[1]
    );

    let mut r = stream(5, &[1]);
    for m in 0..100 {
        let k = r.gen_range(2..=6);
        let mut unit = |k: usize| {
            let v: Vec<f64> = (0..k).map(|_| r.gen::<f64>()).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let rows: Vec<Vec<f64>> = (0..k).map(|_| unit(k)).collect();
        let tm = TransitionMatrix::new(rows).map_err(|e| format!("matrix {m}: {e}"))?;
        let mut shares = unit(k);
        // Renormalize exactly so the input passes the sum check.
        let s: f64 = shares.iter().sum();
        shares.iter_mut().for_each(|x| *x /= s);
        for steps in 1..=10 {
            let v = project(&shares, &tm, steps)
                .map_err(|e| format!("matrix {m} step {steps}: {e}"))?;
            let s: f64 = v.iter().sum();
            ensure!(
                v.iter().all(|&x| x >= 0.0) && (s - 1.0).abs() <= 1e-9,
                "matrix {m} step {steps}: {v:?}"
            );
        }
    }
    Ok(format!(
        "rows sum to 1, farmland row [{:.4}, {:.4}, {}], 100 x 10 projections on the simplex",
        c.rows[1][0], c.rows[1][1], c.rows[1][2]
    ))
}

// 6. One simulation under constraints.
fn simulation_contract() -> Check {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    pool.install(|| {
        let start = Instant::now();
        let town = synth::town(&TownSpec {
            nx: 25,
            ny: 20,
            merge_fraction: 0.0,
            ..TownSpec::default()
        });
        let cells = &town.t0;
        ensure!(cells.len() == 500, "{} cells", cells.len());
        let features = town.features(cells, 30.0).map_err(|e| e.to_string())?;
        let ts = build_training_set(&features, cells, &town.t1, 0.7, 1).map_err(|e| e.to_string())?;
        let model = train_rf(&ts, &ForestHyper::default()).map_err(|e| e.to_string())?;
        let demand = parcel_ca::demand::Demand {
            categories: cells.categories().names(),
            targets: town.t1.category_areas(),
        };
        let mut constraints = Scenario::Eco
            .constraints(vec![RestrictedZone::new(town.reserve.clone())], vec![synth::CONSTRUCTION], None)
            .map_err(|e| e.to_string())?;
        constraints.forbidden.push((synth::WATER, synth::CONSTRUCTION));
        constraints.forbidden.push((synth::FARMLAND, synth::FOREST));
        let names = cells.categories().names();
        let index = cells.index_of();

        let mut conversions = 0;
        for seed in 0..3 {
            let cfg = SimConfig {
                seed,
                initial_threshold: 0.3,
                ..SimConfig::default()
            };
            let out = simulate(cells, &model, &features, &cfg, &demand, &constraints).map_err(|e| e.to_string())?;
            ensure!(out.trace.records.len() <= cfg.iterations, "seed {seed}: {} iterations", out.trace.records.len());
            let areas = out.landscape.category_areas();
            for (c, (&got, &want)) in areas.iter().zip(&demand.targets).enumerate() {
                ensure!(want - got <= out.slack, "seed {seed}: {} deficit {:.1} > slack {:.1}", names[c], want - got, out.slack);
            }
            for rec in &out.trace.records {
                for conv in &rec.conversions {
                    let pair = (names.iter().position(|n| *n == conv.from).unwrap(), names.iter().position(|n| *n == conv.to).unwrap());
                    ensure!(!constraints.forbidden.contains(&pair), "seed {seed}: forbidden {} -> {} at {}", conv.from, conv.to, conv.cell);
                    if pair.1 == synth::CONSTRUCTION {
                        let p = cells.parcels()[index[conv.cell.as_str()]].geometry();
                        let inside = intersection_area(p, &town.reserve) / p.area();
                        ensure!(inside <= 0.5, "seed {seed}: {} is {inside:.2} inside the reserve", conv.cell);
                    }
                    conversions += 1;
                }
            }
            let replayed = replay(cells, &out.trace).map_err(|e| e.to_string())?;
            ensure!(replayed == out.landscape, "seed {seed}: replay differs");
        }
        let t = within_time(start, Duration::from_secs(30))?;
        Ok(format!("3 seeds met demand with {conversions} conversions, none restricted, replay exact, {t:?}"))
    })
}

// 7. `run` output bytes at several worker counts.
fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let town = common::small_town();
    let mut trees = Vec::new();
    for workers in [1, 4, 8] {
        let out = tmp.path().join(format!("out{workers}"));
        let cfg = common::write_run_fixture(&town, tmp.path(), &out);
        let code = parcel_ca::cli::run_command([
            "parcel-ca",
            "--quiet",
            "--workers",
            &workers.to_string(),
            "run",
            "--config",
            cfg.to_str().unwrap(),
        ]);
        ensure!(code == 0, "run with {workers} workers exited {code}");
        // The manifest records timings and the worker count.
        let files: Vec<_> = common::read_tree(&out)
            .into_iter()
            .filter(|(p, _)| p != "manifest.json")
            .collect();
        trees.push(files);
    }
    ensure!(trees[0].len() >= 9, "only {} output files", trees[0].len());
    for (w, t) in [4, 8].iter().zip(&trees[1..]) {
        let names: Vec<&String> = t.iter().map(|f| &f.0).collect();
        ensure!(
            names == trees[0].iter().map(|f| &f.0).collect::<Vec<_>>(),
            "file sets differ at {w} workers"
        );
        for (a, b) in trees[0].iter().zip(t) {
            ensure!(a.1 == b.1, "{} differs at {w} workers", a.0);
        }
    }
    Ok(format!(
        "{} files byte-identical at 1, 4 and 8 workers",
        trees[0].len()
    ))
}

// 8. Roulette frequencies.
fn roulette_statistics() -> Check {
    let candidates = [(0, 1.0), (1, 1.0), (2, 2.0)];
    let n = 100_000;
    let mut r = stream(8, &[1]);
    let mut counts = [0f64; 3];
    for _ in 0..n {
        counts[roulette_select(&candidates, &mut r).map_err(|e| e.to_string())?] += 1.0;
    }
    let expected = [0.25, 0.25, 0.5].map(|p| p * n as f64);
    let chi2: f64 = counts
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    // Two degrees of freedom: the survival function is exp(-x / 2).
    let p = (-chi2 / 2.0).exp();
    ensure!(p > 0.001, "chi-square {chi2:.3}, p {p:.5}");
    Ok(format!("chi-square {chi2:.3}, p {p:.3}"))
}

// 9. Models.

fn labelled(rows: Vec<Vec<f64>>, y: Vec<usize>, seed: u64) -> TrainingSet {
    let p = rows[0].len();
    let x = FeatureMatrix::from_rows(
        (0..rows.len()).map(|i| format!("r{i}")).collect(),
        (0..p).map(|j| format!("x{j}")).collect(),
        &rows,
    )
    .unwrap();
    TrainingSet::new(x, y, vec!["n".into(), "y".into()], 0.7, seed).unwrap()
}

fn xor_set(n: usize, seed: u64) -> TrainingSet {
    let mut r = stream(seed, &[9, 1]);
    let (mut rows, mut y) = (Vec::new(), Vec::new());
    while rows.len() < n {
        let (a, b): (f64, f64) = (r.gen(), r.gen());
        if (a - 0.5).abs() < 0.05 || (b - 0.5).abs() < 0.05 {
            continue;
        }
        y.push(usize::from((a > 0.5) != (b > 0.5)));
        rows.push(vec![a, b]);
    }
    labelled(rows, y, seed)
}

fn separable_set(n: usize, seed: u64) -> TrainingSet {
    let mut r = stream(seed, &[9, 2]);
    let (mut rows, mut y) = (Vec::new(), Vec::new());
    while rows.len() < n {
        let (a, b): (f64, f64) = (r.gen(), r.gen());
        let margin = a + b - 1.0;
        if margin.abs() < 0.05 {
            continue;
        }
        y.push(usize::from(margin > 0.0));
        rows.push(vec![a, b]);
    }
    labelled(rows, y, seed)
}

fn gradient_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let mut r = stream(seed, &[9, 3]);
        let net = Network::init(vec![3, 6, 5, 4, 3], &mut r);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| r.gen()).collect()).collect();
        let xs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let ys: Vec<usize> = (0..8).map(|i| i % 3).collect();
        let (_, g) = net.loss_and_grad(&xs, &ys, 0.0);
        let h = 1e-6;
        for j in 0..net.params.len() {
            let mut plus = net.clone();
            plus.params[j] += h;
            let mut minus = net.clone();
            minus.params[j] -= h;
            let num = (plus.loss_and_grad(&xs, &ys, 0.0).0 - minus.loss_and_grad(&xs, &ys, 0.0).0)
                / (2.0 * h);
            worst = worst.max((num - g[j]).abs() / num.abs().max(g[j].abs()).max(1e-6));
        }
    }
    worst
}

fn model_suite() -> Check {
    let grad = gradient_error();
    ensure!(grad <= 1e-4, "gradient relative error {grad:e}");
    let sep = separable_set(600, 2);
    let xor = xor_set(1000, 3);
    let lr = train_lr(&sep, &LogisticHyper::default()).map_err(|e| e.to_string())?;
    let rf = train_rf(&xor, &ForestHyper::default()).map_err(|e| e.to_string())?;
    let mlp = train_mlp(&xor, &MlpHyper::default()).map_err(|e| e.to_string())?;
    let mut acc = BTreeMap::new();
    for (name, m, ts, floor) in [
        ("LR", &lr, &sep, 0.99),
        ("RF", &rf, &xor, 0.95),
        ("MLP", &mlp, &xor, 0.95),
    ] {
        let a = m.holdout_accuracy.unwrap_or(0.0);
        ensure!(a >= floor, "{name} holdout accuracy {a:.3} < {floor}");
        for (i, row) in predict_po(m, &ts.x)
            .map_err(|e| e.to_string())?
            .iter()
            .enumerate()
        {
            let s: f64 = row.iter().sum();
            ensure!(
                row.iter().all(|&p| p >= 0.0) && (s - 1.0).abs() <= 1e-9,
                "{name} row {i}: {row:?}"
            );
        }
        acc.insert(name, a);
    }
    Ok(format!(
        "gradient error {grad:.1e}; holdout LR {:.3}, RF {:.3}, MLP {:.3}; predictions on the simplex",
        acc["LR"], acc["RF"], acc["MLP"]
    ))
}

// 10. Subdivision on random shapes.

fn convex_polygon(r: &mut impl Rng) -> Polygon {
    let n = r.gen_range(3..=12);
    let (ax, ay) = (r.gen_range(50.0..400.0), r.gen_range(50.0..400.0));
    let mut angles: Vec<f64> = (0..n)
        .map(|_| r.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    if angles.len() < 3 {
        angles = vec![0.0, 2.1, 4.2];
    }
    let ring: Vec<Point> = angles
        .iter()
        .map(|t| Point::new(ax * t.cos() + 1000.0, ay * t.sin() + 500.0))
        .collect();
    Polygon::new(ring, vec![]).unwrap()
}

fn concave_polygon(r: &mut impl Rng) -> Polygon {
    let n = r.gen_range(5..=9);
    let outer = r.gen_range(100.0..300.0);
    let inner = outer * r.gen_range(0.3..0.7);
    let ring: Vec<Point> = (0..2 * n)
        .map(|k| {
            let t = k as f64 * std::f64::consts::PI / n as f64;
            let rad = if k % 2 == 0 { outer } else { inner };
            Point::new(rad * t.cos(), rad * t.sin())
        })
        .collect();
    Polygon::new(ring, vec![]).unwrap()
}

fn subdivision_suite() -> Check {
    let mut r = stream(10, &[1]);
    let mut shapes: Vec<Polygon> = (0..50).map(|_| convex_polygon(&mut r)).collect();
    shapes.extend((0..20).map(|_| concave_polygon(&mut r)));
    let cats = CategorySet::new(["a"]).unwrap();
    let mut pieces = 0;
    for (n, poly) in shapes.iter().enumerate() {
        let ls = Landscape::new(
            vec![Parcel::new(format!("s{n}"), poly.clone(), 0)],
            cats.clone(),
        )
        .unwrap();
        let target = poly.area() / r.gen_range(2.0..30.0);
        let cfg = SubdivisionConfig {
            target_area: Some(target),
            ..SubdivisionConfig::default()
        };
        let once = subdivide(&ls, &cfg).map_err(|e| format!("shape {n}: {e}"))?;
        ensure!(once.warnings.is_empty(), "shape {n}: {:?}", once.warnings);
        let total = once.landscape.total_area();
        ensure!(
            (total - poly.area()).abs() <= 1e-6 * poly.area(),
            "shape {n}: area {total} vs {}",
            poly.area()
        );
        ensure!(
            once.landscape.parcels().iter().all(|p| p.area() <= target),
            "shape {n}: a piece exceeds the target"
        );
        let twice = subdivide(&once.landscape, &cfg).map_err(|e| format!("shape {n}: {e}"))?;
        ensure!(
            twice.landscape == once.landscape,
            "shape {n}: second pass changed the cells"
        );
        pieces += once.landscape.len();
    }
    Ok(format!(
        "70 shapes into {pieces} pieces: areas conserved, all within target, idempotent"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("LI similarity reproduction", li_similarity_reproduction),
        ("VecLI oracle equivalence", vecli_oracle),
        ("formula identities", formula_identities),
        ("neighborhood effect properties", omega_properties),
        ("Markov suite", markov_suite),
        ("simulation contract", simulation_contract),
        ("determinism across worker counts", determinism),
        ("roulette statistics", roulette_statistics),
        ("model suite", model_suite),
        ("subdivision", subdivision_suite),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
