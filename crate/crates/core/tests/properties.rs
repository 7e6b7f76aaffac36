use std::path::Path;

use proptest::prelude::*;

use parcel_ca::assess::{figure_of_merit, ConfusionAreas, WeightMode};
use parcel_ca::demand::{project, TransitionMatrix};
use parcel_ca::engine::{combined_probability, Neighborhood};
use parcel_ca::features::{GridSpec, VariableGrid};
use parcel_ca::geom::{bisect, Point, Polygon};
use parcel_ca::io;
use parcel_ca::parcel::{CategorySet, Landscape, Parcel};
use parcel_ca::subdivision::{subdivide, SubdivisionConfig};
use parcel_ca::vecli::{landscape_report, li_similarity, FilterRule};

fn cats() -> CategorySet {
    CategorySet::new(["a", "b", "c"]).unwrap()
}

/// Rectangles on a row with random widths, heights and categories.
fn strip() -> impl Strategy<Value = Landscape> {
    prop::collection::vec((1.0f64..50.0, 1.0f64..50.0, 0usize..3), 1..30).prop_map(|cells| {
        let mut x = 0.0;
        let parcels = cells
            .into_iter()
            .enumerate()
            .map(|(i, (w, h, c))| {
                let p = Parcel::new(format!("r{i}"), Polygon::rect(x, 0.0, x + w, h).unwrap(), c);
                x += w;
                p
            })
            .collect();
        Landscape::new(parcels, cats()).unwrap()
    })
}

fn convex() -> impl Strategy<Value = Polygon> {
    (
        prop::collection::vec(0.0f64..std::f64::consts::TAU, 3..10),
        5.0f64..200.0,
        5.0f64..200.0,
    )
        .prop_filter_map("distinct angles", |(mut t, a, b)| {
            t.sort_by(f64::total_cmp);
            t.dedup_by(|x, y| (*x - *y).abs() < 0.05);
            let ring: Vec<Point> = t
                .iter()
                .map(|t| Point::new(a * t.cos(), b * t.sin()))
                .collect();
            Polygon::new(ring, vec![]).ok().filter(|p| p.area() > 1.0)
        })
}

fn unit_rows(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, k), k)
        .prop_map(|rows| rows.into_iter().map(|r| normalized(&r)).collect())
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parcels_round_trip(ls in strip()) {
        let text = io::parcels_to_string(&ls);
        let back = io::parse_parcels(&text, Some(&cats()), Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &ls);
        prop_assert_eq!(io::parcels_to_string(&back), text);
    }

    #[test]
    fn grid_round_trip(cols in 1usize..6, rows in 1usize..6, vals in prop::collection::vec(-1e3f64..1e3, 36), nodata in any::<bool>()) {
        let spec = GridSpec { origin: Point::new(10.0, -5.0), cell_size: 30.0, ncols: cols, nrows: rows };
        let mut v: Vec<f64> = vals[..cols * rows].to_vec();
        if nodata {
            v[0] = -9999.0;
        }
        let g = VariableGrid::new(spec, v, nodata.then_some(-9999.0)).unwrap();
        let back = io::parse_grid(&io::grid_to_string(&g), Path::new("mem")).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn bisect_conserves_area(p in convex()) {
        let h = bisect(&p).unwrap();
        let (a, b) = h.area();
        prop_assert!((a + b - p.area()).abs() <= 1e-9 * p.area());
        prop_assert!(a > 0.0 && b > 0.0);
    }

    #[test]
    fn subdivision_bounds(ls in strip(), frac in 0.05f64..1.5) {
        let target = frac * ls.total_area() / ls.len() as f64;
        let cfg = SubdivisionConfig { target_area: Some(target), ..Default::default() };
        let out = subdivide(&ls, &cfg).unwrap();
        prop_assert!(out.warnings.is_empty());
        prop_assert!((out.landscape.total_area() - ls.total_area()).abs() <= 1e-9 * ls.total_area());
        prop_assert!(out.landscape.parcels().iter().all(|p| p.area() <= target));
        for (a, b) in out.landscape.category_areas().iter().zip(ls.category_areas()) {
            prop_assert!((a - b).abs() <= 1e-9 * ls.total_area());
        }
        prop_assert_eq!(subdivide(&out.landscape, &cfg).unwrap().landscape, out.landscape);
    }

    #[test]
    fn omega_is_a_simplex(ls in strip(), radius in 1.0f64..400.0, decay in 1.0f64..400.0) {
        let nb = Neighborhood::new(&ls, radius, decay);
        let state = ls.category_of();
        for i in 0..ls.len() {
            let w = nb.effect(i, &state);
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn restricted_entries_stay_zero(po in prop::collection::vec(0.0f64..1.0, 3), om in prop::collection::vec(0.0f64..1.0, 3), pr in prop::collection::vec(0u8..2, 3), ra in 1.0f64..20.0) {
        let p = combined_probability(&po, &om, &pr, ra);
        for c in 0..3 {
            if pr[c] == 0 {
                prop_assert_eq!(p[c], 0.0);
            } else {
                prop_assert!((p[c] - po[c] * om[c] * ra).abs() <= 1e-12 * (1.0 + p[c]));
            }
        }
    }

    #[test]
    fn similarity_with_itself_is_one(ls in strip()) {
        let r = landscape_report(&ls, 0.01, FilterRule::None).unwrap();
        prop_assert!((li_similarity(&r, &r).alpha - 1.0).abs() < 1e-12);
        prop_assert!(r.lpi > 0.0 && r.lpi <= 1.0 + 1e-12);
        prop_assert!(r.np >= 1 && r.np <= ls.len());
    }

    #[test]
    fn accuracy_ordering(a in 0.0f64..100.0, b in 0.0f64..100.0, c in 0.0f64..100.0, d in 0.0f64..100.0) {
        let r = figure_of_merit(ConfusionAreas { a, b, c, d }, WeightMode::Area);
        for v in [r.fom, r.pa, r.ua] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.fom <= r.pa + 1e-12 && r.fom <= r.ua + 1e-12);
    }

    #[test]
    fn projection_stays_on_simplex(rows in unit_rows(4), shares in prop::collection::vec(0.01f64..1.0, 4), steps in 0u32..20) {
        let tm = TransitionMatrix::new(rows).unwrap();
        let v = project(&normalized(&shares), &tm, steps).unwrap();
        prop_assert!(v.iter().all(|&x| x >= 0.0));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}
