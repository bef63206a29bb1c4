use proptest::prelude::*;
use wsnhole::boundary::{boundary_node_ids, default_tolerance, point_test};
use wsnhole::detect::{detect_holes, Annotation};
use wsnhole::geom::Point;
use wsnhole::raster::{fit_transform, render_coverage};
use wsnhole::topology::{generate_topology, GeneratorConfig};

mod common;

fn ring() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..12)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
}

/// Distance to a polyline by dense sampling along each segment.
fn sampled_distance(p: Point, ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for k in 0..=2000 {
            let t = k as f64 / 2000.0;
            best = best.min(p.distance(a + (b - a) * t));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn point_test_is_monotone_in_tolerance(
        contour in ring(),
        x in -20.0f64..120.0,
        y in -20.0f64..120.0,
        tol in 0.0f64..30.0,
        extra in 0.0f64..30.0,
    ) {
        let p = Point::new(x, y);
        if point_test(p, &contour, tol) {
            prop_assert!(point_test(p, &contour, tol + extra));
        }
    }

    #[test]
    fn point_test_agrees_with_sampled_distance(
        contour in ring(),
        x in -20.0f64..120.0,
        y in -20.0f64..120.0,
        tol in 0.0f64..30.0,
    ) {
        let p = Point::new(x, y);
        let d = sampled_distance(p, &contour);
        // Sampling overestimates by at most half a sample spacing.
        let slack = 0.1;
        if d <= tol {
            prop_assert!(point_test(p, &contour, tol));
        } else if d > tol + slack {
            prop_assert!(!point_test(p, &contour, tol));
        }
    }
}

#[test]
fn boundary_sets_grow_with_tolerance() {
    let (_, p) = generate_topology(&GeneratorConfig::new(500, 6.0, 21)).unwrap();
    let t = fit_transform(&p.positions, 1024, 1024, 32).unwrap();
    let img = render_coverage(&p.positions, &t, p.sensing_range).unwrap();
    let ann = Annotation::from_holes(&detect_holes(&img, 25), 1024, 1024, "truth.png");
    let mut previous: Vec<usize> = Vec::new();
    for margin in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let b = boundary_node_ids(&ann, &p.positions, &t, img.rs_pixels + margin).unwrap();
        assert!(previous.iter().all(|v| b.union.binary_search(v).is_ok()));
        // Union is the deduplicated, sorted merge of the per-hole sets.
        let mut merged: Vec<usize> = b.per_hole.iter().flatten().copied().collect();
        merged.sort_unstable();
        merged.dedup();
        assert_eq!(merged, b.union);
        assert!(b.union.iter().all(|&v| v < p.positions.len()));
        previous = b.union;
    }
}

#[test]
fn default_tolerance_matches_exhaustive_pixel_search() {
    for seed in [31, 32] {
        let (_, p) = generate_topology(&GeneratorConfig::new(400, 7.0, seed)).unwrap();
        let t = fit_transform(&p.positions, 1024, 1024, 32).unwrap();
        let img = render_coverage(&p.positions, &t, p.sensing_range).unwrap();
        let holes = detect_holes(&img, 25);
        let ann = Annotation::from_holes(&holes, 1024, 1024, "truth.png");
        let tol = default_tolerance(img.rs_pixels);
        let b = boundary_node_ids(&ann, &p.positions, &t, tol).unwrap();
        let regions: Vec<_> = holes.iter().map(|h| h.pixels.clone()).collect();
        assert_eq!(b.union, common::nodes_near_pixels(&img.node_pixels, &regions, tol));
        assert!(b.inside.is_empty());
    }
}
