use proptest::prelude::*;
use wsnhole::raster::{
    export_image, extract_regions_by_color, fit_transform, read_image, render_coverage, write_png,
    CanvasTransform, Overlay, OverlayKind, COVERED, DETECTION_OVERLAY, NODE_DOT, TRUTH_OVERLAY,
    UNCOVERED,
};
use wsnhole::Point;

mod common;

fn point() -> impl Strategy<Value = Point> {
    (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coverage_matches_per_pixel_oracle(
        positions in prop::collection::vec(point(), 1..20),
        width in 16u32..96,
        height in 16u32..96,
        margin in 0u32..6,
        rs in 0.5f64..20.0,
    ) {
        let transform = fit_transform(&positions, width, height, margin).unwrap();
        match render_coverage(&positions, &transform, rs) {
            Ok(img) => {
                let centres = transform.apply_all(&positions);
                let want = common::naive_coverage(width, height, &centres, img.rs_pixels);
                prop_assert_eq!(img.coverage, want);
            }
            Err(e) => prop_assert!(rs * transform.scale < 1.0, "{}", e),
        }
    }

    #[test]
    fn fit_keeps_points_inside_the_margin(
        positions in prop::collection::vec(point(), 1..30),
        width in 16u32..512,
        height in 16u32..512,
        margin in 0u32..8,
    ) {
        let t = fit_transform(&positions, width, height, margin).unwrap();
        let eps = 1e-6;
        for p in t.apply_all(&positions) {
            prop_assert!(p.x >= margin as f64 - eps && p.x <= (width - margin) as f64 + eps);
            prop_assert!(p.y >= margin as f64 - eps && p.y <= (height - margin) as f64 + eps);
        }
    }
}

#[test]
fn fit_is_isotropic_and_centred() {
    let positions = [Point::new(0.0, 0.0), Point::new(2.0, 1.0)];
    let t = fit_transform(&positions, 100, 100, 10).unwrap();
    assert!((t.scale - 40.0).abs() < 1e-12);
    let a = t.apply(positions[0]);
    let b = t.apply(positions[1]);
    assert!((a.x - 10.0).abs() < 1e-9 && (b.x - 90.0).abs() < 1e-9);
    assert!(((a.y + b.y) / 2.0 - 50.0).abs() < 1e-9);
    assert!(fit_transform(&[], 100, 100, 10).is_err());
    assert!(fit_transform(&positions, 20, 100, 10).is_err());
}

#[test]
fn png_round_trip_keeps_colours_and_overlays() {
    let t = CanvasTransform {
        scale: 1.0,
        offset: Point::ORIGIN,
        width: 40,
        height: 30,
        margin: 0,
    };
    let img = render_coverage(&[Point::new(10.0, 10.0)], &t, 6.0).unwrap();
    let truth = vec![vec![(30, 20), (31, 20)]];
    let detection = vec![vec![(35, 25)]];
    let rgb = export_image(
        &img,
        &[
            Overlay {
                kind: OverlayKind::Truth,
                regions: &truth,
            },
            Overlay {
                kind: OverlayKind::Detection,
                regions: &detection,
            },
        ],
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.png");
    write_png(&rgb, &path).unwrap();
    let back = read_image(&path).unwrap();
    assert_eq!(back, rgb);
    assert_eq!(back.get_pixel(10, 10).0, NODE_DOT);
    assert_eq!(back.get_pixel(14, 10).0, COVERED);
    assert_eq!(back.get_pixel(0, 29).0, UNCOVERED);
    assert_eq!(
        extract_regions_by_color(&back, TRUTH_OVERLAY, 0).unwrap(),
        truth
    );
    assert_eq!(
        extract_regions_by_color(&back, DETECTION_OVERLAY, 8).unwrap(),
        detection
    );
    assert!(extract_regions_by_color(&back, DETECTION_OVERLAY, 9).is_err());
}

#[test]
fn overlay_names_parse() {
    assert_eq!("truth".parse::<OverlayKind>().unwrap(), OverlayKind::Truth);
    assert_eq!("blue".parse::<OverlayKind>().unwrap(), OverlayKind::Detection);
    assert!("green".parse::<OverlayKind>().is_err());
}
