mod common;

use std::f64::consts::PI;

use common::*;
use glyphmorph_core::geometry::*;
use glyphmorph_core::raster::render;
use rand::Rng;

#[test]
fn dejavu_contour_counts_match_fonttools() {
    // counts read with fontTools' glyf table for DejaVuSans
    let expected = [('B', 3), ('I', 1), ('R', 2), ('D', 2), ('O', 2), ('g', 2)];
    let text: String = expected.iter().map(|(c, _)| *c).collect();
    let w = word(&text);
    assert_eq!(w.len(), expected.len());
    for (g, (c, n)) in w.glyphs.iter().zip(expected) {
        assert_eq!(g.character, Some(c));
        assert_eq!(g.contours.len(), n, "contours of {c}");
        assert!(g.morphable);
    }
}

#[test]
fn glyphs_fit_the_canvas_in_order() {
    let w = word("BIRD");
    let (lo, hi) = w.bounds().unwrap();
    assert!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= CANVAS_SIZE && hi.y <= CANVAS_SIZE);
    let lefts: Vec<f64> = w.glyphs.iter().map(|g| g.bounds().unwrap().0.x).collect();
    assert!(lefts.windows(2).all(|p| p[0] < p[1]), "{lefts:?}");
    for (i, g) in w.glyphs.iter().enumerate() {
        assert_eq!(g.letter_index, i);
    }
}

#[test]
fn space_is_kept_but_not_morphable() {
    let w = word("A B");
    assert_eq!(w.len(), 3);
    assert!(w.glyphs[1].contours.is_empty());
    assert!(!w.glyphs[1].morphable);
}

#[test]
fn loader_errors() {
    assert!(matches!(
        load_glyph_outlines(sans(), "  ", ShapingMode::Simple),
        Err(GeometryError::EmptyText)
    ));
    assert!(matches!(
        load_glyph_outlines(sans(), "A\u{e000}", ShapingMode::Simple),
        Err(GeometryError::MissingGlyph('\u{e000}'))
    ));
    assert!(matches!(
        load_glyph_outlines("/nonexistent/font.ttf", "A", ShapingMode::Simple),
        Err(GeometryError::FontRead { .. })
    ));
    assert!(matches!(
        load_glyph_outlines_from_bytes(b"definitely not a font", "A", ShapingMode::Simple),
        Err(GeometryError::FontRead { .. })
    ));
}

#[test]
fn preshaped_ids_match_simple_mapping() {
    let data = std::fs::read(sans()).unwrap();
    let face = ttf_ids(&data, "BIRD");
    let ids = face.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    let a = load_glyph_outlines_from_bytes(&data, "BIRD", ShapingMode::Simple).unwrap();
    let b = load_glyph_outlines_from_bytes(&data, &ids, ShapingMode::PreshapedIds(Script::LeftToRight)).unwrap();
    assert_eq!(a.points(), b.points());
    let rtl = load_glyph_outlines_from_bytes(&data, &ids, ShapingMode::PreshapedIds(Script::RightToLeft)).unwrap();
    assert_eq!(rtl.script, Script::RightToLeft);
    assert!(matches!(
        load_glyph_outlines_from_bytes(&data, "12,x", ShapingMode::PreshapedIds(Script::LeftToRight)),
        Err(GeometryError::BadGlyphId(_))
    ));
}

fn ttf_ids(data: &[u8], text: &str) -> Vec<u16> {
    let face = ttf_parser::Face::parse(data, 0).unwrap();
    text.chars().map(|c| face.glyph_index(c).unwrap().0).collect()
}

#[test]
fn subdivision_reaches_budget_without_changing_the_render() {
    let w = word("BIRD");
    let mut sub = w.clone();
    for g in &mut sub.glyphs {
        let budget = g.default_point_budget();
        *g = g.subdivide_to_budget(budget);
        assert!(g.point_count() >= budget);
    }
    assert!(sub.point_count() > w.point_count());
    for size in [64, 200] {
        let diff = render(&w, size).max_abs_diff(&render(&sub, size));
        assert!(diff <= 1e-6, "size {size}: {diff}");
    }
}

#[test]
fn subdivision_is_deterministic_and_monotone() {
    let g = word("O").glyphs[0].clone();
    let a = g.subdivide_to_budget(80);
    let b = g.subdivide_to_budget(80);
    assert_eq!(a, b);
    assert_eq!(g.subdivide_to_budget(1), g);
    assert!((a.area() - g.area()).abs() < 1e-9 * g.area().abs().max(1.0));
}

fn circumcircle_contains(a: Point, b: Point, c: Point, d: Point) -> bool {
    // classic incircle determinant, orientation-corrected
    let m = [
        [a.x - d.x, a.y - d.y, (a.x - d.x).powi(2) + (a.y - d.y).powi(2)],
        [b.x - d.x, b.y - d.y, (b.x - d.x).powi(2) + (b.y - d.y).powi(2)],
        [c.x - d.x, c.y - d.y, (c.x - d.x).powi(2) + (c.y - d.y).powi(2)],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let orient = (b - a).cross(c - a);
    det * orient.signum() > 1e-7
}

#[test]
fn unconstrained_triangulation_is_delaunay() {
    let mut r = rng(11);
    for _ in 0..5 {
        let pts: Vec<Point> = (0..40).map(|_| Point::new(r.random::<f64>() * 100.0, r.random::<f64>() * 100.0)).collect();
        let tri = triangulate(&pts, &[]).unwrap();
        for t in &tri.triangles {
            let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
            for (i, &d) in pts.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                assert!(!circumcircle_contains(a, b, c, d), "point {i} inside circumcircle of {t:?}");
            }
        }
    }
}

#[test]
fn glyph_edges_are_constrained() {
    let w = word("BR");
    let range = w.point_range(0..2);
    let edges = w.contour_edges(0..2);
    let tri = triangulate(&w.points()[range], &edges).unwrap();
    assert!(tri.skipped_edges.is_empty());
    for &(a, b) in &edges {
        assert!(tri.has_edge(a, b), "edge {a}-{b} missing");
    }
    for (t, angles) in tri.corner_angles.iter().enumerate() {
        let sum: f64 = angles.iter().sum();
        assert!((sum - PI).abs() < 1e-9, "triangle {t} angle sum {sum}");
    }
    let per_point = tri.reference_angles();
    assert_eq!(per_point.len(), tri.point_count());
    assert_eq!(per_point.iter().map(Vec::len).sum::<usize>(), 3 * tri.triangles.len());
}

#[test]
fn triangulation_errors() {
    let line: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
    assert!(matches!(triangulate(&line, &[]), Err(GeometryError::Collinear)));
    assert!(matches!(
        triangulate(&line[..2], &[]),
        Err(GeometryError::TooFewPoints(2))
    ));
    let mut bad = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
    bad[1].x = f64::NAN;
    assert!(matches!(triangulate(&bad, &[]), Err(GeometryError::NonFinite)));
}

/// Random non-degenerate configuration: a glyph's triangulated points.
fn glyph_reference(text: &str) -> (TriangulationAngles, Vec<Point>) {
    let w = word(text);
    let g = w.glyphs[0].subdivide_to_budget(40);
    let sub = WordLayout::new(vec![g]);
    let tri = triangulate(&sub.points(), &sub.contour_edges(0..1)).unwrap();
    let pts = tri.positions.clone();
    (tri, pts)
}

#[test]
fn acap_gradient_matches_central_differences() {
    let letters = ["B", "I", "R", "D", "O"];
    let mut r = rng(5);
    let mut instances = 0;
    for round in 0..12 {
        if instances >= 24 {
            break;
        }
        for l in letters {
            let (tri, base) = glyph_reference(l);
            let pts: Vec<Point> = base
                .iter()
                .map(|p| *p + Point::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5) * 0.2)
                .collect();
            let out = acap_loss(&tri, &pts).unwrap();
            if !out.degenerate_triangles.is_empty() {
                continue;
            }
            let coords: Vec<usize> = (0..2 * pts.len()).collect();
            let numeric = central_difference(&pts, &coords, 1e-5, |p| acap_loss(&tri, p).unwrap().loss);
            let err = relative_error(&flatten(&out.gradient), &numeric);
            assert!(err < 1e-4, "{l} round {round}: relative error {err}");
            instances += 1;
        }
    }
    assert!(instances >= 20, "only {instances} non-degenerate instances");
}

fn similarity(p: Point, angle: f64, scale: f64, shift: Point) -> Point {
    p.rotated(angle) * scale + shift
}

#[test]
fn acap_vanishes_under_similarity_transforms() {
    let mut r = rng(8);
    for l in ["B", "g", "O"] {
        let (tri, base) = glyph_reference(l);
        assert_eq!(acap_loss(&tri, &base).unwrap().loss, 0.0);
        for _ in 0..10 {
            let angle = r.random::<f64>() * 2.0 * PI;
            let scale = 0.2 + r.random::<f64>() * 4.0;
            let shift = Point::new(r.random::<f64>() * 400.0 - 200.0, r.random::<f64>() * 400.0 - 200.0);
            let moved: Vec<Point> = base.iter().map(|&p| similarity(p, angle, scale, shift)).collect();
            let loss = acap_loss(&tri, &moved).unwrap().loss;
            assert!(loss <= 1e-10, "{l}: {loss}");
        }
    }
}

#[test]
fn acap_is_positive_under_shear_and_noise() {
    let mut r = rng(9);
    let (tri, base) = glyph_reference("R");
    let sheared: Vec<Point> = base.iter().map(|p| Point::new(p.x + 0.3 * p.y, p.y)).collect();
    assert!(acap_loss(&tri, &sheared).unwrap().loss > 0.0);
    for _ in 0..10 {
        let noise: Vec<Point> = base
            .iter()
            .map(|_| Point::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
            .collect();
        let norm = noise.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
        let perturbed: Vec<Point> = base.iter().zip(&noise).map(|(p, n)| *p + *n * (0.1 / norm)).collect();
        assert!(acap_loss(&tri, &perturbed).unwrap().loss > 0.0);
    }
}

#[test]
fn acap_stays_continuous_when_a_sliver_inverts() {
    let pts = vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(5.0, 1e-9), Point::new(5.0, 8.0)];
    let tri = triangulate(&pts, &[]).unwrap();
    let mut flipped = pts.clone();
    flipped[2].y = -1e-9;
    let loss = acap_loss(&tri, &flipped).unwrap().loss;
    assert!(loss < 1e-6, "{loss}");
}

#[test]
fn acap_rejects_wrong_point_count() {
    let (tri, base) = glyph_reference("I");
    assert!(matches!(
        acap_loss(&tri, &base[1..]),
        Err(GeometryError::PointCountMismatch { .. })
    ));
}
