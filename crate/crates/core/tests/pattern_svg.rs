use rebo_core::origami::{
    export_svg, generate_pattern, generate_pattern_with, inner_layer_params, nests_within, write_svg, CreaseKind,
    PatternOptions, ReboParams, StyleConfig,
};

fn parse_view_box(doc: &roxmltree::Document) -> [f64; 4] {
    let vb = doc.root_element().attribute("viewBox").expect("viewBox");
    let v: Vec<f64> = vb.split_whitespace().map(|s| s.parse().unwrap()).collect();
    [v[0], v[1], v[2], v[3]]
}

#[test]
fn svg_parses_and_stays_in_view_box() {
    for beta in [15.0, 25.0, 35.0, 45.0, 60.0] {
        let pattern = generate_pattern(&ReboParams::specimen(beta).unwrap()).unwrap();
        let bytes = export_svg(&pattern, &StyleConfig::default()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let [x0, y0, w, h] = parse_view_box(&doc);
        assert!((w - pattern.sheet_width_mm).abs() < 1e-6);
        assert!((h - pattern.sheet_height_mm).abs() < 1e-6);

        let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("line")).collect();
        assert_eq!(lines.len(), pattern.creases.len());
        let tol = 1e-6;
        for line in &lines {
            for (xa, ya) in [("x1", "y1"), ("x2", "y2")] {
                let x: f64 = line.attribute(xa).unwrap().parse().unwrap();
                let y: f64 = line.attribute(ya).unwrap().parse().unwrap();
                assert!(x >= x0 - tol && x <= x0 + w + tol, "x = {x} beta = {beta}");
                assert!(y >= y0 - tol && y <= y0 + h + tol, "y = {y} beta = {beta}");
            }
        }
        for kind in [CreaseKind::Mountain, CreaseKind::Valley, CreaseKind::Boundary] {
            let n = lines
                .iter()
                .filter(|l| l.attribute("class") == Some(kind.as_str()))
                .count();
            assert_eq!(n, pattern.count_kind(kind), "{kind:?}");
        }
    }
}

#[test]
fn svg_embeds_parameters() {
    let params = ReboParams::specimen(35.0).unwrap();
    let pattern = generate_pattern(&params).unwrap();
    let text = String::from_utf8(export_svg(&pattern, &StyleConfig::default()).unwrap()).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let comment = doc
        .descendants()
        .find_map(|n| n.is_comment().then(|| n.text().unwrap_or_default().to_string()))
        .expect("metadata comment");
    let json = comment.trim().strip_prefix("rebo-params:").expect("tagged").trim();
    let meta: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(meta["params"]["beta_deg"], 35.0);
    assert_eq!(meta["params"]["n_r"], 6);
}

#[test]
fn inverted_pattern_swaps_kinds() {
    let params = ReboParams::specimen(45.0).unwrap();
    let a = generate_pattern(&params).unwrap();
    let b = generate_pattern_with(
        &params,
        PatternOptions {
            invert_mountain_valley: true,
        },
    )
    .unwrap();
    assert_eq!(a.count_kind(CreaseKind::Mountain), b.count_kind(CreaseKind::Valley));
    assert_eq!(a.count_kind(CreaseKind::Valley), b.count_kind(CreaseKind::Mountain));
    assert_eq!(a.count_kind(CreaseKind::Boundary), b.count_kind(CreaseKind::Boundary));
}

#[test]
fn written_file_matches_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.svg");
    let pattern = generate_pattern(&ReboParams::specimen(25.0).unwrap()).unwrap();
    write_svg(&pattern, &StyleConfig::default(), &path).unwrap();
    let on_disk = std::fs::read(&path).unwrap();
    assert_eq!(on_disk, export_svg(&pattern, &StyleConfig::default()).unwrap());
}

#[test]
fn derived_inner_layer_nests_and_draws() {
    let outer = ReboParams::new(19.0, 6.0, 10.0, 6, 8, 45.0).unwrap();
    let inner = inner_layer_params(&outer, 1.0).unwrap();
    assert!(nests_within(&inner, &outer, 1.0));
    assert!(!nests_within(&outer, &inner, 1.0));
    let pattern = generate_pattern(&inner).unwrap();
    assert!(pattern.creases_within_sheet());
}
