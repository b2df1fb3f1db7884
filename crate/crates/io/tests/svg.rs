use onephase_io::{loglog_svg, polylines_svg};

#[test]
fn polylines_are_emitted_per_line() {
    let lines = vec![
        vec![[0.0, 0.0], [1.0, 1.0]],
        vec![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]],
    ];
    let svg = polylines_svg("a < b", &lines);
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("a &lt; b"));
    assert!(svg.ends_with("</svg>\n"));
}

#[test]
fn loglog_drops_nonpositive_points() {
    let pts = [[1e-3, 1e-3], [1e-2, 1e-2], [0.0, 1.0], [1e-1, -1.0]];
    let svg = loglog_svg("s", &[("fit", &pts)]);
    assert_eq!(svg.matches("<circle").count(), 2);
    assert_eq!(loglog_svg("s", &[("fit", &pts)]), svg);
}
