use std::fmt::Write;

use hawkes_core::limits::ReportRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

/// Statistics in first-seen order.
pub fn statistics(rows: &[ReportRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.statistic) {
            out.push(r.statistic.clone());
        }
    }
    out
}

/// Line chart of estimate (and target, dashed) against `n`, or against `t` when all rows share one `n`.
pub fn line_chart(rows: &[ReportRow], statistic: &str) -> String {
    let rows: Vec<&ReportRow> = rows.iter().filter(|r| r.statistic == statistic).collect();
    let by_t = rows.windows(2).all(|w| w[0].n == w[1].n);
    let x_of = |r: &ReportRow| if by_t { r.t } else { r.n };
    let xlabel = if by_t { "t" } else { "n" };
    let est: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (x_of(r), r.estimate))
        .filter(|p| p.1.is_finite())
        .collect();
    let tgt: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.target.map(|y| (x_of(r), y)))
        .filter(|p| p.1.is_finite())
        .collect();

    let all = est.iter().chain(&tgt);
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 <= 0.0 {
        let pad = y0.abs().max(1.0) * 0.05;
        y0 -= pad;
        y1 += pad;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let polyline = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{statistic}</text>"#,
        WIDTH / 2.0
    );
    let (l, r, b, t) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#
    );
    for (v, anchor_x, anchor_y, align) in [
        (format!("{x0:.3e}"), l, b + 20.0, "start"),
        (format!("{x1:.3e}"), r, b + 20.0, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{anchor_x}" y="{anchor_y}" text-anchor="{align}" font-family="sans-serif" font-size="11">{v}</text>"#
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="{:.0}" text-anchor="middle" font-family="sans-serif" font-size="12">{xlabel}</text>"#,
        WIDTH / 2.0,
        b + 35.0
    );
    for (v, y) in [(y0, b), (y1, t)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.0}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.3e}</text>"#,
            l - 5.0
        );
    }
    if tgt.len() > 1 {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="gray" stroke-dasharray="6,4"/>"#,
            polyline(&tgt)
        );
    }
    if !est.is_empty() {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            polyline(&est)
        );
        for &(x, y) in &est {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
                px(x),
                py(y)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: f64, stat: &str, est: f64) -> ReportRow {
        ReportRow {
            n,
            t: 1.0,
            statistic: stat.into(),
            estimate: est,
            target: Some(1.0),
            stderr: None,
            pass: None,
        }
    }

    #[test]
    fn chart_has_one_marker_per_row() {
        let rows = vec![row(8.0, "a", 0.5), row(16.0, "a", 0.25), row(8.0, "b", 3.0)];
        let svg = line_chart(&rows, "a");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(statistics(&rows), vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn degenerate_ranges_stay_finite() {
        let svg = line_chart(&[row(1.0, "a", 2.0)], "a");
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
