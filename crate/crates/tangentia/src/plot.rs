//! Static SVG plots of α against scale.

use std::fmt::Write;

use tangentia_core::multiscale::Coefficient;
use tangentia_core::AlphaProfile;

/// Values below this are drawn at the floor of the log axis.
pub const ALPHA_FLOOR: f64 = 1e-6;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlotError {
    #[error("no plottable rows")]
    Empty,
}

/// Groups rows by probe in first-seen order.
fn series<'a>(rows: &'a [AlphaProfile], coef: Coefficient) -> Vec<(&'a [f64], Vec<(f64, f64)>)> {
    let mut out: Vec<(&[f64], Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        let a = coef.of(row);
        if !a.is_finite() || !(row.scale > 0.0) {
            continue;
        }
        let pt = (row.scale.log10(), a.max(ALPHA_FLOOR).log10());
        match out.iter_mut().find(|(p, _)| *p == row.probe.as_slice()) {
            Some((_, pts)) => pts.push(pt),
            None => out.push((row.probe.as_slice(), vec![pt])),
        }
    }
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

fn label(probe: &[f64]) -> String {
    let parts: Vec<String> = probe.iter().map(|v| format!("{v:.3}")).collect();
    format!("({})", parts.join(", "))
}

/// Log-log line plot of `coef` against `r`, one polyline per probe.
/// Rows with non-finite values are skipped.
pub fn plot_profile(rows: &[AlphaProfile], coef: Coefficient) -> Result<String, PlotError> {
    let groups = series(rows, coef);
    if groups.is_empty() {
        return Err(PlotError::Empty);
    }
    let all = groups.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let name = match coef {
        Coefficient::Dilation => "alpha_D",
        Coefficient::Similarity => "alpha_G",
        Coefficient::Flatness => "alpha_min",
    };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
    .unwrap();
    for e in (x0 as i32)..=(x1 as i32) {
        let x = sx(e as f64);
        writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"##,
            MARGIN,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 16.0
        )
        .unwrap();
    }
    for e in (y0 as i32)..=(y1 as i32) {
        let y = sy(e as f64);
        writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            WIDTH - MARGIN,
            MARGIN - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">r</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{name}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )
    .unwrap();
    for (i, (probe, pts)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        )
        .unwrap();
        for &(x, y) in pts {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y)).unwrap();
        }
        if i < 12 {
            writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                WIDTH - MARGIN + 4.0,
                MARGIN + 12.0 + 13.0 * i as f64,
                label(probe)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(probe: f64, r: f64, a: f64) -> AlphaProfile {
        let mut p = AlphaProfile::empty(&[probe], r);
        p.alpha_min = a;
        p.flags = 0;
        p
    }

    #[test]
    fn deterministic_and_clamped() {
        let rows = vec![row(0.0, 0.5, 0.0), row(0.0, 0.25, 1e-12), row(1.0, 0.5, 0.3)];
        let a = plot_profile(&rows, Coefficient::Flatness).unwrap();
        let b = plot_profile(&rows, Coefficient::Flatness).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("1e-6"));
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(plot_profile(&[], Coefficient::Flatness), Err(PlotError::Empty));
        let rows = vec![AlphaProfile::empty(&[0.0], 0.5)];
        assert_eq!(plot_profile(&rows, Coefficient::Dilation), Err(PlotError::Empty));
    }
}
