//! CSV writers.
//!
//! Sweep columns, in order: `probe_id, x0..x{n-1}, r, alpha_D, alpha_G,
//! alpha_0..alpha_n, alpha_min, best_d, ball_mass, flags`. `flags` lists the
//! set flag names joined by `|`. Classification columns: `probe_id,
//! x0..x{n-1}, kind, dimension, confidence, dimension_slope, dini_D_plain,
//! dini_D_log, dini_G_plain, dini_G_log, tangent_residual`.

use tangentia_core::alpha::flags;
use tangentia_core::{AlphaProfile, ClassificationReport, StratumKind};

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

pub fn sweep_header(n: usize) -> Vec<String> {
    let mut h = vec!["probe_id".to_string()];
    h.extend((0..n).map(|i| format!("x{i}")));
    h.extend(["r", "alpha_D", "alpha_G"].map(String::from));
    h.extend((0..=n).map(|d| format!("alpha_{d}")));
    h.extend(["alpha_min", "best_d", "ball_mass", "flags"].map(String::from));
    h
}

/// `rows` in probe-major order with `per_probe` scales each.
pub fn sweep_csv(n: usize, rows: &[AlphaProfile], per_probe: usize) -> String {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rec = vec![(i / per_probe.max(1)).to_string()];
            rec.extend(row.probe.iter().map(|&v| num(v)));
            rec.extend([row.scale, row.alpha_D, row.alpha_G].map(num));
            rec.extend(row.alpha_flat.iter().map(|&v| num(v)));
            rec.push(num(row.alpha_min));
            rec.push(row.best_d.to_string());
            rec.push(num(row.ball_mass));
            rec.push(flags::names(row.flags).join("|"));
            rec
        })
        .collect();
    write_csv(sweep_header(n), records)
}

pub fn classify_header(n: usize) -> Vec<String> {
    let mut h = vec!["probe_id".to_string()];
    h.extend((0..n).map(|i| format!("x{i}")));
    h.extend(
        [
            "kind",
            "dimension",
            "confidence",
            "dimension_slope",
            "dini_D_plain",
            "dini_D_log",
            "dini_G_plain",
            "dini_G_log",
            "tangent_residual",
        ]
        .map(String::from),
    );
    h
}

pub fn kind_name(k: StratumKind) -> &'static str {
    match k {
        StratumKind::Atom => "atom",
        StratumKind::Rectifiable(_) => "rectifiable",
        StratumKind::Unclassified => "unclassified",
    }
}

pub fn classify_csv(n: usize, report: &ClassificationReport) -> String {
    let records = report
        .probes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rec = vec![i.to_string()];
            rec.extend(p.probe.iter().map(|&v| num(v)));
            rec.push(kind_name(p.label.kind).to_string());
            rec.push(p.label.dimension.to_string());
            rec.push(num(p.label.confidence));
            rec.push(p.dimension_slope.map(num).unwrap_or_default());
            rec.extend(
                [
                    p.dini.plain_sum,
                    p.dini.log_weighted_sum,
                    p.dini_g.plain_sum,
                    p.dini_g.log_weighted_sum,
                ]
                .map(num),
            );
            rec.push(p.tangent_plane.as_ref().map(|t| num(t.residual)).unwrap_or_default());
            rec
        })
        .collect();
    write_csv(classify_header(n), records)
}
