//! Plain-text and CSV renderings of suite reports.

use std::fmt::Write;

use framelab_core::suite::{AnglePoint, ClaimsTable, Expectation, KeyNumber, ResidualPoint, VerificationReport};
use framelab_core::{PropertyReport, Verdict};

fn number(x: f64) -> String {
    if x != 0.0 && x.is_finite() && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

fn status(pass: bool) -> &'static str {
    if pass { "PASS" } else { "FAIL" }
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == row.len() {
                line.push_str(cell);
            } else {
                let pad = widths[c] - cell.chars().count();
                line.push_str(cell);
                line.push_str(&" ".repeat(pad + 2));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn property_row(p: &PropertyReport) -> Vec<String> {
    vec![p.property.clone(), status(p.pass).into(), number(p.max_violation), number(p.tolerance)]
}

pub fn verification(r: &VerificationReport) -> String {
    let mut rows = vec![vec!["check".into(), "status".into(), "value".into(), "tolerance".into()]];
    rows.push(property_row(&r.complement));
    rows.push(property_row(&r.continuity.report));
    if let Some(e) = &r.eigenstate {
        rows.push(property_row(e));
    }
    rows.push(vec![
        "fit_residual".into(),
        "-".into(),
        number(r.fit.rms_residual),
        number(r.config.verdict_tol),
    ]);
    let mut out = String::new();
    let _ = writeln!(out, "frame     {}", r.frame);
    let _ = writeln!(out, "samples   {}", r.config.samples);
    let _ = writeln!(out, "seed      {}", r.config.seed);
    let r_hat = r.fit.r_hat;
    let _ = writeln!(out, "r_hat     ({}, {}, {})", number(r_hat.x), number(r_hat.y), number(r_hat.z));
    let verdict = match &r.verdict {
        Verdict::Linear(_) => "linear",
        Verdict::Nonlinear => "nonlinear",
    };
    let expected = match r.expected {
        Expectation::Linear => "linear",
        Expectation::Nonlinear => "nonlinear",
    };
    let _ = writeln!(out, "verdict   {verdict} (expected {expected})");
    out.push('\n');
    out.push_str(&aligned(&rows));
    let _ = writeln!(out, "\n{}", status(r.pass));
    out
}

fn numbers(ns: &[KeyNumber]) -> String {
    ns.iter().map(|k| format!("{}={}", k.name, number(k.value))).collect::<Vec<_>>().join(" ")
}

pub fn claims(t: &ClaimsTable) -> String {
    let mut rows = vec![vec!["claim".into(), "statement".into(), "status".into(), "key numbers".into()]];
    for row in &t.rows {
        rows.push(vec![row.claim.clone(), row.statement.clone(), status(row.pass).into(), numbers(&row.numbers)]);
    }
    let mut out = aligned(&rows);
    let passed = t.rows.iter().filter(|r| r.pass).count();
    let _ = writeln!(out, "\n{passed}/{} claims pass (samples {}, seed {})", t.rows.len(), t.config.samples, t.config.seed);
    out
}

pub fn angle_csv(points: &[AnglePoint]) -> String {
    let mut out = String::from("angle,probability\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.angle, p.probability);
    }
    out
}

pub fn residual_csv(points: &[ResidualPoint]) -> String {
    let mut out = String::from("samples,rms_residual\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.samples, p.rms_residual);
    }
    out
}
