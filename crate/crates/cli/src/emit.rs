//! CSV, JSON and SVG output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::json;

use crate::fit::{fit_growth, FitResult};
use crate::records::{Quantity, SweepRecord};
use crate::{CliError, Result, SCHEMA_VERSION};

pub const CSV_HEADER: &str = "quantity,n,value,direction,seed,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(CliError::UnknownTag {
                kind: "format",
                value: s.into(),
            }),
        }
    }
}

fn non_empty(records: &[SweepRecord]) -> Result<()> {
    if records.is_empty() {
        Err(CliError::Empty("no records".into()))
    } else {
        Ok(())
    }
}

pub fn to_csv(records: &[SweepRecord]) -> Result<String> {
    non_empty(records)?;
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.quantity.tag(),
            r.n,
            r.value,
            r.direction.tag(),
            r.seed,
            r.wall_time_ms
        )
        .expect("write to string");
    }
    Ok(out)
}

/// Records grouped by quantity, in a fixed order.
fn by_quantity(records: &[SweepRecord]) -> BTreeMap<Quantity, Vec<SweepRecord>> {
    let mut map: BTreeMap<Quantity, Vec<SweepRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.quantity).or_default().push(r.clone());
    }
    map
}

/// Fits every quantity that has enough points.
pub fn fits(records: &[SweepRecord]) -> BTreeMap<Quantity, FitResult> {
    by_quantity(records)
        .into_iter()
        .filter_map(|(q, rs)| fit_growth(&rs).ok().map(|f| (q, f)))
        .collect()
}

pub fn to_json(records: &[SweepRecord], partial: bool) -> Result<String> {
    non_empty(records)?;
    let fit_map: BTreeMap<&str, FitResult> = fits(records).into_iter().map(|(q, f)| (q.tag(), f)).collect();
    let doc = json!({
        "schema": SCHEMA_VERSION,
        "partial": partial,
        "records": records,
        "fits": fit_map,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// One data path per quantity over `(ln n, value)`, plus a dashed path for
/// its fit when one exists. Fits need `n ≥ 2`, so `n = 1` points are drawn
/// but not fitted.
pub fn to_svg(records: &[SweepRecord]) -> Result<String> {
    non_empty(records)?;
    let groups = by_quantity(records);
    let fit_map = fits(records);
    let xs: Vec<f64> = records.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}"/></g>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">ln n ({x0:.3} to {x1:.3})</text>"#,
        W / 2.0,
        H - 15.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">value ({y0:.4} to {y1:.4})</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    for (i, (q, rs)) in groups.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let d = path(rs.iter().map(|r| (px((r.n as f64).ln()), py(r.value))));
        writeln!(s, r#"<path class="data" data-quantity="{q}" d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#).unwrap();
        if let Some(f) = fit_map.get(q) {
            let lo = rs.iter().map(|r| r.n).filter(|&n| n >= 2).min().unwrap_or(2) as f64;
            let hi = rs.iter().map(|r| r.n).max().unwrap_or(2) as f64;
            let curve = (0..=64).map(|k| {
                let ln_n = lo.ln() + (hi.ln() - lo.ln()) * k as f64 / 64.0;
                (px(ln_n), py(f.predict(ln_n.exp())))
            });
            writeln!(
                s,
                r#"<path class="fit" data-quantity="{q}" d="{}" fill="none" stroke="{color}" stroke-width="1" stroke-dasharray="4 3"/>"#,
                path(curve)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{q}</text>"#,
            W - MARGIN - 80.0,
            MARGIN + 15.0 * i as f64
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn path(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.enumerate() {
        write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" }).unwrap();
    }
    d.trim_end().to_string()
}

pub fn render(records: &[SweepRecord], format: Format, partial: bool) -> Result<String> {
    match format {
        Format::Csv => to_csv(records),
        Format::Json => to_json(records, partial),
        Format::Svg => to_svg(records),
    }
}

/// Renders and writes in one step; nothing is written when rendering fails.
pub fn emit(records: &[SweepRecord], format: Format, partial: bool, path: &Path) -> Result<()> {
    let body = render(records, format, partial)?;
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::RecordDirection;

    fn rec(n: usize, value: f64) -> SweepRecord {
        SweepRecord {
            quantity: Quantity::Phi,
            n,
            value,
            direction: RecordDirection::Lower,
            seed: 7,
            wall_time_ms: 3,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[rec(4, 0.5)]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec![CSV_HEADER, "phi,4,0.5,lower,7,3"]);
        assert!(to_csv(&[]).is_err());
    }

    #[test]
    fn json_has_schema() {
        let v: serde_json::Value = serde_json::from_str(&to_json(&[rec(4, 0.5)], false).unwrap()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["records"][0]["direction"], "lower");
    }

    #[test]
    fn svg_paths() {
        let rs: Vec<SweepRecord> = (2..7).map(|e| rec(1 << e, (e as f64).powi(2))).collect();
        let svg = to_svg(&rs).unwrap();
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(!svg.contains("href"));
    }
}
