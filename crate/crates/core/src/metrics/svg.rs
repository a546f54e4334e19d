//! Minimal standalone SVG charts.

use std::fmt::Write as _;

use super::KpiBundle;
use crate::types::Mode;

const COLORS: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759"];

fn label(b: &KpiBundle) -> String {
    format!("{} ({})", b.fleet_size, if b.taste { "on" } else { "off" })
}

/// Stacked horizontal bars of the modal split, one bar per run.
pub fn modal_split_chart(bundles: &[KpiBundle]) -> String {
    let (left, bar_w, bar_h, gap) = (110.0, 500.0, 22.0, 8.0);
    let height = 60.0 + bundles.len() as f64 * (bar_h + gap) + 40.0;
    let width = left + bar_w + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">Modal split by fleet size</text>"#);
    for (i, b) in bundles.iter().enumerate() {
        let y = 40.0 + i as f64 * (bar_h + gap);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, y + bar_h * 0.7, label(b));
        let mut x = left;
        for (k, m) in Mode::ALL.iter().enumerate() {
            let w = b.modal_shares.get(m).copied().unwrap_or(0.0) * bar_w;
            if w > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{bar_h}" fill="{}"><title>{} {:.1}%</title></rect>"#,
                    COLORS[k],
                    m.as_str(),
                    w / bar_w * 100.0
                );
            }
            x += w;
        }
    }
    let ly = 50.0 + bundles.len() as f64 * (bar_h + gap);
    for (k, m) in Mode::ALL.iter().enumerate() {
        let x = left + k as f64 * 110.0;
        let _ = writeln!(s, r#"<rect x="{x}" y="{ly}" width="12" height="12" fill="{}"/>"#, COLORS[k]);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 16.0, ly + 10.0, m.as_str());
    }
    s.push_str("</svg>\n");
    s
}

/// Hour-by-run heatmap of in-service rates with the value printed in each cell.
pub fn in_service_heatmap(bundles: &[KpiBundle]) -> String {
    let (left, top, cw, ch) = (110.0, 40.0, 34.0, 24.0);
    let width = left + 24.0 * cw + 20.0;
    let height = top + bundles.len() as f64 * ch + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">Hourly in-service rate</text>"#);
    for h in 0..24 {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{h}</text>"#, left + (h as f64 + 0.5) * cw, top - 6.0);
    }
    for (i, b) in bundles.iter().enumerate() {
        let y = top + i as f64 * ch;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, y + ch * 0.65, label(b));
        for (h, r) in b.hourly_in_service.iter().enumerate() {
            let shade = (255.0 * (1.0 - r.clamp(0.0, 1.0))).round() as u8;
            let x = left + h as f64 * cw;
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="rgb(255,{shade},{shade})" stroke="#ddd"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{:.0}</text>"#,
                x + cw / 2.0,
                y + ch * 0.65,
                r * 100.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
