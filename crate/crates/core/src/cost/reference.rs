//! Published figures of other LSTM platforms, reported next to the estimate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::CostReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferencePlatform {
    pub name: String,
    pub technology: String,
    pub citation: String,
    pub array_size: Option<String>,
    pub precision_bits: Option<u32>,
    pub throughput_gops: f64,
    pub power_w: f64,
    pub computing_efficiency: f64,
    pub area_mm2: Option<f64>,
    pub area_efficiency: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn row(
    name: &str,
    technology: &str,
    citation: &str,
    array_size: Option<&str>,
    precision_bits: Option<u32>,
    throughput_gops: f64,
    power_w: f64,
    computing_efficiency: f64,
    area_mm2: Option<f64>,
    area_efficiency: Option<f64>,
) -> ReferencePlatform {
    ReferencePlatform {
        name: name.into(),
        technology: technology.into(),
        citation: citation.into(),
        array_size: array_size.map(Into::into),
        precision_bits,
        throughput_gops,
        power_w,
        computing_efficiency,
        area_mm2,
        area_efficiency,
    }
}

pub fn reference_platforms() -> Vec<ReferencePlatform> {
    vec![
        row("Nvidia Jetson AGX Xavier", "GPU", "Nvidia inference benchmarks, 2018", None, Some(16), 3478.0, 15.0, 231.0, Some(8700.0), Some(0.399)),
        row("ESE", "FPGA", "Han et al., FPGA 2017", None, Some(12), 282.0, 41.0, 6.88, None, None),
        row("Tianjic", "ASIC", "Pei et al., Nature 2019", None, Some(8), 1214.0, 0.95, 1278.0, Some(14.44), Some(84.0)),
        row("IBM RPU", "NVM", "Gokmen et al., arXiv:1806.00166", Some("4096x4096"), None, 84000.0, 6.0, 14166.0, Some(8.04), Some(10477.0)),
        row("RRAM PIM", "NVM", "Long et al., IEEE TVLSI 2018", Some("128x128"), Some(16), 108.4, 0.932, 116.3, Some(0.39), Some(277.0)),
    ]
}

struct Line {
    name: String,
    technology: String,
    array: String,
    precision: String,
    throughput: String,
    power: String,
    ce: String,
    area: String,
    ae: String,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "N/A".to_string(), |v| v.to_string())
}

fn lines(report: &CostReport) -> Vec<Line> {
    let mut out: Vec<Line> = report
        .comparison
        .iter()
        .map(|r| Line {
            name: r.name.clone(),
            technology: r.technology.clone(),
            array: opt(r.array_size.clone()),
            precision: opt(r.precision_bits),
            throughput: r.throughput_gops.to_string(),
            power: r.power_w.to_string(),
            ce: r.computing_efficiency.to_string(),
            area: opt(r.area_mm2),
            ae: opt(r.area_efficiency),
        })
        .collect();
    let p = &report.params;
    out.push(Line {
        name: "This work".into(),
        technology: "NVM".into(),
        array: format!("{}x{}", p.rows, p.cols),
        precision: p.adc_bits.to_string(),
        throughput: format!("{:.0}", report.overall_throughput.0),
        power: format!("{:.3}", report.power.total.0),
        ce: format!("{:.0}", report.computing_efficiency),
        area: format!("{:.3}", report.area.total.mm2()),
        ae: format!("{:.0}", report.area_efficiency),
    });
    out
}

const HEADER: [&str; 9] = [
    "platform",
    "technology",
    "array_size",
    "precision_bits",
    "throughput_gops",
    "power_w",
    "computing_efficiency_gops_per_w",
    "area_mm2",
    "area_efficiency_gops_per_mm2",
];

/// Comparison table as CSV, one platform per row, the estimate last.
pub fn render_comparison_csv(report: &CostReport) -> String {
    let mut s = HEADER.join(",");
    s.push('\n');
    for l in lines(report) {
        let cells = [&l.name, &l.technology, &l.array, &l.precision, &l.throughput, &l.power, &l.ce, &l.area, &l.ae];
        let quoted: Vec<String> =
            cells.iter().map(|c| if c.contains(',') { format!("\"{c}\"") } else { c.to_string() }).collect();
        s.push_str(&quoted.join(","));
        s.push('\n');
    }
    s
}

/// Comparison table transposed like a printed benchmark table: one column per platform.
pub fn render_comparison_text(report: &CostReport) -> String {
    let ls = lines(report);
    let labels = [
        "Technology",
        "Array size",
        "Precision (bit)",
        "Throughput (GOP/s)",
        "Power (W)",
        "Computing efficiency (GOP/s/W)",
        "Area (mm^2)",
        "Area efficiency (GOP/s/mm^2)",
    ];
    let rows: Vec<Vec<&str>> = vec![
        ls.iter().map(|l| l.technology.as_str()).collect(),
        ls.iter().map(|l| l.array.as_str()).collect(),
        ls.iter().map(|l| l.precision.as_str()).collect(),
        ls.iter().map(|l| l.throughput.as_str()).collect(),
        ls.iter().map(|l| l.power.as_str()).collect(),
        ls.iter().map(|l| l.ce.as_str()).collect(),
        ls.iter().map(|l| l.area.as_str()).collect(),
        ls.iter().map(|l| l.ae.as_str()).collect(),
    ];
    let label_w = labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let col_w: Vec<usize> = (0..ls.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([ls[c].name.len()]).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    let _ = write!(s, "{:label_w$}", "");
    for (l, w) in ls.iter().zip(&col_w) {
        let _ = write!(s, "  {:>w$}", l.name);
    }
    s.push('\n');
    for (label, r) in labels.iter().zip(&rows) {
        let _ = write!(s, "{label:label_w$}");
        for (cell, w) in r.iter().zip(&col_w) {
            let _ = write!(s, "  {cell:>w$}");
        }
        s.push('\n');
    }
    s
}
