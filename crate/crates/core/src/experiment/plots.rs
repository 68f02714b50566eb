use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::report::CellArtifacts;
use crate::experiment::{architecture_index, feature_index};
use crate::features::FeatureKind;
use crate::models::ArchitectureKind;
use crate::train_eval::{class_names, ConfusionMatrix, EpochLog};

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Panel order of the per-model confusion figure: two rows of three.
pub const PANEL_ORDER: [FeatureKind; 6] = [
    FeatureKind::Filterbank,
    FeatureKind::Chroma,
    FeatureKind::Melspec,
    FeatureKind::Mfcc13,
    FeatureKind::Mfcc40,
    FeatureKind::Mfcc20,
];

/// Which epoch-log column a curve shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMetric {
    ValAccuracy,
    ValLoss,
}

impl CurveMetric {
    pub fn file_stem(self) -> &'static str {
        match self {
            CurveMetric::ValAccuracy => "val_accuracy",
            CurveMetric::ValLoss => "val_loss",
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            CurveMetric::ValAccuracy => "Validation accuracy",
            CurveMetric::ValLoss => "Validation loss",
        }
    }

    pub fn value(self, log: &EpochLog) -> f64 {
        match self {
            CurveMetric::ValAccuracy => log.val_accuracy,
            CurveMetric::ValLoss => log.val_loss,
        }
    }
}

/// One row of a curve table.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurvePoint {
    pub series: String,
    pub epoch: usize,
    pub value: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn curve_table(series: &[(String, Vec<EpochLog>)], metric: CurveMetric) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (name, logs) in series {
        for log in logs {
            w.serialize(CurvePoint { series: name.clone(), epoch: log.epoch, value: metric.value(log) })
                .map_err(|e| Error::Data(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parses a curve table written next to (or embedded in) a curve plot.
pub fn parse_curve_table(text: &str) -> Result<Vec<CurvePoint>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<CurvePoint>, _>>()
        .map_err(|e| Error::Data(format!("curve table: {e}")))
}

/// The numeric table inside an SVG written by this module.
pub fn embedded_table(svg: &str) -> Option<&str> {
    let start = svg.find("<![CDATA[")? + "<![CDATA[".len();
    let end = start + svg[start..].find("]]>")?;
    Some(svg[start..end].trim_start_matches('\n'))
}

/// Line chart of `metric` against epoch, one line per series. The
/// underlying table is embedded as CSV in the SVG metadata.
pub fn curve_svg(title: &str, series: &[(String, Vec<EpochLog>)], metric: CurveMetric) -> Result<String> {
    let table = curve_table(series, metric)?;
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 55.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let points: Vec<(usize, f64)> =
        series.iter().flat_map(|(_, l)| l.iter().map(move |e| (e.epoch, metric.value(e)))).collect();
    let max_epoch = points.iter().map(|p| p.0).max().unwrap_or(1).max(1) as f64;
    let (mut lo, mut hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if metric == CurveMetric::ValAccuracy {
        lo = lo.min(0.0);
        hi = hi.max(1.0);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let x_of = |e: f64| left + if max_epoch > 1.0 { (e - 1.0) / (max_epoch - 1.0) * pw } else { pw / 2.0 };
    let y_of = |v: f64| top + ph - (v - lo) / (hi - lo) * ph;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, "<metadata id=\"data\"><![CDATA[\n{table}]]></metadata>").unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title)).unwrap();
    writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
    for i in 0..=5 {
        let v = lo + (hi - lo) * i as f64 / 5.0;
        let y = y_of(v);
        writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, left + pw).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, left - 6.0, y + 4.0).unwrap();
    }
    let step = (max_epoch / 10.0).ceil().max(1.0) as usize;
    for e in (1..=max_epoch as usize).step_by(step) {
        let x = x_of(e as f64);
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{e}</text>"#, top + ph + 18.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">Epoch</text>"#, left + pw / 2.0, h - 12.0).unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        metric.axis_label()
    )
    .unwrap();
    for (i, (name, logs)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> =
            logs.iter().map(|l| format!("{:.2},{:.2}", x_of(l.epoch as f64), y_of(metric.value(l)))).collect();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" ")).unwrap();
        for l in logs {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, x_of(l.epoch as f64), y_of(metric.value(l))).unwrap();
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Confusion matrix as a CSV grid: header `true\pred,<names>`, one row per true class.
pub fn confusion_table(cm: &ConfusionMatrix) -> String {
    let names = class_names(cm.classes());
    let mut s = format!("true\\pred,{}\n", names.join(","));
    for (row, name) in cm.counts.iter().zip(&names) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(s, "{name},{}", cells.join(",")).unwrap();
    }
    s
}

/// Inverse of [`confusion_table`].
pub fn parse_confusion_table(text: &str) -> Result<ConfusionMatrix> {
    let counts = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .skip(1)
                .map(|v| v.trim().parse::<u64>().map_err(|_| Error::Data(format!("bad count `{v}`"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if counts.iter().any(|r| r.len() != counts.len()) {
        return Err(Error::Data("confusion table is not square".into()));
    }
    Ok(ConfusionMatrix { counts })
}

/// Heat grid of one matrix placed at (`x`, `y`), without the SVG envelope.
fn heat_grid(s: &mut String, cm: &ConfusionMatrix, title: &str, x: f64, y: f64, cell: f64) {
    let names = class_names(cm.classes());
    let max = cm.counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let label_w = 70.0;
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, x + label_w + cell * names.len() as f64 / 2.0, y + 14.0, escape(title)).unwrap();
    let gy = y + 40.0;
    for (j, name) in names.iter().enumerate() {
        let cx = x + label_w + cell * (j as f64 + 0.5);
        writeln!(s, r#"<text x="{cx:.2}" y="{}" text-anchor="middle" font-size="10">{name}</text>"#, gy - 6.0).unwrap();
    }
    for (i, row) in cm.counts.iter().enumerate() {
        let ry = gy + cell * i as f64;
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#, x + label_w - 4.0, ry + cell / 2.0 + 4.0, names[i]).unwrap();
        for (j, &v) in row.iter().enumerate() {
            let t = v as f64 / max;
            let shade = (255.0 * (1.0 - 0.85 * t)).round() as u8;
            let fill = format!("rgb({shade},{shade},255)");
            let text_color = if t > 0.55 { "white" } else { "black" };
            let cx = x + label_w + cell * j as f64;
            writeln!(s, r#"<rect x="{cx:.2}" y="{ry:.2}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/>"#).unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{text_color}" font-size="11">{v}</text>"#, cx + cell / 2.0, ry + cell / 2.0 + 4.0).unwrap();
        }
    }
    let n = names.len() as f64;
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">Predicted</text>"#, x + label_w + cell * n / 2.0, gy + cell * n + 16.0).unwrap();
}

fn grid_extent(cm: &ConfusionMatrix, cell: f64) -> (f64, f64) {
    let n = cm.classes() as f64;
    (70.0 + cell * n + 20.0, 40.0 + cell * n + 30.0)
}

/// One confusion matrix as a self-contained SVG with its table embedded.
pub fn confusion_svg(title: &str, cm: &ConfusionMatrix) -> String {
    let cell = 44.0;
    let (w, h) = grid_extent(cm, cell);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#).unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, "<metadata id=\"data\"><![CDATA[\n{}]]></metadata>", confusion_table(cm)).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    heat_grid(&mut s, cm, title, 0.0, 0.0, cell);
    s.push_str("</svg>\n");
    s
}

/// Up to six matrices of one model, two rows of three in [`PANEL_ORDER`].
pub fn confusion_panel_svg(title: &str, panels: &[(FeatureKind, &ConfusionMatrix)]) -> String {
    let cell = 34.0;
    let (pw, ph) = panels.first().map(|(_, cm)| grid_extent(cm, cell)).unwrap_or((300.0, 250.0));
    let (w, h) = (3.0 * pw, 2.0 * ph + 40.0);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#).unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    let mut table = String::new();
    for (f, cm) in panels {
        writeln!(table, "# {}", f.display_name()).unwrap();
        table.push_str(&confusion_table(cm));
    }
    writeln!(s, "<metadata id=\"data\"><![CDATA[\n{table}]]></metadata>").unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(title)).unwrap();
    for (slot, kind) in PANEL_ORDER.iter().enumerate() {
        if let Some((_, cm)) = panels.iter().find(|(f, _)| f == kind) {
            let letter = (b'a' + slot as u8) as char;
            let (x, y) = ((slot % 3) as f64 * pw, 40.0 + (slot / 3) as f64 * ph);
            heat_grid(&mut s, cm, &format!("({letter}) {}", kind.display_name()), x, y, cell);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text)?;
    written.push(path);
    Ok(())
}

/// Writes validation curves per architecture (one line per feature kind),
/// a confusion heat grid per cell and a six-panel confusion figure per
/// architecture. Every SVG has a CSV twin. Returns the files written.
pub fn emit_plots(dir: &Path, cells: &[CellArtifacts]) -> Result<Vec<PathBuf>> {
    if cells.is_empty() || cells.iter().all(|c| c.logs.is_empty()) {
        return Err(Error::Argument("no epoch logs to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut ordered: Vec<&CellArtifacts> = cells.iter().collect();
    ordered.sort_by_key(|c| (architecture_index(c.summary.architecture), feature_index(c.summary.feature)));
    let mut written = Vec::new();

    for arch in ArchitectureKind::ALL {
        let mine: Vec<&&CellArtifacts> = ordered.iter().filter(|c| c.summary.architecture == arch).collect();
        if mine.is_empty() {
            continue;
        }
        let series: Vec<(String, Vec<EpochLog>)> =
            mine.iter().map(|c| (c.summary.feature.display_name().to_string(), c.logs.clone())).collect();
        for metric in [CurveMetric::ValAccuracy, CurveMetric::ValLoss] {
            let stem = format!("{}_{}", metric.file_stem(), arch.id());
            let title = format!("{} of {} per feature", metric.axis_label(), arch.display_name());
            write(dir.join(format!("{stem}.svg")), &curve_svg(&title, &series, metric)?, &mut written)?;
            write(dir.join(format!("{stem}.csv")), &curve_table(&series, metric)?, &mut written)?;
        }
        for c in &mine {
            let stem = format!("confusion_{}_{}", c.summary.feature.id(), arch.id());
            let title = format!("{} + {}", arch.display_name(), c.summary.feature.display_name());
            write(dir.join(format!("{stem}.svg")), &confusion_svg(&title, &c.confusion), &mut written)?;
            write(dir.join(format!("{stem}.csv")), &confusion_table(&c.confusion), &mut written)?;
        }
        let panels: Vec<(FeatureKind, &ConfusionMatrix)> =
            mine.iter().map(|c| (c.summary.feature, &c.confusion)).collect();
        let title = format!("Confusion matrices of {}", arch.display_name());
        write(dir.join(format!("confusion_panel_{}.svg", arch.id())), &confusion_panel_svg(&title, &panels), &mut written)?;
    }
    Ok(written)
}
