use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Value, json};

use crate::config::{Format, RunConfig};

/// A JSON number, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write_table(
    cfg: &RunConfig,
    summary: &Value,
    table: &Table,
    out: Option<&Path>,
) -> io::Result<()> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    match cfg.format {
        Format::Csv => {
            writeln!(w, "# config: {}", serde_json::to_string(cfg)?)?;
            if !summary.is_null() {
                writeln!(w, "# summary: {summary}")?;
            }
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(&table.columns)?;
            for r in &table.rows {
                c.write_record(r.iter().map(cell))?;
            }
            c.flush()?;
        }
        Format::Json => {
            let doc = json!({
                "config": cfg,
                "summary": summary,
                "columns": table.columns,
                "rows": table.rows,
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

/// One panel of an SVG figure: a title and named polylines.
pub struct Panel {
    pub title: String,
    pub x_label: &'static str,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Keeps the lowest and highest point of every bucket, so a
/// long series keeps its envelope.
pub fn thin(points: &[(f64, f64)], buckets: usize) -> Vec<(f64, f64)> {
    if points.len() <= 2 * buckets {
        return points.to_vec();
    }
    let size = points.len().div_ceil(buckets);
    let mut out = Vec::with_capacity(2 * buckets + 2);
    for chunk in points.chunks(size) {
        let lo = chunk.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let hi = chunk.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        if lo.0 <= hi.0 {
            out.extend([*lo, *hi]);
        } else {
            out.extend([*hi, *lo]);
        }
    }
    out.dedup();
    out
}

pub fn write_svg(path: &Path, panels: &[Panel]) -> io::Result<()> {
    let total_w = W * panels.len() as f64;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{H}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    for (i, p) in panels.iter().enumerate() {
        let x0 = i as f64 * W;
        let finite = p
            .series
            .iter()
            .flat_map(|(_, pts)| pts.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut xl, mut xh, mut yl, mut yh) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in finite {
            xl = xl.min(x);
            xh = xh.max(x);
            yl = yl.min(y);
            yh = yh.max(y);
        }
        if xl > xh {
            (xl, xh, yl, yh) = (0.0, 1.0, 0.0, 1.0);
        }
        if xh == xl {
            xh = xl + 1.0;
        }
        if yh == yl {
            yh = yl + 1.0;
        }
        let sx = |x: f64| x0 + PAD + (x - xl) / (xh - xl) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - yl) / (yh - yl) * (H - 2.0 * PAD);
        s += &format!(
            "<rect x=\"{}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
            x0 + PAD,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        s += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            x0 + W / 2.0,
            PAD / 2.0,
            escape(&p.title)
        );
        s += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            x0 + W / 2.0,
            H - 8.0,
            p.x_label
        );
        for (v, y) in [(yl, H - PAD), (yh, PAD + 10.0)] {
            s += &format!("<text x=\"{}\" y=\"{y}\">{v:.3}</text>\n", x0 + 2.0);
        }
        for (k, (name, pts)) in p.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let coords: Vec<String> = pts
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            s += &format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>\n",
                coords.join(" ")
            );
            s += &format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
                x0 + W - PAD - 80.0,
                PAD + 14.0 * (k + 1) as f64,
                escape(name)
            );
        }
    }
    s += "</svg>\n";
    std::fs::write(path, s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
