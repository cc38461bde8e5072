//! NME aggregation and report files (CSV and SVG).

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::viewgen::csv_err;

/// Width of the yaw buckets in degrees.
pub const BUCKET_DEG: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NmeRow {
    pub id: String,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    /// `None` when the pair failed; see `flags`.
    pub nme: Option<f64>,
    pub aligned: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YawBucket {
    pub lo: f64,
    pub hi: f64,
    /// All rows in the bucket, including failed ones.
    pub count: usize,
    /// Rows with a value.
    pub valid: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmeReport {
    /// Sorted by id.
    pub rows: Vec<NmeRow>,
    pub mean: f64,
    pub median: f64,
    pub buckets: Vec<YawBucket>,
    /// `(threshold, fraction of rows with nme ≤ threshold)`, thresholds ascending.
    pub curve: Vec<(f64, f64)>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

impl NmeReport {
    pub fn from_rows(mut rows: Vec<NmeRow>) -> Self {
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let mut values: Vec<f64> = rows.iter().filter_map(|r| r.nme).collect();
        values.sort_by(f64::total_cmp);
        let (mean, _) = mean_std(&values);

        let mut keys: Vec<i64> = rows
            .iter()
            .map(|r| (r.yaw_deg / BUCKET_DEG).floor() as i64)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let buckets = keys
            .into_iter()
            .map(|k| {
                let lo = k as f64 * BUCKET_DEG;
                let members: Vec<&NmeRow> = rows
                    .iter()
                    .filter(|r| (r.yaw_deg / BUCKET_DEG).floor() as i64 == k)
                    .collect();
                let vals: Vec<f64> = members.iter().filter_map(|r| r.nme).collect();
                let (m, s) = mean_std(&vals);
                YawBucket {
                    lo,
                    hi: lo + BUCKET_DEG,
                    count: members.len(),
                    valid: vals.len(),
                    mean: m,
                    std: s,
                }
            })
            .collect();

        let n = values.len() as f64;
        let mut curve: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match curve.last_mut() {
                Some(last) if last.0 == v => last.1 = frac,
                _ => curve.push((v, frac)),
            }
        }

        NmeReport {
            mean,
            median: median(&values),
            buckets,
            curve,
            rows,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.rows.iter().filter(|r| r.nme.is_some()).count()
    }

    /// Mean NME of rows with `lo ≤ |yaw| < hi`, for each consecutive pair of
    /// `edges`.
    pub fn abs_yaw_means(&self, edges: &[f64]) -> Vec<f64> {
        edges
            .windows(2)
            .map(|w| {
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.yaw_deg.abs() >= w[0] && r.yaw_deg.abs() < w[1])
                    .filter_map(|r| r.nme)
                    .collect();
                mean_std(&vals).0
            })
            .collect()
    }

    pub fn write_rows_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["id", "yaw_deg", "pitch_deg", "nme", "aligned", "flags"])
            .map_err(csv_err)?;
        for r in &self.rows {
            wr.write_record([
                r.id.clone(),
                r.yaw_deg.to_string(),
                r.pitch_deg.to_string(),
                r.nme.map(|v| v.to_string()).unwrap_or_default(),
                r.aligned.to_string(),
                r.flags.join(";"),
            ])
            .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Error::io("rows csv", e))
    }

    pub fn read_rows_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::format("nme rows", e.to_string()));
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 6 {
                return Err(Error::format("nme rows", "expected 6 columns"));
            }
            rows.push(NmeRow {
                id: rec[0].to_string(),
                yaw_deg: num(&rec[1])?,
                pitch_deg: num(&rec[2])?,
                nme: if rec[3].is_empty() { None } else { Some(num(&rec[3])?) },
                aligned: rec[4] == *"true",
                flags: if rec[5].is_empty() {
                    Vec::new()
                } else {
                    rec[5].split(';').map(String::from).collect()
                },
            });
        }
        Ok(Self::from_rows(rows))
    }

    pub fn write_aggregate_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["scope", "lo_deg", "hi_deg", "count", "valid", "mean", "median", "std"])
            .map_err(csv_err)?;
        wr.write_record([
            "all".to_string(),
            String::new(),
            String::new(),
            self.rows.len().to_string(),
            self.valid_count().to_string(),
            self.mean.to_string(),
            self.median.to_string(),
            String::new(),
        ])
        .map_err(csv_err)?;
        for b in &self.buckets {
            wr.write_record([
                "yaw".to_string(),
                b.lo.to_string(),
                b.hi.to_string(),
                b.count.to_string(),
                b.valid.to_string(),
                b.mean.to_string(),
                String::new(),
                b.std.to_string(),
            ])
            .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| Error::io("aggregate csv", e))
    }

    /// Bar chart of mean NME (percent) per yaw bucket.
    pub fn bucket_svg(&self) -> String {
        let bars: Vec<(String, f64)> = self
            .buckets
            .iter()
            .map(|b| (format!("[{}, {})", b.lo, b.hi), if b.mean.is_finite() { b.mean * 100.0 } else { 0.0 }))
            .collect();
        bar_chart_svg("NME per yaw bucket", "yaw (deg)", "NME (%)", &bars)
    }

    /// Cumulative curve: fraction of images (percent) against NME (percent).
    pub fn curve_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self.curve.iter().map(|&(t, f)| (t * 100.0, f * 100.0)).collect();
        line_chart_svg("NME vs % images", "NME (%)", "% images", &[("nme", &pts)])
    }

    /// Writes `rows.csv`, `aggregate.csv`, `nme_by_yaw.svg` and `nme_curve.svg`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let file = |name: &str| {
            let p = dir.join(name);
            std::fs::File::create(&p).map_err(|e| Error::io(p, e))
        };
        self.write_rows_csv(file("rows.csv")?)?;
        self.write_aggregate_csv(file("aggregate.csv")?)?;
        let write_text = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        write_text("nme_by_yaw.svg", self.bucket_svg())?;
        write_text("nme_curve.svg", self.curve_svg())
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;

fn svg_header(title: &str, xlabel: &str, ylabel: &str, out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        W / 2.0,
        H - 12.0,
        xml_escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        xml_escape(ylabel)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} L{PAD} {} L{} {}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_max(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&m| m >= v)
        .unwrap_or(10.0 * mag)
}

/// Self-contained bar chart; the data table is embedded as a comment.
pub fn bar_chart_svg(title: &str, xlabel: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let mut out = String::new();
    svg_header(title, xlabel, ylabel, &mut out);
    out.push_str("<!-- data\nlabel,value\n");
    for (l, v) in bars {
        let _ = writeln!(out, "{},{}", xml_escape(l), v);
    }
    out.push_str("-->\n");
    let ymax = nice_max(bars.iter().map(|b| b.1).fold(0.0, f64::max));
    let plot_w = W - 2.0 * PAD;
    let plot_h = H - 2.0 * PAD;
    let slot = plot_w / bars.len().max(1) as f64;
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
        PAD - 4.0,
        PAD + 4.0,
        ymax
    );
    for (i, (label, v)) in bars.iter().enumerate() {
        let bh = (v / ymax).clamp(0.0, 1.0) * plot_h;
        let x = PAD + i as f64 * slot + 0.1 * slot;
        let _ = writeln!(
            out,
            r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="#4a7ab5"/>"##,
            H - PAD - bh,
            0.8 * slot
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="9">{}</text>"#,
            x + 0.4 * slot,
            H - PAD + 14.0,
            xml_escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Self-contained multi-series line chart; the data is embedded as a comment.
pub fn line_chart_svg(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, &[(f64, f64)])]) -> String {
    let mut out = String::new();
    svg_header(title, xlabel, ylabel, &mut out);
    out.push_str("<!-- data\nseries,x,y\n");
    for (name, pts) in series {
        for (x, y) in pts.iter() {
            let _ = writeln!(out, "{},{},{}", xml_escape(name), x, y);
        }
    }
    out.push_str("-->\n");
    let all = series.iter().flat_map(|s| s.1.iter());
    let xmax = nice_max(all.clone().map(|p| p.0).fold(0.0, f64::max));
    let ymax = nice_max(all.map(|p| p.1).fold(0.0, f64::max));
    let colors = ["#4a7ab5", "#c0504d", "#9bbb59", "#8064a2", "#f79646"];
    let plot_w = W - 2.0 * PAD;
    let plot_h = H - 2.0 * PAD;
    for (si, (name, pts)) in series.iter().enumerate() {
        let mut d = String::new();
        for (k, (x, y)) in pts.iter().enumerate() {
            let px = PAD + (x / xmax).clamp(0.0, 1.0) * plot_w;
            let py = H - PAD - (y / ymax).clamp(0.0, 1.0) * plot_h;
            let _ = write!(d, "{}{px:.2} {py:.2} ", if k == 0 { "M" } else { "L" });
        }
        let color = colors[si % colors.len()];
        let _ = writeln!(out, r#"<path d="{}" stroke="{color}" fill="none" stroke-width="2"/>"#, d.trim_end());
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - PAD + 4.0,
            PAD + 14.0 * si as f64,
            xml_escape(name)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
        PAD - 4.0,
        PAD + 4.0,
        ymax,
        W - PAD,
        H - PAD + 14.0,
        xmax
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, yaw: f64, nme: Option<f64>) -> NmeRow {
        NmeRow {
            id: id.into(),
            yaw_deg: yaw,
            pitch_deg: 0.0,
            nme,
            aligned: true,
            flags: vec![],
        }
    }

    #[test]
    fn bucket_populations() {
        let rows = [-25.0, -15.0, 5.0, 5.0, 44.0]
            .iter()
            .enumerate()
            .map(|(i, &y)| row(&format!("{i}"), y, Some(0.01)))
            .collect();
        let r = NmeReport::from_rows(rows);
        let got: Vec<(f64, f64, usize)> = r.buckets.iter().map(|b| (b.lo, b.hi, b.count)).collect();
        assert_eq!(
            got,
            vec![(-30.0, -20.0, 1), (-20.0, -10.0, 1), (0.0, 10.0, 2), (40.0, 50.0, 1)]
        );
        assert_eq!(r.buckets.iter().map(|b| b.count).sum::<usize>(), 5);
    }

    #[test]
    fn mean_and_median_of_offsets() {
        let r = NmeReport::from_rows(vec![row("a", 0.0, Some(0.01)), row("b", 0.0, Some(0.03)), row("c", 0.0, Some(0.02))]);
        assert!((r.mean - 0.02).abs() < 1e-15);
        assert_eq!(r.median, 0.02);
        assert_eq!(r.curve, vec![(0.01, 1.0 / 3.0), (0.02, 2.0 / 3.0), (0.03, 1.0)]);
    }

    #[test]
    fn zero_errors_give_flat_curve() {
        let r = NmeReport::from_rows(vec![row("a", 0.0, Some(0.0)), row("b", 10.0, Some(0.0))]);
        assert_eq!(r.curve, vec![(0.0, 1.0)]);
    }

    #[test]
    fn failed_rows_are_counted_but_not_averaged() {
        let r = NmeReport::from_rows(vec![row("a", 0.0, Some(0.02)), row("b", 1.0, None)]);
        assert_eq!(r.mean, 0.02);
        assert_eq!(r.buckets[0].count, 2);
        assert_eq!(r.buckets[0].valid, 1);
    }

    #[test]
    fn rows_csv_round_trip() {
        let mut failed = row("b", -30.0, None);
        failed.flags = vec!["proxy_d".into(), "error:io".into()];
        let r = NmeReport::from_rows(vec![row("a", 12.5, Some(0.0123)), failed]);
        let mut buf = Vec::new();
        r.write_rows_csv(&mut buf).unwrap();
        assert_eq!(NmeReport::read_rows_csv(buf.as_slice()).unwrap().rows, r.rows);
    }

    #[test]
    fn svg_embeds_data() {
        let r = NmeReport::from_rows(vec![row("a", 12.0, Some(0.02))]);
        let svg = r.bucket_svg();
        assert!(svg.starts_with("<svg") && svg.contains("[10, 20),2"));
        assert!(r.curve_svg().contains("nme,2,100"));
    }
}
