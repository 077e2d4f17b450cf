use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Format;
use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t_us,qubit,observable,value,stderr,solver";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t_us: f64,
    pub qubit: Option<usize>,
    pub observable: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub solver: String,
}

/// Long-format result rows, one value per (time, qubit, observable).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    rows: Vec<Row>,
}

fn plain_field(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '"', '\n', '\r'])
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        let finite = row.t_us.is_finite() && row.value.is_finite() && row.stderr.is_none_or(f64::is_finite);
        if !finite {
            return Err(Error::NumericalFailure(format!(
                "non-finite result for `{}` at t = {}",
                row.observable, row.t_us
            )));
        }
        if !plain_field(&row.observable) || !plain_field(&row.solver) {
            return Err(Error::Config(format!("invalid column label `{}`", row.observable)));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Append every column of `series`, naming each observable
    /// `label` or `label|suffix`.
    pub fn push_series(&mut self, series: &TimeSeries, solver: &str, suffix: Option<&str>) -> Result<()> {
        for col in &series.columns {
            let observable = match suffix {
                Some(s) => format!("{}|{s}", col.label),
                None => col.label.clone(),
            };
            for (k, (&t, &v)) in series.times.iter().zip(&col.values).enumerate() {
                self.push(Row {
                    t_us: t,
                    qubit: col.qubit,
                    observable: observable.clone(),
                    value: v,
                    stderr: col.stderr.as_ref().map(|s| s[k]),
                    solver: solver.to_string(),
                })?;
            }
        }
        Ok(())
    }

    pub fn append(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    /// Final value of `(qubit, observable)`.
    pub fn final_value(&self, qubit: Option<usize>, observable: &str) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.qubit == qubit && r.observable == observable)
            .map(|r| r.value)
    }

    /// `(times, values)` of one series in row order.
    pub fn series(&self, qubit: Option<usize>, observable: &str) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| r.qubit == qubit && r.observable == observable)
            .map(|r| (r.t_us, r.value))
            .unzip()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let qubit = r.qubit.map(|q| q.to_string()).unwrap_or_default();
            let stderr = r.stderr.map(|s| format!("{s:?}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:?},{qubit},{},{:?},{stderr},{}",
                r.t_us, r.observable, r.value, r.solver
            );
        }
        out
    }

    /// Distinct `(qubit, observable)` pairs in order of first appearance.
    pub fn keys(&self) -> Vec<(Option<usize>, String)> {
        let mut keys: Vec<(Option<usize>, String)> = Vec::new();
        for r in &self.rows {
            if !keys.iter().any(|(q, o)| *q == r.qubit && *o == r.observable) {
                keys.push((r.qubit, r.observable.clone()));
            }
        }
        keys
    }

    /// Static line plot with one polyline per `(qubit, observable)` pair.
    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 500.0;
        const LEFT: f64 = 70.0;
        const RIGHT: f64 = 220.0;
        const TOP: f64 = 20.0;
        const BOTTOM: f64 = 50.0;
        const COLORS: [&str; 8] = [
            "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
        ];
        let bounds = |f: fn(&Row) -> f64| {
            let (lo, hi) = self
                .rows
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = bounds(|r| r.t_us);
        let (y0, y1) = bounds(|r| r.value);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for (k, (q, obs)) in self.keys().iter().enumerate() {
            let (ts, vs) = self.series(*q, obs);
            let pts: Vec<String> = ts
                .iter()
                .zip(&vs)
                .map(|(&t, &v)| format!("{:.2},{:.2}", px(t), py(v)))
                .collect();
            let color = COLORS[k % COLORS.len()];
            let label = match q {
                Some(q) => format!("q{q} {obs}"),
                None => obs.clone(),
            };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                escape(&label)
            );
            let ly = TOP + 10.0 + 16.0 * k as f64;
            let lx = W - RIGHT + 15.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 25.0,
                ly + 4.0,
                escape(&label)
            );
        }
        for (v, x) in [(x0, LEFT), (x1, LEFT + pw)] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
                TOP + ph + 16.0,
                tick(v)
            );
        }
        for (v, y) in [(y0, TOP + ph), (y1, TOP)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">t (μs)</text>"#,
            LEFT + pw / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">expectation value</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0
        );
        s.push_str("</svg>\n");
        s
    }

    /// Write `<dir>/<stem>.csv` (always) and `<stem>.svg` when requested.
    pub fn write(&self, dir: &Path, stem: &str, formats: &[Format]) -> Result<Vec<PathBuf>> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, self.to_csv()).map_err(io(&csv))?;
        written.push(csv);
        if formats.contains(&Format::Svg) {
            let svg = dir.join(format!("{stem}.svg"));
            fs::write(&svg, self.to_svg()).map_err(io(&svg))?;
            written.push(svg);
        }
        Ok(written)
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
