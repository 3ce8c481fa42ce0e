//! Experiment reports, CSV series and SVG plots.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub comparator: String,
    pub tolerance: f64,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FittedConstant {
    pub name: String,
    pub value: f64,
    /// Residual of the fit that produced the value (0 for direct measurements).
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Series { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// RFC-4180 style with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
        out.push_str("\r\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt17(*x)).collect();
            out.push_str(&cells.join(","));
            out.push_str("\r\n");
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs: Value,
    pub assertions: Vec<Assertion>,
    pub constants: Vec<FittedConstant>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub series: Vec<Series>,
    pub artifacts: Vec<String>,
}

impl ExperimentReport {
    pub fn new<T: Serialize>(name: &str, inputs: &T) -> Self {
        ExperimentReport {
            name: name.into(),
            inputs: serde_json::to_value(inputs).unwrap_or(Value::Null),
            assertions: vec![],
            constants: vec![],
            notes: vec![],
            series: vec![],
            artifacts: vec![],
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }

    fn push(&mut self, name: &str, passed: bool, value: f64, cmp: &str, tol: f64, note: &str) -> bool {
        self.assertions.push(Assertion {
            name: name.into(),
            passed,
            value,
            comparator: cmp.into(),
            tolerance: tol,
            note: note.into(),
        });
        passed
    }

    pub fn check_le(&mut self, name: &str, value: f64, tol: f64) -> bool {
        self.push(name, value <= tol, value, "<=", tol, "")
    }

    pub fn check_ge(&mut self, name: &str, value: f64, tol: f64) -> bool {
        self.push(name, value >= tol, value, ">=", tol, "")
    }

    pub fn check_lt(&mut self, name: &str, value: f64, tol: f64) -> bool {
        self.push(name, value < tol, value, "<", tol, "")
    }

    /// Boolean assertion; `value` records the measured quantity behind it.
    pub fn check(&mut self, name: &str, passed: bool, value: f64, note: &str) -> bool {
        self.push(name, passed, value, "holds", f64::NAN, note)
    }

    pub fn fit(&mut self, name: &str, value: f64, residual: f64) {
        self.constants.push(FittedConstant { name: name.into(), value, residual });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn absorb(&mut self, prefix: &str, other: ExperimentReport) {
        for mut a in other.assertions {
            a.name = format!("{prefix}.{}", a.name);
            self.assertions.push(a);
        }
        for mut c in other.constants {
            c.name = format!("{prefix}.{}", c.name);
            self.constants.push(c);
        }
        self.notes.extend(other.notes.into_iter().map(|n| format!("{prefix}: {n}")));
        self.series.extend(other.series);
    }

    /// JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).unwrap_or(Value::Null);
        serde_json::to_string_pretty(&v).unwrap_or_default()
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}", self.name, if self.passed() { "PASS" } else { "FAIL" });
        for a in self.failures() {
            let _ = write!(s, "\n  failed {} ({:.6e} {} {:.6e}) {}", a.name, a.value, a.comparator, a.tolerance, a.note);
        }
        s
    }
}

/// Least-squares slope and intercept of y against x, with the RMS residual.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

pub const PLOT_WIDTH: f64 = 640.0;
pub const PLOT_HEIGHT: f64 = 400.0;
pub const MAX_PLOT_POINTS: usize = 2000;

/// Min-max binning: keeps the extreme points of each bin, in order.
pub fn downsample(xs: &[f64], ys: &[f64], max_points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    if n <= max_points || max_points < 2 {
        return (xs.to_vec(), ys.to_vec());
    }
    let bins = max_points / 2;
    let mut ox = Vec::with_capacity(max_points);
    let mut oy = Vec::with_capacity(max_points);
    for b in 0..bins {
        let lo = b * n / bins;
        let hi = ((b + 1) * n / bins).max(lo + 1);
        let (mut imin, mut imax) = (lo, lo);
        for i in lo..hi {
            if ys[i] < ys[imin] {
                imin = i;
            }
            if ys[i] > ys[imax] {
                imax = i;
            }
        }
        let (a, c) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        ox.push(xs[a]);
        oy.push(ys[a]);
        if c != a {
            ox.push(xs[c]);
            oy.push(ys[c]);
        }
    }
    (ox, oy)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Axis range padded by 5% of the data range.
pub fn padded_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Line plot of (x, y) series, with optional vertical markers at given x positions.
pub fn svg_plot(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<f64>, Vec<f64>)], markers: &[(String, f64)]) -> String {
    let (w, h) = (PLOT_WIDTH, PLOT_HEIGHT);
    let (ml, mr, mt, mb) = (70.0, 20.0, 30.0, 50.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        escape(title)
    );
    let nonempty = series.iter().any(|(_, x, _)| !x.is_empty());
    if !nonempty {
        s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">no data</text>\n</svg>\n", w / 2.0, h / 2.0));
        return s;
    }
    let (x0, x1) = padded_range(series.iter().flat_map(|(_, x, _)| x.iter().copied()).chain(markers.iter().map(|m| m.1)));
    let (y0, y1) = padded_range(series.iter().flat_map(|(_, _, y)| y.iter().copied()));
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
    let _ = writeln!(
        s,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - ml - mr,
        h - mt - mb
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{:.3e}</text>", px(fx), h - mb + 15.0, fx);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\">{:.3e}</text>", ml - 4.0, py(fy) + 3.0, fy);
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>", w / 2.0, h - 10.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>",
        h / 2.0,
        h / 2.0,
        escape(ylabel)
    );
    for (k, (name, xs, ys)) in series.iter().enumerate() {
        let (dx, dy) = downsample(xs, ys, MAX_PLOT_POINTS);
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = dx.iter().zip(&dy).filter(|(_, y)| y.is_finite()).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", pts.join(" "));
        let ly = mt + 14.0 + 14.0 * k as f64;
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>", w - mr - 120.0, w - mr - 100.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>", w - mr - 95.0, ly + 4.0, escape(name));
    }
    for (label, x) in markers {
        let _ = writeln!(s, "<line x1=\"{0:.2}\" y1=\"{mt}\" x2=\"{0:.2}\" y2=\"{1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>", px(*x), h - mb);
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{}\" font-size=\"10\" fill=\"gray\">{}</text>", px(*x) + 3.0, mt + 12.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_17_digits() {
        let mut s = Series::new("a", &["t", "x,y"]);
        s.push(vec![0.1, 1.0 / 3.0]);
        let csv = s.to_csv();
        assert!(csv.starts_with("t,\"x,y\"\r\n"));
        assert!(csv.contains("3.3333333333333331e-1"));
        let back: f64 = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn downsampling_keeps_extremes() {
        let xs: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 0.01).sin()).collect();
        let (dx, dy) = downsample(&xs, &ys, 2000);
        assert!(dx.len() <= 2000 && dx.len() >= 1000);
        assert!(dx.windows(2).all(|w| w[0] < w[1]));
        let m = dy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((m - 1.0).abs() < 1e-6);
    }

    #[test]
    fn padded_axis() {
        let (a, b) = padded_range([0.0, 10.0].into_iter());
        assert_eq!((a, b), (-0.5, 10.5));
    }

    #[test]
    fn empty_plot_placeholder() {
        let s = svg_plot("t", "x", "y", &[("a".into(), vec![], vec![])], &[]);
        assert!(s.contains("no data"));
    }

    #[test]
    fn legend_follows_input_order() {
        let s = svg_plot("t", "x", "y", &[("first".into(), vec![0.0, 1.0], vec![0.0, 1.0]), ("second".into(), vec![0.0, 1.0], vec![1.0, 0.0])], &[]);
        assert!(s.find("first").unwrap() < s.find("second").unwrap());
    }

    #[test]
    fn json_keys_sorted() {
        let mut r = ExperimentReport::new("x", &serde_json::json!({"b": 1, "a": 2}));
        r.check_le("z", 1.0, 2.0);
        let j = r.to_json();
        assert!(j.find("\"a\"").unwrap() < j.find("\"b\"").unwrap());
        assert!(j.find("\"artifacts\"").unwrap() < j.find("\"assertions\"").unwrap());
        assert!(r.passed());
    }
}
