//! Deterministic report artifacts: forest chart of country means, rank
//! confidence-set chart, and trend chart, all emitted as plain SVG text.
//! Run metadata is embedded as XML comments (and as `#` comments in the CSV
//! tables), so identical inputs and seed produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nes_data::CountrySummary;
use crate::rank_inference::RankConfidenceSet;
use crate::trend::TrendSeries;

const Z95: f64 = 1.96;

const STYLE: &str = "text{font:11px sans-serif;fill:#222}\
.label{text-anchor:end}\
.axis{stroke:#888;stroke-width:1}\
.tick{text-anchor:middle}\
.whisker{stroke:#335b8c;stroke-width:1.5}\
.marker{fill:#335b8c}\
.marker.flagged{fill:#c23b22}\
.rank-bar{fill:#9ec3e6}\
.rank-marker{fill:#1d4f82}\
.country-mean{stroke:#c23b22;stroke-width:1;stroke-dasharray:6 3}";

/// Run metadata echoed into every artifact.
#[derive(Clone, Debug, Default)]
pub struct RunMeta {
    pub command: String,
    pub seed: Option<u64>,
}

impl RunMeta {
    pub fn new(command: impl Into<String>, seed: Option<u64>) -> Self {
        RunMeta {
            command: command.into(),
            seed,
        }
    }

    /// Comment lines for CSV/SVG embedding.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("rankcert {}", env!("CARGO_PKG_VERSION")),
            format!("command: {}", self.command),
        ];
        if let Some(seed) = self.seed {
            out.push(format!("seed: {seed}"));
        }
        out
    }
}

/// Named output files produced by one CLI invocation.
#[derive(Clone, Debug, Default)]
pub struct ReportBundle {
    entries: Vec<(String, Vec<u8>)>,
}

impl ReportBundle {
    pub fn add(&mut self, name: impl Into<String>, content: impl Into<Vec<u8>>) {
        self.entries.push((name.into(), content.into()));
    }

    pub fn entries(&self) -> &[(String, Vec<u8>)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    /// Write every entry under `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::with_capacity(self.entries.len());
        for (name, content) in &self.entries {
            let path = dir.join(name);
            fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// One line of the reliability report table.
#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityRow {
    pub statistic: String,
    pub scope: String,
    /// `None` renders as `NA` (statistic unavailable for this scope).
    pub value: Option<f64>,
    /// Standard error (type deltas, `*` marks 5% significance) or a flag.
    pub qualifier: String,
}

/// Serialize reliability rows (`statistic,scope,value,se_or_flag`).
pub fn write_reliability_csv(rows: &[ReliabilityRow], meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["statistic", "scope", "value", "se_or_flag"])
        .unwrap();
    for r in rows {
        writer
            .write_record([
                r.statistic.as_str(),
                r.scope.as_str(),
                &r.value
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "NA".into()),
                r.qualifier.as_str(),
            ])
            .unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parse CSV produced by [`write_reliability_csv`].
pub fn read_reliability_csv<R: std::io::Read>(source: R) -> Result<Vec<ReliabilityRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source);
    let headers: Vec<&str> = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .iter()
        .collect();
    if headers != ["statistic", "scope", "value", "se_or_flag"] {
        return Err(Error::parse(format!(
            "unexpected header `{}`",
            headers.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let value = match record[2].trim() {
            "NA" => None,
            cell => Some(
                cell.parse()
                    .map_err(|_| Error::parse(format!("column value: `{cell}` is not a number")))?,
            ),
        };
        out.push(ReliabilityRow {
            statistic: record[0].to_string(),
            scope: record[1].to_string(),
            value,
            qualifier: record[3].to_string(),
        });
    }
    Ok(out)
}

/// Serialize per-indicator country summaries
/// (`indicator,country,n,mean,sd,se`).
pub fn write_efc_scores_csv(
    rows: &[(crate::nes_data::IndicatorId, CountrySummary)],
    meta: &[String],
) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["indicator", "country", "n", "mean", "sd", "se"])
        .unwrap();
    for (id, s) in rows {
        writer
            .write_record([
                id.as_str(),
                s.country.as_str(),
                &s.n.to_string(),
                &s.mean.to_string(),
                &s.sd.to_string(),
                &s.se.to_string(),
            ])
            .unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parse CSV produced by [`write_efc_scores_csv`].
pub fn read_efc_scores_csv<R: std::io::Read>(
    source: R,
) -> Result<Vec<(crate::nes_data::IndicatorId, CountrySummary)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source);
    let headers: Vec<&str> = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .iter()
        .collect();
    if headers != ["indicator", "country", "n", "mean", "sd", "se"] {
        return Err(Error::parse(format!(
            "unexpected header `{}`",
            headers.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let id: crate::nes_data::IndicatorId = record[0].trim().parse()?;
        let n: usize = record[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("column n: `{}`", &record[2])))?;
        let parse_f = |i: usize, name: &str| -> Result<f64> {
            record[i].trim().parse().map_err(|_| {
                Error::parse(format!("column {name}: `{}` is not a number", &record[i]))
            })
        };
        let mut summary = CountrySummary::from_moments(
            record[1].to_string(),
            n,
            parse_f(3, "mean")?,
            parse_f(4, "sd")?,
        )?;
        summary.se = parse_f(5, "se")?;
        out.push((id, summary));
    }
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn c2(v: f64) -> String {
    format!("{v:.2}")
}

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        // degenerate domains get a unit pad so positions stay finite
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        };
        Scale {
            lo,
            hi,
            px_lo,
            px_hi,
        }
    }

    fn at(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn svg_open(out: &mut String, width: f64, height: f64, meta: &[String]) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = c2(width),
        h = c2(height)
    ));
    for line in meta {
        // XML comments must not contain `--`
        let safe = xml_escape(line).replace("--", "- -");
        out.push_str(&format!("<!-- {safe} -->\n"));
    }
    out.push_str(&format!("<style>{STYLE}</style>\n"));
}

fn x_axis_ticks(out: &mut String, scale: &Scale, y: f64, ticks: usize) {
    out.push_str(&format!(
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
        c2(scale.px_lo),
        c2(y),
        c2(scale.px_hi),
        c2(y)
    ));
    for i in 0..=ticks {
        let v = scale.lo + (scale.hi - scale.lo) * i as f64 / ticks as f64;
        let x = scale.at(v);
        out.push_str(&format!(
            "<line class=\"axis\" x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\"/>\n",
            x = c2(x),
            y1 = c2(y),
            y2 = c2(y + 4.0)
        ));
        out.push_str(&format!(
            "<text class=\"tick\" x=\"{}\" y=\"{}\">{}</text>\n",
            c2(x),
            c2(y + 16.0),
            c2(v)
        ));
    }
}

/// Forest chart: one row per country sorted by descending mean, point marker
/// at the mean, whisker spanning mean ± 1.96 se.
pub fn emit_forest_chart(summaries: &[CountrySummary], meta: &[String]) -> String {
    let mut rows = summaries.to_vec();
    rows.sort_by(|a, b| {
        b.mean
            .partial_cmp(&a.mean)
            .unwrap()
            .then_with(|| a.country.cmp(&b.country))
    });
    let (left, right, top, row_h) = (200.0, 880.0, 30.0, 15.0);
    let height = top + rows.len() as f64 * row_h + 40.0;
    let lo = rows
        .iter()
        .map(|r| r.mean - Z95 * r.se)
        .fold(f64::INFINITY, f64::min);
    let hi = rows
        .iter()
        .map(|r| r.mean + Z95 * r.se)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = Scale::new(lo, hi, left, right);

    let mut out = String::new();
    svg_open(&mut out, 900.0, height, meta);
    for (i, r) in rows.iter().enumerate() {
        let y = top + (i as f64 + 0.5) * row_h;
        out.push_str(&format!(
            "<text class=\"label\" x=\"{}\" y=\"{}\">{}</text>\n",
            c2(left - 8.0),
            c2(y + 4.0),
            xml_escape(&r.country)
        ));
        out.push_str(&format!(
            "<line class=\"whisker\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\"/>\n",
            c2(scale.at(r.mean - Z95 * r.se)),
            c2(scale.at(r.mean + Z95 * r.se)),
            y = c2(y)
        ));
        out.push_str(&format!(
            "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3\"/>\n",
            c2(scale.at(r.mean)),
            c2(y)
        ));
    }
    x_axis_ticks(&mut out, &scale, top + rows.len() as f64 * row_h + 6.0, 5);
    out.push_str("</svg>\n");
    out
}

/// Rank chart: countries ordered by point rank, horizontal bar spanning the
/// confidence set on the rank axis, marker at the point rank. Singleton sets
/// render as a marker without a bar.
pub fn emit_rank_chart(sets: &[RankConfidenceSet], meta: &[String]) -> String {
    let mut rows = sets.to_vec();
    rows.sort_by_key(|s| s.point_rank);
    let p = rows.len().max(1);
    let (left, right, top, row_h) = (200.0, 880.0, 30.0, 15.0);
    let height = top + rows.len() as f64 * row_h + 40.0;
    let scale = Scale::new(1.0, p as f64, left, right);

    let mut out = String::new();
    svg_open(&mut out, 900.0, height, meta);
    for (i, s) in rows.iter().enumerate() {
        let y = top + (i as f64 + 0.5) * row_h;
        out.push_str(&format!(
            "<text class=\"label\" x=\"{}\" y=\"{}\">{}</text>\n",
            c2(left - 8.0),
            c2(y + 4.0),
            xml_escape(&s.id)
        ));
        if s.upper > s.lower {
            let x1 = scale.at(s.lower as f64);
            let x2 = scale.at(s.upper as f64);
            out.push_str(&format!(
                "<rect class=\"rank-bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n",
                c2(x1),
                c2(y - 4.0),
                c2(x2 - x1),
                c2(8.0)
            ));
        }
        out.push_str(&format!(
            "<circle class=\"rank-marker\" cx=\"{}\" cy=\"{}\" r=\"3\"/>\n",
            c2(scale.at(s.point_rank as f64)),
            c2(y)
        ));
    }
    x_axis_ticks(
        &mut out,
        &scale,
        top + rows.len() as f64 * row_h + 6.0,
        5.min(p - 1).max(1),
    );
    out.push_str("</svg>\n");
    out
}

/// Trend chart: yearly means with CI whiskers, a dashed horizontal line at
/// the pooled country mean, and flagged years drawn with a distinct marker.
pub fn emit_trend_chart(series: &TrendSeries, meta: &[String]) -> String {
    let (left, right, top, bottom) = (60.0, 860.0, 30.0, 420.0);
    let years_lo = series.points.first().map(|p| p.year as f64).unwrap_or(0.0);
    let years_hi = series.points.last().map(|p| p.year as f64).unwrap_or(1.0);
    let xs = Scale::new(years_lo, years_hi, left, right);
    let val_lo = series
        .points
        .iter()
        .map(|p| p.ci_low)
        .fold(series.country_mean, f64::min);
    let val_hi = series
        .points
        .iter()
        .map(|p| p.ci_high)
        .fold(series.country_mean, f64::max);
    // inverted: larger values sit higher on the canvas
    let ys = Scale::new(val_lo, val_hi, bottom, top);

    let mut out = String::new();
    svg_open(&mut out, 900.0, 470.0, meta);
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\">{}</text>\n",
        c2(left),
        xml_escape(&series.country)
    ));
    out.push_str(&format!(
        "<line class=\"country-mean\" x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\"/>\n",
        c2(left),
        c2(right),
        y = c2(ys.at(series.country_mean))
    ));
    for p in &series.points {
        let x = xs.at(p.year as f64);
        out.push_str(&format!(
            "<line class=\"whisker\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\"/>\n",
            c2(ys.at(p.ci_low)),
            c2(ys.at(p.ci_high)),
            x = c2(x)
        ));
        let class = if p.deviates_from_country_mean {
            "marker flagged"
        } else {
            "marker"
        };
        out.push_str(&format!(
            "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"3.5\"/>\n",
            c2(x),
            c2(ys.at(p.mean))
        ));
        out.push_str(&format!(
            "<text class=\"tick\" x=\"{}\" y=\"{}\">{}</text>\n",
            c2(x),
            c2(bottom + 18.0),
            p.year
        ));
    }
    out.push_str(&format!(
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
        c2(left),
        c2(bottom + 4.0),
        c2(right),
        c2(bottom + 4.0)
    ));
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nes_data::table1_fixture;
    use crate::trend::{TrendPoint, Z95 as TZ95};

    fn assert_well_formed(svg: &str) {
        let doc = roxmltree::Document::parse(svg).expect("well-formed XML");
        assert_eq!(doc.root_element().tag_name().name(), "svg");
    }

    fn count(haystack: &str, needle: &str) -> usize {
        haystack.matches(needle).count()
    }

    #[test]
    fn forest_chart_fixture_rows() {
        let rows = table1_fixture();
        let svg = emit_forest_chart(&rows, &["command: report".into()]);
        assert_well_formed(&svg);
        assert_eq!(count(&svg, "class=\"whisker\""), 54);
        assert_eq!(count(&svg, "class=\"marker\""), 54);
        // Indonesia is the topmost label
        let indonesia = svg.find(">Indonesia<").unwrap();
        let canada = svg.find(">Canada<").unwrap();
        assert!(indonesia < canada);
        assert!(svg.contains("<!-- command: report -->"));
    }

    #[test]
    fn forest_chart_single_country_zero_se() {
        let row = CountrySummary::from_moments("Solo", 1, 4.0, 0.0).unwrap();
        let svg = emit_forest_chart(&[row], &[]);
        assert_well_formed(&svg);
        // zero-length whisker: identical endpoints
        let whisker = svg
            .lines()
            .find(|l| l.contains("class=\"whisker\""))
            .unwrap();
        let x1 = whisker
            .split("x1=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let x2 = whisker
            .split("x2=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn rank_chart_singletons_have_no_bar() {
        let sets = vec![
            RankConfidenceSet {
                id: "A".into(),
                point_rank: 1,
                lower: 1,
                upper: 1,
                mean: 5.0,
                se: 0.01,
            },
            RankConfidenceSet {
                id: "B".into(),
                point_rank: 2,
                lower: 1,
                upper: 3,
                mean: 4.0,
                se: 0.4,
            },
            RankConfidenceSet {
                id: "C".into(),
                point_rank: 3,
                lower: 2,
                upper: 3,
                mean: 3.0,
                se: 0.4,
            },
        ];
        let svg = emit_rank_chart(&sets, &[]);
        assert_well_formed(&svg);
        assert_eq!(count(&svg, "class=\"rank-bar\""), 2);
        assert_eq!(count(&svg, "class=\"rank-marker\""), 3);
    }

    #[test]
    fn rank_chart_bars_stay_inside_axis() {
        let sets = vec![
            RankConfidenceSet {
                id: "A".into(),
                point_rank: 1,
                lower: 1,
                upper: 2,
                mean: 5.0,
                se: 0.3,
            },
            RankConfidenceSet {
                id: "B".into(),
                point_rank: 2,
                lower: 1,
                upper: 2,
                mean: 4.9,
                se: 0.3,
            },
        ];
        let svg = emit_rank_chart(&sets, &[]);
        assert_well_formed(&svg);
        for line in svg
            .lines()
            .filter(|l| l.starts_with("<rect class=\"rank-bar\""))
        {
            let x: f64 = line
                .split("x=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .parse()
                .unwrap();
            let w: f64 = line
                .split("width=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .parse()
                .unwrap();
            assert!(x >= 200.0 - 1e-9 && x + w <= 880.0 + 1e-9);
        }
    }

    fn trend_series(points: &[(u16, f64, f64, bool)], country_mean: f64) -> TrendSeries {
        TrendSeries {
            country: "X".into(),
            points: points
                .iter()
                .map(|&(year, mean, se, dev)| TrendPoint {
                    year,
                    n: 3,
                    mean,
                    se,
                    ci_low: mean - TZ95 * se,
                    ci_high: mean + TZ95 * se,
                    deviates_from_country_mean: dev,
                    differs_from_previous_year: false,
                })
                .collect(),
            country_mean,
        }
    }

    #[test]
    fn trend_chart_counts_and_flags() {
        let points: Vec<(u16, f64, f64, bool)> = (0..12)
            .map(|i| (2007 + i as u16, 3.0 + 0.05 * i as f64, 0.2, i == 4))
            .collect();
        let svg = emit_trend_chart(&trend_series(&points, 3.3), &["seed: 1".into()]);
        assert_well_formed(&svg);
        assert_eq!(count(&svg, "class=\"whisker\""), 12);
        assert_eq!(
            count(&svg, "class=\"marker\"") + count(&svg, "class=\"marker flagged\""),
            12
        );
        assert_eq!(count(&svg, "class=\"marker flagged\""), 1);
        assert_eq!(count(&svg, "class=\"country-mean\""), 1);
    }

    #[test]
    fn trend_chart_constant_series_sits_on_dashed_line() {
        let points: Vec<(u16, f64, f64, bool)> =
            (0..5).map(|i| (2010 + i as u16, 4.0, 0.5, false)).collect();
        let svg = emit_trend_chart(&trend_series(&points, 4.0), &[]);
        assert_well_formed(&svg);
        let line_y = svg
            .lines()
            .find(|l| l.starts_with("<line class=\"country-mean\""))
            .unwrap()
            .split("y1=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .to_string();
        for marker in svg
            .lines()
            .filter(|l| l.starts_with("<circle class=\"marker\""))
        {
            let cy = marker
                .split("cy=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap();
            assert_eq!(cy, line_y);
        }
    }

    #[test]
    fn charts_are_reproducible() {
        let rows = table1_fixture();
        let meta = vec!["command: report".into(), "seed: 42".into()];
        assert_eq!(
            emit_forest_chart(&rows, &meta),
            emit_forest_chart(&rows, &meta)
        );
    }

    #[test]
    fn bundle_roundtrip() {
        let mut bundle = ReportBundle::default();
        bundle.add("a.csv", "x,y\n1,2\n");
        bundle.add("b.svg", "<svg/>");
        let dir = tempfile::tempdir().unwrap();
        let written = bundle.write_to(dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(&written[0]).unwrap(), "x,y\n1,2\n");
        assert_eq!(bundle.get("b.svg").unwrap(), b"<svg/>");
    }
}
