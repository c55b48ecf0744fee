//! Longitudinal per-country index series: yearly means with 95% intervals,
//! deviation-from-country-mean and consecutive-year significance tests, and
//! the cross-index Pearson correlation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{expert_index, CompletenessPolicy};
use crate::nes_data::SurveyDataset;
use crate::stats;

/// Two-sided 95% normal critical value used for the yearly intervals and
/// the year-to-year z-test.
pub const Z95: f64 = 1.96;

#[derive(Clone, Debug, PartialEq)]
pub struct TrendPoint {
    pub year: u16,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The pooled country mean lies outside this year's 95% interval.
    pub deviates_from_country_mean: bool,
    /// This year's mean differs from the previous year's at the 5% level
    /// (always false for the first year).
    pub differs_from_previous_year: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrendSeries {
    pub country: String,
    /// Year-ordered points (strictly increasing years).
    pub points: Vec<TrendPoint>,
    /// Mean of all expert scores pooled across years (the dashed line).
    pub country_mean: f64,
}

/// Yearly composite-index series for one country, with flags filled in from
/// [`deviation_test`] and [`consecutive_year_test`]. When the panel mixes
/// waves on different scales the caller must remap to a common scale first
/// (see [`crate::index::remap_dataset`]).
pub fn yearly_series(
    ds: &SurveyDataset,
    country: &str,
    policy: CompletenessPolicy,
) -> Result<TrendSeries> {
    if !ds.responses().iter().any(|r| r.country == country) {
        return Err(Error::invalid(format!("unknown country `{country}`")));
    }
    let mut per_year: BTreeMap<u16, Vec<f64>> = BTreeMap::new();
    let mut pooled: Vec<f64> = Vec::new();
    for r in ds.responses().iter().filter(|r| r.country == country) {
        if let Some(score) = expert_index(r, policy) {
            per_year.entry(r.year).or_default().push(score);
            pooled.push(score);
        }
    }
    if pooled.is_empty() {
        return Err(Error::degenerate(format!(
            "no scorable experts for `{country}` under the completeness policy"
        )));
    }
    let country_mean = stats::mean(&pooled);
    let points = per_year
        .into_iter()
        .map(|(year, scores)| {
            let n = scores.len();
            let mean = stats::mean(&scores);
            let se = if n == 1 {
                0.0
            } else {
                stats::sample_sd(&scores) / (n as f64).sqrt()
            };
            TrendPoint {
                year,
                n,
                mean,
                se,
                ci_low: mean - Z95 * se,
                ci_high: mean + Z95 * se,
                deviates_from_country_mean: false,
                differs_from_previous_year: false,
            }
        })
        .collect();
    let mut series = TrendSeries {
        country: country.to_string(),
        points,
        country_mean,
    };
    let dev = deviation_test(&series);
    let step = consecutive_year_test(&series);
    for (i, point) in series.points.iter_mut().enumerate() {
        point.deviates_from_country_mean = dev[i];
        point.differs_from_previous_year = i > 0 && step[i - 1];
    }
    Ok(series)
}

/// Per-year flag: the pooled country mean falls outside the year's 95%
/// interval.
pub fn deviation_test(series: &TrendSeries) -> Vec<bool> {
    series
        .points
        .iter()
        .map(|p| series.country_mean < p.ci_low || series.country_mean > p.ci_high)
        .collect()
}

/// Per-adjacent-pair flag (length = points - 1): the two yearly means differ
/// by more than 1.96 * sqrt(se_t^2 + se_{t+1}^2), a two-sided 5% z-test with
/// independent samples.
pub fn consecutive_year_test(series: &TrendSeries) -> Vec<bool> {
    series
        .points
        .windows(2)
        .map(|w| {
            let gap = (w[1].mean - w[0].mean).abs();
            gap > Z95 * (w[0].se * w[0].se + w[1].se * w[1].se).sqrt()
        })
        .collect()
}

/// Pearson correlation between two per-country score sets, matched by label.
/// Returns (r, two-sided p) with p from the Student-t transform
/// t = r * sqrt((n-2)/(1-r^2)) on n-2 degrees of freedom.
pub fn cross_index_correlation(x: &[(String, f64)], y: &[(String, f64)]) -> Result<(f64, f64)> {
    let lookup: BTreeMap<&str, f64> = y.iter().map(|(id, v)| (id.as_str(), *v)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (id, v) in x {
        if let Some(&w) = lookup.get(id.as_str()) {
            xs.push(*v);
            ys.push(w);
        }
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "need >= 3 matched countries, got {n}"
        )));
    }
    let mx = stats::mean(&xs);
    let my = stats::mean(&ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::degenerate("zero variance in a correlation input"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    let df = (n - 2) as f64;
    let p = if 1.0 - r * r <= 0.0 {
        0.0
    } else {
        stats::student_t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok((r, p))
}

/// Parse a per-country score file (`country,score`), the format consumed by
/// [`cross_index_correlation`].
pub fn read_scores_csv<R: std::io::Read>(source: R) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source);
    let headers: Vec<&str> = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .iter()
        .collect();
    if headers != ["country", "score"] {
        return Err(Error::parse(format!(
            "unexpected header: want `country,score`, got `{}`",
            headers.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let score: f64 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("column score: `{}` is not a number", &record[1])))?;
        out.push((record[0].trim().to_string(), score));
    }
    Ok(out)
}

/// Serialize a series (`year,n,mean,se,ci_low,ci_high,dev_flag,step_flag`)
/// with `#` metadata comments. Flags are written as 0/1.
pub fn write_trend_csv(series: &TrendSeries, meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "year",
            "n",
            "mean",
            "se",
            "ci_low",
            "ci_high",
            "dev_flag",
            "step_flag",
        ])
        .unwrap();
    for p in &series.points {
        writer
            .write_record([
                p.year.to_string(),
                p.n.to_string(),
                p.mean.to_string(),
                p.se.to_string(),
                p.ci_low.to_string(),
                p.ci_high.to_string(),
                u8::from(p.deviates_from_country_mean).to_string(),
                u8::from(p.differs_from_previous_year).to_string(),
            ])
            .unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parse CSV produced by [`write_trend_csv`].
pub fn read_trend_csv<R: std::io::Read>(source: R) -> Result<Vec<TrendPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source);
    let headers: Vec<&str> = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .iter()
        .collect();
    if headers
        != [
            "year",
            "n",
            "mean",
            "se",
            "ci_low",
            "ci_high",
            "dev_flag",
            "step_flag",
        ]
    {
        return Err(Error::parse(format!(
            "unexpected header `{}`",
            headers.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let parse_f = |i: usize, name: &str| -> Result<f64> {
            record[i].trim().parse().map_err(|_| {
                Error::parse(format!("column {name}: `{}` is not a number", &record[i]))
            })
        };
        let flag = |i: usize| -> Result<bool> {
            match record[i].trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(format!("flag column: `{other}` is not 0/1"))),
            }
        };
        out.push(TrendPoint {
            year: record[0]
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("column year: `{}`", &record[0])))?,
            n: record[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("column n: `{}`", &record[1])))?,
            mean: parse_f(2, "mean")?,
            se: parse_f(3, "se")?,
            ci_low: parse_f(4, "ci_low")?,
            ci_high: parse_f(5, "ci_high")?,
            deviates_from_country_mean: flag(6)?,
            differs_from_previous_year: flag(7)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nes_data::{ExpertResponse, LikertValue, NUM_ITEMS};
    use proptest::prelude::*;

    fn response(country: &str, year: u16, value: f64) -> ExpertResponse {
        let items = vec![Some(LikertValue::new(value, 9).unwrap()); NUM_ITEMS];
        ExpertResponse::new(country, year, "e", items).unwrap()
    }

    fn series_of(points: &[(u16, f64, f64)], country_mean: f64) -> TrendSeries {
        TrendSeries {
            country: "X".into(),
            points: points
                .iter()
                .map(|&(year, mean, se)| TrendPoint {
                    year,
                    n: 2,
                    mean,
                    se,
                    ci_low: mean - Z95 * se,
                    ci_high: mean + Z95 * se,
                    deviates_from_country_mean: false,
                    differs_from_previous_year: false,
                })
                .collect(),
            country_mean,
        }
    }

    #[test]
    fn single_year_hand_computation() {
        let ds = SurveyDataset::new(vec![response("X", 2018, 3.0), response("X", 2018, 5.0)], 9)
            .unwrap();
        let s = yearly_series(&ds, "X", CompletenessPolicy::RequireAll).unwrap();
        assert_eq!(s.points.len(), 1);
        let p = &s.points[0];
        assert_eq!(p.mean, 4.0);
        assert!((p.se - 1.0).abs() < 1e-12); // sd = sqrt(2), se = sd/sqrt(2)
        assert!((p.ci_low - 2.04).abs() < 1e-9);
        assert!((p.ci_high - 5.96).abs() < 1e-9);
        assert_eq!(s.country_mean, 4.0);
    }

    #[test]
    fn constant_panel_has_no_flags() {
        let mut responses = Vec::new();
        for year in 2010..2016 {
            responses.push(response("X", year, 4.0));
            responses.push(response("X", year, 6.0));
        }
        let ds = SurveyDataset::new(responses, 9).unwrap();
        let s = yearly_series(&ds, "X", CompletenessPolicy::RequireAll).unwrap();
        assert_eq!(s.points.len(), 6);
        assert!(s.points.iter().all(|p| p.mean == s.country_mean));
        assert!(s.points.iter().all(|p| !p.deviates_from_country_mean));
        assert!(s.points.iter().all(|p| !p.differs_from_previous_year));
        // years strictly increasing
        assert!(s.points.windows(2).all(|w| w[0].year < w[1].year));
    }

    #[test]
    fn complete_panel_yields_twelve_points_per_country() {
        // 7 countries x 12 years = 84 data points in total
        let countries = ["AR", "BR", "CL", "CO", "MX", "PE", "UY"];
        let mut responses = Vec::new();
        for (c, country) in countries.iter().enumerate() {
            for year in 2007..=2018 {
                for v in [3.0 + 0.1 * c as f64, 4.0, 5.0] {
                    responses.push(response(country, year, v));
                }
            }
        }
        let ds = SurveyDataset::new(responses, 9).unwrap();
        let mut total_points = 0;
        for country in countries {
            let s = yearly_series(&ds, country, CompletenessPolicy::RequireAll).unwrap();
            assert_eq!(s.points.len(), 12);
            total_points += s.points.len();
        }
        assert_eq!(total_points, 84);
    }

    #[test]
    fn score_file_parses_and_rejects_bad_headers() {
        let rows =
            read_scores_csv("# meta\ncountry,score\nBrazil,56.5\nChile,72.1\n".as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], ("Brazil".to_string(), 56.5));
        assert!(read_scores_csv("country,value\nBrazil,1\n".as_bytes()).is_err());
        assert!(read_scores_csv("country,score\nBrazil,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn unknown_country_is_an_error() {
        let ds = SurveyDataset::new(vec![response("X", 2018, 4.0)], 9).unwrap();
        let err = yearly_series(&ds, "Y", CompletenessPolicy::RequireAll).unwrap_err();
        assert!(err.to_string().contains("unknown country"));
    }

    #[test]
    fn deviation_test_z_arithmetic() {
        // |z| = 10: flagged
        let s = series_of(&[(2010, 5.0, 0.1)], 6.0);
        assert_eq!(deviation_test(&s), vec![true]);
        // country mean inside the interval (6.0 < 5 + 1.96): not flagged
        let s = series_of(&[(2010, 5.0, 1.0)], 6.0);
        assert_eq!(deviation_test(&s), vec![false]);
    }

    #[test]
    fn consecutive_test_z_arithmetic() {
        // z = 1.0 / (0.1 * sqrt(2)) ~ 7.07: flagged
        let s = series_of(&[(2010, 3.0, 0.1), (2011, 4.0, 0.1)], 3.5);
        assert_eq!(consecutive_year_test(&s), vec![true]);
        // identical adjacent years: not flagged
        let s = series_of(&[(2010, 4.0, 0.2), (2011, 4.0, 0.2)], 4.0);
        assert_eq!(consecutive_year_test(&s), vec![false]);
        // z ~ 1.06: not flagged
        let s = series_of(&[(2010, 4.0, 0.2), (2011, 4.3, 0.2)], 4.15);
        assert_eq!(consecutive_year_test(&s), vec![false]);
    }

    #[test]
    fn correlation_basics() {
        let x: Vec<(String, f64)> = [("A", 1.0), ("B", 2.0), ("C", 3.0)]
            .map(|(i, v)| (i.to_string(), v))
            .to_vec();
        let (r, p) = cross_index_correlation(&x, &x).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(p < 1e-6, "p = {p}");

        let y: Vec<(String, f64)> = [("A", 1.0), ("B", 2.0), ("C", 4.0)]
            .map(|(i, v)| (i.to_string(), v))
            .to_vec();
        let (r, p) = cross_index_correlation(&x, &y).unwrap();
        assert!((r - 0.982).abs() < 0.001, "r = {r}");
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn correlation_error_paths() {
        let two: Vec<(String, f64)> = [("A", 1.0), ("B", 2.0)]
            .map(|(i, v)| (i.to_string(), v))
            .to_vec();
        assert!(cross_index_correlation(&two, &two).is_err());

        let x: Vec<(String, f64)> = [("A", 1.0), ("B", 2.0), ("C", 3.0)]
            .map(|(i, v)| (i.to_string(), v))
            .to_vec();
        let flat: Vec<(String, f64)> = [("A", 2.0), ("B", 2.0), ("C", 2.0)]
            .map(|(i, v)| (i.to_string(), v))
            .to_vec();
        assert!(matches!(
            cross_index_correlation(&x, &flat).unwrap_err(),
            Error::Degenerate(_)
        ));
        // only matched labels count
        let disjoint: Vec<(String, f64)> = [("Q", 1.0), ("R", 2.0), ("S", 3.0)]
            .map(|(i, v)| (i.to_string(), v))
            .to_vec();
        assert!(cross_index_correlation(&x, &disjoint).is_err());
    }

    #[test]
    fn trend_csv_roundtrip() {
        let s = series_of(
            &[(2010, 3.0, 0.1), (2011, 4.0, 0.1), (2012, 4.05, 0.5)],
            3.7,
        );
        let mut annotated = s.clone();
        let dev = deviation_test(&s);
        let step = consecutive_year_test(&s);
        for (i, p) in annotated.points.iter_mut().enumerate() {
            p.deviates_from_country_mean = dev[i];
            p.differs_from_previous_year = i > 0 && step[i - 1];
        }
        let text = write_trend_csv(&annotated, &["country=X".into()]);
        let back = read_trend_csv(text.as_bytes()).unwrap();
        assert_eq!(annotated.points, back);
    }

    proptest! {
        // both tests are invariant under adding a constant to all scores
        #[test]
        fn tests_shift_invariant(
            rows in prop::collection::vec((1.0..9.0f64, 0.01..1.0f64), 2..8),
            shift in -5.0..5.0f64,
        ) {
            let points: Vec<(u16, f64, f64)> = rows
                .iter()
                .enumerate()
                .map(|(i, &(m, se))| (2000 + i as u16, m, se))
                .collect();
            let cm = stats::mean(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
            let s = series_of(&points, cm);
            let shifted: Vec<(u16, f64, f64)> = points
                .iter()
                .map(|&(y, m, se)| (y, m + shift, se))
                .collect();
            let s2 = series_of(&shifted, cm + shift);
            prop_assert_eq!(deviation_test(&s), deviation_test(&s2));
            prop_assert_eq!(consecutive_year_test(&s), consecutive_year_test(&s2));
        }

        // r is symmetric, bounded, and invariant under positive affine maps
        #[test]
        fn correlation_properties(
            vals in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 3..10),
            a in 0.1..5.0f64,
            b in -10.0..10.0f64,
        ) {
            let x: Vec<(String, f64)> = vals
                .iter()
                .enumerate()
                .map(|(i, &(v, _))| (format!("C{i}"), v))
                .collect();
            let y: Vec<(String, f64)> = vals
                .iter()
                .enumerate()
                .map(|(i, &(_, w))| (format!("C{i}"), w))
                .collect();
            let xy = cross_index_correlation(&x, &y);
            let yx = cross_index_correlation(&y, &x);
            // Err cases are degenerate draws (zero variance)
            if let (Ok((r1, _)), Ok((r2, _))) = (xy, yx) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r1));
                prop_assert!((r1 - r2).abs() < 1e-12);
                let scaled: Vec<(String, f64)> =
                    y.iter().map(|(i, v)| (i.clone(), a * v + b)).collect();
                let (r3, _) = cross_index_correlation(&x, &scaled).unwrap();
                prop_assert!((r1 - r3).abs() < 1e-9);
            }
        }
    }
}
