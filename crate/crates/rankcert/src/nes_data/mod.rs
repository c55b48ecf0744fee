//! Expert-survey micro-data: domain types, CSV parsing/serialization, the
//! built-in 54-country summary table, and the item-to-indicator catalog.
//!
//! Micro-data CSV layout: `country,year,expert_type,item_01,...,item_54`
//! with one row per expert; a blank item cell means the expert skipped the
//! item. Summary CSV layout: `country,n,mean,sd[,se]`. Both readers skip
//! lines starting with `#`, which the writers use for run metadata.

mod table1;

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Number of questionnaire items.
pub const NUM_ITEMS: usize = 54;

/// Survey years accepted by the parser.
pub const YEAR_RANGE: std::ops::RangeInclusive<u16> = 1999..=2100;

/// One-based questionnaire item index, 1..=54.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(u8);

impl ItemId {
    pub fn new(index: usize) -> Result<Self> {
        if (1..=NUM_ITEMS).contains(&index) {
            Ok(ItemId(index as u8))
        } else {
            Err(Error::invalid(format!(
                "item index {index} out of range 1..={NUM_ITEMS}"
            )))
        }
    }

    /// One-based index.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Zero-based position, for array indexing.
    pub fn pos(self) -> usize {
        self.0 as usize - 1
    }

    /// CSV column name, e.g. `item_07`.
    pub fn column_name(self) -> String {
        format!("item_{:02}", self.0)
    }

    pub fn all() -> impl Iterator<Item = ItemId> {
        (1..=NUM_ITEMS).map(|i| ItemId(i as u8))
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single rating on the declared Likert scale. Values are fractional after
/// a 9-to-5-point remap, so the payload is a float bounded by the scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LikertValue(f64);

impl LikertValue {
    pub fn new(value: f64, scale_max: u8) -> Result<Self> {
        if !value.is_finite() || !(1.0..=scale_max as f64).contains(&value) {
            return Err(Error::invalid(format!(
                "rating {value} out of range 1..={scale_max}"
            )));
        }
        Ok(LikertValue(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One expert's ratings plus country/year/type metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertResponse {
    pub country: String,
    pub year: u16,
    pub expert_type: String,
    items: Vec<Option<LikertValue>>,
}

impl ExpertResponse {
    pub fn new(
        country: impl Into<String>,
        year: u16,
        expert_type: impl Into<String>,
        items: Vec<Option<LikertValue>>,
    ) -> Result<Self> {
        let country = country.into();
        if country.is_empty() {
            return Err(Error::invalid("country label must be nonempty"));
        }
        if !YEAR_RANGE.contains(&year) {
            return Err(Error::invalid(format!(
                "year {year} out of range {}..={}",
                YEAR_RANGE.start(),
                YEAR_RANGE.end()
            )));
        }
        if items.len() != NUM_ITEMS {
            return Err(Error::invalid(format!(
                "expected {NUM_ITEMS} item slots, got {}",
                items.len()
            )));
        }
        Ok(ExpertResponse {
            country,
            year,
            expert_type: expert_type.into(),
            items,
        })
    }

    pub fn item(&self, id: ItemId) -> Option<f64> {
        self.items[id.pos()].map(LikertValue::value)
    }

    pub fn items(&self) -> &[Option<LikertValue>] {
        &self.items
    }

    pub fn present_count(&self) -> usize {
        self.items.iter().filter(|v| v.is_some()).count()
    }
}

/// An ordered collection of expert responses sharing one Likert scale.
#[derive(Clone, Debug, PartialEq)]
pub struct SurveyDataset {
    responses: Vec<ExpertResponse>,
    scale_max: u8,
}

impl SurveyDataset {
    pub fn new(responses: Vec<ExpertResponse>, scale_max: u8) -> Result<Self> {
        if scale_max != 5 && scale_max != 9 {
            return Err(Error::invalid(format!(
                "scale_max must be 5 or 9, got {scale_max}"
            )));
        }
        for r in &responses {
            for v in r.items.iter().flatten() {
                if v.value() > scale_max as f64 {
                    return Err(Error::invalid(format!(
                        "rating {} in {} exceeds scale_max {scale_max}",
                        v.value(),
                        r.country
                    )));
                }
            }
        }
        Ok(SurveyDataset {
            responses,
            scale_max,
        })
    }

    pub fn responses(&self) -> &[ExpertResponse] {
        &self.responses
    }

    pub fn scale_max(&self) -> u8 {
        self.scale_max
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    /// Unique country labels in first-appearance order.
    pub fn countries(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.responses {
            if seen.insert(r.country.clone()) {
                out.push(r.country.clone());
            }
        }
        out
    }

    /// Concatenate datasets sharing a scale, preserving order.
    pub fn merge(mut self, other: SurveyDataset) -> Result<SurveyDataset> {
        if self.scale_max != other.scale_max {
            return Err(Error::invalid(format!(
                "cannot merge datasets with scales {} and {}",
                self.scale_max, other.scale_max
            )));
        }
        self.responses.extend(other.responses);
        Ok(self)
    }
}

/// The 12 framework-condition indicators. Conditions 2, 4, and 7 split into
/// `a`/`b` sub-indicators; the rest map to a single indicator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndicatorId {
    Finance,
    PolicySupport,
    PolicyTaxes,
    GovernmentPrograms,
    EducationSchool,
    EducationPostSchool,
    RdTransfer,
    CommercialInfrastructure,
    MarketDynamics,
    MarketOpenness,
    PhysicalInfrastructure,
    CulturalNorms,
}

impl IndicatorId {
    pub const ALL: [IndicatorId; 12] = [
        IndicatorId::Finance,
        IndicatorId::PolicySupport,
        IndicatorId::PolicyTaxes,
        IndicatorId::GovernmentPrograms,
        IndicatorId::EducationSchool,
        IndicatorId::EducationPostSchool,
        IndicatorId::RdTransfer,
        IndicatorId::CommercialInfrastructure,
        IndicatorId::MarketDynamics,
        IndicatorId::MarketOpenness,
        IndicatorId::PhysicalInfrastructure,
        IndicatorId::CulturalNorms,
    ];

    /// Short id used in CSV files: `1`, `2a`, `2b`, ..., `9`.
    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorId::Finance => "1",
            IndicatorId::PolicySupport => "2a",
            IndicatorId::PolicyTaxes => "2b",
            IndicatorId::GovernmentPrograms => "3",
            IndicatorId::EducationSchool => "4a",
            IndicatorId::EducationPostSchool => "4b",
            IndicatorId::RdTransfer => "5",
            IndicatorId::CommercialInfrastructure => "6",
            IndicatorId::MarketDynamics => "7a",
            IndicatorId::MarketOpenness => "7b",
            IndicatorId::PhysicalInfrastructure => "8",
            IndicatorId::CulturalNorms => "9",
        }
    }

    /// Framework-condition number (1..=9); sub-indicators share a number.
    pub fn condition(self) -> u8 {
        match self {
            IndicatorId::Finance => 1,
            IndicatorId::PolicySupport | IndicatorId::PolicyTaxes => 2,
            IndicatorId::GovernmentPrograms => 3,
            IndicatorId::EducationSchool | IndicatorId::EducationPostSchool => 4,
            IndicatorId::RdTransfer => 5,
            IndicatorId::CommercialInfrastructure => 6,
            IndicatorId::MarketDynamics | IndicatorId::MarketOpenness => 7,
            IndicatorId::PhysicalInfrastructure => 8,
            IndicatorId::CulturalNorms => 9,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            IndicatorId::Finance => "Entrepreneurial Finance",
            IndicatorId::PolicySupport => "Government Policy: Support and Relevance",
            IndicatorId::PolicyTaxes => "Government Policy: Taxes and Bureaucracy",
            IndicatorId::GovernmentPrograms => "Government Entrepreneurship Programs",
            IndicatorId::EducationSchool => "Entrepreneurship Education at School",
            IndicatorId::EducationPostSchool => "Entrepreneurship Education Post-School",
            IndicatorId::RdTransfer => "R&D Transfer",
            IndicatorId::CommercialInfrastructure => "Commercial and Legal Infrastructure",
            IndicatorId::MarketDynamics => "Market Dynamics",
            IndicatorId::MarketOpenness => "Market Openness",
            IndicatorId::PhysicalInfrastructure => "Physical Infrastructure",
            IndicatorId::CulturalNorms => "Cultural and Social Norms",
        }
    }
}

impl FromStr for IndicatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndicatorId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown indicator id `{s}`")))
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One indicator with its assigned questionnaire items.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicator {
    pub id: IndicatorId,
    pub label: String,
    pub items: Vec<ItemId>,
}

/// Items per framework condition 1..=9.
const CONDITION_ITEM_COUNTS: [usize; 9] = [8, 7, 6, 6, 6, 5, 6, 5, 5];

/// Item-to-indicator map. Valid catalogs partition items 1..=54 across the
/// 12 indicators with per-condition counts 8,7,6,6,6,5,6,5,5.
#[derive(Clone, Debug, PartialEq)]
pub struct EfcCatalog {
    indicators: Vec<Indicator>,
}

impl EfcCatalog {
    fn validate(indicators: Vec<Indicator>) -> Result<Self> {
        let mut seen_ids = BTreeSet::new();
        for ind in &indicators {
            if !seen_ids.insert(ind.id) {
                return Err(Error::invalid(format!("duplicate indicator {}", ind.id)));
            }
        }
        if seen_ids.len() != IndicatorId::ALL.len() {
            return Err(Error::invalid("catalog must define all 12 indicators"));
        }
        let mut owner = [None::<IndicatorId>; NUM_ITEMS];
        for ind in &indicators {
            for item in &ind.items {
                if let Some(prev) = owner[item.pos()] {
                    return Err(Error::invalid(format!(
                        "item {item} assigned to both {prev} and {}",
                        ind.id
                    )));
                }
                owner[item.pos()] = Some(ind.id);
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::invalid(format!(
                "item {} assigned to no indicator",
                i + 1
            )));
        }
        let mut per_condition = [0usize; 9];
        for ind in &indicators {
            per_condition[ind.id.condition() as usize - 1] += ind.items.len();
        }
        if per_condition != CONDITION_ITEM_COUNTS {
            return Err(Error::invalid(format!(
                "per-condition item counts {per_condition:?} do not match required {CONDITION_ITEM_COUNTS:?}"
            )));
        }
        Ok(EfcCatalog { indicators })
    }

    pub fn indicators(&self) -> &[Indicator] {
        &self.indicators
    }

    pub fn indicator(&self, id: IndicatorId) -> &Indicator {
        self.indicators
            .iter()
            .find(|ind| ind.id == id)
            .expect("validated catalog contains all indicators")
    }

    /// All items of a framework condition (sub-indicators merged), 1..=9.
    pub fn condition_items(&self, condition: u8) -> Result<Vec<ItemId>> {
        if !(1..=9).contains(&condition) {
            return Err(Error::invalid(format!(
                "condition {condition} out of range 1..=9"
            )));
        }
        let mut items: Vec<ItemId> = self
            .indicators
            .iter()
            .filter(|ind| ind.id.condition() == condition)
            .flat_map(|ind| ind.items.iter().copied())
            .collect();
        items.sort();
        Ok(items)
    }

    /// Re-assign individual items, keeping everything else from `self`.
    /// The result must still be a valid catalog.
    pub fn with_overrides(&self, overrides: &[(IndicatorId, ItemId)]) -> Result<EfcCatalog> {
        let mut owner: Vec<IndicatorId> = vec![IndicatorId::Finance; NUM_ITEMS];
        for ind in &self.indicators {
            for item in &ind.items {
                owner[item.pos()] = ind.id;
            }
        }
        for (id, item) in overrides {
            owner[item.pos()] = *id;
        }
        let indicators = IndicatorId::ALL
            .iter()
            .map(|&id| Indicator {
                id,
                label: id.label().to_string(),
                items: ItemId::all().filter(|it| owner[it.pos()] == id).collect(),
            })
            .collect();
        EfcCatalog::validate(indicators)
    }
}

/// Default catalog: items 1..=54 assigned to conditions in questionnaire
/// order with the Table-A1 counts (8,7,6,6,6,5,6,5,5). Within the split
/// conditions the leading items go to the `a` sub-indicator (4+3, 3+3, 3+3);
/// the exact split is not published, so it is overridable via
/// [`EfcCatalog::with_overrides`] / the `--catalog` CLI flag.
pub fn default_catalog() -> EfcCatalog {
    let ranges: [(IndicatorId, std::ops::RangeInclusive<usize>); 12] = [
        (IndicatorId::Finance, 1..=8),
        (IndicatorId::PolicySupport, 9..=12),
        (IndicatorId::PolicyTaxes, 13..=15),
        (IndicatorId::GovernmentPrograms, 16..=21),
        (IndicatorId::EducationSchool, 22..=24),
        (IndicatorId::EducationPostSchool, 25..=27),
        (IndicatorId::RdTransfer, 28..=33),
        (IndicatorId::CommercialInfrastructure, 34..=38),
        (IndicatorId::MarketDynamics, 39..=41),
        (IndicatorId::MarketOpenness, 42..=44),
        (IndicatorId::PhysicalInfrastructure, 45..=49),
        (IndicatorId::CulturalNorms, 50..=54),
    ];
    let indicators = ranges
        .into_iter()
        .map(|(id, range)| Indicator {
            id,
            label: id.label().to_string(),
            items: range.map(|i| ItemId::new(i).unwrap()).collect(),
        })
        .collect();
    EfcCatalog::validate(indicators).expect("default catalog is valid")
}

/// Per-country aggregate of the composite index.
#[derive(Clone, Debug, PartialEq)]
pub struct CountrySummary {
    pub country: String,
    /// Number of experts with a scorable composite index.
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub sd: f64,
    /// Standard error of the mean, sd/sqrt(n).
    pub se: f64,
    /// Set when n == 1: sd and se carry no spread information.
    pub degenerate: bool,
}

impl CountrySummary {
    /// Build from micro-data moments; se is derived as sd/sqrt(n).
    pub fn from_moments(country: impl Into<String>, n: usize, mean: f64, sd: f64) -> Result<Self> {
        let country = country.into();
        if n < 1 {
            return Err(Error::invalid(format!(
                "{country}: expert count must be >= 1"
            )));
        }
        if !mean.is_finite() {
            return Err(Error::invalid(format!("{country}: mean must be finite")));
        }
        if sd < 0.0 || !sd.is_finite() {
            return Err(Error::invalid(format!(
                "{country}: sd must be finite and >= 0"
            )));
        }
        Ok(CountrySummary {
            se: sd / (n as f64).sqrt(),
            degenerate: n == 1,
            country,
            n,
            mean,
            sd,
        })
    }
}

/// The built-in 2018 reference summaries (54 countries, descending mean).
pub fn table1_fixture() -> Vec<CountrySummary> {
    table1::TABLE1
        .iter()
        .map(|&(country, n, mean, sd)| {
            CountrySummary::from_moments(country, n, mean, sd).expect("fixture rows are valid")
        })
        .collect()
}

fn csv_reader<R: io::Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(source)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn check_duplicate_headers(headers: &csv::StringRecord) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in headers.iter() {
        if !seen.insert(name) {
            return Err(Error::parse(format!("duplicate header column `{name}`")));
        }
    }
    Ok(())
}

/// Parse micro-data CSV (`country,year,expert_type,item_01..item_54`).
/// Blank item cells mean "missing"; all present values are range-checked
/// against `scale_max`. Errors name the offending line and column.
pub fn parse_responses<R: io::Read>(source: R, scale_max: u8) -> Result<SurveyDataset> {
    if scale_max != 5 && scale_max != 9 {
        return Err(Error::invalid(format!(
            "scale_max must be 5 or 9, got {scale_max}"
        )));
    }
    let mut reader = csv_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .clone();
    check_duplicate_headers(&headers)?;
    let mut expected: Vec<String> = vec!["country".into(), "year".into(), "expert_type".into()];
    expected.extend(ItemId::all().map(|it| it.column_name()));
    let actual: Vec<&str> = headers.iter().collect();
    if actual != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::parse(format!(
            "unexpected header: want `country,year,expert_type,item_01..item_{NUM_ITEMS}`, got `{}`",
            actual.join(",")
        )));
    }

    let mut responses = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let line = record_line(&record);
        if record.len() != 3 + NUM_ITEMS {
            return Err(Error::parse(format!(
                "line {line}: expected {} fields, got {}",
                3 + NUM_ITEMS,
                record.len()
            )));
        }
        let country = record[0].trim().to_string();
        if country.is_empty() {
            return Err(Error::parse(format!(
                "line {line}, column country: empty label"
            )));
        }
        let year: u16 = record[1].trim().parse().map_err(|_| {
            Error::parse(format!(
                "line {line}, column year: `{}` is not a year",
                &record[1]
            ))
        })?;
        if !YEAR_RANGE.contains(&year) {
            return Err(Error::parse(format!(
                "line {line}, column year: {year} out of range {}..={}",
                YEAR_RANGE.start(),
                YEAR_RANGE.end()
            )));
        }
        let expert_type = record[2].trim().to_string();
        let mut items = Vec::with_capacity(NUM_ITEMS);
        for item in ItemId::all() {
            let cell = record[2 + item.index()].trim();
            if cell.is_empty() {
                items.push(None);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| {
                Error::parse(format!(
                    "line {line}, column {}: `{cell}` is not a number",
                    item.column_name()
                ))
            })?;
            let rating = LikertValue::new(value, scale_max).map_err(|_| {
                Error::parse(format!(
                    "line {line}, column {}: value {value} out of range 1..={scale_max}",
                    item.column_name()
                ))
            })?;
            items.push(Some(rating));
        }
        responses.push(
            ExpertResponse::new(country, year, expert_type, items)
                .map_err(|e| Error::parse(format!("line {line}: {e}")))?,
        );
    }
    SurveyDataset::new(responses, scale_max)
}

/// Serialize micro-data to CSV; `meta` lines are embedded as `#` comments.
/// `parse_responses` on the output reproduces the dataset exactly.
pub fn write_responses_csv(ds: &SurveyDataset, meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["country".into(), "year".into(), "expert_type".into()];
    header.extend(ItemId::all().map(|it| it.column_name()));
    writer.write_record(&header).unwrap();
    for r in ds.responses() {
        let mut row: Vec<String> =
            vec![r.country.clone(), r.year.to_string(), r.expert_type.clone()];
        for v in r.items() {
            row.push(v.map(|x| x.value().to_string()).unwrap_or_default());
        }
        writer.write_record(&row).unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parse summary CSV (`country,n,mean,sd[,se]`). When the se column is
/// absent it is derived as sd/sqrt(n).
pub fn parse_summaries<R: io::Read>(source: R) -> Result<Vec<CountrySummary>> {
    let mut reader = csv_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .clone();
    check_duplicate_headers(&headers)?;
    let actual: Vec<&str> = headers.iter().collect();
    let has_se = match actual.as_slice() {
        ["country", "n", "mean", "sd"] => false,
        ["country", "n", "mean", "sd", "se"] => true,
        _ => {
            return Err(Error::parse(format!(
                "unexpected header: want `country,n,mean,sd[,se]`, got `{}`",
                actual.join(",")
            )))
        }
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let line = record_line(&record);
        let country = record[0].trim().to_string();
        if country.is_empty() {
            return Err(Error::parse(format!(
                "line {line}, column country: empty label"
            )));
        }
        let n: i64 = record[1].trim().parse().map_err(|_| {
            Error::parse(format!(
                "line {line}, column n: `{}` is not an integer",
                &record[1]
            ))
        })?;
        if n < 1 {
            return Err(Error::parse(format!(
                "line {line}, column n: expert count {n} must be >= 1"
            )));
        }
        let parse_f = |idx: usize, name: &str| -> Result<f64> {
            record[idx].trim().parse().map_err(|_| {
                Error::parse(format!(
                    "line {line}, column {name}: `{}` is not a number",
                    &record[idx]
                ))
            })
        };
        let mean = parse_f(2, "mean")?;
        let sd = parse_f(3, "sd")?;
        if sd < 0.0 {
            return Err(Error::parse(format!(
                "line {line}, column sd: {sd} must be >= 0"
            )));
        }
        let mut summary = CountrySummary::from_moments(country, n as usize, mean, sd)
            .map_err(|e| Error::parse(format!("line {line}: {e}")))?;
        if has_se {
            let se = parse_f(4, "se")?;
            if se < 0.0 || !se.is_finite() {
                return Err(Error::parse(format!(
                    "line {line}, column se: {se} must be finite and >= 0"
                )));
            }
            summary.se = se;
        }
        rows.push(summary);
    }
    Ok(rows)
}

/// Serialize summaries as `country,n,mean,sd,se` with `#` metadata comments.
pub fn write_summaries_csv(rows: &[CountrySummary], meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["country", "n", "mean", "sd", "se"])
        .unwrap();
    for r in rows {
        writer
            .write_record([
                r.country.as_str(),
                &r.n.to_string(),
                &r.mean.to_string(),
                &r.sd.to_string(),
                &r.se.to_string(),
            ])
            .unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parse a catalog override CSV (`indicator_id,item_index`).
pub fn parse_catalog_override<R: io::Read>(source: R) -> Result<Vec<(IndicatorId, ItemId)>> {
    let mut reader = csv_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .clone();
    let actual: Vec<&str> = headers.iter().collect();
    if actual != ["indicator_id", "item_index"] {
        return Err(Error::parse(format!(
            "unexpected header: want `indicator_id,item_index`, got `{}`",
            actual.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let line = record_line(&record);
        let id: IndicatorId = record[0]
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("line {line}: {e}")))?;
        let idx: usize = record[1].trim().parse().map_err(|_| {
            Error::parse(format!(
                "line {line}, column item_index: `{}` is not an integer",
                &record[1]
            ))
        })?;
        let item = ItemId::new(idx).map_err(|e| Error::parse(format!("line {line}: {e}")))?;
        out.push((id, item));
    }
    Ok(out)
}
