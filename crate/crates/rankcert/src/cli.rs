//! The `rankcert` command line. Subcommands cover the whole pipeline:
//! `index` (summaries + indicator scores), `reliability` (alpha/ICC/type
//! deltas), `rank` (confidence sets for ranks), `whatif` (sample-size
//! projection), `trend` (longitudinal series), `report` (summaries + charts
//! + rank sets in one pass).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric degeneracy.
//! `RANKCERT_THREADS` caps the bootstrap worker count; results are identical
//! for any cap.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::index::{
    country_summaries, country_summaries_over_items, point_ranking, remap_dataset,
    CompletenessPolicy,
};
use crate::nes_data::{
    default_catalog, parse_catalog_override, parse_responses, parse_summaries, write_summaries_csv,
    CountrySummary, EfcCatalog, IndicatorId, SurveyDataset,
};
use crate::rank_inference::{
    project_sample_size, rank_confidence_sets, write_rank_sets_csv, BootstrapConfig, BootstrapMode,
    MeanEstimate,
};
use crate::reliability::{
    cronbach_alpha, duplication_check, expert_type_effects, icc_oneway, neci_groups_by_country,
    ItemMatrix,
};
use crate::report::{
    emit_forest_chart, emit_rank_chart, emit_trend_chart, write_efc_scores_csv,
    write_reliability_csv, ReliabilityRow, ReportBundle, RunMeta,
};
use crate::trend::{write_trend_csv, yearly_series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

const DUPLICATION_FACTOR: usize = 10;

#[derive(Parser, Debug)]
#[command(
    name = "rankcert",
    version,
    about = "Composite survey indices, reliability diagnostics, and bootstrap confidence sets for country rankings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Country summaries and per-indicator scores from micro-data
    Index(IndexArgs),
    /// Reliability report: alphas, ICC, duplication check, expert-type deltas
    Reliability(IndexArgs),
    /// Bootstrap confidence sets for country ranks
    Rank(RankArgs),
    /// Rank confidence sets projected to a hypothetical expert count
    Whatif(WhatifArgs),
    /// Yearly index series with significance flags for one country
    Trend(TrendArgs),
    /// Summaries, forest chart, and rank sets in one pass
    Report(RankArgs),
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// Micro-data CSV (country,year,expert_type,item_01..item_54)
    #[arg(long)]
    input: PathBuf,
    /// Likert scale of the input (5 or 9)
    #[arg(long, default_value_t = 9)]
    scale: u8,
    /// Item-to-indicator override CSV (indicator_id,item_index)
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Accepted for flag uniformity; this subcommand uses no randomness
    #[arg(long, hide = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RankArgs {
    /// Summary CSV (country,n,mean,sd[,se]) or micro-data CSV
    #[arg(long)]
    input: PathBuf,
    /// Simultaneous level is 1 - alpha; must lie in (0, 0.5)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates (>= 100)
    #[arg(long, default_value_t = 2000)]
    replicates: usize,
    /// Bootstrap seed; identical inputs and seed reproduce outputs exactly
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// parametric redraws means from Normal(mean, se^2); resample redraws
    /// experts and needs micro-data input
    #[arg(long, value_enum, default_value_t = ModeArg::Parametric)]
    mode: ModeArg,
    /// Likert scale of micro-data input (5 or 9)
    #[arg(long, default_value_t = 9)]
    scale: u8,
    /// Output directory, or a .csv path (the chart lands beside it)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct WhatifArgs {
    #[command(flatten)]
    rank: RankArgs,
    /// Hypothetical experts per country (>= 2); se becomes sd/sqrt(n)
    #[arg(long = "n-experts")]
    n_experts: usize,
}

#[derive(Args, Debug)]
struct TrendArgs {
    /// Micro-data CSV; repeat for multi-wave panels
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Country label to chart
    #[arg(long)]
    country: String,
    /// Likert scale per input file (one value, or one per --input);
    /// 9-point waves are remapped onto the 5-point scale before pooling
    #[arg(long)]
    scale: Vec<u8>,
    /// Accepted for flag uniformity; this subcommand uses no randomness
    #[arg(long, hide = true)]
    seed: Option<u64>,
    /// Output directory, or a .csv path (the chart lands beside it)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Parametric,
    Resample,
}

impl From<ModeArg> for BootstrapMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Parametric => BootstrapMode::ParametricGaussian,
            ModeArg::Resample => BootstrapMode::ResampleExperts,
        }
    }
}

/// Parse argv, run the selected subcommand, and map errors to exit codes.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{e}");
                    EXIT_USAGE
                }
            }
        }
    };
    if let Err(msg) = validate(&cli) {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let threads = match thread_cap() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let outcome = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::invalid(format!("cannot build thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Degenerate(_) => EXIT_DEGENERATE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn thread_cap() -> std::result::Result<Option<usize>, String> {
    match std::env::var("RANKCERT_THREADS") {
        Err(_) => Ok(None),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!(
                "RANKCERT_THREADS must be a positive integer, got `{raw}`"
            )),
        },
    }
}

fn check_scale(scale: u8) -> std::result::Result<(), String> {
    if scale == 5 || scale == 9 {
        Ok(())
    } else {
        Err(format!("--scale must be 5 or 9, got {scale}"))
    }
}

fn check_bootstrap_flags(a: &RankArgs) -> std::result::Result<(), String> {
    if !(a.alpha > 0.0 && a.alpha < 0.5) {
        return Err(format!("--alpha must lie in (0, 0.5), got {}", a.alpha));
    }
    if a.replicates < 100 {
        return Err(format!("--replicates must be >= 100, got {}", a.replicates));
    }
    check_scale(a.scale)
}

fn validate(cli: &Cli) -> std::result::Result<(), String> {
    match &cli.command {
        Command::Index(a) | Command::Reliability(a) => check_scale(a.scale),
        Command::Rank(a) | Command::Report(a) => check_bootstrap_flags(a),
        Command::Whatif(a) => {
            check_bootstrap_flags(&a.rank)?;
            if a.n_experts < 2 {
                return Err(format!("--n-experts must be >= 2, got {}", a.n_experts));
            }
            Ok(())
        }
        Command::Trend(a) => {
            for &s in &a.scale {
                check_scale(s)?;
            }
            if a.scale.len() > 1 && a.scale.len() != a.input.len() {
                return Err(format!(
                    "--scale given {} times for {} inputs; give one value or one per input",
                    a.scale.len(),
                    a.input.len()
                ));
            }
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Index(a) => run_index(a, &index_echo("index", a)),
        Command::Reliability(a) => run_reliability(a, &index_echo("reliability", a)),
        Command::Rank(a) => run_rank(a, &rank_echo("rank", a)),
        Command::Whatif(a) => {
            // projections are always parametric, whatever --mode says
            let echo = format!(
                "whatif input={} alpha={} replicates={} seed={} mode=parametric scale={} out={} n_experts={}",
                a.rank.input.display(),
                a.rank.alpha,
                a.rank.replicates,
                a.rank.seed,
                a.rank.scale,
                a.rank.out.display(),
                a.n_experts
            );
            run_whatif(a, &echo)
        }
        Command::Trend(a) => run_trend(a, &trend_echo(a)),
        Command::Report(a) => run_report(a, &rank_echo("report", a)),
    }
}

// canonical config echo with resolved defaults, embedded in every artifact
fn index_echo(name: &str, a: &IndexArgs) -> String {
    format!(
        "{name} input={} scale={} catalog={} out={}",
        a.input.display(),
        a.scale,
        a.catalog
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "default".into()),
        a.out.display()
    )
}

fn rank_echo(name: &str, a: &RankArgs) -> String {
    let mode = match a.mode {
        ModeArg::Parametric => "parametric",
        ModeArg::Resample => "resample",
    };
    format!(
        "{name} input={} alpha={} replicates={} seed={} mode={mode} scale={} out={}",
        a.input.display(),
        a.alpha,
        a.replicates,
        a.seed,
        a.scale,
        a.out.display()
    )
}

fn trend_echo(a: &TrendArgs) -> String {
    let inputs: Vec<String> = a.input.iter().map(|p| p.display().to_string()).collect();
    let scales: Vec<String> = if a.scale.is_empty() {
        vec!["9".into()]
    } else {
        a.scale.iter().map(u8::to_string).collect()
    };
    format!(
        "trend input={} country={} scale={} out={}",
        inputs.join(";"),
        a.country,
        scales.join(";"),
        a.out.display()
    )
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_micro(path: &Path, scale: u8) -> Result<SurveyDataset> {
    let text = read_file(path)?;
    parse_responses(text.as_bytes(), scale)
}

fn load_catalog(path: Option<&PathBuf>) -> Result<EfcCatalog> {
    let base = default_catalog();
    match path {
        None => Ok(base),
        Some(p) => {
            let overrides = parse_catalog_override(read_file(p)?.as_bytes())?;
            base.with_overrides(&overrides)
        }
    }
}

/// Micro-data vs. summary input, detected from the header line.
fn load_estimates(
    path: &Path,
    scale: u8,
) -> Result<(
    Vec<MeanEstimate>,
    Vec<CountrySummary>,
    Option<SurveyDataset>,
)> {
    let text = read_file(path)?;
    let header = text
        .lines()
        .find(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .unwrap_or("");
    let summaries;
    let micro;
    if header.starts_with("country,year,expert_type") {
        let ds = parse_responses(text.as_bytes(), scale)?;
        summaries = country_summaries(&ds, CompletenessPolicy::RequireAll)?;
        micro = Some(ds);
    } else {
        summaries = parse_summaries(text.as_bytes())?;
        micro = None;
    }
    let estimates = summaries.iter().map(MeanEstimate::from).collect();
    Ok((estimates, summaries, micro))
}

/// A `.csv` out path names the table directly (the chart gets the same stem);
/// anything else is a directory receiving `<stem>.csv` and `<stem>.svg`.
fn out_names(out: &Path, stem: &str) -> (PathBuf, String, String) {
    if out.extension().is_some_and(|e| e == "csv") {
        let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| stem.to_string());
        let dir = if dir.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            dir
        };
        (dir, format!("{stem}.csv"), format!("{stem}.svg"))
    } else {
        (
            out.to_path_buf(),
            format!("{stem}.csv"),
            format!("{stem}.svg"),
        )
    }
}

fn emit(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    for path in bundle.write_to(dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_index(a: &IndexArgs, echo: &str) -> Result<()> {
    let ds = load_micro(&a.input, a.scale)?;
    let catalog = load_catalog(a.catalog.as_ref())?;
    let policy = CompletenessPolicy::RequireAll;
    let summaries = country_summaries(&ds, policy)?;
    let mut efc_rows: Vec<(IndicatorId, CountrySummary)> = Vec::new();
    for ind in catalog.indicators() {
        match country_summaries_over_items(&ds, &ind.items, policy) {
            Ok(rows) => efc_rows.extend(rows.into_iter().map(|s| (ind.id, s))),
            Err(Error::Degenerate(_)) => continue, // no scorable expert anywhere
            Err(e) => return Err(e),
        }
    }
    let meta = RunMeta::new(echo, None).lines();
    let mut bundle = ReportBundle::default();
    bundle.add("summaries.csv", write_summaries_csv(&summaries, &meta));
    bundle.add("efc_scores.csv", write_efc_scores_csv(&efc_rows, &meta));
    emit(&bundle, &a.out)
}

fn run_reliability(a: &IndexArgs, echo: &str) -> Result<()> {
    let ds = load_micro(&a.input, a.scale)?;
    let catalog = load_catalog(a.catalog.as_ref())?;
    let policy = CompletenessPolicy::RequireAll;
    let all_items: Vec<_> = crate::nes_data::ItemId::all().collect();
    let mut rows = Vec::new();

    let alpha_row = |scope: String, items: &[crate::nes_data::ItemId]| -> ReliabilityRow {
        let value = ItemMatrix::from_dataset(&ds, items).and_then(|m| cronbach_alpha(&m));
        match value {
            Ok(v) => ReliabilityRow {
                statistic: "alpha".into(),
                scope,
                value: Some(v),
                qualifier: String::new(),
            },
            Err(e) => ReliabilityRow {
                statistic: "alpha".into(),
                scope,
                value: None,
                qualifier: e.to_string(),
            },
        }
    };
    rows.push(alpha_row("NECI".into(), &all_items));
    for ind in catalog.indicators() {
        rows.push(alpha_row(format!("indicator_{}", ind.id), &ind.items));
    }
    for condition in 1..=9u8 {
        rows.push(alpha_row(
            format!("efc_{condition}"),
            &catalog.condition_items(condition)?,
        ));
    }

    let groups: Vec<Vec<f64>> = neci_groups_by_country(&ds, policy)?
        .into_iter()
        .map(|(_, scores)| scores)
        .collect();
    let icc = icc_oneway(&groups)?;
    rows.push(ReliabilityRow {
        statistic: "icc".into(),
        scope: "country_groups".into(),
        value: Some(icc.icc),
        qualifier: if icc.negative {
            "negative".into()
        } else {
            String::new()
        },
    });
    let dup = duplication_check(&groups, DUPLICATION_FACTOR)?;
    rows.push(ReliabilityRow {
        statistic: format!("icc_dup{DUPLICATION_FACTOR}"),
        scope: "country_groups".into(),
        value: Some(dup.icc),
        qualifier: if dup.negative {
            "negative".into()
        } else {
            String::new()
        },
    });

    let effects = expert_type_effects(&ds, policy)?;
    for e in &effects.effects {
        rows.push(ReliabilityRow {
            statistic: "type_delta".into(),
            scope: e.expert_type.clone(),
            value: Some(e.delta),
            qualifier: format!("{}{}", e.se, if e.significant { "*" } else { "" }),
        });
    }

    let meta = RunMeta::new(echo, None).lines();
    let mut bundle = ReportBundle::default();
    bundle.add("reliability.csv", write_reliability_csv(&rows, &meta));
    emit(&bundle, &a.out)
}

fn run_rank(a: &RankArgs, echo: &str) -> Result<()> {
    let (estimates, _, micro) = load_estimates(&a.input, a.scale)?;
    let cfg = BootstrapConfig::new(a.replicates, a.alpha, a.seed, a.mode.into())?;
    let sets = rank_confidence_sets(&estimates, &cfg, micro.as_ref())?;
    let meta = RunMeta::new(echo, Some(a.seed)).lines();
    let (dir, csv_name, svg_name) = out_names(&a.out, "ranks");
    let mut bundle = ReportBundle::default();
    bundle.add(csv_name, write_rank_sets_csv(&sets, &meta));
    bundle.add(svg_name, emit_rank_chart(&sets, &meta));
    emit(&bundle, &dir)
}

fn run_whatif(a: &WhatifArgs, echo: &str) -> Result<()> {
    let (_, summaries, _) = load_estimates(&a.rank.input, a.rank.scale)?;
    let cfg = BootstrapConfig::new(
        a.rank.replicates,
        a.rank.alpha,
        a.rank.seed,
        BootstrapMode::ParametricGaussian,
    )?;
    let sets = project_sample_size(&summaries, a.n_experts, &cfg)?;
    let meta = RunMeta::new(echo, Some(a.rank.seed)).lines();
    let (dir, csv_name, svg_name) = out_names(&a.rank.out, "whatif_ranks");
    let mut bundle = ReportBundle::default();
    bundle.add(csv_name, write_rank_sets_csv(&sets, &meta));
    bundle.add(svg_name, emit_rank_chart(&sets, &meta));
    emit(&bundle, &dir)
}

fn run_trend(a: &TrendArgs, echo: &str) -> Result<()> {
    let scales: Vec<u8> = match a.scale.as_slice() {
        [] => vec![9; a.input.len()],
        [s] => vec![*s; a.input.len()],
        given => given.to_vec(),
    };
    let mut merged: Option<SurveyDataset> = None;
    for (path, &scale) in a.input.iter().zip(&scales) {
        // pool everything on the 5-point scale
        let wave = remap_dataset(&load_micro(path, scale)?)?;
        merged = Some(match merged {
            None => wave,
            Some(acc) => acc.merge(wave)?,
        });
    }
    let ds = merged.expect("clap enforces at least one input");
    let series = yearly_series(&ds, &a.country, CompletenessPolicy::RequireAll)?;
    let meta = RunMeta::new(echo, None).lines();
    let (dir, csv_name, svg_name) = out_names(&a.out, "trend");
    let mut bundle = ReportBundle::default();
    bundle.add(csv_name, write_trend_csv(&series, &meta));
    bundle.add(svg_name, emit_trend_chart(&series, &meta));
    emit(&bundle, &dir)
}

fn run_report(a: &RankArgs, echo: &str) -> Result<()> {
    let (estimates, summaries, micro) = load_estimates(&a.input, a.scale)?;
    let cfg = BootstrapConfig::new(a.replicates, a.alpha, a.seed, a.mode.into())?;
    let sets = rank_confidence_sets(&estimates, &cfg, micro.as_ref())?;
    let ranking = point_ranking(&summaries);
    debug_assert_eq!(ranking.len(), sets.len());
    let meta = RunMeta::new(echo, Some(a.seed)).lines();
    let mut bundle = ReportBundle::default();
    bundle.add("summaries.csv", write_summaries_csv(&summaries, &meta));
    bundle.add("forest.svg", emit_forest_chart(&summaries, &meta));
    bundle.add("ranks.csv", write_rank_sets_csv(&sets, &meta));
    bundle.add("ranks.svg", emit_rank_chart(&sets, &meta));
    emit(&bundle, &a.out)
}
