//! Simultaneous confidence sets for country ranks.
//!
//! For countries j and k with estimated means m_j, m_k and standard errors
//! se_j, se_k, the difference d_jk = m_j - m_k gets a simultaneous interval
//! d_jk ± c * se_jk with se_jk = sqrt(se_j^2 + se_k^2). The critical value c
//! is the (1-alpha) bootstrap quantile of the studentized max statistic
//! max |d*_jk - d_jk| / se_jk over the calibration scope. A country's rank
//! bounds then follow from sign exclusions: every interval entirely below
//! zero is a country confidently above j, every interval entirely above zero
//! one confidently below j.
//!
//! Calibration scope: [`CalibrationScope::AllPairs`] (the default) takes the
//! max over every pair, making the rank sets of all countries jointly valid
//! at level 1-alpha. [`CalibrationScope::PerCountry`] calibrates one max per
//! focal country, which yields narrower, only marginally valid sets.
//!
//! Replicate r draws country k's perturbation from an RNG seeded by
//! (seed, r, hash of k's label), so results are independent of thread count,
//! scheduling, and input order.

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{rank_positions, CompletenessPolicy};
use crate::nes_data::{CountrySummary, SurveyDataset};
use crate::reliability::neci_groups_by_country;
use crate::stats;

/// A country-level mean with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanEstimate {
    pub id: String,
    pub mean: f64,
    pub se: f64,
    /// Expert count, when known (micro mode).
    pub n: Option<usize>,
}

impl From<&CountrySummary> for MeanEstimate {
    fn from(s: &CountrySummary) -> Self {
        MeanEstimate {
            id: s.country.clone(),
            mean: s.mean,
            se: s.se,
            n: Some(s.n),
        }
    }
}

/// One unordered pair of estimates with its mean difference.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseDiff {
    pub id_a: String,
    pub id_b: String,
    /// mean_a - mean_b.
    pub diff: f64,
    /// sqrt(se_a^2 + se_b^2).
    pub se_diff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BootstrapMode {
    /// Redraw each country mean from Normal(mean, se^2); studentize with the
    /// plug-in se_jk.
    ParametricGaussian,
    /// Resample each country's expert scores with replacement; studentize
    /// with the replicate se_jk (falling back to the plug-in value when a
    /// replicate has zero spread).
    ResampleExperts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CalibrationScope {
    #[default]
    AllPairs,
    PerCountry,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub mode: BootstrapMode,
    pub scope: CalibrationScope,
}

impl BootstrapConfig {
    /// Validated constructor: at least 100 replicates, alpha in (0, 0.5).
    pub fn new(replicates: usize, alpha: f64, seed: u64, mode: BootstrapMode) -> Result<Self> {
        if replicates < 100 {
            return Err(Error::invalid(format!(
                "bootstrap needs >= 100 replicates, got {replicates}"
            )));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::invalid(format!(
                "alpha {alpha} out of range (0, 0.5)"
            )));
        }
        Ok(BootstrapConfig {
            replicates,
            alpha,
            seed,
            mode,
            scope: CalibrationScope::default(),
        })
    }

    pub fn with_scope(mut self, scope: CalibrationScope) -> Self {
        self.scope = scope;
        self
    }
}

/// A country's point rank with simultaneous lower/upper rank bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RankConfidenceSet {
    pub id: String,
    pub point_rank: usize,
    pub lower: usize,
    pub upper: usize,
    pub mean: f64,
    pub se: f64,
}

impl RankConfidenceSet {
    /// Number of ranks in the set.
    pub fn width(&self) -> usize {
        self.upper - self.lower + 1
    }
}

fn validate_estimates(estimates: &[MeanEstimate]) -> Result<()> {
    if estimates.len() < 2 {
        return Err(Error::invalid(format!(
            "need >= 2 estimates, got {}",
            estimates.len()
        )));
    }
    let mut ids: Vec<&str> = estimates.iter().map(|e| e.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("duplicate id `{}`", w[0])));
    }
    for e in estimates {
        if !e.mean.is_finite() {
            return Err(Error::invalid(format!("{}: mean must be finite", e.id)));
        }
        if !(e.se >= 0.0 && e.se.is_finite()) {
            return Err(Error::invalid(format!(
                "{}: se must be finite and >= 0",
                e.id
            )));
        }
    }
    Ok(())
}

/// All p(p-1)/2 unordered pairwise mean differences.
pub fn pairwise_differences(estimates: &[MeanEstimate]) -> Result<Vec<PairwiseDiff>> {
    validate_estimates(estimates)?;
    let mut out = Vec::with_capacity(estimates.len() * (estimates.len() - 1) / 2);
    for (j, a) in estimates.iter().enumerate() {
        for b in estimates.iter().skip(j + 1) {
            out.push(PairwiseDiff {
                id_a: a.id.clone(),
                id_b: b.id.clone(),
                diff: a.mean - b.mean,
                se_diff: (a.se * a.se + b.se * b.se).sqrt(),
            });
        }
    }
    Ok(out)
}

fn pair_se_matrix(estimates: &[MeanEstimate]) -> Result<Vec<Vec<f64>>> {
    let p = estimates.len();
    let mut m = vec![vec![0.0; p]; p];
    for j in 0..p {
        for k in (j + 1)..p {
            let se = (estimates[j].se * estimates[j].se + estimates[k].se * estimates[k].se).sqrt();
            if se == 0.0 {
                return Err(Error::degenerate(format!(
                    "zero-variance pair ({}, {})",
                    estimates[j].id, estimates[k].id
                )));
            }
            m[j][k] = se;
            m[k][j] = se;
        }
    }
    Ok(m)
}

/// FNV-1a on the label, mixed into the replicate seed so that each country's
/// draws depend only on (seed, replicate, label).
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn country_rng(seed: u64, replicate: usize, label: &str) -> ChaCha8Rng {
    let rep = stats::replicate_seed(seed, replicate as u64);
    ChaCha8Rng::seed_from_u64(stats::splitmix64(rep ^ label_hash(label)))
}

/// Per-country expert scores aligned with the estimates, for resample mode.
fn resample_groups(
    estimates: &[MeanEstimate],
    micro: Option<&SurveyDataset>,
) -> Result<Vec<Vec<f64>>> {
    let ds = micro
        .ok_or_else(|| Error::invalid("resample mode requires micro-data; got summaries only"))?;
    let groups = neci_groups_by_country(ds, CompletenessPolicy::RequireAll)?;
    estimates
        .iter()
        .map(|e| {
            groups
                .iter()
                .find(|(c, _)| *c == e.id)
                .map(|(_, scores)| scores.clone())
                .ok_or_else(|| {
                    Error::invalid(format!("no scorable experts for `{}` in micro-data", e.id))
                })
        })
        .collect()
}

/// One bootstrap replicate: the per-focal-country maxima of the studentized
/// statistic. Entry j is max over k != j.
fn replicate_maxima(
    replicate: usize,
    estimates: &[MeanEstimate],
    se_pair: &[Vec<f64>],
    groups: Option<&[Vec<f64>]>,
    cfg: &BootstrapConfig,
) -> Vec<f64> {
    let p = estimates.len();
    let mut eps = vec![0.0; p];
    let mut se_star = vec![0.0; p];
    for (k, e) in estimates.iter().enumerate() {
        let mut rng = country_rng(cfg.seed, replicate, &e.id);
        match groups {
            None => {
                let z: f64 = StandardNormal.sample(&mut rng);
                eps[k] = e.se * z;
            }
            Some(gs) => {
                let scores = &gs[k];
                let n = scores.len();
                let draw: Vec<f64> = (0..n).map(|_| scores[rng.gen_range(0..n)]).collect();
                eps[k] = stats::mean(&draw) - e.mean;
                se_star[k] = stats::sample_sd(&draw) / (n as f64).sqrt();
            }
        }
    }
    let mut maxima = vec![0.0f64; p];
    for j in 0..p {
        for k in (j + 1)..p {
            let denom = match cfg.mode {
                BootstrapMode::ParametricGaussian => se_pair[j][k],
                BootstrapMode::ResampleExperts => {
                    let s = (se_star[j] * se_star[j] + se_star[k] * se_star[k]).sqrt();
                    if s > 0.0 {
                        s
                    } else {
                        se_pair[j][k]
                    }
                }
            };
            let stat = (eps[j] - eps[k]).abs() / denom;
            if stat > maxima[j] {
                maxima[j] = stat;
            }
            if stat > maxima[k] {
                maxima[k] = stat;
            }
        }
    }
    maxima
}

/// Bootstrap critical values, one per estimate (equal across countries under
/// [`CalibrationScope::AllPairs`]). Deterministic given the config seed.
pub fn bootstrap_critical_values(
    estimates: &[MeanEstimate],
    cfg: &BootstrapConfig,
    micro: Option<&SurveyDataset>,
) -> Result<Vec<f64>> {
    validate_estimates(estimates)?;
    BootstrapConfig::new(cfg.replicates, cfg.alpha, cfg.seed, cfg.mode)?;
    let se_pair = pair_se_matrix(estimates)?;
    let groups = match cfg.mode {
        BootstrapMode::ParametricGaussian => None,
        BootstrapMode::ResampleExperts => Some(resample_groups(estimates, micro)?),
    };

    let maxima: Vec<Vec<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| replicate_maxima(r, estimates, &se_pair, groups.as_deref(), cfg))
        .collect();

    let q = 1.0 - cfg.alpha;
    let p = estimates.len();
    match cfg.scope {
        CalibrationScope::AllPairs => {
            let global: Vec<f64> = maxima
                .iter()
                .map(|row| row.iter().cloned().fold(0.0, f64::max))
                .collect();
            let c = stats::empirical_quantile(&global, q);
            Ok(vec![c; p])
        }
        CalibrationScope::PerCountry => Ok((0..p)
            .map(|j| {
                let col: Vec<f64> = maxima.iter().map(|row| row[j]).collect();
                stats::empirical_quantile(&col, q)
            })
            .collect()),
    }
}

/// Simultaneous rank confidence sets, in input order. `micro` is required
/// for [`BootstrapMode::ResampleExperts`] and ignored otherwise.
pub fn rank_confidence_sets(
    estimates: &[MeanEstimate],
    cfg: &BootstrapConfig,
    micro: Option<&SurveyDataset>,
) -> Result<Vec<RankConfidenceSet>> {
    let critical = bootstrap_critical_values(estimates, cfg, micro)?;
    let se_pair = pair_se_matrix(estimates)?;
    let pairs: Vec<(&str, f64)> = estimates.iter().map(|e| (e.id.as_str(), e.mean)).collect();
    let ranks = rank_positions(&pairs);
    let p = estimates.len();
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut above = 0usize; // countries confidently above j
        let mut below = 0usize; // countries confidently below j
        for k in 0..p {
            if k == j {
                continue;
            }
            let d = estimates[j].mean - estimates[k].mean;
            let half = critical[j] * se_pair[j][k];
            // a bound exactly at zero does not exclude (wider, conservative set)
            if d + half < 0.0 {
                above += 1;
            }
            if d - half > 0.0 {
                below += 1;
            }
        }
        let lower = 1 + above;
        let upper = p - below;
        debug_assert!(lower <= ranks[j] && ranks[j] <= upper);
        out.push(RankConfidenceSet {
            id: estimates[j].id.clone(),
            point_rank: ranks[j],
            lower: lower.min(ranks[j]),
            upper: upper.max(ranks[j]),
            mean: estimates[j].mean,
            se: estimates[j].se,
        });
    }
    Ok(out)
}

/// What-if projection: replace each country's se by sd/sqrt(n_experts) and
/// recompute parametric rank confidence sets.
pub fn project_sample_size(
    summaries: &[CountrySummary],
    n_experts: usize,
    cfg: &BootstrapConfig,
) -> Result<Vec<RankConfidenceSet>> {
    if n_experts < 2 {
        return Err(Error::invalid(format!(
            "projection needs n_experts >= 2, got {n_experts}"
        )));
    }
    let estimates: Vec<MeanEstimate> = summaries
        .iter()
        .map(|s| {
            if !s.sd.is_finite() {
                return Err(Error::invalid(format!("{}: missing sd", s.country)));
            }
            Ok(MeanEstimate {
                id: s.country.clone(),
                mean: s.mean,
                se: s.sd / (n_experts as f64).sqrt(),
                n: Some(n_experts),
            })
        })
        .collect::<Result<_>>()?;
    let mut parametric = *cfg;
    parametric.mode = BootstrapMode::ParametricGaussian;
    rank_confidence_sets(&estimates, &parametric, None)
}

/// Serialize rank sets sorted by point rank, with `#` metadata comments.
pub fn write_rank_sets_csv(sets: &[RankConfidenceSet], meta: &[String]) -> String {
    let mut rows = sets.to_vec();
    rows.sort_by_key(|s| s.point_rank);
    let mut out = String::new();
    for m in meta {
        out.push_str("# ");
        out.push_str(m);
        out.push('\n');
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["country", "point_rank", "lower", "upper", "mean", "se"])
        .unwrap();
    for s in &rows {
        writer
            .write_record([
                s.id.as_str(),
                &s.point_rank.to_string(),
                &s.lower.to_string(),
                &s.upper.to_string(),
                &s.mean.to_string(),
                &s.se.to_string(),
            ])
            .unwrap();
    }
    out.push_str(&String::from_utf8(writer.into_inner().unwrap()).unwrap());
    out
}

/// Parse CSV produced by [`write_rank_sets_csv`].
pub fn read_rank_sets_csv<R: std::io::Read>(source: R) -> Result<Vec<RankConfidenceSet>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(source);
    let headers: Vec<&str> = reader
        .headers()
        .map_err(|e| Error::parse(format!("cannot read header: {e}")))?
        .iter()
        .collect();
    if headers != ["country", "point_rank", "lower", "upper", "mean", "se"] {
        return Err(Error::parse(format!(
            "unexpected header `{}`",
            headers.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(format!("malformed row: {e}")))?;
        let field = |i: usize| record[i].trim().to_string();
        let parse_usize = |i: usize, name: &str| -> Result<usize> {
            record[i].trim().parse().map_err(|_| {
                Error::parse(format!("column {name}: `{}` is not an integer", &record[i]))
            })
        };
        let parse_f = |i: usize, name: &str| -> Result<f64> {
            record[i].trim().parse().map_err(|_| {
                Error::parse(format!("column {name}: `{}` is not a number", &record[i]))
            })
        };
        out.push(RankConfidenceSet {
            id: field(0),
            point_rank: parse_usize(1, "point_rank")?,
            lower: parse_usize(2, "lower")?,
            upper: parse_usize(3, "upper")?,
            mean: parse_f(4, "mean")?,
            se: parse_f(5, "se")?,
        });
    }
    Ok(out)
}
