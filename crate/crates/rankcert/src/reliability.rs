//! Reliability diagnostics for the composite index: internal consistency
//! (Cronbach's alpha), interrater agreement (one-way random-effects ICC on
//! unbalanced groups), a duplication robustness check, and expert-type
//! contrasts from a country-fixed-effects regression.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{expert_index, CompletenessPolicy};
use crate::nes_data::{ItemId, SurveyDataset};
use crate::stats;

/// Complete-case expert-by-item score matrix.
#[derive(Clone, Debug)]
pub struct ItemMatrix {
    rows: Vec<Vec<f64>>,
    cols: usize,
}

impl ItemMatrix {
    /// Requires a rectangular matrix with at least 2 rows and 2 columns.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid(format!(
                "item matrix needs >= 2 complete-case rows, got {}",
                rows.len()
            )));
        }
        let cols = rows[0].len();
        if cols < 2 {
            return Err(Error::invalid(format!(
                "item matrix needs >= 2 item columns, got {cols}"
            )));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("item matrix rows have unequal lengths"));
        }
        Ok(ItemMatrix { rows, cols })
    }

    /// Complete cases of `ds` over the given items (listwise deletion).
    pub fn from_dataset(ds: &SurveyDataset, items: &[ItemId]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = ds
            .responses()
            .iter()
            .filter_map(|r| {
                let vals: Vec<f64> = items.iter().filter_map(|&it| r.item(it)).collect();
                (vals.len() == items.len()).then_some(vals)
            })
            .collect();
        ItemMatrix::new(rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Cronbach's alpha: (k/(k-1)) * (1 - sum of item variances / variance of
/// row totals), with sample (n-1) variances throughout. Can be negative;
/// never exceeds 1.
pub fn cronbach_alpha(m: &ItemMatrix) -> Result<f64> {
    let k = m.n_cols() as f64;
    let totals: Vec<f64> = m.rows.iter().map(|r| r.iter().sum()).collect();
    let total_var = stats::sample_variance(&totals);
    if total_var <= 0.0 {
        return Err(Error::degenerate(
            "degenerate matrix: zero total-score variance",
        ));
    }
    let item_var_sum: f64 = (0..m.n_cols())
        .map(|j| stats::sample_variance(&m.column(j)))
        .sum();
    Ok(k / (k - 1.0) * (1.0 - item_var_sum / total_var))
}

/// One-way random-effects ANOVA decomposition for (possibly unbalanced)
/// rater groups.
#[derive(Clone, Debug)]
pub struct IccResult {
    /// Raw estimate sigma2_between / (sigma2_between + ms_within); negative
    /// values are reported as-is with `negative` set.
    pub icc: f64,
    pub ms_between: f64,
    pub ms_within: f64,
    /// Average-group-size adjustment (N - sum n_i^2 / N) / (G - 1); equals
    /// the common group size for balanced designs.
    pub k0: f64,
    pub sigma2_between: f64,
    pub groups: usize,
    pub total_n: usize,
    /// True when the raw estimate is below zero (callers may truncate).
    pub negative: bool,
}

/// ICC(1) from a one-way random-effects model on unbalanced groups.
pub fn icc_oneway(groups: &[Vec<f64>]) -> Result<IccResult> {
    if groups.len() < 2 {
        return Err(Error::invalid(format!(
            "need >= 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(Error::invalid(format!("group {} is empty", i + 1)));
    }
    let g = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= g {
        return Err(Error::invalid(format!(
            "need more observations ({n}) than groups ({g})"
        )));
    }
    let first = groups[0][0];
    if groups.iter().flatten().all(|&v| v == first) {
        return Err(Error::degenerate("no variance: all values identical"));
    }

    let n_f = n as f64;
    let grand = groups.iter().flatten().sum::<f64>() / n_f;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    let mut sum_sq_sizes = 0.0;
    for grp in groups {
        let ni = grp.len() as f64;
        let mi = stats::mean(grp);
        ssb += ni * (mi - grand) * (mi - grand);
        ssw += grp.iter().map(|v| (v - mi) * (v - mi)).sum::<f64>();
        sum_sq_sizes += ni * ni;
    }
    let ms_between = ssb / (g as f64 - 1.0);
    let ms_within = ssw / (n_f - g as f64);
    let k0 = (n_f - sum_sq_sizes / n_f) / (g as f64 - 1.0);
    let sigma2_between = (ms_between - ms_within) / k0;
    let icc = sigma2_between / (sigma2_between + ms_within);
    Ok(IccResult {
        icc,
        ms_between,
        ms_within,
        k0,
        sigma2_between,
        groups: g,
        total_n: n,
        negative: icc < 0.0,
    })
}

/// Replicate every observation `factor` times and recompute the ICC. A high
/// ICC after duplication would indicate that a low raw ICC was driven by
/// small groups rather than rater disagreement.
pub fn duplication_check(groups: &[Vec<f64>], factor: usize) -> Result<IccResult> {
    if factor < 2 {
        return Err(Error::invalid(format!(
            "duplication factor must be >= 2, got {factor}"
        )));
    }
    let expanded: Vec<Vec<f64>> = groups
        .iter()
        .map(|grp| {
            grp.iter()
                .flat_map(|&v| std::iter::repeat_n(v, factor))
                .collect()
        })
        .collect();
    icc_oneway(&expanded)
}

/// Expert composite scores grouped by country (input order), restricted to
/// experts scorable under `policy`. Countries without a scorable expert are
/// dropped.
pub fn neci_groups_by_country(
    ds: &SurveyDataset,
    policy: CompletenessPolicy,
) -> Result<Vec<(String, Vec<f64>)>> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for country in ds.countries() {
        let scores: Vec<f64> = ds
            .responses()
            .iter()
            .filter(|r| r.country == country)
            .filter_map(|r| expert_index(r, policy))
            .collect();
        if !scores.is_empty() {
            out.push((country, scores));
        }
    }
    if out.is_empty() {
        return Err(Error::degenerate(
            "no scorable experts under the completeness policy",
        ));
    }
    Ok(out)
}

/// Deviation of one expert type from the frequency-weighted adjusted grand
/// mean, after absorbing country fixed effects.
#[derive(Clone, Debug)]
pub struct TypeEffect {
    pub expert_type: String,
    pub n: usize,
    pub delta: f64,
    pub se: f64,
    /// Two-sided t-test of delta = 0 at the 5% level.
    pub significant: bool,
}

#[derive(Clone, Debug)]
pub struct TypeEffects {
    /// One entry per expert type, sorted by type label.
    pub effects: Vec<TypeEffect>,
    pub residual_df: f64,
}

/// Within-country demeaned OLS of expert composite scores on expert-type
/// indicators. Deltas are deviations from the frequency-weighted adjusted
/// grand mean, so they satisfy sum_t n_t * delta_t = 0. Standard errors come
/// from the homoskedastic residual variance with N - C - (T-1) degrees of
/// freedom.
pub fn expert_type_effects(ds: &SurveyDataset, policy: CompletenessPolicy) -> Result<TypeEffects> {
    // observations: (country, type, score)
    let mut obs: Vec<(String, String, f64)> = Vec::new();
    for r in ds.responses() {
        if let Some(score) = expert_index(r, policy) {
            obs.push((r.country.clone(), r.expert_type.clone(), score));
        }
    }
    if obs.is_empty() {
        return Err(Error::degenerate(
            "no scorable experts under the completeness policy",
        ));
    }

    let mut type_counts: BTreeMap<String, usize> = BTreeMap::new();
    for (_, t, _) in &obs {
        *type_counts.entry(t.clone()).or_default() += 1;
    }
    let types: Vec<String> = type_counts.keys().cloned().collect();
    let n = obs.len();

    if types.len() == 1 {
        // single type: no contrast, delta is zero by definition
        return Ok(TypeEffects {
            effects: vec![TypeEffect {
                expert_type: types[0].clone(),
                n,
                delta: 0.0,
                se: 0.0,
                significant: false,
            }],
            residual_df: 0.0,
        });
    }

    // within-country demeaning of y and the T-1 dummy columns
    // (reference = lexicographically first type)
    let reference = &types[0];
    let coef_types: Vec<&String> = types.iter().skip(1).collect();
    let p = coef_types.len();

    let mut country_index: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (c, _, _)) in obs.iter().enumerate() {
        country_index.entry(c.as_str()).or_default().push(i);
    }
    let n_countries = country_index.len();

    let mut y: Vec<f64> = obs.iter().map(|(_, _, s)| *s).collect();
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            obs.iter()
                .map(|(_, t, _)| if t == coef_types[j] { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    for indices in country_index.values() {
        let ni = indices.len() as f64;
        let ym: f64 = indices.iter().map(|&i| y[i]).sum::<f64>() / ni;
        for &i in indices {
            y[i] -= ym;
        }
        for col in x.iter_mut() {
            let xm: f64 = indices.iter().map(|&i| col[i]).sum::<f64>() / ni;
            for &i in indices {
                col[i] -= xm;
            }
        }
    }

    // a type whose demeaned indicator vanishes is absorbed by the country
    // fixed effects
    for (j, col) in x.iter().enumerate() {
        let ss: f64 = col.iter().map(|v| v * v).sum();
        if ss < 1e-12 {
            return Err(Error::degenerate(format!(
                "expert type `{}` is perfectly collinear with country",
                coef_types[j]
            )));
        }
    }

    // normal equations on the demeaned data
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for a in 0..p {
        for b in a..p {
            let s: f64 = (0..n).map(|i| x[a][i] * x[b][i]).sum();
            xtx[a][b] = s;
            xtx[b][a] = s;
        }
        xty[a] = (0..n).map(|i| x[a][i] * y[i]).sum();
    }
    let beta = solve(&xtx, &xty)
        .ok_or_else(|| Error::degenerate("expert-type design is singular after demeaning"))?;

    // residual variance
    let mut rss = 0.0;
    for i in 0..n {
        let fit: f64 = (0..p).map(|j| beta[j] * x[j][i]).sum();
        let e = y[i] - fit;
        rss += e * e;
    }
    let df = n as f64 - n_countries as f64 - p as f64;
    if df < 1.0 {
        return Err(Error::invalid(
            "not enough observations for expert-type standard errors",
        ));
    }
    let sigma2 = rss / df;
    let xtx_inv = invert(&xtx)
        .ok_or_else(|| Error::degenerate("expert-type design is singular after demeaning"))?;

    // adjusted effect per type (reference pinned at 0), then deviations from
    // the frequency-weighted mean of effects
    let weights: Vec<f64> = types
        .iter()
        .map(|t| type_counts[t] as f64 / n as f64)
        .collect();
    let effect_of = |t: &String| -> f64 {
        if t == reference {
            0.0
        } else {
            beta[coef_types.iter().position(|c| *c == t).unwrap()]
        }
    };
    let weighted_mean: f64 = types
        .iter()
        .zip(&weights)
        .map(|(t, w)| w * effect_of(t))
        .sum();

    let mut effects = Vec::with_capacity(types.len());
    for t in &types {
        let delta = effect_of(t) - weighted_mean;
        // delta = sum_j c_j * beta_j with c_j = 1{type_j == t} - w_j
        let c: Vec<f64> = coef_types
            .iter()
            .map(|ct| {
                let ind = if *ct == t { 1.0 } else { 0.0 };
                ind - weights[types.iter().position(|x| x == *ct).unwrap()]
            })
            .collect();
        let mut var = 0.0;
        for a in 0..p {
            for b in 0..p {
                var += c[a] * c[b] * xtx_inv[a][b];
            }
        }
        var *= sigma2;
        let se = var.max(0.0).sqrt();
        let significant = if se > 0.0 {
            stats::student_t_two_sided_p(delta / se, df) < 0.05
        } else {
            delta != 0.0
        };
        effects.push(TypeEffect {
            expert_type: t.clone(),
            n: type_counts[t],
            delta,
            se,
            significant,
        });
    }
    Ok(TypeEffects {
        effects,
        residual_df: df,
    })
}

/// Gaussian elimination with partial pivoting; None when singular.
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        let pivot_row = m[col].clone();
        for (row, r) in m.iter_mut().enumerate() {
            if row != col {
                let f = r[col] / pivot_row[col];
                for (k, &pv) in pivot_row.iter().enumerate().skip(col) {
                    r[k] -= f * pv;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    // cols[j] is the j-th column of the inverse
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect(),
    )
}
