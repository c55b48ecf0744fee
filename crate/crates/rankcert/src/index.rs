//! Composite-index construction: expert-level scores (full questionnaire and
//! per indicator), the 9-to-5-point scale remap, per-country aggregation,
//! and the point ranking.

use crate::error::{Error, Result};
use crate::nes_data::{
    CountrySummary, EfcCatalog, ExpertResponse, IndicatorId, ItemId, LikertValue, SurveyDataset,
};
use crate::stats;

/// Which experts count as scorable given missing items.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum CompletenessPolicy {
    /// Listwise rule: every item of the relevant set must be present.
    #[default]
    RequireAll,
    /// At least this fraction of the relevant items must be present.
    MinFraction(f64),
}

impl CompletenessPolicy {
    pub fn min_fraction(f: f64) -> Result<Self> {
        if f > 0.0 && f <= 1.0 {
            Ok(CompletenessPolicy::MinFraction(f))
        } else {
            Err(Error::invalid(format!(
                "completeness fraction {f} out of (0, 1]"
            )))
        }
    }

    fn satisfied(self, present: usize, total: usize) -> bool {
        match self {
            CompletenessPolicy::RequireAll => present == total,
            CompletenessPolicy::MinFraction(f) => present as f64 >= f * total as f64,
        }
    }
}

/// A country with its point rank (1 = highest mean).
#[derive(Clone, Debug, PartialEq)]
pub struct RankedCountry {
    pub country: String,
    pub rank: usize,
    pub mean: f64,
}

fn score_over_items(
    response: &ExpertResponse,
    items: &[ItemId],
    policy: CompletenessPolicy,
) -> Option<f64> {
    let present: Vec<f64> = items.iter().filter_map(|&it| response.item(it)).collect();
    if present.is_empty() || !policy.satisfied(present.len(), items.len()) {
        return None;
    }
    Some(stats::mean(&present))
}

/// Expert-level composite index: the arithmetic mean of the expert's item
/// ratings, or `None` when the completeness policy is not met.
pub fn expert_index(response: &ExpertResponse, policy: CompletenessPolicy) -> Option<f64> {
    let all: Vec<ItemId> = ItemId::all().collect();
    score_over_items(response, &all, policy)
}

/// Expert-level score for one indicator: the mean of the responses to that
/// indicator's items. `indicator` is the short id (`1`, `2a`, ..., `9`);
/// unknown ids are an error.
pub fn efc_score(
    response: &ExpertResponse,
    indicator: &str,
    catalog: &EfcCatalog,
    policy: CompletenessPolicy,
) -> Result<Option<f64>> {
    let id: IndicatorId = indicator.parse()?;
    Ok(score_over_items(
        response,
        &catalog.indicator(id).items,
        policy,
    ))
}

/// Map a score from the 9-point scale onto the 5-point scale:
/// v' = 1 + (v - 1)/2, the affine map sending endpoints to endpoints.
pub fn remap_scale(value: f64) -> Result<f64> {
    if !value.is_finite() || !(1.0..=9.0).contains(&value) {
        return Err(Error::invalid(format!("score {value} out of range 1..=9")));
    }
    Ok(1.0 + (value - 1.0) / 2.0)
}

/// Remap every rating of a 9-point dataset onto the 5-point scale.
/// A dataset already on the 5-point scale passes through unchanged.
pub fn remap_dataset(ds: &SurveyDataset) -> Result<SurveyDataset> {
    if ds.scale_max() == 5 {
        return Ok(ds.clone());
    }
    let responses = ds
        .responses()
        .iter()
        .map(|r| {
            let items = r
                .items()
                .iter()
                .map(|cell| {
                    cell.map(|v| LikertValue::new(remap_scale(v.value())?, 5))
                        .transpose()
                })
                .collect::<Result<Vec<_>>>()?;
            ExpertResponse::new(r.country.clone(), r.year, r.expert_type.clone(), items)
        })
        .collect::<Result<Vec<_>>>()?;
    SurveyDataset::new(responses, 5)
}

/// Per-country n/mean/sd/se of the expert-level composite index. Countries
/// without a single scorable expert are dropped; if no country has one the
/// call fails. Single-expert countries get sd = 0 and the degenerate flag.
pub fn country_summaries(
    ds: &SurveyDataset,
    policy: CompletenessPolicy,
) -> Result<Vec<CountrySummary>> {
    let all: Vec<ItemId> = ItemId::all().collect();
    country_summaries_over_items(ds, &all, policy)
}

/// Like [`country_summaries`] but restricted to a given item set (used for
/// indicator-level aggregation).
pub fn country_summaries_over_items(
    ds: &SurveyDataset,
    items: &[ItemId],
    policy: CompletenessPolicy,
) -> Result<Vec<CountrySummary>> {
    if ds.is_empty() {
        return Err(Error::invalid("dataset has no responses"));
    }
    let mut out = Vec::new();
    for country in ds.countries() {
        let scores: Vec<f64> = ds
            .responses()
            .iter()
            .filter(|r| r.country == country)
            .filter_map(|r| score_over_items(r, items, policy))
            .collect();
        if scores.is_empty() {
            continue;
        }
        let n = scores.len();
        let sd = if n == 1 {
            0.0
        } else {
            stats::sample_sd(&scores)
        };
        out.push(CountrySummary::from_moments(
            country,
            n,
            stats::mean(&scores),
            sd,
        )?);
    }
    if out.is_empty() {
        return Err(Error::degenerate(
            "no scorable experts under the completeness policy",
        ));
    }
    Ok(out)
}

/// Rank for each input position: descending mean at full precision, exact
/// ties broken by ascending label so output is deterministic.
pub(crate) fn rank_positions(labeled_means: &[(&str, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labeled_means.len()).collect();
    order.sort_by(|&a, &b| {
        let (la, ma) = labeled_means[a];
        let (lb, mb) = labeled_means[b];
        mb.partial_cmp(&ma)
            .expect("means must not be NaN")
            .then_with(|| la.cmp(lb))
    });
    let mut ranks = vec![0usize; labeled_means.len()];
    for (rank0, &pos) in order.iter().enumerate() {
        ranks[pos] = rank0 + 1;
    }
    ranks
}

/// Point ranking of country summaries by descending mean.
pub fn point_ranking(summaries: &[CountrySummary]) -> Vec<RankedCountry> {
    let pairs: Vec<(&str, f64)> = summaries
        .iter()
        .map(|s| (s.country.as_str(), s.mean))
        .collect();
    let ranks = rank_positions(&pairs);
    let mut out: Vec<RankedCountry> = summaries
        .iter()
        .zip(ranks)
        .map(|(s, rank)| RankedCountry {
            country: s.country.clone(),
            rank,
            mean: s.mean,
        })
        .collect();
    out.sort_by_key(|r| r.rank);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nes_data::{default_catalog, table1_fixture, NUM_ITEMS};
    use proptest::prelude::*;

    fn response_with(values: &[Option<f64>]) -> ExpertResponse {
        assert_eq!(values.len(), NUM_ITEMS);
        let items = values
            .iter()
            .map(|v| v.map(|x| LikertValue::new(x, 9).unwrap()))
            .collect();
        ExpertResponse::new("XX", 2018, "entrepreneur", items).unwrap()
    }

    fn constant_response(value: f64) -> ExpertResponse {
        response_with(&vec![Some(value); NUM_ITEMS])
    }

    #[test]
    fn expert_index_constant_and_symmetric() {
        assert_eq!(
            expert_index(&constant_response(9.0), CompletenessPolicy::RequireAll),
            Some(9.0)
        );
        let mut vals = vec![Some(2.0); 27];
        vals.extend(vec![Some(4.0); 27]);
        assert_eq!(
            expert_index(&response_with(&vals), CompletenessPolicy::RequireAll),
            Some(3.0)
        );
    }

    #[test]
    fn expert_index_listwise_rule() {
        let mut vals = vec![Some(5.0); NUM_ITEMS];
        vals[10] = None;
        let r = response_with(&vals);
        assert_eq!(expert_index(&r, CompletenessPolicy::RequireAll), None);
        assert_eq!(
            expert_index(&r, CompletenessPolicy::min_fraction(0.9).unwrap()),
            Some(5.0)
        );
    }

    #[test]
    fn efc_score_examples() {
        let catalog = default_catalog();
        // condition 8 items all 5
        let mut vals = vec![None; NUM_ITEMS];
        for it in catalog
            .indicator(IndicatorId::PhysicalInfrastructure)
            .items
            .iter()
        {
            vals[it.pos()] = Some(5.0);
        }
        let r = response_with(&vals);
        assert_eq!(
            efc_score(&r, "8", &catalog, CompletenessPolicy::RequireAll).unwrap(),
            Some(5.0)
        );
        // one missing under require_all -> absent
        let mut vals2 = vals.clone();
        let first = catalog.indicator(IndicatorId::PhysicalInfrastructure).items[0];
        vals2[first.pos()] = None;
        let r2 = response_with(&vals2);
        assert_eq!(
            efc_score(&r2, "8", &catalog, CompletenessPolicy::RequireAll).unwrap(),
            None
        );
        // 2 of 5 items present with values {1, 9}, min_fraction 0.4 -> mean 5
        let cond8 = &catalog.indicator(IndicatorId::PhysicalInfrastructure).items;
        let mut vals3 = vec![None; NUM_ITEMS];
        vals3[cond8[0].pos()] = Some(1.0);
        vals3[cond8[1].pos()] = Some(9.0);
        let r3 = response_with(&vals3);
        assert_eq!(
            efc_score(
                &r3,
                "8",
                &catalog,
                CompletenessPolicy::min_fraction(0.4).unwrap()
            )
            .unwrap(),
            Some(5.0)
        );
        assert!(efc_score(&r3, "10", &catalog, CompletenessPolicy::RequireAll).is_err());
    }

    #[test]
    fn remap_endpoints_and_midpoint() {
        assert_eq!(remap_scale(1.0).unwrap(), 1.0);
        assert_eq!(remap_scale(9.0).unwrap(), 5.0);
        assert_eq!(remap_scale(5.0).unwrap(), 3.0);
        assert!(remap_scale(9.5).is_err());
        assert!(remap_scale(0.5).is_err());
    }

    #[test]
    fn country_summaries_two_experts() {
        let ds =
            SurveyDataset::new(vec![constant_response(4.0), constant_response(6.0)], 9).unwrap();
        let rows = country_summaries(&ds, CompletenessPolicy::RequireAll).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 2);
        assert_eq!(rows[0].mean, 5.0);
        assert!((rows[0].sd - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((rows[0].se - 1.0).abs() < 1e-12);
        assert!(!rows[0].degenerate);
    }

    #[test]
    fn country_summaries_single_expert_degenerate() {
        let ds = SurveyDataset::new(vec![constant_response(4.0)], 9).unwrap();
        let rows = country_summaries(&ds, CompletenessPolicy::RequireAll).unwrap();
        assert_eq!(rows[0].n, 1);
        assert_eq!(rows[0].se, 0.0);
        assert!(rows[0].degenerate);
    }

    #[test]
    fn country_summaries_no_scorable_experts() {
        let mut vals = vec![Some(5.0); NUM_ITEMS];
        vals[0] = None;
        let ds = SurveyDataset::new(vec![response_with(&vals)], 9).unwrap();
        let err = country_summaries(&ds, CompletenessPolicy::RequireAll).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn point_ranking_fixture_order() {
        let ranked = point_ranking(&table1_fixture());
        assert_eq!(ranked[0].country, "Indonesia");
        assert_eq!(ranked[0].rank, 1);
        assert_eq!(ranked[53].country, "Mozambique");
        assert_eq!(ranked[53].rank, 54);
        // equal printed means resolve alphabetically
        let germany = ranked.iter().find(|r| r.country == "Germany").unwrap();
        let turkey = ranked.iter().find(|r| r.country == "Turkey").unwrap();
        assert_eq!(germany.rank, 26);
        assert_eq!(turkey.rank, 27);
    }

    #[test]
    fn point_ranking_tie_rule_and_single() {
        let single = vec![CountrySummary::from_moments("A", 2, 4.0, 1.0).unwrap()];
        assert_eq!(point_ranking(&single)[0].rank, 1);
        let tied = vec![
            CountrySummary::from_moments("Zed", 2, 4.0, 1.0).unwrap(),
            CountrySummary::from_moments("Abe", 2, 4.0, 1.0).unwrap(),
        ];
        let ranked = point_ranking(&tied);
        assert_eq!(ranked[0].country, "Abe");
        assert_eq!(ranked[0].rank, 1);
        assert_eq!(ranked[1].country, "Zed");
        assert_eq!(ranked[1].rank, 2);
    }

    proptest! {
        // mean is invariant under permutation of item order and bounded by
        // the observed extremes
        #[test]
        fn expert_index_permutation_and_bounds(
            values in prop::collection::vec(1..=9u8, NUM_ITEMS),
            seed in any::<u64>(),
        ) {
            let vals: Vec<Option<f64>> = values.iter().map(|&v| Some(v as f64)).collect();
            let idx = expert_index(&response_with(&vals), CompletenessPolicy::RequireAll).unwrap();
            let lo = values.iter().copied().min().unwrap() as f64;
            let hi = values.iter().copied().max().unwrap() as f64;
            prop_assert!(lo <= idx + 1e-12 && idx <= hi + 1e-12);

            // deterministic shuffle of the item order
            let mut shuffled = vals.clone();
            let mut state = seed;
            for i in (1..shuffled.len()).rev() {
                state = crate::stats::splitmix64(state);
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let idx2 = expert_index(&response_with(&shuffled), CompletenessPolicy::RequireAll).unwrap();
            prop_assert!((idx - idx2).abs() < 1e-12);
        }

        // remap is affine: remap(a) - remap(b) == (a - b)/2
        #[test]
        fn remap_affine(a in 1.0..=9.0f64, b in 1.0..=9.0f64) {
            let d = remap_scale(a).unwrap() - remap_scale(b).unwrap();
            prop_assert!((d - (a - b) / 2.0).abs() < 1e-12);
        }

        // a constant added to every item shifts the expert index by exactly
        // that constant
        #[test]
        fn expert_index_shift_equivariance(
            values in prop::collection::vec(1..=6u8, NUM_ITEMS),
            shift in 0..=3u8,
        ) {
            let base: Vec<Option<f64>> = values.iter().map(|&v| Some(v as f64)).collect();
            let moved: Vec<Option<f64>> =
                values.iter().map(|&v| Some((v + shift) as f64)).collect();
            let i1 = expert_index(&response_with(&base), CompletenessPolicy::RequireAll).unwrap();
            let i2 = expert_index(&response_with(&moved), CompletenessPolicy::RequireAll).unwrap();
            prop_assert!((i2 - i1 - shift as f64).abs() < 1e-12);
        }

        // adding a constant shifts means but never reorders the ranking
        #[test]
        fn ranking_shift_invariance(
            means in prop::collection::vec(1.0..=9.0f64, 2..20),
            shift in -3.0..=3.0f64,
        ) {
            let base: Vec<CountrySummary> = means
                .iter()
                .enumerate()
                .map(|(i, &m)| CountrySummary::from_moments(format!("C{i:02}"), 4, m, 1.0).unwrap())
                .collect();
            let shifted: Vec<CountrySummary> = base
                .iter()
                .map(|s| CountrySummary::from_moments(s.country.clone(), s.n, s.mean + shift, s.sd).unwrap())
                .collect();
            let r1: Vec<(String, usize)> =
                point_ranking(&base).into_iter().map(|r| (r.country, r.rank)).collect();
            let r2: Vec<(String, usize)> =
                point_ranking(&shifted).into_iter().map(|r| (r.country, r.rank)).collect();
            prop_assert_eq!(r1, r2);
        }

        // output ranks are a permutation of 1..=p
        #[test]
        fn ranking_is_permutation(means in prop::collection::vec(1.0..=9.0f64, 1..30)) {
            let rows: Vec<CountrySummary> = means
                .iter()
                .enumerate()
                .map(|(i, &m)| CountrySummary::from_moments(format!("C{i:02}"), 4, m, 1.0).unwrap())
                .collect();
            let mut ranks: Vec<usize> = point_ranking(&rows).into_iter().map(|r| r.rank).collect();
            ranks.sort_unstable();
            prop_assert_eq!(ranks, (1..=means.len()).collect::<Vec<_>>());
        }
    }
}
