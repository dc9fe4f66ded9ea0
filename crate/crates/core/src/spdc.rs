//! The enhanced analyzer fed by a spontaneous parametric down-conversion
//! auxiliary source.
//!
//! The source emits the pair-number superposition with amplitude weights
//! `w(n, tau)`; terms of different `n` carry different total photon number,
//! so they never interfere and the analyzer can be evaluated per pair number
//! and averaged with weights `w^2(n, tau)`. Post-selection uses a single set
//! of mutually exclusive pattern sets built by merging the per-`n`
//! unambiguous patterns; a pattern claimed by different labels at different
//! `n` goes to the label with the larger `w^2`-weighted true contribution at
//! the evaluation `tau` (exact ties are rejected).

use std::collections::BTreeMap;

use crate::amp::Prob;
use crate::analyzer::{
    ideal_run_f64, Auxiliary, IdealRun, LossParams, PostSelectionPlan, Scheme, SchemeSpec,
};
use crate::detection::{model_map, DetectorModel, OutcomePattern};
use crate::error::{CoreError, Result};
use crate::sources::{spdc_weight, BellState};

/// Ideal per-pattern data for one auxiliary pair number.
#[derive(Clone, Debug, Default)]
pub struct PatternRow {
    /// Ideal probability of the pattern per Bell input.
    pub positive: [f64; 4],
    /// The part of `positive` produced by state-unambiguous outputs.
    pub trueable: [f64; 4],
    /// Label under the per-`n` plan, when the pattern is unambiguous at
    /// this `n` (and passes the count filter, when enabled).
    pub label: Option<BellState>,
}

/// Ideal outcome tables for one auxiliary pair number.
#[derive(Clone, Debug)]
pub struct PairTable {
    pub n: u32,
    pub rows: BTreeMap<OutcomePattern, PatternRow>,
}

impl PairTable {
    /// Success rate of the per-`n` plan alone (unweighted Bell average).
    pub fn own_plan_rate(&self) -> f64 {
        let mut acc = 0.0;
        for row in self.rows.values() {
            if let Some(label) = row.label {
                acc += row.trueable[label.index()];
            }
        }
        acc / 4.0
    }
}

/// Ideal tables for every pair number up to `n_max`.
#[derive(Clone, Debug)]
pub struct SpdcTables {
    pub model: DetectorModel,
    pub count_filter: bool,
    pub per_n: Vec<PairTable>,
}

fn spec_for(model: DetectorModel, count_filter: bool) -> SchemeSpec {
    SchemeSpec::new(Scheme::Enhanced, model).with_count_filter(count_filter)
}

fn pair_table(run: &IdealRun<f64>, spec: &SchemeSpec, n: u32) -> PairTable {
    let mut rows: BTreeMap<OutcomePattern, PatternRow> = BTreeMap::new();
    for (b, outcomes) in run.outcomes.iter().enumerate() {
        for (state, p) in &outcomes.states {
            if !p.occurs() {
                continue;
            }
            let pattern = model_map(state.occupations(), spec.model);
            let row = rows.entry(pattern).or_default();
            row.positive[b] += p;
            if run.unambiguous[b].contains(state) {
                row.trueable[b] += p;
            }
        }
    }
    // Per-n plan: patterns occurring for exactly one input.
    let expected = 2 + 2 * n;
    let plan = PostSelectionPlan::from_tables(*spec, expected, run);
    for (pattern, row) in rows.iter_mut() {
        row.label = plan.label_of(pattern);
    }
    PairTable { n, rows }
}

/// Builds ideal tables for pair numbers `0..=n_max`.
///
/// The count filter defaults to on for slow number-resolving detectors (the
/// loss-robust convention) and off otherwise; use
/// [`build_tables_with_filter`] to override.
pub fn build_tables(model: DetectorModel, n_max: u32) -> Result<SpdcTables> {
    build_tables_with_filter(model, n_max, model == DetectorModel::SlowPnrd)
}

pub fn build_tables_with_filter(
    model: DetectorModel,
    n_max: u32,
    count_filter: bool,
) -> Result<SpdcTables> {
    let mut per_n = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let spec = spec_for(model, count_filter);
        let run = ideal_run_f64(&spec, Auxiliary::PairTerm(n))?;
        per_n.push(pair_table(&run, &spec, n));
    }
    Ok(SpdcTables { model, count_filter, per_n })
}

/// Squared pair-number weights and their truncation remainder at `tau`.
pub fn weights(n_max: u32, tau: f64) -> (Vec<f64>, f64) {
    let w: Vec<f64> = (0..=n_max).map(|n| spdc_weight(n, tau).powi(2)).collect();
    let tail = (1.0 - w.iter().sum::<f64>()).max(0.0);
    (w, tail)
}

/// Merges per-`n` plans into four mutually exclusive accept sets for the
/// given evaluation `tau`.
///
/// Number-resolving models admit globally unambiguous sets: a pattern is
/// kept only if no pair-number sector produces it for a different input,
/// which preserves perfect fidelity at ideal parameters. Binary models
/// cannot avoid cross-sector confusion; there a pattern claimed by several
/// labels goes to the label with the larger `w^2`-weighted true
/// contribution, and exact ties are rejected.
pub fn combined_plan(tables: &SpdcTables, tau: f64) -> BTreeMap<OutcomePattern, BellState> {
    let (w, _) = weights(tables.per_n.len() as u32 - 1, tau);
    let mut candidates: BTreeMap<&OutcomePattern, [f64; 4]> = BTreeMap::new();
    for (i, table) in tables.per_n.iter().enumerate() {
        for (pattern, row) in &table.rows {
            if let Some(label) = row.label {
                let weights_for = candidates.entry(pattern).or_insert([f64::NEG_INFINITY; 4]);
                let b = label.index();
                if weights_for[b] == f64::NEG_INFINITY {
                    weights_for[b] = 0.0;
                }
                weights_for[b] += w[i] * row.trueable[b];
            }
        }
    }
    let mut plan = BTreeMap::new();
    for (pattern, weights_for) in candidates {
        let claimed: Vec<usize> =
            (0..4).filter(|&b| weights_for[b] != f64::NEG_INFINITY).collect();
        let winner = match claimed.as_slice() {
            [only] => Some(*only),
            _ => {
                let best = claimed
                    .iter()
                    .copied()
                    .max_by(|&a, &b| weights_for[a].total_cmp(&weights_for[b]))
                    .unwrap();
                let tied = claimed
                    .iter()
                    .filter(|&&b| b != best && weights_for[b] == weights_for[best])
                    .count();
                (tied == 0).then_some(best)
            }
        };
        let Some(b) = winner else { continue };
        if !tables.model.is_binary() {
            let occurs_elsewhere = tables.per_n.iter().any(|table| {
                table.rows.get(pattern).is_some_and(|row| {
                    (0..4).any(|other| other != b && row.positive[other] > 0.0)
                })
            });
            if occurs_elsewhere {
                continue;
            }
        }
        plan.insert(pattern.clone(), BellState::ALL[b]);
    }
    plan
}

/// Per-pair-number slice of an evaluation.
#[derive(Clone, Copy, Debug)]
pub struct PairMetrics {
    pub n: u32,
    pub weight: f64,
    pub p_t: f64,
    pub p_f: f64,
}

/// Weighted evaluation result for the down-conversion auxiliary source.
#[derive(Clone, Debug)]
pub struct SpdcMetrics {
    pub tau: f64,
    pub p_t: f64,
    pub p_f: f64,
    pub positive: f64,
    pub fidelity: Option<f64>,
    pub per_n: Vec<PairMetrics>,
    /// Pair-number weight beyond the truncation `n_max`.
    pub tail_weight: f64,
}

/// Largest truncation remainder accepted without an explicit override.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Evaluates the analyzer at ideal optical parameters from prebuilt tables.
pub fn evaluate_ideal(
    tables: &SpdcTables,
    tau: f64,
    allow_truncation: bool,
) -> Result<SpdcMetrics> {
    let n_max = tables.per_n.len() as u32 - 1;
    let (w, tail) = weights(n_max, tau);
    if tail > TAIL_LIMIT && !allow_truncation {
        return Err(CoreError::SpdcTruncation { remainder: tail, limit: TAIL_LIMIT });
    }
    let plan = combined_plan(tables, tau);
    let mut per_n = Vec::with_capacity(tables.per_n.len());
    let (mut p_t, mut positive) = (0.0, 0.0);
    for (i, table) in tables.per_n.iter().enumerate() {
        let (mut pos_n, mut true_n) = (0.0, 0.0);
        for (pattern, row) in &table.rows {
            if let Some(label) = plan.get(pattern) {
                pos_n += row.positive.iter().sum::<f64>();
                true_n += row.trueable[label.index()];
            }
        }
        pos_n /= 4.0;
        true_n /= 4.0;
        per_n.push(PairMetrics {
            n: table.n,
            weight: w[i],
            p_t: true_n,
            p_f: (pos_n - true_n).max(0.0),
        });
        p_t += w[i] * true_n;
        positive += w[i] * pos_n;
    }
    let p_f = (positive - p_t).max(0.0);
    Ok(SpdcMetrics {
        tau,
        p_t,
        p_f,
        positive,
        fidelity: (positive > 0.0).then(|| p_t / positive),
        per_n,
        tail_weight: tail,
    })
}

/// Evaluates the analyzer under loss and dark counts from prebuilt tables.
/// Each pair number is re-propagated exactly; this is only practical for
/// small `n_max`.
pub fn evaluate_lossy(
    tables: &SpdcTables,
    tau: f64,
    params: &LossParams,
    allow_truncation: bool,
) -> Result<SpdcMetrics> {
    let n_max = tables.per_n.len() as u32 - 1;
    let (w, tail) = weights(n_max, tau);
    if tail > TAIL_LIMIT && !allow_truncation {
        return Err(CoreError::SpdcTruncation { remainder: tail, limit: TAIL_LIMIT });
    }
    let plan_map = combined_plan(tables, tau);
    let mut per_n = Vec::with_capacity(tables.per_n.len());
    let (mut p_t, mut positive) = (0.0, 0.0);
    for (i, table) in tables.per_n.iter().enumerate() {
        let spec = spec_for(tables.model, tables.count_filter);
        let run = ideal_run_f64(&spec, Auxiliary::PairTerm(table.n))?;
        let plan = PostSelectionPlan::from_parts(
            spec,
            2 + 2 * table.n,
            plan_map.clone(),
            run.unambiguous.clone(),
        );
        let m = crate::analyzer::evaluate_with_aux(
            &spec,
            &plan,
            Auxiliary::PairTerm(table.n),
            params,
        )?;
        per_n.push(PairMetrics { n: table.n, weight: w[i], p_t: m.p_t, p_f: m.p_f });
        p_t += w[i] * m.p_t;
        positive += w[i] * m.positive;
    }
    let p_f = (positive - p_t).max(0.0);
    Ok(SpdcMetrics {
        tau,
        p_t,
        p_f,
        positive,
        fidelity: (positive > 0.0).then(|| p_t / positive),
        per_n,
        tail_weight: tail,
    })
}

/// One-call evaluation: builds tables for `0..=n_max` and evaluates at `tau`.
pub fn evaluate_spdc(
    model: DetectorModel,
    tau: f64,
    n_max: u32,
    params: &LossParams,
    allow_truncation: bool,
) -> Result<SpdcMetrics> {
    let tables = build_tables(model, n_max)?;
    let ideal = params.eta_i == 1.0 && params.eta_d == 1.0 && params.xi == 0.0;
    if ideal {
        evaluate_ideal(&tables, tau, allow_truncation)
    } else {
        evaluate_lossy(&tables, tau, params, allow_truncation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_auxiliary_limit_matches_standard_scheme() {
        let tables = build_tables(DetectorModel::Pnrd, 2).unwrap();
        let m = evaluate_ideal(&tables, 0.0, true).unwrap();
        assert!((m.p_t - 0.5).abs() < 1e-12, "p_t at tau=0: {}", m.p_t);
        assert_eq!(m.fidelity, Some(1.0));
        assert!(m.tail_weight < 1e-15);
    }

    #[test]
    fn single_pair_rate_is_three_quarters() {
        let tables = build_tables(DetectorModel::Pnrd, 1).unwrap();
        assert!((tables.per_n[1].own_plan_rate() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn pnrd_per_pair_rates_never_drop_below_half() {
        // Exact per-sector rates: 1/2, 3/4, 1/2, 625/1024, 1/2 — even pair
        // numbers sit exactly at the standard-scheme rate, odd ones beat it.
        let tables = build_tables(DetectorModel::Pnrd, 4).unwrap();
        let expected = [0.5, 0.75, 0.5, 625.0 / 1024.0, 0.5];
        for (t, want) in tables.per_n.iter().zip(expected) {
            let r = t.own_plan_rate();
            assert!((r - want).abs() < 1e-12, "pair number {}: rate {r} vs {want}", t.n);
            assert!(r >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn truncation_remainder_is_reported_and_gated() {
        let tables = build_tables(DetectorModel::Pnrd, 2).unwrap();
        let err = evaluate_ideal(&tables, 0.67, false);
        assert!(matches!(err, Err(CoreError::SpdcTruncation { .. })));
        let ok = evaluate_ideal(&tables, 0.67, true).unwrap();
        assert!(ok.tail_weight > 1e-3);
    }

    #[test]
    fn number_resolving_models_keep_unit_fidelity_across_tau() {
        for model in [DetectorModel::Pnrd, DetectorModel::SlowPnrd] {
            let tables = build_tables(model, 4).unwrap();
            for tau in [0.0, 0.3, 0.67, 1.0] {
                let m = evaluate_ideal(&tables, tau, true).unwrap();
                assert_eq!(m.p_f, 0.0, "{model} tau={tau}: p_f={}", m.p_f);
                if m.positive > 0.0 {
                    assert_eq!(m.fidelity, Some(1.0), "{model} tau={tau}");
                }
            }
        }
    }

    #[test]
    fn input_loss_alone_breaks_fidelity_quadratically() {
        // Losing both input photons while the source emits an extra pair
        // mimics a lossless lower-pair event, so with combined accept sets
        // the false-positive rate grows as (1 - eta_i)^2 even without dark
        // counts.
        let tables = build_tables(DetectorModel::Pnrd, 3).unwrap();
        let tau = 0.5;
        let pf_at = |eta_i: f64| {
            let params = crate::analyzer::LossParams::new(eta_i, 1.0, 1.0, 0.0).unwrap();
            evaluate_lossy(&tables, tau, &params, true).unwrap().p_f
        };
        let (pf_90, pf_99) = (pf_at(0.9), pf_at(0.99));
        assert!(pf_90 > 0.0 && pf_99 > 0.0);
        let exponent = (pf_90 / pf_99).ln() / (0.1f64 / 0.01).ln();
        assert!(
            (1.8..=2.2).contains(&exponent),
            "leading loss exponent {exponent} (p_f {pf_90:.3e} vs {pf_99:.3e})"
        );
    }

    #[test]
    fn binary_models_confuse_pair_numbers() {
        let tables = build_tables(DetectorModel::Bd, 3).unwrap();
        let m = evaluate_ideal(&tables, 0.6, true).unwrap();
        assert!(m.p_f > 0.0, "click detectors cannot separate pair numbers");
        assert!(m.fidelity.unwrap() < 1.0);
    }
}
