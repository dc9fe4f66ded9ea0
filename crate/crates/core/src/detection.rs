//! Detector models and the conversion of propagated states into outcome
//! probabilities.
//!
//! The measurement pipeline is: couple each detection mode to a fresh loss
//! mode with weight `sqrt(eta_d)`, discard loss modes at the probability
//! level, let every live mode gain at most one dark count with probability
//! `xi`, then reduce the photon counts according to the detector model. The
//! model reduction operates on outcome probabilities, never on amplitudes;
//! merging before squaring would interfere branches that a real detector
//! distinguishes destructively.

use std::collections::BTreeMap;

use smallvec::SmallVec;

use crate::amp::{Amp, Prob};
use crate::comb::{binomial, occupancy_factorial};
use crate::error::{CoreError, Result};
use crate::fock::{FockState, LossOrigin};
use crate::state::PureState;

/// The four abstract detector models.
///
/// "Slow" variants have a dead time longer than the separation between the
/// `a` (early) and `b` (late) bins of a unit: once the early bin fires, the
/// late bin of the same unit is unobservable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum DetectorModel {
    /// Photon-number-resolving, negligible dead time.
    Pnrd,
    /// Binary click/no-click, negligible dead time.
    Bd,
    /// Photon-number-resolving with two-bin dead time.
    SlowPnrd,
    /// Binary with two-bin dead time.
    SlowBd,
}

impl DetectorModel {
    pub const ALL: [DetectorModel; 4] = [
        DetectorModel::Pnrd,
        DetectorModel::Bd,
        DetectorModel::SlowPnrd,
        DetectorModel::SlowBd,
    ];

    pub fn is_binary(self) -> bool {
        matches!(self, DetectorModel::Bd | DetectorModel::SlowBd)
    }

    pub fn is_slow(self) -> bool {
        matches!(self, DetectorModel::SlowPnrd | DetectorModel::SlowBd)
    }

    pub fn label(self) -> &'static str {
        match self {
            DetectorModel::Pnrd => "pnrd",
            DetectorModel::Bd => "bd",
            DetectorModel::SlowPnrd => "slow-pnrd",
            DetectorModel::SlowBd => "slow-bd",
        }
    }
}

impl std::fmt::Display for DetectorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Sentinel for a late bin hidden by detector dead time. A masked entry is
/// distinct from a reported zero: it matches any underlying photon count.
pub const MASKED: u8 = u8::MAX;

/// What the detectors report: one entry per detection mode, either a count
/// (clamped to 0/1 for binary models) or [`MASKED`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OutcomePattern(SmallVec<[u8; 24]>);

impl OutcomePattern {
    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    /// Sum of reported (unmasked) entries.
    pub fn reported_total(&self) -> u32 {
        self.0.iter().filter(|&&e| e != MASKED).map(|&e| e as u32).sum()
    }

    pub fn has_masked(&self) -> bool {
        self.0.contains(&MASKED)
    }
}

impl std::fmt::Display for OutcomePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if *e == MASKED {
                write!(f, "x")?;
            } else {
                write!(f, "{e}")?;
            }
        }
        write!(f, "]")
    }
}

/// Reduces raw per-mode photon counts to what a detector of the given model
/// reports. `counts` covers detection modes only, ordered `a1, b1, a2, b2...`.
pub fn model_map(counts: &[u8], model: DetectorModel) -> OutcomePattern {
    debug_assert!(counts.len().is_multiple_of(2));
    let clamp = |n: u8| if model.is_binary() { n.min(1) } else { n };
    let mut out: SmallVec<[u8; 24]> = SmallVec::with_capacity(counts.len());
    for pair in counts.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        out.push(clamp(a));
        if model.is_slow() && a >= 1 {
            out.push(MASKED);
        } else {
            out.push(clamp(b));
        }
    }
    OutcomePattern(out)
}

/// How many photons were lost per loss channel on the way to the detectors.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Default, Hash)]
pub struct LossSignature {
    pub input: u8,
    pub auxiliary: u8,
    pub detector: u8,
}

impl LossSignature {
    pub fn is_lossless(&self) -> bool {
        self.input == 0 && self.auxiliary == 0 && self.detector == 0
    }
}

/// Discards loss modes: groups `|amplitude|^2` by the detection-mode part of
/// each term, retaining how many photons each loss channel absorbed.
/// Probabilities sum to 1 over the returned map.
pub fn marginalize_loss<A: Amp>(
    state: &PureState<A>,
) -> Result<BTreeMap<(FockState, LossSignature), A::Prob>> {
    let registry = state.registry();
    let detected = registry.detected_count();
    let norm = state.norm_sqr()?;
    let mut out: BTreeMap<(FockState, LossSignature), A::Prob> = BTreeMap::new();
    for (occ, c) in state.terms() {
        let mut sig = LossSignature::default();
        for (m, &n) in occ.occupations().iter().enumerate().skip(detected) {
            if n == 0 {
                continue;
            }
            match registry.loss_origin(m).expect("loss mode") {
                LossOrigin::Input => sig.input += n,
                LossOrigin::Auxiliary => sig.auxiliary += n,
                LossOrigin::Detector => sig.detector += n,
            }
        }
        let f = occupancy_factorial(occ.occupations())?;
        let p = c.norm_sqr().mul(&A::Prob::from_integer(f)).div(&norm);
        let key = (occ.detected_part(detected), sig);
        let entry = out.entry(key).or_insert_with(A::Prob::zero);
        *entry = entry.add(&p);
    }
    Ok(out)
}

/// Dark-count enumeration strategy.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DarkBudget {
    /// Enumerate every dark configuration (exact; cost `2^modes`).
    Full,
    /// Enumerate configurations with at most this many dark counts; the
    /// neglected probability mass is `O((modes * xi)^(k+1))`.
    AtMost(usize),
}

impl DarkBudget {
    /// Full enumeration up to 16 candidate modes, then first-two-orders.
    pub fn auto(candidate_modes: usize) -> DarkBudget {
        if candidate_modes <= 16 {
            DarkBudget::Full
        } else {
            DarkBudget::AtMost(2)
        }
    }
}

/// Detection-stage parameters.
#[derive(Clone, Copy, Debug)]
pub struct DetectionSettings {
    pub eta_d: f64,
    pub xi: f64,
    pub model: DetectorModel,
    pub dark: DarkBudget,
}

impl DetectionSettings {
    pub fn new(eta_d: f64, xi: f64, model: DetectorModel, dark: DarkBudget) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta_d) {
            return Err(CoreError::ParameterRange {
                name: "eta_d",
                value: eta_d,
                range: "[0, 1]",
            });
        }
        if !(0.0..1.0).contains(&xi) {
            return Err(CoreError::ParameterRange { name: "xi", value: xi, range: "[0, 1)" });
        }
        Ok(DetectionSettings { eta_d, xi, model, dark })
    }

    pub fn ideal(model: DetectorModel) -> Self {
        DetectionSettings { eta_d: 1.0, xi: 0.0, model, dark: DarkBudget::Full }
    }
}

/// True when a dark count in `mode` can never change the reported pattern,
/// whatever other dark counts occur, given post-thinning counts `counts`.
fn dark_foldable(model: DetectorModel, counts: &[u8], mode: usize) -> bool {
    match model {
        DetectorModel::Pnrd => false,
        // A clicked mode stays clicked.
        DetectorModel::Bd => counts[mode] >= 1,
        DetectorModel::SlowPnrd => {
            // Only late bins already hidden by their early bin are inert.
            mode % 2 == 1 && counts[mode - 1] >= 1
        }
        DetectorModel::SlowBd => {
            if counts[mode] >= 1 {
                return true;
            }
            mode % 2 == 1 && counts[mode - 1] >= 1
        }
    }
}

/// Enumerates detector outcomes for a basis state with detection-mode photon
/// counts `counts`, invoking `visit(pattern, probability, photons_lost_in_detection)`
/// for every branch. Branch probabilities sum to 1 under [`DarkBudget::Full`].
pub fn for_each_outcome(
    counts: &[u8],
    settings: &DetectionSettings,
    visit: &mut dyn FnMut(OutcomePattern, f64, u32),
) {
    let modes = counts.len();
    let mut thinned: SmallVec<[u8; 24]> = SmallVec::from_slice(counts);

    // Recursively thin each mode with binomial(count, eta_d) statistics.
    fn thin(
        mode: usize,
        counts: &[u8],
        settings: &DetectionSettings,
        thinned: &mut SmallVec<[u8; 24]>,
        weight: f64,
        lost: u32,
        visit: &mut dyn FnMut(OutcomePattern, f64, u32),
    ) {
        if mode == counts.len() {
            darks(thinned, settings, weight, lost, visit);
            return;
        }
        let n = counts[mode];
        if settings.eta_d == 1.0 || n == 0 {
            thinned[mode] = n;
            thin(mode + 1, counts, settings, thinned, weight, lost, visit);
            return;
        }
        for keep in 0..=n {
            let ways = binomial(n as u64, keep as u64).expect("small binomial") as f64;
            let w = ways
                * settings.eta_d.powi(keep as i32)
                * (1.0 - settings.eta_d).powi((n - keep) as i32);
            thinned[mode] = keep;
            thin(
                mode + 1,
                counts,
                settings,
                thinned,
                weight * w,
                lost + (n - keep) as u32,
                visit,
            );
        }
        thinned[mode] = n;
    }

    // Enumerates dark-count placements over the modes where they matter.
    fn darks(
        thinned: &SmallVec<[u8; 24]>,
        settings: &DetectionSettings,
        weight: f64,
        lost: u32,
        visit: &mut dyn FnMut(OutcomePattern, f64, u32),
    ) {
        if settings.xi == 0.0 {
            visit(model_map(thinned, settings.model), weight, lost);
            return;
        }
        let candidates: SmallVec<[usize; 24]> = (0..thinned.len())
            .filter(|&m| !dark_foldable(settings.model, thinned, m))
            .collect();
        let budget = match settings.dark {
            DarkBudget::Full => candidates.len(),
            DarkBudget::AtMost(k) => k.min(candidates.len()),
        };
        let xi = settings.xi;
        let mut with_darks = thinned.clone();
        // Choose subsets of `candidates` of size <= budget.
        #[allow(clippy::too_many_arguments)]
        fn rec(
            idx: usize,
            placed: usize,
            budget: usize,
            candidates: &[usize],
            counts: &mut SmallVec<[u8; 24]>,
            weight: f64,
            xi: f64,
            settings: &DetectionSettings,
            lost: u32,
            visit: &mut dyn FnMut(OutcomePattern, f64, u32),
        ) {
            if idx == candidates.len() {
                visit(model_map(counts, settings.model), weight, lost);
                return;
            }
            let m = candidates[idx];
            rec(
                idx + 1,
                placed,
                budget,
                candidates,
                counts,
                weight * (1.0 - xi),
                xi,
                settings,
                lost,
                visit,
            );
            if placed < budget {
                counts[m] += 1;
                rec(
                    idx + 1,
                    placed + 1,
                    budget,
                    candidates,
                    counts,
                    weight * xi,
                    xi,
                    settings,
                    lost,
                    visit,
                );
                counts[m] -= 1;
            }
        }
        rec(
            0,
            0,
            budget,
            &candidates,
            &mut with_darks,
            weight,
            xi,
            settings,
            lost,
            visit,
        );
    }

    thin(0, counts, settings, &mut thinned, 1.0, 0, visit);
    let _ = modes;
}

/// Conditional outcome probabilities `P(pattern | basis state)`.
#[derive(Clone, Debug)]
pub struct ConditionalTable {
    pub rows: BTreeMap<OutcomePattern, f64>,
}

impl ConditionalTable {
    pub fn total(&self) -> f64 {
        self.rows.values().sum()
    }
}

/// Builds the conditional table for a basis state with detection-mode counts
/// `counts` under the given detection settings.
pub fn conditional_table(counts: &[u8], settings: &DetectionSettings) -> ConditionalTable {
    let mut rows: BTreeMap<OutcomePattern, f64> = BTreeMap::new();
    for_each_outcome(counts, settings, &mut |pattern, p, _| {
        *rows.entry(pattern).or_insert(0.0) += p;
    });
    ConditionalTable { rows }
}

/// Applies per-mode dark counts to a distribution over detection-mode count
/// vectors: each mode independently gains one photon with probability `xi`.
pub fn dark_count_convolve(
    dist: &BTreeMap<FockState, f64>,
    xi: f64,
) -> Result<BTreeMap<FockState, f64>> {
    if !(0.0..1.0).contains(&xi) {
        return Err(CoreError::ParameterRange { name: "xi", value: xi, range: "[0, 1)" });
    }
    let mut out: BTreeMap<FockState, f64> = BTreeMap::new();
    for (occ, &p) in dist {
        let modes = occ.mode_count();
        // Enumerate dark subsets recursively.
        fn rec(
            mode: usize,
            modes: usize,
            occ: &FockState,
            acc: &mut FockState,
            weight: f64,
            xi: f64,
            out: &mut BTreeMap<FockState, f64>,
        ) {
            if mode == modes {
                *out.entry(acc.clone()).or_insert(0.0) += weight;
                return;
            }
            acc.set(mode, occ.get(mode));
            rec(mode + 1, modes, occ, acc, weight * (1.0 - xi), xi, out);
            if xi > 0.0 {
                acc.set(mode, occ.get(mode) + 1);
                rec(mode + 1, modes, occ, acc, weight * xi, xi, out);
                acc.set(mode, occ.get(mode));
            }
        }
        let mut acc = occ.clone();
        rec(0, modes, occ, &mut acc, p, xi, &mut out);
    }
    Ok(out)
}

/// Ideal-parameter outcome data for one propagated state: basis-state
/// probabilities over detection modes and their model-mapped patterns.
#[derive(Clone, Debug)]
pub struct IdealOutcomes<P> {
    pub states: BTreeMap<FockState, P>,
    pub patterns: BTreeMap<OutcomePattern, P>,
}

/// Computes [`IdealOutcomes`] for a state with no occupied loss modes.
pub fn ideal_outcomes<A: Amp>(
    state: &PureState<A>,
    model: DetectorModel,
) -> Result<IdealOutcomes<A::Prob>> {
    let detected = state.registry().detected_count();
    let norm = state.norm_sqr()?;
    let mut states: BTreeMap<FockState, A::Prob> = BTreeMap::new();
    let mut patterns: BTreeMap<OutcomePattern, A::Prob> = BTreeMap::new();
    for (occ, c) in state.terms() {
        if occ.occupations()[detected..].iter().any(|&n| n > 0) {
            return Err(CoreError::Invalid(
                "ideal outcome table requires vacuum loss modes".into(),
            ));
        }
        let f = occupancy_factorial(occ.occupations())?;
        let p = c.norm_sqr().mul(&A::Prob::from_integer(f)).div(&norm);
        let det = occ.detected_part(detected);
        let pattern = model_map(det.occupations(), model);
        let e = states.entry(det).or_insert_with(A::Prob::zero);
        *e = e.add(&p);
        let e = patterns.entry(pattern).or_insert_with(A::Prob::zero);
        *e = e.add(&p);
    }
    Ok(IdealOutcomes { states, patterns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp::Cf64;
    use crate::fock::ModeRegistry;
    use crate::optics::attach_loss;

    #[test]
    fn model_map_reference_cases() {
        use DetectorModel::*;
        // Binary detectors clamp counts to clicks.
        assert_eq!(model_map(&[2, 0, 0, 1], Bd).entries(), &[1, 0, 0, 1]);
        // Number-resolving detectors report counts unchanged.
        assert_eq!(model_map(&[2, 0, 0, 1], Pnrd).entries(), &[2, 0, 0, 1]);
        // Slow models mask the late bin once the early bin fired.
        assert_eq!(model_map(&[1, 1, 0, 0], SlowPnrd).entries(), &[1, MASKED, 0, 0]);
        assert_eq!(model_map(&[1, 1, 0, 0], SlowPnrd).reported_total(), 1);
        // Two early + two late photons in one unit: one early click.
        assert_eq!(model_map(&[2, 2], SlowBd).entries(), &[1, MASKED]);
        // Late-only photons are reported normally by slow detectors.
        assert_eq!(model_map(&[0, 2], SlowPnrd).entries(), &[0, 2]);
        assert_eq!(model_map(&[0, 2], SlowBd).entries(), &[0, 1]);
    }

    #[test]
    fn masked_entries_only_in_late_bins_of_fired_units() {
        for model in [DetectorModel::SlowPnrd, DetectorModel::SlowBd] {
            for a1 in 0..3u8 {
                for b1 in 0..3u8 {
                    let p = model_map(&[a1, b1], model);
                    let masked = p.entries()[1] == MASKED;
                    assert_eq!(masked, a1 >= 1);
                    assert_ne!(p.entries()[0], MASKED);
                }
            }
        }
    }

    #[test]
    fn marginalize_without_loss_reproduces_probabilities() {
        let reg = ModeRegistry::new(1);
        let mut s = PureState::<Cf64>::empty(reg);
        s.accumulate(FockState::from_occupations(&[1, 0]), Cf64::new(0.6, 0.0))
            .unwrap();
        s.accumulate(FockState::from_occupations(&[0, 1]), Cf64::new(0.0, 0.8))
            .unwrap();
        let groups = marginalize_loss(&s).unwrap();
        assert_eq!(groups.len(), 2);
        let p1 = groups[&(FockState::from_occupations(&[1, 0]), LossSignature::default())];
        assert!((p1 - 0.36).abs() < 1e-12);
    }

    #[test]
    fn marginalize_tracks_loss_signature() {
        let reg = ModeRegistry::new(1);
        let mut s = PureState::<Cf64>::empty(reg);
        s.accumulate(FockState::from_occupations(&[1, 0]), Cf64::one())
            .unwrap();
        let lossy = attach_loss(&s, 0, 0.3, LossOrigin::Input).unwrap();
        let groups = marginalize_loss(&lossy).unwrap();
        let detected = groups[&(
            FockState::from_occupations(&[1, 0]),
            LossSignature::default(),
        )];
        let lost = groups[&(
            FockState::from_occupations(&[0, 0]),
            LossSignature { input: 1, ..Default::default() },
        )];
        assert!((detected - 0.3).abs() < 1e-12);
        assert!((lost - 0.7).abs() < 1e-12);
        let total: f64 = groups.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_table_is_point_mass_at_ideal_parameters() {
        let settings = DetectionSettings::ideal(DetectorModel::Pnrd);
        let t = conditional_table(&[1, 0, 0, 1], &settings);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.total(), 1.0);
        let settings = DetectionSettings::ideal(DetectorModel::Bd);
        let t = conditional_table(&[2, 0], &settings);
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows.contains_key(&model_map(&[1, 0], DetectorModel::Bd)));
    }

    #[test]
    fn conditional_table_binomial_thinning() {
        // Two photons in one mode, PNRD, no darks:
        // P(2) = eta^2, P(1) = 2 eta (1-eta), P(0) = (1-eta)^2.
        let eta = 0.7;
        let settings = DetectionSettings::new(eta, 0.0, DetectorModel::Pnrd, DarkBudget::Full).unwrap();
        let t = conditional_table(&[2, 0], &settings);
        let get = |a: u8| t.rows[&model_map(&[a, 0], DetectorModel::Pnrd)];
        assert!((get(2) - eta * eta).abs() < 1e-12);
        assert!((get(1) - 2.0 * eta * (1.0 - eta)).abs() < 1e-12);
        assert!((get(0) - (1.0 - eta) * (1.0 - eta)).abs() < 1e-12);
        assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_table_matches_state_level_loss_oracle() {
        // Independent route: model detector inefficiency with explicit loss
        // modes on a pure state, marginalize, convolve darks, then map.
        let eta = 0.6;
        let xi = 0.01;
        for model in DetectorModel::ALL {
            let counts = [2u8, 1, 0, 1];
            let reg = ModeRegistry::new(2);
            let mut s = PureState::<Cf64>::empty(reg);
            s.accumulate(FockState::from_occupations(&counts), Cf64::one())
                .unwrap();
            s.normalize().unwrap();
            let mut lossy = s;
            for m in 0..4 {
                lossy = attach_loss(&lossy, m, eta, LossOrigin::Detector).unwrap();
            }
            let marg = marginalize_loss(&lossy).unwrap();
            let mut dist: BTreeMap<FockState, f64> = BTreeMap::new();
            for ((det, _sig), p) in marg {
                *dist.entry(det).or_insert(0.0) += p;
            }
            let darked = dark_count_convolve(&dist, xi).unwrap();
            let mut expected: BTreeMap<OutcomePattern, f64> = BTreeMap::new();
            for (occ, p) in darked {
                *expected
                    .entry(model_map(occ.occupations(), model))
                    .or_insert(0.0) += p;
            }

            let settings = DetectionSettings::new(eta, xi, model, DarkBudget::Full).unwrap();
            let t = conditional_table(&counts, &settings);
            assert_eq!(t.rows.len(), expected.len(), "{model}");
            for (pat, p) in &t.rows {
                assert!(
                    (p - expected[pat]).abs() < 1e-12,
                    "{model} {pat}: {p} vs {}",
                    expected[pat]
                );
            }
        }
    }

    #[test]
    fn povm_rows_sum_to_one() {
        for model in DetectorModel::ALL {
            for counts in [[0u8, 0, 0, 0], [1, 0, 2, 0], [2, 2, 1, 1], [0, 3, 0, 1]] {
                let settings =
                    DetectionSettings::new(0.55, 3e-3, model, DarkBudget::Full).unwrap();
                let t = conditional_table(&counts, &settings);
                assert!(
                    (t.total() - 1.0).abs() < 1e-10,
                    "POVM completeness violated for {model} {counts:?}: {}",
                    t.total()
                );
            }
        }
    }

    #[test]
    fn dark_convolve_reference_cases() {
        // Vacuum over 4 modes: P(no darks) = (1-xi)^4.
        let xi = 1e-5;
        let mut dist = BTreeMap::new();
        dist.insert(FockState::from_occupations(&[0, 0, 0, 0]), 1.0);
        let out = dark_count_convolve(&dist, xi).unwrap();
        let p0 = out[&FockState::from_occupations(&[0, 0, 0, 0])];
        assert!((p0 - (1.0 - xi).powi(4)).abs() < 1e-15);
        // Occupied mode gains a photon with probability xi (1-xi)^(M-1).
        let mut dist = BTreeMap::new();
        dist.insert(FockState::from_occupations(&[1, 0, 0, 0]), 1.0);
        let out = dark_count_convolve(&dist, xi).unwrap();
        let p2 = out[&FockState::from_occupations(&[2, 0, 0, 0])];
        assert!((p2 - xi * (1.0 - xi).powi(3)).abs() < 1e-18);
        // xi = 0 leaves the distribution unchanged.
        let out = dark_count_convolve(&dist, 0.0).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn dark_truncation_deficit_is_tiny() {
        let xi = 1e-5;
        let full = DetectionSettings::new(1.0, xi, DetectorModel::Bd, DarkBudget::Full).unwrap();
        let cut = DetectionSettings::new(1.0, xi, DetectorModel::Bd, DarkBudget::AtMost(2)).unwrap();
        let counts = [0u8; 12];
        let t_full = conditional_table(&counts, &full);
        let t_cut = conditional_table(&counts, &cut);
        assert!((t_full.total() - 1.0).abs() < 1e-12);
        let deficit = 1.0 - t_cut.total();
        assert!(deficit > 0.0 && deficit < 3e-13, "deficit {deficit}");
    }

    #[test]
    fn model_reduction_happens_on_probabilities_not_amplitudes() {
        // (|1,0> - |1,1>)/sqrt(2) on one unit: both branches report
        // "early photon, late masked" under a slow detector. Correct
        // probability-level merging yields 1; amplitude-level merging
        // would cancel the branches and yield 0.
        let reg = ModeRegistry::new(1);
        let mut s = PureState::<Cf64>::empty(reg);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        s.accumulate(FockState::from_occupations(&[1, 0]), Cf64::new(r, 0.0))
            .unwrap();
        s.accumulate(FockState::from_occupations(&[1, 1]), Cf64::new(-r, 0.0))
            .unwrap();
        let ideal = ideal_outcomes(&s, DetectorModel::SlowPnrd).unwrap();
        let pattern = model_map(&[1, 0], DetectorModel::SlowPnrd);
        assert_eq!(ideal.patterns.len(), 1);
        assert!((ideal.patterns[&pattern] - 1.0).abs() < 1e-12);

        // Amplitude-level merging oracle (the wrong order of operations):
        let amp_sum: Cf64 = s
            .terms()
            .map(|(occ, _)| s.fock_amplitude(occ).unwrap())
            .sum();
        assert!(amp_sum.norm() < 1e-12, "amplitude merge would cancel");
    }

    #[test]
    fn dark_count_first_order_linearity() {
        // d/dxi of each row at 0 equals the sum of single-mode increments,
        // where an increment adds one detector-side photon after thinning.
        let counts = [1u8, 0, 2, 0];
        let model = DetectorModel::Pnrd;
        let eta = 0.8;
        let xi = 1e-6;

        // Independent oracle for the post-thinning raw count distribution.
        fn thinned(counts: &[u8], eta: f64) -> Vec<(Vec<u8>, f64)> {
            let mut dist = vec![(Vec::new(), 1.0)];
            for &n in counts {
                let mut next = Vec::new();
                for keep in 0..=n {
                    let ways = binomial(n as u64, keep as u64).unwrap() as f64;
                    let w = ways * eta.powi(keep as i32) * (1.0 - eta).powi((n - keep) as i32);
                    for (prefix, p) in &dist {
                        let mut v = prefix.clone();
                        v.push(keep);
                        next.push((v, p * w));
                    }
                }
                dist = next;
            }
            dist
        }

        let raw = thinned(&counts, eta);
        let table_of = |bump: Option<usize>| -> BTreeMap<OutcomePattern, f64> {
            let mut t = BTreeMap::new();
            for (v, p) in &raw {
                let mut v = v.clone();
                if let Some(m) = bump {
                    v[m] += 1;
                }
                *t.entry(model_map(&v, model)).or_insert(0.0) += p;
            }
            t
        };
        let base = table_of(None);
        let mut first: BTreeMap<OutcomePattern, f64> = BTreeMap::new();
        for m in 0..counts.len() {
            for (pat, p) in table_of(Some(m)) {
                *first.entry(pat).or_insert(0.0) += p;
            }
            for (pat, p) in &base {
                *first.entry(pat.clone()).or_insert(0.0) -= p;
            }
        }

        let bumped = conditional_table(
            &counts,
            &DetectionSettings::new(eta, xi, model, DarkBudget::Full).unwrap(),
        );
        let keys: std::collections::BTreeSet<_> =
            bumped.rows.keys().chain(first.keys()).cloned().collect();
        for pat in keys {
            let b = base.get(&pat).copied().unwrap_or(0.0);
            let fo = first.get(&pat).copied().unwrap_or(0.0);
            let got = bumped.rows.get(&pat).copied().unwrap_or(0.0);
            let expect = b + xi * fo;
            assert!(
                (got - expect).abs() < 50.0 * xi * xi + 1e-12,
                "{pat}: finite difference {got} vs first order {expect}"
            );
        }
    }

    #[test]
    fn bd_clicks_bounded_by_occupied_plus_darks() {
        let counts = [3u8, 1, 0, 0];
        let occupied = counts.iter().filter(|&&c| c > 0).count() as u32;
        let settings = DetectionSettings::new(0.9, 0.3, DetectorModel::Bd, DarkBudget::Full).unwrap();
        for_each_outcome(&counts, &settings, &mut |pattern, _p, _lost| {
            let clicks = pattern.reported_total();
            assert!(clicks <= occupied + 4);
        });
    }
}
