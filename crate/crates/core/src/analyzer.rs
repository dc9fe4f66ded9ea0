//! Scheme assembly, post-selection plan construction, and exact evaluation
//! of success rates and fidelity.
//!
//! A [`SchemeSpec`] names an analyzer layout (standard or enhanced), the
//! detector model, the per-output array size, and whether post-selection
//! additionally requires the expected total photon count. Plans are built
//! from ideal-parameter runs: a reported pattern is accepted for a Bell label
//! exactly when it occurs for that input alone. Evaluation then propagates
//! each Bell input through loss channels and the optical network, discards
//! loss modes at the probability level, and folds detector inefficiency and
//! dark counts into conditional outcome probabilities.

use std::collections::{BTreeMap, BTreeSet};

use crate::amp::{Amp, Cf64, ExactAmp, ExactProb, Prob};
use crate::detection::{
    for_each_outcome, ideal_outcomes, marginalize_loss, DarkBudget, DetectionSettings,
    DetectorModel, IdealOutcomes, OutcomePattern,
};
use crate::error::{CoreError, Result};
use crate::fock::{FockState, LossOrigin, ModeRegistry};
use crate::optics::{
    attach_loss, balanced_beam_splitter, enhanced_network_decomposition, splitter_unitary,
    splitter_unitary_f64, LinearTransform,
};
use crate::sources::{make_source_state, BellState, SourceKind, SourceSpec};
use crate::state::PureState;

/// Analyzer layout.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Scheme {
    /// One balanced beam splitter, two detector outputs.
    Standard,
    /// Four beam splitters, four outputs, auxiliary photon pair on the two
    /// extra inputs.
    Enhanced,
}

impl Scheme {
    pub fn spatial_count(self) -> usize {
        match self {
            Scheme::Standard => 2,
            Scheme::Enhanced => 4,
        }
    }

    /// Photons expected at the detectors when nothing is lost.
    pub fn expected_photons(self) -> u32 {
        match self {
            Scheme::Standard => 2,
            Scheme::Enhanced => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Standard => "standard",
            Scheme::Enhanced => "enhanced",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// What feeds the auxiliary input pair of the enhanced scheme.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Auxiliary {
    /// A single maximally entangled pair (the design case).
    PhiPlus,
    /// Nothing: the enhanced layout then behaves like the standard scheme.
    Vacuum,
    /// The `n`-pair term of a down-conversion source.
    PairTerm(u32),
}

impl Auxiliary {
    pub fn photons(self) -> u32 {
        match self {
            Auxiliary::PhiPlus => 2,
            Auxiliary::Vacuum => 0,
            Auxiliary::PairTerm(n) => 2 * n,
        }
    }
}

/// A full analyzer configuration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub model: DetectorModel,
    /// Detectors per output mode; 1 means no multiplexing.
    pub array_size: usize,
    /// Reject patterns whose reported photon total falls short of the
    /// expected total. Required for loss-robust post-selection with slow
    /// number-resolving detectors.
    pub count_filter: bool,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme, model: DetectorModel) -> Self {
        SchemeSpec { scheme, model, array_size: 1, count_filter: false }
    }

    pub fn with_array(mut self, n: usize) -> Self {
        self.array_size = n;
        self
    }

    pub fn with_count_filter(mut self, on: bool) -> Self {
        self.count_filter = on;
        self
    }

    /// The plan convention used for headline comparisons: slow
    /// number-resolving detectors get the count filter, everything else is
    /// unfiltered (the filter would not change their plans).
    pub fn reproduction_default(scheme: Scheme, model: DetectorModel) -> Self {
        SchemeSpec::new(scheme, model).with_count_filter(model == DetectorModel::SlowPnrd)
    }

    /// Registry for this configuration: one detector unit per output
    /// sub-mode, ordered by (spatial mode, sub-detector).
    pub fn registry(&self) -> ModeRegistry {
        ModeRegistry::new(self.scheme.spatial_count() * self.array_size)
    }

    /// Root unit of a spatial mode (sub-detector 0).
    pub fn root_unit(&self, spatial: usize) -> usize {
        spatial * self.array_size
    }

    /// Detection modes carrying the input state (bins of spatial modes 0, 1).
    pub fn input_modes(&self, registry: &ModeRegistry) -> Vec<usize> {
        let mut v = Vec::new();
        for s in 0..2 {
            let u = self.root_unit(s);
            v.push(registry.a_bin(u));
            v.push(registry.b_bin(u));
        }
        v
    }

    /// Detection modes carrying the auxiliary state (spatial modes 2, 3).
    pub fn aux_modes(&self, registry: &ModeRegistry) -> Vec<usize> {
        if self.scheme == Scheme::Standard {
            return Vec::new();
        }
        let mut v = Vec::new();
        for s in 2..4 {
            let u = self.root_unit(s);
            v.push(registry.a_bin(u));
            v.push(registry.b_bin(u));
        }
        v
    }

    fn bin_mode(&self, registry: &ModeRegistry, unit: usize, bin: usize) -> usize {
        if bin == 0 {
            registry.a_bin(unit)
        } else {
            registry.b_bin(unit)
        }
    }

    /// Sub-detector modes of one (spatial mode, bin) group.
    fn array_group(&self, registry: &ModeRegistry, spatial: usize, bin: usize) -> Vec<usize> {
        (0..self.array_size)
            .map(|j| self.bin_mode(registry, spatial * self.array_size + j, bin))
            .collect()
    }

    /// Beam-splitter core of the network, acting on the root units of each
    /// qubit bin.
    fn core_steps<A: Amp>(&self, registry: &ModeRegistry) -> Vec<LinearTransform<A>> {
        let mut steps = Vec::new();
        for bin in 0..2 {
            let m = |s: usize| self.bin_mode(registry, self.root_unit(s), bin);
            match self.scheme {
                Scheme::Standard => steps.push(balanced_beam_splitter(m(0), m(1))),
                Scheme::Enhanced => {
                    steps.extend(enhanced_network_decomposition([m(0), m(1), m(2), m(3)]))
                }
            }
        }
        steps
    }

    /// The optical network as a beam-splitter sequence followed by the
    /// per-output array splitters.
    fn network<A: Amp>(&self, registry: &ModeRegistry) -> Result<Vec<LinearTransform<A>>> {
        let mut steps = self.core_steps::<A>(registry);
        if self.array_size > 1 {
            for s in 0..self.scheme.spatial_count() {
                for bin in 0..2 {
                    steps.push(splitter_unitary::<A>(&self.array_group(registry, s, bin))?);
                }
            }
        }
        Ok(steps)
    }

    /// Public view of the full network (beam splitters plus array
    /// splitters) for callers composing their own pipelines.
    pub fn network_transforms<A: Amp>(
        &self,
        registry: &ModeRegistry,
    ) -> Result<Vec<LinearTransform<A>>> {
        self.network::<A>(registry)
    }

    /// Float-scalar network; supports array sizes that are not powers of two.
    fn network_f64(&self, registry: &ModeRegistry) -> Result<Vec<LinearTransform<Cf64>>> {
        let mut steps = self.core_steps::<Cf64>(registry);
        if self.array_size > 1 {
            for s in 0..self.scheme.spatial_count() {
                for bin in 0..2 {
                    steps.push(splitter_unitary_f64(&self.array_group(registry, s, bin))?);
                }
            }
        }
        Ok(steps)
    }

    /// Source state for one Bell input (tensored with the auxiliary state on
    /// the enhanced scheme), over a registry that may already carry loss
    /// modes.
    pub fn source_state<A: Amp>(
        &self,
        input: BellState,
        aux: Auxiliary,
        registry: &ModeRegistry,
    ) -> Result<PureState<A>> {
        let bell = make_source_state::<A>(
            SourceSpec {
                kind: SourceKind::Bell(input),
                units: (self.root_unit(0), self.root_unit(1)),
            },
            registry,
        )?;
        if self.scheme == Scheme::Standard {
            return Ok(bell);
        }
        let aux_kind = match aux {
            Auxiliary::PhiPlus => SourceKind::Bell(BellState::PhiPlus),
            Auxiliary::Vacuum => SourceKind::Vacuum,
            Auxiliary::PairTerm(n) => SourceKind::SpdcPair(n),
        };
        let aux_state = make_source_state::<A>(
            SourceSpec { kind: aux_kind, units: (self.root_unit(2), self.root_unit(3)) },
            registry,
        )?;
        bell.tensor(&aux_state)
    }

    /// Total photons at the detectors when nothing is lost.
    pub fn expected_total(&self, aux: Auxiliary) -> u32 {
        match self.scheme {
            Scheme::Standard => 2,
            Scheme::Enhanced => 2 + aux.photons(),
        }
    }
}

/// Ideal-parameter run data for all four Bell inputs.
#[derive(Clone, Debug)]
pub struct IdealRun<P> {
    pub outcomes: [IdealOutcomes<P>; 4],
    /// Output basis states that occur for exactly one Bell input.
    pub unambiguous: [BTreeSet<FockState>; 4],
}

/// Propagates every Bell input at ideal parameters and classifies output
/// states by ambiguity.
pub fn ideal_run<A: Amp>(spec: &SchemeSpec, aux: Auxiliary) -> Result<IdealRun<A::Prob>> {
    let registry = spec.registry();
    let network = spec.network::<A>(&registry)?;
    let mut outcomes: Vec<IdealOutcomes<A::Prob>> = Vec::with_capacity(4);
    for input in BellState::ALL {
        let mut state = spec.source_state::<A>(input, aux, &registry)?;
        for step in &network {
            state = step.apply(&state)?;
        }
        outcomes.push(ideal_outcomes(&state, spec.model)?);
    }
    let outcomes: [IdealOutcomes<A::Prob>; 4] =
        outcomes.try_into().map_err(|_| CoreError::Invalid("four inputs".into()))?;
    let unambiguous = classify_unambiguous(&outcomes);
    Ok(IdealRun { outcomes, unambiguous })
}

/// Float-scalar ideal run (supports non-power-of-two array sizes).
pub fn ideal_run_f64(spec: &SchemeSpec, aux: Auxiliary) -> Result<IdealRun<f64>> {
    let registry = spec.registry();
    let network = spec.network_f64(&registry)?;
    let mut outcomes: Vec<IdealOutcomes<f64>> = Vec::with_capacity(4);
    for input in BellState::ALL {
        let mut state = spec.source_state::<Cf64>(input, aux, &registry)?;
        for step in &network {
            state = step.apply(&state)?;
        }
        outcomes.push(ideal_outcomes(&state, spec.model)?);
    }
    let outcomes: [IdealOutcomes<f64>; 4] =
        outcomes.try_into().map_err(|_| CoreError::Invalid("four inputs".into()))?;
    let unambiguous = classify_unambiguous(&outcomes);
    Ok(IdealRun { outcomes, unambiguous })
}

fn classify_unambiguous<P: Prob>(outcomes: &[IdealOutcomes<P>; 4]) -> [BTreeSet<FockState>; 4] {
    let supports: Vec<BTreeSet<&FockState>> = outcomes
        .iter()
        .map(|o| o.states.iter().filter(|(_, p)| p.occurs()).map(|(s, _)| s).collect())
        .collect();
    let mut result: [BTreeSet<FockState>; 4] = Default::default();
    for b in 0..4 {
        for &s in &supports[b] {
            if (0..4).all(|o| o == b || !supports[o].contains(s)) {
                result[b].insert(s.clone());
            }
        }
    }
    result
}

/// Mutually exclusive assignment of reported patterns to Bell labels; the
/// complement of the accept map is rejected.
#[derive(Clone, Debug)]
pub struct PostSelectionPlan {
    pub spec: SchemeSpec,
    accept: BTreeMap<OutcomePattern, BellState>,
    expected_total: u32,
    unambiguous: [BTreeSet<FockState>; 4],
}

impl PostSelectionPlan {
    pub fn label_of(&self, pattern: &OutcomePattern) -> Option<BellState> {
        self.accept.get(pattern).copied()
    }

    pub fn accept_map(&self) -> &BTreeMap<OutcomePattern, BellState> {
        &self.accept
    }

    pub fn accepted_count(&self) -> usize {
        self.accept.len()
    }

    pub fn expected_total(&self) -> u32 {
        self.expected_total
    }

    pub fn unambiguous_states(&self, input: BellState) -> &BTreeSet<FockState> {
        &self.unambiguous[input.index()]
    }

    /// Assembles a plan from an explicit accept map and unambiguous-state
    /// sets (used when merging plans across auxiliary photon sectors).
    pub fn from_parts(
        spec: SchemeSpec,
        expected_total: u32,
        accept: BTreeMap<OutcomePattern, BellState>,
        unambiguous: [BTreeSet<FockState>; 4],
    ) -> Self {
        PostSelectionPlan { spec, accept, expected_total, unambiguous }
    }

    /// Builds a plan from per-input ideal pattern tables.
    pub fn from_tables<P: Prob>(
        spec: SchemeSpec,
        expected_total: u32,
        run: &IdealRun<P>,
    ) -> Self {
        let mut seen: BTreeMap<&OutcomePattern, [bool; 4]> = BTreeMap::new();
        for (b, o) in run.outcomes.iter().enumerate() {
            for (pattern, p) in &o.patterns {
                if p.occurs() {
                    seen.entry(pattern).or_insert([false; 4])[b] = true;
                }
            }
        }
        let mut accept = BTreeMap::new();
        for (pattern, inputs) in seen {
            let count = inputs.iter().filter(|&&x| x).count();
            if count != 1 {
                continue;
            }
            if spec.count_filter && !count_filter_accepts(pattern, expected_total) {
                continue;
            }
            let b = inputs.iter().position(|&x| x).unwrap();
            accept.insert(pattern.clone(), BellState::ALL[b]);
        }
        PostSelectionPlan {
            spec,
            accept,
            expected_total,
            unambiguous: run.unambiguous.clone(),
        }
    }
}

/// Count-preserving acceptance test: the visible counts must account for
/// every expected photon, and at most one detector may have a dead-time
/// window open (at most one masked late bin). Patterns failing either test
/// lose their photon accounting under loss and degrade fidelity.
fn count_filter_accepts(pattern: &OutcomePattern, expected_total: u32) -> bool {
    if pattern.reported_total() != expected_total {
        return false;
    }
    pattern.entries().iter().filter(|&&e| e == crate::detection::MASKED).count() <= 1
}

/// Builds the optimal post-selection plan from an exact ideal run.
pub fn build_plan(spec: &SchemeSpec, aux: Auxiliary) -> Result<PostSelectionPlan> {
    if spec.array_size.is_power_of_two() {
        let run = ideal_run::<ExactAmp>(spec, aux)?;
        Ok(PostSelectionPlan::from_tables(*spec, spec.expected_total(aux), &run))
    } else {
        let run = ideal_run_f64(spec, aux)?;
        Ok(PostSelectionPlan::from_tables(*spec, spec.expected_total(aux), &run))
    }
}

/// Maximum success rate at ideal parameters, as an exact rational: the
/// unweighted average over Bell inputs of the accepted-pattern probability.
pub fn max_success_rate(spec: &SchemeSpec, aux: Auxiliary) -> Result<ExactProb> {
    let run = ideal_run::<ExactAmp>(spec, aux)?;
    let plan = PostSelectionPlan::from_tables(*spec, spec.expected_total(aux), &run);
    let mut acc = ExactProb::zero();
    for (b, input) in BellState::ALL.iter().enumerate() {
        for (pattern, p) in &run.outcomes[b].patterns {
            if plan.label_of(pattern) == Some(*input) {
                acc = acc.add(p);
            }
        }
    }
    Ok(acc / ExactProb::from_integer(4))
}

/// Loss and noise parameters for an evaluation.
#[derive(Clone, Copy, Debug)]
pub struct LossParams {
    pub eta_i: f64,
    pub eta_a: f64,
    pub eta_d: f64,
    pub xi: f64,
}

impl LossParams {
    pub fn ideal() -> Self {
        LossParams { eta_i: 1.0, eta_a: 1.0, eta_d: 1.0, xi: 0.0 }
    }

    pub fn new(eta_i: f64, eta_a: f64, eta_d: f64, xi: f64) -> Result<Self> {
        for (name, v) in [("eta_i", eta_i), ("eta_a", eta_a), ("eta_d", eta_d)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::ParameterRange { name, value: v, range: "[0, 1]" });
            }
        }
        if !(0.0..1.0).contains(&xi) {
            return Err(CoreError::ParameterRange { name: "xi", value: xi, range: "[0, 1)" });
        }
        Ok(LossParams { eta_i, eta_a, eta_d, xi })
    }
}

/// Positive and true-positive rate for a single Bell input.
#[derive(Clone, Copy, Debug, Default)]
pub struct InputMetrics {
    pub positive: f64,
    pub true_positive: f64,
}

/// Evaluation result: true/false positive rates and fidelity, with the
/// per-input breakdown and the parameters echoed back.
#[derive(Clone, Debug)]
pub struct Metrics {
    pub p_t: f64,
    pub p_f: f64,
    pub positive: f64,
    /// `p_t / (p_t + p_f)`; absent when no pattern is ever accepted.
    pub fidelity: Option<f64>,
    pub per_input: [InputMetrics; 4],
    pub params: LossParams,
    /// Upper bound on outcome probability mass skipped by a truncated
    /// dark-count enumeration (0 when enumeration is exhaustive).
    pub dark_deficit: f64,
}

impl Metrics {
    fn from_per_input(per_input: [InputMetrics; 4], params: LossParams, deficit: f64) -> Metrics {
        let positive = per_input.iter().map(|m| m.positive).sum::<f64>() / 4.0;
        let p_t = per_input.iter().map(|m| m.true_positive).sum::<f64>() / 4.0;
        let p_f = (positive - p_t).max(0.0);
        let fidelity = if positive > 0.0 { Some(p_t / positive) } else { None };
        Metrics { p_t, p_f, positive, fidelity, per_input, params, dark_deficit: deficit }
    }
}

/// Exact evaluation of a scheme under loss, detector inefficiency, and dark
/// counts, using the given post-selection plan.
///
/// True positives are restricted to branches with photons lost on no channel
/// at all, whose underlying output state is an ideal unambiguous output of
/// the actual input, and whose reported pattern carries the input's label.
pub fn evaluate(
    spec: &SchemeSpec,
    plan: &PostSelectionPlan,
    params: &LossParams,
) -> Result<Metrics> {
    if plan.spec != *spec {
        return Err(CoreError::PlanMismatch);
    }
    evaluate_with_aux(spec, plan, Auxiliary::PhiPlus, params)
}

/// [`evaluate`] with an explicit auxiliary source (enhanced scheme only;
/// ignored by the standard scheme).
pub fn evaluate_with_aux(
    spec: &SchemeSpec,
    plan: &PostSelectionPlan,
    aux: Auxiliary,
    params: &LossParams,
) -> Result<Metrics> {
    evaluate_with_options(spec, plan, aux, params, None)
}

/// [`evaluate_with_aux`] with an explicit dark-count enumeration budget
/// (default: exhaustive up to 16 candidate modes, then first two orders).
pub fn evaluate_with_options(
    spec: &SchemeSpec,
    plan: &PostSelectionPlan,
    aux: Auxiliary,
    params: &LossParams,
    dark: Option<DarkBudget>,
) -> Result<Metrics> {
    let registry = spec.registry();
    let network = spec.network_f64(&registry)?;
    let mut per_input = [InputMetrics::default(); 4];
    let mut deficit_total = 0.0f64;

    for (b, input) in BellState::ALL.iter().enumerate() {
        let mut state = spec.source_state::<Cf64>(*input, aux, &registry)?;
        state.normalize()?;
        // Loss channels act on the sources before the network.
        for m in spec.input_modes(&registry) {
            state = attach_loss(&state, m, params.eta_i, LossOrigin::Input)?;
        }
        if spec.scheme == Scheme::Enhanced {
            for m in spec.aux_modes(&registry) {
                state = attach_loss(&state, m, params.eta_a, LossOrigin::Auxiliary)?;
            }
        }
        for step in &network {
            state = step.apply(&state)?;
        }

        let groups = marginalize_loss(&state)?;
        let n_detected = registry.detected_count();
        let settings = DetectionSettings::new(
            params.eta_d,
            params.xi,
            spec.model,
            dark.unwrap_or_else(|| DarkBudget::auto(n_detected)),
        )?;
        let mut metrics = InputMetrics::default();
        let mut mass = 0.0f64;
        for ((det, sig), p_state) in &groups {
            let counts = det.occupations();
            let unambiguous =
                sig.is_lossless() && plan.unambiguous[b].contains(det);
            for_each_outcome(counts, &settings, &mut |pattern, w, det_lost| {
                mass += p_state * w;
                if let Some(label) = plan.label_of(&pattern) {
                    let contribution = p_state * w;
                    metrics.positive += contribution;
                    if unambiguous && det_lost == 0 && label == *input {
                        metrics.true_positive += contribution;
                    }
                }
            });
        }
        deficit_total += (1.0 - mass).max(0.0);
        per_input[b] = metrics;
    }

    Ok(Metrics::from_per_input(per_input, *params, deficit_total / 4.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn rate(scheme: Scheme, model: DetectorModel, filter: bool) -> ExactProb {
        let spec = SchemeSpec::new(scheme, model).with_count_filter(filter);
        max_success_rate(&spec, Auxiliary::PhiPlus).unwrap()
    }

    #[test]
    fn standard_scheme_maximum_rates() {
        assert_eq!(rate(Scheme::Standard, DetectorModel::Pnrd, false), Ratio::new(1, 2));
        assert_eq!(rate(Scheme::Standard, DetectorModel::Bd, false), Ratio::new(1, 2));
        assert_eq!(rate(Scheme::Standard, DetectorModel::SlowPnrd, false), Ratio::new(1, 2));
        assert_eq!(rate(Scheme::Standard, DetectorModel::SlowBd, false), Ratio::new(1, 4));
    }

    #[test]
    fn enhanced_scheme_maximum_rates() {
        assert_eq!(rate(Scheme::Enhanced, DetectorModel::Pnrd, false), Ratio::new(3, 4));
        assert_eq!(rate(Scheme::Enhanced, DetectorModel::Bd, false), Ratio::new(3, 16));
        assert_eq!(rate(Scheme::Enhanced, DetectorModel::SlowPnrd, false), Ratio::new(39, 64));
        assert_eq!(rate(Scheme::Enhanced, DetectorModel::SlowBd, false), Ratio::new(1, 16));
    }

    #[test]
    fn count_filter_rates_for_slow_number_resolving_detectors() {
        assert_eq!(rate(Scheme::Standard, DetectorModel::SlowPnrd, true), Ratio::new(1, 4));
        assert_eq!(rate(Scheme::Enhanced, DetectorModel::SlowPnrd, true), Ratio::new(9, 32));
    }

    #[test]
    fn enhanced_with_vacuum_auxiliary_behaves_like_standard() {
        let spec = SchemeSpec::new(Scheme::Enhanced, DetectorModel::Pnrd);
        let r = max_success_rate(&spec, Auxiliary::Vacuum).unwrap();
        assert_eq!(r, Ratio::new(1, 2));
    }

    #[test]
    fn standard_pnrd_plan_accepts_four_patterns() {
        let spec = SchemeSpec::new(Scheme::Standard, DetectorModel::Pnrd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        assert_eq!(plan.accepted_count(), 4);
        // a1 b2 and a2 b1 identify psi-; a1 b1 and a2 b2 identify psi+.
        use crate::detection::model_map;
        let m = DetectorModel::Pnrd;
        assert_eq!(plan.label_of(&model_map(&[1, 0, 0, 1], m)), Some(BellState::PsiMinus));
        assert_eq!(plan.label_of(&model_map(&[0, 1, 1, 0], m)), Some(BellState::PsiMinus));
        assert_eq!(plan.label_of(&model_map(&[1, 1, 0, 0], m)), Some(BellState::PsiPlus));
        assert_eq!(plan.label_of(&model_map(&[0, 0, 1, 1], m)), Some(BellState::PsiPlus));
        assert_eq!(plan.label_of(&model_map(&[2, 0, 0, 0], m)), None);
    }

    #[test]
    fn standard_slow_bd_accepts_only_psi_minus() {
        let spec = SchemeSpec::new(Scheme::Standard, DetectorModel::SlowBd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        assert_eq!(plan.accepted_count(), 2);
        for label in plan.accept_map().values() {
            assert_eq!(*label, BellState::PsiMinus);
        }
    }

    #[test]
    fn enhanced_bd_accepts_only_four_distinct_detector_patterns() {
        let spec = SchemeSpec::new(Scheme::Enhanced, DetectorModel::Bd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        assert!(plan.accepted_count() > 0);
        for pattern in plan.accept_map().keys() {
            assert_eq!(pattern.reported_total(), 4, "pattern {pattern}");
            assert!(pattern.entries().iter().all(|&e| e <= 1));
        }
    }

    #[test]
    fn enhanced_ideal_output_term_counts() {
        let spec = SchemeSpec::new(Scheme::Enhanced, DetectorModel::Pnrd);
        let run = ideal_run::<ExactAmp>(&spec, Auxiliary::PhiPlus).unwrap();
        let counts: Vec<usize> = run.outcomes.iter().map(|o| o.states.len()).collect();
        assert_eq!(counts, vec![80, 80, 42, 38]);
    }

    #[test]
    fn ideal_evaluation_recovers_maximum_rates_with_unit_fidelity() {
        for scheme in [Scheme::Standard, Scheme::Enhanced] {
            for model in DetectorModel::ALL {
                let spec = SchemeSpec::reproduction_default(scheme, model);
                let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
                let m = evaluate(&spec, &plan, &LossParams::ideal()).unwrap();
                let expected = max_success_rate(&spec, Auxiliary::PhiPlus).unwrap().to_f64();
                assert!(
                    (m.p_t - expected).abs() < 1e-12,
                    "{scheme}/{model}: p_t {} vs {expected}",
                    m.p_t
                );
                assert_eq!(m.p_f, 0.0, "{scheme}/{model}");
                assert_eq!(m.fidelity, Some(1.0), "{scheme}/{model}");
            }
        }
    }

    #[test]
    fn true_rate_scales_with_input_transmission_squared() {
        let spec = SchemeSpec::new(Scheme::Standard, DetectorModel::Pnrd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        let mut scaled = Vec::new();
        for eta_i in [1.0, 0.5, 0.1, 0.01] {
            let params = LossParams::new(eta_i, 1.0, 1.0, 0.0).unwrap();
            let m = evaluate(&spec, &plan, &params).unwrap();
            scaled.push(m.p_t / (eta_i * eta_i));
        }
        for w in scaled.windows(2) {
            assert!((w[0] - w[1]).abs() / w[0] < 1e-9, "{scaled:?}");
        }
        assert!((scaled[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_dark_count_loss_gives_zero_false_positives() {
        for scheme in [Scheme::Standard, Scheme::Enhanced] {
            for model in DetectorModel::ALL {
                let spec = SchemeSpec::reproduction_default(scheme, model);
                let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
                let params = LossParams::new(0.3, 0.8, 0.6, 0.0).unwrap();
                let m = evaluate(&spec, &plan, &params).unwrap();
                assert_eq!(m.p_f, 0.0, "{scheme}/{model}");
                assert_eq!(m.positive, m.p_t, "{scheme}/{model}");
            }
        }
    }

    #[test]
    fn unfiltered_slow_pnrd_loses_fidelity_under_loss_alone() {
        // Without the count filter, lossy two-photon outputs mimic the
        // single-early-photon signature and get mislabeled.
        let spec = SchemeSpec::new(Scheme::Standard, DetectorModel::SlowPnrd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        let params = LossParams::new(1.0, 1.0, 0.7, 0.0).unwrap();
        let m = evaluate(&spec, &plan, &params).unwrap();
        assert!(m.p_f > 0.0);
        assert!(m.fidelity.unwrap() < 1.0);
    }

    #[test]
    fn enhanced_true_rate_factorizes_at_zero_dark_counts() {
        let spec = SchemeSpec::new(Scheme::Enhanced, DetectorModel::Pnrd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        let (eta_i, eta_a, eta_d) = (0.2, 0.7, 0.85);
        let params = LossParams::new(eta_i, eta_a, eta_d, 0.0).unwrap();
        let m = evaluate(&spec, &plan, &params).unwrap();
        let expected = 0.75 * eta_d.powi(4) * eta_a.powi(2) * eta_i.powi(2);
        assert!(
            (m.p_t - expected).abs() / expected < 1e-10,
            "p_t {} vs {}",
            m.p_t,
            expected
        );
    }

    #[test]
    fn fidelity_decouples_from_auxiliary_transmission() {
        // Both p_t and p_f scale as eta_a^2, so the fidelity barely moves
        // as the auxiliary transmission sweeps [0.5, 1.0].
        let spec = SchemeSpec::new(Scheme::Enhanced, DetectorModel::Pnrd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        let mut fids = Vec::new();
        for eta_a in [0.5, 0.75, 1.0] {
            let params = LossParams::new(0.01, eta_a, 1.0, 1e-5).unwrap();
            let m = evaluate(&spec, &plan, &params).unwrap();
            fids.push(m.fidelity.unwrap());
        }
        let (lo, hi) = (
            fids.iter().cloned().fold(f64::INFINITY, f64::min),
            fids.iter().cloned().fold(0.0f64, f64::max),
        );
        assert!((hi - lo) / lo < 0.01, "fidelity spread over eta_a: {fids:?}");
    }

    #[test]
    fn example_point_matches_leading_order_formulas() {
        // Enhanced + PNRD at eta_i = 0.01, eta_d = 0.9, xi = 1e-5:
        // p_t/eta_i^2 within 2% of (3/4) eta_d^4 (1-xi)^8 and p_f within 10%
        // of 10 eta_d^3 eta_i (1-eta_i) xi.
        let spec = SchemeSpec::new(Scheme::Enhanced, DetectorModel::Pnrd);
        let plan = build_plan(&spec, Auxiliary::PhiPlus).unwrap();
        let (eta_i, eta_d, xi) = (0.01, 0.9, 1e-5);
        let params = LossParams::new(eta_i, 1.0, eta_d, xi).unwrap();
        let m = evaluate(&spec, &plan, &params).unwrap();
        let pt_formula = 0.75 * eta_d.powi(4) * (1.0 - xi).powi(8);
        let got = m.p_t / (eta_i * eta_i);
        assert!((got - pt_formula).abs() / pt_formula < 0.02, "{got} vs {pt_formula}");
        let pf_formula = 10.0 * eta_d.powi(3) * eta_i * (1.0 - eta_i) * xi;
        assert!(
            (m.p_f - pf_formula).abs() / pf_formula < 0.10,
            "p_f {} vs {}",
            m.p_f,
            pf_formula
        );
    }
}
