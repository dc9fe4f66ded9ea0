//! Category-based probability-flow analysis for multiplexed detector arrays.
//!
//! Click detectors behave ideally when at most one photon arrives, so
//! splitting each output over an array of `N` detectors recovers success
//! rate otherwise lost to multi-photon events. With vacuum on every unused
//! splitter port no interference occurs, and the array acts classically:
//! output states are grouped by the multiset of per-detector photon counts
//! (their *category*), and splitting moves probability between categories
//! through a column-stochastic matrix `A(N)` built from multinomial
//! occupancy statistics. The true success rate with binary detectors is the
//! all-singletons component of `A(N) * P_t`.

use std::collections::BTreeMap;

use smallvec::SmallVec;

use crate::amp::{ExactAmp, ExactProb, Prob};
use crate::analyzer::{
    build_plan, Auxiliary, LossParams, Metrics, Scheme, SchemeSpec,
};
use crate::comb::{factorial, hilbert_dim_up_to};
use crate::detection::{marginalize_loss, DarkBudget, DetectorModel};
use crate::error::{CoreError, Result};
use crate::fock::LossOrigin;
use crate::optics::attach_loss_half;
use crate::sources::BellState;

/// Sorted multiset of positive per-detector photon counts, e.g. `{1,1,2}`.
/// The empty signature denotes the no-photon category.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct CategorySignature(SmallVec<[u8; 8]>);

impl CategorySignature {
    pub fn new(mut entries: SmallVec<[u8; 8]>) -> Self {
        debug_assert!(entries.iter().all(|&e| e >= 1));
        entries.sort_unstable();
        CategorySignature(entries)
    }

    pub fn from_slice(entries: &[u8]) -> Self {
        Self::new(SmallVec::from_slice(entries))
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn parts(&self) -> usize {
        self.0.len()
    }

    /// Category of a detection-mode count vector. Slow detectors merge the
    /// early and late bins of a unit when the early bin is occupied; the
    /// merge preserves the photon total, capturing only the dead-time flaw.
    pub fn of_counts(counts: &[u8], model: DetectorModel) -> Self {
        let mut entries: SmallVec<[u8; 8]> = SmallVec::new();
        if model.is_slow() {
            for pair in counts.chunks_exact(2) {
                let (a, b) = (pair[0], pair[1]);
                if a >= 1 {
                    entries.push(a + b);
                } else if b >= 1 {
                    entries.push(b);
                }
            }
        } else {
            for &c in counts {
                if c >= 1 {
                    entries.push(c);
                }
            }
        }
        Self::new(entries)
    }
}

impl std::fmt::Display for CategorySignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        if self.0.is_empty() {
            write!(f, "0")?;
        }
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// Probability and true-positive probability per category at ideal
/// parameters (Bell-averaged).
#[derive(Clone, Debug)]
pub struct CategoryVectors {
    pub p: BTreeMap<CategorySignature, ExactProb>,
    pub p_t: BTreeMap<CategorySignature, ExactProb>,
}

impl CategoryVectors {
    pub fn p_of(&self, sig: &CategorySignature) -> ExactProb {
        self.p.get(sig).cloned().unwrap_or_else(ExactProb::zero)
    }

    pub fn p_t_of(&self, sig: &CategorySignature) -> ExactProb {
        self.p_t.get(sig).cloned().unwrap_or_else(ExactProb::zero)
    }
}

/// Ideal-parameter category vectors for a scheme and detector model.
pub fn categorize(scheme: Scheme, model: DetectorModel) -> Result<CategoryVectors> {
    let spec = SchemeSpec::new(scheme, model);
    let run = crate::analyzer::ideal_run::<ExactAmp>(&spec, Auxiliary::PhiPlus)?;
    let quarter = ExactProb::new(1, 4);
    let mut p: BTreeMap<CategorySignature, ExactProb> = BTreeMap::new();
    let mut p_t: BTreeMap<CategorySignature, ExactProb> = BTreeMap::new();
    for (b, outcomes) in run.outcomes.iter().enumerate() {
        for (state, prob) in &outcomes.states {
            let sig = CategorySignature::of_counts(state.occupations(), model);
            let w = prob * quarter;
            *p.entry(sig.clone()).or_insert_with(ExactProb::zero) += w;
            if run.unambiguous[b].contains(state) {
                *p_t.entry(sig).or_insert_with(ExactProb::zero) += w;
            }
        }
    }
    Ok(CategoryVectors { p, p_t })
}

/// Category distribution conditioned on exactly one input photon lost (and
/// the auxiliary state intact), Bell-averaged. Computed exactly with
/// transmission-1/2 loss couplings; the conditional distribution does not
/// depend on the transmission used.
pub fn categorize_single_input_loss(
    scheme: Scheme,
    model: DetectorModel,
) -> Result<BTreeMap<CategorySignature, ExactProb>> {
    let spec = SchemeSpec::new(scheme, model);
    let registry = spec.registry();
    let mut dist: BTreeMap<CategorySignature, ExactProb> = BTreeMap::new();
    let mut class_mass = ExactProb::zero();
    for input in BellState::ALL {
        let mut state = spec.source_state::<ExactAmp>(input, Auxiliary::PhiPlus, &registry)?;
        for m in spec.input_modes(&registry) {
            state = attach_loss_half(&state, m, LossOrigin::Input)?;
        }
        let network = spec.network_transforms::<ExactAmp>(&registry)?;
        for step in &network {
            state = step.apply(&state)?;
        }
        for ((det, sig), prob) in marginalize_loss(&state)? {
            if sig.input == 1 && sig.auxiliary == 0 && sig.detector == 0 {
                let cat = CategorySignature::of_counts(det.occupations(), model);
                *dist.entry(cat).or_insert_with(ExactProb::zero) += &prob;
                class_mass = class_mass.add(&prob);
            }
        }
    }
    for v in dist.values_mut() {
        *v /= &class_mass;
    }
    Ok(dist)
}

/// Distribution of occupancy categories when `k` photons drop independently
/// and uniformly into `n` bins.
pub fn occupancy_split(k: u8, n: u64) -> Result<Vec<(CategorySignature, ExactProb)>> {
    if n == 0 {
        return Err(CoreError::ParameterRange { name: "n", value: 0.0, range: ">= 1" });
    }
    let mut out = Vec::new();
    let n = n as i128;
    for partition in partitions(k) {
        let p = partition.len() as i128;
        if p > n {
            continue;
        }
        // Ordered bin choices: n (n-1) ... (n-p+1) / prod(multiplicities!).
        let mut bin_ways: i128 = 1;
        for j in 0..p {
            bin_ways *= n - j;
        }
        let mut mult: BTreeMap<u8, u8> = BTreeMap::new();
        for &part in &partition {
            *mult.entry(part).or_insert(0) += 1;
        }
        for &m in mult.values() {
            bin_ways /= factorial(m)? as i128;
        }
        // Photon assignments: k! / prod(part!).
        let mut assign: i128 = factorial(k)? as i128;
        for &part in &partition {
            assign /= factorial(part)? as i128;
        }
        let denom = n.pow(k as u32);
        out.push((
            CategorySignature::from_slice(&partition),
            ExactProb::new(bin_ways * assign, denom),
        ));
    }
    Ok(out)
}

/// All partitions of `k` into positive parts (ascending order within each).
fn partitions(k: u8) -> Vec<Vec<u8>> {
    fn rec(remaining: u8, min_part: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if remaining == 0 {
            out.push(cur.clone());
            return;
        }
        for part in min_part..=remaining {
            cur.push(part);
            rec(remaining - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, 1, &mut Vec::new(), &mut out);
    out
}

/// Column-stochastic probability-flow matrix over a category basis.
#[derive(Clone, Debug)]
pub struct FlowMatrix {
    pub basis: Vec<CategorySignature>,
    /// `matrix[i][j]` = probability that category `basis[j]` becomes
    /// `basis[i]` after splitting each detector into `n` sub-detectors.
    pub matrix: Vec<Vec<ExactProb>>,
    pub n: u64,
}

impl FlowMatrix {
    pub fn index_of(&self, sig: &CategorySignature) -> Option<usize> {
        self.basis.iter().position(|s| s == sig)
    }

    /// Applies the matrix to a category-keyed vector.
    pub fn apply(&self, v: &BTreeMap<CategorySignature, ExactProb>) -> Vec<ExactProb> {
        let mut out = vec![ExactProb::zero(); self.basis.len()];
        for (j, sig) in self.basis.iter().enumerate() {
            if let Some(x) = v.get(sig) {
                for (o, row) in out.iter_mut().zip(&self.matrix) {
                    *o += row[j] * x;
                }
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<ExactProb> {
        (0..self.basis.len())
            .map(|j| {
                let mut acc = ExactProb::zero();
                for row in &self.matrix {
                    acc += &row[j];
                }
                acc
            })
            .collect()
    }

    /// Matrix product `self * other` over the same basis.
    pub fn matmul(&self, other: &FlowMatrix) -> FlowMatrix {
        let n = self.basis.len();
        let mut matrix = vec![vec![ExactProb::zero(); n]; n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in 0..n {
                let mut acc = ExactProb::zero();
                for k in 0..n {
                    acc += self.matrix[i][k] * other.matrix[k][j];
                }
                matrix[i][j] = acc;
            }
        }
        FlowMatrix { basis: self.basis.clone(), matrix, n: self.n * other.n }
    }
}

/// Category basis for a scheme: partitions of the expected photon number,
/// finest first; with `lossy`, partitions of every smaller total follow in
/// decreasing-total order (splitting preserves totals, so the matrix stays
/// upper-triangular).
pub fn category_basis(scheme: Scheme, lossy: bool) -> Vec<CategorySignature> {
    let full = scheme.expected_photons() as u8;
    let totals: Vec<u8> = if lossy { (0..=full).rev().collect() } else { vec![full] };
    let mut basis = Vec::new();
    for t in totals {
        let mut parts = partitions(t);
        parts.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        basis.extend(parts.into_iter().map(|p| CategorySignature::from_slice(&p)));
    }
    basis
}

/// The probability-flow matrix `A(N)` for a scheme.
pub fn flow_matrix(scheme: Scheme, n: u64, lossy: bool) -> Result<FlowMatrix> {
    let basis = category_basis(scheme, lossy);
    let dim = basis.len();
    let mut matrix = vec![vec![ExactProb::zero(); dim]; dim];
    for (j, sig) in basis.iter().enumerate() {
        // Convolve the split distribution of each entry.
        let mut dist: BTreeMap<CategorySignature, ExactProb> = BTreeMap::new();
        dist.insert(CategorySignature::from_slice(&[]), ExactProb::one());
        for &entry in sig.entries() {
            let split = occupancy_split(entry, n)?;
            let mut next: BTreeMap<CategorySignature, ExactProb> = BTreeMap::new();
            for (acc_sig, acc_p) in &dist {
                for (part_sig, part_p) in &split {
                    let mut merged: SmallVec<[u8; 8]> =
                        SmallVec::from_slice(acc_sig.entries());
                    merged.extend_from_slice(part_sig.entries());
                    let merged = CategorySignature::new(merged);
                    *next.entry(merged).or_insert_with(ExactProb::zero) += acc_p * part_p;
                }
            }
            dist = next;
        }
        for (sig_out, p) in dist {
            let i = basis
                .iter()
                .position(|s| *s == sig_out)
                .ok_or_else(|| CoreError::Invalid(format!("category {sig_out} not in basis")))?;
            matrix[i][j] = p;
        }
    }
    Ok(FlowMatrix { basis, matrix, n })
}

/// Closed-form array success rate: the all-singletons component of
/// `A(N) * P_t` at ideal parameters.
pub fn array_rate(scheme: Scheme, model: DetectorModel, n: u64) -> Result<ExactProb> {
    let vectors = categorize(scheme, model)?;
    let flow = flow_matrix(scheme, n, false)?;
    let out = flow.apply(&vectors.p_t);
    let singletons = CategorySignature::from_slice(match scheme {
        Scheme::Standard => &[1, 1][..],
        Scheme::Enhanced => &[1, 1, 1, 1][..],
    });
    let idx = flow
        .index_of(&singletons)
        .ok_or_else(|| CoreError::Invalid("singleton category missing".into()))?;
    Ok(out[idx])
}

/// Array success rate with losses and dark counts:
/// `eta_d^2 eta_i^2 (1-xi)^(4N) p_t(N)` for the standard scheme and
/// `eta_d^4 eta_a^2 eta_i^2 (1-xi)^(8N) p_t(N)` for the enhanced scheme.
pub fn array_rate_lossy(
    scheme: Scheme,
    model: DetectorModel,
    n: u64,
    params: &LossParams,
) -> Result<f64> {
    let ideal = array_rate(scheme, model, n)?.to_f64();
    let modes = 4 * n as i32 * if scheme == Scheme::Enhanced { 2 } else { 1 };
    let factor = match scheme {
        Scheme::Standard => params.eta_d.powi(2) * params.eta_i.powi(2),
        Scheme::Enhanced => {
            params.eta_d.powi(4) * params.eta_a.powi(2) * params.eta_i.powi(2)
        }
    };
    Ok(factor * (1.0 - params.xi).powi(modes) * ideal)
}

/// Upper-bound false-positive approximation for detector arrays.
///
/// Binary models use the dark-count completion formulas with the
/// N-dependent three-photon category probability; number-resolving models
/// fall back to the single-detector closed form (arrays do not apply).
pub fn array_false_positive(
    scheme: Scheme,
    model: DetectorModel,
    n: u64,
    params: &LossParams,
) -> f64 {
    let nf = n as f64;
    let (eta_i, eta_a, eta_d, xi) = (params.eta_i, params.eta_a, params.eta_d, params.xi);
    match (scheme, model) {
        (Scheme::Standard, DetectorModel::SlowBd) => {
            2.0 * (2.0 * nf - 1.0)
                * eta_d
                * eta_i
                * (1.0 - eta_i)
                * xi
                * (1.0 - xi).powi(4 * n as i32 - 1)
        }
        // Arrays cannot improve the standard scheme with fast click
        // detectors; quote the single-detector rate.
        (Scheme::Standard, _) => {
            crate::approx::approx_rates(scheme, model, eta_i, eta_a, eta_d, xi).p_f
        }
        (Scheme::Enhanced, DetectorModel::Bd) => {
            let p111 = eta_a.powi(2)
                * eta_i
                * (1.0 - eta_i)
                * (2.0 - 2.0 / nf + 3.0 / (4.0 * nf * nf));
            (2.0 / 3.0)
                * (8.0 * nf - 3.0)
                * eta_d.powi(3)
                * xi
                * (1.0 - xi).powi(8 * n as i32 - 1)
                * p111
        }
        (Scheme::Enhanced, DetectorModel::SlowBd) => {
            let p111 = eta_a.powi(2)
                * eta_i
                * (1.0 - eta_i)
                * (2.0 - 5.0 / (2.0 * nf) + 1.0 / (nf * nf));
            (3.0 / 4.0)
                * (8.0 * nf - 6.0)
                * eta_d.powi(3)
                * xi
                * (1.0 - xi).powi(8 * n as i32 - 1)
                * p111
        }
        (Scheme::Enhanced, _) => {
            crate::approx::approx_rates(scheme, model, eta_i, eta_a, eta_d, xi).p_f
        }
    }
}

/// Default ceiling on the detected-mode Hilbert dimension for exact array
/// simulation; the enhanced scheme at `N = 8` (dimension 814385 with loss)
/// sits above it.
pub const DEFAULT_DIM_CEILING: u128 = 600_000;

/// Full splitter-tree simulation of an array configuration: the plan is
/// rebuilt on the expanded outcome space and every Bell input is propagated
/// exactly.
pub fn exact_array_simulate(
    scheme: Scheme,
    model: DetectorModel,
    n: u64,
    params: &LossParams,
    dim_ceiling: Option<u128>,
) -> Result<Metrics> {
    exact_array_simulate_with_budget(scheme, model, n, params, dim_ceiling, None)
}

/// [`exact_array_simulate`] with an explicit dark-count enumeration budget.
/// `DarkBudget::AtMost(1)` reproduces the first-order dark-count convention
/// used for the reference array figures.
pub fn exact_array_simulate_with_budget(
    scheme: Scheme,
    model: DetectorModel,
    n: u64,
    params: &LossParams,
    dim_ceiling: Option<u128>,
    dark: Option<DarkBudget>,
) -> Result<Metrics> {
    let spec = SchemeSpec::reproduction_default(scheme, model).with_array(n as usize);
    let registry = spec.registry();
    let modes = registry.detected_count();
    let photons = spec.expected_total(Auxiliary::PhiPlus);
    let dim = hilbert_dim_up_to(modes as u64, photons as u64)?;
    let limit = dim_ceiling.unwrap_or(DEFAULT_DIM_CEILING);
    if dim > limit {
        return Err(CoreError::ResourceCeiling { dim, modes, photons, limit });
    }
    let plan = build_plan(&spec, Auxiliary::PhiPlus)?;
    crate::analyzer::evaluate_with_options(&spec, &plan, Auxiliary::PhiPlus, params, dark)
}
