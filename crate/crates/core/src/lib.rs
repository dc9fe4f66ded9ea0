//! Exact simulation and closed-form analytics for linear-optical Bell-state
//! analyzers under realistic imperfections.
//!
//! The crate models two analyzer layouts — the single-beam-splitter standard
//! scheme and the auxiliary-pair enhanced scheme — and quantifies their true
//! success rate `p_t`, false-positive rate `p_f`, and discrimination fidelity
//! `p_t / (p_t + p_f)` under input photon loss, auxiliary photon loss,
//! detector inefficiency, dark counts, four detector models (number-resolving
//! and binary, each with a fast and a dead-time-limited variant), multiplexed
//! detector arrays, and down-conversion auxiliary sources.
//!
//! Module map:
//! * [`fock`], [`state`], [`sources`], [`amp`], [`comb`] — occupation-number
//!   basis, sparse pure states over two interchangeable scalar types (complex
//!   doubles and exact dyadic Gaussian rationals), source constructors, and
//!   integer combinatorics.
//! * [`optics`] — beam splitters, the four-mode enhanced network, loss
//!   couplings, array splitters, and creation-operator substitution.
//! * [`detection`] — detector models, outcome patterns, dark-count handling,
//!   and conditional probability tables.
//! * [`analyzer`] — scheme assembly, post-selection plans, and exact metric
//!   evaluation.
//! * [`spdc`] — the enhanced scheme fed by a parametric pair source.
//! * [`arrays`] — category-flow analytics for detector arrays.
//! * [`approx`] — closed-form approximations and crossover thresholds.

pub mod amp;
pub mod analyzer;
pub mod approx;
pub mod arrays;
pub mod comb;
pub mod detection;
pub mod error;
pub mod fock;
pub mod optics;
pub mod sources;
pub mod spdc;
pub mod state;

pub use amp::{Amp, Cf64, ExactAmp, ExactProb, Prob};
pub use analyzer::{
    build_plan, evaluate, max_success_rate, Auxiliary, LossParams, Metrics, PostSelectionPlan,
    Scheme, SchemeSpec,
};
pub use detection::{DetectorModel, OutcomePattern};
pub use error::{CoreError, Result};
pub use fock::{FockState, LossMode, LossOrigin, ModeRegistry};
pub use sources::{make_source_state, make_source_state_normalized, BellState, SourceKind, SourceSpec};
pub use state::PureState;
