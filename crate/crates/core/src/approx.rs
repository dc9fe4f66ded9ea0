//! Zero-order closed-form approximations for success rates, false-positive
//! rates, and fidelity, plus the crossover thresholds between the two
//! schemes.
//!
//! True positives are dominated by runs where every photon arrives and every
//! detector works: `p_t ~ eta_d^2 eta_i^2 (1-xi)^4 p_max` for the standard
//! scheme and `p_t ~ eta_d^4 eta_a^2 eta_i^2 (1-xi)^8 p_max` for the
//! enhanced scheme. In the regime `xi << eta_i << eta_d, eta_a`, false
//! positives are dominated by losing one input photon and gaining one dark
//! count, giving `p_f ~ C1 eta_d eta_i (1-eta_i) xi (1-xi)^3` and
//! `p_f ~ C2 eta_a^2 eta_d^3 eta_i (1-eta_i) xi (1-xi)^7` with
//! model-dependent prefactors.

use num_rational::Ratio;

use crate::amp::{ExactProb, Prob};
use crate::analyzer::Scheme;
use crate::detection::DetectorModel;
use crate::error::{CoreError, Result};

/// Closed-form rate structure for one scheme and detector model.
#[derive(Clone, Debug)]
pub struct RateFormula {
    pub scheme: Scheme,
    pub model: DetectorModel,
    /// Loss-robust maximum success rate (count filter applied for slow
    /// number-resolving detectors).
    pub p_t_max: ExactProb,
    /// False-positive prefactor (C1 for standard, C2 for enhanced).
    pub prefactor: ExactProb,
    /// Exponents (eta_d, eta_a, eta_i, 1-xi) in the p_t product form.
    pub pt_exponents: (i32, i32, i32, i32),
    /// Exponents (eta_d, eta_a, eta_i(1-eta_i), 1-xi) in the p_f form.
    pub pf_exponents: (i32, i32, i32, i32),
}

/// The certified constants for a scheme/model pair.
pub fn rate_formula(scheme: Scheme, model: DetectorModel) -> RateFormula {
    use DetectorModel::*;
    let (p_t_max, prefactor) = match scheme {
        Scheme::Standard => match model {
            Pnrd => (Ratio::new(1, 2), Ratio::new(4, 1)),
            Bd => (Ratio::new(1, 2), Ratio::new(4, 1)),
            SlowPnrd => (Ratio::new(1, 4), Ratio::new(2, 1)),
            SlowBd => (Ratio::new(1, 4), Ratio::new(2, 1)),
        },
        Scheme::Enhanced => match model {
            Pnrd => (Ratio::new(3, 4), Ratio::new(10, 1)),
            Bd => (Ratio::new(3, 16), Ratio::new(5, 2)),
            SlowPnrd => (Ratio::new(9, 32), Ratio::new(8, 3)),
            SlowBd => (Ratio::new(1, 16), Ratio::new(3, 4)),
        },
    };
    let (pt_exponents, pf_exponents) = match scheme {
        Scheme::Standard => ((2, 0, 2, 4), (1, 0, 1, 3)),
        Scheme::Enhanced => ((4, 2, 2, 8), (3, 2, 1, 7)),
    };
    RateFormula { scheme, model, p_t_max, prefactor, pt_exponents, pf_exponents }
}

/// Approximate rates at the given parameters.
#[derive(Clone, Copy, Debug)]
pub struct ApproxRates {
    pub p_t: f64,
    pub p_f: f64,
    pub fidelity: Option<f64>,
}

/// Evaluates the closed-form approximation.
pub fn approx_rates(
    scheme: Scheme,
    model: DetectorModel,
    eta_i: f64,
    eta_a: f64,
    eta_d: f64,
    xi: f64,
) -> ApproxRates {
    let f = rate_formula(scheme, model);
    let (d_t, a_t, i_t, x_t) = f.pt_exponents;
    let p_t = f.p_t_max.to_f64()
        * eta_d.powi(d_t)
        * eta_a.powi(a_t)
        * eta_i.powi(i_t)
        * (1.0 - xi).powi(x_t);
    let (d_f, a_f, _, x_f) = f.pf_exponents;
    let p_f = f.prefactor.to_f64()
        * eta_d.powi(d_f)
        * eta_a.powi(a_f)
        * eta_i
        * (1.0 - eta_i)
        * xi
        * (1.0 - xi).powi(x_f);
    let total = p_t + p_f;
    ApproxRates { p_t, p_f, fidelity: (total > 0.0).then(|| p_t / total) }
}

/// Threshold on `eta_d * eta_a` above which the enhanced scheme beats the
/// standard scheme in the closed-form approximation; `None` for binary
/// detector models, which never gain.
pub fn crossover(model: DetectorModel) -> Option<f64> {
    match model {
        // (3/4) x^2 = 1/2  =>  x = sqrt(2/3)
        DetectorModel::Pnrd => Some((2.0f64 / 3.0).sqrt()),
        // (9/32) x^2 = 1/4  =>  x = 2 sqrt(2) / 3
        DetectorModel::SlowPnrd => Some(2.0 * 2.0f64.sqrt() / 3.0),
        DetectorModel::Bd | DetectorModel::SlowBd => None,
    }
}

/// One grid point of the approximation-vs-exact comparison.
#[derive(Clone, Copy, Debug)]
pub struct DeviationRow {
    pub scheme: Scheme,
    pub model: DetectorModel,
    pub eta_d: f64,
    pub eta_a: f64,
    pub p_t_exact: f64,
    pub p_t_approx: f64,
    pub fidelity_exact: f64,
    pub fidelity_approx: f64,
    /// |approx - exact| / exact for p_t.
    pub p_t_deviation: f64,
    /// |approx - exact| / exact for fidelity.
    pub fidelity_deviation: f64,
}

/// Compares the closed forms against the exact evaluator over a grid of
/// detector and auxiliary transmissions.
pub fn approx_vs_exact_report(
    eta_d_grid: &[f64],
    eta_a_grid: &[f64],
    eta_i: f64,
    xi: f64,
) -> Result<Vec<DeviationRow>> {
    use crate::analyzer::{build_plan, evaluate, Auxiliary, LossParams, SchemeSpec};
    let mut rows = Vec::new();
    for scheme in [Scheme::Standard, Scheme::Enhanced] {
        for model in DetectorModel::ALL {
            let spec = SchemeSpec::reproduction_default(scheme, model);
            let plan = build_plan(&spec, Auxiliary::PhiPlus)?;
            for &eta_a in eta_a_grid {
                if scheme == Scheme::Standard && eta_a != eta_a_grid[0] {
                    continue; // eta_a has no effect on the standard scheme
                }
                for &eta_d in eta_d_grid {
                    let params = LossParams::new(eta_i, eta_a, eta_d, xi)?;
                    let exact = evaluate(&spec, &plan, &params)?;
                    let approx = approx_rates(scheme, model, eta_i, eta_a, eta_d, xi);
                    let fid_exact = exact.fidelity.ok_or_else(|| {
                        CoreError::Invalid("exact evaluation accepted nothing".into())
                    })?;
                    let fid_approx = approx.fidelity.unwrap_or(f64::NAN);
                    rows.push(DeviationRow {
                        scheme,
                        model,
                        eta_d,
                        eta_a,
                        p_t_exact: exact.p_t,
                        p_t_approx: approx.p_t,
                        fidelity_exact: fid_exact,
                        fidelity_approx: fid_approx,
                        p_t_deviation: (approx.p_t - exact.p_t).abs() / exact.p_t,
                        fidelity_deviation: (fid_approx - fid_exact).abs() / fid_exact,
                    });
                }
            }
        }
    }
    Ok(rows)
}
