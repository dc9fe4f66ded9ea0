//! The five benchmark scenarios, each emitting one or two CSV files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use bsa_core::analyzer::{
    build_plan, evaluate, max_success_rate, Auxiliary, LossParams, Scheme, SchemeSpec,
};
use bsa_core::approx::{approx_rates, approx_vs_exact_report};
use bsa_core::arrays::{array_false_positive, array_rate, array_rate_lossy, exact_array_simulate};
use bsa_core::amp::Prob;
use bsa_core::detection::DetectorModel;
use bsa_core::spdc;

use crate::config::{parse_model, Mode, RunConfig, SweepSection};
use crate::output::{fmt_f64, fmt_opt, CsvWriter};

/// Maximum success rates with unity fidelity: eight scheme/model pairs plus
/// the two count-filtered slow number-resolving variants, as exact rationals.
pub fn run_table1(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut w = CsvWriter::create(
        dir,
        "table1.csv",
        "scenario=table1",
        &["scheme", "model", "filter", "p_t_max_num", "p_t_max_den", "p_t_max"],
    );
    let mut rows: Vec<(Scheme, DetectorModel, bool)> = Vec::new();
    for scheme in [Scheme::Standard, Scheme::Enhanced] {
        for model in DetectorModel::ALL {
            rows.push((scheme, model, false));
        }
    }
    rows.push((Scheme::Standard, DetectorModel::SlowPnrd, true));
    rows.push((Scheme::Enhanced, DetectorModel::SlowPnrd, true));
    for (scheme, model, filter) in rows {
        let spec = SchemeSpec::new(scheme, model).with_count_filter(filter);
        let rate = max_success_rate(&spec, Auxiliary::PhiPlus)?;
        w.row(&[
            scheme.to_string(),
            model.to_string(),
            if filter { "count-preserving".into() } else { "none".into() },
            rate.numer().to_string(),
            rate.denom().to_string(),
            fmt_f64(rate.to_f64()),
        ]);
    }
    Ok(vec![w.finish()?])
}

/// Detector-efficiency sweep: exact and closed-form curves per model and
/// auxiliary transmission, success rates scaled by 1/eta_i^2.
pub fn run_sweep(dir: &Path, cfg: &SweepSection, mode: Mode) -> anyhow::Result<Vec<PathBuf>> {
    let echo = format!(
        "scenario=sweep eta_i={} xi={} eta_d=[{},{}]x{} eta_a={:?} models={:?} mode={mode:?}",
        cfg.eta_i, cfg.xi, cfg.eta_d_min, cfg.eta_d_max, cfg.eta_d_steps, cfg.eta_a, cfg.models
    );
    let mut w = CsvWriter::create(
        dir,
        "sweep.csv",
        &echo,
        &[
            "model",
            "eta_a",
            "eta_d",
            "std_pt_scaled_exact",
            "std_fidelity_exact",
            "enh_pt_scaled_exact",
            "enh_fidelity_exact",
            "std_pt_scaled_approx",
            "std_fidelity_approx",
            "enh_pt_scaled_approx",
            "enh_fidelity_approx",
        ],
    );
    let scale = cfg.eta_i * cfg.eta_i;
    for model_name in &cfg.models {
        let model = parse_model(model_name)?;
        let plans: Vec<_> = [Scheme::Standard, Scheme::Enhanced]
            .iter()
            .map(|&s| {
                let spec = SchemeSpec::reproduction_default(s, model);
                build_plan(&spec, Auxiliary::PhiPlus).map(|p| (spec, p))
            })
            .collect::<Result<_, _>>()?;
        for &eta_a in &cfg.eta_a {
            let grid = cfg.eta_d_grid();
            let rows: Vec<anyhow::Result<Vec<String>>> = grid
                .par_iter()
                .map(|&eta_d| {
                    let params = LossParams::new(cfg.eta_i, eta_a, eta_d, cfg.xi)?;
                    let mut cells = vec![model.to_string(), fmt_f64(eta_a), fmt_f64(eta_d)];
                    if mode != Mode::Approx {
                        for (spec, plan) in &plans {
                            let m = evaluate(spec, plan, &params)?;
                            cells.push(fmt_f64(m.p_t / scale));
                            cells.push(fmt_opt(m.fidelity));
                        }
                    } else {
                        cells.extend(std::iter::repeat_n(String::new(), 4));
                    }
                    if mode != Mode::Exact {
                        for scheme in [Scheme::Standard, Scheme::Enhanced] {
                            let a = approx_rates(scheme, model, cfg.eta_i, eta_a, eta_d, cfg.xi);
                            cells.push(fmt_f64(a.p_t / scale));
                            cells.push(fmt_opt(a.fidelity));
                        }
                    } else {
                        cells.extend(std::iter::repeat_n(String::new(), 4));
                    }
                    Ok(cells)
                })
                .collect();
            for r in rows {
                w.row(&r?);
            }
        }
    }
    Ok(vec![w.finish()?])
}

/// Detector arrays: closed-form curves for every requested size plus exact
/// splitter-tree points where the Hilbert space stays tractable.
pub fn run_arrays(
    dir: &Path,
    cfg: &crate::config::ArraysSection,
    mode: Mode,
) -> anyhow::Result<Vec<PathBuf>> {
    let echo = format!(
        "scenario=arrays n={:?} eta_i={} eta_d={} eta_a={} xi={:?} models={:?} mode={mode:?}",
        cfg.n_values, cfg.eta_i, cfg.eta_d, cfg.eta_a, cfg.xi, cfg.models
    );
    let mut w = CsvWriter::create(
        dir,
        "arrays.csv",
        &echo,
        &[
            "scheme",
            "model",
            "xi",
            "n",
            "pt_ideal_num",
            "pt_ideal_den",
            "pt_lossy_approx",
            "pf_approx",
            "fidelity_approx",
            "pt_exact",
            "pf_exact",
            "fidelity_exact",
        ],
    );
    for model_name in &cfg.models {
        let model = parse_model(model_name)?;
        for scheme in [Scheme::Standard, Scheme::Enhanced] {
            for &xi in &cfg.xi {
                for &n in &cfg.n_values {
                    let params = LossParams::new(cfg.eta_i, cfg.eta_a, cfg.eta_d, xi)?;
                    let ideal = array_rate(scheme, model, n)?;
                    let (mut approx_cells, mut exact_cells) =
                        (vec![String::new(); 3], vec![String::new(); 3]);
                    if mode != Mode::Exact {
                        let pt = array_rate_lossy(scheme, model, n, &params)?;
                        let pf = array_false_positive(scheme, model, n, &params);
                        approx_cells = vec![
                            fmt_f64(pt),
                            fmt_f64(pf),
                            fmt_f64(pt / (pt + pf)),
                        ];
                    }
                    let exact_limit = match scheme {
                        Scheme::Standard => cfg.exact_max_standard,
                        Scheme::Enhanced => cfg.exact_max_enhanced,
                    };
                    if mode != Mode::Approx && n <= exact_limit {
                        let m = exact_array_simulate(scheme, model, n, &params, None)?;
                        exact_cells =
                            vec![fmt_f64(m.p_t), fmt_f64(m.p_f), fmt_opt(m.fidelity)];
                    }
                    let mut cells = vec![
                        scheme.to_string(),
                        model.to_string(),
                        fmt_f64(xi),
                        n.to_string(),
                        ideal.numer().to_string(),
                        ideal.denom().to_string(),
                    ];
                    cells.extend(approx_cells);
                    cells.extend(exact_cells);
                    w.row(&cells);
                }
            }
        }
    }
    Ok(vec![w.finish()?])
}

/// Down-conversion auxiliary source: per-pair-number rates at a reference
/// interaction parameter and the weighted curves over the tau grid.
pub fn run_spdc(
    dir: &Path,
    cfg: &crate::config::SpdcSection,
) -> anyhow::Result<Vec<PathBuf>> {
    let echo = format!(
        "scenario=spdc n_max={} tau=[{},{}]x{} tau_ref={} models={:?} allow_truncation={}",
        cfg.n_max, cfg.tau_min, cfg.tau_max, cfg.tau_steps, cfg.tau_ref, cfg.models,
        cfg.allow_truncation
    );
    let mut per_n = CsvWriter::create(
        dir,
        "spdc_per_n.csv",
        &echo,
        &["model", "n", "weight_at_tau_ref", "p_t", "p_f", "fidelity"],
    );
    let mut curve = CsvWriter::create(
        dir,
        "spdc_tau.csv",
        &echo,
        &["model", "tau", "p_t", "p_f", "fidelity", "tail_weight"],
    );
    for model_name in &cfg.models {
        let model = parse_model(model_name)?;
        let tables = spdc::build_tables(model, cfg.n_max)?;
        let ref_metrics = spdc::evaluate_ideal(&tables, cfg.tau_ref, cfg.allow_truncation)?;
        for pm in &ref_metrics.per_n {
            let total = pm.p_t + pm.p_f;
            per_n.row(&[
                model.to_string(),
                pm.n.to_string(),
                fmt_f64(pm.weight),
                fmt_f64(pm.p_t),
                fmt_f64(pm.p_f),
                fmt_opt((total > 0.0).then(|| pm.p_t / total)),
            ]);
        }
        let grid = cfg.tau_grid();
        let rows: Vec<anyhow::Result<Vec<String>>> = grid
            .par_iter()
            .map(|&tau| {
                let m = spdc::evaluate_ideal(&tables, tau, cfg.allow_truncation)?;
                Ok(vec![
                    model.to_string(),
                    fmt_f64(tau),
                    fmt_f64(m.p_t),
                    fmt_f64(m.p_f),
                    fmt_opt(m.fidelity),
                    fmt_f64(m.tail_weight),
                ])
            })
            .collect();
        for r in rows {
            curve.row(&r?);
        }
    }
    Ok(vec![per_n.finish()?, curve.finish()?])
}

/// Approximation-vs-exact deviation report.
pub fn run_validate(
    dir: &Path,
    cfg: &crate::config::ValidateSection,
) -> anyhow::Result<Vec<PathBuf>> {
    let echo = format!(
        "scenario=validate eta_d={:?} eta_a={:?} eta_i={} xi={}",
        cfg.eta_d, cfg.eta_a, cfg.eta_i, cfg.xi
    );
    let mut w = CsvWriter::create(
        dir,
        "validate.csv",
        &echo,
        &[
            "scheme",
            "model",
            "eta_d",
            "eta_a",
            "p_t_exact",
            "p_t_approx",
            "fidelity_exact",
            "fidelity_approx",
            "p_t_rel_deviation",
            "fidelity_rel_deviation",
        ],
    );
    let rows = approx_vs_exact_report(&cfg.eta_d, &cfg.eta_a, cfg.eta_i, cfg.xi)?;
    for r in rows {
        w.row(&[
            r.scheme.to_string(),
            r.model.to_string(),
            fmt_f64(r.eta_d),
            fmt_f64(r.eta_a),
            fmt_f64(r.p_t_exact),
            fmt_f64(r.p_t_approx),
            fmt_f64(r.fidelity_exact),
            fmt_f64(r.fidelity_approx),
            fmt_f64(r.p_t_deviation),
            fmt_f64(r.fidelity_deviation),
        ]);
    }
    Ok(vec![w.finish()?])
}

/// Dispatch used by `main`.
pub fn run_scenario(
    scenario: &str,
    dir: &Path,
    cfg: &RunConfig,
    mode: Mode,
) -> anyhow::Result<Vec<PathBuf>> {
    match scenario {
        "table1" => run_table1(dir),
        "sweep" => run_sweep(dir, &cfg.sweep.clone().unwrap_or_default(), mode),
        "arrays" => run_arrays(dir, &cfg.arrays.clone().unwrap_or_default(), mode),
        "spdc" => run_spdc(dir, &cfg.spdc.clone().unwrap_or_default()),
        "validate" => run_validate(dir, &cfg.validate.clone().unwrap_or_default()),
        other => anyhow::bail!("unknown scenario '{other}'"),
    }
}
