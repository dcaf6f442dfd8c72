use nefkit_core::continuous::{ig_rf_with, IgCandidate};
use nefkit_core::discrete::rho_via_generator;
use nefkit_core::family::Family;
use nefkit_core::latent::{run_replicate, summarize, ExperimentConfig, ExperimentResult};
use nefkit_core::residue::{scan_cell, ScanRow};
use nefkit_core::rf::ReductionFunction;
use nefkit_core::validate::validate_family;
use nefkit_core::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cli::{
    CoeffsArgs, Command, ConjectureArgs, IgFormula, RfTableArgs, SimulateArgs, ValidateArgs, XGrid,
};
use crate::config::{parse_list, parse_seeds, SimulateConfig};
use crate::output::{fmt_f64, with_sink, write_json, Cell, Table};
use crate::{thread_pool, CliError};

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::RfTable(a) => rf_table(a),
        Command::Coeffs(a) => coeffs(a),
        Command::Validate(a) => validate(a),
        Command::Conjecture(a) => conjecture(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn shipped_rf(family: Family, formula: IgFormula) -> Result<ReductionFunction, CliError> {
    match (family, formula) {
        (Family::InverseGaussian, IgFormula::Corrected) => Ok(ig_rf_with(IgCandidate::Corrected)?),
        (Family::InverseGaussian, IgFormula::Printed) => Ok(ig_rf_with(IgCandidate::Printed)?),
        (_, IgFormula::Printed) => Err(CliError::Usage("--formula applies to inverse-gaussian only".into())),
        (f, IgFormula::Corrected) => Ok(f.reduction_function()?),
    }
}

fn eval_rf(rf: &ReductionFunction, x: f64) -> Option<f64> {
    if x == 0.0 {
        if let Some(v) = rf.value_at_zero_atom() {
            return Some(v);
        }
    }
    rf.eval(x)
}

pub fn rf_table(a: RfTableArgs) -> Result<(), CliError> {
    let family = a.family;
    let rf = shipped_rf(family, a.formula)?;
    let table = if family.is_discrete() {
        if a.x_grid.is_some() {
            return Err(CliError::Usage(format!("{family} lives on ℕ; use --n-max")));
        }
        let mut n_max = a.n_max.unwrap_or(20);
        if let Family::Binomial(m) = family {
            n_max = n_max.min(m as usize);
        }
        discrete_table(family, &rf, n_max)?
    } else {
        if a.n_max.is_some() {
            return Err(CliError::Usage(format!("{family} is continuous; use --x-grid")));
        }
        let grid = a.x_grid.unwrap_or(match family {
            Family::Normal | Family::Ghs(_) => XGrid { lo: -5.0, hi: 5.0, count: 101 },
            _ => XGrid { lo: 0.0, hi: 10.0, count: 101 },
        });
        let mut t = Table::new(["x", "phi"]);
        for x in grid.points() {
            t.push(vec![x.into(), eval_rf(&rf, x).into()]);
        }
        t
    };
    with_sink(a.out.output.as_deref(), |w| table.write(a.out.format, w))?;
    Ok(())
}

/// `φ` plus the pipeline columns when the family is infinitely divisible.
fn discrete_table(family: Family, rf: &ReductionFunction, n_max: usize) -> Result<Table, CliError> {
    let pipeline = match family.pipeline(n_max) {
        Ok(p) => Some(p),
        Err(Error::NotInfinitelyDivisible { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mut t = match pipeline {
        Some(_) => Table::new(["x", "phi", "beta", "c", "rho", "alpha"]),
        None => Table::new(["x", "phi"]),
    };
    for n in 0..=n_max {
        let mut row: Vec<Cell> = vec![n.into()];
        match &pipeline {
            Some(p) => {
                // the shipped atom table may be shorter than n_max
                let phi = rf.eval(n as f64).or_else(|| (p.beta[n] > 0.0).then(|| p.alpha[n] / p.beta[n]));
                row.extend([phi.into(), p.beta[n].into(), p.c[n].into(), p.rho[n].into(), p.alpha[n].into()]);
            }
            None => row.push(rf.eval(n as f64).into()),
        }
        t.push(row);
    }
    Ok(t)
}

pub fn coeffs(a: CoeffsArgs) -> Result<(), CliError> {
    let family = a.family;
    if !family.is_discrete() {
        return Err(CliError::Usage(format!("{family} is not a family on ℕ")));
    }
    let order = a.order as usize;
    let p = family.pipeline(order)?;
    let via_generator = match family.lagrange_generator(order + 2) {
        Some(g) => Some(rho_via_generator(&g, order)?),
        None => None,
    };
    let mut header = vec!["n", "beta", "c", "rho", "alpha", "phi"];
    if via_generator.is_some() {
        header.push("rho_generator");
    }
    let mut t = Table::new(header);
    for n in 0..=order {
        let phi = (p.beta[n] > 0.0).then(|| p.alpha[n] / p.beta[n]);
        let mut row: Vec<Cell> =
            vec![n.into(), p.beta[n].into(), p.c[n].into(), p.rho[n].into(), p.alpha[n].into(), phi.into()];
        if let Some(g) = &via_generator {
            row.push(g[n].into());
        }
        t.push(row);
    }
    with_sink(a.out.output.as_deref(), |w| t.write(a.out.format, w))?;
    Ok(())
}

pub fn validate(a: ValidateArgs) -> Result<(), CliError> {
    if let Some(tol) = a.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
        }
    }
    let families = if a.all { Family::defaults() } else { a.family.clone() };
    let pool = thread_pool()?;
    let results: Vec<_> = pool.install(|| families.par_iter().map(|&f| validate_family(f, a.tol)).collect());

    let mut entries = Vec::with_capacity(results.len());
    let mut all_passed = true;
    let mut formula_invalid = None;
    for (family, res) in families.iter().zip(&results) {
        match res {
            Ok(v) => {
                all_passed &= v.passed;
                eprintln!(
                    "{} {}: master {:e} (tol {:e}), vf {:e} (tol {:e}), invariants {}",
                    if v.passed { "PASS" } else { "FAIL" },
                    v.family,
                    v.master.max_rel_err,
                    v.master.tolerance,
                    v.vf.max_deviation,
                    v.vf.tolerance,
                    if v.invariants.passed { "ok" } else { "violated" },
                );
                for p in v.master.probes.iter().filter(|p| !(p.rel_err <= v.master.tolerance)) {
                    eprintln!(
                        "    theta {}: E[phi] {} vs kappa'' {} (rel err {:e})",
                        fmt_f64(p.theta),
                        fmt_f64(p.computed),
                        fmt_f64(p.target),
                        p.rel_err
                    );
                }
                for c in v.formulas.iter().filter(|c| !c.passed) {
                    eprintln!("    rejected candidate {}: max rel err {:e}", c.name, c.max_rel_err);
                }
                entries.push(serde_json::to_value(v).map_err(|e| CliError::Failed(e.to_string()))?);
            }
            Err(e) => {
                all_passed = false;
                if matches!(e, Error::FormulaInvalid { .. }) && formula_invalid.is_none() {
                    formula_invalid = Some(e.clone());
                }
                eprintln!("FAIL {family}: {e}");
                entries.push(json!({ "family": family.name(), "error": e.to_string(), "passed": false }));
            }
        }
    }
    let report = json!({ "tolerance_override": a.tol, "passed": all_passed, "families": entries });
    with_sink(a.output.as_deref(), |w| write_json(&report, w))?;
    if let Some(e) = formula_invalid {
        return Err(e.into());
    }
    if !all_passed {
        return Err(CliError::Failed("validation failed".into()));
    }
    Ok(())
}

pub fn scan_table(rows: &[ScanRow]) -> Table {
    let mut t = Table::new([
        "n", "u1_re", "u1_im", "tau_re", "tau_im", "contour_re", "d", "method_gap", "im_rel_err", "sign_ok",
        "vf_impossible", "verdict",
    ]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.u1_re.into(),
            r.u1_im.into(),
            r.tau_re.into(),
            r.tau_im.into(),
            r.contour_re.into(),
            r.d.into(),
            r.method_gap.into(),
            r.im_rel_err.into(),
            r.sign_ok.into(),
            r.vf_impossible.into(),
            r.violation.clone().unwrap_or_else(|| "ok".into()).into(),
        ]);
    }
    t
}

pub fn conjecture(a: ConjectureArgs) -> Result<(), CliError> {
    if a.grid.0.is_empty() {
        return Err(CliError::Usage("empty pole grid".into()));
    }
    let cells: Vec<_> = (1..=a.n_max).flat_map(|n| a.grid.0.iter().map(move |&u| (n, u))).collect();
    let pool = thread_pool()?;
    let rows = pool.install(|| cells.par_iter().map(|&(n, u)| scan_cell(n, u)).collect::<Result<Vec<_>, _>>())?;
    with_sink(a.out.output.as_deref(), |w| scan_table(&rows).write(a.out.format, w))?;

    let violations: Vec<&ScanRow> = rows.iter().filter(|r| r.violation.is_some()).collect();
    let worst_gap = rows.iter().map(|r| r.method_gap).fold(0.0, f64::max);
    let worst_im = rows.iter().map(|r| r.im_rel_err).fold(0.0, f64::max);
    eprintln!(
        "{} cells (n <= {}): {} violations; worst series/contour gap {worst_gap:e}; worst Im tau error {worst_im:e}",
        rows.len(),
        a.n_max,
        violations.len()
    );
    for r in &violations {
        eprintln!("    n = {}, u1 = {}{:+}i: {}", r.n, r.u1_re, r.u1_im, r.violation.as_deref().unwrap_or(""));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} violations", violations.len())))
    }
}

fn resolve_simulate(a: &SimulateArgs) -> Result<(ExperimentConfig, SimulateConfig), CliError> {
    let file = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            SimulateConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SimulateConfig::default(),
    };
    let flags = SimulateConfig {
        family: a.family,
        ks: a.ks.as_deref().map(parse_list).transpose().map_err(CliError::Usage)?,
        n: a.n,
        r: a.r,
        seeds: a.seeds.as_deref().map(parse_seeds).transpose().map_err(CliError::Usage)?,
        output: a.output.clone(),
        summary: a.summary.clone(),
    };
    let merged = file.overlay(flags);
    let d = ExperimentConfig::poisson_default();
    let config = ExperimentConfig {
        family: merged.family.unwrap_or(d.family),
        ks: merged.ks.clone().unwrap_or(d.ks),
        n: merged.n.unwrap_or(d.n),
        r: merged.r.unwrap_or(d.r),
        seeds: merged.seeds.clone().unwrap_or(d.seeds),
    };
    config.validate()?;
    Ok((config, merged))
}

/// Canonical `(k, seed)` order, computed in parallel.
pub fn run_ladder(config: &ExperimentConfig) -> Result<Vec<ExperimentResult>, CliError> {
    config.validate()?;
    let nef = config.family.nef()?;
    let rf = config.family.reduction_function()?;
    let jobs: Vec<(usize, u64)> =
        config.ks.iter().flat_map(|&k| config.seeds.iter().map(move |&s| (k, s))).collect();
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(k, seed)| run_replicate(config.family, &nef, &rf, k, config.n, config.r, seed))
            .collect::<Result<Vec<_>, _>>()
    })?)
}

pub fn simulation_summary(config: &ExperimentConfig, results: &[ExperimentResult]) -> Value {
    let ladder = summarize(results);
    let decreasing = ladder.windows(2).all(|w| w[1].median_distance < w[0].median_distance);
    let mut summary = json!({
        "family": config.family.name(),
        "n": config.n,
        "r": config.r,
        "ks": config.ks,
        "replicates_per_k": config.seeds.len(),
        "ladder": ladder,
        "median_distance_strictly_decreasing": decreasing,
    });
    if config.family == Family::Normal {
        summary["note"] = Value::from(
            "normal family: the variance matrix is the identity, so the adjustment shifts every eigenvalue \
             of the Gram matrix equally and leaves the estimated subspace unchanged",
        );
    }
    summary
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let (config, paths) = resolve_simulate(&a)?;
    let results = run_ladder(&config)?;
    let mut t = Table::new(["replicate", "k", "distance", "distance_unadjusted", "max_sigma_error"]);
    for r in &results {
        t.push(vec![r.seed.into(), r.k.into(), r.distance.into(), r.distance_unadjusted.into(), r.max_dk_error.into()]);
    }
    with_sink(paths.output.as_deref(), |w| t.write_csv(w))?;
    let summary = simulation_summary(&config, &results);
    match paths.summary.as_deref() {
        Some(p) => with_sink(Some(p), |w| write_json(&summary, w))?,
        None => write_json(&summary, std::io::stderr().lock())?,
    }
    Ok(())
}
