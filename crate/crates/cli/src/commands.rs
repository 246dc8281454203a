use std::io::Write;
use std::path::Path;

use alp_core::enforcement::{
    check_necessary, check_sufficient, full_enforcement_price, p_star_enforcement, regime_scan, uniform_grid,
    MIN_GAMMA_DOT,
};
use alp_core::optimizer::{audit_threshold, optimal_output};
use alp_core::profit::harmed_country;
use alp_core::sensitivity::{finite_differences, report};
use alp_core::{optimal_price, Error, Optimum, Param, Regime};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::format::Precision;
use crate::scenario::{check_sweep, ScenarioFile, SweepSpec};
use crate::Failure;

/// Exit status when the optimum leaves the fuzzy support.
pub const EXIT_ESCAPED: u8 = 2;
/// Exit status when an analytic derivative disagrees with its estimate.
pub const EXIT_CROSS_CHECK: u8 = 3;

const CROSS_CHECK_LIMIT: f64 = 1e-4;

pub struct Output {
    pub text: String,
    pub code: u8,
}

fn domain(e: Error) -> Failure {
    match e {
        Error::NoIncentive(_) => Failure::validation(format!("tau1, tau2: {e}")),
        Error::SideMismatch { .. } => Failure::validation(format!("arms_length.side: {e}")),
        e => Failure::validation(e.to_string()),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn solve(file: &ScenarioFile, prec: Precision) -> Result<Output, Failure> {
    let s = &file.scenario;
    let h = harmed_country(s).map_err(domain)?;
    let opt = optimal_price(s).map_err(domain)?;
    let lambda_min = match audit_threshold(s) {
        Ok(l) => prec.num(l),
        Err(Error::InfeasiblePenalty(_)) => Value::Null,
        Err(e) => return Err(domain(e)),
    };
    let output_stage = match opt.regime {
        Regime::Interior => match optimal_output(s, &opt) {
            Ok(o) => json!({
                "m_star": prec.num(o.m_star),
                "binding": o.binding,
                "multiplier": prec.num(o.multiplier),
            }),
            Err(Error::NoRoot { .. }) => Value::Null,
            Err(e) => return Err(domain(e)),
        },
        Regime::Escaped => Value::Null,
    };
    let v = json!({
        "case": h.diagnosis.name(),
        "harmed_country": h.diagnosis.harmed_country(),
        "side": s.alp().side().name(),
        "regime": opt.regime.name(),
        "p_star": prec.opt(opt.p_star),
        "delta_p": prec.opt(opt.delta_p),
        "alpha": prec.opt(opt.alpha),
        "gain": prec.opt(opt.gain),
        "share": prec.opt(opt.delta_p.map(|_| opt.share)),
        "lambda_min": lambda_min,
        "crisp_slope": prec.opt(opt.crisp_slope),
        "output_stage": output_stage,
    });
    let code = if opt.regime == Regime::Escaped { EXIT_ESCAPED } else { 0 };
    Ok(Output { text: pretty(&v), code })
}

#[derive(Debug, Clone, Default)]
pub struct SweepOverrides {
    pub param: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
}

fn resolve_sweep(file: &ScenarioFile, o: &SweepOverrides) -> Result<SweepSpec, Failure> {
    let base = file.sweep.clone();
    let pick = |name: &str| Failure::validation(format!("sweep: `{name}` missing from both the file and the flags"));
    let spec = SweepSpec {
        parameter: match (&o.param, &base) {
            (Some(p), _) => p.clone(),
            (None, Some(b)) => b.parameter.clone(),
            (None, None) => return Err(pick("parameter")),
        },
        from: o.from.or(base.as_ref().map(|b| b.from)).ok_or_else(|| pick("from"))?,
        to: o.to.or(base.as_ref().map(|b| b.to)).ok_or_else(|| pick("to"))?,
        steps: o.steps.or(base.as_ref().map(|b| b.steps)).ok_or_else(|| pick("steps"))?,
    };
    check_sweep(&spec).map_err(|e| Failure::validation(format!("sweep: {e}")))?;
    Ok(spec)
}

fn grid_point(spec: &SweepSpec, k: usize) -> f64 {
    if spec.steps == 1 {
        spec.from
    } else if k == spec.steps - 1 {
        spec.to
    } else {
        spec.from + (spec.to - spec.from) * k as f64 / (spec.steps - 1) as f64
    }
}

/// Optimum at one grid point with its regime label.
fn sweep_point(file: &ScenarioFile, parameter: &str, v: f64) -> Result<(Optimum, &'static str), Error> {
    let s = &file.scenario;
    let labelled = |o: Optimum| (o.regime.name(), o);
    let (label, opt) = if parameter == "gamma_dot" {
        labelled(p_star_enforcement(s, &file.profile, v)?)
    } else {
        let p = Param::from_name(parameter).expect("parameter names are checked");
        let next = s.with_param(p, v)?;
        match optimal_price(&next) {
            Err(Error::NoIncentive(_)) => ("no_incentive", Optimum::at_mode(&next)),
            other => labelled(other?),
        }
    };
    Ok((opt, label))
}

pub fn sweep(file: &ScenarioFile, o: &SweepOverrides, out: Option<&Path>, prec: Precision) -> Result<Output, Failure> {
    let spec = resolve_sweep(file, o)?;
    let rows: Vec<Vec<String>> = (0..spec.steps)
        .into_par_iter()
        .map(|k| {
            let v = grid_point(&spec, k);
            let mut row = vec![prec.cell(Some(v))];
            match sweep_point(file, &spec.parameter, v) {
                Ok((opt, regime)) => {
                    row.extend([
                        prec.cell(opt.p_star),
                        prec.cell(opt.delta_p),
                        prec.cell(opt.alpha),
                        prec.cell(opt.gain),
                        regime.to_string(),
                    ]);
                }
                Err(_) => row.extend(["", "", "", "", "invalid"].map(String::from)),
            }
            row
        })
        .collect();
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(["param", "p_star", "delta_p", "alpha", "gain", "regime"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).map_err(|e| Failure::validation(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Failure::validation(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure::io(path, e))?;
            Ok(Output { text: String::new(), code: 0 })
        }
        None => Ok(Output { text, code: 0 }),
    }
}

/// Two significant digits; enough to read an error magnitude.
fn magnitude(prec: Precision, v: f64) -> Value {
    match prec {
        Precision::Full => prec.num(v),
        Precision::Decimals(_) => format!("{v:.1e}").parse::<f64>().map_or(Value::Null, Value::from),
    }
}

pub fn sensitivity(file: &ScenarioFile, prec: Precision) -> Result<Output, Failure> {
    let s = &file.scenario;
    let r = report(s).map_err(domain)?;
    let fd = finite_differences(s).map_err(domain)?;
    let opt = optimal_price(s).map_err(domain)?;
    let floor = 1e-6 * (s.alp().p_edge() - s.alp().p_mode()).abs();
    let pairs = [
        ("dp_dtau", r.dp_dtau, fd.dp_dtau),
        ("dp_dtau_other", r.dp_dtau_other, fd.dp_dtau_other),
        ("d2p_dtau2", r.d2p_dtau2, fd.d2p_dtau2),
        ("dp_dlambda", r.dp_dlambda, fd.dp_dlambda),
        ("dp_dz", r.dp_dz, fd.dp_dz),
        ("dp_dgamma", r.dp_dgamma, fd.dp_dgamma),
    ];
    let mut worst: f64 = 0.0;
    let rows: Vec<Value> = pairs
        .iter()
        .map(|&(name, a, e)| {
            let rel = (a - e).abs() / a.abs().max(e.abs()).max(floor);
            worst = worst.max(rel);
            json!({
                "name": name,
                "analytic": prec.num(a),
                "finite_difference": prec.num(e),
                "rel_error": magnitude(prec, rel),
            })
        })
        .collect();
    let pass = worst <= CROSS_CHECK_LIMIT;
    let v = json!({
        "case": opt.diagnosis.name(),
        "regime": opt.regime.name(),
        "delta_p": prec.num(r.delta_p),
        "elasticity_tau": prec.num(r.elasticity_tau),
        "semi2": prec.num(r.semi2),
        "derivatives": rows,
        "max_rel_error": magnitude(prec, worst),
        "cross_check": if pass { "pass" } else { "fail" },
    });
    Ok(Output { text: pretty(&v), code: if pass { 0 } else { EXIT_CROSS_CHECK } })
}

fn intervals(prec: Precision, runs: &[(f64, f64)]) -> Value {
    Value::Array(runs.iter().map(|&(a, b)| json!([prec.num(a), prec.num(b)])).collect())
}

pub fn enforcement(
    file: &ScenarioFile,
    grid_steps: usize,
    csv_out: Option<&Path>,
    prec: Precision,
) -> Result<Output, Failure> {
    if grid_steps == 0 {
        return Err(Failure::validation("--grid-steps must be at least 1"));
    }
    let s = &file.scenario;
    let h = harmed_country(s).map_err(domain)?;
    let grid = uniform_grid(grid_steps);
    let prof = &file.profile;
    let nec = check_necessary(prof, &grid).map_err(domain)?;
    let suf = check_sufficient(s, prof, &grid).map_err(domain)?;
    let low = p_star_enforcement(s, prof, MIN_GAMMA_DOT).map_err(domain)?;
    let full = p_star_enforcement(s, prof, 1.0).map_err(domain)?;
    let v = json!({
        "case": h.diagnosis.name(),
        "profile": {
            "g": file.profile_spec.g.to_string(),
            "f": file.profile_spec.f.to_string(),
        },
        "grid_steps": grid_steps,
        "necessary": {
            "satisfied": nec.satisfied,
            "violations": intervals(prec, &nec.violations),
            "equivalence_holds": nec.equivalence_holds,
        },
        "sufficient": {
            "satisfied": suf.satisfied,
            "violations": intervals(prec, &suf.violations),
            "escapes": suf.escapes,
        },
        "boundaries": {
            "p_edge": prec.num(s.alp().p_edge()),
            "p_star_min_enforcement": prec.opt(low.p_star),
            "p_star_full_enforcement": prec.opt(full.p_star),
            "full_enforcement_closed_form": prec.num(full_enforcement_price(s).map_err(domain)?),
        },
    });
    if let Some(path) = csv_out {
        let scan = regime_scan(s, prof, &grid).map_err(domain)?;
        let mut w = csv::Writer::from_path(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        let mut write = || -> csv::Result<()> {
            w.write_record(["gamma_dot", "p_star", "delta_p", "alpha", "regime", "dp_ddotgamma"])?;
            for pt in &scan {
                let o = &pt.optimum;
                w.write_record([
                    prec.cell(Some(pt.gamma_dot)),
                    prec.cell(o.p_star),
                    prec.cell(o.delta_p),
                    prec.cell(o.alpha),
                    o.regime.name().to_string(),
                    prec.cell(Some(pt.derivative)),
                ])?;
            }
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    }
    Ok(Output { text: pretty(&v), code: 0 })
}

pub fn emit(out: &Output) -> std::io::Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(out.text.as_bytes())?;
    stdout.flush()
}
