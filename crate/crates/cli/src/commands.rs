use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use trendopt_core::builder::{build_optimal_design, certify_maximin, exhaustive_max_trace};
use trendopt_core::efficiency::{
    co_optimal_kinds, efficiency_curves, efficiency_table, optimality_breakpoints, TABLE1_GRID,
};
use trendopt_core::model::minimal_info_matrix;
use trendopt_core::orders::{
    brute_force_optimal, objective_pairwise, optimal_order_kind, order_stats, s_star,
    DEFAULT_ORACLE_BUDGET,
};
use trendopt_core::sba::{construct_sba, verify_sba};

use crate::args::{Command, LambdaArgs, Lambdas};
use crate::document::{load_design, DesignDocument, LoadedDesign, SCHEMA_VERSION};
use crate::output::{fmt_f64, join_labels, key_values, Report};
use crate::CliError;

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Io(format!("cannot encode JSON: {e}")))
}

pub fn execute(cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::Design { v, k, b, lambdas } => design(*v, *k, *b, lambdas),
        Command::Order { v, k, lambdas } => order(*v, *k, lambdas),
        Command::Sba { v, kstar, b } => sba(*v, *kstar, *b),
        Command::Analyze { design, v, lambdas } => analyze(design, *v, lambdas),
        Command::Efficiency {
            v,
            k,
            table1,
            grid,
            plot_data,
            curve_lambda1,
            points,
        } => {
            let grid = if *table1 {
                TABLE1_GRID.to_vec()
            } else if grid.is_empty() {
                return Err(CliError::Input("give --table1 or --grid".into()));
            } else {
                grid.clone()
            };
            if let Some(path) = plot_data {
                write_plot_data(path, *v, *k, *curve_lambda1, *points)?;
            }
            efficiency(*v, *k, &grid)
        }
        Command::Verify {
            design,
            v,
            lambdas,
            exhaustive,
            budget,
        } => verify(design, *v, lambdas, *exhaustive, *budget),
        Command::Oracle {
            v,
            k,
            lambdas,
            budget,
        } => oracle(*v, *k, lambdas, *budget),
    }
}

fn design(v: usize, k: usize, b: usize, args: &LambdaArgs) -> Result<Report, CliError> {
    let l = args.require(k)?;
    let report = build_optimal_design(v, k, b, l.lambda0, l.lambda1)?;
    let mut certificate = to_value(&report.certificate)?;
    certificate["order_kind"] = json!(report.kind.label());
    certificate["kstar"] = json!(report.kstar);
    let doc = DesignDocument {
        schema_version: SCHEMA_VERSION.into(),
        v,
        b,
        k,
        lambda0: l.lambda0,
        lambda1: l.lambda1,
        variance_components: l.components,
        order: report.order.entries().to_vec(),
        cells: report.design.rows(),
        certificate: Some(certificate),
    };
    let csv = cells_csv(&doc.cells);
    Ok(Report {
        json: to_value(&doc)?,
        csv,
    })
}

fn cells_csv(rows: &[Vec<usize>]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect())
        .collect()
}

fn order(v: usize, k: usize, args: &LambdaArgs) -> Result<Report, CliError> {
    let l = args.require(k)?;
    let kind = optimal_order_kind(v, k, l.lambda0, l.lambda1)?;
    let order = kind.construct(v, k)?;
    let stats = order_stats(&order, l.lambda0, l.lambda1)?;
    let star = s_star(k, l.lambda0, l.lambda1);
    let co: Vec<String> = co_optimal_kinds(v, k, l.lambda0, l.lambda1)?
        .iter()
        .map(|k| k.label())
        .collect();
    let json = json!({
        "v": v,
        "k": k,
        "lambda0": l.lambda0,
        "lambda1": l.lambda1,
        "kind": kind.label(),
        "order": order.entries(),
        "s_star": star,
        "co_optimal": co,
        "stats": to_value(&stats)?,
    });
    let mut pairs = vec![
        ("kind".to_string(), kind.label()),
        ("order".into(), join_labels(order.entries())),
        ("s_star".into(), star.to_string()),
        ("co_optimal".into(), co.join(" ")),
        ("s".into(), stats.s.to_string()),
        ("T".into(), fmt_f64(stats.t)),
        ("F".into(), fmt_f64(stats.f)),
    ];
    for (i, (n, h)) in stats.n.iter().zip(&stats.h).enumerate() {
        pairs.push((format!("n{}", i + 1), n.to_string()));
        pairs.push((format!("h{}", i + 1), fmt_f64(*h)));
    }
    Ok(Report {
        json,
        csv: key_values(pairs),
    })
}

fn sba(v: usize, kstar: usize, b: usize) -> Result<Report, CliError> {
    let a = construct_sba(v, kstar, b)?;
    let rows = a.rows();
    let report = verify_sba(v, &rows);
    let json = json!({
        "v": v,
        "kstar": kstar,
        "b": b,
        "rows": rows,
        "report": to_value(&report)?,
    });
    Ok(Report {
        json,
        csv: cells_csv(&rows),
    })
}

/// Lambdas from the flags, falling back to those stored with the design.
fn lambdas_for(args: &LambdaArgs, loaded: &LoadedDesign) -> Result<Lambdas, CliError> {
    let k = loaded.design.k();
    if let Some(l) = args.resolve(k)? {
        return Ok(l);
    }
    match loaded.lambdas {
        Some((lambda0, lambda1)) => {
            trendopt_core::model::check_lambdas(k, lambda0, lambda1)?;
            Ok(Lambdas {
                lambda0,
                lambda1,
                components: None,
            })
        }
        None => Err(CliError::Input(
            "this design file carries no lambdas; give --lambda0 and --lambda1".into(),
        )),
    }
}

fn analyze(path: &Path, v: Option<usize>, args: &LambdaArgs) -> Result<Report, CliError> {
    let loaded = load_design(path, v)?;
    let l = lambdas_for(args, &loaded)?;
    let d = &loaded.design;
    let c = minimal_info_matrix(d, l.lambda0, l.lambda1)?;
    let json = json!({
        "v": d.v(),
        "b": d.b(),
        "k": d.k(),
        "lambda0": l.lambda0,
        "lambda1": l.lambda1,
        "trace": c.trace(),
        "completely_symmetric": c.is_completely_symmetric(trendopt_core::model::IDENTITY_TOL),
        "min_eigenvalue": c.min_eigenvalue(),
        "max_abs_row_sum": c.max_abs_row_sum(),
        "replications": d.replications(),
        "info_matrix": c.rows(),
    });
    let csv = c
        .rows()
        .iter()
        .map(|r| r.iter().map(|x| fmt_f64(*x)).collect())
        .collect();
    Ok(Report { json, csv })
}

fn efficiency(v: usize, k: usize, grid: &[(f64, f64)]) -> Result<Report, CliError> {
    let table = efficiency_table(v, k, grid)?;
    let breakpoints = optimality_breakpoints(v, k)?;
    let rows: Vec<String> = table.rows.iter().map(|r| r.label()).collect();
    let columns: Vec<Value> = grid
        .iter()
        .map(|(a, b)| json!({"lambda0": a, "lambda1": b}))
        .collect();
    let json = json!({
        "v": v,
        "k": k,
        "rows": rows,
        "columns": columns,
        "percent": table.percent,
        "efficiency": table.ratio,
        "breakpoints": to_value(&breakpoints)?,
    });
    let mut header = vec!["order".to_string()];
    header.extend(grid.iter().map(|(a, b)| format!("{a}:{b}")));
    let mut csv = vec![header];
    for (label, pct) in rows.iter().zip(&table.percent) {
        let mut rec = vec![label.clone()];
        rec.extend(pct.iter().map(|p| p.to_string()));
        csv.push(rec);
    }
    Ok(Report { json, csv })
}

fn write_plot_data(
    path: &Path,
    v: usize,
    k: usize,
    lambda1: f64,
    points: usize,
) -> Result<(), CliError> {
    let (kinds, rows) = efficiency_curves(v, k, lambda1, points)?;
    let mut text = String::new();
    let labels: Vec<String> = kinds.iter().map(|k| k.label()).collect();
    let _ = writeln!(text, "# v={v} k={k} lambda1={lambda1}");
    let _ = writeln!(text, "# lambda0/lambda1 {}", labels.join(" "));
    for (ratio, effs) in rows {
        let cols: Vec<String> = effs.iter().map(|e| fmt_f64(*e)).collect();
        let _ = writeln!(text, "{} {}", fmt_f64(ratio), cols.join(" "));
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn verify(
    path: &Path,
    v: Option<usize>,
    args: &LambdaArgs,
    exhaustive: bool,
    budget: Option<u128>,
) -> Result<Report, CliError> {
    let loaded = load_design(path, v)?;
    let l = lambdas_for(args, &loaded)?;
    let d = &loaded.design;
    let cert = certify_maximin(d, l.lambda0, l.lambda1)?;
    let mut json = json!({
        "v": d.v(),
        "b": d.b(),
        "k": d.k(),
        "lambda0": l.lambda0,
        "lambda1": l.lambda1,
        "optimal": cert.optimal,
        "certificate": to_value(&cert)?,
    });
    let mut pairs = vec![
        ("optimal".to_string(), cert.optimal.to_string()),
        ("trace".into(), fmt_f64(cert.trace)),
        ("max_trace".into(), fmt_f64(cert.max_trace)),
        ("cs_ok".into(), cert.cs_ok.to_string()),
        ("m_phi_zero".into(), cert.m_phi_zero.to_string()),
        ("rr_attained".into(), cert.rr_attained.to_string()),
    ];
    if exhaustive {
        let budget = budget.unwrap_or(DEFAULT_ORACLE_BUDGET);
        let summary = exhaustive_max_trace(d.v(), d.k(), d.b(), l.lambda0, l.lambda1, budget)?;
        let matches =
            (summary.max_trace - cert.trace).abs() <= 1e-10 * summary.max_trace.abs().max(1.0);
        json["exhaustive"] = to_value(&summary)?;
        json["matches_enumeration"] = json!(matches);
        pairs.push(("designs_enumerated".into(), summary.designs.to_string()));
        pairs.push(("enumerated_max_trace".into(), fmt_f64(summary.max_trace)));
        pairs.push(("matches_enumeration".into(), matches.to_string()));
    }
    Ok(Report {
        json,
        csv: key_values(pairs),
    })
}

fn oracle(v: usize, k: usize, args: &LambdaArgs, budget: Option<u128>) -> Result<Report, CliError> {
    let l = args.require(k)?;
    let budget = budget.unwrap_or(DEFAULT_ORACLE_BUDGET);
    let best = brute_force_optimal(v, k, l.lambda0, l.lambda1, budget)?;
    let kind = optimal_order_kind(v, k, l.lambda0, l.lambda1)?;
    let formula = kind.construct(v, k)?;
    let f_formula = objective_pairwise(&formula, l.lambda0, l.lambda1)?;
    let agrees = (f_formula - best.f_max).abs() <= 1e-12;
    let json = json!({
        "v": v,
        "k": k,
        "lambda0": l.lambda0,
        "lambda1": l.lambda1,
        "order": best.order.entries(),
        "f_max": best.f_max,
        "evaluated": best.evaluated.to_string(),
        "budget": budget.to_string(),
        "formula_kind": kind.label(),
        "formula_order": formula.entries(),
        "formula_f": f_formula,
        "agrees": agrees,
    });
    let pairs = vec![
        ("order".to_string(), join_labels(best.order.entries())),
        ("f_max".into(), fmt_f64(best.f_max)),
        ("evaluated".into(), best.evaluated.to_string()),
        ("formula_kind".into(), kind.label()),
        ("formula_order".into(), join_labels(formula.entries())),
        ("agrees".into(), agrees.to_string()),
    ];
    Ok(Report {
        json,
        csv: key_values(pairs),
    })
}
