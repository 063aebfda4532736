use std::f64::consts::PI;

use autocorr::acceptance::{run_all, Faults};
use autocorr::constants::{
    gaussian_mean_lower, gaussian_parse_check, hy_coefficient, indicator_min_lower, mean_upper_constant,
    min_mixed_constant, minimize_over_p, sinc_min_roots, summary_table, BoundReport, MOMENT_TOL,
};
use autocorr::dualcheck::{case2bb_residual, negative_part_bound_check, BumpFunction, BumpKind};
use autocorr::funcspace::sample;
use autocorr::functionals::{Functional, RatioResult};
use autocorr::search::{search, SearchFamily};
use autocorr::spectral::{weight_lp_moment, Weight};
use autocorr::{AnalyticFamily, Error};
use rayon::prelude::*;

use crate::config::{CommandName, FamilySpec, RunConfig, WeightName, DEFAULT_A};
use crate::report::{Entry, Report, Table};

/// Why a run did not produce a report.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or inconsistent input; exit 2.
    Input(String),
    /// A computation failed; exit 1.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidMeasure(_)
            | Error::Domain { .. }
            | Error::Divergent(_)
            | Error::ZeroFunction
            | Error::Unsupported(_) => Failure::Input(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
    pub text: Vec<String>,
}

impl Outcome {
    fn new(config: &RunConfig) -> Self {
        Self {
            report: Report::new(config),
            tables: Vec::new(),
            text: Vec::new(),
        }
    }
}

pub fn run(config: &RunConfig, faults: &Faults) -> Result<Outcome, Failure> {
    match config.command {
        Some(CommandName::Constants) => constants(config),
        Some(CommandName::Roots) => roots(config),
        Some(CommandName::Evaluate) => evaluate(config),
        Some(CommandName::Search) => run_search(config),
        Some(CommandName::Dual) => dual(config),
        Some(CommandName::Verify) => verify(config, faults),
        None => Err(Failure::Input("no command given (flag or `command` key)".into())),
    }
}

/// Quadrature-backed constants; closed forms are exact to rounding.
const CONSTANT_TOL: f64 = 1e-9;

fn bound_entry(r: &BoundReport, tolerance: f64) -> Entry {
    Entry::new(r.name.clone(), r.value, tolerance, "constants").with_detail(r)
}

fn bound_line(r: &BoundReport) -> String {
    format!("{:<44} {:>14.9}  {:?}", r.name, r.value, r.kind)
}

fn weight_of(config: &RunConfig, name: WeightName) -> Weight {
    match name {
        WeightName::Interval => Weight::Interval,
        WeightName::Gaussian => Weight::Gaussian {
            a: config.a.unwrap_or(DEFAULT_A),
        },
    }
}

fn constants(config: &RunConfig) -> Result<Outcome, Failure> {
    let mut out = Outcome::new(config);
    let p_range = (config.p_min.unwrap_or(2.0), config.p_max.unwrap_or(12.0));
    let p_tol = config.tol.unwrap_or(1e-6);
    let Some(name) = config.weight else {
        let table = summary_table()?;
        for r in &table {
            out.text.push(bound_line(r));
            out.report.push(bound_entry(r, CONSTANT_TOL));
        }
        let value = |n: &str| table.iter().find(|r| r.name.starts_with(n)).map(|r| r.value);
        let mixed = min_mixed_constant()?.value;
        let a = DEFAULT_A;
        let g_lower = gaussian_mean_lower(a)?.value;
        let g_upper = mean_upper_constant(&Weight::Gaussian { a }, 2.0)?.value;
        out.report.require(g_lower <= g_upper, "gaussian lower bound <= gaussian upper bound");
        out.report.require(indicator_min_lower().value <= mixed, "indicator lower bound <= mixed minimum constant");
        if let (Some(inf), Some(c2)) = (value("inf_p C_p(interval)"), value("C_p(interval)")) {
            out.report.require(inf <= c2, "inf_p C_p <= C_2 (interval)");
            out.report.require(0.8 <= inf, "mean lower bound 0.8 <= inf_p C_p (interval)");
        }
        return Ok(out);
    };
    let w = weight_of(config, name);
    w.validate()?;
    let inf = minimize_over_p(&w, p_range, p_tol)?;
    let c2 = mean_upper_constant(&w, 2.0)?;
    let mut reports = vec![c2, inf.clone()];
    if let Weight::Gaussian { a } = w {
        reports.push(gaussian_parse_check(a, 2.0)?);
        reports.push(gaussian_mean_lower(a)?);
    }
    for r in &reports {
        out.text.push(bound_line(r));
        out.report.push(bound_entry(r, CONSTANT_TOL));
    }
    if let Weight::Gaussian { a } = w {
        out.report.require(
            gaussian_mean_lower(a)?.value <= inf.value,
            "gaussian lower bound <= inf_p C_p",
        );
    }

    let points = 21;
    let ps: Vec<f64> = (0..points)
        .map(|k| p_range.0 + (p_range.1 - p_range.0) * k as f64 / (points - 1) as f64)
        .collect();
    let rows = ps
        .par_iter()
        .map(|p| -> autocorr::Result<[f64; 4]> {
            Ok([
                *p,
                hy_coefficient(*p)?,
                weight_lp_moment(&w, *p, MOMENT_TOL)?.value,
                mean_upper_constant(&w, *p)?.value,
            ])
        })
        .collect::<autocorr::Result<Vec<_>>>()?;
    let mut sweep = Table::new("constants_sweep.csv", &["p", "K_p", "I_w_p", "C_p"]);
    for r in &rows {
        sweep.row(r.iter().map(|v| format!("{v:.12}")).collect());
        out.report.require(
            inf.value <= r[3] + 1e-12,
            format!("inf_p C_p <= C_p at p = {}", r[0]),
        );
    }
    out.text.push(format!("sweep: {} values of p in [{}, {}]", points, p_range.0, p_range.1));
    out.tables.push(sweep);
    Ok(out)
}

fn roots(config: &RunConfig) -> Result<Outcome, Failure> {
    let mut out = Outcome::new(config);
    let r = sinc_min_roots();
    for b in r.reports() {
        out.text.push(bound_line(&b));
        out.report.push(bound_entry(&b, 1e-12));
    }
    let derivative = (r.y0 * r.y0.cos() - r.y0.sin()) / (r.y0 * r.y0);
    out.report.require(derivative.abs() <= 1e-10, "sinc derivative vanishes at y0");
    out.report.require(r.alpha0 > 2.0 / 3.0, "alpha0 > 2/3");
    Ok(out)
}

fn functional_of(config: &RunConfig) -> Result<Functional, Failure> {
    let name = config
        .functional
        .as_deref()
        .ok_or_else(|| Failure::Input("missing --functional".into()))?;
    let f: Functional = name.parse()?;
    Ok(match f {
        Functional::Gauss { .. } => Functional::Gauss {
            a: config.a.unwrap_or(DEFAULT_A),
        },
        other => other,
    })
}

fn family_of(config: &RunConfig) -> Result<AnalyticFamily, Failure> {
    let fam = match &config.family {
        None => return Err(Failure::Input("missing --family".into())),
        Some(FamilySpec::Full(f)) => f.clone(),
        Some(FamilySpec::Name(n)) => match n.as_str() {
            "gaussian" => AnalyticFamily::Gaussian {
                b: config.param.unwrap_or(4.0 * PI),
            },
            "indicator" => AnalyticFamily::Indicator {
                a: config.param.unwrap_or(0.75),
            },
            "piecewise-constant" => AnalyticFamily::PiecewiseConstant {
                half_width: config.support.unwrap_or(0.5),
                values: config
                    .values
                    .clone()
                    .ok_or_else(|| Failure::Input("piecewise-constant needs `values`".into()))?,
            },
            "bs-example" => AnalyticFamily::BsExample,
            other => return Err(Failure::Input(format!("unknown family `{other}`"))),
        },
    };
    fam.validate()?;
    Ok(fam)
}

fn ratio_line(r: &RatioResult) -> String {
    let mut s = format!(
        "{} = {:.9} (numerator {:.9}, ‖f‖₁ {:.9}, error {:.1e}, {})",
        r.functional, r.value, r.numerator, r.l1, r.error_estimate, r.method
    );
    if let Some(t) = r.argmin {
        s.push_str(&format!(", argmin t = {t:.6}"));
    }
    if let Some(fnum) = r.fourier_numerator {
        s.push_str(&format!(", Fourier numerator {fnum:.9}"));
    }
    s
}

fn evaluate(config: &RunConfig) -> Result<Outcome, Failure> {
    let mut out = Outcome::new(config);
    let family = family_of(config)?;
    let functional = functional_of(config)?;
    let tol = config.tol.unwrap_or(1e-9);
    let result = if family.is_singular() {
        autocorr::functionals::evaluate_family(&family, &functional, None, 0)?
    } else {
        let grid = match (family.to_grid(), config.support, &family) {
            (Some(g), _, _) => g,
            (None, Some(s), _) => sample(&family, (-s, s), config.cells.unwrap_or(4096))?,
            (None, None, _) => sample(&family, family.default_support(), config.cells.unwrap_or(4096))?,
        };
        let scale = grid.l1() * grid.l2();
        functional.evaluate_both(&grid, tol * scale)?
    };
    out.text.push(format!("{}: {}", family.label(), ratio_line(&result)));
    let ceiling = functional.ceiling()?;
    out.text.push(format!("ceiling {ceiling:.9}"));
    out.report.push(
        Entry::new(
            format!("{} of {}", functional.label(), family.label()),
            result.value,
            result.error_estimate,
            "functionals",
        )
        .with_detail(&result),
    );
    out.report.push(Entry::new("ceiling", ceiling, 0.0, "functionals"));
    out.report
        .require(result.value <= ceiling + 1e-4, format!("{} <= ceiling {ceiling}", functional.label()));
    if let (Some(fnum), Some(ferr)) = (result.fourier_numerator, result.fourier_error) {
        let allowed = 10.0 * ferr + result.error_estimate * result.denominator() + 1e-12;
        out.report.require(
            (fnum - result.numerator).abs() <= allowed,
            "time and Fourier numerators agree",
        );
    }
    Ok(out)
}

fn search_family_of(config: &RunConfig) -> Result<SearchFamily, Failure> {
    match config.family_name() {
        Some("indicator") => Ok(SearchFamily::Indicator),
        Some("gaussian") => Ok(SearchFamily::Gaussian),
        Some("piecewise-constant") | None => Ok(SearchFamily::PiecewiseConstant {
            cells: config.cells.unwrap_or(16),
            half_width: config.support,
        }),
        Some(other) => Err(Failure::Input(format!(
            "search family must be indicator, gaussian or piecewise-constant, not `{other}`"
        ))),
    }
}

fn run_search(config: &RunConfig) -> Result<Outcome, Failure> {
    let mut out = Outcome::new(config);
    let functional = functional_of(config)?;
    let family = search_family_of(config)?;
    let budget = config.budget.unwrap_or_else(|| family.default_budget());
    let seed = config.seed.unwrap_or(0);
    let rec = search(&functional, &family, budget, seed)?;
    let ceiling = functional.ceiling()?;
    out.text.push(format!(
        "{} over {}: best {:.9} after {} evaluations ({} restarts, seed {}), baseline {:.9}",
        rec.objective, rec.family, rec.best_value, rec.evaluations, rec.restarts, rec.seed, rec.baseline
    ));
    out.text.push(format!(
        "best parameters: [{}]",
        rec.best_params.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")
    ));
    let mut trace = Table::new("search_trace.csv", &["eval_index", "best_value"]);
    for (i, v) in &rec.trace {
        trace.row(vec![i.to_string(), format!("{v:.12}")]);
    }
    out.tables.push(trace);
    let mut summary = rec.clone();
    summary.trace.clear();
    out.report.push(Entry::new("best value", rec.best_value, 1e-10, "search").with_detail(&summary));
    out.report.push(Entry::new("baseline", rec.baseline, 1e-10, "search"));
    out.report
        .require(rec.best_value <= ceiling + 1e-4, format!("best value <= ceiling {ceiling}"));
    out.report.require(
        rec.best_value >= rec.baseline - 1e-3,
        "best value >= baseline - 1e-3",
    );
    out.report.require(
        rec.trace.windows(2).all(|w| w[1].1 >= w[0].1),
        "trace is a running maximum",
    );
    Ok(out)
}

fn dual(config: &RunConfig) -> Result<Outcome, Failure> {
    let mut out = Outcome::new(config);
    let tol = config.tol.unwrap_or(1e-9);
    let scale = config.support.unwrap_or(1.0);
    let kinds = [BumpKind::Standard, BumpKind::Cosine, BumpKind::BetaPower { k: 2 }];
    let reports = kinds
        .par_iter()
        .map(|k| negative_part_bound_check(&BumpFunction::new(*k, scale)?, tol))
        .collect::<autocorr::Result<Vec<_>>>()?;
    let mut table = Table::new("dual.csv", &["bump", "pos_mass", "bound", "margin"]);
    for r in &reports {
        let margin = r.positive - r.refined_floor;
        out.text.push(format!(
            "{:<24} ‖φ̂₊‖₁ {:.9}  floor {:.9}  margin {:.9}  chain {:.6} <= {:.6} <= {:.6}",
            r.bump, r.positive, r.refined_floor, margin, r.lhs, r.weighted_negative, r.bound
        ));
        table.row(vec![
            r.bump.clone(),
            format!("{:.12}", r.positive),
            format!("{:.12}", r.refined_floor),
            format!("{margin:.12}"),
        ]);
        out.report.push(
            Entry::new(format!("{} positive mass", r.bump), r.positive, r.error, "dualcheck").with_detail(r),
        );
        out.report.require(r.holds(tol.max(1e-8)), format!("negative-part chain for {}", r.bump));
        out.report
            .require(r.positive >= 0.410767 - 1e-4, format!("{} positive mass >= 0.410767", r.bump));
    }
    out.tables.push(table);
    let residual = (0..81)
        .into_par_iter()
        .map(|k| case2bb_residual(10f64.powf(-2.0 + 4.0 * k as f64 / 80.0)))
        .collect::<autocorr::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    out.text.push(format!("case 2bb: min residual over a in [0.01, 100] = {residual:.6}"));
    out.report.push(Entry::new("case 2bb min residual", residual, 1e-12, "dualcheck"));
    out.report.require(residual >= 0.01, "case 2bb residual >= 0.01");
    Ok(out)
}

fn verify(config: &RunConfig, faults: &Faults) -> Result<Outcome, Failure> {
    let mut out = Outcome::new(config);
    let results = run_all(faults);
    for r in &results {
        out.text.push(r.summary());
        out.text.extend(r.checks.iter().map(|c| c.to_string()));
        out.report.require(r.passed, format!("criterion {}: {}", r.id, r.name));
    }
    out.report.criteria = Some(serde_json::to_value(&results).map_err(|e| Failure::Runtime(e.to_string()))?);
    Ok(out)
}
