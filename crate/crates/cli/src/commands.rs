//! The subcommands. Each returns the files to write and a short summary;
//! nothing touches the file system here.

use std::path::PathBuf;

use serde_json::{json, Value};
use torsion_core::fail_point::{convergence_sweep, distance_report, find_fail_points, SweepOptions};
use torsion_core::geometry::{contact_points, curvature_linear_term, restrict_to_arc};
use torsion_core::perturbation::{fail_functional, predict_curvature_min, predict_fail_point, FailPointPrediction};
use torsion_core::rectangle::{rect_fail_points, rect_monotonicity_certificate};
use torsion_core::report::to_json_string;
use torsion_core::reproduce::reproduce;
use torsion_core::{solve, solve_adaptive, Error, RectangleDomain, StarDomain, TorsionSolution, TrigPolynomial};

use crate::config::{Command, RunConfig};

/// Amplitude used for contact points when `predict` is given no `t`.
pub const DEFAULT_PREDICT_T: f64 = 0.01;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Verdict(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Verdict(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Verdict(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

/// Files to write (relative to the output directory), summary lines for
/// stderr, and a failure to report once the files are written.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(PathBuf, String)>,
    pub summary: Vec<String>,
    pub deferred: Option<Failure>,
}

impl Output {
    fn file(&mut self, name: impl Into<PathBuf>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<(), Failure> {
        let s = to_json_string(value).map_err(|e| Failure::Config(format!("serializing {name}: {e}")))?;
        self.file(name, s);
        Ok(())
    }
}

fn angle(theta: f64, degrees: bool) -> String {
    if degrees {
        format!("{:.6}°", theta.to_degrees())
    } else {
        format!("{theta:.10} rad")
    }
}

fn angles(thetas: &[f64], degrees: bool) -> String {
    let parts: Vec<String> = thetas.iter().map(|&t| angle(t, degrees)).collect();
    format!("[{}]", parts.join(", "))
}

pub fn run(config: &RunConfig) -> Result<Output, Failure> {
    match config.command {
        Command::Predict => predict(config),
        Command::Solve => solve_cmd(config),
        Command::Failpoints => failpoints(config),
        Command::Rectangle => rectangle(config),
        Command::Sweep => sweep(config),
        Command::Reproduce => reproduce_cmd(config),
    }
}

fn zeta(config: &RunConfig) -> &TrigPolynomial {
    config.zeta.as_ref().expect("validated: zeta present")
}

fn prediction_value(p: &torsion_core::Result<FailPointPrediction>) -> Value {
    match p {
        Ok(p) => {
            let mut v = serde_json::to_value(p).unwrap_or(Value::Null);
            if let Value::Object(map) = &mut v {
                map.insert("degenerate".into(), json!(false));
            }
            v
        }
        Err(e) => json!({"degenerate": true, "reason": e.to_string()}),
    }
}

fn predict(config: &RunConfig) -> Result<Output, Failure> {
    let zeta = zeta(config);
    let arc = &config.arc;
    let t = config.t.unwrap_or(DEFAULT_PREDICT_T);
    let domain = StarDomain::new(zeta.clone(), t)?;
    let fail = predict_fail_point(zeta, arc);
    let curv = predict_curvature_min(zeta, arc);
    let contacts = match contact_points(&domain) {
        Ok(c) => json!({
            "available": true,
            "all_boundary": c.all_boundary,
            "angles": restrict_to_arc(&c.angles, arc),
            "min_radius": c.min_radius,
            "reason": null,
        }),
        Err(e) => json!({"available": false, "all_boundary": false, "angles": [], "min_radius": null, "reason": e.to_string()}),
    };
    let mut out = Output::default();
    let d = config.degrees;
    out.summary.push(match &fail {
        Ok(p) => format!("predicted fail point {}{}", angle(p.predicted_angle, d), if p.endpoint { " (endpoint)" } else { "" }),
        Err(e) => format!("fail point: {e}"),
    });
    out.summary.push(match &curv {
        Ok(p) => format!("predicted curvature minimum {}", angle(p.predicted_angle, d)),
        Err(e) => format!("curvature minimum: {e}"),
    });
    if let Some(reason) = contacts["reason"].as_str() {
        out.summary.push(format!("contact points: {reason}"));
    } else if contacts["all_boundary"] == json!(true) {
        out.summary.push("contact points: the whole boundary".into());
    } else if let Some(list) = contacts["angles"].as_array() {
        let list: Vec<f64> = list.iter().filter_map(Value::as_f64).collect();
        out.summary.push(format!("contact points {}", angles(&list, d)));
    }
    let report = json!({
        "zeta": zeta,
        "t": t,
        "arc": arc,
        "fail_functional": fail_functional(zeta),
        "curvature_linear_term": curvature_linear_term(zeta),
        "fail_point": prediction_value(&fail),
        "curvature_min": prediction_value(&curv),
        "contacts": contacts,
    });
    out.json("prediction.json", &report)?;
    Ok(out)
}

fn solve_star(config: &RunConfig) -> Result<TorsionSolution, Failure> {
    let domain = StarDomain::new(zeta(config).clone(), config.t.expect("validated: t present"))?;
    Ok(match config.max_degree {
        Some(max) => solve_adaptive(&domain, &config.solver, max)?,
        None => solve(&domain, &config.solver)?,
    })
}

fn solve_value(sol: &TorsionSolution) -> Value {
    let mut v = serde_json::to_value(sol.summary()).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        map.insert("zeta".into(), json!(sol.domain().zeta()));
    }
    v
}

fn solve_cmd(config: &RunConfig) -> Result<Output, Failure> {
    let sol = solve_star(config)?;
    let profile = sol.boundary_profile(config.profile_samples);
    let mut out = Output::default();
    out.summary.push(format!(
        "solved with K = {}, M = {}: residual {:.3e}, condition {:.3e}",
        sol.degree(),
        sol.collocation_points(),
        sol.boundary_residual(),
        sol.condition_estimate()
    ));
    let mut summary = solve_value(&sol);
    if let Value::Object(map) = &mut summary {
        map.insert("profile_samples".into(), json!(config.profile_samples));
        map.insert("max_firstorder_gap".into(), json!(profile.max_firstorder_gap()));
    }
    out.file("profile.csv", profile.to_csv());
    out.json("solve.json", &summary)?;
    Ok(out)
}

fn failpoints(config: &RunConfig) -> Result<Output, Failure> {
    let sol = solve_star(config)?;
    let result = find_fail_points(&sol, &config.arc)?;
    let distance = if sol.domain().is_centrally_symmetric() {
        distance_report(&result, sol.domain()).ok()
    } else {
        None
    };
    let mut out = Output::default();
    let d = config.degrees;
    out.summary.push(if result.degenerate {
        "boundary profile is constant: no distinguished fail point".to_string()
    } else {
        format!(
            "fail points {}{}, max |grad u|^2 = {:.12}",
            angles(&result.angles, d),
            if result.has_endpoint() { " (endpoint)" } else { "" },
            result.max_value
        )
    });
    if !result.refinement_converged {
        out.summary.push("warning: refinement did not reach |dE/dθ| < 1e-10".into());
    }
    if let Some(p) = &result.profile {
        out.file("profile.csv", p.to_csv());
    }
    let report = json!({
        "t": sol.domain().t(),
        "solve": solve_value(&sol),
        "result": result,
        "distance": distance,
    });
    out.json("failpoints.json", &report)?;
    Ok(out)
}

fn rectangle(config: &RunConfig) -> Result<Output, Failure> {
    let domain = RectangleDomain::new(config.length, config.width)?;
    let fp = rect_fail_points(&domain, config.terms, config.side_samples)?;
    let cert = rect_monotonicity_certificate(&domain, config.terms, config.side_samples)?;
    let mut out = Output::default();
    for w in &fp.winners {
        out.summary.push(format!("fail point on {} side at ({:.10}, {:.10}), |grad u| = {:.12}", w.side, w.x, w.y, w.grad_norm));
    }
    out.summary.push(format!(
        "u_xy certificate {} (min {:.3e})",
        if cert.passes { "passes" } else { "fails" },
        cert.min_u_xy
    ));
    out.file("side_profile.csv", fp.profile_csv());
    out.json(
        "rectangle.json",
        &json!({"fail_points": fp, "long_short_gap": fp.long_short_gap(), "certificate": cert}),
    )?;
    Ok(out)
}

fn sweep(config: &RunConfig) -> Result<Output, Failure> {
    let options = SweepOptions {
        solver: config.solver,
        max_degree: config.max_degree.unwrap_or(config.solver.degree),
    };
    let table = convergence_sweep(zeta(config), &config.t_list, &config.arc, &options)?;
    let mut out = Output::default();
    for r in &table.rows {
        out.summary.push(match &r.error {
            None => format!("t = {}: fail angle {}, error {:.3e}", r.t, angle(r.fail_angle_numeric, config.degrees), r.abs_error),
            Some(e) => format!("t = {}: {e}", r.t),
        });
    }
    if !table.all_succeeded() {
        out.deferred = Some(Failure::Numerical("some sweep rows failed; see sweep.json".into()));
    }
    out.file("convergence.csv", table.to_csv());
    out.json("sweep.json", &json!({"zeta": zeta(config), "arc": config.arc, "table": table}))?;
    Ok(out)
}

fn reproduce_cmd(config: &RunConfig) -> Result<Output, Failure> {
    let case = config.case.expect("validated: case present");
    let report = reproduce(case).map_err(|e| Failure::Numerical(e.to_string()))?;
    let mut out = Output::default();
    let dir = PathBuf::from(case.name());
    for check in &report.checks {
        out.summary.push(format!("{} {}", if check.pass { "pass" } else { "FAIL" }, check.name));
    }
    for a in &report.artifacts {
        out.file(dir.join(&a.file_name), a.contents.clone());
    }
    let verdict = to_json_string(&report).map_err(|e| Failure::Config(e.to_string()))?;
    out.file(dir.join("verdict.json"), verdict);
    if !report.pass {
        out.deferred = Some(Failure::Verdict(format!("case {case} failed its verdict")));
    }
    Ok(out)
}
