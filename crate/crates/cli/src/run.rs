//! Evaluates a validated experiment into a report.

use avcp_core::arrange::{
    avcp_check, exact_expected_output, mc_expected_output, solve_representing_operator, McOptions, Representation,
    SolveOptions,
};
use avcp_core::opcore::expectation;
use avcp_core::report::CheckRecord;
use avcp_core::suite::run_named_check;
use avcp_core::{Execution, Result as CoreResult};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Experiment, ExperimentConfig, ResolvedCheck};

pub const REPORT_SCHEMA: &str = "avcp-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub check: String,
    pub arrangement: String,
    pub runs: usize,
    pub mean: f64,
    pub stderr: f64,
    pub exact: f64,
    pub support: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub version: String,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    #[serde(default)]
    pub monte_carlo: Vec<McRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: Option<ExperimentConfig>, seed: u64, exec: Execution, checks: Vec<CheckRecord>, mc: Vec<McRecord>) -> Self {
        let failed = checks.iter().filter(|r| !r.pass).count();
        Report {
            schema_version: REPORT_SCHEMA.into(),
            config,
            environment: Environment { seed, version: avcp_core::VERSION.into(), execution: exec },
            summary: Summary { checks: checks.len(), failed },
            checks,
            monte_carlo: mc,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }
}

enum Failure {
    Config(ConfigError),
    Eval(avcp_core::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<avcp_core::Error> for Failure {
    fn from(e: avcp_core::Error) -> Self {
        Failure::Eval(e)
    }
}

const MODULE: &str = "config";

/// Runs every check in declaration order. Configuration problems found
/// while running (bad state specs, dimension clashes) abort the run; errors
/// inside a computation become failed records.
pub fn run(exp: &Experiment, exec: Execution, tol_override: Option<f64>) -> Result<Report, ConfigError> {
    let results = exec.map_slice(&exp.checks, |ch| {
        let mut mc = Vec::new();
        let tol = tol_override.unwrap_or(ch.tol);
        let out = evaluate(exp, ch, tol, exec, &mut mc);
        (out, mc)
    });
    let mut checks = Vec::new();
    let mut mcs = Vec::new();
    for (ch, (out, mc)) in exp.checks.iter().zip(results) {
        match out {
            Ok(recs) => checks.extend(recs),
            Err(Failure::Config(e)) => return Err(e),
            Err(Failure::Eval(e)) => checks.push(CheckRecord::error(MODULE, &ch.name, &e)),
        }
        mcs.extend(mc);
    }
    Ok(Report::new(Some(exp.config.clone()), exp.config.seed, exec, checks, mcs))
}

fn default_states(ch: &ResolvedCheck) -> Vec<String> {
    ch.spec.states.clone().unwrap_or_else(|| vec!["haar:50".into(), "basis".into()])
}

fn evaluate(exp: &Experiment, ch: &ResolvedCheck, tol: f64, exec: Execution, mc: &mut Vec<McRecord>) -> Result<Vec<CheckRecord>, Failure> {
    let path = format!("checks[{}]", ch.index);
    let s = &ch.spec;
    let name = ch.name.clone();
    let salt = ch.index as u64;
    let arr = || exp.arrangement(s.arrangement.as_deref().unwrap_or(""), &format!("{path}.arrangement"));
    let op = || exp.operator(s.operator.as_deref().unwrap_or(""), &format!("{path}.operator"));
    let rec = match s.kind.as_str() {
        "avcp" => {
            let a = arr()?;
            let states = exp.states(&default_states(ch), &path, salt)?;
            let rep = avcp_check(a, op()?, &states, tol)?;
            if s.expect_fail {
                CheckRecord::flag(MODULE, name, rep.failures() > 0, true)
                    .with_note(format!("{} of {} states fail, max deviation {:.3e}", rep.failures(), states.len(), rep.max_deviation))
            } else {
                CheckRecord::residual(MODULE, name, rep.max_deviation, tol).with_note(format!("{} states", states.len()))
            }
        }
        "means" => {
            let a = arr()?;
            let factors = s.factors.clone().unwrap_or_default();
            let states = exp.states(&default_states(ch), &path, salt)?;
            let mut worst: f64 = 0.0;
            for v in &states {
                let at_t1 = a.state_at_t1(v)?;
                let mut prod = 1.0;
                for (j, f) in factors.iter().enumerate() {
                    prod *= expectation(exp.operator(f, &format!("{path}.factors[{j}]"))?, &at_t1)?;
                }
                worst = worst.max((exact_expected_output(a, v)? - prod).abs());
            }
            CheckRecord::residual(MODULE, name, worst, tol).with_note(format!("{} states", states.len()))
        }
        "mc" | "support" => {
            let a = arr()?;
            let states = exp.states(&s.states.clone().unwrap_or_else(|| vec!["haar:1".into()]), &path, salt)?;
            let v = states.first().ok_or_else(|| ConfigError { path: format!("{path}.states"), message: "selects no state".into() })?;
            let runs = s.runs.unwrap_or(exp.config.runs);
            let opts = McOptions { execution: exec, ..McOptions::new(runs, exp.config.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)) };
            let est = mc_expected_output(a, v, &opts)?;
            let exact = exact_expected_output(a, v)?;
            mc.push(McRecord {
                check: name.clone(),
                arrangement: s.arrangement.clone().unwrap_or_default(),
                runs,
                mean: est.mean,
                stderr: est.stderr,
                exact,
                support: est.support.clone(),
            });
            if s.kind == "mc" {
                let sigmas = s.sigmas.unwrap_or(5.0);
                let band = (sigmas * est.stderr).max(tol);
                CheckRecord::compare(MODULE, name, est.mean, exact, band).with_note(format!("tol = max({sigmas} stderr, tol)"))
            } else {
                let want = s.values.clone().unwrap_or_default();
                let err = if want.len() == est.support.len() {
                    want.iter().zip(&est.support).map(|(w, g)| (w - g).abs()).fold(0.0, f64::max)
                } else {
                    f64::INFINITY
                };
                CheckRecord::residual(MODULE, name, err, tol).with_note(format!("support {:?}", est.support))
            }
        }
        "spectrum" => {
            let ev = op()?.spectrum()?.eigenvalues;
            let mut want = s.values.clone().unwrap_or_default();
            want.sort_by(f64::total_cmp);
            let err = if want.len() == ev.len() {
                want.iter().zip(ev.iter()).map(|(w, g)| (w - g).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            CheckRecord::residual(MODULE, name, err, tol).with_note(format!("eigenvalues {:?}", ev.as_slice()))
        }
        "representing" => {
            let a = arr()?;
            let rep = solve_representing_operator(a, &SolveOptions { seed: exp.config.seed ^ salt, ..Default::default() })?;
            match (&rep, s.infeasible) {
                (Representation::Infeasible { residual, .. }, true) => {
                    CheckRecord::flag(MODULE, name, true, true).with_note(format!("infeasible, fit residual {residual:.3e}"))
                }
                (Representation::Representing(c), true) => {
                    CheckRecord::flag(MODULE, name, false, true).with_note(format!("representable, |C| = {:.3e}", c.norm()))
                }
                (Representation::Representing(c), false) => {
                    let d = (c.matrix() - op()?.matrix()).singular_values().max();
                    CheckRecord::residual(MODULE, name, d, tol).with_note("operator-norm distance")
                }
                (Representation::Infeasible { residual, .. }, false) => {
                    CheckRecord::flag(MODULE, name, false, true).with_note(format!("infeasible, fit residual {residual:.3e}"))
                }
            }
        }
        "distinct" => {
            let names = s.arrangements.clone().unwrap_or_default();
            let arrs = names
                .iter()
                .enumerate()
                .map(|(j, n)| exp.arrangement(n, &format!("{path}.arrangements[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let states = exp.states(&default_states(ch), &path, salt)?;
            let mut best: f64 = 0.0;
            for v in &states {
                let outs = arrs.iter().map(|a| exact_expected_output(a, v)).collect::<CoreResult<Vec<f64>>>()?;
                let mut gap = f64::INFINITY;
                for i in 0..outs.len() {
                    for j in i + 1..outs.len() {
                        gap = gap.min((outs[i] - outs[j]).abs());
                    }
                }
                best = best.max(gap);
            }
            let r = CheckRecord::compare(MODULE, name, best, 0.0, tol);
            CheckRecord { pass: best > tol, ..r }.with_note("passes when the smallest pairwise gap exceeds tol on some state")
        }
        "conformance" => {
            let v = arr()?.conformance()?;
            CheckRecord::flag(MODULE, name, !v.is_empty(), s.expect_violation).with_note(v.join("; "))
        }
        "builtin" => {
            let n = s.check.as_deref().unwrap_or("");
            let recs = run_named_check(n, exp.config.seed, exec)
                .ok_or_else(|| ConfigError { path: format!("{path}.check"), message: format!("unknown named check `{n}`") })?;
            return Ok(recs);
        }
        k => return Err(ConfigError { path: format!("{path}.kind"), message: format!("unknown check kind `{k}`") }.into()),
    };
    Ok(vec![rec])
}
