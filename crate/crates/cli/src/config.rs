//! Experiment configuration: TOML schema and validation into runnable parts.

use std::collections::BTreeMap;
use std::fmt;

use avcp_core::arrange::{Arrangement, Background};
use avcp_core::dynamics::propagator;
use avcp_core::lattice::{lattice_momentum, lattice_position, LatticeConfig};
use avcp_core::opcore::{c, haar_state, hermitian_from_matrix, tensor, ComplexMatrix, HermitianOperator, StateVector};
use avcp_core::spin::{angular_momentum, Axis};
use avcp_core::suite::{named_check, DEFAULT_SEED};
use avcp_core::symalg::{nc_to_matrix, Algebra, Symbol};
use avcp_core::StreamFactory;
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA: &str = "avcp-config/1";

pub const BUILTIN_OPERATORS: [(&str, &str); 8] = [
    ("pauli_x", "2x2 Pauli sigma_x"),
    ("pauli_y", "2x2 Pauli sigma_y"),
    ("pauli_z", "2x2 Pauli sigma_z"),
    ("spin_j", "component `axis` (x|y|z) of the spin triple of dimension `n`, units of hbar"),
    ("lattice_x", "position on `sites` sites with `spacing`"),
    ("lattice_p", "momentum on `sites` sites with `spacing`, units of hbar"),
    ("identity", "identity of dimension `n`"),
    ("zero", "zero operator of dimension `n`"),
];

pub const CHECK_KINDS: [(&str, &str); 9] = [
    ("avcp", "exact output equals <operator> at t2 on `states` (or fails on some state with expect_fail)"),
    ("means", "exact output equals the product of <factor> at t1 on `states`"),
    ("mc", "Monte Carlo mean within `sigmas` stderr of the exact output"),
    ("support", "Monte Carlo output values equal `values` within tol"),
    ("spectrum", "eigenvalues of `operator` equal `values` within tol"),
    ("representing", "solver recovers `operator`, or reports infeasible with infeasible = true"),
    ("distinct", "outputs of `arrangements` pairwise differ by more than tol on some state"),
    ("conformance", "copy-rule violations present iff expect_violation"),
    ("builtin", "named suite check `check` (see list)"),
];

/// Validation failure with the path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn err<T>(path: impl Into<String>, message: impl fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError { path: path.into(), message: message.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub arrangements: Vec<ArrangementSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_runs() -> usize {
    100_000
}
fn default_hbar() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}

/// One of `builtin`, `matrix`, `random`, `kron`, `expr`, `evolve`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Rows of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    /// Dimension of a random Hermitian operator drawn from the config seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kron: Option<Vec<String>>,
    /// Operator expression over non-`expr` operators, e.g. `1/2*(A*B + B*A)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// `W F W^dagger` for `W = exp(-i H time / hbar)`; `F` may be an `expr`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub label: String,
    pub operator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Copies {
    /// Only `"auto"` is accepted.
    Auto(String),
    Explicit(Vec<usize>),
}

impl Default for Copies {
    fn default() -> Self {
        Copies::Auto("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    pub hamiltonian: String,
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementSpec {
    pub name: String,
    pub measure: Vec<MeasureSpec>,
    #[serde(default)]
    pub copies: Copies,
    pub combine: String,
    /// Opt in to noncommuting measurements sharing a copy.
    #[serde(default)]
    pub sequential: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scalars: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<BackgroundSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrangement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrangements: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<String>>,
    /// `haar:N`, `basis`, `eigen:NAME`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_fail: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub infeasible: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError { path: String::new(), message: e.to_string().trim_end().to_string() })
}

/// A check whose references have been resolved.
#[derive(Debug, Clone)]
pub struct ResolvedCheck {
    pub index: usize,
    pub spec: CheckSpec,
    pub name: String,
    pub tol: f64,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub operators: BTreeMap<String, HermitianOperator>,
    pub arrangements: BTreeMap<String, Arrangement>,
    pub checks: Vec<ResolvedCheck>,
}

impl Experiment {
    /// Named states for a check; Haar samples come from stream `salt`.
    pub fn states(&self, specs: &[String], path: &str, salt: u64) -> Result<Vec<StateVector>, ConfigError> {
        let dim = self.dim(path)?;
        let mut rng = StreamFactory::new(self.config.seed).derive(2).stream(salt);
        let mut out = Vec::new();
        for (k, s) in specs.iter().enumerate() {
            let p = format!("{path}.states[{k}]");
            if s == "basis" {
                out.extend((0..dim).map(|i| StateVector::basis(dim, i)));
            } else if let Some(n) = s.strip_prefix("haar:") {
                let n: usize = n.parse().or_else(|_| err(&p, format!("bad count in `{s}`")))?;
                out.extend((0..n).map(|_| haar_state(dim, &mut rng)));
            } else if let Some(name) = s.strip_prefix("eigen:") {
                let op = self.operator(name, &p)?;
                let sp = op.spectrum().or_else(|e| err(&p, e))?;
                out.extend((0..sp.dim()).map(|i| sp.eigenvector(i)));
            } else {
                return err(p, format!("unknown state set `{s}` (haar:N, basis, eigen:NAME)"));
            }
        }
        if out.iter().any(|v| v.dim() != dim) {
            return err(path, "state dimension differs from the arrangement");
        }
        Ok(out)
    }

    pub fn operator(&self, name: &str, path: &str) -> Result<&HermitianOperator, ConfigError> {
        self.operators.get(name).map_or_else(|| err(path, format!("unknown operator `{name}`")), Ok)
    }

    pub fn arrangement(&self, name: &str, path: &str) -> Result<&Arrangement, ConfigError> {
        self.arrangements.get(name).map_or_else(|| err(path, format!("unknown arrangement `{name}`")), Ok)
    }

    fn dim(&self, path: &str) -> Result<usize, ConfigError> {
        match (self.config.dimension, self.arrangements.values().next(), self.operators.values().next()) {
            (Some(d), _, _) => Ok(d),
            (None, Some(a), _) => Ok(a.dim()),
            (None, None, Some(o)) => Ok(o.dim()),
            _ => err(path, "cannot infer the state dimension"),
        }
    }
}

fn axis(s: &str, path: &str) -> Result<Axis, ConfigError> {
    match s {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        "z" => Ok(Axis::Z),
        _ => err(path, format!("axis must be x, y or z, not `{s}`")),
    }
}

fn builtin(name: &str, spec: &OperatorSpec, hbar: f64, path: &str) -> Result<HermitianOperator, ConfigError> {
    let need_n = || spec.n.map_or_else(|| err(format!("{path}.n"), "required by this builtin"), Ok);
    let lattice = || {
        let sites = spec.sites.map_or_else(|| err(format!("{path}.sites"), "required by lattice builtins"), Ok)?;
        LatticeConfig::new(sites, spec.spacing.unwrap_or(1.0), hbar).or_else(|e| err(path, e))
    };
    Ok(match name {
        "pauli_x" => HermitianOperator::pauli_x(),
        "pauli_y" => HermitianOperator::pauli_y(),
        "pauli_z" => HermitianOperator::pauli_z(),
        "identity" => HermitianOperator::identity(need_n()?),
        "zero" => HermitianOperator::zeros(need_n()?),
        "spin_j" => {
            let n = need_n()?;
            if n == 0 {
                return err(format!("{path}.n"), "must be at least 1");
            }
            let a = axis(spec.axis.as_deref().unwrap_or(""), &format!("{path}.axis"))?;
            angular_momentum(n, hbar).component(a).clone()
        }
        "lattice_x" => lattice_position(&lattice()?),
        "lattice_p" => lattice_momentum(&lattice()?),
        _ => return err(format!("{path}.builtin"), format!("unknown builtin `{name}`")),
    })
}

fn plain_operator(
    spec: &OperatorSpec,
    hbar: f64,
    random: &mut dyn FnMut(usize) -> HermitianOperator,
    path: &str,
) -> Result<Option<HermitianOperator>, ConfigError> {
    let sources = [
        spec.builtin.is_some(),
        spec.matrix.is_some(),
        spec.random.is_some(),
        spec.kron.is_some(),
        spec.expr.is_some(),
        spec.evolve.is_some(),
    ];
    match sources.iter().filter(|&&s| s).count() {
        1 => {}
        0 => return err(path, "needs one of builtin, matrix, random, kron, expr, evolve"),
        _ => return err(path, "give only one of builtin, matrix, random, kron, expr, evolve"),
    }
    if spec.evolve.is_none() && (spec.hamiltonian.is_some() || spec.time.is_some()) {
        return err(path, "hamiltonian and time only apply to evolve");
    }
    if let Some(b) = &spec.builtin {
        return builtin(b, spec, hbar, path).map(Some);
    }
    if let Some(rows) = &spec.matrix {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return err(format!("{path}.matrix"), "must be a nonempty square array of [re, im] pairs");
        }
        let m = ComplexMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1]));
        return hermitian_from_matrix(m, 1e-12).map(Some).or_else(|e| err(format!("{path}.matrix"), e));
    }
    if let Some(d) = spec.random {
        if d == 0 {
            return err(format!("{path}.random"), "dimension must be positive");
        }
        return Ok(Some(random(d)));
    }
    Ok(None)
}

/// Validates `cfg` and builds every operator and arrangement.
pub fn build(cfg: ExperimentConfig) -> Result<Experiment, ConfigError> {
    if let Some(s) = &cfg.schema {
        if s != CONFIG_SCHEMA {
            return err("schema", format!("expected `{CONFIG_SCHEMA}`, found `{s}`"));
        }
    }
    if !(cfg.hbar > 0.0 && cfg.hbar.is_finite()) {
        return err("hbar", "must be positive");
    }
    if !(cfg.tol >= 0.0) {
        return err("tol", "must be nonnegative");
    }
    if cfg.runs == 0 {
        return err("runs", "must be positive");
    }
    // Random operators draw from one stream in name order, so the result
    // depends only on the seed and the operator table.
    let mut rng = StreamFactory::new(cfg.seed).derive(1).stream(0);
    let mut ops: BTreeMap<String, HermitianOperator> = BTreeMap::new();
    for (name, spec) in &cfg.operators {
        let path = format!("operators.{name}");
        if let Some(op) = plain_operator(spec, cfg.hbar, &mut |d| HermitianOperator::random(d, &mut rng), &path)? {
            ops.insert(name.clone(), op);
        }
    }
    for (name, spec) in &cfg.operators {
        let path = format!("operators.{name}");
        if let Some(parts) = &spec.kron {
            let mut it = parts.iter().enumerate().map(|(k, p)| {
                ops.get(p).cloned().map_or_else(|| err(format!("{path}.kron[{k}]"), format!("unknown plain operator `{p}`")), Ok)
            });
            let first = it.next().unwrap_or_else(|| err(format!("{path}.kron"), "is empty"))?;
            let prod = it.try_fold(first, |acc, b| b.map(|b| tensor(&acc, &b)))?;
            ops.insert(name.clone(), prod);
        }
    }
    let plain = ops.clone();
    for (name, spec) in &cfg.operators {
        if let Some(text) = &spec.expr {
            let path = format!("operators.{name}.expr");
            let alg = Algebra::builder().observables(plain.keys().map(String::as_str)).free().build().or_else(|e| err(&path, e))?;
            let p = alg.parse_operator(text).or_else(|e| err(&path, e))?;
            let used: std::collections::BTreeSet<&Symbol> = p.terms().flat_map(|(k, _)| k.word.iter()).collect();
            let bind: BTreeMap<Symbol, HermitianOperator> = plain
                .iter()
                .map(|(k, v)| (Symbol::from(k.as_str()), v.clone()))
                .filter(|(k, _)| used.is_empty() || used.contains(k))
                .collect();
            let scalars = BTreeMap::from([(Symbol::from("hbar"), cfg.hbar)]);
            let m = nc_to_matrix(&p, &bind, &scalars).or_else(|e| err(&path, e))?;
            ops.insert(name.clone(), hermitian_from_matrix(m, 1e-10).or_else(|e| err(&path, e))?);
        }
    }
    for (name, spec) in &cfg.operators {
        if let Some(f) = &spec.evolve {
            let path = format!("operators.{name}");
            let get = |n: &str, p: String| ops.get(n).cloned().map_or_else(|| err(p, format!("unknown operator `{n}`")), Ok);
            let f = get(f, format!("{path}.evolve"))?;
            let hn = spec.hamiltonian.as_deref().map_or_else(|| err(format!("{path}.hamiltonian"), "required by evolve"), Ok)?;
            let h = get(hn, format!("{path}.hamiltonian"))?;
            let t = spec.time.map_or_else(|| err(format!("{path}.time"), "required by evolve"), Ok)?;
            let w = propagator(&h, t, cfg.hbar).or_else(|e| err(&path, e))?;
            ops.insert(name.clone(), f.conjugate_by(&w.adjoint()).or_else(|e| err(&path, e))?);
        }
    }
    if let Some(d) = cfg.dimension {
        for (name, op) in &ops {
            if op.dim() != d && cfg.arrangements.iter().any(|a| uses(a, name)) {
                return err(format!("operators.{name}"), format!("dimension {} but config dimension is {d}", op.dim()));
            }
        }
    }

    let mut arrangements = BTreeMap::new();
    for (k, a) in cfg.arrangements.iter().enumerate() {
        let path = format!("arrangements[{k}]");
        if arrangements.contains_key(&a.name) {
            return err(format!("{path}.name"), format!("duplicate arrangement `{}`", a.name));
        }
        let get = |n: &str, p: String| ops.get(n).cloned().map_or_else(|| err(p, format!("unknown operator `{n}`")), Ok);
        let mut b = Arrangement::builder();
        for (j, m) in a.measure.iter().enumerate() {
            let op = get(&m.operator, format!("{path}.measure[{j}].operator"))?;
            b = match m.subsystem {
                Some(s) => b.measure_on(&m.label, op, s),
                None => b.measure(&m.label, op),
            };
        }
        match &a.copies {
            Copies::Auto(s) if s == "auto" => {}
            Copies::Auto(s) => return err(format!("{path}.copies"), format!("expected \"auto\" or a list, found `{s}`")),
            Copies::Explicit(v) => b = b.copies(v.clone()),
        }
        if a.sequential {
            b = b.sequential_noncommuting();
        }
        for (s, v) in &a.scalars {
            b = b.scalar(s, *v);
        }
        if let Some(t) = &a.target {
            b = b.target(&t.label, get(&t.operator, format!("{path}.target.operator"))?);
        }
        let hbar = cfg.hbar;
        match &a.background {
            Some(bg) => {
                let h = get(&bg.hamiltonian, format!("{path}.background.hamiltonian"))?;
                if !(bg.t0 <= bg.t1 && bg.t1 <= bg.t2) {
                    return err(format!("{path}.background"), "times must satisfy t0 <= t1 <= t2");
                }
                b = b.background(Background { hamiltonian: h, hbar, t0: bg.t0, t1: bg.t1, t2: bg.t2 });
            }
            None => b = b.scalar("hbar", hbar),
        }
        let arr = b.combine(&a.combine).build().or_else(|e| err(&path, e))?;
        arrangements.insert(a.name.clone(), arr);
    }

    let mut checks = Vec::new();
    for (k, ch) in cfg.checks.iter().enumerate() {
        let path = format!("checks[{k}]");
        if !CHECK_KINDS.iter().any(|(n, _)| *n == ch.kind) {
            return err(format!("{path}.kind"), format!("unknown check kind `{}`", ch.kind));
        }
        let needs_arr = matches!(ch.kind.as_str(), "avcp" | "means" | "mc" | "support" | "representing" | "conformance");
        if needs_arr {
            let name = ch.arrangement.as_deref().map_or_else(|| err(format!("{path}.arrangement"), "required"), Ok)?;
            if !arrangements.contains_key(name) {
                return err(format!("{path}.arrangement"), format!("unknown arrangement `{name}`"));
            }
        }
        let needs_op = matches!(ch.kind.as_str(), "avcp" | "spectrum") || (ch.kind == "representing" && !ch.infeasible);
        if needs_op {
            let name = ch.operator.as_deref().map_or_else(|| err(format!("{path}.operator"), "required"), Ok)?;
            if !ops.contains_key(name) {
                return err(format!("{path}.operator"), format!("unknown operator `{name}`"));
            }
        }
        match ch.kind.as_str() {
            "means" => {
                let f = ch.factors.as_ref().map_or_else(|| err(format!("{path}.factors"), "required"), Ok)?;
                if let Some((j, n)) = f.iter().enumerate().find(|(_, n)| !ops.contains_key(n.as_str())) {
                    return err(format!("{path}.factors[{j}]"), format!("unknown operator `{n}`"));
                }
            }
            "support" | "spectrum" if ch.values.is_none() => return err(format!("{path}.values"), "required"),
            "distinct" => {
                let list = ch.arrangements.as_ref().map_or_else(|| err(format!("{path}.arrangements"), "required"), Ok)?;
                if list.len() < 2 {
                    return err(format!("{path}.arrangements"), "needs at least two");
                }
                if let Some((j, n)) = list.iter().enumerate().find(|(_, n)| !arrangements.contains_key(n.as_str())) {
                    return err(format!("{path}.arrangements[{j}]"), format!("unknown arrangement `{n}`"));
                }
            }
            "builtin" => {
                let n = ch.check.as_deref().map_or_else(|| err(format!("{path}.check"), "required"), Ok)?;
                if named_check(n).is_none() {
                    return err(format!("{path}.check"), format!("unknown named check `{n}`"));
                }
            }
            _ => {}
        }
        if let Some(t) = ch.tol {
            if !(t >= 0.0) {
                return err(format!("{path}.tol"), "must be nonnegative");
            }
        }
        let name = ch.name.clone().unwrap_or_else(|| {
            let target = ch.arrangement.clone().or(ch.check.clone()).or(ch.operator.clone()).unwrap_or_default();
            format!("{} {target}", ch.kind).trim().to_string()
        });
        checks.push(ResolvedCheck { index: k, spec: ch.clone(), name, tol: ch.tol.unwrap_or(cfg.tol) });
    }
    Ok(Experiment { config: cfg, operators: ops, arrangements, checks })
}

fn uses(a: &ArrangementSpec, op: &str) -> bool {
    a.measure.iter().any(|m| m.operator == op)
        || a.target.as_ref().is_some_and(|t| t.operator == op)
        || a.background.as_ref().is_some_and(|b| b.hamiltonian == op)
}
