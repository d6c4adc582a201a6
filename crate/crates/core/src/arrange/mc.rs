use serde::Serialize;

use crate::opcore::{check_dim, default_eig_tol, sample_outcome, OutcomeDistribution, ProjectiveMeasurement, StateVector};
use crate::{Execution, Result, StreamFactory};

use super::Arrangement;

#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub runs: usize,
    pub master_seed: u64,
    /// How many leading runs to return as [`RunRecord`]s.
    pub keep_records: usize,
    pub execution: Execution,
}

impl McOptions {
    pub fn new(runs: usize, master_seed: u64) -> Self {
        Self { runs, master_seed, keep_records: 0, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub stream: u64,
    pub values: Vec<(String, f64)>,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub runs: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(runs)`; zero for a single run.
    pub stderr: f64,
    /// Distinct outputs observed, ascending.
    pub support: Vec<f64>,
    pub records: Vec<RunRecord>,
}

struct Plan {
    groups: Vec<Vec<usize>>,
    ms: Vec<ProjectiveMeasurement>,
    /// Distribution of the first measurement on each copy; every run starts
    /// from the same state, so it is computed once.
    first: Vec<OutcomeDistribution>,
}

impl Plan {
    fn new(arr: &Arrangement, v: &StateVector) -> Result<Self> {
        let ms = arr
            .measurements()
            .iter()
            .map(|m| ProjectiveMeasurement::new(&m.operator, default_eig_tol(&m.operator)))
            .collect::<Result<Vec<_>>>()?;
        let groups = arr.copy_groups();
        let first = groups.iter().map(|g| ms[g[0]].distribution(v)).collect::<Result<Vec<_>>>()?;
        Ok(Self { groups, ms, first })
    }

    fn run(&self, arr: &Arrangement, factory: &StreamFactory, r: usize, values: &mut [f64]) -> Result<f64> {
        let mut rng = factory.stream(r as u64);
        for (g, d) in self.groups.iter().zip(&self.first) {
            let (x, mut state) = sample_outcome(d, &mut rng);
            values[g[0]] = x;
            for &i in &g[1..] {
                let (x, next) = self.ms[i].sample(&state, &mut rng)?;
                values[i] = x;
                state = next;
            }
        }
        Ok(arr.combiner().eval(values))
    }
}

/// Monte Carlo estimate of the expected output. Run `r` draws only from
/// stream `r` of the master seed, so the estimate does not depend on the
/// execution backend.
pub fn mc_expected_output(arr: &Arrangement, v0: &StateVector, opts: &McOptions) -> Result<McEstimate> {
    check_dim(arr.dim(), v0.dim())?;
    if opts.runs == 0 {
        return Err(crate::Error::InvalidParameter("runs must be at least 1".into()));
    }
    let v = arr.state_at_t1(v0)?;
    let plan = Plan::new(arr, &v)?;
    let factory = StreamFactory::new(opts.master_seed);
    let n = arr.measurements().len();
    let outputs = opts
        .execution
        .map_indexed(opts.runs, |r| plan.run(arr, &factory, r, &mut vec![0.0; n]))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;

    let mean = outputs.iter().sum::<f64>() / opts.runs as f64;
    let stderr = if opts.runs > 1 {
        let ss: f64 = outputs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (opts.runs - 1) as f64).sqrt() / (opts.runs as f64).sqrt()
    } else {
        0.0
    };

    let mut sorted = outputs;
    sorted.sort_by(f64::total_cmp);
    let mut support: Vec<f64> = Vec::new();
    for x in sorted {
        match support.last() {
            Some(&y) if (x - y).abs() <= 1e-9 * y.abs().max(1.0) => {}
            _ => support.push(x),
        }
    }

    let labels = arr.labels();
    let mut records = Vec::new();
    for r in 0..opts.keep_records.min(opts.runs) {
        let mut values = vec![0.0; n];
        let output = plan.run(arr, &factory, r, &mut values)?;
        records.push(RunRecord {
            stream: r as u64,
            values: labels.iter().map(|l| l.to_string()).zip(values).collect(),
            output,
        });
    }
    Ok(McEstimate { runs: opts.runs, mean, stderr, support, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrange::exact_expected_output;
    use crate::opcore::{haar_state, HermitianOperator};
    use crate::spin::angular_momentum;

    #[test]
    fn sequential_spin_sum_support() {
        let hbar = 1.3;
        let l = angular_momentum(2, hbar);
        let arr = Arrangement::builder()
            .measure("a", l.x.clone())
            .measure("b", l.z.clone())
            .copies(vec![0, 0])
            .combine("a + b");
        assert!(arr.clone().build().is_err());
        let arr = arr.sequential_noncommuting().build().unwrap();
        let est = mc_expected_output(&arr, &StateVector::basis(2, 0), &McOptions::new(2000, 5)).unwrap();
        assert_eq!(est.support.len(), 3);
        for (got, want) in est.support.iter().zip([-hbar, 0.0, hbar]) {
            assert!((got - want).abs() < 1e-12, "{:?}", est.support);
        }
        let exact = exact_expected_output(&arr, &StateVector::basis(2, 0)).unwrap();
        assert!((est.mean - exact).abs() <= 5.0 * est.stderr);
    }

    #[test]
    fn runs_are_deterministic_and_backend_independent() {
        let mut rng = StreamFactory::new(41).stream(0);
        let a = HermitianOperator::random(3, &mut rng);
        let b = HermitianOperator::random(3, &mut rng);
        let arr = Arrangement::builder().measure("a", a).measure("b", b).combine("a*a + 2*b").build().unwrap();
        let v = haar_state(3, &mut rng);
        let mut opts = McOptions { runs: 20_000, master_seed: 9, keep_records: 3, execution: Execution::Parallel };
        let p = mc_expected_output(&arr, &v, &opts).unwrap();
        opts.execution = Execution::Sequential;
        let s = mc_expected_output(&arr, &v, &opts).unwrap();
        assert_eq!(p, s);
        assert_eq!(p.records.len(), 3);
        let exact = exact_expected_output(&arr, &v).unwrap();
        assert!((p.mean - exact).abs() <= 5.0 * p.stderr);
    }

    #[test]
    fn single_run_of_certain_outcome() {
        let arr = Arrangement::builder().measure("a", HermitianOperator::pauli_z()).combine("3*a").build().unwrap();
        let est = mc_expected_output(&arr, &StateVector::basis(2, 1), &McOptions::new(1, 0)).unwrap();
        assert_eq!(est.mean, -3.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.support, vec![-3.0]);
    }
}
