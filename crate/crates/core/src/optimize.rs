//! Derivative-free local minimization with a recorded evaluation trace.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default initial step / trust-region radius, in radians.
pub const DEFAULT_INITIAL_STEP: f64 = 0.5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Default budget is this many evaluations per parameter.
pub const DEFAULT_EVALS_PER_PARAM: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Powell's linear-approximation trust-region method (COBYLA).
    #[default]
    Cobyla,
    /// Downhill simplex.
    NelderMead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_evaluations: usize,
    pub initial_step: f64,
    pub convergence_tolerance: f64,
    /// Seeds the VQE initial parameters; both methods are themselves deterministic.
    pub seed: u64,
    pub method: Method,
}

impl OptimizerConfig {
    /// Defaults for a problem with `num_params` parameters.
    pub fn for_params(num_params: usize, seed: u64) -> Self {
        Self {
            max_evaluations: DEFAULT_EVALS_PER_PARAM * num_params.max(1),
            initial_step: DEFAULT_INITIAL_STEP,
            convergence_tolerance: DEFAULT_TOLERANCE,
            seed,
            method: Method::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_evaluations == 0 {
            return Err(Error::InvalidInput("max_evaluations must be positive".into()));
        }
        if !(self.initial_step > 0.0) || !(self.convergence_tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "initial step and tolerance must be positive".into(),
            ));
        }
        if self.convergence_tolerance >= self.initial_step {
            return Err(Error::InvalidInput(
                "convergence tolerance must be smaller than the initial step".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub index: usize,
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub evaluations: Vec<Evaluation>,
    pub best_value: f64,
    pub best_params: Vec<f64>,
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    /// Best value seen after each evaluation.
    pub fn running_min(&self) -> Vec<f64> {
        self.evaluations
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.value);
                Some(*best)
            })
            .collect()
    }
}

/// Records every evaluation and enforces the budget.
struct Recorder<F> {
    objective: F,
    budget: usize,
    evaluations: RefCell<Vec<Evaluation>>,
}

impl<F: Fn(&[f64]) -> f64> Recorder<F> {
    fn eval(&self, x: &[f64]) -> f64 {
        let value = (self.objective)(x);
        let mut evals = self.evaluations.borrow_mut();
        if evals.len() < self.budget {
            let index = evals.len();
            evals.push(Evaluation {
                index,
                params: x.to_vec(),
                value,
            });
        }
        value
    }

    fn exhausted(&self) -> bool {
        self.evaluations.borrow().len() >= self.budget
    }

    fn into_trace(self) -> OptimizationTrace {
        let evaluations = self.evaluations.into_inner();
        let best = evaluations
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least one evaluation");
        OptimizationTrace {
            best_value: best.value,
            best_params: best.params.clone(),
            evaluations,
        }
    }
}

/// Minimizes `objective` from `x0`.
///
/// Stops when the trust-region radius (COBYLA) or simplex size
/// (Nelder–Mead) falls below `convergence_tolerance`, or after
/// `max_evaluations` calls. The starting point is always evaluated first, so
/// `best_value <= objective(x0)`.
pub fn minimize<F>(objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<OptimizationTrace>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidInput("cannot optimize over zero parameters".into()));
    }
    let recorder = Recorder {
        objective,
        budget: config.max_evaluations,
        evaluations: RefCell::new(Vec::new()),
    };
    recorder.eval(x0);
    if !recorder.exhausted() {
        match config.method {
            Method::Cobyla => run_cobyla(&recorder, x0, config),
            Method::NelderMead => run_nelder_mead(&recorder, x0, config),
        }
    }
    Ok(recorder.into_trace())
}

fn run_cobyla<F: Fn(&[f64]) -> f64>(rec: &Recorder<F>, x0: &[f64], config: &OptimizerConfig) {
    let n = x0.len();
    let bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
    let no_constraints: &[fn(&[f64], &mut ()) -> f64] = &[];
    let stop = cobyla::StopTols {
        xtol_abs: vec![config.convergence_tolerance; n],
        ..cobyla::StopTols::default()
    };
    // x0 was already spent by the caller
    let budget = config.max_evaluations - 1;
    // Failures (e.g. round-off limits) still leave a valid trace behind.
    let _ = cobyla::minimize(
        |x: &[f64], _: &mut ()| rec.eval(x),
        x0,
        &bounds,
        no_constraints,
        (),
        budget,
        cobyla::RhoBeg::All(config.initial_step),
        Some(stop),
    );
}

fn run_nelder_mead<F: Fn(&[f64]) -> f64>(rec: &Recorder<F>, x0: &[f64], config: &OptimizerConfig) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let first = rec.evaluations.borrow()[0].value;
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), first)];
    for i in 0..n {
        if rec.exhausted() {
            return;
        }
        let mut x = x0.to_vec();
        x[i] += config.initial_step;
        let f = rec.eval(&x);
        simplex.push((x, f));
    }

    let along = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| crate::sq_dist(x, &simplex[0].0).sqrt())
            .fold(0.0, f64::max);
        if size < config.convergence_tolerance || rec.exhausted() {
            return;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, v)| *c += v / n as f64);
        }
        let (worst, f_worst) = simplex[n].clone();
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;

        let reflected = along(&centroid, &worst, -REFLECT);
        let f_r = rec.eval(&reflected);
        if f_r < f_best {
            if rec.exhausted() {
                simplex[n] = (reflected, f_r);
                continue;
            }
            let expanded = along(&centroid, &worst, -EXPAND);
            let f_e = rec.eval(&expanded);
            simplex[n] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < f_second {
            simplex[n] = (reflected, f_r);
            continue;
        }
        if rec.exhausted() {
            return;
        }
        let (contracted, f_c) = if f_r < f_worst {
            let x = along(&centroid, &reflected, CONTRACT);
            let f = rec.eval(&x);
            (x, f)
        } else {
            let x = along(&centroid, &worst, CONTRACT);
            let f = rec.eval(&x);
            (x, f)
        };
        if f_c < f_worst.min(f_r) {
            simplex[n] = (contracted, f_c);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if rec.exhausted() {
                return;
            }
            let x = along(&best, &vertex.0, SHRINK);
            let f = rec.eval(&x);
            *vertex = (x, f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(method: Method, max_evaluations: usize) -> OptimizerConfig {
        OptimizerConfig {
            max_evaluations,
            initial_step: 0.5,
            convergence_tolerance: 1e-6,
            seed: 0,
            method,
        }
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn parabola_converges() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let t = minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &config(method, 500)).unwrap();
            assert!((t.best_params[0] - 3.0).abs() < 1e-3, "{method:?}: {:?}", t.best_params);
        }
    }

    #[test]
    fn constant_objective_terminates_on_tolerance() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let t = minimize(|_| 4.25, &[1.0, 2.0], &config(method, 10_000)).unwrap();
            assert_eq!(t.best_value, 4.25);
            assert!(t.len() < 10_000, "{method:?} used the whole budget");
        }
    }

    #[test]
    fn rosenbrock_within_budget() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let t = minimize(rosenbrock, &[-1.2, 1.0], &config(method, 2000)).unwrap();
            assert!(t.len() <= 2000);
            assert!(t.best_value < 1e-2, "{method:?}: {}", t.best_value);
        }
    }

    #[test]
    fn budget_and_start_point_respected() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let t = minimize(rosenbrock, &[-1.2, 1.0], &config(method, 7)).unwrap();
            assert!(t.len() <= 7);
            assert_eq!(t.evaluations[0].params, vec![-1.2, 1.0]);
            assert!(t.best_value <= rosenbrock(&[-1.2, 1.0]));
            let run = t.running_min();
            assert!(run.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*run.last().unwrap(), t.best_value);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(minimize(rosenbrock, &[0.0, 0.0], &config(Method::Cobyla, 0)).is_err());
        let mut c = config(Method::Cobyla, 10);
        c.convergence_tolerance = 1.0;
        assert!(minimize(rosenbrock, &[0.0, 0.0], &c).is_err());
        assert!(minimize(|_| 0.0, &[], &config(Method::Cobyla, 10)).is_err());
    }
}
