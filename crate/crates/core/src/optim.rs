//! Thin adapters from closures over `&[f64]` to the argmin solvers.

use std::sync::{Arc, Mutex};

use argmin::core::observers::{Observe, ObserverMode};
use argmin::core::{
    CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus, KV,
};
use argmin::solver::brent::BrentOpt;
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::LBFGS;

use crate::error::{Error, Result};

/// Outcome of one local search.
#[derive(Debug, Clone)]
pub(crate) struct LocalMin {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    /// True when the solver stopped on its own criterion rather than the
    /// iteration cap.
    pub converged: bool,
}

fn numerical(e: argmin::core::Error) -> Error {
    Error::Numerical(format!("optimizer: {e}"))
}

fn converged(status: &TerminationStatus) -> bool {
    matches!(
        status,
        TerminationStatus::Terminated(r) if *r != TerminationReason::MaxItersReached
    )
}

struct Cost<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Cost<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.0)(p))
    }
}

struct Scalar<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Scalar<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, p: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.0)(*p))
    }
}

/// Nelder–Mead from an axis-aligned simplex of edge `scale` around `x0`.
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: f64,
    max_iters: u64,
    sd_tolerance: f64,
) -> Result<LocalMin> {
    let mut simplex = vec![x0.to_vec()];
    for k in 0..x0.len() {
        let mut v = x0.to_vec();
        v[k] += scale;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(sd_tolerance)
        .map_err(numerical)?;
    let res = Executor::new(Cost(f), solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(numerical)?;
    let state = res.state();
    Ok(LocalMin {
        x: state
            .get_best_param()
            .cloned()
            .unwrap_or_else(|| x0.to_vec()),
        value: state.get_best_cost(),
        iterations: state.get_iter(),
        converged: converged(state.get_termination_status()),
    })
}

/// Brent minimization of a scalar function on `[lo, hi]`.
pub(crate) fn brent<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, max_iters: u64) -> Result<LocalMin> {
    let solver = BrentOpt::new(lo, hi).set_tolerance(1e-12, 1e-12);
    let res = Executor::new(Scalar(f), solver)
        .configure(|s| s.max_iters(max_iters))
        .run()
        .map_err(numerical)?;
    let state = res.state();
    Ok(LocalMin {
        x: vec![state.get_best_param().copied().unwrap_or(0.5 * (lo + hi))],
        value: state.get_best_cost(),
        iterations: state.get_iter(),
        converged: converged(state.get_termination_status()),
    })
}

/// Central-difference gradient with step `h`.
pub(crate) fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + h;
            let up = f(&p);
            p[k] = x[k] - h;
            let down = f(&p);
            p[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

struct Smooth<F, G>(F, G);

impl<F: Fn(&[f64]) -> f64, G> CostFunction for Smooth<F, G> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok((self.0)(p))
    }
}

impl<F, G: Fn(&[f64]) -> Vec<f64>> Gradient for Smooth<F, G> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok((self.1)(p))
    }
}

/// L-BFGS with a Moré–Thuente line search. Every accepted iterate satisfies
/// the sufficient-decrease condition, so the cost never increases.
pub(crate) fn lbfgs<F, G>(f: F, grad: G, x0: &[f64], max_iters: u64, tol: f64) -> Result<LocalMin>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(tol)
        .map_err(numerical)?
        .with_tolerance_cost(tol * 1e-3)
        .map_err(numerical)?;
    let res = Executor::new(Smooth(f, grad), solver)
        .configure(|s| s.param(x0.to_vec()).max_iters(max_iters))
        .run()
        .map_err(numerical)?;
    let state = res.state();
    Ok(LocalMin {
        x: state
            .get_best_param()
            .cloned()
            .unwrap_or_else(|| x0.to_vec()),
        value: state.get_best_cost(),
        iterations: state.get_iter(),
        converged: converged(state.get_termination_status()),
    })
}

#[derive(Clone, Default)]
struct CostLog(Arc<Mutex<Vec<f64>>>);

impl<I: State<Float = f64>> Observe<I> for CostLog {
    fn observe_init(
        &mut self,
        _: &str,
        state: &I,
        _: &KV,
    ) -> std::result::Result<(), argmin::core::Error> {
        self.0.lock().unwrap().push(state.get_cost());
        Ok(())
    }

    fn observe_iter(&mut self, state: &I, _: &KV) -> std::result::Result<(), argmin::core::Error> {
        self.0.lock().unwrap().push(state.get_cost());
        Ok(())
    }
}

/// [`lbfgs`] that also returns the cost after initialization and after each
/// iteration.
pub(crate) fn lbfgs_traced<F, G>(
    f: F,
    grad: G,
    x0: &[f64],
    max_iters: u64,
    tol: f64,
) -> Result<(LocalMin, Vec<f64>)>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
        .with_tolerance_grad(tol)
        .map_err(numerical)?
        .with_tolerance_cost(tol * 1e-3)
        .map_err(numerical)?;
    let log = CostLog::default();
    let res = Executor::new(Smooth(f, grad), solver)
        .configure(|s| s.param(x0.to_vec()).max_iters(max_iters))
        .add_observer(log.clone(), ObserverMode::Always)
        .run()
        .map_err(numerical)?;
    let state = res.state();
    let history = std::mem::take(&mut *log.0.lock().unwrap());
    Ok((
        LocalMin {
            x: state
                .get_best_param()
                .cloned()
                .unwrap_or_else(|| x0.to_vec()),
            value: state.get_best_cost(),
            iterations: state.get_iter(),
            converged: converged(state.get_termination_status()),
        },
        history,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn solvers_find_known_minima() {
        let nm = nelder_mead(rosenbrock, &[-1.0, 1.0], 0.5, 5000, 1e-14).unwrap();
        assert!(nm.value < 1e-8, "{nm:?}");
        let g = |x: &[f64]| central_gradient(&rosenbrock, x, 1e-6);
        let lb = lbfgs(rosenbrock, g, &[-1.2, 1.0], 500, 1e-10).unwrap();
        assert!((lb.x[0] - 1.0).abs() < 1e-5 && lb.converged, "{lb:?}");
        let br = brent(|t| (t - 0.3).powi(2) + 1.0, -1.0, 2.0, 100).unwrap();
        assert!((br.x[0] - 0.3).abs() < 1e-8);
    }
}
