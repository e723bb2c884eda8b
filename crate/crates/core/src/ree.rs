//! Unrestricted relative entropy of entanglement of a cut state, minimized
//! over mixtures of `K` pure product states on the full qubit space, and the
//! doubly-excited population diagnostic of the optimal separable state.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::correlations::single_excitation_ree;
use crate::cut::{block_decompose, embed_full, party_support, CutState};
use crate::error::{Error, Result};
use crate::linalg::{eigh, entropy_of, relative_entropy_matrices, CMatrix, DensityOperator, ZERO};
use crate::optim;

/// Largest `|A| + |B|` accepted by [`full_ree`].
pub const MAX_FULL_REE_SITES: usize = 4;
/// Allowed deviation of weights and factor norms in an ansatz.
pub const ANSATZ_TOL: f64 = 1e-10;

/// `σ = Σ_n c_n |ψ_n^A ψ_n^B⟩⟨ψ_n^A ψ_n^B|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableAnsatz {
    weights: Vec<f64>,
    a_factors: Vec<DVector<Complex64>>,
    b_factors: Vec<DVector<Complex64>>,
}

impl SeparableAnsatz {
    pub fn new(
        weights: Vec<f64>,
        a_factors: Vec<DVector<Complex64>>,
        b_factors: Vec<DVector<Complex64>>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || a_factors.len() != k || b_factors.len() != k {
            return Err(Error::Dimension(format!(
                "{k} weights, {} A factors, {} B factors",
                a_factors.len(),
                b_factors.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0)
            || (weights.iter().sum::<f64>() - 1.0).abs() > ANSATZ_TOL
        {
            return Err(Error::validation(
                "probability-weights",
                "weights must be a probability vector",
            ));
        }
        for v in a_factors.iter().chain(&b_factors) {
            if (v.norm() - 1.0).abs() > ANSATZ_TOL {
                return Err(Error::validation(
                    "unit-factors",
                    format!("factor norm {}", v.norm()),
                ));
            }
        }
        let (da, db) = (a_factors[0].len(), b_factors[0].len());
        if a_factors.iter().any(|v| v.len() != da) || b_factors.iter().any(|v| v.len() != db) {
            return Err(Error::Dimension("factor vectors of unequal length".into()));
        }
        Ok(Self {
            weights,
            a_factors,
            b_factors,
        })
    }

    /// Decodes unconstrained parameters: for each term the (re, im) pairs
    /// of unnormalized vectors `u_n` then `v_n`. Weights are
    /// `‖u_n‖² ‖v_n‖² / Σ_m ‖u_m‖² ‖v_m‖²`.
    pub fn from_params(x: &[f64], k: usize, da: usize, db: usize) -> Result<Self> {
        if x.len() != n_params(k, da, db) {
            return Err(Error::Dimension(format!(
                "{} parameters, expected {}",
                x.len(),
                n_params(k, da, db)
            )));
        }
        let (u, v) = unpack(x, k, da, db);
        let z: f64 = u
            .iter()
            .zip(&v)
            .map(|(u, v)| u.norm_squared() * v.norm_squared())
            .sum();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Numerical("ansatz has zero total weight".into()));
        }
        let unit = |w: &DVector<Complex64>| {
            let n = w.norm();
            if n > 0.0 {
                w.unscale(n)
            } else {
                let mut e = DVector::from_element(w.len(), ZERO);
                e[0] = Complex64::new(1.0, 0.0);
                e
            }
        };
        Ok(Self {
            weights: u
                .iter()
                .zip(&v)
                .map(|(u, v)| u.norm_squared() * v.norm_squared() / z)
                .collect(),
            a_factors: u.iter().map(unit).collect(),
            b_factors: v.iter().map(unit).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn a_factors(&self) -> &[DVector<Complex64>] {
        &self.a_factors
    }

    pub fn b_factors(&self) -> &[DVector<Complex64>] {
        &self.b_factors
    }

    pub fn matrix(&self) -> CMatrix {
        assemble(&self.weights, &self.a_factors, &self.b_factors)
    }

    pub fn density(&self) -> Result<DensityOperator> {
        let n = self.a_factors[0].len() * self.b_factors[0].len();
        let bits = n.trailing_zeros() as usize;
        let labels = if n.is_power_of_two() {
            (0..n).map(|i| crate::cut::qubit_label(i, bits)).collect()
        } else {
            (0..n).map(|i| i.to_string()).collect()
        };
        DensityOperator::new(crate::linalg::hermitian_part(&self.matrix()), labels)
    }
}

fn n_params(k: usize, da: usize, db: usize) -> usize {
    2 * k * (da + db)
}

fn unpack(
    x: &[f64],
    k: usize,
    da: usize,
    db: usize,
) -> (Vec<DVector<Complex64>>, Vec<DVector<Complex64>>) {
    let stride = 2 * (da + db);
    let read = |off: usize, len: usize| {
        DVector::from_fn(len, |i, _| {
            Complex64::new(x[off + 2 * i], x[off + 2 * i + 1])
        })
    };
    (0..k)
        .map(|t| (read(t * stride, da), read(t * stride + 2 * da, db)))
        .unzip()
}

fn assemble(c: &[f64], a: &[DVector<Complex64>], b: &[DVector<Complex64>]) -> CMatrix {
    let (da, db) = (a[0].len(), b[0].len());
    let n = da * db;
    let mut sigma = CMatrix::zeros(n, n);
    let mut psi = vec![ZERO; n];
    for t in 0..c.len() {
        for i in 0..da {
            for j in 0..db {
                psi[i * db + j] = a[t][i] * b[t][j];
            }
        }
        for r in 0..n {
            let w = psi[r] * c[t];
            if w == ZERO {
                continue;
            }
            for s in 0..n {
                sigma[(r, s)] += w * psi[s].conj();
            }
        }
    }
    sigma
}

/// How gradients of the objective are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Exact derivative of the matrix logarithm through divided
    /// differences of the spectrum.
    Analytic,
    /// Central differences with step `grad_step`.
    FiniteDifference,
}

impl FromStr for GradientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic" => Ok(Self::Analytic),
            "fd" | "finite-difference" => Ok(Self::FiniteDifference),
            other => Err(Error::Parse(format!(
                "unknown gradient mode {other:?} (expected analytic or fd)"
            ))),
        }
    }
}

impl fmt::Display for GradientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Analytic => "analytic",
            Self::FiniteDifference => "fd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullReeOptions {
    /// Total starts; the first is seeded at the block-diagonal minimizer.
    pub starts: usize,
    pub max_iters: u64,
    /// Finite-difference step, used when `gradient` is `FiniteDifference`.
    pub grad_step: f64,
    /// Gradient-norm stopping tolerance.
    pub tol: f64,
    /// `σ → (1 − δ) σ + δ I / d` during the search.
    pub floor_delta: f64,
    /// Number of product terms; `None` means `(d_A d_B)²`.
    pub k: Option<usize>,
    pub seed: u64,
    pub gradient: GradientMode,
    /// Results whose two best starts differ by more than this are flagged.
    pub spread_tol: f64,
}

impl Default for FullReeOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iters: 500,
            grad_step: 1e-6,
            tol: 1e-9,
            floor_delta: 1e-9,
            k: None,
            seed: 0,
            gradient: GradientMode::Analytic,
            spread_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FullReeTrace {
    pub starts: usize,
    pub iterations: u64,
    /// Index of the start that produced the result (0 is the seeded one).
    pub best_start: usize,
    /// Gap between the two best starts.
    pub spread: f64,
    /// Objective after each iteration of the winning start, floor active.
    pub history: Vec<f64>,
    /// Objective value of the winning start with the floor still active.
    pub floored_value: f64,
    /// True when the final value was evaluated without the floor.
    pub floor_removed: bool,
    /// True when the winning start stopped before the iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullReeResult {
    pub value: f64,
    pub optimal_sigma: DensityOperator,
    pub ansatz: SeparableAnsatz,
    /// `None` when the optimal state has no single-excitation population.
    pub doubly_excited_fraction: Option<f64>,
    pub optimizer_trace: FullReeTrace,
    pub flagged: bool,
}

/// Objective `D(ρ‖(1−δ)σ(x) + δ I/d)` in bits and its gradient.
struct Objective {
    rho: CMatrix,
    neg_entropy: f64,
    k: usize,
    da: usize,
    db: usize,
    delta: f64,
}

/// `σ(x)` before normalization, with its trace.
struct Unnormalized {
    u: Vec<DVector<Complex64>>,
    v: Vec<DVector<Complex64>>,
    s: CMatrix,
    z: f64,
}

impl Objective {
    fn unnormalized(&self, x: &[f64]) -> Unnormalized {
        let (u, v) = unpack(x, self.k, self.da, self.db);
        let ones = vec![1.0; self.k];
        let s = assemble(&ones, &u, &v);
        let z = s.trace().re;
        Unnormalized { u, v, s, z }
    }

    fn floored(&self, p: &Unnormalized) -> CMatrix {
        let n = p.s.nrows();
        let mut s = &p.s * Complex64::new((1.0 - self.delta) / p.z, 0.0);
        for i in 0..n {
            s[(i, i)] += self.delta / n as f64;
        }
        s
    }

    fn value(&self, x: &[f64]) -> f64 {
        let p = self.unnormalized(x);
        if p.z.is_nan() || p.z <= 0.0 {
            return f64::INFINITY;
        }
        let e = eigh(&self.floored(&p));
        let rt = e.vectors.adjoint() * &self.rho * &e.vectors;
        let mut cross = 0.0;
        for (j, &lambda) in e.values.iter().enumerate() {
            let w = rt[(j, j)].re;
            if w.abs() > 0.0 {
                cross += w * lambda.max(f64::MIN_POSITIVE).log2();
            }
        }
        self.neg_entropy - cross
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (k, da, db) = (self.k, self.da, self.db);
        let n = da * db;
        let p = self.unnormalized(x);
        let mut grad = vec![0.0; x.len()];
        if p.z.is_nan() || p.z <= 0.0 {
            return grad;
        }
        let sigma = self.floored(&p);
        let e = eigh(&sigma);
        let lam: Vec<f64> = e.values.iter().map(|&l| l.max(f64::MIN_POSITIVE)).collect();
        let rt = e.vectors.adjoint() * &self.rho * &e.vectors;
        let ln2 = std::f64::consts::LN_2;
        let gamma = CMatrix::from_fn(n, n, |i, j| {
            let (li, lj) = (lam[i], lam[j]);
            let g = if (li - lj).abs() > 1e-12 * li.max(lj) {
                (li.log2() - lj.log2()) / (li - lj)
            } else {
                1.0 / (li * ln2)
            };
            rt[(i, j)] * g
        });
        // df = Tr(G dσ) for the floored state.
        let g =
            (&e.vectors * gamma * e.vectors.adjoint()) * Complex64::new(-(1.0 - self.delta), 0.0);
        // Through σ = S / Tr S: df = Tr(G_S dS) with G_S = (G − Tr(G σ) I) / Tr S.
        let sigma0 = &p.s / Complex64::new(p.z, 0.0);
        let shift = (&g * &sigma0).trace().re;
        let mut gs = g;
        for i in 0..n {
            gs[(i, i)] -= Complex64::new(shift, 0.0);
        }
        gs /= Complex64::new(p.z, 0.0);

        let stride = 2 * (da + db);
        for t in 0..k {
            let (u, v) = (&p.u[t], &p.v[t]);
            let mut gu = CMatrix::zeros(da, da);
            let mut gv = CMatrix::zeros(db, db);
            for i in 0..da {
                for j in 0..da {
                    let w = u[i].conj() * u[j];
                    for r in 0..db {
                        for s in 0..db {
                            let gij = gs[(i * db + r, j * db + s)];
                            gv[(r, s)] += w * gij;
                            gu[(i, j)] += v[r].conj() * v[s] * gij;
                        }
                    }
                }
            }
            let du = (&gu * u) * Complex64::new(2.0, 0.0);
            let dv = (&gv * v) * Complex64::new(2.0, 0.0);
            let base = t * stride;
            for i in 0..da {
                grad[base + 2 * i] = du[i].re;
                grad[base + 2 * i + 1] = du[i].im;
            }
            for j in 0..db {
                grad[base + 2 * da + 2 * j] = dv[j].re;
                grad[base + 2 * da + 2 * j + 1] = dv[j].im;
            }
        }
        grad
    }
}

/// Scale of the A factors of unused terms in the seeded start.
const SEED_FILLER: f64 = 1e-4;

fn seeded_start(chi: &CutState, k: usize, da: usize, db: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bd = block_decompose(chi);
    let support_a = party_support(chi.n_a());
    let support_b = party_support(chi.n_b());
    let unit = |dim: usize, idx: usize| {
        let mut v = DVector::from_element(dim, ZERO);
        v[idx] = Complex64::new(1.0, 0.0);
        v
    };
    let mut terms: Vec<(f64, DVector<Complex64>, DVector<Complex64>)> =
        vec![(bd.alpha, unit(da, 0), unit(db, 0))];
    for (block, support, is_a) in [
        (&bd.rho_e_a, &support_a, true),
        (&bd.rho_e_b, &support_b, false),
    ] {
        let e = eigh(block);
        for (col, &w) in e.values.iter().enumerate() {
            let dim = if is_a { da } else { db };
            let mut v = DVector::from_element(dim, ZERO);
            for (r, &idx) in support[1..].iter().enumerate() {
                v[idx] = e.vectors[(r, col)];
            }
            if is_a {
                terms.push((w, v, unit(db, 0)));
            } else {
                terms.push((w, unit(da, 0), v));
            }
        }
    }
    let mut x = vec![0.0; n_params(k, da, db)];
    let stride = 2 * (da + db);
    for t in 0..k {
        let base = t * stride;
        if let Some((w, a, b)) = terms.get(t) {
            let amp = w.max(0.0).sqrt();
            for i in 0..da {
                x[base + 2 * i] = amp * a[i].re;
                x[base + 2 * i + 1] = amp * a[i].im;
            }
            for j in 0..db {
                x[base + 2 * da + 2 * j] = b[j].re;
                x[base + 2 * da + 2 * j + 1] = b[j].im;
            }
        } else {
            for (i, v) in x[base..base + stride].iter_mut().enumerate() {
                let scale = if i < 2 * da { SEED_FILLER } else { 1.0 };
                *v = scale * rng.random_range(-1.0..1.0);
            }
        }
    }
    x
}

fn random_start(k: usize, da: usize, db: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n_params(k, da, db))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect()
}

/// Minimizes `D(χ‖σ)` over separable `σ` on the full qubit space of the cut.
pub fn full_ree(chi: &CutState, opts: &FullReeOptions) -> Result<FullReeResult> {
    let (na, nb) = (chi.n_a(), chi.n_b());
    if na + nb > MAX_FULL_REE_SITES {
        return Err(Error::validation(
            "full-ree-cut-size",
            format!(
                "full REE supports |A| + |B| <= {MAX_FULL_REE_SITES}, got {}",
                na + nb
            ),
        ));
    }
    if !(opts.floor_delta >= 0.0 && opts.floor_delta < 1.0) {
        return Err(Error::validation(
            "floor-delta",
            format!("floor_delta = {}", opts.floor_delta),
        ));
    }
    let embedded = embed_full(chi);
    let [da, db] = embedded.party_dims();
    let k = opts.k.unwrap_or((da * db) * (da * db));
    if k == 0 {
        return Err(Error::validation("ansatz-terms", "K must be positive"));
    }
    let rho = embedded.matrix().clone();
    let objective = Objective {
        neg_entropy: -entropy_of(&rho),
        rho,
        k,
        da,
        db,
        delta: opts.floor_delta,
    };
    let f = |x: &[f64]| objective.value(x);
    let analytic = |x: &[f64]| objective.gradient(x);
    let numeric = |x: &[f64]| optim::central_gradient(&f, x, opts.grad_step);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = opts.starts.max(1);
    let mut runs = Vec::with_capacity(starts);
    let mut iterations = 0;
    for s in 0..starts {
        let x0 = if s == 0 {
            seeded_start(chi, k, da, db, &mut rng)
        } else {
            random_start(k, da, db, &mut rng)
        };
        let r = match opts.gradient {
            GradientMode::Analytic => {
                optim::lbfgs_traced(f, analytic, &x0, opts.max_iters, opts.tol)?
            }
            GradientMode::FiniteDifference => {
                optim::lbfgs_traced(f, numeric, &x0, opts.max_iters, opts.tol)?
            }
        };
        iterations += r.0.iterations;
        runs.push((s, r));
    }
    runs.retain(|(_, r)| r.0.value.is_finite());
    if runs.is_empty() {
        return Err(Error::Numerical("every full-REE start diverged".into()));
    }
    runs.sort_by(|a, b| a.1 .0.value.total_cmp(&b.1 .0.value));
    let spread = runs
        .get(1)
        .map_or(0.0, |r| r.1 .0.value - runs[0].1 .0.value);
    let (best_start, (best, history)) = runs.swap_remove(0);

    let ansatz = SeparableAnsatz::from_params(&best.x, k, da, db)?;
    let sigma = ansatz.density()?;
    let unfloored = relative_entropy_matrices(embedded.matrix(), sigma.matrix());
    let (value, floor_removed) = if unfloored.is_finite() {
        (unfloored, true)
    } else {
        (best.value, false)
    };
    let fraction = doubly_excited_fraction(&sigma)?;
    Ok(FullReeResult {
        value,
        doubly_excited_fraction: fraction,
        optimal_sigma: sigma,
        ansatz,
        optimizer_trace: FullReeTrace {
            starts,
            iterations,
            best_start,
            spread,
            history,
            floored_value: best.value,
            floor_removed,
            converged: best.converged,
        },
        flagged: spread > opts.spread_tol,
    })
}

/// Population on strings with two or more excitations divided by population
/// on single-excitation strings. `None` when the latter is zero.
pub fn doubly_excited_fraction(sigma: &DensityOperator) -> Result<Option<f64>> {
    let n = sigma.dim();
    if !n.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "dimension {n} is not a qubit space"
        )));
    }
    let pops = sigma.populations();
    let single: f64 = (0..n)
        .filter(|i| i.count_ones() == 1)
        .map(|i| pops[i])
        .sum();
    let multi: f64 = (0..n)
        .filter(|i| i.count_ones() >= 2)
        .map(|i| pops[i])
        .sum();
    if single <= 0.0 {
        return Ok(None);
    }
    Ok(Some(if multi <= 0.0 {
        0.0
    } else {
        (multi / single).min(1.0)
    }))
}

/// `full_ree` value and the closed-form single-excitation value side by
/// side, for diagnostics.
pub fn ree_pair(chi: &CutState, opts: &FullReeOptions) -> Result<(f64, FullReeResult)> {
    Ok((single_excitation_ree(chi)?, full_ree(chi, opts)?))
}
