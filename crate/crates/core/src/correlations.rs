//! Correlation measures on bipartite states: mutual information, coherent
//! information, measurement-optimized classical correlation, quantum
//! discord, and the closed-form single-excitation relative entropy of
//! entanglement.
//!
//! Measurements are rank-one projective measurements on the measured
//! party's support. For a cut state that support is the party's
//! zero/single-excitation span of dimension `|party| + 1`.

use std::cell::Cell;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cut::{delta_bar, embed_full, party_support, CutState, Side, CUT_COHERENCE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, eigvalsh, entropy_of, identity, partial_trace_matrix, relative_entropy_matrices,
    spectrum_entropy, CMatrix, DensityOperator, EIG_CLAMP, ZERO,
};
use crate::optim;

/// Allowed disagreement between the two discord expressions.
pub const DISCORD_FORM_TOL: f64 = 1e-8;
/// Discord below this is reported as a numerical failure.
pub const DISCORD_NEGATIVE_TOL: f64 = -1e-7;
/// Allowed unitarity defect of a measurement basis.
pub const BASIS_TOL: f64 = 1e-10;

/// Rank-one projective measurement: the columns of a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: CMatrix,
}

impl MeasurementBasis {
    pub fn new(vectors: CMatrix) -> Result<Self> {
        if !vectors.is_square() || vectors.nrows() == 0 {
            return Err(Error::Dimension("measurement basis must be square".into()));
        }
        let basis = Self { vectors };
        let defect = basis.completeness_defect();
        if defect > BASIS_TOL {
            return Err(Error::validation(
                "orthonormal-basis",
                format!("‖V†V − I‖ = {defect:.3e}"),
            ));
        }
        Ok(basis)
    }

    pub fn computational(d: usize) -> Self {
        Self {
            vectors: identity(d),
        }
    }

    /// Qubit basis `{cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩, its orthogonal
    /// complement}`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
        let e = Complex64::from_polar(1.0, phi);
        let mut v = CMatrix::zeros(2, 2);
        v[(0, 0)] = Complex64::new(c, 0.0);
        v[(1, 0)] = e * s;
        v[(0, 1)] = -e.conj() * s;
        v[(1, 1)] = Complex64::new(c, 0.0);
        Self { vectors: v }
    }

    /// `exp(iK)` for the Hermitian `K` whose diagonal is `params[..d]` and
    /// whose upper triangle takes consecutive (re, im) pairs from the rest.
    pub fn from_generator(params: &[f64], d: usize) -> Result<Self> {
        if params.len() != d * d {
            return Err(Error::Dimension(format!(
                "{} generator parameters for dimension {d}, need {}",
                params.len(),
                d * d
            )));
        }
        Ok(Self {
            vectors: unitary_from_generator(params, d),
        })
    }

    pub fn d(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.d())
            .map(|k| {
                let v = self.vectors.column(k);
                v * v.adjoint()
            })
            .collect()
    }

    /// `max |Σ_x Π_x − I|`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self
            .projectors()
            .into_iter()
            .fold(CMatrix::zeros(self.d(), self.d()), |a, p| a + p);
        crate::linalg::max_abs_diff(&sum, &identity(self.d()))
    }
}

fn unitary_from_generator(params: &[f64], d: usize) -> CMatrix {
    let mut k = CMatrix::zeros(d, d);
    for i in 0..d {
        k[(i, i)] = Complex64::new(params[i], 0.0);
    }
    let mut p = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = Complex64::new(params[p], params[p + 1]);
            k[(i, j)] = z;
            k[(j, i)] = z.conj();
            p += 2;
        }
    }
    let e = eigh(&k);
    let mut scaled = e.vectors.clone();
    for (col, &lambda) in e.values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, lambda);
        for row in 0..d {
            scaled[(row, col)] *= phase;
        }
    }
    scaled * e.vectors.adjoint()
}

/// Settings of the measurement search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOptions {
    /// Bloch-grid spacing in degrees for qubit supports.
    pub grid_step_deg: f64,
    /// Multi-start count for supports of dimension > 2.
    pub starts: usize,
    pub max_iters: u64,
    pub seed: u64,
    /// Results whose two best restarts differ by more than this are flagged.
    pub spread_tol: f64,
}

impl Default for MeasurementOptions {
    fn default() -> Self {
        Self {
            grid_step_deg: 0.5,
            starts: 32,
            max_iters: 2000,
            seed: 0,
            spread_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OptimizerTrace {
    pub evaluations: u64,
    pub iterations: u64,
    pub restarts: usize,
    /// Finite-difference gradient norm of the objective at the returned
    /// point, in its own parameterization.
    pub final_gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalCorrelation {
    /// `I_c` in bits.
    pub value: f64,
    /// `Σ_x p(x) H(ρ_x)` at the optimal basis.
    pub conditional_entropy: f64,
    pub basis: MeasurementBasis,
    pub trace: OptimizerTrace,
    /// Gap between the two best restarts (0 for qubit supports).
    pub spread: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscordResult {
    pub measured_side: Side,
    pub mutual_info: f64,
    pub classical_corr: f64,
    pub discord: f64,
    /// Coherent information toward the measured party, `H(M) − H(MO)`.
    pub coherent_info: f64,
    pub conditional_entropy: f64,
    pub optimal_basis: MeasurementBasis,
    pub optimizer_trace: OptimizerTrace,
    pub flagged: bool,
}

/// A joint state with the measured party as the first tensor factor.
struct CqProblem {
    joint: CMatrix,
    dm: usize,
    dother: usize,
    evaluations: Cell<u64>,
}

impl CqProblem {
    fn new(joint: &CMatrix, dims: [usize; 2], side: Side) -> Self {
        let joint = match side {
            Side::A => joint.clone(),
            Side::B => swap_factors(joint, dims),
        };
        let (dm, dother) = match side {
            Side::A => (dims[0], dims[1]),
            Side::B => (dims[1], dims[0]),
        };
        Self {
            joint,
            dm,
            dother,
            evaluations: Cell::new(0),
        }
    }

    /// Unnormalized post-measurement state `(⟨x| ⊗ I) ρ (|x⟩ ⊗ I)`.
    fn conditional(&self, x: &[Complex64]) -> CMatrix {
        let d = self.dother;
        let mut out = CMatrix::zeros(d, d);
        for a in 0..self.dm {
            let xa = x[a].conj();
            if xa == ZERO {
                continue;
            }
            for a2 in 0..self.dm {
                let w = xa * x[a2];
                if w == ZERO {
                    continue;
                }
                let block = self.joint.view((a * d, a2 * d), (d, d));
                out.zip_apply(&block, |o, j| *o += w * j);
            }
        }
        out
    }

    /// `Σ_x p(x) H(ρ_x / p(x))` over the columns of `basis`.
    fn conditional_entropy(&self, basis: &CMatrix) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        let mut total = 0.0;
        for k in 0..basis.ncols() {
            let x: Vec<Complex64> = basis.column(k).iter().copied().collect();
            let rho = self.conditional(&x);
            let p = rho.trace().re;
            if p <= EIG_CLAMP {
                continue;
            }
            let values: Vec<f64> = eigvalsh(&rho).into_iter().map(|v| v / p).collect();
            total += p * spectrum_entropy(&values);
        }
        total
    }

    fn at_angles(&self, theta: f64, phi: f64) -> f64 {
        self.conditional_entropy(MeasurementBasis::from_angles(theta, phi).vectors())
    }
}

/// Reorders `A ⊗ B` into `B ⊗ A`.
fn swap_factors(m: &CMatrix, dims: [usize; 2]) -> CMatrix {
    let [da, db] = dims;
    let idx = |k: usize| {
        let (b, a) = (k / da, k % da);
        a * db + b
    };
    CMatrix::from_fn(da * db, da * db, |i, j| m[(idx(i), idx(j))])
}

struct Search {
    basis: MeasurementBasis,
    value: f64,
    trace: OptimizerTrace,
    spread: f64,
}

fn qubit_search(p: &CqProblem, phase_invariant: bool, opts: &MeasurementOptions) -> Result<Search> {
    let steps = (90.0 / opts.grid_step_deg).ceil().max(1.0) as usize;
    let dtheta = std::f64::consts::FRAC_PI_2 / steps as f64;
    let phis: Vec<f64> = if phase_invariant {
        vec![0.0]
    } else {
        (0..4 * steps).map(|j| j as f64 * dtheta).collect()
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in 0..=steps {
        let theta = k as f64 * dtheta;
        for &phi in &phis {
            let v = p.at_angles(theta, phi);
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let (mut value, mut theta, mut phi) = best;
    let iterations;
    if phase_invariant {
        let r = optim::brent(|t| p.at_angles(t, 0.0), theta - dtheta, theta + dtheta, 200)?;
        iterations = r.iterations;
        if r.value < value {
            value = r.value;
            theta = r.x[0];
        }
    } else {
        let r = optim::nelder_mead(
            |x| p.at_angles(x[0], x[1]),
            &[theta, phi],
            dtheta,
            500,
            1e-14,
        )?;
        iterations = r.iterations;
        if r.value < value {
            value = r.value;
            theta = r.x[0];
            phi = r.x[1];
        }
    }
    let h = 1e-5;
    let g_theta = (p.at_angles(theta + h, phi) - p.at_angles(theta - h, phi)) / (2.0 * h);
    let g_phi = if phase_invariant {
        0.0
    } else {
        (p.at_angles(theta, phi + h) - p.at_angles(theta, phi - h)) / (2.0 * h)
    };
    Ok(Search {
        basis: MeasurementBasis::from_angles(theta, phi),
        value,
        trace: OptimizerTrace {
            evaluations: p.evaluations.get(),
            iterations,
            restarts: 1,
            final_gradient_norm: g_theta.hypot(g_phi),
        },
        spread: 0.0,
    })
}

fn unitary_search(p: &CqProblem, opts: &MeasurementOptions) -> Result<Search> {
    let d = p.dm;
    let n = d * d;
    let f = |x: &[f64]| p.conditional_entropy(&unitary_from_generator(x, d));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = opts.starts.max(1);
    let mut results = Vec::with_capacity(starts);
    let mut iterations = 0;
    for s in 0..starts {
        let x0: Vec<f64> = if s == 0 {
            vec![0.0; n]
        } else {
            (0..n)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect()
        };
        let r = optim::nelder_mead(f, &x0, 0.5, opts.max_iters, 1e-13)?;
        iterations += r.iterations;
        results.push(r);
    }
    results.sort_by(|a, b| a.value.total_cmp(&b.value));
    let spread = if results.len() > 1 {
        results[1].value - results[0].value
    } else {
        0.0
    };
    let best = &results[0];
    let grad = optim::central_gradient(&f, &best.x, 1e-6);
    Ok(Search {
        basis: MeasurementBasis::from_generator(&best.x, d)?,
        value: best.value,
        trace: OptimizerTrace {
            evaluations: p.evaluations.get(),
            iterations,
            restarts: starts,
            final_gradient_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        },
        spread,
    })
}

fn search(p: &CqProblem, phase_invariant: bool, opts: &MeasurementOptions) -> Result<Search> {
    if !(opts.grid_step_deg > 0.0 && opts.grid_step_deg <= 0.5) {
        return Err(Error::validation(
            "grid-step",
            format!(
                "Bloch grid step {} deg must lie in (0, 0.5]",
                opts.grid_step_deg
            ),
        ));
    }
    match p.dm {
        0 => Err(Error::Dimension("measured party has no support".into())),
        1 => {
            let basis = MeasurementBasis::computational(1);
            let value = p.conditional_entropy(basis.vectors());
            Ok(Search {
                basis,
                value,
                trace: OptimizerTrace::default(),
                spread: 0.0,
            })
        }
        2 => qubit_search(p, phase_invariant, opts),
        _ => unitary_search(p, opts),
    }
}

/// Entropies `(H(A), H(B), H(AB))` of a generic bipartite matrix.
fn bipartite_entropies(m: &CMatrix, dims: [usize; 2]) -> (f64, f64, f64) {
    let ra = partial_trace_matrix(m, &dims, &[0]);
    let rb = partial_trace_matrix(m, &dims, &[1]);
    (entropy_of(&ra), entropy_of(&rb), entropy_of(m))
}

/// Marginal of one party of a cut state on its zero/single-excitation
/// support `(G, sites...)`, obtained from the qubit embedding by a partial
/// trace and compression.
pub fn cut_marginal(chi: &CutState, side: Side) -> CMatrix {
    let e = embed_full(chi);
    let dims = e.party_dims();
    let keep = match side {
        Side::A => 0,
        Side::B => 1,
    };
    let reduced = partial_trace_matrix(e.matrix(), &dims, &[keep]);
    let support = party_support(chi.cut().sites(side).len());
    CMatrix::from_fn(support.len(), support.len(), |i, j| {
        reduced[(support[i], support[j])]
    })
}

/// `(H(A), H(B), H(AB))` of a cut state, in bits.
pub fn cut_entropies(chi: &CutState) -> (f64, f64, f64) {
    (
        entropy_of(&cut_marginal(chi, Side::A)),
        entropy_of(&cut_marginal(chi, Side::B)),
        entropy_of(chi.matrix()),
    )
}

/// `I(A;B) = H(A) + H(B) − H(AB)`.
pub fn mutual_information(chi: &CutState) -> f64 {
    let (ha, hb, hab) = cut_entropies(chi);
    ha + hb - hab
}

/// `I(B⟩A) = H(A) − H(AB)`; may be negative.
pub fn coherent_information(chi: &CutState) -> f64 {
    let (ha, _, hab) = cut_entropies(chi);
    ha - hab
}

fn check_dims(rho: &DensityOperator, dims: [usize; 2]) -> Result<()> {
    if dims[0] == 0 || dims[1] == 0 || dims[0] * dims[1] != rho.dim() {
        return Err(Error::Dimension(format!(
            "factor dimensions {dims:?} do not multiply to {}",
            rho.dim()
        )));
    }
    Ok(())
}

/// Mutual information of a state on `dims[0] ⊗ dims[1]`.
pub fn mutual_information_of(rho: &DensityOperator, dims: [usize; 2]) -> Result<f64> {
    check_dims(rho, dims)?;
    let (ha, hb, hab) = bipartite_entropies(rho.matrix(), dims);
    Ok(ha + hb - hab)
}

/// Coherent information `H(A) − H(AB)` of a state on `dims[0] ⊗ dims[1]`.
pub fn coherent_information_of(rho: &DensityOperator, dims: [usize; 2]) -> Result<f64> {
    check_dims(rho, dims)?;
    let (ha, _, hab) = bipartite_entropies(rho.matrix(), dims);
    Ok(ha - hab)
}

fn classical_from_search(
    s: Search,
    h_other: f64,
    opts: &MeasurementOptions,
) -> ClassicalCorrelation {
    ClassicalCorrelation {
        value: h_other - s.value,
        conditional_entropy: s.value,
        flagged: s.spread > opts.spread_tol,
        spread: s.spread,
        basis: s.basis,
        trace: s.trace,
    }
}

fn cut_problem(chi: &CutState, side: Side) -> (CqProblem, bool) {
    let dims = [chi.n_a() + 1, chi.n_b() + 1];
    let problem = CqProblem::new(&chi.support_joint(), dims, side);
    // With no ground-row coherence, a relative phase between the measured
    // party's ground and excited levels acts as a local unitary on the other
    // party, so the objective does not depend on the azimuth.
    (problem, chi.ground_coherence() == 0.0)
}

/// `max over measurements on the measured party of I(X; other)`.
pub fn classical_correlation(
    chi: &CutState,
    measured_side: Side,
    opts: &MeasurementOptions,
) -> Result<ClassicalCorrelation> {
    let (problem, invariant) = cut_problem(chi, measured_side);
    let h_other = entropy_of(&cut_marginal(chi, measured_side.other()));
    Ok(classical_from_search(
        search(&problem, invariant, opts)?,
        h_other,
        opts,
    ))
}

/// Classical correlation of a generic state on `dims[0] ⊗ dims[1]`.
pub fn classical_correlation_of(
    rho: &DensityOperator,
    dims: [usize; 2],
    measured_side: Side,
    opts: &MeasurementOptions,
) -> Result<ClassicalCorrelation> {
    check_dims(rho, dims)?;
    let problem = CqProblem::new(rho.matrix(), dims, measured_side);
    let (ha, hb, _) = bipartite_entropies(rho.matrix(), dims);
    let h_other = match measured_side {
        Side::A => hb,
        Side::B => ha,
    };
    Ok(classical_from_search(
        search(&problem, false, opts)?,
        h_other,
        opts,
    ))
}

fn assemble_discord(
    side: Side,
    (h_m, h_o, h_mo): (f64, f64, f64),
    c: ClassicalCorrelation,
) -> Result<DiscordResult> {
    let mutual_info = h_m + h_o - h_mo;
    let difference_form = mutual_info - c.value;
    let coherent_info = h_m - h_mo;
    let coherent_form = coherent_info + c.conditional_entropy;
    if (difference_form - coherent_form).abs() > DISCORD_FORM_TOL {
        return Err(Error::Numerical(format!(
            "discord forms disagree: I − I_c = {difference_form:e}, \
             I(coherent) + Σ p H = {coherent_form:e}"
        )));
    }
    if difference_form < DISCORD_NEGATIVE_TOL {
        return Err(Error::Numerical(format!(
            "negative discord {difference_form:e}"
        )));
    }
    Ok(DiscordResult {
        measured_side: side,
        mutual_info,
        classical_corr: c.value,
        discord: difference_form,
        coherent_info,
        conditional_entropy: c.conditional_entropy,
        optimal_basis: c.basis,
        optimizer_trace: c.trace,
        flagged: c.flagged,
    })
}

/// Quantum discord `I(A;B) − I_c` with the given party measured.
pub fn quantum_discord(
    chi: &CutState,
    measured_side: Side,
    opts: &MeasurementOptions,
) -> Result<DiscordResult> {
    let (ha, hb, hab) = cut_entropies(chi);
    let (problem, invariant) = cut_problem(chi, measured_side);
    let (h_m, h_o) = match measured_side {
        Side::A => (ha, hb),
        Side::B => (hb, ha),
    };
    let c = classical_from_search(search(&problem, invariant, opts)?, h_o, opts);
    assemble_discord(measured_side, (h_m, h_o, hab), c)
}

/// Quantum discord of a generic state on `dims[0] ⊗ dims[1]`.
pub fn quantum_discord_of(
    rho: &DensityOperator,
    dims: [usize; 2],
    measured_side: Side,
    opts: &MeasurementOptions,
) -> Result<DiscordResult> {
    check_dims(rho, dims)?;
    let (ha, hb, hab) = bipartite_entropies(rho.matrix(), dims);
    let (h_m, h_o) = match measured_side {
        Side::A => (ha, hb),
        Side::B => (hb, ha),
    };
    let problem = CqProblem::new(rho.matrix(), dims, measured_side);
    let c = classical_from_search(search(&problem, false, opts)?, h_o, opts);
    assemble_discord(measured_side, (h_m, h_o, hab), c)
}

/// `Σ_x p(x) H(ρ_x)` for a given measurement on a generic state, used by
/// brute-force oracles.
pub fn conditional_entropy_for_basis(
    rho: &DensityOperator,
    dims: [usize; 2],
    measured_side: Side,
    basis: &MeasurementBasis,
) -> Result<f64> {
    check_dims(rho, dims)?;
    let problem = CqProblem::new(rho.matrix(), dims, measured_side);
    if basis.d() != problem.dm {
        return Err(Error::Dimension(format!(
            "basis of dimension {} for a party of dimension {}",
            basis.d(),
            problem.dm
        )));
    }
    Ok(problem.conditional_entropy(basis.vectors()))
}

/// Single-excitation relative entropy of entanglement
/// `R_e = H(Δ̄(χ)) − H(χ)`.
pub fn single_excitation_ree(chi: &CutState) -> Result<f64> {
    let c = chi.ground_coherence();
    if c > CUT_COHERENCE_TOL {
        return Err(Error::Precondition {
            condition: "no zero/single-excitation coherence",
            detail: format!(
                "the closed form needs a state without coherence between the ground and \
                 single-excitation subspaces; found {c:.3e}"
            ),
        });
    }
    Ok(entropy_of(delta_bar(chi).matrix()) - entropy_of(chi.matrix()))
}

/// Direct numerical minimum of `D(χ‖σ₀)` over block-diagonal separable
/// states `σ₀ = β Π_g ⊕ σ_e^A ⊕ σ_e^B`, each block parameterized by a
/// Cholesky factor. Independent of the closed form; used as its oracle.
pub fn sigma0_family_ree(chi: &CutState, starts: usize, seed: u64) -> Result<f64> {
    let (na, nb) = (chi.n_a(), chi.n_b());
    let n = 1 + na + nb;
    let n_params = 1 + na * na + nb * nb;
    let assemble = |x: &[f64]| -> CMatrix {
        let mut s = CMatrix::zeros(n, n);
        s[(0, 0)] = Complex64::new(x[0] * x[0], 0.0);
        let mut p = 1;
        for (offset, dim) in [(1, na), (1 + na, nb)] {
            let mut l = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                l[(i, i)] = Complex64::new(x[p], 0.0);
                p += 1;
                for j in 0..i {
                    l[(i, j)] = Complex64::new(x[p], x[p + 1]);
                    p += 2;
                }
            }
            s.view_mut((offset, offset), (dim, dim))
                .copy_from(&(&l * l.adjoint()));
        }
        let tr = s.trace();
        s / tr
    };
    let rho = chi.matrix().clone();
    let f = |x: &[f64]| {
        let d = relative_entropy_matrices(&rho, &assemble(x));
        if d.is_finite() {
            d
        } else {
            1e10
        }
    };
    let g = |x: &[f64]| optim::central_gradient(&f, x, 1e-7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts.max(1) {
        let x0: Vec<f64> = (0..n_params).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = optim::lbfgs(f, g, &x0, 2000, 1e-12)?;
        best = best.min(r.value);
    }
    Ok(best)
}

/// `D(χ‖ω + ε dω) − D(χ‖ω)` for `ω = Δ̄(χ)` and the ground coherence shift
/// `dω = |GG⟩⟨φ_k G| + h.c.`, with `φ_k` the `k`-th eigenvector (descending)
/// of the A single-excitation block.
pub fn coherence_shift_response(chi: &CutState, k: usize, eps: f64) -> Result<f64> {
    let na = chi.n_a();
    if k >= na {
        return Err(Error::Dimension(format!(
            "eigenvector {k} of a {na}-site block"
        )));
    }
    let omega = delta_bar(chi).matrix().clone();
    let block = omega.view((1, 1), (na, na)).into_owned();
    let phi = eigh(&block).vectors.column(k).into_owned();
    let mut shifted = omega.clone();
    for a in 0..na {
        let z = phi[a].conj() * eps;
        shifted[(0, 1 + a)] += z;
        shifted[(1 + a, 0)] += z.conj();
    }
    let base = relative_entropy_matrices(chi.matrix(), &omega);
    let moved = relative_entropy_matrices(chi.matrix(), &shifted);
    if !(base.is_finite() && moved.is_finite()) {
        return Err(Error::Numerical(
            "coherence shift left the support of χ".into(),
        ));
    }
    Ok(moved - base)
}
