//! Nine-level FMO state space (ground G, sites 1..7, sink S) and integration
//! of the Lindblad master equation.
//!
//! States are vectorized row-major: `vec(ρ)[i*9 + j] = ρ_ij`, so
//! `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, identity, kron, trace, CMatrix, DensityOperator, ONE, ZERO};
use crate::model::{DecoherenceRates, FmoHamiltonian, N_SITES, SINK_SITE};

pub const DIM: usize = N_SITES + 2;
pub const GROUND: usize = 0;
pub const SINK: usize = DIM - 1;

/// Largest internal step of the RK4 integrator, in ps (1 fs).
pub const RK4_MAX_STEP: f64 = 1e-3;
/// RK4 steps are also capped at this multiple of the inverse largest
/// diagonal rate of the generator.
pub const RK4_STEP_SCALE: f64 = 0.01;
/// Allowed |Tr ρ − 1| along a trajectory.
pub const TRACE_DRIFT_TOL: f64 = 1e-7;
/// Eigenvalues below this along a trajectory are a hard failure.
pub const NEGATIVITY_TOL: f64 = -1e-8;
/// Allowed ground/sink coherence magnitude in an initial state.
pub const COHERENCE_TOL: f64 = 1e-9;
/// Allowed ground/sink coherence magnitude along a trajectory.
pub const TRAJECTORY_COHERENCE_TOL: f64 = 1e-8;

/// Basis labels G, 1..7, S.
pub fn basis_labels() -> Vec<String> {
    let mut labels = vec!["G".to_string()];
    labels.extend((1..=N_SITES).map(|m| m.to_string()));
    labels.push("S".to_string());
    labels
}

/// Largest |ρ_iG|, |ρ_iS|, |ρ_GS| over sites i (both triangles).
pub fn forbidden_coherence(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..=N_SITES {
        for j in [GROUND, SINK] {
            worst = worst.max(m[(i, j)].norm()).max(m[(j, i)].norm());
        }
    }
    worst
        .max(m[(GROUND, SINK)].norm())
        .max(m[(SINK, GROUND)].norm())
}

/// A density operator on the nine-level space with no coherences between
/// the single-excitation sites and G or S.
#[derive(Debug, Clone, PartialEq)]
pub struct FmoState {
    rho: DensityOperator,
}

impl FmoState {
    pub fn new(rho: DensityOperator) -> Result<Self> {
        Self::with_tolerance(rho, COHERENCE_TOL)
    }

    fn with_tolerance(rho: DensityOperator, tol: f64) -> Result<Self> {
        if rho.dim() != DIM {
            return Err(Error::Dimension(format!(
                "FMO state must be {DIM}x{DIM}, got {}x{}",
                rho.dim(),
                rho.dim()
            )));
        }
        if rho.labels() != basis_labels().as_slice() {
            return Err(Error::validation(
                "fmo-basis",
                format!("expected labels G,1..7,S, got {:?}", rho.labels()),
            ));
        }
        let c = forbidden_coherence(rho.matrix());
        if c > tol {
            return Err(Error::validation(
                "no-ground-sink-coherence",
                format!("coherence with G or S of magnitude {c:.3e}"),
            ));
        }
        Ok(Self { rho })
    }

    /// Validates a raw 9×9 matrix as an FMO state.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(DensityOperator::new(m, basis_labels())?)
    }

    /// Pure excitation on site `m` (1-based).
    pub fn site(m: usize) -> Result<Self> {
        Self::mixture(&[m])
    }

    /// Equal mixture of single-site excitations.
    pub fn mixture(sites: &[usize]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::validation("initial-sites", "no sites given"));
        }
        let mut probs = [0.0; DIM];
        for &m in sites {
            if !(1..=N_SITES).contains(&m) {
                return Err(Error::validation(
                    "initial-sites",
                    format!("site {m} outside 1..={N_SITES}"),
                ));
            }
            probs[m] += 1.0 / sites.len() as f64;
        }
        Self::new(DensityOperator::diagonal(&probs, basis_labels())?)
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rho.get(i, j)
    }

    /// Population of site `m` (1-based).
    pub fn site_population(&self, m: usize) -> f64 {
        self.rho.get(m, m).re
    }

    pub fn ground_population(&self) -> f64 {
        self.rho.get(GROUND, GROUND).re
    }

    pub fn sink_population(&self) -> f64 {
        self.rho.get(SINK, SINK).re
    }

    /// Total population on sites 1..7.
    pub fn excitation_population(&self) -> f64 {
        (1..=N_SITES).map(|m| self.site_population(m)).sum()
    }
}

/// The initial conditions studied by the harness.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Site1,
    Site6,
    /// Equal mixture of sites 1 and 6.
    Mixture,
    Custom(FmoState),
}

impl InitialState {
    pub fn state(&self) -> Result<FmoState> {
        match self {
            Self::Site1 => FmoState::site(1),
            Self::Site6 => FmoState::site(6),
            Self::Mixture => FmoState::mixture(&[1, 6]),
            Self::Custom(s) => Ok(s.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Site1 => "site1",
            Self::Site6 => "site6",
            Self::Mixture => "mixture",
            Self::Custom(_) => "custom",
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "site1" => Ok(Self::Site1),
            "site6" => Ok(Self::Site6),
            "mixture" => Ok(Self::Mixture),
            other => Err(Error::Parse(format!(
                "unknown initial state {other:?} (expected site1, site6 or mixture)"
            ))),
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hamiltonian embedded in the nine-level space, zero energy on G and S.
pub fn embedded_hamiltonian(h: &FmoHamiltonian) -> CMatrix {
    let site = h.matrix();
    CMatrix::from_fn(DIM, DIM, |i, j| {
        if (1..=N_SITES).contains(&i) && (1..=N_SITES).contains(&j) {
            Complex64::new(site[i - 1][j - 1], 0.0)
        } else {
            ZERO
        }
    })
}

fn projector(i: usize, j: usize, amplitude: f64) -> CMatrix {
    let mut a = CMatrix::zeros(DIM, DIM);
    a[(i, j)] = Complex64::new(amplitude, 0.0);
    a
}

/// Jump operators of the three dissipators: recombination to G from every
/// site, trapping from site 3 into S, and pure dephasing on every site.
pub fn jump_operators(rates: &DecoherenceRates) -> Vec<CMatrix> {
    let rec = (2.0 * rates.recomb_rate).sqrt();
    let sink = (2.0 * rates.sink_rate).sqrt();
    let deph = (2.0 * rates.dephasing_rate).sqrt();
    let mut ops = Vec::with_capacity(2 * N_SITES + 1);
    for m in 1..=N_SITES {
        ops.push(projector(GROUND, m, rec));
    }
    ops.push(projector(SINK, SINK_SITE, sink));
    for m in 1..=N_SITES {
        ops.push(projector(m, m, deph));
    }
    ops
}

/// The 81×81 generator `L` with `d vec(ρ)/dt = L vec(ρ)`.
pub fn liouvillian(h: &FmoHamiltonian, rates: &DecoherenceRates) -> CMatrix {
    let i9 = identity(DIM);
    let h9 = embedded_hamiltonian(h);
    let minus_i = Complex64::new(0.0, -1.0);
    let mut l = (kron(&h9, &i9) - kron(&i9, &h9.transpose())) * minus_i;
    for a in jump_operators(rates) {
        let ada = a.adjoint() * &a;
        l += kron(&a, &a.map(|z| z.conj()));
        l -= kron(&ada, &i9) * Complex64::new(0.5, 0.0);
        l -= kron(&i9, &ada.transpose()) * Complex64::new(0.5, 0.0);
    }
    l
}

/// Applies a superoperator to a 9×9 matrix.
pub fn apply_superoperator(l: &CMatrix, rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let v = CMatrix::from_fn(n * n, 1, |k, _| rho[(k / n, k % n)]);
    let out = l * v;
    CMatrix::from_fn(n, n, |i, j| out[(i * n + j, 0)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a uniform step inside each
    /// grid interval of at most `max_step` ps and at most
    /// `RK4_STEP_SCALE` over the largest diagonal rate.
    Rk4 { max_step: f64 },
    /// Matrix exponential of the full generator over each grid interval.
    Expm,
}

impl Method {
    pub fn rk4() -> Self {
        Self::Rk4 {
            max_step: RK4_MAX_STEP,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rk4" => Ok(Self::rk4()),
            "expm" => Ok(Self::Expm),
            other => Err(Error::Parse(format!(
                "unknown integrator {other:?} (expected rk4 or expm)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rk4 { .. } => "rk4",
            Self::Expm => "expm",
        })
    }
}

/// States aligned to a strictly increasing time grid in ps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FmoState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Log,
    Linear,
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "log" => Ok(Self::Log),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Parse(format!(
                "unknown grid {other:?} (expected log or linear)"
            ))),
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Log => "log",
            Self::Linear => "linear",
        })
    }
}

/// First nonzero time of a logarithmic grid, in ps (1 fs).
pub const LOG_GRID_START: f64 = 1e-3;

/// Time grid starting at 0 with `points` entries.
///
/// A log grid is `0` followed by `points − 1` log-spaced times from 1 fs (or
/// `t_max / (points − 1)` if smaller) to `t_max`.
pub fn time_grid(kind: GridKind, t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::validation(
            "positive-tmax",
            format!("t_max = {t_max}"),
        ));
    }
    if points < 2 {
        return Err(Error::validation(
            "grid-points",
            format!("{points} points, need >= 2"),
        ));
    }
    let grid = match kind {
        GridKind::Linear => (0..points)
            .map(|k| t_max * k as f64 / (points - 1) as f64)
            .collect(),
        GridKind::Log => {
            let n = points - 1;
            let start = LOG_GRID_START.min(t_max / n as f64);
            let mut grid = vec![0.0];
            if n == 1 {
                grid.push(t_max);
            } else {
                let (l0, l1) = (start.ln(), t_max.ln());
                for k in 0..n {
                    grid.push((l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp());
                }
                *grid.last_mut().unwrap() = t_max;
            }
            grid
        }
    };
    Ok(grid)
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        Some(&0.0) => {}
        _ => {
            return Err(Error::validation(
                "grid-starts-at-zero",
                "time grid must start at 0",
            ))
        }
    }
    for w in t_grid.windows(2) {
        if !(w[1].is_finite() && w[1] > w[0]) {
            return Err(Error::validation(
                "increasing-grid",
                format!("time grid not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
    }
    Ok(())
}

/// Partition of the vectorized coordinates into blocks that the generator
/// never couples.
fn invariant_blocks(l: &CMatrix) -> Vec<Vec<usize>> {
    let n = l.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && l[(i, j)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_of_block: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of_block.iter().position(|&x| x == r) {
            Some(k) => blocks[k].push(i),
            None => {
                root_of_block.push(r);
                blocks.push(vec![i]);
            }
        }
    }
    blocks
}

/// `n` RK4 steps of size `h` for the linear system `ẋ = G x`, as the
/// increment `P^n - I` where `P = I + hG + (hG)²/2 + (hG)³/6 + (hG)⁴/24`.
/// Squaring in increment form keeps the small-step update above roundoff.
fn rk4_increment(g: &CMatrix, h: f64, mut n: u64) -> CMatrix {
    let size = g.nrows();
    let hg = g * Complex64::new(h, 0.0);
    let eye = identity(size);
    let mut d = &eye + &hg * Complex64::new(0.25, 0.0);
    d = &eye + (&hg * d) * Complex64::new(1.0 / 3.0, 0.0);
    d = &eye + (&hg * d) * Complex64::new(0.5, 0.0);
    d = &hg * d;
    let mut acc = CMatrix::zeros(size, size);
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc + &d + &acc * &d;
        }
        n >>= 1;
        if n > 0 {
            d = &d * Complex64::new(2.0, 0.0) + &d * &d;
        }
    }
    acc
}

struct Rk4Propagator {
    blocks: Vec<(Vec<usize>, CMatrix, f64)>,
}

impl Rk4Propagator {
    fn new(l: &CMatrix, max_step: f64) -> Self {
        let blocks = invariant_blocks(l)
            .into_iter()
            .map(|idx| {
                let g = CMatrix::from_fn(idx.len(), idx.len(), |a, b| l[(idx[a], idx[b])]);
                let rate = (0..idx.len()).map(|a| g[(a, a)].norm()).fold(0.0, f64::max);
                let step = if rate > 0.0 {
                    max_step.min(RK4_STEP_SCALE / rate)
                } else {
                    max_step
                };
                (idx, g, step)
            })
            .collect();
        Self { blocks }
    }

    /// Applies `steps` RK4 steps per block through a power of the step matrix.
    fn advance(&self, v: &mut [Complex64], dt: f64) {
        for (idx, g, max_step) in &self.blocks {
            if idx.iter().all(|&k| v[k] == ZERO) {
                continue;
            }
            let steps = (dt / max_step - 1e-9).ceil().max(1.0);
            let d = rk4_increment(g, dt / steps, steps as u64);
            let x = CMatrix::from_fn(idx.len(), 1, |a, _| v[idx[a]]);
            let y = &x + d * &x;
            for (a, &k) in idx.iter().enumerate() {
                v[k] = y[(a, 0)];
            }
        }
    }
}

fn emit_state(v: &[Complex64], t: f64) -> Result<FmoState> {
    let m = CMatrix::from_fn(DIM, DIM, |i, j| v[i * DIM + j]);
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::AtTime {
            t_ps: t,
            source: Box::new(Error::Numerical(
                "non-finite density matrix; reduce the integrator step".into(),
            )),
        });
    }
    let m = hermitian_part(&m);
    let drift = (trace(&m) - ONE).norm();
    if drift > TRACE_DRIFT_TOL {
        return Err(Error::AtTime {
            t_ps: t,
            source: Box::new(Error::Numerical(format!(
                "trace drift {drift:.3e} exceeds {TRACE_DRIFT_TOL:e}; reduce the integrator step"
            ))),
        });
    }
    let rho = DensityOperator::from_parts(m, basis_labels())?;
    let min_eig = rho.min_eigenvalue();
    if min_eig < NEGATIVITY_TOL {
        return Err(Error::AtTime {
            t_ps: t,
            source: Box::new(Error::Numerical(format!(
                "density matrix eigenvalue {min_eig:.3e} below {NEGATIVITY_TOL:e}"
            ))),
        });
    }
    FmoState::with_tolerance(rho, TRAJECTORY_COHERENCE_TOL).map_err(|e| Error::AtTime {
        t_ps: t,
        source: Box::new(e),
    })
}

/// Integrates the master equation from `rho0` over `t_grid` (ps, starting
/// at 0).
pub fn evolve(
    rho0: &FmoState,
    h: &FmoHamiltonian,
    rates: &DecoherenceRates,
    t_grid: &[f64],
    method: Method,
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    let l = liouvillian(h, rates);
    let mut v: Vec<Complex64> = rho0.matrix().transpose().iter().copied().collect();
    let mut states = Vec::with_capacity(t_grid.len());
    states.push(rho0.clone());

    match method {
        Method::Rk4 { max_step } => {
            if !(max_step.is_finite() && max_step > 0.0) {
                return Err(Error::validation(
                    "positive-step",
                    format!("max_step = {max_step}"),
                ));
            }
            let prop = Rk4Propagator::new(&l, max_step);
            for w in t_grid.windows(2) {
                prop.advance(&mut v, w[1] - w[0]);
                states.push(emit_state(&v, w[1])?);
            }
        }
        Method::Expm => {
            for w in t_grid.windows(2) {
                let u = (&l * Complex64::new(w[1] - w[0], 0.0)).exp();
                let x = CMatrix::from_column_slice(v.len(), 1, &v);
                let y = u * x;
                v.copy_from_slice(y.as_slice());
                states.push(emit_state(&v, w[1])?);
            }
        }
    }

    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}
