//! Random states for property tests, oracles and benchmarks.

use num_complex::Complex64;
use rand::Rng;

use crate::cut::{BipartiteCut, CutState};
use crate::linalg::{CMatrix, DensityOperator};

/// Full-rank random density matrix `G G† / Tr(G G†)` with `G` drawn
/// entrywise uniform on the unit square.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    crate::linalg::hermitian_part(&m)
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    DensityOperator::unlabeled(random_density_matrix(rng, dim)).expect("random state is valid")
}

/// Random cut state: a random density matrix on the cut basis with its
/// ground-row coherences removed.
pub fn random_cut_state<R: Rng + ?Sized>(rng: &mut R, cut: &BipartiteCut) -> CutState {
    let mut m = random_density_matrix(rng, cut.dim());
    for k in 1..cut.dim() {
        m[(0, k)] = Complex64::new(0.0, 0.0);
        m[(k, 0)] = Complex64::new(0.0, 0.0);
    }
    CutState::new(m, cut.clone()).expect("pinched state is valid")
}

/// Random cut with `n_a` and `n_b` distinct sites.
pub fn random_cut<R: Rng + ?Sized>(rng: &mut R, n_a: usize, n_b: usize) -> BipartiteCut {
    let mut sites: Vec<usize> = (1..=7).collect();
    for i in (1..sites.len()).rev() {
        let j = rng.random_range(0..=i);
        sites.swap(i, j);
    }
    BipartiteCut::new(&sites[..n_a], &sites[n_a..n_a + n_b]).expect("distinct sites")
}
