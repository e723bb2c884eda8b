use fmo_core::correlations::{
    coherent_information_of, conditional_entropy_for_basis, MeasurementBasis,
};
use fmo_core::linalg::CMatrix;
use fmo_core::{DensityOperator, Side};
use num_complex::Complex64;

/// `½|0⟩⟨0| ⊗ |+⟩⟨+| + ½|−⟩⟨−| ⊗ |1⟩⟨1|`: separable, yet with nonzero
/// discord when A is measured.
pub fn sample_state() -> DensityOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |v: [f64; 2]| CMatrix::from_fn(2, 1, |i, _| Complex64::new(v[i], 0.0));
    let proj = |v: [f64; 2]| {
        let k = ket(v);
        &k * k.adjoint()
    };
    let term = |a: [f64; 2], b: [f64; 2]| proj(a).kronecker(&proj(b));
    let m = (term([1.0, 0.0], [s, s]) + term([s, -s], [0.0, 1.0])) * Complex64::new(0.5, 0.0);
    DensityOperator::unlabeled(m).unwrap()
}

/// Discord with A measured, from a brute-force search over the Bloch
/// sphere: a 1° global grid followed by two zoomed grids.
pub fn brute_force_discord_a(rho: &DensityOperator) -> f64 {
    let cond = |theta: f64, phi: f64| {
        conditional_entropy_for_basis(
            rho,
            [2, 2],
            Side::A,
            &MeasurementBasis::from_angles(theta, phi),
        )
        .unwrap()
    };
    let pi = std::f64::consts::PI;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let scan = |best: &mut (f64, f64, f64), t0: f64, t1: f64, p0: f64, p1: f64, n: usize| {
        for i in 0..=n {
            let t = (t0 + (t1 - t0) * i as f64 / n as f64).clamp(0.0, pi);
            for j in 0..=n {
                let p = p0 + (p1 - p0) * j as f64 / n as f64;
                let v = cond(t, p);
                if v < best.0 {
                    *best = (v, t, p);
                }
            }
        }
    };
    scan(&mut best, 0.0, pi, 0.0, 2.0 * pi, 360);
    let deg = pi / 180.0;
    for width in [2.0 * deg, 0.02 * deg] {
        let (_, t, p) = best;
        scan(&mut best, t - width, t + width, p - width, p + width, 200);
    }
    coherent_information_of(rho, [2, 2]).unwrap() + best.0
}
