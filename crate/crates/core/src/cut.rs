//! Bipartite cuts of the seven sites, the ground-absorbing reduction of an
//! FMO state onto a cut, the block decomposition of a cut state, and the
//! qubit embedding.
//!
//! A cut state lives on the ordered basis (G, A-sites ascending, B-sites
//! ascending). In the qubit picture each kept site is a qubit with levels
//! `g`/`e`; A qubits come first, then B qubits, and the first qubit is the
//! most significant bit of the basis index.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dynamics::{FmoState, SINK};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityOperator, ZERO};
use crate::model::N_SITES;

/// Allowed |χ_{G,k}| in a cut state.
pub const CUT_COHERENCE_TOL: f64 = 1e-9;
/// Allowed population outside the zero/single-excitation strings of an
/// embedded state.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Which party of a cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Self::A => Self::B,
            Self::B => Self::A,
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            other => Err(Error::Parse(format!(
                "unknown side {other:?} (expected A or B)"
            ))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A => "A",
            Self::B => "B",
        })
    }
}

/// Two disjoint, nonempty sets of sites (1-based), each stored ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BipartiteCut {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl BipartiteCut {
    pub fn new(a: &[usize], b: &[usize]) -> Result<Self> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        for (name, set) in [("A", &a), ("B", &b)] {
            if set.is_empty() {
                return Err(Error::validation(
                    "nonempty-party",
                    format!("party {name} is empty"),
                ));
            }
            if let Some(&s) = set.iter().find(|&&s| !(1..=N_SITES).contains(&s)) {
                return Err(Error::validation(
                    "site-range",
                    format!("site {s} in party {name} outside 1..={N_SITES}"),
                ));
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::validation(
                    "distinct-sites",
                    format!("party {name} lists a site twice"),
                ));
            }
        }
        if let Some(&s) = a.iter().find(|s| b.contains(s)) {
            return Err(Error::validation(
                "disjoint-parties",
                format!("site {s} appears in both parties"),
            ));
        }
        Ok(Self { a, b })
    }

    pub fn a_sites(&self) -> &[usize] {
        &self.a
    }

    pub fn b_sites(&self) -> &[usize] {
        &self.b
    }

    pub fn sites(&self, side: Side) -> &[usize] {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    /// The same partition with the party names exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// Kept sites in cut-basis order (A then B), without G.
    pub fn kept_sites(&self) -> Vec<usize> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    /// Dimension of the restricted cut basis.
    pub fn dim(&self) -> usize {
        1 + self.a.len() + self.b.len()
    }

    /// Basis labels of a cut state: `G` then site numbers.
    pub fn labels(&self) -> Vec<String> {
        std::iter::once("G".to_string())
            .chain(self.kept_sites().iter().map(|s| s.to_string()))
            .collect()
    }
}

impl FromStr for BipartiteCut {
    type Err = Error;

    /// Parses `A=3;B=1,6`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("cut {s:?} is not of the form \"A=3;B=1,6\""));
        let mut a = None;
        let mut b = None;
        for part in s.split(';') {
            let (key, list) = part.split_once('=').ok_or_else(bad)?;
            let sites = list
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            let slot = match key.trim() {
                "A" => &mut a,
                "B" => &mut b,
                _ => return Err(bad()),
            };
            if slot.replace(sites).is_some() {
                return Err(bad());
            }
        }
        Self::new(&a.ok_or_else(bad)?, &b.ok_or_else(bad)?)
    }
}

impl fmt::Display for BipartiteCut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "A={};B={}", join(&self.a), join(&self.b))
    }
}

/// Joint state of a cut on the basis (G, A-sites, B-sites).
#[derive(Debug, Clone, PartialEq)]
pub struct CutState {
    rho: DensityOperator,
    cut: BipartiteCut,
}

impl CutState {
    pub fn new(m: CMatrix, cut: BipartiteCut) -> Result<Self> {
        let state = Self::from_parts(m, cut)?;
        state.rho.validate()?;
        let c = state.ground_coherence();
        if c > CUT_COHERENCE_TOL {
            return Err(Error::validation(
                "no-ground-excited-coherence",
                format!("coherence between G and an excited site of magnitude {c:.3e}"),
            ));
        }
        Ok(state)
    }

    /// Validates the density-operator invariants only, admitting coherence
    /// between G and the excited sites. Such states lie outside what the
    /// dynamics produce; measures that rely on the block structure reject
    /// them.
    pub fn with_ground_coherence(m: CMatrix, cut: BipartiteCut) -> Result<Self> {
        let state = Self::from_parts(m, cut)?;
        state.rho.validate()?;
        Ok(state)
    }

    fn from_parts(m: CMatrix, cut: BipartiteCut) -> Result<Self> {
        if m.nrows() != cut.dim() || m.ncols() != cut.dim() {
            return Err(Error::Dimension(format!(
                "cut {cut} needs a {}x{} state, got {}x{}",
                cut.dim(),
                cut.dim(),
                m.nrows(),
                m.ncols()
            )));
        }
        let rho = DensityOperator::from_parts(m, cut.labels())?;
        Ok(Self { rho, cut })
    }

    pub fn cut(&self) -> &BipartiteCut {
        &self.cut
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn n_a(&self) -> usize {
        self.cut.a.len()
    }

    pub fn n_b(&self) -> usize {
        self.cut.b.len()
    }

    /// Largest |χ_{G,k}| over excited k.
    pub fn ground_coherence(&self) -> f64 {
        let m = self.matrix();
        (1..self.dim())
            .map(|k| m[(0, k)].norm().max(m[(k, 0)].norm()))
            .fold(0.0, f64::max)
    }

    /// The same state with parties exchanged, basis reordered to
    /// (G, old B-sites, old A-sites).
    pub fn swapped(&self) -> Self {
        let (na, nb) = (self.n_a(), self.n_b());
        let perm: Vec<usize> = std::iter::once(0)
            .chain(1 + na..1 + na + nb)
            .chain(1..1 + na)
            .collect();
        let m = self.matrix();
        let swapped = CMatrix::from_fn(self.dim(), self.dim(), |i, j| m[(perm[i], perm[j])]);
        Self::from_parts(swapped, self.cut.swapped()).expect("dimensions preserved")
    }

    /// The state on `(|A|+1) ⊗ (|B|+1)`, the tensor product of the two
    /// parties' zero/single-excitation supports. Party index 0 is the
    /// party's ground level, index `k` its `k`-th site.
    pub fn support_joint(&self) -> CMatrix {
        let (da, db) = (self.n_a() + 1, self.n_b() + 1);
        let na = self.n_a();
        let to_joint = |k: usize| -> usize {
            if k == 0 {
                0
            } else if k <= na {
                k * db
            } else {
                k - na
            }
        };
        let m = self.matrix();
        let mut j = CMatrix::zeros(da * db, da * db);
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                j[(to_joint(r), to_joint(c))] = m[(r, c)];
            }
        }
        j
    }
}

/// Reduces a nine-level state onto a cut: kept-site entries are copied and
/// the ground level of the cut absorbs G, S and every untracked site.
pub fn reduce_to_cut(rho: &FmoState, cut: &BipartiteCut) -> Result<CutState> {
    let kept = cut.kept_sites();
    let n = kept.len() + 1;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(n, n);
    for (i, &si) in kept.iter().enumerate() {
        for (j, &sj) in kept.iter().enumerate() {
            out[(i + 1, j + 1)] = m[(si, sj)];
        }
    }
    let ground = m[(0, 0)].re
        + m[(SINK, SINK)].re
        + (1..=N_SITES)
            .filter(|s| !kept.contains(s))
            .map(|s| m[(s, s)].re)
            .sum::<f64>();
    out[(0, 0)] = Complex64::new(ground, 0.0);
    // Ground-site coherences of the full state carry over unchanged; they
    // vanish under the dynamics.
    for (i, &si) in kept.iter().enumerate() {
        out[(0, i + 1)] = m[(0, si)];
        out[(i + 1, 0)] = m[(si, 0)];
    }
    CutState::new(out, cut.clone())
}

/// The pieces `χ = α Π_g + ρ_e^A ⊗ |G⟩⟨G| + |G⟩⟨G| ⊗ ρ_e^B + τ + h.c.`
/// of a cut state.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub alpha: f64,
    pub rho_e_a: CMatrix,
    pub rho_e_b: CMatrix,
    /// Cross block with A rows and B columns.
    pub tau: CMatrix,
    /// First-row entries `χ_{G,k}`, zero for every state the dynamics
    /// produce; kept so that reassembly is exact.
    pub ground_row: Vec<Complex64>,
    cut: BipartiteCut,
}

impl BlockDecomposition {
    pub fn cut(&self) -> &BipartiteCut {
        &self.cut
    }

    pub fn reassemble_matrix(&self) -> CMatrix {
        let (na, nb) = (self.rho_e_a.nrows(), self.rho_e_b.nrows());
        let n = 1 + na + nb;
        let mut m = CMatrix::zeros(n, n);
        m[(0, 0)] = Complex64::new(self.alpha, 0.0);
        for k in 1..n {
            m[(0, k)] = self.ground_row[k - 1];
            m[(k, 0)] = self.ground_row[k - 1].conj();
        }
        m.view_mut((1, 1), (na, na)).copy_from(&self.rho_e_a);
        m.view_mut((1 + na, 1 + na), (nb, nb))
            .copy_from(&self.rho_e_b);
        m.view_mut((1, 1 + na), (na, nb)).copy_from(&self.tau);
        m.view_mut((1 + na, 1), (nb, na))
            .copy_from(&self.tau.adjoint());
        m
    }

    pub fn reassemble(&self) -> Result<CutState> {
        CutState::new(self.reassemble_matrix(), self.cut.clone())
    }

    /// `α + Tr ρ_e^A + Tr ρ_e^B`.
    pub fn total_weight(&self) -> f64 {
        self.alpha + self.rho_e_a.trace().re + self.rho_e_b.trace().re
    }
}

pub fn block_decompose(chi: &CutState) -> BlockDecomposition {
    let (na, nb) = (chi.n_a(), chi.n_b());
    let m = chi.matrix();
    BlockDecomposition {
        alpha: m[(0, 0)].re,
        rho_e_a: m.view((1, 1), (na, na)).into_owned(),
        rho_e_b: m.view((1 + na, 1 + na), (nb, nb)).into_owned(),
        tau: m.view((1, 1 + na), (na, nb)).into_owned(),
        ground_row: (1..chi.dim()).map(|k| m[(0, k)]).collect(),
        cut: chi.cut.clone(),
    }
}

/// `χ` with every coherence between the blocks G, A and B erased.
pub fn delta_bar(chi: &CutState) -> CutState {
    let (na, nb) = (chi.n_a(), chi.n_b());
    let block = |k: usize| {
        if k == 0 {
            0
        } else if k <= na {
            1
        } else {
            2
        }
    };
    let m = chi.matrix();
    let out = CMatrix::from_fn(1 + na + nb, 1 + na + nb, |i, j| {
        if block(i) == block(j) {
            m[(i, j)]
        } else {
            ZERO
        }
    });
    CutState::from_parts(out, chi.cut.clone()).expect("dimensions preserved")
}

/// Qubit-string label (`g`/`e` per kept site, A qubits first) of basis index
/// `index` on `n` qubits.
pub fn qubit_label(index: usize, n: usize) -> String {
    (0..n)
        .map(|p| {
            if index >> (n - 1 - p) & 1 == 1 {
                'e'
            } else {
                'g'
            }
        })
        .collect()
}

/// Embedded basis index of cut-basis index `k` on `n` qubits.
fn embedded_index(k: usize, n: usize) -> usize {
    if k == 0 {
        0
    } else {
        1 << (n - k)
    }
}

/// A cut state written on the full qubit space of its kept sites.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCutState {
    rho: DensityOperator,
    cut: BipartiteCut,
}

impl EmbeddedCutState {
    /// Wraps a qubit-space state, checking that it lives on the
    /// zero/single-excitation strings.
    pub fn new(m: CMatrix, cut: BipartiteCut) -> Result<Self> {
        let n = cut.a.len() + cut.b.len();
        let dim = 1usize << n;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::Dimension(format!(
                "cut {cut} embeds into dimension {dim}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let labels = (0..dim).map(|i| qubit_label(i, n)).collect();
        let rho = DensityOperator::new(m, labels)?;
        let outside: f64 = (0..dim)
            .filter(|i| i.count_ones() >= 2)
            .map(|i| rho.get(i, i).re)
            .sum();
        if outside > SUPPORT_TOL {
            return Err(Error::validation(
                "single-excitation-support",
                format!("population {outside:.3e} on multiply-excited strings"),
            ));
        }
        Ok(Self { rho, cut })
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn matrix(&self) -> &CMatrix {
        self.rho.matrix()
    }

    pub fn cut(&self) -> &BipartiteCut {
        &self.cut
    }

    pub fn n_qubits(&self) -> usize {
        self.cut.a.len() + self.cut.b.len()
    }

    /// Factor dimensions `[2^|A|, 2^|B|]`.
    pub fn party_dims(&self) -> [usize; 2] {
        [1 << self.cut.a.len(), 1 << self.cut.b.len()]
    }

    /// Inverse of [`embed_full`].
    pub fn project(&self) -> Result<CutState> {
        let n = self.n_qubits();
        let m = self.matrix();
        let out = CMatrix::from_fn(n + 1, n + 1, |i, j| {
            m[(embedded_index(i, n), embedded_index(j, n))]
        });
        CutState::new(out, self.cut.clone())
    }
}

/// Writes a cut state on the qubit space `2^|A| ⊗ 2^|B|`: G maps to the
/// all-`g` string and each kept site to the string with a single `e` at its
/// position.
pub fn embed_full(chi: &CutState) -> EmbeddedCutState {
    let n = chi.n_a() + chi.n_b();
    let dim = 1usize << n;
    let m = chi.matrix();
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..=n {
        for j in 0..=n {
            out[(embedded_index(i, n), embedded_index(j, n))] = m[(i, j)];
        }
    }
    let labels = (0..dim).map(|i| qubit_label(i, n)).collect();
    EmbeddedCutState {
        rho: DensityOperator::from_parts(out, labels).expect("square and labelled"),
        cut: chi.cut.clone(),
    }
}

/// Indices of the zero/single-excitation strings of one party's qubit
/// space, ordered (all-`g`, first qubit excited, second, ...).
pub(crate) fn party_support(n_qubits: usize) -> Vec<usize> {
    (0..=n_qubits)
        .map(|k| embedded_index(k, n_qubits))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, spectrum_entropy};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// (|e⟩_A|G⟩_B + |G⟩_A|e⟩_B)/√2 on the cut A={3}, B={1}.
    fn bell_like() -> CutState {
        let cut = BipartiteCut::new(&[3], &[1]).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        for i in 1..3 {
            for j in 1..3 {
                m[(i, j)] = c(0.5);
            }
        }
        CutState::new(m, cut).unwrap()
    }

    #[test]
    fn cut_string_round_trip() {
        let cut: BipartiteCut = "A=3;B=1,6".parse().unwrap();
        assert_eq!(cut.a_sites(), &[3]);
        assert_eq!(cut.b_sites(), &[1, 6]);
        assert_eq!(cut.to_string(), "A=3;B=1,6");
        let spaced: BipartiteCut = " A = 6,1 ; B = 3 ".parse().unwrap();
        assert_eq!(spaced.to_string(), "A=1,6;B=3");
        assert!("A=3;B=3,1".parse::<BipartiteCut>().is_err());
        assert!("A=3".parse::<BipartiteCut>().is_err());
        assert!("A=;B=1".parse::<BipartiteCut>().is_err());
        assert!("A=0;B=1".parse::<BipartiteCut>().is_err());
        assert!("A=3;B=1;A=2".parse::<BipartiteCut>().is_err());
        assert!("X=3;B=1".parse::<BipartiteCut>().is_err());
    }

    #[test]
    fn overlapping_cut_is_validation_error() {
        match BipartiteCut::new(&[3, 1], &[1]) {
            Err(Error::Validation { rule, .. }) => assert_eq!(rule, "disjoint-parties"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduction_relabels_single_population() {
        let cut: BipartiteCut = "A=3;B=1,6".parse().unwrap();
        let chi = reduce_to_cut(&FmoState::site(1).unwrap(), &cut).unwrap();
        assert_eq!(chi.density().populations(), vec![0.0, 0.0, 1.0, 0.0]);
        let mix = reduce_to_cut(&FmoState::mixture(&[1, 6]).unwrap(), &cut).unwrap();
        assert_eq!(mix.density().populations(), vec![0.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn reduction_onto_one_site_absorbs_everything_else() {
        let cut = BipartiteCut::new(&[1], &[2]).unwrap();
        let rho = FmoState::mixture(&[1, 4, 5, 7]).unwrap();
        let chi = reduce_to_cut(&rho, &cut).unwrap();
        assert_eq!(chi.density().populations(), vec![0.75, 0.25, 0.0]);
    }

    #[test]
    fn block_decomposition_of_bell_like_state() {
        let bd = block_decompose(&bell_like());
        assert_eq!(bd.alpha, 0.0);
        assert_eq!(bd.rho_e_a[(0, 0)], c(0.5));
        assert_eq!(bd.rho_e_b[(0, 0)], c(0.5));
        assert_eq!(bd.tau[(0, 0)].norm(), 0.5);
        assert_eq!(bd.reassemble_matrix(), *bell_like().matrix());
        assert!((bd.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_bar_erases_cross_block() {
        let db = delta_bar(&bell_like());
        assert_eq!(db.density().populations(), vec![0.0, 0.5, 0.5]);
        assert_eq!(db.matrix()[(1, 2)], ZERO);
        assert_eq!(delta_bar(&db), db);
        let diag = delta_bar(&db);
        assert_eq!(block_decompose(&diag).tau, CMatrix::zeros(1, 1));
    }

    #[test]
    fn embedding_places_strings() {
        let chi = bell_like();
        let e = embed_full(&chi);
        assert_eq!(e.density().labels(), &["gg", "ge", "eg", "ee"]);
        let m = e.matrix();
        // A = first qubit: site 3 excited is "eg" (index 2), site 1 is "ge".
        assert_eq!(m[(2, 2)], c(0.5));
        assert_eq!(m[(1, 1)], c(0.5));
        assert_eq!(m[(1, 2)], c(0.5));
        assert_eq!(m[(3, 3)], ZERO);
        assert_eq!(e.project().unwrap(), chi);
        assert!((e.density().purity() - chi.density().purity()).abs() < 1e-15);
        let s1 = spectrum_entropy(&e.density().eigenvalues());
        let s2 = spectrum_entropy(&chi.density().eigenvalues());
        assert!((s1 - s2).abs() < 1e-12);
        assert!(EmbeddedCutState::new(m.clone(), chi.cut().clone()).is_ok());
    }

    #[test]
    fn embedded_support_check() {
        let cut = BipartiteCut::new(&[3], &[1]).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        m[(3, 3)] = c(1.0);
        match EmbeddedCutState::new(m, cut) {
            Err(Error::Validation { rule, .. }) => assert_eq!(rule, "single-excitation-support"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn swap_and_support_joint() {
        let cut: BipartiteCut = "A=3;B=1,6".parse().unwrap();
        let mut m = CMatrix::zeros(4, 4);
        let vals = [0.1, 0.2, 0.3, 0.4];
        for k in 0..4 {
            m[(k, k)] = c(vals[k]);
        }
        m[(1, 3)] = Complex64::new(0.05, 0.02);
        m[(3, 1)] = Complex64::new(0.05, -0.02);
        let chi = CutState::new(m, cut).unwrap();
        let sw = chi.swapped();
        assert_eq!(sw.cut().to_string(), "A=1,6;B=3");
        assert_eq!(sw.density().populations(), vec![0.1, 0.3, 0.4, 0.2]);
        assert_eq!(sw.swapped(), chi);

        let j = chi.support_joint();
        assert_eq!(j.nrows(), 6);
        // (a=1, b=0) is A excited, B ground: index 1*3+0.
        assert_eq!(j[(3, 3)], c(0.2));
        assert_eq!(j[(3, 2)], Complex64::new(0.05, 0.02));
        assert!((j.trace().re - 1.0).abs() < 1e-15);

        let e = embed_full(&chi);
        let back = e.project().unwrap();
        assert!(max_abs_diff(back.matrix(), chi.matrix()) == 0.0);
    }

    #[test]
    fn ground_coherence_rejected() {
        let cut = BipartiteCut::new(&[3], &[1]).unwrap();
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.5);
        m[(0, 1)] = c(0.1);
        m[(1, 0)] = c(0.1);
        assert!(CutState::new(m, cut).is_err());
    }
}
