//! State and operator algebra on (truncated Fock space of the CM mode)
//! ⊗ (optional spectator modes) ⊗ C² ⊗ C².
//!
//! Basis ordering: the spin of ion 2 varies fastest, then the spin of ion 1,
//! then the spectator Fock indices, then the CM Fock index.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance on the squared norm of every [`StateVector`].
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Tolerance on `max |A - A^dag|` for operators flagged Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const MAX_SPECTATOR_MODES: usize = 2;

/// Internal state of one ion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    #[serde(alias = "ground")]
    G,
    #[serde(alias = "excited")]
    E,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::G => 0,
            Spin::E => 1,
        }
    }

    pub fn from_index(i: usize) -> Spin {
        if i == 0 { Spin::G } else { Spin::E }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::G => Spin::E,
            Spin::E => Spin::G,
        }
    }

    /// Eigenvalue of sigma_z (+1 on |e>).
    pub fn sigma_z(self) -> f64 {
        match self {
            Spin::G => -1.0,
            Spin::E => 1.0,
        }
    }
}

/// The four two-qubit computational states, in matrix order.
pub const SPIN_PAIRS: [(Spin, Spin); 4] =
    [(Spin::G, Spin::G), (Spin::G, Spin::E), (Spin::E, Spin::G), (Spin::E, Spin::E)];

/// Truncation of the composite Hilbert space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertGeometry {
    pub m_max: usize,
    pub n_spectator_modes: usize,
    pub spectator_m_max: usize,
}

/// Decoded position in the composite basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisLabel {
    pub m: usize,
    pub spectators: [usize; MAX_SPECTATOR_MODES],
    pub s1: Spin,
    pub s2: Spin,
}

impl HilbertGeometry {
    /// CM mode only.
    pub fn new(m_max: usize) -> Result<Self> {
        Self::with_spectators(m_max, 0, 0)
    }

    pub fn with_spectators(
        m_max: usize,
        n_spectator_modes: usize,
        spectator_m_max: usize,
    ) -> Result<Self> {
        if m_max < 1 {
            return Err(Error::InvalidGeometry("m_max must be at least 1".into()));
        }
        if n_spectator_modes > MAX_SPECTATOR_MODES {
            return Err(Error::InvalidGeometry(format!(
                "at most {MAX_SPECTATOR_MODES} spectator modes are supported, got {n_spectator_modes}"
            )));
        }
        if n_spectator_modes > 0 && spectator_m_max < 1 {
            return Err(Error::InvalidGeometry(
                "spectator_m_max must be at least 1 when spectator modes are present".into(),
            ));
        }
        let g = HilbertGeometry {
            m_max,
            n_spectator_modes,
            spectator_m_max: if n_spectator_modes == 0 { 0 } else { spectator_m_max },
        };
        if g.dim() > 1 << 16 {
            return Err(Error::InvalidGeometry(format!("dimension {} is too large", g.dim())));
        }
        Ok(g)
    }

    /// Default truncation for dynamics starting at Fock index `m_work` with
    /// sideband order `k1`: `m_work + |k1| + 20`.
    pub fn default_for(m_work: usize, k1: i32) -> Self {
        HilbertGeometry {
            m_max: m_work + k1.unsigned_abs() as usize + 20,
            n_spectator_modes: 0,
            spectator_m_max: 0,
        }
    }

    pub fn fock_dim(&self) -> usize {
        self.m_max + 1
    }

    pub fn spectator_dim(&self) -> usize {
        (self.spectator_m_max + 1).pow(self.n_spectator_modes as u32)
    }

    /// Dimension of the motional part (CM ⊗ spectators).
    pub fn motional_dim(&self) -> usize {
        self.fock_dim() * self.spectator_dim()
    }

    pub fn dim(&self) -> usize {
        self.motional_dim() * 4
    }

    pub fn index(&self, m: usize, spectators: &[usize], s1: Spin, s2: Spin) -> Result<usize> {
        if m > self.m_max {
            return Err(Error::FockOutOfRange { index: m, m_max: self.m_max });
        }
        let mut spec = 0;
        for l in 0..self.n_spectator_modes {
            let n = spectators.get(l).copied().unwrap_or(0);
            if n > self.spectator_m_max {
                return Err(Error::FockOutOfRange { index: n, m_max: self.spectator_m_max });
            }
            spec = spec * (self.spectator_m_max + 1) + n;
        }
        if spectators.iter().skip(self.n_spectator_modes).any(|&n| n != 0) {
            return Err(Error::InvalidGeometry("spectator index given for an absent mode".into()));
        }
        Ok(((m * self.spectator_dim() + spec) * 2 + s1.index()) * 2 + s2.index())
    }

    pub fn label(&self, idx: usize) -> BasisLabel {
        let s2 = Spin::from_index(idx & 1);
        let s1 = Spin::from_index((idx >> 1) & 1);
        let motional = idx >> 2;
        let sd = self.spectator_dim();
        let m = motional / sd;
        let mut spec = motional % sd;
        let mut spectators = [0; MAX_SPECTATOR_MODES];
        for l in (0..self.n_spectator_modes).rev() {
            spectators[l] = spec % (self.spectator_m_max + 1);
            spec /= self.spectator_m_max + 1;
        }
        BasisLabel { m, spectators, s1, s2 }
    }
}

/// Normalized state on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
    geometry: HilbertGeometry,
}

impl StateVector {
    /// `|m>|s1>|s2>` with spectator modes in their ground state.
    pub fn basis(geometry: HilbertGeometry, m: usize, s1: Spin, s2: Spin) -> Result<Self> {
        let idx = geometry.index(m, &[], s1, s2)?;
        let mut amplitudes = CVector::zeros(geometry.dim());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(StateVector { amplitudes, geometry })
    }

    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(geometry: HilbertGeometry, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != geometry.dim() {
            return Err(Error::DimensionMismatch { expected: geometry.dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(StateVector { amplitudes: amplitudes.unscale(norm), geometry })
    }

    /// Superposition `sum c_i |m_i, s1_i, s2_i>`, normalized.
    pub fn superposition(
        geometry: HilbertGeometry,
        terms: &[(C64, usize, Spin, Spin)],
    ) -> Result<Self> {
        let mut amplitudes = CVector::zeros(geometry.dim());
        for &(c, m, s1, s2) in terms {
            amplitudes[geometry.index(m, &[], s1, s2)?] += c;
        }
        Self::from_amplitudes(geometry, amplitudes)
    }

    /// Wraps amplitudes produced by a unitary map without renormalizing.
    pub(crate) fn from_unitary_image(geometry: HilbertGeometry, amplitudes: CVector) -> Self {
        debug_assert_eq!(amplitudes.len(), geometry.dim());
        StateVector { amplitudes, geometry }
    }

    pub fn geometry(&self) -> HilbertGeometry {
        self.geometry
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Amplitude of `|m>|s1>|s2>` (spectators in the ground state).
    pub fn amplitude(&self, m: usize, s1: Spin, s2: Spin) -> C64 {
        self.geometry
            .index(m, &[], s1, s2)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.geometry != other.geometry {
            return Err(Error::DimensionMismatch {
                expected: self.geometry.dim(),
                found: other.geometry.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Re-embeds the state into another truncation. Fails if amplitude would be
    /// discarded.
    pub fn embed(&self, target: HilbertGeometry) -> Result<StateVector> {
        if target.n_spectator_modes != self.geometry.n_spectator_modes {
            return Err(Error::InvalidGeometry("cannot change the number of spectator modes".into()));
        }
        let mut out = CVector::zeros(target.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a == C64::default() {
                continue;
            }
            let l = self.geometry.label(i);
            let j = target.index(l.m, &l.spectators[..target.n_spectator_modes], l.s1, l.s2)?;
            out[j] = *a;
        }
        Ok(StateVector { amplitudes: out, geometry: target })
    }

    /// Population in the `levels` highest CM Fock states.
    pub fn top_fock_population(&self, levels: usize) -> f64 {
        let cutoff = (self.geometry.m_max + 1).saturating_sub(levels);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.geometry.label(*i).m >= cutoff)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Two-qubit amplitudes (gg, ge, eg, ee) with the bus in `|m>`.
    pub fn spin_amplitudes(&self, m: usize) -> [C64; 4] {
        SPIN_PAIRS.map(|(s1, s2)| self.amplitude(m, s1, s2))
    }

    /// Spin density matrix with all motional modes traced out.
    pub fn reduced_spin_density(&self) -> Matrix4<C64> {
        let mut rho = Matrix4::<C64>::zeros();
        for block in self.amplitudes.as_slice().chunks_exact(4) {
            for a in 0..4 {
                for b in 0..4 {
                    rho[(a, b)] += block[a] * block[b].conj();
                }
            }
        }
        rho
    }
}

/// Dense operator on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix, hermitian: bool) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        if hermitian {
            let defect = hermitian_defect(&entries);
            if defect >= HERMITIAN_TOLERANCE {
                return Err(Error::NotHermitian(defect));
            }
        }
        Ok(OperatorMatrix { entries, hermitian })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix { entries: self.entries.adjoint(), hermitian: self.hermitian }
    }

    /// `exp(-i H t)` for a Hermitian operator.
    pub fn propagator(&self, t: f64) -> Result<CMatrix> {
        if !self.hermitian {
            return Err(Error::NotHermitian(hermitian_defect(&self.entries)));
        }
        Ok(hermitian_exp(&self.entries, t))
    }
}

pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |U^dag U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let p = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// `exp(-i h t)` for Hermitian `h`, via eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.nrows();
    // symmetrize so rounding noise cannot break the Hermitian eigensolver
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda * t);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Single-mode annihilation operator on `dim` Fock levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Single-mode `exp[i eta (a^dag + a)]` on `dim` Fock levels, by diagonalizing
/// the (real symmetric) truncated position quadrature.
pub fn displacement_operator(eta: f64, dim: usize) -> CMatrix {
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        x[(n - 1, n)] = s;
        x[(n, n - 1)] = s;
    }
    let eig = x.symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, eta * lambda);
        for i in 0..dim {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.transpose()
}

/// Lifts a single-mode CM operator to the composite space (identity on the
/// spectators and spins).
pub fn lift_cm_operator(geometry: &HilbertGeometry, op: &CMatrix) -> CMatrix {
    let rest = CMatrix::identity(geometry.spectator_dim() * 4, geometry.spectator_dim() * 4);
    op.kronecker(&rest)
}

/// The CM-mode ladder operators `(a, a^dag)` on the composite space; `a^dag`
/// is truncated at the top Fock level.
pub fn ladder_operators(geometry: &HilbertGeometry) -> (OperatorMatrix, OperatorMatrix) {
    let a = lift_cm_operator(geometry, &annihilation(geometry.fock_dim()));
    let ad = a.adjoint();
    (
        OperatorMatrix { entries: a, hermitian: false },
        OperatorMatrix { entries: ad, hermitian: false },
    )
}

/// `<m| exp[i eta (a^dag + a)] |n>` in a space truncated at `m_max`.
///
/// The truncation is accepted only if widening it by ten levels moves the
/// result by at most 1e-9.
pub fn displacement_matrix_element(eta: f64, m: usize, n: usize, m_max: usize) -> Result<C64> {
    if m > m_max || n > m_max {
        return Err(Error::FockOutOfRange { index: m.max(n), m_max });
    }
    let coarse = displacement_series(eta, m, n, m_max + 1);
    let fine = displacement_series(eta, m, n, m_max + 11);
    let change = (coarse - fine).norm();
    if change > 1e-9 {
        return Err(Error::TruncationInsufficient(format!(
            "<{m}|D|{n}> moved by {change:.3e} when m_max grew from {m_max} to {}",
            m_max + 10
        )));
    }
    Ok(fine)
}

/// Taylor series of `exp(i eta X)|n>` on a `dim`-level space, summed in
/// double-double so matrix elements near a Laguerre zero keep their relative
/// accuracy. Only one of the real/imaginary parts is nonzero by parity.
fn displacement_series(eta: f64, m: usize, n: usize, dim: usize) -> C64 {
    let sqrt_levels: Vec<TwoFloat> = (1..dim).map(|i| TwoFloat::from(i as f64).sqrt()).collect();
    let mut term = vec![TwoFloat::from(0.0); dim];
    term[n] = TwoFloat::from(1.0);
    let (mut re, mut im) = (TwoFloat::from(1.0) * f64::from(m == n), TwoFloat::from(0.0));
    let mut peak: f64 = 1.0;
    for j in 1.. {
        let mut next = vec![TwoFloat::from(0.0); dim];
        for i in 0..dim {
            if i > 0 {
                next[i] += sqrt_levels[i - 1] * term[i - 1];
            }
            if i + 1 < dim {
                next[i] += sqrt_levels[i] * term[i + 1];
            }
        }
        let scale = TwoFloat::from(eta) / j as f64;
        let mut size: f64 = 0.0;
        for v in next.iter_mut() {
            *v *= scale;
            size = size.max(f64::from(*v).abs());
        }
        term = next;
        let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if j % 2 == 0 {
            re += term[m] * sign;
        } else {
            im += term[m] * sign;
        }
        peak = peak.max(size);
        if size < 1e-34 * peak {
            break;
        }
    }
    C64::new(f64::from(re), f64::from(im))
}
