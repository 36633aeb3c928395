//! Dense pure states over labeled qubits.
//!
//! Amplitude index convention: for a state whose qubit order is
//! `[q_0, q_1, ..., q_{n-1}]`, bit `n-1-p` of the index is the value of
//! qubit `q_p`. A canonical state lists its qubits in ascending id order, so
//! the smallest id owns the most significant bit and a ket such as
//! `|1₁0₂0₃1₄⟩` lives at index `0b1001`.
//!
//! [`tensor`] keeps factor order; [`canonicalize`] and [`cross`] re-sort
//! labels into ascending order, which is what distinguishes `∇` from `⊗`.

mod io;
mod unitary;

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub use io::StateFile;
pub use unitary::{signed_pauli_name, signed_paulis, Pauli, Unitary2};

/// Complex probability amplitude.
pub type Amplitude = Complex64;

/// Label of a single qubit. Ids are positive.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

impl From<u32> for QubitId {
    fn from(id: u32) -> Self {
        QubitId(id)
    }
}

/// Bit complement `x̌ = 1 - x`.
pub fn flip(bit: u8) -> u8 {
    1 - (bit & 1)
}

/// A normalized state vector over an ordered list of distinct qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateFile", into = "StateFile")]
pub struct PureState {
    qubits: Vec<QubitId>,
    amps: Vec<Amplitude>,
}

impl PureState {
    /// Validates labels, dimension, finiteness and normalization.
    ///
    /// States whose squared norm is off by more than `1e-12` are rejected;
    /// use [`PureState::renormalized`] to rescale deliberately.
    pub fn new(qubits: Vec<QubitId>, amps: Vec<Amplitude>) -> Result<Self> {
        let state = Self::checked_shape(qubits, amps)?;
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > tol::EXACT {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    pub fn renormalized(qubits: Vec<QubitId>, amps: Vec<Amplitude>) -> Result<Self> {
        let mut state = Self::checked_shape(qubits, amps)?;
        let norm = state.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: norm * norm });
        }
        state.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(qubits: &[u32], amps: &[f64]) -> Result<Self> {
        Self::new(
            qubits.iter().copied().map(QubitId).collect(),
            amps.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    fn checked_shape(qubits: Vec<QubitId>, amps: Vec<Amplitude>) -> Result<Self> {
        check_labels(&qubits)?;
        let expected = 1usize << qubits.len();
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(PureState { qubits, amps })
    }

    /// Random state with independent complex Gaussian amplitudes, then
    /// normalized. This is the unitarily invariant (Haar) distribution.
    pub fn random<R: Rng + ?Sized>(qubits: Vec<QubitId>, rng: &mut R) -> Result<Self> {
        let dim = 1usize << qubits.len();
        let amps = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        Self::renormalized(qubits, amps)
    }

    /// Skips validation. Callers guarantee the invariants.
    pub(crate) fn from_parts(qubits: Vec<QubitId>, amps: Vec<Amplitude>) -> Self {
        debug_assert_eq!(amps.len(), 1 << qubits.len());
        PureState { qubits, amps }
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_canonical(&self) -> bool {
        self.qubits.windows(2).all(|w| w[0] < w[1])
    }

    pub fn position(&self, id: QubitId) -> Option<usize> {
        self.qubits.iter().position(|&q| q == id)
    }

    /// Index-bit shift for the qubit at `position`.
    pub(crate) fn shift_of(&self, position: usize) -> usize {
        self.qubits.len() - 1 - position
    }

    /// Replaces labels position by position; amplitudes are untouched.
    pub fn with_qubits(&self, ids: &[QubitId]) -> Result<Self> {
        if ids.len() != self.qubits.len() {
            return Err(Error::ArityError {
                expected: self.qubits.len(),
                got: ids.len(),
            });
        }
        check_labels(ids)?;
        Ok(PureState {
            qubits: ids.to_vec(),
            amps: self.amps.clone(),
        })
    }

    /// Multiplies every amplitude by a unit-modulus phase.
    pub fn with_phase(&self, phase: Complex64) -> Self {
        PureState {
            qubits: self.qubits.clone(),
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    /// Largest entrywise amplitude difference; `None` when the qubit orders differ.
    pub fn max_abs_diff(&self, other: &PureState) -> Option<f64> {
        (self.qubits == other.qubits).then(|| {
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        })
    }
}

fn check_labels(qubits: &[QubitId]) -> Result<()> {
    let mut seen = HashSet::with_capacity(qubits.len());
    for &q in qubits {
        if q.0 == 0 {
            return Err(Error::InvalidQubitId);
        }
        if !seen.insert(q) {
            return Err(Error::DuplicateQubit(q));
        }
    }
    Ok(())
}

/// Computational basis state with the given bit per qubit, in canonical order.
pub fn ket(assignments: &[(QubitId, u8)]) -> Result<PureState> {
    if assignments.is_empty() {
        return Err(Error::ArityError {
            expected: 1,
            got: 0,
        });
    }
    let mut sorted = assignments.to_vec();
    sorted.sort_by_key(|&(q, _)| q);
    let qubits: Vec<QubitId> = sorted.iter().map(|&(q, _)| q).collect();
    check_labels(&qubits)?;
    let mut index = 0usize;
    for &(_, bit) in &sorted {
        if bit > 1 {
            return Err(Error::InvalidBit(bit));
        }
        index = (index << 1) | bit as usize;
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits.len()];
    amps[index] = Complex64::new(1.0, 0.0);
    Ok(PureState::from_parts(qubits, amps))
}

/// `a ⊗ b`, with qubit order `a.qubits ++ b.qubits`. No re-sorting.
pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    if let Some(&q) = a.qubits.iter().find(|q| b.qubits.contains(q)) {
        return Err(Error::QubitCollision(q));
    }
    let mut qubits = a.qubits.clone();
    qubits.extend_from_slice(&b.qubits);
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amps {
        amps.extend(b.amps.iter().map(|y| x * y));
    }
    Ok(PureState::from_parts(qubits, amps))
}

/// Reorders qubits ascending, permuting amplitudes accordingly.
pub fn canonicalize(s: &PureState) -> PureState {
    if s.is_canonical() {
        return s.clone();
    }
    let n = s.num_qubits();
    let mut sorted = s.qubits.clone();
    sorted.sort();
    // target shift of the bit currently held at each position
    let new_shift: Vec<usize> = s
        .qubits
        .iter()
        .map(|q| n - 1 - sorted.binary_search(q).expect("label present"))
        .collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); s.dim()];
    for (k, &a) in s.amps.iter().enumerate() {
        let mut target = 0usize;
        for (p, &shift) in new_shift.iter().enumerate() {
            target |= ((k >> (n - 1 - p)) & 1) << shift;
        }
        amps[target] = a;
    }
    PureState::from_parts(sorted, amps)
}

/// The cross product `a ∇ b`: tensor product returned to ascending qubit order.
pub fn cross(a: &PureState, b: &PureState) -> Result<PureState> {
    Ok(canonicalize(&tensor(a, b)?))
}

/// Left fold of [`cross`] over `factors`.
pub fn cross_all(factors: &[PureState]) -> Result<PureState> {
    let (first, rest) = factors.split_first().ok_or(Error::ArityError {
        expected: 1,
        got: 0,
    })?;
    rest.iter()
        .try_fold(canonicalize(first), |acc, f| cross(&acc, f))
}

fn aligned<'a>(
    a: &'a PureState,
    b: &'a PureState,
) -> Result<(std::borrow::Cow<'a, PureState>, std::borrow::Cow<'a, PureState>)> {
    use std::borrow::Cow;
    if a.qubits == b.qubits {
        return Ok((Cow::Borrowed(a), Cow::Borrowed(b)));
    }
    let mut left = a.qubits.clone();
    let mut right = b.qubits.clone();
    left.sort();
    right.sort();
    if left != right {
        return Err(Error::QubitSetMismatch { left, right });
    }
    Ok((Cow::Owned(canonicalize(a)), Cow::Owned(canonicalize(b))))
}

/// `⟨a|b⟩`. States on the same qubit set but in different orders are aligned first.
pub fn inner(a: &PureState, b: &PureState) -> Result<Amplitude> {
    let (a, b) = aligned(a, b)?;
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Applies a single-qubit unitary to each listed qubit, identity elsewhere.
pub fn apply_local(s: &PureState, targets: &[(QubitId, Unitary2)]) -> Result<PureState> {
    let mut amps = s.amps.clone();
    let mut seen = HashSet::with_capacity(targets.len());
    for (q, u) in targets {
        if !seen.insert(*q) {
            return Err(Error::DuplicateQubit(*q));
        }
        let pos = s.position(*q).ok_or(Error::MissingQubit(*q))?;
        apply_single(&mut amps, s.shift_of(pos), u);
    }
    Ok(PureState::from_parts(s.qubits.clone(), amps))
}

pub(crate) fn apply_single(amps: &mut [Amplitude], shift: usize, u: &Unitary2) {
    let stride = 1usize << shift;
    let e = u.entries();
    for base in (0..amps.len()).step_by(stride << 1) {
        for i0 in base..base + stride {
            let i1 = i0 | stride;
            let (a0, a1) = (amps[i0], amps[i1]);
            amps[i0] = e[0][0] * a0 + e[0][1] * a1;
            amps[i1] = e[1][0] * a0 + e[1][1] * a1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q(id: u32) -> QubitId {
        QubitId(id)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell_psi_plus(a: u32, b: u32) -> PureState {
        PureState::from_real(&[a, b], &[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
    }

    fn bell_phi_minus(a: u32, b: u32) -> PureState {
        PureState::from_real(&[a, b], &[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).unwrap()
    }

    fn client() -> (PureState, [f64; 4]) {
        let raw = [0.1, 0.3, 0.5, 0.7];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let coeffs = raw.map(|x| x / norm);
        (PureState::from_real(&[1, 2], &coeffs).unwrap(), coeffs)
    }

    #[test]
    fn ket_basis_states() {
        let s = ket(&[(q(1), 0), (q(3), 0)]).unwrap();
        assert_eq!(s.qubits(), &[q(1), q(3)]);
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);

        let s = ket(&[(q(1), 1), (q(2), 0), (q(3), 0), (q(4), 1)]).unwrap();
        let hot: Vec<usize> = (0..16).filter(|&k| s.amplitude(k) == c(1.0)).collect();
        assert_eq!(hot, vec![9]);

        let s = ket(&[(q(6), 1), (q(5), 1)]).unwrap();
        assert_eq!(s.qubits(), &[q(5), q(6)]);
        assert_eq!(s.amplitude(3), c(1.0));
    }

    #[test]
    fn ket_rejects_duplicates_and_bad_bits() {
        assert_eq!(
            ket(&[(q(1), 0), (q(1), 1)]).unwrap_err(),
            Error::DuplicateQubit(q(1))
        );
        assert_eq!(ket(&[(q(1), 2)]).unwrap_err(), Error::InvalidBit(2));
        assert_eq!(ket(&[(q(0), 0)]).unwrap_err(), Error::InvalidQubitId);
    }

    #[test]
    fn construction_rejects_unnormalized() {
        let err = PureState::from_real(&[1], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
        let s = PureState::renormalized(vec![q(1)], vec![c(1.0), c(1.0)]).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(matches!(
            PureState::from_real(&[1, 2], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 4, got: 2 })
        ));
        assert_eq!(
            PureState::new(vec![q(1)], vec![c(f64::NAN), c(0.0)]).unwrap_err(),
            Error::NonFinite
        );
    }

    #[test]
    fn tensor_of_basis_states() {
        let s = tensor(&ket(&[(q(1), 0)]).unwrap(), &ket(&[(q(2), 1)]).unwrap()).unwrap();
        assert_eq!(s, ket(&[(q(1), 0), (q(2), 1)]).unwrap());
    }

    #[test]
    fn tensor_keeps_factor_order() {
        let s = tensor(&bell_psi_plus(1, 3), &bell_phi_minus(2, 4)).unwrap();
        assert_eq!(s.qubits(), &[q(1), q(3), q(2), q(4)]);
        // direct coefficient product in (1,3,2,4) order
        let h = 0.5;
        let mut expected = [0.0; 16];
        expected[0b0001] = h; // 1:0 3:0 2:0 4:1
        expected[0b0010] = -h; // 2:1 4:0
        expected[0b1101] = h;
        expected[0b1110] = -h;
        for (k, e) in expected.iter().enumerate() {
            assert!((s.amplitude(k) - c(*e)).norm() < 1e-15, "index {k}");
        }
    }

    #[test]
    fn tensor_collision() {
        let err = tensor(&bell_psi_plus(1, 3), &bell_psi_plus(3, 4)).unwrap_err();
        assert_eq!(err, Error::QubitCollision(q(3)));
    }

    #[test]
    fn canonicalize_swaps_two_qubits() {
        let s = PureState::from_real(&[3, 1], &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let t = canonicalize(&s);
        assert_eq!(t.qubits(), &[q(1), q(3)]);
        assert_eq!(t.amplitude(0b01), c(1.0));
        let same = canonicalize(&t);
        assert_eq!(same, t);
    }

    #[test]
    fn cross_reproduces_channel_expansion() {
        let phi_plus_13 =
            PureState::from_real(&[1, 3], &[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap();
        let s = cross(&phi_plus_13, &bell_phi_minus(2, 4)).unwrap();
        assert_eq!(s.qubits(), &[q(1), q(2), q(3), q(4)]);
        let mut expected = [0.0; 16];
        expected[0b0011] = 0.5;
        expected[0b0110] = -0.5;
        expected[0b1001] = 0.5;
        expected[0b1100] = -0.5;
        for (k, e) in expected.iter().enumerate() {
            assert!((s.amplitude(k) - c(*e)).norm() < 1e-15, "index {k}");
        }
        let via_tensor = canonicalize(&tensor(&phi_plus_13, &bell_phi_minus(2, 4)).unwrap());
        assert_eq!(via_tensor, s);
    }

    #[test]
    fn cross_of_basis_states() {
        let s = cross(
            &ket(&[(q(1), 0), (q(3), 0)]).unwrap(),
            &ket(&[(q(2), 0), (q(4), 0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(s, ket(&[(q(1), 0), (q(2), 0), (q(3), 0), (q(4), 0)]).unwrap());
    }

    #[test]
    fn inner_products() {
        let phi_plus =
            PureState::from_real(&[1, 3], &[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap();
        assert!(inner(&bell_psi_plus(1, 3), &phi_plus).unwrap().norm() < 1e-15);
        assert!((inner(&phi_plus, &phi_plus).unwrap() - c(1.0)).norm() < 1e-15);
        let err = inner(&bell_psi_plus(1, 3), &bell_psi_plus(1, 2)).unwrap_err();
        assert!(matches!(err, Error::QubitSetMismatch { .. }));
    }

    #[test]
    fn fidelity_ignores_global_phase() {
        let (s, _) = client();
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        let neg = s.with_phase(c(-1.0));
        assert!((fidelity(&s, &neg).unwrap() - 1.0).abs() < 1e-15);
        let zero = ket(&[(q(1), 0)]).unwrap();
        let one = ket(&[(q(1), 1)]).unwrap();
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
    }

    #[test]
    fn apply_local_matches_hand_products() {
        let (s, [a, b, g, d]) = client();
        let unchanged = apply_local(&s, &[(q(2), Unitary2::identity())]).unwrap();
        assert_eq!(unchanged, s);

        let iy = Unitary2::real([[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let out = apply_local(&s, &[(q(1), iy), (q(2), Unitary2::sigma_x())]).unwrap();
        let expected = [d, g, -b, -a];
        for (k, e) in expected.iter().enumerate() {
            assert!((out.amplitude(k) - c(*e)).norm() < 1e-15);
        }

        let out = apply_local(
            &s,
            &[(q(1), Unitary2::sigma_z()), (q(2), Unitary2::identity())],
        )
        .unwrap();
        let expected = [a, b, -g, -d];
        for (k, e) in expected.iter().enumerate() {
            assert!((out.amplitude(k) - c(*e)).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_local_errors() {
        let (s, _) = client();
        assert_eq!(
            apply_local(&s, &[(q(9), Unitary2::identity())]).unwrap_err(),
            Error::MissingQubit(q(9))
        );
        assert_eq!(
            apply_local(
                &s,
                &[(q(1), Unitary2::identity()), (q(1), Unitary2::sigma_x())]
            )
            .unwrap_err(),
            Error::DuplicateQubit(q(1))
        );
    }

    #[test]
    fn apply_local_respects_non_canonical_order() {
        // X on qubit 1 of |0₃0₁⟩ stored in order (3, 1) flips the low bit.
        let s = PureState::from_real(&[3, 1], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = apply_local(&s, &[(q(1), Unitary2::sigma_x())]).unwrap();
        assert_eq!(out.amplitude(0b01), c(1.0));
    }

    #[test]
    fn random_states_are_normalized_and_seeded() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = PureState::random(vec![q(5), q(6)], &mut a).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(s, PureState::random(vec![q(5), q(6)], &mut b).unwrap());
    }

    #[test]
    fn flip_bits() {
        assert_eq!(flip(0), 1);
        assert_eq!(flip(1), 0);
    }
}
