//! Bell states, cross-Bell bases and correction tables.
//!
//! Naming convention used throughout this crate:
//!
//! ```text
//! Ψ±(a,b) = (|0_a 0_b⟩ ± |1_a 1_b⟩) / √2
//! Φ±(a,b) = (|0_a 1_b⟩ ± |1_a 0_b⟩) / √2
//! ```
//!
//! Note that this is swapped relative to most textbooks, where Φ± is built
//! from `|00⟩, |11⟩`. The first qubit of the pair is the left factor, which
//! matters for Φ⁻ only.
//!
//! A cross-Bell state on pairs `(a_0,b_0), …, (a_{n-1},b_{n-1})` is the
//! cross product of one Bell state per pair; for disjoint pairs the `4^n`
//! kind combinations form an orthonormal basis of the `2n`-qubit space.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{
    canonicalize, cross_all, inner, Amplitude, Pauli, PureState, QubitId, Unitary2,
};

pub type QubitPair = (QubitId, QubitId);

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum BellKind {
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
}

impl BellKind {
    /// Ψ⁺, Ψ⁻, Φ⁺, Φ⁻: the order used for kind tuples and 2-bit codes.
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
    ];

    /// Two-bit wire code: Ψ⁺=00, Ψ⁻=01, Φ⁺=10, Φ⁻=11.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "Ψ⁺",
            BellKind::PsiMinus => "Ψ⁻",
            BellKind::PhiPlus => "Φ⁺",
            BellKind::PhiMinus => "Φ⁻",
        }
    }

    /// Coefficient of `|x_a y_b⟩` at `[x][y]`, before the `1/√2`.
    pub fn pattern(self) -> [[f64; 2]; 2] {
        match self {
            BellKind::PsiPlus => [[1.0, 0.0], [0.0, 1.0]],
            BellKind::PsiMinus => [[1.0, 0.0], [0.0, -1.0]],
            BellKind::PhiPlus => [[0.0, 1.0], [1.0, 0.0]],
            BellKind::PhiMinus => [[0.0, 1.0], [-1.0, 0.0]],
        }
    }

    /// Normalized coefficient of `|x_a y_b⟩`.
    pub fn coefficient(self, x: usize, y: usize) -> f64 {
        self.pattern()[x][y] * FRAC_1_SQRT_2
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        BellKind::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .ok_or_else(|| Error::Parse(format!("unknown Bell kind {s:?} (expected psi+, psi-, phi+ or phi-)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellOutcome {
    pub pair: QubitPair,
    pub kind: BellKind,
}

/// The per-pair Bell kinds of a cross-Bell channel state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<BellKind>", into = "Vec<BellKind>")]
pub struct ChannelSpec {
    kinds: Vec<BellKind>,
}

impl ChannelSpec {
    pub fn new(kinds: Vec<BellKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::ArityError {
                expected: 1,
                got: 0,
            });
        }
        Ok(ChannelSpec { kinds })
    }

    pub fn n(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[BellKind] {
        &self.kinds
    }

    /// Every channel on `n` pairs, in lexicographic kind order.
    pub fn all(n: usize) -> Vec<ChannelSpec> {
        kind_tuples(n)
            .into_iter()
            .map(|kinds| ChannelSpec { kinds })
            .collect()
    }
}

impl TryFrom<Vec<BellKind>> for ChannelSpec {
    type Error = Error;

    fn try_from(kinds: Vec<BellKind>) -> Result<Self> {
        ChannelSpec::new(kinds)
    }
}

impl From<ChannelSpec> for Vec<BellKind> {
    fn from(spec: ChannelSpec) -> Self {
        spec.kinds
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kinds = s
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<BellKind>>>()?;
        ChannelSpec::new(kinds)
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join_kinds(&self.kinds))
    }
}

pub fn join_kinds(kinds: &[BellKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
}

/// All `4^n` kind tuples in lexicographic (Ψ⁺, Ψ⁻, Φ⁺, Φ⁻) order.
pub fn kind_tuples(n: usize) -> Vec<Vec<BellKind>> {
    (0..1usize << (2 * n))
        .map(|code| {
            (0..n)
                .map(|m| {
                    let shift = 2 * (n - 1 - m);
                    BellKind::ALL[(code >> shift) & 3]
                })
                .collect()
        })
        .collect()
}

pub fn bell_state(kind: BellKind, pair: QubitPair) -> Result<PureState> {
    let (a, b) = pair;
    if a == b {
        return Err(Error::DuplicateQubit(a));
    }
    let amps = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .map(|(x, y)| Complex64::new(kind.coefficient(x, y), 0.0))
        .to_vec();
    let ordered = PureState::new(vec![a, b], amps)?;
    Ok(canonicalize(&ordered))
}

fn check_pairs(pairs: &[QubitPair]) -> Result<()> {
    let mut seen = Vec::with_capacity(2 * pairs.len());
    for &(a, b) in pairs {
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        for q in [a, b] {
            if seen.contains(&q) {
                return Err(Error::QubitCollision(q));
            }
            seen.push(q);
        }
    }
    Ok(())
}

/// Cross product of `bell_state(kinds[m], pairs[m])` over all slots.
pub fn cross_bell_state(spec: &ChannelSpec, pairs: &[QubitPair]) -> Result<PureState> {
    cross_bell_from_kinds(spec.kinds(), pairs)
}

fn cross_bell_from_kinds(kinds: &[BellKind], pairs: &[QubitPair]) -> Result<PureState> {
    if kinds.len() != pairs.len() {
        return Err(Error::LengthMismatch {
            expected: pairs.len(),
            got: kinds.len(),
        });
    }
    check_pairs(pairs)?;
    let factors = kinds
        .iter()
        .zip(pairs)
        .map(|(&k, &p)| bell_state(k, p))
        .collect::<Result<Vec<_>>>()?;
    cross_all(&factors)
}

/// The `4^n` cross-Bell states on `pairs`, ordered as [`kind_tuples`].
pub fn cross_bell_basis(pairs: &[QubitPair]) -> Result<Vec<PureState>> {
    check_pairs(pairs)?;
    kind_tuples(pairs.len())
        .iter()
        .map(|kinds| cross_bell_from_kinds(kinds, pairs))
        .collect()
}

/// Coefficients of a state in the cross-Bell basis, keyed by kind tuple.
pub type CrossBellExpansion = BTreeMap<Vec<BellKind>, Amplitude>;

/// `c_T = ⟨basis_T|s⟩` for every kind tuple `T`.
pub fn expand_in_cross_bell(s: &PureState, pairs: &[QubitPair]) -> Result<CrossBellExpansion> {
    check_pairs(pairs)?;
    let mut on_pairs: Vec<QubitId> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    on_pairs.sort();
    let mut on_state = s.qubits().to_vec();
    on_state.sort();
    if on_pairs != on_state {
        return Err(Error::QubitSetMismatch {
            left: on_state,
            right: on_pairs,
        });
    }
    let s = canonicalize(s);
    kind_tuples(pairs.len())
        .into_iter()
        .map(|kinds| {
            let basis = cross_bell_from_kinds(&kinds, pairs)?;
            Ok((kinds, inner(&basis, &s)?))
        })
        .collect()
}

/// `Σ_T c_T · basis_T`, the inverse of [`expand_in_cross_bell`].
pub fn recombine(expansion: &CrossBellExpansion, pairs: &[QubitPair]) -> Result<PureState> {
    let mut acc: Option<(Vec<QubitId>, Vec<Amplitude>)> = None;
    for (kinds, &coeff) in expansion {
        let basis = cross_bell_from_kinds(kinds, pairs)?;
        let (_, amps) = acc.get_or_insert_with(|| {
            (basis.qubits().to_vec(), vec![Complex64::new(0.0, 0.0); basis.dim()])
        });
        for (a, b) in amps.iter_mut().zip(basis.amplitudes()) {
            *a += coeff * b;
        }
    }
    let (qubits, amps) = acc.ok_or(Error::ArityError {
        expected: 1,
        got: 0,
    })?;
    PureState::new(qubits, amps)
}

pub fn pauli(name: &str) -> Result<Unitary2> {
    Ok(name.parse::<Pauli>()?.matrix())
}

/// Per-slot map from measured Bell kind to a 2×2 correction unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTable {
    slots: Vec<[Unitary2; 4]>,
}

impl CorrectionTable {
    pub fn new(slots: Vec<[Unitary2; 4]>) -> Self {
        CorrectionTable { slots }
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn get(&self, slot: usize, kind: BellKind) -> Unitary2 {
        self.slots[slot][kind as usize]
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, BellKind, Unitary2)> + '_ {
        self.slots.iter().enumerate().flat_map(|(slot, row)| {
            BellKind::ALL
                .into_iter()
                .map(move |k| (slot, k, row[k as usize]))
        })
    }
}

/// The published correction table for the two-pair channel `(Φ⁺, Φ⁻)`.
///
/// Slot 0 is indexed by the outcome on pair (3,5), slot 1 by the outcome on
/// pair (4,6):
///
/// ```text
/// slot 0: Ψ⁺ → iσy, Ψ⁻ → −σx, Φ⁺ → σz, Φ⁻ → −σ0
/// slot 1: Ψ⁺ → σx,  Ψ⁻ → −iσy, Φ⁺ → σ0, Φ⁻ → −σz
/// ```
///
/// These entries are reproduced verbatim. They are what the derivation in
/// [`crate::oracle`] yields for channel `(Φ⁻, Φ⁺)`; for `(Φ⁺, Φ⁻)` the two
/// rows trade places. See [`crate::oracle::verify_reference_tables`].
pub fn reference_correction_table() -> CorrectionTable {
    let i = Complex64::new(0.0, 1.0);
    let neg = Complex64::new(-1.0, 0.0);
    let (s0, sx, sy, sz) = (
        Unitary2::identity(),
        Unitary2::sigma_x(),
        Unitary2::sigma_y(),
        Unitary2::sigma_z(),
    );
    CorrectionTable::new(vec![
        [sy.scaled(i), sx.scaled(neg), sz, s0.scaled(neg)],
        [sx, sy.scaled(-i), s0, sz.scaled(neg)],
    ])
}
