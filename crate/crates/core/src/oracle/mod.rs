//! Brute-force ground truth.
//!
//! Nothing here reuses the correction cache in [`crate::teleport`]: transfer
//! matrices are rebuilt by pushing every client basis state through the
//! full `3n`-qubit simulation and reading off Bob's unnormalized residual.

mod entangle;
mod tables;

use num_complex::Complex64;

use crate::bell::{BellKind, ChannelSpec};
use crate::error::{Error, Result};
use crate::measure::project_sequence;
use crate::statevec::{ket, Pauli, Unitary2};
use crate::teleport::{prepare_channel, total_state, ProtocolLayout};
use crate::tol;

pub use entangle::{is_entangled, product_factors, schmidt_coefficients, EntanglementCheck};
pub use tables::{
    check_golden, golden_verdicts, parse_golden, reference_tables_text, verify_reference_tables,
    DivergenceEntry, DivergenceReport, GoldenDiff, Verdict,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bob's unnormalized residual as a linear map of the client coefficients.
///
/// Row = Bob basis index over ids `1..=n`, column = client basis index over
/// `2n+1..=3n`, both in the crate-wide index convention.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl TransferMatrix {
    pub fn build(spec: &ChannelSpec, outcome: &[BellKind]) -> Result<Self> {
        let n = spec.n();
        if outcome.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: outcome.len(),
            });
        }
        let layout = ProtocolLayout::new(n)?;
        let channel = prepare_channel(spec)?;
        let measured: Vec<_> = layout
            .measure_pairs()
            .into_iter()
            .zip(outcome.iter().copied())
            .collect();
        let client_ids = layout.client_ids();
        let dim = 1usize << n;
        let mut entries = vec![ZERO; dim * dim];
        for col in 0..dim {
            let bits: Vec<_> = client_ids
                .iter()
                .enumerate()
                .map(|(m, &q)| (q, ((col >> (n - 1 - m)) & 1) as u8))
                .collect();
            let total = total_state(&channel, &ket(&bits)?)?;
            let residual = project_sequence(&total, &measured)?;
            debug_assert_eq!(residual.qubits, layout.bob_ids());
            for (row, a) in residual.amps.into_iter().enumerate() {
                entries[row * dim + col] = a;
            }
        }
        Ok(TransferMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `2^n · T`, which is unitary for every Bell-channel branch.
    pub fn scaled(&self) -> Vec<Complex64> {
        let k = self.dim() as f64;
        self.entries.iter().map(|a| a * k).collect()
    }

    /// `max |M M† − I|` for the scaled matrix `M`.
    pub fn unitarity_deviation(&self) -> f64 {
        let m = self.scaled();
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let dot: Complex64 = (0..dim)
                    .map(|k| m[i * dim + k] * m[j * dim + k].conj())
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).norm());
            }
        }
        worst
    }
}

/// Row-major `F_0 ⊗ F_1 ⊗ …`; factor `m` acts on index bit `n-1-m`.
pub fn kron(factors: &[Unitary2]) -> Vec<Complex64> {
    let n = factors.len();
    let dim = 1usize << n;
    let mut out = vec![ZERO; dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            out[row * dim + col] = factors
                .iter()
                .enumerate()
                .map(|(m, f)| {
                    let s = n - 1 - m;
                    f.get((row >> s) & 1, (col >> s) & 1)
                })
                .product();
        }
    }
    out
}

/// `i^k` for `k` in `0..4`.
fn phase(k: u8) -> Complex64 {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][(k % 4) as usize]
}

/// Snaps `z` to the nearest of `{1, i, −1, −i}` if it lies within `tol`.
fn phase_exponent(z: Complex64, tol: f64) -> Option<u8> {
    (0..4u8).find(|&k| (z - phase(k)).norm() <= tol)
}

/// Unsigned real Pauli basis `σ0, σx, iσy, σz`.
fn real_paulis() -> [Unitary2; 4] {
    Pauli::ALL.map(|p| match p {
        Pauli::Y => p.matrix().scaled(Complex64::new(0.0, 1.0)),
        _ => p.matrix(),
    })
}

/// Finds `P` and `λ` with `block ≈ λ·P`.
fn match_block(block: [[Complex64; 2]; 2]) -> Option<(usize, Complex64)> {
    let scale = block.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if scale <= tol::CHAINED {
        return None;
    }
    real_paulis().iter().enumerate().find_map(|(idx, p)| {
        let col = if p.get(0, 0) != ZERO { 0 } else { 1 };
        let lambda = block[0][col] / p.get(0, col);
        let ok = (0..2).all(|r| {
            (0..2).all(|c| (block[r][c] - lambda * p.get(r, c)).norm() <= tol::CHAINED * scale)
        });
        ok.then_some((idx, lambda))
    })
}

/// Correction for a single pair: the scaled `2×2` transfer matrix itself,
/// snapped onto `{1, i, −1, −i} × {σ0, σx, iσy, σz}`.
pub fn derive_single_pair(channel: BellKind, outcome: BellKind) -> Result<Unitary2> {
    let spec = ChannelSpec::new(vec![channel])?;
    let t = TransferMatrix::build(&spec, &[outcome])?;
    let m = t.scaled();
    let block = [[m[0], m[1]], [m[2], m[3]]];
    let (idx, lambda) = match_block(block).ok_or_else(|| {
        Error::FactorizationFailure(format!("single pair {channel}/{outcome}: {block:?}"))
    })?;
    let k = phase_exponent(lambda, tol::CHAINED).ok_or_else(|| {
        Error::FactorizationFailure(format!("phase {lambda} is not in {{±1, ±i}}"))
    })?;
    Ok(real_paulis()[idx].scaled(phase(k)))
}

/// Per-slot factors `F_m` with `2^n · T = ⊗_m F_m` exactly (within `1e-9`).
///
/// Each factor is a signed real Pauli times a phase from `{±1, ±i}`. Slots
/// `m ≥ 1` carry the phase of their own single-pair derivation; slot 0
/// absorbs whatever global phase remains.
pub fn derive_correction(spec: &ChannelSpec, outcome: &[BellKind]) -> Result<Vec<Unitary2>> {
    let t = TransferMatrix::build(spec, outcome)?;
    let deviation = t.unitarity_deviation();
    if deviation > tol::CHAINED {
        return Err(Error::FactorizationFailure(format!(
            "scaled transfer matrix is not unitary (deviation {deviation:e})"
        )));
    }
    let n = spec.n();
    if n == 1 {
        return Ok(vec![derive_single_pair(spec.kinds()[0], outcome[0])?]);
    }
    let m = t.scaled();
    let dim = t.dim();
    // anchor on the largest entry of column 0
    let r0 = (0..dim)
        .max_by(|&a, &b| m[a * dim].norm().total_cmp(&m[b * dim].norm()))
        .expect("nonempty");

    let basis = real_paulis();
    let mut shapes = Vec::with_capacity(n);
    for slot in 0..n {
        let s = n - 1 - slot;
        let row_base = r0 & !(1 << s);
        let block = [0, 1].map(|a| [0, 1].map(|b| m[(row_base | a << s) * dim + (b << s)]));
        let (idx, _) = match_block(block).ok_or_else(|| {
            Error::FactorizationFailure(format!("slot {slot} block {block:?} is not a Pauli"))
        })?;
        shapes.push(basis[idx]);
    }

    let product = kron(&shapes);
    let global = m[r0 * dim] / product[r0 * dim];
    let global_k = phase_exponent(global, tol::CHAINED).ok_or_else(|| {
        Error::FactorizationFailure(format!("global phase {global} is not in {{±1, ±i}}"))
    })?;
    let residual = m
        .iter()
        .zip(&product)
        .map(|(a, p)| (a - phase(global_k) * p).norm())
        .fold(0.0, f64::max);
    if residual > tol::CHAINED {
        return Err(Error::FactorizationFailure(format!(
            "no signed Pauli product within tolerance (residual {residual:e})"
        )));
    }

    let mut exponents = vec![0u8; n];
    for slot in 1..n {
        let single = derive_single_pair(spec.kinds()[slot], outcome[slot])?;
        let p = shapes[slot];
        let col = if p.get(0, 0) != ZERO { 0 } else { 1 };
        exponents[slot] = phase_exponent(single.get(0, col) / p.get(0, col), tol::EXACT)
            .expect("single-pair factor is a phased Pauli");
    }
    let spent: u8 = exponents[1..].iter().fold(0, |acc, k| (acc + k) % 4);
    exponents[0] = (global_k + 4 - spent) % 4;
    Ok(shapes
        .into_iter()
        .zip(exponents)
        .map(|(p, k)| p.scaled(phase(k)))
        .collect())
}
