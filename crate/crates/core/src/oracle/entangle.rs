//! Two-qubit entanglement via the coefficient matrix `[[α, β], [γ, δ]]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{canonicalize, Amplitude, PureState};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementCheck {
    pub entangled: bool,
    /// `αδ − βγ`.
    pub determinant: Complex64,
    /// Rank of the coefficient matrix from a row-projection test that
    /// never forms the determinant.
    pub rank: u8,
}

fn coefficients(s: &PureState) -> Result<[Amplitude; 4]> {
    if s.num_qubits() != 2 {
        return Err(Error::ArityError {
            expected: 2,
            got: s.num_qubits(),
        });
    }
    let c = canonicalize(s);
    Ok([c.amplitude(0), c.amplitude(1), c.amplitude(2), c.amplitude(3)])
}

fn dot(u: [Complex64; 2], v: [Complex64; 2]) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

fn norm(u: [Complex64; 2]) -> f64 {
    (u[0].norm_sqr() + u[1].norm_sqr()).sqrt()
}

/// Rank by projecting the shorter row off the longer one. The residual
/// length times the longer row's length equals `|det|`, so the same
/// threshold applies to both tests.
fn rank(rows: [[Complex64; 2]; 2]) -> u8 {
    let (big, small) = if norm(rows[0]) >= norm(rows[1]) {
        (rows[0], rows[1])
    } else {
        (rows[1], rows[0])
    };
    let nb = norm(big);
    if nb <= tol::EXACT {
        return 0;
    }
    let t = dot(big, small) / (nb * nb);
    let resid = [small[0] - t * big[0], small[1] - t * big[1]];
    if norm(resid) * nb > tol::EXACT {
        2
    } else {
        1
    }
}

pub fn is_entangled(s: &PureState) -> Result<EntanglementCheck> {
    let [a, b, g, d] = coefficients(s)?;
    let determinant = a * d - b * g;
    Ok(EntanglementCheck {
        entangled: determinant.norm() > tol::EXACT,
        determinant,
        rank: rank([[a, b], [g, d]]),
    })
}

/// Singular values of the coefficient matrix, largest first.
pub fn schmidt_coefficients(s: &PureState) -> Result<[f64; 2]> {
    let [a, b, g, d] = coefficients(s)?;
    let frob = a.norm_sqr() + b.norm_sqr() + g.norm_sqr() + d.norm_sqr();
    let det = (a * d - b * g).norm();
    let disc = (frob * frob - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((frob + disc) / 2.0).sqrt();
    let s2 = if s1 > 0.0 { det / s1 } else { 0.0 };
    Ok([s1, s2])
}

/// Splits a rank-1 two-qubit state into single-qubit factors on its own
/// labels, or `None` if it is entangled.
pub fn product_factors(s: &PureState) -> Result<Option<(PureState, PureState)>> {
    let check = is_entangled(s)?;
    if check.rank != 1 {
        return Ok(None);
    }
    let c = canonicalize(s);
    let [a, b, g, d] = [0, 1, 2, 3].map(|k| c.amplitude(k));
    let rows = [[a, b], [g, d]];
    let big = if norm(rows[0]) >= norm(rows[1]) { rows[0] } else { rows[1] };
    let nb = norm(big);
    let second = [big[0] / nb, big[1] / nb];
    let first = [dot(second, rows[0]), dot(second, rows[1])];
    let q = c.qubits();
    Ok(Some((
        PureState::renormalized(vec![q[0]], first.to_vec())?,
        PureState::renormalized(vec![q[1]], second.to_vec())?,
    )))
}
