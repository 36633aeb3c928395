use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use crate::tol;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix that is unitary to within `1e-12`.
///
/// `entries[row][col]`; row and column 0 correspond to `|0⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[[f64; 2]; 2]; 2]", into = "[[[f64; 2]; 2]; 2]")]
pub struct Unitary2 {
    entries: [[Complex64; 2]; 2],
}

impl Unitary2 {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        if entries.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let u = Unitary2 { entries };
        let deviation = u.unitarity_deviation();
        if deviation > tol::EXACT {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    /// Builds a matrix from real entries.
    pub fn real(m: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(m.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    pub const fn identity() -> Self {
        Unitary2 {
            entries: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub const fn sigma_x() -> Self {
        Unitary2 {
            entries: [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    pub const fn sigma_y() -> Self {
        Unitary2 {
            entries: [[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]],
        }
    }

    pub const fn sigma_z() -> Self {
        Unitary2 {
            entries: [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]],
        }
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    /// Multiplies every entry by a unit-modulus phase.
    pub fn scaled(&self, phase: Complex64) -> Self {
        debug_assert!((phase.norm() - 1.0).abs() < 1e-12);
        Unitary2 {
            entries: self.entries.map(|row| row.map(|z| z * phase)),
        }
    }

    pub fn adjoint(&self) -> Self {
        let e = &self.entries;
        Unitary2 {
            entries: [[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]],
        }
    }

    pub fn transpose(&self) -> Self {
        let e = &self.entries;
        Unitary2 {
            entries: [[e[0][0], e[1][0]], [e[0][1], e[1][1]]],
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.entries.iter().flatten().all(|z| z.im.abs() <= tol)
    }

    /// Largest entrywise deviation of `U·U†` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.mul_raw(&self.adjoint());
        let mut worst = 0.0f64;
        for (r, row) in prod.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((z - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Unitary2) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Unitary2, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    fn mul_raw(&self, rhs: &Unitary2) -> [[Complex64; 2]; 2] {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = [[ZERO; 2]; 2];
        for (r, out_row) in out.iter_mut().enumerate() {
            for (c, z) in out_row.iter_mut().enumerate() {
                *z = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        out
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2 {
            entries: self.mul_raw(&rhs),
        }
    }
}

impl TryFrom<[[[f64; 2]; 2]; 2]> for Unitary2 {
    type Error = Error;

    fn try_from(raw: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        Unitary2::new(raw.map(|row| row.map(|[re, im]| Complex64::new(re, im))))
    }
}

impl From<Unitary2> for [[[f64; 2]; 2]; 2] {
    fn from(u: Unitary2) -> Self {
        u.entries.map(|row| row.map(|z| [z.re, z.im]))
    }
}

impl fmt::Display for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = signed_pauli_name(self) {
            return f.write_str(name);
        }
        let e = &self.entries;
        write!(f, "[[{}, {}], [{}, {}]]", e[0][0], e[0][1], e[1][0], e[1][1])
    }
}

/// The four Pauli matrices, with `I` standing for σ0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Unitary2 {
        match self {
            Pauli::I => Unitary2::identity(),
            Pauli::X => Unitary2::sigma_x(),
            Pauli::Y => Unitary2::sigma_y(),
            Pauli::Z => Unitary2::sigma_z(),
        }
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "i" | "id" => Ok(Pauli::I),
            "x" => Ok(Pauli::X),
            "y" => Ok(Pauli::Y),
            "z" => Ok(Pauli::Z),
            other => Err(Error::Parse(format!("unknown Pauli name {other:?}"))),
        }
    }
}

/// The real signed Paulis `{±σ0, ±σx, ±iσy, ±σz}`, in that order.
pub fn signed_paulis() -> [(&'static str, Unitary2); 8] {
    let iy = Unitary2::sigma_y().scaled(I);
    let neg = Complex64::new(-1.0, 0.0);
    [
        ("σ0", Unitary2::identity()),
        ("-σ0", Unitary2::identity().scaled(neg)),
        ("σx", Unitary2::sigma_x()),
        ("-σx", Unitary2::sigma_x().scaled(neg)),
        ("iσy", iy),
        ("-iσy", iy.scaled(neg)),
        ("σz", Unitary2::sigma_z()),
        ("-σz", Unitary2::sigma_z().scaled(neg)),
    ]
}

/// Name of `u` if it is one of the real signed Paulis.
pub fn signed_pauli_name(u: &Unitary2) -> Option<&'static str> {
    signed_paulis()
        .into_iter()
        .find(|(_, p)| p.approx_eq(u, 1e-12))
        .map(|(name, _)| name)
}
