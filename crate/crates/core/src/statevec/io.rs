//! On-disk state format.
//!
//! ```json
//! { "qubits": [1, 2], "amplitudes": [[0.5, 0.0], [0.5, 0.0], [0.5, 0.0], [0.5, 0.0]] }
//! ```
//!
//! Qubit ids are listed ascending and amplitudes follow the crate-wide index
//! convention. Floats are written with shortest round-trip formatting, so a
//! write/read cycle reproduces every amplitude bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{canonicalize, PureState, QubitId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub qubits: Vec<u32>,
    pub amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateFile> for PureState {
    type Error = Error;

    fn try_from(file: StateFile) -> Result<Self> {
        if !file.qubits.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parse(format!(
                "qubit ids must be strictly ascending, got {:?}",
                file.qubits
            )));
        }
        PureState::new(
            file.qubits.into_iter().map(QubitId).collect(),
            file.amplitudes
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl From<PureState> for StateFile {
    fn from(state: PureState) -> Self {
        let state = canonicalize(&state);
        StateFile {
            qubits: state.qubits.iter().map(|q| q.0).collect(),
            amplitudes: state.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl PureState {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    /// Parses a state file. Shape errors keep their own variants rather
    /// than being folded into [`Error::Parse`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        PureState::try_from(file)
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
