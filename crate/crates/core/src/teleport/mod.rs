//! Teleportation of an `n`-qubit client state through a cross-Bell channel.
//!
//! Qubit layout for `n` teleported qubits:
//!
//! | role            | ids          |
//! |-----------------|--------------|
//! | Bob             | `1..=n`      |
//! | Alice (channel) | `n+1..=2n`   |
//! | client          | `2n+1..=3n`  |
//!
//! Channel slot `m` (0-based) entangles Bob's `m+1` with Alice's `n+m+1`;
//! Alice measures `(n+m+1, 2n+m+1)` in the Bell basis. For `n = 2` this is
//! channel pairs (1,3),(2,4) and measurement pairs (3,5),(4,6).

mod message;
mod session;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bell::{cross_bell_state, BellKind, ChannelSpec, QubitPair};
use crate::error::{Error, Result};
use crate::measure::{bell_collapse, bell_measure_with, rng_from_seed};
use crate::oracle;
use crate::statevec::{apply_local, canonicalize, fidelity, tensor, PureState, QubitId, Unitary2};

pub use message::{ClassicalMessage, FRAME_MAGIC, FRAME_VERSION, HEADER_LEN};
pub use session::{alice_actor, bob_actor, run_session, run_session_over, AliceRecord, BobResult};

/// Largest supported `n`: 3n = 21 qubits, about 2M amplitudes.
pub const MAX_PARTIES: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolLayout {
    n: usize,
}

impl ProtocolLayout {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_PARTIES {
            return Err(Error::ArityError {
                expected: n.clamp(1, MAX_PARTIES),
                got: n,
            });
        }
        Ok(ProtocolLayout { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn ids(from: usize, count: usize) -> Vec<QubitId> {
        (from..from + count).map(|i| QubitId(i as u32)).collect()
    }

    pub fn bob_ids(&self) -> Vec<QubitId> {
        Self::ids(1, self.n)
    }

    pub fn alice_channel_ids(&self) -> Vec<QubitId> {
        Self::ids(self.n + 1, self.n)
    }

    pub fn client_ids(&self) -> Vec<QubitId> {
        Self::ids(2 * self.n + 1, self.n)
    }

    pub fn channel_pairs(&self) -> Vec<QubitPair> {
        self.bob_ids()
            .into_iter()
            .zip(self.alice_channel_ids())
            .collect()
    }

    pub fn measure_pairs(&self) -> Vec<QubitPair> {
        self.alice_channel_ids()
            .into_iter()
            .zip(self.client_ids())
            .collect()
    }

    /// Moves an `n`-qubit state onto the client ids, keeping qubit order.
    pub fn place_client(&self, state: &PureState) -> Result<PureState> {
        canonicalize(state).with_qubits(&self.client_ids())
    }

    /// Moves a state on the client ids onto Bob's ids.
    pub fn client_as_bob(&self, client: &PureState) -> Result<PureState> {
        self.check_on(client, &self.client_ids())?;
        canonicalize(client).with_qubits(&self.bob_ids())
    }

    fn check_on(&self, s: &PureState, ids: &[QubitId]) -> Result<()> {
        let mut have = s.qubits().to_vec();
        have.sort();
        if have != ids {
            return Err(Error::QubitSetMismatch {
                left: have,
                right: ids.to_vec(),
            });
        }
        Ok(())
    }
}

/// How [`run_protocol`] selects measurement outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Every one of the `4^n` branches.
    Enumerate,
    /// One branch drawn with a ChaCha8 stream seeded from `seed`.
    Sample { seed: u64 },
}

/// One outcome branch of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportReport {
    pub outcome: Vec<BellKind>,
    pub probability: f64,
    /// Bob's collapsed state before correction.
    pub bob_pre_state: PureState,
    pub bob_corrected: PureState,
    pub fidelity_vs_client: f64,
}

pub fn prepare_channel(spec: &ChannelSpec) -> Result<PureState> {
    let layout = ProtocolLayout::new(spec.n())?;
    cross_bell_state(spec, &layout.channel_pairs())
}

/// Channel state (ids `1..=2n`) tensored with the client (ids `2n+1..=3n`).
pub fn total_state(channel: &PureState, client: &PureState) -> Result<PureState> {
    if channel.num_qubits() % 2 != 0 {
        return Err(Error::ArityError {
            expected: channel.num_qubits() + 1,
            got: channel.num_qubits(),
        });
    }
    let layout = ProtocolLayout::new(channel.num_qubits() / 2)?;
    let mut channel_ids = layout.bob_ids();
    channel_ids.extend(layout.alice_channel_ids());
    layout.check_on(channel, &channel_ids)?;
    if let Some(&q) = client.qubits().iter().find(|q| channel.qubits().contains(q)) {
        return Err(Error::QubitCollision(q));
    }
    layout.check_on(client, &layout.client_ids())?;
    Ok(canonicalize(&tensor(channel, client)?))
}

fn correction_cache() -> &'static [[Unitary2; 4]; 4] {
    static CACHE: OnceLock<[[Unitary2; 4]; 4]> = OnceLock::new();
    CACHE.get_or_init(|| {
        BellKind::ALL.map(|channel| {
            BellKind::ALL.map(|outcome| {
                oracle::derive_single_pair(channel, outcome)
                    .expect("single-pair transfer matrices factor into signed Paulis")
            })
        })
    })
}

/// Per-slot unitaries `U_m` with `bob_pre ∝ (⊗_m U_m)|client⟩`.
///
/// Each slot's factor depends only on that slot's channel kind and
/// measured kind. The factors come from the oracle's single-pair
/// derivation, cached for all 16 combinations; the full `n`-slot
/// derivation agrees with them (see the oracle tests).
pub fn corrections_for(spec: &ChannelSpec, outcome: &[BellKind]) -> Result<Vec<Unitary2>> {
    if outcome.len() != spec.n() {
        return Err(Error::LengthMismatch {
            expected: spec.n(),
            got: outcome.len(),
        });
    }
    let cache = correction_cache();
    Ok(spec
        .kinds()
        .iter()
        .zip(outcome)
        .map(|(&c, &o)| cache[c as usize][o as usize])
        .collect())
}

/// Undoes the slotwise corrections: applies `U_m†` to Bob's qubit `m+1`.
pub fn recover(bob_pre: &PureState, corr: &[Unitary2]) -> Result<PureState> {
    let targets: Vec<(QubitId, Unitary2)> = corr
        .iter()
        .enumerate()
        .map(|(m, u)| (QubitId(m as u32 + 1), u.adjoint()))
        .collect();
    if bob_pre.num_qubits() != corr.len() {
        return Err(Error::ArityError {
            expected: corr.len(),
            got: bob_pre.num_qubits(),
        });
    }
    apply_local(bob_pre, &targets)
}

fn finish(
    spec: &ChannelSpec,
    target: &PureState,
    outcome: Vec<BellKind>,
    probability: f64,
    bob_pre_state: PureState,
) -> Result<TeleportReport> {
    let corr = corrections_for(spec, &outcome)?;
    let bob_corrected = recover(&bob_pre_state, &corr)?;
    let fidelity_vs_client = fidelity(&bob_corrected, target)?;
    Ok(TeleportReport {
        outcome,
        probability,
        bob_pre_state,
        bob_corrected,
        fidelity_vs_client,
    })
}

/// Runs the full protocol for a client on the layout's client ids.
pub fn run_protocol(spec: &ChannelSpec, client: &PureState, mode: Mode) -> Result<Vec<TeleportReport>> {
    let layout = ProtocolLayout::new(spec.n())?;
    let total = total_state(&prepare_channel(spec)?, client)?;
    let target = layout.client_as_bob(client)?;
    let pairs = layout.measure_pairs();
    match mode {
        Mode::Enumerate => {
            let mut out = Vec::with_capacity(1 << (2 * spec.n()));
            enumerate(spec, &target, &pairs, total, Vec::new(), 1.0, &mut out)?;
            Ok(out)
        }
        Mode::Sample { seed } => {
            let (outcome, probability, bob_pre) = sample_measurements(&total, &pairs, seed)?;
            Ok(vec![finish(spec, &target, outcome, probability, bob_pre)?])
        }
    }
}

/// Alice's side of sample mode: sequential seeded Bell measurements.
pub(crate) fn sample_measurements(
    total: &PureState,
    pairs: &[QubitPair],
    seed: u64,
) -> Result<(Vec<BellKind>, f64, PureState)> {
    let mut rng = rng_from_seed(seed);
    let mut state = total.clone();
    let mut probability = 1.0;
    let mut outcome = Vec::with_capacity(pairs.len());
    for &pair in pairs {
        let rec = bell_measure_with(&state, pair, &mut rng)?;
        probability *= rec.probability;
        outcome.push(rec.outcome.kind);
        state = rec.residual;
    }
    Ok((outcome, probability, state))
}

fn enumerate(
    spec: &ChannelSpec,
    target: &PureState,
    pairs: &[QubitPair],
    state: PureState,
    prefix: Vec<BellKind>,
    probability: f64,
    out: &mut Vec<TeleportReport>,
) -> Result<()> {
    let Some((&pair, rest)) = pairs.split_first() else {
        out.push(finish(spec, target, prefix, probability, state)?);
        return Ok(());
    };
    for kind in BellKind::ALL {
        let rec = bell_collapse(&state, pair, kind)?;
        let mut next = prefix.clone();
        next.push(kind);
        enumerate(
            spec,
            target,
            rest,
            rec.residual,
            next,
            probability * rec.probability,
            out,
        )?;
    }
    Ok(())
}
