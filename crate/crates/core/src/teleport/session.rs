//! Alice and Bob as separate threads joined by a byte stream.
//!
//! Only the classical frame crosses the stream. Bob's share of the quantum
//! state is handed over through an in-process channel, which stands in for
//! the physical qubits Bob already holds. Alice draws her measurements from
//! the same seeded stream as [`run_protocol`](super::run_protocol) in sample
//! mode, so both paths produce identical reports for a given seed.

use std::io::{Read, Write};
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread;

use crate::bell::{BellKind, ChannelSpec, QubitPair};
use crate::error::{Error, Result};
use crate::statevec::{fidelity, PureState};

use super::message::ClassicalMessage;
use super::{
    corrections_for, prepare_channel, recover, sample_measurements, total_state, ProtocolLayout,
    TeleportReport,
};

#[derive(Clone, Debug, PartialEq)]
pub struct AliceRecord {
    pub outcome: Vec<BellKind>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BobResult {
    pub outcome: Vec<BellKind>,
    pub bob_pre_state: PureState,
    pub bob_corrected: PureState,
}

/// Measures, hands Bob's residual over, then sends the outcome frame.
pub fn alice_actor<W: Write + ?Sized>(
    total: &PureState,
    pairs: &[QubitPair],
    seed: u64,
    transport: &mut W,
    handoff: Sender<PureState>,
) -> Result<AliceRecord> {
    let (outcome, probability, residual) = sample_measurements(total, pairs, seed)?;
    handoff
        .send(residual)
        .map_err(|_| Error::SessionAborted("Bob left before the state handoff".into()))?;
    ClassicalMessage::new(outcome.clone())?.write_to(transport)?;
    Ok(AliceRecord {
        outcome,
        probability,
    })
}

/// Reads one frame and applies the matching corrections.
pub fn bob_actor<R: Read + ?Sized>(
    spec: &ChannelSpec,
    transport: &mut R,
    handoff: Receiver<PureState>,
) -> Result<BobResult> {
    let msg = ClassicalMessage::read_from(transport, spec.n())?;
    let bob_pre_state = handoff
        .recv()
        .map_err(|_| Error::SessionAborted("no state was handed to Bob".into()))?;
    let corr = corrections_for(spec, &msg.outcome)?;
    let bob_corrected = recover(&bob_pre_state, &corr)?;
    Ok(BobResult {
        outcome: msg.outcome,
        bob_pre_state,
        bob_corrected,
    })
}

/// Runs one session over caller-supplied stream ends.
///
/// Alice owns `alice_end` and drops it when she finishes, so a failure on
/// her side shows up on Bob's side as [`Error::SessionAborted`].
pub fn run_session_over<R, W>(
    spec: &ChannelSpec,
    client: &PureState,
    seed: u64,
    alice_end: W,
    bob_end: R,
) -> Result<TeleportReport>
where
    R: Read + Send,
    W: Write + Send,
{
    let layout = ProtocolLayout::new(spec.n())?;
    let total = total_state(&prepare_channel(spec)?, client)?;
    let target = layout.client_as_bob(client)?;
    let pairs = layout.measure_pairs();
    let (tx, rx) = mpsc::channel();

    let (alice, bob) = thread::scope(|scope| {
        let alice = scope.spawn(|| {
            let mut end = alice_end;
            alice_actor(&total, &pairs, seed, &mut end, tx)
        });
        let bob = scope.spawn(|| {
            let mut end = bob_end;
            bob_actor(spec, &mut end, rx)
        });
        (join(alice), join(bob))
    });
    let alice = alice?;
    let bob = bob?;
    if alice.outcome != bob.outcome {
        return Err(Error::ProtocolViolation(format!(
            "Bob decoded {:?}, Alice sent {:?}",
            bob.outcome, alice.outcome
        )));
    }
    let fidelity_vs_client = fidelity(&bob.bob_corrected, &target)?;
    Ok(TeleportReport {
        outcome: bob.outcome,
        probability: alice.probability,
        bob_pre_state: bob.bob_pre_state,
        bob_corrected: bob.bob_corrected,
        fidelity_vs_client,
    })
}

fn join<T>(handle: thread::ScopedJoinHandle<'_, Result<T>>) -> Result<T> {
    handle
        .join()
        .unwrap_or_else(|_| Err(Error::SessionAborted("actor thread panicked".into())))
}

/// Runs one session over an OS pipe.
pub fn run_session(spec: &ChannelSpec, client: &PureState, seed: u64) -> Result<TeleportReport> {
    let (reader, writer) = std::io::pipe()?;
    run_session_over(spec, client, seed, writer, reader)
}
