//! Projective Bell measurement on a qubit pair inside a larger state.
//!
//! Sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. Independent streams are obtained from one
//! master seed with [`split_seed`] (SplitMix64 finalizer over
//! `seed + (index + 1)·γ`).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{BellKind, BellOutcome, QubitPair};
use crate::error::{Error, Result};
use crate::statevec::{Amplitude, PureState, QubitId};

/// Outcomes with probability at or below this are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// The PRNG behind every seeded measurement.
pub type MeasurementRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> MeasurementRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the `index`-th child seed of `seed`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unnormalized `(⟨kind| ⊗ I)|s⟩` on the qubits left after removing the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub kind: BellKind,
    pub qubits: Vec<QubitId>,
    pub amps: Vec<Amplitude>,
}

impl Projection {
    pub fn probability(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn into_residual(self) -> PureState {
        let norm = self.probability().sqrt();
        PureState::from_parts(self.qubits, self.amps.into_iter().map(|a| a / norm).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub outcome: BellOutcome,
    pub probability: f64,
    pub residual: PureState,
}

fn locate(s: &PureState, pair: QubitPair) -> Result<(usize, usize)> {
    let (a, b) = pair;
    if a == b {
        return Err(Error::DuplicateQubit(a));
    }
    let pa = s.position(a).ok_or(Error::MissingQubit(a))?;
    let pb = s.position(b).ok_or(Error::MissingQubit(b))?;
    Ok((s.shift_of(pa), s.shift_of(pb)))
}

pub fn project(s: &PureState, pair: QubitPair, kind: BellKind) -> Result<Projection> {
    let (sa, sb) = locate(s, pair)?;
    Ok(project_at(s, pair, sa, sb, kind))
}

fn project_at(s: &PureState, pair: QubitPair, sa: usize, sb: usize, kind: BellKind) -> Projection {
    let mask = (1usize << sa) | (1usize << sb);
    let coeff = [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(x, y)| {
        (
            (x << sa) | (y << sb),
            Complex64::new(kind.coefficient(x, y), 0.0).conj(),
        )
    });
    let amps = s.amplitudes();
    let residual: Vec<Amplitude> = (0..s.dim())
        .filter(|k| k & mask == 0)
        .map(|base| {
            coeff
                .iter()
                .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
                .map(|&(offset, c)| c * amps[base | offset])
                .sum()
        })
        .collect();
    let qubits = s
        .qubits()
        .iter()
        .copied()
        .filter(|&q| q != pair.0 && q != pair.1)
        .collect();
    Projection {
        kind,
        qubits,
        amps: residual,
    }
}

fn project_every_kind(s: &PureState, pair: QubitPair) -> Result<[Projection; 4]> {
    let (sa, sb) = locate(s, pair)?;
    Ok(BellKind::ALL.map(|k| project_at(s, pair, sa, sb, k)))
}

/// Born-rule probabilities of the four Bell outcomes on `pair`.
pub fn bell_probabilities(s: &PureState, pair: QubitPair) -> Result<BTreeMap<BellKind, f64>> {
    Ok(project_every_kind(s, pair)?
        .iter()
        .map(|p| (p.kind, p.probability()))
        .collect())
}

/// Post-selects outcome `kind` on `pair`.
pub fn bell_collapse(s: &PureState, pair: QubitPair, kind: BellKind) -> Result<MeasurementRecord> {
    record(project(s, pair, kind)?, pair)
}

fn record(projection: Projection, pair: QubitPair) -> Result<MeasurementRecord> {
    let probability = projection.probability();
    if probability <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbabilityOutcome {
            kind: projection.kind,
            probability,
        });
    }
    let kind = projection.kind;
    Ok(MeasurementRecord {
        outcome: BellOutcome { pair, kind },
        probability,
        residual: projection.into_residual(),
    })
}

/// Samples one Bell outcome with a fresh generator seeded from `seed`.
pub fn bell_measure(s: &PureState, pair: QubitPair, seed: u64) -> Result<MeasurementRecord> {
    bell_measure_with(s, pair, &mut rng_from_seed(seed))
}

/// Samples one Bell outcome, drawing a single uniform variate from `rng`.
pub fn bell_measure_with<R: Rng + ?Sized>(
    s: &PureState,
    pair: QubitPair,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let projections = project_every_kind(s, pair)?;
    let probs = projections.each_ref().map(Projection::probability);
    let u: f64 = rng.random();
    let total: f64 = probs.iter().sum();
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (i, p) in probs.iter().enumerate() {
        if *p <= ZERO_PROBABILITY {
            continue;
        }
        cumulative += p / total;
        chosen = Some(i);
        if u < cumulative {
            break;
        }
    }
    let i = chosen.ok_or(Error::NotNormalized { norm_sqr: total })?;
    let [a, b, c, d] = projections;
    let picked = [a, b, c, d].into_iter().nth(i).expect("index in range");
    record(picked, pair)
}

/// Applies a sequence of post-selected collapses, multiplying probabilities.
pub fn collapse_sequence(
    s: &PureState,
    outcomes: &[(QubitPair, BellKind)],
) -> Result<(f64, PureState)> {
    let mut state = s.clone();
    let mut probability = 1.0;
    for &(pair, kind) in outcomes {
        let rec = bell_collapse(&state, pair, kind)?;
        probability *= rec.probability;
        state = rec.residual;
    }
    Ok((probability, state))
}

/// Unnormalized residual after a sequence of projections.
pub fn project_sequence(
    s: &PureState,
    outcomes: &[(QubitPair, BellKind)],
) -> Result<Projection> {
    let mut current = Projection {
        kind: BellKind::PsiPlus,
        qubits: s.qubits().to_vec(),
        amps: s.amplitudes().to_vec(),
    };
    for &(pair, kind) in outcomes {
        let carrier = PureState::from_parts(current.qubits, current.amps);
        current = project(&carrier, pair, kind)?;
    }
    Ok(current)
}

/// Sum of probabilities minus one, for completeness checks.
pub fn completeness_defect(probs: &BTreeMap<BellKind, f64>) -> f64 {
    (probs.values().sum::<f64>() - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;
    use crate::bell::{bell_state, cross_bell_state, ChannelSpec};
    use crate::statevec::{fidelity, ket, tensor};

    fn q(id: u32) -> QubitId {
        QubitId(id)
    }

    fn is_certain(p: f64) -> bool {
        (p - 1.0).abs() <= tol::EXACT
    }

    fn client56() -> PureState {
        let raw = [0.2, -0.4, 0.1, 0.8];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        PureState::from_real(&[5, 6], &raw.map(|x| x / norm)).unwrap()
    }

    fn protocol_state(spec: &str) -> PureState {
        let spec: ChannelSpec = spec.parse().unwrap();
        let channel = cross_bell_state(&spec, &[(q(1), q(3)), (q(2), q(4))]).unwrap();
        crate::statevec::canonicalize(&tensor(&channel, &client56()).unwrap())
    }

    #[test]
    fn eigenstate_probabilities() {
        let s = bell_state(BellKind::PsiPlus, (q(1), q(2))).unwrap();
        let p = bell_probabilities(&s, (q(1), q(2))).unwrap();
        assert!(is_certain(p[&BellKind::PsiPlus]));
        for k in [BellKind::PsiMinus, BellKind::PhiPlus, BellKind::PhiMinus] {
            assert!(p[&k].abs() < 1e-15);
        }
    }

    #[test]
    fn zero_zero_splits_between_psi_kinds() {
        let s = ket(&[(q(1), 0), (q(2), 0)]).unwrap();
        let p = bell_probabilities(&s, (q(1), q(2))).unwrap();
        assert!((p[&BellKind::PsiPlus] - 0.5).abs() < 1e-15);
        assert!((p[&BellKind::PsiMinus] - 0.5).abs() < 1e-15);
        assert_eq!(p[&BellKind::PhiPlus], 0.0);
        assert_eq!(p[&BellKind::PhiMinus], 0.0);
    }

    #[test]
    fn protocol_state_is_uniform_on_each_pair() {
        let s = protocol_state("phi+,phi-");
        for pair in [(q(3), q(5)), (q(4), q(6))] {
            let p = bell_probabilities(&s, pair).unwrap();
            for v in p.values() {
                assert!((v - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collapse_leaves_the_spectator() {
        let s = tensor(
            &bell_state(BellKind::PsiPlus, (q(1), q(2))).unwrap(),
            &ket(&[(q(3), 0)]).unwrap(),
        )
        .unwrap();
        let rec = bell_collapse(&s, (q(1), q(2)), BellKind::PsiPlus).unwrap();
        assert!(is_certain(rec.probability));
        assert_eq!(rec.residual, ket(&[(q(3), 0)]).unwrap());
    }

    #[test]
    fn collapse_on_impossible_outcome() {
        let s = bell_state(BellKind::PsiPlus, (q(1), q(2))).unwrap();
        let err = bell_collapse(&s, (q(1), q(2)), BellKind::PhiMinus).unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityOutcome { kind: BellKind::PhiMinus, .. }));
    }

    #[test]
    fn collapse_missing_qubit() {
        let s = bell_state(BellKind::PsiPlus, (q(1), q(2))).unwrap();
        assert_eq!(
            bell_collapse(&s, (q(1), q(7)), BellKind::PsiPlus).unwrap_err(),
            Error::MissingQubit(q(7))
        );
    }

    #[test]
    fn phi_plus_phi_plus_branch() {
        // Brute force from the channel kets: ⟨Φ⁺₃₅| pairs x5 = 1 - q3, ⟨Φ⁺₄₆| pairs x6 = 1 - q4.
        // Channel Φ⁺₁₃∇Φ⁻₂₄ = ½(|0011⟩ − |0110⟩ + |1001⟩ − |1100⟩) then leaves Bob with
        // (α, −β, γ, −δ). Channel Φ⁻₁₃∇Φ⁺₂₄ leaves (α, β, −γ, −δ).
        let c = client56();
        let [a, b, g, d] = [0, 1, 2, 3].map(|k| c.amplitude(k).re);
        let outcomes = [
            ((q(3), q(5)), BellKind::PhiPlus),
            ((q(4), q(6)), BellKind::PhiPlus),
        ];
        for (spec, expected) in [
            ("phi+,phi-", [a, -b, g, -d]),
            ("phi-,phi+", [a, b, -g, -d]),
        ] {
            let (p, bob) = collapse_sequence(&protocol_state(spec), &outcomes).unwrap();
            assert!((p - 1.0 / 16.0).abs() < 1e-12);
            assert_eq!(bob.qubits(), &[q(1), q(2)]);
            let want = PureState::from_real(&[1, 2], &expected).unwrap();
            assert!((fidelity(&bob, &want).unwrap() - 1.0).abs() < 1e-12, "{spec}");
        }
    }

    #[test]
    fn seeded_measurement_is_deterministic() {
        let s = protocol_state("phi+,phi-");
        let first = bell_measure(&s, (q(3), q(5)), 42).unwrap();
        for _ in 0..5 {
            assert_eq!(bell_measure(&s, (q(3), q(5)), 42).unwrap(), first);
        }
    }

    #[test]
    fn eigenstate_measurement_is_certain() {
        let s = bell_state(BellKind::PhiMinus, (q(1), q(2))).unwrap();
        for seed in 0..50 {
            let rec = bell_measure(&s, (q(1), q(2)), seed).unwrap();
            assert_eq!(rec.outcome.kind, BellKind::PhiMinus);
        }
    }

    #[test]
    fn projections_sum_back_to_the_state() {
        let s = protocol_state("psi-,phi+");
        let pair = (q(3), q(5));
        let mut rebuilt = vec![Complex64::new(0.0, 0.0); s.dim()];
        for proj in project_every_kind(&s, pair).unwrap() {
            let bell = bell_state(proj.kind, pair).unwrap();
            let rest = PureState::from_parts(proj.qubits.clone(), proj.amps.clone());
            let piece = crate::statevec::canonicalize(&tensor(&bell, &rest).unwrap());
            for (acc, a) in rebuilt.iter_mut().zip(piece.amplitudes()) {
                *acc += a;
            }
        }
        let rebuilt = PureState::new(s.qubits().to_vec(), rebuilt).unwrap();
        assert!(rebuilt.max_abs_diff(&s).unwrap() < 1e-12);
    }

    #[test]
    fn split_seed_streams_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| split_seed(7, i)).collect();
        let mut dedup = seeds.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), seeds.len());
        assert_eq!(split_seed(7, 3), split_seed(7, 3));
    }
}
