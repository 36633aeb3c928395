use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use crossbell::measure::{rng_from_seed, split_seed};
use crossbell::{Amplitude, ProtocolLayout, PureState};

#[derive(Clone, Debug, PartialEq)]
pub enum ClientSource {
    /// Seed taken from `--seed`.
    Random,
    RandomSeed(u64),
    File(PathBuf),
    Preset(Preset),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Zero,
    Uniform,
    Ghz,
}

impl FromStr for ClientSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "random" => Ok(ClientSource::Random),
            Some(("random", seed)) => seed
                .parse()
                .map(ClientSource::RandomSeed)
                .map_err(|_| format!("bad seed {seed:?}")),
            Some(("file", path)) if !path.is_empty() => Ok(ClientSource::File(path.into())),
            Some(("preset", "zero")) => Ok(ClientSource::Preset(Preset::Zero)),
            Some(("preset", "uniform")) => Ok(ClientSource::Preset(Preset::Uniform)),
            Some(("preset", "ghz")) => Ok(ClientSource::Preset(Preset::Ghz)),
            _ => Err(format!(
                "expected random, random:SEED, file:PATH or preset:{{zero,uniform,ghz}}, got {s:?}"
            )),
        }
    }
}

impl fmt::Display for ClientSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClientSource::Random => f.write_str("random"),
            ClientSource::RandomSeed(s) => write!(f, "random:{s}"),
            ClientSource::File(p) => write!(f, "file:{}", p.display()),
            ClientSource::Preset(Preset::Zero) => f.write_str("preset:zero"),
            ClientSource::Preset(Preset::Uniform) => f.write_str("preset:uniform"),
            ClientSource::Preset(Preset::Ghz) => f.write_str("preset:ghz"),
        }
    }
}

/// Seed stream index reserved for the client; measurement trials use 1, 2, …
pub const CLIENT_STREAM: u64 = 0;

impl ClientSource {
    /// Builds the client on the layout's client ids.
    pub fn load(&self, layout: &ProtocolLayout, master_seed: u64) -> anyhow::Result<PureState> {
        let ids = layout.client_ids();
        let dim = 1usize << layout.n();
        let real = |v: Vec<f64>| v.into_iter().map(|x| Amplitude::new(x, 0.0)).collect::<Vec<_>>();
        let state = match self {
            ClientSource::Random => {
                PureState::random(ids, &mut rng_from_seed(split_seed(master_seed, CLIENT_STREAM)))?
            }
            ClientSource::RandomSeed(seed) => PureState::random(ids, &mut rng_from_seed(*seed))?,
            ClientSource::File(path) => {
                let s = PureState::read_from(path)
                    .with_context(|| format!("reading client state {}", path.display()))?;
                if s.num_qubits() != layout.n() {
                    bail!(
                        "client file has {} qubits, --n is {}",
                        s.num_qubits(),
                        layout.n()
                    );
                }
                layout.place_client(&s)?
            }
            ClientSource::Preset(Preset::Zero) => {
                let mut v = vec![0.0; dim];
                v[0] = 1.0;
                PureState::new(ids, real(v))?
            }
            ClientSource::Preset(Preset::Uniform) => PureState::renormalized(ids, real(vec![1.0; dim]))?,
            ClientSource::Preset(Preset::Ghz) => {
                let mut v = vec![0.0; dim];
                v[0] = 1.0;
                v[dim - 1] = 1.0;
                PureState::renormalized(ids, real(v))?
            }
        };
        Ok(state)
    }
}
