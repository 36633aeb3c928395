use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Context};
use crossbell::bell::{cross_bell_basis, expand_in_cross_bell, join_kinds};
use crossbell::oracle::{check_golden, golden_verdicts, verify_reference_tables};
use crossbell::statevec::inner;
use crossbell::teleport::{run_protocol, run_session};
use crossbell::{BellKind, Mode, ProtocolLayout, PureState, QubitId, QubitPair};
use serde::Serialize;

use crate::client::CLIENT_STREAM;
use crate::output::{emit, to_json, SCHEMA_VERSION};
use crate::{BasisArgs, ExpandArgs, Format, ModeArg, TeleportArgs, VerifyArgs};

const FIDELITY_FLOOR: f64 = 1.0 - crossbell::tol::CHAINED;
const GRAM_TOLERANCE: f64 = crossbell::tol::EXACT;

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, B: Serialize> {
    tool_version: &'static str,
    schema_version: u32,
    command: &'static str,
    config_echo: &'a C,
    #[serde(flatten)]
    body: B,
}

fn envelope<'a, C: Serialize, B: Serialize>(command: &'static str, config: &'a C, body: B) -> Envelope<'a, C, B> {
    Envelope {
        tool_version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        command,
        config_echo: config,
        body,
    }
}

#[derive(Serialize)]
struct Branch {
    outcome: String,
    probability: f64,
    fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Aggregate {
    branches: usize,
    min_fidelity: f64,
    /// Largest `|p - 4^-n|` over the reported branches.
    max_prob_deviation: f64,
}

#[derive(Serialize)]
struct TeleportBody {
    client_state: PureState,
    branches: Vec<Branch>,
    aggregate: Aggregate,
}

pub fn teleport(args: &TeleportArgs) -> anyhow::Result<bool> {
    let n = usize::from(args.n);
    if args.channel.n() != n {
        bail!("--channel lists {} kinds but --n is {n}", args.channel.n());
    }
    if args.session && args.mode != ModeArg::Sample {
        bail!("--session requires --mode sample");
    }
    if args.mode == ModeArg::Sample && args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let layout = ProtocolLayout::new(n)?;
    let client = args.client.load(&layout, args.seed)?;

    let mut branches = Vec::new();
    match args.mode {
        ModeArg::Enumerate => {
            for r in run_protocol(&args.channel, &client, Mode::Enumerate)? {
                branches.push(Branch {
                    outcome: join_kinds(&r.outcome),
                    probability: r.probability,
                    fidelity: r.fidelity_vs_client,
                    seed: None,
                });
            }
        }
        ModeArg::Sample => {
            for t in 0..args.trials as u64 {
                let seed = crossbell::measure::split_seed(args.seed, CLIENT_STREAM + 1 + t);
                let r = if args.session {
                    run_session(&args.channel, &client, seed)?
                } else {
                    run_protocol(&args.channel, &client, Mode::Sample { seed })?.remove(0)
                };
                branches.push(Branch {
                    outcome: join_kinds(&r.outcome),
                    probability: r.probability,
                    fidelity: r.fidelity_vs_client,
                    seed: Some(seed),
                });
            }
        }
    }

    let uniform = 0.25f64.powi(n as i32);
    let aggregate = Aggregate {
        branches: branches.len(),
        min_fidelity: branches.iter().map(|b| b.fidelity).fold(f64::INFINITY, f64::min),
        max_prob_deviation: branches
            .iter()
            .map(|b| (b.probability - uniform).abs())
            .fold(0.0, f64::max),
    };
    let passed = aggregate.min_fidelity >= FIDELITY_FLOOR;
    let body = TeleportBody {
        client_state: client,
        branches,
        aggregate,
    };
    emit(&to_json(&envelope("teleport", args, body))?, args.out.as_deref())?;
    if !passed {
        eprintln!("fidelity below {FIDELITY_FLOOR} on at least one branch");
    }
    Ok(passed)
}

#[derive(Serialize)]
struct VerifyBody<'a> {
    report: &'a crossbell::oracle::DivergenceReport,
    golden_diffs: &'a [crossbell::oracle::GoldenDiff],
}

pub fn verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let golden = match &args.golden {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => golden_verdicts().to_string(),
    };
    let report = verify_reference_tables();
    let diffs = check_golden(&report, &golden)?;
    let text = match args.format {
        Format::Json => to_json(&envelope(
            "verify",
            args,
            VerifyBody {
                report: &report,
                golden_diffs: &diffs,
            },
        ))?,
        Format::Text => {
            let mut text = report.to_text();
            if diffs.is_empty() {
                text.push_str("golden: all verdicts match\n");
            } else {
                let _ = writeln!(text, "golden: {} difference(s)", diffs.len());
                for d in &diffs {
                    let show = |v: Option<crossbell::oracle::Verdict>| {
                        v.map_or_else(|| "(missing)".to_string(), |v| v.to_string())
                    };
                    let _ = writeln!(text, "  {}: golden {} actual {}", d.location, show(d.golden), show(d.actual));
                }
            }
            text
        }
    };
    emit(&text, args.out.as_deref())?;
    Ok(diffs.is_empty())
}

#[derive(Serialize)]
struct BasisBody {
    pairs: Vec<QubitPair>,
    basis_size: usize,
    max_gram_deviation: f64,
}

pub fn basis(args: &BasisArgs) -> anyhow::Result<bool> {
    let n = u32::from(args.n);
    let pairs: Vec<QubitPair> = (1..=n).map(|k| (QubitId(k), QubitId(n + k))).collect();
    let basis = cross_bell_basis(&pairs)?;
    let mut max_dev = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let want = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((inner(a, b)? - want).norm());
        }
    }
    let passed = max_dev < GRAM_TOLERANCE;
    let body = BasisBody {
        pairs,
        basis_size: basis.len(),
        max_gram_deviation: max_dev,
    };
    let text = match args.format {
        Format::Json => to_json(&envelope("basis", args, body))?,
        Format::Text => format!(
            "n={n}: {} states, max |G - I| = {max_dev:e} ({})\n",
            body.basis_size,
            if passed { "orthonormal" } else { "NOT orthonormal" }
        ),
    };
    emit(&text, None)?;
    Ok(passed)
}

/// Parses `1-3,2-4` into qubit pairs.
fn parse_pairs(s: &str) -> anyhow::Result<Vec<QubitPair>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p
                .trim()
                .split_once('-')
                .with_context(|| format!("pair {p:?} is not of the form A-B"))?;
            let a: u32 = a.trim().parse().with_context(|| format!("bad qubit id {a:?}"))?;
            let b: u32 = b.trim().parse().with_context(|| format!("bad qubit id {b:?}"))?;
            Ok((QubitId(a), QubitId(b)))
        })
        .collect()
}

#[derive(Serialize)]
struct Coefficient {
    kinds: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ExpandBody {
    pairs: Vec<QubitPair>,
    coefficients: Vec<Coefficient>,
}

pub fn expand(args: &ExpandArgs) -> anyhow::Result<bool> {
    let state = PureState::read_from(&args.state).with_context(|| format!("reading {}", args.state.display()))?;
    let pairs = parse_pairs(&args.pairs)?;
    let coefficients: Vec<Coefficient> = expand_in_cross_bell(&state, &pairs)?
        .into_iter()
        .filter(|(_, c)| args.all || c.norm() >= crossbell::tol::EXACT)
        .map(|(kinds, c): (Vec<BellKind>, _)| Coefficient {
            kinds: join_kinds(&kinds),
            re: c.re,
            im: c.im,
        })
        .collect();
    let text = match args.format {
        Format::Json => to_json(&envelope("expand", args, ExpandBody { pairs, coefficients }))?,
        Format::Text => {
            let mut text = String::new();
            for c in &coefficients {
                let _ = writeln!(text, "{:<24} {:+.12} {:+.12}i", c.kinds, c.re, c.im);
            }
            text
        }
    };
    emit(&text, None)?;
    Ok(true)
}
