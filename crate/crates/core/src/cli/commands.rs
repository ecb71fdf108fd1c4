use std::fmt::Write as _;

use serde_json::{json, Value};

use super::{CliError, RunConfig};
use crate::machine::{decode_program, Execution, RunOutcome};
use crate::oracle::{omega, DyadicRational, HaltingSurrogate, RankTable};
use crate::protocols::{
    amplified_halting, estimate_omega, extract_bits, measure_halting, parity_halting,
    perturbation_sweep, verify_candidate_oracle, witness_grid, BitExtraction, Sampling,
};
use crate::quantum::{NoiseModel, SeededRng};

pub const DEFAULT_BOUND: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;
/// Largest truncation dimension a command will allocate.
pub const MAX_DIM: u64 = 1 << 22;
const MAX_LISTED: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Enumerate,
    RunProgram,
    Oracle,
    Omega,
    Measure,
    Parity,
    EstimateOmega,
    ExtractBits,
    Perturb,
    VerifyOracle,
}

impl Protocol {
    pub const ALL: [Protocol; 10] = [
        Protocol::Enumerate,
        Protocol::RunProgram,
        Protocol::Oracle,
        Protocol::Omega,
        Protocol::Measure,
        Protocol::Parity,
        Protocol::EstimateOmega,
        Protocol::ExtractBits,
        Protocol::Perturb,
        Protocol::VerifyOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Enumerate => "enumerate",
            Protocol::RunProgram => "run-program",
            Protocol::Oracle => "oracle",
            Protocol::Omega => "omega",
            Protocol::Measure => "measure",
            Protocol::Parity => "parity",
            Protocol::EstimateOmega => "estimate-omega",
            Protocol::ExtractBits => "extract-bits",
            Protocol::Perturb => "perturb",
            Protocol::VerifyOracle => "verify-oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Which construction the command exercises.
    pub fn describe(self) -> &'static str {
        match self {
            Protocol::Enumerate => "Goedel numbering: index -> register-machine program",
            Protocol::RunProgram => "step-bounded execution of program x on an input",
            Protocol::Oracle => {
                "surrogate halting function h_T(x) = [program x halts on x within T steps]"
            }
            Protocol::Omega => "Omega_T = sum over halting x <= x_max of 2^-(x+1), exact",
            Protocol::Measure => "halting observable sum_x h_T(x)|x><x| measured on |x>",
            Protocol::Parity => {
                "permutation U|x> = |g(x)>, halting bit read from the parity of g(x)"
            }
            Protocol::EstimateOmega => {
                "spin rotated by exp(-i Omega sigma_y), Omega from sigma_z statistics"
            }
            Protocol::ExtractBits => "binary digits of Omega from a confidence interval",
            Protocol::Perturb => "rotation angle Omega + eta against the fixed expansion of Omega",
            Protocol::VerifyOracle => "candidate halting table checked against dovetailed runs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Parameters actually used, defaults filled in.
    pub config: RunConfig,
    pub outcome: Value,
    pub summary: String,
}

fn required(v: Option<u64>, key: &str) -> Result<u64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required parameter `{key}`")))
}

fn dimension(d: u64) -> Result<u64, CliError> {
    if d == 0 || d > MAX_DIM {
        return Err(CliError::Usage(format!("D = {d} not in 1..={MAX_DIM}")));
    }
    Ok(d)
}

/// Fills defaults and drops keys the command does not read. Idempotent.
pub fn resolve(protocol: Protocol, cfg: &RunConfig) -> Result<RunConfig, CliError> {
    let bound = Some(cfg.bound.unwrap_or(DEFAULT_BOUND));
    let seed = Some(cfg.seed.unwrap_or(DEFAULT_SEED));
    let sampling = Some(cfg.sampling.unwrap_or(Sampling::PerShot));
    let mut out = RunConfig::default();
    match protocol {
        Protocol::Enumerate => {
            out.start = Some(cfg.start.unwrap_or(0));
            out.count = Some(cfg.count.unwrap_or(16));
        }
        Protocol::RunProgram => {
            let x = required(cfg.x, "x")?;
            out.x = Some(x);
            out.input = Some(cfg.input.unwrap_or(x));
            out.bound = bound;
        }
        Protocol::Oracle => {
            out.x_max = Some(cfg.x_max.unwrap_or(15));
            out.bound = bound;
        }
        Protocol::Omega => {
            out.x_max = Some(cfg.x_max.unwrap_or(12));
            out.bound = bound;
        }
        Protocol::Measure => {
            out.x = Some(required(cfg.x, "x")?);
            out.bound = bound;
            out.dim = Some(dimension(cfg.dim.unwrap_or(16))?);
            out.seed = seed;
            if cfg.epsilon.is_some() || cfg.delta.is_some() {
                out.epsilon = Some(cfg.epsilon.unwrap_or(0.0));
                out.delta = Some(cfg.delta.unwrap_or(0.0));
                out.confidence = Some(cfg.confidence.unwrap_or(0.99));
            }
        }
        Protocol::Parity => {
            let x = required(cfg.x, "x")?;
            let x_max = cfg.x_max.unwrap_or(32);
            if x > x_max {
                return Err(CliError::Usage(format!("x = {x} beyond x_max = {x_max}")));
            }
            out.x = Some(x);
            out.x_max = Some(x_max);
            out.bound = bound;
            out.dim = Some(dimension(cfg.dim.unwrap_or(128))?);
            out.seed = seed;
        }
        Protocol::EstimateOmega | Protocol::ExtractBits | Protocol::Perturb => {
            out.x_max = Some(cfg.x_max.unwrap_or(12));
            out.bound = bound;
            out.shots = Some(cfg.shots.unwrap_or(10_000));
            out.confidence = Some(cfg.confidence.unwrap_or(0.95));
            out.sampling = sampling;
            out.seed = seed;
            if protocol != Protocol::EstimateOmega {
                out.n = Some(cfg.n.unwrap_or(8));
            }
            if protocol == Protocol::Perturb {
                out.etas = cfg.etas.clone();
            }
        }
        Protocol::VerifyOracle => {
            let x_max = cfg.x_max.unwrap_or(200);
            let mut flip = cfg.flip.clone().unwrap_or_default();
            flip.sort_unstable();
            flip.dedup();
            if let Some(&f) = flip.iter().find(|&&f| f > x_max) {
                return Err(CliError::Usage(format!(
                    "flip index {f} beyond x_max = {x_max}"
                )));
            }
            out.x_max = Some(x_max);
            out.bound = bound;
            out.budget = Some(cfg.budget.unwrap_or(1_000_000));
            out.flip = Some(flip);
        }
    }
    Ok(out)
}

/// Resolves `cfg` and runs the command. Pure: the same inputs give the same result.
pub fn run_protocol(protocol: Protocol, cfg: &RunConfig) -> Result<RunResult, CliError> {
    let config = resolve(protocol, cfg)?;
    let (outcome, summary) = execute(protocol, &config)?;
    Ok(RunResult {
        config,
        outcome,
        summary,
    })
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn bit(b: bool) -> u8 {
    b as u8
}

fn shots_usize(n: u64) -> Result<usize, CliError> {
    usize::try_from(n).map_err(|_| CliError::Usage(format!("{n} too large")))
}

fn dyadic_json(d: &DyadicRational) -> Value {
    json!({
        "numerator": d.numerator().to_string(),
        "width": d.width(),
        "bits": bit_string(&d.bits(d.width() as usize)),
        "value": d.to_f64(),
    })
}

fn extraction_json(e: &BitExtraction) -> Value {
    json!({
        "bits": bit_string(&e.bits),
        "certified": e.certified,
        "guard": e.guard,
        "truth_bits": bit_string(&e.truth_bits),
        "matches_truth": e.matches_truth,
    })
}

fn omega_for(cfg: &RunConfig) -> Result<DyadicRational, CliError> {
    let x_max = cfg.x_max.expect("resolved");
    let s = HaltingSurrogate::build(x_max, cfg.bound.expect("resolved"))?;
    Ok(omega(&s, x_max)?)
}

fn execute(protocol: Protocol, cfg: &RunConfig) -> Result<(Value, String), CliError> {
    let mut text = format!("{}: {}\n", protocol.name(), protocol.describe());
    let rng = || SeededRng::new(cfg.seed.expect("resolved"));
    let outcome = match protocol {
        Protocol::Enumerate => {
            let start = cfg.start.expect("resolved");
            let count = cfg.count.expect("resolved");
            if count > MAX_LISTED {
                return Err(CliError::Usage(format!("count {count} above {MAX_LISTED}")));
            }
            let end = start
                .checked_add(count)
                .ok_or_else(|| CliError::Usage("start + count overflows".into()))?;
            let mut programs = Vec::new();
            for x in start..end {
                let p = decode_program(x);
                let _ = writeln!(text, "{x:>8}  {p}");
                programs.push(json!({"x": x, "program": p.to_string(), "length": p.len()}));
            }
            json!({ "programs": programs })
        }
        Protocol::RunProgram => {
            let x = cfg.x.expect("resolved");
            let input = cfg.input.expect("resolved");
            let bound = cfg.bound.expect("resolved");
            let program = decode_program(x);
            let mut exec = Execution::new(&program, input);
            let result = exec.run_to(bound)?;
            let state = exec.state();
            match result {
                RunOutcome::Halted { steps } => {
                    let _ = writeln!(
                        text,
                        "program {x} = {program}\nhalted after {steps} steps on input {input}"
                    );
                }
                RunOutcome::Exhausted { bound } => {
                    let _ = writeln!(text, "program {x} = {program}\nstill running after {bound} steps on input {input}");
                }
            }
            let _ = writeln!(text, "nonzero registers: {:?}", state.registers);
            json!({
                "program": program.to_string(),
                "result": result,
                "registers": state.registers,
                "pc": state.pc,
            })
        }
        Protocol::Oracle => {
            let s = HaltingSurrogate::build(
                cfg.x_max.expect("resolved"),
                cfg.bound.expect("resolved"),
            )?;
            let bits = s.bits();
            let halting = bits.iter().filter(|&&b| b).count();
            let _ = writeln!(
                text,
                "h_T = {}\n{halting} of {} programs halt within T = {}",
                bit_string(&bits),
                bits.len(),
                s.bound()
            );
            json!({
                "bits": bit_string(&bits),
                "halting": halting,
                "surrogate": s.to_json(),
            })
        }
        Protocol::Omega => {
            let w = omega_for(cfg)?;
            let _ = writeln!(
                text,
                "Omega_T = {w} = 0.{} (binary) ~ {}",
                bit_string(&w.bits(w.width() as usize)),
                w.to_f64()
            );
            json!({ "omega": dyadic_json(&w) })
        }
        Protocol::Measure => {
            let x = cfg.x.expect("resolved");
            let dim = cfg.dim.expect("resolved");
            let s = HaltingSurrogate::build(dim - 1, cfg.bound.expect("resolved"))?;
            let dim = shots_usize(dim)?;
            let truth = s.halts(x).ok();
            let mut rng = rng();
            match (cfg.epsilon, cfg.delta) {
                (Some(eps), Some(delta)) => {
                    let noise = NoiseModel::new(eps, delta)
                        .map_err(crate::protocols::ProtocolError::from)?;
                    let confidence = cfg.confidence.expect("resolved");
                    let r = amplified_halting(x, &s, dim, noise, confidence, &mut rng)?;
                    let _ = writeln!(
                        text,
                        "majority of {} noisy readings: {} of them read 1\noutcome h = {}",
                        r.repetitions,
                        r.votes_for_one,
                        bit(r.bit)
                    );
                    json!({
                        "mode": "amplified",
                        "outcome": bit(r.bit),
                        "votes_for_one": r.votes_for_one,
                        "repetitions": r.repetitions,
                        "h_T": truth.map(bit),
                    })
                }
                _ => {
                    let b = measure_halting(x, &s, dim, &mut rng)?;
                    let _ = writeln!(text, "measured |{x}>: outcome h = {}", bit(b));
                    json!({ "mode": "exact", "outcome": bit(b), "h_T": truth.map(bit) })
                }
            }
        }
        Protocol::Parity => {
            let x = cfg.x.expect("resolved");
            let s = HaltingSurrogate::build(
                cfg.x_max.expect("resolved"),
                cfg.bound.expect("resolved"),
            )?;
            let table = RankTable::from_surrogate(&s);
            let dim = shots_usize(cfg.dim.expect("resolved"))?;
            let p = parity_halting(x, &table, dim, &mut rng())?;
            let parity = if p.bit { "odd" } else { "even" };
            let _ = writeln!(
                text,
                "U|{x}> = |{}>, {parity}: outcome h = {}",
                p.image,
                bit(p.bit)
            );
            json!({
                "image": p.image,
                "parity": parity,
                "outcome": bit(p.bit),
                "h_T": bit(s.halts(x)?),
            })
        }
        Protocol::EstimateOmega | Protocol::ExtractBits => {
            let w = omega_for(cfg)?;
            let est = estimate_omega(
                &w,
                cfg.shots.expect("resolved"),
                cfg.confidence.expect("resolved"),
                cfg.sampling.expect("resolved"),
                &mut rng(),
            )?;
            let truth = w.to_f64();
            let _ = writeln!(
                text,
                "{} of {} shots spin up, Omega_hat = {} +/- {} (true {truth}, covered: {})",
                est.successes,
                est.shots,
                est.omega_hat,
                est.radius,
                est.covers(truth)
            );
            let mut out = json!({
                "omega_true": dyadic_json(&w),
                "estimate": est,
                "covered": est.covers(truth),
            });
            if protocol == Protocol::ExtractBits {
                let n = shots_usize(cfg.n.expect("resolved"))?;
                let e = extract_bits(&est, n, &w)?;
                let _ = writeln!(
                    text,
                    "first {n} bits {} (certified: {}, guard {}), exact {}",
                    bit_string(&e.bits),
                    e.certified,
                    e.guard,
                    bit_string(&e.truth_bits)
                );
                out["extraction"] = extraction_json(&e);
            }
            out
        }
        Protocol::Perturb => {
            let w = omega_for(cfg)?;
            let n = shots_usize(cfg.n.expect("resolved"))?;
            let etas = cfg.etas.clone().unwrap_or_else(|| witness_grid(&w, n));
            let r = perturbation_sweep(
                &w,
                n,
                &etas,
                cfg.shots.expect("resolved"),
                cfg.confidence.expect("resolved"),
                cfg.sampling.expect("resolved"),
                &mut rng(),
            )?;
            for e in &r.entries {
                let _ = writeln!(
                    text,
                    "eta {:+e}: exact corrupted bits {:?}, sampled {:?} (certified: {})",
                    e.eta, e.exact.corrupted, e.sampled_corrupted, e.extraction.certified
                );
            }
            let _ = writeln!(
                text,
                "smallest |eta| corrupting a bit <= {n}: {:?}; corrupting bit {n}: {:?}",
                r.smallest_corrupting, r.smallest_corrupting_bit
            );
            let entries: Vec<Value> = r
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "eta": e.eta,
                        "perturbed": e.exact.perturbed,
                        "exact_corrupted": e.exact.corrupted,
                        "estimate": e.estimate,
                        "extraction": extraction_json(&e.extraction),
                        "sampled_corrupted": e.sampled_corrupted,
                    })
                })
                .collect();
            json!({
                "omega_true": dyadic_json(&w),
                "bit_index": r.bit_index,
                "entries": entries,
                "smallest_corrupting": r.smallest_corrupting,
                "smallest_corrupting_bit": r.smallest_corrupting_bit,
                "smallest_certified_corrupting": r.smallest_certified_corrupting,
            })
        }
        Protocol::VerifyOracle => {
            let x_max = cfg.x_max.expect("resolved");
            let mut candidate =
                HaltingSurrogate::build(x_max, cfg.bound.expect("resolved"))?.bits();
            for &f in cfg.flip.as_deref().unwrap_or_default() {
                candidate[f as usize] ^= true;
            }
            let r = verify_candidate_oracle(
                &candidate,
                x_max,
                cfg.budget.expect("resolved"),
                &HaltingSurrogate::empty(),
            )?;
            let replayed = r
                .refutations
                .iter()
                .map(|f| f.replay())
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .all(|ok| ok);
            let _ = writeln!(
                text,
                "{} refutations, {} pending, {} consistent; {} steps used, common bound {}",
                r.refutations.len(),
                r.pending.len(),
                r.consistent,
                r.budget_used,
                r.bound
            );
            for f in &r.refutations {
                let _ = writeln!(
                    text,
                    "refuted: program {} ({}) halts after {} steps",
                    f.x, f.program, f.steps
                );
            }
            let mut out = serde_json::to_value(&r).expect("report serializes");
            out["replayed"] = json!(replayed);
            out
        }
    };
    Ok((outcome, text))
}
