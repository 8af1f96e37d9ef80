//! Monte Carlo experiments, θ sweeps and oracle verification runs.
//!
//! Probabilities are exact functions of the amplitudes. Detection events are
//! only drawn when `shot_sampling` is on, one categorical draw per trial.
//!
//! Trial `i` draws its channel from stream `i` of the channel domain and its
//! qubit from stream `i` of the qubit domain (four standard normals: Re α,
//! Im α, Re β, Im β). Results are collected in trial order, so the thread
//! count never changes a report.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelParams, ChannelSampler};
use crate::error::{Error, Result};
use crate::oracle::{build_dense_circuit, oracle_compare_with_fault, Fault};
use crate::protocols::{run_correction, run_rejection, Protocol};
use crate::report::{fmt17, fmt17_opt, serialize_f64, serialize_opt_f64};
use crate::rng;
use crate::state::Qubit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitSource {
    Fixed(Qubit),
    Haar,
}

/// Haar-random qubit: two complex Gaussians, normalized.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> Qubit {
    loop {
        let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = Qubit::from_unnormalized(Complex64::new(g[0], g[1]), Complex64::new(g[2], g[3])) {
            return q;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub trials: u64,
    pub qubit: QubitSource,
    pub channel: ChannelSampler,
    pub seed: u64,
    pub shot_sampling: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if let QubitSource::Fixed(q) = self.qubit {
            Qubit::new(q.alpha(), q.beta()).map_err(|e| Error::config("qubit", e.to_string()))?;
        }
        Ok(())
    }

    fn qubit_for(&self, trial: u64) -> Qubit {
        match self.qubit {
            QubitSource::Fixed(q) => q,
            QubitSource::Haar => haar_qubit(&mut rng::stream(self.seed, rng::DOMAIN_QUBIT, trial)),
        }
    }
}

/// Simulated detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotOutcome {
    Early,
    OnTime,
    Late,
    Port1,
    Port2,
}

impl ShotOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            ShotOutcome::Early => "early",
            ShotOutcome::OnTime => "on_time",
            ShotOutcome::Late => "late",
            ShotOutcome::Port1 => "port1",
            ShotOutcome::Port2 => "port2",
        }
    }
}

/// One trial. For rejection runs the primary/secondary columns are the
/// accepted and early probabilities; for correction runs they are ports 1 and 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    #[serde(serialize_with = "serialize_f64")]
    pub theta: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub phi: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub chi: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub p_accept_or_p1: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub p_early_or_p2: f64,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub p_late: Option<f64>,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub fidelity_accept_or_p1: Option<f64>,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub fidelity_p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shot: Option<ShotOutcome>,
}

pub const TRIAL_CSV_HEADER: &str =
    "trial,theta,phi,chi,p_accept_or_p1,p_early_or_p2,p_late,fidelity_accept_or_p1,fidelity_p2,shot";

impl TrialRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            fmt17(self.theta),
            fmt17(self.phi),
            fmt17(self.chi),
            fmt17(self.p_accept_or_p1),
            fmt17(self.p_early_or_p2),
            fmt17_opt(self.p_late),
            fmt17_opt(self.fidelity_accept_or_p1),
            fmt17_opt(self.fidelity_p2),
            self.shot.map(ShotOutcome::as_str).unwrap_or(""),
        )
    }

    fn fidelities(&self) -> impl Iterator<Item = f64> {
        self.fidelity_accept_or_p1.into_iter().chain(self.fidelity_p2)
    }
}

/// Exact probabilities for one (q, p) without any sampling.
pub fn evaluate(protocol: Protocol, trial: u64, q: &Qubit, p: &ChannelParams) -> TrialRecord {
    match protocol {
        Protocol::Reject => {
            let o = run_rejection(q, p);
            TrialRecord {
                trial,
                theta: p.theta,
                phi: p.phi,
                chi: p.chi,
                p_accept_or_p1: o.accepted.probability,
                p_early_or_p2: o.early_probability,
                p_late: Some(o.late_probability),
                fidelity_accept_or_p1: o.accepted.fidelity,
                fidelity_p2: None,
                shot: None,
            }
        }
        Protocol::Correct => {
            let o = run_correction(q, p);
            TrialRecord {
                trial,
                theta: p.theta,
                phi: p.phi,
                chi: p.chi,
                p_accept_or_p1: o.port1.probability,
                p_early_or_p2: o.port2.probability,
                p_late: None,
                fidelity_accept_or_p1: o.port1.fidelity,
                fidelity_p2: o.port2.fidelity,
                shot: None,
            }
        }
    }
}

fn draw_shot(cfg: &ExperimentConfig, record: &TrialRecord) -> Option<ShotOutcome> {
    let u: f64 = rng::stream(cfg.seed, rng::DOMAIN_SHOT, record.trial).random();
    let outcomes: Vec<(ShotOutcome, f64)> = match cfg.protocol {
        Protocol::Reject => vec![
            (ShotOutcome::Early, record.p_early_or_p2),
            (ShotOutcome::OnTime, record.p_accept_or_p1),
            (ShotOutcome::Late, record.p_late.unwrap_or(0.0)),
        ],
        Protocol::Correct => vec![
            (ShotOutcome::Port1, record.p_accept_or_p1),
            (ShotOutcome::Port2, record.p_early_or_p2),
        ],
    };
    let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
    let mut acc = 0.0;
    for (outcome, p) in &outcomes {
        acc += p / total;
        if u < acc {
            return Some(*outcome);
        }
    }
    outcomes.last().map(|(o, _)| *o)
}

fn run_trial(cfg: &ExperimentConfig, trial: u64) -> TrialRecord {
    let p = cfg.channel.draw(trial);
    let q = cfg.qubit_for(trial);
    let mut record = evaluate(cfg.protocol, trial, &q, &p);
    if cfg.shot_sampling {
        record.shot = draw_shot(cfg, &record);
    }
    record
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotCounts {
    pub early: u64,
    pub on_time: u64,
    pub late: u64,
    pub port1: u64,
    pub port2: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub trials: u64,
    /// Mean accept probability (rejection) or port-1 probability (correction).
    #[serde(serialize_with = "serialize_f64")]
    pub mean_accept_or_p1: f64,
    /// Unbiased sample variance of the same column; 0 for a single trial.
    #[serde(serialize_with = "serialize_f64")]
    pub variance_accept_or_p1: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub mean_early_or_p2: f64,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub mean_late: Option<f64>,
    /// Largest |sum of branch probabilities − 1| seen in any trial.
    #[serde(serialize_with = "serialize_f64")]
    pub max_probability_defect: f64,
    /// Mean over every defined branch fidelity.
    #[serde(serialize_with = "serialize_opt_f64")]
    pub mean_fidelity: Option<f64>,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub min_fidelity: Option<f64>,
    pub fidelity_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<ShotCounts>,
}

impl Aggregates {
    pub fn from_records(records: &[TrialRecord], shot_sampling: bool) -> Aggregates {
        let n = records.len() as f64;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        let mean_primary = mean(&|r| r.p_accept_or_p1);
        let variance = if records.len() > 1 {
            records
                .iter()
                .map(|r| (r.p_accept_or_p1 - mean_primary).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        let mean_late = if records.iter().all(|r| r.p_late.is_some()) {
            Some(mean(&|r| r.p_late.unwrap_or(0.0)))
        } else {
            None
        };
        let max_defect = records
            .iter()
            .map(|r| (r.p_accept_or_p1 + r.p_early_or_p2 + r.p_late.unwrap_or(0.0) - 1.0).abs())
            .fold(0.0, f64::max);
        let fidelities: Vec<f64> = records.iter().flat_map(TrialRecord::fidelities).collect();
        let (mean_fidelity, min_fidelity) = if fidelities.is_empty() {
            (None, None)
        } else {
            (
                Some(fidelities.iter().sum::<f64>() / fidelities.len() as f64),
                Some(fidelities.iter().copied().fold(f64::INFINITY, f64::min)),
            )
        };
        let shots = shot_sampling.then(|| {
            let count = |o: ShotOutcome| records.iter().filter(|r| r.shot == Some(o)).count() as u64;
            ShotCounts {
                early: count(ShotOutcome::Early),
                on_time: count(ShotOutcome::OnTime),
                late: count(ShotOutcome::Late),
                port1: count(ShotOutcome::Port1),
                port2: count(ShotOutcome::Port2),
            }
        });
        Aggregates {
            trials: records.len() as u64,
            mean_accept_or_p1: mean_primary,
            variance_accept_or_p1: variance,
            mean_early_or_p2: mean(&|r| r.p_early_or_p2),
            mean_late,
            max_probability_defect: max_defect,
            mean_fidelity,
            min_fidelity,
            fidelity_count: fidelities.len() as u64,
            shots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub aggregates: Aggregates,
    pub trials: Vec<TrialRecord>,
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.trials.len() * 200);
        out.push_str(TRIAL_CSV_HEADER);
        out.push('\n');
        for r in &self.trials {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(job),
        None => job(),
    }
}

/// Runs every trial; `threads = None` uses rayon's global pool.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunReport> {
    cfg.validate()?;
    let trials = in_pool(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, i))
            .collect::<Vec<_>>()
    });
    Ok(RunReport {
        protocol: cfg.protocol,
        seed: cfg.seed,
        aggregates: Aggregates::from_records(&trials, cfg.shot_sampling),
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(serialize_with = "serialize_f64")]
    pub theta: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub p_accept_or_p1: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub p_early_or_p2: f64,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub p_late: Option<f64>,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub fidelity_accept_or_p1: Option<f64>,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub fidelity_p2: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str = "theta,p_accept_or_p1,p_early_or_p2,p_late,fidelity_accept_or_p1,fidelity_p2";

/// Exact probabilities on a θ grid at fixed φ, χ and qubit.
pub fn sweep(protocol: Protocol, thetas: &[f64], phi: f64, chi: f64, q: &Qubit) -> Result<Vec<SweepRow>> {
    if thetas.is_empty() {
        return Err(Error::config("sweep", "theta grid is empty"));
    }
    thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let p = ChannelParams::new(theta, phi, chi)?;
            let r = evaluate(protocol, i as u64, q, &p);
            Ok(SweepRow {
                theta,
                p_accept_or_p1: r.p_accept_or_p1,
                p_early_or_p2: r.p_early_or_p2,
                p_late: r.p_late,
                fidelity_accept_or_p1: r.fidelity_accept_or_p1,
                fidelity_p2: r.fidelity_p2,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(r.theta),
            fmt17(r.p_accept_or_p1),
            fmt17(r.p_early_or_p2),
            fmt17_opt(r.p_late),
            fmt17_opt(r.fidelity_accept_or_p1),
            fmt17_opt(r.fidelity_p2),
        );
    }
    out
}

/// Oracle deviation required for a verification pass.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolVerification {
    pub protocol: Protocol,
    pub samples: u64,
    #[serde(serialize_with = "serialize_f64")]
    pub max_deviation: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub max_unitarity_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    #[serde(serialize_with = "serialize_f64")]
    pub tolerance: f64,
    pub fault: Option<Fault>,
    pub protocols: Vec<ProtocolVerification>,
    pub passed: bool,
}

/// Random (q, p) for verification sample `i`: four normals for the qubit,
/// then θ, φ, χ uniform on [0, 2π), all from one stream.
pub fn verification_sample(seed: u64, index: u64) -> (Qubit, ChannelParams) {
    use std::f64::consts::TAU;
    let mut r = rng::stream(seed, rng::DOMAIN_VERIFY, index);
    let q = haar_qubit(&mut r);
    let p = ChannelParams {
        theta: r.random_range(0.0..TAU),
        phi: r.random_range(0.0..TAU),
        chi: r.random_range(0.0..TAU),
    };
    (q, p)
}

/// Compares sparse propagation with the dense oracle on `samples` random
/// inputs per protocol.
pub fn verify(samples: u64, seed: u64, fault: Option<Fault>, threads: Option<usize>) -> Result<VerifyReport> {
    if samples == 0 {
        return Err(Error::config("verify.samples", "must be >= 1"));
    }
    let protocols = in_pool(threads, || {
        [Protocol::Reject, Protocol::Correct]
            .into_iter()
            .map(|protocol| {
                let (dev, unit) = (0..samples)
                    .into_par_iter()
                    .map(|i| {
                        let (q, p) = verification_sample(seed, i);
                        let dev = oracle_compare_with_fault(protocol, &q, &p, fault);
                        let unit = build_dense_circuit(protocol, &p).unitarity_error();
                        (dev, unit)
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .fold((0.0f64, 0.0f64), |(a, b), (d, u)| (a.max(d), b.max(u)));
                ProtocolVerification {
                    protocol,
                    samples,
                    max_deviation: dev,
                    max_unitarity_error: unit,
                    passed: dev < ORACLE_TOLERANCE && unit < ORACLE_TOLERANCE,
                }
            })
            .collect::<Vec<_>>()
    });
    let passed = protocols.iter().all(|p| p.passed);
    Ok(VerifyReport {
        seed,
        tolerance: ORACLE_TOLERANCE,
        fault,
        protocols,
        passed,
    })
}
