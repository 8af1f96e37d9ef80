//! Error-rejection and error-correction pipelines.
//!
//! Alice encodes α|H⟩ + β|V⟩ as α|H⟩ at delay 0 plus β|H⟩ at delay 1 on the
//! line. Both of Bob's decoders first flip the delay-0 components, which
//! turns the channel's cosθ and sinθ terms into distinguishable polarizations.
//!
//! Activation windows are fixed here: Alice's cell fires on delay 1, Bob's
//! front cell on delay 0, and in the correction decoder the H arm fires on
//! delay 0 and the V arm on delay 1.

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{apply_channel, ChannelParams};
use crate::elements::{
    apply_balanced_interferometer, apply_hwp, apply_pockels, apply_unbalanced_interferometer, ActivationWindow,
    BalancedPorts,
};
use crate::error::{Error, Result};
use crate::state::{new_qubit_state, AmplitudeRecord, ModeSet, PhotonState, Qubit, SpatialMode, TimeBin, EMPTY_BRANCH_NORM};
use crate::report::{serialize_f64, serialize_opt_f64, Sig17};

pub const ALICE_WINDOW: u8 = 1;
pub const BOB_FRONT_WINDOW: u8 = 0;
pub const BOB_ARM_H_WINDOW: u8 = 0;
pub const BOB_ARM_V_WINDOW: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Single decoder with a time gate; corrupted components arrive early or late.
    Reject,
    /// Balanced-interferometer decoder; the qubit arrives on time at port 1 or 2.
    Correct,
}

/// Encoded state on the line: α at `(line, H, 0)`, β at `(line, H, 1)`.
pub fn alice_encode(q: &Qubit) -> PhotonState {
    let line = SpatialMode::LINE;
    let s = new_qubit_state(*q, line);
    let s = apply_unbalanced_interferometer(&s, line).expect("line is declared");
    apply_pockels(&s, line, ActivationWindow::bins([ALICE_WINDOW])).expect("line is declared")
}

fn check_received(s: &PhotonState) -> Result<()> {
    if let Some(bin) = s.occupied_bins().into_iter().find(|b| b.0 > 1) {
        return Err(Error::BinRange { delay: bin.0 });
    }
    s.modes().check(SpatialMode::LINE)
}

/// Full output of the rejection decoder before the time gate.
pub fn reject_decoder_output(s: &PhotonState) -> Result<PhotonState> {
    check_received(s)?;
    let line = SpatialMode::LINE;
    let s = apply_pockels(s, line, ActivationWindow::bins([BOB_FRONT_WINDOW]))?;
    let s = apply_unbalanced_interferometer(&s, line)?;
    apply_hwp(&s, line)
}

/// Full output of the correction decoder before detection.
pub fn correct_decoder_output(s: &PhotonState) -> Result<PhotonState> {
    check_received(s)?;
    let s = s.clone().with_modes(ModeSet::protocol());
    let ports = BalancedPorts::PROTOCOL;
    let s = apply_pockels(&s, ports.input, ActivationWindow::bins([BOB_FRONT_WINDOW]))?;
    let s = apply_balanced_interferometer(
        &s,
        &ports,
        ActivationWindow::bins([BOB_ARM_H_WINDOW]),
        ActivationWindow::bins([BOB_ARM_V_WINDOW]),
    )?;
    let mut s = s;
    for port in [ports.out1, ports.out2] {
        s = apply_unbalanced_interferometer(&s, port)?;
        s = apply_hwp(&s, port)?;
    }
    Ok(s)
}

/// Post-selected branch with its probability and quality figures.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub state: PhotonState,
    pub probability: f64,
    /// Fidelity of the renormalized branch with the input qubit; `None` when
    /// the branch is empty or no reference qubit was supplied.
    pub fidelity: Option<f64>,
    /// ⟨q|branch⟩ before renormalization, i.e. the branch's global factor.
    pub overlap: Option<Complex64>,
}

impl Branch {
    fn measure(state: PhotonState, probability: f64, q: Option<&Qubit>, spatial: SpatialMode, bin: TimeBin) -> Branch {
        let (fidelity, overlap) = match q {
            Some(q) if probability > EMPTY_BRANCH_NORM => (
                state.fidelity_with_qubit(q, spatial, bin).ok(),
                Some(state.overlap_with_qubit(q, spatial, bin)),
            ),
            _ => (None, None),
        };
        Branch {
            state,
            probability,
            fidelity,
            overlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutcome {
    /// On-time (SL/LS) branch, kept by the time gate.
    pub accepted: Branch,
    /// SS branch probability.
    pub early_probability: f64,
    /// LL branch probability.
    pub late_probability: f64,
    pub output: PhotonState,
}

impl RejectionOutcome {
    pub fn accept_probability(&self) -> f64 {
        self.accepted.probability
    }

    pub fn fidelity_accepted(&self) -> Option<f64> {
        self.accepted.fidelity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionOutcome {
    pub port1: Branch,
    pub port2: Branch,
    /// Probability found anywhere other than the two on-time output branches.
    pub residual_probability: f64,
    pub output: PhotonState,
}

/// Decodes without reference to the sent qubit; fidelities are left empty.
pub fn bob_decode_reject(s: &PhotonState) -> Result<RejectionOutcome> {
    decode_reject(s, None)
}

/// Decodes and scores the accepted branch against `q`.
pub fn bob_decode_reject_against(s: &PhotonState, q: &Qubit) -> Result<RejectionOutcome> {
    decode_reject(s, Some(q))
}

fn decode_reject(s: &PhotonState, q: Option<&Qubit>) -> Result<RejectionOutcome> {
    let output = reject_decoder_output(s)?;
    let (on_time, p_on) = output.project_time_bin(TimeBin::ON_TIME);
    let (_, p_early) = output.project_time_bin(TimeBin::EARLY);
    let (_, p_late) = output.project_time_bin(TimeBin::LATE);
    Ok(RejectionOutcome {
        accepted: Branch::measure(on_time, p_on, q, SpatialMode::LINE, TimeBin::ON_TIME),
        early_probability: p_early,
        late_probability: p_late,
        output,
    })
}

pub fn bob_decode_correct(s: &PhotonState) -> Result<CorrectionOutcome> {
    decode_correct(s, None)
}

pub fn bob_decode_correct_against(s: &PhotonState, q: &Qubit) -> Result<CorrectionOutcome> {
    decode_correct(s, Some(q))
}

fn decode_correct(s: &PhotonState, q: Option<&Qubit>) -> Result<CorrectionOutcome> {
    let output = correct_decoder_output(s)?;
    let (b1, p1) = output.project_port(SpatialMode::OUT1, TimeBin::ON_TIME);
    let (b2, p2) = output.project_port(SpatialMode::OUT2, TimeBin::ON_TIME);
    let residual = (output.norm_squared() - p1 - p2).max(0.0);
    Ok(CorrectionOutcome {
        port1: Branch::measure(b1, p1, q, SpatialMode::OUT1, TimeBin::ON_TIME),
        port2: Branch::measure(b2, p2, q, SpatialMode::OUT2, TimeBin::ON_TIME),
        residual_probability: residual,
        output,
    })
}

/// Received state after the channel, before Bob.
pub fn transmit(q: &Qubit, p: &ChannelParams) -> PhotonState {
    apply_channel(&alice_encode(q), p, SpatialMode::LINE).expect("line is declared")
}

pub fn run_rejection(q: &Qubit, p: &ChannelParams) -> RejectionOutcome {
    bob_decode_reject_against(&transmit(q, p), q).expect("transmitted state occupies bins 0 and 1 only")
}

pub fn run_correction(q: &Qubit, p: &ChannelParams) -> CorrectionOutcome {
    bob_decode_correct_against(&transmit(q, p), q).expect("transmitted state occupies bins 0 and 1 only")
}

/// Serializable view of a branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRecord {
    #[serde(serialize_with = "serialize_f64")]
    pub probability: f64,
    #[serde(serialize_with = "serialize_opt_f64")]
    pub fidelity: Option<f64>,
    /// `[re, im]` of the branch's global factor.
    pub overlap: Option<[Sig17; 2]>,
    pub amplitudes: Vec<AmplitudeRecord>,
}

impl From<&Branch> for BranchRecord {
    fn from(b: &Branch) -> Self {
        BranchRecord {
            probability: b.probability,
            fidelity: b.fidelity,
            overlap: b.overlap.map(|z| [Sig17(z.re), Sig17(z.im)]),
            amplitudes: b.state.to_records(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRecord {
    pub accepted: BranchRecord,
    #[serde(serialize_with = "serialize_f64")]
    pub early_probability: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub late_probability: f64,
    pub output: Vec<AmplitudeRecord>,
}

impl From<&RejectionOutcome> for RejectionRecord {
    fn from(o: &RejectionOutcome) -> Self {
        RejectionRecord {
            accepted: (&o.accepted).into(),
            early_probability: o.early_probability,
            late_probability: o.late_probability,
            output: o.output.to_records(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionRecord {
    pub port1: BranchRecord,
    pub port2: BranchRecord,
    #[serde(serialize_with = "serialize_f64")]
    pub residual_probability: f64,
    pub output: Vec<AmplitudeRecord>,
}

impl From<&CorrectionOutcome> for CorrectionRecord {
    fn from(o: &CorrectionOutcome) -> Self {
        CorrectionRecord {
            port1: (&o.port1).into(),
            port2: (&o.port2).into(),
            residual_probability: o.residual_probability,
            output: o.output.to_records(),
        }
    }
}
