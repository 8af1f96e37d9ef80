//! Linear-optical elements acting on [`PhotonState`].
//!
//! Routing is phase-free: PBS transmission and reflection impart no phase,
//! so every element other than the channel is a permutation of basis modes.
//! A Pockels cell is a full H↔V swap inside its activation window.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, ChannelParams};
use crate::error::{Error, Result};
use crate::state::{BasisMode, PhotonState, Polarization, SpatialMode, StateKind, TimeBin};

/// Set of time-bin delays during which a Pockels cell fires.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<u8>", into = "Vec<u8>")]
pub struct ActivationWindow(u64);

impl ActivationWindow {
    pub const fn never() -> Self {
        ActivationWindow(0)
    }

    /// Fires on every delay; equivalent to a half-wave plate.
    pub const fn always() -> Self {
        ActivationWindow(u64::MAX)
    }

    pub fn bins<I: IntoIterator<Item = u8>>(delays: I) -> Self {
        delays.into_iter().collect()
    }

    pub fn contains(self, bin: TimeBin) -> bool {
        bin.0 < 64 && self.0 & (1 << bin.0) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn delays(self) -> impl Iterator<Item = u8> {
        (0u8..64).filter(move |d| self.0 & (1 << d) != 0)
    }
}

impl FromIterator<u8> for ActivationWindow {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        ActivationWindow(iter.into_iter().fold(0, |acc, d| {
            assert!(d < 64, "activation delay {d} out of range");
            acc | (1 << d)
        }))
    }
}

impl From<Vec<u8>> for ActivationWindow {
    fn from(v: Vec<u8>) -> Self {
        v.into_iter().filter(|d| *d < 64).collect()
    }
}

impl From<ActivationWindow> for Vec<u8> {
    fn from(w: ActivationWindow) -> Self {
        w.delays().collect()
    }
}

impl fmt::Debug for ActivationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.delays()).finish()
    }
}

/// Mode wiring of the balanced interferometer with one gated cell per arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedPorts {
    pub input: SpatialMode,
    pub arm_h: SpatialMode,
    pub arm_v: SpatialMode,
    pub out1: SpatialMode,
    pub out2: SpatialMode,
}

impl BalancedPorts {
    /// Wiring used by the correction decoder.
    pub const PROTOCOL: BalancedPorts = BalancedPorts {
        input: SpatialMode::LINE,
        arm_h: SpatialMode::ARM_H,
        arm_v: SpatialMode::ARM_V,
        out1: SpatialMode::OUT1,
        out2: SpatialMode::OUT2,
    };

    pub fn modes(&self) -> [SpatialMode; 5] {
        [self.input, self.arm_h, self.arm_v, self.out1, self.out2]
    }
}

/// One element of a circuit description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementSpec {
    /// Two-port PBS: H stays on its mode, V is exchanged between `a` and `b`.
    Pbs { a: SpatialMode, b: SpatialMode },
    UnbalancedInterferometer { mode: SpatialMode },
    BalancedInterferometer {
        ports: BalancedPorts,
        window_h: ActivationWindow,
        window_v: ActivationWindow,
    },
    Hwp { mode: SpatialMode },
    PockelsCell { mode: SpatialMode, active_bins: ActivationWindow },
    Channel { mode: SpatialMode, params: ChannelParams },
    /// Keeps only the listed arrival delays. Not unitary.
    TimeGate { active_bins: ActivationWindow },
}

impl ElementSpec {
    /// Target spatial modes, in declaration order.
    pub fn modes(&self) -> Vec<SpatialMode> {
        match *self {
            ElementSpec::Pbs { a, b } => vec![a, b],
            ElementSpec::UnbalancedInterferometer { mode }
            | ElementSpec::Hwp { mode }
            | ElementSpec::PockelsCell { mode, .. }
            | ElementSpec::Channel { mode, .. } => vec![mode],
            ElementSpec::BalancedInterferometer { ports, .. } => ports.modes().to_vec(),
            ElementSpec::TimeGate { .. } => Vec::new(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, ElementSpec::TimeGate { .. })
    }
}

fn check_distinct(modes: &[SpatialMode]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::DuplicateMode(*m));
        }
    }
    Ok(())
}

/// Swaps H and V on every bin of `mode`.
pub fn apply_hwp(s: &PhotonState, mode: SpatialMode) -> Result<PhotonState> {
    apply_pockels(s, mode, ActivationWindow::always())
}

/// Swaps H and V on `mode` for delays inside `window`.
pub fn apply_pockels(s: &PhotonState, mode: SpatialMode, window: ActivationWindow) -> Result<PhotonState> {
    s.modes().check(mode)?;
    Ok(s.remap(|m, a| {
        let target = if m.spatial == mode && window.contains(m.bin) {
            BasisMode { pol: m.pol.flipped(), ..m }
        } else {
            m
        };
        [(target, a)]
    }))
}

/// PBS pair with a long V arm: V components on `mode` gain one unit of delay.
pub fn apply_unbalanced_interferometer(s: &PhotonState, mode: SpatialMode) -> Result<PhotonState> {
    s.modes().check(mode)?;
    Ok(s.remap(|m, a| {
        let target = if m.spatial == mode && m.pol == Polarization::V {
            BasisMode { bin: m.bin.later(), ..m }
        } else {
            m
        };
        [(target, a)]
    }))
}

/// Exchanges V components between modes `a` and `b`; H components stay put.
pub fn apply_pbs(s: &PhotonState, a: SpatialMode, b: SpatialMode) -> Result<PhotonState> {
    s.modes().check(a)?;
    s.modes().check(b)?;
    check_distinct(&[a, b])?;
    Ok(s.remap(|m, amp| {
        let target = match (m.pol, m.spatial) {
            (Polarization::V, sp) if sp == a => BasisMode { spatial: b, ..m },
            (Polarization::V, sp) if sp == b => BasisMode { spatial: a, ..m },
            _ => m,
        };
        [(target, amp)]
    }))
}

/// Balanced polarization interferometer with a gated Pockels cell in each arm.
///
/// The input PBS sends H into `arm_h` and V into `arm_v` with no relative
/// delay. After the cells, the recombining PBS sends a component to `out1`
/// if its polarization was left alone in-arm and to `out2` if it was flipped.
/// Both PBS stages are mode exchanges, so light already sitting on an arm or
/// output is routed backwards and the map stays a permutation.
pub fn apply_balanced_interferometer(
    s: &PhotonState,
    ports: &BalancedPorts,
    window_h: ActivationWindow,
    window_v: ActivationWindow,
) -> Result<PhotonState> {
    let modes = ports.modes();
    for m in modes {
        s.modes().check(m)?;
    }
    check_distinct(&modes)?;

    let split = s.remap(|m, a| {
        let spatial = match (m.spatial, m.pol) {
            (sp, Polarization::H) if sp == ports.input => ports.arm_h,
            (sp, Polarization::H) if sp == ports.arm_h => ports.input,
            (sp, Polarization::V) if sp == ports.input => ports.arm_v,
            (sp, Polarization::V) if sp == ports.arm_v => ports.input,
            (sp, _) => sp,
        };
        [(BasisMode { spatial, ..m }, a)]
    });
    let gated = apply_pockels(&split, ports.arm_h, window_h)?;
    let gated = apply_pockels(&gated, ports.arm_v, window_v)?;
    Ok(gated.remap(|m, a| {
        let spatial = match (m.spatial, m.pol) {
            (sp, Polarization::H) if sp == ports.arm_h => ports.out1,
            (sp, Polarization::H) if sp == ports.out1 => ports.arm_h,
            (sp, Polarization::V) if sp == ports.arm_h => ports.out2,
            (sp, Polarization::V) if sp == ports.out2 => ports.arm_h,
            (sp, Polarization::V) if sp == ports.arm_v => ports.out1,
            (sp, Polarization::V) if sp == ports.out1 => ports.arm_v,
            (sp, Polarization::H) if sp == ports.arm_v => ports.out2,
            (sp, Polarization::H) if sp == ports.out2 => ports.arm_v,
            (sp, _) => sp,
        };
        [(BasisMode { spatial, ..m }, a)]
    }))
}

/// Post-selection on arrival time; the result is an unnormalized branch.
pub fn apply_time_gate(s: &PhotonState, window: ActivationWindow) -> PhotonState {
    PhotonState::from_amplitudes(
        s.modes(),
        StateKind::Branch,
        s.iter().filter(|(m, _)| window.contains(m.bin)),
    )
}

/// Sparse propagation through one described element.
pub fn apply_element(s: &PhotonState, element: &ElementSpec) -> Result<PhotonState> {
    match *element {
        ElementSpec::Pbs { a, b } => apply_pbs(s, a, b),
        ElementSpec::UnbalancedInterferometer { mode } => apply_unbalanced_interferometer(s, mode),
        ElementSpec::BalancedInterferometer {
            ports,
            window_h,
            window_v,
        } => apply_balanced_interferometer(s, &ports, window_h, window_v),
        ElementSpec::Hwp { mode } => apply_hwp(s, mode),
        ElementSpec::PockelsCell { mode, active_bins } => apply_pockels(s, mode, active_bins),
        ElementSpec::Channel { mode, params } => apply_channel(s, &params, mode),
        ElementSpec::TimeGate { active_bins } => Ok(apply_time_gate(s, active_bins)),
    }
}

/// Arrival-time class after two unbalanced interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    /// SS: short path twice.
    TooEarly,
    /// SL or LS.
    OnTime,
    /// LL: long path twice.
    TooLate,
}

pub fn classify_arrival(bin: TimeBin) -> Result<Arrival> {
    match bin.0 {
        0 => Ok(Arrival::TooEarly),
        1 => Ok(Arrival::OnTime),
        2 => Ok(Arrival::TooLate),
        d => Err(Error::OutOfRange(d)),
    }
}
