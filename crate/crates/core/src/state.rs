//! Single-photon state space over spatial × polarization × time-bin modes.
//!
//! A [`PhotonState`] is a sparse map from [`BasisMode`] to a complex amplitude.
//! The map is a `BTreeMap`, so iteration always follows the canonical basis
//! order: spatial mode ascending, then delay ascending, then `H` before `V`.
//! The dense oracle and the serialized form both rely on that order.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::Sig17;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_MAGNITUDE: f64 = 1e-15;
/// Norm² below this counts as an empty branch.
pub const EMPTY_BRANCH_NORM: f64 = 1e-12;
/// Tolerance on |α|² + |β|² when constructing a [`Qubit`].
pub const QUBIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// Number of long-path traversals accumulated so far. One unit is the
/// short/long path difference of an unbalanced interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeBin(pub u8);

impl TimeBin {
    /// Short path only (S, or SS after two interferometers).
    pub const EARLY: TimeBin = TimeBin(0);
    /// One long-path traversal (L, or SL/LS after two interferometers).
    pub const ON_TIME: TimeBin = TimeBin(1);
    /// Two long-path traversals (LL).
    pub const LATE: TimeBin = TimeBin(2);
    /// Largest delay reachable in either protocol.
    pub const MAX_PROTOCOL_DELAY: u8 = 2;

    pub fn delay(self) -> u8 {
        self.0
    }

    pub(crate) fn later(self) -> TimeBin {
        TimeBin(self.0 + 1)
    }
}

/// Label of a spatial mode. The protocols use the five constants below;
/// other labels are free for experimentation with the element API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpatialMode(pub u8);

impl SpatialMode {
    /// Transmission line, shared by Alice, the channel and Bob's front end.
    pub const LINE: SpatialMode = SpatialMode(0);
    /// H arm inside Bob's balanced interferometer.
    pub const ARM_H: SpatialMode = SpatialMode(1);
    /// V arm inside Bob's balanced interferometer.
    pub const ARM_V: SpatialMode = SpatialMode(2);
    /// Output port 1 of the balanced interferometer.
    pub const OUT1: SpatialMode = SpatialMode(3);
    /// Output port 2 of the balanced interferometer.
    pub const OUT2: SpatialMode = SpatialMode(4);

    pub const MAX_ID: u8 = 31;

    pub fn id(self) -> u8 {
        self.0
    }
}

impl fmt::Display for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Declared set of spatial modes, stored as a bitmask over ids `0..=31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ModeSet(u32);

impl ModeSet {
    pub const fn empty() -> Self {
        ModeSet(0)
    }

    pub fn single(mode: SpatialMode) -> Self {
        ModeSet::empty().with(mode)
    }

    /// All five modes used by the correction circuit.
    pub fn protocol() -> Self {
        [
            SpatialMode::LINE,
            SpatialMode::ARM_H,
            SpatialMode::ARM_V,
            SpatialMode::OUT1,
            SpatialMode::OUT2,
        ]
        .into_iter()
        .collect()
    }

    pub fn with(self, mode: SpatialMode) -> Self {
        assert!(mode.0 <= SpatialMode::MAX_ID, "spatial mode id {} exceeds {}", mode.0, SpatialMode::MAX_ID);
        ModeSet(self.0 | (1 << mode.0))
    }

    pub fn union(self, other: ModeSet) -> Self {
        ModeSet(self.0 | other.0)
    }

    pub fn contains(self, mode: SpatialMode) -> bool {
        mode.0 <= SpatialMode::MAX_ID && self.0 & (1 << mode.0) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Ascending iteration over declared modes.
    pub fn iter(self) -> impl Iterator<Item = SpatialMode> {
        (0..=SpatialMode::MAX_ID)
            .filter(move |id| self.0 & (1 << id) != 0)
            .map(SpatialMode)
    }

    pub fn check(self, mode: SpatialMode) -> Result<()> {
        if self.contains(mode) {
            Ok(())
        } else {
            Err(Error::UnknownMode(mode))
        }
    }
}

impl FromIterator<SpatialMode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = SpatialMode>>(iter: I) -> Self {
        iter.into_iter().fold(ModeSet::empty(), ModeSet::with)
    }
}

/// One optical mode. Field order defines the canonical ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisMode {
    pub spatial: SpatialMode,
    pub bin: TimeBin,
    pub pol: Polarization,
}

impl BasisMode {
    pub fn new(spatial: SpatialMode, pol: Polarization, bin: TimeBin) -> Self {
        BasisMode { spatial, bin, pol }
    }
}

impl fmt::Display for BasisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>[{},d={}]", self.pol, self.spatial, self.bin.0)
    }
}

/// Polarization qubit α|H⟩ + β|V⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    alpha: Complex64,
    beta: Complex64,
}

impl Qubit {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > QUBIT_NORM_TOLERANCE {
            return Err(Error::Normalization { norm });
        }
        Ok(Qubit { alpha, beta })
    }

    /// Scales an arbitrary nonzero pair onto the unit sphere.
    pub fn from_unnormalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || norm < EMPTY_BRANCH_NORM {
            return Err(Error::EmptyBranch { norm });
        }
        let scale = norm.sqrt().recip();
        Ok(Qubit {
            alpha: alpha * scale,
            beta: beta * scale,
        })
    }

    pub fn horizontal() -> Self {
        Qubit {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Qubit {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }
}

/// Whether a state is a full wavefunction or an unnormalized post-selected branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Normalized,
    Branch,
}

/// Single-photon wavefunction over a declared set of spatial modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState {
    modes: ModeSet,
    kind: StateKind,
    amplitudes: BTreeMap<BasisMode, Complex64>,
}

/// α at `(home, H, 0)` and β at `(home, V, 0)`; `home` is the only declared mode.
pub fn new_qubit_state(q: Qubit, home: SpatialMode) -> PhotonState {
    PhotonState::from_amplitudes(
        ModeSet::single(home),
        StateKind::Normalized,
        [
            (BasisMode::new(home, Polarization::H, TimeBin::EARLY), q.alpha),
            (BasisMode::new(home, Polarization::V, TimeBin::EARLY), q.beta),
        ],
    )
}

impl PhotonState {
    pub fn empty(modes: ModeSet, kind: StateKind) -> Self {
        PhotonState {
            modes,
            kind,
            amplitudes: BTreeMap::new(),
        }
    }

    /// Accumulates amplitudes (repeated modes add) and prunes tiny entries.
    pub fn from_amplitudes<I>(modes: ModeSet, kind: StateKind, amplitudes: I) -> Self
    where
        I: IntoIterator<Item = (BasisMode, Complex64)>,
    {
        let mut map: BTreeMap<BasisMode, Complex64> = BTreeMap::new();
        for (mode, amp) in amplitudes {
            *map.entry(mode).or_default() += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_MAGNITUDE);
        PhotonState {
            modes,
            kind,
            amplitudes: map,
        }
    }

    /// Declares additional spatial modes, e.g. when the photon enters an apparatus.
    pub fn with_modes(mut self, extra: ModeSet) -> Self {
        self.modes = self.modes.union(extra);
        self
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn amplitude(&self, mode: BasisMode) -> Complex64 {
        self.amplitudes.get(&mode).copied().unwrap_or_default()
    }

    /// Canonically ordered `(mode, amplitude)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (BasisMode, Complex64)> + '_ {
        self.amplitudes.iter().map(|(m, a)| (*m, *a))
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Distinct occupied delays, ascending.
    pub fn occupied_bins(&self) -> Vec<TimeBin> {
        let bins: std::collections::BTreeSet<TimeBin> = self.amplitudes.keys().map(|m| m.bin).collect();
        bins.into_iter().collect()
    }

    /// Rebuilds the state from a per-amplitude map, keeping modes and kind.
    pub(crate) fn remap<F, I>(&self, mut f: F) -> PhotonState
    where
        F: FnMut(BasisMode, Complex64) -> I,
        I: IntoIterator<Item = (BasisMode, Complex64)>,
    {
        PhotonState::from_amplitudes(
            self.modes,
            self.kind,
            self.amplitudes.iter().flat_map(|(m, a)| f(*m, *a)),
        )
    }

    fn branch_where<P: Fn(&BasisMode) -> bool>(&self, keep: P) -> PhotonState {
        PhotonState {
            modes: self.modes,
            kind: StateKind::Branch,
            amplitudes: self
                .amplitudes
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, a)| (*m, *a))
                .collect(),
        }
    }

    /// Time-gate: the unnormalized branch at `bin` across all spatial modes,
    /// with its probability.
    pub fn project_time_bin(&self, bin: TimeBin) -> (PhotonState, f64) {
        let branch = self.branch_where(|m| m.bin == bin);
        let p = branch.norm_squared();
        (branch, p)
    }

    /// Detector at one spatial mode gated on one time-bin.
    pub fn project_port(&self, spatial: SpatialMode, bin: TimeBin) -> (PhotonState, f64) {
        let branch = self.branch_where(|m| m.bin == bin && m.spatial == spatial);
        let p = branch.norm_squared();
        (branch, p)
    }

    pub fn renormalize(&self) -> Result<PhotonState> {
        let norm = self.norm_squared();
        if norm < EMPTY_BRANCH_NORM {
            return Err(Error::EmptyBranch { norm });
        }
        let scale = norm.sqrt().recip();
        Ok(PhotonState {
            modes: self.modes,
            kind: StateKind::Normalized,
            amplitudes: self.amplitudes.iter().map(|(m, a)| (*m, a * scale)).collect(),
        })
    }

    /// ⟨q| restricted branch⟩ without normalization. For an uncorrupted
    /// branch this is the branch's global factor (e.g. e^{iφ}cosθ).
    pub fn overlap_with_qubit(&self, q: &Qubit, spatial: SpatialMode, bin: TimeBin) -> Complex64 {
        let h = self.amplitude(BasisMode::new(spatial, Polarization::H, bin));
        let v = self.amplitude(BasisMode::new(spatial, Polarization::V, bin));
        q.alpha.conj() * h + q.beta.conj() * v
    }

    /// |⟨q|branch⟩|² of the renormalized restriction to `(spatial, bin)`.
    pub fn fidelity_with_qubit(&self, q: &Qubit, spatial: SpatialMode, bin: TimeBin) -> Result<f64> {
        let h = self.amplitude(BasisMode::new(spatial, Polarization::H, bin));
        let v = self.amplitude(BasisMode::new(spatial, Polarization::V, bin));
        let norm = h.norm_sqr() + v.norm_sqr();
        if norm < EMPTY_BRANCH_NORM {
            return Err(Error::EmptyBranch { norm });
        }
        let overlap = q.alpha.conj() * h + q.beta.conj() * v;
        Ok((overlap.norm_sqr() / norm).clamp(0.0, 1.0))
    }

    /// Scales every amplitude by `factor`. The result is a branch unless
    /// `|factor| = 1` on a normalized state.
    pub fn scaled(&self, factor: Complex64) -> PhotonState {
        let kind = if (factor.norm() - 1.0).abs() < 1e-15 {
            self.kind
        } else {
            StateKind::Branch
        };
        PhotonState::from_amplitudes(self.modes, kind, self.iter().map(|(m, a)| (m, a * factor)))
    }

    /// Largest elementwise |self − other| over the union of occupied modes.
    pub fn max_deviation(&self, other: &PhotonState) -> f64 {
        let lhs = self.amplitudes.iter().map(|(m, a)| (a - other.amplitude(*m)).norm());
        let rhs = other
            .amplitudes
            .iter()
            .filter(|(m, _)| !self.amplitudes.contains_key(m))
            .map(|(_, a)| a.norm());
        lhs.chain(rhs).fold(0.0, f64::max)
    }

    /// Canonical record list.
    pub fn to_records(&self) -> Vec<AmplitudeRecord> {
        self.iter()
            .map(|(m, a)| AmplitudeRecord {
                spatial: m.spatial.0,
                pol: m.pol,
                delay: m.bin.0,
                re: Sig17(a.re),
                im: Sig17(a.im),
            })
            .collect()
    }

    /// Canonical JSON: a list of `{spatial, pol, delay, re, im}` records.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_records()).expect("amplitude records always serialize")
    }
}

/// Serialized amplitude entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub spatial: u8,
    pub pol: Polarization,
    pub delay: u8,
    pub re: Sig17,
    pub im: Sig17,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bm(s: SpatialMode, p: Polarization, d: u8) -> BasisMode {
        BasisMode::new(s, p, TimeBin(d))
    }

    #[test]
    fn basis_state_qubit() {
        let s = new_qubit_state(Qubit::horizontal(), SpatialMode::LINE);
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(bm(SpatialMode::LINE, Polarization::H, 0)), c(1.0, 0.0));
        assert_eq!(s.kind(), StateKind::Normalized);
    }

    #[test]
    fn symmetric_superposition() {
        let q = Qubit::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
        let s = new_qubit_state(q, SpatialMode::LINE);
        assert_eq!(s.len(), 2);
        assert!((s.norm_squared() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_qubit_rejected() {
        let err = Qubit::new(c(1.0, 0.0), c(1.0, 0.0)).unwrap_err();
        assert_eq!(err, Error::Normalization { norm: 2.0 });
    }

    #[test]
    fn norm_of_empty_and_single_branch() {
        let empty = PhotonState::empty(ModeSet::single(SpatialMode::LINE), StateKind::Branch);
        assert_eq!(empty.norm_squared(), 0.0);
        let branch = PhotonState::from_amplitudes(
            ModeSet::single(SpatialMode::LINE),
            StateKind::Branch,
            [(bm(SpatialMode::LINE, Polarization::H, 0), c(0.6, 0.0))],
        );
        assert!((branch.norm_squared() - 0.36).abs() < 1e-15);
    }

    #[test]
    fn fidelity_cases() {
        let q = Qubit::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let s = new_qubit_state(q, SpatialMode::LINE);
        let f = s.fidelity_with_qubit(&q, SpatialMode::LINE, TimeBin::EARLY).unwrap();
        assert!((f - 1.0).abs() < 1e-15);

        let rotated = s.scaled(Complex64::from_polar(1.0, 2.1));
        let f = rotated.fidelity_with_qubit(&q, SpatialMode::LINE, TimeBin::EARLY).unwrap();
        assert!((f - 1.0).abs() < 1e-15);

        let only_v = PhotonState::from_amplitudes(
            ModeSet::single(SpatialMode::LINE),
            StateKind::Branch,
            [(bm(SpatialMode::LINE, Polarization::V, 1), c(0.3, 0.1))],
        );
        let f = only_v
            .fidelity_with_qubit(&Qubit::horizontal(), SpatialMode::LINE, TimeBin::ON_TIME)
            .unwrap();
        assert_eq!(f, 0.0);

        assert!(matches!(
            only_v.fidelity_with_qubit(&q, SpatialMode::LINE, TimeBin::EARLY),
            Err(Error::EmptyBranch { .. })
        ));
    }

    #[test]
    fn projection() {
        let alpha = c(0.6, 0.0);
        let beta = c(0.0, 0.8);
        let s = PhotonState::from_amplitudes(
            ModeSet::single(SpatialMode::LINE),
            StateKind::Normalized,
            [
                (bm(SpatialMode::LINE, Polarization::H, 0), alpha),
                (bm(SpatialMode::LINE, Polarization::H, 1), beta),
            ],
        );
        let (b0, p0) = s.project_time_bin(TimeBin(0));
        assert_eq!(b0.len(), 1);
        assert_eq!(b0.amplitude(bm(SpatialMode::LINE, Polarization::H, 0)), alpha);
        assert_eq!(b0.kind(), StateKind::Branch);
        assert!((p0 - 0.36).abs() < 1e-15);

        let (b5, p5) = s.project_time_bin(TimeBin(5));
        assert!(b5.is_empty());
        assert_eq!(p5, 0.0);
    }

    #[test]
    fn renormalize_cases() {
        let line = ModeSet::single(SpatialMode::LINE);
        let m0 = bm(SpatialMode::LINE, Polarization::H, 0);
        let m1 = bm(SpatialMode::LINE, Polarization::V, 0);

        let half = PhotonState::from_amplitudes(line, StateKind::Branch, [(m0, c(0.5, 0.0))]);
        let r = half.renormalize().unwrap();
        assert!((r.amplitude(m0) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(r.kind(), StateKind::Normalized);

        let phased = PhotonState::from_amplitudes(line, StateKind::Branch, [(m0, Complex64::from_polar(0.5, 0.9))]);
        let r = phased.renormalize().unwrap();
        assert!((r.amplitude(m0) - Complex64::from_polar(1.0, 0.9)).norm() < 1e-15);

        let pair = PhotonState::from_amplitudes(line, StateKind::Branch, [(m0, c(0.3, 0.0)), (m1, c(0.3, 0.0))]);
        let r = pair.renormalize().unwrap();
        assert!((r.amplitude(m0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r.amplitude(m1).re - FRAC_1_SQRT_2).abs() < 1e-15);

        let rr = r.renormalize().unwrap();
        assert!(rr.max_deviation(&r) < 1e-15);

        let empty = PhotonState::empty(line, StateKind::Branch);
        assert!(matches!(empty.renormalize(), Err(Error::EmptyBranch { .. })));
    }

    #[test]
    fn pruning_drops_tiny_amplitudes() {
        let s = PhotonState::from_amplitudes(
            ModeSet::single(SpatialMode::LINE),
            StateKind::Branch,
            [
                (bm(SpatialMode::LINE, Polarization::H, 0), c(1e-16, 0.0)),
                (bm(SpatialMode::LINE, Polarization::V, 0), c(0.5, 0.0)),
                (bm(SpatialMode::LINE, Polarization::V, 0), c(-0.5, 0.0)),
            ],
        );
        assert!(s.is_empty());
    }

    #[test]
    fn canonical_order_and_json() {
        let s = PhotonState::from_amplitudes(
            ModeSet::protocol(),
            StateKind::Normalized,
            [
                (bm(SpatialMode::OUT1, Polarization::H, 1), c(0.6, 0.0)),
                (bm(SpatialMode::LINE, Polarization::V, 2), c(0.0, 0.48)),
                (bm(SpatialMode::LINE, Polarization::H, 2), c(0.0, 0.64)),
            ],
        );
        let order: Vec<BasisMode> = s.iter().map(|(m, _)| m).collect();
        assert_eq!(
            order,
            vec![
                bm(SpatialMode::LINE, Polarization::H, 2),
                bm(SpatialMode::LINE, Polarization::V, 2),
                bm(SpatialMode::OUT1, Polarization::H, 1),
            ]
        );
        assert_eq!(
            s.to_json(),
            r#"[{"spatial":0,"pol":"H","delay":2,"re":0.0000000000000000e0,"im":6.4000000000000001e-1},{"spatial":0,"pol":"V","delay":2,"re":0.0000000000000000e0,"im":4.7999999999999998e-1},{"spatial":3,"pol":"H","delay":1,"re":5.9999999999999998e-1,"im":0.0000000000000000e0}]"#
        );
    }

    #[test]
    fn mode_set_membership() {
        let set = ModeSet::protocol();
        assert_eq!(set.len(), 5);
        assert!(set.contains(SpatialMode::OUT2));
        assert!(!set.contains(SpatialMode(9)));
        assert_eq!(set.check(SpatialMode(9)), Err(Error::UnknownMode(SpatialMode(9))));
        assert_eq!(set.iter().map(|m| m.0).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }
}
