//! Dense-matrix oracle.
//!
//! Each protocol is rebuilt here as an explicit product of per-element
//! matrices over the full truncated basis, with its own wiring list and its
//! own index arithmetic. Nothing in this module calls the sparse element
//! functions; the two routes meet only in [`oracle_compare`].
//!
//! Basis index of `(spatial position s, delay d, polarization p)` is
//! `(s * delays + d) * 2 + p` with `p = 0` for H, which is the canonical
//! `BasisMode` order. The unbalanced interferometer wraps delay
//! `delays - 1` back to 0 so that every element stays a permutation on the
//! truncated space; no protocol reaches that wrap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::elements::{ActivationWindow, BalancedPorts, ElementSpec};
use crate::protocols::{run_correction, run_rejection, Protocol};
use crate::state::{PhotonState, Polarization, Qubit, SpatialMode, TimeBin};

/// Deliberate circuit corruptions for exercising the verification gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Half-wave plates pick up a −1 on the V→H entry.
    HwpSign,
    /// The channel's sinθ terms lose their e^{iχ} phases.
    ChannelDropChi,
}

const H: usize = 0;
const V: usize = 1;

/// Truncated product basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseBasis {
    spatial: Vec<u8>,
    delays: usize,
}

impl DenseBasis {
    pub fn new(mut spatial: Vec<u8>, delays: usize) -> Self {
        spatial.sort_unstable();
        spatial.dedup();
        DenseBasis { spatial, delays }
    }

    pub fn dim(&self) -> usize {
        self.spatial.len() * self.delays * 2
    }

    fn position(&self, mode: SpatialMode) -> usize {
        self.spatial
            .iter()
            .position(|&m| m == mode.0)
            .unwrap_or_else(|| panic!("spatial mode {} not in dense basis", mode.0))
    }

    fn index(&self, pos: usize, delay: usize, pol: usize) -> usize {
        (pos * self.delays + delay) * 2 + pol
    }

    /// Inverse of `index`: (spatial position, delay, polarization).
    fn split(&self, idx: usize) -> (usize, usize, usize) {
        (idx / (2 * self.delays), (idx / 2) % self.delays, idx % 2)
    }

    /// `(spatial id, delay, polarization)` of every basis index.
    pub fn labels(&self) -> Vec<(u8, u8, Polarization)> {
        (0..self.dim())
            .map(|i| {
                let (s, d, p) = self.split(i);
                let pol = if p == H { Polarization::H } else { Polarization::V };
                (self.spatial[s], d as u8, pol)
            })
            .collect()
    }

    /// Places a polarization qubit at delay 0 on `home`.
    pub fn qubit_vector(&self, q: &Qubit, home: SpatialMode) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim());
        let s = self.position(home);
        v[self.index(s, 0, H)] = q.alpha();
        v[self.index(s, 0, V)] = q.beta();
        v
    }

    /// Amplitudes of a sparse state laid out on this basis, plus the weight
    /// (norm²) of any amplitude that falls outside it.
    pub fn embed(&self, state: &PhotonState) -> (DVector<Complex64>, f64) {
        let mut v = DVector::zeros(self.dim());
        let mut outside = 0.0;
        for (mode, amp) in state.iter() {
            let pos = self.spatial.iter().position(|&m| m == mode.spatial.0);
            let delay = mode.bin.0 as usize;
            match pos {
                Some(s) if delay < self.delays => {
                    let p = if mode.pol == Polarization::H { H } else { V };
                    v[self.index(s, delay, p)] = amp;
                }
                _ => outside += amp.norm_sqr(),
            }
        }
        (v, outside)
    }

    fn permutation(&self, map: impl Fn(usize, usize, usize) -> (usize, usize, usize)) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for col in 0..n {
            let (s, d, p) = self.split(col);
            let (s2, d2, p2) = map(s, d, p);
            m[(self.index(s2, d2, p2), col)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn pockels(&self, mode: SpatialMode, window: ActivationWindow) -> DMatrix<Complex64> {
        let target = self.position(mode);
        self.permutation(|s, d, p| {
            if s == target && window.contains(TimeBin(d as u8)) {
                (s, d, 1 - p)
            } else {
                (s, d, p)
            }
        })
    }

    fn delay_line(&self, mode: SpatialMode) -> DMatrix<Complex64> {
        let target = self.position(mode);
        let delays = self.delays;
        self.permutation(|s, d, p| {
            if s == target && p == V {
                (s, (d + 1) % delays, p)
            } else {
                (s, d, p)
            }
        })
    }

    fn pbs(&self, a: SpatialMode, b: SpatialMode) -> DMatrix<Complex64> {
        let (a, b) = (self.position(a), self.position(b));
        self.permutation(|s, d, p| match p {
            V if s == a => (b, d, p),
            V if s == b => (a, d, p),
            _ => (s, d, p),
        })
    }

    fn balanced(&self, ports: &BalancedPorts, window_h: ActivationWindow, window_v: ActivationWindow) -> DMatrix<Complex64> {
        let input = self.position(ports.input);
        let arm_h = self.position(ports.arm_h);
        let arm_v = self.position(ports.arm_v);
        let out1 = self.position(ports.out1);
        let out2 = self.position(ports.out2);
        // H: input <-> arm_h, V: input <-> arm_v
        let split = self.permutation(|s, d, p| match (s, p) {
            (s, H) if s == input => (arm_h, d, p),
            (s, H) if s == arm_h => (input, d, p),
            (s, V) if s == input => (arm_v, d, p),
            (s, V) if s == arm_v => (input, d, p),
            _ => (s, d, p),
        });
        // unflipped -> out1, flipped -> out2
        let merge = self.permutation(|s, d, p| match (s, p) {
            (s, H) if s == arm_h => (out1, d, p),
            (s, H) if s == out1 => (arm_h, d, p),
            (s, V) if s == arm_h => (out2, d, p),
            (s, V) if s == out2 => (arm_h, d, p),
            (s, V) if s == arm_v => (out1, d, p),
            (s, V) if s == out1 => (arm_v, d, p),
            (s, H) if s == arm_v => (out2, d, p),
            (s, H) if s == out2 => (arm_v, d, p),
            _ => (s, d, p),
        });
        merge * self.pockels(ports.arm_v, window_v) * self.pockels(ports.arm_h, window_h) * split
    }

    fn channel(&self, mode: SpatialMode, p: &ChannelParams, fault: Option<Fault>) -> DMatrix<Complex64> {
        let s = self.position(mode);
        let (cos, sin) = (p.theta.cos(), p.theta.sin());
        let e_phi = Complex64::new(p.phi.cos(), p.phi.sin());
        let e_chi = if fault == Some(Fault::ChannelDropChi) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(p.chi.cos(), p.chi.sin())
        };
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for d in 0..self.delays {
            let (h, v) = (self.index(s, d, H), self.index(s, d, V));
            m[(h, h)] = e_phi * cos;
            m[(v, h)] = e_chi * sin;
            m[(h, v)] = -e_chi.conj() * sin;
            m[(v, v)] = e_phi.conj() * cos;
        }
        m
    }

    fn time_gate(&self, window: ActivationWindow) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (_, d, _) = self.split(i);
            if window.contains(TimeBin(d as u8)) {
                m[(i, i)] = Complex64::new(1.0, 0.0);
            }
        }
        m
    }

    /// Dense matrix of one element.
    pub fn element_matrix(&self, element: &ElementSpec, fault: Option<Fault>) -> DMatrix<Complex64> {
        match *element {
            ElementSpec::Pbs { a, b } => self.pbs(a, b),
            ElementSpec::UnbalancedInterferometer { mode } => self.delay_line(mode),
            ElementSpec::BalancedInterferometer {
                ports,
                window_h,
                window_v,
            } => self.balanced(&ports, window_h, window_v),
            ElementSpec::Hwp { mode } => {
                let mut m = self.pockels(mode, ActivationWindow::always());
                if fault == Some(Fault::HwpSign) {
                    let s = self.position(mode);
                    for d in 0..self.delays {
                        m[(self.index(s, d, H), self.index(s, d, V))] *= -1.0;
                    }
                }
                m
            }
            ElementSpec::PockelsCell { mode, active_bins } => self.pockels(mode, active_bins),
            ElementSpec::Channel { mode, params } => self.channel(mode, &params, fault),
            ElementSpec::TimeGate { active_bins } => self.time_gate(active_bins),
        }
    }
}

/// Ordered element list with its full product matrix.
#[derive(Debug, Clone)]
pub struct DenseCircuit {
    pub basis: DenseBasis,
    pub elements: Vec<ElementSpec>,
    pub matrix: DMatrix<Complex64>,
}

impl DenseCircuit {
    pub fn from_elements(basis: DenseBasis, elements: Vec<ElementSpec>, fault: Option<Fault>) -> Self {
        let n = basis.dim();
        let matrix = elements
            .iter()
            .fold(DMatrix::identity(n, n), |acc, e| basis.element_matrix(e, fault) * acc);
        DenseCircuit {
            basis,
            elements,
            matrix,
        }
    }

    /// max |(M·M†)_ij − δ_ij|.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.basis.dim();
        let product = &self.matrix * self.matrix.adjoint();
        (product - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, input: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * input
    }
}

/// Wiring of a full protocol run (encoder, channel, decoder) without
/// detection.
pub fn protocol_elements(protocol: Protocol, p: &ChannelParams) -> Vec<ElementSpec> {
    let line = SpatialMode::LINE;
    let mut elements = vec![
        ElementSpec::UnbalancedInterferometer { mode: line },
        ElementSpec::PockelsCell {
            mode: line,
            active_bins: ActivationWindow::bins([1]),
        },
        ElementSpec::Channel { mode: line, params: *p },
        ElementSpec::PockelsCell {
            mode: line,
            active_bins: ActivationWindow::bins([0]),
        },
    ];
    match protocol {
        Protocol::Reject => elements.extend([
            ElementSpec::UnbalancedInterferometer { mode: line },
            ElementSpec::Hwp { mode: line },
        ]),
        Protocol::Correct => {
            elements.push(ElementSpec::BalancedInterferometer {
                ports: BalancedPorts {
                    input: line,
                    arm_h: SpatialMode::ARM_H,
                    arm_v: SpatialMode::ARM_V,
                    out1: SpatialMode::OUT1,
                    out2: SpatialMode::OUT2,
                },
                window_h: ActivationWindow::bins([0]),
                window_v: ActivationWindow::bins([1]),
            });
            for port in [SpatialMode::OUT1, SpatialMode::OUT2] {
                elements.push(ElementSpec::UnbalancedInterferometer { mode: port });
                elements.push(ElementSpec::Hwp { mode: port });
            }
        }
    }
    elements
}

pub fn protocol_basis(protocol: Protocol) -> DenseBasis {
    match protocol {
        Protocol::Reject => DenseBasis::new(vec![0], 3),
        Protocol::Correct => DenseBasis::new(vec![0, 1, 2, 3, 4], 3),
    }
}

pub fn build_dense_circuit(protocol: Protocol, p: &ChannelParams) -> DenseCircuit {
    build_dense_circuit_with_fault(protocol, p, None)
}

pub fn build_dense_circuit_with_fault(protocol: Protocol, p: &ChannelParams, fault: Option<Fault>) -> DenseCircuit {
    DenseCircuit::from_elements(protocol_basis(protocol), protocol_elements(protocol, p), fault)
}

/// Max elementwise |sparse − dense| over the full basis.
pub fn oracle_compare(protocol: Protocol, q: &Qubit, p: &ChannelParams) -> f64 {
    oracle_compare_with_fault(protocol, q, p, None)
}

pub fn oracle_compare_with_fault(protocol: Protocol, q: &Qubit, p: &ChannelParams, fault: Option<Fault>) -> f64 {
    let circuit = build_dense_circuit_with_fault(protocol, p, fault);
    let dense = circuit.apply(&circuit.basis.qubit_vector(q, SpatialMode::LINE));
    let sparse = match protocol {
        Protocol::Reject => run_rejection(q, p).output,
        Protocol::Correct => run_correction(q, p).output,
    };
    let (embedded, outside) = circuit.basis.embed(&sparse);
    (embedded - dense)
        .iter()
        .map(|z| z.norm())
        .fold(outside.sqrt(), f64::max)
}
