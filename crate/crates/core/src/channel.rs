//! Noisy-channel polarization unitary and channel-parameter samplers.
//!
//! The channel acts as
//!
//! ```text
//! |H> -> e^{iφ} cosθ |H> + e^{iχ} sinθ |V>
//! |V> -> -e^{-iχ} sinθ |H> + e^{-iφ} cosθ |V>
//! ```
//!
//! with the same (θ, φ, χ) on every time-bin of the line, since birefringence
//! is effectively static across the bin spacing.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::serialize_f64;
use crate::rng;
use crate::state::{BasisMode, PhotonState, Polarization, SpatialMode};

/// Channel angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    #[serde(serialize_with = "serialize_f64")]
    pub theta: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub phi: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub chi: f64,
}

impl ChannelParams {
    pub const IDENTITY: ChannelParams = ChannelParams {
        theta: 0.0,
        phi: 0.0,
        chi: 0.0,
    };

    pub fn new(theta: f64, phi: f64, chi: f64) -> Result<Self> {
        for (name, v) in [("theta", theta), ("phi", phi), ("chi", chi)] {
            if !v.is_finite() {
                return Err(Error::config(name, format!("must be finite, got {v}")));
            }
        }
        Ok(ChannelParams { theta, phi, chi })
    }

    /// All three angles reduced to `[0, 2π)`.
    pub fn wrapped(&self) -> ChannelParams {
        let wrap = |x: f64| {
            let r = x.rem_euclid(TAU);
            if r >= TAU {
                0.0
            } else {
                r
            }
        };
        ChannelParams {
            theta: wrap(self.theta),
            phi: wrap(self.phi),
            chi: wrap(self.chi),
        }
    }

    /// Parameters of U†: (−θ, −φ, χ).
    pub fn inverse(&self) -> ChannelParams {
        ChannelParams {
            theta: -self.theta,
            phi: -self.phi,
            chi: self.chi,
        }
    }
}

/// Columns are the images of |H⟩ and |V⟩.
pub fn channel_matrix(p: &ChannelParams) -> Matrix2<Complex64> {
    let (sin, cos) = p.theta.sin_cos();
    let e_phi = Complex64::cis(p.phi);
    let e_chi = Complex64::cis(p.chi);
    Matrix2::new(
        e_phi * cos,
        -e_chi.conj() * sin,
        e_chi * sin,
        e_phi.conj() * cos,
    )
}

/// Applies the channel unitary to the (H, V) pair of every time-bin on `mode`.
pub fn apply_channel(s: &PhotonState, p: &ChannelParams, mode: SpatialMode) -> Result<PhotonState> {
    s.modes().check(mode)?;
    let m = channel_matrix(p);
    Ok(s.remap(|b, a| {
        if b.spatial != mode {
            return vec![(b, a)];
        }
        let (col_h, col_v) = match b.pol {
            Polarization::H => (m[(0, 0)], m[(1, 0)]),
            Polarization::V => (m[(0, 1)], m[(1, 1)]),
        };
        vec![
            (BasisMode { pol: Polarization::H, ..b }, col_h * a),
            (BasisMode { pol: Polarization::V, ..b }, col_v * a),
        ]
    }))
}

/// Distribution of channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelDistribution {
    Fixed {
        #[serde(serialize_with = "serialize_f64")]
        theta: f64,
        #[serde(serialize_with = "serialize_f64")]
        phi: f64,
        #[serde(serialize_with = "serialize_f64")]
        chi: f64,
    },
    /// θ, φ, χ independent and uniform on `[0, 2π)`.
    UniformTheta,
    /// θ uniform on `[0, theta_max]`, φ and χ uniform on `[0, 2π)`.
    SmallTheta {
        #[serde(serialize_with = "serialize_f64")]
        theta_max: f64,
    },
}

/// Seeded channel-parameter source.
///
/// Draw `i` uses random stream `i` of the channel domain (see [`crate::rng`])
/// and consumes θ, then φ, then χ. [`ChannelSampler::draw`] is a pure
/// function of `(seed, i)`; [`ChannelSampler::sample`] walks `i = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSampler {
    distribution: ChannelDistribution,
    seed: u64,
    next: u64,
}

impl ChannelSampler {
    pub fn new(distribution: ChannelDistribution, seed: u64) -> Result<Self> {
        match distribution {
            ChannelDistribution::Fixed { theta, phi, chi } => {
                ChannelParams::new(theta, phi, chi)?;
            }
            ChannelDistribution::SmallTheta { theta_max } => {
                if !(theta_max > 0.0 && theta_max <= FRAC_PI_2) {
                    return Err(Error::config(
                        "channel.theta_max",
                        format!("must satisfy 0 < theta_max <= pi/2, got {theta_max}"),
                    ));
                }
            }
            ChannelDistribution::UniformTheta => {}
        }
        Ok(ChannelSampler {
            distribution,
            seed,
            next: 0,
        })
    }

    pub fn fixed(p: ChannelParams) -> Self {
        ChannelSampler {
            distribution: ChannelDistribution::Fixed {
                theta: p.theta,
                phi: p.phi,
                chi: p.chi,
            },
            seed: 0,
            next: 0,
        }
    }

    pub fn distribution(&self) -> ChannelDistribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draw(&self, index: u64) -> ChannelParams {
        match self.distribution {
            ChannelDistribution::Fixed { theta, phi, chi } => ChannelParams { theta, phi, chi },
            ChannelDistribution::UniformTheta => {
                let mut r = rng::stream(self.seed, rng::DOMAIN_CHANNEL, index);
                let theta = r.random_range(0.0..TAU);
                let phi = r.random_range(0.0..TAU);
                let chi = r.random_range(0.0..TAU);
                ChannelParams { theta, phi, chi }
            }
            ChannelDistribution::SmallTheta { theta_max } => {
                let mut r = rng::stream(self.seed, rng::DOMAIN_CHANNEL, index);
                let theta = r.random_range(0.0..=theta_max);
                let phi = r.random_range(0.0..TAU);
                let chi = r.random_range(0.0..TAU);
                ChannelParams { theta, phi, chi }
            }
        }
    }

    pub fn sample(&mut self) -> ChannelParams {
        let p = self.draw(self.next);
        self.next += 1;
        p
    }
}
