//! Photon-number statistics of the quantum light sources.
//!
//! Every source is reduced to a three-bucket photon-number distribution
//! (vacuum, single photon, multi photon) plus its mean photon number. The
//! multi-photon bucket is treated as a two-photon state wherever a photon
//! count is needed; this is the minimal completion consistent with a source
//! specified only by p(0), p(1), p(n>1) and it is conservative for
//! detection. Weak-coherent closed forms bypass the buckets where exact
//! Poisson expressions exist.

use crate::error::{Error, Result};

/// Three-bucket photon-number distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonNumberDistribution {
    /// Vacuum probability p(0).
    pub p0: f64,
    /// Single-photon probability p(1).
    pub p1: f64,
    /// Multi-photon probability p(n > 1).
    pub p_multi: f64,
    /// Mean photon number.
    pub mean_n: f64,
}

impl PhotonNumberDistribution {
    pub fn validate(&self) -> Result<()> {
        let sum = self.p0 + self.p1 + self.p_multi;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::parameter(
                "PhotonNumberDistribution",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        for (name, p) in [("p0", self.p0), ("p1", self.p1), ("p_multi", self.p_multi)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parameter(
                    "PhotonNumberDistribution",
                    format!("{name} = {p} outside [0, 1]"),
                ));
            }
        }
        if self.mean_n < self.p1 {
            return Err(Error::parameter(
                "PhotonNumberDistribution",
                format!("mean photon number {} below p1 {}", self.mean_n, self.p1),
            ));
        }
        Ok(())
    }

    /// Source attenuated by a transmission `eta_att` in (0, 1] before the
    /// channel. Single-photon emissions survive linearly, the (two-photon)
    /// multi bucket quadratically.
    pub fn attenuated(&self, eta_att: f64) -> PhotonNumberDistribution {
        assert!(
            eta_att > 0.0 && eta_att <= 1.0,
            "attenuation must lie in (0, 1], got {eta_att}"
        );
        let p_multi = eta_att * eta_att * self.p_multi;
        let p1 = eta_att * self.p1;
        PhotonNumberDistribution {
            p0: 1.0 - p1 - p_multi,
            p1,
            p_multi,
            mean_n: eta_att * self.mean_n,
        }
    }
}

/// The light sources considered by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceModel {
    /// Single-photon source with p(1) = 1.
    IdealSps,
    /// Sub-Poissonian emitter given by mean photon number and g2(0).
    RealisticSps { mean_n: f64, g2: f64 },
    /// Weak coherent (Poissonian) source of intensity `mu`.
    Wcs { mu: f64 },
    /// Two-decoy source: signal `mu`, weak decoy `nu1`, vacuum decoy, with
    /// the probabilities of choosing each intensity.
    Tds { mu: f64, nu1: f64, p_mu: f64, p_nu1: f64 },
}

impl SourceModel {
    /// The published operating point of the cavity-coupled hBN emitter.
    pub fn realistic_sps_default() -> Self {
        SourceModel::RealisticSps { mean_n: 0.5147, g2: 6.4e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceModel::IdealSps => Ok(()),
            SourceModel::RealisticSps { mean_n, g2 } => {
                sps_distribution(mean_n, g2).map(|_| ())
            }
            SourceModel::Wcs { mu } => {
                if mu < 0.0 {
                    Err(Error::parameter("SourceModel", "WCS intensity must be >= 0"))
                } else {
                    Ok(())
                }
            }
            SourceModel::Tds { mu, nu1, p_mu, p_nu1 } => {
                if !(mu > nu1 && nu1 > 0.0) {
                    return Err(Error::parameter(
                        "SourceModel",
                        format!("need mu > nu1 > 0, got mu={mu}, nu1={nu1}"),
                    ));
                }
                let p_nu2 = 1.0 - p_mu - p_nu1;
                if p_mu <= 0.0 || p_nu1 <= 0.0 || p_nu2 < -1e-12 {
                    return Err(Error::parameter(
                        "SourceModel",
                        "intensity probabilities must be positive and sum to at most 1",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Signal-state photon statistics of this source.
    pub fn distribution(&self) -> Result<PhotonNumberDistribution> {
        match *self {
            SourceModel::IdealSps => Ok(PhotonNumberDistribution {
                p0: 0.0,
                p1: 1.0,
                p_multi: 0.0,
                mean_n: 1.0,
            }),
            SourceModel::RealisticSps { mean_n, g2 } => sps_distribution(mean_n, g2),
            SourceModel::Wcs { mu } | SourceModel::Tds { mu, .. } => {
                Ok(poisson_distribution(mu))
            }
        }
    }
}

/// Poissonian photon statistics folded into the three buckets; the tail
/// n >= 2 is accumulated analytically as p_multi = 1 - (1 + mu) e^-mu.
pub fn poisson_distribution(mu: f64) -> PhotonNumberDistribution {
    assert!(mu >= 0.0, "intensity must be non-negative");
    let e = (-mu).exp();
    PhotonNumberDistribution {
        p0: e,
        p1: mu * e,
        p_multi: (1.0 - (1.0 + mu) * e).max(0.0),
        mean_n: mu,
    }
}

/// Photon statistics of a realistic single-photon source.
///
/// The multi-photon probability uses the worst-case bound
/// p(n>1) = mean_n^2 g2 / 2, taken at equality; the multi bucket counts as
/// two photons in the mean, so p(1) = mean_n - 2 p(n>1).
pub fn sps_distribution(mean_n: f64, g2: f64) -> Result<PhotonNumberDistribution> {
    if !(0.0..=1.0).contains(&mean_n) {
        return Err(Error::parameter(
            "sps_distribution",
            format!("mean photon number {mean_n} outside [0, 1]"),
        ));
    }
    if g2 < 0.0 {
        return Err(Error::parameter("sps_distribution", "g2 must be non-negative"));
    }
    let p_multi = 0.5 * mean_n * mean_n * g2;
    let p1 = mean_n - 2.0 * p_multi;
    if p1 < 0.0 {
        return Err(Error::parameter(
            "sps_distribution",
            format!("g2 = {g2} too large for mean photon number {mean_n}: p(1) < 0"),
        ));
    }
    Ok(PhotonNumberDistribution { p0: 1.0 - p1 - p_multi, p1, p_multi, mean_n })
}
