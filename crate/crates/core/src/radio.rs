//! UAV antenna, line-of-sight channel, noise and link rates.
//!
//! All quantities are SI: meters, radians, Hz, Watts and linear gains.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Result};
use crate::geometry::Point2D;

/// Speed of light used for the reference gain, in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Main-lobe gain constant shared by all beamwidths, `30000/2^2 (pi/180)^2`.
pub fn main_lobe_constant() -> f64 {
    30000.0 / 4.0 * (PI / 180.0).powi(2)
}

/// `(4 pi f_c / c)^-2`, the LoS power gain at one meter.
pub fn reference_gain(carrier_fc: f64) -> f64 {
    let k = SPEED_OF_LIGHT / (4.0 * PI * carrier_fc);
    k * k
}

/// Noise power in Watts for a density given in dBm/Hz over `bandwidth_w`.
pub fn noise_power(n0_dbm_per_hz: f64, bandwidth_w: f64) -> f64 {
    dbm_to_watt(n0_dbm_per_hz) * bandwidth_w
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

/// Beamwidths closer than this to 0 or pi/2 are rejected.
pub const BEAMWIDTH_GUARD: f64 = 1e-9;

/// Link-level parameters of a UAV; derived constants are cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    altitude_h: f64,
    beamwidth_phi_u: f64,
    tx_power_p: f64,
    carrier_fc: f64,
    bandwidth_w: f64,
    noise_density_n0: f64,
    kappa0: f64,
    g0: f64,
    sigma2: f64,
    r_c: f64,
}

impl RadioConfig {
    /// `beamwidth_phi_u` is half the half-power beamwidth.
    /// `noise_density_n0` is in W/Hz.
    pub fn new(
        altitude_h: f64,
        beamwidth_phi_u: f64,
        tx_power_p: f64,
        carrier_fc: f64,
        bandwidth_w: f64,
        noise_density_n0: f64,
    ) -> Result<Self> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                domain(format!("{name} must be positive and finite, got {v}"))
            }
        };
        positive("altitude H", altitude_h)?;
        positive("transmit power P", tx_power_p)?;
        positive("carrier frequency", carrier_fc)?;
        positive("bandwidth W", bandwidth_w)?;
        positive("noise density N0", noise_density_n0)?;
        if !(BEAMWIDTH_GUARD..=FRAC_PI_2 - BEAMWIDTH_GUARD).contains(&beamwidth_phi_u) {
            return domain(format!(
                "beamwidth must lie in (0, pi/2), got {beamwidth_phi_u}"
            ));
        }
        Ok(Self {
            altitude_h,
            beamwidth_phi_u,
            tx_power_p,
            carrier_fc,
            bandwidth_w,
            noise_density_n0,
            kappa0: reference_gain(carrier_fc),
            g0: main_lobe_constant(),
            sigma2: noise_density_n0 * bandwidth_w,
            r_c: altitude_h * beamwidth_phi_u.tan(),
        })
    }

    /// Parameters used throughout the throughput study: 0.5 W at 2 GHz over
    /// 50 kHz with -174 dBm/Hz noise.
    pub fn reference(altitude_h: f64, beamwidth_phi_u: f64) -> Result<Self> {
        Self::new(
            altitude_h,
            beamwidth_phi_u,
            0.5,
            2e9,
            50e3,
            dbm_to_watt(-174.0),
        )
    }

    pub fn with_altitude(&self, altitude_h: f64) -> Result<Self> {
        Self::new(
            altitude_h,
            self.beamwidth_phi_u,
            self.tx_power_p,
            self.carrier_fc,
            self.bandwidth_w,
            self.noise_density_n0,
        )
    }

    pub fn with_beamwidth(&self, beamwidth_phi_u: f64) -> Result<Self> {
        Self::new(
            self.altitude_h,
            beamwidth_phi_u,
            self.tx_power_p,
            self.carrier_fc,
            self.bandwidth_w,
            self.noise_density_n0,
        )
    }

    pub fn altitude(&self) -> f64 {
        self.altitude_h
    }
    pub fn beamwidth(&self) -> f64 {
        self.beamwidth_phi_u
    }
    pub fn tx_power(&self) -> f64 {
        self.tx_power_p
    }
    pub fn carrier(&self) -> f64 {
        self.carrier_fc
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth_w
    }
    pub fn noise_density(&self) -> f64 {
        self.noise_density_n0
    }
    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }
    pub fn g0(&self) -> f64 {
        self.g0
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    /// Ground coverage radius `H tan(phi_u)`.
    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    pub fn pattern(&self) -> AntennaPattern {
        AntennaPattern {
            main_lobe_gain: self.g0 / (self.beamwidth_phi_u * self.beamwidth_phi_u),
            side_lobe_gain: 0.0,
        }
    }

    /// `kappa0 G0 P / (sigma^2 phi_u^2)`, the SNR numerator over squared
    /// link distance.
    fn snr_scale(&self) -> f64 {
        self.kappa0 * self.g0 * self.tx_power_p
            / (self.sigma2 * self.beamwidth_phi_u * self.beamwidth_phi_u)
    }
}

/// Step antenna pattern of the downward-pointing UAV antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    pub main_lobe_gain: f64,
    pub side_lobe_gain: f64,
}

/// Gain toward a ground point `w` given relative to the UAV projection.
pub fn antenna_gain(w: Point2D, cfg: &RadioConfig) -> f64 {
    if w.norm_sq() <= cfg.r_c * cfg.r_c {
        cfg.pattern().main_lobe_gain
    } else {
        0.0
    }
}

/// Free-space power gain to a ground point `w`.
pub fn channel_gain(w: Point2D, cfg: &RadioConfig) -> f64 {
    cfg.kappa0 / (w.norm_sq() + cfg.altitude_h * cfg.altitude_h)
}

/// Rate in bps/Hz towards a BS at `w` inside the main lobe.
pub fn rate_at(w: Point2D, cfg: &RadioConfig) -> Result<f64> {
    let d2 = w.norm_sq();
    // relative slack so that a point placed on the edge by trigonometry counts
    if d2 > cfg.r_c * cfg.r_c * (1.0 + 1e-12) {
        return domain(format!(
            "BS at distance {} is outside the main lobe (r_c = {})",
            d2.sqrt(),
            cfg.r_c
        ));
    }
    let snr = cfg.snr_scale() / (d2 + cfg.altitude_h * cfg.altitude_h);
    Ok(snr.ln_1p() / std::f64::consts::LN_2)
}

/// Rate in bps/Hz towards a BS on the coverage edge; a lower bound on
/// [`rate_at`] for every BS inside the main lobe.
pub fn edge_rate(cfg: &RadioConfig) -> f64 {
    let c = cfg.beamwidth_phi_u.cos();
    let snr = cfg.snr_scale() * c * c / (cfg.altitude_h * cfg.altitude_h);
    snr.ln_1p() / std::f64::consts::LN_2
}
