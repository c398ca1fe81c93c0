//! Decoherence rate of a levitated dielectric sphere from residual gas
//! collisions (short-wavelength limit) and blackbody photons (long-wavelength
//! limit).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HBAR;

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const PLANCK: f64 = 2.0 * std::f64::consts::PI * HBAR;
pub const ZETA_9: f64 = 1.002_008_392_826_082;

/// 8! = 40320.
const FACTORIAL_8: f64 = 40_320.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    /// Environment temperature (K).
    pub t_env: f64,
    /// Internal temperature of the sphere (K).
    pub t_internal: f64,
    /// Gas number density (m^-3).
    pub number_density: f64,
    /// Sphere radius (m).
    pub radius: f64,
    /// Mass of one gas particle (kg).
    pub gas_mass: f64,
    /// Relative dielectric constant of the sphere.
    pub permittivity: Complex64,
    /// Superposition width (m).
    pub delta_x: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            t_env: 0.15,
            t_internal: 0.15,
            number_density: 1e8,
            radius: 1e-6,
            gas_mass: 28.97 * ATOMIC_MASS_UNIT,
            permittivity: Complex64::new(5.68, 1.1e-4),
            delta_x: 250e-6,
        }
    }
}

impl EnvironmentParams {
    pub fn at_temperature(t_env: f64) -> Self {
        Self {
            t_env,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("T_e", self.t_env),
            ("T_i", self.t_internal),
            ("number density", self.number_density),
            ("sphere radius", self.radius),
            ("gas mass", self.gas_mass),
            ("delta_x", self.delta_x),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let eps = self.permittivity;
        if !(eps.re.is_finite() && eps.im.is_finite() && eps.im >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dielectric constant must be finite with Im >= 0, got {eps}"
            )));
        }
        Ok(())
    }

    /// Clausius-Mossotti factor `(eps - 1) / (eps + 2)`.
    pub fn polarizability_factor(&self) -> Complex64 {
        (self.permittivity - 1.0) / (self.permittivity + 2.0)
    }
}

/// Scattering constant of gas collisions (s^-1 m^-2).
pub fn lambda_air(env: &EnvironmentParams) -> f64 {
    let kt = BOLTZMANN * env.t_env;
    8.0 / (3.0 * HBAR * HBAR)
        * env.number_density
        * env.radius.powi(2)
        * (2.0 * std::f64::consts::PI * env.gas_mass).sqrt()
        * kt.powf(1.5)
}

/// Thermal de Broglie wavelength `h / sqrt(2 pi m k T)` of the gas (m).
pub fn thermal_wavelength(env: &EnvironmentParams) -> f64 {
    PLANCK / (2.0 * std::f64::consts::PI * env.gas_mass * BOLTZMANN * env.t_env).sqrt()
}

/// Dominant thermal photon wavelength `2 pi hbar c / (k T)` (m).
pub fn photon_wavelength(t: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / (BOLTZMANN * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackbodyConstants {
    pub scattering: f64,
    pub emission: f64,
    pub absorption: f64,
}

impl BlackbodyConstants {
    pub fn total(&self) -> f64 {
        self.scattering + self.emission + self.absorption
    }
}

fn thermal_wavenumber(t: f64) -> f64 {
    BOLTZMANN * t / (HBAR * SPEED_OF_LIGHT)
}

fn emission_absorption(env: &EnvironmentParams, t: f64) -> f64 {
    16.0 * std::f64::consts::PI.powi(5) / 189.0
        * env.radius.powi(3)
        * SPEED_OF_LIGHT
        * env.polarizability_factor().im
        * thermal_wavenumber(t).powi(6)
}

/// Photon scattering, emission (at the internal temperature) and absorption
/// (at the environment temperature) constants (s^-1 m^-2).
pub fn lambda_blackbody(env: &EnvironmentParams) -> BlackbodyConstants {
    let scattering = FACTORIAL_8 * 8.0 / (9.0 * std::f64::consts::PI)
        * env.radius.powi(6)
        * SPEED_OF_LIGHT
        * env.polarizability_factor().re.powi(2)
        * thermal_wavenumber(env.t_env).powi(9)
        * ZETA_9;
    BlackbodyConstants {
        scattering,
        emission: emission_absorption(env, env.t_internal),
        absorption: emission_absorption(env, env.t_env),
    }
}

/// `lambda_air^2 * Lambda_air` (Hz).
pub fn gamma_air(env: &EnvironmentParams) -> f64 {
    thermal_wavelength(env).powi(2) * lambda_air(env)
}

/// A regime approximation that no longer holds for the given parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValidityWarning {
    /// Gas wavelength is not much shorter than the superposition width.
    GasWavelengthTooLong { wavelength: f64, delta_x: f64 },
    /// Thermal photon wavelength is not much longer than the width.
    PhotonWavelengthTooShort { wavelength: f64, delta_x: f64 },
}

impl std::fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidityWarning::GasWavelengthTooLong { wavelength, delta_x } => write!(
                f,
                "gas wavelength {wavelength:e} m exceeds delta_x/10 = {:e} m; short-wavelength limit is doubtful",
                delta_x / 10.0
            ),
            ValidityWarning::PhotonWavelengthTooShort { wavelength, delta_x } => write!(
                f,
                "photon wavelength {wavelength:e} m is below 10 delta_x = {:e} m; long-wavelength limit is doubtful",
                delta_x * 10.0
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceBreakdown {
    pub t_env: f64,
    pub lambda_air: f64,
    pub gas_wavelength: f64,
    pub gamma_air: f64,
    pub blackbody: BlackbodyConstants,
    pub gamma_blackbody: f64,
    pub gamma_total: f64,
    pub warnings: Vec<ValidityWarning>,
}

/// `gamma_air + Lambda_bb * delta_x^2` with every component and the regime
/// checks.
pub fn gamma_total(env: &EnvironmentParams) -> Result<DecoherenceBreakdown> {
    env.validate()?;
    let gas_wavelength = thermal_wavelength(env);
    let blackbody = lambda_blackbody(env);
    let g_air = gamma_air(env);
    let g_bb = blackbody.total() * env.delta_x.powi(2);
    let mut warnings = Vec::new();
    if gas_wavelength > env.delta_x / 10.0 {
        warnings.push(ValidityWarning::GasWavelengthTooLong {
            wavelength: gas_wavelength,
            delta_x: env.delta_x,
        });
    }
    let photon = photon_wavelength(env.t_env.max(env.t_internal));
    if photon < 10.0 * env.delta_x {
        warnings.push(ValidityWarning::PhotonWavelengthTooShort {
            wavelength: photon,
            delta_x: env.delta_x,
        });
    }
    Ok(DecoherenceBreakdown {
        t_env: env.t_env,
        lambda_air: lambda_air(env),
        gas_wavelength,
        gamma_air: g_air,
        blackbody,
        gamma_blackbody: g_bb,
        gamma_total: g_air + g_bb,
        warnings,
    })
}
