//! The seven-site FMO model: tight-binding Hamiltonian, decoherence rates, and
//! the model file that carries them.
//!
//! Internally energies are angular frequencies in rad/ps and rates are 1/ps,
//! so no factor of ħ appears anywhere downstream.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const N_SITES: usize = 7;

/// Speed of light in cm/ps.
pub const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;

/// Site that feeds the reaction-center sink (1-based).
pub const SINK_SITE: usize = 3;

/// The model file shipped with the crate.
pub const DEFAULT_MODEL: &str = include_str!("../../../data/fmo_default.model");

/// Angular frequency in rad/ps of one wavenumber (cm⁻¹).
pub fn wavenumber_to_rad_per_ps(wavenumber: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_CM_PER_PS * wavenumber
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    Wavenumber,
    RadPerPs,
}

impl EnergyUnit {
    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "cm-1" | "cm^-1" | "cm⁻¹" | "1/cm" => Ok(Self::Wavenumber),
            "rad/ps" => Ok(Self::RadPerPs),
            other => Err(Error::Parse(format!(
                "unknown energy unit {other:?} (expected \"cm-1\" or \"rad/ps\")"
            ))),
        }
    }

    fn to_rad_per_ps(self, value: f64) -> f64 {
        match self {
            Self::Wavenumber => wavenumber_to_rad_per_ps(value),
            Self::RadPerPs => value,
        }
    }
}

/// Site energies and couplings in rad/ps. Sites are indexed 0..7 here and
/// 1..=7 everywhere user-facing.
#[derive(Debug, Clone, PartialEq)]
pub struct FmoHamiltonian {
    site_energies: [f64; N_SITES],
    couplings: [[f64; N_SITES]; N_SITES],
}

impl FmoHamiltonian {
    /// Validates symmetry, the site-3 energy minimum and the three dominant
    /// couplings (1,2), (4,5), (5,6).
    pub fn new(
        site_energies: [f64; N_SITES],
        couplings: [[f64; N_SITES]; N_SITES],
    ) -> Result<Self> {
        let h = Self::new_unchecked(site_energies, couplings)?;
        h.check_site3_lowest()?;
        h.check_strongest_couplings()?;
        Ok(h)
    }

    /// Only checks the structural invariants (finite, symmetric, zero
    /// diagonal). Useful for toy models in tests.
    pub fn new_unchecked(
        site_energies: [f64; N_SITES],
        couplings: [[f64; N_SITES]; N_SITES],
    ) -> Result<Self> {
        if site_energies
            .iter()
            .chain(couplings.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::validation("finite", "non-finite energy or coupling"));
        }
        for n in 0..N_SITES {
            if couplings[n][n] != 0.0 {
                return Err(Error::validation(
                    "zero-diagonal-couplings",
                    format!(
                        "coupling V[{}][{}] = {} must be zero",
                        n + 1,
                        n + 1,
                        couplings[n][n]
                    ),
                ));
            }
            for m in 0..n {
                if couplings[n][m] != couplings[m][n] {
                    return Err(Error::validation(
                        "symmetric-couplings",
                        format!(
                            "V[{}][{}] = {} but V[{}][{}] = {}",
                            n + 1,
                            m + 1,
                            couplings[n][m],
                            m + 1,
                            n + 1,
                            couplings[m][n]
                        ),
                    ));
                }
            }
        }
        Ok(Self {
            site_energies,
            couplings,
        })
    }

    pub fn zero() -> Self {
        Self {
            site_energies: [0.0; N_SITES],
            couplings: [[0.0; N_SITES]; N_SITES],
        }
    }

    fn check_site3_lowest(&self) -> Result<()> {
        let e3 = self.site_energies[SINK_SITE - 1];
        for (n, &e) in self.site_energies.iter().enumerate() {
            if n != SINK_SITE - 1 && e <= e3 {
                return Err(Error::validation(
                    "site3-lowest-energy",
                    format!("site {} energy {e} is not above site 3 energy {e3}", n + 1),
                ));
            }
        }
        Ok(())
    }

    fn check_strongest_couplings(&self) -> Result<()> {
        const EXPECTED: [(usize, usize); 3] = [(1, 2), (4, 5), (5, 6)];
        let mut pairs: Vec<((usize, usize), f64)> = Vec::new();
        for n in 0..N_SITES {
            for m in n + 1..N_SITES {
                pairs.push(((n + 1, m + 1), self.couplings[n][m].abs()));
            }
        }
        let weakest_expected = pairs
            .iter()
            .filter(|(p, _)| EXPECTED.contains(p))
            .map(|&(_, v)| v)
            .fold(f64::INFINITY, f64::min);
        let strongest_other = pairs
            .iter()
            .filter(|(p, _)| !EXPECTED.contains(p))
            .map(|&(_, v)| v)
            .fold(0.0, f64::max);
        if weakest_expected > strongest_other {
            Ok(())
        } else {
            Err(Error::validation(
                "strongest-couplings",
                format!(
                    "pairs (1,2), (4,5), (5,6) must carry the three largest |V|; \
                     weakest of them is {weakest_expected}, another pair reaches {strongest_other}"
                ),
            ))
        }
    }

    pub fn site_energies(&self) -> &[f64; N_SITES] {
        &self.site_energies
    }

    pub fn couplings(&self) -> &[[f64; N_SITES]; N_SITES] {
        &self.couplings
    }

    /// `H[n][m]` over sites, energies on the diagonal.
    pub fn matrix(&self) -> [[f64; N_SITES]; N_SITES] {
        let mut h = self.couplings;
        for n in 0..N_SITES {
            h[n][n] = self.site_energies[n];
        }
        h
    }
}

/// Incoherent rates in 1/ps.
///
/// Jump operators carry `sqrt(2 Γ)`, so a population drained by a channel of
/// rate Γ decays as `exp(-2 Γ t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceRates {
    pub recomb_rate: f64,
    pub sink_rate: f64,
    pub dephasing_rate: f64,
}

impl DecoherenceRates {
    pub fn new(recomb_rate: f64, sink_rate: f64, dephasing_rate: f64) -> Result<Self> {
        let rates = Self {
            recomb_rate,
            sink_rate,
            dephasing_rate,
        };
        for (name, v) in [
            ("recomb_rate", recomb_rate),
            ("sink_rate", sink_rate),
            ("dephasing_rate", dephasing_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    "nonnegative-rates",
                    format!("{name} = {v} must be finite and >= 0"),
                ));
            }
        }
        Ok(rates)
    }

    pub fn zero() -> Self {
        Self {
            recomb_rate: 0.0,
            sink_rate: 0.0,
            dephasing_rate: 0.0,
        }
    }

    pub fn max_rate(&self) -> f64 {
        self.recomb_rate
            .max(self.sink_rate)
            .max(self.dephasing_rate)
    }
}

/// Linear temperature law `γ(T) = rate_ref · T / T_ref`.
pub fn dephasing_rate_from_temperature(temperature: f64, t_ref: f64, rate_ref: f64) -> Result<f64> {
    for (name, v) in [
        ("temperature", temperature),
        ("t_ref", t_ref),
        ("rate_ref", rate_ref),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::validation(
                "positive-temperature-calibration",
                format!("{name} = {v} must be strictly positive"),
            ));
        }
    }
    Ok(rate_ref * temperature / t_ref)
}

/// How the dephasing rate is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dephasing {
    Direct(f64),
    Temperature {
        t_ref: f64,
        rate_ref: f64,
        /// Used when the caller does not supply a temperature.
        default_temperature: f64,
    },
}

/// A parsed and validated model file.
#[derive(Debug, Clone, PartialEq)]
pub struct FmoModel {
    pub hamiltonian: FmoHamiltonian,
    pub recomb_rate: f64,
    pub sink_rate: f64,
    pub dephasing: Dephasing,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    units: String,
    site_energies: Vec<f64>,
    couplings: Vec<Vec<f64>>,
    recomb_rate: f64,
    sink_rate: f64,
    dephasing: DephasingFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DephasingFile {
    mode: String,
    value: Option<f64>,
    calibration: Option<CalibrationFile>,
    temperature: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    t_ref: f64,
    rate_ref: f64,
}

impl FmoModel {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let unit = EnergyUnit::parse(&file.units)?;

        if file.site_energies.len() != N_SITES {
            return Err(Error::Parse(format!(
                "site_energies has {} entries, expected {N_SITES}",
                file.site_energies.len()
            )));
        }
        if file.couplings.len() != N_SITES || file.couplings.iter().any(|r| r.len() != N_SITES) {
            return Err(Error::Parse(format!(
                "couplings must be a {N_SITES}x{N_SITES} table"
            )));
        }
        let mut energies = [0.0; N_SITES];
        let mut couplings = [[0.0; N_SITES]; N_SITES];
        for n in 0..N_SITES {
            energies[n] = unit.to_rad_per_ps(file.site_energies[n]);
            for m in 0..N_SITES {
                couplings[n][m] = unit.to_rad_per_ps(file.couplings[n][m]);
            }
        }
        let hamiltonian = FmoHamiltonian::new(energies, couplings)?;

        let dephasing = match file.dephasing.mode.as_str() {
            "direct" => {
                let value = file.dephasing.value.ok_or_else(|| {
                    Error::Parse("dephasing mode \"direct\" requires `value`".into())
                })?;
                Dephasing::Direct(value)
            }
            "temperature" => {
                let cal = file.dephasing.calibration.ok_or_else(|| {
                    Error::Parse("dephasing mode \"temperature\" requires `calibration`".into())
                })?;
                // Validate the calibration pair up front.
                dephasing_rate_from_temperature(cal.t_ref, cal.t_ref, cal.rate_ref)?;
                Dephasing::Temperature {
                    t_ref: cal.t_ref,
                    rate_ref: cal.rate_ref,
                    default_temperature: file.dephasing.temperature.unwrap_or(cal.t_ref),
                }
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown dephasing mode {other:?} (expected \"direct\" or \"temperature\")"
                )))
            }
        };

        let model = Self {
            hamiltonian,
            recomb_rate: file.recomb_rate,
            sink_rate: file.sink_rate,
            dephasing,
        };
        model.rates(None)?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn default_model() -> Self {
        Self::parse(DEFAULT_MODEL).expect("shipped model file is valid")
    }

    /// Rates at `temperature` (kelvin). A direct-mode model ignores the
    /// temperature.
    pub fn rates(&self, temperature: Option<f64>) -> Result<DecoherenceRates> {
        let dephasing = match self.dephasing {
            Dephasing::Direct(v) => v,
            Dephasing::Temperature {
                t_ref,
                rate_ref,
                default_temperature,
            } => dephasing_rate_from_temperature(
                temperature.unwrap_or(default_temperature),
                t_ref,
                rate_ref,
            )?,
        };
        DecoherenceRates::new(self.recomb_rate, self.sink_rate, dephasing)
    }
}

/// Parses a model file into its Hamiltonian and the rates at the file's
/// default temperature.
pub fn load_model(text: &str) -> Result<(FmoHamiltonian, DecoherenceRates)> {
    let model = FmoModel::parse(text)?;
    let rates = model.rates(None)?;
    Ok((model.hamiltonian, rates))
}
