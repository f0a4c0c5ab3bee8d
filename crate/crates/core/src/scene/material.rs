use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of octave bands carried by every material and energy quantity.
pub const BANDS: usize = 6;

/// Octave band center frequencies in Hz.
pub const BAND_CENTERS_HZ: [f64; BANDS] = [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0];

/// Per-band value, one entry per octave band.
pub type BandArray = [f64; BANDS];

/// Frequency-dependent surface coefficients, all unitless fractions of incident energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCoefficients {
    pub absorption: BandArray,
    #[serde(default)]
    pub scattering: BandArray,
    #[serde(default)]
    pub transmission: BandArray,
}

impl BandCoefficients {
    /// Same absorption in every band, no scattering or transmission.
    pub fn flat(absorption: f64) -> Self {
        BandCoefficients {
            absorption: [absorption; BANDS],
            scattering: [0.0; BANDS],
            transmission: [0.0; BANDS],
        }
    }

    pub fn with_scattering(mut self, scattering: f64) -> Self {
        self.scattering = [scattering; BANDS];
        self
    }

    pub fn with_transmission(mut self, transmission: f64) -> Self {
        self.transmission = [transmission; BANDS];
        self
    }

    /// Fraction of incident energy that is specularly or diffusely reflected.
    pub fn reflectance(&self, band: usize) -> f64 {
        (1.0 - self.absorption[band] - self.transmission[band]).max(0.0)
    }

    pub fn mean_scattering(&self) -> f64 {
        self.scattering.iter().sum::<f64>() / BANDS as f64
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let fields = [
            ("absorption", &self.absorption),
            ("scattering", &self.scattering),
            ("transmission", &self.transmission),
        ];
        for (field, values) in fields {
            for (b, v) in values.iter().enumerate() {
                if !(0.0..=1.0).contains(v) {
                    return Err(Error::Validation(format!(
                        "material {name:?}: {field}[{b}] = {v} outside [0, 1]"
                    )));
                }
            }
        }
        for b in 0..BANDS {
            if self.absorption[b] + self.transmission[b] > 1.0 + 1e-12 {
                return Err(Error::Validation(format!(
                    "material {name:?}: absorption + transmission > 1 in band {b}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    pub coefficients: BandCoefficients,
}

/// Name of the material bound to surfaces without an explicit binding.
pub const DEFAULT_MATERIAL: &str = "default";

/// Ordered material table. Index 0 is always the `"default"` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    materials: Vec<Material>,
}

impl MaterialTable {
    pub fn new(default: BandCoefficients) -> Self {
        MaterialTable {
            materials: vec![Material {
                name: DEFAULT_MATERIAL.to_string(),
                coefficients: default,
            }],
        }
    }

    /// Adds or replaces a material, returning its id.
    pub fn insert(&mut self, name: &str, coefficients: BandCoefficients) -> usize {
        if let Some(id) = self.id_of(name) {
            self.materials[id].coefficients = coefficients;
            return id;
        }
        self.materials.push(Material {
            name: name.to_string(),
            coefficients,
        });
        self.materials.len() - 1
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.name == name)
    }

    pub fn get(&self, id: usize) -> Option<&Material> {
        self.materials.get(id)
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }

    pub fn validate(&self) -> Result<()> {
        self.materials
            .iter()
            .try_for_each(|m| m.coefficients.validate(&m.name))
    }

    pub fn from_json_str(text: &str, path: &str) -> Result<Self> {
        let raw: BTreeMap<String, BandCoefficients> =
            serde_json::from_str(text).map_err(|e| Error::Parse {
                path: path.to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        let default = raw.get(DEFAULT_MATERIAL).ok_or_else(|| {
            Error::Config(format!("{path}: missing required \"default\" material"))
        })?;
        let mut table = MaterialTable::new(*default);
        for (name, coefficients) in &raw {
            if name != DEFAULT_MATERIAL {
                table.insert(name, *coefficients);
            }
        }
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<&str, &BandCoefficients> = self
            .materials
            .iter()
            .map(|m| (m.name.as_str(), &m.coefficients))
            .collect();
        serde_json::to_value(map).expect("material table serializes")
    }
}
