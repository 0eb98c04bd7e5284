//! Surrogate annual thermal load, and ingestion of externally computed loads.
//!
//! The load model is a steady-state wall conduction term driven by annual
//! degree-days, damped by the wall's areal heat capacity, plus a lumped
//! balance-of-system load and linear absorptance terms:
//!
//! ```text
//! U = 1 / (r_si + t/k + r_so)
//! C = rho * c * t
//! d = 1 - d_max * (1 - exp(-C / c_ref))
//! Q = d * (U * r_wall * 24 * (hdd + cdd) / 1000 + q_base)
//!     + w_solar * a_solar + w_thermal * a_thermal + w_visual * a_visual
//! ```
//!
//! It is not a building-physics claim; the constants are configuration.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureId, FeatureVector, SystemConstants};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    /// Inside surface film resistance, m2K/W.
    pub r_si: f64,
    /// Outside surface film resistance, m2K/W.
    pub r_so: f64,
    /// Heating degree-days, base 18 C.
    pub hdd: f64,
    /// Cooling degree-days, base 18 C.
    pub cdd: f64,
    /// Wall area per floor area.
    pub r_wall: f64,
    /// Balance-of-system load, kWh/m2.
    pub q_base: f64,
    /// Areal heat capacity at which damping reaches 1 - 1/e of `d_max`, J/m2K.
    pub c_ref: f64,
    pub d_max: f64,
    pub w_solar: f64,
    pub w_thermal: f64,
    pub w_visual: f64,
    /// Fixed system assumptions, folded into `q_base`.
    pub system: SystemConstants,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        // Degree-days and q_base are calibrated so that the default-seed
        // dataset has its median load inside the 75..90 kWh/m2 band.
        SurrogateConfig {
            r_si: 0.13,
            r_so: 0.04,
            hdd: 350.0,
            cdd: 300.0,
            r_wall: 1.4,
            q_base: 30.0,
            c_ref: 3.0e5,
            d_max: 0.25,
            w_solar: 6.0,
            w_thermal: 3.0,
            w_visual: 0.0,
            system: SystemConstants::default(),
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("surrogate config: {what}")));
        if !(self.r_si > 0.0 && self.r_so > 0.0) || !self.r_si.is_finite() || !self.r_so.is_finite()
        {
            return bad("r_si and r_so must be positive");
        }
        if !(0.0..1.0).contains(&self.d_max) {
            return bad("d_max must lie in [0, 1)");
        }
        if !(self.hdd >= 0.0 && self.cdd >= 0.0) || !self.hdd.is_finite() || !self.cdd.is_finite() {
            return bad("hdd and cdd must be finite and non-negative");
        }
        if !(self.c_ref > 0.0) || !self.c_ref.is_finite() {
            return bad("c_ref must be positive");
        }
        if ![
            self.w_solar,
            self.w_thermal,
            self.w_visual,
            self.q_base,
            self.r_wall,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return bad("weights, q_base and r_wall must be finite");
        }
        self.system.validate()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SurrogateConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Annual conduction load, kWh/m2 of floor, for a wall U-value.
    pub fn conduction_load(&self, u_value: f64) -> f64 {
        u_value * self.r_wall * 24.0 * (self.hdd + self.cdd) / 1000.0
    }

    pub fn damping(&self, areal_capacity: f64) -> f64 {
        1.0 - self.d_max * (1.0 - (-areal_capacity / self.c_ref).exp())
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// W/m2K.
pub fn wall_u_value(thickness: f64, conductivity: f64, cfg: &SurrogateConfig) -> Result<f64> {
    positive("thickness", thickness)?;
    positive("thermal conductivity", conductivity)?;
    Ok(1.0 / (cfg.r_si + thickness / conductivity + cfg.r_so))
}

/// J/m2K.
pub fn areal_heat_capacity(thickness: f64, density: f64, specific_heat: f64) -> Result<f64> {
    positive("thickness", thickness)?;
    positive("density", density)?;
    positive("specific heat capacity", specific_heat)?;
    Ok(density * specific_heat * thickness)
}

/// Annual heating plus cooling load, kWh/m2.
pub fn annual_thermal_load(features: &FeatureVector, cfg: &SurrogateConfig) -> Result<f64> {
    let f = |id: FeatureId| features[id.index()];
    let thickness = f(FeatureId::Thickness);
    let u = wall_u_value(thickness, f(FeatureId::ThermalConductivity), cfg)?;
    let cap = areal_heat_capacity(
        thickness,
        f(FeatureId::Density),
        f(FeatureId::SpecificHeatCapacity),
    )?;
    let damping = cfg.damping(cap);
    let q = damping * (cfg.conduction_load(u) + cfg.q_base)
        + cfg.w_solar * f(FeatureId::SolarAbsorptance)
        + cfg.w_thermal * f(FeatureId::ThermalAbsorptance)
        + cfg.w_visual * f(FeatureId::VisualAbsorptance);
    if !q.is_finite() {
        return Err(Error::Domain(format!("load is not finite ({q})")));
    }
    Ok(q)
}

/// Sets every row's load; other fields are untouched.
pub fn simulate_dataset(dataset: &Dataset, cfg: &SurrogateConfig) -> Result<Dataset> {
    cfg.validate()?;
    let loads: Vec<f64> = dataset
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let q = annual_thermal_load(&row.features, cfg)
                .map_err(|e| Error::Domain(format!("row {i}: {e}")))?;
            if q < 0.0 {
                return Err(Error::Domain(format!(
                    "row {i}: negative load {q}; raise q_base in the surrogate config"
                )));
            }
            Ok(q)
        })
        .collect::<Result<_>>()?;
    let mut out = dataset.clone();
    for (row, q) in out.rows.iter_mut().zip(loads) {
        row.load = Some(q);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct LoadRecord {
    row_index: usize,
    load: f64,
}

/// Attaches loads from a `row_index,load` CSV covering every row exactly once.
pub fn ingest_external_loads(dataset: &Dataset, path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_loads_from(dataset, file, path)
}

pub fn ingest_loads_from<R: std::io::Read>(
    dataset: &Dataset,
    reader: R,
    origin: &Path,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut loads: HashMap<usize, f64> = HashMap::with_capacity(dataset.len());
    for (i, rec) in rdr.deserialize::<LoadRecord>().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if rec.row_index >= dataset.len() {
            return Err(Error::parse(
                origin,
                line,
                format!(
                    "row_index {} outside a {}-row dataset",
                    rec.row_index,
                    dataset.len()
                ),
            ));
        }
        if !rec.load.is_finite() || rec.load < 0.0 {
            return Err(Error::parse(
                origin,
                line,
                format!(
                    "load {} for row {} must be finite and >= 0",
                    rec.load, rec.row_index
                ),
            ));
        }
        if loads.insert(rec.row_index, rec.load).is_some() {
            return Err(Error::parse(
                origin,
                line,
                format!("duplicate row_index {}", rec.row_index),
            ));
        }
    }
    let mut out = dataset.clone();
    for (i, row) in out.rows.iter_mut().enumerate() {
        match loads.get(&i) {
            Some(&q) => row.load = Some(q),
            None => {
                return Err(Error::Format(format!(
                    "{}: row {i} missing",
                    origin.display()
                )))
            }
        }
    }
    Ok(out)
}
