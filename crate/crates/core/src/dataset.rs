//! Domain types, built-in material and system constants, and the CSV dataset format.
//!
//! Every feature vector in the crate uses [`FeatureId`] order. Reports that
//! need another row order re-label on output; storage never changes.
//!
//! Dataset CSV layout (header required, `.` decimal separator):
//!
//! ```text
//! material_index,thickness,density,thermal_conductivity,specific_heat_capacity,solar_absorptance,visual_absorptance,thermal_absorptance,load,label
//! ```
//!
//! `load` and `label` may be empty or omitted from the header entirely.
//! Labels are `low`, `medium` or `high`.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::ClassLabel;

pub const N_FEATURES: usize = 7;

pub type FeatureVector = [f64; N_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    Thickness,
    Density,
    ThermalConductivity,
    SpecificHeatCapacity,
    SolarAbsorptance,
    VisualAbsorptance,
    ThermalAbsorptance,
}

impl FeatureId {
    pub const ALL: [FeatureId; N_FEATURES] = [
        FeatureId::Thickness,
        FeatureId::Density,
        FeatureId::ThermalConductivity,
        FeatureId::SpecificHeatCapacity,
        FeatureId::SolarAbsorptance,
        FeatureId::VisualAbsorptance,
        FeatureId::ThermalAbsorptance,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FeatureId> {
        Self::ALL.get(index).copied()
    }

    /// Column name used in every CSV and JSON output.
    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Thickness => "thickness",
            FeatureId::Density => "density",
            FeatureId::ThermalConductivity => "thermal_conductivity",
            FeatureId::SpecificHeatCapacity => "specific_heat_capacity",
            FeatureId::SolarAbsorptance => "solar_absorptance",
            FeatureId::VisualAbsorptance => "visual_absorptance",
            FeatureId::ThermalAbsorptance => "thermal_absorptance",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            FeatureId::Thickness => "m",
            FeatureId::Density => "kg/m3",
            FeatureId::ThermalConductivity => "W/mK",
            FeatureId::SpecificHeatCapacity => "J/kgK",
            _ => "-",
        }
    }

    /// Absorptances live in (0, 1); everything else must be strictly positive.
    pub fn is_absorptance(self) -> bool {
        matches!(
            self,
            FeatureId::SolarAbsorptance
                | FeatureId::VisualAbsorptance
                | FeatureId::ThermalAbsorptance
        )
    }

    pub fn is_valid_value(self, value: f64) -> bool {
        if self.is_absorptance() {
            value > 0.0 && value < 1.0
        } else {
            value > 0.0
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyDistribution {
    pub mean: f64,
    pub std_dev: f64,
}

impl PropertyDistribution {
    pub const fn new(mean: f64, std_dev: f64) -> Self {
        PropertyDistribution { mean, std_dev }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !self.std_dev.is_finite() || self.std_dev < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "distribution N({}, {}^2) needs a finite mean and std_dev >= 0",
                self.mean, self.std_dev
            )));
        }
        Ok(())
    }
}

/// A material and its seven property distributions, indexed by [`FeatureId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    pub dist: [PropertyDistribution; N_FEATURES],
}

impl MaterialSpec {
    pub fn get(&self, feature: FeatureId) -> PropertyDistribution {
        self.dist[feature.index()]
    }

    pub fn mean_vector(&self) -> FeatureVector {
        self.dist.map(|d| d.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MaterialSpec>", into = "Vec<MaterialSpec>")]
pub struct MaterialLibrary {
    materials: Vec<MaterialSpec>,
}

impl MaterialLibrary {
    pub fn new(materials: Vec<MaterialSpec>) -> Result<Self> {
        if materials.is_empty() {
            return Err(Error::InvalidArgument("material library is empty".into()));
        }
        for (i, m) in materials.iter().enumerate() {
            if materials[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate material name `{}`",
                    m.name
                )));
            }
            for d in &m.dist {
                d.validate()?;
            }
        }
        Ok(MaterialLibrary { materials })
    }

    pub fn materials(&self) -> &[MaterialSpec] {
        &self.materials
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&MaterialSpec> {
        self.materials.iter().find(|m| m.name == name)
    }
}

impl TryFrom<Vec<MaterialSpec>> for MaterialLibrary {
    type Error = Error;

    fn try_from(materials: Vec<MaterialSpec>) -> Result<Self> {
        MaterialLibrary::new(materials)
    }
}

impl From<MaterialLibrary> for Vec<MaterialSpec> {
    fn from(lib: MaterialLibrary) -> Self {
        lib.materials
    }
}

const fn nd(mean: f64, std_dev: f64) -> PropertyDistribution {
    PropertyDistribution::new(mean, std_dev)
}

const ABSORPTANCE: PropertyDistribution = nd(0.5, 0.05);

fn material(name: &str, physical: [PropertyDistribution; 4]) -> MaterialSpec {
    let [t, rho, k, c] = physical;
    MaterialSpec {
        name: name.to_string(),
        dist: [t, rho, k, c, ABSORPTANCE, ABSORPTANCE, ABSORPTANCE],
    }
}

/// The six wall materials: thickness, density, conductivity and specific heat
/// as N(mean, sd^2); all three absorptances are N(0.5, 0.05^2).
pub fn builtin_material_library() -> MaterialLibrary {
    let materials = vec![
        material(
            "timber_insulated_panel_osb",
            [
                nd(0.01, 0.001),
                nd(545.0, 20.0),
                nd(0.135, 0.0075),
                nd(1740.0, 442.5),
            ],
        ),
        material(
            "timber_insulated_panel_insulation",
            [
                nd(0.09, 0.009),
                nd(11.0, 1.0),
                nd(0.0465, 0.005),
                nd(805.0, 17.5),
            ],
        ),
        material(
            "concrete",
            [
                nd(0.21, 0.021),
                nd(2000.0, 30.0),
                nd(1.13, 0.1),
                nd(1000.0, 106.0),
            ],
        ),
        material(
            "brick",
            [
                nd(0.16, 0.016),
                nd(1700.0, 297.5),
                nd(0.84, 0.27),
                nd(800.0, 86.0),
            ],
        ),
        material(
            "aluminum",
            [
                nd(0.14, 0.014),
                nd(6278.0, 2876.0),
                nd(244.0, 107.0),
                nd(544.0, 233.0),
            ],
        ),
        material(
            "glass",
            [
                nd(0.31, 0.031),
                nd(2509.0, 105.0),
                nd(1.294, 0.69),
                nd(820.0, 50.0),
            ],
        ),
    ];
    MaterialLibrary { materials }
}

/// Fixed system assumptions. None of these enter the surrogate formula
/// individually; they are carried alongside it for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConstants {
    /// W/m2
    pub equipment_load: f64,
    /// m3/s per m2
    pub infiltration_rate: f64,
    /// W/m2
    pub lighting_density: f64,
    /// people per m2
    pub people_density: f64,
    /// m3/s per m2
    pub ventilation_per_area: f64,
    /// m3/s per person
    pub ventilation_per_person: f64,
    /// W/m2K
    pub glazing_u_value: f64,
}

impl Default for SystemConstants {
    fn default() -> Self {
        builtin_system_constants()
    }
}

impl SystemConstants {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.equipment_load,
            self.infiltration_rate,
            self.lighting_density,
            self.people_density,
            self.ventilation_per_area,
            self.ventilation_per_person,
            self.glazing_u_value,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "system constants must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

pub fn builtin_system_constants() -> SystemConstants {
    SystemConstants {
        equipment_load: 10.98,
        infiltration_rate: 0.0003,
        lighting_density: 9.36,
        people_density: 0.25,
        ventilation_per_area: 0.0006,
        ventilation_per_person: 0.005,
        glazing_u_value: 0.6,
    }
}

/// JSON document holding a material library and system constants, used to
/// export the built-ins and to override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub materials: MaterialLibrary,
    pub system: SystemConstants,
}

impl Default for ConstantsFile {
    fn default() -> Self {
        ConstantsFile {
            materials: builtin_material_library(),
            system: builtin_system_constants(),
        }
    }
}

impl ConstantsFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ConstantsFile = serde_json::from_str(&text)?;
        file.system.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub material_index: usize,
    pub features: FeatureVector,
    /// Annual thermal load, kWh/m2.
    pub load: Option<f64>,
    pub label: Option<ClassLabel>,
}

impl Row {
    pub fn new(material_index: usize, features: FeatureVector) -> Self {
        Row {
            material_index,
            features,
            load: None,
            label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new(rows: Vec<Row>) -> Self {
        Dataset { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.rows[i].clone()).collect())
    }

    /// Labels of every row, or an error naming the first unlabeled row.
    pub fn labels(&self) -> Result<Vec<ClassLabel>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .ok_or_else(|| Error::InvalidArgument(format!("row {i} has no label")))
            })
            .collect()
    }

    /// Per-class row counts in Low, Medium, High order.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for label in self.rows.iter().filter_map(|r| r.label) {
            counts[label.index()] += 1;
        }
        counts
    }

    /// Feature matrix restricted to `columns` (canonical indices), row-major.
    pub fn feature_matrix(&self, columns: &[usize]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| columns.iter().map(|&c| r.features[c]).collect())
            .collect()
    }

    pub fn check_materials(&self, library: &MaterialLibrary) -> Result<()> {
        match self
            .rows
            .iter()
            .position(|r| r.material_index >= library.len())
        {
            Some(i) => Err(Error::InvalidArgument(format!(
                "row {i}: material_index {} outside a {}-material library",
                self.rows[i].material_index,
                library.len()
            ))),
            None => Ok(()),
        }
    }
}

const MATERIAL_COLUMN: &str = "material_index";
const LOAD_COLUMN: &str = "load";
const LABEL_COLUMN: &str = "label";

fn header() -> Vec<&'static str> {
    let mut h = vec![MATERIAL_COLUMN];
    h.extend(FeatureId::ALL.iter().map(|f| f.name()));
    h.push(LOAD_COLUMN);
    h.push(LABEL_COLUMN);
    h
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(dataset, file).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_dataset_to<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(header()).map_err(csv_err)?;
    let mut record = Vec::with_capacity(N_FEATURES + 3);
    for row in &dataset.rows {
        record.clear();
        record.push(row.material_index.to_string());
        record.extend(row.features.iter().map(|v| v.to_string()));
        record.push(row.load.map(|v| v.to_string()).unwrap_or_default());
        record.push(row.label.map(|l| l.name().to_string()).unwrap_or_default());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(file, path)
}

/// Reads the dataset CSV from any reader; `origin` is only used in messages.
pub fn read_dataset_from<R: std::io::Read>(reader: R, origin: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let head = rdr
        .headers()
        .map_err(|e| Error::parse(origin, 0, e.to_string()))?
        .clone();
    let expected = header();
    let names: Vec<&str> = head.iter().collect();
    if names.len() < 1 + N_FEATURES || names[..1 + N_FEATURES] != expected[..1 + N_FEATURES] {
        return Err(Error::parse(
            origin,
            0,
            format!(
                "header must start with {}",
                expected[..1 + N_FEATURES].join(",")
            ),
        ));
    }
    let mut load_col = None;
    let mut label_col = None;
    for (i, name) in names.iter().enumerate().skip(1 + N_FEATURES) {
        match *name {
            LOAD_COLUMN if load_col.is_none() => load_col = Some(i),
            LABEL_COLUMN if label_col.is_none() => label_col = Some(i),
            other => {
                return Err(Error::parse(
                    origin,
                    0,
                    format!("unexpected header column `{other}`"),
                ))
            }
        }
    }
    let width = names.len();
    let optional = width - 1 - N_FEATURES;

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let n = i + 1;
        let record = record.map_err(|e| Error::parse(origin, n, e.to_string()))?;
        if record.len() != width {
            let found = record.len() as isize - 1 - optional as isize;
            return Err(Error::parse(
                origin,
                n,
                format!(
                    "expected {N_FEATURES} features, found {} ({} fields for a {width}-column header)",
                    found.max(0),
                    record.len()
                ),
            ));
        }
        let material_index: usize = record[0].parse().map_err(|_| {
            Error::parse(
                origin,
                n,
                format!("column {MATERIAL_COLUMN}: `{}` is not an index", &record[0]),
            )
        })?;
        let mut features = [0.0; N_FEATURES];
        for (f, slot) in FeatureId::ALL.iter().zip(features.iter_mut()) {
            let text = &record[1 + f.index()];
            let value: f64 = text.parse().map_err(|_| {
                Error::parse(origin, n, format!("column {f}: `{text}` is not a number"))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("column {f}: non-finite value `{text}`"),
                ));
            }
            *slot = value;
        }
        let load = match load_col.map(|c| &record[c]) {
            None | Some("") => None,
            Some(text) => {
                let v: f64 = text.parse().map_err(|_| {
                    Error::parse(
                        origin,
                        n,
                        format!("column {LOAD_COLUMN}: `{text}` is not a number"),
                    )
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(
                        origin,
                        n,
                        format!("column {LOAD_COLUMN}: load must be finite and >= 0, got `{text}`"),
                    ));
                }
                Some(v)
            }
        };
        let label = match label_col.map(|c| &record[c]) {
            None | Some("") => None,
            Some(text) => Some(text.parse::<ClassLabel>().map_err(|_| {
                Error::parse(
                    origin,
                    n,
                    format!("column {LABEL_COLUMN}: `{text}` is not one of low, medium, high"),
                )
            })?),
        };
        rows.push(Row {
            material_index,
            features,
            load,
            label,
        });
    }
    Ok(Dataset::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let lib = builtin_material_library();
        assert_eq!(lib.len(), 6);
        let concrete = lib.get("concrete").unwrap();
        assert_eq!(concrete.get(FeatureId::ThermalConductivity), nd(1.13, 0.1));
        let aluminum = lib.get("aluminum").unwrap();
        assert_eq!(aluminum.get(FeatureId::Density), nd(6278.0, 2876.0));
        for m in lib.materials() {
            for f in FeatureId::ALL.iter().filter(|f| f.is_absorptance()) {
                assert_eq!(m.get(*f), nd(0.5, 0.05), "{} {f}", m.name);
            }
        }
    }

    #[test]
    fn system_constants() {
        let s = builtin_system_constants();
        assert_eq!(s.equipment_load, 10.98);
        assert_eq!(s.glazing_u_value, 0.6);
        assert_eq!(s.people_density, 0.25);
        assert_eq!(s.infiltration_rate, 0.0003);
        assert_eq!(s.lighting_density, 9.36);
        assert_eq!(s.ventilation_per_area, 0.0006);
        assert_eq!(s.ventilation_per_person, 0.005);
        s.validate().unwrap();
    }

    #[test]
    fn feature_order_and_names() {
        for (i, f) in FeatureId::ALL.iter().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(FeatureId::from_index(i), Some(*f));
            assert_eq!(f.name().parse::<FeatureId>().unwrap(), *f);
        }
        assert!(FeatureId::from_index(7).is_none());
    }

    #[test]
    fn duplicate_material_names_rejected() {
        let lib = builtin_material_library();
        let mut m: Vec<MaterialSpec> = lib.into();
        m.push(m[0].clone());
        assert!(MaterialLibrary::new(m).is_err());
    }

    #[test]
    fn constants_json_round_trip() {
        let c = ConstantsFile::default();
        let json = c.to_json().unwrap();
        let back: ConstantsFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    fn parse(text: &str) -> Result<Dataset> {
        read_dataset_from(text.as_bytes(), Path::new("mem.csv"))
    }

    const HEAD: &str = "material_index,thickness,density,thermal_conductivity,specific_heat_capacity,solar_absorptance,visual_absorptance,thermal_absorptance,load,label\n";

    #[test]
    fn short_row_names_row_and_arity() {
        let text = format!("{HEAD}0,1,2,3,4,5,6,7,80,low\n0,1,2,3,4,5,6,,\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("row 2: expected 7 features"), "{err}");
    }

    #[test]
    fn bad_label_rejected() {
        let text = format!("{HEAD}0,1,2,3,4,5,6,7,80,extreme\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("label"), "{err}");
    }

    #[test]
    fn non_finite_feature_rejected() {
        for bad in ["NaN", "inf", "-inf"] {
            let text = format!("{HEAD}0,1,{bad},3,4,5,6,7,,\n");
            let err = parse(&text).unwrap_err().to_string();
            assert!(err.contains("density"), "{err}");
        }
    }

    #[test]
    fn negative_load_rejected() {
        let text = format!("{HEAD}0,1,2,3,4,5,6,7,-1,\n");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn optional_columns_may_be_absent() {
        let head = HEAD.trim_end().trim_end_matches(",load,label");
        let d = parse(&format!("{head}\n3,1,2,3,4,5,6,7\n")).unwrap();
        assert_eq!(d.rows[0].material_index, 3);
        assert_eq!(d.rows[0].load, None);
        assert_eq!(d.rows[0].label, None);
    }

    #[test]
    fn wrong_header_rejected() {
        let err = parse("a,b,c\n1,2,3\n").unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
    }
}
