//! Monte Carlo sampling of material properties.
//!
//! Each material draws from its own [`RandomStream`] keyed by
//! `(seed, material_index)`, so materials can be sampled in parallel without
//! changing any value. Within a material, draws are feature-major: all `n`
//! thickness values first, then all `n` densities, and so on in
//! [`FeatureId`] order. A draw outside the feature's valid range
//! (non-positive physical property, absorptance outside (0, 1)) is discarded
//! and redrawn from the same stream.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    Dataset, FeatureId, FeatureVector, MaterialLibrary, MaterialSpec, Row, N_FEATURES,
};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_N_PER_MATERIAL: usize = 100;
pub const DEFAULT_MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_per_material: usize,
    pub max_rejections_per_draw: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: DEFAULT_SEED,
            n_per_material: DEFAULT_N_PER_MATERIAL,
            max_rejections_per_draw: DEFAULT_MAX_REJECTIONS,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_material == 0 {
            return Err(Error::InvalidArgument("n_per_material must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn sample_material(
    spec: &MaterialSpec,
    n: usize,
    max_rejections: usize,
    stream: &mut RandomStream,
) -> Result<Vec<FeatureVector>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let mut out = vec![[0.0; N_FEATURES]; n];
    for feature in FeatureId::ALL {
        let d = spec.get(feature);
        for sample in out.iter_mut() {
            let mut rejected = 0;
            let value = loop {
                let x = d.mean + d.std_dev * stream.standard_normal();
                if feature.is_valid_value(x) {
                    break x;
                }
                rejected += 1;
                if rejected >= max_rejections {
                    return Err(Error::RejectionLimit {
                        material: spec.name.clone(),
                        feature: feature.name(),
                        attempts: rejected,
                    });
                }
            };
            sample[feature.index()] = value;
        }
    }
    Ok(out)
}

/// Rows grouped by material in library order, `n_per_material` each.
pub fn generate_dataset(library: &MaterialLibrary, cfg: &SamplerConfig) -> Result<Dataset> {
    cfg.validate()?;
    let per_material: Vec<Vec<FeatureVector>> = library
        .materials()
        .par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let mut stream = RandomStream::new(cfg.seed, index as u64);
            sample_material(
                spec,
                cfg.n_per_material,
                cfg.max_rejections_per_draw,
                &mut stream,
            )
        })
        .collect::<Result<_>>()?;
    let rows = per_material
        .into_iter()
        .enumerate()
        .flat_map(|(index, samples)| samples.into_iter().map(move |f| Row::new(index, f)))
        .collect();
    Ok(Dataset::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{builtin_material_library, PropertyDistribution};

    fn degenerate() -> MaterialSpec {
        let mut spec = builtin_material_library().get("concrete").unwrap().clone();
        for d in spec.dist.iter_mut() {
            d.std_dev = 0.0;
        }
        spec
    }

    #[test]
    fn zero_sigma_gives_mean_vector() {
        let spec = degenerate();
        let mut s = RandomStream::new(9, 0);
        let out = sample_material(&spec, 20, 1000, &mut s).unwrap();
        assert!(out.iter().all(|v| *v == spec.mean_vector()));
    }

    #[test]
    fn repeated_calls_identical() {
        let lib = builtin_material_library();
        let spec = &lib.materials()[4];
        let a = sample_material(spec, 50, 1000, &mut RandomStream::new(5, 4)).unwrap();
        let b = sample_material(spec, 50, 1000, &mut RandomStream::new(5, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn concrete_conductivity_mean() {
        let lib = builtin_material_library();
        let spec = lib.get("concrete").unwrap();
        let n = 10_000;
        let out = sample_material(spec, n, 1000, &mut RandomStream::new(42, 2)).unwrap();
        let k = FeatureId::ThermalConductivity.index();
        let mean = out.iter().map(|v| v[k]).sum::<f64>() / n as f64;
        assert!(
            (mean - 1.13).abs() <= 3.0 * 0.1 / (n as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn rejection_limit_names_material_and_feature() {
        let mut spec = degenerate();
        spec.dist[FeatureId::SolarAbsorptance.index()] = PropertyDistribution::new(1.5, 0.0);
        let err = sample_material(&spec, 3, 10, &mut RandomStream::new(0, 0)).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("concrete") && msg.contains("solar_absorptance"),
            "{msg}"
        );
    }

    #[test]
    fn default_dataset_shape() {
        let d = generate_dataset(&builtin_material_library(), &SamplerConfig::default()).unwrap();
        assert_eq!(d.len(), 600);
        for (m, chunk) in d.rows.chunks(100).enumerate() {
            assert!(chunk.iter().all(|r| r.material_index == m));
            assert!(chunk.iter().all(|r| r.load.is_none() && r.label.is_none()));
        }
    }

    #[test]
    fn one_per_material() {
        let cfg = SamplerConfig {
            n_per_material: 1,
            ..SamplerConfig::default()
        };
        let d = generate_dataset(&builtin_material_library(), &cfg).unwrap();
        let idx: Vec<usize> = d.rows.iter().map(|r| r.material_index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn neighbouring_seeds_differ() {
        let lib = builtin_material_library();
        let a = generate_dataset(
            &lib,
            &SamplerConfig {
                seed: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let b = generate_dataset(
            &lib,
            &SamplerConfig {
                seed: 11,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn zero_count_rejected() {
        let cfg = SamplerConfig {
            n_per_material: 0,
            ..SamplerConfig::default()
        };
        assert!(generate_dataset(&builtin_material_library(), &cfg).is_err());
    }
}
