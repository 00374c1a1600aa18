//! Annotator profile configuration: a TOML document with a `[[profiles]]`
//! array. Omitted fields fall back to noiseless defaults.

use std::path::Path;

use maskfuse_core::AnnotatorProfile;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct ProfilesConfig {
    pub profiles: Vec<ProfileEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileEntry {
    #[serde(default)]
    pub jitter_radius: u32,
    #[serde(default)]
    pub p_drop: f64,
    #[serde(default)]
    pub p_add: f64,
    #[serde(default = "default_add_size")]
    pub add_size: u32,
    #[serde(default)]
    pub speckle_count: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_add_size() -> u32 {
    1
}

impl ProfileEntry {
    pub fn to_profile(&self) -> AnnotatorProfile {
        AnnotatorProfile {
            jitter_radius: self.jitter_radius,
            p_drop: self.p_drop,
            p_add: self.p_add,
            add_size: self.add_size,
            speckle_count: self.speckle_count,
            seed: self.seed,
        }
    }
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<ProfileEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let config: ProfilesConfig = toml::from_str(&text).map_err(|e| PipelineError::ConfigParse {
        path: path.to_path_buf(),
        source: e,
    })?;
    if config.profiles.is_empty() {
        return Err(PipelineError::InvalidArgument(format!(
            "{}: profile config declares no profiles",
            path.display()
        )));
    }
    Ok(config.profiles)
}
