//! Geo-entity embeddings learned by regressing signed distance fields.
//!
//! Every point, polyline or polygon gets a latent code optimized jointly with a
//! shared conditioned MLP that predicts the entity's signed distance at any
//! query coordinate. Shape codes are learned in a per-entity canonical frame and
//! location codes in a dataset-wide one; the two concatenate into the final
//! embedding.

pub mod autodecoder;
pub mod encoding;
pub mod evaluation;
pub mod geometry;
pub mod ingest;
pub mod render;
pub mod sampling;
pub mod training;

use serde::{Deserialize, Serialize};

/// Which of the two learning pipelines a config, model or embedding belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Shape,
    Location,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Shape => "shape",
            Mode::Location => "location",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shape" => Ok(Mode::Shape),
            "location" => Ok(Mode::Location),
            other => Err(format!("unknown mode `{other}` (expected shape or location)")),
        }
    }
}
