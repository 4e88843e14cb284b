//! JSON robot configuration (degrees at the boundary, radians inside).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{JointSpec, RobotSpec, DEFAULT_GRAVITY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub delta_t_ms: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub joints: Vec<JointConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub name: String,
    pub q_min_deg: f64,
    pub q_max_deg: f64,
    pub delta_q_deg: f64,
    pub v_min_deg_s: f64,
    pub v_max_deg_s: f64,
    pub mass_kg: f64,
    pub length_m: f64,
    pub torques_nm: Vec<f64>,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

impl RobotConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RobotConfig = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_robot(&self) -> Result<RobotSpec> {
        if !(self.delta_t_ms.is_finite() && self.delta_t_ms > 0.0) {
            return Err(Error::InvalidSpec("delta_t_ms must be a positive number".into()));
        }
        let joints = self
            .joints
            .iter()
            .map(|j| {
                let degs = [j.q_min_deg, j.q_max_deg, j.delta_q_deg, j.v_min_deg_s, j.v_max_deg_s];
                if degs.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "joint {:?}: degree fields must be finite",
                        j.name
                    )));
                }
                JointSpec::from_degrees(
                    j.name.clone(),
                    j.q_min_deg,
                    j.q_max_deg,
                    j.delta_q_deg,
                    j.v_min_deg_s,
                    j.v_max_deg_s,
                    j.mass_kg,
                    j.length_m,
                    j.torques_nm.clone(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        RobotSpec::new(joints, self.delta_t_ms / 1000.0, self.gravity)
    }

    /// SHA-256 over the canonical JSON re-serialization, so formatting of the
    /// source file does not change the hash.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// The Example-1 single pendulum joint.
    pub fn example() -> Self {
        RobotConfig {
            delta_t_ms: 40.0,
            gravity: DEFAULT_GRAVITY,
            joints: vec![JointConfig {
                name: "j1".into(),
                q_min_deg: -135.0,
                q_max_deg: 135.0,
                delta_q_deg: 2.0,
                v_min_deg_s: -180.0,
                v_max_deg_s: 180.0,
                mass_kg: 1.0,
                length_m: 1.0,
                torques_nm: vec![-50.0, -25.0, 0.0, 25.0, 50.0],
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::example_robot;

    const EXAMPLE: &str = r#"{ "delta_t_ms": 40, "gravity": 9.81,
      "joints": [ { "name": "j1", "q_min_deg": -135, "q_max_deg": 135, "delta_q_deg": 2,
                    "v_min_deg_s": -180, "v_max_deg_s": 180, "mass_kg": 1.0, "length_m": 1.0,
                    "torques_nm": [-50, -25, 0, 25, 50] } ] }"#;

    #[test]
    fn parses_example_config() {
        let config = RobotConfig::from_json(EXAMPLE).unwrap();
        assert_eq!(config, RobotConfig::example());
        let robot = config.to_robot().unwrap();
        assert_eq!(robot, example_robot());
    }

    #[test]
    fn gravity_defaults() {
        let text = EXAMPLE.replace("\"gravity\": 9.81,", "");
        let config = RobotConfig::from_json(&text).unwrap();
        assert_eq!(config.gravity, 9.81);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = EXAMPLE.replace("\"gravity\"", "\"gravity\": 1, \"extra\"");
        assert!(RobotConfig::from_json(&text).is_err());
        let text = EXAMPLE.replace("\"mass_kg\"", "\"colour\": 1, \"mass_kg\"");
        assert!(RobotConfig::from_json(&text).is_err());
    }

    #[test]
    fn bad_values_rejected() {
        let mut c = RobotConfig::example();
        c.delta_t_ms = 0.0;
        assert!(c.to_robot().is_err());
        let mut c = RobotConfig::example();
        c.joints[0].delta_q_deg = 4.0;
        assert!(c.to_robot().is_err());
        let mut c = RobotConfig::example();
        c.joints[0].torques_nm = vec![-1.0, 1.0];
        assert!(c.to_robot().is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = RobotConfig::from_json(EXAMPLE).unwrap();
        let compact: String = EXAMPLE.split_whitespace().collect();
        let b = RobotConfig::from_json(&compact).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);
        let mut c = a.clone();
        c.gravity = 1.0;
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
