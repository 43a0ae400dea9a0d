use std::fs;
use std::path::{Path, PathBuf};

use fcgrasp::hand::HandModel;
use fcgrasp::presets;
use fcgrasp::sdf::Shape;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Raw text of an input plus where it came from.
#[derive(Debug, Clone)]
pub struct Input {
    pub source: String,
    pub text: String,
}

/// Manifest entry for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub source: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Input {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            source: path.display().to_string(),
            text,
        })
    }

    /// A file path if it exists, otherwise a built-in preset name.
    fn resolve(arg: &str, preset: fn(&str) -> fcgrasp::Result<&'static str>, kind: &str) -> CliResult<Self> {
        let path = PathBuf::from(arg);
        if path.exists() {
            return Self::read(&path);
        }
        match preset(arg) {
            Ok(text) => Ok(Self {
                source: format!("builtin:{arg}"),
                text: text.to_string(),
            }),
            Err(_) => Err(CliError::Input(format!("{arg}: no such file or built-in {kind}"))),
        }
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.text.as_bytes())
    }

    pub fn record(&self, role: &str) -> InputRecord {
        InputRecord {
            role: role.to_string(),
            source: self.source.clone(),
            sha256: self.sha256(),
        }
    }

    pub fn parse_json<T: DeserializeOwned>(&self) -> CliResult<T> {
        serde_json::from_str(&self.text).map_err(|e| CliError::Input(format!("{}: {e}", self.source)))
    }
}

pub fn load_shape(arg: &str) -> CliResult<(Shape, Input)> {
    let input = Input::resolve(arg, presets::shape_json, "shape")?;
    let shape = Shape::from_json(&input.text).map_err(|e| CliError::at(&input.source, e))?;
    Ok((shape, input))
}

pub fn load_hand(arg: &str) -> CliResult<(HandModel, Input)> {
    let input = Input::resolve(arg, presets::hand_json, "hand")?;
    let model = HandModel::from_json(&input.text).map_err(|e| CliError::at(&input.source, e))?;
    Ok((model, input))
}
