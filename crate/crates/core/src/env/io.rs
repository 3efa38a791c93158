use std::fs;
use std::path::Path;

use super::EnvironmentSpec;
use crate::error::Result;

/// Read and validate an environment file. Parse failures and invariant
/// violations both surface as errors naming the problem.
pub fn load_environment(path: impl AsRef<Path>) -> Result<EnvironmentSpec> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_environment(path: impl AsRef<Path>, env: &EnvironmentSpec) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(env)?)?;
    Ok(())
}
