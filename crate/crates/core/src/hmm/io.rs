//! HMM files: UTF-8 JSON with labeled A, B, pi rows.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hmm::HmmModel;

pub fn save_hmm(path: impl AsRef<Path>, model: &HmmModel) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(model).expect("hmm serialization cannot fail");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_hmm(path: impl AsRef<Path>) -> Result<HmmModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: HmmModel = serde_json::from_str(&text).map_err(|e| Error::Hmm(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
