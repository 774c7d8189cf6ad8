use std::path::Path;

use gaitkin_core::tcn::{decode_model, encode_model, TcnModel};

use super::{create_parent, IoError};

pub fn save_model(path: &Path, model: &TcnModel) -> Result<(), IoError> {
    create_parent(path)?;
    std::fs::write(path, encode_model(model)).map_err(|e| IoError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TcnModel, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_model(&bytes).map_err(|source| IoError::Model {
        path: path.to_path_buf(),
        source,
    })
}
