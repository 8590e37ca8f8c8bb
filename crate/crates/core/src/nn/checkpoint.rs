//! Flat parameter checkpoints: one JSON header line followed by little-endian `f64`s.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Activation, Mlp};
use crate::error::{Error, Result};

pub fn write<H: Serialize>(path: &Path, header: &H, params: &[f64]) -> Result<()> {
    let mut bytes = serde_json::to_vec(header)?;
    bytes.push(b'\n');
    bytes.reserve(params.len() * 8);
    for p in params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read<H: DeserializeOwned>(path: &Path) -> Result<(H, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let split = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::Checkpoint(format!("{}: missing header line", path.display())))?;
    let header: H = serde_json::from_slice(&bytes[..split])?;
    let body = &bytes[split + 1..];
    if body.len() % 8 != 0 {
        return Err(Error::Checkpoint(format!("{}: truncated parameter block", path.display())));
    }
    let params = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHeader {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub n_params: usize,
}

impl MlpHeader {
    pub fn of(net: &Mlp) -> Self {
        Self { sizes: net.sizes().to_vec(), activation: net.hidden_activation(), n_params: net.n_params() }
    }
}

pub fn write_mlp(path: &Path, net: &Mlp) -> Result<()> {
    write(path, &MlpHeader::of(net), net.params())
}

pub fn read_mlp(path: &Path) -> Result<Mlp> {
    let (h, params): (MlpHeader, _) = read(path)?;
    if h.n_params != params.len() {
        return Err(Error::Checkpoint(format!(
            "{}: header declares {} parameters, found {}",
            path.display(),
            h.n_params,
            params.len()
        )));
    }
    Mlp::from_params(&h.sizes, h.activation, params)
}
