//! Model checkpoints: `u64` little-endian header length, a JSON header that
//! maps each array name to its shape and byte offset, then the arrays as
//! little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::model::{ModelDims, ModelState};

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: [usize; 2],
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dims: DimsRecord,
    arrays: Vec<ArrayEntry>,
}

#[derive(Serialize, Deserialize)]
struct DimsRecord {
    n_views: usize,
    feature_dim: usize,
    hidden_dim: usize,
    rep_dim: usize,
    gcn_layers: usize,
    generative: bool,
}

impl From<ModelDims> for DimsRecord {
    fn from(d: ModelDims) -> Self {
        Self {
            n_views: d.n_views,
            feature_dim: d.feature_dim,
            hidden_dim: d.hidden_dim,
            rep_dim: d.rep_dim,
            gcn_layers: d.gcn_layers,
            generative: d.generative,
        }
    }
}

impl From<&DimsRecord> for ModelDims {
    fn from(d: &DimsRecord) -> Self {
        Self {
            n_views: d.n_views,
            feature_dim: d.feature_dim,
            hidden_dim: d.hidden_dim,
            rep_dim: d.rep_dim,
            gcn_layers: d.gcn_layers,
            generative: d.generative,
        }
    }
}

pub fn write_checkpoint<W: Write>(state: &ModelState<f64>, mut w: W) -> Result<()> {
    let mut arrays = Vec::new();
    let mut offset = 0;
    for (name, _, m) in state.named() {
        arrays.push(ArrayEntry {
            name,
            shape: [m.n_rows(), m.n_cols()],
            offset,
        });
        offset += m.len() * 8;
    }
    let header = serde_json::to_vec(&Header {
        dims: state.dims.into(),
        arrays,
    })?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    for (_, _, m) in state.named() {
        for v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelState<f64>> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 30 {
        return Err(Error::Format(format!("checkpoint header of {len} bytes")));
    }
    let mut header = vec![0u8; len];
    r.read_exact(&mut header)?;
    let header: Header = serde_json::from_slice(&header)?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;

    let dims = ModelDims::from(&header.dims);
    if dims.gcn_layers == 0 {
        return Err(Error::Format("checkpoint declares zero GCN layers".into()));
    }
    let mut state = ModelState::init(dims, 0);
    let expected: Vec<String> = state.named().into_iter().map(|(n, _, _)| n).collect();
    let found: Vec<&str> = header.arrays.iter().map(|a| a.name.as_str()).collect();
    if expected != found {
        return Err(Error::Format(format!(
            "checkpoint arrays {found:?} do not match model layout {expected:?}"
        )));
    }
    for a in &header.arrays {
        let count = a.shape[0] * a.shape[1];
        let bytes = body
            .get(a.offset..a.offset + count * 8)
            .ok_or_else(|| Error::Format(format!("array {} runs past end of file", a.name)))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let m = DenseMatrix::from_vec(a.shape[0], a.shape[1], data)?;
        let slot = state.param_mut(&a.name).expect("name checked against layout");
        if slot.shape() != m.shape() {
            return Err(Error::Format(format!(
                "array {} has shape {:?}, model expects {:?}",
                a.name,
                m.shape(),
                slot.shape()
            )));
        }
        *slot = m;
    }
    Ok(state)
}

pub fn save_checkpoint(state: &ModelState<f64>, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(state, f)
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState<f64>> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dims = ModelDims {
            n_views: 2,
            feature_dim: 5,
            hidden_dim: 4,
            rep_dim: 3,
            gcn_layers: 3,
            generative: true,
        };
        let mut state = ModelState::<f64>::init(dims, 11);
        state.view_learners[1].w1.set(0, 2, -0.125);
        let mut buf = Vec::new();
        write_checkpoint(&state, &mut buf).unwrap();
        assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), state);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dims = ModelDims {
            n_views: 1,
            feature_dim: 2,
            hidden_dim: 2,
            rep_dim: 2,
            gcn_layers: 1,
            generative: false,
        };
        let mut buf = Vec::new();
        write_checkpoint(&ModelState::<f64>::init(dims, 0), &mut buf).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
