//! SFMD checkpoint format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "SFMD" | u32 version=1 | u32 model-kind | u32 parameter count
//! per parameter:
//!   u32 name length | name bytes | u8 frozen | u32 rank | u32 dims[rank]
//!   | f32 data[product(dims)]
//! ```
//!
//! Parameters are stored in each model's canonical order; loading verifies
//! name, shape, and order so a corrupt or mismatched file fails loudly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::config::ArchitectureConfig;
use super::depth::DepthNet;
use super::fusion::FusionConditionalNet;
use super::gated::WeightedGateNet;
use super::naive::NaiveConcatNet;
use super::segmentation::SegmentationAutoencoder;
use super::stack::{FusionHead, SteeringStack};
use crate::error::{Error, Result};
use crate::numerics::{Param, Tensor};
use crate::rng::Rng;

pub const SFMD_MAGIC: &[u8; 4] = b"SFMD";
pub const SFMD_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Depth = 1,
    Segmentation = 2,
    FusionConditional = 3,
    FusionGated = 4,
    FusionNaive = 5,
}

impl ModelKind {
    fn from_u32(v: u32) -> Result<Self> {
        Ok(match v {
            1 => ModelKind::Depth,
            2 => ModelKind::Segmentation,
            3 => ModelKind::FusionConditional,
            4 => ModelKind::FusionGated,
            5 => ModelKind::FusionNaive,
            other => {
                return Err(Error::Format {
                    what: "SFMD header",
                    detail: format!("unknown model kind {}", other),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Depth => "depth",
            ModelKind::Segmentation => "segmentation",
            ModelKind::FusionConditional => "fusion-conditional",
            ModelKind::FusionGated => "fusion-gated",
            ModelKind::FusionNaive => "fusion-naive",
        }
    }
}

fn write_params(path: &Path, kind: ModelKind, params: &[(String, &Param)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(SFMD_MAGIC).map_err(io_err)?;
    w.write_all(&SFMD_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(kind as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(params.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (name, param) in params {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(bytes).map_err(io_err)?;
        w.write_all(&[param.frozen as u8]).map_err(io_err)?;
        let shape = param.value.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes()).map_err(io_err)?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes()).map_err(io_err)?;
        }
        let mut buf = Vec::with_capacity(param.value.len() * 4);
        for v in param.value.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

struct StoredParam {
    name: String,
    frozen: bool,
    tensor: Tensor,
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_params(path: &Path) -> Result<(ModelKind, Vec<StoredParam>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != SFMD_MAGIC {
        return Err(Error::Format {
            what: "SFMD header",
            detail: format!("bad magic {:?}", magic),
        });
    }
    let version = read_u32(&mut r, path)?;
    if version != SFMD_VERSION {
        return Err(Error::Format {
            what: "SFMD header",
            detail: format!("unsupported version {}", version),
        });
    }
    let kind = ModelKind::from_u32(read_u32(&mut r, path)?)?;
    let count = read_u32(&mut r, path)? as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r, path)? as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf).map_err(|e| Error::io(path, e))?;
        let name = String::from_utf8(name_buf).map_err(|e| Error::Format {
            what: "SFMD parameter name",
            detail: e.to_string(),
        })?;
        let mut frozen_buf = [0u8; 1];
        r.read_exact(&mut frozen_buf).map_err(|e| Error::io(path, e))?;
        let rank = read_u32(&mut r, path)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r, path)? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data_buf = vec![0u8; len * 4];
        r.read_exact(&mut data_buf).map_err(|e| Error::io(path, e))?;
        let data: Vec<f32> = data_buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        params.push(StoredParam {
            name,
            frozen: frozen_buf[0] != 0,
            tensor: Tensor::new(shape, data),
        });
    }
    Ok((kind, params))
}

fn apply_params(stored: Vec<StoredParam>, targets: Vec<(String, &mut Param)>) -> Result<()> {
    if stored.len() != targets.len() {
        return Err(Error::Format {
            what: "SFMD parameters",
            detail: format!("expected {} parameters, file has {}", targets.len(), stored.len()),
        });
    }
    for (entry, (name, param)) in stored.into_iter().zip(targets) {
        if entry.name != name {
            return Err(Error::Format {
                what: "SFMD parameters",
                detail: format!("expected parameter {}, file has {}", name, entry.name),
            });
        }
        if entry.tensor.shape() != param.value.shape() {
            return Err(Error::Format {
                what: "SFMD parameters",
                detail: format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    name,
                    entry.tensor.shape(),
                    param.value.shape()
                ),
            });
        }
        param.value = entry.tensor;
        param.frozen = entry.frozen;
    }
    Ok(())
}

pub fn save_depth_net(path: &Path, net: &DepthNet) -> Result<()> {
    let params: Vec<(String, &Param)> = net
        .named_params()
        .into_iter()
        .map(|(n, p)| (n.to_string(), p))
        .collect();
    write_params(path, ModelKind::Depth, &params)
}

pub fn load_depth_net(path: &Path) -> Result<DepthNet> {
    let (kind, stored) = read_params(path)?;
    if kind != ModelKind::Depth {
        return Err(Error::WrongModelKind {
            expected: "depth",
            found: kind.name().to_string(),
        });
    }
    let mut net = DepthNet::new(ArchitectureConfig::default(), &mut Rng::new(0));
    apply_params(
        stored,
        net.named_params_mut()
            .into_iter()
            .map(|(n, p)| (n.to_string(), p))
            .collect(),
    )?;
    Ok(net)
}

pub fn save_autoencoder(path: &Path, net: &SegmentationAutoencoder) -> Result<()> {
    write_params(path, ModelKind::Segmentation, &net.named_params())
}

pub fn load_autoencoder(path: &Path) -> Result<SegmentationAutoencoder> {
    let (kind, stored) = read_params(path)?;
    if kind != ModelKind::Segmentation {
        return Err(Error::WrongModelKind {
            expected: "segmentation",
            found: kind.name().to_string(),
        });
    }
    let mut net = SegmentationAutoencoder::new(ArchitectureConfig::default(), &mut Rng::new(0));
    apply_params(stored, net.named_params_mut())?;
    Ok(net)
}

pub fn save_stack(path: &Path, stack: &mut SteeringStack) -> Result<()> {
    let kind = match stack.head {
        FusionHead::Conditional(_) => ModelKind::FusionConditional,
        FusionHead::Gated(_) => ModelKind::FusionGated,
        FusionHead::Naive(_) => ModelKind::FusionNaive,
    };
    let params: Vec<(String, Param)> = stack
        .named_params_mut()
        .into_iter()
        .map(|(n, p)| (n, p.clone()))
        .collect();
    let refs: Vec<(String, &Param)> = params.iter().map(|(n, p)| (n.clone(), p)).collect();
    write_params(path, kind, &refs)
}

pub fn load_stack(path: &Path) -> Result<SteeringStack> {
    let (kind, stored) = read_params(path)?;
    let config = ArchitectureConfig::default();
    let mut rng = Rng::new(0);
    let head = match kind {
        ModelKind::FusionConditional => {
            FusionHead::Conditional(FusionConditionalNet::new(config, &mut rng))
        }
        ModelKind::FusionGated => FusionHead::Gated(WeightedGateNet::new(config, &mut rng)),
        ModelKind::FusionNaive => FusionHead::Naive(NaiveConcatNet::new(config, &mut rng)),
        other => {
            return Err(Error::WrongModelKind {
                expected: "fusion stack",
                found: other.name().to_string(),
            })
        }
    };
    let mut stack = SteeringStack {
        config,
        depth_net: DepthNet::new(config, &mut rng),
        autoencoder: SegmentationAutoencoder::new(config, &mut rng),
        head,
    };
    apply_params(stored, stack.named_params_mut())?;
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_net_round_trips_bit_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("depth.sfmd");
        let mut rng = Rng::new(7);
        let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        net.freeze_perception();
        save_depth_net(&path, &net).unwrap();
        let mut loaded = load_depth_net(&path).unwrap();
        for ((n1, p1), (n2, p2)) in net.named_params_mut().iter().zip(loaded.named_params_mut().iter()) {
            assert_eq!(n1, n2);
            assert_eq!(p1.frozen, p2.frozen);
            assert_eq!(p1.value.data(), p2.value.data());
        }
        // Same input, same prediction.
        let x = Tensor::uniform(vec![1, 128, 128], 1.0, &mut rng);
        assert_eq!(net.forward(&x), loaded.forward(&x));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("depth.sfmd");
        let mut rng = Rng::new(8);
        let net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
        save_depth_net(&path, &net).unwrap();
        match load_autoencoder(&path) {
            Err(Error::WrongModelKind { .. }) => {}
            _ => panic!("expected model-kind error"),
        }
    }

    #[test]
    fn stack_round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stack.sfmd");
        let config = ArchitectureConfig::default();
        let mut rng = Rng::new(9);
        let mut stack = SteeringStack {
            config,
            depth_net: DepthNet::new(config, &mut rng),
            autoencoder: SegmentationAutoencoder::new(config, &mut rng),
            head: FusionHead::Gated(WeightedGateNet::new(config, &mut rng)),
        };
        save_stack(&path, &mut stack).unwrap();
        let mut loaded = load_stack(&path).unwrap();
        let depth = Tensor::uniform(vec![1, 128, 128], 0.5, &mut rng);
        let rgb = Tensor::uniform(vec![3, 128, 128], 0.5, &mut rng);
        let (a, ga) = stack.predict(&depth, &rgb);
        let (b, gb) = loaded.predict(&depth, &rgb);
        assert_eq!(a, b);
        assert_eq!(ga.m_d, gb.m_d);
        assert_eq!(ga.m_e, gb.m_e);
    }
}
