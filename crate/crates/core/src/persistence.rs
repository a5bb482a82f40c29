//! Binary model artifacts.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic  "MVRBM\0v1"                       8 bytes
//! kind   u32: 0 = mvrbm, 1 = rbm, 2 = mmvrbm
//! dims   u32 × n
//!          mvrbm:  I J K L
//!          rbm:    visible hidden
//!          mmvrbm: I J K L E, then He We for each feature channel
//! params f64, each matrix row-major
//!          mvrbm:  U V B C
//!          rbm:    W b c
//!          mmvrbm: U V B C, then Qe Re Ae for each feature channel
//! crc    u64: CRC-64/XZ of everything before it
//! ```

use std::path::Path;

use crc::{Crc, CRC_64_XZ};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::multimodal::{Channel, MultimodalParams};
use crate::rbm::RbmParams;
use crate::trainer::ParamSet;
use crate::MvrbmParams;

type Shape = (usize, usize);

pub const MAGIC: &[u8; 8] = b"MVRBM\0v1";
const MAGIC_PREFIX: &[u8; 7] = b"MVRBM\0v";
const CRC: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);
/// Upper bound on the number of stored floats, guarding against absurd headers.
const MAX_FLOATS: usize = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mvrbm = 0,
    Rbm = 1,
    Multimodal = 2,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mvrbm => "mvrbm",
            ModelKind::Rbm => "rbm",
            ModelKind::Multimodal => "mmvrbm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Mvrbm(MvrbmParams),
    Rbm(RbmParams),
    Multimodal(MultimodalParams),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Mvrbm(_) => ModelKind::Mvrbm,
            Model::Rbm(_) => ModelKind::Rbm,
            Model::Multimodal(_) => ModelKind::Multimodal,
        }
    }

    fn header_dims(&self) -> Vec<usize> {
        match self {
            Model::Mvrbm(p) => {
                let ((i, j), (k, l)) = (p.visible_dims(), p.hidden_dims());
                vec![i, j, k, l]
            }
            Model::Rbm(p) => vec![p.visible_len(), p.hidden_len()],
            Model::Multimodal(p) => {
                let dims = p.channel_dims();
                let (k, l) = p.hidden_dims();
                let mut d = vec![dims[0].0, dims[0].1, k, l, dims.len() - 1];
                d.extend(dims[1..].iter().flat_map(|&(h, w)| [h, w]));
                d
            }
        }
    }

    fn payload_order(&self) -> Vec<&[f64]> {
        fn flat(m: &Array2<f64>) -> &[f64] {
            m.as_slice().expect("standard layout")
        }
        match self {
            Model::Mvrbm(p) => vec![flat(p.u()), flat(p.v()), flat(p.b()), flat(p.c())],
            Model::Rbm(p) => {
                vec![flat(p.w()), p.b().as_slice().expect("contiguous"), p.c().as_slice().expect("contiguous")]
            }
            Model::Multimodal(p) => {
                let ch = p.channels();
                let mut v = vec![flat(&ch[0].left), flat(&ch[0].right), flat(&ch[0].bias), flat(p.hidden_bias())];
                for e in &ch[1..] {
                    v.extend([flat(&e.left), flat(&e.right), flat(&e.bias)]);
                }
                v
            }
        }
    }
}

fn standard(m: &Array2<f64>) -> Array2<f64> {
    if m.is_standard_layout() {
        m.clone()
    } else {
        m.as_standard_layout().to_owned()
    }
}

fn normalised(model: &Model) -> Model {
    match model {
        Model::Mvrbm(p) => {
            Model::Mvrbm(MvrbmParams { u: standard(p.u()), v: standard(p.v()), b: standard(p.b()), c: standard(p.c()) })
        }
        Model::Rbm(p) => Model::Rbm(RbmParams {
            w: standard(p.w()),
            b: p.b().as_standard_layout().to_owned(),
            c: p.c().as_standard_layout().to_owned(),
        }),
        Model::Multimodal(p) => {
            let mut q = p.clone();
            for ch in q.channels_mut() {
                ch.left = standard(&ch.left);
                ch.right = standard(&ch.right);
                ch.bias = standard(&ch.bias);
            }
            Model::Multimodal(MultimodalParams::new(q.channels().to_vec(), standard(q.hidden_bias())).expect("valid"))
        }
    }
}

/// Serialises a model. Identical parameters give identical bytes.
pub fn encode(model: &Model) -> Result<Vec<u8>> {
    let model = normalised(model);
    let all_finite = match &model {
        Model::Mvrbm(p) => p.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())),
        Model::Rbm(p) => p.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())),
        Model::Multimodal(p) => p.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())),
    };
    if !all_finite {
        return Err(Error::InvalidValue("refusing to save non-finite parameters".into()));
    }
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&(model.kind() as u32).to_le_bytes());
    for d in model.header_dims() {
        let d = u32::try_from(d).map_err(|_| Error::InvalidValue(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for block in model.payload_order() {
        for x in block {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = CRC.checksum(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u32(&mut self) -> Result<usize> {
        let b = self
            .bytes
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| Error::Format(format!("artifact header truncated at byte {}", self.bytes.len())))?;
        self.pos += 4;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        let n = rows * cols;
        let data = self.bytes[self.pos..self.pos + 8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        self.pos += 8 * n;
        Array2::from_shape_vec((rows, cols), data).expect("shape matches length")
    }
}

fn checked_floats(blocks: &[(usize, usize)]) -> Result<usize> {
    blocks
        .iter()
        .try_fold(0usize, |acc, &(r, c)| r.checked_mul(c).and_then(|n| acc.checked_add(n)))
        .filter(|&n| n <= MAX_FLOATS)
        .ok_or_else(|| Error::Format("artifact dimensions are implausibly large".into()))
}

/// Parses an artifact, verifying magic, layout and checksum.
pub fn decode(bytes: &[u8]) -> Result<Model> {
    match bytes.get(..8) {
        Some(m) if m == MAGIC => {}
        Some(m) if m.starts_with(MAGIC_PREFIX) => {
            return Err(Error::Format(format!("unsupported artifact version {:?}", m[7] as char)));
        }
        _ => return Err(Error::Format("bad magic: not an MVRBM model artifact".into())),
    }
    let mut r = Reader { bytes, pos: 8 };
    let kind = match r.u32()? {
        0 => ModelKind::Mvrbm,
        1 => ModelKind::Rbm,
        2 => ModelKind::Multimodal,
        k => return Err(Error::Format(format!("unknown model kind {k}"))),
    };
    let (blocks, extra_dims): (Vec<Shape>, Vec<Shape>) = match kind {
        ModelKind::Mvrbm | ModelKind::Multimodal => {
            let (i, j, k, l) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
            let mut blocks = vec![(k, i), (l, j), (i, j), (k, l)];
            let mut extras = Vec::new();
            if kind == ModelKind::Multimodal {
                let e = r.u32()?;
                if e > (bytes.len() / 8) {
                    return Err(Error::Format(format!("implausible channel count {e}")));
                }
                for _ in 0..e {
                    let (h, w) = (r.u32()?, r.u32()?);
                    extras.push((h, w));
                    blocks.extend([(k, h), (l, w), (h, w)]);
                }
            }
            (blocks, extras)
        }
        ModelKind::Rbm => {
            let (n, m) = (r.u32()?, r.u32()?);
            (vec![(n, m), (1, n), (1, m)], Vec::new())
        }
    };
    let floats = checked_floats(&blocks)?;
    let expected = r.pos + 8 * floats + 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload length mismatch: header implies {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let body = &bytes[..expected - 8];
    let stored = u64::from_le_bytes(bytes[expected - 8..].try_into().expect("8 bytes"));
    let computed = CRC.checksum(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut mats = blocks.iter().map(|&(rows, cols)| r.matrix(rows, cols)).collect::<Vec<_>>().into_iter();
    let mut next = || mats.next().expect("block count");
    let corrupt = |e: Error| Error::Format(format!("artifact holds an invalid model: {e}"));
    Ok(match kind {
        ModelKind::Mvrbm => Model::Mvrbm(MvrbmParams::new(next(), next(), next(), next()).map_err(corrupt)?),
        ModelKind::Rbm => {
            let w = next();
            let vec = |m: Array2<f64>| Array1::from_vec(m.into_raw_vec_and_offset().0);
            let (b, c) = (vec(next()), vec(next()));
            Model::Rbm(RbmParams::new(w, b, c).map_err(corrupt)?)
        }
        ModelKind::Multimodal => {
            let (left, right, bias) = (next(), next(), next());
            let c = next();
            let mut channels = vec![Channel { left, right, bias }];
            for _ in &extra_dims {
                channels.push(Channel { left: next(), right: next(), bias: next() });
            }
            Model::Multimodal(MultimodalParams::new(channels, c).map_err(corrupt)?)
        }
    })
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(model)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    decode(&std::fs::read(path)?)
}
