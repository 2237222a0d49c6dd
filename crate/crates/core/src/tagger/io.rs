//! Binary model files and pretrained embedding import.
//!
//! Layout (little-endian): magic `STGR`, `u32` version, the configuration
//! block (seven `u32` sizes then seven `f64` training constants), a `u32`
//! tensor count, then per tensor `u32` name length, UTF-8 name, `u32`
//! rank, `u32` dims, and the row-major `f64` values.

use std::fs;
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

use super::{Matrix, Params, TaggerConfig, TaggerModel};

const MAGIC: &[u8; 4] = b"STGR";
const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl TaggerModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut buf = Vec::with_capacity(64 + self.params.n_values() * 8);
        buf.extend_from_slice(MAGIC);
        put_u32(&mut buf, VERSION as usize);
        for v in [
            c.n_layers,
            c.hidden,
            c.token_emb,
            c.feat_emb,
            c.n_labels,
            c.batch,
            c.max_len,
        ] {
            put_u32(&mut buf, v);
        }
        for v in [
            c.dropout,
            c.grad_scale,
            c.grad_clip.0,
            c.grad_clip.1,
            c.rho,
            c.epsilon,
            c.xavier_magnitude,
        ] {
            put_f64(&mut buf, v);
        }
        let tensors = self.params.named();
        put_u32(&mut buf, tensors.len());
        for (name, m) in tensors {
            put_u32(&mut buf, name.len());
            buf.extend_from_slice(name.as_bytes());
            put_u32(&mut buf, 2);
            put_u32(&mut buf, m.rows());
            put_u32(&mut buf, m.cols());
            for &v in m.data() {
                put_f64(&mut buf, v);
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION as usize {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut sizes = [0usize; 7];
        for s in &mut sizes {
            *s = r.u32()?;
        }
        let mut consts = [0f64; 7];
        for c in &mut consts {
            *c = r.f64()?;
        }
        let [n_layers, hidden, token_emb, feat_emb, n_labels, batch, max_len] = sizes;
        let [dropout, grad_scale, lo, hi, rho, epsilon, xavier_magnitude] = consts;
        let config = TaggerConfig {
            n_layers,
            hidden,
            token_emb,
            feat_emb,
            n_labels,
            dropout,
            batch,
            grad_scale,
            grad_clip: (lo, hi),
            rho,
            epsilon,
            xavier_magnitude,
            max_len,
        };
        config.validate()?;

        let n_tensors = r.u32()?;
        let mut loaded = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let len = r.u32()?;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
                .to_owned();
            let rank = r.u32()?;
            let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let (rows, cols) = match dims[..] {
                [n] => (1, n),
                [a, b] => (a, b),
                _ => return Err(Error::Format(format!("{name}: unsupported rank {rank}"))),
            };
            let data = (0..rows * cols)
                .map(|_| r.f64())
                .collect::<Result<Vec<_>>>()?;
            loaded.push((name, Matrix::from_vec(rows, cols, data)?));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes".into()));
        }

        let vocab_size = loaded
            .iter()
            .find(|(n, _)| n == "token_embeddings")
            .map(|(_, m)| m.rows())
            .ok_or_else(|| Error::Format("missing token_embeddings".into()))?;
        let mut params = Params::zeros(&config, vocab_size);
        let slots = params.named_mut();
        if slots.len() != loaded.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, found {}",
                slots.len(),
                loaded.len()
            )));
        }
        for ((want, slot), (name, m)) in slots.into_iter().zip(loaded) {
            if want != name {
                return Err(Error::Format(format!(
                    "expected tensor {want}, found {name}"
                )));
            }
            if slot.shape() != m.shape() {
                return Err(Error::Format(format!(
                    "{name}: shape {:?}, expected {:?}",
                    m.shape(),
                    slot.shape()
                )));
            }
            *slot = m;
        }
        TaggerModel::from_parts(config, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Overwrites token embedding rows with vectors from a `token v1 … vd`
/// text file; returns how many vocabulary entries were matched. A leading
/// `count dim` header line is skipped.
pub fn load_pretrained_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    model: &mut TaggerModel,
) -> Result<usize> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dim = model.config.token_emb;
    let mut matched = std::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(' ').filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            continue;
        }
        if fields.len() - 1 != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: fields.len() - 1,
            });
        }
        let Some(id) = vocab.get(fields[0]) else {
            continue;
        };
        let values = fields[1..]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse(path, i + 1, "bad vector value"))?;
        model
            .params
            .token_embeddings
            .row_mut(id)
            .copy_from_slice(&values);
        matched.insert(id);
    }
    Ok(matched.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> TaggerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        TaggerModel::new(TaggerConfig::small(4, 2), 3, &mut rng).unwrap()
    }

    #[test]
    fn bit_exact_round_trip() {
        let m = tiny();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"STGR");
        let back = TaggerModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = tiny().to_bytes();
        assert!(TaggerModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(TaggerModel::from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(TaggerModel::from_bytes(&extra).is_err());
    }

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["a", "b"], 10)
    }

    #[test]
    fn pretrained_full_and_partial() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vec.txt");

        let mut m = tiny();
        let before = m.clone();
        std::fs::write(&p, "").unwrap();
        assert_eq!(load_pretrained_embeddings(&p, &vocab(), &mut m).unwrap(), 0);
        assert_eq!(m, before);

        std::fs::write(&p, "zz 1 1\nb 0.5 -0.5\n").unwrap();
        assert_eq!(load_pretrained_embeddings(&p, &vocab(), &mut m).unwrap(), 1);
        let b = vocab().id("b");
        assert_eq!(m.params.token_embeddings.row(b), &[0.5, -0.5]);
        for r in (0..3).filter(|&r| r != b) {
            assert_eq!(
                m.params.token_embeddings.row(r),
                before.params.token_embeddings.row(r)
            );
        }

        std::fs::write(&p, "2 2\n<UNK> 0 0\na 1 1\nb 2 2\n").unwrap();
        assert_eq!(load_pretrained_embeddings(&p, &vocab(), &mut m).unwrap(), 3);

        std::fs::write(&p, "a 1 2 3\n").unwrap();
        assert!(matches!(
            load_pretrained_embeddings(&p, &vocab(), &mut m),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }
}
