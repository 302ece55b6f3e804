//! Binary model snapshots.
//!
//! Layout, all little-endian: magic `MLDA1`, K (u64), V (u64), η (f64),
//! α (K × f64), updates seen (u64), then λ as K×V row-major f64.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{LdaConfig, LdaModel};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"MLDA1";

impl LdaModel {
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.num_topics() as u64).to_le_bytes())?;
        w.write_all(&(self.vocab_size() as u64).to_le_bytes())?;
        w.write_all(&self.config().eta.to_le_bytes())?;
        for a in &self.config().alpha {
            w.write_all(&a.to_le_bytes())?;
        }
        w.write_all(&self.updates_seen().to_le_bytes())?;
        for x in self.lambda() {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()
    }

    /// Reads a snapshot. Schedule settings are not stored, so they take
    /// the values of `template`; K, η and α come from the file.
    pub fn read_snapshot<R: Read>(mut r: R, template: &LdaConfig) -> Result<Self> {
        let mut magic = [0u8; 5];
        read_exact(&mut r, &mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic bytes".into()));
        }
        let k = read_u64(&mut r)? as usize;
        let v = read_u64(&mut r)? as usize;
        if k == 0 || v == 0 || k.checked_mul(v).is_none() {
            return Err(Error::Snapshot(format!("bad dimensions {k}x{v}")));
        }
        let eta = read_f64(&mut r)?;
        let alpha = (0..k).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let updates_seen = read_u64(&mut r)?;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw).map_err(|e| Error::Snapshot(e.to_string()))?;
        if raw.len() != k * v * 8 {
            return Err(Error::Snapshot(format!(
                "expected {} bytes of topic parameters, found {}",
                k * v * 8,
                raw.len()
            )));
        }
        let lambda = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let config = LdaConfig {
            num_topics: k,
            eta,
            alpha,
            ..template.clone()
        };
        LdaModel::from_lambda(config, v, lambda, updates_seen)
            .map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_snapshot(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, template: &LdaConfig) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_snapshot(BufReader::new(file), template)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::Snapshot(format!("truncated header: {e}")))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::make_asymmetric_prior;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let cfg = LdaConfig::new(2).unwrap().with_alpha(vec![5.0, 5.0]);
        let model = LdaModel::from_lambda(cfg, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 7).unwrap();
        let mut buf = Vec::new();
        model.write_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"MLDA1");
        assert_eq!(u64::from_le_bytes(buf[5..13].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[13..21].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(buf[21..29].try_into().unwrap()), 0.1);
        assert_eq!(u64::from_le_bytes(buf[45..53].try_into().unwrap()), 7);
        assert_eq!(buf.len(), 53 + 6 * 8);
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let cfg = LdaConfig::new(2).unwrap();
        let model = LdaModel::init(cfg.clone(), 4).unwrap();
        let mut buf = Vec::new();
        model.write_snapshot(&mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(LdaModel::read_snapshot(&bad[..], &cfg).is_err());
        assert!(LdaModel::read_snapshot(&buf[..buf.len() - 1], &cfg).is_err());
        assert!(LdaModel::read_snapshot(&buf[..10], &cfg).is_err());
    }

    proptest! {
        #[test]
        fn snapshot_roundtrip_is_bit_exact(k in 2usize..6, v in 1usize..20, seed in any::<u64>(), updates in any::<u64>()) {
            let cfg = LdaConfig::new(k).unwrap().with_alpha(make_asymmetric_prior(k).unwrap()).with_seed(seed);
            let base = LdaModel::init(cfg.clone(), v).unwrap();
            let model = LdaModel::from_lambda(cfg.clone(), v, base.lambda().to_vec(), updates).unwrap();
            let mut buf = Vec::new();
            model.write_snapshot(&mut buf).unwrap();
            let back = LdaModel::read_snapshot(&buf[..], &cfg).unwrap();
            prop_assert_eq!(&back, &model);
            let mut again = Vec::new();
            back.write_snapshot(&mut again).unwrap();
            prop_assert_eq!(again, buf);
        }
    }
}
