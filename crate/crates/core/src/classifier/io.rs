//! Versioned binary model file for a fitted ensemble, plus the text summary
//! behind `model inspect`.

use std::fs;
use std::path::Path;

use crate::classifier::lda::{BagLda, LdaClassModel};
use crate::classifier::likelihood::ProjectionStats;
use crate::classifier::{BootstrapUnit, ClassifierConfig, CovarianceMode, LdaEnsemble};
use crate::error::{Error, Result};
use crate::util::fnv1a64;

const MAGIC: &[u8; 4] = b"VSEM";
const VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::BadModel {
                path: "<buffer>".into(),
                reason: "truncated".into(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// A model file: the ensemble plus the provenance stamped into the header.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredEnsemble {
    pub ensemble: LdaEnsemble,
    pub config_hash: u64,
    pub seed: u64,
}

pub fn encode_ensemble(ens: &LdaEnsemble, config_hash: u64, seed: u64) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(VERSION);
    w.u16(0);
    w.u64(config_hash);
    w.u64(seed);
    w.u32(ens.config.n_bags as u32);
    w.u8(ens.config.bootstrap as u8);
    w.u8(match ens.config.bootstrap_unit {
        BootstrapUnit::Frame => 0,
        BootstrapUnit::Utterance => 1,
    });
    w.u8(match ens.config.covariance {
        CovarianceMode::Pooled => 0,
        CovarianceMode::PerClass => 1,
    });
    w.u8(0);
    w.u32(ens.class_count as u32);
    w.u32(ens.dim as u32);
    w.u32(ens.bags.len() as u32);
    for &s in &ens.bag_seeds {
        w.u64(s);
    }
    for bag in &ens.bags {
        match (&bag.pooled_whitener, &bag.class_whiteners) {
            (Some(pw), _) => {
                w.u8(1);
                w.f64s(pw);
            }
            (None, Some(cw)) => {
                w.u8(0);
                for m in cw {
                    w.f64s(m);
                }
            }
            _ => unreachable!("fitted bag has a whitener"),
        }
        for c in &bag.classes {
            w.f64s(&c.mean);
            w.f64s(&c.whitened_mean);
            w.f64s(&[
                c.stats.mu_in,
                c.stats.sigma_in,
                c.stats.mu_out,
                c.stats.sigma_out,
            ]);
            w.u8(c.borrowed_mean as u8);
            w.u8(c.borrowed_stats as u8);
        }
    }
    let checksum = fnv1a64(&w.0);
    w.u64(checksum);
    w.0
}

pub fn decode_ensemble(bytes: &[u8]) -> Result<StoredEnsemble> {
    let bad = |reason: &str| Error::BadModel {
        path: "<buffer>".into(),
        reason: reason.into(),
    };
    if bytes.len() < 12 {
        return Err(bad("too short"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a64(body) != stored {
        return Err(bad("checksum mismatch"));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(bad("bad magic"));
    }
    if r.u16()? != VERSION {
        return Err(bad("unsupported version"));
    }
    r.u16()?;
    let config_hash = r.u64()?;
    let seed = r.u64()?;
    let n_bags_cfg = r.u32()? as usize;
    let bootstrap = r.u8()? != 0;
    let bootstrap_unit = match r.u8()? {
        0 => BootstrapUnit::Frame,
        1 => BootstrapUnit::Utterance,
        _ => return Err(bad("bad bootstrap unit")),
    };
    let covariance = match r.u8()? {
        0 => CovarianceMode::Pooled,
        1 => CovarianceMode::PerClass,
        _ => return Err(bad("bad covariance mode")),
    };
    r.u8()?;
    let class_count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let n_bags = r.u32()? as usize;
    let mut bag_seeds = Vec::with_capacity(n_bags);
    for _ in 0..n_bags {
        bag_seeds.push(r.u64()?);
    }
    let mut bags = Vec::with_capacity(n_bags);
    for _ in 0..n_bags {
        let pooled = r.u8()? != 0;
        let (pooled_whitener, class_whiteners) = if pooled {
            (Some(r.f64s(dim * dim)?), None)
        } else {
            let mut ws = Vec::with_capacity(class_count);
            for _ in 0..class_count {
                ws.push(r.f64s(dim * dim)?);
            }
            (None, Some(ws))
        };
        let mut classes = Vec::with_capacity(class_count);
        for _ in 0..class_count {
            let mean = r.f64s(dim)?;
            let whitened_mean = r.f64s(dim)?;
            let s = r.f64s(4)?;
            let borrowed_mean = r.u8()? != 0;
            let borrowed_stats = r.u8()? != 0;
            classes.push(LdaClassModel {
                mean,
                whitened_mean,
                stats: ProjectionStats {
                    mu_in: s[0],
                    sigma_in: s[1],
                    mu_out: s[2],
                    sigma_out: s[3],
                },
                borrowed_mean,
                borrowed_stats,
            });
        }
        bags.push(BagLda {
            dim,
            pooled_whitener,
            class_whiteners,
            classes,
        });
    }
    Ok(StoredEnsemble {
        ensemble: LdaEnsemble {
            config: ClassifierConfig {
                n_bags: n_bags_cfg,
                bootstrap,
                bootstrap_unit,
                covariance,
            },
            class_count,
            dim,
            bags,
            bag_seeds,
        },
        config_hash,
        seed,
    })
}

pub fn save_ensemble(path: &Path, ens: &LdaEnsemble, config_hash: u64, seed: u64) -> Result<()> {
    fs::write(path, encode_ensemble(ens, config_hash, seed)).map_err(|e| Error::io(path, e))
}

pub fn load_ensemble(path: &Path) -> Result<StoredEnsemble> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ensemble(&bytes).map_err(|e| match e {
        Error::BadModel { reason, .. } => Error::BadModel {
            path: path.into(),
            reason,
        },
        other => other,
    })
}

/// Text summary of per-class projection statistics, averaged over bags.
pub fn inspect_ensemble(ens: &LdaEnsemble, class_names: Option<&[String]>) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "ensemble: {} bags, {} classes, dim {}",
        ens.bags.len(),
        ens.class_count,
        ens.dim
    );
    let _ = writeln!(
        out,
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>9} {:>9}",
        "class", "mu_in", "sigma_in", "mu_out", "sigma_out", "borrowed", "absent"
    );
    for c in 0..ens.class_count {
        let n = ens.bags.len() as f64;
        let mu_in: f64 = ens.bags.iter().map(|b| b.classes[c].stats.mu_in).sum::<f64>() / n;
        let sigma_in: f64 =
            ens.bags.iter().map(|b| b.classes[c].stats.sigma_in).sum::<f64>() / n;
        let mu_out: f64 = ens.bags.iter().map(|b| b.classes[c].stats.mu_out).sum::<f64>() / n;
        let sigma_out: f64 =
            ens.bags.iter().map(|b| b.classes[c].stats.sigma_out).sum::<f64>() / n;
        let borrowed = ens
            .bags
            .iter()
            .filter(|b| b.classes[c].borrowed_stats)
            .count();
        let absent = ens.bags.iter().filter(|b| b.classes[c].borrowed_mean).count();
        let name = class_names
            .and_then(|ns| ns.get(c).cloned())
            .unwrap_or_else(|| c.to_string());
        let _ = writeln!(
            out,
            "{name:<10} {mu_in:>10.4} {sigma_in:>10.4} {mu_out:>10.4} {sigma_out:>10.4} {borrowed:>9} {absent:>9}"
        );
    }
    out
}
