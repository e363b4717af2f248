//! Binary cache of killed-walk tables.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "KWTABLE\0" | version u32 | sha256 of the law [32] | n u64 | barrier u8 | mode u8
//! survival[0..=n] | p_tau[0..=n]
//! for k in 0..=n: present u8, then (if present) survivors pmf, killed pmf
//! pmf = offset i64 | len u64 | values
//! ```
//!
//! Values are `f64` bit patterns in float mode and length-prefixed `p/q`
//! strings in exact mode.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use killed_walk::increments::parse_probability;
use killed_walk::oracle::{KilledWalkTable, Pmf};
use killed_walk::{ArithmeticMode, BarrierKind, IncrementDistribution, Scalar};
use num_rational::BigRational;

use crate::distfile;

pub const MAGIC: [u8; 8] = *b"KWTABLE\0";
pub const VERSION: u32 = 1;

/// Scalars that know their on-disk encoding.
pub trait CacheScalar: Scalar {
    const MODE: ArithmeticMode;
    fn write_to(&self, w: &mut dyn Write) -> std::io::Result<()>;
    fn read_from(r: &mut dyn Read) -> Result<Self>;
}

impl CacheScalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn write_to(&self, w: &mut dyn Write) -> std::io::Result<()> {
        w.write_all(&self.to_bits().to_le_bytes())
    }

    fn read_from(r: &mut dyn Read) -> Result<Self> {
        Ok(f64::from_bits(read_u64(r)?))
    }
}

impl CacheScalar for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn write_to(&self, w: &mut dyn Write) -> std::io::Result<()> {
        let s = self.to_string();
        w.write_all(&(s.len() as u64).to_le_bytes())?;
        w.write_all(s.as_bytes())
    }

    fn read_from(r: &mut dyn Read) -> Result<Self> {
        let len = read_u64(r)? as usize;
        let mut buf = vec![0; len];
        r.read_exact(&mut buf)?;
        Ok(parse_probability(std::str::from_utf8(&buf)?)?)
    }
}

fn read_u64(r: &mut dyn Read) -> Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b).context("truncated cache file")?;
    Ok(u64::from_le_bytes(b))
}

fn barrier_code(b: BarrierKind) -> u8 {
    match b {
        BarrierKind::Strict => 0,
        BarrierKind::Weak => 1,
    }
}

fn mode_code(m: ArithmeticMode) -> u8 {
    match m {
        ArithmeticMode::Exact => 0,
        ArithmeticMode::Float => 1,
    }
}

fn write_pmf<T: CacheScalar>(w: &mut dyn Write, p: &Pmf<T>) -> std::io::Result<()> {
    w.write_all(&p.offset.to_le_bytes())?;
    w.write_all(&(p.probs.len() as u64).to_le_bytes())?;
    for v in &p.probs {
        v.write_to(w)?;
    }
    Ok(())
}

fn read_pmf<T: CacheScalar>(r: &mut dyn Read) -> Result<Pmf<T>> {
    let offset = read_u64(r)? as i64;
    let len = read_u64(r)? as usize;
    let probs = (0..len).map(|_| T::read_from(r)).collect::<Result<Vec<_>>>()?;
    Ok(Pmf { offset, probs })
}

pub fn write<T: CacheScalar>(
    w: &mut dyn Write,
    dist: &IncrementDistribution,
    table: &KilledWalkTable<T>,
) -> std::io::Result<()> {
    let n = table.horizon;
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&distfile::hash(dist))?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&[barrier_code(table.barrier), mode_code(T::MODE)])?;
    for v in table.survival().iter().chain(table.p_tau()) {
        v.write_to(w)?;
    }
    for k in 0..=n {
        match (table.row(k), table.killed_row(k)) {
            (Some(row), Some(killed)) => {
                w.write_all(&[1])?;
                write_pmf(w, row)?;
                write_pmf(w, killed)?;
            }
            _ => w.write_all(&[0])?,
        }
    }
    Ok(())
}

/// Reads a table, rejecting files whose header does not match the expected
/// law, horizon, barrier and mode.
pub fn read<T: CacheScalar>(
    r: &mut dyn Read,
    dist: &IncrementDistribution,
    n: usize,
    barrier: BarrierKind,
) -> Result<KilledWalkTable<T>> {
    let mut magic = [0; 8];
    r.read_exact(&mut magic).context("truncated cache header")?;
    ensure!(magic == MAGIC, "not a table cache (bad magic)");
    let mut v = [0; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    ensure!(version == VERSION, "unsupported cache version {version}");
    let mut hash = [0; 32];
    r.read_exact(&mut hash)?;
    ensure!(hash == distfile::hash(dist), "cache was built for a different distribution");
    let stored_n = read_u64(r)? as usize;
    ensure!(stored_n == n, "cache horizon {stored_n} differs from {n}");
    let mut codes = [0; 2];
    r.read_exact(&mut codes)?;
    ensure!(codes[0] == barrier_code(barrier), "cache barrier differs");
    ensure!(codes[1] == mode_code(T::MODE), "cache arithmetic mode differs");
    let survival = (0..=n).map(|_| T::read_from(r)).collect::<Result<Vec<_>>>()?;
    let p_tau = (0..=n).map(|_| T::read_from(r)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(n + 1);
    let mut killed = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let mut flag = [0];
        r.read_exact(&mut flag)?;
        match flag[0] {
            0 => {
                rows.push(None);
                killed.push(None);
            }
            1 => {
                rows.push(Some(read_pmf(r)?));
                killed.push(Some(read_pmf(r)?));
            }
            other => bail!("corrupt row flag {other}"),
        }
    }
    Ok(KilledWalkTable::from_rows(barrier, rows, killed, survival, p_tau))
}

/// File name for a table: hash prefix, barrier, mode and horizon.
pub fn file_name(dist: &IncrementDistribution, n: usize, barrier: BarrierKind) -> String {
    let mode = match dist.mode() {
        ArithmeticMode::Exact => "exact",
        ArithmeticMode::Float => "float",
    };
    format!(
        "{}_{}_{mode}_{n}.kwt",
        &distfile::hash_hex(dist)[..16],
        barrier.name()
    )
}

pub fn save<T: CacheScalar>(
    path: &Path,
    dist: &IncrementDistribution,
    table: &KilledWalkTable<T>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(&mut w, dist, table)?;
    w.flush()?;
    Ok(())
}

pub fn load<T: CacheScalar>(
    path: &Path,
    dist: &IncrementDistribution,
    n: usize,
    barrier: BarrierKind,
) -> Result<KilledWalkTable<T>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read(&mut r, dist, n, barrier)
}
