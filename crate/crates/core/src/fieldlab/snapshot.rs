//! Binary field snapshots.
//!
//! Layout (little endian): the 8 bytes `CFORGE1\0`, then n, d and
//! points_per_axis as u64, the period as f64, and the samples as f64 in
//! point-major order. Immersion snapshots append their d×n linear part.

use std::io::{Read, Write};
use std::path::Path;

use super::field::Field;
use super::grid::GridDomain;
use super::immersion::ImmersionField;
use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};

pub const MAGIC: &[u8; 8] = b"CFORGE1\0";

fn header<T: Real>(dom: &GridDomain<T>, d: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(40);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dom.n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(dom.points_per_axis as u64).to_le_bytes());
    out.extend_from_slice(&f64_of(dom.period).to_le_bytes());
    out
}

pub fn encode_field<T: Real>(f: &Field<T>) -> Vec<u8> {
    let mut out = header(&f.domain, f.ncomp);
    out.reserve(f.data.len() * 8);
    for &v in &f.data {
        out.extend_from_slice(&f64_of(v).to_le_bytes());
    }
    out
}

pub fn encode_immersion<T: Real>(u: &ImmersionField<T>) -> Vec<u8> {
    let mut out = encode_field(&u.values);
    for &v in &u.linear {
        out.extend_from_slice(&f64_of(v).to_le_bytes());
    }
    out
}

struct Decoded<T> {
    field: Field<T>,
    trailer: Vec<T>,
}

fn take_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn take_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn decode<T: Real>(bytes: &[u8]) -> Result<Decoded<T>> {
    if bytes.len() < 40 || &bytes[..8] != MAGIC {
        return Err(Error::Format("missing CFORGE1 header".into()));
    }
    let n = take_u64(bytes, 8) as usize;
    let d = take_u64(bytes, 16) as usize;
    let ppa = take_u64(bytes, 24) as usize;
    let period = take_f64(bytes, 32);
    let dom = GridDomain::new(n, ppa, lit::<T>(period)).map_err(|e| Error::Format(e.to_string()))?;
    let nsamp = dom.npts() * d;
    let body = (bytes.len() - 40) / 8;
    if (bytes.len() - 40) % 8 != 0 || body < nsamp {
        return Err(Error::Format(format!("expected {nsamp} samples, file holds {body} values")));
    }
    let read = |k: usize| lit::<T>(take_f64(bytes, 40 + 8 * k));
    let data = (0..nsamp).map(read).collect();
    let trailer = (nsamp..body).map(read).collect();
    Ok(Decoded { field: Field::from_data(&dom, d, data)?, trailer })
}

pub fn decode_field<T: Real>(bytes: &[u8]) -> Result<Field<T>> {
    let dec = decode(bytes)?;
    if !dec.trailer.is_empty() {
        return Err(Error::Format("trailing data after samples (immersion snapshot?)".into()));
    }
    Ok(dec.field)
}

pub fn decode_immersion<T: Real>(bytes: &[u8]) -> Result<ImmersionField<T>> {
    let dec = decode::<T>(bytes)?;
    let need = dec.field.ncomp * dec.field.domain.n;
    if dec.trailer.len() != need {
        return Err(Error::Format(format!("immersion trailer holds {} values, need {need}", dec.trailer.len())));
    }
    ImmersionField::from_values(dec.trailer, dec.field)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut v = vec![];
    std::fs::File::open(path)?.read_to_end(&mut v)?;
    Ok(v)
}

pub fn write_field<T: Real>(path: &Path, f: &Field<T>) -> Result<()> {
    write_bytes(path, &encode_field(f))
}

pub fn read_field<T: Real>(path: &Path) -> Result<Field<T>> {
    decode_field(&read_bytes(path)?)
}

pub fn write_immersion<T: Real>(path: &Path, u: &ImmersionField<T>) -> Result<()> {
    write_bytes(path, &encode_immersion(u))
}

pub fn read_immersion<T: Real>(path: &Path) -> Result<ImmersionField<T>> {
    decode_immersion(&read_bytes(path)?)
}
