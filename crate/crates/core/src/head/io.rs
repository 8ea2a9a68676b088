//! HED1 head files.
//!
//! ```text
//! magic "HED1" | version u16 | d_in u32 | d_out u32 | activation u8
//! version 1: W (d_out x d_in, row-major f64) | b (d_out f64)
//! version 2: d_hidden u32 | W1 | b1 | W2 | b2
//! ```
//! All little-endian. Version 1 is the single-layer head; version 2 adds the
//! hidden layer.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::{Activation, HeadParams, Layer};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const HEAD_MAGIC: [u8; 4] = *b"HED1";

pub fn write_head<S: Scalar>(params: &HeadParams<S>, w: impl Write) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(&HEAD_MAGIC)?;
    let version: u16 = if params.hidden_dim().is_some() { 2 } else { 1 };
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(params.d_in() as u32).to_le_bytes())?;
    w.write_all(&(params.d_out() as u32).to_le_bytes())?;
    w.write_all(&[params.activation().code()])?;
    if let Some(h) = params.hidden_dim() {
        w.write_all(&(h as u32).to_le_bytes())?;
    }
    for v in params.to_flat() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(short)?;
    Ok(u32::from_le_bytes(b))
}

fn short(e: std::io::Error) -> Error {
    match e.kind() {
        ErrorKind::UnexpectedEof => Error::Format("head file is truncated".into()),
        _ => Error::Stream(e),
    }
}

fn read_layer<S: Scalar>(r: &mut impl Read, d_in: usize, d_out: usize) -> Result<Layer<S>> {
    let mut buf = vec![0u8; (d_in * d_out + d_out) * 8];
    r.read_exact(&mut buf).map_err(short)?;
    let vals: Vec<S> = buf
        .chunks_exact(8)
        .map(|c| S::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let (w, b) = vals.split_at(d_in * d_out);
    Layer::new(d_in, d_out, w.to_vec(), b.to_vec())
}

pub fn read_head<S: Scalar>(r: impl Read) -> Result<HeadParams<S>> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(short)?;
    if magic != HEAD_MAGIC {
        return Err(Error::Format(format!("bad head magic {magic:02X?}")));
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v).map_err(short)?;
    let version = u16::from_le_bytes(v);
    let d_in = read_u32(&mut r)? as usize;
    let d_out = read_u32(&mut r)? as usize;
    let mut code = [0u8; 1];
    r.read_exact(&mut code).map_err(short)?;
    let activation =
        Activation::from_code(code[0]).ok_or_else(|| Error::Format(format!("unknown activation code {}", code[0])))?;
    let params = match version {
        1 => {
            let mut head = HeadParams::linear(read_layer(&mut r, d_in, d_out)?);
            head.activation = activation;
            head
        }
        2 => {
            let hidden = read_u32(&mut r)? as usize;
            let first = read_layer(&mut r, d_in, hidden)?;
            let second = read_layer(&mut r, hidden, d_out)?;
            HeadParams::with_hidden(first, second, activation)?
        }
        other => return Err(Error::Format(format!("unsupported head version {other}"))),
    };
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after head parameters".into()));
    }
    Ok(params)
}

impl<S: Scalar> HeadParams<S> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_head(self, file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_head(file)
    }
}
