//! Binary parameter blobs.
//!
//! Every blob starts with an 8-byte magic tag. Integers are little-endian
//! `u32`/`u64`, reals are little-endian IEEE-754 `f64` regardless of the
//! in-memory scalar type.
//!
//! ```text
//! matrix : "NCMATRX1" u64 rows, u64 cols, f64[rows*cols] (row-major)
//! mlp    : "NCMLP001" u32 layers, then per layer:
//!          u32 out, u32 in, u8 has_bias, u8 activation (0 relu, 1 identity, 2 sigmoid),
//!          f64[out*in] weights (row-major), f64[out] bias if present
//! adam   : "NCADAM01" u64 step, f64 lr, f64 beta1, f64 beta2, f64 eps, u32 slots,
//!          then per slot: u64 len, f64[len] first moments, f64[len] second moments
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics::{Activation, AdamState, DenseMatrix, Layer, Mlp};
use crate::scalar::Scalar;

const MATRIX_MAGIC: &[u8; 8] = b"NCMATRX1";
const MLP_MAGIC: &[u8; 8] = b"NCMLP001";
const ADAM_MAGIC: &[u8; 8] = b"NCADAM01";

pub(crate) fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_reals<T: Scalar>(w: &mut impl Write, vals: &[T]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * vals.len());
    for v in vals {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_reals<T: Scalar>(r: &mut impl Read, n: usize) -> Result<Vec<T>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
        .collect())
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 8]) -> Result<()> {
    let mut got = [0u8; 8];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Checkpoint(format!(
            "expected section {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&got)
        )));
    }
    Ok(())
}

fn checked_len(v: u64, what: &str) -> Result<usize> {
    // guards against allocating from a corrupt header
    const LIMIT: u64 = 1 << 32;
    if v > LIMIT {
        return Err(Error::Checkpoint(format!("implausible {what} {v}")));
    }
    Ok(v as usize)
}

pub fn write_matrix<T: Scalar>(w: &mut impl Write, m: &DenseMatrix<T>) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    write_u64(w, m.rows() as u64)?;
    write_u64(w, m.cols() as u64)?;
    write_reals(w, m.as_slice())
}

pub fn read_matrix<T: Scalar>(r: &mut impl Read) -> Result<DenseMatrix<T>> {
    expect_magic(r, MATRIX_MAGIC)?;
    let rows = checked_len(read_u64(r)?, "row count")?;
    let cols = checked_len(read_u64(r)?, "column count")?;
    let vals = read_reals(r, rows * cols)?;
    DenseMatrix::from_vec(rows, cols, vals)
}

pub fn write_mlp<T: Scalar>(w: &mut impl Write, net: &Mlp<T>) -> Result<()> {
    w.write_all(MLP_MAGIC)?;
    write_u32(w, net.layers().len() as u32)?;
    for layer in net.layers() {
        write_u32(w, layer.outputs() as u32)?;
        write_u32(w, layer.inputs() as u32)?;
        w.write_all(&[layer.bias.is_some() as u8, layer.activation.code()])?;
        write_reals(w, layer.weights.as_slice())?;
        if let Some(b) = &layer.bias {
            write_reals(w, b)?;
        }
    }
    Ok(())
}

pub fn read_mlp<T: Scalar>(r: &mut impl Read) -> Result<Mlp<T>> {
    expect_magic(r, MLP_MAGIC)?;
    let n = read_u32(r)? as usize;
    let mut layers = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        let out = read_u32(r)? as usize;
        let inp = read_u32(r)? as usize;
        let has_bias = read_u8(r)? != 0;
        let code = read_u8(r)?;
        let activation = Activation::from_code(code)
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {code}")))?;
        let weights = DenseMatrix::from_vec(out, inp, read_reals(r, out * inp)?)?;
        let bias = if has_bias { Some(read_reals(r, out)?) } else { None };
        layers.push(Layer::new(weights, bias, activation)?);
    }
    Mlp::new(layers)
}

pub fn write_adam<T: Scalar>(w: &mut impl Write, st: &AdamState<T>) -> Result<()> {
    w.write_all(ADAM_MAGIC)?;
    write_u64(w, st.step)?;
    write_reals(w, &[st.lr, st.beta1, st.beta2, st.eps])?;
    write_u32(w, st.m.len() as u32)?;
    for (m, v) in st.m.iter().zip(&st.v) {
        write_u64(w, m.len() as u64)?;
        write_reals(w, m)?;
        write_reals(w, v)?;
    }
    Ok(())
}

pub fn read_adam<T: Scalar>(r: &mut impl Read) -> Result<AdamState<T>> {
    expect_magic(r, ADAM_MAGIC)?;
    let step = read_u64(r)?;
    let c: Vec<T> = read_reals(r, 4)?;
    let slots = read_u32(r)? as usize;
    let mut m = Vec::with_capacity(slots.min(1024));
    let mut v = Vec::with_capacity(slots.min(1024));
    for _ in 0..slots {
        let len = checked_len(read_u64(r)?, "slot length")?;
        m.push(read_reals(r, len)?);
        v.push(read_reals(r, len)?);
    }
    Ok(AdamState {
        step,
        lr: c[0],
        beta1: c[1],
        beta2: c[2],
        eps: c[3],
        m,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mlp_and_adam_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net: Mlp<f64> = Mlp::new(vec![
            Layer::lecun_uniform(3, 4, true, Activation::Relu, &mut rng),
            Layer::lecun_uniform(4, 1, false, Activation::Sigmoid, &mut rng),
        ])
        .unwrap();
        let mut adam = AdamState::new(&[12, 4, 4], 1e-3);
        let mut p = net.clone();
        let g: Vec<Vec<f64>> = p.param_slices().iter().map(|s| s.iter().map(|v| v * 0.5 + 0.1).collect()).collect();
        adam.step(p.param_slices_mut(), g.iter().map(|v| v.as_slice()).collect()).unwrap();

        let mut buf = Vec::new();
        write_mlp(&mut buf, &p).unwrap();
        write_adam(&mut buf, &adam).unwrap();
        let mut cur = buf.as_slice();
        let p2: Mlp<f64> = read_mlp(&mut cur).unwrap();
        let adam2: AdamState<f64> = read_adam(&mut cur).unwrap();
        assert!(cur.is_empty());
        assert_eq!(p, p2);
        assert_eq!(adam, adam2);
    }

    #[test]
    fn wrong_magic_is_reported() {
        let m = DenseMatrix::<f64>::identity(2);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert!(matches!(read_mlp::<f64>(&mut buf.as_slice()), Err(Error::Checkpoint(_))));
        assert_eq!(read_matrix::<f64>(&mut buf.as_slice()).unwrap(), m);
    }
}
