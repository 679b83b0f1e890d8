//! Complex tensor container.
//!
//! ```text
//! magic    8 bytes        "CDFTENSR"
//! version  u32 LE         1
//! dtype    u32 LE         1 = complex f64
//! ndim     u32 LE
//! dims     ndim × u64 LE
//! payload  interleaved (re, im) f64 LE, row-major, 16 bytes per element
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"CDFTENSR";
pub const TENSOR_VERSION: u32 = 1;
const DTYPE_COMPLEX_F64: u32 = 1;

pub fn write_tensor(x: &ComplexTensor, out: &mut impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 8 * x.shape().len() + 16 * x.len());
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    buf.extend_from_slice(&DTYPE_COMPLEX_F64.to_le_bytes());
    buf.extend_from_slice(&(x.shape().len() as u32).to_le_bytes());
    for &d in x.shape() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for (re, im) in x.re().iter().zip(x.im()) {
        buf.extend_from_slice(&re.to_le_bytes());
        buf.extend_from_slice(&im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    let end = at.checked_add(n).filter(|&e| e <= bytes.len());
    match end {
        Some(end) => {
            let s = &bytes[*at..end];
            *at = end;
            Ok(s)
        }
        None => Err(Error::Corrupt(format!("tensor file truncated in {what}"))),
    }
}

fn u32_at(bytes: &[u8], at: &mut usize, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, at, 4, what)?.try_into().expect("4 bytes")))
}

pub fn read_tensor(input: &mut impl Read) -> Result<ComplexTensor> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut at = 0;
    if take(&bytes, &mut at, 8, "magic")? != TENSOR_MAGIC {
        return Err(Error::Corrupt("bad tensor file magic".into()));
    }
    let version = u32_at(&bytes, &mut at, "version")?;
    if version != TENSOR_VERSION {
        return Err(Error::Version {
            expected: TENSOR_VERSION,
            found: version,
        });
    }
    let dtype = u32_at(&bytes, &mut at, "dtype")?;
    if dtype != DTYPE_COMPLEX_F64 {
        return Err(Error::Corrupt(format!("unsupported dtype tag {dtype}")));
    }
    let ndim = u32_at(&bytes, &mut at, "ndim")? as usize;
    let mut shape = Vec::with_capacity(ndim.min(16));
    for _ in 0..ndim {
        let d = u64::from_le_bytes(take(&bytes, &mut at, 8, "shape")?.try_into().expect("8 bytes"));
        shape.push(usize::try_from(d).map_err(|_| Error::Corrupt(format!("extent {d} too large")))?);
    }
    let expected = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Corrupt("shape overflows".into()))?;
    let payload = &bytes[at..];
    if payload.len() % 16 != 0 {
        return Err(Error::Corrupt(format!(
            "payload of {} bytes is not a whole number of complex elements",
            payload.len()
        )));
    }
    if payload.len() / 16 != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: payload.len() / 16,
        });
    }
    let mut re = Vec::with_capacity(expected);
    let mut im = Vec::with_capacity(expected);
    for c in payload.chunks_exact(16) {
        re.push(f64::from_le_bytes(c[..8].try_into().expect("8 bytes")));
        im.push(f64::from_le_bytes(c[8..].try_into().expect("8 bytes")));
    }
    ComplexTensor::new(&shape, re, im)
}

pub fn save_tensor(x: &ComplexTensor, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_tensor(x, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_tensor(path: &Path) -> Result<ComplexTensor> {
    read_tensor(&mut fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_tensor;

    fn bytes_of(x: &ComplexTensor) -> Vec<u8> {
        let mut b = Vec::new();
        write_tensor(x, &mut b).unwrap();
        b
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let mut x = random_tensor(&[2, 3, 5], 1);
        x.re_mut()[0] = -0.0;
        x.im_mut()[1] = f64::MIN_POSITIVE / 2.0;
        let b = bytes_of(&x);
        assert_eq!(b.len(), 20 + 24 + 16 * 30);
        let y = read_tensor(&mut b.as_slice()).unwrap();
        assert_eq!(y.shape(), x.shape());
        let bits = |t: &ComplexTensor| t.re().iter().chain(t.im()).map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&y), bits(&x));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.cten");
        save_tensor(&x, &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b);
        assert_eq!(load_tensor(&p).unwrap(), x);
    }

    #[test]
    fn truncation_is_reported() {
        let b = bytes_of(&random_tensor(&[4, 4], 2));
        for cut in [3, 10, 30, b.len() - 5] {
            assert!(matches!(read_tensor(&mut &b[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
        assert!(matches!(read_tensor(&mut &b[..b.len() - 16]), Err(Error::LengthMismatch { expected: 16, found: 15 })));
    }

    #[test]
    fn header_shape_disagreeing_with_payload() {
        let mut b = bytes_of(&random_tensor(&[5], 3));
        // rewrite the header as a 2-D [2, 3] tensor over the same 5-element payload
        let payload = b.split_off(20 + 8);
        b.truncate(16);
        b.extend_from_slice(&2u32.to_le_bytes());
        b.extend_from_slice(&2u64.to_le_bytes());
        b.extend_from_slice(&3u64.to_le_bytes());
        b.extend_from_slice(&payload);
        assert!(matches!(read_tensor(&mut b.as_slice()), Err(Error::LengthMismatch { expected: 6, found: 5 })));
    }

    #[test]
    fn bad_magic_and_version() {
        let b = bytes_of(&random_tensor(&[2, 2], 4));
        let mut m = b.clone();
        m[2] ^= 1;
        assert!(matches!(read_tensor(&mut m.as_slice()), Err(Error::Corrupt(_))));
        let mut v = b.clone();
        v[8] = 2;
        assert!(matches!(read_tensor(&mut v.as_slice()), Err(Error::Version { expected: 1, found: 2 })));
        let mut d = b;
        d[12] = 7;
        assert!(matches!(read_tensor(&mut d.as_slice()), Err(Error::Corrupt(_))));
    }
}
