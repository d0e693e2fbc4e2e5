//! `TEN1` tensor files.
//!
//! Layout: one ASCII header line
//!
//! ```text
//! TEN1 <order> <d1>,<d2>,... f64 row-major\n
//! ```
//!
//! followed by exactly `8 * Π dims` bytes of little-endian f64 in row-major
//! order. Anything else, including trailing bytes, is rejected.

use std::path::Path;

use hopls::DenseTensor;

use crate::CliError;

pub const MAGIC: &str = "TEN1";

// generous bound so a binary file without a newline is rejected quickly
const MAX_HEADER: usize = 4096;

pub fn encode(t: &DenseTensor) -> Vec<u8> {
    let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
    let header = format!("{MAGIC} {} {} f64 row-major\n", t.order(), dims.join(","));
    let mut out = Vec::with_capacity(header.len() + 8 * t.numel());
    out.extend_from_slice(header.as_bytes());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<DenseTensor, CliError> {
    let bad = |msg: String| CliError::Parse(format!("tensor file: {msg}"));
    let nl = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .ok()
        .filter(|h| h.is_ascii())
        .ok_or_else(|| bad("header is not ASCII".into()))?;
    let tokens: Vec<&str> = header.split(' ').collect();
    let [magic, order, dims, dtype, layout] = tokens[..] else {
        return Err(bad(format!("expected 5 header fields, got {}", tokens.len())));
    };
    if magic != MAGIC {
        return Err(bad(format!("bad magic '{magic}'")));
    }
    if dtype != "f64" {
        return Err(bad(format!("unsupported dtype '{dtype}'")));
    }
    if layout != "row-major" {
        return Err(bad(format!("unsupported layout '{layout}'")));
    }
    let order = parse_count(order).ok_or_else(|| bad(format!("bad order '{order}'")))?;
    let dims: Vec<usize> = dims
        .split(',')
        .map(|d| parse_count(d).filter(|&v| v > 0))
        .collect::<Option<_>>()
        .ok_or_else(|| bad(format!("bad dimension list '{dims}'")))?;
    if dims.len() != order {
        return Err(bad(format!("order {order} but {} dimensions", dims.len())));
    }
    let numel = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(8).map(|b| (n, b)));
    let Some((numel, nbytes)) = numel else {
        return Err(bad("element count overflows".into()));
    };
    let payload = &bytes[nl + 1..];
    if payload.len() != nbytes {
        return Err(bad(format!("payload is {} bytes, expected {nbytes}", payload.len())));
    }
    let mut data = Vec::with_capacity(numel);
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunks of 8"));
        if !v.is_finite() {
            return Err(bad(format!("non-finite value at element {i}")));
        }
        data.push(v);
    }
    DenseTensor::from_vec(&dims, data).map_err(|e| bad(e.to_string()))
}

/// Plain decimal without sign or leading zeros.
fn parse_count(s: &str) -> Option<usize> {
    let canonical = !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if canonical {
        s.parse().ok()
    } else {
        None
    }
}

pub fn read(path: &Path) -> Result<DenseTensor, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    decode(&bytes).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, t: &DenseTensor) -> Result<(), CliError> {
    std::fs::write(path, encode(t)).map_err(|e| CliError::Write(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseTensor {
        DenseTensor::from_vec(&[2, 3], vec![1.0, -0.5, 1e-300, 3.25, 0.0, -7.0]).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert!(bytes.starts_with(b"TEN1 2 2,3 f64 row-major\n"));
        assert_eq!(bytes.len(), 25 + 48);
    }

    #[test]
    fn rejects_malformed() {
        let good = encode(&sample());
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(decode(&trailing).is_err());
        assert!(decode(&good[..good.len() - 1]).is_err());

        let body = &good[25..];
        for header in [
            "TEN2 2 2,3 f64 row-major\n",
            "TEN1 2 2,3 f32 row-major\n",
            "TEN1 2 2,3 f64 col-major\n",
            "TEN1 3 2,3 f64 row-major\n",
            "TEN1 2 2,03 f64 row-major\n",
            "TEN1 2 2,3 f64 row-major \n",
            "TEN1  2 2,3 f64 row-major\n",
            "TEN1 2 2,+3 f64 row-major\n",
            "TEN1 2 0,3 f64 row-major\n",
        ] {
            let mut b = header.as_bytes().to_vec();
            b.extend_from_slice(body);
            assert!(decode(&b).is_err(), "{header:?} accepted");
        }

        let mut nan = good.clone();
        nan[25..33].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&nan).is_err());
    }

    #[test]
    fn negative_zero_survives() {
        let t = DenseTensor::from_vec(&[1], vec![-0.0]).unwrap();
        let back = decode(&encode(&t)).unwrap();
        assert_eq!(back.data()[0].to_bits(), (-0.0f64).to_bits());
    }
}
