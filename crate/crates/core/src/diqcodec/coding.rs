//! Bit-level primitives: quantizer, integer wrapping, truncation and the two
//! codes that share a slot.

use std::fmt;

use crate::error::{Error, Result};

/// A slot's payload. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Packet(Vec<bool>);

impl Packet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extend(&mut self, other: &Packet) {
        self.0.extend_from_slice(&other.0);
    }

    fn push_binary(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.0.push((value >> i) & 1 == 1);
        }
    }
}

/// `0`/`1` characters, or `-` for the empty packet.
impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Packet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "-" || s.is_empty() {
            return Ok(Packet::new());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Codec(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Packet)
    }
}

/// Round to nearest with cells `[j − ½, j + ½)`.
pub fn uniform_quantize(x: &[f64]) -> Result<Vec<i64>> {
    x.iter()
        .map(|&v| {
            let r = (v + 0.5).floor();
            if !r.is_finite() || r.abs() > (1u64 << 52) as f64 {
                return Err(Error::NonFinite("quantizer input"));
            }
            Ok(r as i64)
        })
        .collect()
}

/// Positive integers get even codes, the rest odd: `0 ↦ 1, 1 ↦ 2, −1 ↦ 3`.
pub fn wrap(q: &[i64]) -> Vec<u64> {
    q.iter()
        .map(|&v| {
            if v > 0 {
                2 * v as u64
            } else {
                2 * v.unsigned_abs() + 1
            }
        })
        .collect()
}

pub fn unwrap(s: &[u64]) -> Result<Vec<i64>> {
    s.iter()
        .map(|&v| match v {
            0 => Err(Error::Codec("wrapped symbols are positive".into())),
            v if v % 2 == 0 => Ok((v / 2) as i64),
            v => Ok(-(((v - 1) / 2) as i64)),
        })
        .collect()
}

/// Components above their cutoff become 0; the removed values are returned
/// in index order.
pub fn truncate(s: &[u64], cutoffs: &[u32]) -> (Vec<u32>, Vec<u64>) {
    debug_assert_eq!(s.len(), cutoffs.len());
    let mut escaped = Vec::new();
    let kept = s
        .iter()
        .zip(cutoffs)
        .map(|(&v, &c)| {
            if v <= c as u64 {
                v as u32
            } else {
                escaped.push(v);
                0
            }
        })
        .collect();
    (kept, escaped)
}

/// Inverse of [`truncate`] given the escaped values in order.
pub fn restore(kept: &[u32], escaped: &[u64]) -> Result<Vec<u64>> {
    let mut it = escaped.iter();
    let out = kept
        .iter()
        .map(|&v| {
            if v == 0 {
                it.next()
                    .copied()
                    .ok_or_else(|| Error::Codec("too few escaped symbols".into()))
            } else {
                Ok(v as u64)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if it.next().is_some() {
        return Err(Error::Codec("too many escaped symbols".into()));
    }
    Ok(out)
}

fn bit_length(n: u64) -> u32 {
    64 - n.leading_zeros()
}

/// Shortlex enumeration including the empty string: `r` in binary with its
/// leading one dropped.
pub fn nonsingular_codeword(rank: u64) -> Result<Packet> {
    if rank == 0 {
        return Err(Error::Codec("ranks start at 1".into()));
    }
    let mut p = Packet::new();
    p.push_binary(rank, bit_length(rank) - 1);
    Ok(p)
}

pub fn nonsingular_rank(bits: &[bool]) -> Result<u64> {
    if bits.len() >= 64 {
        return Err(Error::Codec(format!("codeword of {} bits is too long", bits.len())));
    }
    Ok(bits.iter().fold(1u64, |acc, &b| (acc << 1) | b as u64))
}

pub fn elias_omega(n: u64) -> Result<Packet> {
    if n == 0 {
        return Err(Error::Codec("Elias omega encodes positive integers".into()));
    }
    let mut groups = Vec::new();
    let mut m = n;
    while m > 1 {
        groups.push(m);
        m = (bit_length(m) - 1) as u64;
    }
    let mut p = Packet::new();
    for &g in groups.iter().rev() {
        p.push_binary(g, bit_length(g));
    }
    p.0.push(false);
    Ok(p)
}

/// Decodes one integer starting at `cursor`; returns it and the new cursor.
pub fn elias_omega_decode(bits: &[bool], mut cursor: usize) -> Result<(u64, usize)> {
    let mut n: u64 = 1;
    loop {
        let &lead = bits
            .get(cursor)
            .ok_or_else(|| Error::Codec("bitstream ended inside an Elias omega code".into()))?;
        if !lead {
            return Ok((n, cursor + 1));
        }
        if n >= 64 {
            return Err(Error::Codec("Elias omega group exceeds 64 bits".into()));
        }
        let end = cursor + n as usize + 1;
        let group = bits
            .get(cursor..end)
            .ok_or_else(|| Error::Codec("bitstream ended inside an Elias omega code".into()))?;
        n = group.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        cursor = end;
    }
}
