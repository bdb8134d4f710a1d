//! Packed bit sequences, MSB-first within bytes, plus the on-disk container.

use crate::error::{Result, SfrlError};

/// Container magic for serialized descriptions.
pub const MAGIC: [u8; 4] = *b"SFRL";
pub const CONTAINER_VERSION: u8 = 1;

/// A packed bit sequence. Bits are stored MSB-first within each byte; the
/// final partial byte is zero-padded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let byte = self.len / 8;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Append the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        if i >= self.len {
            return None;
        }
        Some((self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
    }

    pub fn extend(&mut self, other: &BitString) {
        for i in 0..other.len {
            self.push(other.get(i).unwrap());
        }
    }

    /// Serialize as a container: magic, version, 8-byte big-endian payload
    /// bit-length, payload bits MSB-first.
    pub fn to_container(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + self.bytes.len());
        out.extend_from_slice(&MAGIC);
        out.push(CONTAINER_VERSION);
        out.extend_from_slice(&(self.len as u64).to_be_bytes());
        out.extend_from_slice(&self.bytes);
        out
    }

    pub fn from_container(data: &[u8]) -> Result<Self> {
        if data.len() < 13 || data[..4] != MAGIC {
            return Err(SfrlError::Framing {
                position: 0,
                reason: "missing SFRL container header".into(),
            });
        }
        if data[4] != CONTAINER_VERSION {
            return Err(SfrlError::Framing {
                position: 32,
                reason: format!("unsupported container version {}", data[4]),
            });
        }
        let len = u64::from_be_bytes(data[5..13].try_into().unwrap()) as usize;
        let payload = &data[13..];
        if payload.len() != len.div_ceil(8) {
            return Err(SfrlError::Framing {
                position: 104,
                reason: format!(
                    "payload of {} bytes does not match declared {} bits",
                    payload.len(),
                    len
                ),
            });
        }
        // padding bits in the final byte must be zero
        if len % 8 != 0 {
            let last = payload[payload.len() - 1];
            if last & (0xffu8 >> (len % 8)) != 0 {
                return Err(SfrlError::Framing {
                    position: len,
                    reason: "nonzero padding bits".into(),
                });
            }
        }
        Ok(Self {
            bytes: payload.to_vec(),
            len,
        })
    }
}

/// Sequential reader over a [`BitString`].
pub struct BitReader<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitString) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        match self.bits.get(self.pos) {
            Some(b) => {
                self.pos += 1;
                Ok(b)
            }
            None => Err(SfrlError::Framing {
                position: self.pos,
                reason: "unexpected end of stream".into(),
            }),
        }
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }
}
