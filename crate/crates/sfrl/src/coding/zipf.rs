//! Prefix-free codes over the positive integers: the Shannon-length code for
//! the Zipf distribution q(k) = c k^(-lambda), and Elias delta as a fallback
//! codec behind the same interface.

use std::sync::Mutex;

use super::bits::{BitReader, BitString};
use crate::error::{Result, SfrlError};

/// e^{-1} log2 e, the additive constant in the expected-index bound.
pub const EXCESS_CONST: f64 = std::f64::consts::LOG2_E / std::f64::consts::E;

/// Partial-sum cutoff used when normalizing the Zipf pmf. Encoder and decoder
/// must derive identical lengths, so the normalizer is always computed by this
/// one routine with this fixed cutoff.
const NORM_CUTOFF: u64 = 1_000_000;

/// Exponent for the Zipf code matched to a mutual-information (or capacity)
/// value in bits: lambda = 1 + 1/(info + e^{-1} log2 e + 1).
pub fn zipf_params(info_bits: f64) -> Result<f64> {
    if !info_bits.is_finite() || info_bits < 0.0 {
        return Err(SfrlError::Validation(format!(
            "information value {info_bits} must be a nonnegative real"
        )));
    }
    Ok(1.0 + 1.0 / (info_bits + EXCESS_CONST + 1.0))
}

/// A prefix-free code over positive integers.
pub trait IntegerCode {
    fn encode(&self, k: u64) -> Result<BitString>;
    /// Decode one codeword, consuming bits from the reader.
    fn decode(&self, reader: &mut BitReader<'_>) -> Result<u64>;
}

#[derive(Debug, Clone, Copy)]
struct LengthClass {
    len: u32,
    first_k: u64,
    count: u64,
    start_code: u64,
}

/// Shannon-length prefix code for q(k) = c k^(-lambda): codeword lengths
/// ceil(lambda log2 k + log2(1/c)), canonical lexicographic assignment within
/// each length class. Lengths are nondecreasing in k, so classes can be
/// realized lazily in k order.
#[derive(Debug)]
pub struct ZipfCode {
    lambda: f64,
    norm_c: f64,
    log2_inv_c: f64,
    classes: Mutex<Vec<LengthClass>>,
}

impl ZipfCode {
    pub fn build(lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda <= 1.0 {
            return Err(SfrlError::Domain(format!(
                "zipf exponent {lambda} <= 1 gives a divergent series"
            )));
        }
        // Upper bound on sum k^(-lambda): partial sum plus integral tail.
        // Using an upper bound keeps c <= 1/S_true, so Kraft holds.
        let mut partial = 0.0;
        for k in 1..=NORM_CUTOFF {
            partial += (k as f64).powf(-lambda);
        }
        let tail = (NORM_CUTOFF as f64).powf(1.0 - lambda) / (lambda - 1.0);
        let norm_c = 1.0 / (partial + tail);
        Ok(Self {
            lambda,
            norm_c,
            log2_inv_c: -(norm_c.log2()),
            classes: Mutex::new(Vec::new()),
        })
    }

    /// Build directly from a mutual-information value in bits.
    pub fn for_info(info_bits: f64) -> Result<Self> {
        Self::build(zipf_params(info_bits)?)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn norm_c(&self) -> f64 {
        self.norm_c
    }

    /// Codeword length in bits for integer `k >= 1`.
    pub fn length_of(&self, k: u64) -> u32 {
        debug_assert!(k >= 1);
        let ideal = self.lambda * (k as f64).log2() + self.log2_inv_c;
        ideal.ceil() as u32
    }

    /// Largest k whose codeword length is at most `len`, or 0 if none.
    fn last_k_of_len(&self, len: u32) -> u64 {
        let mut k = 2.0f64.powf((len as f64 - self.log2_inv_c) / self.lambda) as u64;
        if k == 0 {
            k = 1;
        }
        while self.length_of(k + 1) <= len {
            k += 1;
        }
        while k >= 1 && self.length_of(k) > len {
            k -= 1;
        }
        k
    }

    /// Extend the class table until it covers integer `k` (or all lengths up
    /// to `max_len`). Returns an error when the table would exceed 64-bit
    /// codewords.
    fn ensure_classes(
        classes: &mut Vec<LengthClass>,
        code: &ZipfCode,
        k: u64,
        max_len: Option<u32>,
    ) -> Result<()> {
        loop {
            let (next_k, prev) = match classes.last() {
                Some(c) => (c.first_k + c.count, Some((c.len, c.start_code, c.count))),
                None => (1, None),
            };
            let covered = classes
                .last()
                .map(|c| c.first_k + c.count - 1)
                .unwrap_or(0);
            let len_done = match max_len {
                Some(l) => classes.last().map(|c| c.len >= l).unwrap_or(false),
                None => false,
            };
            if covered >= k || len_done {
                return Ok(());
            }
            let len = code.length_of(next_k);
            if len > 62 {
                return Err(SfrlError::Size(format!(
                    "zipf codeword length {len} exceeds the 62-bit decoder limit"
                )));
            }
            let last = code.last_k_of_len(len);
            debug_assert!(last >= next_k);
            let start_code = match prev {
                None => 0,
                Some((plen, pstart, pcount)) => (pstart + pcount) << (len - plen),
            };
            debug_assert!(start_code + (last - next_k + 1) <= 1u64 << len);
            classes.push(LengthClass {
                len,
                first_k: next_k,
                count: last - next_k + 1,
                start_code,
            });
        }
    }

    /// Kraft partial sum over k <= cutoff plus the analytic tail bound; the
    /// result never exceeds 1 by construction.
    pub fn kraft_bound(&self, cutoff: u64) -> f64 {
        let mut sum = 0.0;
        for k in 1..=cutoff {
            sum += 2.0f64.powi(-(self.length_of(k) as i32));
        }
        // 2^{-len(k)} <= q(k), so the tail is bounded by the q tail.
        let tail = self.norm_c * (cutoff as f64).powf(1.0 - self.lambda) / (self.lambda - 1.0);
        sum + tail
    }
}

impl IntegerCode for ZipfCode {
    fn encode(&self, k: u64) -> Result<BitString> {
        if k == 0 {
            return Err(SfrlError::Domain("zipf code indexes start at 1".into()));
        }
        let mut classes = self.classes.lock().unwrap();
        Self::ensure_classes(&mut classes, self, k, None)?;
        let class = classes
            .iter()
            .find(|c| k >= c.first_k && k < c.first_k + c.count)
            .expect("class table covers k");
        let mut bits = BitString::new();
        bits.push_bits(class.start_code + (k - class.first_k), class.len);
        Ok(bits)
    }

    fn decode(&self, reader: &mut BitReader<'_>) -> Result<u64> {
        let mut classes = self.classes.lock().unwrap();
        let mut value = 0u64;
        let mut read = 0u32;
        let mut idx = 0usize;
        loop {
            if idx == classes.len() {
                let covered = classes.last().map(|c| c.first_k + c.count - 1).unwrap_or(0);
                Self::ensure_classes(&mut classes, self, covered + 1, None)?;
            }
            let class = classes[idx];
            while read < class.len {
                value = (value << 1) | reader.read_bit()? as u64;
                read += 1;
            }
            if value >= class.start_code && value - class.start_code < class.count {
                return Ok(class.first_k + (value - class.start_code));
            }
            idx += 1;
        }
    }
}

/// Elias delta code; handles any k >= 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct EliasDelta;

impl IntegerCode for EliasDelta {
    fn encode(&self, k: u64) -> Result<BitString> {
        if k == 0 {
            return Err(SfrlError::Domain("elias delta indexes start at 1".into()));
        }
        let mut bits = BitString::new();
        let n = 63 - k.leading_zeros(); // floor(log2 k)
        let l = 64 - (n as u64 + 1).leading_zeros(); // bits of n+1
        for _ in 0..l - 1 {
            bits.push(false);
        }
        bits.push_bits(n as u64 + 1, l);
        bits.push_bits(k & !(1u64 << n), n);
        Ok(bits)
    }

    fn decode(&self, reader: &mut BitReader<'_>) -> Result<u64> {
        let mut zeros = 0u32;
        while !reader.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(SfrlError::Framing {
                    position: reader.position(),
                    reason: "elias delta header too long".into(),
                });
            }
        }
        let np1 = (1u64 << zeros) | reader.read_bits(zeros)?;
        let n = (np1 - 1) as u32;
        Ok((1u64 << n) | reader.read_bits(n)?)
    }
}
