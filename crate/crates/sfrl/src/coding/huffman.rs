//! Canonical Huffman codes over finite alphabets with deterministic tie
//! breaking, so encoder and decoder always derive the same code from a pmf.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::bits::{BitReader, BitString};
use crate::error::{Result, SfrlError};
use crate::probspace::DiscreteDistribution;

#[derive(Debug, Clone, Copy)]
struct Codeword {
    code: u64,
    len: u32,
}

/// Optimal prefix code for a pmf. Symbols with zero mass get no codeword.
#[derive(Debug, Clone)]
pub struct HuffmanCode {
    words: Vec<Option<Codeword>>,
    /// Symbols sorted by (length, symbol); drives canonical decoding.
    order: Vec<(u32, usize)>,
    expected_length: f64,
}

struct HeapNode {
    prob: f64,
    /// lowest symbol index in the subtree; deterministic tie rule
    tie: usize,
    symbols: Vec<usize>,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.prob == other.prob && self.tie == other.tie
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    // reversed: BinaryHeap is a max-heap, we want smallest (prob, tie) first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .prob
            .partial_cmp(&self.prob)
            .unwrap_or(Ordering::Equal)
            .then(other.tie.cmp(&self.tie))
    }
}

impl HuffmanCode {
    pub fn build(pmf: &DiscreteDistribution) -> Result<Self> {
        let support: Vec<usize> = pmf.support().collect();
        if support.is_empty() {
            return Err(SfrlError::Validation("pmf with empty support".into()));
        }
        let n = pmf.alphabet_size();
        let mut lengths = vec![0u32; n];
        if support.len() > 1 {
            let mut heap: BinaryHeap<HeapNode> = support
                .iter()
                .map(|&s| HeapNode {
                    prob: pmf.prob(s),
                    tie: s,
                    symbols: vec![s],
                })
                .collect();
            while heap.len() > 1 {
                let a = heap.pop().unwrap();
                let b = heap.pop().unwrap();
                let mut symbols = a.symbols;
                symbols.extend_from_slice(&b.symbols);
                for &s in &symbols {
                    lengths[s] += 1;
                }
                heap.push(HeapNode {
                    prob: a.prob + b.prob,
                    tie: a.tie.min(b.tie),
                    symbols,
                });
            }
        }
        // degenerate one-symbol alphabet keeps the zero-length codeword;
        // framing must then carry token counts

        let mut order: Vec<(u32, usize)> = support.iter().map(|&s| (lengths[s], s)).collect();
        order.sort();
        let mut words: Vec<Option<Codeword>> = vec![None; n];
        let mut code = 0u64;
        let mut prev_len = order[0].0;
        for &(len, sym) in &order {
            code <<= len - prev_len;
            words[sym] = Some(Codeword { code, len });
            code += 1;
            prev_len = len;
        }
        let expected_length = support
            .iter()
            .map(|&s| pmf.prob(s) * lengths[s] as f64)
            .sum();
        Ok(Self {
            words,
            order,
            expected_length,
        })
    }

    pub fn expected_length(&self) -> f64 {
        self.expected_length
    }

    pub fn length_of(&self, symbol: usize) -> Option<u32> {
        self.words.get(symbol).copied().flatten().map(|w| w.len)
    }

    pub fn encode(&self, symbol: usize) -> Result<BitString> {
        let word = self
            .words
            .get(symbol)
            .copied()
            .flatten()
            .ok_or_else(|| SfrlError::Domain(format!("symbol {symbol} has no codeword")))?;
        let mut bits = BitString::new();
        bits.push_bits(word.code, word.len);
        Ok(bits)
    }

    pub fn decode(&self, reader: &mut BitReader<'_>) -> Result<usize> {
        // canonical walk over length groups
        let mut value = 0u64;
        let mut read = 0u32;
        let mut start = 0usize;
        let mut first_code = 0u64;
        let mut prev_len = self.order[0].0;
        while start < self.order.len() {
            let len = self.order[start].0;
            first_code <<= len - prev_len;
            prev_len = len;
            let mut end = start;
            while end < self.order.len() && self.order[end].0 == len {
                end += 1;
            }
            while read < len {
                value = (value << 1) | reader.read_bit()? as u64;
                read += 1;
            }
            let offset = value.wrapping_sub(first_code);
            if value >= first_code && (offset as usize) < end - start {
                return Ok(self.order[start + offset as usize].1);
            }
            first_code += (end - start) as u64;
            start = end;
        }
        Err(SfrlError::Framing {
            position: reader.position(),
            reason: "no codeword matches".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::DiscreteDistribution;

    #[test]
    fn dyadic_optimum() {
        let pmf = DiscreteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let code = HuffmanCode::build(&pmf).unwrap();
        assert_eq!(code.length_of(0), Some(1));
        assert_eq!(code.length_of(1), Some(2));
        assert_eq!(code.length_of(2), Some(2));
        assert!((code.expected_length() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_gets_empty_codeword() {
        let pmf = DiscreteDistribution::point_mass(0, 1);
        let code = HuffmanCode::build(&pmf).unwrap();
        assert_eq!(code.length_of(0), Some(0));
        assert_eq!(code.expected_length(), 0.0);
        assert_eq!(code.encode(0).unwrap().len(), 0);
    }

    #[test]
    fn zero_mass_symbol_rejected() {
        let pmf = DiscreteDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        let code = HuffmanCode::build(&pmf).unwrap();
        assert!(matches!(code.encode(1), Err(SfrlError::Domain(_))));
    }

    #[test]
    fn roundtrip_stream() {
        let pmf =
            DiscreteDistribution::new(vec![0.05, 0.3, 0.02, 0.23, 0.1, 0.1, 0.15, 0.05]).unwrap();
        let code = HuffmanCode::build(&pmf).unwrap();
        let symbols: Vec<usize> = (0..200).map(|i| (i * 7 + 3) % 8).collect();
        let mut stream = BitString::new();
        for &s in &symbols {
            stream.extend(&code.encode(s).unwrap());
        }
        let mut reader = BitReader::new(&stream);
        for &s in &symbols {
            assert_eq!(code.decode(&mut reader).unwrap(), s);
        }
        assert_eq!(reader.remaining(), 0);
    }

    #[test]
    fn deterministic_under_ties() {
        let pmf = DiscreteDistribution::uniform(6);
        let a = HuffmanCode::build(&pmf).unwrap();
        let b = HuffmanCode::build(&pmf).unwrap();
        for s in 0..6 {
            assert_eq!(a.encode(s).unwrap(), b.encode(s).unwrap());
        }
    }

    #[test]
    fn expected_length_within_one_bit_of_entropy() {
        // fixed pseudo-random pmfs over 8 symbols
        let mut state = 0x243f_6a88_85a3_08d3u64;
        for _ in 0..50 {
            let mut raw = Vec::with_capacity(8);
            for _ in 0..8 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                raw.push(((state >> 11) as f64 / (1u64 << 53) as f64) + 1e-3);
            }
            let sum: f64 = raw.iter().sum();
            let pmf =
                DiscreteDistribution::new(raw.into_iter().map(|v| v / sum).collect()).unwrap();
            let code = HuffmanCode::build(&pmf).unwrap();
            let h = pmf.entropy();
            assert!(code.expected_length() >= h - 1e-9);
            assert!(code.expected_length() <= h + 1.0);
        }
    }

    #[test]
    fn kraft_exact_for_huffman() {
        let pmf = DiscreteDistribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let code = HuffmanCode::build(&pmf).unwrap();
        let kraft: f64 = (0..4)
            .map(|s| 2.0f64.powi(-(code.length_of(s).unwrap() as i32)))
            .sum();
        assert!((kraft - 1.0).abs() < 1e-12);
    }
}
