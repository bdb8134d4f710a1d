//! Prefix-free codes and the bitstream layer: packed bit strings with a
//! fixed container format, the Zipf integer code for codebook indices, an
//! Elias delta fallback, and canonical Huffman codes for finite alphabets.

mod bits;
mod huffman;
mod zipf;

pub use bits::{BitReader, BitString, CONTAINER_VERSION, MAGIC};
pub use huffman::HuffmanCode;
pub use zipf::{zipf_params, EliasDelta, IntegerCode, ZipfCode, EXCESS_CONST};
