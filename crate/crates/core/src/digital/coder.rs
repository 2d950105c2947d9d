//! Binary arithmetic coder with 32-bit state over static frequency tables, and
//! the serialized bit stream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STATE_BITS: u32 = 32;
const FULL: u64 = (1 << STATE_BITS) - 1;
const HALF: u64 = 1 << (STATE_BITS - 1);
const QUARTER: u64 = HALF >> 1;

/// Total of every frequency table; must stay well below `QUARTER`.
pub const FREQ_TOTAL: u32 = 1 << 16;

/// Cumulative frequencies `cum[0] = 0 < cum[1] < … < cum[k] ≤ FREQ_TOTAL`;
/// symbol `s` owns `[cum[s], cum[s + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqTable {
    cum: Vec<u32>,
}

impl FreqTable {
    /// Every symbol gets at least one count so any symbol stays codable.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        let k = p.len() as u32;
        if k == 0 || k >= FREQ_TOTAL / 2 {
            return Err(Error::config(format!("alphabet size {k} out of range")));
        }
        let spare = f64::from(FREQ_TOTAL - k);
        let mut cum = Vec::with_capacity(p.len() + 1);
        cum.push(0u32);
        let mut acc = 0u32;
        for &pi in p {
            let pi = if pi.is_finite() { pi.clamp(0.0, 1.0) } else { 0.0 };
            acc += 1 + (pi * spare).floor() as u32;
            cum.push(acc);
        }
        debug_assert!(acc <= FREQ_TOTAL);
        Ok(Self { cum })
    }

    pub fn symbols(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn total(&self) -> u32 {
        self.cum[self.cum.len() - 1]
    }

    /// Ideal code length of `symbol` under this table.
    pub fn bits(&self, symbol: usize) -> f64 {
        (f64::from(self.total()) / f64::from(self.cum[symbol + 1] - self.cum[symbol])).log2()
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    n_bits: usize,
}

impl BitWriter {
    fn push(&mut self, bit: u64) {
        if self.n_bits.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit != 0 {
            *self.bytes.last_mut().expect("pushed above") |= 0x80 >> (self.n_bits % 8);
        }
        self.n_bits += 1;
    }
}

pub struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self { low: 0, high: FULL, pending: 0, out: BitWriter::default() }
    }

    pub fn encode(&mut self, table: &FreqTable, symbol: usize) {
        let range = self.high - self.low + 1;
        let total = u64::from(table.total());
        let (s_lo, s_hi) = (u64::from(table.cum[symbol]), u64::from(table.cum[symbol + 1]));
        self.high = self.low + s_hi * range / total - 1;
        self.low += s_lo * range / total;
        while (self.low ^ self.high) & HALF == 0 {
            let bit = self.low >> (STATE_BITS - 1);
            self.out.push(bit);
            for _ in 0..self.pending {
                self.out.push(bit ^ 1);
            }
            self.pending = 0;
            self.low = (self.low << 1) & FULL;
            self.high = ((self.high << 1) & FULL) | 1;
        }
        while self.low & !self.high & QUARTER != 0 {
            self.pending += 1;
            self.low = (self.low << 1) ^ HALF;
            self.high = ((self.high ^ HALF) << 1) | HALF | 1;
        }
    }

    /// Flushes one terminating bit (the decoder reads zeros past the end).
    pub fn finish(mut self) -> (Vec<u8>, usize) {
        self.out.push(1);
        for _ in 0..self.pending {
            self.out.push(0);
        }
        (self.out.bytes, self.out.n_bits)
    }
}

pub struct Decoder<'a> {
    low: u64,
    high: u64,
    code: u64,
    bytes: &'a [u8],
    n_bits: usize,
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(bytes: &'a [u8], n_bits: usize) -> Self {
        let mut d = Self { low: 0, high: FULL, code: 0, bytes, n_bits, pos: 0 };
        for _ in 0..STATE_BITS {
            d.code = (d.code << 1) | d.next_bit();
        }
        d
    }

    fn next_bit(&mut self) -> u64 {
        let bit = if self.pos < self.n_bits { (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1 } else { 0 };
        self.pos += 1;
        u64::from(bit)
    }

    pub fn decode(&mut self, table: &FreqTable) -> Result<usize> {
        let range = self.high - self.low + 1;
        let total = u64::from(table.total());
        let offset = self.code.checked_sub(self.low).ok_or_else(|| Error::Corrupt("code below interval".into()))?;
        let value = ((offset + 1) * total - 1) / range;
        let symbol = table.cum.partition_point(|&c| u64::from(c) <= value);
        if symbol == 0 || symbol > table.symbols() {
            return Err(Error::Corrupt("code outside the frequency table".into()));
        }
        let symbol = symbol - 1;
        let (s_lo, s_hi) = (u64::from(table.cum[symbol]), u64::from(table.cum[symbol + 1]));
        self.high = self.low + s_hi * range / total - 1;
        self.low += s_lo * range / total;
        while (self.low ^ self.high) & HALF == 0 {
            self.low = (self.low << 1) & FULL;
            self.high = ((self.high << 1) & FULL) | 1;
            self.code = ((self.code << 1) & FULL) | self.next_bit();
        }
        while self.low & !self.high & QUARTER != 0 {
            self.low = (self.low << 1) ^ HALF;
            self.high = ((self.high ^ HALF) << 1) | HALF | 1;
            self.code = (self.code & HALF) | ((self.code << 1) & (FULL >> 1)) | self.next_bit();
        }
        Ok(symbol)
    }
}

/// A coded latent. `payload` packs `n_bits` bits most-significant-bit first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bitstream {
    pub payload: Vec<u8>,
    pub n_bits: usize,
    /// Entropy-model estimate of the code length.
    pub est_bits: f64,
}

impl Bitstream {
    /// Length-prefixed wire form: `n_bits` as little-endian `u32`, then the payload bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.payload.len());
        out.extend_from_slice(&(self.n_bits as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Inverse of [`Bitstream::to_bytes`]; `est_bits` is not transmitted and reads back as 0.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let head: [u8; 4] = bytes
            .get(..4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| Error::Corrupt("bit stream shorter than its length prefix".into()))?;
        let n_bits = u32::from_le_bytes(head) as usize;
        let payload = bytes[4..].to_vec();
        if payload.len() != n_bits.div_ceil(8) {
            return Err(Error::Corrupt(format!("{} payload bytes for {n_bits} bits", payload.len())));
        }
        if !n_bits.is_multiple_of(8) && payload[payload.len() - 1] & (0xFF >> (n_bits % 8)) != 0 {
            return Err(Error::Corrupt("non-zero padding bits".into()));
        }
        Ok(Self { payload, n_bits, est_bits: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn skewed(k: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..k).map(|i| 0.6f64.powi(i as i32)).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }

    #[test]
    fn round_trip_and_length_close_to_ideal() {
        let table = FreqTable::from_probabilities(&skewed(20)).unwrap();
        let mut rng = crate::rng::rng_from(5);
        let symbols: Vec<usize> = (0..2000)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                skewed(20)
                    .iter()
                    .position(|p| {
                        acc += p;
                        u < acc
                    })
                    .unwrap_or(19)
            })
            .collect();
        let mut enc = Encoder::new();
        for &s in &symbols {
            enc.encode(&table, s);
        }
        let (bytes, n_bits) = enc.finish();
        let ideal: f64 = symbols.iter().map(|&s| table.bits(s)).sum();
        assert!((n_bits as f64) <= ideal + 3.0, "{n_bits} vs {ideal}");
        assert!((n_bits as f64) >= ideal - 1.0);
        let mut dec = Decoder::new(&bytes, n_bits);
        let back: Vec<usize> = symbols.iter().map(|_| dec.decode(&table).unwrap()).collect();
        assert_eq!(back, symbols);
    }

    #[test]
    fn extreme_symbols_round_trip() {
        let table = FreqTable::from_probabilities(&skewed(129)).unwrap();
        let symbols = [128, 0, 128, 127, 64, 0, 0, 128];
        let mut enc = Encoder::new();
        for &s in &symbols {
            enc.encode(&table, s);
        }
        let (bytes, n_bits) = enc.finish();
        let mut dec = Decoder::new(&bytes, n_bits);
        for &s in &symbols {
            assert_eq!(dec.decode(&table).unwrap(), s);
        }
    }

    #[test]
    fn serialization_round_trip_and_corruption() {
        let bs = Bitstream { payload: vec![0b1011_0000], n_bits: 4, est_bits: 3.5 };
        let bytes = bs.to_bytes();
        assert_eq!(bytes, vec![4, 0, 0, 0, 0b1011_0000]);
        let back = Bitstream::from_bytes(&bytes).unwrap();
        assert_eq!((back.payload, back.n_bits), (bs.payload.clone(), 4));
        assert!(Bitstream::from_bytes(&[4, 0, 0]).is_err());
        assert!(Bitstream::from_bytes(&[4, 0, 0, 0, 0b1011_0001]).is_err());
        assert!(Bitstream::from_bytes(&[9, 0, 0, 0, 0]).is_err());
    }
}
