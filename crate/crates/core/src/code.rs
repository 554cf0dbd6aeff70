//! Reed–Muller codes RM(r, v) of length `2^v <= 64`, with Reed's
//! majority-logic decoder.
//!
//! Position `p` evaluates the monomials at the point whose coordinates are
//! the bits of `p`. Information bits follow monomial order: degree first,
//! then variable mask, so info bit 0 is the constant row and `encode(10..0)`
//! is the all-ones word.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Word = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReedMuller {
    order: u32,
    vars: u32,
    monomials: Vec<u32>,
    rows: Vec<Word>,
}

fn binomial(n: u32, k: u32) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) as usize / (i + 1) as usize)
}

impl ReedMuller {
    pub fn new(order: u32, vars: u32) -> Result<Self> {
        if vars == 0 || vars > 6 {
            return Err(Error::Config(format!(
                "reed-muller: 1 <= v <= 6, got {vars}"
            )));
        }
        if order > vars {
            return Err(Error::Config(format!(
                "reed-muller: order {order} exceeds {vars} variables"
            )));
        }
        let mut monomials: Vec<u32> = (0u32..(1 << vars))
            .filter(|m| m.count_ones() <= order)
            .collect();
        monomials.sort_by_key(|&m| (m.count_ones(), m));
        let n = 1u32 << vars;
        let rows = monomials
            .iter()
            .map(|&mask| {
                (0..n)
                    .filter(|&p| p & mask == mask)
                    .fold(0, |w, p| w | (1 << p))
            })
            .collect();
        Ok(Self {
            order,
            vars,
            monomials,
            rows,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        1 << self.vars
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        (0..=self.order).map(|i| binomial(self.vars, i)).sum()
    }

    pub fn min_distance(&self) -> usize {
        1 << (self.vars - self.order)
    }

    /// Guaranteed correction radius.
    pub fn t(&self) -> usize {
        (self.min_distance() - 1) / 2
    }

    pub fn full_mask(&self) -> Word {
        if self.len() == 64 {
            Word::MAX
        } else {
            (1 << self.len()) - 1
        }
    }

    pub fn generator(&self) -> &[Word] {
        &self.rows
    }

    /// Generator rows of the dual code RM(v - r - 1, v). A word is a codeword
    /// iff it has even overlap with every one of them.
    pub fn parity_checks(&self) -> Vec<Word> {
        if self.order == self.vars {
            return Vec::new();
        }
        ReedMuller::new(self.vars - self.order - 1, self.vars)
            .expect("dual parameters are valid")
            .rows
    }

    pub fn is_codeword(&self, w: Word) -> bool {
        self.parity_checks()
            .iter()
            .all(|&h| (h & w).count_ones().is_multiple_of(2))
    }

    pub fn encode(&self, info: &[bool]) -> Result<Word> {
        if info.len() != self.dimension() {
            return Err(Error::Config(format!(
                "encode: expected {} information bits, got {}",
                self.dimension(),
                info.len()
            )));
        }
        Ok(self.encode_unchecked(info))
    }

    fn encode_unchecked(&self, info: &[bool]) -> Word {
        info.iter()
            .zip(&self.rows)
            .filter(|(&b, _)| b)
            .fold(0, |w, (_, &row)| w ^ row)
    }

    /// Encodes the information word given as the low bits of `x`.
    pub fn encode_index(&self, x: u64) -> Word {
        self.rows
            .iter()
            .enumerate()
            .filter(|(i, _)| x >> i & 1 == 1)
            .fold(0, |w, (_, &row)| w ^ row)
    }

    /// Every codeword, indexed by information word. Only for small codes.
    pub fn codewords(&self) -> Vec<Word> {
        (0..1u64 << self.dimension())
            .map(|x| self.encode_index(x))
            .collect()
    }

    /// Majority-logic decoding. Fails on a tied vote or when the result is
    /// farther than `t` from the input.
    pub fn decode(&self, word: Word) -> Option<Word> {
        let n = self.len() as u32;
        let mut residual = word & self.full_mask();
        let mut decoded: Word = 0;
        for deg in (0..=self.order).rev() {
            let mut layer: Word = 0;
            for (idx, &mask) in self.monomials.iter().enumerate() {
                if mask.count_ones() != deg {
                    continue;
                }
                // one vote per assignment of the variables outside the monomial
                let mut ones = 0u32;
                let mut votes = 0u32;
                for y in 0..n {
                    if y & mask != 0 {
                        continue;
                    }
                    let mut parity = 0;
                    let mut sub = mask;
                    loop {
                        parity ^= (residual >> (y | sub)) & 1;
                        if sub == 0 {
                            break;
                        }
                        sub = (sub - 1) & mask;
                    }
                    votes += 1;
                    ones += parity as u32;
                }
                if 2 * ones == votes {
                    return None;
                }
                if 2 * ones > votes {
                    layer ^= self.rows[idx];
                }
            }
            residual ^= layer;
            decoded ^= layer;
        }
        let dist = (decoded ^ word & self.full_mask()).count_ones() as usize;
        (dist <= self.t()).then_some(decoded)
    }
}

pub fn bit(word: Word, i: usize) -> bool {
    word >> i & 1 == 1
}

pub fn to_bits(word: Word, len: usize) -> Vec<bool> {
    (0..len).map(|i| bit(word, i)).collect()
}

pub fn from_bits(bits: &[bool]) -> Word {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0, |w, (i, _)| w | (1 << i))
}

/// XOR of the word's bits over `subset`, a parity-subset hash.
pub fn subset_parity(word: Word, subset: Word) -> bool {
    (word & subset).count_ones() % 2 == 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeConfig {
    pub order: u32,
    /// Code length; a power of two.
    pub m: usize,
    pub sigma: f64,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            order: 2,
            m: 32,
            sigma: 1.0 / 16.0,
        }
    }
}

impl CodeConfig {
    pub const RM_1_4: CodeConfig = CodeConfig {
        order: 1,
        m: 16,
        sigma: 1.0 / 8.0,
    };

    /// Parses `code.family` values such as `rm(2,5)` or `reed-muller`.
    pub fn set_family(&mut self, family: &str) -> Result<()> {
        let f = family.trim().to_ascii_lowercase();
        if f == "reed-muller" || f == "rm" {
            return Ok(());
        }
        let inner = f
            .strip_prefix("rm(")
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::Config(format!("unknown code family {family}")))?;
        let (r, v) = inner
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("unknown code family {family}")))?;
        let r: u32 = r
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad order in {family}")))?;
        let v: u32 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad length in {family}")))?;
        if v > 6 {
            return Err(Error::Config(format!("{family}: length above 64")));
        }
        self.order = r;
        self.m = 1 << v;
        Ok(())
    }

    pub fn sigma_m(&self) -> usize {
        (self.sigma * self.m as f64).round() as usize
    }

    pub fn build(&self) -> Result<ReedMuller> {
        if !self.m.is_power_of_two() || self.m < 2 || self.m > 64 {
            return Err(Error::Config(format!(
                "code.m must be a power of two in [2, 64], got {}",
                self.m
            )));
        }
        let sm = self.sigma * self.m as f64;
        if sm < 1.0 || (sm - sm.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "sigma * m must be a positive integer, got {sm}"
            )));
        }
        if 3 * self.sigma_m() > self.m {
            return Err(Error::Config(
                "sigma too large for three disjoint test sets".into(),
            ));
        }
        ReedMuller::new(self.order, self.m.trailing_zeros())
    }
}
