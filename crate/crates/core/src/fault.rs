//! Bit-fault specifications, probabilistic fault profiles, injection
//! mechanics and the closed-form carry-propagation predicates.
//!
//! Bit positions are 1-based throughout: bit `j` carries value `2^(j-1)`,
//! so the ideal fault on a width-(k+1) register targets bit `k-1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SchemeParams;
use crate::rng::DetRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultKind {
    StuckAt0,
    StuckAt1,
    BitFlip,
}

/// A deterministic fault: which share of which coefficient is hit, and
/// the set of targeted bit positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub share_index: usize,
    pub coeff_index: usize,
    bit_mask: u16,
}

impl FaultSpec {
    pub fn single_bit(
        kind: FaultKind,
        share_index: usize,
        coeff_index: usize,
        bit: u8,
    ) -> Result<Self> {
        Self::with_bits(kind, share_index, coeff_index, &[bit])
    }

    pub fn with_bits(
        kind: FaultKind,
        share_index: usize,
        coeff_index: usize,
        bits: &[u8],
    ) -> Result<Self> {
        let mut mask = 0u16;
        for &b in bits {
            if b == 0 || b > 16 {
                return Err(Error::BitOutOfRange { bit: b, width: 16 });
            }
            mask |= 1 << (b - 1);
        }
        Ok(FaultSpec { kind, share_index, coeff_index, bit_mask: mask })
    }

    pub fn bit_mask(&self) -> u16 {
        self.bit_mask
    }

    /// Highest targeted 1-based bit position.
    pub fn max_bit(&self) -> u8 {
        (16 - self.bit_mask.leading_zeros()) as u8
    }
}

/// Applies `spec` to a w-bit word. Returns the faulted word and whether
/// the fault was active (changed the stored value).
pub fn inject(value: u16, spec: &FaultSpec, width: u8) -> Result<(u16, bool)> {
    if spec.max_bit() > width {
        return Err(Error::BitOutOfRange { bit: spec.max_bit(), width });
    }
    debug_assert!(width == 16 || value < (1 << width));
    let m = spec.bit_mask;
    let new = match spec.kind {
        FaultKind::StuckAt1 => value | m,
        FaultKind::StuckAt0 => value & !m,
        FaultKind::BitFlip => value ^ m,
    };
    Ok((new, new != value))
}

/// Outcome of the closed-form propagation predicate for a single-bit
/// stuck-at fault at bit k-1 of one share.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropagationVerdict {
    pub active: bool,
    pub propagated_to_msb: bool,
    pub z_before: u16,
    pub z_after: u16,
}

/// Predicts whether a single-bit fault at bit k-1 of the share `x_share`
/// reaches the MSB (bit k+1) of the unmasked sum `z`, on a (k+1)-bit
/// register.
///
/// Stuck-at-1 propagates iff the fault is active and z's bits k-1 and k
/// are both 1; stuck-at-0 is the symmetric case with both bits 0. For a
/// bit flip the direction depends on the share bit and the verdict is
/// computed from the resulting carry directly. Any number of shares
/// reduces to this two-share view by summing the untouched shares.
pub fn lemma_predicate(z: u16, x_share: u16, k: u8, kind: FaultKind) -> PropagationVerdict {
    debug_assert!(k >= 2);
    let width = k + 1;
    let modulus = 1u32 << width;
    let fault_value = 1u32 << (k - 2); // bit k-1, 1-based
    let share_bit_set = (x_share as u32) & fault_value != 0;

    let (active, delta): (bool, i32) = match kind {
        FaultKind::StuckAt1 => (!share_bit_set, fault_value as i32),
        FaultKind::StuckAt0 => (share_bit_set, -(fault_value as i32)),
        FaultKind::BitFlip => (
            true,
            if share_bit_set {
                -(fault_value as i32)
            } else {
                fault_value as i32
            },
        ),
    };

    let z_after = if active {
        ((z as i32 + delta).rem_euclid(modulus as i32)) as u16
    } else {
        z
    };

    let bit = |v: u16, j: u8| (v >> (j - 1)) & 1; // 1-based
    let propagated = match kind {
        FaultKind::StuckAt1 => active && bit(z, k - 1) == 1 && bit(z, k) == 1,
        FaultKind::StuckAt0 => active && bit(z, k - 1) == 0 && bit(z, k) == 0,
        FaultKind::BitFlip => bit(z_after, width) != bit(z, width),
    };

    PropagationVerdict {
        active,
        propagated_to_msb: propagated,
        z_before: z,
        z_after,
    }
}

/// Closed intervals of A2B-input values g for which an active ideal
/// stuck-at fault at bit k-1 flips the decoded Kyber message bit.
pub fn kyber_failure_ranges(params: &SchemeParams, kind: FaultKind) -> Vec<(u32, u32)> {
    let k = params.k;
    let top = (1u32 << (k + 1)) - 1;
    let sa1 = (1 << k) + (1 << (k - 1)) + (1 << (k - 2));
    let sa0_hi = (1 << (k - 2)) - 1;
    match kind {
        FaultKind::StuckAt1 => vec![(sa1, top)],
        FaultKind::StuckAt0 => vec![(0, sa0_hi)],
        // Either direction is possible depending on the faulted share bit.
        FaultKind::BitFlip => vec![(0, sa0_hi), (sa1, top)],
    }
}

/// Closed intervals of decode-input values m' for which an active ideal
/// stuck-at fault at bit epsilon_p - 1 flips the decoded Saber message
/// bit.
pub fn saber_failure_ranges(params: &SchemeParams, kind: FaultKind) -> Vec<(u32, u32)> {
    let p = params.p;
    let sa1 = vec![(p / 4, p / 2 - 1), (3 * p / 4, p - 1)];
    let sa0 = vec![(0, p / 4 - 1), (p / 2, 3 * p / 4 - 1)];
    match kind {
        FaultKind::StuckAt1 => sa1,
        FaultKind::StuckAt0 => sa0,
        FaultKind::BitFlip => vec![(0, p - 1)],
    }
}

pub fn in_ranges(v: u32, ranges: &[(u32, u32)]) -> bool {
    ranges.iter().any(|&(lo, hi)| v >= lo && v <= hi)
}

/// Which bits a profile entry targets on each draw.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitPattern {
    /// Fixed set of 1-based bit positions.
    Fixed(Vec<u8>),
    /// A fresh uniform nonempty subset of the positions lo..=hi per draw.
    RandomSubset { lo: u8, hi: u8 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub probability: f64,
    pub kind: FaultKind,
    pub share_index: usize,
    pub bits: BitPattern,
}

/// A probabilistic mixture of fault templates; one is drawn per
/// injection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultProfile {
    pub entries: Vec<ProfileEntry>,
}

impl FaultProfile {
    /// Single-bit stuck-at-1 at bit k-1 of share 0, every injection.
    pub fn ideal(params: &SchemeParams) -> Self {
        FaultProfile {
            entries: vec![ProfileEntry {
                probability: 1.0,
                kind: FaultKind::StuckAt1,
                share_index: 0,
                bits: BitPattern::Fixed(vec![params.fault_bit()]),
            }],
        }
    }

    /// The observed EM mixture: 10% single-bit stuck-at-1 at bit k-1, 90%
    /// stuck-at-1 on a random nonempty subset of bits 1..=8.
    pub fn practical(params: &SchemeParams) -> Self {
        FaultProfile {
            entries: vec![
                ProfileEntry {
                    probability: 0.1,
                    kind: FaultKind::StuckAt1,
                    share_index: 0,
                    bits: BitPattern::Fixed(vec![params.fault_bit()]),
                },
                ProfileEntry {
                    probability: 0.9,
                    kind: FaultKind::StuckAt1,
                    share_index: 0,
                    bits: BitPattern::RandomSubset { lo: 1, hi: 8 },
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::config("fault profile has no entries"));
        }
        let total: f64 = self.entries.iter().map(|e| e.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::ProfileWeights(total));
        }
        for e in &self.entries {
            if e.probability < 0.0 {
                return Err(Error::ProfileWeights(e.probability));
            }
            match &e.bits {
                BitPattern::Fixed(bits) if bits.is_empty() => {
                    return Err(Error::config("fixed bit pattern is empty"));
                }
                BitPattern::RandomSubset { lo, hi } if lo == &0 || lo > hi => {
                    return Err(Error::config("invalid random-subset bit range"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The common fault kind of all entries; inequality construction
    /// needs a single kind to fix the threshold side.
    pub fn kind(&self) -> Result<FaultKind> {
        let first = self.entries.first().ok_or(Error::MixedFaultKinds)?.kind;
        if self.entries.iter().all(|e| e.kind == first) {
            Ok(first)
        } else {
            Err(Error::MixedFaultKinds)
        }
    }

    /// Materializes one fault draw for the given coefficient.
    pub fn draw(&self, coeff_index: usize, rng: &mut DetRng) -> FaultSpec {
        let mut pick: f64 = rng.gen();
        let mut entry = &self.entries[self.entries.len() - 1];
        for e in &self.entries {
            if pick < e.probability {
                entry = e;
                break;
            }
            pick -= e.probability;
        }
        let bits: Vec<u8> = match &entry.bits {
            BitPattern::Fixed(bits) => bits.clone(),
            BitPattern::RandomSubset { lo, hi } => loop {
                let picked: Vec<u8> =
                    (*lo..=*hi).filter(|_| rng.gen::<bool>()).collect();
                if !picked.is_empty() {
                    break picked;
                }
            },
        };
        FaultSpec::with_bits(entry.kind, entry.share_index, coeff_index, &bits)
            .expect("validated profile produces valid specs")
    }
}
