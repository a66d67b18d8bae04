//! Scheme parameter sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named parameter sets. The Kyber variants carry the full KEM surface;
/// the Saber variants are used for the decode-range analysis only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Kyber512,
    Kyber768,
    Kyber1024,
    SaberLight,
    Saber,
    SaberFire,
}

impl Scheme {
    pub fn params(self) -> SchemeParams {
        match self {
            Scheme::Kyber512 => SchemeParams {
                name: self,
                n: 256,
                l: 2,
                q: 3329,
                p: 1 << 10,
                t: 1 << 4,
                eta1: 3,
                eta2: 2,
                k: 12,
                fail_prob_log2: -139,
            },
            Scheme::Kyber768 => SchemeParams {
                name: self,
                n: 256,
                l: 3,
                q: 3329,
                p: 1 << 10,
                t: 1 << 4,
                eta1: 2,
                eta2: 2,
                k: 12,
                fail_prob_log2: -164,
            },
            Scheme::Kyber1024 => SchemeParams {
                name: self,
                n: 256,
                l: 4,
                q: 3329,
                p: 1 << 11,
                t: 1 << 5,
                eta1: 2,
                eta2: 2,
                k: 12,
                fail_prob_log2: -174,
            },
            Scheme::SaberLight => SchemeParams {
                name: self,
                n: 256,
                l: 2,
                q: 1 << 13,
                p: 1 << 10,
                t: 1 << 3,
                eta1: 5,
                eta2: 5,
                k: 10,
                fail_prob_log2: -120,
            },
            Scheme::Saber => SchemeParams {
                name: self,
                n: 256,
                l: 3,
                q: 1 << 13,
                p: 1 << 10,
                t: 1 << 4,
                eta1: 4,
                eta2: 4,
                k: 10,
                fail_prob_log2: -136,
            },
            Scheme::SaberFire => SchemeParams {
                name: self,
                n: 256,
                l: 4,
                q: 1 << 13,
                p: 1 << 10,
                t: 1 << 6,
                eta1: 3,
                eta2: 3,
                k: 10,
                fail_prob_log2: -165,
            },
        }
    }

    pub fn from_name(name: &str) -> Result<Scheme> {
        match name.to_ascii_lowercase().as_str() {
            "kyber512" => Ok(Scheme::Kyber512),
            "kyber768" => Ok(Scheme::Kyber768),
            "kyber1024" => Ok(Scheme::Kyber1024),
            "saberlight" | "lightsaber" => Ok(Scheme::SaberLight),
            "saber" => Ok(Scheme::Saber),
            "saberfire" | "firesaber" => Ok(Scheme::SaberFire),
            other => Err(Error::config(format!("unknown scheme {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Kyber512 => "kyber512",
            Scheme::Kyber768 => "kyber768",
            Scheme::Kyber1024 => "kyber1024",
            Scheme::SaberLight => "saberlight",
            Scheme::Saber => "saber",
            Scheme::SaberFire => "saberfire",
        }
    }
}

/// Moduli, ring degree, vector length, CBD widths and register width for
/// one scheme variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub name: Scheme,
    /// Ring degree (coefficients per polynomial).
    pub n: usize,
    /// Module rank (polynomials per vector).
    pub l: usize,
    /// Ciphertext modulus.
    pub q: u32,
    /// u-compression modulus (power of two).
    pub p: u32,
    /// v-compression modulus (power of two).
    pub t: u32,
    pub eta1: u32,
    pub eta2: u32,
    /// Register width index: ceil(log2(q)) for prime q, epsilon_p for the
    /// Saber variants.
    pub k: u32,
    /// Informational failure exponent.
    pub fail_prob_log2: i32,
}

impl SchemeParams {
    pub fn is_kyber(&self) -> bool {
        matches!(
            self.name,
            Scheme::Kyber512 | Scheme::Kyber768 | Scheme::Kyber1024
        )
    }

    pub fn is_saber(&self) -> bool {
        !self.is_kyber()
    }

    /// Modulus of the decode-pipeline input: q for Kyber, p for Saber
    /// (the Saber decode path lives entirely mod 2^epsilon_p).
    pub fn decode_modulus(&self) -> u32 {
        if self.is_kyber() {
            self.q
        } else {
            self.p
        }
    }

    /// Register width of the A2B conversion inside decode: k+1 bits for
    /// Kyber (mod-q shares are first moved to mod 2^(k+1)), k bits for
    /// Saber.
    pub fn a2b_width(&self) -> u8 {
        if self.is_kyber() {
            (self.k + 1) as u8
        } else {
            self.k as u8
        }
    }

    /// 1-based bit position targeted by the ideal fault model: k-1.
    pub fn fault_bit(&self) -> u8 {
        (self.k - 1) as u8
    }

    /// Number of unknowns in the key-recovery system: 2*l*n.
    pub fn unknowns(&self) -> usize {
        2 * self.l * self.n
    }

    pub fn half_q_floor(&self) -> u32 {
        self.q / 2
    }

    pub fn quarter_q_floor(&self) -> u32 {
        self.q / 4
    }

    /// The encoding of message bit 1: round(q/2), ties up.
    pub fn encode_one(&self) -> u32 {
        (self.q + 1) / 2
    }
}
