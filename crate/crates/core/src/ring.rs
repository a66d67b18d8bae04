//! Unmasked ring and coding primitives: polynomial arithmetic mod M,
//! CBD sampling, compress/decompress and the message encode/decode maps.
//!
//! Coefficients are stored as canonical representatives in `[0, M)`.
//! Signed quantities (secrets, errors, noise) live in [`SignedPoly`] and
//! are reduced only at ring boundaries.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::DetRng;

/// A polynomial with canonical coefficients in `[0, M)` for a modulus
/// stated by the operation using it. Serializes as a bare coefficient
/// array, low index first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    pub coeffs: Vec<u16>,
}

/// A polynomial with small signed coefficients (CBD samples, noise,
/// compression deltas).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedPoly {
    pub coeffs: Vec<i16>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { coeffs: vec![0; n] }
    }

    pub fn constant(c: u16, n: usize) -> Self {
        let mut p = Poly::zero(n);
        p.coeffs[0] = c;
        p
    }

    pub fn uniform(n: usize, m: u32, rng: &mut DetRng) -> Self {
        Poly {
            coeffs: (0..n).map(|_| rng.gen_range(0..m) as u16).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl SignedPoly {
    pub fn zero(n: usize) -> Self {
        SignedPoly { coeffs: vec![0; n] }
    }

    /// Canonical residues mod `m`.
    pub fn to_poly(&self, m: u32) -> Poly {
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| (c as i64).rem_euclid(m as i64) as u16)
                .collect(),
        }
    }
}

fn check_same_len(a: &Poly, b: &Poly) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

fn check_reduced(p: &Poly, m: u32) -> Result<()> {
    for &c in &p.coeffs {
        if (c as u32) >= m {
            return Err(Error::NotReduced { value: c as u32, modulus: m });
        }
    }
    Ok(())
}

/// Coefficient-wise sum mod `m`.
pub fn poly_add(a: &Poly, b: &Poly, m: u32) -> Result<Poly> {
    check_same_len(a, b)?;
    check_reduced(a, m)?;
    check_reduced(b, m)?;
    Ok(Poly {
        coeffs: a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| ((x as u32 + y as u32) % m) as u16)
            .collect(),
    })
}

/// Coefficient-wise difference mod `m`.
pub fn poly_sub(a: &Poly, b: &Poly, m: u32) -> Result<Poly> {
    check_same_len(a, b)?;
    check_reduced(a, m)?;
    check_reduced(b, m)?;
    Ok(Poly {
        coeffs: a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| ((x as u32 + m - y as u32) % m) as u16)
            .collect(),
    })
}

/// Schoolbook product in Z_m[X]/(X^n + 1).
pub fn poly_mul_negacyclic(a: &Poly, b: &Poly, m: u32) -> Result<Poly> {
    check_same_len(a, b)?;
    check_reduced(a, m)?;
    check_reduced(b, m)?;
    let n = a.len();
    // Split the wrapped (negated) tail into its own accumulator so both
    // inner loops stay branchless. Each accumulator is bounded by
    // n * (m-1)^2, which fits u32 for every Kyber-sized modulus.
    if (n as u64) * ((m as u64 - 1) * (m as u64 - 1)) < (1u64 << 32) {
        let mut pos = vec![0u32; n];
        let mut neg = vec![0u32; n];
        for (i, &ai) in a.coeffs.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            let ai = ai as u32;
            let (head, tail) = b.coeffs.split_at(n - i);
            for (j, &bj) in head.iter().enumerate() {
                pos[i + j] += ai * bj as u32;
            }
            for (j, &bj) in tail.iter().enumerate() {
                neg[j] += ai * bj as u32;
            }
        }
        return Ok(Poly {
            coeffs: pos
                .into_iter()
                .zip(neg)
                .map(|(p, q)| (p as i64 - q as i64).rem_euclid(m as i64) as u16)
                .collect(),
        });
    }
    let mut acc = vec![0i64; n];
    for (i, &ai) in a.coeffs.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let ai = ai as i64;
        for (j, &bj) in b.coeffs.iter().enumerate() {
            let prod = ai * bj as i64;
            let idx = i + j;
            if idx < n {
                acc[idx] += prod;
            } else {
                acc[idx - n] -= prod;
            }
        }
    }
    Ok(Poly {
        coeffs: acc
            .into_iter()
            .map(|v| v.rem_euclid(m as i64) as u16)
            .collect(),
    })
}

/// One negacyclic-product coefficient: `(a * b)[i]` mod nothing, exact in
/// i64. Used where only a single output coefficient is needed.
pub fn negacyclic_coeff(a: &[i64], b: &[i64], i: usize) -> i64 {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    let mut acc = 0i64;
    for (t, &at) in a.iter().enumerate() {
        let bi = b[(n + i - t) % n];
        if t <= i {
            acc += at * bi;
        } else {
            acc -= at * bi;
        }
    }
    acc
}

/// One centered-binomial draw from explicit bit words: HW(x) - HW(y) over
/// the low `eta` bits of each.
pub fn cbd_from_words(x: u32, y: u32, eta: u32) -> i32 {
    let mask = (1u32 << eta) - 1;
    (x & mask).count_ones() as i32 - (y & mask).count_ones() as i32
}

/// Centered binomial sample in [-eta, eta].
pub fn cbd_sample(eta: u32, rng: &mut DetRng) -> i32 {
    debug_assert!(eta >= 1 && eta <= 16);
    let bits: u32 = rng.gen();
    cbd_from_words(bits, bits >> 16, eta)
}

pub fn cbd_poly(eta: u32, n: usize, rng: &mut DetRng) -> SignedPoly {
    SignedPoly {
        coeffs: (0..n).map(|_| cbd_sample(eta, rng) as i16).collect(),
    }
}

/// `round(num/den)` with ties rounded up.
fn div_round_half_up(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// `round(target*v/q) mod target`, ties up.
pub fn compress(v: u32, target: u32, q: u32) -> u32 {
    debug_assert!(v < q);
    (div_round_half_up(target as u64 * v as u64, q as u64) % target as u64) as u32
}

/// `round(q*v/source)`, ties up.
pub fn decompress(v: u32, source: u32, q: u32) -> u32 {
    debug_assert!(v < source);
    div_round_half_up(q as u64 * v as u64, source as u64) as u32
}

/// `m * round(q/2)`, ties up.
pub fn encode_bit(m: u8, q: u32) -> u32 {
    debug_assert!(m <= 1);
    m as u32 * div_round_half_up(q as u64, 2) as u32
}

/// `((2c + round(q/2)) / q) & 1`.
pub fn decode_bit(c: u32, q: u32) -> u8 {
    debug_assert!(c < q);
    let half = div_round_half_up(q as u64, 2);
    (((2 * c as u64 + half) / q as u64) & 1) as u8
}

/// Centered representative of `v mod m` in `(-m/2, m/2]`.
pub fn centered(v: u32, m: u32) -> i32 {
    let v = (v % m) as i64;
    let m = m as i64;
    if 2 * v > m {
        (v - m) as i32
    } else {
        v as i32
    }
}
