//! LPR/Kyber key generation, encapsulation with full randomness records,
//! the faulted masked decryption oracle and decryption-noise bookkeeping.
//!
//! The attacker is the encapsulator and works with self-generated valid
//! ciphertexts, so the record keeps every sample and both compression
//! deltas. Decryption failure is declared as message mismatch: for valid
//! ciphertexts re-encryption is a deterministic function of the decoded
//! message, so m* != m is exactly the FO ciphertext mismatch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fault::FaultSpec;
use crate::masking::{arith_share, masked_decode_kyber, MaskedDecodeTrace};
use crate::params::SchemeParams;
use crate::ring::{
    cbd_poly, centered, compress, decompress, encode_bit, negacyclic_coeff, poly_add,
    poly_mul_negacyclic, poly_sub, Poly, SignedPoly,
};
use crate::rng::{stream_id, DetRng};

const DOMAIN_MATRIX: u64 = 0x4d41;
const DOMAIN_SECRET: u64 = 0x5345;
const DOMAIN_ERROR: u64 = 0x4552;

/// Ground-truth bundle: public material plus the retained secrets. The
/// secrets feed only verification and noise tooling, never the attack
/// pipeline (inequality construction sees records alone).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyPair {
    pub params: SchemeParams,
    pub seed: u64,
    pub a_seed: u64,
    pub matrix_a: Vec<Vec<Poly>>,
    pub b: Vec<Poly>,
    pub s: Vec<SignedPoly>,
    pub e: Vec<SignedPoly>,
}

/// The encapsulator's view of one ciphertext, with all randomness and
/// the compression deltas retained.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EncapsulationRecord {
    /// n message bits.
    pub m: Vec<u8>,
    pub s_prime: Vec<SignedPoly>,
    pub e1: Vec<SignedPoly>,
    pub e2: SignedPoly,
    /// Decompressed ciphertext parts, mod q.
    pub u: Vec<Poly>,
    pub v: Poly,
    /// decompress(compress(.)) - raw, centered.
    pub delta_u: Vec<SignedPoly>,
    pub delta_v: SignedPoly,
}

/// Regenerates the public matrix from its seed, row-major.
pub fn expand_matrix(params: &SchemeParams, a_seed: u64) -> Vec<Vec<Poly>> {
    (0..params.l)
        .map(|r| {
            (0..params.l)
                .map(|c| {
                    let mut rng = DetRng::with_stream(a_seed, (r * params.l + c) as u64);
                    Poly::uniform(params.n, params.q, &mut rng)
                })
                .collect()
        })
        .collect()
}

pub fn keygen(params: &SchemeParams, seed: u64) -> KeyPair {
    let a_seed = stream_id(DOMAIN_MATRIX, &[seed]);
    let matrix_a = expand_matrix(params, a_seed);
    let mut s_rng = DetRng::with_stream(stream_id(DOMAIN_SECRET, &[seed]), 0);
    let mut e_rng = DetRng::with_stream(stream_id(DOMAIN_ERROR, &[seed]), 0);
    let s: Vec<SignedPoly> = (0..params.l)
        .map(|_| cbd_poly(params.eta1, params.n, &mut s_rng))
        .collect();
    let e: Vec<SignedPoly> = (0..params.l)
        .map(|_| cbd_poly(params.eta1, params.n, &mut e_rng))
        .collect();

    let b = (0..params.l)
        .map(|r| {
            let mut acc = Poly::zero(params.n);
            for c in 0..params.l {
                let prod =
                    poly_mul_negacyclic(&matrix_a[r][c], &s[c].to_poly(params.q), params.q)
                        .expect("keygen operands are reduced");
                acc = poly_add(&acc, &prod, params.q).expect("keygen operands are reduced");
            }
            poly_add(&acc, &e[r].to_poly(params.q), params.q)
                .expect("keygen operands are reduced")
        })
        .collect();

    KeyPair { params: *params, seed, a_seed, matrix_a, b, s, e }
}

/// Encryption with explicit randomness; `compress_ciphertext` disables
/// the compress/decompress round trip when false (deltas become zero).
pub fn encrypt_with(
    params: &SchemeParams,
    matrix_a: &[Vec<Poly>],
    b: &[Poly],
    m: &[u8],
    s_prime: Vec<SignedPoly>,
    e1: Vec<SignedPoly>,
    e2: SignedPoly,
    compress_ciphertext: bool,
) -> EncapsulationRecord {
    let q = params.q;
    let l = params.l;

    // u_raw = A^T s' + e1
    let u_raw: Vec<Poly> = (0..l)
        .map(|c| {
            let mut acc = e1[c].to_poly(q);
            for r in 0..l {
                let prod = poly_mul_negacyclic(&matrix_a[r][c], &s_prime[r].to_poly(q), q)
                    .expect("reduced");
                acc = poly_add(&acc, &prod, q).expect("reduced");
            }
            acc
        })
        .collect();

    // v_raw = b.s' + e2 + Encode(m)
    let mut v_raw = e2.to_poly(q);
    for r in 0..l {
        let prod = poly_mul_negacyclic(&b[r], &s_prime[r].to_poly(q), q).expect("reduced");
        v_raw = poly_add(&v_raw, &prod, q).expect("reduced");
    }
    let enc = Poly {
        coeffs: m.iter().map(|&bit| encode_bit(bit, q) as u16).collect(),
    };
    v_raw = poly_add(&v_raw, &enc, q).expect("reduced");

    let (u, delta_u): (Vec<Poly>, Vec<SignedPoly>) = u_raw
        .iter()
        .map(|poly| round_trip(poly, params.p, q, compress_ciphertext))
        .unzip();
    let (v, delta_v) = round_trip(&v_raw, params.t, q, compress_ciphertext);

    EncapsulationRecord { m: m.to_vec(), s_prime, e1, e2, u, v, delta_u, delta_v }
}

fn round_trip(poly: &Poly, target: u32, q: u32, enabled: bool) -> (Poly, SignedPoly) {
    if !enabled {
        return (poly.clone(), SignedPoly::zero(poly.len()));
    }
    let back = Poly {
        coeffs: poly
            .coeffs
            .iter()
            .map(|&c| decompress(compress(c as u32, target, q), target, q) as u16)
            .collect(),
    };
    let delta = SignedPoly {
        coeffs: back
            .coeffs
            .iter()
            .zip(&poly.coeffs)
            .map(|(&d, &r)| centered(((d as u32) + q - r as u32) % q, q) as i16)
            .collect(),
    };
    (back, delta)
}

/// Standard encapsulation: uniform message, CBD randomness, compressed
/// ciphertext.
pub fn encapsulate(kp: &KeyPair, rng: &mut DetRng) -> EncapsulationRecord {
    let params = &kp.params;
    let m = sample_message(params.n, rng);
    let s_prime: Vec<SignedPoly> = (0..params.l)
        .map(|_| cbd_poly(params.eta1, params.n, rng))
        .collect();
    let e1: Vec<SignedPoly> = (0..params.l)
        .map(|_| cbd_poly(params.eta2, params.n, rng))
        .collect();
    let e2 = cbd_poly(params.eta2, params.n, rng);
    encrypt_with(params, &kp.matrix_a, &kp.b, &m, s_prime, e1, e2, true)
}

/// Message bits only; drawn first so a candidate can be screened without
/// paying for the ring arithmetic.
pub fn sample_message(n: usize, rng: &mut DetRng) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u32) as u8).collect()
}

/// Completes an encapsulation whose message was already drawn from the
/// same stream.
pub fn encapsulate_with_message(
    kp: &KeyPair,
    m: Vec<u8>,
    rng: &mut DetRng,
) -> EncapsulationRecord {
    let params = &kp.params;
    let s_prime: Vec<SignedPoly> = (0..params.l)
        .map(|_| cbd_poly(params.eta1, params.n, rng))
        .collect();
    let e1: Vec<SignedPoly> = (0..params.l)
        .map(|_| cbd_poly(params.eta2, params.n, rng))
        .collect();
    let e2 = cbd_poly(params.eta2, params.n, rng);
    encrypt_with(params, &kp.matrix_a, &kp.b, &m, s_prime, e1, e2, true)
}

/// The decryption input m' = v - u.s mod q, all coefficients.
pub fn m_prime(kp: &KeyPair, record: &EncapsulationRecord) -> Poly {
    let q = kp.params.q;
    let mut us = Poly::zero(kp.params.n);
    for c in 0..kp.params.l {
        let prod = poly_mul_negacyclic(&record.u[c], &kp.s[c].to_poly(q), q).expect("reduced");
        us = poly_add(&us, &prod, q).expect("reduced");
    }
    poly_sub(&record.v, &us, q).expect("reduced")
}

/// Single coefficient of m' = v - u.s, without the full multiplication.
pub fn m_prime_coeff(kp: &KeyPair, record: &EncapsulationRecord, i: usize) -> u16 {
    let q = kp.params.q as i64;
    let mut acc = 0i64;
    for c in 0..kp.params.l {
        let u = &record.u[c].coeffs;
        let s = &kp.s[c].coeffs;
        // (u * s)[i] with the X^n = -1 fold: u[t] pairs with s[i-t] for
        // t <= i and with -s[n+i-t] above.
        let head: i64 = u[..=i]
            .iter()
            .zip(s[..=i].iter().rev())
            .map(|(&ut, &st)| ut as i64 * st as i64)
            .sum();
        let tail: i64 = u[i + 1..]
            .iter()
            .zip(s[i + 1..].iter().rev())
            .map(|(&ut, &st)| ut as i64 * st as i64)
            .sum();
        acc += head - tail;
    }
    (record.v.coeffs[i] as i64 - acc).rem_euclid(q) as u16
}

/// Unmasked reference decryption.
pub fn decrypt_plain(kp: &KeyPair, record: &EncapsulationRecord) -> Vec<u8> {
    let q = kp.params.q;
    m_prime(kp, record)
        .coeffs
        .iter()
        .map(|&c| crate::ring::decode_bit(c as u32, q))
        .collect()
}

#[derive(Clone, Debug)]
pub struct DecryptOutcome {
    pub m_star: Vec<u8>,
    pub failure: bool,
    /// Trace of the faulted coefficient's decode, when a fault was given.
    pub trace: Option<MaskedDecodeTrace>,
}

/// Masked decryption oracle: computes m' once, then re-masks and decodes
/// every coefficient at the requested order, applying the fault to its
/// target coefficient. Failure means the decoded message differs from
/// the encapsulated one.
pub fn decrypt_masked(
    kp: &KeyPair,
    record: &EncapsulationRecord,
    order: usize,
    width: u8,
    rng: &mut DetRng,
    fault: Option<&FaultSpec>,
) -> Result<DecryptOutcome> {
    let params = &kp.params;
    let mp = m_prime(kp, record);
    let mut m_star = Vec::with_capacity(params.n);
    let mut trace = None;
    for (i, &c) in mp.coeffs.iter().enumerate() {
        let shares = arith_share(c as u32, order, params.q, rng)?;
        let coeff_fault = fault.filter(|f| f.coeff_index == i);
        let (bit, t) = masked_decode_kyber(&shares, params, width, rng, coeff_fault)?;
        if coeff_fault.is_some() {
            trace = Some(t);
        }
        m_star.push(bit.unshare() as u8);
    }
    let failure = m_star != record.m;
    Ok(DecryptOutcome { m_star, failure, trace })
}

/// Decodes a single already-computed m' coefficient under the masking
/// order, with an optional fault. This is the per-repetition fast path:
/// the fault is local to its coefficient, so campaigns re-mask and
/// re-decode only the target.
pub fn decode_coefficient_masked(
    m_prime_coeff: u16,
    params: &SchemeParams,
    order: usize,
    width: u8,
    rng: &mut DetRng,
    fault: Option<&FaultSpec>,
) -> Result<(u8, MaskedDecodeTrace)> {
    let shares = arith_share(m_prime_coeff as u32, order, params.q, rng)?;
    let (bit, trace) = masked_decode_kyber(&shares, params, width, rng, fault)?;
    Ok((bit.unshare() as u8, trace))
}

/// Per-coefficient signed decryption noise
/// d = e.s' - s.(e1 + du) + e2 + dv, exact.
pub fn decryption_noise(kp: &KeyPair, record: &EncapsulationRecord) -> SignedPoly {
    let params = &kp.params;
    let n = params.n;
    let l = params.l;
    let e: Vec<Vec<i64>> = kp.e.iter().map(|p| to_i64(&p.coeffs)).collect();
    let s: Vec<Vec<i64>> = kp.s.iter().map(|p| to_i64(&p.coeffs)).collect();
    let sp: Vec<Vec<i64>> = record.s_prime.iter().map(|p| to_i64(&p.coeffs)).collect();
    let e1du: Vec<Vec<i64>> = (0..l)
        .map(|c| {
            record.e1[c]
                .coeffs
                .iter()
                .zip(&record.delta_u[c].coeffs)
                .map(|(&a, &b)| a as i64 + b as i64)
                .collect()
        })
        .collect();

    let coeffs = (0..n)
        .map(|i| {
            let mut d = record.e2.coeffs[i] as i64 + record.delta_v.coeffs[i] as i64;
            for c in 0..l {
                d += negacyclic_coeff(&e[c], &sp[c], i);
                d -= negacyclic_coeff(&s[c], &e1du[c], i);
            }
            d as i16
        })
        .collect();
    SignedPoly { coeffs }
}

fn to_i64(v: &[i16]) -> Vec<i64> {
    v.iter().map(|&x| x as i64).collect()
}

/// The unmasked shadow of the decode pipeline: where an m' coefficient
/// lands at the A2B input, in Z_{2^width}.
pub fn g_value(m_prime_coeff: u32, params: &SchemeParams, width: u8) -> u32 {
    debug_assert!(m_prime_coeff < params.q);
    let q = params.q;
    let modulus = 1u32 << width;
    let c = (m_prime_coeff + q - params.quarter_q_floor()) % q;
    (c + modulus - params.half_q_floor()) % modulus
}
