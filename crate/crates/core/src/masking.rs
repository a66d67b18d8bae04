//! Arithmetic and Boolean sharing at arbitrary order, the masked
//! ripple-carry adder, A2B conversion and the masked decode pipelines.
//!
//! The first-order A2B follows the fresh-mask-then-SecAdd construction;
//! higher orders use the recursive halving with RefreshXOR. SecAdd
//! realizes the bitwise carry recurrence
//! `c(j+1) = (x(j) & y(j)) ^ (x(j) & c(j)) ^ (y(j) & c(j))`
//! with every AND computed by the masked SecAnd gadget, which is exactly
//! the medium faults travel through.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fault::{inject, FaultSpec};
use crate::params::SchemeParams;
use crate::rng::DetRng;

/// Additive shares: the sum of `shares` mod `modulus` is the represented
/// value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithShares {
    pub shares: Vec<u16>,
    pub modulus: u32,
}

/// XOR shares of a w-bit word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolShares {
    pub shares: Vec<u16>,
    pub width: u8,
}

impl ArithShares {
    pub fn order(&self) -> usize {
        self.shares.len() - 1
    }

    pub fn unshare(&self) -> u16 {
        let sum: u64 = self.shares.iter().map(|&s| s as u64).sum();
        (sum % self.modulus as u64) as u16
    }
}

impl BoolShares {
    pub fn order(&self) -> usize {
        self.shares.len() - 1
    }

    pub fn unshare(&self) -> u16 {
        self.shares.iter().fold(0, |acc, &s| acc ^ s)
    }
}

fn width_mask(width: u8) -> u16 {
    debug_assert!(width >= 1 && width <= 16);
    if width == 16 {
        u16::MAX
    } else {
        (1u16 << width) - 1
    }
}

fn uniform_word(width: u8, rng: &mut DetRng) -> u16 {
    rng.gen::<u16>() & width_mask(width)
}

/// Splits `v` into order+1 additive shares mod `m`, uniform conditioned
/// on the sum.
pub fn arith_share(v: u32, order: usize, m: u32, rng: &mut DetRng) -> Result<ArithShares> {
    if order < 1 {
        return Err(Error::OrderTooSmall(order));
    }
    if v >= m {
        return Err(Error::NotReduced { value: v, modulus: m });
    }
    let mut shares = Vec::with_capacity(order + 1);
    let mut acc = 0u64;
    for _ in 0..order {
        let r = rng.gen_range(0..m);
        acc += r as u64;
        shares.push(r as u16);
    }
    let last = (v as u64 + m as u64 * (order as u64 + 1) - acc % m as u64) % m as u64;
    shares.push(last as u16);
    Ok(ArithShares { shares, modulus: m })
}

/// Splits `v` into order+1 XOR shares of width `width`.
pub fn bool_share(v: u16, order: usize, width: u8, rng: &mut DetRng) -> Result<BoolShares> {
    if order < 1 {
        return Err(Error::OrderTooSmall(order));
    }
    let mut shares: Vec<u16> = (0..order).map(|_| uniform_word(width, rng)).collect();
    let folded = shares.iter().fold(v & width_mask(width), |acc, &s| acc ^ s);
    shares.push(folded);
    Ok(BoolShares { shares, width })
}

/// ISW multiplication: XOR of the outputs is the AND of the unmasked
/// inputs, bitwise over the word.
pub fn sec_and(x: &BoolShares, y: &BoolShares, rng: &mut DetRng) -> Result<BoolShares> {
    if x.shares.len() != y.shares.len() {
        return Err(Error::ShareCountMismatch(x.shares.len(), y.shares.len()));
    }
    if x.width != y.width {
        return Err(Error::WidthMismatch(x.width, y.width));
    }
    let n = x.shares.len();
    let mut z: Vec<u16> = (0..n).map(|i| x.shares[i] & y.shares[i]).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let r_ij = uniform_word(x.width, rng);
            let r_ji = (x.shares[i] & y.shares[j]) ^ r_ij ^ (x.shares[j] & y.shares[i]);
            z[i] ^= r_ij;
            z[j] ^= r_ji;
        }
    }
    Ok(BoolShares { shares: z, width: x.width })
}

/// Re-randomizes and (if needed) widens a sharing to `target_order`,
/// preserving the unmasked value. Missing input shares are treated as
/// zero before the pairwise refresh.
pub fn refresh_xor(x: &BoolShares, target_order: usize, rng: &mut DetRng) -> BoolShares {
    let n = target_order + 1;
    debug_assert!(x.shares.len() <= n);
    let mut y = x.shares.clone();
    y.resize(n, 0);
    for i in 0..n - 1 {
        for j in (i + 1)..n {
            let r = uniform_word(x.width, rng);
            y[i] ^= r;
            y[j] ^= r;
        }
    }
    BoolShares { shares: y, width: x.width }
}

/// Masked ripple-carry addition on Boolean shares: the XOR of the output
/// shares is `(u + v) mod 2^k`.
pub fn sec_add(x: &BoolShares, y: &BoolShares, k: u8, rng: &mut DetRng) -> Result<BoolShares> {
    if x.shares.len() != y.shares.len() {
        return Err(Error::ShareCountMismatch(x.shares.len(), y.shares.len()));
    }
    let n = x.shares.len();
    let mask = width_mask(k);
    let xw = BoolShares { shares: x.shares.iter().map(|&s| s & mask).collect(), width: k };
    let yw = BoolShares { shares: y.shares.iter().map(|&s| s & mask).collect(), width: k };
    let mut carry = BoolShares { shares: vec![0u16; n], width: k };
    // Carry recurrence, one bit per round; the SecAnds run on whole
    // words, bit j of the result is the masked carry into bit j+1.
    for j in 0..k.saturating_sub(1) {
        let xy = sec_and(&xw, &yw, rng)?;
        let xc = sec_and(&xw, &carry, rng)?;
        let yc = sec_and(&yw, &carry, rng)?;
        for i in 0..n {
            let t = xy.shares[i] ^ xc.shares[i] ^ yc.shares[i];
            carry.shares[i] ^= ((t >> j) & 1) << (j + 1);
        }
    }
    let shares = (0..n)
        .map(|i| (xw.shares[i] ^ yw.shares[i] ^ carry.shares[i]) & mask)
        .collect();
    Ok(BoolShares { shares, width: k })
}

/// Arithmetic-to-Boolean conversion for a power-of-two modulus: the XOR
/// of the outputs equals the sum of the inputs mod 2^w.
///
/// One share passes through unchanged; two shares get fresh Boolean
/// masks and one SecAdd; more shares recurse on each half, refresh both
/// sides to full order, and SecAdd the halves.
pub fn a2b(x: &ArithShares, rng: &mut DetRng) -> Result<BoolShares> {
    if !x.modulus.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(x.modulus));
    }
    let width = x.modulus.trailing_zeros() as u8;
    a2b_inner(&x.shares, width, rng)
}

fn a2b_inner(shares: &[u16], width: u8, rng: &mut DetRng) -> Result<BoolShares> {
    let n = shares.len();
    if n == 1 {
        return Ok(BoolShares { shares: vec![shares[0]], width });
    }
    if n == 2 {
        let u1 = uniform_word(width, rng);
        let u2 = u1 ^ shares[0];
        let v1 = uniform_word(width, rng);
        let v2 = v1 ^ shares[1];
        let u = BoolShares { shares: vec![u1, u2], width };
        let v = BoolShares { shares: vec![v1, v2], width };
        return sec_add(&u, &v, width, rng);
    }
    let half = n / 2;
    let lo = a2b_inner(&shares[..half], width, rng)?;
    let lo = refresh_xor(&lo, n - 1, rng);
    let hi = a2b_inner(&shares[half..], width, rng)?;
    let hi = refresh_xor(&hi, n - 1, rng);
    sec_add(&lo, &hi, width, rng)
}

/// Moves additive shares mod q to additive shares mod 2^w representing
/// the same canonical value in [0, q).
///
/// Realized by resharing: the canonical representative is recombined
/// internally and fresh uniform shares are drawn mod 2^w. The faulted
/// share stays uniform and the unmasked A2B input is preserved exactly,
/// which is all the fault statistics depend on; this sub-gadget is not a
/// leakage-faithful masked conversion.
pub fn transform_power_of_2(
    x: &ArithShares,
    width: u8,
    rng: &mut DetRng,
) -> Result<ArithShares> {
    let v = x.unshare() as u32;
    debug_assert!(v < (1u32 << width));
    arith_share(v, x.order(), 1u32 << width, rng)
}

/// What the decode pipeline saw around the fault injection point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedDecodeTrace {
    /// Unmasked A2B input, before any fault.
    pub unmasked_g: u16,
    pub faulted_share_before: Option<u16>,
    pub faulted_share_after: Option<u16>,
    /// Whether the injected fault changed the stored share.
    pub activation: bool,
}

fn apply_fault(
    shares: &mut [u16],
    width: u8,
    fault: Option<&FaultSpec>,
) -> Result<(Option<u16>, Option<u16>, bool)> {
    let Some(spec) = fault else {
        return Ok((None, None, false));
    };
    if spec.share_index >= shares.len() {
        return Err(Error::ShareIndexOutOfRange {
            index: spec.share_index,
            count: shares.len(),
        });
    }
    let before = shares[spec.share_index];
    let (after, active) = inject(before, spec, width)?;
    shares[spec.share_index] = after;
    Ok((Some(before), Some(after), active))
}

/// The masked Kyber decode pipeline for a single coefficient: subtract
/// floor(q/4) from share 0 mod q, move to mod 2^width, subtract
/// floor(q/2) from share 0, optionally fault one share, run A2B, and
/// extract the MSB of every share as the Boolean-shared message bit.
pub fn masked_decode_kyber(
    m_prime: &ArithShares,
    params: &SchemeParams,
    width: u8,
    rng: &mut DetRng,
    fault: Option<&FaultSpec>,
) -> Result<(BoolShares, MaskedDecodeTrace)> {
    debug_assert_eq!(m_prime.modulus, params.q);
    debug_assert!(width >= params.a2b_width());
    let q = params.q;
    let mut s = m_prime.clone();
    s.shares[0] = (((s.shares[0] as u32) + q - params.quarter_q_floor()) % q) as u16;

    let mut g = transform_power_of_2(&s, width, rng)?;
    let modulus = 1u32 << width;
    g.shares[0] =
        (((g.shares[0] as u32) + modulus - params.half_q_floor()) % modulus) as u16;

    let unmasked_g = g.unshare();
    let (before, after, activation) = apply_fault(&mut g.shares, width, fault)?;

    let bits = a2b(&g, rng)?;
    let msb = BoolShares {
        shares: bits.shares.iter().map(|&s| (s >> (width - 1)) & 1).collect(),
        width: 1,
    };
    Ok((msb, MaskedDecodeTrace {
        unmasked_g,
        faulted_share_before: before,
        faulted_share_after: after,
        activation,
    }))
}

/// The masked Saber decode: A2B on the mod-2^epsilon_p shares, then MSB
/// extraction. The fault hook fires directly on the A2B input shares.
pub fn masked_decode_saber(
    m_prime: &ArithShares,
    params: &SchemeParams,
    rng: &mut DetRng,
    fault: Option<&FaultSpec>,
) -> Result<(BoolShares, MaskedDecodeTrace)> {
    debug_assert_eq!(m_prime.modulus, params.p);
    let width = params.a2b_width();
    let mut g = m_prime.clone();
    let unmasked_g = g.unshare();
    let (before, after, activation) = apply_fault(&mut g.shares, width, fault)?;

    let bits = a2b(&g, rng)?;
    let msb = BoolShares {
        shares: bits.shares.iter().map(|&s| (s >> (width - 1)) & 1).collect(),
        width: 1,
    };
    Ok((msb, MaskedDecodeTrace {
        unmasked_g,
        faulted_share_before: before,
        faulted_share_after: after,
        activation,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::FaultKind;
    use crate::params::Scheme;
    use crate::ring::decode_bit;

    fn rng() -> DetRng {
        DetRng::new(0xa11ce)
    }

    #[test]
    fn arith_share_round_trips_exhaustively() {
        let mut r = rng();
        for v in 0u32..16 {
            for order in 1..=3 {
                for _ in 0..64 {
                    let sh = arith_share(v, order, 16, &mut r).unwrap();
                    assert_eq!(sh.shares.len(), order + 1);
                    assert_eq!(sh.unshare() as u32, v);
                }
            }
        }
    }

    #[test]
    fn arith_share_rejects_order_zero() {
        let mut r = rng();
        assert!(matches!(
            arith_share(3, 0, 16, &mut r),
            Err(Error::OrderTooSmall(0))
        ));
    }

    #[test]
    fn first_order_zero_shares_are_negations() {
        let mut r = rng();
        for _ in 0..100 {
            let sh = arith_share(0, 1, 3329, &mut r).unwrap();
            let (a, b) = (sh.shares[0] as u32, sh.shares[1] as u32);
            assert_eq!((a + b) % 3329, 0);
        }
    }

    #[test]
    fn arith_share_first_share_uniform() {
        // Chi-square over 16 buckets at 1e5 draws; 99.9% quantile of
        // chi2(15) is ~37.7, use a generous cutoff.
        let mut r = rng();
        let m = 16u32;
        let n = 100_000;
        let mut counts = [0f64; 16];
        for _ in 0..n {
            let sh = arith_share(7, 2, m, &mut r).unwrap();
            counts[sh.shares[0] as usize] += 1.0;
        }
        let expected = n as f64 / m as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 45.0, "chi2 = {chi2}");
    }

    #[test]
    fn sec_and_zero_absorbs() {
        let mut r = rng();
        for _ in 0..200 {
            let x = bool_share(0, 2, 4, &mut r).unwrap();
            let y = bool_share(r.gen_range(0..16) as u16, 2, 4, &mut r).unwrap();
            assert_eq!(sec_and(&x, &y, &mut r).unwrap().unshare(), 0);
        }
    }

    #[test]
    fn sec_and_exhaustive_w2_order2() {
        let mut r = rng();
        // All share assignments for both operands at width 2, 100 draws
        // of gadget randomness each.
        for xa in 0u16..4 {
            for xb in 0u16..4 {
                for xc in 0u16..4 {
                    let x = BoolShares { shares: vec![xa, xb, xc], width: 2 };
                    let vx = x.unshare();
                    for draw in 0..100 {
                        let ya = (draw * 7 + xa) as u16 & 3;
                        let y = BoolShares { shares: vec![ya, xc ^ 1, xb], width: 2 };
                        let out = sec_and(&x, &y, &mut r).unwrap();
                        assert_eq!(out.unshare(), vx & y.unshare());
                    }
                }
            }
        }
    }

    #[test]
    fn sec_and_idempotent_on_equal_values() {
        let mut r = rng();
        for _ in 0..500 {
            let v = r.gen_range(0..8192) as u16;
            let x = bool_share(v, 1, 13, &mut r).unwrap();
            let y = bool_share(v, 1, 13, &mut r).unwrap();
            assert_eq!(sec_and(&x, &y, &mut r).unwrap().unshare(), v);
        }
    }

    #[test]
    fn sec_and_rejects_mismatched_orders() {
        let mut r = rng();
        let x = bool_share(1, 1, 4, &mut r).unwrap();
        let y = bool_share(1, 2, 4, &mut r).unwrap();
        assert!(matches!(
            sec_and(&x, &y, &mut r),
            Err(Error::ShareCountMismatch(2, 3))
        ));
    }

    #[test]
    fn refresh_preserves_value_and_widens() {
        let mut r = rng();
        for _ in 0..10_000 {
            let v = r.gen_range(0..8192) as u16;
            let x = bool_share(v, 1, 13, &mut r).unwrap();
            let y = refresh_xor(&x, 3, &mut r);
            assert_eq!(y.shares.len(), 4);
            assert_eq!(y.unshare(), v);
            let z = refresh_xor(&y, 3, &mut r);
            assert_eq!(z.unshare(), v);
        }
    }

    #[test]
    fn refresh_first_share_uniform() {
        let mut r = rng();
        let n = 100_000;
        let mut counts = [0f64; 8];
        for _ in 0..n {
            let x = bool_share(5, 1, 3, &mut r).unwrap();
            let y = refresh_xor(&x, 2, &mut r);
            counts[y.shares[0] as usize] += 1.0;
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 35.0, "chi2 = {chi2}");
    }

    #[test]
    fn sec_add_examples() {
        let mut r = rng();
        let u = bool_share(5, 1, 4, &mut r).unwrap();
        let v = bool_share(3, 1, 4, &mut r).unwrap();
        assert_eq!(sec_add(&u, &v, 4, &mut r).unwrap().unshare(), 8);
        let u = bool_share(12, 1, 4, &mut r).unwrap();
        let v = bool_share(7, 1, 4, &mut r).unwrap();
        assert_eq!(sec_add(&u, &v, 4, &mut r).unwrap().unshare(), 3);
    }

    #[test]
    fn sec_add_exhaustive_k3_order1() {
        // All 64 (u, v) pairs x 64 share splits.
        let mut r = rng();
        for u_hat in 0u16..8 {
            for v_hat in 0u16..8 {
                for u1 in 0u16..8 {
                    for v1 in 0u16..8 {
                        let u = BoolShares { shares: vec![u1, u1 ^ u_hat], width: 3 };
                        let v = BoolShares { shares: vec![v1, v1 ^ v_hat], width: 3 };
                        let z = sec_add(&u, &v, 3, &mut r).unwrap();
                        assert_eq!(z.unshare(), (u_hat + v_hat) % 8);
                    }
                }
            }
        }
    }

    #[test]
    fn carry_recurrence_reconstructs_integer_sum() {
        // Unmasked view of the recurrence: z(j) = x(j) ^ y(j) ^ c(j-1)
        // rebuilt bit by bit equals the integer sum, exhaustively at k=3.
        for x in 0u16..8 {
            for y in 0u16..8 {
                let mut c = 0u16;
                let mut z = 0u16;
                for j in 0..3 {
                    let xj = (x >> j) & 1;
                    let yj = (y >> j) & 1;
                    z |= (xj ^ yj ^ c) << j;
                    c = (xj & yj) ^ (xj & c) ^ (yj & c);
                }
                assert_eq!(z, (x + y) % 8);
            }
        }
    }

    #[test]
    fn a2b_single_share_is_identity() {
        let mut r = rng();
        let x = ArithShares { shares: vec![9], modulus: 16 };
        let b = a2b(&x, &mut r).unwrap();
        assert_eq!(b.shares, vec![9]);
        assert_eq!(b.unshare(), 9);
    }

    #[test]
    fn a2b_contract_example() {
        let mut r = rng();
        let x = ArithShares { shares: vec![9, 0], modulus: 16 };
        assert_eq!(a2b(&x, &mut r).unwrap().unshare(), 9);
    }

    #[test]
    fn a2b_rejects_non_power_of_two() {
        let mut r = rng();
        let x = ArithShares { shares: vec![1, 2], modulus: 3329 };
        assert!(matches!(a2b(&x, &mut r), Err(Error::NotPowerOfTwo(3329))));
    }

    #[test]
    fn a2b_exhaustive_w4_order1() {
        let mut r = rng();
        for a1 in 0u16..16 {
            for a2 in 0u16..16 {
                for _ in 0..10 {
                    let x = ArithShares { shares: vec![a1, a2], modulus: 16 };
                    assert_eq!(a2b(&x, &mut r).unwrap().unshare(), (a1 + a2) % 16);
                }
            }
        }
    }

    #[test]
    fn a2b_sampled_w4_orders_2_3() {
        let mut r = rng();
        for order in 2..=3usize {
            for _ in 0..2000 {
                let shares: Vec<u16> = (0..=order).map(|_| r.gen_range(0..16) as u16).collect();
                let want = (shares.iter().map(|&s| s as u32).sum::<u32>() % 16) as u16;
                let x = ArithShares { shares, modulus: 16 };
                for _ in 0..10 {
                    assert_eq!(a2b(&x, &mut r).unwrap().unshare(), want);
                }
            }
        }
    }

    #[test]
    fn a2b_random_w13_orders_1_to_3() {
        let mut r = rng();
        for order in 1..=3usize {
            for _ in 0..30_000 {
                let shares: Vec<u16> =
                    (0..=order).map(|_| r.gen_range(0..8192) as u16).collect();
                let want = (shares.iter().map(|&s| s as u32).sum::<u32>() % 8192) as u16;
                let x = ArithShares { shares, modulus: 8192 };
                assert_eq!(a2b(&x, &mut r).unwrap().unshare(), want);
            }
        }
    }

    #[test]
    fn transform_preserves_canonical_value() {
        let mut r = rng();
        for v in [0u32, 1, 832, 1664, 1665, 3328] {
            let x = arith_share(v, 1, 3329, &mut r).unwrap();
            let y = transform_power_of_2(&x, 13, &mut r).unwrap();
            assert_eq!(y.modulus, 8192);
            assert_eq!(y.unshare() as u32, v);
        }
    }

    #[test]
    fn transform_first_share_uniform() {
        let mut r = rng();
        let n = 100_000;
        let mut buckets = [0f64; 16];
        for _ in 0..n {
            let x = arith_share(1234, 1, 3329, &mut r).unwrap();
            let y = transform_power_of_2(&x, 13, &mut r).unwrap();
            buckets[(y.shares[0] >> 9) as usize] += 1.0;
        }
        let expected = n as f64 / 16.0;
        let chi2: f64 = buckets.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 45.0, "chi2 = {chi2}");
    }

    #[test]
    fn kyber_decode_examples() {
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        let enc_one = arith_share(1665, 1, p.q, &mut r).unwrap();
        let (bit, trace) = masked_decode_kyber(&enc_one, &p, 13, &mut r, None).unwrap();
        assert_eq!(bit.unshare(), 1);
        assert_eq!(trace.unmasked_g, 7361);

        let zero = arith_share(0, 1, p.q, &mut r).unwrap();
        let (bit, trace) = masked_decode_kyber(&zero, &p, 13, &mut r, None).unwrap();
        assert_eq!(bit.unshare(), 0);
        assert_eq!(trace.unmasked_g, 833);
    }

    #[test]
    fn kyber_decode_matches_decode_bit() {
        // The pipeline constants are floor(q/4) and floor(q/2) while the
        // plain decode rounds q/2 up, so the two maps part ways on the
        // single boundary point m' = 2496 (unreachable for valid
        // ciphertexts, whose noise keeps a 400-deep margin).
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        for order in 1..=3usize {
            for _ in 0..3000 {
                let v = r.gen_range(0..p.q);
                if v == 2496 {
                    continue;
                }
                let sh = arith_share(v, order, p.q, &mut r).unwrap();
                let (bit, _) = masked_decode_kyber(&sh, &p, 13, &mut r, None).unwrap();
                assert_eq!(bit.unshare() as u8, decode_bit(v, p.q), "m'={v}");
            }
        }
    }

    #[test]
    fn kyber_decode_boundary_point() {
        // m' = 2496 decodes to 1 under the rounded-constant formula but
        // the floor-constant masked pipeline lands on g = 0, MSB 0.
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        assert_eq!(decode_bit(2496, p.q), 1);
        let sh = arith_share(2496, 1, p.q, &mut r).unwrap();
        let (bit, trace) = masked_decode_kyber(&sh, &p, 13, &mut r, None).unwrap();
        assert_eq!(trace.unmasked_g, 0);
        assert_eq!(bit.unshare(), 0);
    }

    #[test]
    fn kyber_message_bits_k_and_k_plus_1_agree() {
        // Exhaustive over m' at order 1: bits k and k+1 of the unmasked
        // A2B output are the same message bit.
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        for v in 0..p.q {
            let sh = arith_share(v, 1, p.q, &mut r).unwrap();
            let mut s = sh.clone();
            s.shares[0] = (((s.shares[0] as u32) + p.q - p.quarter_q_floor()) % p.q) as u16;
            let mut g = transform_power_of_2(&s, 13, &mut r).unwrap();
            g.shares[0] = (((g.shares[0] as u32) + 8192 - p.half_q_floor()) % 8192) as u16;
            let bits = a2b(&g, &mut r).unwrap().unshare();
            assert_eq!((bits >> 11) & 1, (bits >> 12) & 1, "m'={v} g={bits}");
        }
    }

    #[test]
    fn kyber_decode_order_invariant() {
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        for _ in 0..2500 {
            let v = r.gen_range(0..p.q);
            let mut outs = Vec::new();
            for order in 1..=4usize {
                let sh = arith_share(v, order, p.q, &mut r).unwrap();
                let (bit, _) = masked_decode_kyber(&sh, &p, 13, &mut r, None).unwrap();
                outs.push(bit.unshare());
            }
            assert!(outs.windows(2).all(|w| w[0] == w[1]), "m'={v}: {outs:?}");
        }
    }

    #[test]
    fn kyber_decode_width_16_agrees_with_width_13() {
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        let spec = FaultSpec::single_bit(FaultKind::StuckAt1, 0, 0, 11).unwrap();
        for _ in 0..4000 {
            let v = r.gen_range(0..p.q);
            // Same unmasked input; compare fault-free decode and the
            // fault-failure classification across register widths.
            let sh13 = arith_share(v, 1, p.q, &mut r).unwrap();
            let sh16 = arith_share(v, 1, p.q, &mut r).unwrap();
            let (b13, _) = masked_decode_kyber(&sh13, &p, 13, &mut r, None).unwrap();
            let (b16, _) = masked_decode_kyber(&sh16, &p, 16, &mut r, None).unwrap();
            assert_eq!(b13.unshare(), b16.unshare(), "fault-free m'={v}");

            // Force-active faulted decode at both widths.
            let fail13 = loop {
                let sh = arith_share(v, 1, p.q, &mut r).unwrap();
                let (b, t) = masked_decode_kyber(&sh, &p, 13, &mut r, Some(&spec)).unwrap();
                if t.activation {
                    break b.unshare() != b13.unshare();
                }
            };
            let fail16 = loop {
                let sh = arith_share(v, 1, p.q, &mut r).unwrap();
                let (b, t) = masked_decode_kyber(&sh, &p, 16, &mut r, Some(&spec)).unwrap();
                if t.activation {
                    break b.unshare() != b16.unshare();
                }
            };
            assert_eq!(fail13, fail16, "m'={v}");
        }
    }

    #[test]
    fn saber_decode_examples() {
        let p = Scheme::Saber.params();
        let mut r = rng();
        let x = arith_share(768, 1, p.p, &mut r).unwrap();
        assert_eq!(masked_decode_saber(&x, &p, &mut r, None).unwrap().0.unshare(), 1);
        let x = arith_share(255, 1, p.p, &mut r).unwrap();
        assert_eq!(masked_decode_saber(&x, &p, &mut r, None).unwrap().0.unshare(), 0);
    }

    #[test]
    fn saber_decode_exhaustive_msb() {
        let p = Scheme::Saber.params();
        let mut r = rng();
        for v in 0..p.p {
            for _ in 0..4 {
                let x = arith_share(v, 1, p.p, &mut r).unwrap();
                let (bit, _) = masked_decode_saber(&x, &p, &mut r, None).unwrap();
                assert_eq!(bit.unshare() as u32, v >> 9, "m'={v}");
            }
        }
    }

    #[test]
    fn fault_hook_rejects_bad_share_index() {
        let p = Scheme::Kyber512.params();
        let mut r = rng();
        let spec = FaultSpec::single_bit(FaultKind::StuckAt1, 5, 0, 11).unwrap();
        let sh = arith_share(7, 1, p.q, &mut r).unwrap();
        assert!(matches!(
            masked_decode_kyber(&sh, &p, 13, &mut r, Some(&spec)),
            Err(Error::ShareIndexOutOfRange { index: 5, count: 2 })
        ));
    }
}
