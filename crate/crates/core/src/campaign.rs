//! Campaign orchestration: ciphertext generation with filtering, the
//! repeated-injection protocol, observation classification, inequality
//! construction and sample rejection.
//!
//! The fault location is one fixed coefficient for a whole campaign.
//! Every ciphertext ordinal derives its own randomness streams from the
//! campaign seed, so runs are bit-reproducible at any thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::{FaultKind, FaultProfile};
use crate::kem::{
    self, decode_coefficient_masked, encapsulate_with_message, g_value, sample_message,
    EncapsulationRecord, KeyPair,
};
use crate::params::SchemeParams;
use crate::rng::{stream_id, DetRng};

const DOMAIN_CANDIDATE: u64 = 0xca;
const DOMAIN_REPETITION: u64 = 0x0b;
const DOMAIN_BALANCE: u64 = 0xba;

/// When to stop drawing ciphertexts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// Process exactly this many selected ciphertexts.
    Ciphertexts(u64),
    /// Process ciphertexts until this many inequalities survive
    /// rejection, then truncate to the target.
    Inequalities(u64),
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub order: usize,
    /// A2B register width; defaults to the scheme's decode width.
    pub a2b_width: Option<u8>,
    pub coeff_index: usize,
    /// Max injections per ciphertext.
    pub beta: u32,
    /// Candidates generated per selected ciphertext.
    pub filter_pool: u32,
    /// Fraction of failure-derived inequalities dropped.
    pub rejection_rate: f64,
    pub stop: StopRule,
    pub profile: FaultProfile,
    pub seed: u64,
}

impl CampaignConfig {
    pub fn validate(&self, params: &SchemeParams) -> Result<()> {
        if self.order < 1 {
            return Err(Error::OrderTooSmall(self.order));
        }
        if self.beta < 1 {
            return Err(Error::config("beta must be at least 1"));
        }
        if self.filter_pool < 1 {
            return Err(Error::config("filter_pool must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.rejection_rate) {
            return Err(Error::config("rejection_rate must lie in [0, 1)"));
        }
        if self.coeff_index >= params.n {
            return Err(Error::config(format!(
                "coeff_index {} outside ring degree {}",
                self.coeff_index, params.n
            )));
        }
        match self.stop {
            StopRule::Ciphertexts(0) | StopRule::Inequalities(0) => {
                return Err(Error::config("stop target must be positive"));
            }
            _ => {}
        }
        let width = self.width(params);
        if width < params.a2b_width() || width > 16 {
            return Err(Error::config(format!(
                "a2b width {width} outside [{}, 16]",
                params.a2b_width()
            )));
        }
        self.profile.validate()?;
        self.profile.kind()?;
        Ok(())
    }

    pub fn width(&self, params: &SchemeParams) -> u8 {
        self.a2b_width.unwrap_or_else(|| params.a2b_width())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Failure,
    NoFailureAfterBeta,
}

#[derive(Clone, Debug)]
pub struct Observation {
    pub ciphertext_ordinal: u64,
    pub coeff_index: usize,
    pub verdict: Verdict,
    pub repetitions_used: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Lt,
}

/// One linear constraint over the 2*l*n unknowns (e || s):
/// `coeffs . x + constant  REL  tau`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inequality {
    pub relation: Relation,
    pub tau: i32,
    pub constant: i32,
    pub coeffs: Vec<i16>,
}

impl Inequality {
    /// Left-hand side at a candidate key.
    pub fn evaluate(&self, x: &[i8]) -> i64 {
        debug_assert_eq!(x.len(), self.coeffs.len());
        let dot: i64 = self
            .coeffs
            .iter()
            .zip(x)
            .map(|(&a, &v)| a as i64 * v as i64)
            .sum();
        dot + self.constant as i64
    }

    pub fn satisfied_by(&self, x: &[i8]) -> bool {
        match self.relation {
            Relation::Ge => self.evaluate(x) >= self.tau as i64,
            Relation::Lt => self.evaluate(x) < self.tau as i64,
        }
    }
}

/// The ground-truth unknown vector (e || s), flattened polynomial-major.
pub fn truth_vector(kp: &KeyPair) -> Vec<i8> {
    kp.e.iter()
        .chain(&kp.s)
        .flat_map(|p| p.coeffs.iter().map(|&c| c as i8))
        .collect()
}

/// Failure threshold in noise units. Returns (tau, negate): with
/// `negate` the inequality is stored with both sides sign-flipped so
/// that failures are always `>= tau`.
pub fn failure_threshold(params: &SchemeParams, kind: FaultKind) -> Result<(i32, bool)> {
    let width = params.a2b_width();
    match kind {
        FaultKind::StuckAt1 => {
            let g_one = g_value(params.encode_one(), params, width) as i32;
            let lo = crate::fault::kyber_failure_ranges(params, kind)[0].0 as i32;
            Ok((lo - g_one, false))
        }
        FaultKind::StuckAt0 => {
            let g_zero = g_value(0, params, width) as i32;
            let hi = crate::fault::kyber_failure_ranges(params, kind)[0].1 as i32;
            Ok((-(hi - g_zero), true))
        }
        FaultKind::BitFlip => Err(Error::config(
            "bit-flip faults expose no noise sign and build no inequalities",
        )),
    }
}

/// Selected ciphertext plus the cached decryption input at the target
/// coefficient.
#[derive(Clone, Debug)]
pub struct SelectedCiphertext {
    pub record: EncapsulationRecord,
    pub m_prime_i: u16,
    pub candidates_generated: u64,
}

/// Draws `filter_pool` candidate encapsulations, keeps those whose
/// message bit at the target coefficient matches the fault kind (1 for
/// stuck-at-1, 0 for stuck-at-0), and returns the qualifier minimizing
/// the A2B-input value g at that coefficient. Pools with no qualifier
/// are regenerated.
pub fn select_ciphertext(
    kp: &KeyPair,
    cfg: &CampaignConfig,
    ordinal: u64,
) -> Result<SelectedCiphertext> {
    let params = &kp.params;
    let i = cfg.coeff_index;
    let target_bit = match cfg.profile.kind()? {
        FaultKind::StuckAt1 => 1u8,
        FaultKind::StuckAt0 => 0u8,
        FaultKind::BitFlip => {
            return Err(Error::config("bit-flip campaigns are not supported"))
        }
    };
    let width = params.a2b_width();

    let mut candidate = 0u64;
    loop {
        let mut best: Option<(u32, EncapsulationRecord, u16)> = None;
        for _ in 0..cfg.filter_pool {
            let mut rng = DetRng::with_stream(
                cfg.seed,
                stream_id(DOMAIN_CANDIDATE, &[ordinal, candidate]),
            );
            candidate += 1;
            let m = sample_message(params.n, &mut rng);
            if m[i] != target_bit {
                continue;
            }
            let record = encapsulate_with_message(kp, m, &mut rng);
            let mp_i = kem::m_prime_coeff(kp, &record, i);
            let g = g_value(mp_i as u32, params, width);
            if best.as_ref().map_or(true, |(bg, _, _)| g < *bg) {
                best = Some((g, record, mp_i));
            }
        }
        if let Some((_, record, m_prime_i)) = best {
            return Ok(SelectedCiphertext {
                record,
                m_prime_i,
                candidates_generated: candidate,
            });
        }
    }
}

/// Repeats injection on the selected ciphertext with fresh masks until a
/// decryption failure or `beta` repetitions.
pub fn observe(
    selected: &SelectedCiphertext,
    cfg: &CampaignConfig,
    params: &SchemeParams,
    ordinal: u64,
) -> Result<Observation> {
    let i = cfg.coeff_index;
    let width = cfg.width(params);
    let expected = selected.record.m[i];
    for rep in 1..=cfg.beta {
        let mut rng = DetRng::with_stream(
            cfg.seed,
            stream_id(DOMAIN_REPETITION, &[ordinal, rep as u64]),
        );
        let spec = cfg.profile.draw(i, &mut rng);
        let (bit, _) = decode_coefficient_masked(
            selected.m_prime_i,
            params,
            cfg.order,
            width,
            &mut rng,
            Some(&spec),
        )?;
        if bit != expected {
            return Ok(Observation {
                ciphertext_ordinal: ordinal,
                coeff_index: i,
                verdict: Verdict::Failure,
                repetitions_used: rep,
            });
        }
    }
    Ok(Observation {
        ciphertext_ordinal: ordinal,
        coeff_index: i,
        verdict: Verdict::NoFailureAfterBeta,
        repetitions_used: cfg.beta,
    })
}

/// Expands one observation into a linear constraint on (e || s). The
/// coefficient vector is row `i` of the negacyclic convolution by
/// (s', -(e1 + delta_u)); the constant is e2[i] + delta_v[i].
pub fn build_inequality(
    record: &EncapsulationRecord,
    observation: &Observation,
    params: &SchemeParams,
    kind: FaultKind,
) -> Result<Inequality> {
    let (tau, negate) = failure_threshold(params, kind)?;
    let n = params.n;
    let l = params.l;
    let i = observation.coeff_index;
    let sign = |t: usize| if t <= i { 1i32 } else { -1i32 };

    let mut coeffs = vec![0i16; 2 * l * n];
    for b in 0..l {
        let sp = &record.s_prime[b].coeffs;
        let e1 = &record.e1[b].coeffs;
        let du = &record.delta_u[b].coeffs;
        for t in 0..n {
            let rot = (n + i - t) % n;
            let e_coeff = sign(t) * sp[rot] as i32;
            let s_coeff = -sign(t) * (e1[rot] as i32 + du[rot] as i32);
            coeffs[b * n + t] = e_coeff as i16;
            coeffs[(l + b) * n + t] = s_coeff as i16;
        }
    }
    let mut constant = record.e2.coeffs[i] as i32 + record.delta_v.coeffs[i] as i32;
    if negate {
        for c in &mut coeffs {
            *c = -*c;
        }
        constant = -constant;
    }
    Ok(Inequality {
        relation: match observation.verdict {
            Verdict::Failure => Relation::Ge,
            Verdict::NoFailureAfterBeta => Relation::Lt,
        },
        tau,
        constant,
        coeffs,
    })
}

/// Uniformly drops `rejection_rate` of the failure-derived (GE)
/// inequalities; success-derived ones are all kept.
pub fn balance(
    inequalities: Vec<Inequality>,
    rejection_rate: f64,
    rng: &mut DetRng,
) -> Vec<Inequality> {
    inequalities
        .into_iter()
        .filter(|ineq| ineq.relation == Relation::Lt || rng.gen::<f64>() >= rejection_rate)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CampaignCounters {
    pub ciphertexts: u64,
    pub candidates_generated: u64,
    pub injections: u64,
    pub failures: u64,
    pub successes: u64,
    pub kept_failure: u64,
    pub kept_success: u64,
    pub rejected_failure: u64,
    pub mean_repetitions: f64,
}

#[derive(Clone, Debug)]
pub struct CampaignOutput {
    pub inequalities: Vec<Inequality>,
    pub counters: CampaignCounters,
}

struct PerCiphertext {
    inequality: Option<Inequality>,
    verdict: Verdict,
    repetitions: u32,
    candidates: u64,
}

fn process_ciphertext(
    kp: &KeyPair,
    cfg: &CampaignConfig,
    kind: FaultKind,
    ordinal: u64,
) -> Result<PerCiphertext> {
    let params = &kp.params;
    let selected = select_ciphertext(kp, cfg, ordinal)?;
    let observation = observe(&selected, cfg, params, ordinal)?;
    let inequality = build_inequality(&selected.record, &observation, params, kind)?;
    let keep = match observation.verdict {
        Verdict::NoFailureAfterBeta => true,
        Verdict::Failure => {
            let mut rng =
                DetRng::with_stream(cfg.seed, stream_id(DOMAIN_BALANCE, &[ordinal]));
            rng.gen::<f64>() >= cfg.rejection_rate
        }
    };
    Ok(PerCiphertext {
        inequality: keep.then_some(inequality),
        verdict: observation.verdict,
        repetitions: observation.repetitions_used,
        candidates: selected.candidates_generated,
    })
}

/// Runs the full campaign: selection, observation, inequality
/// construction and per-ciphertext rejection, in parallel over
/// ciphertext ordinals.
pub fn run_campaign(kp: &KeyPair, cfg: &CampaignConfig) -> Result<CampaignOutput> {
    cfg.validate(&kp.params)?;
    let kind = cfg.profile.kind()?;

    let mut counters = CampaignCounters::default();
    let mut inequalities = Vec::new();
    let mut next_ordinal = 0u64;

    let batch_size = match cfg.stop {
        StopRule::Ciphertexts(n) => n,
        StopRule::Inequalities(_) => 8192,
    };

    loop {
        let batch: Vec<PerCiphertext> = (next_ordinal..next_ordinal + batch_size)
            .into_par_iter()
            .map(|ordinal| process_ciphertext(kp, cfg, kind, ordinal))
            .collect::<Result<_>>()?;
        next_ordinal += batch_size;

        for pc in batch {
            counters.ciphertexts += 1;
            counters.candidates_generated += pc.candidates;
            counters.injections += pc.repetitions as u64;
            match pc.verdict {
                Verdict::Failure => counters.failures += 1,
                Verdict::NoFailureAfterBeta => counters.successes += 1,
            }
            match (pc.verdict, pc.inequality) {
                (Verdict::Failure, Some(ineq)) => {
                    counters.kept_failure += 1;
                    inequalities.push(ineq);
                }
                (Verdict::Failure, None) => counters.rejected_failure += 1,
                (Verdict::NoFailureAfterBeta, Some(ineq)) => {
                    counters.kept_success += 1;
                    inequalities.push(ineq);
                }
                (Verdict::NoFailureAfterBeta, None) => unreachable!("successes are kept"),
            }
        }

        match cfg.stop {
            StopRule::Ciphertexts(_) => break,
            StopRule::Inequalities(target) => {
                if inequalities.len() as u64 >= target {
                    inequalities.truncate(target as usize);
                    break;
                }
            }
        }
    }

    counters.mean_repetitions = counters.injections as f64 / counters.ciphertexts as f64;
    Ok(CampaignOutput { inequalities, counters })
}
