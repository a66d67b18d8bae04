//! PMF-based iterative solver for the inequality system.
//!
//! Every unknown of (e || s) carries a probability mass function on
//! [-eta, eta], initialized to the CBD prior. Each iteration rebuilds
//! every PMF as prior times the product over all inequalities of the
//! probability that the inequality is satisfied given the unknown's
//! candidate value, with the leave-one-out sum of the remaining unknowns
//! approximated by a Gaussian via the central limit theorem. All
//! unknowns update from the same frozen pre-iteration state, so the
//! schedule is synchronous and parallelizable with a deterministic
//! reduction order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::{Inequality, Relation};
use crate::error::{Error, Result};

/// Probability mass function on the integer support [-eta, eta].
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    pub eta: u32,
    probs: Vec<f64>,
}

impl Pmf {
    /// The exact centered-binomial prior: P(v) = C(2 eta, eta + v) / 4^eta.
    pub fn cbd_prior(eta: u32) -> Pmf {
        let size = (2 * eta + 1) as usize;
        let mut probs = vec![0.0; size];
        for (idx, p) in probs.iter_mut().enumerate() {
            *p = binomial(2 * eta, idx as u32) / 4f64.powi(eta as i32);
        }
        Pmf { eta, probs }
    }

    pub fn from_probs(eta: u32, probs: Vec<f64>) -> Result<Pmf> {
        if probs.len() != (2 * eta + 1) as usize {
            return Err(Error::LengthMismatch(probs.len(), (2 * eta + 1) as usize));
        }
        let sum: f64 = probs.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("pmf sums to {sum}")));
        }
        Ok(Pmf { eta, probs })
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + '_ {
        -(self.eta as i32)..=(self.eta as i32)
    }

    pub fn prob(&self, v: i32) -> f64 {
        self.probs[(v + self.eta as i32) as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|v| v as f64 * self.prob(v)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support()
            .map(|v| (v as f64 - m).powi(2) * self.prob(v))
            .sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.probs.iter().cloned().fold(0.0, f64::max)
    }

    /// Most likely value; ties prefer the smaller absolute value, then
    /// the negative one.
    pub fn argmax(&self) -> i32 {
        let mut best_v = 0i32;
        let mut best_p = f64::NEG_INFINITY;
        for abs in 0..=(self.eta as i32) {
            for v in [-abs, abs] {
                let p = self.prob(v);
                if p > best_p {
                    best_p = p;
                    best_v = v;
                }
                if abs == 0 {
                    break;
                }
            }
        }
        best_v
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.probs.iter().all(|&p| p >= 0.0)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// P(Z >= u) for standard normal Z.
fn normal_sf(u: f64) -> f64 {
    0.5 * libm::erfc(u / std::f64::consts::SQRT_2)
}

const LIKELIHOOD_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodMode {
    /// Gaussian (CLT) surrogate for the leave-one-out sum.
    Clt,
    /// Exact enumeration over the remaining unknowns; tiny systems only.
    Exact,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: u32,
    /// Stop once every unknown's max PMF mass reaches this.
    pub convergence_threshold: f64,
    /// Geometric damping toward the previous PMF, in [0, 1).
    pub damping: f64,
    pub variance_floor: f64,
    /// Initial scale on the summed log-likelihoods, in (0, 1]. The
    /// per-unknown product treats thousands of overlapping inequalities
    /// as independent evidence; starting below 1 keeps the PMFs soft
    /// enough for the leave-one-out means to keep correcting themselves
    /// instead of collapsing onto iteration-one noise.
    pub tempering: f64,
    /// Per-iteration growth of the tempering scale (>= 1); the scale is
    /// capped at 1. Growth lets confidence cascade only after the easy
    /// unknowns have settled.
    pub tempering_growth: f64,
    pub mode: LikelihoodMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 100,
            convergence_threshold: 0.999,
            damping: 0.0,
            variance_floor: 1e-9,
            tempering: 1.0,
            tempering_growth: 1.0,
            mode: LikelihoodMode::Clt,
        }
    }
}

impl SolverConfig {
    /// Evidence scale at a given iteration (0-based).
    pub fn tempering_at(&self, iteration: u32) -> f64 {
        (self.tempering * self.tempering_growth.powi(iteration as i32)).min(1.0)
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be positive"));
        }
        if !(0.0..=1.0).contains(&self.convergence_threshold) {
            return Err(Error::config("convergence_threshold must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::config("damping must lie in [0, 1)"));
        }
        if self.variance_floor <= 0.0 {
            return Err(Error::config("variance_floor must be positive"));
        }
        if !(self.tempering > 0.0 && self.tempering <= 1.0) {
            return Err(Error::config("tempering must lie in (0, 1]"));
        }
        if self.tempering_growth < 1.0 {
            return Err(Error::config("tempering_growth must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Leave-one-out variances clamped to the floor.
    pub clamped_variances: u64,
    /// Posteriors that vanished and were reset to the prior.
    pub reset_posteriors: u64,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub pmfs: Vec<Pmf>,
    pub iteration: u32,
    /// Per-inequality (mean, variance) of sum(a_j x_j) under `pmfs`.
    moments: Vec<(f64, f64)>,
    pub diagnostics: SolverDiagnostics,
}

/// Fresh state: every unknown gets the exact CBD(eta) prior.
pub fn init_priors(eta: u32, unknowns: usize) -> SolverState {
    SolverState {
        pmfs: vec![Pmf::cbd_prior(eta); unknowns],
        iteration: 0,
        moments: Vec::new(),
        diagnostics: SolverDiagnostics::default(),
    }
}

fn refresh_moments(state: &mut SolverState, inequalities: &[Inequality]) {
    let means: Vec<f64> = state.pmfs.iter().map(Pmf::mean).collect();
    let vars: Vec<f64> = state.pmfs.iter().map(Pmf::variance).collect();
    state.moments = inequalities
        .par_iter()
        .map(|ineq| {
            let mut mean = 0.0;
            let mut var = 0.0;
            for (j, &a) in ineq.coeffs.iter().enumerate() {
                if a != 0 {
                    let a = a as f64;
                    mean += a * means[j];
                    var += a * a * vars[j];
                }
            }
            (mean, var)
        })
        .collect();
}

/// CLT likelihood of inequality `t` being satisfied given unknown `j`
/// takes value `v`, under the cached moments. Public form of the hot
/// path; `state.moments` must be current (any `iterate` leaves them so).
pub fn likelihood(
    ineq: &Inequality,
    moments: (f64, f64),
    pmf_j: &Pmf,
    j: usize,
    v: i32,
    cfg: &SolverConfig,
) -> f64 {
    let a = ineq.coeffs[j] as f64;
    let mu = moments.0 - a * pmf_j.mean();
    let var = (moments.1 - a * a * pmf_j.variance()).max(cfg.variance_floor);
    // Integer target with half-integer continuity correction:
    // P(S >= T) ~ P(N >= T - 1/2), P(S < T) ~ P(N < T - 1/2).
    let target = (ineq.tau - ineq.constant) as f64 - a * v as f64 - 0.5;
    let u = (target - mu) / var.sqrt();
    let p = match ineq.relation {
        Relation::Ge => normal_sf(u),
        Relation::Lt => 1.0 - normal_sf(u),
    };
    p.max(LIKELIHOOD_FLOOR)
}

/// Exact satisfaction probability by enumeration over every other
/// unknown with a nonzero coefficient. Exponential: guarded by
/// `exact_cost`.
pub fn likelihood_exact(ineq: &Inequality, pmfs: &[Pmf], j: usize, v: i32) -> f64 {
    let others: Vec<usize> = (0..ineq.coeffs.len())
        .filter(|&idx| idx != j && ineq.coeffs[idx] != 0)
        .collect();
    let base = ineq.constant as i64 + ineq.coeffs[j] as i64 * v as i64;
    let mut total = 0.0;
    enumerate(ineq, pmfs, &others, 0, base, 1.0, &mut total);
    total
}

fn enumerate(
    ineq: &Inequality,
    pmfs: &[Pmf],
    others: &[usize],
    depth: usize,
    acc: i64,
    weight: f64,
    total: &mut f64,
) {
    if depth == others.len() {
        let sat = match ineq.relation {
            Relation::Ge => acc >= ineq.tau as i64,
            Relation::Lt => acc < ineq.tau as i64,
        };
        if sat {
            *total += weight;
        }
        return;
    }
    let idx = others[depth];
    let a = ineq.coeffs[idx] as i64;
    for v in pmfs[idx].support() {
        let p = pmfs[idx].prob(v);
        if p > 0.0 {
            enumerate(ineq, pmfs, others, depth + 1, acc + a * v as i64, weight * p, total);
        }
    }
}

fn exact_cost(inequalities: &[Inequality], eta: u32) -> f64 {
    let support = (2 * eta + 1) as f64;
    inequalities
        .iter()
        .map(|i| {
            let nz = i.coeffs.iter().filter(|&&a| a != 0).count() as f64;
            support.powf(nz)
        })
        .sum()
}

/// Number of inequality chunks processed independently; the partial
/// accumulators are reduced in chunk order so results do not depend on
/// the thread count.
const CHUNK: usize = 2048;

/// One synchronous update: every unknown's new PMF is
/// prior x prod_t P(inequality t satisfied | value), combined in log
/// space, optionally damped geometrically toward the previous PMF.
pub fn iterate(
    state: &SolverState,
    inequalities: &[Inequality],
    cfg: &SolverConfig,
) -> SolverState {
    let unknowns = state.pmfs.len();
    let eta = state.pmfs.first().map_or(0, |p| p.eta);
    let support = (2 * eta + 1) as usize;
    let prior = Pmf::cbd_prior(eta);
    let tempering = cfg.tempering_at(state.iteration);

    let mut next = state.clone();
    refresh_moments(&mut next, inequalities);
    if inequalities.is_empty() {
        next.iteration += 1;
        return next;
    }

    let means: Vec<f64> = state.pmfs.iter().map(Pmf::mean).collect();
    let vars: Vec<f64> = state.pmfs.iter().map(Pmf::variance).collect();

    let chunks: Vec<(Vec<f64>, u64)> = inequalities
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(chunk_idx, chunk)| {
            let mut acc = vec![0.0f64; unknowns * support];
            let mut clamped = 0u64;
            for (off, ineq) in chunk.iter().enumerate() {
                let (mean_t, var_t) = next.moments[chunk_idx * CHUNK + off];
                let base = (ineq.tau - ineq.constant) as f64 - 0.5;
                for (j, &a) in ineq.coeffs.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    match cfg.mode {
                        LikelihoodMode::Clt => {
                            let a = a as f64;
                            let mu = mean_t - a * means[j];
                            let raw_var = var_t - a * a * vars[j];
                            if raw_var < cfg.variance_floor {
                                clamped += 1;
                            }
                            let inv_sigma = 1.0 / raw_var.max(cfg.variance_floor).sqrt();
                            for (vi, slot) in acc[j * support..(j + 1) * support]
                                .iter_mut()
                                .enumerate()
                            {
                                let v = vi as f64 - eta as f64;
                                let u = (base - a * v - mu) * inv_sigma;
                                let p = match ineq.relation {
                                    Relation::Ge => normal_sf(u),
                                    Relation::Lt => 1.0 - normal_sf(u),
                                };
                                *slot += p.max(LIKELIHOOD_FLOOR).ln();
                            }
                        }
                        LikelihoodMode::Exact => {
                            for (vi, slot) in acc[j * support..(j + 1) * support]
                                .iter_mut()
                                .enumerate()
                            {
                                let v = vi as i32 - eta as i32;
                                let p = likelihood_exact(ineq, &state.pmfs, j, v);
                                *slot += p.max(LIKELIHOOD_FLOOR).ln();
                            }
                        }
                    }
                }
            }
            (acc, clamped)
        })
        .collect();

    let mut log_like = vec![0.0f64; unknowns * support];
    for (acc, clamped) in chunks {
        for (slot, add) in log_like.iter_mut().zip(&acc) {
            *slot += add;
        }
        next.diagnostics.clamped_variances += clamped;
    }

    for j in 0..unknowns {
        let lanes = &log_like[j * support..(j + 1) * support];
        let mut logs: Vec<f64> = lanes
            .iter()
            .zip(prior.probs())
            .map(|(&ll, &p)| tempering * ll + p.max(LIKELIHOOD_FLOOR).ln())
            .collect();
        if cfg.damping > 0.0 {
            for (lv, old) in logs.iter_mut().zip(state.pmfs[j].probs()) {
                *lv = (1.0 - cfg.damping) * *lv + cfg.damping * old.max(LIKELIHOOD_FLOOR).ln();
            }
        }
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            next.diagnostics.reset_posteriors += 1;
            next.pmfs[j] = prior.clone();
            continue;
        }
        let mut probs: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            next.diagnostics.reset_posteriors += 1;
            next.pmfs[j] = prior.clone();
            continue;
        }
        for p in &mut probs {
            *p /= sum;
        }
        next.pmfs[j] = Pmf { eta, probs };
        debug_assert!(next.pmfs[j].is_normalized(1e-12));
    }

    next.iteration += 1;
    next
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub key_guess: Vec<i8>,
    /// Per-unknown max PMF mass at the final state.
    pub confidence: Vec<f64>,
    pub iterations: u32,
    pub converged: bool,
    pub diagnostics: SolverDiagnostics,
}

/// Iterates until every unknown's max mass reaches the threshold, the
/// state stalls, or `max_iterations` is hit. The guess is the
/// per-unknown argmax either way; `converged` reports which exit fired.
pub fn solve(
    inequalities: &[Inequality],
    eta: u32,
    unknowns: usize,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    for (t, ineq) in inequalities.iter().enumerate() {
        if ineq.coeffs.len() != unknowns {
            return Err(Error::config(format!(
                "inequality {t} has {} coefficients, expected {unknowns}",
                ineq.coeffs.len()
            )));
        }
    }
    if cfg.mode == LikelihoodMode::Exact && exact_cost(inequalities, eta) > 2e7 {
        return Err(Error::config(
            "exact likelihood enumeration is limited to tiny systems",
        ));
    }

    let mut state = init_priors(eta, unknowns);
    let mut converged = false;
    while state.iteration < cfg.max_iterations {
        let next = iterate(&state, inequalities, cfg);
        let delta = state
            .pmfs
            .iter()
            .zip(&next.pmfs)
            .flat_map(|(a, b)| a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()))
            .fold(0.0f64, f64::max);
        state = next;
        if state
            .pmfs
            .iter()
            .all(|p| p.max_mass() >= cfg.convergence_threshold)
        {
            converged = true;
            break;
        }
        if delta < 1e-9 {
            break; // stalled short of the threshold
        }
    }

    Ok(SolveResult {
        key_guess: state.pmfs.iter().map(|p| p.argmax() as i8).collect(),
        confidence: state.pmfs.iter().map(Pmf::max_mass).collect(),
        iterations: state.iteration,
        converged,
        diagnostics: state.diagnostics,
    })
}

/// Fraction of exactly matching coefficients.
pub fn verify_key(guess: &[i8], truth: &[i8]) -> Result<f64> {
    if guess.len() != truth.len() {
        return Err(Error::LengthMismatch(guess.len(), truth.len()));
    }
    if guess.is_empty() {
        return Ok(0.0);
    }
    let hits = guess.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / guess.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;
    use rand::Rng;

    fn ineq(relation: Relation, tau: i32, constant: i32, coeffs: Vec<i16>) -> Inequality {
        Inequality { relation, tau, constant, coeffs }
    }

    #[test]
    fn cbd_priors_are_exact() {
        let p2 = Pmf::cbd_prior(2);
        let want2 = [1.0, 4.0, 6.0, 4.0, 1.0].map(|x| x / 16.0);
        for (a, b) in p2.probs().iter().zip(want2) {
            assert!((a - b).abs() < 1e-15);
        }
        let p3 = Pmf::cbd_prior(3);
        let want3 = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0].map(|x| x / 64.0);
        for (a, b) in p3.probs().iter().zip(want3) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(p3.mean().abs() < 1e-15);
        assert!((p3.variance() - 1.5).abs() < 1e-12);
        assert!((p2.variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_tie_breaking() {
        let p = Pmf::from_probs(1, vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(p.argmax(), 0);
        let p = Pmf::from_probs(1, vec![0.4, 0.2, 0.4]).unwrap();
        assert_eq!(p.argmax(), -1); // smaller abs tie broken negative-first
        let p = Pmf::from_probs(2, vec![0.1, 0.3, 0.2, 0.3, 0.1]).unwrap();
        assert_eq!(p.argmax(), -1);
    }

    #[test]
    fn clt_likelihood_close_to_exact_two_unknowns() {
        // x1 + x2 >= 0 with eta = 1 priors [1,2,1]/4:
        // exact P(sat | x1 = -1, 0, 1) = 1/4, 3/4, 1.
        let cfg = SolverConfig::default();
        let system = ineq(Relation::Ge, 0, 0, vec![1, 1]);
        let mut state = init_priors(1, 2);
        refresh_moments(&mut state, std::slice::from_ref(&system));
        let exact = [0.25, 0.75, 1.0];
        for (v, want) in (-1..=1).zip(exact) {
            let got_exact = likelihood_exact(&system, &state.pmfs, 0, v);
            assert!((got_exact - want).abs() < 1e-12);
            let got_clt =
                likelihood(&system, state.moments[0], &state.pmfs[0], 0, v, &cfg);
            assert!(
                (got_clt - want).abs() < 0.15,
                "v={v}: clt {got_clt} vs exact {want}"
            );
        }
    }

    #[test]
    fn zero_coefficient_makes_likelihood_constant() {
        let cfg = SolverConfig::default();
        let system = ineq(Relation::Ge, 0, 0, vec![0, 1]);
        let mut state = init_priors(2, 2);
        refresh_moments(&mut state, std::slice::from_ref(&system));
        let probs: Vec<f64> = (-2..=2)
            .map(|v| likelihood(&system, state.moments[0], &state.pmfs[0], 0, v, &cfg))
            .collect();
        for w in probs.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_variance_gives_step_function() {
        // Single unknown, x >= 1, eta = 3: step {0,0,0,0,1,1,1}.
        let cfg = SolverConfig::default();
        let system = ineq(Relation::Ge, 1, 0, vec![1]);
        let mut state = init_priors(3, 1);
        refresh_moments(&mut state, std::slice::from_ref(&system));
        for v in -3..=3 {
            let p = likelihood(&system, state.moments[0], &state.pmfs[0], 0, v, &cfg);
            let want = if v >= 1 { 1.0 } else { 0.0 };
            assert!(
                (p - want).abs() < 1e-6,
                "v={v}: {p} (floor {})",
                LIKELIHOOD_FLOOR
            );
        }
    }

    #[test]
    fn iterate_single_unknown_exact_bayes() {
        // One exact inequality x >= 1 against the eta=2 prior leaves
        // [0,0,0,4,1]/5.
        let cfg = SolverConfig { mode: LikelihoodMode::Exact, ..Default::default() };
        let system = vec![ineq(Relation::Ge, 1, 0, vec![1])];
        let state = init_priors(2, 1);
        let next = iterate(&state, &system, &cfg);
        let want = [0.0, 0.0, 0.0, 0.8, 0.2];
        for (got, want) in next.pmfs[0].probs().iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "{:?}", next.pmfs[0]);
        }
    }

    #[test]
    fn iterate_two_unknowns_exact_posterior() {
        // x1 + x2 >= 0 at eta = 1: posterior for x1 is [1/11, 6/11, 4/11].
        let cfg = SolverConfig { mode: LikelihoodMode::Exact, ..Default::default() };
        let system = vec![ineq(Relation::Ge, 0, 0, vec![1, 1])];
        let state = init_priors(1, 2);
        let next = iterate(&state, &system, &cfg);
        let want = [1.0 / 11.0, 6.0 / 11.0, 4.0 / 11.0];
        for (got, want) in next.pmfs[0].probs().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn iterate_empty_system_is_identity() {
        let cfg = SolverConfig::default();
        let state = init_priors(2, 3);
        let next = iterate(&state, &[], &cfg);
        assert_eq!(next.pmfs, state.pmfs);
        assert_eq!(next.iteration, 1);
    }

    #[test]
    fn iterate_keeps_pmfs_normalized() {
        let mut rng = DetRng::new(5);
        let unknowns = 16;
        let truth: Vec<i8> = (0..unknowns).map(|_| rng.gen_range(-2..=2) as i8).collect();
        let system: Vec<Inequality> = (0..200)
            .map(|_| {
                let coeffs: Vec<i16> =
                    (0..unknowns).map(|_| rng.gen_range(-4..=4) as i16).collect();
                let lhs: i64 = coeffs
                    .iter()
                    .zip(&truth)
                    .map(|(&a, &x)| a as i64 * x as i64)
                    .sum();
                let tau = lhs as i32 + rng.gen_range(-3..=3);
                if lhs >= tau as i64 {
                    ineq(Relation::Ge, tau, 0, coeffs)
                } else {
                    ineq(Relation::Lt, tau, 0, coeffs)
                }
            })
            .collect();
        let cfg = SolverConfig::default();
        let mut state = init_priors(2, unknowns);
        for _ in 0..5 {
            state = iterate(&state, &system, &cfg);
            assert!(state.pmfs.iter().all(|p| p.is_normalized(1e-9)));
        }
    }

    /// Consistent random system generated from a known key: relations
    /// are whatever actually holds at the truth.
    fn consistent_system(
        rng: &mut DetRng,
        unknowns: usize,
        eta: u32,
        count: usize,
        coeff_range: i16,
    ) -> (Vec<i8>, Vec<Inequality>) {
        let truth: Vec<i8> = (0..unknowns)
            .map(|_| rng.gen_range(-(eta as i32)..=eta as i32) as i8)
            .collect();
        let system = (0..count)
            .map(|_| {
                let coeffs: Vec<i16> = (0..unknowns)
                    .map(|_| rng.gen_range(-coeff_range..=coeff_range))
                    .collect();
                let constant = rng.gen_range(-2..=2);
                let lhs: i64 = coeffs
                    .iter()
                    .zip(&truth)
                    .map(|(&a, &x)| a as i64 * x as i64)
                    .sum::<i64>()
                    + constant as i64;
                let tau = rng.gen_range(-6..=6);
                if lhs >= tau as i64 {
                    ineq(Relation::Ge, tau, constant as i32, coeffs)
                } else {
                    ineq(Relation::Lt, tau, constant as i32, coeffs)
                }
            })
            .collect();
        (truth, system)
    }

    #[test]
    fn clt_likelihoods_close_to_exact_on_tiny_systems() {
        // <= 4 unknowns, eta <= 2: every CLT likelihood stays within
        // 0.15 of exact enumeration, and full solves agree on the key.
        let mut rng = DetRng::new(6);
        for trial in 0..30 {
            let unknowns = 2 + (trial % 3);
            let eta = 1 + (trial % 2) as u32;
            let (_, system) = consistent_system(&mut rng, unknowns, eta, 30, 2);
            let mut state = init_priors(eta, unknowns);
            refresh_moments(&mut state, &system);
            let cfg = SolverConfig::default();
            for (t, q) in system.iter().enumerate() {
                for j in 0..unknowns {
                    if q.coeffs[j] == 0 {
                        continue;
                    }
                    for v in -(eta as i32)..=eta as i32 {
                        let ex = likelihood_exact(q, &state.pmfs, j, v);
                        let cl = likelihood(q, state.moments[t], &state.pmfs[j], j, v, &cfg);
                        assert!(
                            (ex - cl).abs() < 0.15,
                            "trial {trial} ineq {t} j={j} v={v}: exact {ex} clt {cl}"
                        );
                    }
                }
            }

            let exact = solve(
                &system,
                eta,
                unknowns,
                &SolverConfig { mode: LikelihoodMode::Exact, ..Default::default() },
            )
            .unwrap();
            let clt = solve(&system, eta, unknowns, &cfg).unwrap();
            assert_eq!(exact.key_guess, clt.key_guess, "trial {trial}");
        }
    }

    #[test]
    fn exact_iteration_matches_bruteforce_bayes() {
        // Independent oracle: per-unknown posterior computed directly
        // from the joint prior restricted by each inequality's
        // satisfaction probability product.
        let mut rng = DetRng::new(7);
        for _ in 0..20 {
            let unknowns = 3;
            let eta = 2u32;
            let (_, system) = consistent_system(&mut rng, unknowns, eta, 4, 3);
            let state = init_priors(eta, unknowns);
            let next = iterate(
                &state,
                &system,
                &SolverConfig { mode: LikelihoodMode::Exact, ..Default::default() },
            );

            let prior = Pmf::cbd_prior(eta);
            for j in 0..unknowns {
                let mut post: Vec<f64> = prior.probs().to_vec();
                for (vi, v) in (-(eta as i32)..=eta as i32).enumerate() {
                    for q in &system {
                        post[vi] *= likelihood_exact(q, &state.pmfs, j, v);
                    }
                }
                let sum: f64 = post.iter().sum();
                for p in &mut post {
                    *p /= sum;
                }
                for (a, b) in next.pmfs[j].probs().iter().zip(&post) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn solve_recovers_toy_key() {
        let mut rng = DetRng::new(8);
        let unknowns = 4;
        let eta = 2u32;
        let truth: Vec<i8> = (0..unknowns).map(|_| rng.gen_range(-2..=2) as i8).collect();
        let system: Vec<Inequality> = (0..200)
            .map(|_| {
                let coeffs: Vec<i16> =
                    (0..unknowns).map(|_| rng.gen_range(-5..=5) as i16).collect();
                let lhs: i64 = coeffs
                    .iter()
                    .zip(&truth)
                    .map(|(&a, &x)| a as i64 * x as i64)
                    .sum();
                let tau = rng.gen_range(-10..=10);
                if lhs >= tau as i64 {
                    ineq(Relation::Ge, tau, 0, coeffs)
                } else {
                    ineq(Relation::Lt, tau, 0, coeffs)
                }
            })
            .collect();
        let result = solve(&system, eta, unknowns, &SolverConfig::default()).unwrap();
        assert_eq!(result.key_guess, truth);
        assert_eq!(verify_key(&result.key_guess, &truth).unwrap(), 1.0);
    }

    #[test]
    fn solve_flags_contradiction() {
        let system = vec![
            ineq(Relation::Ge, 1, 0, vec![1]),
            ineq(Relation::Lt, 0, 0, vec![1]),
        ];
        let result = solve(&system, 2, 1, &SolverConfig::default()).unwrap();
        assert!(!result.converged || result.confidence[0] < 0.999);
    }

    #[test]
    fn solve_is_deterministic() {
        let mut rng = DetRng::new(9);
        let truth: Vec<i8> = (0..6).map(|_| rng.gen_range(-2..=2) as i8).collect();
        let system: Vec<Inequality> = (0..100)
            .map(|_| {
                let coeffs: Vec<i16> = (0..6).map(|_| rng.gen_range(-4..=4) as i16).collect();
                let lhs: i64 = coeffs
                    .iter()
                    .zip(&truth)
                    .map(|(&a, &x)| a as i64 * x as i64)
                    .sum();
                if lhs >= 0 {
                    ineq(Relation::Ge, 0, 0, coeffs)
                } else {
                    ineq(Relation::Lt, 0, 0, coeffs)
                }
            })
            .collect();
        let a = solve(&system, 2, 6, &SolverConfig::default()).unwrap();
        let b = solve(&system, 2, 6, &SolverConfig::default()).unwrap();
        assert_eq!(a.key_guess, b.key_guess);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn verify_key_fractions() {
        assert_eq!(verify_key(&[1, 2, -1], &[1, 2, -1]).unwrap(), 1.0);
        assert_eq!(verify_key(&[1, 1], &[-1, -1]).unwrap(), 0.0);
        assert_eq!(verify_key(&[1, 0, 2, 3], &[1, 0, -2, -3]).unwrap(), 0.5);
        assert!(verify_key(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn solve_rejects_bad_config_and_shapes() {
        let bad_cfg = SolverConfig { damping: 1.0, ..Default::default() };
        assert!(solve(&[], 2, 4, &bad_cfg).is_err());
        let system = vec![ineq(Relation::Ge, 0, 0, vec![1, 2])];
        assert!(solve(&system, 2, 3, &SolverConfig::default()).is_err());
    }
}
