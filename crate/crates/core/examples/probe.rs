// Temporary calibration probe; not part of the deliverable surface.
use std::time::Instant;

use maskfault_core::campaign::{run_campaign, CampaignConfig, Relation, StopRule};
use maskfault_core::fault::FaultProfile;
use maskfault_core::kem::{self, keygen};
use maskfault_core::params::Scheme;
use maskfault_core::solver::{solve, verify_key, SolverConfig};
use maskfault_core::DetRng;

fn main() {
    let params = Scheme::Kyber512.params();
    let kp = keygen(&params, 1);
    let truth = maskfault_core::campaign::truth_vector(&kp);

    // Stage 0: unfiltered split over m[i]=1 coefficients.
    let t0 = Instant::now();
    let mut qualifying = 0u64;
    let mut eventual_failure = 0u64;
    let mut rng = DetRng::with_stream(99, 0);
    let beta = 20;
    let spec =
        maskfault_core::fault::FaultSpec::single_bit(maskfault_core::fault::FaultKind::StuckAt1, 0, 0, 11)
            .unwrap();
    'outer: loop {
        let rec = kem::encapsulate(&kp, &mut rng);
        let mp = kem::m_prime(&kp, &rec);
        for i in 0..params.n {
            if rec.m[i] != 1 {
                continue;
            }
            qualifying += 1;
            for _ in 0..beta {
                let (bit, _) = kem::decode_coefficient_masked(
                    mp.coeffs[i],
                    &params,
                    1,
                    13,
                    &mut rng,
                    Some(&spec),
                )
                .unwrap();
                if bit != 1 {
                    eventual_failure += 1;
                    break;
                }
            }
            if qualifying >= 200_000 {
                break 'outer;
            }
        }
    }
    println!(
        "split: {} / {} = {:.4}%  ({:.1?})",
        eventual_failure,
        qualifying,
        100.0 * eventual_failure as f64 / qualifying as f64,
        t0.elapsed()
    );

    // Stage 1: ideal Table-4 campaign.
    let t1 = Instant::now();
    let cfg = CampaignConfig {
        order: 1,
        a2b_width: None,
        coeff_index: 0,
        beta: 20,
        filter_pool: 19,
        rejection_rate: 0.5,
        stop: StopRule::Ciphertexts(60_000),
        profile: FaultProfile::ideal(&params),
        seed: 1,
    };
    let out = run_campaign(&kp, &cfg).unwrap();
    let c = &out.counters;
    let lt = out.inequalities.iter().filter(|i| i.relation == Relation::Lt).count();
    let ge = out.inequalities.len() - lt;
    println!(
        "campaign: cts={} injections={} mean_reps={:.3} kept={} (GE {} / LT {}) ratio {:.1}:{:.1}  ({:.1?})",
        c.ciphertexts,
        c.injections,
        c.mean_repetitions,
        out.inequalities.len(),
        ge,
        lt,
        100.0 * lt as f64 / out.inequalities.len() as f64,
        100.0 * ge as f64 / out.inequalities.len() as f64,
        t1.elapsed()
    );

    // Ground-truth satisfaction.
    let ge_ok = out
        .inequalities
        .iter()
        .filter(|i| i.relation == Relation::Ge)
        .all(|i| i.satisfied_by(&truth));
    let lt_violated = out
        .inequalities
        .iter()
        .filter(|i| i.relation == Relation::Lt && !i.satisfied_by(&truth))
        .count();
    println!("truth: all GE ok = {ge_ok}, LT violated = {lt_violated} of {lt}");

    // Stage 2: solve on all kept inequalities.
    let t2 = Instant::now();
    let res = solve(&out.inequalities, params.eta1, params.unknowns(), &SolverConfig::default())
        .unwrap();
    println!(
        "solve(all={}): success={:.4} iters={} converged={} clamped={} resets={}  ({:.1?})",
        out.inequalities.len(),
        verify_key(&res.key_guess, &truth).unwrap(),
        res.iterations,
        res.converged,
        res.diagnostics.clamped_variances,
        res.diagnostics.reset_posteriors,
        t2.elapsed()
    );

    // Stage 3: solve at exactly 30k.
    let t3 = Instant::now();
    let head = &out.inequalities[..30_000.min(out.inequalities.len())];
    let res30 = solve(head, params.eta1, params.unknowns(), &SolverConfig::default()).unwrap();
    println!(
        "solve(30k): success={:.4} iters={} converged={}  ({:.1?})",
        verify_key(&res30.key_guess, &truth).unwrap(),
        res30.iterations,
        res30.converged,
        t3.elapsed()
    );
}
