// Temporary: solver dynamics investigation on a real campaign system.
use std::path::Path;
use std::time::Instant;

use maskfault_core::campaign::{run_campaign, CampaignConfig, StopRule};
use maskfault_core::fault::FaultProfile;
use maskfault_core::io::{read_inequalities_csv, write_inequalities_csv};
use maskfault_core::kem::keygen;
use maskfault_core::params::Scheme;
use maskfault_core::solver::{init_priors, iterate, verify_key, LikelihoodMode, SolverConfig};

fn main() {
    let params = Scheme::Kyber512.params();
    let kp = keygen(&params, 1);
    let truth = maskfault_core::campaign::truth_vector(&kp);

    let cache = Path::new("/tmp/probe_ineq.csv");
    let system = if cache.exists() {
        read_inequalities_csv(cache).unwrap()
    } else {
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
        write_inequalities_csv(cache, &out.inequalities).unwrap();
        out.inequalities
    };
    println!("system: {} inequalities", system.len());

    let grid: Vec<(f64, f64, f64)> = vec![
        (0.01, 1.5, 0.0),
        (0.01, 1.5, 0.5),
        (0.02, 2.0, 0.0),
        (0.05, 1.2, 0.5),
    ];
    for (tempering, growth, damping) in grid {
        let cfg = SolverConfig {
            max_iterations: 60,
            damping,
            tempering,
            tempering_growth: growth,
            mode: LikelihoodMode::Clt,
            ..Default::default()
        };
        let mut state = init_priors(params.eta1, params.unknowns());
        let t = Instant::now();
        println!("tempering {tempering} growth {growth} damping {damping}:");
        print!("  ");
        for it in 1..=40 {
            state = iterate(&state, &system, &cfg);
            let guess: Vec<i8> = state.pmfs.iter().map(|p| p.argmax() as i8).collect();
            let frac = verify_key(&guess, &truth).unwrap();
            let mean_mass: f64 =
                state.pmfs.iter().map(|p| p.max_mass()).sum::<f64>() / state.pmfs.len() as f64;
            print!("{it}:{frac:.3}/{mean_mass:.2} ");
            if it % 8 == 0 {
                println!();
                print!("  ");
            }
            if frac == 1.0 {
                break;
            }
        }
        println!("\n  ({:.1?})", t.elapsed());
    }
}
