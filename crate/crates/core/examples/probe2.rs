// Temporary: per-key decryption-noise tail measurement.
use maskfault_core::kem::{decryption_noise, encapsulate, keygen};
use maskfault_core::params::Scheme;
use maskfault_core::DetRng;

fn main() {
    let params = Scheme::Kyber512.params();
    for key_seed in 1u64..=8 {
        let kp = keygen(&params, key_seed);
        let e_norm: i64 = kp.e.iter().flat_map(|p| &p.coeffs).map(|&c| (c as i64).pow(2)).sum();
        let s_norm: i64 = kp.s.iter().flat_map(|p| &p.coeffs).map(|&c| (c as i64).pow(2)).sum();
        let mut rng = DetRng::with_stream(1000 + key_seed, 0);
        let mut n = 0u64;
        let mut below = 0u64; // d <= -194  (success region)
        let mut sum = 0f64;
        let mut sumsq = 0f64;
        for _ in 0..800 {
            let rec = encapsulate(&kp, &mut rng);
            let d = decryption_noise(&kp, &rec);
            for &x in &d.coeffs {
                n += 1;
                if (x as i32) < -193 {
                    below += 1;
                }
                sum += x as f64;
                sumsq += (x as f64) * (x as f64);
            }
        }
        let mean = sum / n as f64;
        let sd = (sumsq / n as f64 - mean * mean).sqrt();
        println!(
            "key {key_seed}: |e|^2={e_norm} |s|^2={s_norm} n={n} mean={mean:.3} sd={sd:.2} P(d<-193)={:.4}%  split={:.4}%",
            100.0 * below as f64 / n as f64,
            100.0 * (1.0 - below as f64 / n as f64)
        );
    }
}
