//! Temporary microbenchmark (deleted before final commit).

use ldlc_core::*;
use rand::Rng;
use rand::SeedableRng;

fn random_mixture(rng: &mut impl Rng, k: usize) -> GaussianMixture {
    let comps: Vec<WeightedComponent> = (0..k)
        .map(|_| WeightedComponent {
            log_weight: rng.random_range(-3.0..0.0),
            gaussian: Gaussian {
                mean: rng.random_range(-2.0..2.0),
                variance: rng.random_range(0.05..0.4),
            },
        })
        .collect();
    GaussianMixture::new(comps).unwrap()
}

#[test]
#[ignore]
fn micro_check_message() {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
    let cfg = DecoderConfig::default();
    let set = IntegerSet::Window { half_width: 2 };
    let reps = 2000;
    let mixes: Vec<(GaussianMixture, GaussianMixture)> =
        (0..32).map(|_| (random_mixture(&mut rng, 8), random_mixture(&mut rng, 8))).collect();
    let t0 = std::time::Instant::now();
    let mut sink = 0usize;
    for r in 0..reps {
        let (a, b) = &mixes[r % mixes.len()];
        let out = ldlc_core::decoder::factor_graph::factor_to_variable(
            1.1,
            &[(0.8, a), (-0.5, b)],
            &set,
            0.3,
            &cfg,
        )
        .unwrap();
        sink += out.len();
    }
    eprintln!(
        "factor_to_variable: {:.1} us/call (sink {sink})",
        t0.elapsed().as_secs_f64() * 1e6 / reps as f64
    );

    let t1 = std::time::Instant::now();
    let mut sink2 = 0usize;
    for r in 0..reps {
        let (a, b) = &mixes[r % mixes.len()];
        let out = variable_to_factor_probe(0.2, 0.1, &[a, b], &cfg).unwrap();
        sink2 += out.len();
    }
    eprintln!(
        "variable_to_factor: {:.1} us/call (sink {sink2})",
        t1.elapsed().as_secs_f64() * 1e6 / reps as f64
    );
}

fn variable_to_factor_probe(
    y: f64,
    s2: f64,
    incoming: &[&GaussianMixture],
    cfg: &DecoderConfig,
) -> Result<GaussianMixture> {
    ldlc_core::decoder::factor_graph::variable_to_factor(y, s2, incoming, cfg)
}
