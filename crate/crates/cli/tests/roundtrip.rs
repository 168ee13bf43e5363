use adaptive_contracts::Setting;
use adaptive_contracts_cli::instance::InstanceFile;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn random_setting(seed: u64) -> Setting {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=5);
    let ell = rng.random_range(1..=5);
    let m: Vec<usize> = (0..ell).map(|_| rng.random_range(1..=5)).collect();
    let costs = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let d = (0..ell).map(|_| rng.random_range(0.0..1.0)).collect();
    let q0 = (0..n).map(|_| row(&mut rng, ell)).collect();
    let qk = m
        .iter()
        .map(|&mk| (0..n).map(|_| row(&mut rng, mk)).collect())
        .collect();
    let rewards = m
        .iter()
        .map(|&mk| (0..mk).map(|_| rng.random_range(-1.0..5.0)).collect())
        .collect();
    let surcharge = if rng.random_bool(0.5) {
        rng.random_range(0.0..100.0)
    } else {
        0.0
    };
    Setting::with_ragged_rewards(costs, d, q0, qk, rewards)
        .unwrap()
        .with_surcharge(surcharge)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn instance_json_round_trips_exactly(seed in any::<u64>()) {
        let s = random_setting(seed);
        let text = InstanceFile::from_setting(&s).to_json();
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_setting().unwrap(), s);
    }
}
