mod common;

use common::*;
use nagc::data::{generate_planted, PlantedConfig};
use nagc::kernels::{complement_gram_times_with, masked_gram_times_with, sparse_dense_mul_with};
use nagc::model::fit;
use nagc::{Exec, Hyperparams};

#[test]
fn kernels_agree_across_exec_modes() {
    let mut r = rng(5);
    let s = random_graph(120, 0.05, &mut r);
    let u = uniform(120, 4, 0.0, 1.0, &mut r);
    assert_eq!(
        sparse_dense_mul_with(&s, &u, Exec::Sequential).unwrap(),
        sparse_dense_mul_with(&s, &u, Exec::Parallel).unwrap()
    );
    assert_eq!(
        masked_gram_times_with(&u, &s, Exec::Sequential).unwrap(),
        masked_gram_times_with(&u, &s, Exec::Parallel).unwrap()
    );
    assert_eq!(
        complement_gram_times_with(&u, &s, Exec::Sequential).unwrap(),
        complement_gram_times_with(&u, &s, Exec::Parallel).unwrap()
    );
}

#[test]
fn same_seed_same_fit() {
    let ds = generate_planted(&PlantedConfig {
        n: 80,
        k: 2,
        m: 12,
        ..PlantedConfig::default()
    })
    .unwrap();
    let hp = Hyperparams {
        k1: 2,
        k2: 3,
        iters: 15,
        seed: 9,
        ..Hyperparams::default()
    };
    let a = fit(&ds.graph, &ds.attributes, &hp).unwrap();
    let b = fit(&ds.graph, &ds.attributes, &hp).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.trace, b.trace);
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let ds = generate_planted(&PlantedConfig {
        n: 600,
        k: 3,
        m: 30,
        p_in: 0.05,
        ..PlantedConfig::default()
    })
    .unwrap();
    let hp = Hyperparams {
        k1: 3,
        k2: 4,
        iters: 10,
        seed: 3,
        ..Hyperparams::default()
    };
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = single.install(|| fit(&ds.graph, &ds.attributes, &hp)).unwrap();
    let b = many.install(|| fit(&ds.graph, &ds.attributes, &hp)).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.trace, b.trace);
}
