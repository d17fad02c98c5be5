mod common;

use common::*;
use nagc::baselines::snmf_fit_from;
use nagc::model::iterate;
use nagc::Hyperparams;

#[test]
fn nagc_without_attributes_tracks_snmf() {
    let mut r = rng(2024);
    let (n, m, k) = (30, 6, 3);
    let s = random_graph(n, 0.2, &mut r);
    let x = uniform(n, m, 0.0, 1.0, &mut r);
    let model = random_model(n, m, k, 2, &mut r);
    let hp = Hyperparams {
        k1: k,
        k2: 2,
        lambda: 0.0,
        rho: 0.5,
        iters: 100,
        ..Hyperparams::default()
    };

    let mut nagc_iterates = Vec::new();
    iterate(&s, &x, &hp, model.clone(), |_, fm, _| nagc_iterates.push(fm.u.clone())).unwrap();
    let mut snmf_iterates = Vec::new();
    snmf_fit_from(&s, model.u.clone(), 100, hp.epsilon, |_, u| {
        snmf_iterates.push(u.clone())
    })
    .unwrap();

    assert_eq!(nagc_iterates.len(), 100);
    assert_eq!(snmf_iterates.len(), 100);
    for (t, (a, b)) in nagc_iterates.iter().zip(&snmf_iterates).enumerate() {
        let d = max_rel_diff(a, b);
        assert!(d <= 1e-12, "iteration {}: relative difference {d:e}", t + 1);
    }
}
