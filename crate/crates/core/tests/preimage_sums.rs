mod common;

use horoflow::horosum::{
    default_n_max, i_ratio_test, j_sum_exact, j_sum_mc, key_lemma_statistic, local_limit_fit, JQuery,
    KeyLemmaParams,
};
use horoflow::sft::birkhoff_sum;
use horoflow::{refs, BasicSet, BlMeasure, Density, Error, FlowModel, PressureConfig, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> PressureConfig {
    PressureConfig::default()
}

fn blm(m: &FlowModel, u: f64) -> BlMeasure {
    BlMeasure::new(m, &[u], &cfg(), Density::Psi0).unwrap()
}

fn random_word(m: &FlowModel, rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
    let mut w = vec![rng.gen_range(0..m.n_states())];
    while w.len() < len {
        let succ: Vec<usize> = m.ts().successors(*w.last().unwrap()).collect();
        w.push(succ[rng.gen_range(0..succ.len())]);
    }
    w
}

/// A query that counts at least the preimage obtained by prepending a random
/// admissible prefix to `x*`.
fn planted_query(m: &FlowModel, rng: &mut ChaCha8Rng, k: usize) -> JQuery {
    let len = k.max(2) + rng.gen_range(0..2);
    let x_star = random_word(m, rng, len);
    let n = rng.gen_range(1..=9);
    let mut y = x_star.clone();
    for _ in 0..n {
        let pred: Vec<usize> = m.ts().predecessors(y[0]).collect();
        y.insert(0, pred[rng.gen_range(0..pred.len())]);
    }
    let a = Word::from(y[..rng.gen_range(1..=2)].to_vec());
    let bound = m.roof_lower_bound(&a);
    let alpha = rng.gen_range(0.0..0.5 * bound);
    let beta = rng.gen_range(0.5 * bound..bound);
    let s = rng.gen_range(alpha..=beta);
    let xi0 = vec![rng.gen_range(-3..=3)];
    let f_n = birkhoff_sum(m.f(), &y, n).unwrap();
    JQuery {
        x_star: Word::from(x_star),
        xi_star: vec![xi0[0] + f_n[0]],
        t_sharp: birkhoff_sum(m.r(), &y, n).unwrap() - s,
        e: BasicSet::new(m, a, xi0.clone(), alpha, beta).unwrap(),
        xi0,
        n_max: n + rng.gen_range(0..3),
    }
}

fn models() -> Vec<FlowModel> {
    vec![refs::f2_unit(), refs::golden_mean(), refs::gm_irr(), refs::f2_irr_edge()]
}

#[test]
fn exact_sum_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for m in models() {
        for u in [0.0, 0.6] {
            let b = blm(&m, u);
            let mut nonzero = 0;
            for _ in 0..50 {
                let q = planted_query(&m, &mut rng, b.depth());
                let exact = j_sum_exact(&m, &b, &q).unwrap();
                let brute = common::brute_force_j(&m, &b, &q);
                assert!(common::rel_close(exact, brute, 1e-12), "{exact} vs {brute}");
                nonzero += usize::from(exact > 0.0);
            }
            assert_eq!(nonzero, 50);
        }
    }
}

fn gm_query(t_sharp: f64, xi_star: i64, beta: f64, n_max: usize) -> JQuery {
    let m = refs::gm_irr();
    JQuery {
        x_star: Word::from(vec![0]),
        xi0: vec![0],
        xi_star: vec![xi_star],
        t_sharp,
        e: BasicSet::new(&m, Word::from(vec![0]), vec![0], 0.0, beta).unwrap(),
        n_max,
    }
}

#[test]
fn reference_query_is_empty_by_arithmetic() {
    // r_n = n_a + n_b/√2 and f_n = n_a - n_b; no pair with n_a - n_b = 2 has
    // r_n in [6, 6.4]
    let m = refs::gm_irr();
    let b = blm(&m, 0.0);
    let q = gm_query(6.0, 2, 0.4, 12);
    assert_eq!(j_sum_exact(&m, &b, &q).unwrap(), 0.0);
    assert_eq!(common::brute_force_j(&m, &b, &q), 0.0);
    let q = gm_query(5.0, 2, 0.6, 12);
    let exact = j_sum_exact(&m, &b, &q).unwrap();
    assert!(exact > 0.0);
    assert!(common::rel_close(exact, common::brute_force_j(&m, &b, &q), 1e-12));
}

#[test]
fn zero_width_window_counts_nothing() {
    let m = refs::gm_irr();
    let b = blm(&m, 0.0);
    let mut q = gm_query(5.0, 2, 0.6, 12);
    q.e.beta = 0.0;
    assert_eq!(j_sum_exact(&m, &b, &q).unwrap(), 0.0);
    let est = j_sum_mc(&m, &b, &q, 1000, 0, &cfg()).unwrap();
    assert_eq!((est.estimate, est.stderr), (0.0, 0.0));
}

#[test]
fn exact_sum_is_monotone_in_beta_and_depth() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in models() {
        let b = blm(&m, 0.3);
        for _ in 0..30 {
            let q = planted_query(&m, &mut rng, b.depth());
            let base = j_sum_exact(&m, &b, &q).unwrap();
            let bound = m.roof_lower_bound(&q.e.a);
            let wider = JQuery {
                e: BasicSet { beta: bound, ..q.e.clone() },
                ..q.clone()
            };
            assert!(j_sum_exact(&m, &b, &wider).unwrap() >= base);
            let deeper = JQuery { n_max: q.n_max + 2, ..q.clone() };
            assert!(j_sum_exact(&m, &b, &deeper).unwrap() >= base);
        }
    }
}

#[test]
fn exact_sum_depends_only_on_the_displacement() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in models() {
        let b = blm(&m, -0.4);
        for _ in 0..20 {
            let q = planted_query(&m, &mut rng, b.depth());
            let eta = rng.gen_range(-10..=10);
            let mut moved = q.clone();
            moved.xi0[0] += eta;
            moved.xi_star[0] += eta;
            moved.e.xi[0] += eta;
            assert_eq!(j_sum_exact(&m, &b, &q).unwrap(), j_sum_exact(&m, &b, &moved).unwrap());
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact_and_scales() {
    let m = refs::gm_irr();
    let b = blm(&m, 0.0);
    let q = gm_query(5.0, 2, 0.6, 12);
    let exact = j_sum_exact(&m, &b, &q).unwrap();
    let within = (0..20u64)
        .filter(|&seed| {
            let est = j_sum_mc(&m, &b, &q, 2000, seed, &cfg()).unwrap();
            (est.estimate - exact).abs() <= 3.0 * est.stderr
        })
        .count();
    assert!(within >= 18, "{within}/20");
    let mean_se = |n: usize| (0..8u64).map(|s| j_sum_mc(&m, &b, &q, n, 100 + s, &cfg()).unwrap().stderr).sum::<f64>() / 8.0;
    // doubling the sample count shrinks the error by √2; four times by 2
    let ratio = mean_se(2000) / mean_se(8000);
    assert!((ratio / 2.0 - 1.0).abs() <= 0.5, "{ratio}");
    assert!(matches!(j_sum_mc(&m, &b, &q, 999, 0, &cfg()), Err(Error::InvalidParameter(_))));
}

#[test]
fn ratio_test_identities() {
    let m = refs::f2_irr_edge();
    let e = BasicSet::new(&m, Word::from(vec![0]), vec![0], 0.1, 0.9).unwrap();
    let same = i_ratio_test(&m, &[0.4], &e, &e, 12.0, 8, 3, &cfg()).unwrap();
    assert!((same.lhs - 1.0).abs() <= 1e-15 && (same.rhs - 1.0).abs() <= 1e-15);
    assert_eq!(same.log_discrepancy, 0.0);

    let e2 = BasicSet::new(&m, Word::from(vec![1]), vec![1], 0.05, 0.6).unwrap();
    let base = i_ratio_test(&m, &[0.4], &e, &e2, 12.0, 8, 3, &cfg()).unwrap();
    let shift = |s: &BasicSet| BasicSet { xi: vec![s.xi[0] + 4], ..s.clone() };
    let moved = i_ratio_test(&m, &[0.4], &shift(&e), &shift(&e2), 12.0, 8, 3, &cfg()).unwrap();
    assert!((base.log_discrepancy - moved.log_discrepancy).abs() <= 1e-12);

    // E2 = E1 shifted by η: the mass ratio is exactly e^{-uη}
    let deck = i_ratio_test(&m, &[0.4], &e, &shift(&e), 12.0, 8, 3, &cfg()).unwrap();
    assert!((deck.rhs - (-0.4f64 * 4.0).exp()).abs() <= 1e-12);
}

#[test]
fn local_limit_fit_needs_growth() {
    let m = refs::gm_irr();
    let e = BasicSet::new(&m, Word::from(vec![0]), vec![0], 0.0, 0.0).unwrap();
    let grid = [10.0, 11.0, 12.0, 13.0];
    let err = local_limit_fit(&m, &[0.3], &Word::from(vec![0]), &grid, &e, &cfg()).unwrap_err();
    assert!(matches!(err, Error::InsufficientGrowthWindow { .. }));
    let e = BasicSet::new(&m, Word::from(vec![0]), vec![0], 0.0, 0.5).unwrap();
    assert!(local_limit_fit(&m, &[0.3], &Word::from(vec![0]), &[10.0, 11.0], &e, &cfg()).is_err());
    let fit = local_limit_fit(&m, &[0.3], &Word::from(vec![0]), &grid, &e, &cfg()).unwrap();
    assert_eq!(fit.points.len(), grid.len());
    assert!(fit.points.iter().all(|p| p.j > 0.0));
}

#[test]
fn key_lemma_extremes() {
    let m = refs::gm_irr();
    let params = |eps0: f64| KeyLemmaParams {
        big_n: 4,
        eps0,
        n: 1,
        t_sharp: 12.0,
        samples: 2000,
        seed: 5,
    };
    let loose = key_lemma_statistic(&m, &[0.3], &params(1e6), &cfg()).unwrap();
    assert_eq!(loose.fraction, 0.0);
    assert!(loose.accepted > 0);
    let tight = key_lemma_statistic(&m, &[0.3], &params(1e-6), &cfg()).unwrap();
    assert!(tight.fraction > 0.99);
    let far = KeyLemmaParams { n: 40, ..params(0.1) };
    assert!(matches!(key_lemma_statistic(&m, &[0.3], &far, &cfg()), Err(Error::InvalidParameter(_))));
}

#[test]
fn default_depth_covers_the_window() {
    let m = refs::gm_irr();
    let n = default_n_max(&m, 6.0, 0.4).unwrap();
    // the shortest symbol has roof 1/√2, so 6.4 needs at most 9 of them
    assert_eq!(n, 10);
}
