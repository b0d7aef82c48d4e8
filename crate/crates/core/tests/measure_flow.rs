use horoflow::flow::{
    advance_geodesic, cocycles_rf, kappa_block_exchange, lambda_n_membership, vartheta_suffix_exchange,
};
use horoflow::pressure::solve_pressure;
use horoflow::{
    refs, BasicSet, BlMeasure, Density, Error, FlowModel, PressureConfig, SymbolGenerator, SymbolicState, Word,
};
use proptest::prelude::*;

fn models() -> Vec<FlowModel> {
    vec![refs::f2_unit(), refs::gm_irr(), refs::f2_irr_edge()]
}

fn blm(m: &FlowModel, u: f64) -> BlMeasure {
    BlMeasure::new(m, &[u], &PressureConfig::default(), Density::Psi0).unwrap()
}

fn gibbs_state(m: &FlowModel, u: f64, seed: u64) -> SymbolicState {
    let g = solve_pressure(m, &[u], &PressureConfig::default()).unwrap().gibbs;
    SymbolicState::new(m, SymbolGenerator::gibbs_chain(&g, seed), vec![0], 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_is_additive_in_the_s_interval(u in -1.5f64..1.5, cuts in prop::array::uniform3(0.0f64..1.0), idx in 0usize..3) {
        let m = &models()[idx];
        let b = blm(m, u);
        for a in m.ts().enumerate_cylinders(2) {
            let bound = m.roof_lower_bound(&a);
            let mut c = cuts.map(|x| x * bound);
            c.sort_by(f64::total_cmp);
            let mass = |lo: f64, hi: f64| b.basic_set_mass(&BasicSet::new(m, a.clone(), vec![1], lo, hi).unwrap()).unwrap();
            let whole = mass(c[0], c[2]);
            let split = mass(c[0], c[1]) + mass(c[1], c[2]);
            prop_assert!((whole - split).abs() <= 1e-12 * whole.max(1.0));
            prop_assert!(mass(c[0], c[1]) <= whole * (1.0 + 1e-12));
        }
    }

    #[test]
    fn deck_scaling_is_exact(u in -1.5f64..1.5, eta in -5i64..=5, idx in 0usize..3) {
        let m = &models()[idx];
        let b = blm(m, u);
        let a = Word::from(vec![0]);
        let bound = m.roof_lower_bound(&a);
        let e = BasicSet::new(m, a.clone(), vec![2], 0.1 * bound, 0.8 * bound).unwrap();
        let moved = BasicSet { xi: vec![2 + eta], ..e.clone() };
        let ratio = b.basic_set_mass(&moved).unwrap() / b.basic_set_mass(&e).unwrap();
        let expected = (u * eta as f64).exp();
        prop_assert!((ratio - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn geodesic_scaling_is_exact(u in -1.5f64..1.5, frac in 0.0f64..1.0, idx in 0usize..3) {
        let m = &models()[idx];
        let b = blm(m, u);
        let a = Word::from(vec![1, 0]);
        let bound = m.roof_lower_bound(&a);
        let e = BasicSet::new(m, a, vec![0], 0.2 * bound, 0.6 * bound).unwrap();
        let s = -0.2 * bound + frac * 0.6 * bound;
        let c = b.geodesic_scaling_check(&e, s).unwrap();
        prop_assert!((c.ratio - c.expected).abs() <= 1e-12 * c.expected);
    }

    #[test]
    fn flowing_is_additive(u in -1.0f64..1.0, t1 in 0.0f64..40.0, t2 in 0.0f64..40.0, seed in 0u64..1000, idx in 0usize..3) {
        let m = &models()[idx];
        let st = gibbs_state(m, u, seed);
        let split = advance_geodesic(&advance_geodesic(&st, m, t1).unwrap(), m, t2).unwrap();
        let joint = advance_geodesic(&st, m, t1 + t2).unwrap();
        prop_assert_eq!(split.xi(), joint.xi());
        prop_assert_eq!(split.position(), joint.position());
        prop_assert!((split.t() - joint.t()).abs() <= 1e-9);
    }

    #[test]
    fn cocycles_ignore_where_the_common_tail_is_cut(seed in 0u64..1000, j in 0usize..=5, idx in 0usize..3) {
        let m = &models()[idx];
        let g = solve_pressure(m, &[0.2], &PressureConfig::default()).unwrap().gibbs;
        let mut gen = SymbolGenerator::gibbs_chain(&g, seed);
        let tail: Vec<usize> = (0..20).map(|_| gen.next_symbol().unwrap()).collect();
        // two different admissible heads glued onto the same tail
        let heads: Vec<Word> = m.ts().enumerate_cylinders(4).into_iter()
            .filter(|h| m.ts().allowed(*h.last().unwrap(), tail[0]))
            .collect();
        let x = Word::concat(&[&heads[0], &tail]);
        let y = Word::concat(&[&heads[heads.len() - 1][1..], &tail]);
        let base = cocycles_rf(&x, &y, 4, 3, m).unwrap();
        let moved = cocycles_rf(&x, &y, 4 + j, 3 + j, m).unwrap();
        prop_assert_eq!(&base.f, &moved.f);
        prop_assert!((base.r_plus - moved.r_plus).abs() <= 1e-12);
    }
}

#[test]
fn nu_is_additive_to_depth_k_plus_six() {
    for m in models() {
        for u in [-0.9, 0.0, 0.8] {
            let b = blm(&m, u);
            let k = b.depth();
            for len in 1..=k + 6 {
                for w in m.ts().enumerate_cylinders(len) {
                    let parent = b.cylinder_nu(&w).unwrap();
                    let children: f64 = m
                        .ts()
                        .successors(*w.last().unwrap())
                        .map(|c| b.cylinder_nu(&Word::concat(&[&w, &[c]])).unwrap())
                        .sum();
                    assert!((parent - children).abs() <= 1e-12);
                }
            }
            let total: f64 = m.ts().enumerate_cylinders(1).iter().map(|w| b.cylinder_nu(w).unwrap()).sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn psi_u_density_agrees_with_psi0_at_zero_tilt() {
    let m = refs::gm_irr();
    let cfg = PressureConfig::default();
    let a = BlMeasure::new(&m, &[0.0], &cfg, Density::Psi0).unwrap();
    let b = BlMeasure::new(&m, &[0.0], &cfg, Density::PsiU).unwrap();
    for w in m.ts().enumerate_cylinders(3) {
        let (x, y) = (a.weighted_cylinder(&w).unwrap(), b.weighted_cylinder(&w).unwrap());
        assert!((x - y).abs() <= 1e-12);
    }
    let c = BlMeasure::new(&m, &[0.7], &cfg, Density::PsiU).unwrap();
    let d = BlMeasure::new(&m, &[0.7], &cfg, Density::Psi0).unwrap();
    let differs = m.ts().enumerate_cylinders(2).iter().any(|w| {
        (c.weighted_cylinder(w).unwrap() - d.weighted_cylinder(w).unwrap()).abs() > 1e-6
    });
    assert!(differs);
    assert!(m.ts().enumerate_cylinders(2).iter().all(|w| c.psi(w) == d.psi(w)));
    assert_eq!("psi_u".parse::<Density>().unwrap(), Density::PsiU);
    assert!("psi".parse::<Density>().is_err());
}

#[test]
fn invalid_basic_sets_are_rejected() {
    let m = refs::gm_irr();
    let bound = m.roof_lower_bound(&[1]);
    assert!(matches!(BasicSet::new(&m, Word::from(vec![1, 1]), vec![0], 0.0, 0.1), Err(Error::InvalidWord(_))));
    assert!(matches!(BasicSet::new(&m, Word::from(vec![1]), vec![0, 0], 0.0, 0.1), Err(Error::InvalidParameter(_))));
    assert!(matches!(BasicSet::new(&m, Word::from(vec![1]), vec![0], 0.3, 0.2), Err(Error::InvalidParameter(_))));
    assert!(matches!(BasicSet::new(&m, Word::from(vec![1]), vec![0], -0.1, 0.2), Err(Error::InvalidParameter(_))));
    assert!(BasicSet::new(&m, Word::from(vec![1]), vec![0], 0.0, bound).is_ok());
    assert!(BasicSet::new(&m, Word::from(vec![1]), vec![0], 0.0, bound + 1e-3).is_err());
    let b = blm(&m, 0.3);
    let empty = BasicSet::new(&m, Word::from(vec![0]), vec![0], 0.2, 0.2).unwrap();
    assert_eq!(b.basic_set_mass(&empty).unwrap(), 0.0);
    assert!(matches!(b.geodesic_scaling_check(&empty, 0.0), Err(Error::DegenerateDenominator)));
}

#[test]
fn xi_changes_by_at_most_one_cocycle_step_per_crossing() {
    for m in models() {
        let fmax = m.f().max_norm(m.ts());
        let dt = 0.5 * m.r_star().min(m.ts());
        let mut st = gibbs_state(&m, 0.5, 3);
        for _ in 0..5000 {
            let before = (st.xi().to_vec(), st.position());
            st.advance(&m, dt).unwrap();
            assert!(st.position() - before.1 <= 1);
            assert!((st.xi()[0] - before.0[0]).abs() <= fmax);
        }
        assert!((st.elapsed() - 5000.0 * dt).abs() <= 1e-9);
    }
}

#[test]
fn block_exchange_is_an_involution_on_the_full_shift() {
    let m = refs::f2_unit();
    let bt = m.ts().bridge_words().unwrap();
    assert_eq!(bt.bridge_length(), 0);
    let g = solve_pressure(&m, &[0.0], &PressureConfig::default()).unwrap().gibbs;
    for seed in 0..200u64 {
        let mut gen = SymbolGenerator::gibbs_chain(&g, seed);
        let w: Vec<usize> = (0..30).map(|_| gen.next_symbol().unwrap()).collect();
        let n = 1 + (seed as usize % 3);
        let big_n = 1 + (seed as usize % 4);
        let once = kappa_block_exchange(&w, 2, n, big_n, &bt, &m).unwrap();
        let twice = kappa_block_exchange(&once.word, 2, n, big_n, &bt, &m).unwrap();
        assert_eq!(twice.word.0, w);
        assert_eq!(once.word.len(), w.len());
        let back: Vec<i64> = once.delta_f.iter().zip(&twice.delta_f).map(|(a, b)| a + b).collect();
        assert_eq!(back, vec![0]);
        assert!((once.delta_r + twice.delta_r).abs() <= 1e-12);
    }
}

#[test]
fn surgery_input_errors() {
    let m = refs::golden_mean();
    let bt = m.ts().bridge_words().unwrap();
    let w = vec![0; 20];
    assert!(matches!(kappa_block_exchange(&w, 0, 1, 2, &bt, &m), Err(Error::InsufficientWindow { .. })));
    assert!(matches!(kappa_block_exchange(&w, 1, 0, 2, &bt, &m), Err(Error::InvalidParameter(_))));
    assert!(matches!(kappa_block_exchange(&[1, 1, 0], 1, 1, 1, &bt, &m), Err(Error::InvalidWord(_))));
    let b = blm(&m, 0.0);
    assert!(vartheta_suffix_exchange(&w, 0, &[0, 1], &bt, &b).is_err());
    let ok = vartheta_suffix_exchange(&w, 5, &[1, 0, 1], &bt, &b).unwrap();
    assert!(m.ts().is_admissible(&ok.word).unwrap());
    assert!(ok.ratio_bound_ok);
    assert!(matches!(
        cocycles_rf(&[0, 1, 0, 0], &[1, 0, 1, 1], 1, 1, &m),
        Err(Error::NotEquivalent(_))
    ));
}

#[test]
fn lambda_n_membership_thresholds() {
    let m = refs::f2_unit();
    let xi = [1f64.tanh()];
    let mut hits = 0;
    for seed in 0..200 {
        let mut st = gibbs_state(&m, 1.0, seed);
        assert!(lambda_n_membership(&mut st, 2, 8, 1e6, &xi, &m).unwrap());
        if lambda_n_membership(&mut st, 2, 8, 1e-6, &xi, &m).unwrap() {
            hits += 1;
        }
    }
    // block ratios over 8 symbols take values in {k/4 - 1}, never tanh 1
    assert_eq!(hits, 0);
    let mut st = gibbs_state(&m, 1.0, 0);
    assert!(lambda_n_membership(&mut st, 1, 0, 0.1, &xi, &m).is_err());
}
