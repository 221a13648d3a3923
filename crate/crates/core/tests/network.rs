use contagion::network::{
    apply_noise, build_block_matrix, rank_factorize, scale_network, BlockSpec, LiabilityNetwork, NoiseDistribution,
    NoiseSpec, PeripheryGroup, TypeAtlas, DEFAULT_REL_TOL,
};
use contagion::scenarios;
use proptest::prelude::*;

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn block_matrix_lays_out_core_periphery_blocks() {
    let net = build_block_matrix(&scenarios::two_core_block(), 1.0).unwrap();
    assert_eq!(net.n(), 10);
    let mut expected = vec![vec![0.0; 10]; 10];
    expected[0][1] = 15.0;
    expected[1][0] = 45.0;
    for p in 2..6 {
        expected[0][p] = 0.0;
        expected[1][p] = 3.0;
        expected[p][0] = 5.0;
        expected[p][1] = 2.0;
    }
    for p in 6..10 {
        expected[0][p] = 3.0;
        expected[1][p] = 1.0;
        expected[p][0] = 4.0;
        expected[p][1] = 3.0;
    }
    assert_eq!(net.rows(), expected);
    assert_eq!(net.societal(), &[1.0; 10]);

    // Same zero pattern as the bundled reduced network: periphery rows only
    // owe the two core banks.
    let fixture = scenarios::core_periphery_reduced();
    for i in 2..10 {
        for j in 2..10 {
            assert_eq!(fixture.rate(i, j), 0.0);
            assert_eq!(net.rate(i, j), 0.0);
        }
    }
}

#[test]
fn block_matrix_without_groups_is_the_core() {
    let spec = BlockSpec { core: vec![vec![0.0, 1.5], vec![2.5, 0.0]], groups: vec![], societal_rate: 0.5 };
    let net = build_block_matrix(&spec, 2.0).unwrap();
    assert_eq!(net.rows(), spec.core);
    let zero = BlockSpec {
        core: vec![vec![0.0; 2]; 2],
        groups: vec![PeripheryGroup { size: 3, core_to_group: vec![0.0; 2], group_to_core: vec![0.0; 2] }],
        societal_rate: 0.0,
    };
    let net = build_block_matrix(&zero, 1.0).unwrap();
    assert!(net.rows().iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn scaling_by_one_is_identity() {
    let base = scenarios::core_periphery_reduced();
    assert_eq!(scale_network(&base, 2, 1).unwrap(), base);
}

#[test]
fn scaling_by_two_halves_tiled_entries_and_keeps_rank() {
    let base = scenarios::core_periphery_reduced();
    let big = scale_network(&base, 2, 2).unwrap();
    assert_eq!(big.n(), 20);
    // Copy-major order: core copies (0,1),(0,1) then periphery copies.
    let origin: Vec<usize> = [0, 1, 0, 1].into_iter().chain((2..10).chain(2..10)).collect();
    for i in 0..20 {
        for j in 0..20 {
            assert_eq!(big.rate(i, j), 0.5 * base.rate(origin[i], origin[j]));
        }
        assert_eq!(big.societal()[i], base.societal()[origin[i]]);
    }
    let k0 = rank_factorize(&base, DEFAULT_REL_TOL).unwrap().k;
    let k2 = rank_factorize(&big, DEFAULT_REL_TOL).unwrap().k;
    assert_eq!(k0, k2);
}

#[test]
fn dirac_noise_is_identity() {
    let base = scenarios::core_periphery_reduced();
    let noisy = apply_noise(&base, &NoiseSpec::none()).unwrap();
    assert_eq!(noisy.network, base);
    assert!(noisy.epsilons.iter().chain(&noisy.deltas).all(|&e| e == 0.0));
}

#[test]
fn unit_point_mass_noise_quadruples_entries() {
    let base = scenarios::three_bank();
    let spec = NoiseSpec { distribution: NoiseDistribution::Discrete { points: vec![1.0], weights: vec![1.0] }, seed: 11 };
    let noisy = apply_noise(&base, &spec).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(noisy.network.rate(i, j), 4.0 * base.rate(i, j));
        }
    }
}

#[test]
fn uniform_noise_keeps_sign_pattern() {
    let base = scenarios::core_periphery_reduced();
    let spec = NoiseSpec { distribution: NoiseDistribution::Uniform { half_width: 0.3 }, seed: 7 };
    let noisy = apply_noise(&base, &spec).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let v = noisy.network.rate(i, j);
            assert!(v >= 0.0);
            assert_eq!(v == 0.0, base.rate(i, j) == 0.0);
            let factor = (1.0 + noisy.epsilons[i]) * (1.0 + noisy.deltas[j]);
            assert_close(v, factor * base.rate(i, j), 1e-12);
        }
    }
    assert!(noisy.epsilons.iter().chain(&noisy.deltas).all(|e| e.abs() <= 0.3));
}

#[test]
fn noise_is_unbiased_on_average() {
    let base = scenarios::three_bank();
    let spec = |seed| NoiseSpec { distribution: NoiseDistribution::Uniform { half_width: 0.5 }, seed };
    let runs = 10_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for seed in 0..runs {
        let v = apply_noise(&base, &spec(seed)).unwrap().network.rate(0, 1);
        sum += v;
        sum_sq += v * v;
    }
    let n = runs as f64;
    let mean = sum / n;
    let se = ((sum_sq / n - mean * mean) / n).sqrt();
    assert!((mean - base.rate(0, 1)).abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn three_bank_net_liability_is_one() {
    let net = scenarios::three_bank();
    for i in 0..3 {
        assert_eq!(net.net_liability(i).unwrap(), 1.0);
    }
    assert!(net.net_liability(3).is_err());
}

#[test]
fn symmetric_network_without_societal_debt_nets_to_zero() {
    let rows = vec![vec![0.0, 1.0, 2.5], vec![1.0, 0.0, 0.7], vec![2.5, 0.7, 0.0]];
    let net = LiabilityNetwork::from_rows(&rows, vec![0.0; 3], 2.0).unwrap();
    for i in 0..3 {
        assert_close(net.net_liability(i).unwrap(), 0.0, 1e-12);
    }
}

#[test]
fn core_bank_net_liability_matches_hand_sum() {
    let net = scenarios::core_periphery_reduced();
    let owed = 1.0 + 15.01 + 3.43 + 2.87 + 2.87 + 2.80;
    let owned = 45.35 + 4.54 + 5.90 + 4.67 + 4.40 + 3.64 + 3.41 + 3.25 + 4.31;
    assert_close(net.net_liability(0).unwrap(), owed - owned, 1e-12);
}

#[test]
fn reduced_network_has_rank_four() {
    let fac = rank_factorize(&scenarios::core_periphery_reduced(), DEFAULT_REL_TOL).unwrap();
    assert_eq!(fac.k, 4);
    let full = rank_factorize(&scenarios::core_periphery_full(), DEFAULT_REL_TOL).unwrap();
    assert!(full.k > 4);
}

#[test]
fn zero_network_has_rank_zero() {
    let net = LiabilityNetwork::from_rows(&vec![vec![0.0; 4]; 4], vec![1.0; 4], 1.0).unwrap();
    let fac = rank_factorize(&net, DEFAULT_REL_TOL).unwrap();
    assert_eq!(fac.k, 0);
    assert!(fac.u.is_empty() && fac.v.is_empty());
}

#[test]
fn constructed_rank_two_network_is_recovered() {
    // Bipartite debts A -> B and B -> A with rank-one blocks give rank two
    // with a zero diagonal.
    let a = [1.0, 2.0, 0.5];
    let b = [0.3, 1.1, 2.0];
    let c = [1.5, 0.2, 0.9];
    let d = [0.4, 0.8, 1.3];
    let mut rows = vec![vec![0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            rows[i][3 + j] = a[i] * b[j];
            rows[3 + i][j] = c[i] * d[j];
        }
    }
    let net = LiabilityNetwork::from_rows(&rows, vec![1.0; 6], 1.0).unwrap();
    let fac = rank_factorize(&net, DEFAULT_REL_TOL).unwrap();
    assert_eq!(fac.k, 2);
    assert!(fac.max_residual(&net) <= 1e-10);
    for l in 0..fac.k {
        let first = (0..6).map(|i| fac.u(i, l)).find(|x| x.abs() > 1e-12).unwrap();
        assert!(first > 0.0, "sign convention");
    }
}

#[test]
fn effective_exposures_match_display() {
    let atlas = TypeAtlas::from_block(&scenarios::two_core_block(), DEFAULT_REL_TOL).unwrap();
    let got = atlas.effective_exposures(10);
    for (gr, er) in got.iter().zip(scenarios::two_core_exposures()) {
        for (g, e) in gr.iter().zip(er) {
            assert_close(*g, e, 1e-8);
        }
    }
}

#[test]
fn effective_exposures_of_zero_network_vanish() {
    let spec = BlockSpec {
        core: vec![vec![0.0; 2]; 2],
        groups: vec![PeripheryGroup { size: 2, core_to_group: vec![0.0; 2], group_to_core: vec![0.0; 2] }],
        societal_rate: 1.0,
    };
    let atlas = TypeAtlas::from_block(&spec, DEFAULT_REL_TOL).unwrap();
    assert!(atlas.effective_exposures(spec.m0()).iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn empty_periphery_leaves_core_exposures() {
    let mut spec = scenarios::two_core_block();
    spec.groups.iter_mut().for_each(|g| g.size = 0);
    let atlas = TypeAtlas::from_block(&spec, DEFAULT_REL_TOL).unwrap();
    let got = atlas.effective_exposures(spec.m0());
    assert_close(got[0][1], 15.0, 1e-8);
    assert_close(got[1][0], 45.0, 1e-8);
    assert_close(got[0][0], 0.0, 1e-8);
    assert_close(got[1][1], 0.0, 1e-8);
    assert!(got[2..].iter().flatten().chain(got.iter().flat_map(|r| &r[2..])).all(|&x| x == 0.0));
}

#[test]
fn network_json_round_trips() {
    let net = scenarios::core_periphery_full();
    let text = serde_json::to_string(&net).unwrap();
    let back: LiabilityNetwork = serde_json::from_str(&text).unwrap();
    assert_eq!(back, net);
    let bad = r#"{"n":2,"T":1,"rates":[[0,1],[1,0]],"societal":[1,1],"extra":0}"#;
    assert!(serde_json::from_str::<LiabilityNetwork>(bad).is_err());
}

fn block_strategy() -> impl Strategy<Value = BlockSpec> {
    (1usize..=3, 0usize..=2).prop_flat_map(|(mc, ng)| {
        let core = proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, mc), mc);
        let group = (1usize..=4, proptest::collection::vec(0.0f64..5.0, mc), proptest::collection::vec(0.0f64..5.0, mc))
            .prop_map(|(size, core_to_group, group_to_core)| PeripheryGroup { size, core_to_group, group_to_core });
        (core, proptest::collection::vec(group, ng)).prop_map(|(mut core, groups)| {
            for (i, row) in core.iter_mut().enumerate() {
                row[i] = 0.0;
            }
            BlockSpec { core, groups, societal_rate: 1.0 }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_is_preserved_by_scaling(spec in block_strategy(), m in 1usize..=4) {
        let base = build_block_matrix(&spec, 1.0).unwrap();
        let big = scale_network(&base, spec.core_count(), m).unwrap();
        let k0 = rank_factorize(&base, 1e-8).unwrap().k;
        let k = rank_factorize(&big, 1e-8).unwrap().k;
        prop_assert_eq!(k0, k);
    }

    #[test]
    fn scaling_preserves_row_sums(spec in block_strategy(), m in 1usize..=4) {
        let base = build_block_matrix(&spec, 1.0).unwrap();
        let big = scale_network(&base, spec.core_count(), m).unwrap();
        let origins = contagion::network::scaled_origins(base.n(), spec.core_count(), m);
        for (i, &o) in origins.iter().enumerate() {
            let row: f64 = (0..big.n()).map(|j| big.rate(i, j)).sum();
            let orig: f64 = (0..base.n()).map(|j| base.rate(o, j)).sum();
            prop_assert!((row - orig).abs() <= 1e-12 * orig.max(1.0));
        }
    }

    #[test]
    fn factorization_reconstructs_and_is_nonnegative(spec in block_strategy()) {
        let net = build_block_matrix(&spec, 1.0).unwrap();
        let fac = rank_factorize(&net, DEFAULT_REL_TOL).unwrap();
        let max_entry = net.rows().iter().flatten().fold(0.0f64, |m, x| m.max(*x)) * net.n() as f64;
        prop_assert!(fac.max_residual(&net) <= 1e-9 * max_entry.max(1.0));
        for i in 0..net.n() {
            for j in 0..net.n() {
                prop_assert!(fac.reconstruct(i, j) >= -1e-9 * max_entry.max(1.0));
            }
        }
    }

    #[test]
    fn noise_is_deterministic(seed in any::<u64>(), hw in 0.0f64..1.0) {
        let base = scenarios::core_periphery_reduced();
        let spec = NoiseSpec { distribution: NoiseDistribution::Uniform { half_width: hw }, seed };
        let a = apply_noise(&base, &spec).unwrap();
        let b = apply_noise(&base, &spec).unwrap();
        prop_assert_eq!(a.network, b.network);
        prop_assert_eq!(a.epsilons, b.epsilons);
    }
}
