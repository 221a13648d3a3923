//! Ready-made systems: the three-bank example, the ten-bank core-periphery
//! networks, the two-core block spec and the mixtures used by the studies.

use crate::convergence::{FullReducedConfig, ScalingConfig, StudyType, STUDY_MAX_SHIFT};
use crate::feedback::FeedbackSpec;
use crate::mean_field::{InitialDensity, MFConfig, MixtureSpec, TypeSpec};
use crate::network::{BlockSpec, LiabilityNetwork, NoiseDistribution, PeripheryGroup};
use crate::piecewise::Piecewise;

/// Three banks owing 2 to each other and 1 to society, T = 1.
pub fn three_bank() -> LiabilityNetwork {
    serde_json::from_str(include_str!("../fixtures/three_bank.json")).expect("bundled fixture parses")
}

/// Ten-bank core-periphery network with small periphery-periphery rates.
pub fn core_periphery_full() -> LiabilityNetwork {
    serde_json::from_str(include_str!("../fixtures/coreperiphery_full.json")).expect("bundled fixture parses")
}

/// The same network with the periphery-periphery block zeroed.
pub fn core_periphery_reduced() -> LiabilityNetwork {
    serde_json::from_str(include_str!("../fixtures/coreperiphery_reduced.json")).expect("bundled fixture parses")
}

/// Asset parameters of the three-bank example: dx = x(dt + ½dW), pairwise
/// correlation ½, x(0) = 2/e, recovery 0.1.
pub struct ThreeBankParams {
    pub x0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub r2: f64,
}

pub const THREE_BANK: ThreeBankParams =
    ThreeBankParams { x0: 2.0 / std::f64::consts::E, mu: 1.0, sigma: 0.5, rho: std::f64::consts::FRAC_1_SQRT_2, r2: 0.1 };

/// Two core banks with two periphery groups of four, whose type-level
/// exposure matrix is [[0,15,0,12],[45,0,12,4],[20,8,0,0],[16,12,0,0]].
pub fn two_core_block() -> BlockSpec {
    BlockSpec {
        core: vec![vec![0.0, 15.0], vec![45.0, 0.0]],
        groups: vec![
            PeripheryGroup { size: 4, core_to_group: vec![0.0, 3.0], group_to_core: vec![5.0, 2.0] },
            PeripheryGroup { size: 4, core_to_group: vec![3.0, 1.0], group_to_core: vec![4.0, 3.0] },
        ],
        societal_rate: 1.0,
    }
}

/// The type-level exposure display of [`two_core_block`].
pub fn two_core_exposures() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 15.0, 0.0, 12.0],
        vec![45.0, 0.0, 12.0, 4.0],
        vec![20.0, 8.0, 0.0, 0.0],
        vec![16.0, 12.0, 0.0, 0.0],
    ]
}

/// Four-type mixture in which core 1 and periphery 2 start near the
/// boundary with negative drift and weak balance sheets, while core 2 and
/// periphery 1 start far away with positive drift. Core 1 and periphery 2 are
/// mutually exposed strongly enough to fail the no-jump condition.
pub fn heat_plot_spec() -> MixtureSpec {
    let near = |name: &str, weight: f64| TypeSpec {
        name: name.into(),
        weight,
        u: vec![],
        v: vec![],
        drift: Some(Piecewise::Constant(-0.4)),
        sigma: Piecewise::Constant(0.3),
        lambda: Some(2.0),
        initial: InitialDensity::Gamma { shape: 3.0, scale: 1.0 / 3.0 },
    };
    let far = |name: &str, weight: f64, lambda: f64| TypeSpec {
        name: name.into(),
        weight,
        u: vec![],
        v: vec![],
        drift: Some(Piecewise::Constant(0.3)),
        sigma: Piecewise::Constant(0.3),
        lambda: Some(lambda),
        initial: InitialDensity::Gaussian { mean: 3.0, sd: 0.3 },
    };
    MixtureSpec {
        horizon: 1.0,
        types: vec![near("core1", 0.1), far("core2", 0.1, 20.0), far("periphery1", 0.4, 2.0), near("periphery2", 0.4)],
        exposures: Some(two_core_exposures()),
        feedback: FeedbackSpec::eisenberg_noe(1.0),
        r2: 0.1,
        rho: 0.5,
        theta: NoiseDistribution::DiracZero,
        theta_nodes: 1,
    }
}

/// Exposure scale of [`weak_feedback_spec`]; keeps the smallness margin near 0.4.
pub const WEAK_SCALE: f64 = 0.02;

/// Four-type mixture with the display exposures scaled by [`WEAK_SCALE`].
pub fn weak_feedback_spec() -> MixtureSpec {
    let scale = WEAK_SCALE;
    let ty = |name: &str, weight: f64, mean: f64| TypeSpec {
        name: name.into(),
        weight,
        u: vec![],
        v: vec![],
        drift: None,
        sigma: Piecewise::Constant(0.4),
        lambda: Some(2.0),
        initial: InitialDensity::Gamma { shape: 3.0, scale: mean / 3.0 },
    };
    MixtureSpec {
        horizon: 1.0,
        types: vec![ty("core1", 0.1, 0.8), ty("core2", 0.1, 1.0), ty("periphery1", 0.4, 1.2), ty("periphery2", 0.4, 0.9)],
        exposures: Some(two_core_exposures().into_iter().map(|r| r.into_iter().map(|x| x * scale).collect()).collect()),
        feedback: FeedbackSpec::eisenberg_noe(1.0),
        r2: 0.1,
        rho: 0.0,
        theta: NoiseDistribution::DiracZero,
        theta_nodes: 1,
    }
}

/// One isolated bank type replicated m times: no interbank rates at all.
pub fn feedback_free_study() -> ScalingConfig {
    ScalingConfig {
        block: BlockSpec { core: vec![vec![0.0]], groups: vec![], societal_rate: 1.0 },
        types: vec![StudyType { sigma: Piecewise::Constant(0.4), initial: InitialDensity::Gamma { shape: 3.0, scale: 1.0 / 3.0 } }],
        horizon: 1.0,
        rho: 0.0,
        r2: 0.0,
        feedback: FeedbackSpec::eisenberg_noe(1.0),
        m_list: vec![4, 16, 64],
        runs: 20,
        seed: 0,
        common_seed: 0,
        mf: MFConfig::default(),
        max_shift: STUDY_MAX_SHIFT,
    }
}

/// The two-core block with every interbank rate scaled by 0.05 and a
/// societal rate of 10, so all net liabilities are positive and the limit
/// passes the smallness condition. Correlated through a common factor.
pub fn weak_feedback_study() -> ScalingConfig {
    let mut block = two_core_block();
    let scale = |x: &mut f64| *x *= 0.05;
    block.core.iter_mut().flatten().for_each(scale);
    for g in &mut block.groups {
        g.core_to_group.iter_mut().chain(g.group_to_core.iter_mut()).for_each(scale);
    }
    block.societal_rate = 10.0;
    let ty = StudyType { sigma: Piecewise::Constant(0.4), initial: InitialDensity::Gamma { shape: 3.0, scale: 1.0 / 3.0 } };
    ScalingConfig { block, types: vec![ty; 4], rho: 0.3, r2: 0.1, ..feedback_free_study() }
}

/// The core-periphery network against its reduced version: dx = x(dt + ½dW)
/// with pairwise correlation ½, recovery 0.1, every bank starting a log
/// distance of 0.25 from default in the reduced network.
pub fn full_vs_reduced_config() -> FullReducedConfig {
    FullReducedConfig {
        full: core_periphery_full(),
        reduced: core_periphery_reduced(),
        mu: Piecewise::Constant(1.0),
        sigma: Piecewise::Constant(0.5),
        rho: std::f64::consts::FRAC_1_SQRT_2,
        r2: 0.1,
        d0: 0.25,
        dt: 1.0 / 2000.0,
        runs: 100,
        seed: 0,
        common_seed: 0,
        feedback: FeedbackSpec::eisenberg_noe(1.0),
    }
}
