use contagion::feedback::{Decay, FeedbackMap, FeedbackSpec, Shift};
use contagion::mean_field::{
    check_initial_decay, check_no_jump, check_smallness, conservation_error, init_density, picard_solve,
    resolve_mf_cascade, solve, step, theta_mf, AssetDensity, DensityField, InitialDensity, InitialLaw, MFConfig,
    MixtureSpec, Model, SubDensity, TypeSpec,
};
use contagion::network::NoiseDistribution;
use contagion::piecewise::Piecewise;
use contagion::rng::BrownianPath;
use contagion::scenarios;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn one_type(initial: InitialDensity, sigma: f64, exposure: f64, feedback: FeedbackSpec) -> MixtureSpec {
    MixtureSpec {
        horizon: 1.0,
        types: vec![TypeSpec {
            name: "a".into(),
            weight: 1.0,
            u: vec![],
            v: vec![],
            drift: None,
            sigma: Piecewise::Constant(sigma),
            lambda: Some(1.0),
            initial,
        }],
        exposures: Some(vec![vec![exposure]]),
        feedback,
        r2: 0.0,
        rho: 0.0,
        theta: NoiseDistribution::DiracZero,
        theta_nodes: 1,
    }
}

/// Unit-Lipschitz feedback with constant weight, so checks reduce to
/// exposure times density.
fn unit_linear() -> FeedbackSpec {
    FeedbackSpec { map: FeedbackMap::Linear { slope: 1.0 }, decay: Decay::Constant { value: 1.0 } }
}

/// P(x + b·s + σW_s hits 0 by t).
fn first_passage(x: f64, b: f64, sigma: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = Normal::standard();
    let s = sigma * t.sqrt();
    n.cdf((-x - b * t) / s) + (-2.0 * b * x / (sigma * sigma)).exp() * n.cdf((-x + b * t) / s)
}

/// Loss of a population with initial density `pdf` on (0, top), by Simpson's rule.
fn mixture_first_passage(pdf: impl Fn(f64) -> f64, top: f64, b: f64, sigma: f64, t: f64) -> f64 {
    let n = 20_000;
    let h = top / n as f64;
    let f = |x: f64| pdf(x) * first_passage(x, b, sigma, t);
    let mut acc = f(0.0) + f(top);
    for j in 1..n {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * h);
    }
    acc * h / 3.0
}

fn gamma_law() -> InitialDensity {
    InitialDensity::Gamma { shape: 3.0, scale: 1.0 / 3.0 }
}

fn analytic_error(dx: f64) -> (f64, f64) {
    let sigma = 0.4;
    let spec = one_type(gamma_law(), sigma, 0.0, FeedbackSpec::eisenberg_noe(1.0));
    let cfg = MFConfig { dx, ..MFConfig::default() };
    let out = solve(&spec, &cfg, None, 0).unwrap();
    let law = InitialLaw::new(&gamma_law(), None, 1.0).unwrap();
    let b = -0.5 * sigma * sigma;
    let mut worst = 0.0f64;
    let mut terminal = 0.0;
    let stride = out.times.len() / 10;
    for k in (stride..out.times.len()).step_by(stride) {
        let exact = mixture_first_passage(|x| law.pdf(x), 12.0, b, sigma, out.times[k]);
        worst = worst.max((out.losses[0][k] - exact).abs());
        terminal = exact;
    }
    (worst, terminal)
}

#[test]
fn feedback_free_loss_matches_first_passage_law() {
    let (err, terminal) = analytic_error(0.01);
    assert!(err <= 0.02 * terminal, "sup error {err} against terminal loss {terminal}");
    let (coarse, _) = analytic_error(0.04);
    assert!(coarse > err, "refinement should reduce the error: {coarse} vs {err}");
}

#[test]
fn prescribed_common_trend_shifts_the_drift() {
    // A linear common path B₀(t) = a·t adds ρσa to the drift and leaves
    // √(1 − ρ²)σ of volatility.
    let (sigma, rho, a) = (0.4, 0.5, -1.0);
    let mut spec = one_type(gamma_law(), sigma, 0.0, FeedbackSpec::eisenberg_noe(1.0));
    spec.rho = rho;
    let cfg = MFConfig::default();
    let probe = Model::new(&spec, &cfg, None).unwrap();
    let path = BrownianPath { dt: probe.dt, values: (0..=probe.steps).map(|k| a * probe.time(k)).collect() };
    let out = solve(&spec, &cfg, Some(&path), 0).unwrap();
    let law = InitialLaw::new(&gamma_law(), None, 1.0).unwrap();
    let b = -0.5 * sigma * sigma + rho * sigma * a;
    let vol = sigma * (1.0 - rho * rho).sqrt();
    let last = out.times.len() - 1;
    let exact = mixture_first_passage(|x| law.pdf(x), 12.0, b, vol, 1.0);
    assert!((out.losses[0][last] - exact).abs() <= 0.02 * exact, "{} vs {exact}", out.losses[0][last]);
}

#[test]
fn uniform_assets_map_to_exponential_distance_density() {
    let boundary = 1.5 * (-0.2f64).exp();
    let asset = AssetDensity::Uniform { lo: boundary, hi: 2.0 * boundary };
    let dx = 1e-3;
    let v = init_density(&asset, 1.5, &Piecewise::Constant(0.2), 1.0, dx, 1000).unwrap();
    for (j, val) in v.iter().enumerate().skip(1) {
        let x = j as f64 * dx;
        let want = if x < 2f64.ln() { x.exp() } else { 0.0 };
        assert!((val - want).abs() < 1e-12, "x = {x}: {val} vs {want}");
    }
    // Boundary of the distance is the boundary of the assets.
    assert!((v[1] - 1.0).abs() < 2e-3);
}

#[test]
fn lognormal_assets_give_unit_mass() {
    let boundary = 2.0;
    let asset = AssetDensity::LogNormal { shift: boundary, log_mean: 0.0, log_sd: 0.5 };
    let dx = 1e-3;
    let n = 10_000;
    let v = init_density(&asset, 2.0, &Piecewise::Constant(0.0), 1.0, dx, n).unwrap();
    let mass: f64 = v.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum();
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    assert!(v.iter().all(|x| *x >= 0.0));
    let below = AssetDensity::LogNormal { shift: 1.9, log_mean: 0.0, log_sd: 0.5 };
    assert!(init_density(&below, 2.0, &Piecewise::Constant(0.0), 1.0, dx, n).is_err());
}

#[test]
fn theta_matches_hand_values() {
    let log1p = Shift::Log1p { scale: 0.9 };
    assert_eq!(theta_mf(&log1p, 0.0, 0.4, 0.0), 0.0);
    assert!((theta_mf(&log1p, 0.0, 0.4, 2.0) - 1.72f64.ln()).abs() < 1e-15);
    assert_eq!(theta_mf(&Shift::Linear { slope: 2.5 }, 0.3, 0.4, 2.0), 2.5 * 0.4 * 2.0);
}

#[test]
fn smallness_matches_hand_products() {
    let zero = one_type(gamma_law(), 0.3, 0.0, unit_linear());
    let c = check_smallness(&zero).unwrap();
    assert!(c.holds && c.margin == 1.0);

    let quarter = one_type(InitialDensity::Uniform { lo: 0.0, hi: 4.0 }, 0.3, 2.0, unit_linear());
    let c = check_smallness(&quarter).unwrap();
    assert!(c.holds);
    assert!((c.worst - 0.5).abs() < 1e-9 && (c.margin - 0.5).abs() < 1e-9);

    let tall = one_type(InitialDensity::Uniform { lo: 0.0, hi: 1.0 / 0.6 }, 0.3, 2.0, unit_linear());
    let c = check_smallness(&tall).unwrap();
    assert!(!c.holds);
    assert!((c.worst - 1.2).abs() < 1e-9);
}

#[test]
fn no_jump_check_matches_hand_products() {
    let cfg = MFConfig::default();
    for (exposure, want, holds) in [(2.0, 0.5, true), (4.0, 1.0, false)] {
        // Flat at 1/4 up to x = 3.5, then linear to 0 at 4.5: unit mass
        // with kinks on grid nodes.
        let mut values = vec![1.0; 8];
        values.extend([0.5, 0.0]);
        let flat = InitialDensity::Grid { dx: 0.5, values };
        let spec = one_type(flat, 0.3, exposure, unit_linear());
        let model = Model::new(&spec, &cfg, None).unwrap();
        let field = DensityField::initial(&model);
        let c = check_no_jump(&model, &field, cfg.no_jump_window);
        assert!((c.worst - want).abs() < 1e-9, "{}", c.worst);
        assert_eq!(c.holds, holds);
    }
    let spec = one_type(InitialDensity::Gamma { shape: 4.0, scale: 0.5 }, 0.3, 2.0, unit_linear());
    let model = Model::new(&spec, &cfg, None).unwrap();
    let c = check_no_jump(&model, &DensityField::initial(&model), cfg.no_jump_window);
    assert!(c.holds && c.margin > 0.99, "{c:?}");
}

#[test]
fn decay_envelope_fits() {
    let dx = 1e-3;
    let xs: Vec<f64> = (0..=4000).map(|j| j as f64 * dx).collect();
    let linear: Vec<f64> = xs.iter().map(|&x| 0.4 * x.min(1.0)).collect();
    assert!(check_initial_decay(&linear, dx, 1.0, 1.0).holds);

    let flat: Vec<f64> = xs.iter().map(|_| 0.25).collect();
    for beta in [0.25, 0.5, 1.0] {
        assert!(!check_initial_decay(&flat, dx, beta, 1.0).holds);
    }

    let c = 0.7;
    let root: Vec<f64> = xs.iter().map(|&x| c * x.sqrt()).collect();
    let fit = check_initial_decay(&root, dx, 0.5, 1.0);
    assert!(fit.holds);
    assert!((fit.c_star - c).abs() < 1e-9, "{}", fit.c_star);
    assert!(!check_initial_decay(&root, dx, 1.0, 1.0).c_star.is_nan());
}

#[test]
fn densities_vanishing_at_the_boundary_give_no_cascade() {
    let spec = scenarios::weak_feedback_spec();
    let cfg = MFConfig::default();
    let model = Model::new(&spec, &cfg, None).unwrap();
    let field = DensityField::initial(&model);
    let c = resolve_mf_cascade(&model, &field, &[0.0; 4]).unwrap();
    assert!(c.no_jump);
    assert!(c.jumps.iter().all(|x| x.abs() < 1e-6), "{:?}", c.jumps);
    assert!(check_smallness(&spec).unwrap().margin >= 0.3);
}

#[test]
fn mutually_exposed_boundary_mass_cascades() {
    // Core 1 and periphery 2 start with mass on the boundary; their mutual
    // exposures 12 and 16 exceed the reciprocal boundary densities.
    let mut spec = scenarios::heat_plot_spec();
    for l in [0, 3] {
        spec.types[l].initial = InitialDensity::Uniform { lo: 0.0, hi: 0.5 };
    }
    let cfg = MFConfig::default();
    let model = Model::new(&spec, &cfg, None).unwrap();
    let field = DensityField::initial(&model);
    let c = resolve_mf_cascade(&model, &field, &[0.0; 4]).unwrap();
    assert!(!c.no_jump);
    let killed = field.kills(&model, &c.jumps);
    assert!(killed[0] > 0.5 && killed[3] > 0.5, "{killed:?}");
    assert!(killed[1] < 1e-9 && killed[2] < 1e-9, "{killed:?}");
    // Iterates fall as the shock shrinks, and the limit is a fixed point.
    for w in c.trace.windows(2) {
        for (a, b) in w[1].jumps.iter().zip(&w[0].jumps) {
            assert!(*a <= b + 1e-12);
        }
    }
    assert!(c.residual <= cfg.cascade_tol.max(1e-9), "{}", c.residual);
}

#[test]
fn zero_density_stays_zero() {
    let spec = one_type(gamma_law(), 0.3, 1.0, FeedbackSpec::eisenberg_noe(1.0));
    let model = Model::new(&spec, &MFConfig::default(), None).unwrap();
    let mut field = DensityField::from_subs(&model, vec![SubDensity::zero(&model.grid)]);
    let report = step(&model, &mut field, 0.01).unwrap();
    assert_eq!(report.increments, vec![0.0]);
    assert!(field.subs[0].values.iter().all(|&v| v == 0.0));
}

#[test]
fn one_cell_transport_translates_the_density() {
    let spec = one_type(gamma_law(), 0.3, 1.0, FeedbackSpec::eisenberg_noe(1.0));
    let model = Model::new(&spec, &MFConfig::default(), None).unwrap();
    let dx = model.grid.dz;
    let field = DensityField::initial(&model);
    let before: Vec<f64> = (0..300).map(|j| field.density(&model, 0, j as f64 * dx)).collect();

    let mut away = field.clone();
    assert_eq!(away.transport(&model, 0, dx), 0.0);
    for j in 0..299 {
        assert!((away.density(&model, 0, (j + 1) as f64 * dx) - before[j]).abs() < 1e-12);
    }
    assert!(conservation_error(&model, &away) < 1e-14);

    let mut toward = field.clone();
    let lost = toward.transport(&model, 0, -dx);
    assert!((lost - 0.5 * dx * (before[0] + before[1])).abs() < 1e-14);
    for j in 1..299 {
        assert!((toward.density(&model, 0, j as f64 * dx) - before[j + 1]).abs() < 1e-12);
    }
    assert!(conservation_error(&model, &toward) < 1e-14);
}

#[test]
fn loss_reads_off_missing_mass() {
    let spec = one_type(gamma_law(), 0.3, 1.0, FeedbackSpec::eisenberg_noe(1.0));
    let model = Model::new(&spec, &MFConfig::default(), None).unwrap();
    let field = DensityField::initial(&model);
    assert!(field.losses(&model)[0].abs() < 1e-15);
    assert!((field.masses(&model)[0] - 1.0).abs() < 1e-12);

    let mut half = field.subs[0].clone();
    half.values.iter_mut().for_each(|v| *v *= 0.5);
    half.vb *= 0.5;
    assert!((1.0 - half.mass(&model.grid) - 0.5).abs() < 1e-12);

    let mut gone = field.clone();
    let end = model.grid.end();
    gone.transport(&model, 0, -(end + 1.0));
    assert!((gone.losses(&model)[0] - 1.0).abs() < 1e-12);
}

#[test]
fn zero_jump_leaves_field_unchanged() {
    let spec = scenarios::weak_feedback_spec();
    let model = Model::new(&spec, &MFConfig::default(), None).unwrap();
    let field = DensityField::initial(&model);
    let mut same = field.clone();
    same.apply_jump(&model, &[0.0; 4]);
    assert_eq!(same.subs, field.subs);
}

#[test]
fn full_recovery_equals_zero_exposure_run() {
    let mut spec = scenarios::weak_feedback_spec();
    spec.rho = 0.3;
    spec.r2 = 1.0;
    let mut free = spec.clone();
    free.exposures = Some(vec![vec![0.0; 4]; 4]);
    let cfg = MFConfig::default();
    let a = solve(&spec, &cfg, None, 5).unwrap();
    let b = solve(&free, &cfg, None, 5).unwrap();
    assert_eq!(a.losses, b.losses);
}

#[test]
fn losses_never_decrease_and_mass_is_conserved() {
    let spec = scenarios::heat_plot_spec();
    let cfg = MFConfig::default();
    let out = solve(&spec, &cfg, None, 0).unwrap();
    for path in &out.losses {
        assert!(path.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }
    for j in &out.jumps {
        assert!(j.loss_jumps.iter().all(|x| *x >= 0.0) && j.loss_jumps.iter().any(|x| *x > 0.0));
    }
    assert!(out.max_conservation_error <= 1e-10);
}

#[test]
fn picard_without_exposures_is_immediate() {
    let mut spec = scenarios::weak_feedback_spec();
    spec.exposures = Some(vec![vec![0.0; 4]; 4]);
    let cfg = MFConfig::default();
    let p = picard_solve(&spec, &cfg).unwrap();
    assert!(p.converged);
    assert_eq!(p.residuals.len(), 2);
    assert_eq!(p.residuals[1], 0.0);
    let s = solve(&spec, &cfg, None, 0).unwrap();
    for (a, b) in p.losses.iter().zip(&s.losses) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}

#[test]
fn picard_contracts_and_matches_the_stepper() {
    let spec = scenarios::weak_feedback_spec();
    let cfg = MFConfig::default();
    let p = picard_solve(&spec, &cfg).unwrap();
    assert!(p.converged);
    let r = &p.residuals;
    assert!(r.len() >= 4);
    let ratios: Vec<f64> = r.windows(2).skip(1).map(|w| w[1] / w[0]).collect();
    assert!(ratios.iter().all(|q| *q < 1.0), "{ratios:?}");
    let s = solve(&spec, &cfg, None, 0).unwrap();
    let tol = 2.0 * (cfg.picard_tol + cfg.mass_tol);
    let diff = p
        .losses
        .iter()
        .zip(&s.losses)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    assert!(diff <= tol, "{diff}");
    assert!(picard_solve(&MixtureSpec { rho: 0.2, ..spec }, &cfg).is_err());
}

#[test]
fn unstable_step_is_rejected() {
    let spec = scenarios::weak_feedback_spec();
    let cfg = MFConfig { dt: Some(0.01), ..MFConfig::default() };
    assert!(Model::new(&spec, &cfg, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jumps_and_transport_conserve_mass(
        jumps in proptest::collection::vec(proptest::collection::vec(0.0f64..0.5, 4), 1..6),
        moves in proptest::collection::vec(-0.3f64..0.3, 1..6),
        db in proptest::collection::vec(-0.05f64..0.05, 1..6),
    ) {
        let spec = MixtureSpec { rho: 0.4, ..scenarios::heat_plot_spec() };
        let model = Model::new(&spec, &MFConfig::default(), None).unwrap();
        let mut field = DensityField::initial(&model);
        for ((z, mv), b) in jumps.iter().zip(moves.iter().cycle()).zip(db.iter().cycle()) {
            field.apply_jump(&model, z);
            prop_assert!(conservation_error(&model, &field) < 1e-12);
            field.transport(&model, 1, *mv);
            prop_assert!(conservation_error(&model, &field) < 1e-12);
            step(&model, &mut field, *b).unwrap();
            prop_assert!(conservation_error(&model, &field) < 1e-12);
            for s in &field.subs {
                prop_assert!(s.values.iter().all(|v| *v >= 0.0));
            }
        }
    }
}
