use proptest::prelude::*;
use qthermo::dynamics::{dephasing_exponent, dephasing_oracle};
use qthermo::witness::coherence;
use qthermo::{
    integrate, precompute, BlochState, Error, KernelParams, KernelSet, KernelValues, ProbeConfig,
    QuadratureConfig, SpectralDensity,
};

fn probe(alpha: f64, temp: f64, eta: f64, t_end: f64, dt: f64) -> ProbeConfig {
    ProbeConfig {
        epsilon: 0.5,
        alpha,
        temperature: temp,
        sd: SpectralDensity::ohmic(eta, 1.0).unwrap(),
        initial: BlochState::plus(),
        t_end,
        dt,
    }
}

fn run(cfg: &ProbeConfig) -> qthermo::Result<qthermo::Trajectory> {
    let ks = precompute(
        &cfg.kernel_params()?,
        cfg.t_end,
        cfg.dt,
        &QuadratureConfig::default(),
    )?;
    integrate(cfg, &ks)
}

#[test]
fn zero_temperature_dephasing_closed_form() {
    let cfg = probe(0.0, 0.0, 0.05, 20.0, 0.01);
    let tr = run(&cfg).unwrap();
    let c = coherence(&tr);
    for (t, ci) in tr.grid.iter().zip(&c) {
        let exact = (1.0 + t * t).powf(-0.1);
        assert!((ci - exact).abs() < 1e-8, "t={t}: {ci} vs {exact}");
    }
    let at3 = c[300];
    assert!((at3 - 0.7943).abs() < 1e-4);
    // populations untouched, transverse vector precesses at ε
    let s = tr.state_at(20.0).unwrap();
    assert_eq!(s.dz, 0.0);
    let phase = s.dy.atan2(s.dx);
    assert!((phase - (10.0 - 4.0 * std::f64::consts::PI)).abs() < 1e-9);
}

#[test]
fn finite_temperature_dephasing_oracle() {
    let cfg = probe(0.0, 0.2, 0.05, 30.0, 0.01);
    let ode = coherence(&run(&cfg).unwrap());
    let exact = coherence(&dephasing_oracle(&cfg).unwrap());
    let worst = ode
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "max error {worst:e}");
    // long-time growth 4πηT·t with a −8ηT·ln t correction from the e^{−ω} slope
    let (eta, temp) = (0.05, 2.0);
    let g = dephasing_exponent(&cfg.sd, temp, 200.0).unwrap()
        - dephasing_exponent(&cfg.sd, temp, 100.0).unwrap();
    let expect = 4.0 * std::f64::consts::PI * eta * temp * 100.0 - 8.0 * eta * temp * 2f64.ln();
    assert!((g - expect).abs() < 1e-3, "{g} vs {expect}");
}

#[test]
fn rk4_fourth_order() {
    let finals: Vec<BlochState> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&dt| run(&probe(0.5, 0.2, 0.05, 20.0, dt)).unwrap().final_state())
        .collect();
    let e1 = (finals[0] - finals[1]).norm_sq().sqrt();
    let e2 = (finals[1] - finals[2]).norm_sq().sqrt();
    let order = (e1 / e2).log2();
    assert!((order - 4.0).abs() < 0.5, "observed order {order}");
}

#[test]
fn free_qubit_keeps_purity() {
    let tr = run(&probe(0.5, 0.2, 0.0, 50.0, 0.01)).unwrap();
    let s = tr.final_state();
    assert!((s.norm_sq().sqrt() - 1.0).abs() < 1e-8);
    assert!((s.dx - 25f64.cos()).abs() < 1e-8);
}

#[test]
fn pure_channels_have_no_cross_terms() {
    // α = 1 from the pole: only the dissipative channel acts, Δx and Δy stay zero
    let mut cfg = probe(1.0, 0.2, 0.05, 10.0, 0.01);
    cfg.initial = BlochState::new(0.0, 0.0, 1.0);
    let tr = run(&cfg).unwrap();
    for s in &tr.states {
        assert_eq!((s.dx, s.dy), (0.0, 0.0));
    }
    assert!(tr.final_state().dz < 1.0);
}

#[test]
fn synthetic_gain_is_reported_unphysical() {
    let p = KernelParams::new(SpectralDensity::ohmic(0.05, 1.0).unwrap(), 0.5, 0.2).unwrap();
    let gain = KernelValues {
        r: -0.5,
        ..Default::default()
    };
    let ks = KernelSet::from_samples(p, 0.01, vec![gain; 1001], vec![gain; 1000]).unwrap();
    let cfg = probe(0.0, 0.2, 0.05, 10.0, 0.01);
    match integrate(&cfg, &ks) {
        Err(Error::Unphysical { t, norm_sq, .. }) => {
            assert!(t > 0.0 && t < 0.1);
            assert!(norm_sq > 1.0);
        }
        other => panic!("expected unphysical state, got {other:?}"),
    }
}

#[test]
fn mismatched_tables_rejected() {
    let cfg = probe(0.5, 0.2, 0.05, 2.0, 0.01);
    let ks = precompute(
        &cfg.kernel_params().unwrap(),
        1.0,
        0.01,
        &QuadratureConfig::default(),
    )
    .unwrap();
    assert!(matches!(integrate(&cfg, &ks), Err(Error::Config(_))));
    let other = precompute(
        &cfg.kernel_params().unwrap().at_temperature(0.3).unwrap(),
        2.0,
        0.01,
        &QuadratureConfig::default(),
    )
    .unwrap();
    assert!(integrate(&cfg, &other).is_err());
    // a longer table serves a shorter run
    let long = precompute(
        &cfg.kernel_params().unwrap(),
        4.0,
        0.01,
        &QuadratureConfig::default(),
    )
    .unwrap();
    assert_eq!(integrate(&cfg, &long).unwrap(), run(&cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_stay_in_the_ball(
        alpha in 0.0f64..=1.0,
        temp in 0.0f64..1.0,
        theta in 0.0f64..std::f64::consts::PI,
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let mut cfg = probe(alpha, temp, 0.05, 10.0, 0.05);
        cfg.initial = BlochState::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let tr = run(&cfg).unwrap();
        for s in &tr.states {
            prop_assert!(s.norm_sq() <= 1.0 + 1e-8);
        }
    }
}
