use approx::assert_abs_diff_eq;
use identifiability::kinetics::{
    combustion_forward, ignition_delay, integrate_reactor, integrate_reactor_with,
    preexponential_logA, reaction_rates, CombustionModel, IntegratorOptions, KineticsInput,
    Mechanism, Reactor, ReactorState, Trajectory,
};
use identifiability::Error;

fn baseline_input() -> KineticsInput {
    KineticsInput::new(1500.0, 1.0, 1.0e5).unwrap()
}

const BASELINE_A: f64 = 2.8e9;

#[test]
fn log_a_parameterization() {
    assert_eq!(preexponential_logA(&[7.5, 0.0, 0.0], 1300.0, 0.7), 7.5);
    assert_eq!(preexponential_logA(&[18.0, 0.0, 0.0], 900.0, 1.0), 18.0);
    assert_eq!(preexponential_logA(&[18.0, 0.0, 0.0], 2500.0, 1.0), 18.0);
    let a = preexponential_logA(&[18.0, 0.3, -1.1], 1400.0, 1.0);
    let b = preexponential_logA(&[18.0, -1.1, 0.3], 1400.0, 1.0);
    assert_eq!(a.to_bits(), b.to_bits());
    let expected = 18.0 + (0.3f64 - 1.1).tanh() * 1.4;
    assert_abs_diff_eq!(a, expected, epsilon = 1e-14);
}

fn state(c: [f64; 6], t: f64) -> ReactorState {
    ReactorState {
        concentrations: c.to_vec(),
        temperature: t,
        pressure: 1e5,
    }
}

#[test]
fn rate_law_examples() {
    // CH4, O2, CO, CO2, H2O, N2
    let base = [1e-6, 2e-6, 3e-7, 0.0, 5e-7, 7e-6];
    let (_, _, k2b) = reaction_rates(&state(base, 1500.0), BASELINE_A);
    assert_eq!(k2b, 0.0);

    let (_, k2f, _) = reaction_rates(&state(base, 1500.0), BASELINE_A);
    let mut doubled = base;
    doubled[2] *= 2.0;
    let (_, k2f_doubled, _) = reaction_rates(&state(doubled, 1500.0), BASELINE_A);
    assert_abs_diff_eq!(k2f_doubled / k2f, 2.0, epsilon = 1e-12);

    // Unit concentrations isolate the Arrhenius factor.
    let (k1, _, _) = reaction_rates(&state([1.0, 1.0, 0.0, 0.0, 0.0, 1.0], 1500.0), 1.0);
    let arrhenius = (-48400.0f64 / (1.9872 * 1500.0)).exp();
    assert_abs_diff_eq!(k1, arrhenius, epsilon = 1e-20);
    assert_abs_diff_eq!(k1.ln(), -16.237, epsilon = 1e-3);
}

#[test]
fn rate_law_closed_form() {
    let c = [7.6e-7, 1.5e-6, 2e-8, 1e-8, 3e-8, 5.7e-6];
    let t = 1700.0;
    let (k1, k2f, k2b) = reaction_rates(&state(c, t), BASELINE_A);
    let rt = 1.9872 * t;
    let e1 = BASELINE_A * (-48400.0 / rt).exp() * c[0].powf(-0.3) * c[1].powf(1.3);
    let e2f = 3.98e14 * (-40000.0 / rt).exp() * c[2] * c[4].sqrt() * c[1].powf(0.25);
    let e2b = 5e8 * (-40000.0 / rt).exp() * c[3];
    assert_abs_diff_eq!(k1 / e1, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(k2f / e2f, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(k2b / e2b, 1.0, epsilon = 1e-12);
}

#[test]
fn floor_applies_to_negative_orders() {
    let tiny = [1e-30, 1.5e-6, 0.0, 0.0, 0.0, 5.7e-6];
    let floor = [1e-20, 1.5e-6, 0.0, 0.0, 0.0, 5.7e-6];
    let (a, _, _) = reaction_rates(&state(tiny, 1500.0), BASELINE_A);
    let (b, _, _) = reaction_rates(&state(floor, 1500.0), BASELINE_A);
    assert_eq!(a, b);
    let (exhausted, _, _) = reaction_rates(
        &state([0.0, 1.5e-6, 0.0, 0.0, 0.0, 5.7e-6], 1500.0),
        BASELINE_A,
    );
    assert_eq!(exhausted, 0.0);
}

#[test]
fn no_reaction_without_pre_exponential() {
    let traj = integrate_reactor(&baseline_input(), 0.0, 1e-3).unwrap();
    assert!(traj.temperature.iter().all(|&t| t == 1500.0));
    assert!(matches!(
        ignition_delay(&traj),
        Err(Error::NoIgnition { .. })
    ));
}

#[test]
fn stoichiometric_initial_mixture() {
    let mech = Mechanism::methane_2step();
    let s = ReactorState::initial(mech, &baseline_input()).unwrap();
    let c = &s.concentrations;
    assert_abs_diff_eq!(c[1] / c[0], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(c[5] / c[1], 3.76, epsilon = 1e-12);
    let total: f64 = c.iter().sum();
    assert_abs_diff_eq!(total, 1e5 / (8.314462618 * 1500.0) * 1e-6, epsilon = 1e-15);
    let lean = ReactorState::initial(mech, &KineticsInput::new(1500.0, 0.5, 1e5).unwrap()).unwrap();
    assert_abs_diff_eq!(
        lean.concentrations[1] / lean.concentrations[0],
        4.0,
        epsilon = 1e-12
    );
}

#[test]
fn inputs_are_validated() {
    assert!(KineticsInput::new(800.0, 1.0, 1e5).is_err());
    assert!(KineticsInput::new(2600.0, 1.0, 1e5).is_err());
    assert!(KineticsInput::new(1500.0, 0.0, 1e5).is_err());
    assert!(KineticsInput::new(1500.0, 1.0, -1.0).is_err());
    assert!(integrate_reactor(&baseline_input(), BASELINE_A, 0.0).is_err());
    assert!(integrate_reactor(&baseline_input(), -1.0, 1e-3).is_err());
}

fn max_relative_element_drift(traj: &Trajectory) -> f64 {
    let mech = Mechanism::methane_2step();
    let start = traj.element_ratios(mech, 0);
    (0..traj.len())
        .flat_map(|k| {
            let r = traj.element_ratios(mech, k);
            (0..3).map(move |e| ((r[e] - start[e]) / start[e]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn baseline_trajectory_shape_and_conservation() {
    let traj = integrate_reactor(&baseline_input(), BASELINE_A, 2e-3).unwrap();
    assert!(traj.time.windows(2).all(|w| w[1] > w[0]));
    assert!(traj.temperature.iter().all(|&t| t >= 250f64.min(1500.0)));
    assert!(traj.concentrations.iter().flatten().all(|&c| c >= 0.0));
    let plateau = *traj.temperature.last().unwrap();
    assert!(plateau > 2500.0, "plateau {plateau}");
    // single steep rise: temperature never falls by more than the tolerance
    assert!(traj.temperature.windows(2).all(|w| w[1] >= w[0] - 1e-3));
    let t_ign = ignition_delay(&traj).unwrap();
    // Slow preheat, then the jump to the plateau straddles t_ign.
    let at = |f: f64| traj.temperature[traj.time.partition_point(|&t| t < f * t_ign)];
    let half = 0.5 * (1500.0 + plateau);
    assert!(at(0.5) < 1600.0);
    assert!(at(0.95) < half);
    assert!(at(1.05) > half);
    assert!(max_relative_element_drift(&traj) < 1e-3);
}

/// Classical RK4 at a fixed step over the same right-hand side, with the
/// same non-negativity clamp on species.
fn rk4_ignition_delay(input: &KineticsInput, a: f64, dt: f64, t_end: f64) -> f64 {
    let reactor = Reactor::new(Mechanism::methane_2step(), input, a).unwrap();
    let n = reactor.dim();
    let mut y = reactor.initial_state().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut best = (f64::NEG_INFINITY, 0.0);
    let steps = (t_end / dt).round() as usize;
    for step in 0..steps {
        let t = step as f64 * dt;
        reactor.derivative(&y, &mut k1);
        if k1[n - 1] > best.0 {
            best = (k1[n - 1], t);
        }
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        reactor.derivative(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        reactor.derivative(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + dt * k3[i];
        }
        reactor.derivative(&tmp, &mut k4);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if i < n - 1 && y[i] < 0.0 {
                y[i] = 0.0;
            }
        }
    }
    best.1
}

#[test]
fn baseline_ignition_matches_fixed_step_reference() {
    let adaptive =
        ignition_delay(&integrate_reactor(&baseline_input(), BASELINE_A, 3e-4).unwrap()).unwrap();
    let reference = rk4_ignition_delay(&baseline_input(), BASELINE_A, 1e-9, 3e-4);
    assert!(
        ((adaptive - reference) / reference).abs() < 0.01,
        "{adaptive} vs {reference}"
    );
}

#[test]
fn ignition_delay_is_shift_equivariant() {
    let traj = integrate_reactor(&baseline_input(), BASELINE_A, 3e-4).unwrap();
    let t = ignition_delay(&traj).unwrap();
    for c in [1e-3, 0.5, 12.0] {
        let shifted = ignition_delay(&traj.shifted(c)).unwrap();
        assert!(
            (shifted - (t + c)).abs() <= 1e-12 * (t + c),
            "{c}: {shifted} vs {}",
            t + c
        );
    }
}

#[test]
fn flat_trajectory_has_no_ignition() {
    let traj = Trajectory {
        species: vec![],
        time: vec![0.0, 1.0, 2.0],
        temperature: vec![1200.0, 1220.0, 1240.0],
        temperature_rate: vec![20.0, 20.0, 20.0],
        concentrations: vec![vec![]; 3],
        pressure: 1e5,
    };
    match ignition_delay(&traj) {
        Err(Error::NoIgnition { rise }) => assert_abs_diff_eq!(rise, 40.0, epsilon = 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn stiffness_error_carries_state() {
    let opts = IntegratorOptions {
        max_steps: 5,
        ..IntegratorOptions::default()
    };
    match integrate_reactor_with(
        Mechanism::methane_2step(),
        &baseline_input(),
        BASELINE_A,
        1e-3,
        &opts,
    ) {
        Err(Error::Stiffness {
            state, temperature, ..
        }) => {
            assert_eq!(state.len(), 7);
            assert!(temperature >= 1500.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn forward_collapses_to_baseline() {
    let model = CombustionModel::new(vec![baseline_input()]).unwrap();
    let out = combustion_forward(&[BASELINE_A.log10(), 0.0, 0.0], &model).unwrap();
    let direct =
        ignition_delay(&integrate_reactor(&baseline_input(), BASELINE_A, 3e-4).unwrap()).unwrap();
    assert!(
        (out[0] - direct.ln()).abs() < 1e-6,
        "{} vs {}",
        out[0],
        direct.ln()
    );
}

#[test]
fn swapping_theta2_theta3_is_bit_identical() {
    let model = CombustionModel::reference();
    for (a, b) in [(0.3, -0.8), (1.2, 0.05), (-2.0, 1.5)] {
        let x = combustion_forward(&[18.0, a, b], &model).unwrap();
        let y = combustion_forward(&[18.0, b, a], &model).unwrap();
        assert_eq!(
            x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn larger_theta1_ignites_sooner() {
    let model = CombustionModel::reference();
    let outputs: Vec<Vec<f64>> = (0..5)
        .map(|k| combustion_forward(&[16.0 + k as f64, 0.4, -0.2], &model).unwrap())
        .collect();
    for w in outputs.windows(2) {
        for (lo, hi) in w[1].iter().zip(&w[0]) {
            assert!(lo < hi, "{:?}", outputs);
        }
    }
}

#[test]
fn tighter_tolerances_barely_move_the_delay() {
    let coarse = CombustionModel::reference();
    let fine = CombustionModel::reference().with_tolerances(0.5e-8, 0.5e-14);
    for theta in [[18.0, 0.0, 0.0], [17.0, 0.5, -1.0], [19.5, -1.0, 0.3]] {
        let a = combustion_forward(&theta, &coarse).unwrap();
        let b = combustion_forward(&theta, &fine).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-3, "{theta:?}: {x} vs {y}");
        }
    }
}

#[test]
fn early_stop_keeps_the_delay() {
    let full = integrate_reactor(&baseline_input(), BASELINE_A, 3e-4).unwrap();
    let opts = IntegratorOptions {
        stop_after_ignition: true,
        ..IntegratorOptions::default()
    };
    let short = integrate_reactor_with(
        Mechanism::methane_2step(),
        &baseline_input(),
        BASELINE_A,
        3e-4,
        &opts,
    )
    .unwrap();
    assert!(short.len() < full.len());
    assert_eq!(
        ignition_delay(&short).unwrap(),
        ignition_delay(&full).unwrap()
    );
}

#[test]
fn element_conservation_over_parameter_range() {
    let opts = IntegratorOptions::default();
    for (t0, phi, log_a) in [
        (1100.0, 1.0, 18.0),
        (2000.0, 1.0, 15.0),
        (1400.0, 0.6, 12.0),
        (1700.0, 1.4, 20.0),
    ] {
        let input = KineticsInput::new(t0, phi, 1e5).unwrap();
        let a: f64 = 10f64.powf(log_a);
        let t_ign = ignition_delay(
            &integrate_reactor_with(
                Mechanism::methane_2step(),
                &input,
                a,
                10.0,
                &IntegratorOptions {
                    stop_after_ignition: true,
                    ..opts
                },
            )
            .unwrap(),
        )
        .unwrap();
        let traj =
            integrate_reactor_with(Mechanism::methane_2step(), &input, a, 3.0 * t_ign, &opts)
                .unwrap();
        assert!(
            max_relative_element_drift(&traj) < 1e-3,
            "{t0} {phi} {log_a}"
        );
    }
}
