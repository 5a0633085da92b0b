use quench_core::solver::*;

#[test]
fn minimum_stays_above_reaction_ode() {
    let grid = PolarGrid::new(64, 16, 0.5).unwrap();
    let opts = SolverOptions { u_stop: 0.05, dt_max: 1e-3, ..Default::default() };
    let traj = run_to_quench(&InitialCondition::Constant(1.0), &grid, &opts).unwrap();
    assert_eq!(traj.reason, Termination::Quenched);
    for smp in &traj.samples {
        let ode = (1.0 - 3.0 * smp.t).max(0.0).cbrt();
        assert!(smp.u_min >= ode - 1e-12, "t={} u={} ode={}", smp.t, smp.u_min, ode);
    }
    assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t && w[1].u_min > 0.0));
}

#[test]
fn pure_diffusion_keeps_bounds() {
    let grid = PolarGrid::new(48, 16, 0.7).unwrap();
    let u0 = InitialCondition::Dip { center: [0.2, -0.1], depth: 0.6, width: 0.3 };
    let v0 = u0.sample(&grid).unwrap();
    let (lo, hi) = v0.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    let st = Stepper::new(grid.clone(), SolverOptions { reaction: false, dt_max: 1e-2, ..Default::default() });
    let mut state = SolverState::new(&grid, v0).unwrap();
    for _ in 0..50 {
        state = st.step(&state).unwrap();
        assert!(state.u.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }
}

#[test]
fn insulated_constant_data_follow_the_ode() {
    let a: f64 = 0.9;
    let grid = PolarGrid::new(32, 16, 1.0).unwrap();
    let opts = SolverOptions { clamp: false, u_stop: 1e-2, dt_max: 1e-3, ..Default::default() };
    let traj = run_to_quench(&InitialCondition::Constant(a), &grid, &opts).unwrap();
    let last = traj.samples.last().unwrap();
    let t_quench = last.t + last.u_min.powi(3) / 3.0;
    assert!((t_quench - a.powi(3) / 3.0).abs() < 1e-12);
}
