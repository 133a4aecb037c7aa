mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use wmon_core::model::{Couplings, MonitorKind};
use wmon_core::monitoring::{euler_maruyama_layer, homodyne_layer};
use wmon_core::{monitored_operators, Axis, ModelSpec, MonitorSpec, NoiseStream, Preset, StateVector, TrotterPlan};

fn averaged_density(model: &ModelSpec, monitor: &MonitorSpec, psi0: &StateVector, dt: f64, n_steps: u64, n_traj: u64) -> Dense {
    let plan = TrotterPlan::new(model, dt).unwrap();
    let ops = monitored_operators(model, monitor);
    let dim = psi0.dim();
    let mut rho = DMatrix::zeros(dim, dim);
    for traj in 0..n_traj {
        let mut psi = psi0.clone();
        let mut noise = NoiseStream::new(99, traj, monitor.gamma, dt);
        for step in 0..n_steps {
            plan.step(&mut psi).unwrap();
            homodyne_layer(&mut psi, &ops, &mut noise, step).unwrap();
        }
        rho += projector(&psi);
    }
    rho / C64::from(n_traj as f64)
}

fn lindblad_reference(model: &ModelSpec, monitor: &MonitorSpec, psi0: &StateVector, t: f64) -> Dense {
    let h = dense_hamiltonian(model.n_sites, &model.couplings);
    let ops: Vec<Dense> = monitored_operators(model, monitor)
        .iter()
        .map(|op| dense_op(model.n_sites, op))
        .collect();
    lindblad_rk4(&h, &ops, monitor.gamma, &projector(psi0), 1e-3, (t / 1e-3).round() as usize)
}

#[test]
fn trajectory_average_follows_lindblad_single_site_z() {
    let model = ModelSpec::preset(Preset::XX, 4).unwrap();
    let monitor = MonitorSpec::single_site(Axis::Z, 0.1).unwrap();
    let psi0 = random_state(4, 12);
    let avg = averaged_density(&model, &monitor, &psi0, 0.01, 100, 3000);
    let exact = lindblad_reference(&model, &monitor, &psi0, 1.0);
    let d = trace_distance(&avg, &exact);
    assert!(d <= 0.02, "trace distance {d}");
}

#[test]
fn trajectory_average_follows_lindblad_bond_x_strong() {
    // A larger rate makes a wrong drift coefficient visible.
    let model = ModelSpec::preset(Preset::XY, 4).unwrap();
    let monitor = MonitorSpec::bond(Axis::X, 0.5).unwrap();
    let psi0 = random_state(4, 13);
    let avg = averaged_density(&model, &monitor, &psi0, 0.005, 200, 3000);
    let exact = lindblad_reference(&model, &monitor, &psi0, 1.0);
    let unmonitored = {
        let h = dense_hamiltonian(4, &model.couplings);
        let u = exact_propagator(&h, 1.0);
        &u * projector(&psi0) * u.adjoint()
    };
    let d = trace_distance(&avg, &exact);
    assert!(d <= 0.03, "trace distance {d}");
    assert!(trace_distance(&exact, &unmonitored) > 3.0 * d);
}

#[test]
fn trajectory_average_follows_lindblad_single_site_x() {
    let model = ModelSpec::preset(Preset::XY, 4).unwrap();
    let monitor = MonitorSpec::single_site(Axis::X, 0.5).unwrap();
    let psi0 = random_state(4, 14);
    let avg = averaged_density(&model, &monitor, &psi0, 0.005, 200, 3000);
    let exact = lindblad_reference(&model, &monitor, &psi0, 1.0);
    let d = trace_distance(&avg, &exact);
    assert!(d <= 0.03, "trace distance {d}");
}

#[test]
fn schemes_agree_to_second_order_per_step() {
    let model = ModelSpec::preset(Preset::XXZ, 6).unwrap();
    let dts = [1e-2, 5e-3, 2.5e-3];
    for kind in [MonitorKind::SingleSite, MonitorKind::Bond] {
        let monitor = MonitorSpec::new(kind, Axis::Z, 1.0).unwrap();
        let ops = monitored_operators(&model, &monitor);
        let psi0 = random_state(6, 31);
        let inf: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let (mut a, mut b) = (psi0.clone(), psi0.clone());
                homodyne_layer(&mut a, &ops, &mut NoiseStream::new(5, 0, 1.0, dt), 0).unwrap();
                euler_maruyama_layer(&mut b, &ops, &mut NoiseStream::new(5, 0, 1.0, dt), 0).unwrap();
                a.infidelity(&b)
            })
            .collect();
        let order = log_log_slope(&dts, &inf);
        assert!(order >= 1.8, "{kind:?}: order {order}, {inf:?}");
    }
}

#[test]
fn strong_monitoring_without_dynamics_purifies() {
    let model = ModelSpec::new(6, Couplings { jx: 0.0, jy: 0.0, jz: 0.0, hz: 0.0 }).unwrap();
    let gamma = 1.0;
    let monitor = MonitorSpec::single_site(Axis::Z, gamma).unwrap();
    let ops = monitored_operators(&model, &monitor);
    let dt = 0.01;
    let n_steps = (20.0 / gamma / dt) as u64;
    let n_traj = 20;
    let mut total = 0.0;
    for traj in 0..n_traj {
        let mut psi = random_state(6, 500 + traj);
        let mut noise = NoiseStream::new(8, traj, gamma, dt);
        for step in 0..n_steps {
            homodyne_layer(&mut psi, &ops, &mut noise, step).unwrap();
        }
        total += psi.half_chain_entropy().unwrap();
    }
    let mean = total / n_traj as f64;
    assert!(mean < 0.05, "mean entropy {mean}");
}

#[test]
fn expectations_match_dense_operators() {
    let psi = random_state(6, 41);
    let v = to_dvec(&psi);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        for kind in [MonitorKind::SingleSite, MonitorKind::Bond] {
            let model = ModelSpec::preset(Preset::XX, 6).unwrap();
            let monitor = MonitorSpec::new(kind, axis, 0.1).unwrap();
            for op in monitored_operators(&model, &monitor) {
                let dense = (v.adjoint() * dense_op(6, &op) * &v)[(0, 0)];
                assert!((psi.expectation(&op) - dense.re).abs() < 1e-12, "{op}");
                let applied = to_dvec(&psi.apply_op(&op));
                assert!((applied - dense_op(6, &op) * &v).camax() < 1e-12, "{op}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monitored_operators_square_to_identity(seed in any::<u64>(), axis in 0usize..3, bond in any::<bool>()) {
        let axis = [Axis::X, Axis::Y, Axis::Z][axis];
        let kind = if bond { MonitorKind::Bond } else { MonitorKind::SingleSite };
        let model = ModelSpec::preset(Preset::XX, 4).unwrap();
        let psi = random_state(4, seed);
        for op in monitored_operators(&model, &MonitorSpec::new(kind, axis, 0.1).unwrap()) {
            let back = psi.apply_op(&op).apply_op(&op);
            prop_assert!(back.max_deviation(&psi) < 1e-12);
            prop_assert!(psi.expectation(&op).abs() <= 1.0);
        }
    }

    #[test]
    fn homodyne_layer_keeps_unit_norm(seed in any::<u64>(), gamma in 0.0f64..20.0, step in 0u64..1000) {
        let model = ModelSpec::preset(Preset::XY, 6).unwrap();
        let ops = monitored_operators(&model, &MonitorSpec::single_site(Axis::X, gamma).unwrap());
        let mut psi = random_state(6, seed);
        let mut noise = NoiseStream::new(seed, 1, gamma, 0.05);
        homodyne_layer(&mut psi, &ops, &mut noise, step).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trotter_step_is_unitary(seed in any::<u64>(), preset in 0usize..6, dt in 0.001f64..0.5) {
        let model = ModelSpec::preset(Preset::ALL[preset], 6).unwrap();
        let plan = TrotterPlan::new(&model, dt).unwrap();
        let mut psi = random_state(6, seed);
        plan.step(&mut psi).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
