//! Independent dense-matrix and quadrature references for the integration
//! tests and the acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wmon_core::model::{Axis, Couplings, MonitorOp};
use wmon_core::StateVector;

pub type Dense = DMatrix<C64>;

pub fn pauli(axis: Axis) -> Dense {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// `⊗_s factors[s]` with site 0 as the least significant tensor factor.
pub fn kron_sites(factors: &[Dense]) -> Dense {
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for f in factors {
        out = f.kronecker(&out);
    }
    out
}

/// A Pauli `axis` on each site in `sites`, identity elsewhere.
pub fn pauli_string(n_sites: usize, axis: Axis, sites: &[usize]) -> Dense {
    let factors: Vec<Dense> = (0..n_sites)
        .map(|s| {
            if sites.contains(&s) {
                pauli(axis)
            } else {
                DMatrix::identity(2, 2)
            }
        })
        .collect();
    kron_sites(&factors)
}

pub fn dense_op(n_sites: usize, op: &MonitorOp) -> Dense {
    let sites: Vec<usize> = (op.first_site..op.first_site + op.span).collect();
    pauli_string(n_sites, op.axis, &sites)
}

/// `H = Σ_i Σ_α J_α σ^α_i σ^α_{i+1} + h_z Σ_i (-1)^i σ^z_i` with open
/// boundaries and 1-based `i`.
pub fn dense_hamiltonian(n_sites: usize, c: &Couplings) -> Dense {
    let dim = 1 << n_sites;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n_sites - 1 {
        for (axis, j) in [(Axis::X, c.jx), (Axis::Y, c.jy), (Axis::Z, c.jz)] {
            if j != 0.0 {
                h += pauli_string(n_sites, axis, &[i, i + 1]) * C64::from(j);
            }
        }
    }
    for i in 1..=n_sites {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        if c.hz != 0.0 {
            h += pauli_string(n_sites, Axis::Z, &[i - 1]) * C64::from(sign * c.hz);
        }
    }
    h
}

/// `exp(-i H t)` by full Hermitian eigendecomposition.
pub fn exact_propagator(h: &Dense, t: f64) -> Dense {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    v * phases * v.adjoint()
}

pub fn to_dvec(state: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(state.amplitudes())
}

pub fn from_dvec(v: &DVector<C64>) -> StateVector {
    StateVector::from_amplitudes(v.iter().copied().collect()).unwrap()
}

pub fn random_state(n_sites: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..1usize << n_sites)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut s = StateVector::from_amplitudes(amps).unwrap();
    s.normalize();
    s
}

/// Reduced density matrix of the first `n_keep` sites.
pub fn reduced_low(state: &StateVector, n_keep: usize) -> Dense {
    let amps = state.amplitudes();
    let d_a = 1usize << n_keep;
    let d_b = amps.len() / d_a;
    DMatrix::from_fn(d_a, d_a, |i, j| {
        (0..d_b).map(|k| amps[i + k * d_a] * amps[j + k * d_a].conj()).sum()
    })
}

/// Reduced density matrix of the last `n_keep` sites.
pub fn reduced_high(state: &StateVector, n_keep: usize) -> Dense {
    let amps = state.amplitudes();
    let d_b = 1usize << n_keep;
    let d_a = amps.len() / d_b;
    DMatrix::from_fn(d_b, d_b, |i, j| {
        (0..d_a).map(|k| amps[k + i * d_a] * amps[k + j * d_a].conj()).sum()
    })
}

pub fn von_neumann(rho: &Dense) -> f64 {
    rho.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Entropy of sites `0..n_keep` by explicit partial trace.
pub fn partial_trace_entropy(state: &StateVector, n_keep: usize) -> f64 {
    von_neumann(&reduced_low(state, n_keep))
}

pub fn projector(state: &StateVector) -> Dense {
    let v = to_dvec(state);
    &v * v.adjoint()
}

pub fn trace_distance(a: &Dense, b: &Dense) -> f64 {
    0.5 * (a - b)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum::<f64>()
}

/// `dρ/dt = -i[H, ρ] + γ Σ_l (O_l ρ O_l - ρ)` for Hermitian involutions `O_l`.
pub fn lindblad_rhs(h: &Dense, ops: &[Dense], gamma: f64, rho: &Dense) -> Dense {
    let mi = C64::new(0.0, -1.0);
    let mut d = (h * rho - rho * h) * mi;
    for o in ops {
        d += (o * rho * o - rho) * C64::from(gamma);
    }
    d
}

/// Classical RK4 integration of [`lindblad_rhs`] over `n_steps` of `dt`.
pub fn lindblad_rk4(h: &Dense, ops: &[Dense], gamma: f64, rho0: &Dense, dt: f64, n_steps: usize) -> Dense {
    let mut rho = rho0.clone();
    let half = C64::from(dt / 2.0);
    let full = C64::from(dt);
    for _ in 0..n_steps {
        let k1 = lindblad_rhs(h, ops, gamma, &rho);
        let k2 = lindblad_rhs(h, ops, gamma, &(&rho + &k1 * half));
        let k3 = lindblad_rhs(h, ops, gamma, &(&rho + &k2 * half));
        let k4 = lindblad_rhs(h, ops, gamma, &(&rho + &k3 * full));
        rho += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(dt / 6.0);
    }
    rho
}

/// `I_x(a, b)` by double-exponential quadrature of the beta density,
/// normalized by the same quadrature over `[0, 1]`.
///
/// Below the split point `∫_0^x t^{a-1}(1-t)^{b-1} dt = (1/a) ∫_0^{x^a} (1 - v^{1/a})^{b-1} dv`,
/// and symmetrically above it in `u = 1 - t`, so neither integrand is singular.
pub fn beta_quadrature(x: f64, a: f64, b: f64) -> f64 {
    let split = if a > 1.0 && b > 1.0 {
        (a - 1.0) / (a + b - 2.0)
    } else {
        0.5
    };
    let from_zero = |p: f64, q: f64, hi: f64| -> f64 {
        let g = |v: f64| (1.0 - v.powf(p.recip())).powf(q - 1.0);
        let top = hi.powf(p);
        let rough = quadrature::integrate(g, 0.0, top, 1e-6 * top).integral;
        quadrature::integrate(g, 0.0, top, 1e-15 * rough.abs().max(f64::MIN_POSITIVE)).integral / p
    };
    let below = |hi: f64| from_zero(a, b, hi);
    let above = |hi: f64| from_zero(b, a, hi);
    let total = below(split) + above(1.0 - split);
    if x <= split {
        below(x) / total
    } else {
        1.0 - above(1.0 - x) / total
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
