//! Second-order Trotter splitting of `exp(-i H dt)`.
//!
//! One step is `F(dt/2) · O(dt/2) · E(dt) · O(dt/2) · F(dt/2)`, with `O` the
//! gates on bonds `(0,1), (2,3), …`, `E` the gates on bonds `(1,2), (3,4), …`
//! and `F` the diagonal staggered-field layer.

use nalgebra::{Matrix2, Matrix4};

use crate::error::{Error, Result};
use crate::model::{Couplings, ModelSpec};
use crate::state::{StateVector, C64};

pub const DEFAULT_DT: f64 = 0.05;

pub fn pauli_x() -> Matrix2<C64> {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    Matrix2::new(o, l, l, o)
}

pub fn pauli_y() -> Matrix2<C64> {
    let (o, i) = (C64::new(0.0, 0.0), C64::i());
    Matrix2::new(o, -i, i, o)
}

pub fn pauli_z() -> Matrix2<C64> {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    Matrix2::new(l, o, o, -l)
}

/// `h = Σ_α J_α σ^α ⊗ σ^α` on one bond.
pub fn bond_hamiltonian(c: &Couplings) -> Matrix4<C64> {
    let xx = pauli_x().kronecker(&pauli_x());
    let yy = pauli_y().kronecker(&pauli_y());
    let zz = pauli_z().kronecker(&pauli_z());
    xx * C64::from(c.jx) + yy * C64::from(c.jy) + zz * C64::from(c.jz)
}

/// `exp(-i h τ)` for Hermitian `h`, by eigendecomposition.
pub fn hermitian_exp4(h: &Matrix4<C64>, tau: f64) -> Matrix4<C64> {
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors;
    let phases = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * tau)));
    v * phases * v.adjoint()
}

/// The bond Hamiltonian commutes with σ^z ⊗ σ^z, so its exponential has no
/// entries between even- and odd-parity local states; clear the round-off there.
fn parity_projected(mut u: Matrix4<C64>) -> Matrix4<C64> {
    for r in 0..4usize {
        for c in 0..4usize {
            if (r.count_ones() + c.count_ones()) % 2 == 1 {
                u[(r, c)] = C64::new(0.0, 0.0);
            }
        }
    }
    u
}

#[derive(Clone, Debug)]
pub struct TrotterPlan {
    n_sites: usize,
    dt: f64,
    bond_gates_half: Vec<Matrix4<C64>>,
    bond_gates_full: Vec<Matrix4<C64>>,
    /// `exp(-i f_s σ^z dt/2)` per site as `(↑, ↓)` phases.
    field_layer_half: Vec<[C64; 2]>,
    has_field: bool,
}

impl TrotterPlan {
    pub fn new(model: &ModelSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidTimeStep(dt));
        }
        Ok(Self::build(model, dt))
    }

    fn build(model: &ModelSpec, dt: f64) -> Self {
        let h = bond_hamiltonian(&model.couplings);
        let half = parity_projected(hermitian_exp4(&h, dt / 2.0));
        let full = parity_projected(hermitian_exp4(&h, dt));
        let field_layer_half = (0..model.n_sites)
            .map(|s| {
                let theta = model.field_on(s) * dt / 2.0;
                [C64::from_polar(1.0, -theta), C64::from_polar(1.0, theta)]
            })
            .collect();
        Self {
            n_sites: model.n_sites,
            dt,
            bond_gates_half: vec![half; model.n_bonds()],
            bond_gates_full: vec![full; model.n_bonds()],
            field_layer_half,
            has_field: model.couplings.hz != 0.0,
        }
    }

    /// The plan for a step of `-dt`, i.e. the exact inverse of [`TrotterPlan::step`].
    pub fn inverse(&self, model: &ModelSpec) -> Self {
        Self::build(model, -self.dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn bond_gate_half(&self, bond: usize) -> &Matrix4<C64> {
        &self.bond_gates_half[bond]
    }

    pub fn bond_gate_full(&self, bond: usize) -> &Matrix4<C64> {
        &self.bond_gates_full[bond]
    }

    pub fn field_phases_half(&self, site: usize) -> [C64; 2] {
        self.field_layer_half[site]
    }

    pub fn step(&self, state: &mut StateVector) -> Result<()> {
        if state.n_sites() != self.n_sites {
            return Err(Error::SizeMismatch {
                plan: self.n_sites,
                state: state.n_sites(),
            });
        }
        self.field_layer(state);
        self.bond_layer(state, 0, &self.bond_gates_half)?;
        self.bond_layer(state, 1, &self.bond_gates_full)?;
        self.bond_layer(state, 0, &self.bond_gates_half)?;
        self.field_layer(state);
        Ok(())
    }

    pub fn evolve(&self, state: &mut StateVector, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step(state)?;
        }
        Ok(())
    }

    fn bond_layer(
        &self,
        state: &mut StateVector,
        parity: usize,
        gates: &[Matrix4<C64>],
    ) -> Result<()> {
        for bond in (parity..gates.len()).step_by(2) {
            state.apply_two_site(&gates[bond], bond)?;
        }
        Ok(())
    }

    /// Applies every site's half-step field phase in one pass, factoring the
    /// phase of index `b` into tables over its low and high bit halves.
    fn field_layer(&self, state: &mut StateVector) {
        if !self.has_field {
            return;
        }
        let n_low = self.n_sites / 2;
        let table = |sites: std::ops::Range<usize>| -> Vec<C64> {
            let width = sites.len();
            (0..1usize << width)
                .map(|bits| {
                    sites
                        .clone()
                        .enumerate()
                        .map(|(k, s)| self.field_layer_half[s][(bits >> k) & 1])
                        .product()
                })
                .collect()
        };
        let low = table(0..n_low);
        let high = table(n_low..self.n_sites);
        let low_mask = (1usize << n_low) - 1;
        for (b, a) in state.amplitudes_mut().iter_mut().enumerate() {
            *a *= low[b & low_mask] * high[b >> n_low];
        }
    }
}
