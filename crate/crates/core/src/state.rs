//! Dense state vectors over the σ^z basis.
//!
//! Basis index `b` stores site `s` in bit `s` (site 0 is the least
//! significant bit); a cleared bit is spin up (σ^z = +1).

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Axis, MonitorOp};

pub type C64 = Complex64;

const SPIN_NORM_TOL: f64 = 1e-12;
/// Schmidt values below this are treated as exact zeros.
const SCHMIDT_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Each spin drawn uniformly on the Bloch sphere.
    HaarSite,
    /// A uniformly random computational basis state.
    Basis,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySample {
    pub t: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// All spins up.
    pub fn all_up(n_sites: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_sites];
        amps[0] = C64::new(1.0, 0.0);
        Self { n_sites, amps }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Domain(format!(
                "amplitude vector length {dim} is not a power of two ≥ 2"
            )));
        }
        Ok(Self {
            n_sites: dim.trailing_zeros() as usize,
            amps,
        })
    }

    /// The computational basis state with bit pattern `bits`.
    pub fn basis(n_sites: usize, bits: usize) -> Result<Self> {
        if bits >> n_sites != 0 {
            return Err(Error::Domain(format!(
                "basis index {bits} out of range for {n_sites} sites"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_sites];
        amps[bits] = C64::new(1.0, 0.0);
        Ok(Self { n_sites, amps })
    }

    /// Tensor product of single-spin states given as `(up, down)` amplitudes,
    /// site 0 first.
    pub fn product(n_sites: usize, spins: &[[C64; 2]]) -> Result<Self> {
        if spins.len() != n_sites {
            return Err(Error::LengthMismatch {
                expected: n_sites,
                got: spins.len(),
            });
        }
        for (index, s) in spins.iter().enumerate() {
            let norm_sqr = s[0].norm_sqr() + s[1].norm_sqr();
            if (norm_sqr - 1.0).abs() > SPIN_NORM_TOL {
                return Err(Error::UnnormalizedSpin { index, norm_sqr });
            }
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        // Site s becomes bit s: each new site doubles the vector above the old block.
        for s in spins {
            let n = amps.len();
            let mut next = Vec::with_capacity(2 * n);
            next.extend(amps.iter().map(|a| a * s[0]));
            next.extend(amps.iter().map(|a| a * s[1]));
            amps = next;
        }
        Ok(Self { n_sites, amps })
    }

    pub fn random_product<R: Rng + ?Sized>(n_sites: usize, rng: &mut R, mode: InitMode) -> Self {
        match mode {
            InitMode::Basis => {
                let bits = rng.gen_range(0..1usize << n_sites);
                Self::basis(n_sites, bits).expect("index drawn in range")
            }
            InitMode::HaarSite => {
                let spins: Vec<[C64; 2]> = (0..n_sites).map(|_| haar_spin(rng)).collect();
                Self::product(n_sites, &spins).expect("spins normalized by construction")
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let inv = self.norm_sqr().sqrt().recip();
        self.amps.iter_mut().for_each(|a| *a *= inv);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `1 - |⟨self|other⟩|²` for normalized states.
    pub fn infidelity(&self, other: &StateVector) -> f64 {
        (1.0 - self.inner(other).norm_sqr()).max(0.0)
    }

    /// Largest elementwise deviation `max_b |ψ_b - φ_b|`.
    pub fn max_deviation(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }

    /// Applies a 2×2 gate, indexed `(out, in)` over `(↑, ↓)`, to `site`.
    pub fn apply_one_site(&mut self, gate: &Matrix2<C64>, site: usize) -> Result<()> {
        self.check_site(site)?;
        let g = [gate[(0, 0)], gate[(0, 1)], gate[(1, 0)], gate[(1, 1)]];
        let bit = 1usize << site;
        let low = bit - 1;
        for i in 0..self.amps.len() / 2 {
            let i0 = ((i & !low) << 1) | (i & low);
            let i1 = i0 | bit;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = g[0] * a0 + g[1] * a1;
            self.amps[i1] = g[2] * a0 + g[3] * a1;
        }
        Ok(())
    }

    /// Multiplies each amplitude by `phases[bit of site]`.
    pub fn apply_diagonal_one_site(&mut self, phases: [C64; 2], site: usize) -> Result<()> {
        self.check_site(site)?;
        let bit = 1usize << site;
        for (b, a) in self.amps.iter_mut().enumerate() {
            *a *= phases[usize::from(b & bit != 0)];
        }
        Ok(())
    }

    /// Applies a 4×4 gate to sites `(site, site + 1)`. The local index is
    /// `bit(site) + 2·bit(site + 1)`.
    pub fn apply_two_site(&mut self, gate: &Matrix4<C64>, site: usize) -> Result<()> {
        self.check_site(site + 1)?;
        let mut g = [[C64::new(0.0, 0.0); 4]; 4];
        for (r, row) in g.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e = gate[(r, c)];
            }
        }
        let low = (1usize << site) - 1;
        let b1 = 1usize << site;
        let b2 = b1 << 1;
        if is_parity_block(&g) {
            for i in 0..self.amps.len() / 4 {
                let base = ((i & !low) << 2) | (i & low);
                let (i0, i1, i2, i3) = (base, base | b1, base | b2, base | b1 | b2);
                let (v0, v3) = (self.amps[i0], self.amps[i3]);
                self.amps[i0] = g[0][0] * v0 + g[0][3] * v3;
                self.amps[i3] = g[3][0] * v0 + g[3][3] * v3;
                let (v1, v2) = (self.amps[i1], self.amps[i2]);
                self.amps[i1] = g[1][1] * v1 + g[1][2] * v2;
                self.amps[i2] = g[2][1] * v1 + g[2][2] * v2;
            }
            return Ok(());
        }
        for i in 0..self.amps.len() / 4 {
            let base = ((i & !low) << 2) | (i & low);
            let idx = [base, base | b1, base | b2, base | b1 | b2];
            let v = [
                self.amps[idx[0]],
                self.amps[idx[1]],
                self.amps[idx[2]],
                self.amps[idx[3]],
            ];
            for (r, &k) in idx.iter().enumerate() {
                let row = &g[r];
                self.amps[k] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
        Ok(())
    }

    /// `O|ψ⟩` for a monitored Pauli product.
    pub fn apply_op(&self, op: &MonitorOp) -> StateVector {
        let action = PauliAction::new(op);
        let amps = (0..self.amps.len())
            .map(|b| action.phase(b) * self.amps[b ^ action.flip])
            .collect();
        StateVector {
            n_sites: self.n_sites,
            amps,
        }
    }

    /// `⟨ψ|O|ψ⟩` without clamping or dropping the imaginary part.
    pub fn expectation_complex(&self, op: &MonitorOp) -> C64 {
        let action = PauliAction::new(op);
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| a.conj() * action.phase(b) * self.amps[b ^ action.flip])
            .sum()
    }

    /// `⟨ψ|O|ψ⟩`, clamped to `[-1, 1]`.
    pub fn expectation(&self, op: &MonitorOp) -> f64 {
        let action = PauliAction::new(op);
        let value = if action.flip == 0 {
            let mask = action.z_mask;
            self.amps
                .iter()
                .enumerate()
                .map(|(b, a)| {
                    let p = a.norm_sqr();
                    if (b & mask).count_ones() % 2 == 0 {
                        p
                    } else {
                        -p
                    }
                })
                .sum::<f64>()
        } else {
            self.expectation_complex(op).re
        };
        value.clamp(-1.0, 1.0)
    }

    /// `ψ ← (cosh c + sinh c · O) ψ = exp(c O) ψ` for an involutory `O`.
    pub fn apply_exp_op(&mut self, op: &MonitorOp, c: f64) {
        let (ch, sh) = (c.cosh(), c.sinh());
        let action = PauliAction::new(op);
        if action.flip == 0 {
            let (plus, minus) = (ch + sh, ch - sh);
            let mask = action.z_mask;
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= if (b & mask).count_ones() % 2 == 0 {
                    plus
                } else {
                    minus
                };
            }
            return;
        }
        let low_bit = action.flip & action.flip.wrapping_neg();
        for b in 0..self.amps.len() {
            if b & low_bit != 0 {
                continue;
            }
            let p = b ^ action.flip;
            let (x, y) = (self.amps[b], self.amps[p]);
            self.amps[b] = ch * x + sh * action.phase(b) * y;
            self.amps[p] = ch * y + sh * action.phase(p) * x;
        }
    }

    /// Total magnetization `⟨Σ_s σ^z_s⟩`.
    pub fn magnetization(&self) -> f64 {
        let n = self.n_sites as f64;
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * (n - 2.0 * f64::from(b.count_ones())))
            .sum()
    }

    /// Schmidt coefficients across the cut between sites `< cut` and `≥ cut`.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        if cut > self.n_sites {
            return Err(Error::SiteOutOfRange {
                site: cut,
                n_sites: self.n_sites,
            });
        }
        let rows = 1usize << cut;
        let cols = self.amps.len() / rows;
        // Column-major storage puts the low bits (left block) on the row index.
        let m = DMatrix::from_column_slice(rows, cols, &self.amps);
        Ok(m.singular_values().iter().copied().collect())
    }

    /// Von Neumann entropy (nats) of sites `0..cut`.
    pub fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        let values = self.schmidt_values(cut)?;
        Ok(entropy_from_schmidt(&values))
    }

    /// Entropy of the left half of the chain.
    pub fn half_chain_entropy(&self) -> Result<f64> {
        if self.n_sites % 2 != 0 {
            return Err(Error::InvalidLength {
                got: self.n_sites,
                min: 2,
            });
        }
        self.entanglement_entropy(self.n_sites / 2)
    }
}

/// True when the gate only mixes `{00, 11}` and `{01, 10}` (exact zeros elsewhere).
fn is_parity_block(g: &[[C64; 4]; 4]) -> bool {
    const OFF: [(usize, usize); 8] = [(0, 1), (0, 2), (3, 1), (3, 2), (1, 0), (1, 3), (2, 0), (2, 3)];
    OFF.iter().all(|&(r, c)| g[r][c] == C64::new(0.0, 0.0))
}

pub fn entropy_from_schmidt(values: &[f64]) -> f64 {
    let weights: Vec<f64> = values
        .iter()
        .filter(|&&v| v > SCHMIDT_CUTOFF)
        .map(|v| v * v)
        .collect();
    let total: f64 = weights.iter().sum();
    let s: f64 = weights
        .iter()
        .map(|w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum();
    s.max(0.0)
}

fn haar_spin<R: Rng + ?Sized>(rng: &mut R) -> [C64; 2] {
    // A normalized complex Gaussian 2-vector is Haar distributed.
    let mut g = || {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        C64::from_polar(r, std::f64::consts::TAU * u2)
    };
    let (a, b) = (g(), g());
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    [a / n, b / n]
}

/// `(O ψ)_b = phase(b) ψ_{b ⊕ flip}` for an axis-uniform Pauli product.
struct PauliAction {
    flip: usize,
    z_mask: usize,
    axis: Axis,
    y_prefactor: C64,
}

impl PauliAction {
    fn new(op: &MonitorOp) -> Self {
        let mask = op.mask();
        let (flip, z_mask) = match op.axis {
            Axis::Z => (0, mask),
            Axis::X | Axis::Y => (mask, 0),
        };
        Self {
            flip,
            z_mask,
            axis: op.axis,
            y_prefactor: C64::i().powu(op.span as u32),
        }
    }

    #[inline]
    fn phase(&self, b: usize) -> C64 {
        match self.axis {
            Axis::X => C64::new(1.0, 0.0),
            Axis::Z => {
                if (b & self.z_mask).count_ones() % 2 == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(-1.0, 0.0)
                }
            }
            // Y|↑⟩ = i|↓⟩, Y|↓⟩ = -i|↑⟩: each cleared output bit contributes -i.
            Axis::Y => {
                let zeros = self.flip.count_ones() - (b & self.flip).count_ones();
                if zeros % 2 == 0 {
                    self.y_prefactor
                } else {
                    -self.y_prefactor
                }
            }
        }
    }
}
