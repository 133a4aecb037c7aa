//! Hamiltonian family, named presets and monitored-operator sets.
//!
//! The chain Hamiltonian is
//!
//! ```text
//! H = Σ_{l=1}^{L-1} Σ_α J_α σ^α_l σ^α_{l+1}  +  h_z Σ_{l=1}^{L} (-1)^l σ^z_l
//! ```
//!
//! with open boundaries. Sites are 0-based in code, so the staggered-field
//! sign on site `s` is `(-1)^(s+1)`: site 0 carries `-h_z`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling constants of the generalized Heisenberg chain, in units of `J_x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub hz: f64,
}

/// Partial coupling overrides applied on top of a preset's defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingOverrides {
    pub jy: Option<f64>,
    pub jz: Option<f64>,
    pub hz: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    XX,
    XY,
    XXZ,
    XYZ,
    XXZz,
    XYZz,
}

pub const DEFAULT_ANISOTROPY: f64 = 0.5;
/// `J_z` for the two fully anisotropic presets, kept distinct from `J_y`.
pub const DEFAULT_XYZ_JZ: f64 = 0.25;
pub const DEFAULT_FIELD: f64 = 0.5;

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::XX,
        Preset::XY,
        Preset::XXZ,
        Preset::XYZ,
        Preset::XXZz,
        Preset::XYZz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::XX => "XX",
            Preset::XY => "XY",
            Preset::XXZ => "XXZ",
            Preset::XYZ => "XYZ",
            Preset::XXZz => "XXZz",
            Preset::XYZz => "XYZz",
        }
    }

    pub fn default_couplings(self) -> Couplings {
        let (jy, jz, hz) = match self {
            Preset::XX => (1.0, 0.0, 0.0),
            Preset::XY => (DEFAULT_ANISOTROPY, 0.0, 0.0),
            Preset::XXZ => (1.0, DEFAULT_ANISOTROPY, 0.0),
            Preset::XYZ => (DEFAULT_ANISOTROPY, DEFAULT_XYZ_JZ, 0.0),
            Preset::XXZz => (1.0, DEFAULT_ANISOTROPY, DEFAULT_FIELD),
            Preset::XYZz => (DEFAULT_ANISOTROPY, DEFAULT_XYZ_JZ, DEFAULT_FIELD),
        };
        Couplings { jx: 1.0, jy, jz, hz }
    }

    /// Checks the defining constraints of the preset, exactly.
    pub fn check(self, c: &Couplings) -> Result<()> {
        let fail = |constraint| {
            Err(Error::PresetConstraint {
                preset: self.name(),
                constraint,
            })
        };
        let isotropic = c.jx == c.jy;
        let distinct = c.jx != c.jy && c.jy != c.jz && c.jx != c.jz && c.jz != 0.0;
        match self {
            Preset::XX if !(isotropic && c.jz == 0.0 && c.hz == 0.0) => {
                fail("J_x = J_y and J_z = h_z = 0")
            }
            Preset::XY if !(!isotropic && c.jz == 0.0 && c.hz == 0.0) => {
                fail("J_x ≠ J_y and J_z = h_z = 0")
            }
            Preset::XXZ if !(isotropic && c.jz != 0.0 && c.hz == 0.0) => {
                fail("J_x = J_y, J_z ≠ 0 and h_z = 0")
            }
            Preset::XYZ if !(distinct && c.hz == 0.0) => {
                fail("J_x, J_y, J_z pairwise distinct, J_z ≠ 0 and h_z = 0")
            }
            Preset::XXZz if !(isotropic && c.jz != 0.0 && c.hz != 0.0) => {
                fail("J_x = J_y, J_z ≠ 0 and h_z ≠ 0")
            }
            Preset::XYZz if !(distinct && c.hz != 0.0) => {
                fail("J_x, J_y, J_z pairwise distinct, J_z ≠ 0 and h_z ≠ 0")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_owned()))
    }
}

/// A chain of `n_sites` spins with uniform couplings and open boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_sites: usize,
    pub couplings: Couplings,
    /// Preset this model was built from, if any.
    pub preset: Option<Preset>,
}

impl ModelSpec {
    pub fn new(n_sites: usize, couplings: Couplings) -> Result<Self> {
        check_length(n_sites, 2)?;
        Ok(Self {
            n_sites,
            couplings,
            preset: None,
        })
    }

    pub fn preset(preset: Preset, n_sites: usize) -> Result<Self> {
        Self::preset_with(preset, n_sites, CouplingOverrides::default())
    }

    pub fn preset_with(
        preset: Preset,
        n_sites: usize,
        overrides: CouplingOverrides,
    ) -> Result<Self> {
        check_length(n_sites, 4)?;
        let mut c = preset.default_couplings();
        if let Some(jy) = overrides.jy {
            c.jy = jy;
        }
        if let Some(jz) = overrides.jz {
            c.jz = jz;
        }
        if let Some(hz) = overrides.hz {
            c.hz = hz;
        }
        preset.check(&c)?;
        Ok(Self {
            n_sites,
            couplings: c,
            preset: Some(preset),
        })
    }

    /// Same couplings on a chain of a different length.
    pub fn with_length(&self, n_sites: usize) -> Result<Self> {
        check_length(n_sites, 2)?;
        Ok(Self { n_sites, ..*self })
    }

    pub fn n_bonds(&self) -> usize {
        self.n_sites - 1
    }

    /// Staggered field on 0-based site `s`, i.e. `h_z (-1)^(s+1)`.
    pub fn field_on(&self, site: usize) -> f64 {
        if site % 2 == 0 {
            -self.couplings.hz
        } else {
            self.couplings.hz
        }
    }

    pub fn is_interacting(&self) -> bool {
        self.couplings.jz != 0.0
    }

    pub fn is_integrable(&self) -> bool {
        self.couplings.hz == 0.0
    }

    pub fn conserves_magnetization(&self) -> bool {
        self.couplings.jx == self.couplings.jy
    }

    /// Short label used in series files: the preset name, or the explicit
    /// couplings for custom models.
    pub fn label(&self) -> String {
        match self.preset {
            Some(p) => p.name().to_owned(),
            None => {
                let c = &self.couplings;
                format!("custom[jx={};jy={};jz={};hz={}]", c.jx, c.jy, c.jz, c.hz)
            }
        }
    }
}

fn check_length(n_sites: usize, min: usize) -> Result<()> {
    if n_sites < min || n_sites % 2 != 0 {
        return Err(Error::InvalidLength { got: n_sites, min });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorKind {
    SingleSite,
    Bond,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSpec {
    pub kind: MonitorKind,
    pub axis: Axis,
    pub gamma: f64,
}

impl MonitorSpec {
    pub fn new(kind: MonitorKind, axis: Axis, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::NegativeRate(gamma));
        }
        Ok(Self { kind, axis, gamma })
    }

    pub fn single_site(axis: Axis, gamma: f64) -> Result<Self> {
        Self::new(MonitorKind::SingleSite, axis, gamma)
    }

    pub fn bond(axis: Axis, gamma: f64) -> Result<Self> {
        Self::new(MonitorKind::Bond, axis, gamma)
    }

    /// `"z"` for σ^z_l, `"zz"` for σ^z_l σ^z_{l+1}, and likewise for x, y.
    pub fn label(&self) -> String {
        let c = self.axis.symbol();
        match self.kind {
            MonitorKind::SingleSite => c.to_string(),
            MonitorKind::Bond => format!("{c}{c}"),
        }
    }

    /// Inverse of [`MonitorSpec::label`], with the rate supplied separately.
    pub fn from_label(label: &str, gamma: f64) -> Result<Self> {
        let axis = |c: char| match c {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        };
        let chars: Vec<char> = label.chars().collect();
        let parsed = match chars.as_slice() {
            [a] => axis(*a).map(|a| (MonitorKind::SingleSite, a)),
            [a, b] if a == b => axis(*a).map(|a| (MonitorKind::Bond, a)),
            _ => None,
        };
        let (kind, axis) = parsed
            .ok_or_else(|| Error::InvalidConfig(format!("unknown monitor label `{label}`")))?;
        Self::new(kind, axis, gamma)
    }
}

/// One monitored operator: σ^α on `first_site`, or σ^α σ^α on
/// `(first_site, first_site + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MonitorOp {
    pub axis: Axis,
    pub first_site: usize,
    pub span: usize,
}

impl MonitorOp {
    pub fn sites(&self) -> impl Iterator<Item = usize> {
        self.first_site..self.first_site + self.span
    }

    /// Bit mask of the sites the operator acts on.
    pub fn mask(&self) -> usize {
        ((1usize << self.span) - 1) << self.first_site
    }
}

impl fmt::Display for MonitorOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.sites() {
            write!(f, "σ^{}_{}", self.axis.symbol(), s + 1)?;
        }
        Ok(())
    }
}

/// Materializes the operator set: L single-site operators or L-1 bond operators.
pub fn monitored_operators(model: &ModelSpec, monitor: &MonitorSpec) -> Vec<MonitorOp> {
    let (count, span) = match monitor.kind {
        MonitorKind::SingleSite => (model.n_sites, 1),
        MonitorKind::Bond => (model.n_sites - 1, 2),
    };
    (0..count)
        .map(|first_site| MonitorOp {
            axis: monitor.axis,
            first_site,
            span,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetupClass {
    pub interacting: bool,
    pub integrable: bool,
    pub u1_symmetric: bool,
}

/// Classifies a (Hamiltonian, monitor) setup.
///
/// Measurements can make a free Hamiltonian interacting: with `J_z = 0` the
/// dynamics stays Gaussian only for single-site σ^z monitors, or for σ^x σ^x
/// bond monitors on an anisotropic (`J_x ≠ J_y`) chain.
pub fn classify(model: &ModelSpec, monitor: &MonitorSpec) -> SetupClass {
    let c = &model.couplings;
    let gaussian_monitor = match (monitor.kind, monitor.axis) {
        (MonitorKind::SingleSite, Axis::Z) => true,
        (MonitorKind::Bond, Axis::X) => c.jx != c.jy,
        _ => false,
    };
    SetupClass {
        interacting: model.is_interacting() || !gaussian_monitor,
        integrable: model.is_integrable(),
        u1_symmetric: model.conserves_magnetization() && monitor.axis == Axis::Z,
    }
}
