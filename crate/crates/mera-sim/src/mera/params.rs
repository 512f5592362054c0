use crate::error::{Error, Result};
use crate::gates::GateOp;
use serde::{Deserialize, Serialize};

pub const PARAMS_VERSION: u32 = 1;

/// Six variable gates of one binary-MERA layer.
///
/// The isometry acts on (parent, fresh |0⟩) and emits the children
/// (2k, 2k+1) = (parent leg, fresh leg). The disentangler acts on the
/// children (2k+1, 2k+2).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnitCell {
    pub iso_xy: f64,
    pub iso_yx: f64,
    pub iso_ry_left: f64,
    pub iso_ry_right: f64,
    pub dis_xy: f64,
    pub dis_yx: f64,
}

impl UnitCell {
    pub const N: usize = 6;

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.iso_xy, self.iso_yx, self.iso_ry_left, self.iso_ry_right, self.dis_xy, self.dis_yx]
    }

    pub fn from_slice(a: &[f64]) -> Self {
        Self { iso_xy: a[0], iso_yx: a[1], iso_ry_left: a[2], iso_ry_right: a[3], dis_xy: a[4], dis_yx: a[5] }
    }

    /// Isometry gates on (parent, fresh). When the parent is known to be |0⟩
    /// the commuting XY·YX pair collapses to a single XY(a+b).
    pub fn iso_gates(&self, parent: usize, fresh: usize, parent_is_zero: bool) -> Vec<GateOp> {
        let mut g = if parent_is_zero {
            vec![GateOp::xy(parent, fresh, self.iso_xy + self.iso_yx)]
        } else {
            vec![GateOp::xy(parent, fresh, self.iso_xy), GateOp::yx(parent, fresh, self.iso_yx)]
        };
        g.push(GateOp::ry(parent, self.iso_ry_left));
        g.push(GateOp::ry(fresh, self.iso_ry_right));
        g
    }

    pub fn dis_gates(&self, left: usize, right: usize) -> Vec<GateOp> {
        vec![GateOp::xy(left, right, self.dis_xy), GateOp::yx(left, right, self.dis_yx)]
    }
}

/// Two-site top state: XY on |00⟩ followed by Ry on each site.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TopAngles {
    pub xy: f64,
    pub ry_left: f64,
    pub ry_right: f64,
}

impl TopAngles {
    pub const N: usize = 3;

    pub fn to_array(&self) -> [f64; 3] {
        [self.xy, self.ry_left, self.ry_right]
    }

    pub fn from_slice(a: &[f64]) -> Self {
        Self { xy: a[0], ry_left: a[1], ry_right: a[2] }
    }

    pub fn gates(&self, left: usize, right: usize) -> Vec<GateOp> {
        vec![GateOp::xy(left, right, self.xy), GateOp::ry(left, self.ry_left), GateOp::ry(right, self.ry_right)]
    }

    /// Amplitudes of the prepared two-site state.
    pub fn state(&self) -> Vec<num_complex::Complex64> {
        let mut s = crate::gates::StateVector::zero(2);
        s.apply_ops(&self.gates(0, 1)).expect("two-qubit register");
        s.amplitudes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    FiniteT,
    ScaleInvariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeraParams {
    pub version: u32,
    pub flavor: Flavor,
    /// Layer cells ordered bottom (physical) first. Scale-invariant MERA keep
    /// exactly one shared cell.
    pub layers: Vec<UnitCell>,
    #[serde(default)]
    pub top: Option<TopAngles>,
}

impl MeraParams {
    pub fn finite(layers: Vec<UnitCell>) -> Self {
        Self { version: PARAMS_VERSION, flavor: Flavor::FiniteT, layers, top: None }
    }

    pub fn scale_invariant(cell: UnitCell) -> Self {
        Self { version: PARAMS_VERSION, flavor: Flavor::ScaleInvariant, layers: vec![cell], top: None }
    }

    pub fn identity_finite(t: usize) -> Self {
        Self::finite(vec![UnitCell::identity(); t])
    }

    pub fn with_top(mut self, top: Option<TopAngles>) -> Self {
        self.top = top;
        self
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != PARAMS_VERSION {
            return Err(Error::InvalidInput(format!("unsupported params version {}", self.version)));
        }
        if self.layers.is_empty() {
            return Err(Error::InvalidInput("no unit cells".into()));
        }
        if self.flavor == Flavor::ScaleInvariant && self.layers.len() != 1 {
            return Err(Error::InvalidInput("scale-invariant MERA has one shared cell".into()));
        }
        let all = self.layers.iter().flat_map(|c| c.to_array()).chain(self.top.iter().flat_map(|t| t.to_array()));
        if all.into_iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("non-finite angle".into()));
        }
        Ok(())
    }

    /// Check that `t` layers can be built from these parameters.
    pub fn check_depth(&self, t: usize) -> Result<()> {
        self.validate()?;
        if t == 0 {
            return Err(Error::InvalidInput("T must be at least 1".into()));
        }
        if self.flavor == Flavor::FiniteT && t != self.layers.len() {
            return Err(Error::InvalidInput(format!("finite-T params have {} layers but T = {t}", self.layers.len())));
        }
        Ok(())
    }

    /// Cell of layer `tau`, counted from 1 at the physical layer.
    pub fn cell(&self, tau: usize) -> &UnitCell {
        match self.flavor {
            Flavor::ScaleInvariant => &self.layers[0],
            Flavor::FiniteT => &self.layers[tau - 1],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.layers.iter().flat_map(|c| c.to_array()).collect();
        if let Some(t) = &self.top {
            v.extend(t.to_array());
        }
        v
    }

    pub fn from_vec(&self, v: &[f64]) -> Self {
        let n = self.layers.len();
        let layers = (0..n).map(|i| UnitCell::from_slice(&v[6 * i..6 * i + 6])).collect();
        let top = self.top.map(|_| TopAngles::from_slice(&v[6 * n..6 * n + 3]));
        Self { version: self.version, flavor: self.flavor, layers, top }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: MeraParams = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}
