//! Steady strain velocity fields and the drift/reaction coefficients of the
//! Fokker–Planck form of the vorticity equation.
//!
//! The axisymmetric field is the Burgers strain `U_r = -a r`, `U_z = 2 a z`.
//! Writing the axial vorticity equation as a Fokker–Planck equation in `(r, z)`
//! gives the effective drift `B = (U_r - nu / r, U_z)` and the reaction
//! coefficient `S = d_r B_r + 2 d_z B_z + nu / r^2`.
//!
//! The planar field `U = (-2 a x, 2 a y)` is the two-dimensional control case.
//! It has no geometric `nu / r` correction and its drift is the velocity itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    Axisymmetric3D,
    Planar2D,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::Axisymmetric3D => "axisymmetric3d",
            FlowKind::Planar2D => "planar2d",
        }
    }
}

impl std::fmt::Display for FlowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "axisymmetric3d" | "axisymmetric" | "3d" => Ok(FlowKind::Axisymmetric3D),
            "planar2d" | "planar" | "2d" => Ok(FlowKind::Planar2D),
            other => Err(Error::InvalidArgument(format!("unknown flow kind {other:?}"))),
        }
    }
}

/// A particle position. For the axisymmetric flow `r` is the distance to the
/// axis; for the planar flow `r` and `z` are the compressive and stretching
/// Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub r: f64,
    pub z: f64,
}

impl State {
    pub const fn new(r: f64, z: f64) -> Self {
        Self { r, z }
    }

    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::R => self.r,
            Component::Z => self.z,
        }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.r, self.z]
    }

    pub fn from_array(v: [f64; 2]) -> Self {
        Self { r: v[0], z: v[1] }
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.z.is_finite()
    }
}

/// One of the two coordinate directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    R,
    Z,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::R, Component::Z];

    pub fn index(self) -> usize {
        match self {
            Component::R => 0,
            Component::Z => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Component::R => "R",
            Component::Z => "Z",
        }
    }
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strain rate, viscosity and flow geometry. The noise amplitude
/// `sigma = sqrt(2 nu)` is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrainConfigRepr", into = "StrainConfigRepr")]
pub struct StrainConfig {
    kind: FlowKind,
    a: f64,
    nu: f64,
}

#[derive(Serialize, Deserialize)]
struct StrainConfigRepr {
    kind: FlowKind,
    a: f64,
    nu: f64,
}

impl TryFrom<StrainConfigRepr> for StrainConfig {
    type Error = Error;

    fn try_from(r: StrainConfigRepr) -> Result<Self> {
        StrainConfig::new(r.kind, r.a, r.nu)
    }
}

impl From<StrainConfig> for StrainConfigRepr {
    fn from(c: StrainConfig) -> Self {
        Self {
            kind: c.kind,
            a: c.a,
            nu: c.nu,
        }
    }
}

impl StrainConfig {
    /// `nu = 0` is accepted and gives the noiseless drift-only dynamics.
    pub fn new(kind: FlowKind, a: f64, nu: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!("strain rate must be positive, got {a}")));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be non-negative, got {nu}")));
        }
        Ok(Self { kind, a, nu })
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sigma(&self) -> f64 {
        (2.0 * self.nu).sqrt()
    }

    fn check_domain(&self, s: State) -> Result<()> {
        if self.kind == FlowKind::Axisymmetric3D && !(s.r > 0.0) {
            return Err(Error::Domain(format!(
                "axisymmetric drift requires r > 0, got r = {}",
                s.r
            )));
        }
        Ok(())
    }

    /// Fluid velocity `(u_r, u_z)`.
    pub fn velocity(&self, s: State) -> (f64, f64) {
        match self.kind {
            FlowKind::Axisymmetric3D => (-self.a * s.r, 2.0 * self.a * s.z),
            FlowKind::Planar2D => (-2.0 * self.a * s.r, 2.0 * self.a * s.z),
        }
    }

    /// Effective Fokker–Planck drift.
    pub fn drift(&self, s: State) -> Result<(f64, f64)> {
        self.check_domain(s)?;
        let (ur, uz) = self.velocity(s);
        Ok(match self.kind {
            FlowKind::Axisymmetric3D => (ur - self.nu / s.r, uz),
            FlowKind::Planar2D => (ur, uz),
        })
    }

    /// Zeroth-order reaction coefficient `S`.
    ///
    /// For the planar flow the same structural formula is used without the
    /// `nu / r^2` term, giving `S = 2 a`.
    pub fn reaction(&self, s: State) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match self.kind {
            // d_r B_r = -a + nu / r^2, 2 d_z B_z = 4a
            FlowKind::Axisymmetric3D => 3.0 * self.a + 2.0 * self.nu / (s.r * s.r),
            FlowKind::Planar2D => 2.0 * self.a,
        })
    }

    /// External forcing `F = omega_r d_r U_z`. The strain fields here have
    /// `U_z` independent of `r`, so `F` vanishes identically.
    pub fn forcing(&self, _s: State) -> f64 {
        0.0
    }
}
