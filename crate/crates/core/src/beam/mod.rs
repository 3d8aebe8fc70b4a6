//! Nondimensional finite-element model of a von Kármán beam with
//! Kelvin–Voigt damping.
//!
//! Transverse deflection `w` uses cubic Hermite elements (deflection and
//! slope per node), axial displacement `u` uses linear elements. With
//! `x` the free transverse DOFs and `y` the free axial DOFs, the assembled
//! equations of motion read
//!
//! ```text
//! M₁ẍ + ζε(K₁ + C(x))ẋ + ζD(x)ẏ + K₁x + F(x,y)/ε + G(x) = α q(τ)
//! M₂ÿ + (ζ/ε)K₂ẏ + ζE(x)ẋ + K₂y/ε² + H(x)/ε           = β p(τ)
//! ```
//!
//! The nonlinear terms are never stored as tensors; they are evaluated by
//! element loops over the slope fields `w_x` and axial strains `u_x`.

mod element;
mod forces;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{generalized_symmetric_eigen, SpdFactor};

pub use element::ElementTables;

/// Boundary conditions applied at both beam ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    /// `w = 0`, `u = 0`, slope free.
    #[default]
    PinnedPinned,
    /// `w = 0`, `w_x = 0`, `u = 0`.
    ClampedClamped,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::PinnedPinned => write!(f, "pinned-pinned"),
            BoundaryCondition::ClampedClamped => write!(f, "clamped-clamped"),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pinned-pinned" | "pinned" | "pp" => Ok(Self::PinnedPinned),
            "clamped-clamped" | "clamped" | "cc" => Ok(Self::ClampedClamped),
            other => Err(Error::InvalidConfig(format!("unknown boundary condition `{other}`"))),
        }
    }
}

/// Time signal multiplying the spatial load profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeSignal {
    /// `sin(Ω̂ τ)`
    #[default]
    Sine,
    /// No external load.
    Off,
}

/// Spatial profile of the distributed load. Only uniform loads are modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadProfile {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForcingSpec {
    pub profile: LoadProfile,
    pub signal: TimeSignal,
    /// Nondimensional frequency Ω̂. `None` resolves to the first undamped
    /// transverse frequency of the assembled model.
    pub frequency: Option<f64>,
}

impl ForcingSpec {
    pub fn off() -> Self {
        Self {
            signal: TimeSignal::Off,
            ..Self::default()
        }
    }
}

/// Physical and nondimensional beam parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    /// Length `L` (m).
    pub length: f64,
    /// Thickness-to-length ratio ε.
    pub eps: f64,
    /// Young's modulus `E` (Pa).
    pub youngs_modulus: f64,
    /// Density ρ (kg/m³).
    pub density: f64,
    /// Material viscous damping rate κ (Pa·s).
    pub kappa: f64,
    /// Dimensionless damping ζ; derived from the material data when `None`.
    pub zeta: Option<f64>,
    /// Transverse load scale.
    pub alpha: f64,
    /// Axial load scale.
    pub beta: f64,
    pub n_elements: usize,
    pub bc: BoundaryCondition,
    pub forcing: ForcingSpec,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            eps: 1e-3,
            youngs_modulus: 70e9,
            density: 2700.0,
            kappa: 1e8,
            zeta: None,
            alpha: 1.0,
            beta: 1.0,
            n_elements: 20,
            bc: BoundaryCondition::PinnedPinned,
            forcing: ForcingSpec::default(),
        }
    }
}

/// ζ = κ / (L √(ρ E)).
pub fn material_zeta(length: f64, youngs_modulus: f64, density: f64, kappa: f64) -> f64 {
    kappa / (length * (density * youngs_modulus).sqrt())
}

impl BeamConfig {
    pub fn zeta(&self) -> f64 {
        self.zeta.unwrap_or_else(|| {
            material_zeta(self.length, self.youngs_modulus, self.density, self.kappa)
        })
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_elements(mut self, n: usize) -> Self {
        self.n_elements = n;
        self
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = Some(zeta);
        self
    }

    pub fn with_forcing(mut self, forcing: ForcingSpec) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("L", self.length),
            ("eps", self.eps),
            ("E_mod", self.youngs_modulus),
            ("rho", self.density),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        match self.zeta {
            Some(z) if !(z >= 0.0 && z.is_finite()) => {
                return Err(Error::InvalidConfig(format!("zeta must be non-negative, got {z}")))
            }
            None if !(self.kappa >= 0.0 && self.kappa.is_finite()) => {
                return Err(Error::InvalidConfig(format!(
                    "kappa must be non-negative, got {}",
                    self.kappa
                )))
            }
            _ => {}
        }
        if self.n_elements < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_elements must be at least 2, got {}",
                self.n_elements
            )));
        }
        if let Some(w) = self.forcing.frequency {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "forcing frequency must be positive, got {w}"
                )));
            }
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidConfig("alpha and beta must be finite".into()));
        }
        Ok(())
    }
}

/// Assembled, boundary-condition-reduced beam model. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct AssembledBeam {
    config: BeamConfig,
    zeta: f64,
    forcing_frequency: f64,
    tables: ElementTables,
    /// Full transverse DOF (2 per node) → free index.
    transverse_map: Vec<Option<usize>>,
    /// Full axial DOF (1 per node) → free index.
    axial_map: Vec<Option<usize>>,
    n_s: usize,
    n_f: usize,
    m1: DMatrix<f64>,
    k1: DMatrix<f64>,
    m2: DMatrix<f64>,
    k2: DMatrix<f64>,
    m1_factor: SpdFactor,
    k2_factor: SpdFactor,
    transverse_load: DVector<f64>,
    axial_load: DVector<f64>,
    transverse_load_free_mesh: DVector<f64>,
}

/// Builds the free-DOF maps for a boundary condition.
fn dof_maps(n_elements: usize, bc: BoundaryCondition) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let nodes = n_elements + 1;
    let mut constrained_t = vec![false; 2 * nodes];
    constrained_t[0] = true;
    constrained_t[2 * (nodes - 1)] = true;
    if bc == BoundaryCondition::ClampedClamped {
        constrained_t[1] = true;
        constrained_t[2 * (nodes - 1) + 1] = true;
    }
    let mut next = 0;
    let t_map = constrained_t
        .iter()
        .map(|&c| {
            (!c).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    let a_map = (0..nodes)
        .map(|n| (n != 0 && n != nodes - 1).then(|| n - 1))
        .collect();
    (t_map, a_map)
}

/// Assembles the beam for `config`.
pub fn assemble(config: &BeamConfig) -> Result<AssembledBeam> {
    config.validate()?;
    let ne = config.n_elements;
    let h = 1.0 / ne as f64;
    let tables = ElementTables::new(h);
    let (transverse_map, axial_map) = dof_maps(ne, config.bc);
    let n_s = transverse_map.iter().flatten().count();
    let n_f = axial_map.iter().flatten().count();

    let mut m1 = DMatrix::zeros(n_s, n_s);
    let mut k1 = DMatrix::zeros(n_s, n_s);
    let mut m2 = DMatrix::zeros(n_f, n_f);
    let mut k2 = DMatrix::zeros(n_f, n_f);
    let mut transverse_load = DVector::zeros(n_s);
    let mut axial_load = DVector::zeros(n_f);
    let mut transverse_load_free_mesh = DVector::zeros(2 * (ne + 1));

    let (me, ke, qe) = tables.transverse_element_matrices();
    let (ma, ka, pa) = tables.axial_element_matrices();
    for e in 0..ne {
        let td = element::transverse_dofs(e);
        for (a, &ga) in td.iter().enumerate() {
            transverse_load_free_mesh[ga] += qe[a];
            let Some(ia) = transverse_map[ga] else { continue };
            transverse_load[ia] += qe[a];
            for (b, &gb) in td.iter().enumerate() {
                if let Some(ib) = transverse_map[gb] {
                    m1[(ia, ib)] += me[a][b];
                    k1[(ia, ib)] += ke[a][b];
                }
            }
        }
        let ad = element::axial_dofs(e);
        for (a, &ga) in ad.iter().enumerate() {
            let Some(ia) = axial_map[ga] else { continue };
            axial_load[ia] += pa[a];
            for (b, &gb) in ad.iter().enumerate() {
                if let Some(ib) = axial_map[gb] {
                    m2[(ia, ib)] += ma[a][b];
                    k2[(ia, ib)] += ka[a][b];
                }
            }
        }
    }

    let m1_factor = SpdFactor::new(&m1, "M1")?;
    SpdFactor::new(&k1, "K1")?;
    SpdFactor::new(&m2, "M2")?;
    let k2_factor = SpdFactor::new(&k2, "K2").map_err(|e| match e {
        Error::NotPositiveDefinite(_) | Error::Singular(_) => {
            Error::Singular("K2 after boundary-condition elimination".into())
        }
        other => other,
    })?;

    let forcing_frequency = match config.forcing.frequency {
        Some(w) => w,
        None => {
            let (w2, _) = generalized_symmetric_eigen(&k1, &m1)?;
            w2[0].sqrt()
        }
    };

    Ok(AssembledBeam {
        zeta: config.zeta(),
        config: config.clone(),
        forcing_frequency,
        tables,
        transverse_map,
        axial_map,
        n_s,
        n_f,
        m1,
        k1,
        m2,
        k2,
        m1_factor,
        k2_factor,
        transverse_load,
        axial_load,
        transverse_load_free_mesh,
    })
}

impl AssembledBeam {
    pub fn config(&self) -> &BeamConfig {
        &self.config
    }
    pub fn eps(&self) -> f64 {
        self.config.eps
    }
    pub fn zeta(&self) -> f64 {
        self.zeta
    }
    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }
    pub fn beta(&self) -> f64 {
        self.config.beta
    }
    /// Transverse (slow) DOF count.
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    /// Axial (fast) DOF count.
    pub fn n_f(&self) -> usize {
        self.n_f
    }
    pub fn m1(&self) -> &DMatrix<f64> {
        &self.m1
    }
    pub fn k1(&self) -> &DMatrix<f64> {
        &self.k1
    }
    pub fn m2(&self) -> &DMatrix<f64> {
        &self.m2
    }
    pub fn k2(&self) -> &DMatrix<f64> {
        &self.k2
    }
    pub fn m1_factor(&self) -> &SpdFactor {
        &self.m1_factor
    }
    pub fn k2_factor(&self) -> &SpdFactor {
        &self.k2_factor
    }
    pub fn element_length(&self) -> f64 {
        self.tables.h
    }
    /// Resolved nondimensional forcing frequency Ω̂.
    pub fn forcing_frequency(&self) -> f64 {
        self.forcing_frequency
    }
    pub fn forcing_period(&self) -> f64 {
        2.0 * PI / self.forcing_frequency
    }

    /// Free transverse index of node `node`'s deflection, if unconstrained.
    pub fn deflection_dof(&self, node: usize) -> Option<usize> {
        self.transverse_map.get(2 * node).copied().flatten()
    }

    /// Free axial index of node `node`, if unconstrained.
    pub fn axial_dof(&self, node: usize) -> Option<usize> {
        self.axial_map.get(node).copied().flatten()
    }

    /// Node closest to the quarter-length point.
    pub fn quarter_node(&self) -> usize {
        ((self.config.n_elements as f64) * 0.25).round() as usize
    }

    /// Nodal deflection at every mesh node (constrained nodes read zero).
    pub fn nodal_deflections(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..=self.config.n_elements)
            .map(|n| self.deflection_dof(n).map_or(0.0, |i| x[i]))
            .collect()
    }

    fn time_factors(&self, tau: f64) -> (f64, f64) {
        match self.config.forcing.signal {
            TimeSignal::Off => (0.0, 0.0),
            TimeSignal::Sine => {
                let w = self.forcing_frequency;
                ((w * tau).sin(), w * (w * tau).cos())
            }
        }
    }

    /// Consistent nodal loads `(α q(τ), β p(τ))` for the uniform load with
    /// time factor `sin(Ω̂τ)`.
    pub fn load_vectors(&self, tau: f64) -> (DVector<f64>, DVector<f64>) {
        let (s, _) = self.time_factors(tau);
        (
            &self.transverse_load * (self.config.alpha * s),
            &self.axial_load * (self.config.beta * s),
        )
    }

    /// Time derivatives `(α q̇(τ), β ṗ(τ))`.
    pub fn load_rates(&self, tau: f64) -> (DVector<f64>, DVector<f64>) {
        let (_, c) = self.time_factors(tau);
        (
            &self.transverse_load * (self.config.alpha * c),
            &self.axial_load * (self.config.beta * c),
        )
    }

    /// Consistent unit-load vector on the unconstrained mesh (force and
    /// moment entries per node).
    pub fn free_mesh_transverse_load(&self) -> &DVector<f64> {
        &self.transverse_load_free_mesh
    }

    pub(crate) fn check_len(&self, context: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::DimensionMismatch { context, expected, got });
        }
        Ok(())
    }
}
