//! Discretisation lattice and medium constants.

use crate::error::{GemError, Result};

/// Default number of steps between stored `(alpha, E)` snapshots.
pub const DEFAULT_SNAPSHOT_STRIDE: usize = 10;

/// The `(t, z)` lattice. Lengths in mm, times in us.
///
/// The medium is sampled at `nz` points `z_j = j * dz` covering `[0, L]`
/// inclusive, and time advances in `n_steps()` equal steps of `dt_us`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationGrid {
    length_mm: f64,
    nz: usize,
    t_end_us: f64,
    dt_us: f64,
    snapshot_stride: usize,
}

impl SimulationGrid {
    pub fn new(length_mm: f64, nz: usize, t_end_us: f64, dt_us: f64) -> Result<Self> {
        if nz < 2 {
            return Err(GemError::Contract(format!("nz must be at least 2, got {nz}")));
        }
        if !(length_mm.is_finite() && length_mm > 0.0) {
            return Err(GemError::Contract(format!("length must be positive, got {length_mm} mm")));
        }
        if !(dt_us.is_finite() && dt_us > 0.0) {
            return Err(GemError::Contract(format!("dt must be positive, got {dt_us} us")));
        }
        if !(t_end_us.is_finite() && t_end_us >= dt_us) {
            return Err(GemError::Contract(format!(
                "t_end ({t_end_us} us) must be at least dt ({dt_us} us)"
            )));
        }
        Ok(Self {
            length_mm,
            nz,
            t_end_us,
            dt_us,
            snapshot_stride: DEFAULT_SNAPSHOT_STRIDE,
        })
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(GemError::Contract("snapshot stride must be at least 1".into()));
        }
        self.snapshot_stride = stride;
        Ok(self)
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn t_end_us(&self) -> f64 {
        self.t_end_us
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_us
    }

    pub fn snapshot_stride(&self) -> usize {
        self.snapshot_stride
    }

    pub fn dz(&self) -> f64 {
        self.length_mm / (self.nz - 1) as f64
    }

    /// Number of time steps; the march ends at `n_steps() * dt`.
    pub fn n_steps(&self) -> usize {
        (self.t_end_us / self.dt_us).round() as usize
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt_us
    }

    pub fn z_grid(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.nz).map(|j| j as f64 * dz).collect()
    }

    /// Snaps a time to the nearest step boundary.
    pub fn snap_time(&self, t_us: f64) -> f64 {
        (t_us / self.dt_us).round() * self.dt_us
    }

    /// The same lattice with `factor` times more z intervals and `factor`
    /// times smaller steps. Every base node and step boundary is kept.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(GemError::Contract("refinement must be at least 1".into()));
        }
        let nz = (self.nz - 1) * factor + 1;
        let dt = self.dt_us / factor as f64;
        let t_end = self.n_steps() as f64 * self.dt_us;
        Ok(Self {
            length_mm: self.length_mm,
            nz,
            t_end_us: t_end,
            dt_us: dt,
            snapshot_stride: self.snapshot_stride * factor,
        })
    }

    /// Trapezoid weights (1/2 at both ends, 1 inside).
    pub(crate) fn trapezoid_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.nz {
            0.5
        } else {
            1.0
        }
    }
}

/// Coupling constants of the medium.
///
/// `g` is the atom-light coupling (rad/us per unit field) and `n_linear`
/// the field-normalised linear density N (per mm). The effective optical
/// depth is always derived from these and the schedule slope, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    g: f64,
    n_linear: f64,
}

impl MediumParams {
    pub fn new(g: f64, n_linear: f64) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(GemError::Contract(format!("g must be finite and non-negative, got {g}")));
        }
        if !(n_linear.is_finite() && n_linear >= 0.0) {
            return Err(GemError::Contract(format!(
                "N must be finite and non-negative, got {n_linear}"
            )));
        }
        Ok(Self { g, n_linear })
    }

    /// Medium with `g = 1` and N chosen so that `g^2 N / |eta0| = beta`.
    pub fn from_beta(beta: f64, eta0: f64) -> Result<Self> {
        Self::from_beta_with_g(beta, eta0, 1.0)
    }

    pub fn from_beta_with_g(beta: f64, eta0: f64, g: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(GemError::Contract(format!("beta must be non-negative, got {beta}")));
        }
        if eta0 == 0.0 || !eta0.is_finite() {
            return Err(GemError::Contract("degenerate gradient: eta0 must be non-zero".into()));
        }
        if beta > 0.0 && g == 0.0 {
            return Err(GemError::Contract("g = 0 cannot realise a non-zero beta".into()));
        }
        let n = if beta == 0.0 { 0.0 } else { beta * eta0.abs() / (g * g) };
        Self::new(g, n)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n_linear(&self) -> f64 {
        self.n_linear
    }

    /// `g^2 N / |eta0|`.
    pub fn beta(&self, eta0: f64) -> f64 {
        self.g * self.g * self.n_linear / eta0.abs()
    }
}
