//! Independent checks of the main solver.
//!
//! The reference integrator shares no stepping code with [`crate::solver`].
//! It applies classical RK4 to the method-of-lines system directly, with the
//! envelope recomputed by its own trapezoid sweep at every stage, on a
//! lattice refined in both z and t.

use num_complex::Complex64;

use crate::error::{GemError, Result};
use crate::grid::{MediumParams, SimulationGrid};
use crate::pulse::PulseSpec;
use crate::schedule::{GradientSchedule, ValidatedSchedule};
use crate::solver::{EventLogEntry, Scenario, SimulationResult, Snapshots, TimeSeries};

/// Default ceiling on the reference run's working memory.
pub const DEFAULT_MEMORY_LIMIT_MB: f64 = 2048.0;

/// Relative difference below which two runs are considered identical.
const EXACT_FLOOR: f64 = 1e-13;

/// RK4 reference run on the lattice refined by `refinement`, sampled back
/// onto the base grid.
pub fn reference_run(
    grid: &SimulationGrid,
    medium: &MediumParams,
    schedule: &GradientSchedule,
    pulse: &PulseSpec,
    refinement: usize,
) -> Result<SimulationResult> {
    reference_run_with_limit(grid, medium, schedule, pulse, refinement, DEFAULT_MEMORY_LIMIT_MB)
}

/// [`reference_run`] with an explicit memory ceiling in MB.
pub fn reference_run_with_limit(
    grid: &SimulationGrid,
    medium: &MediumParams,
    schedule: &GradientSchedule,
    pulse: &PulseSpec,
    refinement: usize,
    limit_mb: f64,
) -> Result<SimulationResult> {
    if refinement < 2 {
        return Err(GemError::Contract(format!(
            "refinement must be at least 2, got {refinement}"
        )));
    }
    let needed_mb = estimate_memory_mb(grid, refinement);
    if needed_mb > limit_mb {
        return Err(GemError::MemoryGuard { needed_mb, limit_mb });
    }
    pulse.validate()?;
    // Event times stay snapped to the base step so both solvers see the
    // same schedule; every base step is a whole number of fine steps.
    let validated = schedule.validate(grid)?;
    let fine = grid.refined(refinement)?;
    Rk4::new(grid, &fine, medium, &validated, pulse, refinement).run()
}

fn estimate_memory_mb(grid: &SimulationGrid, refinement: usize) -> f64 {
    let fine_nz = ((grid.nz() - 1) * refinement + 1) as f64;
    let work = 8.0 * fine_nz * 16.0;
    let series = (grid.n_steps() + 1) as f64 * (2.0 * 16.0 + 8.0);
    let rows = (grid.n_steps() / grid.snapshot_stride() + 1) as f64;
    let snaps = 2.0 * rows * grid.nz() as f64 * 16.0;
    (work + series + snaps) / (1024.0 * 1024.0)
}

struct Rk4<'a> {
    base: &'a SimulationGrid,
    fine: SimulationGrid,
    medium: &'a MediumParams,
    schedule: &'a ValidatedSchedule,
    pulse: &'a PulseSpec,
    factor: usize,
    z: Vec<f64>,
}

impl<'a> Rk4<'a> {
    fn new(
        base: &'a SimulationGrid,
        fine: &SimulationGrid,
        medium: &'a MediumParams,
        schedule: &'a ValidatedSchedule,
        pulse: &'a PulseSpec,
        factor: usize,
    ) -> Self {
        Self {
            base,
            fine: fine.clone(),
            medium,
            schedule,
            pulse,
            factor,
            z: fine.z_grid(),
        }
    }

    /// `E_j = b + i g N dz * sum of trapezoid cells up to z_j`.
    fn envelope(&self, alpha: &[Complex64], b: Complex64, out: &mut [Complex64]) {
        let k = Complex64::new(0.0, self.medium.g() * self.medium.n_linear() * self.fine.dz());
        let mut running = Complex64::new(0.0, 0.0);
        out[0] = b;
        for j in 1..alpha.len() {
            running += 0.5 * (alpha[j - 1] + alpha[j]);
            out[j] = b + k * running;
        }
    }

    /// `d alpha / dt = -i eta alpha + i g E(alpha, b)`.
    fn rhs(&self, alpha: &[Complex64], eta: &[f64], b: Complex64, e: &mut [Complex64], out: &mut [Complex64]) {
        self.envelope(alpha, b, e);
        let ig = Complex64::new(0.0, self.medium.g());
        for j in 0..alpha.len() {
            out[j] = Complex64::new(0.0, -eta[j]) * alpha[j] + ig * e[j];
        }
    }

    fn stored(&self, alpha: &[Complex64]) -> f64 {
        let sum: f64 = alpha
            .iter()
            .enumerate()
            .map(|(j, a)| self.fine.trapezoid_weight(j) * a.norm_sqr())
            .sum();
        self.medium.n_linear() * self.fine.dz() * sum
    }

    fn run(self) -> Result<SimulationResult> {
        let nz = self.fine.nz();
        let h = self.fine.dt_us();
        let n_fine = self.base.n_steps() * self.factor;
        let snap_every = self.base.snapshot_stride() * self.factor;
        let zero = Complex64::new(0.0, 0.0);

        let mut alpha = vec![zero; nz];
        let mut e = vec![zero; nz];
        let mut stage = vec![zero; nz];
        let mut k1 = vec![zero; nz];
        let mut k2 = vec![zero; nz];
        let mut k3 = vec![zero; nz];
        let mut k4 = vec![zero; nz];

        let base_nz = self.base.nz();
        let mut input = Vec::with_capacity(self.base.n_steps() + 1);
        let mut output = Vec::with_capacity(self.base.n_steps() + 1);
        let mut stored = Vec::with_capacity(self.base.n_steps() + 1);
        let mut alpha_snaps = Snapshots {
            nz: base_nz,
            ..Snapshots::default()
        };
        let mut e_snaps = Snapshots {
            nz: base_nz,
            ..Snapshots::default()
        };
        let mut row = vec![zero; base_nz];

        let mut eta = self.schedule.eta_profile(0.5 * h, &self.z);
        let mut eta_time = 0.5 * h;

        for n in 0..=n_fine {
            let t = n as f64 * h;
            if n % self.factor == 0 {
                let b = self.pulse.sample(t);
                self.envelope(&alpha, b, &mut e);
                if let Some(index) = alpha.iter().position(|a| !a.is_finite()) {
                    return Err(GemError::Divergence { t_us: t, index });
                }
                input.push(b);
                output.push(e[nz - 1]);
                stored.push(self.stored(&alpha));
                if n % snap_every == 0 {
                    for (i, r) in row.iter_mut().enumerate() {
                        *r = alpha[i * self.factor];
                    }
                    alpha_snaps.push(t, &row);
                    for (i, r) in row.iter_mut().enumerate() {
                        *r = e[i * self.factor];
                    }
                    e_snaps.push(t, &row);
                }
            }
            if n == n_fine {
                break;
            }

            let mid = t + 0.5 * h;
            if self.schedule.changes_between(eta_time, mid) {
                eta = self.schedule.eta_profile(mid, &self.z);
            }
            eta_time = mid;
            let b0 = self.pulse.sample(t);
            let bm = self.pulse.sample(mid);
            let b1 = self.pulse.sample(t + h);

            self.rhs(&alpha, &eta, b0, &mut e, &mut k1);
            for j in 0..nz {
                stage[j] = alpha[j] + 0.5 * h * k1[j];
            }
            self.rhs(&stage, &eta, bm, &mut e, &mut k2);
            for j in 0..nz {
                stage[j] = alpha[j] + 0.5 * h * k2[j];
            }
            self.rhs(&stage, &eta, bm, &mut e, &mut k3);
            for j in 0..nz {
                stage[j] = alpha[j] + h * k3[j];
            }
            self.rhs(&stage, &eta, b1, &mut e, &mut k4);
            for j in 0..nz {
                alpha[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }

        let dt = self.base.dt_us();
        let event_log = self
            .schedule
            .events()
            .iter()
            .filter_map(|ev| {
                let t = ev.snapped_t_us?;
                let t_last = self.schedule.line_flip_span(&ev.event).map_or(t, |(_, hi)| hi);
                Some(EventLogEntry {
                    t_us: t,
                    t_last_us: t_last,
                    requested_t_us: ev.requested_t_us,
                    source_index: ev.source_index,
                    event: ev.event.clone(),
                })
            })
            .collect();
        Ok(SimulationResult {
            input_series: TimeSeries::new(0.0, dt, input),
            output_series: TimeSeries::new(0.0, dt, output),
            alpha_snapshots: alpha_snaps,
            e_snapshots: e_snaps,
            event_log,
            grid: self.base.clone(),
            medium: *self.medium,
            schedule: self.schedule.clone(),
            stored_excitation_series: stored,
        })
    }
}

/// `alpha0 * exp(-i eta t)` elementwise.
pub fn analytic_free_evolution(alpha0: &[Complex64], eta_profile: &[f64], t_us: f64) -> Vec<Complex64> {
    alpha0
        .iter()
        .zip(eta_profile)
        .map(|(a, &eta)| a * Complex64::from_polar(1.0, -eta * t_us))
        .collect()
}

/// `||a - b|| / ||b||` over paired samples.
pub fn l2_relative(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GemError::Contract(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Runs the main solver and the reference integrator and returns the
/// relative L2 difference of their output series.
pub fn oracle_agreement(scenario: &Scenario, refinement: usize) -> Result<f64> {
    let main = scenario.run()?;
    let reference = reference_run(
        &scenario.grid,
        &scenario.medium,
        &scenario.schedule,
        &scenario.pulse,
        refinement,
    )?;
    l2_relative(&main.output_series.values, &reference.output_series.values)
}

/// Warnings attached to a convergence measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceFlag {
    /// Differences sit at the rounding floor; no order can be measured.
    ExactRegime,
    /// Differences did not shrink monotonically, typically an
    /// event-snapping artifact.
    NonMonotone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps_us: Vec<f64>,
    /// Relative L2 difference of output series between successive steps,
    /// sampled on the coarsest grid.
    pub differences: Vec<f64>,
    /// Order from each pair of successive differences.
    pub pairwise_orders: Vec<f64>,
    /// Order from the finest pair, if measurable.
    pub order: Option<f64>,
    pub flags: Vec<ConvergenceFlag>,
}

/// Runs `scenario` at each step in `steps_us` (a geometric progression with
/// an integer ratio) and estimates the temporal order of convergence.
pub fn convergence_order(scenario: &Scenario, steps_us: &[f64]) -> Result<ConvergenceReport> {
    if steps_us.len() < 3 {
        return Err(GemError::Contract("need at least three step sizes".into()));
    }
    let ratio = steps_us[0] / steps_us[1];
    let factor = ratio.round();
    if factor < 2.0 || (ratio - factor).abs() > 1e-9 * factor {
        return Err(GemError::Contract(format!(
            "step ratio {ratio} is not an integer of at least 2"
        )));
    }
    for w in steps_us.windows(2) {
        if ((w[0] / w[1]) - ratio).abs() > 1e-9 * ratio {
            return Err(GemError::Contract("steps are not a geometric progression".into()));
        }
    }

    let mut outputs = Vec::with_capacity(steps_us.len());
    for (i, &dt) in steps_us.iter().enumerate() {
        let r = scenario.with_dt(dt)?.run()?;
        let stride = (factor as usize).pow(i as u32);
        outputs.push(r.output_series.values.iter().step_by(stride).copied().collect::<Vec<_>>());
    }
    let n = outputs.iter().map(Vec::len).min().unwrap_or(0);
    let mut differences = Vec::with_capacity(outputs.len() - 1);
    for w in outputs.windows(2) {
        differences.push(l2_relative(&w[0][..n], &w[1][..n])?);
    }

    let mut flags = Vec::new();
    if differences.iter().all(|&d| d < EXACT_FLOOR) {
        flags.push(ConvergenceFlag::ExactRegime);
    }
    if differences.windows(2).any(|w| w[1] >= w[0]) && !flags.contains(&ConvergenceFlag::ExactRegime) {
        flags.push(ConvergenceFlag::NonMonotone);
    }
    let pairwise_orders: Vec<f64> = differences
        .windows(2)
        .map(|w| (w[0] / w[1]).ln() / factor.ln())
        .collect();
    let order = if flags.contains(&ConvergenceFlag::ExactRegime) {
        None
    } else {
        pairwise_orders.last().copied().filter(|p| p.is_finite())
    };
    Ok(ConvergenceReport {
        steps_us: steps_us.to_vec(),
        differences,
        pairwise_orders,
        order,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{advance_polarization, FieldState};
    use std::f64::consts::PI;

    #[test]
    fn free_evolution_identity_and_half_turn() {
        let a0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.2)];
        assert_eq!(analytic_free_evolution(&a0, &[1.0, -2.0], 0.0), a0);
        let r = analytic_free_evolution(&[Complex64::new(1.0, 0.0)], &[PI], 1.0);
        assert!((r[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn main_solver_matches_free_evolution() {
        let grid = SimulationGrid::new(6.0, 65, 100.0, 0.01).unwrap();
        let m = MediumParams::new(0.0, 5.0).unwrap();
        let z = grid.z_grid();
        let eta: Vec<f64> = z.iter().map(|zj| 2.0 * PI * (zj - 3.0)).collect();
        let a0: Vec<Complex64> = z.iter().map(|zj| Complex64::from_polar(1.0, *zj)).collect();
        let mut state = FieldState::from_alpha(0.0, a0.clone(), Complex64::new(0.0, 0.0), &m, &grid).unwrap();
        for _ in 0..10_000 {
            state = advance_polarization(&state, &eta, |_| Complex64::new(0.0, 0.0), &m, &grid).unwrap();
        }
        let exact = analytic_free_evolution(&a0, &eta, 100.0);
        let worst = state
            .alpha
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn reference_free_evolution_of_absorbed_pulse() {
        // With g = 0 nothing couples; the reference must keep alpha at zero
        // and pass the input through unchanged.
        let grid = SimulationGrid::new(6.0, 33, 10.0, 0.01).unwrap();
        let m = MediumParams::new(0.0, 5.0).unwrap();
        let s = GradientSchedule::new(0.5, 3.0);
        let p = PulseSpec::gaussian(5.0, 1.0, 1.0);
        let r = reference_run(&grid, &m, &s, &p, 2).unwrap();
        for (a, b) in r.output_series.values.iter().zip(&r.input_series.values) {
            assert_eq!(a, b);
        }
        assert!(r.stored_excitation_series.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_pulse_matches_main_bitwise() {
        let grid = SimulationGrid::new(6.0, 33, 20.0, 0.01).unwrap();
        let m = MediumParams::from_beta(3.75, 0.5).unwrap();
        let s = GradientSchedule::new(0.5, 3.0);
        let p = PulseSpec::gaussian(5.0, 1.0, 0.0);
        let main = crate::solver::run(&grid, &m, &s, &p).unwrap();
        let reference = reference_run(&grid, &m, &s, &p, 2).unwrap();
        assert_eq!(main.output_series, reference.output_series);
        assert_eq!(main.stored_excitation_series, reference.stored_excitation_series);
    }

    #[test]
    fn memory_guard_trips() {
        let grid = SimulationGrid::new(6.0, 1025, 10.0, 0.01).unwrap();
        let m = MediumParams::new(1.0, 1.0).unwrap();
        let s = GradientSchedule::new(1.0, 3.0);
        let p = PulseSpec::gaussian(5.0, 1.0, 1.0);
        let err = reference_run_with_limit(&grid, &m, &s, &p, 4, 0.01).unwrap_err();
        assert!(matches!(err, GemError::MemoryGuard { .. }));
        assert!(matches!(
            reference_run(&grid, &m, &s, &p, 1),
            Err(GemError::Contract(_))
        ));
    }

    #[test]
    fn l2_relative_basics() {
        let a = vec![Complex64::new(1.0, 0.0); 4];
        assert_eq!(l2_relative(&a, &a).unwrap(), 0.0);
        let b = vec![Complex64::new(2.0, 0.0); 4];
        assert!((l2_relative(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!(l2_relative(&a, &b[..3]).is_err());
    }

    #[test]
    fn decoupled_convergence_is_exact() {
        let scenario = Scenario {
            grid: SimulationGrid::new(6.0, 33, 20.0, 0.02).unwrap(),
            medium: MediumParams::new(0.0, 1.0).unwrap(),
            schedule: GradientSchedule::new(0.5, 3.0),
            pulse: PulseSpec::gaussian(8.0, 2.0, 1.0),
        };
        let report = convergence_order(&scenario, &[0.02, 0.01, 0.005]).unwrap();
        assert!(report.flags.contains(&ConvergenceFlag::ExactRegime));
        assert_eq!(report.order, None);
    }

    #[test]
    fn step_list_checked() {
        let scenario = Scenario {
            grid: SimulationGrid::new(6.0, 33, 20.0, 0.02).unwrap(),
            medium: MediumParams::new(0.0, 1.0).unwrap(),
            schedule: GradientSchedule::new(0.5, 3.0),
            pulse: PulseSpec::gaussian(8.0, 2.0, 1.0),
        };
        assert!(convergence_order(&scenario, &[0.02, 0.01]).is_err());
        assert!(convergence_order(&scenario, &[0.02, 0.01, 0.004]).is_err());
    }
}
