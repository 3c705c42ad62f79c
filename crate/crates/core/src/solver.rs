//! Integration of the coupled polarization / envelope equations
//!
//! ```text
//! d alpha / dt = -i eta(t, z) alpha + i g E
//! d E / dz     =  i g N alpha
//! ```
//!
//! by the method of lines. The envelope has no time derivative, so it is a
//! slave field: at any instant it is the cumulative trapezoid integral of
//! the polarization, started from the boundary sample `E(t, 0)`.
//!
//! Each step is a Strang splitting: an exact half rotation by
//! `exp(-i eta dt / 2)`, a midpoint coupling kick over the full step, and a
//! second half rotation. The detuning term is stiff at the ends of the
//! medium; handling it exactly leaves only the coupling to discretize.

use num_complex::Complex64;

use crate::error::{GemError, Result};
use crate::grid::{MediumParams, SimulationGrid};
use crate::pulse::PulseSpec;
use crate::schedule::{GradientEvent, GradientSchedule, ValidatedSchedule};

/// Uniformly sampled complex time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0_us: f64,
    pub dt_us: f64,
    pub values: Vec<Complex64>,
}

impl TimeSeries {
    pub fn new(t0_us: f64, dt_us: f64, values: Vec<Complex64>) -> Self {
        Self { t0_us, dt_us, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0_us + i as f64 * self.dt_us
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.time(i))
    }

    /// Trapezoid `int |x|^2 dt` over the whole series.
    pub fn energy(&self) -> f64 {
        trapezoid_power(&self.values, self.dt_us)
    }

    /// Samples with `t_start <= t <= t_end`.
    pub fn gate(&self, t_start: f64, t_end: f64) -> TimeSeries {
        let eps = 1e-9 * self.dt_us;
        let first = ((t_start - self.t0_us - eps) / self.dt_us).ceil().max(0.0) as usize;
        let last = ((t_end - self.t0_us + eps) / self.dt_us).floor();
        if last < 0.0 || first >= self.values.len() {
            return TimeSeries::new(t_start, self.dt_us, Vec::new());
        }
        let last = (last as usize).min(self.values.len() - 1);
        let values = if first <= last {
            self.values[first..=last].to_vec()
        } else {
            Vec::new()
        };
        TimeSeries::new(self.time(first), self.dt_us, values)
    }

    /// Time of the largest `|x|`.
    pub fn peak_time(&self) -> Option<f64> {
        let i = (0..self.values.len())
            .max_by(|&a, &b| self.values[a].norm_sqr().total_cmp(&self.values[b].norm_sqr()))?;
        Some(self.time(i))
    }

    /// Every `factor`-th sample.
    pub fn decimated(&self, factor: usize) -> TimeSeries {
        TimeSeries::new(
            self.t0_us,
            self.dt_us * factor as f64,
            self.values.iter().step_by(factor).copied().collect(),
        )
    }
}

pub(crate) fn trapezoid_power(values: &[Complex64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().map(|v| v.norm_sqr()).sum();
            dt * (inner + 0.5 * (values[0].norm_sqr() + values[n - 1].norm_sqr()))
        }
    }
}

/// Row-major `(t, z)` matrix of stored profiles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshots {
    pub times_us: Vec<f64>,
    pub nz: usize,
    pub data: Vec<Complex64>,
}

impl Snapshots {
    fn with_nz(nz: usize) -> Self {
        Self {
            times_us: Vec::new(),
            nz,
            data: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_us.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.nz..(i + 1) * self.nz]
    }

    pub fn push(&mut self, t_us: f64, row: &[Complex64]) {
        debug_assert_eq!(row.len(), self.nz);
        self.times_us.push(t_us);
        self.data.extend_from_slice(row);
    }
}

/// A schedule event as applied by the run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLogEntry {
    /// Snapped application time. For a line flip, the first per-point flip.
    pub t_us: f64,
    /// Last per-point flip of a line flip; equal to `t_us` otherwise.
    pub t_last_us: f64,
    pub requested_t_us: Option<f64>,
    pub source_index: usize,
    pub event: GradientEvent,
}

/// Everything recorded by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// `E(t, 0)` at every step boundary.
    pub input_series: TimeSeries,
    /// `E(t, L)` at every step boundary.
    pub output_series: TimeSeries,
    pub alpha_snapshots: Snapshots,
    pub e_snapshots: Snapshots,
    pub event_log: Vec<EventLogEntry>,
    pub grid: SimulationGrid,
    pub medium: MediumParams,
    pub schedule: ValidatedSchedule,
    /// `N * trapezoid(|alpha|^2) dz` at every step boundary.
    pub stored_excitation_series: Vec<f64>,
}

impl SimulationResult {
    /// Time of step boundary `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.output_series.time(i)
    }
}

/// Polarization and envelope over z at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t_us: f64,
    pub alpha: Vec<Complex64>,
    pub e_field: Vec<Complex64>,
}

impl FieldState {
    /// All-zero state at `t = 0`.
    pub fn zero(grid: &SimulationGrid) -> Self {
        Self {
            t_us: 0.0,
            alpha: vec![Complex64::new(0.0, 0.0); grid.nz()],
            e_field: vec![Complex64::new(0.0, 0.0); grid.nz()],
        }
    }

    /// State with the given polarization and its consistent envelope.
    pub fn from_alpha(
        t_us: f64,
        alpha: Vec<Complex64>,
        boundary: Complex64,
        medium: &MediumParams,
        grid: &SimulationGrid,
    ) -> Result<Self> {
        let e_field = integrate_field(&alpha, boundary, t_us, medium, grid)?;
        Ok(Self {
            t_us,
            alpha,
            e_field,
        })
    }
}

fn first_non_finite(values: &[Complex64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

/// `E(z_j) = boundary + i g N * cumtrapz(alpha)(z_j)`.
///
/// `t_us` only labels a divergence error.
pub fn integrate_field(
    alpha: &[Complex64],
    boundary: Complex64,
    t_us: f64,
    medium: &MediumParams,
    grid: &SimulationGrid,
) -> Result<Vec<Complex64>> {
    if alpha.len() != grid.nz() {
        return Err(GemError::Contract(format!(
            "alpha has {} entries, grid has {}",
            alpha.len(),
            grid.nz()
        )));
    }
    if let Some(index) = first_non_finite(alpha) {
        return Err(GemError::Divergence { t_us, index });
    }
    let mut e = vec![Complex64::new(0.0, 0.0); alpha.len()];
    cumulative_field(alpha, boundary, half_cell_coupling(medium, grid), &mut e);
    Ok(e)
}

/// `i g N dz / 2`, the trapezoid factor per half cell.
fn half_cell_coupling(medium: &MediumParams, grid: &SimulationGrid) -> Complex64 {
    Complex64::new(0.0, medium.g() * medium.n_linear() * grid.dz() * 0.5)
}

fn cumulative_field(alpha: &[Complex64], boundary: Complex64, c: Complex64, out: &mut [Complex64]) {
    let mut acc = boundary;
    out[0] = acc;
    for j in 1..alpha.len() {
        acc += c * (alpha[j - 1] + alpha[j]);
        out[j] = acc;
    }
}

/// `N * sum_j w_j |alpha_j|^2 dz` with trapezoid weights.
pub fn stored_excitation(
    alpha: &[Complex64],
    medium: &MediumParams,
    grid: &SimulationGrid,
) -> Result<f64> {
    if alpha.len() != grid.nz() {
        return Err(GemError::Contract(format!(
            "alpha has {} entries, grid has {}",
            alpha.len(),
            grid.nz()
        )));
    }
    if let Some(index) = first_non_finite(alpha) {
        return Err(GemError::Divergence { t_us: f64::NAN, index });
    }
    Ok(stored_sum(alpha, medium, grid))
}

fn stored_sum(alpha: &[Complex64], medium: &MediumParams, grid: &SimulationGrid) -> f64 {
    let n = alpha.len();
    let inner: f64 = alpha[1..n - 1].iter().map(|a| a.norm_sqr()).sum();
    let ends = 0.5 * (alpha[0].norm_sqr() + alpha[n - 1].norm_sqr());
    medium.n_linear() * grid.dz() * (inner + ends)
}

/// Reusable buffers and rotation factors for the Strang step.
struct Stepper {
    dt: f64,
    g: f64,
    /// `i g N dz / 2`
    c: Complex64,
    half_rotation: Vec<Complex64>,
    field: Vec<Complex64>,
}

impl Stepper {
    fn new(medium: &MediumParams, grid: &SimulationGrid) -> Self {
        let nz = grid.nz();
        Self {
            dt: grid.dt_us(),
            g: medium.g(),
            c: half_cell_coupling(medium, grid),
            half_rotation: vec![Complex64::new(1.0, 0.0); nz],
            field: vec![Complex64::new(0.0, 0.0); nz],
        }
    }

    fn set_profile(&mut self, eta: &[f64]) {
        let half = 0.5 * self.dt;
        for (r, &e) in self.half_rotation.iter_mut().zip(eta) {
            *r = Complex64::from_polar(1.0, -e * half);
        }
    }

    fn rotate(&self, alpha: &mut [Complex64]) {
        for (a, r) in alpha.iter_mut().zip(&self.half_rotation) {
            *a *= r;
        }
    }

    /// Advances `alpha` over one step with the boundary sample `b_mid`
    /// taken at the step midpoint.
    fn step(&mut self, alpha: &mut [Complex64], b_mid: Complex64) {
        self.rotate(alpha);
        self.kick(alpha, b_mid);
        self.rotate(alpha);
    }

    /// Midpoint coupling kick `alpha += i g dt K(alpha_mid)`, where
    /// `alpha_mid = (alpha + alpha_new) / 2` and `K` is the trapezoid
    /// envelope of `alpha_mid` started from `b_mid`.
    ///
    /// At the two end nodes `K` carries a half-cell closure `+- c alpha_mid / 2`
    /// with `c = i g N dz / 2`. It cancels the telescoping boundary term of
    /// the trapezoid pairing, so the step changes `N sum w |alpha|^2 dz` by
    /// exactly `dt (|b_mid|^2 - |E_L|^2)`.
    ///
    /// The trapezoid integral is lower triangular in z, so the implicit
    /// equations are solved exactly by one forward sweep.
    fn kick(&mut self, alpha: &mut [Complex64], b_mid: Complex64) {
        let h = Complex64::new(0.0, 0.5 * self.g * self.dt);
        let c = self.c;
        let one = Complex64::new(1.0, 0.0);
        let inner = one / (one - h * c);
        let end = one / (one - 0.5 * h * c);
        let last = alpha.len() - 1;

        let mut e = b_mid;
        self.field[0] = e;
        let mut mid_prev = (alpha[0] + h * e) * end;
        alpha[0] = 2.0 * mid_prev - alpha[0];
        for j in 1..=last {
            let partial = e + c * mid_prev;
            let f = if j == last { end } else { inner };
            let mid = (alpha[j] + h * partial) * f;
            e = partial + c * mid;
            self.field[j] = e;
            alpha[j] = 2.0 * mid - alpha[j];
            mid_prev = mid;
        }
    }
}

/// Advances `state` by one step of `grid.dt_us()`.
///
/// `eta_profile` is the detuning over z for the whole step (events sit on
/// step boundaries, so it is constant inside the step) and `input` gives the
/// boundary envelope `E(t, 0)`.
pub fn advance_polarization(
    state: &FieldState,
    eta_profile: &[f64],
    input: impl Fn(f64) -> Complex64,
    medium: &MediumParams,
    grid: &SimulationGrid,
) -> Result<FieldState> {
    let nz = grid.nz();
    if state.alpha.len() != nz {
        return Err(GemError::Contract(format!(
            "alpha has {} entries, grid has {nz}",
            state.alpha.len()
        )));
    }
    if eta_profile.len() != nz {
        return Err(GemError::Contract(format!(
            "eta profile has {} entries, grid has {nz}",
            eta_profile.len()
        )));
    }
    let dt = grid.dt_us();
    let mut stepper = Stepper::new(medium, grid);
    stepper.set_profile(eta_profile);
    let mut alpha = state.alpha.clone();
    stepper.step(&mut alpha, input(state.t_us + 0.5 * dt));
    let t_next = state.t_us + dt;
    let e_field = integrate_field(&alpha, input(t_next), t_next, medium, grid)?;
    Ok(FieldState {
        t_us: t_next,
        alpha,
        e_field,
    })
}

/// The four inputs of a run, bundled.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: SimulationGrid,
    pub medium: MediumParams,
    pub schedule: GradientSchedule,
    pub pulse: PulseSpec,
}

impl Scenario {
    pub fn run(&self) -> Result<SimulationResult> {
        run(&self.grid, &self.medium, &self.schedule, &self.pulse)
    }

    /// Same scenario with a different time step.
    pub fn with_dt(&self, dt_us: f64) -> Result<Self> {
        let grid = SimulationGrid::new(
            self.grid.length_mm(),
            self.grid.nz(),
            self.grid.t_end_us(),
            dt_us,
        )?
        .with_snapshot_stride(self.grid.snapshot_stride())?;
        Ok(Self {
            grid,
            ..self.clone()
        })
    }
}

/// Validates `schedule` against `grid` and runs the simulation.
pub fn run(
    grid: &SimulationGrid,
    medium: &MediumParams,
    schedule: &GradientSchedule,
    pulse: &PulseSpec,
) -> Result<SimulationResult> {
    let validated = schedule.validate(grid)?;
    run_validated(grid, medium, &validated, pulse)
}

/// Marches from `t = 0` to `grid.n_steps() * dt`, recording the boundary
/// envelopes and stored excitation at every step boundary and full
/// profiles every `snapshot_stride` steps. Deterministic for identical input.
pub fn run_validated(
    grid: &SimulationGrid,
    medium: &MediumParams,
    schedule: &ValidatedSchedule,
    pulse: &PulseSpec,
) -> Result<SimulationResult> {
    if (schedule.dt_us() - grid.dt_us()).abs() > 1e-12 * grid.dt_us() {
        return Err(GemError::Contract(
            "schedule was validated against a different time step".into(),
        ));
    }
    pulse.validate()?;

    let nz = grid.nz();
    let n_steps = grid.n_steps();
    let dt = grid.dt_us();
    let stride = grid.snapshot_stride();
    let z = grid.z_grid();

    let mut recorder = Recorder::new(grid, medium, schedule, n_steps);
    let mut stepper = Stepper::new(medium, grid);
    let mut alpha = vec![Complex64::new(0.0, 0.0); nz];
    let mut field = vec![Complex64::new(0.0, 0.0); nz];
    let c = half_cell_coupling(medium, grid);

    let mut profile_time = 0.5 * dt;
    stepper.set_profile(&schedule.eta_profile(profile_time, &z));

    for n in 0..=n_steps {
        let t = grid.time(n);
        let b = pulse.sample(t);
        cumulative_field(&alpha, b, c, &mut field);
        let stored = stored_sum(&alpha, medium, grid);
        if !stored.is_finite() || !field[nz - 1].is_finite() {
            let index = first_non_finite(&alpha)
                .or_else(|| first_non_finite(&field))
                .unwrap_or(0);
            return Err(recorder.diverged(index));
        }
        recorder.input.push(b);
        recorder.output.push(field[nz - 1]);
        recorder.stored.push(stored);
        if n % stride == 0 {
            recorder.alpha.push(t, &alpha);
            recorder.e.push(t, &field);
        }
        if n == n_steps {
            break;
        }

        let mid = t + 0.5 * dt;
        if schedule.changes_between(profile_time, mid) {
            stepper.set_profile(&schedule.eta_profile(mid, &z));
        }
        profile_time = mid;
        stepper.step(&mut alpha, pulse.sample(mid));
    }
    Ok(recorder.finish())
}

struct Recorder<'a> {
    grid: &'a SimulationGrid,
    medium: &'a MediumParams,
    schedule: &'a ValidatedSchedule,
    input: Vec<Complex64>,
    output: Vec<Complex64>,
    stored: Vec<f64>,
    alpha: Snapshots,
    e: Snapshots,
}

impl<'a> Recorder<'a> {
    fn new(
        grid: &'a SimulationGrid,
        medium: &'a MediumParams,
        schedule: &'a ValidatedSchedule,
        n_steps: usize,
    ) -> Self {
        Self {
            grid,
            medium,
            schedule,
            input: Vec::with_capacity(n_steps + 1),
            output: Vec::with_capacity(n_steps + 1),
            stored: Vec::with_capacity(n_steps + 1),
            alpha: Snapshots::with_nz(grid.nz()),
            e: Snapshots::with_nz(grid.nz()),
        }
    }

    fn diverged(self, index: usize) -> GemError {
        let last_good = self.input.len().saturating_sub(1) as f64 * self.grid.dt_us();
        GemError::RunDiverged {
            last_good_t_us: last_good,
            index,
            partial: Box::new(self.finish()),
        }
    }

    fn finish(self) -> SimulationResult {
        let dt = self.grid.dt_us();
        SimulationResult {
            input_series: TimeSeries::new(0.0, dt, self.input),
            output_series: TimeSeries::new(0.0, dt, self.output),
            alpha_snapshots: self.alpha,
            e_snapshots: self.e,
            event_log: event_log(self.schedule),
            grid: self.grid.clone(),
            medium: *self.medium,
            schedule: self.schedule.clone(),
            stored_excitation_series: self.stored,
        }
    }
}

fn event_log(schedule: &ValidatedSchedule) -> Vec<EventLogEntry> {
    schedule
        .events()
        .iter()
        .filter_map(|ev| {
            let t = ev.snapped_t_us?;
            let t_last = match ev.event {
                GradientEvent::LineFlip { .. } => schedule
                    .line_flip_span(&ev.event)
                    .map_or(t, |(_, hi)| hi),
                _ => t,
            };
            Some(EventLogEntry {
                t_us: t,
                t_last_us: t_last,
                requested_t_us: ev.requested_t_us,
                source_index: ev.source_index,
                event: ev.event.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn field_of_zero_source_is_boundary() {
        let grid = SimulationGrid::new(6.0, 33, 1.0, 0.1).unwrap();
        let m = MediumParams::new(1.0, 4.0).unwrap();
        let e = integrate_field(&vec![c(0.0, 0.0); 33], c(1.0, 0.0), 0.0, &m, &grid).unwrap();
        assert!(e.iter().all(|&x| x == c(1.0, 0.0)));
    }

    #[test]
    fn decoupled_field_is_boundary() {
        let grid = SimulationGrid::new(6.0, 33, 1.0, 0.1).unwrap();
        let m = MediumParams::new(0.0, 4.0).unwrap();
        let alpha: Vec<_> = (0..33).map(|j| c(j as f64, -0.5)).collect();
        let e = integrate_field(&alpha, c(0.3, 0.2), 0.0, &m, &grid).unwrap();
        assert!(e.iter().all(|&x| x == c(0.3, 0.2)));
    }

    #[test]
    fn constant_source_integrates_linearly() {
        let grid = SimulationGrid::new(6.0, 25, 1.0, 0.1).unwrap();
        let (g, n) = (1.3, 2.0);
        let m = MediumParams::new(g, n).unwrap();
        let a = c(0.4, -0.7);
        let e = integrate_field(&vec![a; 25], c(0.0, 0.0), 0.0, &m, &grid).unwrap();
        for (ej, zj) in e.iter().zip(grid.z_grid()) {
            let exact = c(0.0, g * n) * a * zj;
            assert!((ej - exact).norm() < 1e-13);
        }
    }

    #[test]
    fn field_errors() {
        let grid = SimulationGrid::new(6.0, 5, 1.0, 0.1).unwrap();
        let m = MediumParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            integrate_field(&[c(0.0, 0.0); 4], c(0.0, 0.0), 0.0, &m, &grid),
            Err(GemError::Contract(_))
        ));
        let mut alpha = vec![c(0.0, 0.0); 5];
        alpha[3] = c(f64::NAN, 0.0);
        match integrate_field(&alpha, c(0.0, 0.0), 2.5, &m, &grid) {
            Err(GemError::Divergence { t_us, index }) => {
                assert_eq!(index, 3);
                assert_eq!(t_us, 2.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stored_excitation_values() {
        let grid = SimulationGrid::new(6.0, 61, 1.0, 0.1).unwrap();
        let m = MediumParams::new(1.0, 1.0).unwrap();
        assert_eq!(stored_excitation(&vec![c(0.0, 0.0); 61], &m, &grid).unwrap(), 0.0);
        let s = stored_excitation(&vec![c(1.0, 0.0); 61], &m, &grid).unwrap();
        assert!((s - 6.0).abs() < 1e-12);
    }

    #[test]
    fn free_evolution_is_exact_phase() {
        let grid = SimulationGrid::new(6.0, 41, 100.0, 0.01).unwrap();
        let m = MediumParams::new(0.0, 3.0).unwrap();
        let z = grid.z_grid();
        let eta: Vec<f64> = z.iter().map(|zj| 2.0 * PI * (zj - 3.0)).collect();
        let alpha0: Vec<Complex64> = z.iter().map(|zj| c((-zj).exp(), zj.sin())).collect();
        let mut state = FieldState::from_alpha(0.0, alpha0.clone(), c(0.0, 0.0), &m, &grid).unwrap();
        for k in 1..=500 {
            state = advance_polarization(&state, &eta, |_| c(0.0, 0.0), &m, &grid).unwrap();
            let t = k as f64 * grid.dt_us();
            let worst = state
                .alpha
                .iter()
                .zip(&alpha0)
                .zip(&eta)
                .map(|((a, a0), e)| (a - a0 * Complex64::from_polar(1.0, -e * t)).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12 * k as f64, "step {k}: {worst}");
        }
    }

    #[test]
    fn euler_limit_of_source() {
        let grid = SimulationGrid::new(1.0, 11, 1.0, 1e-6).unwrap();
        let (g, n) = (2.0, 0.5);
        let m = MediumParams::new(g, n).unwrap();
        let state = FieldState::zero(&grid);
        let e0 = c(0.8, 0.1);
        let next = advance_polarization(&state, &vec![0.0; 11], |_| e0, &m, &grid).unwrap();
        let expect = c(0.0, g) * e0 * grid.dt_us();
        for a in &next.alpha {
            assert!((a - expect).norm() < 1e-5 * expect.norm());
        }
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let grid = SimulationGrid::new(6.0, 21, 1.0, 0.05).unwrap();
        let m = MediumParams::new(1.0, 10.0).unwrap();
        let eta: Vec<f64> = grid.z_grid().iter().map(|z| z - 3.0).collect();
        let mut state = FieldState::zero(&grid);
        for _ in 0..100 {
            state = advance_polarization(&state, &eta, |_| c(0.0, 0.0), &m, &grid).unwrap();
        }
        assert!(state.alpha.iter().all(|a| *a == c(0.0, 0.0)));
        assert!(state.e_field.iter().all(|e| *e == c(0.0, 0.0)));
    }

    #[test]
    fn kick_field_is_envelope_of_midpoint_polarization() {
        let grid = SimulationGrid::new(6.0, 50, 1.0, 0.02).unwrap();
        let m = MediumParams::new(1.1, 7.0).unwrap();
        let alpha0: Vec<Complex64> =
            grid.z_grid().iter().map(|z| c((3.0 * z).cos(), 0.2 * z)).collect();
        let mut alpha = alpha0.clone();
        let mut stepper = Stepper::new(&m, &grid);
        let b = c(0.5, -0.25);
        stepper.kick(&mut alpha, b);
        let mid: Vec<Complex64> = alpha0.iter().zip(&alpha).map(|(a, b)| 0.5 * (a + b)).collect();
        let e_mid = integrate_field(&mid, b, 0.0, &m, &grid).unwrap();
        let half_c = 0.5 * half_cell_coupling(&m, &grid);
        for j in 0..50 {
            assert!((stepper.field[j] - e_mid[j]).norm() < 1e-12);
            let closure = match j {
                0 => half_c * mid[0],
                49 => -half_c * mid[49],
                _ => c(0.0, 0.0),
            };
            let expect = alpha0[j] + c(0.0, m.g() * grid.dt_us()) * (e_mid[j] + closure);
            assert!((alpha[j] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn kick_conserves_discrete_energy() {
        let grid = SimulationGrid::new(6.0, 64, 1.0, 0.05).unwrap();
        let m = MediumParams::new(1.0, 20.0).unwrap();
        let mut alpha: Vec<Complex64> =
            grid.z_grid().iter().map(|z| c((2.0 * z).sin(), (z - 1.0).cos())).collect();
        let before = stored_sum(&alpha, &m, &grid);
        let mut stepper = Stepper::new(&m, &grid);
        let b = c(0.3, 0.4);
        stepper.kick(&mut alpha, b);
        let after = stored_sum(&alpha, &m, &grid);
        let flux = grid.dt_us() * (b.norm_sqr() - stepper.field[63].norm_sqr());
        assert!((after - before - flux).abs() < 1e-12 * before);
    }

    #[test]
    fn eta_length_mismatch() {
        let grid = SimulationGrid::new(6.0, 21, 1.0, 0.05).unwrap();
        let m = MediumParams::new(1.0, 1.0).unwrap();
        let err = advance_polarization(&FieldState::zero(&grid), &[0.0; 3], |_| c(0.0, 0.0), &m, &grid)
            .unwrap_err();
        assert!(matches!(err, GemError::Contract(_)));
    }

    #[test]
    fn gate_bounds() {
        let s = TimeSeries::new(0.0, 0.5, (0..21).map(|i| c(i as f64, 0.0)).collect());
        let g = s.gate(2.0, 4.0);
        assert_eq!(g.t0_us, 2.0);
        assert_eq!(g.values.len(), 5);
        assert!(s.gate(20.0, 30.0).is_empty());
        assert_eq!(s.decimated(2).len(), 11);
    }
}
