//! Space-time atomic frequency schedules.
//!
//! The detuning profile is a base linear gradient `eta0 * (z - z_center)`
//! modified by step events. Each grid point carries three modifiers that
//! events act on independently:
//!
//! * a sign multiplier `s(z)`, negated by flips,
//! * a slope factor `f(z)`, multiplied by slope rescalings,
//! * an additive offset `o(z)`.
//!
//! so that `eta(t, z) = s * f * eta0 * (z - z_center) + o`. Because each
//! event touches only one modifier and the operations commute, the profile
//! depends only on the set of `(time, event)` pairs. Events sharing a snapped
//! time are still stored flips first, then offsets, then scalings.

use std::f64::consts::PI;

use crate::error::{GemError, Result, ScheduleIssue};
use crate::grid::SimulationGrid;

/// One manipulation of the frequency profile. Times in us, positions in mm,
/// angular frequencies in rad/us.
#[derive(Debug, Clone, PartialEq)]
pub enum GradientEvent {
    /// Negate the gradient everywhere at `t_us`.
    GlobalFlip { t_us: f64 },
    /// Negate the gradient on `[z0_mm, z1_mm)` at `t_us`.
    SegmentFlip { t_us: f64, z0_mm: f64, z1_mm: f64 },
    /// Negate the gradient at each z when `a*z + b*t + c = 0`, i.e. at
    /// `t(z) = -(a*z + c)/b`. Points whose flip time falls outside the
    /// simulated window are never flipped.
    LineFlip { a: f64, b: f64, c: f64 },
    /// Add `delta_rad_per_us` on `[z0_mm, z1_mm)` from `t_us` on.
    OffsetAfter {
        t_us: f64,
        delta_rad_per_us: f64,
        z0_mm: f64,
        z1_mm: f64,
    },
    /// Multiply the slope term by `factor` on `[z0_mm, z1_mm)` from `t_us` on.
    SlopeScaleAfter {
        t_us: f64,
        factor: f64,
        z0_mm: f64,
        z1_mm: f64,
    },
}

impl GradientEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            GradientEvent::GlobalFlip { .. } => "global-flip",
            GradientEvent::SegmentFlip { .. } => "segment-flip",
            GradientEvent::LineFlip { .. } => "line-flip",
            GradientEvent::OffsetAfter { .. } => "offset",
            GradientEvent::SlopeScaleAfter { .. } => "slope-scale",
        }
    }

    /// Composition class at equal times: flips, then offsets, then scalings.
    fn class(&self) -> u8 {
        match self {
            GradientEvent::GlobalFlip { .. }
            | GradientEvent::SegmentFlip { .. }
            | GradientEvent::LineFlip { .. } => 0,
            GradientEvent::OffsetAfter { .. } => 1,
            GradientEvent::SlopeScaleAfter { .. } => 2,
        }
    }

    fn is_flip(&self) -> bool {
        self.class() == 0
    }

    fn nominal_time(&self) -> Option<f64> {
        match *self {
            GradientEvent::GlobalFlip { t_us }
            | GradientEvent::SegmentFlip { t_us, .. }
            | GradientEvent::OffsetAfter { t_us, .. }
            | GradientEvent::SlopeScaleAfter { t_us, .. } => Some(t_us),
            GradientEvent::LineFlip { .. } => None,
        }
    }

    fn range(&self) -> Option<(f64, f64)> {
        match *self {
            GradientEvent::SegmentFlip { z0_mm, z1_mm, .. }
            | GradientEvent::OffsetAfter { z0_mm, z1_mm, .. }
            | GradientEvent::SlopeScaleAfter { z0_mm, z1_mm, .. } => Some((z0_mm, z1_mm)),
            _ => None,
        }
    }
}

/// A base gradient plus an ordered list of events, as supplied by a user.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSchedule {
    /// Base slope in rad/us per mm.
    pub eta0: f64,
    /// Zero crossing of the base gradient, mm.
    pub z_center: f64,
    pub events: Vec<GradientEvent>,
}

impl GradientSchedule {
    pub fn new(eta0: f64, z_center: f64) -> Self {
        Self {
            eta0,
            z_center,
            events: Vec::new(),
        }
    }

    pub fn with_event(mut self, event: GradientEvent) -> Self {
        self.events.push(event);
        self
    }

    /// Checks every invariant against `grid`, snaps event times to step
    /// boundaries and verifies that the gradient-driven phase winding stays
    /// resolvable on the z lattice.
    pub fn validate(&self, grid: &SimulationGrid) -> Result<ValidatedSchedule> {
        let length = grid.length_mm();
        let t_end = grid.t_end_us();
        let mut issues = Vec::new();

        if self.eta0 == 0.0 || !self.eta0.is_finite() {
            issues.push(ScheduleIssue {
                event: None,
                reason: "degenerate gradient: eta0 must be finite and non-zero".into(),
            });
        }
        if !(0.0..=length).contains(&self.z_center) {
            issues.push(ScheduleIssue {
                event: None,
                reason: format!("z_center {} mm outside [0, {length}] mm", self.z_center),
            });
        }

        for (i, event) in self.events.iter().enumerate() {
            let mut fail = |reason: String| {
                issues.push(ScheduleIssue {
                    event: Some(i),
                    reason,
                })
            };
            if let Some(t) = event.nominal_time() {
                if !t.is_finite() || t < 0.0 || t > t_end {
                    fail(format!("time {t} us outside [0, {t_end}] us"));
                }
            }
            if let Some((z0, z1)) = event.range() {
                if !(z0.is_finite() && z1.is_finite()) {
                    fail("non-finite segment bounds".into());
                } else if z0 == z1 {
                    fail(format!("zero-measure segment at z = {z0} mm"));
                } else if !(0.0 <= z0 && z0 < z1 && z1 <= length) {
                    fail(format!("segment [{z0}, {z1}] mm not inside [0, {length}] mm"));
                }
            }
            match *event {
                GradientEvent::LineFlip { a, b, c } => {
                    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                        fail("non-finite line coefficients".into());
                    } else if b == 0.0 {
                        fail("line flip needs a non-zero time coefficient b".into());
                    }
                }
                GradientEvent::OffsetAfter {
                    delta_rad_per_us, ..
                } if !delta_rad_per_us.is_finite() => fail("non-finite offset".into()),
                GradientEvent::SlopeScaleAfter { factor, .. }
                    if !(factor.is_finite() && factor > 0.0) =>
                {
                    fail(format!("slope factor must be positive, got {factor}"))
                }
                _ => {}
            }
        }
        if !issues.is_empty() {
            return Err(GemError::Schedule(issues));
        }

        let mut validated = ValidatedSchedule {
            eta0: self.eta0,
            z_center: self.z_center,
            length_mm: length,
            dt_us: grid.dt_us(),
            t_end_us: t_end,
            events: Vec::with_capacity(self.events.len()),
        };
        for (i, event) in self.events.iter().enumerate() {
            let requested = event.nominal_time();
            let snapped = match requested {
                Some(t) => Some(grid.snap_time(t)),
                None => validated.line_flip_span(event).map(|(lo, _)| lo),
            };
            validated.events.push(ScheduledEvent {
                source_index: i,
                event: event.clone(),
                requested_t_us: requested,
                snapped_t_us: snapped,
            });
        }
        validated.events.sort_by(|x, y| {
            let tx = x.snapped_t_us.unwrap_or(f64::INFINITY);
            let ty = y.snapped_t_us.unwrap_or(f64::INFINITY);
            tx.total_cmp(&ty)
                .then(x.event.class().cmp(&y.event.class()))
                .then(x.source_index.cmp(&y.source_index))
        });

        let winding = validated.peak_winding(&grid.z_grid());
        let limit = PI / grid.dz();
        if winding >= limit {
            return Err(GemError::Schedule(vec![ScheduleIssue {
                event: None,
                reason: format!(
                    "aliasing guard: peak gradient winding {winding:.3} rad/mm reaches the \
                     grid limit pi/dz = {limit:.3} rad/mm; increase nz or shorten storage"
                ),
            }]));
        }
        Ok(validated)
    }
}

/// An event after validation, with its time snapped to the step lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEvent {
    /// Position in the schedule as supplied.
    pub source_index: usize,
    pub event: GradientEvent,
    pub requested_t_us: Option<f64>,
    /// Snapped time; for a line flip the earliest snapped flip time over the
    /// medium, `None` if the line never crosses the simulated window.
    pub snapped_t_us: Option<f64>,
}

/// A schedule whose invariants hold for one grid. Immutable and cheap to
/// evaluate from several threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSchedule {
    eta0: f64,
    z_center: f64,
    length_mm: f64,
    dt_us: f64,
    t_end_us: f64,
    events: Vec<ScheduledEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Modifiers {
    sign: f64,
    scale: f64,
    offset: f64,
}

impl ValidatedSchedule {
    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn z_center(&self) -> f64 {
        self.z_center
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_us
    }

    pub fn events(&self) -> &[ScheduledEvent] {
        &self.events
    }

    fn snap(&self, t: f64) -> f64 {
        (t / self.dt_us).round() * self.dt_us
    }

    fn contains(&self, z: f64, z0: f64, z1: f64) -> bool {
        z >= z0 && (z < z1 || z1 >= self.length_mm)
    }

    fn line_time(&self, a: f64, b: f64, c: f64, z: f64) -> Option<f64> {
        let t = -(a * z + c) / b;
        (0.0..=self.t_end_us).contains(&t).then(|| self.snap(t))
    }

    /// Earliest and latest snapped flip times of a line flip over `[0, L]`.
    pub fn line_flip_span(&self, event: &GradientEvent) -> Option<(f64, f64)> {
        let GradientEvent::LineFlip { a, b, c } = *event else {
            return None;
        };
        let t0 = -c / b;
        let t1 = -(a * self.length_mm + c) / b;
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(self.t_end_us);
        (lo <= hi).then(|| (self.snap(lo), self.snap(hi)))
    }

    /// Time at which `event` acts at position `z`, if it acts there at all.
    fn effective_time(&self, event: &ScheduledEvent, z: f64) -> Option<f64> {
        match event.event {
            GradientEvent::GlobalFlip { .. } => event.snapped_t_us,
            GradientEvent::LineFlip { a, b, c } => self.line_time(a, b, c, z),
            ref other => {
                let (z0, z1) = other.range()?;
                if self.contains(z, z0, z1) {
                    event.snapped_t_us
                } else {
                    None
                }
            }
        }
    }

    fn modifiers_at(&self, t_us: f64, z: f64) -> Modifiers {
        let mut m = Modifiers {
            sign: 1.0,
            scale: 1.0,
            offset: 0.0,
        };
        for ev in &self.events {
            match self.effective_time(ev, z) {
                Some(te) if te <= t_us => {}
                _ => continue,
            }
            match ev.event {
                GradientEvent::GlobalFlip { .. }
                | GradientEvent::SegmentFlip { .. }
                | GradientEvent::LineFlip { .. } => m.sign = -m.sign,
                GradientEvent::OffsetAfter {
                    delta_rad_per_us, ..
                } => m.offset += delta_rad_per_us,
                GradientEvent::SlopeScaleAfter { factor, .. } => m.scale *= factor,
            }
        }
        m
    }

    /// `eta(t, z)` in rad/us.
    pub fn eta_at(&self, t_us: f64, z: f64) -> f64 {
        let m = self.modifiers_at(t_us, z);
        m.sign * m.scale * self.eta0 * (z - self.z_center) + m.offset
    }

    /// The local gradient `d eta / dz` (rad/us per mm) at `(t, z)`, ignoring
    /// offsets.
    pub fn slope_at(&self, t_us: f64, z: f64) -> f64 {
        let m = self.modifiers_at(t_us, z);
        m.sign * m.scale * self.eta0
    }

    /// `eta(t, z_j)` for every sample of `z_grid`.
    pub fn eta_profile(&self, t_us: f64, z_grid: &[f64]) -> Vec<f64> {
        z_grid.iter().map(|&z| self.eta_at(t_us, z)).collect()
    }

    /// Whether the profile can differ between times `t0` and `t1 > t0`.
    pub fn changes_between(&self, t0: f64, t1: f64) -> bool {
        self.events.iter().any(|ev| match ev.event {
            GradientEvent::LineFlip { .. } => match self.line_flip_span(&ev.event) {
                Some((lo, hi)) => hi > t0 && lo <= t1,
                None => false,
            },
            _ => matches!(ev.snapped_t_us, Some(t) if t > t0 && t <= t1),
        })
    }

    /// For every z sample, the ordered times at which the sign multiplier
    /// changes. Coincident flips at one point cancel in pairs.
    pub fn flip_time_map(&self, z_grid: &[f64]) -> Vec<Vec<f64>> {
        z_grid
            .iter()
            .map(|&z| {
                let mut times: Vec<f64> = self
                    .events
                    .iter()
                    .filter(|ev| ev.event.is_flip())
                    .filter_map(|ev| self.effective_time(ev, z))
                    .collect();
                times.sort_by(f64::total_cmp);
                let mut out: Vec<f64> = Vec::with_capacity(times.len());
                for t in times {
                    if out.last() == Some(&t) {
                        out.pop();
                    } else {
                        out.push(t);
                    }
                }
                out
            })
            .collect()
    }

    /// Largest `|integral of d eta/dz dt|` (rad/mm) reached at any grid
    /// point over `[0, t_end]`: the wavenumber a stored excitation can wind
    /// up to under the gradient alone.
    pub fn peak_winding(&self, z_grid: &[f64]) -> f64 {
        let mut peak: f64 = 0.0;
        let mut changes: Vec<(f64, &GradientEvent)> = Vec::new();
        for &z in z_grid {
            changes.clear();
            changes.extend(
                self.events
                    .iter()
                    .filter(|ev| !matches!(ev.event, GradientEvent::OffsetAfter { .. }))
                    .filter_map(|ev| self.effective_time(ev, z).map(|t| (t, &ev.event))),
            );
            changes.sort_by(|x, y| x.0.total_cmp(&y.0));
            let (mut sign, mut scale, mut k, mut t_prev) = (1.0, 1.0, 0.0_f64, 0.0);
            for &(t, ev) in &changes {
                k += sign * scale * self.eta0 * (t - t_prev);
                peak = peak.max(k.abs());
                t_prev = t;
                match *ev {
                    GradientEvent::SlopeScaleAfter { factor, .. } => scale *= factor,
                    _ => sign = -sign,
                }
            }
            k += sign * scale * self.eta0 * (self.t_end_us - t_prev);
            peak = peak.max(k.abs());
        }
        peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SimulationGrid {
        SimulationGrid::new(6.0, 241, 120.0, 0.01).unwrap()
    }

    fn fine_grid() -> SimulationGrid {
        // 1025 points keep the winding of a 70 us storage below pi/dz.
        SimulationGrid::new(6.0, 1025, 120.0, 0.01).unwrap()
    }

    #[test]
    fn base_gradient() {
        let s = GradientSchedule::new(1.0, 3.0).validate(&grid()).unwrap();
        for t in [0.0, 17.3, 99.0] {
            assert_eq!(s.eta_at(t, 4.0), 1.0);
        }
    }

    #[test]
    fn global_flip_negates() {
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::GlobalFlip { t_us: 60.0 })
            .validate(&grid())
            .unwrap();
        for z in grid().z_grid() {
            assert_eq!(s.eta_at(59.9, z), -s.eta_at(60.1, z));
        }
    }

    #[test]
    fn literal_line_flip_times() {
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::LineFlip {
                a: 60.0,
                b: -6.0,
                c: -330.0,
            })
            .validate(&grid())
            .unwrap();
        let map = s.flip_time_map(&[6.0, 5.0, 1.0]);
        assert!((map[0][0] - 5.0).abs() < 1e-9);
        // t = 10 z - 55 is negative below 5.5 mm: never flipped
        assert!(map[1].is_empty());
        assert!(map[2].is_empty());
    }

    #[test]
    fn line_flip_map_is_monotone() {
        let g = grid();
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::LineFlip {
                a: 60.0,
                b: -6.0,
                c: -330.0,
            })
            .validate(&g)
            .unwrap();
        let z = g.z_grid();
        let map = s.flip_time_map(&z);
        let mut last = f64::NEG_INFINITY;
        for (zj, times) in z.iter().zip(&map) {
            let exact = 10.0 * zj - 55.0;
            if (0.0..=120.0).contains(&exact) {
                assert_eq!(times.len(), 1);
                assert!((times[0] - exact).abs() <= 0.005 + 1e-12);
                assert!(times[0] >= last);
                last = times[0];
            } else {
                assert!(times.is_empty());
            }
        }
    }

    #[test]
    fn degenerate_gradient_rejected() {
        let err = GradientSchedule::new(0.0, 3.0).validate(&grid()).unwrap_err();
        assert!(err.to_string().contains("degenerate gradient"));
    }

    #[test]
    fn segment_flip_snapped_and_kept() {
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::SegmentFlip {
                t_us: 60.004,
                z0_mm: 2.8,
                z1_mm: 3.2,
            })
            .validate(&grid())
            .unwrap();
        let ev = &s.events()[0];
        assert_eq!(ev.event.kind(), "segment-flip");
        assert_eq!(ev.requested_t_us, Some(60.004));
        assert!((ev.snapped_t_us.unwrap() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn issues_name_event_and_reason() {
        let err = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::GlobalFlip { t_us: 10.0 })
            .with_event(GradientEvent::SegmentFlip {
                t_us: 60.0,
                z0_mm: 3.0,
                z1_mm: 3.0,
            })
            .with_event(GradientEvent::SlopeScaleAfter {
                t_us: 500.0,
                factor: -1.0,
                z0_mm: 0.0,
                z1_mm: 6.0,
            })
            .validate(&grid())
            .unwrap_err();
        let GemError::Schedule(issues) = err else {
            panic!("expected schedule issues")
        };
        assert_eq!(issues.len(), 3);
        assert_eq!(issues[0].event, Some(1));
        assert!(issues[0].reason.contains("zero-measure"));
        assert!(issues.iter().all(|i| i.event == Some(2) || i.event == Some(1)));
    }

    #[test]
    fn stacked_scalings_compose() {
        
        let s = GradientSchedule::new(2.0, 3.0)
            .with_event(GradientEvent::SlopeScaleAfter {
                t_us: 20.0,
                factor: 0.5,
                z0_mm: 1.0,
                z1_mm: 5.0,
            })
            .with_event(GradientEvent::SlopeScaleAfter {
                t_us: 40.0,
                factor: 2.0,
                z0_mm: 1.0,
                z1_mm: 5.0,
            })
            .validate(&SimulationGrid::new(6.0, 241, 60.0, 0.01).unwrap())
            .unwrap();
        assert_eq!(s.eta_at(30.0, 4.0), 1.0);
        assert_eq!(s.eta_at(50.0, 4.0), s.eta_at(0.0, 4.0));
    }

    #[test]
    fn split_flip_map() {
        let g = grid();
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::SegmentFlip {
                t_us: 60.0,
                z0_mm: 2.8,
                z1_mm: 3.2,
            })
            .with_event(GradientEvent::SegmentFlip {
                t_us: 70.0,
                z0_mm: 0.0,
                z1_mm: 2.8,
            })
            .with_event(GradientEvent::SegmentFlip {
                t_us: 70.0,
                z0_mm: 3.2,
                z1_mm: 6.0,
            })
            .validate(&g)
            .unwrap();
        let map = s.flip_time_map(&[3.0, 1.0, 6.0]);
        assert_eq!(map[0], vec![60.0]);
        assert_eq!(map[1], vec![70.0]);
        assert_eq!(map[2], vec![70.0]);
    }

    #[test]
    fn global_flip_map() {
        let g = grid();
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::GlobalFlip { t_us: 60.0 })
            .validate(&g)
            .unwrap();
        assert!(s.flip_time_map(&g.z_grid()).iter().all(|t| t == &vec![60.0]));
    }

    #[test]
    fn aliasing_guard() {
        // 2 pi rad/us/mm for 120 us on dz = 0.1 mm winds far past pi/dz.
        let err = GradientSchedule::new(2.0 * PI, 3.0)
            .validate(&grid())
            .unwrap_err();
        assert!(err.to_string().contains("aliasing guard"));
        // Flipping at 50 us bounds the winding at 2 pi * 50 rad/mm.
        let ok = GradientSchedule::new(2.0 * PI, 3.0)
            .with_event(GradientEvent::GlobalFlip { t_us: 50.0 })
            .validate(&SimulationGrid::new(6.0, 768, 100.0, 0.0025).unwrap())
            .unwrap();
        let k = ok.peak_winding(&[0.0, 3.0]);
        assert!((k - 2.0 * PI * 50.0).abs() < 1e-9);
    }

    #[test]
    fn changes_between_brackets_events() {
        let g = fine_grid();
        let s = GradientSchedule::new(1.0, 3.0)
            .with_event(GradientEvent::GlobalFlip { t_us: 50.0 })
            .with_event(GradientEvent::LineFlip {
                a: 1.0,
                b: -1.0,
                c: 60.0,
            })
            .validate(&g)
            .unwrap();
        assert!(s.changes_between(49.995, 50.005));
        assert!(!s.changes_between(50.005, 59.9));
        assert!(s.changes_between(59.9, 60.1));
        assert!(s.changes_between(65.0, 65.1));
        assert!(!s.changes_between(66.1, 100.0));
    }
}
