use crate::error::{GemError, Result};
use crate::solver::SimulationResult;

/// One row of the conservation ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t_us: f64,
    /// `int_0^t |E(t', 0)|^2 dt'`.
    pub e_in_cum: f64,
    /// `int_0^t |E(t', L)|^2 dt'`.
    pub e_out_cum: f64,
    /// `N * sum w_j |alpha_j|^2 dz`.
    pub stored: f64,
}

impl LedgerRow {
    /// `e_in - e_out - stored`.
    pub fn residual(&self) -> f64 {
        self.e_in_cum - self.e_out_cum - self.stored
    }
}

/// Ledger rows at every recorded step.
pub fn ledger_series(result: &SimulationResult) -> Vec<LedgerRow> {
    let dt = result.grid.dt_us();
    let inp = &result.input_series.values;
    let out = &result.output_series.values;
    let mut rows = Vec::with_capacity(inp.len());
    let (mut e_in, mut e_out) = (0.0, 0.0);
    for i in 0..inp.len() {
        if i > 0 {
            e_in += 0.5 * dt * (inp[i - 1].norm_sqr() + inp[i].norm_sqr());
            e_out += 0.5 * dt * (out[i - 1].norm_sqr() + out[i].norm_sqr());
        }
        rows.push(LedgerRow {
            t_us: result.time(i),
            e_in_cum: e_in,
            e_out_cum: e_out,
            stored: result.stored_excitation_series[i],
        });
    }
    rows
}

/// Ledger rows at the snapshot times only.
pub fn ledger_at_snapshots(result: &SimulationResult) -> Vec<LedgerRow> {
    let stride = result.grid.snapshot_stride();
    ledger_series(result).into_iter().step_by(stride).collect()
}

/// Largest `|residual|` over the snapshot rows, relative to the total input
/// energy.
pub fn max_relative_residual(result: &SimulationResult) -> Result<f64> {
    let rows = ledger_at_snapshots(result);
    let total = rows.last().map_or(0.0, |r| r.e_in_cum);
    if !(total > 0.0) {
        return Err(GemError::Degenerate("ledger needs nonzero input energy".into()));
    }
    Ok(rows.iter().map(|r| r.residual().abs()).fold(0.0, f64::max) / total)
}

/// Where the input energy went, as fractions of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    /// Output energy before the echo gate opens.
    pub transmitted: f64,
    pub echo: f64,
    /// Output energy after the echo gate closes.
    pub late: f64,
    pub stored_at_end: f64,
}

impl EnergyBudget {
    /// `1 - (transmitted + echo + late + stored)`.
    pub fn imbalance(&self) -> f64 {
        1.0 - (self.transmitted + self.echo + self.late + self.stored_at_end)
    }
}

/// Splits the output into before, inside and after `echo_gate`.
pub fn energy_budget(result: &SimulationResult, echo_gate: (f64, f64)) -> Result<EnergyBudget> {
    let rows = ledger_series(result);
    let last = rows.last().ok_or_else(|| GemError::MissingData("empty run".into()))?;
    let total = last.e_in_cum;
    if !(total > 0.0) {
        return Err(GemError::Degenerate("input energy is zero".into()));
    }
    let cum_at = |t: f64| {
        let dt = result.grid.dt_us();
        let i = ((t / dt).round().max(0.0) as usize).min(rows.len() - 1);
        rows[i].e_out_cum
    };
    let before = cum_at(echo_gate.0);
    let through = cum_at(echo_gate.1);
    Ok(EnergyBudget {
        transmitted: before / total,
        echo: (through - before) / total,
        late: (last.e_out_cum - through) / total,
        stored_at_end: last.stored / total,
    })
}
