use qgyro_core::steady::{sweep_shift, SweepAxis, SweepResult};
use serde::Serialize;

use crate::error::HarnessError;
use crate::output::{fmt_num, Cell, ResultBundle, Table};
use crate::registry::{Experiment, RunContext};

/// Self-consistent deviation `omega_s` along configured parameter axes.
pub struct ShiftSweep;

/// Sign change of `omega_s` between adjacent successful points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroCrossing {
    pub lo: f64,
    pub hi: f64,
    /// Linear interpolation inside the bracket.
    pub estimate: f64,
}

pub fn zero_crossings(values: &[f64], omega_s: &[f64]) -> Vec<ZeroCrossing> {
    let mut out = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (omega_s[i], omega_s[i + 1]);
        if a.is_nan() || b.is_nan() {
            continue;
        }
        if a == 0.0 {
            out.push(ZeroCrossing { lo: values[i], hi: values[i], estimate: values[i] });
        } else if b != 0.0 && a.signum() != b.signum() {
            let x = values[i] + (values[i + 1] - values[i]) * a / (a - b);
            out.push(ZeroCrossing { lo: values[i], hi: values[i + 1], estimate: x });
        }
    }
    if let (Some(&v), Some(&w)) = (values.last(), omega_s.last()) {
        if w == 0.0 {
            out.push(ZeroCrossing { lo: v, hi: v, estimate: v });
        }
    }
    out
}

fn coherence_labels(res: &SweepResult) -> Vec<f64> {
    let k = res.base.spin.k();
    (0..res.base.spin.dim() - 1).map(|i| -k + i as f64).collect()
}

impl Experiment for ShiftSweep {
    fn name(&self) -> &'static str {
        "shift-sweep"
    }

    fn description(&self) -> &'static str {
        "omega_s, k_x and optional coherences along C_Q, Omega_d or beta"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultBundle, HarnessError> {
        let mut bundle = ResultBundle::new(self.name());
        for spec in &ctx.config.shift_sweep.sweeps {
            let base = spec.overrides.apply(&ctx.config.model);
            let grid = spec.grid.build()?;
            let res = sweep_shift(spec.axis, &grid, &base, spec.coherences)?;

            let mut cols: Vec<String> = [spec.axis.name(), "omega_s", "k_x", "k_y", "iterations", "other_roots", "status"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let labels = if spec.coherences { coherence_labels(&res) } else { Vec::new() };
            for m in &labels {
                cols.push(format!("abs_rho_m{m}"));
                cols.push(format!("arg_rho_m{m}"));
            }
            let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut t = Table::new(format!("{}.csv", spec.name), &col_refs);
            t.meta("experiment", self.name()).meta("sweep", spec.name.as_str()).meta("axis", spec.axis.name());
            t.meta_params(&base);
            if spec.coherences {
                t.meta("coherence", "rho_{m,m+1} = <m|rho_s|m+1> at omega = omega_s");
            }

            let mut omega_s = Vec::with_capacity(res.points.len());
            let mut max_other = 0usize;
            for pt in &res.points {
                let mut row: Vec<Cell> = vec![pt.value.into()];
                match &pt.outcome {
                    Ok(rec) => {
                        let s = &rec.solution;
                        omega_s.push(s.omega_s);
                        max_other = max_other.max(s.other_roots);
                        row.extend([
                            s.omega_s.into(),
                            s.k_x.into(),
                            s.k_y.into(),
                            s.iterations.into(),
                            s.other_roots.into(),
                            "ok".into(),
                        ]);
                        for c in rec.coherences.iter().flatten() {
                            row.push(c.norm.into());
                            row.push(c.phase.into());
                        }
                    }
                    Err(e) => {
                        omega_s.push(f64::NAN);
                        bundle.failures.push(format!("{} = {}: {e}", spec.axis, pt.value));
                        row.extend([f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), 0usize.into(), 0usize.into()]);
                        row.push(Cell::Text(e.to_string()));
                        row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 2 * labels.len()));
                    }
                }
                t.push(row);
            }

            if spec.axis == SweepAxis::Beta {
                let zc = zero_crossings(grid.values(), &omega_s);
                let text: Vec<String> = zc.iter().map(|z| fmt_num(z.estimate)).collect();
                t.meta("beta_0", text.join(" "));
                bundle.diag(&format!("{}.beta_0", spec.name), &zc);
            }
            bundle.diag(&format!("{}.failures", spec.name), res.failures());
            bundle.diag(&format!("{}.max_other_roots", spec.name), max_other);
            bundle.tables.push(t);
        }
        Ok(bundle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings() {
        let v = [0.0, 1.0, 2.0, 3.0];
        let z = zero_crossings(&v, &[-1.0, 1.0, f64::NAN, 2.0]);
        assert_eq!(z, vec![ZeroCrossing { lo: 0.0, hi: 1.0, estimate: 0.5 }]);
        assert_eq!(zero_crossings(&v, &[1.0, 0.0, -1.0, -2.0]).len(), 1);
        assert!(zero_crossings(&v, &[1.0, 2.0, 3.0, 4.0]).is_empty());
    }
}
