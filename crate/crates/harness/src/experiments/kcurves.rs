use qgyro_core::steady::k_curves;

use crate::error::HarnessError;
use crate::output::{Cell, ResultBundle, Table};
use crate::registry::{Experiment, RunContext};

/// `k_x`, `k_y` against the frame frequency, one table per quadrupole constant.
pub struct KCurves;

impl Experiment for KCurves {
    fn name(&self) -> &'static str {
        "kcurves"
    }

    fn description(&self) -> &'static str {
        "steady-state k_x and k_y versus omega for each configured C_Q"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultBundle, HarnessError> {
        let cfg = &ctx.config.kcurves;
        let base = cfg.overrides.apply(&ctx.config.model);
        let grid = cfg.omega.build()?;
        let mut bundle = ResultBundle::new(self.name());
        let mut min_kx = Vec::new();
        for (i, &c_q) in cfg.c_q.iter().enumerate() {
            let p = base.with_c_q(c_q);
            let mut t = Table::new(format!("kcurves_cq{i:02}.csv"), &["omega", "k_x", "k_y", "status"]);
            t.meta("experiment", self.name()).meta("axis", "omega").meta_params(&p);
            let mut lowest = f64::INFINITY;
            for (&omega, r) in grid.values().iter().zip(k_curves(&p, &grid)?) {
                match r {
                    Ok(s) => {
                        lowest = lowest.min(s.k_x);
                        t.push(vec![omega.into(), s.k_x.into(), s.k_y.into(), "ok".into()]);
                    }
                    Err(e) => {
                        bundle.failures.push(format!("c_q = {c_q}, omega = {omega}: {e}"));
                        t.push(vec![omega.into(), f64::NAN.into(), f64::NAN.into(), Cell::Text(e.to_string())]);
                    }
                }
            }
            min_kx.push(lowest);
            bundle.tables.push(t);
        }
        bundle.diag("c_q", &cfg.c_q);
        bundle.diag("min_k_x", min_kx);
        Ok(bundle)
    }
}
