use qgyro_core::dynamics::integrate_feedback;
use qgyro_core::spectral::{find_peaks, spacing_analysis, spectrum, SpacingAnalysis, WindowRegistry};
use qgyro_core::steady::solve_shift;
use serde::Serialize;

use crate::config::{InitialState, RunSpec};
use crate::error::HarnessError;
use crate::output::{Cell, JsonArtifact, ResultBundle, Table};
use crate::registry::{Experiment, RunContext};

/// Feedback integration followed by the late-window spectrum and peak analysis.
pub struct Dynamics;

#[derive(Debug, Clone, Serialize)]
struct PeakRecord {
    freq: f64,
    amplitude: f64,
    relative_amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
struct PeakReport<'a> {
    run: &'a str,
    window: &'static str,
    threshold: f64,
    bin_width: f64,
    peaks: Vec<PeakRecord>,
    spacing: Option<SpacingAnalysis>,
}

fn describe(rho0: &InitialState) -> String {
    match rho0 {
        InitialState::Pure { m } => format!("pure m = {m}"),
        InitialState::Basis { index } => format!("basis index {index}"),
        InitialState::MaximallyMixed => "maximally mixed".into(),
        InitialState::Matrix { .. } => "explicit matrix".into(),
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "run",
    "peaks",
    "dominant_freq",
    "dominant_amplitude",
    "mean_spacing",
    "max_rel_deviation",
    "late_k_perp_mean",
    "late_k_perp_std",
    "minus_omega_s",
    "k_x_at_omega_s",
];

impl Experiment for Dynamics {
    fn name(&self) -> &'static str {
        "dynamics"
    }

    fn description(&self) -> &'static str {
        "feedback dynamics, late-window spectra, peaks and spacing"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultBundle, HarnessError> {
        let cfg = &ctx.config.dynamics;
        let window = WindowRegistry::default()
            .get(&cfg.spectral.window)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut bundle = ResultBundle::new(self.name());
        let mut summary = Table::new("summary.csv", &SUMMARY_COLUMNS);
        summary.meta("experiment", self.name()).meta("window", window.name()).meta_num("threshold", cfg.spectral.threshold);
        summary.meta("minus_omega_s", "steady-state root solver at the run parameters; NaN when it fails");

        for run in &cfg.runs {
            match self.one(ctx, run, window.as_ref(), &mut bundle) {
                Ok(row) => summary.push(row),
                Err(e) => {
                    bundle.failures.push(format!("run {}: {e}", run.name));
                    let mut row = vec![Cell::Text(run.name.clone()), 0usize.into()];
                    row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), SUMMARY_COLUMNS.len() - 2));
                    summary.push(row);
                }
            }
        }
        bundle.tables.push(summary);
        Ok(bundle)
    }
}

impl Dynamics {
    fn one(
        &self,
        ctx: &RunContext<'_>,
        run: &RunSpec,
        window: &dyn qgyro_core::spectral::Window,
        bundle: &mut ResultBundle,
    ) -> Result<Vec<Cell>, HarnessError> {
        let cfg = &ctx.config.dynamics;
        let p = run.overrides.apply(&ctx.config.model).with_omega(0.0);
        let rho0 = run.rho0.build(p.spin)?;
        let traj = integrate_feedback(&rho0, &p, &cfg.feedback, run.t_end, run.output_dt)?;

        let mut t = Table::new(format!("{}_trajectory.csv", run.name), &["t", "re_k_plus", "im_k_plus", "k_perp"]);
        t.meta("experiment", self.name()).meta("run", run.name.as_str()).meta_params(&p);
        t.meta("rho0", describe(&run.rho0)).meta_num("t_end", run.t_end).meta_num("output_dt", run.output_dt);
        t.meta_num("eps_phase", cfg.feedback.eps_phase)
            .meta("phase_hold", cfg.feedback.phase_hold.to_string())
            .meta_num("initial_phi", cfg.feedback.initial_phi);
        for (time, k) in traj.times.iter().zip(&traj.k_plus) {
            t.push(vec![(*time).into(), k.re.into(), k.im.into(), k.norm().into()]);
        }
        bundle.tables.push(t);

        let late = traj.late_window(run.window_fraction)?;
        let spec = spectrum(&late.k_plus, run.output_dt, window)?;
        let mut s = Table::new(format!("{}_spectrum.csv", run.name), &["freq", "amplitude"]);
        s.meta("experiment", self.name()).meta("run", run.name.as_str()).meta_params(&p);
        s.meta("window", window.name())
            .meta_num("window_fraction", run.window_fraction)
            .meta_num("window_start", late.times[0])
            .meta_num("bin_width", spec.bin_width)
            .meta("axis", "angular frequency; e^{+i nu t} appears at +nu");
        for (f, a) in spec.freqs.iter().zip(&spec.amps) {
            s.push(vec![(*f).into(), (*a).into()]);
        }
        bundle.tables.push(s);

        let peaks = find_peaks(&spec, cfg.spectral.threshold)?;
        let spacing = spacing_analysis(&peaks).ok();
        let max = spec.max_amplitude();
        let report = PeakReport {
            run: &run.name,
            window: window.name(),
            threshold: peaks.threshold,
            bin_width: spec.bin_width,
            peaks: peaks
                .peaks
                .iter()
                .map(|q| PeakRecord { freq: q.freq, amplitude: q.amplitude, relative_amplitude: q.amplitude / max })
                .collect(),
            spacing: spacing.clone(),
        };
        bundle.json.push(JsonArtifact::new(format!("{}_peaks.json", run.name), &report));

        let (k_mean, k_std) = mean_std(&late.k_perp());
        let dominant = peaks.strongest();
        // The carrier-frame signal of a single-frequency state rotates at -omega_s.
        let oracle = if p.omega_d > 0.0 { solve_shift(&p, None).ok() } else { None };
        bundle.diag(&format!("{}.ode_steps", run.name), traj.stats.accepted);
        Ok(vec![
            Cell::Text(run.name.clone()),
            peaks.len().into(),
            dominant.map_or(f64::NAN, |d| d.freq).into(),
            dominant.map_or(f64::NAN, |d| d.amplitude).into(),
            spacing.as_ref().map_or(f64::NAN, |s| s.mean_spacing).into(),
            spacing.as_ref().map_or(f64::NAN, |s| s.max_rel_deviation).into(),
            k_mean.into(),
            k_std.into(),
            oracle.as_ref().map_or(f64::NAN, |o| -o.omega_s).into(),
            oracle.as_ref().map_or(f64::NAN, |o| o.k_x).into(),
        ])
    }
}
