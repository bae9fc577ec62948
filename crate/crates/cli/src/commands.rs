use std::fmt::Write;
use std::path::{Path, PathBuf};

use gaussinv::corner::{self, CornerScenario, SiContext};
use gaussinv::invariant::{
    commutation_residual, design_protocol, invariance_residual, jdot_consistency, CommutationResidual, Design, Protocol,
};
use gaussinv::linalg::Vector;
use gaussinv::oracle::run_corner_oracle;
use gaussinv::schedule::{validate_boundaries, BoundaryReport};
use gaussinv::{ground_state, propagate, state_match, MatchReport, MatchTolerance, TimeGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, Scenario, ScenarioConfig};
use crate::output::{self, entries, fmt_f64, rows};
use crate::{svg, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Design the protocol and write protocol.csv / protocol.json.
    Design,
    /// Design, propagate and check every consistency condition.
    Verify,
    /// Render figure.svg from an existing protocol.csv.
    Figure,
    /// Run a grid of corner scenarios into sweep.csv.
    Sweep,
    /// Run the scaled corner protocol through the grid solver.
    Oracle,
    /// design, verify and figure (and the oracle when enabled).
    All,
}

/// Command-line overrides on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
    pub formats: Vec<Format>,
}

impl Options {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(steps) = self.steps {
            cfg.grid.steps = steps;
        }
        if !self.formats.is_empty() {
            cfg.output.formats = self.formats.clone();
        }
        Ok(cfg)
    }
}

/// Run `cmd`, returning the human-readable summary.
pub fn run(cmd: Command, opts: &Options) -> Result<String, CliError> {
    let cfg = opts.resolve()?;
    let dir = output::ensure_dir(&cfg.output.dir)?;
    match cmd {
        Command::Design => design(&cfg, &dir).map(|(_, _, s)| s),
        Command::Verify => verify(&cfg, &dir).map(|(_, s)| s),
        Command::Figure => figure(&cfg, &dir),
        Command::Sweep => sweep(&cfg, &dir),
        Command::Oracle => oracle(&cfg, &dir),
        Command::All => {
            let mut cfg = cfg;
            if !cfg.output.formats.contains(&Format::Csv) {
                cfg.output.formats.push(Format::Csv);
            }
            let mut text = design(&cfg, &dir)?.2;
            text += &verify(&cfg, &dir)?.1;
            text += &figure(&cfg, &dir)?;
            if cfg.grid.oracle {
                text += &oracle(&cfg, &dir)?;
            }
            Ok(text)
        }
    }
}

fn grid_for(s: &Scenario, steps: usize) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::over(s.duration, steps)?)
}

pub fn build_protocol(cfg: &RunConfig) -> Result<(Scenario, Protocol), CliError> {
    let s = cfg.scenario.build()?;
    let p = design_protocol(&s.shape, &s.path, s.mass, grid_for(&s, cfg.grid.steps)?)?;
    Ok((s, p))
}

fn design(cfg: &RunConfig, dir: &Path) -> Result<(Scenario, Protocol, String), CliError> {
    let (s, p) = build_protocol(cfg)?;
    let boundary = validate_boundaries(&s.shape, &s.path, &s.initial, &s.target)?;
    if let Some(f) = boundary.failures().next() {
        return Err(CliError::Core(gaussinv::Error::InvalidSchedule(format!(
            "boundary condition {} fails at t={} (residual {:.3e})",
            f.condition, f.t, f.residual
        ))));
    }
    let fmts = &cfg.output.formats;
    if fmts.contains(&Format::Csv) {
        output::write_protocol_csv(&dir.join("protocol.csv"), &output::protocol_rows(&p))?;
    }
    if fmts.contains(&Format::Json) {
        output::write_protocol_json(&dir.join("protocol.json"), &p)?;
    }

    let mut text = String::new();
    let _ = writeln!(text, "design: d={} steps={} T={}", p.dim(), p.grid.steps(), s.duration);
    let _ = writeln!(text, "  max symplectic residual {:.3e}", p.max_symplectic_residual());
    if let Some(c) = &s.corner {
        let f = corner::max_field(&p, c, &cfg.si)?;
        let _ = writeln!(text, "  max field {:.6e} V/m at t={}", f.field, f.time);
    }
    let dev = corner::max_center_deviation(&p) / s.length_scale();
    let _ = writeln!(text, "  max |C - L| = {dev:.4e} (length units {})", s.length_scale());
    Ok((s, p, text))
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceSummary {
    pub max_quadratic: f64,
    pub max_linear: f64,
    pub max_scalar: f64,
    pub worst_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JdotSummary {
    pub initial_norm: f64,
    pub ordering: String,
    pub residual: f64,
    pub other_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub dim: usize,
    pub steps: usize,
    pub duration: f64,
    pub boundary_pass: bool,
    pub boundary: BoundaryReport,
    pub invariance: InvarianceSummary,
    pub commutation_initial: CommutationResidual,
    pub commutation_final: CommutationResidual,
    pub final_match: MatchReport,
    /// `max ‖X(t) − [L; mL̇]‖`
    pub trajectory_residual: f64,
    /// `max ‖Σ − ½Γ⁻¹‖ / ‖Σ‖`
    pub covariance_consistency: f64,
    pub symplectic_residual: f64,
    pub jdot: JdotSummary,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "verify: d={} steps={} T={}", self.dim, self.steps, self.duration);
        let _ = writeln!(
            t,
            "  boundary conditions        {} (max residual {:.3e})",
            if self.boundary_pass { "pass" } else { "FAIL" },
            self.boundary.max_residual()
        );
        for f in self.boundary.failures() {
            let _ = writeln!(t, "    {} at t={}: {:.3e}", f.condition, f.t, f.residual);
        }
        let inv = &self.invariance;
        let _ = writeln!(
            t,
            "  invariance residual        quadratic {:.3e}, linear {:.3e}, scalar {:.3e}",
            inv.max_quadratic, inv.max_linear, inv.max_scalar
        );
        let _ = writeln!(
            t,
            "  endpoint commutation       t=0 {:.3e}/{:.3e}, t=T {:.3e}/{:.3e}",
            self.commutation_initial.quadratic,
            self.commutation_initial.linear,
            self.commutation_final.quadratic,
            self.commutation_final.linear
        );
        let m = &self.final_match;
        let _ = writeln!(
            t,
            "  final state match          {} (covariance {:.3e}, position {:.3e}, mean {:.3e} widths)",
            if m.pass { "pass" } else { "FAIL" },
            m.covariance_rel_error,
            m.position_rel_error,
            m.mean_offset_widths
        );
        let _ = writeln!(t, "  trajectory residual        {:.3e}", self.trajectory_residual);
        let _ = writeln!(t, "  covariance consistency     {:.3e}", self.covariance_consistency);
        let _ = writeln!(t, "  symplectic residual        {:.3e}", self.symplectic_residual);
        let _ = writeln!(
            t,
            "  dJ/dt ordering             {} (residual {:.3e}, other {:.3e})",
            self.jdot.ordering, self.jdot.residual, self.jdot.other_residual
        );
        t
    }
}

pub fn verify_report(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let (s, p) = build_protocol(cfg)?;
    let boundary = validate_boundaries(&s.shape, &s.path, &s.initial, &s.target)?;
    let res = invariance_residual(&p)?;
    let first = &p.points[0];
    let last = p.points.last().expect("grid has at least two points");
    let commutation_initial = commutation_residual(&first.invariant, &s.initial)?;
    let commutation_final = commutation_residual(&last.invariant, &s.target)?;

    let design = Design::new(s.shape.clone(), s.path.clone(), s.mass)?;
    let states = propagate(&ground_state(&s.initial)?, &design, &p.grid)?;
    let final_match = state_match(states.last().unwrap(), &ground_state(&s.target)?, MatchTolerance::default())?;
    let mut trajectory_residual = 0.0_f64;
    let mut covariance_consistency = 0.0_f64;
    for (state, pt) in states.iter().zip(&p.points) {
        let want = Vector::from_iterator(
            2 * p.dim(),
            pt.path.l.iter().copied().chain(pt.path.l_dot.iter().map(|v| v * s.mass)),
        );
        trajectory_residual = trajectory_residual.max((&state.mean - want).norm());
        let from_invariant = pt.invariant.gamma_inverse() * 0.5;
        covariance_consistency =
            covariance_consistency.max((&state.covariance - from_invariant).norm() / state.covariance.norm());
    }
    let jdot = jdot_consistency(&s.shape, p.grid.clone())?;

    Ok(VerifyReport {
        dim: p.dim(),
        steps: p.grid.steps(),
        duration: s.duration,
        boundary_pass: boundary.all_pass(),
        boundary,
        invariance: InvarianceSummary {
            max_quadratic: res.max_quadratic(),
            max_linear: res.max_linear(),
            max_scalar: res.max_scalar(),
            worst_time: res.argmax_quadratic().map(|i| p.grid.time(i)),
        },
        commutation_initial,
        commutation_final,
        final_match,
        trajectory_residual,
        covariance_consistency,
        symplectic_residual: p.max_symplectic_residual(),
        jdot: JdotSummary {
            initial_norm: jdot.initial_norm,
            ordering: jdot.matching.to_string(),
            residual: jdot.residual(),
            other_residual: jdot.other_residual(),
        },
    })
}

fn verify(cfg: &RunConfig, dir: &Path) -> Result<(VerifyReport, String), CliError> {
    let report = verify_report(cfg)?;
    if cfg.output.formats.contains(&Format::Json) {
        output::write_json(&dir.join("verify.json"), &report)?;
    }
    let text = report.summary();
    Ok((report, text))
}

fn figure(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let table = output::read_protocol_csv(&dir.join("protocol.csv"))?;
    let (mass, length) = match &cfg.scenario {
        ScenarioConfig::Corner(c) => (c.mass, c.radius),
        ScenarioConfig::Custom(c) => (c.mass, 1.0),
    };
    let svg_text = svg::render(&table, mass, length, &cfg.figure)?;
    let path = dir.join("figure.svg");
    output::write_text(&path, &svg_text)?;
    let dev = svg::max_deviation(&table).map_or(f64::NAN, |(d, _)| d / length);
    Ok(format!("figure: {} ({} ellipses, max |C - L| = {dev:.4} r)\n", path.display(), cfg.figure.ellipses))
}

#[derive(Debug, Clone)]
struct SweepRow {
    ratio: f64,
    duration: f64,
    result: Result<SweepValues, String>,
}

#[derive(Debug, Clone)]
struct SweepValues {
    field: f64,
    field_time: f64,
    center_deviation: f64,
    covariance_error: f64,
    mean_offset: f64,
}

fn sweep_one(base: &CornerScenario, si: &SiContext, steps: usize, ratio: f64, duration: f64) -> Result<SweepValues, CliError> {
    let c = CornerScenario {
        omega_r: ratio * base.omega_t,
        duration: duration / base.omega_t,
        ..base.clone()
    };
    let (setup, p) = corner::corner_protocol(&c, steps)?;
    let f = corner::max_field(&p, &c, si)?;
    let design = Design::new(setup.shape, setup.path, c.mass)?;
    let states = propagate(&ground_state(&setup.initial)?, &design, &p.grid)?;
    let m = state_match(states.last().unwrap(), &ground_state(&setup.target)?, MatchTolerance::default())?;
    Ok(SweepValues {
        field: f.field,
        field_time: f.time,
        center_deviation: corner::max_center_deviation(&p) / c.radius,
        covariance_error: m.covariance_rel_error,
        mean_offset: m.mean_offset_widths,
    })
}

fn sweep(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let ScenarioConfig::Corner(corner_cfg) = &cfg.scenario else {
        return Err(CliError::Config("sweep runs corner scenarios only".into()));
    };
    let base = corner_cfg.scenario()?;
    cfg.si.validate()?;
    let pairs: Vec<(f64, f64)> = cfg
        .sweep
        .ratios
        .iter()
        .flat_map(|&r| cfg.sweep.durations.iter().map(move |&d| (r, d)))
        .collect();
    let results: Vec<SweepRow> = pairs
        .par_iter()
        .map(|&(ratio, duration)| SweepRow {
            ratio,
            duration,
            result: sweep_one(&base, &cfg.si, cfg.grid.steps, ratio, duration).map_err(|e| e.to_string()),
        })
        .collect();

    let header = [
        "ratio",
        "duration",
        "steps",
        "max_field_v_per_m",
        "max_field_time",
        "max_center_deviation",
        "final_covariance_error",
        "final_mean_offset",
        "status",
    ]
    .map(String::from)
    .to_vec();
    let records = results.iter().map(|r| {
        let mut rec = vec![fmt_f64(r.ratio), fmt_f64(r.duration), cfg.grid.steps.to_string()];
        match &r.result {
            Ok(v) => {
                rec.extend(
                    [v.field, v.field_time, v.center_deviation, v.covariance_error, v.mean_offset].map(fmt_f64),
                );
                rec.push("ok".into());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push(format!("error: {e}"));
            }
        }
        rec
    });
    let path = dir.join("sweep.csv");
    output::write_csv(&path, std::iter::once(header).chain(records))?;

    let failed = results.iter().filter(|r| r.result.is_err()).count();
    let mut text = format!("sweep: {} rows ({failed} failed) -> {}\n", results.len(), path.display());
    for r in &results {
        let line = match &r.result {
            Ok(v) => format!(
                "  ratio {:>6} T={:>6}: field {:.4e} V/m, |C - L|/r {:.4}, covariance error {:.2e}",
                r.ratio, r.duration, v.field, v.center_deviation, v.covariance_error
            ),
            Err(e) => format!("  ratio {:>6} T={:>6}: {e}", r.ratio, r.duration),
        };
        text.push_str(&line);
        text.push('\n');
    }
    Ok(text)
}

#[derive(Serialize)]
struct OracleSample {
    t: f64,
    norm: f64,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    reference_mean: Vec<f64>,
    reference_covariance: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct OracleJson {
    ratio: f64,
    duration: f64,
    radius: f64,
    steps: usize,
    grid: gaussinv::oracle::GridSpec,
    fidelity: f64,
    infidelity: f64,
    max_norm_error: f64,
    max_moment_error: f64,
    samples: Vec<OracleSample>,
}

fn oracle(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let ocfg = cfg.grid.oracle(&cfg.scenario)?;
    let report = run_corner_oracle(&ocfg)?;
    let doc = OracleJson {
        ratio: report.scenario.ratio(),
        duration: report.scenario.duration,
        radius: report.scenario.radius,
        steps: ocfg.steps,
        grid: report.grid,
        fidelity: report.fidelity,
        infidelity: 1.0 - report.fidelity,
        max_norm_error: report.max_norm_error,
        max_moment_error: report.max_moment_error,
        samples: report
            .samples
            .iter()
            .zip(&report.reference)
            .map(|(s, r)| OracleSample {
                t: s.t,
                norm: s.norm,
                mean: entries(&s.state.mean),
                covariance: rows(&s.state.covariance),
                reference_mean: entries(&r.mean),
                reference_covariance: rows(&r.covariance),
            })
            .collect(),
    };
    if cfg.output.formats.contains(&Format::Json) {
        output::write_json(&dir.join("oracle.json"), &doc)?;
    }
    if cfg.grid.snapshot {
        report.final_field.write_density(&dir.join("psi_final.bin"))?;
    }
    Ok(format!(
        "oracle: {0}x{0} grid, {1} steps: 1 - F = {2:.3e}, max moment error {3:.3e}, max norm drift {4:.3e}\n",
        report.grid.points, ocfg.steps, doc.infidelity, report.max_moment_error, report.max_norm_error
    ))
}
