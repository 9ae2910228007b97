use std::fmt::Write as _;

use engel_lab::dynamics::holonomy::CLASSIFY_TOL;
use engel_lab::dynamics::{
    characteristic_orbit, classify_projective, developing_map, estimate_global_type, first_return, EstimatorConfig,
    GlobalEstimate, ProjectiveType,
};
use engel_lab::engel::{verify_engel, EngelStructure, VerificationReport};
use engel_lab::presets::build_preset;
use engel_lab::report::{kappa_sweep, sweep_table, to_json_string, Envelope};
use engel_lab::rigidity::{rigidity_probe, ProbeConfig};
use engel_lab::EngelError;
use serde::Serialize;

use crate::manifest::{Artifact, Format, Settings};

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad manifest, flag or output location: exit code 2.
    Config(String),
    /// The computation itself failed: exit code 1.
    Run(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Run(m) => m,
        }
    }
}

impl From<EngelError> for Failure {
    fn from(e: EngelError) -> Self {
        match e {
            EngelError::InvalidParameter(m) => Failure::Config(m),
            e => Failure::Run(e.to_string()),
        }
    }
}

/// One produced artifact.
pub struct Output {
    pub name: &'static str,
    pub extension: &'static str,
    pub body: String,
    pub summary: String,
    pub pass: bool,
}

fn json<T: Serialize>(artifact: Artifact, s: &Settings, result: &T) -> Result<String, Failure> {
    let params = serde_json::to_value(s).map_err(|e| Failure::Run(e.to_string()))?;
    to_json_string(&Envelope::new(artifact.name(), params, result)).map_err(|e| Failure::Run(e.to_string()))
}

fn structure(s: &Settings) -> Result<EngelStructure, Failure> {
    Ok(build_preset(s.preset.as_deref().unwrap_or_default(), s.kappa)?)
}

fn json_only(artifact: Artifact, format: Format) -> Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Config(format!("{} has no CSV form; use --format json", artifact.name()))),
    }
}

fn verification(s: &Settings) -> Result<VerificationReport, Failure> {
    Ok(verify_engel(&structure(s)?, s.samples, s.tol)?)
}

#[derive(Serialize)]
struct ClosedSummary {
    period: f64,
    closing_error: f64,
    class: ProjectiveType,
}

#[derive(Serialize)]
struct Classification {
    estimate: GlobalEstimate,
    /// Holonomy of the characteristic through the first sample point, when it closes up.
    closed_orbit: Option<ClosedSummary>,
}

fn closed_orbit(st: &EngelStructure, t_max: f64, dt: f64) -> Result<Option<ClosedSummary>, Failure> {
    let p0 = st.sample_points(1).remove(0);
    match first_return(st, &p0, t_max, dt) {
        Ok(c) => Ok(Some(ClosedSummary {
            period: c.period,
            closing_error: c.closing_error,
            class: classify_projective(&c.holonomy, CLASSIFY_TOL)?,
        })),
        Err(EngelError::NotClosed | EngelError::ChartExit { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn classification(s: &Settings) -> Result<(Classification, String), Failure> {
    let st = structure(s)?;
    let cfg = EstimatorConfig { t_max: s.t_total, dt: s.dt, ..EstimatorConfig::default() };
    let estimate = estimate_global_type(&st, s.orbits, &cfg)?;
    let closed = closed_orbit(&st, s.t_total.min(20.0), s.dt)?;
    let mut summary = format!("{}: {}", st.name, estimate.kind);
    if let Some(c) = &closed {
        let _ = write!(summary, "; closed characteristic of period {:.6}, {}", c.period, c.class);
    }
    Ok((Classification { estimate, closed_orbit: closed }, summary))
}

pub fn run(artifact: Artifact, s: &Settings, format: Format) -> Result<Output, Failure> {
    match artifact {
        Artifact::Verification => {
            json_only(artifact, format)?;
            let r = verification(s)?;
            let summary = format!(
                "{}: {} ({} of {} points failed)",
                r.structure,
                if r.summary.pass { "pass" } else { "fail" },
                r.summary.n_failed,
                r.summary.n_points
            );
            Ok(Output { name: "verification", extension: "json", body: json(artifact, s, &r)?, summary, pass: r.summary.pass })
        }
        Artifact::Classification => {
            json_only(artifact, format)?;
            let (c, summary) = classification(s)?;
            Ok(Output { name: "classification", extension: "json", body: json(artifact, s, &c)?, summary, pass: true })
        }
        Artifact::Orbits => {
            let st = structure(s)?;
            let p0 = st.sample_points(1).remove(0);
            let trace = characteristic_orbit(&st, &p0, s.t_total, s.dt)?;
            let dev = developing_map(&trace);
            let monotone = dev.is_ok();
            let summary = format!(
                "{}: {} steps, developing angle {}",
                st.name,
                trace.len() - 1,
                if monotone { "monotone" } else { "not monotone" }
            );
            #[derive(Serialize)]
            struct OrbitOut<'a> {
                developing_monotone: bool,
                trace: &'a engel_lab::dynamics::OrbitTrace,
            }
            let (extension, body) = match format {
                Format::Csv => ("csv", trace.to_csv()),
                Format::Json => ("json", json(artifact, s, &OrbitOut { developing_monotone: monotone, trace: &trace })?),
            };
            Ok(Output { name: "orbit", extension, body, summary, pass: monotone })
        }
        Artifact::Holonomy => {
            json_only(artifact, format)?;
            let st = structure(s)?;
            let c = closed_orbit(&st, s.t_total, s.dt)?;
            let summary = match &c {
                Some(c) => format!("{}: period {:.6}, {}", st.name, c.period, c.class),
                None => format!("{}: no closed characteristic within T = {}", st.name, s.t_total),
            };
            Ok(Output { name: "holonomy", extension: "json", body: json(artifact, s, &c)?, summary, pass: true })
        }
        Artifact::Rigidity => {
            json_only(artifact, format)?;
            let cfg = ProbeConfig { t_total: s.t_total, dt: s.dt, n_trials: s.trials, seed: s.seed, ..ProbeConfig::default() };
            let r = rigidity_probe(&cfg)?;
            let outside = r.n_outside + r.n_a_minus;
            let summary = format!(
                "{} trials: A+ {}, A_W {}, outside A+ and A_W {}",
                r.trials.len(),
                r.n_a_plus,
                r.n_a_w,
                outside
            );
            let pass = outside == 0 && r.a_w_iff_trivial;
            Ok(Output { name: "rigidity", extension: "json", body: json(artifact, s, &r)?, summary, pass })
        }
        Artifact::Sweep => {
            let cfg = EstimatorConfig { t_max: s.t_total, dt: s.dt, ..EstimatorConfig::default() };
            let rows = kappa_sweep(s.orbits, &cfg)?;
            let pass = rows.iter().all(|r| r.agrees());
            let summary = sweep_table(&rows);
            let (extension, body) = match format {
                Format::Json => ("json", json(artifact, s, &rows)?),
                Format::Csv => {
                    let mut out = String::from("kappa,discriminant,magnetic_expected,magnetic_estimated,product_expected,product_estimated\n");
                    for r in &rows {
                        let _ = writeln!(
                            out,
                            "{:.16e},{:.16e},{},{},{},{}",
                            r.kappa,
                            r.magnetic_discriminant,
                            r.magnetic_expected,
                            r.magnetic_estimated,
                            r.product_expected,
                            r.product_estimated
                        );
                    }
                    ("csv", out)
                }
            };
            Ok(Output { name: "sweep", extension, body, summary: summary.trim_end().to_string(), pass })
        }
    }
}
