//! Run manifests: a TOML file merged with command-line overrides and checked
//! against the documented ranges.

use std::path::{Path, PathBuf};

use engel_lab::presets::{uses_kappa, PRESET_NAMES};
use serde::{Deserialize, Serialize};

/// Pseudo-preset of `report` that runs the curvature sweep.
pub const SWEEP_PRESET: &str = "kappa-sweep";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    Verification,
    Classification,
    Orbits,
    Holonomy,
    Rigidity,
    Sweep,
}

impl Artifact {
    pub fn name(self) -> &'static str {
        match self {
            Artifact::Verification => "verification",
            Artifact::Classification => "classification",
            Artifact::Orbits => "orbits",
            Artifact::Holonomy => "holonomy",
            Artifact::Rigidity => "rigidity",
            Artifact::Sweep => "sweep",
        }
    }
}

/// Everything a manifest may set. Missing keys fall back to per-artifact defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub preset: Option<String>,
    pub kappa: Option<f64>,
    #[serde(rename = "T")]
    pub t_total: Option<f64>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub samples: Option<usize>,
    pub orbits: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub artifacts: Option<Vec<Artifact>>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid manifest {}: {e}", path.display()))
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: Manifest) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(preset, kappa, t_total, dt, tol, seed, trials, samples, orbits, out, format, artifacts);
        self
    }
}

/// Resolved parameters of one artifact. This is what lands in the report,
/// so it holds nothing that depends on where the output is written.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub preset: Option<String>,
    pub kappa: Option<f64>,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub dt: f64,
    pub tol: f64,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub orbits: usize,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

impl Settings {
    pub fn resolve(m: &Manifest, artifact: Artifact) -> Result<Self, String> {
        let (t_default, dt_default) = match artifact {
            Artifact::Classification | Artifact::Sweep => (50.0, 0.01),
            Artifact::Orbits => (10.0, 0.01),
            Artifact::Holonomy => (20.0, 0.01),
            Artifact::Rigidity => (1.0, 1e-3),
            Artifact::Verification => (0.0, 0.0),
        };
        let preset = match artifact {
            Artifact::Rigidity => None,
            Artifact::Sweep => Some(SWEEP_PRESET.to_string()),
            _ => Some(m.preset.clone().ok_or_else(|| format!("{} needs --preset", artifact.name()))?),
        };
        if let Some(p) = &preset {
            check(p == SWEEP_PRESET || PRESET_NAMES.contains(&p.as_str()), || {
                format!("unknown preset '{p}' (known: {})", PRESET_NAMES.join(", "))
            })?;
        }
        let s = Settings {
            kappa: match &preset {
                Some(p) if uses_kappa(p) => m.kappa,
                _ => None,
            },
            preset,
            t_total: m.t_total.unwrap_or(t_default),
            dt: m.dt.unwrap_or(dt_default),
            tol: m.tol.unwrap_or(1e-8),
            seed: m.seed.unwrap_or(7),
            trials: m.trials.unwrap_or(1000),
            samples: m.samples.unwrap_or(1000),
            orbits: m.orbits.unwrap_or(3),
        };
        if let Some(k) = m.kappa {
            check(k.is_finite() && k.abs() <= 100.0, || format!("kappa must lie in [-100, 100], got {k}"))?;
        }
        check(s.tol > 0.0 && s.tol <= 1e-2, || format!("tol must lie in (0, 1e-2], got {}", s.tol))?;
        check((1..=1_000_000).contains(&s.trials), || format!("trials must lie in [1, 1e6], got {}", s.trials))?;
        check((1..=1_000_000).contains(&s.samples), || format!("samples must lie in [1, 1e6], got {}", s.samples))?;
        check((1..=64).contains(&s.orbits), || format!("orbits must lie in [1, 64], got {}", s.orbits))?;
        if artifact != Artifact::Verification {
            check(s.t_total > 0.0 && s.t_total <= 1e4, || format!("T must lie in (0, 1e4], got {}", s.t_total))?;
            check(s.dt > 0.0 && s.dt <= 1.0 && s.dt < s.t_total, || {
                format!("dt must lie in (0, min(1, T)), got {}", s.dt)
            })?;
            check(s.t_total / s.dt <= 1e7, || "T/dt exceeds 1e7 steps".to_string())?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let m: Manifest = toml::from_str(
            "preset = \"lorentz-magnetic\"\nkappa = -0.5\nT = 20.0\nartifacts = [\"verification\", \"classification\"]\n",
        )
        .unwrap();
        assert_eq!(m.t_total, Some(20.0));
        assert_eq!(m.artifacts.as_deref(), Some(&[Artifact::Verification, Artifact::Classification][..]));
        assert!(toml::from_str::<Manifest>("bogus = 1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = Manifest { preset: Some("darboux".into()), seed: Some(1), ..Manifest::default() };
        let m = file.overlay(Manifest { seed: Some(2), ..Manifest::default() });
        assert_eq!((m.preset.as_deref(), m.seed), (Some("darboux"), Some(2)));
    }

    #[test]
    fn ranges_are_enforced() {
        let base = Manifest { preset: Some("darboux".into()), ..Manifest::default() };
        assert!(Settings::resolve(&base, Artifact::Orbits).is_ok());
        let bad_dt = Manifest { dt: Some(-1.0), ..base.clone() };
        assert!(Settings::resolve(&bad_dt, Artifact::Orbits).is_err());
        let bad_preset = Manifest { preset: Some("nope".into()), ..Manifest::default() };
        assert!(Settings::resolve(&bad_preset, Artifact::Verification).is_err());
        assert!(Settings::resolve(&Manifest::default(), Artifact::Classification).is_err());
        assert!(Settings::resolve(&Manifest::default(), Artifact::Rigidity).is_ok());
    }
}
