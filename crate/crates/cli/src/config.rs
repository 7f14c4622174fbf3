//! Run configuration: flags over an optional TOML file, validated before dispatch.

use std::path::{Path, PathBuf};

use chernoff_qkd::dibound::MAX_LEVEL;
use chernoff_qkd::protocol::Variant;
use chernoff_qkd::scenarios::{Condition, ScenarioId};
use chernoff_qkd::{Error, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Keys shared by the flags and the config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Scenario (measurement settings) 1, 2 or 3.
    #[arg(long = "case", global = true)]
    pub case: Option<u32>,
    /// Depolarizing noise q in [0, 1/2].
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Block size (largest block size for `analyze`).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Moment hierarchy level.
    #[arg(long, global = true)]
    pub level: Option<usize>,
    /// Number of simulated blocks.
    #[arg(long, global = true)]
    pub blocks: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path (stdout when absent).
    #[arg(long, global = true)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// suffQ, neccQ, suffF, neccF or suffD.
    #[arg(long, global = true)]
    pub condition: Option<String>,
    /// exact or sdp.
    #[arg(long, global = true)]
    pub bound: Option<String>,
    /// QBER for `simulate` (overrides the value implied by --case/--q).
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// standard or modified acceptance rule.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Bisection tolerance on q.
    #[arg(long = "tol-q", global = true)]
    #[serde(rename = "tol_q")]
    pub tol_q: Option<f64>,
}

impl Params {
    /// Flags win over file values.
    pub fn merged_over(self, file: Params) -> Params {
        Params {
            case: self.case.or(file.case),
            q: self.q.or(file.q),
            k: self.k.or(file.k),
            level: self.level.or(file.level),
            blocks: self.blocks.or(file.blocks),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            condition: self.condition.or(file.condition),
            bound: self.bound.or(file.bound),
            eps: self.eps.or(file.eps),
            variant: self.variant.or(file.variant),
            tol_q: self.tol_q.or(file.tol_q),
        }
    }

    pub fn load_file(path: &Path) -> Result<Params> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.case {
            ScenarioId::from_number(c)?;
        }
        for (name, v) in [("q", self.q), ("eps", self.eps)] {
            if let Some(v) = v {
                if !(0.0..=0.5).contains(&v) {
                    return Err(Error::Domain(format!("--{name} {v} outside [0, 1/2]")));
                }
            }
        }
        if self.k == Some(0) {
            return Err(Error::Domain("--k must be at least 1".into()));
        }
        if let Some(l) = self.level {
            if l == 0 || l > MAX_LEVEL {
                return Err(Error::Domain(format!("--level {l} outside 1..={MAX_LEVEL}")));
            }
        }
        if self.blocks == Some(0) {
            return Err(Error::Domain("--blocks must be positive".into()));
        }
        if let Some(t) = self.tol_q {
            if !(t > 0.0 && t < 0.5) {
                return Err(Error::Domain(format!("--tol-q {t} outside (0, 1/2)")));
            }
        }
        self.condition()?;
        self.exact_bound()?;
        self.variant()?;
        Ok(())
    }

    pub fn scenario(&self) -> Result<ScenarioId> {
        ScenarioId::from_number(self.case.ok_or_else(|| Error::Validation("--case is required".into()))?)
    }

    pub fn q_required(&self) -> Result<f64> {
        self.q.ok_or_else(|| Error::Validation("--q is required".into()))
    }

    pub fn condition(&self) -> Result<Condition> {
        self.condition.as_deref().unwrap_or("suffQ").parse()
    }

    /// `true` for the exact isotropic attack, `false` for the SDP bound.
    pub fn exact_bound(&self) -> Result<bool> {
        match self.bound.as_deref().unwrap_or("exact") {
            "exact" => Ok(true),
            "sdp" => Ok(false),
            other => Err(Error::Validation(format!("unknown bound {other:?}; expected exact or sdp"))),
        }
    }

    pub fn variant(&self) -> Result<Variant> {
        match self.variant.as_deref().unwrap_or("standard") {
            "standard" => Ok(Variant::Standard),
            "modified" => Ok(Variant::Modified),
            other => Err(Error::Validation(format!("unknown variant {other:?}; expected standard or modified"))),
        }
    }

    pub fn level_or_default(&self) -> usize {
        self.level.unwrap_or(2)
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// SHA-256 over the command, the resolved parameters and the input file contents.
pub fn config_hash(command: &str, params: &Params, inputs: &[(&Path, &[u8])]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(params).expect("parameters serialize"));
    for (path, bytes) in inputs {
        h.update([0]);
        h.update(path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default().as_bytes());
        h.update([0]);
        h.update(bytes);
    }
    hex::encode(h.finalize())
}
