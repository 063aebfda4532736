use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use autocorr::AnalyticFamily;
use clap::{Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    /// Upper and lower constants, or a C_p sweep for one weight.
    Constants,
    /// Roots of the sinc minimum condition.
    Roots,
    /// One functional on one family member.
    Evaluate,
    /// Seeded extremal search within a family.
    Search,
    /// Dual bump checks and the case 2bb residual.
    Dual,
    /// The full acceptance suite.
    Verify,
}

impl CommandName {
    pub fn label(&self) -> &'static str {
        match self {
            CommandName::Constants => "constants",
            CommandName::Roots => "roots",
            CommandName::Evaluate => "evaluate",
            CommandName::Search => "search",
            CommandName::Dual => "dual",
            CommandName::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WeightName {
    Interval,
    Gaussian,
}

/// A family given by name (parameters from `param`/`values`) or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Name(String),
    Full(AnalyticFamily),
}

/// Everything a run needs. Flags override keys read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// `b` for the Gaussian, `A` for the indicator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    /// Cell values of a piecewise-constant family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

pub const DEFAULT_A: f64 = 2.0 * PI;
pub const DEFAULT_P_RANGE: (f64, f64) = (2.0, 12.0);
pub const DEFAULT_CELLS_SAMPLED: usize = 4096;
pub const DEFAULT_CELLS_SEARCH: usize = 16;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            format!(
                "config {} line {} column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            )
        })
    }

    /// Keys set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        RunConfig {
            command: top.command.or(self.command),
            weight: top.weight.or(self.weight),
            a: top.a.or(self.a),
            p_min: top.p_min.or(self.p_min),
            p_max: top.p_max.or(self.p_max),
            family: top.family.or(self.family),
            param: top.param.or(self.param),
            values: top.values.or(self.values),
            functional: top.functional.or(self.functional),
            cells: top.cells.or(self.cells),
            support: top.support.or(self.support),
            budget: top.budget.or(self.budget),
            seed: top.seed.or(self.seed),
            tol: top.tol.or(self.tol),
            out: top.out.or(self.out),
            json: top.json.or(self.json),
        }
    }

    /// Fills the defaults the command will use, so reports echo them.
    pub fn with_defaults(mut self) -> RunConfig {
        match self.command {
            Some(CommandName::Constants) => {
                self.p_min.get_or_insert(DEFAULT_P_RANGE.0);
                self.p_max.get_or_insert(DEFAULT_P_RANGE.1);
                self.tol.get_or_insert(1e-6);
                if self.weight == Some(WeightName::Gaussian) {
                    self.a.get_or_insert(DEFAULT_A);
                }
            }
            Some(CommandName::Evaluate) => {
                self.tol.get_or_insert(1e-9);
                if self.functional.as_deref() == Some("gauss") {
                    self.a.get_or_insert(DEFAULT_A);
                }
                if self.family_name() == Some("gaussian") {
                    self.cells.get_or_insert(DEFAULT_CELLS_SAMPLED);
                }
            }
            Some(CommandName::Search) => {
                self.family.get_or_insert(FamilySpec::Name("piecewise-constant".into()));
                if self.family_name() == Some("piecewise-constant") {
                    self.cells.get_or_insert(DEFAULT_CELLS_SEARCH);
                }
                if self.functional.as_deref() == Some("gauss") {
                    self.a.get_or_insert(DEFAULT_A);
                }
                self.seed.get_or_insert(0);
            }
            Some(CommandName::Dual) => {
                self.tol.get_or_insert(1e-9);
            }
            _ => {}
        }
        self
    }

    pub fn family_name(&self) -> Option<&str> {
        match &self.family {
            Some(FamilySpec::Name(n)) => Some(n),
            Some(FamilySpec::Full(f)) => Some(f.label()),
            None => None,
        }
    }
}
