//! Fields shared by every report.

use serde::Serialize;
use transverse_core::frame::Mutation;
use transverse_core::scenario::{Scenario, ScenarioKind};

use crate::config::{Command, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carriere_a: Option<[[i64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_rho: Option<f64>,
}

impl ScenarioInfo {
    pub fn of(s: &Scenario) -> Self {
        let carriere_a = match s.kind() {
            ScenarioKind::Carriere { a, .. } => Some(a),
            _ => None,
        };
        ScenarioInfo {
            name: s.name().to_string(),
            p: s.p(),
            q: s.q(),
            resolution: s.resolution(),
            carriere_a,
            log_rho: s.log_rho(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceInfo {
    pub analytic: f64,
    pub fd: f64,
    pub soliton: f64,
    pub fd_step: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub generated_at: String,
    pub config: String,
    pub seed: u64,
    pub mutation: &'static str,
    pub tolerances: ToleranceInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioInfo>,
}

impl Header {
    pub fn new(cfg: &RunConfig, command: Command) -> Self {
        let t = &cfg.tolerances;
        Header {
            tool: "transverse",
            version: env!("CARGO_PKG_VERSION"),
            command: command.as_str(),
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            config: cfg.path.display().to_string(),
            seed: cfg.seed,
            mutation: match cfg.mutation {
                Mutation::None => "none",
                Mutation::FlipTransverseConnection => "flip_transverse_connection",
            },
            tolerances: ToleranceInfo { analytic: t.analytic, fd: t.fd, soliton: t.soliton, fd_step: t.fd_step },
            scenario: None,
        }
    }

    pub fn with_scenario(mut self, info: ScenarioInfo) -> Self {
        self.scenario = Some(info);
        self
    }
}
