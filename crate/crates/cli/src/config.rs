//! Run configuration: a TOML file validated against the schema in `schema.txt`.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;
use transverse_core::frame::Mutation;
use transverse_core::scenario::Scenario;

use crate::CliError;

pub const DEFAULT_RESOLUTION: usize = 128;
pub const MIN_RESOLUTION: usize = 8;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEFAULT_H: f64 = 0.05;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_OUT_DIR: &str = "transverse-out";
pub const OUT_DIR_ENV: &str = "TRANSVERSE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Flow,
    Functional,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Flow => "flow",
            Command::Functional => "functional",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Spanned<String>,
    command: Option<Spanned<String>>,
    resolution: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
    mutation: Option<Spanned<String>>,
    #[serde(default)]
    carriere: RawCarriere,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    flow: RawFlow,
    #[serde(default)]
    functional: RawFunctional,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCarriere {
    a: Option<Spanned<[[i64; 2]; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    analytic: Option<Spanned<f64>>,
    fd: Option<Spanned<f64>>,
    soliton: Option<Spanned<f64>>,
    fd_step: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    t_end: Option<Spanned<f64>>,
    h: Option<Spanned<f64>>,
    rhs: Option<Spanned<String>>,
    mu_sigma: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctional {
    sigma: Option<Spanned<Vec<f64>>>,
    evaluate: Option<Spanned<Vec<String>>>,
    max_iterations: Option<Spanned<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    samples: Option<Spanned<i64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub analytic: f64,
    pub fd: f64,
    pub soliton: f64,
    pub fd_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowRhs {
    Ricci,
    DeTurck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub t_end: f64,
    pub h: f64,
    pub rhs: FlowRhs,
    pub mu_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    FQ,
    WQ,
    LambdaQ,
    MuQ,
}

impl Functional {
    pub const ALL: [Functional; 4] = [Functional::FQ, Functional::LambdaQ, Functional::WQ, Functional::MuQ];

    pub fn as_str(self) -> &'static str {
        match self {
            Functional::FQ => "F_Q",
            Functional::WQ => "W_Q",
            Functional::LambdaQ => "lambda_Q",
            Functional::MuQ => "mu_Q",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    pub scenario_name: String,
    pub command: Option<Command>,
    pub carriere_a: Option<[[i64; 2]; 2]>,
    pub resolution: usize,
    pub seed: u64,
    pub mutation: Mutation,
    pub tolerances: Tolerances,
    pub flow: FlowParams,
    pub sigmas: Vec<f64>,
    pub functionals: Vec<Functional>,
    pub max_iterations: usize,
    pub samples: usize,
    pub out_dir: Option<PathBuf>,
}

struct Source<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, field: &str, span: Range<usize>, msg: impl std::fmt::Display) -> Result<T, CliError> {
        Err(CliError::Config(format!("{}:{}: field `{field}`: {msg}", self.path.display(), self.line(span))))
    }

    fn positive(&self, field: &str, v: Option<Spanned<f64>>, default: f64) -> Result<f64, CliError> {
        match v {
            None => Ok(default),
            Some(s) => {
                let x = *s.get_ref();
                if x.is_finite() && x > 0.0 {
                    Ok(x)
                } else {
                    self.err(field, s.span(), format!("must be a positive finite number, got {x}"))
                }
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
        let src = Source { path, text };

        let scenario_name = raw.scenario.get_ref().clone();
        if !["flat_torus", "product_sphere", "carriere"].contains(&scenario_name.as_str()) {
            return src.err(
                "scenario",
                raw.scenario.span(),
                format!("unknown scenario `{scenario_name}` (expected flat_torus, product_sphere or carriere)"),
            );
        }
        let command = match raw.command {
            None => None,
            Some(c) => Some(match c.get_ref().as_str() {
                "verify" => Command::Verify,
                "flow" => Command::Flow,
                "functional" => Command::Functional,
                other => return src.err("command", c.span(), format!("unknown command `{other}`")),
            }),
        };
        let resolution = match raw.resolution {
            None => DEFAULT_RESOLUTION,
            Some(r) => {
                let n = *r.get_ref();
                if n < MIN_RESOLUTION as i64 {
                    return src.err("resolution", r.span(), format!("must be at least {MIN_RESOLUTION}, got {n}"));
                }
                n as usize
            }
        };
        let seed = match raw.seed {
            None => DEFAULT_SEED,
            Some(s) if *s.get_ref() >= 0 => *s.get_ref() as u64,
            Some(s) => return src.err("seed", s.span(), "must be non-negative"),
        };
        let mutation = match raw.mutation {
            None => Mutation::None,
            Some(m) => match m.get_ref().as_str() {
                "none" => Mutation::None,
                "flip_transverse_connection" => Mutation::FlipTransverseConnection,
                other => return src.err("mutation", m.span(), format!("unknown mutation `{other}`")),
            },
        };
        let carriere_a = match raw.carriere.a {
            None => None,
            Some(a) => {
                if scenario_name != "carriere" {
                    return src.err("carriere.a", a.span(), "only applies to the carriere scenario");
                }
                if let Err(e) = Scenario::carriere(*a.get_ref()) {
                    return src.err("carriere.a", a.span(), e);
                }
                Some(*a.get_ref())
            }
        };
        let t = raw.tolerances;
        let tolerances = Tolerances {
            analytic: src.positive("tolerances.analytic", t.analytic, 1e-6)?,
            fd: src.positive("tolerances.fd", t.fd, 1e-4)?,
            soliton: src.positive("tolerances.soliton", t.soliton, 1e-6)?,
            fd_step: src.positive("tolerances.fd_step", t.fd_step, DEFAULT_FD_STEP)?,
        };
        let rhs = match raw.flow.rhs {
            None => FlowRhs::Ricci,
            Some(r) => match r.get_ref().as_str() {
                "ricci" => FlowRhs::Ricci,
                "deturck" => FlowRhs::DeTurck,
                other => return src.err("flow.rhs", r.span(), format!("unknown right-hand side `{other}`")),
            },
        };
        let mu_sigma = match raw.flow.mu_sigma {
            None => None,
            Some(s) => Some(src.positive("flow.mu_sigma", Some(s), 1.0)?),
        };
        let flow = FlowParams {
            t_end: src.positive("flow.t_end", raw.flow.t_end, DEFAULT_T_END)?,
            h: src.positive("flow.h", raw.flow.h, DEFAULT_H)?,
            rhs,
            mu_sigma,
        };
        let sigmas = match raw.functional.sigma {
            None => vec![1.0],
            Some(s) => {
                let span = s.span();
                let v = s.into_inner();
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return src.err("functional.sigma", span, "must be a non-empty list of positive numbers");
                }
                v
            }
        };
        let functionals = match raw.functional.evaluate {
            None => Functional::ALL.to_vec(),
            Some(list) => {
                let span = list.span();
                let mut out = Vec::new();
                for name in list.into_inner() {
                    match Functional::ALL.iter().find(|f| f.as_str() == name) {
                        Some(f) if !out.contains(f) => out.push(*f),
                        Some(_) => {}
                        None => {
                            return src.err(
                                "functional.evaluate",
                                span,
                                format!("unknown functional `{name}` (expected F_Q, W_Q, lambda_Q or mu_Q)"),
                            )
                        }
                    }
                }
                out
            }
        };
        let max_iterations = match raw.functional.max_iterations {
            None => transverse_core::functionals::MU_MAX_ITER,
            Some(m) if *m.get_ref() >= 1 => *m.get_ref() as usize,
            Some(m) => return src.err("functional.max_iterations", m.span(), "must be at least 1"),
        };
        let samples = match raw.verify.samples {
            None => DEFAULT_SAMPLES,
            Some(s) if *s.get_ref() >= 1 => *s.get_ref() as usize,
            Some(s) => return src.err("verify.samples", s.span(), "must be at least 1"),
        };
        Ok(RunConfig {
            path: path.to_path_buf(),
            scenario_name,
            command,
            carriere_a,
            resolution,
            seed,
            mutation,
            tolerances,
            flow,
            sigmas,
            functionals,
            max_iterations,
            samples,
            out_dir: raw.output.dir.map(PathBuf::from),
        })
    }

    /// The configured scenario, validated at load.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let s = match self.carriere_a {
            Some(a) => Scenario::carriere(a)?,
            None => Scenario::by_name(&self.scenario_name)?,
        };
        let s = s.with_resolution(self.resolution)?;
        s.validate()?;
        Ok(match self.mutation {
            Mutation::None => s,
            m => s.with_mutation(m),
        })
    }

    /// Output directory: command line, then environment, then config, then the default.
    pub fn resolve_out_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        match &self.out_dir {
            Some(p) if p.is_relative() => self.path.parent().unwrap_or(Path::new(".")).join(p),
            Some(p) => p.clone(),
            None => PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(Path::new("test.toml"), text)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse("scenario = \"carriere\"\n").unwrap();
        assert_eq!(c.resolution, 128);
        assert_eq!(c.tolerances.fd_step, 1e-5);
        assert_eq!(c.flow.h, 0.05);
        assert_eq!(c.seed, 1);
        assert_eq!(c.mutation, Mutation::None);
        assert_eq!(c.functionals.len(), 4);
    }

    #[test]
    fn low_resolution_is_rejected_with_its_line() {
        let e = parse("scenario = \"flat_torus\"\n\nresolution = 4\n").unwrap_err().to_string();
        assert!(e.contains("test.toml:3") && e.contains("`resolution`"), "{e}");
    }

    #[test]
    fn carriere_matrix_override_sets_rho() {
        let c = parse("scenario = \"carriere\"\n[carriere]\na = [[2, 1], [1, 1]]\n").unwrap();
        let l = c.scenario().unwrap().log_rho().unwrap();
        assert!((l - 0.9624236501192069).abs() < 1e-12);
        let e = parse("scenario = \"carriere\"\n[carriere]\na = [[1, 1], [0, 1]]\n").unwrap_err().to_string();
        assert!(e.contains(":3:") && e.contains("carriere.a") && e.contains("trace"), "{e}");
    }

    #[test]
    fn schema_violations_name_the_field() {
        let e = parse("scenario = \"carriere\"\nresolutoin = 32\n").unwrap_err().to_string();
        assert!(e.contains("resolutoin") && e.contains("line 2"), "{e}");
        let e = parse("scenario = \"carriere\"\n[flow]\nh = -0.1\n").unwrap_err().to_string();
        assert!(e.contains("flow.h") && e.contains(":3:"), "{e}");
        let e = parse("scenario = \"klein\"\n").unwrap_err().to_string();
        assert!(e.contains("`scenario`") && e.contains(":1:"), "{e}");
        assert!(parse("resolution = 16\n").unwrap_err().to_string().contains("scenario"));
    }

    #[test]
    fn mutation_is_parsed() {
        let c = parse("scenario = \"carriere\"\nmutation = \"flip_transverse_connection\"\n").unwrap();
        assert_eq!(c.mutation, Mutation::FlipTransverseConnection);
    }
}
