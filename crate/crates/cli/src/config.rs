//! Line-oriented `key = value` run configuration.

use std::path::{Path, PathBuf};

use bubble_core::{FluidParams, Grid, InitSpec, Mode, OuterBc, SolverConfig, Xi0Mode};

use crate::CliError;

/// Every accepted key, in echo order.
pub const KEYS: [&str; 18] = [
    "ca",
    "we",
    "gamma",
    "gamma0",
    "xi_max",
    "cells",
    "cfl",
    "t_end",
    "snapshot_dt",
    "dissipation",
    "mode",
    "outer_bc",
    "init.kind",
    "init.amplitude",
    "init.center",
    "init.width",
    "init.file",
    "calr.xi0",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Equilibrium,
    QBump,
    OutgoingPulse,
    File,
}

impl InitKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "equilibrium" => Some(InitKind::Equilibrium),
            "q_bump" => Some(InitKind::QBump),
            "outgoing_pulse" => Some(InitKind::OutgoingPulse),
            "file" => Some(InitKind::File),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            InitKind::Equilibrium => "equilibrium",
            InitKind::QBump => "q_bump",
            InitKind::OutgoingPulse => "outgoing_pulse",
            InitKind::File => "file",
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: FluidParams,
    pub xi_max: f64,
    pub cells: usize,
    pub solver: SolverConfig,
    pub init_kind: InitKind,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub init_file: Option<PathBuf>,
    pub calr_xi0: Xi0Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: FluidParams::default(),
            xi_max: 64.0,
            cells: 2048,
            solver: SolverConfig::default(),
            init_kind: InitKind::Equilibrium,
            amplitude: 1e-3,
            center: 8.0,
            width: 1.5,
            init_file: None,
            calr_xi0: Xi0Mode::Traced,
        }
    }
}

fn number(value: &str) -> Result<f64, String> {
    let v: f64 = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{value}` is not finite"))
    }
}

/// Why a value was refused.
enum Refusal {
    Syntax(String),
    Range(String),
}

impl RunConfig {
    /// Assign one key. Relative `init.file` paths are taken relative to `base`.
    fn assign(&mut self, key: &str, value: &str, base: &Path) -> Result<(), Refusal> {
        let num = |v: &str| number(v).map_err(Refusal::Syntax);
        let p = self.params;
        let params =
            |ca, we, gamma, gamma0| FluidParams::new(ca, we, gamma, gamma0).map_err(|e| Refusal::Range(e.to_string()));
        match key {
            "ca" => self.params = params(num(value)?, p.we, p.gamma, p.gamma0)?,
            "we" => self.params = params(p.ca, num(value)?, p.gamma, p.gamma0)?,
            "gamma" => self.params = params(p.ca, p.we, num(value)?, p.gamma0)?,
            "gamma0" => self.params = params(p.ca, p.we, p.gamma, num(value)?)?,
            "xi_max" => {
                let v = num(value)?;
                if v <= 1.0 {
                    return Err(Refusal::Range("xi_max must be > 1".into()));
                }
                self.xi_max = v;
            }
            "cells" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| Refusal::Syntax(format!("`{value}` is not a cell count")))?;
                if v < 15 {
                    return Err(Refusal::Range("cells must be >= 15".into()));
                }
                self.cells = v;
            }
            "cfl" | "t_end" | "snapshot_dt" | "dissipation" => {
                let v = num(value)?;
                let mut s = self.solver.clone();
                match key {
                    "cfl" => s.cfl = v,
                    "t_end" => s.t_end = v,
                    "snapshot_dt" => s.snapshot_dt = v,
                    _ => s.dissipation = v,
                }
                s.validate().map_err(|e| Refusal::Range(e.to_string()))?;
                self.solver = s;
            }
            "mode" => self.solver.mode = value.parse::<Mode>().map_err(|e| Refusal::Syntax(e.to_string()))?,
            "outer_bc" => {
                self.solver.outer_bc = value.parse::<OuterBc>().map_err(|e| Refusal::Syntax(e.to_string()))?
            }
            "init.kind" => {
                self.init_kind =
                    InitKind::parse(value).ok_or_else(|| Refusal::Syntax(format!("unknown init.kind `{value}`")))?
            }
            "init.amplitude" => self.amplitude = num(value)?,
            "init.center" => {
                let v = num(value)?;
                if v < 1.0 {
                    return Err(Refusal::Range("init.center must be >= 1".into()));
                }
                self.center = v;
            }
            "init.width" => {
                let v = num(value)?;
                if v <= 0.0 {
                    return Err(Refusal::Range("init.width must be > 0".into()));
                }
                self.width = v;
            }
            "init.file" => {
                let path = PathBuf::from(value);
                self.init_file = Some(if path.is_relative() { base.join(path) } else { path });
            }
            "calr.xi0" => self.calr_xi0 = value.parse::<Xi0Mode>().map_err(|e| Refusal::Syntax(e.to_string()))?,
            _ => unreachable!("key list checked by the caller"),
        }
        Ok(())
    }

    /// Override one key outside a file, as the sweep does.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::UnknownKey {
                line: 0,
                key: key.to_string(),
            });
        }
        self.assign(key, value, Path::new(".")).map_err(|r| refusal(r, 0, key))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::with_cells(self.xi_max, self.cells)?)
    }

    pub fn init_spec(&self) -> Result<InitSpec, CliError> {
        Ok(match self.init_kind {
            InitKind::Equilibrium => InitSpec::Equilibrium,
            InitKind::QBump => InitSpec::QBump {
                amplitude: self.amplitude,
                center: self.center,
                width: self.width,
            },
            InitKind::OutgoingPulse => InitSpec::OutgoingPulse {
                amplitude: self.amplitude,
                center: self.center,
                width: self.width,
            },
            InitKind::File => InitSpec::File(self.init_file.clone().ok_or_else(|| CliError::Range {
                line: 0,
                key: "init.file".into(),
                reason: "init.kind = file needs init.file".into(),
            })?),
        })
    }

    /// `(key, value)` for every key, formatted so that parsing the pairs back gives
    /// the same configuration.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let s = &self.solver;
        let f = |v: f64| format!("{v:?}");
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "ca" => f(p.ca),
                    "we" => f(p.we),
                    "gamma" => f(p.gamma),
                    "gamma0" => f(p.gamma0),
                    "xi_max" => f(self.xi_max),
                    "cells" => self.cells.to_string(),
                    "cfl" => f(s.cfl),
                    "t_end" => f(s.t_end),
                    "snapshot_dt" => f(s.snapshot_dt),
                    "dissipation" => f(s.dissipation),
                    "mode" => s.mode.to_string(),
                    "outer_bc" => s.outer_bc.to_string(),
                    "init.kind" => self.init_kind.name().to_string(),
                    "init.amplitude" => f(self.amplitude),
                    "init.center" => f(self.center),
                    "init.width" => f(self.width),
                    "init.file" => self
                        .init_file
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_default(),
                    _ => self.calr_xi0.to_string(),
                };
                (k, v)
            })
            .collect()
    }

    /// The echo as a config file.
    pub fn to_text(&self) -> String {
        self.echo()
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn refusal(r: Refusal, line: usize, key: &str) -> CliError {
    match r {
        Refusal::Syntax(msg) => CliError::Parse { line, msg },
        Refusal::Range(reason) => CliError::Range {
            line,
            key: key.to_string(),
            reason,
        },
    }
}

/// Parse configuration text; `base` resolves relative file paths.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| CliError::Parse {
            line,
            msg: format!("expected `key = value`, got `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS.iter().find(|&&k| k == key).ok_or_else(|| CliError::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        if seen.contains(known) {
            return Err(CliError::Parse {
                line,
                msg: format!("`{key}` given twice"),
            });
        }
        seen.push(known);
        if value.is_empty() {
            return Err(CliError::Parse {
                line,
                msg: format!("`{key}` has no value"),
            });
        }
        cfg.assign(key, value, base).map_err(|r| refusal(r, line, key))?;
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        parse_config_str(text, Path::new("/cfg"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.solver.mode, Mode::Nonlinear);
        assert_eq!((c.params.ca, c.params.we, c.params.gamma), (2.0, 2.0, 4.0));
        assert_eq!(c.params.gamma0, 4.0 / 3.0);
        assert_eq!((c.xi_max, c.cells, c.solver.cfl), (64.0, 2048, 0.4));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse("# header\n\ncells = 512   # coarse\n  mode=linear\n").unwrap();
        assert_eq!(c.cells, 512);
        assert_eq!(c.solver.mode, Mode::Linear);
    }

    #[test]
    fn gamma_one_is_a_range_error() {
        match parse("ca = 2\ngamma = 1.0\n") {
            Err(CliError::Range { line, key, .. }) => {
                assert_eq!((line, key.as_str()), (2, "gamma"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_its_line() {
        match parse("cells = 64\nviscosity = 1\n") {
            Err(CliError::UnknownKey { line, key }) => {
                assert_eq!((line, key.as_str()), (2, "viscosity"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse("cells 64"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(parse("cells = many"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(
            parse("cfl = 0.4\ncfl = 0.3"),
            Err(CliError::Parse { line: 2, .. })
        ));
        assert!(matches!(parse("t_end ="), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(parse("mode = both"), Err(CliError::Parse { .. })));
        assert!(matches!(parse("cfl = 2"), Err(CliError::Range { .. })));
        assert!(matches!(parse("cells = 4"), Err(CliError::Range { .. })));
        assert!(matches!(parse("init.width = -1"), Err(CliError::Range { .. })));
        assert!(matches!(parse("xi_max = inf"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn echo_round_trips() {
        let text = "mode = linear\nca = 3.5\ncells = 300\ninit.kind = q_bump\ninit.amplitude = 2e-3\ncalr.xi0 = linear\nouter_bc = reflecting\n";
        let c = parse(text).unwrap();
        let again = parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        let echo = c.echo();
        assert_eq!(echo.len(), KEYS.len());
        assert!(echo.contains(&("mode", "linear".to_string())));
    }

    #[test]
    fn relative_init_file_is_resolved_against_the_config() {
        let c = parse("init.kind = file\ninit.file = data/init.csv\n").unwrap();
        assert_eq!(c.init_file.as_deref(), Some(Path::new("/cfg/data/init.csv")));
        assert!(RunConfig {
            init_kind: InitKind::File,
            ..RunConfig::default()
        }
        .init_spec()
        .is_err());
    }

    #[test]
    fn set_validates_like_the_parser() {
        let mut c = RunConfig::default();
        c.set("init.amplitude", "5e-4").unwrap();
        assert_eq!(c.amplitude, 5e-4);
        assert!(c.set("cfl", "-1").is_err());
        assert!(c.set("nope", "1").is_err());
    }
}
