use std::path::PathBuf;

use radtree::estimators::{default_truncation_radius, DEFAULT_SUBSAMPLES};
use radtree::geom::{Direction, Window};
use radtree::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Mean,
    Variance,
    Va,
    Clt,
    Checks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Box,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Graph {
    Rst,
    Dsf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ball,
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to rerun a command. Unset fields take per-command
/// defaults during [`RunConfig::resolve`]; the resolved form is what gets
/// recorded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_trunc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<Graph>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

macro_rules! overlay_fields {
    ($base:ident, $over:ident; $($f:ident),*) => {
        RunConfig { $($f: $over.$f.or($base.$f)),* }
    };
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl RunConfig {
    /// Fields set in `over` win.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        let base = self;
        overlay_fields!(base, over; command, window, lo, hi, radius, d, a, t, t_list, r, r_trunc,
            direction, replicates, seed, workers, out, format, graph, method, z_samples, subsamples, margin)
    }

    pub fn command(&self) -> Command {
        self.command.expect("resolved config has a command")
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }

    /// Fills defaults for the selected command and checks that the fields
    /// fit together. Resolving an already resolved config is a no-op.
    pub fn resolve(self) -> Result<RunConfig, Error> {
        let mut c = self;
        let cmd = c.command.ok_or_else(|| invalid("no command given"))?;
        if c.seed.is_none() {
            return Err(invalid("a seed is required (--seed)"));
        }
        if c.workers == Some(0) {
            return Err(invalid("--workers must be at least 1"));
        }
        c.format.get_or_insert(Format::Json);
        c.a.get_or_insert(1.0);

        let uses_window = !matches!(cmd, Command::Va);
        if uses_window {
            c.resolve_window()?;
        } else {
            if c.window.is_some() || c.lo.is_some() || c.hi.is_some() || c.radius.is_some() {
                return Err(invalid("va works on the stationary process and takes no window"));
            }
            c.d.get_or_insert(2);
        }
        let d = c.d.unwrap();

        match cmd {
            Command::Simulate => {
                if c.t.is_none() {
                    return Err(invalid("simulate needs --t"));
                }
                let g = *c.graph.get_or_insert(Graph::Rst);
                if g == Graph::Dsf {
                    c.direction.get_or_insert_with(|| default_direction(d));
                }
            }
            Command::Mean | Command::Variance => {
                c.t.get_or_insert(1000.0);
                c.replicates.get_or_insert(if cmd == Command::Mean { 400 } else { 1000 });
            }
            Command::Va => {
                let m = *c.method.get_or_insert(Method::Ball);
                c.direction.get_or_insert_with(|| default_direction(d));
                match m {
                    Method::Ball => {
                        c.r.get_or_insert(8.0);
                        c.replicates.get_or_insert(2000);
                    }
                    Method::Integral => {
                        if c.r_trunc.is_none() {
                            c.r_trunc = Some(default_truncation_radius(c.a.unwrap(), d)?);
                        }
                        c.z_samples.get_or_insert(64);
                        c.replicates.get_or_insert(2000);
                    }
                }
            }
            Command::Clt => {
                c.t_list.get_or_insert_with(|| vec![64.0, 256.0, 1024.0]);
                c.replicates.get_or_insert(2000);
                c.subsamples.get_or_insert(DEFAULT_SUBSAMPLES);
            }
            Command::Checks => {
                c.t.get_or_insert(1000.0);
                c.replicates.get_or_insert(400);
                c.direction.get_or_insert_with(|| default_direction(d));
            }
        }
        if let Some(e) = &c.direction {
            if e.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: e.len() });
            }
            Direction::new(e.clone())?;
        }
        Ok(c)
    }

    fn resolve_window(&mut self) -> Result<(), Error> {
        let kind = *self.window.get_or_insert(WindowKind::Box);
        match kind {
            WindowKind::Box => {
                if self.radius.is_some() {
                    return Err(invalid("--radius applies to ball windows"));
                }
                match (&self.lo, &self.hi) {
                    (Some(lo), Some(hi)) => {
                        if lo.len() != hi.len() {
                            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
                        }
                        let d = *self.d.get_or_insert(lo.len());
                        if d != lo.len() {
                            return Err(Error::DimensionMismatch { expected: d, got: lo.len() });
                        }
                    }
                    (None, None) => {
                        let d = *self.d.get_or_insert(2);
                        if let Window::Box { lower, upper } = Window::unit_cube(d)? {
                            self.lo = Some(lower);
                            self.hi = Some(upper);
                        }
                    }
                    _ => return Err(invalid("box windows need both --lo and --hi")),
                }
            }
            WindowKind::Ball => {
                if self.lo.is_some() || self.hi.is_some() {
                    return Err(invalid("--lo/--hi apply to box windows"));
                }
                self.d.get_or_insert(2);
                self.radius.get_or_insert(1.0);
            }
        }
        self.build_window()?;
        Ok(())
    }

    /// Window described by a resolved config.
    pub fn build_window(&self) -> Result<Window, Error> {
        match self.window {
            Some(WindowKind::Box) => Window::new_box(
                self.lo.clone().ok_or_else(|| invalid("missing --lo"))?,
                self.hi.clone().ok_or_else(|| invalid("missing --hi"))?,
            ),
            Some(WindowKind::Ball) => Window::new_ball(
                self.d.ok_or_else(|| invalid("missing --d"))?,
                self.radius.ok_or_else(|| invalid("missing --radius"))?,
            ),
            None => Err(invalid("no window")),
        }
    }

    pub fn build_direction(&self) -> Result<Direction, Error> {
        Direction::new(self.direction.clone().ok_or_else(|| invalid("missing --direction"))?)
    }
}

/// Last coordinate axis, pointing up.
fn default_direction(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    if d > 0 {
        e[d - 1] = 1.0;
    }
    e
}
