//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; missing keys take the defaults of the chosen experiment.
//! Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use spfilter::tuner::Aggregation;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Project,
    Advect2d,
    Advect3d,
    Rotate,
    Torus3d,
    Tune,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Project => "project",
            Experiment::Advect2d => "advect2d",
            Experiment::Advect3d => "advect3d",
            Experiment::Rotate => "rotate",
            Experiment::Torus3d => "torus3d",
            Experiment::Tune => "tune",
        }
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "project" => Experiment::Project,
            "advect2d" => Experiment::Advect2d,
            "advect3d" => Experiment::Advect3d,
            "rotate" => Experiment::Rotate,
            "torus3d" => Experiment::Torus3d,
            "tune" => Experiment::Tune,
            other => return Err(CliError::Config(format!("unknown experiment `{other}`"))),
        })
    }
}

/// Element type of the torus meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolidKind {
    Hex,
    Tet,
}

impl SolidKind {
    pub fn name(self) -> &'static str {
        match self {
            SolidKind::Hex => "hex",
            SolidKind::Tet => "tet",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Polynomial orders; time-dependent runs use the first.
    pub orders: Vec<usize>,
    pub dt: f64,
    pub steps: usize,
    /// Cells per direction of the structured mesh.
    pub cells: [usize; 3],
    /// Element types for `torus3d`.
    pub solids: Vec<SolidKind>,
    pub filter: bool,
    /// Admissible negativity in field units.
    pub tol: f64,
    pub c: f64,
    pub gamma: f64,
    pub max_gd_iters: usize,
    /// Descent seeds per filter iteration; more than one enables the search
    /// for violations hidden between lattice points.
    pub seeds: usize,
    pub output: PathBuf,
    /// Spatial dimension for `project` and `tune`.
    pub dim: usize,
    /// Grid samples per parameter for `tune`.
    pub grid: usize,
    pub aggregation: Aggregation,
    pub slice_x: f64,
    pub slice_y: f64,
    pub slice_points: usize,
    /// Write a VTK snapshot every this many steps; 0 writes only the first
    /// and last.
    pub snapshot_every: usize,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let three_d = matches!(experiment, Experiment::Advect3d | Experiment::Torus3d);
        let mut cfg = Self {
            experiment,
            orders: vec![4],
            dt: 1e-3,
            steps: 500,
            cells: [4, 4, 1],
            solids: vec![SolidKind::Hex, SolidKind::Tet],
            filter: true,
            tol: 1e-7,
            c: if three_d { 0.2 } else { 0.7 },
            gamma: 0.7,
            max_gd_iters: 200,
            seeds: 1,
            output: PathBuf::from(format!("out/{}", experiment.name())),
            dim: 2,
            grid: 9,
            aggregation: Aggregation::Sum,
            slice_x: 0.0,
            slice_y: 0.5,
            slice_points: 201,
            snapshot_every: 0,
        };
        match experiment {
            Experiment::Project => {
                cfg.orders = (2..=8).collect();
                cfg.seeds = usize::MAX;
            }
            Experiment::Advect2d => {}
            Experiment::Advect3d => cfg.cells = [4, 4, 4],
            Experiment::Rotate => {
                cfg.cells = [8, 6, 1];
                cfg.steps = 200;
            }
            Experiment::Torus3d => {
                cfg.cells = [3, 3, 3];
                cfg.steps = 100;
            }
            Experiment::Tune => cfg.orders = vec![4, 6, 8],
        }
        cfg
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<V: FromStr>(key: &str, value: &str) -> Result<V, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        fn list<V: FromStr>(key: &str, value: &str) -> Result<Vec<V>, String> {
            value.split(',').map(|v| num(key, v.trim())).collect()
        }
        match key {
            "experiment" => {
                let e: Experiment = value.parse().map_err(|e: CliError| e.to_string())?;
                if e != self.experiment {
                    return Err(format!("config is for `{value}`, not `{}`", self.experiment.name()));
                }
            }
            "orders" | "order" => self.orders = list(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "cells" => {
                let v: Vec<usize> = list(key, value)?;
                if v.is_empty() || v.len() > 3 {
                    return Err("`cells` takes one to three counts".into());
                }
                self.cells = [v[0], *v.get(1).unwrap_or(&1), *v.get(2).unwrap_or(&1)];
            }
            "mesh" => {
                self.solids = value
                    .split(',')
                    .map(|s| match s.trim() {
                        "hex" => Ok(SolidKind::Hex),
                        "tet" => Ok(SolidKind::Tet),
                        other => Err(format!("unknown mesh type `{other}`")),
                    })
                    .collect::<Result<_, _>>()?
            }
            "filter" => self.filter = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "max_gd_iters" => self.max_gd_iters = num(key, value)?,
            "seeds" => self.seeds = if value == "all" { usize::MAX } else { num(key, value)? },
            "output" => self.output = PathBuf::from(value),
            "dim" => self.dim = num(key, value)?,
            "grid" => self.grid = num(key, value)?,
            "aggregation" => {
                self.aggregation = match value {
                    "sum" => Aggregation::Sum,
                    "max" => Aggregation::Max,
                    other => return Err(format!("unknown aggregation `{other}`")),
                }
            }
            "slice_x" => self.slice_x = num(key, value)?,
            "slice_y" => self.slice_y = num(key, value)?,
            "slice_points" => self.slice_points = num(key, value)?,
            "snapshot_every" => self.snapshot_every = num(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.orders.is_empty() {
            return bad("at least one order is required".into());
        }
        if let Some(&n) = self.orders.iter().find(|&&n| n > spfilter::basis::MAX_ORDER) {
            return bad(format!("order {n} exceeds {}", spfilter::basis::MAX_ORDER));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.c) || !open(self.gamma) {
            return bad("c and gamma must lie strictly inside (0, 1)".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if self.cells.contains(&0) {
            return bad("cell counts must be positive".into());
        }
        if !(2..=3).contains(&self.dim) {
            return bad(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.grid < 2 {
            return bad("grid must be at least 2".into());
        }
        if self.solids.is_empty() {
            return bad("mesh needs at least one element type".into());
        }
        Ok(())
    }

    /// The configuration in the format read by [`ExperimentConfig::apply_text`].
    pub fn echo(&self) -> String {
        let join = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        let _ = writeln!(s, "orders = {}", join(&self.orders));
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "cells = {}", join(&self.cells));
        let solids: Vec<&str> = self.solids.iter().map(|k| k.name()).collect();
        let _ = writeln!(s, "mesh = {}", solids.join(","));
        let _ = writeln!(s, "filter = {}", self.filter);
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "c = {}", self.c);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "max_gd_iters = {}", self.max_gd_iters);
        if self.seeds == usize::MAX {
            let _ = writeln!(s, "seeds = all");
        } else {
            let _ = writeln!(s, "seeds = {}", self.seeds);
        }
        let _ = writeln!(s, "output = {}", self.output.display());
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "grid = {}", self.grid);
        let agg = match self.aggregation {
            Aggregation::Sum => "sum",
            Aggregation::Max => "max",
        };
        let _ = writeln!(s, "aggregation = {agg}");
        let _ = writeln!(s, "slice_x = {}", self.slice_x);
        let _ = writeln!(s, "slice_y = {}", self.slice_y);
        let _ = writeln!(s, "slice_points = {}", self.slice_points);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Torus3d);
        cfg.orders = vec![3, 5];
        cfg.seeds = usize::MAX;
        cfg.aggregation = Aggregation::Max;
        cfg.solids = vec![SolidKind::Tet];
        let mut back = ExperimentConfig::defaults(Experiment::Torus3d);
        back.apply_text(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Advect2d);
        cfg.apply_text("# a comment\n\n dt = 0.002 \nsteps=10\n").unwrap();
        assert_eq!(cfg.dt, 0.002);
        assert_eq!(cfg.steps, 10);
    }

    #[test]
    fn bad_input_is_rejected() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Advect2d);
        assert!(cfg.apply_text("colour = red").is_err());
        assert!(cfg.apply_text("dt").is_err());
        assert!(cfg.apply_text("dt = fast").is_err());
        assert!(cfg.apply_text("experiment = rotate").is_err());
        cfg.c = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn experiment_defaults() {
        let rot = ExperimentConfig::defaults(Experiment::Rotate);
        assert_eq!((rot.cells, rot.steps), ([8, 6, 1], 200));
        let adv3 = ExperimentConfig::defaults(Experiment::Advect3d);
        assert_eq!((adv3.c, adv3.gamma), (0.2, 0.7));
        let adv2 = ExperimentConfig::defaults(Experiment::Advect2d);
        assert_eq!((adv2.c, adv2.gamma, adv2.dt), (0.7, 0.7, 1e-3));
    }
}
