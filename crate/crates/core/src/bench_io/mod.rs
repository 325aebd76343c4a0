//! Instance files, the map catalog, instance generation, the benchmark
//! runner and SVG output.

mod bench;
mod gen;
mod maps;
mod svg;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bench::{aggregate, run_bench, write_csv, write_summary_csv, AggregateRow, BenchConfig, BenchRow};
pub use gen::{gen_instances, MAX_REJECTIONS};
pub use maps::{catalog, fixture, map_entry, MapCatalogEntry, FIXTURE_NAMES, MAP_NAMES};
pub use svg::{emit_svg, render_svg};

use crate::ecd::Reservation;
use crate::error::{Error, Result};
use crate::gcsprog::{SolveParams, VelocityBounds};
use crate::geom::HPoly;
use crate::mrmp::{MrmpInstance, Robot, Solution};

pub const SCHEMA_VERSION: u32 = 1;

/// Default wall-clock budget per planner run, in seconds.
pub const DEFAULT_BUDGET_S: f64 = 150.0;

/// On-disk instance description (JSON, `"schema": 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<usize>,
    pub d: usize,
    pub map: Vec<HPoly>,
    pub t_max: f64,
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
    pub safe_radius: f64,
    pub robots: Vec<Robot>,
    #[serde(default)]
    pub dynamic_obstacles: Vec<Reservation>,
    #[serde(default)]
    pub seed: u64,
}

impl InstanceFile {
    /// Schema and geometry checks that do not need the graph.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Instance(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema));
        }
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.map.is_empty() {
            return bad("map has no convex sets".into());
        }
        for (k, s) in self.map.iter().enumerate() {
            if s.dim() != self.d {
                return bad(format!("map set {k} has dimension {}, expected {}", s.dim(), self.d));
            }
            match s.bounding_box() {
                Ok(_) => {}
                Err(Error::EmptySet) => return bad(format!("map set {k} is empty")),
                Err(Error::Unbounded(j)) => {
                    return bad(format!("map set {k} is unbounded along coordinate {j}"))
                }
                Err(e) => return Err(e),
            }
        }
        if !(self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.v_min.len() != self.d || self.v_max.len() != self.d {
            return bad("velocity bounds must have d entries".into());
        }
        for (i, r) in self.robots.iter().enumerate() {
            if r.start.p.len() != self.d || r.goal.len() != self.d {
                return bad(format!("robot {i} has the wrong dimension"));
            }
        }
        for (k, ob) in self.dynamic_obstacles.iter().enumerate() {
            if ob.trajectory.states.is_empty() || !(ob.apothem > 0.0) {
                return bad(format!("dynamic obstacle {k} needs states and a positive apothem"));
            }
            if ob.trajectory.states.iter().any(|s| s.p.len() != self.d) {
                return bad(format!("dynamic obstacle {k} has the wrong dimension"));
            }
        }
        Ok(())
    }

    /// Builds the graph, reserves the dynamic obstacles and checks robots.
    pub fn to_instance(&self, params: SolveParams, time_budget: f64) -> Result<MrmpInstance> {
        self.check()?;
        let vb = VelocityBounds::new(self.v_min.clone(), self.v_max.clone())
            .map_err(|e| Error::Instance(e.to_string()))?;
        let inst = MrmpInstance::new(
            self.map.clone(),
            self.t_max,
            self.dynamic_obstacles.clone(),
            self.robots.clone(),
            vb,
            self.safe_radius,
            time_budget,
            params,
        )?;
        for (i, r) in inst.robots.iter().enumerate() {
            if inst.graph.start_vertices(&r.start)?.is_empty() {
                return Err(Error::Instance(format!("robot {i} starts outside the free space")));
            }
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: InstanceFile =
            serde_json::from_str(s).map_err(|e| Error::Instance(format!("malformed instance: {e}")))?;
        f.check()?;
        Ok(f)
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Instance(format!("cannot read {}: {e}", path.display())))?;
    InstanceFile::from_json(&text)
}

pub fn save_instance(file: &InstanceFile, path: &Path) -> Result<()> {
    fs::write(path, file.to_json()? + "\n")?;
    Ok(())
}

/// Reads an instance file and prepares it for planning.
pub fn load_instance(path: &Path, params: SolveParams, time_budget: f64) -> Result<MrmpInstance> {
    read_instance(path)?.to_instance(params, time_budget)
}

pub fn read_solution(path: &Path) -> Result<Solution> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Instance(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Instance(format!("malformed solution: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::State;

    fn empty_file() -> InstanceFile {
        fixture("empty_pair").unwrap()
    }

    #[test]
    fn round_trip() {
        let f = empty_file();
        let back = InstanceFile::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.json");
        save_instance(&f, &p).unwrap();
        assert_eq!(read_instance(&p).unwrap(), f);
    }

    #[test]
    fn empty_map_is_one_vertex() {
        let inst = empty_file().to_instance(SolveParams::default(), 10.0).unwrap();
        assert_eq!(inst.graph.num_vertices(), 1);
    }

    #[test]
    fn obstacles_split_vertices() {
        let f = fixture("simple_exchange").unwrap();
        let inst = f.to_instance(SolveParams::default(), 10.0).unwrap();
        assert!(inst.graph.num_vertices() > f.map.len());
    }

    #[test]
    fn load_errors() {
        assert!(matches!(InstanceFile::from_json("{ not json"), Err(Error::Instance(_))));
        let mut f = empty_file();
        f.schema = 2;
        assert!(f.check().is_err());
        let mut f = empty_file();
        f.map.push(HPoly::new(2, &[vec![1.0, 0.0], vec![-1.0, 0.0]], &[0.0, -1.0]).unwrap());
        assert!(f.check().is_err());
        let mut f = empty_file();
        f.dynamic_obstacles.push(Reservation {
            trajectory: crate::Trajectory::new(vec![State::new(vec![5.0, 5.0], 0.0), State::new(vec![15.0, 5.0], 10.0)]),
            apothem: 0.5,
        });
        assert!(matches!(f.to_instance(SolveParams::default(), 1.0), Err(Error::Instance(_))));
        let mut f = empty_file();
        f.robots[0].start.p = vec![20.0, 20.0];
        assert!(f.to_instance(SolveParams::default(), 1.0).is_err());
    }
}
