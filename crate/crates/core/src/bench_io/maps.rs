//! Built-in maps and fixed scenarios.

use crate::ecd::Reservation;
use crate::error::{Error, Result};
use crate::geom::{HPoly, State};
use crate::mrmp::Robot;
use crate::trajectory::Trajectory;

use super::{InstanceFile, SCHEMA_VERSION};

pub const MAP_NAMES: [&str; 5] = ["empty", "simple_like", "complex_like", "corridor", "swap4"];

/// A named 2d map with its default robot parameters.
#[derive(Debug, Clone)]
pub struct MapCatalogEntry {
    pub name: &'static str,
    pub sets: Vec<HPoly>,
    pub t_max: f64,
    pub v_max: f64,
    pub safe_radius: f64,
    pub obstacles: Vec<Reservation>,
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> HPoly {
    HPoly::from_box(&[x0, y0], &[x1, y1]).expect("catalog boxes are valid")
}

fn mover(from: [f64; 2], to: [f64; 2], t1: f64, apothem: f64) -> Reservation {
    Reservation {
        trajectory: Trajectory::new(vec![State::new(from.to_vec(), 0.0), State::new(to.to_vec(), t1)]),
        apothem,
    }
}

fn simple_like() -> MapCatalogEntry {
    // a ring of four strips around the central block [3, 7]^2
    let sets = vec![
        rect(0.0, 0.0, 10.0, 3.0),
        rect(0.0, 7.0, 10.0, 10.0),
        rect(0.0, 0.0, 3.0, 10.0),
        rect(7.0, 0.0, 10.0, 10.0),
    ];
    // disk radius 0.3 plus robot apothem 0.2, circling along the walls
    let a = 0.5;
    let obstacles = vec![
        mover([0.75, 0.75], [9.25, 0.75], 50.0, a),
        mover([9.25, 9.25], [0.75, 9.25], 50.0, a),
        mover([0.75, 9.25], [0.75, 0.75], 50.0, a),
        mover([9.25, 0.75], [9.25, 9.25], 50.0, a),
    ];
    MapCatalogEntry {
        name: "simple_like",
        sets,
        t_max: 50.0,
        v_max: 1.0,
        safe_radius: 0.4,
        obstacles,
    }
}

fn complex_like() -> MapCatalogEntry {
    // a 3 x 3 grid of blocks; free space is four full-width rows plus the
    // vertical pieces joining them
    let gaps = [(0.0, 1.5), (3.0, 4.25), (5.75, 7.0), (8.5, 10.0)];
    let blocks = [(1.5, 3.0), (4.25, 5.75), (7.0, 8.5)];
    let mut sets: Vec<HPoly> = gaps.iter().map(|&(y0, y1)| rect(0.0, y0, 10.0, y1)).collect();
    for &(x0, x1) in &gaps {
        for &(y0, y1) in &blocks {
            sets.push(rect(x0, y0, x1, y1));
        }
    }
    MapCatalogEntry {
        name: "complex_like",
        sets,
        t_max: 50.0,
        v_max: 1.0,
        safe_radius: 0.4,
        obstacles: vec![],
    }
}

pub fn map_entry(name: &str) -> Result<MapCatalogEntry> {
    Ok(match name {
        "empty" => MapCatalogEntry {
            name: "empty",
            sets: vec![rect(0.0, 0.0, 10.0, 10.0)],
            t_max: 50.0,
            v_max: 0.5,
            safe_radius: 0.5,
            obstacles: vec![],
        },
        "simple_like" => simple_like(),
        "complex_like" => complex_like(),
        "corridor" => MapCatalogEntry {
            name: "corridor",
            sets: vec![rect(0.0, 0.0, 10.0, 0.5), rect(2.5, 0.0, 3.5, 2.0)],
            t_max: 50.0,
            v_max: 1.0,
            safe_radius: 1.0,
            obstacles: vec![],
        },
        "swap4" => MapCatalogEntry {
            name: "swap4",
            sets: vec![rect(0.0, 0.0, 6.0, 6.0)],
            t_max: 50.0,
            v_max: 1.0,
            safe_radius: 1.0,
            obstacles: vec![],
        },
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown map '{name}' (one of {})",
                MAP_NAMES.join(", ")
            )))
        }
    })
}

pub fn catalog() -> Vec<MapCatalogEntry> {
    MAP_NAMES.iter().map(|n| map_entry(n).unwrap()).collect()
}

impl MapCatalogEntry {
    /// An instance file on this map with the given robots.
    pub fn instance(&self, robots: Vec<Robot>, seed: u64, instance_id: Option<usize>) -> InstanceFile {
        InstanceFile {
            schema: SCHEMA_VERSION,
            map_name: Some(self.name.to_string()),
            instance_id,
            d: 2,
            map: self.sets.clone(),
            t_max: self.t_max,
            v_min: vec![-self.v_max; 2],
            v_max: vec![self.v_max; 2],
            safe_radius: self.safe_radius,
            robots,
            dynamic_obstacles: self.obstacles.clone(),
            seed,
        }
    }
}

fn robot(sx: f64, sy: f64, gx: f64, gy: f64) -> Robot {
    Robot {
        start: State::new(vec![sx, sy], 0.0),
        goal: vec![gx, gy],
    }
}

pub const FIXTURE_NAMES: [&str; 4] = ["corridor", "swap4", "simple_exchange", "empty_pair"];

/// Hand-built scenarios with fixed robots.
///
/// * `corridor`: two robots meet head-on in a corridor with one niche.
/// * `swap4`: two pairs swap across the center of an open box.
/// * `simple_exchange`: two robots trade places on `simple_like`.
/// * `empty_pair`: two crossing robots on `empty`.
pub fn fixture(name: &str) -> Result<InstanceFile> {
    let (map, robots) = match name {
        "corridor" => ("corridor", vec![robot(2.0, 0.25, 8.0, 0.25), robot(9.5, 0.25, 1.0, 0.25)]),
        "swap4" => (
            "swap4",
            vec![
                robot(1.0, 3.0, 5.0, 3.0),
                robot(5.0, 3.0, 1.0, 3.0),
                robot(3.0, 1.0, 3.0, 5.0),
                robot(3.0, 5.0, 3.0, 1.0),
            ],
        ),
        "simple_exchange" => ("simple_like", vec![robot(1.5, 5.0, 8.5, 5.0), robot(8.5, 5.0, 1.5, 5.0)]),
        "empty_pair" => ("empty", vec![robot(1.0, 1.0, 9.0, 9.0), robot(9.0, 1.0, 1.0, 9.0)]),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown fixture '{name}' (one of {})",
                FIXTURE_NAMES.join(", ")
            )))
        }
    };
    Ok(map_entry(map)?.instance(robots, 0, None))
}
