//! Multi-robot motion planning on space-time graphs of convex sets.
//!
//! * [`geom`]: H-representation polyhedra, tubes and clipping.
//! * [`stgraph`]: the graph of collision-free space-time sets.
//! * [`gcsprog`]: relaxation, rounding and restriction for one robot.
//! * [`ecd`]: reserving a trajectory by exact convex decomposition.
//! * [`mrmp`]: collision checking plus SP / RP / PBS coordination.
//! * [`bench_io`]: instance files, map catalog, benchmark runner and SVG.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench_io;
pub mod ecd;
pub mod error;
pub mod gcsprog;
pub mod geom;
pub mod lp;
pub mod mrmp;
pub mod stgraph;
pub mod trajectory;

pub use error::{Error, Result};
pub use gcsprog::{solve_stgcs, SolveMode, SolveParams, VelocityBounds};
pub use geom::{HPoly, Segment, State};
pub use stgraph::SpaceTimeGraph;
pub use trajectory::Trajectory;
