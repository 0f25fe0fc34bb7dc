//! Cost-optimal truck routes on road networks with temporary driving bans.

pub mod bench;
pub mod ch;
pub mod error;
pub mod export;
pub mod generators;
pub mod format;
pub mod model;
pub mod oracle;
pub mod potentials;
pub mod profile;
pub mod queue;
pub mod search;
pub mod travel_time;

pub use error::{Error, Result};
pub use model::{
    BanInterval, Cost, CostParams, Edge, EdgeId, Query, Rating, RoadInstance, Route, Time,
    VertexId,
};
pub use search::{run_query, ParetoSolution, Search, SearchOptions, SearchStats};
