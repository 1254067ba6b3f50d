//! Deterministic grid-world and warehouse dynamics.

mod dynamics;
mod map;
mod world;

pub use dynamics::{resolve_moves, step_joint, step_single, JointStep, Resolution, SingleStep};
pub use map::{load_map, Action, Cell, Goals, GridMap, MapError, RewardScheme};
pub use world::{next_warehouse_goal, StateId, StateSpace, TaskPlan, Transition, WarehouseTask, World};

/// Benchmark maps shipped with the crate. The six grid games approximate
/// the published benchmark figures; the warehouse maps follow the 16x21
/// shelf layout with rows of two-deep shelves and single-cell aisles.
pub mod fixtures {
    use super::{load_map, GridMap};

    pub const ISR: &str = include_str!("../../maps/isr.map");
    pub const SUNY: &str = include_str!("../../maps/suny.map");
    pub const MIT: &str = include_str!("../../maps/mit.map");
    pub const PENTAGON: &str = include_str!("../../maps/pentagon.map");
    pub const GW_NJU: &str = include_str!("../../maps/gw_nju.map");
    pub const GWA3: &str = include_str!("../../maps/gwa3.map");
    pub const OPEN2: &str = include_str!("../../maps/open2.map");
    pub const WAREHOUSE2: &str = include_str!("../../maps/warehouse2.map");
    pub const WAREHOUSE3: &str = include_str!("../../maps/warehouse3.map");

    /// The six grid benchmarks, in the customary order.
    pub const GRID_SUITE: [&str; 6] = ["isr", "suny", "mit", "pentagon", "gw_nju", "gwa3"];
    pub const WAREHOUSE_SUITE: [&str; 2] = ["warehouse2", "warehouse3"];

    pub fn source(name: &str) -> Option<&'static str> {
        Some(match name.to_ascii_lowercase().as_str() {
            "isr" => ISR,
            "suny" => SUNY,
            "mit" => MIT,
            "pentagon" => PENTAGON,
            "gw_nju" => GW_NJU,
            "gwa3" => GWA3,
            "open2" => OPEN2,
            "warehouse2" => WAREHOUSE2,
            "warehouse3" => WAREHOUSE3,
            _ => return None,
        })
    }

    /// Parses a shipped map by name.
    pub fn builtin(name: &str) -> Option<GridMap> {
        source(name).map(|text| load_map(text).expect("shipped fixtures are valid"))
    }

    pub fn all() -> Vec<(&'static str, GridMap)> {
        GRID_SUITE
            .iter()
            .chain(["open2"].iter())
            .chain(WAREHOUSE_SUITE.iter())
            .map(|&n| (n, builtin(n).expect("listed fixture exists")))
            .collect()
    }
}
