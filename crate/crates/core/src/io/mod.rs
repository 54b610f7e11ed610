//! Plan files, history CSV and rendered tables.

pub mod history;
pub mod plan;
pub mod render;

pub use history::{attach_sizes, load_history_csv, load_sizes_csv, HistoryError};
pub use plan::{load_plan, save_plan, LevelSpec, PlanDocument, PlanError, PlanOptions, PredictionSpec, SCHEMA_VERSION};
pub use render::{
    parse_rendered_csv, render_comparison, render_density, render_matrix, render_prediction, render_profile,
    render_scenario, render_scope, Format,
};
