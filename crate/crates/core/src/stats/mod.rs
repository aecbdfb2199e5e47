//! Cross-validation grids and statistical comparison of methods.

mod anova;
mod grid;
mod groups;
mod lsu;
mod ttest;

pub use anova::{anova_table, anova_two_factor, Anova, FactorTest};
pub use grid::{
    evaluate_split, format_value, parse_value, run_experiment_grid, write_evaluations_csv, CellStat,
    ExperimentGrid, FoldEvaluation, GridDataset, GridRun, EVALUATION_CSV_HEADER, GRID_CSV_HEADER,
};
pub use groups::{equivalence_groups, equivalence_groups_table, MethodTable, RankGroup, RankGroups};
pub use lsu::lsu_select;
pub use ttest::{paired_t_test, TTest};
