use log::warn;
use survmult::forest::{HyperParams, SplitRule};

use crate::config::GridConfig;

fn sorted(list: &[usize]) -> Vec<usize> {
    let mut v = list.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Cartesian product of the grid lists in lexicographic order (ntree, mtry,
/// nodesize, nodedepth, splitrule, nsplit). Configurations with
/// `mtry > n_features` are dropped with a warning.
pub fn build_model_grid(grid: &GridConfig, n_features: usize) -> Vec<HyperParams> {
    let mut rules: Vec<SplitRule> = grid.splitrule.clone();
    rules.sort_by_key(|r| r.name());
    rules.dedup();

    let mut out = Vec::new();
    let mut dropped = 0usize;
    for &ntree in &sorted(&grid.ntree) {
        for &mtry in &sorted(&grid.mtry) {
            for &nodesize in &sorted(&grid.nodesize) {
                for &nodedepth in &sorted(&grid.nodedepth) {
                    for &splitrule in &rules {
                        for &nsplit in &sorted(&grid.nsplit) {
                            if mtry > n_features {
                                dropped += 1;
                                continue;
                            }
                            out.push(HyperParams {
                                ntree,
                                mtry,
                                nodesize,
                                nodedepth,
                                splitrule,
                                nsplit,
                            });
                        }
                    }
                }
            }
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} configurations with mtry above the {n_features} available features");
    }
    out
}
