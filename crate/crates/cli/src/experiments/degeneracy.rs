use npmc::gmm::{degeneracy_study, DegeneracyCell, GmmSpec};
use npmc::sampling::RngStream;

use crate::config::{CommonArgs, DegeneracyConfig};
use crate::output::{num, write_table};
use crate::RunError;

pub const DEGENERACY_HEADER: [&str; 4] = ["N", "M", "mean_max_weight", "mean_ess"];

/// Writes `degeneracy.csv`.
pub fn run_degeneracy(common: &CommonArgs, cfg: &DegeneracyConfig) -> Result<Vec<DegeneracyCell>, RunError> {
    cfg.validate()?;
    let cells = degeneracy_study(
        &GmmSpec::benchmark(),
        &cfg.n_grid,
        &cfg.m_grid,
        cfg.runs,
        RngStream::root(common.seed),
    )?;
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| vec![c.n.to_string(), c.m.to_string(), num(c.mean_max_weight), num(c.mean_ess)])
        .collect();
    write_table(&common.out.join("degeneracy.csv"), &DEGENERACY_HEADER, &rows)?;
    Ok(cells)
}
