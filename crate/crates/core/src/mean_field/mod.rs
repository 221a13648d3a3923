//! Large-system limit: per-type densities of the distance-to-default with an
//! absorbing boundary, transported by contagion and common noise, with jump
//! restarts sized by the mean-field cascade condition.

mod checks;
mod density;
mod solver;
mod spec;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use checks::{check_initial_decay, check_no_jump, check_smallness, ConditionCheck, DecayFit};
pub use density::{SubDensity, ZGrid};
pub use solver::{
    conservation_error, picard_map, picard_solve, resolve_mf_cascade, run, solve, step, theta_mf, type_names,
    DensityField, EpsTrace, JumpRecord, MFOutput, MfCascade, Model, PicardResult, Snapshot, StepReport, SubInfo,
};
pub use spec::{init_density, AssetDensity, EpsSchedule, InitialDensity, InitialLaw, MFConfig, MixtureSpec, TypeSpec};

use crate::error::Result;
use crate::io::{fmt17, write_json, CsvTable};

/// Condition checks written next to a solve.
#[derive(Clone, Debug, Serialize)]
pub struct MfChecks {
    pub smallness: ConditionCheck,
    /// No-jump check on the initial field.
    pub no_jump_initial: ConditionCheck,
    /// Per type, the decay envelope of the initial density with β = 1.
    pub decay: Vec<DecayFit>,
    pub max_conservation_error: f64,
    pub explosion: bool,
    pub t_star: Option<f64>,
    pub explosion_threshold: f64,
    /// Per type, the accumulated Σ (Δ𝐋/dt)²·dt at the horizon.
    pub loss_speed_l2: Vec<f64>,
}

/// Checks for `spec` at the start of a solve, combined with the solve's diagnostics.
pub fn collect_checks(spec: &MixtureSpec, config: &MFConfig, out: &MFOutput) -> Result<MfChecks> {
    let model = Model::new(spec, config, Some(&out.common_noise))?;
    let field = DensityField::initial(&model);
    let dx = model.grid.dz;
    let n = (model.x_max / dx).round() as usize;
    let decay = model
        .laws
        .iter()
        .map(|law| {
            let values: Vec<f64> = (0..=n).map(|j| law.pdf(j as f64 * dx)).collect();
            check_initial_decay(&values, dx, 1.0, model.x_max)
        })
        .collect();
    Ok(MfChecks {
        smallness: check_smallness(spec)?,
        no_jump_initial: check_no_jump(&model, &field, config.no_jump_window),
        decay,
        max_conservation_error: out.max_conservation_error,
        explosion: out.explosion,
        t_star: out.t_star,
        explosion_threshold: out.explosion_threshold,
        loss_speed_l2: out.loss_speed_l2.iter().map(|p| *p.last().unwrap_or(&0.0)).collect(),
    })
}

/// Writes mf_losses.csv, mf_jumps.json, mf_density.csv and mf_checks.json.
pub fn write_mf_outputs(out: &MFOutput, checks: &MfChecks, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut losses = CsvTable::new(&["t", "type", "loss"]);
    for (k, &t) in out.times.iter().enumerate() {
        for (l, name) in out.type_names.iter().enumerate() {
            losses.row(&[fmt17(t), name.clone(), fmt17(out.losses[l][k])]);
        }
    }
    let p = dir.join("mf_losses.csv");
    losses.write(&p)?;
    written.push(p);

    let p = dir.join("mf_jumps.json");
    write_json(&p, &out.jumps)?;
    written.push(p);

    let mut dens = CsvTable::new(&["t", "type", "x", "value"]);
    for snap in &out.snapshots {
        for (l, name) in out.type_names.iter().enumerate() {
            for (j, &x) in snap.x.iter().enumerate() {
                dens.row(&[fmt17(snap.t), name.clone(), fmt17(x), fmt17(snap.values[l][j])]);
            }
        }
    }
    let p = dir.join("mf_density.csv");
    dens.write(&p)?;
    written.push(p);

    let p = dir.join("mf_checks.json");
    write_json(&p, checks)?;
    written.push(p);
    Ok(written)
}
