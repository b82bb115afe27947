//! Dataset emission: one directory per building plus a top-level manifest.
//!
//! ```text
//! out/
//!   manifest.json
//!   building_1/
//!     manifest.json
//!     total_current.csv
//!     cat_1_power.csv      (or cat_1_current.csv)
//!     ...
//! ```

use std::path::Path;

use loadforge_core::seed;
use loadforge_core::simulate::{synthesize_building_with, BuildingSpec, GroundTruth};

use crate::error::{CliError, Result};
use crate::formats;
use crate::manifest::{write_hashed, BuildingEntry, FileEntry, Manifest};

/// Seed of the building at `index` in a run rooted at `root_seed`.
pub fn building_seed(root_seed: u64, index: usize) -> u64 {
    seed::derive(root_seed, index as u64)
}

fn check_component(kind: &str, s: &str) -> Result<()> {
    let ok = !s.is_empty()
        && s != "."
        && s != ".."
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{kind} {s:?} cannot be used in a file name (use letters, digits, '_', '-' or '.')"
        )))
    }
}

/// Synthesizes and writes one building into `dir`.
pub fn emit_building(spec: &BuildingSpec, building_seed: u64, dir: &Path, template: &Manifest) -> Result<BuildingEntry> {
    for c in &spec.categories {
        check_component("category id", &c.id)?;
    }
    let mut files: Vec<FileEntry> = Vec::new();
    let mut failure: Option<CliError> = None;
    // Category currents are written as they are produced, so the core does
    // not need to retain them.
    let streaming = BuildingSpec {
        ground_truth: GroundTruth::Power,
        ..spec.clone()
    };
    let data = synthesize_building_with(&streaming, building_seed, |ci, current| {
        if spec.ground_truth != GroundTruth::Current || failure.is_some() {
            return;
        }
        let path = dir.join(format!("cat_{}_current.csv", spec.categories[ci].id));
        match write_hashed(&path, |w| formats::write_current(w, current)) {
            Ok(e) => files.push(e),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if spec.ground_truth == GroundTruth::Power {
        for c in &data.categories {
            let path = dir.join(format!("cat_{}_power.csv", c.id));
            files.push(write_hashed(&path, |w| formats::write_power(w, &c.power))?);
        }
    }
    files.insert(
        0,
        write_hashed(&dir.join("total_current.csv"), |w| formats::write_current(w, &data.total))?,
    );
    let entry = BuildingEntry::new(spec, building_seed, Some(data.noise_std));
    let mut manifest = template.clone();
    manifest.buildings = vec![entry.clone()];
    manifest.files = files;
    manifest.write(&dir.join("manifest.json"))?;
    Ok(entry)
}

/// Writes every building under `out_dir` and the top-level manifest, which
/// lists the building manifests with their checksums.
pub fn emit_shed(specs: &[BuildingSpec], root_seed: u64, out_dir: &Path, template: &Manifest) -> Result<Manifest> {
    if specs.is_empty() {
        return Err(CliError::Config("no buildings to generate".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        check_component("building name", &s.name)?;
        if specs[..i].iter().any(|o| o.name == s.name) {
            return Err(CliError::Config(format!("duplicate building name {:?}", s.name)));
        }
        s.validate()?;
    }
    let mut top = template.clone();
    top.root_seed = Some(root_seed);
    for (i, spec) in specs.iter().enumerate() {
        let dir = out_dir.join(&spec.name);
        let seed = building_seed(root_seed, i);
        log::info!("building {} (seed {seed}) -> {}", spec.name, dir.display());
        let entry = emit_building(spec, seed, &dir, &top)?;
        let mut file = crate::manifest::hash_file(&dir.join("manifest.json"))?;
        file.path = format!("{}/manifest.json", spec.name);
        top.files.push(file);
        top.buildings.push(entry);
    }
    top.write(&out_dir.join("manifest.json"))?;
    Ok(top)
}
