//! Loading systems from the gallery or from descriptor files.

use std::fs;

use anyhow::{anyhow, Context};

use bsym::gallery::{by_name, EntryDescriptor, GalleryEntry};
use bsym::systems::{NCBSystem, SystemDescriptor};

use crate::{Common, Failure};

/// Name and system selected by `--gallery` or `--file`. A file may hold a
/// gallery entry descriptor or a bare system descriptor.
pub fn load(common: &Common) -> Result<(String, NCBSystem), Failure> {
    if let Some(name) = &common.gallery {
        let e = by_name(name).map_err(|e| Failure::Input(anyhow!(e).context(format!("gallery entry {name}"))))?;
        return Ok((e.name, e.system));
    }
    let path = common.file.as_ref().ok_or_else(|| Failure::Input(anyhow!("need --gallery or --file")))?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if let Ok(d) = serde_json::from_str::<EntryDescriptor>(&text) {
        let e = GalleryEntry::from_descriptor(d).map_err(|e| Failure::Input(anyhow!(e)))?;
        return Ok((e.name, e.system));
    }
    let d: SystemDescriptor = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Input)?;
    let sys = NCBSystem::from_descriptor(d).map_err(|e| Failure::Input(anyhow!(e)))?;
    Ok((name, sys))
}
