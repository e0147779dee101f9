// SPDX-License-Identifier: Apache-2.0

//! Regenerates the bundled kernel assets.

use std::path::Path;

use axomap_core::apps::{assets, AppKind};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    for kind in AppKind::ALL {
        let path = dir.join(format!("{}.axa", kind.as_str()));
        std::fs::write(&path, assets::generate(kind))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
