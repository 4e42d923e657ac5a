//! Binary portable pixel map (P6) writer for rendered class maps.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use landfuse_core::raster::{class_map_to_rgb, ClassMap, Rgb};

use crate::error::{CliError, Result};

/// Render a class map to a P6 file: one RGB pixel per cell, label 0 black.
pub fn render_class_map(path: &Path, map: &ClassMap, palette: &[Rgb]) -> Result<()> {
    let rgb = class_map_to_rgb(map, palette)?;
    let file = fs::File::create(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write!(w, "P6\n{} {}\n255\n", map.cols(), map.rows())?;
    w.write_all(&rgb)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use landfuse_core::raster::default_palette;
    use tempfile::tempdir;

    #[test]
    fn ppm_layout_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.ppm");
        let map = ClassMap::new(2, 3, 6, vec![0, 1, 2, 3, 4, 5]).unwrap();
        render_class_map(&path, &map, &default_palette()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P6\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 2 * 3 * 3);
        // First pixel is the unlabeled black.
        assert_eq!(&bytes[header.len()..header.len() + 3], &[0, 0, 0]);
    }
}
