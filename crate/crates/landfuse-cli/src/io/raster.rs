//! Two-file raster format: a UTF-8 `key = value` header and a raw
//! little-endian 32-bit-real payload in band-sequential order.
//!
//! Header keys: `rows`, `cols`, `bands`, `nodata`, `origin_x`, `origin_y`,
//! `pixel_size`, `interleave = bsq`, `dtype = f32le`. The payload lives next
//! to the header under the same basename with a `.bin` suffix. Unknown keys
//! round-trip untouched (band provenance, class counts).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use landfuse_core::raster::{ClassMap, RasterGrid};

use crate::error::{CliError, Result};

/// Payload path for a header path: same basename, `.bin` suffix.
pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("bin")
}

/// Write the grid; `extras` are appended as additional header keys.
pub fn write_raster(
    header: &Path,
    grid: &RasterGrid,
    extras: &BTreeMap<String, String>,
) -> Result<()> {
    grid.validate()?;
    let mut text = String::new();
    text.push_str(&format!("rows = {}\n", grid.rows()));
    text.push_str(&format!("cols = {}\n", grid.cols()));
    text.push_str(&format!("bands = {}\n", grid.bands()));
    text.push_str(&format!("nodata = {:?}\n", grid.nodata));
    text.push_str(&format!("origin_x = {:?}\n", grid.origin_x));
    text.push_str(&format!("origin_y = {:?}\n", grid.origin_y));
    text.push_str(&format!("pixel_size = {:?}\n", grid.pixel_size));
    text.push_str("interleave = bsq\n");
    text.push_str("dtype = f32le\n");
    for (key, value) in extras {
        text.push_str(&format!("{key} = {value}\n"));
    }
    fs::write(header, text)
        .map_err(|e| CliError::data(format!("{}: {e}", header.display())))?;
    let payload = payload_path(header);
    let file = fs::File::create(&payload)
        .map_err(|e| CliError::data(format!("{}: {e}", payload.display())))?;
    let mut writer = BufWriter::new(file);
    for &v in grid.data() {
        writer.write_all(&v.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a grid and the extra header keys.
pub fn read_raster(header: &Path) -> Result<(RasterGrid, BTreeMap<String, String>)> {
    let text = fs::read_to_string(header)
        .map_err(|e| CliError::data(format!("{}: {e}", header.display())))?;
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::data(format!(
                "{}:{}: expected `key = value`, got {line:?}",
                header.display(),
                lineno + 1
            )));
        };
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }
    let take = |fields: &mut BTreeMap<String, String>, key: &str| -> Result<String> {
        fields.remove(key).ok_or_else(|| {
            CliError::data(format!("{}: missing header key {key}", header.display()))
        })
    };
    let parse_usize = |key: &str, value: &str| -> Result<usize> {
        value.parse().map_err(|_| {
            CliError::data(format!("{}: {key} is not a count: {value:?}", header.display()))
        })
    };
    let parse_f64 = |key: &str, value: &str| -> Result<f64> {
        value.parse().map_err(|_| {
            CliError::data(format!("{}: {key} is not a number: {value:?}", header.display()))
        })
    };
    let mut fields_mut = fields;
    let rows = parse_usize("rows", &take(&mut fields_mut, "rows")?)?;
    let cols = parse_usize("cols", &take(&mut fields_mut, "cols")?)?;
    let bands = parse_usize("bands", &take(&mut fields_mut, "bands")?)?;
    let nodata = parse_f64("nodata", &take(&mut fields_mut, "nodata")?)? as f32;
    let origin_x = parse_f64("origin_x", &take(&mut fields_mut, "origin_x")?)?;
    let origin_y = parse_f64("origin_y", &take(&mut fields_mut, "origin_y")?)?;
    let pixel_size = parse_f64("pixel_size", &take(&mut fields_mut, "pixel_size")?)?;
    let interleave = take(&mut fields_mut, "interleave")?;
    if interleave != "bsq" {
        return Err(CliError::data(format!(
            "{}: unsupported interleave {interleave:?} (only bsq)",
            header.display()
        )));
    }
    let dtype = take(&mut fields_mut, "dtype")?;
    if dtype != "f32le" {
        return Err(CliError::data(format!(
            "{}: unsupported dtype {dtype:?} (only f32le)",
            header.display()
        )));
    }
    let payload = payload_path(header);
    let bytes = fs::read(&payload)
        .map_err(|e| CliError::data(format!("{}: {e}", payload.display())))?;
    let expected = rows * cols * bands * 4;
    if bytes.len() != expected {
        return Err(CliError::data(format!(
            "{}: payload holds {} bytes, header implies {expected}",
            payload.display(),
            bytes.len()
        )));
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let grid = RasterGrid::new(rows, cols, bands, data, nodata)?
        .with_geo(origin_x, origin_y, pixel_size);
    Ok((grid, fields_mut))
}

/// Interpret a single-band raster as a class map. The class count comes
/// from the `classes` extra key when present, else from the maximum label.
pub fn read_class_map(header: &Path) -> Result<ClassMap> {
    let (grid, extras) = read_raster(header)?;
    if grid.bands() != 1 {
        return Err(CliError::data(format!(
            "{}: class maps are single-band, got {} bands",
            header.display(),
            grid.bands()
        )));
    }
    let mut labels = Vec::with_capacity(grid.pixels());
    for &v in grid.band(0) {
        let label = if grid.is_nodata(v) { 0.0 } else { f64::from(v) };
        if label < 0.0 || label > f64::from(u16::MAX) || label.fract() != 0.0 {
            return Err(CliError::data(format!(
                "{}: non-integral class label {v}",
                header.display()
            )));
        }
        labels.push(label as u16);
    }
    let num_classes = match extras.get("classes") {
        Some(text) => text.parse::<u16>().map_err(|_| {
            CliError::data(format!("{}: bad classes key {text:?}", header.display()))
        })?,
        None => labels.iter().copied().max().unwrap_or(0),
    };
    Ok(ClassMap::new(grid.rows(), grid.cols(), num_classes, labels)?)
}

/// Write a class map as a single-band raster with the `classes` extra key.
pub fn write_class_map(header: &Path, map: &ClassMap) -> Result<()> {
    let data: Vec<f32> = map.labels().iter().map(|&l| f32::from(l)).collect();
    let grid = RasterGrid::new(map.rows(), map.cols(), 1, data, -1.0)?;
    let mut extras = BTreeMap::new();
    extras.insert("classes".to_string(), map.num_classes().to_string());
    write_raster(header, &grid, &extras)
}

#[cfg(test)]
mod tests {
    use super::*;
    use landfuse_core::raster::DEFAULT_NODATA;
    use tempfile::tempdir;

    #[test]
    fn round_trip_small_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.hdr");
        let grid = RasterGrid::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0], DEFAULT_NODATA)
            .unwrap()
            .with_geo(10.0, 20.0, 0.5);
        write_raster(&path, &grid, &BTreeMap::new()).unwrap();
        let (back, extras) = read_raster(&path).unwrap();
        assert_eq!(back, grid);
        assert!(extras.is_empty());
    }

    #[test]
    fn nodata_sentinel_preserved_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.hdr");
        let grid =
            RasterGrid::new(1, 3, 1, vec![-9999.0, 1.5, -9999.0], -9999.0).unwrap();
        write_raster(&path, &grid, &BTreeMap::new()).unwrap();
        let (back, _) = read_raster(&path).unwrap();
        assert_eq!(back.data(), grid.data());
        assert_eq!(back.nodata, -9999.0);
    }

    #[test]
    fn payload_size_is_header_product() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cube.hdr");
        let grid = RasterGrid::filled(100, 100, 215, 0.25, DEFAULT_NODATA);
        write_raster(&path, &grid, &BTreeMap::new()).unwrap();
        let bytes = std::fs::metadata(payload_path(&path)).unwrap().len();
        assert_eq!(bytes, 100 * 100 * 215 * 4);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.hdr");
        let grid = RasterGrid::filled(4, 4, 3, 1.0, DEFAULT_NODATA);
        write_raster(&path, &grid, &BTreeMap::new()).unwrap();
        // Truncate the payload to 40 values.
        let payload = payload_path(&path);
        let bytes = std::fs::read(&payload).unwrap();
        std::fs::write(&payload, &bytes[..40 * 4]).unwrap();
        let err = read_raster(&path).unwrap_err();
        assert!(err.to_string().contains("payload holds"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_header_is_reported_with_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.hdr");
        std::fs::write(&path, "rows = 2\nnot a header line\n").unwrap();
        let err = read_raster(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn extras_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.hdr");
        let grid = RasterGrid::filled(2, 2, 1, 0.0, DEFAULT_NODATA);
        let mut extras = BTreeMap::new();
        extras.insert("band_0".to_string(), "hyper:0".to_string());
        write_raster(&path, &grid, &extras).unwrap();
        let (_, back) = read_raster(&path).unwrap();
        assert_eq!(back.get("band_0").map(String::as_str), Some("hyper:0"));
    }

    #[test]
    fn class_map_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.hdr");
        let map = ClassMap::new(2, 3, 6, vec![0, 1, 2, 3, 4, 6]).unwrap();
        write_class_map(&path, &map).unwrap();
        let back = read_class_map(&path).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn fractional_class_label_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.hdr");
        let grid = RasterGrid::new(1, 2, 1, vec![1.5, 2.0], -1.0).unwrap();
        write_raster(&path, &grid, &BTreeMap::new()).unwrap();
        assert!(read_class_map(&path).is_err());
    }
}
