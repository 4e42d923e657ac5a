//! LiDAR point CSV: `x,y,z,intensity,return_number,is_ground` per record,
//! `#`-prefixed comment lines ignored, `is_ground` as 0 or 1.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use landfuse_core::tin::LidarPoint;

use crate::error::{CliError, Result};

pub fn load_points(path: &Path) -> Result<Vec<LidarPoint>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| {
            CliError::data(format!("{}:{}: {what}: {line:?}", path.display(), lineno + 1))
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(bad("expected 6 comma-separated fields"));
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = fields[i].parse().map_err(|_| bad("malformed number"))?;
            if !v.is_finite() {
                return Err(bad("non-finite field"));
            }
            Ok(v)
        };
        let return_number: u32 =
            fields[4].parse().map_err(|_| bad("malformed return number"))?;
        if return_number == 0 {
            return Err(bad("return number must be at least 1"));
        }
        let is_ground = match fields[5] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("is_ground must be 0 or 1")),
        };
        points.push(LidarPoint {
            x: num(0)?,
            y: num(1)?,
            z: num(2)?,
            intensity: num(3)?,
            return_number,
            is_ground,
        });
    }
    Ok(points)
}

pub fn write_points(path: &Path, points: &[LidarPoint]) -> Result<()> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# x,y,z,intensity,return_number,is_ground")?;
    for p in points {
        writeln!(
            w,
            "{:?},{:?},{:?},{:?},{},{}",
            p.x,
            p.y,
            p.z,
            p.intensity,
            p.return_number,
            u8::from(p.is_ground)
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn empty_file_gives_empty_list() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "").unwrap();
        assert!(load_points(&path).unwrap().is_empty());
    }

    #[test]
    fn three_line_fixture_parses_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(
            &path,
            "# comment\n1.5,2.5,10.0,0.7,1,1\n3.0,4.0,12.5,0.2,2,0\n-1.0,0.0,5.25,1.0,1,1\n",
        )
        .unwrap();
        let pts = load_points(&path).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].x, 1.5);
        assert_eq!(pts[0].intensity, 0.7);
        assert!(pts[0].is_ground);
        assert_eq!(pts[1].return_number, 2);
        assert!(!pts[1].is_ground);
        assert_eq!(pts[2].z, 5.25);
    }

    #[test]
    fn large_generated_file_round_trips_count() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let n = 100_000;
        let points: Vec<LidarPoint> = (0..n)
            .map(|i| LidarPoint {
                x: i as f64 * 0.1,
                y: (i % 317) as f64,
                z: (i % 13) as f64 * 0.5,
                intensity: (i % 7) as f64 / 7.0,
                return_number: 1 + (i % 4) as u32,
                is_ground: i % 3 == 0,
            })
            .collect();
        write_points(&path, &points).unwrap();
        let back = load_points(&path).unwrap();
        assert_eq!(back.len(), n);
        assert_eq!(back[12345], points[12345]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "1,2,3,4,1,1\n1,2,oops,4,1,0\n").unwrap();
        let err = load_points(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn non_finite_field_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "1,2,inf,4,1,0\n").unwrap();
        assert!(load_points(&path).unwrap_err().to_string().contains("non-finite"));
    }
}
