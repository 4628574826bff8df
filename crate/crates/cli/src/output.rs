use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use serde_json::Value;

use qrlab::ExtendedPoint;

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// One row per point; `∞` is written as `inf` in every column.
pub fn write_points(path: &Path, points: &[ExtendedPoint], dim: usize) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    w.write_record(&header).map_err(csv_err)?;
    for p in points {
        let row: Vec<String> = match p.coords() {
            Some(c) => c.iter().map(|v| v.to_string()).collect(),
            None => vec!["inf".to_string(); dim],
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_series(path: &Path, header: &str, values: &[f64]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header.split(',')).map_err(csv_err)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush()
}

/// Rows given as JSON objects, written in the column order of `header`.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Value]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        let cells: Vec<String> = header
            .iter()
            .map(|k| match &row[*k] {
                Value::String(s) => s.clone(),
                v => v.to_string(),
            })
            .collect();
        w.write_record(&cells).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Grayscale raster of the finite points: black dots on white, framed by
/// the bounding square of the cloud.
pub fn write_png(path: &Path, points: &[ExtendedPoint], size: u32) -> io::Result<()> {
    let finite: Vec<&[f64]> = points.iter().filter_map(|p| p.coords()).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &finite {
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.1;
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut pixels = vec![255u8; (size * size) as usize];
    for c in &finite {
        let px = ((c[0] - mid[0]) / side + 0.5) * size as f64;
        let py = (0.5 - (c[1] - mid[1]) / side) * size as f64;
        if px >= 0.0 && py >= 0.0 && px < size as f64 && py < size as f64 {
            pixels[py as usize * size as usize + px as usize] = 0;
        }
    }
    let mut encoder = png::Encoder::new(BufWriter::new(File::create(path)?), size, size);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(io::Error::other)?;
    writer.write_image_data(&pixels).map_err(io::Error::other)?;
    writer.finish().map_err(io::Error::other)?;
    Ok(())
}
