//! CSV and JSON persistence for clouds, reports, and result tables.
//!
//! Point clouds are stored as plain CSV, one row per point, with a
//! coordinate header. Reals are written with 17 significant digits in
//! scientific notation so every value reparses to the identical bits; the
//! decimal separator is always '.'. A cloud's truth manifold, when known,
//! lives in a JSON sidecar next to the CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::datasets::{BenchTable, ManifoldDescriptor, PointCloud};
use crate::error::{Error, Result};
use crate::ridge::TuningCurve;

/// Formats a real with 17 significant digits, enough for an exact f64
/// round-trip through text.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Where the truth sidecar of a cloud file lives: `dir/name.csv` maps to
/// `dir/name.truth.json`.
pub fn truth_sidecar_path(cloud_path: &Path) -> PathBuf {
    let stem = cloud_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cloud".to_string());
    cloud_path.with_file_name(format!("{stem}.truth.json"))
}

/// Writes one point per row, coordinates comma-separated, with an
/// `x0,x1,...` header line.
pub fn write_cloud_csv<W: Write>(mut out: W, points: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (0..points.nrows()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for j in 0..points.ncols() {
        let row: Vec<String> = (0..points.nrows())
            .map(|i| format_real(points[(i, j)]))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a point-per-row CSV into a coordinates-by-points matrix. A leading
/// line that does not parse as numbers is treated as a header; blank lines
/// are skipped; all rows must have the same width.
pub fn read_cloud_csv<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut saw_data_or_header = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches('\r').trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::Csv {
                            line: line_no,
                            message: format!("expected {w} fields, found {}", values.len()),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err(err) => {
                // Only the first non-empty line may be non-numeric.
                if saw_data_or_header {
                    return Err(Error::Csv {
                        line: line_no,
                        message: err.to_string(),
                    });
                }
            }
        }
        saw_data_or_header = true;
    }

    let width = width.ok_or(Error::Csv {
        line: 0,
        message: "no data rows".to_string(),
    })?;
    if width == 0 {
        return Err(Error::Csv {
            line: 1,
            message: "rows have no fields".to_string(),
        });
    }
    let mut points = DMatrix::zeros(width, rows.len());
    for (j, row) in rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            points[(i, j)] = *v;
        }
    }
    Ok(points)
}

/// Saves the cloud CSV and, when the cloud knows its manifold, the truth
/// sidecar beside it.
pub fn save_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = File::create(path)?;
    write_cloud_csv(BufWriter::new(file), &cloud.points)?;
    if let Some(truth) = &cloud.truth {
        write_json(&truth_sidecar_path(path), truth)?;
    }
    Ok(())
}

/// Loads a cloud CSV, picking up the truth sidecar when one exists.
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let points = read_cloud_csv(File::open(path)?)?;
    let mut cloud = PointCloud::new(points)?;
    let sidecar = truth_sidecar_path(path);
    if sidecar.exists() {
        cloud.truth = Some(read_json::<ManifoldDescriptor>(&sidecar)?);
    }
    Ok(cloud)
}

/// Tuning-curve CSV with the `lambda,s,s_prime,s_double_prime` header.
pub fn write_tuning_curve_csv<W: Write>(mut out: W, curve: &TuningCurve) -> Result<()> {
    writeln!(out, "lambda,s,s_prime,s_double_prime")?;
    for i in 0..curve.lambda.len() {
        writeln!(
            out,
            "{},{},{},{}",
            format_real(curve.lambda[i]),
            format_real(curve.s[i]),
            format_real(curve.s_prime[i]),
            format_real(curve.s_double_prime[i]),
        )?;
    }
    Ok(())
}

/// Benchmark CSV with the `method,K,mse,sd` header. Failed cells carry NaN.
pub fn write_bench_csv<W: Write>(mut out: W, table: &BenchTable) -> Result<()> {
    writeln!(out, "method,K,mse,sd")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.method,
            row.k,
            format_real(row.mse),
            format_real(row.sd),
        )?;
    }
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, BenchRow, GenSpec, Method, Shape};
    use crate::denoise::{PointReport, PointStatus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reals_round_trip_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut values: Vec<f64> = (0..200)
            .map(|_| rng.random_range(-1e6..1e6) * 10f64.powi(rng.random_range(-30..30)))
            .collect();
        values.extend([
            0.0,
            -0.0,
            0.1,
            f64::MIN_POSITIVE,
            f64::EPSILON,
            1e308,
            -1e-308,
        ]);
        for v in values {
            let text = format_real(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {text} -> {back}");
            assert!(!text.contains(','));
        }
    }

    #[test]
    fn cloud_csv_round_trips_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let points = DMatrix::from_fn(3, 17, |_, _| {
            rng.random_range(-10.0..10.0) * 10f64.powi(rng.random_range(-8..8))
        });
        let mut buf = Vec::new();
        write_cloud_csv(&mut buf, &points).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,x2\n"));
        assert_eq!(text.lines().count(), 18);

        let back = read_cloud_csv(buf.as_slice()).unwrap();
        assert_eq!(back, points);
    }

    #[test]
    fn csv_reader_handles_headerless_and_messy_input() {
        let body = "1.0, 2.0\r\n\n-3.5,4.5\n";
        let points = read_cloud_csv(body.as_bytes()).unwrap();
        assert_eq!(points.nrows(), 2);
        assert_eq!(points.ncols(), 2);
        assert_eq!(points[(0, 1)], -3.5);

        let with_header = "a,b\n1.0,2.0\n";
        let points = read_cloud_csv(with_header.as_bytes()).unwrap();
        assert_eq!(points.ncols(), 1);
    }

    #[test]
    fn csv_reader_reports_line_numbers() {
        let ragged = "1.0,2.0\n3.0\n";
        match read_cloud_csv(ragged.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected csv error, got {other:?}"),
        }

        let bad_value = "x0,x1\n1.0,2.0\n1.0,oops\n";
        match read_cloud_csv(bad_value.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected csv error, got {other:?}"),
        }

        assert!(read_cloud_csv("".as_bytes()).is_err());
        assert!(read_cloud_csv("just,a,header\n".as_bytes()).is_err());
    }

    #[test]
    fn cloud_files_carry_their_truth_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        assert_eq!(
            truth_sidecar_path(&path),
            dir.path().join("data.truth.json")
        );

        let cloud = generate(&GenSpec {
            shape: Shape::UnitSphere,
            n: 12,
            noise_sigma: 0.1,
            seed: 5,
        })
        .unwrap();
        save_cloud(&path, &cloud).unwrap();
        assert!(dir.path().join("data.truth.json").exists());

        let back = load_cloud(&path).unwrap();
        assert_eq!(back.points, cloud.points);
        assert_eq!(back.truth, cloud.truth);

        // Without the sidecar the cloud loads with no truth attached.
        std::fs::remove_file(dir.path().join("data.truth.json")).unwrap();
        let bare = load_cloud(&path).unwrap();
        assert_eq!(bare.points, cloud.points);
        assert!(bare.truth.is_none());
    }

    #[test]
    fn table_writers_emit_the_documented_headers() {
        let curve = TuningCurve {
            lambda: vec![0.5],
            s: vec![2.0],
            s_prime: vec![-1.0],
            s_double_prime: vec![4.0],
        };
        let mut buf = Vec::new();
        write_tuning_curve_csv(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "lambda,s,s_prime,s_double_prime\n\
             5.0000000000000000e-1,2.0000000000000000e0,-1.0000000000000000e0,4.0000000000000000e0\n"
        );

        let table = BenchTable {
            rows: vec![
                BenchRow {
                    method: Method::RqmfE,
                    k: 16,
                    mse: 0.015,
                    sd: 0.01,
                },
                BenchRow {
                    method: Method::LocalPca,
                    k: 16,
                    mse: f64::NAN,
                    sd: f64::NAN,
                },
            ],
            failures: vec!["local-pca K=16 repeat 0: boom".to_string()],
        };
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,K,mse,sd");
        assert_eq!(
            lines[1],
            format!("rqmf-e,16,{},{}", format_real(0.015), format_real(0.01))
        );
        assert_eq!(lines[2], "local-pca,16,NaN,NaN");
    }

    #[test]
    fn json_helpers_round_trip_reports() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let reports = vec![
            PointReport {
                index: 0,
                status: PointStatus::Denoised,
                lambda_used: Some(0.25),
                iterations: 12,
                warning: None,
            },
            PointReport {
                index: 1,
                status: PointStatus::Fallback,
                lambda_used: None,
                iterations: 0,
                warning: Some("quadratic fit failed".to_string()),
            },
        ];
        write_json(&path, &reports).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"lambda_used\": 0.25"));
        let back: Vec<PointReport> = read_json(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].warning.as_deref(), Some("quadratic fit failed"));
    }
}
