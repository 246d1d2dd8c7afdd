//! Dataset generation and ingestion: synthetic uniform cubes, CSV point
//! lists, and the sparse `label index:value ...` text format.

use crate::error::{BenchError, Result};
use afn_precond::geometry::PointSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fs;
use std::path::Path;

/// Cube edge that keeps the point density constant as `n` grows.
pub fn default_edge(n: usize, d: usize) -> f64 {
    (n as f64).powf(1.0 / d as f64)
}

/// `n` points drawn i.i.d. uniformly from `[0, edge]^d`, deterministic per
/// seed.
pub fn gen_synthetic(n: usize, d: usize, edge: f64, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(BenchError::Config(format!(
            "synthetic dataset needs n >= 1 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    if edge <= 0.0 || edge.is_nan() {
        return Err(BenchError::Config(format!(
            "cube edge must be positive, got {edge}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() * edge).collect();
    PointSet::new(coords, d).map_err(BenchError::from)
}

/// Comma-separated floats, one point per line; blank lines skipped.
pub fn load_points_csv(path: &Path) -> Result<PointSet> {
    let text = fs::read_to_string(path)?;
    parse_points_csv(&text, path)
}

pub fn parse_points_csv(text: &str, path: &Path) -> Result<PointSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| BenchError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("cannot parse '{field}' as a number"),
            })?;
            row.push(value);
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(BenchError::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("ragged row: expected {d} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(BenchError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "no points in file".into(),
        });
    }
    PointSet::from_rows(&rows).map_err(BenchError::from)
}

/// Sparse text format: `label index:value index:value ...` with 1-based,
/// strictly increasing indices per line. Labels are discarded; missing
/// indices are zero. The dimension is declared or inferred as the largest
/// index seen.
pub fn load_points_sparse_text(path: &Path, expect_dim: Option<usize>) -> Result<PointSet> {
    let text = fs::read_to_string(path)?;
    parse_points_sparse_text(&text, path, expect_dim)
}

pub fn parse_points_sparse_text(
    text: &str,
    path: &Path,
    expect_dim: Option<usize>,
) -> Result<PointSet> {
    let mut lines: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let _label = fields.next(); // guaranteed by non-empty line
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (col, field) in fields.enumerate() {
            let err = |msg: String| BenchError::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: format!("feature {}: {msg}", col + 1),
            };
            let (idx_str, val_str) = field
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, found '{field}'")))?;
            let idx: usize = idx_str
                .parse()
                .map_err(|_| err(format!("cannot parse index '{idx_str}'")))?;
            if idx == 0 {
                return Err(err("indices are 1-based".into()));
            }
            let value: f64 = val_str
                .parse()
                .map_err(|_| err(format!("cannot parse value '{val_str}'")))?;
            if let Some(&(prev, _)) = entries.last() {
                if idx <= prev {
                    return Err(err(format!(
                        "index {idx} not strictly increasing after {prev}"
                    )));
                }
            }
            if let Some(d) = expect_dim {
                if idx > d {
                    return Err(err(format!("index {idx} exceeds declared dimension {d}")));
                }
            }
            max_index = max_index.max(idx);
            entries.push((idx, value));
        }
        lines.push(entries);
    }
    if lines.is_empty() {
        return Err(BenchError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "no points in file".into(),
        });
    }
    let d = expect_dim.unwrap_or(max_index);
    if d == 0 {
        return Err(BenchError::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "cannot infer dimension: no features present".into(),
        });
    }
    let mut coords = vec![0.0; lines.len() * d];
    for (i, entries) in lines.iter().enumerate() {
        for &(idx, value) in entries {
            coords[i * d + (idx - 1)] = value;
        }
    }
    PointSet::new(coords, d).map_err(BenchError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("<test>")
    }

    #[test]
    fn synthetic_basics() {
        let ps = gen_synthetic(1, 3, 2.0, 0).unwrap();
        assert_eq!(ps.len(), 1);
        assert!(ps.point(0).iter().all(|&c| (0.0..=2.0).contains(&c)));

        let ps = gen_synthetic(4000, 2, 5.0, 1).unwrap();
        let mut mean = 0.0;
        for i in 0..ps.len() {
            mean += ps.point(i)[0];
        }
        mean /= ps.len() as f64;
        // uniform moments: mean edge/2, sd edge/sqrt(12 n)
        let band = 3.0 * 5.0 / (12.0 * 4000.0f64).sqrt();
        assert!((mean - 2.5).abs() < band, "mean {mean} outside {band}");

        assert!(gen_synthetic(0, 2, 1.0, 0).is_err());
        assert!(gen_synthetic(5, 2, 0.0, 0).is_err());

        // deterministic per seed
        let a = gen_synthetic(10, 2, 1.0, 7).unwrap();
        let b = gen_synthetic(10, 2, 1.0, 7).unwrap();
        assert_eq!(a.point(3), b.point(3));
    }

    #[test]
    fn csv_round_and_errors() {
        let ps = parse_points_csv("1.0,2.0\n3.0,4.0\n", &p()).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps.dim(), 2);
        assert_eq!(ps.point(1), &[3.0, 4.0]);

        // blank lines skipped
        let ps = parse_points_csv("\n1.0,2.0\n\n3.0,4.0\n\n", &p()).unwrap();
        assert_eq!(ps.len(), 2);

        assert!(matches!(
            parse_points_csv("", &p()),
            Err(BenchError::Parse { .. })
        ));
        match parse_points_csv("1,2\n3\n", &p()) {
            Err(BenchError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ragged error, got {other:?}"),
        }
        match parse_points_csv("1,2\n3,x\n", &p()) {
            Err(BenchError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn sparse_text_parses_and_validates() {
        let ps = parse_points_sparse_text("1 1:0.5 3:2.0\n", &p(), None).unwrap();
        assert_eq!(ps.dim(), 3);
        assert_eq!(ps.point(0), &[0.5, 0.0, 2.0]);

        let ps = parse_points_sparse_text("0 2:1\n", &p(), Some(2)).unwrap();
        assert_eq!(ps.point(0), &[0.0, 1.0]);

        // out-of-order indices
        assert!(parse_points_sparse_text("1 3:1 2:1\n", &p(), None).is_err());
        // index beyond the declared dimension
        assert!(parse_points_sparse_text("1 3:1\n", &p(), Some(2)).is_err());
        // zero index
        assert!(parse_points_sparse_text("1 0:1\n", &p(), None).is_err());
        // malformed field
        assert!(parse_points_sparse_text("1 2\n", &p(), None).is_err());
        // label-only lines give no inferable dimension
        assert!(parse_points_sparse_text("1\n2\n", &p(), None).is_err());
    }
}
