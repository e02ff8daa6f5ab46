//! Output formatting shared by the analyses and the CLI: full-precision
//! float text, plot-ready CSV grids, box-plot percentile tables, and
//! versioned JSON summaries.

use crate::error::Result;
use crate::stats;
use serde::Serialize;
use std::io::Write as _;
use std::path::Path;

/// Version stamp for every JSON summary this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Formats a float with 17 significant digits, enough to round-trip any
/// 64-bit value exactly.
pub fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a summary as pretty JSON with a trailing newline.  Callers
/// embed [`SCHEMA_VERSION`] in their payload types.
pub fn write_json<T: Serialize>(path: &Path, payload: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(payload)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Box-plot summary of one sample set: the five standard percentiles plus
/// mean and kernel-density mode.
#[derive(Debug, Clone, Serialize)]
pub struct BoxSummary {
    pub name: String,
    pub mean: f64,
    pub mode: f64,
    /// 2.5 / 25 / 50 / 75 / 97.5 percentiles.
    pub percentiles: [f64; 5],
}

impl BoxSummary {
    pub fn from_samples(name: &str, samples: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            mean: stats::mean(samples),
            mode: stats::kde_mode(samples),
            percentiles: stats::box_percentiles(samples),
        }
    }
}

/// Writes box summaries as CSV:
/// `name,p2_5,p25,p50,p75,p97_5,mean,mode`.
pub fn write_box_csv(path: &Path, rows: &[BoxSummary]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "name,p2_5,p25,p50,p75,p97_5,mean,mode")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.name,
            f17(r.percentiles[0]),
            f17(r.percentiles[1]),
            f17(r.percentiles[2]),
            f17(r.percentiles[3]),
            f17(r.percentiles[4]),
            f17(r.mean),
            f17(r.mode),
        )?;
    }
    Ok(())
}

/// Writes a kernel-density grid of the samples as CSV with columns
/// `<value_name>,density` (512 grid points).
pub fn write_density_csv(path: &Path, value_name: &str, samples: &[f64]) -> Result<()> {
    let (grid, dens) = stats::kde_grid(samples, 512);
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{value_name},density")?;
    for (x, d) in grid.iter().zip(&dens) {
        writeln!(f, "{},{}", f17(*x), f17(*d))?;
    }
    Ok(())
}

/// Writes an arbitrary two-column CSV of paired values.
pub fn write_xy_csv(path: &Path, x_name: &str, y_name: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{x_name},{y_name}")?;
    for (x, y) in rows {
        writeln!(f, "{},{}", f17(*x), f17(*y))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f17_round_trips_exactly() {
        for v in [
            0.0,
            -1.5,
            std::f64::consts::PI,
            6.626e-34,
            1.0 / 3.0,
            f64::MAX,
            f64::MIN_POSITIVE,
            23.419999999999998,
        ] {
            let s = f17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s} -> {back}");
        }
    }

    #[test]
    fn box_summary_matches_stats() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let b = BoxSummary::from_samples("x", &xs);
        assert_eq!(b.percentiles[2], 50.0);
        assert_eq!(b.mean, 50.0);
        assert_eq!(b.percentiles[0], 2.5);
        assert_eq!(b.percentiles[4], 97.5);
    }

    #[test]
    fn csv_writers_produce_expected_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("box.csv");
        write_box_csv(&p, &[BoxSummary::from_samples("a", &[1.0, 2.0, 3.0])]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("name,p2_5,"));
        assert_eq!(text.lines().count(), 2);

        let p = dir.path().join("dens.csv");
        write_density_csv(&p, "rho", &[0.0, 0.1, 0.2, 0.4, 0.4, 0.5]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 513);
        assert!(text.starts_with("rho,density"));
    }

    #[test]
    fn json_includes_all_fields_deterministically() {
        #[derive(Serialize)]
        struct Demo {
            schema_version: u32,
            value: f64,
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        write_json(&p, &Demo { schema_version: SCHEMA_VERSION, value: 0.1 + 0.2 }).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        // serde_json uses shortest round-trip float text
        assert!(text.contains("0.30000000000000004"), "{text}");
        write_json(&p, &Demo { schema_version: SCHEMA_VERSION, value: 0.1 + 0.2 }).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), text);
    }
}
