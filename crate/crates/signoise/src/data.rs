//! Hindcast dataset container and its on-disk CSV format.
//!
//! The layout is one row per start year: the year label, the observed
//! value, then one column per ensemble member.  Lines starting with `#`
//! are comments; the header must read `year,obs,m1,...,mR`.

use crate::error::{Error, Result};
use std::io::Write as _;
use std::path::Path;

/// Observations paired with an ensemble hindcast, N years by R members.
#[derive(Debug, Clone, PartialEq)]
pub struct HindcastDataset {
    /// Start-year labels, one per row (not used numerically).
    pub years: Vec<i32>,
    /// Observed verification value for each year.
    pub obs: Vec<f64>,
    /// Ensemble members, row-major: `ens[t]` holds year t's R forecasts.
    pub ens: Vec<Vec<f64>>,
}

impl HindcastDataset {
    /// Builds a dataset from parts, checking only shape consistency.
    pub fn from_parts(years: Vec<i32>, obs: Vec<f64>, ens: Vec<Vec<f64>>) -> Result<Self> {
        if years.len() != obs.len() || years.len() != ens.len() {
            return Err(Error::DimensionMismatch(format!(
                "years/obs/ensemble row counts disagree: {}/{}/{}",
                years.len(),
                obs.len(),
                ens.len()
            )));
        }
        if let Some(r) = ens.first().map(Vec::len) {
            if let Some(bad) = ens.iter().position(|row| row.len() != r) {
                return Err(Error::DimensionMismatch(format!(
                    "ensemble row {} has {} members, expected {}",
                    bad,
                    ens[bad].len(),
                    r
                )));
            }
        }
        if obs.iter().any(|v| !v.is_finite())
            || ens.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidData("non-finite value in dataset".into()));
        }
        if years.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(
                "years must be strictly increasing".into(),
            ));
        }
        Ok(Self { years, obs, ens })
    }

    /// Number of start years N.
    pub fn n_years(&self) -> usize {
        self.obs.len()
    }

    /// Ensemble size R.
    pub fn r_members(&self) -> usize {
        self.ens.first().map_or(0, Vec::len)
    }

    /// Ensemble mean for each year.
    pub fn ensemble_means(&self) -> Vec<f64> {
        self.ens
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    /// Parses the CSV format, enforcing N >= 3 and R >= 2.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut years = Vec::new();
        let mut obs = Vec::new();
        let mut ens: Vec<Vec<f64>> = Vec::new();
        let mut header_seen = false;
        let mut n_members = 0usize;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                if fields.len() < 3 || fields[0] != "year" || fields[1] != "obs" {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "expected header `year,obs,m1,...`".into(),
                    });
                }
                for (k, f) in fields[2..].iter().enumerate() {
                    let want = format!("m{}", k + 1);
                    if *f != want {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("member column {} is `{}`, expected `{}`", k + 3, f, want),
                        });
                    }
                }
                n_members = fields.len() - 2;
                header_seen = true;
                continue;
            }
            if fields.len() != n_members + 2 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", n_members + 2, fields.len()),
                });
            }
            let year: i32 = fields[0].parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad year `{}`", fields[0]),
            })?;
            if let Some(&prev) = years.last() {
                if year <= prev {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("year {year} does not increase past {prev}"),
                    });
                }
            }
            let mut nums = Vec::with_capacity(n_members + 1);
            for f in &fields[1..] {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad number `{f}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("non-finite value `{f}`"),
                    });
                }
                nums.push(v);
            }
            years.push(year);
            obs.push(nums[0]);
            ens.push(nums[1..].to_vec());
        }

        if !header_seen {
            return Err(Error::InvalidData("no header row found".into()));
        }
        if years.len() < 3 {
            return Err(Error::InvalidData(format!(
                "need at least 3 years, found {}",
                years.len()
            )));
        }
        if n_members < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 ensemble members, found {n_members}"
            )));
        }
        Self::from_parts(years, obs, ens)
    }

    /// Reads a dataset from a CSV file.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Serializes to the CSV format with full float precision.
    pub fn to_csv_string(&self) -> String {
        let r = self.r_members();
        let mut out = String::from("year,obs");
        for k in 1..=r {
            out.push_str(&format!(",m{k}"));
        }
        out.push('\n');
        for t in 0..self.n_years() {
            out.push_str(&format!("{},{}", self.years[t], crate::report::f17(self.obs[t])));
            for v in &self.ens[t] {
                out.push(',');
                out.push_str(&crate::report::f17(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Writes the CSV serialization, prefixed by optional `#` comment lines.
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        for c in comments {
            writeln!(f, "# {c}")?;
        }
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// FNV-1a hash of the serialized content, for provenance stamps.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_csv_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_csv() -> &'static str {
        "# a comment\nyear,obs,m1,m2\n1960,1.5,0.5,2.5\n1961,-1.0,0.0,1.0\n1962,0.25,0.5,-0.5\n"
    }

    #[test]
    fn parses_and_round_trips() {
        let d = HindcastDataset::from_csv_str(small_csv()).unwrap();
        assert_eq!(d.n_years(), 3);
        assert_eq!(d.r_members(), 2);
        assert_eq!(d.years, vec![1960, 1961, 1962]);
        assert_eq!(d.obs[2], 0.25);
        assert_eq!(d.ens[0], vec![0.5, 2.5]);
        let d2 = HindcastDataset::from_csv_str(&d.to_csv_string()).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn ensemble_means_average_rows() {
        let d = HindcastDataset::from_csv_str(small_csv()).unwrap();
        assert_eq!(d.ensemble_means(), vec![1.5, 0.5, 0.0]);
    }

    #[test]
    fn rejects_bad_header() {
        let e = HindcastDataset::from_csv_str("year,observed,m1,m2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        let e = HindcastDataset::from_csv_str("year,obs,m1,m3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn rejects_ragged_and_non_numeric_rows() {
        let text = "year,obs,m1,m2\n1960,1.0,2.0,3.0\n1961,1.0,2.0\n";
        let e = HindcastDataset::from_csv_str(text).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let text = "year,obs,m1,m2\n1960,1.0,two,3.0\n";
        let e = HindcastDataset::from_csv_str(text).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn rejects_too_small_datasets() {
        let text = "year,obs,m1,m2\n1960,1.0,2.0,3.0\n1961,0.0,1.0,2.0\n";
        assert!(matches!(
            HindcastDataset::from_csv_str(text),
            Err(Error::InvalidData(_))
        ));
        let text = "year,obs,m1\n1960,1.0,2.0\n1961,0.0,1.0\n1962,2.0,1.0\n";
        // header has only one member column, so it fails the R >= 2 check
        assert!(matches!(
            HindcastDataset::from_csv_str(text),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn from_parts_allows_tiny_shapes_but_checks_consistency() {
        let d = HindcastDataset::from_parts(vec![1], vec![0.0], vec![vec![1.0]]).unwrap();
        assert_eq!(d.n_years(), 1);
        assert!(HindcastDataset::from_parts(vec![1], vec![0.0, 1.0], vec![vec![1.0]]).is_err());
        assert!(HindcastDataset::from_parts(
            vec![1, 2],
            vec![0.0, 1.0],
            vec![vec![1.0], vec![1.0, 2.0]]
        )
        .is_err());
    }

    #[test]
    fn rejects_duplicate_or_decreasing_years() {
        let text = "year,obs,m1,m2\n1960,1.0,2.0,3.0\n1960,0.0,1.0,2.0\n1962,2.0,1.0,0.0\n";
        let e = HindcastDataset::from_csv_str(text).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(HindcastDataset::from_parts(
            vec![2, 1, 3],
            vec![0.0; 3],
            vec![vec![1.0]; 3]
        )
        .is_err());
    }

    #[test]
    fn content_hash_changes_with_data() {
        let d = HindcastDataset::from_csv_str(small_csv()).unwrap();
        let mut d2 = d.clone();
        d2.obs[0] += 1e-9;
        assert_ne!(d.content_hash(), d2.content_hash());
    }
}
