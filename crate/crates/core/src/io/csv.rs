use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A CSV layout. Files start with `# l2lab schema=<name> version=<v>`
/// followed by the column header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl Schema {
    pub const SOLUTION: Schema =
        Schema { name: "solution", version: 1, columns: &["q", "price_index", "price", "value", "action"] };
    pub const THRESHOLDS: Schema = Schema { name: "thresholds", version: 1, columns: &["price_index", "price", "q_star"] };
    pub const PNL_CURVE: Schema =
        Schema { name: "pnl_curve", version: 1, columns: &["fee", "revenue", "cost", "pnl", "std_err"] };
    pub const TRAJECTORY: Schema = Schema {
        name: "trajectory",
        version: 1,
        columns: &[
            "update_index", "block_index", "delta", "g", "f_last", "p_last", "x_obs", "y_obs", "tau", "i", "j",
            "i_frac", "j_frac",
        ],
    };
    pub const SUMMARY: Schema = Schema {
        name: "summary",
        version: 1,
        columns: &[
            "replica", "final_f", "final_p", "i_frac", "j_frac", "mean_queue", "total_compensation", "blocks",
            "forced_closes",
        ],
    };
    pub const SWITCH_MATRIX: Schema = Schema {
        name: "switch_matrix",
        version: 1,
        columns: &["kappa", "fee_f", "fee_p", "p00", "p01", "p10", "p11", "pi_f", "pi_p", "n_batches"],
    };
    pub const KAPPA_SWEEP: Schema =
        Schema { name: "kappa_sweep", version: 1, columns: &["kappa", "p01", "p10", "pi_f", "pi_p", "minority"] };
    pub const ACCEPTANCE: Schema =
        Schema { name: "acceptance", version: 1, columns: &["criterion", "passed", "measured", "target"] };

    fn banner(&self) -> String {
        format!("# l2lab schema={} version={}", self.name, self.version)
    }
}

/// Shortest decimal that parses back to the same `f64`; scientific
/// notation outside [1e-4, 1e16).
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn write_csv<P, I, R>(path: P, schema: &Schema, rows: I) -> Result<()>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let mut out = String::new();
    out.push_str(&schema.banner());
    out.push('\n');
    out.push_str(&schema.columns.join(","));
    out.push('\n');
    for row in rows {
        let row = row.as_ref();
        if row.len() != schema.columns.len() {
            return Err(Error::Csv {
                path: path.as_ref().display().to_string(),
                msg: format!("row has {} fields, schema {} has {}", row.len(), schema.name, schema.columns.len()),
            });
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parsed rows of a CSV with a known schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, schema: &Schema, name: &str) -> Option<Vec<f64>> {
        let idx = schema.columns.iter().position(|c| *c == name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }
}

/// Reads a file written by [`write_csv`], rejecting any other schema name,
/// version or column layout.
pub fn read_csv<P: AsRef<Path>>(path: P, schema: &Schema) -> Result<Table> {
    let p = path.as_ref().display().to_string();
    let fail = |msg: String| Error::Csv { path: p.clone(), msg };
    let text = fs::read_to_string(&path)?;
    let mut lines = text.lines();
    let banner = lines.next().ok_or_else(|| fail("empty file".into()))?;
    if banner != schema.banner() {
        return Err(fail(format!("expected '{}', found '{banner}'", schema.banner())));
    }
    let header = lines.next().ok_or_else(|| fail("missing column header".into()))?;
    if header != schema.columns.join(",") {
        return Err(fail(format!("unexpected columns '{header}'")));
    }
    let rows = lines
        .map(|l| {
            let r: Vec<String> = l.split(',').map(str::to_string).collect();
            if r.len() == schema.columns.len() {
                Ok(r)
            } else {
                Err(fail(format!("row '{l}' has {} fields", r.len())))
            }
        })
        .collect::<Result<_>>()?;
    Ok(Table { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, -2.5, 3.5928e-5, 3.86e-8, 0.1 + 0.2, 1e300, f64::MIN_POSITIVE, 123456.789] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x, "{}", fmt_num(x));
        }
        assert_eq!(fmt_num(3.5928e-5), "3.5928e-5");
        assert_eq!(fmt_num(0.25), "0.25");
    }

    #[test]
    fn version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![vec!["1".to_string(), "2e-8".to_string(), "3".to_string()]];
        write_csv(&path, &Schema::THRESHOLDS, &rows).unwrap();
        let t = read_csv(&path, &Schema::THRESHOLDS).unwrap();
        assert_eq!(t.rows, rows);
        assert_eq!(t.column(&Schema::THRESHOLDS, "price").unwrap(), vec![2e-8]);
        let newer = Schema { version: 2, ..Schema::THRESHOLDS };
        assert!(read_csv(&path, &newer).is_err());
        assert!(read_csv(&path, &Schema::SOLUTION).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec!["1".to_string()]];
        assert!(write_csv(dir.path().join("x.csv"), &Schema::THRESHOLDS, &rows).is_err());
    }
}
