//! Artifact writers: CSV with `#`-prefixed metadata lines, LF endings, and
//! JSON reports. Emitted headers are the single source of truth for the
//! schemas shown in `--help`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

pub const SCHEMA_BLOCKS: &str = "k,beta,p,q,t,p_mode,q_mode,t_mode";
pub const SCHEMA_WITNESS: &str =
    "n,index_log2,avg_lo,avg_hi,tn_over_qn_log2_hi,lower_bound_lo";
pub const SCHEMA_BACKWARD: &str = "k,index_log2,a_lo,a_hi,cs_bound_hi,certificate_ok";
pub const SCHEMA_CESARO: &str = "boundary,s";
pub const SCHEMA_HOPF: &str = "n,mean,eps,exceed_fraction";
pub const SCHEMA_CONSTRUCT_POTENTIAL: &str = "n,value";
pub const SCHEMA_DOS_MOMENTS: &str = "degree,dk,dktilde";
pub const SCHEMA_DOS_HISTOGRAM: &str = "bin_lo,bin_hi,mass";
pub const SCHEMA_DOS_GAP: &str = "n,degree,dk,dktilde,gap,n_gap";
pub const SCHEMA_DOS_COUNTEREXAMPLE: &str = "l,mu,s";
pub const SCHEMA_DOS_SCAN: &str = "n,value";
pub const SCHEMA_LYAPUNOV_SCAN: &str =
    "E,Lbar_plus,Lunder_plus,Lbar_minus,Lunder_minus,s_max";
pub const SCHEMA_LYAPUNOV_SERIES: &str = "s,n,forward,backward";
pub const SCHEMA_AC_SCAN: &str = "E,min_upper_estimate,candidate";
pub const SCHEMA_SPECTRUM: &str = "source,j,eigenvalue";
pub const SCHEMA_SPATIAL_MOMENTS: &str = "degree,moment,stderr";

/// A CSV artifact: metadata lines first, then the header, then rows.
pub struct CsvFile {
    path: PathBuf,
    buf: String,
}

impl CsvFile {
    pub fn create(dir: &Path, name: &str, metadata: &[(String, String)], header: &str) -> Self {
        let mut buf = String::new();
        for (k, v) in metadata {
            buf.push_str(&format!("# {k}: {v}\n"));
        }
        buf.push_str(header);
        buf.push('\n');
        Self {
            path: dir.join(name),
            buf,
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> Result<PathBuf> {
        let mut f = fs::File::create(&self.path)?;
        f.write_all(self.buf.as_bytes())?;
        Ok(self.path)
    }
}

/// Write a JSON report with the config embedded under `"config"`.
pub fn write_json(
    dir: &Path,
    name: &str,
    config_json: &serde_json::Value,
    body: serde_json::Value,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let wrapped = serde_json::json!({
        "config": config_json,
        "report": body,
    });
    let mut f = fs::File::create(&path)?;
    f.write_all(serde_json::to_string_pretty(&wrapped).unwrap().as_bytes())?;
    f.write_all(b"\n")?;
    Ok(path)
}

/// Format an f64 deterministically for CSV bodies.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.17e}")
    }
}
