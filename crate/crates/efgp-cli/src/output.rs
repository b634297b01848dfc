//! Output helpers: atomic file writes and the CSV table schemas.

use efgp::error::{EfgpError, Result};
use efgp::experiments::BenchOutcome;
use std::io::Write;
use std::path::Path;

/// Writes via a temp file in the target directory plus rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let nonce = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let tmp = dir.join(format!(".efgp-out-{}-{nonce}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_bench_csv(path: &Path, outcomes: &[BenchOutcome]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "label", "n", "d", "kernel", "eps", "m", "h", "pre_s", "solve_s", "mean_s", "tot_s",
            "iters", "eepm", "eepm_new", "rmse", "rmse_ex", "peak_mem_mb", "status",
        ])
        .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        for o in outcomes {
            match &o.result {
                Ok(r) => {
                    w.write_record([
                        o.label.clone(),
                        r.n.to_string(),
                        r.d.to_string(),
                        r.kernel.clone(),
                        format!("{:e}", r.eps),
                        r.m.to_string(),
                        format!("{}", r.h),
                        format!("{:.6}", r.metrics.timings.pre),
                        format!("{:.6}", r.metrics.timings.solve),
                        format!("{:.6}", r.metrics.timings.mean),
                        format!("{:.6}", r.metrics.timings.total),
                        r.metrics.iterations.to_string(),
                        format!("{:.6e}", r.metrics.eepm),
                        format!("{:.6e}", r.metrics.eepm_new),
                        format!("{:.6e}", r.metrics.rmse),
                        format!("{:.6e}", r.metrics.rmse_ex),
                        format!("{:.1}", r.metrics.peak_memory_bytes as f64 / 1048576.0),
                        "ok".into(),
                    ])
                    .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
                }
                Err(msg) => {
                    let mut record = vec![o.label.clone()];
                    record.extend(std::iter::repeat_n(String::new(), 16));
                    record.push(format!("error: {msg}"));
                    w.write_record(&record)
                        .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
                }
            }
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

pub fn write_kernel_error_csv(
    path: &Path,
    rows: &[(usize, f64, f64, f64, f64, f64, f64)],
) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "m",
            "h",
            "sup_err",
            "rms_err",
            "aliasing_bound",
            "truncation_bound",
            "heuristic_eps",
        ])
        .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        for &(m, h, sup, rms, alias, trunc, heur) in rows {
            w.write_record([
                m.to_string(),
                format!("{h}"),
                format!("{sup:.6e}"),
                format!("{rms:.6e}"),
                format!("{alias:.6e}"),
                format!("{trunc:.6e}"),
                format!("{heur:.6e}"),
            ])
            .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

pub fn write_conditioning_csv(
    path: &Path,
    rows: &[(usize, f64, Option<f64>, f64, f64, f64)],
) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["n", "sigma", "kappa_fs", "kappa_ws", "bound", "ratio"])
            .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        for &(n, sigma, fs, ws, bound, ratio) in rows {
            w.write_record([
                n.to_string(),
                format!("{sigma}"),
                fs.map(|v| format!("{v:.6e}")).unwrap_or_default(),
                format!("{ws:.6e}"),
                format!("{bound:.6e}"),
                format!("{ratio:.4}"),
            ])
            .map_err(|e| EfgpError::InvalidInput(e.to_string()))?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}
