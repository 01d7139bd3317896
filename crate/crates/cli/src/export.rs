//! Re-emission of run artifacts in other delimiter formats.

use std::fs;
use std::path::{Path, PathBuf};

/// Known exportable series and their source artifacts.
pub fn source_file(quantity: &str) -> Option<&'static str> {
    match quantity {
        "h" => Some("h_series.tsv"),
        "h-spectrum" => Some("h_spectrum.tsv"),
        "theta-jump" => Some("interface_trace.tsv"),
        "g-residuals" => Some("g_residuals.tsv"),
        "convergence" => Some("convergence.tsv"),
        "norms" => Some("norms.tsv"),
        "energy" => Some("energy.tsv"),
        _ => None,
    }
}

/// Parse a tab-separated artifact into (header, rows).
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| "empty artifact".to_string())?
        .split('\t')
        .map(|s| s.to_string())
        .collect();
    let rows = lines
        .map(|l| l.split('\t').map(|s| s.to_string()).collect())
        .collect();
    Ok((header, rows))
}

/// Export `quantity` from a run directory in the requested format
/// ("tsv" or "csv"); returns the written path.
pub fn export_series(run_dir: &Path, quantity: &str, format: &str) -> Result<PathBuf, String> {
    let src = source_file(quantity)
        .ok_or_else(|| format!("unknown quantity {quantity:?} (h|h-spectrum|theta-jump|g-residuals|convergence|norms|energy)"))?;
    let sep = match format {
        "tsv" => '\t',
        "csv" => ',',
        other => return Err(format!("unknown format {other:?} (tsv|csv)")),
    };
    let (header, rows) = read_table(&run_dir.join(src))?;
    let mut out = String::new();
    out.push_str(&header.join(&sep.to_string()));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(&sep.to_string()));
        out.push('\n');
    }
    let dir = run_dir.join("export");
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = dir.join(format!("{quantity}.{format}"));
    fs::write(&path, out).map_err(|e| e.to_string())?;
    Ok(path)
}
