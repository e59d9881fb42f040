//! CSV emission with a fixed schema and atomic writes.

use std::io::{self, Write};
use std::path::Path;

use catbeam_core::observables::ObservableSample;

pub const HEADER: &str = "time,event_index,fidelity,purity,n_a,n_b,parity,trace_error";

/// Artifact version echoed into every output file.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Number of significant digits of every floating-point field.
pub const DIGITS: usize = 12;

/// `%.12g`-style formatting: fixed notation for decimal exponents in
/// `[-5, 12)`, scientific otherwise, trailing zeros kept.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        // collapse -0 so that signed zeros do not leak into the files
        return format!("{:.*}", DIGITS - 1, 0.0);
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..DIGITS as i32).contains(&exp) {
        format!("{:.*}", (DIGITS as i32 - 1 - exp) as usize, x)
    } else {
        sci
    }
}

pub fn sample_row(s: &ObservableSample) -> String {
    let f = format_number;
    format!(
        "{},{},{},{},{},{},{},{}",
        f(s.time),
        s.event_index,
        f(s.fidelity),
        f(s.purity),
        f(s.n_a),
        f(s.n_b),
        f(s.parity),
        f(s.trace_error)
    )
}

/// Comment block, header and one row per sample, LF line endings.
pub fn render_trajectory(comments: &[String], samples: &[ObservableSample]) -> String {
    let mut out = render_comments(comments);
    out.push_str(HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&sample_row(s));
        out.push('\n');
    }
    out
}

pub fn render_comments(comments: &[String]) -> String {
    let mut out = format!("# version = {VERSION}\n");
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(0.265802), "0.265802000000");
        assert_eq!(format_number(1.0), "1.00000000000");
        assert_eq!(format_number(1500.0), "1500.00000000");
        assert_eq!(format_number(-2.5e-7), "-2.50000000000e-7");
        assert_eq!(format_number(-0.0), "0.00000000000");
        assert_eq!(format_number(1e12), "1.00000000000e12");
    }
}
