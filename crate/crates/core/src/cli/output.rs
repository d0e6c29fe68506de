//! Output plumbing. CSV is UTF-8 with LF line endings and '.' decimals; the
//! first line is a `#` comment carrying the resolved configuration as JSON.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::CliError;
use crate::potentials::ModelParams;

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    })
}

#[derive(Serialize)]
pub struct Echo<'a> {
    pub config: &'a RunConfig,
    pub model: &'a ModelParams,
}

pub fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Failure(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// CSV writer whose first line echoes the configuration.
pub fn csv_writer<'a>(w: &'a mut dyn Write, echo: &Echo) -> Result<csv::Writer<&'a mut dyn Write>, CliError> {
    let line = serde_json::to_string(echo).map_err(|e| CliError::Failure(e.to_string()))?;
    writeln!(w, "# {line}")?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w))
}

pub fn finish(mut wr: csv::Writer<&mut dyn Write>) -> Result<(), CliError> {
    wr.flush()?;
    Ok(())
}

pub fn csv_err(e: csv::Error) -> CliError {
    CliError::Failure(e.to_string())
}

/// Fixed-decimal formatting with negative zero folded to zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, x);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Scientific notation with a fixed number of significant digits.
pub fn sci(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_folded() {
        assert_eq!(fixed(-0.00001, 3), "0.000");
        assert_eq!(fixed(-1.5, 1), "-1.5");
        assert_eq!(sci(2.31e-12, 3), "2.31e-12");
    }
}
