//! CSV file helpers shared by the writers.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) type CsvWriter = csv::Writer<BufWriter<File>>;

pub(crate) fn csv_writer(path: &Path) -> Result<CsvWriter> {
    let f = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub(crate) fn finish_csv(mut w: CsvWriter, path: &Path) -> Result<()> {
    use std::io::Write;
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let inner = w.into_inner().map_err(|e| Error::Io { path: path.to_path_buf(), source: e.into_error() })?;
    inner.into_inner().map_err(|e| Error::Io { path: path.to_path_buf(), source: e.into_error() })?.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
