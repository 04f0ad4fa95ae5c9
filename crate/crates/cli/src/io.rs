//! File access with transparent gzip for paths ending in `.gz`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let f = File::open(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(if is_gz(path) { Box::new(BufReader::new(MultiGzDecoder::new(f))) } else { Box::new(BufReader::new(f)) })
}

pub fn read_to_string(path: &Path) -> io::Result<String> {
    let mut s = String::new();
    open_input(path)?.read_to_string(&mut s)?;
    Ok(s)
}

pub enum Output {
    Plain(BufWriter<File>),
    Gz(GzEncoder<BufWriter<File>>),
}

impl Output {
    pub fn create(path: &Path) -> io::Result<Output> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let f = BufWriter::new(
            File::create(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
        );
        Ok(if is_gz(path) { Output::Gz(GzEncoder::new(f, Compression::default())) } else { Output::Plain(f) })
    }

    pub fn finish(self) -> io::Result<()> {
        match self {
            Output::Plain(mut w) => w.flush(),
            Output::Gz(w) => w.finish()?.flush(),
        }
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Output::Plain(w) => w.write(buf),
            Output::Gz(w) => w.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Output::Plain(w) => w.flush(),
            Output::Gz(w) => w.flush(),
        }
    }
}

/// Writes the whole file through `f`.
pub fn write_with(path: &Path, f: impl FnOnce(&mut Output) -> io::Result<()>) -> io::Result<()> {
    let mut out = Output::create(path)?;
    f(&mut out)?;
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gzip_round_trip_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.txt", "a.txt.gz"] {
            let p = dir.path().join(name);
            write_with(&p, |w| w.write_all(b"CCO\nc1ccccc1\n")).unwrap();
            assert_eq!(read_to_string(&p).unwrap(), "CCO\nc1ccccc1\n");
        }
        let raw = std::fs::read(dir.path().join("a.txt.gz")).unwrap();
        assert_eq!(&raw[..2], &[0x1f, 0x8b]);
    }
}
