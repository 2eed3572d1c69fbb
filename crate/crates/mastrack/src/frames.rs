//! Image-per-frame directories.

use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use mastrack_core::GrayImage;

use crate::error::{Error, Result};

const EXTENSIONS: [&str; 3] = ["pgm", "png", "pnm"];

/// Frame files of `dir` in lexicographic order of file name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = p
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if p.is_file() && ext.is_some_and(|e| EXTENSIONS.contains(&e.as_str())) {
            files.push(p);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if files.is_empty() {
        return Err(Error::Invalid(format!(
            "{}: no .pgm or .png frames",
            dir.display()
        )));
    }
    Ok(files)
}

/// Loads any supported image as 8-bit gray.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(GrayImage::from_raw(w as usize, h as usize, img.into_raw())
        .expect("buffer matches dimensions"))
}

/// Binary (P5) PGM.
pub fn save_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    PnmEncoder::new(std::io::BufWriter::new(f))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            img.as_raw(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// `frame_0001.pgm` style names, zero-padded to keep lexicographic order.
pub fn frame_name(frame: u32, ext: &str) -> String {
    format!("frame_{frame:05}.{ext}")
}
