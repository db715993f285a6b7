//! PNG images and the raw subband sidecar format.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma, Rgb};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::wavelet::SubbandPyramid;

/// Sample depth used when writing PNGs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

fn image_error(path: &Path, message: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Reads an 8- or 16-bit grayscale or RGB PNG as a `(1, c, h, w)` tensor in [0, 1].
pub fn load_png(path: &Path) -> Result<Tensor> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let planar = |c: usize, samples: Vec<f64>| {
        Tensor::from_fn([1, c, h, w], |_, ci, y, x| samples[(y * w + x) * c + ci])
    };
    Ok(match img {
        DynamicImage::ImageLuma8(b) => planar(
            1,
            b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageRgb8(b) => planar(
            3,
            b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageLuma16(b) => planar(
            1,
            b.into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        DynamicImage::ImageRgb16(b) => planar(
            3,
            b.into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        other => {
            return Err(image_error(
                path,
                format!(
                    "unsupported color type {:?}; expected grayscale or RGB without alpha",
                    other.color()
                ),
            ))
        }
    })
}

/// Writes a `(1, c, h, w)` tensor (`c` 1 or 3) as PNG, clamping to [0, 1] and rounding.
pub fn save_png(image: &Tensor, path: &Path, depth: BitDepth) -> Result<()> {
    let [b, c, h, w] = image.shape();
    if b != 1 || (c != 1 && c != 3) {
        return Err(Error::shape(format!(
            "save_png expects (1, 1|3, h, w), got {:?}",
            image.shape()
        )));
    }
    let interleaved = |max: f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(c * h * w);
        for y in 0..h {
            for x in 0..w {
                for ci in 0..c {
                    v.push((image.at(0, ci, y, x).clamp(0.0, 1.0) * max).round());
                }
            }
        }
        v
    };
    let (wu, hu) = (w as u32, h as u32);
    let result = match (depth, c) {
        (BitDepth::Eight, 1) => ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(
            wu,
            hu,
            interleaved(255.0).into_iter().map(|v| v as u8).collect(),
        )
        .expect("buffer size matches")
        .save_with_format(path, ImageFormat::Png),
        (BitDepth::Eight, _) => ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(
            wu,
            hu,
            interleaved(255.0).into_iter().map(|v| v as u8).collect(),
        )
        .expect("buffer size matches")
        .save_with_format(path, ImageFormat::Png),
        (BitDepth::Sixteen, 1) => ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(
            wu,
            hu,
            interleaved(65535.0).into_iter().map(|v| v as u16).collect(),
        )
        .expect("buffer size matches")
        .save_with_format(path, ImageFormat::Png),
        (BitDepth::Sixteen, _) => ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(
            wu,
            hu,
            interleaved(65535.0).into_iter().map(|v| v as u16).collect(),
        )
        .expect("buffer size matches")
        .save_with_format(path, ImageFormat::Png),
    };
    result.map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => image_error(path, other),
    })
}

/// PNG files directly inside `dir`, sorted by name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub const SIDECAR_MAGIC: &[u8; 8] = b"SWTBANDS";

/// Writes raw subbands: magic, then `u64` little-endian batch, levels, height, width and
/// filter-name length, the filter name, and every subband as little-endian `f64` in
/// pyramid order.
pub fn write_sidecar(pyramid: &SubbandPyramid, path: &Path) -> Result<()> {
    let [b, _, h, w] = pyramid.shape()?;
    let mut bytes = Vec::new();
    bytes.extend_from_slice(SIDECAR_MAGIC);
    for v in [b, pyramid.levels, h, w, pyramid.filter_name.len()] {
        bytes.extend_from_slice(&(v as u64).to_le_bytes());
    }
    bytes.extend_from_slice(pyramid.filter_name.as_bytes());
    for band in &pyramid.subbands {
        for v in band.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<SubbandPyramid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 48 || &bytes[..8] != SIDECAR_MAGIC {
        return Err(bad("not a subband sidecar (bad magic)"));
    }
    let field = |i: usize| {
        u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes")) as usize
    };
    let (b, levels, h, w, name_len) = (field(0), field(1), field(2), field(3), field(4));
    let name_end = 48usize
        .checked_add(name_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("truncated header"))?;
    let filter_name = String::from_utf8(bytes[48..name_end].to_vec())
        .map_err(|_| bad("filter name is not UTF-8"))?;
    let per_band = b
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| bad("shape overflows"))?;
    let count = 3 * levels + 1;
    if levels == 0 || bytes.len() - name_end != count * per_band * 8 {
        return Err(bad("payload size does not match the header"));
    }
    let values: Vec<f64> = bytes[name_end..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let subbands = values
        .chunks(per_band)
        .map(|chunk| Tensor::from_vec([b, 1, h, w], chunk.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubbandPyramid {
        levels,
        filter_name,
        subbands,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::wavelet::{make_filter, swt_forward};

    fn quantized(shape: [usize; 4], max: f64, seed: u64) -> Tensor {
        Tensor::random_uniform(shape, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
            .map(|v| (v * max).round() / max)
    }

    #[test]
    fn eight_bit_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for c in [1, 3] {
            let path = dir.path().join(format!("img{c}.png"));
            let x = quantized([1, c, 5, 7], 255.0, c as u64);
            save_png(&x, &path, BitDepth::Eight).unwrap();
            assert_eq!(load_png(&path).unwrap(), x);
        }
    }

    #[test]
    fn sixteen_bit_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g16.png");
        ImageBuffer::<Luma<u16>, _>::from_raw(2, 1, vec![0x8000u16, 65535])
            .unwrap()
            .save(&path)
            .unwrap();
        let t = load_png(&path).unwrap();
        assert_eq!(t.shape(), [1, 1, 1, 2]);
        assert_eq!(t.data(), &[32768.0 / 65535.0, 1.0]);
        let x = quantized([1, 3, 4, 3], 65535.0, 9);
        save_png(&x, &path, BitDepth::Sixteen).unwrap();
        assert_eq!(load_png(&path).unwrap(), x);
    }

    #[test]
    fn load_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        let err = load_png(&missing).unwrap_err();
        assert!(err.is_io() && err.to_string().contains("nope.png"));
        let junk = dir.path().join("junk.png");
        fs::write(&junk, b"not a png").unwrap();
        assert!(load_png(&junk).unwrap_err().is_io());
        let rgba = dir.path().join("rgba.png");
        ImageBuffer::<image::Rgba<u8>, _>::from_raw(1, 1, vec![1, 2, 3, 4])
            .unwrap()
            .save(&rgba)
            .unwrap();
        assert!(load_png(&rgba)
            .unwrap_err()
            .to_string()
            .contains("unsupported"));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bands.swt");
        let x = Tensor::random_uniform([3, 1, 8, 6], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        let p = swt_forward(&x, &make_filter("sym4").unwrap(), 2).unwrap();
        write_sidecar(&p, &path).unwrap();
        assert_eq!(read_sidecar(&path).unwrap(), p);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_sidecar(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn lists_only_pngs_sorted() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.png", "a.PNG", "c.txt"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let names: Vec<_> = list_pngs(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_owned())
            .collect();
        assert_eq!(names, ["a.PNG", "b.png"]);
    }
}
