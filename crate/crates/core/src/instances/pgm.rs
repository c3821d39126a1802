//! Binary 8-bit PGM (P5) input for grid unaries and contrast-sensitive weights.

use std::fs;
use std::path::Path;

use crate::error::{Result, SfmError};

use super::GridInstance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
}

/// Parses a P5 image with maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(SfmError::Pgm("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(SfmError::Pgm(format!("expected magic P5, found `{}`", fields[0])));
    }
    let num = |s: &str, what: &str| -> Result<usize> { s.parse().map_err(|_| SfmError::Pgm(format!("bad {what} `{s}`"))) };
    let (width, height, maxval) = (num(&fields[1], "width")?, num(&fields[2], "height")?, num(&fields[3], "maxval")?);
    if width == 0 || height == 0 {
        return Err(SfmError::Pgm(format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(SfmError::Pgm(format!("only maxval 255 is supported, found {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(SfmError::Pgm("truncated header".into()));
    }
    pos += 1;
    let need = width * height;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(SfmError::Pgm(format!("truncated payload: {} of {need} bytes", raster.len())));
    }
    Ok(PgmImage {
        width,
        height,
        pixels: raster[..need].to_vec(),
    })
}

pub fn write_pgm(path: impl AsRef<Path>, image: &PgmImage) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    fs::write(path, out)?;
    Ok(())
}

/// `unary_i = p_i/255 − bias`; weights `coupling · exp(−β Δ²)` with `Δ` the
/// intensity difference on the unit scale.
pub fn grid_from_pixels(image: &PgmImage, bias: f64, beta: f64, coupling: f64) -> Result<GridInstance> {
    let (h, w) = (image.height, image.width);
    let v: Vec<f64> = image.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let weight = |i: usize, j: usize| {
        let d = v[i] - v[j];
        coupling * (-beta * d * d).exp()
    };
    let w_h = (0..h).flat_map(|r| (0..w - 1).map(move |c| (r * w + c, r * w + c + 1))).map(|(i, j)| weight(i, j)).collect();
    let w_v = (0..h - 1).flat_map(|r| (0..w).map(move |c| (r * w + c, (r + 1) * w + c))).map(|(i, j)| weight(i, j)).collect();
    GridInstance::new(h, w, v.iter().map(|x| x - bias).collect(), w_h, w_v)
}

pub fn ingest_pgm(path: impl AsRef<Path>, bias: f64, beta: f64, coupling: f64) -> Result<GridInstance> {
    grid_from_pixels(&parse_pgm(&fs::read(path)?)?, bias, beta, coupling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::decompose_grid;
    use crate::oracle::{brute_force_sfm, BRUTE_FORCE_CAP};

    fn bytes(header: &str, raster: &[u8]) -> Vec<u8> {
        let mut b = header.as_bytes().to_vec();
        b.extend_from_slice(raster);
        b
    }

    #[test]
    fn parses_header_with_comments() {
        let img = parse_pgm(&bytes("P5\n# made by hand\n3 2\n255\n", &[0, 10, 20, 30, 40, 255])).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.pixels[5], 255);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01\x02").is_err());
        assert!(parse_pgm(b"P5\n2 2\n").is_err());
        assert!(parse_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(parse_pgm(b"P5\nx 1\n255\n\x00").is_err());
    }

    #[test]
    fn constant_bright_image_selects_everything() {
        let img = PgmImage {
            width: 3,
            height: 3,
            pixels: vec![200; 9],
        };
        let g = grid_from_pixels(&img, 0.9, 10.0, 1.0).unwrap();
        assert!(g.unary.iter().all(|&u| u < 0.0));
        let sol = brute_force_sfm(decompose_grid(&g).unwrap().total(), BRUTE_FORCE_CAP).unwrap();
        assert!(sol.minimal.is_full());
    }

    #[test]
    fn single_pixel() {
        for (p, bias, inside) in [(10u8, 0.5, true), (250, 0.5, false)] {
            let img = PgmImage {
                width: 1,
                height: 1,
                pixels: vec![p],
            };
            let g = grid_from_pixels(&img, bias, 1.0, 1.0).unwrap();
            let sol = brute_force_sfm(decompose_grid(&g).unwrap().total(), BRUTE_FORCE_CAP).unwrap();
            assert_eq!(g.unary[0] < 0.0, inside);
            assert_eq!(sol.minimal.contains(0), inside);
        }
    }

    #[test]
    fn file_round_trip_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let target: Vec<f64> = (0..12).map(|k| (k as f64 * 0.37).sin() * 0.5).collect();
        let img = PgmImage {
            width: 4,
            height: 3,
            pixels: target.iter().map(|u| ((u + 0.5) * 255.0).round() as u8).collect(),
        };
        write_pgm(&path, &img).unwrap();
        let g = ingest_pgm(&path, 0.5, 1.0, 1.0).unwrap();
        for (u, t) in g.unary.iter().zip(&target) {
            assert!((u - t).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}
