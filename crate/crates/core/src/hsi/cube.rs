//! Minimal self-describing cube format: a JSON header next to a raw
//! little-endian band-sequential payload.
//!
//! Header keys: `width`, `height`, `bands`, `dtype` (`"f32"` or `"f64"`),
//! `interleave` (`"bsq"`), optional `wavelengths_um`. The payload stores
//! band 1's `height x width` plane row-major, then band 2, and so on.
//! In memory the cube is a `height x width x bands` tensor, so mode-3
//! fibers are pixel spectra.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementType {
    #[serde(rename = "f32")]
    Float32,
    #[serde(rename = "f64")]
    Float64,
}

impl ElementType {
    pub fn size(self) -> usize {
        match self {
            ElementType::Float32 => 4,
            ElementType::Float64 => 8,
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(ElementType::Float32),
            "f64" => Ok(ElementType::Float64),
            other => Err(Error::Format(format!("unknown dtype {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interleave {
    #[serde(rename = "bsq")]
    BandSequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeHeader {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    #[serde(rename = "dtype")]
    pub element_type: ElementType,
    pub interleave: Interleave,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "wavelengths_um")]
    pub wavelengths: Option<Vec<f64>>,
}

/// Loose shape used for parsing so that bad enum values surface as
/// format errors with the offending value.
#[derive(Deserialize)]
struct RawHeader {
    width: usize,
    height: usize,
    bands: usize,
    dtype: String,
    interleave: String,
    #[serde(default)]
    wavelengths_um: Option<Vec<f64>>,
}

impl CubeHeader {
    pub fn new(height: usize, width: usize, bands: usize, element_type: ElementType) -> Self {
        Self {
            width,
            height,
            bands,
            element_type,
            interleave: Interleave::BandSequential,
            wavelengths: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.bands == 0 {
            return Err(Error::Format(format!(
                "extents must be >= 1, got {}x{}x{}",
                self.width, self.height, self.bands
            )));
        }
        if let Some(w) = &self.wavelengths {
            if w.len() != self.bands {
                return Err(Error::Format(format!(
                    "{} wavelengths for {} bands",
                    w.len(),
                    self.bands
                )));
            }
            if w.windows(2).any(|p| !(p[1] > p[0])) {
                return Err(Error::Format("wavelengths must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    pub fn payload_bytes(&self) -> u64 {
        (self.width * self.height * self.bands * self.element_type.size()) as u64
    }

    fn tensor_dims(&self) -> [usize; 3] {
        [self.height, self.width, self.bands]
    }
}

pub fn read_header(path: &Path) -> Result<CubeHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawHeader = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if raw.interleave != "bsq" {
        return Err(Error::Format(format!(
            "unsupported interleave {:?}",
            raw.interleave
        )));
    }
    let header = CubeHeader {
        width: raw.width,
        height: raw.height,
        bands: raw.bands,
        element_type: ElementType::parse(&raw.dtype)?,
        interleave: Interleave::BandSequential,
        wavelengths: raw.wavelengths_um,
    };
    header.validate()?;
    Ok(header)
}

/// Loads a cube as a `height x width x bands` tensor; `f32` payloads are widened.
pub fn load_cube(header_path: &Path, data_path: &Path) -> Result<DenseTensor> {
    let header = read_header(header_path)?;
    let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
    if bytes.len() as u64 != header.payload_bytes() {
        return Err(Error::SizeMismatch {
            expected: header.payload_bytes(),
            actual: bytes.len() as u64,
        });
    }
    let values: Vec<f64> = match header.element_type {
        ElementType::Float32 => bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("chunk of 4"))))
            .collect(),
        ElementType::Float64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    };
    let (h, w) = (header.height, header.width);
    let mut t = DenseTensor::zeros(&header.tensor_dims());
    let data = t.data_mut();
    for b in 0..header.bands {
        for y in 0..h {
            for x in 0..w {
                data[y + h * (x + w * b)] = values[x + w * (y + h * b)];
            }
        }
    }
    Ok(t)
}

/// Writes `t` as an `f64` cube without wavelength metadata.
pub fn save_cube(t: &DenseTensor, header_path: &Path, data_path: &Path) -> Result<()> {
    let dims = third_order_dims(t)?;
    save_cube_with_header(
        t,
        &CubeHeader::new(dims[0], dims[1], dims[2], ElementType::Float64),
        header_path,
        data_path,
    )
}

/// Writes `t` with the given header; its extents must match the tensor.
pub fn save_cube_with_header(
    t: &DenseTensor,
    header: &CubeHeader,
    header_path: &Path,
    data_path: &Path,
) -> Result<()> {
    let dims = third_order_dims(t)?;
    header.validate()?;
    if header.tensor_dims() != dims {
        return Err(Error::Dimension(format!(
            "header describes {:?} (height, width, bands), tensor is {dims:?}",
            header.tensor_dims()
        )));
    }
    let (h, w) = (header.height, header.width);
    let data = t.data();
    let mut bytes = Vec::with_capacity(header.payload_bytes() as usize);
    for b in 0..header.bands {
        for y in 0..h {
            for x in 0..w {
                let v = data[y + h * (x + w * b)];
                match header.element_type {
                    ElementType::Float32 => bytes.extend_from_slice(&(v as f32).to_le_bytes()),
                    ElementType::Float64 => bytes.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
    }
    let json = serde_json::to_string_pretty(header).expect("header serializes");
    fs::write(header_path, json).map_err(|e| Error::io(header_path, e))?;
    fs::write(data_path, bytes).map_err(|e| Error::io(data_path, e))?;
    Ok(())
}

fn third_order_dims(t: &DenseTensor) -> Result<[usize; 3]> {
    match *t.dims() {
        [h, w, b] => Ok([h, w, b]),
        _ => Err(Error::UnsupportedOrder {
            order: t.order(),
            context: "cubes are third-order",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(dir: &tempfile::TempDir) -> (std::path::PathBuf, std::path::PathBuf) {
        (dir.path().join("cube.json"), dir.path().join("cube.bin"))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        let t = DenseTensor::from_fn(&[2, 2, 3], |ix| {
            (ix[0] as f64 + 0.1) * (ix[1] as f64 - 1.7) / (ix[2] as f64 + 3.3)
        });
        save_cube(&t, &hp, &dp).unwrap();
        let back = load_cube(&hp, &dp).unwrap();
        assert_eq!(back.dims(), t.dims());
        assert!(back
            .data()
            .iter()
            .zip(t.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn payload_is_band_sequential_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        // height 2, width 3, bands 2; value encodes (y, x, b)
        let t = DenseTensor::from_fn(&[2, 3, 2], |ix| (100 * ix[2] + 10 * ix[0] + ix[1]) as f64);
        save_cube(&t, &hp, &dp).unwrap();
        let bytes = std::fs::read(&dp).unwrap();
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(
            vals,
            [0., 1., 2., 10., 11., 12., 100., 101., 102., 110., 111., 112.]
        );
    }

    #[test]
    fn f32_widening_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        let t = DenseTensor::from_fn(&[3, 2, 2], |ix| 0.1 * (ix[0] + 3 * ix[1] + 7 * ix[2]) as f64);
        let mut header = CubeHeader::new(3, 2, 2, ElementType::Float32);
        header.wavelengths = Some(vec![0.4, 0.9]);
        save_cube_with_header(&t, &header, &hp, &dp).unwrap();
        let once = load_cube(&hp, &dp).unwrap();
        assert_eq!(read_header(&hp).unwrap(), header);
        save_cube_with_header(&once, &header, &hp, &dp).unwrap();
        let twice = load_cube(&hp, &dp).unwrap();
        assert_eq!(once, twice);
        assert!(once.relative_error(&t).unwrap() < 1e-7);
    }

    #[test]
    fn truncated_payload_is_a_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        let header = CubeHeader::new(2, 2, 3, ElementType::Float64);
        std::fs::write(&hp, serde_json::to_string(&header).unwrap()).unwrap();
        std::fs::write(&dp, vec![0u8; 2 * 2 * 2 * 8]).unwrap();
        assert!(matches!(
            load_cube(&hp, &dp),
            Err(Error::SizeMismatch { expected: 96, actual: 64 })
        ));
    }

    #[test]
    fn all_zero_payload() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        let header = CubeHeader::new(2, 2, 3, ElementType::Float32);
        std::fs::write(&hp, serde_json::to_string(&header).unwrap()).unwrap();
        std::fs::write(&dp, vec![0u8; 2 * 2 * 3 * 4]).unwrap();
        assert_eq!(load_cube(&hp, &dp).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn header_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        std::fs::write(
            &hp,
            r#"{"width":1,"height":1,"bands":1,"dtype":"i16","interleave":"bsq"}"#,
        )
        .unwrap();
        assert!(matches!(load_cube(&hp, &dp), Err(Error::Format(_))));
        std::fs::write(
            &hp,
            r#"{"width":1,"height":1,"bands":2,"dtype":"f64","interleave":"bsq","wavelengths_um":[0.5,0.4]}"#,
        )
        .unwrap();
        assert!(matches!(read_header(&hp), Err(Error::Format(_))));
        assert!(matches!(
            load_cube(&dir.path().join("missing.json"), &dp),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn non_cube_tensor_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (hp, dp) = paths(&dir);
        let t = DenseTensor::zeros(&[2, 2]);
        assert!(matches!(save_cube(&t, &hp, &dp), Err(Error::UnsupportedOrder { .. })));
    }
}
