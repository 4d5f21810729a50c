//! SFDS on-disk dataset format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "SFDS" | u32 version=1 | u32 record count | u32 height | u32 width
//! per record:
//!   f32 rgb[3*h*w] | f32 depth[h*w] | u8 semantic[h*w]
//!   | f32 steering | u8 weather tag | u32 episode_id | u32 frame_index
//! ```
//!
//! A JSON manifest is written next to the data file as
//! `<file>.manifest.json`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::dataset::{DatasetManifest, Sample};
use super::render::{WeatherTag, IMG};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const SFDS_MAGIC: &[u8; 4] = b"SFDS";
pub const SFDS_VERSION: u32 = 1;

fn weather_to_byte(tag: WeatherTag) -> u8 {
    match tag {
        WeatherTag::TrainClear => 0,
        WeatherTag::ShiftedRain => 1,
    }
}

fn weather_from_byte(b: u8) -> Result<WeatherTag> {
    match b {
        0 => Ok(WeatherTag::TrainClear),
        1 => Ok(WeatherTag::ShiftedRain),
        other => Err(Error::Format {
            what: "SFDS record",
            detail: format!("unknown weather tag {}", other),
        }),
    }
}

pub fn manifest_path(data_path: &Path) -> PathBuf {
    let mut name = data_path.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_f32s(w: &mut impl Write, values: &[f32], path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn write_dataset(path: &Path, samples: &[Sample], manifest: &DatasetManifest) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(SFDS_MAGIC).map_err(|e| Error::io(path, e))?;
    w.write_all(&SFDS_VERSION.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    w.write_all(&(samples.len() as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.write_all(&(IMG as u32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
    w.write_all(&(IMG as u32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
    for s in samples {
        write_f32s(&mut w, s.rgb.data(), path)?;
        write_f32s(&mut w, s.depth.data(), path)?;
        w.write_all(&s.semantic).map_err(|e| Error::io(path, e))?;
        w.write_all(&s.steering.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(&[weather_to_byte(s.weather)]).map_err(|e| Error::io(path, e))?;
        w.write_all(&s.episode_id.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(&s.frame_index.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let manifest_file = manifest_path(path);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format {
        what: "dataset manifest",
        detail: e.to_string(),
    })?;
    std::fs::write(&manifest_file, json).map_err(|e| Error::io(&manifest_file, e))?;
    Ok(())
}

fn read_exact_buf(r: &mut impl Read, len: usize, path: &Path) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let buf = read_exact_buf(r, 4, path)?;
    Ok(u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]))
}

fn read_f32s(r: &mut impl Read, n: usize, path: &Path) -> Result<Vec<f32>> {
    let buf = read_exact_buf(r, n * 4, path)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_dataset(path: &Path) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let magic = read_exact_buf(&mut r, 4, path)?;
    if magic != SFDS_MAGIC {
        return Err(Error::Format {
            what: "SFDS header",
            detail: format!("bad magic {:?}", magic),
        });
    }
    let version = read_u32(&mut r, path)?;
    if version != SFDS_VERSION {
        return Err(Error::Format {
            what: "SFDS header",
            detail: format!("unsupported version {}", version),
        });
    }
    let count = read_u32(&mut r, path)? as usize;
    let h = read_u32(&mut r, path)? as usize;
    let w = read_u32(&mut r, path)? as usize;
    if h != IMG || w != IMG {
        return Err(Error::Format {
            what: "SFDS header",
            detail: format!("expected {}x{} images, got {}x{}", IMG, IMG, h, w),
        });
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let rgb = read_f32s(&mut r, 3 * h * w, path)?;
        let depth = read_f32s(&mut r, h * w, path)?;
        let semantic = read_exact_buf(&mut r, h * w, path)?;
        let steering_buf = read_exact_buf(&mut r, 4, path)?;
        let steering = f32::from_le_bytes([
            steering_buf[0],
            steering_buf[1],
            steering_buf[2],
            steering_buf[3],
        ]);
        let weather = weather_from_byte(read_exact_buf(&mut r, 1, path)?[0])?;
        let episode_id = read_u32(&mut r, path)?;
        let frame_index = read_u32(&mut r, path)?;
        samples.push(Sample {
            rgb: Tensor::new(vec![3, h, w], rgb),
            depth: Tensor::new(vec![1, h, w], depth),
            semantic,
            steering,
            weather,
            episode_id,
            frame_index,
        });
    }
    Ok(samples)
}

pub fn read_manifest(data_path: &Path) -> Result<DatasetManifest> {
    let path = manifest_path(data_path);
    let json = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::Format {
        what: "dataset manifest",
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthworld::dataset::generate_dataset;
    use crate::synthworld::render::Weather;

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.sfds");
        let (samples, manifest) = generate_dataset(8, 12, &Weather::shifted_rain());
        write_dataset(&path, &samples, &manifest).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(back.iter()) {
            assert_eq!(a.rgb.data(), b.rgb.data());
            assert_eq!(a.depth.data(), b.depth.data());
            assert_eq!(a.semantic, b.semantic);
            assert_eq!(a.steering, b.steering);
            assert_eq!(a.weather, b.weather);
            assert_eq!(a.episode_id, b.episode_id);
            assert_eq!(a.frame_index, b.frame_index);
        }
        assert_eq!(read_manifest(&path).unwrap(), manifest);
    }

    #[test]
    fn same_seed_writes_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.sfds");
        let p2 = dir.path().join("b.sfds");
        let (s1, m1) = generate_dataset(4, 10, &Weather::train_clear());
        let (s2, m2) = generate_dataset(4, 10, &Weather::train_clear());
        write_dataset(&p1, &s1, &m1).unwrap();
        write_dataset(&p2, &s2, &m2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.sfds");
        std::fs::write(&path, b"NOPExxxxxxxxxxxxxxxx").unwrap();
        match read_dataset(&path) {
            Err(Error::Format { .. }) => {}
            other => panic!("expected format error, got {:?}", other.map(|v| v.len())),
        }
    }
}
